//! Dissipativity-based analysis of 2-D Roesser systems over digital networks.
//!
//! The crate covers the full pipeline from a continuous 2-D plant to a
//! networked closed loop:
//!
//! - [`model`] — continuous/discrete Roesser models, QSR supply rates,
//!   passivity-index algebra and the hyperbolic-PDE transformation;
//! - [`discretize`] — exact sample-and-hold discretization and the
//!   sampled-supply dissipativity condition;
//! - [`lmi`] — the dissipation LMI, a small dense feasibility solver,
//!   output-feedback level maximization and trajectory-level verification;
//! - [`quantize`] — the logarithmic quantizer with sector bound and dead
//!   zone;
//! - [`network`] — closed-form stability conditions for the quantized loop
//!   and event-trigger parameter design;
//! - [`sim`] — deterministic 2-D grid simulation (open loop, quantized
//!   closed loop, event-triggered closed loop) and empirical L2-gain
//!   estimation.
//!
//! All numerics are generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); the `*64` aliases below fix `f64`.

pub mod discretize;
pub mod error;
pub mod lmi;
pub mod model;
pub mod network;
pub mod quantize;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ContinuousRoesser2D64 = model::ContinuousRoesser2D<f64>;
pub type DiscreteRoesser2D64 = model::DiscreteRoesser2D<f64>;
pub type QsrSupply64 = model::QsrSupply<f64>;
pub type PassivityIndices64 = model::PassivityIndices<f64>;
pub type Pde2ndOrderSpec64 = model::Pde2ndOrderSpec<f64>;
pub type SamplingSpec64 = discretize::SamplingSpec<f64>;
pub type LogQuantizerSpec64 = quantize::LogQuantizerSpec<f64>;
pub type TriggerParams64 = network::TriggerParams<f64>;
pub type NetworkConditionReport64 = network::NetworkConditionReport<f64>;
pub type LmiCertificate64 = lmi::LmiCertificate<f64>;
pub type BoundaryConditions64 = sim::BoundaryConditions<f64>;
pub type Grid2DTrajectory64 = sim::Grid2DTrajectory<f64>;
pub type GainEstimate64 = sim::GainEstimate<f64>;
