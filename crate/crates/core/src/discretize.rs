//! Exact sample-and-hold discretization of continuous Roesser models, the
//! inter-sample output deviation bound, and the sampled-supply dissipativity
//! condition checker.
//!
//! Sampling with periods (h1, h2) along the two coordinates and holding the
//! input constant over each sampling cell gives the exact discrete blocks
//!
//! ```text
//! Â11 = e^{A11 h1}        Â12 = φ(A11, h1) A12
//! Â21 = φ(A22, h2) A21    Â22 = e^{A22 h2}
//! B̂1  = φ(A11, h1) B1     B̂2  = φ(A22, h2) B2
//! ```
//!
//! where `φ(A, h) = ∫_0^h e^{As} ds`.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{ContinuousRoesser2D, DiscreteRoesser2D, QsrSupply};
use crate::scalar::{conv, Scalar};

/// Sampling periods along the horizontal and vertical coordinates.
///
/// Zero-step sampling is admitted and yields the identity/zero blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSpec<T: Scalar> {
    pub h1: T,
    pub h2: T,
}

impl<T: Scalar> SamplingSpec<T> {
    pub fn new(h1: T, h2: T) -> Result<Self> {
        if !(h1.is_finite() && h2.is_finite() && h1 >= T::zero() && h2 >= T::zero()) {
            return Err(Error::InvalidSampling);
        }
        Ok(Self { h1, h2 })
    }
}

/// Energy-gain bounds from the input to the horizontal and vertical partial
/// derivatives of the continuous output. Caller-supplied; not estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeGainBounds<T: Scalar> {
    pub alpha1: T,
    pub alpha2: T,
}

impl<T: Scalar> DerivativeGainBounds<T> {
    pub fn new(alpha1: T, alpha2: T) -> Result<Self> {
        if !(alpha1.is_finite() && alpha2.is_finite() && alpha1 >= T::zero() && alpha2 >= T::zero())
        {
            return Err(Error::NonFinite("derivative gain bounds"));
        }
        Ok(Self { alpha1, alpha2 })
    }
}

/// Strictly positive slack constants of the sampled-supply condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackConstants<T: Scalar> {
    pub xi1: T,
    pub xi2: T,
    pub xi3: T,
}

impl<T: Scalar> SlackConstants<T> {
    pub fn new(xi1: T, xi2: T, xi3: T) -> Result<Self> {
        let ok = |x: T| x.is_finite() && x > T::zero();
        if !(ok(xi1) && ok(xi2) && ok(xi3)) {
            return Err(Error::NonPositiveXi);
        }
        Ok(Self { xi1, xi2, xi3 })
    }
}

/// `φ(A, h) = ∫_0^h e^{As} ds`, computed from the top-right block of the
/// augmented exponential `exp([[A, I], [0, 0]]·h)`. Valid for singular `A`,
/// where the closed form `(e^{Ah} - I) A^{-1}` breaks down. Satisfies
/// `φ(A, h)·A = A·φ(A, h) = e^{Ah} - I`.
pub fn phi_integral<T: Scalar>(a: &DMatrix<T>, h: T) -> Result<DMatrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("phi_integral expects a square matrix"));
    }
    if !(h.is_finite() && a.iter().all(|x| x.is_finite())) {
        return Err(Error::NonFinite("phi_integral inputs"));
    }
    let n = a.nrows();
    let mut aug = DMatrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * h));
    aug.view_mut((0, n), (n, n))
        .copy_from(&DMatrix::from_diagonal_element(n, n, h));
    let e = aug.exp();
    let phi = e.view((0, n), (n, n)).into_owned();
    if !phi.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("phi_integral overflow"));
    }
    Ok(phi)
}

/// Exact zero-order-hold discretization of a continuous Roesser model.
pub fn sample_exact<T: Scalar>(
    model: &ContinuousRoesser2D<T>,
    s: &SamplingSpec<T>,
) -> Result<DiscreteRoesser2D<T>> {
    let e11 = (&model.a11 * s.h1).exp();
    let e22 = (&model.a22 * s.h2).exp();
    if !(e11.iter().all(|x| x.is_finite()) && e22.iter().all(|x| x.is_finite())) {
        return Err(Error::NonFinite("matrix exponential overflow"));
    }
    let phi1 = phi_integral(&model.a11, s.h1)?;
    let phi2 = phi_integral(&model.a22, s.h2)?;
    DiscreteRoesser2D::new(
        e11,
        &phi1 * &model.a12,
        &phi2 * &model.a21,
        e22,
        &phi1 * &model.b1,
        &phi2 * &model.b2,
        model.c1.clone(),
        model.c2.clone(),
        model.d.clone(),
        Some((s.h1, s.h2)),
    )
}

/// Upper bound on the inter-sample output deviation energy accumulated over
/// the 2-D domain: `2 (alpha1^2 h1^2 + alpha2^2 h2^2) · input_energy`.
pub fn intersample_deviation_bound<T: Scalar>(
    b: &DerivativeGainBounds<T>,
    s: &SamplingSpec<T>,
    input_energy: T,
) -> T {
    conv::<T>(2.0)
        * (b.alpha1 * b.alpha1 * s.h1 * s.h1 + b.alpha2 * b.alpha2 * s.h2 * s.h2)
        * input_energy
}

/// Which form of the sampling penalty enters the second margin. Two variants
/// of the condition circulate: one with the linear term `2(a1 h1 + a2 h2)`,
/// one with the squared term `2(a1^2 h1^2 + a2^2 h2^2)`. The squared form is
/// the one consistent with the inter-sample deviation bound and is the
/// default; the linear form is kept selectable for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingTermForm {
    #[default]
    Squared,
    Linear,
}

/// Margins of the sampled-supply dissipativity condition.
///
/// `margin1` multiplies the output energy, `margin2` the input energy; the
/// condition holds when both are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledSupplyMargins<T: Scalar> {
    pub holds: bool,
    pub margin1: T,
    pub margin2: T,
}

fn min_eig<T: Scalar>(m: &DMatrix<T>) -> T {
    let sym = (m + m.transpose()) * conv::<T>(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut lo = T::max_value().unwrap_or_else(|| conv(f64::MAX));
    for &e in eig.eigenvalues.iter() {
        if e < lo {
            lo = e;
        }
    }
    lo
}

fn max_sv_sq<T: Scalar>(m: &DMatrix<T>) -> T {
    let sv = m.clone().singular_values();
    let mut hi = T::zero();
    for &s in sv.iter() {
        if s > hi {
            hi = s;
        }
    }
    hi * hi
}

/// Check whether the sampled system inherits `(q̂, ŝ, r̂)`-dissipativity from
/// a `(q, s, r)`-dissipative continuous system for fixed slack constants,
/// using the default (squared) sampling-penalty form.
pub fn sampled_dissipativity_check<T: Scalar>(
    continuous: &QsrSupply<T>,
    sampled: &QsrSupply<T>,
    s: &SamplingSpec<T>,
    b: &DerivativeGainBounds<T>,
    params: &SlackConstants<T>,
) -> Result<SampledSupplyMargins<T>> {
    sampled_dissipativity_check_with_form(
        continuous,
        sampled,
        s,
        b,
        params,
        SamplingTermForm::default(),
    )
}

/// As [`sampled_dissipativity_check`] with an explicit sampling-penalty form.
pub fn sampled_dissipativity_check_with_form<T: Scalar>(
    continuous: &QsrSupply<T>,
    sampled: &QsrSupply<T>,
    s: &SamplingSpec<T>,
    b: &DerivativeGainBounds<T>,
    params: &SlackConstants<T>,
    form: SamplingTermForm,
) -> Result<SampledSupplyMargins<T>> {
    if continuous.output_dim() != sampled.output_dim()
        || continuous.input_dim() != sampled.input_dim()
    {
        return Err(Error::DimensionMismatch("continuous vs sampled supplies"));
    }
    SlackConstants::new(params.xi1, params.xi2, params.xi3)?;
    let two = conv::<T>(2.0);
    let sampling_term = match form {
        SamplingTermForm::Squared => {
            two * (b.alpha1 * b.alpha1 * s.h1 * s.h1 + b.alpha2 * b.alpha2 * s.h2 * s.h2)
        }
        SamplingTermForm::Linear => two * (b.alpha1 * s.h1 + b.alpha2 * s.h2),
    };
    let margin1 = min_eig(&(&sampled.q - &continuous.q))
        - params.xi1 * max_sv_sq(&sampled.q)
        - params.xi2 * max_sv_sq(&(&sampled.s - &continuous.s));
    let margin2 = min_eig(&(&sampled.r - &continuous.r))
        - sampling_term * (min_eig(&sampled.q).abs() + T::one() / params.xi1 + T::one() / params.xi3)
        - params.xi3 * max_sv_sq(&sampled.s)
        - T::one() / params.xi2;
    Ok(SampledSupplyMargins {
        holds: margin1 >= T::zero() && margin2 >= T::zero(),
        margin1,
        margin2,
    })
}

const XI_EXP_LO: i32 = -6;
const XI_EXP_HI: i32 = 6;

/// Search the fixed logarithmic grid `10^-6 .. 10^6` (13 points per axis)
/// for slack constants making the condition hold; returns the first triple
/// in lexicographic grid order, or `None` when the grid is exhausted.
pub fn search_slack_constants<T: Scalar>(
    continuous: &QsrSupply<T>,
    sampled: &QsrSupply<T>,
    s: &SamplingSpec<T>,
    b: &DerivativeGainBounds<T>,
) -> Option<SlackConstants<T>> {
    for e1 in XI_EXP_LO..=XI_EXP_HI {
        for e2 in XI_EXP_LO..=XI_EXP_HI {
            for e3 in XI_EXP_LO..=XI_EXP_HI {
                let params = SlackConstants {
                    xi1: conv::<T>(10f64.powi(e1)),
                    xi2: conv::<T>(10f64.powi(e2)),
                    xi3: conv::<T>(10f64.powi(e3)),
                };
                if let Ok(m) = sampled_dissipativity_check(continuous, sampled, s, b, &params) {
                    if m.holds {
                        return Some(params);
                    }
                }
            }
        }
    }
    None
}
