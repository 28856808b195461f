//! Closed-form stability conditions for the quantized 2-D feedback loop and
//! the event-trigger design quantities.
//!
//! With plant levels (rho_p, nu_p), controller levels (rho_c, nu_c) and
//! quantizer sector bounds delta_p, delta_c, the loop deficiency terms are
//!
//! ```text
//! q1 = -(rho_p + nu_c) + (dp^2 + 2 dp)|nu_c| + (1 + b2/2) dp^2 + 1/(2 b1)
//! q2 = -(rho_c + nu_p) + (dc^2 + 2 dc)|nu_p| + (1 + b1/2) dc^2 + 1/(2 b2)
//! ```
//!
//! for any positive constants b1, b2; the loop is L2-stable when both are
//! negative. The reference-channel terms are `r1 = -nu_p + nu_p^2` and
//! `r2 = -nu_c + nu_c^2`.

use crate::error::{Error, Result};
use crate::scalar::{conv, Scalar};

/// Loop deficiency and reference-channel terms for one choice of (beta1, beta2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConditionReport<T: Scalar> {
    pub q1: T,
    pub q2: T,
    pub r1: T,
    pub r2: T,
    pub beta1: T,
    pub beta2: T,
    pub stable: bool,
}

/// Margins of the controller-design form of the stability condition.
/// `margin_plant_side` and `margin_controller_side` equal `-q1` and `-q2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerDesignCheck<T: Scalar> {
    pub holds: bool,
    pub margin_plant_side: T,
    pub margin_controller_side: T,
}

/// Event-trigger parameters derived from negative loop deficiency terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerParams<T: Scalar> {
    pub q1: T,
    pub q2: T,
    pub theta1: T,
    pub theta2: T,
    /// Squared error weight: `eps^2 = |nu_c| - nu_c - 1/(4 theta2 q2)`.
    pub eps_sq: T,
    /// Threshold coefficient: `nu_c^2/eps^2 - theta1 q1 / (1 + delta_p)^2`.
    pub threshold_coeff: T,
    pub nu_c: T,
    pub delta_p: T,
}

fn check_beta<T: Scalar>(beta1: T, beta2: T) -> Result<()> {
    if !(beta1.is_finite() && beta2.is_finite() && beta1 > T::zero() && beta2 > T::zero()) {
        return Err(Error::NonPositiveBeta);
    }
    Ok(())
}

fn check_delta<T: Scalar>(delta_p: T, delta_c: T) -> Result<()> {
    let ok = |d: T| d.is_finite() && d >= T::zero() && d < T::one();
    if !(ok(delta_p) && ok(delta_c)) {
        return Err(Error::InvalidDelta);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn deficiency_terms<T: Scalar>(
    rho_p: T,
    nu_p: T,
    rho_c: T,
    nu_c: T,
    delta_p: T,
    delta_c: T,
    beta1: T,
    beta2: T,
) -> (T, T) {
    let one = T::one();
    let two = conv::<T>(2.0);
    let half = conv::<T>(0.5);
    let q1 = -(rho_p + nu_c)
        + (delta_p * delta_p + two * delta_p) * nu_c.abs()
        + (one + half * beta2) * delta_p * delta_p
        + one / (two * beta1);
    let q2 = -(rho_c + nu_p)
        + (delta_c * delta_c + two * delta_c) * nu_p.abs()
        + (one + half * beta1) * delta_c * delta_c
        + one / (two * beta2);
    (q1, q2)
}

/// Evaluate the quantized-loop stability condition for given constants.
#[allow(clippy::too_many_arguments)]
pub fn quantized_loop_report<T: Scalar>(
    rho_p: T,
    nu_p: T,
    rho_c: T,
    nu_c: T,
    delta_p: T,
    delta_c: T,
    beta1: T,
    beta2: T,
) -> Result<NetworkConditionReport<T>> {
    check_beta(beta1, beta2)?;
    check_delta(delta_p, delta_c)?;
    let (q1, q2) = deficiency_terms(rho_p, nu_p, rho_c, nu_c, delta_p, delta_c, beta1, beta2);
    let r1 = -nu_p + nu_p.abs() * nu_p.abs();
    let r2 = -nu_c + nu_c.abs() * nu_c.abs();
    Ok(NetworkConditionReport {
        q1,
        q2,
        r1,
        r2,
        beta1,
        beta2,
        stable: q1 < T::zero() && q2 < T::zero(),
    })
}

/// Design-oriented rearrangement of the same condition: how much controller
/// feedforward exceeds the plant-side losses, and how much controller
/// feedback exceeds the controller-side losses. The margins equal
/// `(-q1, -q2)` of [`quantized_loop_report`].
#[allow(clippy::too_many_arguments)]
pub fn controller_design_check<T: Scalar>(
    rho_p: T,
    nu_p: T,
    rho_c: T,
    nu_c: T,
    delta_p: T,
    delta_c: T,
    beta1: T,
    beta2: T,
) -> Result<ControllerDesignCheck<T>> {
    check_beta(beta1, beta2)?;
    check_delta(delta_p, delta_c)?;
    let one = T::one();
    let two = conv::<T>(2.0);
    let half = conv::<T>(0.5);
    let margin_plant_side = (nu_c - (delta_p * delta_p + two * delta_p) * nu_c.abs())
        - (-rho_p + (one + half * beta2) * delta_p * delta_p + one / (two * beta1));
    let margin_controller_side = rho_c
        - (-nu_p
            + (delta_c * delta_c + two * delta_c) * nu_p.abs()
            + (one + half * beta1) * delta_c * delta_c
            + one / (two * beta2));
    Ok(ControllerDesignCheck {
        holds: margin_plant_side > T::zero() && margin_controller_side > T::zero(),
        margin_plant_side,
        margin_controller_side,
    })
}

/// Number of logarithmic grid points per beta axis.
const BETA_GRID_POINTS: usize = 29;
const BETA_EXP_LO: f64 = -3.0;
const BETA_EXP_HI: f64 = 4.0;

/// Search the fixed logarithmic grid `10^-3 .. 10^4` (29 points per axis)
/// for the (beta1, beta2) pair maximizing `min(-q1, -q2)`. Returns `None`
/// when no grid point makes both terms negative; ties keep the first pair in
/// grid order.
pub fn search_beta<T: Scalar>(
    rho_p: T,
    nu_p: T,
    rho_c: T,
    nu_c: T,
    delta_p: T,
    delta_c: T,
) -> Option<(T, T)> {
    let mut best: Option<(T, (T, T))> = None;
    for i in 0..BETA_GRID_POINTS {
        let e1 = BETA_EXP_LO
            + (BETA_EXP_HI - BETA_EXP_LO) * i as f64 / (BETA_GRID_POINTS - 1) as f64;
        let beta1 = conv::<T>(10f64.powf(e1));
        for j in 0..BETA_GRID_POINTS {
            let e2 = BETA_EXP_LO
                + (BETA_EXP_HI - BETA_EXP_LO) * j as f64 / (BETA_GRID_POINTS - 1) as f64;
            let beta2 = conv::<T>(10f64.powf(e2));
            let (q1, q2) =
                deficiency_terms(rho_p, nu_p, rho_c, nu_c, delta_p, delta_c, beta1, beta2);
            let margin = (-q1).min(-q2);
            if margin > T::zero() {
                match &best {
                    Some((m, _)) if *m >= margin => {}
                    _ => best = Some((margin, (beta1, beta2))),
                }
            }
        }
    }
    best.map(|(_, pair)| pair)
}

/// Derive event-trigger parameters. Requires the loop deficiency terms to be
/// strictly negative and `theta1, theta2` in (0, 1).
#[allow(clippy::too_many_arguments)]
pub fn trigger_params<T: Scalar>(
    rho_p: T,
    nu_p: T,
    rho_c: T,
    nu_c: T,
    delta_p: T,
    delta_c: T,
    beta1: T,
    beta2: T,
    theta1: T,
    theta2: T,
) -> Result<TriggerParams<T>> {
    check_beta(beta1, beta2)?;
    check_delta(delta_p, delta_c)?;
    let ok = |t: T| t.is_finite() && t > T::zero() && t < T::one();
    if !(ok(theta1) && ok(theta2)) {
        return Err(Error::InvalidTriggerTheta);
    }
    let (q1, q2) = deficiency_terms(rho_p, nu_p, rho_c, nu_c, delta_p, delta_c, beta1, beta2);
    if q1 >= T::zero() || q2 >= T::zero() {
        return Err(Error::QNotNegative);
    }
    let one = T::one();
    let four = conv::<T>(4.0);
    let eps_sq = nu_c.abs() - nu_c - one / (four * theta2 * q2);
    let threshold_coeff =
        nu_c * nu_c / eps_sq - theta1 * q1 / ((one + delta_p) * (one + delta_p));
    Ok(TriggerParams {
        q1,
        q2,
        theta1,
        theta2,
        eps_sq,
        threshold_coeff,
        nu_c,
        delta_p,
    })
}
