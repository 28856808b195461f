//! Static logarithmic quantizer with optional dead zone.
//!
//! Levels are geometrically spaced powers `theta^i` of the quantization
//! density `0 < theta < 1`; each level owns the half-open interval
//! `(theta^i / (1 + delta), theta^i / (1 - delta)]` with the sector bound
//! `delta = (1 - theta) / (1 + theta)`, so the quantization error satisfies
//! `|Q(v) - v| <= delta·|v|`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Scalar};

/// Logarithmic quantizer parameters. `delta` is derived from `theta` and
/// cached; the dead zone (default 0) maps small inputs to 0, making the
/// level set finite for bounded inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuantizerSpec<T: Scalar> {
    theta: T,
    delta: T,
    dead_zone: T,
}

impl<T: Scalar> LogQuantizerSpec<T> {
    pub fn new(theta: T) -> Result<Self> {
        if !(theta.is_finite() && theta > T::zero() && theta < T::one()) {
            return Err(Error::InvalidQuantizerDensity);
        }
        let delta = (T::one() - theta) / (T::one() + theta);
        Ok(Self { theta, delta, dead_zone: T::zero() })
    }

    /// Build the quantizer from the sector bound `delta` in (0, 1).
    pub fn from_delta(delta: T) -> Result<Self> {
        Self::new(theta_from_delta(delta)?)
    }

    pub fn with_dead_zone(mut self, dead_zone: T) -> Result<Self> {
        if !(dead_zone.is_finite() && dead_zone >= T::zero()) {
            return Err(Error::InvalidDeadZone);
        }
        self.dead_zone = dead_zone;
        Ok(self)
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn dead_zone(&self) -> T {
        self.dead_zone
    }
}

/// Invert the sector-bound relation: `theta = (1 - delta) / (1 + delta)`.
pub fn theta_from_delta<T: Scalar>(delta: T) -> Result<T> {
    if !(delta.is_finite() && delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidDelta);
    }
    Ok((T::one() - delta) / (T::one() + delta))
}

fn level_at<T: Scalar>(theta: T, idx: i64) -> T {
    // powi keeps small-index levels bit-reproducible; the exp form covers
    // index magnitudes beyond i32 that arise for densities close to 1
    if idx.unsigned_abs() <= 512 {
        theta.powi(idx as i32)
    } else {
        (theta.ln() * nalgebra::convert::<f64, T>(idx as f64)).exp()
    }
}

/// Quantize one scalar.
///
/// The level index is first estimated by logarithms and then corrected
/// against the exact half-open interval test
/// `theta^i/(1+delta) < v <= theta^i/(1-delta)`; floating-point log alone
/// can misplace boundary values, and for densities close to 1 the estimate
/// can be off by many levels, so the correction is a monotone bisection on
/// the index. Negative inputs map through odd symmetry; inputs with
/// `|v| <= dead_zone` map to 0.
pub fn quantize<T: Scalar>(spec: &LogQuantizerSpec<T>, v: T) -> T {
    if v == T::zero() || v.abs() <= spec.dead_zone {
        return T::zero();
    }
    if v < T::zero() {
        return -quantize(spec, -v);
    }
    let est = to_f64(v).ln() / to_f64(spec.theta).ln();
    let guess = if est.is_finite() { est.round().clamp(-4.0e15, 4.0e15) as i64 } else { 0 };

    // level(i) is big enough for index i exactly when v <= level(i)/(1-delta);
    // the correct index is the largest i satisfying that monotone predicate
    let big_enough = |i: i64| {
        let level = level_at(spec.theta, i);
        level.is_finite() && level > T::zero() && v <= level / (T::one() - spec.delta)
    };
    // bracket expansion is bounded: beyond ~2^70 level steps the level has
    // left the representable range and the input itself is at the f64 edge
    const MAX_EXPAND: u32 = 70;
    let (mut lo, mut hi);
    if big_enough(guess) {
        lo = guess;
        let mut step = 1i64;
        hi = guess.saturating_add(1);
        let mut rounds = 0;
        while big_enough(hi) {
            lo = hi;
            step = step.saturating_mul(2);
            hi = guess.saturating_add(step);
            rounds += 1;
            if rounds > MAX_EXPAND {
                return T::zero();
            }
        }
    } else {
        hi = guess;
        let mut step = 1i64;
        lo = guess.saturating_sub(1);
        let mut rounds = 0;
        while !big_enough(lo) {
            hi = lo;
            step = step.saturating_mul(2);
            lo = guess.saturating_sub(step);
            rounds += 1;
            if rounds > MAX_EXPAND {
                return T::zero();
            }
        }
    }
    // invariant: big_enough(lo) && !big_enough(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if big_enough(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    level_at(spec.theta, lo)
}

/// Component-wise quantization of a vector.
pub fn quantize_vec<T: Scalar>(spec: &LogQuantizerSpec<T>, v: &DVector<T>) -> DVector<T> {
    v.map(|x| quantize(spec, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta_from_delta_examples() {
        assert!((theta_from_delta(0.04f64).unwrap() - 0.96 / 1.04).abs() < 1e-15);
        assert!((theta_from_delta(1e-9f64).unwrap() - 1.0).abs() < 1e-8);
        assert!((theta_from_delta(0.5f64).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(theta_from_delta(0.0f64).unwrap_err(), Error::InvalidDelta);
        assert_eq!(theta_from_delta(1.0f64).unwrap_err(), Error::InvalidDelta);
    }

    #[test]
    fn delta_relation_holds() {
        let spec = LogQuantizerSpec::new(0.5f64).unwrap();
        assert!((spec.delta() * (1.0 + spec.theta()) - (1.0 - spec.theta())).abs() <= 1e-14);
        assert!((spec.delta() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quantize_examples() {
        let spec = LogQuantizerSpec::new(0.5f64).unwrap();
        assert_eq!(quantize(&spec, 0.0), 0.0);
        // interval for level theta^0 = 1 is (0.75, 1.5]
        assert_eq!(quantize(&spec, 1.0), 1.0);
        // 1.6 falls in the level theta^{-1} = 2 interval (1.5, 3]
        assert_eq!(quantize(&spec, 1.6), 2.0);
        assert!((2.0f64 - 1.6).abs() <= spec.delta() * 1.6 + 1e-15);
    }

    #[test]
    fn quantize_vec_examples() {
        let spec = LogQuantizerSpec::new(0.5f64).unwrap();
        let z = quantize_vec(&spec, &DVector::from_vec(vec![0.0, 0.0]));
        assert_eq!(z, DVector::from_vec(vec![0.0, 0.0]));

        let pm = quantize_vec(&spec, &DVector::from_vec(vec![1.0, -1.0]));
        assert_eq!(pm, DVector::from_vec(vec![1.0, -1.0]));

        let v = quantize_vec(&spec, &DVector::from_vec(vec![1.6, 0.4]));
        assert_eq!(v, DVector::from_vec(vec![2.0, 0.5]));
    }

    #[test]
    fn dead_zone_cuts_small_values() {
        let spec = LogQuantizerSpec::new(0.5f64).unwrap().with_dead_zone(0.1).unwrap();
        assert_eq!(quantize(&spec, 0.05), 0.0);
        assert_eq!(quantize(&spec, -0.1), 0.0); // |v| <= dead zone
        assert_ne!(quantize(&spec, 0.2), 0.0);
    }

    #[test]
    fn idempotent_on_levels() {
        for &theta in &[0.5f64, 0.9230769230769231, 0.1, 0.99] {
            let spec = LogQuantizerSpec::new(theta).unwrap();
            for i in -50..=50 {
                let level = theta.powi(i);
                assert_eq!(quantize(&spec, level), level, "theta={theta}, i={i}");
            }
        }
    }

    #[test]
    fn sector_bounds_hold_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let theta = rng.gen_range(0.05..0.95);
            let spec = LogQuantizerSpec::new(theta).unwrap();
            let delta = spec.delta();
            for _ in 0..2000 {
                let v: f64 = rng.gen_range(-6.0..6.0f64).exp2() * if rng.gen() { 1.0 } else { -1.0 };
                let q = quantize(&spec, v);
                assert!((q - v).abs() <= delta * v.abs() + 1e-12);
                let vq = v * q;
                assert!((1.0 - delta) * v * v <= vq + 1e-12);
                assert!(vq <= (1.0 + delta) * v * v + 1e-12);
                assert!(q * q <= (1.0 + delta).powi(2) * v * v + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn odd_symmetry(theta in 0.05f64..0.95, v in -1e8f64..1e8) {
            let spec = LogQuantizerSpec::new(theta).unwrap();
            prop_assert_eq!(quantize(&spec, -v), -quantize(&spec, v));
        }

        #[test]
        fn monotone(theta in 0.05f64..0.95, a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let spec = LogQuantizerSpec::new(theta).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize(&spec, lo) <= quantize(&spec, hi));
        }
    }
}
