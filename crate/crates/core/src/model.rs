//! Core 2-D model types: continuous and discrete Roesser state-space models,
//! QSR supply rates, passivity indices and their algebra, plus the
//! second-order hyperbolic PDE to Roesser transformation.
//!
//! A 2-D Roesser model splits the state into a horizontal part `x_h` advanced
//! along the first coordinate and a vertical part `x_v` advanced along the
//! second:
//!
//! ```text
//! d x_h / d z1 = A11 x_h + A12 x_v + B1 u
//! d x_v / d z2 = A21 x_h + A22 x_v + B2 u
//!            y = C1 x_h + C2 x_v + D u
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{conv, Scalar};

fn all_finite<T: Scalar>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Continuous-time 2-D Roesser model.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRoesser2D<T: Scalar> {
    pub a11: DMatrix<T>,
    pub a12: DMatrix<T>,
    pub a21: DMatrix<T>,
    pub a22: DMatrix<T>,
    pub b1: DMatrix<T>,
    pub b2: DMatrix<T>,
    pub c1: DMatrix<T>,
    pub c2: DMatrix<T>,
    pub d: DMatrix<T>,
}

/// Discrete 2-D Roesser model, optionally carrying the sampling periods it
/// was obtained with (absent for natively-discrete models).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRoesser2D<T: Scalar> {
    pub a11: DMatrix<T>,
    pub a12: DMatrix<T>,
    pub a21: DMatrix<T>,
    pub a22: DMatrix<T>,
    pub b1: DMatrix<T>,
    pub b2: DMatrix<T>,
    pub c1: DMatrix<T>,
    pub c2: DMatrix<T>,
    pub d: DMatrix<T>,
    /// Sampling periods (h1, h2) when the model originates from sampling.
    pub sample_periods: Option<(T, T)>,
}

macro_rules! roesser_accessors {
    ($ty:ident) => {
        impl<T: Scalar> $ty<T> {
            pub fn n_h(&self) -> usize {
                self.a11.nrows()
            }
            pub fn n_v(&self) -> usize {
                self.a22.nrows()
            }
            pub fn input_dim(&self) -> usize {
                self.b1.ncols()
            }
            pub fn output_dim(&self) -> usize {
                self.c1.nrows()
            }

            /// Full state matrix `[A11 A12; A21 A22]`.
            pub fn a_full(&self) -> DMatrix<T> {
                let (nh, nv) = (self.n_h(), self.n_v());
                let mut a = DMatrix::zeros(nh + nv, nh + nv);
                a.view_mut((0, 0), (nh, nh)).copy_from(&self.a11);
                a.view_mut((0, nh), (nh, nv)).copy_from(&self.a12);
                a.view_mut((nh, 0), (nv, nh)).copy_from(&self.a21);
                a.view_mut((nh, nh), (nv, nv)).copy_from(&self.a22);
                a
            }

            /// Stacked input matrix `[B1; B2]`.
            pub fn b_full(&self) -> DMatrix<T> {
                let (nh, nv, m) = (self.n_h(), self.n_v(), self.input_dim());
                let mut b = DMatrix::zeros(nh + nv, m);
                b.view_mut((0, 0), (nh, m)).copy_from(&self.b1);
                b.view_mut((nh, 0), (nv, m)).copy_from(&self.b2);
                b
            }

            /// Concatenated output matrix `[C1 C2]`.
            pub fn c_full(&self) -> DMatrix<T> {
                let (nh, nv, p) = (self.n_h(), self.n_v(), self.output_dim());
                let mut c = DMatrix::zeros(p, nh + nv);
                c.view_mut((0, 0), (p, nh)).copy_from(&self.c1);
                c.view_mut((0, nh), (p, nv)).copy_from(&self.c2);
                c
            }

            fn check_shapes(&self) -> Result<()> {
                let (nh, nv) = (self.a11.nrows(), self.a22.nrows());
                let m = self.b1.ncols();
                let p = self.c1.nrows();
                let ok = self.a11.ncols() == nh
                    && self.a12.shape() == (nh, nv)
                    && self.a21.shape() == (nv, nh)
                    && self.a22.ncols() == nv
                    && self.b1.nrows() == nh
                    && self.b2.shape() == (nv, m)
                    && self.c1.ncols() == nh
                    && self.c2.shape() == (p, nv)
                    && self.d.shape() == (p, m);
                if !ok {
                    return Err(Error::DimensionMismatch("Roesser model blocks"));
                }
                let finite = all_finite(&self.a11)
                    && all_finite(&self.a12)
                    && all_finite(&self.a21)
                    && all_finite(&self.a22)
                    && all_finite(&self.b1)
                    && all_finite(&self.b2)
                    && all_finite(&self.c1)
                    && all_finite(&self.c2)
                    && all_finite(&self.d);
                if !finite {
                    return Err(Error::NonFinite("Roesser model blocks"));
                }
                Ok(())
            }
        }
    };
}

roesser_accessors!(ContinuousRoesser2D);
roesser_accessors!(DiscreteRoesser2D);

impl<T: Scalar> ContinuousRoesser2D<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a11: DMatrix<T>,
        a12: DMatrix<T>,
        a21: DMatrix<T>,
        a22: DMatrix<T>,
        b1: DMatrix<T>,
        b2: DMatrix<T>,
        c1: DMatrix<T>,
        c2: DMatrix<T>,
        d: DMatrix<T>,
    ) -> Result<Self> {
        let model = Self { a11, a12, a21, a22, b1, b2, c1, c2, d };
        model.check_shapes()?;
        Ok(model)
    }

    /// Replace the output map `(C1, C2, D)`.
    pub fn with_output(mut self, c1: DMatrix<T>, c2: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        self.c1 = c1;
        self.c2 = c2;
        self.d = d;
        self.check_shapes()?;
        Ok(self)
    }
}

impl<T: Scalar> DiscreteRoesser2D<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a11: DMatrix<T>,
        a12: DMatrix<T>,
        a21: DMatrix<T>,
        a22: DMatrix<T>,
        b1: DMatrix<T>,
        b2: DMatrix<T>,
        c1: DMatrix<T>,
        c2: DMatrix<T>,
        d: DMatrix<T>,
        sample_periods: Option<(T, T)>,
    ) -> Result<Self> {
        let model = Self { a11, a12, a21, a22, b1, b2, c1, c2, d, sample_periods };
        model.check_shapes()?;
        Ok(model)
    }
}

/// Quadratic supply rate `y'Qy + 2y'Su + u'Ru` with symmetric Q and R.
#[derive(Debug, Clone, PartialEq)]
pub struct QsrSupply<T: Scalar> {
    pub q: DMatrix<T>,
    pub s: DMatrix<T>,
    pub r: DMatrix<T>,
}

impl<T: Scalar> QsrSupply<T> {
    pub fn new(q: DMatrix<T>, s: DMatrix<T>, r: DMatrix<T>) -> Result<Self> {
        if !q.is_square() || !r.is_square() || s.nrows() != q.nrows() || s.ncols() != r.nrows() {
            return Err(Error::DimensionMismatch("supply matrices"));
        }
        if !(all_finite(&q) && all_finite(&s) && all_finite(&r)) {
            return Err(Error::NonFinite("supply matrices"));
        }
        let tol = conv::<T>(1e-12);
        let sym = |m: &DMatrix<T>| (m - m.transpose()).amax() <= tol;
        if !sym(&q) {
            return Err(Error::NonSymmetric("Q"));
        }
        if !sym(&r) {
            return Err(Error::NonSymmetric("R"));
        }
        Ok(Self { q, s, r })
    }

    pub fn output_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    /// Pointwise supply value for one output/input pair.
    pub fn evaluate(&self, y: &DVector<T>, u: &DVector<T>) -> T {
        let qy = &self.q * y;
        let su = &self.s * u;
        let ru = &self.r * u;
        y.dot(&qy) + conv::<T>(2.0) * y.dot(&su) + u.dot(&ru)
    }
}

/// Input-feedforward output-feedback passivity levels (rho, nu).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassivityIndices<T: Scalar> {
    pub rho: T,
    pub nu: T,
}

impl<T: Scalar> PassivityIndices<T> {
    pub fn new(rho: T, nu: T) -> Self {
        Self { rho, nu }
    }
}

/// Classification of an index pair against the achievable region
/// `Omega = Omega1 ∪ Omega2` with `Omega1 = {rho·nu < 1/4}` and
/// `Omega2 = {rho·nu = 1/4, rho > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaClass {
    InOmega1,
    InOmega2,
    Outside,
}

/// Second-order hyperbolic PDE
/// `s_xt = a1 s_t + a2 s_x + a0 s + b f` with sampled boundary data
/// `q(t_j)` (and its derivative) along t and `p(x_i)` along x.
#[derive(Debug, Clone, PartialEq)]
pub struct Pde2ndOrderSpec<T: Scalar> {
    pub a0: T,
    pub a1: T,
    pub a2: T,
    pub b: T,
    pub boundary_q: Vec<T>,
    pub boundary_dq: Vec<T>,
    pub boundary_p: Vec<T>,
}

impl<T: Scalar> Pde2ndOrderSpec<T> {
    pub fn new(
        a0: T,
        a1: T,
        a2: T,
        b: T,
        boundary_q: Vec<T>,
        boundary_dq: Vec<T>,
        boundary_p: Vec<T>,
    ) -> Result<Self> {
        let coeffs_ok = a0.is_finite() && a1.is_finite() && a2.is_finite() && b.is_finite();
        let seq_ok = boundary_q.iter().all(|x| x.is_finite())
            && boundary_dq.iter().all(|x| x.is_finite())
            && boundary_p.iter().all(|x| x.is_finite());
        if !(coeffs_ok && seq_ok) {
            return Err(Error::NonFinite("PDE coefficients or boundary sequences"));
        }
        Ok(Self { a0, a1, a2, b, boundary_q, boundary_dq, boundary_p })
    }
}

/// Transform the second-order hyperbolic PDE into a continuous Roesser model
/// by introducing the internal variable `r = s_t - a2 s`.
///
/// The state matrix is `[[a1, a1·a2 + a0], [1, a2]]`, the input matrix
/// `[b; 0]`. The output map defaults to `y = r + s` (C = [1 1], D = 0);
/// use [`ContinuousRoesser2D::with_output`] to override.
pub fn pde_to_roesser<T: Scalar>(spec: &Pde2ndOrderSpec<T>) -> ContinuousRoesser2D<T> {
    let one = T::one();
    let zero = T::zero();
    ContinuousRoesser2D {
        a11: DMatrix::from_element(1, 1, spec.a1),
        a12: DMatrix::from_element(1, 1, spec.a1 * spec.a2 + spec.a0),
        a21: DMatrix::from_element(1, 1, one),
        a22: DMatrix::from_element(1, 1, spec.a2),
        b1: DMatrix::from_element(1, 1, spec.b),
        b2: DMatrix::from_element(1, 1, zero),
        c1: DMatrix::from_element(1, 1, one),
        c2: DMatrix::from_element(1, 1, one),
        d: DMatrix::from_element(1, 1, zero),
    }
}

/// Boundary sequences for the transformed PDE:
/// `x_h(0, j) = dq(t_j) - a2·q(t_j)` and `x_v(i, 0) = p(x_i)`.
///
/// The derivative sequence must be supplied by the caller; no numerical
/// differentiation is performed.
pub fn boundary_from_pde<T: Scalar>(spec: &Pde2ndOrderSpec<T>) -> Result<(Vec<T>, Vec<T>)> {
    if spec.boundary_q.len() != spec.boundary_dq.len() {
        return Err(Error::DimensionMismatch("boundary q and dq sequences"));
    }
    let xh0 = spec
        .boundary_q
        .iter()
        .zip(&spec.boundary_dq)
        .map(|(&q, &dq)| dq - spec.a2 * q)
        .collect();
    Ok((xh0, spec.boundary_p.clone()))
}

/// Supply rate of an IF-OFP(rho, nu) system with square interconnection
/// (m = p): `Q = -rho·I`, `S = I/2`, `R = -nu·I`.
pub fn indices_to_qsr<T: Scalar>(idx: PassivityIndices<T>, p: usize) -> QsrSupply<T> {
    let half = conv::<T>(0.5);
    QsrSupply {
        q: DMatrix::from_diagonal_element(p, p, -idx.rho),
        s: DMatrix::from_diagonal_element(p, p, half),
        r: DMatrix::from_diagonal_element(p, p, -idx.nu),
    }
}

/// Supply rate of a finite-gain system with gain level `gamma`:
/// `Q = -I`, `S = 0`, `R = gamma^2·I`.
pub fn fgs_supply<T: Scalar>(gamma: T, p: usize) -> QsrSupply<T> {
    QsrSupply {
        q: DMatrix::from_diagonal_element(p, p, -T::one()),
        s: DMatrix::zeros(p, p),
        r: DMatrix::from_diagonal_element(p, p, gamma * gamma),
    }
}

/// Recover IF-OFP levels from a canonical supply `(q·I, I/2, r·I)`.
pub fn qsr_to_indices<T: Scalar>(supply: &QsrSupply<T>) -> Result<PassivityIndices<T>> {
    let p = supply.output_dim();
    if supply.input_dim() != p || supply.s.nrows() != p {
        return Err(Error::NonCanonicalSupply);
    }
    let tol = conv::<T>(1e-9);
    let half = conv::<T>(0.5);
    let q0 = supply.q[(0, 0)];
    let r0 = supply.r[(0, 0)];
    let q_ok = (&supply.q - DMatrix::from_diagonal_element(p, p, q0)).amax() <= tol;
    let r_ok = (&supply.r - DMatrix::from_diagonal_element(p, p, r0)).amax() <= tol;
    let s_ok = (&supply.s - DMatrix::from_diagonal_element(p, p, half)).amax() <= tol;
    if !(q_ok && r_ok && s_ok) {
        return Err(Error::NonCanonicalSupply);
    }
    Ok(PassivityIndices { rho: -q0, nu: -r0 })
}

/// Classify an index pair against the achievable region. Comparisons are
/// exact; callers wanting slack should use explicit margins.
pub fn validate_index_domain<T: Scalar>(rho: T, nu: T) -> OmegaClass {
    let quarter = conv::<T>(0.25);
    let prod = rho * nu;
    if prod < quarter {
        OmegaClass::InOmega1
    } else if prod == quarter && rho > T::zero() {
        OmegaClass::InOmega2
    } else {
        OmegaClass::Outside
    }
}

/// Largest output-feedback level of the static gain `y = k·u` once the
/// input-feedforward level `nu` is fixed: the supply
/// `-rho·(k u)^2 + (k u)·u - nu·u^2` is pointwise nonnegative exactly for
/// `rho <= (k - nu) / k^2`.
pub fn static_gain_indices<T: Scalar>(k: T, nu: T) -> Result<T> {
    if k == T::zero() {
        return Err(Error::ZeroGain);
    }
    Ok((k - nu) / (k * k))
}

/// Largest real part over the eigenvalues of `A11`; a positive value is
/// evidence of instability of the continuous 2-D model.
pub fn max_real_eig_a11<T: Scalar>(model: &ContinuousRoesser2D<T>) -> Result<T> {
    if !all_finite(&model.a11) {
        return Err(Error::NonFinite("A11"));
    }
    let schur = nalgebra::linalg::Schur::try_new(model.a11.clone(), T::default_epsilon(), 10_000)
        .ok_or(Error::EigenSolverFailed)?;
    let eigs = schur.complex_eigenvalues();
    let mut max_re = T::min_value().unwrap_or_else(|| conv(f64::MIN));
    for e in eigs.iter() {
        if e.re > max_re {
            max_re = e.re;
        }
    }
    Ok(max_re)
}

/// Feedback interconnection stability from passivity levels: the loop of an
/// IF-OFP(rho_p, nu_p) plant and an IF-OFP(rho_c, nu_c) controller is
/// L2-stable if `nu_c + rho_p > 0` and `nu_p + rho_c > 0` (strict).
pub fn feedback_indices_stable<T: Scalar>(
    plant: PassivityIndices<T>,
    controller: PassivityIndices<T>,
) -> bool {
    controller.nu + plant.rho > T::zero() && plant.nu + controller.rho > T::zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m1(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn worked_pde() -> Pde2ndOrderSpec<f64> {
        Pde2ndOrderSpec::new(1.0, 1.0, -1.0, 1.0, vec![1.0; 5], vec![0.0; 5], vec![1.0; 4])
            .unwrap()
    }

    #[test]
    fn pde_transform_worked_example() {
        let model = pde_to_roesser(&worked_pde());
        assert_eq!(model.a11, m1(1.0));
        assert_eq!(model.a12, m1(0.0));
        assert_eq!(model.a21, m1(1.0));
        assert_eq!(model.a22, m1(-1.0));
        assert_eq!(model.b1, m1(1.0));
        assert_eq!(model.b2, m1(0.0));
        assert_eq!(model.c1, m1(1.0));
        assert_eq!(model.c2, m1(1.0));
        assert_eq!(model.d, m1(0.0));
    }

    #[test]
    fn pde_transform_zero_and_generic() {
        let zero = Pde2ndOrderSpec::new(0.0, 0.0, 0.0, 0.0, vec![], vec![], vec![]).unwrap();
        let model = pde_to_roesser(&zero);
        assert_eq!(model.a11, m1(0.0));
        assert_eq!(model.a12, m1(0.0));
        assert_eq!(model.a21, m1(1.0));
        assert_eq!(model.a22, m1(0.0));
        assert_eq!(model.b1, m1(0.0));

        let s = Pde2ndOrderSpec::new(0.0, 2.0, 1.0, 1.0, vec![], vec![], vec![]).unwrap();
        let model = pde_to_roesser(&s);
        assert_eq!(model.a11, m1(2.0));
        assert_eq!(model.a12, m1(2.0));
        assert_eq!(model.a22, m1(1.0));

        let s = Pde2ndOrderSpec::new(1.0, 2.0, 1.0, 1.0, vec![], vec![], vec![]).unwrap();
        let model = pde_to_roesser(&s);
        assert_eq!(model.a12, m1(3.0));
    }

    #[test]
    fn pde_transform_structure_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (a0, a1, a2): (f64, f64, f64) =
                (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let s = Pde2ndOrderSpec::new(a0, a1, a2, 0.5, vec![], vec![], vec![]).unwrap();
            let model = pde_to_roesser(&s);
            assert_eq!(model.a21[(0, 0)], 1.0);
            assert_eq!(model.a12[(0, 0)], a1 * a2 + a0);
        }
    }

    #[test]
    fn boundary_from_pde_examples() {
        // q = 1, dq = 0, a2 = -1  ->  x_h(0, j) = 1
        let (xh0, _) = boundary_from_pde(&worked_pde()).unwrap();
        assert!(xh0.iter().all(|&v| v == 1.0));

        // p(x_i) = e^{-0.1 i}
        let p: Vec<f64> = (0..4).map(|i| (-0.1 * i as f64).exp()).collect();
        let spec =
            Pde2ndOrderSpec::new(1.0, 1.0, -1.0, 1.0, vec![1.0; 3], vec![0.0; 3], p).unwrap();
        let (_, xv0) = boundary_from_pde(&spec).unwrap();
        assert_relative_eq!(xv0[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(xv0[1], 0.904837418035960, max_relative = 1e-12);
        assert_relative_eq!(xv0[2], 0.818730753077982, max_relative = 1e-12);

        // zero boundary
        let z = Pde2ndOrderSpec::new(0.0, 0.0, 3.0, 0.0, vec![0.0; 4], vec![0.0; 4], vec![])
            .unwrap();
        let (xh0, _) = boundary_from_pde(&z).unwrap();
        assert!(xh0.iter().all(|&v| v == 0.0));

        // mismatched q/dq lengths
        let bad =
            Pde2ndOrderSpec::new(0.0, 0.0, 0.0, 0.0, vec![0.0; 4], vec![0.0; 3], vec![]).unwrap();
        assert_eq!(
            boundary_from_pde(&bad).unwrap_err(),
            Error::DimensionMismatch("boundary q and dq sequences")
        );
    }

    #[test]
    fn indices_to_qsr_examples() {
        let s = indices_to_qsr(PassivityIndices::new(-1.317, -0.1), 1);
        assert_relative_eq!(s.q[(0, 0)], 1.317);
        assert_eq!(s.s[(0, 0)], 0.5);
        assert_relative_eq!(s.r[(0, 0)], 0.1);

        let passive = indices_to_qsr(PassivityIndices::new(0.0, 0.0), 2);
        assert_eq!(passive.q, DMatrix::zeros(2, 2));
        assert_eq!(passive.s, DMatrix::from_diagonal_element(2, 2, 0.5));
        assert_eq!(passive.r, DMatrix::zeros(2, 2));

        // FGS(gamma = 2) corresponds to (-I, 0, 4I)
        let fgs = fgs_supply(2.0, 1);
        assert_eq!(fgs.q[(0, 0)], -1.0);
        assert_eq!(fgs.s[(0, 0)], 0.0);
        assert_eq!(fgs.r[(0, 0)], 4.0);
    }

    #[test]
    fn qsr_to_indices_examples() {
        let s = QsrSupply::new(m1(1.317), m1(0.5), m1(0.1)).unwrap();
        let idx = qsr_to_indices(&s).unwrap();
        assert_relative_eq!(idx.rho, -1.317);
        assert_relative_eq!(idx.nu, -0.1);

        let s = QsrSupply::new(m1(0.0), m1(0.5), m1(0.0)).unwrap();
        let idx = qsr_to_indices(&s).unwrap();
        assert_eq!((idx.rho, idx.nu), (0.0, 0.0));

        let s = QsrSupply::new(m1(1.0), m1(1.0), m1(1.0)).unwrap();
        assert_eq!(qsr_to_indices(&s).unwrap_err(), Error::NonCanonicalSupply);
    }

    #[test]
    fn index_round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let idx = PassivityIndices::<f64>::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let back = qsr_to_indices(&indices_to_qsr(idx, 3)).unwrap();
            assert!((back.rho - idx.rho).abs() <= 1e-12);
            assert!((back.nu - idx.nu).abs() <= 1e-12);
        }
    }

    #[test]
    fn index_domain_examples() {
        assert_eq!(validate_index_domain(0.166, 1.5), OmegaClass::InOmega1);
        assert_eq!(validate_index_domain(0.5, 0.5), OmegaClass::InOmega2);
        assert_eq!(validate_index_domain(-2.5, -0.1), OmegaClass::Outside);
    }

    #[test]
    fn index_domain_swap_symmetry() {
        // The product rho*nu is symmetric, so Omega1 membership is swap
        // invariant. For the boundary set rho*nu = 1/4 the product being
        // positive forces both entries to share a sign, so Omega2 membership
        // is swap invariant as well; the classifier must agree under swap.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            assert_eq!(validate_index_domain(a, b), validate_index_domain(b, a));
        }
        // boundary spot checks in both orders
        assert_eq!(validate_index_domain(2.0, 0.125), OmegaClass::InOmega2);
        assert_eq!(validate_index_domain(0.125, 2.0), OmegaClass::InOmega2);
        assert_eq!(validate_index_domain(-2.0, -0.125), OmegaClass::Outside);
        assert_eq!(validate_index_domain(-0.125, -2.0), OmegaClass::Outside);
    }

    #[test]
    fn static_gain_examples() {
        assert!((static_gain_indices(3.0f64, 1.5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(static_gain_indices(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(static_gain_indices(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(static_gain_indices(0.0, 1.0).unwrap_err(), Error::ZeroGain);
    }

    #[test]
    fn static_gain_supply_is_pointwise_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let k: f64 = {
                let x: f64 = rng.gen_range(-4.0..4.0);
                if x.abs() < 1e-3 { 1.0 } else { x }
            };
            let nu: f64 = rng.gen_range(-4.0..4.0);
            let u: f64 = rng.gen_range(-10.0..10.0);
            let rho = static_gain_indices(k, nu).unwrap();
            let y = k * u;
            let supply = -rho * y * y + y * u - nu * u * u;
            assert!(supply >= -1e-9, "supply {supply} negative for k={k}, nu={nu}, u={u}");
        }
    }

    #[test]
    fn max_real_eig_examples() {
        let model = pde_to_roesser(&worked_pde());
        assert_relative_eq!(max_real_eig_a11(&model).unwrap(), 1.0, max_relative = 1e-12);

        let stable = ContinuousRoesser2D::new(
            m1(-1.0),
            m1(0.0),
            m1(0.0),
            m1(-1.0),
            m1(0.0),
            m1(0.0),
            m1(1.0),
            m1(1.0),
            m1(0.0),
        )
        .unwrap();
        assert_relative_eq!(max_real_eig_a11(&stable).unwrap(), -1.0, max_relative = 1e-12);

        // characteristic polynomial l^2 + 3l + 2 -> eigenvalues -1, -2
        let a11 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let two = ContinuousRoesser2D::new(
            a11,
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            m1(0.0),
            DMatrix::zeros(2, 1),
            m1(0.0),
            DMatrix::zeros(1, 2),
            m1(1.0),
            m1(0.0),
        )
        .unwrap();
        assert_relative_eq!(max_real_eig_a11(&two).unwrap(), -1.0, max_relative = 1e-9);
    }

    #[test]
    fn feedback_stability_examples() {
        let plant = PassivityIndices::new(-1.317, -0.1);
        let ctrl = PassivityIndices::new(0.166, 1.5);
        assert!(feedback_indices_stable(plant, ctrl));

        let zero = PassivityIndices::new(0.0, 0.0);
        assert!(!feedback_indices_stable(zero, zero));

        let one = PassivityIndices::new(1.0, 1.0);
        assert!(feedback_indices_stable(one, one));
    }

    #[test]
    fn supply_symmetry_is_enforced() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        let err =
            QsrSupply::new(q, DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)).unwrap_err();
        assert_eq!(err, Error::NonSymmetric("Q"));
    }

    #[test]
    fn model_dimension_checks() {
        let err = ContinuousRoesser2D::new(
            m1(1.0),
            DMatrix::zeros(2, 1), // wrong: a12 must be 1x n_v
            m1(1.0),
            m1(1.0),
            m1(1.0),
            m1(0.0),
            m1(1.0),
            m1(1.0),
            m1(0.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));

        let err = ContinuousRoesser2D::new(
            m1(f64::NAN),
            m1(0.0),
            m1(1.0),
            m1(1.0),
            m1(1.0),
            m1(0.0),
            m1(1.0),
            m1(1.0),
            m1(0.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }
}
