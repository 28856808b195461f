//! Dissipation LMI for sampled discrete Roesser models: construction,
//! feasibility, certificate validation, output-feedback level maximization,
//! and an empirical trajectory check of the dissipation inequality.
//!
//! With block-diagonal storage `P = diag(P_h, P_v)`, full state matrix `Â`,
//! stacked input matrix `B̂` and output map `(C, D)`, the quadratic form of
//!
//! ```text
//! M(P) = [ Â'PÂ - P - C'Q̂C      Â'PB̂ - C'(Ŝ + Q̂D)                 ]
//!        [ *                    B̂'PB̂ - D'Q̂D - D'Ŝ - Ŝ'D - R̂      ]
//! ```
//!
//! on `[x; u]` equals the one-step storage increment minus the supply, so
//! `M(P) ⪯ 0` with `P_h, P_v ≻ 0` certifies dissipativity of the discrete
//! system for the supply `(Q̂, Ŝ, R̂)`.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::discretize::{sample_exact, SamplingSpec};
use crate::error::{Error, Result};
use crate::model::{indices_to_qsr, ContinuousRoesser2D, DiscreteRoesser2D, PassivityIndices, QsrSupply};
use crate::scalar::{conv, to_f64, Scalar};
use crate::sim::Grid2DTrajectory;

/// Relative feasibility tolerance applied to the LMI scale.
pub const DEFAULT_FEASIBILITY_TOL_REL: f64 = 1e-7;
/// Default bisection tolerance for the output-feedback level.
pub const DEFAULT_RHO_TOL: f64 = 1e-3;
/// Positive-definiteness floor for storage blocks, relative to the LMI scale.
const PSD_FLOOR_REL: f64 = 1e-8;

const RESTARTS: usize = 5;
const MAX_ITERS: usize = 2000;
const INIT_SCALES: [f64; RESTARTS] = [1.0, 0.1, 10.0, 100.0, 1000.0];

/// Structured symmetric matrix function `M(P_h, P_v)`, affine in the storage
/// blocks, with the supply-dependent constant part precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationLmi<T: Scalar> {
    n_h: usize,
    n_v: usize,
    m: usize,
    /// `[Â B̂]`: maps `[x; u]` to the advanced state.
    g: DMatrix<T>,
    /// Constant supply block `M(0, 0)`.
    m0: DMatrix<T>,
}

/// Storage blocks certifying feasibility, with the independently recomputed
/// residual `λ_max(M(P_h, P_v))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiCertificate<T: Scalar> {
    pub p_h: DMatrix<T>,
    pub p_v: DMatrix<T>,
    pub residual: T,
}

/// Outcome of the feasibility search. `BudgetExceeded` marks runs that were
/// still improving when the iteration budget ran out, as opposed to runs
/// that plateaued above the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility<T: Scalar> {
    Feasible(LmiCertificate<T>),
    Infeasible,
    BudgetExceeded,
}

/// Row status of a level sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    Ok,
    Clamped,
    Infeasible,
    Budget,
}

impl SweepStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepStatus::Ok => "ok",
            SweepStatus::Clamped => "clamped",
            SweepStatus::Infeasible => "infeasible",
            SweepStatus::Budget => "budget",
        }
    }
}

/// Result of [`maximize_rho`].
#[derive(Debug, Clone, PartialEq)]
pub struct RhoMax<T: Scalar> {
    pub rho: T,
    pub status: SweepStatus,
    pub certificate: Option<LmiCertificate<T>>,
}

/// One grid point of a level sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T: Scalar> {
    pub h1: T,
    pub h2: T,
    pub rho: Option<T>,
    pub status: SweepStatus,
}

/// Assemble the dissipation LMI for a discrete model and supply rate.
pub fn build_dissipation_lmi<T: Scalar>(
    disc: &DiscreteRoesser2D<T>,
    supply: &QsrSupply<T>,
) -> Result<DissipationLmi<T>> {
    let (n_h, n_v, m, p) = (disc.n_h(), disc.n_v(), disc.input_dim(), disc.output_dim());
    if supply.output_dim() != p || supply.input_dim() != m {
        return Err(Error::DimensionMismatch("supply vs model dimensions"));
    }
    let n = n_h + n_v;
    let a = disc.a_full();
    let b = disc.b_full();
    let c = disc.c_full();
    let mut g = DMatrix::zeros(n, n + m);
    g.view_mut((0, 0), (n, n)).copy_from(&a);
    g.view_mut((0, n), (n, m)).copy_from(&b);

    let mut m0 = DMatrix::zeros(n + m, n + m);
    let cqc = c.transpose() * &supply.q * &c;
    let top_right = c.transpose() * (&supply.s + &supply.q * &disc.d);
    let bottom = disc.d.transpose() * &supply.q * &disc.d
        + disc.d.transpose() * &supply.s
        + supply.s.transpose() * &disc.d
        + &supply.r;
    m0.view_mut((0, 0), (n, n)).copy_from(&(-&cqc));
    m0.view_mut((0, n), (n, m)).copy_from(&(-&top_right));
    m0.view_mut((n, 0), (m, n)).copy_from(&(-top_right.transpose()));
    m0.view_mut((n, n), (m, m)).copy_from(&(-bottom));
    Ok(DissipationLmi { n_h, n_v, m, g, m0 })
}

impl<T: Scalar> DissipationLmi<T> {
    pub fn state_dims(&self) -> (usize, usize) {
        (self.n_h, self.n_v)
    }

    pub fn size(&self) -> usize {
        self.n_h + self.n_v + self.m
    }

    /// Scale of the constant block, used for relative tolerances.
    pub fn scale(&self) -> T {
        T::one().max(self.m0.norm())
    }

    /// Evaluate `M(P_h, P_v)`.
    pub fn eval(&self, p_h: &DMatrix<T>, p_v: &DMatrix<T>) -> DMatrix<T> {
        let n = self.n_h + self.n_v;
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (self.n_h, self.n_h)).copy_from(p_h);
        p.view_mut((self.n_h, self.n_h), (self.n_v, self.n_v)).copy_from(p_v);
        let pg = &p * &self.g;
        let mut m = self.g.transpose() * pg + &self.m0;
        // subtract E'PE: the top-left n x n block loses P
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] -= p[(r, c)];
            }
        }
        m
    }
}

fn sym_eig<T: Scalar>(m: &DMatrix<T>) -> SymmetricEigen<T, nalgebra::Dyn> {
    let sym = (m + m.transpose()) * conv::<T>(0.5);
    SymmetricEigen::new(sym)
}

fn lambda_max<T: Scalar>(eig: &SymmetricEigen<T, nalgebra::Dyn>) -> (T, usize) {
    let mut hi = eig.eigenvalues[0];
    let mut at = 0;
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        if e > hi {
            hi = e;
            at = k;
        }
    }
    (hi, at)
}

fn lambda_min<T: Scalar>(m: &DMatrix<T>) -> T {
    let eig = sym_eig(m);
    let mut lo = eig.eigenvalues[0];
    for &e in eig.eigenvalues.iter() {
        if e < lo {
            lo = e;
        }
    }
    lo
}

/// Project a matrix onto `{X symmetric, X ⪰ floor·I}`.
fn project_psd<T: Scalar>(m: &DMatrix<T>, floor: T) -> DMatrix<T> {
    let eig = sym_eig(m);
    let clamped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| e.max(floor)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

fn fnv1a(seed: &mut u64, word: u64) {
    for byte in word.to_le_bytes() {
        *seed ^= byte as u64;
        *seed = seed.wrapping_mul(0x0000_0100_0000_01B3);
    }
}

fn seed_from_inputs<T: Scalar>(lmi: &DissipationLmi<T>, tol: T) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for x in lmi.g.iter().chain(lmi.m0.iter()) {
        fnv1a(&mut h, to_f64(*x).to_bits());
    }
    fnv1a(&mut h, to_f64(tol).to_bits());
    h
}

fn random_spd<T: Scalar>(rng: &mut ChaCha8Rng, n: usize, scale: T, floor: T) -> DMatrix<T> {
    let a = DMatrix::from_fn(n, n, |_, _| conv::<T>(rng.gen_range(-1.0..1.0)));
    let base = (&a * a.transpose()) * (scale / conv::<T>(n as f64))
        + DMatrix::from_diagonal_element(n, n, scale * conv::<T>(0.5));
    project_psd(&base, floor)
}

/// Decide feasibility of `M(P) ⪯ tol·I` over `P_h, P_v ⪰ floor·I` by
/// projected subgradient descent on the maximum eigenvalue, using Polyak
/// steps, deterministic input-derived seeding, 5 restarts at graded scales
/// and 2000 iterations each. Returned certificates are re-validated with an
/// independent eigenvalue check before being trusted.
pub fn lmi_feasible<T: Scalar>(lmi: &DissipationLmi<T>, tol: T) -> Result<Feasibility<T>> {
    if !(tol.is_finite() && tol > T::zero()) {
        return Err(Error::InvalidTolerance);
    }
    let floor = conv::<T>(PSD_FLOOR_REL) * lmi.scale();
    let n = lmi.n_h + lmi.n_v;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_inputs(lmi, tol));

    let total_budget = RESTARTS * MAX_ITERS;
    let mut iters_done = 0usize;
    let mut best = T::max_value().unwrap_or_else(|| conv(f64::MAX));
    let mut best_at_90 = best;

    for restart in 0..RESTARTS {
        let scale = conv::<T>(INIT_SCALES[restart]);
        let mut p_h = random_spd(&mut rng, lmi.n_h, scale, floor);
        let mut p_v = random_spd(&mut rng, lmi.n_v, scale, floor);
        for _ in 0..MAX_ITERS {
            iters_done += 1;
            let m = lmi.eval(&p_h, &p_v);
            let eig = sym_eig(&m);
            let (f, at) = lambda_max(&eig);
            if f < best {
                best = f;
            }
            if iters_done == (9 * total_budget) / 10 {
                best_at_90 = best;
            }
            if f <= tol {
                let cert = LmiCertificate { p_h, p_v, residual: f };
                if validate_certificate(lmi, &cert, tol) {
                    return Ok(Feasibility::Feasible(cert));
                }
                break; // numerically unconfirmed: try another restart
            }
            let v = eig.eigenvectors.column(at).into_owned();
            let w = &lmi.g * &v;
            let s = v.rows(0, n).into_owned();
            let delta = &w * w.transpose() - &s * s.transpose();
            let grad_h = delta.view((0, 0), (lmi.n_h, lmi.n_h)).into_owned();
            let grad_v = delta.view((lmi.n_h, lmi.n_h), (lmi.n_v, lmi.n_v)).into_owned();
            let gn2 = grad_h.norm_squared() + grad_v.norm_squared();
            if gn2 <= conv::<T>(1e-300) {
                break; // flat direction: restart from a different point
            }
            let step = (f + tol) / gn2;
            p_h = project_psd(&(&p_h - &grad_h * step), floor);
            p_v = project_psd(&(&p_v - &grad_v * step), floor);
        }
    }
    // distinguish a plateau above the tolerance from a run that was still
    // making progress when the budget expired
    let improving = best_at_90 - best > conv::<T>(1e-3) * (best.abs() + tol);
    if improving {
        Ok(Feasibility::BudgetExceeded)
    } else {
        Ok(Feasibility::Infeasible)
    }
}

/// Independent certificate check: both storage blocks strictly positive
/// definite and `λ_max(M(P_h, P_v)) <= tol`, recomputed from scratch.
pub fn validate_certificate<T: Scalar>(
    lmi: &DissipationLmi<T>,
    cert: &LmiCertificate<T>,
    tol: T,
) -> bool {
    if cert.p_h.nrows() != lmi.n_h || cert.p_v.nrows() != lmi.n_v {
        return false;
    }
    if !(lambda_min(&cert.p_h) > T::zero() && lambda_min(&cert.p_v) > T::zero()) {
        return false;
    }
    let m = lmi.eval(&cert.p_h, &cert.p_v);
    let (hi, _) = lambda_max(&sym_eig(&m));
    hi <= tol
}

fn feasibility_at<T: Scalar>(
    disc: &DiscreteRoesser2D<T>,
    nu: T,
    rho: T,
) -> Result<Feasibility<T>> {
    let supply = indices_to_qsr(PassivityIndices::new(rho, nu), disc.output_dim());
    let lmi = build_dissipation_lmi(disc, &supply)?;
    let tol = conv::<T>(DEFAULT_FEASIBILITY_TOL_REL) * lmi.scale();
    lmi_feasible(&lmi, tol)
}

/// Largest output-feedback level `rho` for which the dissipation LMI with
/// supply `(-rho·I, I/2, -nu·I)` is feasible, located by bisection.
///
/// For `nu < 0` the search is clamped below at `-1/(4|nu|)`, the boundary of
/// the achievable index region, which produces the characteristic plateau in
/// level sweeps; otherwise the lower end is -1e6. The upper end is +1e6.
pub fn maximize_rho<T: Scalar>(
    disc: &DiscreteRoesser2D<T>,
    nu: T,
    tol_rho: T,
) -> Result<RhoMax<T>> {
    if !(tol_rho.is_finite() && tol_rho > T::zero()) {
        return Err(Error::InvalidTolerance);
    }
    if disc.input_dim() != disc.output_dim() {
        return Err(Error::DimensionMismatch("index supplies need square input/output"));
    }
    let big = conv::<T>(1e6);
    let clamp_active = nu < T::zero();
    let rho_lo = if clamp_active {
        -T::one() / (conv::<T>(4.0) * nu.abs())
    } else {
        -big
    };
    let mut budget_seen = false;
    let mut check = |rho: T| -> Result<Option<LmiCertificate<T>>> {
        match feasibility_at(disc, nu, rho)? {
            Feasibility::Feasible(cert) => Ok(Some(cert)),
            Feasibility::Infeasible => Ok(None),
            Feasibility::BudgetExceeded => {
                budget_seen = true;
                Ok(None)
            }
        }
    };

    let mut lo_cert = match check(rho_lo)? {
        Some(c) => c,
        None => return Err(Error::InfeasibleEverywhere),
    };
    if let Some(cert) = check(big)? {
        return Ok(RhoMax { rho: big, status: SweepStatus::Ok, certificate: Some(cert) });
    }
    let mut lo = rho_lo;
    let mut hi = big;
    while hi - lo > tol_rho {
        let mid = (lo + hi) * conv::<T>(0.5);
        match check(mid)? {
            Some(cert) => {
                lo = mid;
                lo_cert = cert;
            }
            None => hi = mid,
        }
    }
    let status = if clamp_active && lo == rho_lo {
        SweepStatus::Clamped
    } else if budget_seen {
        SweepStatus::Budget
    } else {
        SweepStatus::Ok
    };
    Ok(RhoMax { rho: lo, status, certificate: Some(lo_cert) })
}

/// Maximize the output-feedback level over a grid of sampling periods.
/// Grid points are independent and evaluated in parallel; rows are returned
/// in row-major (h1 outer, h2 inner) order.
pub fn sweep_rho<T: Scalar + Send + Sync>(
    model: &ContinuousRoesser2D<T>,
    nu: T,
    h1s: &[T],
    h2s: &[T],
    tol_rho: T,
) -> Vec<SweepRow<T>> {
    let points: Vec<(T, T)> = h1s
        .iter()
        .flat_map(|&h1| h2s.iter().map(move |&h2| (h1, h2)))
        .collect();
    points
        .par_iter()
        .map(|&(h1, h2)| {
            let run = SamplingSpec::new(h1, h2)
                .and_then(|s| sample_exact(model, &s))
                .and_then(|disc| maximize_rho(&disc, nu, tol_rho));
            match run {
                Ok(r) => SweepRow { h1, h2, rho: Some(r.rho), status: r.status },
                Err(_) => SweepRow { h1, h2, rho: None, status: SweepStatus::Infeasible },
            }
        })
        .collect()
}

/// Verify the dissipation inequality on a stored trajectory for every grid
/// prefix, with quadratic storage taken from the certificate. Runs in time
/// linear in the grid size via prefix sums.
pub fn empirical_dissipativity_check<T: Scalar>(
    traj: &Grid2DTrajectory<T>,
    cert: &LmiCertificate<T>,
    supply: &QsrSupply<T>,
    tol: T,
) -> bool {
    let (n1, n2) = (traj.n1, traj.n2);
    if n1 == 0 || n2 == 0 {
        return true;
    }
    let n_h = cert.p_h.nrows();
    let n_v = cert.p_v.nrows();
    if traj.xh.get(0, 0).len() != n_h
        || traj.xv.get(0, 0).len() != n_v
        || traj.y.get(0, 0).len() != supply.output_dim()
        || traj.u.get(0, 0).len() != supply.input_dim()
    {
        return false;
    }
    let quad = |p: &DMatrix<T>, x: &DVector<T>| x.dot(&(p * x));

    // cumulative vertical storage along i, per column j in 0..=n2
    let mut cvv = vec![T::zero(); (n1 + 1) * (n2 + 1)];
    for j in 0..=n2 {
        let mut acc = T::zero();
        for i in 0..n1 {
            acc += quad(&cert.p_v, traj.xv.get(i, j));
            cvv[(i + 1) * (n2 + 1) + j] = acc;
        }
    }
    // cumulative horizontal storage along j, per row i in 0..=n1
    let mut cvh = vec![T::zero(); (n1 + 1) * (n2 + 1)];
    for i in 0..=n1 {
        let mut acc = T::zero();
        for j in 0..n2 {
            acc += quad(&cert.p_h, traj.xh.get(i, j));
            cvh[i * (n2 + 1) + j + 1] = acc;
        }
    }
    // cumulative supply over rectangles
    let mut cs = vec![T::zero(); (n1 + 1) * (n2 + 1)];
    for i in 0..n1 {
        for j in 0..n2 {
            let s = supply.evaluate(traj.y.get(i, j), traj.u.get(i, j));
            cs[(i + 1) * (n2 + 1) + j + 1] = cs[i * (n2 + 1) + j + 1]
                + cs[(i + 1) * (n2 + 1) + j]
                - cs[i * (n2 + 1) + j]
                + s;
        }
    }
    for n1p in 1..=n1 {
        for n2p in 1..=n2 {
            let lhs = (cvv[n1p * (n2 + 1) + n2p] - cvv[n1p * (n2 + 1)])
                + (cvh[n1p * (n2 + 1) + n2p] - cvh[n2p]);
            if lhs > cs[n1p * (n2 + 1) + n2p] + tol {
                return false;
            }
        }
    }
    true
}
