//! Deterministic 2-D grid simulation of discrete Roesser systems: open loop,
//! quantized closed loop, and event-triggered closed loop, plus empirical
//! L2-gain estimation.
//!
//! The grid is indexed `(i, j)` with `i < n1` along the (bounded, spatial)
//! horizontal coordinate and `j < n2` along the vertical one. Iteration runs
//! outer-`j`, inner-`i`: within a column `j` the horizontal recursion
//! `x_h(i+1, j)` consumes column-`j` data at `i`, while `x_v(i, j+1)` only
//! feeds the next column, so no wavefront scheduling is needed.
//!
//! Event-triggered columns are decided in two passes: the column is first
//! evolved under the held transmission (the no-update hypothesis), the
//! trigger condition is evaluated on the freshly quantized outputs of that
//! pass, and only if it fires is the column re-evolved with point-local fresh
//! transmission, which then takes effect at `j` itself. The quantized
//! profile the decision was made on is stored alongside the trajectory so
//! every decision can be replayed from stored data.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::DiscreteRoesser2D;
use crate::network::TriggerParams;
use crate::quantize::{quantize_vec, LogQuantizerSpec};
use crate::scalar::{conv, Scalar};

/// States larger than this in magnitude abort the run as divergent.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// Dense per-grid-point storage of vectors, indexed `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D<T: Scalar> {
    n1: usize,
    n2: usize,
    data: Vec<DVector<T>>,
}

impl<T: Scalar> Field2D<T> {
    pub fn from_element(n1: usize, n2: usize, v: DVector<T>) -> Self {
        Self { n1, n2, data: vec![v; n1 * n2] }
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> DVector<T>) -> Self {
        let mut data = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                data.push(f(i, j));
            }
        }
        Self { n1, n2, data }
    }

    pub fn zeros(n1: usize, n2: usize, dim: usize) -> Self {
        Self::from_element(n1, n2, DVector::zeros(dim))
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn get(&self, i: usize, j: usize) -> &DVector<T> {
        &self.data[i * self.n2 + j]
    }

    fn set(&mut self, i: usize, j: usize, v: DVector<T>) {
        self.data[i * self.n2 + j] = v;
    }

    /// Sum of squared Euclidean norms over all grid points.
    pub fn energy(&self) -> T {
        let mut e = T::zero();
        for v in &self.data {
            e += v.norm_squared();
        }
        e
    }
}

/// Boundary data: `xh0[j] = x_h(0, j)` along the vertical edge and
/// `xv0[i] = x_v(i, 0)` along the horizontal edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions<T: Scalar> {
    pub xh0: Vec<DVector<T>>,
    pub xv0: Vec<DVector<T>>,
}

impl<T: Scalar> BoundaryConditions<T> {
    pub fn new(xh0: Vec<DVector<T>>, xv0: Vec<DVector<T>>) -> Self {
        Self { xh0, xv0 }
    }

    /// Boundary data for scalar horizontal and vertical states.
    pub fn from_scalars(xh0: Vec<T>, xv0: Vec<T>) -> Self {
        Self {
            xh0: xh0.into_iter().map(|v| DVector::from_element(1, v)).collect(),
            xv0: xv0.into_iter().map(|v| DVector::from_element(1, v)).collect(),
        }
    }

    pub fn zero(n_h: usize, n_v: usize, n1: usize, n2: usize) -> Self {
        Self {
            xh0: vec![DVector::zeros(n_h); n2],
            xv0: vec![DVector::zeros(n_v); n1],
        }
    }
}

/// Feedback controller: a static output gain or a dynamic discrete Roesser
/// model with its own boundary data.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec<T: Scalar> {
    StaticGain { k: T },
    Dynamic { model: DiscreteRoesser2D<T>, boundary: BoundaryConditions<T> },
}

/// Complete record of one simulation run.
///
/// `xh` has shape `(n1+1) x n2` (the extra row is the outgoing horizontal
/// state), `xv` has shape `n1 x (n2+1)`; all signal fields are `n1 x n2`.
/// `y_quant` holds the transmitted value in effect at each grid point;
/// `trigger_probe` (present for event-triggered runs) holds the freshly
/// quantized output profile each trigger decision was evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2DTrajectory<T: Scalar> {
    pub n1: usize,
    pub n2: usize,
    pub xh: Field2D<T>,
    pub xv: Field2D<T>,
    pub u: Field2D<T>,
    pub y: Field2D<T>,
    pub y_quant: Field2D<T>,
    pub u_c: Option<Field2D<T>>,
    pub y_c: Option<Field2D<T>>,
    pub y_c_quant: Option<Field2D<T>>,
    pub trigger_probe: Option<Field2D<T>>,
    /// Strictly increasing transmission columns; first entry is 0 for closed
    /// loops (every column for non-triggered closed loops, empty for open
    /// loops).
    pub trigger_instants: Vec<usize>,
}

/// Empirical L2-gain fit over growing column prefixes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate<T: Scalar> {
    /// Fitted slope of cumulative output energy against cumulative reference
    /// energy (zero when the reference is identically zero).
    pub gamma_sq: T,
    /// Fitted intercept: the boundary-energy allowance. For a zero reference
    /// this is the total output energy.
    pub offset: T,
    /// Set when the fit does not stabilize over growing prefixes.
    pub diverging: bool,
}

/// Which signal the gain estimate reads as the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputSelection {
    PlantOutput,
    ControllerOutput,
    Transmitted,
    /// Plant and controller outputs stacked.
    Stacked,
}

fn guard<T: Scalar>(v: &DVector<T>, i: usize, j: usize) -> Result<()> {
    let lim = conv::<T>(DIVERGENCE_GUARD);
    for &x in v.iter() {
        if !x.is_finite() || x.abs() > lim {
            return Err(Error::NonFiniteState { i, j });
        }
    }
    Ok(())
}

fn check_boundary<T: Scalar>(
    bc: &BoundaryConditions<T>,
    n_h: usize,
    n_v: usize,
    n1: usize,
    n2: usize,
) -> Result<()> {
    if bc.xh0.len() != n2 || bc.xv0.len() != n1 {
        return Err(Error::DimensionMismatch("boundary sequence lengths"));
    }
    if bc.xh0.iter().any(|v| v.len() != n_h) || bc.xv0.iter().any(|v| v.len() != n_v) {
        return Err(Error::DimensionMismatch("boundary vector dimensions"));
    }
    Ok(())
}

/// Simulate the open-loop recursion with an explicit input field.
pub fn simulate_open_loop<T: Scalar>(
    disc: &DiscreteRoesser2D<T>,
    bc: &BoundaryConditions<T>,
    input_field: impl Fn(usize, usize) -> DVector<T>,
    n1: usize,
    n2: usize,
) -> Result<Grid2DTrajectory<T>> {
    let (n_h, n_v, m, p) = (disc.n_h(), disc.n_v(), disc.input_dim(), disc.output_dim());
    check_boundary(bc, n_h, n_v, n1, n2)?;
    let mut xh = Field2D::zeros(n1 + 1, n2, n_h);
    let mut xv = Field2D::zeros(n1, n2 + 1, n_v);
    let mut u = Field2D::zeros(n1, n2, m);
    let mut y = Field2D::zeros(n1, n2, p);

    let mut xv_col: Vec<DVector<T>> = bc.xv0.clone();
    for j in 0..n2 {
        for (i, v) in xv_col.iter().enumerate() {
            xv.set(i, j, v.clone());
        }
        let mut xh_i = bc.xh0[j].clone();
        for i in 0..n1 {
            let u_ij = input_field(i, j);
            if u_ij.len() != m {
                return Err(Error::DimensionMismatch("input field vector dimension"));
            }
            let y_ij = &disc.c1 * &xh_i + &disc.c2 * &xv_col[i] + &disc.d * &u_ij;
            let xh_next = &disc.a11 * &xh_i + &disc.a12 * &xv_col[i] + &disc.b1 * &u_ij;
            let xv_next = &disc.a21 * &xh_i + &disc.a22 * &xv_col[i] + &disc.b2 * &u_ij;
            guard(&y_ij, i, j)?;
            guard(&xh_next, i, j)?;
            guard(&xv_next, i, j)?;
            xh.set(i, j, xh_i.clone());
            y.set(i, j, y_ij);
            u.set(i, j, u_ij);
            xv_col[i] = xv_next;
            xh_i = xh_next;
        }
        xh.set(n1, j, xh_i);
    }
    for (i, v) in xv_col.iter().enumerate() {
        xv.set(i, n2, v.clone());
    }
    let y_quant = y.clone();
    Ok(Grid2DTrajectory {
        n1,
        n2,
        xh,
        xv,
        u,
        y,
        y_quant,
        u_c: None,
        y_c: None,
        y_c_quant: None,
        trigger_probe: None,
        trigger_instants: Vec::new(),
    })
}

/// Evaluate the per-column trigger condition: with `e(i) = current - held`,
/// the column transmits when
/// `sum_i |eps·e(i) + (nu_c/eps)·current(i)|^2 >
///  threshold_coeff · sum_i |current(i)|^2`.
pub fn trigger_step<T: Scalar>(
    params: &TriggerParams<T>,
    current: &[DVector<T>],
    held: &[DVector<T>],
) -> Result<bool> {
    if current.len() != held.len() {
        return Err(Error::DimensionMismatch("trigger column lengths"));
    }
    if !(params.eps_sq > T::zero()) {
        return Err(Error::QNotNegative);
    }
    let eps = params.eps_sq.sqrt();
    let scale = params.nu_c / eps;
    let mut lhs = T::zero();
    let mut rhs = T::zero();
    for (cur, hld) in current.iter().zip(held) {
        if cur.len() != hld.len() {
            return Err(Error::DimensionMismatch("trigger vector dimensions"));
        }
        let e = cur - hld;
        lhs += (e * eps + cur * scale).norm_squared();
        rhs += cur.norm_squared();
    }
    Ok(lhs > params.threshold_coeff * rhs)
}

enum TxMode<'a, T: Scalar> {
    Fresh,
    Held(&'a [DVector<T>]),
}

struct ColumnData<T: Scalar> {
    xh: Vec<DVector<T>>,
    xv_next: Vec<DVector<T>>,
    y: Vec<DVector<T>>,
    u: Vec<DVector<T>>,
    y_quant: Vec<DVector<T>>,
    tx: Vec<DVector<T>>,
    u_c: Vec<DVector<T>>,
    y_c: Vec<DVector<T>>,
    y_c_quant: Vec<DVector<T>>,
    ctrl_xh: Vec<DVector<T>>,
    ctrl_xv_next: Vec<DVector<T>>,
}

struct LoopContext<'a, T: Scalar> {
    disc: &'a DiscreteRoesser2D<T>,
    ctrl: &'a ControllerSpec<T>,
    qp: Option<&'a LogQuantizerSpec<T>>,
    qc: Option<&'a LogQuantizerSpec<T>>,
    plant_ff: bool,
}

impl<T: Scalar> LoopContext<'_, T> {
    #[allow(clippy::too_many_arguments)]
    fn evolve_column(
        &self,
        j: usize,
        xh0: &DVector<T>,
        xv_col: &[DVector<T>],
        ctrl_xh0: Option<&DVector<T>>,
        ctrl_xv_col: &[DVector<T>],
        r_p: &impl Fn(usize, usize) -> DVector<T>,
        r_c: &impl Fn(usize, usize) -> DVector<T>,
        mode: TxMode<'_, T>,
    ) -> Result<ColumnData<T>> {
        let disc = self.disc;
        let n1 = xv_col.len();
        let mut col = ColumnData {
            xh: Vec::with_capacity(n1 + 1),
            xv_next: Vec::with_capacity(n1),
            y: Vec::with_capacity(n1),
            u: Vec::with_capacity(n1),
            y_quant: Vec::with_capacity(n1),
            tx: Vec::with_capacity(n1),
            u_c: Vec::with_capacity(n1),
            y_c: Vec::with_capacity(n1),
            y_c_quant: Vec::with_capacity(n1),
            ctrl_xh: Vec::new(),
            ctrl_xv_next: Vec::new(),
        };
        let mut xh_i = xh0.clone();
        let mut ctrl_xh_i = ctrl_xh0.cloned();
        for i in 0..n1 {
            let (y_ij, u_ij, yq_ij, tx_ij, uc_ij, yc_ij, ycq_ij);
            if !self.plant_ff {
                y_ij = &disc.c1 * &xh_i + &disc.c2 * &xv_col[i];
                yq_ij = match self.qp {
                    Some(q) => quantize_vec(q, &y_ij),
                    None => y_ij.clone(),
                };
                tx_ij = match &mode {
                    TxMode::Fresh => yq_ij.clone(),
                    TxMode::Held(h) => h[i].clone(),
                };
                uc_ij = r_c(i, j) + &tx_ij;
                yc_ij = self.controller_output(&uc_ij, ctrl_xh_i.as_ref(), ctrl_xv_col, i, true);
                ycq_ij = match self.qc {
                    Some(q) => quantize_vec(q, &yc_ij),
                    None => yc_ij.clone(),
                };
                u_ij = r_p(i, j) - &ycq_ij;
            } else {
                // plant feedthrough: the controller is strictly proper, so
                // its output is state-only and the loop resolves forward
                yc_ij =
                    self.controller_output(&DVector::zeros(0), ctrl_xh_i.as_ref(), ctrl_xv_col, i, false);
                ycq_ij = match self.qc {
                    Some(q) => quantize_vec(q, &yc_ij),
                    None => yc_ij.clone(),
                };
                u_ij = r_p(i, j) - &ycq_ij;
                y_ij = &disc.c1 * &xh_i + &disc.c2 * &xv_col[i] + &disc.d * &u_ij;
                yq_ij = match self.qp {
                    Some(q) => quantize_vec(q, &y_ij),
                    None => y_ij.clone(),
                };
                tx_ij = match &mode {
                    TxMode::Fresh => yq_ij.clone(),
                    TxMode::Held(h) => h[i].clone(),
                };
                uc_ij = r_c(i, j) + &tx_ij;
            }
            let xh_next = &disc.a11 * &xh_i + &disc.a12 * &xv_col[i] + &disc.b1 * &u_ij;
            let xv_next = &disc.a21 * &xh_i + &disc.a22 * &xv_col[i] + &disc.b2 * &u_ij;
            guard(&y_ij, i, j)?;
            guard(&xh_next, i, j)?;
            guard(&xv_next, i, j)?;
            if let ControllerSpec::Dynamic { model, .. } = self.ctrl {
                let cxh = ctrl_xh_i.as_ref().expect("dynamic controller state");
                let cxh_next = &model.a11 * cxh + &model.a12 * &ctrl_xv_col[i] + &model.b1 * &uc_ij;
                let cxv_next = &model.a21 * cxh + &model.a22 * &ctrl_xv_col[i] + &model.b2 * &uc_ij;
                guard(&cxh_next, i, j)?;
                guard(&cxv_next, i, j)?;
                col.ctrl_xh.push(cxh.clone());
                col.ctrl_xv_next.push(cxv_next);
                ctrl_xh_i = Some(cxh_next);
            }
            col.xh.push(xh_i.clone());
            col.y.push(y_ij);
            col.u.push(u_ij);
            col.y_quant.push(yq_ij);
            col.tx.push(tx_ij);
            col.u_c.push(uc_ij);
            col.y_c.push(yc_ij);
            col.y_c_quant.push(ycq_ij);
            col.xv_next.push(xv_next);
            xh_i = xh_next;
        }
        col.xh.push(xh_i);
        if let Some(c) = ctrl_xh_i {
            col.ctrl_xh.push(c);
        }
        Ok(col)
    }

    fn controller_output(
        &self,
        u_c: &DVector<T>,
        ctrl_xh: Option<&DVector<T>>,
        ctrl_xv_col: &[DVector<T>],
        i: usize,
        with_feedthrough: bool,
    ) -> DVector<T> {
        match self.ctrl {
            ControllerSpec::StaticGain { k } => u_c * *k,
            ControllerSpec::Dynamic { model, .. } => {
                let xh = ctrl_xh.expect("dynamic controller state");
                let mut out = &model.c1 * xh + &model.c2 * &ctrl_xv_col[i];
                if with_feedthrough {
                    out += &model.d * u_c;
                }
                out
            }
        }
    }
}

/// Simulate the feedback loop `u_p = r_p - Q_c(y_c)`, `u_c = r_c + tx` where
/// `tx` is the (possibly event-triggered) transmitted plant output.
///
/// Absent quantizers act as identities; absent trigger transmits every
/// column. With a trigger the plant-side quantizer is required, column 0
/// always transmits, and a firing column transmits the fresh value at that
/// column itself.
#[allow(clippy::too_many_arguments)]
pub fn simulate_closed_loop<T: Scalar>(
    disc: &DiscreteRoesser2D<T>,
    ctrl: &ControllerSpec<T>,
    qp: Option<&LogQuantizerSpec<T>>,
    qc: Option<&LogQuantizerSpec<T>>,
    trig: Option<&TriggerParams<T>>,
    r_p: impl Fn(usize, usize) -> DVector<T>,
    r_c: impl Fn(usize, usize) -> DVector<T>,
    bc: &BoundaryConditions<T>,
    n1: usize,
    n2: usize,
) -> Result<Grid2DTrajectory<T>> {
    let (n_h, n_v, m, p) = (disc.n_h(), disc.n_v(), disc.input_dim(), disc.output_dim());
    check_boundary(bc, n_h, n_v, n1, n2)?;
    if trig.is_some() && qp.is_none() {
        return Err(Error::TriggerRequiresQuantizer);
    }
    let plant_ff = disc.d.amax() > T::zero();
    match ctrl {
        ControllerSpec::StaticGain { .. } => {
            if plant_ff {
                return Err(Error::AlgebraicLoop);
            }
        }
        ControllerSpec::Dynamic { model, boundary } => {
            let ctrl_ff = model.d.amax() > T::zero();
            if plant_ff && ctrl_ff {
                return Err(Error::AlgebraicLoop);
            }
            if model.input_dim() != p || model.output_dim() != m {
                return Err(Error::DimensionMismatch("controller input/output dimensions"));
            }
            check_boundary(boundary, model.n_h(), model.n_v(), n1, n2)?;
        }
    }

    let ctx = LoopContext { disc, ctrl, qp, qc, plant_ff };
    let (ctrl_nv, ctrl_p) = match ctrl {
        ControllerSpec::Dynamic { model, .. } => (model.n_v(), model.output_dim()),
        ControllerSpec::StaticGain { .. } => (0, m),
    };

    let mut xh = Field2D::zeros(n1 + 1, n2, n_h);
    let mut xv = Field2D::zeros(n1, n2 + 1, n_v);
    let mut u = Field2D::zeros(n1, n2, m);
    let mut y = Field2D::zeros(n1, n2, p);
    let mut y_quant = Field2D::zeros(n1, n2, p);
    let mut u_c = Field2D::zeros(n1, n2, p);
    let mut y_c = Field2D::zeros(n1, n2, ctrl_p);
    let mut y_c_quant = Field2D::zeros(n1, n2, ctrl_p);
    let mut probe = trig.map(|_| Field2D::zeros(n1, n2, p));
    let mut instants = Vec::new();

    let mut xv_col: Vec<DVector<T>> = bc.xv0.clone();
    let mut ctrl_xv_col: Vec<DVector<T>> = match ctrl {
        ControllerSpec::Dynamic { boundary, .. } => boundary.xv0.clone(),
        ControllerSpec::StaticGain { .. } => vec![DVector::zeros(ctrl_nv); n1],
    };
    let mut held: Vec<DVector<T>> = Vec::new();

    for j in 0..n2 {
        for (i, v) in xv_col.iter().enumerate() {
            xv.set(i, j, v.clone());
        }
        let ctrl_xh0 = match ctrl {
            ControllerSpec::Dynamic { boundary, .. } => Some(boundary.xh0[j].clone()),
            ControllerSpec::StaticGain { .. } => None,
        };
        let evolve = |mode: TxMode<'_, T>| {
            ctx.evolve_column(
                j,
                &bc.xh0[j],
                &xv_col,
                ctrl_xh0.as_ref(),
                &ctrl_xv_col,
                &r_p,
                &r_c,
                mode,
            )
        };

        let col = match trig {
            None => {
                instants.push(j);
                evolve(TxMode::Fresh)?
            }
            Some(params) => {
                if j == 0 {
                    let col = evolve(TxMode::Fresh)?;
                    held = col.y_quant.clone();
                    instants.push(0);
                    if let Some(pf) = probe.as_mut() {
                        for (i, v) in col.y_quant.iter().enumerate() {
                            pf.set(i, j, v.clone());
                        }
                    }
                    col
                } else {
                    let pass1 = evolve(TxMode::Held(&held))?;
                    if let Some(pf) = probe.as_mut() {
                        for (i, v) in pass1.y_quant.iter().enumerate() {
                            pf.set(i, j, v.clone());
                        }
                    }
                    if trigger_step(params, &pass1.y_quant, &held)? {
                        let col = evolve(TxMode::Fresh)?;
                        held = col.y_quant.clone();
                        instants.push(j);
                        col
                    } else {
                        pass1
                    }
                }
            }
        };

        for i in 0..n1 {
            xh.set(i, j, col.xh[i].clone());
            y.set(i, j, col.y[i].clone());
            u.set(i, j, col.u[i].clone());
            y_quant.set(i, j, col.tx[i].clone());
            u_c.set(i, j, col.u_c[i].clone());
            y_c.set(i, j, col.y_c[i].clone());
            y_c_quant.set(i, j, col.y_c_quant[i].clone());
        }
        xh.set(n1, j, col.xh[n1].clone());
        xv_col = col.xv_next;
        if matches!(ctrl, ControllerSpec::Dynamic { .. }) {
            ctrl_xv_col = col.ctrl_xv_next;
        }
    }
    for (i, v) in xv_col.iter().enumerate() {
        xv.set(i, n2, v.clone());
    }

    Ok(Grid2DTrajectory {
        n1,
        n2,
        xh,
        xv,
        u,
        y,
        y_quant,
        u_c: Some(u_c),
        y_c: Some(y_c),
        y_c_quant: Some(y_c_quant),
        trigger_probe: probe,
        trigger_instants: instants,
    })
}

/// Replay the trigger decisions of a stored event-triggered run: the
/// decision for column `j >= 1` compares the stored probe column against the
/// transmission in effect at column `j - 1`.
pub fn replay_trigger_decisions<T: Scalar>(
    traj: &Grid2DTrajectory<T>,
    params: &TriggerParams<T>,
) -> Result<Vec<bool>> {
    let probe = traj
        .trigger_probe
        .as_ref()
        .ok_or(Error::DimensionMismatch("trajectory has no trigger probe"))?;
    let mut fired = vec![true]; // column 0 always transmits
    for j in 1..traj.n2 {
        let current: Vec<DVector<T>> = (0..traj.n1).map(|i| probe.get(i, j).clone()).collect();
        let held: Vec<DVector<T>> =
            (0..traj.n1).map(|i| traj.y_quant.get(i, j - 1).clone()).collect();
        fired.push(trigger_step(params, &current, &held)?);
    }
    Ok(fired)
}

/// Largest pointwise violation of the Roesser update and output equations on
/// a stored trajectory. Independent recheck used by tests and diagnostics.
pub fn recursion_residual<T: Scalar>(
    disc: &DiscreteRoesser2D<T>,
    traj: &Grid2DTrajectory<T>,
) -> T {
    let mut worst = T::zero();
    for i in 0..traj.n1 {
        for j in 0..traj.n2 {
            let xh_ij = traj.xh.get(i, j);
            let xv_ij = traj.xv.get(i, j);
            let u_ij = traj.u.get(i, j);
            let xh_pred = &disc.a11 * xh_ij + &disc.a12 * xv_ij + &disc.b1 * u_ij;
            let xv_pred = &disc.a21 * xh_ij + &disc.a22 * xv_ij + &disc.b2 * u_ij;
            let y_pred = &disc.c1 * xh_ij + &disc.c2 * xv_ij + &disc.d * u_ij;
            worst = worst
                .max((traj.xh.get(i + 1, j) - xh_pred).amax())
                .max((traj.xv.get(i, j + 1) - xv_pred).amax())
                .max((traj.y.get(i, j) - y_pred).amax());
        }
    }
    worst
}

fn least_squares_line<T: Scalar>(xs: &[T], ys: &[T]) -> (T, T) {
    let n = conv::<T>(xs.len() as f64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det.abs() <= T::default_epsilon() * (T::one() + sxx) {
        return (T::zero(), if xs.is_empty() { T::zero() } else { sy / n });
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Fit cumulative output energy against cumulative reference energy over
/// growing column prefixes. A `None` reference is the zero field, in which
/// case the slope is zero and the offset is the total output energy. The
/// `diverging` flag is set when the slope over the full range exceeds twice
/// the slope over the first half, the signature of a non-convergent series.
pub fn estimate_l2_gain<T: Scalar>(
    traj: &Grid2DTrajectory<T>,
    reference: Option<&Field2D<T>>,
    selection: OutputSelection,
) -> GainEstimate<T> {
    let col_energy = |field: &Field2D<T>, j: usize| {
        let mut e = T::zero();
        for i in 0..traj.n1 {
            e += field.get(i, j).norm_squared();
        }
        e
    };
    let mut xs = Vec::with_capacity(traj.n2);
    let mut ys = Vec::with_capacity(traj.n2);
    let mut cum_x = T::zero();
    let mut cum_y = T::zero();
    for j in 0..traj.n2 {
        let mut e = match selection {
            OutputSelection::PlantOutput => col_energy(&traj.y, j),
            OutputSelection::Transmitted => col_energy(&traj.y_quant, j),
            OutputSelection::ControllerOutput => {
                traj.y_c.as_ref().map(|f| col_energy(f, j)).unwrap_or_else(T::zero)
            }
            OutputSelection::Stacked => {
                col_energy(&traj.y, j)
                    + traj.y_c.as_ref().map(|f| col_energy(f, j)).unwrap_or_else(T::zero)
            }
        };
        if !e.is_finite() {
            e = conv::<T>(DIVERGENCE_GUARD);
        }
        cum_y += e;
        cum_x += reference.map(|r| col_energy(r, j)).unwrap_or_else(T::zero);
        xs.push(cum_x);
        ys.push(cum_y);
    }
    let total_y = *ys.last().unwrap_or(&T::zero());
    let total_x = *xs.last().unwrap_or(&T::zero());
    if total_x <= T::zero() {
        return GainEstimate { gamma_sq: T::zero(), offset: total_y, diverging: false };
    }
    let (slope_full, intercept) = least_squares_line(&xs, &ys);
    let half = (traj.n2 / 2).max(2).min(traj.n2);
    let (slope_half, _) = least_squares_line(&xs[..half], &ys[..half]);
    let diverging = slope_full > conv::<T>(2.0) * slope_half.max(T::zero()) + conv::<T>(1e-12);
    GainEstimate { gamma_sq: slope_full.max(T::zero()), offset: intercept, diverging }
}
