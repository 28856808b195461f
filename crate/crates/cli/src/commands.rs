//! The four analysis commands and their CSV emitters.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use r2dnet_core::discretize::{sample_exact, SamplingSpec};
use r2dnet_core::lmi::{maximize_rho, sweep_rho};
use r2dnet_core::model::static_gain_indices;
use r2dnet_core::network::{quantized_loop_report, search_beta, trigger_params};
use r2dnet_core::quantize::LogQuantizerSpec;
use r2dnet_core::sim::{
    simulate_closed_loop, simulate_open_loop, BoundaryConditions, ControllerSpec,
    Grid2DTrajectory,
};
use r2dnet_core::{DiscreteRoesser2D64, Error};

use crate::config::{fmt_f64, BetaSpec, RunConfig};

/// Process exit codes: 0 success/stable, 1 condition failed, 2 config
/// error, 3 search exhausted.
pub const EXIT_CONDITION_FAILED: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_SEARCH_EXHAUSTED: i32 = 3;

pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl CmdError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG_ERROR, message: message.into() }
    }

    fn failed(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONDITION_FAILED, message: message.into() }
    }
}

type CmdResult = Result<(), CmdError>;

fn write_file(dir: &Path, name: &str, contents: &str) -> CmdResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::failed(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CmdError::failed(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sampled_model(cfg: &RunConfig) -> Result<DiscreteRoesser2D64, CmdError> {
    let model = cfg.plant_model().map_err(CmdError::config)?;
    let spec = SamplingSpec::new(cfg.h1, cfg.h2)
        .map_err(|e| CmdError::config(e.to_string()))?;
    sample_exact(&model, &spec).map_err(|e| CmdError::failed(e.to_string()))
}

fn csv_block(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name},{},{}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_f64(m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
}

pub fn cmd_discretize(cfg: &RunConfig, out_dir: &Path) -> CmdResult {
    let disc = sampled_model(cfg)?;
    let mut out = String::new();
    csv_block(&mut out, "a11", &disc.a11);
    csv_block(&mut out, "a12", &disc.a12);
    csv_block(&mut out, "a21", &disc.a21);
    csv_block(&mut out, "a22", &disc.a22);
    csv_block(&mut out, "b1", &disc.b1);
    csv_block(&mut out, "b2", &disc.b2);
    csv_block(&mut out, "c1", &disc.c1);
    csv_block(&mut out, "c2", &disc.c2);
    csv_block(&mut out, "d", &disc.d);
    csv_block(&mut out, "h1", &DMatrix::from_element(1, 1, cfg.h1));
    csv_block(&mut out, "h2", &DMatrix::from_element(1, 1, cfg.h2));
    print!("{out}");
    write_file(out_dir, "discrete_model.csv", &out)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Parse a `lo:hi:count` range argument.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range must be a:b:n, got `{s}`"));
    }
    let a: f64 = parts[0].parse().map_err(|_| format!("bad range start `{}`", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|_| format!("bad range end `{}`", parts[1]))?;
    let n: usize = parts[2].parse().map_err(|_| format!("bad range count `{}`", parts[2]))?;
    if n == 0 {
        return Err("range count must be positive".into());
    }
    Ok(linspace(a, b, n))
}

pub fn cmd_sweep_rho(
    cfg: &RunConfig,
    out_dir: &Path,
    h1_range: Option<&str>,
    h2_range: Option<&str>,
) -> CmdResult {
    let h1s = match h1_range {
        Some(s) => parse_range(s).map_err(CmdError::config)?,
        None => linspace(0.02, 0.3, 7),
    };
    let h2s = match h2_range {
        Some(s) => parse_range(s).map_err(CmdError::config)?,
        None => linspace(0.1, 3.0, 7),
    };
    let model = cfg.plant_model().map_err(CmdError::config)?;
    let rows = sweep_rho(&model, cfg.nu_p, &h1s, &h2s, 1e-3);
    let mut out = String::from("h1,h2,rho_max,status\n");
    for row in &rows {
        let rho = row.rho.map(fmt_f64).unwrap_or_else(|| "nan".into());
        let _ = writeln!(out, "{},{},{rho},{}", fmt_f64(row.h1), fmt_f64(row.h2), row.status.as_str());
    }
    let clamped = rows.iter().filter(|r| r.status.as_str() == "clamped").count();
    let infeasible = rows.iter().filter(|r| r.status.as_str() == "infeasible").count();
    println!(
        "sweep: {} points, {clamped} clamped, {infeasible} infeasible",
        rows.len()
    );
    write_file(out_dir, "fig4.csv", &out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Open,
    Closed,
    ClosedQuantized,
    ClosedTriggered,
}

impl SimMode {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "open" => Ok(SimMode::Open),
            "closed" => Ok(SimMode::Closed),
            "closed-quantized" => Ok(SimMode::ClosedQuantized),
            "closed-triggered" => Ok(SimMode::ClosedTriggered),
            other => Err(format!(
                "mode must be open|closed|closed-quantized|closed-triggered, got `{other}`"
            )),
        }
    }
}

fn vec_cell(v: &DVector<f64>) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn traj_csv(traj: &Grid2DTrajectory<f64>) -> String {
    let mut out = String::from("i,j,y,y_transmitted,u_p,triggered\n");
    for i in 0..traj.n1 {
        for j in 0..traj.n2 {
            let triggered = traj.trigger_instants.binary_search(&j).is_ok() as u8;
            let _ = writeln!(
                out,
                "{i},{j},{},{},{},{triggered}",
                vec_cell(traj.y.get(i, j)),
                vec_cell(traj.y_quant.get(i, j)),
                vec_cell(traj.u.get(i, j)),
            );
        }
    }
    out
}

fn resolve_rho_c(cfg: &RunConfig) -> Result<f64, CmdError> {
    match cfg.rho_c {
        Some(r) => Ok(r),
        None => static_gain_indices(cfg.controller_k, cfg.nu_c)
            .map_err(|e| CmdError::config(e.to_string())),
    }
}

fn resolve_rho_p(cfg: &RunConfig, disc: &DiscreteRoesser2D64) -> Result<f64, CmdError> {
    match cfg.rho_p {
        Some(r) => Ok(r),
        None => {
            let r = maximize_rho(disc, cfg.nu_p, 1e-3)
                .map_err(|e| CmdError::failed(format!("level maximization failed: {e}")))?;
            println!("rho_p={} (computed, status {})", fmt_f64(r.rho), r.status.as_str());
            Ok(r.rho)
        }
    }
}

fn resolve_beta(cfg: &RunConfig, rho_p: f64, rho_c: f64) -> Result<(f64, f64), CmdError> {
    match cfg.beta {
        BetaSpec::Pair(b1, b2) => Ok((b1, b2)),
        BetaSpec::Search => {
            match search_beta(rho_p, cfg.nu_p, rho_c, cfg.nu_c, cfg.delta_p, cfg.delta_c) {
                Some(pair) => {
                    println!("beta1={} beta2={} (search)", fmt_f64(pair.0), fmt_f64(pair.1));
                    Ok(pair)
                }
                None => Err(CmdError {
                    code: EXIT_SEARCH_EXHAUSTED,
                    message: "no (beta1, beta2) on the search grid stabilizes the loop".into(),
                }),
            }
        }
    }
}

pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path, mode: SimMode) -> CmdResult {
    let disc = sampled_model(cfg)?;
    if disc.n_h() != 1 || disc.n_v() != 1 {
        return Err(CmdError::config(
            "simulate currently expects scalar horizontal/vertical states",
        ));
    }
    let (xh0, xv0) = cfg.boundaries().map_err(CmdError::config)?;
    let bc = BoundaryConditions::from_scalars(xh0, xv0);
    let zero = |_: usize, _: usize| DVector::<f64>::zeros(1);

    let traj = match mode {
        SimMode::Open => simulate_open_loop(&disc, &bc, zero, cfg.n1, cfg.n2),
        SimMode::Closed | SimMode::ClosedQuantized | SimMode::ClosedTriggered => {
            let ctrl = ControllerSpec::StaticGain { k: cfg.controller_k };
            let (qp, qc);
            if matches!(mode, SimMode::Closed) {
                qp = None;
                qc = None;
            } else {
                let build = |delta: f64, dz: f64| {
                    LogQuantizerSpec::from_delta(delta)
                        .and_then(|q| q.with_dead_zone(dz))
                        .map_err(|e| CmdError::config(e.to_string()))
                };
                qp = Some(build(cfg.delta_p, cfg.dead_zone_p)?);
                qc = Some(build(cfg.delta_c, cfg.dead_zone_c)?);
            }
            let trig = if matches!(mode, SimMode::ClosedTriggered) {
                let rho_c = resolve_rho_c(cfg)?;
                let rho_p = resolve_rho_p(cfg, &disc)?;
                let (b1, b2) = resolve_beta(cfg, rho_p, rho_c)?;
                Some(
                    trigger_params(
                        rho_p,
                        cfg.nu_p,
                        rho_c,
                        cfg.nu_c,
                        cfg.delta_p,
                        cfg.delta_c,
                        b1,
                        b2,
                        cfg.theta1,
                        cfg.theta2,
                    )
                    .map_err(|e| CmdError::failed(format!("trigger design failed: {e}")))?,
                )
            } else {
                None
            };
            simulate_closed_loop(
                &disc,
                &ctrl,
                qp.as_ref(),
                qc.as_ref(),
                trig.as_ref(),
                zero,
                zero,
                &bc,
                cfg.n1,
                cfg.n2,
            )
        }
    };

    let traj = match traj {
        Ok(t) => t,
        Err(Error::NonFiniteState { i, j }) => {
            return Err(CmdError::failed(format!(
                "state diverged beyond the guard at grid point ({i}, {j})"
            )));
        }
        Err(e) => return Err(CmdError::failed(e.to_string())),
    };

    let col_max = |j: usize| {
        (0..traj.n1).map(|i| traj.y.get(i, j).amax()).fold(0.0f64, f64::max)
    };
    let mut max_y = 0.0f64;
    for j in 0..traj.n2 {
        max_y = max_y.max(col_max(j));
    }
    let first = col_max(0);
    let last = col_max(traj.n2 - 1);
    let corner = traj.y.get(0, 0).amax().max(1e-9);
    let verdict = if first > 0.0 && last < 1e-2 * first {
        "converged"
    } else if max_y > 10.0 * corner {
        "diverged"
    } else {
        "bounded"
    };
    println!(
        "summary: mode={mode:?} max|y|={} first_column_max={} final_column_max={} verdict={verdict} transmissions={}",
        fmt_f64(max_y),
        fmt_f64(first),
        fmt_f64(last),
        traj.trigger_instants.len()
    );

    write_file(out_dir, "traj.csv", &traj_csv(&traj))?;
    let mut triggers = String::from("j_k\n");
    for jk in &traj.trigger_instants {
        let _ = writeln!(triggers, "{jk}");
    }
    write_file(out_dir, "triggers.csv", &triggers)
}

pub fn cmd_check(cfg: &RunConfig) -> CmdResult {
    let disc = sampled_model(cfg)?;
    let rho_c = resolve_rho_c(cfg)?;
    let rho_p = resolve_rho_p(cfg, &disc)?;
    let (b1, b2) = resolve_beta(cfg, rho_p, rho_c)?;
    let rep = quantized_loop_report(
        rho_p, cfg.nu_p, rho_c, cfg.nu_c, cfg.delta_p, cfg.delta_c, b1, b2,
    )
    .map_err(|e| CmdError::config(e.to_string()))?;
    println!("rho_p={}", fmt_f64(rho_p));
    println!("nu_p={}", fmt_f64(cfg.nu_p));
    println!("rho_c={}", fmt_f64(rho_c));
    println!("nu_c={}", fmt_f64(cfg.nu_c));
    println!("delta_p={}", fmt_f64(cfg.delta_p));
    println!("delta_c={}", fmt_f64(cfg.delta_c));
    println!("beta1={}", fmt_f64(b1));
    println!("beta2={}", fmt_f64(b2));
    println!("q1={}", fmt_f64(rep.q1));
    println!("q2={}", fmt_f64(rep.q2));
    println!("r1={}", fmt_f64(rep.r1));
    println!("r2={}", fmt_f64(rep.r2));
    println!("stable={}", rep.stable);
    if rep.stable {
        let tp = trigger_params(
            rho_p,
            cfg.nu_p,
            rho_c,
            cfg.nu_c,
            cfg.delta_p,
            cfg.delta_c,
            b1,
            b2,
            cfg.theta1,
            cfg.theta2,
        )
        .map_err(|e| CmdError::failed(format!("trigger design failed: {e}")))?;
        println!("theta1={}", fmt_f64(tp.theta1));
        println!("theta2={}", fmt_f64(tp.theta2));
        println!("eps_sq={}", fmt_f64(tp.eps_sq));
        println!("threshold_coeff={}", fmt_f64(tp.threshold_coeff));
        Ok(())
    } else {
        Err(CmdError::failed("loop deficiency terms are not both negative"))
    }
}
