//! Flat key=value run configuration with dotted section prefixes.
//!
//! The format is line oriented: blank lines and lines starting with `#` are
//! ignored, everything else is `key=value` with whitespace trimmed on both
//! sides. Unknown keys are rejected. Every key has a default taken from the
//! heat-exchanger study, so an empty file is a valid configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use r2dnet_core::model::ContinuousRoesser2D;

#[derive(Debug, Clone, PartialEq)]
pub enum PlantConfig {
    Pde { a0: f64, a1: f64, a2: f64, b: f64 },
    Matrices {
        n_h: usize,
        n_v: usize,
        m: usize,
        p: usize,
        a11: Vec<f64>,
        a12: Vec<f64>,
        a21: Vec<f64>,
        a22: Vec<f64>,
        b1: Vec<f64>,
        b2: Vec<f64>,
        c1: Vec<f64>,
        c2: Vec<f64>,
        d: Vec<f64>,
    },
}

/// Boundary sequence specification: a constant, a decaying exponential
/// sampled on the grid (`exp:rate` gives `e^{rate * i * h}`), or an explicit
/// comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Const(f64),
    Exp(f64),
    List(Vec<f64>),
}

impl BoundarySpec {
    fn parse(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("const:") {
            return Ok(BoundarySpec::Const(parse_f64(rest)?));
        }
        if let Some(rest) = s.strip_prefix("exp:") {
            return Ok(BoundarySpec::Exp(parse_f64(rest)?));
        }
        if let Some(rest) = s.strip_prefix("list:") {
            let vals = rest
                .split(',')
                .map(|t| parse_f64(t.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(BoundarySpec::List(vals));
        }
        Err(format!("boundary spec must be const:<v>, exp:<rate> or list:v,v,... (got `{s}`)"))
    }

    fn dump(&self) -> String {
        match self {
            BoundarySpec::Const(v) => format!("const:{}", fmt_f64(*v)),
            BoundarySpec::Exp(r) => format!("exp:{}", fmt_f64(*r)),
            BoundarySpec::List(vs) => {
                format!("list:{}", vs.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","))
            }
        }
    }

    /// Evaluate the sequence on `len` grid points with spacing `h`.
    pub fn evaluate(&self, len: usize, h: f64) -> Result<Vec<f64>, String> {
        match self {
            BoundarySpec::Const(v) => Ok(vec![*v; len]),
            BoundarySpec::Exp(rate) => {
                Ok((0..len).map(|k| (rate * k as f64 * h).exp()).collect())
            }
            BoundarySpec::List(vs) => {
                if vs.len() != len {
                    return Err(format!(
                        "boundary list has {} entries, the grid needs {len}",
                        vs.len()
                    ));
                }
                Ok(vs.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BetaSpec {
    Pair(f64, f64),
    Search,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plant: PlantConfig,
    pub boundary_q: BoundarySpec,
    pub boundary_dq: BoundarySpec,
    pub boundary_p: BoundarySpec,
    pub h1: f64,
    pub h2: f64,
    pub nu_p: f64,
    /// Plant output-feedback level; computed from the LMI when absent.
    pub rho_p: Option<f64>,
    pub controller_k: f64,
    pub nu_c: f64,
    /// Controller output-feedback level; derived from the static gain when
    /// absent.
    pub rho_c: Option<f64>,
    pub delta_p: f64,
    pub delta_c: f64,
    pub dead_zone_p: f64,
    pub dead_zone_c: f64,
    pub beta: BetaSpec,
    pub theta1: f64,
    pub theta2: f64,
    pub n1: usize,
    pub n2: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            plant: PlantConfig::Pde { a0: 1.0, a1: 1.0, a2: -1.0, b: 1.0 },
            boundary_q: BoundarySpec::Const(1.0),
            boundary_dq: BoundarySpec::Const(0.0),
            boundary_p: BoundarySpec::Exp(-1.0),
            h1: 0.1,
            h2: 0.1,
            nu_p: -0.1,
            rho_p: None,
            controller_k: 3.0,
            nu_c: 1.5,
            rho_c: None,
            delta_p: 0.04,
            delta_c: 0.04,
            dead_zone_p: 0.0,
            dead_zone_c: 0.0,
            beta: BetaSpec::Pair(36.0, 56.0),
            theta1: 0.5,
            theta2: 0.5,
            n1: 40,
            n2: 300,
            out_dir: PathBuf::from("."),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("not a number: `{s}`"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim().parse::<usize>().map_err(|_| format!("not a nonnegative integer: `{s}`"))
}

fn parse_row_major(s: &str) -> Result<Vec<f64>, String> {
    s.split_whitespace().map(parse_f64).collect()
}

/// Format a float with 17 significant digits so values round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got `{line}`", lineno + 1))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_map(map)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        let mut take = |k: &str| map.remove(k);

        let plant_kind = take("plant.kind").unwrap_or_else(|| "pde".into());
        match plant_kind.as_str() {
            "pde" => {
                let mut pde = match cfg.plant {
                    PlantConfig::Pde { a0, a1, a2, b } => (a0, a1, a2, b),
                    _ => unreachable!(),
                };
                if let Some(v) = take("plant.a0") {
                    pde.0 = parse_f64(&v)?;
                }
                if let Some(v) = take("plant.a1") {
                    pde.1 = parse_f64(&v)?;
                }
                if let Some(v) = take("plant.a2") {
                    pde.2 = parse_f64(&v)?;
                }
                if let Some(v) = take("plant.b") {
                    pde.3 = parse_f64(&v)?;
                }
                cfg.plant = PlantConfig::Pde { a0: pde.0, a1: pde.1, a2: pde.2, b: pde.3 };
            }
            "matrices" => {
                let n_h = parse_usize(&take("plant.n_h").ok_or("plant.n_h required")?)?;
                let n_v = parse_usize(&take("plant.n_v").ok_or("plant.n_v required")?)?;
                let m = parse_usize(&take("plant.m").ok_or("plant.m required")?)?;
                let p = parse_usize(&take("plant.p").ok_or("plant.p required")?)?;
                let mut block = |key: &str, rows: usize, cols: usize| -> Result<Vec<f64>, String> {
                    let raw = take(key).ok_or_else(|| format!("{key} required"))?;
                    let vals = parse_row_major(&raw)?;
                    if vals.len() != rows * cols {
                        return Err(format!(
                            "{key}: expected {rows}x{cols} = {} entries, got {}",
                            rows * cols,
                            vals.len()
                        ));
                    }
                    Ok(vals)
                };
                cfg.plant = PlantConfig::Matrices {
                    n_h,
                    n_v,
                    m,
                    p,
                    a11: block("plant.a11", n_h, n_h)?,
                    a12: block("plant.a12", n_h, n_v)?,
                    a21: block("plant.a21", n_v, n_h)?,
                    a22: block("plant.a22", n_v, n_v)?,
                    b1: block("plant.b1", n_h, m)?,
                    b2: block("plant.b2", n_v, m)?,
                    c1: block("plant.c1", p, n_h)?,
                    c2: block("plant.c2", p, n_v)?,
                    d: block("plant.d", p, m)?,
                };
            }
            other => return Err(format!("plant.kind must be pde or matrices, got `{other}`")),
        }

        if let Some(v) = take("boundary.q") {
            cfg.boundary_q = BoundarySpec::parse(&v)?;
        }
        if let Some(v) = take("boundary.dq") {
            cfg.boundary_dq = BoundarySpec::parse(&v)?;
        }
        if let Some(v) = take("boundary.p") {
            cfg.boundary_p = BoundarySpec::parse(&v)?;
        }
        if let Some(v) = take("sampling.h1") {
            cfg.h1 = parse_f64(&v)?;
        }
        if let Some(v) = take("sampling.h2") {
            cfg.h2 = parse_f64(&v)?;
        }
        if let Some(v) = take("indices.nu_p") {
            cfg.nu_p = parse_f64(&v)?;
        }
        if let Some(v) = take("indices.rho_p") {
            cfg.rho_p = Some(parse_f64(&v)?);
        }
        if let Some(v) = take("indices.controller_k") {
            cfg.controller_k = parse_f64(&v)?;
        }
        if let Some(v) = take("indices.nu_c") {
            cfg.nu_c = parse_f64(&v)?;
        }
        if let Some(v) = take("indices.rho_c") {
            cfg.rho_c = Some(parse_f64(&v)?);
        }
        if let Some(v) = take("quantization.delta_p") {
            cfg.delta_p = parse_f64(&v)?;
        }
        if let Some(v) = take("quantization.delta_c") {
            cfg.delta_c = parse_f64(&v)?;
        }
        if let Some(v) = take("quantization.dead_zone_p") {
            cfg.dead_zone_p = parse_f64(&v)?;
        }
        if let Some(v) = take("quantization.dead_zone_c") {
            cfg.dead_zone_c = parse_f64(&v)?;
        }
        match (take("network.beta"), take("network.beta1"), take("network.beta2")) {
            (Some(s), None, None) if s == "search" => cfg.beta = BetaSpec::Search,
            (Some(s), _, _) => return Err(format!("network.beta must be `search`, got `{s}`")),
            (None, b1, b2) => {
                let mut pair = match cfg.beta {
                    BetaSpec::Pair(x, y) => (x, y),
                    BetaSpec::Search => (36.0, 56.0),
                };
                if let Some(v) = b1 {
                    pair.0 = parse_f64(&v)?;
                }
                if let Some(v) = b2 {
                    pair.1 = parse_f64(&v)?;
                }
                cfg.beta = BetaSpec::Pair(pair.0, pair.1);
            }
        }
        if let Some(v) = take("trigger.theta1") {
            cfg.theta1 = parse_f64(&v)?;
        }
        if let Some(v) = take("trigger.theta2") {
            cfg.theta2 = parse_f64(&v)?;
        }
        if let Some(v) = take("grid.n1") {
            cfg.n1 = parse_usize(&v)?;
        }
        if let Some(v) = take("grid.n2") {
            cfg.n2 = parse_usize(&v)?;
        }
        if let Some(v) = take("output.dir") {
            cfg.out_dir = PathBuf::from(v);
        }

        if let Some(key) = map.keys().next() {
            return Err(format!("unknown config key `{key}`"));
        }
        if cfg.n1 == 0 || cfg.n2 == 0 {
            return Err("grid.n1 and grid.n2 must be positive".into());
        }
        Ok(cfg)
    }

    /// Canonical serialization; reloading reproduces the identical run.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        match &self.plant {
            PlantConfig::Pde { a0, a1, a2, b } => {
                s.push_str("plant.kind=pde\n");
                let _ = writeln!(s, "plant.a0={}", fmt_f64(*a0));
                let _ = writeln!(s, "plant.a1={}", fmt_f64(*a1));
                let _ = writeln!(s, "plant.a2={}", fmt_f64(*a2));
                let _ = writeln!(s, "plant.b={}", fmt_f64(*b));
            }
            PlantConfig::Matrices { n_h, n_v, m, p, a11, a12, a21, a22, b1, b2, c1, c2, d } => {
                s.push_str("plant.kind=matrices\n");
                let _ = writeln!(s, "plant.n_h={n_h}");
                let _ = writeln!(s, "plant.n_v={n_v}");
                let _ = writeln!(s, "plant.m={m}");
                let _ = writeln!(s, "plant.p={p}");
                let row = |vals: &[f64]| {
                    vals.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
                };
                let _ = writeln!(s, "plant.a11={}", row(a11));
                let _ = writeln!(s, "plant.a12={}", row(a12));
                let _ = writeln!(s, "plant.a21={}", row(a21));
                let _ = writeln!(s, "plant.a22={}", row(a22));
                let _ = writeln!(s, "plant.b1={}", row(b1));
                let _ = writeln!(s, "plant.b2={}", row(b2));
                let _ = writeln!(s, "plant.c1={}", row(c1));
                let _ = writeln!(s, "plant.c2={}", row(c2));
                let _ = writeln!(s, "plant.d={}", row(d));
            }
        }
        let _ = writeln!(s, "boundary.q={}", self.boundary_q.dump());
        let _ = writeln!(s, "boundary.dq={}", self.boundary_dq.dump());
        let _ = writeln!(s, "boundary.p={}", self.boundary_p.dump());
        let _ = writeln!(s, "sampling.h1={}", fmt_f64(self.h1));
        let _ = writeln!(s, "sampling.h2={}", fmt_f64(self.h2));
        let _ = writeln!(s, "indices.nu_p={}", fmt_f64(self.nu_p));
        if let Some(r) = self.rho_p {
            let _ = writeln!(s, "indices.rho_p={}", fmt_f64(r));
        }
        let _ = writeln!(s, "indices.controller_k={}", fmt_f64(self.controller_k));
        let _ = writeln!(s, "indices.nu_c={}", fmt_f64(self.nu_c));
        if let Some(r) = self.rho_c {
            let _ = writeln!(s, "indices.rho_c={}", fmt_f64(r));
        }
        let _ = writeln!(s, "quantization.delta_p={}", fmt_f64(self.delta_p));
        let _ = writeln!(s, "quantization.delta_c={}", fmt_f64(self.delta_c));
        let _ = writeln!(s, "quantization.dead_zone_p={}", fmt_f64(self.dead_zone_p));
        let _ = writeln!(s, "quantization.dead_zone_c={}", fmt_f64(self.dead_zone_c));
        match self.beta {
            BetaSpec::Pair(b1, b2) => {
                let _ = writeln!(s, "network.beta1={}", fmt_f64(b1));
                let _ = writeln!(s, "network.beta2={}", fmt_f64(b2));
            }
            BetaSpec::Search => {
                let _ = writeln!(s, "network.beta=search");
            }
        }
        let _ = writeln!(s, "trigger.theta1={}", fmt_f64(self.theta1));
        let _ = writeln!(s, "trigger.theta2={}", fmt_f64(self.theta2));
        let _ = writeln!(s, "grid.n1={}", self.n1);
        let _ = writeln!(s, "grid.n2={}", self.n2);
        let _ = writeln!(s, "output.dir={}", self.out_dir.display());
        s
    }

    /// Build the continuous plant model.
    pub fn plant_model(&self) -> Result<ContinuousRoesser2D<f64>, String> {
        match &self.plant {
            PlantConfig::Pde { a0, a1, a2, b } => {
                let spec = r2dnet_core::model::Pde2ndOrderSpec::new(
                    *a0,
                    *a1,
                    *a2,
                    *b,
                    vec![],
                    vec![],
                    vec![],
                )
                .map_err(|e| e.to_string())?;
                Ok(r2dnet_core::model::pde_to_roesser(&spec))
            }
            PlantConfig::Matrices { n_h, n_v, m, p, a11, a12, a21, a22, b1, b2, c1, c2, d } => {
                let mk = |r: usize, c: usize, v: &[f64]| DMatrix::from_row_slice(r, c, v);
                ContinuousRoesser2D::new(
                    mk(*n_h, *n_h, a11),
                    mk(*n_h, *n_v, a12),
                    mk(*n_v, *n_h, a21),
                    mk(*n_v, *n_v, a22),
                    mk(*n_h, *m, b1),
                    mk(*n_v, *m, b2),
                    mk(*p, *n_h, c1),
                    mk(*p, *n_v, c2),
                    mk(*p, *m, d),
                )
                .map_err(|e| e.to_string())
            }
        }
    }

    /// Horizontal boundary sequence `x_h(0, j) = dq(t_j) - a2 q(t_j)` and
    /// vertical boundary `x_v(i, 0) = p(x_i)` for PDE plants. For explicit
    /// matrix plants the q sequence is used directly as a scalar horizontal
    /// boundary (requires n_h = n_v = 1 unless it is identically zero).
    pub fn boundaries(&self) -> Result<(Vec<f64>, Vec<f64>), String> {
        let q = self.boundary_q.evaluate(self.n2, self.h2)?;
        let dq = self.boundary_dq.evaluate(self.n2, self.h2)?;
        let p = self.boundary_p.evaluate(self.n1, self.h1)?;
        match &self.plant {
            PlantConfig::Pde { a2, .. } => {
                let xh0 = q.iter().zip(&dq).map(|(&qv, &dqv)| dqv - a2 * qv).collect();
                Ok((xh0, p))
            }
            PlantConfig::Matrices { .. } => Ok((q, p)),
        }
    }
}
