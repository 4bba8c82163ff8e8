//! Reproducible numerical experiments: configuration, runners and CSV
//! output with a commented header.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_conditions, ConditionParams};
use crate::cubature::{cubature_with_rule, RadialKernel, TensorRule};
use crate::error::{Error, Result};
use crate::gridded::{GriddedQI, GriddedQIConfig};
use crate::nodes::{generate_perturbed_grid, IndexBox, NodeSet};
use crate::partition::{
    build_theta, build_two_scale, generate_two_scale, saturation_reference, theta_scan, PartitionConfig, Region,
    TwoScaleGrid,
};
use crate::scattered::build_pjk;
use crate::star::StarParams;

pub const EXPERIMENTS: [&str; 6] = [
    "table1",
    "theta-scan",
    "qi-figures",
    "cubature-demo",
    "check-conditions",
    "theta-build",
];

/// Every parameter of a run. Unset keys in a config file take the defaults
/// of the named experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: usize,
    /// Step sizes h (or h₁ for two-scale runs).
    pub h: Vec<f64>,
    /// Values of D.
    pub d: Vec<f64>,
    pub d0: f64,
    /// Approximation order N.
    pub order: u32,
    /// Polynomial degrees L of the partition.
    pub degree: Vec<u32>,
    /// Sizes of Σ(g).
    pub count: Vec<usize>,
    pub kappa1: f64,
    /// Kept below 2^63 so the value survives a TOML round trip.
    pub seed: u64,
    /// Number of consecutive seeds starting at `seed`.
    pub seeds: u64,
    pub window_lo: Vec<f64>,
    pub window_hi: Vec<f64>,
    pub resolution: usize,
    pub rho_cut: f64,
    /// Test functions by name: x2, x4, runge, gauss, linear.
    pub functions: Vec<String>,
    /// Fixed star offsets in grid-index space; empty selects by `star`.
    pub stencil: Vec<Vec<i64>>,
    /// "auto" uses the figure's fixed stencil where there is one, "nearest"
    /// always searches the nearest nodes.
    pub star: String,
    /// Lower bound on |det V| of an admissible star.
    pub det_threshold: f64,
    /// Singular-value cutoff of the partition's least-squares fallback.
    pub lstsq_cutoff: f64,
    pub kernel: String,
    /// CSV file with (r, g) rows; overrides `kernel` when non-empty.
    pub kernel_table: String,
    pub gh_order: usize,
    /// Refinement region Ω; empty for single-scale runs.
    pub omega_lo: Vec<f64>,
    pub omega_hi: Vec<f64>,
    /// H = h₂/h₁.
    pub ratio: f64,
    /// File stem of the outputs.
    pub output: String,
}

impl ExperimentConfig {
    /// Defaults of the named experiment.
    pub fn defaults_for(name: &str) -> Result<Self> {
        let mut c = ExperimentConfig {
            experiment: name.to_string(),
            n: 1,
            h: vec![1.0 / 32.0, 1.0 / 64.0],
            d: vec![2.0],
            d0: 1.5,
            order: 2,
            degree: vec![4],
            count: vec![5],
            kappa1: 0.5,
            seed: 0,
            seeds: 1,
            window_lo: vec![-1.0],
            window_hi: vec![1.0],
            resolution: 401,
            rho_cut: 6.0,
            functions: vec!["x2".into(), "runge".into()],
            stencil: Vec::new(),
            star: "auto".into(),
            det_threshold: 1e-3,
            lstsq_cutoff: crate::partition::LSTSQ_CUTOFF,
            kernel: "gauss".into(),
            kernel_table: String::new(),
            gh_order: 12,
            omega_lo: Vec::new(),
            omega_hi: Vec::new(),
            ratio: 0.5,
            output: name.replace('-', "_"),
        };
        match name {
            "table1" => {
                c.n = 2;
                c.h = (4..=8).map(|p| 2f64.powi(-p)).collect();
                c.d = vec![2.0, 4.0];
                c.seeds = 5;
                c.window_lo = vec![0.0, 0.0];
                c.window_hi = vec![0.0, 0.0];
                c.resolution = 1;
                c.functions = vec!["runge".into()];
                c.stencil = vec![vec![1, 0], vec![0, 1]];
            }
            "theta-scan" => {
                c.h = vec![1.0];
                c.degree = vec![1, 2, 3, 4];
                c.count = vec![1, 3, 5];
                c.window_lo = vec![-5.0];
                c.window_hi = vec![5.0];
                c.resolution = 2001;
            }
            "qi-figures" => {
                c.window_lo = vec![0.0];
                c.window_hi = vec![1.0];
            }
            "cubature-demo" => {
                c.h = vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
                c.functions = vec!["gauss".into()];
                c.resolution = 21;
                c.lstsq_cutoff = crate::scattered::PARTITION_CUTOFF;
            }
            "check-conditions" => {
                c.h = vec![1.0 / 16.0];
                c.window_lo = vec![0.0];
                c.window_hi = vec![1.0];
                c.order = 3;
            }
            "theta-build" => {
                c.h = vec![1.0];
                c.window_lo = vec![-5.0];
                c.window_hi = vec![5.0];
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown experiment {other:?}; expected one of {}",
                    EXPERIMENTS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    /// Parses a TOML config: `experiment = "..."` plus any overrides. An
    /// explicit `name` argument wins over the file's `experiment` key.
    pub fn from_toml(text: &str, name: Option<&str>) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let exp = match (name, table.get("experiment")) {
            (Some(n), _) => n.to_string(),
            (None, Some(toml::Value::String(s))) => s.clone(),
            (None, _) => return Err(Error::Config("config lacks an `experiment` key".into())),
        };
        let defaults = Self::defaults_for(&exp)?;
        let mut merged = toml::Table::try_from(&defaults).map_err(|e| Error::Config(format!("{e}")))?;
        for (k, v) in table {
            merged.insert(k, v);
        }
        merged.insert("experiment".into(), toml::Value::String(exp));
        let cfg: ExperimentConfig = merged.try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return bad(format!("unknown experiment {:?}", self.experiment));
        }
        if self.seed.checked_add(self.seeds).is_none_or(|end| end > i64::MAX as u64) {
            return bad("seed range must fit in a signed 64-bit integer".into());
        }
        if self.n == 0 || self.n > 3 {
            return bad(format!("dimension n = {} not in 1..=3", self.n));
        }
        if self.h.is_empty() || self.h.iter().any(|&h| h <= 0.0 || !h.is_finite()) {
            return bad("h must be a non-empty list of positive numbers".into());
        }
        if self.d.is_empty() || self.d.iter().any(|&d| d <= 0.0) {
            return bad("D must be a non-empty list of positive numbers".into());
        }
        if self.window_lo.len() != self.n || self.window_hi.len() != self.n {
            return bad(format!("scan window needs {} lower and upper bounds", self.n));
        }
        if self.window_lo.iter().zip(&self.window_hi).any(|(a, b)| a > b) {
            return bad("scan window lower bound exceeds upper bound".into());
        }
        if self.resolution == 0 {
            return bad("resolution must be positive".into());
        }
        if !(self.kappa1 > 0.0 && self.kappa1 <= 0.5) {
            return bad(format!("κ₁ = {} outside (0, 1/2]", self.kappa1));
        }
        if !(self.lstsq_cutoff > 0.0 && self.lstsq_cutoff < 1.0) {
            return bad("lstsq_cutoff must lie in (0, 1)".into());
        }
        if !(self.det_threshold >= 0.0) {
            return bad("det_threshold must be non-negative".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if self.omega_lo.len() != self.omega_hi.len() || !(self.omega_lo.is_empty() || self.omega_lo.len() == self.n) {
            return bad("Ω bounds must both be empty or both have n entries".into());
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return bad(format!("H = {} outside (0, 1)", self.ratio));
        }
        if !matches!(self.star.as_str(), "auto" | "nearest") {
            return bad(format!("star = {:?}, expected \"auto\" or \"nearest\"", self.star));
        }
        if self.stencil.iter().any(|s| s.len() != self.n) {
            return bad("stencil offsets must have n entries".into());
        }
        for f in &self.functions {
            test_function(f)?;
        }
        Ok(())
    }

    fn star_params(&self) -> StarParams {
        let p = if self.stencil.is_empty() {
            StarParams::new(self.order)
        } else {
            StarParams::with_stencil(self.order, self.stencil.clone())
        };
        StarParams {
            det_threshold: self.det_threshold,
            ..p
        }
    }

    fn partition(&self, d: f64, degree: u32, count: usize) -> PartitionConfig {
        PartitionConfig {
            d,
            d0: self.d0,
            degree,
            count,
            rho_cut: self.rho_cut,
            strict: false,
            lstsq_cutoff: self.lstsq_cutoff,
        }
    }
}

/// Test functions u: ℝⁿ → ℝ by name.
pub fn test_function(name: &str) -> Result<fn(&[f64]) -> f64> {
    fn r2(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
    Ok(match name {
        "x2" => |x| r2(x),
        "x4" => |x| x.iter().map(|v| v.powi(4)).sum(),
        "runge" => |x| 1.0 / (1.0 + r2(x)),
        "gauss" => |x| (-r2(x)).exp(),
        "linear" => |x| 1.0 + x.iter().enumerate().map(|(i, v)| (i as f64 + 0.5) * v).sum::<f64>(),
        other => return Err(Error::Config(format!("unknown test function {other:?}"))),
    })
}

/// Rows of an experiment plus header notes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<(String, String)>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    /// Column `name` parsed as numbers.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn note_value(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn tensor_points(lo: &[f64], hi: &[f64], resolution: usize) -> Vec<Vec<f64>> {
    let axis = |a: usize| -> Vec<f64> {
        if resolution == 1 || lo[a] == hi[a] {
            vec![lo[a]]
        } else {
            (0..resolution)
                .map(|i| lo[a] + (hi[a] - lo[a]) * i as f64 / (resolution - 1) as f64)
                .collect()
        }
    };
    let axes: Vec<Vec<f64>> = (0..lo.len()).map(axis).collect();
    let upper: Vec<i64> = axes.iter().map(|a| a.len() as i64 - 1).collect();
    IndexBox::new(vec![0; lo.len()], upper)
        .indices()
        .into_iter()
        .map(|i| i.iter().enumerate().map(|(a, &k)| axes[a][k as usize]).collect())
        .collect()
}

/// Index box covering the window padded by `pad` steps.
fn padded_box(lo: &[f64], hi: &[f64], h: f64, pad: f64) -> IndexBox {
    IndexBox::new(
        lo.iter().map(|v| (v / h - pad).floor() as i64).collect(),
        hi.iter().map(|v| (v / h + pad).ceil() as i64).collect(),
    )
}

// truncation reach plus a few steps for the stars
fn pad_steps(d: f64, rho_cut: f64) -> f64 {
    rho_cut * d.sqrt() + 4.0
}

/// Mu(0) − u(0) for u(x) = 1/(1+|x|²) on perturbed grids, per (h, D, seed).
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(&["h", "D", "seed", "error"]);
    let u = test_function(cfg.functions.first().map_or("runge", String::as_str))?;
    let x0 = cfg.window_lo.clone();
    let jobs: Vec<(f64, f64, u64)> = cfg
        .d
        .iter()
        .flat_map(|&d| {
            cfg.h
                .iter()
                .flat_map(move |&h| (cfg.seed..cfg.seed + cfg.seeds).map(move |s| (d, h, s)))
        })
        .collect();
    let values: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(d, h, seed)| {
            let pad = pad_steps(d, cfg.rho_cut);
            let nodes = generate_perturbed_grid(cfg.n, h, cfg.kappa1, &padded_box(&x0, &x0, h, pad), seed)?;
            let data: Vec<f64> = nodes.points().map(u).collect();
            let qcfg = GriddedQIConfig {
                rho_cut: cfg.rho_cut,
                ..GriddedQIConfig::new(h, d, cfg.order)
            };
            let qi = GriddedQI::new(&nodes, qcfg, cfg.star_params())?;
            Ok(qi.evaluate(&data, &x0)? - u(&x0))
        })
        .collect();
    for ((d, h, seed), v) in jobs.into_iter().zip(values) {
        t.rows.push(vec![num(h), num(d), seed.to_string(), num(v?)]);
    }
    Ok(t)
}

/// Θ − 1 on a 1-D quasi-uniform layout for every (|Σ|, L).
pub fn run_theta_scan(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(&["count", "L", "x", "theta_minus_1", "saturation"]);
    let h = cfg.h[0];
    let d = cfg.d[0];
    let pad = pad_steps(d, cfg.rho_cut) + 3.0;
    let work = padded_box(&cfg.window_lo, &cfg.window_hi, h, pad);
    let nodes = generate_perturbed_grid(cfg.n, h, cfg.kappa1, &work, cfg.seed)?;
    let grid = TwoScaleGrid::single_scale(h, d, work);
    let sat = saturation_reference(d, 8);
    t.note("scan_pad_h", 3);
    for &count in &cfg.count {
        for &l in &cfg.degree {
            let (theta, diag) = build_theta(&grid, &nodes, &cfg.partition(d, l, count))?;
            let scan = theta_scan(&theta, &cfg.window_lo, &cfg.window_hi, cfg.resolution.max(2))?;
            t.note(format!("sup count={count} L={l}"), num(scan.sup));
            t.note(format!("fallback_solves count={count} L={l}"), diag.fallback_solves);
            for (x, dev) in scan.points.iter().zip(&scan.deviation) {
                let s = if cfg.n == 1 { sat(x[0] / h) } else { f64::NAN };
                t.rows.push(vec![count.to_string(), l.to_string(), num(x[0]), num(*dev), num(s)]);
            }
        }
    }
    Ok(t)
}

fn default_stencil(n: usize, order: u32) -> Option<Vec<Vec<i64>>> {
    match (n, order) {
        (1, 2) => Some(vec![vec![1]]),
        (1, 4) => Some(vec![vec![-2], vec![-1], vec![1]]),
        (2, 2) => Some(vec![vec![1, 0], vec![0, 1]]),
        _ => None,
    }
}

/// Mu − u profiles of the gridded quasi-interpolant for each test function
/// and step size.
pub fn run_qi_figures(cfg: &ExperimentConfig) -> Result<Table> {
    let mut cols = vec!["function", "h"];
    let names = ["x1", "x2", "x3"];
    cols.extend(&names[..cfg.n]);
    cols.push("error");
    let mut t = Table::new(&cols);
    let d = cfg.d[0];
    let star = if cfg.stencil.is_empty() && cfg.star == "auto" {
        match default_stencil(cfg.n, cfg.order) {
            Some(s) => StarParams {
                det_threshold: cfg.det_threshold,
                ..StarParams::with_stencil(cfg.order, s)
            },
            None => cfg.star_params(),
        }
    } else {
        cfg.star_params()
    };
    let points = tensor_points(&cfg.window_lo, &cfg.window_hi, cfg.resolution);
    for f in &cfg.functions {
        let u = test_function(f)?;
        for &h in &cfg.h {
            let work = padded_box(&cfg.window_lo, &cfg.window_hi, h, pad_steps(d, cfg.rho_cut));
            let nodes = generate_perturbed_grid(cfg.n, h, cfg.kappa1, &work, cfg.seed)?;
            let data: Vec<f64> = nodes.points().map(u).collect();
            let qcfg = GriddedQIConfig {
                rho_cut: cfg.rho_cut,
                ..GriddedQIConfig::new(h, d, cfg.order)
            };
            let qi = GriddedQI::new(&nodes, qcfg, star.clone())?;
            let errs: Vec<Result<f64>> = points.par_iter().map(|x| Ok(qi.evaluate(&data, x)? - u(x))).collect();
            let mut sup = 0.0f64;
            for (x, e) in points.iter().zip(errs) {
                let e = e?;
                sup = sup.max(e.abs());
                let mut row = vec![f.clone(), num(h)];
                row.extend(x.iter().map(|v| num(*v)));
                row.push(num(e));
                t.rows.push(row);
            }
            t.note(format!("sup {f} h={h}"), num(sup));
        }
    }
    Ok(t)
}

fn load_kernel(cfg: &ExperimentConfig) -> Result<RadialKernel> {
    if cfg.kernel_table.is_empty() {
        RadialKernel::by_name(&cfg.kernel)
    } else {
        let f = fs::File::open(&cfg.kernel_table)?;
        RadialKernel::from_csv(&cfg.kernel_table, f)
    }
}

/// Closed-form ∫ g(|x−y|) e^{−|y|²} dy where available.
fn cubature_oracle(kernel: &str, n: usize, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let nf = n as f64;
    match kernel {
        "gauss" => (PI / 2.0).powf(nf / 2.0) * (-r2 / 2.0).exp(),
        "unit" => PI.powf(nf / 2.0),
        "zero" => 0.0,
        _ => f64::NAN,
    }
}

/// ∫ g(|x−y|) Mu(y) dy for Gaussian data against the closed form.
pub fn run_cubature_demo(cfg: &ExperimentConfig) -> Result<Table> {
    let mut cols = vec!["h"];
    let names = ["x1", "x2", "x3"];
    cols.extend(&names[..cfg.n]);
    cols.extend(["value", "oracle", "error"]);
    let mut t = Table::new(&cols);
    let kernel = load_kernel(cfg)?;
    kernel.check_integrable(cfg.n, 1.0)?;
    let u = test_function("gauss")?;
    let oracle_name = if cfg.kernel_table.is_empty() { cfg.kernel.as_str() } else { "" };
    let d = cfg.d[0];
    let rule = TensorRule::new(cfg.n, cfg.gh_order);
    let points = tensor_points(&cfg.window_lo, &cfg.window_hi, cfg.resolution);
    let degree = cfg.degree[0];
    let count = cfg.count[0];
    for &h in &cfg.h {
        // data must reach where the Gaussian is negligible
        let lo: Vec<f64> = cfg.window_lo.iter().map(|v| v.min(-6.5)).collect();
        let hi: Vec<f64> = cfg.window_hi.iter().map(|v| v.max(6.5)).collect();
        let work = padded_box(&lo, &hi, h, pad_steps(d, cfg.rho_cut));
        let nodes = generate_perturbed_grid(cfg.n, h, cfg.kappa1, &work, cfg.seed)?;
        let grid = TwoScaleGrid::single_scale(h, d, work);
        let (theta, _) = build_theta(&grid, &nodes, &cfg.partition(d, degree, count))?;
        let qi = build_pjk(&theta, &nodes, &cfg.star_params())?;
        let data: Vec<f64> = nodes.points().map(u).collect();
        let vals: Vec<Result<f64>> = points
            .par_iter()
            .map(|x| cubature_with_rule(&qi, &data, &kernel, x, &rule))
            .collect();
        let mut worst = 0.0f64;
        for (x, v) in points.iter().zip(vals) {
            let v = v?;
            let o = cubature_oracle(oracle_name, cfg.n, x);
            let e = v - o;
            worst = worst.max(e.abs());
            let mut row = vec![num(h)];
            row.extend(x.iter().map(|c| num(*c)));
            row.extend([num(v), num(o), num(e)]);
            t.rows.push(row);
        }
        t.note(format!("max_error h={h}"), num(worst));
    }
    Ok(t)
}

fn two_scale_setup(cfg: &ExperimentConfig, h: f64, d: f64, work: IndexBox) -> Result<(TwoScaleGrid, NodeSet)> {
    if cfg.omega_lo.is_empty() {
        let nodes = generate_perturbed_grid(cfg.n, h, cfg.kappa1, &work, cfg.seed)?;
        Ok((TwoScaleGrid::single_scale(h, d, work), nodes))
    } else {
        let omega = Region::new(cfg.omega_lo.clone(), cfg.omega_hi.clone());
        let grid = build_two_scale(&omega, h, cfg.ratio, d, work)?;
        let nodes = generate_two_scale(&grid, cfg.kappa1, cfg.seed)?;
        Ok((grid, nodes))
    }
}

/// Conditions 1–4 on a generated layout.
pub fn run_check_conditions(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(&["condition", "holds", "worst", "witness"]);
    let h = cfg.h[0];
    let d = cfg.d[0];
    let inner = padded_box(&cfg.window_lo, &cfg.window_hi, h, 0.0);
    let work = padded_box(&cfg.window_lo, &cfg.window_hi, h, 6.0);
    let (grid, nodes) = two_scale_setup(cfg, h, d, work)?;
    let params = ConditionParams {
        h,
        kappa1: cfg.kappa1,
        index_box: inner,
        star: cfg.star_params(),
    };
    let r = check_conditions(&nodes, &params, Some(&grid));
    let all = r.all_hold();
    let fmt_w = |w: Option<String>| w.unwrap_or_default();
    t.rows.push(vec![
        "1".into(),
        r.condition1.holds.to_string(),
        num(r.condition1.worst_gap),
        fmt_w(r.condition1.witness.map(|w| format!("{w:?}"))),
    ]);
    t.rows.push(vec![
        "2a".into(),
        r.condition2a.holds.to_string(),
        num(r.condition2a.min_det),
        fmt_w(r.condition2a.witness.map(|w| w.to_string())),
    ]);
    t.rows.push(vec![
        "2b".into(),
        r.condition2b_uncovered.is_empty().to_string(),
        r.condition2b_uncovered.len().to_string(),
        fmt_w(r.condition2b_uncovered.first().map(|w| w.to_string())),
    ]);
    t.rows.push(vec![
        "3".into(),
        r.condition3.holds.to_string(),
        num(r.condition3.min_det),
        fmt_w(r.condition3.witness.map(|w| w.to_string())),
    ]);
    if let Some(c4) = r.condition4 {
        t.rows.push(vec![
            "4".into(),
            c4.holds.to_string(),
            num(c4.worst_gap),
            fmt_w(c4.witness.map(|w| format!("{w:?}"))),
        ]);
    }
    t.note("all_hold", all);
    Ok(t)
}

/// Builds Θ and returns its serialized table; the rows are those of
/// [`crate::partition::ThetaFunction::write_csv`].
pub fn run_theta_build(cfg: &ExperimentConfig) -> Result<Table> {
    let h = cfg.h[0];
    let d = cfg.d[0];
    let work = padded_box(&cfg.window_lo, &cfg.window_hi, h, pad_steps(d, cfg.rho_cut));
    let (grid, nodes) = two_scale_setup(cfg, h, d, work)?;
    let (theta, diag) = build_theta(&grid, &nodes, &cfg.partition(d, cfg.degree[0], cfg.count[0]))?;
    let scan = theta_scan(&theta, &cfg.window_lo, &cfg.window_hi, cfg.resolution.max(2))?;
    let mut buf = Vec::new();
    theta.write_csv(&mut buf)?;
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let mut t = Table {
        columns: rd.headers()?.iter().map(String::from).collect(),
        ..Default::default()
    };
    for rec in rd.records() {
        t.rows.push(rec?.iter().map(String::from).collect());
    }
    t.note("entries", theta.entries.len());
    t.note("sup", num(scan.sup));
    t.note("local_systems", diag.local_systems);
    t.note("fallback_solves", diag.fallback_solves);
    t.note("max_condition", num(diag.max_condition));
    t.note("max_q", num(diag.max_q));
    t.note("max_q_over_bound", num(diag.max_q_over_bound));
    Ok(t)
}

/// Dispatches on `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    match cfg.experiment.as_str() {
        "table1" => run_table1(cfg),
        "theta-scan" => run_theta_scan(cfg),
        "qi-figures" => run_qi_figures(cfg),
        "cubature-demo" => run_cubature_demo(cfg),
        "check-conditions" => run_check_conditions(cfg),
        "theta-build" => run_theta_build(cfg),
        other => Err(Error::Config(format!("unknown experiment {other:?}"))),
    }
}

/// Writes the commented header (version, resolved config, wall time, notes)
/// followed by RFC 4180 rows.
pub fn write_table<W: Write>(mut w: W, cfg: &ExperimentConfig, table: &Table, wall_seconds: f64) -> Result<()> {
    let mut head = String::new();
    let _ = writeln!(head, "# approxqi {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(head, "# wall_time_s = {wall_seconds:.3}");
    let _ = writeln!(head, "# [config]");
    for line in cfg.to_toml().lines() {
        let _ = writeln!(head, "# {line}");
    }
    if !table.notes.is_empty() {
        let _ = writeln!(head, "# [results]");
        for (k, v) in &table.notes {
            let _ = writeln!(head, "# {k} = {v}");
        }
    }
    w.write_all(head.as_bytes())?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(&table.columns)?;
    for r in &table.rows {
        wr.write_record(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads the configuration embedded in an output header.
pub fn config_from_output(text: &str) -> Result<ExperimentConfig> {
    let mut toml_text = String::new();
    let mut inside = false;
    for line in text.lines() {
        let Some(rest) = line.strip_prefix("# ") else {
            break;
        };
        match rest {
            "[config]" => inside = true,
            "[results]" => inside = false,
            _ if inside => {
                toml_text.push_str(rest);
                toml_text.push('\n');
            }
            _ => {}
        }
    }
    ExperimentConfig::from_toml(&toml_text, None)
}

/// A gnuplot script plotting the CSV written next to it.
pub fn gnuplot_script(cfg: &ExperimentConfig, csv_name: &str) -> String {
    let mut s = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    let body = match cfg.experiment.as_str() {
        "table1" => "set logscale xy\nset xlabel 'h'\nplot for [D in '2 4'] '{f}' using 1:(($2==D)?abs($4):1/0) with points title 'D='.D\n".to_string(),
        "theta-scan" => "set xlabel 'x'\nplot '{f}' using 3:4 with lines title 'Theta-1', '' using 3:5 with lines dashtype 2 title 'saturation'\n".to_string(),
        "qi-figures" if cfg.n == 2 => "set xlabel 'x1'\nset ylabel 'x2'\nsplot '{f}' using 3:4:5 with points palette\n".to_string(),
        "qi-figures" => "set xlabel 'x'\nplot '{f}' using 3:4 with lines title 'Mu-u'\n".to_string(),
        "cubature-demo" => format!("set xlabel 'x'\nplot '{{f}}' using 2:{} with linespoints title 'error'\n", cfg.n + 4),
        _ => "# no plot for this experiment\n".to_string(),
    };
    s.push_str(&body.replace("{f}", csv_name));
    s
}

/// Runs one experiment and writes `<out>/<output>.csv` and `.gp`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<(PathBuf, Table)> {
    let start = Instant::now();
    let table = run(cfg)?;
    let wall = start.elapsed().as_secs_f64();
    fs::create_dir_all(out)?;
    let csv_path = out.join(format!("{}.csv", cfg.output));
    let file = fs::File::create(&csv_path)?;
    write_table(std::io::BufWriter::new(file), cfg, &table, wall)?;
    let gp = gnuplot_script(cfg, &format!("{}.csv", cfg.output));
    fs::write(out.join(format!("{}.gp", cfg.output)), gp)?;
    Ok((csv_path, table))
}
