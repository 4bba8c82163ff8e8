//! Quasi-interpolation with gridded Gaussian centers and coefficients
//! recovered from scattered samples.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use crate::error::{check_dim, Error, Result};
use crate::gauss::GaussianTerm;
use crate::multiindex::{enumerate_multiindices, MultiIndex};
use crate::nodes::NodeSet;
use crate::polynomial::Polynomial;
use crate::star::{build_star, Star, StarParams};

/// Generating function η_{2M}(x) = π^{−n/2} L^{(n/2)}_{M−1}(|x|²) e^{−|x|²}.
#[derive(Clone, Debug)]
pub struct Eta {
    pub m: u32,
    pub n: usize,
    // coefficients in t = |x|², lowest first, normalisation included
    radial: Vec<f64>,
    /// Largest |∫ x^α η − δ_{α0}| over |α| < 2M, computed at construction.
    pub moment_defect: f64,
}

impl Eta {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_r2(x.iter().map(|v| v * v).sum())
    }

    /// η as a function of |x|².
    pub fn eval_r2(&self, r2: f64) -> f64 {
        let mut p = 0.0;
        for c in self.radial.iter().rev() {
            p = p * r2 + c;
        }
        p * (-r2).exp()
    }

    /// Approximation order 2M.
    pub fn order(&self) -> u32 {
        2 * self.m
    }

    /// η as a polynomial × Gaussian atom centered at the origin.
    pub fn as_term(&self) -> GaussianTerm {
        let n = self.n;
        let r2 = Polynomial::from_terms(n, (0..n).map(|a| {
            let mut e = vec![0; n];
            e[a] = 2;
            (MultiIndex::new(e), 1.0)
        }));
        let mut poly = Polynomial::zero(n);
        let mut power = Polynomial::constant(n, 1.0);
        for &c in &self.radial {
            poly = &poly + &power.scale(c);
            power = &power * &r2;
        }
        GaussianTerm::new(vec![0.0; n], 1.0, poly)
    }
}

/// Builds η_{2M} in `n` dimensions; M = 1 is the normalised Gaussian.
pub fn generating_eta(m: u32, n: usize) -> Eta {
    assert!(m >= 1, "M must be at least 1");
    assert!(n >= 1, "dimension must be positive");
    let a = n as f64 / 2.0;
    // generalized Laguerre recurrence on coefficient vectors in t
    let k = (m - 1) as usize;
    let mut prev = vec![1.0];
    let mut cur = vec![1.0 + a, -1.0];
    let lag = if k == 0 {
        prev.clone()
    } else {
        for i in 1..k {
            let fi = i as f64;
            let mut next = vec![0.0; i + 2];
            for (p, &c) in cur.iter().enumerate() {
                next[p] += (2.0 * fi + 1.0 + a) * c;
                next[p + 1] -= c;
            }
            for (p, &c) in prev.iter().enumerate() {
                next[p] -= (fi + a) * c;
            }
            for v in &mut next {
                *v /= fi + 1.0;
            }
            prev = cur;
            cur = next;
        }
        cur
    };
    let norm = PI.powf(-a);
    let mut eta = Eta {
        m,
        n,
        radial: lag.iter().map(|c| c * norm).collect(),
        moment_defect: 0.0,
    };
    let term = eta.as_term();
    let mut defect = 0.0f64;
    for alpha in enumerate_multiindices(n, 0, 2 * m - 1) {
        let mom: f64 = term
            .poly
            .terms()
            .map(|(b, c)| c * crate::gauss::gaussian_moment(&alpha.add(b), 1.0))
            .sum();
        let target = if alpha.is_zero() { 1.0 } else { 0.0 };
        defect = defect.max((mom - target).abs());
    }
    eta.moment_defect = defect;
    eta
}

/// Λ_j(u) = u(x̃_j) + Σ_α d_α (j − x̃_j/h)^α with d the Taylor coefficients
/// recovered through the star of x̃_j.
pub fn lambda_j(nodes: &NodeSet, data: &[f64], star: &Star, j: &[i64], h: f64) -> f64 {
    lambda_weights(nodes, star, j, h)
        .into_iter()
        .map(|(k, w)| w * data[k])
        .sum()
}

/// Λ_j as weights on node values.
pub fn lambda_weights(nodes: &NodeSet, star: &Star, j: &[i64], h: f64) -> Vec<(usize, f64)> {
    let xt = nodes.point(star.owner);
    let t: Vec<f64> = j.iter().zip(xt).map(|(&ji, x)| ji as f64 - x / h).collect();
    let tp: Vec<f64> = star.alphas.iter().map(|a| a.monomial(&t)).collect();
    let mut out = Vec::with_capacity(star.members.len() + 1);
    let mut owner_w = 1.0;
    for (col, &k) in star.members.iter().enumerate() {
        let w: f64 = (0..star.alphas.len()).map(|a| star.inverse[(a, col)] * tp[a]).sum();
        owner_w -= w;
        out.push((k, w));
    }
    out.insert(0, (star.owner, owner_w));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GriddedQIConfig {
    pub h: f64,
    pub d: f64,
    /// Approximation order N, even.
    pub order: u32,
    /// Truncation radius in units of h√D.
    pub rho_cut: f64,
}

impl GriddedQIConfig {
    pub fn new(h: f64, d: f64, order: u32) -> Self {
        GriddedQIConfig {
            h,
            d,
            order,
            rho_cut: 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.d > 0.0) {
            return Err(Error::InvalidParameter("h and D must be positive".into()));
        }
        if ![2, 4, 6].contains(&self.order) {
            return Err(Error::InvalidParameter(format!("order N = {} not in {{2, 4, 6}}", self.order)));
        }
        if self.rho_cut < 3.0 {
            return Err(Error::InvalidParameter(format!("cutoff {} below 3", self.rho_cut)));
        }
        Ok(())
    }
}

/// The quasi-interpolant 𝕄u(x) = D^{−n/2} Σ_j Λ_j(u) η((x − hj)/(h√D)).
pub struct GriddedQI<'a> {
    nodes: &'a NodeSet,
    cfg: GriddedQIConfig,
    eta: Eta,
    star: StarParams,
    cache: Mutex<HashMap<Vec<i64>, Vec<(usize, f64)>>>,
}

impl<'a> GriddedQI<'a> {
    /// The star order is taken from `cfg.order`; `star` only supplies the
    /// selection strategy and threshold.
    pub fn new(nodes: &'a NodeSet, cfg: GriddedQIConfig, star: StarParams) -> Result<Self> {
        cfg.validate()?;
        let eta = generating_eta(cfg.order / 2, nodes.dim());
        let star = StarParams {
            order: cfg.order,
            ..star
        };
        Ok(GriddedQI {
            nodes,
            cfg,
            eta,
            star,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &GriddedQIConfig {
        &self.cfg
    }

    pub fn eta(&self) -> &Eta {
        &self.eta
    }

    /// Node x̃_j closest to hj.
    pub fn closest_node(&self, j: &[i64]) -> Result<usize> {
        let g: Vec<f64> = j.iter().map(|&v| v as f64 * self.cfg.h).collect();
        self.nodes
            .nearest(&g)
            .ok_or_else(|| Error::InvalidParameter("empty node set".into()))
    }

    pub fn star_for(&self, j: &[i64]) -> Result<Star> {
        let owner = self.closest_node(j)?;
        build_star(self.nodes, owner, self.cfg.h, &self.star)
    }

    /// Λ_j as weights on node values, memoised per index.
    pub fn weights(&self, j: &[i64]) -> Result<Vec<(usize, f64)>> {
        if let Some(w) = self.cache.lock().expect("cache poisoned").get(j) {
            return Ok(w.clone());
        }
        let star = self.star_for(j)?;
        let w = lambda_weights(self.nodes, &star, j, self.cfg.h);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(j.to_vec(), w.clone());
        Ok(w)
    }

    pub fn lambda(&self, data: &[f64], j: &[i64]) -> Result<f64> {
        Ok(self.weights(j)?.iter().map(|&(k, w)| w * data[k]).sum())
    }

    /// Grid indices whose centers lie within the cutoff of `x`.
    pub fn active_indices(&self, x: &[f64]) -> Vec<Vec<i64>> {
        let h = self.cfg.h;
        let r = self.cfg.rho_cut * h * self.cfg.d.sqrt();
        let lo: Vec<i64> = x.iter().map(|v| ((v - r) / h).ceil() as i64).collect();
        let hi: Vec<i64> = x.iter().map(|v| ((v + r) / h).floor() as i64).collect();
        crate::nodes::IndexBox::new(lo, hi)
            .indices()
            .into_iter()
            .filter(|j| {
                let d2: f64 = j.iter().zip(x).map(|(&ji, xi)| (ji as f64 * h - xi).powi(2)).sum();
                d2 <= r * r
            })
            .collect()
    }

    pub fn evaluate(&self, data: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(self.nodes.dim(), x.len())?;
        check_dim(self.nodes.len(), data.len())?;
        let h = self.cfg.h;
        let s = h * self.cfg.d.sqrt();
        let mut acc = 0.0;
        for j in self.active_indices(x) {
            let r2: f64 = j
                .iter()
                .zip(x)
                .map(|(&ji, xi)| ((xi - ji as f64 * h) / s).powi(2))
                .sum();
            acc += self.lambda(data, &j)? * self.eta.eval_r2(r2);
        }
        Ok(acc * self.cfg.d.powf(-(x.len() as f64) / 2.0))
    }
}

/// One-shot evaluation of 𝕄u at `x`.
pub fn evaluate_gridded(
    data: &[f64],
    nodes: &NodeSet,
    cfg: &GriddedQIConfig,
    star: &StarParams,
    x: &[f64],
) -> Result<f64> {
    GriddedQI::new(nodes, cfg.clone(), star.clone())?.evaluate(data, x)
}

/// The one-dimensional blended quasi-interpolant M_h u(x).
///
/// `nodes` are the scaled positions x_j (data sampled at h·x_j), strictly
/// increasing with gaps at most 1, and `zeta(j, t)` is ζ_j(t). Each ζ_j is
/// multiplied by the linear interpolant of the data on `[x_j, x_{j+1}]`.
pub fn blend_qi_1d<Z: Fn(usize, f64) -> f64>(nodes: &[f64], values: &[f64], zeta: Z, h: f64, x: f64) -> f64 {
    assert_eq!(nodes.len(), values.len());
    let y = x / h;
    let mut acc = 0.0;
    for j in 0..nodes.len().saturating_sub(1) {
        let (a, b) = (nodes[j], nodes[j + 1]);
        let z = zeta(j, y - a);
        if z == 0.0 {
            continue;
        }
        let lin = values[j] * (b - y) / (b - a) + values[j + 1] * (y - a) / (b - a);
        acc += z * lin;
    }
    acc
}
