//! Two-scale grids linked by the Gaussian refinement relation.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nodes::{IndexBox, NodeSet};

/// Coefficients a_k of the refinement relation on the index set S.
#[derive(Clone, Debug)]
pub struct Refinement {
    /// Scale ratio H = h₂/h₁.
    pub ratio: f64,
    pub indices: Vec<Vec<i64>>,
    pub coeffs: Vec<f64>,
    /// Σ_{k∉S} a_k.
    pub tail: f64,
    /// The bound e^{−π²D(1−H²)} the tail is held under.
    pub tail_bound: f64,
}

fn coeff_1d(k: i64, ratio: f64, d: f64) -> f64 {
    let q = 1.0 - ratio * ratio;
    (PI * d * q).powf(-0.5) * (-(ratio * ratio) * (k * k) as f64 / (q * d)).exp()
}

/// a_k = (πD(1−H²))^{−n/2} e^{−H²|k|²/((1−H²)D)}, with S the smallest
/// centered ball of ℤⁿ whose complement carries less than e^{−π²D(1−H²)}.
pub fn refinement_coeffs(ratio: f64, d: f64, n: usize) -> Result<Refinement> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("scale ratio H = {ratio} outside (0, 1)")));
    }
    if !(d > 0.0) || n == 0 {
        return Err(Error::InvalidParameter("D and n must be positive".into()));
    }
    let q = 1.0 - ratio * ratio;
    let bound = (-PI * PI * d * q).exp();
    // beyond this radius a single factor is below e^{-45}
    let kmax = ((45.0 * q * d).sqrt() / ratio).ceil() as i64 + 1;
    let table: Vec<f64> = (0..=kmax).map(|k| coeff_1d(k, ratio, d)).collect();
    let all = IndexBox::cube(n, -kmax, kmax).indices();
    let mut by_radius: Vec<(i64, f64, Vec<i64>)> = all
        .into_iter()
        .map(|k| {
            let r2 = k.iter().map(|v| v * v).sum::<i64>();
            let a = k.iter().map(|v| table[v.unsigned_abs() as usize]).product();
            (r2, a, k)
        })
        .collect();
    by_radius.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.2.cmp(&b.2)));
    // tail sums from the outside in, by distinct radius
    let mut tail_after: Vec<f64> = vec![0.0; by_radius.len() + 1];
    for i in (0..by_radius.len()).rev() {
        tail_after[i] = tail_after[i + 1] + by_radius[i].1;
    }
    let mut cut = by_radius.len();
    let mut i = 0;
    while i < by_radius.len() {
        let r2 = by_radius[i].0;
        let mut end = i;
        while end < by_radius.len() && by_radius[end].0 == r2 {
            end += 1;
        }
        if tail_after[end] < bound {
            cut = end;
            break;
        }
        i = end;
    }
    let tail = tail_after[cut];
    let (indices, coeffs) = by_radius[..cut].iter().map(|(_, a, k)| (k.clone(), *a)).unzip();
    Ok(Refinement {
        ratio,
        indices,
        coeffs,
        tail,
        tail_bound: bound,
    })
}

/// An axis-aligned box of ℝⁿ, bounds inclusive.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Region { lower, upper }
    }

    pub fn is_empty(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(l, u)| l > u)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// One Gaussian center of the piecewise uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub position: Vec<f64>,
    /// h₁ on G₁, h₂ on G₂.
    pub scale: f64,
    /// 1 on G₁, ã_g = a_k on G₂.
    pub weight: f64,
    pub fine: bool,
}

/// Coarse grid h₁Z₁ outside Ω and refined grid {h₁m + h₂k : m ∈ Z₂, k ∈ S}.
#[derive(Clone, Debug)]
pub struct TwoScaleGrid {
    pub n: usize,
    pub h1: f64,
    pub d: f64,
    /// Truncation of ℤⁿ the grid lives on.
    pub working: IndexBox,
    pub omega: Option<Region>,
    pub refinement: Option<Refinement>,
    pub z2: Vec<Vec<i64>>,
    z2_set: HashSet<Vec<i64>>,
}

impl TwoScaleGrid {
    /// The uniform grid h₁·working with no refined region.
    pub fn single_scale(h1: f64, d: f64, working: IndexBox) -> Self {
        TwoScaleGrid {
            n: working.dim(),
            h1,
            d,
            working,
            omega: None,
            refinement: None,
            z2: Vec::new(),
            z2_set: HashSet::new(),
        }
    }

    /// General constructor; an empty Ω or empty Z₂ yields the single-scale grid.
    pub fn new(omega: Option<Region>, h1: f64, ratio: f64, d: f64, working: IndexBox) -> Result<Self> {
        let n = working.dim();
        if !(h1 > 0.0 && d > 0.0) {
            return Err(Error::InvalidParameter("h1 and D must be positive".into()));
        }
        let refinement = refinement_coeffs(ratio, d, n)?;
        let h2 = ratio * h1;
        let mut z2 = Vec::new();
        if let Some(om) = omega.as_ref().filter(|o| !o.is_empty()) {
            crate::error::check_dim(n, om.lower.len())?;
            for m in working.indices() {
                let inside = refinement.indices.iter().all(|k| {
                    let p: Vec<f64> = m
                        .iter()
                        .zip(k)
                        .map(|(&mi, &ki)| h1 * mi as f64 + h2 * ki as f64)
                        .collect();
                    om.contains(&p)
                });
                if inside {
                    z2.push(m);
                }
            }
        }
        let z2_set = z2.iter().cloned().collect();
        Ok(TwoScaleGrid {
            n,
            h1,
            d,
            working,
            omega,
            refinement: Some(refinement),
            z2,
            z2_set,
        })
    }

    pub fn h2(&self) -> Option<f64> {
        self.refinement.as_ref().map(|r| r.ratio * self.h1)
    }

    pub fn in_z2(&self, m: &[i64]) -> bool {
        self.z2_set.contains(m)
    }

    pub fn is_two_scale(&self) -> bool {
        !self.z2.is_empty()
    }

    /// G₁ followed by G₂ (the latter as a multiset over (m, k)).
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for m in self.working.indices() {
            if self.in_z2(&m) {
                continue;
            }
            out.push(GridPoint {
                position: m.iter().map(|&v| v as f64 * self.h1).collect(),
                scale: self.h1,
                weight: 1.0,
                fine: false,
            });
        }
        if let (Some(r), Some(h2)) = (&self.refinement, self.h2()) {
            for m in &self.z2 {
                for (k, &a) in r.indices.iter().zip(&r.coeffs) {
                    out.push(GridPoint {
                        position: m
                            .iter()
                            .zip(k)
                            .map(|(&mi, &ki)| self.h1 * mi as f64 + h2 * ki as f64)
                            .collect(),
                        scale: h2,
                        weight: a,
                        fine: true,
                    });
                }
            }
        }
        out
    }

    /// (πD)^{−n/2} (Σ_{G₁} e^{−|x−g|²/h₁²D} + Σ_{G₂} ã_g e^{−|x−g|²/h₂²D}).
    pub fn reference_function(&self) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        let pts = self.points();
        let norm = (PI * self.d).powf(-(self.n as f64) / 2.0);
        let d = self.d;
        move |x: &[f64]| {
            let mut acc = 0.0;
            for p in &pts {
                let r2: f64 = p.position.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                let e = r2 / (p.scale * p.scale * d);
                if e < 745.0 {
                    acc += p.weight * (-e).exp();
                }
            }
            norm * acc
        }
    }
}

/// Like [`TwoScaleGrid::new`] but insists on a nonempty refined region.
pub fn build_two_scale(omega: &Region, h1: f64, ratio: f64, d: f64, working: IndexBox) -> Result<TwoScaleGrid> {
    if omega.is_empty() {
        return Err(Error::EmptyOmega);
    }
    let grid = TwoScaleGrid::new(Some(omega.clone()), h1, ratio, d, working)?;
    if grid.z2.is_empty() {
        return Err(Error::EmptyOmega);
    }
    Ok(grid)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn ball_point(seed: u64, key: &[i64], tag: u64, n: usize) -> Vec<f64> {
    let mut s = mix(seed ^ tag);
    for &c in key {
        s = mix(s ^ c as u64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    loop {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            return p;
        }
    }
}

/// Nodes matching a two-scale grid: one node in B(h₁m, κ₁h₁) with scale h₁
/// for every m ∉ Z₂, and one node in B(g, κ₁h₂) with scale h₂ for every
/// distinct position g of G₂.
pub fn generate_two_scale(grid: &TwoScaleGrid, kappa1: f64, seed: u64) -> Result<NodeSet> {
    if !(0.0..=0.5).contains(&kappa1) {
        return Err(Error::InvalidParameter(format!("kappa1 = {kappa1} outside [0, 1/2]")));
    }
    let n = grid.n;
    let mut coords = Vec::new();
    let mut scales = Vec::new();
    for m in grid.working.indices() {
        if grid.in_z2(&m) {
            continue;
        }
        let u = ball_point(seed, &m, 1, n);
        for a in 0..n {
            coords.push(grid.h1 * m[a] as f64 + kappa1 * grid.h1 * u[a]);
        }
        scales.push(grid.h1);
    }
    if let Some(h2) = grid.h2() {
        let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
        for p in grid.points().into_iter().filter(|p| p.fine) {
            // positions keyed on a fine lattice so coincident (m, k) merge
            let key: Vec<i64> = p.position.iter().map(|v| (v / h2 * 1024.0).round() as i64).collect();
            if seen.insert(key.clone(), ()).is_some() {
                continue;
            }
            let u = ball_point(seed, &key, 2, n);
            for a in 0..n {
                coords.push(p.position[a] + kappa1 * h2 * u[a]);
            }
            scales.push(h2);
        }
    }
    NodeSet::new(n, coords, scales)
}
