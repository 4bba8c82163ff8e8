//! Assembly and evaluation of the approximate partition of unity Θ.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::gauss::KernelC;
use crate::multiindex::{enumerate_multiindices, MultiIndex};
use crate::nodes::NodeSet;
use crate::polynomial::{CompiledPoly, Polynomial};

use super::local::{q_bound, solve_scaled_with, LocalSolution, LSTSQ_CUTOFF};
use super::refine::{GridPoint, TwoScaleGrid};

/// Σ(g) for every grid point and its inverse G(x_j).
#[derive(Clone, Debug)]
pub struct SigmaAssignment {
    pub points: Vec<GridPoint>,
    pub sigma: Vec<Vec<usize>>,
    /// G(x_j): indices into `points`.
    pub groups: Vec<Vec<usize>>,
    /// max over g of dist(g, closest node of Σ(g)) / h_ℓ.
    pub max_gap: f64,
}

fn is_fine(nodes: &NodeSet, i: usize, grid: &TwoScaleGrid) -> bool {
    match grid.h2() {
        Some(h2) if grid.is_two_scale() => nodes.scale(i) < 0.5 * (grid.h1 + h2),
        _ => false,
    }
}

/// Σ(g) = the `count` nodes of the matching scale class nearest to g, ties
/// broken by node index.
pub fn assign_sigma(grid: &TwoScaleGrid, nodes: &NodeSet, count: usize) -> Result<SigmaAssignment> {
    check_dim(grid.n, nodes.dim())?;
    if count == 0 {
        return Err(Error::InvalidParameter("Σ count must be positive".into()));
    }
    let fine: Vec<bool> = (0..nodes.len()).map(|i| is_fine(nodes, i, grid)).collect();
    let points = grid.points();
    let sigma: Vec<Vec<usize>> = points
        .par_iter()
        .map(|p| nodes.k_nearest_filtered(&p.position, count, |i| fine[i] == p.fine))
        .collect();
    let mut groups = vec![Vec::new(); nodes.len()];
    let mut max_gap = 0.0f64;
    for (gi, (p, s)) in points.iter().zip(&sigma).enumerate() {
        if s.len() < count {
            return Err(Error::InvalidParameter(format!(
                "only {} nodes available for a Σ of size {count}",
                s.len()
            )));
        }
        let d: f64 = nodes.point(s[0]).iter().zip(&p.position).map(|(a, b)| (a - b).powi(2)).sum();
        max_gap = max_gap.max(d.sqrt() / p.scale);
        for &j in s {
            groups[j].push(gi);
        }
    }
    if let Some(j) = groups.iter().position(Vec::is_empty) {
        return Err(Error::UncoveredNode(j));
    }
    Ok(SigmaAssignment {
        points,
        sigma,
        groups,
        max_gap,
    })
}

/// Settings for building Θ.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionConfig {
    pub d: f64,
    pub d0: f64,
    pub degree: u32,
    pub count: usize,
    pub rho_cut: f64,
    /// Fail on ill-conditioned local systems instead of falling back.
    pub strict: bool,
    /// Relative singular-value cutoff of the fallback. Raising it trades a
    /// little of Θ's accuracy for smaller partition polynomials, which the
    /// scattered quasi-interpolant needs in 2-D.
    pub lstsq_cutoff: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            d: 2.0,
            d0: 1.5,
            degree: 4,
            count: 5,
            rho_cut: 6.0,
            strict: false,
            lstsq_cutoff: LSTSQ_CUTOFF,
        }
    }
}

/// Per-grid-point outcome of the local solves.
#[derive(Clone, Debug, Default)]
pub struct BuildDiagnostics {
    pub local_systems: usize,
    pub fallback_solves: usize,
    pub max_condition: f64,
    pub max_q: f64,
    pub max_residual: f64,
    /// Largest Q(c*) divided by its a priori bound.
    pub max_q_over_bound: f64,
}

/// Solves the local system of every grid point. Points with identical
/// position, scale and Σ share one solve.
pub fn solve_all(
    assignment: &SigmaAssignment,
    nodes: &NodeSet,
    cfg: &PartitionConfig,
) -> Result<(Vec<LocalSolution>, BuildDiagnostics)> {
    let kernel = KernelC::new(cfg.d, cfg.d0, cfg.degree)?;
    let mut unique: HashMap<(Vec<u64>, Vec<usize>), usize> = HashMap::new();
    let mut slot = Vec::with_capacity(assignment.points.len());
    let mut work: Vec<usize> = Vec::new();
    for (gi, (p, s)) in assignment.points.iter().zip(&assignment.sigma).enumerate() {
        let mut key_pos: Vec<u64> = p.position.iter().map(|v| v.to_bits()).collect();
        key_pos.push(p.scale.to_bits());
        let next = work.len();
        let id = *unique.entry((key_pos, s.clone())).or_insert(next);
        if id == next {
            work.push(gi);
        }
        slot.push(id);
    }
    let solved: Vec<Result<(LocalSolution, f64)>> = work
        .par_iter()
        .map(|&gi| {
            let p = &assignment.points[gi];
            let ys: Vec<Vec<f64>> = assignment.sigma[gi]
                .iter()
                .map(|&j| {
                    nodes
                        .point(j)
                        .iter()
                        .zip(&p.position)
                        .map(|(a, b)| (a - b) / p.scale)
                        .collect()
                })
                .collect();
            let sol = solve_scaled_with(&ys, cfg.degree, &kernel, cfg.strict, cfg.lstsq_cutoff)?;
            let bound = q_bound(&ys, cfg.degree, cfg.d, cfg.d0);
            Ok((sol, bound))
        })
        .collect();
    let mut diag = BuildDiagnostics {
        local_systems: work.len(),
        ..Default::default()
    };
    let mut sols = Vec::with_capacity(work.len());
    for r in solved {
        let (s, bound) = r?;
        diag.fallback_solves += usize::from(s.report.fallback);
        diag.max_condition = diag.max_condition.max(s.report.condition);
        diag.max_q = diag.max_q.max(s.q);
        diag.max_residual = diag.max_residual.max(s.residual);
        if bound > 0.0 {
            diag.max_q_over_bound = diag.max_q_over_bound.max(s.q / bound);
        }
        sols.push(s);
    }
    let out = slot.into_iter().map(|id| sols[id].clone()).collect();
    Ok((out, diag))
}

/// One term P_j((x − x_j)/(h√D)) e^{−|x−x_j|²/h²D} of Θ.
#[derive(Clone, Debug)]
pub struct ThetaEntry {
    pub node: usize,
    pub center: Vec<f64>,
    pub scale: f64,
    pub poly: Polynomial,
}

/// Θ(x) = (πD)^{−n/2} Σ_j P_j((x − x_j)/(h_j√D)) e^{−|x−x_j|²/h_j²D}.
#[derive(Clone, Debug)]
pub struct ThetaFunction {
    pub n: usize,
    pub d: f64,
    pub rho_cut: f64,
    pub entries: Vec<ThetaEntry>,
    compiled: Vec<CompiledPoly>,
    index: NodeSet,
    max_scale: f64,
}

impl ThetaFunction {
    pub fn new(n: usize, d: f64, rho_cut: f64, entries: Vec<ThetaEntry>) -> Result<Self> {
        let mut coords = Vec::with_capacity(entries.len() * n);
        let mut scales = Vec::with_capacity(entries.len());
        for e in &entries {
            check_dim(n, e.center.len())?;
            check_dim(n, e.poly.dim())?;
            coords.extend_from_slice(&e.center);
            scales.push(e.scale);
        }
        let index = NodeSet::new(n, coords, scales)?;
        let compiled = entries.iter().map(|e| e.poly.compile()).collect();
        let max_scale = entries.iter().map(|e| e.scale).fold(0.0, f64::max);
        Ok(ThetaFunction {
            n,
            d,
            rho_cut,
            entries,
            compiled,
            index,
            max_scale,
        })
    }

    pub fn normalization(&self) -> f64 {
        (PI * self.d).powf(-(self.n as f64) / 2.0)
    }

    /// Indices of entries within the truncation radius of `x`.
    pub fn active(&self, x: &[f64]) -> Vec<usize> {
        let sd = self.d.sqrt();
        self.index
            .within(x, self.rho_cut * self.max_scale * sd * (1.0 + 1e-12))
            .into_iter()
            .filter(|&i| {
                let e = &self.entries[i];
                let r = self.rho_cut * e.scale * sd;
                let d2: f64 = e.center.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                d2 <= r * r
            })
            .collect()
    }

    /// Value of one entry without the normalisation factor.
    pub fn entry_value(&self, i: usize, x: &[f64]) -> f64 {
        let e = &self.entries[i];
        let s = e.scale * self.d.sqrt();
        let t: Vec<f64> = x.iter().zip(&e.center).map(|(a, b)| (a - b) / s).collect();
        let r2: f64 = t.iter().map(|v| v * v).sum();
        self.compiled[i].eval(&t) * (-r2).exp()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.active(x).into_iter().map(|i| self.entry_value(i, x)).sum();
        self.normalization() * sum
    }

    /// Writes one row per entry: center, scale, D, then the coefficients of
    /// P_j against all multi-indices up to the largest degree, graded
    /// lexicographic.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let degree = self.entries.iter().map(|e| e.poly.degree()).max().unwrap_or(0);
        let basis = enumerate_multiindices(self.n, 0, degree);
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = vec!["node".into()];
        header.extend((1..=self.n).map(|i| format!("x{i}")));
        header.push("h".into());
        header.push("D".into());
        header.extend(basis.iter().map(|a| format!("c{a:?}").replace(',', " ")));
        wr.write_record(&header)?;
        for e in &self.entries {
            let mut row = vec![e.node.to_string()];
            row.extend(e.center.iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", e.scale));
            row.push(format!("{:e}", self.d));
            row.extend(basis.iter().map(|a| format!("{:e}", e.poly.coefficient(a))));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the format of [`ThetaFunction::write_csv`].
    pub fn read_csv<R: Read>(r: R, n: usize, rho_cut: f64) -> Result<ThetaFunction> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let cols = rd.headers()?.len();
        let ncoef = cols
            .checked_sub(n + 3)
            .ok_or_else(|| Error::InvalidParameter("too few columns for a Θ table".into()))?;
        let mut degree = 0;
        while enumerate_multiindices(n, 0, degree).len() < ncoef {
            degree += 1;
        }
        let basis = enumerate_multiindices(n, 0, degree);
        if basis.len() != ncoef {
            return Err(Error::InvalidParameter(format!("{ncoef} coefficient columns do not match a full basis")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number {s:?} in Θ table")))
        };
        let mut entries = Vec::new();
        let mut d = f64::NAN;
        for rec in rd.records() {
            let rec = rec?;
            let node: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter("bad node index".into()))?;
            let center = (1..=n).map(|c| parse(&rec[c])).collect::<Result<Vec<_>>>()?;
            let scale = parse(&rec[n + 1])?;
            d = parse(&rec[n + 2])?;
            let coeffs = (n + 3..cols).map(|c| parse(&rec[c])).collect::<Result<Vec<_>>>()?;
            entries.push(ThetaEntry {
                node,
                center,
                scale,
                poly: Polynomial::from_coefficients(&basis, &coeffs),
            });
        }
        ThetaFunction::new(n, d, rho_cut, entries)
    }
}

/// P_j = Σ_{g∈G(x_j)} ã_g P_{j,g}, with ã_g = 1 on the coarse grid.
pub fn assemble_theta(
    nodes: &NodeSet,
    assignment: &SigmaAssignment,
    solutions: &[LocalSolution],
    cfg: &PartitionConfig,
) -> Result<ThetaFunction> {
    let n = nodes.dim();
    let mut entries = Vec::with_capacity(nodes.len());
    for (j, groups) in assignment.groups.iter().enumerate() {
        if groups.is_empty() {
            continue;
        }
        let mut poly = Polynomial::zero(n);
        for &gi in groups {
            let pos = assignment.sigma[gi]
                .iter()
                .position(|&k| k == j)
                .expect("G(x_j) consistent with Σ");
            let w = assignment.points[gi].weight;
            poly = &poly + &solutions[gi].polynomial(pos).scale(w);
        }
        entries.push(ThetaEntry {
            node: j,
            center: nodes.point(j).to_vec(),
            scale: assignment.points[groups[0]].scale,
            poly,
        });
    }
    ThetaFunction::new(n, cfg.d, cfg.rho_cut, entries)
}

/// Assigns Σ, solves all local systems and assembles Θ.
pub fn build_theta(
    grid: &TwoScaleGrid,
    nodes: &NodeSet,
    cfg: &PartitionConfig,
) -> Result<(ThetaFunction, BuildDiagnostics)> {
    if (grid.d - cfg.d).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "grid built for D = {} but partition config has D = {}",
            grid.d, cfg.d
        )));
    }
    let assignment = assign_sigma(grid, nodes, cfg.count)?;
    let (sols, diag) = solve_all(&assignment, nodes, cfg)?;
    if diag.fallback_solves > 0 {
        log::info!(
            "{} of {} local systems used the least-squares fallback",
            diag.fallback_solves,
            diag.local_systems
        );
    }
    let theta = assemble_theta(nodes, &assignment, &sols, cfg)?;
    Ok((theta, diag))
}

/// Samples of Θ − 1 on a tensor grid.
#[derive(Clone, Debug)]
pub struct ThetaScan {
    pub points: Vec<Vec<f64>>,
    pub deviation: Vec<f64>,
    pub sup: f64,
}

/// Evaluates Θ − 1 at `resolution` points per axis over `[lo, hi]`.
pub fn theta_scan(theta: &ThetaFunction, lo: &[f64], hi: &[f64], resolution: usize) -> Result<ThetaScan> {
    check_dim(theta.n, lo.len())?;
    check_dim(theta.n, hi.len())?;
    if resolution < 2 {
        return Err(Error::InvalidParameter("scan resolution must be at least 2".into()));
    }
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| {
            (0..resolution)
                .map(|i| a + (b - a) * i as f64 / (resolution - 1) as f64)
                .collect()
        })
        .collect();
    let idx = crate::nodes::IndexBox::cube(theta.n, 0, resolution as i64 - 1);
    let points: Vec<Vec<f64>> = idx
        .indices()
        .into_iter()
        .map(|i| i.iter().enumerate().map(|(a, &k)| axes[a][k as usize]).collect())
        .collect();
    let deviation: Vec<f64> = points.par_iter().map(|x| theta.eval(x) - 1.0).collect();
    let sup = deviation.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ThetaScan {
        points,
        deviation,
        sup,
    })
}

/// x ↦ 2 Σ_{j=1}^{terms} e^{−π²Dj²} cos(2πjx), the uniform-grid saturation term.
pub fn saturation_reference(d: f64, terms: usize) -> impl Fn(f64) -> f64 {
    assert!(terms >= 1, "need at least one term");
    move |x: f64| {
        (1..=terms)
            .map(|j| {
                let j = j as f64;
                2.0 * (-PI * PI * d * j * j).exp() * (2.0 * PI * j * x).cos()
            })
            .sum()
    }
}

/// Polynomial-space basis used by every local system of degree `l`.
pub fn local_basis(n: usize, l: u32) -> Vec<MultiIndex> {
    enumerate_multiindices(n, 0, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::{uniform_grid, IndexBox};

    #[test]
    fn saturation_values() {
        let s = saturation_reference(2.0, 5);
        assert!((s(0.0) - 5.35e-9).abs() < 0.01e-9);
        assert!(s(0.25).abs() < 1e-20);
        assert!((s(0.3) - s(1.3)).abs() < 1e-22);
    }

    #[test]
    fn uniform_nodes_reduce_to_theta_series() {
        let w = IndexBox::cube(1, -20, 20);
        let grid = TwoScaleGrid::single_scale(1.0, 2.0, w.clone());
        let nodes = uniform_grid(1, 1.0, &w).unwrap();
        let cfg = PartitionConfig {
            degree: 0,
            count: 1,
            ..Default::default()
        };
        let (theta, _) = build_theta(&grid, &nodes, &cfg).unwrap();
        for e in &theta.entries {
            assert!((e.poly.coefficient(&MultiIndex::zero(1)) - 1.0).abs() < 1e-14);
        }
        let scan = theta_scan(&theta, &[-2.0], &[2.0], 81).unwrap();
        let expect = saturation_reference(2.0, 4)(0.0);
        assert!((scan.sup - expect).abs() < 1e-11, "{} vs {}", scan.sup, expect);
    }

    #[test]
    fn csv_round_trip() {
        let w = IndexBox::cube(1, -3, 3);
        let grid = TwoScaleGrid::single_scale(1.0, 2.0, w.clone());
        let nodes = crate::nodes::generate_perturbed_grid(1, 1.0, 0.5, &w, 3).unwrap();
        let cfg = PartitionConfig {
            degree: 2,
            count: 3,
            ..Default::default()
        };
        let (theta, _) = build_theta(&grid, &nodes, &cfg).unwrap();
        let mut buf = Vec::new();
        theta.write_csv(&mut buf).unwrap();
        let back = ThetaFunction::read_csv(buf.as_slice(), 1, 6.0).unwrap();
        for x in [-0.4, 0.0, 0.9] {
            assert!((back.eval(&[x]) - theta.eval(&[x])).abs() < 1e-14);
        }
    }
}
