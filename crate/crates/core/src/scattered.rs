//! Quasi-interpolation of scattered data: partition polynomials combined
//! with star-based Taylor recovery.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::multiindex::enumerate_multiindices;
use crate::nodes::NodeSet;
use crate::partition::ThetaFunction;
use crate::polynomial::{CompiledPoly, Polynomial};
use crate::star::{build_star, Star, StarParams};

/// Fallback cutoff for partitions that feed [`build_pjk`]. The h^N term of
/// the error is weighted by the size of the partition polynomials, and a
/// tighter cutoff lets them grow large and cancel.
pub const PARTITION_CUTOFF: f64 = 1e-6;

/// One node's contribution: the atom center and scale, with one polynomial
/// per data node it reads.
#[derive(Clone, Debug)]
pub struct ScatteredAtom {
    pub node: usize,
    pub center: Vec<f64>,
    pub scale: f64,
    /// (k, P_{j,k}) with the owner first.
    pub weights: Vec<(usize, Polynomial)>,
    /// P_j of the partition.
    pub partition: Polynomial,
}

impl ScatteredAtom {
    /// Σ_k P_{j,k}.
    pub fn column_sum(&self) -> Polynomial {
        self.weights
            .iter()
            .fold(Polynomial::zero(self.center.len()), |acc, (_, p)| &acc + p)
    }
}

/// Mu(x) = (πD)^{−n/2} Σ_j Σ_k u(x_k) P_{j,k}((x − x_j)/(h_j√D)) e^{−|x−x_j|²/h_j²D}.
#[derive(Clone, Debug)]
pub struct ScatteredQI {
    pub n: usize,
    pub d: f64,
    pub order: u32,
    pub rho_cut: f64,
    pub atoms: Vec<ScatteredAtom>,
    compiled: Vec<Vec<(usize, CompiledPoly)>>,
    index: NodeSet,
    max_scale: f64,
}

/// Value of Mu at a point plus what the truncation left out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub active_atoms: usize,
    /// Upper estimate e^{−ρ²}·(number of atoms) of the dropped Gaussian mass,
    /// relative to one atom's peak.
    pub truncation_bound: f64,
}

/// P_{j,j} = P_j (1 − Σ_α Σ_k b_{α,k} t^α) and P_{j,k} = P_j Σ_α b_{α,k} t^α,
/// with t = (x − x_j)/h_j = √D · t' rewritten in the atom variable t'.
pub fn atom_from_star(partition: &Polynomial, star: &Star, center: Vec<f64>, scale: f64, d: f64) -> ScatteredAtom {
    let n = center.len();
    let sd = d.sqrt();
    let mut weights = Vec::with_capacity(star.size() + 1);
    let mut correction = Polynomial::zero(n);
    let mut member_polys = Vec::with_capacity(star.size());
    for k in 0..star.size() {
        let mut p = Polynomial::zero(n);
        for (a, alpha) in star.alphas.iter().enumerate() {
            let c = star.inverse[(a, k)] * sd.powi(alpha.order() as i32);
            p.add_term(alpha.clone(), c);
        }
        correction = &correction + &p;
        member_polys.push(p);
    }
    let own = &Polynomial::constant(n, 1.0) - &correction;
    weights.push((star.owner, partition * &own));
    for (k, p) in star.members.iter().zip(member_polys) {
        weights.push((*k, partition * &p));
    }
    ScatteredAtom {
        node: star.owner,
        center,
        scale,
        weights,
        partition: partition.clone(),
    }
}

/// Combines Θ with one star per node. Stars use the node's own scale for the
/// Vandermonde scaling and search radius.
pub fn build_pjk(theta: &ThetaFunction, nodes: &NodeSet, params: &StarParams) -> Result<ScatteredQI> {
    check_dim(theta.n, nodes.dim())?;
    let atoms: Vec<Result<ScatteredAtom>> = theta
        .entries
        .par_iter()
        .map(|e| {
            if e.node >= nodes.len() {
                return Err(Error::InvalidParameter(format!("Θ refers to missing node {}", e.node)));
            }
            let star = build_star(nodes, e.node, e.scale, params)?;
            Ok(atom_from_star(&e.poly, &star, e.center.clone(), e.scale, theta.d))
        })
        .collect();
    let atoms = atoms.into_iter().collect::<Result<Vec<_>>>()?;
    ScatteredQI::new(theta.n, theta.d, params.order, theta.rho_cut, atoms)
}

impl ScatteredQI {
    pub fn new(n: usize, d: f64, order: u32, rho_cut: f64, atoms: Vec<ScatteredAtom>) -> Result<Self> {
        let mut coords = Vec::with_capacity(atoms.len() * n);
        let mut scales = Vec::with_capacity(atoms.len());
        for a in &atoms {
            check_dim(n, a.center.len())?;
            coords.extend_from_slice(&a.center);
            scales.push(a.scale);
        }
        let index = NodeSet::new(n, coords, scales)?;
        let compiled = atoms
            .iter()
            .map(|a| a.weights.iter().map(|(k, p)| (*k, p.compile())).collect())
            .collect();
        let max_scale = atoms.iter().map(|a| a.scale).fold(0.0, f64::max);
        Ok(ScatteredQI {
            n,
            d,
            order,
            rho_cut,
            atoms,
            compiled,
            index,
            max_scale,
        })
    }

    /// Largest node index read by any atom.
    pub fn max_node(&self) -> Option<usize> {
        self.atoms.iter().flat_map(|a| a.weights.iter().map(|w| w.0)).max()
    }

    fn active(&self, x: &[f64]) -> Vec<usize> {
        let sd = self.d.sqrt();
        self.index
            .within(x, self.rho_cut * self.max_scale * sd * (1.0 + 1e-12))
            .into_iter()
            .filter(|&i| {
                let a = &self.atoms[i];
                let r = self.rho_cut * a.scale * sd;
                let d2: f64 = a.center.iter().zip(x).map(|(p, q)| (p - q).powi(2)).sum();
                d2 <= r * r
            })
            .collect()
    }

    pub fn evaluate_detailed(&self, data: &[f64], x: &[f64]) -> Result<Evaluation> {
        check_dim(self.n, x.len())?;
        if let Some(m) = self.max_node() {
            if m >= data.len() {
                return Err(Error::DimensionMismatch {
                    expected: m + 1,
                    got: data.len(),
                });
            }
        }
        let sd = self.d.sqrt();
        let active = self.active(x);
        let mut sum = 0.0;
        let mut t = vec![0.0; self.n];
        for &i in &active {
            let a = &self.atoms[i];
            let s = a.scale * sd;
            for (ti, (xi, ci)) in t.iter_mut().zip(x.iter().zip(&a.center)) {
                *ti = (xi - ci) / s;
            }
            let r2: f64 = t.iter().map(|v| v * v).sum();
            let g = (-r2).exp();
            let mut inner = 0.0;
            for (k, p) in &self.compiled[i] {
                inner += data[*k] * p.eval(&t);
            }
            sum += inner * g;
        }
        let norm = (PI * self.d).powf(-(self.n as f64) / 2.0);
        let dropped = self.atoms.len() - active.len();
        Ok(Evaluation {
            value: norm * sum,
            active_atoms: active.len(),
            truncation_bound: dropped as f64 * (-self.rho_cut * self.rho_cut).exp(),
        })
    }

    pub fn evaluate(&self, data: &[f64], x: &[f64]) -> Result<f64> {
        self.evaluate_detailed(data, x).map(|e| e.value)
    }

    /// Rows (node, neighbor, coefficients of P_{j,k}) against all multi-indices
    /// up to the largest degree, graded lexicographic.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let degree = self
            .atoms
            .iter()
            .flat_map(|a| a.weights.iter().map(|(_, p)| p.degree()))
            .max()
            .unwrap_or(0);
        let basis = enumerate_multiindices(self.n, 0, degree);
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = vec!["node".into(), "neighbor".into()];
        header.extend((1..=self.n).map(|i| format!("x{i}")));
        header.push("h".into());
        header.extend(basis.iter().map(|a| format!("c{a:?}").replace(',', " ")));
        wr.write_record(&header)?;
        for a in &self.atoms {
            for (k, p) in &a.weights {
                let mut row = vec![a.node.to_string(), k.to_string()];
                row.extend(a.center.iter().map(|v| format!("{v:e}")));
                row.push(format!("{:e}", a.scale));
                row.extend(basis.iter().map(|b| format!("{:e}", p.coefficient(b))));
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn evaluate_scattered(qi: &ScatteredQI, data: &[f64], x: &[f64]) -> Result<f64> {
    qi.evaluate(data, x)
}
