//! Stars: neighbour sets with an invertible scaled Vandermonde matrix, used to
//! recover Taylor coefficients from samples.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::invert_with_det;
use crate::multiindex::{enumerate_multiindices, star_size, MultiIndex};
use crate::nodes::NodeSet;

/// Default lower bound on |det V|.
pub const DEFAULT_DET_THRESHOLD: f64 = 1e-3;

/// How star members are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum StarStrategy {
    /// Candidates inside `B(x_j, κ₂h)` ranked by distance; the first
    /// `max_combinations` combinations in rank order that pass the
    /// determinant test compete on [`Star::remainder_weight`].
    Nearest { kappa2: f64, max_combinations: usize },
    /// Fixed offsets in grid-index space, e.g. `[[1, 0], [0, 1]]`. Requires a
    /// node set generated from a grid layout.
    Stencil(Vec<Vec<i64>>),
}

impl Default for StarStrategy {
    fn default() -> Self {
        StarStrategy::Nearest {
            kappa2: 3.0,
            max_combinations: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarParams {
    pub order: u32,
    pub det_threshold: f64,
    pub strategy: StarStrategy,
}

impl StarParams {
    pub fn new(order: u32) -> Self {
        StarParams {
            order,
            det_threshold: DEFAULT_DET_THRESHOLD,
            strategy: StarStrategy::default(),
        }
    }

    pub fn with_stencil(order: u32, offsets: Vec<Vec<i64>>) -> Self {
        StarParams {
            order,
            det_threshold: DEFAULT_DET_THRESHOLD,
            strategy: StarStrategy::Stencil(offsets),
        }
    }
}

/// A star st(x_j) with its Vandermonde data.
#[derive(Clone, Debug)]
pub struct Star {
    pub owner: usize,
    pub members: Vec<usize>,
    pub h: f64,
    /// Multi-indices with 1 <= |α| <= N−1, graded lexicographic.
    pub alphas: Vec<MultiIndex>,
    /// Rows indexed by member k, columns by α: ((x_k − x_j)/h)^α.
    pub vandermonde: DMatrix<f64>,
    /// `inverse[(α, k)] = b_{α,k}`.
    pub inverse: DMatrix<f64>,
    pub det: f64,
}

impl Star {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Scaled Taylor coefficients `d_α = h^{|α|} ∂^α u(x_j)/α!` recovered from
    /// samples, given u at the owner and at each member.
    pub fn taylor_coefficients(&self, owner_value: f64, member_values: &[f64]) -> Vec<f64> {
        assert_eq!(member_values.len(), self.members.len());
        let du = DVector::from_iterator(
            self.members.len(),
            member_values.iter().map(|v| v - owner_value),
        );
        (&self.inverse * du).iter().copied().collect()
    }

    /// Σ_k (Σ_α |b_{α,k}|) |y_k|^N with y_k = (x_k − x_j)/h: bounds the
    /// Taylor remainder carried into the recovered coefficients.
    pub fn remainder_weight(&self, nodes: &NodeSet, order: u32) -> f64 {
        let xj = nodes.point(self.owner);
        self.members
            .iter()
            .enumerate()
            .map(|(col, &k)| {
                let r: f64 = nodes.point(k).iter().zip(xj).map(|(a, b)| ((a - b) / self.h).powi(2)).sum();
                let b: f64 = self.inverse.column(col).iter().map(|v| v.abs()).sum();
                b * r.sqrt().powi(order as i32)
            })
            .sum()
    }

    /// Σ_k b_{α,k} for every α.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.alphas.len())
            .map(|a| self.inverse.row(a).iter().sum())
            .collect()
    }
}

fn vandermonde(nodes: &NodeSet, owner: usize, members: &[usize], h: f64, alphas: &[MultiIndex]) -> DMatrix<f64> {
    let xj = nodes.point(owner);
    DMatrix::from_fn(members.len(), alphas.len(), |r, c| {
        let t: Vec<f64> = nodes
            .point(members[r])
            .iter()
            .zip(xj)
            .map(|(a, b)| (a - b) / h)
            .collect();
        alphas[c].monomial(&t)
    })
}

fn finish(nodes: &NodeSet, owner: usize, members: Vec<usize>, h: f64, alphas: Vec<MultiIndex>) -> Option<Star> {
    let v = vandermonde(nodes, owner, &members, h, &alphas);
    let (inverse, det) = invert_with_det(&v)?;
    Some(Star {
        owner,
        members,
        h,
        alphas,
        vandermonde: v,
        inverse,
        det,
    })
}

/// Builds the star of node `owner` for approximation order `params.order`
/// with Vandermonde scaling `h`.
pub fn build_star(nodes: &NodeSet, owner: usize, h: f64, params: &StarParams) -> Result<Star> {
    let n = nodes.dim();
    let order = params.order;
    if order == 0 {
        return Err(Error::InvalidParameter("star order N must be at least 1".into()));
    }
    let m = star_size(n, order);
    let alphas = if order > 1 {
        enumerate_multiindices(n, 1, order - 1)
    } else {
        Vec::new()
    };
    if m == 0 {
        return Ok(Star {
            owner,
            members: Vec::new(),
            h,
            alphas,
            vandermonde: DMatrix::zeros(0, 0),
            inverse: DMatrix::zeros(0, 0),
            det: 1.0,
        });
    }
    let not_found = |best_det: f64| Error::StarNotFound {
        node: owner,
        best_det,
        threshold: params.det_threshold,
    };
    match &params.strategy {
        StarStrategy::Stencil(offsets) => {
            if offsets.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "stencil has {} offsets, star needs {m}",
                    offsets.len()
                )));
            }
            let base = nodes.grid_index(owner).ok_or_else(|| {
                Error::InvalidParameter("stencil stars need a node set with a grid layout".into())
            })?;
            let mut members = Vec::with_capacity(m);
            for off in offsets {
                let idx: Vec<i64> = base.iter().zip(off).map(|(a, b)| a + b).collect();
                members.push(nodes.node_at_index(&idx).ok_or_else(|| not_found(0.0))?);
            }
            let star = finish(nodes, owner, members, h, alphas).ok_or_else(|| not_found(0.0))?;
            if star.det.abs() < params.det_threshold {
                return Err(not_found(star.det.abs()));
            }
            Ok(star)
        }
        StarStrategy::Nearest {
            kappa2,
            max_combinations,
        } => {
            let xj = nodes.point(owner).to_vec();
            let radius = kappa2 * h;
            let mut cand: Vec<(f64, usize)> = nodes
                .within(&xj, radius)
                .into_iter()
                .filter(|&i| i != owner)
                .map(|i| {
                    let d: f64 = nodes.point(i).iter().zip(&xj).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, i)
                })
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if cand.len() < m {
                return Err(not_found(0.0));
            }
            let ranked: Vec<usize> = cand.into_iter().map(|c| c.1).collect();
            let mut best_det = 0.0f64;
            let mut best: Option<(f64, Star)> = None;
            let mut combo: Vec<usize> = (0..m).collect();
            for _ in 0..*max_combinations {
                let members: Vec<usize> = combo.iter().map(|&r| ranked[r]).collect();
                if let Some(star) = finish(nodes, owner, members, h, alphas.clone()) {
                    best_det = best_det.max(star.det.abs());
                    if star.det.abs() >= params.det_threshold {
                        let cost = star.remainder_weight(nodes, order);
                        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                            best = Some((cost, star));
                        }
                    }
                }
                if !next_combination(&mut combo, ranked.len()) {
                    break;
                }
            }
            best.map(|(_, s)| s).ok_or_else(|| not_found(best_det))
        }
    }
}

// lexicographic successor of a sorted k-subset of 0..len
fn next_combination(c: &mut [usize], len: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < len - k + i {
            c[i] += 1;
            for t in i + 1..k {
                c[t] = c[t - 1] + 1;
            }
            return true;
        }
    }
    false
}
