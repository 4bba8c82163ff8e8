//! Checks of the node-distribution conditions, with worst-case witnesses.

use rayon::prelude::*;

use crate::error::Error;
use crate::nodes::{IndexBox, NodeSet};
use crate::partition::TwoScaleGrid;
use crate::star::{build_star, StarParams};

/// What to check against.
#[derive(Clone, Debug)]
pub struct ConditionParams {
    pub h: f64,
    pub kappa1: f64,
    /// Grid indices j for which B(hj, hκ₁) is tested.
    pub index_box: IndexBox,
    pub star: StarParams,
}

/// Ball coverage around the grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub holds: bool,
    /// Largest distance from hj to its closest node, in units of h.
    pub worst_gap: f64,
    pub witness: Option<Vec<i64>>,
}

/// Star existence with the determinant bound.
#[derive(Clone, Debug, PartialEq)]
pub struct StarReport {
    pub holds: bool,
    pub min_det: f64,
    /// Node whose star has the smallest |det V| or could not be built.
    pub witness: Option<usize>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub condition1: CoverageReport,
    /// Stars of the closest nodes x̃_j, scaled by h.
    pub condition2a: StarReport,
    /// Interior nodes not contained in any ST(x̃_j).
    pub condition2b_uncovered: Vec<usize>,
    /// Stars of every node, scaled by its own h_j.
    pub condition3: StarReport,
    pub condition4: Option<CoverageReport>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.condition1.holds
            && self.condition2a.holds
            && self.condition2b_uncovered.is_empty()
            && self.condition3.holds
            && self.condition4.as_ref().is_none_or(|c| c.holds)
    }
}

fn star_report(results: Vec<(usize, Result<f64, f64>)>) -> StarReport {
    let mut min_det = f64::INFINITY;
    let mut witness = None;
    let mut failures = 0;
    for (node, r) in results {
        let d = match r {
            Ok(d) => d,
            Err(d) => {
                failures += 1;
                d
            }
        };
        if d < min_det {
            min_det = d;
            witness = Some(node);
        }
    }
    StarReport {
        holds: failures == 0,
        min_det,
        witness,
        failures,
    }
}

fn star_det(nodes: &NodeSet, owner: usize, h: f64, params: &StarParams) -> Result<f64, f64> {
    match build_star(nodes, owner, h, params) {
        Ok(s) => Ok(s.det.abs()),
        Err(Error::StarNotFound { best_det, .. }) => Err(best_det),
        Err(_) => Err(0.0),
    }
}

/// Evaluates Conditions 1–3, and Condition 4 when a two-scale grid is given.
pub fn check_conditions(nodes: &NodeSet, params: &ConditionParams, two_scale: Option<&TwoScaleGrid>) -> ConditionReport {
    let h = params.h;
    let indices = params.index_box.indices();
    let closest: Vec<(Vec<i64>, Option<usize>, f64)> = indices
        .par_iter()
        .map(|j| {
            let g: Vec<f64> = j.iter().map(|&v| h * v as f64).collect();
            match nodes.nearest(&g) {
                Some(i) => {
                    let d = dist(nodes.point(i), &g) / h;
                    (j.clone(), Some(i), d)
                }
                None => (j.clone(), None, f64::INFINITY),
            }
        })
        .collect();

    let mut worst_gap = 0.0f64;
    let mut witness = None;
    for (j, _, d) in &closest {
        if *d > worst_gap {
            worst_gap = *d;
            witness = Some(j.clone());
        }
    }
    let holds1 = worst_gap <= params.kappa1;
    let condition1 = CoverageReport {
        holds: holds1,
        worst_gap,
        witness: if holds1 { None } else { witness },
    };

    let mut owners: Vec<usize> = closest.iter().filter_map(|c| c.1).collect();
    owners.sort_unstable();
    owners.dedup();
    let stars2: Vec<(usize, Result<f64, f64>, Vec<usize>)> = owners
        .par_iter()
        .map(|&o| match build_star(nodes, o, h, &params.star) {
            Ok(s) => (o, Ok(s.det.abs()), s.members),
            Err(Error::StarNotFound { best_det, .. }) => (o, Err(best_det), Vec::new()),
            Err(_) => (o, Err(0.0), Vec::new()),
        })
        .collect();
    let mut covered = vec![false; nodes.len()];
    for (o, _, members) in &stars2 {
        covered[*o] = true;
        for &m in members {
            covered[m] = true;
        }
    }
    let condition2a = star_report(stars2.into_iter().map(|(o, r, _)| (o, r)).collect());
    let lo: Vec<f64> = params.index_box.lower.iter().map(|&v| h * v as f64).collect();
    let hi: Vec<f64> = params.index_box.upper.iter().map(|&v| h * v as f64).collect();
    // nodes near the box edge may legitimately belong to stars outside it
    let margin = h * (1.0 + params.kappa1);
    let condition2b_uncovered = (0..nodes.len())
        .filter(|&i| {
            !covered[i]
                && nodes
                    .point(i)
                    .iter()
                    .zip(lo.iter().zip(&hi))
                    .all(|(x, (a, b))| *x > a + margin && *x < b - margin)
        })
        .collect();

    let stars3: Vec<(usize, Result<f64, f64>)> = (0..nodes.len())
        .into_par_iter()
        .filter(|&i| {
            nodes
                .point(i)
                .iter()
                .zip(lo.iter().zip(&hi))
                .all(|(x, (a, b))| *x >= *a && *x <= *b)
        })
        .map(|i| (i, star_det(nodes, i, nodes.scale(i), &params.star)))
        .collect();
    let condition3 = star_report(stars3);

    let condition4 = two_scale.and_then(|g| condition4(nodes, g, params.kappa1));

    ConditionReport {
        condition1,
        condition2a,
        condition2b_uncovered,
        condition3,
        condition4,
    }
}

/// Every fine-scale node lies within κ₁h₂ of a point of G₂. `None` for a
/// single-scale grid.
pub fn condition4(nodes: &NodeSet, grid: &TwoScaleGrid, kappa1: f64) -> Option<CoverageReport> {
    let h2 = grid.h2().filter(|_| grid.is_two_scale())?;
    let fine_points: Vec<Vec<f64>> = grid.points().into_iter().filter(|p| p.fine).map(|p| p.position).collect();
    let flat: Vec<f64> = fine_points.iter().flatten().copied().collect();
    let index = NodeSet::new(grid.n, flat, vec![h2; fine_points.len()]).ok()?;
    let threshold = 0.5 * (grid.h1 + h2);
    let mut worst_gap = 0.0f64;
    let mut witness = None;
    for i in 0..nodes.len() {
        if nodes.scale(i) >= threshold {
            continue;
        }
        let d = index
            .nearest(nodes.point(i))
            .map_or(f64::INFINITY, |g| dist(index.point(g), nodes.point(i)) / h2);
        if d > worst_gap {
            worst_gap = d;
            witness = Some(i);
        }
    }
    let holds = worst_gap < kappa1 || (worst_gap == 0.0 && kappa1 == 0.0);
    Some(CoverageReport {
        holds,
        worst_gap,
        witness: if holds { None } else { witness.map(|i| vec![i as i64]) },
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
