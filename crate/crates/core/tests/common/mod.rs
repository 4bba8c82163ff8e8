//! Invariant checks shared by the module test files and the acceptance run.
//! Each check returns `Err` with a description on violation.

#![allow(dead_code)]

use std::f64::consts::PI;

use approxqi::cubature::{atom_convolution, atom_convolution_bessel, cubature_with_rule, RadialKernel, TensorRule};
use approxqi::gauss::{apply_diffop, inner_product, kernel_b, kernel_c, GaussianTerm};
use approxqi::gridded::{GriddedQI, GriddedQIConfig};
use approxqi::nodes::{generate_perturbed_grid, IndexBox, NodeSet};
use approxqi::partition::{
    build_theta, q_bound, q_direct, solve_scaled, theta_scan, PartitionConfig, ThetaFunction, TwoScaleGrid,
};
use approxqi::quadrature::integrate;
use approxqi::scattered::{build_pjk, ScatteredQI, PARTITION_CUTOFF};
use approxqi::star::{build_star, StarParams};
use approxqi::{enumerate_multiindices, hermite, s_beta, MultiIndex, Polynomial};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn random_point(r: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-half..half)).collect()
}

pub fn random_polynomial(r: &mut ChaCha8Rng, n: usize, degree: u32) -> Polynomial {
    let basis = enumerate_multiindices(n, 0, degree);
    let coeffs: Vec<f64> = basis.iter().map(|_| r.random_range(-1.0..1.0)).collect();
    Polynomial::from_coefficients(&basis, &coeffs)
}

pub fn random_multiindex(r: &mut ChaCha8Rng, n: usize, max_order: u32) -> MultiIndex {
    let all = enumerate_multiindices(n, 0, max_order);
    all[r.random_range(0..all.len())].clone()
}

// ---------------------------------------------------------------- multiindex_poly

/// x^β e^{−|x|²} = S_β(∂) e^{−|x|²}.
pub fn delta_identity(beta: &MultiIndex, x: &[f64]) -> Check {
    let n = x.len();
    let lhs = beta.monomial(x) * (-norm(x).powi(2)).exp();
    let rhs = apply_diffop(&s_beta(beta), 1.0, &GaussianTerm::gaussian(vec![0.0; n], 1.0)).value(x);
    let tol = 1e-12 * (1.0 + norm(x).powi(beta.order() as i32));
    ensure((lhs - rhs).abs() <= tol, || {
        format!("β = {beta:?}, x = {x:?}: {lhs:e} vs {rhs:e}")
    })
}

pub fn hermite_parity(beta: &MultiIndex, t: &[f64]) -> Check {
    let minus: Vec<f64> = t.iter().map(|v| -v).collect();
    let a = hermite(beta, &minus);
    let b = if beta.order().is_multiple_of(2) { 1.0 } else { -1.0 } * hermite(beta, t);
    ensure((a - b).abs() <= 1e-13 * (1.0 + b.abs()), || {
        format!("β = {beta:?}, t = {t:?}: H(−t) = {a:e}, ±H(t) = {b:e}")
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// #{α : 1 ≤ |α| ≤ N−1} = C(N−1+n, n) − 1.
pub fn enumeration_count(n: usize, order: u32) -> Check {
    let got = enumerate_multiindices(n, 1, order - 1).len() as u64;
    let want = binomial(u64::from(order) - 1 + n as u64, n as u64) - 1;
    ensure(got == want, || format!("n = {n}, N = {order}: {got} indices, expected {want}"))
}

/// P(x)e^{−|x|²} = T(∂)e^{−|x|²} with T = Σ p_β S_β.
pub fn ptos_identity(p: &Polynomial, x: &[f64]) -> Check {
    let n = x.len();
    let g = (-norm(x).powi(2)).exp();
    let lhs = p.eval(x) * g;
    let t = approxqi::cubature::poly_to_diffop(p);
    let rhs = apply_diffop(&t, 1.0, &GaussianTerm::gaussian(vec![0.0; n], 1.0)).value(x);
    let scale: f64 = p.terms().map(|(b, c)| (c * b.monomial(x)).abs()).sum::<f64>() * g;
    ensure((lhs - rhs).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE), || {
        format!("x = {x:?}: {lhs:e} vs {rhs:e} (scale {scale:e})")
    })
}

// ---------------------------------------------------------------- gauss_calculus

pub fn kernel_symmetry(beta: &MultiIndex, gamma: &MultiIndex, x: &[f64], y: &[f64], d: f64, d0: f64) -> Check {
    let b1 = kernel_b(beta, gamma, x, y);
    let b2 = kernel_b(gamma, beta, y, x);
    ensure((b1 - b2).abs() <= 1e-12 * (1.0 + b1.abs()), || format!("B: {b1:e} vs {b2:e}"))?;
    let c1 = kernel_c(beta, gamma, x, y, d, d0).map_err(|e| e.to_string())?;
    let c2 = kernel_c(gamma, beta, y, x, d, d0).map_err(|e| e.to_string())?;
    ensure((c1 - c2).abs() <= 1e-12 * (1.0 + c1.abs()), || format!("C: {c1:e} vs {c2:e}"))
}

type Big = FBig<HalfEven, 2>;

const GRAM_BITS: usize = 640;

fn big(v: f64) -> Big {
    Big::try_from(v).expect("finite").with_precision(GRAM_BITS).value()
}

/// Smallest Cholesky pivot of the Gram matrix {B_{β,γ}(x_j, x_k)} computed
/// in multiprecision. The entries are P_{β,γ}(x_j − x_k) e^{−|x_j−x_k|²/2}
/// where P has dyadic coefficients, exact in binary64, so the matrix is
/// evaluated to far below its smallest eigenvalue. By Sylvester's law the
/// matrix is positive definite iff every pivot is positive.
pub fn gram_min_pivot(points: &[Vec<f64>], l: u32) -> Result<f64, String> {
    let n = points[0].len();
    let basis = enumerate_multiindices(n, 0, l);
    let nb = basis.len();
    let base = GaussianTerm::gaussian(vec![0.0; n], 2.0);
    let polys: Vec<Vec<Polynomial>> = basis
        .iter()
        .map(|beta| {
            basis
                .iter()
                .map(|gamma| {
                    let inner = apply_diffop(&s_beta(gamma), 1.0, &base);
                    apply_diffop(&s_beta(beta), -1.0, &inner).poly
                })
                .collect()
        })
        .collect();
    let m = points.len() * nb;
    let half = big(0.5);
    let mut a: Vec<Vec<Big>> = vec![vec![Big::ZERO; m]; m];
    for r in 0..m {
        for c in 0..=r {
            let (j, bi) = (r / nb, r % nb);
            let (k, gi) = (c / nb, c % nb);
            let z: Vec<Big> = points[j].iter().zip(&points[k]).map(|(p, q)| big(*p) - big(*q)).collect();
            let r2 = z.iter().fold(Big::ZERO, |acc, v| acc + v * v);
            let mut poly = Big::ZERO;
            for (alpha, coef) in polys[bi][gi].terms() {
                let mut term = big(coef);
                for (a_i, zi) in alpha.entries().iter().zip(&z) {
                    for _ in 0..*a_i {
                        term *= zi;
                    }
                }
                poly += term;
            }
            let v = poly * (-(r2 * &half)).exp();
            a[r][c] = v.clone();
            a[c][r] = v;
        }
    }
    let mut min_pivot = f64::INFINITY;
    for k in 0..m {
        let mut piv = a[k][k].clone();
        for p in 0..k {
            piv -= &a[k][p] * &a[k][p];
        }
        if piv <= Big::ZERO {
            return Err(format!("pivot {k} of {m} is {}", piv.to_f64().value()));
        }
        let root = piv.sqrt();
        min_pivot = min_pivot.min(root.to_f64().value().powi(2));
        for i in k + 1..m {
            let mut v = a[i][k].clone();
            for p in 0..k {
                v -= &a[i][p] * &a[k][p];
            }
            a[i][k] = v / &root;
        }
        a[k][k] = root;
    }
    Ok(min_pivot)
}

/// Up to `count` distinct random points in [−2, 2]ⁿ.
pub fn random_configuration(r: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    while pts.len() < count {
        let p = random_point(r, n, 2.0);
        if pts.iter().all(|q| q != &p) {
            pts.push(p);
        }
    }
    pts
}

/// ⟨a, b⟩ in closed form against adaptive quadrature, relative to ∫|ab|.
pub fn inner_product_vs_quadrature(a: &GaussianTerm, b: &GaussianTerm) -> Check {
    let exact = inner_product(a, b);
    let lo = a.center[0].min(b.center[0]) - 15.0;
    let hi = a.center[0].max(b.center[0]) + 15.0;
    let q = integrate(|t| a.value(&[t]) * b.value(&[t]), lo, hi, 1e-13, 1e-300).map_err(|e| e.to_string())?;
    let scale = integrate(|t| (a.value(&[t]) * b.value(&[t])).abs(), lo, hi, 1e-10, 1e-300).map_err(|e| e.to_string())?;
    ensure((exact - q).abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE), || {
        format!("closed form {exact:e}, quadrature {q:e}")
    })
}

pub fn random_atom_1d(r: &mut ChaCha8Rng) -> GaussianTerm {
    let delta = r.random_range(0.5..4.0);
    let degree = r.random_range(0..=4);
    GaussianTerm::new(vec![r.random_range(-1.5..1.5)], delta, random_polynomial(r, 1, degree))
}

// fourth-order central difference, nested per axis
fn fd<F: Fn(&[f64]) -> f64 + Copy>(f: F, alpha: &[u32], x: &[f64], step: f64) -> f64 {
    let Some(axis) = alpha.iter().position(|&a| a > 0) else {
        return f(x);
    };
    let mut rest = alpha.to_vec();
    rest[axis] -= 1;
    let shifted = |s: f64| {
        let mut y = x.to_vec();
        y[axis] += s;
        fd(f, &rest, &y, step)
    };
    (-shifted(2.0 * step) + 8.0 * shifted(step) - 8.0 * shifted(-step) + shifted(-2.0 * step)) / (12.0 * step)
}

/// apply_diffop against finite differences of the atom, for |α| ≤ 2.
pub fn diffop_vs_fd(p: &Polynomial, scale: f64, term: &GaussianTerm, x: &[f64]) -> Check {
    let got = apply_diffop(p, scale, term).value(x);
    let f = |y: &[f64]| term.value(y);
    let want: f64 = p
        .terms()
        .map(|(alpha, c)| c * scale.powi(alpha.order() as i32) * fd(f, alpha.entries(), x, 1e-2))
        .sum();
    ensure((got - want).abs() <= 1e-6 * (1.0 + want.abs()), || {
        format!("x = {x:?}: symbolic {got:e}, finite differences {want:e}")
    })
}

// ---------------------------------------------------------------- node_model

/// Samples of Σ r_α ((x − x_j)/h)^α recover r_α exactly.
pub fn lambda_reproduction(nodes: &NodeSet, owner: usize, h: f64, params: &StarParams, seed: u64) -> Check {
    let star = build_star(nodes, owner, h, params).map_err(|e| e.to_string())?;
    let n = nodes.dim();
    let mut r = rng(seed);
    let all = enumerate_multiindices(n, 0, params.order - 1);
    let coef: Vec<f64> = all.iter().map(|_| r.random_range(-1.0..1.0)).collect();
    let xj = nodes.point(owner).to_vec();
    let u = |x: &[f64]| -> f64 {
        let t: Vec<f64> = x.iter().zip(&xj).map(|(a, b)| (a - b) / h).collect();
        all.iter().zip(&coef).map(|(a, c)| c * a.monomial(&t)).sum()
    };
    let member_values: Vec<f64> = star.members.iter().map(|&k| u(nodes.point(k))).collect();
    let got = star.taylor_coefficients(u(&xj), &member_values);
    let scale = coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for (alpha, g) in star.alphas.iter().zip(&got) {
        let want = coef[all.iter().position(|a| a == alpha).expect("α in range")];
        if (g - want).abs() > 1e-9 * scale {
            return Err(format!("node {owner}, α = {alpha:?}: {g:e} vs {want:e} (|det V| = {:e})", star.det));
        }
    }
    Ok(())
}

pub fn conditions_hold(n: usize, order: u32, seed: u64) -> Check {
    use approxqi::conditions::{check_conditions, ConditionParams};
    let h = 1.0 / 16.0;
    let nodes = generate_perturbed_grid(n, h, 0.5, &IndexBox::cube(n, -8, 8), seed).map_err(|e| e.to_string())?;
    let params = ConditionParams {
        h,
        kappa1: 0.5,
        index_box: IndexBox::cube(n, -4, 4),
        star: StarParams::new(order),
    };
    let r = check_conditions(&nodes, &params, None);
    ensure(r.condition1.holds && r.condition2a.holds && r.condition2b_uncovered.is_empty(), || {
        format!(
            "seed {seed}: condition 1 {}, 2a {} (min det {:e}), 2b uncovered {}",
            r.condition1.holds,
            r.condition2a.holds,
            r.condition2a.min_det,
            r.condition2b_uncovered.len()
        )
    })
}

// ---------------------------------------------------------------- gridded_qi

pub struct GriddedSetup {
    pub order: u32,
    pub d: f64,
    pub stencil: Vec<Vec<i64>>,
}

impl GriddedSetup {
    pub fn fig1() -> Self {
        GriddedSetup {
            order: 2,
            d: 2.0,
            stencil: vec![vec![1]],
        }
    }

    pub fn fig2() -> Self {
        GriddedSetup {
            order: 4,
            d: 4.0,
            stencil: vec![vec![-2], vec![-1], vec![1]],
        }
    }
}

/// sup over [0, 1] of |𝕄u − u| on a perturbed grid.
pub fn gridded_sup_error(setup: &GriddedSetup, h: f64, rho_cut: f64, u: fn(f64) -> f64, seed: u64) -> approxqi::Result<f64> {
    let pad = (rho_cut * setup.d.sqrt()).ceil() as i64 + 4;
    let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![-pad], vec![(1.0 / h).round() as i64 + pad]), seed)?;
    let data: Vec<f64> = nodes.points().map(|x| u(x[0])).collect();
    let cfg = GriddedQIConfig {
        rho_cut,
        ..GriddedQIConfig::new(h, setup.d, setup.order)
    };
    let qi = GriddedQI::new(&nodes, cfg, StarParams::with_stencil(setup.order, setup.stencil.clone()))?;
    let mut worst = 0.0f64;
    for i in 0..=256 {
        let x = i as f64 / 256.0;
        worst = worst.max((qi.evaluate(&data, &[x])? - u(x)).abs());
    }
    Ok(worst)
}

pub fn gridded_order(setup: &GriddedSetup, u: fn(f64) -> f64, seed: u64) -> Result<f64, String> {
    let e1 = gridded_sup_error(setup, 1.0 / 32.0, 6.0, u, seed).map_err(|e| e.to_string())?;
    let e2 = gridded_sup_error(setup, 1.0 / 64.0, 6.0, u, seed).map_err(|e| e.to_string())?;
    Ok((e1 / e2).log2())
}

/// Largest relative change of 𝕄u on [0, 1] between two truncation radii.
pub fn truncation_change(d: f64, rho_a: f64, rho_b: f64, seed: u64) -> Result<f64, String> {
    let h = 1.0 / 32.0;
    let pad = (rho_a.max(rho_b) * d.sqrt()).ceil() as i64 + 4;
    let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![-pad], vec![32 + pad]), seed).map_err(|e| e.to_string())?;
    let data: Vec<f64> = nodes.points().map(|x| 1.0 / (1.0 + x[0] * x[0])).collect();
    let mk = |rho: f64| {
        GriddedQI::new(
            &nodes,
            GriddedQIConfig {
                rho_cut: rho,
                ..GriddedQIConfig::new(h, d, 2)
            },
            StarParams::with_stencil(2, vec![vec![1]]),
        )
    };
    let (a, b) = (mk(rho_a).map_err(|e| e.to_string())?, mk(rho_b).map_err(|e| e.to_string())?);
    let mut worst = 0.0f64;
    for i in 0..=64 {
        let x = [i as f64 / 64.0];
        let (va, vb) = (a.evaluate(&data, &x).unwrap(), b.evaluate(&data, &x).unwrap());
        worst = worst.max(((va - vb) / vb).abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------- partition_builder

/// Θ on the 1-D quasi-uniform layout of step `h` covering [−half, half]
/// plus the truncation pad.
pub fn theta_1d(h: f64, half: f64, count: usize, degree: u32, seed: u64) -> approxqi::Result<(ThetaFunction, NodeSet)> {
    theta_1d_with(h, half, count, degree, approxqi::partition::LSTSQ_CUTOFF, seed)
}

pub fn theta_1d_with(h: f64, half: f64, count: usize, degree: u32, cutoff: f64, seed: u64) -> approxqi::Result<(ThetaFunction, NodeSet)> {
    let m = (half / h).ceil() as i64 + (6.0 * 2f64.sqrt()).ceil() as i64 + 6;
    let work = IndexBox::new(vec![-m], vec![m]);
    let nodes = generate_perturbed_grid(1, h, 0.5, &work, seed)?;
    let grid = TwoScaleGrid::single_scale(h, 2.0, work);
    let cfg = PartitionConfig {
        degree,
        count,
        lstsq_cutoff: cutoff,
        ..PartitionConfig::default()
    };
    let (theta, _) = build_theta(&grid, &nodes, &cfg)?;
    Ok((theta, nodes))
}

/// Normal matrix and right-hand side assembled entry by entry from
/// `kernel_c`, independently of the builder's tables.
pub fn normal_system(ys: &[Vec<f64>], l: u32, d: f64, d0: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = ys[0].len();
    let basis = enumerate_multiindices(n, 0, l);
    let nb = basis.len();
    let m = ys.len() * nb;
    let zero = MultiIndex::zero(n);
    let origin = vec![0.0; n];
    let a = DMatrix::from_fn(m, m, |r, c| {
        kernel_c(&basis[c % nb], &basis[r % nb], &ys[c / nb], &ys[r / nb], d, d0).unwrap()
    });
    let b = DVector::from_fn(m, |r, _| kernel_c(&zero, &basis[r % nb], &origin, &ys[r / nb], d, d0).unwrap());
    (a, b)
}

fn kernel(d: f64, d0: f64, l: u32) -> approxqi::gauss::KernelC {
    approxqi::gauss::KernelC::new(d, d0, l).expect("valid D, D0")
}

/// ‖Ac − b‖∞ ≤ 1e−10 ‖A‖∞ at the returned c.
pub fn normal_residual(ys: &[Vec<f64>], l: u32, d: f64, d0: f64) -> Result<f64, String> {
    let sol = solve_scaled(ys, l, &kernel(d, d0, l), false).map_err(|e| e.to_string())?;
    let (a, b) = normal_system(ys, l, d, d0);
    let c = DVector::from_iterator(a.nrows(), sol.coeffs.iter().flatten().copied());
    let norm_a = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let rel = (&a * &c - &b).amax() / norm_a;
    if rel <= 1e-10 {
        Ok(rel)
    } else {
        Err(format!("ys = {ys:?}, L = {l}: residual {rel:e} ‖A‖∞"))
    }
}

pub fn q_at(ys: &[Vec<f64>], l: u32, d: f64, d0: f64) -> Result<f64, String> {
    solve_scaled(ys, l, &kernel(d, d0, l), false)
        .map(|s| s.q)
        .map_err(|e| e.to_string())
}

/// Q(c*) ≤ bound of the minimal value for the closest node.
pub fn q_within_bound(ys: &[Vec<f64>], l: u32, d: f64, d0: f64) -> Result<f64, String> {
    let q = q_at(ys, l, d, d0)?;
    let bound = q_bound(ys, l, d, d0);
    if q <= bound {
        Ok(q / bound)
    } else {
        Err(format!("ys = {ys:?}, L = {l}: Q = {q:e} > bound {bound:e}"))
    }
}

// slack for comparing two computed minima of Q
fn q_slack(n: usize, d: f64) -> f64 {
    1e-12 * (PI * d / 2.0).powf(n as f64 / 2.0)
}

/// Q weakly decreases when L grows or a node joins Σ.
pub fn q_monotone(ys: &[Vec<f64>], extra: &[f64], l: u32, d: f64, d0: f64) -> Check {
    let n = ys[0].len();
    let q = q_at(ys, l, d, d0)?;
    let q_l = q_at(ys, l + 1, d, d0)?;
    let mut bigger = ys.to_vec();
    bigger.push(extra.to_vec());
    let q_add = q_at(&bigger, l, d, d0)?;
    let slack = q_slack(n, d);
    ensure(q_l <= q + slack && q_add <= q + slack, || {
        format!("ys = {ys:?}, L = {l}: Q = {q:e}, Q(L+1) = {q_l:e}, Q(Σ+1) = {q_add:e}")
    })
}

/// Q(c*) ≤ Q(c* + δ) for random perturbations of norm 1e−3.
pub fn q_local_minimum(ys: &[Vec<f64>], l: u32, d: f64, d0: f64, trials: usize, seed: u64) -> Check {
    let sol = solve_scaled(ys, l, &kernel(d, d0, l), false).map_err(|e| e.to_string())?;
    let q = q_direct(&sol.coeffs, ys, l, d, d0);
    let mut r = rng(seed);
    for _ in 0..trials {
        let mut delta: Vec<Vec<f64>> = sol
            .coeffs
            .iter()
            .map(|row| row.iter().map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let len = delta.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        for v in delta.iter_mut().flatten() {
            *v *= 1e-3 / len;
        }
        let moved: Vec<Vec<f64>> = sol
            .coeffs
            .iter()
            .zip(&delta)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let qm = q_direct(&moved, ys, l, d, d0);
        if qm < q {
            return Err(format!("ys = {ys:?}: Q(c*) = {q:e} > Q(c*+δ) = {qm:e}"));
        }
    }
    Ok(())
}

/// Random Σ in scaled coordinates: one node in B(k, 1/2) for the grid
/// offsets k = 0, e₁, −e₁, 2e₁, … in the order they join.
pub fn random_sigma(r: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    const OFFSETS: [f64; 5] = [0.0, 1.0, -1.0, 2.0, -2.0];
    (0..count)
        .map(|k| {
            let u = loop {
                let u = random_point(r, n, 0.5);
                if norm(&u) < 0.5 {
                    break u;
                }
            };
            u.iter()
                .enumerate()
                .map(|(a, v)| v + if a == 0 { OFFSETS[k % 5] } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Nodes on hℤ with count 1, L 0 give the θ-series: sup|Θ − 1| equals the
/// Poisson tail 2Σ_{j≥1} e^{−π²Dj²}.
pub fn uniform_degeneration(d: f64) -> Result<f64, String> {
    let work = IndexBox::new(vec![-30], vec![30]);
    let nodes = approxqi::nodes::uniform_grid(1, 1.0, &work).map_err(|e| e.to_string())?;
    let grid = TwoScaleGrid::single_scale(1.0, d, work);
    let cfg = PartitionConfig {
        d,
        d0: 0.75 * d,
        degree: 0,
        count: 1,
        rho_cut: 6.0,
        strict: true,
        ..PartitionConfig::default()
    };
    let (theta, _) = build_theta(&grid, &nodes, &cfg).map_err(|e| e.to_string())?;
    let scan = theta_scan(&theta, &[-3.0], &[3.0], 601).map_err(|e| e.to_string())?;
    let tail: f64 = (1..10).map(|j| 2.0 * (-PI * PI * d * (j * j) as f64).exp()).sum();
    let err = (scan.sup - tail).abs();
    if err <= 1e-11 {
        Ok(err)
    } else {
        Err(format!("sup|Θ−1| = {:e}, Poisson tail {tail:e}", scan.sup))
    }
}

// ---------------------------------------------------------------- scattered_qi

pub fn scattered_1d(h: f64, half: f64, seed: u64) -> approxqi::Result<(ScatteredQI, NodeSet, ThetaFunction)> {
    let (theta, nodes) = theta_1d_with(h, half + 1.0, 5, 4, PARTITION_CUTOFF, seed)?;
    let qi = build_pjk(&theta, &nodes, &StarParams::new(2))?;
    Ok((qi, nodes, theta))
}

/// Σ_k P_{j,k} = P_j coefficient by coefficient.
pub fn column_sums(qi: &ScatteredQI) -> Check {
    for atom in &qi.atoms {
        let diff = &atom.column_sum() - &atom.partition;
        let scale = atom.partition.max_abs_coefficient().max(1.0);
        if diff.max_abs_coefficient() > 1e-13 * scale {
            return Err(format!(
                "node {}: Σ_k P_jk − P_j has coefficient {:e}",
                atom.node,
                diff.max_abs_coefficient()
            ));
        }
    }
    Ok(())
}

pub fn sup_on<F: Fn(f64) -> f64>(qi: &ScatteredQI, data: &[f64], u: F, lo: f64, hi: f64, samples: usize) -> approxqi::Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..=samples {
        let x = lo + (hi - lo) * i as f64 / samples as f64;
        worst = worst.max((qi.evaluate(data, &[x])? - u(x)).abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------- cubature

/// Gauss–Hermite and Bessel-profile values of one degree-0 atom.
pub fn two_path(kernel: &RadialKernel, center: &[f64], s: f64, x: &[f64], gh_order: usize) -> Result<f64, String> {
    let n = center.len();
    let one = Polynomial::constant(n, 1.0);
    let gh = atom_convolution(kernel, center, s, &one, x, &TensorRule::new(n, gh_order));
    let bessel = atom_convolution_bessel(kernel, center, s, 1.0, x).map_err(|e| e.to_string())?;
    let rel = (gh - bessel).abs() / bessel.abs().max(f64::MIN_POSITIVE);
    if rel <= 1e-8 {
        Ok(rel)
    } else {
        Err(format!("center {center:?}, s = {s}, x = {x:?}: GH {gh:e} vs Bessel {bessel:e}"))
    }
}

pub fn cubature_linearity(qi: &ScatteredQI, a: &[f64], b: &[f64], alpha: f64, beta: f64, x: &[f64]) -> Check {
    let kernel = RadialKernel::gauss();
    let rule = TensorRule::new(qi.n, 12);
    let mix: Vec<f64> = a.iter().zip(b).map(|(p, q)| alpha * p + beta * q).collect();
    let va = cubature_with_rule(qi, a, &kernel, x, &rule).map_err(|e| e.to_string())?;
    let vb = cubature_with_rule(qi, b, &kernel, x, &rule).map_err(|e| e.to_string())?;
    let vm = cubature_with_rule(qi, &mix, &kernel, x, &rule).map_err(|e| e.to_string())?;
    let want = alpha * va + beta * vb;
    ensure((vm - want).abs() <= 1e-12 * (1.0 + (alpha * va).abs() + (beta * vb).abs()), || {
        format!("x = {x:?}: {vm:e} vs {want:e}")
    })
}

pub fn gh_convergence(qi: &ScatteredQI, data: &[f64], x: &[f64]) -> Result<f64, String> {
    let kernel = RadialKernel::gauss();
    let v8 = cubature_with_rule(qi, data, &kernel, x, &TensorRule::new(qi.n, 8)).map_err(|e| e.to_string())?;
    let v16 = cubature_with_rule(qi, data, &kernel, x, &TensorRule::new(qi.n, 16)).map_err(|e| e.to_string())?;
    let rel = (v8 - v16).abs() / v16.abs();
    if rel <= 1e-9 {
        Ok(rel)
    } else {
        Err(format!("x = {x:?}: order 8 {v8:e}, order 16 {v16:e}"))
    }
}
