//! Polynomial × Gaussian atoms, closed-form Gaussian integrals and the
//! kernel entries of the local normal equations.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::multiindex::{factorial, MultiIndex};
use crate::polynomial::{s_coefficients_1d, CompiledPoly, Polynomial};

/// The atom `poly(x − c) · exp(−|x − c|²/δ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTerm {
    pub center: Vec<f64>,
    pub delta: f64,
    /// Polynomial in the shifted variable `x − c`.
    pub poly: Polynomial,
}

impl GaussianTerm {
    pub fn new(center: Vec<f64>, delta: f64, poly: Polynomial) -> Self {
        assert!(delta > 0.0, "Gaussian width must be positive");
        assert_eq!(center.len(), poly.dim());
        GaussianTerm { center, delta, poly }
    }

    /// Plain Gaussian `exp(−|x − c|²/δ)`.
    pub fn gaussian(center: Vec<f64>, delta: f64) -> Self {
        let n = center.len();
        Self::new(center, delta, Polynomial::constant(n, 1.0))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r2: f64 = z.iter().map(|v| v * v).sum();
        self.poly.eval(&z) * (-r2 / self.delta).exp()
    }

    /// ∂/∂x_axis, again an atom with the same center and width.
    pub fn derivative(&self, axis: usize) -> GaussianTerm {
        // ∂(p e) = (∂p − (2/δ) z p) e
        let z = Polynomial::variable(self.dim(), axis);
        let poly = &self.poly.derivative(axis) - &(&z * &self.poly).scale(2.0 / self.delta);
        GaussianTerm {
            center: self.center.clone(),
            delta: self.delta,
            poly,
        }
    }

    /// ∫ of the atom over ℝⁿ.
    pub fn integral(&self) -> f64 {
        self.poly
            .terms()
            .map(|(a, c)| c * gaussian_moment(a, self.delta))
            .sum()
    }
}

/// The atom `P(scale·∂_x)` applied to `term`.
pub fn apply_diffop(p: &Polynomial, scale: f64, term: &GaussianTerm) -> GaussianTerm {
    assert_eq!(p.dim(), term.dim());
    let mut cache: HashMap<MultiIndex, Polynomial> = HashMap::new();
    let mut acc = Polynomial::zero(term.dim());
    for (alpha, c) in p.terms() {
        let d = derivative_poly(term, alpha, &mut cache);
        acc = &acc + &d.scale(c * scale.powi(alpha.order() as i32));
    }
    GaussianTerm {
        center: term.center.clone(),
        delta: term.delta,
        poly: acc,
    }
}

// polynomial part of ∂^α term, memoised on α
fn derivative_poly(
    term: &GaussianTerm,
    alpha: &MultiIndex,
    cache: &mut HashMap<MultiIndex, Polynomial>,
) -> Polynomial {
    if alpha.is_zero() {
        return term.poly.clone();
    }
    if let Some(p) = cache.get(alpha) {
        return p.clone();
    }
    let axis = alpha
        .entries()
        .iter()
        .position(|&a| a > 0)
        .expect("nonzero index");
    let mut lower = alpha.entries().to_vec();
    lower[axis] -= 1;
    let base = derivative_poly(term, &MultiIndex::new(lower), cache);
    let d = GaussianTerm {
        center: term.center.clone(),
        delta: term.delta,
        poly: base,
    }
    .derivative(axis)
    .poly;
    cache.insert(alpha.clone(), d.clone());
    d
}

/// ∫ x^α e^{−|x|²/δ} dx over ℝⁿ.
pub fn gaussian_moment(alpha: &MultiIndex, delta: f64) -> f64 {
    alpha
        .entries()
        .iter()
        .map(|&k| moment_1d(k, delta))
        .product()
}

fn moment_1d(k: u32, delta: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    // Γ(m + 1/2) δ^{m + 1/2} with k = 2m
    let m = k / 2;
    let gamma = factorial(2 * m) / (4f64.powi(m as i32) * factorial(m)) * PI.sqrt();
    gamma * delta.powf(f64::from(m) + 0.5)
}

/// ∫ a(x) b(x) dx, by merging the two Gaussians into one.
pub fn inner_product(a: &GaussianTerm, b: &GaussianTerm) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let (d1, d2) = (a.delta, b.delta);
    let delta = d1 * d2 / (d1 + d2);
    let center: Vec<f64> = a
        .center
        .iter()
        .zip(&b.center)
        .map(|(c1, c2)| delta * (c1 / d1 + c2 / d2))
        .collect();
    let sep2: f64 = a
        .center
        .iter()
        .zip(&b.center)
        .map(|(c1, c2)| (c1 - c2) * (c1 - c2))
        .sum();
    let factor = (-sep2 / (d1 + d2)).exp();
    let shift_a: Vec<f64> = center.iter().zip(&a.center).map(|(c, ci)| c - ci).collect();
    let shift_b: Vec<f64> = center.iter().zip(&b.center).map(|(c, ci)| c - ci).collect();
    let pa = a.poly.compose_affine(1.0, &shift_a);
    let pb = b.poly.compose_affine(1.0, &shift_b);
    let merged = GaussianTerm {
        center,
        delta,
        poly: &pa * &pb,
    };
    factor * merged.integral()
}

/// B_{β,γ}(x, y) = S_β(−∂_x) S_γ(−∂_y) e^{−|x−y|²/2}.
///
/// As a function of `z = x − y` we have `∂_x = ∂_z` and `∂_y = −∂_z`, so the
/// entry is `S_β(−∂_z) S_γ(∂_z)` applied to `e^{−|z|²/2}`.
pub fn kernel_b(beta: &MultiIndex, gamma: &MultiIndex, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(y.len(), n);
    let base = GaussianTerm::gaussian(vec![0.0; n], 2.0);
    let inner = apply_diffop(&crate::polynomial::s_beta(gamma), 1.0, &base);
    let outer = apply_diffop(&crate::polynomial::s_beta(beta), -1.0, &inner);
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    outer.value(&z)
}

/// Tabulated entries `S_β(−s∂_x) S_γ(−s∂_y) exp(a|x|² + a|y|² + b(x,y))`.
///
/// The exponent splits over coordinates, so each entry is a product of
/// univariate-pair factors `K_{k,l}(x_i, y_i) exp(a x_i² + a y_i² + b x_i y_i)`
/// with `K_{k,l}` a bivariate polynomial built once per table.
#[derive(Clone, Debug)]
pub struct PairKernel {
    a: f64,
    b: f64,
    max_order: u32,
    // K_{k,l} stored at k * (max_order + 1) + l
    factors: Vec<CompiledPoly>,
}

impl PairKernel {
    pub fn new(s: f64, a: f64, b: f64, max_order: u32) -> Self {
        let size = max_order as usize + 1;
        // R[p][q] with ∂_x^p ∂_y^q f = R[p][q] · f
        let mut r: Vec<Vec<Polynomial>> = vec![Vec::with_capacity(size); size];
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let gx = &x.scale(2.0 * a) + &y.scale(b);
        let gy = &y.scale(2.0 * a) + &x.scale(b);
        for p in 0..size {
            for q in 0..size {
                let poly = if p == 0 && q == 0 {
                    Polynomial::constant(2, 1.0)
                } else if q == 0 {
                    let prev = &r[p - 1][0];
                    &prev.derivative(0) + &(prev * &gx)
                } else {
                    let prev = &r[p][q - 1];
                    &prev.derivative(1) + &(prev * &gy)
                };
                r[p].push(poly);
            }
        }
        let mut factors = Vec::with_capacity(size * size);
        for k in 0..size {
            let sk = s_coefficients_1d(k as u32);
            for l in 0..size {
                let sl = s_coefficients_1d(l as u32);
                let mut acc = Polynomial::zero(2);
                for (p, &cp) in sk.iter().enumerate() {
                    if cp == 0.0 {
                        continue;
                    }
                    for (q, &cq) in sl.iter().enumerate() {
                        if cq == 0.0 {
                            continue;
                        }
                        let w = cp * cq * (-s).powi((p + q) as i32);
                        acc = &acc + &r[p][q].scale(w);
                    }
                }
                factors.push(acc.compile());
            }
        }
        PairKernel {
            a,
            b,
            max_order,
            factors,
        }
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn eval(&self, beta: &MultiIndex, gamma: &MultiIndex, x: &[f64], y: &[f64]) -> f64 {
        let size = self.max_order as usize + 1;
        let mut acc = 1.0;
        let mut expo = 0.0;
        for i in 0..x.len() {
            let (k, l) = (beta.entries()[i] as usize, gamma.entries()[i] as usize);
            assert!(k < size && l < size, "order exceeds kernel table");
            let (xi, yi) = (x[i], y[i]);
            acc *= self.factors[k * size + l].eval(&[xi, yi]);
            expo += self.a * (xi * xi + yi * yi) + self.b * xi * yi;
        }
        acc * expo.exp()
    }
}

/// Kernel C of the local systems for fixed `D`, `D0`.
#[derive(Clone, Debug)]
pub struct KernelC {
    pub d: f64,
    pub d0: f64,
    table: PairKernel,
}

impl KernelC {
    pub fn new(d: f64, d0: f64, max_order: u32) -> Result<Self> {
        if !(d > 0.0 && d0 > 0.0 && d0 < d) {
            return Err(Error::InvalidParameter(format!(
                "kernel C needs 0 < D0 < D, got D = {d}, D0 = {d0}"
            )));
        }
        let a = (d - 2.0 * d0) / (2.0 * d0 * d0);
        let b = d / (d0 * d0);
        Ok(KernelC {
            d,
            d0,
            table: PairKernel::new(d.sqrt(), a, b, max_order),
        })
    }

    pub fn eval(&self, beta: &MultiIndex, gamma: &MultiIndex, x: &[f64], y: &[f64]) -> f64 {
        self.table.eval(beta, gamma, x, y)
    }
}

/// C_{β,γ}(x, y) = S_β(−√D∂_x) S_γ(−√D∂_y) e^{(D−D0)(|x|²+|y|²)/D0²} e^{−D|x−y|²/2D0²}.
pub fn kernel_c(
    beta: &MultiIndex,
    gamma: &MultiIndex,
    x: &[f64],
    y: &[f64],
    d: f64,
    d0: f64,
) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    check_dim(x.len(), beta.dim())?;
    check_dim(x.len(), gamma.dim())?;
    let max = beta
        .entries()
        .iter()
        .chain(gamma.entries())
        .copied()
        .max()
        .unwrap_or(0);
    Ok(KernelC::new(d, d0, max)?.eval(beta, gamma, x, y))
}

/// Kernel B evaluated through the tabulated route (`s = 1`, `a = −1/2`, `b = 1`).
pub fn kernel_b_table(max_order: u32) -> PairKernel {
    PairKernel::new(1.0, -0.5, 1.0, max_order)
}
