//! Local normal equations: best weighted L₂ approximation of one Gaussian by
//! polynomial-weighted Gaussians centered at nearby nodes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gauss::{apply_diffop, GaussianTerm, KernelC};
use crate::linalg::{solve_spd, SolveReport};
use crate::multiindex::{enumerate_multiindices, factorial, MultiIndex};
use crate::nodes::IndexBox;
use crate::polynomial::{s_beta, CompiledPoly, Polynomial};

/// Solution of one local system.
#[derive(Clone, Debug)]
pub struct LocalSolution {
    /// Basis of the polynomial space Π_L, graded lexicographic.
    pub basis: Vec<MultiIndex>,
    /// `coeffs[j][b]` is c_{j,β_b} for the j-th node of Σ.
    pub coeffs: Vec<Vec<f64>>,
    /// Q at the solution; by direct quadrature when it is small.
    pub q: f64,
    /// Normwise backward error ‖Ac − b‖∞ / (‖A‖∞‖c‖∞ + ‖b‖∞) of the normal
    /// equations.
    pub residual: f64,
    pub report: SolveReport,
}

impl LocalSolution {
    /// P_{j,g} as a polynomial in (x − x_j)/(h√D).
    pub fn polynomial(&self, j: usize) -> Polynomial {
        Polynomial::from_coefficients(&self.basis, &self.coeffs[j])
    }
}

fn assemble(ys: &[Vec<f64>], basis: &[MultiIndex], kernel: &KernelC) -> (DMatrix<f64>, DVector<f64>) {
    let nb = basis.len();
    let size = ys.len() * nb;
    let n = ys.first().map_or(1, Vec::len);
    let origin = vec![0.0; n];
    let zero = MultiIndex::zero(n);
    let mut a = DMatrix::zeros(size, size);
    let mut rhs = DVector::zeros(size);
    for (k, yk) in ys.iter().enumerate() {
        for (gi, gamma) in basis.iter().enumerate() {
            let row = k * nb + gi;
            rhs[row] = kernel.eval(&zero, gamma, &origin, yk);
            for (j, yj) in ys.iter().enumerate().take(k + 1) {
                for (bi, beta) in basis.iter().enumerate() {
                    let col = j * nb + bi;
                    if col > row {
                        continue;
                    }
                    let v = kernel.eval(beta, gamma, yj, yk);
                    a[(row, col)] = v;
                    a[(col, row)] = v;
                }
            }
        }
    }
    (a, rhs)
}

/// Q(c) = (πD/2)^{n/2} (1 − 2 Σ c_{j,β} C_{β,0}(y_j, 0) + Σ Σ c c C_{β,γ}(y_j, y_k)).
pub fn q_form_value(coeffs: &[Vec<f64>], ys: &[Vec<f64>], l: u32, kernel: &KernelC) -> f64 {
    let n = ys.first().map_or(1, Vec::len);
    let basis = enumerate_multiindices(n, 0, l);
    let (a, rhs) = assemble(ys, &basis, kernel);
    let c = DVector::from_iterator(a.nrows(), coeffs.iter().flatten().copied());
    q_from_parts(&a, &rhs, &c, kernel.d, n)
}

fn q_from_parts(a: &DMatrix<f64>, rhs: &DVector<f64>, c: &DVector<f64>, d: f64, n: usize) -> f64 {
    let quad = c.dot(&(a * c));
    (PI * d / 2.0).powf(n as f64 / 2.0) * (1.0 - 2.0 * c.dot(rhs) + quad)
}

fn backward_error(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> f64 {
    let norm_a = a
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let denom = norm_a * c.amax() + b.amax();
    (a * c - b).amax() / denom.max(f64::MIN_POSITIVE)
}

/// Solves the normal equations for the scaled points `y_j = (x_j − g)/h`.
///
/// With `strict` an ill-conditioned matrix is an error; otherwise a
/// least-squares fallback is used and flagged in the report.
pub fn solve_scaled(ys: &[Vec<f64>], l: u32, kernel: &KernelC, strict: bool) -> Result<LocalSolution> {
    solve_scaled_with(ys, l, kernel, strict, LSTSQ_CUTOFF)
}

/// [`solve_scaled`] with an explicit relative singular-value cutoff for the
/// least-squares fallback.
pub fn solve_scaled_with(ys: &[Vec<f64>], l: u32, kernel: &KernelC, strict: bool, cutoff: f64) -> Result<LocalSolution> {
    if ys.is_empty() {
        return Err(Error::InvalidParameter("local system needs at least one node".into()));
    }
    let n = ys[0].len();
    let basis = enumerate_multiindices(n, 0, l);
    let (a, rhs) = assemble(ys, &basis, kernel);
    let (c, report) = match solve_spd(&a, &rhs, true) {
        Ok(ok) => ok,
        Err(Error::IllConditioned { condition }) if !strict => {
            log::debug!("local system cond ≈ {condition:.2e}; least squares on sampled residual");
            let rs = residual_samples(ys, l, kernel.d, kernel.d0);
            let report = SolveReport {
                condition,
                fallback: true,
            };
            (least_squares(&rs, cutoff), report)
        }
        Err(e) => return Err(e),
    };
    let resid = backward_error(&a, &rhs, &c);
    let nb = basis.len();
    let coeffs: Vec<Vec<f64>> = (0..ys.len())
        .map(|j| c.as_slice()[j * nb..(j + 1) * nb].to_vec())
        .collect();
    // the closed form cancels badly once Q is small against Q(0) or the
    // coefficients are large
    let q_closed = q_from_parts(&a, &rhs, &c, kernel.d, n);
    let q0 = (PI * kernel.d / 2.0).powf(n as f64 / 2.0);
    let q = if !report.fallback && q_closed > 1e-6 * q0 {
        q_closed
    } else {
        q_direct(&coeffs, ys, l, kernel.d, kernel.d0)
    };
    Ok(LocalSolution {
        basis,
        coeffs,
        q,
        residual: resid,
        report,
    })
}

/// Local system for the nodes `sigma` around grid point `g` at scale `h`.
pub fn solve_local_system(
    sigma: &[Vec<f64>],
    g: &[f64],
    h: f64,
    d: f64,
    d0: f64,
    l: u32,
) -> Result<LocalSolution> {
    let kernel = KernelC::new(d, d0, l)?;
    let ys: Vec<Vec<f64>> = sigma
        .iter()
        .map(|x| x.iter().zip(g).map(|(a, b)| (a - b) / h).collect())
        .collect();
    solve_scaled(&ys, l, &kernel, false)
}

/// Samples of the weighted residual of Q on a tensor trapezoidal grid:
/// Q(c) ≈ ‖target − design·c‖².
struct ResidualSamples {
    design: DMatrix<f64>,
    target: DVector<f64>,
}

fn residual_samples(ys: &[Vec<f64>], l: u32, d: f64, d0: f64) -> ResidualSamples {
    let n = ys.first().map_or(1, Vec::len);
    let basis = enumerate_multiindices(n, 0, l);
    let origin = vec![0.0; n];
    let atoms: Vec<CompiledPoly> = basis
        .iter()
        .map(|beta| {
            apply_diffop(&s_beta(beta), d.sqrt(), &GaussianTerm::gaussian(origin.clone(), d0))
                .poly
                .compile()
        })
        .collect();
    let weight = (d - d0) / (d * d0);
    // Each squared atom carries the envelope e^{−2|t−Dy_j/D0|²/D}; the
    // trapezoidal rule converges geometrically for such integrands.
    let width = (d / 2.0).sqrt();
    let step = 0.45 * width;
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let centers = ys.iter().map(|y| d * y[a] / d0).chain([0.0]);
            let lo = centers.clone().fold(f64::INFINITY, f64::min) - 7.0 * width;
            let hi = centers.fold(f64::NEG_INFINITY, f64::max) + 7.0 * width;
            let m = ((hi - lo) / step).ceil() as usize;
            (0..=m).map(|i| lo + i as f64 * step).collect()
        })
        .collect();
    let cell = step.powi(n as i32);
    let upper: Vec<i64> = axes.iter().map(|ax| ax.len() as i64 - 1).collect();
    let points = IndexBox::new(vec![0; n], upper).indices();
    let cols = ys.len() * basis.len();
    let mut design = DMatrix::zeros(points.len(), cols);
    let mut target = DVector::zeros(points.len());
    let mut t = vec![0.0; n];
    let mut z = vec![0.0; n];
    for (row, idx) in points.iter().enumerate() {
        for (a, &k) in idx.iter().enumerate() {
            t[a] = axes[a][k as usize];
        }
        let t2: f64 = t.iter().map(|v| v * v).sum();
        let rw = cell.sqrt() * (weight * t2).exp();
        target[row] = rw * (-t2 / d0).exp();
        for (j, y) in ys.iter().enumerate() {
            for a in 0..n {
                z[a] = t[a] - y[a];
            }
            let e = rw * (-z.iter().map(|v| v * v).sum::<f64>() / d0).exp();
            for (b, atom) in atoms.iter().enumerate() {
                design[(row, j * basis.len() + b)] = atom.eval(&z) * e;
            }
        }
    }
    ResidualSamples { design, target }
}

/// Q(c) by direct quadrature of its defining integral
///
/// ∫ e^{2(D−D0)|t|²/DD0} (e^{−|t|²/D0} − Σ c_{j,β} S_β(√D∂) e^{−|t−y_j|²/D0})² dt.
///
/// Unlike [`q_form_value`] this does not lose accuracy to cancellation when Q
/// is tiny, so it is the one to compare against the a priori bound.
pub fn q_direct(coeffs: &[Vec<f64>], ys: &[Vec<f64>], l: u32, d: f64, d0: f64) -> f64 {
    let rs = residual_samples(ys, l, d, d0);
    let c = DVector::from_iterator(rs.design.ncols(), coeffs.iter().flatten().copied());
    (&rs.target - &rs.design * c).norm_squared()
}

/// Default relative singular-value cutoff of the least-squares fallback.
/// Smaller values chase Q further down at the price of large, cancelling
/// coefficients in the partition polynomials.
pub const LSTSQ_CUTOFF: f64 = 1e-12;

// Minimises the sampled residual directly. Its condition number is the square
// root of the normal matrix's.
fn least_squares(rs: &ResidualSamples, cutoff: f64) -> DVector<f64> {
    let cols = rs.design.ncols();
    let norms: Vec<f64> = (0..cols)
        .map(|c| rs.design.column(c).norm().max(f64::MIN_POSITIVE))
        .collect();
    let mut scaled = rs.design.clone();
    for (c, nrm) in norms.iter().enumerate() {
        scaled.column_mut(c).scale_mut(1.0 / nrm);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let y = svd
        .solve(&rs.target, smax * cutoff)
        .unwrap_or_else(|_| DVector::zeros(cols));
    DVector::from_iterator(cols, y.iter().zip(&norms).map(|(v, n)| v / n))
}

/// Upper bound (π/2)^{n/2} D^{L+1+n/2} |y_μ|^{2(L+1)} / (D0^{2(L+1)} (L+1)!)
/// on the minimal Q, with y_μ the point of Σ closest to the origin.
pub fn q_bound(ys: &[Vec<f64>], l: u32, d: f64, d0: f64) -> f64 {
    let n = ys.first().map_or(1, Vec::len) as f64;
    let r2 = ys
        .iter()
        .map(|y| y.iter().map(|v| v * v).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let p = f64::from(l + 1);
    (PI / 2.0).powf(n / 2.0) * d.powf(p + n / 2.0) * r2.powf(p) / (d0.powf(2.0 * p) * factorial(l + 1))
}
