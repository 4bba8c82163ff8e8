//! Cubature of radial convolution operators applied to the scattered
//! quasi-interpolant.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::nodes::IndexBox;
use crate::polynomial::{s_beta, Polynomial};
use crate::quadrature::integrate;
use crate::scattered::ScatteredQI;

pub use crate::quadrature::gauss_hermite_rule;

/// Default Gauss–Hermite order per axis.
pub const DEFAULT_GH_ORDER: usize = 12;

const SERIES_LIMIT: f64 = 30.0;

/// e^{−z} I_ν(z) for ν ≥ −1/2, z ≥ 0.
pub fn bessel_i_scaled(nu: f64, z: f64) -> f64 {
    assert!(nu >= -0.5 && z >= 0.0, "bessel_i needs ν ≥ −1/2 and z ≥ 0");
    if z <= SERIES_LIMIT {
        if z == 0.0 {
            return if nu == 0.0 { 1.0 } else if nu > 0.0 { 0.0 } else { f64::INFINITY };
        }
        (-z).exp() * (0.5 * z).powf(nu) * reduced_series(nu, 0.25 * z * z)
    } else {
        asymptotic_scaled(nu, z)
    }
}

/// I_ν(z).
pub fn bessel_i(nu: f64, z: f64) -> f64 {
    if z <= SERIES_LIMIT {
        if z == 0.0 {
            return bessel_i_scaled(nu, z);
        }
        (0.5 * z).powf(nu) * reduced_series(nu, 0.25 * z * z)
    } else {
        asymptotic_scaled(nu, z) * z.exp()
    }
}

// Σ_k q^k / (k! Γ(k+ν+1)); all terms positive
fn reduced_series(nu: f64, q: f64) -> f64 {
    let mut term = 1.0 / libm::tgamma(nu + 1.0);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
    }
}

fn asymptotic_scaled(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let kf = f64::from(k);
        let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

/// x^{−ν} e^{−2x} I_ν(2x), finite at x = 0.
fn reduced_bessel(nu: f64, x: f64) -> f64 {
    if 2.0 * x <= SERIES_LIMIT {
        (-2.0 * x).exp() * reduced_series(nu, x * x)
    } else {
        x.powf(-nu) * asymptotic_scaled(nu, 2.0 * x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothness {
    Smooth,
    /// Integrable singularity at r = 0.
    Singular,
}

/// A radial kernel g(|x − y|).
#[derive(Clone)]
pub struct RadialKernel {
    pub name: String,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub smoothness: Smoothness,
    /// Radius beyond which g is negligible, if any.
    pub reach: Option<f64>,
}

impl fmt::Debug for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialKernel")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("reach", &self.reach)
            .finish()
    }
}

impl RadialKernel {
    pub fn new<G>(name: &str, g: G, smoothness: Smoothness, reach: Option<f64>) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RadialKernel {
            name: name.to_string(),
            g: Arc::new(g),
            smoothness,
            reach,
        }
    }

    pub fn gauss() -> Self {
        Self::new("gauss", |r| (-r * r).exp(), Smoothness::Smooth, Some(6.2))
    }

    pub fn unit() -> Self {
        Self::new("unit", |_| 1.0, Smoothness::Smooth, None)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0, Smoothness::Smooth, Some(0.0))
    }

    /// g(r) = 1/r, the Newtonian potential in three dimensions.
    pub fn newton() -> Self {
        Self::new("newton", |r| 1.0 / r, Smoothness::Singular, None)
    }

    /// Registry lookup for "gauss", "unit", "zero" and "newton".
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gauss" => Ok(Self::gauss()),
            "unit" => Ok(Self::unit()),
            "zero" => Ok(Self::zero()),
            "newton" => Ok(Self::newton()),
            other => Err(Error::Config(format!("unknown kernel {other:?}"))),
        }
    }

    /// Kernel tabulated as CSV rows `r,g`, interpolated by a natural cubic
    /// spline and zero beyond the last abscissa.
    pub fn from_csv<R: Read>(name: &str, reader: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rs = Vec::new();
        let mut gs = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let (Some(a), Some(b)) = (rec.get(0), rec.get(1)) else {
                return Err(Error::Config("kernel table rows need two columns".into()));
            };
            let (Ok(r), Ok(g)) = (a.parse::<f64>(), b.parse::<f64>()) else {
                // a header line
                if rs.is_empty() {
                    continue;
                }
                return Err(Error::Config(format!("bad kernel table row {a:?}, {b:?}")));
            };
            rs.push(r);
            gs.push(g);
        }
        let spline = CubicSpline::new(rs, gs)?;
        let reach = spline.xs.last().copied();
        Ok(Self::new(name, move |r| spline.eval(r), Smoothness::Smooth, reach))
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.g)(r)
    }

    /// Checks ∫₀^∞ ρ^{n−1} |g(hρ)| e^{−ρ²} dρ < ∞ numerically.
    pub fn check_integrable(&self, n: usize, h: f64) -> Result<f64> {
        let f = |rho: f64| rho.powi(n as i32 - 1) * self.eval(h * rho).abs() * (-rho * rho).exp();
        let v = integrate(f, 0.0, 12.0, 1e-8, 1e-14)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::QuadratureFailure(format!("kernel {} is not integrable", self.name)))
        }
    }
}

#[derive(Clone, Debug)]
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::Config("kernel table needs at least two rows".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("kernel table abscissae must increase".into()));
        }
        // natural spline: second derivatives m with m₀ = m_{n−1} = 0
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i] = 2.0 * (h0 + h1);
                rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 2..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let w = h0 / diag[i - 1];
                diag[i] -= w * h0;
                rhs[i] -= w * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                let h1 = xs[i + 1] - xs[i];
                m[i] = (rhs[i] - h1 * m[i + 1]) / diag[i];
            }
        }
        Ok(CubicSpline { xs, ys, m })
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0];
        }
        if x > self.xs[n - 1] {
            return 0.0;
        }
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// L(r) = 2π^{n/2} r^{1−n/2} e^{−r²} ∫₀^∞ ρ^{n/2} e^{−ρ²} g(hρ) I_{(n−2)/2}(2ρr) dρ,
/// which equals ∫ g(h|z|) e^{−|z−t|²} dz for |t| = r.
pub fn radial_profile_l(r: f64, kernel: &RadialKernel, h: f64, n: usize) -> Result<f64> {
    if r < 0.0 || n == 0 {
        return Err(Error::InvalidParameter("radial profile needs r ≥ 0 and n ≥ 1".into()));
    }
    let nu = n as f64 / 2.0 - 1.0;
    // ρ^{n/2} r^{−ν} e^{−ρ²−r²} I_ν(2ρr) = ρ^{n−1} (ρr)^{−ν}e^{−2ρr}I_ν(2ρr) e^{−(ρ−r)²}
    let f = |rho: f64| {
        if rho == 0.0 && n > 1 {
            return 0.0;
        }
        rho.powi(n as i32 - 1) * kernel.eval(h * rho) * reduced_bessel(nu, rho * r) * (-(rho - r).powi(2)).exp()
    };
    let hi = r + 10.0;
    let lo = (r - 10.0).max(0.0);
    let mut v = integrate(f, lo, hi, 1e-12, 1e-300)?;
    if lo > 0.0 {
        v += integrate(f, 0.0, lo, 1e-12, 1e-300)?;
    }
    Ok(2.0 * PI.powf(n as f64 / 2.0) * v)
}

/// T with P(x)e^{−|x|²} = T(∂)e^{−|x|²}: T = Σ_β p_β S_β.
pub fn poly_to_diffop(p: &Polynomial) -> Polynomial {
    p.terms()
        .fold(Polynomial::zero(p.dim()), |acc, (beta, c)| &acc + &s_beta(beta).scale(c))
}

/// Tensor Gauss–Hermite rule in n dimensions.
#[derive(Clone, Debug)]
pub struct TensorRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn new(n: usize, order: usize) -> Self {
        let (x, w) = gauss_hermite_rule(order);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for idx in IndexBox::cube(n, 0, order as i64 - 1).indices() {
            points.push(idx.iter().map(|&k| x[k as usize]).collect());
            weights.push(idx.iter().map(|&k| w[k as usize]).product());
        }
        TensorRule { points, weights }
    }
}

/// ∫ g(|x − y|) P((y − c)/s) e^{−|y−c|²/s²} dy by Gauss–Hermite.
pub fn atom_convolution(kernel: &RadialKernel, center: &[f64], s: f64, poly: &Polynomial, x: &[f64], rule: &TensorRule) -> f64 {
    let n = center.len();
    let mut sum = 0.0;
    let mut y = vec![0.0; n];
    for (z, w) in rule.points.iter().zip(&rule.weights) {
        for a in 0..n {
            y[a] = x[a] - center[a] - s * z[a];
        }
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        sum += w * kernel.eval(r) * poly.eval(z);
    }
    s.powi(n as i32) * sum
}

/// The same integral for a constant P ≡ c through the radial profile L.
pub fn atom_convolution_bessel(kernel: &RadialKernel, center: &[f64], s: f64, c: f64, x: &[f64]) -> Result<f64> {
    let n = center.len();
    let r = x
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        / s;
    Ok(s.powi(n as i32) * c * radial_profile_l(r, kernel, s, n)?)
}

/// 𝒦(Mu)(x) = ∫ g(|x−y|) Mu(y) dy with each atom integrated by a tensor
/// Gauss–Hermite rule of `gh_order` points per axis.
pub fn cubature_eval(qi: &ScatteredQI, data: &[f64], kernel: &RadialKernel, x: &[f64], gh_order: usize) -> Result<f64> {
    let rule = TensorRule::new(qi.n, gh_order_checked(gh_order)?);
    cubature_with_rule(qi, data, kernel, x, &rule)
}

fn gh_order_checked(order: usize) -> Result<usize> {
    if !(4..=64).contains(&order) {
        return Err(Error::InvalidParameter(format!("Gauss–Hermite order {order} outside 4..=64")));
    }
    Ok(order)
}

/// As [`cubature_eval`] with a prebuilt rule.
pub fn cubature_with_rule(qi: &ScatteredQI, data: &[f64], kernel: &RadialKernel, x: &[f64], rule: &TensorRule) -> Result<f64> {
    check_dim(qi.n, x.len())?;
    if let Some(m) = qi.max_node() {
        if m >= data.len() {
            return Err(Error::DimensionMismatch {
                expected: m + 1,
                got: data.len(),
            });
        }
    }
    let sd = qi.d.sqrt();
    let mut total = 0.0;
    for atom in &qi.atoms {
        let s = atom.scale * sd;
        let dist = atom
            .center
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if let Some(reach) = kernel.reach {
            if dist > reach + qi.rho_cut * s {
                continue;
            }
        }
        if kernel.smoothness == Smoothness::Singular && dist < qi.rho_cut * s {
            return Err(Error::QuadratureFailure(format!(
                "kernel {} is singular inside the atom at node {}",
                kernel.name, atom.node
            )));
        }
        let mut combined = Polynomial::zero(qi.n);
        for (k, p) in &atom.weights {
            combined = &combined + &p.scale(data[*k]);
        }
        if combined.is_zero() {
            continue;
        }
        total += atom_convolution(kernel, &atom.center, s, &combined, x, rule);
    }
    Ok((PI * qi.d).powf(-(qi.n as f64) / 2.0) * total)
}
