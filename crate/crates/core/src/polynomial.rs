//! Dense multivariate polynomials, Hermite polynomials and the S_β family.
//!
//! `S_β` is the polynomial for which `x^β e^{-|x|²} = S_β(∂_x) e^{-|x|²}`.
//! It is the rescaled Hermite polynomial `(1/2i)^{|β|} H_β(t/2i)`, which has
//! real coefficients because every `H_k` has the parity of `k`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::multiindex::{enumerate_multiindices, MultiIndex};

/// A polynomial in `dim` variables with real coefficients, keyed by exponent.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    pub fn monomial(alpha: MultiIndex, c: f64) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function t_axis.
    pub fn variable(dim: usize, axis: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, axis), 1.0)
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Self::zero(dim);
        for (alpha, c) in terms {
            p.add_term(alpha, c);
        }
        p
    }

    /// Coefficients listed against `basis`, e.g. all indices up to a degree.
    pub fn from_coefficients(basis: &[MultiIndex], coeffs: &[f64]) -> Self {
        assert_eq!(basis.len(), coeffs.len());
        let dim = basis.first().map_or(1, MultiIndex::dim);
        Self::from_terms(dim, basis.iter().cloned().zip(coeffs.iter().copied()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        assert_eq!(alpha.dim(), self.dim, "multi-index dimension");
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(alpha.clone()).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&alpha);
        }
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    /// Largest |α| over stored nonzero terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(a, _)| a.order())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient vector against all indices of order `0..=degree`.
    pub fn dense_coefficients(&self, degree: u32) -> Vec<f64> {
        enumerate_multiindices(self.dim, 0, degree)
            .iter()
            .map(|a| self.coefficient(a))
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms.iter().map(|(a, &c)| c * a.monomial(x)).sum()
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| (a.clone(), c * s))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        }
    }

    pub fn derivative(&self, axis: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (a, &c) in &self.terms {
            let e = a.entries()[axis];
            if e == 0 {
                continue;
            }
            let mut v = a.entries().to_vec();
            v[axis] -= 1;
            out.add_term(MultiIndex::new(v), c * f64::from(e));
        }
        out
    }

    /// Expands `x ↦ P(s·x + b)` into monomials.
    pub fn compose_affine(&self, s: f64, shift: &[f64]) -> Polynomial {
        assert_eq!(shift.len(), self.dim);
        let mut out = Polynomial::zero(self.dim);
        for (alpha, &c) in &self.terms {
            // product over axes of (s x_i + b_i)^{α_i}
            let mut acc = Polynomial::constant(self.dim, c);
            for (axis, &e) in alpha.entries().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut factor = Polynomial::zero(self.dim);
                for k in 0..=e {
                    let coef = binomial(e, k) * s.powi(k as i32) * shift[axis].powi((e - k) as i32);
                    let mut v = vec![0u32; self.dim];
                    v[axis] = k;
                    factor.add_term(MultiIndex::new(v), coef);
                }
                acc = &acc * &factor;
            }
            out = &out + &acc;
        }
        out
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(_, &c)| c.abs() > tol)
                .map(|(a, &c)| (a.clone(), c))
                .collect(),
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Flattens the polynomial for repeated evaluation.
    pub fn compile(&self) -> CompiledPoly {
        let mut exps = Vec::with_capacity(self.terms.len() * self.dim);
        let mut coeffs = Vec::with_capacity(self.terms.len());
        let mut max_exp = 0;
        for (a, &c) in &self.terms {
            exps.extend_from_slice(a.entries());
            coeffs.push(c);
            max_exp = max_exp.max(a.entries().iter().copied().max().unwrap_or(0));
        }
        CompiledPoly {
            dim: self.dim,
            exps,
            coeffs,
            max_exp: max_exp as usize,
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·t^{a:?}")?;
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (a, &c) in &rhs.terms {
            out.add_term(a.clone(), c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = Polynomial::zero(self.dim);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out
    }
}

/// Flat polynomial layout for hot evaluation loops.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    dim: usize,
    exps: Vec<u32>,
    coeffs: Vec<f64>,
    max_exp: usize,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.dim {
            1 => {
                let x0 = x[0];
                let mut acc = 0.0;
                for (e, c) in self.exps.iter().zip(&self.coeffs) {
                    acc += c * x0.powi(*e as i32);
                }
                acc
            }
            _ => {
                // power tables per axis, small and on the stack for dim <= 3
                let stride = self.max_exp + 1;
                let mut pows = vec![1.0; self.dim * stride];
                for (axis, &xi) in x.iter().enumerate() {
                    for k in 1..stride {
                        pows[axis * stride + k] = pows[axis * stride + k - 1] * xi;
                    }
                }
                let mut acc = 0.0;
                for (t, c) in self.coeffs.iter().enumerate() {
                    let mut m = *c;
                    for axis in 0..self.dim {
                        m *= pows[axis * stride + self.exps[t * self.dim + axis] as usize];
                    }
                    acc += m;
                }
                acc
            }
        }
    }
}

/// Coefficients of the physicists' Hermite polynomial H_k, lowest power first.
pub fn hermite_coefficients(k: u32) -> Vec<f64> {
    let k = k as usize;
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for m in 1..k {
        // H_{m+1} = 2t H_m - 2m H_{m-1}
        let mut next = vec![0.0; m + 2];
        for (p, &c) in cur.iter().enumerate() {
            next[p + 1] += 2.0 * c;
        }
        for (p, &c) in prev.iter().enumerate() {
            next[p] -= 2.0 * m as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// H_k(t) by the three-term recurrence.
pub fn hermite_1d(k: u32, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (mut h0, mut h1) = (1.0, 2.0 * t);
    for m in 1..k {
        let h2 = 2.0 * t * h1 - 2.0 * f64::from(m) * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Multivariate Hermite polynomial H_β(t) = e^{|t|²}(-∂)^β e^{-|t|²}.
pub fn hermite(beta: &MultiIndex, t: &[f64]) -> f64 {
    assert_eq!(beta.dim(), t.len());
    beta.entries()
        .iter()
        .zip(t)
        .map(|(&k, &ti)| hermite_1d(k, ti))
        .product()
}

fn s_table() -> &'static Mutex<Vec<Vec<f64>>> {
    static TABLE: OnceLock<Mutex<Vec<Vec<f64>>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(Vec::new()))
}

/// Coefficients of the univariate S_k, lowest power first.
pub fn s_coefficients_1d(k: u32) -> Vec<f64> {
    let mut table = s_table().lock().expect("S table poisoned");
    while table.len() <= k as usize {
        let m = table.len() as u32;
        table.push(expand_s_1d(m));
    }
    table[k as usize].clone()
}

// S_k(t) = (2i)^{-k} H_k(t / 2i): the t^p coefficient is h_{k,p} (2i)^{-(k+p)}
// and k+p is always even.
fn expand_s_1d(k: u32) -> Vec<f64> {
    let h = hermite_coefficients(k);
    h.iter()
        .enumerate()
        .map(|(p, &c)| {
            if c == 0.0 {
                return 0.0;
            }
            let e = k as i32 + p as i32;
            debug_assert!(e % 2 == 0);
            let sign = if (e / 2) % 2 == 0 { 1.0 } else { -1.0 };
            c * sign * 2f64.powi(-e)
        })
        .collect()
}

/// The polynomial S_β with x^β e^{-|x|²} = S_β(∂_x) e^{-|x|²}.
pub fn s_beta(beta: &MultiIndex) -> Polynomial {
    let dim = beta.dim();
    let mut acc = Polynomial::constant(dim, 1.0);
    for (axis, &k) in beta.entries().iter().enumerate() {
        if k == 0 {
            continue;
        }
        let coeffs = s_coefficients_1d(k);
        let factor = Polynomial::from_terms(
            dim,
            coeffs.iter().enumerate().map(|(p, &c)| {
                let mut v = vec![0u32; dim];
                v[axis] = p as u32;
                (MultiIndex::new(v), c)
            }),
        );
        acc = &acc * &factor;
    }
    acc
}
