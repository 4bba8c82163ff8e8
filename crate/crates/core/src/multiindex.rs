//! Multi-indices in graded lexicographic order.

use std::cmp::Ordering;
use std::fmt;

/// An n-tuple of non-negative exponents.
///
/// Ordering is graded lexicographic: lower total order first, and within one
/// order the tuple with the larger leading entry first, so in two dimensions
/// `(1,0) < (0,1) < (2,0) < (1,1) < (0,2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit index e_i in `dim` dimensions.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |α|, the sum of the entries.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// α! = Π α_i!
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// x^α for a point of matching dimension.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.0.len());
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// All multi-indices of dimension `n` with `min_order <= |α| <= max_order`,
/// in graded lexicographic order.
pub fn enumerate_multiindices(n: usize, min_order: u32, max_order: u32) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be positive");
    let mut out = Vec::new();
    if min_order > max_order {
        return out;
    }
    let mut buf = vec![0u32; n];
    for d in min_order..=max_order {
        compositions(d, 0, &mut buf, &mut out);
    }
    out
}

fn compositions(remaining: u32, pos: usize, buf: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for first in (0..=remaining).rev() {
        buf[pos] = first;
        compositions(remaining - first, pos + 1, buf, out);
    }
}

/// Number of monomials of degree at most `degree` in `n` variables.
pub fn count_upto(n: usize, degree: u32) -> usize {
    binomial(degree as usize + n, n)
}

/// Star size m_N = (N-1+n)! / (n! (N-1)!) - 1, the number of indices with
/// 1 <= |α| <= N-1.
pub fn star_size(n: usize, order: u32) -> usize {
    if order == 0 {
        return 0;
    }
    count_upto(n, order - 1) - 1
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}
