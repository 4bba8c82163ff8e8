//! Scattered node sets with per-node scales and a bucket index for
//! neighbourhood queries.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};

/// Axis-aligned box of integer indices, bounds inclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexBox {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl IndexBox {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        IndexBox { lower, upper }
    }

    /// The cube `{lo..=hi}ⁿ`.
    pub fn cube(n: usize, lo: i64, hi: i64) -> Self {
        IndexBox::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(l, u)| l > u)
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l + 1) as usize)
            .product()
    }

    pub fn contains(&self, j: &[i64]) -> bool {
        j.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// All indices in the box, last axis fastest.
    pub fn indices(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.len());
        if self.is_empty() {
            return out;
        }
        let mut cur = self.lower.clone();
        loop {
            out.push(cur.clone());
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < self.upper[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = self.lower[axis];
            }
        }
    }
}

/// Parameters of the uniform grid a node set was generated from.
#[derive(Clone, Debug, PartialEq)]
pub struct GridLayout {
    pub h: f64,
    pub kappa1: f64,
    pub index_box: IndexBox,
}

/// Nodes `x_j` with scales `h_j`, stored flat.
#[derive(Clone, Debug)]
pub struct NodeSet {
    dim: usize,
    coords: Vec<f64>,
    scales: Vec<f64>,
    layout: Option<GridLayout>,
    // grid index of each node when generated from a layout
    grid_index: Vec<Vec<i64>>,
    by_grid: HashMap<Vec<i64>, usize>,
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    cell_lo: Vec<i64>,
    cell_hi: Vec<i64>,
}

impl NodeSet {
    /// Builds a node set from a flat coordinate list.
    pub fn new(dim: usize, coords: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if coords.len() != dim * scales.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * scales.len(),
                got: coords.len(),
            });
        }
        if let Some(h) = scales.iter().find(|&&h| h.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::InvalidParameter(format!("node scale {h} is not positive")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite node coordinate".into()));
        }
        let mut set = NodeSet {
            dim,
            coords,
            scales,
            layout: None,
            grid_index: Vec::new(),
            by_grid: HashMap::new(),
            cell: 1.0,
            buckets: HashMap::new(),
            cell_lo: vec![0; dim],
            cell_hi: vec![0; dim],
        };
        set.rebuild_index();
        Ok(set)
    }

    /// Nodes from a list of points sharing one scale.
    pub fn from_points(points: &[Vec<f64>], h: f64) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_dim(dim, p.len())?;
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords, vec![h; points.len()])
    }

    fn rebuild_index(&mut self) {
        self.buckets.clear();
        if self.scales.is_empty() {
            return;
        }
        let mut sorted = self.scales.clone();
        sorted.sort_by(f64::total_cmp);
        self.cell = sorted[sorted.len() / 2];
        self.cell_lo = vec![i64::MAX; self.dim];
        self.cell_hi = vec![i64::MIN; self.dim];
        for i in 0..self.len() {
            let key = self.cell_of(self.point(i));
            for (a, &k) in key.iter().enumerate() {
                self.cell_lo[a] = self.cell_lo[a].min(k);
                self.cell_hi[a] = self.cell_hi[a].max(k);
            }
            self.buckets.entry(key).or_default().push(i);
        }
    }

    fn cell_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scales[i]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn layout(&self) -> Option<&GridLayout> {
        self.layout.as_ref()
    }

    /// Grid index a node was drawn for, if the set came from a layout.
    pub fn grid_index(&self, i: usize) -> Option<&[i64]> {
        self.grid_index.get(i).map(Vec::as_slice)
    }

    /// Node drawn for grid index `j`.
    pub fn node_at_index(&self, j: &[i64]) -> Option<usize> {
        self.by_grid.get(j).copied()
    }

    /// max h_j / min h_j.
    pub fn scale_ratio(&self) -> f64 {
        let max = self.scales.iter().copied().fold(0.0, f64::max);
        let min = self.scales.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    fn dist2(&self, i: usize, x: &[f64]) -> f64 {
        self.point(i).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Visits the bucket cells at Chebyshev distance exactly `r` from `center`.
    fn ring<F: FnMut(usize)>(&self, center: &[i64], r: i64, f: &mut F) {
        let n = self.dim;
        let mut offset = vec![-r; n];
        loop {
            if offset.iter().any(|o| o.abs() == r) {
                let key: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
                if let Some(list) = self.buckets.get(&key) {
                    for &i in list {
                        f(i);
                    }
                }
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if offset[axis] < r {
                    offset[axis] += 1;
                    break;
                }
                offset[axis] = -r;
            }
        }
    }

    fn max_ring(&self, center: &[i64]) -> i64 {
        center
            .iter()
            .enumerate()
            .map(|(a, &c)| (c - self.cell_lo[a]).abs().max((self.cell_hi[a] - c).abs()))
            .max()
            .unwrap_or(0)
    }

    /// The `k` nodes nearest to `x` among those accepted by `keep`, sorted by
    /// distance with ties broken by node index.
    pub fn k_nearest_filtered<P: Fn(usize) -> bool>(&self, x: &[f64], k: usize, keep: P) -> Vec<usize> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let center = self.cell_of(x);
        let last = self.max_ring(&center);
        let mut found: Vec<(f64, usize)> = Vec::new();
        let mut r = 0;
        loop {
            self.ring(&center, r, &mut |i| {
                if keep(i) {
                    found.push((self.dist2(i, x), i));
                }
            });
            if found.len() >= k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let reach = r as f64 * self.cell;
                if found[k - 1].0 < reach * reach {
                    break;
                }
            }
            if r >= last {
                break;
            }
            r += 1;
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(k);
        found.into_iter().map(|(_, i)| i).collect()
    }

    pub fn k_nearest(&self, x: &[f64], k: usize) -> Vec<usize> {
        self.k_nearest_filtered(x, k, |_| true)
    }

    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        self.k_nearest(x, 1).first().copied()
    }

    /// Nodes with |x_i − x| < radius, sorted by index.
    pub fn within(&self, x: &[f64], radius: f64) -> Vec<usize> {
        if self.is_empty() {
            return Vec::new();
        }
        let center = self.cell_of(x);
        let reach = ((radius / self.cell).ceil() as i64 + 1).min(self.max_ring(&center));
        let mut out = Vec::new();
        for r in 0..=reach {
            self.ring(&center, r, &mut |i| {
                if self.dist2(i, x) < radius * radius {
                    out.push(i);
                }
            });
        }
        out.sort_unstable();
        out
    }

    /// Copy without the nodes for which `drop` returns true.
    pub fn without<P: Fn(usize, &[f64]) -> bool>(&self, drop: P) -> NodeSet {
        let mut coords = Vec::new();
        let mut scales = Vec::new();
        let mut grid_index = Vec::new();
        for i in 0..self.len() {
            if drop(i, self.point(i)) {
                continue;
            }
            coords.extend_from_slice(self.point(i));
            scales.push(self.scales[i]);
            if let Some(g) = self.grid_index.get(i) {
                grid_index.push(g.clone());
            }
        }
        let mut set = NodeSet::new(self.dim, coords, scales).expect("subset of a valid set");
        set.layout = self.layout.clone();
        set.attach_grid_index(grid_index);
        set
    }

    fn attach_grid_index(&mut self, grid_index: Vec<Vec<i64>>) {
        self.by_grid = grid_index
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        self.grid_index = grid_index;
    }

    /// Concatenates two node sets of equal dimension.
    pub fn union(&self, other: &NodeSet) -> Result<NodeSet> {
        check_dim(self.dim, other.dim)?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut scales = self.scales.clone();
        scales.extend_from_slice(&other.scales);
        NodeSet::new(self.dim, coords, scales)
    }

    /// Writes one row per node: `x1,…,xn,h`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        header.push("h".into());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.point(i).iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{:e}", self.scales[i]));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the format of [`NodeSet::write_csv`]; the dimension is the
    /// column count minus one.
    pub fn read_csv<R: Read>(r: R) -> Result<NodeSet> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let cols = rd.headers()?.len();
        if cols < 2 {
            return Err(Error::InvalidParameter("node CSV needs at least two columns".into()));
        }
        let dim = cols - 1;
        let mut coords = Vec::new();
        let mut scales = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            check_dim(cols, rec.len())?;
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad number {field:?} in node CSV")))?;
                if c < dim {
                    coords.push(v);
                } else {
                    scales.push(v);
                }
            }
        }
        NodeSet::new(dim, coords, scales)
    }
}

// SplitMix64 finaliser, used to derive one RNG stream per grid index
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn index_rng(seed: u64, j: &[i64]) -> ChaCha8Rng {
    let mut s = mix(seed);
    for &c in j {
        s = mix(s ^ (c as u64));
    }
    ChaCha8Rng::seed_from_u64(s)
}

/// A point drawn uniformly from the open unit ball in `n` dimensions.
fn unit_ball_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            return p;
        }
    }
}

/// One node drawn uniformly from the ball `B(hj, hκ₁)` for every index `j`
/// of the box.
///
/// Each index owns its own random stream derived from `(seed, j)`, so the
/// node for a given `j` does not depend on the box it is generated in.
pub fn generate_perturbed_grid(n: usize, h: f64, kappa1: f64, index_box: &IndexBox, seed: u64) -> Result<NodeSet> {
    check_dim(n, index_box.dim())?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("grid step {h} must be positive")));
    }
    if !(0.0..=0.5).contains(&kappa1) {
        return Err(Error::InvalidParameter(format!("kappa1 = {kappa1} outside [0, 1/2]")));
    }
    let indices = index_box.indices();
    let mut coords = Vec::with_capacity(indices.len() * n);
    for j in &indices {
        let mut rng = index_rng(seed, j);
        let u = unit_ball_point(&mut rng, n);
        for a in 0..n {
            coords.push(h * j[a] as f64 + h * kappa1 * u[a]);
        }
    }
    let mut set = NodeSet::new(n, coords, vec![h; indices.len()])?;
    set.layout = Some(GridLayout {
        h,
        kappa1,
        index_box: index_box.clone(),
    });
    set.attach_grid_index(indices);
    Ok(set)
}

/// Nodes exactly on the grid `hℤⁿ` over the box.
pub fn uniform_grid(n: usize, h: f64, index_box: &IndexBox) -> Result<NodeSet> {
    generate_perturbed_grid(n, h, 0.0, index_box, 0)
}
