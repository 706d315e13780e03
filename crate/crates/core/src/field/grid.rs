use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::math::{self, Sum};

/// Vector-valued nodal field on a uniform grid over a box; row-major with
/// the last spatial axis fastest and the state components innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    bounds: Bounds,
    counts: Vec<usize>,
    state_dim: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(bounds: Bounds, counts: Vec<usize>, state_dim: usize, values: Vec<f64>) -> Result<Self> {
        let spacing = check_shape(&bounds, &counts, state_dim)?;
        let nodes: usize = counts.iter().product();
        if values.len() != nodes * state_dim {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self {
            bounds,
            counts,
            state_dim,
            spacing,
            values,
        })
    }

    pub fn constant(bounds: Bounds, counts: Vec<usize>, value: &[f64]) -> Result<Self> {
        let nodes: usize = counts.iter().product();
        let mut values = Vec::with_capacity(nodes * value.len());
        for _ in 0..nodes {
            values.extend_from_slice(value);
        }
        Self::new(bounds, counts, value.len(), values)
    }

    /// Fill every node with `f(x, out)`.
    pub fn from_fn<F: FnMut(&[f64], &mut [f64])>(
        bounds: Bounds,
        counts: Vec<usize>,
        state_dim: usize,
        mut f: F,
    ) -> Result<Self> {
        let spacing = check_shape(&bounds, &counts, state_dim)?;
        let nodes: usize = counts.iter().product();
        let mut values = vec![0.0; nodes * state_dim];
        let mut x = vec![0.0; counts.len()];
        let mut idx = vec![0usize; counts.len()];
        for node in 0..nodes {
            for k in 0..counts.len() {
                x[k] = bounds.lo()[k] + spacing * idx[k] as f64;
            }
            f(&x, &mut values[node * state_dim..(node + 1) * state_dim]);
            advance_counts(&mut idx, &counts);
        }
        Ok(Self {
            bounds,
            counts,
            state_dim,
            spacing,
            values,
        })
    }

    /// Grid with `cells` cells along axis 0 and the same spacing elsewhere.
    pub fn counts_for(bounds: &Bounds, cells: usize) -> Result<Vec<usize>> {
        if cells == 0 {
            return Err(Error::invalid("cells", "must be positive"));
        }
        let h = bounds.side(0) / cells as f64;
        let mut counts = Vec::with_capacity(bounds.dim());
        for k in 0..bounds.dim() {
            let c = libm::round(bounds.side(k) / h);
            if (c * h - bounds.side(k)).abs() > 1e-9 * bounds.side(k) || c < 1.0 {
                return Err(Error::invalid("cells", "box sides are not commensurate with the spacing"));
            }
            counts.push(c as usize + 1);
        }
        Ok(counts)
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn space_dim(&self) -> usize {
        self.counts.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.state_dim..(node + 1) * self.state_dim]
    }

    pub fn value_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.state_dim..(node + 1) * self.state_dim]
    }

    /// Flat index of a multi-index.
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi_index(&self, mut node: usize, out: &mut [usize]) {
        for k in (0..self.counts.len()).rev() {
            out[k] = node % self.counts[k];
            node /= self.counts[k];
        }
    }

    pub fn coords(&self, node: usize, out: &mut [f64]) {
        let mut idx = vec![0usize; self.counts.len()];
        self.multi_index(node, &mut idx);
        for k in 0..idx.len() {
            out[k] = self.bounds.lo()[k] + self.spacing * idx[k] as f64;
        }
    }

    /// Row-major strides (in nodes) per axis.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.counts.len();
        let mut s = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.counts[k + 1];
        }
        s
    }

    /// Dual-cell weight of a node: `h^N` halved once per boundary axis.
    pub fn node_weight(&self, idx: &[usize]) -> f64 {
        let mut w = math::powi(self.spacing, self.counts.len() as i32);
        for (k, &i) in idx.iter().enumerate() {
            if i == 0 || i + 1 == self.counts[k] {
                w *= 0.5;
            }
        }
        w
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.bounds == other.bounds && self.counts == other.counts && self.state_dim == other.state_dim
    }

    pub fn max_norm(&self) -> f64 {
        self.values
            .chunks_exact(self.state_dim)
            .map(math::norm)
            .fold(0.0, f64::max)
    }
}

pub(crate) fn advance_counts(idx: &mut [usize], counts: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < counts[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

fn check_shape(bounds: &Bounds, counts: &[usize], state_dim: usize) -> Result<f64> {
    if counts.len() != bounds.dim() {
        return Err(Error::DimensionMismatch {
            expected: bounds.dim(),
            got: counts.len(),
        });
    }
    if counts.len() > 3 {
        return Err(Error::invalid("grid", "at most three spatial axes"));
    }
    if state_dim == 0 || counts.iter().any(|&c| c < 2) {
        return Err(Error::invalid("grid", "need two nodes per axis and a nonempty state"));
    }
    let h = bounds.side(0) / (counts[0] - 1) as f64;
    for k in 1..counts.len() {
        let hk = bounds.side(k) / (counts[k] - 1) as f64;
        if (hk - h).abs() > 1e-9 * h {
            return Err(Error::invalid("grid", "spacing must agree across axes"));
        }
    }
    Ok(h)
}

/// Nearest well per node; ties go to `a`.
pub fn project_to_wells(u: &GridField, a: &[f64], b: &[f64]) -> Result<GridField> {
    if a.len() != u.state_dim || b.len() != u.state_dim {
        return Err(Error::DimensionMismatch {
            expected: u.state_dim,
            got: a.len(),
        });
    }
    let mut out = u.clone();
    for v in out.values.chunks_exact_mut(u.state_dim) {
        let well = if math::dist_sq(v, a) <= math::dist_sq(v, b) { a } else { b };
        v.copy_from_slice(well);
    }
    Ok(out)
}

/// `∫|u − v|` with trapezoid node weights.
pub fn l1_distance(u: &GridField, v: &GridField) -> Result<f64> {
    if !u.same_grid(v) {
        return Err(Error::ShapeMismatch);
    }
    let d = u.state_dim;
    let mut idx = vec![0usize; u.space_dim()];
    let mut sum = Sum::new();
    for node in 0..u.node_count() {
        let gap = math::dist(&u.values[node * d..(node + 1) * d], &v.values[node * d..(node + 1) * d]);
        if gap != 0.0 {
            sum.add(gap * u.node_weight(&idx));
        }
        advance_counts(&mut idx, &u.counts);
    }
    Ok(sum.value())
}

/// Sub-domain used to restrict integrals and perimeters.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Full,
    Box(Bounds),
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Full => true,
            Region::Box(b) => b.contains(x),
            Region::Ball { center, radius } => math::dist_sq(x, center) <= radius * radius,
        }
    }
}

/// Iterate over every grid cell (multi-index of its lowest corner).
pub(crate) fn for_each_cell<F: FnMut(&[usize])>(counts: &[usize], mut f: F) {
    let cells: Vec<usize> = counts.iter().map(|&c| c - 1).collect();
    let mut idx = vec![0usize; counts.len()];
    loop {
        f(&idx);
        if !advance_counts(&mut idx, &cells) {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fields_are_a_gap_times_volume_apart() {
        let bounds = Bounds::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        let counts = GridField::counts_for(&bounds, 20).unwrap();
        assert_eq!(counts, vec![21, 11]);
        let u = GridField::constant(bounds.clone(), counts.clone(), &[-1.0]).unwrap();
        let v = GridField::constant(bounds, counts, &[1.0]).unwrap();
        assert!((l1_distance(&u, &v).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn projection_ties_go_to_a() {
        let u = GridField::constant(Bounds::unit(1), vec![5], &[0.0]).unwrap();
        let p = project_to_wells(&u, &[-1.0], &[1.0]).unwrap();
        assert!(p.values().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn cell_iteration_visits_every_cell_once() {
        let mut seen = 0;
        for_each_cell(&[3, 4, 2], |_| seen += 1);
        assert_eq!(seen, 6);
    }
}
