use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::homogenize::Landscape;
use crate::math::{self, Sum};

/// Polyline `g_0, …, g_K` in state space, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    coords: Vec<f64>,
}

impl Path {
    pub fn new(nodes: &[Vec<f64>]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("path", "need at least two nodes"));
        }
        let dim = nodes[0].len();
        if dim == 0 {
            return Err(Error::invalid("path", "nodes must have at least one coordinate"));
        }
        let mut coords = Vec::with_capacity(dim * nodes.len());
        for n in nodes {
            if n.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: n.len(),
                });
            }
            coords.extend_from_slice(n);
        }
        Ok(Self { dim, coords })
    }

    /// Straight segment from `a` to `b` with `segments` equal pieces.
    pub fn straight(a: &[f64], b: &[f64], segments: usize) -> Self {
        let dim = a.len();
        let segments = segments.max(1);
        let mut coords = Vec::with_capacity(dim * (segments + 1));
        for i in 0..=segments {
            let t = i as f64 / segments as f64;
            for k in 0..dim {
                coords.push(if i == segments {
                    b[k]
                } else {
                    a[k] + t * (b[k] - a[k])
                });
            }
        }
        Self { dim, coords }
    }

    pub(crate) fn from_flat(dim: usize, coords: Vec<f64>) -> Self {
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn segments(&self) -> usize {
        self.len() - 1
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn reversed(&self) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for i in (0..self.len()).rev() {
            coords.extend_from_slice(self.node(i));
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    pub fn chord_lengths(&self) -> Vec<f64> {
        (0..self.segments())
            .map(|i| math::dist(self.node(i), self.node(i + 1)))
            .collect()
    }

    pub fn arc_length(&self) -> f64 {
        self.chord_lengths().iter().sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.nodes().map(math::norm).fold(0.0, f64::max)
    }

    /// Point at arclength fraction `t ∈ [0, 1]` along the polyline.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let chords = self.chord_lengths();
        let total: f64 = chords.iter().sum();
        let mut out = vec![0.0; self.dim];
        if total == 0.0 {
            out.copy_from_slice(self.node(0));
            return out;
        }
        let target = t.clamp(0.0, 1.0) * total;
        let mut acc = 0.0;
        for (i, &c) in chords.iter().enumerate() {
            if acc + c >= target || i + 1 == chords.len() {
                let s = if c > 0.0 { ((target - acc) / c).clamp(0.0, 1.0) } else { 0.0 };
                let (p, q) = (self.node(i), self.node(i + 1));
                for k in 0..self.dim {
                    out[k] = p[k] + s * (q[k] - p[k]);
                }
                return out;
            }
            acc += c;
        }
        out.copy_from_slice(self.node(self.len() - 1));
        out
    }

    /// Resample at `segments` equal arclength steps.
    pub fn resample(&self, segments: usize) -> Self {
        let segments = segments.max(1);
        let mut coords = Vec::with_capacity(self.dim * (segments + 1));
        let chords = self.chord_lengths();
        let total: f64 = chords.iter().sum();
        let mut seg = 0usize;
        let mut acc = 0.0;
        for j in 0..=segments {
            if j == 0 {
                coords.extend_from_slice(self.node(0));
                continue;
            }
            if j == segments {
                coords.extend_from_slice(self.node(self.len() - 1));
                continue;
            }
            let target = total * j as f64 / segments as f64;
            while seg + 1 < chords.len() && acc + chords[seg] < target {
                acc += chords[seg];
                seg += 1;
            }
            let c = chords[seg];
            let s = if c > 0.0 { ((target - acc) / c).clamp(0.0, 1.0) } else { 0.0 };
            let (p, q) = (self.node(seg), self.node(seg + 1));
            for k in 0..self.dim {
                coords.push(p[k] + s * (q[k] - p[k]));
            }
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    /// Place the same number of nodes on the polyline with equal chords.
    ///
    /// The common chord is found by bisection on a forward walk; if the walk
    /// cannot close up (very irregular polylines) the arclength resampling is
    /// returned instead.
    pub fn reparametrize(&self) -> Self {
        let k = self.segments();
        let total = self.arc_length();
        if k <= 1 || total == 0.0 {
            return self.clone();
        }
        let end = self.node(self.len() - 1).to_vec();
        let mut lo = 0.0;
        let mut hi = total / k as f64;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..200 {
            let c = 0.5 * (lo + hi);
            if c <= lo || c >= hi {
                break;
            }
            match self.walk(c, k - 1) {
                Some(coords) => {
                    let last = &coords[(k - 1) * self.dim..];
                    let gap = math::dist(last, &end);
                    if gap > c {
                        lo = c;
                    } else {
                        hi = c;
                    }
                    let miss = (gap - c).abs();
                    if best.as_ref().is_none_or(|(m, _)| miss < *m) {
                        best = Some((miss, coords));
                    }
                }
                None => hi = c,
            }
        }
        match best {
            Some((miss, mut coords)) if miss <= 1e-11 * total => {
                coords.extend_from_slice(&end);
                Self {
                    dim: self.dim,
                    coords,
                }
            }
            _ => self.resample(k),
        }
    }

    /// Starting at node 0, step `steps` times to the next point of the
    /// polyline at Euclidean distance `c`. Returns the flat coordinates of
    /// the visited points (including the start), or `None` when the walk
    /// runs off the end.
    fn walk(&self, c: f64, steps: usize) -> Option<Vec<f64>> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * (steps + 2));
        out.extend_from_slice(self.node(0));
        let mut q = self.node(0).to_vec();
        let mut seg = 0usize;
        let mut s0 = 0.0;
        let c2 = c * c;
        for _ in 0..steps {
            let mut found = false;
            while seg < self.segments() {
                let (p0, p1) = (self.node(seg), self.node(seg + 1));
                // |p0 + s(p1 − p0) − q|² = c² for the largest root in [s0, 1]
                let mut aa = 0.0;
                let mut bb = 0.0;
                let mut cc = -c2;
                for k in 0..d {
                    let v = p1[k] - p0[k];
                    let w = p0[k] - q[k];
                    aa += v * v;
                    bb += 2.0 * v * w;
                    cc += w * w;
                }
                if aa > 0.0 {
                    let disc = bb * bb - 4.0 * aa * cc;
                    if disc >= 0.0 {
                        let s = (-bb + math::sqrt(disc)) / (2.0 * aa);
                        if s >= s0 && s <= 1.0 {
                            for k in 0..d {
                                q[k] = p0[k] + s * (p1[k] - p0[k]);
                            }
                            out.extend_from_slice(&q);
                            s0 = s;
                            found = true;
                            break;
                        }
                    }
                }
                seg += 1;
                s0 = 0.0;
            }
            if !found {
                return None;
            }
        }
        Some(out)
    }
}

#[inline]
fn segment_term<L: Landscape>(land: &L, p: &[f64], q: &[f64], mid: &mut [f64]) -> f64 {
    for k in 0..p.len() {
        mid[k] = 0.5 * (p[k] + q[k]);
    }
    2.0 * math::sqrt(land.value(mid).max(0.0)) * math::dist(p, q)
}

/// `2 Σ √W(midpoint)·|chord|`, summed from both ends inward so that the
/// reversed path gives the identical value.
pub fn path_cost<L: Landscape>(path: &Path, land: &L) -> f64 {
    let k = path.segments();
    let mut mid = vec![0.0; path.dim()];
    let mut sum = Sum::new();
    let (mut i, mut j) = (0usize, k);
    while i + 1 < j {
        let left = segment_term(land, path.node(i), path.node(i + 1), &mut mid);
        let right = segment_term(land, path.node(j - 1), path.node(j), &mut mid);
        sum.add(left + right);
        i += 1;
        j -= 1;
    }
    if i < j {
        sum.add(segment_term(land, path.node(i), path.node(j), &mut mid));
    }
    sum.value()
}

/// Gradient of [`path_cost`] with respect to every node (endpoints included).
pub(crate) fn cost_gradient<L: Landscape>(path: &Path, land: &L, out: &mut [f64]) {
    let d = path.dim();
    out.iter_mut().for_each(|g| *g = 0.0);
    let mut mid = vec![0.0; d];
    let mut grad = vec![0.0; d];
    for i in 0..path.segments() {
        let (p, q) = (path.node(i), path.node(i + 1));
        for k in 0..d {
            mid[k] = 0.5 * (p[k] + q[k]);
        }
        let w = land.value(&mid).max(0.0);
        let root = math::sqrt(w);
        let len = math::dist(p, q);
        if root > 0.0 {
            land.gradient(&mid, &mut grad);
        } else {
            grad.iter_mut().for_each(|g| *g = 0.0);
        }
        for k in 0..d {
            // d√W = ∇W / (2√W); the midpoint contributes half to each end
            let along = if root > 0.0 { grad[k] / (2.0 * root) * 0.5 * len } else { 0.0 };
            let stretch = if len > 0.0 { root * (q[k] - p[k]) / len } else { 0.0 };
            out[i * d + k] += 2.0 * (along - stretch);
            out[(i + 1) * d + k] += 2.0 * (along + stretch);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::Uniform;

    #[test]
    fn equal_chords_after_reparametrization() {
        let nodes: Vec<Vec<f64>> = (0..=20)
            .map(|i| {
                let t = i as f64 / 20.0;
                let s = t * t;
                vec![s, math::sin(3.0 * s)]
            })
            .collect();
        let path = Path::new(&nodes).unwrap().reparametrize();
        let chords = path.chord_lengths();
        let mean: f64 = chords.iter().sum::<f64>() / chords.len() as f64;
        for c in chords {
            assert!((c - mean).abs() <= 1e-8 * mean);
        }
        assert_eq!(path.node(0), &[0.0, 0.0]);
        assert_eq!(path.node(20), nodes[20].as_slice());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let land = Uniform::new(2, |p: &[f64]| {
            let a = (p[0] + 1.0) * (p[0] + 1.0) + p[1] * p[1];
            let b = (p[0] - 1.0) * (p[0] - 1.0) + p[1] * p[1];
            a * b + 0.1
        });
        let nodes: Vec<Vec<f64>> = (0..=6)
            .map(|i| {
                let t = i as f64 / 6.0;
                vec![-1.0 + 2.0 * t, 0.3 * math::sin(core::f64::consts::PI * t)]
            })
            .collect();
        let path = Path::new(&nodes).unwrap();
        let mut g = vec![0.0; 14];
        cost_gradient(&path, &land, &mut g);
        let h = 1e-6;
        for idx in 2..12 {
            let mut plus = path.clone();
            plus.coords[idx] += h;
            let mut minus = path.clone();
            minus.coords[idx] -= h;
            let fd = (path_cost(&plus, &land) - path_cost(&minus, &land)) / (2.0 * h);
            assert!((fd - g[idx]).abs() < 1e-5 * (1.0 + fd.abs()), "{idx}: {fd} vs {}", g[idx]);
        }
    }
}
