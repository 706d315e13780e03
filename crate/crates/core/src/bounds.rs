use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Axis-aligned box `[lo_0, hi_0] × … × [lo_{n-1}, hi_{n-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::invalid("bounds", "box must have at least one axis"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::invalid("bounds", "need finite lo < hi on every axis"));
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![lo; dim], alloc::vec![hi; dim])
    }

    pub fn unit(dim: usize) -> Self {
        Self::cube(dim, 0.0, 1.0).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    pub fn diameter(&self) -> f64 {
        math::dist(&self.lo, &self.hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Measure of the boundary (`2` in one dimension: two endpoints).
    pub fn surface(&self) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for k in 0..n {
            let face: f64 = (0..n).filter(|&j| j != k).map(|j| self.side(j)).product();
            total += 2.0 * face;
        }
        total
    }
}
