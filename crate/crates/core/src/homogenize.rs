//! Cell averages `W_H(p) = ∫_Q W(y, p) dy` and their tabulation.

use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::math::{self, Sum};
use crate::potential::{advance, Modulation, Potential, PotentialSpec, TruncatedPotential};

/// A nonnegative function of the state alone.
pub trait Landscape {
    fn state_dim(&self) -> usize;

    fn value(&self, p: &[f64]) -> f64;

    /// Central differences unless overridden.
    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        let mut q = p.to_vec();
        for k in 0..p.len() {
            let h = 1e-6 * (1.0 + p[k].abs());
            q[k] = p[k] + h;
            let up = self.value(&q);
            q[k] = p[k] - h;
            let down = self.value(&q);
            q[k] = p[k];
            out[k] = (up - down) / (2.0 * h);
        }
    }
}

impl<L: Landscape + ?Sized> Landscape for &L {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        (**self).gradient(p, out)
    }
}

/// Landscape defined by a closure; gradients by central differences.
pub struct Uniform<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> Uniform<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> core::fmt::Debug for Uniform<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Uniform").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl<F: Fn(&[f64]) -> f64> Landscape for Uniform<F> {
    fn state_dim(&self) -> usize {
        self.dim
    }
    fn value(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Closed-form cell mean of the modulation.
    ExactMean,
    /// Composite midpoint rule with `resolution` points per cell axis.
    Quadrature,
}

/// Midpoint-rule average of `f` over the unit cell `[0,1)^dim`.
pub fn cell_average<F: FnMut(&[f64]) -> f64>(dim: usize, resolution: usize, mut f: F) -> f64 {
    let mut idx = vec![0usize; dim];
    let mut y = vec![0.0; dim];
    let mut sum = Sum::new();
    let inv = 1.0 / resolution as f64;
    loop {
        for k in 0..dim {
            y[k] = (idx[k] as f64 + 0.5) * inv;
        }
        sum.add(f(&y));
        if !advance(&mut idx, resolution) {
            break;
        }
    }
    sum.value() * math::powi(inv, dim as i32)
}

/// Default per-axis quadrature resolution for a cell dimension.
pub fn default_resolution(space_dim: usize) -> usize {
    if space_dim <= 2 {
        64
    } else {
        16
    }
}

/// Multilinear interpolation table over a box of state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    bounds: Bounds,
    per_axis: usize,
    values: Vec<f64>,
    max_error: f64,
}

impl Table {
    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Largest deviation from direct evaluation seen on cell midpoints.
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    #[inline]
    fn node(&self, k: usize, i: usize) -> f64 {
        let lo = self.bounds.lo()[k];
        let step = self.bounds.side(k) / (self.per_axis - 1) as f64;
        lo + step * i as f64
    }

    /// Cell corner and local coordinates of `p`, or `None` outside the box.
    fn locate(&self, p: &[f64], base: &mut [usize], t: &mut [f64]) -> bool {
        if !self.bounds.contains(p) {
            return false;
        }
        let last = self.per_axis - 2;
        for k in 0..p.len() {
            let u = (p[k] - self.bounds.lo()[k]) / self.bounds.side(k) * (self.per_axis - 1) as f64;
            let i = (math::floor(u).max(0.0) as usize).min(last);
            let (x0, x1) = (self.node(k, i), self.node(k, i + 1));
            base[k] = i;
            t[k] = ((p[k] - x0) / (x1 - x0)).clamp(0.0, 1.0);
        }
        true
    }

    fn corner_index(&self, base: &[usize], corner: usize) -> usize {
        let d = base.len();
        let mut flat = 0;
        for k in 0..d {
            let bit = (corner >> (d - 1 - k)) & 1;
            flat = flat * self.per_axis + base[k] + bit;
        }
        flat
    }

    fn interpolate(&self, base: &[usize], t: &[f64]) -> f64 {
        let d = base.len();
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let v = self.values[self.corner_index(base, corner)];
            let mut w = 1.0;
            for k in 0..d {
                w *= if (corner >> (d - 1 - k)) & 1 == 1 {
                    t[k]
                } else {
                    1.0 - t[k]
                };
            }
            if w != 0.0 {
                acc += w * v;
            }
        }
        acc
    }

    fn interpolate_gradient(&self, base: &[usize], t: &[f64], out: &mut [f64]) {
        let d = base.len();
        out.iter_mut().for_each(|g| *g = 0.0);
        for corner in 0..(1usize << d) {
            let v = self.values[self.corner_index(base, corner)];
            for j in 0..d {
                let mut w = 1.0;
                for k in 0..d {
                    let bit = (corner >> (d - 1 - k)) & 1 == 1;
                    w *= if k == j {
                        if bit {
                            1.0
                        } else {
                            -1.0
                        }
                    } else if bit {
                        t[k]
                    } else {
                        1.0 - t[k]
                    };
                }
                out[j] += w * v;
            }
        }
        for j in 0..d {
            out[j] *= (self.per_axis - 1) as f64 / self.bounds.side(j);
        }
    }
}

/// `W_H` or, over a truncated source, `W̃_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedPotential {
    spec: PotentialSpec,
    cap: Option<f64>,
    mode: Mode,
    resolution: usize,
    /// `(scale·m, weight)` pairs of the cell quadrature.
    samples: Vec<(f64, f64)>,
    mean_factor: f64,
    table: Option<Table>,
}

impl HomogenizedPotential {
    /// Closed-form mean over an untruncated spec.
    pub fn exact(spec: &PotentialSpec) -> Self {
        Self::build(spec.clone(), None, Mode::ExactMean, 0)
    }

    /// Cell quadrature over an untruncated spec.
    pub fn quadrature(spec: &PotentialSpec, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::invalid("quadrature_resolution", "must be positive"));
        }
        Ok(Self::build(spec.clone(), None, Mode::Quadrature, resolution))
    }

    pub fn exact_truncated(t: &TruncatedPotential) -> Self {
        Self::build(t.inner().clone(), Some(t.cap()), Mode::ExactMean, 0)
    }

    pub fn quadrature_truncated(t: &TruncatedPotential, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::invalid("quadrature_resolution", "must be positive"));
        }
        Ok(Self::build(t.inner().clone(), Some(t.cap()), Mode::Quadrature, resolution))
    }

    fn build(spec: PotentialSpec, cap: Option<f64>, mode: Mode, resolution: usize) -> Self {
        let scale = spec.scale();
        let (samples, mean_factor) = match mode {
            Mode::ExactMean => {
                let samples = spec
                    .modulation()
                    .level_sets()
                    .map(|v| v.into_iter().map(|(m, w)| (scale * m, w)).collect())
                    .unwrap_or_default();
                (samples, spec.mean_factor())
            }
            Mode::Quadrature => {
                let n = spec.space_dim();
                let m = *spec.modulation();
                let mut vals = Vec::with_capacity(resolution.pow(n.min(3) as u32));
                let mut idx = vec![0usize; n];
                let mut y = vec![0.0; n];
                loop {
                    for k in 0..n {
                        y[k] = (idx[k] as f64 + 0.5) / resolution as f64;
                    }
                    vals.push(scale * m.value(&y));
                    if !advance(&mut idx, resolution) {
                        break;
                    }
                }
                let w = 1.0 / vals.len() as f64;
                vals.sort_by(f64::total_cmp);
                let mut samples: Vec<(f64, f64)> = Vec::new();
                for v in vals {
                    match samples.last_mut() {
                        Some(last) if last.0 == v => last.1 += w,
                        _ => samples.push((v, w)),
                    }
                }
                let mut mean = Sum::new();
                for &(v, w) in &samples {
                    mean.add(v * w);
                }
                (samples, mean.value())
            }
        };
        Self {
            spec,
            cap,
            mode,
            resolution,
            samples,
            mean_factor,
            table: None,
        }
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn table(&self) -> Option<&Table> {
        self.table.as_ref()
    }

    /// Effective factor `c` with `W_H = c·W₀` when no cap is present.
    pub fn mean_factor(&self) -> f64 {
        self.mean_factor
    }

    /// Evaluate without consulting the table.
    pub fn direct(&self, p: &[f64]) -> f64 {
        let w0 = self.spec.base_value(p);
        let Some(cap) = self.cap else {
            return self.mean_factor * w0;
        };
        if !self.samples.is_empty() {
            let mut acc = 0.0;
            for &(m, w) in &self.samples {
                acc += w * (m * w0).min(cap);
            }
            return acc;
        }
        // exact mode for a smooth modulation: closed-form truncated mean
        match *self.spec.modulation() {
            Modulation::Sine { amplitude } => {
                truncated_sine_mean(self.spec.scale() * w0, amplitude.abs(), cap)
            }
            _ => (self.mean_factor * w0).min(cap),
        }
    }

    fn direct_gradient(&self, p: &[f64], out: &mut [f64]) {
        self.spec.base_gradient(p, out);
        let factor = match self.cap {
            None => self.mean_factor,
            Some(cap) => {
                let w0 = self.spec.base_value(p);
                if !self.samples.is_empty() {
                    self.samples
                        .iter()
                        .filter(|&&(m, _)| m * w0 < cap)
                        .map(|&(m, w)| w * m)
                        .sum()
                } else {
                    match *self.spec.modulation() {
                        Modulation::Sine { amplitude } => {
                            let s = self.spec.scale();
                            let h = 1e-7 * (1.0 + w0);
                            let a = amplitude.abs();
                            (truncated_sine_mean(s * (w0 + h), a, cap)
                                - truncated_sine_mean(s * (w0 - h).max(0.0), a, cap))
                                / (w0 + h - (w0 - h).max(0.0))
                        }
                        _ => {
                            if self.mean_factor * w0 < cap {
                                self.mean_factor
                            } else {
                                0.0
                            }
                        }
                    }
                }
            }
        };
        for g in out.iter_mut() {
            *g *= factor;
        }
    }

    /// Attach a multilinear table over `bounds` with `per_axis` nodes per axis.
    pub fn tabulate(mut self, bounds: Bounds, per_axis: usize) -> Result<Self> {
        let d = self.spec.state_dim();
        if bounds.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bounds.dim(),
            });
        }
        if per_axis < 2 {
            return Err(Error::invalid("per_axis", "need at least two nodes"));
        }
        let margin = 0.1 * bounds.diameter();
        for well in [self.spec.well_a(), self.spec.well_b()] {
            for k in 0..d {
                if well[k] - bounds.lo()[k] < margin || bounds.hi()[k] - well[k] < margin {
                    return Err(Error::TableBox { margin });
                }
            }
        }
        self.table = None;
        let mut table = Table {
            bounds,
            per_axis,
            values: Vec::new(),
            max_error: 0.0,
        };
        let mut idx = vec![0usize; d];
        let mut p = vec![0.0; d];
        let mut values = Vec::with_capacity(per_axis.pow(d as u32));
        loop {
            for k in 0..d {
                p[k] = table.node(k, idx[k]);
            }
            values.push(self.direct(&p));
            if !advance(&mut idx, per_axis) {
                break;
            }
        }
        table.values = values;

        // refinement check on cell midpoints, strided to stay cheap in 3D
        let cells = per_axis - 1;
        let total = cells.pow(d as u32);
        let stride = (total / 100_000).max(1);
        let mut base = vec![0usize; d];
        let t = vec![0.5; d];
        let mut err: f64 = 0.0;
        let mut flat = 0usize;
        loop {
            if flat.is_multiple_of(stride) {
                for k in 0..d {
                    p[k] = 0.5 * (table.node(k, base[k]) + table.node(k, base[k] + 1));
                }
                err = err.max((table.interpolate(&base, &t) - self.direct(&p)).abs());
            }
            flat += 1;
            if !advance(&mut base, cells) {
                break;
            }
        }
        table.max_error = err;
        self.table = Some(table);
        Ok(self)
    }
}

/// `∫₀¹ min{w(1 + α sin 2πy), M} dy` for `0 ≤ α ≤ 1`, `w ≥ 0`.
fn truncated_sine_mean(w: f64, alpha: f64, cap: f64) -> f64 {
    if w * (1.0 + alpha) <= cap {
        return w;
    }
    if w * (1.0 - alpha) >= cap {
        return cap;
    }
    // the cap binds where sin φ > c
    let c = ((cap / w - 1.0) / alpha).clamp(-1.0, 1.0);
    let pi = core::f64::consts::PI;
    let asin_c = libm::asin(c);
    let frac = (pi - 2.0 * asin_c) / (2.0 * pi);
    let sin_mass = math::sqrt(1.0 - c * c) / pi;
    w * (1.0 - frac) - w * alpha * sin_mass + cap * frac
}

impl Landscape for HomogenizedPotential {
    fn state_dim(&self) -> usize {
        self.spec.state_dim()
    }

    fn value(&self, p: &[f64]) -> f64 {
        if let Some(table) = &self.table {
            let d = p.len();
            let mut base = [0usize; 3];
            let mut t = [0.0f64; 3];
            if d <= 3 && table.locate(p, &mut base[..d], &mut t[..d]) {
                return table.interpolate(&base[..d], &t[..d]);
            }
        }
        self.direct(p)
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        if let Some(table) = &self.table {
            let d = p.len();
            let mut base = [0usize; 3];
            let mut t = [0.0f64; 3];
            if d <= 3 && table.locate(p, &mut base[..d], &mut t[..d]) {
                table.interpolate_gradient(&base[..d], &t[..d], out);
                return;
            }
        }
        self.direct_gradient(p, out)
    }
}
