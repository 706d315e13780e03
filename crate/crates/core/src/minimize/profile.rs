use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geodesic::Path;
use crate::homogenize::Landscape;
use crate::math;

/// One-dimensional optimal transition `τ ↦ g(σ(τ))` in stretched units `τ = x/δ`.
///
/// `σ` is the arclength along the geodesic `g` solving `σ' = √W_H(g(σ))`,
/// started from the point equidistant from both wells. The table covers
/// `|τ| ≤ collar`, is stretched so that it reaches both endpoints exactly
/// there, and is clamped beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProfile {
    dim: usize,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    collar: f64,
    step: f64,
    arc: Vec<f64>,
}

impl TransitionProfile {
    pub const DEFAULT_COLLAR: f64 = 8.0;

    pub fn new<L: Landscape>(land: &L, path: &Path, collar: f64) -> Result<Self> {
        if !(collar > 0.0) {
            return Err(Error::invalid("collar", "must be positive"));
        }
        let dim = path.dim();
        let mut nodes = Vec::with_capacity(path.len() * dim);
        let mut cumulative = Vec::with_capacity(path.len());
        let mut acc = 0.0;
        for i in 0..path.len() {
            if i > 0 {
                acc += math::dist(path.node(i - 1), path.node(i));
            }
            cumulative.push(acc);
            nodes.extend_from_slice(path.node(i));
        }
        let total = acc;
        let step = 1.0 / 2048.0;
        let count = libm::ceil(collar / step) as usize;
        let step = collar / count as f64;
        let mut profile = Self {
            dim,
            nodes,
            cumulative,
            collar,
            step,
            arc: Vec::new(),
        };
        if total == 0.0 {
            profile.arc = alloc::vec![0.0; 2 * count + 1];
            return Ok(profile);
        }

        let a = path.node(0);
        let b = path.node(path.len() - 1);
        let start = bisect(0.0, total, |s| {
            let p = profile.point(s);
            math::dist(&p, a) - math::dist(&p, b)
        });
        let speed = |s: f64| math::sqrt(land.value(&profile.point(s.clamp(0.0, total))).max(0.0));

        let mut forward = Vec::with_capacity(count + 1);
        let mut backward = Vec::with_capacity(count + 1);
        for (out, sign) in [(&mut forward, 1.0), (&mut backward, -1.0)] {
            let mut s = start;
            out.push(s);
            for _ in 0..count {
                let h = sign * step;
                let k1 = speed(s);
                let k2 = speed(s + 0.5 * h * k1);
                let k3 = speed(s + 0.5 * h * k2);
                let k4 = speed(s + h * k3);
                s = (s + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0).clamp(0.0, total);
                out.push(s);
            }
        }
        let lo = *backward.last().unwrap();
        let hi = *forward.last().unwrap();
        let span = hi - lo;
        let mut arc: Vec<f64> = backward.iter().rev().chain(forward.iter().skip(1)).copied().collect();
        if span > 0.0 {
            for s in arc.iter_mut() {
                *s = (*s - lo) / span * total;
            }
            arc[0] = 0.0;
            *arc.last_mut().unwrap() = total;
        }
        profile.arc = arc;
        Ok(profile)
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn collar(&self) -> f64 {
        self.collar
    }

    pub fn well_a(&self) -> &[f64] {
        &self.nodes[..self.dim]
    }

    pub fn well_b(&self) -> &[f64] {
        &self.nodes[self.nodes.len() - self.dim..]
    }

    /// Point on the path at arclength `s`.
    fn point(&self, s: f64) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim];
        self.point_into(s, &mut out);
        out
    }

    fn point_into(&self, s: f64, out: &mut [f64]) {
        let d = self.dim;
        let n = self.cumulative.len();
        let total = self.cumulative[n - 1];
        if s <= 0.0 || total == 0.0 {
            out.copy_from_slice(&self.nodes[..d]);
            return;
        }
        if s >= total {
            out.copy_from_slice(&self.nodes[(n - 1) * d..]);
            return;
        }
        let i = self.cumulative.partition_point(|&c| c <= s).clamp(1, n - 1) - 1;
        let len = self.cumulative[i + 1] - self.cumulative[i];
        let t = if len > 0.0 { (s - self.cumulative[i]) / len } else { 0.0 };
        for k in 0..d {
            let p = self.nodes[i * d + k];
            let q = self.nodes[(i + 1) * d + k];
            out[k] = p + t * (q - p);
        }
    }

    /// Profile value at stretched coordinate `tau`.
    pub fn eval(&self, tau: f64, out: &mut [f64]) {
        let d = self.dim;
        if tau <= -self.collar {
            out.copy_from_slice(&self.nodes[..d]);
            return;
        }
        if tau >= self.collar {
            out.copy_from_slice(&self.nodes[self.nodes.len() - d..]);
            return;
        }
        let u = (tau + self.collar) / self.step;
        let i = (libm::floor(u) as usize).min(self.arc.len() - 2);
        let t = u - i as f64;
        let s = self.arc[i] + t * (self.arc[i + 1] - self.arc[i]);
        self.point_into(s, out);
    }
}

fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::HomogenizedPotential;
    use crate::potential::{BaseWell, Modulation, PotentialSpec};

    #[test]
    fn quartic_profile_is_tanh() {
        let spec = PotentialSpec::new(1, alloc::vec![-1.0], alloc::vec![1.0], BaseWell::QuarticScalar, Modulation::Constant(1.0))
            .unwrap();
        let hp = HomogenizedPotential::exact(&spec);
        let path = Path::straight(&[-1.0], &[1.0], 128);
        let profile = TransitionProfile::new(&hp, &path, 8.0).unwrap();
        let mut out = [0.0];
        for tau in [-9.0, -3.0, -0.7, 0.0, 0.4, 2.5, 7.9, 12.0] {
            profile.eval(tau, &mut out);
            assert!((out[0] - math::tanh(tau)).abs() < 1e-6, "tau = {tau}: {}", out[0]);
        }
    }
}
