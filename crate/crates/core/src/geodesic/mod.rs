//! Transition constant `K_H = inf ∫ 2√W_H(g) |g'|` over curves from `a` to `b`.

mod oracle;
mod path;
mod quadrature;

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

pub use oracle::{dijkstra_oracle, OracleOptions};
pub use path::{path_cost, Path};
pub use quadrature::{integrate, kh_1d};

use crate::error::{Error, Result};
use crate::homogenize::{HomogenizedPotential, Landscape};
use crate::math;
use crate::potential::{PotentialSpec, TruncatedPotential};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringOptions {
    /// Number of path segments `K`.
    pub segments: usize,
    /// Relative cost decrease over a 10-iteration window that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Transverse jitter amplitude as a fraction of `|b − a|`.
    pub jitter: f64,
    /// Paths leaving `|p| ≤ radius` are flagged.
    pub radius: Option<f64>,
    /// Strength of the `H¹` smoothing of descent directions, in units of `K²`.
    pub smoothing: f64,
}

impl Default for StringOptions {
    fn default() -> Self {
        Self {
            segments: 128,
            tol: 1e-8,
            max_iter: 5000,
            seed: 0,
            jitter: 0.05,
            radius: None,
            smoothing: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult {
    pub cost: f64,
    pub path: Path,
    pub iterations: usize,
    pub converged: bool,
    pub max_norm: f64,
    /// `false` when the path leaves the configured radius.
    pub within_radius: bool,
}

const WINDOW: usize = 10;

/// String method: tangential descent of [`path_cost`] alternating with
/// equal-chord reparametrization.
pub fn minimize_kh<L: Landscape>(
    land: &L,
    a: &[f64],
    b: &[f64],
    opts: &StringOptions,
) -> Result<GeodesicResult> {
    let d = land.state_dim();
    if a.len() != d || b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if a.len() != d { a.len() } else { b.len() },
        });
    }
    if opts.segments < 8 {
        return Err(Error::invalid("segments", "need at least 8 segments"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }

    // solve in a fixed orientation so that swapping the wells only reverses the answer
    let swapped = b.iter().zip(a).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y);
    let (start, end) = if swapped { (b, a) } else { (a, b) };

    let mut result = if start == end {
        let path = Path::straight(start, end, opts.segments);
        GeodesicResult {
            cost: 0.0,
            max_norm: path.max_norm(),
            path,
            iterations: 0,
            converged: true,
            within_radius: true,
        }
    } else {
        // both sides of one random transverse direction, then the straight chord
        let mut best: Option<GeodesicResult> = None;
        let mut starts = jittered(start, end, opts);
        starts.push(Path::straight(start, end, opts.segments));
        for init in starts {
            let r = descend(land, init, opts);
            if best.as_ref().is_none_or(|b| r.cost < b.cost) {
                best = Some(r);
            }
        }
        best.expect("at least one start")
    };

    if swapped {
        result.path = result.path.reversed();
    }
    result.within_radius = opts.radius.is_none_or(|r| result.max_norm <= r);
    Ok(result)
}

fn jittered(a: &[f64], b: &[f64], opts: &StringOptions) -> Vec<Path> {
    let d = a.len();
    if d < 2 || opts.jitter == 0.0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let gap = math::dist(a, b);
    let axis: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) / gap).collect();
    let mut n = vec![0.0; d];
    loop {
        for v in n.iter_mut() {
            *v = 2.0 * math::unit_f64(&mut rng) - 1.0;
        }
        let s = math::dot(&n, &axis);
        for k in 0..d {
            n[k] -= s * axis[k];
        }
        let len = math::norm(&n);
        if len > 1e-3 {
            n.iter_mut().for_each(|v| *v /= len);
            break;
        }
    }
    [1.0, -1.0]
        .iter()
        .map(|sign| {
            let mut path = Path::straight(a, b, opts.segments);
            let amp = sign * opts.jitter * gap;
            for i in 1..opts.segments {
                let t = i as f64 / opts.segments as f64;
                let bump = amp * math::sin(core::f64::consts::PI * t);
                let node = path.node_mut(i);
                for k in 0..d {
                    node[k] += bump * n[k];
                }
            }
            path.reparametrize()
        })
        .collect()
}

fn descend<L: Landscape>(land: &L, init: Path, opts: &StringOptions) -> GeodesicResult {
    let d = init.dim();
    let k = init.segments();
    let chord = math::dist(init.node(0), init.node(k));
    let max_step = 0.1 * chord;

    let mut path = init;
    let mut cost = path_cost(&path, land);
    let mut history = vec![cost];
    let mut grad = vec![0.0; d * (k + 1)];
    let mut dir = vec![0.0; d * (k + 1)];
    let mut step = max_step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        path::cost_gradient(&path, land, &mut grad);
        tangential_direction(&path, &grad, &mut dir);
        smooth(&mut dir, d, k, opts.smoothing * (k * k) as f64);
        let scale = dir
            .chunks_exact(d)
            .map(math::norm)
            .fold(0.0, f64::max);
        if !(scale > 0.0) {
            converged = true;
            break;
        }
        dir.iter_mut().for_each(|v| *v /= scale);

        let mut s = (2.0 * step).min(max_step);
        let mut accepted = None;
        for _ in 0..48 {
            let mut coords = path.coords().to_vec();
            for (c, g) in coords.iter_mut().zip(&dir).skip(d).take(d * (k - 1)) {
                *c -= s * g;
            }
            let trial = Path::from_flat(d, coords).reparametrize();
            let trial_cost = path_cost(&trial, land);
            if trial_cost < cost {
                accepted = Some((trial, trial_cost));
                break;
            }
            s *= 0.5;
        }
        let Some((trial, trial_cost)) = accepted else {
            converged = true;
            break;
        };
        step = s;
        path = trial;
        cost = trial_cost;
        history.push(cost);
        let n = history.len();
        if n > WINDOW {
            let old = history[n - 1 - WINDOW];
            if (old - cost) <= opts.tol * cost.abs() {
                converged = true;
                break;
            }
        }
    }

    GeodesicResult {
        cost,
        max_norm: path.max_norm(),
        path,
        iterations,
        converged,
        within_radius: true,
    }
}

/// Apply `(I − c·D²)⁻¹` along the path to each coordinate of the interior nodes,
/// with the endpoints held at zero.
fn smooth(v: &mut [f64], d: usize, k: usize, c: f64) {
    if c <= 0.0 || k < 2 {
        return;
    }
    let m = k - 1;
    let mut cp = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 0..d {
        for i in 0..m {
            rhs[i] = v[(i + 1) * d + j];
        }
        let diag = 1.0 + 2.0 * c;
        let off = -c;
        let mut denom = diag;
        cp[0] = off / denom;
        rhs[0] /= denom;
        for i in 1..m {
            denom = diag - off * cp[i - 1];
            cp[i] = off / denom;
            rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
        }
        for i in (0..m - 1).rev() {
            rhs[i] -= cp[i] * rhs[i + 1];
        }
        for i in 0..m {
            v[(i + 1) * d + j] = rhs[i];
        }
    }
}

/// Node gradient minus its component along the local tangent; endpoints get zero.
fn tangential_direction(path: &Path, grad: &[f64], out: &mut [f64]) {
    let d = path.dim();
    let k = path.segments();
    out.iter_mut().for_each(|v| *v = 0.0);
    let mut tangent = vec![0.0; d];
    for i in 1..k {
        let (prev, next) = (path.node(i - 1), path.node(i + 1));
        for c in 0..d {
            tangent[c] = next[c] - prev[c];
        }
        let len = math::norm(&tangent);
        let g = &grad[i * d..(i + 1) * d];
        let o = &mut out[i * d..(i + 1) * d];
        if len > 0.0 {
            let s = math::dot(g, &tangent) / (len * len);
            for c in 0..d {
                o[c] = g[c] - s * tangent[c];
            }
        } else {
            o.copy_from_slice(g);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub kh: f64,
    pub kh_truncated: f64,
    pub gap: f64,
    /// Both runs converged and stayed inside the truncation radius.
    pub valid: bool,
}

/// Solve for `K_H` under `W_H` and under `W̃_H` and compare.
pub fn verify_truncation_invariance(
    spec: &PotentialSpec,
    tspec: &TruncatedPotential,
    opts: &StringOptions,
) -> Result<TruncationReport> {
    if tspec.inner() != spec {
        return Err(Error::invalid("tspec", "must truncate the given spec"));
    }
    let plain = HomogenizedPotential::exact(spec);
    let capped = HomogenizedPotential::exact_truncated(tspec);
    let opts = StringOptions {
        radius: Some(tspec.radius()),
        ..*opts
    };
    let (a, b) = (spec.well_a(), spec.well_b());
    let r1 = minimize_kh(&plain, a, b, &opts)?;
    let r2 = minimize_kh(&capped, a, b, &opts)?;
    Ok(TruncationReport {
        kh: r1.cost,
        kh_truncated: r2.cost,
        gap: (r1.cost - r2.cost).abs(),
        valid: r1.converged && r2.converged && r1.within_radius && r2.within_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::Uniform;
    use crate::potential::{BaseWell, Modulation};

    fn quartic() -> PotentialSpec {
        PotentialSpec::new(1, vec![-1.0], vec![1.0], BaseWell::QuarticScalar, Modulation::Constant(1.0))
            .unwrap()
    }

    #[test]
    fn straight_quartic_cost() {
        let hp = HomogenizedPotential::exact(&quartic());
        let path = Path::straight(&[-1.0], &[1.0], 2000);
        assert!((path_cost(&path, &hp) - 8.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn string_method_on_the_scalar_quartic() {
        let hp = HomogenizedPotential::exact(&quartic());
        let r = minimize_kh(&hp, &[-1.0], &[1.0], &StringOptions::default()).unwrap();
        assert!((r.cost - 8.0 / 3.0).abs() < 1e-3);
        assert!(r.converged);
    }

    #[test]
    fn degenerate_wells_cost_nothing() {
        let hp = HomogenizedPotential::exact(&quartic());
        let r = minimize_kh(&hp, &[0.5], &[0.5], &StringOptions::default()).unwrap();
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn descent_beats_the_straight_segment() {
        let land = Uniform::new(2, |p: &[f64]| {
            let a = (p[0] + 1.0) * (p[0] + 1.0) + p[1] * p[1];
            let b = (p[0] - 1.0) * (p[0] - 1.0) + p[1] * p[1];
            a * b + 2.0 * math::exp(-(p[0] * p[0] + p[1] * p[1]) / 0.1)
        });
        let opts = StringOptions {
            segments: 64,
            ..StringOptions::default()
        };
        let r = minimize_kh(&land, &[-1.0, 0.0], &[1.0, 0.0], &opts).unwrap();
        let straight = path_cost(&Path::straight(&[-1.0, 0.0], &[1.0, 0.0], 64), &land);
        assert!(r.cost < straight);
        // the detour leaves the axis
        assert!(r.path.nodes().any(|p| p[1].abs() > 0.1));
    }
}
