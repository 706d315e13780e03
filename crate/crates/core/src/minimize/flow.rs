use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{advance_counts, corner_offsets, GridField};
use crate::homogenize::Landscape;
use crate::math::{self, Sum};
use crate::potential::Potential;

/// Energy density `f(x, u)` of a diffuse functional.
pub(crate) trait Density {
    fn value(&self, x: &[f64], u: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], u: &[f64], out: &mut [f64]);
    fn value_gradient(&self, x: &[f64], u: &[f64], out: &mut [f64]) -> f64 {
        self.gradient(x, u, out);
        self.value(x, u)
    }
}

/// `W(x/ε, u)`.
pub(crate) struct Heterogeneous<'a, P> {
    pub w: &'a P,
    pub inv_eps: f64,
}

impl<'a, P: Potential> Heterogeneous<'a, P> {
    pub fn new(w: &'a P, eps: f64, space_dim: usize) -> Self {
        debug_assert!(space_dim <= 3);
        Self { w, inv_eps: 1.0 / eps }
    }
}

impl<P: Potential> Density for Heterogeneous<'_, P> {
    #[inline]
    fn value(&self, x: &[f64], u: &[f64]) -> f64 {
        let mut y = [0.0; 3];
        for k in 0..x.len() {
            y[k] = x[k] * self.inv_eps;
        }
        let y = &y[..x.len()];
        self.w.value(y, u)
    }
    #[inline]
    fn gradient(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let mut y = [0.0; 3];
        for k in 0..x.len() {
            y[k] = x[k] * self.inv_eps;
        }
        let y = &y[..x.len()];
        self.w.gradient(y, u, out)
    }
    #[inline]
    fn value_gradient(&self, x: &[f64], u: &[f64], out: &mut [f64]) -> f64 {
        let mut y = [0.0; 3];
        for k in 0..x.len() {
            y[k] = x[k] * self.inv_eps;
        }
        let y = &y[..x.len()];
        self.w.value_gradient(y, u, out)
    }
}

/// `W_H(u)`.
pub(crate) struct Homogeneous<'a, L>(pub &'a L);

impl<L: Landscape> Density for Homogeneous<'_, L> {
    #[inline]
    fn value(&self, _: &[f64], u: &[f64]) -> f64 {
        self.0.value(u)
    }
    #[inline]
    fn gradient(&self, _: &[f64], u: &[f64], out: &mut [f64]) {
        self.0.gradient(u, out)
    }
}

/// Period-averaged curvature of the density at the wells, largest over wells and state axes.
pub(crate) fn well_stiffness<D: Density>(density: &D, period: f64, space_dim: usize, wells: &[&[f64]]) -> f64 {
    const SUB: usize = 4;
    let d = wells.first().map_or(0, |w| w.len());
    let mut x = vec![0.0; space_dim];
    let mut idx = vec![0usize; space_dim];
    let counts = vec![SUB; space_dim];
    let mut p = vec![0.0; d];
    let (mut gp, mut gm) = (vec![0.0; d], vec![0.0; d]);
    let mut best: f64 = 0.0;
    for well in wells {
        for j in 0..d {
            let eta = 1e-4 * (1.0 + well[j].abs());
            let mut sum = 0.0;
            let mut count = 0usize;
            idx.iter_mut().for_each(|i| *i = 0);
            loop {
                for k in 0..space_dim {
                    x[k] = period * (idx[k] as f64 + 0.5) / SUB as f64;
                }
                p.copy_from_slice(well);
                p[j] += eta;
                density.gradient(&x, &p, &mut gp);
                p[j] -= 2.0 * eta;
                density.gradient(&x, &p, &mut gm);
                sum += (gp[j] - gm[j]) / (2.0 * eta);
                count += 1;
                if !advance_counts(&mut idx, &counts) {
                    break;
                }
            }
            best = best.max(sum / count as f64);
        }
    }
    if best.is_finite() && best > 0.0 {
        best
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Limited-memory quasi-Newton descent with an Armijo line search; the
    /// semi-implicit step operator at `τ = δ/S` seeds the inverse Hessian.
    QuasiNewton,
    /// Explicit potential force, diffusion preconditioned by per-axis implicit solves.
    SemiImplicit,
    /// Fully explicit with `τ ≤ h²/(4δ)`.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub scheme: Scheme,
    /// Stop once the `L²` gradient-flow rate `|dE/dt| / E` falls below this.
    pub tol: f64,
    pub max_steps: usize,
    /// Initial step as a multiple of `δ`; `None` picks a scheme default.
    pub initial_step: Option<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::QuasiNewton,
            tol: 1e-9,
            max_steps: 20_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutcome {
    pub field: GridField,
    pub energy: f64,
    pub steps: usize,
    pub rejected: usize,
    pub converged: bool,
    /// Energy after every accepted step, starting with the initial energy.
    pub history: Vec<f64>,
    /// Final `|dE/dt| / E` of the `L²` gradient flow.
    pub residual: f64,
}

/// Discrete energy and, optionally, its gradient with respect to every node.
pub(crate) fn energy_and_gradient<D: Density>(
    u: &GridField,
    delta: f64,
    density: &D,
    mut grad_out: Option<&mut [f64]>,
) -> f64 {
    match (u.space_dim(), u.state_dim()) {
        (1, 1) => return scalar_energy::<1, 2, D>(u, delta, density, grad_out),
        (2, 1) => return scalar_energy::<2, 4, D>(u, delta, density, grad_out),
        (3, 1) => return scalar_energy::<3, 8, D>(u, delta, density, grad_out),
        _ => {}
    }
    let n = u.space_dim();
    let d = u.state_dim();
    let h = u.spacing();
    let vol = math::powi(h, n as i32);
    let corners = corner_offsets(u);
    let nc = corners.len();
    let inv_nc = 1.0 / nc as f64;
    let diff_scale = 1.0 / ((1usize << (n - 1)) as f64 * h);
    let signs: Vec<f64> = (0..nc * n)
        .map(|i| {
            let (c, k) = (i / n, i % n);
            if (c >> (n - 1 - k)) & 1 == 1 {
                diff_scale
            } else {
                -diff_scale
            }
        })
        .collect();
    let lo = u.bounds().lo().to_vec();
    let strides = u.strides();
    let values = u.values();
    if let Some(g) = grad_out.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let cells: Vec<usize> = u.counts().iter().map(|c| c - 1).collect();
    let last = n - 1;
    let mut outer = cells.clone();
    outer[last] = 1;
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut mean = vec![0.0; d];
    let mut dw = vec![0.0; d];
    let mut grad = vec![0.0; n * d];
    let (mut pot, mut kin) = (Sum::new(), Sum::new());
    let pot_scale = vol / delta;
    let kin_twice = 2.0 * delta * vol;
    loop {
        let mut base0 = 0;
        for k in 0..last {
            x[k] = lo[k] + h * (idx[k] as f64 + 0.5);
            base0 += idx[k] * strides[k];
        }
        for i in 0..cells[last] {
            x[last] = lo[last] + h * (i as f64 + 0.5);
            let base = base0 + i * strides[last];
            mean.iter_mut().for_each(|v| *v = 0.0);
            grad.iter_mut().for_each(|v| *v = 0.0);
            for (c, &off) in corners.iter().enumerate() {
                let val = &values[(base + off) * d..(base + off + 1) * d];
                let sc = &signs[c * n..(c + 1) * n];
                for j in 0..d {
                    let v = val[j];
                    mean[j] += v;
                    for k in 0..n {
                        grad[k * d + j] += sc[k] * v;
                    }
                }
            }
            mean.iter_mut().for_each(|v| *v *= inv_nc);
            kin.add(grad.iter().map(|g| g * g).sum::<f64>());
            match grad_out.as_deref_mut() {
                None => pot.add(density.value(&x, &mean)),
                Some(out) => {
                    pot.add(density.value_gradient(&x, &mean, &mut dw));
                    for j in 0..d {
                        dw[j] *= pot_scale * inv_nc;
                    }
                    for k in 0..n * d {
                        grad[k] *= kin_twice;
                    }
                    for (c, &off) in corners.iter().enumerate() {
                        let sc = &signs[c * n..(c + 1) * n];
                        let slot = &mut out[(base + off) * d..(base + off + 1) * d];
                        for j in 0..d {
                            let mut acc = dw[j];
                            for k in 0..n {
                                acc += grad[k * d + j] * sc[k];
                            }
                            slot[j] += acc;
                        }
                    }
                }
            }
        }
        if !advance_counts(&mut idx, &outer) {
            break;
        }
    }
    pot.value() * pot_scale + kin.value() * (delta * vol)
}

/// [`energy_and_gradient`] for scalar fields with `N` axes and `C = 2^N` corners.
fn scalar_energy<const N: usize, const C: usize, D: Density>(
    u: &GridField,
    delta: f64,
    density: &D,
    mut grad_out: Option<&mut [f64]>,
) -> f64 {
    let h = u.spacing();
    let vol = math::powi(h, N as i32);
    let offsets = corner_offsets(u);
    let mut corners = [0usize; C];
    corners.copy_from_slice(&offsets);
    let inv_nc = 1.0 / C as f64;
    let diff_scale = 1.0 / ((1usize << (N - 1)) as f64 * h);
    let mut signs = [[0.0; N]; C];
    for (c, row) in signs.iter_mut().enumerate() {
        for (k, s) in row.iter_mut().enumerate() {
            *s = if (c >> (N - 1 - k)) & 1 == 1 { diff_scale } else { -diff_scale };
        }
    }
    let lo = u.bounds().lo().to_vec();
    let strides = u.strides();
    let values = u.values();
    if let Some(g) = grad_out.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let cells: Vec<usize> = u.counts().iter().map(|c| c - 1).collect();
    let last = N - 1;
    let mut outer = cells.clone();
    outer[last] = 1;
    let mut idx = [0usize; N];
    let mut x = [0.0; N];
    let mut dw = [0.0];
    let (mut pot, mut kin) = (Sum::new(), Sum::new());
    let pot_scale = vol / delta;
    let kin_twice = 2.0 * delta * vol;
    loop {
        let mut base0 = 0;
        for k in 0..last {
            x[k] = lo[k] + h * (idx[k] as f64 + 0.5);
            base0 += idx[k] * strides[k];
        }
        for i in 0..cells[last] {
            x[last] = lo[last] + h * (i as f64 + 0.5);
            let base = base0 + i;
            let mut mean = 0.0;
            let mut grad = [0.0; N];
            for c in 0..C {
                let v = values[base + corners[c]];
                mean += v;
                for k in 0..N {
                    grad[k] += signs[c][k] * v;
                }
            }
            mean *= inv_nc;
            let mut g2 = 0.0;
            for g in &grad {
                g2 += g * g;
            }
            kin.add(g2);
            match grad_out.as_deref_mut() {
                None => pot.add(density.value(&x, core::slice::from_ref(&mean))),
                Some(out) => {
                    pot.add(density.value_gradient(&x, core::slice::from_ref(&mean), &mut dw));
                    let pw = dw[0] * pot_scale * inv_nc;
                    for g in grad.iter_mut() {
                        *g *= kin_twice;
                    }
                    for c in 0..C {
                        let mut acc = pw;
                        for k in 0..N {
                            acc += grad[k] * signs[c][k];
                        }
                        out[base + corners[c]] += acc;
                    }
                }
            }
        }
        if !advance_counts(&mut idx, &outer) {
            break;
        }
    }
    pot.value() * pot_scale + kin.value() * (delta * vol)
}

/// `Σ_free |∂E/∂u_i|² / h^N`, the energy decrease rate of the lumped `L²` flow.
fn l2_rate(grad: &[f64], fixed: &[bool], d: usize, vol: f64) -> f64 {
    let mut sum = Sum::new();
    for (node, f) in fixed.iter().enumerate() {
        if !f {
            for g in &grad[node * d..(node + 1) * d] {
                sum.add(g * g);
            }
        }
    }
    sum.value() / vol
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0; 4];
    let (ca, ra) = a.as_chunks::<4>();
    let (cb, rb) = b.as_chunks::<4>();
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    for (x, y) in ca.iter().zip(cb) {
        for l in 0..4 {
            lanes[l] += x[l] * y[l];
        }
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// Energy descent from `u` with the fixed nodes held. `stiffness` is the
/// curvature `S` of the density at the wells.
pub(crate) fn run_flow<D: Density>(
    u: GridField,
    fixed: &[bool],
    delta: f64,
    stiffness: f64,
    density: &D,
    opts: &FlowOptions,
) -> Result<FlowOutcome> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    match opts.scheme {
        Scheme::QuasiNewton => quasi_newton(u, fixed, delta, stiffness, density, opts),
        _ => stepping(u, fixed, delta, density, opts),
    }
}

fn trivial(u: &GridField, fixed: &[bool], energy: f64) -> bool {
    energy == 0.0 || fixed.iter().all(|f| *f) || u.node_count() == 0
}

const MEMORY: usize = 8;

fn quasi_newton<D: Density>(
    mut u: GridField,
    fixed: &[bool],
    delta: f64,
    stiffness: f64,
    density: &D,
    opts: &FlowOptions,
) -> Result<FlowOutcome> {
    let n = u.space_dim();
    let d = u.state_dim();
    let h = u.spacing();
    let vol = math::powi(h, n as i32);
    let len = u.values().len();
    let tau = match opts.initial_step {
        Some(s) => s * delta,
        None => delta / stiffness.max(1e-6),
    };
    let adi = Adi::new(&u, fixed, 2.0 * delta * tau / (h * h));

    let mut grad = vec![0.0; len];
    let mut energy = energy_and_gradient(&u, delta, density, Some(&mut grad));
    let mut history = vec![energy];
    let mut residual = l2_rate(&grad, fixed, d, vol) / energy.abs().max(f64::MIN_POSITIVE);
    if trivial(&u, fixed, energy) {
        return Ok(FlowOutcome {
            field: u,
            energy,
            steps: 0,
            rejected: 0,
            converged: true,
            history,
            residual: 0.0,
        });
    }

    let mask = |v: &mut [f64]| {
        for (node, f) in fixed.iter().enumerate() {
            if *f {
                v[node * d..(node + 1) * d].iter_mut().for_each(|x| *x = 0.0);
            }
        }
    };
    mask(&mut grad);
    let mut trial = u.clone();
    let mut trial_grad = vec![0.0; len];
    let mut dir = vec![0.0; len];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut spare: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut alpha_buf = [0.0; MEMORY];
    let (mut steps, mut rejected) = (0, 0);
    let mut converged = false;

    while steps < opts.max_steps {
        if residual <= opts.tol {
            converged = true;
            break;
        }
        // two-loop recursion with H₀ = τ·A⁻¹/h^N
        dir.copy_from_slice(&grad);
        let m = s_hist.len();
        for i in (0..m).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &dir);
            alpha_buf[i] = a;
            for (q, y) in dir.iter_mut().zip(&y_hist[i]) {
                *q -= a * y;
            }
        }
        adi.apply(&mut dir, d);
        let scale = tau / vol;
        dir.iter_mut().for_each(|v| *v *= scale);
        for i in 0..m {
            let b = rho_hist[i] * dot(&y_hist[i], &dir);
            for (r, s) in dir.iter_mut().zip(&s_hist[i]) {
                *r += (alpha_buf[i] - b) * s;
            }
        }
        dir.iter_mut().for_each(|v| *v = -*v);
        mask(&mut dir);
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            spare.extend(s_hist.drain(..).zip(y_hist.drain(..)));
            rho_hist.clear();
            dir.copy_from_slice(&grad);
            adi.apply(&mut dir, d);
            dir.iter_mut().for_each(|v| *v *= -tau / vol);
            mask(&mut dir);
            slope = dot(&grad, &dir);
            if !(slope < 0.0) {
                converged = true;
                break;
            }
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for ((t, &v), &x) in trial.values_mut().iter_mut().zip(&dir).zip(u.values()) {
                *t = x + step * v;
            }
            let e_trial = energy_and_gradient(&trial, delta, density, Some(&mut trial_grad));
            if e_trial <= energy + 1e-4 * step * slope && e_trial < energy {
                accepted = true;
                mask(&mut trial_grad);
                let (mut s, mut y) = if s_hist.len() == MEMORY {
                    rho_hist.remove(0);
                    (s_hist.remove(0), y_hist.remove(0))
                } else {
                    spare.pop().unwrap_or_else(|| (vec![0.0; len], vec![0.0; len]))
                };
                for ((o, a), b) in s.iter_mut().zip(trial.values()).zip(u.values()) {
                    *o = a - b;
                }
                for ((o, a), b) in y.iter_mut().zip(&trial_grad).zip(&grad) {
                    *o = a - b;
                }
                let sy = dot(&s, &y);
                if sy > 1e-300 && sy > 1e-12 * math::sqrt(dot(&s, &s) * dot(&y, &y)) {
                    s_hist.push(s);
                    y_hist.push(y);
                    rho_hist.push(1.0 / sy);
                } else {
                    spare.push((s, y));
                }
                core::mem::swap(&mut u, &mut trial);
                core::mem::swap(&mut grad, &mut trial_grad);
                energy = e_trial;
                history.push(energy);
                steps += 1;
                residual = l2_rate(&grad, fixed, d, vol) / energy.abs().max(f64::MIN_POSITIVE);
                break;
            }
            rejected += 1;
            step *= 0.5;
        }
        if !accepted {
            if s_hist.is_empty() {
                // no descent left at round-off level
                if residual <= 1e3 * opts.tol {
                    converged = true;
                    break;
                }
                return Err(Error::StepUnderflow { steps });
            }
            spare.extend(s_hist.drain(..).zip(y_hist.drain(..)));
            rho_hist.clear();
        }
    }

    Ok(FlowOutcome {
        field: u,
        energy,
        steps,
        rejected,
        converged,
        history,
        residual,
    })
}

/// Gradient flow with step-size control.
fn stepping<D: Density>(
    mut u: GridField,
    fixed: &[bool],
    delta: f64,
    density: &D,
    opts: &FlowOptions,
) -> Result<FlowOutcome> {
    let n = u.space_dim();
    let d = u.state_dim();
    let h = u.spacing();
    let vol = math::powi(h, n as i32);
    let len = u.values().len();
    let mut grad = vec![0.0; len];
    let mut dir = vec![0.0; len];
    let mut trial = u.clone();

    let explicit_cap = h * h / (4.0 * delta);
    let mut tau = match (opts.scheme, opts.initial_step) {
        (_, Some(s)) => s * delta,
        (Scheme::Explicit, None) => explicit_cap,
        (_, None) => delta / 16.0,
    };
    if opts.scheme == Scheme::Explicit {
        tau = tau.min(explicit_cap);
    }
    let tau_max = match opts.scheme {
        Scheme::Explicit => explicit_cap,
        _ => 64.0 * delta,
    };
    let tau_min = 1e-14 * tau;

    let mut energy = energy_and_gradient(&u, delta, density, Some(&mut grad));
    let mut history = vec![energy];
    let mut steps = 0;
    let mut rejected = 0;
    if trivial(&u, fixed, energy) {
        return Ok(FlowOutcome {
            field: u,
            energy,
            steps,
            rejected,
            converged: true,
            history,
            residual: 0.0,
        });
    }

    let mut converged = false;
    let mut residual = l2_rate(&grad, fixed, d, vol) / energy.abs();
    while steps < opts.max_steps {
        if residual <= opts.tol {
            converged = true;
            break;
        }
        for node in 0..fixed.len() {
            for j in 0..d {
                let i = node * d + j;
                dir[i] = if fixed[node] { 0.0 } else { -grad[i] / vol };
            }
        }
        if opts.scheme == Scheme::SemiImplicit {
            Adi::new(&u, fixed, 2.0 * delta * tau / (h * h)).apply(&mut dir, d);
        }
        for ((t, &v), &s) in trial.values_mut().iter_mut().zip(&dir).zip(u.values()) {
            *t = s + tau * v;
        }
        let e_trial = energy_and_gradient(&trial, delta, density, None);
        if e_trial <= energy + 1e-12 * energy.abs() {
            core::mem::swap(&mut u, &mut trial);
            energy = energy_and_gradient(&u, delta, density, Some(&mut grad));
            history.push(energy);
            steps += 1;
            residual = l2_rate(&grad, fixed, d, vol) / energy.abs().max(f64::MIN_POSITIVE);
            tau = (1.5 * tau).min(tau_max);
        } else {
            rejected += 1;
            tau *= 0.5;
            if tau < tau_min {
                return Err(Error::StepUnderflow { steps });
            }
        }
    }

    Ok(FlowOutcome {
        field: u,
        energy,
        steps,
        rejected,
        converged,
        history,
        residual,
    })
}

/// `Π_k (I − c·D_kk)⁻¹` restricted to free nodes, `D_kk` the second difference
/// along axis `k` with Neumann ends. Factored once, applied by slab-wise sweeps.
struct Adi {
    axes: Vec<AxisFactor>,
    counts: Vec<usize>,
    strides: Vec<usize>,
}

struct AxisFactor {
    lower: Vec<f64>,
    inv_denom: Vec<f64>,
    upper: Vec<f64>,
}

impl Adi {
    fn new(u: &GridField, fixed: &[bool], c: f64) -> Self {
        let n = u.space_dim();
        let counts = u.counts().to_vec();
        let strides = u.strides();
        let nodes = u.node_count();
        let off = -c;
        let mut axes = Vec::with_capacity(n);
        for axis in 0..n {
            let len = counts[axis];
            let stride = strides[axis];
            let mut f = AxisFactor {
                lower: vec![0.0; nodes],
                inv_denom: vec![1.0; nodes],
                upper: vec![0.0; nodes],
            };
            let block = len * stride;
            for start in (0..nodes).step_by(block) {
                for q in 0..stride {
                    let line = start + q;
                    let mut prev_cp: Option<f64> = None;
                    for p in 0..len {
                        let node = line + p * stride;
                        if fixed[node] {
                            prev_cp = None;
                            continue;
                        }
                        let mut diag = 1.0 + 2.0 * c;
                        if p == 0 {
                            diag -= c;
                        }
                        if p + 1 == len {
                            diag -= c;
                        }
                        let denom = match prev_cp {
                            Some(cp) => {
                                f.lower[node] = off;
                                diag - off * cp
                            }
                            None => diag,
                        };
                        f.inv_denom[node] = 1.0 / denom;
                        let coupled = p + 1 < len && !fixed[node + stride];
                        let cp = off / denom;
                        f.upper[node] = if coupled { cp } else { 0.0 };
                        prev_cp = Some(cp);
                    }
                }
            }
            axes.push(f);
        }
        Self { axes, counts, strides }
    }

    fn apply(&self, v: &mut [f64], d: usize) {
        for (axis, f) in self.axes.iter().enumerate() {
            let len = self.counts[axis];
            let stride = self.strides[axis];
            let block = len * stride;
            let nodes = f.lower.len();
            if d == 1 {
                for start in (0..nodes).step_by(block) {
                    sweep_scalar(&mut v[start..start + block], stride, len, f, start);
                }
                continue;
            }
            for start in (0..nodes).step_by(block) {
                for q in start..start + stride {
                    let i = q;
                    for j in 0..d {
                        v[i * d + j] *= f.inv_denom[i];
                    }
                }
                for p in 1..len {
                    let row = start + p * stride;
                    for i in row..row + stride {
                        let l = f.lower[i];
                        let inv = f.inv_denom[i];
                        for j in 0..d {
                            v[i * d + j] = (v[i * d + j] - l * v[(i - stride) * d + j]) * inv;
                        }
                    }
                }
                for p in (0..len - 1).rev() {
                    let row = start + p * stride;
                    for i in row..row + stride {
                        let cp = f.upper[i];
                        for j in 0..d {
                            v[i * d + j] -= cp * v[(i + stride) * d + j];
                        }
                    }
                }
            }
        }
    }
}

fn sweep_scalar(v: &mut [f64], stride: usize, len: usize, f: &AxisFactor, offset: usize) {
    fn coeff(a: &[f64], offset: usize, stride: usize, p: usize) -> &[f64] {
        &a[offset + p * stride..offset + (p + 1) * stride]
    }
    for (x, inv) in v[..stride].iter_mut().zip(coeff(&f.inv_denom, offset, stride, 0)) {
        *x *= inv;
    }
    for p in 1..len {
        let (head, tail) = v.split_at_mut(p * stride);
        let prev = &head[(p - 1) * stride..];
        let cur = &mut tail[..stride];
        for (((x, &y), &l), &inv) in cur.iter_mut().zip(prev).zip(coeff(&f.lower, offset, stride, p)).zip(coeff(&f.inv_denom, offset, stride, p)) {
            *x = (*x - l * y) * inv;
        }
    }
    for p in (0..len - 1).rev() {
        let (head, tail) = v.split_at_mut((p + 1) * stride);
        let cur = &mut head[p * stride..];
        let next = &tail[..stride];
        for ((x, &y), &cp) in cur.iter_mut().zip(next).zip(coeff(&f.upper, offset, stride, p)) {
            *x -= cp * y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Bounds;

    #[test]
    fn adi_inverts_the_line_operator() {
        // five nodes on a line, node 2 fixed: two decoupled Neumann/free runs
        let u = GridField::constant(Bounds::new(vec![0.0], vec![4.0]).unwrap(), vec![5], &[0.0]).unwrap();
        let fixed = [false, false, true, false, false];
        let c = 0.7;
        let adi = Adi::new(&u, &fixed, c);
        let rhs = [1.0, -2.0, 0.0, 3.0, 0.5];
        let mut x = rhs;
        adi.apply(&mut x, 1);
        // run [0, 1]: rows (1+c)x0 − c x1, −c x0 + (1+2c) x1 (node 2 is a fixed neighbour)
        let back0 = (1.0 + c) * x[0] - c * x[1];
        let back1 = -c * x[0] + (1.0 + 2.0 * c) * x[1];
        let back3 = (1.0 + 2.0 * c) * x[3] - c * x[4];
        let back4 = -c * x[3] + (1.0 + c) * x[4];
        for (b, want) in [back0, back1, back3, back4].iter().zip([rhs[0], rhs[1], rhs[3], rhs[4]]) {
            assert!((b - want).abs() < 1e-14);
        }
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn adi_factors_along_each_axis() {
        let u = GridField::constant(Bounds::new(vec![0.0, 0.0], vec![2.0, 3.0]).unwrap(), vec![3, 4], &[0.0]).unwrap();
        let fixed = vec![false; 12];
        let c = 0.3;
        let adi = Adi::new(&u, &fixed, c);
        let rhs: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = rhs.clone();
        adi.apply(&mut x, 1);
        // apply (I − c D₁)(I − c D₀) back
        let line = |v: &[f64], stride: usize, len: usize, start: usize, out: &mut Vec<f64>| {
            for p in 0..len {
                let i = start + p * stride;
                let mut acc = v[i];
                if p > 0 {
                    acc += c * (v[i] - v[i - stride]);
                }
                if p + 1 < len {
                    acc += c * (v[i] - v[i + stride]);
                }
                out[i] = acc;
            }
        };
        let mut y = vec![0.0; 12];
        for q in 0..3 {
            line(&x, 1, 4, 4 * q, &mut y);
        }
        let mut z = vec![0.0; 12];
        for q in 0..4 {
            line(&y, 4, 3, q, &mut z);
        }
        for (a, b) in z.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
