use alloc::vec;
use alloc::vec::Vec;

use super::grid::{for_each_cell, GridField, Region};
use crate::error::{Error, Result};
use crate::homogenize::Landscape;
use crate::math::{self, Sum};
use crate::potential::Potential;

/// The two terms of a diffuse energy and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffuseEnergy {
    /// `(1/δ)∫W`.
    pub potential: f64,
    /// `δ∫|∇u|²`.
    pub gradient: f64,
    pub total: f64,
}

impl DiffuseEnergy {
    fn new(potential: f64, gradient: f64) -> Self {
        Self {
            potential,
            gradient,
            total: potential + gradient,
        }
    }
}

/// Corner offsets (in nodes) of a grid cell, ordered by their bit pattern.
pub(crate) fn corner_offsets(u: &GridField) -> Vec<usize> {
    let n = u.space_dim();
    let strides = u.strides();
    (0..1usize << n)
        .map(|c| (0..n).filter(|&k| (c >> (n - 1 - k)) & 1 == 1).map(|k| strides[k]).sum())
        .collect()
}

/// Visit every cell midpoint with the corner-averaged value and `|∇u|²` there.
pub(crate) fn visit_cells<F: FnMut(&[f64], &[f64], f64)>(u: &GridField, region: &Region, mut f: F) {
    let n = u.space_dim();
    let d = u.state_dim();
    let h = u.spacing();
    let corners = corner_offsets(u);
    let inv_corners = 1.0 / corners.len() as f64;
    let diff_scale = 1.0 / ((1usize << (n - 1)) as f64 * h);
    let lo = u.bounds().lo().to_vec();
    let values = u.values();
    let mut x = vec![0.0; n];
    let mut mean = vec![0.0; d];
    let mut grad = vec![0.0; n * d];
    for_each_cell(u.counts(), |idx| {
        for k in 0..n {
            x[k] = lo[k] + h * (idx[k] as f64 + 0.5);
        }
        if !region.contains(&x) {
            return;
        }
        let base = u.flat(idx);
        mean.iter_mut().for_each(|v| *v = 0.0);
        grad.iter_mut().for_each(|v| *v = 0.0);
        for (c, &off) in corners.iter().enumerate() {
            let node = base + off;
            let val = &values[node * d..(node + 1) * d];
            for j in 0..d {
                mean[j] += val[j];
            }
            for k in 0..n {
                let sign = if (c >> (n - 1 - k)) & 1 == 1 { 1.0 } else { -1.0 };
                for j in 0..d {
                    grad[k * d + j] += sign * val[j];
                }
            }
        }
        for v in mean.iter_mut() {
            *v *= inv_corners;
        }
        let mut g2 = 0.0;
        for g in grad.iter() {
            let s = g * diff_scale;
            g2 += s * s;
        }
        f(&x, &mean, g2);
    });
}

fn check_resolution<P: Potential>(u: &GridField, eps: f64, w: &P) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let limit = 0.25 * eps;
    if !w.is_homogeneous() && u.spacing() > limit * (1.0 + 1e-12) {
        return Err(Error::UnderResolved {
            spacing: u.spacing(),
            limit,
            what: "h <= eps/4",
        });
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("delta", "must be positive and finite"))
    }
}

/// `F_{ε,δ}(u) = (1/δ)∫W(x/ε, u) + δ∫|∇u|²` by cell-midpoint quadrature.
pub fn diffuse_energy<P: Potential>(u: &GridField, eps: f64, delta: f64, w: &P) -> Result<DiffuseEnergy> {
    diffuse_energy_in(u, eps, delta, w, &Region::Full)
}

/// [`diffuse_energy`] over the cells whose midpoint lies in `region`.
pub fn diffuse_energy_in<P: Potential>(
    u: &GridField,
    eps: f64,
    delta: f64,
    w: &P,
    region: &Region,
) -> Result<DiffuseEnergy> {
    check_resolution(u, eps, w)?;
    check_delta(delta)?;
    if w.state_dim() != u.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: u.state_dim(),
            got: w.state_dim(),
        });
    }
    let vol = math::powi(u.spacing(), u.space_dim() as i32);
    let mut y = vec![0.0; u.space_dim()];
    let (mut pot, mut grad) = (Sum::new(), Sum::new());
    visit_cells(u, region, |x, m, g2| {
        for k in 0..x.len() {
            y[k] = x[k] / eps;
        }
        pot.add(w.value(&y, m));
        grad.add(g2);
    });
    Ok(DiffuseEnergy::new(pot.value() * vol / delta, delta * grad.value() * vol))
}

/// `F^H(u) = (1/δ)∫W_H(u) + δ∫|∇u|²`.
pub fn homogenized_energy<L: Landscape>(u: &GridField, delta: f64, hp: &L) -> Result<DiffuseEnergy> {
    homogenized_energy_in(u, delta, hp, &Region::Full)
}

pub fn homogenized_energy_in<L: Landscape>(
    u: &GridField,
    delta: f64,
    hp: &L,
    region: &Region,
) -> Result<DiffuseEnergy> {
    check_delta(delta)?;
    if hp.state_dim() != u.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: u.state_dim(),
            got: hp.state_dim(),
        });
    }
    let vol = math::powi(u.spacing(), u.space_dim() as i32);
    let (mut pot, mut grad) = (Sum::new(), Sum::new());
    visit_cells(u, region, |_, m, g2| {
        pot.add(hp.value(m));
        grad.add(g2);
    });
    Ok(DiffuseEnergy::new(pot.value() * vol / delta, delta * grad.value() * vol))
}

/// `|(1/δ)∫[W̃(x/ε, u) − W̃_H(u)]|`.
pub fn discrepancy<P: Potential, L: Landscape>(
    u: &GridField,
    eps: f64,
    delta: f64,
    w: &P,
    hp: &L,
) -> Result<f64> {
    check_resolution(u, eps, w)?;
    check_delta(delta)?;
    let vol = math::powi(u.spacing(), u.space_dim() as i32);
    let mut y = vec![0.0; u.space_dim()];
    let mut sum = Sum::new();
    visit_cells(u, &Region::Full, |x, m, _| {
        for k in 0..x.len() {
            y[k] = x[k] / eps;
        }
        sum.add(w.value(&y, m) - hp.value(m));
    });
    Ok((sum.value() * vol / delta).abs())
}

/// `δ∫|∇u|²`.
pub fn dirichlet_budget(u: &GridField, delta: f64) -> f64 {
    let vol = math::powi(u.spacing(), u.space_dim() as i32);
    let mut sum = Sum::new();
    visit_cells(u, &Region::Full, |_, _, g2| sum.add(g2));
    delta * sum.value() * vol
}

/// `L¹` Poincaré constant of a convex `N`-dimensional unit cube scaled to side one.
pub fn default_poincare_constant(space_dim: usize) -> f64 {
    0.5 * math::sqrt(space_dim as f64)
}

/// `2·C̃·L·(ε/δ^{3/2})·√T·|Ω|^{1/2}` with `T = δ∫|∇u|²` taken from `u`.
pub fn poincare_bound(u: &GridField, eps: f64, delta: f64, lipschitz: f64, c_poincare: f64) -> f64 {
    let t = dirichlet_budget(u, delta);
    poincare_bound_from_budget(eps, delta, lipschitz, c_poincare, t, u.bounds().volume())
}

pub fn poincare_bound_from_budget(
    eps: f64,
    delta: f64,
    lipschitz: f64,
    c_poincare: f64,
    budget: f64,
    volume: f64,
) -> f64 {
    2.0 * c_poincare * lipschitz * (eps / (delta * math::sqrt(delta))) * math::sqrt(budget.max(0.0))
        * math::sqrt(volume)
}

/// `C·ε·M/δ`: the cells where `x/ε` does not complete a period.
pub fn boundary_term(eps: f64, delta: f64, cap: f64, c_boundary: f64) -> f64 {
    c_boundary * eps * cap / delta
}
