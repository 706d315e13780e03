//! Near-minimizers of discrete diffuse energies and recovery sequences.

mod flow;
mod profile;

use alloc::vec;
use alloc::vec::Vec;

pub use flow::{FlowOptions, FlowOutcome, Scheme};
pub use profile::TransitionProfile;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::field::{interface_segments, GridField, Region};
use crate::homogenize::Landscape;
use crate::math;
use crate::potential::Potential;
use flow::{run_flow, well_stiffness, Heterogeneous, Homogeneous};

/// Boundary data forcing a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// `u = a` on `x₁ = lo`, `u = b` on `x₁ = hi`, natural elsewhere.
    Dirichlet,
    /// Every boundary node holds the planar profile with normal angle `θ`
    /// (radians, measured from `e₁` towards `e₂`).
    Planar { angle: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialField {
    /// The planar profile through the box centre, normal matching the boundary data.
    Profile,
    Given(GridField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProblem {
    pub bounds: Bounds,
    /// Cells along axis 0; the other axes use the same spacing.
    pub cells: usize,
    pub eps: f64,
    pub delta: f64,
    pub boundary: Boundary,
    pub init: InitialField,
    pub profile: TransitionProfile,
}

impl TransitionProblem {
    pub fn spacing(&self) -> f64 {
        self.bounds.side(0) / self.cells as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !(self.delta > 0.0) {
            return Err(Error::invalid("scales", "eps and delta must be positive"));
        }
        if self.cells == 0 {
            return Err(Error::invalid("cells", "must be positive"));
        }
        if let Boundary::Planar { .. } = self.boundary {
            if self.bounds.dim() < 2 {
                return Err(Error::invalid("boundary", "planar boundary data needs at least two axes"));
            }
        }
        Ok(())
    }

    fn normal(&self) -> Vec<f64> {
        let mut nu = vec![0.0; self.bounds.dim()];
        match self.boundary {
            Boundary::Dirichlet => nu[0] = 1.0,
            Boundary::Planar { angle } => {
                nu[0] = math::cos(angle);
                nu[1] = math::sin(angle);
            }
        }
        nu
    }

    /// The planar profile through the box centre on this problem's grid.
    pub fn planar_field(&self) -> Result<GridField> {
        let counts = GridField::counts_for(&self.bounds, self.cells)?;
        let centre = self.bounds.center();
        let nu = self.normal();
        let delta = self.delta;
        let profile = &self.profile;
        GridField::from_fn(self.bounds.clone(), counts, profile.state_dim(), |x, out| {
            let mut s = 0.0;
            for k in 0..x.len() {
                s += (x[k] - centre[k]) * nu[k];
            }
            profile.eval(s / delta, out);
        })
    }

    /// Initial field with the boundary data imposed, and the fixed-node mask.
    pub fn initial_state(&self) -> Result<(GridField, Vec<bool>)> {
        self.validate()?;
        let planar = self.planar_field()?;
        let mut u = match &self.init {
            InitialField::Profile => planar.clone(),
            InitialField::Given(g) => {
                if !g.same_grid(&planar) {
                    return Err(Error::ShapeMismatch);
                }
                g.clone()
            }
        };
        let n = u.space_dim();
        let counts = u.counts().to_vec();
        let mut fixed = vec![false; u.node_count()];
        let mut idx = vec![0usize; n];
        let (a, b) = (self.profile.well_a().to_vec(), self.profile.well_b().to_vec());
        for node in 0..u.node_count() {
            u.multi_index(node, &mut idx);
            match self.boundary {
                Boundary::Dirichlet => {
                    if idx[0] == 0 {
                        fixed[node] = true;
                        u.value_mut(node).copy_from_slice(&a);
                    } else if idx[0] + 1 == counts[0] {
                        fixed[node] = true;
                        u.value_mut(node).copy_from_slice(&b);
                    }
                }
                Boundary::Planar { .. } => {
                    if (0..n).any(|k| idx[k] == 0 || idx[k] + 1 == counts[k]) {
                        fixed[node] = true;
                        let v = planar.value(node).to_vec();
                        u.value_mut(node).copy_from_slice(&v);
                    }
                }
            }
        }
        Ok((u, fixed))
    }
}

/// Minimize `F_{ε,δ}` under the problem's boundary data.
pub fn minimize_diffuse<P: Potential>(
    problem: &TransitionProblem,
    w: &P,
    opts: &FlowOptions,
) -> Result<FlowOutcome> {
    problem.validate()?;
    let h = problem.spacing();
    if !w.is_homogeneous() && h > 0.25 * problem.eps * (1.0 + 1e-12) {
        return Err(Error::UnderResolved {
            spacing: h,
            limit: 0.25 * problem.eps,
            what: "h <= eps/4",
        });
    }
    if h > problem.delta / 8.0 * (1.0 + 1e-12) {
        return Err(Error::UnderResolved {
            spacing: h,
            limit: problem.delta / 8.0,
            what: "h <= delta/8",
        });
    }
    let (u, fixed) = problem.initial_state()?;
    let density = Heterogeneous::new(w, problem.eps, u.space_dim());
    let wells = [problem.profile.well_a(), problem.profile.well_b()];
    let stiffness = well_stiffness(&density, problem.eps, u.space_dim(), &wells);
    run_flow(u, &fixed, problem.delta, stiffness, &density, opts)
}

/// Minimize the homogenized energy `F^H` under the problem's boundary data.
pub fn minimize_homogenized<L: Landscape>(
    problem: &TransitionProblem,
    hp: &L,
    opts: &FlowOptions,
) -> Result<FlowOutcome> {
    problem.validate()?;
    let h = problem.spacing();
    if h > problem.delta / 8.0 * (1.0 + 1e-12) {
        return Err(Error::UnderResolved {
            spacing: h,
            limit: problem.delta / 8.0,
            what: "h <= delta/8",
        });
    }
    let (u, fixed) = problem.initial_state()?;
    let density = Homogeneous(hp);
    let wells = [problem.profile.well_a(), problem.profile.well_b()];
    let stiffness = well_stiffness(&density, 1.0, u.space_dim(), &wells);
    run_flow(u, &fixed, problem.delta, stiffness, &density, opts)
}

/// Minimize the one-dimensional homogenized energy on `[−length/2, length/2]`
/// with `u = a` and `u = b` at the ends, on a grid with `h = δ/20`.
pub fn optimal_profile_1d<L: Landscape>(
    hp: &L,
    profile: &TransitionProfile,
    delta: f64,
    length: f64,
    tol: f64,
) -> Result<FlowOutcome> {
    if !(length > 0.0) {
        return Err(Error::invalid("length", "must be positive"));
    }
    let cells = libm::ceil(20.0 * length / delta) as usize;
    let problem = TransitionProblem {
        bounds: Bounds::new(vec![-0.5 * length], vec![0.5 * length])?,
        cells,
        eps: delta,
        delta,
        boundary: Boundary::Dirichlet,
        init: InitialField::Profile,
        profile: profile.clone(),
    };
    let opts = FlowOptions {
        tol,
        ..FlowOptions::default()
    };
    minimize_homogenized(&problem, hp, &opts)
}

/// `u_δ = g(σ(d_s/δ))` with `d_s` the signed distance to the interface of
/// `u_sharp` (positive on the `b` side), evaluated inside the collar only.
pub fn recovery_sequence(u_sharp: &GridField, delta: f64, profile: &TransitionProfile) -> Result<GridField> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    let (a, b) = (profile.well_a().to_vec(), profile.well_b().to_vec());
    let labels = crate::field::well_labels(u_sharp, &a, &b)?;
    let n = u_sharp.space_dim();
    if n > 2 {
        return Err(Error::invalid("u_sharp", "recovery sequences support at most two axes"));
    }
    let counts = u_sharp.counts().to_vec();
    let mut idx = vec![0usize; n];
    // the Dirichlet faces x₁ = lo, x₁ = hi must each carry one label
    let mut first: [Option<bool>; 2] = [None, None];
    for node in 0..u_sharp.node_count() {
        u_sharp.multi_index(node, &mut idx);
        for (side, at) in [(0usize, 0usize), (1, counts[0] - 1)] {
            if idx[0] == at {
                match first[side] {
                    None => first[side] = Some(labels[node]),
                    Some(l) if l != labels[node] => return Err(Error::InterfaceOnDirichletFace),
                    _ => {}
                }
            }
        }
    }

    let h = u_sharp.spacing();
    let collar = profile.collar() * delta;
    let mut dist = vec![f64::INFINITY; u_sharp.node_count()];
    let lo = u_sharp.bounds().lo().to_vec();
    let mut x = vec![0.0; n];
    if n == 1 {
        for i in 0..counts[0] - 1 {
            if labels[i] != labels[i + 1] {
                let p = lo[0] + h * (i as f64 + 0.5);
                for (node, dn) in dist.iter_mut().enumerate() {
                    let xn = lo[0] + h * node as f64;
                    *dn = dn.min((xn - p).abs());
                }
            }
        }
    } else {
        let segments = interface_segments(u_sharp, &a, &b)?;
        let reach = libm::ceil(collar / h) as isize + 1;
        for (p, q) in &segments {
            let cx = 0.5 * (p[0] + q[0]);
            let cy = 0.5 * (p[1] + q[1]);
            let ci = libm::round((cx - lo[0]) / h) as isize;
            let cj = libm::round((cy - lo[1]) / h) as isize;
            for i in (ci - reach).max(0)..=(ci + reach).min(counts[0] as isize - 1) {
                for j in (cj - reach).max(0)..=(cj + reach).min(counts[1] as isize - 1) {
                    x[0] = lo[0] + h * i as f64;
                    x[1] = lo[1] + h * j as f64;
                    let node = i as usize * counts[1] + j as usize;
                    let dseg = point_segment_distance(&x, p, q);
                    if dseg < dist[node] {
                        dist[node] = dseg;
                    }
                }
            }
        }
    }

    let mut out = u_sharp.clone();
    let mut val = vec![0.0; a.len()];
    for node in 0..out.node_count() {
        if dist[node] < collar {
            let signed = if labels[node] { dist[node] } else { -dist[node] };
            profile.eval(signed / delta, &mut val);
            out.value_mut(node).copy_from_slice(&val);
        }
    }
    Ok(out)
}

fn point_segment_distance(x: &[f64], p: &[f64; 2], q: &[f64; 2]) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let w = [x[0] - p[0], x[1] - p[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        ((w[0] * d[0] + w[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let e = [w[0] - t * d[0], w[1] - t * d[1]];
    math::sqrt(e[0] * e[0] + e[1] * e[1])
}

/// Region helper: a disc centred in the box.
pub fn centred_disc(bounds: &Bounds, radius: f64) -> Region {
    Region::Ball {
        center: bounds.center(),
        radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::Path;
    use crate::homogenize::HomogenizedPotential;
    use crate::potential::{BaseWell, Modulation, PotentialSpec};

    fn quartic() -> (PotentialSpec, TransitionProfile) {
        let spec = PotentialSpec::new(1, vec![-1.0], vec![1.0], BaseWell::QuarticScalar, Modulation::Constant(1.0))
            .unwrap();
        let hp = HomogenizedPotential::exact(&spec);
        let profile =
            TransitionProfile::new(&hp, &Path::straight(&[-1.0], &[1.0], 128), TransitionProfile::DEFAULT_COLLAR)
                .unwrap();
        (spec, profile)
    }

    #[test]
    fn one_dimensional_minimizer_reaches_the_closed_form() {
        let (spec, profile) = quartic();
        let delta = 0.02;
        let problem = TransitionProblem {
            bounds: Bounds::new(vec![-0.5], vec![0.5]).unwrap(),
            cells: 1000,
            eps: 1.0,
            delta,
            boundary: Boundary::Dirichlet,
            init: InitialField::Profile,
            profile,
        };
        let out = minimize_diffuse(&problem, &spec, &FlowOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.energy - 8.0 / 3.0).abs() < 0.01 * 8.0 / 3.0, "{}", out.energy);
        for w in out.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
    }

    #[test]
    fn fixed_nodes_never_move() {
        let (spec, profile) = quartic();
        let problem = TransitionProblem {
            bounds: Bounds::unit(2),
            cells: 32,
            eps: 1.0,
            delta: 0.25,
            boundary: Boundary::Planar { angle: 0.5 },
            init: InitialField::Profile,
            profile,
        };
        let (u0, fixed) = problem.initial_state().unwrap();
        let out = minimize_diffuse(&problem, &spec, &FlowOptions::default()).unwrap();
        for (node, &f) in fixed.iter().enumerate() {
            if f {
                assert_eq!(u0.value(node), out.field.value(node));
            }
        }
    }
}
