//! Periodic double-well potentials `W(y, p) = c·m(y)·W₀(p)`.
//!
//! `y` is a point in cell coordinates (the modulation has period one in every
//! axis) and `p` is a state value. The family is deliberately multiplicative:
//! the zero set, growth and local Lipschitz bounds of `W` are inherited from
//! the base well once the modulation is bounded away from zero.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::math::{self, powi};

/// Spatially periodic energy density evaluated in cell coordinates.
pub trait Potential {
    /// Dimension of the state space.
    fn state_dim(&self) -> usize;

    fn value(&self, y: &[f64], p: &[f64]) -> f64;

    /// Gradient with respect to `p`, written into `out`.
    fn gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]);

    /// Value and gradient together.
    fn value_gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]) -> f64 {
        self.gradient(y, p, out);
        self.value(y, p)
    }

    /// `true` when `value` ignores `y`.
    fn is_homogeneous(&self) -> bool {
        false
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn value(&self, y: &[f64], p: &[f64]) -> f64 {
        (**self).value(y, p)
    }
    fn gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]) {
        (**self).gradient(y, p, out)
    }
    fn value_gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]) -> f64 {
        (**self).value_gradient(y, p, out)
    }
    fn is_homogeneous(&self) -> bool {
        (**self).is_homogeneous()
    }
}

/// Registry of base wells `W₀` vanishing exactly at `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseWell {
    /// `(p − a)²(p − b)²`, scalar states only.
    QuarticScalar,
    /// With `c = (a+b)/2`, `r = |b−a|/2`, `s` the coordinate of `p − c` along
    /// `b − a` and `t` its transverse part: `(s² − r²)² + |t|⁴ + 2r²|t|²`.
    QuarticVector,
    /// `|p − a|²|p − b|²`.
    QuadraticProduct,
}

impl BaseWell {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "quartic_scalar" => Some(Self::QuarticScalar),
            "quartic_vector" => Some(Self::QuarticVector),
            "quadratic_product" => Some(Self::QuadraticProduct),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::QuarticScalar => "quartic_scalar",
            Self::QuarticVector => "quartic_vector",
            Self::QuadraticProduct => "quadratic_product",
        }
    }
}

/// Periodic modulation `m(y)` with period one in each coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    Constant(f64),
    /// `1 + amplitude·sin(2π y₁)`.
    Sine { amplitude: f64 },
    /// `low` where `Σ_i ⌊2 frac(y_i)⌋` is even, `high` elsewhere.
    Checkerboard { low: f64, high: f64 },
}

impl Modulation {
    #[inline]
    pub fn value(&self, y: &[f64]) -> f64 {
        match *self {
            Modulation::Constant(c) => c,
            Modulation::Sine { amplitude } => {
                1.0 + amplitude * math::sin(2.0 * core::f64::consts::PI * math::frac(y[0]))
            }
            Modulation::Checkerboard { low, high } => {
                let mut parity = 0i64;
                for &yi in y {
                    parity ^= math::floor(2.0 * yi) as i64;
                }
                parity &= 1;
                if parity == 0 {
                    low
                } else {
                    high
                }
            }
        }
    }

    /// Exact cell average.
    pub fn mean(&self) -> f64 {
        match *self {
            Modulation::Constant(c) => c,
            Modulation::Sine { .. } => 1.0,
            Modulation::Checkerboard { low, high } => 0.5 * (low + high),
        }
    }

    pub fn min(&self) -> f64 {
        match *self {
            Modulation::Constant(c) => c,
            Modulation::Sine { amplitude } => 1.0 - amplitude.abs(),
            Modulation::Checkerboard { low, high } => low.min(high),
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            Modulation::Constant(c) => c,
            Modulation::Sine { amplitude } => 1.0 + amplitude.abs(),
            Modulation::Checkerboard { low, high } => low.max(high),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            Modulation::Constant(_) => true,
            Modulation::Sine { amplitude } => amplitude == 0.0,
            Modulation::Checkerboard { low, high } => low == high,
        }
    }

    /// Finitely many values with their cell measure, when the modulation is piecewise constant.
    pub fn level_sets(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Modulation::Constant(c) => Some(vec![(c, 1.0)]),
            Modulation::Checkerboard { low, high } => Some(vec![(low, 0.5), (high, 0.5)]),
            Modulation::Sine { amplitude: 0.0 } => Some(vec![(1.0, 1.0)]),
            Modulation::Sine { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Modulation::Constant(c) => c.is_finite() && c >= 0.0,
            Modulation::Sine { amplitude } => amplitude.is_finite() && amplitude.abs() <= 1.0,
            Modulation::Checkerboard { low, high } => {
                low.is_finite() && high.is_finite() && low >= 0.0 && high >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("modulation", "values must be finite and nonnegative"))
        }
    }
}

/// Two-sided growth bound `|p|^q / C − C ≤ W(y, p) ≤ C(1 + |p|^q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub constant: f64,
    pub exponent: f64,
}

/// Heterogeneous double well `W(y, p) = scale · m(y) · W₀(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    space_dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    base: BaseWell,
    modulation: Modulation,
    scale: f64,
    growth: Growth,
    lower_bound: Option<f64>,
    // cached quartic-vector frame
    center: Vec<f64>,
    axis: Vec<f64>,
    half_gap: f64,
}

impl PotentialSpec {
    pub fn new(
        space_dim: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        base: BaseWell,
        modulation: Modulation,
    ) -> Result<Self> {
        if space_dim == 0 {
            return Err(Error::invalid("space_dim", "must be at least 1"));
        }
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        if a.is_empty() {
            return Err(Error::invalid("wells", "state dimension must be at least 1"));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("wells", "coordinates must be finite"));
        }
        if base == BaseWell::QuarticScalar && a.len() != 1 {
            return Err(Error::invalid("base_well", "quartic_scalar needs scalar states"));
        }
        modulation.validate()?;

        let d = a.len();
        let center: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let gap = math::dist(&a, &b);
        let axis = if gap > 0.0 {
            a.iter().zip(&b).map(|(x, y)| (y - x) / gap).collect()
        } else {
            let mut e = vec![0.0; d];
            e[0] = 1.0;
            e
        };

        let mut spec = Self {
            space_dim,
            a,
            b,
            base,
            modulation,
            scale: 1.0,
            growth: Growth {
                constant: 1.0,
                exponent: 4.0,
            },
            lower_bound: None,
            center,
            axis,
            half_gap: 0.5 * gap,
        };
        spec.growth = spec.default_growth();
        spec.lower_bound = Some(spec.scale * spec.modulation.min());
        Ok(spec)
    }

    /// Multiply the whole potential by `c > 0`.
    pub fn with_scale(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("scale", "must be positive and finite"));
        }
        self.scale = c;
        self.growth = self.default_growth();
        self.lower_bound = Some(c * self.modulation.min());
        Ok(self)
    }

    pub fn with_growth(mut self, growth: Growth) -> Self {
        self.growth = growth;
        self
    }

    /// Lower-bound witness `W_c = factor · W₀`; `None` removes it.
    pub fn with_lower_bound(mut self, factor: Option<f64>) -> Self {
        self.lower_bound = factor;
        self
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn well_a(&self) -> &[f64] {
        &self.a
    }

    pub fn well_b(&self) -> &[f64] {
        &self.b
    }

    pub fn base(&self) -> BaseWell {
        self.base
    }

    pub fn modulation(&self) -> &Modulation {
        &self.modulation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn lower_bound_factor(&self) -> Option<f64> {
        self.lower_bound
    }

    /// `scale · mean(m)`.
    pub fn mean_factor(&self) -> f64 {
        self.scale * self.modulation.mean()
    }

    /// `(scale·min m, scale·max m)`.
    pub fn factor_range(&self) -> (f64, f64) {
        (self.scale * self.modulation.min(), self.scale * self.modulation.max())
    }

    /// Largest well norm; truncation radii below it would cut a well.
    pub fn well_radius(&self) -> f64 {
        math::norm(&self.a).max(math::norm(&self.b))
    }

    /// `2(|a| + |b| + |a − b|)`: default radius enclosing the minimizing geodesics.
    pub fn default_truncation_radius(&self) -> f64 {
        2.0 * (math::norm(&self.a) + math::norm(&self.b) + math::dist(&self.a, &self.b))
    }

    #[inline]
    pub fn base_value(&self, p: &[f64]) -> f64 {
        match self.base {
            BaseWell::QuarticScalar => {
                let u = p[0];
                let s = (u - self.a[0]) * (u - self.b[0]);
                s * s
            }
            BaseWell::QuadraticProduct => math::dist_sq(p, &self.a) * math::dist_sq(p, &self.b),
            BaseWell::QuarticVector => {
                let (s, t2) = self.frame(p);
                let r2 = self.half_gap * self.half_gap;
                let w = s * s - r2;
                w * w + t2 * (t2 + 2.0 * r2)
            }
        }
    }

    #[inline]
    pub fn base_gradient(&self, p: &[f64], out: &mut [f64]) {
        match self.base {
            BaseWell::QuarticScalar => {
                let u = p[0];
                let (a, b) = (self.a[0], self.b[0]);
                out[0] = 2.0 * (u - a) * (u - b) * (2.0 * u - a - b);
            }
            BaseWell::QuadraticProduct => {
                let da = math::dist_sq(p, &self.a);
                let db = math::dist_sq(p, &self.b);
                for k in 0..p.len() {
                    out[k] = 2.0 * (p[k] - self.a[k]) * db + 2.0 * (p[k] - self.b[k]) * da;
                }
            }
            BaseWell::QuarticVector => {
                let (s, t2) = self.frame(p);
                let r2 = self.half_gap * self.half_gap;
                let along = 4.0 * s * (s * s - r2);
                let across = 4.0 * (t2 + r2);
                for k in 0..p.len() {
                    let q = p[k] - self.center[k];
                    let t = q - s * self.axis[k];
                    out[k] = along * self.axis[k] + across * t;
                }
            }
        }
    }

    /// `(s, |t|²)` of `p − c` in the frame aligned with `b − a`.
    fn frame(&self, p: &[f64]) -> (f64, f64) {
        let mut s = 0.0;
        let mut q2 = 0.0;
        for k in 0..p.len() {
            let q = p[k] - self.center[k];
            s += q * self.axis[k];
            q2 += q * q;
        }
        (s, (q2 - s * s).max(0.0))
    }

    /// Upper bound for the Lipschitz constant of `p ↦ W(y, p)` on `|p| ≤ radius`,
    /// uniform in `y`.
    pub fn lipschitz_bound(&self, radius: f64) -> f64 {
        let k = radius.max(0.0);
        let (_, smax) = self.factor_range();
        let base = match self.base {
            BaseWell::QuarticScalar => {
                let (na, nb) = (self.a[0].abs(), self.b[0].abs());
                2.0 * (k + na) * (k + nb) * (2.0 * k + na + nb)
            }
            BaseWell::QuadraticProduct => {
                let (na, nb) = (math::norm(&self.a), math::norm(&self.b));
                2.0 * (k + na) * (k + nb) * (k + nb) + 2.0 * (k + nb) * (k + na) * (k + na)
            }
            BaseWell::QuarticVector => {
                let kq = k + math::norm(&self.center);
                let r2 = self.half_gap * self.half_gap;
                8.0 * kq * (kq * kq + r2)
            }
        };
        smax * base
    }

    /// `(λ, μ, κ)` with `λ|p|⁴ − μ ≤ W₀(p) ≤ κ(1 + |p|⁴)`.
    fn base_growth(&self) -> (f64, f64, f64) {
        match self.base {
            BaseWell::QuarticScalar | BaseWell::QuadraticProduct => {
                let big = self.well_radius();
                let big4 = powi(big, 4);
                (1.0 / 16.0, big4, 8.0 * big4.max(1.0))
            }
            BaseWell::QuarticVector => {
                let c4 = powi(math::norm(&self.center), 4);
                let r4 = powi(self.half_gap, 4);
                (1.0 / 64.0, 0.25 * c4 + r4, (16.0 * c4 + 2.0 * r4).max(16.0))
            }
        }
    }

    fn default_growth(&self) -> Growth {
        let (lambda, mu, kappa) = self.base_growth();
        let (smin, smax) = self.factor_range();
        let lower = if smin > 0.0 {
            (1.0 / (smin * lambda)).max(smin * mu)
        } else {
            f64::INFINITY
        };
        Growth {
            constant: lower.max(smax * kappa),
            exponent: 4.0,
        }
    }
}

impl Potential for PotentialSpec {
    fn state_dim(&self) -> usize {
        self.a.len()
    }

    #[inline]
    fn value(&self, y: &[f64], p: &[f64]) -> f64 {
        self.scale * self.modulation.value(y) * self.base_value(p)
    }

    #[inline]
    fn gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]) {
        self.base_gradient(p, out);
        let f = self.scale * self.modulation.value(y);
        for g in out.iter_mut() {
            *g *= f;
        }
    }

    #[inline]
    fn value_gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]) -> f64 {
        let f = self.scale * self.modulation.value(y);
        if let BaseWell::QuarticScalar = self.base {
            let (u, a, b) = (p[0], self.a[0], self.b[0]);
            let s = (u - a) * (u - b);
            out[0] = f * 2.0 * s * (2.0 * u - a - b);
            return f * s * s;
        }
        self.base_gradient(p, out);
        for g in out.iter_mut() {
            *g *= f;
        }
        f * self.base_value(p)
    }

    fn is_homogeneous(&self) -> bool {
        self.modulation.is_constant()
    }
}

/// Sample lattice used to estimate the cap `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLattice {
    /// Cell nodes `j / cell_per_axis` per axis.
    pub cell_per_axis: usize,
    /// Nodes per axis of the state lattice on `[−R, R]^d`; odd counts include `0`.
    pub state_per_axis: usize,
    /// Inflation applied to the sampled maximum.
    pub safety: f64,
}

impl Default for TruncationLattice {
    fn default() -> Self {
        Self {
            cell_per_axis: 16,
            state_per_axis: 201,
            safety: 1.05,
        }
    }
}

/// `min{W(y, p), M}` with `M` the (inflated) maximum of `W` over `|p| ≤ R`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedPotential {
    inner: PotentialSpec,
    radius: f64,
    cap: f64,
}

/// Cap the potential at the sampled maximum over the ball of radius `radius`.
pub fn truncate(
    spec: &PotentialSpec,
    radius: f64,
    lattice: &TruncationLattice,
) -> Result<TruncatedPotential> {
    let min = spec.well_radius();
    if !(radius >= min) || !radius.is_finite() {
        return Err(Error::RadiusCutsWells { radius, min });
    }
    if lattice.cell_per_axis == 0 || lattice.state_per_axis < 2 {
        return Err(Error::invalid("lattice", "need at least one cell node and two state nodes"));
    }
    if !(lattice.safety >= 1.0) {
        return Err(Error::invalid("safety", "must be at least 1"));
    }
    // W = scale·m(y)·W₀(p) with both factors nonnegative, so the lattice maximum
    // over (y, p) is the product of the two separate maxima.
    let m_max = max_over_cell_lattice(spec, lattice.cell_per_axis);
    let w0_max = max_over_state_ball(spec, radius, lattice.state_per_axis);
    let cap = lattice.safety * spec.scale() * m_max * w0_max;
    TruncatedPotential::with_cap(spec.clone(), radius, cap)
}

fn max_over_cell_lattice(spec: &PotentialSpec, per_axis: usize) -> f64 {
    let n = spec.space_dim();
    let mut idx = vec![0usize; n];
    let mut y = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        for k in 0..n {
            y[k] = idx[k] as f64 / per_axis as f64;
        }
        best = best.max(spec.modulation().value(&y));
        if !advance(&mut idx, per_axis) {
            break;
        }
    }
    best
}

fn max_over_state_ball(spec: &PotentialSpec, radius: f64, per_axis: usize) -> f64 {
    let d = spec.state_dim();
    let step = 2.0 * radius / (per_axis - 1) as f64;
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    let mut best: f64 = 0.0;
    loop {
        for k in 0..d {
            p[k] = -radius + step * idx[k] as f64;
        }
        if math::norm(&p) <= radius * (1.0 + 1e-12) {
            best = best.max(spec.base_value(&p));
        }
        if !advance(&mut idx, per_axis) {
            break;
        }
    }
    best
}

/// Odometer increment over `{0..n}^len`; `false` after the last tuple.
pub(crate) fn advance(idx: &mut [usize], n: usize) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < n {
            return true;
        }
        idx[k] = 0;
    }
    false
}

impl TruncatedPotential {
    /// Explicit cap; `radius` must still enclose both wells.
    pub fn with_cap(inner: PotentialSpec, radius: f64, cap: f64) -> Result<Self> {
        let min = inner.well_radius();
        if !(radius >= min) {
            return Err(Error::RadiusCutsWells { radius, min });
        }
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::invalid("cap", "must be positive and finite"));
        }
        Ok(Self { inner, radius, cap })
    }

    pub fn inner(&self) -> &PotentialSpec {
        &self.inner
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Radius `R̄` with `{W < M} ⊂ {|p| ≤ R̄}`, from the lower growth bound.
    pub fn sublevel_radius(&self) -> f64 {
        let g = self.inner.growth();
        if !g.constant.is_finite() {
            return f64::INFINITY;
        }
        math::powf(g.constant * (self.cap + g.constant), 1.0 / g.exponent)
    }

    /// Global Lipschitz constant of `p ↦ min{W, M}`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.inner.lipschitz_bound(self.sublevel_radius())
    }
}

impl Potential for TruncatedPotential {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    #[inline]
    fn value(&self, y: &[f64], p: &[f64]) -> f64 {
        self.inner.value(y, p).min(self.cap)
    }

    #[inline]
    fn gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]) {
        if self.inner.value(y, p) < self.cap {
            self.inner.gradient(y, p, out);
        } else {
            out.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    #[inline]
    fn value_gradient(&self, y: &[f64], p: &[f64], out: &mut [f64]) -> f64 {
        let v = self.inner.value_gradient(y, p, out);
        if v < self.cap {
            v
        } else {
            out.iter_mut().for_each(|g| *g = 0.0);
            self.cap
        }
    }

    fn is_homogeneous(&self) -> bool {
        self.inner.is_homogeneous()
    }
}

/// Structural hypotheses that can be probed by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Periodicity in the cell variable.
    Periodicity,
    /// Zero set exactly `{a, b}`.
    ZeroSet,
    /// Continuous lower bound with the same zero set.
    LowerWitness,
    /// Two-sided `q`-growth.
    Growth,
    /// Local Lipschitz continuity in the state.
    Lipschitz,
}

impl Hypothesis {
    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::Periodicity => "H0",
            Hypothesis::ZeroSet => "H2",
            Hypothesis::LowerWitness => "H3",
            Hypothesis::Growth => "H4",
            Hypothesis::Lipschitz => "H5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// Counterexample for a failed check.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub hypothesis: Hypothesis,
    pub status: CheckStatus,
    pub samples: usize,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, h: Hypothesis) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.hypothesis == h)
    }
}

/// How many points the hypothesis checks draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBudget {
    pub cell_samples: usize,
    pub state_samples: usize,
    /// Nodes per axis of the zero-set grid on `[−radius, radius]^d`.
    pub zero_grid: usize,
    pub radius: f64,
    pub seed: u64,
}

impl SampleBudget {
    pub fn for_spec(spec: &PotentialSpec) -> Self {
        Self {
            cell_samples: 64,
            state_samples: 256,
            zero_grid: if spec.state_dim() == 1 { 401 } else { 41 },
            radius: spec.default_truncation_radius(),
            seed: 0,
        }
    }
}

const ZERO_TOL: f64 = 1e-10;

/// Sample the structural hypotheses; failures come back as witnesses, never as errors.
pub fn validate_hypotheses(spec: &PotentialSpec, budget: &SampleBudget) -> Result<ValidationReport> {
    if budget.cell_samples == 0 || budget.state_samples == 0 || budget.zero_grid < 2 {
        return Err(Error::invalid("sample_budget", "all counts must be positive"));
    }
    if !(budget.radius > 0.0) {
        return Err(Error::invalid("sample_budget", "radius must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let n = spec.space_dim();
    let d = spec.state_dim();

    // cell points: a lattice of nodes j/8 (hits quarter points such as the
    // sine minimum) followed by random dyadic points
    let mut cells: Vec<Vec<f64>> = Vec::new();
    let lattice = 8usize;
    let mut idx = vec![0usize; n];
    loop {
        cells.push(idx.iter().map(|&j| j as f64 / lattice as f64).collect());
        if !advance(&mut idx, lattice) || cells.len() >= 4096 {
            break;
        }
    }
    for _ in 0..budget.cell_samples {
        cells.push((0..n).map(|_| dyadic(&mut rng, 8.0)).collect());
    }

    let states: Vec<Vec<f64>> = (0..budget.state_samples)
        .map(|_| sample_ball(&mut rng, d, budget.radius))
        .collect();

    let checks = vec![
        check_periodicity(spec, &mut rng, budget),
        check_zero_set(spec, &cells, budget),
        check_lower_witness(spec, &cells, &states, budget),
        check_growth(spec, &cells, &states),
        check_lipschitz(spec, &cells, &mut rng, budget),
    ];
    Ok(ValidationReport { checks })
}

/// Random multiple of 2^-20 in `[-half, half)`: shifts by whole periods stay exact.
fn dyadic<R: rand_core::RngCore>(rng: &mut R, half: f64) -> f64 {
    let scale = (1u64 << 20) as f64;
    let k = rng.next_u64() % ((2.0 * half * scale) as u64);
    k as f64 / scale - half
}

fn sample_ball<R: rand_core::RngCore>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..d)
            .map(|_| radius * (2.0 * math::unit_f64(rng) - 1.0))
            .collect();
        if math::norm(&p) <= radius {
            return p;
        }
    }
}

fn check_periodicity<R: rand_core::RngCore>(
    spec: &PotentialSpec,
    rng: &mut R,
    budget: &SampleBudget,
) -> CheckOutcome {
    let n = spec.space_dim();
    let mut samples = 0;
    for _ in 0..budget.state_samples.max(budget.cell_samples) {
        let y: Vec<f64> = (0..n).map(|_| dyadic(rng, 8.0)).collect();
        let p = sample_ball(rng, spec.state_dim(), budget.radius);
        let axis = (rng.next_u64() % n as u64) as usize;
        let mut shifted = y.clone();
        shifted[axis] += 1.0;
        samples += 1;
        let (w0, w1) = (spec.value(&y, &p), spec.value(&shifted, &p));
        if w0.to_bits() != w1.to_bits() {
            return CheckOutcome {
                hypothesis: Hypothesis::Periodicity,
                status: CheckStatus::Fail,
                samples,
                witness: Some(Witness { y, p, value: w1 - w0 }),
            };
        }
    }
    pass(Hypothesis::Periodicity, samples)
}

fn pass(h: Hypothesis, samples: usize) -> CheckOutcome {
    CheckOutcome {
        hypothesis: h,
        status: CheckStatus::Pass,
        samples,
        witness: None,
    }
}

fn fail(h: Hypothesis, samples: usize, y: &[f64], p: &[f64], value: f64) -> CheckOutcome {
    CheckOutcome {
        hypothesis: h,
        status: CheckStatus::Fail,
        samples,
        witness: Some(Witness {
            y: y.to_vec(),
            p: p.to_vec(),
            value,
        }),
    }
}

/// Grid nodes on `[−r, r]^d`, skipping the ones within a quarter spacing of a well.
fn zero_grid(spec: &PotentialSpec, budget: &SampleBudget) -> Vec<Vec<f64>> {
    let d = spec.state_dim();
    let per_axis = budget.zero_grid;
    let step = 2.0 * budget.radius / (per_axis - 1) as f64;
    let exclusion = 0.25 * step;
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let p: Vec<f64> = idx.iter().map(|&j| -budget.radius + step * j as f64).collect();
        if math::dist(&p, spec.well_a()) > exclusion && math::dist(&p, spec.well_b()) > exclusion {
            out.push(p);
        }
        if !advance(&mut idx, per_axis) {
            break;
        }
    }
    out
}

fn check_zero_set(spec: &PotentialSpec, cells: &[Vec<f64>], budget: &SampleBudget) -> CheckOutcome {
    let h = Hypothesis::ZeroSet;
    let mut samples = 0;
    for y in cells {
        for well in [spec.well_a(), spec.well_b()] {
            samples += 1;
            let w = spec.value(y, well);
            if w > ZERO_TOL {
                return fail(h, samples, y, well, w);
            }
        }
    }
    let grid = zero_grid(spec, budget);
    // the grid is the expensive part; a modest subset of cells suffices
    for y in cells.iter().take(256) {
        for p in &grid {
            samples += 1;
            let w = spec.value(y, p);
            if !(w > ZERO_TOL) {
                return fail(h, samples, y, p, w);
            }
        }
    }
    pass(h, samples)
}

fn check_lower_witness(
    spec: &PotentialSpec,
    cells: &[Vec<f64>],
    states: &[Vec<f64>],
    budget: &SampleBudget,
) -> CheckOutcome {
    let h = Hypothesis::LowerWitness;
    let Some(factor) = spec.lower_bound_factor() else {
        return CheckOutcome {
            hypothesis: h,
            status: CheckStatus::Skipped,
            samples: 0,
            witness: None,
        };
    };
    let mut samples = 0;
    for y in cells {
        for p in states {
            samples += 1;
            let wc = factor * spec.base_value(p);
            let w = spec.value(y, p);
            if wc > w * (1.0 + 1e-12) + 1e-300 {
                return fail(h, samples, y, p, wc - w);
            }
        }
    }
    let origin = vec![0.0; spec.space_dim()];
    for p in zero_grid(spec, budget) {
        samples += 1;
        let wc = factor * spec.base_value(&p);
        if !(wc > ZERO_TOL) {
            return fail(h, samples, &origin, &p, wc);
        }
    }
    pass(h, samples)
}

fn check_growth(spec: &PotentialSpec, cells: &[Vec<f64>], states: &[Vec<f64>]) -> CheckOutcome {
    let h = Hypothesis::Growth;
    let g = spec.growth();
    if !(g.exponent >= 2.0) {
        let origin = vec![0.0; spec.space_dim()];
        let p = vec![0.0; spec.state_dim()];
        return fail(h, 0, &origin, &p, g.exponent);
    }
    let mut samples = 0;
    for y in cells {
        for p in states {
            samples += 1;
            let r = math::powf(math::norm(p), g.exponent);
            let w = spec.value(y, p);
            let lower = r / g.constant - g.constant;
            let upper = g.constant * (1.0 + r);
            if w < lower * (1.0 + 1e-12) - 1e-12 || w > upper * (1.0 + 1e-12) {
                return fail(h, samples, y, p, w);
            }
        }
    }
    pass(h, samples)
}

fn check_lipschitz<R: rand_core::RngCore>(
    spec: &PotentialSpec,
    cells: &[Vec<f64>],
    rng: &mut R,
    budget: &SampleBudget,
) -> CheckOutcome {
    let h = Hypothesis::Lipschitz;
    let l = spec.lipschitz_bound(budget.radius);
    let d = spec.state_dim();
    let mut samples = 0;
    for y in cells.iter().take(64) {
        for _ in 0..budget.state_samples {
            let p = sample_ball(rng, d, budget.radius);
            let q = sample_ball(rng, d, budget.radius);
            let gap = math::dist(&p, &q);
            if gap == 0.0 {
                continue;
            }
            samples += 1;
            let ratio = (spec.value(y, &p) - spec.value(y, &q)).abs() / gap;
            if ratio > l * (1.0 + 1e-9) {
                return fail(h, samples, y, &p, ratio);
            }
        }
    }
    pass(h, samples)
}
