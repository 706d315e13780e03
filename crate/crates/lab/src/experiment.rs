//! Scaling studies, isotropy studies and exponent probes.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use mmhom_core::field::{
    boundary_term, default_poincare_constant, diffuse_energy, diffuse_energy_in, dirichlet_budget, discrepancy,
    face_perimeter, homogenized_energy, l1_distance, poincare_bound_from_budget, project_to_wells,
    reconstructed_perimeter, Region,
};
use mmhom_core::geodesic::{dijkstra_oracle, kh_1d, minimize_kh, GeodesicResult, OracleOptions, Path};
use mmhom_core::homogenize::default_resolution;
use mmhom_core::minimize::{
    centred_disc, minimize_diffuse, Boundary, FlowOutcome, InitialField, TransitionProblem, TransitionProfile,
};
use mmhom_core::potential::{truncate, TruncationLattice};
use mmhom_core::schedule::{fit_loglog, LogLogFit, ScalePair, ScalingSchedule};
use mmhom_core::{Bounds, HomogenizedPotential, Potential, PotentialSpec, TruncatedPotential};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::config::{Config, HomogenizeMode};
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// The flow hit its step cap before meeting the tolerance.
    NotConverged,
    Failed,
}

// serde_json writes NaN as null
fn nan_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// One `(ε_n, δ_n)` row of a scaling study. Failed rows carry `NaN` measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: usize,
    #[serde(deserialize_with = "nan_if_null")]
    pub eps: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub delta: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub eps_over_delta_three_halves: f64,
    /// `F_n(u_n)`.
    #[serde(deserialize_with = "nan_if_null")]
    pub energy: f64,
    /// `F^H_n(u_n)`.
    #[serde(deserialize_with = "nan_if_null")]
    pub homogenized_energy: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub discrepancy: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub poincare_bound: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub boundary_term: f64,
    /// `δ∫|∇u_n|²`.
    #[serde(deserialize_with = "nan_if_null")]
    pub dirichlet_budget: f64,
    /// Reconstructed interface length of the well projection.
    #[serde(deserialize_with = "nan_if_null")]
    pub perimeter: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub face_perimeter: f64,
    /// `K_H × perimeter`.
    #[serde(deserialize_with = "nan_if_null")]
    pub sharp_energy: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub l1_to_projection: f64,
    pub cells: usize,
    pub steps: usize,
    #[serde(deserialize_with = "nan_if_null")]
    pub residual: f64,
    pub status: RowStatus,
    pub message: String,
    #[serde(deserialize_with = "nan_if_null")]
    pub wall_time_s: f64,
}

impl ExperimentRow {
    pub const COLUMNS: &'static [&'static str] = &[
        "n",
        "eps",
        "delta",
        "eps_over_delta_three_halves",
        "energy",
        "homogenized_energy",
        "discrepancy",
        "poincare_bound",
        "boundary_term",
        "dirichlet_budget",
        "perimeter",
        "face_perimeter",
        "sharp_energy",
        "l1_to_projection",
        "cells",
        "steps",
        "residual",
        "status",
        "message",
        "wall_time_s",
    ];

    fn failed(pair: &ScalePair, cells: usize, message: String) -> Self {
        let nan = f64::NAN;
        Self {
            n: pair.n,
            eps: pair.eps,
            delta: pair.delta,
            eps_over_delta_three_halves: pair.ratio_three_halves(),
            energy: nan,
            homogenized_energy: nan,
            discrepancy: nan,
            poincare_bound: nan,
            boundary_term: nan,
            dirichlet_budget: nan,
            perimeter: nan,
            face_perimeter: nan,
            sharp_energy: nan,
            l1_to_projection: nan,
            cells,
            steps: 0,
            residual: nan,
            status: RowStatus::Failed,
            message,
            wall_time_s: 0.0,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

/// Energy per unit interface length for one interface normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropyRow {
    pub angle_deg: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub energy: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub length: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub energy_per_length: f64,
    pub steps: usize,
    pub status: RowStatus,
    pub message: String,
    #[serde(deserialize_with = "nan_if_null")]
    pub wall_time_s: f64,
}

impl IsotropyRow {
    pub const COLUMNS: &'static [&'static str] = &[
        "angle_deg",
        "energy",
        "length",
        "energy_per_length",
        "steps",
        "status",
        "message",
        "wall_time_s",
    ];
}

/// A schedule row tagged with its exponent `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub alpha: f64,
    pub n: usize,
    #[serde(deserialize_with = "nan_if_null")]
    pub eps: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub delta: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub eps_over_delta_three_halves: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub discrepancy: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub poincare_bound: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub energy: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub sharp_energy: f64,
    /// `|F_n − K_H·P| / (K_H·P)`.
    #[serde(deserialize_with = "nan_if_null")]
    pub relative_error: f64,
    pub status: RowStatus,
}

impl ProbeRow {
    pub const COLUMNS: &'static [&'static str] = &[
        "alpha",
        "n",
        "eps",
        "delta",
        "eps_over_delta_three_halves",
        "discrepancy",
        "poincare_bound",
        "energy",
        "sharp_energy",
        "relative_error",
        "status",
    ];
}

/// Trend summary of one probed exponent. Exploratory only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSummary {
    pub alpha: f64,
    pub in_regime: bool,
    /// `ε_n/δ_n^{3/2}` at the last row over the first.
    pub ratio_change: f64,
    pub discrepancy_decays: bool,
    pub error_decays: bool,
}

/// `K_H` by the string method, with the lattice oracle and the scalar closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KhReport {
    pub kh: f64,
    pub iterations: usize,
    pub converged: bool,
    pub within_radius: bool,
    pub max_norm: f64,
    pub oracle: f64,
    pub oracle_per_axis: usize,
    /// Exact quadrature for scalar states.
    pub closed_form: Option<f64>,
    pub wall_time_s: f64,
}

/// Everything derived from the config once, before any row runs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: Config,
    pub spec: PotentialSpec,
    pub truncated: TruncatedPotential,
    /// Homogenization of the truncated potential.
    pub homogenized: HomogenizedPotential,
    pub kh: f64,
    pub geodesic: Path,
    pub profile: TransitionProfile,
    pub bounds: Bounds,
    pub lipschitz: f64,
    pub poincare_constant: f64,
    pub boundary_constant: f64,
    pub budget: f64,
}

impl Setup {
    pub fn new(config: &Config) -> Result<Self> {
        let spec = config.potential.spec()?;
        let radius = config
            .potential
            .truncation_radius
            .unwrap_or_else(|| spec.default_truncation_radius());
        let lattice = TruncationLattice {
            safety: config.potential.truncation_safety,
            ..TruncationLattice::default()
        };
        let truncated = truncate(&spec, radius, &lattice)?;
        let homogenized = homogenize(&truncated, config)?;
        let (a, b) = (spec.well_a().to_vec(), spec.well_b().to_vec());
        let (kh, geodesic) = if spec.state_dim() == 1 {
            (kh_1d(&homogenized, a[0], b[0]), Path::straight(&a, &b, config.geodesic.segments))
        } else {
            let opts = config.geodesic.string_options(config.seed);
            let r = minimize_kh(&homogenized, &a, &b, &opts)?;
            (r.cost, r.path)
        };
        let profile = TransitionProfile::new(&homogenized, &geodesic, TransitionProfile::DEFAULT_COLLAR)?;

        let s = &config.schedule;
        let n = spec.space_dim();
        if !(s.side > 0.0) {
            return Err(LabError::Config("schedule.side must be positive".into()));
        }
        let bounds = Bounds::cube(n, 0.0, s.side)?;
        let surface = 2.0 * n as f64 * s.side.powi(n as i32 - 1);
        Ok(Self {
            lipschitz: truncated.lipschitz_constant(),
            poincare_constant: s.poincare_constant.unwrap_or_else(|| default_poincare_constant(n)),
            boundary_constant: s.boundary_constant.unwrap_or(surface),
            budget: s.budget.unwrap_or(2.0 * kh * s.side.powi(n as i32 - 1)),
            config: config.clone(),
            spec,
            truncated,
            homogenized,
            kh,
            geodesic,
            profile,
            bounds,
        })
    }

    fn problem(&self, eps: f64, delta: f64, boundary: Boundary) -> TransitionProblem {
        TransitionProblem {
            bounds: self.bounds.clone(),
            cells: self.config.schedule.cells(eps, delta),
            eps,
            delta,
            boundary,
            init: InitialField::Profile,
            profile: self.profile.clone(),
        }
    }

    /// Minimize `F_{ε,δ}` with the truncated potential.
    pub fn minimize(&self, eps: f64, delta: f64, boundary: Boundary) -> Result<FlowOutcome> {
        let problem = self.problem(eps, delta, boundary);
        Ok(minimize_diffuse(&problem, &self.truncated, &self.config.solver.flow_options())?)
    }

    fn elapsed(&self, start: Instant) -> f64 {
        if self.config.output.timings {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }

    /// Solve one schedule row and evaluate every column.
    pub fn row(&self, pair: &ScalePair) -> ExperimentRow {
        let start = Instant::now();
        let cells = self.config.schedule.cells(pair.eps, pair.delta);
        let mut row = match self.measure(pair, cells) {
            Ok(r) => r,
            Err(e) => ExperimentRow::failed(pair, cells, e.to_string()),
        };
        row.wall_time_s = self.elapsed(start);
        row
    }

    fn measure(&self, pair: &ScalePair, cells: usize) -> Result<ExperimentRow> {
        let (eps, delta) = (pair.eps, pair.delta);
        let out = self.minimize(eps, delta, Boundary::Dirichlet)?;
        let u = &out.field;
        let (a, b) = (self.spec.well_a(), self.spec.well_b());

        let energy = diffuse_energy(u, eps, delta, &self.truncated)?.total;
        let mut status = if out.converged {
            RowStatus::Ok
        } else {
            RowStatus::NotConverged
        };
        let mut message = String::new();
        // inside the truncation radius the cap is inactive
        if u.max_norm() <= self.truncated.radius() {
            let plain = diffuse_energy(u, eps, delta, &self.spec)?.total;
            if (plain - energy).abs() > 1e-12 * energy.max(1.0) {
                status = RowStatus::Failed;
                message = format!("truncated energy {energy} differs from untruncated {plain}");
            }
        }
        let proj = project_to_wells(u, a, b)?;
        let perimeter = reconstructed_perimeter(&proj, a, b, &Region::Full)?;
        Ok(ExperimentRow {
            n: pair.n,
            eps,
            delta,
            eps_over_delta_three_halves: pair.ratio_three_halves(),
            energy,
            homogenized_energy: homogenized_energy(u, delta, &self.homogenized)?.total,
            discrepancy: discrepancy(u, eps, delta, &self.truncated, &self.homogenized)?,
            poincare_bound: poincare_bound_from_budget(
                eps,
                delta,
                self.lipschitz,
                self.poincare_constant,
                self.budget,
                self.bounds.volume(),
            ),
            boundary_term: boundary_term(eps, delta, self.truncated.cap(), self.boundary_constant),
            dirichlet_budget: dirichlet_budget(u, delta),
            perimeter,
            face_perimeter: face_perimeter(&proj, a, b, &Region::Full)?,
            sharp_energy: self.kh * perimeter,
            l1_to_projection: l1_distance(u, &proj)?,
            cells,
            steps: out.steps,
            residual: out.residual,
            status,
            message,
            wall_time_s: 0.0,
        })
    }

    /// Minimize with a planar interface of normal `angle_deg` and measure inside the centred disc.
    pub fn isotropy_row(&self, eps: f64, delta: f64, angle_deg: f64) -> IsotropyRow {
        let start = Instant::now();
        let mut row = match self.measure_angle(eps, delta, angle_deg) {
            Ok(r) => r,
            Err(e) => IsotropyRow {
                angle_deg,
                energy: f64::NAN,
                length: f64::NAN,
                energy_per_length: f64::NAN,
                steps: 0,
                status: RowStatus::Failed,
                message: e.to_string(),
                wall_time_s: 0.0,
            },
        };
        row.wall_time_s = self.elapsed(start);
        row
    }

    fn measure_angle(&self, eps: f64, delta: f64, angle_deg: f64) -> Result<IsotropyRow> {
        if self.spec.space_dim() != 2 {
            return Err(LabError::Config("isotropy needs potential.space_dim = 2".into()));
        }
        let boundary = Boundary::Planar {
            angle: angle_deg.to_radians(),
        };
        let out = self.minimize(eps, delta, boundary)?;
        let region = centred_disc(&self.bounds, self.config.isotropy.disc_radius * self.config.schedule.side);
        let (a, b) = (self.spec.well_a(), self.spec.well_b());
        let energy = diffuse_energy_in(&out.field, eps, delta, &self.truncated, &region)?.total;
        let proj = project_to_wells(&out.field, a, b)?;
        let length = reconstructed_perimeter(&proj, a, b, &region)?;
        Ok(IsotropyRow {
            angle_deg,
            energy,
            length,
            energy_per_length: energy / length,
            steps: out.steps,
            status: if out.converged {
                RowStatus::Ok
            } else {
                RowStatus::NotConverged
            },
            message: String::new(),
            wall_time_s: 0.0,
        })
    }

    /// String method, lattice oracle and (for scalar states) the closed form.
    pub fn kh_report(&self) -> Result<KhReport> {
        let start = Instant::now();
        let g = &self.config.geodesic;
        let (a, b) = (self.spec.well_a(), self.spec.well_b());
        let r: GeodesicResult = minimize_kh(&self.homogenized, a, b, &g.string_options(self.config.seed))?;
        let d = a.len();
        let per_axis = g.oracle_per_axis.unwrap_or(match d {
            1 => 4001,
            2 => 201,
            _ => 41,
        });
        let lo: Vec<f64> = (0..d).map(|k| a[k].min(b[k]) - g.oracle_margin).collect();
        let hi: Vec<f64> = (0..d).map(|k| a[k].max(b[k]) + g.oracle_margin).collect();
        let oracle = dijkstra_oracle(
            &self.homogenized,
            a,
            b,
            &OracleOptions {
                bounds: Bounds::new(lo, hi)?,
                per_axis,
                order: g.oracle_order,
            },
        )?;
        Ok(KhReport {
            kh: r.cost,
            iterations: r.iterations,
            converged: r.converged,
            within_radius: r.max_norm <= self.truncated.radius(),
            max_norm: r.max_norm,
            oracle,
            oracle_per_axis: per_axis,
            closed_form: (d == 1).then(|| kh_1d(&self.homogenized, a[0], b[0])),
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }
}

fn homogenize(t: &TruncatedPotential, config: &Config) -> Result<HomogenizedPotential> {
    Ok(match config.homogenize.mode {
        HomogenizeMode::Exact => HomogenizedPotential::exact_truncated(t),
        HomogenizeMode::Quadrature => {
            let res = config
                .homogenize
                .resolution
                .unwrap_or_else(|| default_resolution(t.inner().space_dim()));
            HomogenizedPotential::quadrature_truncated(t, res)?
        }
    })
}

/// Run `f` over `items` on the current rayon pool, handing results to `sink`
/// in input order as soon as each prefix is complete.
fn ordered_pool<T, R, F, S>(items: &[T], f: F, mut sink: S) -> Vec<R>
where
    T: Sync,
    R: Send + Clone,
    F: Fn(&T) -> R + Sync,
    S: FnMut(&R) + Send,
{
    if rayon::current_num_threads() <= 1 || items.len() <= 1 {
        return items
            .iter()
            .map(|x| {
                let r = f(x);
                sink(&r);
                r
            })
            .collect();
    }
    struct Pending<R, S> {
        next: usize,
        waiting: BTreeMap<usize, R>,
        done: Vec<R>,
        sink: S,
    }
    let state = Mutex::new(Pending {
        next: 0,
        waiting: BTreeMap::new(),
        done: Vec::with_capacity(items.len()),
        sink,
    });
    items.par_iter().enumerate().for_each(|(i, x)| {
        let r = f(x);
        let mut s = state.lock().expect("sink poisoned");
        s.waiting.insert(i, r);
        loop {
            let next = s.next;
            let Some(r) = s.waiting.remove(&next) else { break };
            (s.sink)(&r);
            s.done.push(r);
            s.next += 1;
        }
    });
    state.into_inner().expect("sink poisoned").done
}

fn check_schedule(schedule: &ScalingSchedule, probe: bool) -> Result<()> {
    schedule.validate()?;
    if !probe && !schedule.in_regime() {
        return Err(LabError::OutsideRegime { alpha: schedule.alpha });
    }
    Ok(())
}

/// Solve every schedule row; `sink` sees each row as soon as it and all earlier rows are done.
pub fn run_schedule_with<S: FnMut(&ExperimentRow) + Send>(
    setup: &Setup,
    probe: bool,
    sink: S,
) -> Result<Vec<ExperimentRow>> {
    let schedule = setup.config.schedule.schedule();
    check_schedule(&schedule, probe)?;
    Ok(ordered_pool(&schedule.pairs(), |p| setup.row(p), sink))
}

pub fn run_schedule(setup: &Setup) -> Result<Vec<ExperimentRow>> {
    run_schedule_with(setup, false, |_| {})
}

/// Log-log fit of the discrepancy against `ε/δ^{3/2}` over the successful rows.
pub fn fit_scaling(rows: &[ExperimentRow]) -> Result<LogLogFit> {
    fit_column(rows, |r| r.discrepancy)
}

/// Log-log fit of any column against `ε/δ^{3/2}` over the successful rows.
pub fn fit_column(rows: &[ExperimentRow], column: impl Fn(&ExperimentRow) -> f64) -> Result<LogLogFit> {
    let ok: Vec<&ExperimentRow> = rows.iter().filter(|r| r.succeeded()).collect();
    let xs: Vec<f64> = ok.iter().map(|r| r.eps_over_delta_three_halves).collect();
    let ys: Vec<f64> = ok.iter().map(|r| column(r)).collect();
    Ok(fit_loglog(&xs, &ys)?)
}

/// Relative spread `(max − min)/mean` of the energy per unit length.
pub fn spread(rows: &[IsotropyRow]) -> f64 {
    let v: Vec<f64> = rows.iter().map(|r| r.energy_per_length).collect();
    if v.is_empty() {
        return 0.0;
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (max - min) / mean
}

/// Minimize at the configured schedule row for every configured angle.
pub fn isotropy_study_with<S: FnMut(&IsotropyRow) + Send>(setup: &Setup, sink: S) -> Result<Vec<IsotropyRow>> {
    let schedule = setup.config.schedule.schedule();
    schedule.validate()?;
    let last = schedule
        .n_max
        .ok_or_else(|| LabError::Config("isotropy needs a non-empty schedule".into()))?;
    let pair = schedule.pair(setup.config.isotropy.row.unwrap_or(last));
    let angles = setup.config.isotropy.angles_deg.clone();
    Ok(ordered_pool(&angles, |&t| setup.isotropy_row(pair.eps, pair.delta, t), sink))
}

pub fn isotropy_study(setup: &Setup) -> Result<Vec<IsotropyRow>> {
    isotropy_study_with(setup, |_| {})
}

/// Rerun the schedule for each exponent, including ones outside the regime.
pub fn probe_exponent(config: &Config, alphas: &[f64]) -> Result<(Vec<ProbeRow>, Vec<ProbeSummary>)> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &alpha in alphas {
        let mut c = config.clone();
        c.schedule.alpha = alpha;
        let setup = Setup::new(&c)?;
        let table = run_schedule_with(&setup, true, |_| {})?;
        let probe: Vec<ProbeRow> = table
            .iter()
            .map(|r| ProbeRow {
                alpha,
                n: r.n,
                eps: r.eps,
                delta: r.delta,
                eps_over_delta_three_halves: r.eps_over_delta_three_halves,
                discrepancy: r.discrepancy,
                poincare_bound: r.poincare_bound,
                energy: r.energy,
                sharp_energy: r.sharp_energy,
                relative_error: (r.energy - r.sharp_energy).abs() / r.sharp_energy,
                status: r.status,
            })
            .collect();
        let decays = |f: &dyn Fn(&ProbeRow) -> f64| {
            let v: Vec<f64> = probe.iter().filter(|r| r.status == RowStatus::Ok).map(f).collect();
            v.len() >= 2 && v.windows(2).all(|w| w[1] < w[0])
        };
        let ratio_change = match (probe.first(), probe.last()) {
            (Some(f), Some(l)) => l.eps_over_delta_three_halves / f.eps_over_delta_three_halves,
            _ => f64::NAN,
        };
        summaries.push(ProbeSummary {
            alpha,
            in_regime: c.schedule.schedule().in_regime(),
            ratio_change,
            discrepancy_decays: decays(&|r| r.discrepancy),
            error_decays: decays(&|r| r.relative_error),
        });
        rows.extend(probe);
    }
    Ok((rows, summaries))
}

/// Sample hypotheses with the configured seed.
pub fn validate(config: &Config) -> Result<mmhom_core::potential::ValidationReport> {
    let spec = config.potential.spec()?;
    let mut budget = mmhom_core::potential::SampleBudget::for_spec(&spec);
    budget.seed = config.seed;
    if let Some(r) = config.potential.truncation_radius {
        budget.radius = r;
    }
    Ok(mmhom_core::potential::validate_hypotheses(&spec, &budget)?)
}
