//! JSON run configuration.
//!
//! Every section and key is optional; missing keys take the defaults listed
//! on each field. Unknown keys are rejected.

use std::path::Path;

use mmhom_core::geodesic::StringOptions;
use mmhom_core::minimize::{FlowOptions, Scheme};
use mmhom_core::schedule::ScalingSchedule;
use mmhom_core::{BaseWell, Modulation, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Seed for the string-method jitter and hypothesis sampling. Default `0`.
    pub seed: u64,
    pub potential: PotentialConfig,
    pub homogenize: HomogenizeConfig,
    pub geodesic: GeodesicConfig,
    pub schedule: ScheduleConfig,
    pub solver: SolverConfig,
    pub isotropy: IsotropyConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// Spatial dimension `N` of the domain. Default `2`.
    pub space_dim: usize,
    /// Default `[-1.0]`.
    pub well_a: Vec<f64>,
    /// Default `[1.0]`.
    pub well_b: Vec<f64>,
    /// `quartic_scalar`, `quartic_vector` or `quadratic_product`. Default `quartic_scalar`.
    pub base: String,
    /// Default `{"kind": "checkerboard", "low": 1.0, "high": 2.0}`.
    pub modulation: ModulationConfig,
    /// Overall factor `c` in `c·m(y)·W₀(p)`. Default `1.0`.
    pub scale: f64,
    /// Truncation radius `R`; `null` uses twice `|a| + |b| + |a − b|`. Default `null`.
    pub truncation_radius: Option<f64>,
    /// Inflation of the sampled cap `M`. Default `1.05`.
    pub truncation_safety: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            space_dim: 2,
            well_a: vec![-1.0],
            well_b: vec![1.0],
            base: "quartic_scalar".into(),
            modulation: ModulationConfig::Checkerboard { low: 1.0, high: 2.0 },
            scale: 1.0,
            truncation_radius: None,
            truncation_safety: 1.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulationConfig {
    Constant { value: f64 },
    /// `1 + amplitude·sin(2π y₁)`.
    Sine { amplitude: f64 },
    Checkerboard { low: f64, high: f64 },
}

impl From<ModulationConfig> for Modulation {
    fn from(m: ModulationConfig) -> Self {
        match m {
            ModulationConfig::Constant { value } => Modulation::Constant(value),
            ModulationConfig::Sine { amplitude } => Modulation::Sine { amplitude },
            ModulationConfig::Checkerboard { low, high } => Modulation::Checkerboard { low, high },
        }
    }
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<PotentialSpec> {
        let base = BaseWell::from_name(&self.base)
            .ok_or_else(|| LabError::Config(format!("unknown base well `{}`", self.base)))?;
        let spec = PotentialSpec::new(
            self.space_dim,
            self.well_a.clone(),
            self.well_b.clone(),
            base,
            self.modulation.into(),
        )?;
        Ok(spec.with_scale(self.scale)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogenizeMode {
    /// Closed-form cell means of the modulation.
    Exact,
    /// Midpoint quadrature over the cell.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomogenizeConfig {
    /// Default `exact`.
    pub mode: HomogenizeMode,
    /// Quadrature points per axis; `null` uses 64 for `N ≤ 2` and 16 for `N = 3`.
    pub resolution: Option<usize>,
}

impl Default for HomogenizeConfig {
    fn default() -> Self {
        Self {
            mode: HomogenizeMode::Exact,
            resolution: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicConfig {
    /// Path segments `K`. Default `128`.
    pub segments: usize,
    /// Relative cost decrease over 10 iterations that stops the string method. Default `1e-8`.
    pub tol: f64,
    /// Default `5000`.
    pub max_iter: usize,
    /// Initial transverse jitter as a fraction of `|b − a|`. Default `0.05`.
    pub jitter: f64,
    /// `H¹` smoothing of descent directions in units of `K²`. Default `0.05`.
    pub smoothing: f64,
    /// Lattice-oracle nodes per axis; `null` uses 4001, 201 or 41 for state dimension 1, 2, 3.
    pub oracle_per_axis: Option<usize>,
    /// Lattice-oracle neighbour order. Default `2`.
    pub oracle_order: usize,
    /// Margin of the oracle box around the wells. Default `0.5`.
    pub oracle_margin: f64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        let s = StringOptions::default();
        Self {
            segments: s.segments,
            tol: s.tol,
            max_iter: s.max_iter,
            jitter: s.jitter,
            smoothing: s.smoothing,
            oracle_per_axis: None,
            oracle_order: 2,
            oracle_margin: 0.5,
        }
    }
}

impl GeodesicConfig {
    pub fn string_options(&self, seed: u64) -> StringOptions {
        StringOptions {
            segments: self.segments,
            tol: self.tol,
            max_iter: self.max_iter,
            seed,
            jitter: self.jitter,
            radius: None,
            smoothing: self.smoothing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Default `0.125`.
    pub eps0: f64,
    /// Default `0.25`.
    pub delta0: f64,
    /// Default `0.5`.
    pub rho: f64,
    /// `δ_n = δ₀ρ^{αn}`. Default `0.5`.
    pub alpha: f64,
    /// Last row index; `null` gives an empty schedule. Default `5`.
    pub n_max: Option<usize>,
    /// The domain is `[0, side]^N`. Default `1.0`.
    pub side: f64,
    /// Grid cells per period `ε`. Default `4`.
    pub cells_per_period: usize,
    /// Lower bound on cells per `δ`. Default `8`.
    pub min_cells_per_delta: usize,
    /// Poincaré constant `C̃`; `null` uses `√N/2`.
    pub poincare_constant: Option<f64>,
    /// Constant of the boundary-strip term `C·ε·M/δ`; `null` uses the surface area of the domain.
    pub boundary_constant: Option<f64>,
    /// Uniform gradient budget `T` in the Poincaré bound; `null` uses `2·K_H·side^{N−1}`.
    pub budget: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            eps0: 0.125,
            delta0: 0.25,
            rho: 0.5,
            alpha: 0.5,
            n_max: Some(5),
            side: 1.0,
            cells_per_period: 4,
            min_cells_per_delta: 8,
            poincare_constant: None,
            boundary_constant: None,
            budget: None,
        }
    }
}

impl ScheduleConfig {
    pub fn schedule(&self) -> ScalingSchedule {
        ScalingSchedule {
            eps0: self.eps0,
            delta0: self.delta0,
            rho: self.rho,
            alpha: self.alpha,
            n_max: self.n_max,
        }
    }

    /// Cells per axis for a given `(ε, δ)`: a whole number of cells per period,
    /// at least `cells_per_period` and enough for `min_cells_per_delta`.
    pub fn cells(&self, eps: f64, delta: f64) -> usize {
        let by_delta = (self.min_cells_per_delta as f64 * eps / delta).ceil() as usize;
        let per_period = self.cells_per_period.max(by_delta).max(1);
        let periods = (self.side / eps - 1e-9).ceil().max(1.0) as usize;
        per_period * periods
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    QuasiNewton,
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// `quasi_newton`, `semi_implicit` or `explicit`. Default `quasi_newton`.
    pub scheme: SchemeConfig,
    /// Stopping threshold on the relative gradient-flow rate. Default `1e-9`.
    pub tol: f64,
    /// Hard cap on accepted steps. Default `20000`.
    pub max_steps: usize,
    /// Initial step in units of `δ`; `null` picks the scheme default.
    pub initial_step: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let f = FlowOptions::default();
        Self {
            scheme: SchemeConfig::QuasiNewton,
            tol: f.tol,
            max_steps: f.max_steps,
            initial_step: f.initial_step,
        }
    }
}

impl SolverConfig {
    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            scheme: match self.scheme {
                SchemeConfig::QuasiNewton => Scheme::QuasiNewton,
                SchemeConfig::SemiImplicit => Scheme::SemiImplicit,
                SchemeConfig::Explicit => Scheme::Explicit,
            },
            tol: self.tol,
            max_steps: self.max_steps,
            initial_step: self.initial_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsotropyConfig {
    /// Interface normals in degrees from `e₁`. Default `[0, 30, 45, 60, 90]`.
    pub angles_deg: Vec<f64>,
    /// Schedule row supplying `(ε, δ)`; `null` uses the last row.
    pub row: Option<usize>,
    /// Radius of the centred measuring disc, as a fraction of `side`. Default `0.35`.
    pub disc_radius: f64,
}

impl Default for IsotropyConfig {
    fn default() -> Self {
        Self {
            angles_deg: vec![0.0, 30.0, 45.0, 60.0, 90.0],
            row: None,
            disc_radius: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Default `csv`.
    pub format: Format,
    /// Record wall-clock times; when `false` the `wall_time_s` column is `0`. Default `false`.
    pub timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            timings: false,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| LabError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
