//! Experiment documents: a common envelope around subcommand parameters.

use std::path::PathBuf;

use nonrad::decay_lab::Seed;
use nonrad::exterior_basis::{build_exterior_mode, ExteriorModeData, ModeSpec};
use nonrad::polylib::LemmaVariant;
use nonrad::radial_solver::{ExteriorKnowledge, RadialGridField, SolverConfig};
use nonrad::radiation3::Side;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct ExperimentConfig<T> {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub params: T,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct Tolerances {
    /// Cauchy tolerance for limits, relative to the data energy.
    pub stabilization: f64,
    /// Values at or below this count as zero.
    pub floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stabilization: 1e-3,
            floor: 1e-12,
        }
    }
}

/// Recursive merge: objects merge key by key, everything else is replaced.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

fn default_blend() -> usize {
    5
}

fn default_center() -> f64 {
    3.0
}

fn default_width() -> f64 {
    0.5
}

fn default_one() -> f64 {
    1.0
}

fn default_d3() -> usize {
    3
}

/// Initial data for the grid-based subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub enum DataSpec {
    /// Exterior basis element glued to a smooth interior.
    Mode {
        d: usize,
        #[serde(default)]
        nu: usize,
        radius: f64,
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<f64>,
        #[serde(default = "default_blend")]
        blend_order: usize,
    },
    /// Even Gaussian pair `amplitude (e^{-((r-c)/w)^2} + e^{-((r+c)/w)^2})`, velocity a multiple of it.
    Gaussian {
        #[serde(default = "default_d3")]
        d: usize,
        #[serde(default = "default_center")]
        center: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "default_one")]
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
    },
}

impl DataSpec {
    pub fn mode(&self) -> nonrad::Result<Option<ExteriorModeData>> {
        match self {
            DataSpec::Mode {
                d, nu, radius, a, b, ..
            } => Ok(Some(build_exterior_mode(
                ModeSpec::new(*d, *nu)?,
                *radius,
                a.clone(),
                b.clone(),
            )?)),
            DataSpec::Gaussian { .. } => Ok(None),
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            DataSpec::Mode { radius, .. } => Some(*radius),
            DataSpec::Gaussian { .. } => None,
        }
    }

    pub fn field(&self, config: &SolverConfig) -> nonrad::Result<RadialGridField> {
        match self {
            DataSpec::Mode { blend_order, .. } => {
                let mode = self.mode()?.expect("mode data");
                RadialGridField::from_mode(&mode, *blend_order, config)
            }
            &DataSpec::Gaussian {
                d,
                center,
                width,
                amplitude,
                velocity,
            } => {
                let bump =
                    move |r: f64| (-((r - center) / width).powi(2)).exp() + (-((r + center) / width).powi(2)).exp();
                RadialGridField::sample(
                    ModeSpec::radial(d)?,
                    config,
                    |r| amplitude * bump(r),
                    |r| velocity * bump(r),
                    ExteriorKnowledge::Unknown,
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub enum BasisCheck {
    /// Series norms against direct quadrature.
    Part2,
    /// Radial-derivative tail against the exterior energy.
    Part3,
}

fn default_nodes() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct BasisParams {
    pub d: usize,
    #[serde(default)]
    pub nu: usize,
    pub radius: f64,
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub checks: Vec<BasisCheck>,
    /// Radii for the tail check; `[2R]` when empty.
    #[serde(default)]
    pub r1: Vec<f64>,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct EvolveParams {
    pub data: DataSpec,
    pub solver: SolverConfig,
    #[serde(default)]
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct EnergyParams {
    pub data: DataSpec,
    pub solver: SolverConfig,
    /// Defaults to the exterior radius of mode data.
    #[serde(default)]
    pub cone_radius: Option<f64>,
    /// Also evaluate both sides of the channel identity (radial data in d = 3).
    #[serde(default)]
    pub channel: bool,
}

fn default_side() -> Side {
    Side::Minus
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct RadiationParams {
    pub data: DataSpec,
    pub solver: SolverConfig,
    #[serde(default = "default_side")]
    pub side: Side,
    /// Extract the field from a linear evolution as well.
    #[serde(default)]
    pub numeric: bool,
    #[serde(default)]
    pub tail_radii: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct NlwParams {
    pub data: DataSpec,
    pub solver: SolverConfig,
    #[serde(default)]
    pub probe_radii: Vec<f64>,
    #[serde(default)]
    pub duhamel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub enum VariantSelection {
    #[default]
    All,
    SupOdd,
    DerivOdd,
    SupEven,
    DerivEven,
}

impl VariantSelection {
    pub fn variants(self) -> Vec<LemmaVariant> {
        match self {
            VariantSelection::All => LemmaVariant::ALL.to_vec(),
            VariantSelection::SupOdd => vec![LemmaVariant::SupOdd],
            VariantSelection::DerivOdd => vec![LemmaVariant::DerivOdd],
            VariantSelection::SupEven => vec![LemmaVariant::SupEven],
            VariantSelection::DerivEven => vec![LemmaVariant::DerivEven],
        }
    }
}

fn default_degree() -> usize {
    15
}

fn default_trials() -> usize {
    1000
}

fn default_ratio() -> f64 {
    1e6
}

fn default_steps() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct RecursionRun {
    pub alpha: f64,
    pub l: f64,
    /// Defaults to half the limit exponent.
    #[serde(default)]
    pub gamma0: Option<f64>,
    #[serde(default = "default_ratio")]
    pub r_max_ratio: f64,
    /// Defaults to eight cells across the seed band.
    #[serde(default)]
    pub grid_ratio: Option<f64>,
    #[serde(default)]
    pub seed_kind: Seed,
    #[serde(default = "default_steps")]
    pub gamma_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct LemmasParams {
    #[serde(default)]
    pub variant: VariantSelection,
    #[serde(default = "default_degree")]
    pub degree_max: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub recursion: Option<RecursionRun>,
}

fn default_probe_ratio() -> f64 {
    2.0
}

fn default_probe_count() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
pub struct PipelineParams {
    pub data: DataSpec,
    pub solver: SolverConfig,
    /// Defaults to the exterior radius of mode data.
    #[serde(default)]
    pub radius: Option<f64>,
    /// First probe radius; `2R` by default.
    #[serde(default)]
    pub probe_start: Option<f64>,
    #[serde(default = "default_probe_ratio")]
    pub probe_ratio: f64,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
}
