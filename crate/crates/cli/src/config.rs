//! Run configurations: strict JSON, one shape per command. Unknown keys are
//! rejected so a config always means what it says.

use anyhow::{bail, Context, Result};
use osc_spectra::counterexample::BlockSpec;
use osc_spectra::potential::Potential;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Projections,
    BariMarkus,
    Hilbert,
    Weights,
    Counterexample,
    Katsnelson,
    Decay,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Projections => "projections",
            Command::BariMarkus => "bari-markus",
            Command::Hilbert => "hilbert",
            Command::Weights => "weights",
            Command::Counterexample => "counterexample",
            Command::Katsnelson => "katsnelson",
            Command::Decay => "decay",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum RunConfig {
    Spectrum(SpectrumConfig),
    Projections(ProjectionsConfig),
    BariMarkus(BariMarkusConfig),
    Hilbert(HilbertConfig),
    Weights(WeightsConfig),
    Counterexample(CounterexampleConfig),
    Katsnelson(KatsnelsonConfig),
    Decay(DecayConfig),
}

impl RunConfig {
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            RunConfig::Spectrum(c) => c.seed = seed,
            RunConfig::Projections(c) => c.seed = seed,
            RunConfig::BariMarkus(c) => c.seed = seed,
            RunConfig::Hilbert(c) => c.seed = seed,
            RunConfig::Weights(c) => c.seed = seed,
            RunConfig::Counterexample(c) => c.seed = seed,
            RunConfig::Katsnelson(c) => c.seed = seed,
            RunConfig::Decay(c) => c.seed = seed,
        }
    }

    pub fn output_dir(&self) -> &str {
        match self {
            RunConfig::Spectrum(c) => &c.output_dir,
            RunConfig::Projections(c) => &c.output_dir,
            RunConfig::BariMarkus(c) => &c.output_dir,
            RunConfig::Hilbert(c) => &c.output_dir,
            RunConfig::Weights(c) => &c.output_dir,
            RunConfig::Counterexample(c) => &c.output_dir,
            RunConfig::Katsnelson(c) => &c.output_dir,
            RunConfig::Decay(c) => &c.output_dir,
        }
    }

    pub fn set_output_dir(&mut self, dir: String) {
        match self {
            RunConfig::Spectrum(c) => c.output_dir = dir,
            RunConfig::Projections(c) => c.output_dir = dir,
            RunConfig::BariMarkus(c) => c.output_dir = dir,
            RunConfig::Hilbert(c) => c.output_dir = dir,
            RunConfig::Weights(c) => c.output_dir = dir,
            RunConfig::Counterexample(c) => c.output_dir = dir,
            RunConfig::Katsnelson(c) => c.output_dir = dir,
            RunConfig::Decay(c) => c.output_dir = dir,
        }
    }
}

/// Parse a config file: the `command` key picks the shape, every other key
/// must belong to that shape.
pub fn parse_config(text: &str, expected_command: &str) -> Result<RunConfig> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).context("config is not valid JSON")?;
    let obj = value
        .as_object_mut()
        .context("config must be a JSON object")?;
    let command = obj
        .remove("command")
        .context("config is missing the \"command\" field")?;
    let command: Command =
        serde_json::from_value(command).context("unknown command in config")?;
    if command.name() != expected_command {
        bail!(
            "config command \"{}\" does not match the CLI subcommand \"{}\"",
            command.name(),
            expected_command
        );
    }
    let rest = serde_json::Value::Object(obj.clone());
    let parse = |label: &str, v: serde_json::Value| -> Result<RunConfig> {
        Ok(match label {
            "spectrum" => RunConfig::Spectrum(serde_json::from_value(v)?),
            "projections" => RunConfig::Projections(serde_json::from_value(v)?),
            "bari-markus" => RunConfig::BariMarkus(serde_json::from_value(v)?),
            "hilbert" => RunConfig::Hilbert(serde_json::from_value(v)?),
            "weights" => RunConfig::Weights(serde_json::from_value(v)?),
            "counterexample" => RunConfig::Counterexample(serde_json::from_value(v)?),
            "katsnelson" => RunConfig::Katsnelson(serde_json::from_value(v)?),
            "decay" => RunConfig::Decay(serde_json::from_value(v)?),
            _ => unreachable!(),
        })
    };
    parse(command.name(), rest).with_context(|| format!("invalid {} config", command.name()))
}

fn default_seed() -> u64 {
    0
}
fn default_out() -> String {
    "out".into()
}
fn default_contour_nodes() -> usize {
    64
}
fn default_pk_radius() -> f64 {
    0.5
}
fn default_deviation_radius() -> f64 {
    0.25
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub potential: Potential,
    pub truncation_size: usize,
    #[serde(default = "default_true")]
    pub compute_trust: bool,
    /// Also write the assembled operator in the plain matrix format
    /// ("N rows complex" header, row-major re/im pairs).
    #[serde(default)]
    pub export_matrix: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionsConfig {
    pub potential: Potential,
    pub truncation_size: usize,
    pub profile_length: usize,
    #[serde(default = "default_contour_nodes")]
    pub contour_nodes: usize,
    #[serde(default = "default_pk_radius")]
    pub pk_radius: f64,
    #[serde(default = "default_deviation_radius")]
    pub deviation_radius: f64,
    /// Number of resolvent sample points outside the enclosure.
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    /// How many localized indices get the radius-1 kernel-integral check.
    #[serde(default = "default_kernel_checks")]
    pub kernel_checks: usize,
    /// How many localized modes get full projection matrices (norm bound).
    #[serde(default = "default_projection_checks")]
    pub projection_checks: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

fn default_scan_points() -> usize {
    200
}
fn default_kernel_checks() -> usize {
    5
}
fn default_projection_checks() -> usize {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorSpec {
    /// Hermite basis vector h_index.
    Basis { index: usize },
    /// Random real unit vector supported on the given leading mode count.
    Random { support: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BariMarkusConfig {
    pub potential: Potential,
    pub truncation_size: usize,
    pub profile_length: usize,
    pub vectors: Vec<VectorSpec>,
    #[serde(default = "default_contour_nodes")]
    pub contour_nodes: usize,
    #[serde(default = "default_deviation_radius")]
    pub deviation_radius: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSpec {
    Constant,
    Power { alpha: f64 },
    DyadicFromLinearPsi { ratio: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertConfig {
    pub truncation: usize,
    /// Constant pole shift applied in the perturbed transform.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_weight_spec")]
    pub weight: WeightSpec,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_columns")]
    pub columns: usize,
    /// Window for the averaged-product condition scan.
    #[serde(default)]
    pub a2_scan: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

fn default_tau() -> f64 {
    1.0 / 16.0
}
fn default_weight_spec() -> WeightSpec {
    WeightSpec::Constant
}
fn default_iterations() -> usize {
    250
}
fn default_columns() -> usize {
    16
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiSpec {
    /// ψ(k) = k + 1.
    Linear,
    /// ψ(k) = 2^k.
    Geometric,
    /// ψ from the reciprocal tail-sup of a computed ‖b h_k‖ profile.
    FromProfile {
        potential: Potential,
        profile_length: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub psi: PsiSpec,
    pub ratio: f64,
    pub k_max: usize,
    #[serde(default = "default_r_window")]
    pub r_sum_window: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

fn default_r_window() -> usize {
    256
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub t: f64,
    pub m_max: usize,
    /// Explicit k(m) values; defaults to k(m) = 2^{-m-1}.
    #[serde(default)]
    pub k_sequence: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

impl CounterexampleConfig {
    pub fn block_spec(&self) -> BlockSpec {
        match &self.k_sequence {
            Some(ks) => BlockSpec {
                t: self.t,
                k_values: ks.clone(),
            },
            None => BlockSpec::geometric(self.t, self.m_max),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatsnelsonConfig {
    pub rho_values: Vec<f64>,
    pub window: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub potential: Potential,
    pub profile_length: usize,
    pub fit_min: usize,
    pub fit_max: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}
