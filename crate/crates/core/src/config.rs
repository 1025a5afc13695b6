//! Declarative run configuration, read from TOML or JSON.
//!
//! A config names a model (dimension, potentials, reference measure) and
//! one section per command. Sections a command does not use are ignored.
//! The JSON schema lives in `schema/run-config.schema.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{DistanceSpec, TestFunctional};
use crate::measures::DiscreteMeasure;
use crate::potentials::{catalog_entries, ConfinementSpec, InteractionSpec, PotentialPair, ProbePlan};
use crate::reference::ReferenceMeasure;
use crate::sampler::InitSpec;
use crate::schedule::BetaSchedule;
use crate::variational::{GridSpec, MinimizeOptions, RateKind};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimize: Option<MinimizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplace: Option<LaplaceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionsSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub confinement: ConfinementSpec,
    pub interaction: InteractionSpec,
    pub reference: ReferenceMeasure,
}

impl ModelConfig {
    pub fn pair(&self) -> Result<PotentialPair> {
        if self.reference.dim() != self.dim {
            return Err(Error::config(
                "model.reference.dim",
                format!("reference has dimension {}, model has {}", self.reference.dim(), self.dim),
            ));
        }
        PotentialPair::new(
            self.dim,
            self.confinement.build(self.dim)?,
            self.interaction.build(self.dim)?,
        )
    }
}

fn default_step() -> f64 {
    0.5
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub n: usize,
    pub schedule: BetaSchedule,
    pub samples: usize,
    #[serde(default = "default_one")]
    pub chains: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub thinning: usize,
    #[serde(default = "default_init")]
    pub init: InitSpec,
}

fn default_init() -> InitSpec {
    InitSpec::Reference
}

/// Solver settings shared by `minimize`, `laplace` and `concentration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_tol() -> f64 {
    MinimizeOptions::default().tol
}

fn default_max_iter() -> usize {
    MinimizeOptions::default().max_iter
}

fn default_starts() -> usize {
    MinimizeOptions::default().starts
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            starts: default_starts(),
        }
    }
}

impl SolverSettings {
    pub fn options(&self, seed: u64) -> MinimizeOptions {
        MinimizeOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            starts: self.starts,
            seed,
            ..MinimizeOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeSection {
    pub rate: RateKind,
    /// Defaults to the atoms of a finite reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Linear tilt at the grid nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceSection {
    pub functional: TestFunctional,
    pub schedule: BetaSchedule,
    pub n: Vec<usize>,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Measure { measure: DiscreteMeasure },
    /// Minimizer of the given rate on a grid.
    Minimizer { rate: RateKind, grid: GridSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSection {
    pub schedule: BetaSchedule,
    pub n: Vec<usize>,
    pub target: TargetSpec,
    pub distance: DistanceSpec,
    pub chains: usize,
    pub samples_per_chain: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub thinning: usize,
    /// Proposal scale as an expression in `n`.
    pub step: BetaSchedule,
    #[serde(default)]
    pub solver: SolverSettings,
}

fn default_k_max() -> usize {
    8
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSection {
    pub nu: DiscreteMeasure,
    /// `psi_bar(x) = scale * |x|^power`.
    pub power: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_psi_power() -> f64 {
    1.0
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    /// `psi(x) = |x|^psi_power` for `d_psi`.
    #[serde(default = "default_psi_power")]
    pub psi_power: f64,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_assumption_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsSection {
    #[serde(default = "default_assumption_tol")]
    pub tol: f64,
    /// Probe points for the growth conditions; without it only the
    /// reference-measure checks run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbePlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
}

/// Written next to every run's outputs; loading it as a config reproduces
/// the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

fn to_json_value(text: &str, toml_format: bool) -> Result<serde_json::Value> {
    if toml_format {
        toml::from_str::<serde_json::Value>(text).map_err(|e| Error::config("<toml>", e.message().to_string()))
    } else {
        Ok(serde_json::from_str(text)?)
    }
}

fn from_value<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let field = e.path().to_string();
        Error::config(if field == "." { "<root>".into() } else { field }, e.into_inner().to_string())
    })
}

impl RunConfig {
    /// Parses TOML, or JSON when `toml_format` is false. A manifest is
    /// accepted too and yields its embedded config.
    pub fn parse(text: &str, toml_format: bool) -> Result<Self> {
        let v = to_json_value(text, toml_format)?;
        if v.get("manifest_version").is_some() {
            let m: Manifest = from_value(v)?;
            return Ok(m.config);
        }
        from_value(v)
    }

    /// Reads a `.toml` or `.json` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let toml_format = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse(&text, toml_format)
    }

    pub fn model(&self) -> Result<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| Error::config("model", "missing section"))
    }

    pub fn section<'a, T>(opt: &'a Option<T>, name: &str) -> Result<&'a T> {
        opt.as_ref().ok_or_else(|| Error::config(name, "missing section"))
    }
}

/// One line of the catalog listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogItem {
    pub name: &'static str,
    pub kind: &'static str,
    pub syntax: &'static str,
    pub description: &'static str,
}

/// Built-in potentials, schedules and metrics, sorted by kind then name.
pub fn catalog() -> Vec<CatalogItem> {
    let mut v: Vec<CatalogItem> = catalog_entries()
        .into_iter()
        .map(|e| CatalogItem {
            name: e.name,
            kind: e.kind,
            syntax: e.syntax,
            description: e.description,
        })
        .collect();
    let item = |name, kind, syntax, description| CatalogItem {
        name,
        kind,
        syntax,
        description,
    };
    v.extend([
        item("linear", "schedule", "n", "beta_n = n"),
        item("quadratic", "schedule", "n^2", "beta_n = n^2"),
        item("nlogn", "schedule", "n log n", "beta_n = n ln n"),
        item("expression", "schedule", "n^1.5", "any expression in n with ln, log, sqrt, exp"),
        item("bl", "metric", "{\"kind\":\"bl\"}", "bounded-Lipschitz distance"),
        item("psi", "metric", "{\"kind\":\"psi\",\"q\":1}", "d_bl plus |int psi dmu - int psi dnu|, psi = |x|^q"),
        item("wasserstein", "metric", "{\"kind\":\"wasserstein\",\"p\":2}", "optimal transport cost with |x-y|^p"),
    ]);
    v.sort_by(|a, b| (a.kind, a.name).cmp(&(b.kind, b.name)));
    v
}
