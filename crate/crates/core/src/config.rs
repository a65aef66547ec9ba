//! Run configuration: a sectioned TOML file, validated when loaded.
//!
//! ```toml
//! seed = 7
//! observations = 2
//!
//! [kernel]
//! type = "linear_positive"
//! gain = 0.5
//!
//! [population]
//! n = 1000
//! mean_degree = 20.0
//!
//! [analysis]
//! bin_width = 0.05
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::AnalysisOptions;
use crate::dynamics::{Dynamics, Schedule, ScheduleKind, SourceMode};
use crate::error::{Error, Result};
use crate::generator::{HomophilySpec, PopulationSpec, NULL_MODEL_FRACTIONS};
use crate::kernels::{ActivationModel, InfluenceKernel, KernelShape, Prejudice};
use crate::observer::{LatentDrive, ObservedExperiment, ObserverSpec, SourcePlan, SubscriptionParams};

/// `[kernel]`: the shape's `type` and parameters plus optional
/// `stubborn` ids and a `prejudice` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct KernelSection {
    pub shape: KernelShape,
    pub stubborn: Vec<u32>,
    pub prejudice: Option<Prejudice>,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            shape: KernelShape::LinearPositive { gain: 0.5 },
            stubborn: Vec::new(),
            prejudice: None,
        }
    }
}

impl TryFrom<toml::Table> for KernelSection {
    type Error = String;

    fn try_from(mut t: toml::Table) -> std::result::Result<Self, String> {
        let stubborn = match t.remove("stubborn") {
            Some(v) => v.try_into().map_err(|e: toml::de::Error| format!("kernel.stubborn: {e}"))?,
            None => Vec::new(),
        };
        let prejudice = match t.remove("prejudice") {
            Some(v) => Some(v.try_into().map_err(|e: toml::de::Error| format!("kernel.prejudice: {e}"))?),
            None => None,
        };
        let shape = toml::Value::Table(t)
            .try_into()
            .map_err(|e: toml::de::Error| format!("kernel: {e}"))?;
        Ok(KernelSection {
            shape,
            stubborn,
            prejudice,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub kind: ScheduleKind,
    pub steps_per_observation: u32,
    pub source: SourceMode,
    pub clamp: bool,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            kind: ScheduleKind::Synchronous,
            steps_per_observation: 1,
            source: SourceMode::NeighborhoodMean,
            clamp: true,
        }
    }
}

/// One mean degree for everyone or one per group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanDegree {
    Uniform(f64),
    PerGroup([f64; 5]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSection {
    pub n: usize,
    pub group_fractions: [f64; 5],
    pub mean_degree: MeanDegree,
}

impl Default for PopulationSection {
    fn default() -> Self {
        PopulationSection {
            n: 1000,
            group_fractions: NULL_MODEL_FRACTIONS,
            mean_degree: MeanDegree::Uniform(20.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomophilySection {
    /// Same-group matching probability; ignored when a target is set.
    pub bias: f64,
    /// Calibrate the bias to reach this assortativity.
    pub target_assortativity: Option<f64>,
    pub tolerance: f64,
}

impl Default for HomophilySection {
    fn default() -> Self {
        HomophilySection {
            bias: 0.0,
            target_assortativity: None,
            tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverSection {
    pub noise: f64,
    pub min_subscriptions: usize,
    pub max_subscriptions: usize,
    /// Added to every source bias between observations.
    pub bias_drift: f64,
    pub warmup_rounds: u32,
}

impl Default for ObserverSection {
    fn default() -> Self {
        let o = ObserverSpec::default();
        ObserverSection {
            noise: o.noise,
            min_subscriptions: o.min_subscriptions,
            max_subscriptions: o.max_subscriptions,
            bias_drift: 0.0,
            warmup_rounds: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// `snapshot_<k>.csv` files and `edges.csv` in `dir`.
    Canonical,
    /// A wide opinion table plus an edge list, see [`crate::io::archive`].
    Wide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub dir: Option<PathBuf>,
    #[serde(default = "canonical")]
    pub format: DatasetFormat,
    pub opinions: Option<PathBuf>,
    pub edges: Option<PathBuf>,
}

fn canonical() -> DatasetFormat {
    DatasetFormat::Canonical
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_observations() -> usize {
    2
}

fn always_active() -> ActivationModel {
    ActivationModel::AlwaysActive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Mandatory; every random draw derives from it.
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Observation intervals after the initial snapshot.
    #[serde(default = "default_observations")]
    pub observations: usize,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default = "always_active")]
    pub activation: ActivationModel,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub homophily: HomophilySection,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub subscriptions: SubscriptionParams,
    #[serde(default)]
    pub sources: SourcePlan,
    pub drive: Option<LatentDrive>,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    pub dataset: Option<DatasetSection>,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative dataset paths are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(ds), Some(base)) = (cfg.dataset.as_mut(), path.parent()) {
            for p in [&mut ds.dir, &mut ds.opinions, &mut ds.edges].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Checks every section against its module's invariants. Failures are
    /// reported as configuration errors.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn check(&self) -> Result<()> {
        if self.observations == 0 {
            return Err(config_err("observations must be at least 1"));
        }
        self.kernel()?;
        self.activation.validate(None)?;
        if self.schedule.steps_per_observation == 0 {
            return Err(config_err("schedule.steps_per_observation must be positive"));
        }
        self.population_spec().validate()?;
        self.homophily_spec().validate()?;
        if let Some(t) = self.homophily.target_assortativity {
            if !(-1.0..=1.0).contains(&t) {
                return Err(config_err("homophily.target_assortativity must lie in [-1, 1]"));
            }
            if !(self.homophily.tolerance > 0.0) {
                return Err(config_err("homophily.tolerance must be positive"));
            }
        }
        self.observer_spec().validate()?;
        self.subscriptions.validate()?;
        if let Some(d) = &self.drive {
            d.validate()?;
        }
        if !(self.observer.bias_drift.abs() <= 1.0) {
            return Err(config_err("observer.bias_drift must lie in [-1, 1]"));
        }
        match &self.sources {
            SourcePlan::Grid { points, copies } => {
                crate::observer::source_grid(*points, *copies)?;
            }
            SourcePlan::Explicit { biases } => {
                if biases.is_empty() {
                    return Err(config_err("sources.biases is empty"));
                }
                crate::observer::sources_from_biases(biases)?;
            }
            SourcePlan::TrackLatent => {}
        }
        self.analysis.validate()?;
        if let Some(ds) = &self.dataset {
            match ds.format {
                DatasetFormat::Canonical if ds.dir.is_none() => {
                    return Err(config_err("dataset.dir is required for the canonical format"));
                }
                DatasetFormat::Wide if ds.opinions.is_none() || ds.edges.is_none() => {
                    return Err(config_err("dataset.opinions and dataset.edges are required for the wide format"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<InfluenceKernel> {
        let mut k = InfluenceKernel::new(self.kernel.shape.clone())?.with_stubborn(self.kernel.stubborn.iter().copied());
        if let Some(p) = &self.kernel.prejudice {
            p.validate(p.anchors.len())?;
            k = k.with_prejudice(p.clone());
        }
        Ok(k)
    }

    pub fn dynamics(&self) -> Result<Dynamics> {
        let schedule = Schedule {
            kind: self.schedule.kind,
            steps_per_observation: self.schedule.steps_per_observation,
            seed: self.seed,
        };
        Ok(Dynamics::new(self.kernel()?, self.activation.clone(), schedule)
            .with_source(self.schedule.source)
            .with_clamp(self.schedule.clamp))
    }

    pub fn population_spec(&self) -> PopulationSpec {
        let mean_degree = match self.population.mean_degree {
            MeanDegree::Uniform(d) => [d; 5],
            MeanDegree::PerGroup(d) => d,
        };
        PopulationSpec {
            n: self.population.n,
            group_fractions: self.population.group_fractions,
            mean_degree,
        }
    }

    pub fn homophily_spec(&self) -> HomophilySpec {
        HomophilySpec {
            bias: self.homophily.bias,
            target_assortativity: self.homophily.target_assortativity,
        }
    }

    pub fn observer_spec(&self) -> ObserverSpec {
        ObserverSpec {
            noise: self.observer.noise,
            min_subscriptions: self.observer.min_subscriptions,
            max_subscriptions: self.observer.max_subscriptions,
        }
    }

    pub fn experiment(&self) -> Result<ObservedExperiment> {
        Ok(ObservedExperiment {
            dynamics: self.dynamics()?,
            subscriptions: self.subscriptions,
            observer: self.observer_spec(),
            sources: self.sources.clone(),
            bias_drift: self.observer.bias_drift,
            drive: self.drive,
            warmup_rounds: self.observer.warmup_rounds,
            seed: self.seed,
        })
    }

    /// The effective configuration without the output location, as JSON.
    pub fn effective(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("output");
        }
        v
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.effective()).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_toml_str("seed = 3\n").unwrap();
        assert_eq!(c.kernel.shape, KernelShape::LinearPositive { gain: 0.5 });
        assert_eq!(c.analysis, AnalysisOptions::default());
        assert_eq!(c.observations, 2);
        assert_eq!(c.population.group_fractions, NULL_MODEL_FRACTIONS);
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(RunConfig::from_toml_str(""), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "seed = 1\ncolour = 3\n",
            "seed = 1\n[schedule]\nkindd = \"synchronous\"\n",
            "seed = 1\n[kernel]\ntype = \"linear_positive\"\ngain = 0.5\nextra = 1\n",
            "seed = 1\n[analysis]\nbins = 3\n",
        ] {
            let e = RunConfig::from_toml_str(text).unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{text}: {e:?}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "seed = 1\n[kernel]\ntype = \"linear_positive\"\ngain = 1.5\n",
            "seed = 1\n[analysis]\nbin_width = 0.3\n",
            "seed = 1\n[population]\nn = 1\n",
            "seed = 1\n[observer]\nnoise = -1.0\n",
            "seed = 1\nobservations = 0\n",
            "seed = 1\n[homophily]\nbias = 1.0\n",
        ] {
            let e = RunConfig::from_toml_str(text).unwrap_err();
            assert_eq!(e.category(), crate::error::ErrorCategory::Config, "{text}");
        }
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
seed = 11
observations = 3

[kernel]
type = "combined_positive_negative"
crossover = 0.4
positive_peak_distance = 0.2
positive_peak_gain = 0.5
negative_peak_distance = 0.6
negative_peak_gain = -0.3
cutoff = 0.9
stubborn = [0, 4]

[activation]
type = "abs_kernel_proportional"
scale = 2.0

[schedule]
kind = "asynchronous_uniform"
source = "random_neighbor"

[population]
n = 500
mean_degree = [20.0, 18.0, 15.0, 12.0, 10.0]

[homophily]
target_assortativity = 0.14

[observer]
noise = 0.05
min_subscriptions = 1

[subscriptions]
alpha = 8.0
beta = 4.0
threshold = 0.2

[sources]
type = "grid"
points = 11
copies = 2

[drive]
radius = 0.3
rate = 0.1

[analysis]
sigma_strata = [0.1, 0.2]
degree_strata = [5, 25]
"#;
        let c = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(c.kernel.stubborn, vec![0, 4]);
        assert_eq!(c.schedule.source, SourceMode::RandomNeighbor);
        assert_eq!(c.population_spec().mean_degree[1], 18.0);
        assert_eq!(c.sources, SourcePlan::Grid { points: 11, copies: 2 });
        assert!(c.experiment().is_ok());
    }

    #[test]
    fn hash_tracks_effective_parameters_only() {
        let a = RunConfig::from_toml_str("seed = 1\n").unwrap();
        let b = RunConfig::from_toml_str("seed = 1\noutput = \"elsewhere\"\n").unwrap();
        let c = RunConfig::from_toml_str("seed = 1\n[analysis]\nbin_width = 0.05\n").unwrap();
        let d = RunConfig::from_toml_str("seed = 2\n").unwrap();
        let e = RunConfig::from_toml_str("seed = 1\n[analysis]\nbin_width = 0.1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash(), c.hash());
        assert_ne!(a.hash(), d.hash());
        assert_ne!(a.hash(), e.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn relative_dataset_paths_follow_the_file() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("run.toml");
        fs::write(&p, "seed = 1\n[dataset]\ndir = \"data\"\n").unwrap();
        let c = RunConfig::load(&p).unwrap();
        assert_eq!(c.dataset.unwrap().dir.unwrap(), d.path().join("data"));
        assert!(matches!(RunConfig::load(&d.path().join("nope.toml")), Err(Error::Io { .. })));
    }
}
