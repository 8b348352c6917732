use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ArchKind, TrainConfig};
use crate::nn::AdamConfig;
use crate::sim::Environment;

/// Size presets for a full reproduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Seconds; exercises every stage on tiny data.
    Smoke,
    /// 10^5 steps per environment.
    Desk,
    /// 10^6 steps per environment.
    Full,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(Scale::Smoke),
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::config("scale", format!("unknown scale `{s}` (smoke, desk or full)"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Smoke => "smoke",
            Scale::Desk => "desk",
            Scale::Full => "full",
        })
    }
}

/// One generated dataset: a layout identifier (or JSON wall file) and the
/// seed of its trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub layout: String,
    pub seed: u64,
}

/// Every random stream of a run has its own seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Parameter initialization, one per replicate.
    pub init: Vec<u64>,
    /// Training-order shuffling, one per replicate.
    pub shuffle: Vec<u64>,
    /// Cluster-report subsampling.
    pub sampling: u64,
    /// k-means seeding.
    pub kmeans: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSettings {
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_relative_improvement: f64,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            batch_size: t.batch_size,
            adam: t.adam,
            max_epochs: t.max_epochs,
            patience: t.patience,
            min_relative_improvement: t.min_relative_improvement,
        }
    }
}

impl TrainingSettings {
    pub fn train_config(&self, init_seed: u64, shuffle_seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            adam: self.adam,
            max_epochs: self.max_epochs,
            patience: self.patience,
            min_relative_improvement: self.min_relative_improvement,
            init_seed,
            shuffle_seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Architectures whose codes are projected, clustered and transferred.
    pub architectures: Vec<ArchKind>,
    pub k: usize,
    pub samples_per_cluster: usize,
    /// Clusters smaller than this are ignored when searching for a cluster
    /// that concentrates on a geometric feature.
    pub min_cluster_members: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Steps per generated trajectory.
    pub steps: usize,
    /// The first dataset trains every model; all of them are evaluated.
    pub datasets: Vec<DatasetConfig>,
    pub architectures: Vec<ArchKind>,
    pub seeds: Seeds,
    pub training: TrainingSettings,
    pub analysis: AnalysisSettings,
    /// Where artifacts go when no directory is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn preset(scale: Scale) -> Self {
        let datasets = [("square", 1), ("rooms1", 2), ("rooms2", 3)]
            .map(|(layout, seed)| DatasetConfig {
                layout: layout.into(),
                seed,
            })
            .to_vec();
        let (steps, replicates, training, analysis) = match scale {
            Scale::Smoke => (
                3_000,
                1,
                TrainingSettings {
                    max_epochs: 3,
                    ..TrainingSettings::default()
                },
                AnalysisSettings {
                    architectures: vec![ArchKind::S, ArchKind::RecurrentSm],
                    k: 5,
                    samples_per_cluster: 50,
                    min_cluster_members: 10,
                },
            ),
            Scale::Desk | Scale::Full => (
                if scale == Scale::Desk { 100_000 } else { 1_000_000 },
                3,
                TrainingSettings::default(),
                AnalysisSettings {
                    architectures: vec![ArchKind::S, ArchKind::Sm, ArchKind::RecurrentSm],
                    k: 20,
                    samples_per_cluster: 500,
                    min_cluster_members: 100,
                },
            ),
        };
        Self {
            name: scale.to_string(),
            steps,
            datasets,
            architectures: ArchKind::ALL.to_vec(),
            seeds: Seeds {
                init: (1..=replicates).map(|r| 10 + r).collect(),
                shuffle: (1..=replicates).map(|r| 20 + r).collect(),
                sampling: 7,
                kmeans: 5,
            },
            training,
            analysis,
            output_dir: None,
        }
    }

    pub fn replicates(&self) -> usize {
        self.seeds.init.len()
    }

    /// Checks every field and names the first offending one.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config("name", "must be a non-empty plain name"));
        }
        if self.steps < 100 {
            return Err(Error::config("steps", format!("must be at least 100, got {}", self.steps)));
        }
        if self.datasets.is_empty() {
            return Err(Error::config("datasets", "at least one dataset is required"));
        }
        let mut names = BTreeSet::new();
        for (i, d) in self.datasets.iter().enumerate() {
            let env = Environment::from_layout(&d.layout)
                .map_err(|e| Error::config(format!("datasets[{i}].layout"), e.to_string()))?;
            if !names.insert(env.name().to_string()) {
                return Err(Error::config(
                    format!("datasets[{i}].layout"),
                    format!("environment `{}` appears twice", env.name()),
                ));
            }
        }
        if self.architectures.is_empty() {
            return Err(Error::config("architectures", "at least one architecture is required"));
        }
        if self.architectures.iter().collect::<BTreeSet<_>>().len() != self.architectures.len() {
            return Err(Error::config("architectures", "duplicate architecture"));
        }
        if self.seeds.init.is_empty() {
            return Err(Error::config("seeds.init", "at least one replicate is required"));
        }
        if self.seeds.shuffle.len() != self.seeds.init.len() {
            return Err(Error::config(
                "seeds.shuffle",
                format!("needs one seed per replicate ({})", self.seeds.init.len()),
            ));
        }
        let t = &self.training;
        if t.batch_size == 0 {
            return Err(Error::config("training.batch_size", "must be positive"));
        }
        if t.max_epochs == 0 {
            return Err(Error::config("training.max_epochs", "must be positive"));
        }
        if t.patience == 0 {
            return Err(Error::config("training.patience", "must be positive"));
        }
        if !(0.0..1.0).contains(&t.min_relative_improvement) {
            return Err(Error::config("training.min_relative_improvement", "must lie in [0, 1)"));
        }
        if !(t.adam.lr.is_finite() && t.adam.lr > 0.0) {
            return Err(Error::config("training.adam.lr", "must be positive and finite"));
        }
        if !(0.0..1.0).contains(&t.adam.beta1) || !(0.0..1.0).contains(&t.adam.beta2) {
            return Err(Error::config("training.adam", "betas must lie in [0, 1)"));
        }
        if !(t.adam.eps > 0.0) {
            return Err(Error::config("training.adam.eps", "must be positive"));
        }
        let a = &self.analysis;
        if let Some(k) = a.architectures.iter().find(|k| !self.architectures.contains(k)) {
            return Err(Error::config(
                "analysis.architectures",
                format!("`{k}` is not among the trained architectures"),
            ));
        }
        if a.k == 0 || a.k > self.steps {
            return Err(Error::config("analysis.k", "must lie in [1, steps]"));
        }
        if a.samples_per_cluster == 0 {
            return Err(Error::config("analysis.samples_per_cluster", "must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_round_trip() {
        for scale in [Scale::Smoke, Scale::Desk, Scale::Full] {
            let c = RunConfig::preset(scale);
            c.validate().unwrap();
            assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
            assert_eq!(scale.to_string().parse::<Scale>().unwrap(), scale);
        }
        let desk = RunConfig::preset(Scale::Desk);
        assert_eq!(desk.steps, 100_000);
        assert_eq!(desk.replicates(), 3);
        assert_eq!(RunConfig::preset(Scale::Full).steps, 1_000_000);
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::Config { field, .. } => field,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let base = RunConfig::preset(Scale::Smoke);
        let mut c = base.clone();
        c.steps = 0;
        assert_eq!(field_of(c.validate().unwrap_err()), "steps");
        let mut c = base.clone();
        c.seeds.shuffle.pop();
        assert_eq!(field_of(c.validate().unwrap_err()), "seeds.shuffle");
        let mut c = base.clone();
        c.datasets[1].layout = "maze".into();
        assert_eq!(field_of(c.validate().unwrap_err()), "datasets[1].layout");
        let mut c = base.clone();
        c.architectures = vec![ArchKind::S];
        assert_eq!(field_of(c.validate().unwrap_err()), "analysis.architectures");
        let mut c = base;
        c.training.adam.lr = -1.0;
        assert_eq!(field_of(c.validate().unwrap_err()), "training.adam.lr");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::preset(Scale::Smoke).to_json()).unwrap();
        v["stepz"] = 5.into();
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Config { .. })));
    }
}
