use std::fs::{self, File};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::arch::ArchitectureSpec;
use super::eval::squared_error;
use super::network::{Network, SequenceBatch};
use crate::analysis::EncoderTag;
use crate::dataset::{normalize, DatasetSplits, InputRow, SensorimotorStream};
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, TensorFile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Windows per batch (recurrent) or transitions per batch (memoryless).
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub patience: usize,
    /// Fraction by which validation loss must drop below the reference.
    pub min_relative_improvement: f64,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            adam: AdamConfig::default(),
            max_epochs: 500,
            patience: 10,
            min_relative_improvement: 0.05,
            init_seed: 0,
            shuffle_seed: 0,
        }
    }
}

/// Normalized rows of one trajectory with its split.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub id: String,
    pub rows: Vec<InputRow>,
    pub splits: DatasetSplits,
}

impl TrainingSet {
    pub fn from_stream(stream: &SensorimotorStream) -> Result<Self> {
        Ok(Self {
            id: format!("{}-seed{}", stream.env_name, stream.seed),
            rows: normalize(stream)?,
            splits: DatasetSplits::for_len(stream.len())?,
        })
    }

    pub fn train_rows(&self) -> &[InputRow] {
        &self.rows[self.splits.train.clone()]
    }

    pub fn validation_rows(&self) -> &[InputRow] {
        &self.rows[self.splits.validation.clone()]
    }

    pub fn test_rows(&self) -> &[InputRow] {
        &self.rows[self.splits.test.clone()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Patience counter against a reference loss that only moves on a
/// sufficiently large improvement, plus the overall best epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    factor: f64,
    reference: Option<f64>,
    stale: usize,
    best: Option<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observation {
    /// Strictly lower than every earlier loss.
    pub new_best: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_relative_improvement: f64) -> Self {
        Self {
            patience,
            factor: 1.0 - min_relative_improvement,
            reference: None,
            stale: 0,
            best: None,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> Observation {
        match self.reference {
            Some(r) if val_loss >= self.factor * r => self.stale += 1,
            _ => {
                self.reference = Some(val_loss);
                self.stale = 0;
            }
        }
        let new_best = self.best.is_none_or(|(_, b)| val_loss < b);
        if new_best {
            self.best = Some((epoch, val_loss));
        }
        Observation {
            new_best,
            stop: self.stale >= self.patience,
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_id: String,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub network: Network,
    pub history: Vec<EpochRecord>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    spec: ArchitectureSpec,
    provenance: Provenance,
}

const CHECKPOINT_KIND: &str = "checkpoint";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const MODEL_INFO_FILE: &str = "model.json";

impl TrainedModel {
    pub fn spec(&self) -> &ArchitectureSpec {
        self.network.spec()
    }

    /// `<kind>/<dataset>/init<seed>/shuffle<seed>`.
    pub fn model_id(&self) -> String {
        format!(
            "{}/{}/init{}/shuffle{}",
            self.spec().kind,
            self.provenance.dataset_id,
            self.provenance.init_seed,
            self.provenance.shuffle_seed
        )
    }

    pub fn encoder_tag(&self) -> EncoderTag {
        EncoderTag {
            model_id: self.model_id(),
            kind: self.spec().kind,
            code_dims: self.spec().sensory_code_dims,
        }
    }

    /// Writes the checkpoint, the loss history and a readable summary.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = ModelMeta {
            spec: self.spec().clone(),
            provenance: self.provenance.clone(),
        };
        TensorFile {
            kind: CHECKPOINT_KIND.into(),
            meta: serde_json::to_string(&meta)?,
            tensors: self.network.params().tensors(),
        }
        .save(dir.join(CHECKPOINT_FILE))?;

        let path = dir.join(HISTORY_FILE);
        let mut w = csv::Writer::from_writer(File::create(&path).map_err(|e| Error::io(&path, e))?);
        for rec in &self.history {
            w.serialize(rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(MODEL_INFO_FILE);
        fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let file = TensorFile::load(dir.join(CHECKPOINT_FILE))?;
        if file.kind != CHECKPOINT_KIND {
            return Err(Error::Format {
                kind: "checkpoint",
                reason: format!("expected a checkpoint, found `{}`", file.kind),
            });
        }
        let meta: ModelMeta = serde_json::from_str(&file.meta)?;
        let network = Network::from_tensors(meta.spec, &file.tensors)?;

        let path = dir.join(HISTORY_FILE);
        let mut r = csv::Reader::from_path(&path)?;
        let history = r.deserialize().collect::<std::result::Result<Vec<EpochRecord>, _>>()?;
        Ok(Self {
            network,
            history,
            provenance: meta.provenance,
        })
    }
}

/// Start index and step count of every training sequence.
fn training_units(spec: &ArchitectureSpec, train: &std::ops::Range<usize>) -> (Vec<usize>, usize) {
    match spec.window() {
        Some(w) => {
            let n = train.len() / w;
            ((0..n).map(|k| train.start + k * w).collect(), w - 1)
        }
        None => ((train.start..train.end - 1).collect(), 1),
    }
}

/// Trains with Adam and early stopping on the validation split, returning
/// the parameters of the epoch with the lowest validation loss (earliest on
/// ties). `on_epoch` sees every finished epoch.
pub fn train(
    spec: &ArchitectureSpec,
    data: &TrainingSet,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainedModel> {
    if config.batch_size == 0 || config.max_epochs == 0 {
        return Err(Error::InvalidArgument(
            "batch size and epoch cap must be positive".into(),
        ));
    }
    let (mut units, steps) = training_units(spec, &data.splits.train);
    if units.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "training split of {} records holds no complete sequence",
            data.splits.train.len()
        )));
    }
    if data.splits.validation.len() < 2 {
        return Err(Error::InvalidArgument("validation split is too short".into()));
    }

    let mut net = Network::new(spec.clone(), config.init_seed)?;
    let mut adam = Adam::new(net.params().len(), config.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut stopper = EarlyStopping::new(config.patience, config.min_relative_improvement);
    let mut best_values = net.params().values().to_vec();
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        units.shuffle(&mut rng);
        let mut weighted = 0.0;
        let mut count = 0usize;
        for (b, starts) in units.chunks(config.batch_size).enumerate() {
            let batch = SequenceBatch::with_targets(&data.rows, starts, steps)?;
            let (loss, grads) = net.loss_and_gradient(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            adam.step(net.params_mut().values_mut(), &grads)?;
            let n = batch.rows();
            weighted += loss * n as f64;
            count += n;
        }
        let (sse, n) = squared_error(&net, data.validation_rows())?;
        let record = EpochRecord {
            epoch,
            train_loss: weighted / count as f64,
            val_loss: sse / n as f64,
        };
        if !record.val_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                batch: units.len().div_ceil(config.batch_size),
                loss: record.val_loss,
            });
        }
        on_epoch(&record);
        history.push(record);
        let obs = stopper.observe(epoch, record.val_loss);
        if obs.new_best {
            best_values.copy_from_slice(net.params().values());
        }
        if obs.stop {
            break;
        }
    }

    net.params_mut().values_mut().copy_from_slice(&best_values);
    let (best_epoch, best_val_loss) = stopper.best().expect("at least one epoch ran");
    Ok(TrainedModel {
        network: net,
        provenance: Provenance {
            dataset_id: data.id.clone(),
            init_seed: config.init_seed,
            shuffle_seed: config.shuffle_seed,
            epochs_run: history.len(),
            best_epoch,
            best_val_loss,
        },
        history,
    })
}
