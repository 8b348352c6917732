use ndarray::{s, Array2};

use super::network::{Network, SequenceBatch};
use super::train::TrainedModel;
use crate::analysis::{min_laser_coloring, RepresentationSet};
use crate::dataset::{normalize, InputRow, Trajectory};
use crate::error::{Error, Result};

/// Sequences per forward call during evaluation and encoding.
const CHUNK_SEQUENCES: usize = 256;
/// Single-step rows per forward call for memoryless models.
const CHUNK_ROWS: usize = 4096;

/// Anything that maps a batch of input sequences to next-step predictions.
pub trait NextStepPredictor {
    /// Window length for recurrent models, `None` when every step is
    /// predicted from its own inputs only.
    fn window(&self) -> Option<usize>;
    fn predict(&self, batch: &SequenceBatch) -> Result<Array2<f64>>;
}

impl NextStepPredictor for Network {
    fn window(&self) -> Option<usize> {
        self.spec().window()
    }

    fn predict(&self, batch: &SequenceBatch) -> Result<Array2<f64>> {
        Ok(self.forward(batch, None)?.prediction)
    }
}

/// Predicts that the sensors stay as they are.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantPredictor;

impl NextStepPredictor for ConstantPredictor {
    fn window(&self) -> Option<usize> {
        None
    }

    fn predict(&self, batch: &SequenceBatch) -> Result<Array2<f64>> {
        Ok(batch.sensors().to_owned())
    }
}

/// Reads the answer from the batch targets.
#[derive(Clone, Copy, Debug, Default)]
pub struct OraclePredictor;

impl NextStepPredictor for OraclePredictor {
    fn window(&self) -> Option<usize> {
        None
    }

    fn predict(&self, batch: &SequenceBatch) -> Result<Array2<f64>> {
        batch
            .targets
            .clone()
            .ok_or_else(|| Error::InvalidArgument("oracle needs targets".into()))
    }
}

/// Start indices and per-sequence step count used to score `len` rows.
///
/// Recurrent models see consecutive windows of `w` rows (the trailing
/// partial window is dropped unless it is the only one); memoryless models
/// see every transition once.
pub(crate) fn scoring_plan(window: Option<usize>, len: usize) -> Vec<(Vec<usize>, usize)> {
    match window {
        Some(w) => {
            let full = len / w;
            if full == 0 {
                return vec![(vec![0], len - 1)];
            }
            let starts: Vec<usize> = (0..full).map(|k| k * w).collect();
            starts
                .chunks(CHUNK_SEQUENCES)
                .map(|c| (c.to_vec(), w - 1))
                .collect()
        }
        None => {
            let starts: Vec<usize> = (0..len - 1).collect();
            starts.chunks(CHUNK_ROWS).map(|c| (c.to_vec(), 1)).collect()
        }
    }
}

/// Sum of squared errors and number of scored values.
pub(crate) fn squared_error(model: &impl NextStepPredictor, rows: &[InputRow]) -> Result<(f64, usize)> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 records to score a prediction, got {}",
            rows.len()
        )));
    }
    let mut sse = 0.0;
    let mut count = 0;
    for (starts, steps) in scoring_plan(model.window(), rows.len()) {
        let batch = SequenceBatch::with_targets(rows, &starts, steps)?;
        let pred = model.predict(&batch)?;
        let targets = batch.targets.as_ref().expect("built with targets");
        if pred.dim() != targets.dim() {
            return Err(Error::ShapeMismatch(format!(
                "predictions {:?} for targets {:?}",
                pred.dim(),
                targets.dim()
            )));
        }
        sse += pred
            .iter()
            .zip(targets.iter())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>();
        count += pred.len();
    }
    Ok((sse, count))
}

/// Mean squared next-step error over `rows`, in normalized sensor units,
/// averaged over every scored prediction and sensor.
pub fn evaluate(model: &impl NextStepPredictor, rows: &[InputRow]) -> Result<f64> {
    let (sse, count) = squared_error(model, rows)?;
    Ok(sse / count as f64)
}

/// Sensory code z^s for every row. Recurrent models restart from a zero
/// state every `horizon` rows; a trailing partial window is encoded as a
/// shorter sequence.
pub fn encode_codes(net: &Network, rows: &[InputRow]) -> Result<Array2<f64>> {
    let dims = net.spec().sensory_code_dims;
    let mut codes = Array2::zeros((rows.len(), dims));
    if rows.is_empty() {
        return Ok(codes);
    }
    let mut plan: Vec<(Vec<usize>, usize)> = Vec::new();
    match net.spec().window() {
        Some(w) => {
            let full: Vec<usize> = (0..rows.len() / w).map(|k| k * w).collect();
            plan.extend(full.chunks(CHUNK_SEQUENCES).map(|c| (c.to_vec(), w)));
            let tail = rows.len() % w;
            if tail > 0 {
                plan.push((vec![rows.len() - tail], tail));
            }
        }
        None => {
            let all: Vec<usize> = (0..rows.len()).collect();
            plan.extend(all.chunks(CHUNK_ROWS).map(|c| (c.to_vec(), 1)));
        }
    }
    for (starts, steps) in plan {
        let batch = SequenceBatch::inputs_only(rows, &starts, steps)?;
        let pass = net.forward(&batch, None)?;
        for t in 0..steps {
            for (b, &start) in starts.iter().enumerate() {
                codes
                    .slice_mut(s![start + t, ..])
                    .assign(&pass.z_s.row(t * batch.batch + b));
            }
        }
    }
    Ok(codes)
}

/// Sensory codes of every step of `traj`, paired with the ground-truth
/// poses and the minimum sensor distance.
pub fn encode(model: &TrainedModel, traj: &Trajectory) -> Result<RepresentationSet> {
    let rows = normalize(&traj.stream())?;
    let codes = encode_codes(&model.network, &rows)?;
    RepresentationSet::new(
        traj.env_name.clone(),
        model.encoder_tag(),
        codes,
        traj.poses(),
        min_laser_coloring(traj),
    )
}
