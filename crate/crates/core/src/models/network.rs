//! Forward and backward passes of the four predictive encoders.
//!
//! Batches are time-major like the LSTM: row `t * batch + b` is step `t` of
//! sequence `b`. Memoryless kinds treat every row independently.

use std::hash::{DefaultHasher, Hash, Hasher};

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::arch::ArchitectureSpec;
use crate::dataset::{InputRow, INPUT_DIMS};
use crate::error::{Error, Result};
use crate::nn::{
    gradient_check, mse_loss, Activation, Dense, GradCheckConfig, GradCheckReport, LossProbe, LstmCache, LstmStack,
    LstmState, Parameters, Tensor,
};
use crate::sim::SENSOR_COUNT;

/// Denominator floor for whole-network gradient checks. Central
/// differences at a step of 1e-5 carry about 3e-11 of absolute roundoff, so
/// smaller gradients are compared in absolute terms.
pub const NETWORK_GRADCHECK_FLOOR: f64 = 1e-5;

/// A batch of equally long input sequences with optional next-step targets.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceBatch {
    pub steps: usize,
    pub batch: usize,
    /// `steps*batch × 7`: normalized sensors then motor.
    pub inputs: Array2<f64>,
    /// `steps*batch × 5`: the normalized sensors one step later.
    pub targets: Option<Array2<f64>>,
}

impl SequenceBatch {
    /// Sequences `rows[start .. start + steps]` for each start, without
    /// targets.
    pub fn inputs_only(rows: &[InputRow], starts: &[usize], steps: usize) -> Result<Self> {
        Self::build(rows, starts, steps, false)
    }

    /// Sequences `rows[start .. start + steps]` with targets taken from
    /// `rows[start + 1 .. start + steps + 1]`.
    pub fn with_targets(rows: &[InputRow], starts: &[usize], steps: usize) -> Result<Self> {
        Self::build(rows, starts, steps, true)
    }

    fn build(rows: &[InputRow], starts: &[usize], steps: usize, targets: bool) -> Result<Self> {
        let needed = steps + usize::from(targets);
        if steps == 0 || starts.is_empty() {
            return Err(Error::InvalidArgument("empty sequence batch".into()));
        }
        if let Some(&bad) = starts.iter().find(|&&s| s + needed > rows.len()) {
            return Err(Error::InvalidArgument(format!(
                "sequence at {bad} of {needed} rows overruns {} available",
                rows.len()
            )));
        }
        let batch = starts.len();
        let inputs = Array2::from_shape_fn((steps * batch, INPUT_DIMS), |(r, j)| {
            rows[starts[r % batch] + r / batch][j]
        });
        let targets = targets.then(|| {
            Array2::from_shape_fn((steps * batch, SENSOR_COUNT), |(r, j)| {
                rows[starts[r % batch] + r / batch + 1][j]
            })
        });
        Ok(Self {
            steps,
            batch,
            inputs,
            targets,
        })
    }

    pub fn sensors(&self) -> ArrayView2<'_, f64> {
        self.inputs.slice(s![.., ..SENSOR_COUNT])
    }

    pub fn motors(&self) -> ArrayView2<'_, f64> {
        self.inputs.slice(s![.., SENSOR_COUNT..])
    }

    pub fn rows(&self) -> usize {
        self.steps * self.batch
    }
}

/// Codes and prediction of one step of one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedStep {
    pub z_s: Vec<f64>,
    pub z_m: Option<Vec<f64>>,
    pub z_sm: Vec<f64>,
    pub s_hat_next: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub steps: usize,
    pub batch: usize,
    sensory_acts: Vec<Array2<f64>>,
    lstm: Option<(Array2<f64>, LstmCache)>,
    pub z_s: Array2<f64>,
    motor_acts: Vec<Array2<f64>>,
    pub z_m: Option<Array2<f64>>,
    pub z_sm: Array2<f64>,
    predictor_act: Array2<f64>,
    pub prediction: Array2<f64>,
    pub final_state: Option<LstmState>,
}

impl ForwardPass {
    pub fn step(&self, t: usize, b: usize) -> EncodedStep {
        let r = t * self.batch + b;
        EncodedStep {
            z_s: self.z_s.row(r).to_vec(),
            z_m: self.z_m.as_ref().map(|z| z.row(r).to_vec()),
            z_sm: self.z_sm.row(r).to_vec(),
            s_hat_next: self.prediction.row(r).to_vec(),
        }
    }

    /// Steps of sequence `b` in order.
    pub fn sequence(&self, b: usize) -> Vec<EncodedStep> {
        (0..self.steps).map(|t| self.step(t, b)).collect()
    }

    /// Fingerprint of every ReLU on/off decision taken in this pass.
    pub fn relu_signature(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        for act in self
            .sensory_acts
            .iter()
            .chain(&self.motor_acts)
            .chain(std::iter::once(&self.predictor_act))
        {
            let mut word = 0u64;
            for (i, &v) in act.iter().enumerate() {
                word = (word << 1) | u64::from(v > 0.0);
                if i % 64 == 63 {
                    word.hash(&mut hasher);
                    word = 0;
                }
            }
            word.hash(&mut hasher);
        }
        hasher.finish()
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    spec: ArchitectureSpec,
    params: Parameters,
    sensory_hidden: Vec<Dense>,
    lstm: Option<LstmStack>,
    sensory_code: Dense,
    motor_hidden: Vec<Dense>,
    motor_code: Option<Dense>,
    predictor_hidden: Dense,
    predictor_output: Dense,
}

fn hidden_stack(params: &mut Parameters, prefix: &str, inputs: usize, sizes: &[usize]) -> (Vec<Dense>, usize) {
    let mut width = inputs;
    let layers = sizes
        .iter()
        .enumerate()
        .map(|(i, &out)| {
            let layer = Dense::register(params, &format!("{prefix}.hidden{i}"), width, out, Activation::Relu);
            width = out;
            layer
        })
        .collect();
    (layers, width)
}

impl Network {
    /// Registers every parameter and draws the initial values from `seed`.
    pub fn new(spec: ArchitectureSpec, seed: u64) -> Result<Self> {
        let mut net = Self::layout(spec)?;
        net.params.initialize(seed);
        Ok(net)
    }

    /// Builds the network and loads previously saved parameter values.
    pub fn from_tensors(spec: ArchitectureSpec, tensors: &[(String, Tensor)]) -> Result<Self> {
        let mut net = Self::layout(spec)?;
        net.params
            .load_tensors(tensors)
            .map_err(|e| Error::ArchitectureMismatch(e.to_string()))?;
        Ok(net)
    }

    fn layout(spec: ArchitectureSpec) -> Result<Self> {
        spec.validate()?;
        let mut params = Parameters::new();
        let (sensory_hidden, mut width) = hidden_stack(&mut params, "sensory", SENSOR_COUNT, &spec.sensory_hidden);
        let lstm = (!spec.lstm.is_empty()).then(|| {
            let stack = LstmStack::register(&mut params, "sensory.lstm", width, &spec.lstm);
            width = stack.outputs();
            stack
        });
        let sensory_code = Dense::register(
            &mut params,
            "sensory.code",
            width,
            spec.sensory_code_dims,
            Activation::Identity,
        );

        let (motor_hidden, motor_code) = if spec.kind.uses_motor() {
            let (layers, width) = hidden_stack(&mut params, "motor", INPUT_DIMS - SENSOR_COUNT, &spec.motor_hidden);
            let code = Dense::register(&mut params, "motor.code", width, spec.motor_code_dims, Activation::Identity);
            (layers, Some(code))
        } else {
            (Vec::new(), None)
        };

        let joint = spec.sensory_code_dims + motor_code.as_ref().map_or(0, |c| c.outputs);
        let predictor_hidden = Dense::register(
            &mut params,
            "predictor.hidden",
            joint,
            spec.predictor_hidden,
            Activation::Relu,
        );
        let predictor_output = Dense::register(
            &mut params,
            "predictor.output",
            spec.predictor_hidden,
            SENSOR_COUNT,
            Activation::Identity,
        );
        Ok(Self {
            spec,
            params,
            sensory_hidden,
            lstm,
            sensory_code,
            motor_hidden,
            motor_code,
            predictor_hidden,
            predictor_output,
        })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    /// Zeroed recurrent state for `batch` sequences; `None` for memoryless
    /// kinds.
    pub fn initial_state(&self, batch: usize) -> Option<LstmState> {
        self.lstm.as_ref().map(|l| LstmState::zeros(l, batch))
    }

    /// Runs the batch from `state`, or from a zeroed state when `None`.
    pub fn forward(&self, batch: &SequenceBatch, state: Option<&LstmState>) -> Result<ForwardPass> {
        self.forward_with(self.params.values(), batch, state)
    }

    /// Same as [`forward`](Self::forward) with an explicit parameter vector
    /// laid out like [`params`](Self::params).
    pub fn forward_with(&self, p: &[f64], batch: &SequenceBatch, state: Option<&LstmState>) -> Result<ForwardPass> {
        if p.len() != self.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "parameter vector of {} values for a network of {}",
                p.len(),
                self.params.len()
            )));
        }
        if batch.inputs.dim() != (batch.rows(), INPUT_DIMS) {
            return Err(Error::ShapeMismatch(format!("batch inputs {:?}", batch.inputs.dim())));
        }
        if state.is_some() && self.lstm.is_none() {
            return Err(Error::InvalidArgument(format!(
                "{} has no recurrent state",
                self.spec.kind
            )));
        }

        let mut sensory_acts: Vec<Array2<f64>> = Vec::with_capacity(self.sensory_hidden.len());
        for layer in &self.sensory_hidden {
            let y = match sensory_acts.last() {
                Some(x) => layer.forward(p, x.view())?,
                None => layer.forward(p, batch.sensors())?,
            };
            sensory_acts.push(y);
        }
        let mut final_state = None;
        let lstm = match &self.lstm {
            Some(stack) => {
                let zeros;
                let init = match state {
                    Some(s) => s,
                    None => {
                        zeros = LstmState::zeros(stack, batch.batch);
                        &zeros
                    }
                };
                let x = sensory_acts.last().map_or(batch.sensors(), |a| a.view());
                let (out, fin, cache) = stack.forward(p, x, batch.steps, init)?;
                final_state = Some(fin);
                Some((out, cache))
            }
            None => None,
        };
        let code_in = match (&lstm, sensory_acts.last()) {
            (Some((out, _)), _) => out.view(),
            (None, Some(a)) => a.view(),
            (None, None) => batch.sensors(),
        };
        let z_s = self.sensory_code.forward(p, code_in)?;

        let mut motor_acts: Vec<Array2<f64>> = Vec::with_capacity(self.motor_hidden.len());
        for layer in &self.motor_hidden {
            let y = match motor_acts.last() {
                Some(x) => layer.forward(p, x.view())?,
                None => layer.forward(p, batch.motors())?,
            };
            motor_acts.push(y);
        }
        let z_m = match &self.motor_code {
            Some(code) => Some(code.forward(p, motor_acts.last().map_or(batch.motors(), |a| a.view()))?),
            None => None,
        };
        let z_sm = match &z_m {
            Some(z_m) => concatenate(Axis(1), &[z_s.view(), z_m.view()]).expect("equal row counts"),
            None => z_s.clone(),
        };
        let predictor_act = self.predictor_hidden.forward(p, z_sm.view())?;
        let prediction = self.predictor_output.forward(p, predictor_act.view())?;

        Ok(ForwardPass {
            steps: batch.steps,
            batch: batch.batch,
            sensory_acts,
            lstm,
            z_s,
            motor_acts,
            z_m,
            z_sm,
            predictor_act,
            prediction,
            final_state,
        })
    }

    /// Gradient of a loss w.r.t. every parameter given dL/d(prediction).
    pub fn backward(&self, batch: &SequenceBatch, pass: &ForwardPass, d_prediction: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.backward_with(self.params.values(), batch, pass, d_prediction)
    }

    pub fn backward_with(
        &self,
        p: &[f64],
        batch: &SequenceBatch,
        pass: &ForwardPass,
        d_prediction: ArrayView2<f64>,
    ) -> Result<Vec<f64>> {
        if d_prediction.dim() != pass.prediction.dim() {
            return Err(Error::ShapeMismatch(format!(
                "prediction gradient {:?} for predictions {:?}",
                d_prediction.dim(),
                pass.prediction.dim()
            )));
        }
        let mut g = vec![0.0; self.params.len()];
        let d_act = self.predictor_output.backward(
            p,
            pass.predictor_act.view(),
            pass.prediction.view(),
            d_prediction,
            &mut g,
        )?;
        let d_sm = self
            .predictor_hidden
            .backward(p, pass.z_sm.view(), pass.predictor_act.view(), d_act.view(), &mut g)?;
        let code_dims = self.spec.sensory_code_dims;

        if let (Some(code), Some(z_m)) = (&self.motor_code, &pass.z_m) {
            let code_in = pass.motor_acts.last().map_or(batch.motors(), |a| a.view());
            let mut d = code.backward(p, code_in, z_m.view(), d_sm.slice(s![.., code_dims..]), &mut g)?;
            for (i, layer) in self.motor_hidden.iter().enumerate().rev() {
                let x = if i == 0 { batch.motors() } else { pass.motor_acts[i - 1].view() };
                d = layer.backward(p, x, pass.motor_acts[i].view(), d.view(), &mut g)?;
            }
        }

        let code_in = match (&pass.lstm, pass.sensory_acts.last()) {
            (Some((out, _)), _) => out.view(),
            (None, Some(a)) => a.view(),
            (None, None) => batch.sensors(),
        };
        let mut d = self
            .sensory_code
            .backward(p, code_in, pass.z_s.view(), d_sm.slice(s![.., ..code_dims]), &mut g)?;
        if let (Some(stack), Some((_, cache))) = (&self.lstm, &pass.lstm) {
            d = stack.backward(p, cache, d.view(), &mut g)?;
        }
        for (i, layer) in self.sensory_hidden.iter().enumerate().rev() {
            let x = if i == 0 { batch.sensors() } else { pass.sensory_acts[i - 1].view() };
            d = layer.backward(p, x, pass.sensory_acts[i].view(), d.view(), &mut g)?;
        }
        Ok(g)
    }

    /// Compares [`loss_and_gradient`](Self::loss_and_gradient) with central
    /// differences, skipping coordinates whose stencil flips a ReLU.
    pub fn check_gradients(&self, batch: &SequenceBatch, config: GradCheckConfig) -> Result<GradCheckReport> {
        let (_, analytic) = self.loss_and_gradient(batch)?;
        let targets = batch.targets.as_ref().expect("checked by loss_and_gradient");
        let mut failure = None;
        let report = gradient_check(&self.params, &analytic, config, |p| {
            let probe = self
                .forward_with(p, batch, None)
                .and_then(|pass| {
                    let (loss, _) = mse_loss(pass.prediction.view(), targets.view())?;
                    Ok(LossProbe {
                        loss,
                        signature: pass.relu_signature(),
                    })
                });
            probe.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                LossProbe::smooth(f64::NAN)
            })
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(report),
        }
    }

    /// Mean squared next-step error of the batch and its parameter gradient.
    pub fn loss_and_gradient(&self, batch: &SequenceBatch) -> Result<(f64, Vec<f64>)> {
        let targets = batch
            .targets
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("batch has no targets".into()))?;
        let pass = self.forward(batch, None)?;
        let (loss, d) = mse_loss(pass.prediction.view(), targets.view())?;
        let g = self.backward(batch, &pass, d.view())?;
        Ok((loss, g))
    }
}
