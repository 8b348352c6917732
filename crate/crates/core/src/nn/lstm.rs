//! Stacked LSTM with full backpropagation through time over one window.
//!
//! Sequences are stored time-major in a single matrix: rows
//! `t * batch .. (t + 1) * batch` hold step `t` for every sequence in the
//! batch. Gate blocks are ordered input, forget, candidate, output.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Axis};

use super::params::{Init, ParamRef, Parameters};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LstmLayer {
    pub w_ih: ParamRef,
    pub w_hh: ParamRef,
    pub bias: ParamRef,
    pub inputs: usize,
    pub hidden: usize,
}

#[derive(Clone, Debug)]
pub struct LstmStack {
    pub layers: Vec<LstmLayer>,
}

/// Hidden and cell state per layer, each `batch × hidden`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<Array2<f64>>,
    pub c: Vec<Array2<f64>>,
}

impl LstmState {
    pub fn zeros(stack: &LstmStack, batch: usize) -> Self {
        let zeros = || {
            stack
                .layers
                .iter()
                .map(|l| Array2::zeros((batch, l.hidden)))
                .collect()
        };
        Self {
            h: zeros(),
            c: zeros(),
        }
    }

    pub fn batch(&self) -> usize {
        self.h.first().map_or(0, |h| h.nrows())
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: Array2<f64>,
    h0: Array2<f64>,
    c0: Array2<f64>,
    /// Activated gates, `T*B × 4H`.
    gates: Array2<f64>,
    cells: Array2<f64>,
    tanh_cells: Array2<f64>,
    outputs: Array2<f64>,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Clone, Debug)]
pub struct LstmCache {
    steps: usize,
    batch: usize,
    layers: Vec<LayerCache>,
}

impl LstmCache {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmStack {
    /// Registers `sizes.len()` layers; layer `l` reads the hidden state of
    /// layer `l - 1`.
    pub fn register(params: &mut Parameters, name: &str, inputs: usize, sizes: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(sizes.len());
        let mut fan_in = inputs;
        for (l, &hidden) in sizes.iter().enumerate() {
            let prefix = format!("{name}{l}");
            let w_ih = params.register_matrix(
                format!("{prefix}.w_ih"),
                4 * hidden,
                fan_in,
                Init::GlorotUniform {
                    fan_in,
                    fan_out: 4 * hidden,
                },
            );
            let w_hh = params.register_matrix(
                format!("{prefix}.w_hh"),
                4 * hidden,
                hidden,
                Init::GlorotUniform {
                    fan_in: hidden,
                    fan_out: 4 * hidden,
                },
            );
            let bias = params.register_vector(format!("{prefix}.bias"), 4 * hidden, Init::LstmBias { hidden });
            layers.push(LstmLayer {
                w_ih,
                w_hh,
                bias,
                inputs: fan_in,
                hidden,
            });
            fan_in = hidden;
        }
        Self { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.hidden)
    }

    /// Runs `steps` timesteps. `input` is `steps*batch × inputs`, time-major.
    /// Returns the top layer's hidden sequence and the final state.
    pub fn forward(
        &self,
        params: &[f64],
        input: ArrayView2<f64>,
        steps: usize,
        state: &LstmState,
    ) -> Result<(Array2<f64>, LstmState, LstmCache)> {
        let batch = state.batch();
        if steps == 0 || input.nrows() != steps * batch || input.ncols() != self.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "lstm input {:?} for {steps} steps of batch {batch} with {} features",
                input.dim(),
                self.inputs()
            )));
        }
        if state.h.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(&state.h)
                .zip(&state.c)
                .any(|((l, h), c)| h.dim() != (batch, l.hidden) || c.dim() != (batch, l.hidden))
        {
            return Err(Error::ShapeMismatch("lstm state does not match the stack".into()));
        }

        let mut caches = Vec::with_capacity(self.layers.len());
        let mut final_state = LstmState {
            h: Vec::with_capacity(self.layers.len()),
            c: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let cache = layer.forward(params, x, steps, batch, &state.h[l], &state.c[l]);
            let last = (steps - 1) * batch..steps * batch;
            final_state.h.push(cache.outputs.slice(s![last.clone(), ..]).to_owned());
            final_state.c.push(cache.cells.slice(s![last, ..]).to_owned());
            x = cache.outputs.clone();
            caches.push(cache);
        }
        Ok((
            x,
            final_state,
            LstmCache {
                steps,
                batch,
                layers: caches,
            },
        ))
    }

    /// Backpropagates `d_outputs` (gradient w.r.t. the top hidden sequence)
    /// through every step of the cached window, accumulating parameter
    /// gradients into `grads`. No gradient flows into the initial state.
    /// Returns the gradient w.r.t. the input sequence.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &LstmCache,
        d_outputs: ArrayView2<f64>,
        grads: &mut [f64],
    ) -> Result<Array2<f64>> {
        let rows = cache.steps * cache.batch;
        if cache.layers.len() != self.layers.len() || d_outputs.dim() != (rows, self.outputs()) {
            return Err(Error::ShapeMismatch(format!(
                "lstm backward: gradient {:?} does not match cached window of {} rows",
                d_outputs.dim(),
                rows
            )));
        }
        let mut d = d_outputs.to_owned();
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            d = layer.backward(params, lc, d.view(), cache.steps, cache.batch, grads);
        }
        Ok(d)
    }
}

impl LstmLayer {
    fn forward(
        &self,
        params: &[f64],
        input: Array2<f64>,
        steps: usize,
        batch: usize,
        h0: &Array2<f64>,
        c0: &Array2<f64>,
    ) -> LayerCache {
        let hid = self.hidden;
        let w_hh = self.w_hh.matrix(params);
        let bias = self.bias.vector(params);

        // Input contributions for every step at once.
        let mut gates = Array2::from_shape_fn((input.nrows(), 4 * hid), |(_, j)| bias[j]);
        general_mat_mul(1.0, &input, &self.w_ih.matrix(params).t(), 1.0, &mut gates);

        let mut cells = Array2::zeros((input.nrows(), hid));
        let mut tanh_cells = Array2::zeros((input.nrows(), hid));
        let mut outputs = Array2::zeros((input.nrows(), hid));

        for t in 0..steps {
            let rows = t * batch..(t + 1) * batch;
            {
                let mut pre = gates.slice_mut(s![rows.clone(), ..]);
                if t == 0 {
                    general_mat_mul(1.0, h0, &w_hh.t(), 1.0, &mut pre);
                } else {
                    let prev = outputs.slice(s![t * batch - batch..t * batch, ..]);
                    general_mat_mul(1.0, &prev, &w_hh.t(), 1.0, &mut pre);
                }
            }
            for b in 0..batch {
                let r = t * batch + b;
                let g = gates.row_mut(r).into_slice().expect("row-major");
                for v in &mut g[..2 * hid] {
                    *v = sigmoid(*v);
                }
                for v in &mut g[2 * hid..3 * hid] {
                    *v = v.tanh();
                }
                for v in &mut g[3 * hid..] {
                    *v = sigmoid(*v);
                }
                let g = gates.row(r);
                let g = g.as_slice().expect("row-major");
                for j in 0..hid {
                    let c_prev = if t == 0 {
                        c0[[b, j]]
                    } else {
                        cells[[r - batch, j]]
                    };
                    let c = g[hid + j] * c_prev + g[j] * g[2 * hid + j];
                    let tc = c.tanh();
                    cells[[r, j]] = c;
                    tanh_cells[[r, j]] = tc;
                    outputs[[r, j]] = g[3 * hid + j] * tc;
                }
            }
        }

        LayerCache {
            input,
            h0: h0.clone(),
            c0: c0.clone(),
            gates,
            cells,
            tanh_cells,
            outputs,
        }
    }

    fn backward(
        &self,
        params: &[f64],
        lc: &LayerCache,
        d_out: ArrayView2<f64>,
        steps: usize,
        batch: usize,
        grads: &mut [f64],
    ) -> Array2<f64> {
        let hid = self.hidden;
        let w_hh = self.w_hh.matrix(params);
        let mut d_pre = Array2::<f64>::zeros((steps * batch, 4 * hid));
        let mut dh_next = Array2::<f64>::zeros((batch, hid));
        let mut dc_next = Array2::<f64>::zeros((batch, hid));

        for t in (0..steps).rev() {
            for b in 0..batch {
                let r = t * batch + b;
                let g = lc.gates.row(r);
                let g = g.as_slice().expect("row-major");
                let mut da = d_pre.row_mut(r);
                let da = da.as_slice_mut().expect("row-major");
                for j in 0..hid {
                    let (i, f, cand, o) = (g[j], g[hid + j], g[2 * hid + j], g[3 * hid + j]);
                    let tc = lc.tanh_cells[[r, j]];
                    let c_prev = if t == 0 {
                        lc.c0[[b, j]]
                    } else {
                        lc.cells[[r - batch, j]]
                    };
                    let dh = d_out[[r, j]] + dh_next[[b, j]];
                    let dc = dc_next[[b, j]] + dh * o * (1.0 - tc * tc);
                    da[j] = dc * cand * i * (1.0 - i);
                    da[hid + j] = dc * c_prev * f * (1.0 - f);
                    da[2 * hid + j] = dc * i * (1.0 - cand * cand);
                    da[3 * hid + j] = dh * tc * o * (1.0 - o);
                    dc_next[[b, j]] = dc * f;
                }
            }
            if t > 0 {
                let da_t = d_pre.slice(s![t * batch..(t + 1) * batch, ..]);
                general_mat_mul(1.0, &da_t, &w_hh, 0.0, &mut dh_next);
            }
        }

        // Hidden state entering each step: h0, then outputs shifted by one.
        let mut h_prev = Array2::zeros((steps * batch, hid));
        h_prev.slice_mut(s![..batch, ..]).assign(&lc.h0);
        if steps > 1 {
            h_prev
                .slice_mut(s![batch.., ..])
                .assign(&lc.outputs.slice(s![..(steps - 1) * batch, ..]));
        }
        general_mat_mul(1.0, &d_pre.t(), &lc.input, 1.0, &mut self.w_ih.matrix_mut(grads));
        general_mat_mul(1.0, &d_pre.t(), &h_prev, 1.0, &mut self.w_hh.matrix_mut(grads));
        let mut db = self.bias.vector_mut(grads);
        db += &d_pre.sum_axis(Axis(0));
        d_pre.dot(&self.w_ih.matrix(params))
    }
}
