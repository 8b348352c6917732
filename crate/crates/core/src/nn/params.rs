use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// How a parameter tensor is filled by [`Parameters::initialize`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    /// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    GlorotUniform { fan_in: usize, fan_out: usize },
    /// LSTM bias laid out as four gate blocks of `hidden`; the forget block
    /// (second) is set to 1, the rest to 0.
    LstmBias { hidden: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub init: Init,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Location of one tensor inside a flat parameter (or gradient) buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamRef {
    offset: usize,
    rows: usize,
    cols: usize,
}

impl ParamRef {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matrix<'a>(&self, buf: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &buf[self.offset..self.offset + self.len()])
            .expect("parameter layout")
    }

    pub fn matrix_mut<'a>(&self, buf: &'a mut [f64]) -> ArrayViewMut2<'a, f64> {
        let len = self.len();
        ArrayViewMut2::from_shape((self.rows, self.cols), &mut buf[self.offset..self.offset + len])
            .expect("parameter layout")
    }

    pub fn vector<'a>(&self, buf: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&buf[self.offset..self.offset + self.len()])
    }

    pub fn vector_mut<'a>(&self, buf: &'a mut [f64]) -> ArrayViewMut1<'a, f64> {
        let len = self.len();
        ArrayViewMut1::from(&mut buf[self.offset..self.offset + len])
    }
}

/// Every weight of a network in one flat buffer, addressed by named entries.
/// Gradients and optimizer moments share the same layout.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Parameters {
    entries: Vec<ParamEntry>,
    values: Vec<f64>,
}

impl Parameters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_matrix(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: Init) -> ParamRef {
        self.register(name.into(), vec![rows, cols], init);
        ParamRef {
            offset: self.values.len() - rows * cols,
            rows,
            cols,
        }
    }

    pub fn register_vector(&mut self, name: impl Into<String>, len: usize, init: Init) -> ParamRef {
        self.register(name.into(), vec![len], init);
        ParamRef {
            offset: self.values.len() - len,
            rows: len,
            cols: 1,
        }
    }

    fn register(&mut self, name: String, shape: Vec<usize>, init: Init) {
        debug_assert!(self.entries.iter().all(|e| e.name != name), "duplicate {name}");
        let offset = self.values.len();
        let entry = ParamEntry {
            name,
            shape,
            offset,
            init,
        };
        self.values.resize(offset + entry.len(), 0.0);
        self.entries.push(entry);
    }

    /// Fills every tensor according to its [`Init`], in registration order.
    pub fn initialize(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for entry in &self.entries {
            let slot = &mut self.values[entry.range()];
            match entry.init {
                Init::Zeros => slot.fill(0.0),
                Init::GlorotUniform { fan_in, fan_out } => {
                    let limit = glorot_limit(fan_in, fan_out);
                    for v in slot.iter_mut() {
                        *v = rng.random_range(-limit..=limit);
                    }
                }
                Init::LstmBias { hidden } => {
                    slot.fill(0.0);
                    slot[hidden..2 * hidden].fill(1.0);
                }
            }
        }
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn zeros_like(&self) -> Vec<f64> {
        vec![0.0; self.values.len()]
    }

    pub fn tensors(&self) -> Vec<(String, Tensor)> {
        self.entries
            .iter()
            .map(|e| {
                let t = Tensor::new(e.shape.clone(), self.values[e.range()].to_vec())
                    .expect("entry shape matches its slice");
                (e.name.clone(), t)
            })
            .collect()
    }

    /// Overwrites all values from named tensors with exactly this layout.
    pub fn load_tensors(&mut self, tensors: &[(String, Tensor)]) -> Result<()> {
        if tensors.len() != self.entries.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} tensors, found {}",
                self.entries.len(),
                tensors.len()
            )));
        }
        for (entry, (name, t)) in self.entries.iter().zip(tensors) {
            if &entry.name != name || entry.shape != t.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "expected `{}` {:?}, found `{name}` {:?}",
                    entry.name,
                    entry.shape,
                    t.shape()
                )));
            }
            self.values[entry.range()].copy_from_slice(t.values());
        }
        Ok(())
    }
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_views() {
        let mut p = Parameters::new();
        let w = p.register_matrix("w", 2, 3, Init::Zeros);
        let b = p.register_vector("b", 2, Init::Zeros);
        assert_eq!(p.len(), 8);
        p.values_mut().iter_mut().enumerate().for_each(|(i, v)| *v = i as f64);
        assert_eq!(w.matrix(p.values())[[1, 2]], 5.0);
        assert_eq!(b.vector(p.values())[1], 7.0);
        assert_eq!(p.entry("b").unwrap().offset, 6);
    }

    #[test]
    fn init_is_seeded_with_zero_and_forget_biases() {
        let build = || {
            let mut p = Parameters::new();
            p.register_matrix("w", 4, 4, Init::GlorotUniform { fan_in: 4, fan_out: 4 });
            p.register_vector("b", 8, Init::LstmBias { hidden: 2 });
            p.register_vector("c", 3, Init::Zeros);
            p
        };
        let (mut a, mut b) = (build(), build());
        a.initialize(7);
        b.initialize(7);
        assert_eq!(a, b);
        b.initialize(8);
        assert_ne!(a, b);
        assert_eq!(&a.values()[16..24], &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&a.values()[24..], &[0.0; 3]);
    }

    #[test]
    fn glorot_spread_matches_uniform_variance() {
        let mut p = Parameters::new();
        p.register_matrix("w", 128, 128, Init::GlorotUniform { fan_in: 128, fan_out: 128 });
        p.initialize(1);
        let n = p.len() as f64;
        let mean = p.values().iter().sum::<f64>() / n;
        let var = p.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        // Var of U(-a, a) is a²/3.
        let expected = glorot_limit(128, 128) / 3f64.sqrt();
        assert!((var.sqrt() / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn load_tensors_checks_layout() {
        let mut p = Parameters::new();
        p.register_matrix("w", 2, 2, Init::Zeros);
        let mut q = p.clone();
        q.values_mut()[3] = 1.5;
        p.load_tensors(&q.tensors()).unwrap();
        assert_eq!(p, q);
        let wrong = vec![("v".to_string(), Tensor::new(vec![2, 2], vec![0.0; 4]).unwrap())];
        assert!(p.load_tensors(&wrong).is_err());
    }
}
