use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::Parameters;

/// A loss evaluation plus a fingerprint of the non-smooth branches taken
/// (for example the ReLU on/off pattern). Smooth models report 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossProbe {
    pub loss: f64,
    pub signature: u64,
}

impl LossProbe {
    pub fn smooth(loss: f64) -> Self {
        Self { loss, signature: 0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    pub step: f64,
    pub samples_per_tensor: usize,
    /// Lower bound on the denominator of the relative error.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            samples_per_tensor: 200,
            floor: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst parameter.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Coordinates whose ±step stencil crossed a kink and were not scored.
    pub skipped: usize,
}

/// Compares `analytic` against central finite differences of `probe` on a
/// random subsample of every tensor.
pub fn gradient_check<F>(
    params: &Parameters,
    analytic: &[f64],
    config: GradCheckConfig,
    mut probe: F,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> LossProbe,
{
    assert_eq!(analytic.len(), params.len(), "gradient layout");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut values = params.values().to_vec();
    let base = probe(&values).signature;
    let mut report = GradCheckReport::default();

    for entry in params.entries() {
        let n = entry.len();
        let picks: Vec<usize> = if n <= config.samples_per_tensor {
            (0..n).collect()
        } else {
            let mut v = sample(&mut rng, n, config.samples_per_tensor).into_vec();
            v.sort_unstable();
            v
        };
        for local in picks {
            let i = entry.offset + local;
            let orig = values[i];
            values[i] = orig + config.step;
            let plus = probe(&values);
            values[i] = orig - config.step;
            let minus = probe(&values);
            values[i] = orig;
            if plus.signature != base || minus.signature != base {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus.loss - minus.loss) / (2.0 * config.step);
            let a = analytic[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(config.floor);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((entry.name.clone(), local));
            }
        }
    }
    report
}
