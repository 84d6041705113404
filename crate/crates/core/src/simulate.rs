//! Random-coding experiment with an exhaustive mismatched decoder.
//!
//! Every trial draws a fresh codebook of i.i.d. uniform symbols, sends a
//! uniformly chosen codeword and decodes by maximizing the accumulated symbol
//! log-metric over all codewords. Ties count as errors. The empirical error
//! rate is compared against `exp(−N E_r(R))`.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::Channel;
use crate::constellation::Alphabet;
use crate::error::{Error, Result};
use crate::exponents::{ExponentPoint, GallagerFamily, SMode};
use crate::metrics::{fill_rows, MetricKind, MetricScratch};
use crate::numerics::{stream_rng, Engine, SIMULATION_STREAM};
use crate::scalar::Scalar;
use crate::scenario::Scenario;

/// Largest `N·m` accepted.
pub const MAX_LABEL_BITS: usize = 24;
/// Largest `|M|·N·2^m` accepted, the per-trial decoding cost.
pub const MAX_WORK_PER_TRIAL: f64 = 1e8;
/// Trials per generator stream.
pub const BLOCK_TRIALS: u64 = 1024;
/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomCodeExperiment<T> {
    /// Block length `N` in channel symbols.
    pub block_length: usize,
    pub rate_bits: T,
    pub trials: u64,
    pub metric: MetricKind<T>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult<T> {
    /// `round(2^{NR})`.
    pub codewords: usize,
    pub errors: u64,
    pub trials: u64,
    pub error_rate: f64,
    /// Half-width of the 95% Wilson interval.
    pub ci_halfwidth: f64,
    /// Center of the Wilson interval.
    pub ci_center: f64,
    /// `exp(−N E_r(R))` at the effective rate `log2(|M|)/N`.
    pub bound: T,
    pub exponent: ExponentPoint<T>,
}

impl<T> SimulationResult<T> {
    pub fn ci_upper(&self) -> f64 {
        self.ci_center + self.ci_halfwidth
    }
}

impl<T: Scalar> SimulationResult<T> {
    /// The empirical error rate sits below the bound up to the interval half-width.
    pub fn respects_bound(&self) -> bool {
        self.error_rate <= self.bound.to_f64_lossy() + self.ci_halfwidth
    }
}

/// Wilson score interval `(center, half-width)` for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.5, 0.5);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center, half)
}

impl<T: Scalar> RandomCodeExperiment<T> {
    pub fn new(block_length: usize, rate_bits: T, trials: u64, metric: MetricKind<T>, seed: u64) -> Self {
        RandomCodeExperiment { block_length, rate_bits, trials, metric, seed }
    }

    /// Number of codewords, after checking the size guards.
    pub fn codewords(&self, bits: usize) -> Result<usize> {
        if self.block_length == 0 {
            return Err(Error::invalid("block length must be positive"));
        }
        if !(self.rate_bits >= T::zero() && self.rate_bits.is_finite()) {
            return Err(Error::invalid(format!("rate must be finite and nonnegative, got {}", self.rate_bits)));
        }
        if self.block_length * bits > MAX_LABEL_BITS {
            return Err(Error::invalid(format!(
                "N·m = {} exceeds {MAX_LABEL_BITS}",
                self.block_length * bits
            )));
        }
        let count = (T::from_usize_lossy(self.block_length) * self.rate_bits).to_f64_lossy().exp2().round();
        let work = count * self.block_length as f64 * (1u64 << bits) as f64;
        if work > MAX_WORK_PER_TRIAL {
            return Err(Error::invalid(format!("decoding cost {work:e} per trial exceeds {MAX_WORK_PER_TRIAL:e}")));
        }
        Ok(count as usize)
    }

    /// Runs the experiment; the exponent bound is evaluated on `scenario`.
    pub fn run_in(&self, scenario: &Scenario<T>) -> Result<SimulationResult<T>> {
        if self.metric.uses_extrinsic() {
            return Err(Error::Unsupported(format!("metric {} cannot be simulated", self.metric)));
        }
        let alphabet = scenario.alphabet();
        let codewords = self.codewords(alphabet.bits())?;
        let n = self.block_length;
        let effective_rate = if codewords > 1 {
            T::from_usize_lossy(codewords).log2() / T::from_usize_lossy(n)
        } else {
            T::zero()
        };
        let family = GallagerFamily::mismatched(self.metric, SMode::Optimize);
        let exponent = scenario.random_coding_exponent(&family, effective_rate)?;
        let bound = (-T::from_usize_lossy(n) * exponent.exponent).exp().min(T::one());
        let errors = if codewords < 2 {
            0
        } else {
            let blocks = self.trials.div_ceil(BLOCK_TRIALS);
            (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let count = BLOCK_TRIALS.min(self.trials - b * BLOCK_TRIALS);
                    self.run_block(scenario.channel(), alphabet, codewords, b, count)
                })
                .sum()
        };
        let (ci_center, ci_halfwidth) = wilson_interval(errors, self.trials, Z_95);
        Ok(SimulationResult {
            codewords,
            errors,
            trials: self.trials,
            error_rate: if self.trials == 0 { 0.0 } else { errors as f64 / self.trials as f64 },
            ci_halfwidth,
            ci_center,
            bound,
            exponent,
        })
    }

    fn run_block(&self, channel: &Channel<T>, alphabet: &Alphabet<T>, codewords: usize, block: u64, count: u64) -> u64 {
        let n = self.block_length;
        let order = alphabet.order();
        let mut rng = stream_rng(self.seed, SIMULATION_STREAM + block);
        let mut scratch = MetricScratch::new(alphabet);
        let mut codebook = vec![0usize; codewords * n];
        let mut rows = vec![T::zero(); n * order];
        let mut ld = vec![T::zero(); order];
        let mut errors = 0;
        for _ in 0..count {
            codebook.iter_mut().for_each(|c| *c = rng.random_range(0..order));
            let message = rng.random_range(0..codewords);
            for k in 0..n {
                let sent = codebook[message * n + k];
                let obs = channel.sample(alphabet.point(sent), &mut rng);
                for (x, slot) in ld.iter_mut().enumerate() {
                    *slot = channel.log_density(&obs, alphabet.point(x));
                }
                let row = &mut rows[k * order..(k + 1) * order];
                fill_rows(self.metric, alphabet, &ld, sent, None, &mut scratch, row, None);
            }
            let score = |w: usize| {
                (0..n).fold(T::zero(), |acc, k| acc + rows[k * order + codebook[w * n + k]])
            };
            let own = score(message);
            if (0..codewords).any(|w| w != message && score(w) >= own) {
                errors += 1;
            }
        }
        errors
    }
}

pub fn run<T: Scalar>(
    experiment: &RandomCodeExperiment<T>,
    channel: &Channel<T>,
    alphabet: &Alphabet<T>,
    engine: &Engine,
) -> Result<SimulationResult<T>> {
    experiment.run_in(&Scenario::new(*channel, alphabet.clone(), *engine)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Constellation;
    use crate::numerics::EngineConfig;

    fn qpsk_awgn(snr_db: f64) -> Scenario<f64> {
        let ch = Channel::from_db(crate::channel::ChannelKind::Awgn, snr_db).unwrap();
        let a = Alphabet::gray(Constellation::qam(4).unwrap()).unwrap();
        Scenario::new(ch, a, Engine::new(EngineConfig::monte_carlo(10_000, 1)).unwrap()).unwrap()
    }

    #[test]
    fn wilson_interval_properties() {
        let (c, h) = wilson_interval(0, 100, Z_95);
        assert!(c - h <= 1e-15 && c + h > 0.0 && c + h < 0.05);
        let (c, h) = wilson_interval(50, 100, Z_95);
        assert!((c - 0.5).abs() < 1e-12 && (h - 0.0962).abs() < 1e-3);
    }

    #[test]
    fn single_codeword_never_errs() {
        let sc = qpsk_awgn(0.0);
        let exp = RandomCodeExperiment::new(4, 0.0, 500, MetricKind::Matched, 3);
        let res = exp.run_in(&sc).unwrap();
        assert_eq!((res.codewords, res.errors, res.error_rate), (1, 0, 0.0));
    }

    #[test]
    fn guards_reject_oversized_codes() {
        let sc = qpsk_awgn(0.0);
        assert!(RandomCodeExperiment::new(13, 0.5, 1, MetricKind::Matched, 0).run_in(&sc).is_err());
        assert!(RandomCodeExperiment::new(12, 2.0, 1, MetricKind::Matched, 0).run_in(&sc).is_err());
        assert!(RandomCodeExperiment::new(0, 0.5, 1, MetricKind::Matched, 0).run_in(&sc).is_err());
        let ext = RandomCodeExperiment::new(2, 0.5, 1, MetricKind::ExtrinsicHyp, 0);
        assert!(matches!(ext.run_in(&sc), Err(Error::Unsupported(_))));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let sc = qpsk_awgn(3.0);
        let exp = RandomCodeExperiment::new(2, 1.0, 3000, MetricKind::BicmMaxLog, 9);
        let a = exp.run_in(&sc).unwrap();
        assert_eq!(a, exp.run_in(&sc).unwrap());
        assert!(a.errors > 0);
    }

    #[test]
    fn single_symbol_decoder_is_symbolwise_max() {
        // N = 1 with |M| = 4 QPSK codewords: an error iff another codeword's
        // symbol scores at least the sent one; codewords may repeat symbols.
        let sc = qpsk_awgn(6.0);
        let exp = RandomCodeExperiment::new(1, 2.0, 4000, MetricKind::Matched, 5);
        let res = exp.run_in(&sc).unwrap();
        assert_eq!(res.codewords, 4);
        // Repeated symbols alone give P(error) ≥ 1 − (3/4)^3.
        assert!(res.error_rate > 1.0 - 0.75f64.powi(3) - 0.03);
        assert!(res.respects_bound());
    }
}
