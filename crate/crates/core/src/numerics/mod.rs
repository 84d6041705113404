//! Expectation engine and the numerical primitives beneath it.
//!
//! Every expectation in the crate is a weighted mean over a frozen
//! [`SampleSet`]: either a seeded Monte Carlo draw of `(x, h, z)` or a
//! Gauss–Hermite tensor grid over the two real noise axes combined with an
//! exact sum over the uniformly distributed symbols. Integrands are
//! evaluated data-parallel and reduced with a fixed pairwise tree, so a given
//! seed produces bit-identical results regardless of the number of workers.

mod optimize;
mod quadrature;

pub use optimize::{golden_section_max, Maximum};
pub use quadrature::gauss_hermite;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{Channel, ChannelKind, Observation};
use crate::constellation::Alphabet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 200_000;
/// Default Gauss–Hermite nodes per noise axis.
pub const DEFAULT_NODES: usize = 32;
/// Smallest Monte Carlo sample count accepted for a reported result.
pub const MIN_SAMPLES: usize = 1_000;
/// Smallest Gauss–Hermite rule accepted.
pub const MIN_NODES: usize = 8;

/// Stream of the main `(x, h, z)` sample set.
pub const MAIN_STREAM: u64 = 0;
/// Stream used for the independent output of label position `j` (zero-based).
pub const fn subchannel_stream(j: usize) -> u64 {
    1 + j as u64
}
/// Stream of the Gaussian variates behind extrinsic-information draws.
pub const EXTRINSIC_STREAM: u64 = 1 << 20;
/// First stream of the random-coding simulator; block `b` uses `SIMULATION_STREAM + b`.
pub const SIMULATION_STREAM: u64 = 1 << 32;

/// Seeded generator for one stream of a run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `log Σ exp(v_i)`, computed with a max shift.
///
/// Entries equal to `-∞` contribute nothing; an all `-∞` input yields `-∞`.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::invalid("log_sum_exp of an empty list"));
    }
    Ok(lse(values.iter().copied()))
}

/// Infallible log-sum-exp over a nonempty iterator.
#[inline]
pub(crate) fn lse<T: Scalar, I>(values: I) -> T
where
    I: Iterator<Item = T> + Clone,
{
    let max = values.clone().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || max == T::infinity() {
        return max;
    }
    let mut count = 0usize;
    let mut total = T::zero();
    for v in values {
        total = total + (v - max).exp();
        count += 1;
    }
    if count == 1 {
        return max;
    }
    max + total.ln()
}

/// `log(e^a + e^b)`.
#[inline]
pub(crate) fn lse2<T: Scalar>(a: T, b: T) -> T {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == T::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Sum with a fixed pairwise tree: the association order depends only on the length.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

/// Mean of an integrand with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    /// Sample standard deviation over `√n` for Monte Carlo; zero for quadrature.
    pub std_error: T,
    pub n_effective: usize,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(mean: T, n_effective: usize) -> Self {
        Estimate { mean, std_error: T::zero(), n_effective }
    }

    /// `√(a² + b²)`, the standard error of a difference of independent estimates.
    pub fn combined_error(&self, other: &Self) -> T {
        self.std_error.hypot(other.std_error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    MonteCarlo,
    GaussHermite,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::MonteCarlo => "monte_carlo",
            Backend::GaussHermite => "gauss_hermite",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monte_carlo" | "mc" => Ok(Backend::MonteCarlo),
            "gauss_hermite" | "gh" => Ok(Backend::GaussHermite),
            other => Err(Error::invalid(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EngineConfig {
    pub backend: Backend,
    pub samples: usize,
    pub nodes_per_axis: usize,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            backend: Backend::MonteCarlo,
            samples: DEFAULT_SAMPLES,
            nodes_per_axis: DEFAULT_NODES,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        EngineConfig { backend: Backend::MonteCarlo, samples, seed, ..Default::default() }
    }

    pub fn gauss_hermite(nodes_per_axis: usize) -> Self {
        EngineConfig { backend: Backend::GaussHermite, nodes_per_axis, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.backend {
            Backend::MonteCarlo if self.samples < MIN_SAMPLES => Err(Error::invalid(format!(
                "{} samples is below the minimum of {MIN_SAMPLES}",
                self.samples
            ))),
            Backend::GaussHermite if self.nodes_per_axis < MIN_NODES => Err(Error::invalid(format!(
                "{} Gauss–Hermite nodes is below the minimum of {MIN_NODES}",
                self.nodes_per_axis
            ))),
            _ => Ok(()),
        }
    }
}

/// One transmitted symbol and what the receiver saw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial<T> {
    pub symbol: usize,
    pub obs: Observation<T>,
}

/// Frozen draw of `(x, observation)` pairs with optional quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T> {
    trials: Vec<Trial<T>>,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> SampleSet<T> {
    /// Monte Carlo draw for one stream: symbols uniform over the alphabet.
    pub fn monte_carlo(
        channel: &Channel<T>,
        alphabet: &Alphabet<T>,
        count: usize,
        seed: u64,
        stream: u64,
    ) -> Self {
        let mut rng = stream_rng(seed, stream);
        let order = alphabet.order();
        let trials = (0..count)
            .map(|_| {
                let symbol = rng.random_range(0..order);
                let obs = channel.sample(alphabet.point(symbol), &mut rng);
                Trial { symbol, obs }
            })
            .collect();
        SampleSet { trials, weights: None }
    }

    /// Tensor Gauss–Hermite grid over the noise, exact uniform sum over symbols. AWGN only.
    pub fn gauss_hermite(channel: &Channel<T>, alphabet: &Alphabet<T>, nodes_per_axis: usize) -> Result<Self> {
        if channel.kind() != ChannelKind::Awgn {
            return Err(Error::Unsupported(format!(
                "Gauss–Hermite quadrature is only available for AWGN, not {}",
                channel.kind()
            )));
        }
        if nodes_per_axis < MIN_NODES {
            return Err(Error::invalid(format!("need at least {MIN_NODES} nodes per axis")));
        }
        // each noise component is N(0, 1/2), i.e. density exp(-t^2)/sqrt(pi)
        let (nodes, weights) = gauss_hermite(nodes_per_axis);
        let norm = std::f64::consts::PI * alphabet.order() as f64;
        let mut trials = Vec::with_capacity(alphabet.order() * nodes_per_axis * nodes_per_axis);
        let mut w = Vec::with_capacity(trials.capacity());
        let h = Complex::new(T::one(), T::zero());
        for symbol in 0..alphabet.order() {
            let mean = channel.mean(&Observation { y: h, h }, alphabet.point(symbol));
            for (a, wa) in nodes.iter().zip(&weights) {
                for (b, wb) in nodes.iter().zip(&weights) {
                    let z = Complex::new(T::lit(*a), T::lit(*b));
                    trials.push(Trial { symbol, obs: Observation { y: mean + z, h } });
                    w.push(T::lit(wa * wb / norm));
                }
            }
        }
        Ok(SampleSet { trials, weights: Some(w) })
    }

    pub fn trials(&self) -> &[Trial<T>] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn is_quadrature(&self) -> bool {
        self.weights.is_some()
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    /// Expectation of `f` over the set.
    pub fn expect<F>(&self, f: F) -> Estimate<T>
    where
        F: Fn(&Trial<T>) -> T + Sync,
    {
        estimate(self.trials.len(), self.weights(), |i| f(&self.trials[i]))
    }
}

/// Weighted mean of `f(0..n)`; unweighted Monte Carlo mean when `weights` is `None`.
pub(crate) fn estimate<T, F>(n: usize, weights: Option<&[T]>, f: F) -> Estimate<T>
where
    T: Scalar,
    F: Fn(usize) -> T + Sync,
{
    let values: Vec<T> = (0..n).into_par_iter().map(&f).collect();
    summarize(&values, weights)
}

pub(crate) fn summarize<T: Scalar>(values: &[T], weights: Option<&[T]>) -> Estimate<T> {
    let n = values.len();
    match weights {
        Some(w) => {
            let weighted: Vec<T> = values.iter().zip(w).map(|(&v, &w)| v * w).collect();
            let mean = pairwise_sum(&weighted) / pairwise_sum(w);
            Estimate::exact(mean, n)
        }
        None => {
            let count = T::from_usize_lossy(n);
            let mean = pairwise_sum(values) / count;
            let std_error = if n > 1 {
                let dev: Vec<T> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
                (pairwise_sum(&dev) / T::from_usize_lossy(n - 1) / count).sqrt()
            } else {
                T::zero()
            };
            Estimate { mean, std_error, n_effective: n }
        }
    }
}

/// Handle that turns an [`EngineConfig`] into frozen sample sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Engine {
    config: EngineConfig,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Engine { config })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Frozen sample set for one stream. Deterministic in (seed, channel, alphabet, count, stream).
    ///
    /// Quadrature grids do not depend on the stream.
    pub fn frozen_samples<T: Scalar>(
        &self,
        channel: &Channel<T>,
        alphabet: &Alphabet<T>,
        stream: u64,
    ) -> Result<SampleSet<T>> {
        match self.config.backend {
            Backend::MonteCarlo => Ok(SampleSet::monte_carlo(
                channel,
                alphabet,
                self.config.samples,
                self.config.seed,
                stream,
            )),
            Backend::GaussHermite => SampleSet::gauss_hermite(channel, alphabet, self.config.nodes_per_axis),
        }
    }

    /// `E[f(x, observation)]` over the main stream.
    pub fn expect<T, F>(&self, channel: &Channel<T>, alphabet: &Alphabet<T>, f: F) -> Result<Estimate<T>>
    where
        T: Scalar,
        F: Fn(&Trial<T>) -> T + Sync,
    {
        Ok(self.frozen_samples(channel, alphabet, MAIN_STREAM)?.expect(f))
    }

    /// `count * per_trial` standard normal variates from the extrinsic stream.
    pub fn extrinsic_normals<T: Scalar>(&self, count: usize, per_trial: usize) -> Vec<T> {
        let mut rng = stream_rng(self.config.seed, EXTRINSIC_STREAM);
        (0..count * per_trial).map(|_| T::standard_normal(&mut rng)).collect()
    }
}
