//! Frozen evaluation context shared by measures and exponents.
//!
//! A [`Scenario`] fixes the channel, the labeled constellation and the engine,
//! draws its sample sets once, and caches one [`MetricTable`] per metric
//! configuration. Every quantity computed from the same scenario therefore
//! uses common random numbers: differences between curves are paired.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::channel::Channel;
use crate::constellation::Alphabet;
use crate::error::{Error, Result};
use crate::metrics::{fill_rows, sum_metric_log_ratio, ExtrinsicModel, MetricKind, MetricScratch};
use crate::numerics::{estimate, lse, lse2, subchannel_stream, summarize, Engine, Estimate, SampleSet, MAIN_STREAM};
use crate::scalar::Scalar;

/// A metric family together with the law of its extrinsic side information.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec<T> {
    pub kind: MetricKind<T>,
    /// Ignored unless `kind` uses extrinsic information.
    pub extrinsic: ExtrinsicModel<T>,
}

impl<T: Scalar> MetricSpec<T> {
    pub fn new(kind: MetricKind<T>) -> Self {
        MetricSpec { kind, extrinsic: ExtrinsicModel::None }
    }

    pub fn with_extrinsic(kind: MetricKind<T>, extrinsic: ExtrinsicModel<T>) -> Self {
        MetricSpec { kind, extrinsic }
    }

    pub fn matched() -> Self {
        Self::new(MetricKind::Matched)
    }

    pub fn sum() -> Self {
        Self::new(MetricKind::BicmSum)
    }

    pub fn maxlog() -> Self {
        Self::new(MetricKind::BicmMaxLog)
    }

    pub fn extrinsic_tx(model: ExtrinsicModel<T>) -> Self {
        Self::with_extrinsic(MetricKind::ExtrinsicTx, model)
    }

    pub fn extrinsic_hyp(model: ExtrinsicModel<T>) -> Self {
        Self::with_extrinsic(MetricKind::ExtrinsicHyp, model)
    }

    fn key(&self) -> String {
        if self.kind.uses_extrinsic() {
            format!("{}/{}", self.kind, self.extrinsic.name())
        } else {
            self.kind.name()
        }
    }
}

impl<T: Scalar> From<MetricKind<T>> for MetricSpec<T> {
    fn from(kind: MetricKind<T>) -> Self {
        MetricSpec::new(kind)
    }
}

impl<T: Scalar> fmt::Display for MetricSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Symbol log-metrics `log q(x', y_i)` for every frozen trial `i` and hypothesis `x'`.
#[derive(Debug)]
pub struct MetricTable<T> {
    order: usize,
    bits: usize,
    symbols: Vec<usize>,
    rows: Vec<T>,
    /// `[i][j][b] = log q_j(b, y_i)` for bitwise metrics.
    bit_rows: Option<Vec<T>>,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> MetricTable<T> {
    pub(crate) fn build(
        kind: MetricKind<T>,
        model: &ExtrinsicModel<T>,
        channel: &Channel<T>,
        alphabet: &Alphabet<T>,
        set: &SampleSet<T>,
        normals: Option<&[T]>,
    ) -> Self {
        let order = alphabet.order();
        let bits = alphabet.bits();
        let n = set.len();
        let mut rows = vec![T::zero(); n * order];
        let mut bit_rows = kind.is_bitwise().then(|| vec![T::zero(); n * 2 * bits]);
        let trials = set.trials();
        let fill = |i: usize, row: &mut [T], bit_row: Option<&mut [T]>, scratch: &mut (MetricScratch<T>, Vec<T>)| {
            let trial = &trials[i];
            let (metric_scratch, ld) = scratch;
            for (x, slot) in ld.iter_mut().enumerate() {
                *slot = channel.log_density(&trial.obs, alphabet.point(x));
            }
            let ext = kind.uses_extrinsic().then(|| {
                let draws = normals.map(|v| &v[i * bits..(i + 1) * bits]).unwrap_or(&[]);
                model.realize(bits, draws)
            });
            fill_rows(kind, alphabet, ld, trial.symbol, ext.as_ref(), metric_scratch, row, bit_row);
        };
        let init = || (MetricScratch::new(alphabet), vec![T::zero(); order]);
        match bit_rows.as_mut() {
            Some(bit_rows) => rows
                .par_chunks_mut(order)
                .zip(bit_rows.par_chunks_mut(2 * bits))
                .enumerate()
                .for_each_init(init, |scratch, (i, (row, bit_row))| fill(i, row, Some(bit_row), scratch)),
            None => rows
                .par_chunks_mut(order)
                .enumerate()
                .for_each_init(init, |scratch, (i, row)| fill(i, row, None, scratch)),
        }
        MetricTable {
            order,
            bits,
            symbols: trials.iter().map(|t| t.symbol).collect(),
            rows,
            bit_rows,
            weights: set.weights().map(<[T]>::to_vec),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    #[inline]
    fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.order..(i + 1) * self.order]
    }

    pub fn has_bit_metrics(&self) -> bool {
        self.bit_rows.is_some()
    }

    fn log_order(&self) -> T {
        T::from_usize_lossy(self.order).ln()
    }

    /// `E[s log q(X,Y) − log Σ_{x'} 2^{-m} q(x',Y)^s]` in nats.
    pub fn gmi_at_s(&self, s: T) -> Estimate<T> {
        let log_order = self.log_order();
        estimate(self.len(), self.weights.as_deref(), |i| {
            let row = self.row(i);
            s * row[self.symbols[i]] - lse(row.iter().map(|&v| s * v)) + log_order
        })
    }

    /// Per-position terms `E[s log q_j(B_j,Y) − log ½ Σ_b q_j(b,Y)^s]` in nats, one per
    /// label bit, together with their sum. `None` unless the metric is bitwise.
    pub fn gmi_per_bit(&self, s: T, alphabet: &Alphabet<T>) -> Option<(Estimate<T>, Vec<Estimate<T>>)> {
        let bit_rows = self.bit_rows.as_ref()?;
        let m = self.bits;
        let ln2 = T::LN_2();
        let n = self.len();
        let terms: Vec<T> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let bits = &bit_rows[i * 2 * m..(i + 1) * 2 * m];
                let symbol = self.symbols[i];
                (0..m).map(move |j| {
                    let b = alphabet.bit(symbol, j) as usize;
                    s * bits[2 * j + b] - lse2(s * bits[2 * j], s * bits[2 * j + 1]) + ln2
                })
            })
            .collect();
        let weights = self.weights.as_deref();
        let per_bit = (0..m)
            .map(|j| {
                let column: Vec<T> = terms.iter().skip(j).step_by(m).copied().collect();
                summarize(&column, weights)
            })
            .collect();
        let totals: Vec<T> = terms.chunks(m).map(|c| c.iter().fold(T::zero(), |a, &v| a + v)).collect();
        Some((summarize(&totals, weights), per_bit))
    }

    /// Generalized Gallager function `−log E[(Σ_{x'} 2^{-m} (q(x',Y)/q(X,Y))^s)^ρ]` in nats.
    ///
    /// The standard error is propagated to first order as `SE(inner) / E[inner]`.
    pub fn e0(&self, rho: T, s: T) -> Estimate<T> {
        if rho == T::zero() {
            return Estimate::exact(T::zero(), self.len());
        }
        let log_order = self.log_order();
        let inner = estimate(self.len(), self.weights.as_deref(), |i| {
            let row = self.row(i);
            let own = row[self.symbols[i]];
            (rho * (lse(row.iter().map(|&v| s * (v - own))) - log_order)).exp()
        });
        gallager_from_inner(inner)
    }
}

pub(crate) fn gallager_from_inner<T: Scalar>(inner: Estimate<T>) -> Estimate<T> {
    Estimate { mean: -inner.mean.ln(), std_error: inner.std_error / inner.mean, n_effective: inner.n_effective }
}

/// Per-subchannel log metric ratios `log q_j(1−b,y') − log q_j(b,y')` of the
/// parallel-channel model, each drawn from its own independent sample set.
#[derive(Debug)]
pub(crate) struct ParallelTable<T> {
    ratios: Vec<Vec<T>>,
    weights: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> ParallelTable<T> {
    fn build(channel: &Channel<T>, alphabet: &Alphabet<T>, sets: &[SampleSet<T>]) -> Self {
        let order = alphabet.order();
        let ratios = sets
            .iter()
            .enumerate()
            .map(|(j, set)| {
                set.trials()
                    .par_iter()
                    .map_init(
                        || vec![T::zero(); order],
                        |ld, trial| {
                            for (x, slot) in ld.iter_mut().enumerate() {
                                *slot = channel.log_density(&trial.obs, alphabet.point(x));
                            }
                            sum_metric_log_ratio(alphabet, ld, j, alphabet.bit(trial.symbol, j))
                        },
                    )
                    .collect()
            })
            .collect();
        let weights = sets.iter().map(|s| s.weights().map(<[T]>::to_vec)).collect();
        ParallelTable { ratios, weights }
    }

    pub(crate) fn positions(&self) -> usize {
        self.ratios.len()
    }

    /// `E[f(ratio)]` over subchannel `j`.
    pub(crate) fn expect<F>(&self, j: usize, f: F) -> Estimate<T>
    where
        F: Fn(T) -> T + Sync,
    {
        let ratios = &self.ratios[j];
        estimate(ratios.len(), self.weights[j].as_deref(), |i| f(ratios[i]))
    }
}

/// Channel, alphabet and engine with their frozen samples and cached metric tables.
pub struct Scenario<T: Scalar> {
    channel: Channel<T>,
    alphabet: Alphabet<T>,
    engine: Engine,
    main: SampleSet<T>,
    normals: OnceLock<Vec<T>>,
    subchannels: OnceLock<Arc<ParallelTable<T>>>,
    tables: Mutex<HashMap<String, Arc<MetricTable<T>>>>,
    pub(crate) e0_memo: Mutex<HashMap<(String, u64), crate::exponents::GallagerValue<T>>>,
}

impl<T: Scalar> fmt::Debug for Scenario<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("channel", &self.channel)
            .field("alphabet", &self.alphabet.to_string())
            .field("engine", &self.engine)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> Scenario<T> {
    pub fn new(channel: Channel<T>, alphabet: Alphabet<T>, engine: Engine) -> Result<Self> {
        let main = engine.frozen_samples(&channel, &alphabet, MAIN_STREAM)?;
        Ok(Scenario {
            channel,
            alphabet,
            engine,
            main,
            normals: OnceLock::new(),
            subchannels: OnceLock::new(),
            tables: Mutex::new(HashMap::new()),
            e0_memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn channel(&self) -> &Channel<T> {
        &self.channel
    }

    pub fn alphabet(&self) -> &Alphabet<T> {
        &self.alphabet
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn samples(&self) -> &SampleSet<T> {
        &self.main
    }

    /// Cached metric table for `spec` over the main sample set.
    pub fn table(&self, spec: &MetricSpec<T>) -> Result<Arc<MetricTable<T>>> {
        let key = spec.key();
        if let Some(t) = self.tables.lock().expect("table cache").get(&key) {
            return Ok(Arc::clone(t));
        }
        let normals = if spec.kind.uses_extrinsic() {
            spec.extrinsic.check_bits(self.alphabet.bits())?;
            if spec.extrinsic.is_random() {
                if self.main.is_quadrature() {
                    return Err(Error::Unsupported(
                        "random extrinsic models need the Monte Carlo backend".into(),
                    ));
                }
                Some(self.normals.get_or_init(|| {
                    self.engine.extrinsic_normals(self.main.len(), self.alphabet.bits())
                }))
            } else {
                None
            }
        } else {
            None
        };
        let table = Arc::new(MetricTable::build(
            spec.kind,
            &spec.extrinsic,
            &self.channel,
            &self.alphabet,
            &self.main,
            normals.map(Vec::as_slice),
        ));
        self.tables.lock().expect("table cache").insert(key, Arc::clone(&table));
        Ok(table)
    }

    /// Parallel-channel tables, one independent sample set per label position.
    pub(crate) fn parallel_table(&self) -> Result<Arc<ParallelTable<T>>> {
        if let Some(t) = self.subchannels.get() {
            return Ok(Arc::clone(t));
        }
        let sets = (0..self.alphabet.bits())
            .map(|j| self.engine.frozen_samples(&self.channel, &self.alphabet, subchannel_stream(j)))
            .collect::<Result<Vec<_>>>()?;
        let table = Arc::new(ParallelTable::build(&self.channel, &self.alphabet, &sets));
        Ok(Arc::clone(self.subchannels.get_or_init(|| table)))
    }
}
