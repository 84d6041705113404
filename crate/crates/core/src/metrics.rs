//! Decoding metrics, all evaluated in the log domain.
//!
//! | kind            | symbol metric `log q(x', y)`                                   |
//! |-----------------|----------------------------------------------------------------|
//! | `Matched`       | `log p(y|x')`                                                  |
//! | `MatchedPower`  | `t · log p(y|x')`                                              |
//! | `BicmSum`       | `Σ_j log Σ_{x''∈X_{b_j(x')}^j} p(y|x'')`                        |
//! | `BicmMaxLog`    | `Σ_j log max_{x''∈X_{b_j(x')}^j} p(y|x'')`                      |
//! | `ExtrinsicTx`   | bit metrics weighted by extrinsic priors relative to the transmitted symbol |
//! | `ExtrinsicHyp`  | bit metrics weighted by extrinsic priors relative to the hypothesis `x'`     |
//!
//! With extrinsic side information the `j`-th bit metric is
//! `q_j(b, y) = Σ_{x''∈X_b^j} p(y|x'') Π_{j'≠j} ext_{j'}(b_{j'}(x'') ⊕ b_{j'}(r))`
//! where the reference `r` is the transmitted symbol (`ExtrinsicTx`) or the
//! hypothesized symbol itself (`ExtrinsicHyp`). `ext_j(0)` is therefore the
//! probability that bit `j` agrees with the reference.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{Channel, Observation};
use crate::constellation::Alphabet;
use crate::error::{Error, Result};
use crate::numerics::lse;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind<T> {
    Matched,
    /// `q(x, y) = p(y|x)^t`, a metric proportional to a power of the likelihood.
    MatchedPower(T),
    BicmSum,
    BicmMaxLog,
    ExtrinsicTx,
    ExtrinsicHyp,
}

impl<T: Scalar> MetricKind<T> {
    pub fn uses_extrinsic(&self) -> bool {
        matches!(self, MetricKind::ExtrinsicTx | MetricKind::ExtrinsicHyp)
    }

    /// The symbol metric is a product of bit metrics that do not depend on the hypothesis.
    pub fn is_bitwise(&self) -> bool {
        matches!(self, MetricKind::BicmSum | MetricKind::BicmMaxLog | MetricKind::ExtrinsicTx)
    }

    /// The metric of a hypothesis depends on which symbol was transmitted.
    pub fn depends_on_transmitted(&self) -> bool {
        matches!(self, MetricKind::ExtrinsicTx)
    }

    pub fn name(&self) -> String {
        match self {
            MetricKind::Matched => "matched".into(),
            MetricKind::MatchedPower(t) => format!("power:{t}"),
            MetricKind::BicmSum => "sum".into(),
            MetricKind::BicmMaxLog => "maxlog".into(),
            MetricKind::ExtrinsicTx => "ext-tx".into(),
            MetricKind::ExtrinsicHyp => "ext-hyp".into(),
        }
    }
}

impl<T: Scalar> fmt::Display for MetricKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl<T: Scalar> FromStr for MetricKind<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "matched" => MetricKind::Matched,
            "sum" | "bicm_sum" => MetricKind::BicmSum,
            "maxlog" | "bicm_maxlog" => MetricKind::BicmMaxLog,
            "ext-tx" | "extrinsic_tx" => MetricKind::ExtrinsicTx,
            "ext-hyp" | "extrinsic_hyp" => MetricKind::ExtrinsicHyp,
            other => {
                let t = other
                    .strip_prefix("power:")
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|t| *t > 0.0 && t.is_finite())
                    .ok_or_else(|| Error::invalid(format!("unknown metric {other:?}")))?;
                MetricKind::MatchedPower(T::lit(t))
            }
        })
    }
}

/// Extrinsic priors for one symbol, relative to a reference label.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrinsicRealization<T> {
    log_agree: Vec<T>,
    log_disagree: Vec<T>,
}

impl<T: Scalar> ExtrinsicRealization<T> {
    /// From `ext_j(0)` values, each in `[0, 1]`.
    pub fn new(ext_zero: &[T]) -> Result<Self> {
        if let Some(v) = ext_zero.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::invalid(format!("extrinsic probability {v} outside [0, 1]")));
        }
        Ok(ExtrinsicRealization {
            log_agree: ext_zero.iter().map(|p| p.ln()).collect(),
            log_disagree: ext_zero.iter().map(|p| (T::one() - *p).ln()).collect(),
        })
    }

    /// No side information: every prior is one half.
    pub fn uninformative(bits: usize) -> Self {
        let half = -T::LN_2();
        ExtrinsicRealization { log_agree: vec![half; bits], log_disagree: vec![half; bits] }
    }

    /// Side information that always names the reference bit.
    pub fn perfect(bits: usize) -> Self {
        ExtrinsicRealization { log_agree: vec![T::zero(); bits], log_disagree: vec![T::neg_infinity(); bits] }
    }

    /// From consistent log-likelihood ratios `L_j` in favour of the reference bit.
    pub fn from_llrs(llrs: &[T]) -> Self {
        // ext(agree) = 1/(1+e^-L); both logs via softplus to avoid cancellation
        let softplus = |v: T| if v > T::zero() { v + (-v).exp().ln_1p() } else { v.exp().ln_1p() };
        ExtrinsicRealization {
            log_agree: llrs.iter().map(|&l| -softplus(-l)).collect(),
            log_disagree: llrs.iter().map(|&l| -softplus(l)).collect(),
        }
    }

    pub fn bits(&self) -> usize {
        self.log_agree.len()
    }

    /// `ext_j(0)`: probability that bit `j` equals the reference bit.
    pub fn ext_zero(&self, j: usize) -> T {
        self.log_agree[j].exp()
    }

    /// `ext_j(b)` for the relative bit value `b`.
    pub fn ext(&self, j: usize, b: u8) -> T {
        if b == 0 {
            self.log_agree[j].exp()
        } else {
            self.log_disagree[j].exp()
        }
    }

    #[inline]
    fn log_weight(&self, j: usize, agree: bool) -> T {
        if agree {
            self.log_agree[j]
        } else {
            self.log_disagree[j]
        }
    }
}

/// Distribution of the extrinsic priors, independent across label positions.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtrinsicModel<T> {
    None,
    Perfect,
    /// Consistent Gaussian LLRs: `L_j ~ N(σ_j²/2, σ_j²)` in favour of the reference bit.
    /// Holds either one shared `σ` or one per label position.
    GaussianLlr { sigma: Vec<T> },
}

impl<T: Scalar> ExtrinsicModel<T> {
    pub fn gaussian_llr(sigma: Vec<T>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::invalid("gaussian_llr needs at least one sigma"));
        }
        if let Some(s) = sigma.iter().find(|s| !(**s >= T::zero() && s.is_finite())) {
            return Err(Error::invalid(format!("sigma must be finite and nonnegative, got {s}")));
        }
        Ok(ExtrinsicModel::GaussianLlr { sigma })
    }

    pub fn is_random(&self) -> bool {
        matches!(self, ExtrinsicModel::GaussianLlr { .. })
    }

    fn sigma(&self, j: usize) -> T {
        match self {
            ExtrinsicModel::GaussianLlr { sigma } if sigma.len() == 1 => sigma[0],
            ExtrinsicModel::GaussianLlr { sigma } => sigma[j],
            _ => T::zero(),
        }
    }

    pub fn check_bits(&self, bits: usize) -> Result<()> {
        match self {
            ExtrinsicModel::GaussianLlr { sigma } if sigma.len() != 1 && sigma.len() != bits => {
                Err(Error::invalid(format!("{} sigmas given for {bits} label positions", sigma.len())))
            }
            _ => Ok(()),
        }
    }

    /// Realization from `bits` standard normal variates (ignored by the deterministic models).
    pub fn realize(&self, bits: usize, normals: &[T]) -> ExtrinsicRealization<T> {
        match self {
            ExtrinsicModel::None => ExtrinsicRealization::uninformative(bits),
            ExtrinsicModel::Perfect => ExtrinsicRealization::perfect(bits),
            ExtrinsicModel::GaussianLlr { .. } => {
                let two = T::lit(2.0);
                let llrs: Vec<T> = (0..bits)
                    .map(|j| {
                        let s = self.sigma(j);
                        s * s / two + s * normals[j]
                    })
                    .collect();
                ExtrinsicRealization::from_llrs(&llrs)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ExtrinsicModel::None => "none".into(),
            ExtrinsicModel::Perfect => "perfect".into(),
            ExtrinsicModel::GaussianLlr { sigma } => {
                let list: Vec<String> = sigma.iter().map(|s| s.to_string()).collect();
                format!("gaussian:{}", list.join("/"))
            }
        }
    }
}

impl<T: Scalar> FromStr for ExtrinsicModel<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ExtrinsicModel::None),
            "perfect" => Ok(ExtrinsicModel::Perfect),
            other => {
                let list = other
                    .strip_prefix("gaussian:")
                    .ok_or_else(|| Error::invalid(format!("unknown extrinsic model {other:?}")))?;
                let sigma = list
                    .split('/')
                    .map(|v| v.parse::<f64>().map(T::lit))
                    .collect::<std::result::Result<Vec<T>, _>>()
                    .map_err(|_| Error::invalid(format!("bad sigma list {list:?}")))?;
                ExtrinsicModel::gaussian_llr(sigma)
            }
        }
    }
}

/// Draws one extrinsic realization for an `bits`-bit label.
pub fn draw_extrinsic<T: Scalar, R: Rng + ?Sized>(
    model: &ExtrinsicModel<T>,
    bits: usize,
    rng: &mut R,
) -> Result<ExtrinsicRealization<T>> {
    model.check_bits(bits)?;
    let normals: Vec<T> = if model.is_random() {
        (0..bits).map(|_| T::standard_normal(rng)).collect()
    } else {
        Vec::new()
    };
    Ok(model.realize(bits, &normals))
}

/// A metric family bound to a channel and a labeled constellation.
#[derive(Debug, Clone)]
pub struct DecodingMetric<'a, T> {
    kind: MetricKind<T>,
    channel: &'a Channel<T>,
    alphabet: &'a Alphabet<T>,
    extrinsic: Option<ExtrinsicRealization<T>>,
}

impl<'a, T: Scalar> DecodingMetric<'a, T> {
    pub fn new(kind: MetricKind<T>, channel: &'a Channel<T>, alphabet: &'a Alphabet<T>) -> Self {
        DecodingMetric { kind, channel, alphabet, extrinsic: None }
    }

    /// Attaches an extrinsic realization; only the extrinsic kinds accept one.
    pub fn with_extrinsic(mut self, extrinsic: ExtrinsicRealization<T>) -> Result<Self> {
        if !self.kind.uses_extrinsic() {
            return Err(Error::Configuration(format!("metric {} takes no extrinsic information", self.kind)));
        }
        if extrinsic.bits() != self.alphabet.bits() {
            return Err(Error::invalid("extrinsic realization has the wrong number of bits"));
        }
        self.extrinsic = Some(extrinsic);
        Ok(self)
    }

    pub fn kind(&self) -> MetricKind<T> {
        self.kind
    }

    pub fn alphabet(&self) -> &Alphabet<T> {
        self.alphabet
    }

    /// `log p(y|x)` for every point.
    pub fn log_densities(&self, obs: &Observation<T>, out: &mut [T]) {
        for (x, slot) in out.iter_mut().enumerate() {
            *slot = self.channel.log_density(obs, self.alphabet.point(x));
        }
    }

    fn densities(&self, obs: &Observation<T>) -> Vec<T> {
        let mut ld = vec![T::zero(); self.alphabet.order()];
        self.log_densities(obs, &mut ld);
        ld
    }

    /// `log Σ_{x∈X_b^j} p(y|x)` for zero-based position `j`.
    pub fn log_bit_metric_sum(&self, j: usize, b: u8, obs: &Observation<T>) -> T {
        let ld = self.densities(obs);
        lse(self.alphabet.subset(j, b).iter().map(|&x| ld[x]))
    }

    /// `log max_{x∈X_b^j} p(y|x)` for zero-based position `j`.
    pub fn log_bit_metric_maxlog(&self, j: usize, b: u8, obs: &Observation<T>) -> T {
        let ld = self.densities(obs);
        self.alphabet.subset(j, b).iter().map(|&x| ld[x]).fold(T::neg_infinity(), T::max)
    }

    /// Bit log-metric ratio `log q_j(1, y) − log q_j(0, y)` for the sum or max-log metric.
    pub fn llr(&self, j: usize, obs: &Observation<T>) -> Result<T> {
        match self.kind {
            MetricKind::BicmSum => Ok(self.log_bit_metric_sum(j, 1, obs) - self.log_bit_metric_sum(j, 0, obs)),
            MetricKind::BicmMaxLog => {
                Ok(self.log_bit_metric_maxlog(j, 1, obs) - self.log_bit_metric_maxlog(j, 0, obs))
            }
            other => Err(Error::Unsupported(format!("bit LLRs are defined for sum and maxlog, not {other}"))),
        }
    }

    /// `log q(x, y)` for hypothesis `x`. `transmitted` is required by `ExtrinsicTx` only.
    pub fn log_symbol_metric(&self, x: usize, obs: &Observation<T>, transmitted: Option<usize>) -> Result<T> {
        let mut row = vec![T::zero(); self.alphabet.order()];
        self.symbol_row(obs, transmitted, &mut row)?;
        Ok(row[x])
    }

    /// `log q(x', y)` for every hypothesis `x'`.
    pub fn symbol_row(&self, obs: &Observation<T>, transmitted: Option<usize>, row: &mut [T]) -> Result<()> {
        let ld = self.densities(obs);
        let mut scratch = MetricScratch::new(self.alphabet);
        let tx = match (self.kind.depends_on_transmitted(), transmitted) {
            (true, None) => {
                return Err(Error::Configuration(format!(
                    "metric {} needs the transmitted symbol",
                    self.kind
                )))
            }
            (_, tx) => tx.unwrap_or(0),
        };
        let ext = match (self.kind.uses_extrinsic(), &self.extrinsic) {
            (true, None) => {
                return Err(Error::Configuration(format!(
                    "metric {} needs an extrinsic realization",
                    self.kind
                )))
            }
            (_, ext) => ext.as_ref(),
        };
        fill_rows(self.kind, self.alphabet, &ld, tx, ext, &mut scratch, row, None);
        Ok(())
    }
}

/// Reusable per-thread buffers for [`fill_rows`].
pub(crate) struct MetricScratch<T> {
    bit: Vec<T>,
}

impl<T: Scalar> MetricScratch<T> {
    pub(crate) fn new(alphabet: &Alphabet<T>) -> Self {
        MetricScratch { bit: vec![T::zero(); 2 * alphabet.bits()] }
    }
}

/// Sum or max-log bit metrics from log densities, laid out as `[j][b]`.
pub(crate) fn plain_bit_metrics<T: Scalar>(
    maxlog: bool,
    alphabet: &Alphabet<T>,
    ld: &[T],
    out: &mut [T],
) {
    for j in 0..alphabet.bits() {
        for b in 0..2u8 {
            let members = alphabet.subset(j, b).iter().map(|&x| ld[x]);
            out[2 * j + b as usize] =
                if maxlog { members.fold(T::neg_infinity(), T::max) } else { lse(members) };
        }
    }
}

/// `log q_j(b, y)` with extrinsic weights relative to `reference`.
fn extrinsic_bit_metric<T: Scalar>(
    alphabet: &Alphabet<T>,
    ld: &[T],
    ext: &ExtrinsicRealization<T>,
    reference: usize,
    j: usize,
    b: u8,
) -> T {
    let m = alphabet.bits();
    let ref_bits = alphabet.bits_of(reference);
    let terms = alphabet.subset(j, b).iter().map(|&x| {
        let bits = alphabet.bits_of(x);
        let mut w = ld[x];
        for k in (0..m).filter(|&k| k != j) {
            w = w + ext.log_weight(k, bits[k] == ref_bits[k]);
        }
        w
    });
    lse(terms)
}

/// Fills `row[x'] = log q(x', y)` and, for bitwise metrics when requested,
/// `bit_row[2j + b] = log q_j(b, y)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fill_rows<T: Scalar>(
    kind: MetricKind<T>,
    alphabet: &Alphabet<T>,
    ld: &[T],
    transmitted: usize,
    ext: Option<&ExtrinsicRealization<T>>,
    scratch: &mut MetricScratch<T>,
    row: &mut [T],
    bit_row: Option<&mut [T]>,
) {
    let m = alphabet.bits();
    match kind {
        MetricKind::Matched => row.copy_from_slice(ld),
        MetricKind::MatchedPower(t) => {
            for (r, &l) in row.iter_mut().zip(ld) {
                *r = t * l;
            }
        }
        MetricKind::BicmSum | MetricKind::BicmMaxLog | MetricKind::ExtrinsicTx => {
            let bits = &mut scratch.bit;
            match kind {
                MetricKind::ExtrinsicTx => {
                    let ext = ext.expect("extrinsic realization");
                    for j in 0..m {
                        for b in 0..2u8 {
                            bits[2 * j + b as usize] = extrinsic_bit_metric(alphabet, ld, ext, transmitted, j, b);
                        }
                    }
                }
                _ => plain_bit_metrics(kind == MetricKind::BicmMaxLog, alphabet, ld, bits),
            }
            for (x, r) in row.iter_mut().enumerate() {
                let label = alphabet.bits_of(x);
                *r = (0..m).fold(T::zero(), |acc, j| acc + bits[2 * j + label[j] as usize]);
            }
            if let Some(out) = bit_row {
                out.copy_from_slice(bits);
            }
        }
        MetricKind::ExtrinsicHyp => {
            let ext = ext.expect("extrinsic realization");
            for (x, r) in row.iter_mut().enumerate() {
                let label = alphabet.bits_of(x);
                *r = (0..m).fold(T::zero(), |acc, j| acc + extrinsic_bit_metric(alphabet, ld, ext, x, j, label[j]));
            }
        }
    }
}

/// Per-position log ratio `log q_j(1−b, y) − log q_j(b, y)` of the sum metric, `b` the transmitted bit.
pub(crate) fn sum_metric_log_ratio<T: Scalar>(alphabet: &Alphabet<T>, ld: &[T], j: usize, b: u8) -> T {
    let own = lse(alphabet.subset(j, b).iter().map(|&x| ld[x]));
    let other = lse(alphabet.subset(j, 1 - b).iter().map(|&x| ld[x]));
    other - own
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Constellation;
    use num_complex::Complex;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(c: Constellation<f64>, snr: f64) -> (Channel<f64>, Alphabet<f64>) {
        (Channel::rayleigh(snr).unwrap(), Alphabet::gray(c).unwrap())
    }

    fn random_obs(rng: &mut ChaCha8Rng, ch: &Channel<f64>, a: &Alphabet<f64>) -> Observation<f64> {
        let x = rng.random_range(0..a.order());
        ch.sample(a.point(x), rng)
    }

    #[test]
    fn bpsk_bit_metrics_are_the_density() {
        let (ch, a) = setup(Constellation::psk(2).unwrap(), 2.0);
        let metric = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
        let obs = Observation { y: Complex::new(0.3, -0.2), h: Complex::new(0.9, 0.4) };
        for b in 0..2u8 {
            let direct = ch.log_density(&obs, a.point(a.subset(0, b)[0]));
            assert_eq!(metric.log_bit_metric_sum(0, b, &obs), direct);
            assert_eq!(metric.log_bit_metric_maxlog(0, b, &obs), direct);
        }
    }

    #[test]
    fn sum_metric_matches_naive_sum_and_partitions() {
        let (ch, a) = setup(Constellation::qam(16).unwrap(), 3.0);
        let metric = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let obs = random_obs(&mut rng, &ch, &a);
            let total: f64 = (0..16).map(|x| ch.density(&obs, a.point(x))).sum();
            for j in 0..4 {
                let mut parts = 0.0;
                for b in 0..2u8 {
                    let naive: f64 = subset_naive(&a, j, b).iter().map(|&x| ch.density(&obs, a.point(x))).sum();
                    let got = metric.log_bit_metric_sum(j, b, &obs).exp();
                    assert!((got - naive).abs() <= 1e-10 * naive.max(1e-300), "{got} vs {naive}");
                    parts += got;
                }
                assert!((parts - total).abs() < 1e-10);
            }
        }
    }

    fn subset_naive(a: &Alphabet<f64>, j: usize, b: u8) -> Vec<usize> {
        (0..a.order()).filter(|&x| a.labeling().bitstring(x).as_bytes()[j] == b'0' + b).collect()
    }

    #[test]
    fn maxlog_never_exceeds_sum() {
        let (ch, a) = setup(Constellation::psk(8).unwrap(), 5.0);
        let metric = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let obs = random_obs(&mut rng, &ch, &a);
            for j in 0..3 {
                for b in 0..2u8 {
                    let sum = metric.log_bit_metric_sum(j, b, &obs);
                    let max = metric.log_bit_metric_maxlog(j, b, &obs);
                    let naive_max = subset_naive(&a, j, b)
                        .iter()
                        .map(|&x| ch.log_density(&obs, a.point(x)))
                        .fold(f64::NEG_INFINITY, f64::max);
                    assert_eq!(max, naive_max);
                    assert!(max <= sum);
                    // a sum of 2^(m-1) terms exceeds its largest by at most that factor
                    assert!(sum - max <= 2f64.ln() * 2.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn qpsk_sum_metric_factorizes_over_axes() {
        let snr: f64 = 2.5;
        let ch = Channel::awgn(snr).unwrap();
        let a = Alphabet::gray(Constellation::qam(4).unwrap()).unwrap();
        let metric = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amp = (snr / 2.0).sqrt();
        // one-dimensional BPSK density with noise variance 1/2 per axis
        let axis = |v: f64, s: f64| -(v - s * amp).powi(2) - 0.5 * std::f64::consts::PI.ln();
        for _ in 0..100 {
            let obs = random_obs(&mut rng, &ch, &a);
            for x in 0..4 {
                let p = a.point(x);
                let oracle = axis(obs.y.re, p.re.signum())
                    + axis(obs.y.im, p.im.signum())
                    + (axis(obs.y.re, -p.re.signum()).exp() + axis(obs.y.re, p.re.signum()).exp()).ln()
                    + (axis(obs.y.im, -p.im.signum()).exp() + axis(obs.y.im, p.im.signum()).exp()).ln();
                let got = metric.log_symbol_metric(x, &obs, None).unwrap();
                assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
            }
        }
    }

    #[test]
    fn bpsk_llr_closed_form() {
        let snr: f64 = 1.7;
        let ch = Channel::awgn(snr).unwrap();
        let a = Alphabet::gray(Constellation::psk(2).unwrap()).unwrap();
        let metric = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
        // bit 1 maps to -1: |y - √snr|² − |y + √snr|² = −4√snr Re(y)
        for y in [Complex::new(0.7, 0.2), Complex::new(-1.3, 0.5), Complex::new(0.0, 2.0)] {
            let obs = Observation::awgn(y);
            let llr = metric.llr(0, &obs).unwrap();
            assert!((llr - (-4.0 * snr.sqrt() * y.re)).abs() < 1e-12);
        }
    }

    #[test]
    fn llr_symmetry_on_psk() {
        let ch = Channel::awgn(3.0).unwrap();
        for m in 1..=4 {
            let a = Alphabet::gray(Constellation::psk(1 << m).unwrap()).unwrap();
            let metric = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            // y on the decision boundary of the first bit of BPSK/QPSK
            if m <= 2 {
                let boundary = if m == 1 { Complex::new(0.0, 0.7) } else { Complex::new(-0.4, 0.4) };
                let llr0: f64 = metric.llr(0, &Observation::awgn(boundary)).unwrap();
                assert!(llr0.abs() < 1e-12, "m={m} {llr0}");
            }
            for _ in 0..100 {
                let obs = random_obs(&mut rng, &ch, &a);
                let flipped = Observation { y: -obs.y, ..obs };
                // negating y maps each point to its antipode; antipodes differ in bit 0 under ring Gray
                let j = 0;
                let l = metric.llr(j, &obs).unwrap();
                let lf = metric.llr(j, &flipped).unwrap();
                assert!((l + lf).abs() < 1e-9, "m={m}: {l} {lf}");
            }
        }
    }

    #[test]
    fn llr_rejects_other_kinds() {
        let (ch, a) = setup(Constellation::psk(4).unwrap(), 1.0);
        let metric = DecodingMetric::new(MetricKind::Matched, &ch, &a);
        assert!(metric.llr(0, &Observation::awgn(Complex::new(1.0, 0.0))).is_err());
    }

    #[test]
    fn matched_metric_is_log_density() {
        let (ch, a) = setup(Constellation::qam(16).unwrap(), 4.0);
        let metric = DecodingMetric::new(MetricKind::Matched, &ch, &a);
        let obs = Observation { y: Complex::new(0.1, 1.0), h: Complex::new(-0.3, 0.8) };
        for x in 0..16 {
            assert_eq!(metric.log_symbol_metric(x, &obs, None).unwrap(), ch.log_density(&obs, a.point(x)));
        }
    }

    #[test]
    fn extrinsic_kinds_need_configuration() {
        let (ch, a) = setup(Constellation::qam(16).unwrap(), 4.0);
        let obs = Observation::awgn(Complex::new(0.1, 0.1));
        let hyp = DecodingMetric::new(MetricKind::ExtrinsicHyp, &ch, &a);
        assert!(matches!(hyp.log_symbol_metric(0, &obs, None), Err(Error::Configuration(_))));
        let tx = DecodingMetric::new(MetricKind::ExtrinsicTx, &ch, &a)
            .with_extrinsic(ExtrinsicRealization::perfect(4))
            .unwrap();
        assert!(matches!(tx.log_symbol_metric(0, &obs, None), Err(Error::Configuration(_))));
        assert!(tx.log_symbol_metric(0, &obs, Some(3)).is_ok());
        let sum = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
        assert!(sum.with_extrinsic(ExtrinsicRealization::perfect(4)).is_err());
    }

    #[test]
    fn perfect_extrinsic_hypothesis_collapses_to_power_of_likelihood() {
        let (ch, a) = setup(Constellation::qam(16).unwrap(), 3.0);
        let metric = DecodingMetric::new(MetricKind::ExtrinsicHyp, &ch, &a)
            .with_extrinsic(ExtrinsicRealization::perfect(4))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let obs = random_obs(&mut rng, &ch, &a);
            for x in 0..16 {
                let got = metric.log_symbol_metric(x, &obs, None).unwrap();
                let expected = 4.0 * ch.log_density(&obs, a.point(x));
                assert!((got - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn uninformative_extrinsic_reduces_to_sum_metric() {
        let (ch, a) = setup(Constellation::psk(8).unwrap(), 3.0);
        let sum = DecodingMetric::new(MetricKind::BicmSum, &ch, &a);
        let none = ExtrinsicRealization::uninformative(3);
        let tx = DecodingMetric::new(MetricKind::ExtrinsicTx, &ch, &a).with_extrinsic(none.clone()).unwrap();
        let hyp = DecodingMetric::new(MetricKind::ExtrinsicHyp, &ch, &a).with_extrinsic(none).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let obs = random_obs(&mut rng, &ch, &a);
            for x in 0..8 {
                let base = sum.log_symbol_metric(x, &obs, None).unwrap();
                // each bit metric carries a (1/2)^(m-1) prior factor
                let offset = -3.0 * 2.0 * 2f64.ln();
                let t = tx.log_symbol_metric(x, &obs, Some(2)).unwrap();
                let h = hyp.log_symbol_metric(x, &obs, None).unwrap();
                assert!((t - base - offset).abs() < 1e-10);
                assert!((h - base - offset).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn transmitted_reference_is_invariant_under_joint_flips() {
        // flipping a non-j bit in both the candidate x'' and the reference leaves the XOR unchanged
        let (ch, a) = setup(Constellation::qam(4).unwrap(), 2.0);
        let ext = ExtrinsicRealization::new(&[0.8, 0.3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let obs = random_obs(&mut rng, &ch, &a);
            let mut ld = vec![0.0; 4];
            DecodingMetric::new(MetricKind::Matched, &ch, &a).log_densities(&obs, &mut ld);
            for j in 0..2 {
                let k = 1 - j;
                for b in 0..2u8 {
                    for reference in 0..4 {
                        let direct = extrinsic_bit_metric(&a, &ld, &ext, reference, j, b);
                        // relabel: flip bit k everywhere (points and reference)
                        let flip = |x: usize| a.with_bit(x, k, 1 - a.bit(x, k));
                        let permuted: Vec<f64> = (0..4).map(|x| ld[flip(x)]).collect();
                        let relabeled = extrinsic_bit_metric(&a, &permuted, &ext, flip(reference), j, b);
                        assert!((direct - relabeled).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn extrinsic_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let none = draw_extrinsic(&ExtrinsicModel::<f64>::None, 4, &mut rng).unwrap();
        assert!((0..4).all(|j| none.ext_zero(j) == 0.5 && none.ext(j, 1) == 0.5));
        let perfect = draw_extrinsic(&ExtrinsicModel::<f64>::Perfect, 4, &mut rng).unwrap();
        assert!((0..4).all(|j| perfect.ext_zero(j) == 1.0 && perfect.ext(j, 1) == 0.0));
        assert!(ExtrinsicModel::<f64>::gaussian_llr(vec![-1.0]).is_err());
        let wrong = ExtrinsicModel::<f64>::gaussian_llr(vec![1.0, 2.0]).unwrap();
        assert!(draw_extrinsic(&wrong, 4, &mut rng).is_err());
    }

    #[test]
    fn strong_gaussian_extrinsic_approaches_perfect() {
        let model = ExtrinsicModel::<f64>::gaussian_llr(vec![20.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let mut total = 0.0;
        for _ in 0..n {
            total += draw_extrinsic(&model, 1, &mut rng).unwrap().ext_zero(0);
        }
        assert!(total / n as f64 > 0.999);
        let zero = ExtrinsicModel::<f64>::gaussian_llr(vec![0.0]).unwrap();
        assert_eq!(draw_extrinsic(&zero, 2, &mut rng).unwrap().ext_zero(1), 0.5);
    }

    #[test]
    fn parses_names() {
        assert_eq!("maxlog".parse::<MetricKind<f64>>().unwrap(), MetricKind::BicmMaxLog);
        assert_eq!("power:3".parse::<MetricKind<f64>>().unwrap(), MetricKind::MatchedPower(3.0));
        assert!("power:-1".parse::<MetricKind<f64>>().is_err());
        assert!("bogus".parse::<MetricKind<f64>>().is_err());
        let model: ExtrinsicModel<f64> = "gaussian:1/2.5".parse().unwrap();
        assert_eq!(model, ExtrinsicModel::GaussianLlr { sigma: vec![1.0, 2.5] });
        assert_eq!(model.name(), "gaussian:1/2.5");
    }

    proptest! {
        #[test]
        fn extrinsic_priors_sum_to_one(llrs in proptest::collection::vec(-40.0f64..40.0, 1..6)) {
            let ext = ExtrinsicRealization::from_llrs(&llrs);
            for j in 0..llrs.len() {
                let (p0, p1) = (ext.ext(j, 0), ext.ext(j, 1));
                prop_assert!((0.0..=1.0).contains(&p0) && (0.0..=1.0).contains(&p1));
                prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
            }
        }
    }
}
