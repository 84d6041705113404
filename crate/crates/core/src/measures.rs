//! Mutual-information-type measures: CM and BICM capacities, GMI and the
//! extrinsic pseudo-GMI.
//!
//! Everything is accumulated in nats and converted to bits once, on the way
//! out. Inputs are uniform over the constellation.

use crate::channel::Channel;
use crate::constellation::Alphabet;
use crate::error::{Error, Result};
use crate::metrics::{ExtrinsicModel, MetricKind};
use crate::numerics::{golden_section_max, Engine, Estimate};
use crate::scalar::Scalar;
use crate::scenario::{MetricSpec, Scenario};

/// Search domain for the GMI scale parameter `s`, searched on `ln s`.
pub const S_MIN: f64 = 1e-3;
pub const S_MAX: f64 = 1e3;
/// Golden-section tolerance on `ln s`.
pub const LOG_S_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureResult<T> {
    /// Bits per channel use.
    pub value: T,
    /// Monte Carlo standard error in bits; zero under quadrature.
    pub std_error: T,
    pub s_opt: Option<T>,
    /// Per-label-position contributions, summing to `value`.
    pub per_bit: Option<Vec<T>>,
    /// False when the `s` search hit its iteration cap.
    pub converged: bool,
    /// The value is a pseudo-GMI, not an achievable rate.
    pub pseudo: bool,
}

impl<T: Scalar> MeasureResult<T> {
    fn from_nats(est: Estimate<T>) -> Self {
        MeasureResult {
            value: est.mean / T::LN_2(),
            std_error: est.std_error / T::LN_2(),
            s_opt: None,
            per_bit: None,
            converged: true,
            pseudo: false,
        }
    }

    /// `√(a² + b²)` of the two standard errors.
    pub fn combined_error(&self, other: &Self) -> T {
        self.std_error.hypot(other.std_error)
    }
}

/// Maximizes `f(s)` over `s ∈ [S_MIN, S_MAX]` by golden-section search on `ln s`.
/// Returns `(s_opt, f(s_opt), converged)`.
pub(crate) fn maximize_over_s<T, F>(mut f: F) -> (T, T, bool)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let best = golden_section_max(
        |u: T| f(u.exp()),
        T::lit(S_MIN).ln(),
        T::lit(S_MAX).ln(),
        T::lit(LOG_S_TOL),
    );
    (best.argmax.exp(), best.value, best.converged)
}

fn check_s<T: Scalar>(s: T) -> Result<()> {
    if s > T::zero() && s.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("s must be positive and finite, got {s}")))
    }
}

impl<T: Scalar> Scenario<T> {
    /// Coded modulation capacity `E[log p(Y|X) / Σ_{x'} 2^{-m} p(Y|x')]`.
    pub fn cm_capacity(&self) -> Result<MeasureResult<T>> {
        let table = self.table(&MetricSpec::matched())?;
        Ok(MeasureResult::from_nats(table.gmi_at_s(T::one())))
    }

    /// BICM capacity `Σ_j E[log Σ_{x'∈X_B^j} p(Y|x') / ½ Σ_{x'} p(Y|x')]`, with the per-position terms.
    pub fn bicm_capacity(&self) -> Result<MeasureResult<T>> {
        let table = self.table(&MetricSpec::sum())?;
        let (total, per_bit) = table.gmi_per_bit(T::one(), self.alphabet()).expect("sum metric is bitwise");
        let mut result = MeasureResult::from_nats(total);
        result.per_bit = Some(per_bit.iter().map(|e| e.mean / T::LN_2()).collect());
        Ok(result)
    }

    /// `I_gmi(s) = E[log q(X,Y)^s / Σ_{x'} 2^{-m} q(x',Y)^s]`.
    pub fn gmi_at_s(&self, spec: &MetricSpec<T>, s: T) -> Result<MeasureResult<T>> {
        check_s(s)?;
        let table = self.table(spec)?;
        let mut result = MeasureResult::from_nats(table.gmi_at_s(s));
        result.s_opt = Some(s);
        Ok(result)
    }

    /// `sup_s I_gmi(s)`, with the maximizing `s`.
    pub fn gmi(&self, spec: &MetricSpec<T>) -> Result<MeasureResult<T>> {
        let table = self.table(spec)?;
        let (s_opt, _, converged) = maximize_over_s(|s| table.gmi_at_s(s).mean);
        let mut result = MeasureResult::from_nats(table.gmi_at_s(s_opt));
        result.s_opt = Some(s_opt);
        result.converged = converged;
        Ok(result)
    }

    /// GMI of a bitwise metric split into per-position binary-input terms.
    ///
    /// Evaluated at `s` when given, otherwise at the `s` that maximizes the total.
    pub fn gmi_per_bit(&self, spec: &MetricSpec<T>, s: Option<T>) -> Result<MeasureResult<T>> {
        if !spec.kind.is_bitwise() {
            return Err(Error::Unsupported(format!(
                "metric {} is not a product of hypothesis-independent bit metrics",
                spec.kind
            )));
        }
        let table = self.table(spec)?;
        let (s, converged) = match s {
            Some(s) => {
                check_s(s)?;
                (s, true)
            }
            None => {
                let (s, _, converged) = maximize_over_s(|s| table.gmi_at_s(s).mean);
                (s, converged)
            }
        };
        let (total, per_bit) = table.gmi_per_bit(s, self.alphabet()).expect("bitwise table");
        let mut result = MeasureResult::from_nats(total);
        result.s_opt = Some(s);
        result.per_bit = Some(per_bit.iter().map(|e| e.mean / T::LN_2()).collect());
        result.converged = converged;
        Ok(result)
    }

    /// Per-position GMI sum at `s = 1` for transmitted-symbol-referenced extrinsic metrics.
    ///
    /// Flagged as pseudo: it has the functional form of a GMI but is not an achievable rate.
    pub fn pseudo_gmi_extrinsic_tx(&self, model: &ExtrinsicModel<T>) -> Result<MeasureResult<T>> {
        let spec = MetricSpec::extrinsic_tx(model.clone());
        let mut result = self.gmi_per_bit(&spec, Some(T::one()))?;
        result.pseudo = true;
        Ok(result)
    }
}

fn scenario<T: Scalar>(channel: &Channel<T>, alphabet: &Alphabet<T>, engine: &Engine) -> Result<Scenario<T>> {
    Scenario::new(*channel, alphabet.clone(), *engine)
}

pub fn cm_capacity<T: Scalar>(channel: &Channel<T>, alphabet: &Alphabet<T>, engine: &Engine) -> Result<MeasureResult<T>> {
    scenario(channel, alphabet, engine)?.cm_capacity()
}

pub fn bicm_capacity<T: Scalar>(
    channel: &Channel<T>,
    alphabet: &Alphabet<T>,
    engine: &Engine,
) -> Result<MeasureResult<T>> {
    scenario(channel, alphabet, engine)?.bicm_capacity()
}

pub fn gmi_at_s<T: Scalar>(
    kind: MetricKind<T>,
    channel: &Channel<T>,
    alphabet: &Alphabet<T>,
    s: T,
    engine: &Engine,
) -> Result<MeasureResult<T>> {
    scenario(channel, alphabet, engine)?.gmi_at_s(&kind.into(), s)
}

pub fn gmi<T: Scalar>(
    kind: MetricKind<T>,
    channel: &Channel<T>,
    alphabet: &Alphabet<T>,
    engine: &Engine,
) -> Result<MeasureResult<T>> {
    scenario(channel, alphabet, engine)?.gmi(&kind.into())
}
