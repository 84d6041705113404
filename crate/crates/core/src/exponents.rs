//! Gallager functions, random-coding exponents and cutoff rates.
//!
//! Exponents are in nats per channel use; rates enter in bits and are
//! converted once. All evaluations for one [`Scenario`] share its frozen
//! samples, so curves computed from it are paired.

use std::fmt;

use crate::channel::Channel;
use crate::constellation::Alphabet;
use crate::error::{Error, Result};
use crate::measures::maximize_over_s;
use crate::metrics::MetricKind;
use crate::numerics::{golden_section_max, lse2, Engine, Estimate};
use crate::scalar::Scalar;
use crate::scenario::{gallager_from_inner, MetricSpec, Scenario};

/// Golden-section tolerance on `ρ`.
pub const RHO_TOL: f64 = 1e-4;

/// How the scale parameter `s` of a mismatched Gallager function is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SMode<T> {
    /// `max_s E0(ρ, s)` for every `ρ`.
    Optimize,
    Fixed(T),
    /// `s = 1/(1+ρ)`.
    Coupled,
}

impl<T: Scalar> SMode<T> {
    fn key(&self) -> String {
        match self {
            SMode::Optimize => "opt".into(),
            SMode::Fixed(s) => format!("s={}", s.to_f64_lossy()),
            SMode::Coupled => "coupled".into(),
        }
    }
}

/// Which Gallager function an exponent is built from.
#[derive(Debug, Clone, PartialEq)]
pub enum GallagerFamily<T> {
    /// Coded modulation with the matched metric and `s = 1/(1+ρ)`.
    Cm,
    /// Independent binary-input parallel channels, one per label position.
    Ind,
    /// Mismatched decoding with a symbol or bit metric, extrinsic ones included.
    Mismatched { metric: MetricSpec<T>, s_mode: SMode<T> },
}

impl<T: Scalar> GallagerFamily<T> {
    pub fn mismatched(metric: impl Into<MetricSpec<T>>, s_mode: SMode<T>) -> Self {
        GallagerFamily::Mismatched { metric: metric.into(), s_mode }
    }

    fn key(&self) -> String {
        match self {
            GallagerFamily::Cm => "cm".into(),
            GallagerFamily::Ind => "ind".into(),
            GallagerFamily::Mismatched { metric, s_mode } => format!("{metric}@{}", s_mode.key()),
        }
    }
}

impl<T: Scalar> fmt::Display for GallagerFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// A Gallager function value with the `s` it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GallagerValue<T> {
    /// Nats.
    pub estimate: Estimate<T>,
    /// `None` for families without a free `s`.
    pub s: Option<T>,
    pub converged: bool,
}

/// One row of a random-coding exponent curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPoint<T> {
    pub rate_bits: T,
    /// `E_r(R)` in nats.
    pub exponent: T,
    pub rho_opt: T,
    pub s_opt: Option<T>,
    /// Standard error of the Gallager function at the optimum.
    pub std_error: T,
    pub converged: bool,
}

/// Zero-rate intercepts of the exponents, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffRates<T> {
    pub r0_cm: Estimate<T>,
    /// `max_s E0^q(1, s)` of the requested metric.
    pub r0_q: Estimate<T>,
    pub s_q: T,
    pub r0_ind: Estimate<T>,
    /// Cutoff rate of the channel averaged over label positions.
    pub r0_av: Estimate<T>,
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if rho >= T::zero() && rho <= T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho must lie in [0, 1], got {rho}")))
    }
}

fn check_s<T: Scalar>(s: T) -> Result<()> {
    if s > T::zero() && s.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("s must be positive and finite, got {s}")))
    }
}

fn root_sum_square<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    values.fold(T::zero(), |acc, v| acc + v * v).sqrt()
}

impl<T: Scalar> Scenario<T> {
    /// `−log E[(2^{-m} Σ_{x'} (p(Y|x')/p(Y|X))^{1/(1+ρ)})^ρ]`.
    pub fn e0_cm(&self, rho: T) -> Result<Estimate<T>> {
        check_rho(rho)?;
        let s = (T::one() + rho).recip();
        Ok(self.table(&MetricSpec::matched())?.e0(rho, s))
    }

    /// `−log E[(Σ_{x'} 2^{-m} (q(x',Y)/q(X,Y))^s)^ρ]` for the metric `spec`.
    pub fn e0_q(&self, spec: &MetricSpec<T>, rho: T, s: T) -> Result<Estimate<T>> {
        check_rho(rho)?;
        check_s(s)?;
        Ok(self.table(spec)?.e0(rho, s))
    }

    /// Same as [`Scenario::e0_q`], restricted to the extrinsic metric kinds.
    pub fn e0_extrinsic(&self, spec: &MetricSpec<T>, rho: T, s: T) -> Result<Estimate<T>> {
        if !spec.kind.uses_extrinsic() {
            return Err(Error::invalid(format!("{} is not an extrinsic metric", spec.kind)));
        }
        self.e0_q(spec, rho, s)
    }

    /// Sum over label positions of the binary-input Gallager functions of the
    /// parallel-channel model, each with its own independent samples.
    pub fn e0_ind(&self, rho: T) -> Result<Estimate<T>> {
        check_rho(rho)?;
        let table = self.parallel_table()?;
        let n = self.samples().len();
        if rho == T::zero() {
            return Ok(Estimate::exact(T::zero(), n));
        }
        let s = (T::one() + rho).recip();
        let ln2 = T::LN_2();
        let terms: Vec<Estimate<T>> = (0..table.positions())
            .map(|j| gallager_from_inner(table.expect(j, |d| (rho * (lse2(T::zero(), s * d) - ln2)).exp())))
            .collect();
        Ok(Estimate {
            mean: terms.iter().fold(T::zero(), |acc, e| acc + e.mean),
            std_error: root_sum_square(terms.iter().map(|e| e.std_error)),
            n_effective: n,
        })
    }

    /// Gallager function of `family` at `ρ`, with `s` chosen by the family's mode.
    pub fn e0_family(&self, family: &GallagerFamily<T>, rho: T) -> Result<GallagerValue<T>> {
        check_rho(rho)?;
        let key = (family.key(), rho.to_f64_lossy().to_bits());
        if let Some(v) = self.e0_memo.lock().expect("exponent cache").get(&key) {
            return Ok(*v);
        }
        let value = match family {
            GallagerFamily::Cm => GallagerValue { estimate: self.e0_cm(rho)?, s: None, converged: true },
            GallagerFamily::Ind => GallagerValue { estimate: self.e0_ind(rho)?, s: None, converged: true },
            GallagerFamily::Mismatched { metric, s_mode } => {
                let table = self.table(metric)?;
                let (s, converged) = match *s_mode {
                    SMode::Fixed(s) => {
                        check_s(s)?;
                        (s, true)
                    }
                    SMode::Coupled => ((T::one() + rho).recip(), true),
                    SMode::Optimize if rho == T::zero() => (T::one(), true),
                    SMode::Optimize => {
                        let (s, _, converged) = maximize_over_s(|s| table.e0(rho, s).mean);
                        (s, converged)
                    }
                };
                GallagerValue { estimate: table.e0(rho, s), s: Some(s), converged }
            }
        };
        self.e0_memo.lock().expect("exponent cache").insert(key, value);
        Ok(value)
    }

    /// `E_r(R) = max_{0≤ρ≤1} E0(ρ) − ρR` with `R` given in bits per channel use.
    pub fn random_coding_exponent(&self, family: &GallagerFamily<T>, rate_bits: T) -> Result<ExponentPoint<T>> {
        if !(rate_bits >= T::zero() && rate_bits.is_finite()) {
            return Err(Error::invalid(format!("rate must be finite and nonnegative, got {rate_bits}")));
        }
        let rate = rate_bits * T::LN_2();
        let mut failure = None;
        let best = golden_section_max(
            |rho: T| match self.e0_family(family, rho) {
                Ok(v) => v.estimate.mean - rho * rate,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::neg_infinity()
                }
            },
            T::zero(),
            T::one(),
            T::lit(RHO_TOL),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let at = self.e0_family(family, best.argmax)?;
        Ok(ExponentPoint {
            rate_bits,
            exponent: best.value,
            rho_opt: best.argmax,
            s_opt: at.s,
            std_error: at.estimate.std_error,
            converged: best.converged && at.converged,
        })
    }

    pub fn exponent_curve(&self, family: &GallagerFamily<T>, rates_bits: &[T]) -> Result<Vec<ExponentPoint<T>>> {
        rates_bits.iter().map(|&r| self.random_coding_exponent(family, r)).collect()
    }

    /// `R0` for coded modulation, for `metric` with optimized `s`, for the
    /// parallel-channel model and for the position-averaged channel.
    pub fn cutoff_rates(&self, metric: &MetricSpec<T>) -> Result<CutoffRates<T>> {
        let r0_cm = self.e0_cm(T::one())?;
        let q = self.e0_family(&GallagerFamily::Mismatched { metric: metric.clone(), s_mode: SMode::Optimize }, T::one())?;
        let r0_ind = self.e0_ind(T::one())?;
        let table = self.parallel_table()?;
        let half = T::lit(0.5);
        let terms: Vec<Estimate<T>> = (0..table.positions()).map(|j| table.expect(j, |d| (half * d).exp())).collect();
        let m = T::from_usize_lossy(terms.len());
        let average = terms.iter().fold(T::zero(), |acc, e| acc + e.mean) / m;
        let r0_av = Estimate {
            mean: m * (T::LN_2() - (T::one() + average).ln()),
            std_error: root_sum_square(terms.iter().map(|e| e.std_error)) / (T::one() + average),
            n_effective: r0_ind.n_effective,
        };
        Ok(CutoffRates { r0_cm, r0_q: q.estimate, s_q: q.s.unwrap_or(T::one()), r0_ind, r0_av })
    }
}

pub fn e0_cm<T: Scalar>(channel: &Channel<T>, alphabet: &Alphabet<T>, rho: T, engine: &Engine) -> Result<Estimate<T>> {
    check_rho(rho)?;
    Scenario::new(*channel, alphabet.clone(), *engine)?.e0_cm(rho)
}

pub fn e0_q<T: Scalar>(
    kind: MetricKind<T>,
    channel: &Channel<T>,
    alphabet: &Alphabet<T>,
    rho: T,
    s: T,
    engine: &Engine,
) -> Result<Estimate<T>> {
    check_rho(rho)?;
    check_s(s)?;
    Scenario::new(*channel, alphabet.clone(), *engine)?.e0_q(&kind.into(), rho, s)
}

pub fn e0_ind<T: Scalar>(channel: &Channel<T>, alphabet: &Alphabet<T>, rho: T, engine: &Engine) -> Result<Estimate<T>> {
    check_rho(rho)?;
    Scenario::new(*channel, alphabet.clone(), *engine)?.e0_ind(rho)
}
