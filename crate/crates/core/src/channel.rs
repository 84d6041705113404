//! Memoryless AWGN and fully interleaved Rayleigh fading channels.
//!
//! The output is `y = h √snr x + z`, with `z` circularly symmetric complex
//! Gaussian of unit total variance. For Rayleigh fading `h` is drawn from the
//! same distribution as `z`, independently; the receiver observes `h`
//! (coherent detection with perfect channel state information). For AWGN
//! `h = 1`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Rayleigh => "rayleigh",
        })
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn" => Ok(ChannelKind::Awgn),
            "rayleigh" => Ok(ChannelKind::Rayleigh),
            other => Err(Error::invalid(format!("unknown channel {other:?}"))),
        }
    }
}

/// A channel output together with the fading coefficient seen by the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T> {
    pub y: Complex<T>,
    pub h: Complex<T>,
}

impl<T: Scalar> Observation<T> {
    /// Unfaded observation, `h = 1`.
    pub fn awgn(y: Complex<T>) -> Self {
        Observation { y, h: Complex::new(T::one(), T::zero()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel<T> {
    kind: ChannelKind,
    snr: T,
    amplitude: T,
}

pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Scalar>(linear: T) -> T {
    T::lit(10.0) * linear.log10()
}

impl<T: Scalar> Channel<T> {
    pub fn new(kind: ChannelKind, snr: T) -> Result<Self> {
        if !(snr > T::zero() && snr.is_finite()) {
            return Err(Error::invalid(format!("snr must be positive and finite, got {snr}")));
        }
        Ok(Channel { kind, snr, amplitude: snr.sqrt() })
    }

    pub fn from_db(kind: ChannelKind, snr_db: T) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid(format!("snr_db must be finite, got {snr_db}")));
        }
        Self::new(kind, db_to_linear(snr_db))
    }

    pub fn awgn(snr: T) -> Result<Self> {
        Self::new(ChannelKind::Awgn, snr)
    }

    pub fn rayleigh(snr: T) -> Result<Self> {
        Self::new(ChannelKind::Rayleigh, snr)
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    /// Linear signal-to-noise ratio.
    pub fn snr(&self) -> T {
        self.snr
    }

    pub fn snr_db(&self) -> T {
        linear_to_db(self.snr)
    }

    /// Noise-free received point `h √snr x`.
    #[inline]
    pub fn mean(&self, obs: &Observation<T>, x: Complex<T>) -> Complex<T> {
        obs.h * x * self.amplitude
    }

    /// `log p(y | x, h) = −log π − |y − h √snr x|²`.
    #[inline]
    pub fn log_density(&self, obs: &Observation<T>, x: Complex<T>) -> T {
        -T::PI().ln() - (obs.y - self.mean(obs, x)).norm_sqr()
    }

    pub fn density(&self, obs: &Observation<T>, x: Complex<T>) -> T {
        self.log_density(obs, x).exp()
    }

    /// Draws a fading coefficient and an output for input `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: Complex<T>, rng: &mut R) -> Observation<T> {
        let h = match self.kind {
            ChannelKind::Awgn => Complex::new(T::one(), T::zero()),
            ChannelKind::Rayleigh => complex_gaussian(rng),
        };
        let z = complex_gaussian(rng);
        Observation { y: h * x * self.amplitude + z, h }
    }
}

/// Circularly symmetric complex Gaussian with unit total variance.
pub fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let scale = T::FRAC_1_SQRT_2();
    let re = T::standard_normal(rng) * scale;
    let im = T::standard_normal(rng) * scale;
    Complex::new(re, im)
}

impl<T: Scalar> fmt::Display for Channel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} snr={} dB", self.kind, self.snr_db())
    }
}
