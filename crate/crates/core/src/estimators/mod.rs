//! Breathing-rate estimators.
//!
//! * [`dft_estimate`]: sliding-window zero-padded periodogram peak.
//! * [`kf_estimate`]: Kalman filter over time-varying Fourier coefficients on
//!   a fixed frequency grid.
//! * [`gp_estimate`]: quasi-periodic Gaussian process in state-space form
//!   with a log-frequency random walk, filtered by a Rao-Blackwellized
//!   unscented Kalman filter.
//!
//! Every estimator returns an [`EstimateSeries`] that carries the point
//! estimates and the signal implied by the estimator state.

mod dft;
mod gp;
mod kf;

pub use dft::{dft_estimate, DftConfig, Spectrogram};
pub use gp::{
    gp_estimate, harmonic_variances, periodic_kernel, state_space_kernel, GpConfig,
};
pub use kf::{kf_estimate, KfConfig};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dft,
    Kf,
    Gp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dft, Method::Kf, Method::Gp];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dft => "dft",
            Method::Kf => "kf",
            Method::Gp => "gp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dft" => Ok(Method::Dft),
            "kf" => Ok(Method::Kf),
            "gp" => Ok(Method::Gp),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (expected dft, kf or gp)"
            ))),
        }
    }
}

/// Frequency estimates of one run, aligned with the input samples they were
/// produced at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries<T> {
    pub method: Method,
    pub timestamps: Vec<T>,
    /// Estimated frequency in Hz; `None` where the estimator has no peak
    /// (e.g. the Fourier filter on a constant input).
    pub f_hat: Vec<Option<T>>,
    /// Signal implied by the estimator state, in the units of the input.
    pub reconstruction: Vec<T>,
    /// Index of the input sample each estimate belongs to.
    pub sample_index: Vec<usize>,
    /// Gaussian-process runs: first component of each harmonic state
    /// `u_{m,1}`, `m = 1..=N`, per estimate. Empty for other methods.
    #[serde(default)]
    pub harmonic_states: Vec<Vec<T>>,
    /// Number of times the covariance had to be repaired to stay positive
    /// definite.
    #[serde(default)]
    pub reconditioned: usize,
}

impl<T: Scalar> EstimateSeries<T> {
    pub(crate) fn with_capacity(method: Method, n: usize) -> Self {
        Self {
            method,
            timestamps: Vec::with_capacity(n),
            f_hat: Vec::with_capacity(n),
            reconstruction: Vec::with_capacity(n),
            sample_index: Vec::with_capacity(n),
            harmonic_states: Vec::new(),
            reconditioned: 0,
        }
    }

    pub(crate) fn push(&mut self, index: usize, t: T, f: Option<T>, recon: T) {
        self.sample_index.push(index);
        self.timestamps.push(t);
        self.f_hat.push(f);
        self.reconstruction.push(recon);
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Last defined estimate.
    pub fn final_estimate(&self) -> Option<T> {
        self.f_hat.iter().rev().find_map(|f| *f)
    }

    /// `(t, f̂)` pairs where an estimate exists.
    pub fn defined(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.timestamps
            .iter()
            .zip(&self.f_hat)
            .filter_map(|(&t, f)| f.map(|f| (t, f)))
    }
}

/// The signal implied by an estimator run: the DC plus harmonic states for
/// the Gaussian process, `G·x̂` for the Fourier filter and the dominant
/// windowed sinusoid plus the removed mean for the periodogram.
pub fn reconstruct_signal<T: Scalar>(series: &EstimateSeries<T>) -> &[T] {
    &series.reconstruction
}

/// Index of the largest value; ties resolve to the first (lowest frequency).
pub(crate) fn argmax_first<T: Scalar>(values: impl Iterator<Item = T>) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

pub(crate) fn check_inputs<T: Scalar>(timestamps: &[T], values: &[T]) -> Result<()> {
    if timestamps.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: timestamps.len(),
            right: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if let Some(i) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotonicTime { index: i + 1 });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!("GP".parse::<Method>().unwrap(), Method::Gp);
        assert_eq!(Method::Kf.to_string(), "kf");
        assert!("fft".parse::<Method>().is_err());
    }

    #[test]
    fn argmax_prefers_lower_index_on_ties() {
        assert_eq!(argmax_first([1.0, 3.0, 3.0, 2.0].into_iter()), Some((1, 3.0)));
        assert_eq!(argmax_first(std::iter::empty::<f64>()), None);
        assert_eq!(argmax_first([f64::NAN, 1.0].into_iter()), Some((1, 1.0)));
    }
}
