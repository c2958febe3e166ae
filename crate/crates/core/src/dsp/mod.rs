//! Preprocessing of raw RSS: low-pass filtering for the recursive
//! estimators, mean removal plus low-pass for the periodogram, and uniform
//! resampling of traces with missing packets.

mod elliptic;
mod sos;

pub use elliptic::design_elliptic;
pub use sos::Sos;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simulator::RssTrace;

/// Low-pass template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec<T> {
    pub order: usize,
    pub passband_hz: T,
    pub stopband_hz: T,
    pub passband_ripple_db: T,
    pub stopband_atten_db: T,
}

impl<T: Scalar> Default for FilterSpec<T> {
    /// Fifth order, 2 Hz passband with 0.05 dB ripple, 40 dB from 3 Hz.
    fn default() -> Self {
        Self {
            order: 5,
            passband_hz: T::lit(2.0),
            stopband_hz: T::lit(3.0),
            passband_ripple_db: T::lit(0.05),
            stopband_atten_db: T::lit(40.0),
        }
    }
}

impl<T: Scalar> FilterSpec<T> {
    pub fn validate(&self, fs: T) -> Result<()> {
        let ok = self.order >= 1
            && self.passband_hz > T::zero()
            && self.passband_hz < self.stopband_hz
            && self.stopband_hz < fs / T::lit(2.0)
            && self.passband_ripple_db > T::zero()
            && self.stopband_atten_db > self.passband_ripple_db;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "filter template needs order >= 1, 0 < passband < stopband < fs/2 = {} Hz, positive ripple below the attenuation",
                fs / T::lit(2.0)
            )))
        }
    }

    fn to_f64(self) -> FilterSpec<f64> {
        FilterSpec {
            order: self.order,
            passband_hz: self.passband_hz.as_f64(),
            stopband_hz: self.stopband_hz.as_f64(),
            passband_ripple_db: self.passband_ripple_db.as_f64(),
            stopband_atten_db: self.stopband_atten_db.as_f64(),
        }
    }
}

/// How the mean is removed before the band-pass branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanMode {
    /// Mean of the whole trace.
    #[default]
    Batch,
    /// Running mean of the samples seen so far.
    Running,
}

/// Output of [`preprocess`], aligned with the input timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed<T> {
    pub timestamps: Vec<T>,
    /// Mean-removed, low-passed sequence for the periodogram.
    pub y: Vec<T>,
    /// Low-passed sequence for the recursive estimators.
    pub z: Vec<T>,
    /// Mean that was removed from `y` (the last running mean in streaming mode).
    pub mean: T,
    /// Leading samples still inside the filter transient.
    pub transient: usize,
}

/// Low-pass filters the trace (`z`) and its mean-removed copy (`y`).
pub fn preprocess<T: Scalar>(
    trace: &RssTrace<T>,
    sos: &Sos<T>,
    fs: T,
    mode: MeanMode,
) -> Result<Preprocessed<T>> {
    trace.validate()?;
    if trace.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(index) = trace.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let x = &trace.values;
    let (centered, mean) = match mode {
        MeanMode::Batch => {
            let mean = x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len());
            (x.iter().map(|&v| v - mean).collect::<Vec<_>>(), mean)
        }
        MeanMode::Running => {
            let mut acc = T::zero();
            let mut mean = T::zero();
            let out = x
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    acc += v;
                    mean = acc / T::from_usize_lossy(k + 1);
                    v - mean
                })
                .collect();
            (out, mean)
        }
    };
    Ok(Preprocessed {
        timestamps: trace.timestamps.clone(),
        y: sos.filter(&centered),
        z: sos.filter(x),
        mean,
        transient: fs.ceil().to_usize().unwrap_or(0).min(x.len()),
    })
}

/// Median sampling interval inverted, in Hz.
pub fn nominal_rate<T: Scalar>(timestamps: &[T]) -> Option<T> {
    if timestamps.len() < 2 {
        return None;
    }
    let mut dt: Vec<T> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
    dt.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Some(dt[dt.len() / 2].recip())
}

/// True when every interval is within `rel_tol` of `1/fs`.
pub fn is_uniform<T: Scalar>(timestamps: &[T], fs: T, rel_tol: T) -> bool {
    let step = fs.recip();
    timestamps
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= rel_tol * step)
}

/// Linear interpolation onto `t0 + k/fs` for every grid point up to the last
/// sample.
pub fn resample_uniform<T: Scalar>(timestamps: &[T], values: &[T], fs: T) -> Result<(Vec<T>, Vec<T>)> {
    if timestamps.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: timestamps.len(),
            right: values.len(),
        });
    }
    if timestamps.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: timestamps.len(),
        });
    }
    if !(fs > T::zero()) {
        return Err(Error::InvalidConfig("resampling rate must be > 0".into()));
    }
    if let Some(i) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotonicTime { index: i + 1 });
    }
    let t0 = timestamps[0];
    let span = *timestamps.last().unwrap() - t0;
    // tolerate rounding in the span so an already-uniform grid keeps its last point
    let n = (span * fs + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    let mut out_t = Vec::with_capacity(n);
    let mut out_v = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let t = t0 + T::from_usize_lossy(k) / fs;
        while j + 2 < timestamps.len() && timestamps[j + 1] <= t {
            j += 1;
        }
        let (ta, tb) = (timestamps[j], timestamps[j + 1]);
        let w = ((t - ta) / (tb - ta)).max(T::zero()).min(T::one());
        out_t.push(t);
        out_v.push(values[j] + w * (values[j + 1] - values[j]));
    }
    Ok((out_t, out_v))
}
