//! End-to-end processing of one RSS trace: preprocessing followed by one
//! of the estimators.

use serde::{Deserialize, Serialize};

use crate::dsp::{
    design_elliptic, is_uniform, nominal_rate, preprocess, resample_uniform, FilterSpec, MeanMode,
    Preprocessed,
};
use crate::error::{Error, Result};
use crate::estimators::{
    dft_estimate, gp_estimate, kf_estimate, DftConfig, EstimateSeries, GpConfig, KfConfig, Method,
    Spectrogram,
};
use crate::scalar::Scalar;
use crate::simulator::RssTrace;

/// Settings for every stage. The defaults are the evaluation parameters
/// used throughout for the three estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct PipelineConfig<T> {
    /// Sampling rate; inferred from the median interval when absent.
    #[serde(default)]
    pub fs: Option<T>,
    #[serde(default)]
    pub filter: FilterSpec<T>,
    #[serde(default)]
    pub mean_mode: MeanMode,
    /// Periodogram settings; 30 s windows at `fs` when absent.
    #[serde(default)]
    pub dft: Option<DftConfig<T>>,
    #[serde(default)]
    pub kf: KfConfig<T>,
    #[serde(default)]
    pub gp: GpConfig<T>,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            fs: None,
            filter: FilterSpec::default(),
            mean_mode: MeanMode::Batch,
            dft: None,
            kf: KfConfig::default(),
            gp: GpConfig::default(),
        }
    }
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn sampling_rate(&self, trace: &RssTrace<T>) -> Result<T> {
        match self.fs {
            Some(fs) if fs > T::zero() => Ok(fs),
            Some(_) => Err(Error::InvalidConfig("fs must be > 0".into())),
            None => nominal_rate(&trace.timestamps).ok_or(Error::InsufficientData {
                needed: 2,
                got: trace.len(),
            }),
        }
    }

    pub fn dft_config(&self, fs: T) -> DftConfig<T> {
        self.dft.unwrap_or_else(|| DftConfig::for_rate(fs))
    }
}

/// Everything produced while estimating on one trace.
#[derive(Debug, Clone)]
pub struct PipelineOutput<T> {
    pub series: EstimateSeries<T>,
    pub preprocessed: Preprocessed<T>,
    pub spectrogram: Option<Spectrogram<T>>,
    /// The periodogram branch had to interpolate onto a uniform grid.
    pub resampled: bool,
    pub fs: T,
}

/// Filtered sequences on a uniform grid, as the periodogram and the SNR
/// estimate need them. Returns `(timestamps, y, resampled)`.
pub fn uniform_y<T: Scalar>(pre: &Preprocessed<T>, fs: T) -> Result<(Vec<T>, Vec<T>, bool)> {
    let tol = T::lit(1e-6);
    if is_uniform(&pre.timestamps, fs, tol) {
        Ok((pre.timestamps.clone(), pre.y.clone(), false))
    } else {
        let (t, y) = resample_uniform(&pre.timestamps, &pre.y, fs)?;
        Ok((t, y, true))
    }
}

/// Preprocesses `trace` and runs `method` on the appropriate branch:
/// the mean-removed sequence `y` for the periodogram and the low-passed
/// `z` for the recursive filters.
pub fn run<T: Scalar>(trace: &RssTrace<T>, method: Method, cfg: &PipelineConfig<T>) -> Result<PipelineOutput<T>> {
    let fs = cfg.sampling_rate(trace)?;
    let sos = design_elliptic(&cfg.filter, fs)?;
    let pre = preprocess(trace, &sos, fs, cfg.mean_mode)?;
    let (series, spectrogram, resampled) = match method {
        Method::Dft => {
            let (t, y, resampled) = uniform_y(&pre, fs)?;
            let (s, spec) = dft_estimate(&y, &t, &cfg.dft_config(fs), pre.mean)?;
            (s, Some(spec), resampled)
        }
        Method::Kf => (kf_estimate(&pre.z, &pre.timestamps, &cfg.kf)?, None, false),
        Method::Gp => (gp_estimate(&pre.z, &pre.timestamps, &cfg.gp)?, None, false),
    };
    Ok(PipelineOutput {
        series,
        preprocessed: pre,
        spectrogram,
        resampled,
        fs,
    })
}
