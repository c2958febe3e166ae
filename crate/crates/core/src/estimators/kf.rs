use serde::{Deserialize, Serialize};

use super::{argmax_first, check_inputs, EstimateSeries, Method};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Fourier-coefficient Kalman filter settings.
///
/// The state is `[a_0, a_1..a_N, b_1..b_N]` with observation row
/// `[1, sin(2πf_n t_k)…, cos(2πf_n t_k)…]` and identity dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KfConfig<T> {
    /// Bin frequencies `f_1 < … < f_N` in Hz.
    pub bin_freqs: Vec<T>,
    /// Diagonal of the random-walk covariance `C_w = q·I`.
    pub process_var: T,
    /// Diagonal of the initial covariance `P_0 = p·I`.
    pub init_var: T,
    /// Measurement noise variance `σ_ν²`.
    pub meas_var: T,
    /// Initial DC coefficient; the first measurement when absent.
    #[serde(default)]
    pub init_dc: Option<T>,
    /// Largest bin amplitude below which no frequency is reported.
    pub amplitude_floor: T,
}

impl<T: Scalar> Default for KfConfig<T> {
    /// 75 bins at `n/60` Hz (1 to 75 bpm), `C_w = 0.01·I`, `P_0 = I`,
    /// `σ_ν² = 1`.
    fn default() -> Self {
        Self::with_bins(75, T::lit(1.25))
    }
}

impl<T: Scalar> KfConfig<T> {
    /// `n_bins` bins uniformly spaced on `(0, f_max]`.
    pub fn with_bins(n_bins: usize, f_max: T) -> Self {
        let step = f_max / T::from_usize_lossy(n_bins.max(1));
        Self {
            bin_freqs: (1..=n_bins).map(|n| T::from_usize_lossy(n) * step).collect(),
            process_var: T::lit(0.01),
            init_var: T::one(),
            meas_var: T::one(),
            init_dc: None,
            amplitude_floor: T::lit(1e-12),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_freqs.is_empty() {
            return Err(Error::InvalidConfig("at least one frequency bin is required".into()));
        }
        if !(self.bin_freqs[0] > T::zero())
            || self.bin_freqs.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::InvalidConfig(
                "bin frequencies must be positive and strictly increasing".into(),
            ));
        }
        if !(self.process_var >= T::zero() && self.init_var > T::zero() && self.meas_var > T::zero()) {
            return Err(Error::InvalidConfig(
                "KF variances must satisfy C_w >= 0, P_0 > 0, sigma_nu^2 > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Runs the Fourier-coefficient filter over `z` sampled at `timestamps`
/// (uneven spacing allowed). Reports, per sample, the bin with the largest
/// posterior amplitude `√(a_n² + b_n²)` and the posterior fit `G·x̂`.
pub fn kf_estimate<T: Scalar>(z: &[T], timestamps: &[T], cfg: &KfConfig<T>) -> Result<EstimateSeries<T>> {
    cfg.validate()?;
    check_inputs(timestamps, z)?;
    if z.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let nb = cfg.bin_freqs.len();
    let dim = 2 * nb + 1;
    let mut x = vec![T::zero(); dim];
    x[0] = cfg.init_dc.unwrap_or(z[0]);
    let mut p = Matrix::identity(dim).scale(cfg.init_var);
    let mut g = vec![T::zero(); dim];
    let mut pg = vec![T::zero(); dim];
    let mut series = EstimateSeries::with_capacity(Method::Kf, z.len());

    for (k, (&t, &obs)) in timestamps.iter().zip(z).enumerate() {
        if k > 0 {
            for i in 0..dim {
                p[(i, i)] += cfg.process_var;
            }
        }
        g[0] = T::one();
        for (n, &f) in cfg.bin_freqs.iter().enumerate() {
            let (s, c) = (T::TAU() * f * t).sin_cos();
            g[1 + n] = s;
            g[1 + nb + n] = c;
        }
        for i in 0..dim {
            pg[i] = (0..dim).map(|j| p[(i, j)] * g[j]).sum();
        }
        let s = g.iter().zip(&pg).map(|(&a, &b)| a * b).sum::<T>() + cfg.meas_var;
        let innov = obs - g.iter().zip(&x).map(|(&a, &b)| a * b).sum::<T>();
        for i in 0..dim {
            x[i] += pg[i] / s * innov;
        }
        p.add_outer(-s.recip(), &pg, &pg);
        if k % 64 == 63 {
            p.symmetrize();
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { index: k });
        }

        let amps = (0..nb).map(|n| x[1 + n].hypot(x[1 + nb + n]));
        let f_hat = match argmax_first(amps) {
            Some((n, a)) if a > cfg.amplitude_floor => Some(cfg.bin_freqs[n]),
            _ => None,
        };
        let recon = g.iter().zip(&x).map(|(&a, &b)| a * b).sum();
        series.push(k, t, f_hat, recon);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    const FS: f64 = 31.25;

    fn times(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 / FS).collect()
    }

    #[test]
    fn default_grid() {
        let cfg = KfConfig::<f64>::default();
        assert_eq!(cfg.bin_freqs.len(), 75);
        assert!((cfg.bin_freqs[0] - 1.0 / 60.0).abs() < 1e-15);
        assert!((cfg.bin_freqs[74] - 1.25).abs() < 1e-12);
        assert!((cfg.bin_freqs[11] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn constant_input_has_no_frequency() {
        let t = times(400);
        let z = vec![-48.0; 400];
        let est = kf_estimate(&z, &t, &KfConfig::default()).unwrap();
        assert!(est.f_hat.iter().all(|f| f.is_none()));
        assert!(est.reconstruction.iter().all(|v| (v + 48.0).abs() < 1e-9));
    }

    #[test]
    fn constant_input_dc_converges_from_wrong_start() {
        let t = times(2000);
        let z = vec![3.0; 2000];
        let cfg = KfConfig {
            init_dc: Some(0.0),
            ..KfConfig::default()
        };
        let est = kf_estimate(&z, &t, &cfg).unwrap();
        // the low bins absorb part of the initial step and release it slowly
        let err = |k: usize| (est.reconstruction[k] - 3.0).abs();
        assert!(err(1999) < 1e-2);
        assert!(err(1999) < err(500) && err(500) < err(50));
    }

    #[test]
    fn on_bin_tone_is_found() {
        let n = (60.0 * FS) as usize;
        let t = times(n);
        let f = 14.0 / 60.0;
        let z: Vec<f64> = t.iter().map(|&t| 2.0 + (TAU * f * t + 0.3).sin()).collect();
        let est = kf_estimate(&z, &t, &KfConfig::default()).unwrap();
        let tail = &est.f_hat[n / 2..];
        assert!(tail.iter().all(|v| (v.unwrap() - f).abs() < 1e-12));
    }

    #[test]
    fn uneven_sampling_is_accepted() {
        let t: Vec<f64> = times(3000).into_iter().enumerate().filter(|(k, _)| k % 10 != 3).map(|(_, t)| t).collect();
        let f = 0.2;
        let z: Vec<f64> = t.iter().map(|&t| (TAU * f * t).cos()).collect();
        let est = kf_estimate(&z, &t, &KfConfig::default()).unwrap();
        assert!((est.final_estimate().unwrap() - f).abs() < 1e-12);
    }

    /// Without process noise the filter converges to the batch least-squares
    /// fit (regularized by the prior), solved here through normal equations.
    #[test]
    fn zero_process_noise_matches_least_squares() {
        let cfg = KfConfig {
            bin_freqs: vec![0.1, 0.2, 0.3],
            process_var: 0.0,
            init_var: 1e6,
            meas_var: 0.5,
            init_dc: Some(0.0),
            amplitude_floor: 1e-12,
        };
        let t = times(400);
        let z: Vec<f64> = t
            .iter()
            .map(|&t| 1.0 + 0.7 * (TAU * 0.2 * t).sin() + 0.1 * (TAU * 0.45 * t).cos() + 0.05 * (t * 3.0).sin())
            .collect();
        let est = kf_estimate(&z, &t, &cfg).unwrap();
        let dim = 7;
        let mut ata = Matrix::identity(dim).scale(cfg.meas_var / cfg.init_var);
        let mut atb = vec![0.0; dim];
        let row = |t: f64| {
            let mut g = vec![1.0];
            g.extend(cfg.bin_freqs.iter().map(|f| (TAU * f * t).sin()));
            g.extend(cfg.bin_freqs.iter().map(|f| (TAU * f * t).cos()));
            g
        };
        for (&tk, &zk) in t.iter().zip(&z) {
            let g = row(tk);
            ata.add_outer(1.0, &g, &g);
            for i in 0..dim {
                atb[i] += g[i] * zk;
            }
        }
        let coef = ata.solve_spd(&atb).unwrap();
        let last = row(*t.last().unwrap());
        let fit: f64 = last.iter().zip(&coef).map(|(a, b)| a * b).sum();
        assert!((fit - est.reconstruction[399]).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        let t = times(3);
        assert!(matches!(
            kf_estimate(&[1.0, f64::NAN, 1.0], &t, &KfConfig::default()),
            Err(Error::NonFinite { index: 1 })
        ));
        let cfg = KfConfig {
            bin_freqs: vec![0.2, 0.1],
            ..KfConfig::default()
        };
        assert!(kf_estimate(&[1.0, 1.0, 1.0], &t, &cfg).is_err());
    }
}
