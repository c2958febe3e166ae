use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{argmax_first, check_inputs, EstimateSeries, Method};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sliding-window periodogram settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DftConfig<T> {
    /// Window length `N_w` in samples.
    pub window_len: usize,
    /// Overlap `N_o` between consecutive windows in samples.
    pub overlap: usize,
    /// Transform length `N_DFT` (zero padding).
    pub fft_len: usize,
    pub fs: T,
    /// Search band `[f_min, f_max]` in Hz.
    pub band: [T; 2],
}

impl<T: Scalar> DftConfig<T> {
    /// 30 s rectangular windows advancing by one sample, 2048-point
    /// transform (more if the window is longer), band 1 to 75 bpm.
    pub fn for_rate(fs: T) -> Self {
        let window_len = (T::lit(30.0) * fs).ceil().to_usize().unwrap_or(1).max(2);
        Self {
            window_len,
            overlap: window_len - 1,
            fft_len: window_len.next_power_of_two().max(2048),
            fs,
            band: [T::one() / T::lit(60.0), T::lit(1.25)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.overlap < self.window_len && self.window_len <= self.fft_len) {
            return Err(Error::InvalidConfig(format!(
                "periodogram needs overlap < window <= fft length (got {}, {}, {})",
                self.overlap, self.window_len, self.fft_len
            )));
        }
        if !(self.fs > T::zero()) {
            return Err(Error::InvalidConfig("fs must be > 0".into()));
        }
        if !(self.band[0] >= T::zero() && self.band[1] > self.band[0]) {
            return Err(Error::InvalidConfig("band must satisfy 0 <= f_min < f_max".into()));
        }
        Ok(())
    }

    pub fn bin_frequency(&self, l: usize) -> T {
        T::from_usize_lossy(l) * self.fs / T::from_usize_lossy(self.fft_len)
    }

    /// Bins inside the band, DC excluded.
    pub fn band_bins(&self) -> Result<std::ops::RangeInclusive<usize>> {
        let n = T::from_usize_lossy(self.fft_len);
        let lo = (self.band[0] * n / self.fs).ceil().to_usize().unwrap_or(0).max(1);
        let hi = (self.band[1] * n / self.fs)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(self.fft_len / 2);
        if lo > hi {
            return Err(Error::BandEmpty {
                low: self.band[0].as_f64(),
                high: self.band[1].as_f64(),
            });
        }
        Ok(lo..=hi)
    }
}

/// Band-limited power spectra of every window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram<T> {
    pub window_end: Vec<T>,
    pub freqs: Vec<T>,
    /// `psd[w][b]` is `|Y_w[l]|²` at `freqs[b]`.
    pub psd: Vec<Vec<T>>,
}

/// Sliding-window periodogram estimate on a uniformly sampled, mean-removed
/// sequence `y`. `mean` is added back to the reconstructed signal. Each
/// estimate is stamped with the time of the last sample of its window.
pub fn dft_estimate<T: Scalar>(
    y: &[T],
    timestamps: &[T],
    cfg: &DftConfig<T>,
    mean: T,
) -> Result<(EstimateSeries<T>, Spectrogram<T>)> {
    cfg.validate()?;
    check_inputs(timestamps, y)?;
    let nw = cfg.window_len;
    if y.len() < nw {
        return Err(Error::InsufficientData {
            needed: nw,
            got: y.len(),
        });
    }
    let bins = cfg.band_bins()?;
    let hop = nw - cfg.overlap;
    let fft = FftPlanner::<T>::new().plan_fft_forward(cfg.fft_len);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); cfg.fft_len];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];

    let n_windows = (y.len() - nw) / hop + 1;
    let mut series = EstimateSeries::with_capacity(Method::Dft, n_windows);
    let mut spec = Spectrogram {
        window_end: Vec::with_capacity(n_windows),
        freqs: bins.clone().map(|l| cfg.bin_frequency(l)).collect(),
        psd: Vec::with_capacity(n_windows),
    };
    let two_over_n = T::lit(2.0) / T::from_usize_lossy(nw);
    let last = T::from_usize_lossy(nw - 1);
    let ndft = T::from_usize_lossy(cfg.fft_len);
    for w in 0..n_windows {
        let start = w * hop;
        for (slot, &v) in buf.iter_mut().zip(&y[start..start + nw]) {
            *slot = Complex::new(v, T::zero());
        }
        buf[nw..].fill(Complex::new(T::zero(), T::zero()));
        fft.process_with_scratch(&mut buf, &mut scratch);

        let psd: Vec<T> = bins.clone().map(|l| buf[l].norm_sqr()).collect();
        let end = start + nw - 1;
        let (best, _) = argmax_first(psd.iter().copied()).expect("band is nonempty");
        let l = *bins.start() + best;
        // dominant sinusoid evaluated at the window's last sample
        let phase = T::TAU() * T::from_usize_lossy(l) * last / ndft;
        let tone = buf[l] * Complex::new(phase.cos(), phase.sin());
        series.push(end, timestamps[end], Some(cfg.bin_frequency(l)), mean + two_over_n * tone.re);
        spec.window_end.push(timestamps[end]);
        spec.psd.push(psd);
    }
    Ok((series, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    const FS: f64 = 31.25;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 / FS).collect()
    }

    fn signal(n: usize, parts: &[(f64, f64)]) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = k as f64 / FS;
                parts.iter().map(|&(a, f)| a * (TAU * f * t + 0.4).sin()).sum()
            })
            .collect()
    }

    #[test]
    fn default_window_settings() {
        let cfg = DftConfig::for_rate(FS);
        assert_eq!(cfg.window_len, 938);
        assert_eq!(cfg.overlap, 937);
        assert_eq!(cfg.fft_len, 2048);
        cfg.validate().unwrap();
    }

    #[test]
    fn quarter_hertz_tone_lands_on_nearest_bin() {
        let cfg = DftConfig::for_rate(FS);
        let y = signal(1200, &[(1.0, 0.25)]);
        let (est, spec) = dft_estimate(&y, &grid(1200), &cfg, 0.0).unwrap();
        assert_eq!(est.len(), 1200 - 938 + 1);
        let want = 16.0 * FS / 2048.0;
        assert!((want - 0.244_14).abs() < 1e-5);
        assert!(est.f_hat.iter().all(|f| (f.unwrap() - want).abs() < 1e-12));
        assert_eq!(spec.psd.len(), est.len());
        assert_eq!(est.timestamps[0], 937.0 / FS);
    }

    #[test]
    fn stronger_second_harmonic_wins() {
        let cfg = DftConfig::for_rate(FS);
        let y = signal(1000, &[(0.3, 0.2), (1.0, 0.4)]);
        let (est, _) = dft_estimate(&y, &grid(1000), &cfg, 0.0).unwrap();
        let f = est.final_estimate().unwrap();
        assert!((f - 0.4).abs() < FS / 2048.0);
    }

    #[test]
    fn scaling_does_not_move_the_peak() {
        let cfg = DftConfig::for_rate(FS);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let y: Vec<f64> = signal(1100, &[(0.5, 0.31)])
            .into_iter()
            .map(|v| v + noise.sample(&mut rng))
            .collect();
        let scaled: Vec<f64> = y.iter().map(|v| v * 7.5).collect();
        let (a, _) = dft_estimate(&y, &grid(1100), &cfg, 0.0).unwrap();
        let (b, _) = dft_estimate(&scaled, &grid(1100), &cfg, 0.0).unwrap();
        assert_eq!(a.f_hat, b.f_hat);
    }

    #[test]
    fn reconstruction_tracks_on_bin_tone() {
        let cfg = DftConfig::for_rate(FS);
        let f = 40.0 * FS / 2048.0;
        let y = signal(1100, &[(0.8, f)]);
        let (est, _) = dft_estimate(&y, &grid(1100), &cfg, -50.0).unwrap();
        for (k, &idx) in est.sample_index.iter().enumerate() {
            // leakage from the non-integer number of periods limits accuracy
            assert!((est.reconstruction[k] - (y[idx] - 50.0)).abs() < 0.05);
        }
    }

    #[test]
    fn errors() {
        let cfg = DftConfig::for_rate(FS);
        let y = signal(500, &[(1.0, 0.25)]);
        assert!(matches!(
            dft_estimate(&y, &grid(500), &cfg, 0.0),
            Err(Error::InsufficientData { needed: 938, got: 500 })
        ));
        let narrow = DftConfig { band: [0.2, 0.21], ..cfg };
        let y = signal(1000, &[(1.0, 0.25)]);
        assert!(matches!(
            dft_estimate(&y, &grid(1000), &narrow, 0.0),
            Err(Error::BandEmpty { .. })
        ));
        let bad = DftConfig { overlap: 938, ..cfg };
        assert!(bad.validate().is_err());
    }
}
