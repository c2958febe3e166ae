use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::Sos;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Settings of the periodogram SNR estimate ρ̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrConfig<T> {
    /// Band `𝓢` in Hz; the DC bin is always excluded.
    pub band: [T; 2],
    /// Harmonics of `f` whose neighborhoods form `𝓛`.
    pub n_harmonics: usize,
    /// Half-width of each neighborhood in Hz (±2 bpm by default).
    pub neighborhood: T,
    /// Transform length; the next power of two of the trace, at least 2048,
    /// when absent.
    #[serde(default)]
    pub fft_len: Option<usize>,
}

impl<T: Scalar> Default for SnrConfig<T> {
    fn default() -> Self {
        Self {
            band: [T::lit(0.1), T::lit(3.0)],
            n_harmonics: 2,
            neighborhood: T::lit(0.033),
            fft_len: None,
        }
    }
}

impl<T: Scalar> SnrConfig<T> {
    fn fft_len(&self, n: usize) -> usize {
        self.fft_len.unwrap_or_else(|| n.next_power_of_two().max(2048))
    }

    /// Bins of `𝓛` and of `𝓢 \ 𝓛` for a trace of `n` samples.
    fn bins(&self, n: usize, fs: T, f_true: T) -> Result<(usize, Vec<usize>, Vec<usize>)> {
        let nfft = self.fft_len(n);
        let empty = || Error::BandEmpty {
            low: self.band[0].as_f64(),
            high: self.band[1].as_f64(),
        };
        if nfft < n || self.n_harmonics == 0 {
            return Err(Error::InvalidConfig(
                "snr estimate needs fft_len >= trace length and at least one harmonic".into(),
            ));
        }
        let df = fs / T::from_usize_lossy(nfft);
        let mut near = Vec::new();
        let mut rest = Vec::new();
        for l in 1..=nfft / 2 {
            let f = T::from_usize_lossy(l) * df;
            if f < self.band[0] || f > self.band[1] {
                continue;
            }
            let close = (1..=self.n_harmonics)
                .any(|m| (f - T::from_usize_lossy(m) * f_true).abs() <= self.neighborhood);
            if close {
                near.push(l);
            } else {
                rest.push(l);
            }
        }
        if near.is_empty() || rest.is_empty() {
            return Err(empty());
        }
        Ok((nfft, near, rest))
    }
}

/// `|Y[l]|²` for `l = 0..=fft_len/2` of the zero-padded sequence.
pub fn periodogram<T: Scalar>(y: &[T], fft_len: usize) -> Vec<T> {
    let mut buf: Vec<Complex<T>> = y.iter().map(|&v| Complex::new(v, T::zero())).collect();
    buf.resize(fft_len, Complex::new(T::zero(), T::zero()));
    FftPlanner::new().plan_fft_forward(fft_len).process(&mut buf);
    buf.truncate(fft_len / 2 + 1);
    buf.into_iter().map(|c| c.norm_sqr()).collect()
}

/// ρ̂ in dB: periodogram power within the neighborhoods of the first
/// harmonics of `f_true` against the power in the rest of the band.
pub fn snr_estimate<T: Scalar>(y: &[T], fs: T, f_true: T, cfg: &SnrConfig<T>) -> Result<T> {
    if y.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: y.len(),
        });
    }
    let (nfft, near, rest) = cfg.bins(y.len(), fs, f_true)?;
    let p = periodogram(y, nfft);
    let num: T = near.iter().map(|&l| p[l]).sum();
    let den: T = rest.iter().map(|&l| p[l]).sum();
    if !(den > T::zero()) {
        return Ok(T::infinity());
    }
    Ok(T::lit(10.0) * (num / den).log10())
}

struct Powers<T> {
    signal_near: T,
    signal_rest: T,
    /// Expected noise power per unit noise variance.
    gain_near: T,
    gain_rest: T,
}

fn powers<T: Scalar>(clean_y: &[T], sos: &Sos<T>, fs: T, f_true: T, cfg: &SnrConfig<T>) -> Result<Powers<T>> {
    let (nfft, near, rest) = cfg.bins(clean_y.len(), fs, f_true)?;
    let p = periodogram(clean_y, nfft);
    // E|N[l]|² = n σ² |H(f_l)|² for white noise of variance σ²
    let n = T::from_usize_lossy(clean_y.len());
    let df = fs / T::from_usize_lossy(nfft);
    let gain = |bins: &[usize]| -> T {
        bins.iter()
            .map(|&l| n * sos.response(T::from_usize_lossy(l) * df, fs).norm_sqr())
            .sum()
    };
    let out = Powers {
        signal_near: near.iter().map(|&l| p[l]).sum(),
        signal_rest: rest.iter().map(|&l| p[l]).sum(),
        gain_near: gain(&near),
        gain_rest: gain(&rest),
    };
    if !(out.signal_near > T::zero()) {
        return Err(Error::Domain {
            function: "noise_std_for_snr",
            value: 0.0,
            domain: "signal with power near its harmonics",
        });
    }
    Ok(out)
}

/// Standard deviation of white dB noise that puts a clean trace at
/// `target_db`.
///
/// The SNR here is the expected signal power in the harmonic bins over the
/// expected noise power across the whole band, both measured after the
/// low-pass `sos`. This is what `snr_estimate` approaches when the noise
/// inside `𝓛` and the signal outside it are negligible; unlike ρ̂ it is not
/// bounded below by the bin-count ratio. `clean_y` is the preprocessed
/// noiseless sequence.
pub fn noise_std_for_snr<T: Scalar>(
    clean_y: &[T],
    sos: &Sos<T>,
    fs: T,
    f_true: T,
    target_db: T,
    cfg: &SnrConfig<T>,
) -> Result<T> {
    let p = powers(clean_y, sos, fs, f_true, cfg)?;
    let ratio = T::lit(10.0).powf(target_db / T::lit(10.0));
    Ok((p.signal_near / (ratio * (p.gain_near + p.gain_rest))).sqrt())
}

/// Standard deviation of white dB noise for which the expected powers in
/// `snr_estimate` give ρ̂ = `target_db`, counting the noise that falls into
/// the harmonic bins and the signal that leaks out of them.
///
/// Fails with a domain error when the target is above the clean trace's own
/// ρ̂ or below the pure-noise value.
pub fn noise_std_for_estimated_snr<T: Scalar>(
    clean_y: &[T],
    sos: &Sos<T>,
    fs: T,
    f_true: T,
    target_db: T,
    cfg: &SnrConfig<T>,
) -> Result<T> {
    let p = powers(clean_y, sos, fs, f_true, cfg)?;
    let r = T::lit(10.0).powf(target_db / T::lit(10.0));
    let num = p.signal_near - r * p.signal_rest;
    let den = r * p.gain_rest - p.gain_near;
    if !(num > T::zero() && den > T::zero()) {
        return Err(Error::Domain {
            function: "noise_std_for_estimated_snr",
            value: target_db.as_f64(),
            domain: "between the pure-noise and the noiseless SNR estimate",
        });
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{design_elliptic, FilterSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const FS: f64 = 31.25;

    fn tone(n: usize, f: f64, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|k| amp * (2.0 * std::f64::consts::PI * f * k as f64 / FS).sin())
            .collect()
    }

    fn noise(n: usize, std: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, std).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn clean_tone_is_far_above_zero() {
        let y = tone(3750, 0.2, 1.0);
        let rho = snr_estimate(&y, FS, 0.2, &SnrConfig::default()).unwrap();
        // rectangular-window sidelobes outside ±2 bpm cap the value
        assert!(rho > 12.0, "{rho}");
    }

    #[test]
    fn white_noise_matches_bin_count_ratio() {
        let cfg = SnrConfig::default();
        let n = 3750;
        let (_, near, rest) = cfg.bins(n, FS, 0.2).unwrap();
        let expected = 10.0 * (near.len() as f64 / rest.len() as f64).log10();
        let mean_ratio: f64 = (0..40)
            .map(|s| {
                let r = snr_estimate(&noise(n, 1.0, s), FS, 0.2, &cfg).unwrap();
                10f64.powf(r / 10.0)
            })
            .sum::<f64>()
            / 40.0;
        let got = 10.0 * mean_ratio.log10();
        assert!((got - expected).abs() < 0.5, "{got} vs {expected}");
    }

    #[test]
    fn tone_plus_noise_matches_power_ratio() {
        // tone power 0.5; noise confined to the band by construction of the
        // ratio: in-band noise power = σ² · (band width)/(fs/2)
        let n = 3750;
        let cfg = SnrConfig::default();
        let sigma: f64 = 0.9;
        let in_band = sigma * sigma * (2.9 / (FS / 2.0));
        let analytic = 10.0 * (0.5 / in_band).log10();
        let y: Vec<f64> = tone(n, 0.2, 1.0)
            .iter()
            .zip(noise(n, sigma, 3))
            .map(|(a, b)| a + b)
            .collect();
        let rho = snr_estimate(&y, FS, 0.2, &cfg).unwrap();
        assert!((rho - analytic).abs() < 1.5, "{rho} vs {analytic}");
    }

    #[test]
    fn invariant_to_scaling() {
        let y: Vec<f64> = tone(2000, 0.25, 1.0)
            .iter()
            .zip(noise(2000, 1.0, 9))
            .map(|(a, b)| a + b)
            .collect();
        let cfg = SnrConfig::default();
        let a = snr_estimate(&y, FS, 0.25, &cfg).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| 7.5 * v).collect();
        let b = snr_estimate(&scaled, FS, 0.25, &cfg).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn band_without_bins_is_an_error() {
        let cfg = SnrConfig {
            band: [0.1, 0.1001],
            ..SnrConfig::default()
        };
        let y = tone(512, 0.2, 1.0);
        assert!(matches!(snr_estimate(&y, FS, 0.2, &cfg), Err(Error::BandEmpty { .. })));
    }

    fn mean_estimate(clean: &[f64], sigma: f64, sos: &Sos<f64>, cfg: &SnrConfig<f64>) -> f64 {
        let mean_ratio: f64 = (0..20)
            .map(|s| {
                let noisy: Vec<f64> = clean.iter().zip(noise(clean.len(), sigma, 100 + s)).map(|(a, b)| a + b).collect();
                let y = sos.filter(&noisy);
                10f64.powf(snr_estimate(&y, FS, 0.2, cfg).unwrap() / 10.0)
            })
            .sum::<f64>()
            / 20.0;
        10.0 * mean_ratio.log10()
    }

    #[test]
    fn estimated_snr_calibration_is_unbiased() {
        let sos = design_elliptic(&FilterSpec::default(), FS).unwrap();
        let raw = tone(3750, 0.2, 0.5);
        let clean = sos.filter(&raw);
        let cfg = SnrConfig::default();
        for target in [-8.0, -5.0, 3.0] {
            let sigma = noise_std_for_estimated_snr(&clean, &sos, FS, 0.2, target, &cfg).unwrap();
            let got = mean_estimate(&raw, sigma, &sos, &cfg);
            assert!((got - target).abs() < 0.3, "{target}: {got}");
        }
        // below the noise-only value no noise level works
        assert!(noise_std_for_estimated_snr(&clean, &sos, FS, 0.2, -20.0, &cfg).is_err());
    }

    #[test]
    fn calibrated_noise_hits_the_target_at_high_snr() {
        let spec = FilterSpec::default();
        let sos = design_elliptic(&spec, FS).unwrap();
        let n = 3750;
        let clean = sos.filter(&tone(n, 0.2, 0.5));
        let cfg = SnrConfig::default();
        let target = 5.0;
        let sigma = noise_std_for_snr(&clean, &sos, FS, 0.2, target, &cfg).unwrap();
        let mean_ratio: f64 = (0..20)
            .map(|s| {
                let noisy: Vec<f64> = tone(n, 0.2, 0.5)
                    .iter()
                    .zip(noise(n, sigma, 100 + s))
                    .map(|(a, b)| a + b)
                    .collect();
                let y = sos.filter(&noisy);
                10f64.powf(snr_estimate(&y, FS, 0.2, &cfg).unwrap() / 10.0)
            })
            .sum::<f64>()
            / 20.0;
        let got = 10.0 * mean_ratio.log10();
        // noise inside the harmonic bins biases ρ̂ upward by about 0.5 dB here
        assert!((got - target).abs() < 1.0, "{got}");
    }
}
