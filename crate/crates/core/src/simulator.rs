//! Synthetic multi-channel RSS traces.
//!
//! Each channel evaluates the exact reflection model along the reflector
//! trajectory, then adds Gaussian measurement noise in dB, quantizes and
//! drops packets. Channels use independent random streams derived from the
//! scenario seed, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    effective_reflection, excess_path, fresnel_coefficient, incidence_cosine, LinkGeometry,
    MediumParams, ReflectorMotion, NODE_TOLERANCE,
};
use crate::rss_model::{carson_truncation, ratio_db_exact, ReflectionState};
use crate::scalar::Scalar;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// The sixteen 2.4 GHz channels, 2405 MHz to 2480 MHz in 5 MHz steps.
pub fn default_channels() -> Vec<f64> {
    (0..16).map(|k| 2.405e9 + 5e6 * k as f64).collect()
}

pub fn wavelength_of<T: Scalar>(freq_hz: T) -> T {
    T::lit(SPEED_OF_LIGHT) / freq_hz
}

/// Material and path-loss parameters shared by all channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium<T> {
    pub pathloss_exponent: T,
    pub rel_permittivity: T,
}

impl<T: Scalar> Medium<T> {
    pub fn at_frequency(&self, freq_hz: T) -> MediumParams<T> {
        MediumParams {
            wavelength: wavelength_of(freq_hz),
            pathloss_exponent: self.pathloss_exponent,
            rel_permittivity: self.rel_permittivity,
        }
    }
}

/// How the reflector position enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// Δ, Γ and G recomputed from the true position at every sample.
    #[default]
    Exact,
    /// First-order path `Δ0 + δ_Δ·g(t) + δ_v·t` with G frozen at the rest
    /// position; the decibel ratio itself is still evaluated exactly.
    Linearized,
}

/// One synthetic experiment. All quantities are SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig<T> {
    pub link: LinkGeometry<T>,
    pub motion: ReflectorMotion<T>,
    pub medium: Medium<T>,
    /// Channel center frequencies (Hz).
    pub channels_hz: Vec<T>,
    /// Per-channel sampling rate (Hz).
    pub fs: T,
    /// Trace length (s).
    pub duration: T,
    #[serde(default)]
    pub baseline_dbm: T,
    /// Standard deviation of the additive dB noise.
    #[serde(default)]
    pub noise_std: T,
    /// Quantization step in dB; 0 disables quantization.
    #[serde(default)]
    pub quantization_step: T,
    #[serde(default)]
    pub drop_prob: T,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub propagation: Propagation,
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        self.motion.validate()?;
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.channels_hz.is_empty() {
            return bad("at least one channel is required");
        }
        if !(self.fs > T::zero()) || !self.fs.is_finite() {
            return bad("fs must be > 0");
        }
        if !(self.duration > T::zero()) || !self.duration.is_finite() {
            return bad("duration must be > 0");
        }
        if !(self.noise_std >= T::zero()) {
            return bad("noise_std must be >= 0");
        }
        if !(self.quantization_step >= T::zero()) {
            return bad("quantization_step must be >= 0");
        }
        if !(self.drop_prob >= T::zero() && self.drop_prob < T::one()) {
            return bad("drop_prob must lie in [0, 1)");
        }
        if !self.baseline_dbm.is_finite() {
            return bad("baseline_dbm must be finite");
        }
        for &f in &self.channels_hz {
            if !(f > T::zero()) || !f.is_finite() {
                return bad("channel frequencies must be > 0");
            }
            let medium = self.medium.at_frequency(f);
            medium.validate()?;
            let state = ReflectionState::from_geometry(&self.link, &self.motion, &medium)?;
            let m = carson_truncation(state.a_tilde, state.breath_freq)?;
            let top = T::from_usize_lossy(m) * state.breath_freq + state.center_shift().abs();
            if !(self.fs > T::lit(2.0) * top) {
                return Err(Error::InvalidConfig(format!(
                    "fs = {} Hz does not exceed twice the highest modeled tone ({} Hz) on channel {}",
                    self.fs, top, f
                )));
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.fs).floor().to_usize().unwrap_or(0).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RssUnit {
    /// Baseline removed, `r[k] = 𝒫[k] − 𝒫_r`.
    #[default]
    Db,
    /// Absolute received power.
    Dbm,
}

/// Timestamped RSS samples of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssTrace<T> {
    pub channel_id: usize,
    pub wavelength: T,
    pub unit: RssUnit,
    pub timestamps: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> RssTrace<T> {
    pub fn new(channel_id: usize, wavelength: T, timestamps: Vec<T>, values: Vec<T>) -> Result<Self> {
        let trace = Self {
            channel_id,
            wavelength,
            unit: RssUnit::Db,
            timestamps,
            values,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timestamps.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                left: self.timestamps.len(),
                right: self.values.len(),
            });
        }
        if let Some(i) = self.timestamps.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotonicTime { index: i + 1 });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Adds a constant offset, e.g. to move between dB and dBm.
    pub fn offset(mut self, by: T, unit: RssUnit) -> Self {
        self.values.iter_mut().for_each(|v| *v += by);
        self.unit = unit;
        self
    }
}

/// Baseline received power `𝒫_r = 10·log10(2σ² + ρσ²)` in dBm.
pub fn baseline_model<T: Scalar>(snr: T, variance: T) -> Result<T> {
    if !(snr >= T::zero()) || !(variance > T::zero()) {
        return Err(Error::Domain {
            function: "baseline_model",
            value: if snr >= T::zero() { variance.as_f64() } else { snr.as_f64() },
            domain: "rho >= 0, sigma^2 > 0",
        });
    }
    Ok(T::lit(10.0) * ((T::lit(2.0) + snr) * variance).log10())
}

/// Noiseless model value at time `t` for one channel.
pub fn model_value<T: Scalar>(
    config: &ScenarioConfig<T>,
    medium: &MediumParams<T>,
    state: &ReflectionState<T>,
    t: T,
) -> Result<T> {
    match config.propagation {
        Propagation::Linearized => {
            let delta = state.linearized_excess(config.motion.amplitude, t);
            Ok(ratio_db_exact(state.g, delta, medium.wavelength))
        }
        Propagation::Exact => {
            let p = config.motion.position(t);
            let link = &config.link;
            let tol = T::lit(NODE_TOLERANCE);
            if !(p.distance(link.tx) > tol && p.distance(link.rx) > tol) {
                return Err(Error::ReflectorHitsNode { time: t.as_f64() });
            }
            let delta = excess_path(link, p)?;
            let gamma = fresnel_coefficient(incidence_cosine(link, p)?, medium.rel_permittivity);
            let g = effective_reflection(gamma, delta, link.length(), medium.pathloss_exponent);
            Ok(ratio_db_exact(g, delta, medium.wavelength))
        }
    }
}

fn synthesize_channel<T: Scalar>(config: &ScenarioConfig<T>, index: usize) -> Result<RssTrace<T>> {
    let medium = config.medium.at_frequency(config.channels_hz[index]);
    let state = ReflectionState::from_geometry(&config.link, &config.motion, &medium)?;
    let n = config.sample_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let noise = Normal::new(0.0, config.noise_std.as_f64())
        .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
    let drop_prob = config.drop_prob.as_f64();
    let step = config.quantization_step;
    let mut timestamps = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let t = T::from_usize_lossy(k) / config.fs;
        // both draws happen for every sample so streams stay aligned
        let nu = T::lit(noise.sample(&mut rng));
        let dropped = rng.random::<f64>() < drop_prob;
        if dropped {
            continue;
        }
        let mut v = model_value(config, &medium, &state, t)? + nu;
        if step > T::zero() {
            v = (v / step).round() * step;
        }
        timestamps.push(t);
        values.push(v);
    }
    Ok(RssTrace {
        channel_id: index,
        wavelength: medium.wavelength,
        unit: RssUnit::Db,
        timestamps,
        values,
    })
}

/// Baseline-removed traces `r[k]`, one per channel.
pub fn synthesize<T: Scalar>(config: &ScenarioConfig<T>) -> Result<Vec<RssTrace<T>>> {
    config.validate()?;
    (0..config.channels_hz.len())
        .into_par_iter()
        .map(|i| synthesize_channel(config, i))
        .collect()
}

/// Absolute traces `𝒫[k] = r[k] + 𝒫_r` in dBm.
pub fn synthesize_dbm<T: Scalar>(config: &ScenarioConfig<T>) -> Result<Vec<RssTrace<T>>> {
    Ok(synthesize(config)?
        .into_iter()
        .map(|tr| tr.offset(config.baseline_dbm, RssUnit::Dbm))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::rss_model::log_harmonics;

    fn scenario(delta0_wavelengths: f64) -> ScenarioConfig<f64> {
        let lambda = 0.125;
        let delta0 = delta0_wavelengths * lambda;
        let y = (((delta0 + 2.0) / 2.0f64).powi(2) - 1.0).sqrt();
        ScenarioConfig {
            link: LinkGeometry::new(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)).unwrap(),
            motion: ReflectorMotion {
                p0: Point2::new(0.0, y),
                direction: Point2::new(0.0, -1.0),
                amplitude: 0.01,
                breath_freq: 0.2,
                velocity: Point2::default(),
            },
            medium: Medium {
                pathloss_exponent: 2.0,
                rel_permittivity: 1.5,
            },
            channels_hz: vec![SPEED_OF_LIGHT / lambda],
            fs: 31.25,
            duration: 20.0,
            baseline_dbm: -60.0,
            noise_std: 0.0,
            quantization_step: 0.0,
            drop_prob: 0.0,
            seed: 7,
            propagation: Propagation::Exact,
        }
    }

    #[test]
    fn default_channel_wavelengths() {
        let ch = default_channels();
        assert_eq!(ch.len(), 16);
        assert_eq!(ch[0], 2.405e9);
        assert_eq!(ch[15], 2.48e9);
        assert!((wavelength_of(ch[0]) - 0.124_653).abs() < 1e-6);
    }

    #[test]
    fn static_reflector_gives_constant_trace() {
        let mut cfg = scenario(0.61);
        cfg.motion.amplitude = 0.0;
        let tr = &synthesize(&cfg).unwrap()[0];
        let medium = cfg.medium.at_frequency(cfg.channels_hz[0]);
        let s = ReflectionState::from_geometry(&cfg.link, &cfg.motion, &medium).unwrap();
        let want = ratio_db_exact(s.g, s.delta0, medium.wavelength);
        assert!(tr.values.iter().all(|&v| (v - want).abs() < 1e-12));
        assert_eq!(tr.len(), 625);
    }

    #[test]
    fn half_wavelength_multiple_doubles_frequency() {
        let cfg = scenario(1.5);
        let tr = &synthesize(&cfg).unwrap()[0];
        let n = 625; // four breathing periods
        let amp = |m: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &x) in tr.values[..n].iter().enumerate() {
                let w = std::f64::consts::TAU * (4 * m * k) as f64 / n as f64;
                re += x * w.cos();
                im += x * w.sin();
            }
            2.0 * re.hypot(im) / n as f64
        };
        // Γ and G still vary along the true path, which leaks some energy
        // into the fundamental
        assert!(amp(2) > amp(1), "{} vs {}", amp(2), amp(1));
        let generic = synthesize(&scenario(1.3)).unwrap();
        let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread(&tr.values) < spread(&generic[0].values));
    }

    #[test]
    fn deterministic_and_channel_independent() {
        let mut cfg = scenario(1.3);
        cfg.channels_hz = default_channels();
        cfg.noise_std = 1.0;
        cfg.quantization_step = 1.0;
        cfg.drop_prob = 0.1;
        let a = synthesize(&cfg).unwrap();
        let b = synthesize(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        for tr in &a {
            tr.validate().unwrap();
            assert!(tr.values.iter().all(|v| (v - v.round()).abs() < 1e-12));
            assert!(tr.len() < 625 && tr.len() > 500);
        }
        assert_ne!(a[0].timestamps, a[1].timestamps);
        cfg.seed += 1;
        assert_ne!(synthesize(&cfg).unwrap(), a);
    }

    #[test]
    fn dbm_trace_is_offset_of_db_trace() {
        let mut cfg = scenario(1.3);
        cfg.noise_std = 0.5;
        cfg.baseline_dbm = baseline_model(2.0, 0.5).unwrap();
        assert!((cfg.baseline_dbm - 3.010_3).abs() < 1e-4);
        let db = synthesize(&cfg).unwrap();
        let dbm = synthesize_dbm(&cfg).unwrap();
        for (a, b) in db[0].values.iter().zip(&dbm[0].values) {
            assert!((b - cfg.baseline_dbm - a).abs() < 1e-12);
        }
        assert_eq!(dbm[0].unit, RssUnit::Dbm);
    }

    #[test]
    fn baseline_examples() {
        assert!((baseline_model(0.0, 1.5_f64).unwrap() - 10.0 * 3.0_f64.log10()).abs() < 1e-14);
        assert!(baseline_model(-1.0, 1.0_f64).is_err());
        assert!(baseline_model(1.0, 0.0_f64).is_err());
    }

    #[test]
    fn linearized_half_wavelength_has_no_fundamental() {
        let mut cfg = scenario(1.5);
        cfg.propagation = Propagation::Linearized;
        let tr = &synthesize(&cfg).unwrap()[0];
        let n = 625;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &x) in tr.values[..n].iter().enumerate() {
            let w = std::f64::consts::TAU * (4 * k) as f64 / n as f64;
            re += x * w.cos();
            im += x * w.sin();
        }
        assert!(re.hypot(im) / (n as f64) < 1e-12);
    }

    #[test]
    fn noiseless_variance_matches_harmonic_energy() {
        for (dw, propagation) in [(1.3, Propagation::Linearized), (6.3, Propagation::Exact)] {
            noiseless_variance_case(dw, propagation);
        }
    }

    fn noiseless_variance_case(dw: f64, propagation: Propagation) {
        let mut cfg = scenario(dw);
        cfg.propagation = propagation;
        cfg.duration = 100.0;
        let tr = &synthesize(&cfg).unwrap()[0];
        let n = tr.len() as f64;
        let mean = tr.values.iter().sum::<f64>() / n;
        let var = tr.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let medium = cfg.medium.at_frequency(cfg.channels_hz[0]);
        let s = ReflectionState::from_geometry(&cfg.link, &cfg.motion, &medium).unwrap();
        let model = log_harmonics(&s, 8, 50).unwrap();
        let predicted = model.harmonic_energy() / 2.0;
        assert!(((var - predicted) / predicted).abs() < 0.02, "{var} vs {predicted}");
    }

    #[test]
    fn validation_errors() {
        let mut cfg = scenario(1.3);
        cfg.duration = 0.0;
        assert!(matches!(synthesize(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = scenario(1.3);
        cfg.drop_prob = 1.0;
        assert!(synthesize(&cfg).is_err());
        let mut cfg = scenario(1.3);
        cfg.fs = 0.5;
        assert!(synthesize(&cfg).is_err());
        let mut cfg = scenario(1.3);
        cfg.motion.direction = Point2::new(0.0, 2.0);
        assert!(synthesize(&cfg).is_err());
    }

    #[test]
    fn trajectory_through_node_is_rejected() {
        let mut cfg = scenario(1.3);
        cfg.motion.p0 = Point2::new(0.5, 0.5);
        cfg.motion.velocity = Point2::new(0.05, -0.05);
        cfg.motion.amplitude = 0.0;
        cfg.fs = 8.0;
        cfg.duration = 12.0;
        let err = synthesize(&cfg).unwrap_err();
        assert!(matches!(err, Error::ReflectorHitsNode { time } if (time - 10.0).abs() < 1e-9));
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = scenario(1.3);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let bad = text.replace("\"fs\"", "\"fz\"");
        assert!(serde_json::from_str::<ScenarioConfig<f64>>(&bad).is_err());
    }
}
