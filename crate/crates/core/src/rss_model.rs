//! Closed-form RSS response of a link perturbed by a periodically moving
//! reflector, in linear and logarithmic scale.
//!
//! The reflected ray changes the received power by the ratio
//! `R = 1 + G² − 2G·cos(2πΔ/λ)`. For a sinusoidal displacement the phase
//! `2πΔ/λ = ψ + Ã·sin(2πft)` is frequency modulated, so `R` and its decibel
//! value `ℛ` expand into Bessel-weighted harmonics of the breathing rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    effective_reflection, excess_path, fresnel_coefficient, gradient_projection, incidence_cosine,
    LinkGeometry, MediumParams, ReflectorMotion,
};
use crate::scalar::{db_per_neper, Scalar};
use crate::special::{bessel_j, dilog};

/// Order of the inner coefficient series used when the caller has no preference.
pub const DEFAULT_SERIES_ORDER: usize = 50;

/// Quantities derived at the rest position `p0` that parametrize every
/// harmonic formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionState<T> {
    /// Excess path length Δ0 at rest (m).
    pub delta0: T,
    /// Gradient of Δ projected on the breathing direction, δ_Δ.
    pub grad_proj: T,
    /// Gradient of Δ projected on the drift velocity, δ_v (m/s).
    pub vel_proj: T,
    /// Fresnel magnitude Γ at rest.
    pub gamma: T,
    /// Effective reflection coefficient G.
    pub g: T,
    /// Effective modulation index Ã = 2πAδ_Δ/λ.
    pub a_tilde: T,
    /// Static phase ψ = 2πΔ0/λ.
    pub psi: T,
    /// κ = 2G/(1+G²).
    pub kappa: T,
    pub wavelength: T,
    pub breath_freq: T,
}

impl<T: Scalar> ReflectionState<T> {
    pub fn from_geometry(
        link: &LinkGeometry<T>,
        motion: &ReflectorMotion<T>,
        medium: &MediumParams<T>,
    ) -> Result<Self> {
        link.validate()?;
        motion.validate()?;
        medium.validate()?;
        let delta0 = excess_path(link, motion.p0)?;
        let grad_proj = gradient_projection(link, motion.p0, motion.direction)?;
        let vel_proj = gradient_projection(link, motion.p0, motion.velocity)?;
        let gamma = fresnel_coefficient(incidence_cosine(link, motion.p0)?, medium.rel_permittivity);
        let g = effective_reflection(gamma, delta0, link.length(), medium.pathloss_exponent);
        let lambda = medium.wavelength;
        Ok(Self {
            delta0,
            grad_proj,
            vel_proj,
            gamma,
            g,
            a_tilde: T::TAU() * motion.amplitude * grad_proj / lambda,
            psi: T::TAU() * delta0 / lambda,
            kappa: kappa(g),
            wavelength: lambda,
            breath_freq: motion.breath_freq,
        })
    }

    /// Builds a state directly from `(G, Ã, ψ, f)`; the geometric fields are
    /// filled consistently for a unit wavelength and amplitude.
    pub fn from_parts(g: T, a_tilde: T, psi: T, breath_freq: T) -> Self {
        Self {
            delta0: psi / T::TAU(),
            grad_proj: a_tilde / T::TAU(),
            vel_proj: T::zero(),
            gamma: g,
            g,
            a_tilde,
            psi,
            kappa: kappa(g),
            wavelength: T::one(),
            breath_freq,
        }
    }

    /// Frequency shift δ_v/λ of the spectrum under constant drift (Hz).
    pub fn center_shift(&self) -> T {
        self.vel_proj / self.wavelength
    }

    /// Excess path along the linearized trajectory `Δ0 + δ_Δ·g(t) + δ_v·t`.
    pub fn linearized_excess(&self, amplitude: T, t: T) -> T {
        let g = amplitude * (T::TAU() * self.breath_freq * t).sin();
        self.delta0 + self.grad_proj * g + self.vel_proj * t
    }
}

fn kappa<T: Scalar>(g: T) -> T {
    T::lit(2.0) * g / (T::one() + g * g)
}

/// Exact power ratio `R = 1 + G² − 2G·cos(2πΔ/λ)`.
pub fn ratio_exact<T: Scalar>(g: T, excess: T, wavelength: T) -> T {
    T::one() + g * g - T::lit(2.0) * g * (T::TAU() * excess / wavelength).cos()
}

/// `ℛ = 10·log10(R)` in dB.
pub fn ratio_db_exact<T: Scalar>(g: T, excess: T, wavelength: T) -> T {
    db_per_neper::<T>() * ratio_exact(g, excess, wavelength).ln()
}

/// Power series `ℛ ≈ −20·log10(e)·Σ_{i≤order} Gⁱ/i·cos(2πiΔ/λ)`.
pub fn series_db<T: Scalar>(g: T, excess: T, wavelength: T, order: usize) -> T {
    let theta = T::TAU() * excess / wavelength;
    let mut gi = T::one();
    let mut acc = T::zero();
    for i in 1..=order {
        gi *= g;
        let it = T::from_usize_lossy(i);
        acc += gi / it * (it * theta).cos();
    }
    -T::lit(2.0) * db_per_neper::<T>() * acc
}

/// Coefficients `b_0..b_I` of `ln(1 − κ·cos x) = Σ b_i cos(ix)`:
/// `b_0 = −ln(1+G²)`, `b_i = −2Gⁱ/i`.
pub fn log_series_coefficients<T: Scalar>(g: T, max_order: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(max_order + 1);
    out.push(-(g * g).ln_1p());
    let mut gi = T::one();
    for i in 1..=max_order {
        gi *= g;
        out.push(-T::lit(2.0) * gi / T::from_usize_lossy(i));
    }
    out
}

/// Smallest series order `I ≥ 50` whose neglected tail is below `1e-12` dB.
pub fn default_series_order<T: Scalar>(g: T) -> usize {
    let g = g.as_f64().abs();
    if g <= 0.0 {
        return DEFAULT_SERIES_ORDER;
    }
    if g >= 1.0 {
        return 100_000;
    }
    // tail ≤ 40·log10(e)·G^(I+1)/((I+1)(1−G))
    let scale = 40.0 * std::f64::consts::LOG10_E / (1.0 - g);
    let mut order = DEFAULT_SERIES_ORDER;
    let mut tail = scale * g.powi(order as i32 + 1) / (order as f64 + 1.0);
    while tail > 1e-12 && order < 100_000 {
        order += 1;
        tail *= g * order as f64 / (order as f64 + 1.0);
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// Truncated harmonic expansion
/// `c_0 + Σ_{m odd} c_m sin(2πmft) + Σ_{m even} c_m cos(2πmft)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicModel<T> {
    pub scale: Scale,
    pub fundamental: T,
    pub dc: T,
    /// `coeffs[m − 1]` holds `c_m` for `m = 1..=M`.
    pub coeffs: Vec<T>,
    /// Drift-induced shift of every tone (Hz); zero for a static reflector.
    #[serde(default)]
    pub center_shift: T,
    /// Inner series order for log-scale models.
    #[serde(default)]
    pub series_order: usize,
}

impl<T: Scalar> HarmonicModel<T> {
    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    /// `c_m` for `m ≥ 1`, zero beyond the truncation.
    pub fn coefficient(&self, m: usize) -> T {
        match m {
            0 => self.dc,
            _ => self.coeffs.get(m - 1).copied().unwrap_or_else(T::zero),
        }
    }

    /// Coefficients of the odd (sine) harmonics `c_1, c_3, …`.
    pub fn sin_coeffs(&self) -> Vec<T> {
        self.coeffs.iter().step_by(2).copied().collect()
    }

    /// Coefficients of the even (cosine) harmonics `c_2, c_4, …`.
    pub fn cos_coeffs(&self) -> Vec<T> {
        self.coeffs.iter().skip(1).step_by(2).copied().collect()
    }

    /// Evaluates the static expansion at time `t`.
    pub fn evaluate(&self, t: T) -> T {
        let phase = T::TAU() * self.fundamental * t;
        self.coeffs
            .iter()
            .enumerate()
            .fold(self.dc, |acc, (k, &c)| {
                let m = k + 1;
                let arg = T::from_usize_lossy(m) * phase;
                acc + c * if m % 2 == 1 { arg.sin() } else { arg.cos() }
            })
    }

    /// Sum of squared harmonic amplitudes over `m ≥ 1`.
    pub fn harmonic_energy(&self) -> T {
        self.coeffs.iter().map(|&c| c * c).sum()
    }

    /// Frequencies (Hz) of the spectral lines. The linear scale produces
    /// tones at `δ_v/λ + m·f`; the log scale adds the `i·δ_v/λ` replicas for
    /// every inner series term. With no drift this is `{m·f}`.
    pub fn tone_frequencies(&self, max_replica: usize) -> Vec<T> {
        let m_max = self.truncation() as i64;
        let replicas = match self.scale {
            Scale::Linear => 1,
            Scale::Log => max_replica.max(1),
        };
        let mut out = Vec::new();
        if self.center_shift == T::zero() {
            for m in 0..=m_max {
                out.push(T::from_usize_lossy(m as usize) * self.fundamental);
            }
            return out;
        }
        for i in 1..=replicas {
            let shift = T::from_usize_lossy(i) * self.center_shift;
            for m in -m_max..=m_max {
                out.push(shift + T::lit(m as f64) * self.fundamental);
            }
        }
        out
    }
}

/// Linear-scale coefficients:
/// `c_0 = 1+G²−2G·J_0(Ã)cosψ`, odd `c_m = 4G·J_m(Ã)sinψ`,
/// even `c_m = −4G·J_m(Ã)cosψ`.
pub fn linear_harmonics<T: Scalar>(state: &ReflectionState<T>, m_max: usize) -> Result<HarmonicModel<T>> {
    if m_max == 0 {
        return Err(Error::InvalidConfig("harmonic truncation must be >= 1".into()));
    }
    let (g, a, psi) = (state.g, state.a_tilde, state.psi);
    let four_g = T::lit(4.0) * g;
    let coeffs = (1..=m_max)
        .map(|m| {
            let j = bessel_j(m as i32, a);
            if m % 2 == 1 {
                four_g * j * psi.sin()
            } else {
                -four_g * j * psi.cos()
            }
        })
        .collect();
    Ok(HarmonicModel {
        scale: Scale::Linear,
        fundamental: state.breath_freq,
        dc: T::one() + g * g - T::lit(2.0) * g * bessel_j(0, a) * psi.cos(),
        coeffs,
        center_shift: T::zero(),
        series_order: 0,
    })
}

/// Log-scale coefficients with the inner series truncated at `series_order`:
/// `𝔠_0 = −20log10(e) Σ Gⁱ/i J_0(iÃ) cos(iψ)`,
/// odd `𝔠_m = 40log10(e) Σ Gⁱ/i J_m(iÃ) sin(iψ)`,
/// even `𝔠_m = −40log10(e) Σ Gⁱ/i J_m(iÃ) cos(iψ)`.
pub fn log_harmonics<T: Scalar>(
    state: &ReflectionState<T>,
    m_max: usize,
    series_order: usize,
) -> Result<HarmonicModel<T>> {
    if m_max == 0 || series_order == 0 {
        return Err(Error::InvalidConfig(
            "harmonic truncation and series order must be >= 1".into(),
        ));
    }
    let (g, a, psi) = (state.g, state.a_tilde, state.psi);
    let mut dc = T::zero();
    let mut coeffs = vec![T::zero(); m_max];
    let mut gi = T::one();
    for i in 1..=series_order {
        gi *= g;
        if gi == T::zero() {
            break;
        }
        let it = T::from_usize_lossy(i);
        let w = gi / it;
        let (s, c) = (it * psi).sin_cos();
        let x = it * a;
        dc += w * bessel_j(0, x) * c;
        for (k, slot) in coeffs.iter_mut().enumerate() {
            let m = k + 1;
            let j = bessel_j(m as i32, x);
            *slot += if m % 2 == 1 { w * j * s } else { -w * j * c };
        }
    }
    let k20 = T::lit(2.0) * db_per_neper::<T>();
    let k40 = T::lit(2.0) * k20;
    Ok(HarmonicModel {
        scale: Scale::Log,
        fundamental: state.breath_freq,
        dc: -k20 * dc,
        coeffs: coeffs.into_iter().map(|c| k40 * c).collect(),
        center_shift: T::zero(),
        series_order,
    })
}

/// Harmonic model of a drifting reflector: the coefficients are those of the
/// static case and every tone moves by `δ_v/λ` (times `i` for the log-scale
/// replicas).
pub fn moving_harmonics<T: Scalar>(
    state: &ReflectionState<T>,
    scale: Scale,
    m_max: usize,
    series_order: usize,
) -> Result<HarmonicModel<T>> {
    let mut model = match scale {
        Scale::Linear => linear_harmonics(state, m_max)?,
        Scale::Log => log_harmonics(state, m_max, series_order)?,
    };
    model.center_shift = state.center_shift();
    Ok(model)
}

/// Total log-scale signal energy `Σ G^(2i)/i² = Li₂(G²)`.
pub fn signal_energy_total<T: Scalar>(g: T) -> Result<T> {
    if !(g >= T::zero() && g < T::one()) {
        return Err(Error::Domain {
            function: "signal_energy_total",
            value: g.as_f64(),
            domain: "[0, 1)",
        });
    }
    dilog(g * g)
}

/// Share of `Li₂(G²)` carried by the first two series terms, `(G² + G⁴/4)/Li₂(G²)`.
pub fn two_term_energy_fraction<T: Scalar>(g: T) -> Result<T> {
    let g2 = g * g;
    Ok((g2 + g2 * g2 / T::lit(4.0)) / signal_energy_total(g)?)
}

/// Energy `ℰ_1 = 𝔠_1² + 𝔠_2²` of the two-harmonic approximation (dB²).
pub fn signal_energy_approx<T: Scalar>(model: &HarmonicModel<T>) -> Result<T> {
    if model.truncation() < 2 {
        return Err(Error::InvalidConfig(
            "energy approximation needs at least two harmonics".into(),
        ));
    }
    let (c1, c2) = (model.coeffs[0], model.coeffs[1]);
    Ok(c1 * c1 + c2 * c2)
}

/// Fraction of sideband energy a truncation at `M` harmonics must retain.
pub const CARSON_ENERGY_FRACTION: f64 = 0.98;

/// Number of harmonics to keep for modulation index `Ã`.
///
/// Returns the smallest `M ≥ 2` with
/// `Σ_{m≤M} J_m(Ã)² ≥ 0.98·Σ_{m≥1} J_m(Ã)²`; the fundamental and the second
/// harmonic are always kept because parity suppression can remove either.
/// A motionless reflector (`Ã = 0`) needs a single term.
pub fn carson_truncation<T: Scalar>(a_tilde: T, breath_freq: T) -> Result<usize> {
    if !a_tilde.is_finite() {
        return Err(Error::Domain {
            function: "carson_truncation",
            value: a_tilde.as_f64(),
            domain: "finite modulation index",
        });
    }
    if !(breath_freq > T::zero()) || !breath_freq.is_finite() {
        return Err(Error::Domain {
            function: "carson_truncation",
            value: breath_freq.as_f64(),
            domain: "f > 0",
        });
    }
    let a = a_tilde.as_f64();
    if a == 0.0 {
        return Ok(1);
    }
    let j0 = bessel_j(0, a);
    // Σ_{m≥1} J_m² = (1 − J_0²)/2
    let total = (1.0 - j0 * j0) / 2.0;
    let target = CARSON_ENERGY_FRACTION * total;
    let mut acc = 0.0;
    let mut m = 0;
    while acc < target {
        m += 1;
        acc += bessel_j(m, a).powi(2);
        if m > 10_000 {
            break;
        }
    }
    Ok((m as usize).max(2))
}

/// RMS difference over one breathing period between the `M`-harmonic,
/// order-`I` log model and the exact `ℛ` along the linearized trajectory.
pub fn truncation_rmse<T: Scalar>(
    state: &ReflectionState<T>,
    m_max: usize,
    series_order: usize,
    samples: usize,
) -> Result<T> {
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    let model = log_harmonics(state, m_max, series_order)?;
    let period = state.breath_freq.recip();
    let n = T::from_usize_lossy(samples);
    let mut acc = T::zero();
    for k in 0..samples {
        let t = T::from_usize_lossy(k) * period / n;
        let theta = state.psi + state.a_tilde * (T::TAU() * state.breath_freq * t).sin();
        let exact = ratio_db_exact(state.g, theta / T::TAU(), T::one());
        let e = model.evaluate(t) - exact;
        acc += e * e;
    }
    Ok((acc / n).sqrt())
}
