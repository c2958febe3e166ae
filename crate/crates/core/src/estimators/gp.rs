use serde::{Deserialize, Serialize};

use super::{check_inputs, EstimateSeries, Method};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::special::bessel_i_scaled;

/// Quasi-periodic Gaussian-process filter settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig<T> {
    /// Kernel variance `σ_K²`.
    pub sigma_k2: T,
    /// Kernel length scale `ℓ`.
    pub length_scale: T,
    /// Spectral density `S_f` of the log-frequency noise.
    pub sf: T,
    /// Number of harmonics `N_GP`.
    pub n_harmonics: usize,
    /// Measurement noise variance `σ_ν²`.
    pub meas_var: T,
    /// Initial frequency guess in Hz; the log-frequency starts at its log.
    pub init_freq_hz: T,
    /// Initial variance of the log-frequency.
    pub init_log_freq_var: T,
    /// Initial variance of the DC state.
    pub init_dc_var: T,
    /// Initial variance of the harmonic states, `1/(2ⁿ n!)` when absent.
    #[serde(default)]
    pub init_harmonic_var: Option<Vec<T>>,
    /// Initial DC value; the first measurement when absent.
    #[serde(default)]
    pub init_dc: Option<T>,
    /// Unscented transform spread.
    pub ukf_alpha: T,
    pub ukf_beta: T,
    pub ukf_kappa: T,
}

impl<T: Scalar> Default for GpConfig<T> {
    fn default() -> Self {
        Self {
            sigma_k2: T::lit(0.01),
            length_scale: T::lit(0.9),
            sf: T::lit(1e-4),
            n_harmonics: 2,
            meas_var: T::one(),
            init_freq_hz: T::lit(15.0 / 60.0),
            init_log_freq_var: T::lit(0.1),
            init_dc_var: T::lit(0.1).sqrt(),
            init_harmonic_var: None,
            init_dc: None,
            ukf_alpha: T::lit(0.1),
            ukf_beta: T::lit(2.0),
            ukf_kappa: T::zero(),
        }
    }
}

impl<T: Scalar> GpConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_k2", self.sigma_k2),
            ("length_scale", self.length_scale),
            ("sf", self.sf),
            ("meas_var", self.meas_var),
            ("init_freq_hz", self.init_freq_hz),
            ("init_log_freq_var", self.init_log_freq_var),
            ("init_dc_var", self.init_dc_var),
            ("ukf_alpha", self.ukf_alpha),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        if self.n_harmonics == 0 {
            return Err(Error::InvalidConfig("n_harmonics must be >= 1".into()));
        }
        if let Some(v) = &self.init_harmonic_var {
            if v.len() != self.n_harmonics || v.iter().any(|&x| !(x > T::zero())) {
                return Err(Error::InvalidConfig(
                    "init_harmonic_var needs one positive entry per harmonic".into(),
                ));
            }
        }
        let lambda = self.ukf_alpha * self.ukf_alpha * (T::one() + self.ukf_kappa) - T::one();
        if !(T::one() + lambda > T::zero()) {
            return Err(Error::InvalidConfig("unscented spread must give d + lambda > 0".into()));
        }
        Ok(())
    }

    fn harmonic_init_var(&self, n: usize) -> T {
        match &self.init_harmonic_var {
            Some(v) => v[n - 1],
            None => {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                T::lit(1.0 / (2f64.powi(n as i32) * fact))
            }
        }
    }
}

/// Stationary variances of the DC and harmonic states of the periodic
/// kernel: `q_0² = σ_K² e^{−ℓ⁻²} I_0(ℓ⁻²)` and
/// `q_n² = 2σ_K² e^{−ℓ⁻²} I_n(ℓ⁻²)`.
pub fn harmonic_variances<T: Scalar>(sigma_k2: T, length_scale: T, n_harmonics: usize) -> Vec<T> {
    let x = length_scale.powi(-2);
    (0..=n_harmonics)
        .map(|n| {
            let w = if n == 0 { T::one() } else { T::lit(2.0) };
            w * sigma_k2 * bessel_i_scaled(n as i32, x)
        })
        .collect()
}

/// Canonical periodic kernel `σ_K² exp(−2 sin²(πfτ)/ℓ²)`.
pub fn periodic_kernel<T: Scalar>(tau: T, freq: T, sigma_k2: T, length_scale: T) -> T {
    let s = (T::PI() * freq * tau).sin();
    sigma_k2 * (-T::lit(2.0) * s * s / (length_scale * length_scale)).exp()
}

/// Covariance `Cov(g(t+τ), g(t))` implied by the truncated state-space
/// model in stationarity: `q_0² + Σ_n H_n (q_n² F_n(τ)) H_nᵀ`.
pub fn state_space_kernel<T: Scalar>(
    tau: T,
    freq: T,
    sigma_k2: T,
    length_scale: T,
    n_harmonics: usize,
) -> T {
    let q = harmonic_variances(sigma_k2, length_scale, n_harmonics);
    let mut acc = q[0];
    for (n, &qn) in q.iter().enumerate().skip(1) {
        let f = rotation(T::from_usize_lossy(n) * freq, tau);
        // H = [1, 0] picks the (0, 0) entry of q_n² F_n(τ)
        acc += qn * f[0][0];
    }
    acc
}

fn rotation<T: Scalar>(freq: T, dt: T) -> [[T; 2]; 2] {
    let (s, c) = (T::TAU() * freq * dt).sin_cos();
    [[c, -s], [s, c]]
}

/// Layout of the joint state `[s, u_0, u_1(2), …, u_N(2)]`.
struct Layout {
    n: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        2 + 2 * self.n
    }
    /// Index of the first component of harmonic `m ≥ 1`.
    fn harmonic(&self, m: usize) -> usize {
        2 * m
    }
}

/// Runs the Rao-Blackwellized unscented filter over `z` at `timestamps`.
///
/// Sigma points are placed on the log-frequency `s` only. Conditional on
/// each point the DC and harmonic states are Gaussian; they are propagated
/// exactly through the rotations `F_n(n·e^s, δt)` and recombined with the
/// unscented weights. The measurement is linear, so the update is a plain
/// Kalman step on the joint state.
pub fn gp_estimate<T: Scalar>(z: &[T], timestamps: &[T], cfg: &GpConfig<T>) -> Result<EstimateSeries<T>> {
    cfg.validate()?;
    check_inputs(timestamps, z)?;
    if z.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let lay = Layout { n: cfg.n_harmonics };
    let dim = lay.dim();
    let two = T::lit(2.0);
    let q = harmonic_variances(cfg.sigma_k2, cfg.length_scale, cfg.n_harmonics);

    // unscented weights for the scalar substate
    let a2 = cfg.ukf_alpha * cfg.ukf_alpha;
    let lambda = a2 * (T::one() + cfg.ukf_kappa) - T::one();
    let spread = (T::one() + lambda).sqrt();
    let wm0 = lambda / (T::one() + lambda);
    let wc0 = wm0 + (T::one() - a2 + cfg.ukf_beta);
    let wi = T::one() / (two * (T::one() + lambda));
    let weights_m = [wm0, wi, wi];
    let weights_c = [wc0, wi, wi];

    let mut m = vec![T::zero(); dim];
    m[0] = cfg.init_freq_hz.ln();
    m[1] = cfg.init_dc.unwrap_or(z[0]);
    let mut p = Matrix::zeros(dim, dim);
    p[(0, 0)] = cfg.init_log_freq_var;
    p[(1, 1)] = cfg.init_dc_var;
    for h in 1..=lay.n {
        let v = cfg.harmonic_init_var(h);
        let i = lay.harmonic(h);
        p[(i, i)] = v;
        p[(i + 1, i + 1)] = v;
    }
    let mut h_row = vec![T::zero(); dim];
    h_row[1] = T::one();
    for k in 1..=lay.n {
        h_row[lay.harmonic(k)] = T::one();
    }

    let mut series = EstimateSeries::with_capacity(Method::Gp, z.len());
    series.harmonic_states = Vec::with_capacity(z.len());
    let nx = dim - 1;

    for (k, (&t, &obs)) in timestamps.iter().zip(z).enumerate() {
        if k > 0 {
            let dt = t - timestamps[k - 1];
            let pss = p[(0, 0)].max(T::zero());
            let sd = spread * pss.sqrt();
            let offsets = [T::zero(), sd, -sd];

            let mut means: [Vec<T>; 3] = Default::default();
            let mut covs: Vec<Matrix<T>> = Vec::with_capacity(3);
            for (j, &off) in offsets.iter().enumerate() {
                let s = m[0] + off;
                // x | s: Gaussian conditioning on the sigma point
                let gain: Vec<T> = (1..dim)
                    .map(|i| if pss > T::zero() { p[(i, 0)] / pss } else { T::zero() })
                    .collect();
                let mut xm: Vec<T> = (1..dim).map(|i| m[i] + gain[i - 1] * off).collect();
                let mut xc = Matrix::zeros(nx, nx);
                for a in 0..nx {
                    for b in 0..nx {
                        xc[(a, b)] = p[(a + 1, b + 1)] - gain[a] * p[(0, b + 1)];
                    }
                }
                // propagate through the block rotations
                let f0 = s.exp();
                let mut fm = Matrix::identity(nx);
                for h in 1..=lay.n {
                    let r = rotation(T::from_usize_lossy(h) * f0, dt);
                    let i = lay.harmonic(h) - 1;
                    fm[(i, i)] = r[0][0];
                    fm[(i, i + 1)] = r[0][1];
                    fm[(i + 1, i)] = r[1][0];
                    fm[(i + 1, i + 1)] = r[1][1];
                }
                xm = fm.mul_vec(&xm);
                let mut pc = fm.sandwich(&xc);
                pc[(0, 0)] += two * dt * q[0];
                for (h, &qh) in q.iter().enumerate().skip(1) {
                    let i = lay.harmonic(h) - 1;
                    let v = two * dt * qh;
                    pc[(i, i)] += v;
                    pc[(i + 1, i + 1)] += v;
                }
                let mut full = vec![s - T::lit(0.5) * cfg.sf * cfg.sf * dt];
                full.extend(xm);
                means[j] = full;
                covs.push(pc);
            }

            let mut mean = vec![T::zero(); dim];
            for (w, mu) in weights_m.iter().zip(&means) {
                for i in 0..dim {
                    mean[i] += *w * mu[i];
                }
            }
            let mut cov = Matrix::zeros(dim, dim);
            for j in 0..3 {
                let dev: Vec<T> = means[j].iter().zip(&mean).map(|(a, b)| *a - *b).collect();
                cov.add_outer(weights_c[j], &dev, &dev);
                for a in 0..nx {
                    for b in 0..nx {
                        cov[(a + 1, b + 1)] += weights_m[j] * covs[j][(a, b)];
                    }
                }
            }
            cov[(0, 0)] += cfg.sf * dt;
            cov.symmetrize();
            m = mean;
            p = cov;
            if p.cholesky().is_none() {
                p.recondition();
                series.reconditioned += 1;
            }
        }

        // linear measurement update
        let ph = p.mul_vec(&h_row);
        let s = h_row.iter().zip(&ph).map(|(a, b)| *a * *b).sum::<T>() + cfg.meas_var;
        let innov = obs - h_row.iter().zip(&m).map(|(a, b)| *a * *b).sum::<T>();
        for i in 0..dim {
            m[i] += ph[i] / s * innov;
        }
        p.add_outer(-s.recip(), &ph, &ph);
        p.symmetrize();
        if !p.is_finite() || !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { index: k });
        }
        if p.cholesky().is_none() {
            p.recondition();
            series.reconditioned += 1;
        }

        let recon = h_row.iter().zip(&m).map(|(a, b)| *a * *b).sum();
        series.push(k, t, Some(m[0].exp()), recon);
        series
            .harmonic_states
            .push((1..=lay.n).map(|h| m[lay.harmonic(h)]).collect());
    }
    Ok(series)
}
