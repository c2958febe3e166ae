//! Elliptic (Cauer) low-pass design.
//!
//! The analog prototype follows the classical construction: solve the degree
//! equation for the selectivity modulus, place zeros at `1/(√m·sn)` and
//! poles from Jacobi elliptic functions, then prewarp, scale and map through
//! the bilinear transform. Design math runs in `f64`; the resulting sections
//! are converted to the requested scalar.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use super::sos::Sos;
use super::FilterSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const EPS: f64 = 2.220_446_049_250_313e-16;

/// Complete elliptic integral of the first kind `K(m)` by the AGM.
pub(crate) fn ellipk(m: f64) -> f64 {
    if m >= 1.0 {
        return f64::INFINITY;
    }
    let (mut a, mut b) = (1.0, (1.0 - m).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= EPS * a {
            break;
        }
        let t = (a * b).sqrt();
        a = 0.5 * (a + b);
        b = t;
    }
    PI / (2.0 * a)
}

/// Jacobi elliptic functions `(sn, cn, dn)` of parameter `m ∈ [0, 1)`
/// by descending Landen transformation.
pub(crate) fn ellipj(u: f64, m: f64) -> (f64, f64, f64) {
    if m < 1e-9 {
        let (s, c) = u.sin_cos();
        let t = 0.25 * m * (u - s * c);
        return (s - t * c, c + t * s, 1.0 - 0.5 * m * s * s);
    }
    let mut a = [0.0; 10];
    let mut c = [0.0; 10];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut twon = 1.0;
    let mut i = 0;
    while (c[i] / a[i]).abs() > EPS && i < 8 {
        let ai = a[i];
        i += 1;
        c[i] = 0.5 * (ai - b);
        let t = (ai * b).sqrt();
        a[i] = 0.5 * (ai + b);
        b = t;
        twon *= 2.0;
    }
    let mut phi = twon * a[i] * u;
    let mut prev = phi;
    while i > 0 {
        let t = c[i] * phi.sin() / a[i];
        prev = phi;
        phi = 0.5 * (t.asin() + phi);
        i -= 1;
    }
    let (sn, cn) = phi.sin_cos();
    (sn, cn, cn / (phi - prev).cos())
}

/// Solves the degree equation: modulus `m` of an order-`n` filter with
/// discrimination parameter `m1`.
fn ellipdeg(n: usize, m1: f64) -> f64 {
    let k1 = ellipk(m1);
    let k1p = ellipk(1.0 - m1);
    let q1 = (-PI * k1p / k1).exp();
    let q = q1.powf(1.0 / n as f64);
    let num: f64 = (0..=7).map(|j| q.powi(j * (j + 1))).sum();
    let den: f64 = 1.0 + 2.0 * (1..=8).map(|j| q.powi(j * j)).sum::<f64>();
    16.0 * q * (num / den).powi(4)
}

/// Imaginary part of the inverse Jacobi `sn` at the imaginary point `i·w`,
/// i.e. the real `v` with `sc(v, 1 − m) = w`.
fn arc_jac_sc1(w: f64, m: f64) -> f64 {
    let complement = |k: f64| ((1.0 - k) * (1.0 + k)).sqrt();
    let mut ks = vec![m.sqrt()];
    while *ks.last().unwrap() != 0.0 && ks.len() < 16 {
        let kp = complement(*ks.last().unwrap());
        ks.push((1.0 - kp) / (1.0 + kp));
    }
    let big_k: f64 = ks[1..].iter().map(|k| 1.0 + k).product::<f64>() * FRAC_PI_2;
    let mut y = w;
    for pair in ks.windows(2) {
        let (kn, knext) = (pair[0], pair[1]);
        y = 2.0 * y / ((1.0 + knext) * (1.0 + (1.0 + kn * kn * y * y).sqrt()));
    }
    big_k * 2.0 / PI * y.asinh()
}

/// Zeros, poles and gain of the analog prototype with unit passband edge.
pub(crate) fn ellipap(order: usize, rp: f64, rs: f64) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    let eps_sq = 10f64.powf(0.1 * rp) - 1.0;
    if order == 1 {
        let p = -(1.0 / eps_sq).sqrt();
        return (Vec::new(), vec![Complex64::new(p, 0.0)], -p);
    }
    let ck1_sq = eps_sq / (10f64.powf(0.1 * rs) - 1.0);
    let k_m1 = ellipk(ck1_sq);
    let m = ellipdeg(order, ck1_sq);
    let capk = ellipk(m);
    let js: Vec<usize> = ((1 - order % 2)..order).step_by(2).collect();
    let sncd: Vec<(f64, f64, f64)> = js
        .iter()
        .map(|&j| ellipj(j as f64 * capk / order as f64, m))
        .collect();

    let mut zeros = Vec::new();
    for &(s, _, _) in &sncd {
        if s.abs() > EPS {
            let z = Complex64::new(0.0, 1.0 / (m.sqrt() * s));
            zeros.push(z);
        }
    }
    let conj: Vec<Complex64> = zeros.iter().map(|z| z.conj()).collect();
    zeros.extend(conj);

    let r = arc_jac_sc1(1.0 / eps_sq.sqrt(), ck1_sq);
    let v0 = capk * r / (order as f64 * k_m1);
    let (sv, cv, dv) = ellipj(v0, 1.0 - m);
    let mut poles: Vec<Complex64> = sncd
        .iter()
        .map(|&(s, c, d)| {
            -Complex64::new(c * d * sv * cv, s * dv) / (1.0 - (d * sv).powi(2))
        })
        .collect();
    let norm = poles.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt();
    let mirrored: Vec<Complex64> = if order % 2 == 1 {
        poles
            .iter()
            .filter(|p| p.im.abs() > EPS * norm)
            .map(|p| p.conj())
            .collect()
    } else {
        poles.iter().map(|p| p.conj()).collect()
    };
    poles.extend(mirrored);

    let num: Complex64 = poles.iter().map(|p| -p).product();
    let den: Complex64 = zeros.iter().map(|z| -z).product();
    let mut k = (num / den).re;
    if order.is_multiple_of(2) {
        k /= (1.0 + eps_sq).sqrt();
    }
    (zeros, poles, k)
}

/// Bilinear transform of an analog zpk with the passband edge prewarped.
fn digital_zpk(
    spec: &FilterSpec<f64>,
    fs: f64,
) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    // Even orders sit at −rp at DC; after normalizing DC to 0 dB the stopband
    // rises by rp, so the prototype asks for that much more attenuation.
    let rs = if spec.order.is_multiple_of(2) {
        spec.stopband_atten_db + spec.passband_ripple_db
    } else {
        spec.stopband_atten_db
    };
    let (z, p, k) = ellipap(spec.order, spec.passband_ripple_db, rs);
    let fs2 = 2.0 * fs;
    let warped = fs2 * (PI * spec.passband_hz / fs).tan();
    let z: Vec<Complex64> = z.into_iter().map(|z| z * warped).collect();
    let p: Vec<Complex64> = p.into_iter().map(|p| p * warped).collect();
    let k = k * warped.powi(p.len() as i32 - z.len() as i32);

    let bil = |s: Complex64| (fs2 + s) / (fs2 - s);
    let num: Complex64 = z.iter().map(|&z| fs2 - z).product();
    let den: Complex64 = p.iter().map(|&p| fs2 - p).product();
    let mut zd: Vec<Complex64> = z.iter().map(|&z| bil(z)).collect();
    let pd: Vec<Complex64> = p.iter().map(|&p| bil(p)).collect();
    zd.resize(pd.len(), Complex64::new(-1.0, 0.0));
    (zd, pd, k * (num / den).re)
}

/// Splits roots into conjugate pairs (upper half plane representative) and
/// real roots.
fn split_roots(roots: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let pairs = roots.iter().filter(|r| r.im > tol).copied().collect();
    let reals = roots.iter().filter(|r| r.im.abs() <= tol).map(|r| r.re).collect();
    (pairs, reals)
}

fn quadratic(pair: Complex64) -> [f64; 3] {
    [1.0, -2.0 * pair.re, pair.norm_sqr()]
}

/// Groups a digital zpk into second-order sections. Pole pairs are taken
/// from the one closest to the unit circle and matched with the nearest
/// zero pair.
fn zpk_to_sections(z: &[Complex64], p: &[Complex64], k: f64) -> Vec<[f64; 6]> {
    let (mut pp, mut pr) = split_roots(p);
    let (mut zp, mut zr) = split_roots(z);
    pp.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    pr.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    let mut sections = Vec::new();
    for pole in pp {
        let den = quadratic(pole);
        let num = if !zp.is_empty() {
            let (idx, _) = zp
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - pole).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            quadratic(zp.remove(idx))
        } else {
            match (zr.pop(), zr.pop()) {
                (Some(a), Some(b)) => [1.0, -(a + b), a * b],
                (Some(a), None) => [1.0, -a, 0.0],
                _ => [1.0, 0.0, 0.0],
            }
        };
        sections.push([num[0], num[1], num[2], den[0], den[1], den[2]]);
    }
    while !pr.is_empty() {
        let den = match (pr.pop(), pr.pop()) {
            (Some(a), Some(b)) => [1.0, -(a + b), a * b],
            (Some(a), None) => [1.0, -a, 0.0],
            _ => unreachable!(),
        };
        let num = match (zr.pop(), if den[2] != 0.0 { zr.pop() } else { None }) {
            (Some(a), Some(b)) => [1.0, -(a + b), a * b],
            (Some(a), None) => [1.0, -a, 0.0],
            _ => [1.0, 0.0, 0.0],
        };
        sections.push([num[0], num[1], num[2], den[0], den[1], den[2]]);
    }
    if let Some(first) = sections.first_mut() {
        for c in &mut first[..3] {
            *c *= k;
        }
    }
    sections
}

/// Designs the elliptic low-pass for `spec` at sampling rate `fs` as a
/// cascade of biquads with unit DC gain.
///
/// Fails with [`Error::InfeasibleFilter`] when the order cannot reach the
/// stopband attenuation at the stopband edge.
pub fn design_elliptic<T: Scalar>(spec: &FilterSpec<T>, fs: T) -> Result<Sos<T>> {
    spec.validate(fs)?;
    let s = spec.to_f64();
    let fs = fs.as_f64();
    let (z, p, k) = digital_zpk(&s, fs);
    let mut sos = Sos::<f64>::new(zpk_to_sections(&z, &p, k));
    let dc = sos.response(0.0, fs).re;
    sos.scale_gain(1.0 / dc);

    // worst stopband leakage on a dense grid from the stopband edge to Nyquist
    let grid = 4096;
    let worst = (0..=grid)
        .map(|i| s.stopband_hz + (fs / 2.0 - s.stopband_hz) * i as f64 / grid as f64)
        .map(|f| sos.response(f, fs).norm())
        .fold(0.0, f64::max);
    let achieved = -20.0 * worst.log10();
    if achieved < s.stopband_atten_db - 1e-9 {
        return Err(Error::InfeasibleFilter {
            order: s.order,
            achieved_db: achieved,
            required_db: s.stopband_atten_db,
        });
    }
    Ok(sos.cast())
}
