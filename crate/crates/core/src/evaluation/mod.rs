//! Accuracy metrics, SNR estimation, reference scenarios and SNR sweeps.

mod scenarios;
mod snr;
mod sweep;

pub use scenarios::{
    bed_like, harmonic_rich, moving_reflector, second_harmonic, BED_BREATH_HZ,
};
pub use snr::{
    noise_std_for_estimated_snr, noise_std_for_snr, periodogram, snr_estimate, SnrConfig,
};
pub use sweep::{snr_sweep, summarize_sweep, SweepConfig, SweepRecord, SweepRow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateSeries;
use crate::scalar::Scalar;

/// Boundary between the early (convergence) and late part of a run.
pub const CONVERGENCE_SPLIT_S: f64 = 30.0;
/// Estimates further than this from the truth count as outliers.
pub const OUTLIER_BPM: f64 = 3.0;
/// Width of the hit neighborhood around the true frequency.
pub const HIT_BPM: f64 = 1.0;

fn bpm_errors<'a, T: Scalar, F: Fn(T) -> bool + 'a>(
    series: &'a EstimateSeries<T>,
    f_true: T,
    keep: F,
) -> impl Iterator<Item = T> + 'a {
    let sixty = T::lit(60.0);
    series
        .defined()
        .filter(move |&(t, _)| keep(t))
        .map(move |(_, f)| (sixty * (f - f_true)).abs())
}

fn mean<T: Scalar>(it: impl Iterator<Item = T>) -> Option<T> {
    let (sum, n) = it.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / T::from_usize_lossy(n))
}

/// Mean absolute frequency error in bpm over every defined estimate.
pub fn freq_mae<T: Scalar>(series: &EstimateSeries<T>, f_true: T) -> Result<T> {
    mean(bpm_errors(series, f_true, |_| true)).ok_or(Error::EmptySeries)
}

/// Percentage of defined estimates within 1 bpm of the truth.
pub fn hit_ratio<T: Scalar>(series: &EstimateSeries<T>, f_true: T) -> Result<T> {
    hit_ratio_after(series, f_true, T::neg_infinity()).ok_or(Error::EmptySeries)
}

/// Hit ratio restricted to estimates made after `t_from`.
pub fn hit_ratio_after<T: Scalar>(series: &EstimateSeries<T>, f_true: T, t_from: T) -> Option<T> {
    let tol = T::lit(HIT_BPM);
    mean(bpm_errors(series, f_true, |t| t > t_from).map(|e| {
        if e <= tol {
            T::lit(100.0)
        } else {
            T::zero()
        }
    }))
}

/// MAE (bpm) for `t <= t_split` and `t > t_split`; `None` for an empty range.
pub fn convergence_split<T: Scalar>(
    series: &EstimateSeries<T>,
    f_true: T,
    t_split: T,
) -> (Option<T>, Option<T>) {
    (
        mean(bpm_errors(series, f_true, |t| t <= t_split)),
        mean(bpm_errors(series, f_true, |t| t > t_split)),
    )
}

/// MAE (bpm) over the estimates within `threshold_bpm` of the truth.
pub fn outlier_filtered_mae<T: Scalar>(
    series: &EstimateSeries<T>,
    f_true: T,
    threshold_bpm: T,
) -> Option<T> {
    mean(bpm_errors(series, f_true, |_| true).filter(|&e| e <= threshold_bpm))
}

/// First time after which every estimate stays within `tol_bpm` for at
/// least `hold` seconds (or until the end of the run).
pub fn convergence_time<T: Scalar>(
    series: &EstimateSeries<T>,
    f_true: T,
    tol_bpm: T,
    hold: T,
) -> Option<T> {
    let sixty = T::lit(60.0);
    let pts: Vec<(T, bool)> = series
        .timestamps
        .iter()
        .zip(&series.f_hat)
        .map(|(&t, f)| (t, f.is_some_and(|f| (sixty * (f - f_true)).abs() <= tol_bpm)))
        .collect();
    let mut start: Option<T> = None;
    for &(t, ok) in &pts {
        match (ok, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) if t - s >= hold => return Some(s),
            (false, Some(_)) => start = None,
            _ => {}
        }
    }
    // a streak cut short by the end of the run still counts
    start
}

/// Mean absolute difference in dB between the filtered measurements and the
/// estimator's reconstruction.
pub fn modeling_mae<T: Scalar>(z: &[T], r_hat: &[T]) -> Result<T> {
    if z.len() != r_hat.len() {
        return Err(Error::LengthMismatch {
            left: z.len(),
            right: r_hat.len(),
        });
    }
    mean(z.iter().zip(r_hat).map(|(a, b)| (*a - *b).abs())).ok_or(Error::EmptySeries)
}

/// Modeling MAE of a run against the sequence it was fed, using only the
/// estimates made after `t_from`.
pub fn series_modeling_mae<T: Scalar>(z: &[T], series: &EstimateSeries<T>, t_from: T) -> Result<T> {
    let mut zs = Vec::with_capacity(series.len());
    let mut rs = Vec::with_capacity(series.len());
    for ((&i, &t), &r) in series
        .sample_index
        .iter()
        .zip(&series.timestamps)
        .zip(&series.reconstruction)
    {
        if t > t_from {
            let v = *z.get(i).ok_or(Error::LengthMismatch {
                left: z.len(),
                right: i + 1,
            })?;
            zs.push(v);
            rs.push(r);
        }
    }
    modeling_mae(&zs, &rs)
}

/// Time-averaged share (percent) of each harmonic in the Gaussian-process
/// states `u_{m,1}`, over estimates after `t_from`.
pub fn harmonic_energy_fractions<T: Scalar>(series: &EstimateSeries<T>, t_from: T) -> Vec<T> {
    let n = series.harmonic_states.first().map_or(0, Vec::len);
    let mut acc = vec![T::zero(); n];
    let mut count = 0usize;
    for (u, &t) in series.harmonic_states.iter().zip(&series.timestamps) {
        if t <= t_from {
            continue;
        }
        let total: T = u.iter().map(|v| *v * *v).sum();
        if !(total > T::zero()) {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(u) {
            *a += *v * *v / total;
        }
        count += 1;
    }
    if count == 0 {
        return acc;
    }
    let scale = T::lit(100.0) / T::from_usize_lossy(count);
    acc.into_iter().map(|a| a * scale).collect()
}

/// Summary of one estimator run. Fields that have no data are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub method: crate::estimators::Method,
    pub f_true_hz: T,
    /// ε_f, bpm.
    pub mae_bpm: Option<T>,
    /// ε_%, percent.
    pub hit_ratio_pct: Option<T>,
    pub mae_early_bpm: Option<T>,
    pub mae_late_bpm: Option<T>,
    pub mae_no_outliers_bpm: Option<T>,
    /// ε_z, dB.
    pub modeling_mae_db: Option<T>,
    /// ρ̂, dB.
    pub snr_db: Option<T>,
    /// ℰ_(m) in percent, Gaussian-process runs only.
    pub harmonic_energy_pct: Vec<T>,
    pub convergence_time_s: Option<T>,
}

impl<T: Scalar> MetricsReport<T> {
    /// Computes every metric of `series`. `z` is the sequence the recursive
    /// estimators saw; `snr_db` comes from [`snr_estimate`] on the
    /// periodogram branch.
    pub fn compute(series: &EstimateSeries<T>, f_true: T, z: &[T], snr_db: Option<T>) -> Self {
        let split = T::lit(CONVERGENCE_SPLIT_S);
        let (early, late) = convergence_split(series, f_true, split);
        Self {
            method: series.method,
            f_true_hz: f_true,
            mae_bpm: freq_mae(series, f_true).ok(),
            hit_ratio_pct: hit_ratio(series, f_true).ok(),
            mae_early_bpm: early,
            mae_late_bpm: late,
            mae_no_outliers_bpm: outlier_filtered_mae(series, f_true, T::lit(OUTLIER_BPM)),
            modeling_mae_db: series_modeling_mae(z, series, T::neg_infinity()).ok(),
            snr_db,
            harmonic_energy_pct: harmonic_energy_fractions(series, split),
            convergence_time_s: convergence_time(series, f_true, T::lit(HIT_BPM), T::lit(10.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Method;
    use proptest::prelude::*;

    fn series(f: &[Option<f64>], dt: f64) -> EstimateSeries<f64> {
        EstimateSeries {
            method: Method::Kf,
            timestamps: (0..f.len()).map(|k| k as f64 * dt).collect(),
            f_hat: f.to_vec(),
            reconstruction: vec![0.0; f.len()],
            sample_index: (0..f.len()).collect(),
            harmonic_states: Vec::new(),
            reconditioned: 0,
        }
    }

    #[test]
    fn mae_examples() {
        let f = 0.2;
        assert_eq!(freq_mae(&series(&[Some(f); 10], 1.0), f).unwrap(), 0.0);
        let off = series(&[Some(f + 1.0 / 60.0); 10], 1.0);
        assert!((freq_mae(&off, f).unwrap() - 1.0).abs() < 1e-12);
        let alt: Vec<_> = (0..10)
            .map(|k| Some(if k % 2 == 0 { f + 2.0 / 60.0 } else { f - 2.0 / 60.0 }))
            .collect();
        assert!((freq_mae(&series(&alt, 1.0), f).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(freq_mae(&series(&[None, None], 1.0), f), Err(Error::EmptySeries)));
    }

    #[test]
    fn hits_and_outliers_on_second_harmonic_half() {
        let f = 0.2;
        let mut v = vec![Some(2.0 * f); 10];
        for x in v.iter_mut().take(5) {
            *x = Some(f + 0.3 / 60.0);
        }
        let s = series(&v, 1.0);
        assert!((hit_ratio(&s, f).unwrap() - 50.0).abs() < 1e-12);
        let clean = outlier_filtered_mae(&s, f, OUTLIER_BPM).unwrap();
        assert!((clean - 0.3).abs() < 1e-9);
        assert!(freq_mae(&s, f).unwrap() > clean);
    }

    #[test]
    fn split_ranges_are_disjoint() {
        let f = 0.25;
        let v: Vec<_> = (0..60)
            .map(|k| Some(if k <= 30 { f + 3.0 / 60.0 } else { f }))
            .collect();
        let (early, late) = convergence_split(&series(&v, 1.0), f, 30.0);
        assert!((early.unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(late.unwrap(), 0.0);
        let (e, l) = convergence_split(&series(&v[..10], 1.0), f, 30.0);
        assert!(e.is_some() && l.is_none());
    }

    #[test]
    fn convergence_time_needs_a_held_streak() {
        let f = 0.2;
        let mut v = vec![Some(0.5); 100];
        v[10] = Some(f); // brief visit
        for x in v.iter_mut().skip(40) {
            *x = Some(f);
        }
        assert_eq!(convergence_time(&series(&v, 1.0), f, 1.0, 10.0), Some(40.0));
        assert_eq!(convergence_time(&series(&[Some(0.5); 50], 1.0), f, 1.0, 10.0), None);
        // a streak that lasts to the end of a short run still counts
        let mut w = vec![Some(0.5); 20];
        w[15..].iter_mut().for_each(|x| *x = Some(f));
        assert_eq!(convergence_time(&series(&w, 1.0), f, 1.0, 10.0), Some(15.0));
    }

    #[test]
    fn modeling_mae_examples() {
        let z = [1.0, -2.0, 0.5];
        assert_eq!(modeling_mae(&z, &z).unwrap(), 0.0);
        let shifted: Vec<f64> = z.iter().map(|v| v + 0.3).collect();
        assert!((modeling_mae(&z, &shifted).unwrap() - 0.3).abs() < 1e-12);
        assert!(matches!(modeling_mae(&z, &z[..2]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn energy_fractions_average_per_time() {
        let mut s = series(&[Some(0.2); 4], 20.0);
        s.harmonic_states = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 2.0],
        ];
        // samples at t = 40 and 60 are after the split
        let fr = harmonic_energy_fractions(&s, 30.0);
        assert!((fr[0] - 25.0).abs() < 1e-12);
        assert!((fr[1] - 75.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mae_bounds_filtered_mae(errs in prop::collection::vec(-10.0f64..10.0, 1..60)) {
            let f = 0.3;
            let v: Vec<_> = errs.iter().map(|e| Some(f + e / 60.0)).collect();
            let s = series(&v, 0.5);
            let full = freq_mae(&s, f).unwrap();
            if let Some(clean) = outlier_filtered_mae(&s, f, OUTLIER_BPM) {
                prop_assert!(clean <= full + 1e-12);
            }
            let h = hit_ratio(&s, f).unwrap();
            prop_assert!((0.0..=100.0).contains(&h));
        }

        #[test]
        fn hit_ratio_ignores_time_order(errs in prop::collection::vec(-3.0f64..3.0, 2..40), shift in 0usize..40) {
            let f = 0.2;
            let mut v: Vec<_> = errs.iter().map(|e| Some(f + e / 60.0)).collect();
            let a = hit_ratio(&series(&v, 1.0), f).unwrap();
            let k = shift % v.len();
            v.rotate_left(k);
            let b = hit_ratio(&series(&v, 0.3), f).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn fractions_sum_to_hundred(states in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..30)) {
            let mut s = series(&vec![Some(0.2); states.len()], 1.0);
            s.harmonic_states = states.clone();
            let fr = harmonic_energy_fractions(&s, -1.0);
            let any = states.iter().any(|u| u.iter().any(|v| *v != 0.0));
            if any {
                prop_assert!((fr.iter().sum::<f64>() - 100.0).abs() < 1e-9);
            }
        }
    }
}
