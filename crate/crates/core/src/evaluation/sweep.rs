use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::snr::{noise_std_for_snr, snr_estimate, SnrConfig};
use super::{hit_ratio_after, CONVERGENCE_SPLIT_S};
use crate::dsp::{design_elliptic, preprocess};
use crate::error::Result;
use crate::estimators::Method;
use crate::pipeline::{self, uniform_y, PipelineConfig};
use crate::scalar::Scalar;
use crate::simulator::{synthesize, ScenarioConfig};

/// An SNR sweep: every `(snr, seed)` pair is one experiment on the first
/// channel of the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct SweepConfig<T> {
    /// Target SNRs in dB, see [`noise_std_for_snr`].
    pub snr_db: Vec<T>,
    pub seeds: Vec<u64>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub pipeline: PipelineConfig<T>,
    #[serde(default)]
    pub snr: SnrConfig<T>,
    /// Hit ratios count estimates after this time (s).
    #[serde(default = "default_t_from")]
    pub t_from: T,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_t_from<T: Scalar>() -> T {
    T::lit(CONVERGENCE_SPLIT_S)
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub target_snr_db: T,
    pub seed: u64,
    pub noise_std: T,
    /// ρ̂ of the noisy trace.
    pub measured_snr_db: T,
    /// Hit ratio per method; `None` when the run produced no estimates.
    pub hit_ratio_pct: Vec<(Method, Option<T>)>,
}

/// One point of a sweep curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<T> {
    /// Bucket center; buckets are 2 dB wide.
    pub snr_db: T,
    pub method: Method,
    pub hit_ratio_pct: T,
    pub mean_measured_snr_db: T,
    pub runs: usize,
}

fn run_one<T: Scalar>(
    template: &ScenarioConfig<T>,
    cfg: &SweepConfig<T>,
    target: T,
    seed: u64,
) -> Result<SweepRecord<T>> {
    let mut scenario = template.clone();
    scenario.channels_hz.truncate(1);
    scenario.seed = seed;
    scenario.noise_std = T::zero();
    let f_true = scenario.motion.breath_freq;
    let fs = scenario.fs;
    let sos = design_elliptic(&cfg.pipeline.filter, fs)?;

    let clean = synthesize(&scenario)?.remove(0);
    let clean_pre = preprocess(&clean, &sos, fs, cfg.pipeline.mean_mode)?;
    let (_, clean_y, _) = uniform_y(&clean_pre, fs)?;
    scenario.noise_std = noise_std_for_snr(&clean_y, &sos, fs, f_true, target, &cfg.snr)?;

    let trace = synthesize(&scenario)?.remove(0);
    let mut pipe = cfg.pipeline.clone();
    pipe.fs = Some(fs);
    let mut hits = Vec::with_capacity(cfg.methods.len());
    let mut measured = None;
    for &method in &cfg.methods {
        let out = pipeline::run(&trace, method, &pipe)?;
        if measured.is_none() {
            let (_, y, _) = uniform_y(&out.preprocessed, fs)?;
            measured = Some(snr_estimate(&y, fs, f_true, &cfg.snr)?);
        }
        hits.push((method, hit_ratio_after(&out.series, f_true, cfg.t_from)));
    }
    let measured_snr_db = match measured {
        Some(m) => m,
        None => {
            let pre = preprocess(&trace, &sos, fs, cfg.pipeline.mean_mode)?;
            let (_, y, _) = uniform_y(&pre, fs)?;
            snr_estimate(&y, fs, f_true, &cfg.snr)?
        }
    };
    Ok(SweepRecord {
        target_snr_db: target,
        seed,
        noise_std: scenario.noise_std,
        measured_snr_db,
        hit_ratio_pct: hits,
    })
}

/// Runs every `(snr, seed)` experiment in parallel. Records come back in
/// grid order regardless of scheduling.
pub fn snr_sweep<T: Scalar>(template: &ScenarioConfig<T>, cfg: &SweepConfig<T>) -> Result<Vec<SweepRecord<T>>> {
    template.validate()?;
    let jobs: Vec<(T, u64)> = cfg
        .snr_db
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    jobs.into_par_iter()
        .map(|(s, seed)| run_one(template, cfg, s, seed))
        .collect()
}

/// Averages hit ratios per 2 dB bucket of target SNR and method.
pub fn summarize_sweep<T: Scalar>(records: &[SweepRecord<T>]) -> Vec<SweepRow<T>> {
    let two = T::lit(2.0);
    // keyed by integer bucket index so grouping is exact
    let mut groups: BTreeMap<(i64, Method), (T, T, usize)> = BTreeMap::new();
    for r in records {
        let bucket = (r.target_snr_db / two).round().to_i64().unwrap_or(i64::MIN);
        for &(m, h) in &r.hit_ratio_pct {
            if let Some(h) = h {
                let e = groups.entry((bucket, m)).or_insert((T::zero(), T::zero(), 0));
                e.0 += h;
                e.1 += r.measured_snr_db;
                e.2 += 1;
            }
        }
    }
    groups
        .into_iter()
        .map(|((b, method), (h, s, n))| {
            let n_t = T::from_usize_lossy(n);
            SweepRow {
                snr_db: T::from_i64(b).unwrap_or_else(T::nan) * two,
                method,
                hit_ratio_pct: h / n_t,
                mean_measured_snr_db: s / n_t,
                runs: n,
            }
        })
        .collect()
}
