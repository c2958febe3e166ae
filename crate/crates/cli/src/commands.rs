use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use log::warn;
use rssb_core::dsp::{design_elliptic, preprocess};
use rssb_core::estimators::{EstimateSeries, Method};
use rssb_core::evaluation::{bed_like, snr_estimate, snr_sweep, summarize_sweep, SnrConfig, SweepConfig};
use rssb_core::pipeline::{self, uniform_y};
use rssb_core::simulator::{synthesize, synthesize_dbm};
use rssb_core::{io, Estimates, MetricsReport, Pipeline, Scenario, Trace};

use crate::config::{self, DEFAULT_PIPELINE};
use crate::manifest::RunManifest;
use crate::{Common, UsageError};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn read_traces(path: &Path) -> Result<Vec<Trace>> {
    io::read_traces(open(path)?).with_context(|| format!("in {}", path.display()))
}

fn pick_channel(traces: Vec<Trace>, channel: Option<usize>, path: &Path) -> Result<Trace> {
    let ids: Vec<usize> = traces.iter().map(|t| t.channel_id).collect();
    let found = match channel {
        Some(id) => traces.into_iter().find(|t| t.channel_id == id),
        None => traces.into_iter().next(),
    };
    found.ok_or_else(|| {
        UsageError(match channel {
            Some(id) => format!("{} has no channel {id} (channels: {ids:?})", path.display()),
            None => format!("{} holds no samples", path.display()),
        })
        .into()
    })
}

fn parse_method(name: &str) -> Result<Method> {
    Ok(name.parse::<Method>()?)
}

pub fn load_scenario(path: Option<&Path>, sets: &[String]) -> Result<Scenario> {
    let s: Scenario = config::load_or(path, &bed_like(), sets)?;
    s.validate()?;
    Ok(s)
}

pub fn load_pipeline(common: &Common) -> Result<Pipeline> {
    config::load(common.config.as_deref(), DEFAULT_PIPELINE, &common.sets)
}

pub fn simulate(common: &Common, seed: Option<u64>, absolute: bool) -> Result<()> {
    let mut scenario = load_scenario(common.config.as_deref(), &common.sets)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let traces = if absolute {
        synthesize_dbm(&scenario)?
    } else {
        synthesize(&scenario)?
    };
    io::write_traces(create(&common.out)?, &traces)?;

    let mut m = RunManifest::new("simulate", common.config.as_deref(), serde_json::to_value(&scenario)?);
    m.seed = Some(scenario.seed);
    m.outputs.push(common.out.clone());
    m.write(&common.out)?;
    println!(
        "wrote {} channels x {} samples to {}",
        traces.len(),
        traces.first().map_or(0, |t| t.len()),
        common.out.display()
    );
    Ok(())
}

pub fn estimate(
    common: &Common,
    trace_path: &Path,
    method: &str,
    channel: Option<usize>,
    spectrogram: Option<&Path>,
) -> Result<()> {
    let method = parse_method(method)?;
    let cfg = load_pipeline(common)?;
    let trace = pick_channel(read_traces(trace_path)?, channel, trace_path)?;
    let out = pipeline::run(&trace, method, &cfg)?;
    if out.resampled {
        warn!(
            "channel {} is not uniformly sampled; resampled to {:.4} Hz by linear interpolation for the periodogram",
            trace.channel_id, out.fs
        );
    }
    io::write_estimates(create(&common.out)?, &[&out.series])?;

    let mut m = RunManifest::new("estimate", common.config.as_deref(), serde_json::to_value(&cfg)?);
    m.inputs.push(trace_path.to_path_buf());
    m.outputs.push(common.out.clone());
    if let (Some(path), Some(spec)) = (spectrogram, &out.spectrogram) {
        io::write_spectrogram(create(path)?, spec)?;
        m.outputs.push(path.to_path_buf());
    }
    m.write(&common.out)?;

    match out.series.final_estimate() {
        Some(f) => println!("{method} final estimate: {:.2} bpm ({f:.4} Hz)", 60.0 * f),
        None => println!("{method}: no estimate"),
    }
    Ok(())
}

/// Points every estimate at the nearest trace sample, failing when the
/// estimate times do not lie within the trace.
fn align(series: &mut Estimates, timestamps: &[f64]) -> Result<()> {
    let (Some(&t0), Some(&t1)) = (timestamps.first(), timestamps.last()) else {
        return Err(UsageError("trace is empty".into()).into());
    };
    let half = if timestamps.len() > 1 {
        0.5 * (t1 - t0) / (timestamps.len() - 1) as f64
    } else {
        0.0
    };
    let (Some(&e0), Some(&e1)) = (series.timestamps.first(), series.timestamps.last()) else {
        return Err(UsageError("estimate file holds no rows for this method".into()).into());
    };
    if e0 < t0 - half || e1 > t1 + half {
        return Err(UsageError(format!(
            "estimates span [{e0}, {e1}] s but the trace covers [{t0}, {t1}] s"
        ))
        .into());
    }
    series.sample_index = series
        .timestamps
        .iter()
        .map(|&t| {
            let i = timestamps.partition_point(|&x| x < t);
            if i == 0 {
                0
            } else if i == timestamps.len() || t - timestamps[i - 1] <= timestamps[i] - t {
                i - 1
            } else {
                i
            }
        })
        .collect();
    Ok(())
}

fn pick_series(all: Vec<Estimates>, method: Option<&str>, path: &Path) -> Result<Estimates> {
    match method {
        Some(name) => {
            let m = parse_method(name)?;
            all.into_iter()
                .find(|s| s.method == m)
                .ok_or_else(|| UsageError(format!("{} has no {m} estimates", path.display())).into())
        }
        None => {
            if all.len() != 1 {
                let names: Vec<String> = all.iter().map(|s| s.method.to_string()).collect();
                return Err(UsageError(format!(
                    "{} holds {} series ({}); choose one with --method",
                    path.display(),
                    all.len(),
                    names.join(", ")
                ))
                .into());
            }
            Ok(all.into_iter().next().unwrap())
        }
    }
}

pub fn evaluate(
    common: &Common,
    est_path: &Path,
    trace_path: &Path,
    f_true: f64,
    method: Option<&str>,
    channel: Option<usize>,
) -> Result<()> {
    if !(f_true > 0.0 && f_true.is_finite()) {
        return Err(UsageError(format!("--f-true must be a positive frequency in Hz, got {f_true}")).into());
    }
    let cfg = load_pipeline(common)?;
    let all: Vec<EstimateSeries<f64>> =
        io::read_estimates(open(est_path)?).with_context(|| format!("in {}", est_path.display()))?;
    let mut series = pick_series(all, method, est_path)?;
    let trace = pick_channel(read_traces(trace_path)?, channel, trace_path)?;
    align(&mut series, &trace.timestamps)?;

    let fs = cfg.sampling_rate(&trace)?;
    let sos = design_elliptic(&cfg.filter, fs)?;
    let pre = preprocess(&trace, &sos, fs, cfg.mean_mode)?;
    let snr = uniform_y(&pre, fs)
        .and_then(|(_, y, _)| snr_estimate(&y, fs, f_true, &SnrConfig::default()))
        .ok();
    let report = MetricsReport::compute(&series, f_true, &pre.z, snr);
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&common.out, text + "\n").with_context(|| format!("cannot write {}", common.out.display()))?;

    let mut m = RunManifest::new("evaluate", common.config.as_deref(), serde_json::to_value(&cfg)?);
    m.inputs = vec![est_path.to_path_buf(), trace_path.to_path_buf()];
    m.outputs.push(common.out.clone());
    m.write(&common.out)?;

    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!(
        "{}: MAE {} bpm, hit ratio {} %, modeling MAE {} dB, SNR {} dB",
        report.method,
        show(report.mae_bpm),
        show(report.hit_ratio_pct),
        show(report.modeling_mae_db),
        show(report.snr_db)
    );
    Ok(())
}

pub fn default_sweep() -> SweepConfig<f64> {
    SweepConfig {
        snr_db: (0..8).map(|k| -18.0 + 2.0 * k as f64).collect(),
        seeds: (0..25).collect(),
        methods: Method::ALL.to_vec(),
        pipeline: Pipeline::default(),
        snr: SnrConfig::default(),
        t_from: 30.0,
    }
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        Some(0) => Err(UsageError("--jobs must be at least 1".into()).into()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
        None => Ok(f()),
    }
}

pub fn offset_seeds(cfg: &mut SweepConfig<f64>, seed: Option<u64>) {
    if let Some(base) = seed {
        for s in &mut cfg.seeds {
            *s = s.wrapping_add(base);
        }
    }
}

pub fn sweep(common: &Common, template: Option<&Path>, seed: Option<u64>, jobs: Option<usize>) -> Result<()> {
    let scenario = load_scenario(template, &[])?;
    let mut cfg: SweepConfig<f64> = config::load_or(common.config.as_deref(), &default_sweep(), &common.sets)?;
    offset_seeds(&mut cfg, seed);
    let records = with_jobs(jobs, || snr_sweep(&scenario, &cfg))??;
    let rows = summarize_sweep(&records);
    io::write_sweep(create(&common.out)?, &rows)?;

    let mut m = RunManifest::new("sweep", common.config.as_deref(), serde_json::to_value(&cfg)?);
    if let Some(t) = template {
        m.inputs.push(t.to_path_buf());
    }
    m.seed = seed;
    m.outputs.push(common.out.clone());
    m.write(&common.out)?;
    for r in &rows {
        println!("{:>6.1} dB  {:<3}  {:>6.1} %", r.snr_db, r.method, r.hit_ratio_pct);
    }
    Ok(())
}
