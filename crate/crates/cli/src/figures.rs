//! Figure data: truncation error against excess path, two-harmonic energy
//! against excess path, harmonic shares along the mid-line over the 16
//! channels, and hit ratio against SNR.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rssb_core::evaluation::{snr_sweep, summarize_sweep, SweepConfig, SweepRow};
use rssb_core::geometry::{LinkGeometry, MediumParams, Point2, ReflectorMotion};
use rssb_core::io;
use rssb_core::rss_model::{default_series_order, log_harmonics, truncation_rmse, ReflectionState};
use rssb_core::simulator::{default_channels, Medium, SPEED_OF_LIGHT};
use rssb_core::Method;
use serde::{Deserialize, Serialize};

use crate::commands::{default_sweep, offset_seeds, with_jobs};
use crate::config;
use crate::manifest::RunManifest;
use crate::plot::{Plot, Series};
use crate::{Common, UsageError};

pub const NAMES: [&str; 4] = ["fig2c", "fig3a", "fig3b", "fig6c"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiguresConfig {
    /// Wavelength of the single-channel curves (m).
    pub wavelength: f64,
    /// Points on the excess-path axis.
    pub delta_points: usize,
    /// Largest excess path (m).
    pub delta_max: f64,
    /// Samples per breathing period in the truncation error.
    pub rmse_samples: usize,
    /// Heights above the link on the mid-line for the channel plot (m).
    pub heights: [f64; 2],
    pub height_points: usize,
    pub sweep: SweepConfig<f64>,
}

impl Default for FiguresConfig {
    fn default() -> Self {
        let mut sweep = default_sweep();
        sweep.seeds = (0..10).collect();
        Self {
            wavelength: 0.125,
            delta_points: 200,
            delta_max: 1.0,
            rmse_samples: 256,
            heights: [0.1, 2.0],
            height_points: 96,
            sweep,
        }
    }
}

fn link() -> LinkGeometry<f64> {
    LinkGeometry::new(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)).expect("fixed link is valid")
}

fn medium(wavelength: f64) -> MediumParams<f64> {
    Medium {
        pathloss_exponent: 2.0,
        rel_permittivity: 1.5,
    }
    .at_frequency(SPEED_OF_LIGHT / wavelength)
}

/// Breathing 1 cm towards the link at 12 bpm from height `y` on the mid-line.
fn state_at_height(y: f64, wavelength: f64) -> Result<ReflectionState<f64>> {
    let motion = ReflectorMotion {
        p0: Point2::new(0.0, y),
        direction: Point2::new(0.0, -1.0),
        amplitude: 0.01,
        breath_freq: 0.2,
        velocity: Point2::default(),
    };
    Ok(ReflectionState::from_geometry(&link(), &motion, &medium(wavelength))?)
}

/// Height on the mid-line with excess path `delta` for the 2 m link.
fn height_for(delta: f64) -> f64 {
    (((delta + 2.0) / 2.0).powi(2) - 1.0).sqrt()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

enum Table {
    Columns(Vec<&'static str>, Vec<Vec<f64>>),
    Sweep(Vec<SweepRow<f64>>),
}

struct Figure {
    table: Table,
    plot: Plot,
}

fn fig2c(cfg: &FiguresConfig) -> Result<Figure> {
    let deltas = grid(cfg.wavelength / 2.0, cfg.delta_max, cfg.delta_points);
    let mut rmse: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(deltas.len())).collect();
    for &d in &deltas {
        let st = state_at_height(height_for(d), cfg.wavelength)?;
        for (i, col) in rmse.iter_mut().enumerate() {
            col.push(truncation_rmse(&st, 2, i + 1, cfg.rmse_samples)?);
        }
    }
    let series = rmse
        .iter()
        .enumerate()
        .map(|(i, c)| Series::new(format!("I = {}", i + 1), deltas.iter().copied().zip(c.iter().copied()).collect()))
        .collect();
    let mut columns = vec![deltas];
    columns.extend(rmse);
    Ok(Figure {
        table: Table::Columns(vec!["delta_m", "rmse_i1_db", "rmse_i2_db", "rmse_i3_db"], columns),
        plot: Plot {
            title: "Two-harmonic truncation error".into(),
            x_label: "excess path length (m)".into(),
            y_label: "RMSE (dB)".into(),
            series,
        },
    })
}

fn fig3a(cfg: &FiguresConfig) -> Result<Figure> {
    let deltas = grid(cfg.wavelength / 20.0, cfg.delta_max, 2 * cfg.delta_points);
    let mut energy = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        let st = state_at_height(height_for(d), cfg.wavelength)?;
        let model = log_harmonics(&st, 2, default_series_order(st.g))?;
        energy.push(model.coefficient(1).powi(2) + model.coefficient(2).powi(2));
    }
    let points = deltas.iter().copied().zip(energy.iter().copied()).collect();
    Ok(Figure {
        table: Table::Columns(vec!["delta_m", "energy_e1_db2"], vec![deltas, energy]),
        plot: Plot {
            title: "Energy of the first two harmonics".into(),
            x_label: "excess path length (m)".into(),
            y_label: "E1 (dB^2)".into(),
            series: vec![Series::new("E1", points)],
        },
    })
}

fn fig3b(cfg: &FiguresConfig) -> Result<Figure> {
    let heights = grid(cfg.heights[0], cfg.heights[1], cfg.height_points);
    let channels = default_channels();
    let (mut ys, mut ids, mut c1, mut c2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut mean1 = Vec::with_capacity(heights.len());
    let mut mean2 = Vec::with_capacity(heights.len());
    for &y in &heights {
        let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
        for (id, &f) in channels.iter().enumerate() {
            let st = state_at_height(y, SPEED_OF_LIGHT / f)?;
            let model = log_harmonics(&st, 2, default_series_order(st.g))?;
            let (a, b) = (model.coefficient(1).powi(2), model.coefficient(2).powi(2));
            let e1 = a + b;
            let (r1, r2) = if e1 > 0.0 { (a / e1, b / e1) } else { (f64::NAN, f64::NAN) };
            ys.push(y);
            ids.push(id as f64);
            c1.push(r1);
            c2.push(r2);
            if e1 > 0.0 {
                s1 += r1;
                s2 += r2;
                n += 1;
            }
        }
        let n = n as f64;
        mean1.push((y, s1 / n));
        mean2.push((y, s2 / n));
    }
    Ok(Figure {
        table: Table::Columns(vec!["y_m", "channel_id", "c1_norm", "c2_norm"], vec![ys, ids, c1, c2]),
        plot: Plot {
            title: "Harmonic shares on the mid-line, mean of 16 channels".into(),
            x_label: "distance from the link line (m)".into(),
            y_label: "c_m^2 / E1".into(),
            series: vec![Series::new("m = 1", mean1), Series::new("m = 2", mean2)],
        },
    })
}

fn fig6c(cfg: &FiguresConfig, jobs: Option<usize>) -> Result<Figure> {
    let template = rssb_core::evaluation::bed_like::<f64>();
    let records = with_jobs(jobs, || snr_sweep(&template, &cfg.sweep))??;
    let rows = summarize_sweep(&records);
    let series = Method::ALL
        .iter()
        .filter(|m| cfg.sweep.methods.contains(m))
        .map(|&m| {
            let pts = rows.iter().filter(|r| r.method == m).map(|r| (r.snr_db, r.hit_ratio_pct)).collect();
            Series::new(m.as_str(), pts)
        })
        .collect();
    Ok(Figure {
        table: Table::Sweep(rows),
        plot: Plot {
            title: "Hit ratio against SNR".into(),
            x_label: "SNR (dB)".into(),
            y_label: "hit ratio (%)".into(),
            series,
        },
    })
}

pub fn run(common: &Common, names: &[String], seed: Option<u64>, jobs: Option<usize>) -> Result<()> {
    let mut cfg: FiguresConfig = config::load_or(common.config.as_deref(), &FiguresConfig::default(), &common.sets)?;
    offset_seeds(&mut cfg.sweep, seed);
    let mut wanted: Vec<&str> = Vec::new();
    for n in names {
        match n.as_str() {
            "all" => wanted.extend(NAMES),
            other => match NAMES.iter().find(|k| **k == other) {
                Some(k) => wanted.push(k),
                None => {
                    return Err(UsageError(format!("unknown figure '{other}' (expected one of {NAMES:?} or all)")).into())
                }
            },
        }
    }
    wanted.dedup();
    let dir = &common.out;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let mut m = RunManifest::new("figures", common.config.as_deref(), serde_json::to_value(&cfg)?);
    m.seed = seed;
    for name in wanted {
        let fig = match name {
            "fig2c" => fig2c(&cfg)?,
            "fig3a" => fig3a(&cfg)?,
            "fig3b" => fig3b(&cfg)?,
            _ => fig6c(&cfg, jobs)?,
        };
        let csv = dir.join(format!("{name}.csv"));
        let svg = dir.join(format!("{name}.svg"));
        write_figure(&fig, &csv, &svg)?;
        println!("wrote {} and {}", csv.display(), svg.display());
        m.outputs.extend([csv, svg]);
    }
    m.write(dir)?;
    Ok(())
}

fn write_figure(fig: &Figure, csv: &Path, svg: &Path) -> Result<()> {
    let f = fs::File::create(csv).with_context(|| format!("cannot create {}", csv.display()))?;
    let w = std::io::BufWriter::new(f);
    match &fig.table {
        Table::Columns(names, columns) => io::write_columns(w, names, columns)?,
        Table::Sweep(rows) => io::write_sweep(w, rows)?,
    }
    fs::write(svg, fig.plot.to_svg()).with_context(|| format!("cannot write {}", svg.display()))?;
    Ok(())
}
