//! CSV formats for traces, estimates, spectrograms and sweep curves.
//!
//! Every reader reports the 1-based line number of a malformed row.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimators::{EstimateSeries, Method, Spectrogram};
use crate::evaluation::SweepRow;
use crate::scalar::Scalar;
use crate::simulator::{default_channels, wavelength_of, RssTrace, RssUnit};

pub const TRACE_HEADER: [&str; 3] = ["time_s", "channel_id", "rss_db"];
pub const ESTIMATE_HEADER: [&str; 4] = ["time_s", "method", "f_hat_hz", "recon_db"];
pub const SPECTROGRAM_HEADER: [&str; 3] = ["window_end_s", "f_hz", "psd"];
pub const SWEEP_HEADER: [&str; 3] = ["snr_db", "method", "hit_ratio_pct"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn field<'r>(rec: &'r csv::StringRecord, i: usize, name: &str) -> Result<&'r str> {
    rec.get(i)
        .map(str::trim)
        .ok_or_else(|| Error::Format(format!("line {}: missing column '{name}'", line_of(rec))))
}

fn number<T: Scalar>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let s = field(rec, i, name)?;
    s.parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::Format(format!("line {}: '{s}' is not a number in column '{name}'", line_of(rec))))
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str], required: usize) -> Result<usize> {
    let header = rdr.headers().map_err(csv_err)?.clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    let n = got.len();
    let matches = n >= required && n <= expected.len() && got.iter().zip(expected).all(|(a, b)| a == b);
    if !matches {
        return Err(Error::Format(format!(
            "line 1: expected header '{}', found '{}'",
            expected[..required].join(","),
            got.join(",")
        )));
    }
    Ok(n)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

/// Writes `time_s,channel_id,rss_db` rows, channel after channel. Absolute
/// traces use an `rss_dbm` column instead.
pub fn write_traces<T: Scalar, W: Write>(w: W, traces: &[RssTrace<T>]) -> Result<()> {
    let mut out = writer(w);
    let unit = traces.first().map_or(RssUnit::Db, |t| t.unit);
    let value_col = match unit {
        RssUnit::Db => "rss_db",
        RssUnit::Dbm => "rss_dbm",
    };
    out.write_record(["time_s", "channel_id", value_col]).map_err(csv_err)?;
    for tr in traces {
        let id = tr.channel_id.to_string();
        for (t, v) in tr.timestamps.iter().zip(&tr.values) {
            out.write_record([t.as_f64().to_string(), id.clone(), v.as_f64().to_string()])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a trace file into one trace per channel, ordered by channel id.
/// Rows of different channels may be interleaved. The wavelength is taken
/// from the default channel plan and is NaN for unknown ids.
pub fn read_traces<T: Scalar, R: Read>(r: R) -> Result<Vec<RssTrace<T>>> {
    let mut rdr = reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let unit = match header.get(2).map(str::trim) {
        Some("rss_dbm") => RssUnit::Dbm,
        _ => RssUnit::Db,
    };
    if unit == RssUnit::Db {
        check_header(&mut rdr, &TRACE_HEADER, 3)?;
    } else if header.len() != 3 || &header[0] != "time_s" || &header[1] != "channel_id" {
        return Err(Error::Format("line 1: expected header 'time_s,channel_id,rss_dbm'".into()));
    }
    let mut channels: BTreeMap<usize, (Vec<T>, Vec<T>)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let t = number::<T>(&rec, 0, "time_s")?;
        let id_s = field(&rec, 1, "channel_id")?;
        let id: usize = id_s.parse().map_err(|_| {
            Error::Format(format!("line {}: '{id_s}' is not a channel id", line_of(&rec)))
        })?;
        let v = number::<T>(&rec, 2, "rss")?;
        let e = channels.entry(id).or_default();
        if let Some(&last) = e.0.last() {
            if !(t > last) {
                return Err(Error::Format(format!(
                    "line {}: time {} does not increase on channel {id}",
                    line_of(&rec),
                    t
                )));
            }
        }
        e.0.push(t);
        e.1.push(v);
    }
    let plan = default_channels();
    Ok(channels
        .into_iter()
        .map(|(id, (timestamps, values))| RssTrace {
            channel_id: id,
            wavelength: plan.get(id).map_or(T::nan(), |&f| wavelength_of(T::lit(f))),
            unit,
            timestamps,
            values,
        })
        .collect())
}

/// Writes `time_s,method,f_hat_hz,recon_db`; undefined estimates leave
/// `f_hat_hz` empty.
pub fn write_estimates<T: Scalar, W: Write>(w: W, series: &[&EstimateSeries<T>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(ESTIMATE_HEADER).map_err(csv_err)?;
    for s in series {
        for ((t, f), r) in s.timestamps.iter().zip(&s.f_hat).zip(&s.reconstruction) {
            out.write_record([
                t.as_f64().to_string(),
                s.method.to_string(),
                f.map_or(String::new(), |f| f.as_f64().to_string()),
                r.as_f64().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads an estimate file, one series per method. The `recon_db` column is
/// optional; without it the reconstruction is empty. Sample indices are
/// not stored and come back empty.
pub fn read_estimates<T: Scalar, R: Read>(r: R) -> Result<Vec<EstimateSeries<T>>> {
    let mut rdr = reader(r);
    let cols = check_header(&mut rdr, &ESTIMATE_HEADER, 3)?;
    let mut by_method: BTreeMap<Method, EstimateSeries<T>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let t = number::<T>(&rec, 0, "time_s")?;
        let m_s = field(&rec, 1, "method")?;
        let method: Method = m_s
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", line_of(&rec))))?;
        let f = match field(&rec, 2, "f_hat_hz")? {
            "" => None,
            _ => Some(number::<T>(&rec, 2, "f_hat_hz")?),
        };
        let s = by_method.entry(method).or_insert_with(|| EstimateSeries {
            method,
            timestamps: Vec::new(),
            f_hat: Vec::new(),
            reconstruction: Vec::new(),
            sample_index: Vec::new(),
            harmonic_states: Vec::new(),
            reconditioned: 0,
        });
        s.timestamps.push(t);
        s.f_hat.push(f);
        if cols == 4 {
            s.reconstruction.push(number::<T>(&rec, 3, "recon_db")?);
        }
    }
    Ok(by_method.into_values().collect())
}

/// Writes `window_end_s,f_hz,psd` for every window and in-band bin.
pub fn write_spectrogram<T: Scalar, W: Write>(w: W, spec: &Spectrogram<T>) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SPECTROGRAM_HEADER).map_err(csv_err)?;
    for (t, row) in spec.window_end.iter().zip(&spec.psd) {
        let ts = t.as_f64().to_string();
        for (f, p) in spec.freqs.iter().zip(row) {
            out.write_record([ts.clone(), f.as_f64().to_string(), p.as_f64().to_string()])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `snr_db,method,hit_ratio_pct`.
pub fn write_sweep<T: Scalar, W: Write>(w: W, rows: &[SweepRow<T>]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.snr_db.as_f64().to_string(),
            r.method.to_string(),
            r.hit_ratio_pct.as_f64().to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a table of named columns of equal length.
pub fn write_columns<W: Write>(w: W, names: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    if names.len() != columns.len() {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: columns.len(),
        });
    }
    let rows = columns.first().map_or(0, Vec::len);
    if let Some(c) = columns.iter().find(|c| c.len() != rows) {
        return Err(Error::LengthMismatch {
            left: rows,
            right: c.len(),
        });
    }
    let mut out = writer(w);
    out.write_record(names).map_err(csv_err)?;
    for i in 0..rows {
        out.write_record(columns.iter().map(|c| c[i].to_string()))
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(id: usize, n: usize) -> RssTrace<f64> {
        let t: Vec<f64> = (0..n).map(|k| k as f64 / 31.25).collect();
        let v: Vec<f64> = t.iter().map(|x| (x * 1.3).sin() * 0.1 + 1.0 / 3.0).collect();
        RssTrace::new(id, wavelength_of(default_channels()[id]), t, v).unwrap()
    }

    #[test]
    fn traces_round_trip_exactly() {
        let traces = vec![trace(0, 50), trace(3, 20)];
        let mut buf = Vec::new();
        write_traces(&mut buf, &traces).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,channel_id,rss_db\n"));
        let back: Vec<RssTrace<f64>> = read_traces(buf.as_slice()).unwrap();
        assert_eq!(back, traces);
    }

    #[test]
    fn interleaved_channels_are_grouped() {
        let csv = "time_s,channel_id,rss_db\n0,1,-1\n0,0,2\n0.5,1,-3\n0.5,0,4\n";
        let back: Vec<RssTrace<f64>> = read_traces(csv.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].values, vec![2.0, 4.0]);
        assert_eq!(back[1].values, vec![-1.0, -3.0]);
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let csv = "time_s,channel_id,rss_db\n0,0,1\n0.1,0,abc\n";
        let err = read_traces::<f64, _>(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let csv = "time_s,channel_id,rss_db\n0,0,1\n0.0,0,2\n";
        let err = read_traces::<f64, _>(csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = read_traces::<f64, _>("t,c,v\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn estimates_round_trip() {
        let s = EstimateSeries {
            method: Method::Gp,
            timestamps: vec![0.0, 0.032, 0.064],
            f_hat: vec![None, Some(0.2), Some(0.2001)],
            reconstruction: vec![0.1, 0.2, 0.3],
            sample_index: vec![],
            harmonic_states: vec![],
            reconditioned: 0,
        };
        let mut buf = Vec::new();
        write_estimates(&mut buf, &[&s]).unwrap();
        let back: Vec<EstimateSeries<f64>> = read_estimates(buf.as_slice()).unwrap();
        assert_eq!(back, vec![s]);
        let three = "time_s,method,f_hat_hz\n0,dft,0.2\n1,kf,\n";
        let back: Vec<EstimateSeries<f64>> = read_estimates(three.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back[0].reconstruction.is_empty());
        assert_eq!(back[1].f_hat, vec![None]);
        let bad = "time_s,method,f_hat_hz\n0,svm,0.2\n";
        let err = read_estimates::<f64, _>(bad.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn sweep_and_columns_headers() {
        let mut buf = Vec::new();
        write_sweep(
            &mut buf,
            &[SweepRow {
                snr_db: -4.0,
                method: Method::Kf,
                hit_ratio_pct: 100.0,
                mean_measured_snr_db: -3.5,
                runs: 3,
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "snr_db,method,hit_ratio_pct\n-4,kf,100\n");
        let mut buf = Vec::new();
        assert!(write_columns(&mut buf, &["a", "b"], &[vec![1.0], vec![]]).is_err());
    }
}
