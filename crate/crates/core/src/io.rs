//! CSV interchange for series, feature sets and estimation results.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EstimationResult;
use crate::stochastic::MeasurementSeries;
use crate::windowstats::FeatureSet;

pub const SERIES_HEADER: [&str; 5] = ["t", "P_MW", "Q_MVar", "V_kV", "I_kA"];

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

fn parse_value(s: &str, line: usize) -> Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("nan") || t.is_empty() {
        return Ok(f64::NAN);
    }
    t.parse::<f64>().map_err(|_| Error::Data(format!("line {line}: cannot parse '{t}' as a number")))
}

pub fn write_series<W: Write>(series: &MeasurementSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for k in 0..series.len() {
        w.write_record([
            format!("{:.9e}", series.time(k)),
            fmt_value(series.p[k]),
            fmt_value(series.q[k]),
            fmt_value(series.v_mag[k]),
            fmt_value(series.i_mag[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_file(series: &MeasurementSeries, path: &Path) -> Result<()> {
    write_series(series, std::fs::File::create(path)?)
}

/// Parse a series. The sampling period is inferred from the time column
/// and must be uniform to 10⁻⁶ relative.
pub fn read_series<R: Read>(input: R) -> Result<MeasurementSeries> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != SERIES_HEADER {
        return Err(Error::Data(format!("expected header {}, got {}", SERIES_HEADER.join(","), header.join(","))));
    }
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(Error::Data(format!("line {}: expected 5 fields, got {}", k + 2, rec.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            cols[c].push(parse_value(field, k + 2)?);
        }
    }
    let [t, p, q, v, i] = cols;
    if t.len() < 2 {
        return Err(Error::TooShort { len: t.len(), required: 2 });
    }
    if t.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("time column has missing entries".into()));
    }
    let ts = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    for (k, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - ts).abs() > 1e-6 * ts.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Data(format!("non-uniform sampling at line {}", k + 3)));
        }
    }
    MeasurementSeries::new(ts, t[0], p, q, v, i)
}

pub fn read_series_file(path: &Path) -> Result<MeasurementSeries> {
    read_series(std::fs::File::open(path)?)
}

pub fn write_features<W: Write>(features: &FeatureSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=features.a.ncols()).map(|k| format!("a{k}")));
    header.extend((1..=features.b.ncols()).map(|k| format!("b{k}")));
    w.write_record(&header)?;
    for r in 0..features.rows() {
        let mut row = vec![format!("{:.9e}", features.row_times[r])];
        row.extend(features.a.row(r).iter().map(|&v| fmt_value(v)));
        row.extend(features.b.row(r).iter().map(|&v| fmt_value(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Flat record of one estimate; failed estimates carry `nan` values and
/// `converged = false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub seed: u64,
    pub e_th: f64,
    pub r_th: f64,
    pub x_th: f64,
    pub b_vp: f64,
    pub b_vq: f64,
    pub b_ip: f64,
    pub b_iq: f64,
    pub kappa: f64,
    pub rows: usize,
    pub residual: f64,
    pub converged: bool,
}

impl ResultRow {
    pub fn from_result(result: &EstimationResult, seed: u64) -> Self {
        let d = &result.diagnostics;
        Self {
            method: result.label(),
            seed,
            e_th: result.tep.e_th,
            r_th: result.tep.r_th,
            x_th: result.tep.x_th,
            b_vp: result.msp.b_vp,
            b_vq: result.msp.b_vq,
            b_ip: result.msp.b_ip,
            b_iq: result.msp.b_iq,
            kappa: d.kappa,
            rows: d.rows,
            residual: d.residual,
            converged: d.converged,
        }
    }

    pub fn failed(label: String, seed: u64) -> Self {
        Self {
            method: label,
            seed,
            e_th: f64::NAN,
            r_th: f64::NAN,
            x_th: f64::NAN,
            b_vp: f64::NAN,
            b_vq: f64::NAN,
            b_ip: f64::NAN,
            b_iq: f64::NAN,
            kappa: f64::NAN,
            rows: 0,
            residual: f64::NAN,
            converged: false,
        }
    }

    pub const HEADER: [&'static str; 13] = [
        "method",
        "seed",
        "e_th",
        "r_th",
        "x_th",
        "b_vp",
        "b_vq",
        "b_ip",
        "b_iq",
        "kappa",
        "rows",
        "residual",
        "converged",
    ];

    fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.seed.to_string(),
            fmt_value(self.e_th),
            fmt_value(self.r_th),
            fmt_value(self.x_th),
            fmt_value(self.b_vp),
            fmt_value(self.b_vq),
            fmt_value(self.b_ip),
            fmt_value(self.b_iq),
            fmt_value(self.kappa),
            self.rows.to_string(),
            fmt_value(self.residual),
            self.converged.to_string(),
        ]
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W, header: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(ResultRow::HEADER)?;
    }
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let f = |i: usize| parse_value(&rec[i], line);
        let parse_int = |i: usize| -> Result<u64> {
            rec[i].trim().parse().map_err(|_| Error::Data(format!("line {line}: bad integer '{}'", &rec[i])))
        };
        out.push(ResultRow {
            method: rec[0].to_string(),
            seed: parse_int(1)?,
            e_th: f(2)?,
            r_th: f(3)?,
            x_th: f(4)?,
            b_vp: f(5)?,
            b_vq: f(6)?,
            b_ip: f(7)?,
            b_iq: f(8)?,
            kappa: f(9)?,
            rows: parse_int(10)? as usize,
            residual: f(11)?,
            converged: rec[12].trim() == "true",
        });
    }
    Ok(out)
}

/// Write any header plus pre-formatted numeric rows.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&v| fmt_value(v)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_with_gaps() {
        let s = MeasurementSeries::new(
            0.01,
            2.5,
            vec![1.0, f64::NAN, 3.25],
            vec![0.1, 0.2, 0.3],
            vec![256.123456789012, 256.0, 255.9],
            vec![0.27, 0.28, f64::NAN],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_series(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,P_MW,Q_MVar,V_kV,I_kA\n"));
        assert!(text.contains(",nan,"));
        let back = read_series(buf.as_slice()).unwrap();
        assert!((back.ts - 0.01).abs() < 1e-12);
        assert_eq!(back.start_time, 2.5);
        assert_eq!(back.v_mag, s.v_mag);
        assert!(back.p[1].is_nan() && back.i_mag[2].is_nan());
    }

    #[test]
    fn non_uniform_time_is_rejected() {
        let text = "t,P_MW,Q_MVar,V_kV,I_kA\n0,1,1,1,1\n0.01,1,1,1,1\n0.03,1,1,1,1\n";
        assert!(matches!(read_series(text.as_bytes()), Err(Error::Data(_))));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let text = "time,P,Q,V,I\n0,1,1,1,1\n0.01,1,1,1,1\n";
        assert!(read_series(text.as_bytes()).is_err());
    }

    #[test]
    fn result_rows_round_trip() {
        let rows = vec![
            ResultRow {
                method: "variance-ols".into(),
                seed: 7,
                e_th: 270.0,
                r_th: 20.0,
                x_th: 50.0,
                b_vp: -0.08,
                b_vq: -0.2,
                b_ip: 0.0028,
                b_iq: 0.003,
                kappa: 1.2,
                rows: 11501,
                residual: 0.01,
                converged: true,
            },
            ResultRow::failed("mean-tls".into(), 8),
        ];
        let mut buf = Vec::new();
        write_results(&rows, &mut buf, true).unwrap();
        let back = read_results(buf.as_slice()).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].e_th.is_nan() && !back[1].converged);
    }
}
