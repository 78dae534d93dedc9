use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::OutputFormat;
use crate::error::{Error, Result};
use crate::metrics::{ConvergenceReport, ErrorSample};

pub const REPORT_COLUMNS: [&str; 11] = [
    "scheme",
    "dt",
    "n_paths",
    "strong_error",
    "weak_error",
    "mean_bias",
    "variance",
    "time_avg_mse",
    "runtime_seconds",
    "clamp_events",
    "excluded_paths",
];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_f64(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".into()
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        k => Error::Config(format!("malformed report: {k:?}")),
    }
}

fn row(r: &ConvergenceReport) -> [String; 11] {
    [
        r.scheme.clone(),
        fmt_f64(r.dt),
        r.n_paths.to_string(),
        fmt_f64(r.strong_error),
        fmt_f64(r.weak_error),
        fmt_f64(r.mean_bias),
        fmt_f64(r.variance),
        fmt_f64(r.time_avg_mse),
        fmt_f64(r.runtime_seconds),
        r.clamp_events.to_string(),
        r.excluded_paths.to_string(),
    ]
}

pub fn write_csv<W: Write>(reports: &[ConvergenceReport], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for r in reports {
        w.write_record(row(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(reports: &[ConvergenceReport], mut out: W) -> Result<()> {
    writeln!(out, "[")?;
    for (i, r) in reports.iter().enumerate() {
        let scheme = serde_json::to_string(&r.scheme).expect("string");
        write!(
            out,
            "  {{\"scheme\": {scheme}, \"dt\": {}, \"n_paths\": {}, \"strong_error\": {}, \"weak_error\": {}, \
             \"mean_bias\": {}, \"variance\": {}, \"time_avg_mse\": {}, \"runtime_seconds\": {}, \
             \"clamp_events\": {}, \"excluded_paths\": {}}}",
            json_f64(r.dt),
            r.n_paths,
            json_f64(r.strong_error),
            json_f64(r.weak_error),
            json_f64(r.mean_bias),
            json_f64(r.variance),
            json_f64(r.time_avg_mse),
            json_f64(r.runtime_seconds),
            r.clamp_events,
            r.excluded_paths
        )?;
        writeln!(out, "{}", if i + 1 < reports.len() { "," } else { "" })?;
    }
    writeln!(out, "]")?;
    Ok(())
}

/// Writes the reports to `path`.
pub fn emit_report(reports: &[ConvergenceReport], format: OutputFormat, path: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to write"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(reports, &mut w)?,
        OutputFormat::Json => write_json(reports, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

pub fn render_report(reports: &[ConvergenceReport], format: OutputFormat) -> Result<String> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(reports, &mut buf)?,
        OutputFormat::Json => write_json(reports, &mut buf)?,
    }
    Ok(String::from_utf8(buf).expect("utf-8"))
}

fn num<T: std::str::FromStr>(field: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("malformed report: {field} = `{s}`")))
}

pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceReport>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(REPORT_COLUMNS) {
        return Err(Error::Config(format!("unexpected report header: {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        out.push(ConvergenceReport {
            scheme: f(0).to_string(),
            dt: num("dt", f(1))?,
            n_paths: num("n_paths", f(2))?,
            strong_error: num("strong_error", f(3))?,
            weak_error: num("weak_error", f(4))?,
            mean_bias: num("mean_bias", f(5))?,
            variance: num("variance", f(6))?,
            time_avg_mse: num("time_avg_mse", f(7))?,
            runtime_seconds: num("runtime_seconds", f(8))?,
            clamp_events: num("clamp_events", f(9))?,
            excluded_paths: num("excluded_paths", f(10))?,
        });
    }
    Ok(out)
}

pub fn parse_json(text: &str) -> Result<Vec<ConvergenceReport>> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed report: {e}")))?;
    let arr = v.as_array().ok_or_else(|| Error::Config("report is not a JSON array".into()))?;
    let real = |o: &serde_json::Value, k: &str| -> Result<f64> {
        match &o[k] {
            serde_json::Value::Null => Ok(f64::NAN),
            x => x.as_f64().ok_or_else(|| Error::Config(format!("malformed report: {k}"))),
        }
    };
    let int = |o: &serde_json::Value, k: &str| -> Result<u64> {
        o[k].as_u64().ok_or_else(|| Error::Config(format!("malformed report: {k}")))
    };
    arr.iter()
        .map(|o| {
            Ok(ConvergenceReport {
                scheme: o["scheme"].as_str().ok_or_else(|| Error::Config("malformed report: scheme".into()))?.into(),
                dt: real(o, "dt")?,
                n_paths: int(o, "n_paths")? as usize,
                strong_error: real(o, "strong_error")?,
                weak_error: real(o, "weak_error")?,
                mean_bias: real(o, "mean_bias")?,
                variance: real(o, "variance")?,
                time_avg_mse: real(o, "time_avg_mse")?,
                runtime_seconds: real(o, "runtime_seconds")?,
                clamp_events: int(o, "clamp_events")?,
                excluded_paths: int(o, "excluded_paths")?,
            })
        })
        .collect()
}

pub fn parse_report(text: &str, format: OutputFormat) -> Result<Vec<ConvergenceReport>> {
    match format {
        OutputFormat::Csv => parse_csv(text),
        OutputFormat::Json => parse_json(text),
    }
}

/// Per-path errors: `scheme,dt,path_index,error,diff_0,...`.
pub fn write_samples<W: Write>(samples: &[ErrorSample], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let width = samples.iter().map(|s| s.diff.len()).max().unwrap_or(0);
    let mut header = vec!["scheme".to_string(), "dt".into(), "path_index".into(), "error".into()];
    header.extend((0..width).map(|k| format!("diff_{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in samples {
        let mut rec = vec![s.scheme.clone(), fmt_f64(s.dt), s.path_index.to_string(), fmt_f64(s.error)];
        rec.extend(s.diff.iter().map(|&d| fmt_f64(d)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(scheme: &str, dt: f64, variance: f64) -> ConvergenceReport {
        ConvergenceReport {
            scheme: scheme.into(),
            dt,
            n_paths: 10,
            strong_error: 0.1 / 3.0,
            weak_error: 1e-300,
            mean_bias: 2.5e-17,
            variance,
            time_avg_mse: std::f64::consts::PI,
            runtime_seconds: 1.234e-4,
            clamp_events: 7,
            excluded_paths: 1,
        }
    }

    #[test]
    fn single_row_layout() {
        let text = render_report(&[report("em", 0.1, 0.5)], OutputFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "scheme,dt,n_paths,strong_error,weak_error,mean_bias,variance,time_avg_mse,runtime_seconds,clamp_events,excluded_paths"
        );
        assert!(lines[1].starts_with("em,1.0000000000000001e-1,10,3.3333333333333333e-2,"));
    }

    #[test]
    fn round_trips() {
        let reports = vec![
            report("em", 0.1, 0.5),
            report("coulomb_relax:2,simpson", 1e-4, f64::NAN),
            report("iter:3", 0.0625, 0.0),
        ];
        for fmt in [OutputFormat::Csv, OutputFormat::Json] {
            let text = render_report(&reports, fmt).unwrap();
            assert_eq!(parse_report(&text, fmt).unwrap(), reports, "{fmt:?}");
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = emit_report(&[report("em", 0.1, 0.5)], OutputFormat::Csv, Path::new("/nonexistent/dir/r.csv"))
            .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn samples_file() {
        let s = ErrorSample::new("em", 0.1, 3, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_samples(&[s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "scheme,dt,path_index,error,diff_0,diff_1");
        assert_eq!(text.lines().count(), 2);
    }
}
