//! CSV and JSON emission of success curves.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{io_error, Error, Result};
use crate::experiments::{ExperimentRecord, PointRecord};

pub const CSV_HEADER: [&str; 8] = ["m", "trials", "recovered", "certified", "p_recover", "p_certify", "mean_residual", "wall_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Writes the header and one row per grid point.
pub fn write_csv<W: Write>(points: &[PointRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for p in points {
        w.write_record([
            p.m.to_string(),
            p.trials.to_string(),
            p.recovered.to_string(),
            p.certified.to_string(),
            format!("{:.6}", p.p_recover()),
            format!("{:.6}", p.p_certify()),
            format!("{:e}", p.mean_residual),
            format!("{}", p.wall_ms),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

pub fn csv_string(points: &[PointRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(points, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ASCII")
}

pub fn write_json<W: Write>(records: &[ExperimentRecord], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    writeln!(out)
}

/// Output path of curve `label` when a scenario has several curves:
/// `dir/stem-label.ext`.
pub fn curve_path(path: &Path, label: &str, format: Format) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("curve");
    path.with_file_name(format!("{stem}-{label}.{}", format.extension()))
}

/// Writes `records` to `path`, or to stdout when `path` is `None`.
///
/// CSV holds one curve per file; several curves go to [`curve_path`]
/// files, or to stdout separated by `# label` lines.
pub fn emit(records: &[ExperimentRecord], format: Format, path: Option<&Path>) -> Result<Vec<PathBuf>> {
    let Some(path) = path else {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        let res = match format {
            Format::Json => write_json(records, &mut lock),
            Format::Csv if records.len() == 1 => write_csv(&records[0].points, &mut lock),
            Format::Csv => records.iter().try_for_each(|r| {
                writeln!(lock, "# {}", r.label)?;
                write_csv(&r.points, &mut lock)
            }),
        };
        res.map_err(io_error("<stdout>"))?;
        return Ok(Vec::new());
    };
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(io_error(p));
    match format {
        Format::Json => {
            let mut f = create(path)?;
            write_json(records, &mut f).and_then(|_| f.flush()).map_err(io_error(path))?;
            Ok(vec![path.to_path_buf()])
        }
        Format::Csv => {
            let mut written = Vec::new();
            for r in records {
                let target = if records.len() == 1 { path.to_path_buf() } else { curve_path(path, &r.label, format) };
                let mut f = create(&target)?;
                write_csv(&r.points, &mut f).and_then(|_| f.flush()).map_err(io_error(&target))?;
                written.push(target);
            }
            Ok(written)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(m: usize, trials: usize, recovered: usize, certified: usize) -> PointRecord {
        PointRecord { m, trials, recovered, certified, mean_residual: 1.0 / 3.0, wall_ms: 0.0, outcomes: Vec::new() }
    }

    #[test]
    fn empty_stream_is_header_only() {
        assert_eq!(csv_string(&[]), "m,trials,recovered,certified,p_recover,p_certify,mean_residual,wall_ms\n");
    }

    #[test]
    fn rates_are_counts_over_trials() {
        let text = csv_string(&[point(40, 3, 2, 1), point(80, 50, 50, 49)]);
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows[0], "40,3,2,1,0.666667,0.333333,3.333333333333333e-1,0");
        assert_eq!(rows[1], "80,50,50,49,1.000000,0.980000,3.333333333333333e-1,0");
    }

    #[test]
    fn residual_round_trips() {
        let mut p = point(1, 1, 0, 0);
        p.mean_residual = 1.234_567_890_123_456_7e-9;
        let text = csv_string(&[p.clone()]);
        let field = text.lines().nth(1).unwrap().split(',').nth(6).unwrap();
        assert_eq!(field.parse::<f64>().unwrap(), p.mean_residual);
    }

    #[test]
    fn curve_paths() {
        assert_eq!(curve_path(Path::new("/tmp/out.csv"), "local", Format::Csv), PathBuf::from("/tmp/out-local.csv"));
    }

    #[test]
    fn io_errors_name_the_path() {
        let rec = ExperimentRecord {
            label: "x".into(),
            config: crate::ExperimentConfig::new(crate::config::FrameSpec::Pauli { qubits: 1 }, 1, vec![1]),
            points: vec![],
        };
        let err = emit(&[rec], Format::Csv, Some(Path::new("/nonexistent-dir/out.csv"))).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }
}
