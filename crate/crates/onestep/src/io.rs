//! File formats: regression CSV input, JSON reports, CSV exports.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use onestep_core::efficiency::AreTable;
use onestep_core::nalgebra::DMatrix;
use onestep_core::onestep::LineSearchTrace;
use onestep_core::ranks::{rank_residuals, RankScores};
use onestep_core::scores::{ScoreFunction, ScoreSpec};
use onestep_core::stable::StableParams;
use serde::Serialize;

use crate::error::{Error, Result};

/// A regression sample read from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    pub y: Vec<f64>,
    /// n × K regressors.
    pub c: DMatrix<f64>,
    /// Column names when the file had a header.
    pub names: Option<Vec<String>>,
}

/// Reads `y, c_1, …, c_K` rows. A first line is taken as a header when any
/// of its fields fails to parse as a number; every other field must be a
/// finite float.
pub fn read_regression_csv(path: &Path) -> Result<RegressionData> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_regression_csv(&text, path)
}

/// [`read_regression_csv`] on in-memory text; `path` only labels errors.
pub fn parse_regression_csv(text: &str, path: &Path) -> Result<RegressionData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.into(),
        line,
        message,
    };
    let mut names = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            names = Some(rec.iter().map(String::from).collect::<Vec<_>>());
            width = Some(rec.len());
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(parse_err(
                line,
                format!("expected {w} fields, found {}", rec.len()),
            ));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(
                    line,
                    format!("column {}: {f:?} is not a finite number", col + 1),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let w = width.unwrap_or(0);
    if w < 2 {
        return Err(parse_err(1, "need a response and at least one regressor".into()));
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    let n = rows.len();
    let y = rows.iter().map(|r| r[0]).collect();
    let c = DMatrix::from_fn(n, w - 1, |i, j| rows[i][j + 1]);
    Ok(RegressionData { y, c, names })
}

/// Pretty JSON to `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<fs::File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

/// `u,J` on `points` equally spaced interior points.
pub fn write_score_csv(path: &Path, j: &ScoreFunction, points: usize) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["u", "J"])?;
    for i in 1..=points {
        let u = i as f64 / (points + 1) as f64;
        w.write_record(&[u.to_string(), j.eval(u).to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `v,h` for every grid point the line search visited.
pub fn write_trace_csv(path: &Path, trace: &LineSearchTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["v", "h"])?;
    for e in &trace.evaluations {
        w.write_record(&[e.v.to_string(), e.h.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `i,residual,rank,score`: ranks of `residuals` with their scores
/// J(R_i/(n+1)).
pub fn write_ranks_csv(path: &Path, residuals: &[f64], j: &ScoreFunction) -> Result<()> {
    let ranks = rank_residuals(residuals)?;
    let scores = RankScores::new(j, residuals.len());
    let mut w = csv_writer(path)?;
    w.write_record(["i", "residual", "rank", "score"])?;
    for (i, (&z, &r)) in residuals.iter().zip(&ranks.ranks).enumerate() {
        w.write_record(&[
            (i + 1).to_string(),
            z.to_string(),
            r.to_string(),
            scores.get(r).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per score, one column per density.
pub fn write_are_table_csv(path: &Path, table: &AreTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![format!("score/{}", table.reference)];
    header.extend(table.densities.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in table.scores.iter().zip(&table.values) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `alpha,b,are` rows.
pub fn write_are_curve_csv(path: &Path, curve: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["alpha", "b", "are"])?;
    for &(a, b, v) in curve {
        w.write_record(&[a.to_string(), b.to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn spec_rows(path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Usage(format!("{}: {other:?}", path.display())),
        })?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        let fields: Vec<String> = rec.iter().map(String::from).collect();
        if fields.iter().all(String::is_empty) {
            continue;
        }
        out.push((line, fields));
    }
    Ok(out)
}

/// Score pairs `score,reference`, e.g. `stable:1.8,0.5;laplace`.
/// A header line `score,reference` is skipped. Stable specs contain a comma,
/// so fields are split on `;` when present and otherwise on the last comma
/// that starts a valid reference.
pub fn read_pairs(path: &Path) -> Result<Vec<(ScoreSpec, ScoreSpec)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| Error::Parse {
            path: path.into(),
            line: i as u64 + 1,
            message: m,
        };
        let split = if let Some((a, b)) = line.split_once(';') {
            Some((a.trim(), b.trim()))
        } else {
            line.rmatch_indices(',').find_map(|(k, _)| {
                let (a, b) = (line[..k].trim(), line[k + 1..].trim());
                (ScoreSpec::parse(a).is_ok() && ScoreSpec::parse(b).is_ok()).then_some((a, b))
            })
        };
        match split {
            Some((a, b)) => out.push((
                ScoreSpec::parse(a).map_err(|e| err(e.to_string()))?,
                ScoreSpec::parse(b).map_err(|e| err(e.to_string()))?,
            )),
            None if out.is_empty() && line.to_ascii_lowercase().starts_with("score") => {}
            None => return Err(err(format!("cannot read a score pair from {line:?}"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Usage(format!("{}: no score pairs", path.display())));
    }
    Ok(out)
}

/// Densities `alpha,b` (standardized), optional header.
pub fn read_densities(path: &Path) -> Result<Vec<StableParams>> {
    let mut out = Vec::new();
    for (line, fields) in spec_rows(path)? {
        let nums: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match nums {
            Some(v) if v.len() == 2 => out.push(StableParams::standard(v[0], v[1]).map_err(|e| {
                Error::Parse {
                    path: path.into(),
                    line,
                    message: e.to_string(),
                }
            })?),
            None if out.is_empty() => {}
            _ => {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: "expected alpha,b".into(),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Usage(format!("{}: no densities", path.display())));
    }
    Ok(out)
}
