//! On-disk cache of stable score tables.
//!
//! One CSV file per (α, b, resolution). The first line is a version header;
//! files with another header are rebuilt.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use onestep_core::scores::{ScoreFunction, ScoreSpec};
use onestep_core::stable::{StableParams, StableTable, TableRow, DEFAULT_RESOLUTION};

use crate::error::{Error, Result};

pub const CACHE_ENV: &str = "ONESTEP_CACHE_DIR";
const HEADER: &str = "# onestep table v1";

/// Where tables live: `$ONESTEP_CACHE_DIR`, else the user cache directory,
/// else the system temporary directory.
pub fn default_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(d).join("onestep");
    }
    if let Some(h) = std::env::var_os("HOME") {
        return PathBuf::from(h).join(".cache").join("onestep");
    }
    std::env::temp_dir().join("onestep")
}

type Key = (u64, u64, usize);

/// Tables kept in memory and mirrored on disk. `dir = None` disables the
/// disk side.
pub struct TableCache {
    dir: Option<PathBuf>,
    resolution: usize,
    memory: Mutex<HashMap<Key, Arc<StableTable>>>,
}

impl TableCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        TableCache {
            dir,
            resolution: DEFAULT_RESOLUTION,
            memory: Mutex::new(HashMap::new()),
        }
    }

    /// Disk cache in [`default_dir`].
    pub fn from_env() -> Self {
        Self::new(Some(default_dir()))
    }

    pub fn in_memory() -> Self {
        Self::new(None)
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn file(&self, alpha: f64, b: f64) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| {
            d.join(format!(
                "stable_a{}_b{}_r{}.csv",
                fmt_param(alpha),
                fmt_param(b),
                self.resolution
            ))
        })
    }

    /// Table of S(α, b; 1, 0), loaded or built.
    pub fn table(&self, alpha: f64, b: f64) -> Result<Arc<StableTable>> {
        let params = StableParams::standard(alpha, b)?;
        let key = (alpha.to_bits(), b.to_bits(), self.resolution);
        if let Some(t) = self.memory.lock().expect("cache lock").get(&key) {
            return Ok(t.clone());
        }
        let file = self.file(alpha, b);
        let loaded = file
            .as_ref()
            .filter(|f| f.exists())
            .and_then(|f| read_table(f, params, self.resolution).ok());
        let table = match loaded {
            Some(t) => Arc::new(t),
            None => {
                let t = Arc::new(params.build_table(self.resolution)?);
                if let Some(f) = &file {
                    // A cache that cannot be written is only slower.
                    let _ = write_table(f, &t);
                }
                t
            }
        };
        self.memory
            .lock()
            .expect("cache lock")
            .insert(key, table.clone());
        Ok(table)
    }

    /// Builds any score, taking stable tables from the cache.
    pub fn score(&self, spec: &ScoreSpec) -> Result<ScoreFunction> {
        match *spec {
            ScoreSpec::Stable { alpha, b } if !(alpha == 1.0 && b == 0.0) => {
                Ok(ScoreFunction::stable(self.table(alpha, b)?)?)
            }
            _ => Ok(spec.build()?),
        }
    }
}

fn fmt_param(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

/// Writes `table` as CSV with the version header.
pub fn write_table(path: &Path, table: &StableTable) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let p = table.params();
    // Write to a sibling file first so readers never see a partial table.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut out = std::io::BufWriter::new(fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
    writeln!(
        out,
        "{HEADER} alpha={} b={} resolution={}",
        p.alpha(),
        p.b(),
        table.resolution()
    )
    .map_err(|e| Error::io(&tmp, e))?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["u", "x", "density", "score", "score_slope"])?;
        for r in table.rows() {
            w.write_record(&[
                r.u.to_string(),
                r.x.to_string(),
                r.density.to_string(),
                r.score.to_string(),
                r.score_slope.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    out.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(out);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_table`], checking it belongs to
/// `params` at `resolution`.
pub fn read_table(path: &Path, params: StableParams, resolution: usize) -> Result<StableTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    let want = format!(
        "{HEADER} alpha={} b={} resolution={}",
        params.alpha(),
        params.b(),
        resolution
    );
    if first.trim_end() != want {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header {want:?}"),
        });
    }
    let mut rows = Vec::new();
    let mut csv = csv::Reader::from_reader(reader);
    for (i, rec) in csv.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 3;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("bad field {k}"),
                })
        };
        rows.push(TableRow {
            u: field(0)?,
            x: field(1)?,
            density: field(2)?,
            score: field(3)?,
            score_slope: field(4)?,
        });
    }
    Ok(StableTable::from_rows(params, resolution, rows)?)
}
