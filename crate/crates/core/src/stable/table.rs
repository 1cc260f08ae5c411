//! Precomputed quantile, density and score columns of a standardized law.
//!
//! Nodes start equally spaced in s = logit(u) over [u_min, 1 − u_min], which
//! puts most of them in the tails where F⁻¹ moves fastest. Each cell is then
//! checked at its midpoint against a direct evaluation and bisected where the
//! interpolant misses, so sharp features of the score get extra nodes.
//!
//! Both columns are interpolated by cubic Hermite splines in s with exact
//! slopes: dx/ds = u(1 − u)/f(x) for the quantile (kept monotone) and
//! dφ/ds = φ'(x) dx/ds for the score.

use alloc::vec::Vec;
// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;

use super::StableParams;
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 2001;
pub const DEFAULT_U_MIN: f64 = 1e-6;

const MAX_REFINE: usize = 8;
const SCORE_TOL: f64 = 1e-5;
const QUANTILE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableRow {
    pub u: f64,
    pub x: f64,
    pub density: f64,
    pub score: f64,
    /// φ'(x), the derivative of the score in x.
    pub score_slope: f64,
}

/// An interpolated value; `clamped` is set when `u` fell outside the grid and
/// was moved to its nearest edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lookup {
    pub value: f64,
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StableTable {
    params: StableParams,
    resolution: usize,
    rows: Vec<TableRow>,
    s: Vec<f64>,
}

fn logit(u: f64) -> f64 {
    u.ln() - (-u).ln_1p()
}

fn expit(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn hermite(t: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * m1
}

// Hermite interpolation of the score column on cell [a, b].
fn score_cell(a: &TableRow, b: &TableRow, width: f64, t: f64) -> f64 {
    let slope = |r: &TableRow| r.score_slope * r.u * (1.0 - r.u) / r.density * width;
    hermite(t, a.score, b.score, slope(a), slope(b))
}

// Monotone Hermite interpolation of the quantile column on cell [a, b].
fn quantile_cell(a: &TableRow, b: &TableRow, width: f64, t: f64) -> f64 {
    let slope = |r: &TableRow| r.u * (1.0 - r.u) / r.density * width;
    let delta = b.x - a.x;
    let (mut ma, mut mb) = (slope(a), slope(b));
    // Fritsch–Carlson: keep the cubic monotone on this cell.
    let (ra, rb) = (ma / delta, mb / delta);
    let r2 = ra * ra + rb * rb;
    if r2 > 9.0 {
        let k = 3.0 / r2.sqrt();
        ma *= k;
        mb *= k;
    }
    hermite(t, a.x, b.x, ma, mb)
}

impl StableTable {
    /// Tabulates `params` (which must be standardized) starting from
    /// `resolution` nodes.
    pub fn build(params: StableParams, resolution: usize) -> Result<Self> {
        Self::build_with(params, resolution, DEFAULT_U_MIN)
    }

    pub fn build_with(params: StableParams, resolution: usize, u_min: f64) -> Result<Self> {
        if !params.is_standard() {
            return Err(Error::InvalidParameter {
                name: "gamma/delta (table needs a standardized law)",
                value: if params.gamma() != 1.0 { params.gamma() } else { params.delta() },
            });
        }
        if resolution < 8 {
            return Err(Error::InvalidParameter {
                name: "resolution",
                value: resolution as f64,
            });
        }
        if !(u_min > 0.0 && u_min <= 1e-4) {
            return Err(Error::InvalidParameter {
                name: "u_min",
                value: u_min,
            });
        }
        let s0 = logit(u_min);
        let ds = -2.0 * s0 / (resolution - 1) as f64;
        let left: Vec<f64> = (0..resolution)
            .map(|i| expit(s0 + ds * i as f64))
            .collect();
        // An exactly mirrored grid, so symmetric laws tabulate symmetrically.
        let us: Vec<f64> = (0..resolution)
            .map(|i| {
                if 2 * i + 1 > resolution {
                    1.0 - left[resolution - 1 - i]
                } else {
                    left[i]
                }
            })
            .collect();
        let symmetric = params.is_symmetric();
        let eval = |u: f64, hint: Option<f64>| -> Result<TableRow> {
            if symmetric && u == 0.5 {
                let (density, _, score_slope) = params.pdf_score_slope(0.0)?;
                return Ok(TableRow {
                    u,
                    x: 0.0,
                    density,
                    score: 0.0,
                    score_slope,
                });
            }
            let x = params.quantile_near(u, hint)?;
            let (density, score, score_slope) = params.pdf_score_slope(x)?;
            Ok(TableRow {
                u,
                x,
                density,
                score,
                score_slope,
            })
        };
        let mirror = |r: &TableRow, u: f64| TableRow {
            u,
            x: -r.x,
            density: r.density,
            score: -r.score,
            score_slope: r.score_slope,
        };

        let mut rows: Vec<TableRow> = Vec::with_capacity(resolution);
        for (i, &u) in us.iter().enumerate() {
            let row = if symmetric && 2 * i + 1 > resolution {
                mirror(&rows[resolution - 1 - i], u)
            } else {
                eval(u, rows.last().map(|r| r.x))?
            };
            rows.push(row);
        }

        let mut pending = alloc::vec![true; rows.len() - 1];
        for _ in 0..MAX_REFINE {
            if !pending.iter().any(|&p| p) {
                break;
            }
            let s: Vec<f64> = rows.iter().map(|r| logit(r.u)).collect();
            let cells = rows.len() - 1;
            let mut inserts: Vec<Option<TableRow>> = alloc::vec![None; cells];
            for i in 0..cells {
                if !pending[i] {
                    continue;
                }
                let j = cells - 1 - i;
                if symmetric && j < i {
                    if let Some(r) = inserts[j] {
                        inserts[i] = Some(mirror(&r, 1.0 - r.u));
                    }
                    continue;
                }
                let (a, b) = (&rows[i], &rows[i + 1]);
                let u = if symmetric && i == j {
                    0.5
                } else {
                    expit(0.5 * (s[i] + s[i + 1]))
                };
                if !(u > a.u && u < b.u) {
                    continue;
                }
                let exact = eval(u, Some(a.x))?;
                let w = s[i + 1] - s[i];
                let score = score_cell(a, b, w, 0.5);
                let x = quantile_cell(a, b, w, 0.5);
                let score_ok = (score - exact.score).abs() <= SCORE_TOL * exact.score.abs().max(1.0);
                let x_ok = (x - exact.x).abs() <= QUANTILE_TOL * (1.0 + exact.x.abs());
                if !(score_ok && x_ok) {
                    inserts[i] = Some(exact);
                }
            }
            let mut next_rows = Vec::with_capacity(rows.len() + cells / 4);
            let mut next_pending = Vec::with_capacity(pending.len() + cells / 4);
            for i in 0..cells {
                next_rows.push(rows[i]);
                match inserts[i] {
                    Some(r) => {
                        next_rows.push(r);
                        next_pending.extend([true, true]);
                    }
                    None => next_pending.push(false),
                }
            }
            next_rows.push(rows[cells]);
            rows = next_rows;
            pending = next_pending;
        }
        Self::checked(params, resolution, rows)
    }

    /// Rebuilds a table from stored rows (for example a cache file), checking
    /// the invariants.
    pub fn from_rows(params: StableParams, resolution: usize, rows: Vec<TableRow>) -> Result<Self> {
        if rows.len() < 8 {
            return Err(Error::DimensionMismatch {
                what: "table rows",
                expected: 8,
                found: rows.len(),
            });
        }
        Self::checked(params, resolution, rows)
    }

    fn checked(params: StableParams, resolution: usize, rows: Vec<TableRow>) -> Result<Self> {
        let n = rows.len();
        if !(rows[0].u > 0.0 && rows[0].u <= 1e-4 && rows[n - 1].u >= 1.0 - 1e-4 && rows[n - 1].u < 1.0)
        {
            return Err(Error::InvalidParameter {
                name: "table coverage",
                value: rows[0].u,
            });
        }
        for (i, r) in rows.iter().enumerate() {
            if !(r.density > 0.0)
                || !r.x.is_finite()
                || !r.score.is_finite()
                || !r.score_slope.is_finite()
                || !r.u.is_finite()
            {
                return Err(Error::NotANumber { index: i });
            }
            if i > 0 && !(r.u > rows[i - 1].u) {
                return Err(Error::InvalidParameter {
                    name: "table u column not increasing",
                    value: r.u,
                });
            }
            if i > 0 && !(r.x > rows[i - 1].x) {
                return Err(Error::NumericFailure {
                    what: "table quantile column not increasing",
                    x: r.u,
                    params: Some(params),
                    achieved: r.x - rows[i - 1].x,
                });
            }
        }
        let s: Vec<f64> = rows.iter().map(|r| logit(r.u)).collect();
        Ok(StableTable {
            params,
            resolution,
            rows,
            s,
        })
    }

    pub fn params(&self) -> StableParams {
        self.params
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    /// Number of nodes on the initial equally spaced grid.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn u_min(&self) -> f64 {
        self.rows[0].u
    }

    // Cell index and fractional position of u, clamping to the grid.
    fn locate(&self, u: f64) -> (usize, f64, bool) {
        let n = self.rows.len();
        let (lo, hi) = (self.rows[0].u, self.rows[n - 1].u);
        if u.is_nan() || u <= lo {
            return (0, 0.0, u != lo);
        }
        if u >= hi {
            return (n - 2, 1.0, u != hi);
        }
        let i = self.rows.partition_point(|r| r.u <= u) - 1;
        let i = i.min(n - 2);
        let t = (logit(u) - self.s[i]) / (self.s[i + 1] - self.s[i]);
        (i, t.clamp(0.0, 1.0), false)
    }

    /// F⁻¹(u).
    pub fn quantile(&self, u: f64) -> Lookup {
        let (i, t, clamped) = self.locate(u);
        let w = self.s[i + 1] - self.s[i];
        Lookup {
            value: quantile_cell(&self.rows[i], &self.rows[i + 1], w, t),
            clamped,
        }
    }

    /// φ(F⁻¹(u)).
    pub fn score(&self, u: f64) -> Lookup {
        let (i, t, clamped) = self.locate(u);
        let w = self.s[i + 1] - self.s[i];
        Lookup {
            value: score_cell(&self.rows[i], &self.rows[i + 1], w, t),
            clamped,
        }
    }

    /// F(x), inverting the quantile interpolant. Outside the grid the
    /// exact distribution function is used.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let n = self.rows.len();
        if x.is_nan() {
            return Err(Error::NotANumber { index: 0 });
        }
        if !(x >= self.rows[0].x && x <= self.rows[n - 1].x) {
            return self.params.cdf(x);
        }
        let i = (self.rows.partition_point(|r| r.x <= x).max(1) - 1).min(n - 2);
        let (a, b) = (&self.rows[i], &self.rows[i + 1]);
        let w = self.s[i + 1] - self.s[i];
        // Safeguarded Newton on the monotone cubic.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut t = if b.x > a.x { (x - a.x) / (b.x - a.x) } else { 0.5 };
        for _ in 0..60 {
            let q = quantile_cell(a, b, w, t);
            if q < x {
                lo = t;
            } else {
                hi = t;
            }
            let h = 1e-7;
            let d = (quantile_cell(a, b, w, (t + h).min(1.0)) - quantile_cell(a, b, w, (t - h).max(0.0)))
                / ((t + h).min(1.0) - (t - h).max(0.0));
            let mut next = t - (q - x) / d;
            if !(next > lo && next < hi) || !d.is_finite() || d <= 0.0 {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 || hi - lo <= 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        Ok(expit(self.s[i] + t * w))
    }

    /// f(F⁻¹(u)), interpolated linearly in log density.
    pub fn density(&self, u: f64) -> Lookup {
        let (i, t, clamped) = self.locate(u);
        let (a, b) = (self.rows[i].density.ln(), self.rows[i + 1].density.ln());
        Lookup {
            value: (a + t * (b - a)).exp(),
            clamped,
        }
    }
}
