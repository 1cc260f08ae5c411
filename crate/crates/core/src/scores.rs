//! Score-generating functions J: (0, 1) → ℝ and the integrals
//!
//! ```text
//! 𝒥(J)    = ∫₀¹ J²(u) du
//! 𝒥(J, g) = ∫₀¹ J(u) φ_g(G⁻¹(u)) du
//! ```

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use core::fmt;

use crate::error::{Error, Result};
use crate::quadrature::{Quadrature, QuadratureError};
use crate::special::normal_quantile;
use crate::stable::{Law, Lookup, StableParams, StableTable, DEFAULT_RESOLUTION};

/// Which family a score belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreTag {
    VanDerWaerden,
    Wilcoxon,
    Laplace,
    Cauchy,
    Stable { alpha: f64, b: f64 },
    Custom,
}

impl fmt::Display for ScoreTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreTag::VanDerWaerden => f.write_str("vdw"),
            ScoreTag::Wilcoxon => f.write_str("wilcoxon"),
            ScoreTag::Laplace => f.write_str("laplace"),
            ScoreTag::Cauchy => f.write_str("cauchy"),
            ScoreTag::Stable { alpha, b } => write!(f, "stable:{alpha},{b}"),
            ScoreTag::Custom => f.write_str("custom"),
        }
    }
}

/// A score named in text form: `vdw`, `wilcoxon`, `laplace`, `cauchy` or
/// `stable:ALPHA,B`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub enum ScoreSpec {
    VanDerWaerden,
    Wilcoxon,
    Laplace,
    Cauchy,
    Stable { alpha: f64, b: f64 },
}

impl ScoreSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        Ok(match t.as_str() {
            "vdw" | "van-der-waerden" | "normal" => ScoreSpec::VanDerWaerden,
            "w" | "wilcoxon" => ScoreSpec::Wilcoxon,
            "l" | "laplace" | "sign" => ScoreSpec::Laplace,
            "c" | "cauchy" => ScoreSpec::Cauchy,
            _ => {
                let rest = t
                    .strip_prefix("stable:")
                    .ok_or(Error::InvalidScore("unknown score name"))?;
                let (a, b) = rest
                    .split_once(',')
                    .ok_or(Error::InvalidScore("expected stable:ALPHA,B"))?;
                let alpha: f64 = a.trim().parse().map_err(|_| Error::InvalidScore("bad alpha"))?;
                let b: f64 = b.trim().parse().map_err(|_| Error::InvalidScore("bad b"))?;
                StableParams::standard(alpha, b)?;
                ScoreSpec::Stable { alpha, b }
            }
        })
    }

    /// Builds the score; stable tables are computed at the default
    /// resolution.
    pub fn build(&self) -> Result<ScoreFunction> {
        match *self {
            ScoreSpec::VanDerWaerden => Ok(ScoreFunction::van_der_waerden()),
            ScoreSpec::Wilcoxon => Ok(ScoreFunction::wilcoxon()),
            ScoreSpec::Laplace => Ok(ScoreFunction::laplace()),
            ScoreSpec::Cauchy => Ok(ScoreFunction::cauchy()),
            ScoreSpec::Stable { alpha, b } => ScoreFunction::stable_from_params(alpha, b),
        }
    }
}

impl fmt::Display for ScoreSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreSpec::VanDerWaerden => f.write_str("vdw"),
            ScoreSpec::Wilcoxon => f.write_str("wilcoxon"),
            ScoreSpec::Laplace => f.write_str("laplace"),
            ScoreSpec::Cauchy => f.write_str("cauchy"),
            ScoreSpec::Stable { alpha, b } => write!(f, "stable:{alpha},{b}"),
        }
    }
}

impl core::str::FromStr for ScoreSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScoreSpec::parse(s)
    }
}

impl TryFrom<String> for ScoreSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        ScoreSpec::parse(&s)
    }
}

impl From<ScoreSpec> for String {
    fn from(s: ScoreSpec) -> String {
        format!("{s}")
    }
}

#[derive(Clone, Debug)]
enum Kind {
    VanDerWaerden,
    Wilcoxon,
    Laplace,
    Cauchy,
    Stable(Arc<StableTable>),
    // Knots strictly increasing in (0, 1); linear in between, flat outside.
    Custom { u: Vec<f64>, j: Vec<f64> },
}

/// A score-generating function together with its square integral.
#[derive(Clone, Debug)]
pub struct ScoreFunction {
    tag: ScoreTag,
    kind: Kind,
    scale: f64,
    square_integral: f64,
}

impl ScoreFunction {
    /// van der Waerden, Wilcoxon or Laplace scores.
    pub fn classical(tag: ScoreTag) -> Result<Self> {
        let kind = match tag {
            ScoreTag::VanDerWaerden => Kind::VanDerWaerden,
            ScoreTag::Wilcoxon => Kind::Wilcoxon,
            ScoreTag::Laplace => Kind::Laplace,
            _ => return Err(Error::InvalidScore("not a classical score tag")),
        };
        Self::finish(tag, kind)
    }

    pub fn van_der_waerden() -> Self {
        Self::classical(ScoreTag::VanDerWaerden).expect("closed form")
    }

    pub fn wilcoxon() -> Self {
        Self::classical(ScoreTag::Wilcoxon).expect("closed form")
    }

    pub fn laplace() -> Self {
        Self::classical(ScoreTag::Laplace).expect("closed form")
    }

    /// The Cauchy score sin(2π(u − ½)).
    pub fn cauchy() -> Self {
        Self::finish(ScoreTag::Cauchy, Kind::Cauchy).expect("closed form")
    }

    /// Stable score u ↦ φ(F⁻¹(u)) read off a precomputed table.
    ///
    /// The table of the standard Cauchy law yields the closed form instead.
    pub fn stable(table: Arc<StableTable>) -> Result<Self> {
        let p = table.params();
        if p.alpha() == 1.0 && p.b() == 0.0 {
            return Ok(Self::cauchy());
        }
        let tag = ScoreTag::Stable {
            alpha: p.alpha(),
            b: p.b(),
        };
        Self::finish(tag, Kind::Stable(table))
    }

    /// Builds the table for S(α, b; 1, 0) at the default resolution.
    pub fn stable_from_params(alpha: f64, b: f64) -> Result<Self> {
        let p = StableParams::standard(alpha, b)?;
        if p.alpha() == 1.0 && p.b() == 0.0 {
            return Ok(Self::cauchy());
        }
        Self::stable(Arc::new(p.build_table(DEFAULT_RESOLUTION)?))
    }

    /// Tabulated score, interpolated linearly between the knots.
    pub fn custom(u: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if u.len() != j.len() {
            return Err(Error::DimensionMismatch {
                what: "custom score knots",
                expected: u.len(),
                found: j.len(),
            });
        }
        if u.len() < 2 {
            return Err(Error::InvalidScore("need at least two knots"));
        }
        if u.iter().any(|&x| !(x > 0.0 && x < 1.0)) || u.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidScore("knots must increase strictly inside (0, 1)"));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScore("non-finite score value"));
        }
        Self::finish(ScoreTag::Custom, Kind::Custom { u, j })
    }

    fn finish(tag: ScoreTag, kind: Kind) -> Result<Self> {
        let mut s = ScoreFunction {
            tag,
            kind,
            scale: 1.0,
            square_integral: f64::NAN,
        };
        s.check_not_constant()?;
        let sq = unit_integral(|u| s.eval(u).powi(2), &s.breaks(), SQUARE_TOL)?;
        if !sq.is_finite() {
            return Err(Error::InvalidScore("not square integrable"));
        }
        s.square_integral = sq;
        Ok(s)
    }

    fn check_not_constant(&self) -> Result<()> {
        let first = self.eval(0.5 / 64.0);
        let varies = (1..64).any(|k| (self.eval((k as f64 + 0.5) / 64.0) - first).abs() > 1e-12);
        if varies {
            Ok(())
        } else {
            Err(Error::InvalidScore("score is constant"))
        }
    }

    /// The same score multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: k,
            });
        }
        let mut s = self.clone();
        s.scale *= k;
        s.square_integral *= k * k;
        Ok(s)
    }

    pub fn tag(&self) -> ScoreTag {
        self.tag
    }

    /// The table behind a stable score.
    pub fn table(&self) -> Option<&Arc<StableTable>> {
        match &self.kind {
            Kind::Stable(t) => Some(t),
            _ => None,
        }
    }

    /// J(u). Stable scores outside the table coverage are clamped.
    pub fn eval(&self, u: f64) -> f64 {
        self.eval_checked(u).value
    }

    /// J(u) with a flag telling whether u fell outside the table coverage.
    pub fn eval_checked(&self, u: f64) -> Lookup {
        let unclamped = |value: f64| Lookup {
            value,
            clamped: false,
        };
        let l = match &self.kind {
            Kind::VanDerWaerden => unclamped(normal_quantile(u)),
            Kind::Wilcoxon => unclamped(PI / 3f64.sqrt() * (2.0 * u - 1.0)),
            Kind::Laplace => unclamped(if u > 0.5 {
                SQRT_2
            } else if u < 0.5 {
                -SQRT_2
            } else {
                0.0
            }),
            Kind::Cauchy => unclamped((2.0 * PI * (u - 0.5)).sin()),
            Kind::Stable(t) => t.score(u),
            Kind::Custom { u: knots, j } => unclamped(interpolate(knots, j, u)),
        };
        Lookup {
            value: self.scale * l.value,
            clamped: l.clamped,
        }
    }

    /// 𝒥(J) = ∫₀¹ J²(u) du, computed once at construction.
    pub fn square_integral(&self) -> f64 {
        self.square_integral
    }

    // Kinks and jumps of the score, for the quadrature.
    fn breaks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Custom { u, .. } if u.len() <= 4096 => u.clone(),
            _ => Vec::new(),
        }
    }
}

fn interpolate(u: &[f64], j: &[f64], x: f64) -> f64 {
    if x <= u[0] {
        return j[0];
    }
    let last = u.len() - 1;
    if x >= u[last] {
        return j[last];
    }
    let i = u.partition_point(|&v| v <= x) - 1;
    let w = (x - u[i]) / (u[i + 1] - u[i]);
    j[i] + w * (j[i + 1] - j[i])
}

const SQUARE_TOL: f64 = 1e-9;
const CROSS_TOL: f64 = 1e-8;

/// ∫₀¹ f(u) du with a partition refined geometrically towards both ends,
/// where scores such as Φ⁻¹ are unbounded or change fast.
pub fn unit_integral<F: FnMut(f64) -> f64>(mut f: F, extra: &[f64], rel_tol: f64) -> Result<f64> {
    let mut pts: Vec<f64> = Vec::with_capacity(40 + extra.len());
    pts.push(0.0);
    pts.push(0.5);
    pts.push(1.0);
    for k in 1..=14 {
        let e = 10f64.powi(-k);
        pts.push(e);
        pts.push(1.0 - e);
        if k <= 3 {
            pts.push(3.0 * e);
            pts.push(1.0 - 3.0 * e);
        }
    }
    pts.push(0.25);
    pts.push(0.75);
    pts.extend(extra.iter().copied().filter(|u| *u > 0.0 && *u < 1.0));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let q = Quadrature {
        abs_tol: 1e-14,
        rel_tol,
        max_intervals: 4000,
    };
    // Nodes near 1 can round onto the endpoint itself.
    let inner = |u: f64| f(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0));
    match q.integrate_with_breaks(inner, &pts) {
        Ok(est) => Ok(est.value),
        Err(QuadratureError::NotConverged(est)) => Err(Error::NumericFailure {
            what: "score integral",
            x: f64::NAN,
            params: None,
            achieved: est.error / est.value.abs().max(f64::MIN_POSITIVE),
        }),
        Err(QuadratureError::NonFinite { x }) => Err(Error::NumericFailure {
            what: "score integral",
            x,
            params: None,
            achieved: f64::INFINITY,
        }),
    }
}

/// 𝒥(J) = ∫₀¹ J²(u) du.
pub fn j_square(j: &ScoreFunction) -> f64 {
    j.square_integral()
}

/// 𝒥(J, g), with g given through its own score u ↦ φ_g(G⁻¹(u)).
pub fn j_cross(j: &ScoreFunction, g: &ScoreFunction) -> Result<f64> {
    let mut br = j.breaks();
    br.extend(g.breaks());
    unit_integral(|u| j.eval(u) * g.eval(u), &br, CROSS_TOL)
}

/// 𝒥(J, g) evaluated through quantiles and scores of `g` directly. Much
/// slower than [`j_cross`] with a tabulated score; meant for laws without a
/// table.
pub fn j_cross_law<L: Law + ?Sized>(j: &ScoreFunction, g: &L) -> Result<f64> {
    let mut failure = None;
    let v = unit_integral(
        |u| match g.score_at_quantile(u) {
            Ok(s) => j.eval(u) * s,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &j.breaks(),
        1e-6,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Short human-readable name, used for table headers.
pub fn label(j: &ScoreFunction) -> String {
    format!("{}", j.tag())
}
