//! α-stable laws: density, distribution function, quantile, location score,
//! Fisher information and sampling.
//!
//! Parameters are θ = (α, b, γ, δ) with the location-scale semantics
//! `f_{α,b,γ,δ}(x) = f_{α,b}((x − δ)/γ) / γ`. The standardized law f_{α,b}
//! is Nolan's S0 parameterization, i.e. the law with characteristic function
//!
//! ```text
//! E exp(itX) = exp(−|t|^α [1 + i b sign(t) tan(πα/2) (|t|^{1−α} − 1)])   (α ≠ 1)
//! E exp(itX) = exp(−|t| [1 + i b sign(t) (2/π) ln|t|])                   (α = 1)
//! ```
//!
//! which is continuous in α. With this choice α = 2 is Normal(0, 2), α = 1,
//! b = 0 is the standard Cauchy law and (α, b) = (1/2, 1) is the unit Lévy
//! law shifted by −1.

mod density;
mod sampler;
mod table;

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::fmt;
use rand::Rng;

pub use density::{ScoreMethod, TAIL_CUTOFF, UNIT_ALPHA_BAND};
pub use table::{Lookup, StableTable, TableRow, DEFAULT_RESOLUTION, DEFAULT_U_MIN};

use crate::error::{Error, Result};
use crate::quadrature::{line_breakpoints, Quadrature, QuadratureError};
use density::Shape;

/// Parameters (α, b, γ, δ) of a stable law.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StableParams {
    alpha: f64,
    b: f64,
    gamma: f64,
    delta: f64,
}

/// A score value together with how it was computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreValue {
    pub value: f64,
    pub method: ScoreMethod,
}

impl fmt::Display for StableParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "S(alpha={}, b={}, gamma={}, delta={})",
            self.alpha, self.b, self.gamma, self.delta
        )
    }
}

impl StableParams {
    pub fn new(alpha: f64, b: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
            });
        }
        if !(-1.0..=1.0).contains(&b) {
            return Err(Error::InvalidParameter { name: "b", value: b });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
            });
        }
        Ok(StableParams {
            alpha,
            b,
            gamma,
            delta,
        })
    }

    /// The standardized law (γ = 1, δ = 0).
    pub fn standard(alpha: f64, b: f64) -> Result<Self> {
        Self::new(alpha, b, 1.0, 0.0)
    }

    /// Normal(0, 2).
    pub fn gaussian() -> Self {
        StableParams {
            alpha: 2.0,
            b: 0.0,
            gamma: 1.0,
            delta: 0.0,
        }
    }

    /// Standard Cauchy.
    pub fn cauchy() -> Self {
        StableParams {
            alpha: 1.0,
            b: 0.0,
            gamma: 1.0,
            delta: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn standardized(&self) -> Self {
        StableParams {
            gamma: 1.0,
            delta: 0.0,
            ..*self
        }
    }

    pub fn is_standard(&self) -> bool {
        self.gamma == 1.0 && self.delta == 0.0
    }

    /// Symmetric laws (b = 0, or α = 2 where b plays no role).
    pub fn is_symmetric(&self) -> bool {
        self.b == 0.0 || self.alpha == 2.0
    }

    fn shape(&self) -> Shape {
        Shape::of(self.alpha, self.b)
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.delta) / self.gamma
    }

    fn fail(&self, what: &'static str, x: f64, achieved: f64) -> Error {
        Error::NumericFailure {
            what,
            x,
            params: Some(*self),
            achieved,
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        let f = density::pdf(self.shape(), self.z(x))
            .map_err(|e| self.fail("stable density", x, e.achieved))?;
        Ok(f.max(1e-300) / self.gamma)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.tails(x)?.0)
    }

    /// Survival function 1 − F(x), accurate in the upper tail.
    pub fn sf(&self, x: f64) -> Result<f64> {
        Ok(self.tails(x)?.1)
    }

    fn tails(&self, x: f64) -> Result<(f64, f64)> {
        if x == f64::INFINITY {
            return Ok((1.0, 0.0));
        }
        if x == f64::NEG_INFINITY {
            return Ok((0.0, 1.0));
        }
        let (lo, up) = density::tails(self.shape(), self.z(x))
            .map_err(|e| self.fail("stable distribution function", x, e.achieved))?;
        Ok((lo.clamp(0.0, 1.0), up.clamp(0.0, 1.0)))
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.quantile_near(u, None)
    }

    /// Quantile with a starting guess (in the same units as the result).
    pub fn quantile_near(&self, u: f64, hint: Option<f64>) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter {
                name: "u",
                value: u,
            });
        }
        let hint = hint.map(|h| self.z(h)).filter(|h| h.is_finite());
        let z = density::quantile(self.alpha, self.b, u, hint)
            .map_err(|e| self.fail("stable quantile", u, e.achieved))?;
        Ok(self.delta + self.gamma * z)
    }

    /// Location score φ(x) = −f'(x)/f(x).
    pub fn score(&self, x: f64) -> Result<f64> {
        Ok(self.score_with_method(x)?.value)
    }

    pub fn score_with_method(&self, x: f64) -> Result<ScoreValue> {
        let (_, s, method) = density::pdf_and_score(self.shape(), self.z(x))
            .map_err(|e| self.fail("stable score", x, e.achieved))?;
        Ok(ScoreValue {
            value: s / self.gamma,
            method,
        })
    }

    /// Density and score at x, sharing one integral.
    pub fn pdf_and_score(&self, x: f64) -> Result<(f64, f64)> {
        let (f, s, _) = density::pdf_and_score(self.shape(), self.z(x))
            .map_err(|e| self.fail("stable score", x, e.achieved))?;
        Ok((f.max(1e-300) / self.gamma, s / self.gamma))
    }

    /// Density, score and score derivative φ'(x) at x.
    pub fn pdf_score_slope(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (f, s, d) = density::pdf_score_slope(self.shape(), self.z(x))
            .map_err(|e| self.fail("stable score derivative", x, e.achieved))?;
        let g = self.gamma;
        Ok((f.max(1e-300) / g, s / g, d / (g * g)))
    }

    /// ℐ(θ) = ∫ φ² f dx, by adaptive quadrature on the real line.
    pub fn fisher_information(&self) -> Result<f64> {
        let shape = self.shape();
        let q = Quadrature {
            abs_tol: 0.0,
            rel_tol: 1e-9,
            max_intervals: 4000,
        };
        let mut failure = None;
        let integrand = |z: f64| match density::pdf_and_score(shape, z) {
            Ok((f, s, _)) => s * s * f,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let mut pts = line_breakpoints(0.0, 1.0, if self.alpha == 2.0 { 60.0 } else { 1e16 });
        insert_sorted(&mut pts, shape.zeta());
        let est = q
            .integrate_with_breaks(integrand, &pts)
            .map_err(|e| quad_fail(self, e))?;
        if let Some(e) = failure {
            return Err(self.fail("Fisher information integrand", f64::NAN, e.achieved));
        }
        Ok(est.value / (self.gamma * self.gamma))
    }

    pub fn median(&self) -> Result<f64> {
        if self.is_symmetric() {
            return Ok(self.delta);
        }
        self.quantile(0.5)
    }

    /// One draw by the Chambers–Mallows–Stuck transformation.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.delta + self.gamma * sampler::standard(self.alpha, self.b, rng)
    }

    /// `n` i.i.d. draws, deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_one(&mut rng)).collect()
    }

    /// Tabulates the standardized law; see [`StableTable`].
    pub fn build_table(&self, resolution: usize) -> Result<StableTable> {
        StableTable::build(*self, resolution)
    }
}

fn insert_sorted(pts: &mut Vec<f64>, x: f64) {
    let pos = pts.partition_point(|&p| p < x);
    if pts.get(pos) != Some(&x) {
        pts.insert(pos, x);
    }
}

fn quad_fail(p: &StableParams, e: QuadratureError) -> Error {
    let achieved = match e {
        QuadratureError::NotConverged(est) => est.error,
        QuadratureError::NonFinite { .. } => f64::INFINITY,
    };
    p.fail("Fisher information", f64::NAN, achieved)
}

/// A univariate error law that can be evaluated through its quantile function.
///
/// This is the "density handle" consumed by rank statistics and cross-
/// information integrals.
pub trait Law: Sync {
    fn pdf(&self, x: f64) -> Result<f64>;
    fn cdf(&self, x: f64) -> Result<f64>;
    fn quantile(&self, u: f64) -> Result<f64>;
    fn score(&self, x: f64) -> Result<f64>;

    /// φ(G⁻¹(u)).
    fn score_at_quantile(&self, u: f64) -> Result<f64> {
        self.score(self.quantile(u)?)
    }

    fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }
}

impl Law for StableParams {
    fn pdf(&self, x: f64) -> Result<f64> {
        StableParams::pdf(self, x)
    }
    fn cdf(&self, x: f64) -> Result<f64> {
        StableParams::cdf(self, x)
    }
    fn quantile(&self, u: f64) -> Result<f64> {
        StableParams::quantile(self, u)
    }
    fn score(&self, x: f64) -> Result<f64> {
        StableParams::score(self, x)
    }
    fn median(&self) -> Result<f64> {
        StableParams::median(self)
    }
}

/// Table-backed law: fast, accurate to the table tolerance inside the grid
/// and exact outside it.
impl Law for StableTable {
    fn pdf(&self, x: f64) -> Result<f64> {
        let u = self.cdf(x)?;
        let l = self.density(u);
        if l.clamped {
            self.params().pdf(x)
        } else {
            Ok(l.value)
        }
    }

    fn cdf(&self, x: f64) -> Result<f64> {
        StableTable::cdf(self, x)
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        let l = StableTable::quantile(self, u);
        if l.clamped {
            self.params().quantile(u)
        } else {
            Ok(l.value)
        }
    }

    fn score(&self, x: f64) -> Result<f64> {
        let u = self.cdf(x)?;
        let l = StableTable::score(self, u);
        if l.clamped {
            self.params().score(x)
        } else {
            Ok(l.value)
        }
    }

    fn score_at_quantile(&self, u: f64) -> Result<f64> {
        let l = StableTable::score(self, u);
        if l.clamped {
            self.params().score(self.params().quantile(u)?)
        } else {
            Ok(l.value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(StableParams::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(StableParams::new(2.1, 0.0, 1.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 1.2, 1.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 0.0, 0.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn pdf_examples() {
        let g = StableParams::gaussian();
        assert!(close(g.pdf(0.0).unwrap(), 1.0 / (2.0 * PI.sqrt()), 1e-14));
        let c = StableParams::cauchy();
        assert!(close(c.pdf(0.0).unwrap(), 1.0 / PI, 1e-14));
        let cs = StableParams::new(1.0, 0.0, 2.0, 3.0).unwrap();
        assert!(close(cs.pdf(3.0).unwrap(), 1.0 / (2.0 * PI), 1e-14));
    }

    #[test]
    fn cdf_examples() {
        assert!(close(StableParams::cauchy().cdf(1.0).unwrap(), 0.75, 1e-14));
        assert!(close(StableParams::gaussian().cdf(0.0).unwrap(), 0.5, 1e-14));
        // S0(1/2, 1) = Lévy(0, 1) − 1: F(x) = erfc(sqrt(1 / (2 (x + 1)))).
        let levy = StableParams::standard(0.5, 1.0).unwrap();
        let exact = libm::erfc((1.0 / (2.0 * 1.1f64)).sqrt());
        assert!(close(levy.cdf(0.1).unwrap(), exact, 1e-9));
    }

    #[test]
    fn quantile_examples() {
        assert!(close(StableParams::cauchy().quantile(0.75).unwrap(), 1.0, 1e-14));
        let g = StableParams::gaussian();
        assert!(close(g.quantile(0.975).unwrap(), 2f64.sqrt() * 1.959_963_984_540_054, 1e-12));
        let sym = StableParams::new(1.5, 0.0, 2.0, -0.7).unwrap();
        assert!((sym.quantile(0.5).unwrap() + 0.7).abs() < 1e-9);
    }

    #[test]
    fn score_examples() {
        assert!(close(StableParams::cauchy().score(1.0).unwrap(), 1.0, 1e-14));
        assert!(close(StableParams::gaussian().score(2.0).unwrap(), 1.0, 1e-14));
        let sym = StableParams::new(1.3, 0.0, 1.5, 0.4).unwrap();
        assert!(sym.score(0.4).unwrap().abs() < 1e-8);
    }

    #[test]
    fn fisher_information_examples() {
        let c = StableParams::cauchy().fisher_information().unwrap();
        assert!(close(c, 0.5, 1e-6), "{c}");
        let g = StableParams::gaussian().fisher_information().unwrap();
        assert!(close(g, 0.5, 1e-6), "{g}");
        let g2 = StableParams::new(2.0, 0.0, 2.0, 0.0).unwrap().fisher_information().unwrap();
        assert!(close(g2, 0.125, 1e-6));
    }

    #[test]
    fn sampler_is_deterministic() {
        let p = StableParams::standard(1.4, 0.3).unwrap();
        assert_eq!(p.sample(50, 9), p.sample(50, 9));
        assert_ne!(p.sample(50, 9), p.sample(50, 10));
    }

    #[test]
    fn gaussian_sample_variance() {
        let xs = StableParams::gaussian().sample(100_000, 1);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((var - 2.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn cauchy_sample_median() {
        let mut xs = StableParams::cauchy().sample(10_000, 2);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = 0.5 * (xs[4999] + xs[5000]);
        assert!(med.abs() < 0.05, "{med}");
    }
}
