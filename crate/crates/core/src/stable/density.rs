//! Standardized (γ = 1, δ = 0) stable-law numerics in the S0 parameterization.
//!
//! For α ≠ 1 every quantity on the right of ζ = −b·tan(πα/2) is an integral
//! over θ ∈ (−θ₀, π/2) of a function of h(θ) = (x − ζ)^{α/(α−1)} V(θ), with
//! θ₀ = arctan(b·tan(πα/2))/α and
//!
//! ```text
//! V(θ) = cos(αθ₀)^{1/(α−1)} (cos θ / sin α(θ₀+θ))^{α/(α−1)} cos(αθ₀ + (α−1)θ) / cos θ.
//! ```
//!
//! With A_k = ∫ h^k e^{−h} dθ:
//!
//! ```text
//! f(x)  = α / (π |α−1| (x−ζ)) · A₁
//! φ(x)  = (α A₂/A₁ − 1) / ((α−1)(x−ζ))
//! F(x)  = c₁ + sign(1−α)/π · A₀,   c₁ = (π/2 − θ₀)/π (α<1) or 1 (α>1)
//! ```
//!
//! For α = 1, b ≠ 0, h(θ) = e^{−πx/(2b)} V(θ) on (−π/2, π/2) with
//! V(θ) = (2/π) (π/2 + bθ)/cos θ · exp((π/2 + bθ) tan θ / b), and
//! f = A₁/(2|b|), φ = π(1 − A₂/A₁)/(2b), and A₀/π is F(x) for b > 0 and
//! 1 − F(x) for b < 0.
//!
//! Points left of ζ (ζ = 0 for α = 1) follow from the reflection
//! f(x; b) = f(−x; −b).
//! h is monotone in θ, so the integrands peak once. The integration variable
//! is the distance from the end of the θ-range nearest the peak, and the
//! range is split where h crosses a few fixed levels before adaptive
//! quadrature.

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::quadrature::{Quadrature, QuadratureError};
use crate::roots::brent;
use crate::special::{normal_cdf, normal_quantile};

/// Half-width of the α-band around 1 handled by the α = 1 branch.
pub const UNIT_ALPHA_BAND: f64 = 1e-3;

/// How a score value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ScoreMethod {
    ClosedForm,
    Integral,
    FiniteDifference,
}

/// Failure inside the standardized engine: the achieved error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Failure {
    pub achieved: f64,
}

impl From<QuadratureError> for Failure {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::NotConverged(est) => Failure {
                achieved: est.error / est.value.abs().max(f64::MIN_POSITIVE),
            },
            QuadratureError::NonFinite { .. } => Failure {
                achieved: f64::INFINITY,
            },
        }
    }
}

type Res<T> = core::result::Result<T, Failure>;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Shape {
    Gaussian,
    Cauchy,
    Unit { b: f64 },
    General { alpha: f64, b: f64 },
}

impl Shape {
    pub fn of(alpha: f64, b: f64) -> Shape {
        if alpha == 2.0 {
            Shape::Gaussian
        } else if (alpha - 1.0).abs() < UNIT_ALPHA_BAND {
            if b == 0.0 {
                Shape::Cauchy
            } else {
                Shape::Unit { b }
            }
        } else {
            Shape::General { alpha, b }
        }
    }

    /// Reflection point ζ (0 for the closed forms and for α = 1).
    pub fn zeta(self) -> f64 {
        match self {
            Shape::General { alpha, b } => -b * (FRAC_PI_2 * alpha).tan(),
            _ => 0.0,
        }
    }

    fn reflected(self) -> Shape {
        match self {
            Shape::Unit { b } => Shape::Unit { b: -b },
            Shape::General { alpha, b } => Shape::General { alpha, b: -b },
            s => s,
        }
    }
}

const INTEGRAL: Quadrature = Quadrature {
    abs_tol: 0.0,
    rel_tol: 1e-12,
    max_intervals: 3000,
};

/// The θ-integral kernel for one abscissa on the right of ζ.
struct Kernel {
    lo: f64,
    hi: f64,
    kind: KernelKind,
}

enum KernelKind {
    General {
        alpha: f64,
        theta0: f64,
        // ln of (x−ζ)^{α/(α−1)} cos(αθ₀)^{1/(α−1)}
        offset: f64,
        power: f64,
        // Variable measured down from θ = π/2 (true) or up from θ = −θ₀.
        upper: bool,
    },
    Unit {
        b: f64,
        offset: f64,
    },
}

#[derive(Clone, Copy)]
enum Moment {
    Survival, // e^{−h}
    Complement, // 1 − e^{−h}
    First,    // h e^{−h}
    Second,   // h² e^{−h}
    Third,    // h³ e^{−h}
}

impl Kernel {
    fn general(alpha: f64, b: f64, t: f64) -> Kernel {
        let theta0 = (b * (FRAC_PI_2 * alpha).tan()).atan() / alpha;
        let power = alpha / (alpha - 1.0);
        let offset = power * t.ln() + (alpha * theta0).cos().ln() / (alpha - 1.0);
        let span = FRAC_PI_2 + theta0;
        let mut k = Kernel {
            lo: 0.0,
            hi: span,
            kind: KernelKind::General {
                alpha,
                theta0,
                offset,
                power,
                upper: true,
            },
        };
        // The variable is the distance from whichever end of the θ-range
        // holds the crossing h = 1, so that the mass stays resolvable when
        // it crowds against that end.
        // h runs from 0 to ∞ across the range for α < 1 and from ∞ to 0
        // for α > 1.
        let mid = k.ln_h(0.5 * span);
        if (mid > 0.0) != (alpha > 1.0) {
            if let KernelKind::General { ref mut upper, .. } = k.kind {
                *upper = false;
            }
        }
        k
    }

    fn unit(b: f64, x: f64) -> Kernel {
        // Integrated over ε = π/2 − θ ∈ (0, π), which keeps cos θ = sin ε
        // accurate where the mass sits for large x.
        Kernel {
            lo: 0.0,
            hi: PI,
            kind: KernelKind::Unit {
                b,
                offset: -PI * x / (2.0 * b) + (2.0 / PI).ln(),
            },
        }
    }

    fn ln_h(&self, theta: f64) -> f64 {
        match self.kind {
            KernelKind::General {
                alpha,
                theta0,
                offset,
                power,
                upper,
            } => {
                let v = theta;
                let (c, s, r) = if upper {
                    let th = FRAC_PI_2 - v;
                    (v.sin(), (alpha * (self.hi - v)).sin(), (alpha * theta0 + (alpha - 1.0) * th).cos())
                } else {
                    let (sv, cv) = v.sin_cos();
                    let c = cv * theta0.cos() + sv * theta0.sin();
                    (c, (alpha * v).sin(), (theta0 + (alpha - 1.0) * v).cos())
                };
                offset + power * (c.ln() - s.ln()) + (r.ln() - c.ln())
            }
            KernelKind::Unit { b, offset } => {
                let eps = theta;
                let a = FRAC_PI_2 + b * (FRAC_PI_2 - eps);
                let (sin, cos) = eps.sin_cos();
                offset + (a / sin).ln() + a * cos / (b * sin)
            }
        }
    }

    fn integrand(&self, theta: f64, m: Moment) -> f64 {
        let lh = self.ln_h(theta);
        if lh.is_nan() {
            // Only happens at the (excluded) endpoints through 0·∞ forms.
            return 0.0;
        }
        if lh > 700.0 {
            return match m {
                Moment::Complement => 1.0,
                _ => 0.0,
            };
        }
        let h = lh.exp();
        match m {
            Moment::Survival => (-h).exp(),
            Moment::Complement => -(-h).exp_m1(),
            Moment::First => (lh - h).exp(),
            Moment::Second => (2.0 * lh - h).exp(),
            Moment::Third => (3.0 * lh - h).exp(),
        }
    }

    // Relative accuracy attainable given the size of the terms that cancel
    // in ln h.
    fn roundoff_floor(&self) -> f64 {
        let offset = match self.kind {
            KernelKind::General { offset, .. } | KernelKind::Unit { offset, .. } => offset,
        };
        64.0 * f64::EPSILON * offset.abs()
    }

    /// θ-values where ln h crosses a handful of levels around the peak.
    fn breakpoints(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        // The variable is exact near `lo`, where the peak may crowd.
        let a = self.lo + 1e-300;
        let b = self.hi - 1e-15 * span.max(1.0);
        let mut pts = Vec::with_capacity(12);
        pts.push(self.lo);
        // Clamped so that Brent never sees infinities at the endpoints.
        let ln_h = |th: f64| self.ln_h(th).clamp(-800.0, 800.0);
        let la = ln_h(a);
        let lb = ln_h(b);
        for level in [-6.0, -3.0, -1.5, 0.0, 1.2, 2.3, 3.0, 3.7, 4.2] {
            let (fa, fb) = (la - level, lb - level);
            if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
                continue;
            }
            if let Some(r) = brent(|th| ln_h(th) - level, a, b, fa, fb, 0.0, 300) {
                pts.push(r);
            }
        }
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // Geometric ladders outward from the peak, so that the algebraic
        // decay on either side is resolved panel by panel.
        if pts.len() > 1 {
            let (first, last) = (pts[1], pts[pts.len() - 1]);
            let w0 = if last > first {
                last - first
            } else {
                (0.5 * (first - self.lo)).max(1e-300)
            };
            let mut w = w0;
            let mut x = last + w;
            while x < self.hi {
                pts.push(x);
                w *= 2.0;
                x += w;
            }
            w = w0;
            x = first - w;
            while x > self.lo {
                pts.push(x);
                w *= 2.0;
                x -= w;
            }
        }
        pts.push(self.hi);
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts
    }

    fn integrate(&self, pts: &[f64], m: Moment) -> Res<f64> {
        let floor = self.roundoff_floor();
        let q = Quadrature {
            rel_tol: INTEGRAL.rel_tol.max(floor),
            ..INTEGRAL
        };
        match q.integrate_with_breaks(|th| self.integrand(th, m), pts) {
            Ok(est) => Ok(est.value),
            // Far in the tails roundoff in ln h can stall the estimate short
            // of the target; accept anything within that floor.
            Err(QuadratureError::NotConverged(est))
                if est.error <= floor.max(1e-9) * est.value.abs() =>
            {
                Ok(est.value)
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Right-of-ζ evaluation helper: returns the kernel or `None` when the
/// integration range is empty (totally skewed laws with α < 1).
fn right_kernel(shape: Shape, x: f64) -> Option<(Kernel, f64)> {
    match shape {
        Shape::General { alpha, b } => {
            let t = x - shape.zeta();
            let k = Kernel::general(alpha, b, t);
            if k.hi <= k.lo {
                None
            } else {
                Some((k, t))
            }
        }
        Shape::Unit { b } => Some((Kernel::unit(b, x), 0.0)),
        _ => unreachable!("closed forms have no kernel"),
    }
}

fn near_zeta(shape: Shape, x: f64) -> bool {
    match shape {
        Shape::General { .. } => {
            let z = shape.zeta();
            (x - z).abs() <= 1e-12 * (1.0 + z.abs())
        }
        _ => false,
    }
}

/// Whether x lies on the reflected side (left of ζ).
fn needs_reflection(shape: Shape, x: f64) -> bool {
    match shape {
        Shape::Unit { .. } | Shape::General { .. } => x < shape.zeta(),
        _ => false,
    }
}

fn density_at_zeta(alpha: f64, b: f64) -> f64 {
    let zeta = -b * (FRAC_PI_2 * alpha).tan();
    let theta0 = (b * (FRAC_PI_2 * alpha).tan()).atan() / alpha;
    libm::tgamma(1.0 + 1.0 / alpha) * theta0.cos()
        / (PI * (1.0 + zeta * zeta).powf(0.5 / alpha))
}

pub(crate) fn pdf(shape: Shape, x: f64) -> Res<f64> {
    match shape {
        Shape::Gaussian => Ok((-0.25 * x * x).exp() / (2.0 * PI.sqrt())),
        Shape::Cauchy => Ok(1.0 / (PI * (1.0 + x * x))),
        Shape::General { alpha, b } if near_zeta(shape, x) => Ok(density_at_zeta(alpha, b)),
        _ if needs_reflection(shape, x) => pdf(shape.reflected(), -x),
        Shape::General { alpha, .. } => match right_kernel(shape, x) {
            None => Ok(0.0),
            Some((k, t)) => {
                let a1 = k.integrate(&k.breakpoints(), Moment::First)?;
                Ok(alpha / (PI * (alpha - 1.0).abs() * t) * a1)
            }
        },
        Shape::Unit { b } => {
            let (k, _) = right_kernel(shape, x).unwrap();
            let a1 = k.integrate(&k.breakpoints(), Moment::First)?;
            Ok(a1 / (2.0 * b.abs()))
        }
    }
}

/// (F(x), 1 − F(x)), each computed without cancellation.
pub(crate) fn tails(shape: Shape, x: f64) -> Res<(f64, f64)> {
    match shape {
        Shape::Gaussian => Ok((normal_cdf(x / 2f64.sqrt()), normal_cdf(-x / 2f64.sqrt()))),
        Shape::Cauchy => Ok((1.0f64.atan2(-x) / PI, 1.0f64.atan2(x) / PI)),
        Shape::General { alpha, b } if near_zeta(shape, x) => {
            let theta0 = (b * (FRAC_PI_2 * alpha).tan()).atan() / alpha;
            Ok(((FRAC_PI_2 - theta0) / PI, (FRAC_PI_2 + theta0) / PI))
        }
        _ if needs_reflection(shape, x) => {
            let (lower, upper) = tails(shape.reflected(), -x)?;
            Ok((upper, lower))
        }
        Shape::General { alpha, .. } => {
            let Some((k, _)) = right_kernel(shape, x) else {
                return Ok((1.0, 0.0));
            };
            let pts = k.breakpoints();
            if alpha > 1.0 {
                let upper = k.integrate(&pts, Moment::Survival)? / PI;
                Ok((1.0 - upper, upper))
            } else {
                let theta0 = k.hi - FRAC_PI_2;
                let lower = (FRAC_PI_2 - theta0) / PI + k.integrate(&pts, Moment::Survival)? / PI;
                let upper = k.integrate(&pts, Moment::Complement)? / PI;
                Ok((lower, upper))
            }
        }
        Shape::Unit { b } => {
            let (k, _) = right_kernel(shape, x).unwrap();
            let pts = k.breakpoints();
            let survival = k.integrate(&pts, Moment::Survival)? / PI;
            let complement = k.integrate(&pts, Moment::Complement)? / PI;
            // The same θ-integral is the lower tail for b > 0 and the upper
            // tail for b < 0.
            if b > 0.0 {
                Ok((survival, complement))
            } else {
                Ok((complement, survival))
            }
        }
    }
}

/// Width of the band around ζ where the score falls back to differences.
fn fd_band(zeta: f64) -> f64 {
    1e-4 * (1.0 + zeta.abs())
}

/// Density and score together; the score reuses the first moment.
pub(crate) fn pdf_and_score(shape: Shape, x: f64) -> Res<(f64, f64, ScoreMethod)> {
    match shape {
        Shape::Gaussian => Ok((pdf(shape, x)?, 0.5 * x, ScoreMethod::ClosedForm)),
        Shape::Cauchy => Ok((pdf(shape, x)?, 2.0 * x / (1.0 + x * x), ScoreMethod::ClosedForm)),
        Shape::General { .. } if (x - shape.zeta()).abs() < fd_band(shape.zeta()) => {
            Ok((pdf(shape, x)?, fd_score(shape, x)?, ScoreMethod::FiniteDifference))
        }
        _ if needs_reflection(shape, x) => {
            let (f, s, m) = pdf_and_score(shape.reflected(), -x)?;
            Ok((f, -s, m))
        }
        Shape::General { alpha, .. } => match right_kernel(shape, x) {
            None => Ok((0.0, 0.0, ScoreMethod::Integral)),
            Some((k, t)) => {
                let pts = k.breakpoints();
                let a1 = k.integrate(&pts, Moment::First)?;
                let a2 = k.integrate(&pts, Moment::Second)?;
                let f = alpha / (PI * (alpha - 1.0).abs() * t) * a1;
                if a1 <= 0.0 {
                    return Ok((f, fd_score(shape, x)?, ScoreMethod::FiniteDifference));
                }
                let phi = (alpha * a2 / a1 - 1.0) / ((alpha - 1.0) * t);
                Ok((f, phi, ScoreMethod::Integral))
            }
        },
        Shape::Unit { b } => {
            let (k, _) = right_kernel(shape, x).unwrap();
            let pts = k.breakpoints();
            let a1 = k.integrate(&pts, Moment::First)?;
            let a2 = k.integrate(&pts, Moment::Second)?;
            let f = a1 / (2.0 * b.abs());
            if a1 <= 0.0 {
                return Ok((f, fd_score(shape, x)?, ScoreMethod::FiniteDifference));
            }
            Ok((f, PI / (2.0 * b) * (1.0 - a2 / a1), ScoreMethod::Integral))
        }
    }
}

/// Density, score and score derivative φ'(x).
///
/// With R₂ = A₂/A₁ and R₃ = A₃/A₁, differentiating under the integral gives
/// φ' = p²(R₂ − R₃ + R₂²)/t² − φ/t for α ≠ 1 (p = α/(α−1), t = x − ζ) and
/// φ' = q²(R₂ − R₃ + R₂²) for α = 1 (q = −π/(2b)).
pub(crate) fn pdf_score_slope(shape: Shape, x: f64) -> Res<(f64, f64, f64)> {
    match shape {
        Shape::Gaussian => Ok((pdf(shape, x)?, 0.5 * x, 0.5)),
        Shape::Cauchy => {
            let d = 1.0 + x * x;
            Ok((pdf(shape, x)?, 2.0 * x / d, 2.0 * (1.0 - x * x) / (d * d)))
        }
        Shape::General { .. } if (x - shape.zeta()).abs() < fd_band(shape.zeta()) => {
            let (f, s) = (pdf(shape, x)?, fd_score(shape, x)?);
            Ok((f, s, fd_score_slope(shape, x, s)?))
        }
        _ if needs_reflection(shape, x) => {
            let (f, s, d) = pdf_score_slope(shape.reflected(), -x)?;
            Ok((f, -s, d))
        }
        _ => {
            let Some((k, t)) = right_kernel(shape, x) else {
                return Ok((0.0, 0.0, 0.0));
            };
            let pts = k.breakpoints();
            let a1 = k.integrate(&pts, Moment::First)?;
            if a1 <= 0.0 {
                let s = fd_score(shape, x)?;
                return Ok((pdf(shape, x)?, s, fd_score_slope(shape, x, s)?));
            }
            let r2 = k.integrate(&pts, Moment::Second)? / a1;
            let r3 = k.integrate(&pts, Moment::Third)? / a1;
            let curv = r2 - r3 + r2 * r2;
            Ok(match shape {
                Shape::General { alpha, .. } => {
                    let p = alpha / (alpha - 1.0);
                    let f = alpha / (PI * (alpha - 1.0).abs() * t) * a1;
                    let phi = (alpha * r2 - 1.0) / ((alpha - 1.0) * t);
                    (f, phi, p * p * curv / (t * t) - phi / t)
                }
                Shape::Unit { b } => {
                    let q = -PI / (2.0 * b);
                    (a1 / (2.0 * b.abs()), -q * (1.0 - r2), q * q * curv)
                }
                _ => unreachable!(),
            })
        }
    }
}

// φ' = φ² − f''/f with a five-point second difference.
fn fd_score_slope(shape: Shape, x: f64, phi: f64) -> Res<f64> {
    let h = (1e-4 * (1.0 + x.abs())).max(1e-5);
    let f0 = pdf(shape, x)?;
    if f0 <= 0.0 {
        return Ok(0.0);
    }
    let f2 = (-pdf(shape, x + 2.0 * h)? + 16.0 * pdf(shape, x + h)? - 30.0 * f0
        + 16.0 * pdf(shape, x - h)?
        - pdf(shape, x - 2.0 * h)?)
        / (12.0 * h * h);
    Ok(phi * phi - f2 / f0)
}

/// Five-point central difference of the density, step max(1e-5, 1e-4(1+|x|)).
fn fd_score(shape: Shape, x: f64) -> Res<f64> {
    let h = (1e-4 * (1.0 + x.abs())).max(1e-5);
    let f = pdf(shape, x)?;
    if f <= 0.0 {
        return Ok(0.0);
    }
    let fp = (pdf(shape, x - 2.0 * h)? - 8.0 * pdf(shape, x - h)? + 8.0 * pdf(shape, x + h)?
        - pdf(shape, x + 2.0 * h)?)
        / (12.0 * h);
    Ok(-fp / f)
}

/// Lower/upper tail probabilities below which the power-law asymptote is used.
pub const TAIL_CUTOFF: f64 = 1e-6;

/// Power-law tail asymptote of the quantile: P(±(X − ζ) > r) ≈ c_α (1 ± b) r^{−α}.
fn tail_asymptote(alpha: f64, b: f64, p: f64, upper: bool) -> Option<f64> {
    let weight = if upper { 1.0 + b } else { 1.0 - b };
    if weight <= 0.0 || alpha >= 2.0 {
        return None;
    }
    let c = libm::tgamma(alpha) * (FRAC_PI_2 * alpha).sin() / PI;
    let r = (c * weight / p).powf(1.0 / alpha);
    let zeta = Shape::of(alpha, b).zeta();
    Some(if upper { zeta + r } else { zeta - r })
}

pub(crate) fn quantile(alpha: f64, b: f64, u: f64, hint: Option<f64>) -> Res<f64> {
    let shape = Shape::of(alpha, b);
    match shape {
        Shape::Gaussian => return Ok(2f64.sqrt() * normal_quantile(u)),
        Shape::Cauchy => return Ok((PI * (u - 0.5)).tan()),
        _ => {}
    }
    let lower_side = u <= 0.5;
    let p = if lower_side { u } else { 1.0 - u };
    if p < TAIL_CUTOFF {
        if let Some(x) = tail_asymptote(alpha, b, p, !lower_side) {
            return Ok(x);
        }
    }
    // g is increasing in x in both branches.
    let g = |x: f64| -> Res<f64> {
        let (lo, up) = tails(shape, x)?;
        Ok(if lower_side {
            (lo.max(1e-300) / p).ln()
        } else {
            (p / up.max(1e-300)).ln()
        })
    };
    let start = hint
        .or_else(|| tail_asymptote(alpha, b, p.max(1e-3), !lower_side).filter(|_| p < 0.05))
        .unwrap_or(0.0);
    let mut a = start;
    let mut fa = g(a)?;
    let mut step = 0.05 * (1.0 + start.abs());
    let mut bb = a;
    let mut fb = fa;
    let mut expansions = 0;
    while fa.signum() == fb.signum() && fa != 0.0 {
        if fa > 0.0 {
            bb = a;
            fb = fa;
            a -= step;
            fa = g(a)?;
        } else {
            a = bb;
            fa = fb;
            bb += step;
            fb = g(bb)?;
        }
        step *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Failure {
                achieved: f64::INFINITY,
            });
        }
    }
    if fa == 0.0 {
        return Ok(a);
    }
    let mut failure = None;
    let root = brent(
        |x| match g(x) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        a,
        bb,
        fa,
        fb,
        1e-13 * (1.0 + a.abs().max(bb.abs())),
        200,
    );
    match (root, failure) {
        (Some(r), _) => Ok(r),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Failure {
            achieved: (fb - fa).abs(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levy_pdf(x: f64) -> f64 {
        // S0(1/2, 1) is the unit Lévy law shifted by ζ = −1.
        let y = x + 1.0;
        if y <= 0.0 {
            0.0
        } else {
            (1.0 / (2.0 * PI)).sqrt() * y.powf(-1.5) * (-0.5 / y).exp()
        }
    }

    #[test]
    fn general_branch_matches_levy() {
        let shape = Shape::of(0.5, 1.0);
        for &x in &[-0.9, -0.5, 0.0, 0.3, 1.0, 4.0, 30.0, 1e3] {
            let f = pdf(shape, x).unwrap();
            let exact = levy_pdf(x);
            assert!((f - exact).abs() <= 1e-9 * exact, "x={x}: {f} vs {exact}");
        }
    }

    #[test]
    fn score_matches_differences_away_from_zeta() {
        for &(alpha, b) in &[(1.8, 0.0), (1.8, 0.5), (1.2, 0.5), (0.5, 0.5), (1.0, 0.5)] {
            let shape = Shape::of(alpha, b);
            for &x in &[-3.0, -0.7, 0.4, 2.5, 10.0] {
                let (_, s, m) = pdf_and_score(shape, x).unwrap();
                let fd = fd_score(shape, x).unwrap();
                assert_eq!(m, ScoreMethod::Integral);
                assert!((s - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{alpha},{b},{x}: {s} vs {fd}");
            }
        }
    }

    #[test]
    fn score_slope_matches_differences_of_score() {
        for &(alpha, b) in &[(1.8, 0.0), (1.8, 0.5), (1.2, 0.5), (0.5, 0.0), (0.5, 0.5), (1.0, -0.5)] {
            let shape = Shape::of(alpha, b);
            let z = shape.zeta();
            for &x in &[-3.0, -0.7, z - 0.01, z + 0.003, 0.4, 2.5, 10.0] {
                let (f, s, d) = pdf_score_slope(shape, x).unwrap();
                if f == 0.0 {
                    continue;
                }
                let (f2, s2, _) = pdf_and_score(shape, x).unwrap();
                assert!((f - f2).abs() <= 1e-13 * f && (s - s2).abs() <= 1e-10 * (1.0 + s.abs()));
                let h = 1e-4 * (1.0 + x.abs());
                let sc = |y: f64| pdf_and_score(shape, y).unwrap().1;
                let fd = (sc(x - 2.0 * h) - 8.0 * sc(x - h) + 8.0 * sc(x + h) - sc(x + 2.0 * h))
                    / (12.0 * h);
                assert!((d - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{alpha},{b},{x}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn density_continuous_at_zeta() {
        for &(alpha, b) in &[(1.5, 0.7), (0.7, 0.3)] {
            let shape = Shape::of(alpha, b);
            let z = shape.zeta();
            let at = pdf(shape, z).unwrap();
            let right = pdf(shape, z + 1e-7).unwrap();
            let left = pdf(shape, z - 1e-7).unwrap();
            assert!((at - right).abs() < 1e-6 * at);
            assert!((at - left).abs() < 1e-6 * at);
        }
    }

    #[test]
    fn tails_are_complementary() {
        for &(alpha, b) in &[(1.8, 0.5), (0.5, 0.5), (1.0, -0.3), (1.3, 0.0)] {
            let shape = Shape::of(alpha, b);
            for &x in &[-5.0, -1.0, 0.0, 0.5, 3.0] {
                let (lo, up) = tails(shape, x).unwrap();
                assert!((lo + up - 1.0).abs() < 1e-11, "{alpha},{b},{x}");
            }
        }
    }

    #[test]
    fn totally_skewed_support_edge() {
        let shape = Shape::of(0.6, -1.0);
        let z = shape.zeta();
        assert_eq!(pdf(shape, z + 0.5).unwrap(), 0.0);
        assert_eq!(tails(shape, z + 0.5).unwrap(), (1.0, 0.0));
    }
}
