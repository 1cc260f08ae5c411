// Chambers–Mallows–Stuck, in Weron's form, shifted into the S0 convention.

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::{FRAC_PI_2, PI};
use rand::Rng;

use super::density::UNIT_ALPHA_BAND;

/// One standardized S0(α, b) draw.
pub(super) fn standard<R: Rng + ?Sized>(alpha: f64, b: f64, rng: &mut R) -> f64 {
    // V uniform on (−π/2, π/2), W standard exponential.
    let v = PI * (open01(rng) - 0.5);
    let w = -open01(rng).ln();
    if alpha == 2.0 {
        // The general formula at α = 2, without the tan(π) round-off.
        return 2.0 * v.sin() * w.sqrt();
    }
    if (alpha - 1.0).abs() < UNIT_ALPHA_BAND {
        if b == 0.0 {
            return v.tan();
        }
        let a = FRAC_PI_2 + b * v;
        return (a * v.tan() - b * ((FRAC_PI_2 * w * v.cos()) / a).ln()) / FRAC_PI_2;
    }
    let tan = (FRAC_PI_2 * alpha).tan();
    let shift = (b * tan).atan() / alpha;
    let scale = (1.0 + b * b * tan * tan).powf(0.5 / alpha);
    let s1 = scale * (alpha * (v + shift)).sin() / v.cos().powf(1.0 / alpha)
        * ((v - alpha * (v + shift)).cos() / w).powf((1.0 - alpha) / alpha);
    // S1 → S0: X₀ = X₁ − b tan(πα/2).
    s1 - b * tan
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}
