//! Asymptotic relative efficiencies of R-estimators,
//!
//! ```text
//! ARE_g(J₁/J₂) = 𝒥²(J₁, g) 𝒥(J₂) / (𝒥²(J₂, g) 𝒥(J₁))
//! ```

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scores::{j_cross, label, ScoreFunction};
use crate::stable::StableParams;

/// Relative size below which 𝒥(J₂, g) counts as zero.
const VANISHING: f64 = 1e-10;

/// ARE of the R-estimator with score `j1` against the one with score `j2`
/// when the errors have density g, given through its own score.
pub fn are(j1: &ScoreFunction, j2: &ScoreFunction, g: &ScoreFunction) -> Result<f64> {
    let c1 = j_cross(j1, g)?;
    let c2 = j_cross(j2, g)?;
    are_from_parts(c1, j1.square_integral(), c2, j2.square_integral(), g.square_integral())
}

fn are_from_parts(c1: f64, s1: f64, c2: f64, s2: f64, fisher: f64) -> Result<f64> {
    // |𝒥(J₂, g)| ≤ √(𝒥(J₂) I(g)), so this threshold is scale free.
    if c2.abs() <= VANISHING * (s2 * fisher).sqrt() {
        return Err(Error::UndefinedAre);
    }
    Ok(c1 * c1 * s2 / (c2 * c2 * s1))
}

/// ARE under the standardized stable law S(α, b; 1, 0), building its
/// score table.
pub fn are_stable(j1: &ScoreFunction, j2: &ScoreFunction, g: &StableParams) -> Result<f64> {
    let own = ScoreFunction::stable_from_params(g.alpha(), g.b())?;
    are(j1, j2, &own)
}

/// A score × density grid of AREs against one reference score.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AreTable {
    pub reference: String,
    pub scores: Vec<String>,
    pub densities: Vec<String>,
    /// `values[i][k]`: score i under density k.
    pub values: Vec<Vec<f64>>,
}

/// AREs of every score in `scores` against `reference` under each density,
/// the densities given by their own scores.
pub fn are_table(
    scores: &[ScoreFunction],
    reference: &ScoreFunction,
    densities: &[ScoreFunction],
) -> Result<AreTable> {
    if densities.is_empty() {
        return Err(Error::InvalidParameter {
            name: "densities",
            value: 0.0,
        });
    }
    let mut values = Vec::with_capacity(scores.len());
    // Reference cross-informations are shared by the whole column.
    let refs = densities
        .iter()
        .map(|g| j_cross(reference, g))
        .collect::<Result<Vec<_>>>()?;
    for j in scores {
        let mut row = Vec::with_capacity(densities.len());
        for (g, &c2) in densities.iter().zip(&refs) {
            let c1 = j_cross(j, g)?;
            row.push(are_from_parts(
                c1,
                j.square_integral(),
                c2,
                reference.square_integral(),
                g.square_integral(),
            )?);
        }
        values.push(row);
    }
    Ok(AreTable {
        reference: label(reference),
        scores: scores.iter().map(label).collect(),
        densities: densities.iter().map(label).collect(),
        values,
    })
}

/// Uniform grid from `lo` to `hi` inclusive with spacing close to `step`.
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo <= hi && hi <= 2.0) {
        return Err(Error::InvalidParameter {
            name: "alpha range",
            value: if lo > 0.0 { hi } else { lo },
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
        });
    }
    let n = ((hi - lo) / step).round().max(0.0) as usize;
    if n == 0 {
        return Ok(alloc::vec![lo]);
    }
    Ok((0..=n)
        // Rounded to 12 decimals so 1.8 prints as 1.8.
        .map(|i| if i == n { hi } else { ((lo + (hi - lo) * i as f64 / n as f64) * 1e12).round() / 1e12 })
        .collect())
}

/// (α, ARE_g(J₁/J₂)) for g = S(α, b; 1, 0) along `alphas`.
pub fn are_curve(
    j1: &ScoreFunction,
    j2: &ScoreFunction,
    alphas: &[f64],
    b: f64,
) -> Result<Vec<(f64, f64)>> {
    alphas
        .iter()
        .map(|&a| Ok((a, are_stable(j1, j2, &StableParams::standard(a, b)?)?)))
        .collect()
}

/// ARE of `j` against LAD through 𝒥(J_L, g) = 2√2 g(m) and 𝒥(J_L) = 2, with
/// m the median of g. `g_at_median` must be on the scale of `g`.
pub fn are_vs_lad_by_density(j: &ScoreFunction, g: &ScoreFunction, g_at_median: f64) -> Result<f64> {
    let c = j_cross(j, g)?;
    let lap = 2.0 * core::f64::consts::SQRT_2 * g_at_median;
    are_from_parts(c, j.square_integral(), lap, 2.0, g.square_integral())
}
