//! Residual ranks and the statistics built on them:
//!
//! ```text
//! Δ̰_J(β) = n^{−1/2} 𝕂ᵀ Σ J(R_i/(n+1)) c_i     rank-based
//! Δ_J(β) = n^{−1/2} 𝕂ᵀ Σ J(G(Z_i)) c_i        exact scores
//! Δ_θ(β) = n^{−1/2} 𝕂ᵀ Σ φ_θ(Z_i) c_i         central sequence
//! ```

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linear_model::{residuals, DesignSummary, RegressionProblem};
use crate::scores::{ScoreFunction, ScoreTag};
use crate::stable::Law;

/// How equal residuals are ordered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TiePolicy {
    /// Equal values ranked in order of their index, so ranks always form a
    /// permutation.
    #[default]
    ByIndex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankVector {
    /// R_i ∈ {1, …, n}.
    pub ranks: Vec<usize>,
    pub tie_policy: TiePolicy,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

/// Ranks of `z`, ties broken by index.
pub fn rank_residuals(z: &[f64]) -> Result<RankVector> {
    if let Some(i) = z.iter().position(|v| v.is_nan()) {
        return Err(Error::NotANumber { index: i });
    }
    let mut order: Vec<usize> = (0..z.len()).collect();
    // Stable sort keeps equal values in index order.
    order.sort_by(|&a, &b| z[a].partial_cmp(&z[b]).unwrap());
    let mut ranks = vec![0; z.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    Ok(RankVector {
        ranks,
        tie_policy: TiePolicy::ByIndex,
    })
}

/// Ranks of `z` where values closer than `tol_i + tol_l` count as tied, ties
/// broken by index. Residuals fitted exactly by the same vertex differ only
/// by rounding, and this keeps their order reproducible.
pub fn rank_residuals_within(z: &[f64], tol: &[f64]) -> Result<RankVector> {
    if tol.len() != z.len() {
        return Err(Error::DimensionMismatch {
            what: "tolerances",
            expected: z.len(),
            found: tol.len(),
        });
    }
    let mut exact = rank_residuals(z)?;
    let mut order = vec![0; z.len()];
    for (i, &r) in exact.ranks.iter().enumerate() {
        order[r - 1] = i;
    }
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() {
            let (a, b) = (order[end - 1], order[end]);
            if z[b] - z[a] > tol[a] + tol[b] {
                break;
            }
            end += 1;
        }
        if end - start > 1 {
            let mut idx = order[start..end].to_vec();
            idx.sort_unstable();
            for (off, &i) in idx.iter().enumerate() {
                exact.ranks[i] = start + off + 1;
            }
        }
        start = end;
    }
    Ok(exact)
}

// Relative size of the rounding error admitted in y_i − ĉ_iᵀβ.
const RANK_TIE_TOL: f64 = 1e-13;

/// Scores a_j = J(j/(n+1)) for j = 1..n, computed once per sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct RankScores {
    tag: ScoreTag,
    values: Vec<f64>,
    clamped: usize,
}

impl RankScores {
    pub fn new(j: &ScoreFunction, n: usize) -> Self {
        let mut clamped = 0;
        let values = (1..=n)
            .map(|r| {
                let l = j.eval_checked(r as f64 / (n as f64 + 1.0));
                clamped += l.clamped as usize;
                l.value
            })
            .collect();
        RankScores {
            tag: j.tag(),
            values,
            clamped,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn tag(&self) -> ScoreTag {
        self.tag
    }

    /// a_r for rank r ∈ 1..=n.
    pub fn get(&self, r: usize) -> f64 {
        self.values[r - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// How many of the n evaluations fell outside a score table.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    /// (1/(n−1)) Σ (a_j − ā)².
    pub fn variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.values.iter().sum::<f64>() / n as f64;
        self.values.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankStatistic {
    pub delta: Vec<f64>,
    pub score_tag: ScoreTag,
    pub beta_at: Vec<f64>,
}

/// n^{−1/2} 𝕂ᵀ Σ w_i c_i.
pub fn weighted_delta(problem: &RegressionProblem, summary: &DesignSummary, w: &[f64]) -> Vec<f64> {
    let c = problem.c();
    let (n, k) = c.shape();
    let mut s = vec![0.0; k];
    for (j, sj) in s.iter_mut().enumerate() {
        let col = c.column(j);
        *sj = (0..n).map(|i| w[i] * col[i]).sum();
    }
    let scale = 1.0 / (n as f64).sqrt();
    (0..k)
        .map(|r| scale * (0..k).map(|j| summary.kn[(j, r)] * s[j]).sum::<f64>())
        .collect()
}

fn check_beta(problem: &RegressionProblem, beta: &[f64]) -> Result<()> {
    if beta.len() != problem.k() {
        return Err(Error::DimensionMismatch {
            what: "beta",
            expected: problem.k(),
            found: beta.len(),
        });
    }
    Ok(())
}

/// Δ̰_J(β). The intercept plays no role: residuals are ranked without it.
pub fn rank_statistic(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    j: &ScoreFunction,
    beta: &[f64],
) -> Result<RankStatistic> {
    let scores = RankScores::new(j, problem.n());
    let delta = rank_statistic_with(problem, summary, &scores, beta)?;
    Ok(RankStatistic {
        delta,
        score_tag: j.tag(),
        beta_at: beta.to_vec(),
    })
}

/// Δ̰_J(β) with precomputed rank scores. Residuals equal up to rounding
/// are ranked by index.
pub fn rank_statistic_with(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    scores: &RankScores,
    beta: &[f64],
) -> Result<Vec<f64>> {
    check_beta(problem, beta)?;
    if scores.n() != problem.n() {
        return Err(Error::DimensionMismatch {
            what: "rank scores",
            expected: problem.n(),
            found: scores.n(),
        });
    }
    let fit = problem.fitted(beta);
    let z: Vec<f64> = problem.y().iter().zip(&fit).map(|(y, f)| y - f).collect();
    let tol: Vec<f64> = problem
        .y()
        .iter()
        .zip(&fit)
        .map(|(y, f)| RANK_TIE_TOL * (y.abs() + f.abs()))
        .collect();
    let ranks = rank_residuals_within(&z, &tol)?;
    let w: Vec<f64> = ranks.ranks.iter().map(|&r| scores.get(r)).collect();
    Ok(weighted_delta(problem, summary, &w))
}

/// Δ_J(β) with the true distribution function G of the errors; `a` is the
/// raw intercept used to form the residuals.
pub fn exact_score_statistic<L: Law + ?Sized>(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    j: &ScoreFunction,
    g: &L,
    a: f64,
    beta: &[f64],
) -> Result<Vec<f64>> {
    let z = residuals(problem, a, beta)?;
    let w = z
        .iter()
        .map(|&zi| Ok(j.eval(g.cdf(zi)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_delta(problem, summary, &w))
}

/// Δ_θ(β) = n^{−1/2} 𝕂ᵀ Σ φ_θ(Z_i) c_i.
pub fn central_sequence<L: Law + ?Sized>(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    theta: &L,
    a: f64,
    beta: &[f64],
) -> Result<Vec<f64>> {
    let z = residuals(problem, a, beta)?;
    let w = z
        .iter()
        .map(|&zi| theta.score(zi))
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_delta(problem, summary, &w))
}

/// Exact covariance of Δ̰_J when the ranks are uniform over permutations:
/// (1/(n−1)) Σ_j (a_j − ā)² · 𝕂ᵀ ℂ 𝕂, which is the identity scaled by the
/// rank-score variance.
pub fn null_covariance(summary: &DesignSummary, scores: &RankScores) -> DMatrix<f64> {
    let ktck = summary.kn.transpose() * &summary.cn * &summary.kn;
    ktck * scores.variance()
}
