//! Cross-information estimation, the one-step R-estimator and the
//! Hodges–Lehmann (Argmin) R-estimator.
//!
//! With β̂ the LAD estimate and Δ̰ = Δ̰_J(β̂), the line search scans
//!
//! ```text
//! h(v) = Δ̰ᵀ Δ̰_J(β̂ + ν v Δ̰),   v = ℓ/c,
//! ```
//!
//! for the first ℓ with h(v_{ℓ+1}) < 0, interpolates the root v̂ linearly
//! between v₋ = v_ℓ and v₊ = v_{ℓ+1} and returns 𝒥̂ = 1/v̂. The one-step
//! estimate is β̂ + ν 𝒥̂⁻¹ Δ̰.

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linear_model::{
    fit_lad, matrix_rows, residuals, DesignSummary, EstimateReport, Estimator, RegressionProblem,
};
use crate::ranks::{rank_statistic_with, RankScores};
use crate::scores::ScoreFunction;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HEvaluation {
    pub v: f64,
    pub h: f64,
}

/// Every evaluation of the line search and its outcome. On failure the
/// bracket fields are NaN.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineSearchTrace {
    pub c: f64,
    pub evaluations: Vec<HEvaluation>,
    pub v_minus: f64,
    pub v_plus: f64,
    pub v_hat: f64,
    pub j_hat: f64,
}

/// v̂ = v₋(1 − λ) + v₊λ with λ = h(v₋)/(h(v₋) − h(v₊)).
pub fn interpolate_root(v_minus: f64, v_plus: f64, h_minus: f64, h_plus: f64) -> f64 {
    let lambda = h_minus / (h_minus - h_plus);
    v_minus * (1.0 - lambda) + v_plus * lambda
}

/// Scans v_ℓ = ℓ/c, ℓ = 0, 1, …, up to `max_steps` grid points past zero,
/// for the first sign change of `h`. `h(0)` must exceed `degenerate`.
pub fn line_search<F>(mut h: F, c: f64, max_steps: usize, degenerate: f64) -> Result<LineSearchTrace>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter { name: "c", value: c });
    }
    if max_steps < 2 {
        return Err(Error::InvalidParameter {
            name: "max_steps",
            value: max_steps as f64,
        });
    }
    let h0 = h(0.0)?;
    if !(h0 > degenerate) {
        return Err(Error::DegenerateStatistic { h0 });
    }
    let mut evaluations = Vec::with_capacity(64);
    evaluations.push(HEvaluation { v: 0.0, h: h0 });
    let mut prev = h0;
    for l in 1..=max_steps {
        let v = l as f64 / c;
        let hv = h(v)?;
        evaluations.push(HEvaluation { v, h: hv });
        if hv < 0.0 {
            let v_minus = (l - 1) as f64 / c;
            let v_hat = interpolate_root(v_minus, v, prev, hv);
            return Ok(LineSearchTrace {
                c,
                evaluations,
                v_minus,
                v_plus: v,
                v_hat,
                j_hat: 1.0 / v_hat,
            });
        }
        prev = hv;
    }
    Err(Error::LineSearch(Box::new(LineSearchTrace {
        c,
        evaluations,
        v_minus: f64::NAN,
        v_plus: f64::NAN,
        v_hat: f64::NAN,
        j_hat: f64::NAN,
    })))
}

/// Settings of the one-step estimator.
#[derive(Clone, Debug)]
pub struct OneStepConfig {
    pub score: ScoreFunction,
    /// Grid constant: v_ℓ = ℓ/c.
    pub c: f64,
    /// Grid points scanned before the range is first doubled.
    pub max_steps: usize,
    /// How many times the scan range may double.
    pub max_doublings: u32,
    /// h(0) ≤ degeneracy · n · 𝒥(J) counts as a vanishing statistic.
    pub degeneracy: f64,
    /// Rounds β̂_LAD to multiples of `grid/√n` before use. Off by default;
    /// in fixed samples the rounding makes no difference.
    pub lad_grid: Option<f64>,
}

impl OneStepConfig {
    pub fn new(score: ScoreFunction) -> Self {
        OneStepConfig {
            score,
            c: 100.0,
            max_steps: 1000,
            max_doublings: 4,
            degeneracy: 1e-10,
            lad_grid: None,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }
}

/// h(v) for the preliminary estimate `beta` and its statistic `delta0`.
pub fn h_function(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    scores: &RankScores,
    beta: &[f64],
    delta0: &[f64],
    v: f64,
) -> Result<f64> {
    let b = shifted(summary, beta, delta0, v);
    let d = rank_statistic_with(problem, summary, scores, &b)?;
    Ok(dot(delta0, &d))
}

// β + ν v Δ.
fn shifted(summary: &DesignSummary, beta: &[f64], delta: &[f64], v: f64) -> Vec<f64> {
    let k = beta.len();
    (0..k)
        .map(|r| beta[r] + v * (0..k).map(|j| summary.nu_scale[(r, j)] * delta[j]).sum::<f64>())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Line search for 𝒥̂(J, g) at the preliminary estimate `beta`.
pub fn estimate_cross_information(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    beta: &[f64],
    config: &OneStepConfig,
) -> Result<LineSearchTrace> {
    let scores = RankScores::new(&config.score, problem.n());
    let delta0 = rank_statistic_with(problem, summary, &scores, beta)?;
    search(problem, summary, &scores, beta, &delta0, config).map(|(t, _)| t)
}

// Returns the trace and the number of range doublings used.
fn search(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    scores: &RankScores,
    beta: &[f64],
    delta0: &[f64],
    config: &OneStepConfig,
) -> Result<(LineSearchTrace, u32)> {
    let threshold = config.degeneracy * problem.n() as f64 * config.score.square_integral();
    let mut budget = config.max_steps;
    let mut doublings = 0;
    loop {
        let h = |v: f64| {
            if v == 0.0 {
                Ok(dot(delta0, delta0))
            } else {
                h_function(problem, summary, scores, beta, delta0, v)
            }
        };
        match line_search(h, config.c, budget, threshold) {
            Err(Error::LineSearch(_)) if doublings < config.max_doublings => {
                doublings += 1;
                budget *= 2;
            }
            other => return other.map(|t| (t, doublings)),
        }
    }
}

/// The one-step R-estimator, starting from a fresh LAD fit.
pub fn fit_onestep(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    config: &OneStepConfig,
) -> Result<EstimateReport> {
    let lad = fit_lad(problem)?;
    fit_onestep_from(problem, summary, config, &lad)
}

/// The one-step R-estimator from a given LAD report.
pub fn fit_onestep_from(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    config: &OneStepConfig,
    lad: &EstimateReport,
) -> Result<EstimateReport> {
    let n = problem.n();
    let estimator = Estimator::OneStep {
        score: config.score.tag(),
    };
    let mut beta0 = lad.beta_hat.clone();
    if let Some(grid) = config.lad_grid {
        let step = grid / (n as f64).sqrt();
        beta0.iter_mut().for_each(|b| *b = (*b / step).round() * step);
    }
    let a0 = lad.intercept_hat.unwrap_or(0.0);
    let fallback = |flag: &str, h0: f64| {
        let mut rep = lad.clone();
        rep.estimator = estimator;
        rep.flags.push(flag.into());
        rep.diagnostics.insert("h0".into(), h0);
        rep
    };

    // An exact fit leaves every residual tied at zero; ranks carry nothing.
    let z = residuals(problem, a0, &beta0)?;
    let yscale = problem.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if z.iter().all(|r| r.abs() <= 1e-12 * yscale) {
        return Ok(fallback("exact_fit", 0.0));
    }

    let scores = RankScores::new(&config.score, n);
    let delta0 = rank_statistic_with(problem, summary, &scores, &beta0)?;
    let (trace, doublings) = match search(problem, summary, &scores, &beta0, &delta0, config) {
        Ok(t) => t,
        Err(Error::DegenerateStatistic { h0 }) => return Ok(fallback("degenerate_statistic", h0)),
        Err(e) => return Err(e),
    };
    let beta = shifted(summary, &beta0, &delta0, trace.v_hat);
    let intercept = lad.intercept_hat.map(|a| {
        a + problem
            .col_means()
            .iter()
            .zip(beta0.iter().zip(&beta))
            .map(|(m, (b0, b))| m * (b0 - b))
            .sum::<f64>()
    });
    let mut rep = EstimateReport::new(estimator, beta, intercept);
    let j_hat = trace.j_hat;
    rep.cross_info_hat = Some(j_hat);
    let k2 = &summary.kn * &summary.kn;
    let cov = k2 * (config.score.square_integral() / (j_hat * j_hat) / n as f64);
    rep.asymptotic_cov = Some(matrix_rows(&cov));
    let d = &mut rep.diagnostics;
    d.insert("cross_info_hat".into(), j_hat);
    d.insert("delta_norm".into(), dot(&delta0, &delta0).sqrt());
    d.insert("h0".into(), trace.evaluations[0].h);
    d.insert("v_hat".into(), trace.v_hat);
    d.insert("grid_c".into(), trace.c);
    d.insert("line_search_steps".into(), (trace.evaluations.len() - 1) as f64);
    d.insert("scan_doublings".into(), doublings as f64);
    d.insert("clamped_scores".into(), scores.clamped() as f64);
    if let Some(obj) = lad.diagnostics.get("objective") {
        d.insert("lad_objective".into(), *obj);
    }
    if j_hat <= 0.0 || !j_hat.is_finite() {
        rep.flags.push("nonpositive_cross_information".into());
    }
    rep.trace = Some(trace);
    Ok(rep)
}

/// Where the Nelder–Mead search for the Hodges–Lehmann estimator starts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HlStart {
    #[default]
    Lad,
    /// β = 0.
    Origin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Initial edge along coordinate k is `edge · 𝕂_kk / √n`.
    pub edge: f64,
    pub max_evaluations: usize,
    pub restarts: usize,
    pub start: HlStart,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            edge: 0.1,
            max_evaluations: 2000,
            restarts: 1,
            start: HlStart::Lad,
        }
    }
}

/// Hodges–Lehmann R-estimator: argmin of ‖Δ̰_J(t)‖ by Nelder–Mead.
pub fn fit_hodges_lehmann(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    j: &ScoreFunction,
    nm: &NelderMeadConfig,
) -> Result<EstimateReport> {
    let lad = fit_lad(problem)?;
    fit_hodges_lehmann_from(problem, summary, j, nm, &lad)
}

pub fn fit_hodges_lehmann_from(
    problem: &RegressionProblem,
    summary: &DesignSummary,
    j: &ScoreFunction,
    nm: &NelderMeadConfig,
    lad: &EstimateReport,
) -> Result<EstimateReport> {
    let n = problem.n();
    let k = problem.k();
    let scores = RankScores::new(j, n);
    let start = match nm.start {
        HlStart::Lad => lad.beta_hat.clone(),
        HlStart::Origin => vec![0.0; k],
    };
    let edges: Vec<f64> = (0..k)
        .map(|i| nm.edge * summary.kn[(i, i)] / (n as f64).sqrt())
        .collect();
    let mut failure = None;
    let mut objective = |t: &[f64]| match rank_statistic_with(problem, summary, &scores, t) {
        Ok(d) => dot(&d, &d).sqrt(),
        Err(e) => {
            failure.get_or_insert(e);
            f64::INFINITY
        }
    };
    let out = nelder_mead(&mut objective, &start, &edges, nm);
    if let Some(e) = failure {
        return Err(e);
    }
    let beta = out.x;
    let intercept = lad.intercept_hat.map(|a| {
        a + problem
            .col_means()
            .iter()
            .zip(lad.beta_hat.iter().zip(&beta))
            .map(|(m, (b0, b))| m * (b0 - b))
            .sum::<f64>()
    });
    let mut rep = EstimateReport::new(Estimator::HodgesLehmann { score: j.tag() }, beta, intercept);
    rep.diagnostics.insert("objective".into(), out.value);
    rep.diagnostics.insert("evaluations".into(), out.evaluations as f64);
    rep.diagnostics.insert("restarts".into(), out.restarts as f64);
    if !out.converged {
        rep.flags.push("not_converged".into());
    }
    Ok(rep)
}

struct NmOutcome {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    restarts: usize,
    converged: bool,
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    edges: &[f64],
    cfg: &NelderMeadConfig,
) -> NmOutcome {
    let k = start.len();
    let mut evals = 0usize;
    let mut best = (start.to_vec(), f(start));
    evals += 1;
    let mut restarts = 0;
    let mut converged = false;
    let size0: f64 = edges.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    for round in 0..=cfg.restarts {
        if evals >= cfg.max_evaluations {
            break;
        }
        if round > 0 {
            restarts += 1;
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
        simplex.push(best.clone());
        for i in 0..k {
            let mut p = best.0.clone();
            p[i] += edges[i];
            let v = f(&p);
            evals += 1;
            simplex.push((p, v));
        }
        converged = false;
        while evals < cfg.max_evaluations {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
            let diameter = simplex[1..]
                .iter()
                .map(|(p, _)| {
                    p.iter()
                        .zip(&simplex[0].0)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                })
                .fold(0.0f64, f64::max);
            if diameter <= 1e-8 * size0 {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..k)
                .map(|i| simplex[..k].iter().map(|(p, _)| p[i]).sum::<f64>() / k as f64)
                .collect();
            let worst = simplex[k].clone();
            let along = |t: f64| -> Vec<f64> {
                (0..k)
                    .map(|i| centroid[i] + t * (worst.0[i] - centroid[i]))
                    .collect()
            };
            let xr = along(-cfg.reflection);
            let fr = f(&xr);
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(-cfg.reflection * cfg.expansion);
                let fe = f(&xe);
                evals += 1;
                simplex[k] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[k - 1].1 {
                simplex[k] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let x = along(-cfg.reflection * cfg.contraction);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(cfg.contraction);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[k] = (xc, fc);
                continue;
            }
            let x0 = simplex[0].0.clone();
            for s in simplex.iter_mut().skip(1) {
                for i in 0..k {
                    s.0[i] = x0[i] + cfg.shrink * (s.0[i] - x0[i]);
                }
                s.1 = f(&s.0);
                evals += 1;
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
        if simplex[0].1 <= best.1 {
            best = simplex[0].clone();
        }
    }
    NmOutcome {
        x: best.0,
        value: best.1,
        evaluations: evals,
        restarts,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(q: f64) -> impl FnMut(f64) -> Result<f64> {
        move |v| Ok((1.0 - q * v) * 2.5)
    }

    #[test]
    fn root_between_grid_points() {
        let t = line_search(affine(3.0), 10.0, 100, 0.0).unwrap();
        assert!((t.v_minus - 0.3).abs() < 1e-15);
        assert!((t.v_plus - 0.4).abs() < 1e-15);
        assert!((t.v_hat - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.j_hat - 3.0).abs() < 1e-13);
    }

    #[test]
    fn root_on_grid_point() {
        // h(0.5) = 0 is not negative, so the bracket is [0.5, 0.6].
        let t = line_search(affine(2.0), 10.0, 100, 0.0).unwrap();
        assert_eq!(t.v_minus, 0.5);
        assert_eq!(t.v_hat, 0.5);
        assert_eq!(t.j_hat, 2.0);
    }

    #[test]
    fn degenerate_and_failed_searches() {
        assert!(matches!(
            line_search(|_| Ok(0.0), 10.0, 100, 1e-10),
            Err(Error::DegenerateStatistic { .. })
        ));
        match line_search(|_| Ok(1.0), 10.0, 5, 0.0) {
            Err(Error::LineSearch(t)) => assert_eq!(t.evaluations.len(), 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let mut f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let out = nelder_mead(&mut f, &[0.0, 0.0], &[0.5, 0.5], &NelderMeadConfig::default());
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] + 2.0).abs() < 1e-6);
    }
}
