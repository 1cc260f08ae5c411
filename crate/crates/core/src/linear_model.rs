//! The regression model `X_i = a + Σ_k c_ik β_k + ε_i`: design preprocessing,
//! residuals, and the OLS and LAD estimators.

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::onestep::LineSearchTrace;
use crate::scores::ScoreTag;

/// Noether ratio above which a design column draws a warning.
pub const DEFAULT_NOETHER_THRESHOLD: f64 = 0.1;

/// Observations with a column-centered design.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem {
    y: Vec<f64>,
    c: DMatrix<f64>,
    col_means: Vec<f64>,
    intercept_present: bool,
}

impl RegressionProblem {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.c.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Centered design, n × K.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Column means removed from the raw design.
    pub fn col_means(&self) -> &[f64] {
        &self.col_means
    }

    pub fn intercept_present(&self) -> bool {
        self.intercept_present
    }

    /// Same design, new observations.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        check_response(&y, self.n())?;
        Ok(RegressionProblem { y, ..self.clone() })
    }

    /// Σ_k c_ik β_k on the centered design.
    pub fn fitted(&self, beta: &[f64]) -> Vec<f64> {
        let (n, k) = self.c.shape();
        let mut out = vec![0.0; n];
        for j in 0..k {
            let col = self.c.column(j);
            for i in 0..n {
                out[i] += col[i] * beta[j];
            }
        }
        out
    }

    /// Intercept of the centered parameterization for a raw intercept.
    pub fn centered_intercept(&self, a: f64, beta: &[f64]) -> f64 {
        a + self.col_means.iter().zip(beta).map(|(m, b)| m * b).sum::<f64>()
    }
}

/// ℂ = n⁻¹ Σ cᵢcᵢᵀ and derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSummary {
    pub cn: DMatrix<f64>,
    /// 𝕂 = ℂ^{−1/2}.
    pub kn: DMatrix<f64>,
    /// max_i c²_ik / Σ_i c²_ik per column.
    pub noether: Vec<f64>,
    /// ν = n^{−1/2} 𝕂.
    pub nu_scale: DMatrix<f64>,
    pub warnings: Vec<String>,
}

fn check_response(y: &[f64], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "response",
            expected: n,
            found: y.len(),
        });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NotANumber { index: i });
    }
    Ok(())
}

/// Centers the design and summarizes it.
pub fn preprocess(
    y: Vec<f64>,
    c_raw: DMatrix<f64>,
    intercept_present: bool,
) -> Result<(RegressionProblem, DesignSummary)> {
    preprocess_with(y, c_raw, intercept_present, DEFAULT_NOETHER_THRESHOLD)
}

pub fn preprocess_with(
    y: Vec<f64>,
    mut c: DMatrix<f64>,
    intercept_present: bool,
    noether_threshold: f64,
) -> Result<(RegressionProblem, DesignSummary)> {
    let (n, k) = c.shape();
    check_response(&y, n)?;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "K",
            value: 0.0,
        });
    }
    if n <= k {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
        });
    }
    if let Some(i) = c.iter().position(|v| !v.is_finite()) {
        return Err(Error::NotANumber { index: i });
    }
    let mut col_means = Vec::with_capacity(k);
    for j in 0..k {
        let mut col = c.column_mut(j);
        let m = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|v| *v -= m);
        // A second pass removes the rounding left by the first.
        let m2 = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|v| *v -= m2);
        col_means.push(m + m2);
    }
    let cn = (c.transpose() * &c) / n as f64;
    let eig = cn.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(Error::SingularDesign);
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let q = &eig.eigenvectors;
    let kn = q * inv_sqrt * q.transpose();
    let kn = (&kn + kn.transpose()) * 0.5;

    let mut noether = Vec::with_capacity(k);
    let mut warnings = Vec::new();
    for j in 0..k {
        let col = c.column(j);
        let total: f64 = col.iter().map(|v| v * v).sum();
        let peak = col.iter().fold(0.0f64, |a, v| a.max(v * v));
        let r = peak / total;
        if r >= noether_threshold {
            warnings.push(alloc::format!(
                "column {j}: Noether ratio {r:.4} exceeds {noether_threshold}"
            ));
        }
        noether.push(r);
    }
    let nu_scale = &kn / (n as f64).sqrt();
    Ok((
        RegressionProblem {
            y,
            c,
            col_means,
            intercept_present,
        },
        DesignSummary {
            cn,
            kn,
            noether,
            nu_scale,
            warnings,
        },
    ))
}

/// Z_i = y_i − a − Σ_k c_ik β_k with the raw intercept `a`.
pub fn residuals(problem: &RegressionProblem, a: f64, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != problem.k() {
        return Err(Error::DimensionMismatch {
            what: "beta",
            expected: problem.k(),
            found: beta.len(),
        });
    }
    let shift = problem.centered_intercept(a, beta);
    let fit = problem.fitted(beta);
    Ok(problem
        .y
        .iter()
        .zip(fit)
        .map(|(y, f)| y - shift - f)
        .collect())
}

/// Which estimator produced a report.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Estimator {
    Ols,
    Lad,
    OneStep { score: ScoreTag },
    HodgesLehmann { score: ScoreTag },
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Ols => f.write_str("ols"),
            Estimator::Lad => f.write_str("lad"),
            Estimator::OneStep { score } => write!(f, "onestep[{score}]"),
            Estimator::HodgesLehmann { score } => write!(f, "hl[{score}]"),
        }
    }
}

/// Output of every fit.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub estimator: Estimator,
    pub beta_hat: Vec<f64>,
    /// Intercept for the raw (uncentered) design.
    pub intercept_hat: Option<f64>,
    pub cross_info_hat: Option<f64>,
    pub asymptotic_cov: Option<Vec<Vec<f64>>>,
    pub diagnostics: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub trace: Option<LineSearchTrace>,
}

impl EstimateReport {
    pub fn new(estimator: Estimator, beta_hat: Vec<f64>, intercept_hat: Option<f64>) -> Self {
        EstimateReport {
            estimator,
            beta_hat,
            intercept_hat,
            cross_info_hat: None,
            asymptotic_cov: None,
            diagnostics: BTreeMap::new(),
            flags: Vec::new(),
            trace: None,
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

// Regressor matrix actually fitted: [1, C] with an intercept, raw C without.
fn fit_design(problem: &RegressionProblem) -> DMatrix<f64> {
    let (n, k) = problem.c.shape();
    if problem.intercept_present {
        DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { problem.c[(i, j - 1)] })
    } else {
        DMatrix::from_fn(n, k, |i, j| problem.c[(i, j)] + problem.col_means[j])
    }
}

// Splits a solution on `fit_design` into (raw intercept, β).
fn split_solution(problem: &RegressionProblem, theta: &[f64]) -> (Option<f64>, Vec<f64>) {
    if problem.intercept_present {
        let beta = theta[1..].to_vec();
        let a = theta[0] - problem.col_means.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
        (Some(a), beta)
    } else {
        (None, theta.to_vec())
    }
}

/// Least squares via QR.
pub fn fit_ols(problem: &RegressionProblem) -> Result<EstimateReport> {
    let x = fit_design(problem);
    let y = DVector::from_column_slice(&problem.y);
    let theta = least_squares(&x, &y).ok_or(Error::SingularDesign)?;
    let (a, beta) = split_solution(problem, theta.as_slice());
    let mut rep = EstimateReport::new(Estimator::Ols, beta, a);
    let res = y - fit_design(problem) * &theta;
    rep.diagnostics
        .insert("residual_sum_squares".into(), res.norm_squared());
    Ok(rep)
}

// Thin QR solve of min ‖y − Xθ‖; None when X is rank deficient.
fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(scale > 0.0) || r.diagonal().iter().any(|v| v.abs() <= 1e-12 * scale) {
        return None;
    }
    r.solve_upper_triangular(&(qr.q().transpose() * y))
}

/// Least absolute deviations, jointly over intercept and slopes.
pub fn fit_lad(problem: &RegressionProblem) -> Result<EstimateReport> {
    let x = fit_design(problem);
    let sol = lad(&x, &problem.y)?;
    let (a, beta) = split_solution(problem, &sol.theta);
    let mut rep = EstimateReport::new(Estimator::Lad, beta, a);
    rep.diagnostics.insert("objective".into(), sol.objective);
    rep.diagnostics
        .insert("iterations".into(), sol.iterations as f64);
    if sol.multiple_optima {
        rep.flags.push("multiple_optima".into());
    }
    Ok(rep)
}

/// An optimal vertex of min_θ Σ|y_i − x_iᵀθ|.
#[derive(Clone, Debug, PartialEq)]
pub struct LadSolution {
    pub theta: Vec<f64>,
    pub objective: f64,
    /// Rows interpolated exactly by `theta`.
    pub basis: Vec<usize>,
    pub iterations: usize,
    /// Some edge out of the vertex has zero slope.
    pub multiple_optima: bool,
}

/// Exact L1 regression by simplex-type descent between vertices.
///
/// A vertex is fixed by p rows fitted exactly. Releasing basic row j moves θ
/// along column j of X_B⁻¹; the slope of the objective along that edge is
/// 1 ∓ g_j, so the vertex is optimal once every |g_j| ≤ 1. Otherwise the
/// step goes along the steepest edge up to the weighted median of the
/// kinks, and the row hit there enters the basis.
pub fn lad(x: &DMatrix<f64>, y: &[f64]) -> Result<LadSolution> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "response",
            expected: n,
            found: y.len(),
        });
    }
    if p == 0 || n < p {
        return Err(Error::LinearProgram("fewer observations than parameters"));
    }
    let ymax = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let zero_tol = 1e-12 * ymax;
    let slope_tol = 1e-9;
    // Infinitesimal perturbation of y deciding signs of exactly fitted rows.
    let pi: Vec<f64> = (0..n).map(perturbation).collect();

    let mut basis = initial_basis(x, y)?;
    let mut in_basis = vec![false; n];
    for &i in &basis {
        in_basis[i] = true;
    }
    let max_iter = 50 * n + 100;
    for iter in 0..max_iter {
        let xb = DMatrix::from_fn(p, p, |r, c| x[(basis[r], c)]);
        let inv = xb
            .try_inverse()
            .ok_or(Error::LinearProgram("singular basis"))?;
        let solve = |v: &[f64]| &inv * DVector::from_iterator(p, basis.iter().map(|&i| v[i]));
        let theta = solve(y);
        let theta_pi = solve(&pi);
        let row_dot = |i: usize, t: &DVector<f64>| (0..p).map(|c| x[(i, c)] * t[c]).sum::<f64>();
        // (residual, perturbed residual); the latter only matters at zero.
        let res: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                if in_basis[i] {
                    (0.0, 0.0)
                } else {
                    let r = y[i] - row_dot(i, &theta);
                    let r = if r.abs() <= zero_tol { 0.0 } else { r };
                    (r, pi[i] - row_dot(i, &theta_pi))
                }
            })
            .collect();
        let sign = |i: usize| {
            let (r, rp) = res[i];
            if r != 0.0 {
                r.signum()
            } else {
                rp.signum()
            }
        };

        // s = Σ_{i∉B} sign(r_i) x_i, then g = X_B⁻ᵀ s.
        let mut s = DVector::<f64>::zeros(p);
        for i in (0..n).filter(|&i| !in_basis[i]) {
            let sg = sign(i);
            for c in 0..p {
                s[c] += sg * x[(i, c)];
            }
        }
        let g = inv.transpose() * &s;

        let Some(j) = (0..p)
            .filter(|&j| g[j].abs() > 1.0 + slope_tol)
            .max_by(|&a, &b| g[a].abs().partial_cmp(&g[b].abs()).unwrap())
        else {
            let objective = res.iter().map(|r| r.0.abs()).sum();
            let multiple_optima = (0..p).any(|j| (g[j].abs() - 1.0).abs() <= slope_tol);
            return Ok(LadSolution {
                theta: theta.iter().copied().collect(),
                objective,
                basis,
                iterations: iter,
                multiple_optima,
            });
        };
        let dir = g[j].signum();
        let w = DVector::from_iterator(p, (0..p).map(|r| dir * inv[(r, j)]));
        // Kinks (t, tie-break, slope increase, row); exactly fitted rows sit
        // at t = 0 and are ordered by their perturbed residuals.
        let mut kinks: Vec<(f64, f64, f64, usize)> = Vec::new();
        for i in (0..n).filter(|&i| !in_basis[i]) {
            let d = row_dot(i, &w);
            if d.abs() <= 1e-14 * xmax {
                continue;
            }
            let (r, rp) = res[i];
            let (t, tie) = if r != 0.0 { (r / d, 0.0) } else { (0.0, rp / d) };
            if t > 0.0 || (t == 0.0 && tie > 0.0) {
                kinks.push((t, tie, 2.0 * d.abs(), i));
            }
        }
        if kinks.is_empty() {
            return Err(Error::LinearProgram("unbounded descent"));
        }
        kinks.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.partial_cmp(&b.1).unwrap())
                .then(a.3.cmp(&b.3))
        });
        let mut slope = 1.0 - g[j].abs();
        let mut enter = kinks[kinks.len() - 1].3;
        for &(_, _, inc, i) in &kinks {
            slope += inc;
            if slope >= 0.0 {
                enter = i;
                break;
            }
        }
        in_basis[basis[j]] = false;
        basis[j] = enter;
        in_basis[enter] = true;
    }
    Err(Error::LinearProgram("iteration limit reached"))
}

// Distinct magnitudes in (1, 2) with pseudo-random signs.
fn perturbation(i: usize) -> f64 {
    let mut z = (i as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    let u = (z >> 11) as f64 / (1u64 << 53) as f64;
    if z & 1 == 0 {
        1.0 + u
    } else {
        -1.0 - u
    }
}


// p linearly independent rows, preferring those closest to the least
// squares fit so the descent starts near the optimum.
fn initial_basis(x: &DMatrix<f64>, y: &[f64]) -> Result<Vec<usize>> {
    let (n, p) = x.shape();
    let yv = DVector::from_column_slice(y);
    let theta = least_squares(x, &yv);
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(t) = theta {
        let r = &yv - x * t;
        order.sort_by(|&a, &b| r[a].abs().partial_cmp(&r[b].abs()).unwrap().then(a.cmp(&b)));
    }
    // Greedy Gram–Schmidt over rows.
    let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut chosen = Vec::with_capacity(p);
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(p);
    for &i in &order {
        let mut v = x.row(i).transpose();
        let norm0 = v.norm();
        for u in &q {
            let d = u.dot(&v);
            v -= u * d;
        }
        let nv = v.norm();
        if nv > 1e-10 * norm0.max(xmax) {
            q.push(v / nv);
            chosen.push(i);
            if chosen.len() == p {
                return Ok(chosen);
            }
        }
    }
    Err(Error::SingularDesign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn summary_for_three_points() {
        let (_, s) = preprocess(vec![1.0, 2.0, 3.0], col(&[-1.0, 0.0, 1.0]), true).unwrap();
        assert!((s.cn[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.kn[(0, 0)] - 1.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constant_column_is_singular() {
        let c = DMatrix::from_row_slice(4, 2, &[1.0, 3.0, 2.0, 3.0, 4.0, 3.0, 7.0, 3.0]);
        assert!(matches!(
            preprocess(vec![0.0; 4], c, true),
            Err(Error::SingularDesign)
        ));
    }

    #[test]
    fn residuals_vanish_at_truth() {
        let (p, _) = preprocess(vec![1.0, 2.0, 3.0], col(&[-1.0, 0.0, 1.0]), true).unwrap();
        assert_eq!(residuals(&p, 2.0, &[1.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn raw_intercept_round_trip() {
        // y = 5 + 2·c on an uncentered design.
        let c = [3.0, 4.0, 6.0, 9.0, 10.0];
        let y: Vec<f64> = c.iter().map(|v| 5.0 + 2.0 * v).collect();
        let (p, _) = preprocess(y, col(&c), true).unwrap();
        for rep in [fit_ols(&p).unwrap(), fit_lad(&p).unwrap()] {
            assert!((rep.beta_hat[0] - 2.0).abs() < 1e-12, "{rep:?}");
            assert!((rep.intercept_hat.unwrap() - 5.0).abs() < 1e-11, "{rep:?}");
        }
    }

    #[test]
    fn intercept_only_lad_is_median() {
        let y = [4.0, -1.0, 10.0, 2.5, 3.0, 100.0, -7.0];
        let x = DMatrix::from_element(7, 1, 1.0);
        let s = lad(&x, &y).unwrap();
        assert_eq!(s.theta[0], 3.0);
    }

    #[test]
    fn lad_resists_outlier() {
        let c = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let mut y: Vec<f64> = c.iter().map(|v| 1.0 - v).collect();
        y[5] = 1e6;
        let (p, _) = preprocess(y, col(&c), true).unwrap();
        let rep = fit_lad(&p).unwrap();
        assert!((rep.beta_hat[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_intercept_model() {
        let c = [1.0, 2.0, 4.0, 5.0];
        let y: Vec<f64> = c.iter().map(|v| 3.0 * v).collect();
        let (p, _) = preprocess(y, col(&c), false).unwrap();
        assert!((fit_ols(&p).unwrap().beta_hat[0] - 3.0).abs() < 1e-12);
        let lad = fit_lad(&p).unwrap();
        assert!((lad.beta_hat[0] - 3.0).abs() < 1e-12);
        assert_eq!(lad.intercept_hat, None);
    }
}
