//! Monte Carlo benchmark: designs drawn once from Uniform[−1, 1], responses
//! `y_i = Σ_k c_ik + ε_i` (all true slopes equal to one, no intercept), every
//! estimator fitted to the same replications, bias and MSE of the first
//! coefficient aggregated per cell.

// Math methods come from `Float` when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linear_model::{fit_lad, fit_ols, preprocess, DesignSummary, RegressionProblem};
use crate::onestep::{fit_hodges_lehmann_from, fit_onestep_from, HlStart, NelderMeadConfig, OneStepConfig};
use crate::scores::{ScoreFunction, ScoreSpec};
use crate::stable::StableParams;

/// Regression model of the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub enum Model {
    K2,
    K4,
    Kn(usize),
}

impl Model {
    pub fn k(&self) -> usize {
        match *self {
            Model::K2 => 2,
            Model::K4 => 4,
            Model::Kn(k) => k,
        }
    }

    /// `k2`, `k4` or `kN`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        match t.as_str() {
            "k2" => Ok(Model::K2),
            "k4" => Ok(Model::K4),
            _ => {
                let k: usize = t
                    .strip_prefix('k')
                    .and_then(|r| r.parse().ok())
                    .ok_or(Error::InvalidParameter {
                        name: "model",
                        value: f64::NAN,
                    })?;
                if k == 0 {
                    return Err(Error::InvalidParameter { name: "K", value: 0.0 });
                }
                Ok(Model::Kn(k))
            }
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.k())
    }
}

impl TryFrom<String> for Model {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Model::parse(&s)
    }
}

impl From<Model> for String {
    fn from(m: Model) -> String {
        format!("{m}")
    }
}

/// An estimator run by the benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub enum EstimatorSpec {
    Ols,
    Lad,
    OneStep(ScoreSpec),
    HodgesLehmann(ScoreSpec),
}

impl EstimatorSpec {
    /// `ols`, `lad`, `onestep:SCORE` or `hl:SCORE`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        match t.to_ascii_lowercase().as_str() {
            "ols" => return Ok(EstimatorSpec::Ols),
            "lad" => return Ok(EstimatorSpec::Lad),
            _ => {}
        }
        let (kind, score) = t
            .split_once(':')
            .ok_or(Error::InvalidScore("expected ESTIMATOR:SCORE"))?;
        let score = ScoreSpec::parse(score)?;
        match kind.to_ascii_lowercase().as_str() {
            "onestep" => Ok(EstimatorSpec::OneStep(score)),
            "hl" => Ok(EstimatorSpec::HodgesLehmann(score)),
            _ => Err(Error::InvalidScore("unknown estimator")),
        }
    }

    pub fn score(&self) -> Option<ScoreSpec> {
        match *self {
            EstimatorSpec::OneStep(s) | EstimatorSpec::HodgesLehmann(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Ols => f.write_str("ols"),
            EstimatorSpec::Lad => f.write_str("lad"),
            EstimatorSpec::OneStep(s) => write!(f, "onestep:{s}"),
            EstimatorSpec::HodgesLehmann(s) => write!(f, "hl:{s}"),
        }
    }
}

impl TryFrom<String> for EstimatorSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        EstimatorSpec::parse(&s)
    }
}

impl From<EstimatorSpec> for String {
    fn from(e: EstimatorSpec) -> String {
        format!("{e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchConfig {
    pub model: Model,
    pub n: usize,
    /// Replications per cell.
    pub m: usize,
    pub error_params: Vec<StableParams>,
    pub estimators: Vec<EstimatorSpec>,
    pub master_seed: u64,
    pub design_seed: u64,
    /// Line-search grid constant of the one-step estimators.
    pub grid_c: f64,
    /// Start the Hodges–Lehmann search at zero instead of at LAD.
    pub hl_from_origin: bool,
}

impl BenchConfig {
    pub fn new(model: Model, n: usize, m: usize) -> Self {
        BenchConfig {
            model,
            n,
            m,
            error_params: Vec::new(),
            estimators: Vec::new(),
            master_seed: 1,
            design_seed: 2,
            grid_c: 100.0,
            hl_from_origin: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n <= self.model.k() + 1 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: self.n as f64,
            });
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter { name: "M", value: 0.0 });
        }
        if self.error_params.is_empty() || self.estimators.is_empty() {
            return Err(Error::InvalidParameter {
                name: "cells",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// n × K matrix of independent Uniform[−1, 1] draws, filled row by row.
pub fn generate_design(model: Model, n: usize, design_seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(design_seed);
    let k = model.k();
    let mut c = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            c[(i, j)] = rng.gen_range(-1.0..=1.0);
        }
    }
    c
}

/// `y_i = Σ_k c_ik + ε_i`; `errors = None` gives the noiseless response.
pub fn generate_response(c: &DMatrix<f64>, errors: Option<&StableParams>, seed: u64) -> Vec<f64> {
    let n = c.nrows();
    let noise = match errors {
        Some(p) => p.sample(n, seed),
        None => alloc::vec![0.0; n],
    };
    (0..n).map(|i| c.row(i).sum() + noise[i]).collect()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in cell `cell`.
pub fn replication_seed(master: u64, cell: usize, rep: usize) -> u64 {
    splitmix(splitmix(splitmix(master) ^ cell as u64) ^ rep as u64)
}

/// A configuration with its design and scores resolved.
pub struct Bench {
    pub config: BenchConfig,
    design: DMatrix<f64>,
    template: RegressionProblem,
    summary: DesignSummary,
    scores: Vec<Option<ScoreFunction>>,
}

impl Bench {
    /// Resolves scores with [`ScoreSpec::build`].
    pub fn new(config: BenchConfig) -> Result<Self> {
        Self::with_scores(config, |s| s.build())
    }

    /// Resolves scores through `resolve`, e.g. from a table cache.
    pub fn with_scores<F>(config: BenchConfig, mut resolve: F) -> Result<Self>
    where
        F: FnMut(&ScoreSpec) -> Result<ScoreFunction>,
    {
        config.validate()?;
        let design = generate_design(config.model, config.n, config.design_seed);
        let y = generate_response(&design, None, 0);
        let (template, summary) = preprocess(y, design.clone(), true)?;
        let mut built: Vec<(ScoreSpec, ScoreFunction)> = Vec::new();
        let mut scores = Vec::with_capacity(config.estimators.len());
        for e in &config.estimators {
            let Some(spec) = e.score() else {
                scores.push(None);
                continue;
            };
            if let Some((_, f)) = built.iter().find(|(s, _)| *s == spec) {
                scores.push(Some(f.clone()));
                continue;
            }
            let f = resolve(&spec)?;
            built.push((spec, f.clone()));
            scores.push(Some(f));
        }
        Ok(Bench {
            config,
            design,
            template,
            summary,
            scores,
        })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn summary(&self) -> &DesignSummary {
        &self.summary
    }

    pub fn cells(&self) -> usize {
        self.config.error_params.len()
    }

    /// Simulates one replication and fits every estimator to it. Entry e
    /// of the result is the estimate of estimator e, or the error message.
    pub fn run_replication(&self, cell: usize, rep: usize) -> Vec<core::result::Result<Vec<f64>, String>> {
        let seed = replication_seed(self.config.master_seed, cell, rep);
        let y = generate_response(&self.design, Some(&self.config.error_params[cell]), seed);
        let problem = match self.template.with_response(y) {
            Ok(p) => p,
            Err(e) => return self.config.estimators.iter().map(|_| Err(format!("{e}"))).collect(),
        };
        let lad = fit_lad(&problem);
        self.config
            .estimators
            .iter()
            .zip(&self.scores)
            .map(|(spec, score)| {
                let lad = lad.as_ref().map_err(|e| format!("{e}"))?;
                let rep = match spec {
                    EstimatorSpec::Ols => fit_ols(&problem),
                    EstimatorSpec::Lad => Ok(lad.clone()),
                    EstimatorSpec::OneStep(_) => {
                        let cfg = OneStepConfig::new(score.clone().expect("resolved"))
                            .with_c(self.config.grid_c);
                        fit_onestep_from(&problem, &self.summary, &cfg, lad)
                    }
                    EstimatorSpec::HodgesLehmann(_) => {
                        let nm = NelderMeadConfig {
                            start: if self.config.hl_from_origin {
                                HlStart::Origin
                            } else {
                                HlStart::Lad
                            },
                            ..NelderMeadConfig::default()
                        };
                        let j = score.as_ref().expect("resolved");
                        fit_hodges_lehmann_from(&problem, &self.summary, j, &nm, lad)
                    }
                };
                rep.map(|r| r.beta_hat).map_err(|e| format!("{e}"))
            })
            .collect()
    }

    /// Runs every replication in order.
    pub fn run(&self) -> BenchResult {
        let outcomes: Vec<Vec<_>> = (0..self.cells())
            .map(|cell| (0..self.config.m).map(|r| self.run_replication(cell, r)).collect())
            .collect();
        self.aggregate(&outcomes)
    }

    /// Aggregates `outcomes[cell][rep][estimator]` in replication order, so
    /// the result does not depend on how replications were scheduled.
    pub fn aggregate(&self, outcomes: &[Vec<Vec<core::result::Result<Vec<f64>, String>>>]) -> BenchResult {
        let k = self.config.model.k();
        let mut cells = Vec::new();
        for (ci, per_rep) in outcomes.iter().enumerate() {
            for (ei, spec) in self.config.estimators.iter().enumerate() {
                let mut bias = Neumaier::default();
                let mut mse = Neumaier::default();
                let mut per_coord: Vec<Neumaier> = (0..k).map(|_| Neumaier::default()).collect();
                let mut sq_errors = Vec::with_capacity(per_rep.len());
                let mut failures = 0;
                let mut first_error = None;
                for rep in per_rep {
                    match &rep[ei] {
                        Ok(beta) => {
                            let e = beta[0] - 1.0;
                            bias.add(e);
                            mse.add(e * e);
                            sq_errors.push(e * e);
                            for (acc, b) in per_coord.iter_mut().zip(beta) {
                                acc.add((b - 1.0).powi(2));
                            }
                        }
                        Err(msg) => {
                            failures += 1;
                            first_error.get_or_insert_with(|| msg.clone());
                        }
                    }
                }
                let ok = sq_errors.len();
                let mean = |s: &Neumaier| if ok > 0 { s.sum() / ok as f64 } else { f64::NAN };
                sq_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median_sq_error = if ok == 0 {
                    f64::NAN
                } else if ok % 2 == 1 {
                    sq_errors[ok / 2]
                } else {
                    0.5 * (sq_errors[ok / 2 - 1] + sq_errors[ok / 2])
                };
                cells.push(CellResult {
                    estimator: *spec,
                    error_params: self.config.error_params[ci],
                    bias: mean(&bias),
                    mse: mean(&mse),
                    median_sq_error,
                    per_coordinate_mse: per_coord.iter().map(mean).collect(),
                    replications: per_rep.len(),
                    failures,
                    flagged: failures * 10 > per_rep.len(),
                    first_error,
                });
            }
        }
        BenchResult {
            cells,
            config_echo: self.config.clone(),
        }
    }
}

/// Compensated summation.
#[derive(Clone, Copy, Debug, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellResult {
    pub estimator: EstimatorSpec,
    pub error_params: StableParams,
    /// Mean of β̂₁ − 1 over successful replications.
    pub bias: f64,
    /// Mean of (β̂₁ − 1)².
    pub mse: f64,
    pub median_sq_error: f64,
    pub per_coordinate_mse: Vec<f64>,
    pub replications: usize,
    pub failures: usize,
    /// More than 10% of the replications failed.
    pub flagged: bool,
    pub first_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchResult {
    pub cells: Vec<CellResult>,
    pub config_echo: BenchConfig,
}

impl BenchResult {
    pub fn cell(&self, estimator: &EstimatorSpec, params: &StableParams) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| &c.estimator == estimator && &c.error_params == params)
    }
}

/// Runs a whole benchmark sequentially.
pub fn run_bench(config: BenchConfig) -> Result<BenchResult> {
    Ok(Bench::new(config)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(Model::parse("k15").unwrap(), Model::Kn(15));
        assert_eq!(Model::parse("K2").unwrap().k(), 2);
        assert!(Model::parse("k0").is_err());
        assert_eq!(
            EstimatorSpec::parse("onestep:stable:1.2,0.5").unwrap(),
            EstimatorSpec::OneStep(ScoreSpec::Stable { alpha: 1.2, b: 0.5 })
        );
        assert_eq!(format!("{}", EstimatorSpec::parse("hl:vdw").unwrap()), "hl:vdw");
        assert!(EstimatorSpec::parse("ridge").is_err());
    }

    #[test]
    fn design_is_deterministic_and_bounded() {
        let a = generate_design(Model::Kn(15), 50, 9);
        assert_eq!(a, generate_design(Model::Kn(15), 50, 9));
        assert_eq!(a.ncols(), 15);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn noiseless_response_is_row_sum() {
        let c = generate_design(Model::K2, 5, 1);
        let y = generate_response(&c, None, 3);
        for i in 0..5 {
            assert_eq!(y[i], c[(i, 0)] + c[(i, 1)]);
        }
    }

    #[test]
    fn seeds_differ_across_cells_and_reps() {
        let s = replication_seed(7, 0, 0);
        assert_ne!(s, replication_seed(7, 1, 0));
        assert_ne!(s, replication_seed(7, 0, 1));
        assert_eq!(s, replication_seed(7, 0, 0));
    }

    #[test]
    fn compensated_sum() {
        let mut s = Neumaier::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.sum(), 2.0);
    }
}
