use nalgebra::DMatrix;
use onestep_core::harness::{
    generate_design, generate_response, run_bench, Bench, BenchConfig, EstimatorSpec, Model,
};
use onestep_core::linear_model::{fit_lad, preprocess};
use onestep_core::onestep::{
    fit_hodges_lehmann_from, fit_onestep, fit_onestep_from, interpolate_root, line_search,
    NelderMeadConfig, OneStepConfig,
};
use onestep_core::ranks::rank_statistic;
use onestep_core::scores::{ScoreFunction, ScoreSpec};
use onestep_core::{Error, StableParams};
use proptest::prelude::*;

fn sample(seed: u64, n: usize, k: usize, alpha: f64) -> (Vec<f64>, DMatrix<f64>) {
    let c = generate_design(Model::Kn(k), n, seed);
    let p = StableParams::standard(alpha, 0.0).unwrap();
    (generate_response(&c, Some(&p), seed ^ 0xabc), c)
}

#[test]
fn trace_brackets_the_first_sign_change() {
    let (y, c) = sample(11, 120, 2, 1.7);
    let (p, s) = preprocess(y, c, true).unwrap();
    let rep = fit_onestep(&p, &s, &OneStepConfig::new(ScoreFunction::van_der_waerden())).unwrap();
    let t = rep.trace.as_ref().unwrap();
    let last = t.evaluations.len() - 1;
    assert!(t.evaluations[..last].iter().all(|e| e.h >= 0.0));
    assert!(t.evaluations[last].h < 0.0);
    assert!((t.v_plus - t.v_minus - 1.0 / t.c).abs() < 1e-15);
    assert!(t.v_minus <= t.v_hat && t.v_hat <= t.v_plus);
    assert!((t.j_hat * t.v_hat - 1.0).abs() < 1e-14);
    assert_eq!(rep.cross_info_hat, Some(t.j_hat));
}

#[test]
fn update_reduces_the_statistic() {
    let (y, c) = sample(12, 200, 3, 2.0);
    let (p, s) = preprocess(y, c, true).unwrap();
    let j = ScoreFunction::van_der_waerden();
    let lad = fit_lad(&p).unwrap();
    let rep = fit_onestep_from(&p, &s, &OneStepConfig::new(j.clone()), &lad).unwrap();
    let norm = |b: &[f64]| rank_statistic(&p, &s, &j, b).unwrap().delta.iter().map(|v| v * v).sum::<f64>();
    assert!(norm(&rep.beta_hat) < norm(&lad.beta_hat));
}

#[test]
fn exact_fit_falls_back_to_lad() {
    let c = generate_design(Model::K2, 30, 3);
    let y = generate_response(&c, None, 0);
    let (p, s) = preprocess(y, c, true).unwrap();
    let rep = fit_onestep(&p, &s, &OneStepConfig::new(ScoreFunction::wilcoxon())).unwrap();
    assert!(rep.has_flag("exact_fit"));
    assert!(rep.beta_hat.iter().all(|b| (b - 1.0).abs() < 1e-9));
}

#[test]
fn hodges_lehmann_improves_on_its_start() {
    let (y, c) = sample(13, 80, 2, 1.8);
    let (p, s) = preprocess(y, c, true).unwrap();
    let j = ScoreFunction::wilcoxon();
    let lad = fit_lad(&p).unwrap();
    let hl = fit_hodges_lehmann_from(&p, &s, &j, &NelderMeadConfig::default(), &lad).unwrap();
    let norm = |b: &[f64]| rank_statistic(&p, &s, &j, b).unwrap().delta.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm(&hl.beta_hat) <= norm(&lad.beta_hat));
    assert!((hl.diagnostics["objective"] - norm(&hl.beta_hat)).abs() < 1e-12);
}

#[test]
fn failed_search_reports_its_trace() {
    let e = line_search(|_| Ok(1.0), 10.0, 5, 0.0).unwrap_err();
    match e {
        Error::LineSearch(t) => {
            assert_eq!(t.evaluations.len(), 6);
            assert!(t.v_hat.is_nan());
        }
        other => panic!("{other}"),
    }
}

#[test]
fn bench_is_deterministic_and_paired() {
    let mut cfg = BenchConfig::new(Model::K2, 40, 6);
    cfg.error_params = vec![StableParams::standard(1.5, 0.0).unwrap()];
    cfg.estimators = vec![
        EstimatorSpec::Ols,
        EstimatorSpec::Lad,
        EstimatorSpec::OneStep(ScoreSpec::Wilcoxon),
    ];
    let a = run_bench(cfg.clone()).unwrap();
    let b = run_bench(cfg.clone()).unwrap();
    assert_eq!(a, b);
    let bench = Bench::new(cfg).unwrap();
    // All estimators see the same replication.
    let r1 = bench.run_replication(0, 3);
    let r2 = bench.run_replication(0, 3);
    assert_eq!(r1, r2);
    for c in &a.cells {
        assert!(c.bias * c.bias <= c.mse + 1e-12);
        assert_eq!(c.replications, 6);
    }
}

#[test]
fn centered_design_has_zero_means() {
    let c = generate_design(Model::Kn(6), 50, 9);
    assert_eq!(c, generate_design(Model::Kn(6), 50, 9));
    assert!(c.iter().all(|v| (-1.0..=1.0).contains(v)));
    let (p, _) = preprocess(vec![0.0; 50], c, true).unwrap();
    for j in 0..6 {
        assert!(p.c().column(j).sum().abs() < 1e-10);
    }
}

#[test]
fn gaussian_response_residuals_have_variance_two() {
    let c = generate_design(Model::K2, 20_000, 1);
    let y = generate_response(&c, Some(&StableParams::gaussian()), 5);
    let e: Vec<f64> = (0..20_000).map(|i| y[i] - c.row(i).sum()).collect();
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
    // Standard error of the sample variance is about 2·√(2/n) = 0.02.
    assert!((var - 2.0).abs() < 0.1, "{var}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn interpolation_is_exact_on_affine_h(slope in 0.01f64..100.0, root in 0.001f64..5.0, c in 1.0f64..500.0) {
        // h(v) = slope · (root − v)
        let t = line_search(|v| Ok(slope * (root - v)), c, 10_000, 0.0).unwrap();
        prop_assert!((t.v_hat - root).abs() <= 1e-12 * root.max(1.0), "{} vs {}", t.v_hat, root);
        let direct = interpolate_root(0.0, 2.0 * root, slope * root, -slope * root);
        prop_assert!((direct - root).abs() <= 1e-12 * root.max(1.0));
    }

    #[test]
    fn onestep_is_regression_equivariant(seed in 0u64..1000, g in prop::collection::vec(-2.0f64..2.0, 2)) {
        let (y, c) = sample(seed, 60, 2, 1.5);
        let y2: Vec<f64> = (0..60).map(|i| y[i] + c[(i, 0)] * g[0] + c[(i, 1)] * g[1]).collect();
        let cfg = OneStepConfig::new(ScoreFunction::van_der_waerden());
        let (p, s) = preprocess(y, c.clone(), true).unwrap();
        let (p2, s2) = preprocess(y2, c, true).unwrap();
        let a = fit_onestep(&p, &s, &cfg).unwrap();
        let b = fit_onestep(&p2, &s2, &cfg).unwrap();
        for k in 0..2 {
            prop_assert!((b.beta_hat[k] - a.beta_hat[k] - g[k]).abs() < 1e-8);
        }
    }
}
