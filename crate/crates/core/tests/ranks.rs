use nalgebra::DMatrix;
use onestep_core::linear_model::{preprocess, DesignSummary, RegressionProblem};
use onestep_core::ranks::{
    null_covariance, rank_residuals, rank_statistic_with, weighted_delta, RankScores,
};
use onestep_core::scores::ScoreFunction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64, n: usize, k: usize) -> (RegressionProblem, DesignSummary) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
    let y = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    preprocess(y, c, true).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n);
            out.push(q);
        }
    }
    out
}

fn scores() -> Vec<ScoreFunction> {
    vec![
        ScoreFunction::van_der_waerden(),
        ScoreFunction::wilcoxon(),
        ScoreFunction::laplace(),
        ScoreFunction::cauchy(),
    ]
}

#[test]
fn permutation_mean_and_covariance_are_exact() {
    for n in 3..=7 {
        let k = if n > 4 { 3 } else { 1 };
        let (p, s) = setup(n as u64, n, k);
        for j in scores() {
            let a = RankScores::new(&j, n);
            let perms = permutations(n);
            let m = perms.len() as f64;
            let mut mean = vec![0.0; k];
            let mut cov = DMatrix::<f64>::zeros(k, k);
            for r in &perms {
                let w: Vec<f64> = r.iter().map(|&ri| a.get(ri)).collect();
                let d = weighted_delta(&p, &s, &w);
                for i in 0..k {
                    mean[i] += d[i] / m;
                    for l in 0..k {
                        cov[(i, l)] += d[i] * d[l] / m;
                    }
                }
            }
            let want = null_covariance(&s, &a);
            for i in 0..k {
                assert!(mean[i].abs() < 1e-10, "n={n} mean {mean:?}");
                for l in 0..k {
                    assert!(
                        (cov[(i, l)] - want[(i, l)]).abs() < 1e-10,
                        "n={n} {}: {} vs {}",
                        j.tag(),
                        cov[(i, l)],
                        want[(i, l)]
                    );
                }
            }
        }
    }
}

#[test]
fn null_covariance_is_scaled_identity() {
    let (_, s) = setup(3, 30, 4);
    let a = RankScores::new(&ScoreFunction::wilcoxon(), 30);
    let v = null_covariance(&s, &a);
    for i in 0..4 {
        for l in 0..4 {
            let want = if i == l { a.variance() } else { 0.0 };
            assert!((v[(i, l)] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_scores_contribute_nothing() {
    // ℂ is centered, so adding a constant to every weight leaves Δ unchanged.
    let (p, s) = setup(5, 25, 2);
    let w: Vec<f64> = (0..25).map(|i| (i as f64).sin()).collect();
    let w3: Vec<f64> = w.iter().map(|v| v + 3.0).collect();
    let (d, d3) = (weighted_delta(&p, &s, &w), weighted_delta(&p, &s, &w3));
    for (x, y) in d.iter().zip(&d3) {
        assert!((x - y).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ranks_form_a_permutation(z in prop::collection::vec(-1e3f64..1e3, 1..50)) {
        let r = rank_residuals(&z).unwrap();
        let mut sorted = r.ranks.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (1..=z.len()).collect::<Vec<_>>());
        for i in 0..z.len() {
            for l in 0..z.len() {
                if z[i] < z[l] {
                    prop_assert!(r.ranks[i] < r.ranks[l]);
                }
            }
        }
    }

    #[test]
    fn ranks_invariant_under_increasing_maps(z in prop::collection::vec(-10.0f64..10.0, 1..40), a in -5.0f64..5.0, b in 0.01f64..10.0) {
        let r = rank_residuals(&z).unwrap();
        let t: Vec<f64> = z.iter().map(|v| a + b * v.powi(3)).collect();
        prop_assert_eq!(r, rank_residuals(&t).unwrap());
    }

    #[test]
    fn statistic_ignores_location(seed in any::<u64>(), shift in -100.0f64..100.0) {
        let (p, s) = setup(seed, 30, 2);
        let a = RankScores::new(&ScoreFunction::van_der_waerden(), 30);
        let y2: Vec<f64> = p.y().iter().map(|v| v + shift).collect();
        let p2 = p.with_response(y2).unwrap();
        let beta = [0.3, -0.7];
        let d1 = rank_statistic_with(&p, &s, &a, &beta).unwrap();
        let d2 = rank_statistic_with(&p2, &s, &a, &beta).unwrap();
        // The shift can only reorder exactly tied residuals.
        for (x, y) in d1.iter().zip(&d2) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn statistic_is_regression_equivariant(seed in any::<u64>(), g in prop::collection::vec(-3.0f64..3.0, 2)) {
        let (p, s) = setup(seed, 40, 2);
        let a = RankScores::new(&ScoreFunction::wilcoxon(), 40);
        let beta = [0.5, 0.25];
        let y2: Vec<f64> = p.y().iter().zip(p.fitted(&g)).map(|(y, f)| y + f).collect();
        let p2 = p.with_response(y2).unwrap();
        let moved = [beta[0] + g[0], beta[1] + g[1]];
        let d1 = rank_statistic_with(&p, &s, &a, &beta).unwrap();
        let d2 = rank_statistic_with(&p2, &s, &a, &moved).unwrap();
        for (x, y) in d1.iter().zip(&d2) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
