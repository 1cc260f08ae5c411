use std::f64::consts::{PI, SQRT_2};

use onestep_core::efficiency::{are, are_curve, are_stable, are_vs_lad_by_density};
use onestep_core::scores::{j_cross, j_square, unit_integral, ScoreFunction, ScoreSpec};
use onestep_core::special::normal_quantile;
use onestep_core::StableParams;
use proptest::prelude::*;

fn classical() -> Vec<ScoreFunction> {
    vec![
        ScoreFunction::van_der_waerden(),
        ScoreFunction::wilcoxon(),
        ScoreFunction::laplace(),
        ScoreFunction::cauchy(),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn square_integrals_by_independent_quadrature() {
    // Midpoint sums on a fine grid, written without the library integrator.
    let m = 400_000;
    for j in classical() {
        let s: f64 = (0..m)
            .map(|i| {
                let u = (i as f64 + 0.5) / m as f64;
                j.eval(u).powi(2)
            })
            .sum::<f64>()
            / m as f64;
        assert!(rel(s, j_square(&j)) < 2e-4, "{}: {s} vs {}", j.tag(), j_square(&j));
    }
}

#[test]
fn gaussian_cross_informations() {
    // Under g = N(0, 2), φ_g(G⁻¹(u)) = Φ⁻¹(u)/√2.
    let g = ScoreFunction::stable_from_params(2.0, 0.0).unwrap();
    let vdw = ScoreFunction::van_der_waerden();
    let c = j_cross(&vdw, &g).unwrap();
    assert!(rel(c, 1.0 / SQRT_2) < 1e-5, "{c}");
    let want_w = (PI / 3.0).sqrt() / SQRT_2;
    assert!(rel(j_cross(&ScoreFunction::wilcoxon(), &g).unwrap(), want_w) < 1e-5);
    let direct = unit_integral(|u| normal_quantile(u).powi(2), &[], 1e-10).unwrap();
    assert!(rel(direct, 1.0) < 1e-8);
}

#[test]
fn table_one_gaussian_column() {
    let g = StableParams::standard(2.0, 0.0).unwrap();
    let lap = ScoreFunction::laplace();
    let vdw = are_stable(&ScoreFunction::van_der_waerden(), &lap, &g).unwrap();
    let w = are_stable(&ScoreFunction::wilcoxon(), &lap, &g).unwrap();
    let c = are_stable(&ScoreFunction::cauchy(), &lap, &g).unwrap();
    assert!((vdw - PI / 2.0).abs() < 1e-4, "{vdw}");
    assert!((w - 1.5).abs() < 1e-4, "{w}");
    assert!((c - 0.6759).abs() < 1e-3, "{c}");
}

#[test]
fn laplace_cross_information_is_density_at_median() {
    for (alpha, b) in [(2.0, 0.0), (1.0, 0.0), (1.8, 0.5), (1.2, -0.3)] {
        let p = StableParams::standard(alpha, b).unwrap();
        let g = ScoreFunction::stable_from_params(alpha, b).unwrap();
        let m = p.median().unwrap();
        let want = 2.0 * SQRT_2 * p.pdf(m).unwrap();
        let got = j_cross(&ScoreFunction::laplace(), &g).unwrap();
        assert!(rel(got, want) < 1e-4, "({alpha},{b}): {got} vs {want}");
        let via = are_vs_lad_by_density(&ScoreFunction::wilcoxon(), &g, p.pdf(m).unwrap()).unwrap();
        let direct = are(&ScoreFunction::wilcoxon(), &ScoreFunction::laplace(), &g).unwrap();
        assert!(rel(via, direct) < 1e-4);
    }
}

#[test]
fn own_score_is_optimal() {
    let g = ScoreFunction::stable_from_params(1.5, 0.3).unwrap();
    for j in classical() {
        assert!(are(&g, &j, &g).unwrap() >= 1.0 - 1e-9, "{}", j.tag());
    }
    assert!((are(&g, &g, &g).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn stable_score_dominates_lad_on_a_coarse_curve() {
    let j = ScoreFunction::stable_from_params(1.4, 0.0).unwrap();
    let curve = are_curve(&j, &ScoreFunction::laplace(), &[1.1, 1.5, 1.9], 0.0).unwrap();
    for (a, v) in curve {
        assert!(v > 1.0, "alpha {a}: {v}");
    }
}

#[test]
fn spec_strings_round_trip() {
    for s in ["vdw", "wilcoxon", "laplace", "cauchy", "stable:1.8,0.5"] {
        let spec = ScoreSpec::parse(s).unwrap();
        assert_eq!(ScoreSpec::parse(&spec.to_string()).unwrap(), spec);
    }
    assert!(ScoreSpec::parse("stable:2.5,0").is_err());
    assert!(ScoreSpec::parse("stable:1.5").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn are_chain_rule(i in 0usize..4, l in 0usize..4, m in 0usize..4, d in 0usize..4) {
        let s = classical();
        let g = &s[d];
        prop_assume!(j_cross(&s[l], g).unwrap().abs() > 1e-6 && j_cross(&s[m], g).unwrap().abs() > 1e-6);
        let left = are(&s[i], &s[l], g).unwrap() * are(&s[l], &s[m], g).unwrap();
        let right = are(&s[i], &s[m], g).unwrap();
        prop_assert!((left - right).abs() <= 1e-6 * right.abs().max(1e-12));
    }

    #[test]
    fn are_is_scale_free(i in 0usize..4, l in 0usize..4, k1 in 0.01f64..100.0, k2 in 0.01f64..100.0) {
        let s = classical();
        let g = &s[0];
        let base = are(&s[i], &s[l], g).unwrap();
        let scaled = are(&s[i].scaled(k1).unwrap(), &s[l].scaled(k2).unwrap(), g).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * base);
    }

    #[test]
    fn custom_scores_interpolate_their_knots(knots in prop::collection::vec(-5.0f64..5.0, 3..12)) {
        let n = knots.len();
        let u: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let mut j = knots.clone();
        j.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assume!(j[n - 1] - j[0] > 1e-3);
        let f = ScoreFunction::custom(u.clone(), j.clone()).unwrap();
        for (uk, jk) in u.iter().zip(&j) {
            prop_assert!((f.eval(*uk) - jk).abs() < 1e-12);
        }
    }
}
