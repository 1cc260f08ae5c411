use onestep_core::quadrature::{line_breakpoints, Quadrature};
use onestep_core::special::normal_quantile;
use onestep_core::StableParams;
use proptest::prelude::*;
use std::f64::consts::PI;

const GRID: [(f64, f64); 13] = [
    (0.5, 0.0),
    (0.5, 0.5),
    (0.5, 1.0),
    (1.0, 0.0),
    (1.0, 0.5),
    (1.0, 1.0),
    (1.2, 0.0),
    (1.2, 0.5),
    (1.2, 1.0),
    (1.8, 0.0),
    (1.8, 0.5),
    (1.8, 1.0),
    (2.0, 0.0),
];

fn zeta(alpha: f64, b: f64) -> f64 {
    if alpha == 1.0 {
        0.0
    } else {
        -b * (PI * alpha / 2.0).tan()
    }
}

fn integrate_line(p: &StableParams, g: impl Fn(f64) -> f64) -> f64 {
    let mut pts = line_breakpoints(0.0, 1.0, 1e16);
    let z = zeta(p.alpha(), p.b());
    let at = pts.partition_point(|&x| x < z);
    pts.insert(at, z);
    Quadrature {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 4000,
    }
    .integrate_with_breaks(g, &pts)
    .unwrap()
    .value
}

#[test]
fn densities_integrate_to_one() {
    for (alpha, b) in GRID {
        let p = StableParams::standard(alpha, b).unwrap();
        let total = integrate_line(&p, |x| p.pdf(x).unwrap());
        assert!((total - 1.0).abs() < 1e-6, "({alpha}, {b}): {total}");
    }
}

#[test]
fn score_has_zero_mean() {
    for (alpha, b) in GRID {
        let p = StableParams::standard(alpha, b).unwrap();
        let m = integrate_line(&p, |x| {
            let (f, s) = p.pdf_and_score(x).unwrap();
            f * s
        });
        assert!(m.abs() < 1e-5, "({alpha}, {b}): {m}");
    }
}

#[test]
fn far_tails_follow_power_law() {
    // f(x) ~ α c_α (1 ± b) |x|^{−α−1}, c_α = Γ(α) sin(πα/2)/π.
    for (alpha, b) in GRID {
        if alpha == 2.0 {
            continue;
        }
        let p = StableParams::standard(alpha, b).unwrap();
        let c = libm::tgamma(alpha) * (PI * alpha / 2.0).sin() / PI;
        // At α = 1, ln h cancels a term of size |x|, so the check stops
        // at 1e10 there.
        let far: f64 = if alpha == 1.0 { 1e10 } else { 1e14 };
        for x in [-far, -1e10, 1e10, far] {
            let w = if x > 0.0 { 1.0 + b } else { 1.0 - b };
            let want = alpha * c * w * x.abs().powf(-alpha - 1.0);
            let got = p.pdf(x).unwrap();
            if w == 0.0 {
                assert!(got < 1e-12 * c * x.abs().powf(-alpha - 1.0), "({alpha}, {b}) x = {x}");
            } else {
                assert!((got / want - 1.0).abs() < 1e-4, "({alpha}, {b}) x = {x}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn closed_forms_pointwise() {
    let g = StableParams::gaussian();
    let c = StableParams::cauchy();
    let levy = StableParams::standard(0.5, 1.0).unwrap();
    for k in -40..=40 {
        let x = k as f64 * 0.25;
        let fg = (-x * x / 4.0).exp() / (2.0 * PI.sqrt());
        assert!((g.pdf(x).unwrap() - fg).abs() < 1e-7 * fg.max(1e-300) + 1e-300);
        let fc = 1.0 / (PI * (1.0 + x * x));
        assert!((c.pdf(x).unwrap() - fc).abs() < 1e-7 * fc);
        assert!((c.cdf(x).unwrap() - (0.5 + x.atan() / PI)).abs() < 1e-7);
        // Unit Lévy law shifted to start at −1.
        let y = x + 1.0;
        if y > 0.05 {
            let fl = (-1.0 / (2.0 * y)).exp() / ((2.0 * PI).sqrt() * y.powf(1.5));
            let got = levy.pdf(x).unwrap();
            assert!((got - fl).abs() < 1e-7 * fl, "x = {x}: {got} vs {fl}");
            let cl = libm::erfc((1.0 / (2.0 * y)).sqrt());
            assert!((levy.cdf(x).unwrap() - cl).abs() < 1e-7, "x = {x}");
        }
    }
}

#[test]
fn cdf_matches_integrated_density() {
    for (alpha, b) in [(1.5, 0.3), (0.8, -0.6), (1.8, 0.5)] {
        let p = StableParams::standard(alpha, b).unwrap();
        let q = Quadrature::with_rel_tol(1e-11);
        for (x0, x1) in [(-1.0, 0.5), (0.2, 3.0), (-4.0, -0.5)] {
            let mass = q.integrate(|x| p.pdf(x).unwrap(), x0, x1).unwrap().value;
            let diff = p.cdf(x1).unwrap() - p.cdf(x0).unwrap();
            assert!((mass - diff).abs() < 1e-6, "({alpha}, {b}) [{x0}, {x1}]");
        }
    }
}

#[test]
fn quantile_inverts_cdf() {
    for (alpha, b) in GRID {
        let p = StableParams::standard(alpha, b).unwrap();
        for k in 1..40 {
            let u = k as f64 / 40.0;
            let x = p.quantile(u).unwrap();
            assert!((p.cdf(x).unwrap() - u).abs() < 1e-8, "({alpha}, {b}) u = {u}");
        }
        for x in [-3.0, -1.0, -0.2, 0.4, 2.5] {
            let u = p.cdf(x).unwrap();
            if u > 1e-6 && u < 1.0 - 1e-6 {
                let back = p.quantile(u).unwrap();
                assert!((back - x).abs() < 1e-6 * (1.0 + x.abs()), "({alpha}, {b}) x = {x}");
            }
        }
    }
}

#[test]
fn quantile_is_increasing() {
    let p = StableParams::standard(0.7, 0.9).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for k in 1..400 {
        let x = p.quantile(k as f64 / 400.0).unwrap();
        assert!(x > prev);
        prev = x;
    }
}

#[test]
fn extreme_tail_quantiles_are_finite() {
    for (alpha, b) in GRID {
        let p = StableParams::standard(alpha, b).unwrap();
        let lo = p.quantile(1e-9).unwrap();
        let hi = p.quantile(1.0 - 1e-9).unwrap();
        assert!(lo.is_finite() && hi.is_finite() && lo < hi, "({alpha}, {b})");
    }
}

fn ks_distance(p: &StableParams, mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = p.cdf(x).unwrap();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampler_matches_cdf_kolmogorov_smirnov() {
    // 1% critical value of the one-sample KS statistic.
    let crit = 1.628 / 100.0;
    for (alpha, b) in [(1.8, 0.5), (1.2, -0.4), (0.5, 0.5), (1.0, 0.7)] {
        let p = StableParams::standard(alpha, b).unwrap();
        let d = ks_distance(&p, p.sample(10_000, 2024));
        assert!(d < crit, "({alpha}, {b}): D = {d}");
    }
}

#[test]
fn table_interpolation_matches_direct_evaluation() {
    for (alpha, b) in [(1.8, 0.0), (1.8, 0.5), (0.5, 0.5), (1.2, 0.5), (1.0, 0.0)] {
        let p = StableParams::standard(alpha, b).unwrap();
        let t = p.build_table(2001).unwrap();
        for k in 0..97 {
            // Off-grid points, including the tails.
            let u = 1e-4 + (1.0 - 2e-4) * (k as f64 + 0.37) / 97.0;
            let x = p.quantile(u).unwrap();
            let direct = p.score(x).unwrap();
            let tab = t.score(u).value;
            assert!((tab - direct).abs() < 1e-4, "({alpha}, {b}) u = {u}: {tab} vs {direct}");
            assert!((t.quantile(u).value - x).abs() < 1e-6 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn gaussian_table_score_is_scaled_normal_quantile() {
    let t = StableParams::gaussian().build_table(2001).unwrap();
    for k in 1..99 {
        let u = k as f64 / 99.0;
        let want = normal_quantile(u) / 2f64.sqrt();
        assert!((t.score(u).value - want).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn location_scale_consistency(
        alpha in 0.4f64..2.0,
        b in -1.0f64..1.0,
        gamma in 0.1f64..10.0,
        delta in -5.0f64..5.0,
        z in -4.0f64..4.0,
        u in 0.01f64..0.99,
    ) {
        let std = StableParams::standard(alpha, b).unwrap();
        let p = StableParams::new(alpha, b, gamma, delta).unwrap();
        let x = delta + gamma * z;
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-6 * b.abs().max(1e-12);
        prop_assert!(rel(p.pdf(x).unwrap(), std.pdf(z).unwrap() / gamma));
        prop_assert!(rel(p.score(x).unwrap(), std.score(z).unwrap() / gamma));
        prop_assert!((p.cdf(x).unwrap() - std.cdf(z).unwrap()).abs() < 1e-12);
        prop_assert!(rel(p.quantile(u).unwrap(), delta + gamma * std.quantile(u).unwrap()));
    }

    #[test]
    fn symmetric_score_is_odd(alpha in 0.4f64..2.0, x in 0.0f64..20.0) {
        let p = StableParams::standard(alpha, 0.0).unwrap();
        let (a, b) = (p.score(x).unwrap(), p.score(-x).unwrap());
        prop_assert!((a + b).abs() <= 1e-9 * a.abs().max(1e-9));
    }

    #[test]
    fn cdf_is_monotone(alpha in 0.4f64..2.0, b in -1.0f64..1.0, x in -30.0f64..30.0, dx in 1e-3f64..5.0) {
        let p = StableParams::standard(alpha, b).unwrap();
        prop_assert!(p.cdf(x + dx).unwrap() >= p.cdf(x).unwrap() - 1e-14);
    }
}
