use landau_lab::measures::*;
use proptest::prelude::*;
use statrs::function::erf::{erf, erfc};
use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Brute-force `8 · max_a ∫_a^{a+s} g` on a fine grid of window positions.
fn brute_window_sup(g: impl Fn(f64) -> f64, s: f64, reach: f64) -> f64 {
    let mut best: f64 = 0.0;
    let steps = 4000;
    for k in 0..=steps {
        let a = -reach + 2.0 * reach * k as f64 / steps as f64;
        best = best.max(simpson(&g, a, a + s, 200));
    }
    8.0 * best
}

#[test]
fn density_normalization_by_quadrature() {
    for alpha in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let m = StretchedExpMeasure::new(alpha).unwrap();
        // w = t² removes the cusp at the origin for α < 1.
        let reach = 60f64.powf(0.5 / alpha);
        let total = 2.0 * simpson(|t| 2.0 * t * m.density(t * t), 0.0, reach, 200_000);
        assert!((total - 1.0).abs() < 1e-9, "alpha {alpha}: {total}");
    }
    let g = StretchedExpMeasure::new(2.0).unwrap();
    assert!((g.density(0.0) - 1.0 / PI.sqrt()).abs() < 1e-14);
    assert!((StretchedExpMeasure::new(1.0).unwrap().density(0.0) - 0.5).abs() < 1e-14);
}

#[test]
fn tails_against_closed_forms_and_quadrature() {
    let g = StretchedExpMeasure::new(2.0).unwrap();
    assert!((g.abs_tail(1.0) - erfc(1.0)).abs() < 1e-10);
    let quad = 2.0 * simpson(|w| g.density(w), 1.0, 12.0, 20_000);
    assert!((g.abs_tail(1.0) - quad).abs() < 1e-10);
    let e = StretchedExpMeasure::new(1.0).unwrap();
    assert!((e.abs_tail(3.0) - (-3.0f64).exp()).abs() < 1e-12);
    assert_eq!(e.tail_probability(0.0).unwrap().exact, 1.0);
    assert!(e.tail_probability(-1.0).is_err());
}

#[test]
fn tail_bound_holds_and_is_tight() {
    for alpha in [0.7, 1.0, 2.0, 3.0] {
        let m = StretchedExpMeasure::new(alpha).unwrap();
        let c = m.tail_bound_constant();
        let mut worst: f64 = 0.0;
        for k in 0..4000 {
            let eps = k as f64 * 0.005;
            let t = m.tail_probability(eps).unwrap();
            assert!(t.exact <= t.bound * (1.0 + 1e-9), "alpha {alpha} eps {eps}");
            worst = worst.max(t.exact / t.bound);
        }
        // The constant is the smallest that works, so the ratio touches 1.
        assert!(worst > 1.0 - 1e-4, "alpha {alpha}: best ratio {worst}, C = {c}");
    }
}

#[test]
fn gaussian_concentration_is_erf() {
    let g = StretchedExpMeasure::new(2.0).unwrap();
    assert!((g.concentration(1.0) - 8.0 * erf(0.5)).abs() < 1e-9);
    let brute = brute_window_sup(|w| g.density(w), 1.0, 2.0);
    assert!((g.concentration(1.0) - brute).abs() < 1e-8);
    let u = UniformMeasure::new(0.0, 1.0).unwrap();
    for s in [0.0, 0.25, 0.5, 1.0] {
        assert!((u.concentration(s) - 8.0 * s).abs() < 1e-14);
    }
    assert_eq!(u.concentration(3.0), 8.0);
    let p = PointMass { at: 1.7 };
    assert_eq!(p.concentration(0.0), 8.0);
    assert_eq!(p.concentration(2.0), 8.0);
}

#[test]
fn modified_concentration_against_brute_force() {
    let g = StretchedExpMeasure::new(2.0).unwrap();
    for (q, s) in [(2.0, 0.3), (4.0, 0.5), (1.0, 1.5), (2.0, 3.0)] {
        let dens = |t: f64| t.abs().powf(q) * g.density(t);
        let brute = brute_window_sup(dens, s, 6.0);
        let got = g.modified_concentration(q, s).unwrap();
        // Brute force only samples window positions, so it sits slightly below.
        assert!(got >= brute - 1e-7 && got - brute < 1e-5, "q {q} s {s}: {got} vs {brute}");
    }
    assert_eq!(g.modified_concentration(0.0, 0.7).unwrap(), g.concentration(0.7));
    assert_eq!(g.modified_concentration(3.0, 0.0).unwrap(), 0.0);
    assert!(g.modified_concentration(-1.0, 0.5).is_err());
    assert!(g.modified_concentration(1.0, -0.5).is_err());
}

#[test]
fn modified_concentration_with_heavy_weight() {
    // α = 1/2, q = 4: the weighted density peaks near 1e3 at t = 64.
    let m = StretchedExpMeasure::new(0.5).unwrap();
    for s in [0.1, 1.0] {
        let got = m.modified_concentration(4.0, s).unwrap();
        let brute = brute_window_sup(|t| t.abs().powi(4) * m.density(t), s, 80.0);
        assert!(got >= brute * (1.0 - 1e-9) && got <= brute * (1.0 + 1e-6), "s {s}: {got} vs {brute}");
    }
}

#[test]
fn modified_concentration_small_window_limit() {
    // The density of μ^(2) peaks at t = ±1 with height e^{-1}/√π.
    let g = StretchedExpMeasure::new(2.0).unwrap();
    let limit = 8.0 * (-1.0f64).exp() / PI.sqrt();
    for s in [1e-2, 1e-3, 1e-4] {
        let ratio = g.modified_concentration(2.0, s).unwrap() / s;
        assert!((ratio - limit).abs() < 10.0 * s, "s {s}: {ratio} vs {limit}");
    }
}

#[test]
fn modified_concentration_is_continuous_in_q() {
    let g = StretchedExpMeasure::new(2.0).unwrap();
    // Near q = 0 the factor |t|^q converges slowly, so compare shrinking steps.
    for q in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let at = g.modified_concentration(q, 0.5).unwrap();
        let coarse = (g.modified_concentration(q + 1e-2, 0.5).unwrap() - at).abs();
        let fine = (g.modified_concentration(q + 1e-4, 0.5).unwrap() - at).abs();
        assert!(fine < 1e-3 && fine < 0.05 * coarse, "q {q}: {coarse} then {fine}");
    }
}

#[test]
fn empirical_concentration_converges() {
    let g = StretchedExpMeasure::new(2.0).unwrap();
    let emp = EmpiricalMeasure::new(g.sample(42, 100_000)).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=40 {
        let s = 0.1 * k as f64;
        worst = worst.max((emp.concentration(s) - g.concentration(s)).abs());
    }
    assert!(worst <= 5e-2, "max deviation {worst}");
}

#[test]
fn sample_moments_and_tails() {
    let g = StretchedExpMeasure::new(2.0).unwrap();
    let n = 1_000_000;
    let x = g.sample(5, n);
    let m2: f64 = x.iter().map(|w| w * w).sum::<f64>() / n as f64;
    let var4: f64 = x.iter().map(|w| (w * w - m2).powi(2)).sum::<f64>() / n as f64;
    assert!((m2 - 0.5).abs() < 3.0 * (var4 / n as f64).sqrt(), "E ω² = {m2}");
    assert!((g.abs_moment(2.0) - 0.5).abs() < 1e-12);
    assert_eq!(g.sample(5, 10), g.sample(5, 10));
    for eps in [0.5, 1.0, 2.0] {
        let p = g.abs_tail(eps);
        let hits = x.iter().filter(|w| w.abs() >= eps).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits - p).abs() < 3.0 * se.max(1.0 / n as f64), "eps {eps}: {hits} vs {p}");
    }
    let e = StretchedExpMeasure::new(1.0).unwrap();
    let y = e.sample(6, n);
    let p = (-2.0f64).exp();
    let hits = y.iter().filter(|w| w.abs() > 2.0).count() as f64 / n as f64;
    assert!((hits - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_concentration_monotone_and_subadditive(
        alpha in 0.5f64..4.0, s1 in 0.0f64..5.0, s2 in 0.0f64..5.0,
    ) {
        let m = StretchedExpMeasure::new(alpha).unwrap();
        let (a, b, ab) = (m.concentration(s1), m.concentration(s2), m.concentration(s1 + s2));
        prop_assert!(ab + 1e-12 >= a.max(b));
        prop_assert!(ab <= a + b + 1e-12);
        prop_assert!(ab <= 8.0 + 1e-12);
    }

    #[test]
    fn empirical_concentration_monotone_and_subadditive(
        seed in 0u64..1000, s1 in 0.0f64..3.0, s2 in 0.0f64..3.0,
    ) {
        let m = StretchedExpMeasure::new(1.5).unwrap();
        let emp = EmpiricalMeasure::new(m.sample(seed, 500)).unwrap();
        let (a, b, ab) = (emp.concentration(s1), emp.concentration(s2), emp.concentration(s1 + s2));
        prop_assert!(ab >= a.max(b));
        prop_assert!(ab <= a + b + 1e-12);
    }

    #[test]
    fn modified_concentration_monotone_in_s(q in 0.0f64..4.0, s in 0.01f64..2.0, ds in 0.0f64..1.0) {
        let m = StretchedExpMeasure::new(2.0).unwrap();
        let a = m.modified_concentration(q, s).unwrap();
        let b = m.modified_concentration(q, s + ds).unwrap();
        prop_assert!(b + 1e-9 >= a);
    }

    #[test]
    fn density_is_even_and_positive(alpha in 0.3f64..5.0, w in -3.0f64..3.0) {
        let m = StretchedExpMeasure::new(alpha).unwrap();
        prop_assert_eq!(m.density(w), m.density(-w));
        prop_assert!(m.density(w) > 0.0);
        prop_assert!((m.mass(-w.abs(), w.abs()) - m.abs_cdf(w.abs())).abs() < 1e-12);
    }
}
