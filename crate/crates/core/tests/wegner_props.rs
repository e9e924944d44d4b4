mod common;

use common::jacobi_eigen;
use faer::Mat;
use landau_lab::measures::{EmpiricalMeasure, StretchedExpMeasure, UniformMeasure, SiteDistribution};
use landau_lab::model::*;
use landau_lab::spectral::EigenCounter;
use landau_lab::wegner::*;
use num_complex::Complex64 as c64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(n: usize, site: usize, seed: u64, measure: AveragingMeasure) -> SpectralAveragingProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h0 = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        h0[(i, i)] = c64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in 0..i {
            let z = c64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            h0[(i, j)] = z;
            h0[(j, i)] = z.conj();
        }
    }
    let w = Mat::from_fn(n, n, |i, j| if i == j && i == site { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
    let mut phi: Vec<c64> = (0..n).map(|_| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    phi.iter_mut().for_each(|z| *z /= norm);
    SpectralAveragingProblem { h0, w, phi, interval: (-0.3, 0.4), measure }
}

/// `⟨φ, W E_{H₀+sW}(I) W φ⟩` for a rank-one site indicator W, via Jacobi on
/// the real embedding (each eigenvalue appears twice there).
fn oracle_integrand(p: &SpectralAveragingProblem, site: usize, s: f64) -> f64 {
    let n = p.h0.nrows();
    let mut emb = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let mut z = p.h0[(i, j)];
            if i == j && i == site {
                z += s;
            }
            emb[i][j] = z.re;
            emb[i + n][j + n] = z.re;
            emb[i + n][j] = z.im;
            emb[i][j + n] = -z.im;
        }
    }
    let eig = jacobi_eigen(emb);
    let (a, b) = p.interval;
    let mut weight = 0.0;
    for (k, &e) in eig.values.iter().enumerate() {
        if e > a && e <= b {
            let v = &eig.vectors[k];
            weight += 0.5 * (v[site] * v[site] + v[site + n] * v[site + n]);
        }
    }
    p.phi[site].norm_sqr() * weight
}

#[test]
fn averaging_lhs_matches_jacobi_quadrature() {
    for seed in 0..4 {
        let site = seed as usize % 6;
        let p = random_problem(6, site, seed, AveragingMeasure::Uniform { lo: -1.0, hi: 1.0 });
        let trial = p.evaluate(0, 1e-9, 200_000).unwrap();
        // Midpoint rule; the integrand is piecewise smooth with O(1) jumps.
        let m = 8000;
        let h = 2.0 / m as f64;
        let oracle: f64 = (0..m).map(|k| oracle_integrand(&p, site, -1.0 + (k as f64 + 0.5) * h) * 0.5 * h).sum();
        assert!((trial.lhs - oracle).abs() < 2e-3, "seed {seed}: {} vs {oracle}", trial.lhs);
        assert!(trial.passed);
        assert!((trial.rhs - 8.0 * 0.35).abs() < 1e-12);
    }
}

#[test]
fn empirical_measure_agrees_with_density_measure() {
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let dens = random_problem(8, 3, 11, AveragingMeasure::StretchedExp { alpha: 2.0 });
    let exact = dens.evaluate(0, 1e-9, 200_000).unwrap();
    let samples = law.sample(12, 4000);
    let mut emp = dens.clone();
    emp.measure = AveragingMeasure::Empirical { samples: samples.clone() };
    let mc = emp.evaluate(0, 1e-9, 200_000).unwrap();
    assert!((mc.lhs - exact.lhs).abs() < 3.0 * mc.error + exact.error, "{} vs {}", mc.lhs, exact.lhs);
    let direct = EmpiricalMeasure::new(samples).unwrap();
    assert_eq!(mc.rhs, landau_lab::measures::Concentration::concentration(&direct, 0.7));
}

#[test]
fn scalar_and_zero_perturbation_cases() {
    let one = |v: f64| Mat::from_fn(1, 1, |_, _| c64::new(v, 0.0));
    let p = SpectralAveragingProblem {
        h0: one(0.0),
        w: one(1.0),
        phi: vec![c64::new(1.0, 0.0)],
        interval: (0.2, 0.4),
        measure: AveragingMeasure::Uniform { lo: 0.0, hi: 1.0 },
    };
    let t = p.evaluate(0, 1e-12, 10_000).unwrap();
    assert!((t.lhs - 0.2).abs() < 1e-9 && (t.rhs - 1.6).abs() < 1e-12 && t.passed);
    let mut z = random_problem(6, 0, 3, AveragingMeasure::StretchedExp { alpha: 2.0 });
    z.w = Mat::zeros(6, 6);
    let t = z.evaluate(0, 1e-9, 10_000).unwrap();
    assert!(t.lhs.abs() < 1e-14 && t.passed);
    let mut bad = z.clone();
    bad.phi[0] *= 2.0;
    assert!(bad.evaluate(0, 1e-9, 10_000).is_err());
    bad.phi = vec![c64::new(1.0, 0.0); 3];
    assert!(bad.evaluate(0, 1e-9, 10_000).is_err());
}

#[test]
fn randomized_suite_has_no_violations() {
    let config = SpectralAveragingConfig { dim: 24, ..Default::default() };
    let trials = spectral_averaging_check(&config, 10, 5).unwrap();
    assert_eq!(trials.len(), 10);
    assert!(trials.iter().all(|t| t.passed && t.converged && t.lhs >= -1e-12));
    assert!(spectral_averaging_check(&config, 0, 5).is_err());
    let again = spectral_averaging_check(&config, 10, 5).unwrap();
    assert_eq!(trials.iter().map(|t| t.lhs).collect::<Vec<_>>(), again.iter().map(|t| t.lhs).collect::<Vec<_>>());
}

#[test]
fn sgee_trivial_intervals() {
    let s = ModelSpec::new(6, 1, 3, 0.5, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let above = sgee_trace_check(&s, &law, (50.0, 60.0), 0.0, &[6], 5, 1).unwrap();
    assert_eq!(above.cells[0].mean, 0.0);
    let all = sgee_trace_check(&s, &law, (-50.0, 60.0), 0.0, &[6], 5, 1).unwrap();
    assert!((all.cells[0].mean - 1.0).abs() < 1e-12 && all.cells[0].stderr < 1e-12);
    assert!(sgee_trace_check(&s, &law, (0.0, 1.0), -1.0, &[6], 5, 1).is_err());
    assert!(sgee_trace_check(&s, &law, (1.0, 0.0), 0.0, &[6], 5, 1).is_err());
    assert!(sgee_trace_check(&s, &law, (0.0, 1.0), 0.0, &[], 5, 1).is_err());
}

#[test]
fn gap_survival_limits() {
    let s = ModelSpec::new(6, 1, 3, 0.5, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let big = gap_survival_probability(&s, &law, 50.0, 40, 2).unwrap();
    assert_eq!(big.probability.estimate, 1.0);
    assert_eq!(big.probability.closed_form, Some(1.0));
    assert_eq!(big.conditioned, 40);
    assert_eq!(big.weyl_violations, 0);
    let exact = (1.0 - law.abs_tail(1.5)).powi(36);
    let mid = gap_survival_probability(&s, &law, 1.5, 400, 2).unwrap();
    assert!((mid.probability.closed_form.unwrap() - exact).abs() < 1e-12);
    assert!(mid.probability.sigma_distance().unwrap() < 4.0);
    assert_eq!(mid.weyl_violations, 0);
    assert!(gap_survival_probability(&s, &law, 0.0, 10, 2).is_err());
    assert!(gap_survival_probability(&s.with_lambda(0.0), &law, 1.0, 10, 2).is_err());
}

#[test]
fn clean_gap_control_is_empty() {
    let s = ModelSpec::new(10, 1, 5, 0.2, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let (lo, hi) = regime_region(&s, WegnerRegime::SpectralGap, 0.2).unwrap();
    let scan = WegnerScan {
        regime: WegnerRegime::SpectralGap,
        intervals: vec![EnergyInterval::new(0.5 * (lo + hi), 0.1 * (hi - lo))],
        sizes: vec![10],
        lambdas: vec![0.0],
        q_values: vec![0.0],
        n_realizations: 30,
        base_seed: 0,
    };
    let report = wegner_scan(&s, &law, &scan).unwrap();
    assert!(report.cells.iter().all(|c| c.max_trace == 0 && c.mean_trace == 0.0));
    let mut outside = scan.clone();
    outside.intervals = vec![EnergyInterval::new(lo - 0.2, 0.05)];
    assert!(wegner_scan(&s, &law, &outside).is_err());
    let mut empty = scan.clone();
    empty.sizes.clear();
    assert!(wegner_scan(&s, &law, &empty).is_err());
    let mut few = scan;
    few.n_realizations = 3;
    assert!(wegner_scan(&s, &law, &few).is_err());
}

#[test]
fn band_scan_is_linear_in_the_count() {
    // Mean trace of a union of adjacent intervals is the sum of the parts.
    let s = ModelSpec::new(12, 1, 6, 0.3, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let parts = [EnergyInterval::new(0.9, 0.02), EnergyInterval::new(0.92, 0.02), EnergyInterval::new(0.91, 0.04)];
    let scan = WegnerScan {
        regime: WegnerRegime::General,
        intervals: parts.to_vec(),
        sizes: vec![12],
        lambdas: vec![0.3],
        q_values: vec![0.0, 2.0],
        n_realizations: 30,
        base_seed: 4,
    };
    let r = wegner_scan(&s, &law, &scan).unwrap();
    let m = |iv: &EnergyInterval| r.cell(12, iv, 0.3).unwrap().mean_trace;
    assert!((m(&parts[0]) + m(&parts[1]) - m(&parts[2])).abs() < 1e-9);
    for fit in &r.k_w {
        assert!(fit.k_w >= fit.k_min);
    }
}

fn fixed_counter() -> EigenCounter {
    let s = ModelSpec::new(8, 1, 4, 0.7, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let d = DisorderRealization::draw(&law, &s, 77);
    EigenCounter::new(&build_random_hamiltonian(&s, &d).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traces_are_monotone_and_additive(a in -1.0f64..9.0, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0) {
        let c = fixed_counter();
        let (b, e) = (a + d1, a + d1 + d2);
        let first = c.count_in_interval(a, b).unwrap();
        let second = c.count_in_interval(b, e).unwrap();
        let union = c.count_in_interval(a, e).unwrap();
        prop_assert_eq!(first + second, union);
        prop_assert!(union >= first.max(second));
    }

    #[test]
    fn uniform_samples_stay_in_support(seed in 0u64..500) {
        let law = UniformMeasure::new(-1.0, 1.0).unwrap();
        let x = law.sample(seed, 200);
        prop_assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
