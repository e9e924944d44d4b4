mod common;

use common::{oracle_eigenvalues, random_hermitian, real_embedding};
use faer::Mat;
use landau_lab::error::LabError;
use landau_lab::inertia::DenseHermitian;
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::*;
use landau_lab::spectral::*;
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shifts at least `gap` away from every eigenvalue of `ev`.
fn safe_shifts(ev: &[f64], n: usize, gap: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (ev[0] - 1.0, ev[ev.len() - 1] + 1.0);
    let mut out = Vec::new();
    while out.len() < n {
        let s = rng.random_range(lo..hi);
        if ev.iter().all(|e| (e - s).abs() > gap) {
            out.push(s);
        }
    }
    out
}

#[test]
fn inertia_counts_match_jacobi_oracle() {
    for seed in 0..12u64 {
        let n = 10 + 5 * seed as usize;
        let h = random_hermitian(n, 6, seed);
        let ev = oracle_eigenvalues(&h);
        let counter = EigenCounter::new(&h).unwrap();
        for s in safe_shifts(&ev, 20, 1e-6, seed + 100) {
            let expect = ev.iter().filter(|&&e| e <= s).count();
            assert_eq!(counter.count_below(s).unwrap(), expect, "n={n} shift={s}");
            let inertia = DenseHermitian::from_operator(&h).shifted_inertia(s).unwrap();
            assert_eq!(inertia.negative + inertia.zero + inertia.positive, n);
            assert_eq!(inertia.negative, expect);
        }
        assert_eq!(counter.count_below(f64::INFINITY).unwrap(), n);
        assert_eq!(counter.count_below(f64::NEG_INFINITY).unwrap(), 0);
    }
}

#[test]
fn interval_counts_on_the_lattice_match_oracle() {
    let s = ModelSpec::new(6, 1, 3, 0.5, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let h = build_random_hamiltonian(&s, &DisorderRealization::draw(&law, &s, 4)).unwrap();
    let ev = oracle_eigenvalues(&h);
    let shifts = safe_shifts(&ev, 12, 1e-6, 9);
    for w in shifts.windows(2) {
        let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
        let expect = ev.iter().filter(|&&e| e > a && e <= b).count();
        assert_eq!(count_in_interval(&h, a, b).unwrap(), expect);
    }
}

#[test]
fn eigenpairs_have_small_residuals() {
    let h = random_hermitian(80, 8, 3);
    let sp = full_spectrum_with_vectors(&h).unwrap();
    assert!(sp.max_residual(&h).unwrap() < 1e-10);
    let oracle = oracle_eigenvalues(&h);
    for (a, b) in sp.eigenvalues.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn fermi_projection_is_the_occupied_projector() {
    let s = ModelSpec::new(6, 1, 3, 0.3, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let h = build_random_hamiltonian(&s, &DisorderRealization::draw(&law, &s, 1)).unwrap();
    let ev = full_spectrum(&h).unwrap().eigenvalues;
    let e_f = 0.5 * (ev[11] + ev[12]);
    let p = fermi_projection(&h, e_f).unwrap();
    let n = p.nrows();
    let trace: c64 = (0..n).map(|i| p[(i, i)]).sum();
    assert!((trace.re - 12.0).abs() < 1e-9 && trace.im.abs() < 1e-9);
    let p2 = &p * &p;
    let hd = h.to_dense();
    let comm = &hd * &p - &p * &hd;
    let mut worst_idem: f64 = 0.0;
    let mut worst_herm: f64 = 0.0;
    let mut worst_comm: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst_idem = worst_idem.max((p2[(i, j)] - p[(i, j)]).norm());
            worst_herm = worst_herm.max((p[(i, j)] - p[(j, i)].conj()).norm());
            worst_comm = worst_comm.max(comm[(i, j)].norm());
        }
    }
    assert!(worst_idem < 1e-10, "P² ≠ P: {worst_idem}");
    assert!(worst_herm < 1e-12);
    assert!(worst_comm < 1e-9, "[H, P] = {worst_comm}");
}

#[test]
fn fermi_level_on_an_eigenvalue_is_rejected() {
    let s = ModelSpec::new(6, 1, 3, 0.0, 2.0);
    let h = build_clean_hamiltonian(&s).unwrap();
    let ev = full_spectrum(&h).unwrap().eigenvalues;
    match fermi_projection(&h, ev[5]) {
        Err(LabError::DegenerateFermiLevel { distance, .. }) => assert!(distance < 1e-10),
        other => panic!("expected degenerate Fermi level, got {other:?}"),
    }
}

#[test]
fn clean_ids_sits_on_rational_plateaus() {
    // In a gap of the flux 1/5 model, exactly k/5 of the states lie below.
    let s = ModelSpec::new(20, 1, 5, 0.0, 2.0);
    let bands = clean_band_structure(&s).unwrap();
    assert_eq!(bands.len(), 5);
    let mut grid: Vec<f64> = bands.windows(2).map(|w| 0.5 * (w[0].hi + w[1].lo)).collect();
    grid.insert(0, bands[0].lo - 0.5);
    grid.push(bands[4].hi + 0.5);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let curve = ids_estimate(&s, &law, &grid, 2, 0).unwrap();
    let expect = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    for (m, e) in curve.mean.iter().zip(expect) {
        assert!((m - e).abs() < 1e-12, "{m} vs {e}");
    }
    assert!(curve.stderr.iter().all(|&x| x == 0.0));
}

#[test]
fn disordered_ids_is_monotone_and_bounded() {
    let s = ModelSpec::new(8, 1, 4, 0.6, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let grid: Vec<f64> = (0..=40).map(|k| -2.0 + 0.3 * k as f64).collect();
    let curve = ids_estimate(&s, &law, &grid, 6, 7).unwrap();
    assert!(curve.is_nondecreasing());
    assert!(curve.mean.iter().all(|&m| (0.0..=1.0).contains(&m)));
    assert_eq!(*curve.mean.last().unwrap(), 1.0);
    let counts = ids_counts(&s, &law, &grid, 6, 7).unwrap();
    for c in &counts {
        assert!(c.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn ids_modulus_of_a_linear_curve() {
    let energies: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let curve = IdsCurve {
        mean: energies.iter().map(|e| 0.5 * e).collect(),
        stderr: vec![0.0; 11],
        energies,
        n_realizations: 1,
    };
    assert!((ids_modulus(&curve, 0.2).unwrap() - 0.1).abs() < 1e-12);
    assert!(ids_modulus(&curve, 0.05).is_err());
    let fit = holder_fit(&curve, &[0.1, 0.2, 0.4]).unwrap();
    assert!((fit.exponent - 1.0).abs() < 1e-9);
}

#[test]
fn ids_rejects_bad_grids() {
    let s = ModelSpec::new(6, 1, 3, 0.3, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    assert!(ids_estimate(&s, &law, &[], 2, 0).is_err());
    assert!(ids_estimate(&s, &law, &[1.0, 0.5], 2, 0).is_err());
    assert!(ids_estimate(&s, &law, &[1.0], 0, 0).is_err());
}

#[test]
fn embedding_doubles_every_eigenvalue() {
    let h = random_hermitian(12, 4, 21);
    let emb = real_embedding(&h);
    let all = common::jacobi_eigen(emb).values;
    for pair in all.chunks(2) {
        assert!((pair[0] - pair[1]).abs() < 1e-9);
    }
    let dense: Mat<c64> = h.to_dense();
    assert_eq!(dense.nrows(), 12);
}
