mod common;

use common::{jacobi_eigen, tknn_gap_chern};
use landau_lab::error::LabError;
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::*;
use landau_lab::spectral::{dense_eigenvalues, full_spectrum_with_vectors};
use landau_lab::topology::*;
use num_complex::Complex64 as c64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use std::f64::consts::TAU;

/// Eigenvectors of the q×q Harper matrix of one magnetic cell, with `k1` the
/// phase of the direction-1 hop and `kk` the phase on the hop closing the cell
/// in direction 2. Columns are complex vectors, eigenvalues ascending.
fn harper_vectors(p: u64, q: u64, k1: f64, kk: f64) -> Vec<Vec<c64>> {
    let n = q as usize;
    let phi = p as f64 / q as f64;
    let mut h = vec![vec![c64::new(0.0, 0.0); n]; n];
    for x2 in 0..n {
        h[x2][x2] = c64::new(4.0 - 2.0 * (TAU * phi * x2 as f64 + k1).cos(), 0.0);
        let up = (x2 + 1) % n;
        let z = if up == 0 { -c64::from_polar(1.0, kk) } else { c64::new(-1.0, 0.0) };
        h[up][x2] += z;
        h[x2][up] += z.conj();
    }
    let mut emb = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            emb[i][j] = h[i][j].re;
            emb[i + n][j + n] = h[i][j].re;
            emb[i + n][j] = h[i][j].im;
            emb[i][j + n] = -h[i][j].im;
        }
    }
    let eig = jacobi_eigen(emb);
    // Each eigenvalue appears twice, as v and i·v; keep one of each pair.
    (0..n)
        .map(|b| {
            let x = &eig.vectors[2 * b];
            (0..n).map(|i| c64::new(x[i], x[i + n])).collect()
        })
        .collect()
}

/// Chern numbers of the Harper bands by plaquette products over the
/// magnetic Brillouin zone, using the same orientation as the library.
fn harper_band_cherns(p: u64, q: u64, grid: usize) -> Vec<f64> {
    let n = q as usize;
    let at = |a: usize, b: usize| {
        harper_vectors(p, q, TAU * (a % grid) as f64 / grid as f64, TAU * (b % grid) as f64 / grid as f64)
    };
    let states: Vec<Vec<Vec<Vec<c64>>>> = (0..grid).map(|a| (0..grid).map(|b| at(a, b)).collect()).collect();
    let link = |u: &[c64], v: &[c64]| {
        let z: c64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
        z / z.norm()
    };
    (0..n)
        .map(|band| {
            let mut total = 0.0;
            for a in 0..grid {
                for b in 0..grid {
                    let s = |i: usize, j: usize| &states[i % grid][j % grid][band];
                    let loop_product = link(s(a, b), s(a + 1, b))
                        * link(s(a + 1, b), s(a + 1, b + 1))
                        * link(s(a, b + 1), s(a + 1, b + 1)).conj()
                        * link(s(a, b), s(a, b + 1)).conj();
                    total += -loop_product.arg();
                }
            }
            total / TAU
        })
        .collect()
}

#[test]
fn harper_oracle_reproduces_tknn() {
    for (p, q) in [(1, 3), (1, 5), (2, 5), (1, 7), (3, 7)] {
        let bands = harper_band_cherns(p, q, 24);
        let mut cumulative = 0.0;
        for r in 1..q as i64 {
            cumulative += bands[r as usize - 1];
            let t = tknn_gap_chern(p as i64, q as i64, r);
            assert!((cumulative - t as f64).abs() < 1e-6, "{p}/{q} gap {r}: {cumulative} vs {t}");
        }
        assert!(bands.iter().sum::<f64>().abs() < 1e-6);
    }
}

#[test]
fn library_band_cherns_match_harper_oracle() {
    for (p, q, l) in [(1, 3, 6), (1, 5, 10), (2, 5, 10), (3, 7, 14)] {
        let spec = ModelSpec::new(l, p, q, 0.0, 2.0);
        let lib = clean_band_cherns_raw(&spec, 6).unwrap();
        assert_eq!(lib.len(), q as usize, "{p}/{q}");
        let oracle = harper_band_cherns(p, q, 24);
        for (a, b) in lib.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{p}/{q}: library {lib:?} oracle {oracle:?}");
        }
        assert_eq!(clean_band_cherns(&spec, 6).unwrap().iter().sum::<i64>(), 0);
    }
}

#[test]
fn clean_gap_cherns_at_two_resolutions() {
    let spec = ModelSpec::new(10, 1, 5, 0.0, 2.0);
    let bands = clean_band_structure(&spec).unwrap();
    for r in 1..5 {
        let e = 0.5 * (bands[r - 1].hi + bands[r].lo);
        let coarse = chern_number(&spec, None, e, 6).unwrap();
        let fine = chern_number(&spec, None, e, 12).unwrap();
        let expect = tknn_gap_chern(1, 5, r as i64);
        assert_eq!(coarse.chern, expect);
        assert_eq!(fine.chern, expect);
        assert!((coarse.raw - expect as f64).abs() < 1e-6);
        assert_eq!(coarse.occupied, r * 20);
    }
}

#[test]
fn fermi_level_outside_the_spectrum() {
    let spec = ModelSpec::new(10, 1, 5, 0.3, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let d = DisorderRealization::draw(&law, &spec, 2);
    let below = chern_number(&spec, Some(&d), -5.0, 6).unwrap();
    assert_eq!((below.chern, below.occupied), (0, 0));
    let above = chern_number(&spec, Some(&d), 20.0, 6).unwrap();
    assert_eq!((above.chern, above.occupied), (0, 100));
    assert!(matches!(chern_number(&spec, None, 0.5, 4), Err(LabError::InvalidArgument(_))));
}

#[test]
fn fermi_level_inside_a_clean_band_is_reported() {
    let spec = ModelSpec::new(10, 1, 5, 0.0, 2.0);
    let bands = clean_band_structure(&spec).unwrap();
    let mid = 0.5 * (bands[0].lo + bands[0].hi);
    match chern_number(&spec, None, mid, 6) {
        Err(LabError::GapClosing { .. }) | Err(LabError::DegenerateFermiLevel { .. }) => {}
        other => panic!("expected a gap-closing error, got {other:?}"),
    }
}

#[test]
fn clean_staircase_from_the_plateau_scan() {
    let spec = ModelSpec::new(10, 1, 5, 0.0, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let bands = clean_band_structure(&spec).unwrap();
    let mut grid = vec![bands[0].lo - 1.0];
    grid.extend((1..5).map(|r| 0.5 * (bands[r - 1].hi + bands[r].lo)));
    let curve = hall_plateau_scan(&spec, &law, &grid, 3, 6, 0).unwrap();
    let got: Vec<i64> = curve.points.iter().map(|p| p.majority().unwrap().0).collect();
    assert_eq!(got, vec![0, 1, 2, -2, -1]);
    assert!(curve.points.iter().all(|p| p.is_pure() && p.n_fail == 0));
}

#[test]
fn poisson_level_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut e = 0.0;
    let levels: Vec<f64> = (0..100_001)
        .map(|_| {
            let x: f64 = Exp1.sample(&mut rng);
            e += x;
            e
        })
        .collect();
    let st = level_statistics(&levels).unwrap();
    assert!((st.mean_r - POISSON_R).abs() < 3.0 * st.stderr, "{} ± {}", st.mean_r, st.stderr);
    assert!((POISSON_R - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
}

#[test]
fn gue_level_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 200;
    let mut rs = Vec::new();
    for _ in 0..20 {
        let mut a = faer::Mat::<c64>::zeros(n, n);
        for i in 0..n {
            let d: f64 = StandardNormal.sample(&mut rng);
            a[(i, i)] = c64::new(d, 0.0);
            for j in 0..i {
                let (x, y): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                let z = c64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2;
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        let ev = dense_eigenvalues(&a).unwrap();
        rs.push(level_statistics(&ev).unwrap().mean_r);
    }
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    assert!((mean - 0.60).abs() < 0.01, "GUE mean r = {mean}");
    let ladder: Vec<f64> = (0..30).map(|i| i as f64).collect();
    assert_eq!(level_statistics(&ladder).unwrap().mean_r, 1.0);
    assert!(matches!(level_statistics(&ladder[..10]), Err(LabError::TooFewLevels { .. })));
}

#[test]
fn strong_disorder_localizes_the_band_tail() {
    let spec = ModelSpec::new(12, 1, 4, 5.0, 2.0);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let clean = full_spectrum_with_vectors(&build_clean_hamiltonian(&spec).unwrap()).unwrap();
    let clean_ipr = ipr(&clean.eigenvector(0).unwrap()).unwrap();
    let mut acc = 0.0;
    for seed in 0..5 {
        let d = DisorderRealization::draw(&law, &spec, seed);
        let sp = full_spectrum_with_vectors(&build_random_hamiltonian(&spec, &d).unwrap()).unwrap();
        acc += ipr(&sp.eigenvector(0).unwrap()).unwrap();
    }
    let disordered = acc / 5.0;
    assert!(disordered >= 10.0 * clean_ipr, "IPR {disordered} vs clean {clean_ipr}");
}
