//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's eigensolvers.
#![allow(dead_code)]

use landau_lab::model::{Boundary, HermitianOperator, OperatorBuilder, OperatorMeta};
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigen-decomposition of a real symmetric matrix; `vectors[k]` belongs to
/// `values[k]`, ascending.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> SymEigen {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    SymEigen {
        values: order.iter().map(|&i| a[i][i]).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect(),
    }
}

/// Real symmetric form `[[Re H, -Im H], [Im H, Re H]]` of a Hermitian `H`.
pub fn real_embedding(h: &HermitianOperator) -> Vec<Vec<f64>> {
    let n = h.dim();
    let mut m = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for (j, z) in h.row(i) {
            m[i][j] = z.re;
            m[i + n][j + n] = z.re;
            m[i][j + n] = -z.im;
            m[i + n][j] = z.im;
        }
    }
    m
}

/// Eigenvalues of `H` via the doubled real spectrum.
pub fn oracle_eigenvalues(h: &HermitianOperator) -> Vec<f64> {
    let e = jacobi_eigen(real_embedding(h));
    e.values.iter().step_by(2).copied().collect()
}

/// `f(H) x` for real-valued `f`, through the real embedding.
pub fn oracle_apply(eig: &SymEigen, f: impl Fn(f64) -> f64, x: &[c64]) -> Vec<c64> {
    let n = x.len();
    let y: Vec<f64> = x.iter().map(|z| z.re).chain(x.iter().map(|z| z.im)).collect();
    let mut out = vec![0.0; 2 * n];
    for (lam, v) in eig.values.iter().zip(&eig.vectors) {
        let coef = f(*lam) * v.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        for (o, vi) in out.iter_mut().zip(v) {
            *o += coef * vi;
        }
    }
    (0..n).map(|i| c64::new(out[i], out[i + n])).collect()
}

/// `e^{-itH} x` from the oracle decomposition.
pub fn oracle_evolve(eig: &SymEigen, t: f64, x: &[c64]) -> Vec<c64> {
    let c = oracle_apply(eig, |e| (t * e).cos(), x);
    let s = oracle_apply(eig, |e| (t * e).sin(), x);
    c.iter().zip(&s).map(|(a, b)| a - c64::new(0.0, 1.0) * b).collect()
}

pub fn meta() -> OperatorMeta {
    OperatorMeta {
        spec: None,
        seed: None,
        boundary: Boundary::Open,
        twist: [0.0, 0.0],
    }
}

/// Random sparse Hermitian matrix with `per_row` off-diagonal couplings per
/// row on average and a random diagonal.
pub fn random_hermitian(n: usize, per_row: usize, seed: u64) -> HermitianOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = OperatorBuilder::new(n);
    for i in 0..n {
        b.add_diagonal(i, rng.random_range(-2.0..2.0));
        for _ in 0..per_row / 2 {
            let j = rng.random_range(0..n);
            if j != i {
                b.add_pair(i, j, c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
    }
    b.build(meta())
}

pub fn random_unit_vector(n: usize, seed: u64) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<c64> = (0..n)
        .map(|_| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn max_diff(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn norm(a: &[c64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hall conductance of gap `r` at flux `p/q` from the TKNN Diophantine
/// equation `r = q s + p t` with `|t| <= q/2`.
pub fn tknn_gap_chern(p: i64, q: i64, r: i64) -> i64 {
    for t in -q / 2..=q / 2 {
        if (r - p * t).rem_euclid(q) == 0 {
            return t;
        }
    }
    unreachable!("no TKNN solution for p={p} q={q} r={r}")
}
