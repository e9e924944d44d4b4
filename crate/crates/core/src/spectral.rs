//! Dense spectra, exact eigenvalue counting, Fermi projections and the
//! integrated density of states.

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::inertia::DenseHermitian;
use crate::measures::SiteDistribution;
use crate::model::{build_random_hamiltonian, DisorderRealization, HermitianOperator, ModelSpec, OperatorMeta};
use crate::stats::{derive_seed, experiment_id, linear_fit, par_realizations, LinearFit, MeanAccumulator};

pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Relative size of the endpoint nudge applied when a shift hits an eigenvalue.
pub const SHIFT_PERTURBATION: f64 = 1e-12;
pub const SHIFT_RETRIES: usize = 3;

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: Option<Mat<c64>>,
    pub meta: OperatorMeta,
}

impl SpectrumResult {
    /// Largest `‖Hv − λv‖` over stored eigenpairs.
    pub fn max_residual(&self, h: &HermitianOperator) -> Option<f64> {
        let u = self.eigenvectors.as_ref()?;
        let n = h.dim();
        let mut worst: f64 = 0.0;
        let mut v = vec![c64::new(0.0, 0.0); n];
        let mut hv = vec![c64::new(0.0, 0.0); n];
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            for i in 0..n {
                v[i] = u[(i, k)];
            }
            h.apply(&v, &mut hv);
            let r: f64 = hv.iter().zip(&v).map(|(a, b)| (a - b * e).norm_sqr()).sum();
            worst = worst.max(r.sqrt());
        }
        Some(worst)
    }

    pub fn eigenvector(&self, k: usize) -> Option<Vec<c64>> {
        let u = self.eigenvectors.as_ref()?;
        Some((0..u.nrows()).map(|i| u[(i, k)]).collect())
    }
}

fn check_limit(dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        return Err(LabError::DenseLimit { dim, limit });
    }
    Ok(())
}

/// Eigenvalues of a dense Hermitian matrix, ascending.
pub fn dense_eigenvalues(a: &Mat<c64>) -> Result<Vec<f64>> {
    let mut vals = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| LabError::Eigensolver(format!("{e:?}")))?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Full eigendecomposition of a dense Hermitian matrix, ascending.
pub fn dense_eigen(a: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| LabError::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let vals: Vec<f64> = (0..a.nrows()).map(|i| s[i].re).collect();
    let u = evd.U().to_owned();
    if vals.windows(2).all(|w| w[0] <= w[1]) {
        return Ok((vals, u));
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let u_sorted = Mat::from_fn(u.nrows(), u.ncols(), |i, k| u[(i, order[k])]);
    Ok((sorted, u_sorted))
}

pub fn full_spectrum(h: &HermitianOperator) -> Result<SpectrumResult> {
    full_spectrum_limited(h, DEFAULT_DENSE_LIMIT, false)
}

pub fn full_spectrum_with_vectors(h: &HermitianOperator) -> Result<SpectrumResult> {
    full_spectrum_limited(h, DEFAULT_DENSE_LIMIT, true)
}

pub fn full_spectrum_limited(
    h: &HermitianOperator,
    dense_limit: usize,
    vectors: bool,
) -> Result<SpectrumResult> {
    check_limit(h.dim(), dense_limit)?;
    let a = h.to_dense();
    let (eigenvalues, eigenvectors) = if vectors {
        let (v, u) = dense_eigen(&a)?;
        (v, Some(u))
    } else {
        (dense_eigenvalues(&a)?, None)
    };
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        meta: h.meta.clone(),
    })
}

/// Exact eigenvalue counts of one operator by inertia at arbitrary shifts.
#[derive(Debug, Clone)]
pub struct EigenCounter {
    matrix: DenseHermitian,
}

impl EigenCounter {
    pub fn new(h: &HermitianOperator) -> Result<Self> {
        Self::with_limit(h, DEFAULT_DENSE_LIMIT)
    }

    pub fn with_limit(h: &HermitianOperator, dense_limit: usize) -> Result<Self> {
        check_limit(h.dim(), dense_limit)?;
        Ok(Self {
            matrix: DenseHermitian::from_operator(h),
        })
    }

    pub fn from_dense(matrix: DenseHermitian) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Number of eigenvalues `≤ e`. Infinite shifts are answered without
    /// factorizing. A singular shift is nudged upward by a relative
    /// `SHIFT_PERTURBATION` (then 2×, 3×) before giving up.
    pub fn count_below(&self, e: f64) -> Result<usize> {
        if e == f64::INFINITY {
            return Ok(self.dim());
        }
        if e == f64::NEG_INFINITY {
            return Ok(0);
        }
        if e.is_nan() {
            return Err(LabError::InvalidArgument("NaN shift".into()));
        }
        let unit = SHIFT_PERTURBATION * e.abs().max(1.0);
        for attempt in 0..=SHIFT_RETRIES {
            let shift = e + unit * attempt as f64;
            if let Some(inertia) = self.matrix.shifted_inertia(shift) {
                return Ok(inertia.negative);
            }
        }
        Err(LabError::SingularShift {
            shift: e,
            retries: SHIFT_RETRIES,
        })
    }

    /// Number of eigenvalues in `(a, b]`.
    pub fn count_in_interval(&self, a: f64, b: f64) -> Result<usize> {
        if !(a < b) {
            return Err(LabError::InvalidArgument(format!(
                "interval needs a < b (a = {a}, b = {b})"
            )));
        }
        let hi = self.count_below(b)?;
        let lo = self.count_below(a)?;
        Ok(hi.saturating_sub(lo))
    }
}

/// Number of eigenvalues of `h` in `(a, b]`, exact by inertia.
pub fn count_in_interval(h: &HermitianOperator, a: f64, b: f64) -> Result<usize> {
    EigenCounter::new(h)?.count_in_interval(a, b)
}

/// Minimum distance below which an energy counts as sitting on an eigenvalue.
pub const FERMI_LEVEL_TOLERANCE: f64 = 1e-10;

/// Distance from `e` to the nearest entry of the ascending list `sorted`.
pub fn distance_to_spectrum(sorted: &[f64], e: f64) -> f64 {
    let k = sorted.partition_point(|&x| x <= e);
    let mut d = f64::INFINITY;
    if k > 0 {
        d = d.min(e - sorted[k - 1]);
    }
    if k < sorted.len() {
        d = d.min(sorted[k] - e);
    }
    d
}

/// Number of entries `≤ e` of an ascending list.
pub fn count_sorted_below(sorted: &[f64], e: f64) -> usize {
    sorted.partition_point(|&x| x <= e)
}

/// Spectral projection onto eigenvalues `≤ e_fermi`.
pub fn fermi_projection(h: &HermitianOperator, e_fermi: f64) -> Result<Mat<c64>> {
    let spec = full_spectrum_with_vectors(h)?;
    fermi_projection_from(&spec, e_fermi)
}

pub fn fermi_projection_from(spec: &SpectrumResult, e_fermi: f64) -> Result<Mat<c64>> {
    let u = spec
        .eigenvectors
        .as_ref()
        .ok_or_else(|| LabError::InvalidArgument("spectrum has no eigenvectors".into()))?;
    let distance = distance_to_spectrum(&spec.eigenvalues, e_fermi);
    if distance < FERMI_LEVEL_TOLERANCE {
        return Err(LabError::DegenerateFermiLevel {
            energy: e_fermi,
            distance,
        });
    }
    let m = count_sorted_below(&spec.eigenvalues, e_fermi);
    let occ = u.subcols(0, m);
    Ok(occ * occ.adjoint())
}

/// Disorder-averaged IDS `E{#{eigenvalues ≤ E}} / L²` on an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
}

impl IdsCurve {
    /// Columns `E, ids_mean, ids_stderr, n_realizations`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E,ids_mean,ids_stderr,n_realizations\n");
        for i in 0..self.energies.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.energies[i], self.mean[i], self.stderr[i], self.n_realizations
            ));
        }
        out
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.mean.windows(2).all(|w| w[0] <= w[1])
    }

    /// Linear interpolation of the mean; `None` outside the grid.
    pub fn interpolate(&self, e: f64) -> Option<f64> {
        let (first, last) = (*self.energies.first()?, *self.energies.last()?);
        if e < first || e > last {
            return None;
        }
        let k = self.energies.partition_point(|&x| x <= e);
        if k == self.energies.len() {
            return self.mean.last().copied();
        }
        let (e0, e1) = (self.energies[k - 1], self.energies[k]);
        let (n0, n1) = (self.mean[k - 1], self.mean[k]);
        Some(n0 + (n1 - n0) * (e - e0) / (e1 - e0))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(LabError::EmptyGrid("energy grid"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(LabError::InvalidArgument(
            "energy grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Counts per realization at every grid energy, from one dense spectrum each.
///
/// A full spectrum costs about as much as a handful of factorizations, so for
/// grids longer than a few points it is the cheaper route to the same integers.
pub fn ids_counts<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    grid: &[f64],
    n_realizations: usize,
    base_seed: u64,
) -> Result<Vec<Vec<usize>>> {
    check_grid(grid)?;
    if n_realizations == 0 {
        return Err(LabError::InvalidArgument("n_realizations must be >= 1".into()));
    }
    let stream = experiment_id("ids");
    par_realizations(n_realizations, |i| -> Result<Vec<usize>> {
        let seed = derive_seed(base_seed, stream, i as u64);
        let d = DisorderRealization::draw(law, spec, seed);
        let h = build_random_hamiltonian(spec, &d)?;
        let ev = full_spectrum(&h)?.eigenvalues;
        Ok(grid.iter().map(|&e| count_sorted_below(&ev, e)).collect())
    })
    .into_iter()
    .collect()
}

pub fn ids_estimate<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    grid: &[f64],
    n_realizations: usize,
    base_seed: u64,
) -> Result<IdsCurve> {
    let counts = ids_counts(spec, law, grid, n_realizations, base_seed)?;
    let volume = spec.n_sites() as f64;
    let mut mean = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let mut acc = MeanAccumulator::new();
        for c in &counts {
            acc.push(c[g] as f64 / volume);
        }
        mean.push(acc.mean());
        stderr.push(acc.stderr());
    }
    // Per-realization counts are monotone in E; the sequential mean can lose
    // that only through rounding, so enforce it exactly.
    for g in 1..mean.len() {
        if mean[g] < mean[g - 1] {
            mean[g] = mean[g - 1];
        }
    }
    Ok(IdsCurve {
        energies: grid.to_vec(),
        mean,
        stderr,
        n_realizations,
    })
}

/// `max_E N(E + δ) − N(E)` over grid points with `E + δ` inside the grid.
pub fn ids_modulus(curve: &IdsCurve, delta: f64) -> Result<f64> {
    let spacing = curve
        .energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    if curve.energies.len() < 2 {
        return Err(LabError::EmptyGrid("IDS grid needs two points"));
    }
    if delta < spacing * (1.0 - 1e-12) {
        return Err(LabError::InvalidArgument(format!(
            "delta {delta} is below the grid spacing {spacing}"
        )));
    }
    let mut best: f64 = 0.0;
    for (i, &e) in curve.energies.iter().enumerate() {
        match curve.interpolate(e + delta) {
            Some(n) => best = best.max(n - curve.mean[i]),
            None => break,
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
}

/// Log-log regression of the IDS modulus against δ.
pub fn holder_fit(curve: &IdsCurve, deltas: &[f64]) -> Result<HolderFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &d in deltas {
        let m = ids_modulus(curve, d)?;
        if m > 0.0 {
            x.push(d.ln());
            y.push(m.ln());
        }
    }
    let LinearFit {
        slope,
        intercept,
        r_squared,
    } = linear_fit(&x, &y).ok_or_else(|| {
        LabError::InvalidArgument("Hölder fit needs two deltas with positive modulus".into())
    })?;
    Ok(HolderFit {
        exponent: slope,
        log_prefactor: intercept,
        r_squared,
    })
}
