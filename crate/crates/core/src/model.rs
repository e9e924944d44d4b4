//! Finite-volume magnetic lattice Hamiltonians with unbounded on-site disorder.
//!
//! Sites of the L×L lattice are indexed `x1 + L·x2`. The clean operator is the
//! Peierls-substituted lattice Laplacian in Landau gauge: the hop from
//! `(x1, x2)` to `(x1 + 1, x2)` carries `-t·exp(i 2π φ x2)`, hops in direction 2
//! carry `-t`, and the diagonal holds `onsite_shift` (4t by default), so the clean
//! zero-field spectrum is exactly `[0, 8t]`. With `q | L` the phases are periodic
//! on the torus. Boundary twists multiply the hops that wrap around the torus.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measures::SiteDistribution;
use crate::stats::ProbabilityEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Sites per side.
    #[serde(rename = "L")]
    pub size: usize,
    pub flux_p: u64,
    pub flux_q: u64,
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default = "default_hopping")]
    pub hopping: f64,
    #[serde(default = "default_shift")]
    pub onsite_shift: f64,
}

fn default_hopping() -> f64 {
    1.0
}

fn default_shift() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Torus,
    Open,
}

/// Gauge used for the Peierls phases. All three give the same plaquette flux
/// and trivial holonomies, hence unitarily equivalent operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Phases on direction-1 links, depending on x2. The default.
    LandauX2,
    /// Phases on direction-2 links, depending on x1.
    LandauX1,
    /// Split between both directions; periodic on the torus only if `2q | L`.
    Symmetric,
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl ModelSpec {
    pub fn new(size: usize, flux_p: u64, flux_q: u64, lambda: f64, alpha: f64) -> Self {
        Self {
            size,
            flux_p,
            flux_q,
            lambda,
            alpha,
            hopping: 1.0,
            onsite_shift: 4.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = size;
        self
    }

    pub fn flux(&self) -> f64 {
        self.flux_p as f64 / self.flux_q as f64
    }

    /// Field strength per unit cell, 2πφ.
    pub fn effective_field(&self) -> f64 {
        TAU * self.flux()
    }

    pub fn n_sites(&self) -> usize {
        self.size * self.size
    }

    /// Every violated invariant, not just the first.
    pub fn violations(&self, boundary: Boundary) -> Vec<String> {
        let mut out = Vec::new();
        if self.size < 2 {
            out.push(format!("L must be at least 2, got {}", self.size));
        }
        if self.flux_q == 0 {
            out.push("flux_q must be positive".into());
        } else {
            if gcd(self.flux_p, self.flux_q) != 1 {
                out.push(format!(
                    "flux_p and flux_q must be coprime, got {}/{}",
                    self.flux_p, self.flux_q
                ));
            }
            if self.flux_p >= self.flux_q && !(self.flux_p == 0 && self.flux_q == 1) {
                out.push(format!(
                    "flux p/q must lie in [0, 1), got {}/{}",
                    self.flux_p, self.flux_q
                ));
            }
            if boundary == Boundary::Torus && self.size % self.flux_q as usize != 0 {
                out.push(format!(
                    "L must be divisible by flux_q (L = {}, flux_q = {})",
                    self.size, self.flux_q
                ));
            }
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            out.push(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            out.push(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.hopping > 0.0) || !self.hopping.is_finite() {
            out.push(format!("hopping must be > 0, got {}", self.hopping));
        }
        if !self.onsite_shift.is_finite() {
            out.push("onsite_shift must be finite".into());
        }
        out
    }

    pub fn validate(&self, boundary: Boundary) -> Result<()> {
        let v = self.violations(boundary);
        if v.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidSpec(v.join("; ")))
        }
    }

    pub fn site(&self, x1: usize, x2: usize) -> usize {
        x1 + self.size * x2
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.size, site / self.size)
    }

    pub fn center_site(&self) -> usize {
        self.site(self.size / 2, self.size / 2)
    }
}

/// One draw of the couplings ω_j, one per lattice site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub omegas: Vec<f64>,
    pub seed: u64,
    pub alpha: f64,
}

impl DisorderRealization {
    pub fn draw<D: SiteDistribution + ?Sized>(law: &D, spec: &ModelSpec, seed: u64) -> Self {
        Self {
            omegas: law.sample(seed, spec.n_sites()),
            seed,
            alpha: spec.alpha,
        }
    }

    pub fn constant(spec: &ModelSpec, value: f64) -> Self {
        Self {
            omegas: vec![value; spec.n_sites()],
            seed: 0,
            alpha: spec.alpha,
        }
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.omegas.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub spec: Option<ModelSpec>,
    pub seed: Option<u64>,
    pub boundary: Boundary,
    pub twist: [f64; 2],
}

/// Sparse Hermitian matrix in CSR form.
///
/// Entries are only ever inserted in conjugate pairs, so the stored matrix is
/// Hermitian bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<c64>,
    pub meta: OperatorMeta,
}

/// Accumulates conjugate-paired entries before freezing into CSR.
#[derive(Debug, Clone)]
pub struct OperatorBuilder {
    rows: Vec<BTreeMap<usize, c64>>,
}

impl OperatorBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            rows: vec![BTreeMap::new(); dim],
        }
    }

    /// Adds `z` at (i, j) and `conj(z)` at (j, i).
    pub fn add_pair(&mut self, i: usize, j: usize, z: c64) {
        if i == j {
            *self.rows[i].entry(i).or_default() += c64::new(2.0 * z.re, 0.0);
        } else {
            *self.rows[i].entry(j).or_default() += z;
            *self.rows[j].entry(i).or_default() += z.conj();
        }
    }

    pub fn add_diagonal(&mut self, i: usize, v: f64) {
        *self.rows[i].entry(i).or_default() += c64::new(v, 0.0);
    }

    pub fn build(self, meta: OperatorMeta) -> HermitianOperator {
        let dim = self.rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in self.rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        HermitianOperator {
            dim,
            row_ptr,
            cols,
            vals,
            meta,
        }
    }
}

impl HermitianOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, c64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    /// True iff every stored entry equals the conjugate of its transpose
    /// partner exactly.
    pub fn is_exactly_hermitian(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v.conj()))
    }

    /// y = H x.
    pub fn apply(&self, x: &[c64], y: &mut [c64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Rigorous spectral enclosure from Gershgorin discs.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut d = 0.0;
            let mut r = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    d = v.re;
                } else {
                    r += v.norm();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    /// H + diag(shift).
    pub fn with_diagonal_added(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                found: shift.len(),
            });
        }
        let mut out = self.clone();
        for (i, &s) in shift.iter().enumerate() {
            let mut found = false;
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += c64::new(s, 0.0);
                    found = true;
                }
            }
            if !found && s != 0.0 {
                let mut b = OperatorBuilder::new(self.dim);
                for r in 0..self.dim {
                    for (j, v) in self.row(r) {
                        *b.rows[r].entry(j).or_default() += v;
                    }
                    b.add_diagonal(r, shift[r]);
                }
                return Ok(b.build(self.meta.clone()));
            }
        }
        Ok(out)
    }
}

/// Builder for lattice Hamiltonians with explicit boundary, twist and gauge.
#[derive(Debug, Clone)]
pub struct LatticeHamiltonian<'a> {
    pub spec: &'a ModelSpec,
    pub disorder: Option<&'a DisorderRealization>,
    pub boundary: Boundary,
    pub twist: [f64; 2],
    pub gauge: Gauge,
}

impl<'a> LatticeHamiltonian<'a> {
    pub fn new(spec: &'a ModelSpec) -> Self {
        Self {
            spec,
            disorder: None,
            boundary: Boundary::Torus,
            twist: [0.0, 0.0],
            gauge: Gauge::LandauX2,
        }
    }

    pub fn disorder(mut self, d: &'a DisorderRealization) -> Self {
        self.disorder = Some(d);
        self
    }

    pub fn boundary(mut self, b: Boundary) -> Self {
        self.boundary = b;
        self
    }

    pub fn twist(mut self, theta1: f64, theta2: f64) -> Self {
        self.twist = [theta1, theta2];
        self
    }

    pub fn gauge(mut self, g: Gauge) -> Self {
        self.gauge = g;
        self
    }

    pub fn build(&self) -> Result<HermitianOperator> {
        let spec = self.spec;
        spec.validate(self.boundary)?;
        if self.gauge == Gauge::Symmetric
            && self.boundary == Boundary::Torus
            && spec.size % (2 * spec.flux_q as usize) != 0
        {
            return Err(LabError::InvalidSpec(
                "symmetric gauge on the torus needs L divisible by 2 flux_q".into(),
            ));
        }
        if let Some(d) = self.disorder {
            if d.len() != spec.n_sites() {
                return Err(LabError::DimensionMismatch {
                    expected: spec.n_sites(),
                    found: d.len(),
                });
            }
        }
        let l = spec.size;
        let phi = spec.flux();
        let t = spec.hopping;
        let periodic = self.boundary == Boundary::Torus;
        let mut b = OperatorBuilder::new(spec.n_sites());
        // Phase of the hop (x1,x2) -> neighbor, per gauge.
        let phase = |x1: usize, x2: usize, dir: usize| -> f64 {
            match (self.gauge, dir) {
                (Gauge::LandauX2, 1) => TAU * phi * x2 as f64,
                (Gauge::LandauX2, _) => 0.0,
                (Gauge::LandauX1, 1) => 0.0,
                (Gauge::LandauX1, _) => -TAU * phi * x1 as f64,
                (Gauge::Symmetric, 1) => 0.5 * TAU * phi * x2 as f64,
                (Gauge::Symmetric, _) => -0.5 * TAU * phi * x1 as f64,
            }
        };
        for x2 in 0..l {
            for x1 in 0..l {
                let i = spec.site(x1, x2);
                let mut onsite = spec.onsite_shift;
                if let Some(d) = self.disorder {
                    onsite += spec.lambda * d.omegas[i];
                }
                b.add_diagonal(i, onsite);
                // Direction 1.
                if x1 + 1 < l || periodic {
                    let wraps = x1 + 1 == l;
                    let j = spec.site((x1 + 1) % l, x2);
                    let theta = phase(x1, x2, 1) + if wraps { self.twist[0] } else { 0.0 };
                    b.add_pair(j, i, -t * c64::from_polar(1.0, theta));
                }
                // Direction 2.
                if x2 + 1 < l || periodic {
                    let wraps = x2 + 1 == l;
                    let j = spec.site(x1, (x2 + 1) % l);
                    let theta = phase(x1, x2, 2) + if wraps { self.twist[1] } else { 0.0 };
                    b.add_pair(j, i, -t * c64::from_polar(1.0, theta));
                }
            }
        }
        Ok(b.build(OperatorMeta {
            spec: Some(*spec),
            seed: self.disorder.map(|d| d.seed),
            boundary: self.boundary,
            twist: self.twist,
        }))
    }
}

/// Clean magnetic Laplacian H₀ on the L×L torus.
pub fn build_clean_hamiltonian(spec: &ModelSpec) -> Result<HermitianOperator> {
    LatticeHamiltonian::new(spec).build()
}

/// H₀ + λ·diag(ω) on the torus.
pub fn build_random_hamiltonian(
    spec: &ModelSpec,
    disorder: &DisorderRealization,
) -> Result<HermitianOperator> {
    LatticeHamiltonian::new(spec).disorder(disorder).build()
}

/// Landau levels (2n − 1)B for n = 1..=n_max.
pub fn landau_levels(b: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(b > 0.0) || n_max < 1 {
        return Err(LabError::InvalidArgument(format!(
            "landau_levels needs B > 0 and n_max >= 1 (B = {b}, n_max = {n_max})"
        )));
    }
    Ok((1..=n_max).map(|n| (2 * n - 1) as f64 * b).collect())
}

/// Exact clean spectrum through the Fourier decomposition in direction 1.
///
/// In Landau gauge the clean operator commutes with unit translations along
/// direction 1, so it splits into L Harper chains of length L. This reaches
/// sizes far beyond the dense limit (e.g. L = 128).
pub fn clean_spectrum_fourier(spec: &ModelSpec, twist: [f64; 2]) -> Result<Vec<f64>> {
    spec.validate(Boundary::Torus)?;
    let l = spec.size;
    let t = spec.hopping;
    let phi = spec.flux();
    let mut all = Vec::with_capacity(l * l);
    for m in 0..l {
        let k = (TAU * m as f64) / l as f64;
        let mut block = Mat::<c64>::zeros(l, l);
        for x2 in 0..l {
            let arg = k - TAU * phi * x2 as f64 - twist[0] / l as f64;
            block[(x2, x2)] = c64::new(spec.onsite_shift - 2.0 * t * arg.cos(), 0.0);
        }
        for x2 in 0..l {
            let next = (x2 + 1) % l;
            let mut z = c64::new(-t, 0.0);
            if next == 0 {
                z *= c64::from_polar(1.0, twist[1]);
            }
            // Lower-triangular storage suffices for the eigensolver, but keep
            // the block fully Hermitian for clarity.
            block[(next, x2)] += z;
            block[(x2, next)] += z.conj();
        }
        let vals = block
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| LabError::Eigensolver(format!("{e:?}")))?;
        all.extend(vals);
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Union of clean spectra over an `n × n` grid of boundary twists: the finite
/// sampling of the magnetic Bloch bands, free of the artificial level gaps a
/// single torus produces.
pub fn twist_resolved_clean_spectrum(spec: &ModelSpec, n_twist: usize) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for a in 0..n_twist {
        for b in 0..n_twist {
            let tw = [TAU * a as f64 / n_twist as f64, TAU * b as f64 / n_twist as f64];
            all.extend(clean_spectrum_fourier(spec, tw)?);
        }
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Band {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Splits a sorted spectrum into clusters separated by gaps larger than
/// `gap_threshold`.
pub fn band_clusters(sorted: &[f64], gap_threshold: f64) -> Vec<Band> {
    let mut bands = Vec::new();
    let Some(&first) = sorted.first() else {
        return bands;
    };
    let mut cur = Band {
        lo: first,
        hi: first,
        count: 1,
    };
    for w in sorted.windows(2) {
        if w[1] - w[0] > gap_threshold {
            bands.push(cur);
            cur = Band {
                lo: w[1],
                hi: w[1],
                count: 1,
            };
        } else {
            cur.hi = w[1];
            cur.count += 1;
        }
    }
    bands.push(cur);
    bands
}

/// The q magnetic subbands of the clean model, from a twist-resolved spectrum.
pub fn clean_bands(spec: &ModelSpec, n_twist: usize, gap_threshold: f64) -> Result<Vec<Band>> {
    let spec = spec.with_lambda(0.0);
    let spectrum = twist_resolved_clean_spectrum(&spec, n_twist)?;
    Ok(band_clusters(&spectrum, gap_threshold))
}

/// Gap threshold separating clean clusters.
pub const BAND_GAP_THRESHOLD: f64 = 0.05;

/// Twist grid side for band resolution: at least 384 Bloch momenta per
/// direction, so that neighbouring samples inside a band sit closer than the
/// gap threshold.
pub fn band_twist_count(spec: &ModelSpec) -> usize {
    8.max(384usize.div_ceil(spec.size.max(1)))
}

/// Clean bands of `spec` (λ ignored) at the default resolution.
pub fn clean_band_structure(spec: &ModelSpec) -> Result<Vec<Band>> {
    clean_bands(&spec.with_lambda(0.0), band_twist_count(spec), BAND_GAP_THRESHOLD)
}

/// Midpoint of the k-th clean gap (between bands k-1 and k, 1-based).
pub fn clean_gap(spec: &ModelSpec, k: usize) -> Result<(f64, f64)> {
    let bands = clean_band_structure(spec)?;
    if k == 0 || k >= bands.len() {
        return Err(LabError::BandNotResolved {
            band: k,
            detail: format!("only {} clean bands", bands.len()),
        });
    }
    Ok((bands[k - 1].hi, bands[k].lo))
}

/// Monte-Carlo test of `P{max_j |ω_j| ≤ (log L)^β}` against the exact
/// product `F(t)^{L²}` (F the law of |ω|).
pub fn sup_norm_bound_experiment<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    beta: f64,
    trials: usize,
    base_seed: u64,
) -> Result<ProbabilityEstimate> {
    if trials == 0 {
        return Err(LabError::InvalidArgument("trials must be >= 1".into()));
    }
    if !(beta > 1.0 / spec.alpha) {
        return Err(LabError::InvalidArgument(format!(
            "beta must exceed 1/alpha = {}, got {beta}",
            1.0 / spec.alpha
        )));
    }
    let threshold = (spec.size as f64).ln().powf(beta);
    let stream = crate::stats::experiment_id("sup_norm_bound");
    let hits: usize = crate::stats::par_realizations(trials, |i| {
        let seed = crate::stats::derive_seed(base_seed, stream, i as u64);
        let w = law.sample(seed, spec.n_sites());
        usize::from(w.iter().all(|x| x.abs() <= threshold))
    })
    .into_iter()
    .sum();
    let exact = law.prob_abs_le(threshold).powi(spec.n_sites() as i32);
    Ok(ProbabilityEstimate::from_hits(hits, trials, Some(exact)))
}
