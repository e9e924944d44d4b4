//! Energy filtering and time evolution by Chebyshev expansion, and the
//! transport moments of filtered, evolved wave packets.

use std::f64::consts::PI;

use num_complex::Complex64 as c64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measures::SiteDistribution;
use crate::model::{Boundary, DisorderRealization, HermitianOperator, LatticeHamiltonian, ModelSpec};
use crate::stats::{derive_seed, experiment_id, par_realizations, MeanAccumulator};

/// Smooth bump `exp(1 − 1/(1 − ((E−E₀)/w)²))` on `(E₀ − w, E₀ + w)`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFilter {
    pub center: f64,
    pub half_width: f64,
}

impl EnergyFilter {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center.is_finite() {
            return Err(LabError::InvalidArgument(format!(
                "filter needs a finite center and positive half-width (got {center}, {half_width})"
            )));
        }
        Ok(Self { center, half_width })
    }

    pub fn profile(&self, e: f64) -> f64 {
        let x = (e - self.center) / self.half_width;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - x * x)).exp()
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Affine map of a spectral enclosure `[lo, hi]` onto `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralScale {
    pub center: f64,
    pub half_range: f64,
}

impl SpectralScale {
    /// Slightly padded so the spectrum sits strictly inside `(−1, 1)`.
    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        let half = 0.5 * (hi - lo).max(1e-12);
        Self {
            center: 0.5 * (hi + lo),
            half_range: half * (1.0 + 1e-3),
        }
    }

    pub fn of(h: &HermitianOperator) -> Self {
        let (lo, hi) = h.gershgorin_bounds();
        Self::from_bounds(lo, hi)
    }
}

/// `y = ((H − c) / a) x`.
fn scaled_apply(h: &HermitianOperator, s: &SpectralScale, x: &[c64], y: &mut [c64]) {
    h.apply(x, y);
    let inv = 1.0 / s.half_range;
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = (*yi - xi * s.center) * inv;
    }
}

/// Chebyshev coefficients `c_k` of `f` on `[−1, 1]` from `n` Chebyshev nodes,
/// with `f ≈ c₀/2 + Σ_{k≥1} c_k T_k`. A type-II DCT done through a complex
/// FFT of the mirrored samples.
pub fn chebyshev_coefficients(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
    let samples: Vec<f64> = (0..n)
        .map(|j| f((PI * (j as f64 + 0.5) / n as f64).cos()))
        .collect();
    let mut buf: Vec<c64> = samples
        .iter()
        .chain(samples.iter().rev())
        .map(|&v| c64::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(2 * n).process(&mut buf);
    (0..n)
        .map(|k| (c64::from_polar(1.0, -PI * k as f64 / (2 * n) as f64) * buf[k]).re / n as f64)
        .collect()
}

/// Clenshaw evaluation of `c₀/2 + Σ c_k T_k(x)`.
pub fn chebyshev_eval(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + 0.5 * coeffs.first().copied().unwrap_or(0.0)
}

/// Default sup-norm accuracy of the filter polynomial on the spectral range.
pub const FILTER_TOLERANCE: f64 = 1e-8;
const MAX_FILTER_NODES: usize = 1 << 20;

/// A filter's polynomial approximation on one spectral enclosure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPolynomial {
    pub filter: EnergyFilter,
    pub scale: SpectralScale,
    pub coefficients: Vec<f64>,
    /// Largest deviation from the profile on the verification grid.
    pub max_error: f64,
}

impl FilterPolynomial {
    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Doubles the number of nodes until the discarded coefficient tail and
    /// the error on a Chebyshev verification grid are both below `tol`.
    pub fn build(filter: EnergyFilter, scale: SpectralScale, tol: f64) -> Result<Self> {
        let f = |x: f64| filter.profile(scale.center + scale.half_range * x);
        let mut n = 256;
        loop {
            let c = chebyshev_coefficients(f, n);
            // Truncate where the remaining tail is negligible.
            let mut tail = 0.0;
            let mut keep = c.len();
            while keep > 1 && tail + c[keep - 1].abs() <= 0.25 * tol {
                tail += c[keep - 1].abs();
                keep -= 1;
            }
            // The interpolant is trusted only if its last quarter is negligible.
            if keep <= 3 * n / 4 {
                let coefficients = c[..keep].to_vec();
                let grid = (4 * keep).clamp(512, 8192);
                let max_error = (0..grid)
                    .map(|j| {
                        let x = (PI * (j as f64 + 0.5) / grid as f64).cos();
                        (chebyshev_eval(&coefficients, x) - f(x)).abs()
                    })
                    .fold(0.0, f64::max);
                if max_error <= tol {
                    return Ok(Self {
                        filter,
                        scale,
                        coefficients,
                        max_error,
                    });
                }
            }
            n *= 2;
            if n > MAX_FILTER_NODES {
                return Err(LabError::InvalidArgument(format!(
                    "filter of half-width {} cannot be resolved to {tol:e} on a spectral range of half-width {}",
                    filter.half_width, scale.half_range
                )));
            }
        }
    }

    pub fn apply(&self, h: &HermitianOperator, v: &[c64]) -> Vec<c64> {
        chebyshev_series_apply(h, &self.scale, &self.coefficients, v)
    }
}

/// `(c₀/2 + Σ c_k T_k(H̃)) v` by the three-term recurrence.
fn chebyshev_series_apply(h: &HermitianOperator, s: &SpectralScale, c: &[f64], v: &[c64]) -> Vec<c64> {
    let n = v.len();
    let mut out: Vec<c64> = v.iter().map(|x| x * (0.5 * c[0])).collect();
    if c.len() == 1 {
        return out;
    }
    let mut prev = v.to_vec();
    let mut cur = vec![c64::new(0.0, 0.0); n];
    scaled_apply(h, s, &prev, &mut cur);
    for (o, x) in out.iter_mut().zip(&cur) {
        *o += x * c[1];
    }
    let mut next = vec![c64::new(0.0, 0.0); n];
    for &ck in &c[2..] {
        scaled_apply(h, s, &cur, &mut next);
        for i in 0..n {
            next[i] = next[i] * 2.0 - prev[i];
            out[i] += next[i] * ck;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredVector {
    pub vector: Vec<c64>,
    pub order: usize,
    pub max_error: f64,
    /// The filter support misses the spectral enclosure; the result is zero.
    pub empty_support: bool,
}

/// `𝓧(H) v` with the spectral enclosure taken from Gershgorin discs.
pub fn apply_filter(h: &HermitianOperator, filter: &EnergyFilter, v: &[c64]) -> Result<FilteredVector> {
    apply_filter_with_tolerance(h, filter, v, FILTER_TOLERANCE)
}

pub fn apply_filter_with_tolerance(
    h: &HermitianOperator,
    filter: &EnergyFilter,
    v: &[c64],
    tol: f64,
) -> Result<FilteredVector> {
    if v.len() != h.dim() {
        return Err(LabError::DimensionMismatch {
            expected: h.dim(),
            found: v.len(),
        });
    }
    let (lo, hi) = h.gershgorin_bounds();
    let (a, b) = filter.support();
    if b <= lo || a >= hi {
        return Ok(FilteredVector {
            vector: vec![c64::new(0.0, 0.0); v.len()],
            order: 0,
            max_error: 0.0,
            empty_support: true,
        });
    }
    let poly = FilterPolynomial::build(*filter, SpectralScale::from_bounds(lo, hi), tol)?;
    Ok(FilteredVector {
        vector: poly.apply(h, v),
        order: poly.order(),
        max_error: poly.max_error,
        empty_support: false,
    })
}

/// `J_0(z), …, J_kmax(z)` by Miller's backward recurrence, normalized with
/// `J₀ + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    if z == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let start = kmax.max(z.ceil() as usize) + 30 + (10.0 * z.cbrt()).ceil() as usize;
    let start = start + start % 2;
    let mut j = vec![0.0; start + 2];
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = (2.0 * k as f64 / z) * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.truncate(kmax + 1);
    for v in &mut j {
        *v /= norm;
    }
    j
}

/// Coefficients below this magnitude end the propagation series.
pub const PROPAGATOR_CUTOFF: f64 = 1e-14;

/// `e^{−itH} v` by the Chebyshev–Bessel expansion
/// `e^{−itH} = e^{−itc} Σ_k (2 − δ_{k0}) (−i)^k J_k(a t) T_k(H̃)`.
pub fn evolve(h: &HermitianOperator, v: &[c64], t: f64) -> Result<Vec<c64>> {
    evolve_scaled(h, &SpectralScale::of(h), v, t)
}

pub fn evolve_scaled(h: &HermitianOperator, s: &SpectralScale, v: &[c64], t: f64) -> Result<Vec<c64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(LabError::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
    }
    if v.len() != h.dim() {
        return Err(LabError::DimensionMismatch {
            expected: h.dim(),
            found: v.len(),
        });
    }
    if t == 0.0 {
        return Ok(v.to_vec());
    }
    let z = s.half_range * t;
    let guess = (z + 10.0 * z.cbrt() + 40.0).ceil() as usize;
    let j = bessel_j_sequence(z, guess);
    let mut kmax = j.len() - 1;
    while kmax > z as usize && j[kmax].abs() < PROPAGATOR_CUTOFF {
        kmax -= 1;
    }
    let phase = [
        c64::new(1.0, 0.0),
        c64::new(0.0, -1.0),
        c64::new(-1.0, 0.0),
        c64::new(0.0, 1.0),
    ];
    let coeff = |k: usize| phase[k % 4] * (if k == 0 { 1.0 } else { 2.0 } * j[k]);
    let n = v.len();
    let mut out: Vec<c64> = v.iter().map(|x| x * coeff(0)).collect();
    let mut prev = v.to_vec();
    let mut cur = vec![c64::new(0.0, 0.0); n];
    if kmax >= 1 {
        scaled_apply(h, s, &prev, &mut cur);
        let c1 = coeff(1);
        for (o, x) in out.iter_mut().zip(&cur) {
            *o += x * c1;
        }
    }
    let mut next = vec![c64::new(0.0, 0.0); n];
    for k in 2..=kmax {
        scaled_apply(h, s, &cur, &mut next);
        let ck = coeff(k);
        for i in 0..n {
            next[i] = next[i] * 2.0 - prev[i];
            out[i] += next[i] * ck;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let global = c64::from_polar(1.0, -s.center * t);
    for o in &mut out {
        *o *= global;
    }
    Ok(out)
}

/// Times `0, t_min, …, t_max` with `per_decade` logarithmically spaced nodes
/// per decade (both ends included).
pub fn log_time_grid(t_min: f64, t_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) || per_decade == 0 {
        return Err(LabError::InvalidArgument(format!(
            "time grid needs 0 < t_min < t_max and per_decade >= 1 (got {t_min}, {t_max}, {per_decade})"
        )));
    }
    let decades = (t_max / t_min).log10();
    let steps = (decades * per_decade as f64).ceil() as usize;
    let mut grid = vec![0.0];
    for i in 0..=steps {
        grid.push(t_min * 10f64.powf(decades * i as f64 / steps as f64));
    }
    *grid.last_mut().expect("nonempty") = t_max;
    Ok(grid)
}

pub const BOUNDARY_LAYER: usize = 5;
pub const MAX_LEAKAGE: f64 = 1e-6;

/// Geometry of the moment: weights `⟨x⟩^p` and the boundary layer mask.
struct MomentGeometry {
    weights: Vec<f64>,
    layer: Vec<bool>,
}

impl MomentGeometry {
    fn new(spec: &ModelSpec, p: f64) -> Self {
        let l = spec.size;
        let (c1, c2) = spec.coords(spec.center_site());
        let mut weights = Vec::with_capacity(l * l);
        let mut layer = Vec::with_capacity(l * l);
        for site in 0..l * l {
            let (x1, x2) = spec.coords(site);
            let d1 = x1 as f64 - c1 as f64;
            let d2 = x2 as f64 - c2 as f64;
            weights.push((1.0 + d1 * d1 + d2 * d2).powf(0.5 * p));
            let edge = x1.min(l - 1 - x1).min(x2).min(l - 1 - x2);
            layer.push(edge < BOUNDARY_LAYER);
        }
        Self { weights, layer }
    }

    fn moment(&self, psi: &[c64]) -> f64 {
        psi.iter().zip(&self.weights).map(|(z, w)| w * z.norm_sqr()).sum()
    }

    fn leakage(&self, psi: &[c64]) -> f64 {
        psi.iter()
            .zip(&self.layer)
            .filter(|(_, &b)| b)
            .map(|(z, _)| z.norm_sqr())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    pub horizon: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `e^{−10} · sup M`, bound on the neglected tail of the Laplace average.
    pub truncation_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRecord {
    pub p: f64,
    pub filter: EnergyFilter,
    pub lambda: f64,
    pub size: usize,
    pub boundary: Boundary,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `M(t)` per realization, `[realization][time]`.
    pub samples: Vec<Vec<f64>>,
    /// Largest boundary-layer mass over all realizations and accepted times.
    pub max_leakage: f64,
    /// Largest time every realization reached within the leakage guard.
    pub horizon: f64,
    pub filter_order: usize,
    pub time_averages: Vec<TimeAverage>,
}

impl TransportRecord {
    /// Columns `t, M_mean, M_stderr`.
    pub fn moments_csv(&self) -> String {
        let mut out = String::from("t,M_mean,M_stderr\n");
        for i in 0..self.times.len() {
            out.push_str(&format!("{},{},{}\n", self.times[i], self.mean[i], self.stderr[i]));
        }
        out
    }

    /// Columns `T, tam_mean, tam_stderr`.
    pub fn time_average_csv(&self) -> String {
        let mut out = String::from("T,tam_mean,tam_stderr\n");
        for a in &self.time_averages {
            out.push_str(&format!("{},{},{}\n", a.horizon, a.mean, a.stderr));
        }
        out
    }

    pub fn time_average(&self, horizon: f64) -> Option<&TimeAverage> {
        self.time_averages.iter().find(|a| a.horizon == horizon)
    }
}

/// What to do when a packet reaches the boundary layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakPolicy {
    /// Fail with the largest admissible time.
    Error,
    /// Keep the times before the first violation and record the horizon.
    Truncate,
}

/// Parameters of a moment computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSettings {
    pub p: f64,
    pub filter: EnergyFilter,
    pub times: Vec<f64>,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub leak_policy: LeakPolicy,
}

struct RealizationMoments {
    seed: u64,
    values: Vec<f64>,
    max_leakage: f64,
    /// Index of the first time that violated the guard, with its leakage.
    violation: Option<(usize, f64)>,
    order: usize,
}

fn one_realization<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    geometry: &MomentGeometry,
    settings: &MomentSettings,
    seed: u64,
) -> Result<RealizationMoments> {
    let d = DisorderRealization::draw(law, spec, seed);
    let h = LatticeHamiltonian::new(spec)
        .disorder(&d)
        .boundary(Boundary::Open)
        .build()?;
    let scale = SpectralScale::of(&h);
    let mut start = vec![c64::new(0.0, 0.0); h.dim()];
    start[spec.center_site()] = c64::new(1.0, 0.0);
    let poly = FilterPolynomial::build(settings.filter, scale, FILTER_TOLERANCE)?;
    let mut psi = poly.apply(&h, &start);
    let mut values = Vec::with_capacity(settings.times.len());
    let mut max_leakage: f64 = 0.0;
    let mut t_prev = 0.0;
    for (i, &t) in settings.times.iter().enumerate() {
        if t > t_prev {
            psi = evolve_scaled(&h, &scale, &psi, t - t_prev)?;
            t_prev = t;
        }
        let leak = geometry.leakage(&psi);
        if leak >= MAX_LEAKAGE {
            return Ok(RealizationMoments {
                seed,
                values,
                max_leakage,
                violation: Some((i, leak)),
                order: poly.order(),
            });
        }
        max_leakage = max_leakage.max(leak);
        values.push(geometry.moment(&psi));
    }
    Ok(RealizationMoments {
        seed,
        values,
        max_leakage,
        violation: None,
        order: poly.order(),
    })
}

/// Disorder-averaged `M(p, 𝓧, t)` for a packet started at the center site of
/// an open `L × L` lattice.
pub fn moment<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    settings: &MomentSettings,
) -> Result<TransportRecord> {
    spec.validate(Boundary::Open)?;
    if settings.times.is_empty() {
        return Err(LabError::EmptyGrid("time grid"));
    }
    if !settings.times.windows(2).all(|w| w[0] <= w[1]) || settings.times[0] < 0.0 {
        return Err(LabError::InvalidArgument("time grid must be nondecreasing and >= 0".into()));
    }
    if settings.n_realizations == 0 {
        return Err(LabError::InvalidArgument("n_realizations must be >= 1".into()));
    }
    if settings.p < 0.0 {
        return Err(LabError::InvalidArgument(format!("p must be >= 0, got {}", settings.p)));
    }
    let geometry = MomentGeometry::new(spec, settings.p);
    let stream = experiment_id("dynamics");
    let runs: Vec<RealizationMoments> = par_realizations(settings.n_realizations, |i| {
        let seed = derive_seed(settings.base_seed, stream, i as u64);
        one_realization(spec, law, &geometry, settings, seed)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let accepted = runs.iter().map(|r| r.values.len()).min().unwrap_or(0);
    if let Some((idx, leak)) = runs
        .iter()
        .filter_map(|r| r.violation)
        .min_by_key(|v| v.0)
    {
        if settings.leak_policy == LeakPolicy::Error || accepted == 0 {
            return Err(LabError::BoundaryLeak {
                time: settings.times[idx],
                leakage: leak,
                max_admissible: if idx == 0 { 0.0 } else { settings.times[idx - 1] },
            });
        }
    }
    let times = settings.times[..accepted].to_vec();
    let mut mean = Vec::with_capacity(accepted);
    let mut stderr = Vec::with_capacity(accepted);
    for k in 0..accepted {
        let mut acc = MeanAccumulator::new();
        for r in &runs {
            acc.push(r.values[k]);
        }
        mean.push(acc.mean());
        stderr.push(acc.stderr());
    }
    Ok(TransportRecord {
        p: settings.p,
        filter: settings.filter,
        lambda: spec.lambda,
        size: spec.size,
        boundary: Boundary::Open,
        base_seed: settings.base_seed,
        seeds: runs.iter().map(|r| r.seed).collect(),
        horizon: times.last().copied().unwrap_or(0.0),
        times,
        mean,
        stderr,
        samples: runs.iter().map(|r| r.values[..accepted].to_vec()).collect(),
        max_leakage: runs.iter().map(|r| r.max_leakage).fold(0.0, f64::max),
        filter_order: runs.first().map(|r| r.order).unwrap_or(0),
        time_averages: Vec::new(),
    })
}

/// Truncation point of the Laplace average, in units of T.
pub const LAPLACE_CUTOFF: f64 = 10.0;

/// `(1/T) ∫₀^{10T} M(t) e^{−t/T} dt` by the trapezoidal rule on the record's
/// time nodes.
fn laplace_average(times: &[f64], values: &[f64], horizon: f64) -> f64 {
    let cutoff = LAPLACE_CUTOFF * horizon;
    let mut total = 0.0;
    for k in 1..times.len() {
        let (t0, t1) = (times[k - 1], times[k]);
        if t0 >= cutoff {
            break;
        }
        let f0 = values[k - 1] * (-t0 / horizon).exp();
        let f1 = values[k] * (-t1 / horizon).exp();
        total += 0.5 * (f0 + f1) * (t1 - t0);
    }
    total / horizon
}

/// Adds `𝓜(p, 𝓧, T)` for each horizon, computed per realization from the
/// stored `M(t)` samples and then averaged.
pub fn time_averaged_moment(record: &TransportRecord, horizons: &[f64]) -> Result<TransportRecord> {
    if horizons.is_empty() {
        return Err(LabError::EmptyGrid("time-average horizons"));
    }
    let t_end = record.times.last().copied().unwrap_or(0.0);
    if record.times.first() != Some(&0.0) {
        return Err(LabError::InvalidArgument("time grid must start at t = 0".into()));
    }
    let mut out = record.clone();
    for &horizon in horizons {
        if !(horizon > 0.0) {
            return Err(LabError::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
        }
        if t_end < LAPLACE_CUTOFF * horizon * (1.0 - 1e-12) {
            return Err(LabError::InvalidArgument(format!(
                "time grid ends at {t_end}, needs {} for T = {horizon}",
                LAPLACE_CUTOFF * horizon
            )));
        }
        let mut acc = MeanAccumulator::new();
        let mut sup: f64 = 0.0;
        for s in &record.samples {
            acc.push(laplace_average(&record.times, s, horizon));
            sup = sup.max(s.iter().cloned().fold(0.0, f64::max));
        }
        out.time_averages.retain(|a| a.horizon != horizon);
        out.time_averages.push(TimeAverage {
            horizon,
            mean: acc.mean(),
            stderr: acc.stderr(),
            truncation_bound: (-LAPLACE_CUTOFF).exp() * sup,
        });
    }
    out.time_averages.sort_by(|a, b| a.horizon.total_cmp(&b.horizon));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_profile() {
        let f = EnergyFilter::new(1.0, 0.5).unwrap();
        assert_eq!(f.profile(1.0), 1.0);
        assert_eq!(f.profile(1.5), 0.0);
        assert_eq!(f.profile(0.4), 0.0);
        assert!(f.profile(1.25) > 0.0 && f.profile(1.25) < 1.0);
    }

    #[test]
    fn chebyshev_series_of_polynomial() {
        let c = chebyshev_coefficients(|x| 3.0 * x * x - 1.0, 16);
        // 3x² − 1 = 0.5 T₀ + 1.5 T₂
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!((c[2] - 1.5).abs() < 1e-14);
        assert!(c[1].abs() < 1e-14 && c[3].abs() < 1e-14);
        assert!((chebyshev_eval(&c, 0.3) - (3.0 * 0.09 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn bessel_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((j[2] - 0.114_903_484_931_900_5).abs() < 1e-14);
        let j = bessel_j_sequence(100.0, 120);
        assert!((j[0] - 0.019_985_850_304_223_122).abs() < 1e-13);
    }

    #[test]
    fn laplace_average_of_constant_and_linear() {
        let times = log_time_grid(1e-3, 2000.0, 40).unwrap();
        let ones = vec![2.0; times.len()];
        let avg = laplace_average(&times, &ones, 100.0);
        assert!((avg - 2.0 * (1.0 - (-10f64).exp())).abs() < 2e-3, "{avg}");
        let lin: Vec<f64> = times.clone();
        let avg = laplace_average(&times, &lin, 100.0);
        assert!((avg / 100.0 - (1.0 - 11.0 * (-10f64).exp())).abs() < 2e-3, "{avg}");
    }
}
