//! Hall conductance as the Chern number of the Fermi projection over boundary
//! twists, plateau scans, mobility-window detection and localization
//! diagnostics (adjacent-gap ratios, inverse participation ratios).
//!
//! The Chern number uses the lattice field-strength construction of Fukui,
//! Hatsugai and Suzuki: link variables are normalized determinants of overlap
//! matrices between occupied subspaces at neighbouring twist points, and the
//! plaquette angles sum to an exact multiple of 2π.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measures::SiteDistribution;
use crate::model::{band_twist_count, clean_band_structure, DisorderRealization, LatticeHamiltonian, ModelSpec};
use crate::spectral::{count_sorted_below, dense_eigen, distance_to_spectrum};
use crate::stats::{derive_seed, experiment_id, par_realizations, MeanAccumulator};

/// Minimum separation between the Fermi level and every twisted spectrum.
pub const FERMI_GAP_TOLERANCE: f64 = 1e-8;
/// Minority fraction at or above which a Chern histogram counts as mixed.
pub const MIXED_THRESHOLD: f64 = 0.10;
pub const MIN_TWIST_GRID: usize = 6;
/// Mean adjacent-gap ratio of Poisson level statistics, `2 ln 2 − 1`.
pub const POISSON_R: f64 = 0.386_294_361_119_890_6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernResult {
    pub e_fermi: f64,
    pub chern: i64,
    /// Curvature sum / 2π before rounding.
    pub raw: f64,
    /// Plaquette angles, row-major over (θ₁ index, θ₂ index).
    pub curvature: Vec<f64>,
    pub grid_n: usize,
    pub seed: Option<u64>,
    pub occupied: usize,
}

/// Spectra and low-lying eigenvectors of `H(θ)` on an `n × n` twist grid,
/// with the overlap matrices between neighbouring grid points.
#[derive(Debug, Clone)]
pub struct TwistEigensystems {
    pub grid_n: usize,
    pub seed: Option<u64>,
    /// Sorted spectrum per twist point, index `a * n + b`.
    pub values: Vec<Vec<f64>>,
    keep: usize,
    /// `[point][direction]`: `V(k)ᴴ V(k + e_dir)` restricted to the kept columns.
    overlaps: Vec<[Mat<c64>; 2]>,
    /// Kept eigenvectors at twist (0, 0), for localization diagnostics.
    pub base_vectors: Mat<c64>,
}

impl TwistEigensystems {
    /// Diagonalizes on the twist grid, keeping eigenvectors with eigenvalue
    /// `≤ keep_below` at every twist (the maximum such count is kept).
    pub fn compute(
        spec: &ModelSpec,
        disorder: Option<&DisorderRealization>,
        grid_n: usize,
        keep_below: f64,
    ) -> Result<Self> {
        if grid_n < MIN_TWIST_GRID {
            return Err(LabError::InvalidArgument(format!(
                "twist grid needs n >= {MIN_TWIST_GRID}, got {grid_n}"
            )));
        }
        let n = grid_n;
        let mut values = Vec::with_capacity(n * n);
        let mut vectors = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut builder = LatticeHamiltonian::new(spec)
                    .twist(TAU * a as f64 / n as f64, TAU * b as f64 / n as f64);
                if let Some(d) = disorder {
                    builder = builder.disorder(d);
                }
                let h = builder.build()?;
                let (vals, u) = dense_eigen(&h.to_dense())?;
                values.push(vals);
                vectors.push(u);
            }
        }
        let keep = values
            .iter()
            .map(|v| count_sorted_below(v, keep_below))
            .max()
            .unwrap_or(0);
        let dim = vectors.first().map(|u| u.nrows()).unwrap_or(0);
        // Keep one extra column where available so range queries at the top
        // of the kept block stay well defined.
        let keep = (keep + 1).min(dim);
        let cols: Vec<Mat<c64>> = vectors.iter().map(|u| u.subcols(0, keep).to_owned()).collect();
        let mut overlaps = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let here = &cols[a * n + b];
                let right = &cols[((a + 1) % n) * n + b];
                let up = &cols[a * n + (b + 1) % n];
                overlaps.push([here.adjoint() * right, here.adjoint() * up]);
            }
        }
        Ok(Self {
            grid_n,
            seed: disorder.map(|d| d.seed),
            values,
            keep,
            overlaps,
            base_vectors: cols.into_iter().next().unwrap_or_else(|| Mat::zeros(0, 0)),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.first().map(|v| v.len()).unwrap_or(0)
    }

    /// Number of states below `e_fermi`, required to be the same at every
    /// twist and at least `FERMI_GAP_TOLERANCE` away from every eigenvalue.
    pub fn occupied_count(&self, e_fermi: f64) -> Result<usize> {
        let n = self.grid_n;
        let mut count = None;
        for (p, vals) in self.values.iter().enumerate() {
            let d = distance_to_spectrum(vals, e_fermi);
            if d < FERMI_GAP_TOLERANCE {
                return Err(LabError::DegenerateFermiLevel {
                    energy: e_fermi,
                    distance: d,
                });
            }
            let m = count_sorted_below(vals, e_fermi);
            match count {
                None => count = Some(m),
                Some(c) if c != m => {
                    return Err(LabError::GapClosing {
                        energy: e_fermi,
                        i: p / n,
                        j: p % n,
                    })
                }
                _ => {}
            }
        }
        Ok(count.unwrap_or(0))
    }

    /// Chern number of the span of eigenvectors `lo..hi` (0-based, ascending).
    pub fn chern_of_range(&self, lo: usize, hi: usize) -> Result<(f64, Vec<f64>)> {
        let n = self.grid_n;
        if hi > self.keep && hi < self.dim() {
            return Err(LabError::InvalidArgument(format!(
                "eigenvector range up to {hi} exceeds the {} kept columns",
                self.keep
            )));
        }
        if lo >= hi || hi > self.keep {
            // Empty or complete subspace: flat bundle.
            return Ok((0.0, vec![0.0; n * n]));
        }
        let m = hi - lo;
        let mut links = vec![[c64::new(1.0, 0.0); 2]; n * n];
        for (p, pair) in self.overlaps.iter().enumerate() {
            for dir in 0..2 {
                let block = pair[dir].submatrix(lo, lo, m, m);
                let det = block.determinant();
                let norm = det.norm();
                if !(norm > 1e-12) {
                    return Err(LabError::GapClosing {
                        energy: f64::NAN,
                        i: p / n,
                        j: p % n,
                    });
                }
                links[p][dir] = det / norm;
            }
        }
        let mut curvature = vec![0.0; n * n];
        let mut total = 0.0;
        for a in 0..n {
            for b in 0..n {
                let p = a * n + b;
                let p_right = ((a + 1) % n) * n + b;
                let p_up = a * n + (b + 1) % n;
                let loop_product =
                    links[p][0] * links[p_right][1] * links[p_up][0].conj() * links[p][1].conj();
                // Orientation fixed so that the lowest band at small positive
                // flux carries +1.
                let f = -loop_product.arg();
                curvature[p] = f;
                total += f;
            }
        }
        Ok((total / TAU, curvature))
    }

    pub fn chern(&self, e_fermi: f64) -> Result<ChernResult> {
        let m = self.occupied_count(e_fermi)?;
        let (raw, curvature) = self.chern_of_range(0, m).map_err(|e| match e {
            LabError::GapClosing { i, j, .. } => LabError::GapClosing {
                energy: e_fermi,
                i,
                j,
            },
            other => other,
        })?;
        Ok(ChernResult {
            e_fermi,
            chern: raw.round() as i64,
            raw,
            curvature,
            grid_n: self.grid_n,
            seed: self.seed,
            occupied: m,
        })
    }
}

pub fn chern_number(
    spec: &ModelSpec,
    disorder: Option<&DisorderRealization>,
    e_fermi: f64,
    grid_n: usize,
) -> Result<ChernResult> {
    TwistEigensystems::compute(spec, disorder, grid_n, e_fermi)?.chern(e_fermi)
}

/// Chern numbers of each clean magnetic subband, computed from the band's own
/// eigenvectors (not by differencing projections).
pub fn clean_band_cherns(spec: &ModelSpec, grid_n: usize) -> Result<Vec<i64>> {
    Ok(clean_band_cherns_raw(spec, grid_n)?
        .into_iter()
        .map(|c| c.round() as i64)
        .collect())
}

/// Unrounded curvature sums / 2π of each clean subband.
pub fn clean_band_cherns_raw(spec: &ModelSpec, grid_n: usize) -> Result<Vec<f64>> {
    let clean = spec.with_lambda(0.0);
    let bands = clean_band_structure(&clean)?;
    let n_twist = band_twist_count(&clean);
    let tw = TwistEigensystems::compute(&clean, None, grid_n, f64::INFINITY)?;
    let mut out = Vec::with_capacity(bands.len());
    let mut lo = 0;
    for b in &bands {
        // Clusters are counted over the whole twist union.
        let per_band = b.count / (n_twist * n_twist);
        out.push(tw.chern_of_range(lo, lo + per_band)?.0);
        lo += per_band;
    }
    Ok(out)
}

/// Histogram of Chern integers at one Fermi energy over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauPoint {
    pub e_fermi: f64,
    pub lambda: f64,
    pub chern_mean: f64,
    pub histogram: BTreeMap<i64, usize>,
    pub n_fail: usize,
    pub n_realizations: usize,
}

impl PlateauPoint {
    pub fn majority(&self) -> Option<(i64, usize)> {
        self.histogram
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&c, &k)| (c, k))
    }

    /// Fraction of realizations not agreeing with the majority integer;
    /// failed evaluations count as disagreement.
    pub fn minority_fraction(&self) -> f64 {
        let agree = self.majority().map(|m| m.1).unwrap_or(0);
        1.0 - agree as f64 / self.n_realizations as f64
    }

    pub fn is_pure(&self) -> bool {
        self.minority_fraction() < MIXED_THRESHOLD
    }

    pub fn histogram_string(&self) -> String {
        self.histogram
            .iter()
            .map(|(c, k)| format!("{c}:{k}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauSegment {
    pub e_start: f64,
    pub e_end: f64,
    pub chern: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallCurve {
    pub points: Vec<PlateauPoint>,
    pub plateaus: Vec<PlateauSegment>,
    /// Midpoints between consecutive pure points with different integers, and
    /// the centers of mixed stretches.
    pub jumps: Vec<f64>,
    pub grid_n: usize,
}

impl HallCurve {
    /// Columns `E_F, lambda, chern_mean, integer_histogram, n_fail`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E_F,lambda,chern_mean,integer_histogram,n_fail\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.e_fermi,
                p.lambda,
                p.chern_mean,
                p.histogram_string(),
                p.n_fail
            ));
        }
        out
    }

    pub fn point_at(&self, e: f64) -> Option<&PlateauPoint> {
        self.points.iter().find(|p| p.e_fermi == e)
    }
}

fn segments(points: &[PlateauPoint]) -> (Vec<PlateauSegment>, Vec<f64>) {
    let mut plateaus: Vec<PlateauSegment> = Vec::new();
    let mut jumps = Vec::new();
    let mut mixed_start: Option<f64> = None;
    let mut last_pure: Option<(f64, i64)> = None;
    for p in points {
        if p.is_pure() {
            let c = p.majority().map(|m| m.0).unwrap_or(0);
            if let Some(start) = mixed_start.take() {
                jumps.push(0.5 * (start + p.e_fermi));
            } else if let Some((e_prev, c_prev)) = last_pure {
                if c_prev != c {
                    jumps.push(0.5 * (e_prev + p.e_fermi));
                }
            }
            match plateaus.last_mut() {
                Some(seg) if seg.chern == c && last_pure.map(|l| l.0) == Some(seg.e_end) => {
                    seg.e_end = p.e_fermi
                }
                _ => plateaus.push(PlateauSegment {
                    e_start: p.e_fermi,
                    e_end: p.e_fermi,
                    chern: c,
                }),
            }
            last_pure = Some((p.e_fermi, c));
        } else if mixed_start.is_none() {
            mixed_start = Some(last_pure.map(|l| l.0).unwrap_or(p.e_fermi));
        }
    }
    if let Some(start) = mixed_start {
        if let Some(last) = points.last() {
            jumps.push(0.5 * (start + last.e_fermi));
        }
    }
    (plateaus, jumps)
}

/// Per-realization Chern outcomes on an energy grid.
fn realization_cherns(
    spec: &ModelSpec,
    disorder: Option<&DisorderRealization>,
    grid: &[f64],
    grid_n: usize,
) -> Result<(Vec<Option<i64>>, TwistEigensystems)> {
    let top = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tw = TwistEigensystems::compute(spec, disorder, grid_n, top)?;
    let outcomes = grid
        .iter()
        .map(|&e| match tw.chern(e) {
            Ok(r) => Ok(Some(r.chern)),
            Err(LabError::GapClosing { .. }) | Err(LabError::DegenerateFermiLevel { .. }) => Ok(None),
            Err(other) => Err(other),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((outcomes, tw))
}

fn check_energy_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(LabError::EmptyGrid("Fermi energy grid"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(LabError::InvalidArgument("Fermi energy grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Localization diagnostics gathered alongside a plateau scan.
#[derive(Debug, Clone, Default)]
struct Diagnostics {
    /// (energy, ipr) of kept eigenvectors at zero twist.
    states: Vec<(f64, f64)>,
}

fn scan_internal<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    grid: &[f64],
    n_realizations: usize,
    grid_n: usize,
    seed: u64,
) -> Result<(HallCurve, Vec<Diagnostics>)> {
    check_energy_grid(grid)?;
    if n_realizations == 0 {
        return Err(LabError::InvalidArgument("n_realizations must be >= 1".into()));
    }
    let stream = experiment_id("chern");
    let per: Vec<(Vec<Option<i64>>, Diagnostics)> = par_realizations(n_realizations, |i| {
        let d = DisorderRealization::draw(law, spec, derive_seed(seed, stream, i as u64));
        let (outcomes, tw) = realization_cherns(spec, Some(&d), grid, grid_n)?;
        let mut diag = Diagnostics::default();
        let vals = &tw.values[0];
        for k in 0..tw.base_vectors.ncols() {
            let v: Vec<c64> = (0..tw.base_vectors.nrows()).map(|r| tw.base_vectors[(r, k)]).collect();
            diag.states.push((vals[k], ipr(&v)?));
        }
        Ok((outcomes, diag))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(grid.len());
    for (g, &e) in grid.iter().enumerate() {
        let mut histogram = BTreeMap::new();
        let mut acc = MeanAccumulator::new();
        let mut n_fail = 0;
        for (outcomes, _) in &per {
            match outcomes[g] {
                Some(c) => {
                    *histogram.entry(c).or_insert(0) += 1;
                    acc.push(c as f64);
                }
                None => n_fail += 1,
            }
        }
        points.push(PlateauPoint {
            e_fermi: e,
            lambda: spec.lambda,
            chern_mean: if acc.count() > 0 { acc.mean() } else { f64::NAN },
            histogram,
            n_fail,
            n_realizations,
        });
    }
    let (plateaus, jumps) = segments(&points);
    let diags = per.into_iter().map(|p| p.1).collect();
    Ok((
        HallCurve {
            points,
            plateaus,
            jumps,
            grid_n,
        },
        diags,
    ))
}

/// Disorder-averaged Hall conductance on a Fermi-energy grid. Realizations
/// are shared across energies; gap closings and degenerate levels are counted
/// per point in `n_fail`.
pub fn hall_plateau_scan<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    grid: &[f64],
    n_realizations: usize,
    grid_n: usize,
    seed: u64,
) -> Result<HallCurve> {
    if spec.lambda == 0.0 {
        // Every realization is the clean operator.
        check_energy_grid(grid)?;
        let (outcomes, _) = realization_cherns(spec, None, grid, grid_n)?;
        let points: Vec<PlateauPoint> = grid
            .iter()
            .zip(outcomes)
            .map(|(&e, o)| {
                let mut histogram = BTreeMap::new();
                if let Some(c) = o {
                    histogram.insert(c, n_realizations);
                }
                PlateauPoint {
                    e_fermi: e,
                    lambda: 0.0,
                    chern_mean: o.map(|c| c as f64).unwrap_or(f64::NAN),
                    histogram,
                    n_fail: if o.is_some() { 0 } else { n_realizations },
                    n_realizations,
                }
            })
            .collect();
        let (plateaus, jumps) = segments(&points);
        return Ok(HallCurve {
            points,
            plateaus,
            jumps,
            grid_n,
        });
    }
    Ok(scan_internal(spec, law, grid, n_realizations, grid_n, seed)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDiagnostic {
    ChernJump,
    RStatistics,
    Ipr,
    /// λ = 0: the whole clean band carries extended states; no edge.
    CleanBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityEdgeEstimate {
    pub band: usize,
    pub lambda: f64,
    pub e1: f64,
    pub e2: f64,
    /// Half the grid spacing: the resolution of either edge.
    pub uncertainty: f64,
    pub diagnostic: EdgeDiagnostic,
    /// Mean adjacent-gap ratio of zero-twist levels inside / outside the window.
    pub r_inside: Option<f64>,
    pub r_outside: Option<f64>,
    /// Mean IPR of zero-twist states inside / outside the window.
    pub ipr_inside: Option<f64>,
    pub ipr_outside: Option<f64>,
    pub curve: Option<HallCurve>,
}

impl MobilityEdgeEstimate {
    pub fn width(&self) -> f64 {
        self.e2 - self.e1
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.e1 + self.e2)
    }
}

/// Columns `lambda, E1, E2, width, diagnostic`.
pub fn mobility_csv(estimates: &[MobilityEdgeEstimate]) -> String {
    let mut out = String::from("lambda,E1,E2,width,diagnostic\n");
    for m in estimates {
        let diag = match m.diagnostic {
            EdgeDiagnostic::ChernJump => "chern_jump",
            EdgeDiagnostic::RStatistics => "r_statistics",
            EdgeDiagnostic::Ipr => "ipr",
            EdgeDiagnostic::CleanBand => "clean_band",
        };
        out.push_str(&format!("{},{},{},{},{}\n", m.lambda, m.e1, m.e2, m.width(), diag));
    }
    out
}

/// Energy window `(lo, hi)` attributed to the 1-based clean band `band`:
/// from the middle of the gap below to the middle of the gap above.
pub fn band_window(spec: &ModelSpec, band: usize) -> Result<(f64, f64)> {
    let bands = clean_band_structure(spec)?;
    if band == 0 || band > bands.len() {
        return Err(LabError::BandNotResolved {
            band,
            detail: format!("{} clean bands", bands.len()),
        });
    }
    let b = bands[band - 1];
    let lo = if band > 1 { 0.5 * (bands[band - 2].hi + b.lo) } else { b.lo - (bands.get(1).map(|n| n.lo - b.hi).unwrap_or(1.0)) };
    let hi = if band < bands.len() { 0.5 * (b.hi + bands[band].lo) } else { b.hi + 1.0 };
    Ok((lo, hi))
}

/// Transition window of one band for each λ, from the spread of energies at
/// which realizations disagree on the Chern integer.
pub fn mobility_edge_scan<D: SiteDistribution + ?Sized>(
    spec: &ModelSpec,
    law: &D,
    band: usize,
    lambdas: &[f64],
    grid: &[f64],
    n_realizations: usize,
    grid_n: usize,
    seed: u64,
) -> Result<Vec<MobilityEdgeEstimate>> {
    check_energy_grid(grid)?;
    if lambdas.is_empty() {
        return Err(LabError::EmptyGrid("lambda grid"));
    }
    let (win_lo, win_hi) = band_window(spec, band)?;
    let clean_band = clean_band_structure(spec)?[band - 1];
    let spacing = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(LabError::InvalidArgument(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        if lambda == 0.0 {
            out.push(MobilityEdgeEstimate {
                band,
                lambda,
                e1: clean_band.lo,
                e2: clean_band.hi,
                uncertainty: 0.0,
                diagnostic: EdgeDiagnostic::CleanBand,
                r_inside: None,
                r_outside: None,
                ipr_inside: None,
                ipr_outside: None,
                curve: None,
            });
            continue;
        }
        let s = spec.with_lambda(lambda);
        let (curve, diags) = scan_internal(&s, law, grid, n_realizations, grid_n, seed)?;
        let mixed: Vec<f64> = curve
            .points
            .iter()
            .filter(|p| !p.is_pure() && p.e_fermi > win_lo && p.e_fermi < win_hi)
            .map(|p| p.e_fermi)
            .collect();
        // The band is resolved only if the scan reaches pure plateaus on both
        // sides of the transition, inside the band's window.
        let first_pure_below = curve
            .points
            .iter()
            .any(|p| p.is_pure() && p.e_fermi >= win_lo && mixed.first().is_none_or(|&m| p.e_fermi < m));
        let first_pure_above = curve
            .points
            .iter()
            .any(|p| p.is_pure() && p.e_fermi <= win_hi && mixed.last().is_none_or(|&m| p.e_fermi > m));
        if mixed.is_empty() || !first_pure_below || !first_pure_above {
            return Err(LabError::BandNotResolved {
                band,
                detail: format!(
                    "λ = {lambda}: {} mixed grid points inside [{win_lo:.4}, {win_hi:.4}], pure plateau below: {first_pure_below}, above: {first_pure_above}",
                    mixed.len()
                ),
            });
        }
        let (e1, e2) = (mixed[0], *mixed.last().expect("nonempty"));
        let inside = |e: f64| e >= e1 && e <= e2;
        let near = |e: f64| e >= win_lo && e <= win_hi;
        let (r_inside, r_outside) = split_r(&diags, &inside, &near);
        let ipr_mean = |pred: &dyn Fn(f64) -> bool| -> Option<f64> {
            let v: Vec<f64> = diags
                .iter()
                .flat_map(|d| d.states.iter())
                .filter(|(e, _)| pred(*e))
                .map(|x| x.1)
                .collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let ipr_inside = ipr_mean(&|e| inside(e));
        let ipr_outside = ipr_mean(&|e| near(e) && !inside(e));
        out.push(MobilityEdgeEstimate {
            band,
            lambda,
            e1,
            e2,
            uncertainty: 0.5 * spacing,
            diagnostic: EdgeDiagnostic::ChernJump,
            r_inside,
            r_outside,
            ipr_inside,
            ipr_outside,
            curve: Some(curve),
        });
    }
    Ok(out)
}

/// Pooled adjacent-gap ratios over realizations: ratios whose middle level
/// lies inside the window versus inside the band region but outside it.
fn split_r(
    diags: &[Diagnostics],
    inside: &dyn Fn(f64) -> bool,
    near: &dyn Fn(f64) -> bool,
) -> (Option<f64>, Option<f64>) {
    let mut acc_in = MeanAccumulator::new();
    let mut acc_out = MeanAccumulator::new();
    for d in diags {
        let levels: Vec<f64> = d.states.iter().map(|s| s.0).collect();
        for w in levels.windows(3) {
            let (s1, s2) = (w[1] - w[0], w[2] - w[1]);
            if s1.max(s2) <= 0.0 {
                continue;
            }
            let r = s1.min(s2) / s1.max(s2);
            if inside(w[1]) {
                acc_in.push(r);
            } else if near(w[1]) {
                acc_out.push(r);
            }
        }
    }
    let f = |a: MeanAccumulator| (a.count() > 0).then(|| a.mean());
    (f(acc_in), f(acc_out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStatistics {
    pub mean_r: f64,
    pub stderr: f64,
    pub n_ratios: usize,
}

pub const MIN_LEVELS: usize = 20;

/// Mean of `r_i = min(s_i, s_{i+1}) / max(s_i, s_{i+1})` over sorted gaps.
pub fn level_statistics(eigenvalues: &[f64]) -> Result<LevelStatistics> {
    if eigenvalues.len() < MIN_LEVELS {
        return Err(LabError::TooFewLevels {
            found: eigenvalues.len(),
            required: MIN_LEVELS,
        });
    }
    let mut levels = eigenvalues.to_vec();
    levels.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let mut acc = MeanAccumulator::new();
    for g in gaps.windows(2) {
        let hi = g[0].max(g[1]);
        let r = if hi > 0.0 { g[0].min(g[1]) / hi } else { 1.0 };
        acc.push(r);
    }
    Ok(LevelStatistics {
        mean_r: acc.mean(),
        stderr: acc.stderr(),
        n_ratios: acc.count() as usize,
    })
}

/// `Σ_x |ψ(x)|⁴` of a unit vector.
pub fn ipr(psi: &[c64]) -> Result<f64> {
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-8 {
        return Err(LabError::NotNormalized { norm: norm2.sqrt() });
    }
    Ok(psi.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ipr_limits() {
        let mut delta = vec![c64::new(0.0, 0.0); 16];
        delta[3] = c64::new(0.0, 1.0);
        assert!((ipr(&delta).unwrap() - 1.0).abs() < 1e-15);
        let uniform = vec![c64::new(0.25, 0.0); 16];
        assert!((ipr(&uniform).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!(ipr(&[c64::new(2.0, 0.0)]).is_err());
    }

    #[test]
    fn equally_spaced_levels() {
        let levels: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let s = level_statistics(&levels).unwrap();
        assert!((s.mean_r - 1.0).abs() < 1e-12);
        assert!(level_statistics(&levels[..10]).is_err());
    }

    #[test]
    fn chern_below_spectrum_is_zero() {
        let spec = ModelSpec::new(10, 1, 5, 0.0, 2.0);
        let r = chern_number(&spec, None, -1.0, 6).unwrap();
        assert_eq!(r.chern, 0);
        assert_eq!(r.occupied, 0);
    }
}
