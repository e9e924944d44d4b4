//! Config-driven experiment runner: validation, execution, persistence and
//! reporting behind the `landau-lab` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    log_time_grid, moment, time_averaged_moment, EnergyFilter, LeakPolicy, MomentSettings, LAPLACE_CUTOFF,
    MAX_LEAKAGE,
};
use crate::error::{LabError, Result};
use crate::measures::StretchedExpMeasure;
use crate::model::{
    band_twist_count, clean_band_structure, clean_bands, clean_gap, clean_spectrum_fourier, sup_norm_bound_experiment, Boundary, DisorderRealization,
    LatticeHamiltonian, ModelSpec,
};
use crate::spectral::{full_spectrum, holder_fit, ids_counts, ids_estimate};
use crate::stats::{derive_seed, experiment_id, MeanAccumulator, ProbabilityEstimate};
use crate::topology::{
    band_window, chern_number, clean_band_cherns_raw, hall_plateau_scan, mobility_csv, mobility_edge_scan,
    EdgeDiagnostic,
};
use crate::verdict::{all_passed, Verdict};
use crate::wegner::{
    gap_survival_probability, regime_region, spectral_averaging_check, wegner_scan, AveragingMeasure,
    EnergyInterval, SpectralAveragingConfig, WegnerRegime, WegnerScan, MIN_REALIZATIONS,
};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

/// Deviation of a Chern curvature sum from the nearest integer still counted
/// as integer-exact.
const INTEGER_TOLERANCE: f64 = 1e-6;
/// Allowed relative deviation of clean cluster spacings from `2B`.
const LANDAU_SPACING_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Ids,
    Wegner,
    SpectralAveraging,
    GapSurvival,
    Chern,
    MobilityEdge,
    Dynamics,
    SampleCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Ids => "ids",
            ExperimentKind::Wegner => "wegner",
            ExperimentKind::SpectralAveraging => "spectral_averaging",
            ExperimentKind::GapSurvival => "gap_survival",
            ExperimentKind::Chern => "chern",
            ExperimentKind::MobilityEdge => "mobility_edge",
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::SampleCheck => "sample_check",
        }
    }
}

/// Energies given either explicitly or as `start, stop, step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergyGrid {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl EnergyGrid {
    pub fn values(&self) -> std::result::Result<Vec<f64>, String> {
        match self {
            EnergyGrid::List(v) => {
                if v.is_empty() {
                    return Err("grid is empty".into());
                }
                if !v.windows(2).all(|w| w[0] < w[1]) {
                    return Err("grid must be strictly increasing".into());
                }
                Ok(v.clone())
            }
            &EnergyGrid::Range { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(format!("need step > 0 and stop >= start, got {start}..{stop} step {step}"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(format!("{} grid points is too many", n + 1));
                }
                // Rounded so that e.g. 0.8 + 5 * 0.02 prints as 0.9.
                Ok((0..=n)
                    .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumParams {
    pub twist: [f64; 2],
    /// Twist grid side used to resolve the clean bands; 0 picks one from L.
    pub n_twist: usize,
    pub gap_threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_bands: Option<usize>,
    /// Number of lowest cluster spacings compared with `2B`.
    pub landau_spacings: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            twist: [0.0, 0.0],
            n_twist: 0,
            gap_threshold: 0.05,
            expected_bands: None,
            landau_spacings: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdsParams {
    pub energies: EnergyGrid,
    pub n_realizations: usize,
    pub holder_deltas: Vec<f64>,
}

impl Default for IdsParams {
    fn default() -> Self {
        Self {
            energies: EnergyGrid::Range {
                start: 0.0,
                stop: 8.0,
                step: 0.05,
            },
            n_realizations: 20,
            holder_deltas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WegnerParams {
    pub regime: WegnerRegime,
    pub intervals: Vec<EnergyInterval>,
    /// Defaults to `[model.L]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    /// Defaults to `[model.lambda]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    pub q_values: Vec<f64>,
    pub n_realizations: usize,
    /// In the gap regime, also run λ = 0 on the same intervals.
    pub clean_control: bool,
}

impl Default for WegnerParams {
    fn default() -> Self {
        Self {
            regime: WegnerRegime::General,
            intervals: Vec::new(),
            sizes: None,
            lambdas: None,
            q_values: vec![4.0, 2.0],
            n_realizations: 200,
            clean_control: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralAveragingParams {
    pub dim: usize,
    pub measure: AveragingMeasure,
    pub width_range: [f64; 2],
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub n_trials: usize,
}

impl Default for SpectralAveragingParams {
    fn default() -> Self {
        let c = SpectralAveragingConfig::default();
        Self {
            dim: c.dim,
            measure: c.measure,
            width_range: [c.width_range.0, c.width_range.1],
            tolerance: c.tolerance,
            max_evaluations: c.max_evaluations,
            n_trials: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapSurvivalParams {
    pub eps: f64,
    pub n_realizations: usize,
}

impl Default for GapSurvivalParams {
    fn default() -> Self {
        Self {
            eps: 2.0,
            n_realizations: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChernParams {
    /// Fermi energies of the Hall curve; defaults to the clean gap centers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<EnergyGrid>,
    /// Twist grid sides; the first drives the Hall curve, all are compared
    /// in the clean gap checks.
    pub twist_grids: Vec<usize>,
    pub n_realizations: usize,
    /// Expected clean Chern numbers of gaps 1, 2, ...
    pub expected_gap_cherns: Vec<i64>,
    /// Clean gap (1-based) whose filling by disorder is examined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_fill: Option<usize>,
}

impl Default for ChernParams {
    fn default() -> Self {
        Self {
            energies: None,
            twist_grids: vec![6],
            n_realizations: 50,
            expected_gap_cherns: Vec::new(),
            gap_fill: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilityEdgeParams {
    pub band: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Defaults to the clean band window sampled every 0.02.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<EnergyGrid>,
    pub n_realizations: usize,
    pub twist_grid: usize,
}

impl Default for MobilityEdgeParams {
    fn default() -> Self {
        Self {
            band: 1,
            lambdas: None,
            energies: None,
            n_realizations: 50,
            twist_grid: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakPolicyConfig {
    Error,
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsParams {
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_center: Option<f64>,
    pub filter_half_width: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub horizons: Vec<f64>,
    pub n_realizations: usize,
    pub leak_policy: LeakPolicyConfig,
    /// Lower bound on `𝓜(T_last) / 𝓜(T_first)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ratio: Option<f64>,
    /// Upper bound on `𝓜(T_last) / 𝓜(T_first)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            p: 2.0,
            filter_center: None,
            filter_half_width: 0.05,
            t_min: 0.1,
            t_max: 5000.0,
            per_decade: 40,
            horizons: vec![50.0, 500.0],
            n_realizations: 20,
            leak_policy: LeakPolicyConfig::Error,
            min_ratio: None,
            max_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleCheckParams {
    pub n_samples: usize,
    pub eps_values: Vec<f64>,
    pub betas: Vec<f64>,
    pub sup_trials: usize,
}

impl Default for SampleCheckParams {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            eps_values: vec![0.5, 1.0, 2.0],
            betas: vec![1.0, 2.0],
            sup_trials: 20_000,
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment: kind, model, seed, output directory and the parameter
/// section of that kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<IdsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wegner: Option<WegnerParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_averaging: Option<SpectralAveragingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_survival: Option<GapSurvivalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chern: Option<ChernParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility_edge: Option<MobilityEdgeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_check: Option<SampleCheckParams>,
}

impl ExperimentConfig {
    /// Parses, defaults and validates; every violation is reported.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| LabError::Config(vec![e.to_string()]))?;
        let config: ExperimentConfig =
            ExperimentConfig::deserialize(table.clone()).map_err(|e| LabError::Config(vec![e.to_string()]))?;
        let mut violations = config.section_violations();
        let resolved = config.resolved();
        let echo = toml::Value::try_from(&resolved).map_err(|e| LabError::Serialization(e.to_string()))?;
        unknown_keys(&toml::Value::Table(table), &echo, "", &mut violations);
        if violations.is_empty() {
            violations.extend(resolved.violations());
        }
        if violations.is_empty() {
            Ok(resolved)
        } else {
            Err(LabError::Config(violations))
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| LabError::Serialization(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::Serialization(e.to_string()))
    }

    fn section_names(&self) -> [(ExperimentKind, bool); 9] {
        [
            (ExperimentKind::Spectrum, self.spectrum.is_some()),
            (ExperimentKind::Ids, self.ids.is_some()),
            (ExperimentKind::Wegner, self.wegner.is_some()),
            (ExperimentKind::SpectralAveraging, self.spectral_averaging.is_some()),
            (ExperimentKind::GapSurvival, self.gap_survival.is_some()),
            (ExperimentKind::Chern, self.chern.is_some()),
            (ExperimentKind::MobilityEdge, self.mobility_edge.is_some()),
            (ExperimentKind::Dynamics, self.dynamics.is_some()),
            (ExperimentKind::SampleCheck, self.sample_check.is_some()),
        ]
    }

    fn section_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (kind, present) in self.section_names() {
            if present && kind != self.kind {
                out.push(format!(
                    "section [{}] does not apply to kind = \"{}\"",
                    kind.name(),
                    self.kind.name()
                ));
            }
        }
        if self.model.is_none() && self.kind != ExperimentKind::SpectralAveraging {
            out.push("missing [model] section".into());
        }
        out
    }

    /// Fills the kind's section and every defaulted list.
    fn resolved(&self) -> Self {
        let mut c = self.clone();
        let model = c.model;
        match c.kind {
            ExperimentKind::Spectrum => {
                let p = c.spectrum.get_or_insert_with(Default::default);
                if let (0, Some(m)) = (p.n_twist, model) {
                    p.n_twist = band_twist_count(&m);
                }
            }
            ExperimentKind::Ids => {
                c.ids.get_or_insert_with(Default::default);
            }
            ExperimentKind::Wegner => {
                let w = c.wegner.get_or_insert_with(Default::default);
                if let Some(m) = model {
                    w.sizes.get_or_insert_with(|| vec![m.size]);
                    w.lambdas.get_or_insert_with(|| vec![m.lambda]);
                }
            }
            ExperimentKind::SpectralAveraging => {
                c.spectral_averaging.get_or_insert_with(Default::default);
            }
            ExperimentKind::GapSurvival => {
                c.gap_survival.get_or_insert_with(Default::default);
            }
            ExperimentKind::Chern => {
                c.chern.get_or_insert_with(Default::default);
            }
            ExperimentKind::MobilityEdge => {
                let m_e = c.mobility_edge.get_or_insert_with(Default::default);
                if let Some(m) = model {
                    m_e.lambdas.get_or_insert_with(|| vec![m.lambda]);
                    if m_e.energies.is_none() {
                        if let Ok((lo, hi)) = band_window(&m, m_e.band) {
                            let round = |x: f64| (x * 50.0).round() / 50.0;
                            m_e.energies = Some(EnergyGrid::Range {
                                start: round(lo),
                                stop: round(hi),
                                step: 0.02,
                            });
                        }
                    }
                }
            }
            ExperimentKind::Dynamics => {
                c.dynamics.get_or_insert_with(Default::default);
            }
            ExperimentKind::SampleCheck => {
                c.sample_check.get_or_insert_with(Default::default);
            }
        }
        c
    }

    fn boundary(&self) -> Boundary {
        if self.kind == ExperimentKind::Dynamics {
            Boundary::Open
        } else {
            Boundary::Torus
        }
    }

    /// Semantic checks on a resolved config.
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let model = match self.model {
            Some(m) => {
                out.extend(m.violations(self.boundary()).into_iter().map(|v| format!("model: {v}")));
                Some(m)
            }
            None => None,
        };
        let model_ok = out.is_empty();
        match self.kind {
            ExperimentKind::Spectrum => {
                let p = self.spectrum.as_ref().unwrap();
                if p.n_twist == 0 {
                    out.push("spectrum.n_twist must be >= 1".into());
                }
                if !(p.gap_threshold > 0.0) {
                    out.push(format!("spectrum.gap_threshold must be > 0, got {}", p.gap_threshold));
                }
            }
            ExperimentKind::Ids => {
                let p = self.ids.as_ref().unwrap();
                if let Err(e) = p.energies.values() {
                    out.push(format!("ids.energies: {e}"));
                }
                if p.n_realizations == 0 {
                    out.push("ids.n_realizations must be >= 1".into());
                }
                if p.holder_deltas.iter().any(|&d| !(d > 0.0)) {
                    out.push("ids.holder_deltas must be positive".into());
                }
            }
            ExperimentKind::Wegner => {
                let p = self.wegner.as_ref().unwrap();
                if p.intervals.is_empty() {
                    out.push("wegner.intervals must be non-empty".into());
                }
                for (i, iv) in p.intervals.iter().enumerate() {
                    if !(iv.width > 0.0) {
                        out.push(format!("wegner.intervals[{i}].width must be > 0, got {}", iv.width));
                    }
                }
                if p.n_realizations < MIN_REALIZATIONS {
                    out.push(format!(
                        "wegner.n_realizations must be >= {MIN_REALIZATIONS}, got {}",
                        p.n_realizations
                    ));
                }
                if p.q_values.is_empty() || p.q_values.iter().any(|&q| !(q >= 0.0)) {
                    out.push("wegner.q_values must be non-empty and >= 0".into());
                }
                let lambdas = p.lambdas.clone().unwrap_or_default();
                if lambdas.is_empty() {
                    out.push("wegner.lambdas must be non-empty".into());
                }
                for &l in &lambdas {
                    if p.regime == WegnerRegime::SpectralGap {
                        if !(l > 0.0 && l <= 1.0) {
                            out.push(format!(
                                "wegner.lambdas: λ ∈ (0,1] required in regime (c) (spectral_gap), got {l}"
                            ));
                        }
                    } else if !(0.0..=1.0).contains(&l) {
                        out.push(format!("wegner.lambdas: λ ∈ [0,1] required, got {l}"));
                    }
                }
                if let Some(m) = model {
                    let sizes = p.sizes.clone().unwrap_or_default();
                    if sizes.is_empty() {
                        out.push("wegner.sizes must be non-empty".into());
                    }
                    for (i, &l) in sizes.iter().enumerate() {
                        for v in m.with_size(l).violations(Boundary::Torus) {
                            out.push(format!("wegner.sizes[{i}]: {v}"));
                        }
                    }
                    if model_ok && !lambdas.is_empty() && p.n_realizations >= 1 {
                        let lmax = lambdas.iter().cloned().fold(0.0, f64::max);
                        match regime_region(&m, p.regime, lmax) {
                            Ok((lo, hi)) => {
                                for (i, iv) in p.intervals.iter().enumerate() {
                                    if iv.lo() < lo || iv.hi() > hi {
                                        out.push(format!(
                                            "wegner.intervals[{i}] = [{}, {}] leaves the {:?} region [{lo:.4}, {hi:.4}]",
                                            iv.lo(),
                                            iv.hi(),
                                            p.regime
                                        ));
                                    }
                                }
                            }
                            Err(e) => out.push(format!("wegner.regime: {e}")),
                        }
                    }
                }
            }
            ExperimentKind::SpectralAveraging => {
                let p = self.spectral_averaging.as_ref().unwrap();
                if p.dim == 0 {
                    out.push("spectral_averaging.dim must be >= 1".into());
                }
                if !(p.width_range[0] > 0.0 && p.width_range[1] > p.width_range[0]) {
                    out.push(format!(
                        "spectral_averaging.width_range must satisfy 0 < lo < hi, got {:?}",
                        p.width_range
                    ));
                }
                if !(p.tolerance > 0.0) {
                    out.push("spectral_averaging.tolerance must be > 0".into());
                }
                if p.n_trials == 0 {
                    out.push("spectral_averaging.n_trials must be >= 1".into());
                }
                if let Err(e) = p.measure.concentration(1.0) {
                    out.push(format!("spectral_averaging.measure: {e}"));
                }
            }
            ExperimentKind::GapSurvival => {
                let p = self.gap_survival.as_ref().unwrap();
                if !(p.eps > 0.0) {
                    out.push(format!("gap_survival.eps must be > 0, got {}", p.eps));
                }
                if p.n_realizations == 0 {
                    out.push("gap_survival.n_realizations must be >= 1".into());
                }
                if let Some(m) = model {
                    if !(m.lambda > 0.0 && m.lambda <= 1.0) {
                        out.push(format!("model.lambda: λ ∈ (0,1] required for gap_survival, got {}", m.lambda));
                    }
                }
            }
            ExperimentKind::Chern => {
                let p = self.chern.as_ref().unwrap();
                if let Some(g) = &p.energies {
                    if let Err(e) = g.values() {
                        out.push(format!("chern.energies: {e}"));
                    }
                }
                if p.twist_grids.is_empty() || p.twist_grids.iter().any(|&g| g < crate::topology::MIN_TWIST_GRID) {
                    out.push(format!(
                        "chern.twist_grids must be non-empty with every side >= {}",
                        crate::topology::MIN_TWIST_GRID
                    ));
                }
                if p.n_realizations == 0 {
                    out.push("chern.n_realizations must be >= 1".into());
                }
                if let (Some(m), Some(k)) = (model, p.gap_fill) {
                    if model_ok && clean_gap(&m, k).is_err() {
                        out.push(format!("chern.gap_fill: clean gap {k} does not exist"));
                    }
                }
            }
            ExperimentKind::MobilityEdge => {
                let p = self.mobility_edge.as_ref().unwrap();
                match &p.energies {
                    Some(g) => {
                        if let Err(e) = g.values() {
                            out.push(format!("mobility_edge.energies: {e}"));
                        }
                    }
                    None => out.push(format!("mobility_edge.band: clean band {} not resolved", p.band)),
                }
                let lambdas = p.lambdas.clone().unwrap_or_default();
                if lambdas.is_empty() {
                    out.push("mobility_edge.lambdas must be non-empty".into());
                }
                for &l in &lambdas {
                    if !(0.0..=1.0).contains(&l) {
                        out.push(format!("mobility_edge.lambdas: λ ∈ [0,1] required, got {l}"));
                    }
                }
                if p.n_realizations == 0 {
                    out.push("mobility_edge.n_realizations must be >= 1".into());
                }
                if p.twist_grid < crate::topology::MIN_TWIST_GRID {
                    out.push(format!(
                        "mobility_edge.twist_grid must be >= {}",
                        crate::topology::MIN_TWIST_GRID
                    ));
                }
            }
            ExperimentKind::Dynamics => {
                let p = self.dynamics.as_ref().unwrap();
                if p.filter_center.is_none() {
                    out.push("dynamics.filter_center is required".into());
                }
                if !(p.filter_half_width > 0.0) {
                    out.push(format!("dynamics.filter_half_width must be > 0, got {}", p.filter_half_width));
                }
                if !(p.p >= 0.0) {
                    out.push(format!("dynamics.p must be >= 0, got {}", p.p));
                }
                if !(p.t_min > 0.0 && p.t_max > p.t_min) {
                    out.push("dynamics: need 0 < t_min < t_max".into());
                }
                if p.per_decade == 0 {
                    out.push("dynamics.per_decade must be >= 1".into());
                }
                if p.n_realizations == 0 {
                    out.push("dynamics.n_realizations must be >= 1".into());
                }
                for &t in &p.horizons {
                    if !(t > 0.0) || LAPLACE_CUTOFF * t > p.t_max {
                        out.push(format!(
                            "dynamics.horizons: T = {t} needs 0 < T and {LAPLACE_CUTOFF}·T <= t_max = {}",
                            p.t_max
                        ));
                    }
                }
                if (p.min_ratio.is_some() || p.max_ratio.is_some()) && p.horizons.len() < 2 {
                    out.push("dynamics: ratio checks need at least two horizons".into());
                }
            }
            ExperimentKind::SampleCheck => {
                let p = self.sample_check.as_ref().unwrap();
                if p.n_samples < 2 {
                    out.push("sample_check.n_samples must be >= 2".into());
                }
                if p.eps_values.iter().any(|&e| !(e >= 0.0)) {
                    out.push("sample_check.eps_values must be >= 0".into());
                }
                if let Some(m) = model {
                    for &b in &p.betas {
                        if !(b > 1.0 / m.alpha) {
                            out.push(format!("sample_check.betas: β must exceed 1/α = {}, got {b}", 1.0 / m.alpha));
                        }
                    }
                }
                if !p.betas.is_empty() && p.sup_trials == 0 {
                    out.push("sample_check.sup_trials must be >= 1".into());
                }
            }
        }
        out
    }
}

/// Records every key of `input` that the resolved echo does not contain.
fn unknown_keys(input: &toml::Value, echo: &toml::Value, path: &str, out: &mut Vec<String>) {
    match (input, echo) {
        (toml::Value::Table(a), toml::Value::Table(b)) => {
            for (k, v) in a {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get(k) {
                    Some(e) => unknown_keys(v, e, &p, out),
                    None => out.push(format!("unknown key `{p}`")),
                }
            }
        }
        (toml::Value::Array(a), toml::Value::Array(b)) => {
            for (i, (v, e)) in a.iter().zip(b).enumerate() {
                unknown_keys(v, e, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| LabError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    ExperimentConfig::from_toml_str(&text)
}

/// Files and verdicts of one experiment, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub files: Vec<(String, String)>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub verdicts: Vec<Verdict>,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        all_passed(&self.verdicts)
    }
}

fn law_of(model: &ModelSpec) -> Result<StretchedExpMeasure> {
    StretchedExpMeasure::new(model.alpha)
}

/// Runs the experiment on the current rayon pool and returns its outputs.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let seed = config.seed;
    let wrap = |e: LabError| LabError::Experiment {
        experiment: config.kind.name().to_string(),
        seed,
        source: Box::new(e),
    };
    match config.kind {
        ExperimentKind::Spectrum => run_spectrum(config),
        ExperimentKind::Ids => run_ids(config),
        ExperimentKind::Wegner => run_wegner(config),
        ExperimentKind::SpectralAveraging => run_spectral_averaging(config),
        ExperimentKind::GapSurvival => run_gap_survival(config),
        ExperimentKind::Chern => run_chern(config),
        ExperimentKind::MobilityEdge => run_mobility(config),
        ExperimentKind::Dynamics => run_dynamics(config),
        ExperimentKind::SampleCheck => run_sample_check(config),
    }
    .map_err(wrap)
}

fn run_spectrum(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.spectrum.as_ref().unwrap();
    let eigenvalues = if m.lambda == 0.0 {
        clean_spectrum_fourier(&m, p.twist)?
    } else {
        let law = law_of(&m)?;
        let seed = derive_seed(config.seed, experiment_id("spectrum"), 0);
        let d = DisorderRealization::draw(&law, &m, seed);
        let h = LatticeHamiltonian::new(&m).disorder(&d).twist(p.twist[0], p.twist[1]).build()?;
        full_spectrum(&h)?.eigenvalues
    };
    let mut spectrum_csv = String::from("k,E\n");
    for (k, e) in eigenvalues.iter().enumerate() {
        spectrum_csv.push_str(&format!("{k},{e}\n"));
    }
    let bands = clean_bands(&m.with_lambda(0.0), p.n_twist, p.gap_threshold)?;
    let mut bands_csv = String::from("band,lo,hi,width,count\n");
    for (i, b) in bands.iter().enumerate() {
        bands_csv.push_str(&format!("{},{},{},{},{}\n", i + 1, b.lo, b.hi, b.width(), b.count));
    }
    let mut verdicts = Vec::new();
    if let Some(expected) = p.expected_bands {
        verdicts.push(Verdict::new(
            format!("clean flux {}/{} spectrum has {expected} bands", m.flux_p, m.flux_q),
            bands.len() == expected,
            format!("{} clusters at gap threshold {}", bands.len(), p.gap_threshold),
        ));
    }
    if p.landau_spacings > 0 {
        let target = 2.0 * m.effective_field() * m.hopping;
        let spacings: Vec<f64> = bands
            .windows(2)
            .take(p.landau_spacings)
            .map(|w| w[1].center() - w[0].center())
            .collect();
        let worst = spacings
            .iter()
            .map(|s| (s / target - 1.0).abs())
            .fold(0.0, f64::max);
        let listed: Vec<String> = spacings.iter().map(|s| format!("{s:.5}")).collect();
        verdicts.push(Verdict::new(
            format!("lowest {} cluster spacings match 2B", p.landau_spacings),
            spacings.len() == p.landau_spacings && worst <= LANDAU_SPACING_TOLERANCE,
            format!(
                "spacings [{}] vs 2B = {target:.5}; worst relative deviation {worst:.4} (limit {LANDAU_SPACING_TOLERANCE})",
                listed.join(", ")
            ),
        ));
    }
    Ok(ExperimentOutput {
        files: vec![("spectrum.csv".into(), spectrum_csv), ("bands.csv".into(), bands_csv)],
        verdicts,
    })
}

fn run_ids(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.ids.as_ref().unwrap();
    let law = law_of(&m)?;
    let grid = p.energies.values().map_err(LabError::InvalidArgument)?;
    let curve = ids_estimate(&m, &law, &grid, p.n_realizations, config.seed)?;
    let mut verdicts = vec![Verdict::new(
        "IDS nondecreasing",
        curve.is_nondecreasing(),
        format!("{} grid points, {} realizations", grid.len(), p.n_realizations),
    )];
    if !p.holder_deltas.is_empty() {
        let fit = holder_fit(&curve, &p.holder_deltas)?;
        verdicts.push(Verdict::new(
            "IDS modulus of continuity has a positive exponent",
            fit.exponent > 0.0,
            format!("exponent {:.4}, R² {:.4}", fit.exponent, fit.r_squared),
        ));
    }
    Ok(ExperimentOutput {
        files: vec![("ids.csv".into(), curve.to_csv())],
        verdicts,
    })
}

fn run_wegner(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.wegner.as_ref().unwrap();
    let law = law_of(&m)?;
    let mut lambdas = p.lambdas.clone().unwrap_or_default();
    if p.regime == WegnerRegime::SpectralGap && p.clean_control {
        lambdas.insert(0, 0.0);
    }
    let scan = WegnerScan {
        regime: p.regime,
        intervals: p.intervals.clone(),
        sizes: p.sizes.clone().unwrap_or_default(),
        lambdas,
        q_values: p.q_values.clone(),
        n_realizations: p.n_realizations,
        base_seed: config.seed,
    };
    let report = wegner_scan(&m, &law, &scan)?;
    Ok(ExperimentOutput {
        files: vec![("wegner.csv".into(), report.to_csv()), ("wegner.json".into(), report.to_json()?)],
        verdicts: report.verdicts,
    })
}

fn run_spectral_averaging(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = config.spectral_averaging.as_ref().unwrap();
    let sa = SpectralAveragingConfig {
        dim: p.dim,
        measure: p.measure.clone(),
        width_range: (p.width_range[0], p.width_range[1]),
        tolerance: p.tolerance,
        max_evaluations: p.max_evaluations,
    };
    let trials = spectral_averaging_check(&sa, p.n_trials, config.seed)?;
    let mut csv = String::from("index,dim,lo,hi,lhs,error,rhs,evaluations,passed\n");
    for t in &trials {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t.index, t.dim, t.interval.0, t.interval.1, t.lhs, t.error, t.rhs, t.evaluations, t.passed
        ));
    }
    let violations = trials.iter().filter(|t| !t.passed).count();
    let worst = trials.iter().map(|t| t.lhs / t.rhs).fold(0.0, f64::max);
    let verdicts = vec![Verdict::new(
        "spectral averaging bound holds on every trial",
        violations == 0,
        format!(
            "{} trials, {violations} violations beyond 3 error bars, largest LHS/RHS {worst:.4e}",
            trials.len()
        ),
    )];
    Ok(ExperimentOutput {
        files: vec![("spectral_averaging.csv".into(), csv)],
        verdicts,
    })
}

fn run_gap_survival(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.gap_survival.as_ref().unwrap();
    let law = law_of(&m)?;
    let g = gap_survival_probability(&m, &law, p.eps, p.n_realizations, config.seed)?;
    let csv = format!(
        "eps,estimate,stderr,closed_form,sigma,trials,conditioned,weyl_violations,max_weyl_excess\n{},{},{},{},{},{},{},{},{}\n",
        g.eps,
        g.probability.estimate,
        g.probability.stderr,
        g.probability.closed_form.unwrap_or(f64::NAN),
        g.probability.sigma_distance().unwrap_or(f64::NAN),
        g.probability.trials,
        g.conditioned,
        g.weyl_violations,
        g.max_weyl_excess
    );
    Ok(ExperimentOutput {
        files: vec![("gap_survival.csv".into(), csv)],
        verdicts: g.verdicts,
    })
}

fn clean_gap_centers(m: &ModelSpec) -> Result<Vec<f64>> {
    let bands = clean_band_structure(&m)?;
    Ok(bands.windows(2).map(|w| 0.5 * (w[0].hi + w[1].lo)).collect())
}

fn run_chern(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.chern.as_ref().unwrap();
    let law = law_of(&m)?;
    let mut files = Vec::new();
    let mut verdicts = Vec::new();
    let centers = clean_gap_centers(&m)?;

    let mut grid = match &p.energies {
        Some(g) => g.values().map_err(LabError::InvalidArgument)?,
        None => centers.clone(),
    };
    let gap_fill = match p.gap_fill {
        Some(k) => {
            let (lo, hi) = clean_gap(&m, k)?;
            let c = ((0.5 * (lo + hi)) * 1e12).round() / 1e12;
            if !grid.contains(&c) {
                grid.push(c);
                grid.sort_by(f64::total_cmp);
            }
            Some((k, lo, c, hi))
        }
        None => None,
    };
    let curve = hall_plateau_scan(&m, &law, &grid, p.n_realizations, p.twist_grids[0], config.seed)?;
    files.push(("hall.csv".to_string(), curve.to_csv()));

    if m.lambda == 0.0 {
        let mut gap_csv = String::from("gap,E_F,grid_n,chern,raw\n");
        let mut band_csv = String::from("band,grid_n,chern,raw\n");
        let mut worst_integer: f64 = 0.0;
        let mut per_grid: Vec<Vec<i64>> = Vec::new();
        for &g in &p.twist_grids {
            let mut row = Vec::new();
            for (k, &e) in centers.iter().enumerate() {
                let r = chern_number(&m, None, e, g)?;
                worst_integer = worst_integer.max((r.raw - r.raw.round()).abs());
                gap_csv.push_str(&format!("{},{},{},{},{}\n", k + 1, e, g, r.chern, r.raw));
                row.push(r.chern);
            }
            per_grid.push(row);
            let raws = clean_band_cherns_raw(&m, g)?;
            let mut sum_raw = 0.0;
            let mut sum_int = 0;
            for (b, &raw) in raws.iter().enumerate() {
                worst_integer = worst_integer.max((raw - raw.round()).abs());
                band_csv.push_str(&format!("{},{},{},{}\n", b + 1, g, raw.round() as i64, raw));
                sum_raw += raw;
                sum_int += raw.round() as i64;
            }
            verdicts.push(Verdict::new(
                format!("subband Chern numbers sum to zero ({g}x{g} twists)"),
                sum_int == 0 && sum_raw.abs() < INTEGER_TOLERANCE,
                format!(
                    "band Cherns {:?}, sum {sum_int}, raw sum {sum_raw:.3e}",
                    raws.iter().map(|r| r.round() as i64).collect::<Vec<_>>()
                ),
            ));
        }
        verdicts.push(Verdict::new(
            "clean Chern numbers are integer-exact",
            worst_integer < INTEGER_TOLERANCE,
            format!("largest distance to an integer {worst_integer:.3e} (limit {INTEGER_TOLERANCE:e})"),
        ));
        if per_grid.len() >= 2 {
            let stable = per_grid.windows(2).all(|w| w[0] == w[1]);
            verdicts.push(Verdict::new(
                "gap Chern numbers stable across twist grids",
                stable,
                format!("grids {:?}: {:?}", p.twist_grids, per_grid),
            ));
        }
        if !p.expected_gap_cherns.is_empty() {
            let got: Vec<i64> = per_grid[0].iter().take(p.expected_gap_cherns.len()).copied().collect();
            verdicts.push(Verdict::new(
                format!("gap Chern numbers equal {:?}", p.expected_gap_cherns),
                got == p.expected_gap_cherns,
                format!("measured {got:?}"),
            ));
        }
        files.push(("gap_cherns.csv".to_string(), gap_csv));
        files.push(("band_cherns.csv".to_string(), band_csv));
    } else if !p.expected_gap_cherns.is_empty() {
        let mut got = Vec::new();
        for &c in centers.iter().take(p.expected_gap_cherns.len()) {
            got.push(curve.point_at(c).and_then(|pt| pt.majority()).map(|x| x.0));
        }
        let expected: Vec<Option<i64>> = p.expected_gap_cherns.iter().map(|&c| Some(c)).collect();
        verdicts.push(Verdict::new(
            format!("majority Chern at the clean gap centers equals {:?}", p.expected_gap_cherns),
            got == expected,
            format!("measured {got:?}"),
        ));
    }

    if let Some((k, lo, c, hi)) = gap_fill {
        let counts = ids_counts(&m, &law, &[lo, c, hi], p.n_realizations, config.seed)?;
        let volume = m.n_sites() as f64;
        let ids = MeanAccumulator::from_slice(&counts.iter().map(|r| r[1] as f64 / volume).collect::<Vec<_>>());
        let inside =
            MeanAccumulator::from_slice(&counts.iter().map(|r| (r[2] - r[0]) as f64).collect::<Vec<_>>());
        files.push((
            "gap_fill.csv".to_string(),
            format!(
                "gap,E_lo,E_center,E_hi,ids_center_mean,ids_center_stderr,gap_states_mean,gap_states_stderr,n\n{k},{lo},{c},{hi},{},{},{},{},{}\n",
                ids.mean(),
                ids.stderr(),
                inside.mean(),
                inside.stderr(),
                ids.count()
            ),
        ));
        verdicts.push(Verdict::new(
            format!("IDS positive at the center of clean gap {k}"),
            ids.mean() > 3.0 * ids.stderr() && ids.mean() > 0.0,
            format!("N(E = {c:.4}) = {:.5} ± {:.5}", ids.mean(), ids.stderr()),
        ));
        verdicts.push(Verdict::new(
            format!("disorder puts states into clean gap {k}"),
            inside.mean() > 3.0 * inside.stderr() && inside.mean() > 0.0,
            format!(
                "eigenvalues in [{lo:.4}, {hi:.4}]: {:.3} ± {:.3} per realization",
                inside.mean(),
                inside.stderr()
            ),
        ));
        let pt = curve
            .point_at(c)
            .ok_or_else(|| LabError::InvalidArgument(format!("gap center {c} missing from the Hall curve")))?;
        verdicts.push(Verdict::new(
            format!("Hall conductance integer-pure at the center of clean gap {k}"),
            pt.is_pure(),
            format!(
                "histogram {{{}}}, {} failures of {}, minority fraction {:.3} (limit {})",
                pt.histogram_string(),
                pt.n_fail,
                pt.n_realizations,
                pt.minority_fraction(),
                crate::topology::MIXED_THRESHOLD
            ),
        ));
    }
    Ok(ExperimentOutput { files, verdicts })
}

fn run_mobility(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.mobility_edge.as_ref().unwrap();
    let law = law_of(&m)?;
    let grid = p
        .energies
        .as_ref()
        .ok_or(LabError::EmptyGrid("mobility energies"))?
        .values()
        .map_err(LabError::InvalidArgument)?;
    let lambdas = p.lambdas.clone().unwrap_or_default();
    let estimates = mobility_edge_scan(&m, &law, p.band, &lambdas, &grid, p.n_realizations, p.twist_grid, config.seed)?;
    let mut hall = String::from("E_F,lambda,chern_mean,integer_histogram,n_fail\n");
    for e in &estimates {
        if let Some(c) = &e.curve {
            hall.extend(c.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    let mut verdicts = Vec::new();
    let mut disordered: Vec<_> = estimates
        .iter()
        .filter(|e| e.lambda > 0.0 && e.diagnostic == EdgeDiagnostic::ChernJump)
        .collect();
    disordered.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    if disordered.len() >= 2 {
        let widths: Vec<String> = disordered.iter().map(|e| format!("λ={}: {:.3}", e.lambda, e.width())).collect();
        let monotone = disordered.windows(2).all(|w| w[1].width() <= w[0].width());
        let shrinks = disordered.last().unwrap().width() < disordered[0].width();
        verdicts.push(Verdict::new(
            format!("mixed-Chern window of band {} shrinks with λ", p.band),
            monotone && shrinks,
            format!("widths {}", widths.join(", ")),
        ));
    }
    let clean_center = clean_band_structure(&m)?[p.band - 1].center();
    let cell = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    for e in &disordered {
        let off = (e.center() - clean_center).abs();
        verdicts.push(Verdict::new(
            format!("window center near the clean band center (λ = {})", e.lambda),
            off <= cell + 1e-12,
            format!(
                "center {:.4} vs clean {clean_center:.4}: offset {off:.4} (one grid cell {cell:.4})",
                e.center()
            ),
        ));
    }
    for e in estimates.iter().filter(|e| e.lambda > 0.0 && e.diagnostic != EdgeDiagnostic::ChernJump) {
        verdicts.push(Verdict::new(
            format!("mixed-Chern window resolved (λ = {})", e.lambda),
            false,
            format!("fell back to {:?}", e.diagnostic),
        ));
    }
    Ok(ExperimentOutput {
        files: vec![("mobility.csv".into(), mobility_csv(&estimates)), ("hall.csv".into(), hall)],
        verdicts,
    })
}

fn run_dynamics(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.dynamics.as_ref().unwrap();
    let law = law_of(&m)?;
    let filter = EnergyFilter::new(p.filter_center.unwrap_or_default(), p.filter_half_width)?;
    let settings = MomentSettings {
        p: p.p,
        filter,
        times: log_time_grid(p.t_min, p.t_max, p.per_decade)?,
        n_realizations: p.n_realizations,
        base_seed: config.seed,
        leak_policy: match p.leak_policy {
            LeakPolicyConfig::Error => LeakPolicy::Error,
            LeakPolicyConfig::Truncate => LeakPolicy::Truncate,
        },
    };
    let mut record = moment(&m, &law, &settings)?;
    let reachable: Vec<f64> = p
        .horizons
        .iter()
        .copied()
        .filter(|&t| LAPLACE_CUTOFF * t <= record.horizon * (1.0 + 1e-12))
        .collect();
    if !reachable.is_empty() {
        record = time_averaged_moment(&record, &reachable)?;
    }
    let mut verdicts = vec![Verdict::new(
        "boundary leakage below threshold",
        record.max_leakage < MAX_LEAKAGE,
        format!(
            "max leakage {:.3e} (limit {MAX_LEAKAGE:e}), horizon t = {:.1}",
            record.max_leakage, record.horizon
        ),
    )];
    if p.min_ratio.is_some() || p.max_ratio.is_some() {
        let first = p.horizons.iter().cloned().fold(f64::INFINITY, f64::min);
        let last = p.horizons.iter().cloned().fold(0.0, f64::max);
        let ratio = match (record.time_average(first), record.time_average(last)) {
            (Some(a), Some(b)) => Some((b.mean / a.mean, a, b)),
            _ => None,
        };
        let describe = |bound: &str| match &ratio {
            Some((r, a, b)) => format!(
                "𝓜(T={last}) / 𝓜(T={first}) = {:.4e} / {:.4e} = {r:.3} ({bound})",
                b.mean, a.mean
            ),
            None => format!(
                "horizon t = {:.1} too short for T = {last} (needs {})",
                record.horizon,
                LAPLACE_CUTOFF * last
            ),
        };
        if let Some(lo) = p.min_ratio {
            verdicts.push(Verdict::new(
                "time-averaged moment grows",
                ratio.as_ref().is_some_and(|(r, _, _)| *r >= lo),
                describe(&format!("required >= {lo}")),
            ));
        }
        if let Some(hi) = p.max_ratio {
            verdicts.push(Verdict::new(
                "time-averaged moment stays bounded",
                ratio.as_ref().is_some_and(|(r, _, _)| *r <= hi),
                describe(&format!("required <= {hi}")),
            ));
        }
    }
    let json = serde_json::to_string_pretty(&record).map_err(|e| LabError::Serialization(e.to_string()))?;
    Ok(ExperimentOutput {
        files: vec![
            ("moments.csv".into(), record.moments_csv()),
            ("time_average.csv".into(), record.time_average_csv()),
            ("transport.json".into(), json),
        ],
        verdicts,
    })
}

fn run_sample_check(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let m = config.model.unwrap();
    let p = config.sample_check.as_ref().unwrap();
    let law = law_of(&m)?;
    let stream = experiment_id("sample_check");
    let samples = law.sample(derive_seed(config.seed, stream, 0), p.n_samples);
    let n = samples.len() as f64;
    let mut csv = String::from("check,parameter,estimate,stderr,exact,sigma\n");
    let mut verdicts = Vec::new();
    let mut record = |check: &str, param: f64, est: f64, se: f64, exact: f64, verdicts: &mut Vec<Verdict>| {
        let sigma = if se > 0.0 { (est - exact).abs() / se } else if est == exact { 0.0 } else { f64::INFINITY };
        csv.push_str(&format!("{check},{param},{est},{se},{exact},{sigma}\n"));
        verdicts.push(Verdict::new(
            format!("{check} ({param}) within 3σ"),
            sigma <= 3.0,
            format!("estimate {est:.6} ± {se:.6}, exact {exact:.6}, distance {sigma:.2}σ"),
        ));
    };

    let sq: Vec<f64> = samples.iter().map(|w| w * w).collect();
    let acc = MeanAccumulator::from_slice(&sq);
    record("second_moment", 2.0, acc.mean(), acc.stderr(), law.abs_moment(2.0), &mut verdicts);

    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[(sorted.len() - 1) / 2] + sorted[sorted.len() / 2]);
    let median_se = 1.0 / (2.0 * law.density(0.0) * n.sqrt());
    record("median", 0.5, median, median_se, 0.0, &mut verdicts);

    for &eps in &p.eps_values {
        let hits = samples.iter().filter(|w| w.abs() >= eps).count();
        let est = ProbabilityEstimate::from_hits(hits, samples.len(), Some(law.abs_tail(eps)));
        let exact = law.abs_tail(eps);
        let se = (exact * (1.0 - exact) / n).sqrt();
        record("tail", eps, est.estimate, se, exact, &mut verdicts);
    }
    for &beta in &p.betas {
        let est = sup_norm_bound_experiment(&m, &law, beta, p.sup_trials, config.seed)?;
        let exact = est.closed_form.unwrap_or(f64::NAN);
        let se = if est.stderr > 0.0 {
            est.stderr
        } else {
            (exact * (1.0 - exact) / est.trials as f64).sqrt()
        };
        record("sup_norm", beta, est.estimate, se, exact, &mut verdicts);
    }
    Ok(ExperimentOutput {
        files: vec![("sample_check.csv".into(), csv)],
        verdicts,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Executes a validated config on a pool of `workers` threads (0 = rayon
/// default) and persists outputs and manifest under `config.out`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<RunManifest> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let used = pool.current_num_threads();
    let output = pool.install(|| execute(config))?;

    let mut files = output.files;
    files.push((RESOLVED_CONFIG_FILE.to_string(), config.to_json()?));
    let out = &config.out;
    let staging = out.join(".staging");
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    let mut records = Vec::with_capacity(files.len());
    for (name, contents) in &files {
        fs::write(staging.join(name), contents)?;
        records.push(FileRecord {
            name: name.clone(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents.as_bytes()),
        });
    }
    for (name, _) in &files {
        fs::rename(staging.join(name), out.join(name))?;
    }
    let manifest = RunManifest {
        version: ARTIFACT_VERSION.to_string(),
        kind: config.kind,
        config: config.clone(),
        workers: used,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        verdicts: output.verdicts,
        files: records,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Serialization(e.to_string()))?;
    fs::write(staging.join(MANIFEST_FILE), json)?;
    fs::rename(staging.join(MANIFEST_FILE), out.join(MANIFEST_FILE))?;
    fs::remove_dir_all(&staging)?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| LabError::Serialization(e.to_string()))
}

/// Plain-text verdict table for a finished run. Checks the file inventory,
/// never recomputes.
pub fn emit_report(manifest: &RunManifest, dir: &Path) -> Result<String> {
    let mut problems = Vec::new();
    for f in &manifest.files {
        match fs::read(dir.join(&f.name)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            Ok(_) => problems.push(format!("{} (checksum mismatch)", f.name)),
            Err(_) => problems.push(format!("{} (missing)", f.name)),
        }
    }
    if !problems.is_empty() {
        return Err(LabError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("inventory check failed: {}", problems.join(", ")),
        )));
    }
    let mut out = format!(
        "landau-lab {} | {} | seed {} | {} workers | {:.2} s\n",
        manifest.version,
        manifest.kind.name(),
        manifest.config.seed,
        manifest.workers,
        manifest.wall_time_seconds
    );
    if manifest.verdicts.is_empty() {
        out.push_str("no verdicts\n");
    }
    for v in &manifest.verdicts {
        out.push_str(&v.line());
        out.push('\n');
    }
    let failed = manifest.verdicts.iter().filter(|v| !v.passed).count();
    out.push_str(&format!(
        "{} passed, {failed} failed; files: {}\n",
        manifest.verdicts.len() - failed,
        manifest.files.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(", ")
    ));
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(name = "landau-lab", version, about = "Random Landau Hamiltonian laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. `--seed` and `--out` override the
/// config; `--workers` only affects `run` (0 means all cores).
#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a config, printing the resolved version.
    Validate(Common),
    /// Run the experiment described by a config.
    Run(Common),
    /// Summarize a finished run from its manifest. The run directory is
    /// `--out`, or the output directory of `--config`.
    Report(Common),
}

impl Common {
    fn resolved(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| LabError::Config(vec!["--config is required".to_string()]))?;
        let mut c = validate_config(path)?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        Ok(c)
    }
}

fn report(args: &Common) -> Result<i32> {
    let (dir, expected) = match (&args.config, &args.out) {
        (None, Some(out)) => (out.clone(), None),
        (None, None) => return Err(LabError::Config(vec!["report needs --out or --config".to_string()])),
        _ => {
            let c = args.resolved()?;
            (c.out.clone(), Some(c))
        }
    };
    let m = load_manifest(&dir)?;
    if let Some(c) = expected {
        if m.config != c {
            return Err(LabError::Config(vec![format!(
                "the run in {} was produced by a different config or seed",
                dir.display()
            )]));
        }
    }
    print!("{}", emit_report(&m, &dir)?);
    Ok(if m.passed() { 0 } else { 1 })
}

/// Entry point of the binary; returns the process exit code
/// (0 success, 1 a verdict failed, 2 error).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Validate(args) => args.resolved().and_then(|c| c.to_toml()).map(|t| {
            print!("{t}");
            0
        }),
        Command::Run(args) => args.resolved().and_then(|c| {
            print!("{}", c.to_toml()?);
            let manifest = run_experiment(&c, args.workers)?;
            print!("{}", emit_report(&manifest, &c.out)?);
            Ok(if manifest.passed() { 0 } else { 1 })
        }),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_is_rounded() {
        let g = EnergyGrid::Range {
            start: 0.8,
            stop: 1.0,
            step: 0.02,
        };
        let v = g.values().unwrap();
        assert_eq!(v.len(), 11);
        assert_eq!(v[5], 0.9);
        assert_eq!(v[10], 1.0);
    }

    #[test]
    fn unknown_keys_are_all_reported() {
        let text = r#"
kind = "spectrum"
colour = 3
[model]
L = 6
flux_p = 1
flux_q = 3
lambda = 0.0
alpha = 2.0
lamda = 1.0
[spectrum]
twists = 4
"#;
        let LabError::Config(v) = ExperimentConfig::from_toml_str(text).unwrap_err() else {
            panic!("expected a config error");
        };
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v.iter().any(|s| s.contains("model.lamda")));
        assert!(v.iter().any(|s| s.contains("spectrum.twists")));
    }
}
