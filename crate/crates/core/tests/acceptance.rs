//! Acceptance run: one PASS/FAIL line per criterion. Built with
//! `harness = false` so the lines show up in plain `cargo test` output.
//!
//! Criteria backed by a shipped config run that config through the library
//! entry point and require every verdict to pass, within the runtime budget.
//! The process exits non-zero if a criterion fails that is not listed in
//! `KNOWN_SHORTFALLS`.

mod common;

use common::{jacobi_eigen, max_diff, norm, oracle_apply, oracle_evolve, random_hermitian, random_unit_vector, real_embedding};
use landau_lab::cli::{execute, run_experiment, validate_config, ExperimentConfig};
use landau_lab::dynamics::{apply_filter, evolve, EnergyFilter};
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::{build_random_hamiltonian, DisorderRealization, HermitianOperator, ModelSpec};
use landau_lab::spectral::{count_in_interval, dense_eigenvalues};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// The delocalized half of the transport contrast needs the packet to stay
/// off the open boundary until t = 5000 at L = 96, which it does not.
const KNOWN_SHORTFALLS: &[u32] = &[11];

struct Outcome {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> ExperimentConfig {
    validate_config(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Runs the named configs and folds their verdicts into one result.
fn run_configs(names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut lines = Vec::new();
    for name in names {
        match execute(&load(name)) {
            Ok(out) => {
                for v in &out.verdicts {
                    ok &= v.passed;
                    lines.push(format!("{} {}: {}", if v.passed { "ok" } else { "not ok" }, v.claim, v.detail));
                }
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{name}: {e}"));
            }
        }
    }
    (ok, lines.join("\n      "))
}

fn counting_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let law = StretchedExpMeasure::new(2.0).unwrap();
    let mut mismatches = 0;
    let mut queries = 0;
    let mut largest = 0;
    for k in 0..50u64 {
        let h: HermitianOperator = if k % 2 == 0 {
            random_hermitian(rng.random_range(20..=400), 6, k)
        } else {
            let (l, q) = [(6, 3), (8, 4), (10, 5), (12, 4), (15, 5), (18, 6), (20, 5), (20, 4)][rng.random_range(0..8)];
            let spec = ModelSpec::new(l, 1, q, rng.random_range(0.0..1.5), 2.0);
            build_random_hamiltonian(&spec, &DisorderRealization::draw(&law, &spec, k)).unwrap()
        };
        largest = largest.max(h.dim());
        let ev = dense_eigenvalues(&h.to_dense()).unwrap();
        let (lo, hi) = (ev[0] - 0.5, ev[ev.len() - 1] + 0.5);
        let mut cuts = Vec::new();
        while cuts.len() < 10 {
            // Endpoints within rounding distance of an eigenvalue have no
            // well-defined integer answer; redraw those.
            let x = rng.random_range(lo..hi);
            if ev.iter().all(|e| (e - x).abs() > 1e-8) {
                cuts.push(x);
            }
        }
        for w in cuts.chunks(2) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            let dense = ev.iter().filter(|&&e| e > a && e <= b).count();
            queries += 1;
            if count_in_interval(&h, a, b).unwrap() != dense {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, format!("50 instances (N up to {largest}), {queries} intervals, {mismatches} mismatches"))
}

fn dynamics_oracles() -> (bool, String) {
    let mut evolve_err: f64 = 0.0;
    let mut filter_err: f64 = 0.0;
    for seed in 0..3 {
        let h = random_hermitian(64, 6, 500 + seed);
        let eig = jacobi_eigen(real_embedding(&h));
        let v = random_unit_vector(64, 600 + seed);
        for t in [1.0, 10.0, 100.0] {
            evolve_err = evolve_err.max(max_diff(&evolve(&h, &v, t).unwrap(), &oracle_evolve(&eig, t, &v)));
        }
        let f = EnergyFilter::new(eig.values[64], 1.0).unwrap();
        let got = apply_filter(&h, &f, &v).unwrap().vector;
        filter_err = filter_err.max(max_diff(&got, &oracle_apply(&eig, |e| f.profile(e), &v)));
    }
    let h = random_hermitian(64, 6, 700);
    let v = random_unit_vector(64, 701);
    let drift = (norm(&evolve(&h, &v, 100.0).unwrap()) - 1.0).abs();
    let ok = evolve_err <= 1e-8 && filter_err <= 1e-6 && drift <= 1e-10;
    (ok, format!("evolve error {evolve_err:.2e} (limit 1e-8), filter error {filter_err:.2e} (limit 1e-6), norm drift at t = 100 {drift:.2e} (limit 1e-10)"))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["wegner_band.toml", "spectral_averaging.toml", "gap_filling.toml"] {
        let mut outputs = Vec::new();
        for workers in [1, 2] {
            let mut config = load(name);
            config.out = tmp.path().join(format!("{name}-{workers}"));
            std::fs::create_dir_all(&config.out).unwrap();
            run_experiment(&config, workers).unwrap();
            outputs.push(csv_files(&config.out));
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
        ok &= same;
        let bytes: usize = outputs[0].iter().map(|(_, b)| b.len()).sum();
        parts.push(format!("{name}: {} CSV files, {bytes} bytes, {}", outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    (ok, parts.join("; "))
}

fn main() {
    type Check = Box<dyn Fn() -> (bool, String)>;
    let criteria: Vec<(u32, &'static str, f64, Check)> = vec![
        (1, "inertia counts equal dense counts", 60.0, Box::new(counting_oracle)),
        (2, "clean band counts and Landau spacing", 300.0,
            Box::new(|| run_configs(&["clean_bands_flux3.toml", "clean_bands_flux5.toml", "landau_clusters.toml"]))),
        (3, "Wegner estimate inside the lowest band", 900.0, Box::new(|| run_configs(&["wegner_band.toml"]))),
        (4, "Wegner estimate in the first clean gap", 900.0, Box::new(|| run_configs(&["wegner_gap.toml"]))),
        (5, "spectral averaging bound", 600.0, Box::new(|| run_configs(&["spectral_averaging.toml"]))),
        (6, "gap survival probability", 300.0, Box::new(|| run_configs(&["gap_survival.toml"]))),
        (7, "sup bound for unbounded disorder", 120.0, Box::new(|| run_configs(&["sample_check.toml"]))),
        (8, "clean Hall conductance and sum rule", 300.0, Box::new(|| run_configs(&["hall_clean.toml"]))),
        (9, "gap filling with a pure plateau", 1800.0, Box::new(|| run_configs(&["gap_filling.toml"]))),
        (10, "mobility window shrinks with disorder", 2700.0, Box::new(|| run_configs(&["mobility_windows.toml"]))),
        (11, "transport contrast", 3600.0,
            Box::new(|| run_configs(&["transport_band_center.toml", "transport_band_tail.toml"]))),
        (12, "dynamics against dense oracles", 120.0, Box::new(dynamics_oracles)),
        (13, "worker count does not change CSV output", f64::INFINITY, Box::new(determinism)),
    ];

    let mut outcomes = Vec::new();
    for (id, title, budget, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        let seconds = start.elapsed().as_secs_f64();
        let in_time = seconds <= budget;
        let detail = if in_time { detail } else { format!("{detail}\n      over the runtime budget of {budget} s") };
        let o = Outcome { id, title, passed: ok && in_time, detail, seconds };
        println!("{} {:>2} {} ({:.1} s)\n      {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.title, o.seconds, o.detail);
        outcomes.push(o);
    }

    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !KNOWN_SHORTFALLS.contains(id)).collect();
    println!(
        "\nacceptance: {} of {} criteria pass; failing {:?}; known shortfalls {:?}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        failed,
        KNOWN_SHORTFALLS
    );
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
