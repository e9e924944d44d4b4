//! Wegner traces E{tr E(Δ)} in the lowest band across sizes, with the
//! per-volume normalization and fitted K_W.
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::{clean_band_structure, ModelSpec};
use landau_lab::wegner::{wegner_scan, EnergyInterval, WegnerRegime, WegnerScan};

fn main() -> landau_lab::Result<()> {
    let spec = ModelSpec::new(12, 1, 6, 0.3, 2.0);
    let law = StretchedExpMeasure::new(2.0)?;
    let band = clean_band_structure(&spec)?[0];
    let delta = EnergyInterval::new(band.center(), 0.4 * band.width());
    let scan = WegnerScan {
        regime: WegnerRegime::General,
        intervals: vec![delta, delta.halved()],
        sizes: vec![12, 18],
        lambdas: vec![0.3],
        q_values: vec![0.0, 2.0],
        n_realizations: 40,
        base_seed: 5,
    };
    let report = wegner_scan(&spec, &law, &scan)?;
    print!("{}", report.to_csv());
    for c in &report.cells {
        println!("L = {}, |Δ| = {:.4}: tr/L² = {:.5}", c.size, c.delta_width, c.per_volume());
    }
    for fit in &report.k_w {
        println!("q = {}: K_W = {:.4}", fit.q, fit.k_w);
    }
    for v in &report.verdicts {
        println!("{}", v.line());
    }
    Ok(())
}
