//! Energy-filtered wave packet from the center site: Chebyshev propagation,
//! the second moment M(t) and its Laplace time average.
use landau_lab::dynamics::{log_time_grid, moment, time_averaged_moment, EnergyFilter, LeakPolicy, MomentSettings};
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::{clean_band_structure, ModelSpec};

fn main() -> landau_lab::Result<()> {
    let law = StretchedExpMeasure::new(2.0)?;
    let clean = ModelSpec::new(50, 1, 5, 0.0, 2.0);
    let band = clean_band_structure(&clean)?[0];
    for (lambda, center, label) in [(0.2, band.center(), "lowest band"), (1.5, 0.0, "band tail")] {
        let spec = clean.with_lambda(lambda);
        let filter = EnergyFilter::new(center, 0.3)?;
        let settings = MomentSettings {
            p: 2.0,
            filter,
            times: log_time_grid(0.1, 60.0, 6)?,
            n_realizations: 3,
            base_seed: 7,
            leak_policy: LeakPolicy::Truncate,
        };
        let record = moment(&spec, &law, &settings)?;
        println!("{label} (λ = {lambda}): horizon {:.1}, filter order {}", record.horizon, record.filter_order);
        for (t, m) in record.times.iter().zip(&record.mean).step_by(3) {
            println!("  t = {t:8.3}  M = {m:.4}");
        }
        let horizons: Vec<f64> = [1.0, 5.0].into_iter().filter(|t| 10.0 * t <= record.horizon).collect();
        if !horizons.is_empty() {
            for a in &time_averaged_moment(&record, &horizons)?.time_averages {
                println!("  time average up to T = {}: {:.4} ± {:.4}", a.horizon, a.mean, a.stderr);
            }
        }
    }
    Ok(())
}
