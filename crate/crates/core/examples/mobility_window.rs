//! Mixed-Chern window of the lowest band at two disorder strengths (L = 10, so the
//! windows are coarse), with the
//! level-ratio and IPR diagnostics inside and outside.
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::ModelSpec;
use landau_lab::topology::{band_window, mobility_edge_scan};

fn main() -> landau_lab::Result<()> {
    let spec = ModelSpec::new(10, 1, 5, 0.3, 2.0);
    let law = StretchedExpMeasure::new(2.0)?;
    let (lo, hi) = band_window(&spec, 1)?;
    println!("band 1 window [{lo:.3}, {hi:.3}]; scanning around the band");
    let grid: Vec<f64> = (0..=20).map(|k| 0.7 + 0.04 * k as f64).collect();
    let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
    for est in mobility_edge_scan(&spec, &law, 1, &[0.3, 0.15], &grid, 8, 6, 3)? {
        println!(
            "λ = {}: window [{:.3}, {:.3}] ± {:.3} ({:?}), mean r inside {} outside {}, IPR inside {} outside {}",
            est.lambda,
            est.e1,
            est.e2,
            est.uncertainty,
            est.diagnostic,
            show(est.r_inside),
            show(est.r_outside),
            show(est.ipr_inside),
            show(est.ipr_outside)
        );
    }
    Ok(())
}
