//! Integrated density of states of the disordered model, its modulus of
//! continuity and a fitted Hölder exponent.
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::ModelSpec;
use landau_lab::spectral::{holder_fit, ids_estimate, ids_modulus};

fn main() -> landau_lab::Result<()> {
    let spec = ModelSpec::new(12, 1, 4, 0.4, 2.0);
    let law = StretchedExpMeasure::new(2.0)?;
    let grid: Vec<f64> = (0..=200).map(|k| -0.5 + 0.05 * k as f64).collect();
    let curve = ids_estimate(&spec, &law, &grid, 20, 1)?;
    for k in (0..grid.len()).step_by(20) {
        println!("N({:6.3}) = {:.4} ± {:.4}", grid[k], curve.mean[k], curve.stderr[k]);
    }
    for delta in [0.1, 0.2, 0.4] {
        println!("modulus at δ = {delta}: {:.4}", ids_modulus(&curve, delta)?);
    }
    let fit = holder_fit(&curve, &[0.1, 0.2, 0.4, 0.8])?;
    println!("Hölder exponent {:.3}", fit.exponent);
    Ok(())
}
