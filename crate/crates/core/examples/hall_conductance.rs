//! Chern numbers by the plaquette method on a twist grid: clean gap Cherns,
//! band Cherns with their zero sum, and a disordered plateau scan.
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::{clean_band_structure, ModelSpec};
use landau_lab::topology::{chern_number, clean_band_cherns, hall_plateau_scan};

fn main() -> landau_lab::Result<()> {
    let clean = ModelSpec::new(10, 1, 5, 0.0, 2.0);
    let bands = clean_band_structure(&clean)?;
    println!("band Cherns {:?}", clean_band_cherns(&clean, 6)?);
    for r in 1..bands.len() {
        let e = 0.5 * (bands[r - 1].hi + bands[r].lo);
        let c = chern_number(&clean, None, e, 6)?;
        println!("gap {r} at E = {e:.3}: σ_H = {} (raw {:.2e} off)", c.chern, (c.raw - c.chern as f64).abs());
    }

    let spec = clean.with_lambda(0.3);
    let law = StretchedExpMeasure::new(2.0)?;
    let grid: Vec<f64> = (0..=12).map(|k| 0.3 + 0.2 * k as f64).collect();
    let curve = hall_plateau_scan(&spec, &law, &grid, 6, 6, 2)?;
    for p in &curve.points {
        println!("E_F = {:.2}: {} ({} failed)", p.e_fermi, p.histogram_string(), p.n_fail);
    }
    Ok(())
}
