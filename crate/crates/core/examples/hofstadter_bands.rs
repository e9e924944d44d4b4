//! Clean magnetic bands: band counts at flux 1/3 and 1/5, and the Landau-level
//! spacing of the lowest clusters at weak field.
use landau_lab::model::{band_clusters, clean_band_structure, landau_levels, ModelSpec, twist_resolved_clean_spectrum};

fn main() -> landau_lab::Result<()> {
    for (q, l) in [(3, 18), (5, 30)] {
        let spec = ModelSpec::new(l, 1, q, 0.0, 2.0);
        let bands = clean_band_structure(&spec)?;
        println!("flux 1/{q}, L = {l}: {} bands", bands.len());
        for (k, b) in bands.iter().enumerate() {
            println!("  band {k}: [{:.4}, {:.4}]", b.lo, b.hi);
        }
    }

    let spec = ModelSpec::new(64, 1, 32, 0.0, 2.0);
    let b = spec.effective_field();
    let levels = twist_resolved_clean_spectrum(&spec, 1)?;
    let clusters = band_clusters(&levels, 0.05);
    println!("flux 1/32, L = 64, B = {b:.4}");
    for (k, (c, exact)) in clusters.iter().zip(landau_levels(b, 4)?).take(4).enumerate() {
        println!("  cluster {k}: center {:.4}, continuum level {exact:.4}", c.center());
    }
    Ok(())
}
