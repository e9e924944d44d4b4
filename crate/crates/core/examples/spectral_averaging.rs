//! Randomized spectral-averaging trials: the averaged sandwiched projection
//! against the concentration bound.
use landau_lab::wegner::{spectral_averaging_check, SpectralAveragingConfig};

fn main() -> landau_lab::Result<()> {
    let config = SpectralAveragingConfig { dim: 32, ..Default::default() };
    let trials = spectral_averaging_check(&config, 8, 11)?;
    for t in &trials {
        println!(
            "trial {}: |I| = {:.3}, LHS = {:.4e} ± {:.1e}, bound {:.4}, {} evaluations, passed {}",
            t.index,
            t.interval.1 - t.interval.0,
            t.lhs,
            t.error,
            t.rhs,
            t.evaluations,
            t.passed
        );
    }
    Ok(())
}
