//! Probability that every coupling stays below ε, so the disordered spectrum
//! stays within λε of the clean one, plus the sup-norm bound experiment.
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::{sup_norm_bound_experiment, ModelSpec};
use landau_lab::wegner::gap_survival_probability;

fn main() -> landau_lab::Result<()> {
    let spec = ModelSpec::new(8, 1, 4, 0.2, 2.0);
    let law = StretchedExpMeasure::new(2.0)?;
    let g = gap_survival_probability(&spec, &law, 2.0, 1000, 3)?;
    println!(
        "P(max|w| < 2) = {:.4} ± {:.4}, exact {:.4}; {} conditioned spectra, {} outside λε",
        g.probability.estimate,
        g.probability.stderr,
        g.probability.closed_form.unwrap_or(f64::NAN),
        g.conditioned,
        g.weyl_violations
    );
    let big = spec.with_size(16);
    for beta in [1.0, 2.0] {
        let p = sup_norm_bound_experiment(&big, &law, beta, 5000, 4)?;
        println!("P(max|w| <= (ln L)^{beta}) = {:.4} ± {:.4}, exact {:.4}", p.estimate, p.stderr, p.closed_form.unwrap_or(f64::NAN));
    }
    Ok(())
}
