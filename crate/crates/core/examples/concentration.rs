//! Concentration functions of the stretched-exponential law, its modified
//! measures, the tail bound and the empirical version of a sample.
use landau_lab::measures::{Concentration, EmpiricalMeasure, StretchedExpMeasure};

fn main() -> landau_lab::Result<()> {
    for alpha in [0.5, 1.0, 2.0] {
        let law = StretchedExpMeasure::new(alpha)?;
        println!("alpha = {alpha}: tail constant C = {:.4}", law.tail_bound_constant());
        for s in [0.01, 0.1, 1.0] {
            println!(
                "  s = {s:<5} Q(s) = {:.5}  Q^(2)(s) = {:.5}  Q^(4)(s) = {:.5}",
                law.concentration(s),
                law.modified_concentration(2.0, s)?,
                law.modified_concentration(4.0, s)?
            );
        }
        let t = law.tail_probability(2.0)?;
        println!("  P(|w| >= 2) = {:.3e} <= {:.3e}", t.exact, t.bound);
    }

    let law = StretchedExpMeasure::new(2.0)?;
    let emp = EmpiricalMeasure::new(law.sample(1, 20_000))?;
    for s in [0.1, 0.5, 1.0] {
        println!("empirical Q({s}) = {:.4} vs analytic {:.4}", emp.concentration(s), law.concentration(s));
    }
    Ok(())
}
