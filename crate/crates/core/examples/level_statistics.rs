//! Adjacent-gap ratio and inverse participation ratio: clean against strongly
//! disordered lattices.
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::{build_clean_hamiltonian, build_random_hamiltonian, DisorderRealization, ModelSpec};
use landau_lab::spectral::full_spectrum_with_vectors;
use landau_lab::topology::{ipr, level_statistics, POISSON_R};

fn main() -> landau_lab::Result<()> {
    let law = StretchedExpMeasure::new(2.0)?;
    println!("reference r: Poisson {POISSON_R:.4}, GUE about 0.60");
    for lambda in [0.5, 5.0] {
        let spec = ModelSpec::new(16, 1, 4, lambda, 2.0);
        let h = build_random_hamiltonian(&spec, &DisorderRealization::draw(&law, &spec, 1))?;
        let sp = full_spectrum_with_vectors(&h)?;
        let st = level_statistics(&sp.eigenvalues)?;
        let low = ipr(&sp.eigenvector(0).expect("vectors were requested"))?;
        println!("λ = {lambda}: mean r = {:.3} ± {:.3}, ground-state IPR {low:.4}", st.mean_r, st.stderr);
    }
    let clean = full_spectrum_with_vectors(&build_clean_hamiltonian(&ModelSpec::new(16, 1, 4, 0.0, 2.0))?)?;
    println!("clean ground-state IPR {:.4}", ipr(&clean.eigenvector(0).expect("vectors were requested"))?);
    Ok(())
}
