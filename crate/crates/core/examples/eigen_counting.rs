//! Eigenvalue counting by LDLᵀ inertia, checked against a dense
//! diagonalization of the same disordered lattice operator.
use landau_lab::measures::StretchedExpMeasure;
use landau_lab::model::{build_random_hamiltonian, DisorderRealization, ModelSpec};
use landau_lab::spectral::{dense_eigenvalues, EigenCounter};

fn main() -> landau_lab::Result<()> {
    let spec = ModelSpec::new(16, 1, 4, 0.5, 2.0);
    let law = StretchedExpMeasure::new(2.0)?;
    let h = build_random_hamiltonian(&spec, &DisorderRealization::draw(&law, &spec, 3))?;
    let counter = EigenCounter::new(&h)?;
    let ev = dense_eigenvalues(&h.to_dense())?;
    println!("N = {}, spectrum in [{:.3}, {:.3}]", h.dim(), ev[0], ev[ev.len() - 1]);
    for (a, b) in [(0.5, 1.0), (1.0, 1.5), (1.8, 2.2), (4.0, 4.1)] {
        let inertia = counter.count_in_interval(a, b)?;
        let dense = ev.iter().filter(|&&e| e > a && e <= b).count();
        println!("  ({a}, {b}]: inertia {inertia}, dense {dense}");
    }
    Ok(())
}
