// Truncated bosonic and fermionic Fock spaces over a small momentum grid:
// dimensions, creation operators, the canonical commutation relations on
// states below the cutoff, and a Weyl operator.
//
// ```bash
// cargo run --example fock_space
// ```

use std::sync::Arc;

use borchers_lab::fock::{build_basis, weyl, FockVector, Statistics};
use borchers_lab::lightray::{build_grid, OnePVector, Spacing};
use num_complex::Complex64;

pub fn run_example() -> borchers_lab::Result<()> {
    let grid = Arc::new(build_grid(Spacing::Linear, 0.5, 3.0, 4)?);
    for stats in [Statistics::Bose, Statistics::Fermi] {
        let b = build_basis(grid.clone(), 3, stats)?;
        println!("{:5} M=4 N=3  dim {}", stats.name(), b.dim());
    }

    let basis = Arc::new(build_basis(grid.clone(), 3, Statistics::Bose)?);
    let f = OnePVector::delta(grid.clone(), 1);
    let g = OnePVector::delta(grid.clone(), 2);
    let alpha = basis.mode_amplitudes(&f)?;
    let beta = basis.mode_amplitudes(&g)?;

    // [a(f), a*(g)] = <f,g> on a one-particle state, well inside the cutoff.
    let one = basis.apply_creation(&alpha, FockVector::vacuum(basis.clone()).amplitudes())?;
    let ab = basis.apply_annihilation(&alpha, &basis.apply_creation(&beta, &one)?)?;
    let ba = basis.apply_creation(&beta, &basis.apply_annihilation(&alpha, &one)?)?;
    let ccr: f64 = ab.iter().zip(&ba).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    println!("max |[a(f),a*(g)] psi| for orthogonal f,g: {ccr:.2e}");

    let w = weyl(&f, &basis)?;
    let state = FockVector::new(basis.clone(), w.apply(FockVector::vacuum(basis.clone()).amplitudes())?)?;
    let vac = FockVector::vacuum(basis.clone());
    let overlap: Complex64 = vac.inner(&state)?;
    // Phi = a + a*, so the untruncated value is exp(-|alpha|^2 / 2).
    let a2: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    println!("<Omega, W(f) Omega> = {:.6}  untruncated {:.6}", overlap.re, (-a2 / 2.0).exp());
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
