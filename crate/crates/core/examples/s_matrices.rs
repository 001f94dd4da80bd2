// The two diagonal deformations on a tensor-square basis, and the check that
// the singular-inner-function construction reproduces the exponential one.
//
// ```bash
// cargo run --example s_matrices
// ```

use std::sync::Arc;

use borchers_lab::fock::{build_basis, Statistics};
use borchers_lab::innerfunc::{make_blaschke, make_singular};
use borchers_lab::lightray::{build_grid, Spacing};
use borchers_lab::smatrix::{build_s_kappa, build_s_phi, TensorBasis};
use num_complex::Complex64;

pub fn run_example() -> borchers_lab::Result<()> {
    let grid = Arc::new(build_grid(Spacing::Logarithmic, 0.1, 10.0, 6)?);
    let tb = TensorBasis::square(Arc::new(build_basis(grid, 3, Statistics::Bose)?));
    println!("tensor dimension {}", tb.dim());

    let kappa = 0.5;
    let sk = build_s_kappa(kappa, &tb)?;
    let sp = build_s_phi(&make_singular(kappa)?, &tb)?;
    println!("{} vs {}: max entry distance {:.2e}", sk.label(), sp.label(), sk.max_distance(&sp));
    println!("unimodularity defect {:.2e}", sk.max_modulus_defect());

    let phi = make_blaschke(&[Complex64::new(0.5, 1.0)], true)?;
    let s = build_s_phi(&phi, &tb)?;
    for i in [0, 1, tb.index(1, 1), tb.index(2, 5), tb.dim() - 1] {
        let (a, b) = tb.split(i);
        let z = s.phase(i);
        println!("S[{a:3},{b:3}] = {:+.6} {:+.6}i", z.re, z.im);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
