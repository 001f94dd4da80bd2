// Rank of the span of words in wedge generators applied to the vacuum,
// relative to the tensor dimension.
//
// ```bash
// cargo run --example cyclicity
// ```

use std::sync::Arc;

use borchers_lab::borchers::{check_cyclicity_rank, TripleSpec};
use borchers_lab::fock::{build_basis, Statistics};
use borchers_lab::lightray::{build_grid, Spacing};
use borchers_lab::smatrix::{Deformation, TensorBasis};

pub fn run_example() -> borchers_lab::Result<()> {
    let mut spec = TripleSpec::standard(Deformation::Kappa { kappa: 0.5 }, 4, 2)?;
    let modes = Arc::new(build_grid(Spacing::Linear, 0.2, 3.0, 4)?);
    spec.tensor = TensorBasis::square(Arc::new(build_basis(modes, 2, Statistics::Bose)?));
    let report = check_cyclicity_rank(&spec, 4, 0.5)?;
    for (name, v) in &report.metrics {
        println!("{name:24} {v:.4}");
    }
    println!("{}", report.status());
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
