// Exact structural checks of a deformed triple at a small truncation:
// unitarity, vacuum invariance, commutation with translations, positivity
// of the spectrum and the wedge-inclusion proxy.
//
// ```bash
// cargo run --example borchers_axioms
// ```

use borchers_lab::borchers::{check_axioms, check_pair_phases, TripleSpec, APPROX_TOL};
use borchers_lab::smatrix::Deformation;

pub fn run_example() -> borchers_lab::Result<()> {
    let spec = TripleSpec::standard(Deformation::Kappa { kappa: 0.5 }, 6, 3)?;
    let report = check_axioms(&spec, APPROX_TOL)?;
    for (name, v) in &report.metrics {
        println!("{name:40} {v:.3e}");
    }
    println!("axioms: {}", report.status());

    let pairs = check_pair_phases(&spec.deformation, &spec.tensor, 1e-12)?;
    println!("pair phases: {}", pairs.status());
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
