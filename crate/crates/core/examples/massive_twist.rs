// The charge twist on a massive Fock space with particles and antiparticles:
// periodicity in the coupling and the rapidity-independent two-particle phase.
//
// ```bash
// cargo run --example massive_twist
// ```

use std::sync::Arc;

use borchers_lab::massive::{build_charged_basis, check_massive_axioms, rapidity_sweep, RapidityGrid};

pub fn run_example() -> borchers_lab::Result<()> {
    let grid = RapidityGrid::uniform(-2.0, 2.0, 6, 1.0)?;
    let basis = Arc::new(build_charged_basis(grid.clone(), 2)?);
    println!("charged basis dim {}", basis.dim());

    let report = check_massive_axioms(0.25, &basis)?;
    for (name, v) in &report.metrics {
        println!("{name:28} {v:.3e}");
    }
    println!("{}", report.status());

    let sweep = rapidity_sweep(0.25, &grid)?;
    for (q1, q2) in [(1, 1), (1, -1)] {
        let z = sweep.phases(q1, q2).next().expect("nonempty sweep");
        println!("q=({q1:+},{q2:+})  phase {:+.3} {:+.3}i  variance {:.1e}", z.re, z.im, sweep.variance(q1, q2));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
