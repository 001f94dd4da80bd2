// Build a symmetric Blaschke product, evaluate it on the real line and in
// the upper half-plane, and run the inner-function verifier on it.
//
// ```bash
// cargo run --example inner_functions
// ```

use borchers_lab::innerfunc::{make_blaschke, make_singular, multiply, verify_inner_symmetric};
use num_complex::Complex64;

pub fn run_example() -> borchers_lab::Result<()> {
    // Zeros come in pairs p, -conj(p) so that phi(-p) = conj(phi(p)).
    let phi = make_blaschke(&[Complex64::new(0.7, 1.2), Complex64::new(0.0, 2.0)], true)?;
    let psi = multiply(&phi, &make_singular(0.25)?);

    for t in [-3.0, -1.0, 0.0, 0.5, 2.0] {
        let z = psi.boundary_value(t);
        println!("psi({t:+.1}) = {:+.6} {:+.6}i   |psi| = {:.15}", z.re, z.im, z.norm());
    }
    let inside = psi.evaluate(Complex64::new(0.3, 0.8))?;
    println!("|psi(0.3+0.8i)| = {:.6} (< 1 inside)", inside.norm());

    let grid: Vec<f64> = (0..400).map(|k| -10.0 + 20.0 * k as f64 / 399.0).collect();
    let report = verify_inner_symmetric(&psi, &grid, 1e-12);
    for (name, v) in &report.metrics {
        println!("{name:28} {v:.3e}");
    }
    println!("{}", report.status());
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
