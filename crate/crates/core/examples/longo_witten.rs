// Support preservation of a momentum multiplier m(P) on right-localized
// vectors. An inner symbol keeps bumps on the right half-line; reflecting it
// to the lower half-plane does not.
//
// ```bash
// cargo run --example longo_witten
// ```

use borchers_lab::borchers::{check_longo_witten, longo_witten_bumps, LongoWittenOptions};
use borchers_lab::innerfunc::make_blaschke;
use num_complex::Complex64;

pub fn run_example() -> borchers_lab::Result<()> {
    let phi = make_blaschke(&[Complex64::new(0.5, 1.0)], true)?;
    let bumps = longo_witten_bumps();
    let opts = LongoWittenOptions::default();

    let good = check_longo_witten(&phi, &bumps, &opts)?;
    let bad = check_longo_witten(&phi.reflected(), &bumps, &opts)?;
    for n in &opts.grid_points {
        let key = format!("n{n}.leakage");
        println!(
            "n={n:5}  inner {:.3e}  reflected {:.3e}",
            good.get(&key).unwrap_or(f64::NAN),
            bad.get(&key).unwrap_or(f64::NAN)
        );
    }
    println!("inner symbol: {}, reflected symbol: {}", good.status(), bad.status());
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
