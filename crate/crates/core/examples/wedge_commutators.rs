// Commutators between a twisted left generator and a right one, compared
// with the undeformed floor at two truncations. Slow in debug builds.
//
// ```bash
// cargo run --release --example wedge_commutators
// ```

use borchers_lab::borchers::{default_generators, max_wedge_commutator, CommutatorOptions, Truncation};
use borchers_lab::lightray::Side;
use borchers_lab::smatrix::Deformation;

pub fn run_example() -> borchers_lab::Result<()> {
    let opts = CommutatorOptions::default();
    let left = &default_generators(Side::Left)[..1];
    let right = &default_generators(Side::Right)[..1];
    let twisted = Deformation::Kappa { kappa: 0.5 };
    for level in [Truncation::new(8, 2), Truncation::new(8, 3)] {
        let free = max_wedge_commutator(&Deformation::Identity, level, &opts, left, right)?;
        let def = max_wedge_commutator(&twisted, level, &opts, left, right)?;
        println!(
            "M={:2} N={}  free {:.3e}  twisted {:.3e}  overhead {:.2}",
            level.modes,
            level.cutoff,
            free.max,
            def.max,
            def.max / free.max.max(f64::MIN_POSITIVE)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
