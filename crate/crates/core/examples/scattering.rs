// Two-particle phase from asymptotic in and out states built with smeared
// translations, compared with the deformation evaluated at the packet
// centers.
//
// ```bash
// cargo run --example scattering
// ```

use borchers_lab::scatter::{smatrix_element, WavePacket, DEFAULT_SERIES};
use borchers_lab::smatrix::Deformation;

pub fn run_example() -> borchers_lab::Result<()> {
    let def = Deformation::Kappa { kappa: 0.5 };
    for (p, q) in [(1.0, 1.0), (1.0, 2.0), (3.0, 1.0)] {
        let xi = WavePacket::new(p, 0.05, 33)?;
        let eta = WavePacket::new(q, 0.05, 33)?;
        let amp = smatrix_element(&xi, &eta, &def, &DEFAULT_SERIES)?;
        println!(
            "p={p} q={q}  phase {:+.6} {:+.6}i  expected {:+.6} {:+.6}i  error {:.2e}",
            amp.phase.re,
            amp.phase.im,
            amp.expected.re,
            amp.expected.im,
            amp.error()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> borchers_lab::Result<()> {
    run_example()
}
