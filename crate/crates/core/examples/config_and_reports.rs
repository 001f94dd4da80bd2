// Load the default configuration, override a few keys and render a report
// bundle as JSON and CSV.
//
// ```bash
// cargo run --example config_and_reports
// ```

use borchers_lab::cli::run_checks;
use borchers_lab::config::{CheckKind, ConfigBuilder};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ConfigBuilder::new()
        .set("model=s_phi")?
        .set("basis.modes=6")?
        .set("basis.cutoff=3")?
        .build()?;
    println!("model {} with checks {:?}", cfg.model.name(), cfg.resolved_checks());

    let bundle = run_checks(&cfg, &[CheckKind::Inner, CheckKind::PairPhases])?;
    print!("{}", bundle.to_table());
    println!("{} bytes of JSON", bundle.to_json().len());
    print!("{}", bundle.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
