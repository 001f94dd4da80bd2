//! Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 bad configuration or usage.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::borchers::{
    check_axioms, check_cross_construction, check_cyclicity_rank, check_gamma_multiplicativity, check_longo_witten,
    check_pair_phases, check_wedge_commutators, longo_witten_bumps, TripleSpec,
};
use crate::config::{CheckKind, ConfigBuilder, ConfigError, ExperimentConfig, Model};
use crate::error::Error;
use crate::fock::{basis_json, build_basis, FockBasis, Statistics};
use crate::innerfunc::{check_random_suite, make_singular, verify_inner_symmetric};
use crate::lightray::{build_grid, Spacing};
use crate::massive::{build_charged_basis, check_massive_axioms, massive_twist, rapidity_sweep, RapidityGrid, RapiditySweep};
use crate::report::{ReportBundle, VerificationReport};
use crate::scatter::{check_scattering, smatrix_element, WavePacket};
use crate::smatrix::{phase_table_csv, TensorBasis};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "borchers-lab", version, about = "Verification runs for deformed chiral Borchers triples")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file merged over the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// s_kappa | s_phi | s_phi_fermi | massive
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides the environment and config file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Arbitrary `key.path=value` override; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Do not print tables.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the configured scattering function.
    VerifyInner {
        /// Also run the randomized Blaschke suite.
        #[arg(long)]
        random: bool,
    },
    /// Build the deformation table and write it as CSV.
    BuildSmatrix,
    /// Run the Borchers-triple checks of the model.
    CheckBorchers {
        /// Include the wedge commutator refinement series (slow).
        #[arg(long)]
        commutators: bool,
    },
    /// Extract two-particle phases from asymptotic in/out states.
    Scatter,
    /// Tabulate the massive two-particle phase over a rapidity sweep.
    MassiveSweep,
    /// Render a report bundle as a table and plot-ready CSV.
    Report {
        bundle: PathBuf,
        /// Print CSV instead of the table.
        #[arg(long)]
        csv: bool,
    },
    /// Run every configured check.
    Run,
}

/// Failure of a command: configuration problems exit with 2, everything else
/// is reported through the bundle.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lab(#[from] Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lab(Error::NotConverged(_)) => EXIT_FAIL,
            _ => EXIT_CONFIG,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn load_config(g: &GlobalArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut b = ConfigBuilder::new();
    if let Some(path) = &g.config {
        b = b.merge_file(path)?;
    }
    b = b.env();
    if let Some(m) = &g.model {
        b = b.set_value("model", toml::Value::String(m.clone()));
    }
    if let Some(k) = g.kappa {
        b = b.set_value("kappa", toml::Value::Float(k));
    }
    if let Some(s) = g.seed {
        let seed = i64::try_from(s).map_err(|_| ConfigError::Invalid(format!("seed {s} is too large")))?;
        b = b.set_value("seed", toml::Value::Integer(seed));
    }
    if let Some(m) = g.modes {
        b = b.set(&format!("basis.modes={m}"))?;
    }
    if let Some(n) = g.cutoff {
        b = b.set(&format!("basis.cutoff={n}"))?;
    }
    if let Some(out) = &g.out {
        b = b.set_value("out_dir", toml::Value::String(out.display().to_string()));
    }
    for s in &g.set {
        b = b.set(s)?;
    }
    b.build()
}

fn statistics(cfg: &ExperimentConfig) -> Statistics {
    match cfg.model {
        Model::SPhiFermi => Statistics::Fermi,
        _ => Statistics::Bose,
    }
}

/// The tensor-square basis and check data of a massless model.
pub fn triple_spec(cfg: &ExperimentConfig) -> Result<TripleSpec, Error> {
    let def = cfg
        .deformation()
        .ok_or_else(|| Error::InvalidArgument("the massive model has no lightray triple".into()))?;
    let b = &cfg.basis;
    let grid = Arc::new(build_grid(Spacing::Logarithmic, b.p_min, b.p_max, b.grid_points)?);
    let modes = Arc::new(grid.subsample(b.modes)?);
    let basis = Arc::new(build_basis(modes, b.cutoff, statistics(cfg))?);
    Ok(TripleSpec {
        tensor: TensorBasis::square(basis),
        deformation: def,
        left_generators: cfg.generators.left.clone(),
        right_generators: cfg.generators.right.clone(),
        shifts: cfg.generators.shifts.clone(),
        leakage_grid: grid,
    })
}

fn bose_basis(cfg: &ExperimentConfig) -> Result<FockBasis, Error> {
    let b = &cfg.basis;
    let grid = build_grid(Spacing::Logarithmic, b.p_min, b.p_max, b.grid_points)?;
    build_basis(Arc::new(grid.subsample(b.modes)?), b.cutoff, Statistics::Bose)
}

fn rapidity_grid(cfg: &ExperimentConfig) -> Result<RapidityGrid, Error> {
    let m = &cfg.massive;
    RapidityGrid::uniform(m.theta_min, m.theta_max, m.points, m.mass)
}

fn inner_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    let n = cfg.inner.test_points.max(2);
    let e = cfg.inner.test_extent;
    (0..n).map(|k| -e + 2.0 * e * k as f64 / (n - 1) as f64).collect()
}

fn inner_reports(cfg: &ExperimentConfig, random: bool) -> Vec<VerificationReport> {
    let grid = inner_grid(cfg);
    let mut single = verify_inner_symmetric(&cfg.phi, &grid, cfg.tolerances.inner);
    single.check = "inner[phi]".into();
    let mut out = vec![single];
    if random {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        out.push(check_random_suite(
            &mut rng,
            cfg.inner.random_count,
            cfg.inner.max_zeros,
            &grid,
            cfg.tolerances.inner,
        ));
    }
    out
}

fn sweep_report(sweep: &RapiditySweep) -> VerificationReport {
    let mut r = VerificationReport::new(format!("massive_sweep[kappa={}]", sweep.kappa), 0.0);
    let mut variance = 0.0_f64;
    let mut deviation = 0.0_f64;
    for (q1, q2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        if let Some(z) = sweep.phases(q1, q2).next() {
            r.metric(format!("q{q1:+}_q{q2:+}.re"), z.re);
            r.metric(format!("q{q1:+}_q{q2:+}.im"), z.im);
        }
        variance = variance.max(sweep.variance(q1, q2));
        deviation = deviation.max(sweep.max_deviation(q1, q2));
    }
    r.require_at_most("max_variance", variance, 0.0);
    r.require_at_most("max_deviation", deviation, 0.0);
    r.metric("rows", sweep.rows.len() as f64);
    r
}

/// Runs one check and returns its reports.
pub fn run_check(cfg: &ExperimentConfig, kind: CheckKind) -> Result<Vec<VerificationReport>, Error> {
    let tol = &cfg.tolerances;
    Ok(match kind {
        CheckKind::Inner => inner_reports(cfg, true),
        CheckKind::Axioms => vec![check_axioms(&triple_spec(cfg)?, tol.leakage)?],
        CheckKind::Gamma => {
            let basis = bose_basis(cfg)?;
            vec![check_gamma_multiplicativity(&cfg.phi, &make_singular(cfg.kappa.max(0.0))?, &basis)?]
        }
        CheckKind::CrossConstruction => {
            let spec = triple_spec(cfg)?;
            vec![check_cross_construction(cfg.kappa, &spec.tensor, tol.cross)?]
        }
        CheckKind::PairPhases => {
            let spec = triple_spec(cfg)?;
            vec![check_pair_phases(&spec.deformation, &spec.tensor, tol.pair_phase)?]
        }
        CheckKind::WedgeCommutators => {
            let spec = triple_spec(cfg)?;
            vec![check_wedge_commutators(
                &spec.deformation,
                &spec.left_generators,
                &spec.right_generators,
                &cfg.wedge_commutators,
            )?]
        }
        CheckKind::LongoWitten => {
            let bumps = longo_witten_bumps();
            let r = check_longo_witten(&cfg.phi, &bumps, &cfg.longo_witten)?;
            let control = check_longo_witten(&cfg.phi.reflected(), &bumps, &cfg.longo_witten)?;
            let mut c = VerificationReport::new("longo_witten_control", control.tolerance);
            for (k, v) in &control.metrics {
                c.metric(k.clone(), *v);
            }
            c.note("expectation", "the reflected symbol must fail support preservation");
            c.require("control_fails", !control.passed);
            vec![r, c]
        }
        CheckKind::Cyclicity => {
            let c = &cfg.cyclicity;
            let mut spec = triple_spec(cfg)?;
            let modes = Arc::new(build_grid(Spacing::Linear, c.p_min, c.p_max, c.modes)?);
            spec.tensor = TensorBasis::square(Arc::new(build_basis(modes, c.cutoff, Statistics::Bose)?));
            vec![check_cyclicity_rank(&spec, c.max_len, c.min_fraction)?]
        }
        CheckKind::Scattering => {
            let def = cfg.deformation().expect("massless model");
            vec![check_scattering(&def, &cfg.scatter)?]
        }
        CheckKind::MassiveAxioms => {
            let basis = Arc::new(build_charged_basis(rapidity_grid(cfg)?, cfg.massive.cutoff)?);
            vec![check_massive_axioms(cfg.kappa, &basis)?]
        }
        CheckKind::MassiveSweep => vec![sweep_report(&rapidity_sweep(cfg.kappa, &rapidity_grid(cfg)?)?)],
    })
}

pub fn run_checks(cfg: &ExperimentConfig, kinds: &[CheckKind]) -> Result<ReportBundle, Error> {
    let mut bundle = ReportBundle::new(cfg.seed, cfg.model.name());
    for &k in kinds {
        bundle.reports.extend(run_check(cfg, k)?);
    }
    Ok(bundle)
}

struct Output {
    dir: PathBuf,
    quiet: bool,
}

impl Output {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn bundle(&self, name: &str, bundle: &ReportBundle) -> Result<u8, CliError> {
        let path = self.write(&format!("{name}.json"), &bundle.to_json())?;
        if !self.quiet {
            print!("{}", bundle.to_table());
            println!("wrote {}", path.display());
        }
        Ok(if bundle.passed() { EXIT_PASS } else { EXIT_FAIL })
    }
}

fn build_smatrix(cfg: &ExperimentConfig, out: &Output) -> Result<u8, CliError> {
    let mut r = VerificationReport::new("smatrix", cfg.tolerances.unimodular);
    let (csv, basis) = match cfg.model {
        Model::Massive => {
            let basis = Arc::new(build_charged_basis(rapidity_grid(cfg)?, cfg.massive.cutoff)?);
            let tb = TensorBasis::square(basis);
            let s = massive_twist(cfg.kappa, &tb)?;
            r.note("label", s.label());
            r.metric("dim", s.dim() as f64);
            r.require_at_most("unimodularity", s.max_modulus_defect(), cfg.tolerances.unimodular);
            r.require("vacuum_fixed", s.phase(0) == num_complex::Complex64::new(1.0, 0.0));
            (phase_table_csv(&s, &tb), None)
        }
        _ => {
            let spec = triple_spec(cfg)?;
            let s = spec.deformation.build(&spec.tensor)?;
            r.note("label", s.label());
            r.metric("dim", s.dim() as f64);
            r.require_at_most("unimodularity", s.max_modulus_defect(), cfg.tolerances.unimodular);
            r.require("vacuum_fixed", s.phase(0) == num_complex::Complex64::new(1.0, 0.0));
            (phase_table_csv(&s, &spec.tensor), Some(basis_json(spec.tensor.left())))
        }
    };
    out.write("smatrix.csv", &csv)?;
    if let Some(b) = basis {
        let text = serde_json::to_string_pretty(&b).expect("json") + "\n";
        out.write("smatrix_basis.json", &text)?;
    }
    let mut bundle = ReportBundle::new(cfg.seed, cfg.model.name());
    bundle.reports.push(r);
    out.bundle("build-smatrix", &bundle)
}

fn scatter(cfg: &ExperimentConfig, out: &Output) -> Result<u8, CliError> {
    let def = cfg
        .deformation()
        .filter(|_| matches!(cfg.model, Model::SKappa | Model::SPhi))
        .ok_or_else(|| ConfigError::Invalid(format!("scatter does not apply to model {}", cfg.model.name())))?;
    let bundle = run_checks(cfg, &[CheckKind::Scattering])?;
    let o = &cfg.scatter;
    let mut csv = String::from("pair,p,q,record,T,difference,phase_re,phase_im\n");
    for (i, &(p, q)) in o.pairs.iter().enumerate() {
        let amp = smatrix_element(
            &WavePacket::new(p, o.relative_width, o.points)?,
            &WavePacket::new(q, o.relative_width, o.points)?,
            &def,
            &o.series,
        )?;
        for line in amp.to_csv().lines().skip(1) {
            csv.push_str(&format!("{i},{p},{q},{line}\n"));
        }
    }
    out.write("scatter_convergence.csv", &csv)?;
    out.bundle("scatter", &bundle)
}

fn massive_sweep(cfg: &ExperimentConfig, out: &Output) -> Result<u8, CliError> {
    if cfg.model != Model::Massive && cfg.model != Model::SKappa {
        return Err(ConfigError::Invalid(format!("massive-sweep does not apply to model {}", cfg.model.name())).into());
    }
    let sweep = rapidity_sweep(cfg.kappa, &rapidity_grid(cfg)?)?;
    out.write("massive_sweep.csv", &sweep.to_csv())?;
    let basis = Arc::new(build_charged_basis(rapidity_grid(cfg)?, cfg.massive.cutoff)?);
    let mut bundle = ReportBundle::new(cfg.seed, Model::Massive.name());
    bundle.reports.push(sweep_report(&sweep));
    bundle.reports.push(check_massive_axioms(cfg.kappa, &basis)?);
    out.bundle("massive-sweep", &bundle)
}

fn check_borchers(cfg: &ExperimentConfig, commutators: bool, out: &Output) -> Result<u8, CliError> {
    use CheckKind::*;
    let mut kinds: Vec<CheckKind> = cfg
        .resolved_checks()
        .into_iter()
        .filter(|k| {
            matches!(
                k,
                Axioms | Gamma | CrossConstruction | PairPhases | WedgeCommutators | LongoWitten | Cyclicity | MassiveAxioms
            )
        })
        .collect();
    if commutators && !kinds.contains(&WedgeCommutators) {
        if !matches!(cfg.model, Model::SKappa | Model::SPhi) {
            return Err(ConfigError::Invalid("wedge commutators need a bosonic massless model".into()).into());
        }
        kinds.push(WedgeCommutators);
    }
    let bundle = run_checks(cfg, &kinds)?;
    out.bundle("check-borchers", &bundle)
}

fn report(path: &Path, csv: bool, out: &Output) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bundle: ReportBundle =
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: not a report bundle: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let written = out.write(&format!("{stem}.csv"), &bundle.to_csv())?;
    if csv {
        print!("{}", bundle.to_csv());
    } else if !out.quiet {
        print!("{}", bundle.to_table());
        println!("wrote {}", written.display());
    }
    Ok(if bundle.passed() { EXIT_PASS } else { EXIT_FAIL })
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    let cfg = load_config(&cli.global)?;
    let out = Output {
        dir: cfg.out_dir.clone(),
        quiet: cli.global.quiet,
    };
    match cli.command {
        Command::VerifyInner { random } => {
            let mut bundle = ReportBundle::new(cfg.seed, cfg.model.name());
            bundle.reports = inner_reports(&cfg, random);
            out.bundle("verify-inner", &bundle)
        }
        Command::BuildSmatrix => build_smatrix(&cfg, &out),
        Command::CheckBorchers { commutators } => check_borchers(&cfg, commutators, &out),
        Command::Scatter => scatter(&cfg, &out),
        Command::MassiveSweep => massive_sweep(&cfg, &out),
        Command::Report { bundle, csv } => report(&bundle, csv, &out),
        Command::Run => {
            let bundle = run_checks(&cfg, &cfg.resolved_checks())?;
            out.write("config.toml", &cfg.to_toml())?;
            out.bundle("run", &bundle)
        }
    }
}

/// Parses `args` and runs the command.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
