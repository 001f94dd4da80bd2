//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use borchers_lab::borchers::{
    check_axioms, check_cross_construction, check_gamma_multiplicativity, check_longo_witten, check_pair_phases,
    check_wedge_commutators, default_generators, longo_witten_bumps, CommutatorOptions, LongoWittenOptions,
    TripleSpec, APPROX_TOL,
};
use borchers_lab::fock::{build_basis, Statistics};
use borchers_lab::innerfunc::{check_random_suite, make_blaschke, make_singular, InnerFunction};
use borchers_lab::lightray::{build_grid, Side, Spacing};
use borchers_lab::massive::{build_charged_basis, check_massive_axioms, rapidity_sweep, two_particle_phase, RapidityGrid, Species};
use borchers_lab::report::VerificationReport;
use borchers_lab::scatter::{check_scattering, ScatterOptions};
use borchers_lab::smatrix::Deformation;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20260101;

// Pinned tolerances.
const INNER_TOL: f64 = 1e-12;
const UNIMODULAR_TOL: f64 = 1e-14;
const GAMMA_TOL: f64 = 1e-12;
const CROSS_TOL: f64 = 1e-13;
const LEAKAGE_TOL: f64 = 5e-2;
const LEAKAGE_DECAY: f64 = 2.0;
const COMMUTATOR_OVERHEAD: f64 = 5.0;
const PHASE_TOL: f64 = 1e-3;
const TRIVIAL_PHASE_TOL: f64 = 1e-10;

type Outcome = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn failed_metrics(r: &VerificationReport) -> String {
    let m: Vec<String> = r.metrics.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
    format!("{} failed: {}", r.check, m.join(" "))
}

fn passed(r: VerificationReport) -> Result<VerificationReport, String> {
    if r.passed {
        Ok(r)
    } else {
        Err(failed_metrics(&r))
    }
}

fn metric(r: &VerificationReport, k: &str) -> f64 {
    r.get(k).unwrap_or(f64::NAN)
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn default_phi() -> InnerFunction {
    make_blaschke(&[Complex64::new(0.5, 1.0), Complex64::new(-0.5, 1.0)], false).expect("valid zeros")
}

fn inner_suite() -> Outcome {
    let grid: Vec<f64> = (0..1000).map(|k| -10.0 + 20.0 * k as f64 / 999.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let r = passed(check_random_suite(&mut rng, 20, 6, &grid, INNER_TOL))?;
    Ok(format!(
        "20 products, modulus {:.1e}, reflection {:.1e}, uhp excess {:.1e}",
        metric(&r, "max_modulus_defect"),
        metric(&r, "max_reflection_defect"),
        metric(&r, "uhp_bound_excess")
    ))
}

fn exact_borchers() -> Outcome {
    let mut worst_unimodular = 0.0_f64;
    for def in [Deformation::Kappa { kappa: 0.5 }, Deformation::Phi { phi: default_phi() }] {
        let spec = TripleSpec::standard(def, 8, 4).map_err(e)?;
        let r = passed(check_axioms(&spec, APPROX_TOL).map_err(e)?)?;
        let u = metric(&r, "s_unimodularity");
        ensure(u <= UNIMODULAR_TOL, || format!("{}: unimodularity {u:.2e}", r.check))?;
        ensure(metric(&r, "s_vacuum_fixed") == 1.0, || "vacuum not fixed".into())?;
        let c = metric(&r, "s_translation_commutator");
        ensure(c == 0.0, || format!("[S,T(a)] = {c:.2e}"))?;
        passed(check_pair_phases(&spec.deformation, &spec.tensor, INNER_TOL).map_err(e)?)?;
        worst_unimodular = worst_unimodular.max(u);
    }
    let basis = build_basis(
        Arc::new(build_grid(Spacing::Logarithmic, 1e-2, 1e2, 256).map_err(e)?.subsample(8).map_err(e)?),
        4,
        Statistics::Bose,
    )
    .map_err(e)?;
    let g = passed(check_gamma_multiplicativity(&default_phi(), &make_singular(0.5).map_err(e)?, &basis).map_err(e)?)?;
    let gd = metric(&g, "multiplicativity_defect");
    ensure(gd <= GAMMA_TOL, || format!("gamma defect {gd:.2e}"))?;
    Ok(format!("M=8 N=4, unimodularity {worst_unimodular:.1e}, [S,T]=0, gamma {gd:.1e}, kappa=0 is identity"))
}

fn cross_construction() -> Outcome {
    let spec = TripleSpec::standard(Deformation::Identity, 8, 4).map_err(e)?;
    let mut worst = 0.0_f64;
    for kappa in [0.25, 0.5, 1.0, 2.0] {
        let r = passed(check_cross_construction(kappa, &spec.tensor, CROSS_TOL).map_err(e)?)?;
        worst = worst.max(metric(&r, "max_entry_distance"));
    }
    Ok(format!("max entry distance {worst:.1e} over four couplings"))
}

fn longo_witten() -> Outcome {
    let opts = LongoWittenOptions {
        grid_points: vec![256, 512, 1024],
        tolerance: LEAKAGE_TOL,
        decay: LEAKAGE_DECAY,
        ..LongoWittenOptions::default()
    };
    let bumps = longo_witten_bumps();
    ensure(bumps.len() == 5, || "need five bumps".into())?;
    let symbols = [
        make_blaschke(&[Complex64::new(0.5, 1.0)], true),
        make_blaschke(&[Complex64::new(0.0, 2.0)], true),
        make_blaschke(&[Complex64::new(1.0, 0.5), Complex64::new(0.3, 1.5)], true),
    ];
    let mut coarse = 0.0_f64;
    let mut decay = f64::INFINITY;
    for phi in symbols {
        let phi = phi.map_err(e)?;
        let r = passed(check_longo_witten(&phi, &bumps, &opts).map_err(e)?)?;
        coarse = coarse.max(metric(&r, "n256.leakage"));
        decay = decay.min(metric(&r, "min_decay_factor"));
        let control = check_longo_witten(&phi.reflected(), &bumps, &opts).map_err(e)?;
        ensure(!control.passed, || "reflected control symbol passed".into())?;
    }
    Ok(format!("3 symbols x 5 bumps, leakage {coarse:.1e} at n=256, decay >= x{decay:.0}, controls fail"))
}

fn wedge_commutators() -> Outcome {
    let opts = CommutatorOptions { max_overhead: COMMUTATOR_OVERHEAD, ..CommutatorOptions::default() };
    let left = default_generators(Side::Left);
    let right = default_generators(Side::Right);
    ensure(left.len() == 4 && right.len() == 4, || "need a 4x4 generator grid".into())?;
    let r = passed(check_wedge_commutators(&Deformation::Kappa { kappa: 0.5 }, &left, &right, &opts).map_err(e)?)?;
    let series: Vec<String> = r.series.iter().map(|p| format!("{}={:.3}", p.level, p.metric)).collect();
    Ok(format!("overhead <= {:.2}, {}", metric(&r, "max_overhead"), series.join(" ")))
}

fn scattering() -> Outcome {
    let opts = ScatterOptions { tolerance: PHASE_TOL, trivial_tolerance: TRIVIAL_PHASE_TOL, ..ScatterOptions::default() };
    ensure(opts.pairs.len() == 6, || "need six momentum pairs".into())?;
    let mut out = Vec::new();
    for def in [Deformation::Kappa { kappa: 0.5 }, Deformation::Phi { phi: default_phi() }] {
        let r = passed(check_scattering(&def, &opts).map_err(e)?)?;
        out.push(format!("{} {:.1e}", def.label(), metric(&r, "max_phase_error")));
    }
    Ok(format!("phase error {}, kappa=0 within {TRIVIAL_PHASE_TOL:.0e}", out.join(", ")))
}

fn massive() -> Outcome {
    let grid = RapidityGrid::uniform(-3.0, 3.0, 16, 1.0).map_err(e)?;
    let basis = Arc::new(build_charged_basis(grid.clone(), 2).map_err(e)?);
    for kappa in [0.5, 0.25] {
        let r = passed(check_massive_axioms(kappa, &basis).map_err(e)?)?;
        ensure(metric(&r, "periodicity_defect") == 0.0, || "periodicity not exact".into())?;
        ensure(metric(&r, "vacuum_defect") == 0.0, || "vacuum not fixed exactly".into())?;
    }
    let sweep = rapidity_sweep(0.5, &grid).map_err(e)?;
    ensure(sweep.rows.len() == 4 * 16 * 16, || format!("sweep has {} rows", sweep.rows.len()))?;
    for (q1, q2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let v = sweep.variance(q1, q2);
        ensure(v == 0.0, || format!("variance {v:.2e} for charges ({q1},{q2})"))?;
    }
    let (t1, t2) = (grid.points()[3], grid.points()[12]);
    let z = two_particle_phase(0.5, t1, t2, (Species::Particle, Species::Antiparticle), &grid).map_err(e)?;
    ensure(z == Complex64::new(-1.0, 0.0), || format!("(1,-1,0.5) gives {z}"))?;
    Ok("periodicity and vacuum exact, zero variance over 16x16, (1,-1,0.5) -> -1".into())
}

fn fermionic() -> Outcome {
    let spec = TripleSpec::standard(Deformation::PhiFermionic { phi: default_phi() }, 8, 4).map_err(e)?;
    ensure(spec.tensor.left().statistics() == Statistics::Fermi, || "basis is not fermionic".into())?;
    let r = passed(check_axioms(&spec, APPROX_TOL).map_err(e)?)?;
    let u = metric(&r, "s_unimodularity");
    ensure(u <= UNIMODULAR_TOL, || format!("unimodularity {u:.2e}"))?;
    ensure(metric(&r, "s_translation_commutator") == 0.0, || "[S,T(a)] != 0".into())?;
    ensure(metric(&r, "s_vacuum_fixed") == 1.0, || "vacuum not fixed".into())?;
    let p = passed(check_pair_phases(&spec.deformation, &spec.tensor, INNER_TOL).map_err(e)?)?;
    Ok(format!(
        "fermi dim {}, unimodularity {u:.1e}, pair phase defect {:.1e}",
        spec.tensor.dim(),
        metric(&p, "max_pair_phase_defect")
    ))
}

fn cli_determinism() -> Outcome {
    let base = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = base.join(run);
        let _ = std::fs::remove_dir_all(&dir);
        let status = Command::new(env!("CARGO_BIN_EXE_borchers-lab"))
            .args(["run", "--quiet", "--seed", "7", "--modes", "6", "--cutoff", "3", "--out"])
            .arg(&dir)
            .status()
            .map_err(e)?;
        ensure(status.code() == Some(0), || format!("run exited with {status}"))?;
        outputs.push(std::fs::read(dir.join("run.json")).map_err(e)?);
    }
    ensure(outputs[0] == outputs[1], || "run.json differs between identical runs".into())?;
    Ok(format!("two runs, {} identical bytes", outputs[0].len()))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "inner symmetric suite", budget: Duration::from_secs(1), run: inner_suite },
        Criterion { id: 2, name: "exact borchers checks", budget: Duration::from_secs(10), run: exact_borchers },
        Criterion { id: 3, name: "cross construction", budget: Duration::from_secs(10), run: cross_construction },
        Criterion { id: 4, name: "longo-witten support", budget: Duration::from_secs(30), run: longo_witten },
        Criterion { id: 5, name: "wedge commutators", budget: Duration::from_secs(300), run: wedge_commutators },
        Criterion { id: 6, name: "scattering phases", budget: Duration::from_secs(120), run: scattering },
        Criterion { id: 7, name: "massive twist", budget: Duration::from_secs(5), run: massive },
        Criterion { id: 8, name: "fermionic construction", budget: Duration::from_secs(10), run: fermionic },
        Criterion { id: 9, name: "cli determinism", budget: Duration::from_secs(300), run: cli_determinism },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= c.budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.1?}, budget {:?}", c.budget))
            }
        });
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failures += 1;
                ("FAIL", m)
            }
        };
        println!("[{tag}] criterion {} {:24} {:>8.2?}  {msg}", c.id, c.name, elapsed);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
