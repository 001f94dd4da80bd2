//! Truncation-level checks of the Borchers-triple structure of a deformed tensor
//! product `(M, T, Ω⊗Ω)`.
//!
//! `M` is generated by `W(f)⊗1` with `f` localized in ℝ₋ and by `S(1⊗W(g))S*` with
//! `g` localized in ℝ₊. Its commutant candidate `M¹` is generated by
//! `S(W(g)⊗1)S*` and `1⊗W(f)`. Locality of the pair rests on
//!
//! ```text
//! [W(f)⊗1, S(W(g)⊗1)S*] = 0,      [S(1⊗W(g))S*, 1⊗W(f)] = 0
//! ```
//!
//! which hold exactly in the continuum and are measured here on a low particle-number
//! probe sector of the truncated space.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_basis, second_quantize, translation, weyl, FockBasis, Statistics, WeylPropagator};
use crate::innerfunc::{make_singular, multiply, InnerFunction, MomentumMultiplier};
use crate::lightray::{
    build_grid, fourier_transform, inner_product, support_leakage, translation_phase, HalfLineProfile, MomentumGrid,
    OnePVector, Side, Spacing,
};
use crate::report::VerificationReport;
use crate::smatrix::{build_s_kappa, build_s_phi, tensor_translation, twist_right, Deformation, LightrayShift, TensorBasis, TensorOperator};
use crate::unitary::DiagonalUnitary;

/// Tolerance of the checks that hold exactly at every truncation.
pub const EXACT_TOL: f64 = 1e-12;
/// Default tolerance of leakage and commutator checks.
pub const APPROX_TOL: f64 = 5e-2;

/// A Weyl generator `W(f)`: a smooth bump in position space, normalized in the
/// one-particle norm on whatever grid it is sampled on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub side: Side,
    pub center: f64,
    pub width: f64,
    pub norm: f64,
    /// Extra phase `e^{i·rotation}` on the one-particle vector.
    #[serde(default)]
    pub rotation: f64,
}

impl Generator {
    pub fn bump(side: Side, center: f64, width: f64, norm: f64) -> Self {
        Self {
            side,
            center,
            width,
            norm,
            rotation: 0.0,
        }
    }

    pub fn rotated(mut self, angle: f64) -> Self {
        self.rotation = angle;
        self
    }

    pub fn profile(&self) -> Result<HalfLineProfile> {
        HalfLineProfile::bump(self.side, self.center, self.width)
    }

    /// One-particle vector on `grid`. Localization is not enforced here, so that the
    /// checks can measure generators that violate it.
    pub fn vector(&self, grid: &Arc<MomentumGrid>) -> Result<OnePVector> {
        let f = fourier_transform(&self.profile()?, grid);
        let n = inner_product(&f, &f)?.re.sqrt();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(f.scaled(Complex64::from_polar(self.norm / n, self.rotation)))
    }

    /// Fraction of the declared profile outside its half-line.
    pub fn declared_mass_outside(&self) -> Result<f64> {
        Ok(self.profile()?.mass_outside())
    }
}

/// The default 4 + 4 generator family: bumps of one-particle norm 0.5.
pub fn default_generators(side: Side) -> Vec<Generator> {
    let s = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    [(2.0, 1.0), (3.0, 1.0), (2.0, 0.75), (2.5, 1.25)]
        .iter()
        .map(|&(c, w)| Generator::bump(side, s * c, w, 0.5))
        .collect()
}

/// Data of one deformed triple at a fixed truncation.
#[derive(Clone, Debug)]
pub struct TripleSpec {
    pub tensor: TensorBasis<FockBasis>,
    pub deformation: Deformation,
    pub left_generators: Vec<Generator>,
    pub right_generators: Vec<Generator>,
    pub shifts: Vec<LightrayShift>,
    /// Fine one-particle grid on which generator localization is measured.
    pub leakage_grid: Arc<MomentumGrid>,
}

impl TripleSpec {
    /// Bosonic tensor square over `modes` sub-sampled points of the default grid.
    pub fn standard(deformation: Deformation, modes: usize, cutoff: usize) -> Result<Self> {
        let grid = Arc::new(build_grid(Spacing::Logarithmic, 1e-2, 1e2, 256)?);
        let mode_grid = Arc::new(grid.subsample(modes)?);
        let statistics = match deformation {
            Deformation::PhiFermionic { .. } => Statistics::Fermi,
            _ => Statistics::Bose,
        };
        let basis = Arc::new(build_basis(mode_grid, cutoff, statistics)?);
        Ok(Self {
            tensor: TensorBasis::square(basis),
            deformation,
            left_generators: default_generators(Side::Left),
            right_generators: default_generators(Side::Right),
            shifts: vec![LightrayShift::new(1.0, -1.0)],
            leakage_grid: grid,
        })
    }
}

/// Leakage of a translated generator out of its half-line.
fn translated_leakage(g: &Generator, grid: &Arc<MomentumGrid>, t: f64) -> Result<f64> {
    let profile = g.profile()?;
    let v = fourier_transform(&profile, grid).apply_diagonal(&translation_phase(grid, t))?;
    support_leakage(&v, g.side, &profile.window.shifted(t))
}

/// Exact structural checks plus the localization proxy for wedge inclusion.
pub fn check_axioms(spec: &TripleSpec, leak_tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut r = VerificationReport::new("axioms", EXACT_TOL);
    r.note("deformation", spec.deformation.label());
    let s = spec.deformation.build(&spec.tensor)?;
    let (left, right) = (spec.tensor.left(), spec.tensor.right());

    r.require_at_most("s_unimodularity", s.max_modulus_defect(), 1e-14);
    r.require("s_vacuum_fixed", s.phase(0) == Complex64::new(1.0, 0.0));
    let inverse_defect = s.compose(&s.inverse())?.max_distance_from_identity();
    r.require_at_most("s_inverse_defect", inverse_defect, EXACT_TOL);

    let min_energy = (0..left.dim())
        .map(|i| left.energy(i))
        .chain((0..right.dim()).map(|i| right.energy(i)))
        .fold(f64::INFINITY, f64::min);
    r.metric("min_lightray_energy", min_energy);
    r.require("spectrum_non_negative", min_energy >= 0.0);

    let mut vacuum = 0.0_f64;
    let mut commutator = 0.0_f64;
    let mut worst_leak = 0.0_f64;
    let mut shifts = vec![LightrayShift::new(0.0, 0.0)];
    shifts.extend(spec.shifts.iter().copied());
    for a in &shifts {
        let t = tensor_translation(&spec.tensor, *a);
        vacuum = vacuum.max((t.phase(0) - 1.0).norm());
        commutator = commutator.max(s.commutator_with(t.phases()));
        for g in &spec.left_generators {
            worst_leak = worst_leak.max(translated_leakage(g, &spec.leakage_grid, a.minus)?);
        }
        for g in &spec.right_generators {
            worst_leak = worst_leak.max(translated_leakage(g, &spec.leakage_grid, a.plus)?);
        }
        let key = format!("shift({}, {}).in_right_wedge", a.plus, a.minus);
        r.metric(key, if a.in_right_wedge() { 1.0 } else { 0.0 });
    }
    r.require("translation_vacuum_fixed", vacuum == 0.0);
    r.require_at_most("s_translation_commutator", commutator, EXACT_TOL);
    r.require_at_most("wedge_inclusion_leakage", worst_leak, leak_tol);
    r.note("leakage_tolerance", format!("{leak_tol:e}"));
    Ok(r.with_runtime(start.elapsed()))
}

/// `Γ(φψ) = Γ(φ)Γ(ψ)` on a single factor, plus vacuum fixing and translation commutation.
pub fn check_gamma_multiplicativity(phi: &InnerFunction, psi: &InnerFunction, basis: &FockBasis) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("gamma_multiplicativity", EXACT_TOL);
    let lift = |f: &InnerFunction| -> Result<DiagonalUnitary> {
        let v1 = DiagonalUnitary::new(basis.momenta().iter().map(|&p| f.symbol(p)).collect(), "phi(P1)")?;
        second_quantize(&v1, basis)
    };
    let gp = lift(phi)?;
    let gq = lift(psi)?;
    let gpq = lift(&multiply(phi, psi))?;
    r.require_at_most("multiplicativity_defect", gp.compose(&gq)?.max_distance(&gpq), EXACT_TOL);
    r.require("vacuum_fixed", gp.phase(0) == Complex64::new(1.0, 0.0) && gpq.phase(0) == Complex64::new(1.0, 0.0));
    r.require_at_most("translation_commutator", gp.commutator_with(translation(basis, 1.7).phases()), EXACT_TOL);
    r.require_at_most("unimodularity", gpq.max_modulus_defect(), 1e-14);
    Ok(r)
}

/// `S_φ` with `φ(p) = e^{iκp}` against `S_κ`, entrywise.
pub fn check_cross_construction(kappa: f64, tensor: &TensorBasis<FockBasis>, tol: f64) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(format!("cross_construction[kappa={kappa}]"), tol);
    let sk = build_s_kappa(kappa, tensor)?;
    let sp = build_s_phi(&make_singular(kappa)?, tensor)?;
    r.require_at_most("max_entry_distance", sk.max_distance(&sp), tol);
    Ok(r)
}

/// Entries of the deformation on one-particle ⊗ one-particle states against the
/// closed-form pair phase, and the `κ = 0` identity.
pub fn check_pair_phases(deformation: &Deformation, tensor: &TensorBasis<FockBasis>, tol: f64) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(format!("pair_phases[{}]", deformation.label()), tol);
    let s = deformation.build(tensor)?;
    let (left, right) = (tensor.left(), tensor.right());
    let mut worst = 0.0_f64;
    for a in (0..left.dim()).filter(|&a| left.particle_number(a) == 1) {
        let p = left.state_momenta(a)[0];
        for b in (0..right.dim()).filter(|&b| right.particle_number(b) == 1) {
            let q = right.state_momenta(b)[0];
            worst = worst.max((s.phase(tensor.index(a, b)) - deformation.pair_phase(p, q)).norm());
        }
    }
    r.require_at_most("max_pair_phase_defect", worst, tol);
    let trivial = Deformation::Kappa { kappa: 0.0 }.build(tensor)?.max_distance_from_identity();
    r.require_at_most("kappa0_identity_defect", trivial, 0.0);
    Ok(r)
}

/// One level of the commutator refinement series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub modes: usize,
    pub cutoff: usize,
}

impl Truncation {
    pub fn new(modes: usize, cutoff: usize) -> Self {
        Self { modes, cutoff }
    }

    fn label(&self) -> String {
        format!("M{}_N{}", self.modes, self.cutoff)
    }

    /// Whether `other` refines `self` in at least one direction and coarsens in none.
    fn refined_by(&self, other: &Self) -> bool {
        other.modes >= self.modes && other.cutoff >= self.cutoff && other != self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorOptions {
    pub levels: Vec<Truncation>,
    /// Linear mode grid `[p_min, p_max]`.
    pub p_min: f64,
    pub p_max: f64,
    /// Inputs are restricted to total particle number at most this value.
    pub probe_particles: usize,
    pub tolerance: f64,
    pub max_overhead: f64,
}

impl Default for CommutatorOptions {
    fn default() -> Self {
        Self {
            levels: vec![
                Truncation::new(12, 3),
                Truncation::new(12, 4),
                Truncation::new(16, 3),
                Truncation::new(16, 4),
            ],
            p_min: 0.1,
            p_max: 6.0,
            probe_particles: 1,
            tolerance: APPROX_TOL,
            max_overhead: 5.0,
        }
    }
}

/// Largest singular value of the matrix with the given columns.
pub fn columns_norm(cols: &[Vec<Complex64>]) -> f64 {
    let k = cols.len();
    if k == 0 {
        return 0.0;
    }
    let mut g = DMatrix::<Complex64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    let top = g.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
    top.sqrt()
}

fn rotate(v: &[Complex64], d: &[Complex64], conj: bool) -> Vec<Complex64> {
    v.iter()
        .zip(d)
        .map(|(x, z)| if conj { x * z.conj() } else { x * z })
        .collect()
}

fn unit(dim: usize, i: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    e[i] = Complex64::new(1.0, 0.0);
    e
}

/// Single-factor Weyl propagator together with its action on the probe inputs.
struct ProbedWeyl {
    w: WeylPropagator,
    on_probe: Vec<Vec<Complex64>>,
}

impl ProbedWeyl {
    fn new(basis: &FockBasis, g: &Generator, probe: usize) -> Result<Self> {
        let grid = basis.grid().ok_or(Error::ModeMismatch("basis has no grid".into()))?;
        let alpha = basis.mode_amplitudes(&g.vector(grid)?)?;
        let w = WeylPropagator::new(basis, &alpha)?;
        let on_probe = (0..probe).map(|i| w.apply(&unit(basis.dim(), i))).collect();
        Ok(Self { w, on_probe })
    }
}

/// `‖[W_x, D W_y D*] P‖` where `P` projects onto the first `inputs` basis states.
fn twisted_block_norm(x: &ProbedWeyl, y: &ProbedWeyl, d: &[Complex64], inputs: usize) -> f64 {
    let cols: Vec<Vec<Complex64>> = (0..inputs)
        .map(|i| {
            // D W_y D* e_i = conj(d_i) D (W_y e_i)
            let dy = rotate(&y.on_probe[i], d, false);
            let dy: Vec<Complex64> = dy.iter().map(|z| z * d[i].conj()).collect();
            let xy = x.w.apply(&dy);
            let yx = rotate(&y.w.apply(&rotate(&x.on_probe[i], d, true)), d, false);
            xy.iter().zip(&yx).map(|(a, b)| a - b).collect()
        })
        .collect();
    columns_norm(&cols)
}

/// The two nontrivial `M`–`M¹` commutators for one generator pair on the probe
/// sector. Returns the maximum over all blocks and over the blocks in which the
/// other factor is excited (the only ones where the twist enters).
fn pair_commutators(
    def: &Deformation,
    tensor: &TensorBasis<FockBasis>,
    f: &ProbedWeyl,
    g: &ProbedWeyl,
    n0: usize,
) -> Result<(f64, f64)> {
    let (left, right) = (tensor.left(), tensor.right());
    let untwisted = matches!(def, Deformation::Identity);
    let mut all = 0.0_f64;
    let mut excited = 0.0_f64;
    for b in 0..right.sector_end(n0) {
        let inputs = left.sector_end(n0 - right.particle_number(b));
        let c = twisted_block_norm(f, g, &def.left_slice(tensor, b)?, inputs);
        all = all.max(c);
        if b > 0 {
            excited = excited.max(c);
        }
    }
    for a in 0..left.sector_end(n0) {
        if untwisted && a > 0 {
            // Same blocks as above with the roles of the factors exchanged.
            break;
        }
        let inputs = right.sector_end(n0 - left.particle_number(a));
        let c = twisted_block_norm(f, g, &def.right_slice(tensor, a)?, inputs);
        all = all.max(c);
        if a > 0 {
            excited = excited.max(c);
        }
    }
    Ok((all, excited))
}

/// Largest `M`–`M¹` commutators at one truncation, maximized over generator pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorLevel {
    /// Over the whole probe sector.
    pub max: f64,
    /// Over blocks with the other factor excited.
    pub excited: f64,
}

pub fn max_wedge_commutator(
    def: &Deformation,
    level: Truncation,
    opts: &CommutatorOptions,
    left_gens: &[Generator],
    right_gens: &[Generator],
) -> Result<CommutatorLevel> {
    let grid = Arc::new(build_grid(Spacing::Linear, opts.p_min, opts.p_max, level.modes)?);
    let basis = Arc::new(build_basis(grid, level.cutoff, Statistics::Bose)?);
    let tensor = TensorBasis::square(basis.clone());
    let probe = basis.sector_end(opts.probe_particles);
    let fs = left_gens
        .iter()
        .map(|g| ProbedWeyl::new(&basis, g, probe))
        .collect::<Result<Vec<_>>>()?;
    let gs = right_gens
        .iter()
        .map(|g| ProbedWeyl::new(&basis, g, probe))
        .collect::<Result<Vec<_>>>()?;
    let mut out = CommutatorLevel { max: 0.0, excited: 0.0 };
    for f in &fs {
        for g in &gs {
            let (all, excited) = pair_commutators(def, &tensor, f, g, opts.probe_particles)?;
            out.max = out.max.max(all);
            out.excited = out.excited.max(excited);
        }
    }
    Ok(out)
}

/// Commutators between generators of `M` and of `M¹` along a refinement series,
/// compared with the untwisted floor.
pub fn check_wedge_commutators(
    def: &Deformation,
    left_gens: &[Generator],
    right_gens: &[Generator],
    opts: &CommutatorOptions,
) -> Result<VerificationReport> {
    if left_gens.is_empty() || right_gens.is_empty() {
        return Err(Error::InvalidArgument("generator lists must be nonempty".into()));
    }
    if opts.levels.is_empty() {
        return Err(Error::InvalidArgument("at least one truncation level is required".into()));
    }
    let start = Instant::now();
    let mut r = VerificationReport::new("wedge_commutators", opts.tolerance);
    r.note("deformation", def.label());
    r.note(
        "probe",
        format!("inputs with total particle number <= {}", opts.probe_particles),
    );
    let mut twisted: BTreeMap<usize, f64> = BTreeMap::new();
    let mut max_overhead = 0.0_f64;
    for (i, level) in opts.levels.iter().enumerate() {
        let free_level = max_wedge_commutator(&Deformation::Identity, *level, opts, left_gens, right_gens)?;
        let tw_level = if matches!(def, Deformation::Identity) {
            free_level
        } else {
            max_wedge_commutator(def, *level, opts, left_gens, right_gens)?
        };
        let (free, tw) = (free_level.max, tw_level.max);
        let overhead = if free > 0.0 { tw / free } else if tw == 0.0 { 1.0 } else { f64::INFINITY };
        max_overhead = max_overhead.max(overhead);
        r.metric(format!("{}.twisted", level.label()), tw);
        r.metric(format!("{}.free", level.label()), free);
        r.metric(format!("{}.twisted_excited_blocks", level.label()), tw_level.excited);
        r.metric(format!("{}.overhead", level.label()), overhead);
        r.push_level(level.label(), tw);
        twisted.insert(i, tw);
    }
    r.require_at_most("max_overhead", max_overhead, opts.max_overhead);
    let finest = *twisted.get(&(opts.levels.len() - 1)).unwrap();
    r.require_at_most("finest_twisted", finest, opts.tolerance);
    let mut decreasing = true;
    for (i, a) in opts.levels.iter().enumerate() {
        for (j, b) in opts.levels.iter().enumerate() {
            if a.refined_by(b) && twisted[&j] >= twisted[&i] {
                decreasing = false;
            }
        }
    }
    r.require("decreases_under_refinement", decreasing);
    Ok(r.with_runtime(start.elapsed()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongoWittenOptions {
    pub grid_points: Vec<usize>,
    pub p_min: f64,
    pub p_max: f64,
    pub tolerance: f64,
    /// Required leakage reduction factor per refinement level.
    pub decay: f64,
    /// Fock truncation for the second-quantized checks.
    pub fock_modes: usize,
    pub fock_cutoff: usize,
}

impl Default for LongoWittenOptions {
    fn default() -> Self {
        Self {
            grid_points: vec![256, 512, 1024],
            p_min: 1e-4,
            p_max: 1e2,
            tolerance: APPROX_TOL,
            decay: 2.0,
            fock_modes: 8,
            fock_cutoff: 4,
        }
    }
}

/// The five right-localized test bumps.
pub fn longo_witten_bumps() -> Vec<HalfLineProfile> {
    [(2.0, 1.0), (3.0, 1.0), (1.5, 0.5), (4.0, 2.0), (2.5, 1.5)]
        .iter()
        .map(|&(c, w)| HalfLineProfile::bump(Side::Right, c, w).expect("positive widths"))
        .collect()
}

/// Support preservation of `m(P₁)` on right-localized vectors, with the
/// second-quantized checks of `Γ(m(P₁))`.
pub fn check_longo_witten(
    symbol: &dyn MomentumMultiplier,
    bumps: &[HalfLineProfile],
    opts: &LongoWittenOptions,
) -> Result<VerificationReport> {
    if bumps.is_empty() || opts.grid_points.is_empty() {
        return Err(Error::InvalidArgument("need test vectors and grid levels".into()));
    }
    let start = Instant::now();
    let mut r = VerificationReport::new("longo_witten", opts.tolerance);
    let mut levels = Vec::new();
    for &n in &opts.grid_points {
        let grid = Arc::new(build_grid(Spacing::Logarithmic, opts.p_min, opts.p_max, n)?);
        let mut worst = 0.0_f64;
        let mut input = 0.0_f64;
        for b in bumps {
            let f = fourier_transform(b, &grid);
            input = input.max(support_leakage(&f, Side::Right, &b.window)?);
            worst = worst.max(support_leakage(&symbol.apply(&f), Side::Right, &b.window)?);
        }
        r.metric(format!("n{n}.leakage"), worst);
        r.metric(format!("n{n}.input_leakage"), input);
        r.push_level(format!("n{n}"), worst);
        levels.push(worst);
    }
    r.require_at_most("coarsest_leakage", levels[0], opts.tolerance);
    let min_decay = levels
        .windows(2)
        .map(|w| if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY })
        .fold(f64::INFINITY, f64::min);
    if levels.len() > 1 {
        r.metric("min_decay_factor", min_decay);
        r.require("decay_per_level", min_decay >= opts.decay);
    }

    let grid = Arc::new(build_grid(Spacing::Logarithmic, 1e-2, 1e2, 256)?.subsample(opts.fock_modes)?);
    let basis = build_basis(grid.clone(), opts.fock_cutoff, Statistics::Bose)?;
    let v1 = DiagonalUnitary::new(grid.points().iter().map(|&p| symbol.symbol(p)).collect(), "m(P1)")?;
    let gamma = second_quantize(&v1, &basis)?;
    r.require("gamma_vacuum_fixed", gamma.phase(0) == Complex64::new(1.0, 0.0));
    let comm = [0.5, 1.0, 3.0]
        .iter()
        .map(|&t| gamma.commutator_with(translation(&basis, t).phases()))
        .fold(0.0, f64::max);
    r.require_at_most("gamma_translation_commutator", comm, EXACT_TOL);
    Ok(r.with_runtime(start.elapsed()))
}

/// Numerical rank of `span{w₁⋯w_j Ω⊗Ω : j ≤ L}` relative to the tensor dimension,
/// reported for each word length up to `max_len`.
pub fn check_cyclicity_rank(spec: &TripleSpec, max_len: usize, min_fraction: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut r = VerificationReport::new("cyclicity_rank", min_fraction);
    let tensor = &spec.tensor;
    let (left, right) = (tensor.left().clone(), tensor.right().clone());
    let grid = left.grid().ok_or(Error::ModeMismatch("basis has no grid".into()))?.clone();
    let s = Arc::new(spec.deformation.build(tensor)?);
    let mut ops = Vec::new();
    for g in &spec.left_generators {
        let w = weyl(&g.vector(&grid)?, &left)?;
        ops.push(TensorOperator::left_factor(w, right.dim()));
    }
    for g in &spec.right_generators {
        let w = weyl(&g.vector(&grid)?, &right)?;
        ops.push(twist_right(s.clone(), w, left.dim())?);
    }
    let dim = tensor.dim();
    let mut basis_vecs: Vec<Vec<Complex64>> = vec![unit(dim, 0)];
    let mut frontier = basis_vecs.clone();
    r.push_level("L0", 1.0 / dim as f64);
    let mut fraction = 1.0 / dim as f64;
    for len in 1..=max_len {
        let mut fresh = Vec::new();
        for v in &frontier {
            for op in &ops {
                let mut w = op.apply(v)?;
                if orthogonalize(&mut w, &basis_vecs, &fresh) {
                    fresh.push(w);
                }
            }
            if basis_vecs.len() + fresh.len() == dim {
                break;
            }
        }
        basis_vecs.extend(fresh.iter().cloned());
        frontier = fresh;
        fraction = basis_vecs.len() as f64 / dim as f64;
        r.push_level(format!("L{len}"), fraction);
        if frontier.is_empty() {
            for rest in len + 1..=max_len {
                r.push_level(format!("L{rest}"), fraction);
            }
            break;
        }
    }
    r.metric("rank_fraction", fraction);
    r.metric("tensor_dim", dim as f64);
    let monotone = r.series.windows(2).all(|w| w[1].metric >= w[0].metric);
    r.require("non_decreasing_in_length", monotone);
    r.require("rank_fraction_at_least_minimum", fraction >= min_fraction);
    Ok(r.with_runtime(start.elapsed()))
}

/// Classical Gram–Schmidt with one reorthogonalization pass. Returns `false`
/// (leaving `w` unspecified) when the residual norm is below 1e-8.
fn orthogonalize(w: &mut [Complex64], a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> bool {
    let original = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if original == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for q in a.iter().chain(b) {
            let c: Complex64 = q.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
            for (y, x) in w.iter_mut().zip(q) {
                *y -= c * x;
            }
        }
    }
    let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n <= 1e-8 * original.max(1.0) {
        return false;
    }
    w.iter_mut().for_each(|z| *z /= n);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innerfunc::{make_blaschke, make_singular};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn untwisted_axioms_pass() {
        let spec = TripleSpec::standard(Deformation::Kappa { kappa: 0.0 }, 8, 4).unwrap();
        let r = check_axioms(&spec, APPROX_TOL).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.get("wedge_inclusion_leakage").unwrap() < 1e-3);
    }

    #[test]
    fn s_kappa_axioms_pass_in_wedge() {
        let spec = TripleSpec::standard(Deformation::Kappa { kappa: 0.5 }, 8, 4).unwrap();
        let r = check_axioms(&spec, APPROX_TOL).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.get("s_translation_commutator"), Some(0.0));
    }

    #[test]
    fn out_of_wedge_shift_fails_inclusion() {
        let mut spec = TripleSpec::standard(Deformation::Kappa { kappa: 0.5 }, 8, 4).unwrap();
        spec.shifts = vec![LightrayShift::new(0.0, 3.0)];
        let r = check_axioms(&spec, APPROX_TOL).unwrap();
        assert!(!r.passed);
        assert!(r.get("wedge_inclusion_leakage").unwrap() > APPROX_TOL);
        assert_eq!(r.get("s_vacuum_fixed"), Some(1.0));
    }

    #[test]
    fn gamma_is_multiplicative() {
        let basis = build_basis(
            Arc::new(build_grid(Spacing::Logarithmic, 1e-2, 1e2, 256).unwrap().subsample(8).unwrap()),
            4,
            Statistics::Bose,
        )
        .unwrap();
        let phi = make_blaschke(&[c(0.0, 1.0)], false).unwrap();
        let psi = make_blaschke(&[c(0.5, 0.3)], true).unwrap();
        assert!(check_gamma_multiplicativity(&phi, &psi, &basis).unwrap().passed);
        assert!(check_gamma_multiplicativity(&make_singular(0.7).unwrap(), &phi, &basis).unwrap().passed);
    }

    #[test]
    fn columns_norm_matches_singular_value() {
        let cols = vec![vec![c(3.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 4.0)]];
        assert!((columns_norm(&cols) - 4.0).abs() < 1e-12);
        assert_eq!(columns_norm(&[]), 0.0);
    }

    #[test]
    fn free_commutator_tracks_symplectic_form() {
        // At zero twist only the vacuum block matters; on the probe column Ω the
        // commutator is bounded by |1 - e^{2i Im<f,g>}| up to truncation effects.
        let opts = CommutatorOptions {
            levels: vec![Truncation::new(6, 4)],
            ..CommutatorOptions::default()
        };
        let f = Generator::bump(Side::Right, 2.0, 1.0, 0.5);
        let g = f.clone().rotated(std::f64::consts::FRAC_PI_2);
        let same = max_wedge_commutator(&Deformation::Identity, opts.levels[0], &opts, &[g], &[f]).unwrap().max;
        assert!(same > 0.2, "commutator of overlapping generators {same}");
    }

    #[test]
    fn small_level_wedge_check_reports() {
        let opts = CommutatorOptions {
            levels: vec![Truncation::new(12, 3), Truncation::new(12, 4)],
            ..CommutatorOptions::default()
        };
        let l = &default_generators(Side::Left)[..2];
        let rg = &default_generators(Side::Right)[..2];
        let r = check_wedge_commutators(&Deformation::Kappa { kappa: 0.5 }, l, rg, &opts).unwrap();
        assert!(r.get("M12_N3.free").unwrap() > 0.0);
        assert!(r.get("M12_N4.twisted").unwrap() < r.get("M12_N3.twisted").unwrap());
        assert!(r.get("max_overhead").unwrap() < 5.0);
    }

    #[test]
    fn cyclicity_rank_small_space() {
        let grid = Arc::new(build_grid(Spacing::Logarithmic, 1e-2, 1e2, 256).unwrap());
        let modes = Arc::new(build_grid(Spacing::Linear, 0.2, 3.0, 4).unwrap());
        let basis = Arc::new(build_basis(modes, 2, Statistics::Bose).unwrap());
        let mut spec = TripleSpec::standard(Deformation::Kappa { kappa: 0.0 }, 8, 4).unwrap();
        spec.tensor = TensorBasis::square(basis);
        spec.leakage_grid = grid;
        let r0 = check_cyclicity_rank(&spec, 0, 0.0).unwrap();
        assert_eq!(r0.get("rank_fraction"), Some(1.0 / 225.0));
        let r = check_cyclicity_rank(&spec, 4, 0.5).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn longo_witten_single_zero_and_control() {
        let phi = make_blaschke(&[c(0.0, 1.0)], false).unwrap();
        let bumps = vec![HalfLineProfile::bump(Side::Right, 2.0, 1.0).unwrap()];
        let opts = LongoWittenOptions::default();
        let r = check_longo_witten(&phi, &bumps, &opts).unwrap();
        assert!(r.passed, "{r:?}");
        let bad = check_longo_witten(&phi.reflected(), &bumps, &opts).unwrap();
        assert!(!bad.passed);
        let unit = check_longo_witten(&InnerFunction::one(), &bumps, &opts).unwrap();
        assert_eq!(unit.get("n256.leakage"), unit.get("n256.input_leakage"));
    }
}
