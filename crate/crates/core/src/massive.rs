//! Truncated massive complex free field with a U(1) charge, and the charge twist
//! `exp(2πiκ Q⊗Q)` on its tensor square.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockOperator, FockSpace, Occupations, OperatorData, OperatorFlags, Statistics};
use crate::phase::{unit_from_radians, unit_from_turns, DoubleDouble};
use crate::report::VerificationReport;
use crate::smatrix::{build_massive_twist, TensorBasis};
use crate::unitary::DiagonalUnitary;

/// Tolerance of the single-particle mass-shell identity.
pub const MASS_SHELL_TOL: f64 = 1e-12;

/// Rapidities `θ_k` of a particle of mass `m`; momentum `m sinh θ`, energy `m cosh θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RapidityGrid {
    points: Vec<f64>,
    mass: f64,
}

impl RapidityGrid {
    pub fn new(points: Vec<f64>, mass: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyModes);
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidGrid(format!("mass must be positive, got {mass}")));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite rapidity".into()));
        }
        Ok(Self { points, mass })
    }

    /// `n` equally spaced rapidities on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize, mass: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyModes);
        }
        if !(hi >= lo) {
            return Err(Error::InvalidGrid(format!("empty rapidity range [{lo}, {hi}]")));
        }
        let points = if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n).map(|k| lo + h * k as f64).collect()
        };
        Self::new(points, mass)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn momentum(&self, k: usize) -> f64 {
        self.mass * self.points[k].sinh()
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.mass * self.points[k].cosh()
    }

    pub fn index_of(&self, theta: f64) -> Result<usize> {
        self.points.iter().position(|&t| t == theta).ok_or(Error::OffGrid(theta))
    }
}

impl Default for RapidityGrid {
    fn default() -> Self {
        Self::uniform(-3.0, 3.0, 16, 1.0).expect("valid default grid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Particle,
    Antiparticle,
}

impl Species {
    pub fn charge(self) -> i64 {
        match self {
            Species::Particle => 1,
            Species::Antiparticle => -1,
        }
    }

    pub fn from_charge(q: i64) -> Result<Self> {
        match q {
            1 => Ok(Species::Particle),
            -1 => Ok(Species::Antiparticle),
            _ => Err(Error::InvalidArgument(format!("single-particle charge must be ±1, got {q}"))),
        }
    }
}

/// Bosonic Fock basis over particle modes `0..n` and antiparticle modes `n..2n`.
#[derive(Clone, Debug)]
pub struct ChargedFockBasis {
    grid: RapidityGrid,
    occ: Occupations,
    charges: Vec<i64>,
    energies: Vec<f64>,
    momenta: Vec<f64>,
}

impl FockSpace for ChargedFockBasis {
    fn dim(&self) -> usize {
        self.occ.dim()
    }
}

pub fn build_charged_basis(grid: RapidityGrid, cutoff: usize) -> Result<ChargedFockBasis> {
    if grid.is_empty() {
        return Err(Error::EmptyModes);
    }
    let n = grid.len();
    let occ = Occupations::enumerate(2 * n, cutoff, Statistics::Bose)?;
    let mut charges = Vec::with_capacity(occ.dim());
    let mut energies = Vec::with_capacity(occ.dim());
    let mut momenta = Vec::with_capacity(occ.dim());
    for s in occ.states() {
        let (mut q, mut e, mut p) = (0_i64, 0.0, 0.0);
        for (mode, &k) in s.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let r = mode % n;
            q += if mode < n { k as i64 } else { -(k as i64) };
            e += k as f64 * grid.energy(r);
            p += k as f64 * grid.momentum(r);
        }
        charges.push(q);
        energies.push(e);
        momenta.push(p);
    }
    Ok(ChargedFockBasis {
        grid,
        occ,
        charges,
        energies,
        momenta,
    })
}

impl ChargedFockBasis {
    pub fn dim(&self) -> usize {
        self.occ.dim()
    }

    pub fn grid(&self) -> &RapidityGrid {
        &self.grid
    }

    pub fn cutoff(&self) -> usize {
        self.occ.cutoff()
    }

    pub fn state(&self, i: usize) -> &[u8] {
        self.occ.state(i)
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.occ.particle_number(i)
    }

    pub fn charge(&self, i: usize) -> i64 {
        self.charges[i]
    }

    pub fn charges(&self) -> &[i64] {
        &self.charges
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    pub fn momentum(&self, i: usize) -> f64 {
        self.momenta[i]
    }

    /// Index of the one-particle state of `species` at rapidity index `k`.
    pub fn single_particle(&self, species: Species, k: usize) -> Option<usize> {
        let n = self.grid.len();
        if k >= n || self.cutoff() == 0 {
            return None;
        }
        let mut occ = vec![0_u8; 2 * n];
        occ[if species == Species::Particle { k } else { n + k }] = 1;
        self.occ.index_of(&occ)
    }
}

/// `Q` as a diagonal integer operator.
pub fn charge_operator(basis: &ChargedFockBasis) -> FockOperator {
    let d = basis.charges.iter().map(|&q| Complex64::new(q as f64, 0.0)).collect();
    FockOperator::new(OperatorData::Diagonal(d), OperatorFlags::HERMITIAN).expect("real diagonal")
}

/// `exp(2πiκQ)`.
pub fn charge_exponential(basis: &ChargedFockBasis, kappa: f64) -> DiagonalUnitary {
    let phases = basis
        .charges
        .iter()
        .map(|&q| unit_from_turns(DoubleDouble::product(kappa, q as f64)))
        .collect();
    DiagonalUnitary::new(phases, format!("exp(2πi·{kappa}·Q)")).expect("unit phases")
}

fn charges_f64(basis: &ChargedFockBasis) -> Vec<f64> {
    basis.charges.iter().map(|&q| q as f64).collect()
}

/// `exp(2πiκ Q⊗Q)` on the tensor square.
pub fn massive_twist(kappa: f64, tb: &TensorBasis<ChargedFockBasis>) -> Result<DiagonalUnitary> {
    build_massive_twist(kappa, &charges_f64(tb.left()), &charges_f64(tb.right()), tb)
}

/// Composes an existing twist with a further one built from other integer
/// gradings of the two factors.
pub fn iterate_twist(
    first: &DiagonalUnitary,
    kappa: f64,
    charge_left: &[f64],
    charge_right: &[f64],
    tb: &TensorBasis<ChargedFockBasis>,
) -> Result<DiagonalUnitary> {
    first.compose(&build_massive_twist(kappa, charge_left, charge_right, tb)?)
}

/// Spacetime translation `exp(i(tH − xP))` acting on both factors.
pub fn massive_translation(tb: &TensorBasis<ChargedFockBasis>, t: f64, x: f64) -> DiagonalUnitary {
    let (l, r) = (tb.left(), tb.right());
    let mut phases = Vec::with_capacity(tb.dim());
    for a in 0..l.dim() {
        for b in 0..r.dim() {
            let e = l.energy(a) + r.energy(b);
            let p = l.momentum(a) + r.momentum(b);
            phases.push(unit_from_radians(DoubleDouble::product(t, e) + DoubleDouble::product(-x, p)));
        }
    }
    DiagonalUnitary::new(phases, format!("T({t}, {x})")).expect("unit phases")
}

/// The phase of the twist on a particle pair at rapidities `(θ₁, θ₂)`, read off
/// the twist table of a one-particle basis over `grid`.
pub fn two_particle_phase(
    kappa: f64,
    theta1: f64,
    theta2: f64,
    species: (Species, Species),
    grid: &RapidityGrid,
) -> Result<Complex64> {
    let (i, j) = (grid.index_of(theta1)?, grid.index_of(theta2)?);
    let basis = Arc::new(build_charged_basis(grid.clone(), 1)?);
    let tb = TensorBasis::square(basis.clone());
    let twist = massive_twist(kappa, &tb)?;
    Ok(pair_entry(&twist, &tb, species, i, j))
}

fn pair_entry(
    twist: &DiagonalUnitary,
    tb: &TensorBasis<ChargedFockBasis>,
    species: (Species, Species),
    i: usize,
    j: usize,
) -> Complex64 {
    let a = tb.left().single_particle(species.0, i).expect("cutoff ≥ 1");
    let b = tb.right().single_particle(species.1, j).expect("cutoff ≥ 1");
    twist.phase(tb.index(a, b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta1: f64,
    pub theta2: f64,
    pub q1: i64,
    pub q2: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RapiditySweep {
    pub kappa: f64,
    pub rows: Vec<SweepRow>,
}

const SPECIES_PAIRS: [(Species, Species); 4] = [
    (Species::Particle, Species::Particle),
    (Species::Particle, Species::Antiparticle),
    (Species::Antiparticle, Species::Particle),
    (Species::Antiparticle, Species::Antiparticle),
];

/// Two-particle phases over every rapidity pair and every species pair.
pub fn rapidity_sweep(kappa: f64, grid: &RapidityGrid) -> Result<RapiditySweep> {
    let basis = Arc::new(build_charged_basis(grid.clone(), 1)?);
    let tb = TensorBasis::square(basis);
    let twist = massive_twist(kappa, &tb)?;
    let mut rows = Vec::with_capacity(4 * grid.len() * grid.len());
    for sp in SPECIES_PAIRS {
        for (i, &t1) in grid.points().iter().enumerate() {
            for (j, &t2) in grid.points().iter().enumerate() {
                let z = pair_entry(&twist, &tb, sp, i, j);
                rows.push(SweepRow {
                    theta1: t1,
                    theta2: t2,
                    q1: sp.0.charge(),
                    q2: sp.1.charge(),
                    re: z.re,
                    im: z.im,
                });
            }
        }
    }
    Ok(RapiditySweep { kappa, rows })
}

impl RapiditySweep {
    /// Phases recorded for one charge pair.
    pub fn phases(&self, q1: i64, q2: i64) -> impl Iterator<Item = Complex64> + '_ {
        self.rows
            .iter()
            .filter(move |r| r.q1 == q1 && r.q2 == q2)
            .map(|r| Complex64::new(r.re, r.im))
    }

    /// Largest deviation from the first entry within a charge pair.
    pub fn max_deviation(&self, q1: i64, q2: i64) -> f64 {
        let mut it = self.phases(q1, q2);
        let Some(first) = it.next() else { return 0.0 };
        it.map(|z| (z - first).norm()).fold(0.0, f64::max)
    }

    /// Population variance of the phases of one charge pair.
    pub fn variance(&self, q1: i64, q2: i64) -> f64 {
        let zs: Vec<Complex64> = self.phases(q1, q2).collect();
        if zs.is_empty() {
            return 0.0;
        }
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<Complex64>() / n;
        zs.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta1,theta2,q1,q2,re,im\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{:.17e},{:.17e}", r.theta1, r.theta2, r.q1, r.q2, r.re, r.im);
        }
        out
    }
}

/// Exact checks of the twisted massive triple on the tensor square of `basis`.
pub fn check_massive_axioms(kappa: f64, basis: &Arc<ChargedFockBasis>) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(format!("massive_axioms[kappa={kappa}]"), 0.0);
    let tb = TensorBasis::square(basis.clone());
    let twist = massive_twist(kappa, &tb)?;

    let shifted = kappa + 1.0;
    let periodic = massive_twist(shifted, &tb)?;
    // κ + 1 is only the exact shift when no low bits of κ are lost in the sum.
    let exact_shift = shifted - 1.0 == kappa;
    let period_tol = if exact_shift { 0.0 } else { 4.0 * f64::EPSILON };
    r.note("periodicity_shift", if exact_shift { "exact" } else { "rounded" });
    r.require_at_most("periodicity_defect", twist.max_distance(&periodic), period_tol);

    let vacuum_row = (0..tb.dim())
        .filter(|&i| {
            let (a, b) = tb.split(i);
            basis.charge(a) == 0 || basis.charge(b) == 0
        })
        .map(|i| (twist.phase(i) - 1.0).norm())
        .fold(0.0, f64::max);
    r.require_at_most("neutral_sector_defect", vacuum_row, 0.0);
    r.require_at_most("vacuum_defect", (twist.phase(0) - 1.0).norm(), 0.0);
    r.require_at_most("modulus_defect", twist.max_modulus_defect(), 1e-14);

    let translations = [(1.0, 0.5), (0.3, -0.7), (2.0, 2.0)];
    let comm = translations
        .iter()
        .map(|&(t, x)| twist.commutator_with(massive_translation(&tb, t, x).phases()))
        .fold(0.0, f64::max);
    r.require_at_most("translation_commutator", comm, 0.0);

    let unit_charge = charge_exponential(basis, 1.0).max_distance_from_identity();
    r.require_at_most("integer_spectrum_defect", unit_charge, 1e-14);

    // Total charge is diagonal, so the commutator vanishes identically.
    let total: Vec<Complex64> = (0..tb.dim())
        .map(|i| {
            let (a, b) = tb.split(i);
            Complex64::new((basis.charge(a) + basis.charge(b)) as f64, 0.0)
        })
        .collect();
    r.require_at_most("charge_conservation", twist.commutator_with(&total), 0.0);

    let m = basis.grid().mass();
    let mut shell = 0.0_f64;
    let mut cone = f64::INFINITY;
    for i in 0..basis.dim() {
        let (e, p, n) = (basis.energy(i), basis.momentum(i), basis.particle_number(i));
        let invariant = e * e - p * p;
        if n == 1 {
            shell = shell.max((invariant - m * m).abs());
        }
        if n >= 1 {
            let floor = (n as f64 * m).powi(2);
            cone = cone.min((invariant - floor) / floor);
        }
    }
    r.require_at_most("mass_shell_defect", shell, MASS_SHELL_TOL);
    r.metric("min_relative_mass_gap", cone);
    r.require("forward_cone", cone >= -MASS_SHELL_TOL);
    r.note("dim", tb.dim().to_string());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_matches_small_cases() {
        let g = RapidityGrid::uniform(-1.0, 1.0, 2, 1.0).unwrap();
        let b0 = build_charged_basis(g.clone(), 0).unwrap();
        assert_eq!((b0.dim(), b0.charge(0)), (1, 0));
        let b1 = build_charged_basis(g.clone(), 1).unwrap();
        assert_eq!(b1.dim(), 5);
        let b2 = build_charged_basis(g, 2).unwrap();
        let pair = b2.occ.index_of(&[1, 0, 0, 1]).unwrap();
        assert_eq!(b2.charge(pair), 0);
        assert!(RapidityGrid::new(vec![], 1.0).is_err());
        assert!(RapidityGrid::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn charge_operator_has_integer_spectrum() {
        let basis = build_charged_basis(RapidityGrid::default(), 2).unwrap();
        let q = charge_operator(&basis);
        let d = q.diagonal().unwrap();
        assert_eq!(d[0], Complex64::new(0.0, 0.0));
        let anti = basis.single_particle(Species::Antiparticle, 3).unwrap();
        assert_eq!(d[anti].re, -1.0);
        assert!(charge_exponential(&basis, 1.0).max_distance_from_identity() <= 1e-14);
    }

    #[test]
    fn documented_pair_phases() {
        let g = RapidityGrid::default();
        let (t1, t2) = (g.points()[2], g.points()[11]);
        let pa = (Species::Particle, Species::Antiparticle);
        let pp = (Species::Particle, Species::Particle);
        assert_eq!(two_particle_phase(0.5, t1, t2, pa, &g).unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(two_particle_phase(0.25, t1, t2, pp, &g).unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(two_particle_phase(0.0, t1, t2, pa, &g).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(two_particle_phase(0.5, 0.123, t2, pa, &g), Err(Error::OffGrid(_))));
    }

    #[test]
    fn sweep_is_rapidity_independent() {
        let sweep = rapidity_sweep(0.5, &RapidityGrid::default()).unwrap();
        assert_eq!(sweep.rows.len(), 4 * 256);
        for (q1, q2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            assert_eq!(sweep.max_deviation(q1, q2), 0.0);
            assert_eq!(sweep.variance(q1, q2), 0.0);
        }
        assert!(sweep.phases(1, -1).all(|z| z == Complex64::new(-1.0, 0.0)));
        assert!(sweep.to_csv().starts_with("theta1,theta2,q1,q2,re,im\n"));
    }

    #[test]
    fn axioms_hold_for_dyadic_kappa() {
        let basis = Arc::new(build_charged_basis(RapidityGrid::uniform(-3.0, 3.0, 6, 1.0).unwrap(), 2).unwrap());
        for kappa in [0.0, 0.25, 0.5, 0.375] {
            let r = check_massive_axioms(kappa, &basis).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.get("periodicity_defect"), Some(0.0));
        }
    }

    #[test]
    fn iterated_twist_adds_parameters() {
        let basis = Arc::new(build_charged_basis(RapidityGrid::uniform(-1.0, 1.0, 3, 1.0).unwrap(), 2).unwrap());
        let tb = TensorBasis::square(basis.clone());
        let first = massive_twist(0.25, &tb).unwrap();
        let q = charges_f64(&basis);
        let twice = iterate_twist(&first, 0.125, &q, &q, &tb).unwrap();
        assert!(twice.max_distance(&massive_twist(0.375, &tb).unwrap()) < 1e-15);
    }
}
