//! Inner functions on the upper half-plane in factorized form
//!
//! ```text
//! φ(z) = sign · e^{iaz} · ∏_j (z − z_j)/(z − conj z_j),    Im z_j > 0, a ≥ 0
//! ```
//!
//! On the real axis each Blaschke factor equals `e^{2i arg(p − z_j)}`, so boundary
//! values are evaluated through their phase angle and exponentiated once.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lightray::OnePVector;
use crate::phase::{unit_from_radians, DoubleDouble};
use crate::report::VerificationReport;

/// Minimum distance from a pole at which evaluation is allowed.
pub const POLE_GUARD: f64 = 1e-10;
/// Matching tolerance used when deciding whether a zero set is reflection invariant.
const PAIRING_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InnerFunctionRecord")]
pub struct InnerFunction {
    zeros: Vec<Complex64>,
    singular: f64,
    sign: i8,
    symmetric: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InnerFunctionRecord {
    #[serde(default)]
    zeros: Vec<Complex64>,
    #[serde(default)]
    singular: f64,
    #[serde(default = "one")]
    sign: i8,
    symmetric: Option<bool>,
}

fn one() -> i8 {
    1
}

impl TryFrom<InnerFunctionRecord> for InnerFunction {
    type Error = Error;

    fn try_from(r: InnerFunctionRecord) -> Result<Self> {
        let mut f = InnerFunction::new(r.zeros, r.singular, r.sign)?;
        if let Some(flag) = r.symmetric {
            f.symmetric = flag;
        }
        Ok(f)
    }
}

/// Whether the multiset of zeros is invariant under `z ↦ −conj z`.
fn reflection_invariant(zeros: &[Complex64]) -> bool {
    let mut used = vec![false; zeros.len()];
    for (i, z) in zeros.iter().enumerate() {
        if used[i] {
            continue;
        }
        let target = -z.conj();
        if (target - z).norm() <= PAIRING_TOL {
            used[i] = true;
            continue;
        }
        match (0..zeros.len()).find(|&j| !used[j] && j != i && (zeros[j] - target).norm() <= PAIRING_TOL) {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

impl InnerFunction {
    /// Validated constructor. The symmetric flag is derived from the zero set.
    pub fn new(zeros: Vec<Complex64>, singular: f64, sign: i8) -> Result<Self> {
        if let Some(z) = zeros.iter().find(|z| !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ZeroOutsideUpperHalfPlane(format!("{z}")));
        }
        if !(singular >= 0.0) || !singular.is_finite() {
            return Err(Error::NegativeSingularCoefficient(singular));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
        }
        let symmetric = reflection_invariant(&zeros);
        Ok(Self {
            zeros,
            singular,
            sign,
            symmetric,
        })
    }

    pub fn one() -> Self {
        Self {
            zeros: Vec::new(),
            singular: 0.0,
            sign: 1,
            symmetric: true,
        }
    }

    /// Overrides the symmetric flag without checking it. Used to build deliberately
    /// mislabelled inputs for the verifier.
    pub fn with_symmetric_flag(mut self, flag: bool) -> Self {
        self.symmetric = flag;
        self
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn singular(&self) -> f64 {
        self.singular
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_one(&self) -> bool {
        self.zeros.is_empty() && self.singular == 0.0 && self.sign == 1
    }

    /// Value at a point of the closed upper half-plane (or anywhere away from poles).
    pub fn evaluate(&self, p: Complex64) -> Result<Complex64> {
        for z in &self.zeros {
            if (p - z.conj()).norm() < POLE_GUARD {
                return Err(Error::NearPole(format!("{p}")));
            }
        }
        if p.im == 0.0 {
            return Ok(self.boundary_value(p.re));
        }
        let mut v = Complex64::new(self.sign as f64, 0.0);
        for z in &self.zeros {
            v *= (p - z) / (p - z.conj());
        }
        if self.singular != 0.0 {
            v *= (Complex64::i() * self.singular * p).exp();
        }
        Ok(v)
    }

    /// Phase angle of `φ(x)` at a real point given in double-double precision.
    /// The Blaschke part is bounded and is evaluated in `f64`; the singular part
    /// `a·x` keeps the full precision of `x`.
    pub fn angle_at(&self, x: DoubleDouble) -> DoubleDouble {
        let xv = x.value();
        let mut blaschke = 0.0;
        for z in &self.zeros {
            blaschke += 2.0 * (-z.im).atan2(xv - z.re);
        }
        if self.sign < 0 {
            blaschke += PI;
        }
        x.mul_f64(self.singular).add_f64(blaschke)
    }

    /// Boundary value `φ(t)` for real `t`; unimodular to rounding.
    pub fn boundary_value(&self, t: f64) -> Complex64 {
        unit_from_radians(self.angle_at(DoubleDouble::new(t)))
    }

    /// `φ(p·q)` with the product carried exactly.
    pub fn at_product(&self, p: f64, q: f64) -> DoubleDouble {
        self.angle_at(DoubleDouble::product(p, q))
    }

    /// The reflected symbol `conj φ(t)`, whose zeros sit in the lower half-plane.
    pub fn reflected(&self) -> ReflectedSymbol {
        ReflectedSymbol(self.clone())
    }
}

pub fn make_blaschke(zeros: &[Complex64], symmetrize: bool) -> Result<InnerFunction> {
    let mut all: Vec<Complex64> = zeros.to_vec();
    if symmetrize {
        for z in zeros {
            let partner = -z.conj();
            if (partner - z).norm() > PAIRING_TOL {
                all.push(partner);
            }
        }
    }
    InnerFunction::new(all, 0.0, 1)
}

/// The lightlike translation symbol `e^{iap}`.
///
/// It obeys `φ(−t) = conj φ(t)` on the real axis for every `a ≥ 0` and is bounded on
/// the upper half-plane, so it is flagged symmetric.
pub fn make_singular(a: f64) -> Result<InnerFunction> {
    InnerFunction::new(Vec::new(), a, 1)
}

/// Product `φψ`: zeros concatenated, singular parts added, signs multiplied.
pub fn multiply(phi: &InnerFunction, psi: &InnerFunction) -> InnerFunction {
    let mut zeros = phi.zeros.clone();
    zeros.extend_from_slice(&psi.zeros);
    InnerFunction {
        zeros,
        singular: phi.singular + psi.singular,
        sign: phi.sign * psi.sign,
        symmetric: phi.symmetric && psi.symmetric,
    }
}

/// Random symmetrized Blaschke product with at most `max_zeros` zeros.
pub fn random_symmetric_blaschke<R: Rng + ?Sized>(rng: &mut R, max_zeros: usize) -> InnerFunction {
    let mut zeros = Vec::new();
    while zeros.len() < max_zeros {
        let im = rng.gen_range(0.1..3.0);
        if max_zeros - zeros.len() == 1 || rng.gen_bool(0.25) {
            zeros.push(Complex64::new(0.0, im));
        } else {
            let re = rng.gen_range(0.1..3.0);
            zeros.push(Complex64::new(re, im));
            zeros.push(Complex64::new(-re, im));
        }
        if rng.gen_bool(0.3) {
            break;
        }
    }
    InnerFunction::new(zeros, 0.0, 1).expect("zeros drawn in the upper half-plane")
}

/// A function of the one-particle momentum, applied by functional calculus.
pub trait MomentumMultiplier {
    fn symbol(&self, p: f64) -> Complex64;

    fn apply(&self, f: &OnePVector) -> OnePVector {
        f.multiplied(|p| self.symbol(p))
    }
}

impl MomentumMultiplier for InnerFunction {
    fn symbol(&self, p: f64) -> Complex64 {
        self.boundary_value(p)
    }
}

/// `conj φ(p)`: an anti-Hardy control symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectedSymbol(pub InnerFunction);

impl MomentumMultiplier for ReflectedSymbol {
    fn symbol(&self, p: f64) -> Complex64 {
        self.0.boundary_value(p).conj()
    }
}

/// Side length of the upper half-plane sample lattice.
pub const UHP_LATTICE: usize = 32;

/// Checks unimodularity, the reflection identity (when flagged symmetric) and the
/// upper half-plane bound.
pub fn verify_inner_symmetric(phi: &InnerFunction, test_grid: &[f64], tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new("verify_inner_symmetric", tol);
    let mut modulus = 0.0_f64;
    let mut reflection = 0.0_f64;
    let mut extent = 1.0_f64;
    for &t in test_grid {
        let v = phi.boundary_value(t);
        modulus = modulus.max((v.norm() - 1.0).abs());
        let w = phi.boundary_value(-t);
        reflection = reflection.max((w - v.conj()).norm());
        extent = extent.max(t.abs());
    }
    r.require_at_most("max_modulus_defect", modulus, tol);
    if phi.symmetric {
        r.require_at_most("max_reflection_defect", reflection, tol);
    } else {
        r.metric("max_reflection_defect", reflection);
        r.note("reflection", "not required: function is not flagged symmetric");
    }

    let mut uhp = 0.0_f64;
    for i in 0..UHP_LATTICE {
        let x = -extent + 2.0 * extent * i as f64 / (UHP_LATTICE - 1) as f64;
        for j in 0..UHP_LATTICE {
            let y = extent * (j + 1) as f64 / UHP_LATTICE as f64;
            match phi.evaluate(Complex64::new(x, y)) {
                Ok(v) => uhp = uhp.max(v.norm() - 1.0),
                Err(_) => uhp = f64::INFINITY,
            }
        }
    }
    r.require_at_most("uhp_bound_excess", uhp.max(0.0), tol);

    // Poles sit at the conjugate zeros; positivity of every Im z_j certifies analyticity.
    let min_im = phi.zeros.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    r.require("analyticity_certificate", min_im > 0.0);
    r
}

/// [`verify_inner_symmetric`] over `count` random symmetrized Blaschke products,
/// keeping the worst value of each metric.
pub fn check_random_suite<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    max_zeros: usize,
    test_grid: &[f64],
    tol: f64,
) -> VerificationReport {
    let mut r = VerificationReport::new("inner_random_suite", tol);
    let mut worst = std::collections::BTreeMap::<String, f64>::new();
    let mut passed = 0;
    for _ in 0..count {
        let phi = random_symmetric_blaschke(rng, max_zeros);
        let single = verify_inner_symmetric(&phi, test_grid, tol);
        if single.passed {
            passed += 1;
        }
        for (k, v) in single.metrics {
            if k != "analyticity_certificate" {
                let slot = worst.entry(k).or_insert(0.0);
                *slot = slot.max(v);
            }
        }
    }
    for (k, v) in worst {
        r.require_at_most(&k, v, tol);
    }
    r.metric("functions", count as f64);
    r.require("all_functions_pass", passed == count);
    r
}
