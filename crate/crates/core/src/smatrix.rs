//! Deformation unitaries on tensor-square Fock bases, stored as phase tables.
//!
//! A tensor state `(a, b)` (left state `a`, right state `b`) has flat index
//! `a · dim_R + b`. Every unitary built here is diagonal in that basis.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockOperator, FockSpace, Statistics};
use crate::innerfunc::InnerFunction;
use crate::phase::{unit_from_radians, unit_from_turns, DoubleDouble};
use crate::unitary::DiagonalUnitary;

#[derive(Clone, Debug)]
pub struct TensorBasis<B> {
    left: Arc<B>,
    right: Arc<B>,
}

impl<B: FockSpace> TensorBasis<B> {
    pub fn new(left: Arc<B>, right: Arc<B>) -> Self {
        Self { left, right }
    }

    /// `B ⊗ B` with the same factor on both sides.
    pub fn square(basis: Arc<B>) -> Self {
        Self {
            left: basis.clone(),
            right: basis,
        }
    }

    pub fn left(&self) -> &Arc<B> {
        &self.left
    }

    pub fn right(&self) -> &Arc<B> {
        &self.right
    }

    pub fn dim(&self) -> usize {
        self.left.dim() * self.right.dim()
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.right.dim() + b
    }

    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.right.dim(), i % self.right.dim())
    }
}

impl<B: FockSpace> FockSpace for TensorBasis<B> {
    fn dim(&self) -> usize {
        TensorBasis::dim(self)
    }
}

/// Pairwise angles `arg φ(p_k q_l)` for every left mode `k` and right mode `l`.
struct PairAngles {
    table: Vec<DoubleDouble>,
    right_modes: usize,
}

impl PairAngles {
    fn new(phi: &InnerFunction, left: &FockBasis, right: &FockBasis) -> Self {
        let table = left
            .momenta()
            .iter()
            .flat_map(|&p| right.momenta().iter().map(move |&q| phi.at_product(p, q)))
            .collect();
        Self {
            table,
            right_modes: right.modes(),
        }
    }

    /// `Σ_{k,l} n_k m_l arg φ(p_k q_l)`: the angle of `∏_{i,j} φ(p_i q_j)`.
    fn angle(&self, left: &[u8], right: &[u8]) -> DoubleDouble {
        let mut acc = DoubleDouble::ZERO;
        for (k, &n) in left.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let row = &self.table[k * self.right_modes..(k + 1) * self.right_modes];
            for (a, &m) in row.iter().zip(right) {
                if m != 0 {
                    acc = acc + a.mul_f64((n as u32 * m as u32) as f64);
                }
            }
        }
        acc
    }
}

/// A diagonal deformation described symbolically; its phases can be produced as a
/// full table or one slice at a time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Deformation {
    Identity,
    /// `exp(iκ P₀⊗P₀)`.
    Kappa { kappa: f64 },
    /// `∏_{i,j} φ(p_i q_j)` on bosonic factors.
    Phi { phi: InnerFunction },
    /// The same product over occupied modes of fermionic factors.
    PhiFermionic { phi: InnerFunction },
}

enum Prepared<'a> {
    Identity,
    Kappa(f64, &'a TensorBasis<FockBasis>),
    Phi(PairAngles, &'a TensorBasis<FockBasis>),
}

impl<'a> Prepared<'a> {
    fn phase(&self, a: usize, b: usize) -> Complex64 {
        match self {
            Prepared::Identity => Complex64::new(1.0, 0.0),
            Prepared::Kappa(kappa, tb) => {
                unit_from_radians((tb.left.energy_dd(a) * tb.right.energy_dd(b)).mul_f64(*kappa))
            }
            Prepared::Phi(angles, tb) => unit_from_radians(angles.angle(tb.left.state(a), tb.right.state(b))),
        }
    }
}

impl Deformation {
    pub fn label(&self) -> String {
        match self {
            Deformation::Identity => "identity".into(),
            Deformation::Kappa { kappa } => format!("S_kappa({kappa})"),
            Deformation::Phi { .. } => "S_phi".into(),
            Deformation::PhiFermionic { .. } => "S_phi_F".into(),
        }
    }

    fn prepare<'a>(&self, tb: &'a TensorBasis<FockBasis>) -> Result<Prepared<'a>> {
        let stats = (tb.left.statistics(), tb.right.statistics());
        match self {
            Deformation::Identity => Ok(Prepared::Identity),
            Deformation::Kappa { kappa } => {
                if !(*kappa >= 0.0) {
                    return Err(Error::NegativeKappa(*kappa));
                }
                Ok(Prepared::Kappa(*kappa, tb))
            }
            Deformation::Phi { phi } => {
                if stats != (Statistics::Bose, Statistics::Bose) {
                    return Err(Error::WrongStatistics { expected: "bose" });
                }
                if !phi.is_symmetric() {
                    return Err(Error::NotSymmetric);
                }
                Ok(Prepared::Phi(PairAngles::new(phi, &tb.left, &tb.right), tb))
            }
            Deformation::PhiFermionic { phi } => {
                if stats != (Statistics::Fermi, Statistics::Fermi) {
                    return Err(Error::WrongStatistics { expected: "fermi" });
                }
                Ok(Prepared::Phi(PairAngles::new(phi, &tb.left, &tb.right), tb))
            }
        }
    }

    /// Closed-form two-particle phase at one-particle momenta `(p, q)`.
    pub fn pair_phase(&self, p: f64, q: f64) -> Complex64 {
        match self {
            Deformation::Identity => Complex64::new(1.0, 0.0),
            Deformation::Kappa { kappa } => unit_from_radians(DoubleDouble::product(p, q).mul_f64(*kappa)),
            Deformation::Phi { phi } | Deformation::PhiFermionic { phi } => unit_from_radians(phi.at_product(p, q)),
        }
    }

    /// The complete phase table over `tb`.
    pub fn build(&self, tb: &TensorBasis<FockBasis>) -> Result<DiagonalUnitary> {
        let p = self.prepare(tb)?;
        let (dl, dr) = (tb.left.dim(), tb.right.dim());
        let mut phases = Vec::with_capacity(dl * dr);
        for a in 0..dl {
            for b in 0..dr {
                phases.push(p.phase(a, b));
            }
        }
        DiagonalUnitary::new(phases, self.label())
    }

    /// Phases `s(·, b)` over the left factor for a fixed right state `b`.
    pub fn left_slice(&self, tb: &TensorBasis<FockBasis>, b: usize) -> Result<Vec<Complex64>> {
        let p = self.prepare(tb)?;
        Ok((0..tb.left.dim()).map(|a| p.phase(a, b)).collect())
    }

    /// Phases `s(a, ·)` over the right factor for a fixed left state `a`.
    pub fn right_slice(&self, tb: &TensorBasis<FockBasis>, a: usize) -> Result<Vec<Complex64>> {
        let p = self.prepare(tb)?;
        Ok((0..tb.right.dim()).map(|b| p.phase(a, b)).collect())
    }
}

/// `S_κ = exp(iκ P₀⊗P₀)`; the exponent `κ E_L E_R` is formed in double-double precision.
pub fn build_s_kappa(kappa: f64, tb: &TensorBasis<FockBasis>) -> Result<DiagonalUnitary> {
    Deformation::Kappa { kappa }.build(tb)
}

/// `S_φ` on a bosonic tensor basis; `φ` must be symmetric.
pub fn build_s_phi(phi: &InnerFunction, tb: &TensorBasis<FockBasis>) -> Result<DiagonalUnitary> {
    Deformation::Phi { phi: phi.clone() }.build(tb)
}

/// `S_{φ,F}` on a fermionic tensor basis; any inner function is accepted.
pub fn build_s_phi_fermionic(phi: &InnerFunction, tb: &TensorBasis<FockBasis>) -> Result<DiagonalUnitary> {
    Deformation::PhiFermionic { phi: phi.clone() }.build(tb)
}

fn integer_charges(q: &[f64]) -> Result<()> {
    match q.iter().position(|x| !x.is_finite() || x.fract() != 0.0) {
        Some(index) => Err(Error::NonIntegerCharge { index, value: q[index] }),
        None => Ok(()),
    }
}

/// `exp(2πiκ Q⊗Q)` from integer charge gradings of the two factors.
pub fn build_massive_twist<B: FockSpace>(
    kappa: f64,
    charge_left: &[f64],
    charge_right: &[f64],
    tb: &TensorBasis<B>,
) -> Result<DiagonalUnitary> {
    integer_charges(charge_left)?;
    integer_charges(charge_right)?;
    if charge_left.len() != tb.left().dim() {
        return Err(Error::DimensionMismatch {
            expected: tb.left().dim(),
            got: charge_left.len(),
        });
    }
    if charge_right.len() != tb.right().dim() {
        return Err(Error::DimensionMismatch {
            expected: tb.right().dim(),
            got: charge_right.len(),
        });
    }
    if !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa = {kappa}")));
    }
    let mut phases = Vec::with_capacity(tb.dim());
    for &ql in charge_left {
        for &qr in charge_right {
            phases.push(unit_from_turns(DoubleDouble::product(kappa, ql * qr)));
        }
    }
    DiagonalUnitary::new(phases, format!("charge_twist({kappa})"))
}

/// Lightray translation `T(a) = T₀(t₋) ⊗ T₀(t₊)`: `t₋` acts on the left factor,
/// whose generators live on ℝ₋, and `t₊` on the right factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightrayShift {
    pub plus: f64,
    pub minus: f64,
}

impl LightrayShift {
    pub fn new(plus: f64, minus: f64) -> Self {
        Self { plus, minus }
    }

    /// Whether `a` lies in the closed right wedge `t₊ ≥ 0 ≥ t₋`.
    pub fn in_right_wedge(&self) -> bool {
        self.plus >= 0.0 && self.minus <= 0.0
    }
}

pub fn tensor_translation(tb: &TensorBasis<FockBasis>, a: LightrayShift) -> DiagonalUnitary {
    let mut phases = Vec::with_capacity(tb.dim());
    for i in 0..tb.left.dim() {
        let el = tb.left.energy_dd(i).mul_f64(a.minus);
        for j in 0..tb.right.dim() {
            phases.push(unit_from_radians(el + tb.right.energy_dd(j).mul_f64(a.plus)));
        }
    }
    DiagonalUnitary::new(phases, format!("T({}, {})", a.plus, a.minus)).expect("unit phases")
}

/// Operators on the tensor space assembled from single-factor pieces.
#[derive(Clone, Debug)]
pub enum TensorOperator {
    /// `x ⊗ y`, with `None` standing for the identity.
    Product {
        left: Option<FockOperator>,
        right: Option<FockOperator>,
        dims: (usize, usize),
    },
    /// `S (1⊗y) S*`.
    TwistedRight {
        s: Arc<DiagonalUnitary>,
        op: FockOperator,
        dims: (usize, usize),
    },
    /// `S (x⊗1) S*`.
    TwistedLeft {
        s: Arc<DiagonalUnitary>,
        op: FockOperator,
        dims: (usize, usize),
    },
}

fn check_twist(s: &DiagonalUnitary, op: &FockOperator, other: usize) -> Result<()> {
    if s.dim() != op.dim() * other {
        return Err(Error::DimensionMismatch {
            expected: op.dim() * other,
            got: s.dim(),
        });
    }
    Ok(())
}

/// `S (1⊗y) S*` on a tensor space whose left factor has dimension `dim_left`.
pub fn twist_right(s: Arc<DiagonalUnitary>, y: FockOperator, dim_left: usize) -> Result<TensorOperator> {
    check_twist(&s, &y, dim_left)?;
    let dims = (dim_left, y.dim());
    Ok(TensorOperator::TwistedRight { s, op: y, dims })
}

/// `S (x⊗1) S*` on a tensor space whose right factor has dimension `dim_right`.
pub fn twist_left(s: Arc<DiagonalUnitary>, x: FockOperator, dim_right: usize) -> Result<TensorOperator> {
    check_twist(&s, &x, dim_right)?;
    let dims = (x.dim(), dim_right);
    Ok(TensorOperator::TwistedLeft { s, op: x, dims })
}

impl TensorOperator {
    pub fn left_factor(x: FockOperator, dim_right: usize) -> Self {
        let dims = (x.dim(), dim_right);
        TensorOperator::Product {
            left: Some(x),
            right: None,
            dims,
        }
    }

    pub fn right_factor(dim_left: usize, y: FockOperator) -> Self {
        let dims = (dim_left, y.dim());
        TensorOperator::Product {
            left: None,
            right: Some(y),
            dims,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            TensorOperator::Product { dims, .. }
            | TensorOperator::TwistedRight { dims, .. }
            | TensorOperator::TwistedLeft { dims, .. } => *dims,
        }
    }

    pub fn dim(&self) -> usize {
        let (l, r) = self.dims();
        l * r
    }

    /// Applies the operator to a vector in flat tensor indexing.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let (dl, dr) = self.dims();
        let mut out = v.to_vec();
        match self {
            TensorOperator::Product { left, right, .. } => {
                if let Some(y) = right {
                    for a in 0..dl {
                        let block = y.apply(&out[a * dr..(a + 1) * dr])?;
                        out[a * dr..(a + 1) * dr].copy_from_slice(&block);
                    }
                }
                if let Some(x) = left {
                    apply_left(x, &mut out, dl, dr)?;
                }
            }
            TensorOperator::TwistedRight { s, op, .. } => {
                let ph = s.phases();
                for a in 0..dl {
                    let span = a * dr..(a + 1) * dr;
                    let slice = &ph[span.clone()];
                    let rotated: Vec<Complex64> = out[span.clone()].iter().zip(slice).map(|(x, z)| x * z.conj()).collect();
                    let mapped = op.apply(&rotated)?;
                    for ((o, m), z) in out[span].iter_mut().zip(mapped).zip(slice) {
                        *o = m * z;
                    }
                }
            }
            TensorOperator::TwistedLeft { s, op, .. } => {
                let ph = s.phases();
                for (o, z) in out.iter_mut().zip(ph) {
                    *o *= z.conj();
                }
                apply_left(op, &mut out, dl, dr)?;
                for (o, z) in out.iter_mut().zip(ph) {
                    *o *= z;
                }
            }
        }
        Ok(out)
    }

    /// The right-factor block `D_a y D_a*` of a right twist at left state `a`
    /// (or the left block `D_b x D_b*` of a left twist at right state `a`).
    pub fn block(&self, index: usize) -> Option<DMatrix<Complex64>> {
        let (dl, dr) = self.dims();
        let (op, slice): (&FockOperator, Vec<Complex64>) = match self {
            TensorOperator::TwistedRight { s, op, .. } => (op, s.phases()[index * dr..(index + 1) * dr].to_vec()),
            TensorOperator::TwistedLeft { s, op, .. } => (op, (0..dl).map(|a| s.phase(a * dr + index)).collect()),
            TensorOperator::Product { .. } => return None,
        };
        let mut m = op.to_dense();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                m[(r, c)] *= slice[r] * slice[c].conj();
            }
        }
        Some(m)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            e[c] = Complex64::new(1.0, 0.0);
            let col = self.apply(&e)?;
            e[c] = Complex64::new(0.0, 0.0);
            for (r, z) in col.into_iter().enumerate() {
                m[(r, c)] = z;
            }
        }
        Ok(m)
    }
}

fn apply_left(x: &FockOperator, v: &mut [Complex64], dl: usize, dr: usize) -> Result<()> {
    let mut column = vec![Complex64::new(0.0, 0.0); dl];
    for b in 0..dr {
        for a in 0..dl {
            column[a] = v[a * dr + b];
        }
        let mapped = x.apply(&column)?;
        for a in 0..dl {
            v[a * dr + b] = mapped[a];
        }
    }
    Ok(())
}

/// `left_state_id,right_state_id,re,im` rows.
pub fn phase_table_csv<B: FockSpace>(s: &DiagonalUnitary, tb: &TensorBasis<B>) -> String {
    let mut out = String::from("left_state_id,right_state_id,re,im\n");
    for (i, z) in s.phases().iter().enumerate() {
        let (a, b) = tb.split(i);
        let _ = writeln!(out, "{a},{b},{:e},{:e}", z.re, z.im);
    }
    out
}
