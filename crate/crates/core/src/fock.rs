//! Truncated bosonic and fermionic Fock spaces over a finite set of momentum modes.
//!
//! Mode `k` carries momentum `p_k` and one-particle weight `w_k`. The orthonormal
//! mode operators `b_k` are normalized so that
//!
//! ```text
//! a*(f) = Σ_k √w_k f_k b_k*,      ‖a*(f)Ω‖² = Σ_k w_k |f_k|² = ⟨f, f⟩
//! ```
//!
//! States are occupation tuples ordered by total particle number, so every
//! particle-number sector `n ≤ n₀` is a prefix of the basis and the vacuum is state 0.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightray::{MomentumGrid, OnePVector};
use crate::phase::{unit_from_radians, DoubleDouble};
use crate::sparse::SparseMatrix;
use crate::unitary::DiagonalUnitary;

/// Tolerance for the declared-property checks of [`FockOperator`].
pub const FLAG_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    pub fn name(self) -> &'static str {
        match self {
            Statistics::Bose => "bose",
            Statistics::Fermi => "fermi",
        }
    }
}

const NONE: u32 = u32::MAX;

/// Enumeration of occupation tuples `(n_1, …, n_M)` with `Σ n_k ≤ N`.
#[derive(Clone, Debug)]
pub struct Occupations {
    modes: usize,
    cutoff: usize,
    statistics: Statistics,
    states: Vec<Vec<u8>>,
    numbers: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    /// `raise[i·M + k]`: index of the state with one more quantum in mode `k`.
    raise: Vec<u32>,
    lower: Vec<u32>,
    /// `sector_end[n]`: number of states with at most `n` particles.
    sector_end: Vec<usize>,
}

fn push_compositions(
    modes: usize,
    total: usize,
    max_per_mode: usize,
    prefix: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    let pos = prefix.len();
    if pos == modes {
        if total == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    let remaining_modes = modes - pos - 1;
    let hi = total.min(max_per_mode);
    for n in (0..=hi).rev() {
        if total - n > remaining_modes * max_per_mode {
            break;
        }
        prefix.push(n as u8);
        push_compositions(modes, total - n, max_per_mode, prefix, out);
        prefix.pop();
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Closed-form dimension of the truncated space.
pub fn expected_dimension(modes: usize, cutoff: usize, statistics: Statistics) -> usize {
    match statistics {
        Statistics::Bose => (0..=cutoff).map(|k| binomial(modes + k - 1, k)).sum(),
        Statistics::Fermi => (0..=cutoff.min(modes)).map(|k| binomial(modes, k)).sum(),
    }
}

impl Occupations {
    pub fn enumerate(modes: usize, cutoff: usize, statistics: Statistics) -> Result<Self> {
        if modes == 0 {
            return Err(Error::EmptyModes);
        }
        if cutoff > u8::MAX as usize {
            return Err(Error::InvalidArgument(format!("cutoff {cutoff} too large")));
        }
        let max_per_mode = match statistics {
            Statistics::Bose => cutoff,
            Statistics::Fermi => 1,
        };
        let mut states = Vec::new();
        let mut sector_end = Vec::with_capacity(cutoff + 1);
        let mut numbers = Vec::new();
        for n in 0..=cutoff {
            let before = states.len();
            push_compositions(modes, n, max_per_mode, &mut Vec::with_capacity(modes), &mut states);
            numbers.extend(std::iter::repeat_n(n, states.len() - before));
            sector_end.push(states.len());
        }
        let index: HashMap<Vec<u8>, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let dim = states.len();
        let mut raise = vec![NONE; dim * modes];
        let mut lower = vec![NONE; dim * modes];
        let mut scratch = vec![0u8; modes];
        for (i, s) in states.iter().enumerate() {
            if numbers[i] == cutoff {
                continue;
            }
            for k in 0..modes {
                if s[k] as usize >= max_per_mode {
                    continue;
                }
                scratch.copy_from_slice(s);
                scratch[k] += 1;
                let j = index[&scratch];
                raise[i * modes + k] = j as u32;
                lower[j * modes + k] = i as u32;
            }
        }
        Ok(Self {
            modes,
            cutoff,
            statistics,
            states,
            numbers,
            index,
            raise,
            lower,
            sector_end,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.numbers[i]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Number of states with at most `n` particles.
    pub fn sector_end(&self, n: usize) -> usize {
        self.sector_end[n.min(self.cutoff)]
    }

    pub fn raise(&self, i: usize, k: usize) -> Option<usize> {
        match self.raise[i * self.modes + k] {
            NONE => None,
            j => Some(j as usize),
        }
    }

    pub fn lower(&self, i: usize, k: usize) -> Option<usize> {
        match self.lower[i * self.modes + k] {
            NONE => None,
            j => Some(j as usize),
        }
    }

    /// Matrix element `⟨raise(i,k)| b_k* |i⟩`, including the fermionic sign.
    pub fn raise_factor(&self, i: usize, k: usize) -> f64 {
        let s = &self.states[i];
        match self.statistics {
            Statistics::Bose => ((s[k] as f64) + 1.0).sqrt(),
            Statistics::Fermi => {
                let before: u32 = s[..k].iter().map(|&n| n as u32).sum();
                if before.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Anything that carries an enumerated basis.
pub trait FockSpace {
    fn dim(&self) -> usize;
}

/// Truncated Fock basis over a set of momentum modes.
#[derive(Clone, Debug)]
pub struct FockBasis {
    momenta: Vec<f64>,
    weights: Vec<f64>,
    grid: Option<Arc<MomentumGrid>>,
    occ: Occupations,
    energies: Vec<DoubleDouble>,
}

impl FockSpace for FockBasis {
    fn dim(&self) -> usize {
        self.occ.dim()
    }
}

/// Basis over the points of `modes`, which also fixes the one-particle weights.
pub fn build_basis(modes: Arc<MomentumGrid>, cutoff: usize, statistics: Statistics) -> Result<FockBasis> {
    let mut b = FockBasis::from_modes(modes.points().to_vec(), modes.weights().to_vec(), cutoff, statistics)?;
    b.grid = Some(modes);
    Ok(b)
}

impl FockBasis {
    pub fn from_modes(momenta: Vec<f64>, weights: Vec<f64>, cutoff: usize, statistics: Statistics) -> Result<Self> {
        if momenta.is_empty() {
            return Err(Error::EmptyModes);
        }
        if weights.len() != momenta.len() {
            return Err(Error::DimensionMismatch {
                expected: momenta.len(),
                got: weights.len(),
            });
        }
        if momenta.iter().chain(&weights).any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidGrid("mode momenta and weights must be positive".into()));
        }
        let occ = Occupations::enumerate(momenta.len(), cutoff, statistics)?;
        let energies = occ
            .states()
            .iter()
            .map(|s| {
                s.iter()
                    .zip(&momenta)
                    .fold(DoubleDouble::ZERO, |acc, (&n, &p)| acc + DoubleDouble::product(n as f64, p))
            })
            .collect();
        Ok(Self {
            momenta,
            weights,
            grid: None,
            occ,
            energies,
        })
    }

    pub fn dim(&self) -> usize {
        self.occ.dim()
    }

    pub fn modes(&self) -> usize {
        self.momenta.len()
    }

    pub fn cutoff(&self) -> usize {
        self.occ.cutoff()
    }

    pub fn statistics(&self) -> Statistics {
        self.occ.statistics()
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid(&self) -> Option<&Arc<MomentumGrid>> {
        self.grid.as_ref()
    }

    pub fn occupations(&self) -> &Occupations {
        &self.occ
    }

    pub fn state(&self, i: usize) -> &[u8] {
        self.occ.state(i)
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.occ.particle_number(i)
    }

    /// Eigenvalue `Σ n_k p_k` of `P₀` on state `i`.
    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i].value()
    }

    pub fn energy_dd(&self, i: usize) -> DoubleDouble {
        self.energies[i]
    }

    /// Momenta of the occupied modes of state `i`, repeated by multiplicity.
    pub fn state_momenta(&self, i: usize) -> Vec<f64> {
        self.occ
            .state(i)
            .iter()
            .zip(&self.momenta)
            .flat_map(|(&n, &p)| std::iter::repeat_n(p, n as usize))
            .collect()
    }

    /// Number of basis states with at most `n` particles; these form a prefix.
    pub fn sector_end(&self, n: usize) -> usize {
        self.occ.sector_end(n)
    }

    /// Orthonormal-mode amplitudes `√w_k f_k` of a one-particle vector. The vector may
    /// live on the mode grid itself or on a finer grid containing every mode point.
    pub fn mode_amplitudes(&self, f: &OnePVector) -> Result<Vec<Complex64>> {
        let coeffs: Vec<Complex64> = match &self.grid {
            Some(g) if Arc::ptr_eq(g, f.grid()) || g.points() == f.grid().points() => f.coeffs().to_vec(),
            Some(g) => f.restrict_to(g)?.coeffs().to_vec(),
            None => {
                return Err(Error::ModeMismatch(
                    "basis was built from raw modes; pass mode amplitudes directly".into(),
                ))
            }
        };
        Ok(coeffs.iter().zip(&self.weights).map(|(c, w)| c * w.sqrt()).collect())
    }

    fn check_amplitudes(&self, alpha: &[Complex64]) -> Result<()> {
        if alpha.len() != self.modes() {
            return Err(Error::ModeMismatch(format!(
                "{} amplitudes for {} modes",
                alpha.len(),
                self.modes()
            )));
        }
        Ok(())
    }

    /// `a*(α) = Σ α_k b_k*` as a sparse matrix (overflow beyond the cutoff is dropped).
    pub fn creation_matrix(&self, alpha: &[Complex64]) -> Result<SparseMatrix> {
        self.check_amplitudes(alpha)?;
        let m = self.modes();
        let mut t = Vec::with_capacity(self.dim() * m);
        for i in 0..self.dim() {
            for (k, a) in alpha.iter().enumerate() {
                if *a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if let Some(j) = self.occ.raise(i, k) {
                    t.push((j, i, a * self.occ.raise_factor(i, k)));
                }
            }
        }
        Ok(SparseMatrix::from_triplets(self.dim(), self.dim(), t))
    }

    /// `Φ(α) = a(α) + a*(α)`.
    pub fn field_matrix(&self, alpha: &[Complex64]) -> Result<SparseMatrix> {
        let c = self.creation_matrix(alpha)?;
        c.add(&c.adjoint())
    }

    pub fn apply_creation(&self, alpha: &[Complex64], v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_amplitudes(alpha)?;
        self.check_len(v.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (i, x) in v.iter().enumerate() {
            if *x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (k, a) in alpha.iter().enumerate() {
                if let Some(j) = self.occ.raise(i, k) {
                    out[j] += a * x * self.occ.raise_factor(i, k);
                }
            }
        }
        Ok(out)
    }

    /// `a(α) = Σ conj(α_k) b_k`.
    pub fn apply_annihilation(&self, alpha: &[Complex64], v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_amplitudes(alpha)?;
        self.check_len(v.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (j, x) in v.iter().enumerate() {
            if *x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (k, a) in alpha.iter().enumerate() {
                if let Some(i) = self.occ.lower(j, k) {
                    out[i] += a.conj() * x * self.occ.raise_factor(i, k);
                }
            }
        }
        Ok(out)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }

    fn require_bose(&self) -> Result<()> {
        if self.statistics() != Statistics::Bose {
            return Err(Error::WrongStatistics { expected: "bose" });
        }
        Ok(())
    }
}

/// A vector of a truncated Fock space.
#[derive(Clone, Debug)]
pub struct FockVector {
    basis: Arc<FockBasis>,
    amps: Vec<Complex64>,
}

impl FockVector {
    pub fn new(basis: Arc<FockBasis>, amps: Vec<Complex64>) -> Result<Self> {
        basis.check_len(amps.len())?;
        Ok(Self { basis, amps })
    }

    pub fn vacuum(basis: Arc<FockBasis>) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { basis, amps }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if !Arc::ptr_eq(&self.basis, &other.basis) {
            self.basis.check_len(other.amps.len())?;
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

pub fn creation_apply(f: &OnePVector, v: &FockVector) -> Result<FockVector> {
    let alpha = v.basis.mode_amplitudes(f)?;
    let amps = v.basis.apply_creation(&alpha, &v.amps)?;
    Ok(FockVector {
        basis: v.basis.clone(),
        amps,
    })
}

pub fn annihilation_apply(f: &OnePVector, v: &FockVector) -> Result<FockVector> {
    let alpha = v.basis.mode_amplitudes(f)?;
    let amps = v.basis.apply_annihilation(&alpha, &v.amps)?;
    Ok(FockVector {
        basis: v.basis.clone(),
        amps,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorFlags {
    pub hermitian: bool,
    pub unitary: bool,
}

impl OperatorFlags {
    pub const NONE: Self = Self {
        hermitian: false,
        unitary: false,
    };
    pub const HERMITIAN: Self = Self {
        hermitian: true,
        unitary: false,
    };
    pub const UNITARY: Self = Self {
        hermitian: false,
        unitary: true,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorData {
    Dense(DMatrix<Complex64>),
    Diagonal(Vec<Complex64>),
    Sparse(SparseMatrix),
}

/// An operator on a truncated Fock space whose declared properties are checked
/// when it is constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    data: OperatorData,
    flags: OperatorFlags,
}

impl FockOperator {
    pub fn new(data: OperatorData, flags: OperatorFlags) -> Result<Self> {
        let op = Self { data, flags };
        if flags.hermitian && op.hermiticity_defect() > FLAG_TOL {
            return Err(Error::FlagViolation("hermitian"));
        }
        if flags.unitary && op.unitarity_defect() > FLAG_TOL {
            return Err(Error::FlagViolation("unitary"));
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: OperatorData::Diagonal(vec![Complex64::new(1.0, 0.0); dim]),
            flags: OperatorFlags {
                hermitian: true,
                unitary: true,
            },
        }
    }

    pub fn data(&self) -> &OperatorData {
        &self.data
    }

    pub fn flags(&self) -> OperatorFlags {
        self.flags
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            OperatorData::Dense(m) => m.nrows(),
            OperatorData::Diagonal(d) => d.len(),
            OperatorData::Sparse(s) => s.rows(),
        }
    }

    pub fn diagonal(&self) -> Option<&[Complex64]> {
        match &self.data {
            OperatorData::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.data, OperatorData::Diagonal(_))
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(match &self.data {
            OperatorData::Dense(m) => {
                let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
                for (c, x) in v.iter().enumerate() {
                    if *x == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (r, o) in out.iter_mut().enumerate() {
                        *o += m[(r, c)] * x;
                    }
                }
                out
            }
            OperatorData::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
            OperatorData::Sparse(s) => s.mul_vec(v)?,
        })
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.data {
            OperatorData::Dense(m) => m.clone(),
            OperatorData::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            OperatorData::Sparse(s) => s.to_dense(),
        }
    }

    fn hermiticity_defect(&self) -> f64 {
        match &self.data {
            OperatorData::Dense(m) => (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max),
            OperatorData::Diagonal(d) => d.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
            OperatorData::Sparse(s) => s.hermiticity_defect(),
        }
    }

    fn unitarity_defect(&self) -> f64 {
        match &self.data {
            OperatorData::Diagonal(d) => d.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max),
            _ => {
                let m = self.to_dense();
                let g = m.adjoint() * &m;
                let n = g.nrows();
                (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let target = if i == j { 1.0 } else { 0.0 };
                        (g[(i, j)] - target).norm()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Dense matrix as `{rows, cols, data: [[re, im], ...]}` in row-major order.
    pub fn to_json(&self) -> serde_json::Value {
        let m = self.to_dense();
        let data: Vec<[f64; 2]> = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
            .collect();
        serde_json::json!({
            "rows": m.nrows(),
            "cols": m.ncols(),
            "hermitian": self.flags.hermitian,
            "unitary": self.flags.unitary,
            "data": data,
        })
    }
}

/// The truncated field `Φ(f) = a(f) + a*(f)` (Hermitian, sparse).
pub fn field(f: &OnePVector, basis: &FockBasis) -> Result<FockOperator> {
    let alpha = basis.mode_amplitudes(f)?;
    FockOperator::new(OperatorData::Sparse(basis.field_matrix(&alpha)?), OperatorFlags::HERMITIAN)
}

/// `exp(iΦ(α))` as a dense matrix, from the eigendecomposition of the Hermitian field.
pub fn weyl_from_amplitudes(alpha: &[Complex64], basis: &FockBasis) -> Result<FockOperator> {
    basis.require_bose()?;
    let phi = basis.field_matrix(alpha)?.to_dense();
    let eig = phi.symmetric_eigen();
    let v = eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let (s, c) = lambda.sin_cos();
        let z = Complex64::new(c, s);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= z);
    }
    let w = scaled * v.adjoint();
    FockOperator::new(OperatorData::Dense(w), OperatorFlags::UNITARY)
}

/// The Weyl operator `W(f) = exp(iΦ(f))` on a bosonic truncation.
pub fn weyl(f: &OnePVector, basis: &FockBasis) -> Result<FockOperator> {
    basis.require_bose()?;
    weyl_from_amplitudes(&basis.mode_amplitudes(f)?, basis)
}

/// Matrix-free action of `exp(iΦ(α))`, by a scaled Taylor series of the sparse field.
#[derive(Clone, Debug)]
pub struct WeylPropagator {
    field: SparseMatrix,
    steps: usize,
}

const TAYLOR_TOL: f64 = 1e-17;
const TAYLOR_MAX_TERMS: usize = 80;

impl WeylPropagator {
    pub fn new(basis: &FockBasis, alpha: &[Complex64]) -> Result<Self> {
        basis.require_bose()?;
        let field = basis.field_matrix(alpha)?;
        let bound = field.max_abs_row_sum();
        let steps = (bound / 2.0).ceil().max(1.0) as usize;
        Ok(Self { field, steps })
    }

    pub fn dim(&self) -> usize {
        self.field.rows()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let h = 1.0 / self.steps as f64;
        let mut x = v.to_vec();
        let mut term = vec![Complex64::new(0.0, 0.0); x.len()];
        let mut next = term.clone();
        for _ in 0..self.steps {
            term.copy_from_slice(&x);
            let scale = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            for n in 1..=TAYLOR_MAX_TERMS {
                self.field.mul_vec_into(&term, &mut next);
                let c = Complex64::new(0.0, h / n as f64);
                let mut size = 0.0;
                for (t, y) in term.iter_mut().zip(&next) {
                    *t = c * y;
                    size += t.norm_sqr();
                }
                for (a, t) in x.iter_mut().zip(&term) {
                    *a += t;
                }
                if size.sqrt() <= TAYLOR_TOL * scale {
                    break;
                }
            }
        }
        x
    }
}

/// `W(f)v` without forming the matrix.
pub fn weyl_apply(f: &OnePVector, v: &FockVector) -> Result<FockVector> {
    let alpha = v.basis.mode_amplitudes(f)?;
    let amps = WeylPropagator::new(&v.basis, &alpha)?.apply(&v.amps);
    Ok(FockVector {
        basis: v.basis.clone(),
        amps,
    })
}

/// `Γ(V₁)`: phase `∏_k v_k^{n_k}` on each occupation state.
pub fn second_quantize(v1: &DiagonalUnitary, basis: &FockBasis) -> Result<DiagonalUnitary> {
    if v1.dim() != basis.modes() {
        return Err(Error::ModeMismatch(format!(
            "one-particle table has {} entries for {} modes",
            v1.dim(),
            basis.modes()
        )));
    }
    let phases = basis
        .occupations()
        .states()
        .iter()
        .map(|s| {
            s.iter()
                .zip(v1.phases())
                .filter(|(n, _)| **n > 0)
                .fold(Complex64::new(1.0, 0.0), |acc, (&n, v)| acc * v.powu(n as u32))
        })
        .collect();
    DiagonalUnitary::new(phases, format!("Gamma({})", v1.label()))
}

/// `Γ(m(P₁))` for a real phase function given through its angle.
pub fn second_quantize_angle(basis: &FockBasis, label: &str, angle: impl Fn(f64) -> DoubleDouble) -> DiagonalUnitary {
    let per_mode: Vec<DoubleDouble> = basis.momenta().iter().map(|&p| angle(p)).collect();
    let phases = basis
        .occupations()
        .states()
        .iter()
        .map(|s| {
            let total = s
                .iter()
                .zip(&per_mode)
                .filter(|(n, _)| **n > 0)
                .fold(DoubleDouble::ZERO, |acc, (&n, a)| acc + a.mul_f64(n as f64));
            unit_from_radians(total)
        })
        .collect();
    DiagonalUnitary::new(phases, label).expect("exponentials of real angles are unimodular")
}

/// `T₀(t) = e^{itP₀}` on the truncated space.
pub fn translation(basis: &FockBasis, t: f64) -> DiagonalUnitary {
    let phases = (0..basis.dim())
        .map(|i| unit_from_radians(basis.energy_dd(i).mul_f64(t)))
        .collect();
    DiagonalUnitary::new(phases, format!("T0({t})")).expect("exponentials of real angles are unimodular")
}

pub fn momentum_operator(basis: &FockBasis) -> FockOperator {
    let d = (0..basis.dim()).map(|i| Complex64::new(basis.energy(i), 0.0)).collect();
    FockOperator {
        data: OperatorData::Diagonal(d),
        flags: OperatorFlags::HERMITIAN,
    }
}

pub fn number_operator(basis: &FockBasis) -> FockOperator {
    let d = (0..basis.dim())
        .map(|i| Complex64::new(basis.particle_number(i) as f64, 0.0))
        .collect();
    FockOperator {
        data: OperatorData::Diagonal(d),
        flags: OperatorFlags::HERMITIAN,
    }
}

/// Basis description `{statistics, cutoff, momenta, weights, states}`.
pub fn basis_json(basis: &FockBasis) -> serde_json::Value {
    serde_json::json!({
        "statistics": basis.statistics(),
        "cutoff": basis.cutoff(),
        "momenta": basis.momenta(),
        "weights": basis.weights(),
        "states": basis.occupations().states(),
    })
}

/// `state_id,re,im` rows of a single-factor phase table.
pub fn diagonal_csv(d: &DiagonalUnitary) -> String {
    let mut out = String::from("state_id,re,im\n");
    for (i, z) in d.phases().iter().enumerate() {
        let _ = writeln!(out, "{i},{:e},{:e}", z.re, z.im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lightray::{build_grid, inner_product, Spacing};

    fn grid(m: usize) -> Arc<MomentumGrid> {
        Arc::new(build_grid(Spacing::Logarithmic, 0.1, 10.0, m).unwrap())
    }

    fn vector(g: &Arc<MomentumGrid>, seed: f64) -> OnePVector {
        let coeffs = (0..g.len())
            .map(|k| Complex64::new((seed * (k as f64 + 1.0)).sin(), (seed * 0.7 * k as f64).cos()) * 0.3)
            .collect();
        OnePVector::new(g.clone(), coeffs).unwrap()
    }

    /// Brute-force count of tuples in `{0..=max}^M` with sum ≤ N.
    fn brute_count(m: usize, n: usize, max: usize) -> usize {
        let mut count = 0;
        let mut t = vec![0usize; m];
        loop {
            if t.iter().sum::<usize>() <= n {
                count += 1;
            }
            let mut k = 0;
            loop {
                if k == m {
                    return count;
                }
                t[k] += 1;
                if t[k] <= max {
                    break;
                }
                t[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn dimensions_match_enumeration() {
        let b = build_basis(grid(8), 4, Statistics::Bose).unwrap();
        assert_eq!(b.dim(), 495);
        assert_eq!(b.dim(), brute_count(8, 4, 4));
        let f = FockBasis::from_modes(vec![1.0, 2.0, 3.0], vec![1.0; 3], 1, Statistics::Fermi).unwrap();
        assert_eq!(f.dim(), 4);
        let states: Vec<&[u8]> = f.occupations().states().iter().map(|s| s.as_slice()).collect();
        assert_eq!(states, vec![&[0, 0, 0][..], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(build_basis(grid(5), 0, Statistics::Bose).unwrap().dim(), 1);
        for (m, n) in [(3, 5), (6, 2), (4, 4)] {
            for st in [Statistics::Bose, Statistics::Fermi] {
                let max = if st == Statistics::Bose { n } else { 1 };
                let b = FockBasis::from_modes(vec![1.0; m].iter().enumerate().map(|(k, _)| k as f64 + 1.0).collect(), vec![1.0; m], n, st).unwrap();
                assert_eq!(b.dim(), brute_count(m, n, max));
                assert_eq!(b.dim(), expected_dimension(m, n, st));
            }
        }
        assert!(matches!(FockBasis::from_modes(vec![], vec![], 2, Statistics::Bose), Err(Error::EmptyModes)));
    }

    #[test]
    fn vacuum_first_and_sectors_are_prefixes() {
        let b = build_basis(grid(4), 3, Statistics::Bose).unwrap();
        assert!(b.state(0).iter().all(|&n| n == 0));
        for i in 0..b.dim() {
            let n = b.particle_number(i);
            assert!(i < b.sector_end(n));
            if n > 0 {
                assert!(i >= b.sector_end(n - 1));
            }
        }
    }

    #[test]
    fn creation_on_vacuum_gives_one_particle_state() {
        let g = grid(6);
        let b = Arc::new(build_basis(g.clone(), 3, Statistics::Bose).unwrap());
        let f = vector(&g, 0.4);
        let v = creation_apply(&f, &FockVector::vacuum(b.clone())).unwrap();
        for k in 0..6 {
            let mut occ = vec![0u8; 6];
            occ[k] = 1;
            let i = b.occupations().index_of(&occ).unwrap();
            let expected = f.coeffs()[k] * g.weights()[k].sqrt();
            assert!((v.amplitudes()[i] - expected).norm() < 1e-15);
        }
        let norm2 = inner_product(&f, &f).unwrap().re;
        assert!((v.norm().powi(2) - norm2).abs() < 1e-14);
    }

    #[test]
    fn adjoint_relation_is_exact() {
        for st in [Statistics::Bose, Statistics::Fermi] {
            let g = grid(5);
            let b = Arc::new(build_basis(g.clone(), 3, st).unwrap());
            let f = vector(&g, 0.9);
            let u: Vec<Complex64> = (0..b.dim()).map(|i| Complex64::new((i as f64).sin(), 0.1 * i as f64)).collect();
            let v: Vec<Complex64> = (0..b.dim()).map(|i| Complex64::new((i as f64 * 0.3).cos(), -0.2)).collect();
            let u = FockVector::new(b.clone(), u).unwrap();
            let v = FockVector::new(b.clone(), v).unwrap();
            let lhs = creation_apply(&f, &u).unwrap().inner(&v).unwrap();
            let rhs = u.inner(&annihilation_apply(&f, &v).unwrap()).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn canonical_commutation_on_low_sectors() {
        let g = grid(4);
        let n = 4;
        let b = Arc::new(build_basis(g.clone(), n, Statistics::Bose).unwrap());
        let f = vector(&g, 0.3);
        let h = vector(&g, 1.7);
        let fg = inner_product(&f, &h).unwrap();
        for i in 0..b.sector_end(n - 2) {
            let mut e = vec![Complex64::new(0.0, 0.0); b.dim()];
            e[i] = Complex64::new(1.0, 0.0);
            let u = FockVector::new(b.clone(), e).unwrap();
            let a = annihilation_apply(&f, &creation_apply(&h, &u).unwrap()).unwrap();
            let c = creation_apply(&h, &annihilation_apply(&f, &u).unwrap()).unwrap();
            for j in 0..b.dim() {
                let expected = if i == j { fg } else { Complex64::new(0.0, 0.0) };
                assert!((a.amplitudes()[j] - c.amplitudes()[j] - expected).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn fermionic_anticommutation_on_full_truncation() {
        let g = grid(4);
        let b = Arc::new(build_basis(g.clone(), 4, Statistics::Fermi).unwrap());
        let f = vector(&g, 0.3);
        let h = vector(&g, 1.1);
        let fg = inner_product(&f, &h).unwrap();
        let af = b.creation_matrix(&b.mode_amplitudes(&f).unwrap()).unwrap().adjoint().to_dense();
        let ah = b.creation_matrix(&b.mode_amplitudes(&h).unwrap()).unwrap().to_dense();
        let anti = &af * &ah + &ah * &af;
        let id = DMatrix::<Complex64>::identity(b.dim(), b.dim()) * fg;
        let err = (anti - id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-14, "{err}");
        // b_k* b_k* = 0
        let e0 = b.creation_matrix(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap().to_dense();
        assert!((&e0 * &e0).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn weyl_basic_identities() {
        let g = grid(4);
        let b = build_basis(g.clone(), 4, Statistics::Bose).unwrap();
        let zero = OnePVector::zero(g.clone());
        let w0 = weyl(&zero, &b).unwrap().to_dense();
        assert!((w0 - DMatrix::identity(b.dim(), b.dim())).iter().all(|z| z.norm() < 1e-14));
        let f = vector(&g, 0.5);
        let w = weyl(&f, &b).unwrap().to_dense();
        let wm = weyl(&f.scaled(Complex64::new(-1.0, 0.0)), &b).unwrap().to_dense();
        let prod = &w * &wm;
        assert!((prod - DMatrix::identity(b.dim(), b.dim())).iter().all(|z| z.norm() <= 1e-12));
        let fermi = build_basis(g.clone(), 2, Statistics::Fermi).unwrap();
        assert!(matches!(weyl(&f, &fermi), Err(Error::WrongStatistics { .. })));
    }

    #[test]
    fn matrix_free_weyl_matches_dense() {
        let g = grid(5);
        let b = Arc::new(build_basis(g.clone(), 3, Statistics::Bose).unwrap());
        let f = vector(&g, 0.8).scaled(Complex64::new(2.0, 0.0));
        let w = weyl(&f, &b).unwrap();
        for i in [0, 3, b.dim() - 1] {
            let mut e = vec![Complex64::new(0.0, 0.0); b.dim()];
            e[i] = Complex64::new(1.0, 0.0);
            let dense = w.apply(&e).unwrap();
            let free = weyl_apply(&f, &FockVector::new(b.clone(), e).unwrap()).unwrap();
            let err = dense.iter().zip(free.amplitudes()).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "column {i}: {err}");
        }
    }

    /// `‖W(f)W(g)Ω − e^{−i Im⟨f,g⟩} W(f+g)Ω‖` on a truncation with cutoff `n`.
    fn weyl_defect(n: usize) -> f64 {
        let g = Arc::new(build_grid(Spacing::Linear, 0.5, 1.5, 3).unwrap());
        let b = Arc::new(build_basis(g.clone(), n, Statistics::Bose).unwrap());
        let norm = |v: &OnePVector| inner_product(v, v).unwrap().re.sqrt();
        let f = vector(&g, 0.5);
        let f = f.scaled(Complex64::new(0.5 / norm(&f), 0.0));
        let h = vector(&g, 2.1);
        let h = h.scaled(Complex64::new(0.0, 0.5 / norm(&h)));
        let im = inner_product(&f, &h).unwrap().im;
        let vac = FockVector::vacuum(b.clone());
        let lhs = weyl_apply(&f, &weyl_apply(&h, &vac).unwrap()).unwrap();
        let rhs = weyl_apply(&f.add(&h).unwrap(), &vac).unwrap();
        let phase = Complex64::new(0.0, -im).exp();
        lhs.amplitudes()
            .iter()
            .zip(rhs.amplitudes())
            .map(|(a, c)| (a - phase * c).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn weyl_relation_defect_shrinks_with_cutoff() {
        let d4 = weyl_defect(4);
        let d6 = weyl_defect(6);
        let d10 = weyl_defect(10);
        assert!(d6 <= 0.1, "N=6 defect {d6}");
        assert!(d10 < d6 && d6 < d4, "{d4} {d6} {d10}");
    }

    #[test]
    fn second_quantization() {
        let g = grid(4);
        let b = build_basis(g.clone(), 3, Statistics::Bose).unwrap();
        let id = second_quantize(&DiagonalUnitary::identity(4), &b).unwrap();
        assert_eq!(id.max_distance_from_identity(), 0.0);
        let t = 0.37;
        let v1 = crate::lightray::translation_phase(&g, t);
        let gamma = second_quantize(&v1, &b).unwrap();
        assert_eq!(gamma.phase(0), Complex64::new(1.0, 0.0));
        // two-particle state in modes 0 and 2
        let i = b.occupations().index_of(&[1, 0, 1, 0]).unwrap();
        let p = g.points();
        let expected = Complex64::new(0.0, t * (p[0] + p[2])).exp();
        assert!((gamma.phase(i) - expected).norm() < 1e-15);
        assert!(gamma.max_distance(&translation(&b, t)) < 1e-14);
        assert!(second_quantize(&DiagonalUnitary::identity(3), &b).is_err());
    }

    #[test]
    fn flags_are_verified() {
        let bad = OperatorData::Dense(DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0),
        ]));
        assert_eq!(FockOperator::new(bad.clone(), OperatorFlags::HERMITIAN), Err(Error::FlagViolation("hermitian")));
        assert_eq!(FockOperator::new(bad, OperatorFlags::UNITARY), Err(Error::FlagViolation("unitary")));
        let b = build_basis(grid(3), 2, Statistics::Bose).unwrap();
        let p = momentum_operator(&b);
        let n = number_operator(&b);
        assert_eq!(p.diagonal().unwrap()[0], Complex64::new(0.0, 0.0));
        assert_eq!(n.diagonal().unwrap()[b.dim() - 1], Complex64::new(2.0, 0.0));
        let j = basis_json(&b);
        assert_eq!(j["states"].as_array().unwrap().len(), b.dim());
        assert!(diagonal_csv(&DiagonalUnitary::identity(2)).starts_with("state_id,re,im\n0,1e0,0e0"));
    }
}
