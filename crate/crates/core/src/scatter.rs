//! Massless two-particle scattering at truncation: smeared lightlike translates,
//! asymptotic fields and phase extraction from in/out wave products.

use std::fmt::Write as _;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_basis, field, FockBasis, FockOperator, OperatorData, OperatorFlags, Statistics};
use crate::lightray::{build_grid, smooth_bump, MomentumGrid, OnePVector, Spacing};
use crate::phase::{unit_from_radians, DoubleDouble};
use crate::report::VerificationReport;
use crate::smatrix::{twist_left, twist_right, Deformation, TensorBasis, TensorOperator};
use crate::unitary::DiagonalUnitary;

pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_SERIES: [f64; 4] = [10.0, 20.0, 40.0, 80.0];
/// Successive differences must shrink at least this much.
pub const MIN_SHRINK: f64 = 1.5;
/// Differences below this count as zero.
pub const DIFFERENCE_FLOOR: f64 = 1e-14;

const GL_NODES: usize = 32;
const BASE_PANELS: usize = 8;

fn gl_rule() -> Vec<(f64, f64)> {
    GaussLegendre::new(GL_NODES)
        .expect("32 nodes is a valid degree")
        .into_node_weight_pairs()
}

/// `∫_{-1}^{1} b(u) e^{isu} du` for the smooth bump `b` with composite
/// Gauss-Legendre panels (more panels as `|s|` grows).
fn bump_transform(rule: &[(f64, f64)], s: f64, panels: usize) -> Complex64 {
    let panels = panels + (s.abs() / std::f64::consts::PI).ceil() as usize;
    let h = 2.0 / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..panels {
        let mid = -1.0 + h * (j as f64 + 0.5);
        for &(x, w) in rule {
            let u = mid + 0.5 * h * x;
            acc += Complex64::from_polar(0.5 * h * w * smooth_bump(u), s * u);
        }
    }
    acc
}

/// `h_𝒯(t) = |𝒯|^{-ε} h(|𝒯|^{-ε}(t − 𝒯))` with `h` the normalized smooth bump on
/// `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct SmearingKernel {
    time: f64,
    epsilon: f64,
    rule: Arc<Vec<(f64, f64)>>,
    norm: f64,
}

impl SmearingKernel {
    pub fn new(time: f64, epsilon: f64) -> Result<Self> {
        if !(time.is_finite() && time != 0.0) {
            return Err(Error::InvalidSeries(format!("time must be finite and nonzero, got {time}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidSeries(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let rule = gl_rule();
        let norm = bump_transform(&rule, 0.0, BASE_PANELS).re;
        Ok(Self {
            time,
            epsilon,
            rule: Arc::new(rule),
            norm,
        })
    }

    pub fn with_time(&self, time: f64) -> Result<Self> {
        if !(time.is_finite() && time != 0.0) {
            return Err(Error::InvalidSeries(format!("time must be finite and nonzero, got {time}")));
        }
        Ok(Self { time, ..self.clone() })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Half-width `|𝒯|^ε` of the support around `𝒯`.
    pub fn spread(&self) -> f64 {
        self.time.abs().powf(self.epsilon)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.time - self.spread(), self.time + self.spread())
    }

    pub fn profile(&self, t: f64) -> f64 {
        let r = self.spread();
        smooth_bump((t - self.time) / r) / (r * self.norm)
    }

    /// `|∫h − 1|` estimated against a rule with twice as many panels.
    pub fn normalization_defect(&self) -> f64 {
        (bump_transform(&self.rule, 0.0, 2 * BASE_PANELS).re / self.norm - 1.0).abs()
    }

    /// `∫ h_𝒯(t) e^{iωt} dt`, equal to 1 at `ω = 0` exactly.
    pub fn transform(&self, omega: f64) -> Complex64 {
        if omega == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let s = self.spread() * omega;
        let base = bump_transform(&self.rule, s, BASE_PANELS) / self.norm;
        base * unit_from_radians(DoubleDouble::product(omega, self.time))
    }
}

/// Which lightlike translation `T(t, ±t)` is integrated. `Plus` moves the right
/// factor and `Minus` the left one; either moves its lightray coordinate by `2t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    /// `𝒯 → +∞`.
    Out,
    /// `𝒯 → −∞`.
    In,
}

impl Limit {
    fn sign(self) -> f64 {
        match self {
            Limit::Out => 1.0,
            Limit::In => -1.0,
        }
    }
}

fn energy_gap(basis: &FockBasis, r: usize, c: usize) -> f64 {
    (basis.energy_dd(r) + basis.energy_dd(c).mul_f64(-1.0)).value()
}

/// Smears a single-factor operator: entry `(r, c)` picks up `K(2(E_r − E_c))`.
pub fn smear_factor(op: &FockOperator, basis: &FockBasis, kernel: &SmearingKernel) -> Result<FockOperator> {
    if op.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: op.dim(),
        });
    }
    if op.is_diagonal() {
        return Ok(op.clone());
    }
    let mut m = op.to_dense();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r != c && m[(r, c)] != Complex64::new(0.0, 0.0) {
                m[(r, c)] *= kernel.transform(2.0 * energy_gap(basis, r, c));
            }
        }
    }
    let flags = if op.flags().hermitian {
        OperatorFlags::HERMITIAN
    } else {
        OperatorFlags::NONE
    };
    FockOperator::new(OperatorData::Dense(m), flags)
}

/// `x_±(h_𝒯) = ∫ h_𝒯(t) Ad T(t, ±t)(x) dt`.
///
/// The translation is diagonal and commutes with every deformation, so only the
/// factor it moves is touched; the other factor and the twist pass through.
pub fn smear(
    x: &TensorOperator,
    tb: &TensorBasis<FockBasis>,
    kernel: &SmearingKernel,
    direction: Direction,
) -> Result<TensorOperator> {
    let dims = (tb.left().dim(), tb.right().dim());
    if x.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: tb.dim(),
            got: x.dim(),
        });
    }
    Ok(match (x, direction) {
        (TensorOperator::Product { left, right, dims }, Direction::Plus) => TensorOperator::Product {
            left: left.clone(),
            right: right.as_ref().map(|y| smear_factor(y, tb.right(), kernel)).transpose()?,
            dims: *dims,
        },
        (TensorOperator::Product { left, right, dims }, Direction::Minus) => TensorOperator::Product {
            left: left.as_ref().map(|y| smear_factor(y, tb.left(), kernel)).transpose()?,
            right: right.clone(),
            dims: *dims,
        },
        (TensorOperator::TwistedRight { s, op, .. }, Direction::Plus) => {
            twist_right(s.clone(), smear_factor(op, tb.right(), kernel)?, dims.0)?
        }
        (TensorOperator::TwistedLeft { s, op, .. }, Direction::Minus) => {
            twist_left(s.clone(), smear_factor(op, tb.left(), kernel)?, dims.1)?
        }
        (other, _) => other.clone(),
    })
}

/// Dense reference for [`smear`]: entry `(i, j)` of a full tensor-space matrix is
/// multiplied by the kernel at twice the energy gap of the moved factor.
pub fn smear_matrix(
    m: &DMatrix<Complex64>,
    tb: &TensorBasis<FockBasis>,
    kernel: &SmearingKernel,
    direction: Direction,
) -> Result<DMatrix<Complex64>> {
    if m.nrows() != tb.dim() || m.ncols() != tb.dim() {
        return Err(Error::DimensionMismatch {
            expected: tb.dim(),
            got: m.nrows(),
        });
    }
    let mut out = m.clone();
    for i in 0..tb.dim() {
        for j in 0..tb.dim() {
            let ((ai, bi), (aj, bj)) = (tb.split(i), tb.split(j));
            let gap = match direction {
                Direction::Plus => energy_gap(tb.right(), bi, bj),
                Direction::Minus => energy_gap(tb.left(), ai, aj),
            };
            if gap != 0.0 {
                out[(i, j)] *= kernel.transform(2.0 * gap);
            }
        }
    }
    Ok(out)
}

/// Successive differences of a smeared field on a probe family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub direction: Direction,
    pub limit: Limit,
    pub times: Vec<f64>,
    /// `max_probe ‖x(𝒯_{k+1})v − x(𝒯_k)v‖`.
    pub differences: Vec<f64>,
    /// The Cauchy test passed.
    pub converged: bool,
}

impl ConvergenceRecord {
    pub fn exact(&self) -> bool {
        self.differences.iter().all(|&d| d == 0.0)
    }

    pub fn max_difference(&self) -> f64 {
        self.differences.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct AsymptoticField {
    /// The smeared operator at the largest `|𝒯|`.
    pub operator: TensorOperator,
    /// Extrapolated images of the probe vectors.
    pub images: Vec<Vec<Complex64>>,
    pub record: ConvergenceRecord,
}

fn validate_series(series: &[f64]) -> Result<()> {
    if series.len() < 3 {
        return Err(Error::InvalidSeries(format!("need at least 3 times, got {}", series.len())));
    }
    if series.iter().any(|t| !(t.is_finite() && *t > 0.0)) || series.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSeries(format!("series must be positive and increasing: {series:?}")));
    }
    Ok(())
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Smears `x` along `±series` and extrapolates its action on `probes`.
///
/// Differences that fail to shrink by [`MIN_SHRINK`] (while above
/// [`DIFFERENCE_FLOOR`]) make the sequence non-Cauchy and no limit is returned.
pub fn asymptotic_field(
    x: &TensorOperator,
    tb: &TensorBasis<FockBasis>,
    direction: Direction,
    limit: Limit,
    series: &[f64],
    probes: &[Vec<Complex64>],
) -> Result<AsymptoticField> {
    validate_series(series)?;
    let times: Vec<f64> = series.iter().map(|t| limit.sign() * t).collect();
    let base = SmearingKernel::new(times[0], DEFAULT_EPSILON)?;
    let mut images: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(times.len());
    let mut last = None;
    for &t in &times {
        let op = smear(x, tb, &base.with_time(t)?, direction)?;
        images.push(probes.iter().map(|v| op.apply(v)).collect::<Result<_>>()?);
        last = Some(op);
    }
    let differences: Vec<f64> = images
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| distance(a, b))
                .fold(0.0, f64::max)
        })
        .collect();
    let converged = differences
        .windows(2)
        .all(|w| w[0] <= DIFFERENCE_FLOOR || w[1] * MIN_SHRINK <= w[0]);
    if !converged {
        return Err(Error::NotConverged(differences));
    }
    let k = images.len() - 1;
    let (dp, dl) = (differences[k - 2], differences[k - 1]);
    let ratio = if dp > DIFFERENCE_FLOOR { dl / dp } else { 0.0 };
    let tail = ratio / (1.0 - ratio);
    let extrapolated = images[k]
        .iter()
        .zip(&images[k - 1])
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + (x - y) * tail).collect())
        .collect();
    Ok(AsymptoticField {
        operator: last.expect("series is nonempty"),
        images: extrapolated,
        record: ConvergenceRecord {
            direction,
            limit,
            times,
            differences,
            converged,
        },
    })
}

/// A near-monochromatic one-particle packet on its own narrow momentum grid.
#[derive(Clone, Debug)]
pub struct WavePacket {
    center: f64,
    width: f64,
    basis: Arc<FockBasis>,
    profile: OnePVector,
}

impl WavePacket {
    /// Packet on `[p(1 − w/2), p(1 + w/2)]` with `|f_k|² w_k` proportional to a
    /// smooth bump; the Fock space has cutoff 1.
    pub fn new(center: f64, rel_width: f64, points: usize) -> Result<Self> {
        if !(center > 0.0 && center.is_finite()) {
            return Err(Error::InvalidArgument(format!("packet center must be positive, got {center}")));
        }
        if !(rel_width > 0.0 && rel_width < 1.0) {
            return Err(Error::InvalidArgument(format!("relative width must lie in (0, 1), got {rel_width}")));
        }
        let half = 0.5 * rel_width * center;
        let grid: Arc<MomentumGrid> = Arc::new(build_grid(Spacing::Linear, center - half, center + half, points)?);
        let coeffs = grid
            .points()
            .iter()
            .zip(grid.weights())
            .map(|(&p, &w)| Complex64::new((smooth_bump((p - center) / half) / w).sqrt(), 0.0))
            .collect();
        let raw = OnePVector::new(grid.clone(), coeffs)?;
        let profile = raw.scaled(Complex64::new(1.0 / raw.norm(), 0.0));
        let basis = Arc::new(build_basis(grid, 1, Statistics::Bose)?);
        Ok(Self {
            center,
            width: rel_width,
            basis,
            profile,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn relative_width(&self) -> f64 {
        self.width
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn profile(&self) -> &OnePVector {
        &self.profile
    }

    /// The field `Φ(f)`, which creates the packet from the vacuum.
    pub fn creator(&self) -> Result<FockOperator> {
        field(&self.profile, &self.basis)
    }
}

/// `ξ ×ᵒᵘᵗ η` or `ξ ×ⁱⁿ η` on the tensor space of the two packets.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub tag: Limit,
    pub amplitudes: Vec<Complex64>,
    /// Records of the two asymptotic fields, in order of application to `Ω`.
    pub records: [ConvergenceRecord; 2],
}

impl WaveState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn expect_nonzero(state: WaveState) -> Result<WaveState> {
    if state.norm() > 0.0 {
        Ok(state)
    } else {
        Err(Error::ZeroVector)
    }
}

fn vacuum(tb: &TensorBasis<FockBasis>) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); tb.dim()];
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// `Φ^out_+(x⊗1) Φ^out_-(1⊗y) Ω` with `x, y` the packet creators.
pub fn out_state(xi: &WavePacket, eta: &WavePacket, series: &[f64]) -> Result<WaveState> {
    let tb = TensorBasis::new(xi.basis.clone(), eta.basis.clone());
    let right = TensorOperator::right_factor(tb.left().dim(), eta.creator()?);
    let left = TensorOperator::left_factor(xi.creator()?, tb.right().dim());
    let first = asymptotic_field(&right, &tb, Direction::Minus, Limit::Out, series, &[vacuum(&tb)])?;
    let second = asymptotic_field(&left, &tb, Direction::Plus, Limit::Out, series, &first.images)?;
    expect_nonzero(WaveState {
        tag: Limit::Out,
        amplitudes: second.images.into_iter().next().expect("one probe"),
        records: [first.record, second.record],
    })
}

/// `Φ^in_+(S(x⊗1)S*) Φ^in_-(S(1⊗y)S*) Ω`.
pub fn in_state(xi: &WavePacket, eta: &WavePacket, s: &Arc<DiagonalUnitary>, series: &[f64]) -> Result<WaveState> {
    let tb = TensorBasis::new(xi.basis.clone(), eta.basis.clone());
    let right = twist_right(s.clone(), eta.creator()?, tb.left().dim())?;
    let left = twist_left(s.clone(), xi.creator()?, tb.right().dim())?;
    let first = asymptotic_field(&right, &tb, Direction::Minus, Limit::In, series, &[vacuum(&tb)])?;
    let second = asymptotic_field(&left, &tb, Direction::Plus, Limit::In, series, &first.images)?;
    expect_nonzero(WaveState {
        tag: Limit::In,
        amplitudes: second.images.into_iter().next().expect("one probe"),
        records: [first.record, second.record],
    })
}

#[derive(Clone, Debug)]
pub struct ScatteringAmplitude {
    pub p: f64,
    pub q: f64,
    /// `⟨out, in⟩ / (‖out‖‖in‖)`.
    pub phase: Complex64,
    /// [`Deformation::pair_phase`] at the packet centers.
    pub expected: Complex64,
    /// `⟨u⊗v, S u⊗v⟩` computed straight from the diagonal table.
    pub direct: Complex64,
    pub records: Vec<ConvergenceRecord>,
}

impl ScatteringAmplitude {
    pub fn error(&self) -> f64 {
        (self.phase - self.expected).norm()
    }

    pub fn direct_error(&self) -> f64 {
        (self.phase - self.direct).norm()
    }

    /// `T,difference,phase_re,phase_im` rows, one per step of each record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("record,T,difference,phase_re,phase_im\n");
        for (i, r) in self.records.iter().enumerate() {
            for (t, d) in r.times.iter().skip(1).zip(&r.differences) {
                let _ = writeln!(out, "{i},{t},{d:e},{:.17e},{:.17e}", self.phase.re, self.phase.im);
            }
        }
        out
    }
}

/// Extracts the S-matrix phase between two packets from their in and out states.
pub fn smatrix_element(
    xi: &WavePacket,
    eta: &WavePacket,
    def: &Deformation,
    series: &[f64],
) -> Result<ScatteringAmplitude> {
    let tb = TensorBasis::new(xi.basis.clone(), eta.basis.clone());
    let s = Arc::new(def.build(&tb)?);
    let out = out_state(xi, eta, series)?;
    let inn = in_state(xi, eta, &s, series)?;
    let overlap: Complex64 = out.amplitudes.iter().zip(&inn.amplitudes).map(|(a, b)| a.conj() * b).sum();
    let phase = overlap / (out.norm() * inn.norm());
    let weight: f64 = out.amplitudes.iter().map(|z| z.norm_sqr()).sum();
    let direct: Complex64 = out
        .amplitudes
        .iter()
        .zip(s.phases())
        .map(|(a, z)| a.norm_sqr() * z)
        .sum::<Complex64>()
        / weight;
    let records = out.records.into_iter().chain(inn.records).collect();
    Ok(ScatteringAmplitude {
        p: xi.center,
        q: eta.center,
        phase,
        expected: def.pair_phase(xi.center, eta.center),
        direct,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterOptions {
    pub pairs: Vec<(f64, f64)>,
    pub relative_width: f64,
    pub points: usize,
    pub series: Vec<f64>,
    pub tolerance: f64,
    pub trivial_tolerance: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            pairs: vec![(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (1.5, 1.5), (0.5, 3.0), (3.0, 1.0)],
            relative_width: 0.05,
            points: 33,
            series: DEFAULT_SERIES.to_vec(),
            tolerance: 1e-3,
            trivial_tolerance: 1e-10,
        }
    }
}

/// Compares extracted phases with the closed form at every requested pair and
/// runs the `κ = 0` control on the first pair.
pub fn check_scattering(def: &Deformation, opts: &ScatterOptions) -> Result<VerificationReport> {
    let mut r = VerificationReport::new(format!("scattering[{}]", def.label()), opts.tolerance);
    let mut worst = 0.0_f64;
    let mut drift = 0.0_f64;
    let mut unit = 0.0_f64;
    for (i, &(p, q)) in opts.pairs.iter().enumerate() {
        let xi = WavePacket::new(p, opts.relative_width, opts.points)?;
        let eta = WavePacket::new(q, opts.relative_width, opts.points)?;
        let amp = smatrix_element(&xi, &eta, def, &opts.series)?;
        r.note(format!("pair{i}"), format!("p={p} q={q}"));
        r.metric(format!("pair{i}.phase_re"), amp.phase.re);
        r.metric(format!("pair{i}.phase_im"), amp.phase.im);
        r.metric(format!("pair{i}.error"), amp.error());
        r.metric(format!("pair{i}.direct_error"), amp.direct_error());
        worst = worst.max(amp.error());
        unit = unit.max((amp.phase.norm() - 1.0).abs());
        drift = drift.max(amp.records.iter().map(ConvergenceRecord::max_difference).fold(0.0, f64::max));
    }
    r.require_at_most("max_phase_error", worst, opts.tolerance);
    r.require_at_most("max_modulus_defect", unit, opts.tolerance);
    r.metric("chiral_limit_drift", drift);
    r.require("chiral_limits_exact", drift == 0.0);
    if let Some(&(p, q)) = opts.pairs.first() {
        let xi = WavePacket::new(p, opts.relative_width, opts.points)?;
        let eta = WavePacket::new(q, opts.relative_width, opts.points)?;
        let free = smatrix_element(&xi, &eta, &Deformation::Kappa { kappa: 0.0 }, &opts.series)?;
        r.require_at_most("kappa0_phase_error", (free.phase - 1.0).norm(), opts.trivial_tolerance);
    }
    r.note("epsilon", DEFAULT_EPSILON.to_string());
    r.note("series", format!("{:?}", opts.series));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innerfunc::make_blaschke;
    use crate::smatrix::build_s_kappa;

    fn small_tensor() -> TensorBasis<FockBasis> {
        let grid = Arc::new(build_grid(Spacing::Linear, 1.0, 2.5, 3).unwrap());
        TensorBasis::square(Arc::new(build_basis(grid, 2, Statistics::Bose).unwrap()))
    }

    fn generic_field(basis: &FockBasis) -> FockOperator {
        let grid = basis.grid().unwrap().clone();
        let f = OnePVector::new(grid, vec![Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4), Complex64::new(0.5, 0.0)])
            .unwrap();
        field(&f, basis).unwrap()
    }

    fn max_entry(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn kernel_is_normalized_and_centered() {
        let k = SmearingKernel::new(40.0, DEFAULT_EPSILON).unwrap();
        assert!(k.normalization_defect() < 1e-10);
        assert_eq!(k.transform(0.0), Complex64::new(1.0, 0.0));
        let (a, b) = k.support();
        assert!((a - (40.0 - 40f64.sqrt())).abs() < 1e-12 && b > a);
        assert_eq!(k.profile(b + 1e-9), 0.0);
        // ∫h_T = 1 by trapezoid on a fine grid.
        let n = 20_000;
        let h = (b - a) / n as f64;
        let s: f64 = (0..=n).map(|j| k.profile(a + h * j as f64)).sum::<f64>() * h;
        assert!((s - 1.0).abs() < 1e-9);
        assert!(SmearingKernel::new(0.0, 0.5).is_err());
        assert!(SmearingKernel::new(1.0, 1.0).is_err());
    }

    #[test]
    fn transform_matches_direct_quadrature() {
        let k = SmearingKernel::new(-10.0, DEFAULT_EPSILON).unwrap();
        let (a, b) = k.support();
        let omega = 1.7;
        let n = 40_000;
        let h = (b - a) / n as f64;
        let direct: Complex64 = (0..=n)
            .map(|j| {
                let t = a + h * j as f64;
                Complex64::from_polar(k.profile(t), omega * t)
            })
            .sum::<Complex64>()
            * h;
        assert!((direct - k.transform(omega)).norm() < 1e-8);
    }

    #[test]
    fn chiral_factor_is_untouched() {
        let tb = small_tensor();
        let k = SmearingKernel::new(20.0, DEFAULT_EPSILON).unwrap();
        let x = TensorOperator::left_factor(generic_field(tb.left()), tb.right().dim());
        let smeared = smear(&x, &tb, &k, Direction::Plus).unwrap();
        assert_eq!(smeared.to_dense().unwrap(), x.to_dense().unwrap());
        let moved = smear(&x, &tb, &k, Direction::Minus).unwrap();
        assert!(max_entry(&(moved.to_dense().unwrap() - x.to_dense().unwrap())) > 1e-6);
    }

    #[test]
    fn diagonal_operators_are_invariant() {
        let tb = small_tensor();
        let k = SmearingKernel::new(10.0, DEFAULT_EPSILON).unwrap();
        let n = crate::fock::number_operator(tb.right());
        let x = TensorOperator::right_factor(tb.left().dim(), n);
        let smeared = smear(&x, &tb, &k, Direction::Plus).unwrap();
        assert_eq!(smeared.to_dense().unwrap(), x.to_dense().unwrap());
    }

    #[test]
    fn structural_smear_matches_dense_reference() {
        let tb = small_tensor();
        let k = SmearingKernel::new(10.0, DEFAULT_EPSILON).unwrap();
        let s = Arc::new(build_s_kappa(0.7, &tb).unwrap());
        let y = generic_field(tb.right());
        for (op, dir) in [
            (twist_right(s.clone(), y.clone(), tb.left().dim()).unwrap(), Direction::Plus),
            (twist_right(s.clone(), y.clone(), tb.left().dim()).unwrap(), Direction::Minus),
            (twist_left(s.clone(), y.clone(), tb.right().dim()).unwrap(), Direction::Minus),
            (TensorOperator::right_factor(tb.left().dim(), y.clone()), Direction::Plus),
        ] {
            let structural = smear(&op, &tb, &k, dir).unwrap().to_dense().unwrap();
            let dense = smear_matrix(&op.to_dense().unwrap(), &tb, &k, dir).unwrap();
            assert!(max_entry(&(structural - dense)) < 1e-13);
        }
    }

    #[test]
    fn generic_field_approaches_its_stationary_part() {
        let tb = small_tensor();
        let y = generic_field(tb.right());
        let x = TensorOperator::right_factor(tb.left().dim(), y);
        let dense = x.to_dense().unwrap();
        // The limit keeps the entries between states of equal energy.
        let mut limit = dense.clone();
        for i in 0..tb.dim() {
            for j in 0..tb.dim() {
                let ((ai, bi), (aj, bj)) = (tb.split(i), tb.split(j));
                if ai != aj || energy_gap(tb.right(), bi, bj) != 0.0 {
                    limit[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        let mut previous = f64::INFINITY;
        for t in DEFAULT_SERIES {
            let k = SmearingKernel::new(t, DEFAULT_EPSILON).unwrap();
            let gap = max_entry(&(smear(&x, &tb, &k, Direction::Plus).unwrap().to_dense().unwrap() - &limit));
            assert!(gap < previous, "T = {t}: {gap} vs {previous}");
            previous = gap;
        }
    }

    #[test]
    fn chiral_asymptotic_field_is_exact() {
        let tb = small_tensor();
        let x = TensorOperator::left_factor(generic_field(tb.left()), tb.right().dim());
        let probe = vacuum(&tb);
        let f = asymptotic_field(&x, &tb, Direction::Plus, Limit::Out, &DEFAULT_SERIES, std::slice::from_ref(&probe)).unwrap();
        assert!(f.record.exact() && f.record.converged);
        assert_eq!(f.images[0], x.apply(&probe).unwrap());
        assert!(asymptotic_field(&x, &tb, Direction::Plus, Limit::Out, &[10.0, 20.0], &[probe]).is_err());
    }

    #[test]
    fn twisted_field_converges_along_moving_direction() {
        let xi = WavePacket::new(1.0, 0.05, 33).unwrap();
        let eta = WavePacket::new(1.5, 0.05, 33).unwrap();
        let tb = TensorBasis::new(xi.basis().clone(), eta.basis().clone());
        let s = Arc::new(build_s_kappa(0.5, &tb).unwrap());
        let x = twist_right(s, eta.creator().unwrap(), tb.left().dim()).unwrap();
        let mut probe = vacuum(&tb);
        probe[tb.index(1, 0)] = Complex64::new(0.6, 0.0);
        let f = asymptotic_field(&x, &tb, Direction::Plus, Limit::Out, &DEFAULT_SERIES, &[probe]).unwrap();
        assert!(f.record.converged && !f.record.exact());
        assert!(f.record.differences.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn kappa_zero_has_trivial_phase() {
        let xi = WavePacket::new(1.0, 0.05, 33).unwrap();
        let eta = WavePacket::new(2.0, 0.05, 33).unwrap();
        let a = smatrix_element(&xi, &eta, &Deformation::Kappa { kappa: 0.0 }, &DEFAULT_SERIES).unwrap();
        assert!((a.phase - 1.0).norm() < 1e-10);
        assert!(a.records.iter().all(ConvergenceRecord::exact));
    }

    #[test]
    fn extracted_phases_match_closed_forms() {
        let phi = make_blaschke(&[Complex64::new(0.5, 1.0)], true).unwrap();
        for def in [Deformation::Kappa { kappa: 0.5 }, Deformation::Phi { phi }] {
            let report = check_scattering(&def, &ScatterOptions::default()).unwrap();
            assert!(report.passed, "{report:?}");
            assert!(report.get("max_phase_error").unwrap() < 1e-3);
            for i in 0..6 {
                assert!(report.get(&format!("pair{i}.direct_error")).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn packets_are_normalized_and_narrow() {
        let w = WavePacket::new(2.0, 0.05, 33).unwrap();
        assert!((w.profile().norm() - 1.0).abs() < 1e-14);
        let (lo, hi) = w.profile().grid().range();
        assert!((lo - 1.95).abs() < 1e-12 && (hi - 2.05).abs() < 1e-12);
        assert_eq!(w.basis().dim(), 34);
        assert!(WavePacket::new(-1.0, 0.05, 33).is_err());
    }
}
