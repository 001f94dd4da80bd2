//! One-particle space of the chiral current on a lightray.
//!
//! Vectors are represented by their momentum amplitudes `f(p_k)` on a grid of
//! strictly positive momenta. The inner product carries the measure `p dp`, so the
//! one-particle translation generator is diagonal with eigenvalues `p_k`:
//!
//! ```text
//! <f, g> = Σ_k w_k conj(f_k) g_k,    w_k = p_k Δ_k
//! ```
//!
//! where `Δ_k` are trapezoid weights of `dp`. Position space is reached through the
//! real test function whose positive-frequency part is `f`:
//!
//! ```text
//! f̂(p) = ∫ f(x) e^{ipx} dx,      f(x) = (1/π) Re Σ_k Δ_k f̂(p_k) e^{-i p_k x}
//! ```
//!
//! With this convention `e^{itp}` shifts a profile to the right by `t`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unitary::DiagonalUnitary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

/// Discretized positive momentum half-line with quadrature weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRecord")]
pub struct MomentumGrid {
    spacing: Spacing,
    p_min: f64,
    p_max: f64,
    points: Vec<f64>,
    /// Trapezoid weights of `dp`.
    measure: Vec<f64>,
    /// One-particle weights `p dp`.
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct GridRecord {
    spacing: Spacing,
    points: Vec<f64>,
}

impl TryFrom<GridRecord> for MomentumGrid {
    type Error = Error;

    fn try_from(rec: GridRecord) -> Result<Self> {
        MomentumGrid::from_points(rec.spacing, rec.points)
    }
}

pub fn build_grid(spacing: Spacing, p_min: f64, p_max: f64, n_points: usize) -> Result<MomentumGrid> {
    if !(p_min > 0.0) || !(p_max > p_min) || !p_max.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "need 0 < p_min < p_max, got [{p_min}, {p_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 points, got {n_points}")));
    }
    let last = (n_points - 1) as f64;
    let mut points: Vec<f64> = match spacing {
        Spacing::Linear => (0..n_points)
            .map(|k| p_min + (p_max - p_min) * k as f64 / last)
            .collect(),
        Spacing::Logarithmic => {
            let ratio = p_max / p_min;
            (0..n_points)
                .map(|k| p_min * ratio.powf(k as f64 / last))
                .collect()
        }
    };
    points[n_points - 1] = p_max;
    MomentumGrid::from_points(spacing, points)
}

impl MomentumGrid {
    /// Builds a grid from explicit points; trapezoid weights are derived from them.
    pub fn from_points(spacing: Spacing, points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        if points.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidGrid("momenta must be finite and positive".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("momenta must be strictly increasing".into()));
        }
        let n = points.len();
        let mut measure = vec![0.0; n];
        for k in 0..n - 1 {
            let h = points[k + 1] - points[k];
            measure[k] += 0.5 * h;
            measure[k + 1] += 0.5 * h;
        }
        let weights = points.iter().zip(&measure).map(|(p, d)| p * d).collect();
        Ok(Self {
            spacing,
            p_min: points[0],
            p_max: points[n - 1],
            points,
            measure,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn range(&self) -> (f64, f64) {
        (self.p_min, self.p_max)
    }

    /// Trapezoid approximation of `∫ f(p) dp` over the grid range.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.measure).map(|(p, d)| d * f(*p)).sum()
    }

    /// Picks `m` points evenly in index (geometrically on logarithmic grids),
    /// always keeping both endpoints, and recomputes the quadrature on them.
    pub fn subsample(&self, m: usize) -> Result<Self> {
        if m < 2 || m > self.len() {
            return Err(Error::InvalidGrid(format!(
                "cannot pick {m} modes from {} grid points",
                self.len()
            )));
        }
        let last = (self.len() - 1) as f64;
        let points = (0..m)
            .map(|j| {
                let idx = (j as f64 * last / (m - 1) as f64).round() as usize;
                self.points[idx]
            })
            .collect();
        Self::from_points(self.spacing, points)
    }
}

fn same_grid(a: &Arc<MomentumGrid>, b: &Arc<MomentumGrid>) -> bool {
    Arc::ptr_eq(a, b) || a.points == b.points
}

/// A one-particle vector given by its momentum amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnePVector {
    grid: Arc<MomentumGrid>,
    coeffs: Vec<Complex64>,
}

impl OnePVector {
    pub fn new(grid: Arc<MomentumGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zero(grid: Arc<MomentumGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Coordinate vector `δ_k`.
    pub fn delta(grid: Arc<MomentumGrid>, k: usize) -> Self {
        let mut v = Self::zero(grid);
        v.coeffs[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| w * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    /// Momentum-space multiplier `m(P₁) f` (functional calculus of the generator).
    pub fn multiplied(&self, m: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self
                .grid
                .points
                .iter()
                .zip(&self.coeffs)
                .map(|(p, c)| m(*p) * c)
                .collect(),
        }
    }

    pub fn apply_diagonal(&self, d: &DiagonalUnitary) -> Result<Self> {
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: d.apply(&self.coeffs)?,
        })
    }

    /// Restriction onto a coarser grid whose points are a subset of this grid.
    pub fn restrict_to(&self, coarse: &Arc<MomentumGrid>) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(coarse.len());
        let mut k = 0;
        for &p in coarse.points() {
            while k < self.grid.len() && self.grid.points[k] < p {
                k += 1;
            }
            if k == self.grid.len() || self.grid.points[k] != p {
                return Err(Error::ModeMismatch(format!("momentum {p} is not a grid point")));
            }
            coeffs.push(self.coeffs[k]);
        }
        Ok(Self {
            grid: coarse.clone(),
            coeffs,
        })
    }
}

pub fn inner_product(f: &OnePVector, g: &OnePVector) -> Result<Complex64> {
    if !same_grid(&f.grid, &g.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(f.grid
        .weights
        .iter()
        .zip(f.coeffs.iter().zip(&g.coeffs))
        .map(|(w, (a, b))| a.conj() * b * *w)
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Whether position `x` lies outside this half-line. The origin belongs to the left.
    pub fn excludes(self, x: f64) -> bool {
        match self {
            Side::Left => x > 0.0,
            Side::Right => x <= 0.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Uniform position grid `x_j = x_min + j dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionWindow {
    pub x_min: f64,
    pub x_max: f64,
    pub samples: usize,
}

/// Half-width of the default window in units of the bump width.
pub const WINDOW_HALF_WIDTHS: f64 = 8.0;
pub const WINDOW_SAMPLES: usize = 4096;

impl PositionWindow {
    pub fn around(center: f64, width: f64) -> Self {
        Self {
            x_min: center - WINDOW_HALF_WIDTHS * width,
            x_max: center + WINDOW_HALF_WIDTHS * width,
            samples: WINDOW_SAMPLES,
        }
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.samples - 1) as f64
    }

    pub fn position(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.step()
    }

    pub fn shifted(&self, s: f64) -> Self {
        Self {
            x_min: self.x_min + s,
            x_max: self.x_max + s,
            samples: self.samples,
        }
    }
}

/// `exp(-1/(1-u²))` on `|u| < 1`, zero elsewhere.
pub fn smooth_bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// A real position-space profile declared to live on one half-line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLineProfile {
    pub side: Side,
    pub center: f64,
    pub width: f64,
    pub window: PositionWindow,
    pub samples: Vec<f64>,
}

impl HalfLineProfile {
    /// Smooth bump supported on `[center - width, center + width]`.
    pub fn bump(side: Side, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument(format!("bump width must be positive, got {width}")));
        }
        let window = PositionWindow::around(center, width);
        let samples = (0..window.samples)
            .map(|j| smooth_bump((window.position(j) - center) / width))
            .collect();
        Ok(Self {
            side,
            center,
            width,
            window,
            samples,
        })
    }

    pub fn scaled(mut self, a: f64) -> Self {
        self.samples.iter_mut().for_each(|s| *s *= a);
        self
    }

    /// The same profile translated by `s` (samples move with the window).
    pub fn shifted(&self, s: f64) -> Self {
        Self {
            side: self.side,
            center: self.center + s,
            width: self.width,
            window: self.window.shifted(s),
            samples: self.samples.clone(),
        }
    }

    /// Fraction of `∫|f|²` lying outside the declared half-line.
    pub fn mass_outside(&self) -> f64 {
        let mut total = 0.0;
        let mut outside = 0.0;
        for (j, s) in self.samples.iter().enumerate() {
            let m = s * s;
            total += m;
            if self.side.excludes(self.window.position(j)) {
                outside += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }
}

/// Largest tolerated fraction of profile mass outside the declared half-line.
pub const PROFILE_LEAK_TOL: f64 = 1e-12;

/// Momentum amplitudes `f̂(p_k) = ∫ f(x) e^{i p_k x} dx` of a profile, without any
/// support validation. The verification harness uses this to measure mislocalized
/// generators instead of rejecting them.
pub fn fourier_transform(profile: &HalfLineProfile, grid: &Arc<MomentumGrid>) -> OnePVector {
    let dx = profile.window.step();
    let support: Vec<(f64, f64)> = profile
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| **s != 0.0)
        .map(|(j, s)| (profile.window.position(j), *s))
        .collect();
    let coeffs = grid
        .points
        .iter()
        .map(|&p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(x, s) in &support {
                let (sn, cs) = (p * x).sin_cos();
                acc += Complex64::new(s * cs, s * sn);
            }
            acc * dx
        })
        .collect();
    OnePVector {
        grid: grid.clone(),
        coeffs,
    }
}

pub fn localize(profile: &HalfLineProfile, grid: &Arc<MomentumGrid>) -> Result<OnePVector> {
    let mass = profile.mass_outside();
    if mass > PROFILE_LEAK_TOL {
        return Err(Error::ProfileNotLocalized { mass });
    }
    Ok(fourier_transform(profile, grid))
}

/// One-particle translation `T₀(t) = e^{itP₁}` as a diagonal phase table.
pub fn translation_phase(grid: &MomentumGrid, t: f64) -> DiagonalUnitary {
    let phases = grid
        .points
        .iter()
        .map(|p| {
            let (s, c) = (t * p).sin_cos();
            Complex64::new(c, s)
        })
        .collect();
    DiagonalUnitary::new(phases, format!("T0({t})")).expect("sin/cos pairs are unimodular")
}

/// Real position-space function reconstructed from the positive-frequency amplitudes.
pub fn reconstruct(f: &OnePVector, window: &PositionWindow) -> Vec<f64> {
    let grid = &f.grid;
    let terms: Vec<(f64, Complex64)> = grid
        .points
        .iter()
        .zip(grid.measure.iter().zip(&f.coeffs))
        .map(|(p, (d, c))| (*p, c * *d))
        .collect();
    (0..window.samples)
        .map(|j| {
            let x = window.position(j);
            let mut acc = 0.0;
            for &(p, c) in &terms {
                let (s, co) = (p * x).sin_cos();
                // Re(c · e^{-ipx})
                acc += c.re * co + c.im * s;
            }
            acc / std::f64::consts::PI
        })
        .collect()
}

/// Fraction of the position-space norm² of `f` outside the half-line `side`,
/// measured on `window`.
pub fn support_leakage(f: &OnePVector, side: Side, window: &PositionWindow) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::ZeroVector);
    }
    let values = reconstruct(f, window);
    let mut total = 0.0;
    let mut outside = 0.0;
    for (j, v) in values.iter().enumerate() {
        let m = v * v;
        total += m;
        if side.excludes(window.position(j)) {
            outside += m;
        }
    }
    if total == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(outside / total)
}
