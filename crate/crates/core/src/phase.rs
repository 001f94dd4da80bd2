//! Unit-modulus phases computed from double-double angle accumulators.
//!
//! Deformation phases such as `exp(iκ E_L E_R)` have arguments of order 1e4 rad on
//! the default basis. Accumulating them in plain `f64` loses ~1e-11 in the phase,
//! which is larger than the entrywise agreement required between independent
//! constructions. Angles are therefore carried as unevaluated sums `hi + lo` and
//! reduced modulo one turn before the trigonometric evaluation.

use std::f64::consts::TAU;
use std::ops::{Add, Mul};

use num_complex::Complex64;

const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;
const TAU_LO2: f64 = -5.989_539_619_436_679e-33;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// A real number stored as an unevaluated sum of two doubles (~106 bits).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add_f64(self, x: f64) -> Self {
        self + Self::new(x)
    }

    pub fn mul_f64(self, x: f64) -> Self {
        let (p, e) = two_prod(self.hi, x);
        let (hi, lo) = quick_two_sum(p, e + self.lo * x);
        Self { hi, lo }
    }

    /// The value modulo 2π, returned in `[-π, π]`.
    pub fn reduce_radians(self) -> f64 {
        let k = (self.hi / TAU).round();
        if k == 0.0 {
            return self.value();
        }
        let (p, pe) = two_prod(k, TAU);
        let r = (self + Self { hi: -p, lo: -pe })
            .add_f64(-k * TAU_LO)
            .add_f64(-k * TAU_LO2);
        r.value()
    }

    /// The value modulo 1, returned in `[-1/2, 1/2]`.
    pub fn reduce_turns(self) -> f64 {
        let k = self.hi.round();
        let (s, e) = two_sum(self.hi - k, self.lo);
        s + e
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

/// `exp(i·angle)` with the angle reduced before evaluation.
pub fn unit_from_radians(angle: DoubleDouble) -> Complex64 {
    let r = angle.reduce_radians();
    let (s, c) = r.sin_cos();
    Complex64::new(c, s)
}

/// `exp(2πi·turns)`; quarter turns are returned exactly.
pub fn unit_from_turns(turns: DoubleDouble) -> Complex64 {
    let r = turns.reduce_turns();
    let q = 4.0 * r;
    if q == q.round() {
        return match (q.round() as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}
