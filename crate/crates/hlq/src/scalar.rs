//! Scalar abstraction and paired-float arithmetic.
//!
//! Everything phase-like in this crate is carried as an unevaluated sum of
//! two native floats (a "double-double"), which roughly doubles the working
//! precision without leaving machine arithmetic. The kernels are generic
//! over the native float through [`Scalar`], so the same code instantiates
//! at `f64` (the production scalar) and `f32`.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Native floating-point scalar the numeric kernels run on.
///
/// Extends `num_traits::Float` with the two constants the paired-float
/// layer needs: Dekker's splitting factor and pi to twice native precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Dekker splitting factor `2^ceil(p/2) + 1` for a `p`-bit significand.
    const SPLIT: Self;
    /// Pi rounded to `Self`.
    const PI_HI: Self;
    /// Rounding residue `pi - PI_HI`, again rounded to `Self`.
    const PI_LO: Self;
}

impl Scalar for f64 {
    const SPLIT: f64 = 134_217_729.0; // 2^27 + 1
    const PI_HI: f64 = std::f64::consts::PI;
    const PI_LO: f64 = 1.224_646_799_147_353_2e-16;
}

impl Scalar for f32 {
    const SPLIT: f32 = 4097.0; // 2^12 + 1
    const PI_HI: f32 = std::f32::consts::PI;
    const PI_LO: f32 = -8.742_278e-8;
}

/// Error-free sum: returns `(s, e)` with `s = fl(a + b)` and `s + e = a + b` exactly.
#[inline(always)]
pub fn two_sum<F: Scalar>(a: F, b: F) -> (F, F) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free sum assuming `|a| >= |b|` (or a = 0).
#[inline(always)]
pub fn quick_two_sum<F: Scalar>(a: F, b: F) -> (F, F) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product via Dekker splitting: `p + e = a * b` exactly.
#[inline(always)]
pub fn two_prod<F: Scalar>(a: F, b: F) -> (F, F) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

#[inline(always)]
fn split<F: Scalar>(a: F) -> (F, F) {
    let t = F::SPLIT * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Unevaluated sum of two native floats, `hi + lo`, with `|lo| <= ulp(hi)/2`.
///
/// Gives roughly twice the native significand (106 bits at f64). All
/// operations use only IEEE add/sub/mul/div, so results are bit-identical
/// across platforms and thread counts.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct DoubleFloat<F> {
    hi: F,
    lo: F,
}

impl<F: Scalar> DoubleFloat<F> {
    #[inline(always)]
    pub fn zero() -> Self {
        DoubleFloat { hi: F::zero(), lo: F::zero() }
    }

    #[inline(always)]
    pub fn from_f(a: F) -> Self {
        DoubleFloat { hi: a, lo: F::zero() }
    }

    /// Renormalizes an arbitrary pair into the canonical representation.
    #[inline(always)]
    pub fn norm(hi: F, lo: F) -> Self {
        let (s, e) = two_sum(hi, lo);
        DoubleFloat { hi: s, lo: e }
    }

    #[inline(always)]
    pub fn hi(self) -> F {
        self.hi
    }

    #[inline(always)]
    pub fn lo(self) -> F {
        self.lo
    }

    #[inline(always)]
    pub fn to_f(self) -> F {
        self.hi + self.lo
    }

    pub fn is_zero(self) -> bool {
        self.hi == F::zero() && self.lo == F::zero()
    }

    /// Pi to twice native precision.
    #[inline(always)]
    pub fn pi() -> Self {
        DoubleFloat { hi: F::PI_HI, lo: F::PI_LO }
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (s1, s2) = quick_two_sum(s1, s2 + t2);
        DoubleFloat { hi: s1, lo: s2 }
    }

    #[inline]
    pub fn add_f(self, o: F) -> Self {
        let (s1, s2) = two_sum(self.hi, o);
        let (s1, s2) = quick_two_sum(s1, s2 + self.lo);
        DoubleFloat { hi: s1, lo: s2 }
    }

    #[inline]
    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    #[inline]
    pub fn neg(self) -> Self {
        DoubleFloat { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleFloat { hi, lo }
    }

    #[inline]
    pub fn mul_f(self, o: F) -> Self {
        let (p, e) = two_prod(self.hi, o);
        let e = e + self.lo * o;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleFloat { hi, lo }
    }

    #[inline]
    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleFloat::norm(hi, lo + q3)
    }

    /// Exact quotient correction for integer-valued operands below 2^53
    /// (both exactly representable): ~2 ulp of the paired result.
    #[inline(always)]
    pub fn div_exact_f(a: F, b: F) -> Self {
        let q0 = a / b;
        let (p, e) = two_prod(q0, b);
        let r = (a - p) - e;
        let q1 = r / b;
        DoubleFloat::norm(q0, q1)
    }

    /// Converts an unsigned 128-bit integer, exactly when it fits in twice
    /// the native significand (always, for the magnitudes this crate feeds it).
    pub fn from_u128(v: u128) -> Self {
        let hi = F::from_u128(v).expect("u128 converts to float");
        if v == 0 || !hi.is_finite() {
            return DoubleFloat::from_f(hi);
        }
        match hi.to_i128() {
            Some(h) if v <= i128::MAX as u128 => {
                let d = v as i128 - h;
                let lo = F::from_i128(d).expect("residue converts");
                DoubleFloat::norm(hi, lo)
            }
            _ => DoubleFloat::from_f(hi),
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::from_u128(v as u128)
    }

    /// `n / d` to full paired precision.
    #[inline]
    pub fn ratio_u128(n: u128, d: u128) -> Self {
        const EXACT: u128 = 1 << 53;
        if n < EXACT && d < EXACT {
            // both representable exactly in one native float (f64 and up)
            let a = F::from_u128(n).unwrap();
            let b = F::from_u128(d).unwrap();
            Self::div_exact_f(a, b)
        } else {
            Self::from_u128(n).div(Self::from_u128(d))
        }
    }

    /// Multiplies by 2^k (exact).
    pub fn ldexp(self, k: i32) -> Self {
        let f = F::from_f64(2f64.powi(k)).unwrap();
        DoubleFloat { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn abs(self) -> Self {
        if self.hi < F::zero() {
            self.neg()
        } else {
            self
        }
    }
}

impl<F: Scalar> Add for DoubleFloat<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        DoubleFloat::add(self, o)
    }
}
impl<F: Scalar> Sub for DoubleFloat<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        DoubleFloat::sub(self, o)
    }
}
impl<F: Scalar> Mul for DoubleFloat<F> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        DoubleFloat::mul(self, o)
    }
}
impl<F: Scalar> Div for DoubleFloat<F> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        DoubleFloat::div(self, o)
    }
}
impl<F: Scalar> Neg for DoubleFloat<F> {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleFloat::neg(self)
    }
}

/// Compensated accumulator (Kahan-Babuska / Neumaier variant).
///
/// `value()` folds the compensation back in; `parts()` exposes the raw
/// pair so partial sums can be merged without losing the compensation.
#[derive(Clone, Copy, Debug)]
pub struct KahanSum<F> {
    sum: F,
    comp: F,
}

impl<F: Scalar> Default for KahanSum<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> KahanSum<F> {
    pub fn new() -> Self {
        KahanSum { sum: F::zero(), comp: F::zero() }
    }

    #[inline(always)]
    pub fn add(&mut self, v: F) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.comp
    }

    pub fn parts(&self) -> (F, F) {
        (self.sum, self.comp)
    }
}
