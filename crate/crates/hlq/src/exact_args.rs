//! Exact arguments `x = (p/q) * pi` and lossless reduction of `x / n` mod `2*pi`.
//!
//! At the magnitudes this crate targets (`x ~ 10^22` and far beyond) the
//! value `x/n mod 2*pi` carries none of the bits of a native float holding
//! `x`, so reduction must happen on the rational part: with `x = (p/q)*pi`,
//!
//! ```text
//! x/n mod 2*pi  =  pi * (p mod 2*q*n) / (q*n)
//! ```
//!
//! and `p mod 2*q*n` is exact integer arithmetic. [`ArgReducer`] performs
//! that per-`n` reduction at amortized cost independent of the size of `p`
//! by factoring `p = 2*q*s + r0` once per argument; then
//! `p mod 2*q*n = 2*q*(s mod n) + r0`.
//!
//! Phases are carried as [`ReducedPhase`]: a paired-float `t` in `[0, 1]`
//! measured in units of pi, plus a sign applied after the sine kernel. The
//! fold to `[0, 1]` uses only exact operations (the fold points 1/2, 1, 3/2,
//! 2 are exact in any binary format and Sterbenz subtraction applies), so
//! `sin_pi` of the reduction of `-x` is bit-for-bit the negation of that of
//! `x`.

use crate::error::{Error, Result};
use crate::scalar::{two_prod, two_sum, DoubleFloat, Scalar};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;

/// An argument `x = (p/q) * pi` with `p` an arbitrary-precision integer
/// and `q <= 10^18`.
///
/// Construction keeps `p/q` as given (no reduction to lowest terms); the
/// reduction identity only needs `q` exact, and callers always supply small
/// denominators (decimal fractions, halves).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiRational {
    p: BigInt,
    q: u64,
}

impl PiRational {
    pub fn new(p: BigInt, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::domain("denominator must be positive"));
        }
        if q > 1_000_000_000_000_000_000 {
            return Err(Error::domain("denominator limited to 10^18"));
        }
        Ok(PiRational { p, q })
    }

    pub fn from_integer_pi(p: impl Into<BigInt>) -> Self {
        PiRational { p: p.into(), q: 1 }
    }

    /// Builds `t * pi` from a native float, keeping about 8 fractional
    /// decimal digits of `t`. Intended for interactive inputs of moderate
    /// size; large arguments should be given as strings or exact integers.
    pub fn from_pi_units_approx(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::domain("argument must be finite"));
        }
        if t.abs() > 9e17 {
            return Err(Error::domain(
                "argument too large for float construction; pass it as a string",
            ));
        }
        let scaled = (t * 1e8).round();
        Ok(PiRational { p: BigInt::from(scaled as i128), q: 100_000_000 })
    }

    pub fn numer(&self) -> &BigInt {
        &self.p
    }

    pub fn denom(&self) -> u64 {
        self.q
    }

    pub fn is_negative(&self) -> bool {
        self.p.is_negative()
    }

    pub fn neg(&self) -> Self {
        PiRational { p: -self.p.clone(), q: self.q }
    }

    /// `self + k * pi` exactly.
    pub fn add_pi_multiple(&self, k: &BigInt) -> Self {
        PiRational { p: &self.p + k * BigInt::from(self.q), q: self.q }
    }

    /// Adds two exact arguments (common-denominator form, kept unreduced).
    pub fn checked_add(&self, other: &PiRational) -> Result<Self> {
        let g = gcd_u64(self.q, other.q);
        let lq = self.q / g;
        let oq = other.q / g;
        let q = lq
            .checked_mul(other.q)
            .ok_or_else(|| Error::domain("denominator overflow in addition"))?;
        if q > 1_000_000_000_000_000_000 {
            return Err(Error::domain("denominator limited to 10^18"));
        }
        let p = &self.p * BigInt::from(oq) + &other.p * BigInt::from(lq);
        Ok(PiRational { p, q })
    }

    /// The value `p/q` (units of pi) as a paired float. Exact while
    /// `p` fits twice the native significand, nearest otherwise.
    pub fn pi_units_dd<F: Scalar>(&self) -> DoubleFloat<F> {
        let num = biguint_to_dd::<F>(self.p.magnitude());
        let den = DoubleFloat::from_u64(self.q);
        let v = num.div(den);
        if self.p.is_negative() {
            v.neg()
        } else {
            v
        }
    }

    /// Approximate value of `x` itself (not in units of pi) as a native float.
    pub fn to_f64(&self) -> f64 {
        let t: DoubleFloat<f64> = self.pi_units_dd();
        t.mul(DoubleFloat::pi()).to_f()
    }

    /// Decimal rendering of `p/q`, exact when `q` factors as `2^a 5^b`
    /// (every denominator the parser produces), else a fixed 12-digit
    /// approximation.
    pub fn pi_units_string(&self) -> String {
        let (int, frac, neg) = self.decimal_parts();
        let sign = if neg { "-" } else { "" };
        match frac {
            Some(f) if !f.is_empty() => format!("{sign}{int}.{f}"),
            Some(_) => format!("{sign}{int}"),
            None => {
                let t: DoubleFloat<f64> = self.pi_units_dd();
                format!("{:.12}", t.to_f())
            }
        }
    }

    /// Splits `|p|/q` into integer digits and exact fractional digits when
    /// the denominator is of the form `2^a 5^b`.
    fn decimal_parts(&self) -> (String, Option<String>, bool) {
        let neg = self.p.is_negative();
        let mag = self.p.magnitude().clone();
        let mut q = self.q;
        let mut a = 0u32;
        let mut b = 0u32;
        while q % 2 == 0 {
            q /= 2;
            a += 1;
        }
        while q % 5 == 0 {
            q /= 5;
            b += 1;
        }
        if q != 1 {
            return (String::new(), None, neg);
        }
        // p/q = p * 2^(d-a) * 5^(d-b) / 10^d with d = max(a, b)
        let d = a.max(b);
        let scale = BigUint::from(2u32).pow(d - a) * BigUint::from(5u32).pow(d - b);
        let scaled = mag * scale;
        let ten_d = BigUint::from(10u32).pow(d);
        let (int, frac) = scaled.div_rem(&ten_d);
        let frac_str = if d == 0 {
            String::new()
        } else {
            let raw = format!("{:0>width$}", frac.to_string(), width = d as usize);
            raw.trim_end_matches('0').to_string()
        };
        (int.to_string(), Some(frac_str), neg)
    }
}

impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*pi", self.pi_units_string())
    }
}

/// Parses a decimal multiple of pi: `"8203872394818031742687.5"`,
/// `"-0.1"`, `"3596987.431"`. At most 18 fractional digits.
impl FromStr for PiRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let orig = s;
        let s = s.trim();
        let (neg, s) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        if s.is_empty() {
            return Err(Error::ParsePi(orig.to_string()));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::ParsePi(orig.to_string()));
        }
        let valid = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if !valid(int_part) || !valid(frac_part) {
            return Err(Error::ParsePi(orig.to_string()));
        }
        if frac_part.len() > 18 {
            return Err(Error::domain("at most 18 fractional digits supported"));
        }
        let digits = format!("{int_part}{frac_part}");
        let digits = if digits.is_empty() { "0".to_string() } else { digits };
        let mut p = BigInt::parse_bytes(digits.as_bytes(), 10)
            .ok_or_else(|| Error::ParsePi(orig.to_string()))?;
        if neg {
            p = -p;
        }
        let q = 10u64.pow(frac_part.len() as u32);
        PiRational::new(p, q)
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Converts a non-negative big integer to a paired float, exact while the
/// value fits in twice the native significand.
fn biguint_to_dd<F: Scalar>(v: &BigUint) -> DoubleFloat<F> {
    if let Some(small) = v.to_u128() {
        return DoubleFloat::from_u128(small);
    }
    let approx = v.to_f64().unwrap_or(f64::INFINITY);
    let hi = F::from_f64(approx).unwrap();
    if !approx.is_finite() {
        return DoubleFloat::from_f(hi);
    }
    // residue v - hi as a signed big integer, then its nearest float
    let d = BigInt::from(v.clone()) - f64_to_bigint(hi.to_f64().unwrap());
    let lo = F::from_f64(d.to_f64().unwrap_or(0.0)).unwrap();
    DoubleFloat::norm(hi, lo)
}

/// Exact conversion of an integral float back to a big integer.
fn f64_to_bigint(v: f64) -> BigInt {
    debug_assert!(v.fract() == 0.0);
    let (m, e, s) = integer_decode(v);
    let mut b = BigInt::from(m);
    if e >= 0 {
        b <<= e as usize;
    } else {
        b >>= (-e) as usize;
    }
    if s < 0 {
        -b
    } else {
        b
    }
}

fn integer_decode(v: f64) -> (u64, i16, i8) {
    let bits = v.to_bits();
    let sign: i8 = if bits >> 63 == 0 { 1 } else { -1 };
    let mut exponent = ((bits >> 52) & 0x7ff) as i16;
    let mantissa = if exponent == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
    };
    exponent -= 1075;
    (mantissa, exponent, sign)
}

/// A phase reduced to `t in [0, 1]` (units of pi) plus the sign to apply
/// after the kernel.
///
/// Keeping the sign structural instead of materializing `2 - t` (whose
/// paired-float rounding could differ between `x` and `-x`) makes
/// `sin_pi(reduce(-x, n)) == -sin_pi(reduce(x, n))` exact by construction.
#[derive(Clone, Copy, Debug)]
pub struct ReducedPhase<F> {
    /// Phase over pi, folded into `[0, 1]`.
    pub t: DoubleFloat<F>,
    /// Whether the sine must be negated.
    pub negate: bool,
}

impl<F: Scalar> ReducedPhase<F> {
    /// Folds a phase `t in [0, 2)` (units of pi) into `[0, 1]` with the
    /// sign carried separately. Both fold steps are exact: `t - 1` for
    /// `t in [1, 2)` is Sterbenz-exact on the high word and leaves the low
    /// word untouched.
    pub fn fold(t: DoubleFloat<F>, negate: bool) -> Self {
        let one = F::one();
        if t.hi() >= one && !(t.hi() == one && t.lo() < F::zero()) {
            // t in [1, 2): sin(pi t) = -sin(pi (t - 1))
            let hi = t.hi() - one;
            let folded = DoubleFloat::norm(hi, t.lo());
            ReducedPhase { t: folded, negate: !negate }
        } else {
            ReducedPhase { t, negate }
        }
    }

    /// `sin(pi * t)` with the stored sign applied.
    pub fn sin_pi(self) -> F {
        let v = sin_pi_01(self.t);
        if self.negate {
            -v
        } else {
            v
        }
    }

    /// `cos(pi * t)` honoring the stored sign convention: the reducer's
    /// `negate` flag records a phase shift by pi (or reflection t -> 2 - t),
    /// under which the cosine of the *original* phase is recovered as
    /// `-cos` (shift) only for the shift case. Reduction in this crate only
    /// ever produces the shift form, so `negate` maps to a plain negation.
    pub fn cos_pi(self) -> F {
        let v = cos_pi_01(self.t);
        if self.negate {
            -v
        } else {
            v
        }
    }
}

/// `sin(pi * t)` for `t in [0, 1]` carried as a paired float.
///
/// Folds to `[0, 1/2]` using the exact reflection `1 - t`, handles the
/// endpoints and midpoint exactly, and evaluates the kernel as
/// `sin(y.hi) + y.lo * cos(y.hi)` after the exact scale by pi.
fn sin_pi_01<F: Scalar>(t: DoubleFloat<F>) -> F {
    let zero = F::zero();
    let one = F::one();
    let half = F::from_f64(0.5).unwrap();
    if t.hi() == zero && t.lo() == zero {
        return zero;
    }
    if t.hi() == one && t.lo() == zero {
        return zero;
    }
    if t.hi() == half && t.lo() == zero {
        return one;
    }
    // reflect t in (1/2, 1] to 1 - t: exact by Sterbenz on the high word
    let y = if t.hi() > half || (t.hi() == half && t.lo() > zero) {
        DoubleFloat::norm(one - t.hi(), -t.lo())
    } else {
        t
    };
    sin_pi_kernel(y)
}

/// `cos(pi * t)` for `t in [0, 1]`: shift by an exact half and reuse the
/// sine fold, `cos(pi t) = sin(pi (t + 1/2))` with the wrap at 1 exact.
fn cos_pi_01<F: Scalar>(t: DoubleFloat<F>) -> F {
    let half = F::from_f64(0.5).unwrap();
    let one = F::one();
    let shifted_hi = t.hi() + half; // exact: both in [0, 1], result in [1/2, 3/2]
    let shifted = DoubleFloat::norm(shifted_hi, t.lo());
    let p = ReducedPhase::fold(shifted, false);
    debug_assert!(p.t.hi() <= one);
    p.sin_pi()
}

/// Core kernel on `t in [0, 1/2]`: scale by pi in paired precision, then
/// one correction term for the low word.
fn sin_pi_kernel<F: Scalar>(t: DoubleFloat<F>) -> F {
    // y = pi * t in paired precision
    let (p, e) = two_prod(F::PI_HI, t.hi());
    let e = e + (F::PI_HI * t.lo() + F::PI_LO * t.hi());
    let (yh, yl) = two_sum(p, e);
    yh.sin() + yl * yh.cos()
}

/// Magnitude of the quotient `s = |p| div (2q)`, stored at the narrowest
/// width that holds it so the per-`n` modulus stays cheap.
#[derive(Clone, Debug)]
enum Magnitude {
    Small(u64),
    Wide(u128),
    Big(BigUint),
}

/// Per-argument reducer computing `x/n mod 2*pi` exactly for `x = (p/q)*pi`.
///
/// Factors `|p| = 2*q*s + r0` once; each `reduce(n)` then costs one
/// `s mod n` at the stored width plus a handful of native operations.
#[derive(Clone, Debug)]
pub struct ArgReducer {
    q: u64,
    r0: u64,
    s: Magnitude,
    negate: bool,
}

impl ArgReducer {
    pub fn new(x: &PiRational) -> Self {
        let negate = x.p.is_negative();
        let mag = x.p.magnitude();
        let two_q = BigUint::from(2 * x.q as u128);
        let (s, r0) = mag.div_rem(&two_q);
        let r0 = r0.to_u64().expect("r0 < 2q <= 2e18 fits u64");
        let s = match s.to_u64() {
            Some(v) => Magnitude::Small(v),
            None => match s.to_u128() {
                Some(v) => Magnitude::Wide(v),
                None => Magnitude::Big(s),
            },
        };
        ArgReducer { q: x.q, r0, s, negate }
    }

    pub fn denom(&self) -> u64 {
        self.q
    }

    /// `x/n mod 2*pi` as a folded phase. `n >= 1`.
    ///
    /// With `|p| = 2q*s + r0`: `|p| mod 2qn = 2q*(s mod n) + r0`, and the
    /// phase over pi is that value divided by `q*n`, always in `[0, 2)`.
    #[inline]
    pub fn reduce<F: Scalar>(&self, n: u64) -> ReducedPhase<F> {
        debug_assert!(n >= 1);
        let s_mod = match &self.s {
            Magnitude::Small(s) => (s % n) as u128,
            Magnitude::Wide(s) => s % n as u128,
            Magnitude::Big(s) => (s % BigUint::from(n)).to_u128().expect("mod n fits"),
        };
        // r = |p| mod 2qn < 2qn <= 2e18 * n; fits u128 for all n < 2^64
        let r = 2 * self.q as u128 * s_mod + self.r0 as u128;
        let qn = self.q as u128 * n as u128;
        let t = DoubleFloat::ratio_u128(r, qn);
        ReducedPhase::fold(t, self.negate)
    }

    /// `sin(x/n)` through the exact reduction.
    #[inline]
    pub fn sin_over<F: Scalar>(&self, n: u64) -> F {
        self.reduce::<F>(n).sin_pi()
    }
}

/// Fractional part of `sqrt(a/b)` as a paired float, `a, b` exact integers.
///
/// Scales to `v = floor(a * 2^128 / b)`, takes the integer square root
/// `s = floor(sqrt(v))` (so `s = sqrt(a/b) * 2^64` truncated), and returns
/// `(s mod 2^64) / 2^64`. Absolute error below `2^-62`.
pub fn frac_sqrt<F: Scalar>(a: &BigUint, b: &BigUint) -> DoubleFloat<F> {
    assert!(!b.is_zero(), "denominator must be positive");
    let v = (a << 128u32) / b;
    let s = v.sqrt();
    let frac_bits = (&s & BigUint::from(u64::MAX)).to_u64().unwrap();
    DoubleFloat::from_u64(frac_bits).ldexp(-64)
}
