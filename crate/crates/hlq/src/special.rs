//! Special-function kernels: Bernoulli numbers, the sine integral, the
//! derivative structure of `G(u) = sin(1/u)/u`, and the stationary-phase
//! amplitude term used by the cube-root-cost evaluator.

use crate::error::{Error, Result};
use crate::exact_args::{frac_sqrt, PiRational, ReducedPhase};
use crate::scalar::{DoubleFloat, Scalar};
use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

/// Exact rational with 64-bit parts; wide enough for every Bernoulli
/// number this crate needs (through B_24 = -236364091/2730).
pub type Rational64 = Ratio<i64>;

const BERNOULLI_MAX: usize = 24;

fn bernoulli_table() -> &'static Vec<Rational64> {
    static TABLE: OnceLock<Vec<Rational64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // recurrence sum_{j=0}^{m} C(m+1, j) B_j = 0, carried in
        // arbitrary-precision rationals, then narrowed
        let mut big: Vec<BigRational> = Vec::with_capacity(BERNOULLI_MAX + 1);
        big.push(BigRational::one());
        for m in 1..=BERNOULLI_MAX {
            let mut acc = BigRational::zero();
            let mut binom = BigInt::one(); // C(m+1, 0)
            for (j, b) in big.iter().enumerate() {
                acc += BigRational::from_integer(binom.clone()) * b;
                // C(m+1, j+1) = C(m+1, j) * (m+1-j) / (j+1)
                binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
            }
            let bm = -acc / BigRational::from_integer(BigInt::from(m + 1));
            big.push(bm);
        }
        big.iter()
            .map(|b| {
                let n = b.numer().to_i64().expect("Bernoulli numerator fits i64");
                let d = b.denom().to_i64().expect("Bernoulli denominator fits i64");
                Rational64::new(n, d)
            })
            .collect()
    })
}

/// Bernoulli number `B_m` for even `m` with `2 <= m <= 24`.
pub fn bernoulli(m: u32) -> Result<Rational64> {
    if m % 2 != 0 || m < 2 || m as usize > BERNOULLI_MAX {
        return Err(Error::domain(format!(
            "Bernoulli index must be even in [2, {BERNOULLI_MAX}], got {m}"
        )));
    }
    Ok(bernoulli_table()[m as usize])
}

/// Rising factorial `a (a+1) ... (a+r-1)`; the empty product is 1.
pub fn pochhammer(a: i64, r: u32) -> BigInt {
    let mut out = BigInt::one();
    for i in 0..r as i64 {
        out *= BigInt::from(a + i);
    }
    out
}

/// `Si(y)` by its Taylor series, summed in paired floats. Intended for
/// `0 <= y <= 40`; beyond that the leading terms overflow the useful range.
pub fn si_series(y: f64) -> f64 {
    debug_assert!((0.0..=40.0).contains(&y), "series domain is [0, 40]");
    si_series_dd(DoubleFloat::from_f(y)).to_f()
}

fn si_series_dd<F: Scalar>(y: DoubleFloat<F>) -> DoubleFloat<F> {
    if y.hi() == F::zero() && y.lo() == F::zero() {
        return DoubleFloat::zero();
    }
    let y2 = y.mul(y);
    let mut term = y; // y^(2k+1) / (2k+1)!
    let mut acc = y; // k = 0 contribution: y / 1
    let mut k = 0u32;
    loop {
        k += 1;
        let denom = F::from_u32((2 * k) * (2 * k + 1)).unwrap();
        term = term.mul(y2).div(DoubleFloat::from_f(denom)).neg();
        let contrib = term.div(DoubleFloat::from_f(F::from_u32(2 * k + 1).unwrap()));
        acc = acc.add(contrib);
        let tiny = F::from_f64(1e-34).unwrap();
        if contrib.hi().abs() < tiny * acc.hi().abs() || k > 120 {
            return acc;
        }
    }
}

/// `Si(y)` by the large-argument expansion with a fixed truncation:
///
/// ```text
/// Si(y) = pi/2 - cos(y) * sum_{k=0}^{M} (-1)^k (2k)!   / y^(2k+1)
///                - sin(y) * sum_{k=0}^{M} (-1)^k (2k+1)! / y^(2k+2)
/// ```
///
/// `m = -1` returns `pi/2` (both sums empty). The series is asymptotic:
/// past the smallest term it diverges, so fixed `m` has a floor error
/// near `y = 2m` (about 1.2e-8 at `y = 20`, `m = 4`). The caller owns the
/// regime choice; [`si`] picks the truncation adaptively instead.
pub fn si_asymptotic(y: f64, m: i32) -> f64 {
    if m < 0 {
        return FRAC_PI_2;
    }
    let (p, q) = si_tail_sums(y, Some(m as u32));
    FRAC_PI_2 - y.cos() * p - y.sin() * q
}

/// The two tail sums of the large-argument expansion. `fixed = Some(M)`
/// truncates at `k = M`; `None` stops adaptively before the terms start
/// growing (the asymptotic optimum) or once they stop mattering.
fn si_tail_sums(y: f64, fixed: Option<u32>) -> (f64, f64) {
    let y2 = y * y;
    let mut p = 0.0f64;
    let mut q = 0.0f64;
    let mut tp = 1.0 / y; // (2k)! / y^(2k+1)
    let mut k = 0u32;
    loop {
        p += tp;
        q += tp * (2 * k + 1) as f64 / y;
        match fixed {
            Some(m) if k >= m => break,
            _ => {}
        }
        // next magnitude: tp * (2k+1)(2k+2) / y^2
        let next = tp * ((2 * k + 1) * (2 * k + 2)) as f64 / y2;
        if fixed.is_none() && (next.abs() >= tp.abs() || next.abs() < 1e-18 * p.abs()) {
            break;
        }
        tp = -next;
        k += 1;
        if k > 60 {
            break;
        }
    }
    (p, q)
}

/// `Si(y)` for any `y >= 0`: Taylor series up to the crossover at 30,
/// adaptively truncated asymptotic expansion beyond. Both branches are
/// accurate to a few 1e-15 absolute over their regime.
pub fn si(y: f64) -> f64 {
    if y <= 30.0 {
        si_series(y)
    } else {
        let (p, q) = si_tail_sums(y, None);
        FRAC_PI_2 - y.cos() * p - y.sin() * q
    }
}

/// `Si` of a phase known to high precision: `y` as a paired float plus its
/// exactly reduced sine and cosine. This is the form the square-root-cost
/// evaluator needs, where `y = x/N` is far too large for native reduction.
pub(crate) fn si_phased(y: DoubleFloat<f64>, sin_y: f64, cos_y: f64) -> f64 {
    if y.hi() <= 30.0 {
        si_series_dd(y).to_f()
    } else {
        let (p, q) = si_tail_sums(y.to_f(), None);
        FRAC_PI_2 - cos_y * p - sin_y * q
    }
}

/// Integer-coefficient polynomial pair `(pc, ps)` reconstructing an odd
/// derivative of `G(u) = sin(1/u)/u`:
///
/// ```text
/// G^(2j+1)(u) = u^(-2j-2) [ cos(1/u) pc(1/u) + sin(1/u) ps(1/u) ]
/// ```
///
/// with `deg pc = 2j+1` and `deg ps = 2j`. Coefficients are exact and fit
/// `i64` only through `j = 8`; `i128` holds them through `j = 12`
/// (largest about 8.2e27).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GDerivPolyPair {
    /// Derivative order `2j+1`.
    pub order: u32,
    /// Cosine-factor coefficients, ascending powers.
    pub pc: Vec<i128>,
    /// Sine-factor coefficients, ascending powers.
    pub ps: Vec<i128>,
}

pub const G_POLY_MAX_J: u32 = 12;

/// One differentiation step of `u^(-r)[cos(1/u)a(1/u) + sin(1/u)b(1/u)]`:
/// with `v = 1/u`, the new pair is `a+ = -r a - v a' - v b` and
/// `b+ = -r b + v a - v b'`, at exponent `r + 1`.
fn g_poly_step(a: &[i128], b: &[i128], r: i128) -> (Vec<i128>, Vec<i128>) {
    let n = a.len().max(b.len()) + 1;
    let mut ap = vec![0i128; n];
    let mut bp = vec![0i128; n];
    for (i, &c) in a.iter().enumerate() {
        ap[i] -= r * c; // -r a
        if i > 0 {
            ap[i] -= i as i128 * c; // -v a': v * (i c v^(i-1)) = i c v^i
        }
        bp[i + 1] += c; // +v a
    }
    for (i, &c) in b.iter().enumerate() {
        bp[i] -= r * c; // -r b
        if i > 0 {
            bp[i] -= i as i128 * c; // -v b'
        }
        ap[i + 1] -= c; // -v b
    }
    while ap.len() > 1 && *ap.last().unwrap() == 0 {
        ap.pop();
    }
    while bp.len() > 1 && *bp.last().unwrap() == 0 {
        bp.pop();
    }
    (ap, bp)
}

fn g_poly_cache() -> &'static Vec<GDerivPolyPair> {
    static CACHE: OnceLock<Vec<GDerivPolyPair>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut out = Vec::with_capacity(G_POLY_MAX_J as usize + 1);
        let mut a: Vec<i128> = vec![0];
        let mut b: Vec<i128> = vec![1];
        let mut order = 0u32;
        while order < 2 * G_POLY_MAX_J + 1 {
            let (na, nb) = g_poly_step(&a, &b, (order + 1) as i128);
            a = na;
            b = nb;
            order += 1;
            if order % 2 == 1 {
                out.push(GDerivPolyPair { order, pc: a.clone(), ps: b.clone() });
            }
        }
        out
    })
}

/// The polynomial pair for derivative order `2j+1`, `0 <= j <= 12`.
pub fn g_deriv_polys(j: u32) -> &'static GDerivPolyPair {
    assert!(j <= G_POLY_MAX_J, "polynomial pairs built through j = {G_POLY_MAX_J}");
    &g_poly_cache()[j as usize]
}

/// `cos_y * pc(y) + sin_y * ps(y)` for the pair of order `2j+1`, with the
/// phase values supplied by the caller (exactly reduced upstream).
pub(crate) fn g_phase_combo(j: u32, y: f64, sin_y: f64, cos_y: f64) -> f64 {
    let pair = g_deriv_polys(j);
    cos_y * horner_dd(&pair.pc, y) + sin_y * horner_dd(&pair.ps, y)
}

fn horner_dd(coeffs: &[i128], v: f64) -> f64 {
    let vd = DoubleFloat::from_f(v);
    let mut acc = DoubleFloat::<f64>::zero();
    for &c in coeffs.iter().rev() {
        acc = acc.mul(vd).add(i128_to_dd(c));
    }
    acc.to_f()
}

fn i128_to_dd(c: i128) -> DoubleFloat<f64> {
    if c >= 0 {
        DoubleFloat::from_u128(c as u128)
    } else {
        DoubleFloat::from_u128(c.unsigned_abs()).neg()
    }
}

/// `G^(order)(u)` for odd `order = 2j+1 <= 25`, via the exact polynomial
/// pair evaluated at `v = 1/u` with compensated Horner.
pub fn g_derivative(u: f64, order: u32) -> Result<f64> {
    if u <= 0.0 {
        return Err(Error::domain("G derivatives evaluated only for u > 0"));
    }
    if order % 2 == 0 || order > 2 * G_POLY_MAX_J + 1 {
        return Err(Error::domain(format!(
            "order must be odd and at most {}, got {order}",
            2 * G_POLY_MAX_J + 1
        )));
    }
    let j = (order - 1) / 2;
    let v = 1.0 / u;
    let combo = g_phase_combo(j, v, v.sin(), v.cos());
    Ok(u.powi(-(order as i32 + 1)) * combo)
}

/// The m-th stationary-phase correction of the cube-root-cost evaluator:
///
/// ```text
/// (pi / (2 m x))^(1/4) * sin(pi/4 + 2 sqrt(2 pi m x))
/// ```
///
/// With `x = (p/q) pi` the phase is `pi/4 + 2 pi sqrt(2 m p / q)`, so only
/// the fractional part of the square root matters mod 2 pi; it is taken
/// with exact integer arithmetic, never via a native square root. The
/// amplitude is native-float (it is smooth and tiny at large `x`).
pub fn j0_phase_term(m: u64, x: &PiRational) -> f64 {
    assert!(m >= 1, "phase index starts at 1");
    assert!(x.numer().is_positive(), "phase terms defined for x > 0");
    j0_phase_term_inner(m, x.numer().magnitude(), &BigUint::from(x.denom()), x.to_f64())
}

/// Same computation with the per-`x` pieces hoisted out, for callers that
/// evaluate millions of phase terms against one argument.
pub(crate) fn j0_phase_term_inner(m: u64, p_mag: &BigUint, q: &BigUint, x_f: f64) -> f64 {
    let radicand = p_mag * BigUint::from(2 * m as u128);
    let frac: DoubleFloat<f64> = frac_sqrt(&radicand, q);
    // t = 1/4 + 2 frac in units of pi, in [1/4, 9/4)
    let mut t = frac.mul_f(2.0).add_f(0.25);
    if t.hi() >= 2.0 {
        // exact: hi in [2, 2.25], so the subtraction is Sterbenz
        t = DoubleFloat::norm(t.hi() - 2.0, t.lo());
    }
    let s = ReducedPhase::fold(t, false).sin_pi();
    let amp = (std::f64::consts::PI / (2.0 * m as f64 * x_f)).sqrt().sqrt();
    amp * s
}
