//! Multiprecision cross-check of the cube-root evaluator (feature `confirm`).
//!
//! [`q_third_mp`] recomputes exactly the truncated sums of [`q_third`]
//! (same cutoffs, term for term) in software floating point with hundreds
//! of bits of mantissa, sharing none of the double-double machinery:
//! argument reduction is redone with plain big-integer remainders and the
//! square-root fractional parts with an integer square root of a scaled
//! radicand. Agreement between the two paths therefore rules out rounding
//! artifacts in the fast path rather than re-running the same code.
//!
//! The price is several microseconds per term, serially. Points near
//! x ~ 1e22 (about 16 million terms on each side) take minutes; treat
//! this as a spot-check tool, not an evaluator.
//!
//! [`q_third`]: crate::approx::q_third

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::approx::strict_below;
use crate::error::{Error, Result};
use crate::exact_args::PiRational;

const RM: RoundingMode = RoundingMode::ToEven;

/// Outcome of a multiprecision confirmation run.
#[derive(Clone, Debug)]
pub struct MpResult {
    /// Decimal scientific notation, truncated to the requested digits.
    pub text: String,
    /// The same value correctly rounded to the nearest double.
    pub value: f64,
    /// Requested decimal digits (the working precision carries ~29 more).
    pub digits: u32,
    pub n_terms_main: u64,
    pub n_terms_phase: u64,
}

/// `v` as a multiprecision float, correctly rounded to precision `p`.
fn big_to_float(v: &BigUint, p: usize) -> BigFloat {
    let mut acc = BigFloat::from_u64(0, p);
    for w in v.to_u64_digits().iter().rev() {
        if !acc.is_zero() {
            acc.set_exponent(acc.exponent().unwrap() + 64);
        }
        acc = acc.add(&BigFloat::from_u64(*w, p), p, RM);
    }
    acc
}

/// Exact scaling by a power of two.
fn scale2(v: &mut BigFloat, k: i32) {
    if !v.is_zero() {
        v.set_exponent(v.exponent().unwrap() + k);
    }
}

/// Truncate the mantissa of `d.dddd...e+k` to `digits` significant digits.
fn trim_significant(s: &str, digits: usize) -> String {
    let (mant, exp) = s.split_once('e').unwrap_or((s, ""));
    let mut out = String::new();
    let mut seen = 0usize;
    for ch in mant.chars() {
        if ch.is_ascii_digit() {
            if seen == digits {
                break;
            }
            seen += 1;
        }
        out.push(ch);
    }
    if !exp.is_empty() {
        out.push('e');
        out.push_str(exp);
    }
    out
}

/// Re-evaluate the cube-root algorithm at its balanced cutoff in
/// multiprecision arithmetic, accurate to at least `digits` decimal
/// digits (20 to 200). The truncation indices match [`q_third`] exactly,
/// so any disagreement beyond the fast path's own rounding is a bug.
///
/// [`q_third`]: crate::approx::q_third
pub fn q_third_mp(x: &PiRational, digits: u32) -> Result<MpResult> {
    if !(20..=200).contains(&digits) {
        return Err(Error::domain("confirmation digits must be in 20..=200"));
    }
    if x.is_negative() {
        let mut r = q_third_mp(&x.neg(), digits)?;
        r.value = -r.value;
        r.text = if let Some(rest) = r.text.strip_prefix('-') {
            rest.to_string()
        } else {
            format!("-{}", r.text)
        };
        return Ok(r);
    }
    let x_f = x.to_f64();
    if x_f < 1e4 {
        return Err(Error::domain("cube-root evaluator needs x >= 1e4"));
    }
    // Same cutoff arithmetic as the fast path, digit for digit.
    let n_cut = (x_f / (2.0 * std::f64::consts::PI)).cbrt();
    let m_cut = x_f / (2.0 * std::f64::consts::PI * n_cut * n_cut);
    let n_hi = strict_below(n_cut);
    let m_hi = strict_below(m_cut);
    if n_hi > 500_000_000 || m_hi > 500_000_000 {
        return Err(Error::domain(
            "confirmation run is serial multiprecision work; refusing more than 5e8 terms per side",
        ));
    }

    // digits * log2(10), plus guard bits so the last requested digit is firm.
    let p = ((digits as usize * 3322 / 1000 + 96).div_ceil(64)) * 64;
    let s_bits = p + 64;
    let mut cc = Consts::new().map_err(|e| Error::domain(format!("mp constants: {e:?}")))?;
    let pi = cc.pi(p, RM);

    let p_mag = x.numer().magnitude();
    let q = x.denom();
    let q_big = BigUint::from(q);

    // Main sum: t = (p mod 2qn)/(qn) in [0, 2), term = sin(pi t)/n.
    let mut main = BigFloat::from_u64(0, p);
    for n in 1..=n_hi {
        let qn = q as u128 * n as u128;
        let r = (p_mag % BigUint::from(2 * qn)).to_u128().unwrap();
        let t = BigFloat::from_u128(r, p).div(&BigFloat::from_u128(qn, p), p, RM);
        let s = t.mul(&pi, p, RM).sin(p, RM, &mut cc);
        main = main.add(&s.div(&BigFloat::from_u64(n, p), p, RM), p, RM);
    }

    // Phase sum: frac(sqrt(2mp/q)) from an integer square root of the
    // radicand scaled by 4^s_bits, then (pi/(2mx))^(1/4) sin(pi(1/4 + 2 frac)).
    let x_bf = big_to_float(p_mag, p)
        .div(&BigFloat::from_u128(q as u128, p), p, RM)
        .mul(&pi, p, RM);
    let mask = (BigUint::one() << s_bits) - BigUint::one();
    let mut quarter = BigFloat::from_u64(1, p);
    scale2(&mut quarter, -2);
    let mut phase = BigFloat::from_u64(0, p);
    for m in 1..=m_hi {
        let scaled = (p_mag * BigUint::from(2 * m) << (2 * s_bits)) / &q_big;
        let mut frac = big_to_float(&(scaled.sqrt() & &mask), p);
        scale2(&mut frac, 1 - s_bits as i32);
        let t = frac.add(&quarter, p, RM);
        let s = t.mul(&pi, p, RM).sin(p, RM, &mut cc);
        let den = x_bf.mul(&BigFloat::from_u64(2 * m, p), p, RM);
        let amp = pi.div(&den, p, RM).sqrt(p, RM).sqrt(p, RM);
        phase = phase.add(&s.mul(&amp, p, RM), p, RM);
    }

    let mut pi_half = pi.clone();
    scale2(&mut pi_half, -1);
    let total = main.add(&pi_half, p, RM).add(&phase, p, RM);

    let full = total
        .format(Radix::Dec, RM, &mut cc)
        .map_err(|e| Error::domain(format!("mp format: {e:?}")))?;
    let value: f64 = full.parse().unwrap_or(f64::NAN);
    Ok(MpResult {
        text: trim_significant(&full, digits as usize),
        value,
        digits,
        n_terms_main: n_hi,
        n_terms_phase: m_hi,
    })
}
