//! Evaluators for Q(x) = sum_{n>=1} sin(x/n)/n at increasing scale.
//!
//! Four algorithms trade work for reach:
//!
//! * [`q_direct`]: O(x) terms plus a Taylor tail, the reference evaluator
//!   for moderate arguments.
//! * [`q_half`]: O(x^(1/2+eps)) terms with an Euler-Maclaurin tail built
//!   from the sine integral and closed-form derivative polynomials.
//! * [`q_third`]: O(x^(1/3)) terms; the tail is resummed into a
//!   stationary-phase series whose phases come from exact integer square
//!   roots, so it stays meaningful at x ~ 10^22.
//! * [`q_trunc`]: O(x^eps) terms plus pi/2, with a slowly decaying but
//!   rigorous error envelope.
//!
//! All evaluators take the argument as an exact rational multiple of pi
//! and share one deterministic summation kernel: terms are grouped into
//! fixed blocks aligned to absolute indices, each block is summed with
//! compensation, and block totals are merged along a fixed-shape tree.
//! The result is bit-identical for every worker count.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact_args::{ArgReducer, PiRational};
use crate::scalar::{DoubleFloat, KahanSum, Scalar};
use crate::special::{bernoulli, g_phase_combo, j0_phase_term_inner, pochhammer, si_phased};

/// Which evaluator produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Direct,
    Half,
    Third,
    Trunc,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algo::Direct => "direct",
            Algo::Half => "half",
            Algo::Third => "third",
            Algo::Trunc => "trunc",
        })
    }
}

/// An evaluator together with its tuning parameters, ready to dispatch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlgoSpec {
    Direct(DirectParams),
    /// Main cutoff x^(1/2+eps), `em_terms` Euler-Maclaurin corrections.
    Half { eps: f64, em_terms: u32 },
    /// Balanced cutoffs N = M = (x/2pi)^(1/3).
    Third,
    /// Cube-root machinery with a caller-chosen main cutoff; the phase
    /// cutoff follows as M = x/(2 pi n^2).
    ThirdSplit { n: f64 },
    /// Main cutoff x^eps, tail replaced by its mean value pi/2.
    Trunc { eps: f64 },
}

/// Tuning for [`q_direct`].
///
/// `n`: main cutoff; `None` picks max(floor(x), 1000). `em_terms` feeds
/// the tail coefficients [`coeff_c`]; `k_max` is the last Taylor order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DirectParams {
    pub n: Option<u64>,
    pub em_terms: u32,
    pub k_max: u32,
}

impl Default for DirectParams {
    fn default() -> Self {
        DirectParams { n: None, em_terms: 6, k_max: 9 }
    }
}

/// One evaluation: the value plus enough metadata to judge it.
///
/// `err_heuristic` is a crude a-priori (or for `Direct` a-posteriori)
/// error scale, not a bound. `n_terms_main` counts sine terms summed
/// directly; `n_terms_phase` counts stationary-phase corrections.
#[derive(Clone, Copy, Debug)]
pub struct ApproxResult {
    pub value: f64,
    pub algo: Algo,
    pub n_terms_main: u64,
    pub n_terms_phase: u64,
    pub err_heuristic: f64,
}

/// Block size of the deterministic summation kernel. Blocks are aligned
/// to absolute term indices, so the partition of any range is unique.
const SUM_CHUNK: u64 = 1 << 16;

/// Sums `term(n)` for `n_lo..=n_hi` with a fixed, worker-independent
/// rounding pattern: Neumaier compensation inside each aligned block,
/// then an in-order pairwise merge of the block (sum, compensation)
/// pairs in double-double arithmetic. The merge-tree shape depends only
/// on the block count, so the result is bit-identical for any `workers`.
fn chunked_compensated_sum<F, T>(term: T, n_lo: u64, n_hi: u64, workers: usize) -> DoubleFloat<F>
where
    F: Scalar,
    T: Fn(u64) -> F + Sync,
{
    if n_lo > n_hi {
        return DoubleFloat::zero();
    }
    let eval_chunk = |c: u64| -> (F, F) {
        let lo = (c * SUM_CHUNK).max(n_lo);
        let hi = ((c + 1) * SUM_CHUNK - 1).min(n_hi);
        let mut acc = KahanSum::new();
        for n in lo..=hi {
            acc.add(term(n));
        }
        acc.parts()
    };
    let chunks: Vec<u64> = (n_lo / SUM_CHUNK..=n_hi / SUM_CHUNK).collect();
    let parts: Vec<(F, F)> = if workers <= 1 || chunks.len() < 2 {
        chunks.iter().map(|&c| eval_chunk(c)).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| chunks.par_iter().map(|&c| eval_chunk(c)).collect()),
            // can only fail on thread-spawn exhaustion; the serial path
            // computes the identical result
            Err(_) => chunks.iter().map(|&c| eval_chunk(c)).collect(),
        }
    };
    let mut level: Vec<DoubleFloat<F>> =
        parts.into_iter().map(|(s, c)| DoubleFloat::norm(s, c)).collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|p| if p.len() == 2 { p[0].add(p[1]) } else { p[0] })
            .collect();
    }
    level[0]
}

/// Sum of sin(x/n)/n over `n_lo..=n_hi` (empty ranges give zero, indices
/// below 1 are clamped). Every sine is evaluated through the exact
/// argument reduction, so the sum is meaningful at any magnitude of `x`;
/// the summation order is fixed and worker-independent.
pub fn partial_sum<F: Scalar>(x: &PiRational, n_lo: u64, n_hi: u64, workers: usize) -> DoubleFloat<F> {
    let red = ArgReducer::new(x);
    partial_sum_with(&red, n_lo, n_hi, workers)
}

pub(crate) fn partial_sum_with<F: Scalar>(
    red: &ArgReducer,
    n_lo: u64,
    n_hi: u64,
    workers: usize,
) -> DoubleFloat<F> {
    let lo = n_lo.max(1);
    if lo > n_hi {
        return DoubleFloat::zero();
    }
    chunked_compensated_sum(
        |n| red.sin_over::<F>(n) / F::from_u64(n).unwrap(),
        lo,
        n_hi,
        workers,
    )
}

fn fact_f64(k: u32) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

/// Largest integer strictly below `b` (0 if there is none at or above 1).
pub(crate) fn strict_below(b: f64) -> u64 {
    let f = b.floor();
    let k = if f == b { f - 1.0 } else { f };
    if k < 1.0 {
        0
    } else {
        k as u64
    }
}

/// Tail coefficient of the direct evaluator:
///
/// ```text
/// c_k(n) = 1/(2k+1) + 1/(2n)
///        + sum_{m=1}^{em_terms-1} B_2m (2k+2)_(2m-1) / (2m)! / n^(2m)
/// ```
///
/// so that sum_{j>=n} sin(x/j)/j = sum_k (-1)^k c_k(n)/(2k+1)! (x/n)^(2k+1)
/// up to the dropped Euler-Maclaurin orders. As n grows, c_k(n) falls
/// back to the plain Taylor weight 1/(2k+1).
pub fn coeff_c(k: u32, n: u64, em_terms: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("tail coefficient needs a cutoff n >= 1"));
    }
    let mut c = 1.0 / (2 * k + 1) as f64 + 1.0 / (2.0 * n as f64);
    for m in 1..em_terms {
        let b = bernoulli(2 * m)?;
        let bf = *b.numer() as f64 / *b.denom() as f64;
        let poch = pochhammer((2 * k + 2) as i64, 2 * m - 1);
        let poch_f = num_traits::ToPrimitive::to_f64(&poch).unwrap_or(f64::INFINITY);
        c += bf * poch_f / fact_f64(2 * m) * (n as f64).powi(-2 * m as i32);
    }
    Ok(c)
}

/// Direct evaluation: sum the first `n`-1 sine terms, then absorb the
/// entire tail into a short Taylor series with Euler-Maclaurin-corrected
/// coefficients. With default parameters the result carries roughly 15
/// digits; `err_heuristic` reports the last Taylor term plus a rounding
/// floor. Work is O(x), so arguments above 1e8 are refused.
pub fn q_direct(x: &PiRational, params: &DirectParams, workers: usize) -> Result<ApproxResult> {
    if x.is_negative() {
        let mut r = q_direct(&x.neg(), params, workers)?;
        r.value = -r.value;
        return Ok(r);
    }
    let x_f = x.to_f64();
    if x_f > 1e8 {
        return Err(Error::domain(format!(
            "direct evaluation is O(x) work; refusing x ~ {x_f:.3e} (limit 1e8)"
        )));
    }
    let n_cut = match params.n {
        Some(0) => return Err(Error::domain("direct cutoff must be at least 1")),
        Some(n) => n,
        None => (x_f.floor() as u64).max(1000),
    };
    let red = ArgReducer::new(x);
    let main: DoubleFloat<f64> = partial_sum_with(&red, 1, n_cut - 1, workers);

    // z = x/n exactly, then the corrected Taylor series in z
    let z = x
        .pi_units_dd::<f64>()
        .div(DoubleFloat::from_u64(n_cut))
        .mul(DoubleFloat::pi());
    let zsq = z.mul(z);
    let mut pow = z;
    let mut taylor = DoubleFloat::zero();
    let mut last = 0.0f64;
    for k in 0..=params.k_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * coeff_c(k, n_cut, params.em_terms)? / fact_f64(2 * k + 1);
        let term = pow.mul_f(coef);
        taylor = taylor.add(term);
        last = term.to_f().abs();
        pow = pow.mul(zsq);
    }

    Ok(ApproxResult {
        value: main.add(taylor).to_f(),
        algo: Algo::Direct,
        n_terms_main: n_cut - 1,
        n_terms_phase: 0,
        err_heuristic: last + 4.0 * f64::EPSILON * (n_cut as f64).ln().max(1.0),
    })
}

/// Square-root evaluation: main cutoff N = floor(x^(1/2+eps)), then the
/// tail via the sine integral and `em_terms` Euler-Maclaurin corrections
/// whose oscillatory parts reuse the exactly reduced phase of x/N.
/// Requires x >= 100 and 0 < eps < 1/2. The heuristic error scale is
/// x^(-1/2-(4 em_terms + 3) eps).
pub fn q_half(x: &PiRational, eps: f64, em_terms: u32, workers: usize) -> Result<ApproxResult> {
    if x.is_negative() {
        let mut r = q_half(&x.neg(), eps, em_terms, workers)?;
        r.value = -r.value;
        return Ok(r);
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain("cutoff exponent must satisfy 0 < eps < 1/2"));
    }
    let x_f = x.to_f64();
    if x_f < 100.0 {
        return Err(Error::domain("square-root evaluator needs x >= 100"));
    }
    let n_cut = x_f.powf(0.5 + eps).floor() as u64;
    let red = ArgReducer::new(x);
    let main: DoubleFloat<f64> = partial_sum_with(&red, 1, n_cut - 1, workers);

    // sin, cos of y = x/n_cut from the exact reduction; y itself as a
    // double-double for the sine-integral branch cut
    let ph = red.reduce::<f64>(n_cut);
    let sin_y = ph.sin_pi();
    let cos_y = ph.cos_pi();
    let y = x
        .pi_units_dd::<f64>()
        .div(DoubleFloat::from_u64(n_cut))
        .mul(DoubleFloat::pi());
    let si = si_phased(y, sin_y, cos_y);

    let y_f = y.to_f();
    let mut em = 0.0f64;
    for m in 1..=em_terms {
        let b = bernoulli(2 * m)?;
        let bf = *b.numer() as f64 / *b.denom() as f64;
        em += bf / fact_f64(2 * m)
            * (n_cut as f64).powi(-2 * m as i32)
            * g_phase_combo(m - 1, y_f, sin_y, cos_y);
    }

    let value = main
        .add_f(sin_y / (2.0 * n_cut as f64))
        .add_f(si)
        .add_f(-em)
        .to_f();
    Ok(ApproxResult {
        value,
        algo: Algo::Half,
        n_terms_main: n_cut - 1,
        n_terms_phase: 0,
        err_heuristic: x_f.powf(-(0.5 + (4.0 * em_terms as f64 + 3.0) * eps)),
    })
}

/// Cube-root evaluation with caller-chosen main cutoff: sums sin(x/n)/n
/// for n < `n_cut`, adds the tail mean pi/2, and corrects with the
/// stationary-phase terms m < M = x/(2 pi n_cut^2). Each phase is an
/// exact integer square root, so the corrections survive arbitrary
/// argument magnitude. Requires x >= 1e4 and M >= 1 (at
/// n_cut = sqrt(x/2pi) the correction sum is exactly empty).
pub fn q_third_split(x: &PiRational, n_cut: f64, workers: usize) -> Result<ApproxResult> {
    if x.is_negative() {
        let mut r = q_third_split(&x.neg(), n_cut, workers)?;
        r.value = -r.value;
        return Ok(r);
    }
    let x_f = x.to_f64();
    if x_f < 1e4 {
        return Err(Error::domain("cube-root evaluator needs x >= 1e4"));
    }
    if !n_cut.is_finite() || n_cut < 1.0 {
        return Err(Error::domain("main cutoff must be a finite real >= 1"));
    }
    let m_cut = x_f / (2.0 * std::f64::consts::PI * n_cut * n_cut);
    if m_cut < 1.0 {
        return Err(Error::domain(format!(
            "phase cutoff {m_cut:.3} is below 1; lower the main cutoff"
        )));
    }
    let n_hi = strict_below(n_cut);
    let m_hi = strict_below(m_cut);

    let red = ArgReducer::new(x);
    let main: DoubleFloat<f64> = partial_sum_with(&red, 1, n_hi, workers);
    let p_mag = x.numer().magnitude();
    let q_big = BigUint::from(x.denom());
    let phase: DoubleFloat<f64> = chunked_compensated_sum(
        |m| j0_phase_term_inner(m, p_mag, &q_big, x_f),
        1,
        m_hi,
        workers,
    );

    Ok(ApproxResult {
        value: main.add(DoubleFloat::pi().mul_f(0.5)).add(phase).to_f(),
        algo: Algo::Third,
        n_terms_main: n_hi,
        n_terms_phase: m_hi,
        err_heuristic: x_f.powf(-1.0 / 3.0) * x_f.ln(),
    })
}

/// Cube-root evaluation at the balanced cutoff N = M = (x/2pi)^(1/3),
/// the cheapest configuration with the stated x^(-1/3) ln x error scale.
pub fn q_third(x: &PiRational, workers: usize) -> Result<ApproxResult> {
    let x_f = x.to_f64().abs();
    if x_f < 1e4 {
        return Err(Error::domain("cube-root evaluator needs x >= 1e4"));
    }
    q_third_split(x, (x_f / (2.0 * std::f64::consts::PI)).cbrt(), workers)
}

/// Truncated evaluation: sum n < x^eps and replace everything else by
/// its mean pi/2. Cheap and robust at any magnitude; the error decays
/// only like x^(-delta) with delta = eps 2^(-1/eps). Requires x >= 10
/// and 0 < eps < 1/2; the n = 1 term is always kept.
pub fn q_trunc(x: &PiRational, eps: f64, workers: usize) -> Result<ApproxResult> {
    if x.is_negative() {
        let mut r = q_trunc(&x.neg(), eps, workers)?;
        r.value = -r.value;
        return Ok(r);
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain("cutoff exponent must satisfy 0 < eps < 1/2"));
    }
    let x_f = x.to_f64();
    if x_f < 10.0 {
        return Err(Error::domain("truncated evaluator needs x >= 10"));
    }
    let n_hi = strict_below(x_f.powf(eps)).max(1);
    let red = ArgReducer::new(x);
    let main: DoubleFloat<f64> = partial_sum_with(&red, 1, n_hi, workers);
    let delta = eps * (2.0f64).powf(-1.0 / eps);
    Ok(ApproxResult {
        value: main.add(DoubleFloat::pi().mul_f(0.5)).to_f(),
        algo: Algo::Trunc,
        n_terms_main: n_hi,
        n_terms_phase: 0,
        err_heuristic: x_f.powf(-delta),
    })
}

/// Dispatches to the evaluator named by `spec`.
pub fn evaluate(x: &PiRational, spec: &AlgoSpec, workers: usize) -> Result<ApproxResult> {
    match *spec {
        AlgoSpec::Direct(p) => q_direct(x, &p, workers),
        AlgoSpec::Half { eps, em_terms } => q_half(x, eps, em_terms, workers),
        AlgoSpec::Third => q_third(x, workers),
        AlgoSpec::ThirdSplit { n } => q_third_split(x, n, workers),
        AlgoSpec::Trunc { eps } => q_trunc(x, eps, workers),
    }
}
