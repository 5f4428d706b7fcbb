//! Hunting record values of Q(x).
//!
//! Large |Q| needs many of the leading phases x/n to sit near the same
//! odd multiple of pi/2 simultaneously. The constructions here force
//! that through arithmetic: [`big_k`] multiplies the moduli whose prime
//! factors are all 1 mod 4 (the set enumerated by [`gen_set_m`]), and
//! [`hl_point`] turns an index j into the candidate x = (4j+1) K pi / 2
//! (or (4j+3) K pi / 2 for the negative-leaning family). Such x are far
//! too large for float arguments, which is why everything downstream
//! runs on exact rationals times pi.
//!
//! [`scan_hl`] walks an index range, evaluates every candidate, keeps
//! running maximum and minimum records, and appends a checkpoint line
//! after each block so an interrupted scan resumes without recomputation.
//! [`local_extrema_scan`] refines per-period extrema of Q itself at
//! moderate x, and [`verify_integral_identity`] checks the evaluators
//! against the closed form of the integral of Q.

use std::fmt;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;

use crate::approx::{evaluate, q_direct, q_half, AlgoSpec, DirectParams};
use crate::error::{Error, Result};
use crate::exact_args::PiRational;
use crate::scalar::KahanSum;

/// All q in [2, limit] whose prime factors are all congruent 1 mod 4
/// (5, 13, 17, 25, 29, ...). The set is closed under multiplication;
/// products of its primes are exactly the odd numbers representable as
/// a sum of two coprime squares.
pub fn gen_set_m(limit: u64) -> Result<Vec<u64>> {
    if limit > 100_000_000 {
        return Err(Error::domain("sieve limit capped at 1e8"));
    }
    if limit < 2 {
        return Ok(Vec::new());
    }
    let n = limit as usize;
    let mut is_comp = vec![false; n + 1];
    let mut bad = vec![false; n + 1];
    for p in 2..=n {
        if is_comp[p] {
            continue;
        }
        for mult in (2 * p..=n).step_by(p) {
            is_comp[mult] = true;
        }
        if p % 4 != 1 {
            for mult in (p..=n).step_by(p) {
                bad[mult] = true;
            }
        }
    }
    Ok((2..=n).filter(|&q| !bad[q]).map(|q| q as u64).collect())
}

/// K(k): the product of all moduli from [`gen_set_m`] up to 4k+1.
/// Dividing any of them into an odd multiple of K pi/2 leaves the phase
/// on the quarter-circle, which is what aligns the leading terms of Q.
/// Supported for 1 <= k <= 64.
pub fn big_k(k: u32) -> Result<BigUint> {
    if !(1..=64).contains(&k) {
        return Err(Error::domain("construction order limited to 1..=64"));
    }
    let set = gen_set_m(4 * k as u64 + 1)?;
    Ok(set.into_iter().map(BigUint::from).product())
}

/// The two candidate families: `Plus` points x = (4j+1) K pi/2 push the
/// aligned phases toward +1 (large maxima), `Hat` points (4j+3) K pi/2
/// toward -1 (deep minima).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HlConstruction {
    Plus,
    Hat,
}

impl fmt::Display for HlConstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HlConstruction::Plus => "plus",
            HlConstruction::Hat => "hat",
        })
    }
}

impl FromStr for HlConstruction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(HlConstruction::Plus),
            "hat" => Ok(HlConstruction::Hat),
            other => Err(Error::domain(format!("unknown construction family {other:?}"))),
        }
    }
}

fn hl_point_with(kk: &BigUint, j: u64, variant: HlConstruction) -> PiRational {
    let off = match variant {
        HlConstruction::Plus => 1u32,
        HlConstruction::Hat => 3u32,
    };
    let p = (BigUint::from(j) * 4u32 + off) * kk;
    PiRational::new(BigInt::from(p), 2).expect("denominator 2 is always valid")
}

/// The j-th candidate of order k: x = (4j+1) K(k) pi/2 for `Plus`,
/// x = (4j+3) K(k) pi/2 for `Hat`. Requires 1 <= j <= K(k).
pub fn hl_point(k: u32, j: u64, variant: HlConstruction) -> Result<PiRational> {
    let kk = big_k(k)?;
    if j < 1 || BigUint::from(j) > kk {
        return Err(Error::domain(format!("index must satisfy 1 <= j <= K({k})")));
    }
    Ok(hl_point_with(&kk, j, variant))
}

/// A running extreme: the candidate index, the exact argument, and the
/// evaluated value. For [`local_extrema_scan`] the index is the period
/// number instead.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremeRecord {
    pub j: u64,
    pub x: PiRational,
    pub value: f64,
}

/// Knobs of [`scan_hl`]. `checkpoint_every` is the block size between
/// checkpoint lines; `checkpoint` the append-mode state file (resumed
/// from when it already holds matching lines); `workers` the number of
/// threads evaluating a block (the outcome is worker-independent).
#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub checkpoint_every: u64,
    pub checkpoint: Option<PathBuf>,
    pub workers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { checkpoint_every: 1_000_000, checkpoint: None, workers: 1 }
    }
}

/// Progress notifications streamed by [`scan_hl`] as it walks the range.
#[derive(Clone, Debug)]
pub enum ScanEvent<'a> {
    NewMax(&'a ExtremeRecord),
    NewMin(&'a ExtremeRecord),
    BlockDone { j_done: u64 },
}

/// What a scan found, plus bookkeeping about how it got there.
#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub max: ExtremeRecord,
    pub min: ExtremeRecord,
    /// Points evaluated in this run (excludes anything restored).
    pub evaluated: u64,
    /// Last index covered by the checkpoint this run resumed from.
    pub resumed_at: Option<u64>,
}

struct Running {
    max: Option<ExtremeRecord>,
    min: Option<ExtremeRecord>,
}

impl Running {
    /// Strictly-greater / strictly-smaller updates, so the smallest index
    /// wins among ties.
    fn absorb(&mut self, rec: &ExtremeRecord, mut notify: impl FnMut(ScanEvent<'_>)) {
        if self.max.as_ref().is_none_or(|m| rec.value > m.value) {
            self.max = Some(rec.clone());
            notify(ScanEvent::NewMax(rec));
        }
        if self.min.as_ref().is_none_or(|m| rec.value < m.value) {
            self.min = Some(rec.clone());
            notify(ScanEvent::NewMin(rec));
        }
    }
}

/// Scans candidates j in `j_lo..=j_hi` of the order-k construction,
/// evaluating each with `spec` and tracking the extreme records. Blocks
/// of `checkpoint_every` points are evaluated in parallel (each point on
/// one thread, so any worker count gives bit-identical records), then
/// folded in index order. After each block a line
///
/// ```text
/// k variant j_done max_j max_val min_j min_val
/// ```
///
/// is appended to the checkpoint file; a later call with the same k,
/// variant and an overlapping range picks up after the last such line.
/// `on_event` streams new records and block completions.
pub fn scan_hl(
    k: u32,
    variant: HlConstruction,
    j_lo: u64,
    j_hi: u64,
    spec: &AlgoSpec,
    opts: &ScanOptions,
    mut on_event: impl FnMut(ScanEvent<'_>),
) -> Result<ScanOutcome> {
    if j_lo < 1 || j_lo > j_hi {
        return Err(Error::domain("need 1 <= j_lo <= j_hi"));
    }
    if opts.checkpoint_every < 1 {
        return Err(Error::domain("checkpoint block size must be positive"));
    }
    let kk = big_k(k)?;
    if BigUint::from(j_hi) > kk {
        return Err(Error::domain(format!("index range must stay within 1..=K({k})")));
    }

    let mut running = Running { max: None, min: None };
    let mut resumed_at = None;
    if let Some(path) = &opts.checkpoint {
        if let Some(st) = read_checkpoint(path, k, variant, j_lo, j_hi)? {
            running.max = Some(ExtremeRecord {
                j: st.max_j,
                x: hl_point_with(&kk, st.max_j, variant),
                value: st.max_val,
            });
            running.min = Some(ExtremeRecord {
                j: st.min_j,
                x: hl_point_with(&kk, st.min_j, variant),
                value: st.min_val,
            });
            resumed_at = Some(st.j_done);
        }
    }

    let start = match resumed_at {
        Some(done) if done >= j_hi => {
            let max = running.max.take().unwrap();
            let min = running.min.take().unwrap();
            return Ok(ScanOutcome { max, min, evaluated: 0, resumed_at });
        }
        Some(done) => done + 1,
        None => j_lo,
    };

    let mut evaluated = 0u64;
    let mut block_lo = start;
    while block_lo <= j_hi {
        let block_hi = j_hi.min(block_lo + (opts.checkpoint_every - 1));
        let js: Vec<u64> = (block_lo..=block_hi).collect();
        let eval_one = |j: u64| -> Result<f64> {
            Ok(evaluate(&hl_point_with(&kk, j, variant), spec, 1)?.value)
        };
        let values: Vec<Result<f64>> = if opts.workers <= 1 || js.len() < 2 {
            js.iter().map(|&j| eval_one(j)).collect()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(opts.workers).build() {
                Ok(pool) => pool.install(|| js.par_iter().map(|&j| eval_one(j)).collect()),
                Err(_) => js.iter().map(|&j| eval_one(j)).collect(),
            }
        };
        for (j, value) in js.iter().zip(values) {
            let rec = ExtremeRecord { j: *j, x: hl_point_with(&kk, *j, variant), value: value? };
            running.absorb(&rec, &mut on_event);
            evaluated += 1;
        }
        if let Some(path) = &opts.checkpoint {
            let max = running.max.as_ref().unwrap();
            let min = running.min.as_ref().unwrap();
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(
                f,
                "{k} {variant} {block_hi} {} {} {} {}",
                max.j, max.value, min.j, min.value
            )?;
        }
        on_event(ScanEvent::BlockDone { j_done: block_hi });
        block_lo = block_hi + 1;
    }

    Ok(ScanOutcome {
        max: running.max.unwrap(),
        min: running.min.unwrap(),
        evaluated,
        resumed_at,
    })
}

struct CheckpointState {
    j_done: u64,
    max_j: u64,
    max_val: f64,
    min_j: u64,
    min_val: f64,
}

/// Last line of `path` matching (k, variant) whose state is a usable
/// prefix of `j_lo..=j_hi`. A missing file is simply no state.
fn read_checkpoint(
    path: &PathBuf,
    k: u32,
    variant: HlConstruction,
    j_lo: u64,
    j_hi: u64,
) -> Result<Option<CheckpointState>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut found = None;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        let parse = || -> Option<CheckpointState> {
            if t.len() != 7 || t[0].parse::<u32>().ok()? != k || t[1] != variant.to_string() {
                return None;
            }
            Some(CheckpointState {
                j_done: t[2].parse().ok()?,
                max_j: t[3].parse().ok()?,
                max_val: t[4].parse().ok()?,
                min_j: t[5].parse().ok()?,
                min_val: t[6].parse().ok()?,
            })
        };
        match parse() {
            Some(st) => {
                // a state is only a prefix of this scan if it starts at or
                // after j_lo and has not drifted past j_hi
                if st.j_done >= j_lo && st.j_done <= j_hi && st.max_j >= j_lo && st.min_j >= j_lo {
                    found = Some(st);
                }
            }
            None if t[0].parse::<u32>() == Ok(k) && t.get(1) == Some(&variant.to_string().as_str()) => {
                return Err(Error::Checkpoint(format!(
                    "unreadable state at {}:{}",
                    path.display(),
                    idx + 1
                )));
            }
            None => {}
        }
    }
    Ok(found)
}

/// Q at a grid point given in units of pi, on the evaluator appropriate
/// for the magnitude (direct below the square-root evaluator's domain).
fn q_at_pi_units(t: f64) -> Result<f64> {
    let x = PiRational::from_pi_units_approx(t)?;
    if x.to_f64().abs() < 100.0 {
        Ok(q_direct(&x, &DirectParams::default(), 1)?.value)
    } else {
        Ok(q_half(&x, 0.05, 4, 1)?.value)
    }
}

/// Golden-section maximization on [a, b], returning the best point seen.
/// Assumes near-unimodality; on the 1/21-period brackets used below the
/// deviation of Q from its leading sine makes no practical difference.
fn golden_max(f: &(impl Fn(f64) -> Result<f64> + ?Sized), a0: f64, b0: f64, tol: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a0, b0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Best value on a 21-point inclusive grid over [lo, hi] (units of pi),
/// refined by golden section to a width of 1e-3, with `sign` +1 hunting
/// a maximum and -1 a minimum. Returns (t, Q(t)).
fn refine_period(lo: f64, hi: f64, sign: f64) -> Result<(f64, f64)> {
    let f = move |t: f64| -> Result<f64> { Ok(sign * q_at_pi_units(t)?) };
    let step = (hi - lo) / 20.0;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=20usize {
        let v = f(lo + step * i as f64)?;
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = lo + step * (best_i + 1).min(20) as f64;
    let (t, v) = golden_max(&f, a, b, 1e-3)?;
    Ok((t, sign * v))
}

/// Per-period refinement of Q itself at moderate arguments: for each
/// period index n in `n_lo..=n_hi` the leading sine peaks on
/// [2n, 2n+1] pi and dips on [2n+1, 2n+2] pi, so a local maximum and a
/// local minimum are hunted on those intervals (21-point grid, then
/// golden section to 1e-3 of pi). Returns the running (max, min)
/// records with their period index in `j`; results are worker-count
/// independent.
pub fn local_extrema_scan(n_lo: u64, n_hi: u64, workers: usize) -> Result<(ExtremeRecord, ExtremeRecord)> {
    if n_lo < 1 || n_lo > n_hi {
        return Err(Error::domain("need 1 <= n_lo <= n_hi"));
    }
    if n_hi > 4_000_000_000_000_000 {
        return Err(Error::domain("period index too large for float grid placement"));
    }
    let ns: Vec<u64> = (n_lo..=n_hi).collect();
    let one = |n: u64| -> Result<(f64, f64, f64, f64)> {
        let base = 2.0 * n as f64;
        let (t_max, v_max) = refine_period(base, base + 1.0, 1.0)?;
        let (t_min, v_min) = refine_period(base + 1.0, base + 2.0, -1.0)?;
        Ok((t_max, v_max, t_min, v_min))
    };
    let rows: Vec<Result<(f64, f64, f64, f64)>> = if workers <= 1 || ns.len() < 2 {
        ns.iter().map(|&n| one(n)).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| ns.par_iter().map(|&n| one(n)).collect()),
            Err(_) => ns.iter().map(|&n| one(n)).collect(),
        }
    };
    let mut max: Option<ExtremeRecord> = None;
    let mut min: Option<ExtremeRecord> = None;
    for (n, row) in ns.iter().zip(rows) {
        let (t_max, v_max, t_min, v_min) = row?;
        if max.as_ref().is_none_or(|m| v_max > m.value) {
            max = Some(ExtremeRecord {
                j: *n,
                x: PiRational::from_pi_units_approx(t_max)?,
                value: v_max,
            });
        }
        if min.as_ref().is_none_or(|m| v_min < m.value) {
            min = Some(ExtremeRecord {
                j: *n,
                x: PiRational::from_pi_units_approx(t_min)?,
                value: v_min,
            });
        }
    }
    Ok((max.unwrap(), min.unwrap()))
}

fn simpson_piece(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(
    f: &(impl Fn(f64) -> Result<f64> + ?Sized),
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson_piece(fa, flm, fm, m - a);
    let right = simpson_piece(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        Ok(left + right + delta / 15.0)
    } else {
        Ok(adaptive_simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + adaptive_simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
}

/// Integrates `f` over [a, b] by adaptive Simpson to tolerance `tol`.
fn integrate(f: &(impl Fn(f64) -> Result<f64> + ?Sized), a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    let whole = simpson_piece(fa, fm, fb, b - a);
    adaptive_simpson(f, a, m, b, fa, fm, fb, whole, tol, 24)
}

/// Term-by-term integration gives the closed form
///
/// ```text
/// int_0^y Q = sum_{n >= 1} 2 sin^2(y / 2n),
/// ```
///
/// an identity that exercises the evaluators on a whole interval at
/// once. This computes |quadrature of the direct evaluator - the sum|
/// with the first `n_max` terms summed explicitly and the rest replaced
/// by the asymptotic tail
///
/// ```text
/// (y^2/2)(1/m - 1/(2 m^2) + 1/(6 m^3)) - (y^4/24)(1/(3 m^3)),
/// ```
///
/// small enough to be invisible at the returned size. Requires
/// 0 < y <= 1e4 and n_max >= 10.
pub fn verify_integral_identity(y: f64, n_max: u64) -> Result<f64> {
    if !y.is_finite() || y <= 0.0 || y > 1e4 {
        return Err(Error::domain("identity check limited to 0 < y <= 1e4"));
    }
    if n_max < 10 || n_max > 1_000_000_000 {
        return Err(Error::domain("term count must lie in 10..=1e9"));
    }
    let integrand = |x: f64| -> Result<f64> {
        let xr = PiRational::from_pi_units_approx(x / std::f64::consts::PI)?;
        Ok(q_direct(&xr, &DirectParams::default(), 1)?.value)
    };
    let quad = integrate(&integrand, 0.0, y, 1e-9)?;

    let mut head = KahanSum::<f64>::new();
    for n in 1..=n_max {
        let s = (y / (2.0 * n as f64)).sin();
        head.add(2.0 * s * s);
    }
    let m = n_max as f64;
    let tail = y * y / 2.0 * (1.0 / m - 1.0 / (2.0 * m * m) + 1.0 / (6.0 * m * m * m))
        - y.powi(4) / 24.0 / (3.0 * m * m * m);
    Ok((quad - head.value() - tail).abs())
}
