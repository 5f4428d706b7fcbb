//! Command line front end for the Q(x) evaluators and the record search.
//!
//! Arguments are exact decimal multiples of pi, so magnitudes like
//! 8203872394818031742687.5 survive untouched. Exit code 2 flags bad
//! input, 3 an internal failure.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hlq::{
    evaluate, local_extrema_scan, scan_hl, verify_integral_identity, AlgoSpec, DirectParams,
    Error, HlConstruction, PiRational, Result, ScanEvent, ScanOptions,
};

#[derive(Parser)]
#[command(
    name = "hlq",
    version,
    about = "Evaluate and search the slowly convergent series Q(x) = sum_n sin(x/n)/n"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads (default: HLQ_THREADS env var, then all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate Q at one exact argument x = T*pi, printing a CSV row
    Eval(EvalArgs),
    /// Run two algorithms over a grid of arguments and tabulate the gap
    Compare(CompareArgs),
    /// Refine the per-period local extrema of Q on an interval
    Scan(ScanArgs),
    /// Walk lattice candidates of the record construction
    HlSearch(HlSearchArgs),
    /// Residual of the evaluators against the closed-form integral of Q
    VerifyIdentity(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Direct,
    Half,
    Third,
    ThirdSplit,
    Trunc,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Plus,
    Hat,
}

impl From<FamilyArg> for HlConstruction {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Plus => HlConstruction::Plus,
            FamilyArg::Hat => HlConstruction::Hat,
        }
    }
}

/// Tuning shared by every subcommand that evaluates Q.
#[derive(Args, Clone, Copy)]
struct Tuning {
    /// Cutoff exponent for half (x^(1/2+eps)) and trunc (x^eps)
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Euler-Maclaurin correction count (default: 6 for direct, 4 for half)
    #[arg(long)]
    em_terms: Option<u32>,
    /// Main cutoff override for direct (integer)
    #[arg(long)]
    n: Option<u64>,
    /// Main cutoff for third-split (real)
    #[arg(long)]
    split_n: Option<f64>,
    /// Last Taylor order of direct
    #[arg(long)]
    k_max: Option<u32>,
}

impl Tuning {
    fn spec(&self, algo: AlgoArg) -> Result<AlgoSpec> {
        Ok(match algo {
            AlgoArg::Direct => {
                let d = DirectParams::default();
                AlgoSpec::Direct(DirectParams {
                    n: self.n,
                    em_terms: self.em_terms.unwrap_or(d.em_terms),
                    k_max: self.k_max.unwrap_or(d.k_max),
                })
            }
            AlgoArg::Half => AlgoSpec::Half { eps: self.eps, em_terms: self.em_terms.unwrap_or(4) },
            AlgoArg::Third => AlgoSpec::Third,
            AlgoArg::ThirdSplit => AlgoSpec::ThirdSplit {
                n: self
                    .split_n
                    .ok_or_else(|| Error::domain("third-split needs --split-n"))?,
            },
            AlgoArg::Trunc => AlgoSpec::Trunc { eps: self.eps },
        })
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Argument in units of pi, an exact decimal such as
    /// "8203872394818031742687.5" or "-0.125"
    #[arg(long)]
    x: String,
    /// Exact decimal offset (units of pi) added to x before evaluating
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    probe_offset: String,
    #[arg(long, value_enum, default_value_t = AlgoArg::Direct)]
    algo: AlgoArg,
    #[command(flatten)]
    tuning: Tuning,
    /// Significant digits printed for the value
    #[arg(long, default_value_t = 10)]
    digits: usize,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-evaluate through the serial multiprecision cross-check at this
    /// many decimal digits (20..=200) and report the comparison on stderr
    #[cfg(feature = "confirm")]
    #[arg(long, value_name = "DIGITS")]
    confirm: Option<u32>,
}

#[derive(Args)]
struct CompareArgs {
    /// Grid start, in plain argument units (not multiples of pi)
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    /// Grid end, inclusive up to rounding slack
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, value_enum)]
    algo_a: AlgoArg,
    #[arg(long, value_enum)]
    algo_b: AlgoArg,
    /// eps for side a (half/trunc)
    #[arg(long, default_value_t = 0.05)]
    eps_a: f64,
    #[arg(long, default_value_t = 0.05)]
    eps_b: f64,
    /// Euler-Maclaurin corrections for side a
    #[arg(long, default_value_t = 4)]
    em_terms_a: u32,
    #[arg(long, default_value_t = 4)]
    em_terms_b: u32,
    #[arg(long, default_value_t = 10)]
    digits: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Interval start in units of pi
    #[arg(long)]
    lo: f64,
    /// Interval end in units of pi
    #[arg(long)]
    hi: f64,
    #[arg(long, default_value_t = 10)]
    digits: usize,
}

#[derive(Args)]
struct HlSearchArgs {
    /// Construction order k (moduli up to 4k+1)
    #[arg(long)]
    k: u32,
    /// plus hunts maxima, hat hunts minima
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    j_lo: u64,
    #[arg(long)]
    j_hi: u64,
    #[arg(long, value_enum, default_value_t = AlgoArg::Half)]
    algo: AlgoArg,
    #[command(flatten)]
    tuning: Tuning,
    /// Append-mode state file; an interrupted scan resumes from it
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Points per checkpoint block
    #[arg(long, default_value_t = 1_000_000)]
    checkpoint_every: u64,
    /// Suppress live record lines on stderr
    #[arg(long)]
    quiet: bool,
    #[arg(long, default_value_t = 10)]
    digits: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Upper integration limit
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    /// Terms of the closed-form sum taken explicitly
    #[arg(long, default_value_t = 100_000)]
    n_max: u64,
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| -> Option<usize> { std::env::var("HLQ_THREADS").ok()?.parse().ok() })
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn sig(v: f64, digits: usize) -> String {
    format!("{:.*e}", digits.clamp(1, 17) - 1, v)
}

fn cmd_eval(a: &EvalArgs, workers: usize) -> Result<()> {
    let x = PiRational::from_str(&a.x)?;
    let off = PiRational::from_str(&a.probe_offset)?;
    let x = x.checked_add(&off)?;
    let spec = a.tuning.spec(a.algo)?;
    let t0 = Instant::now();
    let r = evaluate(&x, &spec, workers)?;
    let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut w = out_writer(&a.out)?;
    writeln!(w, "x_pi,algo,value,err_heuristic,n_terms,wall_ms")?;
    writeln!(
        w,
        "{},{},{},{:.3e},{},{:.3}",
        x.pi_units_string(),
        r.algo,
        sig(r.value, a.digits),
        r.err_heuristic,
        r.n_terms_main + r.n_terms_phase,
        wall_ms
    )?;
    #[cfg(feature = "confirm")]
    if let Some(digits) = a.confirm {
        let t0 = Instant::now();
        let mp = hlq::q_third_mp(&x, digits)?;
        eprintln!(
            "confirm: {} ({} digits, {}+{} terms, {:.1} s)",
            mp.text,
            mp.digits,
            mp.n_terms_main,
            mp.n_terms_phase,
            t0.elapsed().as_secs_f64()
        );
        eprintln!("confirm: delta vs printed value = {:.3e}", r.value - mp.value);
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs, workers: usize) -> Result<()> {
    if !(a.step > 0.0) || !a.step.is_finite() {
        return Err(Error::domain("grid step must be positive"));
    }
    if a.to < a.from {
        return Err(Error::domain("grid end must not precede its start"));
    }
    let base = Tuning { eps: 0.0, em_terms: None, n: None, split_n: None, k_max: None };
    let spec_a = Tuning { eps: a.eps_a, em_terms: Some(a.em_terms_a), ..base }.spec(a.algo_a)?;
    let spec_b = Tuning { eps: a.eps_b, em_terms: Some(a.em_terms_b), ..base }.spec(a.algo_b)?;
    let steps = ((a.to - a.from) / a.step + 1e-9).floor() as u64;
    let mut w = out_writer(&a.out)?;
    writeln!(w, "x,q_a,q_b,diff")?;
    let mut max_abs = 0.0f64;
    let mut abs_diffs = Vec::with_capacity(steps as usize + 1);
    for i in 0..=steps {
        let x_val = a.from + a.step * i as f64;
        let x = PiRational::from_pi_units_approx(x_val / std::f64::consts::PI)?;
        let qa = evaluate(&x, &spec_a, workers)?.value;
        let qb = evaluate(&x, &spec_b, workers)?.value;
        let diff = qa - qb;
        max_abs = max_abs.max(diff.abs());
        abs_diffs.push(diff.abs());
        writeln!(
            w,
            "{},{},{},{:.6e}",
            x_val,
            sig(qa, a.digits),
            sig(qb, a.digits),
            diff
        )?;
    }
    abs_diffs.sort_by(f64::total_cmp);
    let median = abs_diffs[abs_diffs.len() / 2];
    eprintln!("points={} max_abs_diff={max_abs:.6e} median_abs_diff={median:.6e}", abs_diffs.len());
    Ok(())
}

fn cmd_scan(a: &ScanArgs, workers: usize) -> Result<()> {
    if !(a.lo.is_finite() && a.hi.is_finite() && a.lo >= 2.0 && a.hi >= a.lo + 2.0) {
        return Err(Error::domain("need 2 <= lo and hi >= lo + 2 (units of pi)"));
    }
    // periods [2n, 2n+2] pi fully inside [lo, hi] pi
    let n_lo = (a.lo / 2.0).ceil() as u64;
    let n_hi = ((a.hi - 2.0) / 2.0).floor() as u64;
    if n_lo < 1 || n_hi < n_lo {
        return Err(Error::domain("interval holds no complete period"));
    }
    let (max, min) = local_extrema_scan(n_lo, n_hi, workers)?;
    println!(
        "max period={} x_pi={} value={}",
        max.j,
        max.x.pi_units_string(),
        sig(max.value, a.digits)
    );
    println!(
        "min period={} x_pi={} value={}",
        min.j,
        min.x.pi_units_string(),
        sig(min.value, a.digits)
    );
    Ok(())
}

fn cmd_hl_search(a: &HlSearchArgs, workers: usize) -> Result<()> {
    let spec = a.tuning.spec(a.algo)?;
    let opts = ScanOptions {
        checkpoint_every: a.checkpoint_every,
        checkpoint: a.checkpoint.clone(),
        workers,
    };
    let digits = a.digits;
    let quiet = a.quiet;
    let out = scan_hl(a.k, a.family.into(), a.j_lo, a.j_hi, &spec, &opts, |ev| {
        if quiet {
            return;
        }
        match ev {
            ScanEvent::NewMax(r) => {
                eprintln!("new max j={} x_pi={} value={}", r.j, r.x.pi_units_string(), sig(r.value, digits))
            }
            ScanEvent::NewMin(r) => {
                eprintln!("new min j={} x_pi={} value={}", r.j, r.x.pi_units_string(), sig(r.value, digits))
            }
            ScanEvent::BlockDone { j_done } => eprintln!("block done j={j_done}"),
        }
    })?;
    if let Some(done) = out.resumed_at {
        eprintln!("resumed from checkpoint at j={done}; evaluated {} new points", out.evaluated);
    }
    println!(
        "max j={} x_pi={} value={}",
        out.max.j,
        out.max.x.pi_units_string(),
        sig(out.max.value, a.digits)
    );
    println!(
        "min j={} x_pi={} value={}",
        out.min.j,
        out.min.x.pi_units_string(),
        sig(out.min.value, a.digits)
    );
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let r = verify_integral_identity(a.y, a.n_max)?;
    println!("residual={r:.6e}");
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let workers = resolve_workers(cli.workers);
    match &cli.cmd {
        Cmd::Eval(a) => cmd_eval(a, workers),
        Cmd::Compare(a) => cmd_compare(a, workers),
        Cmd::Scan(a) => cmd_scan(a, workers),
        Cmd::HlSearch(a) => cmd_hl_search(a, workers),
        Cmd::VerifyIdentity(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
