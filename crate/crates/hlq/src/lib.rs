//! Evaluation and extreme-value search for the slowly convergent series
//!
//! ```text
//! Q(x) = sum_{n >= 1} (1/n) sin(x/n)
//! ```
//!
//! `Q` is bounded on every finite interval but attains arbitrarily large
//! positive and negative values; the interesting ones live at astronomically
//! large `x`, far beyond where naive summation or naive floating-point
//! argument reduction survive. This crate provides:
//!
//! * exact arguments of the form `(p/q)*pi` with lossless reduction of
//!   `x/n` modulo `2*pi` ([`exact_args`]),
//! * four evaluation algorithms of decreasing cost, from the `O(x)` direct
//!   sum down to an `O(x^(1/3))` resummation and a cheap smoothed
//!   truncation ([`approx`]),
//! * the lattice construction that manufactures points with many aligned
//!   phases, plus scanning, checkpointing, and local refinement machinery
//!   used to hunt record values ([`search`]).
//!
//! The numeric kernels are generic over the native float via
//! [`scalar::Scalar`]; production entry points fix `f64` and are re-exported
//! at the crate root.

pub mod approx;
#[cfg(feature = "confirm")]
pub mod confirm;
pub mod error;
pub mod exact_args;
pub mod scalar;
pub mod search;
pub mod special;

pub use approx::{
    coeff_c, evaluate, partial_sum, q_direct, q_half, q_third, q_third_split, q_trunc, Algo,
    AlgoSpec, ApproxResult, DirectParams,
};
#[cfg(feature = "confirm")]
pub use confirm::{q_third_mp, MpResult};
pub use error::{Error, Result};
pub use exact_args::{ArgReducer, PiRational};
pub use scalar::{DoubleFloat, KahanSum, Scalar};
pub use search::{
    big_k, gen_set_m, hl_point, local_extrema_scan, scan_hl, verify_integral_identity,
    ExtremeRecord, HlConstruction, ScanEvent, ScanOptions, ScanOutcome,
};

/// Paired-float working type at production precision.
pub type Dd = DoubleFloat<f64>;
