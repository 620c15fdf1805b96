//! Beta-encoder analog-to-digital conversion with flaky quantisers.
//!
//! A beta-encoder represents a sample x as L bits emitted while iterating a
//! non-integer-radix interval map. Its selling point over classical PCM is
//! robustness: the quantiser threshold may sit anywhere inside a band, or be
//! redrawn randomly at every step, and a decoder that only brackets x by
//! interval contraction still converges at the rate gamma^L, gamma = 1/beta.
//! Better yet, beta itself does not need to be known: it can be recovered
//! from the emitted bits of a sample and its mirror image by solving a
//! characteristic equation.
//!
//! The crate covers four map flavors (Bernoulli with threshold shift,
//! cautious, scale-adjusted, negative), encoding with fixed or fluctuating
//! thresholds, interval decoders, beta/nu estimation, two-state Markov
//! analysis of emitted bitstreams including a Kalman-filter embedding, and a
//! Monte Carlo MSE harness with CSV output behind the `betaenc` CLI.
//!
//! ```
//! use betaenc::maps::MapSpec;
//! use betaenc::encoder::encode_fixed;
//! use betaenc::decoder::{decode, DecodeMode};
//!
//! let spec = MapSpec::cautious(1.5, 1.2)?;
//! let record = encode_fixed(&spec, 0.37, 24)?;
//! let xhat = decode(&record, DecodeMode::Midpoint)?;
//! assert!((xhat - 0.37).abs() < 1e-3);
//! # Ok::<(), betaenc::Error>(())
//! ```

pub mod decoder;
pub mod encoder;
pub mod estimation;
pub mod harness;
pub mod maps;
pub mod markov;

use thiserror::Error;

/// Everything that can go wrong across the crate.
///
/// One flat enum rather than per-module errors: callers of the harness see
/// failures from every layer anyway, and the variants carry enough payload
/// to tell which layer refused.
#[derive(Debug, Error)]
pub enum Error {
    #[error("beta {0} outside the admissible interval (1, 2)")]
    InvalidBeta(f64),
    #[error("nu {nu} outside the admissible threshold band [{lo}, {hi}]")]
    InvalidNu { nu: f64, lo: f64, hi: f64 },
    #[error("scale {0} must be positive and finite")]
    InvalidScale(f64),
    #[error("rho {0} outside [0, 1)")]
    InvalidRho(f64),
    #[error("initial state {x} outside the encoder domain [0, {hi})")]
    DomainViolation { x: f64, hi: f64 },
    #[error("state {x} strays from the closed domain [0, {hi}] by more than the rounding slack")]
    StateEscaped { x: f64, hi: f64 },
    #[error("Bernoulli map with rho = {0} has no bounded invariant subinterval")]
    NoInvariantSubinterval(f64),
    #[error("orbit not attracted to the invariant subinterval within {0} iterations")]
    NotAttracted(usize),
    #[error("flaky band [{nu0}, {nu1}] invalid: need {lo} <= nu0 < nu1 <= {hi}")]
    InvalidBand {
        nu0: f64,
        nu1: f64,
        lo: f64,
        hi: f64,
    },
    #[error("epsilon {epsilon} pushes thresholds nu*(1 +/- epsilon) outside the band [{lo}, {hi}]")]
    InvalidEpsilon { epsilon: f64, lo: f64, hi: f64 },
    #[error("quantiser input {0} must be non-negative and finite")]
    InvalidQuantiserInput(f64),
    #[error("gamma {0} outside the open interval (0, 1)")]
    InvalidGamma(f64),
    #[error("bit {value} at position {index} is not 0/1")]
    InvalidBit { index: usize, value: u8 },
    #[error("decode mode p_L = {0} is not one of 0, 1, 2")]
    InvalidMode(u8),
    #[error("bit records disagree on {0}")]
    MismatchedRecords(&'static str),
    #[error("operation {op} does not support the {flavor} flavor")]
    UnsupportedFlavor {
        flavor: maps::MapFlavor,
        op: &'static str,
    },
    #[error("coefficient {value} at position {index} is not in 0..=2")]
    InvalidCoefficient { index: usize, value: u8 },
    #[error("characteristic root search cannot bracket: coefficient sequence is {0}")]
    DegenerateCoefficients(&'static str),
    #[error("no characteristic root inside [{lo}, {hi}]")]
    NoRootBracketed { lo: f64, hi: f64 },
    #[error("bit length {0} must be at least 1")]
    InvalidLength(usize),
    #[error("error tolerance sigma {0} must be positive and finite")]
    InvalidSigma(f64),
    #[error("need at least two bits to count transitions, got {0}")]
    NotEnoughBits(usize),
    #[error("degenerate chain: state {0} never occurs, its transition row is undefined")]
    DegenerateChain(u8),
    #[error("reducible chain: p01 + p10 = 0, the stationary distribution is not unique")]
    ReducibleChain,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("row {row} of a transition matrix sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("transition probability {0} must lie strictly inside (0, 1)")]
    InvalidTransition(f64),
    #[error("breakpoint {0} must lie strictly inside (0, 1)")]
    InvalidBreakpoint(f64),
    #[error("experiment grid '{0}' is empty")]
    EmptyGrid(&'static str),
    #[error("samples per cell must be at least 1")]
    NoSamples,
    #[error("unknown map flavor '{0}'")]
    UnknownFlavor(String),
    #[error("no reproduction recipe named '{0}'")]
    UnknownRecipe(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
