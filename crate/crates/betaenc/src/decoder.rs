//! Interval-contraction decoding: the bracket [l_i, r_i) containing x is
//! tracked through the bit sequence, shrinking by a factor gamma per stage,
//! and the decoded value is a representative of the final bracket.
//!
//! The decoder never needs the thresholds that produced the bits. That is
//! the whole robustness argument: any bit sequence emitted with in-band
//! thresholds brackets x, so beta (exact or estimated) and the scale are
//! the only inputs.

use crate::encoder::BitRecord;
use crate::maps::{Interval, MapFlavor, MapSpec};
use crate::{Error, Result};

/// The bracket for x after `stage` bits have been consumed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalState {
    pub stage: usize,
    pub lo: f64,
    pub hi: f64,
    pub flavor: MapFlavor,
}

impl IntervalState {
    pub fn interval(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Which representative of the final bracket to report: its smallest value
/// (p_L = 0), midpoint (1), or largest value (2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecodeMode {
    Left,
    Midpoint,
    Right,
}

impl DecodeMode {
    pub fn p(self) -> u8 {
        match self {
            DecodeMode::Left => 0,
            DecodeMode::Midpoint => 1,
            DecodeMode::Right => 2,
        }
    }

    pub fn from_p(p: u8) -> Result<Self> {
        match p {
            0 => Ok(DecodeMode::Left),
            1 => Ok(DecodeMode::Midpoint),
            2 => Ok(DecodeMode::Right),
            other => Err(Error::InvalidMode(other)),
        }
    }
}

fn check_inputs(bits: &[u8], beta: f64, s: f64) -> Result<f64> {
    let gamma = beta.recip();
    if !gamma.is_finite() || gamma <= 0.0 || gamma >= 1.0 {
        return Err(Error::InvalidGamma(gamma));
    }
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::InvalidScale(s));
    }
    if let Some((index, &value)) = bits.iter().enumerate().find(|&(_, &b)| b > 1) {
        return Err(Error::InvalidBit { index, value });
    }
    Ok(gamma)
}

/// One stage of the negative-flavor bracket recursion. The shape alternates
/// with parity because the map reverses orientation every step; f is the
/// branch coefficient 1 + b(beta-1). `pow_im1` carries gamma^(i-1).
fn negative_step(
    (l, r): (f64, f64),
    i: usize,
    bit: u8,
    gamma: f64,
    beta: f64,
    s: f64,
    pow_im1: f64,
) -> (f64, f64) {
    let f = 1.0 + f64::from(bit) * (beta - 1.0);
    let gi = pow_im1 * gamma;
    if i % 2 == 1 {
        (l - s * gi * (1.0 - f), r - s * pow_im1 * (1.0 - f * gamma))
    } else {
        (l + s * pow_im1 * (1.0 - f * gamma), r + s * gi * (1.0 - f))
    }
}

/// Full bracket history I_0..I_L for a bit sequence, with beta supplied by
/// the caller (exact or estimated).
pub fn track_intervals_raw(
    flavor: MapFlavor,
    bits: &[u8],
    beta: f64,
    s: f64,
) -> Result<Vec<IntervalState>> {
    let gamma = check_inputs(bits, beta, s)?;
    let mut states = Vec::with_capacity(bits.len() + 1);
    let mut lo = 0.0f64;
    let mut hi = s;
    states.push(IntervalState {
        stage: 0,
        lo,
        hi,
        flavor,
    });
    let mut pow = 1.0f64; // gamma^(i-1) entering stage i
    match flavor {
        MapFlavor::NegativeBeta => {
            for (idx, &b) in bits.iter().enumerate() {
                let i = idx + 1;
                (lo, hi) = negative_step((lo, hi), i, b, gamma, beta, s, pow);
                pow *= gamma;
                states.push(IntervalState {
                    stage: i,
                    lo,
                    hi,
                    flavor,
                });
            }
        }
        _ => {
            let off = s * (beta - 1.0);
            for (idx, &b) in bits.iter().enumerate() {
                let i = idx + 1;
                let gi = pow * gamma;
                if b == 1 {
                    lo += off * gi;
                } else {
                    hi -= off * gi;
                }
                pow = gi;
                states.push(IntervalState {
                    stage: i,
                    lo,
                    hi,
                    flavor,
                });
            }
        }
    }
    Ok(states)
}

/// Bracket history for an encoded record, using its own exact parameters.
pub fn track_intervals(record: &BitRecord) -> Result<Vec<IntervalState>> {
    track_intervals_raw(
        record.spec.flavor,
        &record.bits,
        record.spec.beta,
        record.spec.s,
    )
}

/// Decodes a bit sequence given beta (exact or estimated) and the scale.
///
/// Ordinary flavors: the final bracket is [l_L, l_L + s*gamma^L), and the
/// mode picks its left end, midpoint, or right end. Negative flavor: the
/// midpoint has the closed form s*((-gamma)^L/2 - sum f_i (-gamma)^i);
/// endpoint modes fall back to the bracket recursion.
pub fn decode_bits(
    flavor: MapFlavor,
    bits: &[u8],
    beta: f64,
    s: f64,
    mode: DecodeMode,
) -> Result<f64> {
    let gamma = check_inputs(bits, beta, s)?;
    let l = bits.len() as i32;
    match flavor {
        MapFlavor::NegativeBeta => {
            if mode == DecodeMode::Midpoint {
                let t = -gamma;
                let mut acc = 0.0;
                for &b in bits.iter().rev() {
                    let f = 1.0 + f64::from(b) * (beta - 1.0);
                    acc = acc * t + f;
                }
                Ok(s * (t.powi(l) / 2.0 - acc * t))
            } else {
                let mut bracket = (0.0f64, s);
                let mut pow = 1.0f64;
                for (idx, &b) in bits.iter().enumerate() {
                    bracket = negative_step(bracket, idx + 1, b, gamma, beta, s, pow);
                    pow *= gamma;
                }
                Ok(match mode {
                    DecodeMode::Left => bracket.0,
                    _ => bracket.1,
                })
            }
        }
        _ => {
            let mut acc = 0.0;
            for &b in bits.iter().rev() {
                acc = acc * gamma + f64::from(b);
            }
            let lo = s * (beta - 1.0) * (acc * gamma);
            let width = s * gamma.powi(l);
            Ok(match mode {
                DecodeMode::Left => lo,
                DecodeMode::Midpoint => lo + width / 2.0,
                DecodeMode::Right => lo + width,
            })
        }
    }
}

/// Decodes an encoded record with its own exact beta and scale.
pub fn decode(record: &BitRecord, mode: DecodeMode) -> Result<f64> {
    decode_bits(
        record.spec.flavor,
        &record.bits,
        record.spec.beta,
        record.spec.s,
        mode,
    )
}

/// A priori bound on |x - decoded|: half the final bracket width for the
/// midpoint, the full width for either endpoint.
pub fn error_bound(spec: &MapSpec, l: usize, mode: DecodeMode) -> f64 {
    let p = f64::from(mode.p());
    let factor = (1.0 + (p - 1.0).abs()) / 2.0;
    factor * spec.s * spec.gamma.powi(l as i32)
}
