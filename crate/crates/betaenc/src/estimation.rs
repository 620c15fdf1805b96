//! Recovering beta (and nu) from emitted bits, plus the optimal amplifier
//! design.
//!
//! The trick: encode x and its mirror y = 1 - x under the same thresholds.
//! Summing the two reconstruction identities eliminates both unknown
//! residues, leaving a polynomial in gamma whose coefficients are the bit
//! sums d_i = b_i + c_i. Its root is gamma itself, so the decoder can run
//! on an estimate extracted from nothing but the bitstreams.

use crate::decoder::DecodeMode;
use crate::encoder::BitRecord;
use crate::maps::MapFlavor;
use crate::{Error, Result};

/// Bisection bracket ends: stay clear of the tail pole at gamma = 1 and of
/// the trivial positive plateau at 0.
const BRACKET_LO: f64 = 1e-6;
const BRACKET_HI: f64 = 1.0 - 1e-6;
const BISECT_TOL: f64 = 1e-12;
const BISECT_MAX_ITER: usize = 200;
/// Sign-scan resolution for the negative-flavor equation, which can have
/// several roots.
const SCAN_POINTS: usize = 10_000;

/// Which characteristic equation to build from the coefficients.
///
/// `DaubechiesLegacy` is the historical form without the residue tail term;
/// it is kept for comparison because dropping the tail biases the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyKind {
    Ordinary,
    DaubechiesLegacy,
    Negative,
}

/// The characteristic polynomial with coefficients d_i = b_i + c_i from the
/// paired expansions of x and y = 1 - x.
#[derive(Clone, Debug, PartialEq)]
pub struct CharPoly {
    pub d: Vec<u8>,
    pub p: u8,
    pub kind: PolyKind,
    /// Scale of the encoder, needed by the negative form only.
    pub s: Option<f64>,
}

fn check_coefficients(d: &[u8]) -> Result<()> {
    if let Some((index, &value)) = d.iter().enumerate().find(|&(_, &v)| v > 2) {
        return Err(Error::InvalidCoefficient { index, value });
    }
    Ok(())
}

impl CharPoly {
    pub fn ordinary(d: Vec<u8>, p: u8) -> Result<Self> {
        check_coefficients(&d)?;
        DecodeMode::from_p(p)?;
        Ok(CharPoly {
            d,
            p,
            kind: PolyKind::Ordinary,
            s: None,
        })
    }

    pub fn daubechies_legacy(d: Vec<u8>) -> Result<Self> {
        check_coefficients(&d)?;
        Ok(CharPoly {
            d,
            p: 0,
            kind: PolyKind::DaubechiesLegacy,
            s: None,
        })
    }

    pub fn negative(d: Vec<u8>, s: f64) -> Result<Self> {
        check_coefficients(&d)?;
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidScale(s));
        }
        Ok(CharPoly {
            d,
            p: 0,
            kind: PolyKind::Negative,
            s: Some(s),
        })
    }
}

/// Evaluates the characteristic polynomial at gamma in [0, 1).
///
/// Ordinary: 1 - sum d_i gamma^i - p * gamma^(L+1) / (1 - gamma).
/// Legacy: the same without the tail. Negative: the coefficients carry a
/// factor (beta - 1) with beta = 1/gamma substituted, expanded per term as
/// d_i (1 - gamma) (-1)^i gamma^(i-1) so the evaluation stays finite all
/// the way down to gamma = 0.
pub fn char_poly_eval(poly: &CharPoly, gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidGamma(gamma));
    }
    match poly.kind {
        PolyKind::Ordinary | PolyKind::DaubechiesLegacy => {
            let mut acc = 0.0;
            for &di in poly.d.iter().rev() {
                acc = acc * gamma + f64::from(di);
            }
            let mut value = 1.0 - acc * gamma;
            if poly.kind == PolyKind::Ordinary {
                let l = poly.d.len() as i32;
                value -= f64::from(poly.p) * gamma.powi(l + 1) / (1.0 - gamma);
            }
            Ok(value)
        }
        PolyKind::Negative => {
            let s = poly.s.expect("negative polys carry their scale");
            let t = -gamma;
            let mut sum = 0.0;
            let mut tpow = 1.0; // (-gamma)^i
            let mut pow_im1 = 1.0; // gamma^(i-1)
            let mut sign = -1.0; // (-1)^i
            for &di in &poly.d {
                tpow *= t;
                sum += 2.0 * tpow + f64::from(di) * (1.0 - gamma) * sign * pow_im1;
                sign = -sign;
                pow_im1 *= gamma;
            }
            Ok(s * (tpow - sum) - 1.0)
        }
    }
}

/// A recovered gamma with its quality markers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaEstimate {
    pub gamma_hat: f64,
    pub beta_hat: f64,
    /// |P(gamma_hat)| at the reported root.
    pub residual: f64,
    /// Width of the final bisection bracket.
    pub bracket_width: f64,
}

impl BetaEstimate {
    /// The scale (beta_hat - 1)^-1 implied for the ordinary cautious map,
    /// which a decoder running on the estimate should use in place of the
    /// true (beta - 1)^-1.
    pub fn implied_scale(&self) -> f64 {
        (self.beta_hat - 1.0).recip()
    }
}

fn bisect(poly: &CharPoly, mut lo: f64, mut hi: f64) -> Result<BetaEstimate> {
    let mut f_lo = char_poly_eval(poly, lo)?;
    let f_hi = char_poly_eval(poly, hi)?;
    if f_lo == 0.0 {
        hi = lo;
    } else if f_hi == 0.0 {
        lo = hi;
    } else if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRootBracketed { lo, hi });
    }
    let mut iterations = 0;
    while hi - lo > BISECT_TOL && iterations < BISECT_MAX_ITER {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let f_mid = char_poly_eval(poly, mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_lo.signum() == f_mid.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let gamma_hat = 0.5 * (lo + hi);
    Ok(BetaEstimate {
        gamma_hat,
        beta_hat: gamma_hat.recip(),
        residual: char_poly_eval(poly, gamma_hat)?.abs(),
        bracket_width: hi - lo,
    })
}

fn paired_coefficients(bits_x: &BitRecord, bits_y: &BitRecord) -> Result<Vec<u8>> {
    if bits_x.len() != bits_y.len() {
        return Err(Error::MismatchedRecords("length"));
    }
    if bits_x.spec.flavor != bits_y.spec.flavor {
        return Err(Error::MismatchedRecords("flavor"));
    }
    if bits_x.thresholds.values != bits_y.thresholds.values {
        return Err(Error::MismatchedRecords("thresholds"));
    }
    Ok(bits_x
        .bits
        .iter()
        .zip(&bits_y.bits)
        .map(|(&b, &c)| b + c)
        .collect())
}

/// Recovers beta from the paired ordinary expansions of x and y = 1 - x.
///
/// The root is unique on (0, 1) because the polynomial is strictly
/// decreasing there, so plain bisection on a fixed bracket suffices.
pub fn estimate_beta(
    bits_x: &BitRecord,
    bits_y: &BitRecord,
    mode: DecodeMode,
) -> Result<BetaEstimate> {
    if bits_x.spec.flavor != MapFlavor::Cautious {
        return Err(Error::UnsupportedFlavor {
            flavor: bits_x.spec.flavor,
            op: "estimate_beta",
        });
    }
    let d = paired_coefficients(bits_x, bits_y)?;
    if d.iter().all(|&v| v == 0) {
        return Err(Error::DegenerateCoefficients("all zeros"));
    }
    if d.iter().all(|&v| v == 2) {
        return Err(Error::DegenerateCoefficients("all twos"));
    }
    let poly = CharPoly::ordinary(d, mode.p())?;
    bisect(&poly, BRACKET_LO, BRACKET_HI)
}

/// Recovers candidate gammas from paired negative expansions.
///
/// Root uniqueness is not guaranteed here, so every sign change on a
/// 10^4-point grid is refined and all roots are returned in ascending
/// order; the caller decides which to trust.
pub fn estimate_beta_negative(
    bits_x: &BitRecord,
    bits_y: &BitRecord,
) -> Result<Vec<BetaEstimate>> {
    if bits_x.spec.flavor != MapFlavor::NegativeBeta {
        return Err(Error::UnsupportedFlavor {
            flavor: bits_x.spec.flavor,
            op: "estimate_beta_negative",
        });
    }
    if bits_x.spec.s != bits_y.spec.s {
        return Err(Error::MismatchedRecords("scale"));
    }
    let d = paired_coefficients(bits_x, bits_y)?;
    let poly = CharPoly::negative(d, bits_x.spec.s)?;
    let mut roots = Vec::new();
    let step = 1.0 / SCAN_POINTS as f64;
    let mut prev_g = step;
    let mut prev_f = char_poly_eval(&poly, prev_g)?;
    for k in 2..SCAN_POINTS {
        let g = k as f64 * step;
        let f = char_poly_eval(&poly, g)?;
        if prev_f == 0.0 {
            roots.push(bisect(&poly, prev_g, prev_g)?);
        } else if prev_f.signum() != f.signum() {
            roots.push(bisect(&poly, prev_g, g)?);
        }
        prev_g = g;
        prev_f = f;
    }
    Ok(roots)
}

/// Remark-4 estimate of a fixed threshold from a single record:
/// nu_hat = sum (1 - b_i) gamma^i + (beta - 1)^-1 gamma^L / 2. The same
/// interval argument that decodes x decodes nu when their roles swap.
pub fn estimate_nu(bits: &BitRecord, beta: f64) -> Result<f64> {
    if bits.spec.flavor != MapFlavor::Cautious {
        return Err(Error::UnsupportedFlavor {
            flavor: bits.spec.flavor,
            op: "estimate_nu",
        });
    }
    let gamma = beta.recip();
    if !gamma.is_finite() || gamma <= 0.0 || gamma >= 1.0 {
        return Err(Error::InvalidGamma(gamma));
    }
    let mut acc = 0.0;
    for &b in bits.bits.iter().rev() {
        acc = acc * gamma + f64::from(1 - b);
    }
    let l = bits.len() as i32;
    Ok(acc * gamma + (beta - 1.0).recip() * gamma.powi(l) / 2.0)
}

/// The amplifier design minimising the worst-case quantisation error for a
/// bit budget L under quantiser tolerance sigma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignSpec {
    pub l: usize,
    pub sigma: f64,
    pub beta_opt: f64,
    pub s_opt: f64,
}

/// Widest-beta design meeting a threshold tolerance sigma = s(2 - beta):
/// beta = 2L/(L+1), s = sigma/(2 - beta) = sigma(L+1)/2, which minimises the
/// decoder's worst-case error s(beta - 1)gamma^L over admissible designs.
///
/// Note on small tolerances: when s_opt comes out below 1 the design cannot
/// cover samples from [0, 1). The workable fallback is to pin s = 1 and
/// meet the tolerance relation with beta = 2 - sigma instead, giving up
/// optimality.
pub fn optimal_beta(l: usize, sigma: f64) -> Result<DesignSpec> {
    if l < 1 {
        return Err(Error::InvalidLength(l));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidSigma(sigma));
    }
    let beta_opt = 2.0 * l as f64 / (l as f64 + 1.0);
    let s_opt = sigma / (2.0 - beta_opt);
    Ok(DesignSpec {
        l,
        sigma,
        beta_opt,
        s_opt,
    })
}
