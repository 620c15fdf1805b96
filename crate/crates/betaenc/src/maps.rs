//! The interval maps behind the four encoder flavors, plus pure orbit
//! utilities: iteration, itineraries, invariant subintervals, first visit
//! times, and the duality involution psi.
//!
//! All four maps share one shape: a scaled expansion x -> beta*x (or its
//! mirrored negative variant) with a branch choice decided by comparing x
//! against the cut c = gamma*nu. The bit emitted at each step is that branch
//! indicator, so everything downstream (encoding, decoding, estimation)
//! reduces to orbit bookkeeping on these maps.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Rounding slack admitted at the domain edges before a state counts as
/// escaped. Genuine divergence (Bernoulli with rho > 0) blows past this
/// within a few steps, so the clamp never masks it.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Default iteration budget for [`first_visit_time`], generous versus the
/// geometric attraction rate of every valid spec.
pub const DEFAULT_MAX_VISIT_ITER: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapFlavor {
    Bernoulli,
    Cautious,
    ScaleAdjusted,
    #[serde(rename = "negative", alias = "negative_beta")]
    NegativeBeta,
}

impl MapFlavor {
    pub fn as_str(self) -> &'static str {
        match self {
            MapFlavor::Bernoulli => "bernoulli",
            MapFlavor::Cautious => "cautious",
            MapFlavor::ScaleAdjusted => "scale_adjusted",
            MapFlavor::NegativeBeta => "negative",
        }
    }

    /// Ordinary flavors expand x in powers of gamma directly; the negative
    /// flavor alternates signs and needs its own decode and estimation paths.
    pub fn is_negative(self) -> bool {
        matches!(self, MapFlavor::NegativeBeta)
    }
}

impl fmt::Display for MapFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(MapFlavor::Bernoulli),
            "cautious" | "ordinary" => Ok(MapFlavor::Cautious),
            "scale_adjusted" | "scale-adjusted" => Ok(MapFlavor::ScaleAdjusted),
            "negative" | "negative_beta" | "negative-beta" => Ok(MapFlavor::NegativeBeta),
            other => Err(Error::UnknownFlavor(other.to_string())),
        }
    }
}

/// Half-open interval [lo, hi).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi})");
        Interval { lo, hi }
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    /// Membership with tolerance at both edges, used when checking orbits
    /// that are only confined up to rounding.
    pub fn contains_slack(self, x: f64, slack: f64) -> bool {
        self.lo - slack <= x && x < self.hi + slack
    }

    pub fn midpoint(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// Itinerary symbol: branch address, or the discontinuity marker emitted on
/// an exact hit of the cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symbol {
    Zero,
    One,
    Cut,
}

impl Symbol {
    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Cut => '*',
        }
    }
}

/// An orbit segment together with its symbolic address sequence.
///
/// `truncated` is set when the orbit landed exactly on the cut: the symbol
/// list then ends with `Cut` and no further states are produced, so
/// `symbols.len() == states.len()` instead of the usual `states.len() - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub states: Vec<f64>,
    pub symbols: Vec<Symbol>,
    pub truncated: bool,
}

/// One of the four quantised interval maps, fully parameterised.
///
/// `gamma` caches 1/beta. `s` is the scale: the constructor pins it to 1 for
/// Bernoulli and to (beta-1)^-1 for cautious so that the branch offset
/// s*(beta-1) and every width and bound formula read uniformly across
/// flavors. `rho` is the Bernoulli threshold shift and `None` elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub flavor: MapFlavor,
    pub beta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 1.0 || beta >= 2.0 {
        return Err(Error::InvalidBeta(beta));
    }
    Ok(())
}

impl MapSpec {
    /// Classical PCM quantiser with the decision threshold shifted from 1/2
    /// to (1 + rho)/2. Internally beta = 2, nu = 1 + rho, s = 1, so the cut
    /// gamma*nu lands exactly on the shifted threshold.
    pub fn bernoulli(rho: f64) -> Result<Self> {
        if !rho.is_finite() || !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidRho(rho));
        }
        Ok(MapSpec {
            flavor: MapFlavor::Bernoulli,
            beta: 2.0,
            gamma: 0.5,
            nu: 1.0 + rho,
            s: 1.0,
            rho: Some(rho),
        })
    }

    /// Ordinary beta-expansion map with a free threshold nu in
    /// [1, (beta-1)^-1]. nu = 1 is the greedy map, nu = (beta-1)^-1 the
    /// lazy map, anything strictly between is cautious proper.
    pub fn cautious(beta: f64, nu: f64) -> Result<Self> {
        check_beta(beta)?;
        let s = (beta - 1.0).recip();
        if !nu.is_finite() || nu < 1.0 || nu > s {
            return Err(Error::InvalidNu { nu, lo: 1.0, hi: s });
        }
        Ok(MapSpec {
            flavor: MapFlavor::Cautious,
            beta,
            gamma: beta.recip(),
            nu,
            s,
            rho: None,
        })
    }

    pub fn greedy(beta: f64) -> Result<Self> {
        Self::cautious(beta, 1.0)
    }

    pub fn lazy(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Self::cautious(beta, (beta - 1.0).recip())
    }

    /// Cautious map rescaled to the domain [0, s); the threshold band
    /// becomes [s(beta-1), s].
    pub fn scale_adjusted(beta: f64, nu: f64, s: f64) -> Result<Self> {
        check_beta(beta)?;
        Self::scaled(MapFlavor::ScaleAdjusted, beta, nu, s)
    }

    /// Negative beta-expansion map on [0, s): both branches decrease, so the
    /// expansion proceeds in powers of -gamma.
    pub fn negative(beta: f64, nu: f64, s: f64) -> Result<Self> {
        check_beta(beta)?;
        Self::scaled(MapFlavor::NegativeBeta, beta, nu, s)
    }

    fn scaled(flavor: MapFlavor, beta: f64, nu: f64, s: f64) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidScale(s));
        }
        let lo = s * (beta - 1.0);
        if !nu.is_finite() || nu < lo || nu > s {
            return Err(Error::InvalidNu { nu, lo, hi: s });
        }
        Ok(MapSpec {
            flavor,
            beta,
            gamma: beta.recip(),
            nu,
            s,
            rho: None,
        })
    }

    /// Same map, different threshold. This is how a fluctuating-threshold
    /// encoder steps: the geometry (beta, s) is fixed, nu_i changes.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        let band = self.threshold_band();
        if !nu.is_finite() || nu < band.lo || nu > band.hi {
            return Err(Error::InvalidNu {
                nu,
                lo: band.lo,
                hi: band.hi,
            });
        }
        let mut spec = *self;
        spec.nu = nu;
        if spec.flavor == MapFlavor::Bernoulli {
            spec.rho = Some(nu - 1.0);
        }
        Ok(spec)
    }

    /// The branch discontinuity c = gamma * nu; the emitted bit is the
    /// indicator of x >= c.
    pub fn cut(&self) -> f64 {
        self.gamma * self.nu
    }

    /// Legal band for the threshold nu. Uniformly [s(beta-1), s] thanks to
    /// the s conventions of the constructors; a Bernoulli spec with rho > 0
    /// deliberately sits outside its own band, which is precisely why PCM
    /// is fragile.
    pub fn threshold_band(&self) -> Interval {
        match self.flavor {
            // rho in [0, 1) maps to nu in [1, 2): the largest band tolerable
            // before the quantiser input can no longer reach the cut.
            MapFlavor::Bernoulli => Interval::new(1.0, 2.0),
            _ => Interval::new(self.s * (self.beta - 1.0), self.s),
        }
    }

    /// Domain of admissible initial states. Cautious is closed at the top
    /// (the upper endpoint is a fixed point of the lazy branch); the rest
    /// are half-open.
    pub fn domain(&self) -> Interval {
        match self.flavor {
            MapFlavor::Bernoulli => Interval::new(0.0, 1.0),
            _ => Interval::new(0.0, self.s),
        }
    }

    pub fn domain_closed_above(&self) -> bool {
        self.flavor == MapFlavor::Cautious
    }

    pub(crate) fn admits_initial(&self, x: f64) -> bool {
        if !x.is_finite() || x < 0.0 {
            return false;
        }
        let hi = self.domain().hi;
        x < hi || (self.domain_closed_above() && x == hi)
    }

    /// Branch offset of the upper branch, s*(beta-1); equal to 1 for both
    /// Bernoulli and cautious under the constructor conventions.
    pub fn branch_offset(&self) -> f64 {
        self.s * (self.beta - 1.0)
    }
}

/// One application of the map: returns the image and the branch bit.
///
/// States are admitted on the closed domain [0, hi] plus `DOMAIN_SLACK` of
/// rounding overshoot, which is clamped away. A Bernoulli map with rho > 0
/// genuinely escapes [0, 1) (that is its failure mode), so it gets no upper
/// bound and no clamp.
pub fn map_step(spec: &MapSpec, x: f64) -> Result<(f64, u8)> {
    let unbounded = spec.flavor == MapFlavor::Bernoulli && spec.rho != Some(0.0);
    let hi = spec.domain().hi;
    let x = admit(x, hi, unbounded)?;
    let bit = u8::from(x >= spec.cut());
    let next = match spec.flavor {
        MapFlavor::NegativeBeta => {
            if bit == 1 {
                spec.beta * spec.s - spec.beta * x
            } else {
                spec.s - spec.beta * x
            }
        }
        _ => spec.beta * x - f64::from(bit) * spec.branch_offset(),
    };
    let next = admit(next, hi, unbounded)?;
    Ok((next, bit))
}

fn admit(x: f64, hi: f64, unbounded: bool) -> Result<f64> {
    if !x.is_finite() || x < -DOMAIN_SLACK || (!unbounded && x > hi + DOMAIN_SLACK) {
        return Err(Error::StateEscaped { x, hi });
    }
    if x < 0.0 {
        Ok(0.0)
    } else if !unbounded && x > hi {
        Ok(hi)
    } else {
        Ok(x)
    }
}

/// Orbit of x for n steps with its symbolic itinerary. An exact hit of the
/// cut emits the marker symbol and stops the sequence; `map_step` on its own
/// would take the upper branch there, the marker is an itinerary-only
/// convention.
pub fn itinerary(spec: &MapSpec, x: f64, n: usize) -> Result<Orbit> {
    if !spec.admits_initial(x) {
        return Err(Error::DomainViolation {
            x,
            hi: spec.domain().hi,
        });
    }
    let mut states = Vec::with_capacity(n + 1);
    let mut symbols = Vec::with_capacity(n);
    states.push(x);
    for _ in 0..n {
        let cur = *states.last().expect("states is never empty");
        if cur == spec.cut() {
            symbols.push(Symbol::Cut);
            return Ok(Orbit {
                states,
                symbols,
                truncated: true,
            });
        }
        let (next, bit) = map_step(spec, cur)?;
        symbols.push(if bit == 1 { Symbol::One } else { Symbol::Zero });
        states.push(next);
    }
    Ok(Orbit {
        states,
        symbols,
        truncated: false,
    })
}

/// The strongly invariant subinterval J of the map: once an orbit enters J
/// it never leaves.
pub fn invariant_subinterval(spec: &MapSpec) -> Result<Interval> {
    match spec.flavor {
        MapFlavor::Bernoulli => match spec.rho {
            Some(0.0) => Ok(Interval::new(0.0, 1.0)),
            Some(rho) => Err(Error::NoInvariantSubinterval(rho)),
            None => Err(Error::NoInvariantSubinterval(f64::NAN)),
        },
        MapFlavor::Cautious => Ok(Interval::new(spec.nu - 1.0, spec.nu)),
        MapFlavor::ScaleAdjusted => {
            Ok(Interval::new(spec.nu - spec.branch_offset(), spec.nu))
        }
        MapFlavor::NegativeBeta => {
            let (beta, nu, s) = (spec.beta, spec.nu, spec.s);
            // Which of the two decreasing branches spans the full height
            // decides the shape of J; the split points come from equating
            // branch images.
            let lo_case = s * (beta * beta - beta + 1.0) / (beta + 1.0);
            let hi_case = s * (2.0 * beta - 1.0) / (beta + 1.0);
            if nu < lo_case {
                Ok(Interval::new(
                    beta * nu - (beta * beta - beta) * s,
                    beta * s - nu,
                ))
            } else if nu < hi_case {
                Ok(Interval::new(s - nu, beta * s - nu))
            } else {
                Ok(Interval::new(s - nu, beta * nu - s * (beta - 1.0)))
            }
        }
    }
}

/// Smallest M such that the M-th iterate of x lies in the invariant
/// subinterval; 0 when x is already inside.
pub fn first_visit_time(spec: &MapSpec, x: f64, max_iter: usize) -> Result<usize> {
    let j = invariant_subinterval(spec)?;
    let mut cur = x;
    for m in 0..=max_iter {
        if j.contains(cur) {
            return Ok(m);
        }
        cur = map_step(spec, cur)?.0;
    }
    Err(Error::NotAttracted(max_iter))
}

/// Duality involution psi(x) = (beta-1)^-1 - x exchanging the greedy and
/// lazy maps.
pub fn psi(beta: f64, x: f64) -> Result<f64> {
    check_beta(beta)?;
    let hi = (beta - 1.0).recip();
    if !x.is_finite() || x < 0.0 || x > hi {
        return Err(Error::DomainViolation { x, hi });
    }
    Ok(hi - x)
}
