//! L-bit expansions of a sample under any map flavor, with fixed or
//! randomly fluctuating threshold sequences, plus the standalone flaky
//! quantiser.
//!
//! The encoder is nothing more than the map iterated with a per-step
//! threshold nu_i, recording branch bits. All the robustness claims live
//! downstream: as long as every nu_i stays inside the flavor's band, the
//! decoder brackets x at the full contraction rate no matter how the
//! thresholds wander.

use crate::maps::{map_step, Interval, MapFlavor, MapSpec};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A per-step threshold sequence nu_1..nu_L.
///
/// `base` is the nominal threshold nu*, `epsilon` the relative fluctuation
/// bound, `seed` the generator seed that produced `values`. Values are
/// already clipped into the legal band, so consumers can use them blindly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSequence {
    pub values: Vec<f64>,
    pub base: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl ThresholdSequence {
    /// Constant sequence nu_i = nu, the fixed-threshold encoder.
    pub fn constant(nu: f64, l: usize) -> Self {
        ThresholdSequence {
            values: vec![nu; l],
            base: nu,
            epsilon: 0.0,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws nu_i = clip(nu_star * (1 + u_i), band) with u_i independent and
/// uniform on [-epsilon, +epsilon].
///
/// Clipping rather than rejection: the band constraint must hold for the
/// decoder's containment guarantee, and clipping keeps epsilon a free dial
/// instead of a rejection rate. The generator is ChaCha8, fixed here so CSV
/// outputs reproduce bit-exactly across platforms.
pub fn make_threshold_sequence(
    band: Interval,
    nu_star: f64,
    epsilon: f64,
    l: usize,
    seed: u64,
) -> Result<ThresholdSequence> {
    if !nu_star.is_finite() || nu_star < band.lo || nu_star > band.hi {
        return Err(Error::InvalidNu {
            nu: nu_star,
            lo: band.lo,
            hi: band.hi,
        });
    }
    if !epsilon.is_finite() || !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidEpsilon {
            epsilon,
            lo: band.lo,
            hi: band.hi,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..l)
        .map(|_| {
            let u = if epsilon == 0.0 {
                0.0
            } else {
                rng.random_range(-epsilon..=epsilon)
            };
            (nu_star * (1.0 + u)).clamp(band.lo, band.hi)
        })
        .collect();
    Ok(ThresholdSequence {
        values,
        base: nu_star,
        epsilon,
        seed,
    })
}

/// What the flaky quantiser does when its input falls strictly inside the
/// indeterminacy band (nu0, nu1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlakyPolicy {
    Greedy,
    Lazy,
    RandomFair(u64),
}

/// An imperfect quantiser that answers reliably only outside [nu0, nu1].
#[derive(Clone, Debug)]
pub struct FlakyBand {
    pub nu0: f64,
    pub nu1: f64,
    pub policy: FlakyPolicy,
    coin: Option<ChaCha8Rng>,
}

impl FlakyBand {
    /// The band must satisfy 1 <= nu0 < nu1 <= (beta-1)^-1: outside those
    /// limits even a perfectly flaky quantiser loses the containment
    /// guarantee.
    pub fn new(beta: f64, nu0: f64, nu1: f64, policy: FlakyPolicy) -> Result<Self> {
        if !beta.is_finite() || beta <= 1.0 || beta >= 2.0 {
            return Err(Error::InvalidBeta(beta));
        }
        let hi = (beta - 1.0).recip();
        if !nu0.is_finite() || !nu1.is_finite() || nu0 < 1.0 || nu0 >= nu1 || nu1 > hi {
            return Err(Error::InvalidBand {
                nu0,
                nu1,
                lo: 1.0,
                hi,
            });
        }
        let coin = match policy {
            FlakyPolicy::RandomFair(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Ok(FlakyBand {
            nu0,
            nu1,
            policy,
            coin,
        })
    }
}

/// Quantises z: 0 at or below nu0, 1 at or above nu1, and the policy's
/// answer strictly inside the band. `RandomFair` advances its own seeded
/// coin, one draw per in-band call.
pub fn flaky_quantise(z: f64, band: &mut FlakyBand) -> Result<u8> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::InvalidQuantiserInput(z));
    }
    if z <= band.nu0 {
        Ok(0)
    } else if z >= band.nu1 {
        Ok(1)
    } else {
        match band.policy {
            FlakyPolicy::Greedy => Ok(1),
            FlakyPolicy::Lazy => Ok(0),
            FlakyPolicy::RandomFair(_) => {
                let coin = band.coin.as_mut().expect("RandomFair carries its coin");
                Ok(u8::from(coin.random::<bool>()))
            }
        }
    }
}

/// An encoded sample: the emitted bits, the L-fold map image (residue), and
/// everything needed to decode or audit the record.
#[derive(Clone, Debug, PartialEq)]
pub struct BitRecord {
    pub spec: MapSpec,
    pub bits: Vec<u8>,
    pub residue: f64,
    pub thresholds: ThresholdSequence,
}

impl BitRecord {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Replays the exact reconstruction identity: the bits plus the residue
    /// recover x with no error beyond rounding. Ordinary flavors use
    /// x = s(beta-1) * sum b_i gamma^i + gamma^L * residue; the negative
    /// flavor uses x = (-gamma)^L * residue - s * sum f_i (-gamma)^i with
    /// f_i = 1 + b_i (beta-1).
    pub fn reconstruct(&self) -> f64 {
        let spec = &self.spec;
        let gamma = spec.gamma;
        let l = self.bits.len() as i32;
        match spec.flavor {
            MapFlavor::NegativeBeta => {
                let t = -gamma;
                let mut acc = 0.0;
                for &b in self.bits.iter().rev() {
                    let f = 1.0 + f64::from(b) * (spec.beta - 1.0);
                    acc = acc * t + f;
                }
                t.powi(l) * self.residue - spec.s * (acc * t)
            }
            _ => {
                let mut acc = 0.0;
                for &b in self.bits.iter().rev() {
                    acc = acc * gamma + f64::from(b);
                }
                spec.branch_offset() * (acc * gamma) + gamma.powi(l) * self.residue
            }
        }
    }
}

/// Runs the map for L = thresholds.len() steps from x, thresholding the
/// (i-1)-fold image at gamma * nu_i.
pub fn encode(spec: &MapSpec, x: f64, thresholds: &ThresholdSequence) -> Result<BitRecord> {
    if thresholds.is_empty() {
        return Err(Error::InvalidLength(0));
    }
    if !spec.admits_initial(x) {
        return Err(Error::DomainViolation {
            x,
            hi: spec.domain().hi,
        });
    }
    let mut cur = x;
    let mut bits = Vec::with_capacity(thresholds.len());
    for &nu in &thresholds.values {
        let step_spec = spec.with_nu(nu)?;
        let (next, bit) = map_step(&step_spec, cur)?;
        bits.push(bit);
        cur = next;
    }
    Ok(BitRecord {
        spec: *spec,
        bits,
        residue: cur,
        thresholds: thresholds.clone(),
    })
}

/// Fixed-threshold convenience: encode with nu_i identically spec.nu.
pub fn encode_fixed(spec: &MapSpec, x: f64, l: usize) -> Result<BitRecord> {
    encode(spec, x, &ThresholdSequence::constant(spec.nu, l))
}

/// Encodes x and its mirror y = 1 - x under the same threshold sequence,
/// the input pair that beta estimation consumes.
pub fn encode_pair(
    spec: &MapSpec,
    x: f64,
    thresholds: &ThresholdSequence,
) -> Result<(BitRecord, BitRecord)> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::DomainViolation { x, hi: 1.0 });
    }
    let bx = encode(spec, x, thresholds)?;
    let by = encode(spec, 1.0 - x, thresholds)?;
    Ok((bx, by))
}

/// First n branch bits of the fixed-threshold orbit of x; the raw material
/// for bitstream statistics.
pub fn bit_stream(spec: &MapSpec, x: f64, n: usize) -> Result<Vec<u8>> {
    if !spec.admits_initial(x) {
        return Err(Error::DomainViolation {
            x,
            hi: spec.domain().hi,
        });
    }
    let mut cur = x;
    let mut bits = Vec::with_capacity(n);
    for _ in 0..n {
        let (next, bit) = map_step(spec, cur)?;
        bits.push(bit);
        cur = next;
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::DOMAIN_SLACK;

    #[test]
    fn encode_greedy_example() {
        let spec = MapSpec::greedy(1.5).unwrap();
        let rec = encode_fixed(&spec, 0.5, 4).unwrap();
        assert_eq!(rec.bits, vec![0, 1, 0, 0]);
        assert!((rec.residue - 0.28125).abs() < 1e-15);
    }

    #[test]
    fn encode_zero_gives_all_zero_bits() {
        for spec in [
            MapSpec::greedy(1.5).unwrap(),
            MapSpec::cautious(1.8, 1.1).unwrap(),
            MapSpec::bernoulli(0.0).unwrap(),
            MapSpec::scale_adjusted(1.5, 1.0, 1.3).unwrap(),
        ] {
            let rec = encode_fixed(&spec, 0.0, 8).unwrap();
            assert!(rec.bits.iter().all(|&b| b == 0), "{spec:?}");
        }
    }

    #[test]
    fn encode_negative_example_and_identity() {
        let spec = MapSpec::negative(1.5, 1.5, 2.0).unwrap();
        let rec = encode_fixed(&spec, 0.5, 4).unwrap();
        assert_eq!(rec.bits, vec![0, 1, 1, 1]);
        assert!((rec.residue - 1.03125).abs() < 1e-15);
        assert!((rec.reconstruct() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn encode_rejects_bad_input() {
        let spec = MapSpec::greedy(1.5).unwrap();
        assert!(matches!(
            encode_fixed(&spec, -0.1, 4),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            encode_fixed(&spec, 0.5, 0),
            Err(Error::InvalidLength(0))
        ));
        // Cautious domain is closed above at s = 2.
        assert!(encode_fixed(&spec, 2.0, 4).is_ok());
        assert!(matches!(
            encode_fixed(&spec, 2.0 + 1e-9, 4),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn threshold_sequence_zero_epsilon_is_constant() {
        let band = Interval::new(1.0, 2.0);
        let seq = make_threshold_sequence(band, 1.2, 0.0, 16, 99).unwrap();
        assert!(seq.values.iter().all(|&v| v == 1.2));
    }

    #[test]
    fn threshold_sequence_clips_into_band() {
        let band = Interval::new(1.0, 2.0);
        let seq = make_threshold_sequence(band, 1.2, 0.2, 1000, 7).unwrap();
        let lo = seq.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = seq.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // 1.2 * 0.8 = 0.96 < 1, so the lower clip must engage; the top stays
        // below 1.2 * 1.2 = 1.44, comfortably inside the band.
        assert_eq!(lo, 1.0, "lower clip never engaged");
        assert!(hi <= 1.44 + 1e-15);
        assert!(hi > 1.4, "fluctuation never approached the upper extent");
    }

    #[test]
    fn threshold_sequence_is_deterministic() {
        let band = Interval::new(1.0, 2.0);
        let a = make_threshold_sequence(band, 1.3, 0.3, 64, 1234).unwrap();
        let b = make_threshold_sequence(band, 1.3, 0.3, 64, 1234).unwrap();
        assert_eq!(a, b);
        let c = make_threshold_sequence(band, 1.3, 0.3, 64, 1235).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn threshold_sequence_validation() {
        let band = Interval::new(1.0, 2.0);
        assert!(matches!(
            make_threshold_sequence(band, 2.5, 0.1, 8, 0),
            Err(Error::InvalidNu { .. })
        ));
        assert!(matches!(
            make_threshold_sequence(band, 1.2, 1.0, 8, 0),
            Err(Error::InvalidEpsilon { .. })
        ));
    }

    #[test]
    fn flaky_quantise_examples() {
        let mut band = FlakyBand::new(1.5, 1.0, 2.0, FlakyPolicy::Greedy).unwrap();
        assert_eq!(flaky_quantise(0.5, &mut band).unwrap(), 0);
        assert_eq!(flaky_quantise(2.5, &mut band).unwrap(), 1);
        assert_eq!(flaky_quantise(1.5, &mut band).unwrap(), 1);

        let mut lazy = FlakyBand::new(1.5, 1.0, 2.0, FlakyPolicy::Lazy).unwrap();
        assert_eq!(flaky_quantise(1.5, &mut lazy).unwrap(), 0);
    }

    #[test]
    fn flaky_random_fair_is_seeded_and_fairish() {
        let mut band = FlakyBand::new(1.5, 1.0, 2.0, FlakyPolicy::RandomFair(5)).unwrap();
        let draws: Vec<u8> = (0..1000)
            .map(|_| flaky_quantise(1.5, &mut band).unwrap())
            .collect();
        let ones: usize = draws.iter().map(|&b| usize::from(b)).sum();
        assert!((400..=600).contains(&ones), "coin badly biased: {ones}");
        let mut again = FlakyBand::new(1.5, 1.0, 2.0, FlakyPolicy::RandomFair(5)).unwrap();
        let replay: Vec<u8> = (0..1000)
            .map(|_| flaky_quantise(1.5, &mut again).unwrap())
            .collect();
        assert_eq!(draws, replay);
    }

    #[test]
    fn flaky_band_validation() {
        assert!(matches!(
            FlakyBand::new(1.5, 2.0, 1.0, FlakyPolicy::Greedy),
            Err(Error::InvalidBand { .. })
        ));
        assert!(matches!(
            FlakyBand::new(1.5, 0.5, 1.5, FlakyPolicy::Greedy),
            Err(Error::InvalidBand { .. })
        ));
        assert!(matches!(
            FlakyBand::new(1.5, 1.0, 2.5, FlakyPolicy::Greedy),
            Err(Error::InvalidBand { .. })
        ));
        assert!(matches!(
            flaky_quantise(-1.0, &mut FlakyBand::new(1.5, 1.0, 2.0, FlakyPolicy::Greedy).unwrap()),
            Err(Error::InvalidQuantiserInput(_))
        ));
    }

    #[test]
    fn reconstruction_identity_all_flavors() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let l = 24;
        for case in 0..4 {
            for _ in 0..10_000 {
                let beta = rng.random_range(1.1..1.95);
                let (spec, band) = match case {
                    0 => {
                        let s = MapSpec::bernoulli(0.0).unwrap();
                        let band = s.threshold_band();
                        (s, band)
                    }
                    1 => {
                        let hi = (beta - 1.0f64).recip();
                        let nu = rng.random_range(1.0..hi);
                        let sp = MapSpec::cautious(beta, nu).unwrap();
                        (sp, sp.threshold_band())
                    }
                    2 => {
                        let s = rng.random_range(0.5..3.0);
                        let lo = s * (beta - 1.0);
                        let nu = rng.random_range(lo..s);
                        let sp = MapSpec::scale_adjusted(beta, nu, s).unwrap();
                        (sp, sp.threshold_band())
                    }
                    _ => {
                        let s = rng.random_range(0.5..3.0);
                        let lo = s * (beta - 1.0);
                        let nu = rng.random_range(lo..s);
                        let sp = MapSpec::negative(beta, nu, s).unwrap();
                        (sp, sp.threshold_band())
                    }
                };
                let epsilon = if case == 0 {
                    0.0
                } else {
                    rng.random_range(0.0..0.4)
                };
                let seq =
                    make_threshold_sequence(band, spec.nu, epsilon, l, rng.random()).unwrap();
                let x = rng.random_range(0.0..spec.domain().hi.min(1.0));
                let rec = encode(&spec, x, &seq).unwrap();
                let back = rec.reconstruct();
                assert!(
                    (back - x).abs() <= 1e-10 * x.abs().max(1.0),
                    "identity broke for {spec:?} x={x}: {back}"
                );
                let hi = spec.domain().hi;
                assert!(
                    rec.residue >= -DOMAIN_SLACK && rec.residue <= hi + DOMAIN_SLACK,
                    "residue {0} outside codomain", rec.residue
                );
            }
        }
    }

    #[test]
    fn encode_matches_greedy_and_lazy_recursions() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let l = 24;
        for &beta in &[1.5f64, 1.8] {
            let gamma = beta.recip();
            let hi = (beta - 1.0).recip();
            let greedy_spec = MapSpec::greedy(beta).unwrap();
            let lazy_spec = MapSpec::lazy(beta).unwrap();
            for _ in 0..1000 {
                let x = rng.random_range(0.0..hi);
                let got_greedy = encode_fixed(&greedy_spec, x, l).unwrap().bits;
                let got_lazy = encode_fixed(&lazy_spec, x, l).unwrap().bits;
                let mut partial = 0.0;
                let mut want_greedy = Vec::with_capacity(l);
                for m in 1..=l {
                    let bit = u8::from(partial + gamma.powi(m as i32) <= x);
                    partial += f64::from(bit) * gamma.powi(m as i32);
                    want_greedy.push(bit);
                }
                let mut partial = 0.0;
                let mut want_lazy = Vec::with_capacity(l);
                for m in 1..=l {
                    // sum_{i>m} gamma^i = gamma^m (beta-1)^-1
                    let tail = gamma.powi(m as i32) * hi;
                    let bit = u8::from(partial + tail < x);
                    partial += f64::from(bit) * gamma.powi(m as i32);
                    want_lazy.push(bit);
                }
                assert_eq!(got_greedy, want_greedy, "greedy x={x} beta={beta}");
                assert_eq!(got_lazy, want_lazy, "lazy x={x} beta={beta}");
            }
        }
    }
}
