//! Monte Carlo MSE sweeps over encoder parameter grids.
//!
//! An experiment is a grid over (beta, nu*, epsilon, p_L); each cell draws
//! samples x uniformly on [0, 1), encodes, optionally estimates beta from
//! the (x, 1 - x) pair, decodes, and reports the mean squared error with a
//! standard error so orderings between cells can be asserted statistically.
//! Every cell runs from its own seed derived from the master seed and the
//! cell's grid coordinates, so cells are independent of execution order and
//! a run is reproducible byte for byte.

pub mod output;
pub mod recipes;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{decode, decode_bits, error_bound, DecodeMode};
use crate::encoder::{encode, encode_pair, make_threshold_sequence};
use crate::estimation::{estimate_beta, estimate_beta_negative};
use crate::maps::{MapFlavor, MapSpec};
use crate::{Error, Result};

/// Slack added to the hard error bound before counting a violation, purely
/// for rounding noise in the comparison itself.
const BOUND_SLACK: f64 = 1e-12;

/// The geometry of a sweep: which flavor, which grids, how many samples.
///
/// `nu_band` defaults to the flavor's full threshold band per beta;
/// `scale` is required for the scale_adjusted and negative flavors and must
/// be absent for cautious, whose scale is pinned to (beta - 1)^-1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub flavor: MapFlavor,
    pub betas: Vec<f64>,
    /// Bits per sample, L.
    pub bits: usize,
    pub nu_points: usize,
    #[serde(default)]
    pub nu_band: Option<[f64; 2]>,
    pub epsilons: Vec<f64>,
    /// Decode modes p_L, each one of 0 (left), 1 (midpoint), 2 (right).
    pub modes: Vec<u8>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub use_estimated_beta: bool,
    #[serde(default)]
    pub scale: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::NoSamples);
        }
        if self.betas.is_empty() {
            return Err(Error::EmptyGrid("betas"));
        }
        if self.nu_points == 0 {
            return Err(Error::EmptyGrid("nu grid"));
        }
        if self.epsilons.is_empty() {
            return Err(Error::EmptyGrid("epsilons"));
        }
        if self.modes.is_empty() {
            return Err(Error::EmptyGrid("p_L modes"));
        }
        for &m in &self.modes {
            DecodeMode::from_p(m)?;
        }
        if self.bits == 0 {
            return Err(Error::InvalidLength(0));
        }
        match self.flavor {
            MapFlavor::Bernoulli => {
                return Err(Error::Config(
                    "sweeps cover the cautious, scale_adjusted and negative flavors".into(),
                ))
            }
            MapFlavor::Cautious => {
                if self.scale.is_some() {
                    return Err(Error::Config(
                        "scale is implied (beta - 1)^-1 for the cautious flavor".into(),
                    ));
                }
            }
            MapFlavor::ScaleAdjusted | MapFlavor::NegativeBeta => {
                if self.scale.is_none() {
                    return Err(Error::Config(format!(
                        "the {} flavor needs an explicit scale",
                        self.flavor
                    )));
                }
            }
        }
        if self.use_estimated_beta && self.flavor == MapFlavor::ScaleAdjusted {
            return Err(Error::Config(
                "beta estimation runs on the cautious and negative flavors".into(),
            ));
        }
        if let Some([lo, hi]) = self.nu_band {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::Config(format!("nu band [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    /// The inclusive nu grid for one beta. A single point sits at the band's
    /// lower (greedy) end; endpoints are returned exactly so that the band
    /// boundaries themselves are swept.
    pub fn nu_grid(&self, beta: f64) -> Result<Vec<f64>> {
        let (lo, hi) = match self.nu_band {
            Some([lo, hi]) => (lo, hi),
            None => match self.flavor {
                MapFlavor::Cautious => (1.0, (beta - 1.0).recip()),
                MapFlavor::ScaleAdjusted | MapFlavor::NegativeBeta => {
                    let s = self.scale.expect("validated");
                    (s * (beta - 1.0), s)
                }
                MapFlavor::Bernoulli => unreachable!("validated"),
            },
        };
        let n = self.nu_points;
        if n == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect())
    }

    /// Shrinks the run to CI scale: 1,000 samples over 20 nu points.
    pub fn quicken(&mut self) {
        self.samples = 1_000;
        self.nu_points = 20;
    }
}

/// One grid cell's coordinates, everything `mse_cell` needs besides the
/// sample count and seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellCoords {
    pub flavor: MapFlavor,
    pub beta: f64,
    pub l: usize,
    pub nu_star: f64,
    pub epsilon: f64,
    pub p_l: u8,
    pub use_estimated_beta: bool,
    pub scale: Option<f64>,
}

impl CellCoords {
    fn map_spec(&self) -> Result<MapSpec> {
        match self.flavor {
            MapFlavor::Cautious => MapSpec::cautious(self.beta, self.nu_star),
            MapFlavor::ScaleAdjusted => {
                let s = self.require_scale()?;
                MapSpec::scale_adjusted(self.beta, self.nu_star, s)
            }
            MapFlavor::NegativeBeta => {
                let s = self.require_scale()?;
                MapSpec::negative(self.beta, self.nu_star, s)
            }
            MapFlavor::Bernoulli => Err(Error::Config(
                "sweeps cover the cautious, scale_adjusted and negative flavors".into(),
            )),
        }
    }

    fn require_scale(&self) -> Result<f64> {
        self.scale.ok_or_else(|| {
            Error::Config(format!("the {} flavor needs an explicit scale", self.flavor))
        })
    }
}

/// One cell's results; the coordinate columns repeat the cell so that a CSV
/// of rows is self-describing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub flavor: MapFlavor,
    pub beta: f64,
    pub l: usize,
    pub nu_star: f64,
    pub epsilon: f64,
    pub p_l: u8,
    pub samples: usize,
    /// The cell's own derived seed, not the master seed.
    pub seed: u64,
    pub use_estimated_beta: bool,
    pub s: f64,
    pub mse_x: f64,
    pub se_x: f64,
    pub mse_beta: Option<f64>,
    pub se_beta: Option<f64>,
    /// Hard-bound breaches on exact-beta cells; estimation cells do not
    /// check the bound, which only covers decoding with the true gamma.
    pub violations: u64,
    /// Samples dropped because beta estimation failed.
    pub failures: u64,
}

/// SplitMix64 finalizer, the usual way to spread consecutive seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a cell seed from the master seed and the cell's grid indices,
/// so results do not depend on execution order.
pub fn cell_seed(master: u64, coords: [u64; 4]) -> u64 {
    let mut h = splitmix64(master);
    for v in coords {
        h = splitmix64(h ^ v);
    }
    h
}

struct Accumulator {
    sum: f64,
    sum_sq: f64,
    n: u64,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            sum: 0.0,
            sum_sq: 0.0,
            n: 0,
        }
    }

    fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
        self.n += 1;
    }

    /// Mean and its standard error sqrt(Var/n) over the pushed values.
    fn mean_se(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }
}

/// Runs one cell: draws `samples` inputs, encodes with per-sample threshold
/// sequences drawn from the cell RNG, decodes, and accumulates squared
/// errors. Deterministic given the seed.
///
/// With `use_estimated_beta` the decoder runs on beta estimated from the
/// paired records of x and 1 - x, which share the sample's threshold
/// sequence; the negative flavor picks the candidate root closest to the
/// nominal beta. Samples whose estimation fails are dropped and counted in
/// `failures` rather than aborting the cell.
pub fn mse_cell(coords: &CellCoords, samples: usize, seed: u64) -> Result<ResultRow> {
    mse_cell_at(coords, samples, seed, None)
}

/// `mse_cell` with every draw of x replaced by a fixed value; the harness
/// tests use it to pin closed-form cells.
pub(crate) fn mse_cell_at(
    coords: &CellCoords,
    samples: usize,
    seed: u64,
    force_x: Option<f64>,
) -> Result<ResultRow> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let mode = DecodeMode::from_p(coords.p_l)?;
    let spec = coords.map_spec()?;
    let band = spec.threshold_band();
    let bound = error_bound(&spec, coords.l, mode) + BOUND_SLACK;
    let gamma_nominal = coords.beta.recip();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut err_x = Accumulator::new();
    let mut err_beta = Accumulator::new();
    let mut violations = 0u64;
    let mut failures = 0u64;

    for _ in 0..samples {
        let x = force_x.unwrap_or_else(|| rng.random_range(0.0..1.0));
        let tseed: u64 = rng.random();
        let thresholds =
            make_threshold_sequence(band, coords.nu_star, coords.epsilon, coords.l, tseed)?;
        if coords.use_estimated_beta {
            let (bx, by) = encode_pair(&spec, x, &thresholds)?;
            let estimated = match coords.flavor {
                MapFlavor::Cautious => estimate_beta(&bx, &by, mode).ok(),
                MapFlavor::NegativeBeta => estimate_beta_negative(&bx, &by)
                    .ok()
                    .and_then(|roots| {
                        roots.into_iter().min_by(|a, b| {
                            (a.gamma_hat - gamma_nominal)
                                .abs()
                                .total_cmp(&(b.gamma_hat - gamma_nominal).abs())
                        })
                    }),
                _ => {
                    return Err(Error::UnsupportedFlavor {
                        flavor: coords.flavor,
                        op: "mse_cell with estimated beta",
                    })
                }
            };
            let Some(est) = estimated else {
                failures += 1;
                continue;
            };
            let s_hat = match coords.flavor {
                MapFlavor::Cautious => est.implied_scale(),
                _ => spec.s,
            };
            let xhat = decode_bits(coords.flavor, &bx.bits, est.beta_hat, s_hat, mode)?;
            err_x.push((x - xhat) * (x - xhat));
            let db = est.beta_hat - coords.beta;
            err_beta.push(db * db);
        } else {
            let record = encode(&spec, x, &thresholds)?;
            let xhat = decode(&record, mode)?;
            let err = (x - xhat).abs();
            if err > bound {
                violations += 1;
            }
            err_x.push(err * err);
        }
    }

    if err_x.n == 0 {
        return Err(Error::NoSamples);
    }
    let (mse_x, se_x) = err_x.mean_se();
    let (mse_beta, se_beta) = if coords.use_estimated_beta {
        let (m, s) = err_beta.mean_se();
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    Ok(ResultRow {
        flavor: coords.flavor,
        beta: coords.beta,
        l: coords.l,
        nu_star: coords.nu_star,
        epsilon: coords.epsilon,
        p_l: coords.p_l,
        samples,
        seed,
        use_estimated_beta: coords.use_estimated_beta,
        s: spec.s,
        mse_x,
        se_x,
        mse_beta,
        se_beta,
        violations,
        failures,
    })
}

/// Runs every cell of the grid in lexicographic coordinate order
/// (beta, nu, epsilon, p_L), one row per cell.
///
/// Cells are independent and carry order-free seeds, so a parallel executor
/// could run them in any order and sort the rows afterwards; this runner is
/// sequential.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows =
        Vec::with_capacity(spec.betas.len() * spec.nu_points * spec.epsilons.len() * spec.modes.len());
    for (bi, &beta) in spec.betas.iter().enumerate() {
        let grid = spec.nu_grid(beta)?;
        for (ni, &nu_star) in grid.iter().enumerate() {
            for (ei, &epsilon) in spec.epsilons.iter().enumerate() {
                for (mi, &p_l) in spec.modes.iter().enumerate() {
                    let coords = CellCoords {
                        flavor: spec.flavor,
                        beta,
                        l: spec.bits,
                        nu_star,
                        epsilon,
                        p_l,
                        use_estimated_beta: spec.use_estimated_beta,
                        scale: spec.scale,
                    };
                    let seed =
                        cell_seed(spec.seed, [bi as u64, ni as u64, ei as u64, mi as u64]);
                    rows.push(mse_cell(&coords, spec.samples, seed)?);
                }
            }
        }
    }
    Ok(rows)
}
