//! Two-state Markov-chain analysis of encoder bitstreams.
//!
//! An encoder run emits bits whose pair statistics look Markovian. The
//! analytic transition matrix here treats the branch lengths of the cautious
//! map as if states were spread uniformly, which the true invariant measure
//! does not generally satisfy; empirical estimates from long runs can sit
//! visibly away from it (compare `lambda2` of [`analytic_transition`] with
//! an [`empirical_transition`] run at beta = 1.5). At Markov-partition
//! parameters such as the golden mean with nu = 1 the two agree.
//!
//! Also here: the truncated Parry series for the greedy invariant density,
//! and Kalman's embedding of a two-state chain into a piecewise-linear map
//! on (0, 1], whose four-branch transition structure reproduces the chain's
//! spectrum padded with zeros.

use nalgebra::{Complex, Matrix4};
use serde::Serialize;

use crate::{Error, Result};

/// Entry slack for row-stochastic validation.
const STOCHASTIC_TOL: f64 = 1e-12;

/// A row-stochastic 2x2 matrix; `p[i][j]` is Pr[next = j | current = i].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionMatrix2 {
    pub p: [[f64; 2]; 2],
}

impl TransitionMatrix2 {
    /// Validates entries into [0, 1] (with rounding slack) and row sums to
    /// 1 within 1e-12.
    pub fn new(p: [[f64; 2]; 2]) -> Result<Self> {
        let mut q = p;
        for (row, r) in q.iter_mut().enumerate() {
            for v in r.iter_mut() {
                if !v.is_finite() || *v < -STOCHASTIC_TOL || *v > 1.0 + STOCHASTIC_TOL {
                    return Err(Error::InvalidProbability(*v));
                }
                *v = v.clamp(0.0, 1.0);
            }
            let sum = r[0] + r[1];
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { row, sum });
            }
        }
        Ok(TransitionMatrix2 { p: q })
    }

    pub fn trace(&self) -> f64 {
        self.p[0][0] + self.p[1][1]
    }
}

/// Adjacent-pair frequencies of a bitstream; `n01` counts 0 followed by 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChainCounts {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

/// Which branch-geometry case of the analytic matrix applies, split at
/// nu = beta/(beta^2-1) and nu = beta^2/(beta^2-1), each closed on the left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChainRegion {
    Lower,
    Middle,
    Upper,
}

/// The analytic chain for a cautious encoder at (beta, nu).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticChain {
    pub matrix: TransitionMatrix2,
    /// (Pr[X = 0], Pr[X = 1]) solving pi P = pi.
    pub stationary: [f64; 2],
    /// Second eigenvalue, trace - 1.
    pub lambda2: f64,
    pub region: ChainRegion,
    /// The middle-region eigenvalue form 1 - (U + 1/U)/beta evaluated
    /// unconditionally. For beta below the golden ratio the greedy
    /// threshold nu = 1 falls in the lower region, where the actual
    /// second eigenvalue differs from this form; both are kept visible
    /// so the discrepancy can be inspected.
    pub lambda2_middle_form: f64,
}

fn check_chain_parameters(beta: f64, nu: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 1.0 || beta >= 2.0 {
        return Err(Error::InvalidBeta(beta));
    }
    let hi = (beta - 1.0).recip();
    if !nu.is_finite() || !(1.0..=hi).contains(&nu) {
        return Err(Error::InvalidNu { nu, lo: 1.0, hi });
    }
    Ok(())
}

/// Closed-form transition matrix, stationary distribution and second
/// eigenvalue for the fixed-threshold cautious encoder.
///
/// Branch-length ratios give the entries through U = S/T with
/// S = nu(beta - 1) and T = nu - beta(nu - 1); the three regions reflect
/// which branch pieces straddle the cut, and the formulas agree at both
/// region boundaries.
pub fn analytic_transition(beta: f64, nu: f64) -> Result<AnalyticChain> {
    check_chain_parameters(beta, nu)?;
    let s = nu * (beta - 1.0);
    let t = nu - beta * (nu - 1.0);
    let u = s / t;
    let b1 = beta / (beta * beta - 1.0);
    let b2 = beta * b1;
    let region = if nu < b1 {
        ChainRegion::Lower
    } else if nu < b2 {
        ChainRegion::Middle
    } else {
        ChainRegion::Upper
    };
    let a = u / beta;
    let b = (beta * u).recip();
    let p = match region {
        ChainRegion::Lower => [[1.0 - a, a], [1.0, 0.0]],
        ChainRegion::Middle => [[1.0 - a, a], [b, 1.0 - b]],
        ChainRegion::Upper => [[0.0, 1.0], [b, 1.0 - b]],
    };
    let matrix = TransitionMatrix2::new(p)?;
    let (stationary, lambda2) = chain_spectrum(&matrix)?;
    Ok(AnalyticChain {
        matrix,
        stationary,
        lambda2,
        region,
        lambda2_middle_form: 1.0 - (u + u.recip()) / beta,
    })
}

/// Counts adjacent pairs of a bitstream and normalises rows into a
/// transition matrix; also returns the second eigenvalue trace - 1.
///
/// A state that never occurs leaves its row undefined, which is an error
/// rather than a silent convention.
pub fn empirical_transition(bits: &[u8]) -> Result<(ChainCounts, TransitionMatrix2, f64)> {
    if bits.len() < 2 {
        return Err(Error::NotEnoughBits(bits.len()));
    }
    if let Some((index, &value)) = bits.iter().enumerate().find(|&(_, &b)| b > 1) {
        return Err(Error::InvalidBit { index, value });
    }
    let mut n = [[0u64; 2]; 2];
    for w in bits.windows(2) {
        n[usize::from(w[0])][usize::from(w[1])] += 1;
    }
    let counts = ChainCounts {
        n00: n[0][0],
        n01: n[0][1],
        n10: n[1][0],
        n11: n[1][1],
    };
    let row0 = n[0][0] + n[0][1];
    let row1 = n[1][0] + n[1][1];
    if row0 == 0 {
        return Err(Error::DegenerateChain(0));
    }
    if row1 == 0 {
        return Err(Error::DegenerateChain(1));
    }
    let matrix = TransitionMatrix2::new([
        [n[0][0] as f64 / row0 as f64, n[0][1] as f64 / row0 as f64],
        [n[1][0] as f64 / row1 as f64, n[1][1] as f64 / row1 as f64],
    ])?;
    Ok((counts, matrix, matrix.trace() - 1.0))
}

/// Stationary distribution and second eigenvalue of a 2x2 chain:
/// pi = (p10, p01) / (p01 + p10), lambda2 = trace - 1.
///
/// The identity matrix (and only it, among valid inputs) leaves the
/// stationary distribution non-unique.
pub fn chain_spectrum(matrix: &TransitionMatrix2) -> Result<([f64; 2], f64)> {
    let p01 = matrix.p[0][1];
    let p10 = matrix.p[1][0];
    let denom = p01 + p10;
    if denom == 0.0 {
        return Err(Error::ReducibleChain);
    }
    Ok(([p10 / denom, p01 / denom], matrix.trace() - 1.0))
}

/// A truncated Parry-series value for the greedy invariant density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub x: f64,
    pub value: f64,
    pub n_terms: usize,
}

/// Truncated invariant-density series for the greedy map at beta:
/// rho(x) = sum of gamma^n over 0 <= n <= n_terms with x < tau^n(1),
/// where tau(t) = beta t mod 1. The n = 0 term always contributes 1.
pub fn parry_density(beta: f64, x: f64, n_terms: usize) -> Result<DensityEstimate> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(Error::InvalidBeta(beta));
    }
    if !x.is_finite() || !(0.0..1.0).contains(&x) {
        return Err(Error::DomainViolation { x, hi: 1.0 });
    }
    let gamma = beta.recip();
    let mut t = 1.0f64;
    let mut weight = 1.0f64;
    let mut value = 0.0f64;
    for _ in 0..=n_terms {
        if x < t {
            value += weight;
        }
        t = (beta * t) % 1.0;
        weight *= gamma;
    }
    Ok(DensityEstimate { x, value, n_terms })
}

/// Kalman's piecewise-linear map on (0, 1] embedding a two-state chain.
///
/// The unit interval splits at `outer` into two cells J_i = (d_{i-1}, d_i],
/// each split again so that branch (i, j) has length |J_i| p_ij and maps
/// linearly onto cell j. `inner[i]` lists that cell's breakpoints in branch
/// order: ascending cells left to right, descending cells right to left.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KalmanMap {
    /// d_0 = 0 < d_1 < d_2 = 1.
    pub outer: [f64; 3],
    pub inner: [[f64; 3]; 2],
    /// tau(d_i) per cell: 1 for climbing branches, 0 for falling.
    pub orientation: [u8; 2],
    pub matrix: TransitionMatrix2,
}

impl KalmanMap {
    /// Branch lengths (|J_{i,1}|, |J_{i,2}|) of cell i (0-based).
    pub fn widths(&self, i: usize) -> [f64; 2] {
        [
            (self.inner[i][1] - self.inner[i][0]).abs(),
            (self.inner[i][2] - self.inner[i][1]).abs(),
        ]
    }

    /// Signed slope of branch (i, j), 0-based: the branch carries J_{i,j}
    /// onto cell j, so the magnitude is |J_j| / |J_{i,j}|.
    pub fn slope(&self, i: usize, j: usize) -> f64 {
        let target = self.outer[j + 1] - self.outer[j];
        let sign = if self.orientation[i] == 1 { 1.0 } else { -1.0 };
        sign * target / self.widths(i)[j]
    }

    /// Applies the map. The domain is (0, 1]; 0 is accepted and handled by
    /// the closure of the first branch.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() || !(0.0..=1.0).contains(&omega) {
            return Err(Error::DomainViolation { x: omega, hi: 1.0 });
        }
        let i = usize::from(omega > self.outer[1]);
        let cell = &self.inner[i];
        let ascending = self.orientation[i] == 1;
        // Branch label j from the cell's own breakpoint order; descending
        // cells list right to left so the comparison flips.
        let j = if ascending {
            usize::from(omega > cell[1])
        } else {
            usize::from(omega <= cell[1])
        };
        let (d_lo, d_hi) = (self.outer[j], self.outer[j + 1]);
        let target = d_hi - d_lo;
        let width = (cell[j + 1] - cell[j]).abs();
        let value = if ascending {
            (target * omega + (cell[j + 1] * d_lo - cell[j] * d_hi)) / width
        } else {
            (-target * omega + (cell[j] * d_hi - cell[j + 1] * d_lo)) / width
        };
        Ok(value)
    }
}

/// Builds the embedding with the default ascending orientation in both
/// cells, which keeps outputs reproducible; use
/// [`kalman_embed_oriented`] to flip individual cells.
pub fn kalman_embed(matrix: &TransitionMatrix2, d1: f64) -> Result<KalmanMap> {
    kalman_embed_oriented(matrix, d1, [1, 1])
}

/// Builds the embedding with an explicit orientation flag tau(d_i) per
/// cell. Requires every entry strictly inside (0, 1) so that all four
/// branches have positive length.
pub fn kalman_embed_oriented(
    matrix: &TransitionMatrix2,
    d1: f64,
    orientation: [u8; 2],
) -> Result<KalmanMap> {
    for row in &matrix.p {
        for &v in row {
            if v <= 0.0 || v >= 1.0 {
                return Err(Error::InvalidTransition(v));
            }
        }
    }
    if !d1.is_finite() || d1 <= 0.0 || d1 >= 1.0 {
        return Err(Error::InvalidBreakpoint(d1));
    }
    if let Some((index, &value)) = orientation.iter().enumerate().find(|&(_, &v)| v > 1) {
        return Err(Error::InvalidBit { index, value });
    }
    let outer = [0.0, d1, 1.0];
    let mut inner = [[0.0; 3]; 2];
    for i in 0..2 {
        let (lo, hi) = (outer[i], outer[i + 1]);
        let w1 = (hi - lo) * matrix.p[i][0];
        inner[i] = if orientation[i] == 1 {
            [lo, lo + w1, hi]
        } else {
            [hi, hi - w1, lo]
        };
    }
    Ok(KalmanMap {
        outer,
        inner,
        orientation,
        matrix: *matrix,
    })
}

/// Checks the spectrum identity of the four-branch transition structure:
/// the 4x4 matrix built from the branch probabilities has eigenvalues
/// equal to those of the chain padded with two zeros.
///
/// Returns the numerically computed spectrum (real parts, ascending) and
/// whether it matches {1, trace - 1, 0, 0} within 1e-10. The kernel pair
/// is semisimple, so it normally meets that tolerance; when trace - 1
/// itself vanishes it merges with the pair into a defective triple and no
/// backward-stable eigensolver can resolve the split below the square
/// root of the rounding noise, so those entries get a 1e-7 allowance.
pub fn kalman_verify(map: &KalmanMap) -> (Vec<f64>, bool) {
    let p = &map.matrix.p;
    #[rustfmt::skip]
    let phat = Matrix4::new(
        p[0][0], p[0][1], 0.0, 0.0,
        0.0, 0.0, p[1][0], p[1][1],
        p[0][0], p[0][1], 0.0, 0.0,
        0.0, 0.0, p[1][0], p[1][1],
    );
    let lambda2 = map.matrix.trace() - 1.0;
    let defective = lambda2.abs() <= 1e-6;
    let mut eigen: Vec<Complex<f64>> = phat.complex_eigenvalues().iter().copied().collect();
    eigen.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut expected = vec![0.0, 0.0, lambda2, 1.0];
    expected.sort_by(f64::total_cmp);
    let matches = eigen.iter().zip(&expected).all(|(got, &want)| {
        let tol = if defective && want.abs() <= 1e-6 { 1e-7 } else { 1e-10 };
        (got - want).norm() <= tol
    });
    (eigen.iter().map(|c| c.re).collect(), matches)
}
