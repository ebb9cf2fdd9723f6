//! From lossy samples to mass estimates.
//!
//! XOR-ing every sample with a target `a` turns `π(a)` into the mass at the
//! all-zero string. Counting revealed ones then gives draws from `πᵀA`, and
//! the estimate is `φ̃ᵀ v` for a local inverse `v`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrices::{build_channel_matrix, EstimatorVector};
use crate::rational::{is_positive, to_f64, Q};
use crate::types::{BitString, CountHistogram, LossySample, SparseDistribution};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassEstimate {
    pub target: BitString,
    /// `φ̃ᵀ v`; not clamped to `[0, 1]`.
    pub value: Q,
    pub samples_used: u64,
    pub eps_requested: Q,
}

fn check_target(a: &BitString, coords: usize) -> Result<()> {
    if a.len() < coords {
        return Err(Error::DimensionMismatch(format!(
            "target of length {} cannot mask {coords} coordinates",
            a.len()
        )));
    }
    Ok(())
}

/// Histogram of revealed ones among the first `coords` coordinates, after
/// XOR with `a`.
pub fn ones_histogram(samples: &[LossySample], a: &BitString, coords: usize) -> Result<CountHistogram> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_target(a, coords)?;
    let mut h = CountHistogram::new(coords + 1);
    for s in samples {
        if s.len() < coords {
            return Err(Error::LengthMismatch {
                expected: coords,
                got: s.len(),
            });
        }
        h.record(s.ones_after_xor(a, coords));
    }
    Ok(h)
}

/// `Σ_j freq[j] v_j`.
pub fn estimate_from_histogram(h: &CountHistogram, v: &EstimatorVector) -> Result<Q> {
    if v.len() != h.cells() {
        return Err(Error::DimensionMismatch(format!(
            "estimator of length {} for a histogram with {} cells",
            v.len(),
            h.cells()
        )));
    }
    if h.total_samples() == 0 {
        return Err(Error::EmptySamples);
    }
    let weighted = h
        .counts()
        .iter()
        .zip(&v.coords)
        .filter(|(c, _)| **c > 0)
        .fold(Q::zero(), |acc, (c, x)| acc + x * Q::from_integer(BigInt::from(*c)));
    Ok(weighted / Q::from_integer(BigInt::from(h.total_samples())))
}

pub fn estimate_mass(
    samples: &[LossySample],
    a: &BitString,
    v: &EstimatorVector,
    coords: usize,
    eps_requested: &Q,
) -> Result<MassEstimate> {
    if v.len() != coords + 1 {
        return Err(Error::DimensionMismatch(format!(
            "estimator of length {} for {coords} coordinates",
            v.len()
        )));
    }
    let h = ones_histogram(samples, a, coords)?;
    Ok(MassEstimate {
        target: a.prefix(coords),
        value: estimate_from_histogram(&h, v)?,
        samples_used: h.total_samples(),
        eps_requested: eps_requested.clone(),
    })
}

/// Samples needed so that every histogram cell is within `eps / ((coords+1) σ)`
/// of its mean with probability at least `1 - delta` (Hoeffding per cell, union
/// bound over the `coords + 1` cells):
///
/// `m = ⌈ ln(2(coords+1)/δ) · ((coords+1)σ/ε)² / 2 ⌉`
///
/// Saturates at `u64::MAX`.
pub fn compute_sample_count(coords: usize, sigma: &Q, eps: &Q, delta: &Q) -> Result<u64> {
    for (name, x) in [("sigma", sigma), ("eps", eps), ("delta", delta)] {
        if !is_positive(x) {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
    }
    let cells = Q::from_integer(BigInt::from(coords as u64 + 1));
    let scale = &cells * sigma / eps;
    let squared = to_f64(&(&scale * &scale));
    let log_term = (2.0 * to_f64(&cells) / to_f64(delta)).ln();
    let m = (log_term * squared / 2.0).ceil();
    Ok(if m.is_finite() && m < u64::MAX as f64 { m as u64 } else { u64::MAX })
}

/// Distribution of the ones-count of `x ⊕ a` over the first `coords`
/// coordinates, for `x ~ π`. Entry `i` is `π'(i)`.
pub fn count_distribution(dist: &SparseDistribution, a: &BitString, coords: usize) -> Result<Vec<Q>> {
    check_target(a, coords)?;
    let mut pi = vec![Q::zero(); coords + 1];
    let mask = a.prefix(coords);
    for (s, p) in dist.support() {
        let head = s.prefix(coords);
        let weight = head
            .bits()
            .zip(mask.bits())
            .filter(|(x, y)| x != y)
            .count();
        pi[weight] += p;
    }
    Ok(pi)
}

/// Exact expected histogram `φᵀ = π'ᵀ A` for the masked, truncated instance.
pub fn expected_histogram(dist: &SparseDistribution, a: &BitString, coords: usize, mu: &Q) -> Result<Vec<Q>> {
    let pi = count_distribution(dist, a, coords)?;
    let at = build_channel_matrix(coords, mu)?.transpose();
    at.mul_vec(&pi)
}

/// `φᵀ v` with the exact expected histogram in place of the empirical one.
pub fn exact_estimate(dist: &SparseDistribution, a: &BitString, coords: usize, mu: &Q, v: &EstimatorVector) -> Result<Q> {
    let phi = expected_histogram(dist, a, coords, mu)?;
    if v.len() != phi.len() {
        return Err(Error::DimensionMismatch("estimator length".into()));
    }
    Ok(phi.iter().zip(&v.coords).fold(Q::zero(), |acc, (p, x)| acc + p * x))
}

/// `‖φ̃ - φ‖∞` between an empirical histogram and exact expectations.
pub fn histogram_deviation(h: &CountHistogram, phi: &[Q]) -> Q {
    h.freqs()
        .iter()
        .zip(phi)
        .map(|(a, b)| {
            let d = a - b;
            if d < Q::zero() { -d } else { d }
        })
        .max()
        .unwrap_or_else(Q::zero)
}

/// Total-probability sanity check used by tests and callers.
pub fn sums_to_one(xs: &[Q]) -> bool {
    xs.iter().fold(Q::zero(), |a, b| a + b).is_one()
}
