//! Population recovery by prefix extension with pruning.
//!
//! Stage `ℓ` extends every surviving prefix of length `ℓ-1` by both bits,
//! estimates each candidate's prefix mass from the first `ℓ` coordinates, and
//! keeps candidates whose estimate reaches the pruning threshold. Each stage
//! budget `stage_accuracy` is split evenly between the local inverse residual
//! and the sampling error.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::channel::SampleSource;
use crate::error::{Error, Result};
use crate::estimate::{compute_sample_count, estimate_from_histogram, MassEstimate};
use crate::inverse::{solve_local_inverse, LocalInverseCertificate};
use crate::rational::{qi, Q};
use crate::types::{BitString, CountHistogram, LossySample, Params};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryConfig {
    pub params: Params,
    pub fresh_samples_per_stage: bool,
    pub prune_threshold: Q,
    pub stage_accuracy: Q,
}

impl RecoveryConfig {
    /// `stage_accuracy = ε/4`, `prune_threshold = ε/2`, fresh samples per stage.
    pub fn new(params: Params) -> Self {
        let stage_accuracy = &params.eps / qi(4);
        let prune_threshold = &params.eps / qi(2);
        RecoveryConfig {
            params,
            fresh_samples_per_stage: true,
            prune_threshold,
            stage_accuracy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stage_accuracy <= Q::zero() {
            return Err(Error::InvalidParameter("stage accuracy must be positive".into()));
        }
        if self.stage_accuracy >= self.prune_threshold || self.prune_threshold >= self.params.eps {
            return Err(Error::InvalidParameter(
                "need stage_accuracy < prune_threshold < eps".into(),
            ));
        }
        Ok(())
    }

    /// Residual target for the stage local inverses.
    pub fn inverse_eps(&self) -> Q {
        &self.stage_accuracy / qi(2)
    }

    /// Sampling accuracy left after the inverse residual.
    pub fn sampling_eps(&self) -> Q {
        &self.stage_accuracy - self.inverse_eps()
    }

    /// `⌈1/(prune_threshold − stage_accuracy)⌉`.
    pub fn survivor_bound(&self) -> usize {
        let r = Q::one() / (&self.prune_threshold - &self.stage_accuracy);
        let c = r.ceil().to_integer();
        usize::try_from(c).unwrap_or(usize::MAX)
    }

    /// Samples for one stage over `coords` coordinates with `candidates`
    /// estimates sharing the failure budget.
    pub fn stage_sample_count(&self, coords: usize, sigma: &Q, candidates: usize) -> Result<u64> {
        let split = BigInt::from(self.params.n as u64) * BigInt::from(candidates.max(1) as u64);
        let delta = &self.params.delta / Q::from_integer(split);
        compute_sample_count(coords, sigma, &self.sampling_eps(), &delta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageSummary {
    pub length: usize,
    pub candidates: usize,
    pub survivors: usize,
    pub samples: u64,
    pub sigma: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryResult {
    /// Sorted by bitstring.
    pub entries: Vec<(BitString, Q)>,
    pub samples_consumed: u64,
    pub stages: Vec<StageSummary>,
}

impl RecoveryResult {
    pub fn get(&self, a: &BitString) -> Option<&Q> {
        self.entries.iter().find(|(s, _)| s == a).map(|(_, q)| q)
    }
}

/// Where histograms come from: fresh draws per stage, or prefixes of one
/// growing pool.
enum Feed<'a, S: SampleSource> {
    Fresh(&'a mut S),
    Pooled { source: &'a mut S, pool: Vec<LossySample> },
}

impl<S: SampleSource> Feed<'_, S> {
    fn histograms(&mut self, m: u64, targets: &[BitString], coords: usize) -> Result<Vec<CountHistogram>> {
        match self {
            Feed::Fresh(source) => source.histograms(m, targets, coords),
            Feed::Pooled { source, pool } => {
                let have = pool.len() as u64;
                if m > have {
                    pool.extend(source.take(m - have)?);
                }
                let mut hist = vec![CountHistogram::new(coords + 1); targets.len()];
                for s in &pool[..m as usize] {
                    for (h, a) in hist.iter_mut().zip(targets) {
                        h.record(s.ones_after_xor(a, coords));
                    }
                }
                Ok(hist)
            }
        }
    }
}

pub fn recover_population<S: SampleSource>(source: &mut S, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let n = cfg.params.n;
    if source.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: source.n(),
        });
    }
    let start = source.consumed();
    let bound = cfg.survivor_bound();
    let inverse_eps = cfg.inverse_eps();
    let mut feed = if cfg.fresh_samples_per_stage {
        Feed::Fresh(source)
    } else {
        Feed::Pooled {
            source,
            pool: Vec::new(),
        }
    };

    let mut survivors: Vec<(BitString, Q)> = vec![(BitString::zeros(0), Q::one())];
    let mut stages = Vec::with_capacity(n);
    for length in 1..=n {
        let candidates: Vec<BitString> = survivors
            .iter()
            .flat_map(|(p, _)| [p.extended(false), p.extended(true)])
            .collect();
        let cert = solve_local_inverse(length, &cfg.params.mu, &inverse_eps)?;
        let m = cfg.stage_sample_count(length, &cert.sigma, candidates.len())?;
        let masks: Vec<BitString> = candidates.iter().map(|c| pad(c, n)).collect();
        let hist = feed.histograms(m, &masks, length)?;
        survivors = Vec::new();
        for (c, h) in candidates.iter().zip(&hist) {
            let value = estimate_from_histogram(h, &cert.v)?;
            if value >= cfg.prune_threshold {
                survivors.push((c.clone(), value));
            }
        }
        stages.push(StageSummary {
            length,
            candidates: candidates.len(),
            survivors: survivors.len(),
            samples: m,
            sigma: cert.sigma.clone(),
        });
        if survivors.len() > bound {
            return Err(Error::SurvivorBound {
                stage: length,
                survivors: survivors.len(),
                bound,
            });
        }
        if survivors.is_empty() {
            break;
        }
    }

    let consumed = match &feed {
        Feed::Fresh(s) => s.consumed(),
        Feed::Pooled { source, .. } => source.consumed(),
    } - start;
    let entries: BTreeMap<BitString, Q> = if stages.len() == n { survivors.into_iter().collect() } else { BTreeMap::new() };
    Ok(RecoveryResult {
        entries: entries.into_iter().collect(),
        samples_consumed: consumed,
        stages,
    })
}

fn pad(prefix: &BitString, n: usize) -> BitString {
    let mut bits: Vec<bool> = prefix.bits().collect();
    bits.resize(n, false);
    BitString::from_bits(&bits)
}

/// One-shot estimate of `π(a)` with the full-length inverse. The whole `δ`
/// goes to this single estimate.
pub fn recover_single<S: SampleSource>(source: &mut S, a: &BitString, cfg: &RecoveryConfig) -> Result<MassEstimate> {
    cfg.validate()?;
    let n = cfg.params.n;
    if a.len() != n || source.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: if a.len() != n { a.len() } else { source.n() },
        });
    }
    let half = &cfg.params.eps / qi(2);
    let cert = solve_local_inverse(n, &cfg.params.mu, &half)?;
    let m = compute_sample_count(n, &cert.sigma, &half, &cfg.params.delta)?;
    let hist = source.histograms(m, std::slice::from_ref(a), n)?;
    Ok(MassEstimate {
        target: a.clone(),
        value: estimate_from_histogram(&hist[0], &cert.v)?,
        samples_used: m,
        eps_requested: cfg.params.eps.clone(),
    })
}

/// The certificate a stage of length `length` would use.
pub fn stage_inverse(cfg: &RecoveryConfig, length: usize) -> Result<LocalInverseCertificate> {
    solve_local_inverse(length, &cfg.params.mu, &cfg.inverse_eps())
}
