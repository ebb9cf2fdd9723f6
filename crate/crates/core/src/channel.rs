//! The erasure channel and a reproducible sample oracle.
//!
//! Randomness comes from ChaCha8, a counter-based generator. An oracle can be
//! split into independent substreams whose keys are derived with SHA-256 from
//! the parent key and the substream index, so a batch cut into fixed-size
//! chunks gives the same samples whatever the number of worker threads.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::Q;
use crate::types::{check_mu, BitString, CountHistogram, LossySample, SparseDistribution};

/// Samples per chunk when a batch is drawn from substreams.
pub const CHUNK: u64 = 1 << 16;

/// Uniform draws below a fixed bound by rejection, with no bias.
#[derive(Clone, Debug)]
enum Threshold {
    Small { bound: u128, zone: u128 },
    Big { bound: BigUint, bits: u64 },
}

impl Threshold {
    fn new(bound: &BigUint) -> Self {
        match bound.to_u128() {
            Some(b) => Threshold::Small {
                bound: b,
                zone: u128::MAX - (u128::MAX - b + 1) % b,
            },
            None => Threshold::Big {
                bound: bound.clone(),
                bits: bound.bits(),
            },
        }
    }

    /// Uniform integer in `[0, bound)`, returned as `u128` when it fits.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Draw {
        match self {
            Threshold::Small { bound, zone } => loop {
                let r: u128 = rng.random();
                if r <= *zone {
                    return Draw::Small(r % bound);
                }
            },
            Threshold::Big { bound, bits } => loop {
                let words = (*bits).div_ceil(32) as usize;
                let digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
                let mut r = BigUint::new(digits);
                let excess = words as u64 * 32 - *bits;
                r >>= excess;
                if r < *bound {
                    return Draw::Big(r);
                }
            },
        }
    }
}

enum Draw {
    Small(u128),
    Big(BigUint),
}

/// A coin with exact rational bias `p/q`, decided by a uniform draw below `q`.
#[derive(Clone, Debug)]
struct RationalCoin {
    numer: u64,
    denom: u64,
    zone: u64,
    wide: Option<(Threshold, BigUint)>,
}

impl RationalCoin {
    fn new(p: &Q) -> Self {
        let (n, d) = (p.numer().to_u64(), p.denom().to_u64());
        match (n, d) {
            (Some(numer), Some(denom)) => RationalCoin {
                numer,
                denom,
                zone: u64::MAX - (u64::MAX - denom + 1) % denom,
                wide: None,
            },
            _ => {
                let d = p.denom().to_biguint().expect("positive denominator");
                let n = p.numer().to_biguint().expect("nonnegative numerator");
                RationalCoin {
                    numer: 0,
                    denom: 0,
                    zone: 0,
                    wide: Some((Threshold::new(&d), n)),
                }
            }
        }
    }

    #[inline]
    fn flip(&self, rng: &mut ChaCha8Rng) -> bool {
        if let Some((t, n)) = &self.wide {
            return match t.draw(rng) {
                Draw::Small(r) => BigUint::from(r) < *n,
                Draw::Big(r) => r < *n,
            };
        }
        if self.numer >= self.denom {
            return true;
        }
        loop {
            let r: u64 = rng.random();
            if r <= self.zone {
                return r % self.denom < self.numer;
            }
        }
    }
}

/// Picks a support string with probability exactly equal to its mass.
#[derive(Clone, Debug)]
struct SupportSampler {
    threshold: Threshold,
    /// Cumulative numerators over the common denominator.
    cumulative: Vec<BigUint>,
    cumulative_small: Option<Vec<u128>>,
}

impl SupportSampler {
    fn new(dist: &SparseDistribution) -> Self {
        let denom = dist
            .support()
            .iter()
            .fold(BigInt::from(1), |acc, (_, p)| acc.lcm(p.denom()));
        let mut acc = BigInt::zero();
        let cumulative: Vec<BigUint> = dist
            .support()
            .iter()
            .map(|(_, p)| {
                acc += p.numer() * (&denom / p.denom());
                acc.to_biguint().expect("positive masses")
            })
            .collect();
        let cumulative_small = cumulative.iter().map(|c| c.to_u128()).collect();
        SupportSampler {
            threshold: Threshold::new(&denom.to_biguint().expect("positive")),
            cumulative,
            cumulative_small,
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> usize {
        if self.cumulative.len() == 1 {
            return 0;
        }
        match (self.threshold.draw(rng), &self.cumulative_small) {
            (Draw::Small(r), Some(c)) => c.partition_point(|&x| x <= r),
            (Draw::Small(r), None) => self.cumulative.partition_point(|x| *x <= BigUint::from(r)),
            (Draw::Big(r), _) => self.cumulative.partition_point(|x| *x <= r),
        }
    }
}

/// Seeded oracle for `dist` seen through the erasure channel with retention `mu`.
#[derive(Clone, Debug)]
pub struct SampleOracle {
    dist: SparseDistribution,
    mu: Q,
    key: [u8; 32],
    rng: ChaCha8Rng,
    sampler: SupportSampler,
    coin: RationalCoin,
    samples_drawn: u64,
    splits: u64,
}

impl SampleOracle {
    pub fn new(dist: SparseDistribution, mu: Q, seed: u64) -> Result<Self> {
        check_mu(&mu)?;
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Ok(Self::with_key(dist, mu, key))
    }

    fn with_key(dist: SparseDistribution, mu: Q, key: [u8; 32]) -> Self {
        SampleOracle {
            sampler: SupportSampler::new(&dist),
            coin: RationalCoin::new(&mu),
            rng: ChaCha8Rng::from_seed(key),
            dist,
            mu,
            key,
            samples_drawn: 0,
            splits: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    pub fn mu(&self) -> &Q {
        &self.mu
    }

    pub fn distribution(&self) -> &SparseDistribution {
        &self.dist
    }

    pub fn samples_drawn(&self) -> u64 {
        self.samples_drawn
    }

    /// Independent oracle for substream `index`; does not advance `self`.
    pub fn substream(&self, index: u64) -> SampleOracle {
        let mut h = Sha256::new();
        h.update(b"poprec-substream");
        h.update(self.key);
        h.update(index.to_le_bytes());
        let key: [u8; 32] = h.finalize().into();
        Self::with_key(self.dist.clone(), self.mu.clone(), key)
    }

    /// Overwrites `out` with the next sample. `out` must have length `n`.
    pub fn draw_into(&mut self, out: &mut LossySample) {
        let idx = self.sampler.pick(&mut self.rng);
        let source = &self.dist.support()[idx].0;
        let n = source.len();
        let (revealed, ones) = out.planes_mut();
        revealed.iter_mut().for_each(|w| *w = 0);
        for i in 0..n {
            if self.coin.flip(&mut self.rng) {
                revealed[i / 64] |= 1 << (i % 64);
            }
        }
        for (o, (r, s)) in ones.iter_mut().zip(revealed.iter().zip(source.words())) {
            *o = r & s;
        }
        self.samples_drawn += 1;
    }

    pub fn draw(&mut self) -> LossySample {
        let mut s = LossySample::all_erased(self.n());
        self.draw_into(&mut s);
        s
    }

    /// `m` consecutive draws.
    pub fn draw_batch(&mut self, m: usize) -> Vec<LossySample> {
        (0..m).map(|_| self.draw()).collect()
    }

    /// Ones-count histograms of `m` fresh samples for every target mask.
    ///
    /// The batch is cut into chunks of [`CHUNK`] samples; chunk `c` comes from
    /// substream `c` of a child oracle reserved for this call, and chunks are
    /// processed in parallel. The result depends only on the oracle state and
    /// the arguments.
    pub fn histograms(
        &mut self,
        m: u64,
        targets: &[BitString],
        coords: usize,
    ) -> Vec<CountHistogram> {
        let batch = self.substream(u64::MAX - self.splits);
        self.splits += 1;
        self.samples_drawn += m;
        let chunks = m.div_ceil(CHUNK);
        let empty = || vec![CountHistogram::new(coords + 1); targets.len()];
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut oracle = batch.substream(c);
                let count = CHUNK.min(m - c * CHUNK);
                let mut hist = empty();
                let mut s = LossySample::all_erased(oracle.n());
                for _ in 0..count {
                    oracle.draw_into(&mut s);
                    for (h, a) in hist.iter_mut().zip(targets) {
                        h.record(s.ones_after_xor(a, coords));
                    }
                }
                hist
            })
            .reduce(empty, |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y));
                a
            })
    }
}

/// Anything that can feed a recovery run.
pub trait SampleSource {
    fn n(&self) -> usize;

    /// Ones-count histograms over the first `coords` coordinates of `m`
    /// fresh samples, one per target mask.
    fn histograms(
        &mut self,
        m: u64,
        targets: &[BitString],
        coords: usize,
    ) -> Result<Vec<CountHistogram>>;

    /// The next `m` samples, materialised.
    fn take(&mut self, m: u64) -> Result<Vec<LossySample>>;

    fn consumed(&self) -> u64;
}

impl SampleSource for SampleOracle {
    fn n(&self) -> usize {
        SampleOracle::n(self)
    }

    fn histograms(
        &mut self,
        m: u64,
        targets: &[BitString],
        coords: usize,
    ) -> Result<Vec<CountHistogram>> {
        Ok(SampleOracle::histograms(self, m, targets, coords))
    }

    fn take(&mut self, m: u64) -> Result<Vec<LossySample>> {
        let m = usize::try_from(m).map_err(|_| Error::InvalidParameter("batch too large".into()))?;
        Ok(self.draw_batch(m))
    }

    fn consumed(&self) -> u64 {
        self.samples_drawn
    }
}

/// A finite, pre-recorded sample list consumed front to back.
#[derive(Clone, Debug)]
pub struct RecordedSamples {
    n: usize,
    samples: Vec<LossySample>,
    cursor: usize,
}

impl RecordedSamples {
    pub fn new(n: usize, samples: Vec<LossySample>) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| s.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: s.len(),
            });
        }
        Ok(RecordedSamples {
            n,
            samples,
            cursor: 0,
        })
    }

    pub fn remaining(&self) -> usize {
        self.samples.len() - self.cursor
    }

    fn claim(&mut self, m: u64) -> Result<&[LossySample]> {
        let available = self.remaining() as u64;
        if m > available {
            return Err(Error::SamplesExhausted {
                needed: m,
                available,
            });
        }
        let start = self.cursor;
        self.cursor += m as usize;
        Ok(&self.samples[start..self.cursor])
    }
}

impl SampleSource for RecordedSamples {
    fn n(&self) -> usize {
        self.n
    }

    fn histograms(
        &mut self,
        m: u64,
        targets: &[BitString],
        coords: usize,
    ) -> Result<Vec<CountHistogram>> {
        let batch = self.claim(m)?;
        let mut hist = vec![CountHistogram::new(coords + 1); targets.len()];
        for s in batch {
            for (h, a) in hist.iter_mut().zip(targets) {
                h.record(s.ones_after_xor(a, coords));
            }
        }
        Ok(hist)
    }

    fn take(&mut self, m: u64) -> Result<Vec<LossySample>> {
        Ok(self.claim(m)?.to_vec())
    }

    fn consumed(&self) -> u64 {
        self.cursor as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use crate::types::Symbol;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn full_retention_reveals_the_source() {
        let mut o = SampleOracle::new(SparseDistribution::point_mass(bs("10")), qi(1), 3).unwrap();
        for s in o.draw_batch(50) {
            assert_eq!(s.to_string(), "10");
        }
    }

    #[test]
    fn empty_and_repeatable_batches() {
        let dist = SparseDistribution::uniform(&["000", "101", "111"]).unwrap();
        let mut o = SampleOracle::new(dist.clone(), q(1, 3), 42).unwrap();
        assert!(o.draw_batch(0).is_empty());
        let a = o.draw_batch(3);
        let b = SampleOracle::new(dist.clone(), q(1, 3), 42).unwrap().draw_batch(3);
        assert_eq!(a, b);
        let c = SampleOracle::new(dist, q(1, 3), 43).unwrap().draw_batch(64);
        assert_ne!(a, c[..3].to_vec());
    }

    #[test]
    fn erasure_rate_matches_binomial() {
        // Fraction of '?' over 10⁵ one-coordinate draws at μ = 1/2: sd ≈ 0.0016.
        let mut o = SampleOracle::new(SparseDistribution::point_mass(bs("0")), q(1, 2), 7).unwrap();
        let m = 100_000;
        let erased = (0..m).filter(|_| o.draw().symbol(0) == Symbol::Erased).count();
        let frac = erased as f64 / m as f64;
        assert!((frac - 0.5).abs() <= 0.01, "{frac}");
    }

    #[test]
    fn both_coordinates_erased_with_probability_squared() {
        let mu = q(1, 5);
        let mut o = SampleOracle::new(SparseDistribution::point_mass(bs("01")), mu, 11).unwrap();
        let m = 200_000;
        let both = (0..m).filter(|_| o.draw().erased_count() == 2).count();
        let p = 0.64;
        let sd = (p * (1.0 - p) / m as f64).sqrt();
        assert!((both as f64 / m as f64 - p).abs() < 5.0 * sd);
    }

    #[test]
    fn support_frequencies_match_masses() {
        let dist = SparseDistribution::uniform(&["00", "11"]).unwrap();
        let mut o = SampleOracle::new(dist, qi(1), 5).unwrap();
        let batch = o.draw_batch(10_000);
        let zeros = batch.iter().filter(|s| s.to_string() == "00").count() as f64 / 1e4;
        assert!((zeros - 0.5).abs() <= 0.02, "{zeros}");
    }

    #[test]
    fn marginal_erasure_per_coordinate_within_five_sigma() {
        let dist = SparseDistribution::uniform(&["0110", "1011", "0001"]).unwrap();
        let mut o = SampleOracle::new(dist, q(3, 10), 99).unwrap();
        let m = 100_000;
        let mut erased = [0usize; 4];
        let mut s = LossySample::all_erased(4);
        for _ in 0..m {
            o.draw_into(&mut s);
            for (i, e) in erased.iter_mut().enumerate() {
                *e += (s.symbol(i) == Symbol::Erased) as usize;
            }
        }
        let sd = (0.7 * 0.3 / m as f64).sqrt();
        for e in erased {
            assert!((e as f64 / m as f64 - 0.7).abs() < 5.0 * sd);
        }
    }

    #[test]
    fn revealed_symbols_come_from_a_support_string() {
        let dist = SparseDistribution::uniform(&["0110", "1011"]).unwrap();
        let mut o = SampleOracle::new(dist.clone(), q(1, 2), 1).unwrap();
        for s in o.draw_batch(500) {
            let consistent = dist.support().iter().any(|(a, _)| {
                (0..4).all(|i| match s.symbol(i) {
                    Symbol::Erased => true,
                    Symbol::One => a.get(i),
                    Symbol::Zero => !a.get(i),
                })
            });
            assert!(consistent, "{s}");
        }
    }

    #[test]
    fn skewed_masses_with_large_denominators() {
        let big = Q::new(BigInt::from(1), BigInt::from(10u64).pow(30));
        let dist = SparseDistribution::new(
            1,
            vec![(bs("0"), Q::from_integer(1.into()) - &big), (bs("1"), big)],
        )
        .unwrap();
        let mut o = SampleOracle::new(dist, qi(1), 8).unwrap();
        assert!(o.draw_batch(2000).iter().all(|s| s.to_string() == "0"));
    }

    #[test]
    fn histograms_are_thread_count_independent() {
        let dist = SparseDistribution::uniform(&["0000", "1111", "1010"]).unwrap();
        let targets = [bs("0000"), bs("1111")];
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut o = SampleOracle::new(dist.clone(), q(3, 10), 17).unwrap();
                let first = o.histograms(3 * CHUNK + 17, &targets, 4);
                let second = o.histograms(100, &targets, 3);
                (first, second)
            })
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a, b);
        assert_eq!(a.0[0].total_samples(), 3 * CHUNK + 17);
        assert_ne!(a.0[0], a.0[1]);
    }

    #[test]
    fn recorded_samples_run_out() {
        let samples: Vec<LossySample> = ["1?", "0?", "??"].iter().map(|s| s.parse().unwrap()).collect();
        let mut r = RecordedSamples::new(2, samples).unwrap();
        let h = SampleSource::histograms(&mut r, 2, &[bs("00")], 2).unwrap();
        assert_eq!(h[0].counts(), &[1, 1, 0]);
        assert!(matches!(
            SampleSource::histograms(&mut r, 2, &[bs("00")], 2),
            Err(Error::SamplesExhausted { needed: 2, available: 1 })
        ));
        assert!(RecordedSamples::new(3, vec!["1?".parse().unwrap()]).is_err());
    }
}
