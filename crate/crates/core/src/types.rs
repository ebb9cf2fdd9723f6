//! Domain values shared by every module. All of them are immutable once built.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_fraction, is_positive, Q};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Mask selecting the first `coords` bits of word `w`.
#[inline]
fn prefix_mask(w: usize, coords: usize) -> u64 {
    let start = w * WORD;
    if coords >= start + WORD {
        u64::MAX
    } else if coords <= start {
        0
    } else {
        (1u64 << (coords - start)) - 1
    }
}

/// A binary string, coordinate 0 first (the leftmost character in text form).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// This string with one more coordinate appended.
    pub fn extended(&self, bit: bool) -> Self {
        let mut s = self.clone();
        if s.len % WORD == 0 {
            s.words.push(0);
        }
        if bit {
            s.words[s.len / WORD] |= 1 << (s.len % WORD);
        }
        s.len += 1;
        s
    }

    pub fn prefix(&self, len: usize) -> Self {
        assert!(len <= self.len);
        let mut words: Vec<u64> = self.words[..words_for(len)].to_vec();
        for (w, word) in words.iter_mut().enumerate() {
            *word &= prefix_mask(w, len);
        }
        BitString { len, words }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits()
            .cmp(other.bits())
            .then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidParameter(format!(
                    "bitstring `{s}` contains `{c}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitString::from_bits(&bits))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Zero,
    One,
    Erased,
}

/// One channel output over `{0, 1, ?}`.
///
/// Stored as two bit planes: `revealed` marks the non-`?` coordinates and
/// `ones` marks revealed coordinates holding `1` (so `ones ⊆ revealed`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LossySample {
    len: usize,
    revealed: Vec<u64>,
    ones: Vec<u64>,
}

impl LossySample {
    pub fn all_erased(len: usize) -> Self {
        LossySample {
            len,
            revealed: vec![0; words_for(len)],
            ones: vec![0; words_for(len)],
        }
    }

    pub fn from_symbols(symbols: &[Symbol]) -> Self {
        let mut s = Self::all_erased(symbols.len());
        for (i, sym) in symbols.iter().enumerate() {
            s.set(i, *sym);
        }
        s
    }

    /// Rebuilds a sample from its bit planes. `ones` is masked to `revealed`.
    pub fn from_planes(len: usize, revealed: Vec<u64>, ones: Vec<u64>) -> Result<Self> {
        let w = words_for(len);
        if revealed.len() != w || ones.len() != w {
            return Err(Error::DimensionMismatch(format!(
                "sample of length {len} needs {w} words per plane"
            )));
        }
        let mut s = LossySample { len, revealed, ones };
        for i in 0..w {
            let m = prefix_mask(i, len);
            s.revealed[i] &= m;
            s.ones[i] &= s.revealed[i];
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn revealed_words(&self) -> &[u64] {
        &self.revealed
    }

    pub fn ones_words(&self) -> &[u64] {
        &self.ones
    }

    pub fn symbol(&self, i: usize) -> Symbol {
        assert!(i < self.len);
        let (w, b) = (i / WORD, i % WORD);
        if self.revealed[w] >> b & 1 == 0 {
            Symbol::Erased
        } else if self.ones[w] >> b & 1 == 1 {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn set(&mut self, i: usize, sym: Symbol) {
        assert!(i < self.len);
        let (w, bit) = (i / WORD, 1u64 << (i % WORD));
        match sym {
            Symbol::Erased => {
                self.revealed[w] &= !bit;
                self.ones[w] &= !bit;
            }
            Symbol::Zero => {
                self.revealed[w] |= bit;
                self.ones[w] &= !bit;
            }
            Symbol::One => {
                self.revealed[w] |= bit;
                self.ones[w] |= bit;
            }
        }
    }

    pub(crate) fn planes_mut(&mut self) -> (&mut [u64], &mut [u64]) {
        (&mut self.revealed, &mut self.ones)
    }

    /// Revealed ones among the first `coords` coordinates after XOR with `mask`.
    #[inline]
    pub fn ones_after_xor(&self, mask: &BitString, coords: usize) -> usize {
        let mut total = 0;
        for w in 0..words_for(coords) {
            let a = mask.words.get(w).copied().unwrap_or(0);
            let bits = self.revealed[w] & (self.ones[w] ^ a) & prefix_mask(w, coords);
            total += bits.count_ones() as usize;
        }
        total
    }

    pub fn erased_count(&self) -> usize {
        self.len - self.revealed.iter().map(|w| w.count_ones() as usize).sum::<usize>()
    }
}

impl FromStr for LossySample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| match c {
                '0' => Ok(Symbol::Zero),
                '1' => Ok(Symbol::One),
                '?' => Ok(Symbol::Erased),
                _ => Err(Error::InvalidParameter(format!(
                    "sample `{s}` contains `{c}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LossySample::from_symbols(&symbols))
    }
}

impl fmt::Display for LossySample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(match self.symbol(i) {
                Symbol::Zero => "0",
                Symbol::One => "1",
                Symbol::Erased => "?",
            })?;
        }
        Ok(())
    }
}

impl fmt::Debug for LossySample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LossySample({self})")
    }
}

/// XORs every revealed coordinate with `a`; `?` stays `?`.
pub fn xor_mask(s: &LossySample, a: &BitString) -> Result<LossySample> {
    if s.len() != a.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            got: a.len(),
        });
    }
    let ones = s
        .revealed
        .iter()
        .zip(&s.ones)
        .zip(&a.words)
        .map(|((r, o), m)| r & (o ^ m))
        .collect();
    Ok(LossySample {
        len: s.len,
        revealed: s.revealed.clone(),
        ones,
    })
}

/// A finitely supported distribution over `{0,1}^n` with exact masses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseDistribution {
    n: usize,
    support: Vec<(BitString, Q)>,
}

impl SparseDistribution {
    pub fn new(n: usize, support: Vec<(BitString, Q)>) -> Result<Self> {
        validate_distribution(&support, n)?;
        Ok(SparseDistribution { n, support })
    }

    /// Equal mass on each listed string.
    pub fn uniform(strings: &[&str]) -> Result<Self> {
        let parsed = strings
            .iter()
            .map(|s| s.parse::<BitString>())
            .collect::<Result<Vec<_>>>()?;
        let n = parsed.first().map_or(0, BitString::len);
        let p = Q::new(1.into(), (parsed.len() as i64).into());
        Self::new(n, parsed.into_iter().map(|s| (s, p.clone())).collect())
    }

    pub fn point_mass(a: BitString) -> Self {
        SparseDistribution {
            n: a.len(),
            support: vec![(a, Q::one())],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[(BitString, Q)] {
        &self.support
    }

    pub fn mass(&self, a: &BitString) -> Q {
        self.support
            .iter()
            .find(|(s, _)| s == a)
            .map_or_else(Q::zero, |(_, p)| p.clone())
    }

    /// Total mass of strings whose first `prefix.len()` coordinates equal `prefix`.
    pub fn prefix_mass(&self, prefix: &BitString) -> Q {
        self.support
            .iter()
            .filter(|(s, _)| s.prefix(prefix.len()) == *prefix)
            .fold(Q::zero(), |acc, (_, p)| acc + p)
    }
}

/// Checks length, distinctness, positivity and unit total, reporting the first failure.
pub fn validate_distribution(support: &[(BitString, Q)], n: usize) -> Result<()> {
    let mut seen = HashSet::new();
    let mut total = Q::zero();
    for (s, p) in support {
        if s.len() != n {
            return Err(Error::InvalidDistribution(format!(
                "bad length: `{s}` has length {}, expected {n}",
                s.len()
            )));
        }
        if !seen.insert(s) {
            return Err(Error::InvalidDistribution(format!("duplicate string `{s}`")));
        }
        if !is_positive(p) {
            return Err(Error::InvalidDistribution(format!(
                "non-positive probability {} for `{s}`",
                format_fraction(p)
            )));
        }
        total += p;
    }
    if !total.is_one() {
        return Err(Error::InvalidDistribution(format!(
            "sum ≠ 1 (total is {})",
            format_fraction(&total)
        )));
    }
    Ok(())
}

/// Counts of observed ones, indexed `0..=m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl CountHistogram {
    pub fn new(cells: usize) -> Self {
        CountHistogram {
            counts: vec![0; cells],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        CountHistogram { counts, total }
    }

    #[inline]
    pub fn record(&mut self, j: usize) {
        self.counts[j] += 1;
        self.total += 1;
    }

    /// Adds another shard's counts. Exact and associative.
    pub fn merge(&mut self, other: &CountHistogram) {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn cells(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_samples(&self) -> u64 {
        self.total
    }

    /// Exact fraction `counts[j] / total`; zero when empty.
    pub fn freq(&self, j: usize) -> Q {
        if self.total == 0 {
            return Q::zero();
        }
        Q::new(self.counts[j].into(), self.total.into())
    }

    pub fn freqs(&self) -> Vec<Q> {
        (0..self.counts.len()).map(|j| self.freq(j)).collect()
    }
}

/// Problem parameters: length, retention probability, accuracy, confidence, seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    pub n: usize,
    pub mu: Q,
    pub eps: Q,
    pub delta: Q,
    pub seed: u64,
}

impl Params {
    pub fn new(n: usize, mu: Q, eps: Q, delta: Q, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        check_mu(&mu)?;
        check_open_unit("eps", &eps)?;
        check_open_unit("delta", &delta)?;
        Ok(Params {
            n,
            mu,
            eps,
            delta,
            seed,
        })
    }
}

pub fn check_mu(mu: &Q) -> Result<()> {
    if !is_positive(mu) || *mu > Q::one() {
        return Err(Error::InvalidParameter("mu must be in (0,1]".into()));
    }
    Ok(())
}

pub fn check_open_unit(name: &str, x: &Q) -> Result<()> {
    if !is_positive(x) || *x >= Q::one() {
        return Err(Error::InvalidParameter(format!("{name} must be in (0,1)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn ls(s: &str) -> LossySample {
        s.parse().unwrap()
    }

    #[test]
    fn validate_examples() {
        let ok = vec![(bs("00"), q(1, 2)), (bs("11"), q(1, 2))];
        assert!(validate_distribution(&ok, 2).is_ok());

        let deficit = vec![(bs("0"), q(1, 2))];
        let err = validate_distribution(&deficit, 1).unwrap_err().to_string();
        assert!(err.contains("sum ≠ 1"), "{err}");

        let dup = vec![(bs("01"), q(1, 1)), (bs("01"), q(0, 1))];
        let err = validate_distribution(&dup, 2).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");

        let short = vec![(bs("0"), q(1, 1))];
        assert!(validate_distribution(&short, 2)
            .unwrap_err()
            .to_string()
            .contains("bad length"));

        let neg = vec![(bs("0"), q(3, 2)), (bs("1"), q(-1, 2))];
        assert!(validate_distribution(&neg, 1)
            .unwrap_err()
            .to_string()
            .contains("non-positive"));
    }

    #[test]
    fn xor_examples() {
        assert_eq!(xor_mask(&ls("1?0"), &bs("100")).unwrap(), ls("0?0"));
        assert_eq!(xor_mask(&ls("???"), &bs("101")).unwrap(), ls("???"));
        assert_eq!(xor_mask(&ls("110"), &bs("000")).unwrap(), ls("110"));
        assert!(matches!(
            xor_mask(&ls("11"), &bs("000")),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn text_round_trip_and_ordering() {
        let s = ls("10?1?0");
        assert_eq!(s.to_string(), "10?1?0");
        assert_eq!(s.erased_count(), 2);
        assert!(bs("0111") < bs("1000"));
        assert!(bs("01") < bs("010"));
        assert_eq!(bs("1011").prefix(2), bs("10"));
        assert_eq!(bs("10").extended(true), bs("101"));
        assert!("10a".parse::<LossySample>().is_err());
    }

    #[test]
    fn long_strings_cross_word_boundaries() {
        let text: String = (0..150).map(|i| if i % 7 == 0 { '1' } else { '0' }).collect();
        let a = bs(&text);
        assert_eq!(a.to_string(), text);
        assert_eq!(a.count_ones(), 22);
        let mut ext = BitString::zeros(0);
        for b in a.bits() {
            ext = ext.extended(b);
        }
        assert_eq!(ext, a);
        let s: LossySample = text.parse().unwrap();
        assert_eq!(s.ones_after_xor(&BitString::zeros(150), 150), 22);
        assert_eq!(s.ones_after_xor(&a, 150), 0);
        assert_eq!(s.ones_after_xor(&BitString::zeros(150), 64), 10);
    }

    #[test]
    fn histogram_merges_exactly() {
        let mut h = CountHistogram::from_counts(vec![1, 2, 0]);
        h.merge(&CountHistogram::from_counts(vec![0, 1, 2]));
        assert_eq!(h.total_samples(), 6);
        assert_eq!(h.freqs(), vec![q(1, 6), q(1, 2), q(1, 3)]);
        assert_eq!(h.freqs().iter().fold(Q::zero(), |a, b| a + b), Q::one());
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(3, q(1, 2), q(1, 10), q(1, 20), 0).is_ok());
        assert!(Params::new(3, q(0, 1), q(1, 10), q(1, 20), 0).is_err());
        assert!(Params::new(3, q(3, 2), q(1, 10), q(1, 20), 0).is_err());
        assert!(Params::new(3, q(1, 1), q(1, 10), q(1, 20), 0).is_ok());
        assert!(Params::new(3, q(1, 2), q(1, 1), q(1, 20), 0).is_err());
        assert!(Params::new(0, q(1, 2), q(1, 10), q(1, 20), 0).is_err());
    }

    fn sample_strategy() -> impl Strategy<Value = (LossySample, BitString)> {
        (1usize..130).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..3, n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(|(syms, bits)| {
                    let syms: Vec<Symbol> = syms
                        .into_iter()
                        .map(|c| match c {
                            0 => Symbol::Zero,
                            1 => Symbol::One,
                            _ => Symbol::Erased,
                        })
                        .collect();
                    (LossySample::from_symbols(&syms), BitString::from_bits(&bits))
                })
        })
    }

    proptest! {
        #[test]
        fn xor_is_an_involution_preserving_erasures((s, a) in sample_strategy()) {
            let once = xor_mask(&s, &a).unwrap();
            prop_assert_eq!(xor_mask(&once, &a).unwrap(), s.clone());
            for i in 0..s.len() {
                prop_assert_eq!(once.symbol(i) == Symbol::Erased, s.symbol(i) == Symbol::Erased);
            }
        }

        #[test]
        fn ones_after_xor_matches_symbolwise_count((s, a) in sample_strategy(), cut in 0usize..130) {
            let coords = cut.min(s.len());
            let masked = xor_mask(&s, &a).unwrap();
            let expected = (0..coords).filter(|&i| masked.symbol(i) == Symbol::One).count();
            prop_assert_eq!(s.ones_after_xor(&a, coords), expected);
        }
    }
}
