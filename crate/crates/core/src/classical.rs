//! Classical `n -> 1` random access codes.
//!
//! Input strings are stored MSB-first: bit `x_k` (1-based `k`) of an `n`-bit
//! string `X` is `(X >> (n - k)) & 1`, so the string `01` is the integer 1.

use rayon::prelude::*;
use serde::Serialize;

use crate::bell::CorrelationTable;
use crate::error::{Error, Result};

/// Largest `n` for which a strategy can be represented (`2^n <= 64`).
pub const MAX_STRATEGY_BITS: usize = 6;

/// Bob's map from the received message bit to his output bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Decoder {
    Identity,
    Negate,
    Zero,
    One,
}

impl Decoder {
    pub const ALL: [Decoder; 4] = [
        Decoder::Zero,
        Decoder::Negate,
        Decoder::Identity,
        Decoder::One,
    ];

    /// Output table: bit `c` of the code is `D(c)`.
    pub fn code(self) -> u8 {
        match self {
            Decoder::Zero => 0b00,
            Decoder::Negate => 0b01,
            Decoder::Identity => 0b10,
            Decoder::One => 0b11,
        }
    }

    pub fn from_code(code: u8) -> Decoder {
        Decoder::ALL[usize::from(code & 0b11)]
    }

    pub fn apply(self, message: u8) -> u8 {
        (self.code() >> (message & 1)) & 1
    }
}

/// `x_k` for 1-based `k`.
pub fn bit_of(x: u32, k: usize, n: usize) -> u8 {
    ((x >> (n - k)) & 1) as u8
}

/// Class index of `x`: the pattern of `x_2..x_n` relative to `x_1`.
pub fn class_of(x: u32, n: usize) -> usize {
    let mask = (1u32 << (n - 1)) - 1;
    let reference = if bit_of(x, 1, n) == 1 { mask } else { 0 };
    ((x ^ reference) & mask) as usize
}

/// The two strings of class `i`, reference bit 0 first.
pub fn strings_in_class(i: usize, n: usize) -> [u32; 2] {
    let full = (1u32 << n) - 1;
    [i as u32, (i as u32) ^ full]
}

/// Alice's encoding table plus one decoder per query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    n: usize,
    encode: u64,
    decode: Vec<Decoder>,
}

impl DeterministicStrategy {
    /// `encode` bit `X` is the message for string `X`.
    pub fn from_table(n: usize, encode: u64, decode: Vec<Decoder>) -> Result<Self> {
        if n == 0 || n > MAX_STRATEGY_BITS {
            return Err(Error::UnsupportedBitCount {
                n,
                reason: "strategies support 1 <= n <= 6",
            });
        }
        if decode.len() != n {
            return Err(Error::BitCountMismatch {
                expected: n,
                got: decode.len(),
            });
        }
        let strings = 1u32 << n;
        let encode = if strings == 64 {
            encode
        } else {
            encode & ((1u64 << strings) - 1)
        };
        Ok(DeterministicStrategy { n, encode, decode })
    }

    pub fn from_fn(n: usize, encode: impl Fn(u32) -> u8, decode: Vec<Decoder>) -> Result<Self> {
        if n == 0 || n > MAX_STRATEGY_BITS {
            return Err(Error::UnsupportedBitCount {
                n,
                reason: "strategies support 1 <= n <= 6",
            });
        }
        let table = (0..1u32 << n).fold(0u64, |acc, x| acc | (u64::from(encode(x) & 1) << x));
        Self::from_table(n, table, decode)
    }

    /// Alice sends `x_1`; Bob repeats it for every query.
    pub fn first_bit(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| bit_of(x, 1, n), vec![Decoder::Identity; n])
    }

    /// Alice sends 1 when at least half the bits are 1; Bob repeats it.
    pub fn majority(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| majority_bit(x, n), vec![Decoder::Identity; n])
    }

    /// Alice sends the complement of the majority bit; Bob repeats it.
    pub fn anti_majority(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| 1 - majority_bit(x, n), vec![Decoder::Identity; n])
    }

    pub fn constant(n: usize, message: u8) -> Result<Self> {
        Self::from_fn(n, |_| message, vec![Decoder::Identity; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn encode(&self, x: u32) -> u8 {
        ((self.encode >> x) & 1) as u8
    }

    pub fn encode_table(&self) -> u64 {
        self.encode
    }

    pub fn decoders(&self) -> &[Decoder] {
        &self.decode
    }

    /// Bob's output for query `k` (1-based) on input `x`.
    pub fn output(&self, x: u32, k: usize) -> u8 {
        self.decode[k - 1].apply(self.encode(x))
    }

    /// Number of successful `(X, k)` cells.
    pub fn success_count(&self) -> u32 {
        let n = self.n;
        (0..1u32 << n)
            .map(|x| {
                (1..=n)
                    .filter(|&k| self.output(x, k) == bit_of(x, k, n))
                    .count() as u32
            })
            .sum()
    }

    /// Enumeration id: encode table above `2n` bits of decoder codes.
    pub fn id(&self) -> u64 {
        let dec = self
            .decode
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, d)| acc | (u64::from(d.code()) << (2 * k)));
        (self.encode << (2 * self.n)) | dec
    }

    pub fn from_id(n: usize, id: u64) -> Result<Self> {
        let decode = (0..n)
            .map(|k| Decoder::from_code(((id >> (2 * k)) & 0b11) as u8))
            .collect();
        Self::from_table(n, id >> (2 * n), decode)
    }

    /// Same encoder with the listed queries (1-based) replaced by `d`.
    pub fn with_decoder(&self, queries: &[usize], d: Decoder) -> Self {
        let mut s = self.clone();
        for &k in queries {
            s.decode[k - 1] = d;
        }
        s
    }
}

fn majority_bit(x: u32, n: usize) -> u8 {
    u8::from(2 * x.count_ones() as usize >= n)
}

/// Per-cell success of a strategy and its average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessReport {
    pub n: usize,
    /// Indexed `x * n + (k - 1)`.
    pub per_cell: Vec<f64>,
    pub successes: u32,
    pub average: f64,
}

impl SuccessReport {
    pub fn cell(&self, x: u32, k: usize) -> f64 {
        self.per_cell[x as usize * self.n + k - 1]
    }
}

pub fn cells(n: usize) -> u32 {
    n as u32 * (1u32 << n)
}

pub fn brute_success(s: &DeterministicStrategy) -> SuccessReport {
    let n = s.n();
    let mut per_cell = Vec::with_capacity(cells(n) as usize);
    let mut successes = 0;
    for x in 0..1u32 << n {
        for k in 1..=n {
            let hit = s.output(x, k) == bit_of(x, k, n);
            successes += u32::from(hit);
            per_cell.push(if hit { 1.0 } else { 0.0 });
        }
    }
    SuccessReport {
        n,
        per_cell,
        successes,
        average: f64::from(successes) / f64::from(cells(n)),
    }
}

/// Convex combination of deterministic strategies, independent of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMixture {
    components: Vec<(f64, DeterministicStrategy)>,
}

impl StrategyMixture {
    pub fn new(components: Vec<(f64, DeterministicStrategy)>) -> Result<Self> {
        let sum: f64 = components.iter().map(|(w, _)| w).sum();
        if components.is_empty()
            || components.iter().any(|(w, _)| *w < 0.0 || !w.is_finite())
            || (sum - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidWeights { sum });
        }
        let n = components[0].1.n();
        if let Some((_, s)) = components.iter().find(|(_, s)| s.n() != n) {
            return Err(Error::BitCountMismatch {
                expected: n,
                got: s.n(),
            });
        }
        Ok(StrategyMixture { components })
    }

    pub fn uniform(strategies: Vec<DeterministicStrategy>) -> Result<Self> {
        let w = 1.0 / strategies.len() as f64;
        Self::new(strategies.into_iter().map(|s| (w, s)).collect())
    }

    /// Bob guesses uniformly at random on `queries`: an equal mixture of the
    /// two constant decoders there.
    pub fn random_guess(base: &DeterministicStrategy, queries: &[usize]) -> Result<Self> {
        Self::uniform(vec![
            base.with_decoder(queries, Decoder::Zero),
            base.with_decoder(queries, Decoder::One),
        ])
    }

    pub fn components(&self) -> &[(f64, DeterministicStrategy)] {
        &self.components
    }
}

pub fn mixed_success(m: &StrategyMixture) -> f64 {
    m.components
        .iter()
        .map(|(w, s)| w * brute_success(s).average)
        .sum()
}

/// `½ + 2^-n C(n-1, ⌊(n-1)/2⌋)`, the optimal classical success.
pub fn optimal_classical_formula(n: usize) -> f64 {
    let num = crate::bell::binomial(n as u64 - 1, (n as u64 - 1) / 2);
    0.5 + num as f64 / 2f64.powi(n as i32)
}

/// Reference-bit correlators `⟨Ã_i B_j⟩`: the class average of
/// `(-1)^{x_1} (-1)^{D_j(encode(X))}`.
pub fn reference_correlators(s: &DeterministicStrategy) -> CorrelationTable {
    let n = s.n();
    CorrelationTable::from_fn(1 << (n - 1), n, |i, j| {
        strings_in_class(i, n)
            .iter()
            .map(|&x| {
                let e = i32::from(bit_of(x, 1, n) ^ s.output(x, j + 1));
                if e == 0 {
                    0.5
                } else {
                    -0.5
                }
            })
            .sum()
    })
}

/// Exhaustive enumeration of the `2^(2^n) 4^n` deterministic strategies.
#[derive(Debug, Clone, Copy)]
pub struct Enumeration {
    n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationSummary {
    pub n: usize,
    pub count: u64,
    pub max_successes: u32,
    pub min_successes: u32,
    pub max: f64,
    pub min: f64,
    /// Smallest id attaining the maximum.
    pub argmax: u64,
    pub argmin: u64,
}

/// `2^(2^n) · 4^n`.
pub fn strategy_count(n: usize) -> u128 {
    if n >= 7 {
        // 2^(2^7) already overflows; report saturated
        return u128::MAX;
    }
    (1u128 << (1u32 << n)) << (2 * n)
}

impl Enumeration {
    /// `n` in {2, 3}; `n = 4` only with `allow_large`.
    pub fn new(n: usize, allow_large: bool) -> Result<Self> {
        match n {
            2 | 3 => Ok(Enumeration { n }),
            4 if allow_large => Ok(Enumeration { n }),
            0 | 1 => Err(Error::UnsupportedBitCount {
                n,
                reason: "enumeration needs n >= 2",
            }),
            _ => Err(Error::EnumerationTooLarge {
                n,
                count: strategy_count(n),
            }),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> u64 {
        strategy_count(self.n) as u64
    }

    pub fn strategy(&self, id: u64) -> DeterministicStrategy {
        DeterministicStrategy::from_id(self.n, id).expect("n validated at construction")
    }

    pub fn iter(&self) -> impl Iterator<Item = DeterministicStrategy> + '_ {
        (0..self.count()).map(move |id| self.strategy(id))
    }

    pub fn reports(&self) -> impl Iterator<Item = (DeterministicStrategy, SuccessReport)> + '_ {
        self.iter().map(|s| {
            let r = brute_success(&s);
            (s, r)
        })
    }

    /// Global extremes, reduced in parallel with integer success counts.
    pub fn summarize(&self) -> EnumerationSummary {
        let n = self.n;
        let (max, min) = (0..self.count())
            .into_par_iter()
            .map(|id| {
                let c = DeterministicStrategy::from_id(n, id)
                    .unwrap()
                    .success_count();
                ((c, id), (c, id))
            })
            .reduce(
                || ((0, u64::MAX), (u32::MAX, u64::MAX)),
                |(amax, amin), (bmax, bmin)| {
                    // ties go to the smaller id so the result is partition-independent
                    let max = match bmax.0.cmp(&amax.0).then(amax.1.cmp(&bmax.1)) {
                        std::cmp::Ordering::Greater => bmax,
                        _ => amax,
                    };
                    (max, amin.min(bmin))
                },
            );
        let total = f64::from(cells(n));
        EnumerationSummary {
            n,
            count: self.count(),
            max_successes: max.0,
            min_successes: min.0,
            max: f64::from(max.0) / total,
            min: f64::from(min.0) / total,
            argmax: max.1,
            argmin: min.1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoder_tables() {
        for d in Decoder::ALL {
            assert_eq!(Decoder::from_code(d.code()), d);
        }
        assert_eq!(Decoder::Identity.apply(1), 1);
        assert_eq!(Decoder::Negate.apply(1), 0);
        assert_eq!(Decoder::Zero.apply(1), 0);
        assert_eq!(Decoder::One.apply(0), 1);
    }

    #[test]
    fn bit_order_is_msb_first() {
        // "01": x1 = 0, x2 = 1
        assert_eq!(bit_of(0b01, 1, 2), 0);
        assert_eq!(bit_of(0b01, 2, 2), 1);
        assert_eq!(class_of(0b00, 2), 0);
        assert_eq!(class_of(0b11, 2), 0);
        assert_eq!(class_of(0b01, 2), 1);
        assert_eq!(class_of(0b10, 2), 1);
        // xx̄x lands in class 2 for n = 3
        assert_eq!(class_of(0b010, 3), 2);
        assert_eq!(class_of(0b101, 3), 2);
        assert_eq!(strings_in_class(3, 3), [0b011, 0b100]);
    }

    #[test]
    fn named_strategies() {
        assert_eq!(
            brute_success(&DeterministicStrategy::first_bit(2).unwrap()).average,
            0.75
        );
        assert_eq!(
            brute_success(&DeterministicStrategy::majority(2).unwrap()).average,
            0.75
        );
        assert_eq!(
            brute_success(&DeterministicStrategy::anti_majority(2).unwrap()).average,
            0.25
        );
        let maj3 = brute_success(&DeterministicStrategy::majority(3).unwrap());
        assert_eq!(maj3.average, 0.75);
        assert_eq!(maj3.per_cell.len(), 24);
        assert_eq!(maj3.cell(0b011, 1), 0.0);
    }

    #[test]
    fn first_bit_with_random_second_guess() {
        // Alice sends x1, Bob repeats for query 1 and guesses query 2
        let base = DeterministicStrategy::first_bit(2).unwrap();
        let m = StrategyMixture::random_guess(&base, &[2]).unwrap();
        assert_eq!(mixed_success(&m), 0.75);
        let blind = StrategyMixture::random_guess(&base, &[1, 2]).unwrap();
        assert_eq!(mixed_success(&blind), 0.5);
    }

    #[test]
    fn mixtures() {
        let good = DeterministicStrategy::majority(2).unwrap();
        let bad = DeterministicStrategy::anti_majority(2).unwrap();
        let pure = StrategyMixture::new(vec![(1.0, good.clone())]).unwrap();
        assert_eq!(mixed_success(&pure), 0.75);
        let half = StrategyMixture::uniform(vec![good, bad]).unwrap();
        assert_eq!(mixed_success(&half), 0.5);
        assert!(StrategyMixture::new(vec![]).is_err());
        assert!(
            StrategyMixture::new(vec![(0.7, DeterministicStrategy::majority(2).unwrap())]).is_err()
        );
        assert!(StrategyMixture::new(vec![
            (0.5, DeterministicStrategy::majority(2).unwrap()),
            (0.5, DeterministicStrategy::majority(3).unwrap()),
        ])
        .is_err());
    }

    #[test]
    fn formula_values() {
        assert_eq!(optimal_classical_formula(2), 0.75);
        assert_eq!(optimal_classical_formula(3), 0.75);
        assert_eq!(optimal_classical_formula(4), 0.6875);
        assert_eq!(optimal_classical_formula(1), 1.0);
    }

    #[test]
    fn correlator_tables() {
        let t = reference_correlators(&DeterministicStrategy::first_bit(2).unwrap());
        assert_eq!(t.to_dense().unwrap(), vec![1.0; 4]);
        let t3 = reference_correlators(&DeterministicStrategy::majority(3).unwrap());
        let dense = t3.to_dense().unwrap();
        assert_eq!(&dense[..9], &[1.0; 9]);
        assert_eq!(&dense[9..], &[-1.0; 3]);
        let t0 = reference_correlators(&DeterministicStrategy::constant(3, 0).unwrap());
        assert!(t0.to_dense().unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ids_round_trip() {
        let e = Enumeration::new(3, false).unwrap();
        for id in [0u64, 1, 77, 16383] {
            assert_eq!(e.strategy(id).id(), id);
        }
    }

    #[test]
    fn enumeration_limits() {
        assert!(Enumeration::new(4, false).is_err());
        assert!(Enumeration::new(4, true).is_ok());
        match Enumeration::new(5, true) {
            Err(Error::EnumerationTooLarge { count, .. }) => {
                assert_eq!(count, (1u128 << 32) * 1024)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Enumeration::new(1, false).is_err());
    }

    #[test]
    fn two_bit_enumeration() {
        let s = Enumeration::new(2, false).unwrap().summarize();
        assert_eq!(s.count, 256);
        assert_eq!(s.max, 0.75);
        assert_eq!(s.min, 0.25);
    }
}
