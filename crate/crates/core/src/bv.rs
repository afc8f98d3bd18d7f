//! Bernstein-Vazirani runs simulated by sampling the squared Walsh spectrum.

use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use once_cell::race::OnceBox;
use rand_core::RngCore;

use crate::boolfn::{BooleanFunction, VectorFunction, WalshSpectrum};
use crate::rng::{self, StreamRng};
use crate::{Dyadic, Error, Result};

/// Shared quantum/classical query counters.
#[derive(Debug, Default)]
pub struct QueryLedger {
    quantum: AtomicU64,
    classical: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryCount {
    pub quantum: u64,
    pub classical: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_quantum(&self) {
        self.quantum.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_classical(&self) {
        self.classical.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> QueryCount {
        QueryCount {
            quantum: self.quantum.load(Ordering::Relaxed),
            classical: self.classical.load(Ordering::Relaxed),
        }
    }
}

impl core::ops::Sub for QueryCount {
    type Output = QueryCount;
    fn sub(self, rhs: QueryCount) -> QueryCount {
        QueryCount { quantum: self.quantum - rhs.quantum, classical: self.classical - rhs.classical }
    }
}

/// The measurement distribution of one BV run: outcomes with nonzero mass
/// and their cumulative integer weights, which sum to `2^total_log2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BvDistribution {
    bits: u32,
    outcomes: Vec<u32>,
    cumulative: Vec<u64>,
    total_log2: u32,
}

impl BvDistribution {
    pub fn from_spectrum(spectrum: &WalshSpectrum) -> Self {
        let weights = spectrum
            .support()
            .into_iter()
            .map(|w| (w, spectrum.scaled_squared(w)))
            .collect::<Vec<_>>();
        Self::from_weights(spectrum.n(), 2 * spectrum.n(), &weights)
            .expect("Parseval makes the squared spectrum sum to 2^2n")
    }

    pub fn from_function(f: &BooleanFunction) -> Self {
        Self::from_spectrum(&f.walsh_spectrum())
    }

    /// Outcomes with integer weights summing to exactly `2^total_log2`.
    pub fn from_weights(bits: u32, total_log2: u32, weights: &[(u32, u64)]) -> Result<Self> {
        if total_log2 > 63 {
            return Err(Error::InvalidParameter("total weight above 2^63"));
        }
        let mut outcomes = Vec::with_capacity(weights.len());
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0u64;
        for &(omega, w) in weights.iter().filter(|(_, w)| *w > 0) {
            acc = acc.checked_add(w).ok_or(Error::InvalidParameter("weights overflow"))?;
            outcomes.push(omega);
            cumulative.push(acc);
        }
        if acc != 1u64 << total_log2 {
            return Err(Error::InvalidParameter("weights do not sum to a power of two"));
        }
        Ok(BvDistribution { bits, outcomes, cumulative, total_log2 })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Outcomes with nonzero probability, in increasing order.
    pub fn support(&self) -> &[u32] {
        &self.outcomes
    }

    pub fn probability(&self, omega: u32) -> Dyadic {
        match self.outcomes.binary_search(&omega) {
            Ok(i) => {
                let lo = if i == 0 { 0 } else { self.cumulative[i - 1] };
                Dyadic::new((self.cumulative[i] - lo) as i128, self.total_log2)
            }
            Err(_) => Dyadic::ZERO,
        }
    }

    fn draw(&self, rng: &mut StreamRng) -> u32 {
        let r = if self.total_log2 == 0 { 0 } else { rng.next_u64() >> (64 - self.total_log2) };
        let i = self.cumulative.partition_point(|&c| c <= r);
        self.outcomes[i]
    }
}

/// One BV run per [`BvSampler::sample`], each counted as a quantum query.
pub struct BvSampler<'a> {
    dist: &'a BvDistribution,
    ledger: &'a QueryLedger,
    rng: StreamRng,
}

impl<'a> BvSampler<'a> {
    pub fn new(dist: &'a BvDistribution, ledger: &'a QueryLedger, seed: u64, stream: u64) -> Self {
        BvSampler { dist, ledger, rng: rng::stream(seed, stream) }
    }

    pub fn sample(&mut self) -> u32 {
        self.ledger.record_quantum();
        self.dist.draw(&mut self.rng)
    }

    pub fn distribution(&self) -> &BvDistribution {
        self.dist
    }
}

/// A vector function seen as a black box: BV runs on its components and
/// classical evaluations. Component distributions are built on first use
/// and shared between sessions.
pub struct OracleFunction {
    function: VectorFunction,
    distributions: Vec<OnceBox<BvDistribution>>,
}

impl OracleFunction {
    pub fn new(function: VectorFunction) -> Self {
        let distributions = (0..function.output_bits()).map(|_| OnceBox::new()).collect();
        OracleFunction { function, distributions }
    }

    pub fn input_bits(&self) -> u32 {
        self.function.input_bits()
    }

    pub fn output_bits(&self) -> u32 {
        self.function.output_bits()
    }

    /// The underlying table. Reading it directly bypasses query accounting.
    pub fn function(&self) -> &VectorFunction {
        &self.function
    }

    pub fn distribution(&self, j: usize) -> &BvDistribution {
        self.distributions[j].get_or_init(|| {
            alloc::boxed::Box::new(BvDistribution::from_function(self.function.component(j)))
        })
    }

    pub fn session<'a>(&'a self, ledger: &'a QueryLedger) -> OracleSession<'a> {
        OracleSession { oracle: self, ledger }
    }
}

/// An [`OracleFunction`] bound to the ledger of one attack run.
#[derive(Clone, Copy)]
pub struct OracleSession<'a> {
    oracle: &'a OracleFunction,
    ledger: &'a QueryLedger,
}

impl<'a> OracleSession<'a> {
    pub fn input_bits(&self) -> u32 {
        self.oracle.input_bits()
    }

    pub fn output_bits(&self) -> u32 {
        self.oracle.output_bits()
    }

    pub fn ledger(&self) -> &'a QueryLedger {
        self.ledger
    }

    /// One classical query.
    pub fn query(&self, x: u32) -> u32 {
        self.ledger.record_classical();
        self.oracle.function.eval(x)
    }

    /// BV sampler for component `j`, on RNG stream `j`.
    pub fn sampler(&self, j: usize, seed: u64) -> BvSampler<'a> {
        BvSampler::new(self.oracle.distribution(j), self.ledger, seed, j as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_always_gives_its_mask() {
        let f = BooleanFunction::linear(2, 0b10).unwrap();
        let dist = BvDistribution::from_function(&f);
        let ledger = QueryLedger::new();
        let mut s = BvSampler::new(&dist, &ledger, 1, 0);
        assert!((0..100).all(|_| s.sample() == 0b10));
        assert_eq!(ledger.snapshot(), QueryCount { quantum: 100, classical: 0 });
    }

    #[test]
    fn constant_one_gives_zero() {
        let f = BooleanFunction::constant(4, true).unwrap();
        let dist = BvDistribution::from_function(&f);
        assert_eq!(dist.support(), &[0]);
        let ledger = QueryLedger::new();
        let mut s = BvSampler::new(&dist, &ledger, 9, 0);
        assert!((0..50).all(|_| s.sample() == 0));
    }

    #[test]
    fn and_gate_is_uniform() {
        let f = BooleanFunction::from_fn(2, |x| x == 3).unwrap();
        let dist = BvDistribution::from_function(&f);
        assert!((0..4).all(|w| dist.probability(w) == Dyadic::new(1, 2)));
        let ledger = QueryLedger::new();
        let mut s = BvSampler::new(&dist, &ledger, 2024, 0);
        let mut counts = [0u32; 4];
        for _ in 0..100_000 {
            counts[s.sample() as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let f = BooleanFunction::from_fn(5, |x| (x * 7 + 3) % 5 < 2).unwrap();
        let dist = BvDistribution::from_function(&f);
        let ledger = QueryLedger::new();
        let a: Vec<u32> = {
            let mut s = BvSampler::new(&dist, &ledger, 11, 3);
            (0..64).map(|_| s.sample()).collect()
        };
        let b: Vec<u32> = {
            let mut s = BvSampler::new(&dist, &ledger, 11, 3);
            (0..64).map(|_| s.sample()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn weights_must_sum_to_power_of_two() {
        assert!(BvDistribution::from_weights(2, 2, &[(0, 1), (1, 2)]).is_err());
        let d = BvDistribution::from_weights(2, 2, &[(0, 1), (3, 3)]).unwrap();
        assert_eq!(d.probability(3), Dyadic::new(3, 2));
        assert_eq!(d.probability(1), Dyadic::ZERO);
    }

    #[test]
    fn session_counts_classical_queries() {
        let f = VectorFunction::identity(3).unwrap();
        let oracle = OracleFunction::new(f);
        let ledger = QueryLedger::new();
        let session = oracle.session(&ledger);
        assert_eq!(session.query(5), 5);
        let mut s = session.sampler(0, 1);
        assert_eq!(s.sample(), 0b100);
        assert_eq!(ledger.snapshot(), QueryCount { quantum: 1, classical: 1 });
    }
}
