//! Linear-structure search from BV samples, for Boolean functions and for
//! vector functions one component at a time.

use alloc::vec::Vec;

use crate::boolfn::{BooleanFunction, VectorFunction};
use crate::bv::{BvDistribution, BvSampler, OracleFunction, OracleSession, QueryLedger};
use crate::gf2::{constancy_set, AffineSolutionSet, Gf2System};
use crate::rng;
use crate::stats::{BoundCheck, DEFAULT_Z};
use crate::{Error, Result};

/// Members examined per run when validating closeness.
pub const VALIDATION_CAP: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    No,
    Found,
}

/// Outcome of the single-function search.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ls1Result {
    pub verdict: Verdict,
    /// Solutions of `{x·ω = 0 : ω ∈ H}`.
    pub a0: AffineSolutionSet,
    /// Solutions of `{x·ω = 1 : ω ∈ H}`.
    pub a1: AffineSolutionSet,
    /// Distinct sampled `ω`, increasing.
    pub samples: Vec<u32>,
    pub queries_used: u64,
}

impl Ls1Result {
    fn from_samples(width: u32, samples: Vec<u32>, queries_used: u64) -> Self {
        let solve = |value| {
            Gf2System::uniform(width, &samples, value).expect("width checked by caller").solve()
        };
        let (a0, a1) = (solve(false), solve(true));
        let verdict =
            if a0.is_trivial() && a1.is_trivial() { Verdict::No } else { Verdict::Found };
        Ls1Result { verdict, a0, a1, samples, queries_used }
    }

    pub fn set(&self, value: bool) -> &AffineSolutionSet {
        if value {
            &self.a1
        } else {
            &self.a0
        }
    }
}

/// A nonzero input difference whose output difference is constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Structure {
    pub input_diff: u32,
    pub output_diff: u32,
}

/// One component's contribution to the vector search.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentSets {
    /// `{x : x·ω is the same for every sampled ω}`.
    pub constancy: AffineSolutionSet,
    /// The first sample; a member `a` has constant value `a·pivot`.
    pub pivot: u32,
    pub samples: Vec<u32>,
}

/// Outcome of the vector search.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ls2Result {
    pub verdict: Verdict,
    /// Present iff the verdict is `Found`.
    pub structure: Option<Structure>,
    /// Components processed before the output (all of them unless the
    /// search stopped early).
    pub per_component: Vec<ComponentSets>,
    pub intersection: Option<AffineSolutionSet>,
    pub queries_used: u64,
}

/// `p` BV samples of component `j`, each shifted right by `shift`, as a
/// sorted set.
pub fn collect_samples(session: &OracleSession<'_>, j: usize, p: u64, seed: u64, shift: u32) -> Vec<u32> {
    let mut sampler = session.sampler(j, seed);
    collect_from(&mut sampler, p, shift)
}

fn collect_from(sampler: &mut BvSampler<'_>, p: u64, shift: u32) -> Vec<u32> {
    let mut h: Vec<u32> = (0..p).map(|_| sampler.sample() >> shift).collect();
    h.sort_unstable();
    h.dedup();
    h
}

fn check_p(p: u64) -> Result<()> {
    if p == 0 {
        Err(Error::InvalidParameter("query count p must be at least 1"))
    } else {
        Ok(())
    }
}

/// Default per-function query count, `4n`.
pub fn default_p(n: u32) -> u64 {
    4 * n as u64
}

/// Search one Boolean function with `p` BV runs.
pub fn algorithm1(f: &BooleanFunction, p: u64, seed: u64) -> Result<Ls1Result> {
    check_p(p)?;
    let dist = BvDistribution::from_function(f);
    algorithm1_with(&dist, p, seed)
}

/// As [`algorithm1`], reusing a precomputed distribution.
pub fn algorithm1_with(dist: &BvDistribution, p: u64, seed: u64) -> Result<Ls1Result> {
    check_p(p)?;
    let ledger = QueryLedger::new();
    let mut sampler = BvSampler::new(dist, &ledger, seed, 0);
    let samples = collect_from(&mut sampler, p, 0);
    Ok(Ls1Result::from_samples(dist.bits(), samples, ledger.snapshot().quantum))
}

/// Search component `j` of an oracle.
pub fn algorithm1_on(session: &OracleSession<'_>, j: usize, p: u64, seed: u64) -> Result<Ls1Result> {
    check_p(p)?;
    let before = session.ledger().snapshot();
    let samples = collect_samples(session, j, p, seed, 0);
    let used = (session.ledger().snapshot() - before).quantum;
    Ok(Ls1Result::from_samples(session.input_bits(), samples, used))
}

/// Search a vector function with `p` BV runs per component.
pub fn algorithm2(f: &VectorFunction, p: u64, seed: u64) -> Result<Ls2Result> {
    let oracle = OracleFunction::new(f.clone());
    let ledger = QueryLedger::new();
    algorithm2_on(&oracle.session(&ledger), p, seed, 0)
}

/// The vector search against an oracle. Every sample is shifted right by
/// `shift` before use, which keeps only its leading `input_bits - shift`
/// coordinates; with `shift = 0` this is the plain search.
///
/// Stops with `No` as soon as one component admits no nonzero candidate.
pub fn algorithm2_on(
    session: &OracleSession<'_>,
    p: u64,
    seed: u64,
    shift: u32,
) -> Result<Ls2Result> {
    check_p(p)?;
    if shift >= session.input_bits() {
        return Err(Error::InvalidParameter("truncation removes every input bit"));
    }
    let width = session.input_bits() - shift;
    let n = session.output_bits();
    let before = session.ledger().snapshot();
    let used = |s: &OracleSession<'_>| (s.ledger().snapshot() - before).quantum;

    let mut per_component = Vec::with_capacity(n as usize);
    let mut intersection = AffineSolutionSet::full(width);
    for j in 0..n as usize {
        let samples = collect_samples(session, j, p, seed, shift);
        let (constancy, pivot) = constancy_set(width, &samples)?;
        let trivial = constancy.is_trivial();
        intersection = intersection.intersect(&constancy)?;
        per_component.push(ComponentSets { constancy, pivot, samples });
        if trivial {
            return Ok(Ls2Result {
                verdict: Verdict::No,
                structure: None,
                per_component,
                intersection: None,
                queries_used: used(session),
            });
        }
    }

    let structure = intersection.min_nonzero().map(|a| Structure {
        input_diff: a,
        output_diff: output_difference(a, &per_component),
    });
    Ok(Ls2Result {
        verdict: if structure.is_some() { Verdict::Found } else { Verdict::No },
        structure,
        per_component,
        intersection: Some(intersection),
        queries_used: used(session),
    })
}

/// `(a·ω₀⁽¹⁾, …, a·ω₀⁽ⁿ⁾)` packed with the first component most significant.
pub fn output_difference(a: u32, components: &[ComponentSets]) -> u32 {
    components.iter().fold(0, |acc, c| (acc << 1) | crate::dot(a, c.pivot) as u32)
}

/// Aggregate of [`validate_theorem1`].
#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Validation {
    pub p: u64,
    pub epsilon: f64,
    pub trials: u64,
    /// Runs that returned sets.
    pub found_runs: u64,
    pub check: BoundCheck,
}

/// Run the single-function search `trials` times and measure how often a
/// nonzero returned candidate `a ∈ A^i` is `ε`-close, i.e. has
/// `1 - |V^i_{f,a}|/2^n < ε`.
///
/// Each run contributes at most [`VALIDATION_CAP`] members.
pub fn validate_theorem1(
    f: &BooleanFunction,
    p: u64,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<Theorem1Validation> {
    check_p(p)?;
    if trials == 0 {
        return Err(Error::InsufficientTrials { requested: 0, minimum: 1 });
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive"));
    }
    if epsilon >= 1.0 {
        let check = BoundCheck::at_least(1, 1, 1.0, DEFAULT_Z);
        return Ok(Theorem1Validation { p, epsilon, trials, found_runs: 0, check });
    }
    let bound = crate::stats::bounds::theorem1(p, epsilon)?;

    let dist = BvDistribution::from_function(f);
    let mut close = 0u64;
    let mut examined = 0u64;
    let mut found_runs = 0u64;
    for t in 0..trials {
        let run = algorithm1_with(&dist, p, rng::trial_seed(seed, t))?;
        if run.verdict == Verdict::Found {
            found_runs += 1;
        }
        for value in [false, true] {
            for a in run.set(value).enumerate(VALIDATION_CAP).members {
                if a == 0 {
                    continue;
                }
                examined += 1;
                // sigma is a dyadic rational with at most 24 bits, exact in f64
                close += (f.sigma_closeness(a, value).to_f64() < epsilon) as u64;
            }
        }
    }
    let check = if examined == 0 {
        BoundCheck::at_least(1, 1, bound, DEFAULT_Z)
    } else {
        BoundCheck::at_least(close, examined, bound, DEFAULT_Z)
    };
    Ok(Theorem1Validation { p, epsilon, trials, found_runs, check })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn xor_and(v: u32) -> bool {
        ((v >> 2) & (v >> 1) & 1 == 1) ^ (v & 1 == 1)
    }

    #[test]
    fn finds_structure_of_and_xor() {
        let f = BooleanFunction::from_fn(3, xor_and).unwrap();
        let r = algorithm1(&f, 30, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Found);
        assert!(r.a1.contains(0b001));
        assert_eq!(r.queries_used, 30);
        for value in [false, true] {
            for a in r.set(value).enumerate(64).members {
                assert!(r.samples.iter().all(|&w| crate::dot(a, w) == value));
            }
        }
    }

    #[test]
    fn bent_gives_no() {
        let f = BooleanFunction::from_fn(2, |v| v == 3).unwrap();
        let no = (0..200).filter(|&s| algorithm1(&f, 30, s).unwrap().verdict == Verdict::No).count();
        assert_eq!(no, 200);
    }

    #[test]
    fn constant_function_is_all_structure() {
        let f = BooleanFunction::constant(3, false).unwrap();
        let r = algorithm1(&f, 7, 1).unwrap();
        assert_eq!(r.samples, vec![0]);
        assert_eq!(r.a0.len(), 8);
        assert!(r.a1.is_empty());
        assert_eq!(r.verdict, Verdict::Found);
    }

    #[test]
    fn identity_returns_smallest_structure() {
        let f = VectorFunction::identity(4).unwrap();
        let r = algorithm2(&f, 5, 3).unwrap();
        assert_eq!(r.structure, Some(Structure { input_diff: 1, output_diff: 1 }));
        assert_eq!(r.queries_used, 20);
    }

    #[test]
    fn p_zero_is_rejected() {
        let f = BooleanFunction::constant(2, false).unwrap();
        assert!(algorithm1(&f, 0, 0).is_err());
        assert!(validate_theorem1(&f, 0, 0.5, 10, 0).is_err());
    }

    #[test]
    fn epsilon_one_is_vacuous() {
        let f = BooleanFunction::from_fn(3, xor_and).unwrap();
        let v = validate_theorem1(&f, 5, 1.0, 10, 0).unwrap();
        assert!(v.check.pass);
    }

    #[test]
    fn theorem1_on_and_xor() {
        let f = BooleanFunction::from_fn(3, xor_and).unwrap();
        let v = validate_theorem1(&f, 50, 0.25, 200, 9).unwrap();
        assert!(v.check.pass, "{v:?}");
    }
}
