//! End-to-end attacks: Feistel distinguisher, Even-Mansour key recovery,
//! and three differential key-recovery attacks on [`ToyCipher`].

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::boolfn::VectorFunction;
use crate::bv::{OracleFunction, OracleSession, QueryCount, QueryLedger};
use crate::ciphers::{self, BlockCipher, ToyCipher};
use crate::gf2::{AffineSolutionSet, Gf2System};
use crate::lsfind::{self, Ls2Result, Structure, Verdict};
use crate::rng::{self, CONTROL_STREAM};
use crate::stats::bounds;
use crate::{mask, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AttackKind {
    FeistelDistinguisher,
    EvenMansourKeyRecovery,
    DifferentialSearch,
    DifferentialKeyRecovery,
    SmallProbability,
    ImpossibleDifferential,
}

/// An output bit `j` whose difference never equals `value` under input
/// difference `input_diff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImpossibleCertificate {
    pub component: u32,
    pub input_diff: u32,
    pub value: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AttackVerdict {
    Yes,
    No,
    Key(u32),
    Differential(Structure),
    Impossible(ImpossibleCertificate),
    Subkey(u32),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Parameters {
    pub n: u32,
    pub m: Option<u32>,
    pub p: Option<u64>,
    pub q: Option<u64>,
    pub l: Option<u64>,
    pub pairs: Option<u64>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum KeyStatus {
    Alive,
    Sieved,
}

/// One counter per candidate last-round subkey.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KeyCounterTable {
    pub counters: Vec<u64>,
    /// Divides a counter to give its ratio.
    pub denominator: u64,
    pub statuses: Vec<KeyStatus>,
}

impl KeyCounterTable {
    fn new(n: u32, denominator: u64) -> Self {
        let size = 1usize << n;
        KeyCounterTable { counters: vec![0; size], denominator, statuses: vec![KeyStatus::Alive; size] }
    }

    pub fn ratio(&self, s: u32) -> f64 {
        self.counters[s as usize] as f64 / self.denominator as f64
    }

    /// Largest counter, smallest subkey on ties.
    pub fn argmax(&self) -> u32 {
        let best = *self.counters.iter().max().unwrap_or(&0);
        self.counters.iter().position(|&c| c == best).unwrap_or(0) as u32
    }

    /// Smallest counter, smallest subkey on ties.
    pub fn argmin(&self) -> u32 {
        let best = *self.counters.iter().min().unwrap_or(&0);
        self.counters.iter().position(|&c| c == best).unwrap_or(0) as u32
    }

    pub fn alive(&self) -> impl Iterator<Item = u32> + '_ {
        self.statuses.iter().enumerate().filter(|(_, s)| **s == KeyStatus::Alive).map(|(k, _)| k as u32)
    }
}

/// Per-component sets of the `i = 0` searches.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroSetSearch {
    pub sets: Vec<AffineSolutionSet>,
    /// Component whose set was trivial, if the search stopped early.
    pub halted_at: Option<u32>,
    pub intersection: Option<AffineSolutionSet>,
    pub candidate: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Evidence {
    Distinguisher {
        s0: u32,
        s1: u32,
        search: ZeroSetSearch,
        u: Option<u32>,
        outputs: Option<(u32, u32)>,
    },
    KeyRecovery {
        search: ZeroSetSearch,
    },
    Differential {
        /// Constancy set and pivot per processed component.
        components: Vec<(AffineSolutionSet, u32)>,
        intersection: Option<AffineSolutionSet>,
    },
    Counting {
        differential: Structure,
        table: KeyCounterTable,
    },
    SmallProbability {
        phase1: Option<Structure>,
        target_difference: Option<u32>,
        table: Option<KeyCounterTable>,
    },
    Impossible {
        /// `(B¹, B⁰)` per processed component.
        components: Vec<(AffineSolutionSet, AffineSolutionSet)>,
    },
    Sieve {
        certificate: ImpossibleCertificate,
        table: KeyCounterTable,
    },
}

/// Structured outcome of one attack run.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackReport {
    pub kind: AttackKind,
    pub verdict: AttackVerdict,
    pub queries: QueryCount,
    pub parameters: Parameters,
    pub evidence: Evidence,
}

/// For each component, `{x : x·ω = 0}` over `p` samples; stops at the first
/// trivial set. The candidate is the smallest nonzero member of the
/// intersection.
pub fn zero_set_search(session: &OracleSession<'_>, p: u64, seed: u64) -> Result<ZeroSetSearch> {
    if p == 0 {
        return Err(Error::InvalidParameter("query count p must be at least 1"));
    }
    let width = session.input_bits();
    let mut sets = Vec::with_capacity(session.output_bits() as usize);
    let mut intersection = AffineSolutionSet::full(width);
    for j in 0..session.output_bits() {
        let h = lsfind::collect_samples(session, j as usize, p, seed, 0);
        let set = Gf2System::uniform(width, &h, false)?.solve();
        let trivial = set.is_trivial();
        intersection = intersection.intersect(&set)?;
        sets.push(set);
        if trivial {
            return Ok(ZeroSetSearch { sets, halted_at: Some(j), intersection: None, candidate: None });
        }
    }
    let candidate = intersection.min_nonzero();
    Ok(ZeroSetSearch { sets, halted_at: None, intersection: Some(intersection), candidate })
}

/// Distinguish a three-round Feistel cipher on `2n` bits from a random
/// permutation, with `n + 1` BV runs per component and two classical
/// queries.
pub fn algorithm3_distinguish(e: &impl BlockCipher, seed: u64) -> Result<AttackReport> {
    let block = e.block_bits();
    if block % 2 != 0 || block < 2 {
        return Err(Error::InvalidParameter("block width must be even"));
    }
    let n = block / 2;
    let p = n as u64 + 1;
    let mut control = rng::stream(seed, CONTROL_STREAM);
    let s0 = control.gen::<u32>() & mask(n);
    let s1 = loop {
        let s = control.gen::<u32>() & mask(n);
        if s != s0 {
            break s;
        }
    };
    let oracle = OracleFunction::new(ciphers::feistel_function(e, s0, s1)?);
    let ledger = QueryLedger::new();
    let session = oracle.session(&ledger);
    let search = zero_set_search(&session, p, seed)?;

    let (verdict, u, outputs) = match search.candidate {
        Some(a) => {
            let u = control.gen::<u32>() & mask(n + 1);
            let (fu, fv) = (session.query(u), session.query(u ^ a));
            let verdict = if fu == fv { AttackVerdict::Yes } else { AttackVerdict::No };
            (verdict, Some(u), Some((fu, fv)))
        }
        None => (AttackVerdict::No, None, None),
    };
    Ok(AttackReport {
        kind: AttackKind::FeistelDistinguisher,
        verdict,
        queries: ledger.snapshot(),
        parameters: Parameters { n, p: Some(p), seed, ..Default::default() },
        evidence: Evidence::Distinguisher { s0, s1, search, u, outputs },
    })
}

/// Recover `k₁` of an Even-Mansour cipher from `F = E ⊕ P`.
pub fn algorithm4_recover_k1(e: &impl BlockCipher, p_public: &VectorFunction, p: u64, seed: u64) -> Result<AttackReport> {
    let n = e.block_bits();
    let oracle = OracleFunction::new(ciphers::even_mansour_function(e, p_public)?);
    let ledger = QueryLedger::new();
    let search = zero_set_search(&oracle.session(&ledger), p, seed)?;
    let verdict = search.candidate.map_or(AttackVerdict::No, AttackVerdict::Key);
    Ok(AttackReport {
        kind: AttackKind::EvenMansourKeyRecovery,
        verdict,
        queries: ledger.snapshot(),
        parameters: Parameters { n, p: Some(p), seed, ..Default::default() },
        evidence: Evidence::KeyRecovery { search },
    })
}

/// Vector search on `G(x ∥ k)` keeping only the plaintext part of every
/// sample, so the returned input difference has a zero key part.
pub fn algorithm5(session: &OracleSession<'_>, key_bits: u32, p: u64, seed: u64) -> Result<Ls2Result> {
    lsfind::algorithm2_on(session, p, seed, key_bits)
}

pub fn algorithm5_find_differential(g: &OracleFunction, key_bits: u32, p: u64, seed: u64) -> Result<AttackReport> {
    let ledger = QueryLedger::new();
    let run = algorithm5(&g.session(&ledger), key_bits, p, seed)?;
    let verdict = run.structure.map_or(AttackVerdict::No, AttackVerdict::Differential);
    Ok(AttackReport {
        kind: AttackKind::DifferentialSearch,
        verdict,
        queries: ledger.snapshot(),
        parameters: Parameters {
            n: g.output_bits(),
            m: Some(key_bits),
            p: Some(p),
            seed,
            ..Default::default()
        },
        evidence: Evidence::Differential {
            components: run.per_component.into_iter().map(|c| (c.constancy, c.pivot)).collect(),
            intersection: run.intersection,
        },
    })
}

fn check_target(cipher: &ToyCipher, target: &impl BlockCipher) -> Result<()> {
    if target.block_bits() != cipher.n() {
        return Err(Error::WidthMismatch { left: cipher.n(), right: target.block_bits() });
    }
    Ok(())
}

/// Ciphertext pairs for plaintext pairs `(x, x ⊕ a)`, `x` uniform.
fn ciphertext_pairs(
    target: &impl BlockCipher,
    ledger: &QueryLedger,
    a: u32,
    pairs: u64,
    seed: u64,
) -> Vec<(u32, u32)> {
    let n = target.block_bits();
    let mut control = rng::stream(seed, CONTROL_STREAM);
    (0..pairs)
        .map(|_| {
            let x = control.gen::<u32>() & mask(n);
            ledger.record_classical();
            ledger.record_classical();
            (target.encrypt(x), target.encrypt(x ^ a))
        })
        .collect()
}

/// Classical last-round key recovery: count, for each subkey guess, the
/// pairs that decrypt to the expected difference.
pub fn differential_key_recovery(
    cipher: &ToyCipher,
    target: &impl BlockCipher,
    differential: Structure,
    pairs: u64,
    seed: u64,
) -> Result<AttackReport> {
    if pairs == 0 {
        return Err(Error::InsufficientData);
    }
    check_target(cipher, target)?;
    let n = cipher.n();
    let ledger = QueryLedger::new();
    let data = ciphertext_pairs(target, &ledger, differential.input_diff, pairs, seed);
    let mut table = KeyCounterTable::new(n, pairs);
    for s in 0..1u32 << n {
        table.counters[s as usize] = data
            .iter()
            .filter(|&&(c0, c1)| {
                cipher.decrypt_last(c0, s) ^ cipher.decrypt_last(c1, s) == differential.output_diff
            })
            .count() as u64;
    }
    Ok(AttackReport {
        kind: AttackKind::DifferentialKeyRecovery,
        verdict: AttackVerdict::Subkey(table.argmax()),
        queries: ledger.snapshot(),
        parameters: Parameters { n, m: Some(cipher.key_bits()), pairs: Some(pairs), seed, ..Default::default() },
        evidence: Evidence::Counting { differential, table },
    })
}

/// Small-probability differential attack. Phase I runs the truncated vector
/// search with `p` runs per component (by default `n³l²q²`) and complements
/// the output difference; phase II ranks subkeys by how often decrypted
/// pairs agree with that complement, bit by bit.
pub fn smallprob_attack(
    g: &OracleFunction,
    cipher: &ToyCipher,
    target: &impl BlockCipher,
    q: u64,
    l: u64,
    p: Option<u64>,
    seed: u64,
) -> Result<AttackReport> {
    if l < 2 {
        return Err(Error::InvalidParameter("l must be at least 2"));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1"));
    }
    check_target(cipher, target)?;
    let n = cipher.n();
    let m = cipher.key_bits();
    let p = p.unwrap_or_else(|| bounds::theorem7_queries(n, l, q));
    let ledger = QueryLedger::new();
    let phase1 = algorithm5(&g.session(&ledger), m, p, seed)?;
    let parameters = Parameters { n, m: Some(m), p: Some(p), q: Some(q), l: Some(l), pairs: Some(l * l), seed };

    let Some(found) = phase1.structure else {
        return Ok(AttackReport {
            kind: AttackKind::SmallProbability,
            verdict: AttackVerdict::No,
            queries: ledger.snapshot(),
            parameters,
            evidence: Evidence::SmallProbability { phase1: None, target_difference: None, table: None },
        });
    };
    let b = !found.output_diff & mask(n);
    let data = ciphertext_pairs(target, &ledger, found.input_diff, l * l, rng::mix(seed));
    let mut table = KeyCounterTable::new(n, n as u64 * l * l);
    for s in 0..1u32 << n {
        table.counters[s as usize] = data
            .iter()
            .map(|&(c0, c1)| {
                let dy = cipher.decrypt_last(c0, s) ^ cipher.decrypt_last(c1, s);
                (!(dy ^ b) & mask(n)).count_ones() as u64
            })
            .sum();
    }
    Ok(AttackReport {
        kind: AttackKind::SmallProbability,
        verdict: AttackVerdict::Subkey(table.argmin()),
        queries: ledger.snapshot(),
        parameters,
        evidence: Evidence::SmallProbability { phase1: Some(found), target_difference: Some(b), table: Some(table) },
    })
}

/// Impossible-differential search: for each component in turn, `B¹`
/// solves `{x·ω = 0}` and `B⁰` solves `{x·ω = 1}` over truncated samples.
/// A member of `B^i` has output-bit difference `1 - i` throughout, so the
/// value `i` is impossible. Stops at the first component with a nonzero
/// member.
pub fn algorithm6_find_impossible(g: &OracleFunction, key_bits: u32, p: u64, seed: u64) -> Result<AttackReport> {
    if p == 0 {
        return Err(Error::InvalidParameter("query count p must be at least 1"));
    }
    if key_bits >= g.input_bits() {
        return Err(Error::InvalidParameter("truncation removes every input bit"));
    }
    let ledger = QueryLedger::new();
    let session = g.session(&ledger);
    let width = g.input_bits() - key_bits;
    let mut components = Vec::new();
    let mut verdict = AttackVerdict::No;
    for j in 0..g.output_bits() {
        let h = lsfind::collect_samples(&session, j as usize, p, seed, key_bits);
        let b1 = Gf2System::uniform(width, &h, false)?.solve();
        let b0 = Gf2System::uniform(width, &h, true)?.solve();
        let pick = [(b0.min_nonzero(), false), (b1.min_nonzero(), true)]
            .into_iter()
            .filter_map(|(a, value)| a.map(|a| (a, value)))
            .min();
        components.push((b1, b0));
        if let Some((a, value)) = pick {
            verdict = AttackVerdict::Impossible(ImpossibleCertificate { component: j, input_diff: a, value });
            break;
        }
    }
    Ok(AttackReport {
        kind: AttackKind::ImpossibleDifferential,
        verdict,
        queries: ledger.snapshot(),
        parameters: Parameters { n: g.output_bits(), m: Some(key_bits), p: Some(p), seed, ..Default::default() },
        evidence: Evidence::Impossible { components },
    })
}

/// Rule out every subkey under which some pair shows the impossible value
/// in the certified bit.
pub fn impossible_sieve(
    cipher: &ToyCipher,
    target: &impl BlockCipher,
    certificate: ImpossibleCertificate,
    pairs: u64,
    seed: u64,
) -> Result<AttackReport> {
    check_target(cipher, target)?;
    let n = cipher.n();
    if certificate.component >= n {
        return Err(Error::InvalidParameter("certificate component out of range"));
    }
    let shift = n - 1 - certificate.component;
    let ledger = QueryLedger::new();
    let data = ciphertext_pairs(target, &ledger, certificate.input_diff, pairs, seed);
    let mut table = KeyCounterTable::new(n, pairs.max(1));
    for s in 0..1u32 << n {
        let hits = data
            .iter()
            .filter(|&&(c0, c1)| {
                let dy = cipher.decrypt_last(c0, s) ^ cipher.decrypt_last(c1, s);
                (dy >> shift & 1 == 1) == certificate.value
            })
            .count() as u64;
        table.counters[s as usize] = hits;
        if hits > 0 {
            table.statuses[s as usize] = KeyStatus::Sieved;
        }
    }
    let alive: Vec<u32> = table.alive().collect();
    let verdict = match alive.as_slice() {
        [s] => AttackVerdict::Subkey(*s),
        [] => AttackVerdict::No,
        _ => AttackVerdict::Subkey(alive[0]),
    };
    Ok(AttackReport {
        kind: AttackKind::ImpossibleDifferential,
        verdict,
        queries: ledger.snapshot(),
        parameters: Parameters { n, m: Some(cipher.key_bits()), pairs: Some(pairs), seed, ..Default::default() },
        evidence: Evidence::Sieve { certificate, table },
    })
}

/// Whether an attack reached its output step with a positive answer.
pub fn is_positive(verdict: &AttackVerdict) -> bool {
    !matches!(verdict, AttackVerdict::No)
}

impl From<Verdict> for AttackVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::No => AttackVerdict::No,
            Verdict::Found => AttackVerdict::Yes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ciphers::{EvenMansour, Feistel3, Preset, ToyCipher};

    #[test]
    fn feistel_distinguisher_accounting() {
        let c = Feistel3::random(6, 11).unwrap();
        let r = algorithm3_distinguish(&c, 4).unwrap();
        if let Evidence::Distinguisher { search, .. } = &r.evidence {
            if search.candidate.is_some() {
                assert_eq!(r.queries, QueryCount { quantum: 42, classical: 2 });
            }
        }
    }

    #[test]
    fn even_mansour_fixture() {
        let sbox = [0x6, 0x4, 0xC, 0x5, 0x0, 0x7, 0x2, 0xE, 0x1, 0xF, 0x3, 0xD, 0x8, 0xA, 0x9, 0xB];
        let p = VectorFunction::new(4, 4, sbox.to_vec()).unwrap();
        let e = EvenMansour::new(p.clone(), 0xA, 0x3).unwrap();
        let f = ciphers::even_mansour_function(&e, &p).unwrap();
        let zero: Vec<u32> =
            f.linear_structures().into_iter().filter(|&(a, d)| a != 0 && d == 0).map(|(a, _)| a).collect();
        assert_eq!(zero, [0xA]);
        let r = algorithm4_recover_k1(&e, &p, 16, 1).unwrap();
        assert_eq!(r.verdict, AttackVerdict::Key(0xA));
        assert_eq!(r.queries.quantum, 64);
    }

    #[test]
    fn counting_needs_pairs() {
        let c = ToyCipher::generate(4, Preset::Weak, 1).unwrap();
        let d = Structure { input_diff: 8, output_diff: 8 };
        assert_eq!(differential_key_recovery(&c, &c.instance(3, 5), d, 0, 0).unwrap_err(), Error::InsufficientData);
        let r = differential_key_recovery(&c, &c.instance(3, 5), d, 256, 0).unwrap();
        assert_eq!(r.verdict, AttackVerdict::Subkey(5));
    }

    #[test]
    fn sieve_with_no_pairs_keeps_everything() {
        let c = ToyCipher::generate(4, Preset::Weak, 1).unwrap();
        let cert = ImpossibleCertificate { component: 0, input_diff: 8, value: false };
        let r = impossible_sieve(&c, &c.instance(3, 5), cert, 0, 0).unwrap();
        let Evidence::Sieve { table, .. } = r.evidence else { panic!() };
        assert_eq!(table.alive().count(), 16);
    }

    #[test]
    fn smallprob_guards_l() {
        let c = ToyCipher::generate(4, Preset::Weak, 1).unwrap();
        let g = OracleFunction::new(c.g_function().unwrap());
        assert!(smallprob_attack(&g, &c, &c.instance(0, 0), 4, 1, None, 0).is_err());
    }
}
