//! Monte Carlo experiments for the probability bounds of the attacks.
//!
//! Each experiment builds its instances from the experiment seed, runs
//! independent trials keyed by [`rng::trial_seed`], and turns the trial log
//! into named checks. Trials can be executed by any [`TrialRunner`]; the
//! outcome only depends on the seeds.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::attacks::{self, AttackVerdict, Evidence, ImpossibleCertificate};
use crate::boolfn::{BooleanFunction, VectorFunction};
use crate::bv::{BvDistribution, OracleFunction, QueryCount, QueryLedger};
use crate::ciphers::{self, EvenMansour, Feistel3, Preset, ToyCipher};
use crate::lsfind::{self, Structure, Verdict};
use crate::rng::{self, StreamRng, INSTANCE_STREAM};
use crate::stats::{bounds, retry_seed, BoundCheck, MeanCheck, DEFAULT_Z, MIN_TRIALS};
use crate::{mask, Dyadic, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TheoremId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
}

impl TheoremId {
    pub const ALL: [TheoremId; 8] = [
        TheoremId::T1,
        TheoremId::T2,
        TheoremId::T3,
        TheoremId::T4,
        TheoremId::T5,
        TheoremId::T6,
        TheoremId::T7,
        TheoremId::T8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::T1 => "T1",
            TheoremId::T2 => "T2",
            TheoremId::T3 => "T3",
            TheoremId::T4 => "T4",
            TheoremId::T5 => "T5",
            TheoremId::T6 => "T6",
            TheoremId::T7 => "T7",
            TheoremId::T8 => "T8",
        }
    }

    pub fn parse(s: &str) -> Option<TheoremId> {
        TheoremId::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(s))
    }

    /// Width used when none is given.
    pub fn default_n(self) -> u32 {
        match self {
            TheoremId::T1 => 8,
            TheoremId::T2 => 6,
            TheoremId::T3 => 6,
            TheoremId::T4 => 6,
            TheoremId::T5 => 8,
            TheoremId::T6 => 4,
            TheoremId::T7 => 6,
            TheoremId::T8 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Check {
    Bound(BoundCheck),
    Mean(MeanCheck),
    /// Passes when no trial violates an exact property.
    Exact { violations: u64, examined: u64, pass: bool },
}

impl Check {
    pub fn pass(&self) -> bool {
        match self {
            Check::Bound(c) => c.pass,
            Check::Mean(c) => c.pass,
            Check::Exact { pass, .. } => *pass,
        }
    }

    fn exact(violations: u64, examined: u64) -> Check {
        Check::Exact { violations, examined, pass: violations == 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NamedCheck {
    pub name: String,
    pub check: Check,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremOutcome {
    pub id: TheoremId,
    pub n: u32,
    pub trials: u64,
    pub seed: u64,
    /// Seed of the failed first attempt, when this outcome is the retry.
    pub retried_from: Option<u64>,
    pub checks: Vec<NamedCheck>,
    pub measurements: Vec<Measurement>,
}

impl TheoremOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.check.pass())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.check)
    }

    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TheoremConfig {
    pub n: Option<u32>,
    pub trials: u64,
    pub seed: u64,
}

/// A bound experiment with independent, seed-determined trials.
pub trait Theorem: Sync {
    type Trial: Send;

    fn run_trial(&self, seed: u64) -> Self::Trial;

    fn summarize(&self, trials: &[Self::Trial], out: &mut Summary);
}

/// Checks and measurements collected by [`Theorem::summarize`].
#[derive(Default)]
pub struct Summary {
    checks: Vec<NamedCheck>,
    measurements: Vec<Measurement>,
}

impl Summary {
    pub fn check(&mut self, name: impl Into<String>, check: Check) {
        self.checks.push(NamedCheck { name: name.into(), check });
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measurements.push(Measurement { name: name.into(), value });
    }
}

/// Executes trials; results must come back in seed order.
pub trait TrialRunner {
    fn run_trials<T: Theorem>(&self, theorem: &T, seeds: &[u64]) -> Vec<T::Trial>;
}

/// Runs trials one after another.
pub struct Sequential;

impl TrialRunner for Sequential {
    fn run_trials<T: Theorem>(&self, theorem: &T, seeds: &[u64]) -> Vec<T::Trial> {
        seeds.iter().map(|&s| theorem.run_trial(s)).collect()
    }
}

fn seeds(trials: u64, seed: u64) -> Vec<u64> {
    (0..trials).map(|t| rng::trial_seed(seed, t)).collect()
}

/// Run one experiment, retrying once under [`retry_seed`] if any check
/// fails.
pub fn verify<R: TrialRunner>(id: TheoremId, config: &TheoremConfig, runner: &R) -> Result<TheoremOutcome> {
    let first = verify_once(id, config, runner)?;
    if first.pass() {
        return Ok(first);
    }
    let retry = TheoremConfig { seed: retry_seed(config.seed), ..*config };
    let mut second = verify_once(id, &retry, runner)?;
    second.retried_from = Some(config.seed);
    Ok(second)
}

/// Run one experiment without the retry.
pub fn verify_once<R: TrialRunner>(id: TheoremId, config: &TheoremConfig, runner: &R) -> Result<TheoremOutcome> {
    if config.trials < MIN_TRIALS {
        return Err(Error::InsufficientTrials { requested: config.trials, minimum: MIN_TRIALS });
    }
    let n = config.n.unwrap_or(id.default_n());
    let seed = config.seed;
    let mut summary = Summary::default();
    match id {
        TheoremId::T1 => execute(&ClosenessExperiment::new(n, seed)?, config, runner, &mut summary),
        TheoremId::T2 => execute(&NegativeExperiment::new(n, seed)?, config, runner, &mut summary),
        TheoremId::T3 => execute(&VectorSearchExperiment::new(n)?, config, runner, &mut summary),
        TheoremId::T4 => execute(&FeistelExperiment::new(n)?, config, runner, &mut summary),
        TheoremId::T5 => execute(&EvenMansourExperiment::new(n)?, config, runner, &mut summary),
        TheoremId::T6 => execute(&DifferentialExperiment::new(n, seed)?, config, runner, &mut summary),
        TheoremId::T7 => execute(&SmallProbabilityExperiment::new(n, seed)?, config, runner, &mut summary),
        TheoremId::T8 => execute(&ImpossibleExperiment::new(n, seed)?, config, runner, &mut summary),
    }
    Ok(TheoremOutcome {
        id,
        n,
        trials: config.trials,
        seed,
        retried_from: None,
        checks: summary.checks,
        measurements: summary.measurements,
    })
}

fn execute<T: Theorem, R: TrialRunner>(theorem: &T, config: &TheoremConfig, runner: &R, out: &mut Summary) {
    let trials = runner.run_trials(theorem, &seeds(config.trials, config.seed));
    theorem.summarize(&trials, out);
}

fn count<T>(trials: &[T], f: impl Fn(&T) -> bool) -> u64 {
    trials.iter().filter(|t| f(t)).count() as u64
}

fn xor_and(v: u32) -> bool {
    ((v >> 2) & (v >> 1) & 1 == 1) ^ (v & 1 == 1)
}

/// Random `f` with `f(x ⊕ a) = f(x) ⊕ c` for a random nonzero `a`.
pub fn planted_boolean(n: u32, rng: &mut StreamRng) -> Result<(BooleanFunction, u32, bool)> {
    let a = rng.gen_range(1..=mask(n));
    let c = rng.gen::<bool>();
    let values: Vec<bool> = (0..1u32 << n).map(|_| rng.gen()).collect();
    let f = BooleanFunction::from_fn(n, |x| {
        let rep = x.min(x ^ a);
        values[rep as usize] ^ (c && x != rep)
    })?;
    Ok((f, a, c))
}

/// Random `F: n → n` with `F(x ⊕ a) = F(x) ⊕ α` for random nonzero `a`.
pub fn planted_vector(n: u32, rng: &mut StreamRng) -> Result<(VectorFunction, Structure)> {
    let a = rng.gen_range(1..=mask(n));
    let alpha = rng.gen::<u32>() & mask(n);
    let values: Vec<u32> = (0..1u32 << n).map(|_| rng.gen::<u32>() & mask(n)).collect();
    let f = VectorFunction::from_fn(n, n, |x| {
        let rep = x.min(x ^ a);
        values[rep as usize] ^ if x != rep { alpha } else { 0 }
    })?;
    Ok((f, Structure { input_diff: a, output_diff: alpha }))
}

/// `x₁x₂ ⊕ x₃x₄ ⊕ …` on an even number of bits.
pub fn inner_product_bent(n: u32) -> Result<BooleanFunction> {
    if n % 2 != 0 {
        return Err(Error::InvalidParameter("bent functions need an even width"));
    }
    BooleanFunction::from_fn(n, |x| ((x >> 1) & x & 0x5555_5555).count_ones() & 1 == 1)
}

/// Largest `δ′` over the plaintext-only differences `(a ∥ 0)` of `G`.
pub fn truncated_delta_prime(g: &VectorFunction, key_bits: u32) -> Dyadic {
    let width = g.input_bits() - key_bits;
    let directions: Vec<u32> = (1..1u32 << width).map(|a| a << key_bits).collect();
    g.delta_prime_over(&directions)
}

// T1: closeness of returned candidates.

const T1_PARAMS: [(u64, f64); 2] = [(50, 0.25), (200, 0.1)];
const T1_RANDOM_FUNCTIONS: usize = 20;

pub struct ClosenessExperiment {
    functions: Vec<(String, BooleanFunction, BvDistribution)>,
}

impl ClosenessExperiment {
    /// `x₁x₂ ⊕ x₃` plus random planted-structure functions on 4 to `max_n`
    /// bits.
    pub fn new(max_n: u32, seed: u64) -> Result<Self> {
        if !(4..=12).contains(&max_n) {
            return Err(Error::InvalidParameter("T1 width must lie in 4..=12"));
        }
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let mut functions = Vec::new();
        let f = BooleanFunction::from_fn(3, xor_and)?;
        functions.push((String::from("x1x2+x3"), BvDistribution::from_function(&f), f));
        for i in 0..T1_RANDOM_FUNCTIONS {
            let n = rng.gen_range(4..=max_n);
            let (f, a, c) = planted_boolean(n, &mut rng)?;
            let name = format!("random{i:02}(n={n},a={a:#x},c={})", c as u8);
            functions.push((name, BvDistribution::from_function(&f), f));
        }
        Ok(ClosenessExperiment {
            functions: functions.into_iter().map(|(name, d, f)| (name, f, d)).collect(),
        })
    }
}

impl Theorem for ClosenessExperiment {
    /// `(close, examined)` per function and parameter pair.
    type Trial = Vec<[(u64, u64); 2]>;

    fn run_trial(&self, seed: u64) -> Self::Trial {
        self.functions
            .iter()
            .enumerate()
            .map(|(i, (_, f, dist))| {
                core::array::from_fn(|k| {
                    let (p, eps) = T1_PARAMS[k];
                    let run = lsfind::algorithm1_with(dist, p, rng::mix(seed ^ ((i as u64) << 8 | k as u64)))
                        .expect("p is positive");
                    let mut close = 0;
                    let mut examined = 0;
                    for value in [false, true] {
                        for a in run.set(value).enumerate(lsfind::VALIDATION_CAP).members {
                            if a != 0 {
                                examined += 1;
                                close += (f.sigma_closeness(a, value).to_f64() < eps) as u64;
                            }
                        }
                    }
                    (close, examined)
                })
            })
            .collect()
    }

    fn summarize(&self, trials: &[Self::Trial], out: &mut Summary) {
        for (k, &(p, eps)) in T1_PARAMS.iter().enumerate() {
            let bound = bounds::theorem1(p, eps).expect("epsilon in range");
            let mut min_rate = 1.0f64;
            for (i, (name, _, _)) in self.functions.iter().enumerate() {
                let close: u64 = trials.iter().map(|t| t[i][k].0).sum();
                let examined: u64 = trials.iter().map(|t| t[i][k].1).sum();
                let check = BoundCheck::at_least(close, examined.max(1), bound, DEFAULT_Z);
                let check = if examined == 0 { BoundCheck::at_least(1, 1, bound, DEFAULT_Z) } else { check };
                min_rate = min_rate.min(check.rate);
                out.check(format!("closeness {name} p={p} eps={eps}"), Check::Bound(check));
            }
            out.measure(format!("bound p={p} eps={eps}"), bound);
            out.measure(format!("min rate p={p} eps={eps}"), min_rate);
        }
    }
}

// T2 and the negative paths.

pub struct NegativeExperiment {
    n: u32,
    bent_dist: BvDistribution,
    bent_delta: f64,
    strong: ToyCipher,
    strong_g: OracleFunction,
    strong_p0: f64,
}

impl NegativeExperiment {
    /// Bent function on `n` bits, random `n`-bit permutations and a strong
    /// toy cipher on 4-bit blocks.
    pub fn new(n: u32, seed: u64) -> Result<Self> {
        let bent = inner_product_bent(n)?;
        let bent_dist = BvDistribution::from_function(&bent);
        let bent_delta = bent.delta_prime().to_f64();
        let strong = ToyCipher::generate(4, Preset::Strong, seed)?;
        let g = strong.g_function()?;
        let strong_p0 = truncated_delta_prime(&g, strong.key_bits()).to_f64();
        Ok(NegativeExperiment { n, bent_dist, bent_delta, strong, strong_g: OracleFunction::new(g), strong_p0 })
    }

    fn p_bent(&self) -> u64 {
        lsfind::default_p(self.n)
    }

    fn p_permutation(&self) -> u64 {
        6 * self.n as u64
    }

    fn p_strong(&self) -> u64 {
        lsfind::default_p(self.strong.n())
    }
}

pub struct NegativeTrial {
    bent_found: bool,
    permutation_found: bool,
    permutation_delta: f64,
    strong_differential: bool,
    strong_impossible: bool,
}

impl Theorem for NegativeExperiment {
    type Trial = NegativeTrial;

    fn run_trial(&self, seed: u64) -> NegativeTrial {
        let bent = lsfind::algorithm1_with(&self.bent_dist, self.p_bent(), seed).expect("p positive");
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let perm = ciphers::random_permutation(self.n, &mut rng).expect("width checked");
        let permutation_delta = perm.delta_prime().to_f64();
        let ls2 = lsfind::algorithm2(&perm, self.p_permutation(), seed).expect("p positive");
        let m = self.strong.key_bits();
        let diff = attacks::algorithm5_find_differential(&self.strong_g, m, self.p_strong(), seed).expect("valid");
        let imp = attacks::algorithm6_find_impossible(&self.strong_g, m, self.p_strong(), seed).expect("valid");
        NegativeTrial {
            bent_found: bent.verdict == Verdict::Found,
            permutation_found: ls2.verdict == Verdict::Found,
            permutation_delta,
            strong_differential: diff.verdict != AttackVerdict::No,
            strong_impossible: imp.verdict != AttackVerdict::No,
        }
    }

    fn summarize(&self, trials: &[NegativeTrial], out: &mut Summary) {
        let total = trials.len() as u64;
        let worst_perm = trials.iter().map(|t| t.permutation_delta).fold(0.0, f64::max);
        let n_strong = self.strong.n();

        let cases = [
            ("bent no-rate", count(trials, |t| !t.bent_found), bounds::theorem2(self.bent_delta, self.p_bent())),
            (
                "random permutation no-rate",
                count(trials, |t| !t.permutation_found),
                bounds::theorem2(worst_perm, self.p_permutation()),
            ),
            (
                "strong preset differential no-rate",
                count(trials, |t| !t.strong_differential),
                bounds::theorem2(self.strong_p0, self.p_strong()),
            ),
            (
                "strong preset impossible no-rate",
                count(trials, |t| !t.strong_impossible),
                1.0 - bounds::theorem8(self.strong_p0, self.p_strong(), n_strong),
            ),
        ];
        for (name, no, false_rate) in cases {
            out.check(name, Check::Bound(BoundCheck::at_least(no, total, 1.0 - false_rate, DEFAULT_Z)));
        }
        out.measure("bent delta_prime", self.bent_delta);
        out.measure("bent bound", bounds::theorem2(self.bent_delta, self.p_bent()));
        out.measure("bent union bound", bounds::theorem2_union(self.bent_delta, self.p_bent(), self.n));
        out.measure("random permutation max delta_prime", worst_perm);
        out.measure("strong preset truncated delta_prime", self.strong_p0);
        out.measure("strong preset full delta_prime", self.strong_g.function().delta_prime().to_f64());
    }
}

// T3: vector search soundness.

pub struct VectorSearchExperiment {
    n: u32,
}

impl VectorSearchExperiment {
    pub fn new(n: u32) -> Result<Self> {
        if !(2..=10).contains(&n) {
            return Err(Error::InvalidParameter("T3 width must lie in 2..=10"));
        }
        Ok(VectorSearchExperiment { n })
    }

    fn p(&self) -> u64 {
        8 * (self.n as u64) * (self.n as u64)
    }

    fn epsilon(&self) -> f64 {
        1.0 / (2.0 * self.n as f64)
    }
}

pub struct VectorSearchTrial {
    found: bool,
    sound: bool,
    close: bool,
    delta_prime: f64,
}

impl Theorem for VectorSearchExperiment {
    type Trial = VectorSearchTrial;

    fn run_trial(&self, seed: u64) -> VectorSearchTrial {
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let (f, _) = planted_vector(self.n, &mut rng).expect("width checked");
        let run = lsfind::algorithm2(&f, self.p(), seed).expect("p positive");
        let delta_prime = f.delta_prime().to_f64();
        match run.structure {
            Some(s) => {
                let sound = f.linear_structures().contains(&(s.input_diff, s.output_diff));
                let close = (0..self.n as usize).all(|j| {
                    let value = s.output_diff >> (self.n as usize - 1 - j) & 1 == 1;
                    f.component(j).sigma_closeness(s.input_diff, value).to_f64() < self.epsilon()
                });
                VectorSearchTrial { found: true, sound, close, delta_prime }
            }
            None => VectorSearchTrial { found: false, sound: false, close: false, delta_prime },
        }
    }

    fn summarize(&self, trials: &[VectorSearchTrial], out: &mut Summary) {
        let found = count(trials, |t| t.found);
        let sound = count(trials, |t| t.found && t.sound);
        let close = count(trials, |t| t.found && t.close);
        let worst = trials.iter().map(|t| t.delta_prime).fold(0.0, f64::max);
        let closeness_bound = bounds::theorem3(self.p(), self.epsilon(), self.n).expect("epsilon in range");
        out.check("found rate", Check::Bound(BoundCheck::at_least(found, trials.len() as u64, 0.99, DEFAULT_Z)));
        out.check("soundness", Check::Bound(BoundCheck::at_least(sound, found.max(1), 0.99, DEFAULT_Z)));
        out.check("closeness", Check::Bound(BoundCheck::at_least(close, found.max(1), closeness_bound, DEFAULT_Z)));
        out.measure("p", self.p() as f64);
        out.measure("epsilon", self.epsilon());
        out.measure("max delta_prime", worst);
        out.measure("false structure bound", bounds::theorem2(worst, self.p()));
    }
}

// T4: Feistel distinguisher.

pub struct FeistelExperiment {
    n: u32,
}

impl FeistelExperiment {
    pub fn new(n: u32) -> Result<Self> {
        if !(2..=11).contains(&n) {
            return Err(Error::InvalidParameter("T4 half-block width must lie in 2..=11"));
        }
        Ok(FeistelExperiment { n })
    }
}

pub struct FeistelTrial {
    feistel_yes: bool,
    random_yes: bool,
    ledger_ok: bool,
}

/// Whether a distinguisher run used exactly the queries its path requires.
fn distinguisher_ledger_ok(n: u32, report: &attacks::AttackReport) -> bool {
    let p = n as u64 + 1;
    let Evidence::Distinguisher { search, .. } = &report.evidence else { return false };
    let expected = match search.halted_at {
        None => QueryCount { quantum: n as u64 * p, classical: if search.candidate.is_some() { 2 } else { 0 } },
        Some(j) => QueryCount { quantum: (j as u64 + 1) * p, classical: 0 },
    };
    report.queries == expected
}

impl Theorem for FeistelExperiment {
    type Trial = FeistelTrial;

    fn run_trial(&self, seed: u64) -> FeistelTrial {
        let feistel = Feistel3::random(self.n, seed).expect("width checked");
        let a = attacks::algorithm3_distinguish(&feistel, seed).expect("valid");
        let mut rng = rng::stream(seed, INSTANCE_STREAM ^ 1);
        let perm = ciphers::random_permutation(2 * self.n, &mut rng).expect("width checked");
        let b = attacks::algorithm3_distinguish(&perm, seed).expect("valid");
        FeistelTrial {
            feistel_yes: a.verdict == AttackVerdict::Yes,
            random_yes: b.verdict == AttackVerdict::Yes,
            ledger_ok: distinguisher_ledger_ok(self.n, &a) && distinguisher_ledger_ok(self.n, &b),
        }
    }

    fn summarize(&self, trials: &[FeistelTrial], out: &mut Summary) {
        let total = trials.len() as u64;
        let feistel = count(trials, |t| t.feistel_yes);
        let random = count(trials, |t| t.random_yes);
        out.check("feistel yes-rate", Check::Bound(BoundCheck::at_least(feistel, total, bounds::theorem4(self.n), DEFAULT_Z)));
        out.check("random yes-rate", Check::Bound(BoundCheck::at_most(random, total, 0.05, DEFAULT_Z)));
        out.check("query ledger", Check::exact(count(trials, |t| !t.ledger_ok), total));
        out.measure("bound", bounds::theorem4(self.n));
        out.measure("random pair collision rate", libm::exp2(-(self.n as f64)));
    }
}

// T5: Even-Mansour key recovery.

pub struct EvenMansourExperiment {
    n: u32,
}

impl EvenMansourExperiment {
    pub fn new(n: u32) -> Result<Self> {
        if !(2..=16).contains(&n) {
            return Err(Error::InvalidParameter("T5 width must lie in 2..=16"));
        }
        Ok(EvenMansourExperiment { n })
    }
}

pub struct EvenMansourTrial {
    recovered: bool,
    queries: QueryCount,
}

impl Theorem for EvenMansourExperiment {
    type Trial = EvenMansourTrial;

    fn run_trial(&self, seed: u64) -> EvenMansourTrial {
        let em = EvenMansour::random(self.n, seed).expect("width checked");
        let r = attacks::algorithm4_recover_k1(&em, em.permutation(), self.n as u64, seed).expect("valid");
        EvenMansourTrial { recovered: r.verdict == AttackVerdict::Key(em.k1()), queries: r.queries }
    }

    fn summarize(&self, trials: &[EvenMansourTrial], out: &mut Summary) {
        let total = trials.len() as u64;
        let n2 = (self.n as u64) * (self.n as u64);
        let ledger_bad = count(trials, |t| t.queries != QueryCount { quantum: n2, classical: 0 });
        let ok = count(trials, |t| t.recovered);
        out.check("recovery rate", Check::Bound(BoundCheck::at_least(ok, total, bounds::theorem5(self.n), DEFAULT_Z)));
        out.check("query ledger", Check::exact(ledger_bad, total));
        out.measure("bound", bounds::theorem5(self.n));
    }
}

// T6: differential search and counting key recovery.

/// Constants of the query count `½c₁²n²q²ln(c₂n)`.
pub const T6_C1: f64 = 2.0;
pub const T6_C2: f64 = 2.0;
/// Plaintext pairs for the counting phase.
pub const T6_PAIRS: u64 = 256;

pub struct DifferentialExperiment {
    cipher: ToyCipher,
    g: OracleFunction,
    planted: Structure,
    q: u64,
}

impl DifferentialExperiment {
    pub fn new(n: u32, seed: u64) -> Result<Self> {
        let cipher = ToyCipher::generate(n, Preset::Weak, seed)?;
        let planted = cipher.planted_differentials()[0];
        let g = OracleFunction::new(cipher.g_function()?);
        Ok(DifferentialExperiment { cipher, g, planted, q: n as u64 })
    }

    fn p(&self) -> u64 {
        bounds::theorem6_queries(self.cipher.n(), self.q, T6_C1, T6_C2)
    }

    /// Fraction of keys for which `d` holds with probability above
    /// `1 - 1/q`.
    fn key_fraction(&self, d: Structure) -> f64 {
        let threshold = 1.0 - 1.0 / self.q as f64;
        let keys = 1u32 << self.cipher.key_bits();
        let good = (0..keys)
            .filter(|&k| self.cipher.differential_probability(k, d.input_diff, d.output_diff).to_f64() > threshold)
            .count();
        good as f64 / keys as f64
    }
}

pub struct DifferentialTrial {
    returned: Option<Structure>,
    key_fraction: f64,
    recovered: bool,
    queries_ok: bool,
}

impl Theorem for DifferentialExperiment {
    type Trial = DifferentialTrial;

    fn run_trial(&self, seed: u64) -> DifferentialTrial {
        let m = self.cipher.key_bits();
        let p = self.p();
        let r = attacks::algorithm5_find_differential(&self.g, m, p, seed).expect("valid");
        let queries_ok = match r.verdict {
            AttackVerdict::No => r.queries.quantum <= self.cipher.n() as u64 * p,
            _ => r.queries == QueryCount { quantum: self.cipher.n() as u64 * p, classical: 0 },
        };
        let returned = match r.verdict {
            AttackVerdict::Differential(d) => Some(d),
            _ => None,
        };
        let key_fraction = returned.map_or(0.0, |d| self.key_fraction(d));
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let k = rng.gen::<u32>() & mask(m);
        let s = rng.gen::<u32>() & mask(self.cipher.n());
        let target = self.cipher.instance(k, s);
        let recovered = returned.is_some_and(|d| {
            attacks::differential_key_recovery(&self.cipher, &target, d, T6_PAIRS, seed).expect("pairs positive").verdict
                == AttackVerdict::Subkey(s)
        });
        DifferentialTrial { returned, key_fraction, recovered, queries_ok }
    }

    fn summarize(&self, trials: &[DifferentialTrial], out: &mut Summary) {
        let total = trials.len() as u64;
        let n = self.cipher.n();
        let p = self.p();
        let epsilon = 1.0 / T6_C1;
        let bound = bounds::theorem6(p, epsilon, self.q, n).expect("epsilon in range");
        let planted = count(trials, |t| t.returned == Some(self.planted));
        let q_frac = 1.0 - 1.0 / self.q as f64;
        let keys_bad = count(trials, |t| t.returned.is_some() && t.key_fraction < q_frac);
        let found = count(trials, |t| t.returned.is_some());
        out.check("planted differential returned", Check::Bound(BoundCheck::at_least(planted, total, bound, DEFAULT_Z)));
        out.check("key coverage of returned differential", Check::exact(keys_bad, found));
        out.check(
            "counting recovers last-round key",
            Check::Bound(BoundCheck::at_least(count(trials, |t| t.recovered), total, 0.95, 0.0)),
        );
        out.check("query ledger", Check::exact(count(trials, |t| !t.queries_ok), total));
        out.measure("p", p as f64);
        out.measure("q", self.q as f64);
        out.measure("bound", bound);
        out.measure("planted input difference", self.planted.input_diff as f64);
        out.measure("truncated delta_prime", truncated_delta_prime(self.g.function(), self.cipher.key_bits()).to_f64());
        let min_fraction = trials.iter().filter(|t| t.returned.is_some()).map(|t| t.key_fraction).fold(1.0, f64::min);
        out.measure("min key fraction", min_fraction);
    }
}

// T7: small-probability differential.

pub struct SmallProbabilityExperiment {
    cipher: ToyCipher,
    g: OracleFunction,
    l: u64,
    q: u64,
}

impl SmallProbabilityExperiment {
    pub fn new(n: u32, seed: u64) -> Result<Self> {
        let cipher = ToyCipher::generate(n, Preset::Weak, seed)?;
        let g = OracleFunction::new(cipher.g_function()?);
        Ok(SmallProbabilityExperiment { cipher, g, l: n as u64, q: n as u64 })
    }
}

pub struct SmallProbabilityTrial {
    found: bool,
    right_ratio: f64,
    wrong_mean: f64,
    recovered: bool,
}

impl Theorem for SmallProbabilityExperiment {
    type Trial = SmallProbabilityTrial;

    fn run_trial(&self, seed: u64) -> SmallProbabilityTrial {
        let n = self.cipher.n();
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let k = rng.gen::<u32>() & mask(self.cipher.key_bits());
        let s = rng.gen::<u32>() & mask(n);
        let target = self.cipher.instance(k, s);
        let r = attacks::smallprob_attack(&self.g, &self.cipher, &target, self.q, self.l, None, seed).expect("valid");
        match r.evidence {
            Evidence::SmallProbability { table: Some(table), .. } => {
                let wrong: f64 = (0..1u32 << n).filter(|&w| w != s).map(|w| table.ratio(w)).sum();
                SmallProbabilityTrial {
                    found: true,
                    right_ratio: table.ratio(s),
                    wrong_mean: wrong / ((1u64 << n) - 1) as f64,
                    recovered: r.verdict == AttackVerdict::Subkey(s),
                }
            }
            _ => SmallProbabilityTrial { found: false, right_ratio: 1.0, wrong_mean: f64::NAN, recovered: false },
        }
    }

    fn summarize(&self, trials: &[SmallProbabilityTrial], out: &mut Summary) {
        let total = trials.len() as u64;
        let threshold = 1.0 / self.l as f64;
        let bad = count(trials, |t| t.right_ratio >= threshold);
        let bound = bounds::theorem7(self.cipher.n());
        out.check("right key ratio at least 1/l", Check::Bound(BoundCheck::at_most(bad, total, bound, DEFAULT_Z)));
        let wrong: Vec<f64> = trials.iter().filter(|t| t.found).map(|t| t.wrong_mean).collect();
        out.check("wrong key mean ratio", Check::Mean(MeanCheck::new(&wrong, 0.5, 0.05)));
        out.measure("bound", bound);
        out.measure("p", bounds::theorem7_queries(self.cipher.n(), self.l, self.q) as f64);
        out.measure("recovery rate", count(trials, |t| t.recovered) as f64 / total as f64);
        out.measure("found rate", count(trials, |t| t.found) as f64 / total as f64);
    }
}

// T8: impossible differentials.

/// Plaintext pairs for the sieve.
pub const T8_PAIRS: u64 = 64;

pub struct ImpossibleExperiment {
    cipher: ToyCipher,
    g: OracleFunction,
    p: u64,
    p0: f64,
}

impl ImpossibleExperiment {
    pub fn new(n: u32, seed: u64) -> Result<Self> {
        let cipher = ToyCipher::generate(n, Preset::Weak, seed)?;
        let g = cipher.g_function()?;
        let p0 = truncated_delta_prime(&g, cipher.key_bits()).to_f64();
        Ok(ImpossibleExperiment { p: lsfind::default_p(n), cipher, g: OracleFunction::new(g), p0 })
    }
}

pub struct ImpossibleTrial {
    certificate: Option<ImpossibleCertificate>,
    valid: bool,
    right_key_sieved: bool,
    wrong_alive: u64,
    queries: QueryCount,
}

impl Theorem for ImpossibleExperiment {
    type Trial = ImpossibleTrial;

    fn run_trial(&self, seed: u64) -> ImpossibleTrial {
        let n = self.cipher.n();
        let r = attacks::algorithm6_find_impossible(&self.g, self.cipher.key_bits(), self.p, seed).expect("valid");
        let certificate = match r.verdict {
            AttackVerdict::Impossible(c) => Some(c),
            _ => None,
        };
        let valid = certificate.is_some_and(|c| self.cipher.is_impossible(c.component, c.input_diff, c.value));
        let (mut right_key_sieved, mut wrong_alive) = (false, 0);
        if let (Some(c), true) = (certificate, valid) {
            let mut rng = rng::stream(seed, INSTANCE_STREAM);
            let k = rng.gen::<u32>() & mask(self.cipher.key_bits());
            let s = rng.gen::<u32>() & mask(n);
            let sieve = attacks::impossible_sieve(&self.cipher, &self.cipher.instance(k, s), c, T8_PAIRS, seed).expect("valid");
            if let Evidence::Sieve { table, .. } = sieve.evidence {
                right_key_sieved = !table.alive().any(|a| a == s);
                wrong_alive = table.alive().filter(|&a| a != s).count() as u64;
            }
        }
        ImpossibleTrial { certificate, valid, right_key_sieved, wrong_alive, queries: r.queries }
    }

    fn summarize(&self, trials: &[ImpossibleTrial], out: &mut Summary) {
        let n = self.cipher.n();
        let returned = count(trials, |t| t.certificate.is_some());
        let valid = count(trials, |t| t.valid);
        let over_budget = count(trials, |t| t.queries.quantum > n as u64 * self.p);
        out.check("certificate validity", Check::Bound(BoundCheck::at_least(valid, returned.max(1), 0.99, 0.0)));
        out.check(
            "certificate validity vs bound",
            Check::Bound(BoundCheck::at_least(valid, returned.max(1), bounds::theorem8(self.p0, self.p, n), DEFAULT_Z)),
        );
        out.check("planted key never sieved", Check::exact(count(trials, |t| t.right_key_sieved), valid));
        out.check("query budget", Check::exact(over_budget, trials.len() as u64));
        out.measure("p", self.p as f64);
        out.measure("truncated delta_prime", self.p0);
        out.measure("full delta_prime", self.g.function().delta_prime().to_f64());
        out.measure("bound", bounds::theorem8(self.p0, self.p, n));
        out.measure("returned rate", returned as f64 / trials.len() as f64);
        let wrong_keys = ((1u64 << n) - 1) * valid.max(1);
        out.measure("binomial survival model", libm::pow(0.5, T8_PAIRS as f64));
        out.measure("wrong key survival", trials.iter().map(|t| t.wrong_alive).sum::<u64>() as f64 / wrong_keys as f64);
    }
}

/// `p₀` measurements for a toy cipher: over plaintext-only differences
/// and over all differences.
pub fn measured_p0(cipher: &ToyCipher) -> Result<(Dyadic, Dyadic)> {
    let g = cipher.g_function()?;
    Ok((truncated_delta_prime(&g, cipher.key_bits()), g.delta_prime()))
}

/// Query ledger of a freshly built oracle session; convenience for
/// callers that only need counts.
pub fn fresh_ledger() -> QueryLedger {
    QueryLedger::new()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_ids_round_trip() {
        for id in TheoremId::ALL {
            assert_eq!(TheoremId::parse(id.name()), Some(id));
        }
        assert_eq!(TheoremId::parse("t9"), None);
    }

    #[test]
    fn too_few_trials() {
        let cfg = TheoremConfig { n: None, trials: 10, seed: 1 };
        assert!(matches!(verify(TheoremId::T5, &cfg, &Sequential), Err(Error::InsufficientTrials { .. })));
    }

    #[test]
    fn planted_functions_have_their_structure() {
        let mut rng = rng::stream(3, 0);
        let (f, a, c) = planted_boolean(6, &mut rng).unwrap();
        assert!(f.linear_structures(c).contains(&a));
        let (g, s) = planted_vector(5, &mut rng).unwrap();
        assert!(g.linear_structures().contains(&(s.input_diff, s.output_diff)));
        let bent = inner_product_bent(4).unwrap();
        assert_eq!(bent.differential_uniformity(), Dyadic::new(1, 1));
    }

    #[test]
    fn small_even_mansour_run() {
        let cfg = TheoremConfig { n: Some(6), trials: 40, seed: 5 };
        let out = verify(TheoremId::T5, &cfg, &Sequential).unwrap();
        assert!(out.pass(), "{out:?}");
    }
}
