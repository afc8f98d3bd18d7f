//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use bvattack::chisq;
use bvattack::cli::{self, Cli};
use bvattack::runner::Parallel;
use bvattack_core::boolfn::{bruteforce, BooleanFunction};
use bvattack_core::bv::{BvDistribution, BvSampler, QueryLedger};
use bvattack_core::experiments::{self, Check, TheoremConfig, TheoremId, TheoremOutcome};
use bvattack_core::rng;
use bvattack_core::{dot, Dyadic};
use clap::Parser;
use rand::Rng;

const SEED: u64 = 20_240_601;

/// Significance level of the sampling test.
const ALPHA: f64 = 1e-3;

struct Line {
    pass: bool,
    detail: String,
}

fn run(id: u32, title: &str, limit: Duration, f: impl FnOnce() -> Line) -> bool {
    let start = Instant::now();
    let line = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = line.pass && in_time;
    println!(
        "criterion {id:>2} {:<4} {title}: {} [{:.1}s of {}s]",
        if pass { "PASS" } else { "FAIL" },
        line.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn random_function(n: u32, r: &mut impl Rng) -> BooleanFunction {
    BooleanFunction::from_fn(n, |_| r.gen()).unwrap()
}

/// `Σ_x (-1)^{f(x) ⊕ ω·x}` for every `ω`, by direct summation.
fn naive_walsh(f: &BooleanFunction) -> Vec<i64> {
    let size = 1u32 << f.n();
    (0..size)
        .map(|w| (0..size).map(|x| if f.eval(x) ^ dot(w, x) { -1 } else { 1 }).sum())
        .collect()
}

fn sampling() -> Line {
    let mut r = rng::stream(SEED, 1);
    let draws = 100_000u64;
    let (mut outside, mut rejected, mut min_p) = (0u64, 0u64, 1.0f64);
    for i in 0..200u64 {
        let n = r.gen_range(1..=6);
        let f = random_function(n, &mut r);
        let walsh = naive_walsh(&f);
        let dist = BvDistribution::from_function(&f);
        let ledger = QueryLedger::new();
        let mut sampler = BvSampler::new(&dist, &ledger, rng::trial_seed(SEED, i), 0);
        let mut counts = vec![0u64; 1 << n];
        for _ in 0..draws {
            counts[sampler.sample() as usize] += 1;
        }
        outside += counts.iter().zip(&walsh).filter(|(&c, &w)| c > 0 && w == 0).map(|(c, _)| c).sum::<u64>();
        let scale = (1u64 << (2 * n)) as f64;
        let probs: Vec<f64> = walsh.iter().map(|&w| (w * w) as f64 / scale).collect();
        let fit = chisq::goodness_of_fit(&counts, &probs);
        min_p = min_p.min(fit.p_value);
        rejected += (fit.p_value < ALPHA) as u64;
        assert_eq!(ledger.snapshot().quantum, draws);
    }
    Line {
        pass: outside == 0 && rejected == 0,
        detail: format!("200 functions, 1e5 draws each: {outside} draws outside the support, {rejected} rejected at alpha=1e-3, min p={min_p:.4}"),
    }
}

fn lemmas() -> Line {
    let mut r = rng::stream(SEED, 2);
    let mut identity_failures = 0;
    for _ in 0..1000 {
        let n = r.gen_range(1..=10);
        let f = random_function(n, &mut r);
        let a = r.gen_range(0..1u32 << n);
        let i: bool = r.gen();
        let walsh = naive_walsh(&f);
        let v = (0..1u32 << n).filter(|&x| f.eval(x) ^ f.eval(x ^ a) == i).count() as i128;
        let spectrum = f.walsh_spectrum();
        let lhs = (0..1u32 << n).filter(|&w| dot(w, a) == i).fold(Dyadic::ZERO, |acc, w| acc + spectrum.probability(w));
        let naive_lhs: i128 = (0..1u32 << n).filter(|&w| dot(w, a) == i).map(|w| (walsh[w as usize] as i128).pow(2)).sum();
        if lhs != Dyadic::new(v, n) || naive_lhs != v << n {
            identity_failures += 1;
        }
    }
    let mut structure_failures = 0;
    let mut checked = 0;
    let mut r = rng::stream(SEED, 3);
    for k in 0..300 {
        let n = 1 + k % 6;
        let f = if k % 2 == 0 {
            random_function(n, &mut r)
        } else {
            experiments::planted_boolean(n.max(2), &mut r).unwrap().0
        };
        for i in [false, true] {
            let spectral = f.spectral_linear_structures(i).enumerate_all(1 << 6).unwrap();
            let mut spectral = spectral;
            spectral.sort_unstable();
            if spectral != bruteforce::linear_structures(&f, i) {
                structure_failures += 1;
            }
            checked += 1;
        }
    }
    Line {
        pass: identity_failures == 0 && structure_failures == 0,
        detail: format!(
            "{identity_failures}/1000 identity mismatches; {structure_failures}/{checked} structure-set mismatches"
        ),
    }
}

fn check_summary(c: &Check) -> String {
    match c {
        Check::Bound(b) => {
            let at_least = matches!(b.direction, bvattack_core::stats::Direction::AtLeast);
            let slack = if b.half_width > 0.0 {
                format!(" ({}{:.4} slack)", if at_least { "-" } else { "+" }, b.half_width)
            } else {
                String::new()
            };
            format!("{:.4}{}{:.4}{slack}", b.rate, if at_least { ">=" } else { "<=" }, b.bound)
        }
        Check::Mean(m) => format!("mean {:.4} vs {:.2}±{:.2}", m.mean, m.target, m.tolerance),
        Check::Exact { violations, examined, .. } => format!("{violations}/{examined} violations"),
    }
}

fn theorem(runner: &Parallel, id: TheoremId, n: u32, trials: u64, names: &[&str]) -> (TheoremOutcome, Line) {
    let outcome = experiments::verify(id, &TheoremConfig { n: Some(n), trials, seed: SEED }, runner).unwrap();
    let mut parts: Vec<String> = names
        .iter()
        .map(|name| {
            let c = outcome.check(name).unwrap_or_else(|| panic!("{name}"));
            format!("{name} {} {}", check_summary(c), if c.pass() { "ok" } else { "FAILED" })
        })
        .collect();
    if outcome.retried_from.is_some() {
        parts.push("after one retry".into());
    }
    let pass = names.iter().all(|n| outcome.check(n).is_some_and(Check::pass));
    let line = Line { pass, detail: format!("{trials} trials: {}", parts.join("; ")) };
    (outcome, line)
}

fn closeness(runner: &Parallel) -> Line {
    let outcome = experiments::verify(TheoremId::T1, &TheoremConfig { n: Some(8), trials: 200, seed: SEED }, runner).unwrap();
    let failed = outcome.checks.iter().filter(|c| !c.check.pass()).count();
    let rates = [(50, 0.25), (200, 0.1)]
        .iter()
        .map(|(p, e)| {
            format!(
                "p={p} eps={e}: min rate {:.4} vs bound {:.4}",
                outcome.measurement(&format!("min rate p={p} eps={e}")).unwrap(),
                outcome.measurement(&format!("bound p={p} eps={e}")).unwrap()
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Line {
        pass: failed == 0,
        detail: format!("21 functions x 2 settings, {failed} checks failed; {rates}"),
    }
}

fn negative(runner: &Parallel) -> Line {
    let (outcome, mut line) = theorem(
        runner,
        TheoremId::T2,
        6,
        200,
        &["bent no-rate", "random permutation no-rate", "strong preset differential no-rate", "strong preset impossible no-rate"],
    );
    line.detail.push_str(&format!(
        "; measured delta' bent={} permutation<={} strong(truncated)={}",
        outcome.measurement("bent delta_prime").unwrap(),
        outcome.measurement("random permutation max delta_prime").unwrap(),
        outcome.measurement("strong preset truncated delta_prime").unwrap(),
    ));
    line
}

fn determinism() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let em = dir.join("em.txt");
    let toy = dir.join("toy.txt");
    let f = dir.join("f.txt");
    std::fs::write(&f, "vecfn m=3 n=2\n01230123\n").unwrap();
    let em_s = em.to_str().unwrap();
    let toy_s = toy.to_str().unwrap();
    let f_s = f.to_str().unwrap();
    let gen_em = ["bvattack", "gen-cipher", "--kind", "even-mansour", "--n", "8", "--seed", "7", "--challenge"];
    let gen_toy = ["bvattack", "gen-cipher", "--kind", "toy", "--n", "4", "--preset", "weak", "--seed", "7", "--challenge"];
    let text = |args: &[&str]| cli::execute(&Cli::parse_from(args)).unwrap().text;
    std::fs::write(&em, text(&gen_em)).unwrap();
    std::fs::write(&toy, text(&gen_toy)).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        gen_em.to_vec(),
        gen_toy.to_vec(),
        vec!["bvattack", "spectrum", f_s],
        vec!["bvattack", "lsfind", f_s, "--seed", "3"],
        vec!["bvattack", "distinguish-feistel", "--n", "5", "--target", "feistel", "--seed", "3"],
        vec!["bvattack", "distinguish-feistel", "--n", "5", "--target", "random", "--seed", "3", "--trials", "64"],
        vec!["bvattack", "attack-em", em_s, "--seed", "3"],
        vec!["bvattack", "attack-diff", toy_s, "--seed", "3"],
        vec!["bvattack", "attack-smallprob", toy_s, "--seed", "3"],
        vec!["bvattack", "attack-impossible", toy_s, "--seed", "3"],
        vec!["bvattack", "verify-theorems", "--which", "T4,T5", "--n", "4", "--trials", "40", "--seed", "3"],
    ];
    let mut differing = Vec::new();
    for c in &commands {
        let mut single = c.clone();
        single.extend(["--threads", "1"]);
        let mut many = c.clone();
        many.extend(["--threads", "4"]);
        let outs = [text(c), text(c), text(&single), text(&many)];
        if outs.iter().any(|o| o != &outs[0]) {
            differing.push(c[1]);
        }
    }
    Line {
        pass: differing.is_empty(),
        detail: format!("{} invocations x 4 runs (1 and 4 threads), differing: {differing:?}", commands.len()),
    }
}

fn main() {
    let runner = Parallel::new(0).unwrap();
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let mut all = true;
    all &= run(1, "exact-law BV sampling", minutes(1), sampling);
    all &= run(2, "spectral identities and structure sets", minutes(1), lemmas);
    all &= run(3, "closeness of returned structures", minutes(2), || closeness(&runner));
    all &= run(4, "Feistel distinguisher", minutes(5), || {
        theorem(&runner, TheoremId::T4, 6, 200, &["feistel yes-rate", "random yes-rate", "query ledger"]).1
    });
    all &= run(5, "Even-Mansour key recovery", minutes(5), || {
        theorem(&runner, TheoremId::T5, 8, 500, &["recovery rate", "query ledger"]).1
    });
    all &= run(6, "differential search and counting", minutes(5), || {
        theorem(
            &runner,
            TheoremId::T6,
            4,
            100,
            &["planted differential returned", "key coverage of returned differential", "counting recovers last-round key"],
        )
        .1
    });
    all &= run(7, "small-probability differential", minutes(10), || {
        theorem(&runner, TheoremId::T7, 6, 100, &["right key ratio at least 1/l", "wrong key mean ratio"]).1
    });
    all &= run(8, "impossible differentials", minutes(5), || {
        theorem(&runner, TheoremId::T8, 4, 1000, &["certificate validity", "planted key never sieved"]).1
    });
    all &= run(9, "negative paths", minutes(5), || negative(&runner));
    all &= run(10, "determinism", minutes(5), determinism);
    println!("acceptance: {}", if all { "all criteria pass" } else { "FAILURES" });
    if !all {
        std::process::exit(1);
    }
}
