//! Command-line surface.

use std::path::{Path, PathBuf};
use std::time::Instant;

use bvattack_core::attacks::{self, AttackReport, AttackVerdict};
use bvattack_core::boolfn::{bruteforce, BooleanFunction, VectorFunction};
use bvattack_core::bv::{OracleFunction, QueryCount};
use bvattack_core::ciphers::{self, Feistel3, Preset};
use bvattack_core::experiments::{self, TheoremConfig, TheoremId};
use bvattack_core::gf2::AffineSolutionSet;
use bvattack_core::lsfind::{self, Verdict};
use bvattack_core::rng::{self, INSTANCE_STREAM};
use bvattack_core::stats::bounds;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::formats::{self, CipherFile, CipherKind, FunctionFile};
use crate::report::{Report, Timing};
use crate::runner::{self, Parallel};

/// Exit code for a completed run with a negative verdict.
pub const EXIT_NO: i32 = 1;
/// Exit code for usage, file and parameter errors.
pub const EXIT_USAGE: i32 = 2;

/// Sets with at most this many members are listed in reports.
const LIST_CAP: u64 = 256;
/// Widths up to which `spectrum` uses the brute-force structure sweep.
const BRUTE_FORCE_MAX: u32 = 12;
const DEFAULT_TRIALS: u64 = 100;
const DEFAULT_SIEVE_PAIRS: u64 = 64;

#[derive(Debug, Parser)]
#[command(name = "bvattack", version, about = "Bernstein-Vazirani linear-structure attacks on toy ciphers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for trial farms; 0 picks the core count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Add wall-clock timing to the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Feistel,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Weak,
    Strong,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::Weak => Preset::Weak,
            PresetArg::Strong => Preset::Strong,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walsh spectrum, uniformities and linear structures of a function file.
    Spectrum { file: PathBuf },
    /// Linear-structure search on a function file.
    Lsfind {
        file: PathBuf,
        /// Quantum samples per component.
        #[arg(long)]
        p: Option<u64>,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: u64,
    },
    /// Distinguish a three-round Feistel cipher from a random permutation.
    DistinguishFeistel {
        /// Block width in bits.
        #[arg(long)]
        n: u32,
        /// Cipher to attack.
        #[arg(long, value_enum)]
        target: Target,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: u64,
        /// Number of independent trials.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Recover the first Even-Mansour key.
    AttackEm {
        file: PathBuf,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: u64,
        /// Quantum samples per component.
        #[arg(long)]
        p: Option<u64>,
    },
    /// Differential search followed by counting key recovery.
    AttackDiff {
        file: PathBuf,
        /// Differential quality parameter; defaults to n.
        #[arg(long)]
        q: Option<u64>,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: u64,
        /// Quantum samples per component.
        #[arg(long)]
        p: Option<u64>,
        /// Classical plaintext pairs for the key-recovery phase.
        #[arg(long)]
        pairs: Option<u64>,
    },
    /// Small-probability differential attack.
    AttackSmallprob {
        file: PathBuf,
        /// Differential quality parameter; defaults to n.
        #[arg(long)]
        q: Option<u64>,
        /// Probability threshold parameter; defaults to n.
        #[arg(long)]
        l: Option<u64>,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: u64,
        /// Quantum samples per component.
        #[arg(long)]
        p: Option<u64>,
    },
    /// Impossible-differential search followed by a key sieve.
    AttackImpossible {
        file: PathBuf,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: u64,
        /// Classical plaintext pairs for the key-recovery phase.
        #[arg(long)]
        pairs: Option<u64>,
        /// Quantum samples per component.
        #[arg(long)]
        p: Option<u64>,
    },
    /// Monte Carlo checks of the success-probability bounds.
    VerifyTheorems {
        /// `all` or a comma-separated list such as `T1,T7`.
        #[arg(long)]
        which: Option<String>,
        /// Block width in bits; each check has its own default.
        #[arg(long)]
        n: Option<u32>,
        /// Number of independent trials.
        #[arg(long)]
        trials: Option<u64>,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: Option<u64>,
        /// JSON file with `which`, `n`, `trials` and `seed` defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a cipher file, or a challenge file without keys.
    GenCipher {
        /// Cipher family.
        #[arg(long, value_enum)]
        kind: CipherKind,
        /// Block width in bits.
        #[arg(long)]
        n: u32,
        /// Round S-box preset for toy ciphers.
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        /// Seed for every random choice in the run.
        #[arg(long)]
        seed: u64,
        /// Omit keys and secret tables.
        #[arg(long)]
        challenge: bool,
    },
}

/// Text to emit and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub exit_code: i32,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn sha256(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_invocation(path: &Path, text: &str) -> Map<String, Value> {
    let mut inv = Map::new();
    inv.insert("file".into(), json!(path.display().to_string()));
    inv.insert("file_sha256".into(), json!(sha256(text)));
    inv
}

fn set_json(set: &AffineSolutionSet) -> Value {
    let members = if set.len() <= LIST_CAP { json!(set.enumerate_all(LIST_CAP).unwrap_or_default()) } else { Value::Null };
    json!({
        "width": set.width(),
        "size": set.len(),
        "offset": set.offset(),
        "basis": set.basis(),
        "members": members,
    })
}

fn attack_json(r: &AttackReport) -> Value {
    json!({
        "kind": r.kind,
        "verdict": r.verdict,
        "parameters": r.parameters,
        "evidence": r.evidence,
        "queries": r.queries,
    })
}

fn verdict_exit(positive: bool) -> i32 {
    if positive {
        0
    } else {
        EXIT_NO
    }
}

fn add(a: QueryCount, b: QueryCount) -> QueryCount {
    QueryCount { quantum: a.quantum + b.quantum, classical: a.classical + b.classical }
}

fn boolean_spectrum(f: &BooleanFunction) -> Value {
    let spectrum = f.walsh_spectrum();
    let (zero, one, method) = if f.n() <= BRUTE_FORCE_MAX {
        (bruteforce::linear_structures(f, false), bruteforce::linear_structures(f, true), "brute-force")
    } else {
        (f.linear_structures(false), f.linear_structures(true), "autocorrelation")
    };
    json!({
        "n": f.n(),
        "walsh_scale": 1u64 << f.n(),
        "walsh": spectrum.scaled_values(),
        "support_size": spectrum.support().len(),
        "delta": f.differential_uniformity().to_string(),
        "delta_prime": f.delta_prime().to_string(),
        "linear_structures": { "zero": zero, "one": one },
        "structure_method": method,
    })
}

fn vector_spectrum(f: &VectorFunction) -> Value {
    let components: Vec<Value> = f
        .components()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut v = boolean_spectrum(c);
            v.as_object_mut().expect("object").shift_insert(0, "component".into(), json!(j));
            v
        })
        .collect();
    let structures: Vec<[u32; 2]> =
        f.linear_structures().into_iter().filter(|&(a, _)| a != 0).map(|(a, alpha)| [a, alpha]).collect();
    json!({
        "m": f.input_bits(),
        "n": f.output_bits(),
        "delta": f.differential_uniformity().to_string(),
        "delta_prime": f.delta_prime().to_string(),
        "linear_structures": structures,
        "components": components,
    })
}

fn spectrum(file: &Path) -> Result<(Report, i32), CliError> {
    let text = read(file)?;
    let inv = file_invocation(file, &text);
    let result = match formats::parse_function(&text)? {
        FunctionFile::Boolean(f) => {
            let mut v = boolean_spectrum(&f);
            v.as_object_mut().expect("object").shift_insert(0, "type".into(), json!("boolfn"));
            v
        }
        FunctionFile::Vector(f) => {
            let mut v = vector_spectrum(&f);
            v.as_object_mut().expect("object").shift_insert(0, "type".into(), json!("vecfn"));
            v
        }
    };
    Ok((Report::new("spectrum", inv, result, None), 0))
}

fn lsfind_cmd(file: &Path, p: Option<u64>, seed: u64) -> Result<(Report, i32), CliError> {
    let text = read(file)?;
    let mut inv = file_invocation(file, &text);
    let parsed = formats::parse_function(&text)?;
    let n = match &parsed {
        FunctionFile::Boolean(f) => f.n(),
        FunctionFile::Vector(f) => f.output_bits(),
    };
    let p = p.unwrap_or(lsfind::default_p(n));
    inv.insert("p".into(), json!(p));
    inv.insert("seed".into(), json!(seed));
    let (result, found, quantum) = match parsed {
        FunctionFile::Boolean(f) => {
            let r = lsfind::algorithm1(&f, p, seed)?;
            let v = json!({
                "type": "boolfn",
                "verdict": r.verdict,
                "a0": set_json(&r.a0),
                "a1": set_json(&r.a1),
                "samples": r.samples,
            });
            (v, r.verdict == Verdict::Found, r.queries_used)
        }
        FunctionFile::Vector(f) => {
            let r = lsfind::algorithm2(&f, p, seed)?;
            let components: Vec<Value> = r
                .per_component
                .iter()
                .enumerate()
                .map(|(j, c)| json!({"component": j, "pivot": c.pivot, "constancy": set_json(&c.constancy)}))
                .collect();
            let v = json!({
                "type": "vecfn",
                "verdict": r.verdict,
                "structure": r.structure,
                "intersection": r.intersection.as_ref().map(set_json),
                "components": components,
            });
            (v, r.verdict == Verdict::Found, r.queries_used)
        }
    };
    let queries = QueryCount { quantum, classical: 0 };
    Ok((Report::new("lsfind", inv, result, Some(queries)), verdict_exit(found)))
}

fn feistel_trial(n: u32, target: Target, seed: u64) -> Result<AttackReport, CliError> {
    Ok(match target {
        Target::Feistel => attacks::algorithm3_distinguish(&Feistel3::random(n, seed)?, seed)?,
        Target::Random => {
            let mut r = rng::stream(seed, INSTANCE_STREAM ^ 1);
            attacks::algorithm3_distinguish(&ciphers::random_permutation(2 * n, &mut r)?, seed)?
        }
    })
}

fn distinguish(
    n: u32,
    target: Target,
    seed: u64,
    trials: Option<u64>,
    runner: &Parallel,
) -> Result<(Report, i32), CliError> {
    if !(1..=11).contains(&n) {
        return Err(CliError::Usage("--n must lie in 1..=11".into()));
    }
    let mut inv = Map::new();
    inv.insert("n".into(), json!(n));
    inv.insert("target".into(), json!(match target {
        Target::Feistel => "feistel",
        Target::Random => "random",
    }));
    inv.insert("p".into(), json!(n + 1));
    inv.insert("seed".into(), json!(seed));
    let Some(trials) = trials else {
        let r = feistel_trial(n, target, seed)?;
        let code = verdict_exit(r.verdict == AttackVerdict::Yes);
        return Ok((Report::new("distinguish-feistel", inv, attack_json(&r), Some(r.queries)), code));
    };
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    inv.insert("trials".into(), json!(trials));
    let seeds: Vec<u64> = (0..trials).map(|t| rng::trial_seed(seed, t)).collect();
    let runs = runner.map(&seeds, |&s| feistel_trial(n, target, s));
    let runs: Vec<AttackReport> = runs.into_iter().collect::<Result<_, _>>()?;
    let yes = runs.iter().filter(|r| r.verdict == AttackVerdict::Yes).count() as u64;
    let queries = runs.iter().fold(QueryCount::default(), |acc, r| add(acc, r.queries));
    let result = json!({
        "trials": trials,
        "yes": yes,
        "yes_rate": yes as f64 / trials as f64,
        "feistel_bound": bounds::theorem4(n),
    });
    Ok((Report::new("distinguish-feistel", inv, result, Some(queries)), 0))
}

fn load_cipher(file: &Path) -> Result<(CipherFile, Map<String, Value>), CliError> {
    let text = read(file)?;
    let inv = file_invocation(file, &text);
    Ok((CipherFile::parse(&text)?, inv))
}

fn attack_em(file: &Path, seed: u64, p: Option<u64>) -> Result<(Report, i32), CliError> {
    let (cf, mut inv) = load_cipher(file)?;
    let (public, codebook) = cf.even_mansour()?;
    let p = p.unwrap_or(cf.n as u64);
    inv.insert("p".into(), json!(p));
    inv.insert("seed".into(), json!(seed));
    let r = attacks::algorithm4_recover_k1(&codebook, &public, p, seed)?;
    let code = verdict_exit(attacks::is_positive(&r.verdict));
    Ok((Report::new("attack-em", inv, attack_json(&r), Some(r.queries)), code))
}

fn attack_diff(file: &Path, q: Option<u64>, seed: u64, p: Option<u64>, pairs: Option<u64>) -> Result<(Report, i32), CliError> {
    let (cf, mut inv) = load_cipher(file)?;
    let (cipher, codebook) = cf.toy()?;
    let n = cipher.n();
    let q = q.unwrap_or(n as u64);
    let p = p.unwrap_or(bounds::theorem6_queries(n, q, experiments::T6_C1, experiments::T6_C2));
    let pairs = pairs.unwrap_or(16 << n);
    for (k, v) in [("q", q), ("p", p), ("pairs", pairs), ("seed", seed)] {
        inv.insert(k.into(), json!(v));
    }
    let g = OracleFunction::new(cipher.g_function()?);
    let search = attacks::algorithm5_find_differential(&g, cipher.key_bits(), p, seed)?;
    let mut result = Map::new();
    result.insert("differential".into(), attack_json(&search));
    let mut queries = search.queries;
    let mut positive = false;
    if let AttackVerdict::Differential(d) = search.verdict {
        let rec = attacks::differential_key_recovery(&cipher, &codebook, d, pairs, rng::mix(seed))?;
        queries = add(queries, rec.queries);
        positive = true;
        result.insert("key_recovery".into(), attack_json(&rec));
    }
    Ok((Report::new("attack-diff", inv, Value::Object(result), Some(queries)), verdict_exit(positive)))
}

fn attack_smallprob(
    file: &Path,
    q: Option<u64>,
    l: Option<u64>,
    seed: u64,
    p: Option<u64>,
) -> Result<(Report, i32), CliError> {
    let (cf, mut inv) = load_cipher(file)?;
    let (cipher, codebook) = cf.toy()?;
    let n = cipher.n();
    let q = q.unwrap_or(n as u64);
    let l = l.unwrap_or(n as u64);
    let p = p.unwrap_or(bounds::theorem7_queries(n, l, q));
    for (k, v) in [("q", q), ("l", l), ("p", p), ("seed", seed)] {
        inv.insert(k.into(), json!(v));
    }
    let g = OracleFunction::new(cipher.g_function()?);
    let r = attacks::smallprob_attack(&g, &cipher, &codebook, q, l, Some(p), seed)?;
    let code = verdict_exit(attacks::is_positive(&r.verdict));
    Ok((Report::new("attack-smallprob", inv, attack_json(&r), Some(r.queries)), code))
}

fn attack_impossible(file: &Path, seed: u64, pairs: Option<u64>, p: Option<u64>) -> Result<(Report, i32), CliError> {
    let (cf, mut inv) = load_cipher(file)?;
    let (cipher, codebook) = cf.toy()?;
    let p = p.unwrap_or(lsfind::default_p(cipher.n()));
    let pairs = pairs.unwrap_or(DEFAULT_SIEVE_PAIRS);
    for (k, v) in [("p", p), ("pairs", pairs), ("seed", seed)] {
        inv.insert(k.into(), json!(v));
    }
    let g = OracleFunction::new(cipher.g_function()?);
    let search = attacks::algorithm6_find_impossible(&g, cipher.key_bits(), p, seed)?;
    let mut result = Map::new();
    result.insert("search".into(), attack_json(&search));
    let mut queries = search.queries;
    let mut positive = false;
    if let AttackVerdict::Impossible(cert) = search.verdict {
        let sieve = attacks::impossible_sieve(&cipher, &codebook, cert, pairs, rng::mix(seed))?;
        queries = add(queries, sieve.queries);
        positive = attacks::is_positive(&sieve.verdict);
        if let attacks::Evidence::Sieve { table, .. } = &sieve.evidence {
            result.insert("alive".into(), json!(table.alive().collect::<Vec<u32>>()));
        }
        result.insert("sieve".into(), attack_json(&sieve));
    }
    Ok((Report::new("attack-impossible", inv, Value::Object(result), Some(queries)), verdict_exit(positive)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    which: Option<String>,
    n: Option<u32>,
    trials: Option<u64>,
    seed: Option<u64>,
}

fn parse_which(which: &str) -> Result<Vec<TheoremId>, CliError> {
    if which.eq_ignore_ascii_case("all") {
        return Ok(TheoremId::ALL.to_vec());
    }
    which
        .split(',')
        .map(|w| TheoremId::parse(w.trim()).ok_or_else(|| CliError::Usage(format!("unknown theorem `{w}`"))))
        .collect()
}

fn verify_theorems(
    which: Option<String>,
    n: Option<u32>,
    trials: Option<u64>,
    seed: Option<u64>,
    config: Option<&Path>,
    runner: &Parallel,
) -> Result<(Report, i32), CliError> {
    let mut inv = Map::new();
    let cfg: VerifyConfig = match config {
        Some(path) => {
            let text = read(path)?;
            inv = file_invocation(path, &text);
            serde_json::from_str(&text)?
        }
        None => VerifyConfig::default(),
    };
    let which = which.or(cfg.which).unwrap_or_else(|| "all".into());
    let n = n.or(cfg.n);
    let trials = trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = seed.or(cfg.seed).ok_or_else(|| CliError::Usage("--seed is required".into()))?;
    let ids = parse_which(&which)?;
    inv.insert("which".into(), json!(ids.iter().map(|t| t.name()).collect::<Vec<_>>()));
    inv.insert("n".into(), json!(n));
    inv.insert("trials".into(), json!(trials));
    inv.insert("seed".into(), json!(seed));
    let mut outcomes = Vec::new();
    for id in ids {
        outcomes.push(experiments::verify(id, &TheoremConfig { n, trials, seed }, runner)?);
    }
    let pass = outcomes.iter().all(|o| o.pass());
    let result = json!({ "pass": pass, "outcomes": outcomes });
    Ok((Report::new("verify-theorems", inv, result, None), verdict_exit(pass)))
}

fn gen_cipher(kind: CipherKind, n: u32, preset: Option<PresetArg>, seed: u64, challenge: bool) -> Result<String, CliError> {
    if preset.is_some() && kind != CipherKind::Toy {
        return Err(CliError::Usage("--preset only applies to --kind toy".into()));
    }
    let file = CipherFile::generate(kind, n, preset.map(Preset::from), seed)?;
    Ok(if challenge { file.challenge() } else { file }.write())
}

/// Run a parsed command.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let start = Instant::now();
    let runner = Parallel::new(runner::resolve_threads(cli.threads)?)?;
    let (mut report, exit_code) = match &cli.command {
        Command::Spectrum { file } => spectrum(file)?,
        Command::Lsfind { file, p, seed } => lsfind_cmd(file, *p, *seed)?,
        Command::DistinguishFeistel { n, target, seed, trials } => distinguish(*n, *target, *seed, *trials, &runner)?,
        Command::AttackEm { file, seed, p } => attack_em(file, *seed, *p)?,
        Command::AttackDiff { file, q, seed, p, pairs } => attack_diff(file, *q, *seed, *p, *pairs)?,
        Command::AttackSmallprob { file, q, l, seed, p } => attack_smallprob(file, *q, *l, *seed, *p)?,
        Command::AttackImpossible { file, seed, pairs, p } => attack_impossible(file, *seed, *pairs, *p)?,
        Command::VerifyTheorems { which, n, trials, seed, config } => {
            verify_theorems(which.clone(), *n, *trials, *seed, config.as_deref(), &runner)?
        }
        Command::GenCipher { kind, n, preset, seed, challenge } => {
            return Ok(Output { text: gen_cipher(*kind, *n, *preset, *seed, *challenge)?, exit_code: 0 });
        }
    };
    if cli.timing {
        report.timing = Some(Timing { elapsed_ms: start.elapsed().as_secs_f64() * 1e3, threads: runner.threads() });
    }
    Ok(Output { text: report.render(), exit_code })
}

/// Parse arguments, run, and emit. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let output = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(source) = std::fs::write(path, &output.text) {
                eprintln!("error: {}", CliError::Io { path: path.display().to_string(), source });
                return EXIT_USAGE;
            }
        }
        None => print!("{}", output.text),
    }
    output.exit_code
}
