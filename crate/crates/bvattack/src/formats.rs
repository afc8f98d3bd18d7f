//! Text formats for truth tables and cipher definitions.
//!
//! A function file is a header line followed by the table in hex, one
//! fixed-width entry per index, wrapped at 64 characters:
//!
//! ```text
//! boolfn n=3
//! 00011110
//! ```
//!
//! A cipher file starts with a `bvcipher` header, optional `key` lines and
//! named `table` blocks, each holding a `vecfn` function. Challenge files
//! carry only the public tables and the codebook.

use std::fmt::Write as _;

use bvattack_core::boolfn::{BooleanFunction, VectorFunction};
use bvattack_core::ciphers::{self, EvenMansour, Feistel3, Preset, ToyCipher};
use bvattack_core::rng::{self, INSTANCE_STREAM};
use bvattack_core::{mask, MAX_BITS};
use rand::Rng;

use crate::error::CliError;

const LINE_WIDTH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionFile {
    Boolean(BooleanFunction),
    Vector(VectorFunction),
}

impl FunctionFile {
    pub fn input_bits(&self) -> u32 {
        match self {
            FunctionFile::Boolean(f) => f.n(),
            FunctionFile::Vector(f) => f.input_bits(),
        }
    }
}

fn digits(bits: u32) -> usize {
    bits.div_ceil(4).max(1) as usize
}

fn format_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Format { line, message: message.into() }
}

/// Header fields `key=value`, in order.
fn fields(header: &str) -> Vec<(&str, &str)> {
    header.split_whitespace().skip(1).filter_map(|kv| kv.split_once('=')).collect()
}

fn field<'a>(fields: &[(&str, &'a str)], key: &str, line: usize) -> Result<&'a str, CliError> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| format_err(line, format!("missing field `{key}`")))
}

fn parse_u32(text: &str, line: usize) -> Result<u32, CliError> {
    let parsed = match text.strip_prefix("0x") {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => text.parse(),
    };
    parsed.map_err(|_| format_err(line, format!("`{text}` is not a number")))
}

fn parse_u64(text: &str, line: usize) -> Result<u64, CliError> {
    text.parse().map_err(|_| format_err(line, format!("`{text}` is not a number")))
}

fn width(text: &str, line: usize) -> Result<u32, CliError> {
    let bits = parse_u32(text, line)?;
    if bits == 0 || bits > MAX_BITS {
        return Err(format_err(line, format!("width {bits} outside 1..={MAX_BITS}")));
    }
    Ok(bits)
}

fn write_table(out: &mut String, entries: impl Iterator<Item = u32>, bits: u32) {
    let w = digits(bits);
    let mut line = 0;
    for e in entries {
        if line + w > LINE_WIDTH {
            out.push('\n');
            line = 0;
        }
        let _ = write!(out, "{e:0w$x}");
        line += w;
    }
    out.push('\n');
}

pub fn write_function(f: &FunctionFile) -> String {
    let mut out = String::new();
    match f {
        FunctionFile::Boolean(f) => {
            let _ = writeln!(out, "boolfn n={}", f.n());
            write_table(&mut out, f.table().into_iter().map(u32::from), 1);
        }
        FunctionFile::Vector(f) => write_vector(&mut out, f),
    }
    out
}

fn write_vector(out: &mut String, f: &VectorFunction) {
    let _ = writeln!(out, "vecfn m={} n={}", f.input_bits(), f.output_bits());
    write_table(out, f.table().iter().copied(), f.output_bits());
}

/// Content lines with comments and blank lines removed, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Read `count` entries of `bits` bits from the front of `lines`.
fn read_table<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    count: usize,
    bits: u32,
    header_line: usize,
) -> Result<Vec<u32>, CliError> {
    let w = digits(bits);
    let mut hex = String::with_capacity(count * w);
    let mut last_line = header_line;
    while hex.len() < count * w {
        let Some((no, line)) = lines.next() else {
            return Err(format_err(last_line, format!("table ends after {} of {count} entries", hex.len() / w)));
        };
        if !line.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(format_err(no, "expected hex digits"));
        }
        hex.push_str(line);
        last_line = no;
    }
    if hex.len() != count * w {
        return Err(format_err(last_line, "table has trailing digits"));
    }
    hex.as_bytes()
        .chunks(w)
        .enumerate()
        .map(|(i, chunk)| {
            let v = u32::from_str_radix(std::str::from_utf8(chunk).expect("ascii"), 16).expect("hex checked");
            if v > mask(bits) {
                Err(format_err(last_line, format!("entry {i} = {v:#x} does not fit in {bits} bits")))
            } else {
                Ok(v)
            }
        })
        .collect()
}

fn read_vector<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
) -> Result<VectorFunction, CliError> {
    let (no, header) = lines.next().ok_or_else(|| format_err(0, "missing vecfn header"))?;
    if header.split_whitespace().next() != Some("vecfn") {
        return Err(format_err(no, "expected `vecfn m=<m> n=<n>`"));
    }
    let f = fields(header);
    let m = width(field(&f, "m", no)?, no)?;
    let n = width(field(&f, "n", no)?, no)?;
    let table = read_table(lines, 1usize << m, n, no)?;
    VectorFunction::new(m, n, table).map_err(|e| format_err(no, e.to_string()))
}

pub fn parse_function(text: &str) -> Result<FunctionFile, CliError> {
    let mut lines = content_lines(text).peekable();
    let &(no, header) = lines.peek().ok_or_else(|| format_err(1, "empty function file"))?;
    let parsed = match header.split_whitespace().next() {
        Some("boolfn") => {
            lines.next();
            let n = width(field(&fields(header), "n", no)?, no)?;
            let table = read_table(&mut lines, 1usize << n, 1, no)?;
            let bits: Vec<u8> = table.into_iter().map(|v| v as u8).collect();
            FunctionFile::Boolean(BooleanFunction::from_table(n, &bits).map_err(|e| format_err(no, e.to_string()))?)
        }
        Some("vecfn") => FunctionFile::Vector(read_vector(&mut lines)?),
        _ => return Err(format_err(no, "expected `boolfn n=<n>` or `vecfn m=<m> n=<n>` header")),
    };
    if let Some((no, _)) = lines.next() {
        return Err(format_err(no, "unexpected content after the table"));
    }
    Ok(parsed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CipherKind {
    Feistel3,
    EvenMansour,
    Toy,
}

impl CipherKind {
    pub fn name(self) -> &'static str {
        match self {
            CipherKind::Feistel3 => "feistel3",
            CipherKind::EvenMansour => "even-mansour",
            CipherKind::Toy => "toy",
        }
    }

    fn parse(s: &str) -> Option<CipherKind> {
        [CipherKind::Feistel3, CipherKind::EvenMansour, CipherKind::Toy].into_iter().find(|k| k.name() == s)
    }
}

pub fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Weak => "weak",
        Preset::Strong => "strong",
    }
}

fn parse_preset(s: &str, line: usize) -> Result<Preset, CliError> {
    match s {
        "weak" => Ok(Preset::Weak),
        "strong" => Ok(Preset::Strong),
        _ => Err(format_err(line, format!("unknown preset `{s}`"))),
    }
}

/// A parsed cipher or challenge file.
#[derive(Clone, Debug, PartialEq)]
pub struct CipherFile {
    pub kind: CipherKind,
    /// Block width; half-block width for Feistel ciphers.
    pub n: u32,
    pub seed: u64,
    pub preset: Option<Preset>,
    pub rounds: Option<u32>,
    pub keys: Vec<(String, u32)>,
    pub tables: Vec<(String, VectorFunction)>,
}

impl CipherFile {
    pub fn is_challenge(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, name: &str) -> Option<u32> {
        self.keys.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn table(&self, name: &str) -> Result<&VectorFunction, CliError> {
        self.tables
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, t)| t)
            .ok_or_else(|| format_err(0, format!("cipher file has no `{name}` table")))
    }

    fn expect_kind(&self, kind: CipherKind) -> Result<(), CliError> {
        if self.kind != kind {
            return Err(CliError::Usage(format!("expected a {} file, found {}", kind.name(), self.kind.name())));
        }
        Ok(())
    }

    /// Generate a cipher with its keys, deterministically from `seed`.
    pub fn generate(kind: CipherKind, n: u32, preset: Option<Preset>, seed: u64) -> Result<CipherFile, CliError> {
        let mut file = CipherFile { kind, n, seed, preset: None, rounds: None, keys: Vec::new(), tables: Vec::new() };
        match kind {
            CipherKind::Feistel3 => {
                let f = Feistel3::random(n, seed)?;
                for (i, r) in f.round_functions().iter().enumerate() {
                    file.tables.push((format!("round{}", i + 1), r.clone()));
                }
                file.tables.push(("cipher".into(), ciphers::codebook(&f)?));
            }
            CipherKind::EvenMansour => {
                let e = EvenMansour::random(n, seed)?;
                file.keys = vec![("k1".into(), e.k1()), ("k2".into(), e.k2())];
                file.tables.push(("public".into(), e.permutation().clone()));
                file.tables.push(("cipher".into(), ciphers::codebook(&e)?));
            }
            CipherKind::Toy => {
                let preset = preset.unwrap_or(Preset::Weak);
                let c = ToyCipher::generate(n, preset, seed)?;
                let mut rng = rng::stream(seed, INSTANCE_STREAM);
                let k = rng.gen::<u32>() & mask(c.key_bits());
                let s = rng.gen::<u32>() & mask(n);
                file.preset = Some(preset);
                file.rounds = Some(c.rounds());
                file.keys = vec![("k".into(), k), ("s".into(), s)];
                file.tables.push(("sbox".into(), c.sbox().clone()));
                file.tables.push(("last".into(), c.last_sbox().clone()));
                file.tables.push(("cipher".into(), ciphers::codebook(&c.instance(k, s))?));
            }
        }
        Ok(file)
    }

    /// The same cipher without keys or secret tables.
    pub fn challenge(&self) -> CipherFile {
        let secret = |name: &str| name.starts_with("round");
        CipherFile {
            keys: Vec::new(),
            tables: self.tables.iter().filter(|(name, _)| !secret(name)).cloned().collect(),
            ..self.clone()
        }
    }

    pub fn write(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "bvcipher kind={} n={} seed={}", self.kind.name(), self.n, self.seed);
        if let Some(p) = self.preset {
            let _ = write!(out, " preset={}", preset_name(p));
        }
        if let Some(r) = self.rounds {
            let _ = write!(out, " rounds={r}");
        }
        out.push('\n');
        if !self.keys.is_empty() {
            out.push_str("key");
            for (name, v) in &self.keys {
                let _ = write!(out, " {name}={v:#x}");
            }
            out.push('\n');
        }
        for (name, t) in &self.tables {
            let _ = writeln!(out, "table {name}");
            write_vector(&mut out, t);
        }
        out
    }

    pub fn parse(text: &str) -> Result<CipherFile, CliError> {
        let mut lines = content_lines(text).peekable();
        let (no, header) = lines.next().ok_or_else(|| format_err(1, "empty cipher file"))?;
        if header.split_whitespace().next() != Some("bvcipher") {
            return Err(format_err(no, "expected `bvcipher kind=<kind> n=<n> seed=<seed>` header"));
        }
        let f = fields(header);
        let kind_name = field(&f, "kind", no)?;
        let kind = CipherKind::parse(kind_name).ok_or_else(|| format_err(no, format!("unknown kind `{kind_name}`")))?;
        let n = width(field(&f, "n", no)?, no)?;
        let seed = parse_u64(field(&f, "seed", no)?, no)?;
        let preset = f.iter().find(|(k, _)| *k == "preset").map(|(_, v)| parse_preset(v, no)).transpose()?;
        let rounds = f.iter().find(|(k, _)| *k == "rounds").map(|(_, v)| parse_u32(v, no)).transpose()?;
        let mut file = CipherFile { kind, n, seed, preset, rounds, keys: Vec::new(), tables: Vec::new() };
        while let Some((no, line)) = lines.next() {
            let mut words = line.split_whitespace();
            match words.next() {
                Some("key") => {
                    for (k, v) in fields(line) {
                        file.keys.push((k.to_string(), parse_u32(v, no)?));
                    }
                }
                Some("table") => {
                    let name = words.next().ok_or_else(|| format_err(no, "table needs a name"))?;
                    file.tables.push((name.to_string(), read_vector(&mut lines)?));
                }
                _ => return Err(format_err(no, format!("unexpected line `{line}`"))),
            }
        }
        file.table("cipher")?;
        Ok(file)
    }

    /// Public permutation and codebook of an Even-Mansour file.
    pub fn even_mansour(&self) -> Result<(VectorFunction, VectorFunction), CliError> {
        self.expect_kind(CipherKind::EvenMansour)?;
        let public = self.table("public")?.clone();
        let cipher = self.table("cipher")?.clone();
        if public.input_bits() != self.n || cipher.input_bits() != self.n {
            return Err(format_err(0, "table widths disagree with the header"));
        }
        Ok((public, cipher))
    }

    /// Public structure and codebook of a toy cipher file.
    pub fn toy(&self) -> Result<(ToyCipher, VectorFunction), CliError> {
        self.expect_kind(CipherKind::Toy)?;
        let rounds = self.rounds.unwrap_or(ToyCipher::DEFAULT_ROUNDS);
        let cipher = ToyCipher::new(self.n, rounds, self.table("sbox")?.clone(), self.table("last")?.clone())?;
        let codebook = self.table("cipher")?.clone();
        if codebook.input_bits() != self.n || codebook.output_bits() != self.n {
            return Err(format_err(0, "codebook width disagrees with the header"));
        }
        Ok((cipher, codebook))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_file_layout() {
        let f = BooleanFunction::from_fn(3, |x| (x >> 2 & x >> 1 & 1 == 1) ^ (x & 1 == 1)).unwrap();
        let text = write_function(&FunctionFile::Boolean(f.clone()));
        assert_eq!(text, "boolfn n=3\n01010110\n");
        assert_eq!(parse_function(&text).unwrap(), FunctionFile::Boolean(f));
    }

    #[test]
    fn vector_lines_wrap_at_64() {
        let f = VectorFunction::from_fn(6, 5, |x| x & 31).unwrap();
        let text = write_function(&FunctionFile::Vector(f.clone()));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "vecfn m=6 n=5");
        assert_eq!(lines.len(), 1 + 2);
        assert!(lines[1..].iter().all(|l| l.len() == 64));
        assert_eq!(parse_function(&text).unwrap(), FunctionFile::Vector(f));
    }

    #[test]
    fn malformed_files() {
        assert!(parse_function("").is_err());
        assert!(parse_function("boolfn n=2\n012\n").is_err());
        assert!(parse_function("boolfn n=2\n0120\n").is_err());
        assert!(parse_function("vecfn m=1 n=1\n0g\n").is_err());
        assert!(parse_function("boolfn n=1\n01\n00\n").is_err());
        assert!(parse_function("matrix n=1\n01\n").is_err());
        assert!(parse_function("# comment\nboolfn n=1 # trailing\n1 0\n").is_err());
        assert!(parse_function("# comment\nboolfn n=1 # trailing\n10\n").is_ok());
    }

    #[test]
    fn cipher_round_trip_and_challenge() {
        for kind in [CipherKind::Feistel3, CipherKind::EvenMansour, CipherKind::Toy] {
            let file = CipherFile::generate(kind, 4, None, 9).unwrap();
            let text = file.write();
            assert_eq!(CipherFile::parse(&text).unwrap(), file);
            let ch = file.challenge();
            assert!(ch.is_challenge());
            assert_eq!(CipherFile::parse(&ch.write()).unwrap(), ch);
            assert!(!ch.write().contains("key "));
        }
    }

    #[test]
    fn toy_file_reproduces_instance() {
        let file = CipherFile::generate(CipherKind::Toy, 4, Some(Preset::Weak), 3).unwrap();
        let (cipher, codebook) = file.challenge().toy().unwrap();
        let (k, s) = (file.key("k").unwrap(), file.key("s").unwrap());
        for x in 0..16 {
            assert_eq!(codebook.eval(x), cipher.encrypt(x, k, s));
        }
    }
}
