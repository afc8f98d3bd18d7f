//! Boolean and vector functions given by truth tables.
//!
//! The Walsh spectrum is kept scaled by `2^n` (the Walsh-Hadamard transform
//! of the `±1` sign table), so every identity between spectra and
//! differential counts is an integer identity.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use once_cell::race::OnceBox;

use crate::gf2::{AffineSolutionSet, Gf2System};
use crate::{dot, mask, Dyadic, Error, Result, MAX_BITS};

fn check_width(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        Err(Error::Width { bits, max: MAX_BITS })
    } else {
        Ok(())
    }
}

/// In-place fast Walsh-Hadamard transform (unnormalized).
pub fn fwht_i32(values: &mut [i32]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in values.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

pub fn fwht_i64(values: &mut [i64]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in values.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// `f: {0,1}^n → {0,1}` as a packed truth table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BooleanFunction {
    n: u32,
    bits: Vec<u64>,
}

impl BooleanFunction {
    pub fn from_fn(n: u32, mut f: impl FnMut(u32) -> bool) -> Result<Self> {
        check_width(n)?;
        let size = 1usize << n;
        let mut bits = vec![0u64; size.div_ceil(64)];
        for x in 0..size {
            if f(x as u32) {
                bits[x >> 6] |= 1 << (x & 63);
            }
        }
        Ok(BooleanFunction { n, bits })
    }

    /// From a table of `2^n` entries, each 0 or 1.
    pub fn from_table(n: u32, table: &[u8]) -> Result<Self> {
        check_width(n)?;
        if table.len() != 1usize << n {
            return Err(Error::TableLength { expected: 1 << n, found: table.len() });
        }
        if let Some(index) = table.iter().position(|&v| v > 1) {
            return Err(Error::EntryOutOfRange { index, value: table[index] as u32, bits: 1 });
        }
        Self::from_fn(n, |x| table[x as usize] == 1)
    }

    pub fn constant(n: u32, value: bool) -> Result<Self> {
        Self::from_fn(n, |_| value)
    }

    /// `x ↦ a·x`.
    pub fn linear(n: u32, a: u32) -> Result<Self> {
        Self::from_fn(n, |x| dot(a, x))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn domain_size(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn eval(&self, x: u32) -> bool {
        let x = x as usize;
        self.bits[x >> 6] >> (x & 63) & 1 == 1
    }

    pub fn table(&self) -> Vec<u8> {
        (0..self.domain_size() as u32).map(|x| self.eval(x) as u8).collect()
    }

    pub fn weight(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Walsh spectrum by an in-place fast Walsh-Hadamard transform.
    pub fn walsh_spectrum(&self) -> WalshSpectrum {
        let mut values: Vec<i32> =
            (0..self.domain_size() as u32).map(|x| if self.eval(x) { -1 } else { 1 }).collect();
        fwht_i32(&mut values);
        WalshSpectrum { n: self.n, scaled: values }
    }

    /// `r(a) = Σ_x (-1)^{f(x) ⊕ f(x⊕a)}` for every `a`, through the squared
    /// spectrum (Wiener-Khinchin), in `O(n·2^n)`.
    pub fn autocorrelation(&self) -> Vec<i64> {
        self.walsh_spectrum().autocorrelation()
    }

    /// `|V^i_{f,a}| = |{x : f(x⊕a) ⊕ f(x) = i}|` by enumeration.
    pub fn v_count(&self, a: u32, i: bool) -> u64 {
        (0..self.domain_size() as u32)
            .filter(|&x| (self.eval(x ^ a) ^ self.eval(x)) == i)
            .count() as u64
    }

    pub fn differential(&self, a: u32, i: bool) -> DifferentialCount {
        DifferentialCount { input_diff: a, output_diff: i as u32, count: self.v_count(a, i) }
    }

    /// `1 - |V^i_{f,a}| / 2^n`: how far `a` is from being a linear structure
    /// with value `i`.
    pub fn sigma_closeness(&self, a: u32, i: bool) -> Dyadic {
        Dyadic::ONE - Dyadic::new(self.v_count(a, i) as i128, self.n)
    }

    /// Relative differential uniformity `δ_f`.
    pub fn differential_uniformity(&self) -> Dyadic {
        let r = self.autocorrelation();
        let best = r[1..].iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
        self.count_ratio(best)
    }

    /// `δ′_f`: the same maximum restricted to differences that are not
    /// linear structures. Zero when every difference is a structure.
    pub fn delta_prime(&self) -> Dyadic {
        let size = self.domain_size() as u64;
        let r = self.autocorrelation();
        let best = r.iter().map(|v| v.unsigned_abs()).filter(|&v| v != size).max();
        best.map_or(Dyadic::ZERO, |b| self.count_ratio(b))
    }

    // max_i |V^i_{f,a}| / 2^n = (2^n + |r(a)|) / 2^{n+1}
    fn count_ratio(&self, abs_r: u64) -> Dyadic {
        Dyadic::new((self.domain_size() as u64 + abs_r) as i128, self.n + 1)
    }

    /// `U_f^i` read off the autocorrelation.
    pub fn linear_structures(&self, i: bool) -> Vec<u32> {
        let size = self.domain_size() as i64;
        let target = if i { -size } else { size };
        self.autocorrelation()
            .iter()
            .enumerate()
            .filter(|&(_, &r)| r == target)
            .map(|(a, _)| a as u32)
            .collect()
    }

    /// `{a : ω·a = i for every ω with S_f(ω) ≠ 0}`, solved over the support.
    pub fn spectral_linear_structures(&self, i: bool) -> AffineSolutionSet {
        let support = self.walsh_spectrum().support();
        Gf2System::uniform(self.n, &support, i).expect("width checked at construction").solve()
    }

    /// Exact check of `Σ_{ω·a=i} S_f(ω)² = |V^i_{f,a}| / 2^n`.
    pub fn lemma1_check(&self, a: u32, i: bool) -> bool {
        let spectrum = self.walsh_spectrum();
        let lhs: u64 = (0..self.domain_size() as u32)
            .filter(|&w| dot(w, a) == i)
            .map(|w| spectrum.scaled_squared(w))
            .sum();
        lhs == self.v_count(a, i) << self.n
    }
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BooleanFunction(n={}, ", self.n)?;
        for x in 0..self.domain_size().min(64) as u32 {
            write!(f, "{}", self.eval(x) as u8)?;
        }
        if self.domain_size() > 64 {
            f.write_str("…")?;
        }
        f.write_str(")")
    }
}

/// `|{x : f(x⊕a) ⊕ f(x) = output_diff}|` for one input difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DifferentialCount {
    pub input_diff: u32,
    pub output_diff: u32,
    pub count: u64,
}

/// Walsh spectrum, stored as `2^n · S_f(ω)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalshSpectrum {
    n: u32,
    scaled: Vec<i32>,
}

impl WalshSpectrum {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// `2^n · S_f(ω)`.
    pub fn scaled(&self, omega: u32) -> i32 {
        self.scaled[omega as usize]
    }

    pub fn scaled_values(&self) -> &[i32] {
        &self.scaled
    }

    pub fn value(&self, omega: u32) -> Dyadic {
        Dyadic::new(self.scaled(omega) as i128, self.n)
    }

    /// `2^{2n} · S_f(ω)²`.
    pub fn scaled_squared(&self, omega: u32) -> u64 {
        let v = self.scaled(omega) as i64;
        (v * v) as u64
    }

    /// `S_f(ω)²`, the probability that a BV run outputs `ω`.
    pub fn probability(&self, omega: u32) -> Dyadic {
        Dyadic::new(self.scaled_squared(omega) as i128, 2 * self.n)
    }

    /// `N_f`, in increasing order.
    pub fn support(&self) -> Vec<u32> {
        self.scaled
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0)
            .map(|(w, _)| w as u32)
            .collect()
    }

    /// Parseval: `Σ_ω S_f(ω)² = 1`, checked on integers.
    pub fn is_parseval(&self) -> bool {
        let total: u64 = (0..self.scaled.len() as u32).map(|w| self.scaled_squared(w)).sum();
        total == 1u64 << (2 * self.n)
    }

    pub fn autocorrelation(&self) -> Vec<i64> {
        let mut sq: Vec<i64> = self.scaled.iter().map(|&v| (v as i64) * (v as i64)).collect();
        fwht_i64(&mut sq);
        for v in sq.iter_mut() {
            *v >>= self.n;
        }
        sq
    }
}

/// `F: {0,1}^m → {0,1}^n` as a table of packed outputs.
///
/// Component `j` (0-based) is output coordinate `j + 1`, i.e. bit `n-1-j`
/// of each entry. Components are materialized on first use and cached.
pub struct VectorFunction {
    m: u32,
    n: u32,
    table: Vec<u32>,
    components: OnceBox<Vec<BooleanFunction>>,
}

impl VectorFunction {
    pub fn new(m: u32, n: u32, table: Vec<u32>) -> Result<Self> {
        check_width(m)?;
        if n == 0 || n > 32 {
            return Err(Error::Width { bits: n, max: 32 });
        }
        if table.len() != 1usize << m {
            return Err(Error::TableLength { expected: 1 << m, found: table.len() });
        }
        if let Some(index) = table.iter().position(|&v| v & !mask(n) != 0) {
            return Err(Error::EntryOutOfRange { index, value: table[index], bits: n });
        }
        Ok(VectorFunction { m, n, table, components: OnceBox::new() })
    }

    pub fn from_fn(m: u32, n: u32, mut f: impl FnMut(u32) -> u32) -> Result<Self> {
        check_width(m)?;
        let table = (0..1u32 << m).map(|x| f(x) & mask(n)).collect();
        Self::new(m, n, table)
    }

    /// Reassemble from components, the first being the most significant.
    pub fn from_components(components: &[BooleanFunction]) -> Result<Self> {
        let first = components.first().ok_or(Error::InvalidParameter("no components"))?;
        let m = first.n();
        if let Some(c) = components.iter().find(|c| c.n() != m) {
            return Err(Error::WidthMismatch { left: m, right: c.n() });
        }
        let n = components.len() as u32;
        Self::from_fn(m, n, |x| {
            components.iter().fold(0, |acc, c| (acc << 1) | c.eval(x) as u32)
        })
    }

    pub fn identity(n: u32) -> Result<Self> {
        Self::from_fn(n, n, |x| x)
    }

    pub fn input_bits(&self) -> u32 {
        self.m
    }

    pub fn output_bits(&self) -> u32 {
        self.n
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    #[inline]
    pub fn eval(&self, x: u32) -> u32 {
        self.table[x as usize]
    }

    pub fn components(&self) -> &[BooleanFunction] {
        self.components.get_or_init(|| {
            Box::new(
                (0..self.n as usize)
                    .map(|j| {
                        let shift = self.n - 1 - j as u32;
                        BooleanFunction::from_fn(self.m, |x| self.eval(x) >> shift & 1 == 1)
                            .expect("width checked at construction")
                    })
                    .collect(),
            )
        })
    }

    pub fn component(&self, j: usize) -> &BooleanFunction {
        &self.components()[j]
    }

    pub fn is_permutation(&self) -> bool {
        if self.m != self.n {
            return false;
        }
        let mut seen = vec![false; self.table.len()];
        self.table.iter().all(|&y| !core::mem::replace(&mut seen[y as usize], true))
    }

    pub fn inverse(&self) -> Result<VectorFunction> {
        if !self.is_permutation() {
            return Err(Error::NotPermutation);
        }
        let mut inv = vec![0u32; self.table.len()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        VectorFunction::new(self.n, self.m, inv)
    }

    /// `|{x : F(x⊕a) ⊕ F(x) = α}|` by enumeration.
    pub fn differential_count(&self, a: u32, alpha: u32) -> DifferentialCount {
        let count = (0..self.table.len() as u32)
            .filter(|&x| self.eval(x ^ a) ^ self.eval(x) == alpha)
            .count() as u64;
        DifferentialCount { input_diff: a, output_diff: alpha, count }
    }

    /// Every `(a, α)` with `F(x⊕a) ⊕ F(x) = α` for all `x`, including
    /// `(0, 0)`, by exhaustive scan.
    pub fn linear_structures(&self) -> Vec<(u32, u32)> {
        let size = self.table.len() as u32;
        (0..size)
            .filter_map(|a| {
                let alpha = self.eval(a) ^ self.eval(0);
                (0..size).all(|x| self.eval(x ^ a) ^ self.eval(x) == alpha).then_some((a, alpha))
            })
            .collect()
    }

    /// Vector differential uniformity `δ_F` by exhaustive scan.
    pub fn differential_uniformity(&self) -> Dyadic {
        let size = self.table.len() as u32;
        let mut row = vec![0u64; 1usize << self.n];
        let mut best = 0;
        for a in 1..size {
            row.iter_mut().for_each(|c| *c = 0);
            for x in 0..size {
                row[(self.eval(x ^ a) ^ self.eval(x)) as usize] += 1;
            }
            best = best.max(*row.iter().max().unwrap());
        }
        Dyadic::new(best as i128, self.m)
    }

    /// `δ′_F = max_j δ′_{F_j}`.
    pub fn delta_prime(&self) -> Dyadic {
        self.components().iter().map(|c| c.delta_prime()).max().unwrap_or(Dyadic::ZERO)
    }

    /// `max_j δ′_{F_j}` with the maximum restricted to the given input
    /// differences.
    pub fn delta_prime_over(&self, directions: &[u32]) -> Dyadic {
        let size = self.table.len() as u64;
        let mut best = None;
        for c in self.components() {
            let r = c.autocorrelation();
            for &a in directions {
                let v = r[a as usize].unsigned_abs();
                if v != size {
                    best = best.max(Some(v));
                }
            }
        }
        best.map_or(Dyadic::ZERO, |b| Dyadic::new((size + b) as i128, self.m + 1))
    }
}

impl Clone for VectorFunction {
    fn clone(&self) -> Self {
        VectorFunction { m: self.m, n: self.n, table: self.table.clone(), components: OnceBox::new() }
    }
}

impl PartialEq for VectorFunction {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.n == other.n && self.table == other.table
    }
}

impl Eq for VectorFunction {}

impl fmt::Debug for VectorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFunction")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("table", &&self.table[..self.table.len().min(32)])
            .finish()
    }
}

/// Exhaustive-sweep versions of the spectral computations above, used as
/// ground truth.
pub mod bruteforce {
    use super::*;

    pub fn walsh_spectrum(f: &BooleanFunction) -> Vec<i64> {
        let size = f.domain_size() as u32;
        (0..size)
            .map(|w| {
                (0..size)
                    .map(|x| if f.eval(x) ^ dot(w, x) { -1i64 } else { 1 })
                    .sum()
            })
            .collect()
    }

    pub fn differential_uniformity(f: &BooleanFunction) -> Dyadic {
        let size = f.domain_size() as u32;
        let best = (1..size)
            .map(|a| f.v_count(a, false).max(f.v_count(a, true)))
            .max()
            .unwrap_or(0);
        Dyadic::new(best as i128, f.n())
    }

    pub fn delta_prime(f: &BooleanFunction) -> Dyadic {
        let size = f.domain_size() as u64;
        let best = (0..size as u32)
            .map(|a| f.v_count(a, false).max(f.v_count(a, true)))
            .filter(|&c| c != size)
            .max()
            .unwrap_or(0);
        Dyadic::new(best as i128, f.n())
    }

    /// `U_f^i` straight from the definition.
    pub fn linear_structures(f: &BooleanFunction, i: bool) -> Vec<u32> {
        let size = f.domain_size() as u64;
        (0..size as u32).filter(|&a| f.v_count(a, i) == size).collect()
    }
}
