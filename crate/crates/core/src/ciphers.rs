//! Toy ciphers and the functions the attacks query.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::boolfn::VectorFunction;
use crate::lsfind::Structure;
use crate::rng::{self, StreamRng, INSTANCE_STREAM};
use crate::{mask, Dyadic, Error, Result, MAX_BITS};

/// A keyed permutation seen only through encryption.
pub trait BlockCipher {
    fn block_bits(&self) -> u32;
    fn encrypt(&self, x: u32) -> u32;
}

impl BlockCipher for VectorFunction {
    fn block_bits(&self) -> u32 {
        self.input_bits()
    }

    fn encrypt(&self, x: u32) -> u32 {
        self.eval(x)
    }
}

impl<T: BlockCipher + ?Sized> BlockCipher for &T {
    fn block_bits(&self) -> u32 {
        (**self).block_bits()
    }

    fn encrypt(&self, x: u32) -> u32 {
        (**self).encrypt(x)
    }
}

/// The whole codebook as a table.
pub fn codebook(e: &impl BlockCipher) -> Result<VectorFunction> {
    let bits = e.block_bits();
    VectorFunction::from_fn(bits, bits, |x| e.encrypt(x))
}

pub fn random_function(m: u32, n: u32, rng: &mut StreamRng) -> Result<VectorFunction> {
    VectorFunction::from_fn(m, n, |_| rng.gen::<u32>() & mask(n))
}

pub fn random_permutation(n: u32, rng: &mut StreamRng) -> Result<VectorFunction> {
    if n == 0 || n > MAX_BITS {
        return Err(Error::Width { bits: n, max: MAX_BITS });
    }
    let mut table: Vec<u32> = (0..1u32 << n).collect();
    table.shuffle(rng);
    VectorFunction::new(n, n, table)
}

/// Rotate an `n`-bit word left by one.
pub fn rotl(v: u32, n: u32) -> u32 {
    ((v << 1) | (v >> (n - 1))) & mask(n)
}

pub fn rotr(v: u32, n: u32) -> u32 {
    ((v >> 1) | (v << (n - 1))) & mask(n)
}

fn check_round_function(f: &VectorFunction, n: u32) -> Result<()> {
    if f.input_bits() != n || f.output_bits() != n {
        return Err(Error::WidthMismatch { left: n, right: f.input_bits().max(f.output_bits()) });
    }
    Ok(())
}

/// Three-round Feistel network on `2n`-bit blocks `(L ∥ R)`, round `i`
/// mapping `(L, R)` to `(R ⊕ P_i(L), L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feistel3 {
    n: u32,
    rounds: [VectorFunction; 3],
}

impl Feistel3 {
    pub fn new(n: u32, rounds: [VectorFunction; 3]) -> Result<Self> {
        if n == 0 || 2 * n > MAX_BITS {
            return Err(Error::Width { bits: 2 * n, max: MAX_BITS });
        }
        for f in &rounds {
            check_round_function(f, n)?;
        }
        Ok(Feistel3 { n, rounds })
    }

    /// Uniformly random round functions.
    pub fn random(n: u32, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let p1 = random_function(n, n, &mut rng)?;
        let p2 = random_function(n, n, &mut rng)?;
        let p3 = random_function(n, n, &mut rng)?;
        Self::new(n, [p1, p2, p3])
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn round_functions(&self) -> &[VectorFunction; 3] {
        &self.rounds
    }

    pub fn encrypt_halves(&self, mut l: u32, mut r: u32) -> (u32, u32) {
        for p in &self.rounds {
            (l, r) = (r ^ p.eval(l), l);
        }
        (l, r)
    }

    pub fn decrypt_halves(&self, mut l: u32, mut r: u32) -> (u32, u32) {
        for p in self.rounds.iter().rev() {
            (l, r) = (r, l ^ p.eval(r));
        }
        (l, r)
    }

    pub fn decrypt(&self, y: u32) -> u32 {
        let (l, r) = self.decrypt_halves(y >> self.n, y & mask(self.n));
        (l << self.n) | r
    }
}

impl BlockCipher for Feistel3 {
    fn block_bits(&self) -> u32 {
        2 * self.n
    }

    fn encrypt(&self, x: u32) -> u32 {
        let (l, r) = self.encrypt_halves(x >> self.n, x & mask(self.n));
        (l << self.n) | r
    }
}

/// `F(b ∥ x) = right(E(s_b ∥ x)) ⊕ s_b`, built from encryptions only.
///
/// For a three-round Feistel cipher this is `P₂(x ⊕ P₁(s_b))`, which has the
/// structure `(1 ∥ P₁(s₀) ⊕ P₁(s₁))` with output difference zero.
pub fn feistel_function(e: &impl BlockCipher, s0: u32, s1: u32) -> Result<VectorFunction> {
    feistel_function_with(e, s0, s1, false)
}

/// `F(b ∥ x) ⊕ (b, …, b)`; the same structure now has output difference
/// all ones.
pub fn feistel_function_flipped(e: &impl BlockCipher, s0: u32, s1: u32) -> Result<VectorFunction> {
    feistel_function_with(e, s0, s1, true)
}

fn feistel_function_with(e: &impl BlockCipher, s0: u32, s1: u32, flip: bool) -> Result<VectorFunction> {
    let block = e.block_bits();
    if block % 2 != 0 {
        return Err(Error::InvalidParameter("block width must be even"));
    }
    let n = block / 2;
    if s0 == s1 {
        return Err(Error::InvalidParameter("s0 and s1 must differ"));
    }
    if (s0 | s1) & !mask(n) != 0 {
        return Err(Error::EntryOutOfRange { index: 0, value: s0 | s1, bits: n });
    }
    VectorFunction::from_fn(n + 1, n, |input| {
        let b = input >> n;
        let x = input & mask(n);
        let s = if b == 1 { s1 } else { s0 };
        let right = e.encrypt((s << n) | x) & mask(n);
        let twist = if flip && b == 1 { mask(n) } else { 0 };
        right ^ s ^ twist
    })
}

/// `E(x) = P(x ⊕ k₁) ⊕ k₂` for a public permutation `P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvenMansour {
    n: u32,
    p: VectorFunction,
    k1: u32,
    k2: u32,
}

impl EvenMansour {
    pub fn new(p: VectorFunction, k1: u32, k2: u32) -> Result<Self> {
        if !p.is_permutation() {
            return Err(Error::NotPermutation);
        }
        let n = p.input_bits();
        if (k1 | k2) & !mask(n) != 0 {
            return Err(Error::EntryOutOfRange { index: 0, value: k1 | k2, bits: n });
        }
        Ok(EvenMansour { n, p, k1, k2 })
    }

    /// Random public permutation, nonzero `k₁` and arbitrary `k₂`.
    pub fn random(n: u32, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let p = random_permutation(n, &mut rng)?;
        let k1 = rng.gen_range(1..=mask(n));
        let k2 = rng.gen::<u32>() & mask(n);
        Self::new(p, k1, k2)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn permutation(&self) -> &VectorFunction {
        &self.p
    }

    pub fn k1(&self) -> u32 {
        self.k1
    }

    pub fn k2(&self) -> u32 {
        self.k2
    }

    pub fn decrypt(&self, y: u32) -> Result<u32> {
        let inv = self.p.inverse()?;
        Ok(inv.eval(y ^ self.k2) ^ self.k1)
    }
}

impl BlockCipher for EvenMansour {
    fn block_bits(&self) -> u32 {
        self.n
    }

    fn encrypt(&self, x: u32) -> u32 {
        self.p.eval(x ^ self.k1) ^ self.k2
    }
}

/// `F(x) = E(x) ⊕ P(x)`, which has period `k₁`.
pub fn even_mansour_function(e: &impl BlockCipher, p: &VectorFunction) -> Result<VectorFunction> {
    let n = e.block_bits();
    check_round_function(p, n)?;
    VectorFunction::from_fn(n, n, |x| e.encrypt(x) ^ p.eval(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Preset {
    /// Round S-box with a planted linear structure.
    Weak,
    /// Round S-box without nonzero linear structures.
    Strong,
}

/// Substitution-rotation cipher on `n`-bit blocks.
///
/// Each of the first `r - 1` rounds maps `v` to `rotl(S(v ⊕ k_i))`, where
/// `k_i` is the `i`-th `n`-bit slice of the key `k` (most significant
/// slice first). The last round is `c = S_last(y) ⊕ s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyCipher {
    n: u32,
    rounds: u32,
    sbox: VectorFunction,
    last: VectorFunction,
    last_inv: VectorFunction,
}

impl ToyCipher {
    pub const DEFAULT_ROUNDS: u32 = 3;

    /// Attempts per S-box before generation gives up.
    const MAX_ATTEMPTS: u32 = 10_000;

    pub fn new(n: u32, rounds: u32, sbox: VectorFunction, last: VectorFunction) -> Result<Self> {
        if !(2..=12).contains(&n) {
            return Err(Error::InvalidParameter("toy cipher width must lie in 2..=12"));
        }
        if rounds < 2 || (rounds - 1) * n + n > MAX_BITS {
            return Err(Error::InvalidParameter("round count must be at least 2 and keep n + m ≤ 24"));
        }
        check_round_function(&sbox, n)?;
        check_round_function(&last, n)?;
        if !sbox.is_permutation() {
            return Err(Error::NotPermutation);
        }
        let last_inv = last.inverse()?;
        Ok(ToyCipher { n, rounds, sbox, last, last_inv })
    }

    /// Random instance of the given preset with [`Self::DEFAULT_ROUNDS`].
    pub fn generate(n: u32, preset: Preset, seed: u64) -> Result<Self> {
        Self::generate_with_rounds(n, Self::DEFAULT_ROUNDS, preset, seed)
    }

    pub fn generate_with_rounds(n: u32, rounds: u32, preset: Preset, seed: u64) -> Result<Self> {
        if !(3..=12).contains(&n) {
            return Err(Error::InvalidParameter("generated toy ciphers need a width in 3..=12"));
        }
        let mut rng = rng::stream(seed, INSTANCE_STREAM);
        let sbox = match preset {
            Preset::Weak => weak_sbox(n, &mut rng)?,
            Preset::Strong => structureless_permutation(n, &mut rng)?,
        };
        let a = planted_difference(n);
        let last = (0..Self::MAX_ATTEMPTS)
            .map(|_| structureless_permutation(n, &mut rng))
            .find(|s| s.as_ref().map_or(true, |s| separates_keys(s, a)))
            .ok_or(Error::InvalidParameter("no suitable last-round S-box found"))??;
        Self::new(n, rounds, sbox, last)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    /// Key bits of the first `r - 1` rounds.
    pub fn key_bits(&self) -> u32 {
        (self.rounds - 1) * self.n
    }

    pub fn sbox(&self) -> &VectorFunction {
        &self.sbox
    }

    pub fn last_sbox(&self) -> &VectorFunction {
        &self.last
    }

    pub fn round_key(&self, k: u32, i: u32) -> u32 {
        (k >> ((self.rounds - 2 - i) * self.n)) & mask(self.n)
    }

    /// Input of the last round: `F_k(x)`.
    pub fn keyed(&self, k: u32, x: u32) -> u32 {
        (0..self.rounds - 1).fold(x, |v, i| rotl(self.sbox.eval(v ^ self.round_key(k, i)), self.n))
    }

    pub fn encrypt(&self, x: u32, k: u32, s: u32) -> u32 {
        self.last.eval(self.keyed(k, x)) ^ s
    }

    /// Undo the last round under a guessed subkey.
    pub fn decrypt_last(&self, c: u32, s: u32) -> u32 {
        self.last_inv.eval(c ^ s)
    }

    pub fn keyed_function(&self, k: u32) -> Result<VectorFunction> {
        VectorFunction::from_fn(self.n, self.n, |x| self.keyed(k, x))
    }

    /// `G(x ∥ k) = F_k(x)` on `n + m` input bits, the plaintext on top.
    pub fn g_function(&self) -> Result<VectorFunction> {
        let m = self.key_bits();
        VectorFunction::from_fn(self.n + m, self.n, |z| self.keyed(z & mask(m), z >> m))
    }

    /// Linear structures `(a, α)` of the round S-box with `rotl(α) = a`,
    /// which pass through every keyed round unchanged.
    pub fn planted_differentials(&self) -> Vec<Structure> {
        self.sbox
            .linear_structures()
            .into_iter()
            .filter(|&(a, alpha)| a != 0 && rotl(alpha, self.n) == a)
            .map(|(a, _)| Structure { input_diff: a, output_diff: a })
            .collect()
    }

    pub fn instance(&self, k: u32, s: u32) -> ToyInstance<'_> {
        ToyInstance { cipher: self, k, s }
    }

    /// `Pr_x[F_k(x ⊕ a) ⊕ F_k(x) = Δ]`, by enumeration.
    pub fn differential_probability(&self, k: u32, a: u32, delta: u32) -> Dyadic {
        let count = (0..1u32 << self.n)
            .filter(|&x| self.keyed(k, x) ^ self.keyed(k, x ^ a) == delta)
            .count();
        Dyadic::new(count as i128, self.n)
    }

    /// Whether bit `j` (first coordinate is `j = 0`) of
    /// `F_k(x) ⊕ F_k(x ⊕ a)` differs from `value` for every `x` and `k`.
    pub fn is_impossible(&self, j: u32, a: u32, value: bool) -> bool {
        let shift = self.n - 1 - j;
        (0..1u32 << self.key_bits()).all(|k| {
            (0..1u32 << self.n)
                .all(|x| ((self.keyed(k, x) ^ self.keyed(k, x ^ a)) >> shift & 1 == 1) != value)
        })
    }
}

/// A toy cipher with fixed keys, as an encryption oracle.
#[derive(Clone, Copy, Debug)]
pub struct ToyInstance<'a> {
    pub cipher: &'a ToyCipher,
    pub k: u32,
    pub s: u32,
}

impl BlockCipher for ToyInstance<'_> {
    fn block_bits(&self) -> u32 {
        self.cipher.n
    }

    fn encrypt(&self, x: u32) -> u32 {
        self.cipher.encrypt(x, self.k, self.s)
    }
}

/// Input difference planted in weak round S-boxes: the first coordinate.
pub fn planted_difference(n: u32) -> u32 {
    1 << (n - 1)
}

/// `S(x₁ ∥ x') = R(x') ⊕ x₁·α` with `α = rotr(a)`, where `R` sends the
/// `2^{n-1}` values of `x'` to distinct cosets of `{0, α}`. Resampled until
/// `(a, α)` is the only nonzero linear structure.
fn weak_sbox(n: u32, rng: &mut StreamRng) -> Result<VectorFunction> {
    let a = planted_difference(n);
    let alpha = rotr(a, n);
    for _ in 0..ToyCipher::MAX_ATTEMPTS {
        let mut reps: Vec<u32> = (0..1u32 << n).filter(|v| v & alpha == 0).collect();
        reps.shuffle(rng);
        for r in reps.iter_mut() {
            if rng.gen::<bool>() {
                *r ^= alpha;
            }
        }
        let low = mask(n - 1);
        let sbox = VectorFunction::from_fn(n, n, |x| {
            reps[(x & low) as usize] ^ if x & a != 0 { alpha } else { 0 }
        })?;
        if sbox.linear_structures() == [(0, 0), (a, alpha)] {
            return Ok(sbox);
        }
    }
    Err(Error::InvalidParameter("no weak S-box found"))
}

fn structureless_permutation(n: u32, rng: &mut StreamRng) -> Result<VectorFunction> {
    for _ in 0..ToyCipher::MAX_ATTEMPTS {
        let p = random_permutation(n, rng)?;
        if p.linear_structures().len() == 1 {
            return Ok(p);
        }
    }
    Err(Error::InvalidParameter("no structureless permutation found"))
}

/// For every wrong subkey offset `d`, some pair with difference `a` before
/// the last round decrypts to a different difference.
fn separates_keys(last: &VectorFunction, a: u32) -> bool {
    let inv = last.inverse().expect("permutation");
    let size = 1u32 << last.input_bits();
    (1..size).all(|d| {
        (0..size).any(|y| {
            let (c0, c1) = (last.eval(y) ^ d, last.eval(y ^ a) ^ d);
            inv.eval(c0) ^ inv.eval(c1) != a
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_round_functions_swap_halves() {
        let zero = VectorFunction::from_fn(4, 4, |_| 0).unwrap();
        let c = Feistel3::new(4, [zero.clone(), zero.clone(), zero]).unwrap();
        assert_eq!(c.encrypt_halves(0x3, 0xA), (0xA, 0x3));
    }

    #[test]
    fn feistel_round_trip() {
        let c = Feistel3::random(4, 42).unwrap();
        assert!(codebook(&c).unwrap().is_permutation());
        assert!((0..256).all(|x| c.decrypt(c.encrypt(x)) == x));
    }

    #[test]
    fn feistel_function_structure() {
        let c = Feistel3::random(5, 3).unwrap();
        let p1 = &c.round_functions()[0];
        let (s0, s1) = (1, 6);
        let s = p1.eval(s0) ^ p1.eval(s1);
        let f = feistel_function(&c, s0, s1).unwrap();
        let a = (1 << 5) | s;
        assert!((0..64).all(|x| f.eval(x) == f.eval(x ^ a)));
        assert!(f.linear_structures().contains(&(a, 0)));
        let g = feistel_function_flipped(&c, s0, s1).unwrap();
        assert!(g.linear_structures().contains(&(a, 0b11111)));
        assert!(feistel_function(&c, 2, 2).is_err());
    }

    #[test]
    fn even_mansour_period() {
        let sbox = [0x6, 0x4, 0xC, 0x5, 0x0, 0x7, 0x2, 0xE, 0x1, 0xF, 0x3, 0xD, 0x8, 0xA, 0x9, 0xB];
        let p = VectorFunction::new(4, 4, sbox.to_vec()).unwrap();
        let e = EvenMansour::new(p.clone(), 0xA, 0x3).unwrap();
        let f = even_mansour_function(&e, &p).unwrap();
        assert!((0..16).all(|x| f.eval(x) == f.eval(x ^ 0xA)));
        assert!(f.linear_structures().contains(&(0xA, 0)));
        assert!((0..16).all(|x| e.decrypt(e.encrypt(x)).unwrap() == x));

        let e0 = EvenMansour::new(p.clone(), 0, 0x3).unwrap();
        let f0 = even_mansour_function(&e0, &p).unwrap();
        assert!((0..16).all(|x| f0.eval(x) == 0x3));
    }

    #[test]
    fn weak_preset_plants_key_independent_differential() {
        let c = ToyCipher::generate(4, Preset::Weak, 1).unwrap();
        assert_eq!(c.key_bits(), 8);
        let planted = c.planted_differentials();
        assert_eq!(planted, [Structure { input_diff: 0b1000, output_diff: 0b1000 }]);
        assert!((0..256).all(|k| c.differential_probability(k, 0b1000, 0b1000) == Dyadic::ONE));
        assert!(c.is_impossible(0, 0b1000, false));
    }

    #[test]
    fn g_matches_keyed_function() {
        let c = ToyCipher::generate(4, Preset::Strong, 2).unwrap();
        assert!(c.planted_differentials().is_empty());
        let g = c.g_function().unwrap();
        for k in [0u32, 17, 255] {
            let f = c.keyed_function(k).unwrap();
            assert!((0..16).all(|x| g.eval((x << 8) | k) == f.eval(x)));
        }
        let inst = c.instance(0x5A, 0x9);
        assert!((0..16).all(|x| c.decrypt_last(inst.encrypt(x), 0x9) == c.keyed(0x5A, x)));
    }
}
