//! Classical simulation of Bernstein-Vazirani based cryptanalysis.
//!
//! A Bernstein-Vazirani run against a Boolean function `f` measures `ω`
//! with probability `S_f(ω)²`, where `S_f` is the normalized Walsh
//! spectrum. This crate samples that distribution exactly and builds the
//! linear-structure search, the Feistel distinguisher, Even-Mansour key
//! recovery and three flavours of differential cryptanalysis on top of it.
//!
//! Bit order: an `n`-bit vector is stored in the low `n` bits of an
//! integer, and the first coordinate `x₁` is the most significant of those
//! bits. The dot product `ω·x` is the parity of `ω & x`, so it does not
//! depend on the convention, but concatenations such as `(b ∥ x)` or
//! `(x ∥ k)` and component indices do.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attacks;
pub mod boolfn;
pub mod bv;
pub mod ciphers;
mod dyadic;
mod error;
pub mod experiments;
pub mod gf2;
pub mod lsfind;
pub mod rng;
pub mod stats;

pub use dyadic::Dyadic;
pub use error::{Error, Result};

/// Largest input width accepted for truth tables.
pub const MAX_BITS: u32 = 24;

/// Parity of `a & b`, the GF(2) dot product of two packed bit vectors.
#[inline]
pub fn dot(a: u32, b: u32) -> bool {
    (a & b).count_ones() & 1 == 1
}

/// Mask with the low `bits` bits set.
#[inline]
pub fn mask(bits: u32) -> u32 {
    if bits >= 32 {
        u32::MAX
    } else {
        (1u32 << bits) - 1
    }
}
