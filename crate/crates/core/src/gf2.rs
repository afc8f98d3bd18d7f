//! Linear systems over GF(2) and their affine solution sets.
//!
//! Vectors are packed into `u32` (width at most 32). Solution sets are
//! carried symbolically as `offset + span(basis)` in a canonical form, so
//! intersections of the candidate sets produced by the attack algorithms
//! never require enumerating them.

use alloc::vec::Vec;

use crate::{dot, mask, Error, Result};

pub const MAX_WIDTH: u32 = 32;

/// A system `{ x·ω = c }` in `width` unknowns.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Gf2System {
    width: u32,
    constraints: Vec<(u32, bool)>,
}

impl Gf2System {
    pub fn new(width: u32) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::Width { bits: width, max: MAX_WIDTH });
        }
        Ok(Gf2System { width, constraints: Vec::new() })
    }

    /// All constraints `x·ω = value` for `ω` in `omegas`.
    pub fn uniform(width: u32, omegas: &[u32], value: bool) -> Result<Self> {
        let mut system = Self::new(width)?;
        for &omega in omegas {
            system.push(omega, value);
        }
        Ok(system)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn constraints(&self) -> &[(u32, bool)] {
        &self.constraints
    }

    pub fn push(&mut self, omega: u32, value: bool) {
        debug_assert_eq!(omega & !mask(self.width), 0, "constraint wider than system");
        self.constraints.push((omega & mask(self.width), value));
    }

    pub fn is_satisfied_by(&self, x: u32) -> bool {
        self.constraints.iter().all(|&(omega, c)| dot(x, omega) == c)
    }

    /// Gauss-Jordan elimination; inconsistent systems give the empty set.
    pub fn solve(&self) -> AffineSolutionSet {
        let width = self.width;
        let mut rows: Vec<(u32, bool)> = self.constraints.clone();
        let mut pivots: Vec<u32> = Vec::new();
        let mut rank = 0;
        for col in (0..width).rev() {
            let bit = 1u32 << col;
            let Some(found) = (rank..rows.len()).find(|&r| rows[r].0 & bit != 0) else {
                continue;
            };
            rows.swap(rank, found);
            let (prow, pc) = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.0 & bit != 0 {
                    row.0 ^= prow;
                    row.1 ^= pc;
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if rows[rank..].iter().any(|&(_, c)| c) {
            return AffineSolutionSet::empty(width);
        }

        let pivot_mask = pivots.iter().fold(0u32, |m, &c| m | (1 << c));
        let mut offset = 0u32;
        for (row, &col) in rows[..rank].iter().zip(&pivots) {
            if row.1 {
                offset |= 1 << col;
            }
        }
        let mut basis = Vec::new();
        for free in (0..width).filter(|c| pivot_mask & (1 << c) == 0) {
            let mut v = 1u32 << free;
            for (row, &col) in rows[..rank].iter().zip(&pivots) {
                if row.0 & (1 << free) != 0 {
                    v |= 1 << col;
                }
            }
            basis.push(v);
        }
        AffineSolutionSet::from_parts(width, offset, basis)
    }
}

/// Reduced row-echelon form of a list of vectors, pivots at the highest set
/// bit, sorted by descending pivot. Zero and dependent vectors are dropped.
fn reduced_echelon(vectors: &[u32]) -> Vec<u32> {
    let mut rows: Vec<u32> = Vec::new();
    for &v in vectors {
        let mut v = v;
        for &r in &rows {
            if v & top_bit(r) != 0 {
                v ^= r;
            }
        }
        if v == 0 {
            continue;
        }
        let pivot = top_bit(v);
        for r in rows.iter_mut() {
            if *r & pivot != 0 {
                *r ^= v;
            }
        }
        rows.push(v);
    }
    rows.sort_unstable_by(|a, b| b.cmp(a));
    rows
}

#[inline]
fn top_bit(v: u32) -> u32 {
    debug_assert!(v != 0);
    1u32 << (31 - v.leading_zeros())
}

/// The solution set of a GF(2) system: empty, or `offset + span(basis)`.
///
/// Canonical form: `basis` is in reduced row-echelon form with each vector's
/// pivot at its highest set bit, sorted by descending pivot, and `offset` is
/// zero at every pivot. Under this form `offset` is the smallest member and
/// members are ordered exactly like their coefficient vectors, so derived
/// equality is set equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineSolutionSet {
    width: u32,
    empty: bool,
    offset: u32,
    basis: Vec<u32>,
}

/// Result of [`AffineSolutionSet::enumerate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    /// The lexicographically smallest members, at most `cap` of them.
    pub members: Vec<u32>,
    /// Size of the whole set.
    pub total: u64,
}

impl AffineSolutionSet {
    pub fn empty(width: u32) -> Self {
        AffineSolutionSet { width, empty: true, offset: 0, basis: Vec::new() }
    }

    /// All of `{0,1}^width`.
    pub fn full(width: u32) -> Self {
        let basis = (0..width).rev().map(|c| 1u32 << c).collect();
        AffineSolutionSet { width, empty: false, offset: 0, basis }
    }

    pub fn from_parts(width: u32, offset: u32, basis: Vec<u32>) -> Self {
        let basis = reduced_echelon(&basis);
        let mut offset = offset & mask(width);
        for &b in &basis {
            if offset & top_bit(b) != 0 {
                offset ^= b;
            }
        }
        AffineSolutionSet { width, empty: false, offset, basis }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn offset(&self) -> Option<u32> {
        (!self.empty).then_some(self.offset)
    }

    pub fn basis(&self) -> &[u32] {
        &self.basis
    }

    /// `log2` of the set size; `None` for the empty set.
    pub fn dimension(&self) -> Option<u32> {
        (!self.empty).then_some(self.basis.len() as u32)
    }

    pub fn len(&self) -> u64 {
        if self.empty {
            0
        } else {
            1u64 << self.basis.len()
        }
    }

    /// True when the set is a subset of `{0}`.
    pub fn is_trivial(&self) -> bool {
        self.empty || (self.offset == 0 && self.basis.is_empty())
    }

    pub fn contains(&self, x: u32) -> bool {
        if self.empty || x & !mask(self.width) != 0 {
            return false;
        }
        let mut r = x ^ self.offset;
        for &b in &self.basis {
            if r & top_bit(b) != 0 {
                r ^= b;
            }
        }
        r == 0
    }

    /// Member selected by coefficient bits `index` (bit `k` of `index`
    /// multiplies the `k`-th smallest-pivot basis vector). Member order
    /// matches `index` order.
    fn member(&self, index: u64) -> u32 {
        let k = self.basis.len();
        let mut v = self.offset;
        for (i, &b) in self.basis.iter().enumerate() {
            if index >> (k - 1 - i) & 1 == 1 {
                v ^= b;
            }
        }
        v
    }

    /// Lexicographically smallest member; for the canonical form this is
    /// the offset.
    pub fn min(&self) -> Option<u32> {
        self.offset()
    }

    /// Lexicographically smallest nonzero member.
    pub fn min_nonzero(&self) -> Option<u32> {
        if self.empty {
            return None;
        }
        if self.offset != 0 {
            return Some(self.offset);
        }
        self.basis.last().copied()
    }

    /// The smallest `cap` members in increasing order plus the set size.
    pub fn enumerate(&self, cap: u64) -> Enumeration {
        let total = self.len();
        let members = (0..total.min(cap)).map(|i| self.member(i)).collect();
        Enumeration { members, total }
    }

    /// Every member, refusing when the set has more than `cap` of them.
    pub fn enumerate_all(&self, cap: u64) -> Result<Vec<u32>> {
        if self.len() > cap {
            return Err(Error::TooLarge { dimension: self.basis.len() as u32, cap });
        }
        Ok(self.enumerate(cap).members)
    }

    /// A system whose solution set is exactly `self`.
    pub fn defining_system(&self) -> Gf2System {
        let mut system = Gf2System { width: self.width, constraints: Vec::new() };
        if self.empty {
            system.push(0, true);
            return system;
        }
        let annihilator = Gf2System::uniform(self.width, &self.basis, false)
            .expect("width already validated")
            .solve();
        for &h in annihilator.basis() {
            system.push(h, dot(h, self.offset));
        }
        system
    }

    pub fn intersect(&self, other: &AffineSolutionSet) -> Result<AffineSolutionSet> {
        if self.width != other.width {
            return Err(Error::WidthMismatch { left: self.width, right: other.width });
        }
        if self.empty || other.empty {
            return Ok(Self::empty(self.width));
        }
        let mut system = self.defining_system();
        system.constraints.extend_from_slice(other.defining_system().constraints());
        Ok(system.solve())
    }
}

/// `{ x : x·ω takes one value for every ω in H }` and the pivot `ω₀ = H[0]`.
///
/// This is the union `A⁰ ∪ A¹` of the solution sets of `{x·ω = 0}` and
/// `{x·ω = 1}`, written as the single linear system `{x·(ω ⊕ ω₀) = 0}`. For
/// a member `a`, the common value is `a·ω₀`.
pub fn constancy_set(width: u32, h: &[u32]) -> Result<(AffineSolutionSet, u32)> {
    let &pivot = h.first().ok_or(Error::InvalidParameter("constancy set of an empty sample set"))?;
    let mut system = Gf2System::new(width)?;
    for &omega in h {
        system.push(omega ^ pivot, false);
    }
    Ok((system.solve(), pivot))
}
