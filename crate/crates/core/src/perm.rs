//! The symmetric group on five points.
//!
//! A [`Permutation5`] is stored as its image table: `mapping[i]` is where `i`
//! is sent. Composition is functional, `(p ∘ q)(i) = p(q(i))`, and products of
//! sequences are read left to right as `p₁ ∘ p₂ ∘ … ∘ pₙ`. Under this
//! convention, applying the swaps `(i, j)` of a program in order to the tuple
//! `(0, 1, 2, 3, 4)` leaves `mapping[i]` in slot `i`.

use alloc::vec::Vec;
use core::fmt;

/// Error for an image table that is not a bijection on `0..5`, or an invalid swap.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PermError {
    #[error("mapping {0:?} is not a permutation of 0..5")]
    NotBijective([u8; 5]),
    #[error("invalid transposition ({0}, {1}): indices must be distinct and below 5")]
    BadTransposition(usize, usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "[u8; 5]", into = "[u8; 5]"))]
pub struct Permutation5 {
    mapping: [u8; 5],
}

impl Permutation5 {
    pub const IDENTITY: Permutation5 = Permutation5 { mapping: [0, 1, 2, 3, 4] };

    /// The accepting 5-cycle `(0 1 2 3 4)`, sending `i` to `i + 1 mod 5`.
    pub const SIGMA: Permutation5 = Permutation5 { mapping: [1, 2, 3, 4, 0] };

    pub fn new(mapping: [u8; 5]) -> Result<Self, PermError> {
        let mut seen = [false; 5];
        for &x in &mapping {
            if x >= 5 || seen[x as usize] {
                return Err(PermError::NotBijective(mapping));
            }
            seen[x as usize] = true;
        }
        Ok(Permutation5 { mapping })
    }

    pub(crate) const fn new_unchecked(mapping: [u8; 5]) -> Self {
        Permutation5 { mapping }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn sigma() -> Self {
        Self::SIGMA
    }

    pub fn transposition(i: usize, j: usize) -> Result<Self, PermError> {
        if i == j || i >= 5 || j >= 5 {
            return Err(PermError::BadTransposition(i, j));
        }
        let mut m = Self::IDENTITY.mapping;
        m.swap(i, j);
        Ok(Permutation5 { mapping: m })
    }

    pub fn mapping(&self) -> [u8; 5] {
        self.mapping
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i] as usize
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Permutation5) -> Permutation5 {
        let mut m = [0u8; 5];
        for (i, slot) in m.iter_mut().enumerate() {
            *slot = self.mapping[other.mapping[i] as usize];
        }
        Permutation5 { mapping: m }
    }

    pub fn inverse(&self) -> Permutation5 {
        let mut m = [0u8; 5];
        for (i, &x) in self.mapping.iter().enumerate() {
            m[x as usize] = i as u8;
        }
        Permutation5 { mapping: m }
    }

    /// Right-multiplies by the transposition `(i j)`, i.e. swaps slots `i` and `j`.
    pub fn apply_swap(&mut self, i: usize, j: usize) {
        self.mapping.swap(i, j);
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Disjoint cycles of length at least two, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<u8>> {
        let mut seen = [false; 5];
        let mut out = Vec::new();
        for start in 0..5u8 {
            if seen[start as usize] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut x = start;
            while !seen[x as usize] {
                seen[x as usize] = true;
                cyc.push(x);
                x = self.mapping[x as usize];
            }
            if cyc.len() > 1 {
                out.push(cyc);
            }
        }
        out
    }

    /// Transpositions `t₁, …, t_k` with `t₁ ∘ … ∘ t_k = self` and `k = 5 − #cycles ≤ 4`.
    pub fn transpositions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for cyc in self.cycles() {
            for w in cyc.windows(2) {
                out.push((w[0] as usize, w[1] as usize));
            }
        }
        out
    }

    /// `+1` for even permutations, `-1` for odd ones.
    pub fn sign(&self) -> i8 {
        if self.transpositions().len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// All 120 elements in lexicographic order of their image tables.
    pub fn all() -> Vec<Permutation5> {
        let mut out = Vec::with_capacity(120);
        let mut m = [0u8, 1, 2, 3, 4];
        loop {
            out.push(Permutation5 { mapping: m });
            // next lexicographic permutation
            let Some(i) = (0..4).rev().find(|&i| m[i] < m[i + 1]) else {
                break;
            };
            let j = (i + 1..5).rev().find(|&j| m[j] > m[i]).unwrap();
            m.swap(i, j);
            m[i + 1..].reverse();
        }
        out
    }

    /// `p₁ ∘ p₂ ∘ … ∘ pₙ`; the identity for an empty sequence.
    pub fn product<'a, I: IntoIterator<Item = &'a Permutation5>>(items: I) -> Permutation5 {
        items
            .into_iter()
            .fold(Self::IDENTITY, |acc, p| acc.compose(p))
    }

    /// Composes a sequence of swaps, `(i₁ j₁) ∘ (i₂ j₂) ∘ …`, validating each.
    pub fn from_swaps(swaps: &[(usize, usize)]) -> Result<Permutation5, PermError> {
        let mut p = Self::IDENTITY;
        for &(i, j) in swaps {
            if i == j || i >= 5 || j >= 5 {
                return Err(PermError::BadTransposition(i, j));
            }
            p.apply_swap(i, j);
        }
        Ok(p)
    }
}

impl Default for Permutation5 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl TryFrom<[u8; 5]> for Permutation5 {
    type Error = PermError;
    fn try_from(m: [u8; 5]) -> Result<Self, PermError> {
        Permutation5::new(m)
    }
}

impl From<Permutation5> for [u8; 5] {
    fn from(p: Permutation5) -> [u8; 5] {
        p.mapping
    }
}

impl fmt::Debug for Permutation5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation5{:?}", self.mapping)
    }
}

impl fmt::Display for Permutation5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("()");
        }
        for c in cycles {
            f.write_str("(")?;
            for (n, x) in c.iter().enumerate() {
                if n > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}
