//! Hand-built GDN heads and hard-attention lookups.
//!
//! A swap of coordinates `i` and `j` is a single GDN token with key
//! `(e_i − e_j)/√2`, zero value and `alpha = beta = 1` under negative
//! eigenvalues: the transition `I − 2kkᵀ` exchanges columns `i` and `j` of the
//! state. Five loading tokens `k = e_m, v = v_m` first write one value vector per
//! variable into the state columns, so after the swaps column `c` holds the
//! value of variable `c` and a query `e_c` reads it back.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::gdn::{ChunkConfig, GdnError, GdnHeadIO, GdnState};
use crate::linalg::{dot, norm2};
use crate::math::{abs, cos, round, sin};
use crate::perm::Permutation5;
use crate::tasks::{TaskError, TaskInstance, TaskKind};

/// Key dimension of the swap heads: one coordinate per variable.
pub const HEAD_DIM: usize = 5;

/// Largest distance from an integer tolerated when reading a discrete state.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-9;

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstructionError {
    #[error("transposition ({0}, {1}) needs two distinct indices below 5")]
    BadTransposition(usize, usize),
    #[error("state entry {value} is {deviation:e} away from an integer")]
    NonIntegral { value: f64, deviation: f64 },
    #[error("column {0} of the state is not one-hot")]
    NotOneHot(usize),
    #[error("binary pointers are only supported when the GDN layer comes first")]
    UnsupportedEncoding,
    #[error("expected a state_based_recall instance, got {0}")]
    WrongKind(TaskKind),
    #[error("hard-attention table must be non-empty with equal-length keys and values")]
    BadTable,
    #[error("decoded pointer {0} is outside the bit array")]
    PointerOutOfRange(usize),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Gdn(#[from] GdnError),
}

/// Parameters of the single-token GDN head that swaps coordinates `i` and `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TranspositionHead {
    pub i: usize,
    pub j: usize,
    pub k: [f64; HEAD_DIM],
    pub alpha: f64,
    pub beta: f64,
    pub neg_eigenvalues: bool,
}

impl TranspositionHead {
    /// The token for a head of key dimension `head_dim ≥ 5`, with zero query and value.
    pub fn token(&self, head_dim: usize) -> Result<GdnHeadIO, GdnError> {
        let mut k = vec![0.0; head_dim];
        k[..HEAD_DIM].copy_from_slice(&self.k);
        GdnHeadIO::new(vec![0.0; head_dim], k, vec![0.0; 2 * head_dim], self.alpha, self.beta)
    }
}

pub fn build_transposition_head(i: usize, j: usize) -> Result<TranspositionHead, ConstructionError> {
    if i == j || i >= HEAD_DIM || j >= HEAD_DIM {
        return Err(ConstructionError::BadTransposition(i, j));
    }
    let mut k = [0.0; HEAD_DIM];
    k[i] = FRAC_1_SQRT_2;
    k[j] = -FRAC_1_SQRT_2;
    Ok(TranspositionHead { i, j, k, alpha: 1.0, beta: 1.0, neg_eigenvalues: true })
}

fn swap_config() -> ChunkConfig {
    ChunkConfig { chunk_len: 64, neg_eigenvalues: true }
}

/// Loads one value per variable, applies the swaps and returns the final state.
fn run_swap_machine(
    head_dim: usize,
    loads: &[Vec<f64>; 5],
    swaps: &[(usize, usize)],
) -> Result<GdnState, ConstructionError> {
    let cfg = swap_config();
    let mut state = GdnState::zeros(head_dim);
    for (m, v) in loads.iter().enumerate() {
        let mut k = vec![0.0; head_dim];
        k[m] = 1.0;
        state.update(&GdnHeadIO::new(vec![0.0; head_dim], k, v.clone(), 1.0, 1.0)?, &cfg)?;
    }
    // One token per unordered pair, built on first use.
    let mut tokens: [Option<GdnHeadIO>; HEAD_DIM * HEAD_DIM] = core::array::from_fn(|_| None);
    for &(i, j) in swaps {
        let head = build_transposition_head(i, j)?;
        let slot = &mut tokens[i.min(j) * HEAD_DIM + i.max(j)];
        if slot.is_none() {
            *slot = Some(head.token(head_dim)?);
        }
        state.update(slot.as_ref().unwrap(), &cfg)?;
    }
    Ok(state)
}

fn read_column(state: &GdnState, c: usize) -> Vec<f64> {
    let mut q = vec![0.0; state.head_dim()];
    q[c] = 1.0;
    state.matrix().matvec(&q)
}

fn to_integer(x: f64) -> Result<i64, ConstructionError> {
    let r = round(x);
    let deviation = abs(x - r);
    if deviation > INTEGRALITY_TOLERANCE {
        return Err(ConstructionError::NonIntegral { value: x, deviation });
    }
    Ok(r as i64)
}

fn one_hot(m: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[m] = 1.0;
    v
}

/// Runs the swaps through GDN swap heads from the identity state and reads the
/// permutation off the state columns. The result is `(i₁ j₁) ∘ (i₂ j₂) ∘ …`.
pub fn compose_permutations_gdn(transpositions: &[(usize, usize)]) -> Result<Permutation5, ConstructionError> {
    let loads: [Vec<f64>; 5] = core::array::from_fn(|m| one_hot(m, 2 * HEAD_DIM));
    let state = run_swap_machine(HEAD_DIM, &loads, transpositions)?;
    let mut mapping = [0u8; 5];
    for (c, slot) in mapping.iter_mut().enumerate() {
        let col = read_column(&state, c);
        let mut hot = None;
        for (r, &x) in col.iter().enumerate() {
            match to_integer(x)? {
                0 => {}
                1 if hot.is_none() && r < HEAD_DIM => hot = Some(r),
                _ => return Err(ConstructionError::NotOneHot(c)),
            }
        }
        *slot = hot.ok_or(ConstructionError::NotOneHot(c))? as u8;
    }
    Ok(Permutation5::new(mapping).expect("one-hot columns of a swap product form a permutation"))
}

/// Parity of a bitstring: one `(0 1)` swap per set bit, then the position of element 0.
pub fn parity_gdn(bits: &[u8]) -> u8 {
    let swaps: Vec<(usize, usize)> = bits.iter().filter(|&&b| b != 0).map(|_| (0, 1)).collect();
    let p = compose_permutations_gdn(&swaps).expect("(0 1) is a valid transposition");
    (0..5).find(|&i| p.apply(i) == 0).unwrap() as u8
}

/// Averaging-hard attention over `(key, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct HardAttnTable {
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

impl HardAttnTable {
    pub fn new(keys: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> Result<Self, ConstructionError> {
        if keys.is_empty() || keys.len() != values.len() {
            return Err(ConstructionError::BadTable);
        }
        let kd = keys[0].len();
        let vd = values[0].len();
        if keys.iter().any(|k| k.len() != kd) || values.iter().any(|v| v.len() != vd) {
            return Err(ConstructionError::BadTable);
        }
        Ok(HardAttnTable { keys, values })
    }

    /// Table keyed by [`position_encoding`] for positions `0..values.len()`.
    pub fn positional(values: Vec<Vec<f64>>) -> Result<Self, ConstructionError> {
        let len = values.len();
        let keys = (0..len).map(|i| position_encoding(i, len).to_vec()).collect();
        Self::new(keys, values)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// `φ(i) = (cos θᵢ, sin θᵢ)` with `θᵢ = π i / len`, distinct for `i < len`.
pub fn position_encoding(i: usize, len: usize) -> [f64; 2] {
    let theta = PI * i as f64 / len.max(1) as f64;
    [cos(theta), sin(theta)]
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let n = norm2(x);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| v / n).collect()
}

/// Uniform average of the values whose normalized key has the largest dot
/// product with the normalized query.
pub fn hard_attention_retrieve(table: &HardAttnTable, query: &[f64]) -> Vec<f64> {
    let q = normalized(query);
    let scores: Vec<f64> = table.keys.iter().map(|k| dot(&normalized(k), &q)).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; table.values[0].len()];
    let mut count = 0usize;
    for (s, v) in scores.iter().zip(&table.values) {
        if *s == best {
            count += 1;
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
    }
    for o in &mut out {
        *o /= count as f64;
    }
    out
}

/// How pointer values are presented to the hybrid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PointerEncoding {
    /// A block of `m` cells whose first `p` entries are 1.
    #[default]
    Unary,
    /// Little-endian bits of `p`.
    Binary,
}

/// Which layer type comes first in the one-alternation hybrid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HybridOrder {
    GdnFirst,
    AttnFirst,
}

pub fn unary_block(p: usize, len: usize) -> Vec<f64> {
    (0..len).map(|i| if i < p { 1.0 } else { 0.0 }).collect()
}

/// Mean of a unary block, computed as attention with a constant key so that
/// every cell ties and the output is the uniform average `p / len`.
pub fn unary_mean(block: &[f64]) -> f64 {
    let keys = vec![vec![1.0]; block.len()];
    let values = block.iter().map(|&b| vec![b]).collect();
    let table = HardAttnTable::new(keys, values).expect("unary block is non-empty");
    hard_attention_retrieve(&table, &[1.0])[0]
}

fn binary_width(m: usize) -> usize {
    (usize::BITS - (m.max(2) - 1).leading_zeros()) as usize
}

fn binary_bits(p: usize, width: usize) -> Vec<f64> {
    (0..width).map(|b| ((p >> b) & 1) as f64).collect()
}

fn retrieve_bit(table: &HardAttnTable, p: usize, m: usize) -> Result<u8, ConstructionError> {
    let x = hard_attention_retrieve(table, &position_encoding(p, m))[0];
    Ok(to_integer(x)? as u8)
}

/// Answers a state-based recall instance with an idealized one-alternation hybrid.
///
/// `GdnFirst` carries each pointer's encoding through the swap heads, reads the
/// queried variable's pointer and looks the bit up with hard attention.
/// `AttnFirst` decodes the unary pointers and fetches `x_{p_k}` for every
/// variable, then carries the bits through the swap heads.
pub fn solve_state_based_recall(
    inst: &TaskInstance,
    order: HybridOrder,
    encoding: PointerEncoding,
) -> Result<u8, ConstructionError> {
    if inst.kind != TaskKind::StateBasedRecall {
        return Err(ConstructionError::WrongKind(inst.kind));
    }
    inst.validate()?;
    if order == HybridOrder::AttnFirst && encoding == PointerEncoding::Binary {
        return Err(ConstructionError::UnsupportedEncoding);
    }
    let m = inst.m;
    let swaps: Vec<(usize, usize)> = inst.swaps.iter().map(|&(i, j)| (i as usize, j as usize)).collect();
    let table = HardAttnTable::positional(inst.bits.iter().map(|&b| vec![b as f64]).collect())?;

    match order {
        HybridOrder::GdnFirst => {
            let width = match encoding {
                PointerEncoding::Unary => 1,
                PointerEncoding::Binary => binary_width(m),
            };
            let head_dim = HEAD_DIM.max(width.div_ceil(2));
            let loads: [Vec<f64>; 5] = core::array::from_fn(|v| {
                let mut value = vec![0.0; 2 * head_dim];
                let p = inst.pointers[v];
                match encoding {
                    PointerEncoding::Unary => value[0] = unary_mean(&unary_block(p, m)),
                    PointerEncoding::Binary => value[..width].copy_from_slice(&binary_bits(p, width)),
                }
                value
            });
            let state = run_swap_machine(head_dim, &loads, &swaps)?;
            let y = read_column(&state, inst.query_var);
            let p = match encoding {
                PointerEncoding::Unary => to_integer(y[0] * m as f64)?,
                PointerEncoding::Binary => {
                    let mut p = 0i64;
                    for (b, &x) in y[..width].iter().enumerate() {
                        p |= to_integer(x)? << b;
                    }
                    p
                }
            };
            let p = usize::try_from(p).map_err(|_| ConstructionError::PointerOutOfRange(0))?;
            if p >= m {
                return Err(ConstructionError::PointerOutOfRange(p));
            }
            retrieve_bit(&table, p, m)
        }
        HybridOrder::AttnFirst => {
            let mut loads: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; 2 * HEAD_DIM]);
            for (v, load) in loads.iter_mut().enumerate() {
                let mean = unary_mean(&unary_block(inst.pointers[v], m));
                let p = to_integer(mean * m as f64)? as usize;
                load[0] = retrieve_bit(&table, p, m)? as f64;
            }
            let state = run_swap_machine(HEAD_DIM, &loads, &swaps)?;
            let y = read_column(&state, inst.query_var);
            Ok(to_integer(y[0])? as u8)
        }
    }
}
