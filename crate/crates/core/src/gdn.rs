//! Gated delta-rule recurrence with the negative-eigenvalue extension.
//!
//! For head dimension `d`, every token carries `q, k ∈ R^d` (with `‖k‖ = 1`),
//! `v ∈ R^{2d}` and scalars `alpha, beta`. The state `S ∈ R^{2d×d}` starts at
//! zero and evolves as
//!
//! ```text
//! S_t = S_{t-1} · alpha_t (I − c·beta_t k_t k_tᵀ) + v_t k_tᵀ
//! y_t = S_t q_t
//! ```
//!
//! where `c = 2` when negative eigenvalues are enabled and `c = 1` for the
//! classic gated delta rule. With `c = 2, beta = 1, alpha = 1` the transition
//! is a Householder reflection, which is how a single token swaps two state
//! coordinates.
//!
//! The rank-one term is evaluated as `k kᵀ / ‖k‖²`. Keys are unit vectors up
//! to rounding, and dividing by the computed squared norm keeps reflections
//! such as `k = (e_i − e_j)/√2` exact in floating point.
//!
//! Two evaluators are provided: [`gdn_scan`] folds [`gdn_step`] token by
//! token, and [`gdn_chunkwise`] evaluates blocks of `chunk_len` tokens with a
//! WY-style factorization and hands the state from one block to the next.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, norm2, Matrix};
use crate::math;

/// Largest tolerated deviation of `‖k‖₂` from one.
pub const KEY_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GdnError {
    #[error("key must have unit norm, |‖k‖ - 1| = {deviation:e}")]
    NonUnitKey { deviation: f64 },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{name} = {value} is outside its admissible range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("chunk length must be at least 1")]
    ZeroChunk,
}

/// Per-token inputs of one GDN head.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "RawHeadIO", into = "RawHeadIO")
)]
pub struct GdnHeadIO {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    alpha: f64,
    beta: f64,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct RawHeadIO {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    alpha: f64,
    beta: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<RawHeadIO> for GdnHeadIO {
    type Error = GdnError;

    fn try_from(raw: RawHeadIO) -> Result<Self, GdnError> {
        GdnHeadIO::new(raw.q, raw.k, raw.v, raw.alpha, raw.beta)
    }
}

#[cfg(feature = "serde")]
impl From<GdnHeadIO> for RawHeadIO {
    fn from(io: GdnHeadIO) -> Self {
        RawHeadIO {
            q: io.q,
            k: io.k,
            v: io.v,
            alpha: io.alpha,
            beta: io.beta,
        }
    }
}

impl GdnHeadIO {
    /// Validates and builds a token. `alpha ∈ (0, 1]`, `beta ∈ [0, 1]`; the
    /// closed upper ends are what the exact constructions need.
    pub fn new(q: Vec<f64>, k: Vec<f64>, v: Vec<f64>, alpha: f64, beta: f64) -> Result<Self, GdnError> {
        let d = k.len();
        if q.len() != d {
            return Err(GdnError::DimensionMismatch {
                what: "query",
                expected: d,
                found: q.len(),
            });
        }
        if v.len() != 2 * d {
            return Err(GdnError::DimensionMismatch {
                what: "value",
                expected: 2 * d,
                found: v.len(),
            });
        }
        check_unit(&k)?;
        check_gates(alpha, beta)?;
        Ok(Self { q, k, v, alpha, beta })
    }

    pub fn head_dim(&self) -> usize {
        self.k.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn check_unit(k: &[f64]) -> Result<(), GdnError> {
    let deviation = math::abs(norm2(k) - 1.0);
    // NaN compares false, so spell the accept condition positively.
    if deviation <= KEY_NORM_TOLERANCE {
        Ok(())
    } else {
        Err(GdnError::NonUnitKey { deviation })
    }
}

fn check_gates(alpha: f64, beta: f64) -> Result<(), GdnError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GdnError::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(GdnError::OutOfRange {
            name: "beta",
            value: beta,
            range: "[0, 1]",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChunkConfig {
    pub chunk_len: usize,
    pub neg_eigenvalues: bool,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_len: 64,
            neg_eigenvalues: true,
        }
    }
}

impl ChunkConfig {
    pub fn with_chunk_len(chunk_len: usize) -> Self {
        Self {
            chunk_len,
            ..Self::default()
        }
    }

    /// Multiplier on `beta` in the rank-one term.
    pub fn beta_scale(&self) -> f64 {
        if self.neg_eigenvalues {
            2.0
        } else {
            1.0
        }
    }
}

/// The `2d × d` recurrent state of one head.
#[derive(Debug, Clone, PartialEq)]
pub struct GdnState {
    s: Matrix,
    d: usize,
}

impl GdnState {
    pub fn zeros(d: usize) -> Self {
        Self {
            s: Matrix::zeros(2 * d, d),
            d,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    fn check_io(&self, io: &GdnHeadIO) -> Result<(), GdnError> {
        if io.head_dim() != self.d {
            return Err(GdnError::DimensionMismatch {
                what: "token head dimension",
                expected: self.d,
                found: io.head_dim(),
            });
        }
        Ok(())
    }

    /// Advances the state by one token in place and returns `y = S q`.
    pub fn advance(&mut self, io: &GdnHeadIO, cfg: &ChunkConfig) -> Result<Vec<f64>, GdnError> {
        self.update(io, cfg)?;
        Ok(self.s.matvec(&io.q))
    }

    /// [`advance`](Self::advance) without computing the output.
    pub fn update(&mut self, io: &GdnHeadIO, cfg: &ChunkConfig) -> Result<(), GdnError> {
        self.check_io(io)?;
        let scale = cfg.beta_scale() * io.beta;
        let nsq = dot(&io.k, &io.k);
        let sk = self.s.matvec(&io.k);
        for r in 0..2 * self.d {
            let skr = sk[r];
            let vr = io.v[r];
            for (c, x) in self.s.row_mut(r).iter_mut().enumerate() {
                let kc = io.k[c];
                *x = io.alpha * (*x - skr * kc * scale / nsq) + vr * kc;
            }
        }
        Ok(())
    }
}

/// `alpha · (I − c·beta·k kᵀ)` with `c = 2` when `neg` is set.
pub fn transition_matrix(k: &[f64], beta: f64, alpha: f64, neg: bool) -> Result<Matrix, GdnError> {
    check_unit(k)?;
    check_gates(alpha, beta)?;
    let c = if neg { 2.0 } else { 1.0 };
    let d = k.len();
    let nsq = dot(k, k);
    let mut m = Matrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = alpha * (m[(i, j)] - k[i] * k[j] * c * beta / nsq);
        }
    }
    Ok(m)
}

/// One recurrence step; the input state is left untouched.
pub fn gdn_step(state: &GdnState, io: &GdnHeadIO, cfg: &ChunkConfig) -> Result<(GdnState, Vec<f64>), GdnError> {
    let mut next = state.clone();
    let y = next.advance(io, cfg)?;
    Ok((next, y))
}

fn sequence_dim(seq: &[GdnHeadIO]) -> Result<Option<usize>, GdnError> {
    let Some(first) = seq.first() else {
        return Ok(None);
    };
    let d = first.head_dim();
    for io in seq {
        if io.head_dim() != d {
            return Err(GdnError::DimensionMismatch {
                what: "sequence head dimension",
                expected: d,
                found: io.head_dim(),
            });
        }
    }
    Ok(Some(d))
}

/// Sequential evaluation from the zero state.
pub fn gdn_scan(seq: &[GdnHeadIO], cfg: &ChunkConfig) -> Result<Vec<Vec<f64>>, GdnError> {
    match sequence_dim(seq)? {
        None => Ok(Vec::new()),
        Some(d) => gdn_scan_from(GdnState::zeros(d), seq, cfg).map(|(ys, _)| ys),
    }
}

/// Sequential evaluation from an arbitrary state; returns outputs and the
/// final state.
pub fn gdn_scan_from(
    mut state: GdnState,
    seq: &[GdnHeadIO],
    cfg: &ChunkConfig,
) -> Result<(Vec<Vec<f64>>, GdnState), GdnError> {
    let mut ys = Vec::with_capacity(seq.len());
    for io in seq {
        ys.push(state.advance(io, cfg)?);
    }
    Ok((ys, state))
}

/// Chunkwise-parallel evaluation from the zero state.
pub fn gdn_chunkwise(seq: &[GdnHeadIO], cfg: &ChunkConfig) -> Result<Vec<Vec<f64>>, GdnError> {
    match sequence_dim(seq)? {
        None => {
            if cfg.chunk_len == 0 {
                return Err(GdnError::ZeroChunk);
            }
            Ok(Vec::new())
        }
        Some(d) => gdn_chunkwise_from(GdnState::zeros(d), seq, cfg).map(|(ys, _)| ys),
    }
}

/// Chunkwise evaluation from an arbitrary state.
///
/// Inside a chunk, write `b_t = c·beta_t / ‖k_t‖²` and `g_t = Σ_{r≤t} ln alpha_r`.
/// The recurrence is `S_t = alpha_t S_{t-1} + u_t k_tᵀ` with the corrected
/// value `u_t = v_t − alpha_t b_t S_{t-1} k_t`. Unrolling gives the lower
/// triangular system
///
/// ```text
/// u_t + Σ_{s<t} b_t e^{g_t − g_s} (k_t·k_s) u_s = v_t − b_t e^{g_t} S_0 k_t
/// ```
///
/// whose solution splits into `u_t = ũ_t − S_0 w_t` (`ũ` from the values,
/// `w` from the keys). Outputs and the outgoing state are then
/// `y_t = e^{g_t} S_0 q_t + Σ_{s≤t} e^{g_t − g_s}(k_s·q_t) u_s` and
/// `S_L = e^{g_L} S_0 + Σ_s e^{g_L − g_s} u_s k_sᵀ`.
pub fn gdn_chunkwise_from(
    mut state: GdnState,
    seq: &[GdnHeadIO],
    cfg: &ChunkConfig,
) -> Result<(Vec<Vec<f64>>, GdnState), GdnError> {
    if cfg.chunk_len == 0 {
        return Err(GdnError::ZeroChunk);
    }
    for io in seq {
        state.check_io(io)?;
    }
    let mut ys = Vec::with_capacity(seq.len());
    for chunk in seq.chunks(cfg.chunk_len) {
        process_chunk(&mut state, chunk, cfg, &mut ys);
    }
    Ok((ys, state))
}

fn process_chunk(state: &mut GdnState, chunk: &[GdnHeadIO], cfg: &ChunkConfig, ys: &mut Vec<Vec<f64>>) {
    let d = state.d;
    let dv = 2 * d;
    let len = chunk.len();
    let scale = cfg.beta_scale();

    let mut g = Vec::with_capacity(len);
    let mut acc = 0.0;
    for io in chunk {
        acc += math::ln(io.alpha);
        g.push(acc);
    }
    let b: Vec<f64> = chunk.iter().map(|io| scale * io.beta / dot(&io.k, &io.k)).collect();

    // Strictly lower-triangular coupling, row-major `len × len`.
    let mut coupling = vec![0.0; len * len];
    for t in 0..len {
        for s in 0..t {
            coupling[t * len + s] = b[t] * math::exp(g[t] - g[s]) * dot(&chunk[t].k, &chunk[s].k);
        }
    }

    // Forward substitution for ũ (values) and w (keys).
    let mut u = Matrix::zeros(len, dv);
    let mut w = Matrix::zeros(len, d);
    for t in 0..len {
        let gamma = math::exp(g[t]);
        {
            let row = u.row_mut(t);
            row.copy_from_slice(&chunk[t].v);
        }
        {
            let row = w.row_mut(t);
            for (x, kc) in row.iter_mut().zip(&chunk[t].k) {
                *x = b[t] * gamma * kc;
            }
        }
        for s in 0..t {
            let m = coupling[t * len + s];
            if m == 0.0 {
                continue;
            }
            let (done, rest) = split_rows(&mut u, s, t);
            for (x, y) in rest.iter_mut().zip(done) {
                *x -= m * y;
            }
            let (done, rest) = split_rows(&mut w, s, t);
            for (x, y) in rest.iter_mut().zip(done) {
                *x -= m * y;
            }
        }
    }

    // u_t = ũ_t − S_0 w_t
    let s0 = &state.s;
    for t in 0..len {
        let sw = s0.matvec(w.row(t));
        for (x, y) in u.row_mut(t).iter_mut().zip(&sw) {
            *x -= y;
        }
    }

    for t in 0..len {
        let gamma = math::exp(g[t]);
        let mut y: Vec<f64> = s0.matvec(&chunk[t].q).into_iter().map(|x| gamma * x).collect();
        for s in 0..=t {
            let coeff = math::exp(g[t] - g[s]) * dot(&chunk[s].k, &chunk[t].q);
            if coeff == 0.0 {
                continue;
            }
            for (o, us) in y.iter_mut().zip(u.row(s)) {
                *o += coeff * us;
            }
        }
        ys.push(y);
    }

    let g_last = g[len - 1];
    let gamma_last = math::exp(g_last);
    let mut next = Matrix::zeros(dv, d);
    for r in 0..dv {
        let dst = next.row_mut(r);
        for (x, src) in dst.iter_mut().zip(s0.row(r)) {
            *x = gamma_last * src;
        }
    }
    for s in 0..len {
        let decay = math::exp(g_last - g[s]);
        let us = u.row(s);
        for r in 0..dv {
            let coeff = decay * us[r];
            if coeff == 0.0 {
                continue;
            }
            for (x, kc) in next.row_mut(r).iter_mut().zip(&chunk[s].k) {
                *x += coeff * kc;
            }
        }
    }
    state.s = next;
}

/// Borrows row `done` immutably and row `target` mutably (`done < target`).
fn split_rows(m: &mut Matrix, done: usize, target: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(done < target);
    let cols = m.cols();
    let (head, tail) = m.as_mut_slice().split_at_mut(target * cols);
    (&head[done * cols..(done + 1) * cols], &mut tail[..cols])
}

/// Seeded random sequence: unit keys, `q` and `v` entries uniform in
/// `[-1, 1]`, `alpha ∈ [0.8, 1]`, `beta ∈ [0, 1]`.
pub fn random_sequence(d: usize, len: usize, seed: u64) -> Vec<GdnHeadIO> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let k = loop {
                let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = norm2(&raw);
                if n > 1e-3 {
                    break raw.iter().map(|x| x / n).collect();
                }
            };
            let q = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = (0..2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (alpha, beta) = (rng.gen_range(0.8..=1.0), rng.gen_range(0.0..=1.0));
            GdnHeadIO::new(q, k, v, alpha, beta).expect("sampled token is valid")
        })
        .collect()
}

/// Largest absolute entrywise difference between two output sequences; NaN
/// if either side has one.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, |m: f64, x| if m.is_nan() || x.is_nan() { f64::NAN } else { m.max(x) })
}
