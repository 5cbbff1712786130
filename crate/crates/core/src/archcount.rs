//! Parameter, FLOP and state-size calculators for attention, GDN and Mamba2
//! layer stacks.
//!
//! Shapes: `d_MLP = ⌈4d⌉₂₅₆`, `h_GDN = ⌈0.75·d/h⌉₁₂₈` (unless overridden),
//! `k = h·h_GDN`, `v = 2k`; Mamba2 uses `e = expand·d`,
//! `c = e + 2·n·groups`, `p = e + c + h`. Totals count embedding, untied
//! head, every layer and the final norm; the non-embedding count drops only
//! the embedding table.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub const DEFAULT_VOCAB: usize = 100_352;
pub const DEFAULT_CHUNK_LEN: usize = 256;
pub const CONV_KERNEL: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArchError {
    #[error("{0} must be positive")]
    Zero(&'static str),
    #[error("schedule has {got} layers but l = {l}")]
    ScheduleLength { got: usize, l: usize },
    #[error("d = {d} is not divisible by h = {h}")]
    HeadsDoNotDivide { d: usize, h: usize },
    #[error("interleave ratio must be at least 1")]
    BadRatio,
    #[error("unknown layer kind {0:?}")]
    UnknownKind(alloc::string::String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LayerKind {
    Attention,
    Gdn,
    Mamba2,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Attention => "attention",
            LayerKind::Gdn => "gdn",
            LayerKind::Mamba2 => "mamba2",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayerKind {
    type Err = ArchError;
    fn from_str(s: &str) -> Result<Self, ArchError> {
        match s {
            "attention" | "attn" => Ok(LayerKind::Attention),
            "gdn" => Ok(LayerKind::Gdn),
            "mamba2" => Ok(LayerKind::Mamba2),
            _ => Err(ArchError::UnknownKind(s.into())),
        }
    }
}

/// Layer placement.
///
/// `Interleaved { ratio: r, .. }` puts attention at every r-th layer
/// (1-indexed), so r = 4 is a 3:1 hybrid. `Middle` centres a block of
/// `l / ratio` attention layers and adds one at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Schedule {
    Layers(Vec<LayerKind>),
    Pure(LayerKind),
    Interleaved {
        ratio: usize,
        linear: LayerKind,
        #[cfg_attr(feature = "serde", serde(default = "yes"))]
        force_final_attention: bool,
    },
    Middle {
        ratio: usize,
        linear: LayerKind,
    },
}

#[cfg(feature = "serde")]
fn yes() -> bool {
    true
}

impl Schedule {
    pub fn expand(&self, l: usize) -> Result<Vec<LayerKind>, ArchError> {
        let layers = match self {
            Schedule::Layers(v) => v.clone(),
            Schedule::Pure(k) => alloc::vec![*k; l],
            Schedule::Interleaved {
                ratio,
                linear,
                force_final_attention,
            } => {
                if *ratio == 0 {
                    return Err(ArchError::BadRatio);
                }
                let mut v: Vec<LayerKind> = (1..=l)
                    .map(|i| {
                        if i % ratio == 0 {
                            LayerKind::Attention
                        } else {
                            *linear
                        }
                    })
                    .collect();
                if *force_final_attention && l > 0 {
                    v[l - 1] = LayerKind::Attention;
                }
                v
            }
            Schedule::Middle { ratio, linear } => {
                if *ratio == 0 {
                    return Err(ArchError::BadRatio);
                }
                let block = l / ratio;
                let start = (l - block) / 2;
                let mut v = alloc::vec![*linear; l];
                for slot in &mut v[start..start + block] {
                    *slot = LayerKind::Attention;
                }
                if l > 0 {
                    v[l - 1] = LayerKind::Attention;
                }
                v
            }
        };
        if layers.len() != l {
            return Err(ArchError::ScheduleLength { got: layers.len(), l });
        }
        Ok(layers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MambaConfig {
    pub expand: usize,
    pub state: usize,
    pub groups: usize,
}

impl Default for MambaConfig {
    fn default() -> Self {
        MambaConfig {
            expand: 2,
            state: 128,
            groups: 1,
        }
    }
}

/// Explicit GDN key/value head widths, as in the 7B release (96 / 192).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GdnHeadDims {
    pub d_k: usize,
    pub d_v: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArchSpec {
    pub d: usize,
    pub h: usize,
    pub l: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_vocab"))]
    pub vocab: usize,
    pub schedule: Schedule,
    #[cfg_attr(feature = "serde", serde(default))]
    pub h_gdn_override: Option<GdnHeadDims>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mamba: MambaConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seq_len: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_chunk"))]
    pub chunk_len: usize,
}

#[cfg(feature = "serde")]
fn default_vocab() -> usize {
    DEFAULT_VOCAB
}

#[cfg(feature = "serde")]
fn default_chunk() -> usize {
    DEFAULT_CHUNK_LEN
}

fn round_up(x: usize, m: usize) -> usize {
    x.div_ceil(m) * m
}

impl ArchSpec {
    pub fn new(d: usize, h: usize, l: usize, schedule: Schedule) -> Self {
        ArchSpec {
            d,
            h,
            l,
            vocab: DEFAULT_VOCAB,
            schedule,
            h_gdn_override: None,
            mamba: MambaConfig::default(),
            seq_len: 0,
            chunk_len: DEFAULT_CHUNK_LEN,
        }
    }

    pub fn with_seq_len(mut self, s: usize) -> Self {
        self.seq_len = s;
        self
    }

    pub fn layers(&self) -> Result<Vec<LayerKind>, ArchError> {
        for (name, v) in [("d", self.d), ("h", self.h), ("l", self.l), ("vocab", self.vocab)] {
            if v == 0 {
                return Err(ArchError::Zero(name));
            }
        }
        let layers = self.schedule.expand(self.l)?;
        if layers.contains(&LayerKind::Attention) && !self.d.is_multiple_of(self.h) {
            return Err(ArchError::HeadsDoNotDivide { d: self.d, h: self.h });
        }
        if layers.contains(&LayerKind::Mamba2) {
            for (name, v) in [
                ("mamba.expand", self.mamba.expand),
                ("mamba.state", self.mamba.state),
                ("mamba.groups", self.mamba.groups),
            ] {
                if v == 0 {
                    return Err(ArchError::Zero(name));
                }
            }
        }
        if let Some(o) = self.h_gdn_override {
            if o.d_k == 0 || o.d_v == 0 {
                return Err(ArchError::Zero("h_gdn_override"));
            }
        }
        Ok(layers)
    }

    pub fn d_mlp(&self) -> usize {
        round_up(4 * self.d, 256)
    }

    pub fn h_gdn(&self) -> usize {
        match self.h_gdn_override {
            Some(o) => o.d_k,
            None => round_up((3 * self.d).div_ceil(4 * self.h), 128),
        }
    }

    /// Total key width `k` of a GDN layer.
    pub fn gdn_k(&self) -> usize {
        self.h * self.h_gdn()
    }

    /// Total value width `v` of a GDN layer.
    pub fn gdn_v(&self) -> usize {
        match self.h_gdn_override {
            Some(o) => self.h * o.d_v,
            None => 2 * self.gdn_k(),
        }
    }

    fn mamba_dims(&self) -> (usize, usize, usize) {
        let e = self.mamba.expand * self.d;
        let c = e + 2 * self.mamba.state * self.mamba.groups;
        let p = e + c + self.h;
        (e, c, p)
    }

    fn mlp_params(&self) -> usize {
        3 * self.d * self.d_mlp() + 2 * self.d
    }

    pub fn layer_params(&self, kind: LayerKind) -> usize {
        let d = self.d;
        let h = self.h;
        match kind {
            LayerKind::Attention => 4 * d * d + 2 * d + self.mlp_params(),
            LayerKind::Gdn => {
                let (k, v) = (self.gdn_k(), self.gdn_v());
                d * (2 * k + v + 2 * h)
                    + 2 * h
                    + CONV_KERNEL * (2 * k + v)
                    + d * v
                    + v
                    + v * d
                    + self.mlp_params()
            }
            LayerKind::Mamba2 => {
                let (e, c, p) = self.mamba_dims();
                d * p + p + CONV_KERNEL * c + 3 * h + e + e * d + d + self.mlp_params()
            }
        }
    }

    fn recurrence_macs(&self, kind: LayerKind) -> f64 {
        match kind {
            LayerKind::Attention => 0.0,
            LayerKind::Gdn => {
                let hg = self.h_gdn() as f64;
                let dv = (self.gdn_v() / self.h) as f64;
                3.0 * self.h as f64 * hg * dv
            }
            LayerKind::Mamba2 => {
                let (e, _, _) = self.mamba_dims();
                2.0 * e as f64 * self.mamba.state as f64
            }
        }
    }

    /// Multiply-accumulates per token for one layer.
    pub fn layer_macs(&self, kind: LayerKind, train: bool, softmax: bool) -> f64 {
        let d = self.d as f64;
        let mlp = 3.0 * d * self.d_mlp() as f64;
        let lc = self.chunk_len as f64;
        match kind {
            LayerKind::Attention => {
                let s_eff = self.seq_len as f64 / 2.0;
                let mut m = 4.0 * d * d + 2.0 * d * s_eff + mlp;
                if softmax {
                    m += 2.5 * self.h as f64 * s_eff;
                }
                m
            }
            LayerKind::Gdn => {
                let (k, v) = (self.gdn_k() as f64, self.gdn_v() as f64);
                let h = self.h as f64;
                let base = d * (2.0 * k + v + 2.0 * h)
                    + CONV_KERNEL as f64 * (2.0 * k + v)
                    + 2.0 * d * v
                    + mlp;
                if train {
                    base + lc * (3.0 * k + 2.0 * v) + 3.0 * k * v / h
                } else {
                    base + self.recurrence_macs(kind)
                }
            }
            LayerKind::Mamba2 => {
                let (e, c, p) = self.mamba_dims();
                let (e, c, p) = (e as f64, c as f64, p as f64);
                let n = self.mamba.state as f64;
                let base = d * p + CONV_KERNEL as f64 * c + e * d + mlp;
                if train {
                    base + 2.0 * lc * e + 2.0 * e * n
                } else {
                    base + self.recurrence_macs(kind)
                }
            }
        }
    }
}

/// Which per-layer MAC formula each recurrent layer uses. Attention layers
/// always use the same formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FlopMode {
    /// Every layer in its recurrent (inference) form.
    AttnRecurrentMix,
    GdnRecurrent,
    GdnChunkwiseTrain,
    Mamba2Recurrent,
    Mamba2ChunkwiseTrain,
}

impl FlopMode {
    pub const ALL: [FlopMode; 5] = [
        FlopMode::AttnRecurrentMix,
        FlopMode::GdnRecurrent,
        FlopMode::GdnChunkwiseTrain,
        FlopMode::Mamba2Recurrent,
        FlopMode::Mamba2ChunkwiseTrain,
    ];

    /// The mode that puts every recurrent layer kind in `layers` in its
    /// chunkwise training form.
    pub fn train_for(layers: &[LayerKind]) -> FlopMode {
        if layers.contains(&LayerKind::Mamba2) && !layers.contains(&LayerKind::Gdn) {
            FlopMode::Mamba2ChunkwiseTrain
        } else {
            FlopMode::GdnChunkwiseTrain
        }
    }

    fn is_train(self, kind: LayerKind) -> bool {
        matches!(
            (self, kind),
            (FlopMode::GdnChunkwiseTrain, LayerKind::Gdn)
                | (FlopMode::Mamba2ChunkwiseTrain, LayerKind::Mamba2)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FlopMode::AttnRecurrentMix => "attn_recurrent_mix",
            FlopMode::GdnRecurrent => "gdn_recurrent",
            FlopMode::GdnChunkwiseTrain => "gdn_chunkwise_train",
            FlopMode::Mamba2Recurrent => "mamba2_recurrent",
            FlopMode::Mamba2ChunkwiseTrain => "mamba2_chunkwise_train",
        }
    }
}

impl FromStr for FlopMode {
    type Err = alloc::string::String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FlopMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown flop mode {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerCount {
    pub index: usize,
    pub kind: LayerKind,
    pub params: usize,
    pub macs: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountReport {
    pub total_params: usize,
    pub non_embedding_params: usize,
    pub embedding_params: usize,
    pub head_params: usize,
    pub final_norm_params: usize,
    pub layers: Vec<LayerCount>,
    pub flop_mode: FlopMode,
    pub softmax: bool,
    /// `2·(d·V + Σ M)`.
    pub flops_fwd_per_token: f64,
    /// Analytic `3·F·D` when a token count was supplied.
    pub train_compute: Option<f64>,
}

impl CountReport {
    pub fn layer_params(&self) -> usize {
        self.layers.iter().map(|c| c.params).sum()
    }
}

pub fn count_params(spec: &ArchSpec) -> Result<CountReport, ArchError> {
    let layers = spec.layers()?;
    let mode = FlopMode::train_for(&layers);
    count_with(spec, mode, false, None)
}

/// Full report in a chosen FLOP mode, with analytic training compute for
/// `tokens` if given.
pub fn count_with(
    spec: &ArchSpec,
    mode: FlopMode,
    softmax: bool,
    tokens: Option<f64>,
) -> Result<CountReport, ArchError> {
    let layers = spec.layers()?;
    let per_layer: Vec<LayerCount> = layers
        .iter()
        .enumerate()
        .map(|(index, &kind)| LayerCount {
            index,
            kind,
            params: spec.layer_params(kind),
            macs: spec.layer_macs(kind, mode.is_train(kind), softmax),
        })
        .collect();
    let emb = spec.vocab * spec.d;
    let layer_sum: usize = per_layer.iter().map(|c| c.params).sum();
    let total = emb + emb + layer_sum + spec.d;
    let flops = flops_from(spec, &per_layer);
    Ok(CountReport {
        total_params: total,
        non_embedding_params: total - emb,
        embedding_params: emb,
        head_params: emb,
        final_norm_params: spec.d,
        layers: per_layer,
        flop_mode: mode,
        softmax,
        flops_fwd_per_token: flops,
        train_compute: tokens.map(|t| 3.0 * flops * t),
    })
}

fn flops_from(spec: &ArchSpec, layers: &[LayerCount]) -> f64 {
    let macs: f64 = layers.iter().map(|c| c.macs).sum();
    2.0 * ((spec.d * spec.vocab) as f64 + macs)
}

/// Forward FLOPs per token, `2·(d·V + Σ M_layer)`.
pub fn flops_per_token(spec: &ArchSpec, mode: FlopMode, softmax: bool) -> Result<f64, ArchError> {
    Ok(count_with(spec, mode, softmax, None)?.flops_fwd_per_token)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ComputeConvention {
    /// `3·F·D` with chunkwise-train FLOPs.
    Analytic,
    /// `6·N·D` with the non-embedding parameter count.
    Heuristic6ND,
}

pub fn train_compute(spec: &ArchSpec, tokens: f64, convention: ComputeConvention) -> Result<f64, ArchError> {
    let layers = spec.layers()?;
    match convention {
        ComputeConvention::Analytic => {
            Ok(3.0 * flops_per_token(spec, FlopMode::train_for(&layers), false)? * tokens)
        }
        ComputeConvention::Heuristic6ND => {
            Ok(heuristic_compute(count_params(spec)?.non_embedding_params as f64, tokens))
        }
    }
}

/// `6·N·D`; pass active parameters for mixture-of-experts models.
pub fn heuristic_compute(n: f64, tokens: f64) -> f64 {
    6.0 * n * tokens
}

/// Per-layer inference state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum StateLayer {
    Mha { seq_len: usize, kv_heads: usize, d_head: usize },
    Gqa { seq_len: usize, kv_heads: usize, d_head: usize },
    Swa { window: usize, kv_heads: usize, d_head: usize },
    Gdn { heads: usize, d_k: usize, d_v: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateSize {
    pub elements: u64,
    pub bytes: u64,
}

impl StateSize {
    pub fn mib(&self) -> f64 {
        self.bytes as f64 / (1024.0 * 1024.0)
    }
}

pub fn state_size(layer: StateLayer, precision_bytes: u64) -> Result<StateSize, ArchError> {
    let dims: [(&'static str, usize); 3] = match layer {
        StateLayer::Mha { seq_len, kv_heads, d_head } | StateLayer::Gqa { seq_len, kv_heads, d_head } => {
            [("seq_len", seq_len), ("kv_heads", kv_heads), ("d_head", d_head)]
        }
        StateLayer::Swa { window, kv_heads, d_head } => {
            [("window", window), ("kv_heads", kv_heads), ("d_head", d_head)]
        }
        StateLayer::Gdn { heads, d_k, d_v } => [("heads", heads), ("d_k", d_k), ("d_v", d_v)],
    };
    for (name, v) in dims {
        if v == 0 {
            return Err(ArchError::Zero(name));
        }
    }
    if precision_bytes == 0 {
        return Err(ArchError::Zero("precision_bytes"));
    }
    let prod: u64 = dims.iter().map(|&(_, v)| v as u64).product();
    let elements = match layer {
        StateLayer::Gdn { .. } => prod,
        _ => 2 * prod,
    };
    Ok(StateSize {
        elements,
        bytes: elements * precision_bytes,
    })
}

/// The seven ablation-ladder shapes `(d, h, l)`.
pub const LADDER: [(usize, usize, usize); 7] = [
    (384, 8, 8),
    (512, 8, 12),
    (768, 12, 12),
    (1024, 16, 16),
    (1280, 16, 16),
    (1536, 16, 16),
    (2048, 16, 16),
];
