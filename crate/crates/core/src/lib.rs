//! Exact kernels and calculators for hybrid attention / gated delta-rule
//! sequence mixers.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core can be embedded
//! anywhere; file formats, the command line and thread pools live in the
//! `hybridlab` companion crate.
//!
//! Module map:
//!
//! * [`gdn`] - gated delta-rule recurrence with negative eigenvalues, in
//!   sequential and chunkwise (WY) form.
//! * [`perm`] - the symmetric group on five points.
//! * [`constructions`] - hand-built GDN and hard-attention components for
//!   parity, permutation composition and state-based recall.
//! * [`formula`] - Polish-notation boolean formulas compiled to width-5
//!   permutation programs and evaluated through the GDN composer.
//! * [`tasks`] - seeded synthetic task generators, oracles and text templates.
//! * [`quantmodel`] - the expressivity-aware quantization model of scaling.
//! * [`scalefit`] - Chinchilla-style scaling-law fitting and projections.
//! * [`archcount`] - parameter, FLOP and inference-state calculators.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod archcount;
pub mod constructions;
pub mod formula;
pub mod gdn;
pub mod linalg;
pub mod perm;
pub mod quantmodel;
pub mod scalefit;
pub mod tasks;

mod math;

pub use gdn::{ChunkConfig, GdnError, GdnHeadIO, GdnState};
pub use perm::Permutation5;

