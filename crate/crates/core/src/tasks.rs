//! Seeded generators for the three synthetic code-evaluation tasks.
//!
//! * **recall** - `bits = [...]`, a single index variable, `assert bits[a] == `.
//! * **state tracking** - five variables start as `range(5)` and are permuted by
//!   swap statements; the query asks for one variable's final value.
//! * **state-based recall** - the variables start as pointers into `bits`, are
//!   swapped, and the query dereferences one of them.
//!
//! Every instance is a pure function of `(kind, n, m, seed)`. Rendering adds
//! optional `assert (a, b, c, d, e) == (...)` reveals of the intermediate state;
//! [`parse_text`] inverts [`render_text`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::perm::Permutation5;

pub const VARIABLES: [char; 5] = ['a', 'b', 'c', 'd', 'e'];

/// Default difficulty grid for `n` and `m`.
pub const DEFAULT_GRID: [usize; 6] = [4, 8, 16, 32, 64, 128];

pub const DEFAULT_STRICT_FRACTION: f64 = 0.2;

/// The ten unordered variable pairs in lexicographic order.
pub const PAIRS: [(u8, u8); 10] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
    (3, 4),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TaskKind {
    StateTracking,
    Recall,
    StateBasedRecall,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::StateTracking, TaskKind::Recall, TaskKind::StateBasedRecall];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::StateTracking => "state_tracking",
            TaskKind::Recall => "recall",
            TaskKind::StateBasedRecall => "state_based_recall",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;
    fn from_str(s: &str) -> Result<Self, TaskError> {
        match s {
            "state_tracking" => Ok(TaskKind::StateTracking),
            "recall" => Ok(TaskKind::Recall),
            "state_based_recall" => Ok(TaskKind::StateBasedRecall),
            other => Err(TaskError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("invalid parameters for {kind}: n = {n}, m = {m} ({reason})")]
    InvalidParams { kind: TaskKind, n: usize, m: usize, reason: &'static str },
    #[error("unknown task kind `{0}`")]
    UnknownKind(String),
    #[error("malformed instance: {0}")]
    Malformed(&'static str),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("strict fraction {0} outside [0, 1]")]
    BadStrictFraction(f64),
}

/// One generated task.
///
/// `swaps` hold variable indices `(i, j)` with `i < j`. For recall `query_var`
/// is the bit index held by `a`; otherwise it names the queried variable.
/// `pointers` is empty unless the kind is state-based recall, and `bits` is
/// empty for state tracking.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskInstance {
    pub kind: TaskKind,
    pub n: usize,
    pub m: usize,
    pub bits: Vec<u8>,
    pub pointers: Vec<usize>,
    pub swaps: Vec<(u8, u8)>,
    pub query_var: usize,
    pub seed: u64,
    pub answer: usize,
}

impl TaskInstance {
    /// Checks the structural invariants, not the stored answer.
    pub fn validate(&self) -> Result<(), TaskError> {
        check_params(self.kind, self.n, self.m)?;
        if self.swaps.len() != self.n {
            return Err(TaskError::Malformed("swap count differs from n"));
        }
        if self.swaps.iter().any(|&(i, j)| i >= j || j >= 5) {
            return Err(TaskError::Malformed("swap must name two distinct variables in order"));
        }
        if self.bits.len() != self.m || self.bits.iter().any(|&b| b > 1) {
            return Err(TaskError::Malformed("bits must be m values in {0, 1}"));
        }
        match self.kind {
            TaskKind::StateBasedRecall => {
                if self.pointers.len() != 5 || self.pointers.iter().any(|&p| p >= self.m) {
                    return Err(TaskError::Malformed("need five pointers below m"));
                }
                if self.query_var >= 5 {
                    return Err(TaskError::Malformed("query variable out of range"));
                }
            }
            TaskKind::StateTracking => {
                if !self.pointers.is_empty() {
                    return Err(TaskError::Malformed("state tracking carries no pointers"));
                }
                if self.query_var >= 5 {
                    return Err(TaskError::Malformed("query variable out of range"));
                }
            }
            TaskKind::Recall => {
                if !self.pointers.is_empty() {
                    return Err(TaskError::Malformed("recall carries no pointers"));
                }
                if self.query_var >= self.m {
                    return Err(TaskError::Malformed("recall index out of range"));
                }
            }
        }
        Ok(())
    }

    /// `(i₁ j₁) ∘ (i₂ j₂) ∘ …`: slot `v` holds the original index now bound to variable `v`.
    pub fn permutation(&self) -> Permutation5 {
        let mut p = Permutation5::identity();
        for &(i, j) in &self.swaps {
            p.apply_swap(i as usize, j as usize);
        }
        p
    }
}

fn check_params(kind: TaskKind, n: usize, m: usize) -> Result<(), TaskError> {
    let bad = |reason| Err(TaskError::InvalidParams { kind, n, m, reason });
    match kind {
        TaskKind::Recall if n != 0 => bad("recall has no updates"),
        TaskKind::Recall if m == 0 => bad("recall needs at least one bit"),
        TaskKind::StateTracking if m != 0 => bad("state tracking has no bit array"),
        TaskKind::StateBasedRecall if m == 0 => bad("pointers need at least one bit"),
        _ => Ok(()),
    }
}

/// Draws an instance; deterministic in all four arguments.
pub fn gen_task(kind: TaskKind, n: usize, m: usize, seed: u64) -> Result<TaskInstance, TaskError> {
    check_params(kind, n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..m).map(|_| rng.gen_range(0..2u8)).collect();
    let pointers: Vec<usize> = if kind == TaskKind::StateBasedRecall {
        (0..5).map(|_| rng.gen_range(0..m)).collect()
    } else {
        Vec::new()
    };
    let swaps: Vec<(u8, u8)> = (0..n).map(|_| PAIRS[rng.gen_range(0..PAIRS.len())]).collect();
    let query_var = match kind {
        TaskKind::Recall => rng.gen_range(0..m),
        _ => rng.gen_range(0..5),
    };
    let mut inst = TaskInstance { kind, n, m, bits, pointers, swaps, query_var, seed, answer: 0 };
    inst.answer = oracle_answer(&inst);
    Ok(inst)
}

/// Brute-force answer: apply the swaps to the variable tuple, then read the query.
pub fn oracle_answer(inst: &TaskInstance) -> usize {
    let mut vars: [usize; 5] = match inst.kind {
        TaskKind::StateBasedRecall => {
            let p = &inst.pointers;
            [p[0], p[1], p[2], p[3], p[4]]
        }
        _ => [0, 1, 2, 3, 4],
    };
    for &(i, j) in &inst.swaps {
        vars.swap(i as usize, j as usize);
    }
    match inst.kind {
        TaskKind::Recall => inst.bits[inst.query_var] as usize,
        TaskKind::StateTracking => vars[inst.query_var],
        TaskKind::StateBasedRecall => inst.bits[vars[inst.query_var]] as usize,
    }
}

/// Gap pattern between intermediate state reveals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RevealSpacing {
    #[default]
    None,
    /// A reveal after every `k`-th swap.
    Fixed(usize),
    /// Gaps drawn uniformly from `{1, 2, 4, …, 2^⌊log₂ n⌋}`.
    RandomizedPow2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RenderOptions {
    pub reveal_spacing: RevealSpacing,
    pub strict_fraction: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { reveal_spacing: RevealSpacing::None, strict_fraction: DEFAULT_STRICT_FRACTION }
    }
}

impl RenderOptions {
    pub fn new(reveal_spacing: RevealSpacing, strict_fraction: f64) -> Result<Self, TaskError> {
        if !(0.0..=1.0).contains(&strict_fraction) {
            return Err(TaskError::BadStrictFraction(strict_fraction));
        }
        Ok(RenderOptions { reveal_spacing, strict_fraction })
    }
}

fn render_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Swap indices (1-based counts) after which a reveal is emitted.
pub fn reveal_points(inst: &TaskInstance, options: &RenderOptions) -> Vec<usize> {
    let mut rng = render_rng(inst.seed);
    let strict = rng.gen::<f64>() < options.strict_fraction;
    if strict || inst.n == 0 {
        return Vec::new();
    }
    match options.reveal_spacing {
        RevealSpacing::None => Vec::new(),
        RevealSpacing::Fixed(0) => Vec::new(),
        RevealSpacing::Fixed(k) => (1..=inst.n / k).map(|i| i * k).collect(),
        RevealSpacing::RandomizedPow2 => {
            let max_exp = usize::BITS - 1 - inst.n.leading_zeros();
            let mut out = Vec::new();
            let mut at = 0;
            loop {
                at += 1usize << rng.gen_range(0..=max_exp);
                if at > inst.n {
                    break;
                }
                out.push(at);
            }
            out
        }
    }
}

/// Whether the render of `inst` under `options` omits every reveal.
pub fn is_strict(inst: &TaskInstance, options: &RenderOptions) -> bool {
    render_rng(inst.seed).gen::<f64>() < options.strict_fraction
}

fn join_usize<I: IntoIterator<Item = usize>>(xs: I) -> String {
    let mut s = String::new();
    for (n, x) in xs.into_iter().enumerate() {
        if n > 0 {
            s.push_str(", ");
        }
        s.push_str(&x.to_string());
    }
    s
}

/// The code-like text of an instance, ending in the unanswered assert.
pub fn render_text(inst: &TaskInstance, options: &RenderOptions) -> String {
    let mut out = String::new();
    let var = |i: usize| VARIABLES[i];
    match inst.kind {
        TaskKind::Recall => {
            out.push_str(&format!("bits = [{}]\n", join_usize(inst.bits.iter().map(|&b| b as usize))));
            out.push_str(&format!("a = {}\n\nassert bits[a] == ", inst.query_var));
            return out;
        }
        TaskKind::StateTracking => out.push_str("a, b, c, d, e = range(5)\n"),
        TaskKind::StateBasedRecall => {
            out.push_str(&format!("bits = [{}]\n", join_usize(inst.bits.iter().map(|&b| b as usize))));
            out.push_str(&format!("a, b, c, d, e = {}\n\n", join_usize(inst.pointers.iter().copied())));
        }
    }
    let reveals = reveal_points(inst, options);
    let mut next = reveals.iter().peekable();
    let mut vars: [usize; 5] = match inst.kind {
        TaskKind::StateBasedRecall => core::array::from_fn(|i| inst.pointers[i]),
        _ => [0, 1, 2, 3, 4],
    };
    for (step, &(i, j)) in inst.swaps.iter().enumerate() {
        let (i, j) = (i as usize, j as usize);
        out.push_str(&format!("{}, {} = {}, {}\n", var(i), var(j), var(j), var(i)));
        vars.swap(i, j);
        if next.peek() == Some(&&(step + 1)) {
            next.next();
            out.push_str(&format!("assert (a, b, c, d, e) == ({})\n", join_usize(vars)));
        }
    }
    if inst.n > 0 || inst.kind == TaskKind::StateTracking {
        out.push('\n');
    }
    match inst.kind {
        TaskKind::StateTracking => out.push_str(&format!("assert {} == ", var(inst.query_var))),
        _ => out.push_str(&format!("assert bits[{}] == ", var(inst.query_var))),
    }
    out
}

fn perr(line: usize, message: impl Into<String>) -> TaskError {
    TaskError::Parse { line: line + 1, message: message.into() }
}

fn parse_list(s: &str, line: usize) -> Result<Vec<usize>, TaskError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| perr(line, format!("bad integer `{}`", t.trim()))))
        .collect()
}

fn parse_var(s: &str, line: usize) -> Result<usize, TaskError> {
    let mut chars = s.trim().chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => VARIABLES
            .iter()
            .position(|&v| v == c)
            .ok_or_else(|| perr(line, format!("unknown variable `{c}`"))),
        _ => Err(perr(line, format!("expected a variable, found `{}`", s.trim()))),
    }
}

/// Inverse of [`render_text`]. The seed is not part of the text and must be
/// supplied; the answer is recomputed. Reveals are checked against the
/// simulated state.
pub fn parse_text(text: &str, seed: u64) -> Result<TaskInstance, TaskError> {
    let lines: Vec<&str> = text.split('\n').collect();
    let Some((&last, body)) = lines.split_last() else {
        return Err(perr(0, "empty input"));
    };
    let last_no = lines.len() - 1;
    let body: Vec<(usize, &str)> = body.iter().copied().enumerate().filter(|(_, l)| !l.trim().is_empty()).collect();
    let mut it = body.into_iter().peekable();

    let mut bits: Vec<u8> = Vec::new();
    let mut has_bits = false;
    if let Some(&(ln, l)) = it.peek() {
        if let Some(rest) = l.strip_prefix("bits = [") {
            let inner = rest.strip_suffix(']').ok_or_else(|| perr(ln, "unterminated bit list"))?;
            bits = parse_list(inner, ln)?
                .into_iter()
                .map(|b| if b <= 1 { Ok(b as u8) } else { Err(perr(ln, "bits must be 0 or 1")) })
                .collect::<Result<_, _>>()?;
            has_bits = true;
            it.next();
        }
    }
    let (ln, header) = it.next().ok_or_else(|| perr(last_no, "missing variable binding"))?;

    if let Some(idx) = header.strip_prefix("a = ") {
        if !has_bits {
            return Err(perr(ln, "recall needs a bit list"));
        }
        let query_var = idx.trim().parse::<usize>().map_err(|_| perr(ln, "bad index"))?;
        if let Some((ln, _)) = it.next() {
            return Err(perr(ln, "unexpected statement in recall"));
        }
        if last != "assert bits[a] == " {
            return Err(perr(last_no, "expected `assert bits[a] == `"));
        }
        let mut inst = TaskInstance {
            kind: TaskKind::Recall,
            n: 0,
            m: bits.len(),
            bits,
            pointers: Vec::new(),
            swaps: Vec::new(),
            query_var,
            seed,
            answer: 0,
        };
        inst.validate().map_err(|e| perr(ln, e.to_string()))?;
        inst.answer = oracle_answer(&inst);
        return Ok(inst);
    }

    let rhs = header
        .strip_prefix("a, b, c, d, e = ")
        .ok_or_else(|| perr(ln, "expected `a, b, c, d, e = ...`"))?;
    let (kind, pointers) = if rhs == "range(5)" {
        if has_bits {
            return Err(perr(ln, "state tracking takes no bit list"));
        }
        (TaskKind::StateTracking, Vec::new())
    } else {
        if !has_bits {
            return Err(perr(ln, "pointers need a bit list"));
        }
        let p = parse_list(rhs, ln)?;
        if p.len() != 5 {
            return Err(perr(ln, "expected five pointers"));
        }
        (TaskKind::StateBasedRecall, p)
    };
    let mut vars: [usize; 5] = match kind {
        TaskKind::StateBasedRecall => core::array::from_fn(|i| pointers[i]),
        _ => [0, 1, 2, 3, 4],
    };

    let mut swaps = Vec::new();
    for (ln, l) in it {
        if let Some(rest) = l.strip_prefix("assert (a, b, c, d, e) == (") {
            let inner = rest.strip_suffix(')').ok_or_else(|| perr(ln, "unterminated reveal"))?;
            let shown = parse_list(inner, ln)?;
            if shown != vars {
                return Err(perr(ln, "reveal disagrees with the swaps above it"));
            }
            continue;
        }
        let (lhs, rhs) = l.split_once(" = ").ok_or_else(|| perr(ln, "expected a swap"))?;
        let (l1, l2) = lhs.split_once(',').ok_or_else(|| perr(ln, "expected two targets"))?;
        let (r1, r2) = rhs.split_once(',').ok_or_else(|| perr(ln, "expected two sources"))?;
        let (i, j) = (parse_var(l1, ln)?, parse_var(l2, ln)?);
        if parse_var(r1, ln)? != j || parse_var(r2, ln)? != i || i >= j {
            return Err(perr(ln, "statement is not a canonical swap"));
        }
        vars.swap(i, j);
        swaps.push((i as u8, j as u8));
    }

    let query_var = match kind {
        TaskKind::StateTracking => {
            let v = last
                .strip_prefix("assert ")
                .and_then(|s| s.strip_suffix(" == "))
                .ok_or_else(|| perr(last_no, "expected `assert <var> == `"))?;
            parse_var(v, last_no)?
        }
        _ => {
            let v = last
                .strip_prefix("assert bits[")
                .and_then(|s| s.strip_suffix("] == "))
                .ok_or_else(|| perr(last_no, "expected `assert bits[<var>] == `"))?;
            parse_var(v, last_no)?
        }
    };
    let mut inst = TaskInstance {
        kind,
        n: swaps.len(),
        m: bits.len(),
        bits,
        pointers,
        swaps,
        query_var,
        seed,
        answer: 0,
    };
    inst.validate().map_err(|e| perr(last_no, e.to_string()))?;
    inst.answer = oracle_answer(&inst);
    Ok(inst)
}
