//! Boolean formulas over `{0, 1, AND, OR}` and their width-5 permutation programs.
//!
//! Formulas are written in Polish notation, e.g. `AND 1 OR 0 1`. A program is a
//! list of S5 elements whose product `P₁ ∘ P₂ ∘ … ∘ Pₙ` equals the accepting
//! 5-cycle σ when the formula is true and the identity when it is false.
//!
//! `AND` targeting a 5-cycle γ is the commutator `C(f, α) C(g, β) C(f, α⁻¹) C(g, β⁻¹)`
//! with `αβα⁻¹β⁻¹ = γ`; `OR` is compiled as the negation of `AND(¬f, ¬g)`, and
//! negation targeting γ compiles for γ⁻¹ and right-multiplies the last
//! instruction by γ. Programs have `Σ_leaves 2^{depth(leaf)} ≤ 4^depth` instructions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::constructions::{compose_permutations_gdn, ConstructionError};
use crate::perm::Permutation5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Const0,
    Const1,
    And,
    Or,
}

impl NodeKind {
    pub fn is_leaf(self) -> bool {
        matches!(self, NodeKind::Const0 | NodeKind::Const1)
    }

    fn token(self) -> &'static str {
        match self {
            NodeKind::Const0 => "0",
            NodeKind::Const1 => "1",
            NodeKind::And => "AND",
            NodeKind::Or => "OR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Node {
    kind: NodeKind,
    children: Option<(u32, u32)>,
    depth: u32,
}

/// A formula stored as an arena in which children precede their parents;
/// the root is the last node. Evaluation and dropping never recurse.
#[derive(Clone, PartialEq, Eq)]
pub struct FormulaAst {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("empty formula")]
    Empty,
    #[error("unknown token `{token}` at token {index} (byte {offset})")]
    UnknownToken { token: String, index: usize, offset: usize },
    #[error("`{op}` at token {index} (byte {offset}) is missing an operand")]
    MissingOperand { op: &'static str, index: usize, offset: usize },
    #[error("unexpected extra operand at token {index} (byte {offset})")]
    TrailingInput { index: usize, offset: usize },
    #[error("formula depth {depth} exceeds the limit {max_depth}; the program would have {projected_len} instructions")]
    TooDeep { depth: u32, max_depth: u32, projected_len: u128 },
}

impl FormulaAst {
    pub fn constant(value: bool) -> Self {
        let kind = if value { NodeKind::Const1 } else { NodeKind::Const0 };
        FormulaAst { nodes: alloc::vec![Node { kind, children: None, depth: 0 }] }
    }

    fn binary(kind: NodeKind, left: FormulaAst, right: FormulaAst) -> Self {
        let mut nodes = left.nodes;
        let l = nodes.len() as u32 - 1;
        let offset = nodes.len() as u32;
        nodes.extend(right.nodes.into_iter().map(|mut n| {
            if let Some((a, b)) = n.children {
                n.children = Some((a + offset, b + offset));
            }
            n
        }));
        let r = nodes.len() as u32 - 1;
        let depth = 1 + nodes[l as usize].depth.max(nodes[r as usize].depth);
        nodes.push(Node { kind, children: Some((l, r)), depth });
        FormulaAst { nodes }
    }

    pub fn and(left: FormulaAst, right: FormulaAst) -> Self {
        Self::binary(NodeKind::And, left, right)
    }

    pub fn or(left: FormulaAst, right: FormulaAst) -> Self {
        Self::binary(NodeKind::Or, left, right)
    }

    /// Renumbers nodes as left subtree, right subtree, parent, so that equal
    /// trees have equal arenas.
    fn into_post_order(self) -> FormulaAst {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = alloc::vec![(self.root() as u32, false)];
        while let Some((i, expanded)) = stack.pop() {
            match self.nodes[i as usize].children {
                Some((a, b)) if !expanded => {
                    stack.push((i, true));
                    stack.push((b, false));
                    stack.push((a, false));
                }
                _ => order.push(i),
            }
        }
        let mut remap = alloc::vec![0u32; self.nodes.len()];
        let mut nodes = Vec::with_capacity(order.len());
        for i in order {
            remap[i as usize] = nodes.len() as u32;
            let mut n = self.nodes[i as usize];
            if let Some((a, b)) = n.children {
                n.children = Some((remap[a as usize], remap[b as usize]));
            }
            nodes.push(n);
        }
        FormulaAst { nodes }
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn kind(&self) -> NodeKind {
        self.nodes[self.root()].kind
    }

    pub fn depth(&self) -> u32 {
        self.nodes[self.root()].depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind.is_leaf()).count()
    }

    /// The two subtrees of an operator node, or `None` for a constant.
    pub fn children(&self) -> Option<(FormulaAst, FormulaAst)> {
        let (l, r) = self.nodes[self.root()].children?;
        Some((self.subtree(l as usize), self.subtree(r as usize)))
    }

    fn subtree(&self, root: usize) -> FormulaAst {
        // Collect reachable nodes, then renumber in their original (topological) order.
        let mut keep = alloc::vec![false; root + 1];
        keep[root] = true;
        for i in (0..=root).rev() {
            if keep[i] {
                if let Some((a, b)) = self.nodes[i].children {
                    keep[a as usize] = true;
                    keep[b as usize] = true;
                }
            }
        }
        let mut remap = alloc::vec![0u32; root + 1];
        let mut nodes = Vec::new();
        for i in 0..=root {
            if keep[i] {
                remap[i] = nodes.len() as u32;
                let mut n = self.nodes[i];
                if let Some((a, b)) = n.children {
                    n.children = Some((remap[a as usize], remap[b as usize]));
                }
                nodes.push(n);
            }
        }
        FormulaAst { nodes }
    }

    /// Instructions [`barrington_compile`] would emit: `Σ_leaves 2^{depth(leaf)}`.
    pub fn projected_program_len(&self) -> u128 {
        let mut weight = alloc::vec![0u128; self.nodes.len()];
        let root = self.root();
        weight[root] = 1;
        let mut total = 0u128;
        for i in (0..=root).rev() {
            match self.nodes[i].children {
                Some((a, b)) => {
                    let w = weight[i].saturating_mul(2);
                    weight[a as usize] = w;
                    weight[b as usize] = w;
                }
                None => total = total.saturating_add(weight[i]),
            }
        }
        total
    }

    /// Random formula of depth at most `max_depth`; each node below the limit
    /// is a leaf with probability `leaf_prob`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_depth: u32, leaf_prob: f64) -> FormulaAst {
        if max_depth == 0 || rng.gen::<f64>() < leaf_prob {
            return FormulaAst::constant(rng.gen());
        }
        let l = Self::random(rng, max_depth - 1, leaf_prob);
        let r = Self::random(rng, max_depth - 1, leaf_prob);
        if rng.gen() {
            FormulaAst::and(l, r)
        } else {
            FormulaAst::or(l, r)
        }
    }

    /// Every formula with exactly `leaves` constants.
    pub fn enumerate(leaves: usize) -> Vec<FormulaAst> {
        let mut table: Vec<Vec<FormulaAst>> = alloc::vec![Vec::new()];
        for k in 1..=leaves {
            let mut level = Vec::new();
            if k == 1 {
                level.push(FormulaAst::constant(false));
                level.push(FormulaAst::constant(true));
            }
            for left in 1..k {
                for l in &table[left] {
                    for r in &table[k - left] {
                        level.push(FormulaAst::and(l.clone(), r.clone()));
                        level.push(FormulaAst::or(l.clone(), r.clone()));
                    }
                }
            }
            table.push(level);
        }
        table.pop().unwrap_or_default()
    }
}

impl fmt::Display for FormulaAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut stack = alloc::vec![self.root()];
        let mut first = true;
        while let Some(i) = stack.pop() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let n = &self.nodes[i];
            f.write_str(n.kind.token())?;
            if let Some((a, b)) = n.children {
                stack.push(b as usize);
                stack.push(a as usize);
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FormulaAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FormulaAst({self})")
    }
}

/// Parses whitespace-separated `AND`, `OR`, `0`, `1` in prefix order.
pub fn parse_polish(text: &str) -> Result<FormulaAst, FormulaError> {
    let mut tokens = Vec::new();
    let mut offset = 0;
    for piece in text.split_whitespace() {
        let at = offset + text[offset..].find(piece).unwrap();
        offset = at + piece.len();
        let kind = match piece {
            "AND" => NodeKind::And,
            "OR" => NodeKind::Or,
            "0" => NodeKind::Const0,
            "1" => NodeKind::Const1,
            _ => {
                return Err(FormulaError::UnknownToken { token: piece.to_string(), index: tokens.len(), offset: at })
            }
        };
        tokens.push((kind, at));
    }
    if tokens.is_empty() {
        return Err(FormulaError::Empty);
    }
    // Scan right to left: operands are pushed, operators pop their two arguments.
    let mut nodes: Vec<Node> = Vec::with_capacity(tokens.len());
    let mut stack: Vec<(u32, usize)> = Vec::new();
    for (index, &(kind, off)) in tokens.iter().enumerate().rev() {
        if kind.is_leaf() {
            stack.push((nodes.len() as u32, index));
            nodes.push(Node { kind, children: None, depth: 0 });
            continue;
        }
        if stack.len() < 2 {
            return Err(FormulaError::MissingOperand { op: kind.token(), index, offset: off });
        }
        let (l, _) = stack.pop().unwrap();
        let (r, _) = stack.pop().unwrap();
        let depth = 1 + nodes[l as usize].depth.max(nodes[r as usize].depth);
        stack.push((nodes.len() as u32, index));
        nodes.push(Node { kind, children: Some((l, r)), depth });
    }
    if stack.len() > 1 {
        let (_, index) = stack[stack.len() - 2];
        return Err(FormulaError::TrailingInput { index, offset: tokens[index].1 });
    }
    Ok(FormulaAst { nodes }.into_post_order())
}

/// Reference evaluation.
pub fn eval_ast(ast: &FormulaAst) -> u8 {
    let mut val = Vec::with_capacity(ast.nodes.len());
    for n in &ast.nodes {
        let v = match (n.kind, n.children) {
            (NodeKind::Const0, _) => false,
            (NodeKind::Const1, _) => true,
            (NodeKind::And, Some((a, b))) => val[a as usize] && val[b as usize],
            (NodeKind::Or, Some((a, b))) => val[a as usize] || val[b as usize],
            _ => unreachable!("operators always have two children"),
        };
        val.push(v);
    }
    val[ast.root()] as u8
}

/// A width-5 permutation program accepting when its product equals `accept_cycle`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PermProgram {
    pub instructions: Vec<Permutation5>,
    pub accept_cycle: Permutation5,
}

impl PermProgram {
    pub fn new(instructions: Vec<Permutation5>) -> Self {
        PermProgram { instructions, accept_cycle: Permutation5::SIGMA }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn product(&self) -> Permutation5 {
        Permutation5::product(&self.instructions)
    }

    /// The program whose product is the inverse of this one's.
    pub fn inverse(&self) -> PermProgram {
        PermProgram {
            instructions: self.instructions.iter().rev().map(Permutation5::inverse).collect(),
            accept_cycle: self.accept_cycle,
        }
    }

    /// All instructions split into transpositions, in product order.
    pub fn transpositions(&self) -> Vec<(usize, usize)> {
        self.instructions.iter().flat_map(|p| p.transpositions()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub max_depth: u32,
}

pub const DEFAULT_MAX_DEPTH: u32 = 14;

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { max_depth: DEFAULT_MAX_DEPTH }
    }
}

/// 5-cycles with `α₀ β₀ α₀⁻¹ β₀⁻¹ = σ`.
const ALPHA0: Permutation5 = Permutation5::new_unchecked([2, 0, 4, 1, 3]);
const BETA0: Permutation5 = Permutation5::new_unchecked([2, 4, 3, 1, 0]);

/// `τ` with `τ σ τ⁻¹ = γ` for a 5-cycle `γ`.
fn conjugator(gamma: &Permutation5) -> Permutation5 {
    let mut m = [0u8; 5];
    let mut x = 0usize;
    for slot in m.iter_mut() {
        *slot = x as u8;
        x = gamma.apply(x);
    }
    Permutation5::new(m).expect("a 5-cycle visits every point once")
}

/// `(α, β)` with `α β α⁻¹ β⁻¹ = γ`.
fn commutator_pair(gamma: &Permutation5) -> (Permutation5, Permutation5) {
    let t = conjugator(gamma);
    let ti = t.inverse();
    (t.compose(&ALPHA0).compose(&ti), t.compose(&BETA0).compose(&ti))
}

enum Frame {
    Enter { node: u32, target: Permutation5, negate: bool },
    Fix { last_of: usize, by: Permutation5 },
}

fn compile_into(ast: &FormulaAst, out: &mut Vec<Permutation5>) {
    let mut stack = alloc::vec![Frame::Enter { node: ast.root() as u32, target: Permutation5::SIGMA, negate: false }];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Fix { last_of, by } => {
                debug_assert!(out.len() > last_of);
                let last = out.last_mut().unwrap();
                *last = last.compose(&by);
            }
            Frame::Enter { node, target, negate } => {
                let n = &ast.nodes[node as usize];
                let (l, r) = match n.children {
                    None => {
                        let truth = (n.kind == NodeKind::Const1) != negate;
                        out.push(if truth { target } else { Permutation5::IDENTITY });
                        continue;
                    }
                    Some(c) => c,
                };
                // AND: plain commutator; ¬AND: negate a commutator for γ⁻¹.
                // OR = ¬(¬l ∧ ¬r); ¬OR = ¬l ∧ ¬r.
                let (outer_negate, child_negate) = match n.kind {
                    NodeKind::And => (negate, false),
                    _ => (!negate, true),
                };
                let comm_target = if outer_negate { target.inverse() } else { target };
                if outer_negate {
                    stack.push(Frame::Fix { last_of: out.len(), by: target });
                }
                let (a, b) = commutator_pair(&comm_target);
                let parts = [(l, a), (r, b), (l, a.inverse()), (r, b.inverse())];
                for &(child, t) in parts.iter().rev() {
                    stack.push(Frame::Enter { node: child, target: t, negate: child_negate });
                }
            }
        }
    }
}

/// Compiles `ast` to a program with product σ iff the formula is true.
pub fn barrington_compile(ast: &FormulaAst, options: &CompileOptions) -> Result<PermProgram, FormulaError> {
    let depth = ast.depth();
    if depth > options.max_depth {
        return Err(FormulaError::TooDeep {
            depth,
            max_depth: options.max_depth,
            projected_len: ast.projected_program_len(),
        });
    }
    let mut out = Vec::with_capacity(ast.projected_program_len() as usize);
    compile_into(ast, &mut out);
    Ok(PermProgram::new(out))
}

/// Runs every instruction's transpositions through the GDN composer and accepts
/// iff the composed permutation is the program's accepting cycle.
pub fn eval_via_gdn(program: &PermProgram) -> Result<u8, ConstructionError> {
    let p = compose_permutations_gdn(&program.transpositions())?;
    Ok((p == program.accept_cycle) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn commutator_constants() {
        assert_eq!(Permutation5::new(ALPHA0.mapping()).unwrap(), ALPHA0);
        assert_eq!(Permutation5::new(BETA0.mapping()).unwrap(), BETA0);
        assert_eq!(ALPHA0.cycles()[0].len(), 5);
        assert_eq!(BETA0.cycles()[0].len(), 5);
        let c = ALPHA0.compose(&BETA0).compose(&ALPHA0.inverse()).compose(&BETA0.inverse());
        assert_eq!(c, Permutation5::SIGMA);
    }

    #[test]
    fn commutator_pairs_for_every_five_cycle() {
        for g in Permutation5::all().into_iter().filter(|p| p.cycles().first().map(|c| c.len()) == Some(5)) {
            let (a, b) = commutator_pair(&g);
            assert_eq!(a.compose(&b).compose(&a.inverse()).compose(&b.inverse()), g);
        }
    }

    #[test]
    fn parse_examples() {
        let one = parse_polish("1").unwrap();
        assert_eq!(one.kind(), NodeKind::Const1);
        assert_eq!(one.depth(), 0);
        let f = parse_polish("AND 1 OR 0 1").unwrap();
        assert_eq!(f.kind(), NodeKind::And);
        assert_eq!(f.depth(), 2);
        let (l, r) = f.children().unwrap();
        assert_eq!(l.kind(), NodeKind::Const1);
        assert_eq!(r.kind(), NodeKind::Or);
        assert_eq!(alloc::format!("{r}"), "OR 0 1");
        assert_eq!(alloc::format!("{f}"), "AND 1 OR 0 1");
        assert_eq!(eval_ast(&f), 1);
        assert_eq!(f, FormulaAst::and(FormulaAst::constant(true), FormulaAst::or(FormulaAst::constant(false), FormulaAst::constant(true))));
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert_eq!(parse_polish("AND 1"), Err(FormulaError::MissingOperand { op: "AND", index: 0, offset: 0 }));
        assert_eq!(parse_polish("1 0"), Err(FormulaError::TrailingInput { index: 1, offset: 2 }));
        assert_eq!(
            parse_polish("OR 1  XOR"),
            Err(FormulaError::UnknownToken { token: "XOR".into(), index: 2, offset: 6 })
        );
        assert_eq!(parse_polish("   "), Err(FormulaError::Empty));
    }

    #[test]
    fn constants_compile_to_identity_and_sigma() {
        let opts = CompileOptions::default();
        let p0 = barrington_compile(&FormulaAst::constant(false), &opts).unwrap();
        assert!(p0.product().is_identity());
        let p1 = barrington_compile(&FormulaAst::constant(true), &opts).unwrap();
        assert_eq!(p1.product(), Permutation5::SIGMA);
        assert_eq!(eval_via_gdn(&p0).unwrap(), 0);
        assert_eq!(eval_via_gdn(&p1).unwrap(), 1);
    }

    #[test]
    fn trivial_programs() {
        assert_eq!(eval_via_gdn(&PermProgram::new(Vec::new())).unwrap(), 0);
        assert_eq!(eval_via_gdn(&PermProgram::new(alloc::vec![Permutation5::SIGMA])).unwrap(), 1);
    }

    #[test]
    fn full_and_tree_has_exact_length() {
        let mut f = FormulaAst::constant(true);
        for _ in 0..4 {
            f = FormulaAst::and(f.clone(), f);
        }
        let p = barrington_compile(&f, &CompileOptions::default()).unwrap();
        assert_eq!(p.len(), 256);
        assert_eq!(p.product(), Permutation5::SIGMA);
    }

    #[test]
    fn depth_limit_reports_length() {
        let mut f = FormulaAst::constant(true);
        for _ in 0..3 {
            f = FormulaAst::or(f.clone(), f);
        }
        let err = barrington_compile(&f, &CompileOptions { max_depth: 2 }).unwrap_err();
        assert_eq!(err, FormulaError::TooDeep { depth: 3, max_depth: 2, projected_len: 64 });
        assert!(err.to_string().contains("64 instructions"));
    }

    #[test]
    fn random_formulas_agree_with_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let f = FormulaAst::random(&mut rng, 6, 0.3);
            let p = barrington_compile(&f, &CompileOptions::default()).unwrap();
            assert!(p.len() as u128 <= 4u128.pow(f.depth()));
            assert_eq!(p.len() as u128, f.projected_program_len());
            let expect = if eval_ast(&f) == 1 { Permutation5::SIGMA } else { Permutation5::IDENTITY };
            assert_eq!(p.product(), expect, "{f}");
            let roundtrip = parse_polish(&alloc::format!("{f}")).unwrap();
            assert_eq!(roundtrip, f);
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(FormulaAst::enumerate(1).len(), 2);
        assert_eq!(FormulaAst::enumerate(2).len(), 8);
        assert_eq!(FormulaAst::enumerate(3).len(), 64);
    }
}
