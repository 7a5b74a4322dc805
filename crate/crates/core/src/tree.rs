//! Discontinuous constituency trees and the one-line bracket format.
//!
//! A tree covers sentence positions 1..=n exactly once; a constituent's
//! positions need not be contiguous. In the bracket format a leaf is
//! written as a tagged token, `(POS 3=word)`, and an internal node as
//! `(LABEL child...)`, e.g. `(S (NP (DT 1=the) (NN 2=dog)) (VBD 3=ran))`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::intern::{intern, Sym};

/// A tagged token occurrence. `position` is 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Leaf {
    pub pos: Sym,
    pub word: Sym,
    pub position: u32,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DiscoTree {
    Internal { label: Sym, children: Vec<DiscoTree> },
    Leaf(Leaf),
}

/// A binarized tree is structurally an ordinary tree whose internal nodes
/// have at most two children.
pub type BinTree = DiscoTree;

#[derive(thiserror::Error, Debug)]
pub enum TreeError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("node `{0}` mixes token and subtree children")]
    MixedChildren(String),
    #[error("tag `{0}` must cover exactly one token")]
    TokenArity(String),
    #[error("position {0} occurs twice")]
    DuplicatePosition(u32),
    #[error("position {0} is missing (positions must cover 1..=n)")]
    MissingPosition(u32),
    #[error("tree has no tokens")]
    NoTokens,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl DiscoTree {
    pub fn internal(label: &str, children: Vec<DiscoTree>) -> Self {
        DiscoTree::Internal { label: intern(label), children }
    }

    pub fn leaf(pos: &str, word: &str, position: u32) -> Self {
        DiscoTree::Leaf(Leaf { pos: intern(pos), word: intern(word), position })
    }

    /// The node label: constituent label or part-of-speech tag.
    pub fn label(&self) -> Sym {
        match self {
            DiscoTree::Internal { label, .. } => *label,
            DiscoTree::Leaf(l) => l.pos,
        }
    }

    pub fn children(&self) -> &[DiscoTree] {
        match self {
            DiscoTree::Internal { children, .. } => children,
            DiscoTree::Leaf(_) => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, DiscoTree::Leaf(_))
    }

    /// All token occurrences, sorted by position.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out.sort_by_key(|l| l.position);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Leaf>) {
        match self {
            DiscoTree::Leaf(l) => out.push(*l),
            DiscoTree::Internal { children, .. } => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
        }
    }

    /// The positions this node covers, ascending.
    pub fn positions(&self) -> BTreeSet<u32> {
        self.leaves().iter().map(|l| l.position).collect()
    }

    /// Leftmost covered position. Trees are never token-free.
    pub fn leftmost(&self) -> u32 {
        match self {
            DiscoTree::Leaf(l) => l.position,
            DiscoTree::Internal { children, .. } => {
                children.iter().map(DiscoTree::leftmost).min().expect("no empty nodes")
            }
        }
    }

    /// Number of maximal contiguous runs among the covered positions.
    pub fn fanout(&self) -> usize {
        count_runs(&self.positions())
    }

    /// True if any node in the tree covers a non-contiguous position set.
    pub fn is_discontinuous(&self) -> bool {
        match self {
            DiscoTree::Leaf(_) => false,
            DiscoTree::Internal { children, .. } => {
                self.fanout() > 1 || children.iter().any(DiscoTree::is_discontinuous)
            }
        }
    }

    /// Sorts children by leftmost covered position, recursively.
    pub fn sort_canonical(&mut self) {
        if let DiscoTree::Internal { children, .. } = self {
            children.iter_mut().for_each(DiscoTree::sort_canonical);
            children.sort_by_key(DiscoTree::leftmost);
        }
    }

    /// Checks that the tree covers positions 1..=n exactly once and
    /// returns the tokens in sentence order.
    pub fn sentence(&self) -> Result<Vec<Leaf>, TreeError> {
        let leaves = self.leaves();
        if leaves.is_empty() {
            return Err(TreeError::NoTokens);
        }
        for (i, l) in leaves.iter().enumerate() {
            let expect = i as u32 + 1;
            if l.position == expect {
                continue;
            }
            return Err(if i > 0 && leaves[i - 1].position == l.position {
                TreeError::DuplicatePosition(l.position)
            } else {
                TreeError::MissingPosition(expect)
            });
        }
        Ok(leaves)
    }

    /// (label, covered positions) of every internal node, pre-order.
    pub fn constituents(&self) -> Vec<(Sym, BTreeSet<u32>)> {
        let mut out = Vec::new();
        self.walk_constituents(&mut out);
        out
    }

    fn walk_constituents(&self, out: &mut Vec<(Sym, BTreeSet<u32>)>) {
        if let DiscoTree::Internal { label, children } = self {
            out.push((*label, self.positions()));
            children.iter().for_each(|c| c.walk_constituents(out));
        }
    }
}

pub(crate) fn count_runs(positions: &BTreeSet<u32>) -> usize {
    let mut runs = 0;
    let mut prev = None;
    for &p in positions {
        if prev != Some(p.wrapping_sub(1)) {
            runs += 1;
        }
        prev = Some(p);
    }
    runs
}

impl fmt::Display for DiscoTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscoTree::Leaf(l) => write!(f, "({} {}={})", l.pos, l.position, l.word),
            DiscoTree::Internal { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

enum RawNode {
    Tree(DiscoTree),
    Token { position: u32, word: String },
}

/// Parses one tree from a bracket line.
pub fn parse_tree(line: &str) -> Result<DiscoTree, TreeError> {
    let err = |detail: String| TreeError::Parse { line: 0, detail };
    let mut stack: Vec<(String, Vec<RawNode>)> = Vec::new();
    let mut finished: Option<DiscoTree> = None;
    let mut rest = line.trim();
    while !rest.is_empty() {
        if finished.is_some() {
            return Err(err("trailing content after the tree".into()));
        }
        if let Some(r) = rest.strip_prefix('(') {
            let r = r.trim_start();
            let end = r.find([' ', '(', ')']).unwrap_or(r.len());
            let (label, r) = r.split_at(end);
            if label.is_empty() {
                return Err(err("node without a label".into()));
            }
            stack.push((label.to_owned(), Vec::new()));
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix(')') {
            let (label, raw_children) = stack.pop().ok_or_else(|| err("unbalanced `)`".into()))?;
            let node = close_node(label, raw_children)?;
            match stack.last_mut() {
                Some((_, siblings)) => siblings.push(RawNode::Tree(node)),
                None => finished = Some(node),
            }
            rest = r.trim_start();
        } else {
            let end = rest.find(['(', ')']).map_or(rest.len(), |i| i);
            let token = rest[..end].trim_end();
            rest = rest[end..].trim_start();
            for tok in token.split_whitespace() {
                let Some((p, word)) = tok.split_once('=') else {
                    return Err(err(format!("token `{tok}` is not position=word")));
                };
                let position: u32 = p
                    .parse()
                    .map_err(|_| err(format!("bad position in `{tok}`")))?;
                if position == 0 {
                    return Err(err("positions are 1-based".into()));
                }
                let Some((_, siblings)) = stack.last_mut() else {
                    return Err(err(format!("token `{tok}` outside any node")));
                };
                siblings.push(RawNode::Token { position, word: word.to_owned() });
            }
        }
    }
    if !stack.is_empty() {
        return Err(err("unbalanced `(`".into()));
    }
    let tree = finished.ok_or_else(|| err("empty line".into()))?;
    tree.sentence()?;
    Ok(tree)
}

fn close_node(label: String, raw: Vec<RawNode>) -> Result<DiscoTree, TreeError> {
    let tokens = raw.iter().filter(|n| matches!(n, RawNode::Token { .. })).count();
    if tokens == 0 {
        if raw.is_empty() {
            return Err(TreeError::Parse { line: 0, detail: format!("node `{label}` is empty") });
        }
        let children = raw
            .into_iter()
            .map(|n| match n {
                RawNode::Tree(t) => t,
                RawNode::Token { .. } => unreachable!(),
            })
            .collect();
        return Ok(DiscoTree::Internal { label: intern(&label), children });
    }
    if tokens != raw.len() {
        return Err(TreeError::MixedChildren(label));
    }
    if tokens != 1 {
        return Err(TreeError::TokenArity(label));
    }
    let Some(RawNode::Token { position, word }) = raw.into_iter().next() else { unreachable!() };
    Ok(DiscoTree::Leaf(Leaf { pos: intern(&label), word: intern(&word), position }))
}

/// Reads a bracket file: one tree per line, empty lines skipped.
pub fn read_brackets<R: BufRead>(r: R) -> Result<Vec<DiscoTree>, TreeError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_tree(&line) {
            Ok(t) => out.push(t),
            Err(TreeError::Parse { detail, .. }) => {
                return Err(TreeError::Parse { line: i + 1, detail })
            }
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}

pub fn write_brackets<W: Write>(mut w: W, trees: &[DiscoTree]) -> io::Result<()> {
    for t in trees {
        writeln!(w, "{t}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_tree() -> DiscoTree {
        // "A hearing is scheduled on the issue today ." with the PP
        // attached inside a discontinuous VP.
        DiscoTree::internal(
            "ROOT",
            vec![
                DiscoTree::internal(
                    "S",
                    vec![
                        DiscoTree::internal(
                            "NP",
                            vec![DiscoTree::leaf("DT", "A", 1), DiscoTree::leaf("NN", "hearing", 2)],
                        ),
                        DiscoTree::leaf("VBZ", "is", 3),
                        DiscoTree::internal(
                            "VP",
                            vec![
                                DiscoTree::leaf("VBN", "scheduled", 4),
                                DiscoTree::internal(
                                    "PP",
                                    vec![
                                        DiscoTree::leaf("IN", "on", 5),
                                        DiscoTree::internal(
                                            "NP",
                                            vec![
                                                DiscoTree::leaf("DT", "the", 6),
                                                DiscoTree::leaf("NN", "issue", 7),
                                            ],
                                        ),
                                    ],
                                ),
                                DiscoTree::leaf("NN", "today", 8),
                            ],
                        ),
                    ],
                ),
                DiscoTree::leaf(".", ".", 9),
            ],
        )
    }

    #[test]
    fn positions_fanout_and_discontinuity() {
        let t = fig_tree();
        assert_eq!(t.fanout(), 1);
        assert!(!t.is_discontinuous());
        let vp = &t.children()[0].children()[2];
        assert_eq!(vp.positions(), BTreeSet::from([4, 5, 6, 7, 8]));

        // Detach the PP positions: VP over {4,8} has fanout 2.
        let vp2 = DiscoTree::internal(
            "VP",
            vec![DiscoTree::leaf("VBN", "scheduled", 4), DiscoTree::leaf("NN", "today", 8)],
        );
        assert_eq!(vp2.fanout(), 2);
        assert!(vp2.is_discontinuous());
    }

    #[test]
    fn sentence_checks_coverage() {
        let t = fig_tree();
        let sent: Vec<&str> = t.sentence().unwrap().iter().map(|l| l.word.as_str()).collect();
        assert_eq!(
            sent,
            ["A", "hearing", "is", "scheduled", "on", "the", "issue", "today", "."]
        );

        let dup = DiscoTree::internal(
            "S",
            vec![DiscoTree::leaf("A", "a", 1), DiscoTree::leaf("B", "b", 1)],
        );
        assert!(matches!(dup.sentence().unwrap_err(), TreeError::DuplicatePosition(1)));
        let gap = DiscoTree::internal(
            "S",
            vec![DiscoTree::leaf("A", "a", 1), DiscoTree::leaf("B", "b", 3)],
        );
        assert!(matches!(gap.sentence().unwrap_err(), TreeError::MissingPosition(2)));
    }

    #[test]
    fn canonical_order_sorts_by_leftmost() {
        let mut t = DiscoTree::internal(
            "S",
            vec![
                DiscoTree::internal(
                    "B",
                    vec![DiscoTree::leaf("Y", "y", 4), DiscoTree::leaf("X", "x", 2)],
                ),
                DiscoTree::internal(
                    "A",
                    vec![DiscoTree::leaf("W", "w", 3), DiscoTree::leaf("V", "v", 1)],
                ),
            ],
        );
        t.sort_canonical();
        assert_eq!(
            t.to_string(),
            "(S (A (V 1=v) (W 3=w)) (B (X 2=x) (Y 4=y)))"
        );
    }

    #[test]
    fn bracket_roundtrip() {
        let t = fig_tree();
        let printed = t.to_string();
        assert_eq!(parse_tree(&printed).unwrap(), t);
        assert!(printed.starts_with("(ROOT (S (NP (DT 1=A) (NN 2=hearing))"));
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(parse_tree("(S (A 1=a)").is_err());
        assert!(parse_tree("(S (A 1=a)))").is_err());
        assert!(parse_tree("(S (A 1=a) (B 2=b) extra=x)").is_err());
        // Mixed token and subtree children.
        assert!(matches!(
            parse_tree("(S 1=a (B 2=b))"),
            Err(TreeError::MixedChildren(_))
        ));
        // A tag node must have exactly one token.
        assert!(matches!(parse_tree("(S (A 1=a 2=b))"), Err(TreeError::TokenArity(_))));
        // Token without `=`.
        assert!(parse_tree("(S (A a))").is_err());
        // 0-based positions are rejected.
        assert!(parse_tree("(S (A 0=a))").is_err());
        // Coverage gaps are rejected.
        assert!(parse_tree("(S (A 2=a))").is_err());
    }

    #[test]
    fn file_roundtrip() {
        let trees = vec![
            fig_tree(),
            DiscoTree::internal("ROOT", vec![DiscoTree::leaf("UH", "yes", 1)]),
        ];
        let mut buf = Vec::new();
        write_brackets(&mut buf, &trees).unwrap();
        let back = read_brackets(&buf[..]).unwrap();
        assert_eq!(back, trees);
    }

    #[test]
    fn run_counting() {
        assert_eq!(count_runs(&BTreeSet::from([1, 2, 3])), 1);
        assert_eq!(count_runs(&BTreeSet::from([1, 3, 4, 7])), 3);
        assert_eq!(count_runs(&BTreeSet::new()), 0);
    }
}
