//! Left-to-right binarization with horizontal and vertical context, and
//! its inverse.
//!
//! A node with more than two children is split into a chain of auxiliary
//! nodes, each taking one child off the left. Auxiliary labels record the
//! next `h` sibling labels in angle brackets — `X(a, b, c)` with h = 1
//! becomes `X(a, X|<C>(b, c))` — and every internal node label gets the
//! nearest `v - 1` original ancestor labels appended as `^ancestor`
//! decorations. Undoing the transform splices all `|<`-labeled nodes and
//! strips labels at the first `^`, so original labels must contain
//! neither.

use crate::intern::{intern, Sym};
use crate::tree::{BinTree, DiscoTree};

#[derive(thiserror::Error, Debug)]
pub enum BinarizeError {
    #[error("auxiliary node `{0}` at the root")]
    AuxAtRoot(String),
}

/// Markovization settings: `h` sibling labels kept in auxiliary node
/// names, `v - 1` ancestor labels appended to every internal node.
#[derive(Clone, Copy, Debug)]
pub struct Markov {
    pub h: usize,
    pub v: usize,
}

impl Default for Markov {
    fn default() -> Self {
        Markov { h: 0, v: 1 }
    }
}

pub fn binarize(tree: &DiscoTree, markov: Markov) -> BinTree {
    bin_node(tree, markov, &mut Vec::new())
}

fn decorate(label: Sym, ancestors: &[Sym], v: usize) -> String {
    let mut out = label.as_str().to_owned();
    for anc in ancestors.iter().rev().take(v.saturating_sub(1)) {
        out.push('^');
        out.push_str(anc.as_str());
    }
    out
}

fn bin_node(node: &DiscoTree, markov: Markov, ancestors: &mut Vec<Sym>) -> BinTree {
    let DiscoTree::Internal { label, children } = node else {
        return node.clone();
    };
    let base = decorate(*label, ancestors, markov.v);
    let mut sorted: Vec<&DiscoTree> = children.iter().collect();
    sorted.sort_by_key(|c| c.leftmost());
    ancestors.push(*label);
    let kids: Vec<BinTree> = sorted.iter().map(|c| bin_node(c, markov, ancestors)).collect();
    ancestors.pop();
    let labels: Vec<Sym> = sorted.iter().map(|c| c.label()).collect();
    build_spine(&base, kids, &labels, markov.h, true)
}

/// Folds `kids` into a left-leaning chain. The first node keeps the plain
/// (decorated) label; deeper nodes are auxiliary, named after the sibling
/// labels that follow their first child.
fn build_spine(base: &str, mut kids: Vec<BinTree>, labels: &[Sym], h: usize, top: bool) -> BinTree {
    let label = if top {
        intern(base)
    } else {
        let horizon: Vec<&str> =
            labels.iter().skip(1).take(h).map(|l| l.as_str()).collect();
        intern(&format!("{base}|<{}>", horizon.join(",")))
    };
    if kids.len() <= 2 {
        return DiscoTree::Internal { label, children: kids };
    }
    let first = kids.remove(0);
    let rest = build_spine(base, kids, &labels[1..], h, false);
    DiscoTree::Internal { label, children: vec![first, rest] }
}

/// Splices auxiliary nodes back and removes ancestor decorations.
pub fn unbinarize(tree: &BinTree) -> Result<DiscoTree, BinarizeError> {
    let mut nodes = unbin_node(tree);
    if nodes.len() != 1 {
        return Err(BinarizeError::AuxAtRoot(tree.label().to_string()));
    }
    Ok(nodes.remove(0))
}

fn unbin_node(node: &BinTree) -> Vec<DiscoTree> {
    let DiscoTree::Internal { label, children } = node else {
        return vec![node.clone()];
    };
    let kids: Vec<DiscoTree> = children.iter().flat_map(|c| unbin_node(c)).collect();
    let name = label.as_str();
    if name.contains("|<") {
        return kids;
    }
    let plain = name.split('^').next().unwrap_or(name);
    vec![DiscoTree::Internal { label: intern(plain), children: kids }]
}
