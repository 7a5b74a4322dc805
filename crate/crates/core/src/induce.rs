//! Reads a grammar derivation off a treebank tree.
//!
//! Every node becomes one rule application: leaves become terminating
//! tagging rules `POS -> (word)`, internal nodes become rules whose
//! composition is determined by how the children's position runs
//! interleave. The derived nonterminal fanout equals the node's number of
//! contiguous position runs; the tree root must have fanout 1.

use std::collections::BTreeSet;

use crate::composition::{Composition, Symbol, Terminal};
use crate::grammar::{Derivation, GrammarError, Nonterminal, Rule};
use crate::tree::DiscoTree;

#[derive(thiserror::Error, Debug)]
pub enum InduceError {
    #[error("the root covers {0} separate position runs, it must cover one")]
    RootFanout(usize),
    #[error("fanout or arity exceeds 255")]
    Overflow,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Induces the derivation of a (binarized or n-ary) tree. Children are
/// processed sorted by leftmost position, matching canonical tree order.
pub fn induce_derivation(tree: &DiscoTree) -> Result<Derivation, InduceError> {
    let d = induce_node(tree)?;
    if d.rule.lhs.fanout != 1 {
        return Err(InduceError::RootFanout(d.rule.lhs.fanout as usize));
    }
    Ok(d)
}

fn induce_node(tree: &DiscoTree) -> Result<Derivation, InduceError> {
    let DiscoTree::Internal { label, children } = tree else {
        let DiscoTree::Leaf(l) = tree else { unreachable!() };
        let comp = Composition::new(vec![vec![Symbol::Term(Terminal {
            word: l.word,
            pos: l.pos,
            position: l.position,
        })]])
        .map_err(GrammarError::from)?;
        let rule = Rule::new(Nonterminal::new(l.pos.as_str(), 1), vec![], comp)?;
        return Ok(Derivation { rule, children: vec![] });
    };

    let mut kids: Vec<&DiscoTree> = children.iter().collect();
    kids.sort_by_key(|c| c.leftmost());
    let derived: Vec<Derivation> =
        kids.iter().map(|c| induce_node(c)).collect::<Result<_, _>>()?;
    if derived.len() > u8::MAX as usize {
        return Err(InduceError::Overflow);
    }

    // Map each position to the variable of the child run that starts there.
    let mut starts: Vec<(u32, Symbol)> = Vec::new();
    let mut all: BTreeSet<u32> = BTreeSet::new();
    for (i, kid) in kids.iter().enumerate() {
        let positions = kid.positions();
        let mut run = 0u8;
        let mut prev = None;
        for &p in &positions {
            if prev != Some(p - 1) {
                run = run.checked_add(1).ok_or(InduceError::Overflow)?;
                starts.push((p, Symbol::var(i as u8 + 1, run)));
            }
            prev = Some(p);
        }
        all.extend(positions);
    }
    starts.sort_by_key(|&(p, _)| p);

    // Components break at gaps in the node's own coverage.
    let mut comps: Vec<Vec<Symbol>> = Vec::new();
    let mut starts = starts.into_iter().peekable();
    let mut prev = None;
    for &p in &all {
        if prev != Some(p - 1) {
            comps.push(Vec::new());
        }
        if let Some(&(sp, sym)) = starts.peek() {
            if sp == p {
                comps.last_mut().unwrap().push(sym);
                starts.next();
            }
        }
        prev = Some(p);
    }
    if comps.len() > u8::MAX as usize {
        return Err(InduceError::Overflow);
    }

    let comp = Composition::new(comps).map_err(GrammarError::from)?;
    let rhs: Vec<Nonterminal> = derived.iter().map(|d| d.rule.lhs.clone()).collect();
    let lhs = Nonterminal::new(label.as_str(), comp.fanout());
    Ok(Derivation::new(Rule::new(lhs, rhs, comp)?, derived)?)
}
