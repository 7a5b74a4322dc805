//! Rewrites a derivation so that every rule carries exactly one terminal.
//!
//! Four steps, each yield-preserving:
//!
//! 1. collapse: unary rules with identity compositions are merged into
//!    their child, concatenating labels (`A+B`).
//! 2. fuse: every terminating child is substituted into its parent's
//!    composition, so words sit in the rules that used to select for them.
//! 3. propagate: rules with two remaining children have no terminal yet;
//!    each pulls the leading word out of its second child's subtree. The
//!    word bubbles up along first-child edges, every rule on the way
//!    giving up the first symbol of its own first component. Nodes keep
//!    a `^+` mark, or `^-` if their first component emptied away (their
//!    fanout shrank); a rule whose own word left while a different one
//!    came in is flagged swapped.
//! 4. split: terminating rules still holding two words hand the second
//!    one to a fresh `^R` child.

use crate::composition::{Composition, Symbol, Terminal};
use crate::grammar::{Annotation, Derivation, GrammarError, Nonterminal, Rule, RuleKind};

#[derive(thiserror::Error, Debug)]
pub enum LexError {
    #[error("node with {0} children: expected a binarized derivation")]
    NotBinarized(usize),
    #[error("no terminal at the front of `{0}`")]
    FrontNotTerminal(String),
    #[error("rule `{rule}` carries {found} terminals, expected {expected}")]
    TerminalCount { rule: String, found: usize, expected: usize },
    #[error("variable x{0}^{1} not found")]
    NoAnchor(u8, u8),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

pub(crate) fn find_var(comps: &[Vec<Symbol>], arg: u8, comp: u8) -> Option<(usize, usize)> {
    for (ci, c) in comps.iter().enumerate() {
        for (si, sym) in c.iter().enumerate() {
            if let Symbol::Var(v) = sym {
                if v.arg == arg && v.comp == comp {
                    return Some((ci, si));
                }
            }
        }
    }
    None
}

/// Shifts the component index of every variable of `arg` by `delta`.
pub(crate) fn shift_arg(comps: &mut [Vec<Symbol>], arg: u8, delta: i16) {
    for c in comps.iter_mut() {
        for sym in c.iter_mut() {
            if let Symbol::Var(v) = sym {
                if v.arg == arg {
                    v.comp = (v.comp as i16 + delta) as u8;
                }
            }
        }
    }
}

/// Merges unary identity rules into their children, concatenating labels.
pub fn collapse_chains(d: &Derivation) -> Derivation {
    let children: Vec<Derivation> = d.children.iter().map(collapse_chains).collect();
    if children.len() == 1 && d.rule.comp.is_identity() {
        let inner = children.into_iter().next().unwrap();
        let lhs = Nonterminal::merged(&d.rule.lhs, &inner.rule.lhs);
        return Derivation {
            rule: Rule { lhs, ..inner.rule },
            children: inner.children,
        };
    }
    let rhs = children.iter().map(|c| c.rule.lhs.clone()).collect();
    Derivation {
        rule: Rule { lhs: d.rule.lhs.clone(), rhs, comp: d.rule.comp.clone(), swapped: false },
        children,
    }
}

fn sole_terminal(rule: &Rule) -> Result<Terminal, LexError> {
    let comps = rule.comp.components();
    if let [comp] = comps {
        if let [Symbol::Term(t)] = comp[..] {
            return Ok(t);
        }
    }
    Err(LexError::TerminalCount {
        rule: rule.to_string(),
        found: rule.lexical_count(),
        expected: 1,
    })
}

/// Substitutes every terminating child's word into the parent composition.
/// The root itself is never absorbed anywhere: a sentence that is one
/// terminating rule stays as it is.
pub fn fuse_terminals(d: &Derivation) -> Result<Derivation, LexError> {
    let mut comp = d.rule.comp.clone();
    let mut children = Vec::new();
    let mut arg = 1u8;
    for child in &d.children {
        if child.rule.kind() == RuleKind::Terminating {
            let t = sole_terminal(&child.rule)?;
            comp = comp.partial_apply(arg, t).map_err(GrammarError::from)?;
        } else {
            children.push(fuse_terminals(child)?);
            arg += 1;
        }
    }
    let rhs = children.iter().map(|c| c.rule.lhs.clone()).collect();
    Ok(Derivation { rule: Rule::new(d.rule.lhs.clone(), rhs, comp)?, children })
}

/// Pulls one word up into every two-child rule, bottom-up.
pub fn propagate_terminals(d: &Derivation) -> Result<Derivation, LexError> {
    let mut d = d.clone();
    prop_node(&mut d)?;
    Ok(d)
}

fn prop_node(d: &mut Derivation) -> Result<(), LexError> {
    for c in &mut d.children {
        prop_node(c)?;
    }
    match d.children.len() {
        0 | 1 => Ok(()),
        2 => {
            let (sigma, child_minus) = pull_front(&mut d.children[1])?;
            let mut comps = d.rule.comp.components().to_vec();
            splice_at(&mut comps, 2, sigma, child_minus)?;
            let mut rhs = d.rule.rhs.clone();
            rhs[1] = d.children[1].rule.lhs.clone();
            d.rule = Rule::new(d.rule.lhs.clone(), rhs, rebuild(comps)?)?;
            Ok(())
        }
        n => Err(LexError::NotBinarized(n)),
    }
}

/// Removes and returns the leading terminal of this path node, first
/// pulling the replacement for it out of the first child (if any). The
/// flag reports whether this node's first component emptied away.
fn pull_front(d: &mut Derivation) -> Result<(Terminal, bool), LexError> {
    let mut comps = d.rule.comp.components().to_vec();
    let mut rhs = d.rule.rhs.clone();
    let mut swapped = d.rule.swapped;
    if !d.children.is_empty() {
        let (sigma, child_minus) = pull_front(&mut d.children[0])?;
        let anchor = splice_at(&mut comps, 1, sigma, child_minus)?;
        if anchor != (0, 0) {
            // The word this rule passes up is its own; the one it keeps
            // came from below. Undoing the move must swap them back.
            swapped = true;
        }
        rhs[0] = d.children[0].rule.lhs.clone();
    }
    match comps[0].first() {
        Some(Symbol::Term(_)) => {}
        _ => return Err(LexError::FrontNotTerminal(d.rule.to_string())),
    }
    let Symbol::Term(out) = comps[0].remove(0) else { unreachable!() };
    let went_minus = comps[0].is_empty();
    let mut lhs = d.rule.lhs.clone();
    if went_minus {
        comps.remove(0);
        lhs.fanout -= 1;
    }
    lhs.ann = if went_minus { Annotation::Minus } else { Annotation::Plus };
    d.rule = Rule::new(lhs, rhs, rebuild(comps)?)?.with_swapped(swapped);
    Ok((out, went_minus))
}

/// Inserts `sigma` where x_{arg}^1 sits: in front of it, or in its place
/// when the argument lost its first component (the remaining components
/// then shift down). Returns the anchor position.
fn splice_at(
    comps: &mut Vec<Vec<Symbol>>,
    arg: u8,
    sigma: Terminal,
    child_minus: bool,
) -> Result<(usize, usize), LexError> {
    let (ci, si) = find_var(comps, arg, 1).ok_or(LexError::NoAnchor(arg, 1))?;
    if child_minus {
        comps[ci][si] = Symbol::Term(sigma);
        shift_arg(comps, arg, -1);
    } else {
        comps[ci].insert(si, Symbol::Term(sigma));
    }
    Ok((ci, si))
}

fn rebuild(comps: Vec<Vec<Symbol>>) -> Result<Composition, LexError> {
    Ok(Composition::new(comps).map_err(GrammarError::from)?)
}

/// Replaces the second word of every two-word terminating rule with a
/// reference to a fresh `^R`-marked child that derives just that word.
pub fn split_doubles(d: &Derivation) -> Result<Derivation, LexError> {
    let mut children: Vec<Derivation> =
        d.children.iter().map(split_doubles).collect::<Result<_, _>>()?;
    let rule = &d.rule;
    if !(rule.kind() == RuleKind::Terminating && rule.comp.terminal_count() == 2) {
        let rhs = children.iter().map(|c| c.rule.lhs.clone()).collect();
        return Ok(Derivation {
            rule: Rule::new(rule.lhs.clone(), rhs, rule.comp.clone())?
                .with_swapped(rule.swapped),
            children,
        });
    }
    let mut comps = rule.comp.components().to_vec();
    let mut second = None;
    let mut seen = 0;
    'outer: for (ci, c) in comps.iter().enumerate() {
        for (si, sym) in c.iter().enumerate() {
            if let Symbol::Term(t) = sym {
                seen += 1;
                if seen == 2 {
                    second = Some((ci, si, *t));
                    break 'outer;
                }
            }
        }
    }
    let (ci, si, t) = second.expect("two terminals counted");
    comps[ci][si] = Symbol::var(1, 1);
    let right = Nonterminal::from_parts(rule.lhs.parts.clone(), 1, Annotation::Right);
    let right_rule = Rule::new(
        right.clone(),
        vec![],
        rebuild(vec![vec![Symbol::Term(t)]])?,
    )?;
    children.push(Derivation { rule: right_rule, children: vec![] });
    Ok(Derivation {
        rule: Rule::new(rule.lhs.clone(), vec![right], rebuild(comps)?)?,
        children,
    })
}

/// The full pipeline. The result derives the same string tuple and every
/// rule carries exactly one terminal.
pub fn lexicalize(d: &Derivation) -> Result<Derivation, LexError> {
    let out = split_doubles(&propagate_terminals(&fuse_terminals(&collapse_chains(d))?)?)?;
    out.validate()?;
    for rule in out.rules() {
        if rule.lexical_count() != 1 {
            return Err(LexError::TerminalCount {
                rule: rule.to_string(),
                found: rule.lexical_count(),
                expected: 1,
            });
        }
    }
    Ok(out)
}
