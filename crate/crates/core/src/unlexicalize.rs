//! Undoes lexicalization: each step here inverts one step of the
//! forward pipeline, in reverse order. The `^+`/`^-` marks and swapped
//! flags left behind by propagation tell the inverse exactly which
//! rewrite happened where; they are erased once everything is back.
//!
//! One deliberate loss: a unary phrasal node directly over a leaf (say
//! `NP` over `NN`) collapses into a merged label whose rule is then
//! fused away entirely, and only the leaf's tag survives the way back.
//! Such nodes do not occur at the root, where chains are safe.

use crate::binarize::{unbinarize, BinarizeError};
use crate::composition::{Composition, Symbol, Terminal};
use crate::grammar::{Annotation, Derivation, GrammarError, Nonterminal, Rule, RuleKind};
use crate::lexicalize::{find_var, shift_arg};
use crate::tree::DiscoTree;

#[derive(thiserror::Error, Debug)]
pub enum UnlexError {
    #[error("corrupt lexical derivation: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Unbinarize(#[from] BinarizeError),
}

fn corrupt(msg: impl Into<String>) -> UnlexError {
    UnlexError::Corrupt(msg.into())
}

fn rebuild(comps: Vec<Vec<Symbol>>) -> Result<Composition, UnlexError> {
    Ok(Composition::new(comps).map_err(GrammarError::from)?)
}

fn sole_terminal(rule: &Rule) -> Result<Terminal, UnlexError> {
    let comps = rule.comp.components();
    if let [comp] = comps {
        if let [Symbol::Term(t)] = comp[..] {
            return Ok(t);
        }
    }
    Err(corrupt(format!("expected a single bare terminal in `{rule}`")))
}

/// Folds every `^R` child back into its parent, restoring two-word
/// terminating rules.
pub fn merge_split(d: &Derivation) -> Result<Derivation, UnlexError> {
    let children: Vec<Derivation> =
        d.children.iter().map(merge_split).collect::<Result<_, _>>()?;
    if let [right] = &children[..] {
        if right.rule.lhs.ann == Annotation::Right {
            if !right.children.is_empty() {
                return Err(corrupt("^R rule with children"));
            }
            let t = sole_terminal(&right.rule)?;
            let mut comps = d.rule.comp.components().to_vec();
            let (ci, si) =
                find_var(&comps, 1, 1).ok_or_else(|| corrupt("no x1^1 beside a ^R child"))?;
            comps[ci][si] = Symbol::Term(t);
            return Ok(Derivation {
                rule: Rule::new(d.rule.lhs.clone(), vec![], rebuild(comps)?)?,
                children: vec![],
            });
        }
    }
    let rhs = children.iter().map(|c| c.rule.lhs.clone()).collect();
    Ok(Derivation {
        rule: Rule::new(d.rule.lhs.clone(), rhs, d.rule.comp.clone())?
            .with_swapped(d.rule.swapped),
        children,
    })
}

/// Pushes the word of every two-child rule back down to the rule it was
/// pulled out of, then erases all propagation marks.
pub fn unpropagate(d: &Derivation) -> Result<Derivation, UnlexError> {
    for rule in d.rules() {
        if rule.lhs.ann == Annotation::Right
            || rule.rhs.iter().any(|n| n.ann == Annotation::Right)
        {
            return Err(corrupt("^R mark present; merge splits first"));
        }
    }
    let mut d = d.clone();
    unprop_node(&mut d)?;
    erase_marks(&mut d)?;
    d.validate().map_err(GrammarError::from)?;
    Ok(d)
}

fn unprop_node(d: &mut Derivation) -> Result<(), UnlexError> {
    for c in &mut d.children {
        unprop_node(c)?;
    }
    match d.children.len() {
        0 | 1 => Ok(()),
        2 => {
            let mut comps = d.rule.comp.components().to_vec();
            let mut spots = comps.iter().enumerate().flat_map(|(ci, c)| {
                c.iter().enumerate().filter_map(move |(si, sym)| match sym {
                    Symbol::Term(t) => Some((ci, si, *t)),
                    _ => None,
                })
            });
            let (ci, si, e) = match (spots.next(), spots.next()) {
                (Some(spot), None) => spot,
                _ => {
                    return Err(corrupt(format!(
                        "two-child rule `{}` must carry exactly one terminal",
                        d.rule
                    )))
                }
            };
            if d.children[1].rule.lhs.ann == Annotation::Minus {
                comps[ci][si] = Symbol::var(2, 0);
                shift_arg(&mut comps, 2, 1);
            } else {
                comps[ci].remove(si);
            }
            push_down(&mut d.children[1], e)?;
            let mut rhs = d.rule.rhs.clone();
            rhs[1] = d.children[1].rule.lhs.clone();
            d.rule = Rule::new(d.rule.lhs.clone(), rhs, rebuild(comps)?)?;
            Ok(())
        }
        n => Err(corrupt(format!("rule with {n} children"))),
    }
}

/// Re-attaches `p` at the front of this path node, undoing one pull.
fn push_down(d: &mut Derivation, p: Terminal) -> Result<(), UnlexError> {
    let mut comps = d.rule.comp.components().to_vec();
    let mut lhs = d.rule.lhs.clone();
    if d.children.is_empty() {
        if lhs.ann == Annotation::Minus {
            comps.insert(0, vec![Symbol::Term(p)]);
            lhs.fanout += 1;
        } else {
            comps[0].insert(0, Symbol::Term(p));
        }
        d.rule = Rule::new(lhs, vec![], rebuild(comps)?)?;
        return Ok(());
    }
    let child_minus = d.children[0].rule.lhs.ann == Annotation::Minus;
    let next_p;
    if d.rule.swapped {
        // This rule's own word went up; the stranger at the front goes
        // back down and `p` takes its original place.
        let Symbol::Term(e) = comps[0][0] else {
            return Err(corrupt(format!("swapped rule `{}` without a leading word", d.rule)));
        };
        comps[0][0] = Symbol::Term(p);
        if child_minus {
            comps[0].insert(1, Symbol::var(1, 0));
        }
        if lhs.ann == Annotation::Minus {
            let rest = comps[0].split_off(1);
            comps.insert(1, rest);
            lhs.fanout += 1;
        }
        if child_minus {
            shift_arg(&mut comps, 1, 1);
        }
        next_p = e;
    } else {
        if child_minus {
            if lhs.ann == Annotation::Minus {
                comps.insert(0, vec![Symbol::var(1, 0)]);
                lhs.fanout += 1;
            } else {
                comps[0].insert(0, Symbol::var(1, 0));
            }
            shift_arg(&mut comps, 1, 1);
        }
        next_p = p;
    }
    push_down(&mut d.children[0], next_p)?;
    let mut rhs = d.rule.rhs.clone();
    rhs[0] = d.children[0].rule.lhs.clone();
    d.rule = Rule::new(lhs, rhs, rebuild(comps)?)?.with_swapped(d.rule.swapped);
    Ok(())
}

fn erase_marks(d: &mut Derivation) -> Result<(), UnlexError> {
    for c in &mut d.children {
        erase_marks(c)?;
    }
    let mut lhs = d.rule.lhs.clone();
    lhs.ann = Annotation::Plain;
    let rhs = d.children.iter().map(|c| c.rule.lhs.clone()).collect();
    d.rule = Rule::new(lhs, rhs, d.rule.comp.clone())?;
    Ok(())
}

/// Re-expands fused words into terminating child rules tagged with the
/// part of speech each word carries.
pub fn defuse_terminals(d: &Derivation) -> Result<Derivation, UnlexError> {
    let children: Vec<Derivation> =
        d.children.iter().map(defuse_terminals).collect::<Result<_, _>>()?;
    let rule = &d.rule;
    let n_terms = rule.comp.terminal_count();
    match (rule.kind(), n_terms) {
        (RuleKind::Terminating, 2) => {
            let mut comps = rule.comp.components().to_vec();
            let mut tags = Vec::new();
            for c in comps.iter_mut() {
                for sym in c.iter_mut() {
                    if let Symbol::Term(t) = *sym {
                        tags.push(t);
                        *sym = Symbol::var(tags.len() as u8, 1);
                    }
                }
            }
            let kids: Vec<Derivation> =
                tags.iter().map(|t| tag_node(*t)).collect::<Result<_, _>>()?;
            let rhs = kids.iter().map(|k| k.rule.lhs.clone()).collect();
            Ok(Derivation {
                rule: Rule::new(rule.lhs.clone(), rhs, rebuild(comps)?)?,
                children: kids,
            })
        }
        (RuleKind::Monic, 1) => {
            let mut comps = rule.comp.components().to_vec();
            let t_spot = comps
                .iter()
                .enumerate()
                .flat_map(|(ci, c)| {
                    c.iter().enumerate().filter_map(move |(si, sym)| match sym {
                        Symbol::Term(t) => Some((ci, si, *t)),
                        _ => None,
                    })
                })
                .next()
                .expect("one terminal counted");
            let (ci, si, t) = t_spot;
            let v_spot = find_var(&comps, 1, 1).expect("monic rule uses x1^1");
            let tag = tag_node(t)?;
            let (rhs, kids);
            if (ci, si) < v_spot {
                // The word precedes the child, so it was argument one.
                for c in comps.iter_mut() {
                    for sym in c.iter_mut() {
                        if let Symbol::Var(v) = sym {
                            if v.arg == 1 {
                                v.arg = 2;
                            }
                        }
                    }
                }
                comps[ci][si] = Symbol::var(1, 1);
                rhs = vec![tag.rule.lhs.clone(), children[0].rule.lhs.clone()];
                kids = vec![tag, children.into_iter().next().unwrap()];
            } else {
                comps[ci][si] = Symbol::var(2, 1);
                rhs = vec![children[0].rule.lhs.clone(), tag.rule.lhs.clone()];
                kids = vec![children.into_iter().next().unwrap(), tag];
            }
            Ok(Derivation {
                rule: Rule::new(rule.lhs.clone(), rhs, rebuild(comps)?)?,
                children: kids,
            })
        }
        (RuleKind::Terminating, 1) => Ok(Derivation {
            rule: rule.clone(),
            children: vec![],
        }),
        (RuleKind::Branching, 0) => {
            let rhs = children.iter().map(|c| c.rule.lhs.clone()).collect();
            Ok(Derivation {
                rule: Rule::new(rule.lhs.clone(), rhs, rule.comp.clone())?,
                children,
            })
        }
        _ => Err(corrupt(format!(
            "rule `{rule}` has {n_terms} terminals after unpropagation"
        ))),
    }
}

fn tag_node(t: Terminal) -> Result<Derivation, UnlexError> {
    let rule = Rule::new(
        Nonterminal::from_parts(vec![t.pos], 1, Annotation::Plain),
        vec![],
        rebuild(vec![vec![Symbol::Term(t)]])?,
    )?;
    Ok(Derivation { rule, children: vec![] })
}

/// Splits merged `A+B` labels back into unary identity chains.
pub fn expand_chains(d: &Derivation) -> Derivation {
    let children: Vec<Derivation> = d.children.iter().map(expand_chains).collect();
    let rhs: Vec<Nonterminal> = children.iter().map(|c| c.rule.lhs.clone()).collect();
    let lhs = &d.rule.lhs;
    let fanout = lhs.fanout;
    let bottom = Nonterminal::from_parts(
        vec![*lhs.parts.last().expect("nonterminal has parts")],
        fanout,
        Annotation::Plain,
    );
    let mut node = Derivation {
        rule: Rule { lhs: bottom, rhs, comp: d.rule.comp.clone(), swapped: false },
        children,
    };
    for part in lhs.parts[..lhs.parts.len() - 1].iter().rev() {
        let up = Nonterminal::from_parts(vec![*part], fanout, Annotation::Plain);
        let rule = Rule::new(up, vec![node.rule.lhs.clone()], Composition::identity(fanout));
        node = Derivation {
            rule: rule.expect("identity wrapper is well-formed"),
            children: vec![node],
        };
    }
    node
}

/// The full inverse pipeline, back to a plain derivation of the
/// binarized tree.
pub fn unlexicalize(d: &Derivation) -> Result<Derivation, UnlexError> {
    let out = expand_chains(&defuse_terminals(&unpropagate(&merge_split(d)?)?)?);
    out.validate().map_err(GrammarError::from)?;
    Ok(out)
}

/// Reads the binarized tree off a plain derivation.
pub fn derivation_to_tree(d: &Derivation) -> Result<DiscoTree, UnlexError> {
    if d.rule.lhs.parts.len() != 1 {
        return Err(corrupt(format!("merged label `{}` in a plain derivation", d.rule.lhs)));
    }
    let label = d.rule.lhs.parts[0];
    if d.children.is_empty() {
        let t = sole_terminal(&d.rule)?;
        if t.pos != label {
            return Err(corrupt(format!("leaf tag `{}` under label `{label}`", t.pos)));
        }
        if t.position == 0 {
            return Err(corrupt(format!("unpositioned terminal for `{}`", t.word)));
        }
        return Ok(DiscoTree::leaf(t.pos.as_str(), t.word.as_str(), t.position));
    }
    let kids: Vec<DiscoTree> =
        d.children.iter().map(derivation_to_tree).collect::<Result<_, _>>()?;
    Ok(DiscoTree::internal(label.as_str(), kids))
}

/// Lexical derivation all the way back to the original tree.
pub fn recover_tree(d: &Derivation) -> Result<DiscoTree, UnlexError> {
    let bin = derivation_to_tree(&unlexicalize(d)?)?;
    let mut tree = unbinarize(&bin)?;
    tree.sort_canonical();
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binarize::{binarize, Markov};
    use crate::induce::induce_derivation;
    use crate::lexicalize::{
        collapse_chains, fuse_terminals, lexicalize, propagate_terminals, split_doubles,
        tests::{hearing_tree, minus_tree, swap_tree},
    };

    fn derive(t: &DiscoTree) -> Derivation {
        induce_derivation(&binarize(t, Markov::default())).unwrap()
    }

    fn lines(d: &Derivation) -> Vec<String> {
        let mut v: Vec<String> = d.rules().iter().map(|r| r.to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn merge_split_inverts_split_doubles() {
        for tree in [hearing_tree(), swap_tree(), minus_tree()] {
            let prop = propagate_terminals(
                &fuse_terminals(&collapse_chains(&derive(&tree))).unwrap(),
            )
            .unwrap();
            let split = split_doubles(&prop).unwrap();
            assert_eq!(lines(&merge_split(&split).unwrap()), lines(&prop));
        }
    }

    #[test]
    fn unpropagate_inverts_propagation() {
        for tree in [hearing_tree(), swap_tree(), minus_tree()] {
            let fused = fuse_terminals(&collapse_chains(&derive(&tree))).unwrap();
            let prop = propagate_terminals(&fused).unwrap();
            assert_eq!(lines(&unpropagate(&prop).unwrap()), lines(&fused));
        }
    }

    #[test]
    fn defuse_inverts_fusion() {
        for tree in [hearing_tree(), swap_tree(), minus_tree()] {
            let collapsed = collapse_chains(&derive(&tree));
            let fused = fuse_terminals(&collapsed).unwrap();
            assert_eq!(lines(&defuse_terminals(&fused).unwrap()), lines(&collapsed));
        }
    }

    #[test]
    fn expand_inverts_collapse() {
        for tree in [hearing_tree(), swap_tree(), minus_tree()] {
            let d = derive(&tree);
            assert_eq!(lines(&expand_chains(&collapse_chains(&d))), lines(&d));
        }
    }

    #[test]
    fn lexicalized_derivations_recover_their_trees() {
        let one = DiscoTree::internal(
            "ROOT",
            vec![DiscoTree::internal("S", vec![DiscoTree::leaf("UH", "yes", 1)])],
        );
        let two = DiscoTree::internal(
            "ROOT",
            vec![DiscoTree::internal(
                "S",
                vec![DiscoTree::leaf("A", "no", 1), DiscoTree::leaf("B", "way", 2)],
            )],
        );
        for tree in [hearing_tree(), swap_tree(), minus_tree(), one, two] {
            let lex = lexicalize(&derive(&tree)).unwrap();
            let mut want = tree.clone();
            want.sort_canonical();
            assert_eq!(recover_tree(&lex).unwrap().to_string(), want.to_string());
        }
    }

    #[test]
    fn unary_phrasal_node_over_a_leaf_loses_its_label() {
        // Documented limit: NP over NN fuses away; only the tag returns.
        let t = DiscoTree::internal(
            "ROOT",
            vec![DiscoTree::internal(
                "S",
                vec![
                    DiscoTree::internal("NP", vec![DiscoTree::leaf("NN", "cats", 1)]),
                    DiscoTree::leaf("VBP", "purr", 2),
                ],
            )],
        );
        let lex = lexicalize(&derive(&t)).unwrap();
        let back = recover_tree(&lex).unwrap();
        assert_eq!(back.to_string(), "(ROOT (S (NN 1=cats) (VBP 2=purr)))");
    }

    #[test]
    fn corrupt_input_is_rejected() {
        // A two-child rule holding two words can only be damage.
        let lex = lexicalize(&derive(&swap_tree())).unwrap();
        let mut bad = lex.clone();
        let mut comps = bad.rule.comp.components().to_vec();
        let spare = Terminal::new("extra", "X", 9);
        comps[0].insert(0, Symbol::Term(spare));
        bad.rule.comp = Composition::new(comps).unwrap();
        assert!(matches!(unpropagate(&merge_split(&bad).unwrap()), Err(UnlexError::Corrupt(_))));
    }
}
