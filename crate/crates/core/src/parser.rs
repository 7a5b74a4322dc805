//! Weighted chart parser over per-position supertag candidates.
//!
//! Every candidate tag at a sentence position becomes one rule with the
//! word filled in, weighted by the tagger's ln-probability. Items are
//! (nonterminal, component spans); the agenda is exhaustive, so an item
//! that improves is re-expanded and the final scores are exact maxima.
//! A parent's score is its rule weight plus its children's scores,
//! added left to right — the same fold a caller would use to score a
//! finished derivation, so totals compare bit-for-bit.

use std::collections::{BinaryHeap, HashMap};

use crate::composition::{Composition, Symbol};
use crate::grammar::{Annotation, Derivation, Nonterminal, Rule};
use crate::intern::{intern, Sym};
use crate::supertag::Inventory;
use crate::tagger::SentencePredictions;
use crate::tree::DiscoTree;
use crate::unlexicalize::recover_tree;

#[derive(thiserror::Error, Debug)]
pub enum ParseError {
    #[error("predictions must cover positions 1..=n: {0}")]
    BadPositions(String),
    #[error("tag id {0} outside the inventory")]
    BadTagId(usize),
}

/// Inclusive position range covered by one item component.
type Span = (u32, u32);

/// Evaluates a composition over the spans of its arguments. Fails when
/// adjacent symbols do not abut or components get out of order, which
/// also rules out any overlap.
fn apply_spans(comp: &Composition, children: &[&[Span]]) -> Option<Vec<Span>> {
    let mut out: Vec<Span> = Vec::with_capacity(comp.components().len());
    for component in comp.components() {
        let mut cur: Option<Span> = None;
        for sym in component {
            let (s, e) = match sym {
                Symbol::Term(t) => (t.position, t.position),
                Symbol::Var(v) => children[v.arg as usize - 1][v.comp as usize - 1],
                Symbol::Hole => return None,
            };
            cur = match cur {
                None => Some((s, e)),
                Some((cs, ce)) if s == ce + 1 => Some((cs, e)),
                Some(_) => return None,
            };
        }
        out.push(cur?);
    }
    for w in out.windows(2) {
        if w[1].0 <= w[0].1 {
            return None;
        }
    }
    Some(out)
}

struct PRule {
    rule: Rule,
    weight: f64,
}

struct Item {
    nt: Nonterminal,
    spans: Vec<Span>,
    best: f64,
    back: Option<(u32, Vec<u32>)>,
    expanded: bool,
}

struct Entry {
    score: f64,
    id: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Higher score first; earlier-discovered items break ties.
        self.score.total_cmp(&other.score).then(other.id.cmp(&self.id))
    }
}

#[derive(Debug)]
pub struct ParseOutcome {
    pub derivation: Derivation,
    pub score: f64,
}

struct Chart {
    items: Vec<Item>,
    index: HashMap<(Nonterminal, Vec<Span>), u32>,
    by_nt: HashMap<Nonterminal, Vec<u32>>,
    heap: BinaryHeap<Entry>,
}

impl Chart {
    fn new() -> Self {
        Chart {
            items: Vec::new(),
            index: HashMap::new(),
            by_nt: HashMap::new(),
            heap: BinaryHeap::new(),
        }
    }

    /// Records a derivation of an item; keeps the first derivation seen
    /// at any given score, so outcomes do not depend on heap internals.
    fn offer(&mut self, nt: &Nonterminal, spans: Vec<Span>, score: f64, back: (u32, Vec<u32>)) {
        match self.index.get(&(nt.clone(), spans.clone())) {
            None => {
                let id = self.items.len() as u32;
                self.items.push(Item {
                    nt: nt.clone(),
                    spans: spans.clone(),
                    best: score,
                    back: Some(back),
                    expanded: false,
                });
                self.index.insert((nt.clone(), spans), id);
                self.by_nt.entry(nt.clone()).or_default().push(id);
                self.heap.push(Entry { score, id });
            }
            Some(&id) => {
                let item = &mut self.items[id as usize];
                if score.total_cmp(&item.best) == std::cmp::Ordering::Greater {
                    item.best = score;
                    item.back = Some(back);
                    item.expanded = false;
                    self.heap.push(Entry { score, id });
                }
            }
        }
    }
}

/// Parses one sentence from its candidate lists, truncated to the `k`
/// best per position. Returns the best-scoring complete derivation.
pub fn parse(
    inventory: &Inventory,
    initial: &str,
    preds: &SentencePredictions,
    k: usize,
) -> Result<Option<ParseOutcome>, ParseError> {
    let n = preds.len() as u32;
    if n == 0 {
        return Ok(None);
    }
    let mut seen: Vec<u32> = preds.iter().map(|p| p.position).collect();
    seen.sort_unstable();
    if seen != (1..=n).collect::<Vec<u32>>() {
        return Err(ParseError::BadPositions(format!("{seen:?}")));
    }

    // One weighted rule per candidate tag per position.
    let mut prules: Vec<PRule> = Vec::new();
    let mut monic_by_child: HashMap<Nonterminal, Vec<u32>> = HashMap::new();
    let mut branch_by_left: HashMap<Nonterminal, Vec<u32>> = HashMap::new();
    let mut branch_by_right: HashMap<Nonterminal, Vec<u32>> = HashMap::new();
    let mut chart = Chart::new();
    for p in preds {
        for &(tag_id, weight) in p.tags.iter().take(k) {
            if tag_id >= inventory.len() {
                return Err(ParseError::BadTagId(tag_id));
            }
            let rule = inventory.tag(tag_id).instantiate(&p.word, p.position);
            let id = prules.len() as u32;
            match rule.rhs.len() {
                0 => {
                    if let Some(spans) = apply_spans(&rule.comp, &[]) {
                        let nt = rule.lhs.clone();
                        prules.push(PRule { rule, weight });
                        chart.offer(&nt, spans, weight, (id, vec![]));
                    }
                    continue;
                }
                1 => monic_by_child.entry(rule.rhs[0].clone()).or_default().push(id),
                _ => {
                    branch_by_left.entry(rule.rhs[0].clone()).or_default().push(id);
                    branch_by_right.entry(rule.rhs[1].clone()).or_default().push(id);
                }
            }
            prules.push(PRule { rule, weight });
        }
    }

    while let Some(Entry { score, id }) = chart.heap.pop() {
        let idx = id as usize;
        if score.total_cmp(&chart.items[idx].best) == std::cmp::Ordering::Less
            || chart.items[idx].expanded
        {
            continue;
        }
        chart.items[idx].expanded = true;
        let nt = chart.items[idx].nt.clone();
        let my_spans = chart.items[idx].spans.clone();
        let my_best = chart.items[idx].best;

        if let Some(rids) = monic_by_child.get(&nt) {
            for &rid in rids {
                let pr = &prules[rid as usize];
                if let Some(spans) = apply_spans(&pr.rule.comp, &[&my_spans]) {
                    let mut s = pr.weight;
                    s += my_best;
                    let lhs = pr.rule.lhs.clone();
                    chart.offer(&lhs, spans, s, (rid, vec![id]));
                }
            }
        }
        let pairings = [(&branch_by_left, true), (&branch_by_right, false)];
        for (index, self_is_left) in pairings {
            if let Some(rids) = index.get(&nt) {
                for &rid in rids.clone().iter() {
                    let pr = &prules[rid as usize];
                    let partner_nt =
                        if self_is_left { &pr.rule.rhs[1] } else { &pr.rule.rhs[0] };
                    let Some(partners) = chart.by_nt.get(partner_nt) else { continue };
                    for &jd in partners.clone().iter() {
                        let (left, right) =
                            if self_is_left { (id, jd) } else { (jd, id) };
                        let (ls, rs) = (
                            chart.items[left as usize].spans.clone(),
                            chart.items[right as usize].spans.clone(),
                        );
                        let pr = &prules[rid as usize];
                        if let Some(spans) = apply_spans(&pr.rule.comp, &[&ls, &rs]) {
                            let mut s = pr.weight;
                            s += chart.items[left as usize].best;
                            s += chart.items[right as usize].best;
                            let lhs = pr.rule.lhs.clone();
                            chart.offer(&lhs, spans, s, (rid, vec![left, right]));
                        }
                    }
                }
            }
        }
    }

    let initial = intern(initial);
    let mut goal: Option<u32> = None;
    for (i, item) in chart.items.iter().enumerate() {
        if is_goal(&item.nt, &item.spans, initial, n) {
            let better = match goal {
                None => true,
                Some(g) => {
                    item.best.total_cmp(&chart.items[g as usize].best)
                        == std::cmp::Ordering::Greater
                }
            };
            if better {
                goal = Some(i as u32);
            }
        }
    }
    Ok(goal.map(|g| ParseOutcome {
        derivation: build(&chart, &prules, g),
        score: chart.items[g as usize].best,
    }))
}

fn is_goal(nt: &Nonterminal, spans: &[Span], initial: Sym, n: u32) -> bool {
    nt.ann == Annotation::Plain
        && nt.fanout == 1
        && nt.parts[0] == initial
        && spans == [(1, n)]
}

fn build(chart: &Chart, prules: &[PRule], id: u32) -> Derivation {
    let item = &chart.items[id as usize];
    let (rid, ref kids) = *item.back.as_ref().expect("derived item has a backpointer");
    Derivation {
        rule: prules[rid as usize].rule.clone(),
        children: kids.iter().map(|&c| build(chart, prules, c)).collect(),
    }
}

/// How a sentence's parse was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseStatus {
    /// Parsed at the requested k.
    Ok,
    /// Parsed only after widening the candidate lists to this k.
    Fallback(usize),
    /// No parse at any k; a flat tree stands in.
    NoParse,
}

impl std::fmt::Display for ParseStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseStatus::Ok => write!(f, "ok"),
            ParseStatus::Fallback(k) => write!(f, "fallback-{k}"),
            ParseStatus::NoParse => write!(f, "noparse"),
        }
    }
}

/// Root-plus-leaves stand-in when nothing parses: tags from the top
/// candidates, all under one node.
fn flat_tree(inventory: &Inventory, initial: &str, preds: &SentencePredictions) -> DiscoTree {
    let leaves = preds
        .iter()
        .map(|p| {
            let pos = p
                .tags
                .first()
                .map(|&(id, _)| inventory.tag(id).pos.as_str())
                .unwrap_or("UNK");
            DiscoTree::leaf(pos, &p.word, p.position)
        })
        .collect();
    DiscoTree::internal(initial, leaves)
}

/// Parses with the requested k, doubling it while nothing parses (or a
/// winning derivation refuses to turn back into a tree), up to the
/// widest candidate lists available; after that, a flat tree.
pub fn parse_with_fallback(
    inventory: &Inventory,
    initial: &str,
    preds: &SentencePredictions,
    k: usize,
) -> Result<(DiscoTree, ParseStatus), ParseError> {
    let available = preds.iter().map(|p| p.tags.len()).max().unwrap_or(0);
    let mut ks = Vec::new();
    let mut kk = k.max(1);
    while kk < available {
        ks.push(kk);
        kk *= 2;
    }
    // Last try runs at full width; never report a wider k than exists.
    ks.push(kk.min(available).max(k.max(1)));
    for kk in ks {
        if let Some(outcome) = parse(inventory, initial, preds, kk)? {
            match recover_tree(&outcome.derivation) {
                Ok(tree) => {
                    let status =
                        if kk == k.max(1) { ParseStatus::Ok } else { ParseStatus::Fallback(kk) };
                    return Ok((tree, status));
                }
                Err(_) => continue,
            }
        }
    }
    Ok((flat_tree(inventory, initial, preds), ParseStatus::NoParse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binarize::{binarize, Markov};
    use crate::induce::induce_derivation;
    use crate::lexicalize::lexicalize;
    use crate::lexicalize::tests::{hearing_tree, minus_tree, swap_tree};
    use crate::supertag::extract_supertags;
    use crate::tagger::{gold_predictions, Prediction};

    fn pipeline(trees: &[DiscoTree]) -> (Inventory, Vec<SentencePredictions>, Vec<DiscoTree>) {
        let derivs: Vec<Derivation> = trees
            .iter()
            .map(|t| {
                lexicalize(&induce_derivation(&binarize(t, Markov::default())).unwrap()).unwrap()
            })
            .collect();
        let (inv, seqs) = extract_supertags(&derivs).unwrap();
        let preds = gold_predictions(&seqs);
        let mut canon: Vec<DiscoTree> = trees.to_vec();
        for t in &mut canon {
            t.sort_canonical();
        }
        (inv, preds, canon)
    }

    #[test]
    fn gold_tags_reparse_to_the_gold_trees() {
        let trees = [hearing_tree(), swap_tree(), minus_tree()];
        let (inv, preds, canon) = pipeline(&trees);
        for (p, want) in preds.iter().zip(&canon) {
            let outcome = parse(&inv, "ROOT", p, 1).unwrap().expect("gold tags parse");
            assert_eq!(outcome.score, 0.0);
            let got = recover_tree(&outcome.derivation).unwrap();
            assert_eq!(got.to_string(), want.to_string());
        }
    }

    #[test]
    fn one_word_chain_roots_are_accepted() {
        let t = DiscoTree::internal(
            "ROOT",
            vec![DiscoTree::internal("S", vec![DiscoTree::leaf("UH", "yes", 1)])],
        );
        let (inv, preds, canon) = pipeline(&[t]);
        let (tree, status) = parse_with_fallback(&inv, "ROOT", &preds[0], 1).unwrap();
        assert_eq!(status, ParseStatus::Ok);
        assert_eq!(tree.to_string(), canon[0].to_string());
    }

    #[test]
    fn best_scoring_candidate_wins() {
        let t = DiscoTree::internal(
            "ROOT",
            vec![DiscoTree::internal(
                "S",
                vec![DiscoTree::leaf("A", "no", 1), DiscoTree::leaf("B", "way", 2)],
            )],
        );
        let (inv, preds, _) = pipeline(&[t]);
        let mut p = preds[0].clone();
        // The gold candidate at position 2 appears twice with different
        // scores; the parser must keep the better-scored copy's total.
        let gold = p[1].tags[0];
        p[1].tags = vec![(gold.0, -2.5), (gold.0, -1.0)];
        let outcome = parse(&inv, "ROOT", &p, 2).unwrap().expect("parses");
        assert_eq!(outcome.score, -1.0);
    }

    #[test]
    fn widening_k_rescues_sentences_and_is_reported() {
        let t = DiscoTree::internal(
            "ROOT",
            vec![DiscoTree::internal(
                "S",
                vec![DiscoTree::leaf("A", "no", 1), DiscoTree::leaf("B", "way", 2)],
            )],
        );
        let (inv, preds, canon) = pipeline(&[t]);
        let mut p = preds[0].clone();
        let gold0 = p[0].tags[0];
        let gold1 = p[1].tags[0];
        // Wrong tag first at position 1: k=1 cannot parse, k=2 can.
        p[0].tags = vec![(gold1.0, -0.1), (gold0.0, -0.2)];
        p[1].tags = vec![(gold1.0, -0.1), (gold0.0, -0.3)];
        let (tree, status) = parse_with_fallback(&inv, "ROOT", &p, 1).unwrap();
        assert_eq!(status, ParseStatus::Fallback(2));
        assert_eq!(tree.to_string(), canon[0].to_string());
    }

    #[test]
    fn hopeless_sentences_get_a_flat_tree() {
        let trees = [hearing_tree()];
        let (inv, preds, _) = pipeline(&trees);
        let mut p = preds[0].clone();
        // Every position claims to be the sentence-final one-word rule.
        let vp_tag = (0..inv.len())
            .find(|&i| {
                inv.tag(i).rule.rhs.is_empty() && inv.tag(i).rule.lhs.to_string() == "VP^-"
            })
            .unwrap();
        for word in &mut p {
            word.tags = vec![(vp_tag, -0.5)];
        }
        let (tree, status) = parse_with_fallback(&inv, "ROOT", &p, 1).unwrap();
        assert_eq!(status, ParseStatus::NoParse);
        assert_eq!(tree.label().as_str(), "ROOT");
        assert_eq!(tree.children().len(), 8);
        assert!(tree.children().iter().all(|c| c.is_leaf()));
        let words: Vec<String> =
            tree.leaves().iter().map(|l| l.word.to_string()).collect();
        assert_eq!(words.join(" "), "A hearing is scheduled on the issue today");
    }

    #[test]
    fn malformed_positions_are_rejected() {
        let trees = [hearing_tree()];
        let (inv, preds, _) = pipeline(&trees);
        let mut p = preds[0].clone();
        p[3] = Prediction { position: 99, ..p[3].clone() };
        assert!(matches!(
            parse(&inv, "ROOT", &p, 1),
            Err(ParseError::BadPositions(_))
        ));
    }

    #[test]
    fn discontinuous_items_assemble_across_the_gap() {
        // The minus tree needs a fanout-2 item spanning {1,2} and {4}.
        let (inv, preds, canon) = pipeline(&[minus_tree()]);
        let outcome = parse(&inv, "ROOT", &preds[0], 1).unwrap().expect("parses");
        let got = recover_tree(&outcome.derivation).unwrap();
        assert_eq!(got.to_string(), canon[0].to_string());
        // And the winning derivation really contains a two-span item.
        let has_fanout2 = outcome
            .derivation
            .rules()
            .iter()
            .any(|r| r.rhs.iter().any(|n| n.fanout == 2));
        assert!(has_fanout2);
    }
}
