//! Scoring predicted trees against gold trees.
//!
//! Constituents are compared as (label, position set) pairs, as
//! multisets so stacked nodes with the same label and span count with
//! their multiplicity. Before comparison, positions of ignored
//! punctuation tags are removed from every constituent (constituents
//! left empty disappear), and the top node is dropped when it carries
//! the artificial root label. Discontinuity-restricted metrics keep —
//! on each side separately — only constituents whose filtered position
//! set falls into two or more runs. Ratios with an empty denominator
//! are undefined and print as "n/a".

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::intern::{intern, Sym};
use crate::tagger::SentencePredictions;
use crate::tree::{count_runs, DiscoTree};

#[derive(thiserror::Error, Debug)]
pub enum EvalError {
    #[error("sentence {0}: {1}")]
    Mismatch(usize, String),
}

/// What to ignore when comparing trees.
pub struct EvalPolicy {
    pub root_label: Sym,
    pub punct_pos: HashSet<Sym>,
}

impl EvalPolicy {
    pub fn new(root_label: &str, punct: &[&str]) -> Self {
        EvalPolicy {
            root_label: intern(root_label),
            punct_pos: punct.iter().map(|p| intern(p)).collect(),
        }
    }

    /// The usual punctuation tag inventory of English and German
    /// treebanks.
    pub fn standard(root_label: &str) -> Self {
        Self::new(
            root_label,
            &[",", ".", ":", "''", "``", "-LRB-", "-RRB-", "$,", "$.", "$(", "$["],
        )
    }
}

/// The constituents a tree is scored on, after policy filtering.
fn scored_items(tree: &DiscoTree, policy: &EvalPolicy) -> Vec<(Sym, BTreeSet<u32>)> {
    let punct: BTreeSet<u32> = tree
        .leaves()
        .iter()
        .filter(|l| policy.punct_pos.contains(&l.pos))
        .map(|l| l.position)
        .collect();
    let mut cons = tree.constituents();
    if cons.first().map(|(l, _)| *l) == Some(policy.root_label) {
        cons.remove(0);
    }
    cons.into_iter()
        .map(|(l, ps)| (l, &ps - &punct))
        .filter(|(_, ps)| !ps.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn precision(&self) -> Option<f64> {
        (self.predicted > 0).then(|| 100.0 * self.matched as f64 / self.predicted as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        (self.gold > 0).then(|| 100.0 * self.matched as f64 / self.gold as f64)
    }

    pub fn f1(&self) -> Option<f64> {
        let denom = self.predicted + self.gold;
        (denom > 0).then(|| 200.0 * self.matched as f64 / denom as f64)
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        self.matched += rhs.matched;
        self.predicted += rhs.predicted;
        self.gold += rhs.gold;
    }
}

fn multiset(items: &[(Sym, BTreeSet<u32>)]) -> HashMap<&(Sym, BTreeSet<u32>), usize> {
    let mut out = HashMap::new();
    for item in items {
        *out.entry(item).or_insert(0) += 1;
    }
    out
}

fn tally(gold: &[(Sym, BTreeSet<u32>)], pred: &[(Sym, BTreeSet<u32>)]) -> Counts {
    let g = multiset(gold);
    let matched = multiset(pred)
        .iter()
        .map(|(item, &c)| c.min(g.get(*item).copied().unwrap_or(0)))
        .sum();
    Counts { matched, predicted: pred.len(), gold: gold.len() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub all: Counts,
    pub disc: Counts,
    pub exact: bool,
}

/// Scores one predicted tree against its gold tree. The two must carry
/// the same tokens at the same positions.
pub fn score_pair(
    gold: &DiscoTree,
    pred: &DiscoTree,
    policy: &EvalPolicy,
) -> Result<PairScore, EvalError> {
    let toks = |t: &DiscoTree| -> Vec<(u32, Sym)> {
        t.leaves().iter().map(|l| (l.position, l.word)).collect()
    };
    if toks(gold) != toks(pred) {
        return Err(EvalError::Mismatch(0, "gold and predicted tokens differ".into()));
    }
    let g = scored_items(gold, policy);
    let p = scored_items(pred, policy);
    let all = tally(&g, &p);
    let disc_of = |items: &[(Sym, BTreeSet<u32>)]| -> Vec<(Sym, BTreeSet<u32>)> {
        items.iter().filter(|(_, ps)| count_runs(ps) >= 2).cloned().collect()
    };
    let disc = tally(&disc_of(&g), &disc_of(&p));
    let exact = all.matched == all.gold && all.matched == all.predicted;
    Ok(PairScore { all, disc, exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TreebankScore {
    pub all: Counts,
    pub disc: Counts,
    pub sentences: usize,
    pub exact: usize,
}

impl TreebankScore {
    pub fn exact_rate(&self) -> Option<f64> {
        (self.sentences > 0).then(|| 100.0 * self.exact as f64 / self.sentences as f64)
    }
}

/// Micro-averaged scores over aligned gold and predicted treebanks.
pub fn score_treebank(
    gold: &[DiscoTree],
    pred: &[DiscoTree],
    policy: &EvalPolicy,
) -> Result<TreebankScore, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Mismatch(
            0,
            format!("{} gold vs {} predicted sentences", gold.len(), pred.len()),
        ));
    }
    let mut score = TreebankScore::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let pair = score_pair(g, p, policy)
            .map_err(|EvalError::Mismatch(_, d)| EvalError::Mismatch(i + 1, d))?;
        score.all += pair.all;
        score.disc += pair.disc;
        score.sentences += 1;
        score.exact += pair.exact as usize;
    }
    Ok(score)
}

/// Percentage of tokens whose gold tag id appears among the k best
/// candidates. `gold[s][i]` pairs with `preds[s][i]` in sentence
/// order; a gold tag absent from the inventory (`None`) is a miss.
pub fn tag_accuracy(
    gold: &[Vec<Option<usize>>],
    preds: &[SentencePredictions],
    k: usize,
) -> Option<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for (gs, ps) in gold.iter().zip(preds) {
        for (g, p) in gs.iter().zip(ps) {
            total += 1;
            if let Some(id) = g {
                if p.tags.iter().take(k).any(|&(t, _)| t == *id) {
                    hits += 1;
                }
            }
        }
    }
    (total > 0).then(|| 100.0 * hits as f64 / total as f64)
}

/// Parsed sentences per second of wall time.
pub fn sentences_per_second(sentences: usize, total_ms: f64) -> Option<f64> {
    (total_ms > 0.0).then(|| 1000.0 * sentences as f64 / total_ms)
}

pub fn fmt_metric(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "n/a".into())
}

/// Ordered metric rows, renderable as an aligned table for people or
/// tab-separated records for machines.
#[derive(Debug, Default)]
pub struct Report {
    rows: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, metric: &str, value: impl Into<String>) {
        self.rows.push((metric.to_string(), value.into()));
    }

    pub fn table(&self) -> String {
        let w = self.rows.iter().map(|(m, _)| m.len()).max().unwrap_or(0);
        self.rows
            .iter()
            .map(|(m, v)| format!("{m:<w$}  {v}\n"))
            .collect()
    }

    pub fn records(&self) -> String {
        self.rows.iter().map(|(m, v)| format!("{m}\t{v}\n")).collect()
    }
}

/// The rows every evaluation prints; callers append extras (tagging
/// accuracy, speed) behind these.
pub fn standard_report(score: &TreebankScore) -> Report {
    let mut r = Report::default();
    r.push("sentences", score.sentences.to_string());
    r.push("exact-match", fmt_metric(score.exact_rate()));
    r.push("precision", fmt_metric(score.all.precision()));
    r.push("recall", fmt_metric(score.all.recall()));
    r.push("f1", fmt_metric(score.all.f1()));
    r.push("dis-precision", fmt_metric(score.disc.precision()));
    r.push("dis-recall", fmt_metric(score.disc.recall()));
    r.push("dis-f1", fmt_metric(score.disc.f1()));
    r
}
