//! Acceptance suite. Each test checks one release criterion and prints
//! a single PASS line with the measured numbers (visible with
//! `cargo test --test acceptance -- --nocapture`).

mod common;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::time::Instant;

use common::{derive, lex_derive, max_node_fanout, mini, mini_all, random_tree};
use distag::composition::{Composition, Symbol, Terminal};
use distag::eval::{score_treebank, tag_accuracy, EvalPolicy};
use distag::export::read_export;
use distag::grammar::{Annotation, Derivation, Nonterminal, Rule};
use distag::lexicalize::{collapse_chains, fuse_terminals, propagate_terminals, split_doubles};
use distag::parser::{parse, parse_with_fallback, ParseStatus};
use distag::supertag::{extract_supertags, Inventory, Lexicon};
use distag::tagger::{gold_predictions, predict_sentences, BaselineModel, SentencePredictions};
use distag::unlexicalize::{
    defuse_terminals, expand_chains, merge_split, recover_tree, unpropagate,
};
use distag::DiscoTree;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn nt(label: &str, fanout: u8) -> Nonterminal {
    Nonterminal::new(label, fanout)
}

fn term(word: &str, pos: &str, position: u32) -> Symbol {
    Symbol::Term(Terminal::new(word, pos, position))
}

fn rule(lhs: Nonterminal, rhs: Vec<Nonterminal>, comps: Vec<Vec<Symbol>>) -> Rule {
    Rule::new(lhs, rhs, Composition::new(comps).unwrap()).unwrap()
}

fn node(r: Rule, children: Vec<Derivation>) -> Derivation {
    Derivation::new(r, children).unwrap()
}

fn tag_leaf(pos: &str, word: &str, position: u32) -> Derivation {
    node(rule(nt(pos, 1), vec![], vec![vec![term(word, pos, position)]]), vec![])
}

/// Indented pre-order print of a derivation; goldens compare these.
fn outline(d: &Derivation) -> String {
    fn rec(d: &Derivation, depth: usize, out: &mut String) {
        out.push_str(&"  ".repeat(depth));
        out.push_str(&d.rule.to_string());
        out.push('\n');
        d.children.iter().for_each(|c| rec(c, depth + 1, out));
    }
    let mut s = String::new();
    rec(d, 0, &mut s);
    s
}

/// The published worked example for removing unary chains: a derivation
/// of "scheduled today" whose right branch is a three-rule chain.
fn chain_example() -> Derivation {
    let chain = node(
        rule(nt("NP", 1), vec![nt("NP-LOC", 1)], vec![vec![Symbol::var(1, 1)]]),
        vec![node(
            rule(nt("NP-LOC", 1), vec![nt("NN", 1)], vec![vec![Symbol::var(1, 1)]]),
            vec![tag_leaf("NN", "today", 2)],
        )],
    );
    node(
        rule(
            nt("VP|<>", 1),
            vec![nt("VBN", 1), nt("NP", 1)],
            vec![vec![Symbol::var(1, 1), Symbol::var(2, 1)]],
        ),
        vec![tag_leaf("VBN", "scheduled", 1), chain],
    )
}

const CHAIN_BEFORE: &str = "\
VP|<> -> (x1^1 x2^1) (VBN, NP)
  VBN -> (\"scheduled\") ()
  NP -> (x1^1) (NP-LOC)
    NP-LOC -> (x1^1) (NN)
      NN -> (\"today\") ()
";

const CHAIN_AFTER: &str = "\
VP|<> -> (x1^1 x2^1) (VBN, NP+NP-LOC+NN)
  VBN -> (\"scheduled\") ()
  NP+NP-LOC+NN -> (\"today\") ()
";

/// The published worked example for the remaining steps: a derivation of
/// the discontinuous noun phrase ("A hearing", "on the issue").
fn noun_phrase_example() -> Derivation {
    let pair = vec![vec![Symbol::var(1, 1), Symbol::var(2, 1)]];
    let left = node(
        rule(nt("NP", 1), vec![nt("DT", 1), nt("NN", 1)], pair.clone()),
        vec![tag_leaf("DT", "A", 1), tag_leaf("NN", "hearing", 2)],
    );
    let inner = node(
        rule(nt("NP", 1), vec![nt("DT", 1), nt("NN", 1)], pair.clone()),
        vec![tag_leaf("DT", "the", 5), tag_leaf("NN", "issue", 6)],
    );
    let pp = node(
        rule(nt("PP", 1), vec![nt("IN", 1), nt("NP", 1)], pair),
        vec![tag_leaf("IN", "on", 4), inner],
    );
    node(
        rule(
            nt("NP", 2),
            vec![nt("NP", 1), nt("PP", 1)],
            vec![vec![Symbol::var(1, 1)], vec![Symbol::var(2, 1)]],
        ),
        vec![left, pp],
    )
}

const NP_PLAIN: &str = "\
NP_2 -> (x1^1, x2^1) (NP, PP)
  NP -> (x1^1 x2^1) (DT, NN)
    DT -> (\"A\") ()
    NN -> (\"hearing\") ()
  PP -> (x1^1 x2^1) (IN, NP)
    IN -> (\"on\") ()
    NP -> (x1^1 x2^1) (DT, NN)
      DT -> (\"the\") ()
      NN -> (\"issue\") ()
";

const NP_FUSED: &str = "\
NP_2 -> (x1^1, x2^1) (NP, PP)
  NP -> (\"A\" \"hearing\") ()
  PP -> (\"on\" x1^1) (NP)
    NP -> (\"the\" \"issue\") ()
";

const NP_PROPAGATED: &str = "\
NP_2 -> (x1^1, \"on\" x2^1) (NP, PP^+)
  NP -> (\"A\" \"hearing\") ()
  PP^+ -> (\"the\" x1^1) (NP^+) [swapped]
    NP^+ -> (\"issue\") ()
";

const NP_SPLIT: &str = "\
NP_2 -> (x1^1, \"on\" x2^1) (NP, PP^+)
  NP -> (\"A\" x1^1) (NP^R)
    NP^R -> (\"hearing\") ()
  PP^+ -> (\"the\" x1^1) (NP^+) [swapped]
    NP^+ -> (\"issue\") ()
";

#[test]
fn criterion_1_worked_example_goldens() {
    let start = Instant::now();

    let chain = chain_example();
    assert_eq!(outline(&chain), CHAIN_BEFORE);
    let collapsed = collapse_chains(&chain);
    assert_eq!(outline(&collapsed), CHAIN_AFTER, "chain collapse");
    assert_eq!(outline(&expand_chains(&collapsed)), CHAIN_BEFORE, "chain collapse inverse");

    let plain = noun_phrase_example();
    assert_eq!(outline(&plain), NP_PLAIN);
    let fused = fuse_terminals(&plain).unwrap();
    assert_eq!(outline(&fused), NP_FUSED, "terminal fusing");
    assert_eq!(outline(&defuse_terminals(&fused).unwrap()), NP_PLAIN, "fusing inverse");

    let propagated = propagate_terminals(&fused).unwrap();
    assert_eq!(outline(&propagated), NP_PROPAGATED, "terminal propagation");
    assert_eq!(
        outline(&unpropagate(&propagated).unwrap()),
        NP_FUSED,
        "propagation inverse"
    );

    let split = split_doubles(&propagated).unwrap();
    assert_eq!(outline(&split), NP_SPLIT, "double-terminal split");
    assert_eq!(outline(&merge_split(&split).unwrap()), NP_PROPAGATED, "split inverse");

    // Every step preserved the derived tuple.
    for d in [&plain, &fused, &propagated, &split] {
        assert_eq!(
            d.yield_words().unwrap(),
            vec!["A hearing".to_string(), "on the issue".to_string()]
        );
        assert_eq!(d.yield_positions().unwrap(), vec![vec![1, 2], vec![4, 5, 6]]);
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    println!("PASS criterion 1: all four worked-example steps and their inverses match ({elapsed:?})");
}

#[test]
fn criterion_2_bundled_treebank_roundtrips_exactly() {
    let start = Instant::now();
    let trees = mini_all();
    assert!(trees.len() >= 50, "bundled treebank has {} trees", trees.len());
    let disc = trees.iter().filter(|t| t.is_discontinuous()).count();
    assert!(
        disc * 10 >= trees.len() * 3,
        "only {disc}/{} trees are discontinuous",
        trees.len()
    );
    let sentence =
        |t: &DiscoTree| t.leaves().iter().map(|l| l.word.to_string()).collect::<Vec<_>>().join(" ");
    assert!(
        trees.iter().any(|t| sentence(t) == "a hearing is scheduled on the issue today ."),
        "the extraposition example sentence is missing"
    );

    let mut failed: Vec<usize> = Vec::new();
    for (i, tree) in trees.iter().enumerate() {
        match recover_tree(&lex_derive(tree)) {
            Ok(got) if got.to_string() == tree.to_string() => {}
            _ => failed.push(i + 1),
        }
    }
    assert!(failed.is_empty(), "sentences {failed:?} did not roundtrip");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0);
    println!(
        "PASS criterion 2: {}/{} trees roundtrip exactly, {disc} discontinuous ({elapsed:?})",
        trees.len(),
        trees.len()
    );
}

#[test]
fn criterion_3_oracle_parse_is_perfect() {
    let start = Instant::now();
    let trees = mini_all();
    let derivs: Vec<Derivation> = trees.iter().map(lex_derive).collect();
    let (inventory, sequences) = extract_supertags(&derivs).unwrap();
    let preds = gold_predictions(&sequences);
    let parsed: Vec<DiscoTree> = preds
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let outcome = parse(&inventory, "ROOT", p, 1)
                .unwrap()
                .unwrap_or_else(|| panic!("sentence {} has no gold-tag parse", i + 1));
            recover_tree(&outcome.derivation).unwrap()
        })
        .collect();
    let score = score_treebank(&trees, &parsed, &EvalPolicy::standard("ROOT")).unwrap();
    assert!(score.disc.gold > 0, "no discontinuous constituents were scored");
    assert_eq!(score.all.f1(), Some(100.0), "oracle F1");
    assert_eq!(score.disc.f1(), Some(100.0), "oracle Dis-F1");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0);
    println!(
        "PASS criterion 3: gold supertags at k=1 give F1 100.00 and Dis-F1 100.00 over {} constituents ({elapsed:?})",
        score.all.gold
    );
}

#[test]
fn criterion_4_lexicality_and_counting_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut trees = mini_all();
    for _ in 0..1000 {
        trees.push(random_tree(&mut rng, 8));
    }
    let mut lexed: Vec<Derivation> = Vec::with_capacity(trees.len());
    for tree in &trees {
        let base = derive(tree);
        let words = base.yield_words().unwrap();
        let positions = base.yield_positions().unwrap();
        let steps = [
            collapse_chains(&base),
            fuse_terminals(&collapse_chains(&base)).unwrap(),
            propagate_terminals(&fuse_terminals(&collapse_chains(&base)).unwrap()).unwrap(),
            lexicalize(&base),
        ];
        for (i, step) in steps.iter().enumerate() {
            assert_eq!(step.yield_words().unwrap(), words, "step {i} changed the words");
            assert_eq!(step.yield_positions().unwrap(), positions, "step {i} moved positions");
        }
        let lex = &steps[3];
        let n = tree.leaves().len();
        assert_eq!(lex.node_count(), n, "n-word sentence must use exactly n rules");
        for r in lex.rules() {
            assert_eq!(r.lexical_count(), 1, "non-uni-lexical rule {r}");
        }
        assert_eq!(recover_tree(lex).unwrap().to_string(), tree.to_string());
        lexed.push(lex.clone());
    }
    let (inventory, _) = extract_supertags(&lexed).unwrap();
    for (_, tag, _) in inventory.iter() {
        assert_eq!(tag.rule.comp.hole_count(), 1);
        assert_eq!(tag.rule.comp.terminal_count(), 0);
    }
    println!(
        "PASS criterion 4: invariants hold over {} derivations and {} extracted templates",
        trees.len(),
        inventory.len()
    );
}

fn lexicalize(d: &Derivation) -> Derivation {
    distag::lexicalize::lexicalize(d).unwrap()
}

/// Independent oracle for criterion 5: saturates the full set of
/// derivable (nonterminal, position runs, score) triples by evaluating
/// compositions over explicit position sequences, then takes the best
/// goal score. Scores fold left exactly like derivation scoring.
fn brute_force_best(
    inventory: &Inventory,
    initial: &str,
    preds: &SentencePredictions,
    k: usize,
) -> Option<f64> {
    type Runs = Vec<Vec<u32>>;
    fn apply(rule: &Rule, children: &[&Runs]) -> Option<Runs> {
        let mut runs: Runs = Vec::new();
        for comp in rule.comp.components() {
            let mut run: Vec<u32> = Vec::new();
            for sym in comp {
                match sym {
                    Symbol::Term(t) => run.push(t.position),
                    Symbol::Var(v) => {
                        run.extend_from_slice(&children[v.arg as usize - 1][v.comp as usize - 1])
                    }
                    Symbol::Hole => return None,
                }
            }
            runs.push(run);
        }
        let mut prev_end: Option<u32> = None;
        for run in &runs {
            if run.is_empty() {
                return None;
            }
            for w in run.windows(2) {
                if w[1] != w[0] + 1 {
                    return None;
                }
            }
            if prev_end.is_some_and(|e| run[0] <= e) {
                return None;
            }
            prev_end = Some(*run.last()?);
        }
        Some(runs)
    }

    let rules: Vec<(Rule, f64)> = preds
        .iter()
        .flat_map(|p| {
            p.tags
                .iter()
                .take(k)
                .map(|&(id, w)| (inventory.tag(id).instantiate(&p.word, p.position), w))
        })
        .collect();

    let mut seen: HashSet<(Nonterminal, Runs, u64)> = HashSet::new();
    let mut pool: Vec<(Nonterminal, Runs, f64)> = Vec::new();
    let add = |nt: Nonterminal,
                   runs: Runs,
                   score: f64,
                   seen: &mut HashSet<(Nonterminal, Runs, u64)>,
                   pool: &mut Vec<(Nonterminal, Runs, f64)>| {
        if seen.insert((nt.clone(), runs.clone(), score.to_bits())) {
            pool.push((nt, runs, score));
        }
    };
    loop {
        let snapshot = pool.clone();
        let before = seen.len();
        for (rule, w) in &rules {
            match rule.rhs.len() {
                0 => {
                    if let Some(runs) = apply(rule, &[]) {
                        add(rule.lhs.clone(), runs, *w, &mut seen, &mut pool);
                    }
                }
                1 => {
                    for (child, runs, s) in &snapshot {
                        if *child != rule.rhs[0] {
                            continue;
                        }
                        if let Some(out) = apply(rule, &[runs]) {
                            let mut score = *w;
                            score += *s;
                            add(rule.lhs.clone(), out, score, &mut seen, &mut pool);
                        }
                    }
                }
                _ => {
                    for (c1, r1, s1) in &snapshot {
                        if *c1 != rule.rhs[0] {
                            continue;
                        }
                        for (c2, r2, s2) in &snapshot {
                            if *c2 != rule.rhs[1] {
                                continue;
                            }
                            if let Some(out) = apply(rule, &[r1, r2]) {
                                let mut score = *w;
                                score += *s1;
                                score += *s2;
                                add(rule.lhs.clone(), out, score, &mut seen, &mut pool);
                            }
                        }
                    }
                }
            }
        }
        if seen.len() == before {
            break;
        }
    }

    let n = preds.len() as u32;
    let goal: Vec<u32> = (1..=n).collect();
    let mut best: Option<f64> = None;
    for (nt, runs, score) in &pool {
        let hit = nt.ann == Annotation::Plain
            && nt.fanout == 1
            && nt.parts[0].as_str() == initial
            && runs.len() == 1
            && runs[0] == goal;
        if hit && best.is_none_or(|b| *score > b) {
            best = Some(*score);
        }
    }
    best
}

#[test]
fn criterion_5_parser_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce5);
    let mut with_parse = 0usize;
    let mut without = 0usize;
    for instance in 0..200 {
        let tree = loop {
            let t = random_tree(&mut rng, 6);
            if max_node_fanout(&t) <= 2 {
                break t;
            }
        };
        let (inventory, sequences) = extract_supertags(&[lex_derive(&tree)]).unwrap();
        let mut preds = gold_predictions(&sequences).remove(0);
        for p in &mut preds {
            let gold_id = p.tags[0].0;
            let mut tags: Vec<(usize, f64)> = Vec::new();
            if rng.gen_bool(0.85) {
                tags.push((gold_id, -4.0 * rng.gen::<f64>()));
            }
            while tags.len() < 3 && rng.gen_bool(0.7) {
                tags.push((rng.gen_range(0..inventory.len()), -4.0 * rng.gen::<f64>()));
            }
            if tags.is_empty() {
                tags.push((rng.gen_range(0..inventory.len()), -1.0));
            }
            tags.shuffle(&mut rng);
            p.tags = tags;
        }
        let agenda = parse(&inventory, "ROOT", &preds, 3).unwrap().map(|o| o.score);
        let brute = brute_force_best(&inventory, "ROOT", &preds, 3);
        assert_eq!(agenda, brute, "instance {instance} disagrees");
        match agenda {
            Some(_) => with_parse += 1,
            None => without += 1,
        }
    }
    assert!(with_parse > 0 && without > 0, "degenerate sample: {with_parse}/{without}");
    println!(
        "PASS criterion 5: 200 random instances agree exactly ({with_parse} parses, {without} rejections)"
    );
}

#[test]
fn criterion_6_k_monotonicity_on_dev() {
    let train_derivs: Vec<Derivation> = mini("train").iter().map(lex_derive).collect();
    let (inventory, train_seqs) = extract_supertags(&train_derivs).unwrap();
    let lexicon = Lexicon::from_sequences(&train_seqs);
    let model = BaselineModel::train(&lexicon, inventory.len(), 0.1, 4);

    let dev_derivs: Vec<Derivation> = mini("dev").iter().map(lex_derive).collect();
    let (dev_inventory, dev_seqs) = extract_supertags(&dev_derivs).unwrap();
    let by_key: HashMap<String, usize> =
        inventory.iter().map(|(id, tag, _)| (tag.key(), id)).collect();
    let gold: Vec<Vec<Option<usize>>> = dev_seqs
        .iter()
        .map(|seq| {
            seq.iter().map(|(_, id)| by_key.get(&dev_inventory.tag(*id).key()).copied()).collect()
        })
        .collect();
    let sentences: Vec<Vec<String>> = dev_seqs
        .iter()
        .map(|seq| seq.iter().map(|(t, _)| t.word.to_string()).collect())
        .collect();
    let preds = predict_sentences(&model, &sentences, 10);

    let ks = [1usize, 2, 3, 5, 10];
    let accuracy: Vec<f64> =
        ks.iter().map(|&k| tag_accuracy(&gold, &preds, k).unwrap()).collect();
    let coverage: Vec<usize> = ks
        .iter()
        .map(|&k| preds.iter().filter(|p| parse(&inventory, "ROOT", p, k).unwrap().is_some()).count())
        .collect();
    for w in accuracy.windows(2) {
        assert!(w[1] >= w[0], "tag accuracy dropped: {accuracy:?}");
    }
    for w in coverage.windows(2) {
        assert!(w[1] >= w[0], "parse coverage dropped: {coverage:?}");
    }
    println!(
        "PASS criterion 6: over k={ks:?} tag accuracy {accuracy:?} and coverage {coverage:?} never decrease"
    );
}

#[test]
fn criterion_7_corpus_mode_on_an_export_treebank() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("resources/mini/train.export");
    let trees = read_export(BufReader::new(File::open(path).unwrap()), "ROOT").unwrap();
    let derivs: Vec<Derivation> = trees.iter().map(lex_derive).collect();
    let (inventory, sequences) = extract_supertags(&derivs).unwrap();

    let tokens: usize = sequences.iter().map(|s| s.len()).sum();
    let occurrences: u64 = inventory.iter().map(|(_, _, freq)| freq).sum();
    assert!(inventory.len() > 0);
    assert_eq!(occurrences as usize, tokens, "tag frequencies must cover every token");

    let preds = gold_predictions(&sequences);
    let parsed: Vec<DiscoTree> = preds
        .iter()
        .map(|p| {
            let outcome = parse(&inventory, "ROOT", p, 1).unwrap().expect("oracle parse");
            recover_tree(&outcome.derivation).unwrap()
        })
        .collect();
    let score = score_treebank(&trees, &parsed, &EvalPolicy::standard("ROOT")).unwrap();
    assert_eq!(score.all.f1(), Some(100.0));
    println!(
        "PASS criterion 7: corpus mode reads export input, extracts {} tag types over {tokens} tokens, oracle F1 100.00",
        inventory.len()
    );
}

#[test]
fn criterion_8_parsing_speed() {
    let train_derivs: Vec<Derivation> = mini("train").iter().map(lex_derive).collect();
    let (inventory, train_seqs) = extract_supertags(&train_derivs).unwrap();
    let lexicon = Lexicon::from_sequences(&train_seqs);
    let model = BaselineModel::train(&lexicon, inventory.len(), 0.1, 4);

    let trees = mini_all();
    let sentences: Vec<Vec<String>> = trees
        .iter()
        .map(|t| t.leaves().iter().map(|l| l.word.to_string()).collect())
        .collect();
    let preds = predict_sentences(&model, &sentences, 10);

    let start = Instant::now();
    let mut ok = 0usize;
    let mut fallback = 0usize;
    let mut noparse = 0usize;
    for p in &preds {
        match parse_with_fallback(&inventory, "ROOT", p, 10).unwrap().1 {
            ParseStatus::Ok => ok += 1,
            ParseStatus::Fallback(_) => fallback += 1,
            ParseStatus::NoParse => noparse += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let rate = trees.len() as f64 / secs;
    assert!(rate >= 50.0, "parsed at {rate:.1} sentences/s");
    println!(
        "PASS criterion 8: {rate:.0} sentences/s at k=10 ({ok} ok, {fallback} fallback, {noparse} none)"
    );
}
