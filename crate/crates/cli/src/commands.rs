//! The seven subcommands. Each resolves its parameters through
//! [`Settings`], does its work, prints a summary, and writes a copy of
//! the resolved configuration next to whatever files it produced.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use distag::binarize::{binarize, Markov};
use distag::eval::{
    fmt_metric, score_treebank, sentences_per_second, standard_report, tag_accuracy, EvalPolicy,
    Report,
};
use distag::export::read_export;
use distag::grammar::{Derivation, Grammar};
use distag::induce::induce_derivation;
use distag::intern::intern;
use distag::lexicalize::{
    collapse_chains, fuse_terminals, lexicalize, propagate_terminals, split_doubles,
};
use distag::parser::{parse_with_fallback, ParseStatus};
use distag::supertag::{extract_supertags, Inventory, Lexicon, Supertag};
use distag::tagger::{
    predict_sentences, read_predictions, write_predictions, BaselineModel, Prediction,
    SentencePredictions,
};
use distag::tree::{read_brackets, DiscoTree};
use distag::unlexicalize::recover_tree;

use crate::config::{cfg_path, Settings};
use crate::{data, CliError};

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    /// Sniff from the file extension: `.export` or bracketings
    Auto,
    /// One bracketed tree per line, `position=word` leaves
    Discbracket,
    /// Column-oriented `#BOS`/`#EOS` blocks
    Export,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Format::Auto),
            "discbracket" => Ok(Format::Discbracket),
            "export" => Ok(Format::Export),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

impl Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Auto => "auto",
            Format::Discbracket => "discbracket",
            Format::Export => "export",
        })
    }
}

/// Flags shared by every command that reads a treebank.
#[derive(Args)]
pub struct CorpusArgs {
    /// Treebank format; `auto` sniffs the file extension
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Root label: wraps export sentences, names the start symbol
    #[arg(long)]
    root: Option<String>,
}

/// Flags shared by every command that binarizes trees.
#[derive(Args)]
pub struct MarkovArgs {
    /// Horizontal markovization: sibling history kept per node
    #[arg(long)]
    h: Option<usize>,
    /// Vertical markovization: ancestor labels kept per node, >= 1
    #[arg(long)]
    v: Option<usize>,
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Training treebank
    #[arg(long, value_name = "FILE")]
    train: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    markov: MarkovArgs,
    /// Directory for inventory.tsv, lexicon.tsv, grammar.tsv
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Word/tag count table written by `extract`
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Supertag inventory written by `extract`
    #[arg(long, value_name = "FILE")]
    inventory: Option<PathBuf>,
    /// Where the trained model goes
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Additive smoothing weight
    #[arg(long)]
    lambda: Option<f64>,
    /// Longest suffix the unknown-word backoff keys on
    #[arg(long)]
    max_suffix: Option<usize>,
}

#[derive(Args)]
pub struct TagArgs {
    /// Trained model; needs --input
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Raw sentences, one per line, whitespace-tokenized
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Gold treebank for oracle predictions; needs --inventory
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    /// Inventory the gold tags are mapped into
    #[arg(long, value_name = "FILE")]
    inventory: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    markov: MarkovArgs,
    /// Candidates kept per position
    #[arg(long)]
    k: Option<usize>,
    /// Prediction file to write
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ParseArgs {
    /// Supertag inventory the predictions index into
    #[arg(long, value_name = "FILE")]
    inventory: Option<PathBuf>,
    /// k-best prediction file from `tag`
    #[arg(long, value_name = "FILE")]
    predictions: Option<PathBuf>,
    /// Candidates per position the first parse attempt uses
    #[arg(long)]
    k: Option<usize>,
    /// Start symbol a finished parse must span
    #[arg(long)]
    root: Option<String>,
    /// Tree output, one bracketing per line
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Timing/status sidecar; default <out>.status
    #[arg(long, value_name = "FILE")]
    status: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Gold treebank
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    /// Predicted treebank
    #[arg(long, value_name = "FILE")]
    pred: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Comma-separated POS tags dropped as punctuation before scoring
    #[arg(long, value_name = "LIST")]
    ignore_pos: Option<String>,
    /// Print tab-separated records instead of an aligned table
    #[arg(long)]
    records: bool,
    /// Also write the report here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RoundtripArgs {
    /// Treebank to push through lexicalize/unlexicalize
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    markov: MarkovArgs,
}

#[derive(Args)]
pub struct SweepKArgs {
    /// Training treebank
    #[arg(long, value_name = "FILE")]
    train: Option<PathBuf>,
    /// Development treebank parsed at every k
    #[arg(long, value_name = "FILE")]
    dev: Option<PathBuf>,
    /// Comma-separated k values
    #[arg(long, value_name = "LIST")]
    ks: Option<String>,
    /// Additive smoothing weight
    #[arg(long)]
    lambda: Option<f64>,
    /// Longest suffix the unknown-word backoff keys on
    #[arg(long)]
    max_suffix: Option<usize>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    markov: MarkovArgs,
    /// Also write the table here as tab-separated records
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn file_err(path: &Path, e: impl Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn sent_err(sid: usize, e: impl Display) -> CliError {
    CliError::Data(format!("sentence {}: {e}", sid + 1))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| file_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| file_err(path, e))
}

fn resolve_corpus(cfg: &mut Settings, a: CorpusArgs) -> Result<(Format, String), CliError> {
    let format = cfg.pick("format", a.format, Format::Auto)?;
    let root = cfg.pick("root", a.root, "ROOT".to_string())?;
    Ok((format, root))
}

fn resolve_markov(cfg: &mut Settings, a: MarkovArgs) -> Result<Markov, CliError> {
    let h = cfg.pick("h", a.h, 0)?;
    let v = cfg.pick("v", a.v, 1)?;
    if v < 1 {
        return Err(CliError::Usage("v must be >= 1".into()));
    }
    Ok(Markov { h, v })
}

fn read_treebank(path: &Path, format: Format, root: &str) -> Result<Vec<DiscoTree>, CliError> {
    let as_export = match format {
        Format::Export => true,
        Format::Discbracket => false,
        Format::Auto => path.extension().is_some_and(|e| e == "export"),
    };
    let r = open(path)?;
    if as_export {
        read_export(r, root).map_err(|e| file_err(path, e))
    } else {
        read_brackets(r).map_err(|e| file_err(path, e))
    }
}

/// binarize -> induce -> lexicalize, errors tagged with the sentence id.
fn lexical_derivation(t: &DiscoTree, markov: Markov, sid: usize) -> Result<Derivation, CliError> {
    let d = induce_derivation(&binarize(t, markov)).map_err(|e| sent_err(sid, e))?;
    lexicalize(&d).map_err(|e| sent_err(sid, e))
}

/// A derivation's supertag keys in sentence order, with their tokens.
fn tag_rows(d: &Derivation) -> Result<Vec<(distag::composition::Terminal, String)>, CliError> {
    let mut rows = Vec::new();
    for rule in d.rules() {
        let (tag, t) = Supertag::from_rule(rule).map_err(data)?;
        rows.push((t, tag.key()));
    }
    rows.sort_by_key(|(t, _)| t.position);
    Ok(rows)
}

pub fn extract(cfg: &mut Settings, a: ExtractArgs) -> Result<(), CliError> {
    let train = cfg.pick_input("train", a.train)?;
    let (format, root) = resolve_corpus(cfg, a.corpus)?;
    let markov = resolve_markov(cfg, a.markov)?;
    let out_dir = cfg.pick_path("out-dir", a.out_dir)?;

    let trees = read_treebank(&train, format, &root)?;
    if trees.is_empty() {
        return Err(CliError::Data(format!("{}: empty treebank", train.display())));
    }
    let bad: Vec<String> = trees
        .iter()
        .enumerate()
        .filter(|(_, t)| t.sentence().is_err() || t.fanout() != 1)
        .map(|(i, _)| (i + 1).to_string())
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Data(format!(
            "root must cover one contiguous span 1..n; violated by sentence(s) {}",
            bad.join(", ")
        )));
    }

    let mut counts = [0usize; 5]; // after binarize, collapse, fuse, propagate, split
    let mut tokens = 0usize;
    let mut derivs = Vec::with_capacity(trees.len());
    for (i, t) in trees.iter().enumerate() {
        let d0 = induce_derivation(&binarize(t, markov)).map_err(|e| sent_err(i, e))?;
        counts[0] += d0.node_count();
        let d1 = collapse_chains(&d0);
        counts[1] += d1.node_count();
        let d2 = fuse_terminals(&d1).map_err(|e| sent_err(i, e))?;
        counts[2] += d2.node_count();
        let d3 = propagate_terminals(&d2).map_err(|e| sent_err(i, e))?;
        counts[3] += d3.node_count();
        let d4 = split_doubles(&d3).map_err(|e| sent_err(i, e))?;
        counts[4] += d4.node_count();
        if d4.rules().iter().any(|r| r.lexical_count() != 1) {
            return Err(CliError::Invariant(format!(
                "sentence {}: lexicalization left a rule without exactly one word",
                i + 1
            )));
        }
        tokens += t.leaves().len();
        derivs.push(d4);
    }
    if counts[4] != tokens {
        return Err(CliError::Invariant(format!(
            "{} rules after splitting but {tokens} tokens",
            counts[4]
        )));
    }

    let (inventory, sequences) = extract_supertags(&derivs).map_err(data)?;
    let lexicon = Lexicon::from_sequences(&sequences);
    let grammar = Grammar::from_derivations(intern(&root), derivs.iter());

    fs::create_dir_all(&out_dir).map_err(|e| file_err(&out_dir, e))?;
    let inv_path = out_dir.join("inventory.tsv");
    inventory.write_to(&mut create(&inv_path)?).map_err(|e| file_err(&inv_path, e))?;
    let lex_path = out_dir.join("lexicon.tsv");
    lexicon.write_to(&mut create(&lex_path)?).map_err(|e| file_err(&lex_path, e))?;
    let gram_path = out_dir.join("grammar.tsv");
    grammar.write_to(create(&gram_path)?).map_err(|e| file_err(&gram_path, e))?;
    cfg.write_resolved(&out_dir.join("resolved.cfg"))?;

    let disc = trees.iter().filter(|t| t.is_discontinuous()).count();
    let mut r = Report::default();
    r.push("trees", trees.len().to_string());
    r.push("discontinuous trees", disc.to_string());
    r.push("tokens", tokens.to_string());
    r.push("rules after binarization", counts[0].to_string());
    r.push("rules after chain collapse", counts[1].to_string());
    r.push("rules after terminal fusion", counts[2].to_string());
    r.push("rules after propagation", counts[3].to_string());
    r.push("rules after double splitting", counts[4].to_string());
    r.push("supertag types", inventory.len().to_string());
    r.push("grammar rules", grammar.rules.len().to_string());
    print!("{}", r.table());
    Ok(())
}

pub fn train(cfg: &mut Settings, a: TrainArgs) -> Result<(), CliError> {
    let lex_path = cfg.pick_input("lexicon", a.lexicon)?;
    let inv_path = cfg.pick_input("inventory", a.inventory)?;
    let model_path = cfg.pick_path("model", a.model)?;
    let lambda = cfg.pick("lambda", a.lambda, 0.1)?;
    let max_suffix = cfg.pick("max-suffix", a.max_suffix, 4)?;
    if !(lambda > 0.0) {
        return Err(CliError::Usage("lambda must be positive".into()));
    }

    let lexicon = Lexicon::read_from(&mut open(&lex_path)?).map_err(|e| file_err(&lex_path, e))?;
    let inventory = Inventory::read_from(&mut open(&inv_path)?).map_err(|e| file_err(&inv_path, e))?;
    let model = BaselineModel::train(&lexicon, inventory.len(), lambda, max_suffix);
    model.write_to(&mut create(&model_path)?).map_err(|e| file_err(&model_path, e))?;
    cfg.write_resolved(&cfg_path(&model_path))?;
    println!(
        "trained on {} (word, tag) pairs over {} tag types",
        lexicon.counts.len(),
        inventory.len()
    );
    Ok(())
}

pub fn tag(cfg: &mut Settings, a: TagArgs) -> Result<(), CliError> {
    let k = cfg.pick("k", a.k, 10)?;
    if k < 1 {
        return Err(CliError::Usage("k must be >= 1".into()));
    }
    let out = cfg.pick_path("out", a.out)?;
    let model = cfg.pick_path_opt("model", a.model);
    let input = cfg.pick_path_opt("input", a.input);
    let gold = cfg.pick_path_opt("gold", a.gold);

    let (preds, note) = match (model, input, gold) {
        (Some(m), Some(i), None) => {
            let model = BaselineModel::read_from(&mut open(&m)?).map_err(|e| file_err(&m, e))?;
            let mut sentences: Vec<Vec<String>> = Vec::new();
            for line in open(&i)?.lines() {
                let line = line.map_err(|e| file_err(&i, e))?;
                let words: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if !words.is_empty() {
                    sentences.push(words);
                }
            }
            (predict_sentences(&model, &sentences, k), String::new())
        }
        (None, None, Some(g)) => {
            let inv_path = cfg.pick_input("inventory", a.inventory)?;
            let inventory =
                Inventory::read_from(&mut open(&inv_path)?).map_err(|e| file_err(&inv_path, e))?;
            let (format, root) = resolve_corpus(cfg, a.corpus)?;
            let markov = resolve_markov(cfg, a.markov)?;
            let trees = read_treebank(&g, format, &root)?;
            let key_to_id: HashMap<String, usize> =
                inventory.iter().map(|(id, t, _)| (t.key(), id)).collect();
            let mut unknown = 0usize;
            let mut preds: Vec<SentencePredictions> = Vec::with_capacity(trees.len());
            for (i, t) in trees.iter().enumerate() {
                let d = lexical_derivation(t, markov, i)?;
                let sent = tag_rows(&d)?
                    .into_iter()
                    .map(|(t, key)| Prediction {
                        position: t.position,
                        word: t.word.to_string(),
                        tags: match key_to_id.get(&key) {
                            Some(&id) => vec![(id, 0.0)],
                            None => {
                                unknown += 1;
                                vec![]
                            }
                        },
                    })
                    .collect();
                preds.push(sent);
            }
            let note = if unknown > 0 {
                format!("{unknown} tokens carry tags missing from the inventory")
            } else {
                String::new()
            };
            (preds, note)
        }
        _ => {
            return Err(CliError::Usage(
                "tag wants either --model with --input, or --gold with --inventory".into(),
            ))
        }
    };

    write_predictions(&mut create(&out)?, &preds).map_err(|e| file_err(&out, e))?;
    cfg.write_resolved(&cfg_path(&out))?;
    let tokens: usize = preds.iter().map(Vec::len).sum();
    println!("tagged {} sentences, {tokens} tokens, k = {k}", preds.len());
    if !note.is_empty() {
        eprintln!("warning: {note}");
    }
    Ok(())
}

pub fn parse(cfg: &mut Settings, a: ParseArgs) -> Result<(), CliError> {
    let inv_path = cfg.pick_input("inventory", a.inventory)?;
    let pred_path = cfg.pick_input("predictions", a.predictions)?;
    let k = cfg.pick("k", a.k, 10)?;
    if k < 1 {
        return Err(CliError::Usage("k must be >= 1".into()));
    }
    let root = cfg.pick("root", a.root, "ROOT".to_string())?;
    let out = cfg.pick_path("out", a.out)?;
    let status_path = cfg
        .pick_path_opt("status", a.status)
        .unwrap_or_else(|| PathBuf::from(format!("{}.status", out.display())));
    cfg.note("status", status_path.display());

    let inventory =
        Inventory::read_from(&mut open(&inv_path)?).map_err(|e| file_err(&inv_path, e))?;
    let preds = read_predictions(&mut open(&pred_path)?).map_err(|e| file_err(&pred_path, e))?;

    // Refuse inputs that cannot all parse cleanly before writing anything.
    for (s, sent) in preds.iter().enumerate() {
        for p in sent {
            if let Some(&(id, _)) = p.tags.iter().find(|&&(id, _)| id >= inventory.len()) {
                return Err(CliError::Data(format!(
                    "sentence {}: tag id {id} out of range for an inventory of {}",
                    s + 1,
                    inventory.len()
                )));
            }
        }
        let mut seen: Vec<u32> = sent.iter().map(|p| p.position).collect();
        seen.sort_unstable();
        if seen != (1..=sent.len() as u32).collect::<Vec<u32>>() {
            return Err(CliError::Data(format!(
                "sentence {}: positions are not exactly 1..{}",
                s + 1,
                sent.len()
            )));
        }
    }

    let t0 = Instant::now();
    // Sentences parse in parallel; collect keeps input order, so the
    // files below come out identical no matter the worker count.
    let results: Vec<(String, ParseStatus, f64)> = preds
        .par_iter()
        .map(|sent| {
            let start = Instant::now();
            let (tree, status) =
                parse_with_fallback(&inventory, &root, sent, k).expect("inputs validated");
            (tree.to_string(), status, start.elapsed().as_secs_f64() * 1000.0)
        })
        .collect();
    let total_ms = t0.elapsed().as_secs_f64() * 1000.0;

    let mut tw = create(&out)?;
    for (tree, _, _) in &results {
        writeln!(tw, "{tree}").map_err(|e| file_err(&out, e))?;
    }
    tw.flush().map_err(|e| file_err(&out, e))?;
    let mut sw = create(&status_path)?;
    for (i, (_, status, ms)) in results.iter().enumerate() {
        writeln!(sw, "{}\t{status}\t{ms:.3}", i + 1).map_err(|e| file_err(&status_path, e))?;
    }
    sw.flush().map_err(|e| file_err(&status_path, e))?;
    cfg.write_resolved(&cfg_path(&out))?;

    let mut ok = 0usize;
    let mut fallback = 0usize;
    let mut noparse = 0usize;
    for (_, status, _) in &results {
        match status {
            ParseStatus::Ok => ok += 1,
            ParseStatus::Fallback(_) => fallback += 1,
            ParseStatus::NoParse => noparse += 1,
        }
    }
    let mut r = Report::default();
    r.push("sentences", results.len().to_string());
    r.push("parsed at requested k", ok.to_string());
    r.push("parsed after widening", fallback.to_string());
    r.push("flat fallback", noparse.to_string());
    r.push("sent/s", fmt_metric(sentences_per_second(results.len(), total_ms)));
    print!("{}", r.table());
    Ok(())
}

pub fn eval(cfg: &mut Settings, a: EvalArgs) -> Result<(), CliError> {
    let gold_path = cfg.pick_input("gold", a.gold)?;
    let pred_path = cfg.pick_input("pred", a.pred)?;
    let (format, root) = resolve_corpus(cfg, a.corpus)?;
    let ignore = cfg.pick_opt("ignore-pos", a.ignore_pos)?;
    let policy = match &ignore {
        Some(list) => {
            let tags: Vec<&str> =
                list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            EvalPolicy::new(&root, &tags)
        }
        None => EvalPolicy::standard(&root),
    };
    let mut effective: Vec<&str> = policy.punct_pos.iter().map(|s| s.as_str()).collect();
    effective.sort_unstable();
    cfg.note("ignore-pos", effective.join(","));

    let gold = read_treebank(&gold_path, format, &root)?;
    let pred = read_treebank(&pred_path, format, &root)?;
    let score = score_treebank(&gold, &pred, &policy).map_err(data)?;
    let report = standard_report(&score);
    let text = if a.records { report.records() } else { report.table() };
    print!("{text}");
    if let Some(out) = cfg.pick_path_opt("out", a.out) {
        fs::write(&out, &text).map_err(|e| file_err(&out, e))?;
        cfg.write_resolved(&cfg_path(&out))?;
    }
    Ok(())
}

/// A unary node directly over a token: the one shape whose collapsed
/// chain label cannot be split back apart unambiguously.
fn has_unary_over_leaf(t: &DiscoTree) -> bool {
    (t.children().len() == 1 && t.children()[0].is_leaf())
        || t.children().iter().any(has_unary_over_leaf)
}

pub fn roundtrip(cfg: &mut Settings, a: RoundtripArgs) -> Result<(), CliError> {
    let input = cfg.pick_input("input", a.input)?;
    let (format, root) = resolve_corpus(cfg, a.corpus)?;
    let markov = resolve_markov(cfg, a.markov)?;
    let trees = read_treebank(&input, format, &root)?;

    let mut mismatches = 0usize;
    let mut known = 0usize;
    let mut first: Option<String> = None;
    for (i, t) in trees.iter().enumerate() {
        let mut want = t.clone();
        want.sort_canonical();
        let got = induce_derivation(&binarize(t, markov))
            .map_err(|e| e.to_string())
            .and_then(|d| lexicalize(&d).map_err(|e| e.to_string()))
            .and_then(|d| recover_tree(&d).map_err(|e| e.to_string()));
        if matches!(&got, Ok(g) if g.to_string() == want.to_string()) {
            continue;
        }
        mismatches += 1;
        let chain = got.is_ok() && has_unary_over_leaf(t);
        if chain {
            known += 1;
        }
        if first.is_none() {
            first = Some(match got {
                Ok(g) => format!(
                    "sentence {}:{}\n  expected {want}\n  got      {g}",
                    i + 1,
                    if chain { " (known unary-over-token chain case)" } else { "" },
                ),
                Err(e) => format!("sentence {}: pipeline failed: {e}", i + 1),
            });
        }
    }
    println!(
        "{} trees, {mismatches} mismatches ({known} known unary-chain cases)",
        trees.len()
    );
    if let Some(d) = first {
        println!("first mismatch:\n{d}");
    }
    if mismatches > known {
        return Err(CliError::Invariant(format!(
            "{} roundtrip mismatches beyond the known unary-chain cases",
            mismatches - known
        )));
    }
    Ok(())
}

pub fn sweep_k(cfg: &mut Settings, a: SweepKArgs) -> Result<(), CliError> {
    let train_path = cfg.pick_input("train", a.train)?;
    let dev_path = cfg.pick_input("dev", a.dev)?;
    let ks_raw = cfg.pick("ks", a.ks, "1,2,3,5,10".to_string())?;
    let mut ks: Vec<usize> = Vec::new();
    for part in ks_raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let k: usize = part
            .parse()
            .map_err(|_| CliError::Usage(format!("bad k value `{part}` in --ks")))?;
        if k < 1 {
            return Err(CliError::Usage("every k must be >= 1".into()));
        }
        ks.push(k);
    }
    if ks.is_empty() {
        return Err(CliError::Usage("--ks names no k values".into()));
    }
    let lambda = cfg.pick("lambda", a.lambda, 0.1)?;
    let max_suffix = cfg.pick("max-suffix", a.max_suffix, 4)?;
    if !(lambda > 0.0) {
        return Err(CliError::Usage("lambda must be positive".into()));
    }
    let (format, root) = resolve_corpus(cfg, a.corpus)?;
    let markov = resolve_markov(cfg, a.markov)?;

    let train_trees = read_treebank(&train_path, format, &root)?;
    if train_trees.is_empty() {
        return Err(CliError::Data(format!("{}: empty treebank", train_path.display())));
    }
    let mut derivs = Vec::with_capacity(train_trees.len());
    for (i, t) in train_trees.iter().enumerate() {
        derivs.push(lexical_derivation(t, markov, i)?);
    }
    let (inventory, sequences) = extract_supertags(&derivs).map_err(data)?;
    let lexicon = Lexicon::from_sequences(&sequences);
    let model = BaselineModel::train(&lexicon, inventory.len(), lambda, max_suffix);

    let dev_trees = read_treebank(&dev_path, format, &root)?;
    if dev_trees.is_empty() {
        return Err(CliError::Data(format!("{}: empty treebank", dev_path.display())));
    }
    let mut words: Vec<Vec<String>> = Vec::with_capacity(dev_trees.len());
    for (i, t) in dev_trees.iter().enumerate() {
        let leaves = t.sentence().map_err(|e| sent_err(i, e))?;
        words.push(leaves.iter().map(|l| l.word.to_string()).collect());
    }

    // Gold tag ids under the training inventory; a dev tree the
    // lexicalizer rejects just scores zero tagging accuracy.
    let key_to_id: HashMap<String, usize> =
        inventory.iter().map(|(id, t, _)| (t.key(), id)).collect();
    let mut unlexical = 0usize;
    let mut gold_ids: Vec<Vec<Option<usize>>> = Vec::with_capacity(dev_trees.len());
    for (i, t) in dev_trees.iter().enumerate() {
        match lexical_derivation(t, markov, i).and_then(|d| tag_rows(&d)) {
            Ok(rows) => gold_ids
                .push(rows.into_iter().map(|(_, key)| key_to_id.get(&key).copied()).collect()),
            Err(_) => {
                unlexical += 1;
                gold_ids.push(vec![None; words[i].len()]);
            }
        }
    }
    if unlexical > 0 {
        eprintln!("warning: {unlexical} dev trees did not lexicalize; their tags count as missed");
    }

    let kmax = *ks.iter().max().expect("ks nonempty");
    let preds = predict_sentences(&model, &words, kmax);
    let policy = EvalPolicy::standard(&root);

    let mut lines = vec![format!(
        "{:>4} {:>9} {:>8} {:>8} {:>8} {:>8}",
        "k", "sent/s", "tag-acc", "prec", "recall", "f1"
    )];
    let mut records = vec!["k\tsent_s\ttag_acc\tprecision\trecall\tf1".to_string()];
    for &k in &ks {
        // Truncating the candidate lists pins the parser to exactly
        // this k: there is nothing wider to fall back to.
        let cut: Vec<SentencePredictions> = preds
            .iter()
            .map(|sent| {
                sent.iter()
                    .map(|p| Prediction {
                        position: p.position,
                        word: p.word.clone(),
                        tags: p.tags.iter().take(k).copied().collect(),
                    })
                    .collect()
            })
            .collect();
        let t0 = Instant::now();
        let parsed: Vec<DiscoTree> = cut
            .par_iter()
            .map(|sent| {
                let (tree, _) =
                    parse_with_fallback(&inventory, &root, sent, k).expect("positions are 1..n");
                tree
            })
            .collect();
        let ms = t0.elapsed().as_secs_f64() * 1000.0;
        let acc = tag_accuracy(&gold_ids, &preds, k);
        let score = score_treebank(&dev_trees, &parsed, &policy).map_err(data)?;
        let cells = [
            fmt_metric(sentences_per_second(dev_trees.len(), ms)),
            fmt_metric(acc),
            fmt_metric(score.all.precision()),
            fmt_metric(score.all.recall()),
            fmt_metric(score.all.f1()),
        ];
        lines.push(format!(
            "{k:>4} {:>9} {:>8} {:>8} {:>8} {:>8}",
            cells[0], cells[1], cells[2], cells[3], cells[4]
        ));
        records.push(format!("{k}\t{}", cells.join("\t")));
    }
    for line in &lines {
        println!("{line}");
    }
    if let Some(out) = cfg.pick_path_opt("out", a.out) {
        fs::write(&out, records.join("\n") + "\n").map_err(|e| file_err(&out, e))?;
        cfg.write_resolved(&cfg_path(&out))?;
    }
    Ok(())
}
