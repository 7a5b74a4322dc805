//! Baseline supertagger: a smoothed word/tag lookup with suffix backoff
//! for unknown words. Every word gets a full ranking over the whole
//! inventory (smoothing leaves no zeros), so the k-best list for k+1
//! extends the one for k; growing k can only add candidates.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::supertag::{Lexicon, TaggedWord};

#[derive(thiserror::Error, Debug)]
pub enum TaggerError {
    #[error("line {line}: {detail}")]
    BadLine { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn bad_line(line: usize, detail: impl Into<String>) -> TaggerError {
    TaggerError::BadLine { line, detail: detail.into() }
}

#[derive(Debug, Default, Clone, PartialEq)]
struct CountRow {
    total: u64,
    counts: BTreeMap<usize, u64>,
}

impl CountRow {
    fn add(&mut self, tag: usize, n: u64) {
        self.total += n;
        *self.counts.entry(tag).or_insert(0) += n;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub lambda: f64,
    pub max_suffix: usize,
    pub n_tags: usize,
    words: BTreeMap<String, CountRow>,
    suffixes: BTreeMap<String, CountRow>,
    global: CountRow,
}

/// Character (not byte) suffixes of `word`, longest first, capped at
/// `max` characters.
fn suffixes_of(word: &str, max: usize) -> impl Iterator<Item = &str> {
    let starts: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .rev()
        .take(max)
        .collect();
    let mut starts = starts;
    starts.reverse();
    starts.into_iter().map(move |i| &word[i..])
}

impl BaselineModel {
    pub fn train(lexicon: &Lexicon, n_tags: usize, lambda: f64, max_suffix: usize) -> Self {
        let mut model = BaselineModel {
            lambda,
            max_suffix,
            n_tags,
            words: BTreeMap::new(),
            suffixes: BTreeMap::new(),
            global: CountRow::default(),
        };
        for ((word, tag), count) in &lexicon.counts {
            model.words.entry(word.clone()).or_default().add(*tag, *count);
            for s in suffixes_of(word, max_suffix) {
                model.suffixes.entry(s.to_string()).or_default().add(*tag, *count);
            }
            model.global.add(*tag, *count);
        }
        model
    }

    /// Natural-log probabilities of every tag for this row, best first;
    /// equal scores are ordered by tag id.
    fn rank(&self, row: &CountRow, k: usize) -> Vec<(usize, f64)> {
        let denom = row.total as f64 + self.lambda * self.n_tags as f64;
        let mut scored: Vec<(usize, f64)> = (0..self.n_tags)
            .map(|t| {
                let c = row.counts.get(&t).copied().unwrap_or(0);
                (t, ((c as f64 + self.lambda) / denom).ln())
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }

    fn row_for(&self, word: &str) -> &CountRow {
        if let Some(row) = self.words.get(word) {
            return row;
        }
        for s in suffixes_of(word, self.max_suffix) {
            if let Some(row) = self.suffixes.get(s) {
                return row;
            }
        }
        &self.global
    }

    /// The k most probable tags for a word, with ln-probabilities.
    pub fn predict(&self, word: &str, k: usize) -> Vec<(usize, f64)> {
        self.rank(self.row_for(word), k)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), TaggerError> {
        writeln!(w, "lambda\t{}", self.lambda)?;
        writeln!(w, "maxsuffix\t{}", self.max_suffix)?;
        writeln!(w, "tags\t{}", self.n_tags)?;
        for (tag, count) in &self.global.counts {
            writeln!(w, "tag\t{tag}\t{count}")?;
        }
        for (word, row) in &self.words {
            for (tag, count) in &row.counts {
                writeln!(w, "word\t{word}\t{tag}\t{count}")?;
            }
        }
        for (suffix, row) in &self.suffixes {
            for (tag, count) in &row.counts {
                writeln!(w, "suffix\t{suffix}\t{tag}\t{count}")?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Self, TaggerError> {
        let mut model = BaselineModel {
            lambda: f64::NAN,
            max_suffix: 0,
            n_tags: 0,
            words: BTreeMap::new(),
            suffixes: BTreeMap::new(),
            global: CountRow::default(),
        };
        let mut seen_header = (false, false, false);
        for (no, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let lineno = no + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            match cols[0] {
                "lambda" if cols.len() == 2 => {
                    model.lambda = cols[1]
                        .parse()
                        .map_err(|_| bad_line(lineno, "bad lambda"))?;
                    seen_header.0 = true;
                }
                "maxsuffix" if cols.len() == 2 => {
                    model.max_suffix = cols[1]
                        .parse()
                        .map_err(|_| bad_line(lineno, "bad maxsuffix"))?;
                    seen_header.1 = true;
                }
                "tags" if cols.len() == 2 => {
                    model.n_tags =
                        cols[1].parse().map_err(|_| bad_line(lineno, "bad tag count"))?;
                    seen_header.2 = true;
                }
                "tag" if cols.len() == 3 => {
                    let tag = cols[1].parse().map_err(|_| bad_line(lineno, "bad tag id"))?;
                    let count =
                        cols[2].parse().map_err(|_| bad_line(lineno, "bad count"))?;
                    model.global.add(tag, count);
                }
                "word" if cols.len() == 4 => {
                    let tag = cols[2].parse().map_err(|_| bad_line(lineno, "bad tag id"))?;
                    let count =
                        cols[3].parse().map_err(|_| bad_line(lineno, "bad count"))?;
                    model.words.entry(cols[1].to_string()).or_default().add(tag, count);
                }
                "suffix" if cols.len() == 4 => {
                    let tag = cols[2].parse().map_err(|_| bad_line(lineno, "bad tag id"))?;
                    let count =
                        cols[3].parse().map_err(|_| bad_line(lineno, "bad count"))?;
                    model
                        .suffixes
                        .entry(cols[1].to_string())
                        .or_default()
                        .add(tag, count);
                }
                other => {
                    return Err(bad_line(lineno, format!("unknown section `{other}`")));
                }
            }
        }
        if seen_header != (true, true, true) {
            return Err(bad_line(1, "missing lambda/maxsuffix/tags header"));
        }
        Ok(model)
    }
}

/// One word of one sentence with its candidate tags, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub position: u32,
    pub word: String,
    pub tags: Vec<(usize, f64)>,
}

pub type SentencePredictions = Vec<Prediction>;

/// Runs the model over whole sentences.
pub fn predict_sentences(
    model: &BaselineModel,
    sentences: &[Vec<String>],
    k: usize,
) -> Vec<SentencePredictions> {
    sentences
        .iter()
        .map(|words| {
            words
                .iter()
                .enumerate()
                .map(|(i, w)| Prediction {
                    position: i as u32 + 1,
                    word: w.clone(),
                    tags: model.predict(w, k),
                })
                .collect()
        })
        .collect()
}

/// Perfect single-candidate predictions read straight off gold tag
/// sequences, for oracle experiments.
pub fn gold_predictions(sequences: &[Vec<TaggedWord>]) -> Vec<SentencePredictions> {
    sequences
        .iter()
        .map(|sent| {
            sent.iter()
                .map(|(t, tag)| Prediction {
                    position: t.position,
                    word: t.word.to_string(),
                    tags: vec![(*tag, 0.0)],
                })
                .collect()
        })
        .collect()
}

pub fn write_predictions<W: Write>(
    w: &mut W,
    sentences: &[SentencePredictions],
) -> Result<(), TaggerError> {
    for (sid, sent) in sentences.iter().enumerate() {
        if sid > 0 {
            writeln!(w)?;
        }
        for p in sent {
            let tags = p
                .tags
                .iter()
                .map(|(id, score)| format!("{id}:{score}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{}\t{}\t{}\t{tags}", sid + 1, p.position, p.word)?;
        }
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(
    r: &mut R,
) -> Result<Vec<SentencePredictions>, TaggerError> {
    let mut out: Vec<SentencePredictions> = Vec::new();
    let mut current: SentencePredictions = Vec::new();
    let mut current_sid: Option<usize> = None;
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = no + 1;
        if line.is_empty() {
            if let Some(_) = current_sid.take() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        if cols.len() != 4 {
            return Err(bad_line(lineno, "expected 4 tab-separated columns"));
        }
        let sid: usize = cols[0].parse().map_err(|_| bad_line(lineno, "bad sentence id"))?;
        let position: u32 =
            cols[1].parse().map_err(|_| bad_line(lineno, "bad position"))?;
        let mut tags = Vec::new();
        for part in cols[3].split(',').filter(|p| !p.is_empty()) {
            let (id, score) = part
                .split_once(':')
                .ok_or_else(|| bad_line(lineno, format!("bad candidate `{part}`")))?;
            let id = id.parse().map_err(|_| bad_line(lineno, "bad tag id"))?;
            let score =
                score.parse().map_err(|_| bad_line(lineno, "bad score"))?;
            tags.push((id, score));
        }
        match current_sid {
            Some(s) if s == sid => {}
            Some(_) => {
                out.push(std::mem::take(&mut current));
                current_sid = Some(sid);
            }
            None => current_sid = Some(sid),
        }
        current.push(Prediction { position, word: cols[2].to_string(), tags });
    }
    if current_sid.is_some() {
        out.push(current);
    }
    Ok(out)
}
