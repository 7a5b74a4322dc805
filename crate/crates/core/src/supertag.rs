//! Supertag inventories: the rules of a lexical derivation with their
//! word slot blanked out. Two rules that differ only in the word (and
//! its position) share a supertag; the part of speech stays, since the
//! tagger needs it and the way back to a tree does too.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::composition::{Composition, Symbol, Terminal};
use crate::grammar::{parse_rule_display, Derivation, GrammarError, Rule};
use crate::intern::{intern, Sym};

#[derive(thiserror::Error, Debug)]
pub enum SupertagError {
    #[error("rule `{0}` does not carry exactly one word")]
    NotUniLexical(String),
    #[error("template `{0}` must have exactly one blank slot and no words")]
    BadTemplate(String),
    #[error("line {line}: {detail}")]
    BadLine { line: usize, detail: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn bad_line(line: usize, detail: impl Into<String>) -> SupertagError {
    SupertagError::BadLine { line, detail: detail.into() }
}

/// A lexical rule with `<>` where its word was, plus the part of speech
/// the word carried.
#[derive(Debug, Clone, PartialEq)]
pub struct Supertag {
    pub rule: Rule,
    pub pos: Sym,
}

impl Supertag {
    /// Blanks the word of a uni-lexical rule; returns the template and
    /// the word occurrence it replaced.
    pub fn from_rule(rule: &Rule) -> Result<(Supertag, Terminal), SupertagError> {
        let mut comps = rule.comp.components().to_vec();
        let mut found = None;
        for (ci, c) in comps.iter().enumerate() {
            for (si, sym) in c.iter().enumerate() {
                if let Symbol::Term(t) = sym {
                    if found.is_some() {
                        return Err(SupertagError::NotUniLexical(rule.to_string()));
                    }
                    found = Some((ci, si, *t));
                }
            }
        }
        let (ci, si, t) =
            found.ok_or_else(|| SupertagError::NotUniLexical(rule.to_string()))?;
        comps[ci][si] = Symbol::Hole;
        let template = Rule::new(
            rule.lhs.clone(),
            rule.rhs.clone(),
            Composition::new(comps).map_err(GrammarError::from)?,
        )?
        .with_swapped(rule.swapped);
        Ok((Supertag { rule: template, pos: t.pos }, t))
    }

    /// Puts a word, sitting at a sentence position, into the blank slot.
    pub fn instantiate(&self, word: &str, position: u32) -> Rule {
        let mut comps = self.rule.comp.components().to_vec();
        let t = Terminal::new(word, self.pos.as_str(), position);
        'outer: for c in comps.iter_mut() {
            for sym in c.iter_mut() {
                if matches!(sym, Symbol::Hole) {
                    *sym = Symbol::Term(t);
                    break 'outer;
                }
            }
        }
        Rule::new(
            self.rule.lhs.clone(),
            self.rule.rhs.clone(),
            Composition::new(comps).expect("filled template stays well-formed"),
        )
        .expect("filled template stays well-formed")
        .with_swapped(self.rule.swapped)
    }

    fn check_template(&self) -> Result<(), SupertagError> {
        if self.rule.comp.hole_count() != 1 || self.rule.comp.terminal_count() != 0 {
            return Err(SupertagError::BadTemplate(self.rule.to_string()));
        }
        Ok(())
    }

    /// Identity of a tag across inventories: part-of-speech plus the
    /// printed template.
    pub fn key(&self) -> String {
        format!("{}\t{}", self.pos, self.rule)
    }
}

/// All supertags of a corpus, most frequent first (ties go by printed
/// form), so prefixes of the inventory are themselves useful tag sets.
#[derive(Debug, Default, Clone)]
pub struct Inventory {
    tags: Vec<Supertag>,
    freqs: Vec<u64>,
}

impl Inventory {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tag(&self, id: usize) -> &Supertag {
        &self.tags[id]
    }

    pub fn freq(&self, id: usize) -> u64 {
        self.freqs[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Supertag, u64)> {
        self.tags.iter().zip(&self.freqs).enumerate().map(|(i, (t, f))| (i, t, *f))
    }

    /// The largest left-hand-side fanout any tag can build.
    pub fn max_fanout(&self) -> u8 {
        self.tags.iter().map(|t| t.rule.lhs.fanout).max().unwrap_or(1)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), SupertagError> {
        writeln!(w, "{}", self.tags.len())?;
        for (i, tag, freq) in self.iter() {
            writeln!(w, "{i}\t{freq}\t{}\t{}", tag.pos, tag.rule)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Inventory, SupertagError> {
        let mut lines = r.lines();
        let head = lines
            .next()
            .ok_or_else(|| bad_line(1, "empty inventory"))??;
        let count: usize = head
            .trim()
            .parse()
            .map_err(|_| bad_line(1, format!("bad tag count `{head}`")))?;
        let mut inv = Inventory::default();
        for (no, line) in lines.enumerate() {
            let line = line?;
            let lineno = no + 2;
            let mut cols = line.splitn(4, '\t');
            let (idx, freq, pos, shown) =
                match (cols.next(), cols.next(), cols.next(), cols.next()) {
                    (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                    _ => return Err(bad_line(lineno, "expected 4 tab-separated columns")),
                };
            let idx: usize = idx
                .parse()
                .map_err(|_| bad_line(lineno, format!("bad index `{idx}`")))?;
            if idx != inv.tags.len() {
                return Err(bad_line(lineno, format!("index `{idx}` out of order")));
            }
            let freq: u64 = freq
                .parse()
                .map_err(|_| bad_line(lineno, format!("bad frequency `{freq}`")))?;
            let rule = parse_rule_display(shown)
                .map_err(|e| bad_line(lineno, e.to_string()))?;
            let tag = Supertag { rule, pos: intern(pos) };
            tag.check_template()?;
            inv.tags.push(tag);
            inv.freqs.push(freq);
        }
        if inv.tags.len() != count {
            return Err(bad_line(
                1,
                format!("header says {count} tags, found {}", inv.tags.len()),
            ));
        }
        Ok(inv)
    }
}

/// One tagged word: where it sits, what it is, which tag it got.
pub type TaggedWord = (Terminal, usize);

/// Reads every rule of every lexical derivation off into an inventory,
/// returning also each sentence as its position-ordered tag sequence.
pub fn extract_supertags(
    derivs: &[Derivation],
) -> Result<(Inventory, Vec<Vec<TaggedWord>>), SupertagError> {
    let mut counts: HashMap<String, (Supertag, u64)> = HashMap::new();
    let mut raw: Vec<Vec<(Terminal, String)>> = Vec::new();
    for d in derivs {
        let mut sent = Vec::new();
        for rule in d.rules() {
            let (tag, t) = Supertag::from_rule(rule)?;
            let key = tag.key();
            counts.entry(key.clone()).or_insert((tag, 0)).1 += 1;
            sent.push((t, key));
        }
        sent.sort_by_key(|(t, _)| t.position);
        raw.push(sent);
    }
    let mut entries: Vec<(String, Supertag, u64)> =
        counts.into_iter().map(|(k, (t, f))| (k, t, f)).collect();
    entries.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    let ids: HashMap<String, usize> =
        entries.iter().enumerate().map(|(i, (k, _, _))| (k.clone(), i)).collect();
    let inventory = Inventory {
        tags: entries.iter().map(|(_, t, _)| t.clone()).collect(),
        freqs: entries.iter().map(|(_, _, f)| *f).collect(),
    };
    let sequences = raw
        .into_iter()
        .map(|sent| sent.into_iter().map(|(t, key)| (t, ids[&key])).collect())
        .collect();
    Ok((inventory, sequences))
}

/// Word/tag co-occurrence counts, the tagger's training table.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Lexicon {
    pub counts: BTreeMap<(String, usize), u64>,
}

impl Lexicon {
    pub fn observe(&mut self, word: &str, tag: usize) {
        *self.counts.entry((word.to_string(), tag)).or_insert(0) += 1;
    }

    pub fn from_sequences(sequences: &[Vec<TaggedWord>]) -> Lexicon {
        let mut lex = Lexicon::default();
        for sent in sequences {
            for (t, tag) in sent {
                lex.observe(t.word.as_str(), *tag);
            }
        }
        lex
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), SupertagError> {
        for ((word, tag), count) in &self.counts {
            writeln!(w, "{word}\t{tag}\t{count}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Lexicon, SupertagError> {
        let mut lex = Lexicon::default();
        for (no, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let lineno = no + 1;
            let mut cols = line.splitn(3, '\t');
            let (word, tag, count) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(bad_line(lineno, "expected 3 tab-separated columns")),
            };
            let tag: usize =
                tag.parse().map_err(|_| bad_line(lineno, format!("bad tag id `{tag}`")))?;
            let count: u64 = count
                .parse()
                .map_err(|_| bad_line(lineno, format!("bad count `{count}`")))?;
            *lex.counts.entry((word.to_string(), tag)).or_insert(0) += count;
        }
        Ok(lex)
    }
}
