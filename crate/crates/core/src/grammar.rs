//! Rules, nonterminals, derivations and the on-disk grammar format.
//!
//! Nonterminal names print as their parts joined with `+` (merged chain
//! labels keep their history that way), followed by `_f` for fanout f >= 2
//! and one of the annotation suffixes `^+`, `^-`, `^R`. Parsing therefore
//! assumes original treebank labels contain no `+` and do not end in one of
//! those suffixes; the bundled corpora and the usual treebank label sets
//! satisfy this.

use std::fmt;
use std::io::{self, BufRead, Write};

use crate::composition::{Composition, CompositionError, Symbol, Terminal};
use crate::intern::{intern, Sym};

/// Marker attached to nonterminals while terminals are moved through a
/// derivation, so the moves can be undone later.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub enum Annotation {
    #[default]
    Plain,
    /// Received an extra terminal; kept its own fanout.
    Plus,
    /// Gave its first component away entirely; fanout shrank by one.
    Minus,
    /// Right remainder of a split two-terminal rule.
    Right,
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Annotation::Plain => Ok(()),
            Annotation::Plus => f.write_str("^+"),
            Annotation::Minus => f.write_str("^-"),
            Annotation::Right => f.write_str("^R"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Nonterminal {
    pub parts: Vec<Sym>,
    pub fanout: u8,
    pub ann: Annotation,
}

impl Nonterminal {
    pub fn new(label: &str, fanout: u8) -> Self {
        Nonterminal { parts: vec![intern(label)], fanout, ann: Annotation::Plain }
    }

    pub fn from_parts(parts: Vec<Sym>, fanout: u8, ann: Annotation) -> Self {
        debug_assert!(!parts.is_empty());
        Nonterminal { parts, fanout, ann }
    }

    /// A+B, the label of a collapsed unary chain.
    pub fn merged(top: &Nonterminal, bottom: &Nonterminal) -> Self {
        let mut parts = top.parts.clone();
        parts.extend_from_slice(&bottom.parts);
        Nonterminal { parts, fanout: bottom.fanout, ann: Annotation::Plain }
    }

    pub fn with_ann(mut self, ann: Annotation) -> Self {
        self.ann = ann;
        self
    }

    pub fn with_fanout(mut self, fanout: u8) -> Self {
        self.fanout = fanout;
        self
    }

    /// Parses a printed nonterminal. The fanout is not recoverable from the
    /// name alone (`_f` is only printed for f >= 2), so the caller supplies
    /// it from the accompanying composition.
    pub fn parse(s: &str, fanout: u8) -> Result<Self, GrammarError> {
        let (body, ann) = if let Some(b) = s.strip_suffix("^+") {
            (b, Annotation::Plus)
        } else if let Some(b) = s.strip_suffix("^-") {
            (b, Annotation::Minus)
        } else if let Some(b) = s.strip_suffix("^R") {
            (b, Annotation::Right)
        } else {
            (s, Annotation::Plain)
        };
        let body = if fanout >= 2 {
            body.strip_suffix(&format!("_{fanout}")).ok_or_else(|| GrammarError::Parse {
                what: "nonterminal",
                detail: format!("`{s}` lacks the _{fanout} fanout suffix"),
            })?
        } else {
            body
        };
        if body.is_empty() || body.split('+').any(str::is_empty) {
            return Err(GrammarError::Parse {
                what: "nonterminal",
                detail: format!("`{s}` has an empty label part"),
            });
        }
        Ok(Nonterminal { parts: body.split('+').map(intern).collect(), fanout, ann })
    }
}

impl fmt::Display for Nonterminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            f.write_str(p.as_str())?;
        }
        if self.fanout >= 2 {
            write!(f, "_{}", self.fanout)?;
        }
        write!(f, "{}", self.ann)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RuleKind {
    Terminating,
    Monic,
    Branching,
}

#[derive(thiserror::Error, Debug, PartialEq)]
pub enum GrammarError {
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error("rule has {rhs} right-hand sides but composition arity {arity}")]
    RuleArity { rhs: usize, arity: usize },
    #[error("argument {arg} has fanout {nt} but the composition uses {comp}")]
    ArgFanout { arg: usize, nt: u8, comp: u8 },
    #[error("left-hand side fanout {nt} does not match composition fanout {comp}")]
    LhsFanout { nt: u8, comp: u8 },
    #[error("derivation child {index} derives {got}, rule expects {expected}")]
    ChildMismatch { index: usize, expected: String, got: String },
    #[error("derivation has {got} children, rule takes {expected}")]
    ChildCount { expected: usize, got: usize },
    #[error("cannot parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },
    #[error("grammar files only carry terminals in plain part-of-speech rules")]
    UnsupportedTerminal,
}

/// A grammar rule lhs -> comp(rhs...). `swapped` records that terminal
/// propagation moved this monic rule's own terminal out and brought a
/// different one in, which matters when the move is undone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Rule {
    pub lhs: Nonterminal,
    pub rhs: Vec<Nonterminal>,
    pub comp: Composition,
    pub swapped: bool,
}

impl Rule {
    pub fn new(
        lhs: Nonterminal,
        rhs: Vec<Nonterminal>,
        comp: Composition,
    ) -> Result<Self, GrammarError> {
        if rhs.len() != comp.arity() {
            return Err(GrammarError::RuleArity { rhs: rhs.len(), arity: comp.arity() });
        }
        for (i, (nt, &f)) in rhs.iter().zip(comp.arg_fanouts()).enumerate() {
            if nt.fanout != f {
                return Err(GrammarError::ArgFanout { arg: i + 1, nt: nt.fanout, comp: f });
            }
        }
        if lhs.fanout != comp.fanout() {
            return Err(GrammarError::LhsFanout { nt: lhs.fanout, comp: comp.fanout() });
        }
        Ok(Rule { lhs, rhs, comp, swapped: false })
    }

    pub fn with_swapped(mut self, swapped: bool) -> Self {
        self.swapped = swapped;
        self
    }

    pub fn kind(&self) -> RuleKind {
        match self.rhs.len() {
            0 => RuleKind::Terminating,
            1 => RuleKind::Monic,
            _ => RuleKind::Branching,
        }
    }

    /// Number of terminal occurrences in the composition.
    pub fn lexical_count(&self) -> usize {
        self.comp.terminal_count()
    }

    /// Copy with all terminal sentence positions cleared, for collecting
    /// occurrence rules into a grammar.
    pub fn strip_positions(&self) -> Rule {
        let comps = self
            .comp
            .components()
            .iter()
            .map(|c| {
                c.iter()
                    .map(|s| match s {
                        Symbol::Term(t) => Symbol::Term(t.unpositioned()),
                        other => *other,
                    })
                    .collect()
            })
            .collect();
        Rule {
            lhs: self.lhs.clone(),
            rhs: self.rhs.clone(),
            comp: Composition::new(comps).expect("position stripping preserves validity"),
            swapped: self.swapped,
        }
    }

    /// Tab-separated grammar file line: lhs, space-joined rhs or `-`,
    /// composition, flags (`s` for swapped) or `-`.
    pub fn to_line(&self) -> String {
        let rhs = if self.rhs.is_empty() {
            "-".to_owned()
        } else {
            self.rhs.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
        };
        let flags = if self.swapped { "s" } else { "-" };
        format!("{}\t{}\t{}\t{}", self.lhs, rhs, self.comp, flags)
    }

    pub fn from_line(line: &str) -> Result<Rule, GrammarError> {
        let cols: Vec<&str> = line.split('\t').collect();
        let [lhs, rhs, comp, flags] = cols[..] else {
            return Err(GrammarError::Parse {
                what: "grammar line",
                detail: format!("expected 4 tab-separated columns, got {}", cols.len()),
            });
        };
        let comp = parse_composition(comp)?;
        let lhs = Nonterminal::parse(lhs, comp.fanout())?;
        let rhs = if rhs == "-" {
            Vec::new()
        } else {
            let names: Vec<&str> = rhs.split_whitespace().collect();
            if names.len() != comp.arity() {
                return Err(GrammarError::Parse {
                    what: "grammar line",
                    detail: format!(
                        "{} right-hand sides for composition arity {}",
                        names.len(),
                        comp.arity()
                    ),
                });
            }
            names
                .iter()
                .zip(comp.arg_fanouts())
                .map(|(n, &f)| Nonterminal::parse(n, f))
                .collect::<Result<_, _>>()?
        };
        let swapped = match flags {
            "-" => false,
            "s" => true,
            other => {
                return Err(GrammarError::Parse {
                    what: "grammar line",
                    detail: format!("unknown flags `{other}`"),
                })
            }
        };
        let rule = Rule::new(lhs, rhs, comp)?.with_swapped(swapped);
        restore_terminal_tags(rule)
    }
}

/// Grammar files print terminals as bare quoted words. The part-of-speech
/// carried by each terminal is only recoverable when the rule is a plain
/// single-label terminating rule (then the lhs is that tag), which is the
/// only kind of terminal-bearing rule the file format is used for.
fn restore_terminal_tags(rule: Rule) -> Result<Rule, GrammarError> {
    if rule.comp.terminal_count() == 0 {
        return Ok(rule);
    }
    if rule.kind() != RuleKind::Terminating
        || rule.lhs.parts.len() != 1
        || rule.lhs.ann != Annotation::Plain
    {
        return Err(GrammarError::UnsupportedTerminal);
    }
    let pos = rule.lhs.parts[0];
    let comps = rule
        .comp
        .components()
        .iter()
        .map(|c| {
            c.iter()
                .map(|s| match s {
                    Symbol::Term(t) => Symbol::Term(Terminal { pos, ..*t }),
                    other => *other,
                })
                .collect()
        })
        .collect();
    Ok(Rule { comp: Composition::new(comps)?, ..rule })
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} (", self.lhs, self.comp)?;
        for (i, nt) in self.rhs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{nt}")?;
        }
        f.write_str(")")?;
        if self.swapped {
            f.write_str(" [swapped]")?;
        }
        Ok(())
    }
}

/// Parses a printed rule (`lhs -> comp (rhs, ...) [swapped]`).
pub(crate) fn parse_rule_display(s: &str) -> Result<Rule, GrammarError> {
    let (lhs, rest) = s.split_once(" -> ").ok_or_else(|| GrammarError::Parse {
        what: "rule",
        detail: format!("missing ` -> ` in `{s}`"),
    })?;
    let (comp_src, rest) = scan_paren_group(rest.trim_start()).ok_or_else(|| {
        GrammarError::Parse { what: "rule", detail: format!("unbalanced composition in `{s}`") }
    })?;
    let comp = parse_composition(comp_src)?;
    let mut rest = rest.trim();
    let swapped = if let Some(r) = rest.strip_suffix("[swapped]") {
        rest = r.trim_end();
        true
    } else {
        false
    };
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| GrammarError::Parse {
            what: "rule",
            detail: format!("missing right-hand side list in `{s}`"),
        })?;
    let names: Vec<&str> = if inner.is_empty() { Vec::new() } else { inner.split(", ").collect() };
    if names.len() != comp.arity() {
        return Err(GrammarError::Parse {
            what: "rule",
            detail: format!("{} right-hand sides for arity {}", names.len(), comp.arity()),
        });
    }
    let lhs = Nonterminal::parse(lhs.trim(), comp.fanout())?;
    let rhs = names
        .iter()
        .zip(comp.arg_fanouts())
        .map(|(n, &f)| Nonterminal::parse(n, f))
        .collect::<Result<_, _>>()?;
    Ok(Rule::new(lhs, rhs, comp)?.with_swapped(swapped))
}

/// Splits a leading parenthesized group off `s`, honoring quoted strings.
/// Returns the group including its parens, and the remainder.
fn scan_paren_group(s: &str) -> Option<(&str, &str)> {
    let mut chars = s.char_indices();
    if chars.next()? != (0, '(') {
        return None;
    }
    let mut in_quote = false;
    let mut escaped = false;
    for (i, c) in chars {
        if in_quote {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_quote = false,
                _ => {}
            }
        } else if c == '"' {
            in_quote = true;
        } else if c == ')' {
            return Some((&s[..=i], &s[i + 1..]));
        }
    }
    None
}

/// Parses a printed composition, e.g. `("on" x1^1, x1^2)` or `(<> x1^1)`.
/// Terminals get their own word as a placeholder part-of-speech; callers
/// with more context fix that up.
pub(crate) fn parse_composition(s: &str) -> Result<Composition, GrammarError> {
    let parse_err = |detail: String| GrammarError::Parse { what: "composition", detail };
    let s = s.trim();
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| parse_err(format!("`{s}` is not parenthesized")))?;
    let mut comps: Vec<Vec<Symbol>> = vec![Vec::new()];
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ' ' => {}
            ',' => comps.push(Vec::new()),
            '"' => {
                let mut word = String::new();
                loop {
                    match chars.next() {
                        Some('\\') => match chars.next() {
                            Some(e) => word.push(e),
                            None => return Err(parse_err("unterminated escape".into())),
                        },
                        Some('"') => break,
                        Some(c) => word.push(c),
                        None => return Err(parse_err("unterminated quote".into())),
                    }
                }
                comps.last_mut().unwrap().push(Symbol::Term(Terminal::new(&word, &word, 0)));
            }
            '<' => match chars.next() {
                Some('>') => comps.last_mut().unwrap().push(Symbol::Hole),
                _ => return Err(parse_err("stray `<`".into())),
            },
            'x' => {
                let num = |chars: &mut std::iter::Peekable<std::str::Chars>| {
                    let mut d = String::new();
                    while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                        d.push(chars.next().unwrap());
                    }
                    d.parse::<u8>()
                        .map_err(|_| parse_err(format!("bad variable index `{d}`")))
                };
                let arg = num(&mut chars)?;
                if chars.next() != Some('^') {
                    return Err(parse_err("variable without `^`".into()));
                }
                let comp = num(&mut chars)?;
                comps.last_mut().unwrap().push(Symbol::var(arg, comp));
            }
            other => return Err(parse_err(format!("unexpected `{other}`"))),
        }
    }
    Ok(Composition::new(comps)?)
}

/// One node of a derivation tree: a rule application whose children derive
/// the rule's right-hand sides in order. Fields are open for the in-place
/// rewrites in this crate; `validate` re-checks the linkage afterwards.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub children: Vec<Derivation>,
}

impl Derivation {
    pub fn new(rule: Rule, children: Vec<Derivation>) -> Result<Self, GrammarError> {
        let d = Derivation { rule, children };
        d.validate_node()?;
        Ok(d)
    }

    fn validate_node(&self) -> Result<(), GrammarError> {
        if self.children.len() != self.rule.rhs.len() {
            return Err(GrammarError::ChildCount {
                expected: self.rule.rhs.len(),
                got: self.children.len(),
            });
        }
        for (i, (child, nt)) in self.children.iter().zip(&self.rule.rhs).enumerate() {
            if child.rule.lhs != *nt {
                return Err(GrammarError::ChildMismatch {
                    index: i + 1,
                    expected: nt.to_string(),
                    got: child.rule.lhs.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Deep re-validation: child/rhs linkage at every node plus internal
    /// rule consistency (for derivations assembled by raw rewrites).
    pub fn validate(&self) -> Result<(), GrammarError> {
        Rule::new(self.rule.lhs.clone(), self.rule.rhs.clone(), self.rule.comp.clone())?;
        self.validate_node()?;
        self.children.iter().try_for_each(Derivation::validate)
    }

    /// The derived string tuple, components space-joined.
    pub fn yield_words(&self) -> Result<Vec<String>, GrammarError> {
        let args: Vec<Vec<String>> =
            self.children.iter().map(Derivation::yield_words).collect::<Result<_, _>>()?;
        Ok(self.rule.comp.evaluate(&args)?)
    }

    /// Like `yield_words`, but over the sentence positions the terminals
    /// carry: one position sequence per component.
    pub fn yield_positions(&self) -> Result<Vec<Vec<u32>>, GrammarError> {
        let args: Vec<Vec<Vec<u32>>> =
            self.children.iter().map(Derivation::yield_positions).collect::<Result<_, _>>()?;
        self.rule
            .comp
            .components()
            .iter()
            .map(|comp| {
                let mut out = Vec::new();
                for sym in comp {
                    match sym {
                        Symbol::Term(t) => out.push(t.position),
                        Symbol::Var(v) => {
                            let part = args
                                .get(v.arg as usize - 1)
                                .and_then(|a| a.get(v.comp as usize - 1))
                                .ok_or(CompositionError::ArityMismatch {
                                    expected: self.rule.comp.arity(),
                                    got: args.len(),
                                })?;
                            out.extend_from_slice(part);
                        }
                        Symbol::Hole => return Err(CompositionError::HoleInEvaluation.into()),
                    }
                }
                Ok(out)
            })
            .collect()
    }

    /// All rule applications, pre-order.
    pub fn rules(&self) -> Vec<&Rule> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(d) = stack.pop() {
            out.push(&d.rule);
            stack.extend(d.children.iter().rev());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Derivation::node_count).sum::<usize>()
    }
}

/// A deduplicated rule set with a designated initial label. Rules are kept
/// sorted by their printed line, terminal positions stripped.
#[derive(Clone, Debug)]
pub struct Grammar {
    pub initial: Sym,
    pub rules: Vec<Rule>,
}

impl Grammar {
    pub fn from_derivations<'a>(
        initial: Sym,
        derivations: impl IntoIterator<Item = &'a Derivation>,
    ) -> Self {
        let mut seen = std::collections::BTreeMap::new();
        for d in derivations {
            for rule in d.rules() {
                let stripped = rule.strip_positions();
                seen.entry(stripped.to_line()).or_insert(stripped);
            }
        }
        Grammar { initial, rules: seen.into_values().collect() }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for rule in &self.rules {
            writeln!(w, "{}", rule.to_line())?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R, initial: &str) -> Result<Self, GrammarError> {
        let mut rules = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| GrammarError::Parse {
                what: "grammar file",
                detail: e.to_string(),
            })?;
            if line.is_empty() {
                continue;
            }
            rules.push(Rule::from_line(&line)?);
        }
        Ok(Grammar { initial: intern(initial), rules })
    }
}
