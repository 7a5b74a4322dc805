//! String-tuple compositions. A composition with sort ((s_1..s_k), s)
//! describes how a rule assembles the s components of its left-hand side
//! from the components of its k right-hand side arguments plus literal
//! terminals. Variable x_i^j stands for component j of argument i.

use std::fmt;

use crate::intern::{intern, Sym};

/// Variable x_{arg}^{comp}; both indices are 1-based in well-formed
/// compositions. Component index 0 occurs only transiently inside
/// derivation rewrites and never survives validation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Variable {
    pub arg: u8,
    pub comp: u8,
}

/// A lexical symbol. `pos` is the part-of-speech tag the word carries
/// through the derivation rewrites; `position` is the 1-based sentence
/// position of this occurrence, or 0 for rules abstracted away from any
/// particular sentence.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Terminal {
    pub word: Sym,
    pub pos: Sym,
    pub position: u32,
}

impl Terminal {
    pub fn new(word: &str, pos: &str, position: u32) -> Self {
        Terminal { word: intern(word), pos: intern(pos), position }
    }

    /// Copy with the occurrence position cleared, for grammar-level rules.
    pub fn unpositioned(mut self) -> Self {
        self.position = 0;
        self
    }
}

/// One symbol of a composition component.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Symbol {
    Term(Terminal),
    Var(Variable),
    /// Placeholder for the abstracted terminal of a supertag template.
    Hole,
}

impl Symbol {
    pub fn var(arg: u8, comp: u8) -> Self {
        Symbol::Var(Variable { arg, comp })
    }
}

#[derive(thiserror::Error, Debug, PartialEq)]
pub enum CompositionError {
    #[error("composition has no components")]
    Empty,
    #[error("component {0} is empty")]
    EmptyComponent(usize),
    #[error("variable x{0}^{1} has a zero index")]
    ZeroIndex(u8, u8),
    #[error("variable x{0}^{1} occurs twice")]
    DuplicateVariable(u8, u8),
    #[error("variable x{0}^{1} is missing")]
    MissingVariable(u8, u8),
    #[error("variable x{0}^{1} occurs out of order")]
    VariableOrder(u8, u8),
    #[error("expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("argument {arg} must have {expected} components, got {got}")]
    FanoutMismatch { arg: u8, expected: u8, got: usize },
    #[error("argument {arg} has fanout {fanout}, partial application needs 1")]
    NotUnary { arg: u8, fanout: u8 },
    #[error("no argument {arg}")]
    NoSuchArg { arg: u8 },
    #[error("cannot evaluate a composition containing a hole")]
    HoleInEvaluation,
}

/// A validated composition: non-empty components, every variable of every
/// argument used exactly once, and x_i^j before x_i^{j+1} in reading
/// order. The arguments themselves may occur in any order: lexicalization
/// can leave a later argument's variables in front of an earlier one's.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Composition {
    comps: Vec<Vec<Symbol>>,
    sort: (Vec<u8>, u8),
}

impl Composition {
    pub fn new(comps: Vec<Vec<Symbol>>) -> Result<Self, CompositionError> {
        let sort = validate(&comps)?;
        Ok(Composition { comps, sort })
    }

    /// id_s = (x_1^1, ..., x_1^s), the composition of a plain unary rule.
    pub fn identity(fanout: u8) -> Self {
        let comps = (1..=fanout).map(|j| vec![Symbol::var(1, j)]).collect();
        Composition { comps, sort: (vec![fanout], fanout) }
    }

    pub fn components(&self) -> &[Vec<Symbol>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Symbol>> {
        self.comps
    }

    /// Fanouts of the arguments, in order.
    pub fn arg_fanouts(&self) -> &[u8] {
        &self.sort.0
    }

    pub fn arity(&self) -> usize {
        self.sort.0.len()
    }

    pub fn fanout(&self) -> u8 {
        self.sort.1
    }

    pub fn is_identity(&self) -> bool {
        *self == Composition::identity(self.sort.1)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.comps.iter().flatten()
    }

    pub fn terminal_count(&self) -> usize {
        self.symbols().filter(|s| matches!(s, Symbol::Term(_))).count()
    }

    pub fn hole_count(&self) -> usize {
        self.symbols().filter(|s| matches!(s, Symbol::Hole)).count()
    }

    pub fn terminals(&self) -> impl Iterator<Item = &Terminal> {
        self.symbols().filter_map(|s| match s {
            Symbol::Term(t) => Some(t),
            _ => None,
        })
    }

    /// Evaluates the composition on string tuples. Component strings are
    /// joined with single spaces.
    pub fn evaluate(&self, args: &[Vec<String>]) -> Result<Vec<String>, CompositionError> {
        if args.len() != self.arity() {
            return Err(CompositionError::ArityMismatch { expected: self.arity(), got: args.len() });
        }
        for (i, (arg, &f)) in args.iter().zip(self.sort.0.iter()).enumerate() {
            if arg.len() != f as usize {
                return Err(CompositionError::FanoutMismatch {
                    arg: i as u8 + 1,
                    expected: f,
                    got: arg.len(),
                });
            }
        }
        self.comps
            .iter()
            .map(|comp| {
                let mut parts = Vec::with_capacity(comp.len());
                for sym in comp {
                    match sym {
                        Symbol::Term(t) => parts.push(t.word.as_str().to_owned()),
                        Symbol::Var(v) => {
                            parts.push(args[v.arg as usize - 1][v.comp as usize - 1].clone())
                        }
                        Symbol::Hole => return Err(CompositionError::HoleInEvaluation),
                    }
                }
                Ok(parts.join(" "))
            })
            .collect()
    }

    /// i-partial application: substitutes `term` for x_i^1 and shifts the
    /// indices of all later arguments down by one. Defined only when
    /// argument i has fanout 1.
    pub fn partial_apply(&self, arg: u8, term: Terminal) -> Result<Self, CompositionError> {
        let Some(&fanout) = self.sort.0.get(arg as usize - 1) else {
            return Err(CompositionError::NoSuchArg { arg });
        };
        if fanout != 1 {
            return Err(CompositionError::NotUnary { arg, fanout });
        }
        let comps = self
            .comps
            .iter()
            .map(|comp| {
                comp.iter()
                    .map(|sym| match sym {
                        Symbol::Var(v) if v.arg == arg => Symbol::Term(term),
                        Symbol::Var(v) if v.arg > arg => Symbol::var(v.arg - 1, v.comp),
                        other => *other,
                    })
                    .collect()
            })
            .collect();
        Composition::new(comps)
    }
}

fn validate(comps: &[Vec<Symbol>]) -> Result<(Vec<u8>, u8), CompositionError> {
    if comps.is_empty() {
        return Err(CompositionError::Empty);
    }
    for (i, comp) in comps.iter().enumerate() {
        if comp.is_empty() {
            return Err(CompositionError::EmptyComponent(i + 1));
        }
    }
    // seen[a] = component indices of argument a+1 in reading order. Each
    // argument's components must appear in order and without gaps; the
    // arguments are allowed to interleave freely.
    let mut seen: Vec<Vec<u8>> = Vec::new();
    for sym in comps.iter().flatten() {
        let Symbol::Var(v) = sym else { continue };
        if v.arg == 0 || v.comp == 0 {
            return Err(CompositionError::ZeroIndex(v.arg, v.comp));
        }
        let a = v.arg as usize - 1;
        if a >= seen.len() {
            seen.resize(a + 1, Vec::new());
        }
        seen[a].push(v.comp);
    }
    let mut fanouts: Vec<u8> = Vec::with_capacity(seen.len());
    for (a, order) in seen.iter().enumerate() {
        let arg = a as u8 + 1;
        if order.is_empty() {
            return Err(CompositionError::MissingVariable(arg, 1));
        }
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(CompositionError::DuplicateVariable(arg, w[0]));
        }
        for (j, &c) in sorted.iter().enumerate() {
            if c != j as u8 + 1 {
                return Err(CompositionError::MissingVariable(arg, j as u8 + 1));
            }
        }
        if let Some(j) = order.windows(2).position(|w| w[0] > w[1]) {
            return Err(CompositionError::VariableOrder(arg, order[j]));
        }
        fanouts.push(order.len() as u8);
    }
    if comps.len() > u8::MAX as usize {
        return Err(CompositionError::Empty);
    }
    Ok((fanouts, comps.len() as u8))
}

pub(crate) fn escape_word(w: &str) -> String {
    let mut out = String::with_capacity(w.len() + 2);
    out.push('"');
    for c in w.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Term(t) => f.write_str(&escape_word(t.word.as_str())),
            Symbol::Var(v) => write!(f, "x{}^{}", v.arg, v.comp),
            Symbol::Hole => f.write_str("<>"),
        }
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, comp) in self.comps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            for (j, sym) in comp.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{sym}")?;
            }
        }
        f.write_str(")")
    }
}
