//! Induction of uni-lexical grammar supertags from discontinuous
//! treebanks, supertag-driven chart parsing, and conversion of winning
//! derivations back into discontinuous constituency trees.

pub mod binarize;
pub mod composition;
pub mod eval;
pub mod export;
pub mod grammar;
pub mod induce;
pub mod intern;
pub mod lexicalize;
pub mod parser;
pub mod supertag;
pub mod tagger;
pub mod tree;
pub mod unlexicalize;

pub use composition::{Composition, Symbol, Terminal, Variable};
pub use grammar::{Annotation, Derivation, Grammar, Nonterminal, Rule, RuleKind};
pub use intern::{intern, Sym};
pub use tree::{BinTree, DiscoTree, Leaf};
