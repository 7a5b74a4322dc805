//! Shared helpers for the integration suites: bundled-treebank loading,
//! the tree-to-lexical-derivation shorthand, and seeded random trees.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use distag::binarize::{binarize, Markov};
use distag::induce::induce_derivation;
use distag::lexicalize::lexicalize;
use distag::tree::read_brackets;
use distag::{Derivation, DiscoTree};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn mini(split: &str) -> Vec<DiscoTree> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join(format!("resources/mini/{split}.discbracket"));
    let mut trees = read_brackets(BufReader::new(File::open(path).unwrap())).unwrap();
    trees.iter_mut().for_each(|t| t.sort_canonical());
    trees
}

pub fn mini_all() -> Vec<DiscoTree> {
    let mut trees = mini("train");
    trees.extend(mini("dev"));
    trees
}

pub fn derive(tree: &DiscoTree) -> Derivation {
    induce_derivation(&binarize(tree, Markov::default())).unwrap()
}

pub fn lex_derive(tree: &DiscoTree) -> Derivation {
    lexicalize(&derive(tree)).unwrap()
}

const PHRASES: [&str; 6] = ["S", "NP", "VP", "PP", "XP", "YP"];
const TAGS: [&str; 4] = ["DA", "NB", "VC", "PD"];

fn random_leaf(rng: &mut ChaCha8Rng, position: u32) -> DiscoTree {
    DiscoTree::leaf(TAGS[rng.gen_range(0..TAGS.len())], &format!("w{position}"), position)
}

/// Splits the positions into 2..=3 random non-empty blocks — blocks need
/// not be contiguous, so discontinuous constituents are common.
fn random_node(rng: &mut ChaCha8Rng, positions: &[u32]) -> DiscoTree {
    let k = rng.gen_range(2..=positions.len().min(3));
    let mut shuffled = positions.to_vec();
    shuffled.shuffle(rng);
    let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (i, p) in shuffled.into_iter().enumerate() {
        let b = if i < k { i } else { rng.gen_range(0..k) };
        blocks[b].push(p);
    }
    let children = blocks
        .into_iter()
        .map(|mut block| {
            block.sort_unstable();
            if block.len() == 1 {
                random_leaf(rng, block[0])
            } else {
                random_node(rng, &block)
            }
        })
        .collect();
    DiscoTree::internal(PHRASES[rng.gen_range(0..PHRASES.len())], children)
}

/// A random tree over 1..=max_tokens positions. Every internal node
/// below the root has at least two children, so no label is lost to the
/// terminal-fusing step and full roundtrips hold.
pub fn random_tree(rng: &mut ChaCha8Rng, max_tokens: usize) -> DiscoTree {
    let n = rng.gen_range(1..=max_tokens) as u32;
    let positions: Vec<u32> = (1..=n).collect();
    let top = if n == 1 {
        random_leaf(rng, 1)
    } else {
        random_node(rng, &positions)
    };
    let mut tree = DiscoTree::internal("ROOT", vec![top]);
    tree.sort_canonical();
    tree
}

pub fn max_node_fanout(tree: &DiscoTree) -> usize {
    match tree {
        DiscoTree::Leaf(_) => 1,
        DiscoTree::Internal { children, .. } => children
            .iter()
            .map(max_node_fanout)
            .max()
            .unwrap_or(1)
            .max(tree.fanout()),
    }
}
