//! Column-oriented treebank format: sentences between `#BOS n` / `#EOS n`
//! markers, one element per line. Token lines carry word and tag in
//! sentence order; constituent lines have `#id` (id >= 500) in the word
//! slot and their label in the tag slot. The last relevant column is the
//! parent id, 0 for top level. Two layouts exist: without lemma column
//! (5 + 2j whitespace-separated columns, j secondary edges) and with it
//! (6 + 2j); the parity of the column count tells them apart, and an
//! optional `#FORMAT n` header pins the expectation.
//!
//! Reading always places the top-level elements of a sentence under one
//! artificial root node and sorts children by leftmost covered position
//! (the file encodes no other child order); writing drops the root level
//! again, so ids, lemmas, morphs and edge labels are not preserved —
//! placeholders `--` are written.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use crate::intern::intern;
use crate::tree::{DiscoTree, TreeError};

#[derive(thiserror::Error, Debug)]
pub enum ExportError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn perr(line: usize, detail: impl Into<String>) -> ExportError {
    ExportError::Parse { line, detail: detail.into() }
}

enum ChildRef {
    Token(usize),
    Node(u32),
}

struct RawSentence {
    bos_line: usize,
    id: String,
    /// (word, tag, parent), in sentence order.
    tokens: Vec<(String, String, u32)>,
    /// id -> (label, parent, defining line).
    nodes: HashMap<u32, (String, u32, usize)>,
}

/// Reads a whole treebank file; top-level elements of each sentence are
/// wrapped under `root_label`.
pub fn read_export<R: BufRead>(r: R, root_label: &str) -> Result<Vec<DiscoTree>, ExportError> {
    let mut version: Option<u8> = None;
    let mut current: Option<RawSentence> = None;
    let mut trees = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("%%") {
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        match cols[0] {
            "#FORMAT" => {
                let v = cols.get(1).and_then(|v| v.parse::<u8>().ok());
                match v {
                    Some(v @ (3 | 4)) => version = Some(v),
                    _ => return Err(perr(lineno, "unsupported #FORMAT")),
                }
            }
            "#BOS" => {
                if current.is_some() {
                    return Err(perr(lineno, "#BOS inside a sentence"));
                }
                let id = cols.get(1).ok_or_else(|| perr(lineno, "#BOS without id"))?;
                current = Some(RawSentence {
                    bos_line: lineno,
                    id: (*id).to_owned(),
                    tokens: Vec::new(),
                    nodes: HashMap::new(),
                });
            }
            "#EOS" => {
                let raw = current
                    .take()
                    .ok_or_else(|| perr(lineno, "#EOS outside a sentence"))?;
                trees.push(build_sentence(raw, root_label)?);
            }
            _ => {
                let Some(raw) = current.as_mut() else {
                    return Err(perr(lineno, "element line outside #BOS/#EOS"));
                };
                parse_element(&cols, lineno, &mut version, raw)?;
            }
        }
    }
    if let Some(raw) = current {
        return Err(perr(raw.bos_line, format!("sentence {} has no #EOS", raw.id)));
    }
    Ok(trees)
}

fn parse_element(
    cols: &[&str],
    lineno: usize,
    version: &mut Option<u8>,
    raw: &mut RawSentence,
) -> Result<(), ExportError> {
    let v = match cols.len() {
        n if n >= 5 && n % 2 == 1 => 3,
        n if n >= 6 && n % 2 == 0 => 4,
        n => return Err(perr(lineno, format!("{n} columns fit no known layout"))),
    };
    match version {
        Some(expect) if *expect != v => {
            return Err(perr(
                lineno,
                format!("{} columns, but the file uses the {expect}-column layout", cols.len()),
            ))
        }
        Some(_) => {}
        None => *version = Some(v),
    }
    let (tag_col, parent_col) = if v == 3 { (1, 4) } else { (2, 5) };
    let parent: u32 = cols[parent_col]
        .parse()
        .map_err(|_| perr(lineno, format!("bad parent id `{}`", cols[parent_col])))?;
    if parent != 0 && parent < 500 {
        return Err(perr(lineno, format!("parent id {parent} is neither 0 nor >= 500")));
    }
    let node_id = cols[0]
        .strip_prefix('#')
        .and_then(|s| s.parse::<u32>().ok())
        .filter(|&id| id >= 500);
    if let Some(id) = node_id {
        let label = cols[tag_col].to_owned();
        if raw.nodes.insert(id, (label, parent, lineno)).is_some() {
            return Err(perr(lineno, format!("node #{id} defined twice")));
        }
    } else {
        raw.tokens.push((cols[0].to_owned(), cols[tag_col].to_owned(), parent));
    }
    Ok(())
}

fn build_sentence(raw: RawSentence, root_label: &str) -> Result<DiscoTree, ExportError> {
    if raw.tokens.is_empty() {
        return Err(perr(raw.bos_line, format!("sentence {} has no tokens", raw.id)));
    }
    // Children per parent id; file order is irrelevant because the final
    // tree is sorted canonically.
    let mut children: HashMap<u32, Vec<ChildRef>> = HashMap::new();
    let check_parent = |parent: u32, line: usize| {
        if parent != 0 && !raw.nodes.contains_key(&parent) {
            Err(perr(line, format!("parent #{parent} does not exist")))
        } else {
            Ok(())
        }
    };
    for (i, (_, _, parent)) in raw.tokens.iter().enumerate() {
        check_parent(*parent, raw.bos_line)?;
        children.entry(*parent).or_default().push(ChildRef::Token(i));
    }
    for (&id, &(_, parent, line)) in &raw.nodes {
        check_parent(parent, line)?;
        children.entry(parent).or_default().push(ChildRef::Node(id));
    }
    let mut built = 0usize;
    let top = children.remove(&0).unwrap_or_default();
    let top = top
        .into_iter()
        .map(|r| build_node(r, &raw, &mut children, &mut built))
        .collect::<Result<Vec<_>, _>>()?;
    if built != raw.nodes.len() {
        return Err(perr(
            raw.bos_line,
            format!("sentence {}: some nodes are unreachable from the top level", raw.id),
        ));
    }
    if top.is_empty() {
        return Err(perr(raw.bos_line, format!("sentence {} is empty", raw.id)));
    }
    let mut tree = DiscoTree::Internal { label: intern(root_label), children: top };
    tree.sentence()?;
    tree.sort_canonical();
    Ok(tree)
}

fn build_node(
    r: ChildRef,
    raw: &RawSentence,
    children: &mut HashMap<u32, Vec<ChildRef>>,
    built: &mut usize,
) -> Result<DiscoTree, ExportError> {
    match r {
        ChildRef::Token(i) => {
            let (word, tag, _) = &raw.tokens[i];
            Ok(DiscoTree::leaf(tag, word, i as u32 + 1))
        }
        ChildRef::Node(id) => {
            let (label, _, line) = &raw.nodes[&id];
            // A cycle leaves its members parented to each other, so they are
            // never in the top-level reachable set; `children.remove` makes
            // each node buildable at most once.
            let refs = children
                .remove(&id)
                .ok_or_else(|| perr(*line, format!("node #{id} has no children")))?;
            *built += 1;
            let kids = refs
                .into_iter()
                .map(|r| build_node(r, raw, children, built))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DiscoTree::Internal { label: intern(label), children: kids })
        }
    }
}

/// Writes a treebank. `lemma_column` selects the wider layout. The root
/// level of every tree is dropped: its children become top-level elements.
pub fn write_export<W: Write>(
    mut w: W,
    trees: &[DiscoTree],
    lemma_column: bool,
) -> Result<(), ExportError> {
    for (i, tree) in trees.iter().enumerate() {
        tree.sentence()?;
        let sid = i + 1;
        writeln!(w, "#BOS {sid}")?;
        let mut leaf_rows: Vec<(u32, String, String, u32)> = Vec::new();
        let mut node_rows: Vec<(u32, String, u32)> = Vec::new();
        let mut next_id = 500;
        for child in tree.children() {
            collect_rows(child, 0, &mut next_id, &mut leaf_rows, &mut node_rows);
        }
        if let DiscoTree::Leaf(l) = tree {
            // A bare token tree has no root level to drop.
            leaf_rows.push((l.position, l.word.to_string(), l.pos.to_string(), 0));
        }
        leaf_rows.sort_by_key(|r| r.0);
        for (_, word, tag, parent) in &leaf_rows {
            if lemma_column {
                writeln!(w, "{word}\t--\t{tag}\t--\t--\t{parent}")?;
            } else {
                writeln!(w, "{word}\t{tag}\t--\t--\t{parent}")?;
            }
        }
        for (id, label, parent) in &node_rows {
            if lemma_column {
                writeln!(w, "#{id}\t--\t{label}\t--\t--\t{parent}")?;
            } else {
                writeln!(w, "#{id}\t{label}\t--\t--\t{parent}")?;
            }
        }
        writeln!(w, "#EOS {sid}")?;
    }
    Ok(())
}

fn collect_rows(
    node: &DiscoTree,
    parent: u32,
    next_id: &mut u32,
    leaf_rows: &mut Vec<(u32, String, String, u32)>,
    node_rows: &mut Vec<(u32, String, u32)>,
) {
    match node {
        DiscoTree::Leaf(l) => {
            leaf_rows.push((l.position, l.word.to_string(), l.pos.to_string(), parent))
        }
        DiscoTree::Internal { label, children } => {
            let id = *next_id;
            *next_id += 1;
            node_rows.push((id, label.to_string(), parent));
            for c in children {
                collect_rows(c, id, next_id, leaf_rows, node_rows);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crossing_tree() -> DiscoTree {
        // VP covers {2, 4}, NP covers {3}: crossing branches.
        let mut t = DiscoTree::internal(
            "ROOT",
            vec![DiscoTree::internal(
                "S",
                vec![
                    DiscoTree::leaf("PPER", "er", 1),
                    DiscoTree::internal(
                        "VP",
                        vec![DiscoTree::leaf("VVFIN", "kam", 2), DiscoTree::leaf("ADV", "an", 4)],
                    ),
                    DiscoTree::internal("NP", vec![DiscoTree::leaf("ADV", "gestern", 3)]),
                ],
            )],
        );
        t.sort_canonical();
        t
    }

    #[test]
    fn roundtrip_both_layouts() {
        let trees = vec![
            crossing_tree(),
            DiscoTree::internal("ROOT", vec![DiscoTree::leaf("UH", "ja", 1)]),
        ];
        for lemma in [false, true] {
            let mut buf = Vec::new();
            write_export(&mut buf, &trees, lemma).unwrap();
            let back = read_export(&buf[..], "ROOT").unwrap();
            assert_eq!(back, trees, "lemma column: {lemma}");
        }
    }

    #[test]
    fn layout_is_detected_from_column_parity() {
        let narrow = "#BOS 1\n\
                      er\tPPER\t--\t--\t0\n\
                      kam\tVVFIN\t--\t--\t500\n\
                      #500\tVP\t--\t--\t0\n\
                      #EOS 1\n";
        let wide = "#BOS 1\n\
                    er\t--\tPPER\t--\t--\t0\n\
                    kam\t--\tVVFIN\t--\t--\t500\n\
                    #500\t--\tVP\t--\t--\t0\n\
                    #EOS 1\n";
        let a = read_export(narrow.as_bytes(), "ROOT").unwrap();
        let b = read_export(wide.as_bytes(), "ROOT").unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a[0].to_string(),
            "(ROOT (PPER 1=er) (VP (VVFIN 2=kam)))"
        );
    }

    #[test]
    fn secondary_edges_are_skipped() {
        let text = "#BOS 1\n\
                    er\tPPER\t--\t--\t500\tSB\t501\n\
                    kam\tVVFIN\t--\t--\t500\n\
                    #500\tS\t--\t--\t0\n\
                    #501\tVP\t--\t--\t500\tXX\t500\n\
                    an\tADV\t--\t--\t501\n\
                    #EOS 1\n";
        let trees = read_export(text.as_bytes(), "ROOT").unwrap();
        assert_eq!(
            trees[0].to_string(),
            "(ROOT (S (PPER 1=er) (VVFIN 2=kam) (VP (ADV 3=an))))"
        );
    }

    #[test]
    fn format_header_is_enforced() {
        let text = "#FORMAT 4\n\
                    #BOS 1\n\
                    er\tPPER\t--\t--\t0\n\
                    #EOS 1\n";
        let err = read_export(text.as_bytes(), "ROOT").unwrap_err();
        assert!(err.to_string().contains("layout"), "{err}");
    }

    #[test]
    fn structural_errors_are_reported() {
        // Parent that does not exist.
        let text = "#BOS 1\nw\tT\t--\t--\t777\n#EOS 1\n";
        assert!(read_export(text.as_bytes(), "ROOT").is_err());
        // Cycle: 500 <-> 501, unreachable from the top.
        let text = "#BOS 1\n\
                    w\tT\t--\t--\t500\n\
                    u\tT\t--\t--\t0\n\
                    #500\tA\t--\t--\t501\n\
                    #501\tB\t--\t--\t500\n\
                    #EOS 1\n";
        assert!(read_export(text.as_bytes(), "ROOT").is_err());
        // Childless node.
        let text = "#BOS 1\nw\tT\t--\t--\t0\n#500\tA\t--\t--\t0\n#EOS 1\n";
        assert!(read_export(text.as_bytes(), "ROOT").is_err());
        // Missing #EOS.
        let text = "#BOS 1\nw\tT\t--\t--\t0\n";
        assert!(read_export(text.as_bytes(), "ROOT").is_err());
    }

    #[test]
    fn top_level_is_always_wrapped() {
        // Even a single top-level S is put under the artificial root.
        let text = "#BOS 1\n\
                    w\tT\t--\t--\t500\n\
                    #500\tS\t--\t--\t0\n\
                    #EOS 1\n";
        let trees = read_export(text.as_bytes(), "TOP").unwrap();
        assert_eq!(trees[0].to_string(), "(TOP (S (T 1=w)))");
    }

    #[test]
    fn crossing_branches_roundtrip() {
        let t = crossing_tree();
        let mut buf = Vec::new();
        write_export(&mut buf, std::slice::from_ref(&t), false).unwrap();
        let back = read_export(&buf[..], "ROOT").unwrap();
        assert_eq!(back[0], t);
        assert!(back[0].is_discontinuous());
    }
}
