//! Text formats for datasets and pattern files.
//!
//! Datasets:
//! - itemsets (FIMI): one transaction per line, whitespace-separated items,
//!   optional trailing `| <class>`;
//! - sequences: one sequence per line, whitespace-separated events, optional
//!   trailing `| <class>`;
//! - graphs (gSpan style): `t # <id> [<class>]`, then `v <id> <label>` and
//!   `e <u> <v> <label>` lines. A `t # -1` line ends the file.
//!
//! Pattern files:
//! - itemsets/sequences: tokens followed by `#SUP:<n>` on the same line;
//! - graphs: a gSpan block followed by `#SUP:<n>`, either on its own line or
//!   trailing the last line of the block.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    Dataset, LabeledGraph, Pattern, PatternKind, Payload, TokenId, Transaction, Vocabulary,
};

pub fn read_dataset(path: impl AsRef<Path>, kind: PatternKind) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_dataset(&text, kind, &path.display().to_string())
}

pub fn parse_dataset(text: &str, kind: PatternKind, source: &str) -> Result<Dataset> {
    match kind {
        PatternKind::Set | PatternKind::Sequence => parse_line_dataset(text, kind, source),
        PatternKind::Graph => parse_graph_dataset(text, source),
    }
}

fn parse_class(raw: &str, source: &str, line: usize) -> Result<u32> {
    match raw.trim().parse::<u32>() {
        Ok(0) | Err(_) => Err(Error::parse(
            source,
            line,
            format!(
                "class label must be a positive integer, got `{}`",
                raw.trim()
            ),
        )),
        Ok(c) => Ok(c),
    }
}

fn parse_line_dataset(text: &str, kind: PatternKind, source: &str) -> Result<Dataset> {
    let mut vocab = Vocabulary::new();
    let mut transactions = Vec::new();
    let mut labels: Vec<Option<u32>> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (body, class) = match line.split_once('|') {
            Some((body, class)) => (body, Some(parse_class(class, source, lineno)?)),
            None => (line, None),
        };
        let tokens: Vec<TokenId> = body.split_whitespace().map(|t| vocab.intern(t)).collect();
        let payload = match kind {
            PatternKind::Set => Payload::itemset(tokens),
            _ => Payload::Sequence(tokens),
        };
        transactions.push(Transaction {
            id: transactions.len(),
            payload,
        });
        labels.push(class);
    }
    let class_labels = collect_labels(labels, source)?;
    if transactions.is_empty() {
        return Err(Error::Empty("dataset has no transactions"));
    }
    Ok(Dataset::new(kind, transactions, class_labels, vocab))
}

fn collect_labels(labels: Vec<Option<u32>>, source: &str) -> Result<Option<Vec<u32>>> {
    let labeled = labels.iter().filter(|l| l.is_some()).count();
    if labeled == 0 {
        return Ok(None);
    }
    if labeled != labels.len() {
        let first = labels.iter().position(Option::is_none).unwrap_or(0);
        return Err(Error::parse(
            source,
            0,
            format!("transaction {first} has no class label while others do"),
        ));
    }
    Ok(Some(
        labels.into_iter().map(|l| l.unwrap_or_default()).collect(),
    ))
}

/// Parses a FIMI itemset file whose class is encoded as an item (as in the
/// FIMI Mushroom file, where items `1`/`2` mark edible/poisonous). The label
/// of a transaction is the 1-based position of the label item it contains.
/// Label items stay in the transactions.
pub fn parse_itemsets_with_label_items(
    text: &str,
    label_items: &[&str],
    source: &str,
) -> Result<Dataset> {
    let mut dataset = parse_line_dataset(text, PatternKind::Set, source)?;
    let ids: Vec<Option<TokenId>> = label_items.iter().map(|t| dataset.vocab.get(t)).collect();
    let mut labels = Vec::with_capacity(dataset.len());
    for t in &dataset.transactions {
        let Payload::ItemSet(items) = &t.payload else {
            unreachable!()
        };
        let label = ids
            .iter()
            .position(|id| id.is_some_and(|id| items.binary_search(&id).is_ok()))
            .ok_or_else(|| Error::parse(source, t.id + 1, "transaction carries no label item"))?;
        labels.push(label as u32 + 1);
    }
    dataset.class_labels = Some(labels);
    Ok(dataset)
}

/// Vertices and edges of the graph being read.
type GraphParts = (Vec<(u32, TokenId)>, Vec<(u32, u32, TokenId)>);

fn parse_graph_dataset(text: &str, source: &str) -> Result<Dataset> {
    let mut vocab = Vocabulary::new();
    let mut transactions = Vec::new();
    let mut labels = Vec::new();
    let mut current: Option<GraphParts> = None;

    let finish = |current: &mut Option<GraphParts>, transactions: &mut Vec<Transaction>| {
        if let Some((v, e)) = current.take() {
            transactions.push(Transaction {
                id: transactions.len(),
                payload: Payload::Graph(LabeledGraph::new(v, e)),
            });
        }
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => continue,
            ["t", "#", "-1", ..] => break,
            ["t", "#", _id, rest @ ..] => {
                finish(&mut current, &mut transactions);
                current = Some((Vec::new(), Vec::new()));
                labels.push(match rest.first() {
                    Some(c) => Some(parse_class(c, source, lineno)?),
                    None => None,
                });
            }
            ["v", id, label] => {
                let graph = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(source, lineno, "vertex before any `t #` line"))?;
                let id = parse_u32(id, source, lineno)?;
                graph.0.push((id, vocab.intern(label)));
            }
            ["e", u, v, label] => {
                let graph = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(source, lineno, "edge before any `t #` line"))?;
                let u = parse_u32(u, source, lineno)?;
                let v = parse_u32(v, source, lineno)?;
                graph.1.push((u, v, vocab.intern(label)));
            }
            _ => {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("unrecognized line `{line}`"),
                ))
            }
        }
    }
    finish(&mut current, &mut transactions);
    if transactions.is_empty() {
        return Err(Error::Empty("dataset has no transactions"));
    }
    let class_labels = collect_labels(labels, source)?;
    Ok(Dataset::new(
        PatternKind::Graph,
        transactions,
        class_labels,
        vocab,
    ))
}

fn parse_u32(raw: &str, source: &str, line: usize) -> Result<u32> {
    raw.parse().map_err(|_| {
        Error::parse(
            source,
            line,
            format!("expected a non-negative integer, got `{raw}`"),
        )
    })
}

fn parse_support(raw: &str, source: &str, line: usize) -> Result<usize> {
    match raw.trim().parse::<usize>() {
        Ok(0) => Err(Error::parse(source, line, "non-positive support")),
        Ok(n) => Ok(n),
        Err(_) => Err(Error::parse(
            source,
            line,
            format!("bad support `{}`", raw.trim()),
        )),
    }
}

/// A pattern as read from a file, before support verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPattern {
    pub payload: Payload,
    pub support: usize,
    pub line: usize,
}

fn lookup(vocab: &Vocabulary, token: &str, source: &str, line: usize) -> Result<TokenId> {
    vocab
        .get(token)
        .ok_or_else(|| Error::parse(source, line, format!("unknown token `{token}`")))
}

/// Parses a pattern file against the token vocabulary of its dataset.
///
/// For sequences, spmf-style `-1`/`-2` itemset separators are ignored.
pub fn parse_pattern_file(
    text: &str,
    kind: PatternKind,
    vocab: &Vocabulary,
    source: &str,
) -> Result<Vec<RawPattern>> {
    match kind {
        PatternKind::Set | PatternKind::Sequence => parse_line_patterns(text, kind, vocab, source),
        PatternKind::Graph => parse_graph_patterns(text, vocab, source),
    }
}

fn split_support(line: &str) -> Option<(&str, &str)> {
    let at = line.find("#SUP:")?;
    Some((&line[..at], &line[at + "#SUP:".len()..]))
}

fn parse_line_patterns(
    text: &str,
    kind: PatternKind,
    vocab: &Vocabulary,
    source: &str,
) -> Result<Vec<RawPattern>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (body, support) = split_support(line)
            .ok_or_else(|| Error::parse(source, lineno, "missing `#SUP:<n>`"))?;
        let support = parse_support(support, source, lineno)?;
        let mut tokens = Vec::new();
        for token in body.split_whitespace() {
            if kind == PatternKind::Sequence && (token == "-1" || token == "-2") {
                continue;
            }
            tokens.push(lookup(vocab, token, source, lineno)?);
        }
        let payload = match kind {
            PatternKind::Set => Payload::itemset(tokens),
            _ => Payload::Sequence(tokens),
        };
        out.push(RawPattern {
            payload,
            support,
            line: lineno,
        });
    }
    Ok(out)
}

fn parse_graph_patterns(text: &str, vocab: &Vocabulary, source: &str) -> Result<Vec<RawPattern>> {
    struct Block {
        vertices: Vec<(u32, TokenId)>,
        edges: Vec<(u32, u32, TokenId)>,
        support: Option<usize>,
        line: usize,
    }
    let mut out = Vec::new();
    let mut block: Option<Block> = None;

    let flush = |block: &mut Option<Block>, out: &mut Vec<RawPattern>| -> Result<()> {
        if let Some(b) = block.take() {
            let support = b
                .support
                .ok_or_else(|| Error::parse(source, b.line, "graph pattern without `#SUP:<n>`"))?;
            out.push(RawPattern {
                payload: Payload::Graph(LabeledGraph::new(b.vertices, b.edges)),
                support,
                line: b.line,
            });
        }
        Ok(())
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let (body, support) = match split_support(line) {
            Some((body, sup)) => (body, Some(parse_support(sup, source, lineno)?)),
            None => (line, None),
        };
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["t", "#", "-1", ..] => break,
            ["t", "#", _id, rest @ ..] => {
                flush(&mut block, &mut out)?;
                // gSpan's own output writes `t # <id> * <support>`
                let inline = match rest {
                    ["*", sup] => Some(parse_support(sup, source, lineno)?),
                    _ => None,
                };
                block = Some(Block {
                    vertices: Vec::new(),
                    edges: Vec::new(),
                    support: inline,
                    line: lineno,
                });
            }
            ["v", id, label] => {
                let b = block
                    .as_mut()
                    .ok_or_else(|| Error::parse(source, lineno, "vertex before any `t #` line"))?;
                b.vertices.push((
                    parse_u32(id, source, lineno)?,
                    lookup(vocab, label, source, lineno)?,
                ));
            }
            ["e", u, v, label] => {
                let b = block
                    .as_mut()
                    .ok_or_else(|| Error::parse(source, lineno, "edge before any `t #` line"))?;
                b.edges.push((
                    parse_u32(u, source, lineno)?,
                    parse_u32(v, source, lineno)?,
                    lookup(vocab, label, source, lineno)?,
                ));
            }
            _ => {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("unrecognized line `{line}`"),
                ))
            }
        }
        if let Some(s) = support {
            let b = block
                .as_mut()
                .ok_or_else(|| Error::parse(source, lineno, "`#SUP` outside a graph block"))?;
            b.support = Some(s);
        }
    }
    flush(&mut block, &mut out)?;
    Ok(out)
}

/// Serializes patterns in the pattern-file format understood by
/// [`parse_pattern_file`].
pub fn format_patterns(patterns: &[Pattern], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for p in patterns {
        match &p.payload {
            Payload::ItemSet(tokens) | Payload::Sequence(tokens) => {
                for &t in tokens {
                    out.push_str(vocab.name(t));
                    out.push(' ');
                }
                let _ = writeln!(out, "#SUP:{}", p.support);
            }
            Payload::Graph(g) => {
                let _ = writeln!(out, "t # {}", p.id);
                for &(id, l) in &g.vertices {
                    let _ = writeln!(out, "v {id} {}", vocab.name(l));
                }
                for &(u, v, l) in &g.edges {
                    let _ = writeln!(out, "e {u} {v} {}", vocab.name(l));
                }
                let _ = writeln!(out, "#SUP:{}", p.support);
            }
        }
    }
    out
}

/// Serializes a dataset in the text format of its kind, class labels
/// included. Parsing the output yields the same transactions and labels up to
/// token interning order.
pub fn format_dataset(dataset: &Dataset) -> String {
    let vocab = &dataset.vocab;
    let mut out = String::new();
    for (i, t) in dataset.transactions.iter().enumerate() {
        let label = dataset.label_of(i);
        match &t.payload {
            Payload::ItemSet(tokens) | Payload::Sequence(tokens) => {
                let names: Vec<&str> = tokens.iter().map(|&t| vocab.name(t)).collect();
                out.push_str(&names.join(" "));
                if let Some(c) = label {
                    let _ = write!(out, " | {c}");
                }
                out.push('\n');
            }
            Payload::Graph(g) => {
                let _ = write!(out, "t # {i}");
                if let Some(c) = label {
                    let _ = write!(out, " {c}");
                }
                out.push('\n');
                for &(id, l) in &g.vertices {
                    let _ = writeln!(out, "v {id} {}", vocab.name(l));
                }
                for &(u, v, l) in &g.edges {
                    let _ = writeln!(out, "e {u} {v} {}", vocab.name(l));
                }
            }
        }
    }
    out
}
