use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, GraphView, LabeledGraph, Payload, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceOrigin {
    pub transaction: usize,
    /// Start vertex id for graph walks.
    pub start_vertex: Option<u32>,
}

/// Sentences fed to the paragraph-vector trainer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCorpus {
    pub sentences: Vec<Vec<String>>,
    pub origins: Vec<SentenceOrigin>,
}

impl WalkCorpus {
    pub fn from_sentences(sentences: Vec<Vec<String>>) -> Self {
        let origins = (0..sentences.len())
            .map(|transaction| SentenceOrigin {
                transaction,
                start_vertex: None,
            })
            .collect();
        WalkCorpus { sentences, origins }
    }

    /// Sequences map one-to-one onto sentences; each graph contributes one
    /// walk per vertex.
    pub fn from_dataset(dataset: &Dataset) -> Result<Self> {
        let mut corpus = WalkCorpus::default();
        for t in &dataset.transactions {
            match &t.payload {
                Payload::Sequence(events) => {
                    corpus.sentences.push(
                        events
                            .iter()
                            .map(|&e| dataset.vocab.name(e).to_owned())
                            .collect(),
                    );
                    corpus.origins.push(SentenceOrigin {
                        transaction: t.id,
                        start_vertex: None,
                    });
                }
                Payload::Graph(g) => {
                    let walks = graph_to_walks(g, &dataset.vocab)?;
                    for (walk, &(vertex, _)) in walks.into_iter().zip(&g.vertices) {
                        corpus.sentences.push(walk);
                        corpus.origins.push(SentenceOrigin {
                            transaction: t.id,
                            start_vertex: Some(vertex),
                        });
                    }
                }
                Payload::ItemSet(_) => {
                    return Err(Error::invalid(
                        "itemset datasets are encoded directly, not embedded",
                    ));
                }
            }
        }
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// One depth-first edge walk per vertex, in the graph's vertex order.
pub fn graph_to_walks(graph: &LabeledGraph, vocab: &Vocabulary) -> Result<Vec<Vec<String>>> {
    let view = graph.view();
    if !view.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok((0..view.len())
        .map(|start| edge_walk(&view, vocab, start))
        .collect())
}

/// The walk that starts at the vertex with id `vertex`.
pub fn walk_from(graph: &LabeledGraph, vocab: &Vocabulary, vertex: u32) -> Result<Vec<String>> {
    let view = graph.view();
    if !view.is_connected() {
        return Err(Error::Disconnected);
    }
    let start = view
        .ids
        .iter()
        .position(|&id| id == vertex)
        .ok_or_else(|| Error::invalid(format!("no vertex with id {vertex}")))?;
    Ok(edge_walk(&view, vocab, start))
}

/// Depth-first traversal that words every edge exactly once, as
/// `source~edge~target` in traversal direction. Vertices may be re-entered;
/// backtracking over spent edges emits nothing. Neighbors are visited in
/// ascending (label, vertex id) order.
fn edge_walk(view: &GraphView, vocab: &Vocabulary, start: usize) -> Vec<String> {
    let ordered: Vec<Vec<(usize, u32)>> = view
        .adjacency
        .iter()
        .map(|list| {
            let mut list = list.clone();
            list.sort_by(|a, b| {
                vocab
                    .name(view.labels[a.0])
                    .cmp(vocab.name(view.labels[b.0]))
                    .then(view.ids[a.0].cmp(&view.ids[b.0]))
            });
            list
        })
        .collect();

    let mut spent: HashSet<(usize, usize)> = HashSet::new();
    let mut words = Vec::new();
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    while let Some(top) = stack.last_mut() {
        let (x, cursor) = *top;
        let Some(&(y, edge_label)) = ordered[x].get(cursor) else {
            stack.pop();
            continue;
        };
        top.1 += 1;
        if !spent.insert((x.min(y), x.max(y))) {
            continue;
        }
        words.push(format!(
            "{}~{}~{}",
            vocab.name(view.labels[x]),
            vocab.name(edge_label),
            vocab.name(view.labels[y])
        ));
        stack.push((y, 0));
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(
        vocab: &mut Vocabulary,
        labels: &[&str],
        edges: &[(u32, u32, &str)],
    ) -> LabeledGraph {
        let vertices = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (i as u32, vocab.intern(l)))
            .collect();
        let edges = edges
            .iter()
            .map(|&(u, v, l)| (u, v, vocab.intern(l)))
            .collect();
        LabeledGraph::new(vertices, edges)
    }

    #[test]
    fn single_edge_both_directions() {
        let mut vocab = Vocabulary::new();
        let g = labeled(&mut vocab, &["A", "B"], &[(0, 1, "1")]);
        assert_eq!(
            graph_to_walks(&g, &vocab).unwrap(),
            vec![vec!["A~1~B"], vec!["B~1~A"]]
        );
    }

    #[test]
    fn path_from_its_end() {
        let mut vocab = Vocabulary::new();
        let g = labeled(&mut vocab, &["A", "B", "C"], &[(0, 1, "1"), (1, 2, "1")]);
        let walks = graph_to_walks(&g, &vocab).unwrap();
        assert_eq!(walks[0], vec!["A~1~B", "B~1~C"]);
        // from the middle: A comes before C by label
        assert_eq!(walks[1], vec!["B~1~A", "B~1~C"]);
        assert_eq!(walks.len(), 3);
    }

    #[test]
    fn cycle_walk_covers_every_edge_once() {
        let mut vocab = Vocabulary::new();
        let g = labeled(
            &mut vocab,
            &["C", "C", "O", "N"],
            &[(0, 1, "s"), (1, 2, "d"), (2, 0, "s"), (2, 3, "s")],
        );
        for walk in graph_to_walks(&g, &vocab).unwrap() {
            assert_eq!(walk.len(), 4, "{walk:?}");
        }
    }

    #[test]
    fn disconnected_is_rejected() {
        let mut vocab = Vocabulary::new();
        let g = labeled(&mut vocab, &["A", "B", "C"], &[(0, 1, "1")]);
        assert!(matches!(
            graph_to_walks(&g, &vocab),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn corpus_counts_one_sentence_per_vertex() {
        let text = "t # 0\nv 0 A\nv 1 B\nv 2 C\ne 0 1 x\ne 1 2 x\nt # 1\nv 0 A\nv 1 A\ne 0 1 y\n";
        let ds = crate::io::parse_dataset(text, crate::model::PatternKind::Graph, "t").unwrap();
        let corpus = WalkCorpus::from_dataset(&ds).unwrap();
        assert_eq!(corpus.len(), 5);
        assert_eq!(
            corpus.origins[3],
            SentenceOrigin {
                transaction: 1,
                start_vertex: Some(0)
            }
        );
    }
}
