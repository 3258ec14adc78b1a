//! Comparison featurizers: n-gram presence for sequences and a fixed list of
//! topological measures for graphs.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Dataset, FeatureVector, LabeledGraph, Pattern, Payload, TokenId};

/// Every contiguous 2-gram and 3-gram seen in a sequence corpus, each with a
/// fixed coordinate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NGramVocabulary {
    index: BTreeMap<Vec<TokenId>, usize>,
}

impl NGramVocabulary {
    pub fn from_dataset(dataset: &Dataset) -> Result<Self> {
        let mut grams: BTreeMap<Vec<TokenId>, usize> = BTreeMap::new();
        for t in &dataset.transactions {
            let Payload::Sequence(events) = &t.payload else {
                return Err(Error::invalid("n-gram features need a sequence dataset"));
            };
            for gram in ngrams(events) {
                grams.entry(gram.to_vec()).or_insert(0);
            }
        }
        for (i, slot) in grams.values_mut().enumerate() {
            *slot = i;
        }
        Ok(NGramVocabulary { index: grams })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Binary vector of the corpus n-grams occurring in `events`; n-grams the
    /// corpus never had are ignored.
    pub fn encode(&self, events: &[TokenId]) -> FeatureVector {
        let indices = ngrams(events)
            .filter_map(|g| self.index.get(g).copied())
            .collect();
        FeatureVector::sparse(indices, self.len())
    }
}

fn ngrams(events: &[TokenId]) -> impl Iterator<Item = &[TokenId]> {
    events.windows(2).chain(events.windows(3))
}

/// Names of the entries of [`topological_features`], in order.
pub const TOPOLOGICAL_METRICS: [&str; 20] = [
    "vertex_count",
    "edge_count",
    "density",
    "degree_min",
    "degree_max",
    "degree_mean",
    "degree_std",
    "diameter",
    "radius",
    "eccentricity_mean",
    "closeness_mean",
    "closeness_max",
    "betweenness_mean",
    "betweenness_max",
    "egonet_size_mean",
    "egonet_edges_mean",
    "egonet_out_degree_mean",
    "clustering_mean",
    "triangle_count",
    "leaf_fraction",
];

/// Label-blind structural summary of a connected graph.
///
/// Closeness is `(n-1) / sum of distances`; betweenness is Brandes'
/// unnormalized count over unordered pairs; an egonet is a vertex with its
/// neighbors, its out-degree the number of edges leaving it.
pub fn topological_features(graph: &LabeledGraph) -> Result<FeatureVector> {
    let view = graph.view();
    let n = view.len();
    if n == 0 {
        return Ok(FeatureVector::dense(vec![0.0; TOPOLOGICAL_METRICS.len()]));
    }
    if !view.is_connected() {
        return Err(Error::Disconnected);
    }
    let adj: Vec<Vec<usize>> = view
        .adjacency
        .iter()
        .map(|list| list.iter().map(|&(v, _)| v).collect())
        .collect();
    let m = graph.edge_count() as f64;
    let nf = n as f64;
    let degrees: Vec<f64> = adj.iter().map(|a| a.len() as f64).collect();
    let degree_mean = degrees.iter().sum::<f64>() / nf;
    let degree_std = (degrees
        .iter()
        .map(|d| (d - degree_mean).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();

    let mut eccentricity = vec![0.0; n];
    let mut closeness = vec![0.0; n];
    for (s, ecc) in eccentricity.iter_mut().enumerate() {
        let dist = bfs(&adj, s);
        let total: usize = dist.iter().sum();
        *ecc = *dist.iter().max().unwrap() as f64;
        if total > 0 {
            closeness[s] = (nf - 1.0) / total as f64;
        }
    }
    let betweenness = brandes(&adj);

    let mut triangles_at = vec![0usize; n];
    let mut ego_edges = vec![0.0; n];
    let mut ego_out = vec![0.0; n];
    let mut clustering = vec![0.0; n];
    for v in 0..n {
        let nb = &adj[v];
        let mut links = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if adj[a].contains(&b) {
                    links += 1;
                }
            }
        }
        triangles_at[v] = links;
        let k = nb.len();
        if k >= 2 {
            clustering[v] = 2.0 * links as f64 / (k * (k - 1)) as f64;
        }
        let inside = (k + links) as f64;
        ego_edges[v] = inside;
        let degree_sum: f64 = degrees[v] + nb.iter().map(|&u| degrees[u]).sum::<f64>();
        ego_out[v] = degree_sum - 2.0 * inside;
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / nf;
    let max = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max);
    let values = vec![
        nf,
        m,
        if n > 1 {
            2.0 * m / (nf * (nf - 1.0))
        } else {
            0.0
        },
        degrees.iter().cloned().fold(f64::MAX, f64::min),
        max(&degrees),
        degree_mean,
        degree_std,
        max(&eccentricity),
        eccentricity.iter().cloned().fold(f64::MAX, f64::min),
        mean(&eccentricity),
        mean(&closeness),
        max(&closeness),
        mean(&betweenness),
        max(&betweenness),
        degree_mean + 1.0,
        mean(&ego_edges),
        mean(&ego_out),
        mean(&clustering),
        triangles_at.iter().sum::<usize>() as f64 / 3.0,
        degrees.iter().filter(|&&d| d == 1.0).count() as f64 / nf,
    ];
    Ok(FeatureVector::dense(values))
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn brandes(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut centrality = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both ends
    centrality.iter().map(|c| c / 2.0).collect()
}

/// Baseline vector for one pattern: n-grams for sequences (needs the corpus
/// vocabulary), topological measures for graphs.
pub fn baseline_features(
    pattern: &Pattern,
    ngrams: Option<&NGramVocabulary>,
) -> Result<FeatureVector> {
    match &pattern.payload {
        Payload::Sequence(events) => {
            let vocab = ngrams.ok_or_else(|| {
                Error::invalid("sequence baseline needs the corpus n-gram vocabulary")
            })?;
            Ok(vocab.encode(events))
        }
        Payload::Graph(g) => topological_features(g),
        Payload::ItemSet(_) => Err(Error::invalid("no baseline featurizer for itemsets")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_dataset;
    use crate::model::PatternKind;

    fn metric(v: &FeatureVector, name: &str) -> f64 {
        v.to_dense()[TOPOLOGICAL_METRICS.iter().position(|m| *m == name).unwrap()]
    }

    #[test]
    fn ngram_presence() {
        let ds = parse_dataset("A B C\nB C D\n", PatternKind::Sequence, "t").unwrap();
        let vocab = NGramVocabulary::from_dataset(&ds).unwrap();
        // AB BC CD ABC BCD
        assert_eq!(vocab.len(), 5);
        let id = |s: &str| ds.vocab.get(s).unwrap();
        let abc = vocab.encode(&[id("A"), id("B"), id("C")]);
        let dense = abc.to_dense();
        assert_eq!(dense.iter().sum::<f64>(), 3.0);
        let ab = vocab.index[&vec![id("A"), id("B")]];
        let bc = vocab.index[&vec![id("B"), id("C")]];
        let abc_i = vocab.index[&vec![id("A"), id("B"), id("C")]];
        assert_eq!(dense[ab] + dense[bc] + dense[abc_i], 3.0);
        assert_eq!(vocab.encode(&[id("D"), id("A")]).to_dense(), vec![0.0; 5]);
    }

    #[test]
    fn single_edge_metrics() {
        let ds = parse_dataset("t # 0\nv 0 A\nv 1 B\ne 0 1 x\n", PatternKind::Graph, "t").unwrap();
        let Payload::Graph(g) = &ds.transactions[0].payload else {
            panic!()
        };
        let v = topological_features(g).unwrap();
        assert_eq!(v.dim(), 20);
        assert_eq!(metric(&v, "diameter"), 1.0);
        assert_eq!(metric(&v, "degree_max"), 1.0);
        assert_eq!(metric(&v, "density"), 1.0);
        assert_eq!(metric(&v, "leaf_fraction"), 1.0);
    }

    #[test]
    fn path_and_triangle_metrics() {
        let text = "t # 0\nv 0 A\nv 1 A\nv 2 A\ne 0 1 x\ne 1 2 x\nt # 1\nv 0 A\nv 1 A\nv 2 A\ne 0 1 x\ne 1 2 x\ne 0 2 x\n";
        let ds = parse_dataset(text, PatternKind::Graph, "t").unwrap();
        let Payload::Graph(path) = &ds.transactions[0].payload else {
            panic!()
        };
        let Payload::Graph(tri) = &ds.transactions[1].payload else {
            panic!()
        };
        let p = topological_features(path).unwrap();
        assert_eq!(metric(&p, "diameter"), 2.0);
        assert_eq!(metric(&p, "radius"), 1.0);
        assert_eq!(metric(&p, "betweenness_max"), 1.0);
        assert_eq!(metric(&p, "triangle_count"), 0.0);
        assert_eq!(metric(&p, "closeness_max"), 1.0);
        let t = topological_features(tri).unwrap();
        assert_eq!(metric(&t, "triangle_count"), 1.0);
        assert_eq!(metric(&t, "clustering_mean"), 1.0);
        assert_eq!(metric(&t, "egonet_edges_mean"), 3.0);
        assert_eq!(metric(&t, "egonet_out_degree_mean"), 0.0);
        assert_eq!(metric(&t, "betweenness_max"), 0.0);
    }
}
