//! Slow, obviously-correct reference implementations used as test oracles,
//! plus generators for the random instances they are checked on.

use std::collections::BTreeMap;

use ipd_core::learner::{SoftmaxModel, TrainingSet};
use ipd_core::model::{
    Dataset, FeatureVector, LabeledGraph, PatternKind, Payload, Transaction, Vocabulary,
};
use ipd_core::select::covering_radius;
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed frequent itemsets by enumerating every subset of the items that
/// occur, keyed by sorted item ids, valued by support.
pub fn brute_force_closed(dataset: &Dataset, min_support: usize) -> BTreeMap<Vec<u32>, usize> {
    let rows: Vec<&[u32]> = dataset
        .transactions
        .iter()
        .map(|t| match &t.payload {
            Payload::ItemSet(items) => items.as_slice(),
            _ => panic!("itemset dataset expected"),
        })
        .collect();
    let items: Vec<u32> = rows
        .iter()
        .flat_map(|r| r.iter().copied())
        .sorted()
        .dedup()
        .collect();
    let support = |set: &[u32]| {
        rows.iter()
            .filter(|r| set.iter().all(|i| r.contains(i)))
            .count()
    };
    let mut closed = BTreeMap::new();
    for size in 1..=items.len() {
        for set in items.iter().copied().combinations(size) {
            let s = support(&set);
            if s < min_support || s == 0 {
                continue;
            }
            let extendable = items.iter().filter(|i| !set.contains(i)).any(|&i| {
                let mut bigger = set.clone();
                bigger.push(i);
                support(&bigger) == s
            });
            if !extendable {
                closed.insert(set, s);
            }
        }
    }
    closed
}

/// Random labeled itemset dataset over item names `0..items`.
pub fn random_itemsets(rng: &mut ChaCha8Rng, items: usize, transactions: usize) -> Dataset {
    let vocab = Vocabulary::from_tokens((0..items).map(|i| i.to_string()));
    let transactions = (0..transactions)
        .map(|id| {
            let density = rng.random_range(0.2..0.7);
            let chosen = (0..items as u32)
                .filter(|_| rng.random_bool(density))
                .collect();
            Transaction {
                id,
                payload: Payload::itemset(chosen),
            }
        })
        .collect::<Vec<_>>();
    let labels = (0..transactions.len())
        .map(|_| rng.random_range(1..=2))
        .collect();
    Dataset::new(PatternKind::Set, transactions, Some(labels), vocab)
}

/// Subgraph test by trying every injective vertex map.
pub fn brute_force_subgraph(pattern: &LabeledGraph, target: &LabeledGraph) -> bool {
    let p = pattern.view();
    let t = target.view();
    if p.len() > t.len() {
        return false;
    }
    (0..t.len()).permutations(p.len()).any(|map| {
        (0..p.len()).all(|v| p.labels[v] == t.labels[map[v]])
            && (0..p.len()).all(|a| {
                p.adjacency[a]
                    .iter()
                    .all(|&(b, label)| t.edge_label(map[a], map[b]) == Some(label))
            })
    })
}

/// Random graph with vertex ids `0..n`, labels from `0..labels` and edge
/// labels from `labels..labels + edge_labels`; connected when `connected`.
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    labels: u32,
    edge_labels: u32,
    connected: bool,
) -> LabeledGraph {
    let vertices = (0..n as u32)
        .map(|v| (v, rng.random_range(0..labels)))
        .collect();
    let mut edges = Vec::new();
    for v in 1..n as u32 {
        if connected {
            let u = rng.random_range(0..v);
            edges.push((u, v, labels + rng.random_range(0..edge_labels)));
        }
        for u in 0..v {
            if !edges.iter().any(|&(a, b, _)| a == u && b == v) && rng.random_bool(0.3) {
                edges.push((u, v, labels + rng.random_range(0..edge_labels)));
            }
        }
    }
    LabeledGraph::new(vertices, edges)
}

/// Random connected subgraph of `graph` with at most `max_vertices`
/// vertices, grown from a random vertex.
pub fn random_connected_subgraph(
    rng: &mut ChaCha8Rng,
    graph: &LabeledGraph,
    max_vertices: usize,
) -> LabeledGraph {
    let view = graph.view();
    if view.is_empty() {
        return graph.clone();
    }
    let mut chosen = vec![rng.random_range(0..view.len())];
    while chosen.len() < max_vertices {
        let frontier: Vec<usize> = chosen
            .iter()
            .flat_map(|&v| view.adjacency[v].iter().map(|e| e.0))
            .filter(|w| !chosen.contains(w))
            .sorted()
            .dedup()
            .collect();
        if frontier.is_empty() {
            break;
        }
        chosen.push(frontier[rng.random_range(0..frontier.len())]);
    }
    let vertices = chosen
        .iter()
        .map(|&v| (view.ids[v], view.labels[v]))
        .collect();
    let edges = graph
        .edges
        .iter()
        .filter(|&&(u, v, _)| {
            let has = |id| chosen.iter().any(|&c| view.ids[c] == id);
            has(u) && has(v) && rng.random_bool(0.8)
        })
        .copied()
        .collect();
    LabeledGraph::new(vertices, edges)
}

/// Expected gradient length computed by materializing, for each hypothesized
/// label, the full single-example gradient matrix (non-intercept columns).
pub fn literal_egl(theta: &[f64], c: usize, d: usize, x: &[f64]) -> f64 {
    let scores: Vec<f64> = (0..c)
        .map(|j| {
            (0..d).map(|k| theta[j * (d + 1) + k] * x[k]).sum::<f64>() + theta[j * (d + 1) + d]
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::MIN, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let p: Vec<f64> = scores.iter().map(|s| (s - max).exp() / z).collect();
    let mut total = 0.0;
    for label in 0..c {
        let mut grad = vec![vec![0.0; d]; c];
        for (j, row) in grad.iter_mut().enumerate() {
            let indicator = if j == label { 1.0 } else { 0.0 };
            for k in 0..d {
                row[k] = -x[k] * (indicator - p[j]);
            }
        }
        let frob = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        total += p[label] * frob;
    }
    total
}

/// Random model and training set with entries in fixed ranges.
pub fn random_softmax_instance(
    rng: &mut ChaCha8Rng,
    c: usize,
    d: usize,
    m: usize,
) -> (SoftmaxModel, TrainingSet) {
    let theta = (0..c * (d + 1))
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let model = SoftmaxModel::from_theta(c, d, rng.random_range(0.0..2.0), theta).unwrap();
    let examples = (0..m)
        .map(|_| {
            let x = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            (FeatureVector::dense(x), rng.random_range(1..=c as u32))
        })
        .collect();
    (model, TrainingSet::new(examples))
}

/// Central differences of the cost with step `h`.
pub fn numeric_gradient(model: &SoftmaxModel, train: &TrainingSet, h: f64) -> Vec<f64> {
    (0..model.theta().len())
        .map(|i| {
            let mut plus = model.theta().to_vec();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            let fp = model.with_theta(plus).unwrap().cost(train).unwrap();
            let fm = model.with_theta(minus).unwrap().cost(train).unwrap();
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / |b|` in the Euclidean norm.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

/// Smallest covering radius over every choice of `k` centers.
pub fn optimal_radius(points: &[FeatureVector], k: usize) -> f64 {
    (0..points.len())
        .combinations(k)
        .map(|centers| covering_radius(points, &centers).unwrap())
        .fold(f64::INFINITY, f64::min)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
