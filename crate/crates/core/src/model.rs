//! Domain types shared by every stage of the pipeline: transactions, mined
//! patterns, their feature vectors, and ratings.
//!
//! Tokens (items, events, vertex and edge labels) are interned into a
//! [`Vocabulary`] at load time. A token's id is its position in the
//! dataset's item universe, which is first-appearance order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Set,
    Sequence,
    Graph,
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PatternKind::Set => "set",
            PatternKind::Sequence => "sequence",
            PatternKind::Graph => "graph",
        };
        f.write_str(name)
    }
}

/// String interner. Ids are dense and assigned in first-appearance order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, TokenId>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for token in tokens {
            vocab.intern(&token.into());
        }
        vocab
    }

    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.lookup.get(token) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_owned());
        self.lookup.insert(token.to_owned(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        if self.lookup.len() != self.tokens.len() {
            // deserialized without the index
            return self
                .tokens
                .iter()
                .position(|t| t == token)
                .map(|i| i as TokenId);
        }
        self.lookup.get(token).copied()
    }

    pub fn resolve(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn name(&self, id: TokenId) -> &str {
        self.resolve(id).unwrap_or("?")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(&mut self) {
        self.lookup = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
    }
}

/// Undirected labeled graph. Edges are stored with `u < v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub vertices: Vec<(u32, TokenId)>,
    pub edges: Vec<(u32, u32, TokenId)>,
}

impl LabeledGraph {
    pub fn new(vertices: Vec<(u32, TokenId)>, edges: Vec<(u32, u32, TokenId)>) -> Self {
        let edges = edges
            .into_iter()
            .map(|(u, v, l)| if u <= v { (u, v, l) } else { (v, u, l) })
            .collect();
        LabeledGraph { vertices, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Structural problems: self-loops, duplicate edges, dangling endpoints,
    /// duplicate vertex ids, disconnection.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut ids = HashSet::new();
        for &(id, _) in &self.vertices {
            if !ids.insert(id) {
                out.push(format!("duplicate vertex id {id}"));
            }
        }
        let mut seen = HashSet::new();
        for &(u, v, _) in &self.edges {
            if u == v {
                out.push("self-loop".to_owned());
                continue;
            }
            if !ids.contains(&u) || !ids.contains(&v) {
                out.push(format!("edge ({u},{v}) references an undeclared vertex"));
                continue;
            }
            if !seen.insert((u.min(v), u.max(v))) {
                out.push(format!("duplicate edge ({u},{v})"));
            }
        }
        if out.is_empty() && !self.view().is_connected() {
            out.push("graph is not connected".to_owned());
        }
        out
    }

    pub fn view(&self) -> GraphView {
        GraphView::new(self)
    }
}

/// Index-based adjacency view of a [`LabeledGraph`]. Vertex `i` of the view is
/// `graph.vertices[i]`; neighbor lists are sorted by neighbor index.
#[derive(Debug, Clone)]
pub struct GraphView {
    pub ids: Vec<u32>,
    pub labels: Vec<TokenId>,
    pub adjacency: Vec<Vec<(usize, TokenId)>>,
}

impl GraphView {
    fn new(graph: &LabeledGraph) -> Self {
        let position: HashMap<u32, usize> = graph
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &(id, _))| (id, i))
            .collect();
        let mut adjacency = vec![Vec::new(); graph.vertices.len()];
        for &(u, v, label) in &graph.edges {
            let (Some(&a), Some(&b)) = (position.get(&u), position.get(&v)) else {
                continue;
            };
            if a == b {
                continue;
            }
            adjacency[a].push((b, label));
            adjacency[b].push((a, label));
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup_by_key(|e| e.0);
        }
        GraphView {
            ids: graph.vertices.iter().map(|v| v.0).collect(),
            labels: graph.vertices.iter().map(|v| v.1).collect(),
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_label(&self, a: usize, b: usize) -> Option<TokenId> {
        let list = &self.adjacency[a];
        list.binary_search_by_key(&b, |e| e.0)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn is_connected(&self) -> bool {
        if self.labels.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Payload {
    /// Sorted, unique token ids.
    ItemSet(Vec<TokenId>),
    /// Ordered token ids; repeats allowed.
    Sequence(Vec<TokenId>),
    Graph(LabeledGraph),
}

impl Payload {
    pub fn kind(&self) -> PatternKind {
        match self {
            Payload::ItemSet(_) => PatternKind::Set,
            Payload::Sequence(_) => PatternKind::Sequence,
            Payload::Graph(_) => PatternKind::Graph,
        }
    }

    /// Builds an itemset payload, sorting and deduplicating.
    pub fn itemset(mut items: Vec<TokenId>) -> Self {
        items.sort_unstable();
        items.dedup();
        Payload::ItemSet(items)
    }

    /// Distinct tokens mentioned by the payload, ascending.
    pub fn distinct_tokens(&self) -> Vec<TokenId> {
        let set: BTreeSet<TokenId> = match self {
            Payload::ItemSet(items) | Payload::Sequence(items) => items.iter().copied().collect(),
            Payload::Graph(g) => g
                .vertices
                .iter()
                .map(|v| v.1)
                .chain(g.edges.iter().map(|e| e.2))
                .collect(),
        };
        set.into_iter().collect()
    }

    /// Human-readable rendering with token names resolved.
    pub fn render(&self, vocab: &Vocabulary) -> String {
        match self {
            Payload::ItemSet(items) => {
                let mut names: Vec<&str> = items.iter().map(|&t| vocab.name(t)).collect();
                names.sort_unstable();
                format!("{{{}}}", names.join(", "))
            }
            Payload::Sequence(events) => events
                .iter()
                .map(|&t| vocab.name(t))
                .collect::<Vec<_>>()
                .join(" -> "),
            Payload::Graph(g) => {
                let vertices: Vec<String> = g
                    .vertices
                    .iter()
                    .map(|&(id, l)| format!("{id}:{}", vocab.name(l)))
                    .collect();
                let edges: Vec<String> = g
                    .edges
                    .iter()
                    .map(|&(u, v, l)| format!("{u}-{v}:{}", vocab.name(l)))
                    .collect();
                format!("V[{}] E[{}]", vertices.join(" "), edges.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: usize,
    pub payload: Payload,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: PatternKind,
    pub transactions: Vec<Transaction>,
    /// One label per transaction, each in `1..=c`.
    pub class_labels: Option<Vec<u32>>,
    pub vocab: Vocabulary,
}

impl Dataset {
    pub fn new(
        kind: PatternKind,
        transactions: Vec<Transaction>,
        class_labels: Option<Vec<u32>>,
        vocab: Vocabulary,
    ) -> Self {
        Dataset {
            kind,
            transactions,
            class_labels,
            vocab,
        }
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Ordered list of token ids; since ids are first-appearance positions,
    /// this is simply `0..|vocab|`.
    pub fn item_universe(&self) -> ItemUniverse {
        ItemUniverse::new((0..self.vocab.len() as TokenId).collect())
    }

    /// Largest class label, i.e. `c` for labeled datasets.
    pub fn class_count(&self) -> Option<u32> {
        self.class_labels
            .as_ref()
            .and_then(|labels| labels.iter().copied().max())
    }

    pub fn label_of(&self, index: usize) -> Option<u32> {
        self.class_labels
            .as_ref()
            .and_then(|l| l.get(index).copied())
    }
}

/// Ordered token list defining the coordinates of set-pattern vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemUniverse {
    items: Vec<TokenId>,
    position: HashMap<TokenId, usize>,
}

impl ItemUniverse {
    pub fn new(items: Vec<TokenId>) -> Self {
        let position = items.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        ItemUniverse { items, position }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, token: TokenId) -> Option<usize> {
        self.position.get(&token).copied()
    }

    pub fn items(&self) -> &[TokenId] {
        &self.items
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub id: usize,
    pub payload: Payload,
    pub support: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supporting_ids: Option<Vec<usize>>,
}

impl Pattern {
    pub fn kind(&self) -> PatternKind {
        self.payload.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureVector {
    SparseBinary { indices: Vec<usize>, dim: usize },
    Dense { values: Vec<f64> },
}

impl FeatureVector {
    pub fn dense(values: Vec<f64>) -> Self {
        FeatureVector::Dense { values }
    }

    pub fn sparse(mut indices: Vec<usize>, dim: usize) -> Self {
        indices.sort_unstable();
        indices.dedup();
        FeatureVector::SparseBinary { indices, dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::SparseBinary { dim, .. } => *dim,
            FeatureVector::Dense { values } => values.len(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, FeatureVector::SparseBinary { .. })
    }

    /// Dot product with a weight row of length `dim`.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            FeatureVector::SparseBinary { indices, .. } => {
                indices.iter().map(|&i| weights[i]).sum()
            }
            FeatureVector::Dense { values } => values.iter().zip(weights).map(|(x, w)| x * w).sum(),
        }
    }

    /// `row += scale * x` over the first `dim` entries.
    pub fn axpy(&self, scale: f64, row: &mut [f64]) {
        match self {
            FeatureVector::SparseBinary { indices, .. } => {
                for &i in indices {
                    row[i] += scale;
                }
            }
            FeatureVector::Dense { values } => {
                for (r, x) in row.iter_mut().zip(values) {
                    *r += scale * x;
                }
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        match self {
            FeatureVector::SparseBinary { indices, .. } => indices.len() as f64,
            FeatureVector::Dense { values } => values.iter().map(|x| x * x).sum(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            FeatureVector::SparseBinary { indices, dim } => {
                let mut out = vec![0.0; *dim];
                for &i in indices {
                    out[i] = 1.0;
                }
                out
            }
            FeatureVector::Dense { values } => values.clone(),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            FeatureVector::SparseBinary { indices, dim } => {
                indices.windows(2).all(|w| w[0] < w[1]) && indices.iter().all(|&i| i < *dim)
            }
            FeatureVector::Dense { values } => values.iter().all(|v| v.is_finite()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub pattern_id: usize,
    pub rating: u32,
}

/// Checks every dataset invariant; returns one message per violation.
pub fn validate_dataset(dataset: &Dataset) -> Vec<String> {
    let mut out = Vec::new();
    let vocab_len = dataset.vocab.len() as TokenId;
    let mut used = vec![false; dataset.vocab.len()];

    for (index, t) in dataset.transactions.iter().enumerate() {
        let tid = t.id;
        if t.payload.kind() != dataset.kind {
            out.push(format!(
                "transaction {tid} has kind {} in a {} dataset",
                t.payload.kind(),
                dataset.kind
            ));
        }
        if t.id != index {
            out.push(format!("transaction {tid} stored at position {index}"));
        }
        match &t.payload {
            Payload::ItemSet(items) => {
                if !items.windows(2).all(|w| w[0] < w[1]) {
                    out.push(format!(
                        "items not strictly increasing in transaction {tid}"
                    ));
                }
            }
            Payload::Sequence(_) => {}
            Payload::Graph(g) => {
                for v in g.violations() {
                    out.push(format!("{v} in transaction {tid}"));
                }
            }
        }
        for token in t.payload.distinct_tokens() {
            if token >= vocab_len {
                out.push(format!(
                    "token id {token} outside the item universe in transaction {tid}"
                ));
            } else {
                used[token as usize] = true;
            }
        }
    }

    for (id, used) in used.iter().enumerate() {
        if !used {
            out.push(format!(
                "universe token `{}` appears in no transaction",
                dataset.vocab.name(id as TokenId)
            ));
        }
    }

    if let Some(labels) = &dataset.class_labels {
        if labels.len() != dataset.transactions.len() {
            out.push(format!(
                "class_labels has length {} but there are {} transactions",
                labels.len(),
                dataset.transactions.len()
            ));
        }
        for (i, &label) in labels.iter().enumerate() {
            if label == 0 {
                out.push(format!(
                    "class label 0 in transaction {i}; labels start at 1"
                ));
            }
        }
    }
    out
}

/// Containment predicate underlying support and the oracles: subset for
/// itemsets, gapped subsequence for sequences, label-preserving subgraph
/// monomorphism for graphs.
pub fn pattern_contains(pattern: &Pattern, transaction: &Transaction) -> Result<bool> {
    payload_contains(&pattern.payload, &transaction.payload)
}

pub fn payload_contains(pattern: &Payload, target: &Payload) -> Result<bool> {
    match (pattern, target) {
        (Payload::ItemSet(p), Payload::ItemSet(t)) => Ok(is_sorted_subset(p, t)),
        (Payload::Sequence(p), Payload::Sequence(t)) => Ok(is_subsequence(p, t)),
        (Payload::Graph(p), Payload::Graph(t)) => Ok(is_subgraph(p, t)),
        _ => Err(Error::KindMismatch {
            pattern: pattern.kind(),
            transaction: target.kind(),
        }),
    }
}

pub fn is_sorted_subset(small: &[TokenId], large: &[TokenId]) -> bool {
    if small.len() > large.len() {
        return false;
    }
    let mut it = large.iter();
    'outer: for s in small {
        for l in it.by_ref() {
            if l == s {
                continue 'outer;
            }
            if l > s {
                return false;
            }
        }
        return false;
    }
    true
}

pub fn is_subsequence(pattern: &[TokenId], sequence: &[TokenId]) -> bool {
    let mut it = sequence.iter();
    pattern.iter().all(|p| it.any(|s| s == p))
}

/// Backtracking search for an injective, label-preserving vertex map that
/// sends every pattern edge onto a target edge with the same label.
pub fn is_subgraph(pattern: &LabeledGraph, target: &LabeledGraph) -> bool {
    if pattern.vertices.len() > target.vertices.len() || pattern.edges.len() > target.edges.len() {
        return false;
    }
    if pattern.vertices.is_empty() {
        return true;
    }
    let p = pattern.view();
    let t = target.view();

    // Label multiset pruning.
    let mut label_budget: HashMap<TokenId, isize> = HashMap::new();
    for &l in &t.labels {
        *label_budget.entry(l).or_default() += 1;
    }
    for &l in &p.labels {
        let slot = label_budget.entry(l).or_default();
        *slot -= 1;
        if *slot < 0 {
            return false;
        }
    }

    let order = matching_order(&p, &t);
    let mut mapping = vec![usize::MAX; p.len()];
    let mut used = vec![false; t.len()];
    extend_mapping(&p, &t, &order, 0, &mut mapping, &mut used)
}

/// Connected matching order: start from the vertex with the rarest label in
/// the target (ties: highest degree), then repeatedly take the unordered
/// vertex with most already-ordered neighbors.
fn matching_order(p: &GraphView, t: &GraphView) -> Vec<usize> {
    let mut label_freq: HashMap<TokenId, usize> = HashMap::new();
    for &l in &t.labels {
        *label_freq.entry(l).or_default() += 1;
    }
    let rarity = |v: usize| label_freq.get(&p.labels[v]).copied().unwrap_or(0);

    let n = p.len();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut links = vec![0usize; n];
    while order.len() < n {
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by(|&a, &b| {
                links[a]
                    .cmp(&links[b])
                    .then(rarity(b).cmp(&rarity(a)))
                    .then(p.degree(a).cmp(&p.degree(b)))
                    .then(b.cmp(&a))
            })
            .expect("unplaced vertex exists");
        placed[next] = true;
        order.push(next);
        for &(w, _) in &p.adjacency[next] {
            links[w] += 1;
        }
    }
    order
}

fn extend_mapping(
    p: &GraphView,
    t: &GraphView,
    order: &[usize],
    depth: usize,
    mapping: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let pv = order[depth];
    let anchor = p.adjacency[pv]
        .iter()
        .find(|&&(w, _)| mapping[w] != usize::MAX)
        .copied();

    let candidates: Vec<usize> = match anchor {
        Some((w, _)) => t.adjacency[mapping[w]].iter().map(|e| e.0).collect(),
        None => (0..t.len()).collect(),
    };

    for tv in candidates {
        if used[tv] || t.labels[tv] != p.labels[pv] || t.degree(tv) < p.degree(pv) {
            continue;
        }
        let consistent = p.adjacency[pv].iter().all(|&(w, label)| {
            let image = mapping[w];
            image == usize::MAX || t.edge_label(tv, image) == Some(label)
        });
        if !consistent {
            continue;
        }
        mapping[pv] = tv;
        used[tv] = true;
        if extend_mapping(p, t, order, depth + 1, mapping, used) {
            return true;
        }
        mapping[pv] = usize::MAX;
        used[tv] = false;
    }
    false
}
