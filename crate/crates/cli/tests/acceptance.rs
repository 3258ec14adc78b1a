//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when an evaluated criterion fails.
//!
//! Criteria whose input data is not present (the Mushroom run) print FAIL with
//! the reason but only fail the process when `IPD_ACCEPTANCE_STRICT=1`.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};
use std::{env, fs};

use ipd_core::embed::{EmbeddingModel, EmbeddingParams, WalkCorpus};
use ipd_core::io::{format_dataset, parse_dataset, parse_itemsets_with_label_items};
use ipd_core::miner::mine_closed_itemsets;
use ipd_core::model::{payload_contains, FeatureVector, Pattern, PatternKind, Payload};
use ipd_core::select::{covering_radius, egl, k_center, StrategyVariant};
use ipd_core::session::{median, run_ablation, run_session, SessionConfig, Workspace};
use ipd_core::synthetic::{two_cluster_sequences, SeparableItemsets};
use ipd_testkit::{
    brute_force_closed, literal_egl, numeric_gradient, optimal_radius, random_itemsets,
    random_softmax_instance, relative_error, seeded,
};
use rand::Rng;
use serde_json::{json, Value};

enum Verdict {
    Pass,
    Fail,
    /// Required input is missing; the criterion could not be evaluated.
    Missing,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        Outcome { verdict, detail }
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (c, d, m) = (
            rng.random_range(2..=4),
            rng.random_range(1..=8),
            rng.random_range(1..=15),
        );
        let (model, train) = random_softmax_instance(&mut rng, c, d, m);
        let analytic = model.gradient(&train).unwrap();
        worst = worst.max(relative_error(
            &analytic,
            &numeric_gradient(&model, &train, 1e-6),
        ));
    }
    let elapsed = start.elapsed();
    Outcome::check(
        worst < 1e-5 && within(elapsed, 1.0),
        format!(
            "max relative error {worst:.2e} over 20 instances in {elapsed:.2?} (limits 1e-5, 1 s)"
        ),
    )
}

fn miner_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(4242);
    let mut mismatched = 0;
    let mut total_patterns = 0;
    for _ in 0..50 {
        let items = rng.random_range(1..=10);
        let n = rng.random_range(1..=30);
        let ds = random_itemsets(&mut rng, items, n);
        let min_support = rng.random_range(1..=n);
        let mined: std::collections::BTreeMap<Vec<u32>, usize> =
            mine_closed_itemsets(&ds, min_support)
                .unwrap()
                .into_iter()
                .map(|p| match p.payload {
                    Payload::ItemSet(items) => (items, p.support),
                    _ => unreachable!(),
                })
                .collect();
        total_patterns += mined.len();
        if mined != brute_force_closed(&ds, min_support) {
            mismatched += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome::check(
        mismatched == 0 && within(elapsed, 10.0),
        format!("{mismatched}/50 datasets differ, {total_patterns} patterns compared in {elapsed:.2?} (limit 10 s)"),
    )
}

fn k_center_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(77);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for jaccard in [false, true] {
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let points: Vec<FeatureVector> = (0..n)
                .map(|_| {
                    if jaccard {
                        let on = (0..8).filter(|_| rng.random_bool(0.4)).collect();
                        FeatureVector::sparse(on, 8)
                    } else {
                        FeatureVector::dense(
                            (0..2).map(|_| rng.random_range(-10.0..10.0)).collect(),
                        )
                    }
                })
                .collect();
            let k = rng.random_range(1..=3).min(n);
            let centers = k_center(&points, k, rng.random_range(0..n)).unwrap();
            let greedy = covering_radius(&points, &centers).unwrap();
            let optimal = optimal_radius(&points, k);
            if greedy > 2.0 * optimal + 1e-12 {
                violations += 1;
            }
            if optimal > 0.0 {
                worst_ratio = worst_ratio.max(greedy / optimal);
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::check(
        violations == 0 && within(elapsed, 10.0),
        format!(
            "{violations}/200 instances over 2x optimal (100 Euclidean, 100 Jaccard), worst ratio {worst_ratio:.3} in {elapsed:.2?} (limit 10 s)"
        ),
    )
}

fn egl_equivalence() -> Outcome {
    let mut rng = seeded(303);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = rng.random_range(2..=5);
        let d = rng.random_range(1..=8);
        let theta: Vec<f64> = (0..c * (d + 1))
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let model = ipd_core::learner::SoftmaxModel::from_theta(c, d, 1.0, theta.clone()).unwrap();
        let got = egl(&model, &FeatureVector::dense(x.clone())).unwrap();
        worst = worst.max((got - literal_egl(&theta, c, d, &x)).abs());
    }
    Outcome::check(
        worst <= 1e-12,
        format!("max |difference| {worst:.2e} over 100 (model, x) pairs (limit 1e-12)"),
    )
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn embedding_separation() -> Outcome {
    let start = Instant::now();
    let mut margins = Vec::new();
    for seed in 1..=3 {
        let ds = two_cluster_sequences(50, 20, 500 + seed);
        let corpus = WalkCorpus::from_dataset(&ds).unwrap();
        let params = EmbeddingParams {
            dim: 16,
            epochs: 20,
            seed,
            ..Default::default()
        };
        let model = EmbeddingModel::train(&corpus, params).unwrap();
        let vectors: Vec<Vec<f64>> = corpus
            .sentences
            .iter()
            .map(|s| model.infer_tokens(s).unwrap().vector.to_dense())
            .collect();
        let labels = ds.class_labels.as_ref().unwrap();
        let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0, 0.0, 0);
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                let c = cosine(&vectors[i], &vectors[j]);
                if labels[i] == labels[j] {
                    intra += c;
                    n_intra += 1;
                } else {
                    inter += c;
                    n_inter += 1;
                }
            }
        }
        margins.push(intra / n_intra as f64 - inter / n_inter as f64);
    }
    let elapsed = start.elapsed();
    let shown: Vec<String> = margins.iter().map(|m| format!("{m:.3}")).collect();
    Outcome::check(
        margins.iter().all(|&m| m >= 0.1) && within(elapsed, 30.0),
        format!(
            "intra minus inter cosine [{}] for 3 seeds in {elapsed:.2?} (limits >= 0.1, 30 s)",
            shown.join(", ")
        ),
    )
}

fn separable_workspace() -> Arc<Workspace> {
    let ds = SeparableItemsets::default().generate();
    let patterns = mine_closed_itemsets(&ds, 5).unwrap();
    Arc::new(Workspace::new(ds, patterns).unwrap())
}

/// Ten iterations of ten ratings each on the separable data.
fn hundred_ratings() -> SessionConfig {
    SessionConfig {
        batch_fraction: 0.1,
        max_iterations: Some(10),
        ..SessionConfig::default()
    }
}

fn synthetic_session() -> Outcome {
    let start = Instant::now();
    let (_, report) = run_session(separable_workspace(), hundred_ratings()).unwrap();
    let elapsed = start.elapsed();
    let f = report.final_f_score.unwrap_or(0.0);
    Outcome::check(
        f >= 0.9 && report.feedback_count == 100 && within(elapsed, 60.0),
        format!(
            "{} strategy, {} ratings, held-out weighted F-score {f:.4} in {elapsed:.2?} (limits >= 0.9, 60 s)",
            report.config.strategy.variant, report.feedback_count
        ),
    )
}

fn mushroom_path() -> PathBuf {
    env::var_os("IPD_MUSHROOM")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            Path::new(env!("CARGO_MANIFEST_DIR"))
                .ancestors()
                .nth(2)
                .unwrap()
                .join("data/mushroom.dat")
        })
}

fn mushroom_replication() -> Outcome {
    let path = mushroom_path();
    let Ok(text) = fs::read_to_string(&path) else {
        return Outcome {
            verdict: Verdict::Missing,
            detail: format!(
                "not evaluated: {} not found (set IPD_MUSHROOM)",
                path.display()
            ),
        };
    };
    let start = Instant::now();
    // closed patterns are counted on the raw transactions, class items included
    let raw = parse_dataset(&text, PatternKind::Set, "mushroom").unwrap();
    let closed = mine_closed_itemsets(&raw, 1100).unwrap().len();
    let count_ok = (closed as f64 - 53_628.0).abs() <= 0.05 * 53_628.0;

    let labeled = parse_itemsets_with_label_items(&text, &["1", "2"], "mushroom").unwrap();
    let patterns = mine_closed_itemsets(&labeled, 1100).unwrap();
    let ws = Arc::new(Workspace::new(labeled, patterns).unwrap());
    let mut accuracies = Vec::new();
    let mut ratings = Vec::new();
    for seed in 0..5 {
        let config = SessionConfig {
            max_iterations: Some(10),
            seed,
            ..SessionConfig::default()
        };
        let (_, report) = run_session(ws.clone(), config).unwrap();
        accuracies.push(report.final_accuracy.unwrap_or(0.0));
        ratings.push(report.feedback_count);
    }
    let acc = median(&mut accuracies);
    let elapsed = start.elapsed();
    Outcome::check(
        count_ok && acc >= 0.75 && ratings.iter().all(|&r| r == 100) && within(elapsed, 600.0),
        format!(
            "{closed} closed patterns at 1100 (target 53628 +/- 5%), ratings per run {ratings:?}, median test accuracy {acc:.4} over 5 seeds in {elapsed:.2?} (limits >= 0.75, 10 min)"
        ),
    )
}

fn ablation() -> Outcome {
    let ws = separable_workspace();
    let config = hundred_ratings();
    let features = Arc::new(ws.featurize(&config.features).unwrap());
    let seeds: Vec<u64> = (0..10).collect();
    let report = run_ablation(ws, features, &config, &StrategyVariant::all(), &seeds).unwrap();
    for variant in StrategyVariant::all() {
        let runs: Vec<_> = report
            .runs
            .iter()
            .filter(|r| r.variant == variant)
            .collect();
        let len = runs.iter().map(|r| r.curve.len()).max().unwrap_or(0);
        let curve: Vec<String> = (0..len)
            .map(|i| {
                let mut at: Vec<f64> = runs
                    .iter()
                    .filter_map(|r| r.curve.get(i).copied())
                    .collect();
                format!("{:.3}", median(&mut at))
            })
            .collect();
        println!(
            "      {:>17} median curve: {}",
            variant.to_string(),
            curve.join(" ")
        );
    }
    let get = |v: StrategyVariant| report.median_of(&v.to_string()).unwrap_or(f64::NAN);
    let (hybrid, egl_only, kcenter_only) = (
        get(StrategyVariant::EglThenKCenter),
        get(StrategyVariant::EglOnly),
        get(StrategyVariant::KCenterOnly),
    );
    let medians: Vec<String> = report
        .medians
        .iter()
        .map(|(n, m)| format!("{n} {m:.4}"))
        .collect();
    Outcome::check(
        hybrid >= egl_only && hybrid >= kcenter_only,
        format!("median final F-score over 10 seeds: {}", medians.join(", ")),
    )
}

fn determinism() -> Outcome {
    let ws = separable_workspace();
    let a = serde_json::to_string(&run_session(ws.clone(), hundred_ratings()).unwrap().1).unwrap();
    let b = serde_json::to_string(&run_session(ws, hundred_ratings()).unwrap().1).unwrap();

    let ds = two_cluster_sequences(40, 12, 3);
    let mut grams = BTreeSet::new();
    for t in &ds.transactions {
        if let Payload::Sequence(events) = &t.payload {
            grams.extend(events.windows(3).map(<[u32]>::to_vec));
        }
    }
    let patterns = grams
        .into_iter()
        .enumerate()
        .map(|(id, g)| {
            let payload = Payload::Sequence(g);
            let support = ds
                .transactions
                .iter()
                .filter(|t| payload_contains(&payload, &t.payload).unwrap())
                .count();
            Pattern {
                id,
                payload,
                support,
                supporting_ids: None,
            }
        })
        .collect();
    let seq = Arc::new(Workspace::new(ds, patterns).unwrap());
    let mut config = SessionConfig {
        batch_fraction: 0.05,
        max_iterations: Some(4),
        ..SessionConfig::default()
    };
    config.features.featurizer = ipd_core::session::FeaturizerKind::Native;
    config.features.embedding.dim = 8;
    config.features.embedding.epochs = 5;
    let c = serde_json::to_string(&run_session(seq.clone(), config.clone()).unwrap().1).unwrap();
    let d = serde_json::to_string(&run_session(seq, config).unwrap().1).unwrap();
    Outcome::check(
        a == b && c == d,
        format!(
            "itemset reports {} bytes, embedded sequence reports {} bytes, identical: {} / {}",
            a.len(),
            c.len(),
            a == b,
            c == d
        ),
    )
}

/// A `ipd serve` child process on an ephemeral port.
struct ServerProcess {
    child: Child,
    base: String,
    agent: ureq::Agent,
}

impl ServerProcess {
    fn start(store: &Path) -> ServerProcess {
        let mut child = Command::new(env!("CARGO_BIN_EXE_ipd"))
            .args(["serve", "--port", "0", "--store"])
            .arg(store)
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn ipd serve");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on ")
            .expect("listening line")
            .to_owned();
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        ServerProcess {
            child,
            base: format!("http://{addr}"),
            agent,
        }
    }

    fn get(&self, path: &str) -> Value {
        let mut resp = self
            .agent
            .get(format!("{}{path}", self.base))
            .call()
            .unwrap();
        assert_eq!(resp.status().as_u16(), 200, "{path}");
        resp.body_mut().read_json().unwrap()
    }

    fn post(&self, path: &str, body: Value) -> Value {
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .send_json(body)
            .unwrap();
        let status = resp.status().as_u16();
        let body: Value = resp.body_mut().read_json().unwrap();
        assert_eq!(status, 200, "{path}: {body}");
        body
    }

    /// SIGKILL, no shutdown hooks.
    fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Deterministic stand-in for a person: likes patterns containing item 1.
fn rate(request: &Value) -> Value {
    let ratings: Vec<Value> = request["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|item| {
            let items: Vec<&str> = item["rendering"]
                .as_str()
                .unwrap()
                .split_whitespace()
                .collect();
            let rating = if items.contains(&"1") { 2 } else { 1 };
            json!({ "pattern_id": item["pattern_id"], "rating": rating })
        })
        .collect();
    json!({ "ratings": ratings })
}

fn stored_theta(store: &Path, session: &str) -> Vec<f64> {
    let text = fs::read_to_string(store.join("sessions").join(format!("{session}.json"))).unwrap();
    let record: Value = serde_json::from_str(&text).unwrap();
    serde_json::from_value(record["state"]["model"]["theta"].clone()).unwrap()
}

/// Two iterations through the HTTP API. With `crash`, the server is killed
/// after the second feedback request is issued and a new one is started on
/// the same store before the ratings go in.
fn api_run(store: &Path, crash: bool) -> (Vec<f64>, bool) {
    let data = format_dataset(&SeparableItemsets::default().generate());
    let mut server = ServerProcess::start(store);
    let dataset = server.post(
        "/datasets",
        json!({ "kind": "set", "data": data, "min_support": 5 }),
    );
    let config = json!({ "batch_fraction": 0.1, "rater": { "type": "human", "classes": 2 } });
    let session = server.post(
        "/sessions",
        json!({ "dataset_id": dataset["dataset_id"], "config": config }),
    );
    let id = session["session_id"].as_str().unwrap().to_owned();

    let first = server.get(&format!("/sessions/{id}/feedback"));
    server.post(&format!("/sessions/{id}/ratings"), rate(&first["request"]));
    let pending = server.get(&format!("/sessions/{id}/feedback"));
    let mut same_request = true;
    if crash {
        server.kill();
        server = ServerProcess::start(store);
        let again = server.get(&format!("/sessions/{id}/feedback"));
        same_request = again["request"] == pending["request"];
    }
    server.post(
        &format!("/sessions/{id}/ratings"),
        rate(&pending["request"]),
    );
    drop(server);
    (stored_theta(store, &id), same_request)
}

fn crash_restart() -> Outcome {
    let crashed = tempfile::tempdir().unwrap();
    let steady = tempfile::tempdir().unwrap();
    let (after_crash, same_request) = api_run(crashed.path(), true);
    let (uninterrupted, _) = api_run(steady.path(), false);
    let diff = if after_crash.len() == uninterrupted.len() {
        after_crash
            .iter()
            .zip(&uninterrupted)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Outcome::check(
        diff <= 1e-12 && same_request,
        format!(
            "max |theta difference| {diff:.2e} over {} entries after SIGKILL between feedback and ratings, pending request preserved: {same_request} (limit 1e-12)",
            uninterrupted.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient-check", gradient_check),
        ("miner-equivalence", miner_equivalence),
        ("k-center-2-approx", k_center_bound),
        ("egl-equivalence", egl_equivalence),
        ("embedding-separation", embedding_separation),
        ("synthetic-session", synthetic_session),
        ("mushroom-replication", mushroom_replication),
        ("ablation-direction", ablation),
        ("session-determinism", determinism),
        ("crash-restart", crash_restart),
    ];
    let strict = env::var("IPD_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = run();
        let label = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Missing => {
                if strict {
                    failed += 1;
                }
                "FAIL"
            }
        };
        println!("{label} {name:<22} {}", outcome.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
