use std::net::SocketAddr;
use std::path::Path;
use std::sync::mpsc;

use ipd_core::io::format_dataset;
use ipd_core::synthetic::SeparableItemsets;
use ipd_service::{serve, ServeConfig};
use serde_json::{json, Value};
use ureq::Agent;

struct Server {
    base: String,
    agent: Agent,
}

impl Server {
    fn start(store: &Path) -> Server {
        let (tx, rx) = mpsc::channel();
        let config = ServeConfig {
            store: store.to_path_buf(),
            addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        };
        std::thread::spawn(move || {
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .unwrap();
            runtime
                .block_on(serve(config, move |addr| tx.send(addr).unwrap()))
                .unwrap();
        });
        let addr = rx.recv().unwrap();
        let agent = Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Server {
            base: format!("http://{addr}"),
            agent,
        }
    }

    fn get(&self, path: &str) -> (u16, Value) {
        let mut resp = self
            .agent
            .get(format!("{}{path}", self.base))
            .call()
            .unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .send_json(body)
            .unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn ok_get(&self, path: &str) -> Value {
        let (status, body) = self.get(path);
        assert_eq!(status, 200, "{path}: {body}");
        body
    }

    fn ok_post(&self, path: &str, body: Value) -> Value {
        let (status, body) = self.post(path, body);
        assert_eq!(status, 200, "{path}: {body}");
        body
    }

    fn separable_dataset(&self) -> String {
        let data = format_dataset(&SeparableItemsets::default().generate());
        let info = self.ok_post(
            "/datasets",
            json!({ "name": "separable", "kind": "set", "data": data, "min_support": 5 }),
        );
        info["dataset_id"].as_str().unwrap().to_owned()
    }

    fn session(&self, dataset: &str, config: Value) -> String {
        let info = self.ok_post(
            "/sessions",
            json!({ "dataset_id": dataset, "config": config }),
        );
        info["session_id"].as_str().unwrap().to_owned()
    }
}

fn human(classes: u32) -> Value {
    let names: Vec<&str> = if classes == 3 {
        vec!["dislike", "not sure", "like"]
    } else {
        Vec::new()
    };
    json!({
        "batch_fraction": 0.1,
        "rater": { "type": "human", "classes": classes, "rating_names": names }
    })
}

fn ids(request: &Value) -> Vec<u64> {
    request["request"]["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["pattern_id"].as_u64().unwrap())
        .collect()
}

fn rate_all(ids: &[u64], f: impl Fn(usize) -> u32) -> Value {
    json!({ "ratings": ids.iter().enumerate().map(|(i, id)| json!({"pattern_id": id, "rating": f(i)})).collect::<Vec<_>>() })
}

#[test]
fn human_rating_loop() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    assert_eq!(
        server
            .agent
            .get(format!("{}/health", server.base))
            .call()
            .unwrap()
            .status(),
        200
    );
    let dataset = server.separable_dataset();
    let info = server.ok_get(&format!("/datasets/{dataset}"));
    assert_eq!(info["transactions"], 500);
    assert_eq!(info["classes"], 2);

    let id = server.session(&dataset, human(3));
    let (status, err) = server.get(&format!("/sessions/{id}/recommendations"));
    assert_eq!(status, 409, "{err}");
    assert_eq!(err["error"], "untrained");

    let first = server.ok_get(&format!("/sessions/{id}/feedback"));
    assert_eq!(first["status"], "awaiting_feedback");
    assert_eq!(first["request"]["iteration"], 1);
    assert_eq!(first["request"]["classes"], 3);
    assert_eq!(first["request"]["rating_names"][2], "like");
    let item = &first["request"]["items"][0];
    assert_eq!(item["kind"], "set");
    assert!(item["rendering"].as_str().unwrap().starts_with('{'));
    let pending = ids(&first);
    assert_eq!(pending.len(), 10);
    assert_eq!(server.ok_get(&format!("/sessions/{id}/feedback")), first);

    let ratings = server.ok_post(
        &format!("/sessions/{id}/ratings"),
        rate_all(&pending, |i| 1 + (i % 3) as u32),
    );
    assert_eq!(ratings["iteration"], 1);
    assert_eq!(ratings["feedback_count"], 10);
    assert_eq!(ratings["status"], "running");
    assert!(ratings["delta_theta"].as_f64().unwrap() > 0.0);

    let (status, err) = server.post(
        &format!("/sessions/{id}/ratings"),
        rate_all(&pending, |_| 1),
    );
    assert_eq!(status, 409, "{err}");

    let recs = server.ok_get(&format!("/sessions/{id}/recommendations?top_n=7"));
    assert_eq!(recs["interesting_class"], 3);
    let items = recs["items"].as_array().unwrap();
    assert_eq!(items.len(), 7);
    let probs: Vec<f64> = items
        .iter()
        .map(|r| r["probability"].as_f64().unwrap())
        .collect();
    assert!(probs.windows(2).all(|w| w[0] >= w[1]));
    assert!(items
        .iter()
        .all(|r| !pending.contains(&r["pattern_id"].as_u64().unwrap())));
    let none = server.ok_get(&format!("/sessions/{id}/recommendations?top_n=0"));
    assert!(none["items"].as_array().unwrap().is_empty());

    let metrics = server.ok_get(&format!("/sessions/{id}/metrics"));
    assert_eq!(metrics["iteration"], 1);
    assert_eq!(metrics["history"].as_array().unwrap().len(), 1);
    assert_eq!(metrics["f_scores"][0], Value::Null);

    let session = server.ok_get(&format!("/sessions/{id}"));
    assert_eq!(session["feedback_count"], 10);
    assert_eq!(session["dataset_id"], dataset.as_str());
}

#[test]
fn validation_and_not_found_errors() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let dataset = server.separable_dataset();

    let (status, body) = server.post(
        "/sessions",
        json!({ "dataset_id": dataset, "config": { "stop_threshold": 0.0 } }),
    );
    assert_eq!(status, 400, "{body}");
    assert_eq!(body["error"], "validation");
    let (status, _) = server.post("/sessions", json!({ "dataset_id": "nope", "config": {} }));
    assert_eq!(status, 404);
    let (status, _) = server.post("/sessions", json!({ "config": {} }));
    assert_eq!(status, 400);
    let (status, _) = server.get("/sessions/unknown/feedback");
    assert_eq!(status, 404);
    let (status, _) = server.get("/sessions/..%2Fescape/metrics");
    assert_eq!(status, 404);
    let (status, body) = server.post("/datasets", json!({ "kind": "set", "data": "1 2\n" }));
    assert_eq!(status, 400, "{body}");
    let (status, body) = server.post(
        "/datasets",
        json!({ "kind": "set", "data": "1 2 | x\n", "min_support": 1 }),
    );
    assert_eq!(status, 400, "{body}");

    let a = server.session(&dataset, human(3));
    let b = server.session(&dataset, human(3));
    assert_ne!(a, b);

    let pending = ids(&server.ok_get(&format!("/sessions/{a}/feedback")));
    let (status, body) = server.post(
        &format!("/sessions/{a}/ratings"),
        rate_all(&pending[..7], |_| 1),
    );
    assert_eq!(status, 400);
    assert_eq!(body["error"], "invalid_ratings");
    let missing: Vec<u64> = body["details"]["missing"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(missing, pending[7..].to_vec());

    let (status, body) = server.post(
        &format!("/sessions/{a}/ratings"),
        rate_all(&pending, |i| if i == 4 { 5 } else { 1 }),
    );
    assert_eq!(status, 400);
    assert_eq!(body["details"]["rating"], 5);
    // failed submissions change nothing
    assert_eq!(
        server.ok_get(&format!("/sessions/{a}"))["feedback_count"],
        0
    );
    assert_eq!(
        ids(&server.ok_get(&format!("/sessions/{a}/feedback"))),
        pending
    );
}

#[test]
fn restart_resumes_pending_request_and_training() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "batch_fraction": 0.1, "max_iterations": 3 });
    let (straight_metrics, rated) = {
        let server = Server::start(dir.path());
        let dataset = server.separable_dataset();
        let straight = server.session(&dataset, config.clone());
        let interrupted = server.session(&dataset, config.clone());
        for id in [&straight, &interrupted] {
            let pending = ids(&server.ok_get(&format!("/sessions/{id}/feedback")));
            server.ok_post(
                &format!("/sessions/{id}/ratings"),
                rate_all(&pending, |i| 1 + (i % 2) as u32),
            );
        }
        let pending = ids(&server.ok_get(&format!("/sessions/{straight}/feedback")));
        server.ok_post(
            &format!("/sessions/{straight}/ratings"),
            rate_all(&pending, |i| 1 + (i % 2) as u32),
        );
        let pending_interrupted = ids(&server.ok_get(&format!("/sessions/{interrupted}/feedback")));
        assert_eq!(pending, pending_interrupted);
        (
            server.ok_get(&format!("/sessions/{straight}/metrics")),
            (interrupted, pending),
        )
    };

    // a second server on the same store knows nothing in memory
    let server = Server::start(dir.path());
    let (interrupted, pending) = rated;
    assert_eq!(
        ids(&server.ok_get(&format!("/sessions/{interrupted}/feedback"))),
        pending
    );
    server.ok_post(
        &format!("/sessions/{interrupted}/ratings"),
        rate_all(&pending, |i| 1 + (i % 2) as u32),
    );
    let resumed = server.ok_get(&format!("/sessions/{interrupted}/metrics"));
    assert_eq!(resumed["history"], straight_metrics["history"]);
}

#[test]
fn oracle_sessions_report_held_out_metrics_until_exhausted() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let dataset = server.separable_dataset();
    let id = server.session(
        &dataset,
        json!({ "batch_fraction": 0.1, "max_iterations": 2 }),
    );
    for _ in 0..2 {
        let request = server.ok_get(&format!("/sessions/{id}/feedback"));
        let pending = ids(&request);
        server.ok_post(
            &format!("/sessions/{id}/ratings"),
            rate_all(&pending, |_| 1),
        );
    }
    let done = server.ok_get(&format!("/sessions/{id}/feedback"));
    assert_eq!(done["status"], "exhausted");
    assert!(done.get("request").is_none());
    let metrics = server.ok_get(&format!("/sessions/{id}/metrics"));
    assert!(metrics["f_scores"][1].as_f64().is_some());
}

#[test]
fn sessions_run_concurrently() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let dataset = server.separable_dataset();
    let sessions: Vec<String> = (0..4).map(|_| server.session(&dataset, human(2))).collect();
    std::thread::scope(|scope| {
        for id in &sessions {
            let server = &server;
            scope.spawn(move || {
                for _ in 0..3 {
                    let pending = ids(&server.ok_get(&format!("/sessions/{id}/feedback")));
                    server.ok_post(
                        &format!("/sessions/{id}/ratings"),
                        rate_all(&pending, |i| 1 + (i % 2) as u32),
                    );
                }
            });
        }
    });
    let histories: Vec<Value> = sessions
        .iter()
        .map(|id| server.ok_get(&format!("/sessions/{id}/metrics"))["history"].clone())
        .collect();
    assert!(histories.iter().all(|h| h == &histories[0]));
    assert_eq!(histories[0].as_array().unwrap().len(), 3);
}

#[test]
fn graph_datasets_take_pattern_files() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path());
    let data = "t # 0 1\nv 0 C\nv 1 O\ne 0 1 s\nt # 1 2\nv 0 C\nv 1 N\ne 0 1 s\nt # 2 1\nv 0 C\nv 1 O\nv 2 N\ne 0 1 s\ne 0 2 d\n";
    let patterns = "t # 0\nv 0 C\nv 1 O\ne 0 1 s\n#SUP:2\nt # 1\nv 0 C\nv 1 N\ne 0 1 s\n#SUP:1\nt # 2\nv 0 C\nv 1 N\ne 0 1 d\n#SUP:1\n";
    let info = server.ok_post(
        "/datasets",
        json!({ "kind": "graph", "data": data, "patterns": patterns }),
    );
    assert_eq!(info["patterns"], 3);
    let config = json!({
        "batch_fraction": 1.0,
        "rater": { "type": "human", "classes": 2 },
        "features": { "featurizer": "topological" }
    });
    let id = server.session(info["dataset_id"].as_str().unwrap(), config);
    let request = server.ok_get(&format!("/sessions/{id}/feedback"));
    let items = request["request"]["items"].as_array().unwrap();
    assert_eq!(items.len(), 3);
    assert_eq!(items[0]["graph"]["edges"].as_array().unwrap().len(), 1);
    let pending = ids(&request);
    server.ok_post(
        &format!("/sessions/{id}/ratings"),
        rate_all(&pending, |i| 1 + (i % 2) as u32),
    );
    // every pattern is rated, nothing left to recommend
    let recs = server.ok_get(&format!("/sessions/{id}/recommendations?top_n=5"));
    assert!(recs["items"].as_array().unwrap().is_empty());
    assert_eq!(
        server.ok_get(&format!("/sessions/{id}/feedback"))["status"],
        "exhausted"
    );
}
