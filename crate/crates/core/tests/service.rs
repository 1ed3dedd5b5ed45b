use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use misinfo_refine::finegrained::FineLabel;
use misinfo_refine::refinement::*;
use misinfo_refine::service::{router, ServiceState, TOKEN_HEADER};
use serde_json::{json, Value};
use tower::ServiceExt;

fn item(id: &str, entropy: f64) -> QueueItem {
    QueueItem {
        cascade_id: id.to_string(),
        text: format!("text of {id}"),
        source_domain: Some("daily-buzz1.net".into()),
        source_class: Some("unreliable".into()),
        timestamp: 1_609_459_200,
        cascade_size: 4,
        unique_users: 3,
        weak_label: 1,
        prob_misinfo: 0.5,
        entropy,
        community_label: None,
        m_state: MState::LowConfidence,
        s_state: SState::Unknown,
        iteration: 1,
        guidelines_version: GUIDELINES_VERSION.to_string(),
    }
}

/// `n` instances of which the first `queued` are pending, entropy rising with index.
fn store(n: usize, queued: usize) -> Arc<SharedStore> {
    let ids: Vec<String> = (0..n).map(|i| format!("c{i:03}")).collect();
    let mut s = LabelStore::new(ids.iter().map(|id| (id.clone(), 1u8)));
    s.set_iteration(1);
    let query = assign_action(MState::LowConfidence, SState::Unknown);
    let actions: Vec<(String, Action)> = ids[..queued].iter().map(|id| (id.clone(), query)).collect();
    s.apply_actions(1, &actions, true, |id| item(id, id[1..].parse::<f64>().unwrap() / 1000.0)).unwrap();
    Arc::new(SharedStore::new(s))
}

fn app(store: &Arc<SharedStore>, token: Option<&str>) -> Router {
    router(ServiceState {
        store: store.clone(),
        token: token.map(str::to_string),
    })
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn label_body(id: &str, label: &str) -> Value {
    json!({"cascade_id": id, "fine_label": label, "annotator_id": "ann-1"})
}

#[tokio::test]
async fn empty_queue_is_an_empty_list() {
    let s = store(3, 0);
    let (status, body) = call(&app(&s, None), "GET", "/api/queue", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));
}

#[tokio::test]
async fn queue_returns_highest_entropy_first() {
    let s = store(5, 3);
    let (status, body) = call(&app(&s, None), "GET", "/api/queue?limit=2", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body.as_array().unwrap().iter().map(|i| i["cascade_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["c002", "c001"]);
    let first = &body[0];
    for field in ["text", "source_domain", "source_class", "timestamp", "cascade_size", "unique_users", "weak_label", "prob_misinfo", "community_label", "guidelines_version"] {
        assert!(first.get(field).is_some(), "{field}");
    }
}

#[tokio::test]
async fn labels_binarize_and_leave_the_queue() {
    let s = store(4, 3);
    let app = app(&s, None);
    let (_, before) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(before["answered"], 0);
    assert_eq!(before["pending"], 3);

    let (status, ack) = call(&app, "POST", "/api/label", Some(label_body("c000", "false"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["working_label"], 1);
    let (status, ack) = call(&app, "POST", "/api/label", Some(label_body("c001", "mostly true"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!((ack["working_label"].as_u64(), ack["fine_label"].as_str()), (Some(0), Some("mostly_true")));

    let (_, after) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(after["answered"], 2);
    assert_eq!(after["pending"], 1);
    let total: u64 = ["pending", "retained", "flipped", "removed"].iter().map(|k| after[k].as_u64().unwrap()).sum();
    assert_eq!(total, 4);

    let (_, queue) = call(&app, "GET", "/api/queue", None).await;
    let ids: Vec<&str> = queue.as_array().unwrap().iter().map(|i| i["cascade_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["c002"]);

    let snapshot = s.read();
    for (id, answer) in snapshot.queue().answered() {
        assert_eq!(snapshot.get(id).unwrap().working_label, answer.fine_label.binarize());
    }
}

#[tokio::test]
async fn every_label_value_is_accepted() {
    let s = store(7, 7);
    let app = app(&s, None);
    for (i, label) in FineLabel::ALL.iter().enumerate() {
        let (status, ack) = call(&app, "POST", "/api/label", Some(label_body(&format!("c{i:03}"), label.as_str()))).await;
        assert_eq!(status, StatusCode::OK, "{label:?}");
        assert_eq!(ack["working_label"].as_u64(), Some(u64::from(label.binarize())));
    }
    assert_eq!(s.read().progress().answered, 7);
}

#[tokio::test]
async fn duplicate_submission_keeps_the_first_answer() {
    let s = store(2, 2);
    let app = app(&s, None);
    assert_eq!(call(&app, "POST", "/api/label", Some(label_body("c000", "debunk"))).await.0, StatusCode::OK);
    let (status, err) = call(&app, "POST", "/api/label", Some(label_body("c000", "false"))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["field"], "cascade_id");
    let snapshot = s.read();
    assert_eq!(snapshot.queue().answered()["c000"].fine_label, FineLabel::Debunk);
    assert_eq!(snapshot.get("c000").unwrap().working_label, 0);
}

#[tokio::test]
async fn invalid_submissions_name_the_field() {
    let s = store(3, 2);
    let app = app(&s, None);
    let (status, err) = call(&app, "POST", "/api/label", Some(label_body("c000", "satire"))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "fine_label");
    let msg = err["error"].as_str().unwrap();
    for l in FineLabel::ALL {
        assert!(msg.contains(l.as_str()), "{msg}");
    }

    let (status, err) = call(&app, "POST", "/api/label", Some(label_body("zzz", "true"))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["field"], "cascade_id");

    // known but never queued
    let (status, _) = call(&app, "POST", "/api/label", Some(label_body("c002", "true"))).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, err) = call(&app, "POST", "/api/label", Some(json!({"cascade_id": "c000", "fine_label": "true"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "annotator_id");

    let req = Request::builder().method("POST").uri("/api/label").body(Body::from("{nope")).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
    assert_eq!(s.read().progress().answered, 0);
}

#[tokio::test]
async fn guidelines_list_every_label() {
    let s = store(1, 1);
    let app = app(&s, None);
    let (status, g) = call(&app, "GET", "/api/guidelines", None).await;
    assert_eq!(status, StatusCode::OK);
    let labels = g["labels"].as_array().unwrap();
    assert_eq!(labels.len(), 7);
    for l in FineLabel::ALL {
        assert!(labels.iter().any(|x| x["label"] == l.as_str()), "{l:?}");
    }
    let mixture = labels.iter().find(|x| x["label"] == "mixture").unwrap();
    assert!(mixture["definition"].as_str().unwrap().contains("significant elements of both"));
    assert!(g["examples"]["typical"].is_array() && g["examples"]["tricky"].is_array());

    let (_, queue) = call(&app, "GET", "/api/queue", None).await;
    assert_eq!(queue[0]["guidelines_version"], g["version"]);
}

#[tokio::test]
async fn proceed_releases_the_gate() {
    let s = store(2, 2);
    let (status, ack) = call(&app(&s, None), "POST", "/api/proceed", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["iteration"], 1);
    assert!(s.read().proceed_requested());
}

#[tokio::test]
async fn token_gate() {
    let s = store(2, 1);
    let app = app(&s, Some("sesame"));
    let (status, err) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(err["field"], TOKEN_HEADER);
    let req = Request::builder().uri("/api/progress").header(TOKEN_HEADER, "sesame").body(Body::empty()).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::OK);
    let req = Request::builder().uri("/api/progress").header(TOKEN_HEADER, "wrong").body(Body::empty()).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::UNAUTHORIZED);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions() {
    let s = store(40, 40);
    let app = app(&s, None);
    let distinct: Vec<_> = (0..30)
        .map(|i| {
            let app = app.clone();
            tokio::spawn(async move { call(&app, "POST", "/api/label", Some(label_body(&format!("c{i:03}"), "true"))).await.0 })
        })
        .collect();
    for h in distinct {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }

    let same: Vec<_> = (0..16)
        .map(|i| {
            let app = app.clone();
            let label = if i % 2 == 0 { "false" } else { "true" };
            tokio::spawn(async move { call(&app, "POST", "/api/label", Some(label_body("c035", label))).await.0 })
        })
        .collect();
    let mut ok = 0;
    for h in same {
        match h.await.unwrap() {
            StatusCode::OK => ok += 1,
            other => assert_eq!(other, StatusCode::CONFLICT),
        }
    }
    assert_eq!(ok, 1);
    let p = s.read().progress();
    assert_eq!((p.answered, p.pending), (31, 9));
}
