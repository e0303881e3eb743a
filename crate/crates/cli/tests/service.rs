//! The HTTP service and the command line agree on the same inputs.

use std::fs;
use std::process::Command;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use forge_core::doc::DocOptions;
use forge_server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, ct: &str, body: String) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, ct)
        .body(Body::from(body))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(app: &Router, uri: &str, body: Value) -> Value {
    let (status, text) = call(app, Method::POST, uri, "application/json", body.to_string()).await;
    assert!(status.is_success(), "{status}: {text}");
    serde_json::from_str(&text).unwrap()
}

async fn get_text(app: &Router, uri: &str) -> String {
    let (status, text) = call(app, Method::GET, uri, "application/json", String::new()).await;
    assert_eq!(status, StatusCode::OK, "{text}");
    text
}

fn forge(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_forge")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

async fn wait(app: &Router, sid: &str, run: &str) {
    for _ in 0..600 {
        let v: Value = serde_json::from_str(&get_text(app, &format!("/sessions/{sid}/runs/{run}")).await).unwrap();
        if v["status"] != "running" {
            assert_eq!(v["status"], "done", "{v}");
            return;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("run did not finish");
}

#[tokio::test(flavor = "multi_thread")]
async fn cluster_and_cut_match_cli() {
    let dir = tempfile::tempdir().unwrap();
    let data = forge_core::synth::interview_like(11, 20, 47).unwrap();
    let csv_path = dir.path().join("data.csv");
    let csv = data.to_csv_string().unwrap();
    fs::write(&csv_path, &csv).unwrap();
    let input = csv_path.to_str().unwrap();

    let app = router(AppState::open(dir.path().join("srv"), DocOptions::default()).unwrap());
    let (status, text) = call(&app, Method::POST, "/datasets", "text/csv", csv).await;
    assert_eq!(status, StatusCode::CREATED, "{text}");
    let ds: Value = serde_json::from_str(&text).unwrap();
    let sid = post(&app, "/sessions", json!({ "dataset": ds["id"] })).await["id"].as_str().unwrap().to_string();

    let run = post(&app, &format!("/sessions/{sid}/runs"), json!({ "w": 0.3, "alpha": 0.1, "beta": 0.45, "seed": 7 })).await;
    wait(&app, &sid, run["id"].as_str().unwrap()).await;
    let served = get_text(&app, &format!("/sessions/{sid}/clusters")).await;
    let printed = forge(&["cluster", input, "--w", "0.3", "--alpha", "0.1", "--beta", "0.45", "--seed", "7"]);
    assert_eq!(served, printed);

    let run = post(&app, &format!("/sessions/{sid}/runs"), json!({ "w": 0.3, "alpha": 0.1, "beta": 0.25, "seed": 7 })).await;
    wait(&app, &sid, run["id"].as_str().unwrap()).await;
    let served = get_text(&app, &format!("/sessions/{sid}/clusters")).await;
    let clusters = dir.path().join("clusters.json");
    fs::write(&clusters, &served).unwrap();
    let clusters = clusters.to_str().unwrap();

    post(&app, &format!("/sessions/{sid}/similarity"), json!({ "linkage": "average" })).await;
    let dend = get_text(&app, &format!("/sessions/{sid}/dendrogram")).await;
    assert_eq!(dend, forge(&["dendrogram", clusters, "--linkage", "average"]));

    for height in ["0.2", "0.5"] {
        let cut = post(&app, &format!("/sessions/{sid}/cut"), json!({ "height": height.parse::<f64>().unwrap() })).await;
        let merged: Value = serde_json::from_str(&forge(&["merge", clusters, "--cut", height])).unwrap();
        assert_eq!(cut["sets"], merged["sets"], "height {height}");
    }

    let co = get_text(&app, &format!("/sessions/{sid}/cooccurrence?format=csv&exclude=A25")).await;
    assert_eq!(co, forge(&["cooccur", clusters, "--exclude", "A25"]));
}
