use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use cvel::pipeline::{decode_image, encode_pgm, segment, synth_scenario, trace_csv, InitShape};
use cvel::{Mode, ModelParams, Preset};
use cvel_service::{router, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    content_type: String,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.body))
        })
    }

    fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }
}

fn app() -> Router {
    router(Arc::new(Store::new(Duration::from_secs(3600))), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Vec<u8>, accept: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(a) = accept {
        req = req.header(header::ACCEPT, a);
    }
    let resp = app
        .clone()
        .oneshot(req.body(Body::from(body)).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_string();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, "GET", uri, vec![], None).await
}

async fn new_session(app: &Router) -> String {
    let r = call(app, "POST", "/sessions", vec![], None).await;
    assert_eq!(r.status, StatusCode::CREATED);
    r.json()["id"].as_str().unwrap().to_string()
}

async fn wait_finished(app: &Router, id: &str) -> Value {
    let start = Instant::now();
    loop {
        let state = get(app, &format!("/sessions/{id}")).await.json();
        if state["status"] != "running" {
            return state;
        }
        assert!(start.elapsed() < Duration::from_secs(120), "run did not finish");
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

fn circle_params(max_outer: usize) -> Vec<u8> {
    json!({ "preset": "circle", "max_outer": max_outer, "init": "circle:32,32,22" })
        .to_string()
        .into_bytes()
}

#[tokio::test]
async fn create_returns_201_and_fresh_state() {
    let app = app();
    let id = new_session(&app).await;
    let state = get(&app, &format!("/sessions/{id}")).await;
    assert_eq!(state.status, StatusCode::OK);
    let s = state.json();
    assert_eq!(s["status"], "idle");
    assert_eq!(s["image"], Value::Null);
    assert_eq!(s["mode"], "cvel");
    assert_eq!(s["params"]["gamma2"], 3.0);
}

#[tokio::test]
async fn unknown_session_is_404_everywhere() {
    let app = app();
    for (method, path) in [
        ("GET", ""),
        ("DELETE", ""),
        ("PUT", "/image"),
        ("PUT", "/landmarks"),
        ("PUT", "/params"),
        ("POST", "/run"),
        ("POST", "/cancel"),
        ("GET", "/contour"),
        ("GET", "/trace"),
        ("GET", "/overlay.png"),
        ("GET", "/mask.png"),
    ] {
        let r = call(&app, method, &format!("/sessions/nope{path}"), b"[]".to_vec(), None).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{method} {path}");
        assert!(r.json()["error"].as_str().unwrap().contains("nope"));
    }
}

#[tokio::test]
async fn run_without_image_is_409() {
    let app = app();
    let id = new_session(&app).await;
    let r = call(&app, "POST", &format!("/sessions/{id}/run"), vec![], None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn bad_uploads_are_400() {
    let app = app();
    let id = new_session(&app).await;
    let r = call(&app, "PUT", &format!("/sessions/{id}/image"), b"P6\n1 1\n255\nxyz".to_vec(), None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let s = synth_scenario("disk", (64, 64), 0.0, 0).unwrap();
    let r = call(&app, "PUT", &format!("/sessions/{id}/image"), encode_pgm(&s.image), None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["image"], json!({ "height": 64, "width": 64 }));

    let r = call(
        &app,
        "PUT",
        &format!("/sessions/{id}/landmarks"),
        br#"[{"row": 3, "col": 4}, {"row": 10, "col": 99}]"#.to_vec(),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(r.json()["error"].as_str().unwrap().contains("(10, 99)"));
    let r = call(&app, "PUT", &format!("/sessions/{id}/landmarks"), b"not json".to_vec(), None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    for body in [
        &br#"{"mode": "cv", "b": 1}"#[..],
        br#"{"gamma9": 1}"#,
        br#"{"tol": 0}"#,
        br#"{"init": "circle:1,2"}"#,
    ] {
        let r = call(&app, "PUT", &format!("/sessions/{id}/params"), body.to_vec(), None).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{}", String::from_utf8_lossy(body));
    }
    // the rejected edits left the session untouched
    let state = get(&app, &format!("/sessions/{id}")).await.json();
    assert_eq!(state["landmarks"], json!([]));
    assert_eq!(state["params"], serde_json::to_value(ModelParams::default()).unwrap());
}

#[tokio::test]
async fn params_follow_preset_then_fields_then_mode() {
    let app = app();
    let id = new_session(&app).await;
    let body = json!({ "preset": "triangle", "alpha2": 0.7, "mode": "cvl", "max_outer": 9 });
    let r = call(&app, "PUT", &format!("/sessions/{id}/params"), body.to_string().into_bytes(), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let p: ModelParams = serde_json::from_value(r.json()["params"].clone()).unwrap();
    let mut expect = ModelParams::default().with_preset(Preset::Triangle).with_mode(Mode::Cvl);
    expect.alpha2 = 0.7;
    expect.max_outer = 9;
    assert_eq!(p, expect);
    assert_eq!(r.json()["mode"], "cvl");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn full_round_trip_matches_the_pipeline() {
    let app = app();
    let id = new_session(&app).await;
    let s = synth_scenario("broken_circle", (64, 64), 0.02, 11).unwrap();
    let bytes = encode_pgm(&s.image);
    assert_eq!(call(&app, "PUT", &format!("/sessions/{id}/image"), bytes.clone(), None).await.status, StatusCode::OK);
    let lm = s.suggested_landmarks.to_json().into_bytes();
    assert_eq!(call(&app, "PUT", &format!("/sessions/{id}/landmarks"), lm, None).await.status, StatusCode::OK);
    assert_eq!(call(&app, "PUT", &format!("/sessions/{id}/params"), circle_params(40), None).await.status, StatusCode::OK);

    let r = call(&app, "POST", &format!("/sessions/{id}/run"), vec![], None).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    assert_eq!(r.json()["status"], "running");
    let state = wait_finished(&app, &id).await;
    assert_eq!(state["status"], "done", "{state}");
    let iterations = state["iteration"].as_u64().unwrap() as usize;
    assert_eq!(state["summary"]["iterations"].as_u64().unwrap() as usize, iterations);

    let contour = get(&app, &format!("/sessions/{id}/contour")).await.json();
    let closed = contour["closed"].as_array().unwrap();
    assert!(closed.iter().any(|c| c == true), "{contour}");

    let rows = get(&app, &format!("/sessions/{id}/trace")).await;
    assert!(rows.content_type.starts_with("application/json"));
    assert_eq!(rows.json().as_array().unwrap().len(), iterations);

    // same inputs through the library, as the CLI does
    let image = decode_image(&bytes).unwrap();
    let mut params = ModelParams::default().with_preset(Preset::Circle);
    params.max_outer = 40;
    let init = InitShape::Circle { row: 32.0, col: 32.0, radius: 22.0 };
    let seg = segment(&image, &s.suggested_landmarks, &init, &params).unwrap();
    let csv = call(&app, "GET", &format!("/sessions/{id}/trace"), vec![], Some("text/csv")).await;
    assert_eq!(csv.content_type, "text/csv");
    assert_eq!(csv.text(), trace_csv(&seg.report));
    assert_eq!(contour, serde_json::from_str::<Value>(&seg.contour.to_json()).unwrap());

    for png in ["overlay.png", "mask.png"] {
        let r = get(&app, &format!("/sessions/{id}/{png}")).await;
        assert_eq!(r.status, StatusCode::OK);
        assert_eq!(r.content_type, "image/png");
        assert_eq!(&r.body[1..4], b"PNG");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn running_session_rejects_edits_and_cancels() {
    let app = app();
    let id = new_session(&app).await;
    let s = synth_scenario("broken_circle", (128, 128), 0.02, 1).unwrap();
    call(&app, "PUT", &format!("/sessions/{id}/image"), encode_pgm(&s.image), None).await;
    let body = json!({ "preset": "circle", "max_outer": 100000, "tol": 1e-300 });
    call(&app, "PUT", &format!("/sessions/{id}/params"), body.to_string().into_bytes(), None).await;
    assert_eq!(call(&app, "POST", &format!("/sessions/{id}/run"), vec![], None).await.status, StatusCode::ACCEPTED);

    assert_eq!(call(&app, "POST", &format!("/sessions/{id}/run"), vec![], None).await.status, StatusCode::CONFLICT);
    for (path, body) in [("landmarks", b"[]".to_vec()), ("params", b"{}".to_vec()), ("image", encode_pgm(&s.image))] {
        let r = call(&app, "PUT", &format!("/sessions/{id}/{path}"), body, None).await;
        assert_eq!(r.status, StatusCode::CONFLICT, "{path}");
    }

    // the trace only grows while the run is live
    let mut last = 0;
    for _ in 0..5 {
        let rows = get(&app, &format!("/sessions/{id}/trace")).await.json();
        let n = rows.as_array().unwrap().len();
        assert!(n >= last);
        last = n;
        tokio::time::sleep(Duration::from_millis(30)).await;
    }

    assert_eq!(call(&app, "POST", &format!("/sessions/{id}/cancel"), vec![], None).await.status, StatusCode::ACCEPTED);
    let state = wait_finished(&app, &id).await;
    assert_eq!(state["status"], "failed");
    assert_eq!(state["error"], "cancelled");
    assert_eq!(call(&app, "POST", &format!("/sessions/{id}/cancel"), vec![], None).await.status, StatusCode::CONFLICT);
    // editable again
    assert_eq!(call(&app, "PUT", &format!("/sessions/{id}/landmarks"), b"[]".to_vec(), None).await.status, StatusCode::OK);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_sessions_match_serial_runs() {
    let app = app();
    let scenarios: Vec<_> = [3u64, 4]
        .iter()
        .map(|&seed| synth_scenario("broken_circle", (64, 64), 0.02, seed).unwrap())
        .collect();
    let mut ids = Vec::new();
    for s in &scenarios {
        let id = new_session(&app).await;
        call(&app, "PUT", &format!("/sessions/{id}/image"), encode_pgm(&s.image), None).await;
        call(&app, "PUT", &format!("/sessions/{id}/landmarks"), s.suggested_landmarks.to_json().into_bytes(), None).await;
        call(&app, "PUT", &format!("/sessions/{id}/params"), circle_params(25), None).await;
        ids.push(id);
    }
    for id in &ids {
        assert_eq!(call(&app, "POST", &format!("/sessions/{id}/run"), vec![], None).await.status, StatusCode::ACCEPTED);
    }
    for (id, s) in ids.iter().zip(&scenarios) {
        assert_eq!(wait_finished(&app, id).await["status"], "done");
        let csv = call(&app, "GET", &format!("/sessions/{id}/trace"), vec![], Some("text/csv")).await.text();
        let mut params = ModelParams::default().with_preset(Preset::Circle);
        params.max_outer = 25;
        let init = InitShape::Circle { row: 32.0, col: 32.0, radius: 22.0 };
        let image = decode_image(&encode_pgm(&s.image)).unwrap();
        let serial = segment(&image, &s.suggested_landmarks, &init, &params).unwrap();
        assert_eq!(csv, trace_csv(&serial.report));
    }
}

#[tokio::test]
async fn contour_before_any_run_is_404_and_trace_is_empty() {
    let app = app();
    let id = new_session(&app).await;
    assert_eq!(get(&app, &format!("/sessions/{id}/contour")).await.status, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, &format!("/sessions/{id}/trace")).await.json(), json!([]));
    let csv = call(&app, "GET", &format!("/sessions/{id}/trace"), vec![], Some("text/csv")).await;
    assert_eq!(csv.text().trim_end(), "iter,T1,T2,T3,T4,Phi,Sigma,energy");
    assert_eq!(get(&app, &format!("/sessions/{id}/overlay.png")).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn delete_removes_the_session() {
    let app = app();
    let id = new_session(&app).await;
    assert_eq!(call(&app, "DELETE", &format!("/sessions/{id}"), vec![], None).await.status, StatusCode::NO_CONTENT);
    assert_eq!(get(&app, &format!("/sessions/{id}")).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn static_assets_are_served_beside_the_api() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>studio</h1>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let app = router(Arc::new(Store::new(Duration::from_secs(60))), Some(dir.path().to_path_buf()));
    let index = get(&app, "/").await;
    assert_eq!(index.status, StatusCode::OK);
    assert_eq!(index.text(), "<h1>studio</h1>");
    assert!(index.content_type.starts_with("text/html"));
    assert!(get(&app, "/app.js").await.content_type.contains("javascript"));
    assert_eq!(get(&app, "/missing.css").await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "POST", "/sessions", vec![], None).await.status, StatusCode::CREATED);
}
