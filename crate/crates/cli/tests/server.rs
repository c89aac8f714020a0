use std::path::Path;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use bems_agent::{Script, ScriptedCall};
use bems_bench::fixture::{canonical_fixture, FixtureOptions};
use bems_cli::data::load_building;
use bems_cli::server::{router, AppState};
use bems_cli::{commands, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const BRIGHTNESS: &str = "Set the living room light to 75% brightness.";

fn config(dir: &Path) -> ServiceConfig {
    let mut cfg = ServiceConfig {
        data_dir: dir.join("data"),
        buildings: vec!["TX-01".into()],
        ..Default::default()
    };
    cfg.provider.fixture = Some(dir.join("fixtures"));
    let (profile, series) = load_building(&cfg, "TX-01").unwrap();
    let mut f = canonical_fixture(&profile, &series, FixtureOptions::default());
    f.insert(
        "chat-brightness",
        Script::new(BRIGHTNESS, "The living room light is now at {{2/device/attributes/brightness}}% brightness.")
            .classify("Device Status & Control", "Device Custom Configurations", "brightness change")
            .turn(vec![ScriptedCall::new("devices.sync", json!({}))])
            .turn(vec![ScriptedCall::new("devices.query", json!({"device": "Living Room Light"}))])
            .turn(vec![ScriptedCall::new(
                "devices.execute",
                json!({"device": "{{1/device/device_id}}", "attribute": "brightness", "value": 75}),
            )]),
    );
    std::fs::create_dir_all(dir.join("fixtures")).unwrap();
    f.save(&dir.join("fixtures/TX-01.json")).unwrap();
    cfg
}

fn app(cfg: ServiceConfig) -> (Router, AppState) {
    let state = AppState::new(cfg).unwrap();
    (router(state.clone()), state)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, v)
}

#[tokio::test]
async fn home_lists_every_meter_and_device() {
    let dir = tempfile::tempdir().unwrap();
    let (app, state) = app(config(dir.path()));
    let (status, v) = call(&app, Method::GET, "/home", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["building_id"], "TX-01");
    assert_eq!(v["meters"].as_array().unwrap().len(), 18);
    assert_eq!(v["devices"].as_array().unwrap().len(), state.buildings["TX-01"].env.profile.devices.len());
    let (status, _) = call(&app, Method::GET, "/home?building=ZZ-99", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn execute_updates_state_and_publishes_an_event() {
    let dir = tempfile::tempdir().unwrap();
    let (app, state) = app(config(dir.path()));
    let mut rx = state.events.subscribe();
    let body = json!({"attribute": "brightness", "value": 75});
    let (status, v) = call(&app, Method::POST, "/devices/living_room_light/execute", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["device"]["attributes"]["brightness"], json!(75.0));
    let e = rx.try_recv().unwrap();
    assert_eq!(e["type"], "device_updated");
    assert_eq!(e["building_id"], "TX-01");
    assert_eq!(e["source"]["kind"], "api");
    let audit = state.buildings["TX-01"].env.home.audit();
    assert_eq!(audit.len(), 1);
}

#[tokio::test]
async fn offline_and_unknown_devices_get_error_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let (app, state) = app(config(dir.path()));
    let (status, v) = call(&app, Method::POST, "/devices/kettle/execute", Some(json!({"attribute": "power", "value": true}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "offline_device");
    let (status, v) = call(&app, Method::POST, "/devices/toaster/execute", Some(json!({"attribute": "power", "value": true}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_device");
    let (status, v) =
        call(&app, Method::POST, "/devices/living_room_light/execute", Some(json!({"attribute": "brightness", "value": 140}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "value_out_of_range");
    // Rejections are audited too.
    assert_eq!(state.buildings["TX-01"].env.home.audit_len(), 2);
}

#[tokio::test]
async fn chat_runs_the_agent_and_changes_the_home() {
    let dir = tempfile::tempdir().unwrap();
    let (app, state) = app(config(dir.path()));
    let mut rx = state.events.subscribe();
    let (status, v) = call(&app, Method::POST, "/chat", Some(json!({"query": BRIGHTNESS}))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let names: Vec<&str> = v["tool_calls"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["devices.sync", "devices.query", "devices.execute"]);
    assert!(v["response"]["text"].as_str().unwrap().contains("75"));
    let (_, home) = call(&app, Method::GET, "/home", None).await;
    let light = home["devices"].as_array().unwrap().iter().find(|d| d["device_id"] == "living_room_light").unwrap().clone();
    assert_eq!(light["attributes"]["brightness"], json!(75.0));
    let kinds: Vec<String> = std::iter::from_fn(|| rx.try_recv().ok()).map(|e| e["type"].as_str().unwrap().to_string()).collect();
    assert_eq!(kinds, ["run_started", "device_updated", "run_finished"]);
}

#[tokio::test]
async fn chat_errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(config(dir.path()));
    let (status, v) = call(&app, Method::POST, "/chat", Some(json!({"query": "hello", "building": "ZZ-99"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_building");
    let (status, v) = call(&app, Method::POST, "/chat", Some(json!({"query": "nothing scripted for this"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(v["error"]["code"], "fixture_miss");
    assert_eq!(v["run"]["error"]["code"], "fixture_miss");
}

#[tokio::test]
async fn schedule_and_memory_crud() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(config(dir.path()));
    let new = json!({
        "device_id": "Coffee Maker",
        "attribute": "power",
        "value": true,
        "trigger": {"type": "time", "at": "07:00", "recurrence": "daily"}
    });
    let (status, v) = call(&app, Method::POST, "/schedules", Some(new)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let id = v["schedule"]["schedule_id"].as_str().unwrap().to_string();
    let (_, list) = call(&app, Method::GET, "/schedules?device=coffee_maker", None).await;
    assert_eq!(list["schedules"].as_array().unwrap().len(), 1);
    let (status, _) = call(&app, Method::DELETE, &format!("/schedules/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, v) = call(&app, Method::DELETE, &format!("/schedules/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_schedule");

    let utterance = json!({"utterance": "Remember that I usually like to have the fan on for my AC."});
    let (status, v) = call(&app, Method::POST, "/memories", Some(utterance)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let id = v["memory"]["memory_id"].as_str().unwrap().to_string();
    let (_, list) = call(&app, Method::GET, "/memories", None).await;
    assert_eq!(list["memories"].as_array().unwrap().len(), 1);
    let (status, _) = call(&app, Method::DELETE, &format!("/memories/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, list) = call(&app, Method::GET, "/memories", None).await;
    assert!(list["memories"].as_array().unwrap().is_empty());
    let (status, v) = call(&app, Method::POST, "/memories", Some(json!({"utterance": "the sky"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["error"]["code"].is_string());
}

#[tokio::test]
async fn analytics_passes_requests_through() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(config(dir.path()));
    let (status, v) = call(&app, Method::GET, "/analytics?kind=device_breakdown&chart=pie", None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["artifact"]["kind"], "pie");
    let (status, v) = call(&app, Method::GET, "/analytics?kind=forecast&horizon=3&method=linear_regression&granularity=daily", None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let (status, v) = call(&app, Method::GET, "/analytics?kind=teleport", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_request");
}

#[tokio::test]
async fn get_endpoints_leave_state_alone() {
    let dir = tempfile::tempdir().unwrap();
    let (app, state) = app(config(dir.path()));
    let h = &state.buildings["TX-01"].env.home;
    let before = (h.snapshot(), h.audit_len());
    for uri in ["/home", "/schedules", "/memories", "/analytics?kind=cost", "/bench/report"] {
        call(&app, Method::GET, uri, None).await;
    }
    assert_eq!((h.snapshot(), h.audit_len()), before);
}

#[tokio::test]
async fn bench_report_is_served_once_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let (app, _) = app(cfg.clone());
    let (status, _) = call(&app, Method::GET, "/bench/report", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    commands::bench(&cfg, &[], None, Some(vec!["HE-1".into()]), false).unwrap();
    let (status, v) = call(&app, Method::GET, "/bench/report", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["overall"]["n"], 1);
}

#[tokio::test]
async fn token_guards_the_api_and_never_leaks() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.api_token = Some("s3cret".into());
    cfg.credential = Some("sk-very-private".into());
    let (app, _) = app(cfg.clone());
    let (status, v) = call(&app, Method::GET, "/home", None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert_eq!(v["error"]["code"], "unauthorized");
    let req = Request::get("/home").header(header::AUTHORIZATION, "Bearer s3cret").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let text = String::from_utf8(resp.into_body().collect().await.unwrap().to_bytes().to_vec()).unwrap();
    assert!(!text.contains("sk-very-private"));
    let (status, _) = call(&app, Method::GET, "/home?token=s3cret", None).await;
    assert_eq!(status, StatusCode::OK);
    let debug = format!("{cfg:?}");
    assert!(!debug.contains("sk-very-private") && !debug.contains("s3cret"));
}

#[tokio::test]
async fn event_stream_delivers_state_changes() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(config(dir.path()));
    let resp = app.clone().oneshot(Request::get("/events").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()[header::CONTENT_TYPE], "text/event-stream");
    let mut body = resp.into_body();
    let (status, _) =
        call(&app, Method::POST, "/devices/ac/execute", Some(json!({"attribute": "setpoint", "value": 20}))).await;
    assert_eq!(status, StatusCode::OK);
    let frame = tokio::time::timeout(std::time::Duration::from_secs(5), body.frame()).await.unwrap().unwrap().unwrap();
    let text = String::from_utf8(frame.into_data().unwrap().to_vec()).unwrap();
    assert!(text.starts_with("event: device_updated\n"), "{text}");
    let data = text.lines().find_map(|l| l.strip_prefix("data: ")).unwrap();
    let v: Value = serde_json::from_str(data).unwrap();
    assert_eq!(v["device"]["attributes"]["setpoint"], json!(20.0));
}
