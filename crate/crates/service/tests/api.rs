use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use axum::body::{to_bytes, Body, Bytes};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use base64::Engine;
use serde_json::{json, Value};
use tower::ServiceExt;

use segbench_core::growcut::{self, GrowCutParams, SeedLabel, Stroke, StrokeSet};
use segbench_core::metrics;
use segbench_core::nrrd::{self, NrrdGrid};
use segbench_core::phantom::{self, Phantom};
use segbench_core::volume::{Dims, Plane};
use segbench_service::{router, AppState, ServiceConfig};

const N: usize = 24;

fn sphere() -> Phantom {
    phantom::sphere(Dims::new(N, N, N), [12.0, 12.0, 12.0], 7.0, 300, -400)
}

fn app_with(dir: &std::path::Path, budget: Duration, extra: &[(&str, Phantom)]) -> Router {
    let p = sphere();
    nrrd::save(dir.join("sphere.nrrd"), &NrrdGrid::Volume(p.volume)).unwrap();
    nrrd::save(dir.join("sphere_truth.nrrd"), &NrrdGrid::Labels(p.truth)).unwrap();
    for (name, ph) in extra {
        nrrd::save(dir.join(format!("{name}.nrrd")), &NrrdGrid::Volume(ph.volume.clone())).unwrap();
    }
    let mut config = ServiceConfig::resolve(0, Some(dir.to_path_buf())).unwrap();
    config.time_budget = budget;
    router(Arc::new(AppState::load(config).unwrap()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Bytes) {
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let req = Request::builder().method(method).uri(uri).body(body).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, to_bytes(res.into_body(), usize::MAX).await.unwrap())
}

async fn call_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn new_session(app: &Router) -> String {
    let (status, v) = call_json(app, Method::POST, "/sessions", Some(json!({"volume_id": "sphere"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    v["id"].as_str().unwrap().to_string()
}

fn decode_png(bytes: &[u8]) -> (png::OutputInfo, Vec<u8>) {
    let mut reader = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info, buf)
}

fn sphere_strokes() -> Value {
    serde_json::to_value(phantom::sphere_strokes(Dims::new(N, N, N), [12.0, 12.0, 12.0], 7.0)).unwrap()
}

#[tokio::test]
async fn catalog_lists_short_volumes_only() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let (status, v) = call_json(&app, Method::GET, "/volumes", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!([{"id": "sphere", "dims": [N, N, N], "spacing": [1.0, 1.0, 1.0]}]));
}

#[test]
fn data_dir_comes_from_flag_or_environment() {
    let flag = ServiceConfig::resolve(8080, Some("/flag".into())).unwrap();
    assert_eq!(flag.data_dir, std::path::PathBuf::from("/flag"));
    assert_eq!(flag.time_budget, Duration::from_secs(120));
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let (status, v) = call_json(&app, Method::POST, "/sessions", Some(json!({"volume_id": "nope"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "NotFound");
    for uri in ["/sessions/99", "/masks/abc", "/volumes/nope/slice?plane=axial&index=0"] {
        assert_eq!(call(&app, Method::GET, uri, None).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn malformed_bodies_are_400() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let id = new_session(&app).await;
    let req = Request::builder()
        .method(Method::POST)
        .uri(format!("/sessions/{id}/strokes"))
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
    let (status, v) = call_json(&app, Method::POST, "/sessions", Some(json!({"volume": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "BadRequest");
    let bad_window = "/volumes/sphere/slice?plane=axial&index=0&window=0&level=0";
    assert_eq!(call(&app, Method::GET, bad_window, None).await.0, StatusCode::BAD_REQUEST);
    let bad_plane = "/volumes/sphere/slice?plane=oblique&index=0";
    assert_eq!(call(&app, Method::GET, bad_plane, None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn slice_png_is_window_levelled() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let (status, bytes) = call(&app, Method::GET, "/volumes/sphere/slice?plane=coronal&index=12&window=700&level=-50", None).await;
    assert_eq!(status, StatusCode::OK);
    let (info, pixels) = decode_png(&bytes);
    assert_eq!((info.width, info.height), (N as u32, N as u32));
    assert_eq!(info.color_type, png::ColorType::Grayscale);
    let expected = segbench_core::volume::window_level(&sphere().volume.slice(Plane::Coronal, 12).unwrap(), 700.0, -50.0).unwrap();
    assert_eq!(pixels, expected.samples);
    assert_eq!(*pixels.iter().max().unwrap(), 255);
    assert_eq!(*pixels.iter().min().unwrap(), 0);
}

#[tokio::test]
async fn segment_without_foreground_is_422() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let id = new_session(&app).await;
    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/segment"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "EmptyForeground");
    let (_, s) = call_json(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(s["running"], false);
}

#[tokio::test]
async fn conflicting_strokes_leave_the_session_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let id = new_session(&app).await;
    let fg = json!({"strokes": [{"plane": "axial", "index": 3, "label": "foreground", "pixels": [[5, 6], [6, 6]]}]});
    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(fg)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["seeds"], json!({"foreground": 2, "background": 0}));

    let bg = json!({"strokes": [
        {"plane": "axial", "index": 0, "label": "background", "pixels": [[0, 0]]},
        {"plane": "sagittal", "index": 5, "label": "background", "pixels": [[6, 3]]}
    ]});
    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(bg)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "ConflictingSeed");
    let (_, s) = call_json(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(s["seeds"], json!({"foreground": 2, "background": 0}));
    assert_eq!(s["strokes"], 1);

    let out = json!({"strokes": [{"plane": "axial", "index": N, "label": "background", "pixels": [[0, 0]]}]});
    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(out)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "OutOfRange");

    let (status, v) = call_json(&app, Method::DELETE, &format!("/sessions/{id}/strokes"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["seeds"], json!({"foreground": 0, "background": 0}));
}

#[tokio::test]
async fn stroke_order_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let strokes: StrokeSet = serde_json::from_value(sphere_strokes()).unwrap();
    let mut masks = Vec::new();
    for order in [strokes.strokes.clone(), strokes.strokes.iter().rev().cloned().collect::<Vec<Stroke>>()] {
        let id = new_session(&app).await;
        for s in order {
            let body = serde_json::to_value(StrokeSet { strokes: vec![s] }).unwrap();
            assert_eq!(call(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(body)).await.0, StatusCode::OK);
        }
        let (_, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/segment"), None).await;
        masks.push(v["mask_id"].as_str().unwrap().to_string());
    }
    assert_eq!(masks[0], masks[1]);
}

#[tokio::test]
async fn full_round_trip_matches_in_process_results() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let id = new_session(&app).await;

    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(sphere_strokes())).await;
    assert_eq!(status, StatusCode::OK);
    let (status, run) = call_json(&app, Method::POST, &format!("/sessions/{id}/segment"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::OK, "{run}");
    assert_eq!(run["converged"], true);
    let mask_id = run["mask_id"].as_str().unwrap().to_string();

    // Same strokes, same content hash.
    let (_, again) = call_json(&app, Method::POST, &format!("/sessions/{id}/segment"), None).await;
    assert_eq!(again["mask_id"], run["mask_id"]);
    assert_eq!(again["iterations"], run["iterations"]);

    let p = sphere();
    let strokes: StrokeSet = serde_json::from_value(sphere_strokes()).unwrap();
    let seeds = growcut::strokes_to_seeds(&strokes.strokes, p.volume.dims()).unwrap();
    let direct = growcut::segment(&p.volume, &seeds, &GrowCutParams::default()).unwrap();
    assert_eq!(run["iterations"], direct.iterations);

    let (status, bytes) = call(&app, Method::GET, &format!("/masks/{mask_id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let served = nrrd::parse_nrrd(&bytes).unwrap().into_labels().unwrap();
    assert_eq!(served, direct.mask);

    let (status, _) = call(&app, Method::GET, &format!("/sessions/{id}/metrics"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let gt = base64::engine::general_purpose::STANDARD.encode(nrrd::write_labels(&p.truth));
    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/ground_truth"), Some(json!({"nrrd_base64": gt}))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["has_ground_truth"], true);

    let (status, m) = call_json(&app, Method::GET, &format!("/sessions/{id}/metrics"), None).await;
    assert_eq!(status, StatusCode::OK);
    let expected = metrics::dice(&p.truth, &served).unwrap();
    assert_eq!(m["dsc"].as_f64().unwrap(), expected);
    assert_eq!(m["hd"].as_f64().unwrap(), metrics::hausdorff(&p.truth, &served).unwrap());
    assert_eq!(m["voxels_a"], p.truth.foreground_count());

    // Registering by path gives the same numbers.
    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/ground_truth"), Some(json!({"path": "sphere_truth.nrrd"}))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, m2) = call_json(&app, Method::GET, &format!("/sessions/{id}/metrics"), None).await;
    assert_eq!(m2["dsc"], m["dsc"]);

    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/ground_truth"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");
}

#[tokio::test]
async fn reads_are_idempotent_and_overlay_is_side_effect_free() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let id = new_session(&app).await;
    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(sphere_strokes())).await;
    let (_, run) = call_json(&app, Method::POST, &format!("/sessions/{id}/segment"), None).await;
    let session_uri = format!("/sessions/{id}");
    let before = call(&app, Method::GET, &session_uri, None).await.1;

    let overlay_uri = format!("/sessions/{id}/overlay?plane=axial&index=12");
    let (status, first) = call(&app, Method::GET, &overlay_uri, None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, second) = call(&app, Method::GET, &overlay_uri, None).await;
    assert_eq!(first, second);
    assert_eq!(call(&app, Method::GET, &session_uri, None).await.1, before);

    let (info, rgba) = decode_png(&first);
    assert_eq!(info.color_type, png::ColorType::Rgba);
    let mask_id = run["mask_id"].as_str().unwrap();
    let served = nrrd::parse_nrrd(&call(&app, Method::GET, &format!("/masks/{mask_id}"), None).await.1)
        .unwrap()
        .into_labels()
        .unwrap();
    let slice = served.slice(Plane::Axial, 12).unwrap();
    let strokes: StrokeSet = serde_json::from_value(sphere_strokes()).unwrap();
    let seeds = growcut::strokes_to_seeds(&strokes.strokes, Dims::new(N, N, N)).unwrap();
    for (k, px) in rgba.chunks_exact(4).enumerate() {
        let (u, v) = (k % N, k / N);
        let expected = match seeds.get(Plane::Axial.voxel(12, u, v)) {
            Some(SeedLabel::Foreground) => segbench_service::render::FOREGROUND_SEED_RGBA,
            Some(SeedLabel::Background) => segbench_service::render::BACKGROUND_SEED_RGBA,
            None if slice.get(u, v) == 1 => segbench_service::render::MASK_RGBA,
            None => [0, 0, 0, 0],
        };
        assert_eq!(px, expected, "pixel ({u},{v})");
    }
    let bad = format!("/sessions/{id}/overlay?plane=axial&index={N}");
    assert_eq!(call(&app, Method::GET, &bad, None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn axial_stroke_seeds_only_its_slice() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let id = new_session(&app).await;
    let stroke = json!({"strokes": [{"plane": "axial", "index": 9, "label": "foreground", "pixels": [[11, 12], [12, 12], [13, 12]]}]});
    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(stroke)).await;
    for k in 0..N {
        let (_, bytes) = call(&app, Method::GET, &format!("/sessions/{id}/overlay?plane=axial&index={k}"), None).await;
        let (_, rgba) = decode_png(&bytes);
        let seeded = rgba.chunks_exact(4).filter(|p| *p == segbench_service::render::FOREGROUND_SEED_RGBA).count();
        assert_eq!(seeded, if k == 9 { 3 } else { 0 }, "slice {k}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn slow_runs_answer_202_and_block_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let big = phantom::sphere(Dims::new(96, 96, 96), [48.0, 48.0, 48.0], 30.0, 300, -400);
    let app = app_with(dir.path(), Duration::ZERO, &[("big", big)]);
    let (_, v) = call_json(&app, Method::POST, "/sessions", Some(json!({"volume_id": "big"}))).await;
    let id = v["id"].as_str().unwrap().to_string();
    let strokes = serde_json::to_value(phantom::sphere_strokes(Dims::new(96, 96, 96), [48.0, 48.0, 48.0], 30.0)).unwrap();
    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(strokes)).await;

    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/segment"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let poll = v["poll"].as_str().unwrap().to_string();
    assert_eq!(poll, format!("/sessions/{id}/segment"));
    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/segment"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "SegmentationRunning");

    let mut done = None;
    for _ in 0..600 {
        let (status, v) = call_json(&app, Method::GET, &poll, None).await;
        if status == StatusCode::OK {
            done = Some(v);
            break;
        }
        assert_eq!(status, StatusCode::ACCEPTED);
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    let done = done.expect("run finished");
    assert_eq!(done["converged"], true);
    let (_, s) = call_json(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(s["mask_id"], done["mask_id"]);
    assert_eq!(s["running"], false);
}

#[tokio::test]
async fn save_writes_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(dir.path(), Duration::from_secs(60), &[]);
    let id = new_session(&app).await;
    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), Some(sphere_strokes())).await;
    let (status, v) = call_json(&app, Method::POST, &format!("/sessions/{id}/save"), None).await;
    assert_eq!(status, StatusCode::OK);
    let path = std::path::PathBuf::from(v["path"].as_str().unwrap());
    let snap: segbench_service::SessionSnapshot = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(snap.volume_id, "sphere");
    assert_eq!(snap.strokes.len(), 6);
    assert_eq!(snap.mask_id, None);
    let _: BTreeMap<String, Value> = serde_json::from_value(v["snapshot"].clone()).unwrap();
}
