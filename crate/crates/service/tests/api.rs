use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use cineforge_core::geometry::{Box3, Intrinsics, Pose, Vec3};
use cineforge_core::io::camera::write_camera_txt;
use cineforge_core::io::raster::{decode_depth_png16, decode_idmap_png};
use cineforge_core::io::scene_doc::SceneDocument;
use cineforge_core::scene::{CameraTrack, Entity, Scene};
use cineforge_service::{router, AppState, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn scene(entities: bool) -> Scene {
    let k = Intrinsics::new(80.0, 80.0, 40.0, 30.0, 80, 60);
    let mut s = Scene::new(8, 8.0, CameraTrack::fixed(Pose::from_translation(Vec3::new(0.0, 0.0, 5.0)), k));
    if entities {
        s = s
            .with_entity(Entity::new(1, "crate").with_key(0, Box3::axis_aligned(Vec3::new(-0.8, 0.0, 0.0), Vec3::splat(0.5))))
            .with_entity(Entity::new(2, "sofa").with_key(0, Box3::axis_aligned(Vec3::new(0.8, 0.0, 0.0), Vec3::new(0.6, 0.3, 0.3))));
    }
    s
}

fn doc_text(s: &Scene) -> String {
    SceneDocument::from_scene(s).to_json()
}

struct Reply {
    status: StatusCode,
    revision: Option<u64>,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap()
    }
}

async fn send(app: &Router, method: &str, uri: &str, if_match: Option<&str>, body: &str) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(m) = if_match {
        req = req.header("if-match", m);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body.to_string())).unwrap()).await.unwrap();
    let status = resp.status();
    let revision = resp.headers().get("x-scene-revision").map(|v| v.to_str().unwrap().parse().unwrap());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, revision, bytes }
}

fn app() -> Router {
    router(AppState::new(Store::in_memory()))
}

async fn create(app: &Router, s: &Scene) -> u64 {
    let r = send(app, "POST", "/scenes", None, &doc_text(s)).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json()["revision"], 0);
    r.json()["id"].as_u64().unwrap()
}

#[tokio::test]
async fn create_and_read() {
    let app = app();
    let id = create(&app, &scene(true)).await;
    let r = send(&app, "GET", &format!("/scenes/{id}"), None, "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.revision, Some(0));
    let doc: SceneDocument = serde_json::from_value(r.json()["scene"].clone()).unwrap();
    assert_eq!(doc.to_scene(), scene(true));
    let list = send(&app, "GET", "/scenes", None, "").await.json();
    assert_eq!(list, json!([{ "id": id, "revision": 0 }]));
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    assert_eq!(send(&app, "GET", "/scenes/42", None, "").await.status, StatusCode::NOT_FOUND);
    assert_eq!(send(&app, "GET", "/scenes/abc", None, "").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(send(&app, "POST", "/scenes", None, "{not json").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(send(&app, "POST", "/scenes", None, "{\"schema_version\": 1}").await.status, StatusCode::UNPROCESSABLE_ENTITY);

    let mut dup = scene(true);
    dup.entities[1].id = 1;
    let r = send(&app, "POST", "/scenes", None, &doc_text(&dup)).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["violations"][0]["kind"], "duplicate_id");

    let id = create(&app, &scene(true)).await;
    let put = format!("/scenes/{id}");
    assert_eq!(send(&app, "PUT", &put, None, &doc_text(&scene(false))).await.status, StatusCode::PRECONDITION_REQUIRED);
    assert_eq!(send(&app, "PUT", &put, Some("soon"), &doc_text(&scene(false))).await.status, StatusCode::BAD_REQUEST);
    let r = send(&app, "PUT", &put, Some("7"), &doc_text(&scene(false))).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["current_revision"], 0);
    let r = send(&app, "PUT", &put, Some("\"0\""), &doc_text(&scene(false))).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["revision"], 1);
}

#[tokio::test]
async fn keyframe_edits() {
    let app = app();
    let id = create(&app, &scene(true)).await;
    let uri = format!("/scenes/{id}/keyframes");
    let b = json!({"center": [0.0, 1.0, 0.0], "half_extents": [0.5, 0.5, 0.5], "rotation": [1.0, 0.0, 0.0, 0.0]});
    let set = json!({"target": 1, "frame": 7, "value": b}).to_string();
    let r = send(&app, "POST", &uri, Some("0"), &set).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.revision, Some(1));

    let cam = json!({"target": "camera", "frame": 7, "value": {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 6.0]}});
    assert_eq!(send(&app, "POST", &uri, Some("1"), &cam.to_string()).await.status, StatusCode::OK);

    let doc: SceneDocument = serde_json::from_value(send(&app, "GET", &format!("/scenes/{id}"), None, "").await.json()["scene"].clone()).unwrap();
    let s = doc.to_scene();
    assert_eq!(s.entity(1).unwrap().box_at(7).unwrap().center, Vec3::new(0.0, 1.0, 0.0));
    assert_eq!(s.camera.pose_at(7).unwrap().translation, Vec3::new(0.0, 0.0, 6.0));

    let remove = json!({"target": 1, "frame": 7}).to_string();
    assert_eq!(send(&app, "POST", &uri, Some("2"), &remove).await.status, StatusCode::OK);
    // last keyframe, unknown entity, frame out of range, wrong value kind
    for bad in [
        json!({"target": 1, "frame": 0}),
        json!({"target": 9, "frame": 0, "value": b}),
        json!({"target": 1, "frame": 8, "value": b}),
        json!({"target": 1, "frame": 1, "value": {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 6.0]}}),
        json!({"target": 1, "frame": 1, "value": {"center": [0.0, 0.0, 0.0], "half_extents": [-1.0, 0.5, 0.5], "rotation": [1.0, 0.0, 0.0, 0.0]}}),
    ] {
        let r = send(&app, "POST", &uri, Some("3"), &bad.to_string()).await;
        assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY, "{bad}");
    }
    assert_eq!(send(&app, "GET", &format!("/scenes/{id}"), None, "").await.revision, Some(3));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_conflicting_writes_admit_exactly_one() {
    let app = app();
    for round in 0..20 {
        let id = create(&app, &scene(true)).await;
        let uri = format!("/scenes/{id}/keyframes");
        let body = |x: f64| {
            json!({"target": 1, "frame": 3, "value": {"center": [x, 0.0, 0.0], "half_extents": [0.5, 0.5, 0.5], "rotation": [1.0, 0.0, 0.0, 0.0]}})
                .to_string()
        };
        let (a, b) = (app.clone(), app.clone());
        let (ua, ub) = (uri.clone(), uri.clone());
        let (ba, bb) = (body(0.1), body(0.2));
        let ta = tokio::spawn(async move { send(&a, "POST", &ua, Some("0"), &ba).await.status });
        let tb = tokio::spawn(async move { send(&b, "POST", &ub, Some("0"), &bb).await.status });
        let mut statuses = [ta.await.unwrap(), tb.await.unwrap()];
        statuses.sort();
        assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT], "round {round}");
        assert_eq!(send(&app, "GET", &format!("/scenes/{id}"), None, "").await.revision, Some(1));
    }
}

#[tokio::test]
async fn previews_are_reproducible_and_track_revisions() {
    let state = AppState::new(Store::in_memory());
    let app = router(state.clone());
    let id = create(&app, &scene(true)).await;
    let uri = format!("/scenes/{id}/preview/2?kind=id");
    let first = send(&app, "GET", &uri, None, "").await;
    assert_eq!(first.status, StatusCode::OK);
    assert_eq!(first.revision, Some(0));
    let again = send(&app, "GET", &uri, None, "").await;
    assert_eq!(first.bytes, again.bytes);
    let ids = decode_idmap_png(&first.bytes).unwrap();
    assert_eq!(ids.ids().into_iter().collect::<Vec<_>>(), vec![1, 2]);
    assert!(ids.data.contains(&0));

    // a fresh service renders the same bytes for the same document
    let other = router(AppState::new(Store::in_memory()));
    let oid = create(&other, &scene(true)).await;
    assert_eq!(send(&other, "GET", &format!("/scenes/{oid}/preview/2?kind=id"), None, "").await.bytes, first.bytes);

    let depth = send(&app, "GET", &format!("/scenes/{id}/preview/2?width=40&height=30"), None, "").await;
    let d = decode_depth_png16(&depth.bytes, 0.001).unwrap();
    assert_eq!((d.width, d.height), (40, 30));
    assert!(d.data.iter().any(|&v| v > 4.0 && v < 5.0));

    let moved = json!({"target": 1, "frame": 2, "value": {"center": [-0.8, 0.0, 2.0], "half_extents": [0.5, 0.5, 0.5], "rotation": [1.0, 0.0, 0.0, 0.0]}});
    send(&app, "POST", &format!("/scenes/{id}/keyframes"), Some("0"), &moved.to_string()).await;
    let after = send(&app, "GET", &uri, None, "").await;
    assert_eq!(after.revision, Some(1));
    assert_ne!(after.bytes, first.bytes);
    assert!(state.previews.len() >= 3);
}

#[tokio::test]
async fn preview_of_an_empty_scene_is_all_sentinel() {
    let app = app();
    let id = create(&app, &scene(false)).await;
    let r = send(&app, "GET", &format!("/scenes/{id}/preview/0?kind=depth"), None, "").await;
    let d = decode_depth_png16(&r.bytes, 0.001).unwrap();
    assert!(d.data.iter().all(|&v| v == 0.0));
}

#[tokio::test]
async fn malformed_preview_requests() {
    let app = app();
    let id = create(&app, &scene(true)).await;
    for q in ["0?kind=rgb", "x", "8", "0?width=0", "0?height=99999", "0?scale=-1"] {
        let r = send(&app, "GET", &format!("/scenes/{id}/preview/{q}"), None, "").await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{q}");
    }
    assert_eq!(send(&app, "GET", "/scenes/99/preview/0", None, "").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn camera_export_and_validation() {
    let app = app();
    let s = scene(true);
    let id = create(&app, &s).await;
    let r = send(&app, "GET", &format!("/scenes/{id}/camera.txt"), None, "").await;
    assert_eq!(String::from_utf8(r.bytes).unwrap(), write_camera_txt(&s.export_camera_rt()));

    let v = send(&app, "POST", &format!("/scenes/{id}/validate"), None, "").await.json();
    assert_eq!(v["violations"], json!([]));
    let mut bad = s.clone();
    bad.fps = 0.0;
    let v = send(&app, "POST", &format!("/scenes/{id}/validate"), None, &doc_text(&bad)).await.json();
    assert_eq!(v["violations"][0]["kind"], "invalid_fps");
    assert!(v["violations"][0]["message"].as_str().unwrap().contains("fps"));
}

#[tokio::test]
async fn scenes_persist_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(Store::open(dir.path()).unwrap()));
    let id = create(&app, &scene(true)).await;
    let set = json!({"target": "camera", "frame": 5, "value": {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.5, 0.0, 6.0]}});
    send(&app, "POST", &format!("/scenes/{id}/keyframes"), Some("0"), &set.to_string()).await;
    let before = send(&app, "GET", &format!("/scenes/{id}"), None, "").await.json();
    drop(app);

    let app = router(AppState::new(Store::open(dir.path()).unwrap()));
    let after = send(&app, "GET", &format!("/scenes/{id}"), None, "").await.json();
    assert_eq!(before, after);
    assert_eq!(after["revision"], 1);
    // ids continue after the stored ones
    assert_eq!(create(&app, &scene(false)).await, id + 1);
}
