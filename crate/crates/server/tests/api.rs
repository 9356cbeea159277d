use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use growcut3d_core::imageio::{generate_phantom, parse_nrrd, phantom_strokes, NrrdVolume};
use growcut3d_core::volumetry::voxel_volume;
use growcut3d_core::{
    dsc, Dims, Encoding, LabelVolume, PhantomShape, PhantomSpec, ScalarVolume, SeedStroke, StrokeSet,
};
use growcut3d_server::slice::{decode_multipart, Layer};
use growcut3d_server::{router, AppState, ServerConfig};
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
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> Reply {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type =
        resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, body }
}

fn app_with(config: ServerConfig) -> (Router, AppState) {
    let state = AppState::new(config);
    (router(state.clone()), state)
}

fn app() -> Router {
    app_with(ServerConfig::default()).0
}

async fn upload(app: &Router, vol: &ScalarVolume) -> String {
    let r = call(app, Method::POST, "/sessions", vol.encode_nrrd(Encoding::Gzip).unwrap()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.body));
    r.json()["session_id"].as_str().unwrap().to_string()
}

async fn slice(app: &Router, id: &str, axis: &str, index: usize, layer: &str) -> (StatusCode, Vec<u8>) {
    let r =
        call(app, Method::GET, &format!("/sessions/{id}/slice?axis={axis}&index={index}&layer={layer}"), Body::empty())
            .await;
    if r.status != StatusCode::OK {
        return (r.status, r.body);
    }
    let (head, pixels) = decode_multipart(&r.content_type, &r.body).expect("multipart");
    assert_eq!(head.rows * head.cols, pixels.len());
    (r.status, pixels)
}

async fn wait_done(app: &Router, id: &str) -> Value {
    let start = Instant::now();
    loop {
        let r = call(app, Method::GET, &format!("/sessions/{id}/segment"), Body::empty()).await;
        assert_eq!(r.status, StatusCode::OK);
        let v = r.json();
        if v["state"] != "running" {
            return v;
        }
        assert!(start.elapsed() < Duration::from_secs(60), "job did not finish");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

fn cube_phantom(dims: Dims, side: usize, sigma: f64) -> (ScalarVolume, LabelVolume, StrokeSet) {
    let (vol, truth) =
        generate_phantom(&PhantomSpec::new(dims, PhantomShape::centered_cube(dims, side), sigma, 9)).unwrap();
    let strokes = phantom_strokes(&truth).unwrap();
    (vol, truth, strokes)
}

#[tokio::test]
async fn upload_validation() {
    let app = app();
    let vol = ScalarVolume::filled(Dims::new(8, 8, 8), 3.0).unwrap();
    let r = call(&app, Method::POST, "/sessions", vol.encode_nrrd(Encoding::Raw).unwrap()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json()["dims"], json!([8, 8, 8]));
    assert_eq!(r.json()["spacing"], json!([1.0, 1.0, 1.0]));

    let two_d = b"NRRD0004\ntype: uchar\ndimension: 2\nsizes: 2 2\nencoding: raw\n\n\x00\x00\x00\x00".to_vec();
    let r = call(&app, Method::POST, "/sessions", two_d).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["field"], "dimension");

    let r = call(&app, Method::POST, "/sessions", Body::empty()).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn slices() {
    let app = app();
    let id = upload(&app, &ScalarVolume::filled(Dims::new(6, 5, 4), 42.0).unwrap()).await;

    let (status, gray) = slice(&app, &id, "axial", 3, "image").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(gray.len(), 30);
    assert!(gray.iter().all(|&p| p == gray[0]));

    assert_eq!(slice(&app, &id, "sagittal", 6, "image").await.0, StatusCode::RANGE_NOT_SATISFIABLE);
    assert_eq!(slice(&app, &id, "oblique", 0, "image").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(slice(&app, "00000000-0000-0000-0000-000000000000", "axial", 0, "image").await.0, StatusCode::NOT_FOUND);
    assert_eq!(slice(&app, "garbage", "axial", 0, "image").await.0, StatusCode::NOT_FOUND);

    for layer in ["labels", "segmentation"] {
        let (status, px) = slice(&app, &id, "coronal", 1, layer).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(px, vec![0; 24]);
    }

    let r =
        call(&app, Method::GET, &format!("/sessions/{id}/slice?axis=sagittal&index=2&format=png"), Body::empty()).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "image/png");
    let mut reader = png::Decoder::new(std::io::Cursor::new(r.body)).read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    assert_eq!((info.width, info.height), (5, 4));
}

#[tokio::test]
async fn window_and_level() {
    let app = app();
    let dims = Dims::new(3, 1, 1);
    let vol = ScalarVolume::new(dims, [1.0, 2.0, 3.0], [0.0; 3], vec![0.0, 50.0, 100.0]).unwrap();
    let id = upload(&app, &vol).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/slice?axis=axial&index=0"), Body::empty()).await;
    let (head, px) = decode_multipart(&r.content_type, &r.body).unwrap();
    assert_eq!(px, vec![0, 128, 255]);
    assert_eq!((head.window, head.level, head.layer), (Some(100.0), Some(50.0), Layer::Image));
    assert_eq!(head.spacing, [2.0, 1.0]);
    let r =
        call(&app, Method::GET, &format!("/sessions/{id}/slice?axis=axial&index=0&window=50&level=75"), Body::empty())
            .await;
    assert_eq!(decode_multipart(&r.content_type, &r.body).unwrap().1, vec![0, 0, 255]);
}

#[tokio::test]
async fn stroke_accumulation_and_errors() {
    let app = app();
    let id = upload(&app, &ScalarVolume::filled(Dims::new(4, 4, 4), 0.0).unwrap()).await;
    let uri = format!("/sessions/{id}/strokes");
    let doc =
        r#"{"volume_dims":[4,4,4],"strokes":[{"label":1,"voxels":[[1,1,1],[2,1,1]]},{"label":2,"voxels":[[0,0,0]]}]}"#;
    let r = call(&app, Method::POST, &uri, doc).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json(), json!({"labels": [1, 2], "voxel_counts": [2, 1], "stroke_count": 2}));

    let conflict = r#"{"volume_dims":[4,4,4],"strokes":[{"label":2,"voxels":[[1,1,1]]}]}"#;
    assert_eq!(call(&app, Method::POST, &uri, conflict).await.status, StatusCode::UNPROCESSABLE_ENTITY);
    let outside = r#"{"volume_dims":[4,4,4],"strokes":[{"label":2,"voxels":[[4,1,1]]}]}"#;
    assert_eq!(call(&app, Method::POST, &uri, outside).await.status, StatusCode::UNPROCESSABLE_ENTITY);
    let wrong_dims = r#"{"volume_dims":[5,4,4],"strokes":[{"label":2,"voxels":[[3,1,1]]}]}"#;
    assert_eq!(call(&app, Method::POST, &uri, wrong_dims).await.status, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, px) = slice(&app, &id, "axial", 1, "labels").await;
    assert_eq!((px[5], px[6], px[0]), (1, 1, 0));

    assert_eq!(call(&app, Method::DELETE, &uri, Body::empty()).await.status, StatusCode::OK);
    let (_, px) = slice(&app, &id, "axial", 1, "labels").await;
    assert!(px.iter().all(|&p| p == 0));
}

#[tokio::test]
async fn segment_preconditions() {
    let (app, _) = app_with(ServerConfig { job_start_delay: Duration::from_millis(300), ..Default::default() });
    let (vol, _, strokes) = cube_phantom(Dims::new(10, 10, 10), 4, 0.0);
    let id = upload(&app, &vol).await;
    let seg = format!("/sessions/{id}/segment");

    for path in ["postedit", "metrics", "export"] {
        let (m, body) = if path == "postedit" { (Method::POST, r#"{"ops":"dilate:1"}"#) } else { (Method::GET, "") };
        assert_eq!(call(&app, m, &format!("/sessions/{id}/{path}"), body).await.status, StatusCode::CONFLICT, "{path}");
    }

    let one_label = StrokeSet { volume_dims: vol.dims(), strokes: vec![strokes.strokes[0].clone()] };
    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), one_label.to_json()).await;
    assert_eq!(call(&app, Method::POST, &seg, Body::empty()).await.status, StatusCode::UNPROCESSABLE_ENTITY);

    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), strokes.to_json()).await;
    assert_eq!(call(&app, Method::POST, &seg, r#"{"bogus":1}"#).await.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&app, Method::POST, &seg, Body::empty()).await.status, StatusCode::ACCEPTED);
    assert_eq!(call(&app, Method::POST, &seg, Body::empty()).await.status, StatusCode::CONFLICT);
    let done = wait_done(&app, &id).await;
    assert_eq!(done["state"], "done");
    assert_eq!(done["stats"]["converged"], true);
}

#[tokio::test]
async fn full_loop_on_a_phantom() {
    let app = app();
    let dims = Dims::new(20, 20, 20);
    let (vol, truth, strokes) = cube_phantom(dims, 8, 10.0);
    let id = upload(&app, &vol).await;
    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), strokes.to_json()).await;

    let seg = format!("/sessions/{id}/segment");
    let mut exports = Vec::new();
    for _ in 0..2 {
        assert_eq!(call(&app, Method::POST, &seg, r#"{"workers": 2}"#).await.status, StatusCode::ACCEPTED);
        assert_eq!(wait_done(&app, &id).await["state"], "done");
        exports.push(call(&app, Method::GET, &format!("/sessions/{id}/export"), Body::empty()).await.body);
    }
    assert_eq!(exports[0], exports[1]);

    let r = call(&app, Method::POST, &format!("/sessions/{id}/postedit"), r#"{"ops":"islands:keep_largest"}"#).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.body));
    assert_eq!(r.json()["history"], json!(["islands:keep_largest"]));

    let r = call(&app, Method::GET, &format!("/sessions/{id}/export?encoding=raw"), Body::empty()).await;
    let mask = parse_nrrd(&r.body).unwrap().into_labels().unwrap();
    assert!(dsc(&mask, &truth).unwrap() >= 0.95);

    let m = call(&app, Method::GET, &format!("/sessions/{id}/metrics"), Body::empty()).await.json();
    let expect = voxel_volume(&mask, mask.spacing()).unwrap();
    assert_eq!(m["voxel_count"], expect.voxel_count);
    assert_eq!(m["volume_mm3"].as_f64().unwrap(), expect.volume_mm3);

    let (_, px) = slice(&app, &id, "axial", 10, "segmentation").await;
    assert_eq!(px.iter().filter(|&&p| p == 1).count(), 64);
}

#[tokio::test]
async fn corrective_strokes_accumulate() {
    let app = app();
    // two bright cubes; the first strokes only mark one of them
    let dims = Dims::new(24, 12, 12);
    let mut data = vec![0.0f32; dims.len()];
    for (i, v) in data.iter_mut().enumerate() {
        let [x, y, z] = dims.coords(i);
        let a = (2..8).contains(&x) && (3..9).contains(&y) && (3..9).contains(&z);
        let b = (14..20).contains(&x) && (3..9).contains(&y) && (3..9).contains(&z);
        *v = if a || b { 100.0 } else { 0.0 };
    }
    let vol = ScalarVolume::new(dims, [1.0; 3], [0.0; 3], data).unwrap();
    let id = upload(&app, &vol).await;
    let edges: Vec<[usize; 3]> = (0..24).flat_map(|x| [[x, 0, 0], [x, 11, 11]]).collect();
    let first =
        StrokeSet::new(dims, vec![SeedStroke::new(1, vec![[5, 6, 6]]).unwrap(), SeedStroke::new(2, edges).unwrap()])
            .unwrap();
    call(&app, Method::POST, &format!("/sessions/{id}/strokes"), first.to_json()).await;

    let run = || async {
        assert_eq!(
            call(&app, Method::POST, &format!("/sessions/{id}/segment"), r#"{"roi_margin": 30}"#).await.status,
            StatusCode::ACCEPTED
        );
        wait_done(&app, &id).await;
        call(&app, Method::GET, &format!("/sessions/{id}/metrics"), Body::empty()).await.json()["voxel_count"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(run().await, 216);

    let more = StrokeSet::new(dims, vec![SeedStroke::new(1, vec![[16, 6, 6]]).unwrap()]).unwrap();
    let r = call(&app, Method::POST, &format!("/sessions/{id}/strokes"), more.to_json()).await;
    assert_eq!(r.json()["stroke_count"], 3);
    assert_eq!(run().await, 432);
}

#[tokio::test]
async fn idle_sessions_are_evicted() {
    let (app, state) = app_with(ServerConfig { idle_timeout: Duration::from_secs(60), ..Default::default() });
    let id = upload(&app, &ScalarVolume::filled(Dims::new(2, 2, 2), 0.0).unwrap()).await;
    assert_eq!(state.evict_idle(Instant::now()), 0);
    assert_eq!(state.evict_idle(Instant::now() + Duration::from_secs(61)), 1);
    assert_eq!(call(&app, Method::GET, &format!("/sessions/{id}"), Body::empty()).await.status, StatusCode::NOT_FOUND);

    let id = upload(&app, &ScalarVolume::filled(Dims::new(2, 2, 2), 0.0).unwrap()).await;
    assert_eq!(
        call(&app, Method::DELETE, &format!("/sessions/{id}"), Body::empty()).await.status,
        StatusCode::NO_CONTENT
    );
    assert_eq!(state.session_count(), 0);
}
