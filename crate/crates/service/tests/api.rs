use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use patternlab::{double_descent_preset, grokking_preset, Grid, Scenario};
use patternlab_service::router;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => request
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => request.body(Body::empty()),
    }
    .unwrap();
    let response = router().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn scenario_of(v: &Value) -> Scenario {
    serde_json::from_value(v["scenario"].clone()).unwrap()
}

#[tokio::test]
async fn lists_both_presets() {
    let (status, body) = call("GET", "/api/presets", None).await;
    assert_eq!(status, StatusCode::OK);
    let presets = body["presets"].as_array().unwrap();
    assert_eq!(presets.len(), 2);
    for p in presets {
        // deserializing into Scenario re-runs validation
        let s: Scenario = serde_json::from_value(p["scenario"].clone()).unwrap();
        assert_eq!(s.len(), 3);
    }
    let grok = presets.iter().find(|p| p["name"] == "grokking").unwrap();
    assert!(grok["scenario"]["preferred"].is_u64());
}

#[tokio::test]
async fn curve_for_preset_matches_core() {
    let (status, body) = call("POST", "/api/curve", Some(json!({"preset": "grokking"}))).await;
    assert_eq!(status, StatusCode::OK);
    let grid: Grid = patternlab::grid::DEFAULT_GRID.parse().unwrap();
    let expected = patternlab::curve(&grokking_preset(), &grid, Default::default(), None).unwrap();
    let got: patternlab::Curve = serde_json::from_value(body["curve"].clone()).unwrap();
    assert_eq!(got, expected);
    assert_eq!(scenario_of(&body), grokking_preset());
    assert_eq!(body["grid"], "log:0.1:10000:200");
    assert!(body["model_version"].is_string());
}

#[tokio::test]
async fn explicit_scenario_echoes_defaults() {
    let body = json!({
        "scenario": {"patterns": [{"gamma": 1.0, "alpha": 2.0, "b": 3.0, "g": 0.25}]},
        "grid": "lin:0:10:11",
        "axis": "capacity"
    });
    let (status, resp) = call("POST", "/api/curve", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resp["scenario"]["baseline"], 0.0);
    assert!(resp["scenario"]["preferred"].is_null());
    assert_eq!(resp["curve"]["axis"], "capacity");
    assert_eq!(resp["curve"]["t"].as_array().unwrap().len(), 11);
}

#[tokio::test]
async fn invalid_gamma_names_the_field() {
    let body = json!({
        "scenario": {"patterns": [{"gamma": 1.5, "alpha": 1.0, "b": 0.0, "g": 1.0}]}
    });
    let (status, resp) = call("POST", "/api/curve", Some(body)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(resp["field"], "patterns[0].gamma");
    assert_eq!(resp["code"], "invalid_field");
}

#[tokio::test]
async fn too_many_patterns_is_unprocessable() {
    let pattern = json!({"gamma": 0.5, "alpha": 1.0, "b": 1.0, "g": 0.5});
    let body = json!({"scenario": {"patterns": vec![pattern.clone(); 21]}});
    let (status, resp) = call("POST", "/api/curve", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(resp["message"].as_str().unwrap().contains("Monte Carlo"));

    let body = json!({
        "scenario": {"patterns": vec![pattern; 21], "baseline": 0.5},
        "grid": "lin:0:4:5",
        "mc": {"samples": 500, "seed": 1}
    });
    let (status, resp) = call("POST", "/api/curve", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resp["curve"]["mc"]["samples"], 500);
}

#[tokio::test]
async fn request_limits() {
    let (status, resp) = call(
        "POST",
        "/api/curve",
        Some(json!({"preset": "grokking", "grid": "log:0.1:1e4:10001"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(resp["field"], "grid");

    for body in [
        json!({}),
        json!({"preset": "nope"}),
        json!({"preset": "grokking", "grid": "log:0:1:3"}),
        json!({"preset": "grokking", "unknown": 1}),
    ] {
        let (status, resp) = call("POST", "/api/curve", Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(resp["message"].is_string());
    }

    let request = Request::builder()
        .method("POST")
        .uri("/api/curve")
        .body(Body::from("{not json"))
        .unwrap();
    let response = router().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn interpolation_endpoints() {
    let (_, zero) = call("POST", "/api/interpolate", Some(json!({"lambda": 0.0}))).await;
    assert_eq!(scenario_of(&zero), double_descent_preset());
    let (_, one) = call("POST", "/api/interpolate", Some(json!({"lambda": 1.0}))).await;
    assert_eq!(scenario_of(&one), grokking_preset());

    let (status, mid) = call("POST", "/api/interpolate", Some(json!({"lambda": 0.5}))).await;
    assert_eq!(status, StatusCode::OK);
    let mid = scenario_of(&mid);
    for (i, p) in mid.patterns().iter().enumerate() {
        for end in [double_descent_preset(), grokking_preset()] {
            let q = end.patterns()[i];
            assert_eq!((p.alpha(), p.b(), p.g()), (q.alpha(), q.b(), q.g()));
        }
    }

    let (status, resp) = call("POST", "/api/interpolate", Some(json!({"lambda": 1.5}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(resp["field"], "lambda");
}

#[tokio::test]
async fn interpolate_equals_curve_on_interpolated_scenario() {
    let (_, interp) = call(
        "POST",
        "/api/interpolate",
        Some(json!({"lambda": 0.3, "grid": "log:1:1e4:50"})),
    )
    .await;
    let spec = interp["scenario"].clone();
    let (_, direct) = call(
        "POST",
        "/api/curve",
        Some(json!({"scenario": spec, "grid": "log:1:1e4:50"})),
    )
    .await;
    assert_eq!(interp["curve"], direct["curve"]);
}

#[tokio::test]
async fn stateless_across_requests() {
    let body = json!({"preset": "double-descent", "grid": "log:1:100:20"});
    let (_, first) = call("POST", "/api/curve", Some(body.clone())).await;
    call("POST", "/api/interpolate", Some(json!({"lambda": 0.7}))).await;
    call("POST", "/api/curve", Some(json!({"preset": "grokking"}))).await;
    let (_, again) = call("POST", "/api/curve", Some(body)).await;
    assert_eq!(first["curve"], again["curve"]);
    assert_eq!(first["scenario"], again["scenario"]);
}

#[tokio::test]
async fn cors_preflight_allowed() {
    let request = Request::builder()
        .method("OPTIONS")
        .uri("/api/curve")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let response = router().oneshot(request).await.unwrap();
    assert!(response.headers().contains_key("access-control-allow-origin"));
}
