//! HTTP JSON API over the pattern-learning model.
//!
//! Every handler is a pure function of its request body. The only shared
//! state is the preset catalog, which is built into the binary.
//!
//! | Method | Path               | Body                                   |
//! |--------|--------------------|----------------------------------------|
//! | GET    | `/api/presets`     |                                        |
//! | POST   | `/api/curve`       | `{scenario \| preset, grid?, axis?, mc?}` |
//! | POST   | `/api/interpolate` | `{lambda, grid?, axis?}`               |

use std::net::SocketAddr;
use std::time::Instant;

use axum::body::Bytes;
use axum::http::{header, Method};
use axum::routing::{get, post};
use axum::{Json, Router};
use patternlab::{Axis, Curve, Grid, McSettings, Preset, Scenario, ScenarioSpec, MODEL_VERSION};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

mod error;

pub use error::ApiError;

pub const DEFAULT_PORT: u16 = 8787;
pub const MAX_GRID_POINTS: usize = 10_000;
/// Largest scenario accepted when Monte Carlo evaluation is requested.
pub const MAX_MC_PATTERNS: usize = 256;
/// Bound on `grid points * samples` for Monte Carlo requests.
pub const MAX_MC_WORK: u64 = 20_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedScenario {
    pub name: String,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetsResponse {
    pub presets: Vec<NamedScenario>,
    pub model_version: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRequest {
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default)]
    pub preset: Option<String>,
    /// `log:start:end:count` or `lin:start:end:count`.
    #[serde(default)]
    pub grid: Option<String>,
    #[serde(default)]
    pub axis: Option<Axis>,
    #[serde(default)]
    pub mc: Option<McSettings>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpolateRequest {
    pub lambda: f64,
    #[serde(default)]
    pub grid: Option<String>,
    #[serde(default)]
    pub axis: Option<Axis>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveResponse {
    pub curve: Curve,
    /// Fully resolved scenario, defaults included.
    pub scenario: Scenario,
    pub grid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub timing_ms: f64,
    pub model_version: String,
}

pub fn presets() -> PresetsResponse {
    PresetsResponse {
        presets: Preset::ALL
            .iter()
            .map(|p| NamedScenario {
                name: p.name().to_owned(),
                scenario: p.scenario(),
            })
            .collect(),
        model_version: MODEL_VERSION.to_owned(),
    }
}

fn resolve_grid(spec: Option<&str>) -> Result<(String, Grid), ApiError> {
    let spec: patternlab::GridSpec = spec
        .unwrap_or(patternlab::grid::DEFAULT_GRID)
        .parse()
        .map_err(ApiError::from)?;
    if spec.count > MAX_GRID_POINTS {
        return Err(ApiError::invalid(
            "grid",
            format!("{} points requested, at most {MAX_GRID_POINTS} allowed", spec.count),
        ));
    }
    let grid = spec.build().map_err(ApiError::from)?;
    Ok((spec.to_string(), grid))
}

fn evaluate(
    scenario: Scenario,
    grid: Option<&str>,
    axis: Option<Axis>,
    mc: Option<McSettings>,
    lambda: Option<f64>,
) -> Result<CurveResponse, ApiError> {
    let started = Instant::now();
    let (grid_spec, grid) = resolve_grid(grid)?;
    if let Some(mc) = mc {
        if mc.samples == 0 || mc.samples.saturating_mul(grid.len() as u64) > MAX_MC_WORK {
            return Err(ApiError::invalid(
                "mc.samples",
                format!("samples times grid points must be in 1..={MAX_MC_WORK}"),
            ));
        }
        if scenario.len() > MAX_MC_PATTERNS {
            return Err(ApiError::invalid(
                "patterns",
                format!("at most {MAX_MC_PATTERNS} patterns are accepted"),
            ));
        }
    }
    let curve = patternlab::curve(&scenario, &grid, axis.unwrap_or_default(), mc)?;
    Ok(CurveResponse {
        curve,
        scenario,
        grid: grid_spec,
        lambda,
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
        model_version: MODEL_VERSION.to_owned(),
    })
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

/// Handles a `/api/curve` body.
pub fn curve_response(request: CurveRequest) -> Result<CurveResponse, ApiError> {
    let scenario = match (request.scenario, request.preset.as_deref()) {
        (Some(spec), None) => Scenario::try_from(spec)?,
        (None, Some(name)) => name.parse::<Preset>()?.scenario(),
        (Some(_), Some(_)) => {
            return Err(ApiError::invalid("preset", "give either scenario or preset, not both"))
        }
        (None, None) => return Err(ApiError::invalid("scenario", "scenario or preset is required")),
    };
    evaluate(scenario, request.grid.as_deref(), request.axis, request.mc, None)
}

/// Handles a `/api/interpolate` body.
pub fn interpolate_response(request: InterpolateRequest) -> Result<CurveResponse, ApiError> {
    let scenario = patternlab::interpolate(request.lambda)?;
    evaluate(
        scenario,
        request.grid.as_deref(),
        request.axis,
        None,
        Some(request.lambda),
    )
}

async fn get_presets() -> Json<PresetsResponse> {
    Json(presets())
}

async fn post_curve(body: Bytes) -> Result<Json<CurveResponse>, ApiError> {
    curve_response(parse_body(&body)?).map(Json)
}

async fn post_interpolate(body: Bytes) -> Result<Json<CurveResponse>, ApiError> {
    interpolate_response(parse_body(&body)?).map(Json)
}

pub fn router() -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/api/presets", get(get_presets))
        .route("/api/curve", post(post_curve))
        .route("/api/interpolate", post(post_interpolate))
        .layer(cors)
}

pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router()).await
}
