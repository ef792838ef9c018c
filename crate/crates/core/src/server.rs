//! HTTP API: geo-referencing, document search, timeline and feature lookup.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::extract::{Path, RawQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::disambiguator::GeoReferencer;
use crate::docindex::{DocumentHit, SearchQuery, SharedIndex, MAX_ZOOM};
use crate::gazetteer::{FeatureProps, Gazetteer};
use crate::geomodel::{BBox, GeoJsonFeature};

pub const DEFAULT_BODY_LIMIT: usize = 1 << 20;
pub const DEFAULT_MAX_RESULTS: usize = 100;
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Shared, read-mostly server state.
#[derive(Clone)]
pub struct AppState {
    pub gazetteer: Arc<Gazetteer>,
    pub georef: Arc<GeoReferencer>,
    pub index: Arc<SharedIndex>,
    pub body_limit: usize,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    detail: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: &'static str,
    detail: String,
}

impl ApiError {
    fn bad_request(detail: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            error: "bad_request",
            detail: detail.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.error,
            detail: self.detail,
        };
        (self.status, json_body(&body)).into_response()
    }
}

/// Rounds every float in a JSON tree to [`SIGNIFICANT_DIGITS`] significant
/// digits so responses are stable byte for byte.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("checked f64");
            let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
                .parse()
                .expect("formatted float parses");
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn json_body<T: Serialize>(value: &T) -> Response {
    let mut v = serde_json::to_value(value).expect("response types serialize");
    round_floats(&mut v);
    (
        [(axum::http::header::CONTENT_TYPE, "application/json")],
        serde_json::to_string(&v).expect("values serialize"),
    )
        .into_response()
}

#[derive(Debug, Deserialize)]
struct GeoRefRequest {
    text: String,
}

async fn georef(State(state): State<AppState>, body: Body) -> Result<Response, ApiError> {
    let bytes = to_bytes(body, state.body_limit).await.map_err(|_| ApiError {
        status: StatusCode::PAYLOAD_TOO_LARGE,
        error: "payload_too_large",
        detail: format!("request body exceeds {} bytes", state.body_limit),
    })?;
    let text = std::str::from_utf8(&bytes).map_err(|e| ApiError::bad_request(format!("body is not UTF-8: {e}")))?;
    let req: GeoRefRequest =
        serde_json::from_str(text).map_err(|e| ApiError::bad_request(format!("expected {{\"text\": ...}}: {e}")))?;
    let georef = state.georef.clone();
    let trace = tokio::task::spawn_blocking(move || georef.georef(&req.text))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            error: "internal",
            detail: e.to_string(),
        })?;
    Ok(json_body(&trace))
}

/// Parameters shared by `/search` and `/timeline`.
#[derive(Debug, Default)]
struct Params {
    bbox: Option<String>,
    zoom: Option<String>,
    from: Option<String>,
    to: Option<String>,
    facets: BTreeSet<String>,
    max_results: Option<String>,
    facet_key: Option<String>,
}

fn parse_params(raw: Option<String>) -> Params {
    let mut p = Params::default();
    for (k, v) in url::form_urlencoded::parse(raw.unwrap_or_default().as_bytes()) {
        let v = v.into_owned();
        match k.as_ref() {
            "bbox" => p.bbox = Some(v),
            "zoom" => p.zoom = Some(v),
            "from" => p.from = Some(v),
            "to" => p.to = Some(v),
            "facet" => {
                p.facets.insert(v);
            }
            "max_results" => p.max_results = Some(v),
            "facet_key" => p.facet_key = Some(v),
            _ => {}
        }
    }
    p
}

fn parse_date(field: &str, v: &Option<String>) -> Result<Option<NaiveDate>, ApiError> {
    v.as_deref()
        .filter(|s| !s.is_empty())
        .map(|s| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|e| ApiError::bad_request(format!("{field}: expected YYYY-MM-DD, got {s:?} ({e})")))
        })
        .transpose()
}

fn build_query(p: &Params) -> Result<SearchQuery, ApiError> {
    let bbox: BBox = p
        .bbox
        .as_deref()
        .ok_or_else(|| ApiError::bad_request("missing bbox"))?
        .parse()
        .map_err(|e| ApiError::bad_request(format!("bbox: {e}")))?;
    let zoom = match p.zoom.as_deref() {
        None => MAX_ZOOM,
        Some(z) => z
            .parse::<u8>()
            .ok()
            .filter(|z| *z <= MAX_ZOOM)
            .ok_or_else(|| ApiError::bad_request(format!("zoom: expected integer 0..={MAX_ZOOM}, got {z:?}")))?,
    };
    let max_results = match p.max_results.as_deref() {
        None => DEFAULT_MAX_RESULTS,
        Some(m) => m
            .parse()
            .map_err(|_| ApiError::bad_request(format!("max_results: expected a non-negative integer, got {m:?}")))?,
    };
    let q = SearchQuery {
        viewport: bbox,
        zoom,
        from: parse_date("from", &p.from)?,
        to: parse_date("to", &p.to)?,
        facets: p.facets.clone(),
        max_results,
    };
    q.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(q)
}

#[derive(Debug, Serialize)]
struct SearchResponse {
    documents: Vec<DocumentHit>,
    features: Vec<GeoJsonFeature<FeatureProps>>,
    total: usize,
}

async fn search(State(state): State<AppState>, RawQuery(raw): RawQuery) -> Result<Response, ApiError> {
    let q = build_query(&parse_params(raw))?;
    let result = state
        .index
        .read()
        .query(&q)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let features = result
        .features
        .iter()
        .filter_map(|u| state.gazetteer.get(u))
        .map(|f| f.to_geojson())
        .collect();
    Ok(json_body(&SearchResponse {
        documents: result.documents,
        features,
        total: result.total,
    }))
}

async fn timeline(State(state): State<AppState>, RawQuery(raw): RawQuery) -> Result<Response, ApiError> {
    let p = parse_params(raw);
    if let Some(k) = p.facet_key.as_deref() {
        if k != "facet" {
            return Err(ApiError::bad_request(format!(
                "facet_key: only \"facet\" is indexed, got {k:?}"
            )));
        }
    }
    let q = build_query(&p)?;
    let bins = state
        .index
        .read()
        .timeline(&q)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(json_body(&bins))
}

async fn feature(State(state): State<AppState>, Path(uri): Path<String>) -> Result<Response, ApiError> {
    let f = state.gazetteer.get(&uri).ok_or_else(|| ApiError {
        status: StatusCode::NOT_FOUND,
        error: "not_found",
        detail: format!("no feature {uri:?}"),
    })?;
    Ok(json_body(&f.to_geojson()))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        error: "not_found",
        detail: "no such endpoint".into(),
    }
}

/// All API routes, with CORS enabled. With `static_dir`, unmatched paths
/// serve files from that directory.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/georef", post(georef))
        .route("/search", get(search))
        .route("/timeline", get(timeline))
        .route("/feature/{*uri}", get(feature));
    let api = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    api.layer(CorsLayer::permissive()).with_state(state)
}
