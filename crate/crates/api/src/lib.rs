//! HTTP JSON API.
//!
//! | route | body |
//! |---|---|
//! | `GET /api/conferences?q=` | `[{slug, name, editions}]` |
//! | `GET /api/conferences/{slug}/timeline` | `[{year, cdi}]` |
//! | `GET /api/editions/{slug}/{year}/report` | diversity report |
//! | `GET /api/editions/{slug}/{year}/distributions` | histogram and map data |
//! | `GET /api/editions/{slug}/{year}/context` | `{boxplot, compared, this}` |
//! | `POST /api/contributions` | `{edition_id, revision, ingest_report}` |
//!
//! Contributions need the shared token in the `X-Divmeter-Token` header.
//! Errors are `{error, message, details?}`.

mod contribute;
mod error;
pub mod views;

use std::collections::HashMap;
use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{ConnectInfo, DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Extension, Router};
use divmeter_store::{canonical_json, Store};
use serde::Deserialize;
use serde_json::Value;

pub use contribute::{contribute, Contribution, Pipeline, Submission};
pub use error::{ApiError, ErrorKind};

pub const TOKEN_HEADER: &str = "x-divmeter-token";
pub const TOKEN_ENV: &str = "DIVMETER_TOKEN";
const MAX_BODY: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ApiConfig {
    /// Shared contribution token; without one every contribution is refused.
    pub token: Option<String>,
    /// Contributions accepted per client address and minute; 0 disables the cap.
    pub contributions_per_minute: u32,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self { token: None, contributions_per_minute: 30 }
    }
}

struct RateLimiter {
    cap: u32,
    hits: Mutex<HashMap<IpAddr, (Instant, u32)>>,
}

impl RateLimiter {
    const WINDOW: Duration = Duration::from_secs(60);

    fn allow(&self, ip: IpAddr) -> bool {
        if self.cap == 0 {
            return true;
        }
        let now = Instant::now();
        let mut hits = self.hits.lock().unwrap_or_else(|e| e.into_inner());
        hits.retain(|_, (start, _)| now.duration_since(*start) < Self::WINDOW);
        let (_, n) = hits.entry(ip).or_insert((now, 0));
        *n += 1;
        *n <= self.cap
    }
}

struct AppState {
    store: Arc<Store>,
    pipeline: Option<Arc<Pipeline>>,
    token: Option<String>,
    limiter: RateLimiter,
    // one contribution at a time within this process
    writer: tokio::sync::Mutex<()>,
}

/// Routes over `store`. Without a `pipeline` the API is read-only.
pub fn router(store: Arc<Store>, pipeline: Option<Pipeline>, config: ApiConfig) -> Router {
    let state = Arc::new(AppState {
        store,
        pipeline: pipeline.map(Arc::new),
        token: config.token.filter(|t| !t.is_empty()),
        limiter: RateLimiter { cap: config.contributions_per_minute, hits: Mutex::new(HashMap::new()) },
        writer: tokio::sync::Mutex::new(()),
    });
    Router::new()
        .route("/api/conferences", get(list_conferences))
        .route("/api/conferences/{slug}/timeline", get(conference_timeline))
        .route("/api/editions/{slug}/{year}/report", get(edition_report))
        .route("/api/editions/{slug}/{year}/distributions", get(edition_distributions))
        .route("/api/editions/{slug}/{year}/context", get(edition_context))
        .route("/api/contributions", post(post_contribution))
        .fallback(|| async { ApiError::not_found("route") })
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve<F>(listener: tokio::net::TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(shutdown)
        .await
}

fn json_response(status: StatusCode, value: &Value) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], canonical_json(value)).into_response()
}

async fn blocking<F>(state: &AppState, f: F) -> Response
where
    F: FnOnce(&Store) -> Result<Value, ApiError> + Send + 'static,
{
    let store = state.store.clone();
    match tokio::task::spawn_blocking(move || f(&store)).await {
        Ok(Ok(value)) => json_response(StatusCode::OK, &value),
        Ok(Err(e)) => e.into_response(),
        Err(e) => {
            log::error!("request task failed: {e}");
            ApiError::new(ErrorKind::Internal, "internal", "request failed").into_response()
        }
    }
}

#[derive(Deserialize)]
struct Search {
    #[serde(default)]
    q: String,
}

async fn list_conferences(State(state): State<Arc<AppState>>, Query(Search { q }): Query<Search>) -> Response {
    blocking(&state, move |store| views::conferences(store, &q)).await
}

async fn conference_timeline(State(state): State<Arc<AppState>>, Path(slug): Path<String>) -> Response {
    blocking(&state, move |store| views::conference_timeline(store, &slug)).await
}

async fn edition_report(State(state): State<Arc<AppState>>, Path((slug, year)): Path<(String, String)>) -> Response {
    blocking(&state, move |store| views::report(store, &views::edition_id(&slug, &year)?)).await
}

async fn edition_distributions(
    State(state): State<Arc<AppState>>,
    Path((slug, year)): Path<(String, String)>,
) -> Response {
    blocking(&state, move |store| views::distributions(store, &views::edition_id(&slug, &year)?)).await
}

async fn edition_context(State(state): State<Arc<AppState>>, Path((slug, year)): Path<(String, String)>) -> Response {
    blocking(&state, move |store| views::context(store, &views::edition_id(&slug, &year)?)).await
}

/// `POST /api/contributions` body. File contents are passed as strings.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContributionBody {
    conference: String,
    year: i32,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    annotations: Option<String>,
    #[serde(default)]
    affiliations: Option<String>,
    #[serde(default)]
    dblp: Option<String>,
}

fn token_matches(expected: &str, given: &[u8]) -> bool {
    let expected = expected.as_bytes();
    expected.len() == given.len() && expected.iter().zip(given).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
}

async fn post_contribution(
    State(state): State<Arc<AppState>>,
    peer: Option<Extension<ConnectInfo<SocketAddr>>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let ip = peer.map_or(IpAddr::V4(Ipv4Addr::UNSPECIFIED), |Extension(ConnectInfo(addr))| addr.ip());
    if !state.limiter.allow(ip) {
        return ApiError::new(ErrorKind::RateLimited, "rate_limited", "too many contributions; retry later")
            .into_response();
    }
    let given = headers.get(TOKEN_HEADER).map(|v| v.as_bytes());
    match (&state.token, given) {
        (Some(expected), Some(given)) if token_matches(expected, given) => {}
        _ => {
            return ApiError::new(ErrorKind::BadToken, "bad_token", "missing or invalid submission token")
                .into_response()
        }
    }
    let Some(pipeline) = state.pipeline.clone() else {
        return ApiError::new(
            ErrorKind::Unprocessable,
            "contributions_disabled",
            "this server does not accept contributions",
        )
        .into_response();
    };
    let body: ContributionBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => {
            return ApiError::new(ErrorKind::BadRequest, "bad_request", format!("invalid request body: {e}"))
                .into_response()
        }
    };

    let _writer = state.writer.lock().await;
    let store = state.store.clone();
    let result = tokio::task::spawn_blocking(move || {
        contribute(
            &store,
            &pipeline,
            Submission {
                conference: &body.conference,
                year: body.year,
                conference_name: body.name.as_deref(),
                dblp: body.dblp.as_deref().map(str::as_bytes),
                annotations: body.annotations.as_deref().map(str::as_bytes),
                affiliations: body.affiliations.as_deref().map(str::as_bytes),
            },
        )
    })
    .await;
    match result {
        Ok(Ok(c)) => {
            log::info!("contribution stored as {} revision {}", c.edition_id, c.revision);
            json_response(StatusCode::OK, &serde_json::to_value(&c).expect("contributions serialize"))
        }
        Ok(Err(e)) => e.into_response(),
        Err(e) => {
            log::error!("contribution task failed: {e}");
            ApiError::new(ErrorKind::Internal, "internal", "contribution failed").into_response()
        }
    }
}
