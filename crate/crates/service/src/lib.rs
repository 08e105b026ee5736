//! HTTP interface to a [`Catalog`]: schema management, grid definition,
//! CSV ingestion, evaluation and editor previews.
//!
//! All bodies are JSON except `POST /ingest`, which takes CSV. Every error
//! response is a JSON object with `code` and `message`.
//!
//! | method | path | |
//! |---|---|---|
//! | GET, POST | `/classes` | list / define a class |
//! | GET | `/classes/{class}` | one class with its attributes |
//! | POST | `/classes/{class}/attributes` | define an attribute |
//! | GET, PUT | `/classes/{class}/attributes/{attr}/grid` | read / replace a grid |
//! | GET, POST | `/instruments` | list (`?class=`) / register |
//! | GET | `/instruments/{id}` | one instrument |
//! | GET | `/instruments/{id}/attributes/{attr}` | evaluated value |
//! | GET | `/instruments/{id}/attributes/{attr}/preview` | every grid cell (`?unfold=A1`) |
//! | POST | `/instruments/{id}/attributes/{attr}/observations` | append series points |
//! | PUT | `/instruments/{id}/attributes/{attr}/scalar` | set a stored scalar |
//! | POST | `/ingest` | load CSV |

mod error;

use std::future::Future;
use std::io;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, PathRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use fgrid_core::catalog::IngestReport;
use fgrid_core::wire::build_preview;
use fgrid_core::{
    AttributeDef, Catalog, CellAddress, FormulaGrid, Instrument, InstrumentClass, ObservationBatch, PreviewPayload,
    Timestamp, ValueDoc,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

pub use error::{ApiError, ErrorBody};

/// Request bodies up to this size are accepted (CSV uploads can be large).
pub const BODY_LIMIT: usize = 256 * 1024 * 1024;

type AppState = Arc<Catalog>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(catalog: Arc<Catalog>) -> Router {
    Router::new()
        .route("/classes", get(list_classes).post(create_class))
        .route("/classes/{class}", get(get_class))
        .route("/classes/{class}/attributes", post(create_attribute))
        .route("/classes/{class}/attributes/{attr}/grid", get(get_grid).put(put_grid))
        .route("/instruments", get(list_instruments).post(create_instrument))
        .route("/instruments/{id}", get(get_instrument))
        .route("/instruments/{id}/attributes/{attr}", get(get_value))
        .route("/instruments/{id}/attributes/{attr}/preview", get(get_preview))
        .route("/instruments/{id}/attributes/{attr}/observations", post(post_observations))
        .route("/instruments/{id}/attributes/{attr}/scalar", put(put_scalar))
        .route("/ingest", post(ingest))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method-not-allowed", "method not allowed")
        })
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(catalog)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    catalog: Arc<Catalog>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(catalog)).with_graceful_shutdown(shutdown).await
}

/// Runs catalog work off the async executor; writes touch the disk and
/// evaluations can take milliseconds.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())))
}

fn body(b: Result<Bytes, BytesRejection>) -> ApiResult<Bytes> {
    b.map_err(|r| ApiError::new(r.status(), "bad-body", r.body_text()))
}

fn json<T: DeserializeOwned>(b: Result<Bytes, BytesRejection>) -> ApiResult<T> {
    serde_json::from_slice(&body(b)?).map_err(ApiError::from_json)
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> ApiResult<T> {
    p.map(|Path(t)| t).map_err(|r| ApiError::new(r.status(), "bad-path", r.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(t)| t).map_err(|r| ApiError::unprocessable("bad-query", r.body_text()))
}

#[derive(Deserialize)]
struct NewClass {
    name: String,
}

async fn list_classes(State(cat): State<AppState>) -> Json<Vec<InstrumentClass>> {
    Json(cat.snapshot().classes())
}

async fn create_class(
    State(cat): State<AppState>,
    b: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<InstrumentClass>)> {
    let NewClass { name } = json(b)?;
    blocking(move || {
        cat.define_class(&name)?;
        Ok((StatusCode::CREATED, Json(cat.snapshot().class(&name)?.clone())))
    })
    .await
}

async fn get_class(State(cat): State<AppState>, p: Result<Path<String>, PathRejection>) -> ApiResult<Json<InstrumentClass>> {
    let name = path(p)?;
    Ok(Json(cat.snapshot().class(&name)?.clone()))
}

async fn create_attribute(
    State(cat): State<AppState>,
    p: Result<Path<String>, PathRejection>,
    b: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<AttributeDef>)> {
    let class = path(p)?;
    let def: AttributeDef = json(b)?;
    blocking(move || {
        cat.define_attribute(&class, def.clone())?;
        Ok((StatusCode::CREATED, Json(def)))
    })
    .await
}

async fn get_grid(
    State(cat): State<AppState>,
    p: Result<Path<(String, String)>, PathRejection>,
) -> ApiResult<Json<FormulaGrid>> {
    let (class, attr) = path(p)?;
    Ok(Json(cat.snapshot().grid(&class, &attr)?.clone()))
}

async fn put_grid(
    State(cat): State<AppState>,
    p: Result<Path<(String, String)>, PathRejection>,
    b: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<FormulaGrid>> {
    let (class, attr) = path(p)?;
    let grid: FormulaGrid = json(b)?;
    blocking(move || {
        cat.replace_grid(&class, &attr, grid)?;
        Ok(Json(cat.snapshot().grid(&class, &attr)?.clone()))
    })
    .await
}

#[derive(Deserialize)]
struct InstrumentFilter {
    class: Option<String>,
}

async fn list_instruments(
    State(cat): State<AppState>,
    q: Result<Query<InstrumentFilter>, QueryRejection>,
) -> ApiResult<Json<Vec<Instrument>>> {
    let filter = query(q)?;
    Ok(Json(cat.snapshot().list_instruments(filter.class.as_deref())?))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NewInstrument {
    id: String,
    class: String,
    display_name: Option<String>,
}

async fn create_instrument(
    State(cat): State<AppState>,
    b: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<Instrument>)> {
    let req: NewInstrument = json(b)?;
    let inst = Instrument::new(&req.id, &req.class, req.display_name.as_deref().unwrap_or(&req.id));
    blocking(move || {
        cat.register_instrument(inst.clone())?;
        Ok((StatusCode::CREATED, Json(inst)))
    })
    .await
}

async fn get_instrument(State(cat): State<AppState>, p: Result<Path<String>, PathRejection>) -> ApiResult<Json<Instrument>> {
    let id = path(p)?;
    Ok(Json(cat.snapshot().instrument(&id)?.clone()))
}

async fn get_value(
    State(cat): State<AppState>,
    p: Result<Path<(String, String)>, PathRejection>,
) -> ApiResult<Json<ValueDoc>> {
    let (id, attr) = path(p)?;
    blocking(move || {
        let v = cat.snapshot().evaluate_attribute(&id, &attr)?;
        Ok(Json(ValueDoc::from(&v)))
    })
    .await
}

#[derive(Deserialize)]
struct PreviewQuery {
    unfold: Option<String>,
}

async fn get_preview(
    State(cat): State<AppState>,
    p: Result<Path<(String, String)>, PathRejection>,
    q: Result<Query<PreviewQuery>, QueryRejection>,
) -> ApiResult<Json<PreviewPayload>> {
    let (id, attr) = path(p)?;
    let unfold = match query(q)?.unfold {
        Some(a) => Some(
            a.parse::<CellAddress>()
                .map_err(|e| ApiError::unprocessable("bad-query", format!("unfold: {e}")))?,
        ),
        None => None,
    };
    blocking(move || {
        let snap = cat.snapshot();
        let name = snap.attribute(&id, &attr)?.name.clone();
        let (compiled, result) = snap.evaluate_grid(&id, &attr)?;
        let preview = build_preview(&id, &name, compiled.grid(), &result, unfold)
            .map_err(|e| ApiError::unprocessable("not-a-series", e.to_string()))?;
        Ok(Json(preview))
    })
    .await
}

#[derive(Deserialize)]
struct NewPoints {
    points: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct Written {
    written: usize,
}

async fn post_observations(
    State(cat): State<AppState>,
    p: Result<Path<(String, String)>, PathRejection>,
    b: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<Written>> {
    let (id, attr) = path(p)?;
    let req: NewPoints = json(b)?;
    let points = req
        .points
        .iter()
        .map(|(t, v)| Timestamp::parse_iso(t).map(|t| (t, *v)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ApiError::unprocessable("validation", e.to_string()))?;
    blocking(move || {
        let written = cat.write_observations(ObservationBatch::new(&id, &attr, points))?;
        Ok(Json(Written { written }))
    })
    .await
}

#[derive(Deserialize)]
struct NewScalar {
    value: f64,
}

async fn put_scalar(
    State(cat): State<AppState>,
    p: Result<Path<(String, String)>, PathRejection>,
    b: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<ValueDoc>> {
    let (id, attr) = path(p)?;
    let NewScalar { value } = json(b)?;
    blocking(move || {
        cat.write_scalar(&id, &attr, value)?;
        Ok(Json(ValueDoc::from(&cat.snapshot().evaluate_attribute(&id, &attr)?)))
    })
    .await
}

async fn ingest(State(cat): State<AppState>, b: Result<Bytes, BytesRejection>) -> ApiResult<Json<IngestReport>> {
    let bytes = body(b)?;
    blocking(move || Ok(Json(cat.ingest_csv(&bytes[..])?))).await
}
