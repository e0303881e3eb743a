use std::collections::HashMap;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use forge_core::correspondence::{
    cooccurrence, correspondence_analysis, mca, variable_axis_correlation, CooccurrenceTable,
};
use forge_core::dataset::{bin_to_categories, read_dimension_catalog, BinCount, BinPolicy};
use forge_core::doc::{estimate_w, DocParams};
use forge_core::persona::{
    build_dendrogram, cut_dendrogram, describe, markdown_report, merge_clusters, radar_data,
    Linkage, ProtoPersona, RadarSource, SimilarityMatrix, DEFAULT_CONFLICT_SD,
};
use forge_core::{ingest_csv, VasDataSet};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use crate::error::{ApiError, ApiResult};
use crate::openapi::spec;
use crate::session::{CutState, RunRecord, RunRequest, RunStatus, Session};
use crate::state::{pretty, AppState};

/// JSON body with the trailing newline the command line also writes.
fn json_ok<T: Serialize>(status: StatusCode, v: &T) -> ApiResult<Response> {
    let text = pretty(v)? + "\n";
    Ok((status, [(header::CONTENT_TYPE, "application/json")], text).into_response())
}

fn text_ok(content_type: &'static str, text: String) -> Response {
    ([(header::CONTENT_TYPE, content_type)], text).into_response()
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    if body.is_empty() {
        return Err(ApiError::bad_request("request body is empty"));
    }
    Ok(serde_json::from_slice(body)?)
}

fn split_list(s: Option<&String>) -> Vec<String> {
    s.map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect()
    })
    .unwrap_or_default()
}

fn wants_csv(q: &HashMap<String, String>) -> bool {
    q.get("format").is_some_and(|f| f.eq_ignore_ascii_case("csv"))
}

fn not_running(s: &Session) -> ApiResult<()> {
    match s.active_run() {
        Some(r) => Err(ApiError::conflict(format!("run {} is still in progress", r.id)).with("run", json!(r.id))),
        None => Ok(()),
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/api/spec", get(api_spec))
        .route("/health", get(|| async { "ok" }))
        .route("/datasets", post(upload_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/estimate-w", get(get_estimate_w))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/plan", get(get_plan))
        .route("/sessions/{id}/runs", post(start_run).get(list_runs))
        .route("/sessions/{id}/runs/{run}", get(get_run))
        .route("/sessions/{id}/clusters", get(get_clusters))
        .route("/sessions/{id}/similarity", post(post_similarity).get(get_similarity))
        .route("/sessions/{id}/dendrogram", get(get_dendrogram))
        .route("/sessions/{id}/cut", post(post_cut))
        .route("/sessions/{id}/protos", post(post_proto).get(list_protos))
        .route("/sessions/{id}/radar", get(get_radar))
        .route("/sessions/{id}/cooccurrence", get(get_cooccurrence))
        .route("/sessions/{id}/ca", get(get_ca))
        .route("/sessions/{id}/mca", get(get_mca))
        .route("/sessions/{id}/report", get(get_report))
        .route("/sessions/{id}/audit", get(get_audit))
        .layer(cors)
        .with_state(state)
}

async fn api_spec() -> ApiResult<Response> {
    json_ok(StatusCode::OK, &spec())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadJson {
    csv: String,
    /// Optional label catalog: CSV with id,label,left,right.
    #[serde(default)]
    dims: Option<String>,
}

#[derive(Serialize)]
struct DatasetCreated<'a> {
    id: String,
    subjects: usize,
    dimensions: usize,
    missing: usize,
    dataset: &'a VasDataSet,
}

/// Raw CSV body, or JSON `{csv, dims}` when the labels come along.
async fn upload_dataset(State(st): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let data = if is_json {
        let up: UploadJson = parse_body(&body)?;
        let data = ingest_csv(up.csv.as_bytes())?;
        match up.dims {
            Some(d) => data.with_dimension_metadata(&read_dimension_catalog(d.as_bytes())?),
            None => data,
        }
    } else {
        ingest_csv(body.as_ref())?
    };
    let id = st.add_dataset(data.clone())?;
    json_ok(
        StatusCode::CREATED,
        &DatasetCreated {
            id,
            subjects: data.n_subjects(),
            dimensions: data.n_dims(),
            missing: data.missing_count(),
            dataset: &data,
        },
    )
}

async fn get_dataset(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    json_ok(StatusCode::OK, st.dataset(&id)?.as_ref())
}

async fn get_estimate_w(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    json_ok(StatusCode::OK, &estimate_w(st.dataset(&id)?.as_ref())?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    dataset: String,
}

async fn create_session(State(st): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewSession = parse_body(&body)?;
    json_ok(StatusCode::CREATED, st.create_session(&req.dataset)?.as_ref())
}

async fn list_sessions(State(st): State<AppState>) -> ApiResult<Response> {
    json_ok(StatusCode::OK, &st.session_ids())
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    json_ok(StatusCode::OK, st.session(&id)?.as_ref())
}

fn query_f64(q: &HashMap<String, String>, key: &str) -> ApiResult<f64> {
    let raw = q
        .get(key)
        .ok_or_else(|| ApiError::bad_request(format!("missing query parameter {key}")).with("field", json!(key)))?;
    raw.parse()
        .map_err(|_| ApiError::bad_request(format!("{key} must be a number, got {raw:?}")).with("field", json!(key)))
}

#[derive(Serialize)]
struct PlanView {
    r: usize,
    m: u64,
    outer: u64,
    min_size: usize,
    total_trials: u64,
    warnings: Vec<String>,
}

/// Derived r, m and loop sizes for `alpha` and `beta` on the session's data.
async fn get_plan(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let data = st.dataset(&s.dataset)?;
    let w = match q.get("w") {
        Some(_) => query_f64(&q, "w")?,
        None => 1.0,
    };
    let params = DocParams::new(w, query_f64(&q, "alpha")?, query_f64(&q, "beta")?, 0);
    params.check_ranges()?;
    let plan = params
        .plan(data.n_dims(), data.n_subjects(), st.options().trial_cap)
        .map_err(ApiError::from_plan)?;
    json_ok(
        StatusCode::OK,
        &PlanView {
            r: plan.r,
            m: plan.inner,
            outer: plan.outer,
            min_size: plan.min_size,
            total_trials: plan.total_trials(),
            warnings: plan.warnings,
        },
    )
}

async fn start_run(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: RunRequest = parse_body(&body)?;
    let s = st.session(&id)?;
    let data = st.dataset(&s.dataset)?;
    let params = DocParams::new(req.w, req.alpha, req.beta, req.seed);
    params.check_ranges()?;
    params
        .plan(data.n_dims(), data.n_subjects(), st.options().trial_cap)
        .map_err(ApiError::from_plan)?;
    let run_id = uuid::Uuid::new_v4().simple().to_string();
    let (_, s) = st
        .mutate(&id, |s| {
            not_running(s)?;
            s.runs.push(RunRecord {
                id: run_id.clone(),
                params: req.clone(),
                status: RunStatus::Running,
                result: None,
                error: None,
            });
            s.log("run-started", json!({ "run": run_id, "params": req }));
            Ok(())
        })
        .await?;
    st.spawn_run(id, run_id.clone(), data, params);
    json_ok(StatusCode::ACCEPTED, s.run(&run_id).expect("just added"))
}

async fn list_runs(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    json_ok(StatusCode::OK, &st.session(&id)?.runs)
}

async fn get_run(State(st): State<AppState>, Path((id, run)): Path<(String, String)>) -> ApiResult<Response> {
    let s = st.session(&id)?;
    json_ok(StatusCode::OK, s.run(&run).ok_or_else(|| ApiError::not_found("run", &run))?)
}

/// Completed runs, in the layout `forge cluster` prints.
async fn get_clusters(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = st.session(&id)?;
    not_running(&s)?;
    json_ok(StatusCode::OK, &s.current_runs())
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimilarityRequest {
    #[serde(default)]
    linkage: Linkage,
}

#[derive(Serialize)]
struct SimilarityView<'a> {
    linkage: Linkage,
    similarity: &'a SimilarityMatrix,
    dendrogram: &'a forge_core::persona::Dendrogram,
}

async fn post_similarity(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: SimilarityRequest = if body.is_empty() { SimilarityRequest::default() } else { parse_body(&body)? };
    let (_, s) = st
        .mutate(&id, |s| {
            not_running(s)?;
            let clusters = s.clusters();
            if clusters.len() < 2 {
                return Err(ApiError::conflict(format!(
                    "need at least two clusters to build a dendrogram, the session has {}",
                    clusters.len()
                )));
            }
            let sims = SimilarityMatrix::compute(&clusters);
            let dend = build_dendrogram(&sims, req.linkage)?;
            s.linkage = Some(req.linkage);
            s.similarity = Some(sims);
            s.dendrogram = Some(dend);
            s.cut = None;
            s.log("similarity", json!({ "linkage": req.linkage, "clusters": clusters.len() }));
            Ok(())
        })
        .await?;
    json_ok(
        StatusCode::OK,
        &SimilarityView {
            linkage: s.linkage.expect("set above"),
            similarity: s.similarity.as_ref().expect("set above"),
            dendrogram: s.dendrogram.as_ref().expect("set above"),
        },
    )
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> ApiResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| ApiError::conflict(format!("no {what} yet; POST /sessions/{{id}}/similarity first")))
}

async fn get_similarity(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let sims = need(&s.similarity, "similarity matrix")?;
    if wants_csv(&q) {
        return Ok(text_ok("text/csv", sims.to_csv_string()?));
    }
    json_ok(StatusCode::OK, sims)
}

async fn get_dendrogram(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = st.session(&id)?;
    json_ok(StatusCode::OK, need(&s.dendrogram, "dendrogram")?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CutRequest {
    height: f64,
}

async fn post_cut(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: CutRequest = parse_body(&body)?;
    let (cut, _) = st
        .mutate(&id, |s| {
            let dend = need(&s.dendrogram, "dendrogram")?;
            let sets = cut_dendrogram(dend, req.height)?;
            let cut = CutState { height: req.height, sets };
            s.cut = Some(cut.clone());
            s.log("cut", json!({ "height": req.height, "sets": cut.sets.len() }));
            Ok(cut)
        })
        .await?;
    json_ok(StatusCode::OK, &cut)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtoRequest {
    set: Vec<String>,
    #[serde(default)]
    vetoed_dims: Vec<String>,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    conflict_sd: Option<f64>,
}

/// Merges a set of the session's clusters, applies vetoes and names it.
/// A proto-persona with the same name is replaced.
async fn post_proto(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: ProtoRequest = parse_body(&body)?;
    let snapshot = st.session(&id)?;
    let data = st.dataset(&snapshot.dataset)?;
    let (proto, _) = st
        .mutate(&id, |s| {
            not_running(s)?;
            let clusters = s.clusters();
            let set = req
                .set
                .iter()
                .map(|c| {
                    clusters
                        .iter()
                        .find(|k| &k.id == c)
                        .cloned()
                        .ok_or_else(|| ApiError::not_found("cluster", c))
                })
                .collect::<ApiResult<Vec<_>>>()?;
            let mut p = merge_clusters(&set, req.conflict_sd.unwrap_or(DEFAULT_CONFLICT_SD))?;
            p.veto(&req.vetoed_dims)?;
            if let Some(name) = &req.name {
                if name.trim().is_empty() {
                    return Err(ApiError::bad_request("name must not be empty").with("field", json!("name")));
                }
                p.name = name.clone();
            }
            p.description = describe(&p, data.dimensions())?;
            s.protos.retain(|q| q.name != p.name);
            s.protos.push(p.clone());
            s.log(
                "proto",
                json!({ "name": p.name, "set": req.set, "vetoed_dims": req.vetoed_dims }),
            );
            Ok(p)
        })
        .await?;
    json_ok(StatusCode::CREATED, &proto)
}

async fn list_protos(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    json_ok(StatusCode::OK, &st.session(&id)?.protos)
}

/// Radar data for one or two series. Ids name clusters or proto-personas.
async fn get_radar(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let data = st.dataset(&s.dataset)?;
    let clusters = s.clusters();
    let lookup = |key: &str| -> ApiResult<Option<&dyn RadarSource>> {
        let Some(want) = q.get(key) else { return Ok(None) };
        if let Some(c) = clusters.iter().find(|c| &c.id == want) {
            return Ok(Some(c as &dyn RadarSource));
        }
        if let Some(p) = s.protos.iter().find(|p| &p.name == want) {
            return Ok(Some(p as &dyn RadarSource));
        }
        Err(ApiError::not_found("cluster or proto-persona", want))
    };
    let a = lookup("a")?.ok_or_else(|| ApiError::bad_request("query parameter a is required").with("field", json!("a")))?;
    let mut sources = vec![a];
    if let Some(b) = lookup("b")? {
        sources.push(b);
    }
    json_ok(StatusCode::OK, &radar_data(&sources, Some(data.dimensions())))
}

fn session_cooccurrence(st: &AppState, s: &Session, q: &HashMap<String, String>) -> ApiResult<CooccurrenceTable> {
    not_running(s)?;
    let data = st.dataset(&s.dataset)?;
    let subjects: Vec<String> = data.subjects().iter().map(|x| x.id.clone()).collect();
    Ok(cooccurrence(&s.clusters(), &split_list(q.get("exclude")), Some(&subjects))?)
}

async fn get_cooccurrence(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let t = session_cooccurrence(&st, &s, &q)?;
    if wants_csv(&q) {
        return Ok(text_ok("text/csv", t.to_csv_string()?));
    }
    json_ok(StatusCode::OK, &t)
}

async fn get_ca(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let t = session_cooccurrence(&st, &s, &q)?;
    json_ok(StatusCode::OK, &correspondence_analysis(&t.subjects, &t.subjects, &t.as_f64())?)
}

/// MCA of the binned session data plus eta-squared per variable.
/// `bins` is 2, 3 or auto; `overrides` is `dim=count,...`.
async fn get_mca(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let data = st.dataset(&s.dataset)?;
    let bins: BinCount = q.get("bins").map(|b| b.parse()).transpose()?.unwrap_or_default();
    let mut policy = BinPolicy::uniform(bins);
    for item in split_list(q.get("overrides")) {
        let (dim, count) = item.split_once('=').ok_or_else(|| {
            ApiError::bad_request(format!("override {item:?} is not dim=count")).with("field", json!("overrides"))
        })?;
        policy.overrides.insert(dim.trim().to_string(), count.parse()?);
    }
    let axes = match q.get("axes") {
        Some(_) => query_f64(&q, "axes")? as usize,
        None => 2,
    };
    let table = bin_to_categories(&data, &policy)?;
    let result = mca(&table)?;
    let eta = variable_axis_correlation(&table, &result.map, axes)?;
    json_ok(StatusCode::OK, &json!({ "mca": result, "eta_squared": eta }))
}

async fn get_report(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let data = st.dataset(&s.dataset)?;
    let protos: Vec<ProtoPersona> = s.protos.clone();
    Ok(text_ok("text/markdown; charset=utf-8", markdown_report(&protos, data.dimensions())?))
}

async fn get_audit(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    json_ok(StatusCode::OK, &st.session(&id)?.audit)
}

