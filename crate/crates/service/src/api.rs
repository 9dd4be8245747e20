//! HTTP/JSON routes.
//!
//! Every route needs `Authorization: Bearer <token>`. Admin routes take the
//! instructor token; team routes take that team's token (the instructor may
//! read team reports but not submit for a team). Chain and metrics routes
//! accept any known token.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use classchain_core::chain::{self, ChainError};
use classchain_core::fixed::Fixed;
use classchain_core::metrics::{decimal, exact, CostRow};
use classchain_core::sim::{
    ActivityReport, Platform, RoundDecision, SimError, SimOptions, Simulation, SimulationConfig, SimulationSlot,
};
use classchain_core::types::encode_hex;
use classchain_core::vm::{decode_metric_list, REPORT_HANDLER_ID};
use classchain_core::{Address, Hash256};
use serde::Deserialize;
use serde_json::{json, Value};
use tracing::{info, warn};

use crate::config::Principal;

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": code, "message": message.into() }),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", message)
    }

    fn forbidden() -> Self {
        Self::new(StatusCode::FORBIDDEN, "Forbidden", "token may not access this resource")
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        let status = match &e {
            SimError::AlreadyInitialized
            | SimError::NotInitialized
            | SimError::WrongRound { .. }
            | SimError::DuplicateDecision { .. }
            | SimError::MissingDecisions(_)
            | SimError::SimulationComplete
            | SimError::Rollup(_) => StatusCode::CONFLICT,
            SimError::BudgetMismatch { .. } | SimError::UnknownDevice(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SimError::UnknownTeam(_) => StatusCode::NOT_FOUND,
            SimError::InvalidConfig(_) | SimError::UnknownProfile(_) => StatusCode::BAD_REQUEST,
            SimError::Deploy(_) | SimError::Resume(_) | SimError::Chain(_) | SimError::Metrics(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let SimError::MissingDecisions(teams) = &e {
            err.body["missing_teams"] = json!(teams);
        }
        err
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Inner {
    slot: RwLock<SimulationSlot>,
    principals: HashMap<String, Principal>,
    options: SimOptions,
    chain_file: Option<PathBuf>,
}

/// Shared service state. One simulation per instance.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(options: SimOptions, principals: HashMap<String, Principal>, chain_file: Option<PathBuf>) -> Self {
        Self {
            inner: Arc::new(Inner {
                slot: RwLock::new(SimulationSlot::default()),
                principals,
                options,
                chain_file,
            }),
        }
    }

    /// Installs a simulation rebuilt from a chain file.
    pub fn restore(&self, sim: Simulation) -> Result<(), SimError> {
        self.write().restore(sim).map(|_| ())
    }

    fn read(&self) -> RwLockReadGuard<'_, SimulationSlot> {
        self.inner.slot.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, SimulationSlot> {
        self.inner.slot.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Writes the ledger to the chain file, if one is configured and a
    /// simulation exists.
    pub fn persist(&self) -> std::io::Result<()> {
        let Some(path) = &self.inner.chain_file else {
            return Ok(());
        };
        let slot = self.read();
        let Ok(sim) = slot.get() else {
            return Ok(());
        };
        chain::persist(sim.chain().ledger(), path).map_err(std::io::Error::other)
    }

    fn persist_logged(&self) {
        if let Err(e) = self.persist() {
            warn!(error = %e, "could not persist ledger");
        }
    }
}

/// Authenticated caller.
pub struct Auth(pub Principal);

impl FromRequestParts<AppState> for Auth {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let unauthorized = || ApiError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or unknown token");
        let value = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(unauthorized)?;
        let token = value.strip_prefix("Bearer ").ok_or_else(unauthorized)?;
        state
            .inner
            .principals
            .get(token.trim())
            .cloned()
            .map(Auth)
            .ok_or_else(unauthorized)
    }
}

fn require_instructor(auth: &Auth) -> ApiResult<()> {
    match auth.0 {
        Principal::Instructor => Ok(()),
        Principal::Team(_) => Err(ApiError::forbidden()),
    }
}

fn require_team(auth: &Auth, team: &str) -> ApiResult<()> {
    match &auth.0 {
        Principal::Team(t) if t == team => Ok(()),
        _ => Err(ApiError::forbidden()),
    }
}

fn require_team_or_instructor(auth: &Auth, team: &str) -> ApiResult<()> {
    match &auth.0 {
        Principal::Instructor => Ok(()),
        Principal::Team(t) if t == team => Ok(()),
        _ => Err(ApiError::forbidden()),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/admin/simulation", post(init_simulation))
        .route("/api/admin/rounds/close", post(close_round))
        .route("/api/admin/reports", get(admin_reports))
        .route("/api/teams/{id}/decisions", post(submit_decision))
        .route("/api/teams/{id}/reports", get(team_reports))
        .route("/api/teams/{id}/reports/{round}", get(team_report))
        .route("/api/chain/head", get(head_block))
        .route("/api/chain/blocks/{height}", get(block))
        .route("/api/chain/receipts/{tx_id}", get(receipt))
        .route("/api/chain/contracts/{address}/storage", get(storage))
        .route("/api/metrics/finality", get(finality))
        .route("/api/metrics/costs", get(costs))
        .route("/api/simulation/state", get(simulation_state))
        .route("/api/config", get(public_config))
        .route("/api/session", get(session))
        .with_state(state)
}

/// Body keys override the service's simulation config; `{}` or an empty
/// body keeps it as is.
async fn init_simulation(State(state): State<AppState>, auth: Auth, body: Bytes) -> ApiResult<Response> {
    require_instructor(&auth)?;
    let mut merged =
        serde_json::to_value(&state.inner.options.config).map_err(|e| ApiError::internal(e.to_string()))?;
    if !body.is_empty() {
        let overrides: Value = parse_json(&body)?;
        let Value::Object(fields) = overrides else {
            return Err(ApiError::bad_request("body must be a JSON object"));
        };
        for (k, v) in fields {
            merged[k] = v;
        }
    }
    let config: SimulationConfig =
        serde_json::from_value(merged).map_err(|e| ApiError::bad_request(format!("malformed config: {e}")))?;

    let worker = state.clone();
    let info = blocking(move || -> Result<Value, SimError> {
        let mut slot = worker.write();
        let options = SimOptions {
            config,
            ..worker.inner.options.clone()
        };
        let sim = slot.init(options)?;
        let genesis = &sim.chain().blocks()[0];
        Ok(json!({
            "genesis_hash": genesis.block_hash,
            "height": sim.chain().height(),
            "contract": sim.contract(),
            "handler_id": REPORT_HANDLER_ID,
            "current_round": sim.current_round(),
            "config": sim.config(),
        }))
    })
    .await??;
    state.persist_logged();
    info!("simulation initialized");
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn close_round(State(state): State<AppState>, auth: Auth) -> ApiResult<Json<Value>> {
    require_instructor(&auth)?;
    let worker = state.clone();
    let summary = blocking(move || -> Result<Value, SimError> {
        let mut slot = worker.write();
        let summary = slot.get_mut()?.close_round()?;
        Ok(serde_json::to_value(summary).expect("summary serializes"))
    })
    .await??;
    state.persist_logged();
    Ok(Json(summary))
}

async fn admin_reports(State(state): State<AppState>, auth: Auth) -> ApiResult<Json<Value>> {
    require_instructor(&auth)?;
    let slot = state.read();
    let sim = slot.get()?;
    let records: Vec<_> = sim.report_records().collect();
    Ok(Json(json!({ "reports": records })))
}

#[derive(Deserialize)]
struct DecisionBody {
    #[serde(default)]
    team: Option<String>,
    round: u64,
    chosen_device: String,
    budgets: std::collections::BTreeMap<Platform, Fixed>,
    #[serde(default)]
    keywords: std::collections::BTreeSet<String>,
}

async fn submit_decision(
    State(state): State<AppState>,
    auth: Auth,
    Path(team): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    require_team(&auth, &team)?;
    let body: DecisionBody = parse_json(&body)?;
    if body.team.as_deref().is_some_and(|t| t != team) {
        return Err(ApiError::bad_request("team in body does not match the path"));
    }
    let decision = RoundDecision {
        team: team.clone(),
        round: body.round,
        chosen_device: body.chosen_device,
        budgets: body.budgets,
        keywords: body.keywords,
    };
    let round = decision.round;
    state.write().get_mut()?.submit_decision(decision)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "accepted": true, "team": team, "round": round })),
    )
        .into_response())
}

fn report_json(report: &ActivityReport, raw: &[u8]) -> Value {
    json!({
        "team": report.team,
        "round": report.round,
        "likes": report.likes,
        "post_engagement": report.post_engagement,
        "page_views": report.page_views,
        "raw": encode_hex(raw),
    })
}

fn stored_report(sim: &Simulation, team: &str, round: u64) -> Option<Value> {
    let raw = sim.report_bytes(team, round)?;
    let list = decode_metric_list(&raw).ok()?;
    let report = ActivityReport::from_metric_list(team, round, &list)?;
    Some(report_json(&report, &raw))
}

async fn team_report(
    State(state): State<AppState>,
    auth: Auth,
    Path((team, round)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    require_team_or_instructor(&auth, &team)?;
    let round: u64 = round
        .parse()
        .map_err(|_| ApiError::bad_request("round must be an integer"))?;
    let slot = state.read();
    let sim = slot.get()?;
    stored_report(sim, &team, round)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no committed report for {team} round {round}")))
}

async fn team_reports(State(state): State<AppState>, auth: Auth, Path(team): Path<String>) -> ApiResult<Json<Value>> {
    require_team_or_instructor(&auth, &team)?;
    let slot = state.read();
    let sim = slot.get()?;
    let reports: Vec<Value> = (1..=sim.config().last_round())
        .map_while(|round| stored_report(sim, &team, round))
        .collect();
    Ok(Json(json!({ "team": team, "reports": reports })))
}

async fn head_block(State(state): State<AppState>, _auth: Auth) -> ApiResult<Json<Value>> {
    let slot = state.read();
    let sim = slot.get()?;
    Ok(Json(
        serde_json::to_value(sim.chain().head()).expect("block serializes"),
    ))
}

async fn block(State(state): State<AppState>, _auth: Auth, Path(height): Path<String>) -> ApiResult<Json<Value>> {
    let height: u64 = height
        .parse()
        .map_err(|_| ApiError::bad_request("height must be an integer"))?;
    let slot = state.read();
    let sim = slot.get()?;
    let block = sim
        .chain()
        .block(height)
        .ok_or_else(|| ApiError::not_found(format!("no block at height {height}")))?;
    Ok(Json(serde_json::to_value(block).expect("block serializes")))
}

async fn receipt(State(state): State<AppState>, _auth: Auth, Path(tx_id): Path<String>) -> ApiResult<Json<Value>> {
    let id: Hash256 = tx_id
        .parse()
        .map_err(|_| ApiError::bad_request("tx_id must be 0x-prefixed lowercase hex"))?;
    let slot = state.read();
    let sim = slot.get()?;
    let record = sim
        .chain()
        .receipt(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown transaction {id}")))?;
    let mut body = serde_json::to_value(&record.receipt).expect("receipt serializes");
    body["height"] = json!(record.height);
    body["index"] = json!(record.index);
    body["transaction"] = json!(sim.chain().transaction(&id));
    Ok(Json(body))
}

/// Raw contract storage. Instructor only, since it holds every team's
/// reports.
async fn storage(State(state): State<AppState>, auth: Auth, Path(address): Path<String>) -> ApiResult<Json<Value>> {
    require_instructor(&auth)?;
    let address: Address = address
        .parse()
        .map_err(|_| ApiError::bad_request("malformed address"))?;
    let slot = state.read();
    let sim = slot.get()?;
    let contract = sim
        .chain()
        .state()
        .contract(&address)
        .ok_or_else(|| ApiError::not_found(format!("no contract at {address}")))?;
    let entries: Vec<Value> = contract
        .storage
        .iter()
        .map(|(k, v)| json!({ "key": encode_hex(k), "value": encode_hex(v) }))
        .collect();
    Ok(Json(
        json!({ "address": address, "handler_id": contract.handler_id, "entries": entries }),
    ))
}

async fn finality(State(state): State<AppState>, _auth: Auth) -> ApiResult<Json<Value>> {
    let slot = state.read();
    let sim = slot.get()?;
    Ok(Json(json!({ "samples": sim.finality().samples() })))
}

fn cost_json(row: &CostRow) -> Value {
    json!({
        "round": row.round,
        "profile": row.profile,
        "basis": if row.predicted { "predicted" } else { "measured" },
        "tx_count": row.tx_count,
        "total_gas": row.total_gas,
        "avg_normalized_gas": decimal(&row.avg_normalized_gas, 4),
        "avg_fee_wei": decimal(&row.avg_fee_wei, 0),
        "avg_normalized_gas_exact": exact(&row.avg_normalized_gas),
        "avg_fee_wei_exact": exact(&row.avg_fee_wei),
    })
}

async fn costs(State(state): State<AppState>, _auth: Auth) -> ApiResult<Json<Value>> {
    let slot = state.read();
    let sim = slot.get()?;
    let rows: Vec<Value> = sim.cost_report().iter().map(cost_json).collect();
    Ok(Json(json!({ "rows": rows })))
}

async fn simulation_state(State(state): State<AppState>, _auth: Auth) -> ApiResult<Json<Value>> {
    let slot = state.read();
    match slot.get() {
        Ok(sim) => {
            let mut body = serde_json::to_value(sim.state()).expect("state serializes");
            body["initialized"] = json!(true);
            Ok(Json(body))
        }
        Err(_) => Ok(Json(json!({ "initialized": false }))),
    }
}

async fn public_config(State(state): State<AppState>, _auth: Auth) -> ApiResult<Json<Value>> {
    let slot = state.read();
    let config = match slot.get() {
        Ok(sim) => sim.config().clone(),
        Err(_) => state.inner.options.config.clone(),
    };
    Ok(Json(json!({
        "simulation": config,
        "team_ids": config.team_ids(),
        "platforms": Platform::ALL,
        "gas_schedule": state.inner.options.gas_schedule,
        "consensus": state.inner.options.consensus,
        "network_profiles": state.inner.options.profiles,
    })))
}

async fn session(auth: Auth) -> Json<Value> {
    match auth.0 {
        Principal::Instructor => Json(json!({ "principal": "instructor" })),
        Principal::Team(team) => Json(json!({ "principal": "team", "team": team })),
    }
}

impl From<ChainError> for ApiError {
    fn from(e: ChainError) -> Self {
        ApiError::internal(e.to_string())
    }
}
