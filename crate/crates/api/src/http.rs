//! REST/JSON surface over [`TdrService`].
//!
//! Mutating endpoints authenticate with `x-user-id` + `x-password` headers
//! or an `x-admin-token` header. Errors are `{"error": code, "message": ..}`.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tdr_core::amount::Far;
use tdr_core::application::{ApplicationStatus, Decision};
use tdr_core::docstore::ContentAddress;
use tdr_core::identity::{Profile, RegistrationDetails};
use tdr_core::roles::Role;
use tdr_core::service::{Credentials, ErrorStatus, ServiceError, TdrService};
use tdr_core::state::Command;
use tdr_core::token::{LandParcel, TokenId};

#[derive(Debug)]
pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.status {
            ErrorStatus::BadRequest => StatusCode::BAD_REQUEST,
            ErrorStatus::Unauthorized => StatusCode::UNAUTHORIZED,
            ErrorStatus::NotFound => StatusCode::NOT_FOUND,
            ErrorStatus::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
            ErrorStatus::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"error": self.0.code, "message": self.0.message}))).into_response()
    }
}

type ApiResult = Result<Json<serde_json::Value>, ApiError>;
type Shared = State<Arc<TdrService>>;

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(ServiceError::new("InvalidRequest", message))
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let bytes: &[u8] = if bytes.is_empty() { b"{}" } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| bad_request(e.to_string()))
}

fn credentials(headers: &HeaderMap) -> Result<Credentials, ApiError> {
    let header = |name: &str| headers.get(name).and_then(|v| v.to_str().ok()).map(str::to_owned);
    if let Some(token) = header("x-admin-token") {
        return Ok(Credentials::AdminToken(token));
    }
    match (header("x-user-id"), header("x-password")) {
        (Some(user_id), Some(password)) => Ok(Credentials::User { user_id, password }),
        _ => Err(ApiError(ServiceError::new(
            "Unauthorized",
            "x-user-id and x-password (or x-admin-token) headers are required",
        ))),
    }
}

/// Runs blocking service work (key derivation, file IO, locks) off the
/// async executor.
async fn blocking<T, F>(f: F) -> ApiResult
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    let value = tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(ServiceError::new("Internal", e.to_string())))??;
    serde_json::to_value(value)
        .map(Json)
        .map_err(|e| ApiError(ServiceError::new("Internal", e.to_string())))
}

async fn execute(svc: Arc<TdrService>, creds: Credentials, command: Command) -> ApiResult {
    blocking(move || svc.execute(&creds, command)).await
}

pub fn router(service: Arc<TdrService>) -> Router {
    Router::new()
        .route("/users", post(register).get(list_users))
        .route("/users/kyc", post(complete_kyc))
        .route("/users/:id", get(show_user))
        .route("/users/:id/approve", post(approve_user))
        .route("/users/:id/reset", post(reset_user))
        .route("/users/:id/recover", post(recover_user))
        .route("/users/:id/suspend", post(suspend_user))
        .route("/notices", post(create_notice).get(list_notices))
        .route("/notices/:id/close", post(close_notice))
        .route("/applications", post(submit_application).get(list_applications))
        .route("/applications/:id", get(show_application))
        .route("/applications/:id/verify", post(verify_application))
        .route("/applications/:id/resubmit", post(resubmit_application))
        .route("/drcs", post(issue_drc))
        .route("/drcs/:token", get(show_drc))
        .route("/drcs/:token/provenance", get(drc_provenance))
        .route("/drcs/:token/approve", post(approve_operator))
        .route("/drcs/:token/transfer", post(transfer_drc))
        .route("/drcs/:token/utilize", post(utilize_drc))
        .route("/drcs/:token/burn", post(burn_drc))
        .route("/roles", get(list_roles))
        .route("/roles/grant", post(grant_role))
        .route("/roles/revoke", post(revoke_role))
        .route("/docs", post(put_doc))
        .route("/docs/:uri", get(get_doc))
        .route("/chain/height", get(chain_height))
        .route("/chain/blocks/:h", get(chain_block))
        .route("/chain/tx/:id", get(chain_tx))
        .route("/chain/pending", get(chain_pending))
        .route("/chain/state", get(chain_state))
        .route("/chain/verify", get(chain_verify))
        .route("/chain/mine", post(chain_mine))
        .with_state(service)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterBody {
    user_id: String,
    national_id: String,
    name: String,
    phone: String,
    #[serde(default)]
    address: String,
    #[serde(default)]
    photo_ref: Option<String>,
}

async fn register(State(svc): Shared, bytes: Bytes) -> ApiResult {
    let b: RegisterBody = body(&bytes)?;
    let details = RegistrationDetails {
        user_id: b.user_id,
        profile: Profile {
            name: b.name,
            phone: b.phone,
            address: b.address,
            photo_ref: b.photo_ref,
        },
    };
    blocking(move || svc.register(details, &b.national_id)).await
}

async fn list_users(State(svc): Shared) -> ApiResult {
    blocking(move || Ok(svc.users())).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KycBody {
    challenge_id: String,
    otp: String,
    password: String,
}

async fn complete_kyc(State(svc): Shared, bytes: Bytes) -> ApiResult {
    let b: KycBody = body(&bytes)?;
    blocking(move || svc.complete_kyc(&b.challenge_id, &b.otp, &b.password)).await
}

async fn show_user(State(svc): Shared, Path(id): Path<String>) -> ApiResult {
    blocking(move || svc.user(&id)).await
}

async fn approve_user(State(svc): Shared, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    let creds = credentials(&headers)?;
    blocking(move || svc.approve_user(&creds, &id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResetBody {
    otp: Option<String>,
    new_password: Option<String>,
}

/// Without a body this sends a reset OTP; with `otp` and `new_password` it
/// completes the reset and files a recovery request.
async fn reset_user(State(svc): Shared, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let b: ResetBody = body(&bytes)?;
    match (b.otp, b.new_password) {
        (None, None) => blocking(move || svc.request_reset(&id)).await,
        (Some(otp), Some(pw)) => blocking(move || svc.reset_password(&id, &otp, &pw)).await,
        _ => Err(bad_request("otp and new_password must be given together")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecoverBody {
    new_address: Option<String>,
}

async fn recover_user(State(svc): Shared, headers: HeaderMap, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: RecoverBody = body(&bytes)?;
    let new_address = b
        .new_address
        .map(|a| a.parse().map_err(|e| bad_request(format!("new_address: {e}"))))
        .transpose()?;
    blocking(move || svc.recover_account(&creds, &id, new_address)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuspendBody {
    suspended: bool,
}

async fn suspend_user(State(svc): Shared, headers: HeaderMap, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: SuspendBody = body(&bytes)?;
    blocking(move || svc.set_suspended(&creds, &id, b.suspended)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoticeBody {
    notice_id: String,
    sending_zone: String,
    land_description: ContentAddress,
}

async fn create_notice(State(svc): Shared, headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: NoticeBody = body(&bytes)?;
    let cmd = Command::CreateNotice {
        notice_id: b.notice_id,
        sending_zone: b.sending_zone,
        land_description: b.land_description,
    };
    execute(svc, creds, cmd).await
}

async fn close_notice(State(svc): Shared, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    let creds = credentials(&headers)?;
    execute(svc, creds, Command::CloseNotice { notice_id: id }).await
}

async fn list_notices(State(svc): Shared) -> ApiResult {
    blocking(move || Ok(svc.notices())).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplicationBody {
    notice_id: String,
    land_details_uri: ContentAddress,
    claimed_far: Far,
}

async fn submit_application(State(svc): Shared, headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: ApplicationBody = body(&bytes)?;
    let cmd = Command::SubmitApplication {
        notice_id: b.notice_id,
        land_details_uri: b.land_details_uri,
        claimed_far: b.claimed_far,
    };
    execute(svc, creds, cmd).await
}

#[derive(Deserialize)]
struct ApplicationQuery {
    status: Option<ApplicationStatus>,
    department: Option<String>,
}

async fn list_applications(State(svc): Shared, Query(q): Query<ApplicationQuery>) -> ApiResult {
    blocking(move || Ok(svc.applications(q.status, q.department.as_deref()))).await
}

async fn show_application(State(svc): Shared, Path(id): Path<String>) -> ApiResult {
    blocking(move || svc.application(&id)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyBody {
    decision: Decision,
    #[serde(default)]
    remarks: String,
}

async fn verify_application(State(svc): Shared, headers: HeaderMap, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: VerifyBody = body(&bytes)?;
    let cmd = Command::VerifyStep {
        application_id: id,
        decision: b.decision,
        remarks: b.remarks,
    };
    execute(svc, creds, cmd).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResubmitBody {
    land_details_uri: ContentAddress,
}

async fn resubmit_application(
    State(svc): Shared,
    headers: HeaderMap,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: ResubmitBody = body(&bytes)?;
    let cmd = Command::Resubmit {
        application_id: id,
        land_details_uri: b.land_details_uri,
    };
    execute(svc, creds, cmd).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IssueBody {
    application_id: String,
    lands: Vec<LandParcel>,
}

async fn issue_drc(State(svc): Shared, headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: IssueBody = body(&bytes)?;
    let cmd = Command::IssueDrc {
        application_id: b.application_id,
        lands: b.lands,
    };
    execute(svc, creds, cmd).await
}

async fn show_drc(State(svc): Shared, Path(token): Path<TokenId>) -> ApiResult {
    blocking(move || svc.token(token)).await
}

async fn drc_provenance(State(svc): Shared, Path(token): Path<TokenId>) -> ApiResult {
    blocking(move || svc.provenance(token)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproveBody {
    /// Address or user id; absent clears the approval.
    operator: Option<String>,
}

async fn approve_operator(
    State(svc): Shared,
    headers: HeaderMap,
    Path(token): Path<TokenId>,
    bytes: Bytes,
) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: ApproveBody = body(&bytes)?;
    blocking(move || {
        let approved = b.operator.map(|o| svc.address_of(&o)).transpose()?;
        svc.execute(
            &creds,
            Command::Approve {
                token_id: token,
                approved,
            },
        )
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferBody {
    /// Address or user id of the recipient.
    to: String,
    /// Defaults to the current owner.
    from: Option<String>,
}

async fn transfer_drc(State(svc): Shared, headers: HeaderMap, Path(token): Path<TokenId>, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: TransferBody = body(&bytes)?;
    blocking(move || {
        let to = svc.address_of(&b.to)?;
        let from = match b.from {
            Some(f) => svc.address_of(&f)?,
            None => svc.token(token)?.token.owner,
        };
        svc.execute(
            &creds,
            Command::TransferFrom {
                from,
                to,
                token_id: token,
            },
        )
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilizeBody {
    far_used: Far,
    receiving_zone: String,
}

async fn utilize_drc(State(svc): Shared, headers: HeaderMap, Path(token): Path<TokenId>, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: UtilizeBody = body(&bytes)?;
    let cmd = Command::UtilizeDrc {
        token_id: token,
        far_used: b.far_used,
        receiving_zone: b.receiving_zone,
    };
    execute(svc, creds, cmd).await
}

async fn burn_drc(State(svc): Shared, headers: HeaderMap, Path(token): Path<TokenId>) -> ApiResult {
    let creds = credentials(&headers)?;
    execute(svc, creds, Command::BurnDrc { token_id: token }).await
}

async fn list_roles(State(svc): Shared) -> ApiResult {
    blocking(move || Ok(svc.roles())).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoleBody {
    /// Address or user id.
    subject: String,
    role: Role,
    department: Option<String>,
}

async fn grant_role(State(svc): Shared, headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: RoleBody = body(&bytes)?;
    blocking(move || {
        let subject = svc.address_of(&b.subject)?;
        svc.execute(
            &creds,
            Command::GrantRole {
                subject,
                role: b.role,
                department: b.department,
            },
        )
    })
    .await
}

async fn revoke_role(State(svc): Shared, headers: HeaderMap, bytes: Bytes) -> ApiResult {
    let creds = credentials(&headers)?;
    let b: RoleBody = body(&bytes)?;
    blocking(move || {
        let subject = svc.address_of(&b.subject)?;
        svc.execute(&creds, Command::RevokeRole { subject, role: b.role })
    })
    .await
}

async fn put_doc(State(svc): Shared, bytes: Bytes) -> ApiResult {
    let doc: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| bad_request(e.to_string()))?;
    blocking(move || svc.put_document(&doc).map(|uri| json!({"uri": uri}))).await
}

async fn get_doc(State(svc): Shared, Path(uri): Path<String>) -> ApiResult {
    blocking(move || svc.get_document(&uri)).await
}

async fn chain_height(State(svc): Shared) -> ApiResult {
    Ok(Json(json!({"height": svc.height()})))
}

async fn chain_block(State(svc): Shared, Path(h): Path<u64>) -> ApiResult {
    blocking(move || svc.block(h)).await
}

async fn chain_tx(State(svc): Shared, Path(id): Path<String>) -> ApiResult {
    let tx_id = id.parse().map_err(|e| bad_request(format!("tx id: {e}")))?;
    blocking(move || {
        svc.receipt(&tx_id)
            .ok_or_else(|| ServiceError::new("UnknownTx", format!("no committed transaction {id}")))
    })
    .await
}

async fn chain_pending(State(svc): Shared) -> ApiResult {
    blocking(move || Ok(svc.pending())).await
}

async fn chain_state(State(svc): Shared) -> ApiResult {
    Ok(Json(
        json!({"height": svc.height(), "state_digest": svc.state_digest()}),
    ))
}

async fn chain_verify(State(svc): Shared) -> ApiResult {
    blocking(move || svc.verify().map(|d| json!({"ok": true, "state_digest": d}))).await
}

async fn chain_mine(State(svc): Shared) -> ApiResult {
    if !svc.config().test_mode {
        return Err(ApiError(ServiceError::new(
            "NotFound",
            "mine-now is only available in test mode",
        )));
    }
    blocking(move || svc.mine()).await
}

/// Mines pending transactions every `interval`; an interval of zero leaves
/// block production to the mine-now endpoint.
pub fn spawn_block_producer(service: Arc<TdrService>, interval: Duration) -> Option<tokio::task::JoinHandle<()>> {
    if interval.is_zero() {
        return None;
    }
    Some(tokio::spawn(async move {
        let mut ticker = tokio::time::interval(interval);
        ticker.tick().await;
        loop {
            ticker.tick().await;
            let svc = service.clone();
            match tokio::task::spawn_blocking(move || svc.mine_pending()).await {
                Ok(Ok(Some(report))) => {
                    tracing::info!(height = report.height, txs = report.transactions, "block committed")
                }
                Ok(Ok(None)) => {}
                Ok(Err(e)) => tracing::warn!(code = %e.code, "block production failed: {}", e.message),
                Err(e) => tracing::error!("block producer panicked: {e}"),
            }
        }
    }))
}

/// Serves until ctrl-c. Every store is written through on each change, so
/// shutdown has nothing left to flush.
pub async fn serve(service: Arc<TdrService>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(&service.config().listen).await?;
    tracing::info!(addr = %listener.local_addr()?, height = service.height(), "listening");
    let producer = spawn_block_producer(
        service.clone(),
        Duration::from_secs(service.config().block_interval_secs),
    );
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(p) = producer {
        p.abort();
    }
    Ok(())
}
