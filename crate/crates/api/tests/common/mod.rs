#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tdr_core::config::{Resident, ServiceConfig};
use tdr_core::identity::{verhoeff, KdfParams};
use tdr_core::service::TdrService;
use tempfile::TempDir;
use tower::ServiceExt;

pub const ADMIN_TOKEN: &str = "test-admin-token";
pub const PASSWORD: &str = "secret-pass-1";

pub fn national_id(n: u64) -> String {
    verhoeff::complete_national_id(&format!("{}", 20_000_000_000u64 + n)).unwrap()
}

pub const PEOPLE: [&str; 5] = ["officer-planning", "officer-survey", "officer-legal", "alice", "bob"];

pub fn config(dir: &std::path::Path) -> ServiceConfig {
    ServiceConfig {
        data_dir: dir.to_owned(),
        chain_id: "tdr-test".into(),
        block_interval_secs: 0,
        test_mode: true,
        admin_password: Some("admin-pass-1".into()),
        admin_token: Some(ADMIN_TOKEN.into()),
        kdf: KdfParams::INSECURE_FAST,
        ekyc_residents: PEOPLE
            .iter()
            .enumerate()
            .map(|(i, name)| Resident {
                national_id: national_id(i as u64),
                name: name.to_string(),
                phone: format!("98765{:05}", i),
            })
            .collect(),
        ..ServiceConfig::default()
    }
}

pub struct Api {
    pub dir: TempDir,
    pub service: Arc<TdrService>,
    pub router: Router,
}

pub enum Auth<'a> {
    None,
    Admin,
    User(&'a str),
}

impl Api {
    pub fn new() -> Api {
        let dir = TempDir::new().unwrap();
        let service = Arc::new(TdrService::open(config(dir.path())).unwrap());
        let router = tdr_api::http::router(service.clone());
        Api { dir, service, router }
    }

    pub async fn call(&self, method: &str, path: &str, auth: Auth<'_>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(path);
        match auth {
            Auth::None => {}
            Auth::Admin => req = req.header("x-admin-token", ADMIN_TOKEN),
            Auth::User(u) => req = req.header("x-user-id", u).header("x-password", PASSWORD),
        }
        let body = match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        };
        let resp = self
            .router
            .clone()
            .oneshot(req.header("content-type", "application/json").body(body).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        (status, value)
    }

    pub async fn ok(&self, method: &str, path: &str, auth: Auth<'_>, body: Option<Value>) -> Value {
        let (status, v) = self.call(method, path, auth, body).await;
        assert_eq!(status, StatusCode::OK, "{method} {path} -> {v}");
        v
    }

    /// Submits a mutation, mines it, and returns the committed receipt.
    pub async fn commit(&self, path: &str, auth: Auth<'_>, body: Option<Value>) -> Value {
        let submitted = self.ok("POST", path, auth, body).await;
        assert_eq!(submitted["committed"], false);
        self.ok("POST", "/chain/mine", Auth::None, None).await;
        let tx = submitted["tx_id"].as_str().unwrap();
        let receipt = self.ok("GET", &format!("/chain/tx/{tx}"), Auth::None, None).await;
        assert_eq!(receipt["status"], "success", "{path} -> {receipt}");
        receipt
    }

    pub async fn onboard(&self, user_id: &str, index: u64) -> String {
        let req = self
            .ok(
                "POST",
                "/users",
                Auth::None,
                Some(json!({
                    "user_id": user_id,
                    "national_id": national_id(index),
                    "name": user_id,
                    "phone": format!("98765{:05}", index),
                })),
            )
            .await;
        assert_eq!(req["status"], "PENDING_KYC");
        let otp = self.service.identity().outbox().last_otp(user_id).unwrap();
        let user = self
            .ok(
                "POST",
                "/users/kyc",
                Auth::None,
                Some(json!({"challenge_id": req["challenge_id"], "otp": otp, "password": PASSWORD})),
            )
            .await;
        assert_eq!(user["status"], "PENDING_ADMIN");
        self.commit(&format!("/users/{user_id}/approve"), Auth::Admin, None)
            .await;
        let user = self.ok("GET", &format!("/users/{user_id}"), Auth::None, None).await;
        assert_eq!(user["status"], "ACTIVE");
        user["active_address"].as_str().unwrap().to_owned()
    }

    pub async fn put_doc(&self, doc: Value) -> String {
        let v = self.ok("POST", "/docs", Auth::None, Some(doc)).await;
        v["uri"].as_str().unwrap().to_owned()
    }
}

pub struct HappyPath {
    pub token_id: u64,
    pub provenance: Vec<String>,
    pub burn_receipt: Value,
}

/// register → kyc → approve → notice → apply → 3 approvals → issue →
/// transfer → utilize part → utilize rest → burn, all over HTTP.
pub async fn happy_path(api: &Api) -> HappyPath {
    for (i, dept) in ["planning", "survey", "legal"].iter().enumerate() {
        let officer = format!("officer-{dept}");
        api.onboard(&officer, i as u64).await;
        api.commit(
            "/roles/grant",
            Auth::Admin,
            Some(json!({"subject": officer, "role": "OFFICER", "department": dept})),
        )
        .await;
    }
    api.onboard("alice", 3).await;
    let bob = api.onboard("bob", 4).await;

    let description = api.put_doc(json!({"survey": "S1/114", "area_sqm": 1200})).await;
    api.commit(
        "/notices",
        Auth::Admin,
        Some(json!({"notice_id": "N1", "sending_zone": "S1", "land_description": description})),
    )
    .await;

    let details = api.put_doc(json!({"plots": ["S1/114-A"], "owner": "alice"})).await;
    let receipt = api
        .commit(
            "/applications",
            Auth::User("alice"),
            Some(json!({"notice_id": "N1", "land_details_uri": details, "claimed_far": "100"})),
        )
        .await;
    let app_id = receipt["outcome"]["application_id"].as_str().unwrap().to_owned();

    for dept in ["planning", "survey", "legal"] {
        let officer = format!("officer-{dept}");
        api.commit(
            &format!("/applications/{app_id}/verify"),
            Auth::User(&officer),
            Some(json!({"decision": "APPROVE", "remarks": format!("{dept} ok")})),
        )
        .await;
    }
    let app = api
        .ok("GET", &format!("/applications/{app_id}"), Auth::None, None)
        .await;
    assert_eq!(app["status"], "VERIFIED");

    let receipt = api
        .commit(
            "/drcs",
            Auth::Admin,
            Some(json!({
                "application_id": app_id,
                "lands": [{"plot_id": "S1/114-A", "area": "1200", "zone": "S1"}],
            })),
        )
        .await;
    let token_id = receipt["outcome"]["token_id"].as_u64().unwrap();

    api.commit(
        &format!("/drcs/{token_id}/transfer"),
        Auth::User("alice"),
        Some(json!({"to": "bob"})),
    )
    .await;
    let drc = api.ok("GET", &format!("/drcs/{token_id}"), Auth::None, None).await;
    assert_eq!(drc["owner"], bob.as_str());

    api.commit(
        &format!("/drcs/{token_id}/utilize"),
        Auth::User("officer-planning"),
        Some(json!({"far_used": "40", "receiving_zone": "R1"})),
    )
    .await;
    api.commit(
        &format!("/drcs/{token_id}/utilize"),
        Auth::User("officer-planning"),
        Some(json!({"far_used": "60", "receiving_zone": "R2"})),
    )
    .await;
    let burn_receipt = api.commit(&format!("/drcs/{token_id}/burn"), Auth::Admin, None).await;

    let provenance = api
        .ok("GET", &format!("/drcs/{token_id}/provenance"), Auth::None, None)
        .await
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["kind"].as_str().unwrap().to_owned())
        .collect();
    HappyPath {
        token_id,
        provenance,
        burn_receipt,
    }
}
