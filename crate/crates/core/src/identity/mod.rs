//! Onboarding against a national identity register, custody of
//! password-sealed signing keys, and the recovery path that rotates a
//! user's key.
//!
//! Account lifecycle: `PENDING_KYC → PENDING_ADMIN → ACTIVE ⇄ SUSPENDED`,
//! with `REJECTED` reachable from `PENDING_KYC` when the eKYC record does not
//! match the submitted details. Only ledger-facing checks (ADMIN role,
//! on-chain binding) live outside this module.

pub mod ekyc;
pub mod outbox;
pub mod vault;
pub mod verhoeff;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use parking_lot::Mutex;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::crypto::{Address, Digest, PublicKey, SigningKey};
use crate::ledger::tx::SignedTransaction;
use crate::persist::{load_json, save_json};
use crate::state::Command;

pub use ekyc::{EkycProfile, EkycProvider, MockEkyc};
pub use outbox::{Notification, Outbox};
pub use vault::{KdfParams, KeyRecord, NationalIdRecord, VaultData, VaultError, VaultKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UserStatus {
    PendingKyc,
    PendingAdmin,
    Active,
    Suspended,
    Rejected,
}

impl UserStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            UserStatus::PendingKyc => "PENDING_KYC",
            UserStatus::PendingAdmin => "PENDING_ADMIN",
            UserStatus::Active => "ACTIVE",
            UserStatus::Suspended => "SUSPENDED",
            UserStatus::Rejected => "REJECTED",
        }
    }
}

impl std::fmt::Display for UserStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Off-chain profile kept alongside the account.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub phone: String,
    #[serde(default)]
    pub address: String,
    #[serde(default)]
    pub photo_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationDetails {
    pub user_id: String,
    #[serde(flatten)]
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: String,
    /// Vault reference of the sealed national id. Absent only for accounts
    /// provisioned at bootstrap.
    pub national_id_ref: Option<String>,
    pub key_ref: Option<String>,
    pub active_address: Option<Address>,
    pub profile: Profile,
    pub status: UserStatus,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengePurpose {
    Onboarding,
    PasswordReset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtpChallenge {
    pub challenge_id: String,
    pub user_id: String,
    pub national_id_hash: Digest,
    pub purpose: ChallengePurpose,
    pub expires_at: u64,
    pub consumed: bool,
    pub attempts: u32,
}

/// A key rotation awaiting the on-ledger rebind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryRequest {
    pub user_id: String,
    pub old_address: Option<Address>,
    pub new_public_key: PublicKey,
    pub new_address: Address,
    pub key_ref: String,
    pub requested_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnboardingRequest {
    pub user_id: String,
    pub status: UserStatus,
    pub challenge_id: String,
    pub masked_phone: String,
    pub expires_at: u64,
}

/// Contents of the off-chain user store file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserStoreData {
    pub users: BTreeMap<String, UserAccount>,
    pub challenges: BTreeMap<String, OtpChallenge>,
    pub recoveries: BTreeMap<String, RecoveryRequest>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdentityError {
    #[error("user id must be 1-64 characters of [A-Za-z0-9._-]")]
    InvalidUserId,
    #[error("national id failed validation")]
    InvalidNationalId,
    #[error("national id is already registered")]
    DuplicateNationalId,
    #[error("user id {0} is taken")]
    DuplicateUser(String),
    #[error("user {0} not found")]
    UnknownUser(String),
    #[error("challenge {0} not found")]
    UnknownChallenge(String),
    #[error("no live OTP challenge")]
    NoChallenge,
    #[error("OTP does not match")]
    BadOtp,
    #[error("OTP challenge has expired or was already used")]
    Expired,
    #[error("submitted details do not match the eKYC record")]
    DetailMismatch,
    #[error("password needs at least 8 characters including a letter and a digit")]
    WeakPassword,
    #[error("user is {0}")]
    WrongStatus(UserStatus),
    #[error("wrong password")]
    BadPassword,
    #[error("user is not active")]
    NotActive,
    #[error("no OTP-validated recovery request on file for {0}")]
    NoRecoveryRequest(String),
    #[error("recovery request is for {expected}, not {got}")]
    RecoveryMismatch { expected: Address, got: Address },
    #[error("identity store: {0}")]
    Store(String),
}

impl IdentityError {
    pub fn code(&self) -> &'static str {
        use IdentityError::*;
        match self {
            InvalidUserId => "InvalidUserId",
            InvalidNationalId => "InvalidNationalId",
            DuplicateNationalId => "DuplicateNationalId",
            DuplicateUser(_) => "DuplicateUser",
            UnknownUser(_) | UnknownChallenge(_) => "NotFound",
            NoChallenge => "NoChallenge",
            BadOtp => "BadOtp",
            Expired => "Expired",
            DetailMismatch => "DetailMismatch",
            WeakPassword => "WeakPassword",
            WrongStatus(_) => "WrongStatus",
            BadPassword => "BadPassword",
            NotActive => "NotActive",
            NoRecoveryRequest(_) => "NoRecoveryRequest",
            RecoveryMismatch { .. } => "RecoveryMismatch",
            Store(_) => "StoreError",
        }
    }
}

impl From<VaultError> for IdentityError {
    fn from(e: VaultError) -> Self {
        match e {
            VaultError::BadPassword => IdentityError::BadPassword,
            other => IdentityError::Store(other.to_string()),
        }
    }
}

impl From<std::io::Error> for IdentityError {
    fn from(e: std::io::Error) -> Self {
        IdentityError::Store(e.to_string())
    }
}

pub fn check_user_id(user_id: &str) -> Result<(), IdentityError> {
    let ok = (1..=64).contains(&user_id.len())
        && user_id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'));
    ok.then_some(()).ok_or(IdentityError::InvalidUserId)
}

pub fn check_password(password: &str) -> Result<(), IdentityError> {
    let ok = password.chars().count() >= 8
        && password.chars().any(char::is_alphabetic)
        && password.chars().any(|c| c.is_ascii_digit());
    ok.then_some(()).ok_or(IdentityError::WeakPassword)
}

fn normalize_name(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn phone_digits(s: &str) -> String {
    let d: String = s.chars().filter(char::is_ascii_digit).collect();
    d[d.len().saturating_sub(10)..].to_owned()
}

#[derive(Debug, Clone)]
pub struct IdentityConfig {
    pub user_store: Option<PathBuf>,
    pub vault: Option<PathBuf>,
    pub outbox: Option<PathBuf>,
    pub kdf: KdfParams,
    pub otp_ttl_millis: u64,
    pub max_otp_attempts: u32,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            user_store: None,
            vault: None,
            outbox: None,
            kdf: KdfParams::default(),
            otp_ttl_millis: 5 * 60 * 1000,
            max_otp_attempts: 5,
        }
    }
}

struct Stores {
    users: UserStoreData,
    vault: VaultData,
}

pub struct IdentityService {
    config: IdentityConfig,
    provider: Arc<dyn EkycProvider>,
    clock: Arc<dyn Clock>,
    vault_key: VaultKey,
    stores: Mutex<Stores>,
    signing_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    outbox: Outbox,
}

impl std::fmt::Debug for IdentityService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdentityService")
            .field("users", &self.stores.lock().users.users.len())
            .finish_non_exhaustive()
    }
}

fn random_challenge_id() -> String {
    let mut b = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut b);
    hex::encode(b)
}

impl IdentityService {
    pub fn open(
        config: IdentityConfig,
        vault_key: VaultKey,
        provider: Arc<dyn EkycProvider>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, IdentityError> {
        let users = match &config.user_store {
            Some(p) => load_json(p)?,
            None => UserStoreData::default(),
        };
        let vault = match &config.vault {
            Some(p) => load_json(p)?,
            None => VaultData::default(),
        };
        let outbox = Outbox::new(config.outbox.clone());
        Ok(IdentityService {
            config,
            provider,
            clock,
            vault_key,
            stores: Mutex::new(Stores { users, vault }),
            signing_locks: Mutex::new(HashMap::new()),
            outbox,
        })
    }

    pub fn outbox(&self) -> &Outbox {
        &self.outbox
    }

    fn persist(&self, stores: &Stores) -> Result<(), IdentityError> {
        if let Some(p) = &self.config.vault {
            save_json(p, &stores.vault)?;
        }
        if let Some(p) = &self.config.user_store {
            save_json(p, &stores.users)?;
        }
        Ok(())
    }

    pub fn user(&self, user_id: &str) -> Result<UserAccount, IdentityError> {
        self.stores
            .lock()
            .users
            .users
            .get(user_id)
            .cloned()
            .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))
    }

    pub fn users(&self) -> Vec<UserAccount> {
        self.stores.lock().users.users.values().cloned().collect()
    }

    pub fn user_by_address(&self, address: &Address) -> Option<UserAccount> {
        self.stores
            .lock()
            .users
            .users
            .values()
            .find(|u| u.active_address == Some(*address))
            .cloned()
    }

    pub fn recovery_request(&self, user_id: &str) -> Option<RecoveryRequest> {
        self.stores.lock().users.recoveries.get(user_id).cloned()
    }

    pub fn challenge(&self, challenge_id: &str) -> Option<OtpChallenge> {
        self.stores.lock().users.challenges.get(challenge_id).cloned()
    }

    /// Serialized user store and vault, as they would be written to disk.
    pub fn snapshot_json(&self) -> (String, String) {
        let s = self.stores.lock();
        (
            serde_json::to_string(&s.users).expect("serializable"),
            serde_json::to_string(&s.vault).expect("serializable"),
        )
    }

    fn national_id_in_use(stores: &Stores, fingerprint: &Digest) -> bool {
        stores.users.users.values().any(|u| {
            u.status != UserStatus::Rejected
                && u.national_id_ref
                    .as_ref()
                    .and_then(|r| stores.vault.national_ids.get(r))
                    .is_some_and(|rec| rec.fingerprint == *fingerprint)
        })
    }

    /// Files an onboarding request and sends an OTP to the phone the
    /// identity authority holds for `national_id`.
    pub fn register(
        &self,
        details: RegistrationDetails,
        national_id: &str,
    ) -> Result<OnboardingRequest, IdentityError> {
        check_user_id(&details.user_id)?;
        if !verhoeff::is_valid_national_id(national_id) {
            return Err(IdentityError::InvalidNationalId);
        }
        let fingerprint = self.vault_key.fingerprint(national_id);
        let now = self.clock.now_millis();
        let mut rng = rand::thread_rng();
        let mut stores = self.stores.lock();
        if stores.users.users.contains_key(&details.user_id) {
            return Err(IdentityError::DuplicateUser(details.user_id));
        }
        if Self::national_id_in_use(&stores, &fingerprint) {
            return Err(IdentityError::DuplicateNationalId);
        }
        let challenge_id = random_challenge_id();
        let delivery = self
            .provider
            .send_otp(national_id, &challenge_id)
            .ok_or(IdentityError::InvalidNationalId)?;
        let reference_id = stores.vault.fresh_reference_id(&mut rng);
        let record = NationalIdRecord::seal(&self.vault_key, reference_id.clone(), national_id, now, &mut rng);
        stores.vault.national_ids.insert(reference_id.clone(), record);
        let expires_at = now + self.config.otp_ttl_millis;
        let user_id = details.user_id.clone();
        stores.users.users.insert(
            user_id.clone(),
            UserAccount {
                user_id: user_id.clone(),
                national_id_ref: Some(reference_id),
                key_ref: None,
                active_address: None,
                profile: details.profile,
                status: UserStatus::PendingKyc,
                created_at: now,
                updated_at: now,
            },
        );
        stores.users.challenges.insert(
            challenge_id.clone(),
            OtpChallenge {
                challenge_id: challenge_id.clone(),
                user_id: user_id.clone(),
                national_id_hash: fingerprint,
                purpose: ChallengePurpose::Onboarding,
                expires_at,
                consumed: false,
                attempts: 0,
            },
        );
        self.persist(&stores)?;
        drop(stores);
        self.outbox.otp_sent(now, &user_id, &delivery, "onboarding");
        Ok(OnboardingRequest {
            user_id,
            status: UserStatus::PendingKyc,
            challenge_id,
            masked_phone: delivery.masked_phone,
            expires_at,
        })
    }

    /// Checks the challenge and the OTP. A wrong code leaves the challenge
    /// live until it expires or runs out of attempts.
    fn check_otp(
        &self,
        stores: &mut Stores,
        challenge_id: &str,
        otp: &str,
        now: u64,
    ) -> Result<OtpChallenge, IdentityError> {
        let max = self.config.max_otp_attempts;
        let challenge = stores
            .users
            .challenges
            .get_mut(challenge_id)
            .ok_or_else(|| IdentityError::UnknownChallenge(challenge_id.to_owned()))?;
        if challenge.consumed || now > challenge.expires_at || challenge.attempts >= max {
            return Err(IdentityError::Expired);
        }
        if !self.provider.verify_otp(challenge_id, otp) {
            challenge.attempts += 1;
            self.persist(stores)?;
            return Err(IdentityError::BadOtp);
        }
        Ok(challenge.clone())
    }

    fn national_id_of(&self, stores: &Stores, user: &UserAccount) -> Result<String, IdentityError> {
        let reference = user.national_id_ref.as_ref().ok_or(IdentityError::NoChallenge)?;
        let record = stores
            .vault
            .national_ids
            .get(reference)
            .ok_or_else(|| IdentityError::Store(format!("vault record {reference} missing")))?;
        Ok(record.open(&self.vault_key)?)
    }

    /// Verifies the OTP, compares the submitted details against the eKYC
    /// record, and on success creates the user's key pair sealed under
    /// `password`.
    pub fn complete_ekyc(&self, challenge_id: &str, otp: &str, password: &str) -> Result<UserAccount, IdentityError> {
        let now = self.clock.now_millis();
        let user_id = {
            let mut stores = self.stores.lock();
            let challenge = self.check_otp(&mut stores, challenge_id, otp, now)?;
            if challenge.purpose != ChallengePurpose::Onboarding {
                return Err(IdentityError::UnknownChallenge(challenge_id.to_owned()));
            }
            check_password(password)?;
            let user = stores
                .users
                .users
                .get(&challenge.user_id)
                .cloned()
                .ok_or_else(|| IdentityError::UnknownUser(challenge.user_id.clone()))?;
            if user.status != UserStatus::PendingKyc {
                return Err(IdentityError::WrongStatus(user.status));
            }
            let national_id = self.national_id_of(&stores, &user)?;
            let matches = self.provider.profile(&national_id).is_some_and(|p| {
                normalize_name(&p.name) == normalize_name(&user.profile.name)
                    && phone_digits(&p.phone) == phone_digits(&user.profile.phone)
            });
            stores.users.challenges.get_mut(challenge_id).expect("checked").consumed = true;
            if !matches {
                let u = stores.users.users.get_mut(&user.user_id).expect("checked");
                u.status = UserStatus::Rejected;
                u.updated_at = now;
                self.persist(&stores)?;
                drop(stores);
                self.outbox
                    .email(now, &user.user_id, "onboarding_rejected", "eKYC details did not match");
                return Err(IdentityError::DetailMismatch);
            }
            self.persist(&stores)?;
            user.user_id
        };

        // Key stretching runs outside the store lock.
        let key = SigningKey::generate();
        let mut rng = rand::thread_rng();
        let reference_id = self.stores.lock().vault.fresh_reference_id(&mut rng);
        let record = KeyRecord::seal(reference_id.clone(), &key, password, self.config.kdf, now, &mut rng)?;

        let mut stores = self.stores.lock();
        if stores.vault.reference_in_use(&reference_id) {
            return Err(IdentityError::Store("reference id collision".into()));
        }
        stores.vault.keys.insert(reference_id.clone(), record);
        let user = stores.users.users.get_mut(&user_id).expect("exists");
        user.key_ref = Some(reference_id);
        user.status = UserStatus::PendingAdmin;
        user.updated_at = now;
        let user = user.clone();
        self.persist(&stores)?;
        drop(stores);
        self.outbox.email(
            now,
            &user_id,
            "kyc_complete",
            "identity verified, awaiting administrator approval",
        );
        Ok(user)
    }

    /// Public key an approval would bind on the ledger.
    pub fn pending_approval(&self, user_id: &str) -> Result<PublicKey, IdentityError> {
        let stores = self.stores.lock();
        let user = stores
            .users
            .users
            .get(user_id)
            .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))?;
        if user.status != UserStatus::PendingAdmin {
            return Err(IdentityError::WrongStatus(user.status));
        }
        Self::key_record(&stores, user).map(|r| r.public_key)
    }

    fn key_record<'a>(stores: &'a Stores, user: &UserAccount) -> Result<&'a KeyRecord, IdentityError> {
        let reference = user.key_ref.as_ref().ok_or(IdentityError::NotActive)?;
        stores
            .vault
            .keys
            .get(reference)
            .ok_or_else(|| IdentityError::Store(format!("key record {reference} missing")))
    }

    /// Marks the account active once its binding has committed.
    pub fn activate(&self, user_id: &str, address: Address) -> Result<UserAccount, IdentityError> {
        let now = self.clock.now_millis();
        let mut stores = self.stores.lock();
        let user = stores
            .users
            .users
            .get_mut(user_id)
            .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))?;
        if user.status != UserStatus::PendingAdmin {
            return Err(IdentityError::WrongStatus(user.status));
        }
        user.status = UserStatus::Active;
        user.active_address = Some(address);
        user.updated_at = now;
        let user = user.clone();
        self.persist(&stores)?;
        drop(stores);
        self.outbox.email(
            now,
            user_id,
            "account_approved",
            &format!("account approved, address {address}"),
        );
        Ok(user)
    }

    pub fn set_suspended(&self, user_id: &str, suspended: bool) -> Result<UserAccount, IdentityError> {
        let now = self.clock.now_millis();
        let mut stores = self.stores.lock();
        let user = stores
            .users
            .users
            .get_mut(user_id)
            .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))?;
        let (from, to) = if suspended {
            (UserStatus::Active, UserStatus::Suspended)
        } else {
            (UserStatus::Suspended, UserStatus::Active)
        };
        if user.status != from {
            return Err(IdentityError::WrongStatus(user.status));
        }
        user.status = to;
        user.updated_at = now;
        let user = user.clone();
        self.persist(&stores)?;
        Ok(user)
    }

    /// Provisions an already-active account with a known password, for the
    /// genesis administrator. Idempotent for an existing account whose key
    /// opens with `password`.
    pub fn bootstrap_account(
        &self,
        user_id: &str,
        password: &str,
        profile: Profile,
    ) -> Result<PublicKey, IdentityError> {
        check_user_id(user_id)?;
        check_password(password)?;
        if let Ok(user) = self.user(user_id) {
            let record = Self::key_record(&self.stores.lock(), &user)?.clone();
            return Ok(record.open(password)?.public_key());
        }
        let now = self.clock.now_millis();
        let key = SigningKey::generate();
        let mut rng = rand::thread_rng();
        let reference_id = self.stores.lock().vault.fresh_reference_id(&mut rng);
        let record = KeyRecord::seal(reference_id.clone(), &key, password, self.config.kdf, now, &mut rng)?;
        let mut stores = self.stores.lock();
        if stores.users.users.contains_key(user_id) {
            return Err(IdentityError::DuplicateUser(user_id.to_owned()));
        }
        stores.vault.keys.insert(reference_id.clone(), record);
        stores.users.users.insert(
            user_id.to_owned(),
            UserAccount {
                user_id: user_id.to_owned(),
                national_id_ref: None,
                key_ref: Some(reference_id),
                active_address: Some(key.address()),
                profile,
                status: UserStatus::Active,
                created_at: now,
                updated_at: now,
            },
        );
        self.persist(&stores)?;
        Ok(key.public_key())
    }

    fn user_lock(&self, user_id: &str) -> Arc<Mutex<()>> {
        self.signing_locks.lock().entry(user_id.to_owned()).or_default().clone()
    }

    /// Decrypts the user's key and runs `f` with it. Calls for one user are
    /// serialized; the decrypted key is dropped when `f` returns.
    pub fn with_signing_key<R>(
        &self,
        user_id: &str,
        password: &str,
        f: impl FnOnce(&SigningKey) -> R,
    ) -> Result<R, IdentityError> {
        let lock = self.user_lock(user_id);
        let _guard = lock.lock();
        let record = {
            let stores = self.stores.lock();
            let user = stores
                .users
                .users
                .get(user_id)
                .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))?;
            if user.status != UserStatus::Active {
                return Err(IdentityError::NotActive);
            }
            Self::key_record(&stores, user)?.clone()
        };
        let key = record.open(password)?;
        Ok(f(&key))
    }

    pub fn sign_transaction(
        &self,
        user_id: &str,
        password: &str,
        nonce: u64,
        command: Command,
        timestamp: u64,
    ) -> Result<SignedTransaction, IdentityError> {
        self.with_signing_key(user_id, password, |key| {
            SignedTransaction::sign(key, nonce, command, timestamp)
        })
    }

    /// Sends a reset OTP to the phone registered for the user's national id.
    pub fn request_reset(&self, user_id: &str) -> Result<OnboardingRequest, IdentityError> {
        let now = self.clock.now_millis();
        let mut stores = self.stores.lock();
        let user = stores
            .users
            .users
            .get(user_id)
            .cloned()
            .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))?;
        if user.status != UserStatus::Active {
            return Err(IdentityError::NotActive);
        }
        let national_id = self.national_id_of(&stores, &user)?;
        let challenge_id = random_challenge_id();
        let delivery = self
            .provider
            .send_otp(&national_id, &challenge_id)
            .ok_or(IdentityError::InvalidNationalId)?;
        let expires_at = now + self.config.otp_ttl_millis;
        for c in stores.users.challenges.values_mut() {
            if c.user_id == user_id && c.purpose == ChallengePurpose::PasswordReset {
                c.consumed = true;
            }
        }
        stores.users.challenges.insert(
            challenge_id.clone(),
            OtpChallenge {
                challenge_id: challenge_id.clone(),
                user_id: user_id.to_owned(),
                national_id_hash: self.vault_key.fingerprint(&national_id),
                purpose: ChallengePurpose::PasswordReset,
                expires_at,
                consumed: false,
                attempts: 0,
            },
        );
        self.persist(&stores)?;
        drop(stores);
        self.outbox.otp_sent(now, user_id, &delivery, "password_reset");
        Ok(OnboardingRequest {
            user_id: user_id.to_owned(),
            status: user.status,
            challenge_id,
            masked_phone: delivery.masked_phone,
            expires_at,
        })
    }

    /// Replaces the user's key with a fresh one sealed under `new_password`
    /// and files the recovery request the ledger rebind will consume. The
    /// old key record is destroyed.
    pub fn reset_password(
        &self,
        user_id: &str,
        otp: &str,
        new_password: &str,
    ) -> Result<RecoveryRequest, IdentityError> {
        let now = self.clock.now_millis();
        {
            let mut stores = self.stores.lock();
            let latest = stores
                .users
                .challenges
                .values()
                .filter(|c| c.user_id == user_id && c.purpose == ChallengePurpose::PasswordReset)
                .max_by_key(|c| c.expires_at)
                .map(|c| c.challenge_id.clone())
                .ok_or(IdentityError::NoChallenge)?;
            self.check_otp(&mut stores, &latest, otp, now)?;
            check_password(new_password)?;
            stores.users.challenges.get_mut(&latest).expect("checked").consumed = true;
            self.persist(&stores)?;
        }

        let lock = self.user_lock(user_id);
        let _guard = lock.lock();
        let key = SigningKey::generate();
        let mut rng = rand::thread_rng();
        let reference_id = self.stores.lock().vault.fresh_reference_id(&mut rng);
        let record = KeyRecord::seal(reference_id.clone(), &key, new_password, self.config.kdf, now, &mut rng)?;

        let mut stores = self.stores.lock();
        let user = stores
            .users
            .users
            .get(user_id)
            .cloned()
            .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))?;
        if let Some(old) = &user.key_ref {
            stores.vault.keys.remove(old);
        }
        stores.vault.keys.insert(reference_id.clone(), record);
        let u = stores.users.users.get_mut(user_id).expect("exists");
        u.key_ref = Some(reference_id.clone());
        u.updated_at = now;
        let request = RecoveryRequest {
            user_id: user_id.to_owned(),
            old_address: user.active_address,
            new_public_key: key.public_key(),
            new_address: key.address(),
            key_ref: reference_id,
            requested_at: now,
        };
        stores.users.recoveries.insert(user_id.to_owned(), request.clone());
        self.persist(&stores)?;
        drop(stores);
        self.outbox.email(
            now,
            user_id,
            "password_reset",
            "password reset; account recovery pending approval",
        );
        Ok(request)
    }

    /// The recovery request for `user_id`, checked against the address the
    /// administrator intends to bind.
    pub fn pending_recovery(&self, user_id: &str, new_address: &Address) -> Result<RecoveryRequest, IdentityError> {
        let request = self
            .recovery_request(user_id)
            .ok_or_else(|| IdentityError::NoRecoveryRequest(user_id.to_owned()))?;
        if request.new_address != *new_address {
            return Err(IdentityError::RecoveryMismatch {
                expected: request.new_address,
                got: *new_address,
            });
        }
        Ok(request)
    }

    /// Records the committed rebind.
    pub fn complete_recovery(&self, user_id: &str, new_address: Address) -> Result<UserAccount, IdentityError> {
        let now = self.clock.now_millis();
        let mut stores = self.stores.lock();
        let request = stores
            .users
            .recoveries
            .remove(user_id)
            .ok_or_else(|| IdentityError::NoRecoveryRequest(user_id.to_owned()))?;
        debug_assert_eq!(request.new_address, new_address);
        let user = stores
            .users
            .users
            .get_mut(user_id)
            .ok_or_else(|| IdentityError::UnknownUser(user_id.to_owned()))?;
        user.active_address = Some(new_address);
        user.updated_at = now;
        let user = user.clone();
        self.persist(&stores)?;
        drop(stores);
        self.outbox.email(
            now,
            user_id,
            "account_recovered",
            &format!("assets moved to {new_address}"),
        );
        Ok(user)
    }
}
