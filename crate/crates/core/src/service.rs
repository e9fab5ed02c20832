//! The operational service: one node, the identity vault and the document
//! store behind a single API used by both the HTTP server and the CLI.
//!
//! Every state change is a signed transaction submitted to the node. Off-chain
//! stores follow the ledger: account activation, recovery completion and
//! land-detail documents are written only after the block carrying the
//! corresponding receipt commits.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::Serialize;

use crate::application::{ApplicationStatus, Notice, TdrApplication};
use crate::clock::{Clock, SystemClock};
use crate::config::{ConfigError, ServiceConfig};
use crate::crypto::{Address, Digest};
use crate::devnet::validator_infos;
use crate::docstore::{ContentAddress, DocError, DocStore, Value};
use crate::identity::{
    EkycProvider, IdentityConfig, IdentityError, IdentityService, MockEkyc, OnboardingRequest, Profile,
    RecoveryRequest, RegistrationDetails, UserAccount, UserStatus, VaultKey,
};
use crate::ledger::node::{MinedBlock, Node, NodeError, SubmitError};
use crate::ledger::{verify_blocks, Block, GenesisAccount, GenesisConfig, SignedTransaction, ValidatorHarness};
use crate::persist::{save_json, write_atomic};
use crate::roles::{Role, RoleAssignment};
use crate::state::{ChainState, Command, Outcome, Receipt, ReceiptResult, TxContext};
use crate::token::{Drc, ProvenanceEvent, TokenId, TokenRecord, UtilizationRecord};

/// HTTP-style classification of a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorStatus {
    BadRequest,
    Unauthorized,
    NotFound,
    Unavailable,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ServiceError {
    #[serde(skip)]
    pub status: ErrorStatus,
    pub code: String,
    pub message: String,
}

impl ServiceError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        let status = match code {
            "BadPassword" | "Unauthorized" => ErrorStatus::Unauthorized,
            "NotFound" | "NoSuchToken" | "UnknownBlock" | "UnknownTx" => ErrorStatus::NotFound,
            "NoQuorum" => ErrorStatus::Unavailable,
            "StoreError" | "StoreCorrupt" | "Internal" => ErrorStatus::Internal,
            _ => ErrorStatus::BadRequest,
        };
        ServiceError {
            status,
            code: code.to_owned(),
            message: message.into(),
        }
    }
}

macro_rules! coded {
    ($($ty:ty),*) => {$(
        impl From<$ty> for ServiceError {
            fn from(e: $ty) -> Self {
                ServiceError::new(e.code(), e.to_string())
            }
        }
    )*};
}

coded!(
    IdentityError,
    SubmitError,
    DocError,
    ConfigError,
    crate::state::CommandError,
    crate::token::TokenError,
    crate::application::ApplicationError
);

impl From<NodeError> for ServiceError {
    fn from(e: NodeError) -> Self {
        let code = match &e {
            NodeError::ValidatorMismatch => "ConfigInvalid",
            NodeError::NoQuorum { .. } => "NoQuorum",
            NodeError::StoreCorrupt(_) => "StoreCorrupt",
            NodeError::Io(_) => "StoreError",
        };
        ServiceError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::new("StoreError", e.to_string())
    }
}

/// Re-executes the chain file from its genesis record, touching no other
/// store.
pub fn replay_chain(config: &ServiceConfig) -> Result<ChainState, ServiceError> {
    let genesis_path = config.genesis_path();
    let genesis: GenesisConfig = serde_json::from_slice(&fs::read(&genesis_path)?)
        .map_err(|e| ServiceError::new("StoreCorrupt", format!("{}: {e}", genesis_path.display())))?;
    let bytes = fs::read(config.chain_path())?;
    crate::ledger::verify_bytes(&genesis, &bytes).map_err(|v| ServiceError::new("StoreCorrupt", v.to_string()))
}

/// Who is asking for a mutation.
#[derive(Debug, Clone)]
pub enum Credentials {
    User { user_id: String, password: String },
    AdminToken(String),
}

/// A transaction accepted into the pool, with its receipt once committed.
#[derive(Debug, Clone, Serialize)]
pub struct Submitted {
    pub tx_id: Digest,
    pub sender: Address,
    pub nonce: u64,
    pub committed: bool,
    pub receipt: Option<Receipt>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UserView {
    pub user_id: String,
    pub status: UserStatus,
    pub national_id_ref: Option<String>,
    pub active_address: Option<Address>,
    pub profile: Profile,
    pub roles: Vec<RoleAssignment>,
    pub recovery_pending: Option<Address>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TokenView {
    #[serde(flatten)]
    pub token: TokenRecord,
    pub drc: Drc,
    pub eligible_for_burn: bool,
    pub utilizations: Vec<UtilizationRecord>,
    pub land_details: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MineReport {
    pub height: u64,
    pub block_hash: Digest,
    pub round: u64,
    pub transactions: usize,
    pub receipts: Vec<Receipt>,
}

pub struct TdrService {
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
    node: RwLock<Node>,
    identity: IdentityService,
    docs: DocStore,
}

impl std::fmt::Debug for TdrService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TdrService")
            .field("chain_id", &self.config.chain_id)
            .field("height", &self.node.read().height())
            .finish_non_exhaustive()
    }
}

fn load_or_create_vault_key(path: &Path) -> Result<VaultKey, ServiceError> {
    if path.exists() {
        let text = fs::read_to_string(path)?;
        return VaultKey::from_hex(&text).map_err(|e| ServiceError::new("StoreCorrupt", e.to_string()));
    }
    let key = VaultKey::generate(&mut rand::thread_rng());
    write_atomic(path, key.to_hex().as_bytes())?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600))?;
    }
    Ok(key)
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

impl TdrService {
    pub fn open(config: ServiceConfig) -> Result<TdrService, ServiceError> {
        let mut ekyc = MockEkyc::new(&config.ekyc_seed);
        for r in &config.ekyc_residents {
            ekyc.add_resident(&r.national_id, r.profile());
        }
        Self::open_with(config, Arc::new(SystemClock), Arc::new(ekyc))
    }

    /// Opens (or initializes) every store under `config`. An existing chain
    /// file is verified end to end first.
    pub fn open_with(
        config: ServiceConfig,
        clock: Arc<dyn Clock>,
        provider: Arc<dyn EkycProvider>,
    ) -> Result<TdrService, ServiceError> {
        config.validate()?;
        fs::create_dir_all(&config.data_dir)?;
        let vault_key = load_or_create_vault_key(&config.vault_key_path())?;
        let identity = IdentityService::open(
            IdentityConfig {
                user_store: Some(config.user_store_path()),
                vault: Some(config.vault_path()),
                outbox: Some(config.outbox_path()),
                kdf: config.kdf,
                otp_ttl_millis: config.otp_ttl_secs * 1000,
                max_otp_attempts: 5,
            },
            vault_key,
            provider,
            clock.clone(),
        )?;
        let docs = DocStore::open(config.docstore_path())?;
        let genesis = Self::genesis(&config, &identity, clock.as_ref())?;
        let harness =
            ValidatorHarness::derived(&genesis.chain_id, genesis.validators.len(), &config.validator_policies);
        let node = Node::open(genesis, harness, clock.clone(), &config.chain_path())?;
        let service = TdrService {
            config,
            clock,
            node: RwLock::new(node),
            identity,
            docs,
        };
        service.reconcile()?;
        service.persist_state()?;
        Ok(service)
    }

    fn genesis(
        config: &ServiceConfig,
        identity: &IdentityService,
        clock: &dyn Clock,
    ) -> Result<GenesisConfig, ServiceError> {
        let path = config.genesis_path();
        if path.exists() {
            let genesis: GenesisConfig = serde_json::from_slice(&fs::read(&path)?)
                .map_err(|e| ServiceError::new("StoreCorrupt", format!("{}: {e}", path.display())))?;
            if genesis.validators.len() != config.validators {
                return Err(ServiceError::new(
                    "ConfigInvalid",
                    format!("chain was created with {} validators", genesis.validators.len()),
                ));
            }
            return Ok(genesis);
        }
        let password = config.admin_password.as_deref().ok_or_else(|| {
            ServiceError::new("ConfigInvalid", "admin_password is required to initialize a new chain")
        })?;
        let admin_key = identity.bootstrap_account(
            &config.admin_user,
            password,
            Profile {
                name: "Administrator".into(),
                ..Default::default()
            },
        )?;
        let genesis = GenesisConfig {
            chain_id: config.chain_id.clone(),
            timestamp: clock.now_millis(),
            validators: validator_infos(&config.chain_id, config.validators),
            admins: vec![GenesisAccount {
                user_id: config.admin_user.clone(),
                public_key: admin_key,
            }],
            sending_zones: config.sending_zones.clone(),
            receiving_zones: config.receiving_zones.clone(),
            departments: config.departments.clone(),
        };
        genesis
            .validate()
            .map_err(|e| ServiceError::new("ConfigInvalid", e.to_string()))?;
        save_json(&path, &genesis)?;
        Ok(genesis)
    }

    /// Brings off-chain account records in line with committed bindings,
    /// e.g. after a crash between a commit and its follow-up writes.
    fn reconcile(&self) -> Result<(), ServiceError> {
        let node = self.node.read();
        let state = node.state();
        for user in self.identity.users() {
            match user.status {
                UserStatus::PendingAdmin => {
                    if let Some(address) = state.accounts.address_of(&user.user_id) {
                        if self.identity.pending_approval(&user.user_id)?.address() == address {
                            self.identity.activate(&user.user_id, address)?;
                        }
                    }
                }
                UserStatus::Active => {
                    if let (Some(request), Some(bound)) = (
                        self.identity.recovery_request(&user.user_id),
                        state.accounts.address_of(&user.user_id),
                    ) {
                        if request.new_address == bound {
                            self.identity.complete_recovery(&user.user_id, bound)?;
                        }
                    }
                }
                _ => {}
            }
        }
        // Issuance snapshots are written after their block commits; restore
        // any lost to a crash in between.
        for token in state.tokens.tokens() {
            let uri = state.tokens.token_uri(token.token_id)?;
            if !self.docs.contains(&uri) {
                self.docs.put(&state.tokens.issuance_document(token.token_id)?)?;
            }
        }
        Ok(())
    }

    fn persist_state(&self) -> Result<(), ServiceError> {
        let node = self.node.read();
        write_atomic(&self.config.state_path(), &node.state().to_json_bytes())?;
        Ok(())
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn identity(&self) -> &IdentityService {
        &self.identity
    }

    pub fn docs(&self) -> &DocStore {
        &self.docs
    }

    /// Runs `f` against the committed state.
    pub fn with_state<R>(&self, f: impl FnOnce(&ChainState) -> R) -> R {
        f(self.node.read().state())
    }

    pub fn with_node<R>(&self, f: impl FnOnce(&Node) -> R) -> R {
        f(&self.node.read())
    }

    fn resolve<'a>(&'a self, credentials: &'a Credentials) -> Result<(&'a str, &'a str), ServiceError> {
        match credentials {
            Credentials::User { user_id, password } => Ok((user_id, password)),
            Credentials::AdminToken(token) => {
                let expected = self.config.admin_token.as_deref();
                let password = self.config.admin_password.as_deref();
                match (expected, password) {
                    (Some(e), Some(p)) if constant_time_eq(e.as_bytes(), token.as_bytes()) => {
                        Ok((&self.config.admin_user, p))
                    }
                    _ => Err(ServiceError::new("Unauthorized", "invalid admin token")),
                }
            }
        }
    }

    /// Admits an already-signed transaction.
    pub fn submit_transaction(&self, tx: SignedTransaction) -> Result<Submitted, ServiceError> {
        self.check_documents(&tx.command)?;
        let (tx_id, sender, nonce) = (tx.tx_id, tx.sender, tx.nonce);
        self.node.write().submit(tx)?;
        self.finish(tx_id, sender, nonce)
    }

    fn check_documents(&self, command: &Command) -> Result<(), ServiceError> {
        for uri in command.referenced_documents() {
            if !self.docs.contains(&uri) {
                return Err(ServiceError::new(
                    "UnknownDocument",
                    format!("document {uri} is not in the document store"),
                ));
            }
        }
        Ok(())
    }

    /// Signs `command` for the caller, dry-runs it on top of pending
    /// transactions, and submits it. With `mine_on_submit` the call returns
    /// after the block commits.
    pub fn execute(&self, credentials: &Credentials, command: Command) -> Result<Submitted, ServiceError> {
        let (user_id, password) = self.resolve(credentials)?;
        self.check_documents(&command)?;
        let signed = self.identity.with_signing_key(user_id, password, |key| {
            let mut node = self.node.write();
            let sender = key.address();
            let speculative = node.speculative_state();
            let nonce = node.next_nonce(&sender);
            let ctx = TxContext {
                tx_id: Digest::ZERO,
                sender,
                height: speculative.head_height + 1,
                timestamp: self.clock.now_millis(),
            };
            let mut dry = speculative;
            if dry.accounts.get(&sender).is_none() {
                return Err(ServiceError::from(SubmitError::UnknownSender(sender)));
            }
            dry.apply_command(&ctx, &command)?;
            let tx = SignedTransaction::sign(key, nonce, command, ctx.timestamp);
            node.submit(tx.clone())?;
            Ok(tx)
        })??;
        self.finish(signed.tx_id, signed.sender, signed.nonce)
    }

    fn finish(&self, tx_id: Digest, sender: Address, nonce: u64) -> Result<Submitted, ServiceError> {
        if !self.config.mine_on_submit {
            return Ok(Submitted {
                tx_id,
                sender,
                nonce,
                committed: false,
                receipt: None,
            });
        }
        self.mine()?;
        let receipt = self
            .receipt(&tx_id)
            .ok_or_else(|| ServiceError::new("Internal", "committed transaction has no receipt"))?;
        if let ReceiptResult::Failed { code, message } = &receipt.result {
            return Err(ServiceError::new(code, message.clone()));
        }
        Ok(Submitted {
            tx_id,
            sender,
            nonce,
            committed: true,
            receipt: Some(receipt),
        })
    }

    /// Produces and commits one block from the current pool.
    pub fn mine(&self) -> Result<MineReport, ServiceError> {
        let (mined, documents) = {
            let mut node = self.node.write();
            let mined = node.mine()?;
            let state = node.state();
            let documents: Vec<Value> = mined
                .receipts
                .iter()
                .filter_map(|r| match r.outcome() {
                    Some(Outcome::DrcIssued { token_id, .. }) => state.tokens.issuance_document(*token_id).ok(),
                    _ => None,
                })
                .collect();
            write_atomic(&self.config.state_path(), &state.to_json_bytes())?;
            (mined, documents)
        };
        for doc in &documents {
            self.docs.put(doc)?;
        }
        self.after_commit(&mined)?;
        Ok(MineReport {
            height: mined.block.height,
            block_hash: mined.block.hash(),
            round: mined.round,
            transactions: mined.block.transactions.len(),
            receipts: mined.receipts,
        })
    }

    /// Mines only when transactions are waiting.
    pub fn mine_pending(&self) -> Result<Option<MineReport>, ServiceError> {
        if self.node.read().pool().is_empty() {
            return Ok(None);
        }
        self.mine().map(Some)
    }

    fn after_commit(&self, mined: &MinedBlock) -> Result<(), ServiceError> {
        for receipt in &mined.receipts {
            match receipt.outcome() {
                Some(Outcome::AccountBound { user_id, address }) => {
                    if let Ok(user) = self.identity.user(user_id) {
                        if user.status == UserStatus::PendingAdmin {
                            self.identity.activate(user_id, *address)?;
                        }
                    }
                }
                Some(Outcome::AccountRebound {
                    user_id, new_address, ..
                }) if self.identity.pending_recovery(user_id, new_address).is_ok() => {
                    self.identity.complete_recovery(user_id, *new_address)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    // ---- identity workflows ----

    pub fn register(&self, details: RegistrationDetails, national_id: &str) -> Result<OnboardingRequest, ServiceError> {
        Ok(self.identity.register(details, national_id)?)
    }

    pub fn complete_kyc(&self, challenge_id: &str, otp: &str, password: &str) -> Result<UserView, ServiceError> {
        let user = self.identity.complete_ekyc(challenge_id, otp, password)?;
        Ok(self.user_view(user))
    }

    /// Binds the user's vault key on the ledger; the account turns ACTIVE
    /// when that binding commits.
    pub fn approve_user(&self, credentials: &Credentials, user_id: &str) -> Result<Submitted, ServiceError> {
        let public_key = self.identity.pending_approval(user_id)?;
        self.execute(
            credentials,
            Command::BindAccount {
                user_id: user_id.to_owned(),
                public_key,
            },
        )
    }

    pub fn request_reset(&self, user_id: &str) -> Result<OnboardingRequest, ServiceError> {
        Ok(self.identity.request_reset(user_id)?)
    }

    pub fn reset_password(
        &self,
        user_id: &str,
        otp: &str,
        new_password: &str,
    ) -> Result<RecoveryRequest, ServiceError> {
        Ok(self.identity.reset_password(user_id, otp, new_password)?)
    }

    /// Rebinds `user_id` to the key filed by its OTP-validated reset, moving
    /// roles, applications and tokens to the new address.
    pub fn recover_account(
        &self,
        credentials: &Credentials,
        user_id: &str,
        new_address: Option<Address>,
    ) -> Result<Submitted, ServiceError> {
        let request = self
            .identity
            .recovery_request(user_id)
            .ok_or_else(|| IdentityError::NoRecoveryRequest(user_id.to_owned()))?;
        let target = new_address.unwrap_or(request.new_address);
        let request = self.identity.pending_recovery(user_id, &target)?;
        self.execute(
            credentials,
            Command::RebindAccount {
                user_id: user_id.to_owned(),
                public_key: request.new_public_key,
            },
        )
    }

    pub fn set_suspended(
        &self,
        credentials: &Credentials,
        user_id: &str,
        suspended: bool,
    ) -> Result<UserView, ServiceError> {
        self.require_admin(credentials)?;
        let user = self.identity.set_suspended(user_id, suspended)?;
        Ok(self.user_view(user))
    }

    /// Checks the credentials decrypt a key that holds ADMIN on the ledger.
    fn require_admin(&self, credentials: &Credentials) -> Result<Address, ServiceError> {
        let (user_id, password) = self.resolve(credentials)?;
        let address = self.identity.with_signing_key(user_id, password, |k| k.address())?;
        if !self.with_state(|s| s.roles.is_admin(&address)) {
            return Err(ServiceError::new("NotAdmin", "caller does not hold ADMIN"));
        }
        Ok(address)
    }

    fn user_view(&self, user: UserAccount) -> UserView {
        let roles = user
            .active_address
            .map(|a| self.with_state(|s| s.roles.list().filter(|r| r.subject == a).cloned().collect()))
            .unwrap_or_default();
        let recovery_pending = self.identity.recovery_request(&user.user_id).map(|r| r.new_address);
        UserView {
            user_id: user.user_id,
            status: user.status,
            national_id_ref: user.national_id_ref,
            active_address: user.active_address,
            profile: user.profile,
            roles,
            recovery_pending,
        }
    }

    /// Accepts a hex address or the user id of a bound account.
    pub fn address_of(&self, who: &str) -> Result<Address, ServiceError> {
        if let Ok(address) = who.parse::<Address>() {
            return Ok(address);
        }
        self.with_state(|s| s.accounts.address_of(who))
            .ok_or_else(|| ServiceError::new("NotFound", format!("no bound account or address {who:?}")))
    }

    pub fn user(&self, user_id: &str) -> Result<UserView, ServiceError> {
        Ok(self.user_view(self.identity.user(user_id)?))
    }

    pub fn users(&self) -> Vec<UserView> {
        self.identity.users().into_iter().map(|u| self.user_view(u)).collect()
    }

    // ---- documents ----

    pub fn put_document(&self, json: &serde_json::Value) -> Result<ContentAddress, ServiceError> {
        Ok(self.docs.put(&Value::from_json(json)?)?)
    }

    pub fn get_document(&self, uri: &str) -> Result<serde_json::Value, ServiceError> {
        Ok(self.docs.get_uri(uri)?.to_json())
    }

    // ---- ledger queries ----

    pub fn height(&self) -> u64 {
        self.node.read().height()
    }

    pub fn state_digest(&self) -> Digest {
        self.with_state(ChainState::digest)
    }

    pub fn block(&self, height: u64) -> Result<Block, ServiceError> {
        self.node
            .read()
            .blocks()
            .get(height as usize)
            .cloned()
            .ok_or_else(|| ServiceError::new("UnknownBlock", format!("no block at height {height}")))
    }

    pub fn receipt(&self, tx_id: &Digest) -> Option<Receipt> {
        self.with_state(|s| s.receipts.get(tx_id).cloned())
    }

    pub fn pending(&self) -> Vec<SignedTransaction> {
        self.node.read().pool().to_vec()
    }

    pub fn notices(&self) -> Vec<Notice> {
        self.with_state(|s| s.applications.notices().cloned().collect())
    }

    pub fn application(&self, application_id: &str) -> Result<TdrApplication, ServiceError> {
        Ok(self.with_state(|s| s.applications.get(application_id).cloned())?)
    }

    /// Applications filtered by status and, for officer queues, by the
    /// department whose decision is pending.
    pub fn applications(&self, status: Option<ApplicationStatus>, department: Option<&str>) -> Vec<TdrApplication> {
        self.with_state(|s| {
            let pipeline = &s.params.departments;
            s.applications
                .applications()
                .filter(|a| status.is_none_or(|st| a.status == st))
                .filter(|a| {
                    department.is_none_or(|d| {
                        a.status == ApplicationStatus::Submitted
                            && pipeline.get(a.next_department_index).map(String::as_str) == Some(d)
                    })
                })
                .cloned()
                .collect()
        })
    }

    pub fn token(&self, token_id: TokenId) -> Result<TokenView, ServiceError> {
        let (token, drc, eligible, utilizations) = self.with_state(|s| {
            let token = s.tokens.token(token_id)?.clone();
            let drc = s.tokens.drc_of(token_id)?.clone();
            Ok::<_, ServiceError>((
                token,
                drc,
                s.tokens.eligible_for_burn(token_id),
                s.tokens.utilizations(token_id).to_vec(),
            ))
        })?;
        let land_details = self.docs.get(&token.uri).ok().map(|v| v.to_json());
        Ok(TokenView {
            token,
            drc,
            eligible_for_burn: eligible,
            utilizations,
            land_details,
        })
    }

    pub fn tokens_owned_by(&self, owner: &Address) -> Vec<TokenId> {
        self.with_state(|s| {
            s.tokens
                .tokens()
                .filter(|t| !t.burned && t.owner == *owner)
                .map(|t| t.token_id)
                .collect()
        })
    }

    pub fn provenance(&self, token_id: TokenId) -> Result<Vec<ProvenanceEvent>, ServiceError> {
        Ok(self.with_state(|s| s.tokens.provenance(token_id).map(<[_]>::to_vec))?)
    }

    pub fn roles(&self) -> Vec<RoleAssignment> {
        self.with_state(|s| s.roles.list().cloned().collect())
    }

    pub fn has_role(&self, address: &Address, role: Role) -> bool {
        self.with_state(|s| s.roles.has_role(address, role, None))
    }

    /// Re-verifies the in-memory chain from genesis.
    pub fn verify(&self) -> Result<Digest, ServiceError> {
        let node = self.node.read();
        let state = verify_blocks(node.genesis(), node.blocks())
            .map_err(|v| ServiceError::new("StoreCorrupt", v.to_string()))?;
        Ok(state.digest())
    }
}
