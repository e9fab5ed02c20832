//! The registry state machine: commands, receipts, and deterministic block
//! application.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::accounts::{AccountError, AccountRegistry};
use crate::amount::Far;
use crate::application::{ApplicationBook, ApplicationError, ApplicationStatus, Authority, Decision};
use crate::crypto::{Address, Digest, PublicKey};
use crate::docstore::{canonicalize, ContentAddress, Value};
use crate::ledger::block::{tx_root, Block};
use crate::ledger::consensus::{ValidatorSet, VoteTally};
use crate::ledger::genesis::GenesisConfig;
use crate::ledger::tx::{SignedTransaction, TxError};
use crate::roles::{Role, RoleError, RoleRegistry};
use crate::token::{LandParcel, TokenEnv, TokenError, TokenId, TokenRegistry};

/// Execution context of one committed transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxContext {
    pub tx_id: Digest,
    pub sender: Address,
    pub height: u64,
    pub timestamp: u64,
}

/// Every state transition the ledger accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    BindAccount {
        user_id: String,
        public_key: PublicKey,
    },
    RebindAccount {
        user_id: String,
        public_key: PublicKey,
    },
    GrantRole {
        subject: Address,
        role: Role,
        department: Option<String>,
    },
    RevokeRole {
        subject: Address,
        role: Role,
    },
    CreateNotice {
        notice_id: String,
        sending_zone: String,
        land_description: ContentAddress,
    },
    CloseNotice {
        notice_id: String,
    },
    SubmitApplication {
        notice_id: String,
        land_details_uri: ContentAddress,
        claimed_far: Far,
    },
    VerifyStep {
        application_id: String,
        decision: Decision,
        remarks: String,
    },
    Resubmit {
        application_id: String,
        land_details_uri: ContentAddress,
    },
    IssueDrc {
        application_id: String,
        lands: Vec<LandParcel>,
    },
    Approve {
        token_id: TokenId,
        approved: Option<Address>,
    },
    TransferFrom {
        from: Address,
        to: Address,
        token_id: TokenId,
    },
    UtilizeDrc {
        token_id: TokenId,
        far_used: Far,
        receiving_zone: String,
    },
    BurnDrc {
        token_id: TokenId,
    },
}

impl Command {
    /// Canonical JSON of the tagged command.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let json = serde_json::to_value(self).expect("commands serialize");
        let value = Value::from_json(&json).expect("commands are plain data");
        canonicalize(&value).expect("commands are canonicalizable")
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::BindAccount { .. } => "bind_account",
            Command::RebindAccount { .. } => "rebind_account",
            Command::GrantRole { .. } => "grant_role",
            Command::RevokeRole { .. } => "revoke_role",
            Command::CreateNotice { .. } => "create_notice",
            Command::CloseNotice { .. } => "close_notice",
            Command::SubmitApplication { .. } => "submit_application",
            Command::VerifyStep { .. } => "verify_step",
            Command::Resubmit { .. } => "resubmit",
            Command::IssueDrc { .. } => "issue_drc",
            Command::Approve { .. } => "approve",
            Command::TransferFrom { .. } => "transfer_from",
            Command::UtilizeDrc { .. } => "utilize_drc",
            Command::BurnDrc { .. } => "burn_drc",
        }
    }

    /// Content addresses the command expects to resolve in the document
    /// store.
    pub fn referenced_documents(&self) -> Vec<ContentAddress> {
        match self {
            Command::CreateNotice { land_description, .. } => vec![*land_description],
            Command::SubmitApplication { land_details_uri, .. } | Command::Resubmit { land_details_uri, .. } => {
                vec![*land_details_uri]
            }
            _ => Vec::new(),
        }
    }
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    AccountBound {
        user_id: String,
        address: Address,
    },
    AccountRebound {
        user_id: String,
        old_address: Address,
        new_address: Address,
        tokens: Vec<TokenId>,
    },
    RoleGranted {
        subject: Address,
        role: Role,
        changed: bool,
    },
    RoleRevoked {
        subject: Address,
        role: Role,
    },
    NoticeCreated {
        notice_id: String,
    },
    NoticeClosed {
        notice_id: String,
    },
    ApplicationUpdated {
        application_id: String,
        status: ApplicationStatus,
        trail_length: usize,
    },
    DrcIssued {
        token_id: TokenId,
        drc_id: Digest,
        uri: ContentAddress,
        owner: Address,
    },
    OperatorApproved {
        token_id: TokenId,
        approved: Option<Address>,
    },
    Transferred {
        token_id: TokenId,
        from: Address,
        to: Address,
    },
    Utilized {
        token_id: TokenId,
        far_used: Far,
        far_available: Far,
        eligible_for_burn: bool,
    },
    Burned {
        token_id: TokenId,
        drc_id: Digest,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommandError {
    #[error("sender account is not active")]
    InactiveSender,
    #[error(transparent)]
    Account(#[from] AccountError),
    #[error(transparent)]
    Role(#[from] RoleError),
    #[error(transparent)]
    Application(#[from] ApplicationError),
    #[error(transparent)]
    Token(#[from] TokenError),
}

impl CommandError {
    pub fn code(&self) -> &'static str {
        match self {
            CommandError::InactiveSender => "InactiveSender",
            CommandError::Account(e) => e.code(),
            CommandError::Role(e) => e.code(),
            CommandError::Application(e) => e.code(),
            CommandError::Token(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReceiptResult {
    Success { outcome: Outcome },
    Failed { code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_id: Digest,
    pub height: u64,
    pub index: usize,
    pub sender: Address,
    pub command: String,
    #[serde(flatten)]
    pub result: ReceiptResult,
}

impl Receipt {
    pub fn is_success(&self) -> bool {
        matches!(self.result, ReceiptResult::Success { .. })
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        match &self.result {
            ReceiptResult::Success { outcome } => Some(outcome),
            ReceiptResult::Failed { .. } => None,
        }
    }

    pub fn failure_code(&self) -> Option<&str> {
        match &self.result {
            ReceiptResult::Failed { code, .. } => Some(code),
            ReceiptResult::Success { .. } => None,
        }
    }
}

/// Chain-wide parameters copied from genesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub chain_id: String,
    pub sending_zones: Vec<String>,
    pub receiving_zones: Vec<String>,
    pub departments: Vec<String>,
}

/// Why a transaction may not enter a block.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Inadmissible {
    #[error("sender {0} is not a registered account")]
    UnknownSender(Address),
    #[error("sender {0} is not active")]
    InactiveSender(Address),
    #[error("invalid transaction: {0}")]
    BadSignature(TxError),
    #[error("expected nonce {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("block at height {height} does not extend head {head_height}")]
    WrongParent { height: u64, head_height: u64 },
    #[error("block has {} of {} required votes", .0.valid.len(), .0.quorum)]
    NotCommitted(VoteTally),
    #[error("tx_root does not match the block's transactions")]
    TxRootMismatch,
    #[error("transaction {index}: {reason}")]
    InvalidTransaction { index: usize, reason: Inadmissible },
}

/// Full replicated state. Every map is ordered, so the serialized form (and
/// hence [`ChainState::digest`]) is a pure function of the applied blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    pub head_height: u64,
    pub head_hash: Digest,
    pub params: ChainParams,
    pub account_nonces: BTreeMap<Address, u64>,
    pub accounts: AccountRegistry,
    pub roles: RoleRegistry,
    pub applications: ApplicationBook,
    pub tokens: TokenRegistry,
    pub receipts: BTreeMap<Digest, Receipt>,
}

impl ChainState {
    pub fn genesis(config: &GenesisConfig) -> ChainState {
        let mut accounts = AccountRegistry::default();
        let mut roles = RoleRegistry::default();
        for admin in &config.admins {
            let address = accounts
                .bind(&admin.user_id, admin.public_key, 0)
                .expect("genesis admins are unique");
            roles.seed(address, Role::Admin, address, 0);
        }
        ChainState {
            head_height: 0,
            head_hash: Block::genesis(config).hash(),
            params: ChainParams {
                chain_id: config.chain_id.clone(),
                sending_zones: config.sending_zones.clone(),
                receiving_zones: config.receiving_zones.clone(),
                departments: config.departments.clone(),
            },
            account_nonces: BTreeMap::new(),
            accounts,
            roles,
            applications: ApplicationBook::default(),
            tokens: TokenRegistry::default(),
            receipts: BTreeMap::new(),
        }
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("state serializes")
    }

    pub fn digest(&self) -> Digest {
        Digest::of(&self.to_json_bytes())
    }

    pub fn nonce_of(&self, address: &Address) -> u64 {
        self.account_nonces.get(address).copied().unwrap_or(0)
    }

    /// Signature and sender checks for a transaction, given the nonce the
    /// sender is expected to use next.
    pub fn check_admissible(&self, tx: &SignedTransaction, expected_nonce: u64) -> Result<(), Inadmissible> {
        let account = self
            .accounts
            .get(&tx.sender)
            .ok_or(Inadmissible::UnknownSender(tx.sender))?;
        tx.verify(&account.public_key).map_err(Inadmissible::BadSignature)?;
        if !account.active {
            return Err(Inadmissible::InactiveSender(tx.sender));
        }
        if tx.nonce != expected_nonce {
            return Err(Inadmissible::BadNonce {
                expected: expected_nonce,
                got: tx.nonce,
            });
        }
        Ok(())
    }

    /// Runs one command against the state. On error the state is unchanged.
    pub fn apply_command(&mut self, ctx: &TxContext, command: &Command) -> Result<Outcome, CommandError> {
        if !self.accounts.is_active(&ctx.sender) {
            return Err(CommandError::InactiveSender);
        }
        let params = &self.params;
        match command {
            Command::BindAccount { user_id, public_key } => {
                if !self.roles.is_admin(&ctx.sender) {
                    return Err(AccountError::NotAdmin.into());
                }
                let address = self.accounts.bind(user_id, *public_key, ctx.height)?;
                self.roles.seed(address, Role::User, ctx.sender, ctx.height);
                Ok(Outcome::AccountBound {
                    user_id: user_id.clone(),
                    address,
                })
            }
            Command::RebindAccount { user_id, public_key } => {
                if !self.roles.is_admin(&ctx.sender) {
                    return Err(AccountError::NotAdmin.into());
                }
                let (old, new) = self.accounts.rebind(user_id, *public_key, ctx.height)?;
                self.roles.migrate(&old, &new);
                self.applications.migrate_applicant(&old, &new);
                let tokens = self.tokens.migrate_owner(ctx, &old, &new);
                Ok(Outcome::AccountRebound {
                    user_id: user_id.clone(),
                    old_address: old,
                    new_address: new,
                    tokens,
                })
            }
            Command::GrantRole {
                subject,
                role,
                department,
            } => {
                let changed = self.roles.grant(
                    &ctx.sender,
                    subject,
                    *role,
                    department.as_deref(),
                    ctx.height,
                    &self.accounts,
                    &params.departments,
                )?;
                Ok(Outcome::RoleGranted {
                    subject: *subject,
                    role: *role,
                    changed,
                })
            }
            Command::RevokeRole { subject, role } => {
                self.roles.revoke(&ctx.sender, subject, *role)?;
                Ok(Outcome::RoleRevoked {
                    subject: *subject,
                    role: *role,
                })
            }
            Command::CreateNotice {
                notice_id,
                sending_zone,
                land_description,
            } => {
                let auth = Authority {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    sending_zones: &params.sending_zones,
                    pipeline: &params.departments,
                };
                self.applications
                    .create_notice(ctx, &auth, notice_id, sending_zone, *land_description)?;
                Ok(Outcome::NoticeCreated {
                    notice_id: notice_id.clone(),
                })
            }
            Command::CloseNotice { notice_id } => {
                let auth = Authority {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    sending_zones: &params.sending_zones,
                    pipeline: &params.departments,
                };
                self.applications.close_notice(ctx, &auth, notice_id)?;
                Ok(Outcome::NoticeClosed {
                    notice_id: notice_id.clone(),
                })
            }
            Command::SubmitApplication {
                notice_id,
                land_details_uri,
                claimed_far,
            } => {
                let auth = Authority {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    sending_zones: &params.sending_zones,
                    pipeline: &params.departments,
                };
                let app = self
                    .applications
                    .submit(ctx, &auth, notice_id, *land_details_uri, *claimed_far)?;
                Ok(app_outcome(app))
            }
            Command::VerifyStep {
                application_id,
                decision,
                remarks,
            } => {
                let auth = Authority {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    sending_zones: &params.sending_zones,
                    pipeline: &params.departments,
                };
                let app = self
                    .applications
                    .verify_step(ctx, &auth, application_id, *decision, remarks)?;
                Ok(app_outcome(app))
            }
            Command::Resubmit {
                application_id,
                land_details_uri,
            } => {
                let app = self.applications.resubmit(ctx, application_id, *land_details_uri)?;
                Ok(app_outcome(app))
            }
            Command::IssueDrc { application_id, lands } => {
                let env = TokenEnv {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    receiving_zones: &params.receiving_zones,
                };
                let token = self
                    .tokens
                    .issue_drc(ctx, &env, &mut self.applications, application_id, lands)?;
                Ok(Outcome::DrcIssued {
                    token_id: token.token_id,
                    drc_id: token.drc_id,
                    uri: token.uri,
                    owner: token.owner,
                })
            }
            Command::Approve { token_id, approved } => {
                self.tokens.approve(ctx, *token_id, *approved)?;
                Ok(Outcome::OperatorApproved {
                    token_id: *token_id,
                    approved: *approved,
                })
            }
            Command::TransferFrom { from, to, token_id } => {
                let env = TokenEnv {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    receiving_zones: &params.receiving_zones,
                };
                self.tokens.transfer_from(ctx, &env, from, to, *token_id)?;
                Ok(Outcome::Transferred {
                    token_id: *token_id,
                    from: *from,
                    to: *to,
                })
            }
            Command::UtilizeDrc {
                token_id,
                far_used,
                receiving_zone,
            } => {
                let env = TokenEnv {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    receiving_zones: &params.receiving_zones,
                };
                self.tokens
                    .utilize_drc(ctx, &env, *token_id, *far_used, receiving_zone)?;
                let far_available = self.tokens.drc_of(*token_id)?.far_available;
                Ok(Outcome::Utilized {
                    token_id: *token_id,
                    far_used: *far_used,
                    far_available,
                    eligible_for_burn: far_available.is_zero(),
                })
            }
            Command::BurnDrc { token_id } => {
                let env = TokenEnv {
                    roles: &self.roles,
                    accounts: &self.accounts,
                    receiving_zones: &params.receiving_zones,
                };
                let drc_id = self.tokens.burn_drc(ctx, &env, *token_id)?;
                Ok(Outcome::Burned {
                    token_id: *token_id,
                    drc_id,
                })
            }
        }
    }

    /// Applies a committed block on top of the current head.
    ///
    /// Every transaction must be admissible (known sender, valid signature,
    /// next nonce) or the whole block is refused. Once admitted, commands
    /// that fail their own preconditions produce a failed receipt and leave
    /// the state untouched, but still consume their nonce.
    pub fn apply_block(&mut self, block: &Block, validators: &ValidatorSet) -> Result<Vec<Receipt>, ApplyError> {
        if block.height != self.head_height + 1 || block.parent_hash != self.head_hash {
            return Err(ApplyError::WrongParent {
                height: block.height,
                head_height: self.head_height,
            });
        }
        let tally = validators.verify_commit(block);
        if !tally.committed() {
            return Err(ApplyError::NotCommitted(tally));
        }
        if tx_root(&block.transactions) != block.tx_root {
            return Err(ApplyError::TxRootMismatch);
        }
        let mut nonces: BTreeMap<Address, u64> = BTreeMap::new();
        for (index, tx) in block.transactions.iter().enumerate() {
            let next = nonces
                .get(&tx.sender)
                .copied()
                .unwrap_or_else(|| self.nonce_of(&tx.sender))
                + 1;
            // Activity is judged when the command runs, not up front.
            match self.check_admissible(tx, next) {
                Ok(()) | Err(Inadmissible::InactiveSender(_)) => {}
                Err(reason) => return Err(ApplyError::InvalidTransaction { index, reason }),
            }
            nonces.insert(tx.sender, next);
        }

        let mut receipts = Vec::with_capacity(block.transactions.len());
        for (index, tx) in block.transactions.iter().enumerate() {
            let ctx = TxContext {
                tx_id: tx.tx_id,
                sender: tx.sender,
                height: block.height,
                timestamp: tx.timestamp,
            };
            let result = match self.apply_command(&ctx, &tx.command) {
                Ok(outcome) => ReceiptResult::Success { outcome },
                Err(e) => ReceiptResult::Failed {
                    code: e.code().to_owned(),
                    message: e.to_string(),
                },
            };
            self.account_nonces.insert(tx.sender, tx.nonce);
            let receipt = Receipt {
                tx_id: tx.tx_id,
                height: block.height,
                index,
                sender: tx.sender,
                command: tx.command.name().to_owned(),
                result,
            };
            self.receipts.insert(tx.tx_id, receipt.clone());
            receipts.push(receipt);
        }
        self.head_height = block.height;
        self.head_hash = block.hash();
        Ok(receipts)
    }
}

fn app_outcome(app: &crate::application::TdrApplication) -> Outcome {
    Outcome::ApplicationUpdated {
        application_id: app.application_id.clone(),
        status: app.status,
        trail_length: app.verification_trail.len(),
    }
}
