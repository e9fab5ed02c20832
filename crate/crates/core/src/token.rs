//! Development Rights Certificates as non-fungible tokens.
//!
//! Token ids come from a counter starting at 1 and are never reused. Live
//! tokens are tracked through two inverse maps (drc id to token id and back);
//! burning removes the pair from both while the token record and its
//! provenance stay on file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::accounts::AccountRegistry;
use crate::amount::Far;
use crate::application::{ApplicationBook, ApplicationError, ApplicationStatus};
use crate::crypto::{Address, Digest, FieldHasher};
use crate::docstore::{ContentAddress, Value};
use crate::roles::{Role, RoleRegistry};
use crate::state::TxContext;

pub type TokenId = u64;

/// One sub-divided land parcel covered by a DRC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandParcel {
    pub plot_id: String,
    pub area: Far,
    pub zone: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Drc {
    pub drc_id: Digest,
    pub initial_far: Far,
    pub far_available: Far,
    pub land_count: u64,
    pub owner: Address,
    pub lands: BTreeMap<u64, LandParcel>,
    pub sending_zone: String,
    pub issued_against: String,
}

/// Reference to the signed transaction that minted a token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuerSignature {
    pub issuer: Address,
    pub tx_id: Digest,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub token_id: TokenId,
    pub drc_id: Digest,
    pub owner: Address,
    pub uri: ContentAddress,
    pub issuer_signature: IssuerSignature,
    pub approved: Option<Address>,
    pub burned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilizationRecord {
    pub token_id: TokenId,
    pub far_used: Far,
    pub receiving_zone: String,
    pub approved_by: Address,
    pub height: u64,
    pub tx_id: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProvenanceKind {
    Mint { to: Address },
    Transfer { from: Address, to: Address },
    Utilize { far_used: Far, receiving_zone: String },
    Recovery { from: Address, to: Address },
    Burn,
}

impl ProvenanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProvenanceKind::Mint { .. } => "mint",
            ProvenanceKind::Transfer { .. } => "transfer",
            ProvenanceKind::Utilize { .. } => "utilize",
            ProvenanceKind::Recovery { .. } => "recovery",
            ProvenanceKind::Burn => "burn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEvent {
    #[serde(flatten)]
    pub kind: ProvenanceKind,
    pub tx_id: Digest,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("caller does not hold ADMIN")]
    NotAdmin,
    #[error("caller does not hold OFFICER")]
    NotOfficer,
    #[error("application {0} not found")]
    UnknownApplication(String),
    #[error("application is {0}, not VERIFIED")]
    NotVerified(ApplicationStatus),
    #[error("a token was already issued for application {application_id} (token {token_id})")]
    AlreadyIssued { application_id: String, token_id: TokenId },
    #[error("a DRC must cover at least one land parcel")]
    NoLands,
    #[error("token {0} does not exist")]
    NoSuchToken(TokenId),
    #[error("token {0} has been burned")]
    Burned(TokenId),
    #[error("caller is not the owner or approved operator of the token")]
    NotOwner,
    #[error("recipient {0} is not a registered active account")]
    UnknownRecipient(Address),
    #[error("utilization must be positive")]
    InvalidAmount,
    #[error("requested {requested} FAR but only {available} available")]
    InsufficientFar { requested: Far, available: Far },
    #[error("zone {0:?} is not a configured receiving zone")]
    UnknownZone(String),
    #[error("token still has {0} FAR available")]
    NotFullyUtilized(Far),
    #[error("token state disagrees with application store: {0}")]
    CrossCheck(String),
}

impl TokenError {
    pub fn code(&self) -> &'static str {
        use TokenError::*;
        match self {
            NotAdmin => "NotAdmin",
            NotOfficer => "NotOfficer",
            UnknownApplication(_) => "NotFound",
            NotVerified(_) => "NotVerified",
            AlreadyIssued { .. } => "AlreadyIssued",
            NoLands => "NoLands",
            NoSuchToken(_) => "NoSuchToken",
            Burned(_) => "Burned",
            NotOwner => "NotOwner",
            UnknownRecipient(_) => "UnknownRecipient",
            InvalidAmount => "InvalidAmount",
            InsufficientFar { .. } => "InsufficientFar",
            UnknownZone(_) => "UnknownZone",
            NotFullyUtilized(_) => "NotFullyUtilized",
            CrossCheck(_) => "CrossCheck",
        }
    }
}

/// Everything a token operation may consult besides the registry itself.
pub struct TokenEnv<'a> {
    pub roles: &'a RoleRegistry,
    pub accounts: &'a AccountRegistry,
    pub receiving_zones: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRegistry {
    next_token_id: TokenId,
    tokens: BTreeMap<TokenId, TokenRecord>,
    drcs: BTreeMap<Digest, Drc>,
    #[serde(rename = "mapDRCIdToTokenId")]
    drc_to_token: BTreeMap<Digest, TokenId>,
    #[serde(rename = "mapTokenIdToDRCId")]
    token_to_drc: BTreeMap<TokenId, Digest>,
    issued_for: BTreeMap<String, TokenId>,
    utilizations: BTreeMap<TokenId, Vec<UtilizationRecord>>,
    provenance: BTreeMap<TokenId, Vec<ProvenanceEvent>>,
}

impl Default for TokenRegistry {
    fn default() -> Self {
        TokenRegistry {
            next_token_id: 1,
            tokens: BTreeMap::new(),
            drcs: BTreeMap::new(),
            drc_to_token: BTreeMap::new(),
            token_to_drc: BTreeMap::new(),
            issued_for: BTreeMap::new(),
            utilizations: BTreeMap::new(),
            provenance: BTreeMap::new(),
        }
    }
}

/// `drc_id = SHA-256(application_id ‖ issuance height)`, length-prefixed.
pub fn derive_drc_id(application_id: &str, height: u64) -> Digest {
    let mut h = FieldHasher::new("tdr/drc-id/v1");
    h.str(application_id).u64(height);
    h.digest()
}

/// The land-details document stored behind a token URI: exactly the
/// `drcId`, `farAvailable`, `landCount`, `owner` and `lands` fields, as of
/// issuance.
pub fn land_details_document(drc: &Drc) -> Value {
    let lands = drc
        .lands
        .iter()
        .map(|(idx, land)| {
            (
                idx.to_string(),
                Value::map([
                    ("area", Value::Number(land.area.decimal())),
                    ("plotId", Value::str(&land.plot_id)),
                    ("zone", Value::str(&land.zone)),
                ]),
            )
        })
        .collect();
    Value::map([
        ("drcId", Value::str(drc.drc_id.to_hex())),
        ("farAvailable", Value::Number(drc.far_available.decimal())),
        ("landCount", Value::Number(drc.land_count.into())),
        ("owner", Value::str(drc.owner.to_string())),
        ("lands", Value::Map(lands)),
    ])
}

impl TokenRegistry {
    pub fn next_token_id(&self) -> TokenId {
        self.next_token_id
    }

    pub fn token(&self, token_id: TokenId) -> Result<&TokenRecord, TokenError> {
        self.tokens.get(&token_id).ok_or(TokenError::NoSuchToken(token_id))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &TokenRecord> {
        self.tokens.values()
    }

    pub fn drc(&self, drc_id: &Digest) -> Option<&Drc> {
        self.drcs.get(drc_id)
    }

    pub fn drc_of(&self, token_id: TokenId) -> Result<&Drc, TokenError> {
        let token = self.token(token_id)?;
        Ok(&self.drcs[&token.drc_id])
    }

    pub fn token_for_drc(&self, drc_id: &Digest) -> Option<TokenId> {
        self.drc_to_token.get(drc_id).copied()
    }

    pub fn drc_for_token(&self, token_id: TokenId) -> Option<Digest> {
        self.token_to_drc.get(&token_id).copied()
    }

    pub fn mappings(&self) -> (&BTreeMap<Digest, TokenId>, &BTreeMap<TokenId, Digest>) {
        (&self.drc_to_token, &self.token_to_drc)
    }

    pub fn token_for_application(&self, application_id: &str) -> Option<TokenId> {
        self.issued_for.get(application_id).copied()
    }

    pub fn utilizations(&self, token_id: TokenId) -> &[UtilizationRecord] {
        self.utilizations.get(&token_id).map(Vec::as_slice).unwrap_or_default()
    }

    fn live(&self, token_id: TokenId) -> Result<&TokenRecord, TokenError> {
        let token = self.token(token_id)?;
        if token.burned {
            return Err(TokenError::Burned(token_id));
        }
        Ok(token)
    }

    pub fn owner_of(&self, token_id: TokenId) -> Result<Address, TokenError> {
        self.live(token_id).map(|t| t.owner)
    }

    pub fn token_uri(&self, token_id: TokenId) -> Result<ContentAddress, TokenError> {
        self.token(token_id).map(|t| t.uri)
    }

    /// The land-details document as it stood at issuance, which is what
    /// the token URI addresses.
    pub fn issuance_document(&self, token_id: TokenId) -> Result<Value, TokenError> {
        let token = self.token(token_id)?;
        let mut drc = self.drcs[&token.drc_id].clone();
        drc.far_available = drc.initial_far;
        let minted_to = self
            .provenance
            .get(&token_id)
            .and_then(|events| events.first())
            .and_then(|e| match e.kind {
                ProvenanceKind::Mint { to } => Some(to),
                _ => None,
            })
            .ok_or_else(|| TokenError::CrossCheck(format!("token {token_id} has no mint event")))?;
        drc.owner = minted_to;
        Ok(land_details_document(&drc))
    }

    pub fn eligible_for_burn(&self, token_id: TokenId) -> bool {
        self.live(token_id)
            .map(|t| self.drcs[&t.drc_id].far_available.is_zero())
            .unwrap_or(false)
    }

    pub fn provenance(&self, token_id: TokenId) -> Result<&[ProvenanceEvent], TokenError> {
        self.provenance
            .get(&token_id)
            .map(Vec::as_slice)
            .ok_or(TokenError::NoSuchToken(token_id))
    }

    fn record(&mut self, token_id: TokenId, ctx: &TxContext, kind: ProvenanceKind) {
        self.provenance.entry(token_id).or_default().push(ProvenanceEvent {
            kind,
            tx_id: ctx.tx_id,
            height: ctx.height,
        });
    }

    /// Mints a token for a VERIFIED application and moves the application
    /// to DRC_ISSUED.
    pub fn issue_drc(
        &mut self,
        ctx: &TxContext,
        env: &TokenEnv<'_>,
        applications: &mut ApplicationBook,
        application_id: &str,
        lands: &[crate::token::LandParcel],
    ) -> Result<&TokenRecord, TokenError> {
        if !env.roles.is_admin(&ctx.sender) {
            return Err(TokenError::NotAdmin);
        }
        let app = applications
            .get(application_id)
            .map_err(|_| TokenError::UnknownApplication(application_id.to_owned()))?;
        if let Some(&token_id) = self.issued_for.get(application_id) {
            return Err(TokenError::AlreadyIssued {
                application_id: application_id.to_owned(),
                token_id,
            });
        }
        if app.status != ApplicationStatus::Verified {
            return Err(TokenError::NotVerified(app.status));
        }
        if lands.is_empty() {
            return Err(TokenError::NoLands);
        }
        let drc_id = derive_drc_id(application_id, ctx.height);
        if self.drc_to_token.contains_key(&drc_id) || self.drcs.contains_key(&drc_id) {
            return Err(TokenError::CrossCheck(format!("drc {drc_id} already registered")));
        }
        let sending_zone = applications
            .notice(&app.notice_id)
            .map(|n| n.sending_zone.clone())
            .ok_or_else(|| TokenError::CrossCheck(format!("notice {} missing", app.notice_id)))?;
        let drc = Drc {
            drc_id,
            initial_far: app.claimed_far,
            far_available: app.claimed_far,
            land_count: lands.len() as u64,
            owner: app.applicant,
            lands: lands.iter().enumerate().map(|(i, l)| (i as u64, l.clone())).collect(),
            sending_zone,
            issued_against: application_id.to_owned(),
        };
        let uri = ContentAddress::of(&land_details_document(&drc)).expect("land details are canonicalizable");
        applications.mark_issued(application_id).map_err(|e| match e {
            ApplicationError::NotVerified(s) => TokenError::NotVerified(s),
            other => TokenError::CrossCheck(other.to_string()),
        })?;

        let token_id = self.next_token_id;
        self.next_token_id += 1;
        let owner = drc.owner;
        self.drcs.insert(drc_id, drc);
        self.drc_to_token.insert(drc_id, token_id);
        self.token_to_drc.insert(token_id, drc_id);
        self.issued_for.insert(application_id.to_owned(), token_id);
        self.tokens.insert(
            token_id,
            TokenRecord {
                token_id,
                drc_id,
                owner,
                uri,
                issuer_signature: IssuerSignature {
                    issuer: ctx.sender,
                    tx_id: ctx.tx_id,
                    height: ctx.height,
                },
                approved: None,
                burned: false,
            },
        );
        self.record(token_id, ctx, ProvenanceKind::Mint { to: owner });
        Ok(&self.tokens[&token_id])
    }

    /// Sets or clears the single approved operator of a token.
    pub fn approve(&mut self, ctx: &TxContext, token_id: TokenId, operator: Option<Address>) -> Result<(), TokenError> {
        if self.live(token_id)?.owner != ctx.sender {
            return Err(TokenError::NotOwner);
        }
        self.tokens.get_mut(&token_id).expect("live").approved = operator;
        Ok(())
    }

    pub fn transfer_from(
        &mut self,
        ctx: &TxContext,
        env: &TokenEnv<'_>,
        from: &Address,
        to: &Address,
        token_id: TokenId,
    ) -> Result<&TokenRecord, TokenError> {
        let token = self.live(token_id)?;
        let authorized = ctx.sender == token.owner || token.approved == Some(ctx.sender);
        if token.owner != *from || !authorized {
            return Err(TokenError::NotOwner);
        }
        if !env.accounts.is_active(to) {
            return Err(TokenError::UnknownRecipient(*to));
        }
        let drc_id = token.drc_id;
        let token = self.tokens.get_mut(&token_id).expect("live");
        token.owner = *to;
        token.approved = None;
        self.drcs.get_mut(&drc_id).expect("drc").owner = *to;
        self.record(token_id, ctx, ProvenanceKind::Transfer { from: *from, to: *to });
        Ok(&self.tokens[&token_id])
    }

    pub fn utilize_drc(
        &mut self,
        ctx: &TxContext,
        env: &TokenEnv<'_>,
        token_id: TokenId,
        far_used: Far,
        receiving_zone: &str,
    ) -> Result<&UtilizationRecord, TokenError> {
        if !env.roles.has_role(&ctx.sender, Role::Officer, None) {
            return Err(TokenError::NotOfficer);
        }
        let drc_id = self.live(token_id)?.drc_id;
        if far_used.is_zero() {
            return Err(TokenError::InvalidAmount);
        }
        if !env.receiving_zones.iter().any(|z| z == receiving_zone) {
            return Err(TokenError::UnknownZone(receiving_zone.to_owned()));
        }
        let drc = self.drcs.get_mut(&drc_id).expect("drc");
        let remaining = drc
            .far_available
            .checked_sub(far_used)
            .ok_or(TokenError::InsufficientFar {
                requested: far_used,
                available: drc.far_available,
            })?;
        drc.far_available = remaining;
        self.record(
            token_id,
            ctx,
            ProvenanceKind::Utilize {
                far_used,
                receiving_zone: receiving_zone.to_owned(),
            },
        );
        let log = self.utilizations.entry(token_id).or_default();
        log.push(UtilizationRecord {
            token_id,
            far_used,
            receiving_zone: receiving_zone.to_owned(),
            approved_by: ctx.sender,
            height: ctx.height,
            tx_id: ctx.tx_id,
        });
        Ok(log.last().expect("just pushed"))
    }

    pub fn burn_drc(&mut self, ctx: &TxContext, env: &TokenEnv<'_>, token_id: TokenId) -> Result<Digest, TokenError> {
        if !env.roles.is_admin(&ctx.sender) {
            return Err(TokenError::NotAdmin);
        }
        let drc_id = self.live(token_id)?.drc_id;
        let available = self.drcs[&drc_id].far_available;
        if !available.is_zero() {
            return Err(TokenError::NotFullyUtilized(available));
        }
        let token = self.tokens.get_mut(&token_id).expect("live");
        token.burned = true;
        token.approved = None;
        self.drc_to_token.remove(&drc_id);
        self.token_to_drc.remove(&token_id);
        self.record(token_id, ctx, ProvenanceKind::Burn);
        Ok(drc_id)
    }

    /// Moves every live token owned by `from` to `to`. Returns the moved
    /// token ids in ascending order.
    pub(crate) fn migrate_owner(&mut self, ctx: &TxContext, from: &Address, to: &Address) -> Vec<TokenId> {
        let moved: Vec<TokenId> = self
            .tokens
            .values()
            .filter(|t| !t.burned && t.owner == *from)
            .map(|t| t.token_id)
            .collect();
        for &token_id in &moved {
            let token = self.tokens.get_mut(&token_id).expect("listed");
            token.owner = *to;
            token.approved = None;
            let drc_id = token.drc_id;
            self.drcs.get_mut(&drc_id).expect("drc").owner = *to;
            self.record(token_id, ctx, ProvenanceKind::Recovery { from: *from, to: *to });
        }
        moved
    }
}
