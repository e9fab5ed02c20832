//! Notices and the TDR application lifecycle.
//!
//! ```text
//! SUBMITTED ──APPROVE (not last)──▶ SUBMITTED (next department)
//!     │  └────APPROVE (last)──────▶ VERIFIED ──issue──▶ DRC_ISSUED
//!     ├─REJECT──▶ REJECTED
//!     └─SEND_BACK──▶ SENT_BACK_FOR_CORRECTION ──resubmit──▶ SUBMITTED
//! ```
//!
//! A resubmitted application resumes at the department that sent it back;
//! approvals already granted upstream are kept.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accounts::AccountRegistry;
use crate::amount::Far;
use crate::crypto::{Address, Digest};
use crate::docstore::ContentAddress;
use crate::roles::{Role, RoleRegistry};
use crate::state::TxContext;

pub const APPLICATION_PREFIX: &str = "APP";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notice {
    pub notice_id: String,
    pub sending_zone: String,
    pub land_description: ContentAddress,
    pub issued_by: Address,
    pub issued_at: u64,
    pub open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ApplicationStatus {
    Submitted,
    SentBackForCorrection,
    Rejected,
    Verified,
    DrcIssued,
}

impl ApplicationStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, ApplicationStatus::Rejected | ApplicationStatus::DrcIssued)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ApplicationStatus::Submitted => "SUBMITTED",
            ApplicationStatus::SentBackForCorrection => "SENT_BACK_FOR_CORRECTION",
            ApplicationStatus::Rejected => "REJECTED",
            ApplicationStatus::Verified => "VERIFIED",
            ApplicationStatus::DrcIssued => "DRC_ISSUED",
        }
    }
}

impl fmt::Display for ApplicationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Approve,
    Reject,
    SendBack,
}

impl FromStr for Decision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "APPROVE" => Ok(Decision::Approve),
            "REJECT" => Ok(Decision::Reject),
            "SEND_BACK" => Ok(Decision::SendBack),
            other => Err(format!("unknown decision {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub officer: Address,
    pub sub_department: String,
    pub decision: Decision,
    pub remarks: String,
    pub tx_id: Digest,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TdrApplication {
    pub application_id: String,
    pub applicant: Address,
    pub notice_id: String,
    pub land_details_uri: ContentAddress,
    pub claimed_far: Far,
    pub status: ApplicationStatus,
    pub verification_trail: Vec<VerificationRecord>,
    pub next_department_index: usize,
    pub submitted_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplicationError {
    #[error("caller does not hold ADMIN")]
    NotAdmin,
    #[error("notice {0} already exists")]
    DuplicateNotice(String),
    #[error("zone {0:?} is not a configured sending zone")]
    UnknownZone(String),
    #[error("notice {0} does not exist")]
    UnknownNotice(String),
    #[error("notice {0} is closed")]
    NoticeClosed(String),
    #[error("caller is not an onboarded USER")]
    NotOnboarded,
    #[error("claimed FAR must be positive")]
    ZeroFar,
    #[error("document {0} is not in the document store")]
    UnknownDocument(String),
    #[error("applicant already has live application {0} against this notice")]
    DuplicateApplication(String),
    #[error("application {0} not found")]
    NotFound(String),
    #[error("caller does not hold OFFICER")]
    NotOfficer,
    #[error("application is pending at department {expected:?}")]
    WrongDepartment { expected: String },
    #[error("application is {0}, not awaiting verification")]
    NotPending(ApplicationStatus),
    #[error("application is in terminal state {0}")]
    TerminalState(ApplicationStatus),
    #[error("only the applicant may resubmit")]
    NotApplicant,
    #[error("application is {0}, not sent back for correction")]
    NotSentBack(ApplicationStatus),
    #[error("application is {0}, not VERIFIED")]
    NotVerified(ApplicationStatus),
}

impl ApplicationError {
    pub fn code(&self) -> &'static str {
        use ApplicationError::*;
        match self {
            NotAdmin => "NotAdmin",
            DuplicateNotice(_) => "DuplicateNotice",
            UnknownZone(_) => "UnknownZone",
            UnknownNotice(_) => "UnknownNotice",
            NoticeClosed(_) => "NoticeClosed",
            NotOnboarded => "NotOnboarded",
            ZeroFar => "ZeroFar",
            UnknownDocument(_) => "UnknownDocument",
            DuplicateApplication(_) => "DuplicateApplication",
            NotFound(_) => "NotFound",
            NotOfficer => "NotOfficer",
            WrongDepartment { .. } => "WrongDepartment",
            NotPending(_) => "NotPending",
            TerminalState(_) => "TerminalState",
            NotApplicant => "NotApplicant",
            NotSentBack(_) => "NotSentBack",
            NotVerified(_) => "NotVerified",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicationBook {
    notices: BTreeMap<String, Notice>,
    applications: BTreeMap<String, TdrApplication>,
    next_sequence: u64,
}

/// Read-only view of the state an application command checks against.
pub struct Authority<'a> {
    pub roles: &'a RoleRegistry,
    pub accounts: &'a AccountRegistry,
    pub sending_zones: &'a [String],
    pub pipeline: &'a [String],
}

impl ApplicationBook {
    pub fn notice(&self, notice_id: &str) -> Option<&Notice> {
        self.notices.get(notice_id)
    }

    pub fn notices(&self) -> impl Iterator<Item = &Notice> {
        self.notices.values()
    }

    pub fn get(&self, application_id: &str) -> Result<&TdrApplication, ApplicationError> {
        self.applications
            .get(application_id)
            .ok_or_else(|| ApplicationError::NotFound(application_id.to_owned()))
    }

    pub fn applications(&self) -> impl Iterator<Item = &TdrApplication> {
        self.applications.values()
    }

    pub fn create_notice(
        &mut self,
        ctx: &TxContext,
        auth: &Authority<'_>,
        notice_id: &str,
        sending_zone: &str,
        land_description: ContentAddress,
    ) -> Result<&Notice, ApplicationError> {
        if !auth.roles.is_admin(&ctx.sender) {
            return Err(ApplicationError::NotAdmin);
        }
        if self.notices.contains_key(notice_id) {
            return Err(ApplicationError::DuplicateNotice(notice_id.to_owned()));
        }
        if !auth.sending_zones.iter().any(|z| z == sending_zone) {
            return Err(ApplicationError::UnknownZone(sending_zone.to_owned()));
        }
        let notice = Notice {
            notice_id: notice_id.to_owned(),
            sending_zone: sending_zone.to_owned(),
            land_description,
            issued_by: ctx.sender,
            issued_at: ctx.height,
            open: true,
        };
        Ok(self.notices.entry(notice_id.to_owned()).or_insert(notice))
    }

    pub fn close_notice(
        &mut self,
        ctx: &TxContext,
        auth: &Authority<'_>,
        notice_id: &str,
    ) -> Result<(), ApplicationError> {
        if !auth.roles.is_admin(&ctx.sender) {
            return Err(ApplicationError::NotAdmin);
        }
        let notice = self
            .notices
            .get_mut(notice_id)
            .ok_or_else(|| ApplicationError::UnknownNotice(notice_id.to_owned()))?;
        notice.open = false;
        Ok(())
    }

    pub fn submit(
        &mut self,
        ctx: &TxContext,
        auth: &Authority<'_>,
        notice_id: &str,
        land_details_uri: ContentAddress,
        claimed_far: Far,
    ) -> Result<&TdrApplication, ApplicationError> {
        if !auth.accounts.is_active(&ctx.sender) || !auth.roles.has_role(&ctx.sender, Role::User, None) {
            return Err(ApplicationError::NotOnboarded);
        }
        let notice = self
            .notices
            .get(notice_id)
            .ok_or_else(|| ApplicationError::UnknownNotice(notice_id.to_owned()))?;
        if !notice.open {
            return Err(ApplicationError::NoticeClosed(notice_id.to_owned()));
        }
        if claimed_far.is_zero() {
            return Err(ApplicationError::ZeroFar);
        }
        if let Some(live) = self
            .applications
            .values()
            .find(|a| a.applicant == ctx.sender && a.notice_id == notice_id && !a.status.is_terminal())
        {
            return Err(ApplicationError::DuplicateApplication(live.application_id.clone()));
        }
        self.next_sequence += 1;
        let application_id = format!("{APPLICATION_PREFIX}-{:06}", self.next_sequence);
        let app = TdrApplication {
            application_id: application_id.clone(),
            applicant: ctx.sender,
            notice_id: notice_id.to_owned(),
            land_details_uri,
            claimed_far,
            status: ApplicationStatus::Submitted,
            verification_trail: Vec::new(),
            next_department_index: 0,
            submitted_at: ctx.height,
        };
        Ok(self.applications.entry(application_id).or_insert(app))
    }

    pub fn verify_step(
        &mut self,
        ctx: &TxContext,
        auth: &Authority<'_>,
        application_id: &str,
        decision: Decision,
        remarks: &str,
    ) -> Result<&TdrApplication, ApplicationError> {
        let app = self
            .applications
            .get_mut(application_id)
            .ok_or_else(|| ApplicationError::NotFound(application_id.to_owned()))?;
        if !auth.roles.has_role(&ctx.sender, Role::Officer, None) {
            return Err(ApplicationError::NotOfficer);
        }
        if app.status.is_terminal() {
            return Err(ApplicationError::TerminalState(app.status));
        }
        if app.status != ApplicationStatus::Submitted {
            return Err(ApplicationError::NotPending(app.status));
        }
        let department = &auth.pipeline[app.next_department_index];
        if !auth.roles.has_role(&ctx.sender, Role::Officer, Some(department)) {
            return Err(ApplicationError::WrongDepartment {
                expected: department.clone(),
            });
        }
        app.verification_trail.push(VerificationRecord {
            officer: ctx.sender,
            sub_department: department.clone(),
            decision,
            remarks: remarks.to_owned(),
            tx_id: ctx.tx_id,
            height: ctx.height,
        });
        match decision {
            Decision::Approve => {
                app.next_department_index += 1;
                if app.next_department_index == auth.pipeline.len() {
                    app.status = ApplicationStatus::Verified;
                }
            }
            Decision::Reject => app.status = ApplicationStatus::Rejected,
            Decision::SendBack => app.status = ApplicationStatus::SentBackForCorrection,
        }
        Ok(app)
    }

    pub fn resubmit(
        &mut self,
        ctx: &TxContext,
        application_id: &str,
        new_land_details_uri: ContentAddress,
    ) -> Result<&TdrApplication, ApplicationError> {
        let app = self
            .applications
            .get_mut(application_id)
            .ok_or_else(|| ApplicationError::NotFound(application_id.to_owned()))?;
        if app.applicant != ctx.sender {
            return Err(ApplicationError::NotApplicant);
        }
        if app.status != ApplicationStatus::SentBackForCorrection {
            return Err(ApplicationError::NotSentBack(app.status));
        }
        app.land_details_uri = new_land_details_uri;
        app.status = ApplicationStatus::Submitted;
        Ok(app)
    }

    /// The only way into DRC_ISSUED; called by the token registry once the
    /// token is minted.
    pub(crate) fn mark_issued(&mut self, application_id: &str) -> Result<(), ApplicationError> {
        let app = self
            .applications
            .get_mut(application_id)
            .ok_or_else(|| ApplicationError::NotFound(application_id.to_owned()))?;
        if app.status != ApplicationStatus::Verified {
            return Err(ApplicationError::NotVerified(app.status));
        }
        app.status = ApplicationStatus::DrcIssued;
        Ok(())
    }

    /// Rewrites the applicant address after account recovery.
    pub(crate) fn migrate_applicant(&mut self, from: &Address, to: &Address) {
        for app in self.applications.values_mut() {
            if app.applicant == *from {
                app.applicant = *to;
            }
        }
    }
}
