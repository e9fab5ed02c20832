//! Role-based access control consulted by every privileged command.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accounts::AccountRegistry;
use crate::crypto::Address;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Admin,
    Officer,
    User,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Admin => "ADMIN",
            Role::Officer => "OFFICER",
            Role::User => "USER",
        })
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ADMIN" => Ok(Role::Admin),
            "OFFICER" => Ok(Role::Officer),
            "USER" => Ok(Role::User),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub subject: Address,
    pub role: Role,
    pub sub_department: Option<String>,
    pub granted_by: Address,
    pub granted_at: u64,
}

impl RoleAssignment {
    fn key(&self) -> (Address, Role, Option<&str>) {
        (self.subject, self.role, self.sub_department.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoleError {
    #[error("caller does not hold ADMIN")]
    NotAdmin,
    #[error("subject {0} is not a registered account")]
    UnknownSubject(Address),
    #[error("OFFICER grants must name a sub-department")]
    MissingDepartment,
    #[error("department {0:?} is not in the verification pipeline")]
    UnknownDepartment(String),
    #[error("only OFFICER assignments carry a department")]
    UnexpectedDepartment,
    #[error("{subject} does not hold {role}")]
    NoSuchAssignment { subject: Address, role: Role },
    #[error("the last ADMIN cannot be revoked")]
    LastAdmin,
}

impl RoleError {
    pub fn code(&self) -> &'static str {
        match self {
            RoleError::NotAdmin => "NotAdmin",
            RoleError::UnknownSubject(_) => "UnknownSubject",
            RoleError::MissingDepartment => "MissingDepartment",
            RoleError::UnknownDepartment(_) => "UnknownDepartment",
            RoleError::UnexpectedDepartment => "UnexpectedDepartment",
            RoleError::NoSuchAssignment { .. } => "NoSuchAssignment",
            RoleError::LastAdmin => "LastAdmin",
        }
    }
}

/// The set of live assignments. Ordering is total so serialized snapshots are
/// stable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRegistry {
    assignments: BTreeSet<RoleAssignment>,
}

impl RoleRegistry {
    /// Records an assignment without any caller check: genesis admins and
    /// the USER role that comes with an account binding.
    pub(crate) fn seed(&mut self, subject: Address, role: Role, granted_by: Address, height: u64) {
        self.assignments.insert(RoleAssignment {
            subject,
            role,
            sub_department: None,
            granted_by,
            granted_at: height,
        });
    }

    pub fn has_role(&self, subject: &Address, role: Role, sub_department: Option<&str>) -> bool {
        self.assignments.iter().any(|a| {
            a.subject == *subject
                && a.role == role
                && sub_department.is_none_or(|d| a.sub_department.as_deref() == Some(d))
        })
    }

    pub fn is_admin(&self, subject: &Address) -> bool {
        self.has_role(subject, Role::Admin, None)
    }

    pub fn departments_of(&self, subject: &Address) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|a| a.subject == *subject && a.role == Role::Officer)
            .filter_map(|a| a.sub_department.as_deref())
            .collect()
    }

    pub fn list(&self) -> impl Iterator<Item = &RoleAssignment> {
        self.assignments.iter()
    }

    /// Returns `true` when the assignment is new, `false` for an idempotent
    /// re-grant.
    #[allow(clippy::too_many_arguments)]
    pub fn grant(
        &mut self,
        caller: &Address,
        subject: &Address,
        role: Role,
        sub_department: Option<&str>,
        height: u64,
        accounts: &AccountRegistry,
        pipeline: &[String],
    ) -> Result<bool, RoleError> {
        if !self.is_admin(caller) {
            return Err(RoleError::NotAdmin);
        }
        if accounts.get(subject).is_none() {
            return Err(RoleError::UnknownSubject(*subject));
        }
        match (role, sub_department) {
            (Role::Officer, None) => return Err(RoleError::MissingDepartment),
            (Role::Officer, Some(d)) if !pipeline.iter().any(|p| p == d) => {
                return Err(RoleError::UnknownDepartment(d.to_owned()))
            }
            (Role::Admin | Role::User, Some(_)) => return Err(RoleError::UnexpectedDepartment),
            _ => {}
        }
        let assignment = RoleAssignment {
            subject: *subject,
            role,
            sub_department: sub_department.map(str::to_owned),
            granted_by: *caller,
            granted_at: height,
        };
        if self.assignments.iter().any(|a| a.key() == assignment.key()) {
            return Ok(false);
        }
        self.assignments.insert(assignment);
        Ok(true)
    }

    /// Removes every assignment of `role` held by `subject`.
    pub fn revoke(&mut self, caller: &Address, subject: &Address, role: Role) -> Result<(), RoleError> {
        if !self.is_admin(caller) {
            return Err(RoleError::NotAdmin);
        }
        if !self.has_role(subject, role, None) {
            return Err(RoleError::NoSuchAssignment {
                subject: *subject,
                role,
            });
        }
        if role == Role::Admin {
            let admins: BTreeSet<_> = self
                .assignments
                .iter()
                .filter(|a| a.role == Role::Admin)
                .map(|a| a.subject)
                .collect();
            if admins.len() == 1 {
                return Err(RoleError::LastAdmin);
            }
        }
        self.assignments.retain(|a| !(a.subject == *subject && a.role == role));
        Ok(())
    }

    /// Carries every assignment held by `from` over to `to` (account
    /// recovery).
    pub fn migrate(&mut self, from: &Address, to: &Address) {
        let moved: Vec<_> = self
            .assignments
            .iter()
            .filter(|a| a.subject == *from)
            .cloned()
            .collect();
        for mut a in moved {
            self.assignments.remove(&a);
            a.subject = *to;
            self.assignments.insert(a);
        }
    }
}
