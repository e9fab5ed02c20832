//! Chain parameters fixed at genesis.

use serde::{Deserialize, Serialize};

use crate::crypto::{Digest, PublicKey};
use crate::docstore::{canonicalize, Value};
use crate::ledger::consensus::{ValidatorInfo, ValidatorSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisAccount {
    pub user_id: String,
    pub public_key: PublicKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisConfig {
    pub chain_id: String,
    pub timestamp: u64,
    pub validators: Vec<ValidatorInfo>,
    pub admins: Vec<GenesisAccount>,
    pub sending_zones: Vec<String>,
    pub receiving_zones: Vec<String>,
    pub departments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenesisError {
    #[error("genesis needs at least one {0}")]
    Empty(&'static str),
    #[error("duplicate {0} {1:?}")]
    Duplicate(&'static str, String),
}

fn check_unique<'a>(what: &'static str, items: impl Iterator<Item = &'a str>) -> Result<(), GenesisError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut any = false;
    for item in items {
        any = true;
        if !seen.insert(item) {
            return Err(GenesisError::Duplicate(what, item.to_owned()));
        }
    }
    if any {
        Ok(())
    } else {
        Err(GenesisError::Empty(what))
    }
}

impl GenesisConfig {
    pub fn validate(&self) -> Result<(), GenesisError> {
        check_unique("validator", self.validators.iter().map(|v| v.id.as_str()))?;
        check_unique("admin", self.admins.iter().map(|a| a.user_id.as_str()))?;
        check_unique("sending zone", self.sending_zones.iter().map(String::as_str))?;
        check_unique("receiving zone", self.receiving_zones.iter().map(String::as_str))?;
        check_unique("department", self.departments.iter().map(String::as_str))?;
        Ok(())
    }

    pub fn validator_set(&self) -> ValidatorSet {
        ValidatorSet::new(self.validators.clone())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> Digest {
        let json = serde_json::to_value(self).expect("genesis serializes");
        let value = Value::from_json(&json).expect("genesis is plain data");
        Digest::of(&canonicalize(&value).expect("canonicalizable"))
    }
}
