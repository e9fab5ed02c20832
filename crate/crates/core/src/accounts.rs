//! On-ledger account bindings: which public key speaks for which platform
//! user, and whether that key is still allowed to sign.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::{Address, PublicKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub public_key: PublicKey,
    pub user_id: String,
    pub active: bool,
    pub bound_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AccountError {
    #[error("caller does not hold ADMIN")]
    NotAdmin,
    #[error("user {0} is already bound to an address")]
    AlreadyBound(String),
    #[error("address {0} is already registered")]
    AddressInUse(Address),
    #[error("user {0} has no on-ledger binding")]
    UnknownUser(String),
}

impl AccountError {
    pub fn code(&self) -> &'static str {
        match self {
            AccountError::NotAdmin => "NotAdmin",
            AccountError::AlreadyBound(_) => "AlreadyBound",
            AccountError::AddressInUse(_) => "AddressInUse",
            AccountError::UnknownUser(_) => "UnknownUser",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountRegistry {
    accounts: BTreeMap<Address, Account>,
    bindings: BTreeMap<String, Address>,
}

impl AccountRegistry {
    pub fn get(&self, address: &Address) -> Option<&Account> {
        self.accounts.get(address)
    }

    pub fn is_active(&self, address: &Address) -> bool {
        self.accounts.get(address).is_some_and(|a| a.active)
    }

    pub fn address_of(&self, user_id: &str) -> Option<Address> {
        self.bindings.get(user_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Address, &Account)> {
        self.accounts.iter()
    }

    pub fn bind(&mut self, user_id: &str, public_key: PublicKey, height: u64) -> Result<Address, AccountError> {
        if self.bindings.contains_key(user_id) {
            return Err(AccountError::AlreadyBound(user_id.to_owned()));
        }
        let address = public_key.address();
        if self.accounts.contains_key(&address) {
            return Err(AccountError::AddressInUse(address));
        }
        self.accounts.insert(
            address,
            Account {
                public_key,
                user_id: user_id.to_owned(),
                active: true,
                bound_at: height,
            },
        );
        self.bindings.insert(user_id.to_owned(), address);
        Ok(address)
    }

    /// Moves `user_id` onto a new key. The old account stays on record
    /// (its key is needed to re-verify historic signatures) but is
    /// deactivated. Returns `(old, new)`.
    pub fn rebind(
        &mut self,
        user_id: &str,
        public_key: PublicKey,
        height: u64,
    ) -> Result<(Address, Address), AccountError> {
        let old = self
            .address_of(user_id)
            .ok_or_else(|| AccountError::UnknownUser(user_id.to_owned()))?;
        let new = public_key.address();
        if self.accounts.contains_key(&new) {
            return Err(AccountError::AddressInUse(new));
        }
        if let Some(acct) = self.accounts.get_mut(&old) {
            acct.active = false;
        }
        self.accounts.insert(
            new,
            Account {
                public_key,
                user_id: user_id.to_owned(),
                active: true,
                bound_at: height,
            },
        );
        self.bindings.insert(user_id.to_owned(), new);
        Ok((old, new))
    }
}
