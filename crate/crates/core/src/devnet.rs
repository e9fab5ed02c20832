//! A self-contained network with derived keys, for tests, demos and local
//! runs.

use std::sync::Arc;

use crate::clock::{Clock, ManualClock};
use crate::crypto::{Address, Digest, SigningKey};
use crate::ledger::consensus::{validator_key, ValidatorHarness, ValidatorInfo, VotePolicy};
use crate::ledger::genesis::{GenesisAccount, GenesisConfig};
use crate::ledger::node::{MinedBlock, Node, SubmitError};
use crate::ledger::tx::SignedTransaction;
use crate::roles::Role;
use crate::state::{Command, Receipt};

pub const DEVNET_CHAIN_ID: &str = "tdr-devnet";
pub const DEVNET_DEPARTMENTS: [&str; 3] = ["planning", "survey", "legal"];
pub const DEVNET_SENDING_ZONES: [&str; 2] = ["S1", "S2"];
pub const DEVNET_RECEIVING_ZONES: [&str; 2] = ["R1", "R2"];
pub const DEVNET_ADMIN: &str = "admin";

pub fn validator_infos(chain_id: &str, n: usize) -> Vec<ValidatorInfo> {
    (0..n)
        .map(|i| ValidatorInfo {
            id: format!("validator-{i}"),
            public_key: validator_key(chain_id, i).public_key(),
        })
        .collect()
}

pub fn admin_key(chain_id: &str) -> SigningKey {
    SigningKey::derive(&format!("{chain_id}/admin"))
}

/// Genesis with `n` derived validators, one derived admin, and the default
/// zones and departments.
pub fn genesis(chain_id: &str, n: usize) -> GenesisConfig {
    GenesisConfig {
        chain_id: chain_id.to_owned(),
        timestamp: 1_700_000_000_000,
        validators: validator_infos(chain_id, n),
        admins: vec![GenesisAccount {
            user_id: DEVNET_ADMIN.to_owned(),
            public_key: admin_key(chain_id).public_key(),
        }],
        sending_zones: DEVNET_SENDING_ZONES.map(String::from).to_vec(),
        receiving_zones: DEVNET_RECEIVING_ZONES.map(String::from).to_vec(),
        departments: DEVNET_DEPARTMENTS.map(String::from).to_vec(),
    }
}

/// An in-memory node plus the keys that drive it.
pub struct Devnet {
    pub node: Node,
    pub admin: SigningKey,
    pub clock: Arc<ManualClock>,
}

impl Devnet {
    pub fn new(validators: usize, policies: &[VotePolicy]) -> Devnet {
        let config = genesis(DEVNET_CHAIN_ID, validators);
        let clock = Arc::new(ManualClock::new(config.timestamp + 1_000));
        let harness = ValidatorHarness::derived(DEVNET_CHAIN_ID, validators, policies);
        let node = Node::in_memory(config, harness, clock.clone()).expect("validators match");
        Devnet {
            node,
            admin: admin_key(DEVNET_CHAIN_ID),
            clock,
        }
    }

    pub fn sign(&self, key: &SigningKey, command: Command) -> SignedTransaction {
        let nonce = self.node.next_nonce(&key.address());
        SignedTransaction::sign(key, nonce, command, self.clock.now_millis())
    }

    pub fn submit(&mut self, key: &SigningKey, command: Command) -> Result<Digest, SubmitError> {
        let tx = self.sign(key, command);
        self.node.submit(tx)
    }

    pub fn mine(&mut self) -> MinedBlock {
        self.node.mine().expect("devnet reaches quorum")
    }

    /// Submits one command and mines it into its own block.
    pub fn exec(&mut self, key: &SigningKey, command: Command) -> Receipt {
        let id = self.submit(key, command).expect("admissible");
        let mined = self.mine();
        mined
            .receipts
            .into_iter()
            .find(|r| r.tx_id == id)
            .expect("receipt for submitted tx")
    }

    /// Binds a fresh derived key for `user_id` and returns it.
    pub fn onboard(&mut self, user_id: &str) -> SigningKey {
        let key = SigningKey::derive(&format!("{DEVNET_CHAIN_ID}/user/{user_id}"));
        let admin = self.admin.clone();
        let receipt = self.exec(
            &admin,
            Command::BindAccount {
                user_id: user_id.to_owned(),
                public_key: key.public_key(),
            },
        );
        assert!(receipt.is_success(), "bind {user_id}: {receipt:?}");
        key
    }

    /// Onboards one officer per pipeline department.
    pub fn onboard_officers(&mut self) -> Vec<SigningKey> {
        let admin = self.admin.clone();
        DEVNET_DEPARTMENTS
            .iter()
            .map(|dept| {
                let key = self.onboard(&format!("officer-{dept}"));
                let receipt = self.exec(
                    &admin,
                    Command::GrantRole {
                        subject: key.address(),
                        role: Role::Officer,
                        department: Some((*dept).to_owned()),
                    },
                );
                assert!(receipt.is_success(), "grant {dept}: {receipt:?}");
                key
            })
            .collect()
    }

    pub fn address_of(&self, user_id: &str) -> Option<Address> {
        self.node.state().accounts.address_of(user_id)
    }
}
