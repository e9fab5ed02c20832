//! Hash-chained blocks.

use serde::{Deserialize, Serialize};

use crate::crypto::{Digest, FieldHasher, Signature};
use crate::ledger::genesis::GenesisConfig;
use crate::ledger::tx::SignedTransaction;

pub type ValidatorId = String;

pub const GENESIS_PROPOSER: &str = "genesis";

/// A validator's signature over a block hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vote {
    pub validator: ValidatorId,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub parent_hash: Digest,
    pub tx_root: Digest,
    pub transactions: Vec<SignedTransaction>,
    pub proposer: ValidatorId,
    pub timestamp: u64,
    pub commit_votes: Vec<Vote>,
}

pub fn tx_root(transactions: &[SignedTransaction]) -> Digest {
    let mut h = FieldHasher::new("tdr/tx-root/v1");
    h.u64(transactions.len() as u64);
    for tx in transactions {
        h.field(tx.tx_id.as_bytes());
    }
    h.digest()
}

/// Bytes a validator signs to vote for a block.
pub fn vote_message(block_hash: &Digest) -> Vec<u8> {
    let mut h = FieldHasher::new("tdr/vote/v1");
    h.field(block_hash.as_bytes());
    h.into_bytes()
}

impl Block {
    /// Genesis carries no transactions; its `tx_root` commits to the genesis
    /// configuration instead, so a swapped config breaks the chain.
    pub fn genesis(config: &GenesisConfig) -> Block {
        Block {
            height: 0,
            parent_hash: Digest::ZERO,
            tx_root: config.digest(),
            transactions: Vec::new(),
            proposer: GENESIS_PROPOSER.to_owned(),
            timestamp: config.timestamp,
            commit_votes: Vec::new(),
        }
    }

    /// Unsigned block on top of `parent`.
    pub fn new(parent: &Block, transactions: Vec<SignedTransaction>, proposer: ValidatorId, timestamp: u64) -> Block {
        Block {
            height: parent.height + 1,
            parent_hash: parent.hash(),
            tx_root: tx_root(&transactions),
            transactions,
            proposer,
            timestamp,
            commit_votes: Vec::new(),
        }
    }

    /// `SHA-256(height ‖ parent_hash ‖ tx_root ‖ proposer ‖ timestamp)`.
    pub fn hash(&self) -> Digest {
        let mut h = FieldHasher::new("tdr/block/v1");
        h.u64(self.height)
            .field(self.parent_hash.as_bytes())
            .field(self.tx_root.as_bytes())
            .str(&self.proposer)
            .u64(self.timestamp);
        h.digest()
    }

    pub fn is_genesis(&self) -> bool {
        self.height == 0
    }

    /// One line of the chain file.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("blocks serialize")
    }

    pub fn from_line(line: &str) -> Result<Block, serde_json::Error> {
        serde_json::from_str(line)
    }
}
