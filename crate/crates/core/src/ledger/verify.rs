//! Offline audit of a chain file: re-checks every link, vote and signature
//! and replays the state from genesis.

use std::fmt;

use serde::Serialize;

use crate::crypto::Digest;
use crate::ledger::block::{tx_root, Block};
use crate::ledger::genesis::GenesisConfig;
use crate::state::{ApplyError, ChainState, Inadmissible};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// A line does not parse as a block, or heights are out of sequence.
    Malformed,
    /// Line 0 is not the block derived from the genesis configuration.
    BadGenesis,
    /// `parent_hash` differs from the hash of the preceding block.
    BrokenLink,
    /// The proposer is not a member of the validator set.
    BadProposer,
    /// Fewer valid distinct votes than the quorum.
    BadQuorum,
    /// `tx_root` does not commit to the listed transactions.
    BadTxRoot,
    /// A transaction's id or signature does not verify.
    BadTxSignature,
    /// A transaction is validly signed but out of nonce order.
    BadNonce,
    /// The replayed state differs from the expected digest.
    ReplayMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{kind} at height {height}: {detail}")]
pub struct Violation {
    pub height: u64,
    pub kind: ViolationKind,
    pub detail: String,
}

impl Violation {
    fn new(height: u64, kind: ViolationKind, detail: impl Into<String>) -> Self {
        Violation {
            height,
            kind,
            detail: detail.into(),
        }
    }
}

/// Parses newline-delimited blocks. Blank lines are skipped.
pub fn parse_chain(text: &str) -> Result<Vec<Block>, Violation> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let block = Block::from_line(line)
                .map_err(|e| Violation::new(i as u64, ViolationKind::Malformed, e.to_string()))?;
            // Lines are stored in canonical form; any other spelling is an edit.
            if block.to_line() != line {
                return Err(Violation::new(
                    i as u64,
                    ViolationKind::Malformed,
                    "non-canonical block encoding",
                ));
            }
            Ok(block)
        })
        .collect()
}

/// Checks `blocks` against `genesis` and returns the replayed state.
pub fn verify_blocks(genesis: &GenesisConfig, blocks: &[Block]) -> Result<ChainState, Violation> {
    let Some(first) = blocks.first() else {
        return Err(Violation::new(0, ViolationKind::Malformed, "chain is empty"));
    };
    if *first != Block::genesis(genesis) {
        return Err(Violation::new(
            0,
            ViolationKind::BadGenesis,
            "genesis block differs from config",
        ));
    }
    let validators = genesis.validator_set();
    let mut state = ChainState::genesis(genesis);
    for (i, block) in blocks.iter().enumerate().skip(1) {
        let height = i as u64;
        if block.height != height {
            return Err(Violation::new(
                height,
                ViolationKind::Malformed,
                format!("line {i} carries height {}", block.height),
            ));
        }
        if block.parent_hash != blocks[i - 1].hash() {
            return Err(Violation::new(
                height,
                ViolationKind::BrokenLink,
                "parent hash mismatch",
            ));
        }
        if validators.get(&block.proposer).is_none() {
            return Err(Violation::new(
                height,
                ViolationKind::BadProposer,
                format!("unknown proposer {:?}", block.proposer),
            ));
        }
        let tally = validators.verify_commit(block);
        if !tally.committed() {
            return Err(Violation::new(
                height,
                ViolationKind::BadQuorum,
                format!("{} of {} required votes", tally.valid.len(), tally.quorum),
            ));
        }
        // Committed certificates carry only the votes that counted.
        if !tally.rejected.is_empty() {
            return Err(Violation::new(
                height,
                ViolationKind::BadQuorum,
                format!("invalid or duplicate votes from {:?}", tally.rejected),
            ));
        }
        if tx_root(&block.transactions) != block.tx_root {
            return Err(Violation::new(height, ViolationKind::BadTxRoot, "tx_root mismatch"));
        }
        state.apply_block(block, &validators).map_err(|e| classify(height, e))?;
    }
    Ok(state)
}

/// [`verify_blocks`] plus a comparison of the replayed state digest.
pub fn verify_against(genesis: &GenesisConfig, blocks: &[Block], expected: &Digest) -> Result<ChainState, Violation> {
    let state = verify_blocks(genesis, blocks)?;
    let actual = state.digest();
    if actual != *expected {
        return Err(Violation::new(
            state.head_height,
            ViolationKind::ReplayMismatch,
            format!("replayed state {actual}, expected {expected}"),
        ));
    }
    Ok(state)
}

pub fn verify_text(genesis: &GenesisConfig, text: &str) -> Result<ChainState, Violation> {
    verify_blocks(genesis, &parse_chain(text)?)
}

/// [`verify_text`] over raw file bytes; invalid UTF-8 is reported at the
/// line that contains it.
pub fn verify_bytes(genesis: &GenesisConfig, bytes: &[u8]) -> Result<ChainState, Violation> {
    match std::str::from_utf8(bytes) {
        Ok(text) => verify_text(genesis, text),
        Err(e) => {
            let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
            Err(Violation::new(line as u64, ViolationKind::Malformed, e.to_string()))
        }
    }
}

fn classify(height: u64, error: ApplyError) -> Violation {
    let kind = match &error {
        ApplyError::WrongParent { .. } => ViolationKind::BrokenLink,
        ApplyError::NotCommitted(_) => ViolationKind::BadQuorum,
        ApplyError::TxRootMismatch => ViolationKind::BadTxRoot,
        ApplyError::InvalidTransaction { reason, .. } => match reason {
            Inadmissible::BadNonce { .. } => ViolationKind::BadNonce,
            _ => ViolationKind::BadTxSignature,
        },
    };
    Violation::new(height, kind, error.to_string())
}
