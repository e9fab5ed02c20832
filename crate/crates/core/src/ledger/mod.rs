//! Block structure, transaction envelopes, BFT-style commit and chain audit.

pub mod block;
pub mod consensus;
pub mod genesis;
pub mod node;
pub mod tx;
pub mod verify;

pub use block::{Block, Vote};
pub use consensus::{ValidatorHarness, ValidatorInfo, ValidatorSet, VotePolicy};
pub use genesis::{GenesisAccount, GenesisConfig};
pub use node::{MinedBlock, Node, NodeError, SubmitError};
pub use tx::SignedTransaction;
pub use verify::{verify_against, verify_blocks, verify_bytes, verify_text, Violation, ViolationKind};
