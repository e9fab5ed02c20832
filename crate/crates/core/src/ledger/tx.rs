//! Signed transaction envelope.

use serde::{Deserialize, Serialize};

use crate::crypto::{Address, Digest, FieldHasher, PublicKey, Signature, SigningKey};
use crate::state::Command;

/// A state-transition command signed by its sender.
///
/// `tx_id` is the SHA-256 of the canonical payload, which is the
/// length-prefixed concatenation of `sender`, `nonce`, the canonical JSON of
/// `command`, and `timestamp`. The signature covers the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignedTransaction {
    pub tx_id: Digest,
    pub sender: Address,
    pub nonce: u64,
    pub command: Command,
    pub signature: Signature,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TxError {
    #[error("tx_id does not match the canonical payload")]
    IdMismatch,
    #[error("signature does not verify against the sender's key")]
    BadSignature,
    #[error("public key does not hash to the sender address")]
    KeyMismatch,
}

pub fn payload_bytes(sender: &Address, nonce: u64, command: &Command, timestamp: u64) -> Vec<u8> {
    let mut h = FieldHasher::new("tdr/tx/v1");
    h.field(&sender.0)
        .u64(nonce)
        .field(&command.canonical_bytes())
        .u64(timestamp);
    h.into_bytes()
}

impl SignedTransaction {
    pub fn sign(key: &SigningKey, nonce: u64, command: Command, timestamp: u64) -> Self {
        let sender = key.address();
        let payload = payload_bytes(&sender, nonce, &command, timestamp);
        SignedTransaction {
            tx_id: Digest::of(&payload),
            sender,
            nonce,
            signature: key.sign(&payload),
            command,
            timestamp,
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        payload_bytes(&self.sender, self.nonce, &self.command, self.timestamp)
    }

    pub fn computed_id(&self) -> Digest {
        Digest::of(&self.payload())
    }

    /// Checks the id and the signature against the key registered for the
    /// sender.
    pub fn verify(&self, key: &PublicKey) -> Result<(), TxError> {
        if key.address() != self.sender {
            return Err(TxError::KeyMismatch);
        }
        let payload = self.payload();
        if Digest::of(&payload) != self.tx_id {
            return Err(TxError::IdMismatch);
        }
        if !key.verify(&payload, &self.signature) {
            return Err(TxError::BadSignature);
        }
        Ok(())
    }
}
