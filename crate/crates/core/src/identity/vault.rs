//! Encrypted records addressed by random 16-digit reference ids.
//!
//! Signing-key seeds are sealed under a key stretched from the owner's
//! password (Argon2id) with XChaCha20-Poly1305. National ids are sealed
//! under the vault master key; duplicates are detected through a keyed
//! hash so the raw id is never needed for lookups.

use std::collections::BTreeMap;

use argon2::{Algorithm, Argon2, Params, Version};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{XChaCha20Poly1305, XNonce};
use hmac::{Hmac, Mac};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::crypto::{Digest, PublicKey, SigningKey};

/// Argon2id cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KdfParams {
    pub memory_kib: u32,
    pub iterations: u32,
    pub parallelism: u32,
}

impl Default for KdfParams {
    fn default() -> Self {
        KdfParams {
            memory_kib: 19 * 1024,
            iterations: 2,
            parallelism: 1,
        }
    }
}

impl KdfParams {
    /// Cheap parameters for tests and local demos.
    pub const INSECURE_FAST: KdfParams = KdfParams {
        memory_kib: 64,
        iterations: 1,
        parallelism: 1,
    };

    fn derive(&self, password: &str, salt: &[u8]) -> Result<[u8; 32], VaultError> {
        let params = Params::new(self.memory_kib, self.iterations, self.parallelism, Some(32))
            .map_err(|e| VaultError::Kdf(e.to_string()))?;
        let mut out = [0u8; 32];
        Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
            .hash_password_into(password.as_bytes(), salt, &mut out)
            .map_err(|e| VaultError::Kdf(e.to_string()))?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VaultError {
    #[error("wrong password")]
    BadPassword,
    #[error("key derivation failed: {0}")]
    Kdf(String),
    #[error("vault record is corrupt: {0}")]
    Corrupt(String),
}

/// Uniformly random 16-digit decimal string without a leading zero.
pub fn random_reference_id(rng: &mut impl RngCore) -> String {
    rng.gen_range(1_000_000_000_000_000u64..10_000_000_000_000_000u64)
        .to_string()
}

mod b64 {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&B64.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        B64.decode(s).map_err(serde::de::Error::custom)
    }
}

/// A signing-key seed sealed under the owner's password.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRecord {
    pub reference_id: String,
    pub public_key: PublicKey,
    #[serde(with = "b64")]
    pub kdf_salt: Vec<u8>,
    pub kdf: KdfParams,
    #[serde(with = "b64")]
    pub nonce: Vec<u8>,
    #[serde(with = "b64")]
    pub ciphertext: Vec<u8>,
    pub created_at: u64,
}

impl KeyRecord {
    fn aad(reference_id: &str, public_key: &PublicKey) -> Vec<u8> {
        let mut aad = reference_id.as_bytes().to_vec();
        aad.extend_from_slice(public_key.as_bytes());
        aad
    }

    pub fn seal(
        reference_id: String,
        key: &SigningKey,
        password: &str,
        kdf: KdfParams,
        created_at: u64,
        rng: &mut impl RngCore,
    ) -> Result<KeyRecord, VaultError> {
        let mut salt = vec![0u8; 16];
        rng.fill_bytes(&mut salt);
        let mut nonce = vec![0u8; 24];
        rng.fill_bytes(&mut nonce);
        let wrapping = kdf.derive(password, &salt)?;
        let public_key = key.public_key();
        let cipher = XChaCha20Poly1305::new((&wrapping).into());
        let ciphertext = cipher
            .encrypt(
                XNonce::from_slice(&nonce),
                Payload {
                    msg: &key.seed(),
                    aad: &Self::aad(&reference_id, &public_key),
                },
            )
            .map_err(|_| VaultError::Corrupt("encryption failed".into()))?;
        Ok(KeyRecord {
            reference_id,
            public_key,
            kdf_salt: salt,
            kdf,
            nonce,
            ciphertext,
            created_at,
        })
    }

    /// Decrypts the seed. Any wrong password fails authentication.
    pub fn open(&self, password: &str) -> Result<SigningKey, VaultError> {
        if self.nonce.len() != 24 {
            return Err(VaultError::Corrupt("nonce length".into()));
        }
        let wrapping = self.kdf.derive(password, &self.kdf_salt)?;
        let cipher = XChaCha20Poly1305::new((&wrapping).into());
        let seed = cipher
            .decrypt(
                XNonce::from_slice(&self.nonce),
                Payload {
                    msg: &self.ciphertext,
                    aad: &Self::aad(&self.reference_id, &self.public_key),
                },
            )
            .map_err(|_| VaultError::BadPassword)?;
        let seed: [u8; 32] = seed.try_into().map_err(|_| VaultError::Corrupt("seed length".into()))?;
        let key = SigningKey::from_seed(&seed);
        if key.public_key() != self.public_key {
            return Err(VaultError::Corrupt("seed does not match public key".into()));
        }
        Ok(key)
    }
}

/// Master key for records the service itself must be able to read.
#[derive(Clone)]
pub struct VaultKey([u8; 32]);

impl std::fmt::Debug for VaultKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("VaultKey(..)")
    }
}

impl VaultKey {
    pub fn generate(rng: &mut impl RngCore) -> VaultKey {
        let mut k = [0u8; 32];
        rng.fill_bytes(&mut k);
        VaultKey(k)
    }

    pub fn from_bytes(bytes: [u8; 32]) -> VaultKey {
        VaultKey(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<VaultKey, VaultError> {
        let bytes = hex::decode(s.trim()).map_err(|e| VaultError::Corrupt(e.to_string()))?;
        let bytes: [u8; 32] = bytes
            .try_into()
            .map_err(|_| VaultError::Corrupt("vault key must be 32 bytes".into()))?;
        Ok(VaultKey(bytes))
    }

    /// Keyed lookup hash of a national id.
    pub fn fingerprint(&self, national_id: &str) -> Digest {
        let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&self.0).expect("any key length");
        mac.update(b"tdr/national-id/v1");
        mac.update(national_id.as_bytes());
        Digest(mac.finalize().into_bytes().into())
    }

    fn cipher(&self) -> XChaCha20Poly1305 {
        XChaCha20Poly1305::new((&self.0).into())
    }
}

/// A national id sealed under the vault master key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NationalIdRecord {
    pub reference_id: String,
    pub fingerprint: Digest,
    #[serde(with = "b64")]
    pub nonce: Vec<u8>,
    #[serde(with = "b64")]
    pub ciphertext: Vec<u8>,
    pub created_at: u64,
}

impl NationalIdRecord {
    pub fn seal(
        vault_key: &VaultKey,
        reference_id: String,
        national_id: &str,
        created_at: u64,
        rng: &mut impl RngCore,
    ) -> NationalIdRecord {
        let mut nonce = vec![0u8; 24];
        rng.fill_bytes(&mut nonce);
        let ciphertext = vault_key
            .cipher()
            .encrypt(
                XNonce::from_slice(&nonce),
                Payload {
                    msg: national_id.as_bytes(),
                    aad: reference_id.as_bytes(),
                },
            )
            .expect("encryption is infallible for short inputs");
        NationalIdRecord {
            fingerprint: vault_key.fingerprint(national_id),
            reference_id,
            nonce,
            ciphertext,
            created_at,
        }
    }

    pub fn open(&self, vault_key: &VaultKey) -> Result<String, VaultError> {
        if self.nonce.len() != 24 {
            return Err(VaultError::Corrupt("nonce length".into()));
        }
        let plain = vault_key
            .cipher()
            .decrypt(
                XNonce::from_slice(&self.nonce),
                Payload {
                    msg: &self.ciphertext,
                    aad: self.reference_id.as_bytes(),
                },
            )
            .map_err(|_| VaultError::Corrupt("national id record fails authentication".into()))?;
        String::from_utf8(plain).map_err(|e| VaultError::Corrupt(e.to_string()))
    }
}

/// Everything held in the vault file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaultData {
    pub keys: BTreeMap<String, KeyRecord>,
    pub national_ids: BTreeMap<String, NationalIdRecord>,
}

impl VaultData {
    pub fn reference_in_use(&self, reference_id: &str) -> bool {
        self.keys.contains_key(reference_id) || self.national_ids.contains_key(reference_id)
    }

    pub fn fresh_reference_id(&self, rng: &mut impl RngCore) -> String {
        loop {
            let id = random_reference_id(rng);
            if !self.reference_in_use(&id) {
                return id;
            }
        }
    }
}
