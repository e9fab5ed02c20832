//! Electronic know-your-customer verification behind a pluggable provider.

use std::collections::BTreeMap;

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

/// Resident details as held by the identity authority.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EkycProfile {
    pub name: String,
    pub phone: String,
}

/// How an OTP left the provider. `code` is only populated by simulated
/// providers, which log it in place of an SMS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtpDelivery {
    pub masked_phone: String,
    pub code: Option<String>,
}

pub trait EkycProvider: Send + Sync {
    /// `None` when the authority has no resident with this id.
    fn profile(&self, national_id: &str) -> Option<EkycProfile>;

    /// Sends a one-time code bound to `challenge_id` to the resident's
    /// registered phone.
    fn send_otp(&self, national_id: &str, challenge_id: &str) -> Option<OtpDelivery>;

    fn verify_otp(&self, challenge_id: &str, otp: &str) -> bool;
}

/// Deterministic provider: the OTP is the first six decimal digits of
/// `HMAC-SHA256(seed, challenge_id)`.
#[derive(Debug, Clone)]
pub struct MockEkyc {
    seed: Vec<u8>,
    residents: BTreeMap<String, EkycProfile>,
}

impl MockEkyc {
    pub fn new(seed: impl AsRef<[u8]>) -> Self {
        MockEkyc {
            seed: seed.as_ref().to_vec(),
            residents: BTreeMap::new(),
        }
    }

    pub fn with_resident(mut self, national_id: &str, profile: EkycProfile) -> Self {
        self.residents.insert(national_id.to_owned(), profile);
        self
    }

    pub fn add_resident(&mut self, national_id: &str, profile: EkycProfile) {
        self.residents.insert(national_id.to_owned(), profile);
    }

    pub fn otp_for(&self, challenge_id: &str) -> String {
        let mut mac = Hmac::<Sha256>::new_from_slice(&self.seed).expect("any key length");
        mac.update(challenge_id.as_bytes());
        let tag = mac.finalize().into_bytes();
        tag.iter()
            .flat_map(|b| [b >> 4, b & 0x0f])
            .filter(|n| *n < 10)
            .chain(std::iter::repeat(0))
            .take(6)
            .map(|n| char::from(b'0' + n))
            .collect()
    }
}

pub fn mask_phone(phone: &str) -> String {
    let digits: Vec<char> = phone.chars().filter(char::is_ascii_digit).collect();
    let keep = digits.len().saturating_sub(4);
    digits
        .iter()
        .enumerate()
        .map(|(i, c)| if i < keep { '*' } else { *c })
        .collect()
}

impl EkycProvider for MockEkyc {
    fn profile(&self, national_id: &str) -> Option<EkycProfile> {
        self.residents.get(national_id).cloned()
    }

    fn send_otp(&self, national_id: &str, challenge_id: &str) -> Option<OtpDelivery> {
        let resident = self.residents.get(national_id)?;
        Some(OtpDelivery {
            masked_phone: mask_phone(&resident.phone),
            code: Some(self.otp_for(challenge_id)),
        })
    }

    fn verify_otp(&self, challenge_id: &str, otp: &str) -> bool {
        let expected = self.otp_for(challenge_id);
        expected.len() == otp.len() && expected.bytes().zip(otp.bytes()).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
    }
}
