//! Pseudonymous person ids and the protected name records behind them.
//!
//! Public data refers to people only through [`PersonId`], a keyed HMAC of
//! the normalized full name. The same name under the same vault key always
//! maps to the same id, so re-ingestion is stable without keeping a
//! plaintext name table.

use std::collections::BTreeMap;
use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::model::{LabelSource, SelfDeclaration};

pub const VAULT_KEY_ENV: &str = "DIVMETER_VAULT_KEY";

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrivacyError {
    #[error("vault key is empty")]
    EmptyKey,
    #[error("`{0}` is not a person id")]
    BadPersonId(String),
}

/// 128-bit pseudonym rendered as 32 lower-case hex digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PersonId(String);

impl PersonId {
    pub fn from_hex(s: &str) -> Result<Self, PrivacyError> {
        if s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            Ok(PersonId(s.to_string()))
        } else {
            Err(PrivacyError::BadPersonId(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for PersonId {
    type Error = PrivacyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        PersonId::from_hex(&s)
    }
}

impl From<PersonId> for String {
    fn from(p: PersonId) -> String {
        p.0
    }
}

/// Secret material for pseudonymization and vault encryption.
///
/// Both working keys are derived from one operator secret, so the two uses
/// never share a key.
#[derive(Clone, PartialEq, Eq)]
pub struct VaultKey {
    pseudonym: [u8; 32],
    cipher: [u8; 32],
}

impl fmt::Debug for VaultKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VaultKey(..)")
    }
}

fn derive(secret: &[u8], label: &[u8]) -> [u8; 32] {
    let mut mac = <HmacSha256 as KeyInit>::new_from_slice(secret).expect("hmac accepts any key length");
    mac.update(label);
    mac.finalize().into_bytes().into()
}

impl VaultKey {
    pub fn from_secret(secret: &str) -> Result<Self, PrivacyError> {
        if secret.is_empty() {
            return Err(PrivacyError::EmptyKey);
        }
        Ok(Self {
            pseudonym: derive(secret.as_bytes(), b"divmeter/pseudonym/v1"),
            cipher: derive(secret.as_bytes(), b"divmeter/vault-cipher/v1"),
        })
    }

    /// Reads `DIVMETER_VAULT_KEY`; unset or empty means the vault is locked.
    pub fn from_env() -> Option<Self> {
        std::env::var(VAULT_KEY_ENV).ok().and_then(|s| Self::from_secret(&s).ok())
    }

    pub fn cipher_key(&self) -> &[u8; 32] {
        &self.cipher
    }

    pub fn pseudonymizer(&self) -> Pseudonymizer {
        Pseudonymizer { key: self.pseudonym }
    }
}

#[derive(Clone)]
pub struct Pseudonymizer {
    key: [u8; 32],
}

impl fmt::Debug for Pseudonymizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Pseudonymizer(..)")
    }
}

impl Pseudonymizer {
    pub fn person_id(&self, full_name: &str) -> PersonId {
        let mut mac = <HmacSha256 as KeyInit>::new_from_slice(&self.key).expect("32-byte key");
        mac.update(normalize_name(full_name).as_bytes());
        let digest = mac.finalize().into_bytes();
        let hex: String = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
        PersonId(hex)
    }
}

/// Canonical form of a person's name: diacritics stripped, lower-cased,
/// whitespace collapsed, NFC.
pub fn normalize_name(name: &str) -> String {
    let stripped: String = name.nfd().filter(|c| !is_combining_mark(*c)).collect();
    let lowered = stripped.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.nfc().collect()
}

/// A protected name record. Never leaves the vault.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaultEntry {
    pub person_id: PersonId,
    pub full_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_declaration: Option<SelfDeclaration>,
    /// Keyed `<role>.<facet>`.
    #[serde(default)]
    pub label_sources: BTreeMap<String, LabelSource>,
    /// Verbatim provider answers, for audit.
    #[serde(default)]
    pub provider_responses: Vec<String>,
}

impl VaultEntry {
    pub fn new(person_id: PersonId, full_name: impl Into<String>) -> Self {
        Self {
            person_id,
            full_name: full_name.into(),
            self_declaration: None,
            label_sources: BTreeMap::new(),
            provider_responses: Vec::new(),
        }
    }

    /// Folds a newer record for the same person into this one.
    pub fn merge(&mut self, newer: VaultEntry) {
        debug_assert_eq!(self.person_id, newer.person_id);
        self.full_name = newer.full_name;
        if newer.self_declaration.is_some() {
            self.self_declaration = newer.self_declaration;
        }
        self.label_sources.extend(newer.label_sources);
        for r in newer.provider_responses {
            if !self.provider_responses.contains(&r) {
                self.provider_responses.push(r);
            }
        }
    }
}
