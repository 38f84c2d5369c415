//! The name vault: `VAULT_MAGIC`, a 12-byte nonce, then the ChaCha20-Poly1305
//! sealed JSON list of entries. The magic line is bound in as associated data.

use std::collections::BTreeMap;
use std::path::Path;

use chacha20poly1305::aead::{Aead, Generate, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Nonce};
use divmeter_core::{PersonId, VaultEntry, VaultKey};

use crate::error::StoreError;
use crate::files::{read_framed, VAULT_MAGIC};

const NONCE_LEN: usize = 12;

pub(crate) type Vault = BTreeMap<PersonId, VaultEntry>;

fn cipher(key: &VaultKey) -> ChaCha20Poly1305 {
    ChaCha20Poly1305::new_from_slice(key.cipher_key()).expect("32-byte key")
}

pub(crate) fn seal(key: &VaultKey, vault: &Vault) -> Vec<u8> {
    let entries: Vec<&VaultEntry> = vault.values().collect();
    let plain = serde_json::to_vec(&entries).expect("vault entries serialize");
    let nonce = Nonce::generate();
    let sealed = cipher(key)
        .encrypt(&nonce, Payload { msg: &plain, aad: VAULT_MAGIC })
        .expect("encryption of an in-memory buffer");
    let mut out = nonce.to_vec();
    out.extend_from_slice(&sealed);
    out
}

pub(crate) fn open(key: &VaultKey, path: &Path) -> Result<Vault, StoreError> {
    let Some(body) = read_framed(path, VAULT_MAGIC)? else {
        return Ok(Vault::new());
    };
    if body.len() < NONCE_LEN {
        return Err(StoreError::Corrupt { file: path.into(), reason: "truncated vault".into() });
    }
    let (nonce, sealed) = body.split_at(NONCE_LEN);
    let nonce = Nonce::try_from(nonce).expect("nonce length checked");
    let plain = cipher(key)
        .decrypt(&nonce, Payload { msg: sealed, aad: VAULT_MAGIC })
        .map_err(|_| StoreError::VaultKeyRejected(path.into()))?;
    let entries: Vec<VaultEntry> =
        serde_json::from_slice(&plain).map_err(|e| StoreError::Corrupt { file: path.into(), reason: e.to_string() })?;
    Ok(entries.into_iter().map(|e| (e.person_id.clone(), e)).collect())
}
