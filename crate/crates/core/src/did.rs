//! DID syntax, DID document lifecycle, and challenge-response proof of
//! ownership.
//!
//! A DID here is `did:sim6g:<base58 of 16 bytes>`, where the 16 bytes are the
//! truncated SHA-256 of the initial public key. Documents live on the ledger
//! as full replacement bodies, one version per accepted update, and never
//! carry personal data: the schema has exactly the keys `id`, `controller`,
//! `verification_methods`, `services`, `version`, `deactivated` and nowhere
//! else to put anything.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::crypto::{
    self, canonicalize, content_id, CryptoError, KeyPair, Signature, Value, PUBLIC_KEY_LEN,
};
use crate::ledger::{LedgerError, LedgerNetwork, NodeId, Receipt, TxDraft, TxKind};

pub const DID_METHOD: &str = "sim6g";
pub const METHOD_ID_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum DidError {
    #[error("invalid DID syntax: {0}")]
    Syntax(String),
    #[error("DID not found in this node's view")]
    NotFound,
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// A decentralized identifier: `did:sim6g:<method_specific_id>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Did {
    msid: [u8; METHOD_ID_LEN],
}

impl Did {
    /// Derives the DID from an initial public key: base-58 of the first 16
    /// bytes of the key's SHA-256.
    pub fn from_public_key(public_key: &[u8; PUBLIC_KEY_LEN]) -> Did {
        let digest: [u8; 32] = Sha256::digest(public_key).into();
        let mut msid = [0u8; METHOD_ID_LEN];
        msid.copy_from_slice(&digest[..METHOD_ID_LEN]);
        Did { msid }
    }

    pub fn parse(s: &str) -> Result<Did, DidError> {
        let rest = s
            .strip_prefix("did:sim6g:")
            .ok_or_else(|| DidError::Syntax(format!("missing did:sim6g: prefix in `{s}`")))?;
        let bytes = bs58::decode(rest)
            .into_vec()
            .map_err(|e| DidError::Syntax(format!("bad base58 in `{s}`: {e}")))?;
        let msid: [u8; METHOD_ID_LEN] = bytes
            .as_slice()
            .try_into()
            .map_err(|_| DidError::Syntax(format!("method id must decode to 16 bytes in `{s}`")))?;
        Ok(Did { msid })
    }

    pub fn method_specific_id(&self) -> String {
        bs58::encode(self.msid).into_string()
    }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "did:{}:{}", DID_METHOD, self.method_specific_id())
    }
}

impl Serialize for Did {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Did {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Did::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Assertion,
    Authentication,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationMethod {
    /// Fragment identifier, e.g. `#key-0`, unique within the document.
    pub id: String,
    pub suite_id: String,
    #[serde(with = "crate::crypto::hex_bytes")]
    pub public_key: Vec<u8>,
    pub purposes: BTreeSet<Purpose>,
}

impl VerificationMethod {
    pub fn new(id: &str, keypair: &KeyPair, purposes: impl IntoIterator<Item = Purpose>) -> Self {
        VerificationMethod {
            id: id.to_string(),
            suite_id: keypair.suite_id().to_string(),
            public_key: keypair.public_key().to_vec(),
            purposes: purposes.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceEndpointEntry {
    pub id: String,
    #[serde(rename = "type")]
    pub type_label: String,
    pub endpoint: String,
}

/// The on-ledger half of an identity. No personal data fields exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DidDocument {
    pub id: Did,
    pub controller: Option<Did>,
    pub verification_methods: Vec<VerificationMethod>,
    pub services: Vec<ServiceEndpointEntry>,
    pub version: u64,
    pub deactivated: bool,
}

impl DidDocument {
    /// Initial document: version 0, one verification method carrying both
    /// purposes, no services, no controller.
    pub fn initial(keypair: &KeyPair) -> (Did, DidDocument) {
        let did = Did::from_public_key(&keypair.public_key());
        let doc = DidDocument {
            id: did,
            controller: None,
            verification_methods: vec![VerificationMethod::new(
                "#key-0",
                keypair,
                [Purpose::Authentication, Purpose::Assertion],
            )],
            services: Vec::new(),
            version: 0,
            deactivated: false,
        };
        (did, doc)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("document serialization cannot fail")
    }

    pub fn from_value(value: &Value) -> Result<DidDocument, DidError> {
        serde_json::from_value(value.clone())
            .map_err(|e| DidError::Input(format!("malformed document: {e}")))
    }

    /// Structural invariants every accepted document body must satisfy.
    pub fn check_invariants(&self) -> Result<(), DidError> {
        let mut ids = BTreeSet::new();
        for vm in &self.verification_methods {
            if !vm.id.starts_with('#') {
                return Err(DidError::Input(format!(
                    "verification method id `{}` must be a fragment",
                    vm.id
                )));
            }
            if !ids.insert(vm.id.as_str()) {
                return Err(DidError::Input(format!(
                    "duplicate verification method id `{}`",
                    vm.id
                )));
            }
            if vm.purposes.is_empty() {
                return Err(DidError::Input(format!(
                    "verification method `{}` has no purposes",
                    vm.id
                )));
            }
            if !crypto::REGISTERED_SUITES.contains(&vm.suite_id.as_str()) {
                return Err(DidError::Input(format!(
                    "unregistered suite `{}`",
                    vm.suite_id
                )));
            }
            if vm.public_key.len() != PUBLIC_KEY_LEN {
                return Err(DidError::Input(format!(
                    "public key of `{}` must be {PUBLIC_KEY_LEN} bytes",
                    vm.id
                )));
            }
        }
        let mut service_ids = BTreeSet::new();
        for svc in &self.services {
            if !service_ids.insert(svc.id.as_str()) {
                return Err(DidError::Input(format!("duplicate service id `{}`", svc.id)));
            }
            if svc.endpoint.is_empty() {
                return Err(DidError::Input(format!("service `{}` has empty endpoint", svc.id)));
            }
        }
        if !self.deactivated && !self.has_purpose_key(Purpose::Authentication) {
            return Err(DidError::Input(
                "active document needs at least one authentication method".into(),
            ));
        }
        Ok(())
    }

    pub fn has_purpose_key(&self, purpose: Purpose) -> bool {
        self.verification_methods
            .iter()
            .any(|vm| vm.purposes.contains(&purpose))
    }

    pub fn method(&self, fragment: &str) -> Option<&VerificationMethod> {
        self.verification_methods.iter().find(|vm| vm.id == fragment)
    }

    /// Methods usable for `purpose`.
    pub fn methods_for(&self, purpose: Purpose) -> impl Iterator<Item = &VerificationMethod> {
        self.verification_methods
            .iter()
            .filter(move |vm| vm.purposes.contains(&purpose))
    }

    /// Full key reference (`did…#fragment`) of the first method carrying
    /// `purpose`.
    pub fn key_ref_for(&self, purpose: Purpose) -> Option<String> {
        self.methods_for(purpose)
            .next()
            .map(|vm| format!("{}{}", self.id, vm.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResolutionMetadata {
    pub version: u64,
    pub deactivated: bool,
    pub as_of_tick: u64,
}

// ---------------------------------------------------------------------------
// Lifecycle operations
// ---------------------------------------------------------------------------

/// Anchors a fresh DID on the ledger. The create transaction is self-signed
/// by the initial key.
pub fn create_did(
    network: &mut LedgerNetwork,
    node: &NodeId,
    keypair: &KeyPair,
) -> Result<(Did, DidDocument), DidError> {
    let (did, doc) = DidDocument::initial(keypair);
    let payload = serde_json::json!({
        "did": did,
        "document": doc.to_value(),
    });
    let signature = keypair.sign(&canonicalize(&payload)?);
    let draft = TxDraft {
        kind: TxKind::DidCreate,
        payload,
        submitter_did: String::new(),
        submitter_signature: signature,
    };
    network.submit(node, draft)?;
    Ok((did, doc))
}

/// Reads the document for `did` out of this node's delivered prefix. The
/// answer may be stale relative to the committed log.
pub fn resolve(
    network: &LedgerNetwork,
    node: &NodeId,
    did: &Did,
) -> Result<(DidDocument, ResolutionMetadata), DidError> {
    let state = network.state(node)?;
    let record = state.docs.get(&did.to_string()).ok_or(DidError::NotFound)?;
    let doc = record.document.clone();
    let meta = ResolutionMetadata {
        version: doc.version,
        deactivated: doc.deactivated,
        as_of_tick: network.clock(),
    };
    Ok((doc, meta))
}

/// Submits a full replacement document body. `signer_key_ref` must name an
/// authentication-purpose method of the subject or of its controller.
pub fn update_document(
    network: &mut LedgerNetwork,
    node: &NodeId,
    did: &Did,
    new_body: DidDocument,
    signer: &KeyPair,
    signer_key_ref: &str,
) -> Result<Receipt, DidError> {
    new_body.check_invariants()?;
    let payload = serde_json::json!({
        "did": did,
        "document": new_body.to_value(),
        "signer_key_ref": signer_key_ref,
    });
    let signature = signer.sign(&canonicalize(&payload)?);
    let draft = TxDraft {
        kind: TxKind::DidUpdate,
        payload,
        submitter_did: did.to_string(),
        submitter_signature: signature,
    };
    Ok(network.submit(node, draft)?)
}

pub fn deactivate(
    network: &mut LedgerNetwork,
    node: &NodeId,
    did: &Did,
    signer: &KeyPair,
    signer_key_ref: &str,
) -> Result<Receipt, DidError> {
    let payload = serde_json::json!({
        "did": did,
        "signer_key_ref": signer_key_ref,
    });
    let signature = signer.sign(&canonicalize(&payload)?);
    let draft = TxDraft {
        kind: TxKind::DidDeactivate,
        payload,
        submitter_did: did.to_string(),
        submitter_signature: signature,
    };
    Ok(network.submit(node, draft)?)
}

// ---------------------------------------------------------------------------
// Ownership challenges
// ---------------------------------------------------------------------------

pub const NONCE_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnershipChallenge {
    #[serde(with = "crate::crypto::hex_bytes")]
    pub nonce: Vec<u8>,
    pub audience: Did,
    pub subject: Did,
    pub issued_tick: u64,
    pub validity_ticks: u64,
}

impl OwnershipChallenge {
    /// The byte string the subject signs: nonce, audience, and subject bound
    /// together so a response cannot be replayed to another verifier.
    pub fn signing_input(&self) -> Vec<u8> {
        let value = serde_json::json!({
            "audience": self.audience,
            "nonce": hex::encode(&self.nonce),
            "subject_did": self.subject,
        });
        canonicalize(&value).expect("challenge body is float-free")
    }
}

/// Deterministic challenge construction; the nonce is derived from the seed
/// and the challenge coordinates.
pub fn make_challenge(
    challenger: &Did,
    subject: &Did,
    current_tick: u64,
    validity_ticks: u64,
    rng_seed: u64,
) -> Result<OwnershipChallenge, DidError> {
    if validity_ticks == 0 {
        return Err(DidError::Input("validity_ticks must be at least 1".into()));
    }
    let mut material = Vec::new();
    material.extend_from_slice(b"ownership-nonce");
    material.extend_from_slice(&rng_seed.to_le_bytes());
    material.extend_from_slice(&current_tick.to_le_bytes());
    material.extend_from_slice(challenger.to_string().as_bytes());
    material.extend_from_slice(subject.to_string().as_bytes());
    let nonce = content_id(&material).0[..NONCE_LEN].to_vec();
    Ok(OwnershipChallenge {
        nonce,
        audience: *challenger,
        subject: *subject,
        issued_tick: current_tick,
        validity_ticks,
    })
}

pub fn respond_to_challenge(subject_keypair: &KeyPair, challenge: &OwnershipChallenge) -> Signature {
    subject_keypair.sign(&challenge.signing_input())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OwnershipReject {
    Expired,
    Replayed,
    Deactivated,
    NoMatchingKey,
    BadSignature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwnershipOutcome {
    Accept,
    Reject(OwnershipReject),
}

/// Verifier-side challenge state: issued nonces are single-use.
#[derive(Debug, Default)]
pub struct OwnershipVerifier {
    outstanding: BTreeSet<Vec<u8>>,
}

impl OwnershipVerifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn issue_challenge(
        &mut self,
        challenger: &Did,
        subject: &Did,
        current_tick: u64,
        validity_ticks: u64,
        rng_seed: u64,
    ) -> Result<OwnershipChallenge, DidError> {
        let challenge = make_challenge(challenger, subject, current_tick, validity_ticks, rng_seed)?;
        self.outstanding.insert(challenge.nonce.clone());
        Ok(challenge)
    }

    /// Accepts iff the challenge is unexpired, the nonce is still
    /// outstanding (it is consumed on accept), the DID is active in this
    /// node's view, and the response verifies against some
    /// authentication-purpose key of the resolved document.
    pub fn verify(
        &mut self,
        network: &LedgerNetwork,
        node: &NodeId,
        subject_did: &Did,
        challenge: &OwnershipChallenge,
        response: &Signature,
    ) -> OwnershipOutcome {
        use OwnershipOutcome::Reject;
        if network.clock() >= challenge.issued_tick + challenge.validity_ticks {
            return Reject(OwnershipReject::Expired);
        }
        if !self.outstanding.contains(&challenge.nonce) {
            return Reject(OwnershipReject::Replayed);
        }
        let Ok((doc, _)) = resolve(network, node, subject_did) else {
            return Reject(OwnershipReject::NoMatchingKey);
        };
        if doc.deactivated {
            return Reject(OwnershipReject::Deactivated);
        }
        if challenge.subject != *subject_did {
            return Reject(OwnershipReject::BadSignature);
        }
        let input = challenge.signing_input();
        let mut saw_auth_key = false;
        for vm in doc.methods_for(Purpose::Authentication) {
            saw_auth_key = true;
            if crypto::verify(&vm.public_key, &input, response) {
                self.outstanding.remove(&challenge.nonce);
                return OwnershipOutcome::Accept;
            }
        }
        if saw_auth_key {
            Reject(OwnershipReject::BadSignature)
        } else {
            Reject(OwnershipReject::NoMatchingKey)
        }
    }
}
