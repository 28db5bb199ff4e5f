//! Verifiable credentials, presentations, and the on-ledger revocation
//! registry.
//!
//! Credentials are issuer-signed claim sets handed to the holder and kept
//! off-ledger; only revocation registry entries (issuer, index set) touch the
//! log. A presentation is the holder-signed bundle of credentials bound to a
//! verifier-supplied nonce and audience. Verification reads exclusively from
//! the verifier's own ledger node: no message to the issuer is ever needed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    self, canonical_digest, canonicalize, CryptoError, KeyPair, Signature, Value,
};
use crate::did::{self, Did, DidDocument, DidError, Purpose};
use crate::ledger::{LedgerError, LedgerNetwork, NodeId, Receipt, TxDraft, TxKind};

#[derive(Debug, Error)]
pub enum VcError {
    #[error("input error: {0}")]
    Input(String),
    #[error("lifecycle error: {0}")]
    Lifecycle(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Did(#[from] DidError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Pointer from a credential into its issuer's revocation registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusRef {
    pub registry_id: String,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proof {
    pub verification_method_ref: String,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Credential {
    /// Lowercase hex of the content id of the canonical body (no proof).
    pub credential_id: String,
    pub schema: String,
    pub issuer: Did,
    pub subject: Did,
    pub claims: Value,
    pub valid_from_tick: u64,
    pub valid_until_tick: u64,
    pub status: Option<StatusRef>,
    pub proof: Proof,
}

impl Credential {
    /// The signed portion: everything except `credential_id` (derived) and
    /// `proof` (detached).
    pub fn body_value(&self) -> Value {
        serde_json::json!({
            "claims": self.claims,
            "issuer": self.issuer,
            "schema": self.schema,
            "status": self.status,
            "subject": self.subject,
            "valid_from_tick": self.valid_from_tick,
            "valid_until_tick": self.valid_until_tick,
        })
    }

    pub fn compute_id(&self) -> Result<String, CryptoError> {
        Ok(canonical_digest(&self.body_value())?.to_hex())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("credential serializes")
    }

    pub fn from_value(value: &Value) -> Result<Credential, VcError> {
        serde_json::from_value(value.clone())
            .map_err(|e| VcError::Input(format!("malformed credential: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Presentation {
    pub holder: Did,
    pub credentials: Vec<Credential>,
    #[serde(with = "crate::crypto::hex_bytes")]
    pub challenge_nonce: Vec<u8>,
    pub audience: Did,
    pub proof: Proof,
}

impl Presentation {
    pub fn body_value(&self) -> Value {
        serde_json::json!({
            "audience": self.audience,
            "challenge_nonce": hex::encode(&self.challenge_nonce),
            "credentials": self.credentials.iter().map(Credential::to_value).collect::<Vec<_>>(),
            "holder": self.holder,
        })
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("presentation serializes")
    }

    pub fn from_value(value: &Value) -> Result<Presentation, VcError> {
        serde_json::from_value(value.clone())
            .map_err(|e| VcError::Input(format!("malformed presentation: {e}")))
    }
}

// ---------------------------------------------------------------------------
// Wallet
// ---------------------------------------------------------------------------

/// Per-actor key and credential store: private keys by document fragment plus
/// the credentials the actor holds. Confined to its owning actor.
#[derive(Debug, Clone)]
pub struct Wallet {
    pub did: Did,
    auth_fragment: String,
    keys: BTreeMap<String, KeyPair>,
    pub credentials: Vec<Credential>,
}

impl Wallet {
    pub fn new(did: Did, fragment: &str, keypair: KeyPair) -> Self {
        let mut keys = BTreeMap::new();
        keys.insert(fragment.to_string(), keypair);
        Wallet {
            did,
            auth_fragment: fragment.to_string(),
            keys,
            credentials: Vec::new(),
        }
    }

    pub fn add_key(&mut self, fragment: &str, keypair: KeyPair) {
        self.keys.insert(fragment.to_string(), keypair);
    }

    /// Marks which key signs presentations and ownership responses.
    pub fn set_auth_fragment(&mut self, fragment: &str) {
        self.auth_fragment = fragment.to_string();
    }

    pub fn auth_fragment(&self) -> &str {
        &self.auth_fragment
    }

    pub fn key(&self, fragment: &str) -> Option<&KeyPair> {
        self.keys.get(fragment)
    }

    pub fn auth_key(&self) -> &KeyPair {
        self.keys
            .get(&self.auth_fragment)
            .expect("wallet always holds its auth key")
    }

    pub fn store_credential(&mut self, credential: Credential) {
        self.credentials.push(credential);
    }

    /// Finds a wallet key that the resolved document lists under `purpose`.
    /// Returns the full key reference and the key pair.
    pub fn key_for_purpose<'a>(
        &'a self,
        document: &DidDocument,
        purpose: Purpose,
    ) -> Option<(String, &'a KeyPair)> {
        for vm in document.methods_for(purpose) {
            for (fragment, kp) in &self.keys {
                if kp.public_key().as_slice() == vm.public_key.as_slice() && *fragment == vm.id {
                    return Some((format!("{}{}", document.id, vm.id), kp));
                }
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Verification reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckResult {
    Pass,
    Fail,
    Skipped,
}

pub const CHECK_HOLDER_BINDING: &str = "holder_binding";
pub const CHECK_ISSUER_SIGNATURE: &str = "issuer_signature";
pub const CHECK_ISSUER_ACTIVE: &str = "issuer_active";
pub const CHECK_SUBJECT_MATCH: &str = "subject_match";
pub const CHECK_TIME_WINDOW: &str = "time_window";
pub const CHECK_STATUS: &str = "status";

const ALL_CHECKS: [&str; 6] = [
    CHECK_HOLDER_BINDING,
    CHECK_ISSUER_SIGNATURE,
    CHECK_ISSUER_ACTIVE,
    CHECK_SUBJECT_MATCH,
    CHECK_TIME_WINDOW,
    CHECK_STATUS,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub outcome: Outcome,
    pub checks: BTreeMap<String, CheckResult>,
    pub as_of_tick: u64,
    pub node: NodeId,
    /// Per-credential breakdown; empty for credential-level reports.
    pub credential_reports: Vec<VerificationReport>,
}

impl VerificationReport {
    /// Outcome is a pure function of the checks map (and nested reports):
    /// accept iff nothing performed failed.
    fn conclude(
        checks: BTreeMap<String, CheckResult>,
        as_of_tick: u64,
        node: NodeId,
        credential_reports: Vec<VerificationReport>,
    ) -> Self {
        let all_pass = checks.values().all(|c| *c != CheckResult::Fail)
            && credential_reports.iter().all(|r| r.outcome == Outcome::Accept);
        VerificationReport {
            outcome: if all_pass { Outcome::Accept } else { Outcome::Reject },
            checks,
            as_of_tick,
            node,
            credential_reports,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn skipped_checks() -> BTreeMap<String, CheckResult> {
    ALL_CHECKS
        .iter()
        .map(|k| (k.to_string(), CheckResult::Skipped))
        .collect()
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Registry id convention: one registry per issuer.
pub fn registry_id_for(issuer: &Did) -> String {
    format!("{issuer}#registry")
}

/// Issues a credential. The credential itself never touches the ledger; with
/// `with_status` a fresh registry index is allocated on it.
#[allow(clippy::too_many_arguments)]
pub fn issue(
    network: &mut LedgerNetwork,
    node: &NodeId,
    issuer_wallet: &Wallet,
    subject: &Did,
    schema: &str,
    claims: Value,
    valid_from_tick: u64,
    valid_until_tick: u64,
    with_status: bool,
) -> Result<Credential, VcError> {
    if valid_until_tick < valid_from_tick {
        return Err(VcError::Input(
            "valid_until_tick must not precede valid_from_tick".into(),
        ));
    }
    if !claims.is_object() {
        return Err(VcError::Input("claims must be a map".into()));
    }
    canonicalize(&claims)?;

    let (doc, _) = did::resolve(network, node, &issuer_wallet.did)?;
    if doc.deactivated {
        return Err(VcError::Lifecycle(format!(
            "issuer `{}` is deactivated",
            issuer_wallet.did
        )));
    }
    let (key_ref, keypair) = issuer_wallet
        .key_for_purpose(&doc, Purpose::Assertion)
        .ok_or_else(|| VcError::Input("issuer wallet holds no assertion key".into()))?;

    let status = if with_status {
        let registry_id = registry_id_for(&issuer_wallet.did);
        let index = network
            .authoritative_state()
            .registries
            .get(&registry_id)
            .map(|r| r.next_index)
            .unwrap_or(0);
        let payload = serde_json::json!({
            "registry_id": registry_id,
            "op": "allocate",
            "index": index,
            "issuer": issuer_wallet.did,
            "signer_key_ref": key_ref,
        });
        let signature = keypair.sign(&canonicalize(&payload)?);
        network.submit(
            node,
            TxDraft {
                kind: TxKind::RevocationUpdate,
                payload,
                submitter_did: issuer_wallet.did.to_string(),
                submitter_signature: signature,
            },
        )?;
        Some(StatusRef { registry_id, index })
    } else {
        None
    };

    let mut credential = Credential {
        credential_id: String::new(),
        schema: schema.to_string(),
        issuer: issuer_wallet.did,
        subject: *subject,
        claims,
        valid_from_tick,
        valid_until_tick,
        status,
        proof: Proof {
            verification_method_ref: key_ref,
            signature: Signature {
                bytes: Vec::new(),
                suite_id: String::new(),
            },
        },
    };
    credential.credential_id = credential.compute_id()?;
    let body = canonicalize(&credential.body_value())?;
    credential.proof.signature = keypair.sign(&body);
    Ok(credential)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusAnswer {
    Active,
    Revoked,
    UnknownRegistry,
}

/// Answers from this node's delivered prefix only; may be stale.
pub fn check_status(
    network: &LedgerNetwork,
    node: &NodeId,
    status_ref: &StatusRef,
) -> Result<StatusAnswer, VcError> {
    let state = network.state(node)?;
    Ok(match state.registries.get(&status_ref.registry_id) {
        None => StatusAnswer::UnknownRegistry,
        Some(reg) if reg.revoked.contains(&status_ref.index) => StatusAnswer::Revoked,
        Some(_) => StatusAnswer::Active,
    })
}

/// Marks one registry index revoked. Double revocation is an explicit
/// conflict, not a silent no-op.
pub fn revoke(
    network: &mut LedgerNetwork,
    node: &NodeId,
    issuer_wallet: &Wallet,
    status_ref: &StatusRef,
) -> Result<Receipt, VcError> {
    let (doc, _) = did::resolve(network, node, &issuer_wallet.did)?;
    let (key_ref, keypair) = issuer_wallet
        .key_for_purpose(&doc, Purpose::Assertion)
        .ok_or_else(|| VcError::Input("issuer wallet holds no assertion key".into()))?;
    let payload = serde_json::json!({
        "registry_id": status_ref.registry_id,
        "op": "revoke",
        "index": status_ref.index,
        "issuer": issuer_wallet.did,
        "signer_key_ref": key_ref,
    });
    let signature = keypair.sign(&canonicalize(&payload)?);
    Ok(network.submit(
        node,
        TxDraft {
            kind: TxKind::RevocationUpdate,
            payload,
            submitter_did: issuer_wallet.did.to_string(),
            submitter_signature: signature,
        },
    )?)
}

/// Checks one credential against this node's view. All failures land in the
/// report, never in an error.
pub fn verify_credential(
    network: &LedgerNetwork,
    node: &NodeId,
    credential: &Credential,
    expected_subject: Option<&Did>,
) -> VerificationReport {
    let mut checks = skipped_checks();
    let tick = network.clock();

    // issuer document, from the verifier's own node
    let resolved = did::resolve(network, node, &credential.issuer).ok();
    match &resolved {
        Some((doc, _)) => {
            checks.insert(
                CHECK_ISSUER_ACTIVE.into(),
                if doc.deactivated { CheckResult::Fail } else { CheckResult::Pass },
            );
        }
        None => {
            checks.insert(CHECK_ISSUER_ACTIVE.into(), CheckResult::Fail);
        }
    }

    let signature_ok = resolved.as_ref().is_some_and(|(doc, _)| {
        let Ok(expected_id) = credential.compute_id() else {
            return false;
        };
        if expected_id != credential.credential_id {
            return false;
        }
        let Some((ref_did, fragment)) = credential.proof.verification_method_ref.split_once('#')
        else {
            return false;
        };
        if ref_did != credential.issuer.to_string() {
            return false;
        }
        let Some(vm) = doc.method(&format!("#{fragment}")) else {
            return false;
        };
        if !vm.purposes.contains(&Purpose::Assertion) {
            return false;
        }
        let Ok(body) = canonicalize(&credential.body_value()) else {
            return false;
        };
        crypto::verify(&vm.public_key, &body, &credential.proof.signature)
    });
    checks.insert(
        CHECK_ISSUER_SIGNATURE.into(),
        if signature_ok { CheckResult::Pass } else { CheckResult::Fail },
    );

    checks.insert(
        CHECK_TIME_WINDOW.into(),
        if credential.valid_from_tick <= tick && tick <= credential.valid_until_tick {
            CheckResult::Pass
        } else {
            CheckResult::Fail
        },
    );

    if let Some(status_ref) = &credential.status {
        let answer = check_status(network, node, status_ref)
            .unwrap_or(StatusAnswer::UnknownRegistry);
        checks.insert(
            CHECK_STATUS.into(),
            if answer == StatusAnswer::Active { CheckResult::Pass } else { CheckResult::Fail },
        );
    }

    if let Some(expected) = expected_subject {
        checks.insert(
            CHECK_SUBJECT_MATCH.into(),
            if credential.subject == *expected { CheckResult::Pass } else { CheckResult::Fail },
        );
    }

    VerificationReport::conclude(checks, tick, node.clone(), Vec::new())
}

/// Builds a holder-signed presentation bound to `challenge_nonce` and
/// `audience`.
pub fn present(
    holder_wallet: &Wallet,
    credentials: Vec<Credential>,
    challenge_nonce: &[u8],
    audience: &Did,
) -> Result<Presentation, VcError> {
    if credentials.is_empty() {
        return Err(VcError::Input("a presentation needs at least one credential".into()));
    }
    let mut presentation = Presentation {
        holder: holder_wallet.did,
        credentials,
        challenge_nonce: challenge_nonce.to_vec(),
        audience: *audience,
        proof: Proof {
            verification_method_ref: format!(
                "{}{}",
                holder_wallet.did,
                holder_wallet.auth_fragment()
            ),
            signature: Signature {
                bytes: Vec::new(),
                suite_id: String::new(),
            },
        },
    };
    let body = canonicalize(&presentation.body_value())?;
    presentation.proof.signature = holder_wallet.auth_key().sign(&body);
    Ok(presentation)
}

/// Full trust-triangle verification: holder binding first, then every
/// embedded credential with `expected_subject = holder`.
pub fn verify_presentation(
    network: &LedgerNetwork,
    node: &NodeId,
    presentation: &Presentation,
    expected_nonce: &[u8],
    expected_audience: &Did,
) -> VerificationReport {
    let tick = network.clock();

    let binding_ok = presentation.challenge_nonce == expected_nonce
        && presentation.audience == *expected_audience
        && !presentation.credentials.is_empty()
        && holder_signature_ok(network, node, presentation);

    if !binding_ok {
        let mut checks = skipped_checks();
        checks.insert(CHECK_HOLDER_BINDING.into(), CheckResult::Fail);
        return VerificationReport::conclude(checks, tick, node.clone(), Vec::new());
    }

    let credential_reports: Vec<VerificationReport> = presentation
        .credentials
        .iter()
        .map(|c| verify_credential(network, node, c, Some(&presentation.holder)))
        .collect();

    // Aggregate each check over the per-credential reports.
    let mut checks = skipped_checks();
    checks.insert(CHECK_HOLDER_BINDING.into(), CheckResult::Pass);
    for key in [
        CHECK_ISSUER_SIGNATURE,
        CHECK_ISSUER_ACTIVE,
        CHECK_SUBJECT_MATCH,
        CHECK_TIME_WINDOW,
        CHECK_STATUS,
    ] {
        let results = credential_reports.iter().filter_map(|r| r.checks.get(key));
        let mut agg = CheckResult::Skipped;
        for r in results {
            match r {
                CheckResult::Fail => {
                    agg = CheckResult::Fail;
                    break;
                }
                CheckResult::Pass => agg = CheckResult::Pass,
                CheckResult::Skipped => {}
            }
        }
        checks.insert(key.into(), agg);
    }
    VerificationReport::conclude(checks, tick, node.clone(), credential_reports)
}

fn holder_signature_ok(
    network: &LedgerNetwork,
    node: &NodeId,
    presentation: &Presentation,
) -> bool {
    let Ok((doc, _)) = did::resolve(network, node, &presentation.holder) else {
        return false;
    };
    if doc.deactivated {
        return false;
    }
    let Some((ref_did, fragment)) = presentation.proof.verification_method_ref.split_once('#')
    else {
        return false;
    };
    if ref_did != presentation.holder.to_string() {
        return false;
    }
    let Some(vm) = doc.method(&format!("#{fragment}")) else {
        return false;
    };
    if !vm.purposes.contains(&Purpose::Authentication) {
        return false;
    }
    let Ok(body) = canonicalize(&presentation.body_value()) else {
        return false;
    };
    crypto::verify(&vm.public_key, &body, &presentation.proof.signature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyPair;

    struct Fixture {
        network: LedgerNetwork,
        node: NodeId,
        issuer: Wallet,
        holder: Wallet,
    }

    fn fixture() -> Fixture {
        let node = NodeId("n0".to_string());
        let mut network = LedgerNetwork::new([(node.clone(), 0u64)], 1);
        let issuer_kp = KeyPair::from_seed(&[1u8; 32]).unwrap();
        let holder_kp = KeyPair::from_seed(&[2u8; 32]).unwrap();
        let (issuer_did, _) = did::create_did(&mut network, &node, &issuer_kp).unwrap();
        let (holder_did, _) = did::create_did(&mut network, &node, &holder_kp).unwrap();
        Fixture {
            network,
            node,
            issuer: Wallet::new(issuer_did, "#key-0", issuer_kp),
            holder: Wallet::new(holder_did, "#key-0", holder_kp),
        }
    }

    fn issue_default(f: &mut Fixture, with_status: bool) -> Credential {
        issue(
            &mut f.network,
            &f.node.clone(),
            &f.issuer,
            &f.holder.did,
            "AccessPermission",
            serde_json::json!({"service_profile": "data"}),
            0,
            100,
            with_status,
        )
        .unwrap()
    }

    #[test]
    fn issue_verify_round_trip() {
        let mut f = fixture();
        let cred = issue_default(&mut f, true);
        let report = verify_credential(&f.network, &f.node, &cred, Some(&f.holder.did));
        assert_eq!(report.outcome, Outcome::Accept, "{:?}", report.checks);
        assert_eq!(report.checks[CHECK_STATUS], CheckResult::Pass);
        assert_eq!(report.checks[CHECK_HOLDER_BINDING], CheckResult::Skipped);
    }

    #[test]
    fn inverted_validity_window_is_an_input_error() {
        let mut f = fixture();
        let err = issue(
            &mut f.network,
            &f.node.clone(),
            &f.issuer,
            &f.holder.did,
            "AccessPermission",
            serde_json::json!({}),
            10,
            5,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, VcError::Input(_)));
    }

    #[test]
    fn tampered_claim_fails_issuer_signature() {
        let mut f = fixture();
        let mut cred = issue_default(&mut f, false);
        cred.claims["service_profile"] = serde_json::json!("voice");
        let report = verify_credential(&f.network, &f.node, &cred, None);
        assert_eq!(report.outcome, Outcome::Reject);
        assert_eq!(report.checks[CHECK_ISSUER_SIGNATURE], CheckResult::Fail);
    }

    #[test]
    fn credentials_never_reach_the_ledger() {
        let mut f = fixture();
        let _cred = issue_default(&mut f, true);
        let log = f.network.export_log();
        assert!(!log.contains("service_profile"), "claims leaked to the log");
        assert!(!log.contains("AccessPermission"));
    }

    #[test]
    fn revocation_flips_status_on_a_synced_node() {
        let mut f = fixture();
        let cred = issue_default(&mut f, true);
        let status = cred.status.clone().unwrap();
        assert_eq!(
            check_status(&f.network, &f.node, &status).unwrap(),
            StatusAnswer::Active
        );
        revoke(&mut f.network, &f.node.clone(), &f.issuer, &status).unwrap();
        assert_eq!(
            check_status(&f.network, &f.node, &status).unwrap(),
            StatusAnswer::Revoked
        );
        let report = verify_credential(&f.network, &f.node, &cred, None);
        assert_eq!(report.checks[CHECK_STATUS], CheckResult::Fail);
    }

    #[test]
    fn double_revocation_is_a_conflict() {
        let mut f = fixture();
        let cred = issue_default(&mut f, true);
        let status = cred.status.clone().unwrap();
        revoke(&mut f.network, &f.node.clone(), &f.issuer, &status).unwrap();
        let err = revoke(&mut f.network, &f.node.clone(), &f.issuer, &status).unwrap_err();
        assert!(matches!(err, VcError::Ledger(LedgerError::Conflict(_))), "{err}");
    }

    #[test]
    fn foreign_registry_revocation_is_rejected() {
        let mut f = fixture();
        let cred = issue_default(&mut f, true);
        let status = cred.status.clone().unwrap();
        // the holder tries to revoke in the issuer's registry
        let err = revoke(&mut f.network, &f.node.clone(), &f.holder, &status).unwrap_err();
        assert!(matches!(err, VcError::Ledger(LedgerError::Authorization(_))), "{err}");
    }

    #[test]
    fn unknown_registry_status() {
        let f = fixture();
        let answer = check_status(
            &f.network,
            &f.node,
            &StatusRef {
                registry_id: "nobody#registry".into(),
                index: 0,
            },
        )
        .unwrap();
        assert_eq!(answer, StatusAnswer::UnknownRegistry);
    }

    #[test]
    fn presentation_round_trip_and_bindings() {
        let mut f = fixture();
        let cred = issue_default(&mut f, true);
        let nonce = [5u8; 16];
        let presentation = present(&f.holder, vec![cred], &nonce, &f.issuer.did).unwrap();

        let ok = verify_presentation(&f.network, &f.node, &presentation, &nonce, &f.issuer.did);
        assert_eq!(ok.outcome, Outcome::Accept, "{:?}", ok.checks);

        // replay to a different audience
        let other = f.holder.did;
        let replayed = verify_presentation(&f.network, &f.node, &presentation, &nonce, &other);
        assert_eq!(replayed.outcome, Outcome::Reject);
        assert_eq!(replayed.checks[CHECK_HOLDER_BINDING], CheckResult::Fail);
        assert_eq!(replayed.checks[CHECK_STATUS], CheckResult::Skipped);

        // nonce mismatch rejects before credential checks
        let wrong = verify_presentation(&f.network, &f.node, &presentation, &[9u8; 16], &f.issuer.did);
        assert_eq!(wrong.checks[CHECK_STATUS], CheckResult::Skipped);
    }

    #[test]
    fn stolen_credential_cannot_be_presented() {
        let mut f = fixture();
        let cred = issue_default(&mut f, false);
        // attacker with their own DID presents the subject's credential
        let attacker_kp = KeyPair::from_seed(&[66u8; 32]).unwrap();
        let (attacker_did, _) = did::create_did(&mut f.network, &f.node.clone(), &attacker_kp).unwrap();
        let attacker = Wallet::new(attacker_did, "#key-0", attacker_kp);
        let nonce = [5u8; 16];
        let presentation = present(&attacker, vec![cred], &nonce, &f.issuer.did).unwrap();
        let report = verify_presentation(&f.network, &f.node, &presentation, &nonce, &f.issuer.did);
        assert_eq!(report.outcome, Outcome::Reject);
        // binding passes (attacker controls their own DID); the subject must mismatch
        assert_eq!(report.checks[CHECK_SUBJECT_MATCH], CheckResult::Fail);
    }

    #[test]
    fn empty_presentation_is_an_input_error() {
        let f = fixture();
        assert!(matches!(
            present(&f.holder, Vec::new(), &[0u8; 16], &f.issuer.did),
            Err(VcError::Input(_))
        ));
    }

    #[test]
    fn two_credentials_one_revoked_gives_breakdown() {
        let mut f = fixture();
        let good = issue_default(&mut f, true);
        let bad = issue_default(&mut f, true);
        revoke(&mut f.network, &f.node.clone(), &f.issuer, bad.status.as_ref().unwrap()).unwrap();
        let nonce = [1u8; 16];
        let presentation = present(&f.holder, vec![good, bad], &nonce, &f.issuer.did).unwrap();
        let report = verify_presentation(&f.network, &f.node, &presentation, &nonce, &f.issuer.did);
        assert_eq!(report.outcome, Outcome::Reject);
        assert_eq!(report.credential_reports.len(), 2);
        assert_eq!(report.credential_reports[0].outcome, Outcome::Accept);
        assert_eq!(report.credential_reports[1].outcome, Outcome::Reject);
        assert_eq!(report.credential_reports[1].checks[CHECK_STATUS], CheckResult::Fail);
    }
}
