//! Deterministic simulation of the multi-stakeholder distributed ledger.
//!
//! One logical sequencer assigns a total order; every stakeholder node sees
//! the committed log as a prefix, lagging behind by its configured delivery
//! delay in ticks. There are no crashes, partitions, or forks — delays are
//! what make stale reads observable.
//!
//! Transaction admission is checked against the sequencer's authoritative
//! state: document lifecycle rules (who may update or deactivate a DID) and
//! revocation registry rules (only the owning issuer may allocate or revoke)
//! live in [`LedgerState::validate`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{self, canonicalize, CryptoError, Signature, Value};
use crate::did::{Did, DidDocument, Purpose};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub String);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("authorization error: {0}")]
    Authorization(String),
    #[error("lifecycle error: {0}")]
    Lifecycle(String),
    #[error("conflict: {0}")]
    Conflict(String),
}

impl From<CryptoError> for LedgerError {
    fn from(e: CryptoError) -> Self {
        LedgerError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    DidCreate,
    DidUpdate,
    DidDeactivate,
    RevocationUpdate,
}

/// A committed ledger entry. `seq` values are dense: `seq == index` in the
/// committed log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub kind: TxKind,
    pub payload: Value,
    pub submitter_did: String,
    pub submitter_signature: Signature,
    pub seq: u64,
    pub commit_tick: u64,
}

/// A transaction as submitted, before the sequencer assigns order and time.
#[derive(Debug, Clone)]
pub struct TxDraft {
    pub kind: TxKind,
    pub payload: Value,
    pub submitter_did: String,
    pub submitter_signature: Signature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub seq: u64,
    pub commit_tick: u64,
}

/// Read-only snapshot of a node's delivered prefix.
#[derive(Debug, Clone, Copy)]
pub struct NodeView<'a> {
    pub node: &'a NodeId,
    pub delivered: &'a [Transaction],
    pub as_of_tick: u64,
}

// ---------------------------------------------------------------------------
// Materialized state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DocRecord {
    pub document: DidDocument,
    /// Sequence number of the latest lifecycle transaction for this DID.
    pub last_seq: u64,
}

#[derive(Debug, Clone)]
pub struct RegistryRecord {
    pub issuer: Did,
    pub next_index: u64,
    pub revoked: BTreeSet<u64>,
}

/// State obtained by folding a (prefix of the) committed log.
#[derive(Debug, Clone, Default)]
pub struct LedgerState {
    pub docs: BTreeMap<String, DocRecord>,
    pub registries: BTreeMap<String, RegistryRecord>,
}

#[derive(Debug, Deserialize)]
struct DidCreatePayload {
    did: Did,
    document: Value,
}

#[derive(Debug, Deserialize)]
struct DidUpdatePayload {
    did: Did,
    document: Value,
    signer_key_ref: String,
}

#[derive(Debug, Deserialize)]
struct DidDeactivatePayload {
    did: Did,
    signer_key_ref: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RevocationOp {
    Allocate,
    Revoke,
}

#[derive(Debug, Deserialize)]
struct RevocationPayload {
    registry_id: String,
    op: RevocationOp,
    index: u64,
    issuer: Did,
    signer_key_ref: String,
}

fn parse_payload<T: serde::de::DeserializeOwned>(payload: &Value) -> Result<T, LedgerError> {
    serde_json::from_value(payload.clone())
        .map_err(|e| LedgerError::Input(format!("malformed payload: {e}")))
}

impl LedgerState {
    /// Resolves a `did…#fragment` key reference to a public key, requiring
    /// that the referenced document is active and that the method carries
    /// `purpose`. `subject` limits which documents may authorize: the subject
    /// itself or, for lifecycle transactions, its appointed controller.
    fn authorized_key(
        &self,
        subject: &Did,
        key_ref: &str,
        purpose: Purpose,
        allow_controller: bool,
    ) -> Result<Vec<u8>, LedgerError> {
        let (ref_did_str, fragment) = key_ref
            .split_once('#')
            .ok_or_else(|| LedgerError::Input(format!("key ref `{key_ref}` has no fragment")))?;
        let ref_did = Did::parse(ref_did_str)
            .map_err(|e| LedgerError::Input(format!("key ref `{key_ref}`: {e}")))?;

        let subject_doc = self
            .docs
            .get(&subject.to_string())
            .ok_or_else(|| LedgerError::Authorization(format!("unknown DID `{subject}`")))?;
        let authorized = ref_did == *subject
            || (allow_controller && subject_doc.document.controller == Some(ref_did));
        if !authorized {
            return Err(LedgerError::Authorization(format!(
                "`{ref_did}` is neither the subject nor its controller"
            )));
        }

        let ref_doc = &self
            .docs
            .get(&ref_did.to_string())
            .ok_or_else(|| LedgerError::Authorization(format!("unknown signer DID `{ref_did}`")))?
            .document;
        if ref_doc.deactivated {
            return Err(LedgerError::Authorization(format!(
                "signer document `{ref_did}` is deactivated"
            )));
        }
        let fragment = format!("#{fragment}");
        let vm = ref_doc.method(&fragment).ok_or_else(|| {
            LedgerError::Authorization(format!("no method `{fragment}` in `{ref_did}`"))
        })?;
        if !vm.purposes.contains(&purpose) {
            return Err(LedgerError::Authorization(format!(
                "method `{fragment}` lacks the required purpose"
            )));
        }
        Ok(vm.public_key.clone())
    }

    fn check_signature(
        payload: &Value,
        signature: &Signature,
        public_key: &[u8],
    ) -> Result<(), LedgerError> {
        let bytes = canonicalize(payload)?;
        if crypto::verify(public_key, &bytes, signature) {
            Ok(())
        } else {
            Err(LedgerError::Authorization(
                "payload signature does not verify".into(),
            ))
        }
    }

    /// Admission check for a draft against this (authoritative) state.
    pub fn validate(&self, draft: &TxDraft) -> Result<(), LedgerError> {
        match draft.kind {
            TxKind::DidCreate => {
                let p: DidCreatePayload = parse_payload(&draft.payload)?;
                let doc = DidDocument::from_value(&p.document)
                    .map_err(|e| LedgerError::Input(e.to_string()))?;
                doc.check_invariants()
                    .map_err(|e| LedgerError::Input(e.to_string()))?;
                if doc.version != 0
                    || doc.deactivated
                    || doc.controller.is_some()
                    || !doc.services.is_empty()
                    || doc.verification_methods.len() != 1
                {
                    return Err(LedgerError::Input(
                        "create must carry a version-0 document with exactly one method".into(),
                    ));
                }
                if doc.id != p.did {
                    return Err(LedgerError::Input("document id differs from payload did".into()));
                }
                let vm = &doc.verification_methods[0];
                let pk: [u8; 32] = vm
                    .public_key
                    .as_slice()
                    .try_into()
                    .map_err(|_| LedgerError::Input("bad key length".into()))?;
                if Did::from_public_key(&pk) != p.did {
                    return Err(LedgerError::Input(
                        "did is not derived from the initial public key".into(),
                    ));
                }
                if self.docs.contains_key(&p.did.to_string()) {
                    return Err(LedgerError::Conflict(format!("`{}` already exists", p.did)));
                }
                Self::check_signature(&draft.payload, &draft.submitter_signature, &vm.public_key)
            }
            TxKind::DidUpdate => {
                let p: DidUpdatePayload = parse_payload(&draft.payload)?;
                let current = self
                    .docs
                    .get(&p.did.to_string())
                    .ok_or_else(|| LedgerError::Authorization(format!("unknown DID `{}`", p.did)))?;
                if current.document.deactivated {
                    return Err(LedgerError::Lifecycle(format!("`{}` is deactivated", p.did)));
                }
                let doc = DidDocument::from_value(&p.document)
                    .map_err(|e| LedgerError::Input(e.to_string()))?;
                doc.check_invariants()
                    .map_err(|e| LedgerError::Input(e.to_string()))?;
                if doc.id != p.did {
                    return Err(LedgerError::Input("document id differs from payload did".into()));
                }
                if doc.deactivated {
                    return Err(LedgerError::Input(
                        "updates cannot set the deactivated flag; use deactivation".into(),
                    ));
                }
                if doc.version != current.document.version + 1 {
                    return Err(LedgerError::Input(format!(
                        "expected version {}, got {}",
                        current.document.version + 1,
                        doc.version
                    )));
                }
                let pk = self.authorized_key(&p.did, &p.signer_key_ref, Purpose::Authentication, true)?;
                Self::check_signature(&draft.payload, &draft.submitter_signature, &pk)
            }
            TxKind::DidDeactivate => {
                let p: DidDeactivatePayload = parse_payload(&draft.payload)?;
                let current = self
                    .docs
                    .get(&p.did.to_string())
                    .ok_or_else(|| LedgerError::Authorization(format!("unknown DID `{}`", p.did)))?;
                if current.document.deactivated {
                    return Err(LedgerError::Lifecycle(format!(
                        "`{}` is already deactivated",
                        p.did
                    )));
                }
                let pk = self.authorized_key(&p.did, &p.signer_key_ref, Purpose::Authentication, true)?;
                Self::check_signature(&draft.payload, &draft.submitter_signature, &pk)
            }
            TxKind::RevocationUpdate => {
                let p: RevocationPayload = parse_payload(&draft.payload)?;
                if p.registry_id.is_empty() {
                    return Err(LedgerError::Input("empty registry id".into()));
                }
                let issuer_doc = self
                    .docs
                    .get(&p.issuer.to_string())
                    .ok_or_else(|| LedgerError::Authorization(format!("unknown issuer `{}`", p.issuer)))?;
                if issuer_doc.document.deactivated {
                    return Err(LedgerError::Lifecycle(format!(
                        "issuer `{}` is deactivated",
                        p.issuer
                    )));
                }
                let pk = self.authorized_key(&p.issuer, &p.signer_key_ref, Purpose::Assertion, false)?;
                match (self.registries.get(&p.registry_id), &p.op) {
                    (None, RevocationOp::Allocate) => {
                        if p.index != 0 {
                            return Err(LedgerError::Input(
                                "first allocation in a registry must use index 0".into(),
                            ));
                        }
                    }
                    (None, RevocationOp::Revoke) => {
                        return Err(LedgerError::Input(format!(
                            "unknown registry `{}`",
                            p.registry_id
                        )));
                    }
                    (Some(reg), op) => {
                        if reg.issuer != p.issuer {
                            return Err(LedgerError::Authorization(format!(
                                "registry `{}` is owned by `{}`",
                                p.registry_id, reg.issuer
                            )));
                        }
                        match op {
                            RevocationOp::Allocate => {
                                if p.index != reg.next_index {
                                    return Err(LedgerError::Input(format!(
                                        "next free index is {}, got {}",
                                        reg.next_index, p.index
                                    )));
                                }
                            }
                            RevocationOp::Revoke => {
                                if p.index >= reg.next_index {
                                    return Err(LedgerError::Input(format!(
                                        "index {} was never allocated",
                                        p.index
                                    )));
                                }
                                if reg.revoked.contains(&p.index) {
                                    return Err(LedgerError::Conflict(format!(
                                        "index {} is already revoked",
                                        p.index
                                    )));
                                }
                            }
                        }
                    }
                }
                Self::check_signature(&draft.payload, &draft.submitter_signature, &pk)
            }
        }
    }

    /// Folds one committed transaction into the state. The transaction must
    /// have passed [`validate`](Self::validate) against the state it is
    /// applied to.
    pub fn apply(&mut self, tx: &Transaction) {
        match tx.kind {
            TxKind::DidCreate => {
                let p: DidCreatePayload = parse_payload(&tx.payload).expect("validated");
                let document = DidDocument::from_value(&p.document).expect("validated");
                self.docs.insert(
                    p.did.to_string(),
                    DocRecord {
                        document,
                        last_seq: tx.seq,
                    },
                );
            }
            TxKind::DidUpdate => {
                let p: DidUpdatePayload = parse_payload(&tx.payload).expect("validated");
                let document = DidDocument::from_value(&p.document).expect("validated");
                let record = self.docs.get_mut(&p.did.to_string()).expect("validated");
                record.document = document;
                record.last_seq = tx.seq;
            }
            TxKind::DidDeactivate => {
                let p: DidDeactivatePayload = parse_payload(&tx.payload).expect("validated");
                let record = self.docs.get_mut(&p.did.to_string()).expect("validated");
                record.document.deactivated = true;
                record.document.version += 1;
                record.last_seq = tx.seq;
            }
            TxKind::RevocationUpdate => {
                let p: RevocationPayload = parse_payload(&tx.payload).expect("validated");
                match p.op {
                    RevocationOp::Allocate => {
                        let reg = self
                            .registries
                            .entry(p.registry_id)
                            .or_insert_with(|| RegistryRecord {
                                issuer: p.issuer,
                                next_index: 0,
                                revoked: BTreeSet::new(),
                            });
                        reg.next_index += 1;
                    }
                    RevocationOp::Revoke => {
                        self.registries
                            .get_mut(&p.registry_id)
                            .expect("validated")
                            .revoked
                            .insert(p.index);
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The network
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct NodeCache {
    delay: u64,
    delivered_len: usize,
    state: LedgerState,
}

/// Globally ordered append-only log replicated to per-stakeholder nodes with
/// fixed delivery delays. Single-owner mutation; views are snapshots.
#[derive(Debug)]
pub struct LedgerNetwork {
    nodes: Vec<NodeId>,
    clock: u64,
    committed: Vec<Transaction>,
    seed: u64,
    authoritative: LedgerState,
    caches: BTreeMap<NodeId, NodeCache>,
}

impl LedgerNetwork {
    pub fn new(nodes: impl IntoIterator<Item = (NodeId, u64)>, seed: u64) -> Self {
        let mut ids = Vec::new();
        let mut caches = BTreeMap::new();
        for (node, delay) in nodes {
            ids.push(node.clone());
            caches.insert(
                node,
                NodeCache {
                    delay,
                    delivered_len: 0,
                    state: LedgerState::default(),
                },
            );
        }
        LedgerNetwork {
            nodes: ids,
            clock: 0,
            committed: Vec::new(),
            seed,
            authoritative: LedgerState::default(),
            caches,
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn delay(&self, node: &NodeId) -> Result<u64, LedgerError> {
        Ok(self.cache(node)?.delay)
    }

    pub fn max_delay(&self) -> u64 {
        self.caches.values().map(|c| c.delay).max().unwrap_or(0)
    }

    pub fn committed_len(&self) -> usize {
        self.committed.len()
    }

    fn cache(&self, node: &NodeId) -> Result<&NodeCache, LedgerError> {
        self.caches
            .get(node)
            .ok_or_else(|| LedgerError::UnknownNode(node.0.clone()))
    }

    /// Validates against the sequencer's authoritative state, assigns the
    /// next sequence number, and commits at the current tick.
    pub fn submit(&mut self, node: &NodeId, draft: TxDraft) -> Result<Receipt, LedgerError> {
        self.cache(node)?;
        canonicalize(&draft.payload)?;
        self.authoritative.validate(&draft)?;
        let tx = Transaction {
            kind: draft.kind,
            payload: draft.payload,
            submitter_did: draft.submitter_did,
            submitter_signature: draft.submitter_signature,
            seq: self.committed.len() as u64,
            commit_tick: self.clock,
        };
        self.authoritative.apply(&tx);
        let receipt = Receipt {
            seq: tx.seq,
            commit_tick: tx.commit_tick,
        };
        self.committed.push(tx);
        self.refresh_deliveries();
        Ok(receipt)
    }

    /// Advances the clock by `n` ticks and recomputes deliveries.
    pub fn tick(&mut self, n: u64) {
        assert!(n >= 1, "tick requires n >= 1");
        self.clock += n;
        self.refresh_deliveries();
    }

    /// Delivery rule: node `n` holds every transaction with
    /// `commit_tick + delay(n) <= clock`.
    fn refresh_deliveries(&mut self) {
        for cache in self.caches.values_mut() {
            while cache.delivered_len < self.committed.len() {
                let tx = &self.committed[cache.delivered_len];
                if tx.commit_tick + cache.delay > self.clock {
                    break;
                }
                cache.state.apply(tx);
                cache.delivered_len += 1;
            }
        }
    }

    pub fn view<'a>(&'a self, node: &NodeId) -> Result<NodeView<'a>, LedgerError> {
        let cache = self.cache(node)?;
        let node_ref = self
            .caches
            .keys()
            .find(|k| *k == node)
            .expect("cache hit implies key");
        Ok(NodeView {
            node: node_ref,
            delivered: &self.committed[..cache.delivered_len],
            as_of_tick: self.clock,
        })
    }

    /// Materialized state of a node's delivered prefix.
    pub fn state(&self, node: &NodeId) -> Result<&LedgerState, LedgerError> {
        Ok(&self.cache(node)?.state)
    }

    /// The sequencer's own state: every committed transaction applied.
    pub fn authoritative_state(&self) -> &LedgerState {
        &self.authoritative
    }

    /// Latest delivered document-bearing transaction for `did` at this node.
    pub fn query_latest(
        &self,
        node: &NodeId,
        did: &Did,
    ) -> Result<Option<&Transaction>, LedgerError> {
        let cache = self.cache(node)?;
        Ok(cache
            .state
            .docs
            .get(&did.to_string())
            .map(|rec| &self.committed[rec.last_seq as usize]))
    }

    /// One canonical-serialized transaction per line.
    pub fn export_log(&self) -> String {
        let mut out = String::new();
        for tx in &self.committed {
            let value = serde_json::to_value(tx).expect("transaction serializes");
            out.push_str(
                std::str::from_utf8(&canonicalize(&value).expect("no floats in transactions"))
                    .expect("canonical form is utf-8"),
            );
            out.push('\n');
        }
        out
    }

    /// Rebuilds a network from an exported log, re-validating every
    /// transaction. The clock ends at `final_clock`.
    pub fn replay(
        nodes: impl IntoIterator<Item = (NodeId, u64)>,
        seed: u64,
        log: &str,
        final_clock: u64,
    ) -> Result<Self, LedgerError> {
        let mut network = LedgerNetwork::new(nodes, seed);
        for line in log.lines() {
            if line.is_empty() {
                continue;
            }
            let tx: Transaction = serde_json::from_str(line)
                .map_err(|e| LedgerError::Input(format!("bad log line: {e}")))?;
            if tx.commit_tick < network.clock {
                return Err(LedgerError::Input("log commit ticks must be monotone".into()));
            }
            if tx.commit_tick > network.clock {
                network.tick(tx.commit_tick - network.clock);
            }
            let draft = TxDraft {
                kind: tx.kind,
                payload: tx.payload,
                submitter_did: tx.submitter_did,
                submitter_signature: tx.submitter_signature,
            };
            let sequencer_node = network.nodes[0].clone();
            let receipt = network.submit(&sequencer_node, draft)?;
            if receipt.seq != tx.seq {
                return Err(LedgerError::Input("log sequence numbers are not dense".into()));
            }
        }
        if final_clock > network.clock {
            network.tick(final_clock - network.clock);
        }
        Ok(network)
    }
}
