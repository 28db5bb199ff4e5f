//! Signed interconnect messages with verifiable third-party alterations.
//!
//! The origin operator signs the original information elements once. Each
//! intermediary applies ordered patches; a patch signs the digest of the
//! whole prior message state concatenated with the canonical patch body, so
//! reordering or rewriting any earlier part of the chain breaks a signature.
//! Authority to touch an element comes from an alteration credential issued
//! by the origin to the patcher; the receiving operator checks everything
//! against its own ledger node.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::{self, canonical_digest, canonicalize, Value};
use crate::did::{self, Did, Purpose};
use crate::ledger::{LedgerNetwork, NodeId};
use crate::vc::{self, Credential, Outcome, VcError, Wallet};

pub const ALTERATION_SCHEMA: &str = "AlterationPermission";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterconnectPatch {
    pub element_name: String,
    pub new_value: Value,
    pub patcher: Did,
    pub patch_signature: crate::crypto::Signature,
    pub alteration_vc: Credential,
}

impl InterconnectPatch {
    /// Patch body covered by the patch signature (everything but the
    /// signature itself).
    fn body_value(&self) -> Value {
        serde_json::json!({
            "alteration_vc": self.alteration_vc.to_value(),
            "element_name": self.element_name,
            "new_value": self.new_value,
            "patcher": self.patcher,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedInterconnectMessage {
    pub origin: Did,
    pub elements: BTreeMap<String, Value>,
    pub origin_signature: crate::crypto::Signature,
    pub patches: Vec<InterconnectPatch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterconnectVerdict {
    Valid,
    /// `patch_index` is `None` when the origin signature itself fails.
    Denied {
        patch_index: Option<usize>,
        reason: String,
    },
}

fn elements_value(elements: &BTreeMap<String, Value>) -> Value {
    serde_json::to_value(elements).expect("elements serialize")
}

impl SignedInterconnectMessage {
    /// Origin signs the canonical form of the original elements.
    pub fn new(
        origin_wallet: &Wallet,
        elements: BTreeMap<String, Value>,
    ) -> Result<Self, VcError> {
        let bytes = canonicalize(&elements_value(&elements))?;
        let origin_signature = origin_wallet.auth_key().sign(&bytes);
        Ok(SignedInterconnectMessage {
            origin: origin_wallet.did,
            elements,
            origin_signature,
            patches: Vec::new(),
        })
    }

    /// Digest of the message state after the first `upto` patches; each new
    /// patch signs the digest of everything before it.
    fn state_digest(&self, upto: usize) -> crate::crypto::ContentDigest {
        let state = serde_json::json!({
            "elements": elements_value(&self.elements),
            "origin": self.origin,
            "patches": self.patches[..upto]
                .iter()
                .map(|p| serde_json::to_value(p).expect("patch serializes"))
                .collect::<Vec<_>>(),
        });
        canonical_digest(&state).expect("message state is float-free")
    }

    /// Appends a patch signed by `patcher_wallet`, presenting
    /// `alteration_vc` as its authority.
    pub fn apply_patch(
        &mut self,
        patcher_wallet: &Wallet,
        element_name: &str,
        new_value: Value,
        alteration_vc: Credential,
    ) -> Result<(), VcError> {
        let mut patch = InterconnectPatch {
            element_name: element_name.to_string(),
            new_value,
            patcher: patcher_wallet.did,
            patch_signature: crate::crypto::Signature {
                bytes: Vec::new(),
                suite_id: String::new(),
            },
            alteration_vc,
        };
        let mut input = self.state_digest(self.patches.len()).0.to_vec();
        input.extend_from_slice(&canonicalize(&patch.body_value())?);
        patch.patch_signature = patcher_wallet.auth_key().sign(&input);
        self.patches.push(patch);
        Ok(())
    }

    /// Elements after applying all patches in order.
    pub fn effective_elements(&self) -> BTreeMap<String, Value> {
        let mut out = self.elements.clone();
        for p in &self.patches {
            out.insert(p.element_name.clone(), p.new_value.clone());
        }
        out
    }

    /// Receiver-side validation against the receiver's own ledger node.
    pub fn verify(&self, network: &LedgerNetwork, node: &NodeId) -> InterconnectVerdict {
        // origin signature over the unpatched elements
        let origin_ok = (|| {
            let (doc, _) = did::resolve(network, node, &self.origin).ok()?;
            if doc.deactivated {
                return None;
            }
            let bytes = canonicalize(&elements_value(&self.elements)).ok()?;
            let signed = doc
                .methods_for(Purpose::Assertion)
                .any(|vm| crypto::verify(&vm.public_key, &bytes, &self.origin_signature));
            signed.then_some(())
        })()
        .is_some();
        if !origin_ok {
            return InterconnectVerdict::Denied {
                patch_index: None,
                reason: "origin signature does not verify".into(),
            };
        }

        for (i, patch) in self.patches.iter().enumerate() {
            if let Err(reason) = self.verify_patch(network, node, i, patch) {
                return InterconnectVerdict::Denied {
                    patch_index: Some(i),
                    reason,
                };
            }
        }
        InterconnectVerdict::Valid
    }

    fn verify_patch(
        &self,
        network: &LedgerNetwork,
        node: &NodeId,
        index: usize,
        patch: &InterconnectPatch,
    ) -> Result<(), String> {
        // chain signature: digest of prior state plus canonical patch body
        let mut input = self.state_digest(index).0.to_vec();
        input.extend_from_slice(
            &canonicalize(&patch.body_value()).map_err(|e| format!("unsignable patch: {e}"))?,
        );
        let (doc, _) = did::resolve(network, node, &patch.patcher)
            .map_err(|_| "patcher DID not resolvable".to_string())?;
        if doc.deactivated {
            return Err("patcher DID is deactivated".into());
        }
        if !doc
            .methods_for(Purpose::Authentication)
            .any(|vm| crypto::verify(&vm.public_key, &input, &patch.patch_signature))
        {
            return Err("patch signature does not verify".into());
        }

        // alteration credential: issued by the origin to this patcher and
        // valid in the receiver's view
        let cred = &patch.alteration_vc;
        if cred.schema != ALTERATION_SCHEMA {
            return Err(format!("credential schema `{}` is not an alteration permission", cred.schema));
        }
        if cred.issuer != self.origin {
            return Err("alteration credential was not issued by the message origin".into());
        }
        let report = vc::verify_credential(network, node, cred, Some(&patch.patcher));
        if report.outcome != Outcome::Accept {
            return Err("alteration credential does not verify".into());
        }
        let permitted = cred.claims.get("permitted_elements").and_then(Value::as_array);
        let allowed = permitted.is_some_and(|names| {
            names
                .iter()
                .any(|n| n.as_str() == Some(patch.element_name.as_str()))
        });
        if !allowed {
            return Err(format!("element `{}` is not permitted", patch.element_name));
        }
        Ok(())
    }
}
