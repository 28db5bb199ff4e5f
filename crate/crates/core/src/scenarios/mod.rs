//! Actor-based renditions of the multi-operator flows, producing
//! deterministic reports with per-link message counts.
//!
//! Every scenario runs single-threaded against one [`LedgerNetwork`]; actors
//! communicate only through the harness message log, and every source of
//! randomness is derived from the run seed. Identical config and seed give
//! byte-identical reports.

mod flows;
mod interconnect;

pub use flows::*;
pub use interconnect::{InterconnectPatch, InterconnectVerdict, SignedInterconnectMessage};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::crypto::{canonicalize, KeyPair, Value};
use crate::did::{self, Did, DidError};
use crate::ledger::{LedgerError, LedgerNetwork, NodeId};
use crate::vc::{VcError, VerificationReport, Wallet};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Did(#[from] DidError),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "HomeMNO")]
    HomeMno,
    #[serde(rename = "VisitedMNO")]
    VisitedMno,
    Subscriber,
    #[serde(rename = "IoTDevice")]
    IotDevice,
    #[serde(rename = "NF_Consumer")]
    NfConsumer,
    #[serde(rename = "NF_Producer")]
    NfProducer,
    #[serde(rename = "NRF")]
    Nrf,
    #[serde(rename = "IPX")]
    Ipx,
    #[serde(rename = "OTTService")]
    OttService,
    Government,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    TerminalVisited,
    VisitedHome,
    IntraCore,
    LedgerLocalRead,
    OttLink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioMessage {
    pub from: String,
    pub to: String,
    pub link_class: LinkClass,
    pub payload_kind: String,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub node_id: String,
    pub delay_ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorSpec {
    pub actor_id: String,
    pub role: Role,
    pub node_id: String,
    pub key_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub nodes: Vec<NodeSpec>,
    pub actors: Vec<ActorSpec>,
    pub params: ScenarioParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScenarioParams {
    RoamingAccess(RoamingParams),
    BaselineCentralized {
        #[serde(default = "default_count")]
        subscriber_count: u64,
    },
    NfAuthorization {
        #[serde(default)]
        variant: NfVariant,
    },
    IpxAlteration(IpxParams),
    KeyRotationRoaming(RotationParams),
    LocationAttestation {
        #[serde(default)]
        variant: LocationVariant,
    },
}

impl ScenarioParams {
    pub fn scenario_name(&self) -> &'static str {
        match self {
            ScenarioParams::RoamingAccess(_) => "roaming_access",
            ScenarioParams::BaselineCentralized { .. } => "baseline_centralized",
            ScenarioParams::NfAuthorization { .. } => "nf_authorization",
            ScenarioParams::IpxAlteration(_) => "ipx_alteration",
            ScenarioParams::KeyRotationRoaming(_) => "key_rotation_roaming",
            ScenarioParams::LocationAttestation { .. } => "location_attestation",
        }
    }
}

fn default_count() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoamingParams {
    /// Subscriber/IoT-device count; devices beyond the configured subscriber
    /// actor are synthesized on its ledger node.
    #[serde(default = "default_count")]
    pub subscriber_count: u64,
    #[serde(default)]
    pub revoke_before_access: bool,
    #[serde(default)]
    pub revoke_at_tick: Option<u64>,
    /// Unique token planted in the credential claims; privacy checks scan
    /// exported ledger logs for it.
    #[serde(default)]
    pub sentinel_claim: Option<String>,
}

impl Default for RoamingParams {
    fn default() -> Self {
        RoamingParams {
            subscriber_count: 1,
            revoke_before_access: false,
            revoke_at_tick: None,
            sentinel_claim: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NfVariant {
    #[default]
    Happy,
    WrongProducer,
    Expired,
    Revoked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpxParams {
    /// Element names each IPX actor's alteration credential permits.
    pub permitted_elements: BTreeMap<String, Vec<String>>,
    /// Patches applied in order on the way from origin to receiver.
    pub patches: Vec<PatchPlan>,
    /// Revoke this actor's alteration credential right before delivery and
    /// report the first tick at which the receiver denies.
    #[serde(default)]
    pub revoke_vc_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchPlan {
    pub ipx_actor: String,
    pub element: String,
    pub new_value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationParams {
    pub rotate_at_tick: u64,
    pub keep_old_assertion_key: bool,
    #[serde(default)]
    pub new_endpoint: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationVariant {
    #[default]
    InWindow,
    Stale,
    Onboarding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioOutcome {
    Success,
    ExpectedDenial,
    Failure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario_name: String,
    pub outcome: ScenarioOutcome,
    pub message_counts: BTreeMap<LinkClass, u64>,
    pub ticks_elapsed: u64,
    pub verification_reports: Vec<VerificationReport>,
    pub seed: u64,
}

impl ScenarioReport {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Canonical byte form, the golden-test surface.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonicalize(&self.to_value()).expect("report is float-free")
    }
}

/// A finished run: the report plus the exported logs, for audit and privacy
/// scanning.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    /// One canonical transaction per line — everything replicated on-ledger.
    pub ledger_log: String,
    /// One canonical record per line of the measured message log.
    pub message_log: String,
}

/// Runs the scenario named in `config.params`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    run_scenario_full(config).map(|run| run.report)
}

/// Like [`run_scenario`], also returning the exported logs.
pub fn run_scenario_full(config: &ScenarioConfig) -> Result<ScenarioRun, ScenarioError> {
    match &config.params {
        ScenarioParams::RoamingAccess(p) => run_roaming_access(config, p),
        ScenarioParams::BaselineCentralized { subscriber_count } => {
            run_baseline_centralized(config, *subscriber_count)
        }
        ScenarioParams::NfAuthorization { variant } => run_nf_authorization(config, *variant),
        ScenarioParams::IpxAlteration(p) => run_ipx_alteration(config, p),
        ScenarioParams::KeyRotationRoaming(p) => run_key_rotation_roaming(config, p),
        ScenarioParams::LocationAttestation { variant } => {
            run_location_attestation(config, *variant)
        }
    }
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

/// Derives 32 bytes of key material from an integer seed; all actor keys come
/// from here so runs are reproducible from the config alone.
pub fn key_seed_bytes(domain: &str, seed: u64, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"sim6g-key-seed");
    h.update(domain.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

pub struct Actor {
    pub actor_id: String,
    pub role: Role,
    pub did: Did,
    pub wallet: Wallet,
    pub node: NodeId,
}

/// Scenario world: the ledger network, the actors, and the measured-phase
/// message log.
pub struct World {
    pub network: LedgerNetwork,
    pub actors: BTreeMap<String, Actor>,
    actor_order: Vec<String>,
    messages: Vec<ScenarioMessage>,
    measuring: bool,
    seed: u64,
}

impl World {
    /// Creates the network and anchors one DID per configured actor, then
    /// ticks until every node has delivered the setup transactions.
    pub fn build(config: &ScenarioConfig) -> Result<World, ScenarioError> {
        if config.nodes.is_empty() {
            return Err(ScenarioError::Config("at least one node is required".into()));
        }
        let mut network = LedgerNetwork::new(
            config
                .nodes
                .iter()
                .map(|n| (NodeId(n.node_id.clone()), n.delay_ticks)),
            config.seed,
        );
        let mut actors = BTreeMap::new();
        let mut actor_order = Vec::new();
        for spec in &config.actors {
            if !config.nodes.iter().any(|n| n.node_id == spec.node_id) {
                return Err(ScenarioError::Config(format!(
                    "actor `{}` references undeclared node `{}`",
                    spec.actor_id, spec.node_id
                )));
            }
            if actors.contains_key(&spec.actor_id) {
                return Err(ScenarioError::Config(format!(
                    "duplicate actor id `{}`",
                    spec.actor_id
                )));
            }
            let node = NodeId(spec.node_id.clone());
            let keypair = KeyPair::from_seed(&key_seed_bytes("actor", spec.key_seed, 0))
                .expect("derived seed has the right length");
            let (actor_did, _) = did::create_did(&mut network, &node, &keypair)?;
            actor_order.push(spec.actor_id.clone());
            actors.insert(
                spec.actor_id.clone(),
                Actor {
                    actor_id: spec.actor_id.clone(),
                    role: spec.role,
                    did: actor_did,
                    wallet: Wallet::new(actor_did, "#key-0", keypair),
                    node,
                },
            );
        }
        let mut world = World {
            network,
            actors,
            actor_order,
            messages: Vec::new(),
            measuring: false,
            seed: config.seed,
        };
        world.sync();
        Ok(world)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Ticks until every node has delivered everything committed so far.
    pub fn sync(&mut self) {
        let d = self.network.max_delay();
        if d > 0 {
            self.network.tick(d);
        }
    }

    pub fn actor(&self, id: &str) -> Result<&Actor, ScenarioError> {
        self.actors
            .get(id)
            .ok_or_else(|| ScenarioError::Config(format!("unknown actor `{id}`")))
    }

    pub fn actor_mut(&mut self, id: &str) -> Result<&mut Actor, ScenarioError> {
        self.actors
            .get_mut(id)
            .ok_or_else(|| ScenarioError::Config(format!("unknown actor `{id}`")))
    }

    /// First configured actor with the given role.
    pub fn by_role(&self, role: Role) -> Result<&Actor, ScenarioError> {
        self.actor_order
            .iter()
            .filter_map(|id| self.actors.get(id))
            .find(|a| a.role == role)
            .ok_or_else(|| ScenarioError::Config(format!("no actor with role {role:?} configured")))
    }

    pub fn all_by_role(&self, role: Role) -> Vec<String> {
        self.actor_order
            .iter()
            .filter(|id| self.actors[*id].role == role)
            .cloned()
            .collect()
    }

    /// Starts the measured phase; only messages logged from here on count.
    pub fn start_measuring(&mut self) {
        self.measuring = true;
    }

    pub fn send(&mut self, from: &str, to: &str, link_class: LinkClass, payload_kind: &str) {
        if self.measuring {
            self.messages.push(ScenarioMessage {
                from: from.to_string(),
                to: to.to_string(),
                link_class,
                payload_kind: payload_kind.to_string(),
                tick: self.network.clock(),
            });
        }
    }

    /// A read against the actor's own ledger node.
    pub fn ledger_read(&mut self, actor_id: &str, payload_kind: &str) {
        self.send(actor_id, actor_id, LinkClass::LedgerLocalRead, payload_kind);
    }

    pub fn messages(&self) -> &[ScenarioMessage] {
        &self.messages
    }

    pub fn message_counts(&self) -> BTreeMap<LinkClass, u64> {
        let mut counts: BTreeMap<LinkClass, u64> = [
            (LinkClass::TerminalVisited, 0),
            (LinkClass::VisitedHome, 0),
            (LinkClass::IntraCore, 0),
            (LinkClass::LedgerLocalRead, 0),
            (LinkClass::OttLink, 0),
        ]
        .into_iter()
        .collect();
        for m in &self.messages {
            *counts.entry(m.link_class).or_insert(0) += 1;
        }
        counts
    }

    /// Deterministic 16-byte nonce for a verifier-issued challenge.
    pub fn nonce(&self, tag: &str, index: u64) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(b"sim6g-nonce");
        h.update(self.seed.to_le_bytes());
        h.update(tag.as_bytes());
        h.update(index.to_le_bytes());
        h.update(self.network.clock().to_le_bytes());
        h.finalize()[..16].to_vec()
    }

    /// One-record-per-line export of the measured message log.
    pub fn export_messages(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            let value = serde_json::to_value(m).expect("message serializes");
            out.push_str(std::str::from_utf8(&canonicalize(&value).expect("float-free")).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn report(
        &self,
        name: &str,
        outcome: ScenarioOutcome,
        verification_reports: Vec<VerificationReport>,
    ) -> ScenarioReport {
        ScenarioReport {
            scenario_name: name.to_string(),
            outcome,
            message_counts: self.message_counts(),
            ticks_elapsed: self.network.clock(),
            verification_reports,
            seed: self.seed,
        }
    }

    /// Closes out the run, bundling the report with the exported logs.
    pub fn finish(
        self,
        name: &str,
        outcome: ScenarioOutcome,
        verification_reports: Vec<VerificationReport>,
    ) -> ScenarioRun {
        ScenarioRun {
            report: self.report(name, outcome, verification_reports),
            ledger_log: self.network.export_log(),
            message_log: self.export_messages(),
        }
    }
}
