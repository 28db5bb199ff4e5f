//! Decentralized identity and key management on a simulated multi-stakeholder
//! ledger.
//!
//! The crate is organized in layers:
//!
//! - [`crypto`]: Ed25519 signatures, canonical serialization for signing, and
//!   content-derived identifiers.
//! - [`ledger`]: a deterministic simulation of a replicated append-only log
//!   with per-node delivery delays.
//! - [`did`]: DID syntax, document lifecycle (create / resolve / rotate /
//!   deactivate) and challenge-response proof of ownership.
//! - [`vc`]: verifiable credentials, presentations, and an on-ledger
//!   revocation registry.
//! - [`scenarios`]: executable multi-operator flows (roaming access, NF
//!   authorization, interconnect message alteration, key rotation, location
//!   attestation) with per-link message counting.

pub mod crypto;
pub mod did;
pub mod ledger;
pub mod scenarios;
pub mod vc;
