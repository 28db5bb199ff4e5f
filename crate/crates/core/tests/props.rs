//! Property tests: canonicalization stability, ledger convergence and
//! determinism, tamper evidence, and authorization soundness.

use proptest::prelude::*;
use serde_json::Value;

use sim6g_core::crypto::{canonicalize, KeyPair};
use sim6g_core::did::{self, Purpose};
use sim6g_core::ledger::{LedgerNetwork, NodeId};
use sim6g_core::vc::{self, Outcome, Wallet};

/// Arbitrary float-free JSON values.
fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(|n| Value::Number(n.into())),
        any::<u64>().prop_map(|n| Value::Number(n.into())),
        "[\\x00-\\x7F]{0,12}".prop_map(Value::String),
        "\\PC{0,8}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-zé]{0,6}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn seed32(n: u64) -> [u8; 32] {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&n.to_le_bytes());
    s
}

fn network(delays: &[u64], seed: u64) -> (LedgerNetwork, Vec<NodeId>) {
    let nodes: Vec<NodeId> = (0..delays.len()).map(|i| NodeId(format!("n{i}"))).collect();
    let net = LedgerNetwork::new(
        nodes.iter().cloned().zip(delays.iter().copied()),
        seed,
    );
    (net, nodes)
}

proptest! {
    #[test]
    fn canonical_bytes_round_trip(value in json_value()) {
        let bytes = canonicalize(&value).unwrap();
        let reparsed: Value = serde_json::from_slice(&bytes).unwrap();
        // canonical form is a fixed point
        prop_assert_eq!(canonicalize(&reparsed).unwrap(), bytes);
    }

    #[test]
    fn floats_are_rejected(x in proptest::num::f64::NORMAL) {
        let value = serde_json::json!({ "v": x });
        prop_assert!(canonicalize(&value).is_err());
    }

    #[test]
    fn node_states_converge_after_max_delay(
        delays in prop::collection::vec(0u64..=10, 1..5),
        updates in 0usize..4,
        seed in any::<u64>(),
    ) {
        let (mut net, nodes) = network(&delays, seed);
        let kp = KeyPair::from_seed(&seed32(seed)).unwrap();
        let (did, _) = did::create_did(&mut net, &nodes[0], &kp).unwrap();
        for _ in 0..updates {
            let mut body = net
                .authoritative_state()
                .docs
                .get(&did.to_string())
                .unwrap()
                .document
                .clone();
            body.version += 1;
            did::update_document(&mut net, &nodes[0], &did, body, &kp, &format!("{did}#key-0"))
                .unwrap();
        }
        net.tick(net.max_delay().max(1));
        for node in &nodes {
            let (doc, meta) = did::resolve(&net, node, &did).unwrap();
            prop_assert_eq!(doc.version, updates as u64);
            prop_assert!(meta.version == updates as u64);
        }
    }

    #[test]
    fn exported_logs_are_deterministic(
        delays in prop::collection::vec(0u64..=5, 1..4),
        seed in any::<u64>(),
    ) {
        let build = || {
            let (mut net, nodes) = network(&delays, seed);
            let kp = KeyPair::from_seed(&seed32(seed ^ 1)).unwrap();
            let (did, _) = did::create_did(&mut net, &nodes[0], &kp).unwrap();
            net.tick(3);
            did::deactivate(&mut net, &nodes[0], &did, &kp, &format!("{did}#key-0")).unwrap();
            net.export_log()
        };
        prop_assert_eq!(build(), build());
    }

    #[test]
    fn replay_reproduces_the_log(
        delays in prop::collection::vec(0u64..=5, 1..4),
        seed in any::<u64>(),
    ) {
        let (mut net, nodes) = network(&delays, seed);
        let kp = KeyPair::from_seed(&seed32(seed ^ 2)).unwrap();
        let (_did, _) = did::create_did(&mut net, &nodes[0], &kp).unwrap();
        net.tick(net.max_delay().max(1));
        let log = net.export_log();
        let replayed = LedgerNetwork::replay(
            nodes.iter().cloned().zip(delays.iter().copied()),
            net.seed(),
            &log,
            net.clock(),
        ).unwrap();
        prop_assert_eq!(replayed.export_log(), log);
    }

    #[test]
    fn foreign_keys_never_authorize_updates(owner in any::<u64>(), thief in any::<u64>()) {
        prop_assume!(owner != thief);
        let (mut net, nodes) = network(&[0], 1);
        let owner_kp = KeyPair::from_seed(&seed32(owner)).unwrap();
        let thief_kp = KeyPair::from_seed(&seed32(thief)).unwrap();
        let (did, _) = did::create_did(&mut net, &nodes[0], &owner_kp).unwrap();
        let (mut body, _) = did::resolve(&net, &nodes[0], &did).unwrap();
        body.version += 1;
        let res = did::update_document(
            &mut net, &nodes[0], &did, body, &thief_kp, &format!("{did}#key-0"),
        );
        prop_assert!(res.is_err());
    }

    #[test]
    fn single_byte_credential_tampering_never_verifies(
        byte_index in any::<prop::sample::Index>(),
        bit in 0u8..8,
    ) {
        let (mut net, nodes) = network(&[0], 9);
        let issuer_kp = KeyPair::from_seed(&seed32(100)).unwrap();
        let holder_kp = KeyPair::from_seed(&seed32(200)).unwrap();
        let (issuer_did, _) = did::create_did(&mut net, &nodes[0], &issuer_kp).unwrap();
        let (holder_did, _) = did::create_did(&mut net, &nodes[0], &holder_kp).unwrap();
        let issuer = Wallet::new(issuer_did, "#key-0", issuer_kp);
        let cred = vc::issue(
            &mut net, &nodes[0], &issuer, &holder_did, "AccessPermission",
            serde_json::json!({"tier": "gold"}), 0, 100, false,
        ).unwrap();
        let mut bytes = canonicalize(&serde_json::to_value(&cred).unwrap()).unwrap();
        let i = byte_index.index(bytes.len());
        bytes[i] ^= 1 << bit;
        if let Ok(mutated) = serde_json::from_slice::<vc::Credential>(&bytes) {
            if mutated != cred {
                let report = vc::verify_credential(&net, &nodes[0], &mutated, Some(&holder_did));
                prop_assert_eq!(report.outcome, Outcome::Reject);
            }
        }
    }
}

#[test]
fn rotated_out_keys_lose_every_purpose() {
    let (mut net, nodes) = network(&[0, 3], 5);
    let old_kp = KeyPair::from_seed(&seed32(7)).unwrap();
    let new_kp = KeyPair::from_seed(&seed32(8)).unwrap();
    let (did, _) = did::create_did(&mut net, &nodes[0], &old_kp).unwrap();
    let (mut body, _) = did::resolve(&net, &nodes[0], &did).unwrap();
    body.version += 1;
    body.verification_methods = vec![did::VerificationMethod::new(
        "#key-1",
        &new_kp,
        [Purpose::Authentication, Purpose::Assertion],
    )];
    did::update_document(&mut net, &nodes[0], &did, body, &old_kp, &format!("{did}#key-0"))
        .unwrap();
    net.tick(3);
    for node in &nodes {
        let (doc, _) = did::resolve(&net, node, &did).unwrap();
        assert!(doc.method("#key-0").is_none());
        assert!(doc.has_purpose_key(Purpose::Authentication));
    }
}
