//! The executable multi-operator flows.
//!
//! Each flow separates a setup phase (DID anchoring, credential issuance —
//! provisioning, not measured) from the measured access phase. The measured
//! message log is what the per-link counts in the report are computed from.

use std::collections::BTreeMap;

use crate::crypto::Value;
use crate::did::{self, Purpose, ServiceEndpointEntry, VerificationMethod};
use crate::ledger::NodeId;
use crate::vc::{self, Credential, Outcome, VerificationReport, Wallet};

use super::{
    key_seed_bytes, interconnect::ALTERATION_SCHEMA, IpxParams, LinkClass, NfVariant,
    LocationVariant, RoamingParams, RotationParams, ScenarioConfig, ScenarioError, ScenarioOutcome,
    ScenarioRun, SignedInterconnectMessage, InterconnectVerdict, Role, World,
};
use crate::crypto::KeyPair;

/// Cap on per-run verification reports embedded in a scenario report; large
/// device populations would otherwise dominate the output.
const MAX_EMBEDDED_REPORTS: usize = 8;

fn push_report(reports: &mut Vec<VerificationReport>, report: VerificationReport) {
    if reports.len() < MAX_EMBEDDED_REPORTS {
        reports.push(report);
    }
}

struct Peer {
    actor_id: String,
    did: crate::did::Did,
    node: NodeId,
    wallet: Wallet,
}

fn peer(world: &World, actor_id: &str) -> Result<Peer, ScenarioError> {
    let actor = world.actor(actor_id)?;
    Ok(Peer {
        actor_id: actor.actor_id.clone(),
        did: actor.did,
        node: actor.node.clone(),
        wallet: actor.wallet.clone(),
    })
}

fn peer_by_role(world: &World, role: Role) -> Result<Peer, ScenarioError> {
    let id = world.by_role(role)?.actor_id.clone();
    peer(world, &id)
}

/// Challenge → presentation → local verification, logging the exchange on
/// `link`. The verifier consults only its own ledger node.
fn present_and_verify(
    world: &mut World,
    holder_label: &str,
    holder_wallet: &Wallet,
    credential: &Credential,
    verifier: &Peer,
    link: LinkClass,
    nonce_tag: &str,
    nonce_index: u64,
) -> Result<(bool, VerificationReport), ScenarioError> {
    world.send(&verifier.actor_id, holder_label, link, "access_challenge");
    let nonce = world.nonce(nonce_tag, nonce_index);
    let presentation = vc::present(holder_wallet, vec![credential.clone()], &nonce, &verifier.did)?;
    world.send(holder_label, &verifier.actor_id, link, "presentation");
    world.ledger_read(&verifier.actor_id, "resolve_did_documents");
    world.ledger_read(&verifier.actor_id, "revocation_status");
    let report =
        vc::verify_presentation(&world.network, &verifier.node, &presentation, &nonce, &verifier.did);
    world.send(&verifier.actor_id, holder_label, link, "access_decision");
    Ok((report.outcome == Outcome::Accept, report))
}

// ---------------------------------------------------------------------------
// Roaming access (decentralized) and the centralized baseline
// ---------------------------------------------------------------------------

/// Home operator provisions access credentials; the visited operator
/// authorizes subscribers entirely at the edge, against its own ledger node.
pub fn run_roaming_access(
    config: &ScenarioConfig,
    params: &RoamingParams,
) -> Result<ScenarioRun, ScenarioError> {
    let name = "roaming_access";
    if params.subscriber_count == 0 {
        return Err(ScenarioError::Config("subscriber_count must be at least 1".into()));
    }
    let mut world = World::build(config)?;
    let home = peer_by_role(&world, Role::HomeMno)?;
    let visited = peer_by_role(&world, Role::VisitedMno)?;
    let subscriber = peer_by_role(&world, Role::Subscriber)
        .or_else(|_| peer_by_role(&world, Role::IotDevice))?;

    // Devices beyond the configured subscriber are synthesized on its node.
    // Revocation status is tracked where a variant needs it or the run is
    // desk-scale; the bulk IoT population skips per-device registry entries.
    let with_status = params.revoke_before_access
        || params.revoke_at_tick.is_some()
        || params.subscriber_count <= 1000;
    let mut devices: Vec<(String, Wallet)> = vec![(subscriber.actor_id.clone(), subscriber.wallet)];
    for i in 1..params.subscriber_count {
        let kp = KeyPair::from_seed(&key_seed_bytes("device", config.seed, i)).unwrap();
        let (device_did, _) = did::create_did(&mut world.network, &subscriber.node, &kp)?;
        devices.push((format!("{}-{i}", subscriber.actor_id), Wallet::new(device_did, "#key-0", kp)));
    }

    let mut claims = serde_json::json!({"service_profile": "data"});
    if let Some(token) = &params.sentinel_claim {
        claims["note"] = Value::String(token.clone());
    }
    let horizon = world.network.clock() + 100_000;
    let mut credentials = Vec::with_capacity(devices.len());
    for (_, wallet) in &devices {
        let cred = vc::issue(
            &mut world.network,
            &home.node,
            &home.wallet,
            &wallet.did,
            "AccessPermission",
            claims.clone(),
            0,
            horizon,
            with_status,
        )?;
        credentials.push(cred);
    }
    world.sync();

    if params.revoke_before_access {
        let status = credentials[0]
            .status
            .clone()
            .expect("revocation variants always track status");
        vc::revoke(&mut world.network, &home.node, &home.wallet, &status)?;
        world.sync();
    }

    world.start_measuring();

    // Timed-revocation variant: revoke at the requested tick and report the
    // first tick at which the visited operator denies.
    if let Some(revoke_tick) = params.revoke_at_tick {
        if world.network.clock() < revoke_tick {
            let dt = revoke_tick - world.network.clock();
            world.network.tick(dt);
        }
        let status = credentials[0].status.clone().expect("status tracked");
        let receipt = vc::revoke(&mut world.network, &home.node, &home.wallet, &status)?;
        let deadline = receipt.commit_tick + world.network.max_delay() + 2;
        let mut reports = Vec::new();
        loop {
            let now = world.network.clock();
            let (accepted, report) = present_and_verify(
                &mut world,
                &devices[0].0,
                &devices[0].1,
                &credentials[0],
                &visited,
                LinkClass::TerminalVisited,
                "roaming-revoked",
                now,
            )?;
            push_report(&mut reports, report);
            if !accepted {
                return Ok(world.finish(name, ScenarioOutcome::ExpectedDenial, reports));
            }
            if world.network.clock() >= deadline {
                return Ok(world.finish(
                    name,
                    ScenarioOutcome::Failure("revocation never took effect".into()),
                    reports,
                ));
            }
            world.network.tick(1);
        }
    }

    let mut reports = Vec::new();
    let mut denials = 0u64;
    for (i, ((label, wallet), credential)) in devices.iter().zip(&credentials).enumerate() {
        let (accepted, report) = present_and_verify(
            &mut world,
            label,
            wallet,
            credential,
            &visited,
            LinkClass::TerminalVisited,
            "roaming",
            i as u64,
        )?;
        push_report(&mut reports, report);
        if !accepted {
            denials += 1;
        }
    }

    let outcome = if denials == 0 {
        ScenarioOutcome::Success
    } else if params.revoke_before_access && denials == 1 {
        ScenarioOutcome::ExpectedDenial
    } else {
        ScenarioOutcome::Failure(format!("{denials} unexpected denials"))
    };
    Ok(world.finish(name, outcome, reports))
}

/// Today's flow for comparison: every access performs an authentication
/// round trip to the home operator.
pub fn run_baseline_centralized(
    config: &ScenarioConfig,
    subscriber_count: u64,
) -> Result<ScenarioRun, ScenarioError> {
    let mut world = World::build(config)?;
    let home = peer_by_role(&world, Role::HomeMno)?;
    let visited = peer_by_role(&world, Role::VisitedMno)?;
    let subscriber = peer_by_role(&world, Role::Subscriber)
        .or_else(|_| peer_by_role(&world, Role::IotDevice))?;

    world.start_measuring();
    for i in 0..subscriber_count {
        let label = if i == 0 {
            subscriber.actor_id.clone()
        } else {
            format!("{}-{i}", subscriber.actor_id)
        };
        world.send(&label, &visited.actor_id, LinkClass::TerminalVisited, "access_request");
        world.send(&visited.actor_id, &home.actor_id, LinkClass::VisitedHome, "auth_material_request");
        world.send(&home.actor_id, &visited.actor_id, LinkClass::VisitedHome, "auth_material_response");
        world.send(&visited.actor_id, &label, LinkClass::TerminalVisited, "access_decision");
    }
    Ok(world.finish("baseline_centralized", ScenarioOutcome::Success, Vec::new()))
}

// ---------------------------------------------------------------------------
// NF-to-NF authorization
// ---------------------------------------------------------------------------

/// The repository function issues a network-authorization credential to the
/// consuming function; the producing function verifies it locally instead of
/// introspecting a token.
pub fn run_nf_authorization(
    config: &ScenarioConfig,
    variant: NfVariant,
) -> Result<ScenarioRun, ScenarioError> {
    let name = "nf_authorization";
    let mut world = World::build(config)?;
    let nrf = peer_by_role(&world, Role::Nrf)?;
    let consumer = peer_by_role(&world, Role::NfConsumer)?;
    let producers = world.all_by_role(Role::NfProducer);
    if producers.is_empty() {
        return Err(ScenarioError::Config("no actor with role NF_Producer configured".into()));
    }
    if variant == NfVariant::WrongProducer && producers.len() < 2 {
        return Err(ScenarioError::Config(
            "the wrong_producer variant needs two NF_Producer actors".into(),
        ));
    }
    let named_producer = peer(&world, &producers[0])?;
    // The verifier is the named producer except in the mismatch variant.
    let verifier = if variant == NfVariant::WrongProducer {
        peer(&world, &producers[1])?
    } else {
        peer(&world, &producers[0])?
    };

    let claims = serde_json::json!({
        "allowed_service": "nf-data",
        "producer": named_producer.did,
    });
    let valid_until = match variant {
        NfVariant::Expired => world.network.clock(),
        _ => world.network.clock() + 100_000,
    };
    let credential = vc::issue(
        &mut world.network,
        &nrf.node,
        &nrf.wallet,
        &consumer.did,
        "NetworkAuthorization",
        claims,
        0,
        valid_until,
        true,
    )?;
    world.sync();
    match variant {
        NfVariant::Revoked => {
            let status = credential.status.clone().expect("issued with status");
            vc::revoke(&mut world.network, &nrf.node, &nrf.wallet, &status)?;
            world.sync();
        }
        NfVariant::Expired if world.network.clock() <= valid_until => {
            world.network.tick(valid_until - world.network.clock() + 1);
        }
        _ => {}
    }

    world.start_measuring();
    let (mut accepted, report) = present_and_verify(
        &mut world,
        &consumer.actor_id,
        &consumer.wallet,
        &credential,
        &verifier,
        LinkClass::IntraCore,
        "nf-authz",
        0,
    )?;
    // The producer additionally checks that the credential names it and
    // covers the requested service.
    world.ledger_read(&verifier.actor_id, "claims_check");
    if accepted {
        let claims = &credential.claims;
        accepted = claims.get("producer").and_then(Value::as_str)
            == Some(verifier.did.to_string().as_str())
            && claims.get("allowed_service").and_then(Value::as_str) == Some("nf-data");
    }

    let outcome = match (variant, accepted) {
        (NfVariant::Happy, true) => ScenarioOutcome::Success,
        (NfVariant::Happy, false) => ScenarioOutcome::Failure("authorization unexpectedly denied".into()),
        (_, false) => ScenarioOutcome::ExpectedDenial,
        (_, true) => ScenarioOutcome::Failure("negative variant unexpectedly accepted".into()),
    };
    Ok(world.finish(name, outcome, vec![report]))
}

// ---------------------------------------------------------------------------
// Interconnect message alteration
// ---------------------------------------------------------------------------

/// An interconnect provider patches signaling elements under an alteration
/// credential; the receiving operator validates the whole patch chain via its
/// own ledger node.
pub fn run_ipx_alteration(
    config: &ScenarioConfig,
    params: &IpxParams,
) -> Result<ScenarioRun, ScenarioError> {
    let name = "ipx_alteration";
    let mut world = World::build(config)?;
    let origin = peer_by_role(&world, Role::HomeMno)?;
    let receiver = peer_by_role(&world, Role::VisitedMno)?;

    // Alteration credentials, one per IPX actor with configured permissions.
    let mut ipx_credentials: BTreeMap<String, Credential> = BTreeMap::new();
    for (actor_id, elements) in &params.permitted_elements {
        let ipx = peer(&world, actor_id)?;
        if world.actor(actor_id)?.role != Role::Ipx {
            return Err(ScenarioError::Config(format!("actor `{actor_id}` is not an IPX")));
        }
        let horizon = world.network.clock() + 100_000;
        let cred = vc::issue(
            &mut world.network,
            &origin.node,
            &origin.wallet,
            &ipx.did,
            ALTERATION_SCHEMA,
            serde_json::json!({ "permitted_elements": elements }),
            0,
            horizon,
            true,
        )?;
        ipx_credentials.insert(actor_id.clone(), cred);
    }
    world.sync();

    world.start_measuring();
    let elements: BTreeMap<String, Value> = [
        ("route_header".to_string(), Value::String("gate-1".into())),
        ("charging_info".to_string(), Value::String("tariff-a".into())),
        ("session_id".to_string(), Value::String("sess-7".into())),
    ]
    .into_iter()
    .collect();
    let mut message = SignedInterconnectMessage::new(&origin.wallet, elements)?;

    let mut previous_hop = origin.actor_id.clone();
    for plan in &params.patches {
        let ipx = peer(&world, &plan.ipx_actor)?;
        let cred = ipx_credentials
            .get(&plan.ipx_actor)
            .ok_or_else(|| {
                ScenarioError::Config(format!("IPX `{}` has no alteration credential", plan.ipx_actor))
            })?
            .clone();
        if previous_hop != ipx.actor_id {
            world.send(&previous_hop, &ipx.actor_id, LinkClass::VisitedHome, "interconnect_message");
            previous_hop = ipx.actor_id.clone();
        }
        message.apply_patch(
            &ipx.wallet,
            &plan.element,
            Value::String(plan.new_value.clone()),
            cred,
        )?;
    }
    world.send(&previous_hop, &receiver.actor_id, LinkClass::VisitedHome, "interconnect_message");

    // Revocation-in-flight variant: the message arrives while the revocation
    // is still propagating to the receiver's node.
    if let Some(actor_id) = &params.revoke_vc_of {
        let status = ipx_credentials
            .get(actor_id)
            .ok_or_else(|| ScenarioError::Config(format!("IPX `{actor_id}` has no credential")))?
            .status
            .clone()
            .expect("alteration credentials track status");
        let receipt = vc::revoke(&mut world.network, &origin.node, &origin.wallet, &status)?;
        let deadline = receipt.commit_tick + world.network.max_delay() + 2;
        loop {
            world.ledger_read(&receiver.actor_id, "interconnect_validation");
            let verdict = message.verify(&world.network, &receiver.node);
            if let InterconnectVerdict::Denied { .. } = verdict {
                return Ok(world.finish(name, ScenarioOutcome::ExpectedDenial, Vec::new()));
            }
            if world.network.clock() >= deadline {
                return Ok(world.finish(
                    name,
                    ScenarioOutcome::Failure("revocation never reached the receiver".into()),
                    Vec::new(),
                ));
            }
            world.network.tick(1);
        }
    }

    world.ledger_read(&receiver.actor_id, "interconnect_validation");
    let outcome = match message.verify(&world.network, &receiver.node) {
        InterconnectVerdict::Valid => ScenarioOutcome::Success,
        InterconnectVerdict::Denied { .. } => ScenarioOutcome::ExpectedDenial,
    };
    Ok(world.finish(name, outcome, Vec::new()))
}

// ---------------------------------------------------------------------------
// Key rotation during roaming
// ---------------------------------------------------------------------------

/// The home operator rotates its keys mid-run. Old assertion keys kept in the
/// document keep outstanding credentials verifiable; dropping them invalidates
/// the credentials as soon as the rotation is delivered.
pub fn run_key_rotation_roaming(
    config: &ScenarioConfig,
    params: &RotationParams,
) -> Result<ScenarioRun, ScenarioError> {
    let name = "key_rotation_roaming";
    let mut world = World::build(config)?;
    let home = peer_by_role(&world, Role::HomeMno)?;
    let visited = peer_by_role(&world, Role::VisitedMno)?;
    let subscriber = peer_by_role(&world, Role::Subscriber)?;

    let horizon = world.network.clock() + 100_000;
    let credential = vc::issue(
        &mut world.network,
        &home.node,
        &home.wallet,
        &subscriber.did,
        "AccessPermission",
        serde_json::json!({"service_profile": "data"}),
        0,
        horizon,
        false,
    )?;
    world.sync();

    world.start_measuring();
    let mut reports = Vec::new();

    // pre-rotation sanity: the credential verifies at the visited edge
    let (accepted, report) = present_and_verify(
        &mut world,
        &subscriber.actor_id,
        &subscriber.wallet,
        &credential,
        &visited,
        LinkClass::TerminalVisited,
        "rotation-pre",
        0,
    )?;
    push_report(&mut reports, report);
    if !accepted {
        return Ok(world.finish(name, ScenarioOutcome::Failure("pre-rotation denial".into()), reports));
    }

    if world.network.clock() < params.rotate_at_tick {
        let dt = params.rotate_at_tick - world.network.clock();
        world.network.tick(dt);
    }

    // Rotation: replace the authentication key; the old key either keeps its
    // assertion purpose or disappears entirely.
    let new_kp = KeyPair::from_seed(&key_seed_bytes("rotation", config.seed, 0)).unwrap();
    let (mut body, _) = did::resolve(&world.network, &home.node, &home.did)?;
    body.version += 1;
    let old_method = body
        .method("#key-0")
        .cloned()
        .ok_or_else(|| ScenarioError::Config("home document lost its initial key".into()))?;
    body.verification_methods.clear();
    if params.keep_old_assertion_key {
        let mut old = old_method;
        old.purposes = [Purpose::Assertion].into_iter().collect();
        body.verification_methods.push(old);
    }
    body.verification_methods.push(VerificationMethod::new(
        "#key-1",
        &new_kp,
        [Purpose::Authentication, Purpose::Assertion],
    ));
    if let Some(endpoint) = &params.new_endpoint {
        body.services.retain(|s| s.id != "#roaming-gate");
        body.services.push(ServiceEndpointEntry {
            id: "#roaming-gate".into(),
            type_label: "roaming-signaling".into(),
            endpoint: endpoint.clone(),
        });
    }
    let old_kp = home.wallet.key("#key-0").expect("initial key present").clone();
    let receipt = did::update_document(
        &mut world.network,
        &home.node,
        &home.did,
        body,
        &old_kp,
        &format!("{}#key-0", home.did),
    )?;
    world.actor_mut(&home.actor_id)?.wallet.add_key("#key-1", new_kp);
    world.actor_mut(&home.actor_id)?.wallet.set_auth_fragment("#key-1");

    let delivery_tick = receipt.commit_tick + world.network.delay(&visited.node)?;
    let deadline = receipt.commit_tick + world.network.max_delay() + 2;
    let mut first_denial: Option<u64> = None;
    loop {
        let now = world.network.clock();
        let (accepted, report) = present_and_verify(
            &mut world,
            &subscriber.actor_id,
            &subscriber.wallet,
            &credential,
            &visited,
            LinkClass::TerminalVisited,
            "rotation-post",
            now,
        )?;
        push_report(&mut reports, report);
        if !accepted {
            first_denial = Some(world.network.clock());
            break;
        }
        if world.network.clock() >= deadline {
            break;
        }
        world.network.tick(1);
    }

    // endpoint readback once the rotation is fully delivered
    if world.network.clock() < delivery_tick {
        world.network.tick(delivery_tick - world.network.clock());
    }
    if let Some(endpoint) = &params.new_endpoint {
        world.ledger_read(&visited.actor_id, "resolve_service_endpoint");
        let (home_doc, _) = did::resolve(&world.network, &visited.node, &home.did)?;
        let seen = home_doc
            .services
            .iter()
            .find(|s| s.id == "#roaming-gate")
            .map(|s| s.endpoint.clone());
        if seen.as_deref() != Some(endpoint.as_str()) {
            return Ok(world.finish(
                name,
                ScenarioOutcome::Failure("rotated service endpoint not visible".into()),
                reports,
            ));
        }
    }

    let outcome = match (params.keep_old_assertion_key, first_denial) {
        (true, None) => ScenarioOutcome::Success,
        (true, Some(t)) => ScenarioOutcome::Failure(format!("denial at tick {t} despite kept key")),
        (false, Some(t)) if t == delivery_tick => ScenarioOutcome::ExpectedDenial,
        (false, Some(t)) => {
            ScenarioOutcome::Failure(format!("denial at tick {t}, expected {delivery_tick}"))
        }
        (false, None) => ScenarioOutcome::Failure("rotation never invalidated the credential".into()),
    };
    Ok(world.finish(name, outcome, reports))
}

// ---------------------------------------------------------------------------
// Location attestation
// ---------------------------------------------------------------------------

/// The operator attests the subscriber's coarse location to an over-the-top
/// service; the onboarding variant reverses roles and has the operator verify
/// a government-issued credential.
pub fn run_location_attestation(
    config: &ScenarioConfig,
    variant: LocationVariant,
) -> Result<ScenarioRun, ScenarioError> {
    let name = "location_attestation";
    let mut world = World::build(config)?;
    let mno = peer_by_role(&world, Role::HomeMno)?;
    let subscriber = peer_by_role(&world, Role::Subscriber)?;

    if variant == LocationVariant::Onboarding {
        let government = peer_by_role(&world, Role::Government)?;
        let horizon = world.network.clock() + 100_000;
        let credential = vc::issue(
            &mut world.network,
            &government.node,
            &government.wallet,
            &subscriber.did,
            "SocialSecurityNumber",
            serde_json::json!({"ssn_token": "ssn-0172-4467"}),
            0,
            horizon,
            true,
        )?;
        world.sync();
        world.start_measuring();
        let (accepted, report) = present_and_verify(
            &mut world,
            &subscriber.actor_id,
            &subscriber.wallet,
            &credential,
            &mno,
            LinkClass::TerminalVisited,
            "onboarding",
            0,
        )?;
        let outcome = if accepted {
            ScenarioOutcome::Success
        } else {
            ScenarioOutcome::Failure("onboarding credential rejected".into())
        };
        return Ok(world.finish(name, outcome, vec![report]));
    }

    let ott = peer_by_role(&world, Role::OttService)?;
    let attested_tick = world.network.clock();
    let valid_until = attested_tick + world.network.max_delay() + 5;
    let credential = vc::issue(
        &mut world.network,
        &mno.node,
        &mno.wallet,
        &subscriber.did,
        "LocationAttestation",
        serde_json::json!({"cell_area": "cell-0042", "attested_tick": attested_tick}),
        attested_tick,
        valid_until,
        true,
    )?;
    world.sync();
    if variant == LocationVariant::Stale {
        world.network.tick(valid_until - world.network.clock() + 1);
    }

    world.start_measuring();
    let (accepted, report) = present_and_verify(
        &mut world,
        &subscriber.actor_id,
        &subscriber.wallet,
        &credential,
        &ott,
        LinkClass::OttLink,
        "location",
        0,
    )?;
    let outcome = match (variant, accepted) {
        (LocationVariant::InWindow, true) => ScenarioOutcome::Success,
        (LocationVariant::InWindow, false) => {
            ScenarioOutcome::Failure("in-window attestation rejected".into())
        }
        (LocationVariant::Stale, false) => ScenarioOutcome::ExpectedDenial,
        (LocationVariant::Stale, true) => {
            ScenarioOutcome::Failure("stale attestation accepted".into())
        }
        (LocationVariant::Onboarding, _) => unreachable!("handled above"),
    };
    Ok(world.finish(name, outcome, vec![report]))
}
