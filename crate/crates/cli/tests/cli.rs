//! End-to-end tests of the `sim6g` binary and its exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SEED_A: &str = "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60";
const SEED_B: &str = "4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb";

fn sim6g(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim6g"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn write_config(dir: &Path, scenario: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!(
        r#"
config_version = 1
seed = 42

[[nodes]]
node_id = "home-node"
delay_ticks = 0

[[nodes]]
node_id = "visited-node"
delay_ticks = 2

[[actors]]
actor_id = "home"
role = "HomeMNO"
node_id = "home-node"
key_seed = 9000

[[actors]]
actor_id = "visited"
role = "VisitedMNO"
node_id = "visited-node"
key_seed = 9001

[[actors]]
actor_id = "alice"
role = "Subscriber"
node_id = "visited-node"
key_seed = 9002

{scenario}
"#
    );
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn keygen_is_deterministic_and_matches_the_reference_vector() {
    let first = sim6g(&["keygen", "--seed", SEED_A]);
    let second = sim6g(&["keygen", "--seed", SEED_A]);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first)
        .contains("d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a"));
    assert!(stdout(&first).contains("ed25519"));
}

#[test]
fn keygen_rejects_short_seeds_with_exit_2() {
    let out = sim6g(&["keygen", "--seed", &SEED_A[..62]]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("--seed"));
}

#[test]
fn did_create_then_resolve_in_one_state_dir() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let state = dir.path().join("state");
    let state = state.to_str().unwrap();

    let created = sim6g(&[
        "did", "create", "--config", &config, "--state-dir", state, "--key-seed", SEED_A,
    ]);
    assert_eq!(exit_code(&created), 0, "{}", stderr(&created));
    let created_json: serde_json::Value = serde_json::from_str(&stdout(&created)).unwrap();
    let did = created_json["did"].as_str().unwrap().to_string();

    let resolved = sim6g(&[
        "did", "resolve", "--config", &config, "--state-dir", state, "--did", &did,
    ]);
    assert_eq!(exit_code(&resolved), 0, "{}", stderr(&resolved));
    let resolved_json: serde_json::Value = serde_json::from_str(&stdout(&resolved)).unwrap();
    assert_eq!(resolved_json["version"], 0);
    assert_eq!(resolved_json["document"]["id"], serde_json::json!(did));
}

#[test]
fn resolution_on_a_delayed_node_is_stale_until_ticks_advance() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let state = dir.path().join("state");
    let state = state.to_str().unwrap();

    let created = sim6g(&[
        "did", "create", "--config", &config, "--state-dir", state, "--key-seed", SEED_A,
    ]);
    let created_json: serde_json::Value = serde_json::from_str(&stdout(&created)).unwrap();
    let did = created_json["did"].as_str().unwrap().to_string();

    // visited-node runs 2 ticks behind: nothing delivered yet
    let stale = sim6g(&[
        "did", "resolve", "--config", &config, "--state-dir", state,
        "--node", "visited-node", "--did", &did,
    ]);
    assert_eq!(exit_code(&stale), 1);
    assert!(stderr(&stale).contains("not found"));

    let fresh = sim6g(&[
        "did", "resolve", "--config", &config, "--state-dir", state,
        "--node", "visited-node", "--did", &did, "--advance-ticks", "2",
    ]);
    assert_eq!(exit_code(&fresh), 0, "{}", stderr(&fresh));
}

#[test]
fn update_with_the_wrong_key_exits_1_with_authorization_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let state = dir.path().join("state");
    let state = state.to_str().unwrap();

    let created = sim6g(&[
        "did", "create", "--config", &config, "--state-dir", state, "--key-seed", SEED_A,
    ]);
    let created_json: serde_json::Value = serde_json::from_str(&stdout(&created)).unwrap();
    let did = created_json["did"].as_str().unwrap().to_string();

    let mut document = created_json["document"].clone();
    document["version"] = serde_json::json!(1);
    let doc_path = dir.path().join("doc.json");
    std::fs::write(&doc_path, serde_json::to_string(&document).unwrap()).unwrap();

    let updated = sim6g(&[
        "did", "update", "--config", &config, "--state-dir", state,
        "--did", &did, "--document", doc_path.to_str().unwrap(),
        "--key-seed", SEED_B, "--key-ref", &format!("{did}#key-0"),
    ]);
    assert_eq!(exit_code(&updated), 1);
    assert!(stderr(&updated).contains("authorization error"));
}

fn issue_credential(dir: &Path, config: &str, state: &str) -> (String, String, String) {
    let created = sim6g(&[
        "did", "create", "--config", config, "--state-dir", state,
        "--key-seed", SEED_A,
        "--wallet-out", dir.join("issuer.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&created), 0, "{}", stderr(&created));
    let created_json: serde_json::Value = serde_json::from_str(&stdout(&created)).unwrap();
    let did = created_json["did"].as_str().unwrap().to_string();

    let wallet = dir.join("issuer.json").to_str().unwrap().to_string();
    let cred = dir.join("cred.json").to_str().unwrap().to_string();
    let issued = sim6g(&[
        "vc", "issue", "--config", config, "--state-dir", state,
        "--issuer-wallet", &wallet, "--subject", &did,
        "--schema", "AccessPermission", "--claims", r#"{"tier":"gold"}"#,
        "--valid-until", "1000", "--with-status", "--out", &cred,
    ]);
    assert_eq!(exit_code(&issued), 0, "{}", stderr(&issued));
    (did, wallet, cred)
}

#[test]
fn issue_verify_round_trip_exits_0() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let state = dir.path().join("state");
    let state = state.to_str().unwrap();
    let (did, _, cred) = issue_credential(dir.path(), &config, state);

    let verified = sim6g(&[
        "vc", "verify", "--config", &config, "--state-dir", state,
        "--credential", &cred, "--subject", &did,
    ]);
    assert_eq!(exit_code(&verified), 0, "{}", stderr(&verified));
    assert!(stdout(&verified).contains(r#""outcome":"accept""#));
}

#[test]
fn tampered_credential_fails_issuer_signature_with_exit_1() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let state = dir.path().join("state");
    let state = state.to_str().unwrap();
    let (_, _, cred) = issue_credential(dir.path(), &config, state);

    let text = std::fs::read_to_string(&cred).unwrap();
    std::fs::write(&cred, text.replace("gold", "platinum")).unwrap();

    let verified = sim6g(&[
        "vc", "verify", "--config", &config, "--state-dir", state, "--credential", &cred,
    ]);
    assert_eq!(exit_code(&verified), 1);
    assert!(stdout(&verified).contains(r#""issuer_signature":"fail""#));
    assert!(stderr(&verified).contains("issuer_signature"));
}

#[test]
fn verify_after_revoke_fails_the_status_check() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let state = dir.path().join("state");
    let state = state.to_str().unwrap();
    let (did, wallet, cred) = issue_credential(dir.path(), &config, state);

    let revoked = sim6g(&[
        "vc", "revoke", "--config", &config, "--state-dir", state,
        "--issuer-wallet", &wallet, "--registry", &format!("{did}#registry"), "--index", "0",
    ]);
    assert_eq!(exit_code(&revoked), 0, "{}", stderr(&revoked));

    // home-node has delay 0: the revocation is visible immediately
    let verified = sim6g(&[
        "vc", "verify", "--config", &config, "--state-dir", state, "--credential", &cred,
    ]);
    assert_eq!(exit_code(&verified), 1);
    assert!(stdout(&verified).contains(r#""status":"fail""#));
}

#[test]
fn presentations_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let state = dir.path().join("state");
    let state = state.to_str().unwrap();
    let (did, wallet, cred) = issue_credential(dir.path(), &config, state);

    let pres = dir.path().join("presentation.json");
    let presented = sim6g(&[
        "vc", "present", "--wallet", &wallet, "--credential", &cred,
        "--nonce", "00112233445566778899aabbccddeeff", "--audience", &did,
    ]);
    assert_eq!(exit_code(&presented), 0, "{}", stderr(&presented));
    std::fs::write(&pres, presented.stdout).unwrap();
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&pres).unwrap()).unwrap();
    assert_eq!(value["holder"], serde_json::json!(did));
}

#[test]
fn scenario_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "[scenario]\nname = \"roaming_access\"\nsubscriber_count = 2",
    );
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for (out, _) in [(&out_a, 0), (&out_b, 1)] {
        let run = sim6g(&[
            "scenario", "run", "--config", &config, "--seed", "7",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    }
    assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
}

#[test]
fn baseline_and_decentralized_visited_home_counts() {
    let dir = TempDir::new().unwrap();
    let decentralized = write_config(
        dir.path(),
        "[scenario]\nname = \"roaming_access\"\nsubscriber_count = 5",
    );
    let run = sim6g(&["scenario", "run", "--config", &decentralized]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    assert!(stdout(&run).contains(r#""visited_home":0"#));

    let baseline = write_config(
        dir.path(),
        "[scenario]\nname = \"baseline_centralized\"\nsubscriber_count = 5",
    );
    let run = sim6g(&["scenario", "run", "--config", &baseline]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    assert!(stdout(&run).contains(r#""visited_home":10"#));
}

#[test]
fn undeclared_node_reference_exits_2_naming_the_actor() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&config).unwrap();
    std::fs::write(&config, text.replace("node_id = \"visited-node\"\nkey_seed = 9001", "node_id = \"missing-node\"\nkey_seed = 9001")).unwrap();
    let run = sim6g(&["scenario", "run", "--config", &config]);
    assert_eq!(exit_code(&run), 2);
    assert!(stderr(&run).contains("visited"));
}

#[test]
fn unknown_scenario_name_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "[scenario]\nname = \"teleportation\"");
    let run = sim6g(&["scenario", "run", "--config", &config]);
    assert_eq!(exit_code(&run), 2);
}

#[test]
fn unsupported_config_version_exits_2() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&config).unwrap();
    std::fs::write(&config, text.replace("config_version = 1", "config_version = 99")).unwrap();
    let run = sim6g(&["keygen", "--seed", SEED_A]);
    assert_eq!(exit_code(&run), 0); // keygen needs no config
    let run = sim6g(&["scenario", "run", "--config", &config]);
    assert_eq!(exit_code(&run), 2);
    assert!(stderr(&run).contains("config_version"));
}

#[test]
fn outcome_mismatch_against_config_expectation_exits_1() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "[scenario]\nname = \"roaming_access\"\nrevoke_before_access = true\n\n[output]\nexpect = \"success\"",
    );
    let run = sim6g(&["scenario", "run", "--config", &config]);
    assert_eq!(exit_code(&run), 1);
    assert!(stderr(&run).contains("expected_denial"));
}
