//! Optional on-disk run state: the exported ledger log plus wallets, all as
//! canonical text, replayable across command invocations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sim6g_core::crypto::{hex_decode_strict, KeyPair};
use sim6g_core::did::Did;
use sim6g_core::ledger::{LedgerNetwork, NodeId};
use sim6g_core::vc::Wallet;

use crate::config::RunConfig;
use crate::CliError;

const LEDGER_LOG: &str = "ledger.log";
const CLOCK_FILE: &str = "clock";

/// Builds the network from the config, continuing from `state_dir` when it
/// already holds a ledger log.
pub fn load_network(config: &RunConfig, state_dir: Option<&Path>) -> Result<LedgerNetwork, CliError> {
    let nodes = config
        .nodes
        .iter()
        .map(|n| (NodeId(n.node_id.clone()), n.delay_ticks));
    let log_path = state_dir.map(|d| d.join(LEDGER_LOG));
    match log_path.filter(|p| p.exists()) {
        Some(path) => {
            let log = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let clock_path = path.with_file_name(CLOCK_FILE);
            let clock: u64 = std::fs::read_to_string(&clock_path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", clock_path.display())))?
                .trim()
                .parse()
                .map_err(|e| CliError::Input(format!("bad clock file: {e}")))?;
            LedgerNetwork::replay(nodes, config.seed, &log, clock)
                .map_err(|e| CliError::Input(format!("state replay failed: {e}")))
        }
        None => Ok(LedgerNetwork::new(nodes, config.seed)),
    }
}

pub fn save_network(network: &LedgerNetwork, state_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(state_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", state_dir.display())))?;
    let write = |name: &str, contents: String| {
        std::fs::write(state_dir.join(name), contents)
            .map_err(|e| CliError::Input(format!("cannot write {name}: {e}")))
    };
    write(LEDGER_LOG, network.export_log())?;
    write(CLOCK_FILE, format!("{}\n", network.clock()))
}

/// Wallet file: the DID, the presentation-signing fragment, and one signing
/// seed per key fragment.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalletFile {
    pub did: Did,
    pub auth_fragment: String,
    /// fragment → 32-byte seed, lowercase hex
    pub keys: std::collections::BTreeMap<String, String>,
}

impl WalletFile {
    pub fn load(path: &str) -> Result<Wallet, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read wallet `{path}`: {e}")))?;
        let file: WalletFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("wallet `{path}`: {e}")))?;
        let mut fragments = file.keys.iter();
        let (first_fragment, first_seed) = fragments
            .next()
            .ok_or_else(|| CliError::Input(format!("wallet `{path}` holds no keys")))?;
        let mut wallet = Wallet::new(file.did, first_fragment, keypair(first_seed)?);
        for (fragment, seed) in fragments {
            wallet.add_key(fragment, keypair(seed)?);
        }
        if wallet.key(&file.auth_fragment).is_none() {
            return Err(CliError::Input(format!(
                "wallet `{path}`: auth_fragment `{}` has no key",
                file.auth_fragment
            )));
        }
        wallet.set_auth_fragment(&file.auth_fragment);
        Ok(wallet)
    }

    pub fn write(path: &PathBuf, did: Did, fragment: &str, seed_hex: &str) -> Result<(), CliError> {
        let file = WalletFile {
            did,
            auth_fragment: fragment.to_string(),
            keys: [(fragment.to_string(), seed_hex.to_string())].into_iter().collect(),
        };
        let json = serde_json::to_value(&file).expect("wallet file serializes");
        let bytes = sim6g_core::crypto::canonicalize(&json).expect("wallet file is float-free");
        std::fs::write(path, bytes)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn keypair(seed_hex: &str) -> Result<KeyPair, CliError> {
    let seed = hex_decode_strict(seed_hex)
        .map_err(|e| CliError::Input(format!("--seed/--key-seed: {e}")))?;
    KeyPair::from_seed(&seed).map_err(|e| CliError::Input(format!("--seed/--key-seed: {e}")))
}
