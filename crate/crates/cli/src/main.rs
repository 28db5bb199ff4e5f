//! `sim6g` — key, DID, credential, and scenario operations with reproducible,
//! machine-readable output.
//!
//! Exit codes: 0 = success (or an expected denial matching the config's
//! expectation), 1 = operation or verification failure, 2 = config/input
//! error.

mod config;
mod state;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sim6g_core::crypto::{canonicalize, hex_decode_strict, Value};
use sim6g_core::did::{self, Did, DidError};
use sim6g_core::ledger::{LedgerError, LedgerNetwork, NodeId};
use sim6g_core::scenarios::{self, LinkClass, ScenarioOutcome, ScenarioReport};
use sim6g_core::vc::{self, CheckResult, Credential, Outcome, Wallet};
use thiserror::Error;

use config::RunConfig;
use state::WalletFile;

#[derive(Debug, Error)]
pub enum CliError {
    /// exit 2: malformed flags, config, or input files
    #[error("{0}")]
    Input(String),
    /// exit 1: the operation itself failed or verification rejected
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn from_did_err(e: DidError) -> CliError {
    match e {
        DidError::Syntax(_) | DidError::Input(_) | DidError::Crypto(_) => {
            CliError::Input(e.to_string())
        }
        DidError::Ledger(ref le) => from_ledger_ref(le, e.to_string()),
        DidError::NotFound => CliError::Failure(e.to_string()),
    }
}

fn from_ledger_ref(e: &LedgerError, text: String) -> CliError {
    match e {
        LedgerError::UnknownNode(_) | LedgerError::Input(_) => CliError::Input(text),
        _ => CliError::Failure(text),
    }
}

fn from_vc_err(e: vc::VcError) -> CliError {
    match e {
        vc::VcError::Input(_) | vc::VcError::Crypto(_) => CliError::Input(e.to_string()),
        vc::VcError::Did(inner) => from_did_err(inner),
        vc::VcError::Ledger(ref le) => from_ledger_ref(le, e.to_string()),
        vc::VcError::Lifecycle(_) => CliError::Failure(e.to_string()),
    }
}

#[derive(Parser)]
#[command(name = "sim6g", version, about = "Decentralized identity toolkit for simulated 6G operator networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a signing key pair from a seed and print the public half.
    Keygen {
        /// 32-byte signing seed, lowercase hex
        #[arg(long)]
        seed: String,
    },
    /// DID document lifecycle against a configured ledger network.
    Did {
        #[command(subcommand)]
        command: DidCommand,
    },
    /// Credential issuance, presentation, verification, and revocation.
    Vc {
        #[command(subcommand)]
        command: VcCommand,
    },
    /// Scenario execution.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Args)]
struct NetArgs {
    /// Run configuration (TOML)
    #[arg(long)]
    config: String,
    /// Ledger node to operate against (defaults to the first configured node)
    #[arg(long)]
    node: Option<String>,
    /// Directory persisting the ledger log between invocations
    #[arg(long)]
    state_dir: Option<PathBuf>,
    /// Advance the simulation clock before the operation
    #[arg(long, default_value_t = 0)]
    advance_ticks: u64,
}

impl NetArgs {
    fn open(&self) -> Result<(RunConfig, LedgerNetwork, NodeId), CliError> {
        let config = RunConfig::load(&self.config)?;
        let mut network = state::load_network(&config, self.state_dir.as_deref())?;
        if self.advance_ticks > 0 {
            network.tick(self.advance_ticks);
        }
        let node_id = match &self.node {
            Some(id) => id.clone(),
            None => config.nodes[0].node_id.clone(),
        };
        if !config.nodes.iter().any(|n| n.node_id == node_id) {
            return Err(CliError::Input(format!("--node `{node_id}` is not declared in the config")));
        }
        Ok((config, network, NodeId(node_id)))
    }

    fn save(&self, network: &LedgerNetwork) -> Result<(), CliError> {
        match &self.state_dir {
            Some(dir) => state::save_network(network, dir),
            None => Ok(()),
        }
    }
}

#[derive(Subcommand)]
enum DidCommand {
    /// Anchor a new DID derived from a signing seed.
    Create {
        #[command(flatten)]
        net: NetArgs,
        /// 32-byte signing seed, lowercase hex
        #[arg(long)]
        key_seed: String,
        /// Also write a wallet file for the new DID
        #[arg(long)]
        wallet_out: Option<PathBuf>,
    },
    /// Print the document a node currently resolves for a DID.
    Resolve {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        did: String,
    },
    /// Replace the document body (version must increment by one).
    Update {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        did: String,
        /// Path to the new document body (canonical JSON)
        #[arg(long)]
        document: String,
        #[arg(long)]
        key_seed: String,
        /// Full key reference authorizing the update, e.g. did:…#key-0
        #[arg(long)]
        key_ref: String,
    },
    /// Permanently deactivate a DID.
    Deactivate {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        did: String,
        #[arg(long)]
        key_seed: String,
        #[arg(long)]
        key_ref: String,
    },
}

#[derive(Subcommand)]
enum VcCommand {
    /// Issue a credential; the issuer DID is anchored on first use.
    Issue {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        issuer_wallet: String,
        #[arg(long)]
        subject: String,
        #[arg(long)]
        schema: String,
        /// Claims as inline JSON object
        #[arg(long)]
        claims: String,
        #[arg(long, default_value_t = 0)]
        valid_from: u64,
        #[arg(long)]
        valid_until: u64,
        /// Track revocation status in the issuer's on-ledger registry
        #[arg(long)]
        with_status: bool,
        /// Write the credential here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a credential file against a node's ledger view.
    Verify {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        credential: String,
        /// Require the credential subject to equal this DID
        #[arg(long)]
        subject: Option<String>,
    },
    /// Build a holder-signed presentation bound to a nonce and audience.
    Present {
        #[arg(long)]
        wallet: String,
        #[arg(long)]
        credential: String,
        /// Challenge nonce, lowercase hex
        #[arg(long)]
        nonce: String,
        #[arg(long)]
        audience: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revoke a credential by its status reference.
    Revoke {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        issuer_wallet: String,
        #[arg(long)]
        registry: String,
        #[arg(long)]
        index: u64,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Run the scenario in the config and print a summary line.
    Run {
        #[arg(long)]
        config: String,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Fail if the run uses more ticks than this
        #[arg(long)]
        ticks: Option<u64>,
        /// Write the report here (canonical JSON); overrides the config's
        /// output path
        #[arg(long)]
        out: Option<PathBuf>,
        /// structured (canonical JSON on stdout) or table; overrides the
        /// config's output format
        #[arg(long)]
        format: Option<String>,
    },
}

fn print_canonical(value: &Value) -> Result<(), CliError> {
    let bytes = canonicalize(value).map_err(|e| CliError::Input(e.to_string()))?;
    println!("{}", String::from_utf8(bytes).expect("canonical JSON is UTF-8"));
    Ok(())
}

fn parse_did(s: &str) -> Result<Did, CliError> {
    Did::parse(s).map_err(|e| CliError::Input(format!("`{s}`: {e}")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {what} `{path}`: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{what} `{path}`: {e}")))
}

fn write_or_print(value: &Value, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let bytes = canonicalize(value).map_err(|e| CliError::Input(e.to_string()))?;
            std::fs::write(path, bytes)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => print_canonical(value),
    }
}

/// Anchors the wallet's DID if this ledger has never seen it; lets `vc`
/// commands work against ephemeral single-run networks.
fn ensure_anchored(
    network: &mut LedgerNetwork,
    node: &NodeId,
    wallet: &Wallet,
) -> Result<(), CliError> {
    if network.authoritative_state().docs.contains_key(&wallet.did.to_string()) {
        return Ok(());
    }
    let keypair = wallet.auth_key().clone();
    let (anchored, _) = did::create_did(network, node, &keypair).map_err(from_did_err)?;
    if anchored != wallet.did {
        return Err(CliError::Input(
            "wallet DID does not match its signing key".into(),
        ));
    }
    let d = network.max_delay();
    if d > 0 {
        network.tick(d);
    }
    Ok(())
}

fn run_did(command: DidCommand) -> Result<(), CliError> {
    match command {
        DidCommand::Create { net, key_seed, wallet_out } => {
            let (_, mut network, node) = net.open()?;
            let keypair = state::keypair(&key_seed)?;
            let (new_did, document) =
                did::create_did(&mut network, &node, &keypair).map_err(from_did_err)?;
            net.save(&network)?;
            if let Some(path) = wallet_out {
                WalletFile::write(&path, new_did, "#key-0", &key_seed)?;
            }
            print_canonical(&serde_json::json!({
                "did": new_did,
                "document": document.to_value(),
            }))
        }
        DidCommand::Resolve { net, did } => {
            let (_, network, node) = net.open()?;
            let target = parse_did(&did)?;
            let (document, meta) =
                did::resolve(&network, &node, &target).map_err(from_did_err)?;
            net.save(&network)?;
            print_canonical(&serde_json::json!({
                "document": document.to_value(),
                "version": meta.version,
                "deactivated": meta.deactivated,
            }))
        }
        DidCommand::Update { net, did, document, key_seed, key_ref } => {
            let (_, mut network, node) = net.open()?;
            let target = parse_did(&did)?;
            let body_value: Value = read_json(&document, "document")?;
            let body = sim6g_core::did::DidDocument::from_value(&body_value)
                .map_err(from_did_err)?;
            let keypair = state::keypair(&key_seed)?;
            let receipt =
                did::update_document(&mut network, &node, &target, body, &keypair, &key_ref)
                    .map_err(from_did_err)?;
            net.save(&network)?;
            print_canonical(&serde_json::json!({
                "seq": receipt.seq,
                "commit_tick": receipt.commit_tick,
            }))
        }
        DidCommand::Deactivate { net, did, key_seed, key_ref } => {
            let (_, mut network, node) = net.open()?;
            let target = parse_did(&did)?;
            let keypair = state::keypair(&key_seed)?;
            let receipt = did::deactivate(&mut network, &node, &target, &keypair, &key_ref)
                .map_err(from_did_err)?;
            net.save(&network)?;
            print_canonical(&serde_json::json!({
                "seq": receipt.seq,
                "commit_tick": receipt.commit_tick,
            }))
        }
    }
}

fn run_vc(command: VcCommand) -> Result<(), CliError> {
    match command {
        VcCommand::Issue {
            net,
            issuer_wallet,
            subject,
            schema,
            claims,
            valid_from,
            valid_until,
            with_status,
            out,
        } => {
            let (_, mut network, node) = net.open()?;
            let wallet = WalletFile::load(&issuer_wallet)?;
            let subject = parse_did(&subject)?;
            let claims: Value = serde_json::from_str(&claims)
                .map_err(|e| CliError::Input(format!("--claims: {e}")))?;
            ensure_anchored(&mut network, &node, &wallet)?;
            let credential = vc::issue(
                &mut network,
                &node,
                &wallet,
                &subject,
                &schema,
                claims,
                valid_from,
                valid_until,
                with_status,
            )
            .map_err(from_vc_err)?;
            net.save(&network)?;
            write_or_print(&credential.to_value(), out.as_ref())
        }
        VcCommand::Verify { net, credential, subject } => {
            let (_, network, node) = net.open()?;
            let credential: Credential = read_json(&credential, "credential")?;
            let expected = subject.as_deref().map(parse_did).transpose()?;
            let report = vc::verify_credential(&network, &node, &credential, expected.as_ref());
            print_canonical(&serde_json::to_value(&report).expect("report serializes"))?;
            match report.outcome {
                Outcome::Accept => Ok(()),
                Outcome::Reject => {
                    let failing: Vec<&str> = report
                        .checks
                        .iter()
                        .filter(|(_, r)| **r == CheckResult::Fail)
                        .map(|(name, _)| name.as_str())
                        .collect();
                    Err(CliError::Failure(format!("rejected: {}", failing.join(", "))))
                }
            }
        }
        VcCommand::Present { wallet, credential, nonce, audience, out } => {
            let wallet = WalletFile::load(&wallet)?;
            let credential: Credential = read_json(&credential, "credential")?;
            let nonce = hex_decode_strict(&nonce)
                .map_err(|e| CliError::Input(format!("--nonce: {e}")))?;
            let audience = parse_did(&audience)?;
            let presentation = vc::present(&wallet, vec![credential], &nonce, &audience)
                .map_err(from_vc_err)?;
            write_or_print(
                &serde_json::to_value(&presentation).expect("presentation serializes"),
                out.as_ref(),
            )
        }
        VcCommand::Revoke { net, issuer_wallet, registry, index } => {
            let (_, mut network, node) = net.open()?;
            let wallet = WalletFile::load(&issuer_wallet)?;
            let status = vc::StatusRef { registry_id: registry, index };
            let receipt =
                vc::revoke(&mut network, &node, &wallet, &status).map_err(from_vc_err)?;
            net.save(&network)?;
            print_canonical(&serde_json::json!({
                "seq": receipt.seq,
                "commit_tick": receipt.commit_tick,
            }))
        }
    }
}

fn outcome_label(outcome: &ScenarioOutcome) -> &'static str {
    match outcome {
        ScenarioOutcome::Success => "success",
        ScenarioOutcome::ExpectedDenial => "expected_denial",
        ScenarioOutcome::Failure(_) => "failure",
    }
}

fn format_counts(counts: &BTreeMap<LinkClass, u64>) -> String {
    counts
        .iter()
        .map(|(link, n)| {
            let name = serde_json::to_value(link).expect("link class serializes");
            format!("{}={n}", name.as_str().expect("link class is a string"))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_table(report: &ScenarioReport) {
    println!("scenario        {}", report.scenario_name);
    println!("outcome         {}", outcome_label(&report.outcome));
    println!("ticks_elapsed   {}", report.ticks_elapsed);
    println!("seed            {}", report.seed);
    for (link, n) in &report.message_counts {
        let name = serde_json::to_value(link).expect("link class serializes");
        println!("  {:<18} {n}", name.as_str().expect("link class is a string"));
    }
}

fn run_scenario_cmd(command: ScenarioCommand) -> Result<(), CliError> {
    let ScenarioCommand::Run { config, seed, ticks, out, format } = command;
    let run_config = RunConfig::load(&config)?;
    let scenario_config = run_config.scenario_config(seed)?;
    let report = scenarios::run_scenario(&scenario_config)
        .map_err(|e| match e {
            scenarios::ScenarioError::Config(msg) => CliError::Input(msg),
            other => CliError::Failure(other.to_string()),
        })?;

    let report_value = report.to_value();
    let out = out.or_else(|| {
        run_config
            .output
            .as_ref()
            .and_then(|o| o.path.as_ref())
            .map(PathBuf::from)
    });
    let format = format
        .or_else(|| run_config.output.as_ref().and_then(|o| o.format.clone()))
        .unwrap_or_else(|| "structured".to_string());
    if let Some(path) = &out {
        std::fs::write(path, report.canonical_bytes())
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    match format.as_str() {
        "structured" => print_canonical(&report_value)?,
        "table" => print_table(&report),
        other => return Err(CliError::Input(format!("unknown format `{other}`"))),
    }
    println!(
        "scenario {}: {} [{}]",
        report.scenario_name,
        outcome_label(&report.outcome),
        format_counts(&report.message_counts)
    );

    if let Some(budget) = ticks {
        if report.ticks_elapsed > budget {
            return Err(CliError::Failure(format!(
                "used {} ticks, budget {budget}",
                report.ticks_elapsed
            )));
        }
    }
    let expected = run_config.output.as_ref().and_then(|o| o.expect.as_deref());
    let label = outcome_label(&report.outcome);
    match expected {
        Some(want) if want != label => Err(CliError::Failure(format!(
            "outcome {label}, config expects {want}"
        ))),
        _ if label == "failure" => {
            Err(CliError::Failure(format!("scenario failed: {:?}", report.outcome)))
        }
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Keygen { seed } => {
            let keypair = state::keypair(&seed)?;
            print_canonical(&serde_json::json!({
                "public_key": hex::encode(keypair.public_key()),
                "suite_id": keypair.suite_id(),
            }))
        }
        Command::Did { command } => run_did(command),
        Command::Vc { command } => run_vc(command),
        Command::Scenario { command } => run_scenario_cmd(command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
