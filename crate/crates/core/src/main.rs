use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use beacon_core::committees::{bounds_thresholds, check_committee_bounds};
use beacon_core::ffg::{self, SlashingReport};
use beacon_core::fork_choice::check_store_invariants;
use beacon_core::preset::Preset;
use beacon_core::sim::{self, ChainFile, Participation, Scenario, SimConfig};
use beacon_core::ssz::{Descriptor, DescriptorError, SszType};
use beacon_core::transition::state_transition;
use beacon_core::types::{BeaconBlock, BeaconState};

#[derive(Parser)]
#[command(name = "beacon", version, about = "Beacon chain state machine toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one block to a pre-state.
    Transition {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        block: PathBuf,
        #[arg(long)]
        post: PathBuf,
        /// Skip the block's state-root check.
        #[arg(long)]
        no_verify_root: bool,
        #[arg(long)]
        preset: Option<PathBuf>,
    },
    /// Replay a chain file over a pre-state, checking every state root.
    Validate {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        preset: Option<PathBuf>,
    },
    /// Print the hash tree root of an SSZ file.
    Root {
        #[arg(long = "type")]
        ty: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        preset: Option<PathBuf>,
    },
    /// Convert between SSZ bytes and JSON.
    Ssz {
        direction: Direction,
        #[arg(long = "type")]
        ty: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        preset: Option<PathBuf>,
    },
    /// Check committee sizes for an active validator count.
    CommitteeBounds {
        #[arg(long)]
        validators: u64,
        #[arg(long)]
        preset: Option<PathBuf>,
    },
    /// Run the chain simulator and write a dump directory.
    Simulate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        validators: u64,
        #[arg(long)]
        epochs: u64,
        #[arg(long, default_value = "honest", value_parser = parse_scenario)]
        scenario: Scenario,
        #[arg(long, default_value = "1/1", value_parser = parse_participation)]
        participation: Participation,
        /// Shared coalition size for conflicting_finality.
        #[arg(long)]
        coalition: Option<u64>,
        #[arg(long)]
        preset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild a dumped store and check block-tree invariants.
    Invariants {
        #[arg(long)]
        store: PathBuf,
    },
    /// Rebuild a dumped store and report justification, finalization and slashings.
    Ffg {
        #[arg(long)]
        store: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Encode,
    Decode,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse()
}

fn parse_participation(s: &str) -> Result<Participation, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Domain { code: String, detail: String },
}

fn domain(code: impl Into<String>, detail: impl ToString) -> Failure {
    Failure::Domain { code: code.into(), detail: detail.to_string() }
}

type Outcome = Result<(), Failure>;

/// Writes to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| domain("Io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| domain("Io", format!("{}: {e}", path.display())))
}

fn load_preset(path: &Option<PathBuf>) -> Result<Preset, Failure> {
    match path {
        None => Ok(Preset::default()),
        Some(p) => Preset::load(p).map_err(|e| domain("BadPreset", e)),
    }
}

fn decode<T: SszType>(path: &Path, preset: &Preset) -> Result<T, Failure> {
    T::from_ssz_bytes(&read(path)?, preset)
        .map_err(|e| domain(format!("MalformedEncoding({})", e.code()), format!("{}: {e}", path.display())))
}

fn descriptor_failure(e: DescriptorError) -> Failure {
    match e {
        DescriptorError::Parse(_) => Failure::Usage(e.to_string()),
        DescriptorError::Decode(d) => domain(format!("MalformedEncoding({})", d.code()), d),
        DescriptorError::Json(_) => domain("MalformedJson", e),
    }
}

fn load_store(dir: &Path) -> Result<beacon_core::fork_choice::Store, Failure> {
    let dump = sim::load_dump(dir).map_err(|e| domain(e.code(), e))?;
    dump.build_store().map_err(|e| domain(e.code(), e))
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Transition { pre, block, post, no_verify_root, preset } => {
            let preset = load_preset(&preset)?;
            let state: BeaconState = decode(&pre, &preset)?;
            let block: BeaconBlock = decode(&block, &preset)?;
            let next = state_transition(&state, &block, !no_verify_root, &preset).map_err(|e| domain(e.code(), e))?;
            write(&post, &next.to_ssz_bytes(&preset))?;
            out!("OK slot={} root={}\n", next.slot, next.tree_root(&preset));
        }
        Command::Validate { pre, chain, preset } => {
            let preset = load_preset(&preset)?;
            let state: BeaconState = decode(&pre, &preset)?;
            let chain = ChainFile::decode(&read(&chain)?, &preset).map_err(|e| domain(e.code(), e))?;
            let last = sim::replay(&state, &chain, true, &preset)
                .map_err(|e| domain(e.error.code(), format!("block {}: {}", e.index, e.error)))?;
            out!("OK blocks={} slot={} root={}\n", chain.blocks.len(), last.slot, last.tree_root(&preset));
        }
        Command::Root { ty, input, preset } => {
            let preset = load_preset(&preset)?;
            let descriptor = Descriptor::parse(&ty).map_err(descriptor_failure)?;
            let root = descriptor.hash_tree_root(&read(&input)?, &preset).map_err(descriptor_failure)?;
            out!("{root}\n");
        }
        Command::Ssz { direction, ty, input, out, preset } => {
            let preset = load_preset(&preset)?;
            let descriptor = Descriptor::parse(&ty).map_err(descriptor_failure)?;
            let bytes = read(&input)?;
            match direction {
                Direction::Decode => {
                    let json = descriptor.decode_to_json(&bytes, &preset).map_err(descriptor_failure)?;
                    let text = serde_json::to_string_pretty(&json).expect("json values serialize");
                    write(&out, format!("{text}\n").as_bytes())?;
                }
                Direction::Encode => {
                    let json = serde_json::from_slice(&bytes).map_err(|e| domain("MalformedJson", e))?;
                    write(&out, &descriptor.encode_from_json(json, &preset).map_err(descriptor_failure)?)?;
                }
            }
        }
        Command::CommitteeBounds { validators, preset } => {
            let preset = load_preset(&preset)?;
            let t = bounds_thresholds(&preset);
            out!("{}\n", check_committee_bounds(validators, &preset));
            out!("THRESHOLDS safe_min={} safe_max={} all_violate_min={}\n", t.safe_min, t.safe_max, t.all_violate_min);
        }
        Command::Simulate { seed, validators, epochs, scenario, participation, coalition, preset, out } => {
            let cfg = SimConfig {
                participation,
                coalition,
                ..SimConfig::new(seed, validators, epochs).with_scenario(scenario).with_preset(load_preset(&preset)?)
            };
            let output = sim::simulate(&cfg).map_err(|e| match e {
                sim::SimError::Config(m) => Failure::Usage(m),
                other => domain("SimulationFailed", other),
            })?;
            sim::write_dump(&out, &output).map_err(|e| domain(e.code(), e))?;
            out!("{}", output.report);
        }
        Command::Invariants { store } => {
            let report = check_store_invariants(&load_store(&store)?);
            out!("{report}");
            if !report.all_passed() {
                return Err(domain("InvariantViolated", "see INVARIANT lines"));
            }
        }
        Command::Ffg { store } => {
            let store = load_store(&store)?;
            let votes = ffg::extract_ffg_votes(&store).map_err(|e| domain(format!("CommitteeError({})", e.code()), e))?;
            let status = ffg::justified_finalized_from_votes(&store, &votes);
            out!("{status}");
            out!("{}", SlashingReport::from_votes(&votes));
            if let Some((a, b)) = ffg::find_conflicting_finalized(&store, &status) {
                out!("CONFLICT ({a}) ({b})\n");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Domain { code, detail }) => {
            out!("ERROR {code} {}\n", detail.replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
