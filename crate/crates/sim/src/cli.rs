//! The `pmdss` command line: encode files into node directories, corrupt
//! nodes, run secure repair and reconstruction against those directories,
//! print capacity figures, and drive Monte Carlo campaigns.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use pmdss_core::adversary::{observe_from_storage, Strategy};
use pmdss_core::field::SymbolVector;
use pmdss_core::pm_code::{
    build_encoding_matrix, capacity_upper_bound_sum, derive_symbol, SymbolId,
};
use pmdss_core::secure_protocol::{secure_reconstruct, secure_repair, DetectionReport};
use pmdss_core::{CrossSymbol, NodeState, SystemParams};

use crate::campaign::{run_campaign, write_reports};
use crate::codec::{
    bytes_to_stripes, load_node, load_trust, read_manifest, store_node, stripes_to_bytes,
    write_system, Manifest,
};
use crate::error::SimError;
use crate::scenario::{parse_event, paper_mode_config, Placement, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pmdss",
    about = "Byzantine-resilient product-matrix storage codes: encode, corrupt, repair, reconstruct, simulate",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// `n,k,d,b,q,v` as a single flag value.
#[derive(Debug, Clone, Copy)]
struct ParamSpec {
    n: usize,
    k: usize,
    d: usize,
    b: usize,
    q: u64,
    v: usize,
}

impl ParamSpec {
    fn build(&self) -> Result<SystemParams, SimError> {
        Ok(SystemParams::new(
            self.n, self.k, self.d, self.b, self.q, self.v,
        )?)
    }
}

impl FromStr for ParamSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let nums: Vec<u64> = s
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| format!("bad number {p:?}")))
            .collect::<Result<_, _>>()?;
        if nums.len() != 6 {
            return Err("expected n,k,d,b,q,v".into());
        }
        Ok(ParamSpec {
            n: nums[0] as usize,
            k: nums[1] as usize,
            d: nums[2] as usize,
            b: nums[3] as usize,
            q: nums[4],
            v: nums[5] as usize,
        })
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::from_str(s)
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// System parameters n,k,d,b,q,v.
    #[arg(long, required_unless_present = "paper_mode")]
    params: Option<ParamSpec>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corruption strategy: zero | random | targeted | omniscient.
    #[arg(long, value_parser = parse_strategy, default_value = "random")]
    strategy: Strategy,
    /// Controlled nodes, e.g. "3" or "3,5"; "random" draws b nodes per trial.
    #[arg(long, default_value = "random")]
    controlled: String,
    /// Symbols to corrupt as i-j pairs, e.g. "1-3,2-3"; default: everything
    /// stored on controlled nodes.
    #[arg(long)]
    corrupt: Option<String>,
    /// Event script entries, e.g. "repair:2:1,3,4,5,6" or
    /// "reconstruct:random"; may repeat. Default: one random reconstruction.
    #[arg(long = "event")]
    events: Vec<String>,
    /// Run the pinned walk-through scenario on a (7,4,5), b=1 system.
    #[arg(long)]
    paper_mode: bool,
    /// Report directory for campaign.csv / summary.txt / scenario.txt.
    #[arg(long, default_value = "campaign_out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print capacity figures: the secure capacity, the general upper bound,
    /// and the adversary-free tradeoff value.
    Capacity {
        #[arg(long)]
        params: ParamSpec,
        /// Per-node storage override for the bound (defaults to the MBR
        /// point alpha = d - b).
        #[arg(long)]
        alpha: Option<u64>,
        #[arg(long, default_value_t = 1)]
        beta: u64,
    },
    /// Encode a file into per-node directories plus the trusted hash store.
    Encode {
        #[arg(long)]
        params: ParamSpec,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corrupt one node directory in place.
    Corrupt {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        node: usize,
        /// zero | random | targeted.
        #[arg(long, value_parser = parse_strategy, default_value = "zero")]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Securely repair one node from helper directories and rewrite it.
    Repair {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        node: usize,
        /// Exactly d helper node ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        helpers: Vec<usize>,
    },
    /// Securely reconstruct the file from k node directories.
    Reconstruct {
        #[arg(long)]
        dir: PathBuf,
        /// Exactly k node ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a Monte Carlo campaign.
    Simulate(SimulateArgs),
}

/// Parses the process arguments and runs the selected subcommand.
pub fn run() -> Result<(), SimError> {
    dispatch(Cli::parse())
}

pub fn dispatch(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Capacity {
            params,
            alpha,
            beta,
        } => capacity(params, alpha, beta),
        Command::Encode { params, input, out } => encode(params, &input, &out),
        Command::Corrupt {
            dir,
            node,
            strategy,
            seed,
        } => corrupt(&dir, node, strategy, seed),
        Command::Repair { dir, node, helpers } => repair(&dir, node, &helpers),
        Command::Reconstruct { dir, nodes, output } => reconstruct(&dir, &nodes, &output),
        Command::Simulate(args) => simulate(args),
    }
}

fn capacity(spec: ParamSpec, alpha: Option<u64>, beta: u64) -> Result<(), SimError> {
    let params = spec.build()?;
    let alpha = alpha.unwrap_or(params.alpha() as u64);
    println!(
        "n={} k={} d={} b={} q={} v={}",
        params.n(),
        params.k(),
        params.d(),
        params.b(),
        params.q(),
        params.v()
    );
    println!(
        "k_eff={} d_eff={} alpha={} beta={}",
        params.k_eff(),
        params.d_eff(),
        alpha,
        beta
    );
    println!("secure_capacity={}", params.secure_capacity());
    println!(
        "upper_bound={}",
        params.capacity_upper_bound(alpha, beta)
    );
    println!(
        "tradeoff_b0={}",
        capacity_upper_bound_sum(params.k(), params.d(), 0, alpha, beta)
    );
    println!(
        "hash_overhead_ratio={}",
        pmdss_core::hashing::overhead_ratio(&params)
    );
    Ok(())
}

fn encode(spec: ParamSpec, input: &Path, out: &Path) -> Result<(), SimError> {
    let params = spec.build()?;
    let data = fs::read(input)?;
    let stripes = bytes_to_stripes(&params, &data)?;
    write_system(out, &params, &stripes)?;
    println!(
        "status=ok\taction=encode\tbytes={}\tstripes={}\tout={}",
        data.len(),
        stripes.len(),
        out.display()
    );
    Ok(())
}

fn corrupt(dir: &Path, node: usize, strategy: Strategy, seed: u64) -> Result<(), SimError> {
    let manifest = read_manifest(dir)?;
    let params = &manifest.params;
    let states = load_node(dir, &manifest, node)?;
    let field = params.field();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let psi = build_encoding_matrix(params);

    let corrupted: Vec<NodeState> = match strategy {
        Strategy::Zeroing => states
            .iter()
            .map(|state| {
                let symbols = state
                    .stored()
                    .iter()
                    .map(|s| CrossSymbol {
                        id: s.id,
                        value: SymbolVector::zero(params.v()),
                    })
                    .collect();
                NodeState::from_symbols(node, symbols)
            })
            .collect(),
        Strategy::RandomError => states
            .iter()
            .map(|state| {
                let symbols = state
                    .stored()
                    .iter()
                    .map(|s| {
                        let e = SymbolVector::random_nonzero(params.v(), field, &mut rng);
                        Ok(CrossSymbol {
                            id: s.id,
                            value: s.value.add(&e, field)?,
                        })
                    })
                    .collect::<Result<Vec<_>, SimError>>()?;
                Ok(NodeState::from_symbols(node, symbols))
            })
            .collect::<Result<Vec<_>, SimError>>()?,
        Strategy::TargetedCollision => {
            let mut out = Vec::with_capacity(states.len());
            for (stripe, state) in states.iter().enumerate() {
                let mut adv = observe_from_storage(
                    params,
                    &psi,
                    &[state],
                    Strategy::TargetedCollision,
                    seed.wrapping_add(stripe as u64),
                )?;
                let symbols = state
                    .stored()
                    .iter()
                    .map(|s| {
                        Ok(CrossSymbol {
                            id: s.id,
                            value: adv.corrupt(s.id, &s.value)?,
                        })
                    })
                    .collect::<Result<Vec<_>, SimError>>()?;
                out.push(NodeState::from_symbols(node, symbols));
            }
            out
        }
        Strategy::Omniscient => {
            return Err(SimError::Config(
                "the omniscient strategy needs the full system; it is not available offline"
                    .into(),
            ))
        }
    };
    store_node(dir, &corrupted)?;
    println!(
        "status=ok\taction=corrupt\tnode={node}\tstrategy={}\tstripes={}",
        strategy.name(),
        corrupted.len()
    );
    Ok(())
}

/// A helper's response for the failed node: its stored copy when present,
/// otherwise derived from its own storage (consistently wrong if that
/// storage was corrupted).
fn helper_response(
    params: &SystemParams,
    psi: &pmdss_core::pm_code::EncodingMatrix,
    helper_state: &NodeState,
    failed: usize,
) -> Result<SymbolVector, SimError> {
    if let Some(v) = helper_state.value_for(failed) {
        return Ok(v.clone());
    }
    Ok(derive_symbol(params, psi, helper_state, failed)?.value)
}

fn merge_reports(total: &mut DetectionReport, stripe_report: &DetectionReport) {
    total
        .detected
        .extend(stripe_report.detected.iter().copied());
    total.inconclusive |= stripe_report.inconclusive;
    total.residual_mismatches += stripe_report.residual_mismatches;
}

fn repair(dir: &Path, node: usize, helpers: &[usize]) -> Result<(), SimError> {
    let manifest = read_manifest(dir)?;
    let params = &manifest.params;
    let psi = build_encoding_matrix(params);
    let trust = load_trust(dir, &manifest)?;
    let helper_states: Vec<Vec<NodeState>> = helpers
        .iter()
        .map(|&h| load_node(dir, &manifest, h))
        .collect::<Result<_, _>>()?;

    let mut repaired = Vec::with_capacity(manifest.stripes);
    let mut total = DetectionReport::clean();
    for stripe in 0..manifest.stripes {
        let responses: Vec<(usize, SymbolVector)> = helpers
            .iter()
            .zip(&helper_states)
            .map(|(&h, states)| {
                Ok((h, helper_response(params, &psi, &states[stripe], node)?))
            })
            .collect::<Result<_, SimError>>()?;
        let (state, report) = secure_repair(params, &psi, node, &responses, &trust[stripe])?;
        merge_reports(&mut total, &report);
        repaired.push(state);
    }
    store_node(dir, &repaired)?;
    println!("{}", total.to_record(&format!("repair-node{node}")));
    println!(
        "status=ok\taction=repair\tnode={node}\tstripes={}",
        repaired.len()
    );
    Ok(())
}

fn reconstruct(dir: &Path, nodes: &[usize], output: &Path) -> Result<(), SimError> {
    let manifest = read_manifest(dir)?;
    let params = &manifest.params;
    let psi = build_encoding_matrix(params);
    let trust = load_trust(dir, &manifest)?;
    let node_states: Vec<Vec<NodeState>> = nodes
        .iter()
        .map(|&u| load_node(dir, &manifest, u))
        .collect::<Result<_, _>>()?;

    let mut stripes = Vec::with_capacity(manifest.stripes);
    let mut total = DetectionReport::clean();
    for stripe in 0..manifest.stripes {
        let payloads: Vec<NodeState> = node_states
            .iter()
            .map(|states| states[stripe].clone())
            .collect();
        let (symbols, report) = secure_reconstruct(params, &psi, &payloads, &trust[stripe])?;
        merge_reports(&mut total, &report);
        stripes.push(symbols);
    }
    let bytes = stripes_to_bytes(params, &stripes)?;
    fs::write(output, &bytes)?;
    println!("{}", total.to_record("reconstruct"));
    println!(
        "status=ok\taction=reconstruct\tbytes={}\tout={}",
        bytes.len(),
        output.display()
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), SimError> {
    let config = if args.paper_mode {
        let v = args.params.map_or(8, |p| p.v);
        paper_mode_config(v, args.trials, args.seed)
    } else {
        let spec = args
            .params
            .expect("clap requires --params without --paper-mode");
        let controlled = if args.controlled == "random" {
            Placement::Random(spec.b)
        } else {
            let ids = args
                .controlled
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| SimError::Config(format!("bad node id {p:?}")))
                })
                .collect::<Result<BTreeSet<_>, _>>()?;
            Placement::Fixed(ids)
        };
        let corrupt_ids = match &args.corrupt {
            None => None,
            Some(text) => Some(
                text.split(',')
                    .map(|part| {
                        let (i, j) = part
                            .split_once('-')
                            .ok_or_else(|| SimError::Config(format!("bad symbol id {part:?}")))?;
                        let i: usize = i
                            .parse()
                            .map_err(|_| SimError::Config(format!("bad symbol id {part:?}")))?;
                        let j: usize = j
                            .parse()
                            .map_err(|_| SimError::Config(format!("bad symbol id {part:?}")))?;
                        Ok(SymbolId::new(i, j)?)
                    })
                    .collect::<Result<Vec<_>, SimError>>()?,
            ),
        };
        let events = if args.events.is_empty() {
            vec![crate::scenario::Event::Reconstruct {
                users: crate::scenario::Choice::Random,
            }]
        } else {
            args.events
                .iter()
                .map(|e| parse_event(e))
                .collect::<Result<_, _>>()?
        };
        ScenarioConfig {
            n: spec.n,
            k: spec.k,
            d: spec.d,
            b: spec.b,
            q: spec.q,
            v: spec.v,
            strategy: args.strategy,
            controlled,
            corrupt_ids,
            events,
            trials: args.trials,
            seed: args.seed,
        }
    };

    let (results, stats) = run_campaign(&config)?;
    write_reports(&args.out, &results, &stats)?;
    fs::write(args.out.join("scenario.txt"), config.to_text())?;
    print!("{}", stats.summary_text());
    println!("status=ok\taction=simulate\tout={}", args.out.display());
    Ok(())
}
