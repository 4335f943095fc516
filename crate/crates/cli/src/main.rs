//! `sfclab`: instance generation, baselines, demonstrations, refinement,
//! evaluation and dataset inspection.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 budget exhausted or policy
//! refusal, 4 bridge transport failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfclab_core::dataset::{
    format_instance, parse_config, read_dataset, read_sidecar, write_dataset, DatasetError, Records, TextError,
};
use sfclab_core::gen::{ConfigError, GenConfig};
use sfclab_core::heuristics::PolicyKind;
use sfclab_core::invdemo::{iterate_demonstrations, refine_demonstration, InvdemoError, LexBudget, LexError};
use sfclab_core::simulator::{
    evaluate, heuristic_policy, run_episode, BridgePolicy, EpisodeConfig, EvalReport, Policy, SimError, CSV_HEADER,
};

#[derive(Parser)]
#[command(name = "sfclab", version, about = "SFC joint placement and scheduling lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an instance (network and arriving chains) in the text format.
    Gen(Common),
    /// Run one episode with a baseline policy and print its metrics.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "greedy")]
        policy: PolicyKind,
        /// Also write the episode trajectory as a one-record dataset.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        episode: EpisodeArgs,
    },
    /// Generate demonstrations and write them as a dataset.
    Demos {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Refine the schedules of a demonstration dataset again.
    Lexopt {
        #[command(flatten)]
        common: Common,
        /// Demonstration dataset to refine.
        input: PathBuf,
        #[arg(long, default_value_t = LexBudget::default().max_states)]
        max_states: u64,
        /// States kept per level; 0 searches exactly.
        #[arg(long, default_value_t = 0)]
        beam: usize,
    },
    /// Evaluate a policy over consecutive seeds and print a CSV table.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "greedy")]
        policy: PolicyKind,
        /// `host:port`, `tcp://host:port` or `exec:<command>` for `--policy bridge`.
        #[arg(long)]
        endpoint: Option<String>,
        /// Number of episodes; seeds run from `--seed` upwards.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[command(flatten)]
        episode: EpisodeArgs,
    },
    /// Validate a dataset file and summarize it.
    Dataset {
        #[command(flatten)]
        common: Common,
        path: PathBuf,
    },
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Servers per network.
    #[arg(long)]
    nodes: Option<usize>,
    /// Chains per instance, episode or demonstration.
    #[arg(long)]
    sfcs: Option<usize>,
    /// Slots per episode, or states per demonstration trajectory.
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator settings as `key value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EpisodeArgs {
    /// Mean arrivals per slot; defaults to sfcs / horizon.
    #[arg(long)]
    arrival_rate: Option<f64>,
    /// Keep one network across seeds, drawn from this seed.
    #[arg(long)]
    network_seed: Option<u64>,
}

enum Failure {
    Usage(String),
    Data(String),
    Budget(String),
    Transport(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Transport(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Budget(m) | Failure::Transport(m) => m,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let msg = e.to_string();
        match e {
            SimError::Protocol(_) | SimError::Transport(_) => Failure::Transport(msg),
            SimError::Refused(_) | SimError::Budget(_) => Failure::Budget(msg),
            SimError::Config(_) => Failure::Usage(msg),
            SimError::Model(_) => Failure::Data(msg),
        }
    }
}

impl From<InvdemoError> for Failure {
    fn from(e: InvdemoError) -> Self {
        match e {
            InvdemoError::Config(c) => Failure::Usage(c.to_string()),
            InvdemoError::Sim(s) => s.into(),
            InvdemoError::Lex(LexError::BudgetExceeded(_)) => Failure::Budget(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

impl Common {
    fn gen_config(&self) -> Result<GenConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
                parse_config(&text).map_err(|e: TextError| Failure::Data(format!("{}: {e}", path.display())))?
            }
            None => GenConfig::default(),
        };
        cfg.seed = self.seed;
        if let Some(n) = self.nodes {
            cfg.nodes = n;
        }
        if let Some(k) = self.sfcs {
            cfg.chains = k;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn episode(&self, extra: &EpisodeArgs) -> Result<EpisodeConfig, Failure> {
        let gen = self.gen_config()?;
        let mut cfg = EpisodeConfig::new(gen.clone(), gen.chains, gen.horizon, self.seed);
        cfg.arrival_rate = extra.arrival_rate;
        cfg.network_seed = extra.network_seed;
        cfg.validate()?;
        Ok(cfg)
    }

    fn required_out(&self) -> Result<&Path, Failure> {
        self.out.as_deref().ok_or_else(|| Failure::Usage("--out is required".into()))
    }

    /// Writes to `--out`, or standard output when unset.
    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Data(e.to_string())),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen(common) => {
            let cfg = common.episode(&EpisodeArgs { arrival_rate: None, network_seed: None })?;
            let instance = cfg.instance()?;
            common.emit(&format_instance(&instance))
        }
        Command::Baseline { common, policy, trajectory, episode } => {
            let cfg = common.episode(&episode)?;
            let mut p = make_policy(policy, None, cfg.seed)?;
            let ep = run_episode(&cfg, p.as_mut())?;
            let m = ep.metrics;
            common.emit(&format!(
                "{CSV_HEADER}\n{},{},{},{},{}\n",
                cfg.seed, m.reward, m.avg_waiting, m.blocked, m.efficiency
            ))?;
            if let Some(path) = trajectory {
                let horizon = ep.trajectory.len() as u32;
                write_dataset(&path, &cfg.layout(), horizon, &Records::Trajectories(vec![ep.trajectory]))?;
            }
            Ok(())
        }
        Command::Demos { common, rounds } => {
            let out = common.required_out()?;
            let cfg = common.gen_config()?;
            let demos = iterate_demonstrations(&cfg, rounds)?;
            let exact = demos.iter().filter(|d| d.exact).count();
            let chains: usize = demos.iter().map(|d| d.reward()).sum();
            write_dataset(out, &cfg.layout(cfg.horizon), cfg.horizon, &Records::Demonstrations(demos))?;
            eprintln!("wrote {rounds} demonstrations ({chains} chains, {exact} proven optimal) to {}", out.display());
            Ok(())
        }
        Command::Lexopt { common, input, max_states, beam } => {
            let ds = read_dataset(&input)?;
            let Records::Demonstrations(demos) = ds.records else {
                return Err(Failure::Data(format!("{} holds trajectories, not demonstrations", input.display())));
            };
            let budget = LexBudget { max_states, beam: (beam > 0).then_some(beam) };
            let layout = ds.header.layout();
            let refined = demos
                .iter()
                .map(|d| refine_demonstration(d, &layout, ds.header.horizon, budget))
                .collect::<Result<Vec<_>, _>>()?;
            let exact = refined.iter().filter(|d| d.exact).count();
            let changed = refined.iter().zip(&demos).filter(|(a, b)| a.deployment != b.deployment).count();
            eprintln!("refined {} demonstrations: {changed} changed, {exact} proven optimal", refined.len());
            if let Some(out) = &common.out {
                write_dataset(out, &layout, ds.header.horizon, &Records::Demonstrations(refined))?;
            }
            Ok(())
        }
        Command::Eval { common, policy, endpoint, seeds, episode } => {
            if seeds == 0 {
                return Err(Failure::Usage("--seeds must be at least 1".into()));
            }
            if policy == PolicyKind::Bridge && endpoint.is_none() {
                return Err(Failure::Usage("--policy bridge needs --endpoint".into()));
            }
            let cfg = common.episode(&episode)?;
            let seed_list: Vec<u64> = (0..seeds).map(|k| common.seed.wrapping_add(k)).collect();
            let report = evaluate(&cfg, &seed_list, |s| make_policy(policy, endpoint.as_deref(), s))?;
            summarize(policy, &report);
            common.emit(&report.to_csv())
        }
        Command::Dataset { common, path } => {
            let ds = read_dataset(&path)?;
            let h = &ds.header;
            let labels: Vec<f64> = ds.records.trajectories().map(|t| t.label).collect();
            let mean_label = if labels.is_empty() { 0.0 } else { labels.iter().sum::<f64>() / labels.len() as f64 };
            let mut text = format!(
                "kind {:?}\nversion {}\nrecords {}\nnodes {}\ntracked {}\nhorizon {}\nchain_len {}\nmean_label {mean_label}\n",
                h.kind, h.version, h.records, h.nodes, h.max_tracked, h.horizon, h.max_chain_len
            );
            if let Records::Demonstrations(demos) = &ds.records {
                let exact = demos.iter().filter(|d| d.exact).count();
                text.push_str(&format!("proven_optimal {exact}\n"));
            }
            match read_sidecar(&path) {
                Ok(side) if side.header == ds.header => text.push_str("sidecar ok\n"),
                Ok(_) => return Err(Failure::Data("sidecar disagrees with the file header".into())),
                Err(_) => text.push_str("sidecar missing\n"),
            }
            common.emit(&text)
        }
    }
}

fn make_policy(kind: PolicyKind, endpoint: Option<&str>, seed: u64) -> Result<Box<dyn Policy + Send>, SimError> {
    match (kind, endpoint) {
        (PolicyKind::Bridge, Some(ep)) => Ok(Box::new(BridgePolicy::connect(ep)?)),
        _ => heuristic_policy(kind, seed),
    }
}

fn summarize(policy: PolicyKind, report: &EvalReport) {
    let ci = report.ci95();
    let names = ["reward", "avg_waiting", "blocked", "efficiency"];
    let parts: Vec<String> =
        names.iter().enumerate().map(|(c, n)| format!("{n} {:.3} ± {:.3}", report.mean[c], ci[c])).collect();
    eprintln!("{policy} over {} seeds: {}", report.rows.len(), parts.join(", "));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sfclab: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
