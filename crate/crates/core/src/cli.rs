//! Command-line entry point: one subcommand per analysis, CSV outputs plus a
//! `manifest.json` describing the run.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::competition::{fee_competition, group_report, rank_summaries, top_income_targets, Target};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SnapshotGraph};
use crate::ingest::{self, EntityMap, LoadOptions, PolicyConvention};
use crate::netstats::centrality::{centrality_income_correlation, Measure};
use crate::netstats::correlation::{correlation_matrix, mean_off_diagonal, Method};
use crate::netstats::reference::{reference_graph, Model};
use crate::netstats::structure::{summarize, UndirectedGraph};
use crate::netstats::temporal::{attachment_curve, densification_fit, edge_locality, growth_series, lifetimes, temporal_metrics};
use crate::privacy::{cost_vs_length, hop_count_distribution, plausibility_curve, single_hop_from_stats, CostVsLengthOptions, GaParams};
use crate::profitability::{
    depletion_ratio, entity_removal_failures, entity_report, sweep, top_sweep_entities, FeeWeighting, ReportOptions, SweepAxis,
};
use crate::report::{self, CorrelationRow};
use crate::seeds::derive_seed;
use crate::sim::{run_experiment, run_experiment_partial, AggregateResult, ExperimentOptions, NodeDayStats};
use crate::state::SimParams;

const MANIFEST: &str = "manifest.json";

#[derive(Parser, Clone, Debug, Serialize, Deserialize)]
#[command(name = "lnsim", version, about = "Payment channel network traffic simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Snapshot file or directory (canonical CSV or gossip JSON).
    #[arg(long, global = true)]
    pub snapshots: Option<PathBuf>,
    /// Merchant list, `pub_key,tag`.
    #[arg(long, global = true)]
    pub merchants: Option<PathBuf>,
    /// Entity map, `pub_key,entity_name`.
    #[arg(long, global = true)]
    pub entities: Option<PathBuf>,
    /// Channel open/close stream.
    #[arg(long, global = true)]
    pub edge_stream: Option<PathBuf>,
    /// Master seed; generated and recorded when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory [default: results].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Drop channels below this capacity [default: the payment amount].
    #[arg(long, global = true)]
    pub min_capacity: Option<u64>,
    #[arg(long, global = true)]
    pub keep_disabled: bool,
    /// Which endpoint's advertised policy a directed edge carries.
    #[arg(long, global = true, value_enum, default_value_t = Convention::Source)]
    pub policy_convention: Convention,
    /// Re-run the configuration recorded in a manifest.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub from_manifest: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SimArgs {
    /// Transactions per day.
    #[arg(long, global = true, default_value_t = 7000)]
    pub tau: usize,
    /// Payment value, satoshi.
    #[arg(long, global = true, default_value_t = 60_000)]
    pub amount: u64,
    #[arg(long, global = true, default_value_t = 0.8)]
    pub merchant_ratio: f64,
    #[arg(long, global = true, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, global = true)]
    pub ignore_depletion: bool,
    #[arg(long, global = true)]
    pub count_last_hop_fee: bool,
    #[arg(long, global = true, default_value_t = 20)]
    pub max_hops: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    Source,
    Target,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    Uniform,
    Capacity,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Alpha,
    Tau,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
pub enum Command {
    /// Per-node income and traffic over every snapshot and run.
    Simulate {
        /// Also write every sampled transaction.
        #[arg(long)]
        dump_transactions: bool,
    },
    /// Fallback routes and optimal base-fee increments of routers.
    FeeCompetition {
        /// `top:K`, `node:ID` or `entity:NAME`, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "top:100")]
        targets: Vec<String>,
    },
    /// Return on capital of router entities.
    Profitability {
        #[arg(long, value_enum, default_value_t = Weighting::Capacity)]
        fee_weighting: Weighting,
        /// Entity capacities, `entity_name,capacity_sat`; summed from channels otherwise.
        #[arg(long)]
        entity_capacities: Option<PathBuf>,
        #[arg(long, default_value_t = 50.0)]
        min_income: f64,
        #[arg(long, default_value_t = 10.0)]
        min_traffic: f64,
        #[arg(long, default_value_t = 0.05)]
        target_roi: f64,
    },
    /// Entity income as payment value or volume varies.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        /// Entities written, by total income.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Income with depletion over income ignoring it.
    DepletionRatio,
    /// Failure fraction after removing each entity.
    EntityRemoval {
        /// Entities to remove; the top earners when omitted.
        #[arg(long, value_delimiter = ',')]
        remove: Vec<String>,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Single-intermediary exposure, plausibility and fixed-length routing cost.
    Privacy {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        lengths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.0,0.2,0.4,0.6,0.8,1.0")]
        epsilons: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "10000,60000,1000000")]
        plausibility_amounts: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        max_threshold: usize,
        /// Successful payments per simulated day fed to the path search.
        #[arg(long, default_value_t = 20)]
        payments_per_day: usize,
        #[arg(long, default_value_t = 50)]
        population: usize,
        #[arg(long, default_value_t = 100)]
        generations: usize,
    },
    /// Structural metrics of snapshots and of the channel stream.
    GraphStats {
        /// Block window of the stream metrics.
        #[arg(long, default_value_t = 1000)]
        window: u64,
        /// Add random reference graphs of equal size.
        #[arg(long)]
        reference: bool,
    },
    /// Stability of node statistics across days and runs, and their relation to centrality.
    Correlations {
        /// Merchant ratios for the centrality correlation [default: --merchant-ratio].
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
    },
    /// Gossip JSON dump to the canonical CSV.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::FeeCompetition { .. } => "fee-competition",
            Command::Profitability { .. } => "profitability",
            Command::Sweep { .. } => "sweep",
            Command::DepletionRatio => "depletion-ratio",
            Command::EntityRemoval { .. } => "entity-removal",
            Command::Privacy { .. } => "privacy",
            Command::GraphStats { .. } => "graph-stats",
            Command::Correlations { .. } => "correlations",
            Command::Convert { .. } => "convert",
        }
    }
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => Failure::Usage(m),
            other => Failure::Data(other),
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let cancel = Arc::new(AtomicBool::new(false));
    {
        let c = cancel.clone();
        let _ = ctrlc::set_handler(move || c.store(true, Ordering::SeqCst));
    }
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, &argv, cancel) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Data(Error::Interrupted)) => {
            eprintln!("interrupted; partial results written");
            130
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    argv: Vec<String>,
    command: String,
    seed: u64,
    seed_generated: bool,
    params: SimParams,
    load: LoadOptions,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    complete: bool,
    config: Cli,
}

#[derive(Serialize, Deserialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

fn resolve(mut cli: Cli) -> std::result::Result<Cli, Failure> {
    let Some(path) = cli.global.from_manifest.clone() else {
        return Ok(cli);
    };
    let text = fs::read_to_string(&path).map_err(|e| Failure::Data(Error::io(&path, e)))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Failure::Data(e.into()))?;
    let mut config = m.config;
    config.global.seed = Some(m.seed);
    if cli.global.out.is_some() {
        config.global.out = cli.global.out.take();
    }
    if cli.global.workers.is_some() {
        config.global.workers = cli.global.workers;
    }
    config.global.verbose = cli.global.verbose;
    Ok(config)
}

fn execute(cli: Cli, argv: &[String], cancel: Arc<AtomicBool>) -> std::result::Result<(), Failure> {
    let cli = resolve(cli)?;
    let Some(command) = cli.command.clone() else {
        return Err(Failure::Usage("a subcommand or --from-manifest is required".into()));
    };
    let (seed, seed_generated) = match cli.global.seed {
        Some(s) => (s, false),
        None => (rand::random::<u64>(), true),
    };
    let params = SimParams {
        tau: cli.sim.tau,
        amount_sat: cli.sim.amount,
        merchant_ratio: cli.sim.merchant_ratio,
        runs: cli.sim.runs,
        seed,
        ignore_depletion: cli.sim.ignore_depletion,
        count_last_hop_fee: cli.sim.count_last_hop_fee,
        max_hops: cli.sim.max_hops,
    };
    params.validate()?;
    let mut min_capacity = cli.global.min_capacity.unwrap_or(params.amount_sat);
    if let Command::Sweep { axis: Axis::Alpha, values, .. } = &command {
        min_capacity = min_capacity.min(values.iter().copied().min().unwrap_or(min_capacity));
    }
    let load = LoadOptions {
        min_capacity_sat: min_capacity,
        keep_disabled: cli.global.keep_disabled,
        policy_convention: match cli.global.policy_convention {
            Convention::Source => PolicyConvention::Source,
            Convention::Target => PolicyConvention::Target,
        },
    };
    let out = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out).map_err(|e| Failure::Data(Error::io(&out, e)))?;

    let mut ctx = Context {
        cli: &cli,
        params,
        load,
        out: out.clone(),
        workers: cli.global.workers.unwrap_or(0),
        cancel,
        outputs: Vec::new(),
    };
    let result = ctx.dispatch(&command);
    let complete = !matches!(result, Err(Failure::Data(Error::Interrupted)));
    if matches!(result, Ok(()) | Err(Failure::Data(Error::Interrupted))) {
        let mut config = cli.clone();
        config.global.seed = Some(seed);
        config.global.out = None;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: argv.to_vec(),
            command: command.name().into(),
            seed,
            seed_generated,
            params: ctx.params.clone(),
            load,
            inputs: digests(&cli, &command)?,
            outputs: ctx.outputs.clone(),
            complete,
            config,
        };
        let path = out.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Data(e.into()))?;
        fs::write(&path, text + "\n").map_err(|e| Failure::Data(Error::io(&path, e)))?;
    }
    result
}

fn digests(cli: &Cli, command: &Command) -> std::result::Result<Vec<InputDigest>, Failure> {
    let g = &cli.global;
    let mut paths: Vec<&PathBuf> = [&g.snapshots, &g.merchants, &g.entities, &g.edge_stream].into_iter().flatten().collect();
    match command {
        Command::Convert { input, .. } => paths.push(input),
        Command::Profitability {
            entity_capacities: Some(p), ..
        } => paths.push(p),
        _ => {}
    }
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Failure::Data(Error::io(p, e)))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            files.extend(entries);
        } else if p.is_file() {
            files.push(p.clone());
        }
    }
    files
        .into_iter()
        .map(|f| {
            let bytes = fs::read(&f).map_err(|e| Failure::Data(Error::io(&f, e)))?;
            Ok(InputDigest {
                path: f.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect()
}

struct Context<'a> {
    cli: &'a Cli,
    params: SimParams,
    load: LoadOptions,
    out: PathBuf,
    workers: usize,
    cancel: Arc<AtomicBool>,
    outputs: Vec<String>,
}

type Outcome = std::result::Result<(), Failure>;

impl Context<'_> {
    fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn experiment_options(&self) -> ExperimentOptions {
        ExperimentOptions {
            workers: self.workers,
            keep_outcomes: false,
            removed_nodes: None,
            cancel: Some(self.cancel.clone()),
        }
    }

    fn snapshots(&self) -> Result<Vec<SnapshotGraph>> {
        let Some(path) = &self.cli.global.snapshots else {
            return Err(Error::InvalidInput("--snapshots is required for this command".into()));
        };
        let merchants = match &self.cli.global.merchants {
            Some(p) => ingest::load_merchants(p)?,
            None => HashSet::new(),
        };
        let graphs = ingest::load_snapshots(path, &self.load)?;
        if graphs.is_empty() {
            return Err(Error::Validation(format!("{}: no snapshots found", path.display())));
        }
        log::info!("loaded {} snapshots", graphs.len());
        Ok(graphs.into_iter().map(|g| g.with_merchants(&merchants)).collect())
    }

    fn entities(&self) -> Result<EntityMap> {
        match &self.cli.global.entities {
            Some(p) => ingest::load_entities(p),
            None => Ok(EntityMap::new()),
        }
    }

    fn dispatch(&mut self, command: &Command) -> Outcome {
        match command {
            Command::Simulate { dump_transactions } => self.simulate(*dump_transactions),
            Command::FeeCompetition { targets } => self.fee_competition(targets),
            Command::Profitability {
                fee_weighting,
                entity_capacities,
                min_income,
                min_traffic,
                target_roi,
            } => {
                let opts = ReportOptions {
                    min_income_sat: *min_income,
                    min_traffic: *min_traffic,
                    target_roi: *target_roi,
                    fee_weighting: match fee_weighting {
                        Weighting::Uniform => FeeWeighting::Uniform,
                        Weighting::Capacity => FeeWeighting::Capacity,
                    },
                    external_capacities: entity_capacities.as_deref().map(load_capacities).transpose()?,
                };
                self.profitability(&opts)
            }
            Command::Sweep { axis, values, top } => self.sweep(*axis, values, *top),
            Command::DepletionRatio => {
                let snaps = self.snapshots()?;
                let ratios = depletion_ratio(&snaps, &self.params, &self.entities()?, &self.experiment_options())?;
                let p = self.file("depletion_ratio.csv");
                Ok(report::write_depletion(&p, &ratios)?)
            }
            Command::EntityRemoval { remove, top } => self.entity_removal(remove, *top),
            Command::Privacy {
                lengths,
                epsilons,
                plausibility_amounts,
                max_threshold,
                payments_per_day,
                population,
                generations,
            } => {
                let mut ga = GaParams::new(1, derive_seed(self.params.seed, &[0x6a]));
                ga.population_size = *population;
                ga.generations = *generations;
                let opts = CostVsLengthOptions {
                    lengths: lengths.clone(),
                    ga,
                    payments_per_cell: *payments_per_day,
                    workers: self.workers,
                };
                self.privacy(epsilons, plausibility_amounts, *max_threshold, &opts)
            }
            Command::GraphStats { window, reference } => self.graph_stats(*window, *reference),
            Command::Correlations { epsilons } => self.correlations(epsilons),
            Command::Convert { input, output } => {
                let rows = ingest::convert_gossip_dump(input, self.load.policy_convention)?;
                let f = fs::File::create(output).map_err(|e| Error::io(output, e))?;
                ingest::write_canonical_rows(f, &rows)?;
                self.outputs.push(output.display().to_string());
                Ok(())
            }
        }
    }

    fn simulate(&mut self, dump: bool) -> Outcome {
        let snaps = self.snapshots()?;
        let (agg, complete) = run_experiment_partial(&snaps, &self.params, &self.experiment_options())?;
        let p = self.file("node_stats.csv");
        report::write_node_stats(&p, &agg)?;
        let p = self.file("summary.csv");
        report::write_summary(&p, &agg)?;
        if dump {
            let p = self.file("transactions.csv");
            report::write_transactions(&p, &agg)?;
        }
        if !complete {
            return Err(Failure::Data(Error::Interrupted));
        }
        Ok(())
    }

    fn fee_competition(&mut self, specs: &[String]) -> Outcome {
        let snaps = self.snapshots()?;
        let entities = self.entities()?;
        let baseline = run_experiment(&snaps, &self.params, &self.experiment_options())?;
        let mut targets = Vec::new();
        for s in specs {
            match s.strip_prefix("top:") {
                Some(k) => {
                    let k: usize = k.parse().map_err(|_| Failure::Usage(format!("bad target {s:?}")))?;
                    targets.extend(top_income_targets(&baseline, k));
                }
                None => targets.push(Target::parse(s)?),
            }
        }
        let summaries = fee_competition(&snaps, &self.params, &entities, &targets, self.workers)?;
        let p = self.file("removal.csv");
        report::write_removal(&p, &summaries)?;
        let groups = group_report(&rank_summaries(&baseline, &summaries));
        let p = self.file("removal_groups.csv");
        report::write_groups(&p, &groups)?;
        Ok(())
    }

    fn profitability(&mut self, opts: &ReportOptions) -> Outcome {
        let snaps = self.snapshots()?;
        let entities = self.entities()?;
        let agg = run_experiment(&snaps, &self.params, &self.experiment_options())?;
        let rows = entity_report(&agg, &snaps, &entities, opts);
        let p = self.file("entity_report.csv");
        Ok(report::write_entity_report(&p, &rows)?)
    }

    fn sweep(&mut self, axis: Axis, values: &[u64], top: usize) -> Outcome {
        let snaps = self.snapshots()?;
        let entities = self.entities()?;
        let axis = match axis {
            Axis::Alpha => SweepAxis::Amount,
            Axis::Tau => SweepAxis::Tau,
        };
        let points = sweep(&snaps, &self.params, &entities, axis, values, &self.experiment_options())?;
        let names = top_sweep_entities(&points, top);
        let p = self.file(&format!("sweep_{}.csv", axis.as_str()));
        Ok(report::write_sweep(&p, &points, &names)?)
    }

    fn entity_removal(&mut self, remove: &[String], top: usize) -> Outcome {
        let snaps = self.snapshots()?;
        let entities = self.entities()?;
        let names = if remove.is_empty() {
            let agg = run_experiment(&snaps, &self.params, &self.experiment_options())?;
            let mut ranked: Vec<(String, f64)> =
                agg.mean_entity_stats(&entities).into_iter().map(|(k, s)| (k, s.routing_income_sat)).collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.into_iter().take(top).map(|(k, _)| k).collect()
        } else {
            remove.to_vec()
        };
        let (baseline, rows) = entity_removal_failures(&snaps, &self.params, &entities, &names, &self.experiment_options())?;
        let p = self.file("entity_removal.csv");
        Ok(report::write_entity_removal(&p, baseline, &rows)?)
    }

    fn privacy(&mut self, epsilons: &[f64], amounts: &[u64], max_threshold: usize, opts: &CostVsLengthOptions) -> Outcome {
        let snaps = self.snapshots()?;
        let mut dists = Vec::new();
        let mut single = Vec::new();
        for &eps in epsilons {
            let p = SimParams {
                merchant_ratio: eps,
                ..self.params.clone()
            };
            p.validate()?;
            let agg = run_experiment(&snaps, &p, &self.experiment_options())?;
            let stats = agg.path_stats();
            let f = single_hop_from_stats(&stats);
            dists.push((eps, hop_count_distribution(&stats)));
            single.push((eps, f.all_successes, f.routed_only));
        }
        let path = self.file("privacy.csv");
        report::write_privacy(&path, &dists)?;
        let path = self.file("single_hop.csv");
        report::write_single_hop(&path, &single)?;

        let thresholds: Vec<usize> = (0..=max_threshold).collect();
        let curves: Vec<_> = amounts
            .iter()
            .map(|&a| {
                let per: Vec<_> = snaps.iter().map(|g| plausibility_curve(g, a, &thresholds)).collect();
                let mut mean = per[0].clone();
                for (i, pt) in mean.points.iter_mut().enumerate() {
                    pt.1 = per.iter().map(|c| c.points[i].1).sum::<f64>() / per.len() as f64;
                }
                mean
            })
            .collect();
        let path = self.file("plausibility.csv");
        report::write_plausibility(&path, &curves)?;

        let costs = cost_vs_length(&snaps, &self.params, opts)?;
        let path = self.file("cost_vs_length.csv");
        Ok(report::write_cost_vs_length(&path, &costs)?)
    }

    fn graph_stats(&mut self, window: u64, reference: bool) -> Outcome {
        let mut rows = Vec::new();
        if self.cli.global.snapshots.is_some() {
            for g in self.snapshots()? {
                let u = UndirectedGraph::from_snapshot(&g);
                let s = summarize(&u, self.workers);
                if reference {
                    for model in [Model::ErdosRenyi, Model::BarabasiAlbert] {
                        let r = reference_graph(s.nodes, s.edges, model, derive_seed(self.params.seed, &[rows.len() as u64]))?;
                        rows.push((format!("{}:{}", model.as_str(), g.snapshot_id()), summarize(&r, self.workers)));
                    }
                }
                rows.insert(rows.len() - if reference { 2 } else { 0 }, (g.snapshot_id().to_string(), s));
            }
        }
        if let Some(path) = &self.cli.global.edge_stream {
            let stream = ingest::load_edge_stream(path)?;
            let windows = temporal_metrics(&stream, window, self.workers);
            if let Some(fit) = densification_fit(&growth_series(&windows)) {
                let p = self.file("densification.csv");
                report::write_csv(
                    &p,
                    &report::DENSIFICATION_HEADER,
                    [[report::fixed(fit.exponent, 6), report::fixed(fit.intercept, 6), report::fixed(fit.r_squared, 6)]],
                )?;
            }
            for w in windows {
                rows.push((
                    format!("block:{}", w.end_block),
                    crate::netstats::structure::StructureSummary {
                        nodes: w.nodes,
                        edges: w.edges,
                        average_degree: w.average_degree,
                        effective_diameter: w.effective_diameter,
                        cpd: w.cpd,
                        transitivity: w.transitivity,
                    },
                ));
            }
            let p = self.file("locality.csv");
            report::write_locality(&p, &edge_locality(&stream))?;
            let merchants = match &self.cli.global.merchants {
                Some(m) => ingest::load_merchants(m)?,
                None => HashSet::new(),
            };
            let p = self.file("lifetimes.csv");
            report::write_lifetimes(&p, &lifetimes(&stream, &merchants))?;
            let p = self.file("attachment.csv");
            report::write_attachment(&p, &attachment_curve(&stream))?;
        }
        if self.cli.global.snapshots.is_none() && self.cli.global.edge_stream.is_none() {
            return Err(Failure::Usage("graph-stats needs --snapshots or --edge-stream".into()));
        }
        let p = self.file("graph_metrics.csv");
        Ok(report::write_graph_metrics(&p, &rows)?)
    }

    fn correlations(&mut self, epsilons: &[f64]) -> Outcome {
        let snaps = self.snapshots()?;
        let agg = run_experiment(&snaps, &self.params, &self.experiment_options())?;
        let mut rows = stability_rows(&agg);
        let eps: Vec<f64> = if epsilons.is_empty() { vec![self.params.merchant_ratio] } else { epsilons.to_vec() };
        for e in eps {
            let a = if e == self.params.merchant_ratio {
                None
            } else {
                let p = SimParams {
                    merchant_ratio: e,
                    ..self.params.clone()
                };
                p.validate()?;
                Some(run_experiment(&snaps, &p, &self.experiment_options())?)
            };
            let c = centrality_income_correlation(a.as_ref().unwrap_or(&agg), &snaps, &Measure::ALL, self.workers);
            rows.extend(report::centrality_rows(&c, e));
        }
        let p = self.file("correlations.csv");
        Ok(report::write_correlations(&p, &rows)?)
    }
}

type Statistic = (&'static str, fn(&NodeDayStats) -> f64);

const STATISTICS: [Statistic; 4] = [
    ("routing_income", |s| s.routing_income_msat as f64),
    ("routing_traffic", |s| s.routing_traffic as f64),
    ("sender_fee", |s| s.sender_fee_msat as f64),
    ("sender_traffic", |s| s.sender_traffic as f64),
];

/// Cross-day correlations of run-averaged statistics and the mean cross-run
/// correlation within each day.
pub fn stability_rows(agg: &AggregateResult) -> Vec<CorrelationRow> {
    let mut rows = Vec::new();
    let days = agg.snapshot_ids.len();
    for (stat, get) in STATISTICS {
        let per_cell: Vec<(usize, BTreeMap<NodeId, f64>)> = agg
            .cells
            .iter()
            .map(|c| {
                let ids = &agg.node_ids[c.snapshot_index];
                (c.snapshot_index, c.stats.iter().enumerate().map(|(v, s)| (ids[v].clone(), get(s))).collect())
            })
            .collect();
        let mut day_means: Vec<BTreeMap<NodeId, f64>> = vec![BTreeMap::new(); days];
        let mut day_runs = vec![0usize; days];
        for (d, m) in &per_cell {
            day_runs[*d] += 1;
            for (k, v) in m {
                *day_means[*d].entry(k.clone()).or_default() += v;
            }
        }
        for (m, &r) in day_means.iter_mut().zip(&day_runs) {
            m.values_mut().for_each(|v| *v /= r.max(1) as f64);
        }
        for method in Method::ALL {
            let matrix = correlation_matrix(&day_means, method);
            for (i, row) in matrix.iter().enumerate() {
                for (j, &value) in row.iter().enumerate().skip(i + 1) {
                    rows.push(CorrelationRow {
                        kind: "cross_day".into(),
                        statistic: stat.into(),
                        method: method.as_str().into(),
                        a: agg.snapshot_ids[i].clone(),
                        b: agg.snapshot_ids[j].clone(),
                        value,
                    });
                }
            }
            for d in 0..days {
                let runs: Vec<BTreeMap<NodeId, f64>> =
                    per_cell.iter().filter(|(s, _)| *s == d).map(|(_, m)| m.clone()).collect();
                if runs.len() < 2 {
                    continue;
                }
                rows.push(CorrelationRow {
                    kind: "cross_run".into(),
                    statistic: stat.into(),
                    method: method.as_str().into(),
                    a: agg.snapshot_ids[d].clone(),
                    b: String::new(),
                    value: mean_off_diagonal(&correlation_matrix(&runs, method)),
                });
            }
        }
    }
    rows
}

fn load_capacities(path: &Path) -> Result<BTreeMap<String, f64>> {
    #[derive(Deserialize)]
    struct Row {
        entity_name: String,
        capacity_sat: f64,
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let mut out = BTreeMap::new();
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::parse(path, i as u64 + 2, e.to_string()))?;
        out.insert(row.entity_name, row.capacity_sat);
    }
    Ok(out)
}
