//! `uicw`: allocate, estimate, compare and verify competitive seed
//! allocations from the command line.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uic_welfare::allocators::AllocatorConfig;
use uic_welfare::experiment::{self, write_csv, Algorithm, Instance};
use uic_welfare::graph::{remap_edge_list, LoadOptions};
use uic_welfare::oracle::{optimal_allocation, OracleLimits};
use uic_welfare::ris::{RRCollection, RrKind, RrSampler};
use uic_welfare::selectors::SamplerParams;
use uic_welfare::utility::{parse_probability_list, utilities_from_probabilities, CatalogConfig, ItemId};
use uic_welfare::{Allocation, Error, Graph};

#[derive(Parser)]
#[command(name = "uicw", version, about = "Social-welfare maximization under the UIC model")]
struct Cli {
    /// Worker threads for sampling and estimation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one allocation algorithm and print the allocation.
    Allocate(AllocateArgs),
    /// Monte Carlo welfare and adoption counts of a given allocation.
    Estimate(EstimateArgs),
    /// Run several algorithms and print one CSV row each.
    Compare(CompareArgs),
    /// Exact welfare or exact optimal allocation on a tiny instance.
    Oracle(OracleArgs),
    /// Turn `name probability` lines into valuation entries `ln(scale * p) + price`.
    ConvertUtilities(ConvertArgs),
    /// Check a catalog config for monotonicity and submodularity.
    ValidateConfig(ValidateArgs),
    /// Relabel an edge list with dense ids.
    Remap(RemapArgs),
    /// Size histogram of sampled RR sets as `size,count` CSV; size 0 counts empty sets.
    RrStats(RrStatsArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Edge list `src dst [prob]`.
    #[arg(long)]
    graph: PathBuf,
    /// Catalog config (TOML).
    #[arg(long)]
    catalog: PathBuf,
    /// Budgets as `item=b,item=b`; defaults to the catalog's `[budgets]`.
    #[arg(long)]
    budgets: Option<String>,
    /// Fixed base allocation, `node item` per line.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Add the reverse of every edge.
    #[arg(long)]
    undirected: bool,
    /// Replace probabilities with `1 / in-degree`.
    #[arg(long)]
    weighted_cascade: bool,
}

#[derive(Args)]
struct TuningArgs {
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
    /// Simulations per welfare or marginal estimate.
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest `n * m * sum(b)` the greedy-marginal baseline accepts.
    #[arg(long, default_value_t = 1_000_000)]
    gm_cap: usize,
}

#[derive(Args)]
struct AllocateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    algo: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the allocator trace to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Allocation to evaluate together with the base.
    #[arg(long)]
    allocation: PathBuf,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Comma-separated algorithm ids.
    #[arg(long, default_value = "seqgrd,seqgrd-nm,maxgrd,round-robin,snake")]
    algos: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trace: bool,
    /// Add a wall-clock `seconds` column.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Allocation to evaluate; the empty allocation when absent.
    #[arg(long, conflicts_with = "optimal")]
    allocation: Option<PathBuf>,
    /// Search for the optimal allocation under the budgets.
    #[arg(long)]
    optimal: bool,
    /// Where to write the optimal allocation.
    #[arg(long, requires = "optimal")]
    allocation_out: Option<PathBuf>,
    #[arg(long, default_value_t = OracleLimits::default().max_edges)]
    max_edges: usize,
    #[arg(long, default_value_t = OracleLimits::default().max_allocation_space)]
    max_allocations: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    /// `name probability` per line.
    #[arg(long)]
    probs: PathBuf,
    #[arg(long, default_value_t = 10_000.0)]
    scale: f64,
    /// Price added to every utility to obtain the valuation.
    #[arg(long, default_value_t = 0.0)]
    price: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    catalog: PathBuf,
}

#[derive(Args)]
struct RemapArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the original label of each new id, one per line.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct RrStatsArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Nodes of `S^P`, comma-separated; marginal RR sets are sampled when given.
    #[arg(long)]
    fixed: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    undirected: bool,
    #[arg(long)]
    weighted_cascade: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    NotFound(String),
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CliResult<T> = Result<T, Failure>;

fn require(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::NotFound(format!("{what} not found: {}", path.display())))
    }
}

fn open(path: &Path, what: &str) -> CliResult<BufReader<File>> {
    require(path, what)?;
    Ok(BufReader::new(File::open(path)?))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_budgets(spec: &str, cfg: &CatalogConfig) -> CliResult<Vec<(ItemId, usize)>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, b) = part
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("budget `{part}` is not `item=count`")))?;
        let item = cfg.catalog.index_of(name.trim())?;
        let b = b
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("budget `{part}` has a bad count")))?;
        out.push((item, b));
    }
    Ok(out)
}

fn load_graph(path: &Path, undirected: bool, weighted_cascade: bool) -> CliResult<Graph> {
    let reader = open(path, "graph")?;
    let opts = LoadOptions { undirected, ..LoadOptions::default() };
    let graph = Graph::load_edge_list_with_header(reader, opts)?;
    if weighted_cascade {
        Ok(graph.with_weighted_cascade())
    } else if !graph.has_probabilities() && graph.edge_count() > 0 {
        Err(Failure::Usage("the edge list has no probabilities; pass --weighted-cascade".into()))
    } else {
        Ok(graph)
    }
}

fn load_instance(args: &InstanceArgs) -> CliResult<Instance> {
    let graph = load_graph(&args.graph, args.undirected, args.weighted_cascade)?;
    require(&args.catalog, "catalog")?;
    let cfg = CatalogConfig::load(&args.catalog)?;
    let budgets = match &args.budgets {
        Some(spec) => parse_budgets(spec, &cfg)?,
        None => cfg.budgets.clone(),
    };
    let base = match &args.base {
        Some(p) => Allocation::parse(open(p, "base allocation")?, &cfg.catalog)?,
        None => Allocation::new(),
    };
    let inst = Instance { graph, catalog: cfg.catalog, budgets, base };
    inst.check()?;
    Ok(inst)
}

fn config(t: &TuningArgs) -> AllocatorConfig {
    AllocatorConfig {
        sampler: SamplerParams { epsilon: t.epsilon, ell: t.ell },
        mc_samples: t.samples,
        seed: t.seed,
        gm_cap: t.gm_cap,
    }
}

fn print_trace(algo: Algorithm, lines: &[String]) {
    let mut err = io::stderr().lock();
    for l in lines {
        let _ = writeln!(err, "algo={algo} {l}");
    }
}

fn allocate(a: AllocateArgs) -> CliResult<()> {
    let algo: Algorithm = a.algo.parse()?;
    let inst = load_instance(&a.instance)?;
    let out = experiment::allocate(algo, &inst, &config(&a.tuning))?;
    if a.trace {
        print_trace(algo, &out.trace_lines());
    }
    emit(a.out.as_deref(), &out.allocation.to_text(&inst.catalog))
}

fn estimate(a: EstimateArgs) -> CliResult<()> {
    let inst = load_instance(&a.instance)?;
    let alloc = Allocation::parse(open(&a.allocation, "allocation")?, &inst.catalog)?;
    let rec = experiment::estimate_record("estimate", &inst, &alloc, a.samples, a.seed)?;
    emit(a.out.as_deref(), &write_csv(&inst.catalog, &[rec], false))
}

fn compare(a: CompareArgs) -> CliResult<()> {
    let algos: Vec<Algorithm> = a
        .algos
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()?;
    let inst = load_instance(&a.instance)?;
    let cfg = config(&a.tuning);
    let mut records = Vec::new();
    for algo in algos {
        let (out, rec) = experiment::run(algo, &inst, &cfg, a.timing)?;
        if a.trace {
            print_trace(algo, &out.trace_lines());
        }
        records.push(rec);
    }
    emit(a.out.as_deref(), &write_csv(&inst.catalog, &records, a.timing))
}

fn oracle(a: OracleArgs) -> CliResult<()> {
    let inst = load_instance(&a.instance)?;
    let limits = OracleLimits {
        max_edges: a.max_edges,
        max_allocation_space: a.max_allocations,
        ..OracleLimits::default()
    };
    let (name, alloc) = if a.optimal {
        let (alloc, _) = optimal_allocation(&inst.graph, &inst.catalog, &inst.budgets, &inst.base, &limits)?;
        if let Some(p) = &a.allocation_out {
            fs::write(p, alloc.to_text(&inst.catalog))?;
        }
        ("oracle-optimal", alloc)
    } else {
        let alloc = match &a.allocation {
            Some(p) => Allocation::parse(open(p, "allocation")?, &inst.catalog)?,
            None => Allocation::new(),
        };
        ("oracle", alloc)
    };
    let rec = experiment::exact_record(name, &inst, &alloc, &limits)?;
    emit(a.out.as_deref(), &write_csv(&inst.catalog, &[rec], false))
}

fn convert(a: ConvertArgs) -> CliResult<()> {
    let list = parse_probability_list(open(&a.probs, "probability list")?)?;
    let probs: Vec<f64> = list.iter().map(|x| x.1).collect();
    let utils = utilities_from_probabilities(&probs, a.scale)?;
    let mut text = String::new();
    for ((name, _), u) in list.iter().zip(utils) {
        text.push_str(&format!("\"{name}\" = {}\n", u + a.price));
    }
    emit(a.out.as_deref(), &text)
}

fn validate(a: ValidateArgs) -> CliResult<()> {
    require(&a.catalog, "catalog")?;
    let cfg = CatalogConfig::load(&a.catalog)?;
    let report = cfg.catalog.validate();
    let superior = cfg
        .catalog
        .superior_item()
        .map_or_else(|| "none".to_string(), |i| cfg.catalog.item(i).name.clone());
    let pure = match cfg.catalog.check_pure_competition() {
        Ok(()) => "yes".to_string(),
        Err(e) => format!("no ({e})"),
    };
    emit(None, &format!("valuation: {}\nsuperior: {superior}\npure-competition: {pure}\n", report.message))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("invalid catalog: {}", report.message)))
    }
}

fn remap(a: RemapArgs) -> CliResult<()> {
    let (text, labels) = remap_edge_list(open(&a.graph, "graph")?)?;
    if let Some(p) = &a.labels {
        let mut l = labels.join("\n");
        l.push('\n');
        fs::write(p, l)?;
    }
    emit(a.out.as_deref(), &format!("# nodes {}\n{text}", labels.len()))
}

fn rr_stats(a: RrStatsArgs) -> CliResult<()> {
    let graph = load_graph(&a.graph, a.undirected, a.weighted_cascade)?;
    let kind = match &a.fixed {
        Some(list) => {
            let mut mask = vec![false; graph.node_count()];
            for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let v: usize = part
                    .parse()
                    .map_err(|_| Failure::Usage(format!("bad node id `{part}`")))?;
                *mask
                    .get_mut(v)
                    .ok_or_else(|| Failure::Usage(format!("node {v} is not in the graph")))? = true;
            }
            RrKind::Marginal(mask)
        }
        None => RrKind::Standard,
    };
    let sampler = RrSampler { graph: &graph, kind, seed: a.seed, phase: 0 };
    let mut coll = RRCollection::new(graph.node_count());
    coll.extend_to(a.count, &sampler);
    let mut hist = vec![0usize; graph.node_count() + 1];
    for i in 0..coll.len() {
        hist[coll.members(i).len()] += 1;
    }
    let mut text = String::from("size,count\n");
    for (size, c) in hist.iter().enumerate().filter(|(_, &c)| c > 0) {
        text.push_str(&format!("{size},{c}\n"));
    }
    emit(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        eprintln!("error: cannot start thread pool: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Allocate(a) => allocate(a),
        Command::Estimate(a) => estimate(a),
        Command::Compare(a) => compare(a),
        Command::Oracle(a) => oracle(a),
        Command::ConvertUtilities(a) => convert(a),
        Command::ValidateConfig(a) => validate(a),
        Command::Remap(a) => remap(a),
        Command::RrStats(a) => rr_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotFound(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(Error::Limit(msg))) => {
            eprintln!("error: limit exceeded: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
