use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graphbal::htest::{balance_test, default_k, BalanceConfig, GraphCache, Method, TestForm};
use graphbal::io::{
    graph_edges, permutation_oracle, read_csv_dataset, to_canonical_json, write_edge_list, write_report_to,
    CsvSchema, GraphKind, JitterSpec, LoadedDataset, Report, ReportFormat,
};
use graphbal::nngraph::KnnBackend;
use graphbal::paths::PathMethod;
use graphbal::sim::{power_study, MethodSpec, PowerCell, PowerOptions, ScenarioConfig, ScenarioKind};
use graphbal::stats::NullStatistic;
use graphbal::{Error, Metric, Result};

const SEED_ENV: &str = "GRAPHBAL_SEED";

#[derive(Parser)]
#[command(name = "graphbal", version, about = "Graph-based multisample tests of covariate balance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one balance test on a CSV file and print the report.
    Test(TestArgs),
    /// Run a simulated power study and print the rejection-rate table as CSV.
    Simulate(SimulateArgs),
    /// Print the constructed graph as an edge list (src,dst,weight).
    Graph(GraphArgs),
    /// Exact permutation moments of a statistic, by enumerating all labelings.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with one row per unit.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "group")]
    group_column: String,
    /// Comma-separated covariate columns (default: all but the group column).
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// `column` or `column=scale`; repeatable. Adds uniform noise to break ties.
    #[arg(long)]
    jitter: Vec<JitterSpec>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
}

impl InputArgs {
    fn load(&self, seed: u64) -> Result<LoadedDataset> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config("the delimiter must be a single ASCII character".into()));
        }
        let schema = CsvSchema {
            group_column: self.group_column.clone(),
            covariate_columns: self.covariates.clone(),
            jitter: self.jitter.clone(),
            delimiter: self.delimiter as u8,
        };
        read_csv_dataset(&self.input, &schema, seed)
    }
}

#[derive(Args)]
struct SeedArg {
    /// Seed for every random stream.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutputArg {
    /// Output file (default: standard output).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "knn")]
    method: Method,
    /// wald, max, or min (default: wald, or min for runs).
    #[arg(long)]
    form: Option<TestForm>,
    /// Neighbours per unit for knn (default: ⌊0.1 N⌋).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "greedy_edge")]
    path_variant: PathMethod,
    /// Monte-Carlo draws for extremum tail probabilities.
    #[arg(long, default_value_t = 100_000)]
    mc: usize,
    /// Permutation draws for the crossmatch null.
    #[arg(long, default_value_t = 10_000)]
    perm_draws: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "null")]
    kind: ScenarioKind,
    /// Comma-separated δ values; one cell each.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    groups: usize,
    /// Comma-separated group sizes (default: 50, 100, ...). For the
    /// motivating example only their sum is used.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    /// Comma-separated tests such as `knn`, `knn:k=15`, `runs:hilbert@wald`.
    #[arg(long, value_delimiter = ',', default_value = "knn,crossmatch,runs,ranks")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    #[arg(long, default_value_t = 100_000)]
    mc: usize,
    #[arg(long, default_value_t = 10_000)]
    perm_draws: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "knn")]
    graph: GraphKind,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "greedy_edge")]
    path_variant: PathMethod,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "knn")]
    method: Method,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "greedy_edge")]
    path_variant: PathMethod,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArg,
}

fn open_output(out: &OutputArg) -> Result<Box<dyn Write>> {
    Ok(match &out.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn echo_seed(seed: u64) {
    if std::env::var_os(SEED_ENV).is_some() {
        eprintln!("graphbal: seed {seed} (from {SEED_ENV})");
    }
}

fn parse_method(label: &str) -> Result<MethodSpec> {
    match label.split_once('@') {
        Some((m, f)) => Ok(MethodSpec {
            form: f.parse()?,
            ..m.parse()?
        }),
        None => label.parse(),
    }
}

fn run_test(a: &TestArgs) -> Result<()> {
    let seed = a.seed.seed;
    echo_seed(seed);
    let loaded = a.input.load(seed)?;
    let config = BalanceConfig {
        k: a.k,
        path_method: a.path_variant,
        metric: a.input.metric,
        knn_backend: KnnBackend::KdTree,
        n_mc: a.mc,
        permutation_draws: a.perm_draws,
        seed,
    };
    let form = a.form.unwrap_or(a.method.default_form());
    let mut report = balance_test(&loaded.dataset, a.method, form, &config)?;
    report.label_mapping = Some(loaded.label_mapping);
    let mut out = open_output(&a.output)?;
    write_report_to(Report::Test(&report), a.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let seed = a.seed.seed;
    echo_seed(seed);
    let methods = a.methods.iter().map(|m| parse_method(m)).collect::<Result<Vec<_>>>()?;
    let cells: Vec<PowerCell> = a
        .delta
        .iter()
        .map(|&delta| {
            let mut config = ScenarioConfig::new(a.kind, delta, a.d, a.groups);
            config.sizes = (!a.sizes.is_empty()).then(|| a.sizes.clone());
            config.replicates = a.replicates;
            config.seed = seed;
            PowerCell {
                name: format!("{}-d{}-G{}-delta{}", a.kind.name(), a.d, a.groups, delta),
                config,
            }
        })
        .collect();
    let options = PowerOptions {
        alpha: a.alpha,
        balance: BalanceConfig {
            metric: a.metric,
            n_mc: a.mc,
            permutation_draws: a.perm_draws,
            ..BalanceConfig::default()
        },
    };
    let table = power_study(&cells, &methods, &options);
    for f in &table.failures {
        eprintln!(
            "graphbal: {} {} replicate {}: {}",
            f.scenario,
            f.method.as_deref().unwrap_or("(data)"),
            f.replicate.map_or("-".to_string(), |r| r.to_string()),
            f.message
        );
    }
    let mut out = open_output(&a.output)?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn run_graph(a: &GraphArgs) -> Result<()> {
    let seed = a.seed.seed;
    echo_seed(seed);
    let loaded = a.input.load(seed)?;
    let mut cache = GraphCache::new(&loaded.dataset, a.input.metric);
    let k = a.k.unwrap_or_else(|| default_k(loaded.dataset.n()));
    let edges = graph_edges(&mut cache, a.graph, k, KnnBackend::KdTree, a.path_variant)?;
    let mut out = open_output(&a.output)?;
    write_edge_list(&edges, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_oracle(a: &OracleArgs) -> Result<()> {
    let seed = a.seed.seed;
    echo_seed(seed);
    let loaded = a.input.load(seed)?;
    let ds = &loaded.dataset;
    let mut cache = GraphCache::new(ds, a.input.metric);
    let report = match a.method {
        Method::Knn => {
            let k = a.k.unwrap_or_else(|| default_k(ds.n()));
            let g = cache.knn(k, KnnBackend::KdTree)?.clone();
            permutation_oracle(NullStatistic::Knn(&g), ds)?
        }
        Method::Crossmatch => {
            let m = cache.matching()?.clone();
            permutation_oracle(NullStatistic::Crossmatch(&m), ds)?
        }
        Method::Runs | Method::Ranks => {
            let p = cache.path(a.path_variant)?.clone();
            let stat = if a.method == Method::Runs {
                NullStatistic::Runs(&p)
            } else {
                NullStatistic::RanksKw(&p)
            };
            permutation_oracle(stat, ds)?
        }
    };
    let mut out = open_output(&a.output)?;
    out.write_all(to_canonical_json(&report)?.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(a) => run_test(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Graph(a) => run_graph(a),
        Command::Oracle(a) => run_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("graphbal: {e}");
            ExitCode::FAILURE
        }
    }
}
