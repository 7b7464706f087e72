use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use soco_core::acord::lambda1_of_mu;
use soco_core::graph::{
    build_d_regular, read_edge_list, sigma_dregular, sigma_exact, sigma_lower_bound, write_edge_list, GraphSnapshot,
};
use soco_core::instance::{
    generate_experiment_instance, generate_lower_bound_instance, generate_naive_failure_instance, ExperimentParams,
    Instance, LowerBoundVariant, NaiveFailureVariant,
};
use soco_core::oracles::{offline_opt, SolveConfig};
use soco_core::runner::{
    acord_spec, cr_report, expand_algos, plot_csv, run_algorithm, run_sweep, write_report, AlgoSpec, ExperimentConfig,
};
use soco_core::simnet::{summary_json, LogMode};

const VIOLATION: u8 = 2;

#[derive(Parser)]
#[command(name = "soco-swarm", version, about = "Decentralized smoothed online convex optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a JSON config and write CSV/JSON reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `outputs` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Competitive ratios of several algorithms on one instance.
    Cr {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated algorithm specs.
        #[arg(long, default_value = "acord,lpc:1:1,ftm")]
        algos: String,
        #[arg(long)]
        json: bool,
    },
    /// Strong-convexity constant of the decoupled objective on a graph.
    Sigma {
        /// Edge-list file.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        beta: f64,
        /// Defaults to the smallest squared singular value over the couplings.
        #[arg(long)]
        m: Option<f64>,
        /// Defaults to the ACORD weight for `mu`.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run one algorithm and write its message log, summary and per-round costs.
    Simulate(SimulateArgs),
    /// Write a generated instance or graph.
    #[command(subcommand)]
    Generate(Generate),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// `acord`, `lpc`, `ftm`, `local`, `local-robd`, `consensus`, `opt`, or a full spec such as `lpc:2:3`.
    #[arg(long)]
    algo: String,
    /// ACORD K policy: `fixed:K`, `bounded`, `bounded:Mf:Ms`, `crawl` or `eps:E`.
    #[arg(long, default_value = "crawl")]
    kt: String,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Message log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Summary JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Per-round cost CSV.
    #[arg(long)]
    costs: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Generate {
    /// Random quadratic costs on a D-regular graph.
    Experiment {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        alpha_floor: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adversarial instance with a switch in the final round.
    LowerBound {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        mu_prime: f64,
        #[arg(long)]
        heterogeneous: bool,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Instances on which purely local or purely consensus policies fail.
    Naive {
        /// `local-robd` or `consensus`.
        #[arg(long)]
        variant: String,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 1e6)]
        curvature: f64,
        #[arg(long, default_value_t = 20.0)]
        separation: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// D-regular circulant graph as an edge list.
    Graph {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Cr { instance, algos, json } => cr(&instance, &algos, json),
        Command::Sigma { graph, mu, beta, m, lambda } => sigma(&graph, mu, beta, m, lambda),
        Command::Simulate(args) => simulate(&args),
        Command::Generate(g) => generate(g),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let dir = match out.or_else(|| cfg.outputs.as_ref().map(PathBuf::from)) {
        Some(d) => d,
        None => bail!("no output directory: pass --out or set `outputs`"),
    };
    let report = run_sweep(&cfg)?;
    write_report(&report, &dir)?;
    print!("{}", plot_csv(&report.aggregate));
    for row in report.rows.iter().filter(|r| !r.error.is_empty()) {
        eprintln!("failed: x={} seed={} {}: {}", row.x, row.seed, row.algo, row.error);
    }
    let violations = report.violations();
    for row in &violations {
        eprintln!("bound violated: x={} seed={} {} cost {} > {}", row.x, row.seed, row.algo, row.total, row.bound);
    }
    Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(VIOLATION) })
}

fn cr(path: &Path, algos: &str, json: bool) -> Result<ExitCode> {
    let inst = load_instance(path)?;
    let specs = algos.split(',').map(str::parse).collect::<soco_core::Result<Vec<AlgoSpec>>>()?;
    let (_, opt) = offline_opt(&inst, &SolveConfig::default())?;
    let mut costs = Vec::new();
    for spec in expand_algos(&specs, &inst) {
        let out = run_algorithm(&inst, &spec, LogMode::Counting).with_context(|| format!("running {spec}"))?;
        costs.push((spec.to_string(), out.cost));
    }
    let records = cr_report(&inst, &costs, &opt)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&records)?);
    } else {
        println!("algo,cost,opt_cost,ratio,bound,slack,violation");
        for r in &records {
            println!("{},{:?},{:?},{:?},{:?},{:?},{}", r.algo, r.cost, r.opt_cost, r.ratio, r.bound, r.slack, r.violation);
        }
    }
    Ok(if records.iter().any(|r| r.violation) { ExitCode::from(VIOLATION) } else { ExitCode::SUCCESS })
}

fn sigma(path: &Path, mu: f64, beta: f64, m: Option<f64>, lambda: Option<f64>) -> Result<ExitCode> {
    let g = read_edge_list(path).with_context(|| format!("reading {}", path.display()))?;
    let lambda = match lambda {
        Some(l) => l,
        None => lambda1_of_mu(mu)?,
    };
    let m = m.unwrap_or_else(|| coupling_floor(&g));
    let n = g.n();
    let (mus, lambdas) = (vec![mu; n], vec![lambda; n]);
    let mut out = serde_json::Map::new();
    out.insert("N".into(), n.into());
    out.insert("edges".into(), g.edge_count().into());
    out.insert("lambda".into(), lambda.into());
    out.insert("m".into(), m.into());
    match sigma_exact(&g, &mus, &lambdas, beta, m) {
        Ok(rep) => out.insert("exact".into(), serde_json::to_value(rep)?),
        Err(e) => out.insert("exact".into(), e.to_string().into()),
    };
    out.insert("lower_bound".into(), serde_json::to_value(sigma_lower_bound(&g, &mus, &lambdas, beta, m)?)?);
    let degree = g.max_degree();
    if (0..n).all(|i| g.degree(i) == degree) {
        out.insert("dregular".into(), serde_json::to_value(sigma_dregular(degree, mu, lambda, beta, m)?)?);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn coupling_floor(g: &GraphSnapshot) -> f64 {
    (0..g.edge_count()).map(|e| g.coupling(e).squared_singular_range().0).fold(f64::INFINITY, f64::min).min(1.0)
}

fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let inst = load_instance(&args.instance)?;
    let spec = match args.algo.as_str() {
        "acord" => acord_spec(&args.kt)?,
        "lpc" => format!("lpc:{}:{}", args.r, args.k).parse()?,
        other => other.parse()?,
    };
    let mode = if args.log.is_some() { LogMode::Full } else { LogMode::Counting };
    let out = run_algorithm(&inst, &spec, mode)?;
    if let Some(p) = &args.costs {
        fs::write(p, out.cost.to_csv())?;
    }
    if let Some(log) = &out.log {
        if let Some(p) = &args.log {
            fs::write(p, log.to_csv())?;
        }
        if let Some(p) = &args.summary {
            let degree = inst.graphs[0].max_degree();
            fs::write(p, summary_json(log, &spec.to_string(), degree, inst.beta, inst.horizon)?)?;
        }
    } else if args.log.is_some() || args.summary.is_some() {
        eprintln!("{spec} does not communicate; no log written");
    }
    println!(
        "{spec}: total {:?} (hitting {:?}, switching {:?}, dissimilarity {:?})",
        out.cost.total, out.cost.hitting, out.cost.switching, out.cost.dissimilarity
    );
    Ok(ExitCode::SUCCESS)
}

fn generate(g: Generate) -> Result<ExitCode> {
    let (inst, out) = match g {
        Generate::Experiment { agents, horizon, degree, beta, seed, alpha_floor, out } => {
            let p = ExperimentParams { agents, horizon, degree, beta, seed, alpha_floor };
            (generate_experiment_instance(&p)?, out)
        }
        Generate::LowerBound { agents, horizon, mu, mu_prime, heterogeneous, beta, out } => {
            let v = if heterogeneous { LowerBoundVariant::Heterogeneous } else { LowerBoundVariant::Symmetric };
            (generate_lower_bound_instance(agents, horizon, mu, mu_prime, v, beta)?, out)
        }
        Generate::Naive { variant, beta, horizon, curvature, separation, out } => {
            let v = match variant.as_str() {
                "local-robd" | "local_robd" => NaiveFailureVariant::LocalRobd,
                "consensus" => NaiveFailureVariant::Consensus { curvature, separation },
                other => bail!("unknown naive variant '{other}'"),
            };
            (generate_naive_failure_instance(v, beta, horizon)?, out)
        }
        Generate::Graph { agents, degree, out } => {
            write_edge_list(&build_d_regular(agents, degree)?, &out)?;
            return Ok(ExitCode::SUCCESS);
        }
    };
    fs::write(&out, inst.to_json()?).with_context(|| format!("writing {}", out.display()))?;
    Ok(ExitCode::SUCCESS)
}
