use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ratfilt::experiments::{
    aggregate, experiment_train_config, run_experiment, ExperimentSpec, GraphSource, Method,
    TargetSpec,
};
use ratfilt::graph::generate_block_graph;
use ratfilt::optimizer::TrainConfig;
use ratfilt::theory::{self, JumpTarget, RateKind};

#[derive(Parser)]
#[command(
    name = "ratfilt",
    version,
    about = "Fit rational and polynomial spectral filters to graph signals"
)]
struct Cli {
    /// Worker threads for order-lattice and rate experiments
    /// (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic block graph and write its edge list
    Gen(GenArgs),
    /// Fit the requested methods to a spectral target on a graph
    Fit(FitArgs),
    /// Convergence-rate experiments for the rational construction
    Theory(TheoryArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of vertex groups
    #[arg(long)]
    groups: usize,
    /// Vertices per group
    #[arg(long)]
    group_size: usize,
    /// Largest intra-group partner count per vertex
    #[arg(long, default_value_t = 8)]
    intra_max: usize,
    /// Largest inter-group partner count per vertex
    #[arg(long, default_value_t = 3)]
    inter_max: usize,
    #[arg(long)]
    seed: u64,
    /// Output edge-list path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    Abs,
    Sign,
    Highpass,
}

impl From<TargetArg> for TargetSpec {
    fn from(t: TargetArg) -> TargetSpec {
        match t {
            TargetArg::Abs => TargetSpec::Abs,
            TargetArg::Sign => TargetSpec::Sign,
            TargetArg::Highpass => TargetSpec::Highpass,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    #[value(name = "rational+remez")]
    RationalRemez,
    #[value(name = "rational-no-remez")]
    RationalNoRemez,
    #[value(name = "poly-ls")]
    PolyLs,
    #[value(name = "cheb-ls")]
    ChebLs,
    #[value(name = "poly-gd")]
    PolyGd,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::RationalRemez => Method::RationalRemez,
            MethodArg::RationalNoRemez => Method::RationalNoRemez,
            MethodArg::PolyLs => Method::PolyLs,
            MethodArg::ChebLs => Method::ChebLs,
            MethodArg::PolyGd => Method::PolyGd,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Edge-list file of the graph to fit on
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    graph: Option<PathBuf>,
    /// Spectral target on the normalized eigenvalues
    #[arg(long, value_enum, default_value = "abs")]
    target: TargetArg,
    /// Methods to run (repeatable)
    #[arg(long, value_enum, num_args = 1..)]
    method: Vec<MethodArg>,
    /// Rational numerator order
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Rational denominator order
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Polynomial baseline degree
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Line-search step scale for the gradient methods
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    /// Gradient epochs
    #[arg(long, default_value_t = 20000)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for FitReport JSONs and the results CSV
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Rerun with seeds seed..seed+repeats-1 and aggregate mean/std
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Cache eigendecompositions here, keyed by edge-list content hash
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Record wall-clock seconds in the results CSV (breaks byte-identical
    /// reruns; off by default)
    #[arg(long, default_value_t = false)]
    timing: bool,
    /// Full experiment spec as JSON, instead of the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TheoryKind {
    Newman,
    Rates,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, value_enum)]
    kind: TheoryKind,
    /// Degree range start:stop:step (inclusive), all degrees >= 5
    #[arg(long, default_value = "5:50:5")]
    degrees: String,
    /// Grid points for sup-norm evaluation
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_degrees(spec: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("bad degree component {s:?}"))
    };
    let (start, stop, step) = match parts.as_slice() {
        [single] => {
            let d = parse(single)?;
            (d, d, 1)
        }
        [start, stop] => (parse(start)?, parse(stop)?, 1),
        [start, stop, step] => (parse(start)?, parse(stop)?, parse(step)?),
        _ => return Err(format!("bad degree range {spec:?}")),
    };
    if step == 0 || stop < start {
        return Err(format!("bad degree range {spec:?}"));
    }
    let degrees: Vec<usize> = (start..=stop).step_by(step).collect();
    if let Some(&d) = degrees.iter().find(|&&d| d < 5) {
        return Err(format!("degree {d} below the minimum of 5"));
    }
    Ok(degrees)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Fit(args) => run_fit(args),
        Command::Theory(args) => run_theory(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run_gen(args: GenArgs) -> Result<ExitCode, String> {
    let g = generate_block_graph(
        args.groups,
        args.group_size,
        args.intra_max,
        args.inter_max,
        args.seed,
    )
    .map_err(|e| e.to_string())?;
    g.write_edge_list(&args.out).map_err(|e| e.to_string())?;
    println!("n {}", g.n());
    println!("edges {}", g.num_edges());
    if g.num_edges() == 0 {
        eprintln!("warning: generated graph has no edges");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_fit(args: FitArgs) -> Result<ExitCode, String> {
    let base_spec = if let Some(config) = &args.config {
        let text = std::fs::read_to_string(config)
            .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
        serde_json::from_str::<ExperimentSpec>(&text)
            .map_err(|e| format!("bad config {}: {e}", config.display()))?
    } else {
        let graph = args.graph.clone().expect("clap enforces --graph");
        if !graph.is_file() {
            return Err(format!("graph file not found: {}", graph.display()));
        }
        let methods: Vec<Method> = if args.method.is_empty() {
            Method::all().to_vec()
        } else {
            args.method.iter().map(|&m| m.into()).collect()
        };
        ExperimentSpec {
            graph: GraphSource::EdgeList { path: graph },
            target: args.target.into(),
            methods,
            m: args.m,
            n: args.n,
            k: args.k,
            train: TrainConfig {
                learning_rate: args.lr,
                max_epochs: args.epochs,
                ..experiment_train_config()
            },
            seed: args.seed,
            out_dir: args.out_dir.clone(),
            cache_dir: args.cache_dir.clone(),
            timing: args.timing,
        }
    };

    let repeats = args.repeats.max(1);
    let mut outcomes = Vec::new();
    let mut all_ok = true;
    for r in 0..repeats {
        let mut spec = base_spec.clone();
        spec.seed = base_spec.seed + r;
        if repeats > 1 {
            spec.out_dir = base_spec
                .out_dir
                .as_ref()
                .map(|d| d.join(format!("seed_{}", spec.seed)));
        }
        let out = run_experiment(&spec).map_err(|e| e.to_string())?;
        println!(
            "seed {}: graph n {} edges {}, target {} dirichlet energy {}",
            spec.seed,
            out.graph_n,
            out.graph_edges,
            base_spec.target.label(),
            fmt17(out.truth_dirichlet_energy)
        );
        for run in &out.runs {
            match &run.outcome {
                Ok(rep) => {
                    let vertex = rep.vertex_mse.unwrap_or(f64::NAN);
                    print!(
                        "  {}: s_err {} v_err {} epochs {}",
                        rep.method,
                        fmt17(rep.spectral_mse),
                        fmt17(vertex),
                        rep.epochs
                    );
                    if rep.epochs >= 1 {
                        let init = rep.loss_trace[0];
                        if init > 0.0 {
                            let improved = (init - rep.spectral_mse) / init * 100.0;
                            print!(" improved {improved:.2}%");
                        }
                    }
                    println!();
                }
                Err(e) => {
                    all_ok = false;
                    eprintln!("  {}: failed: {e}", run.method.label());
                }
            }
        }
        outcomes.push(out);
    }

    if repeats > 1 {
        let rows = aggregate(&outcomes);
        let mut csv = String::from("method,s_err_mean,s_err_std,v_err_mean,v_err_std,seeds\n");
        for row in &rows {
            println!(
                "aggregate {}: s_err {} ± {} over {} seeds",
                row.method,
                fmt17(row.s_err_mean),
                fmt17(row.s_err_std),
                row.seeds
            );
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.method,
                fmt17(row.s_err_mean),
                fmt17(row.s_err_std),
                fmt17(row.v_err_mean),
                fmt17(row.v_err_std),
                row.seeds
            ));
        }
        if let Some(dir) = &base_spec.out_dir {
            std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
            std::fs::write(dir.join("summary.csv"), csv).map_err(|e| e.to_string())?;
        }
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_theory(args: TheoryArgs) -> Result<ExitCode, String> {
    let degrees = match parse_degrees(&args.degrees) {
        Ok(d) => d,
        Err(msg) => {
            // invalid flag values are usage errors
            eprintln!("error: {msg}");
            return Ok(ExitCode::from(2));
        }
    };
    if args.grid < 2 {
        eprintln!("error: --grid must be at least 2");
        return Ok(ExitCode::from(2));
    }
    match args.kind {
        TheoryKind::Newman => {
            let mut csv = String::from("degree,c,sup_error,bound,pass\n");
            let mut all_pass = true;
            for &n in &degrees {
                for c in [1.0f64, 2.0, 5.0] {
                    let err =
                        theory::newman_sup_error(n, c, args.grid).map_err(|e| e.to_string())?;
                    let bound = theory::newman_bound(n, c);
                    let pass = err <= bound;
                    all_pass &= pass;
                    if c == 1.0 {
                        println!(
                            "n {n}: sup error {} bound {} {}",
                            fmt17(err),
                            fmt17(bound),
                            if pass { "pass" } else { "FAIL" }
                        );
                    }
                    csv.push_str(&format!(
                        "{n},{c},{},{},{}\n",
                        fmt17(err),
                        fmt17(bound),
                        pass
                    ));
                }
            }
            if let Some(out) = &args.out {
                std::fs::write(out, csv).map_err(|e| e.to_string())?;
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        TheoryKind::Rates => {
            let target = JumpTarget::new(1.0, 0.0, 0, 0.0).map_err(|e| e.to_string())?;
            let rat =
                theory::rate_experiment(RateKind::Rational, &target, 1.0, &degrees, args.grid)
                    .map_err(|e| e.to_string())?;
            let poly =
                theory::rate_experiment(RateKind::Polynomial, &target, 1.0, &degrees, args.grid)
                    .map_err(|e| e.to_string())?;
            let mut csv = String::from("degree,rational_sup_error,polynomial_sup_error\n");
            for (r, p) in rat.iter().zip(&poly) {
                println!(
                    "n {}: rational {} polynomial {}",
                    r.degree,
                    fmt17(r.sup_error),
                    fmt17(p.sup_error)
                );
                csv.push_str(&format!(
                    "{},{},{}\n",
                    r.degree,
                    fmt17(r.sup_error),
                    fmt17(p.sup_error)
                ));
            }
            if let Some(out) = &args.out {
                std::fs::write(out, csv).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
