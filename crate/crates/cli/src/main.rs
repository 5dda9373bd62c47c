use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noisy_tree::baseline::chow_liu;
use noisy_tree::equivalence::{build_class, is_member};
use noisy_tree::estimator::empirical_moments;
use noisy_tree::generate::{random_noise, random_weights};
use noisy_tree::io::{
    parse_edge_list, parse_model, parse_samples, write_edge_list, write_model, write_samples,
};
use noisy_tree::learner::find_tree;
use noisy_tree::noise::{exact_clean_moments, noisy_moments, sample_bound};
use noisy_tree::oracle::{exact_joint, noisy_joint};
use noisy_tree::sampler::{apply_noise, sample_clean};
use noisy_tree::{
    AssumptionParams, Error, IsingModel, MomentEstimate, NoiseSpec, Result, TreeGraph,
};
use noisy_tree_cli::{epsilon_fallback, format_csv, run_experiment, ExperimentConfig, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "noisy-tree",
    version,
    about = "Learn tree Ising models from samples with unequal bit-flip noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a model and noise vector.
    Generate(GenerateArgs),
    /// Draw clean or noisy samples from a model file.
    Sample(SampleArgs),
    /// Learn a member of the equivalence class from samples.
    Learn(LearnArgs),
    /// Chow-Liu maximum-information tree from samples.
    Chowliu(ChowliuArgs),
    /// Check whether an edge list lies in the equivalence class of a model's tree.
    Score(ScoreArgs),
    /// Exact quantities of a small model, for debugging.
    Oracle(OracleArgs),
    /// Run a sweep from a config file and write CSV.
    Experiment(ExperimentArgs),
    /// Sufficient sample count for exact recovery.
    Bound(BoundArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Chain,
    Star,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config to take topology, size, weights, bias and noise ceiling from.
    #[arg(long, conflicts_with_all = ["topology", "tree"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "chain")]
    topology: TopologyArg,
    /// Edge list to use as the tree.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    n: usize,
    #[arg(long, default_value_t = 0.7)]
    w_min: f64,
    #[arg(long, default_value_t = 1.2)]
    w_max: f64,
    #[arg(long, default_value_t = 0.0)]
    bias: f64,
    /// Flip probabilities are drawn from [0, q_max].
    #[arg(long, default_value_t = 0.15)]
    q_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, short)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the noise channel even if the model file carries flip probabilities.
    #[arg(long)]
    clean: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParamArgs {
    /// Take the tightest parameters from a model file with noise.
    #[arg(long, conflicts_with_all = ["rho_min", "rho_max", "epsilon"])]
    fit: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    mu_max: f64,
    #[arg(long, requires = "rho_max")]
    rho_min: Option<f64>,
    #[arg(long, requires = "rho_min")]
    rho_max: Option<f64>,
    /// Use rho_min = epsilon and rho_max = 1 - epsilon.
    #[arg(long, conflicts_with_all = ["rho_min", "rho_max"])]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.15)]
    q_max: f64,
}

impl ParamArgs {
    fn resolve(&self) -> Result<AssumptionParams> {
        if let Some(path) = &self.fit {
            let (model, noise) = parse_model::<f64>(&read(path)?)?;
            let noise = noise.unwrap_or_else(|| NoiseSpec::zero(model.n()));
            return AssumptionParams::fitted(&model, &noise);
        }
        match (self.rho_min, self.rho_max, self.epsilon) {
            (Some(lo), Some(hi), None) => AssumptionParams::new(self.mu_max, lo, hi, self.q_max),
            (None, None, Some(e)) => epsilon_fallback(self.q_max, self.mu_max, e),
            _ => Err(Error::InvalidParameter(
                "give --fit, --rho-min with --rho-max, or --epsilon".into(),
            )),
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    samples: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChowliuArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Learned edge list.
    #[arg(long)]
    edges: PathBuf,
    /// Model file holding the true tree.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleWhat {
    /// Probability of every state.
    Joint,
    /// Means and covariance matrix.
    Moments,
    /// Equivalence class key and size.
    Class,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "moments")]
    what: OracleWhat,
    /// Ignore the model's flip probabilities.
    #[arg(long)]
    clean: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fill mean_wall_ms with measured times instead of NA.
    #[arg(long)]
    timing: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    mu_max: f64,
    #[arg(long)]
    rho_min: f64,
    #[arg(long)]
    rho_max: f64,
    #[arg(long)]
    q_max: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(args: &GenerateArgs) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (tree, w_min, w_max, bias, q_max) = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::parse(&read(path)?, path.parent())?;
            (
                cfg.topology.tree(cfg.n)?,
                cfg.w_min,
                cfg.w_max,
                cfg.bias,
                cfg.q_max,
            )
        }
        None => {
            let tree = match (&args.tree, args.topology) {
                (Some(path), _) => Topology::File(parse_edge_list(&read(path)?)?).tree(args.n)?,
                (None, TopologyArg::Chain) => TreeGraph::chain(args.n)?,
                (None, TopologyArg::Star) => TreeGraph::star(args.n, 0)?,
                (None, TopologyArg::Random) => TreeGraph::random(args.n, &mut rng)?,
            };
            (tree, args.w_min, args.w_max, args.bias, args.q_max)
        }
    };
    let n = tree.n();
    let model = random_weights(tree, w_min, w_max, bias, &mut rng)?;
    let noise = random_noise(n, 0.0, q_max, &mut rng)?;
    Ok(write_model(&model, Some(&noise)))
}

fn sample(args: &SampleArgs) -> Result<String> {
    let (model, noise) = parse_model::<f64>(&read(&args.model)?)?;
    let clean = sample_clean(&model, args.m, args.seed)?;
    let batch = match noise {
        Some(q) if !args.clean => apply_noise(&clean, &q, args.seed)?,
        _ => clean,
    };
    Ok(write_samples(&batch))
}

fn learn(args: &LearnArgs) -> Result<String> {
    let params = args.params.resolve()?;
    let batch = parse_samples(&read(&args.samples)?, true)?;
    let learned = find_tree(&empirical_moments::<f64>(&batch)?, &params)?;
    Ok(write_edge_list(&learned.tree()?))
}

fn score(args: &ScoreArgs) -> Result<String> {
    let learned = parse_edge_list(&read(&args.edges)?)?;
    let (truth, _) = parse_model::<f64>(&read(&args.truth)?)?;
    Ok(format!("{}\n", is_member(&learned, truth.tree())?))
}

fn oracle(args: &OracleArgs) -> Result<String> {
    let (model, noise): (IsingModel, _) = parse_model(&read(&args.model)?)?;
    let noise = if args.clean { None } else { noise };
    let mut out = String::new();
    match args.what {
        OracleWhat::Joint => {
            let clean = exact_joint(&model)?;
            let dist = match &noise {
                Some(q) => noisy_joint(&clean, q)?,
                None => clean,
            };
            let n = model.n();
            for (s, p) in dist.probs().iter().enumerate() {
                // bit v of the state index set means node v is +1
                let spins: Vec<&str> = (0..n)
                    .map(|v| if s >> v & 1 == 1 { "1" } else { "-1" })
                    .collect();
                writeln!(out, "{} {p}", spins.join(" ")).unwrap();
            }
        }
        OracleWhat::Moments => {
            let clean = exact_clean_moments(&model);
            let m: MomentEstimate = match &noise {
                Some(q) => noisy_moments(&clean, q)?,
                None => clean,
            };
            let fmt = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
            writeln!(out, "mean {}", fmt(&m.mean)).unwrap();
            for i in 0..m.n() {
                let row: Vec<f64> = (0..m.n()).map(|j| m.cov(i, j)).collect();
                writeln!(out, "cov {}", fmt(&row)).unwrap();
            }
        }
        OracleWhat::Class => {
            let class = build_class(model.tree())?;
            writeln!(out, "{}\nsize {}", class.key(), class.size()).unwrap();
        }
    }
    Ok(out)
}

fn experiment(args: &ExperimentArgs) -> Result<String> {
    let mut cfg = ExperimentConfig::parse(&read(&args.config)?, args.config.parent())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    if matches!(cfg.mu_max, noisy_tree_cli::MuMax::Estimate) {
        eprintln!("mu_max estimated as {}", cfg.resolve_mu_max()?);
    }
    let rows = run_experiment(&cfg)?;
    for r in rows.iter().filter(|r| r.failures > 0) {
        eprintln!(
            "{} at m = {}: {} of {} trials ended in a learner error",
            r.algorithm.name(),
            r.m,
            r.failures,
            r.trials
        );
    }
    Ok(format_csv(&cfg, &rows, args.timing))
}

fn bound(args: &BoundArgs) -> Result<String> {
    let params = AssumptionParams::new(args.mu_max, args.rho_min, args.rho_max, args.q_max)?;
    let b = sample_bound(&params, args.n, args.tau)?;
    Ok(format!(
        "t1 {}\nt2 {}\nt3 {}\ndelta {}\nm {}\n",
        b.t1, b.t2, b.t3, b.delta, b.m_required
    ))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => emit(a.out.as_deref(), &generate(a)?),
        Command::Sample(a) => emit(a.out.as_deref(), &sample(a)?),
        Command::Learn(a) => emit(a.out.as_deref(), &learn(a)?),
        Command::Chowliu(a) => {
            let batch = parse_samples(&read(&a.samples)?, true)?;
            emit(a.out.as_deref(), &write_edge_list(&chow_liu(&batch)?))
        }
        Command::Score(a) => emit(None, &score(a)?),
        Command::Oracle(a) => emit(None, &oracle(a)?),
        Command::Experiment(a) => emit(a.out.as_deref(), &experiment(a)?),
        Command::Bound(a) => emit(None, &bound(a)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::LearnerFailure(_)
                | Error::AmbiguousQuad { .. }
                | Error::DegenerateQuad { .. } => 2,
                _ => 1,
            })
        }
    }
}
