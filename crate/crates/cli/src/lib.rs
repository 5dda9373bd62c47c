//! Experiment configuration and the sweep runner behind the `noisy-tree` binary.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use noisy_tree::baseline::chow_liu;
use noisy_tree::equivalence::is_member;
use noisy_tree::estimator::empirical_moments;
use noisy_tree::generate::{random_noise, random_weights};
use noisy_tree::io::parse_edge_list;
use noisy_tree::learner::find_tree;
use noisy_tree::sampler::{apply_noise, sample_clean};
use noisy_tree::{AssumptionParams, Error, Result, SampleBatch, TreeGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CSV_HEADER: &str =
    "algorithm,topology,n,m,trials,successes,success_fraction,mean_wall_ms,seed";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    Chain,
    /// Star centred on node 0.
    Star,
    File(TreeGraph),
}

impl Topology {
    pub fn name(&self) -> &'static str {
        match self {
            Topology::Chain => "chain",
            Topology::Star => "star",
            Topology::File(_) => "file",
        }
    }

    pub fn tree(&self, n: usize) -> Result<TreeGraph> {
        match self {
            Topology::Chain => TreeGraph::chain(n),
            Topology::Star => TreeGraph::star(n, 0),
            Topology::File(t) if t.n() == n => Ok(t.clone()),
            Topology::File(t) => Err(Error::DimensionMismatch {
                expected: n,
                found: t.n(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Ours,
    ChowLiu,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ours => "ours",
            Algorithm::ChowLiu => "chowliu",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ours" => Ok(Algorithm::Ours),
            "chowliu" => Ok(Algorithm::ChowLiu),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

/// Where the learner's `μ_max` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMax {
    Value(f64),
    /// Largest absolute mean of a clean pre-sample from one model draw.
    Estimate,
}

/// Where `ρ_min` and `ρ_max` come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoBounds {
    /// `tanh` of the weight range.
    FromWeights,
    Explicit {
        rho_min: f64,
        rho_max: f64,
    },
    /// `ρ_min = ε`, `ρ_max = 1 - ε`.
    Epsilon(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub n: usize,
    pub w_min: f64,
    pub w_max: f64,
    pub bias: f64,
    pub q_max: f64,
    pub budgets: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub mu_max: MuMax,
    pub rho: RhoBounds,
    pub algorithms: Vec<Algorithm>,
    pub pre_sample: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: Topology::Chain,
            n: 15,
            w_min: 0.7,
            w_max: 1.2,
            bias: 0.0,
            q_max: 0.15,
            budgets: vec![1000],
            trials: 50,
            seed: 0,
            mu_max: MuMax::Value(0.0),
            rho: RhoBounds::FromWeights,
            algorithms: vec![Algorithm::Ours, Algorithm::ChowLiu],
            pre_sample: 200_000,
        }
    }
}

fn parse_num<F: FromStr>(key: &str, value: &str, line: usize) -> Result<F> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value {value:?} for {key}"),
    })
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Relative `tree_file` paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut topology = None;
        let mut tree_file = None;
        let (mut rho_min, mut rho_max, mut epsilon) = (None, None, None);
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("expected key = value, got {content:?}"),
                })?;
            match key {
                "topology" => topology = Some(value.to_string()),
                "tree_file" => tree_file = Some(value.to_string()),
                "n" => cfg.n = parse_num(key, value, line)?,
                "w_min" => cfg.w_min = parse_num(key, value, line)?,
                "w_max" => cfg.w_max = parse_num(key, value, line)?,
                "bias" => cfg.bias = parse_num(key, value, line)?,
                "q_max" => cfg.q_max = parse_num(key, value, line)?,
                "budgets" => {
                    cfg.budgets = value
                        .split(',')
                        .map(|v| parse_num(key, v.trim(), line))
                        .collect::<Result<_>>()?
                }
                "trials" => cfg.trials = parse_num(key, value, line)?,
                "seed" => cfg.seed = parse_num(key, value, line)?,
                "mu_max" if value == "estimate" => cfg.mu_max = MuMax::Estimate,
                "mu_max" => cfg.mu_max = MuMax::Value(parse_num(key, value, line)?),
                "rho_min" => rho_min = Some(parse_num(key, value, line)?),
                "rho_max" => rho_max = Some(parse_num(key, value, line)?),
                "epsilon" => epsilon = Some(parse_num(key, value, line)?),
                "algorithms" => {
                    cfg.algorithms = value
                        .split(',')
                        .map(|a| a.trim().parse())
                        .collect::<Result<_>>()?
                }
                "pre_sample" => cfg.pre_sample = parse_num(key, value, line)?,
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        cfg.topology = match (topology.as_deref(), tree_file) {
            (None | Some("chain"), None) => Topology::Chain,
            (Some("star"), None) => Topology::Star,
            (Some("file"), Some(path)) => {
                let path = base.map_or_else(|| Path::new(&path).to_path_buf(), |b| b.join(&path));
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::InvalidParameter(format!("cannot read {}: {e}", path.display()))
                })?;
                Topology::File(parse_edge_list(&text)?)
            }
            (t, f) => {
                return Err(Error::InvalidParameter(format!(
                    "bad topology {t:?} with tree_file {f:?}"
                )))
            }
        };
        cfg.rho = match (rho_min, rho_max, epsilon) {
            (None, None, None) => RhoBounds::FromWeights,
            (Some(rho_min), Some(rho_max), None) => RhoBounds::Explicit { rho_min, rho_max },
            (None, None, Some(e)) => RhoBounds::Epsilon(e),
            _ => {
                return Err(Error::InvalidParameter(
                    "give both rho_min and rho_max, or epsilon alone".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 2 {
            return bad(format!("n = {} is too small", self.n));
        }
        if let Topology::File(t) = &self.topology {
            if t.n() != self.n {
                return bad(format!("tree file has {} nodes, n = {}", t.n(), self.n));
            }
        }
        if !(0.0 < self.w_min && self.w_min <= self.w_max && self.w_max.is_finite()) {
            return bad(format!(
                "weight range [{}, {}] is invalid",
                self.w_min, self.w_max
            ));
        }
        if !(0.0..0.5).contains(&self.q_max) {
            return bad(format!("q_max = {} not in [0, 0.5)", self.q_max));
        }
        if !self.bias.is_finite() {
            return bad("bias must be finite".into());
        }
        if self.budgets.is_empty()
            || self.budgets.windows(2).any(|w| w[0] >= w[1])
            || self.budgets[0] == 0
        {
            return bad(format!(
                "budgets {:?} must be positive and strictly ascending",
                self.budgets
            ));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        if let RhoBounds::Epsilon(e) = self.rho {
            epsilon_fallback(self.q_max.max(1e-12), 0.0, e)?;
        }
        Ok(())
    }

    /// `μ_max` for the learner, estimating it when configured to.
    pub fn resolve_mu_max(&self) -> Result<f64> {
        match self.mu_max {
            MuMax::Value(v) => Ok(v),
            MuMax::Estimate => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, u64::MAX, u64::MAX));
                let model = random_weights(
                    self.topology.tree(self.n)?,
                    self.w_min,
                    self.w_max,
                    self.bias,
                    &mut rng,
                )?;
                let batch =
                    sample_clean(&model, self.pre_sample, derive_seed(self.seed, u64::MAX, 0))?;
                let moments = empirical_moments::<f64>(&batch)?;
                Ok(moments.mean.iter().fold(0.0f64, |acc, m| acc.max(m.abs())))
            }
        }
    }

    /// Assumption parameters handed to the learner in every trial.
    pub fn learner_params(&self, mu_max: f64) -> Result<AssumptionParams> {
        let q_max = self.q_max;
        match self.rho {
            RhoBounds::FromWeights => {
                AssumptionParams::new(mu_max, self.w_min.tanh(), self.w_max.tanh(), q_max)
            }
            RhoBounds::Explicit { rho_min, rho_max } => {
                AssumptionParams::new(mu_max, rho_min, rho_max, q_max)
            }
            RhoBounds::Epsilon(e) => epsilon_fallback(q_max, mu_max, e),
        }
    }
}

/// Parameters for running without knowledge of the correlation range: `ρ_min = ε`, `ρ_max = 1 - ε`.
pub fn epsilon_fallback(q_max: f64, mu_max: f64, epsilon: f64) -> Result<AssumptionParams> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} not in (0, 0.5)"
        )));
    }
    AssumptionParams::new(mu_max, epsilon, 1.0 - epsilon, q_max)
}

/// Seed for one (budget, trial) cell, decorrelated from the master seed.
pub fn derive_seed(master: u64, budget: u64, trial: u64) -> u64 {
    let mut z = master
        ^ budget.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ trial.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub m: usize,
    pub algorithm: Algorithm,
    pub success: bool,
    pub wall_ms: f64,
    /// The learner returned an error rather than a tree.
    pub failed: bool,
}

/// One aggregated CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    pub mean_wall_ms: f64,
}

impl SummaryRow {
    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Draws a model and noise, samples, and runs every configured algorithm once.
pub fn run_trial(
    cfg: &ExperimentConfig,
    params: &AssumptionParams,
    budget_index: usize,
    trial: usize,
) -> Result<Vec<TrialResult>> {
    let m = cfg.budgets[budget_index];
    let seed = derive_seed(cfg.seed, budget_index as u64, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_weights(
        cfg.topology.tree(cfg.n)?,
        cfg.w_min,
        cfg.w_max,
        cfg.bias,
        &mut rng,
    )?;
    let noise = random_noise(cfg.n, 0.0, cfg.q_max, &mut rng)?;
    let clean = sample_clean(&truth, m, seed)?;
    let noisy = apply_noise(&clean, &noise, seed)?;
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let start = Instant::now();
        let learned = learn_with(algorithm, &noisy, params);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let (success, failed) = match learned {
            Ok(tree) => (is_member(&tree, truth.tree())?, false),
            Err(_) => (false, true),
        };
        out.push(TrialResult {
            trial,
            m,
            algorithm,
            success,
            wall_ms,
            failed,
        });
    }
    Ok(out)
}

fn learn_with(
    algorithm: Algorithm,
    batch: &SampleBatch,
    params: &AssumptionParams,
) -> Result<TreeGraph> {
    match algorithm {
        Algorithm::Ours => find_tree(&empirical_moments::<f64>(batch)?, params)?.tree(),
        Algorithm::ChowLiu => chow_liu(batch),
    }
}

/// Runs the full sweep. Trials run in parallel; rows come back ordered by budget, then by the
/// configured algorithm order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    let params = cfg.learner_params(cfg.resolve_mu_max()?)?;
    let mut rows = Vec::with_capacity(cfg.budgets.len() * cfg.algorithms.len());
    for (b, &m) in cfg.budgets.iter().enumerate() {
        let results: Vec<Vec<TrialResult>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &params, b, t))
            .collect::<Result<_>>()?;
        for (a, &algorithm) in cfg.algorithms.iter().enumerate() {
            let column = results.iter().map(|r| &r[a]);
            let successes = column.clone().filter(|r| r.success).count();
            let failures = column.clone().filter(|r| r.failed).count();
            let mean_wall_ms = column.map(|r| r.wall_ms).sum::<f64>() / cfg.trials as f64;
            rows.push(SummaryRow {
                algorithm,
                m,
                trials: cfg.trials,
                successes,
                failures,
                mean_wall_ms,
            });
        }
    }
    Ok(rows)
}

/// CSV text for `rows`; without `timing` the wall-time column reads `NA` so output is reproducible.
pub fn format_csv(cfg: &ExperimentConfig, rows: &[SummaryRow], timing: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let wall = if timing {
            format!("{:.3}", r.mean_wall_ms)
        } else {
            "NA".to_string()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.algorithm.name(),
            cfg.topology.name(),
            cfg.n,
            r.m,
            r.trials,
            r.successes,
            r.success_fraction(),
            wall,
            cfg.seed
        )
        .unwrap();
    }
    out
}
