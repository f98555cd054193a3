//! Experiment runner: seeded multi-run simulations, per-checkpoint
//! regret accounting against the exact optimal gain, aggregation, and
//! CSV/JSON emission.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Deserialize;

use crate::agents::{Agent, FixedPolicyAgent, PsrlAgent, RandomAgent, UcrlAgent, UcrlVariant};
use crate::envs::{garnet, grid_room, riverswim, EnvInstance, GarnetSpec, GridVariant};
use crate::mdp::{regret_bound_report, relative_value_iteration, MdpError, MdpModel};

/// Gain tolerance for the regret reference; keeps the accounting error
/// below 0.1 over a 10^7-step horizon.
const GSTAR_EPS: f64 = 1e-8;
/// Number of geometrically spaced checkpoints (plus the horizon).
const N_CHECKPOINTS: u64 = 200;
/// Worker-count override.
const JOBS_ENV_VAR: &str = "AVGRL_JOBS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] MdpError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Environment description as it appears in a config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EnvSpec {
    Riverswim {
        n_states: usize,
    },
    Grid {
        variant: GridVariant,
    },
    Garnet {
        n_states: usize,
        n_actions: usize,
        branching: usize,
        reward_density: f64,
        min_mass: f64,
        min_reward: f64,
        seed: u64,
    },
}

impl EnvSpec {
    /// Instantiates the environment with its default generator seed;
    /// runs reseed the returned instance.
    pub fn build(&self) -> EnvInstance {
        match self {
            EnvSpec::Riverswim { n_states } => riverswim(*n_states),
            EnvSpec::Grid { variant } => grid_room(*variant),
            EnvSpec::Garnet {
                n_states,
                n_actions,
                branching,
                reward_density,
                min_mass,
                min_reward,
                seed,
            } => garnet(&GarnetSpec {
                n_states: *n_states,
                n_actions: *n_actions,
                branching: *branching,
                reward_density: *reward_density,
                min_mass: *min_mass,
                min_reward: *min_reward,
                seed: *seed,
            }),
        }
    }
}

/// One agent entry of a config file.
#[derive(Debug, Clone, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    0.05
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvSpec,
    pub agents: Vec<AgentSpec>,
    pub horizon: u64,
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub jobs: Option<usize>,
}

const AGENT_NAMES: &[&str] = &["ucrl3", "ucrl2", "ucrl2b", "psrl", "random", "optimal"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizon < 1 {
            return Err(HarnessError::Config("horizon must be at least 1".into()));
        }
        if self.runs < 1 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        if self.agents.is_empty() {
            return Err(HarnessError::Config("at least one agent required".into()));
        }
        for a in &self.agents {
            if !AGENT_NAMES.contains(&a.name.as_str()) {
                return Err(HarnessError::Config(format!(
                    "unknown agent '{}'; known: {}",
                    a.name,
                    AGENT_NAMES.join(", ")
                )));
            }
            if !(a.delta > 0.0 && a.delta < 1.0) {
                return Err(HarnessError::Config(format!(
                    "delta for '{}' must lie in (0, 1)",
                    a.name
                )));
            }
        }
        let mut names: Vec<&str> = self.agents.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.agents.len() {
            return Err(HarnessError::Config("duplicate agent names".into()));
        }
        Ok(())
    }
}

/// Geometrically spaced time indices in [1, horizon], deduplicated and
/// always ending at the horizon.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let hf = horizon as f64;
    let mut v: Vec<u64> = (1..=N_CHECKPOINTS)
        .map(|j| hf.powf(j as f64 / N_CHECKPOINTS as f64).round() as u64)
        .map(|t| t.clamp(1, horizon))
        .collect();
    v.push(horizon);
    v.sort_unstable();
    v.dedup();
    v
}

fn build_agent(
    spec: &AgentSpec,
    model: &MdpModel<f64>,
    seed: u64,
) -> Result<Box<dyn Agent>, HarnessError> {
    let ns = model.n_states();
    let na = model.n_actions();
    Ok(match spec.name.as_str() {
        "ucrl3" => Box::new(UcrlAgent::new(UcrlVariant::Ucrl3, ns, na, spec.delta, seed)),
        "ucrl2" => Box::new(UcrlAgent::new(UcrlVariant::Ucrl2, ns, na, spec.delta, seed)),
        "ucrl2b" => Box::new(UcrlAgent::new(UcrlVariant::Ucrl2B, ns, na, spec.delta, seed)),
        "psrl" => Box::new(PsrlAgent::new(ns, na, seed)),
        "random" => Box::new(RandomAgent::new(na, seed)),
        "optimal" => {
            let (_, policy) = relative_value_iteration(model, GSTAR_EPS)?;
            Box::new(FixedPolicyAgent::new("optimal", policy))
        }
        other => return Err(HarnessError::Config(format!("unknown agent '{other}'"))),
    })
}

/// Cumulative regret of one seeded run at each checkpoint.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub agent: String,
    pub run_index: u64,
    pub seed: u64,
    pub cumulative_regret: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AgentAggregate {
    pub name: String,
    pub mean: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub checkpoints: Vec<u64>,
    pub g_star: f64,
    pub agents: Vec<AgentAggregate>,
    pub traces: Vec<RunTrace>,
}

fn simulate(
    base_env: &EnvInstance,
    agent_spec: &AgentSpec,
    horizon: u64,
    cps: &[u64],
    g_star: f64,
    env_seed: u64,
    agent_seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    let mut env = base_env.clone();
    env.reseed(env_seed);
    let mut agent = build_agent(agent_spec, &env.model, agent_seed)?;
    let mut s = env.initial_state;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(cps.len());
    let mut ci = 0;
    for t in 1..=horizon {
        let a = agent.act(s);
        let (s_next, r) = env.step(s, a);
        agent.observe(s, a, r, s_next);
        total += r;
        s = s_next;
        while ci < cps.len() && cps[ci] == t {
            out.push(t as f64 * g_star - total);
            ci += 1;
        }
    }
    Ok(out)
}

/// Nearest-rank quantile of an unsorted sample (1-based ceil rank).
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn resolve_jobs(cfg: &ExperimentConfig) -> usize {
    if let Ok(v) = std::env::var(JOBS_ENV_VAR) {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    cfg.jobs.unwrap_or(0) // 0 lets rayon pick the default
}

/// Runs the full experiment and writes `runs.csv` and `aggregate.csv`
/// under the configured output directory. Run `i` draws environment
/// randomness from `seed + i` and agent randomness from `seed + i + 2^32`;
/// results are independent of the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult, HarnessError> {
    cfg.validate()?;
    let base_env = cfg.environment.build();
    let (gb, _) = relative_value_iteration(&base_env.model, GSTAR_EPS)?;
    let g_star = gb.gain;
    let cps = checkpoints(cfg.horizon);

    let mut items = Vec::new();
    for ai in 0..cfg.agents.len() {
        for run in 0..cfg.runs {
            items.push((ai, run));
        }
    }
    let jobs = resolve_jobs(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let results: Vec<Result<Vec<f64>, HarnessError>> = pool.install(|| {
        items
            .par_iter()
            .map(|&(ai, run)| {
                simulate(
                    &base_env,
                    &cfg.agents[ai],
                    cfg.horizon,
                    &cps,
                    g_star,
                    cfg.seed.wrapping_add(run),
                    cfg.seed.wrapping_add(run).wrapping_add(1 << 32),
                )
            })
            .collect()
    });

    let mut traces = Vec::with_capacity(items.len());
    for (&(ai, run), res) in items.iter().zip(results) {
        traces.push(RunTrace {
            agent: cfg.agents[ai].name.clone(),
            run_index: run,
            seed: cfg.seed.wrapping_add(run),
            cumulative_regret: res?,
        });
    }

    let mut agents = Vec::with_capacity(cfg.agents.len());
    for spec in &cfg.agents {
        let rows: Vec<&RunTrace> = traces.iter().filter(|t| t.agent == spec.name).collect();
        let mut mean = Vec::with_capacity(cps.len());
        let mut q25 = Vec::with_capacity(cps.len());
        let mut q75 = Vec::with_capacity(cps.len());
        for (k, _) in cps.iter().enumerate() {
            let mut vals: Vec<f64> = rows.iter().map(|t| t.cumulative_regret[k]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            mean.push(vals.iter().sum::<f64>() / vals.len() as f64);
            let lo = nearest_rank(&vals, 0.25);
            let hi = nearest_rank(&vals, 0.75);
            assert!(lo <= hi);
            q25.push(lo);
            q75.push(hi);
        }
        agents.push(AgentAggregate { name: spec.name.clone(), mean, q25, q75 });
    }

    let result = AggregateResult { checkpoints: cps, g_star, agents, traces };
    write_outputs(cfg, &result)?;
    Ok(result)
}

fn write_outputs(cfg: &ExperimentConfig, result: &AggregateResult) -> Result<(), HarnessError> {
    fs::create_dir_all(&cfg.out)?;
    let mut runs = csv::Writer::from_path(cfg.out.join("runs.csv"))?;
    runs.write_record(["agent", "run", "t", "regret"])?;
    for tr in &result.traces {
        for (t, r) in result.checkpoints.iter().zip(&tr.cumulative_regret) {
            runs.write_record([
                tr.agent.as_str(),
                &tr.run_index.to_string(),
                &t.to_string(),
                &format!("{r:.9}"),
            ])?;
        }
    }
    runs.flush()?;

    let mut agg = csv::Writer::from_path(cfg.out.join("aggregate.csv"))?;
    agg.write_record(["agent", "t", "mean", "q25", "q75"])?;
    for a in &result.agents {
        for (k, t) in result.checkpoints.iter().enumerate() {
            agg.write_record([
                a.name.as_str(),
                &t.to_string(),
                &format!("{:.9}", a.mean[k]),
                &format!("{:.9}", a.q25[k]),
                &format!("{:.9}", a.q75[k]),
            ])?;
        }
    }
    agg.flush()?;
    Ok(())
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => HarnessError::Io(io),
            other => HarnessError::Config(format!("csv error: {other:?}")),
        }
    }
}

/// Diagnostics report for an environment: diameter, local diameters,
/// Gini/effective-support/support-size matrices, the comparative regret
/// leading terms, and the leading constant. Returns pretty JSON.
pub fn report_metrics(env: &EnvSpec, horizon: u64, delta: f64) -> Result<String, HarnessError> {
    let instance = env.build();
    let report = regret_bound_report(&instance.model, horizon, delta)?;
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}
