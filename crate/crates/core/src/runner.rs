//! Experiment driver: algorithm specs, seed-parallel sweeps, competitive-ratio
//! reports, the approximate-ROBD bound audit, and CSV/JSON output.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acord::{cr_acord, cr_star, guarantee_additive, lambda1_of_mu, run_acord_with, AcordOptions, KtPolicy};
use crate::baselines::{run_consensus, run_ftm, run_local, run_local_robd, run_lpc_with, LpcConfig};
use crate::costs::{coupled_objective, CostReport, Trajectory};
use crate::graph::diameter;
use crate::instance::{
    generate_experiment_instance, generate_lower_bound_instance, generate_naive_failure_instance, ExperimentParams,
    Instance, LowerBoundVariant, NaiveFailureVariant,
};
use crate::oracles::{offline_opt, robd_round_exact, SolveConfig};
use crate::simnet::{summarize, CommLog, LogMode};
use crate::{Result, SocoError};

/// LPC communication radius; `All` expands to every radius up to the diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Radius {
    Fixed(usize),
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgoSpec {
    Acord(KtPolicy),
    /// ACORD with the bounded policy derived from the instance via
    /// [`KtPolicy::bounded_from_instance`].
    AcordBoundedAuto,
    Lpc { r: Radius, k: usize },
    Ftm,
    Local,
    LocalRobd,
    Consensus,
    Opt,
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoSpec::Acord(p) => write!(f, "acord:{p}"),
            AlgoSpec::AcordBoundedAuto => write!(f, "acord:bounded"),
            AlgoSpec::Lpc { r: Radius::Fixed(r), k } => write!(f, "lpc:{r}:{k}"),
            AlgoSpec::Lpc { r: Radius::All, k } => write!(f, "lpc:all:{k}"),
            AlgoSpec::Ftm => write!(f, "ftm"),
            AlgoSpec::Local => write!(f, "local"),
            AlgoSpec::LocalRobd => write!(f, "local-robd"),
            AlgoSpec::Consensus => write!(f, "consensus"),
            AlgoSpec::Opt => write!(f, "opt"),
        }
    }
}

impl FromStr for AlgoSpec {
    type Err = SocoError;

    /// `acord[:<policy>]` (default `crawl`; `bounded` alone derives the
    /// constants from the instance), `lpc:<r|all>:<k>`, `ftm`, `local`,
    /// `local-robd`, `consensus`, `opt`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("acord") {
            return match rest.strip_prefix(':') {
                Some(p) => acord_spec(p),
                None if rest.is_empty() => Ok(AlgoSpec::Acord(KtPolicy::UnboundedCrawl)),
                None => Err(SocoError::Parse(format!("unknown algorithm '{s}'"))),
            };
        }
        let parts: Vec<&str> = s.split(':').collect();
        let int = |p: &str| p.parse::<usize>().map_err(|_| SocoError::Parse(format!("bad integer '{p}' in '{s}'")));
        match parts.as_slice() {
            ["lpc", r, k] => {
                let r = if *r == "all" { Radius::All } else { Radius::Fixed(int(r)?) };
                let k = int(k)?;
                if k == 0 || r == Radius::Fixed(0) {
                    return Err(SocoError::InvalidParameter(format!("LPC needs r, k >= 1 in '{s}'")));
                }
                Ok(AlgoSpec::Lpc { r, k })
            }
            ["lpc", r] => AlgoSpec::from_str(&format!("lpc:{r}:1")),
            ["ftm"] => Ok(AlgoSpec::Ftm),
            ["local"] => Ok(AlgoSpec::Local),
            ["local-robd"] | ["local_robd"] => Ok(AlgoSpec::LocalRobd),
            ["consensus"] => Ok(AlgoSpec::Consensus),
            ["opt"] => Ok(AlgoSpec::Opt),
            _ => Err(SocoError::Parse(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// ACORD spec for a K policy string, accepting bare `bounded`.
pub fn acord_spec(policy: &str) -> Result<AlgoSpec> {
    if policy == "bounded" {
        Ok(AlgoSpec::AcordBoundedAuto)
    } else {
        Ok(AlgoSpec::Acord(policy.parse()?))
    }
}

impl Serialize for AlgoSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AlgoSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl AlgoSpec {
    /// ACORD with a K policy covered by the competitive-ratio guarantee.
    pub fn is_guaranteed(&self) -> bool {
        matches!(self, AlgoSpec::AcordBoundedAuto | AlgoSpec::Acord(KtPolicy::Bounded { .. } | KtPolicy::UnboundedCrawl))
    }
}

/// Expands `lpc:all:k` into one spec per radius `1..=diameter` of `inst`'s graph.
pub fn expand_algos(specs: &[AlgoSpec], inst: &Instance) -> Vec<AlgoSpec> {
    let mut out = Vec::new();
    for spec in specs {
        match *spec {
            AlgoSpec::Lpc { r: Radius::All, k } => {
                let max_r = diameter(&inst.graphs[0]).max_component().max(1);
                out.extend((1..=max_r).map(|r| AlgoSpec::Lpc { r: Radius::Fixed(r), k }));
            }
            other => out.push(other),
        }
    }
    out
}

/// Trajectory, cost and (when the algorithm communicates) ledger of one run.
#[derive(Debug, Clone)]
pub struct AlgoOutcome {
    pub trajectory: Trajectory,
    pub cost: CostReport,
    pub log: Option<CommLog>,
    pub seconds: f64,
}

pub fn run_algorithm(inst: &Instance, spec: &AlgoSpec, mode: LogMode) -> Result<AlgoOutcome> {
    let started = Instant::now();
    let (trajectory, cost, log) = match *spec {
        AlgoSpec::Acord(policy) => {
            let run = run_acord_with(inst, &policy, AcordOptions { log_mode: mode })?;
            (run.trajectory, run.cost, Some(run.log))
        }
        AlgoSpec::AcordBoundedAuto => {
            let policy = KtPolicy::bounded_from_instance(inst)?;
            let run = run_acord_with(inst, &policy, AcordOptions { log_mode: mode })?;
            (run.trajectory, run.cost, Some(run.log))
        }
        AlgoSpec::Lpc { r: Radius::Fixed(r), k } => {
            let (t, c, l) = run_lpc_with(inst, &LpcConfig::new(r, k)?, mode)?;
            (t, c, Some(l))
        }
        AlgoSpec::Lpc { r: Radius::All, .. } => {
            return Err(SocoError::InvalidParameter("expand lpc:all before running".into()));
        }
        AlgoSpec::Ftm => pair(run_ftm(inst)?),
        AlgoSpec::Local => pair(run_local(inst)?),
        AlgoSpec::LocalRobd => pair(run_local_robd(inst)?),
        AlgoSpec::Consensus => pair(run_consensus(inst)?),
        AlgoSpec::Opt => pair(offline_opt(inst, &SolveConfig::default())?),
    };
    Ok(AlgoOutcome { trajectory, cost, log, seconds: started.elapsed().as_secs_f64() })
}

fn pair((t, c): (Trajectory, CostReport)) -> (Trajectory, CostReport, Option<CommLog>) {
    (t, c, None)
}

/// Competitive-ratio record of one algorithm against the offline optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CRRecord {
    pub algo: String,
    pub cost: f64,
    pub opt_cost: f64,
    /// `cost / opt_cost`; infinite when OPT is 0 and the cost is not.
    pub ratio: f64,
    /// `CR_ACORD · opt_cost + (1 + βm²/l)/4T`.
    pub bound: f64,
    /// `bound − cost`.
    pub slack: f64,
    /// Set when a guaranteed ACORD row (see [`AlgoSpec::is_guaranteed`])
    /// costs more than the bound.
    pub violation: bool,
}

/// Right-hand side of the ACORD guarantee for an instance with offline cost `opt`.
pub fn acord_bound(inst: &Instance, opt: f64) -> Result<f64> {
    let crs = cr_star(&inst.mus())?;
    Ok(cr_acord(crs, inst.horizon) * opt + guarantee_additive(inst.beta, inst.m, inst.l, inst.horizon))
}

pub fn cr_report(inst: &Instance, costs: &[(String, CostReport)], opt: &CostReport) -> Result<Vec<CRRecord>> {
    let bound = acord_bound(inst, opt.total)?;
    Ok(costs
        .iter()
        .map(|(algo, rep)| {
            let ratio = if opt.total > 0.0 {
                rep.total / opt.total
            } else if rep.total > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            let slack = bound - rep.total;
            CRRecord {
                algo: algo.clone(),
                cost: rep.total,
                opt_cost: opt.total,
                ratio,
                bound,
                slack,
                violation: slack < 0.0 && algo.parse::<AlgoSpec>().is_ok_and(|a| a.is_guaranteed()),
            }
        })
        .collect())
}

/// Bound implied by per-round approximation errors of a ROBD step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxBound {
    pub ratio: f64,
    pub additive_per_round: f64,
    /// The error terms are too large for the bound to say anything.
    pub vacuous: bool,
}

/// Single-agent form with `CR_ROBD = max(1/λ, 1 + λ/μ)` and `c = √(μ+λ)/λ`:
/// ratio `(CR_ROBD + 2ε₂c)/(1 − 2ε₂c)`, additive `(ε₂c/2 + ε₁/λ)/(1 − 2ε₂c)`.
pub fn approx_cr_bound(eps1: f64, eps2: f64, mu: f64, lambda1: f64) -> Result<ApproxBound> {
    lambda1_of_mu(mu)?;
    if !(lambda1 > 0.0) {
        return Err(SocoError::InvalidParameter(format!("lambda1 must be > 0, got {lambda1}")));
    }
    let cr_robd = (1.0 / lambda1).max(1.0 + lambda1 / mu);
    Ok(approx_bound_from(eps1, eps2, cr_robd, (mu + lambda1).sqrt(), lambda1))
}

/// Multi-agent form: `CR_*`, `√max(μᵢ+λᵢ)` and `min λᵢ` replace the
/// single-agent constants.
pub fn approx_cr_bound_multi(eps1: f64, eps2: f64, mus: &[f64], lambdas: &[f64]) -> Result<ApproxBound> {
    let crs = cr_star(mus)?;
    let root = mus.iter().zip(lambdas).map(|(m, l)| m + l).fold(0.0, f64::max).sqrt();
    let min_lambda = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(approx_bound_from(eps1, eps2, crs, root, min_lambda))
}

fn approx_bound_from(eps1: f64, eps2: f64, cr: f64, root: f64, lambda: f64) -> ApproxBound {
    let c = 2.0 * eps2 * root / lambda;
    let den = 1.0 - c;
    if !(den > 0.0) {
        return ApproxBound { ratio: f64::INFINITY, additive_per_round: f64::INFINITY, vacuous: true };
    }
    ApproxBound {
        ratio: (cr + c) / den,
        additive_per_round: (eps2 * root / (2.0 * lambda) + eps1 / lambda) / den,
        vacuous: false,
    }
}

/// Per-round errors of `traj` against the exact ROBD step taken from the
/// trajectory's own previous actions: `ε₁ = F_t(x_t) − F_t(x̃_t)` on the
/// coupled per-round objective and `ε₂ = ‖x_t − x̃_t‖` over all agents.
pub fn round_errors(inst: &Instance, traj: &Trajectory, cfg: &SolveConfig) -> Result<Vec<(f64, f64)>> {
    let lambdas = inst.lambdas();
    (0..inst.horizon)
        .map(|t| {
            let prev = traj.prev(t);
            let exact = robd_round_exact(inst, t, prev, cfg)?;
            let f_alg = coupled_objective(inst, t, &traj.x[t], prev, &lambdas);
            let f_opt = coupled_objective(inst, t, &exact.x, prev, &lambdas);
            let e2 = traj.x[t].iter().zip(&exact.x).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt();
            Ok(((f_alg - f_opt).max(0.0), e2))
        })
        .collect()
}

/// Generator section of an [`ExperimentConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    Experiment {
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "T")]
        t: usize,
        #[serde(rename = "D")]
        degree: usize,
        beta: f64,
        #[serde(default = "default_floor")]
        alpha_floor: f64,
    },
    LowerBound {
        #[serde(rename = "N")]
        n: usize,
        #[serde(rename = "T")]
        t: usize,
        mu: f64,
        mu_prime: f64,
        #[serde(default)]
        heterogeneous: bool,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    Naive {
        variant: String,
        beta: f64,
        #[serde(rename = "T")]
        t: usize,
        #[serde(default = "default_curvature")]
        curvature: f64,
        #[serde(default = "default_separation")]
        separation: f64,
    },
    File {
        path: String,
    },
}

fn default_floor() -> f64 {
    0.1
}
fn default_beta() -> f64 {
    1.0
}
fn default_curvature() -> f64 {
    1e6
}
fn default_separation() -> f64 {
    20.0
}

impl InstanceSpec {
    pub fn build(&self, seed: u64) -> Result<Instance> {
        match self {
            InstanceSpec::Experiment { n, t, degree, beta, alpha_floor } => generate_experiment_instance(
                &ExperimentParams { agents: *n, horizon: *t, degree: *degree, beta: *beta, seed, alpha_floor: *alpha_floor },
            ),
            InstanceSpec::LowerBound { n, t, mu, mu_prime, heterogeneous, beta } => {
                let variant = if *heterogeneous { LowerBoundVariant::Heterogeneous } else { LowerBoundVariant::Symmetric };
                generate_lower_bound_instance(*n, *t, *mu, *mu_prime, variant, *beta)
            }
            InstanceSpec::Naive { variant, beta, t, curvature, separation } => {
                let v = match variant.as_str() {
                    "local_robd" | "local-robd" => NaiveFailureVariant::LocalRobd,
                    "consensus" => NaiveFailureVariant::Consensus { curvature: *curvature, separation: *separation },
                    other => return Err(SocoError::Parse(format!("unknown naive variant '{other}'"))),
                };
                generate_naive_failure_instance(v, *beta, *t)
            }
            InstanceSpec::File { path } => Instance::from_json(&fs::read_to_string(path)?),
        }
    }

    /// Copy with the swept parameter set to `value`.
    fn with_param(&self, param: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        let as_int = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(SocoError::InvalidParameter(format!("{param} must be a positive integer, got {value}")))
            }
        };
        match (&mut out, param) {
            (InstanceSpec::Experiment { beta, .. }, "beta")
            | (InstanceSpec::LowerBound { beta, .. }, "beta")
            | (InstanceSpec::Naive { beta, .. }, "beta") => *beta = value,
            (InstanceSpec::Experiment { degree, .. }, "D") => *degree = as_int()?,
            (InstanceSpec::Experiment { n, .. }, "N") | (InstanceSpec::LowerBound { n, .. }, "N") => *n = as_int()?,
            (InstanceSpec::Experiment { t, .. }, "T")
            | (InstanceSpec::LowerBound { t, .. }, "T")
            | (InstanceSpec::Naive { t, .. }, "T") => *t = as_int()?,
            (_, "r") | (_, "K") => {}
            _ => return Err(SocoError::InvalidParameter(format!("cannot sweep '{param}' for this generator"))),
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// `beta`, `D`, `N`, `T`, `r` (LPC radius) or `K` (fixed ACORD iterations).
    pub param: String,
    pub values: Vec<f64>,
    /// Optional ACORD K policy per value, e.g. `["fixed:6", "fixed:12"]`.
    #[serde(default)]
    pub kt: Option<Vec<String>>,
}

/// Sweep description. Example:
///
/// ```json
/// { "instance": {"kind": "experiment", "N": 20, "T": 20, "D": 2, "beta": 50},
///   "seeds": [1, 2, 3],
///   "algorithms": ["acord:fixed:12", "lpc:all:1", "ftm"],
///   "sweep": {"param": "beta", "values": [10, 50, 250], "kt": ["fixed:6", "fixed:12", "fixed:15"]},
///   "repetitions": 1, "opt": true }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgoSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Compute the offline optimum for ratio columns.
    #[serde(default = "yes")]
    pub opt: bool,
    #[serde(default)]
    pub outputs: Option<String>,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(SocoError::InvalidParameter("repetitions must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(SocoError::Empty("seeds"));
        }
        if self.algorithms.is_empty() {
            return Err(SocoError::Empty("algorithms"));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(SocoError::Empty("sweep values"));
            }
            if let Some(kt) = &s.kt {
                if kt.len() != s.values.len() {
                    return Err(SocoError::InvalidParameter("sweep kt list must match values".into()));
                }
            }
        }
        Ok(())
    }
}

/// One (sweep value, seed, algorithm) result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub seed: u64,
    pub algo: String,
    pub hitting: f64,
    pub switching: f64,
    pub dissimilarity: f64,
    pub total: f64,
    pub opt_total: f64,
    pub ratio: f64,
    /// ACORD guarantee evaluated at `opt_total`.
    pub bound: f64,
    pub messages: usize,
    pub tau_per_agent: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub x: f64,
    pub algo: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub aggregate: Vec<AggregateRow>,
}

impl SweepReport {
    /// Rows of guaranteed ACORD runs whose total exceeds the bound.
    pub fn violations(&self) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.total > r.bound && r.algo.parse::<AlgoSpec>().is_ok_and(|a| a.is_guaranteed()))
            .collect()
    }

    /// Mean total cost of `algo` at sweep value `x`.
    pub fn mean(&self, x: f64, algo: &str) -> Option<f64> {
        self.aggregate.iter().find(|a| a.x == x && a.algo == algo).map(|a| a.mean)
    }
}

/// Runs every (value, seed, algorithm) combination. Seeds run in parallel; a
/// failing algorithm yields a row with `error` set instead of aborting.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let points: Vec<(f64, InstanceSpec, Vec<AlgoSpec>)> = match &cfg.sweep {
        None => vec![(0.0, cfg.instance.clone(), cfg.algorithms.clone())],
        Some(s) => s
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                let spec = cfg.instance.with_param(&s.param, v)?;
                let override_kt = match &s.kt {
                    Some(list) => Some(acord_spec(&list[idx])?),
                    None => None,
                };
                let algos = cfg
                    .algorithms
                    .iter()
                    .map(|a| match (*a, s.param.as_str()) {
                        (AlgoSpec::Acord(_) | AlgoSpec::AcordBoundedAuto, "K") => {
                            if v < 1.0 || v.fract() != 0.0 {
                                return Err(SocoError::InvalidParameter(format!("K must be a positive integer, got {v}")));
                            }
                            Ok(AlgoSpec::Acord(KtPolicy::Fixed(v as usize)))
                        }
                        (AlgoSpec::Acord(_) | AlgoSpec::AcordBoundedAuto, _) if override_kt.is_some() => {
                            Ok(override_kt.expect("checked"))
                        }
                        (AlgoSpec::Lpc { k, .. }, "r") => {
                            if v < 1.0 || v.fract() != 0.0 {
                                return Err(SocoError::InvalidParameter(format!("r must be a positive integer, got {v}")));
                            }
                            Ok(AlgoSpec::Lpc { r: Radius::Fixed(v as usize), k })
                        }
                        (other, _) => Ok(other),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((v, spec, algos))
            })
            .collect::<Result<_>>()?,
    };
    let tasks: Vec<(usize, u64)> = (0..points.len()).flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s))).collect();
    let chunks: Vec<Vec<SweepRow>> = tasks
        .par_iter()
        .map(|&(p, seed)| {
            let (x, spec, algos) = &points[p];
            run_point(*x, spec, algos, seed, cfg.repetitions, cfg.opt)
        })
        .collect();
    let rows: Vec<SweepRow> = chunks.into_iter().flatten().collect();
    let aggregate = aggregate(&rows);
    Ok(SweepReport { rows, aggregate })
}

fn run_point(x: f64, spec: &InstanceSpec, algos: &[AlgoSpec], seed: u64, reps: usize, want_opt: bool) -> Vec<SweepRow> {
    let failed = |algo: String, e: &SocoError| SweepRow {
        x,
        seed,
        algo,
        hitting: f64::NAN,
        switching: f64::NAN,
        dissimilarity: f64::NAN,
        total: f64::NAN,
        opt_total: f64::NAN,
        ratio: f64::NAN,
        bound: f64::NAN,
        messages: 0,
        tau_per_agent: f64::NAN,
        error: e.to_string().replace([',', '\n'], ";"),
    };
    let inst = match spec.build(seed) {
        Ok(i) => i,
        Err(e) => return algos.iter().map(|a| failed(a.to_string(), &e)).collect(),
    };
    let opt_total = if want_opt {
        offline_opt(&inst, &SolveConfig::default()).map(|(_, c)| c.total).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let bound = acord_bound(&inst, opt_total).unwrap_or(f64::NAN);
    let mut rows = Vec::new();
    for algo in expand_algos(algos, &inst) {
        let label = algo.to_string();
        let mut seconds = 0.0;
        let mut last = None;
        for _ in 0..reps {
            match run_algorithm(&inst, &algo, LogMode::Counting) {
                Ok(out) => {
                    seconds += out.seconds;
                    last = Some(Ok(out));
                }
                Err(e) => {
                    last = Some(Err(e));
                    break;
                }
            }
        }
        match last.expect("at least one repetition") {
            Ok(out) => rows.push(SweepRow {
                x,
                seed,
                algo: label,
                hitting: out.cost.hitting,
                switching: out.cost.switching,
                dissimilarity: out.cost.dissimilarity,
                total: out.cost.total,
                opt_total,
                ratio: out.cost.total / opt_total,
                bound,
                messages: out.log.as_ref().map_or(0, |l| summarize(l).hop_messages),
                tau_per_agent: seconds / reps as f64 / inst.agents as f64,
                error: String::new(),
            }),
            Err(e) => rows.push(failed(label, &e)),
        }
    }
    rows
}

/// Mean and standard error of `total` per (x, algo), skipping failed rows.
pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(u64, String), (f64, Vec<f64>)> = BTreeMap::new();
    let mut order: Vec<(u64, String)> = Vec::new();
    for r in rows.iter().filter(|r| r.error.is_empty()) {
        let key = (r.x.to_bits(), r.algo.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_insert((r.x, Vec::new())).1.push(r.total);
    }
    order
        .into_iter()
        .map(|key| {
            let (x, vals) = &groups[&key];
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let stderr = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            };
            AggregateRow { x: *x, algo: key.1, mean, stderr, count: vals.len() }
        })
        .collect()
}

const RAW_HEADER: &str =
    "x,seed,algo,hitting,switching,dissimilarity,total,opt_total,ratio,bound,messages,tau_per_agent,error";

pub fn raw_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{RAW_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:?},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?},{}",
            r.x,
            r.seed,
            r.algo,
            r.hitting,
            r.switching,
            r.dissimilarity,
            r.total,
            r.opt_total,
            r.ratio,
            r.bound,
            r.messages,
            r.tau_per_agent,
            r.error
        );
    }
    out
}

/// Parses [`raw_csv`] output.
pub fn parse_raw_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(RAW_HEADER) {
        return Err(SocoError::Parse("unexpected raw CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.splitn(13, ',').collect();
            if f.len() != 13 {
                return Err(SocoError::Parse(format!("bad raw CSV row '{line}'")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| SocoError::Parse(format!("bad number '{s}'")));
            let int = |s: &str| s.parse::<u64>().map_err(|_| SocoError::Parse(format!("bad integer '{s}'")));
            Ok(SweepRow {
                x: num(f[0])?,
                seed: int(f[1])?,
                algo: f[2].to_string(),
                hitting: num(f[3])?,
                switching: num(f[4])?,
                dissimilarity: num(f[5])?,
                total: num(f[6])?,
                opt_total: num(f[7])?,
                ratio: num(f[8])?,
                bound: num(f[9])?,
                messages: int(f[10])? as usize,
                tau_per_agent: num(f[11])?,
                error: f[12].to_string(),
            })
        })
        .collect()
}

/// Plot-ready `x,algo,mean,stderr`.
pub fn plot_csv(agg: &[AggregateRow]) -> String {
    let mut out = String::from("x,algo,mean,stderr\n");
    for a in agg {
        let _ = writeln!(out, "{:?},{},{:?},{:?}", a.x, a.algo, a.mean, a.stderr);
    }
    out
}

/// As [`plot_csv`] with means and standard errors divided by the largest mean.
pub fn normalized_csv(agg: &[AggregateRow]) -> String {
    let top = agg.iter().map(|a| a.mean).fold(0.0, f64::max);
    let scale = if top > 0.0 { 1.0 / top } else { 1.0 };
    let mut out = String::from("x,algo,mean,stderr\n");
    for a in agg {
        let _ = writeln!(out, "{:?},{},{:?},{:?}", a.x, a.algo, a.mean * scale, a.stderr * scale);
    }
    out
}

/// Writes `raw.csv`, `plot.csv`, `normalized.csv` and `aggregate.json` into `dir`.
pub fn write_report(report: &SweepReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("raw.csv"), raw_csv(&report.rows))?;
    fs::write(dir.join("plot.csv"), plot_csv(&report.aggregate))?;
    fs::write(dir.join("normalized.csv"), normalized_csv(&report.aggregate))?;
    fs::write(dir.join("aggregate.json"), serde_json::to_string_pretty(&report.aggregate)?)?;
    Ok(())
}
