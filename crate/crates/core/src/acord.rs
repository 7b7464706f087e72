//! The decentralized alternating-minimization algorithm (ACORD): per-agent
//! local steps, edge-averaged auxiliary variables, the inner iteration count
//! K_t, and the network crawl that lets agents agree on K_t.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::costs::{total_cost, CostReport, Trajectory};
use crate::graph::{diameter, sigma_or_lower_bound, GraphSnapshot};
use crate::instance::{EdgeCoupling, Instance};
use crate::oracles::local_x_step;
use crate::simnet::{deliver, CommLog, LogMode, Message, MessageKind};
use crate::{Action, Result, SocoError};

/// `2 / (1 + √(1 + 4/μ))`.
pub fn lambda1_of_mu(mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(SocoError::InvalidParameter(format!("mu must be > 0, got {mu}")));
    }
    Ok(lambda1_of_mu_unchecked(mu))
}

pub(crate) fn lambda1_of_mu_unchecked(mu: f64) -> f64 {
    2.0 / (1.0 + (1.0 + 4.0 / mu).sqrt())
}

/// `½ + ½√(1 + 4/min μ)`.
pub fn cr_star(mus: &[f64]) -> Result<f64> {
    let min = mus.iter().copied().fold(f64::INFINITY, f64::min);
    if mus.is_empty() {
        return Err(SocoError::Empty("mus"));
    }
    if !(min > 0.0) {
        return Err(SocoError::InvalidParameter(format!("mu must be > 0, got {min}")));
    }
    Ok(0.5 + 0.5 * (1.0 + 4.0 / min).sqrt())
}

/// Multiplicative constant of the finite-horizon guarantee,
/// `(CR_* + 1/2T²) / (1 − 1/2T²)`.
pub fn cr_acord(cr_star: f64, horizon: usize) -> f64 {
    let h = 0.5 / (horizon as f64).powi(2);
    (cr_star + h) / (1.0 - h)
}

/// Additive term of the finite-horizon guarantee, `(1 + βm²/l) / 4T`.
pub fn guarantee_additive(beta: f64, m: f64, l: f64, horizon: usize) -> f64 {
    (1.0 + beta * m * m / l) / (4.0 * horizon as f64)
}

/// How many inner iterations to run per round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KtPolicy {
    Fixed(usize),
    /// Hitting costs bounded by `mf`, action-space diameter `ms`.
    Bounded { mf: f64, ms: f64 },
    /// Starting-point dependent count; agents learn the start value by crawling.
    UnboundedCrawl,
    /// Like `UnboundedCrawl` with `T⁴` replaced by `1/ε²`.
    Epsilon(f64),
}

impl KtPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KtPolicy::Fixed(0) => Err(SocoError::InvalidParameter("fixed K must be >= 1".into())),
            KtPolicy::Bounded { mf, ms } if !(mf >= 0.0 && ms >= 0.0 && mf + ms > 0.0) => {
                Err(SocoError::InvalidParameter(format!("bounded policy needs Mf, Ms >= 0, got {mf}, {ms}")))
            }
            KtPolicy::Epsilon(eps) if !(eps > 0.0) => {
                Err(SocoError::InvalidParameter(format!("epsilon must be > 0, got {eps}")))
            }
            _ => Ok(()),
        }
    }

    pub fn needs_crawl(&self) -> bool {
        matches!(self, KtPolicy::UnboundedCrawl | KtPolicy::Epsilon(_))
    }

    /// Bounded policy with `Ms` the diagonal of the box spanned by every
    /// minimizer and initial action, and `Mf = max α · Ms²`.
    pub fn bounded_from_instance(inst: &Instance) -> Result<Self> {
        let d = inst.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut alpha_max: f64 = 0.0;
        let mut widen = |x: &Action| {
            for k in 0..d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        };
        for x in &inst.x0 {
            widen(x);
        }
        for c in inst.costs.iter().flatten() {
            let q = c
                .as_quadratic()
                .ok_or_else(|| SocoError::UnsupportedCost("automatic bounds need quadratic costs".into()))?;
            widen(&q.v);
            alpha_max = alpha_max.max(q.alpha);
        }
        let ms = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        Ok(KtPolicy::Bounded { mf: alpha_max * ms * ms, ms })
    }
}

impl fmt::Display for KtPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KtPolicy::Fixed(k) => write!(f, "fixed:{k}"),
            KtPolicy::Bounded { mf, ms } => write!(f, "bounded:{mf}:{ms}"),
            KtPolicy::UnboundedCrawl => write!(f, "crawl"),
            KtPolicy::Epsilon(e) => write!(f, "eps:{e}"),
        }
    }
}

impl FromStr for KtPolicy {
    type Err = SocoError;

    /// `fixed:K`, `bounded:Mf:Ms`, `crawl`, or `eps:ε`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<f64>().map_err(|_| SocoError::Parse(format!("bad number '{p}' in K policy '{s}'")));
        let policy = match parts.as_slice() {
            ["fixed", k] => KtPolicy::Fixed(k.parse().map_err(|_| SocoError::Parse(format!("bad K in '{s}'")))?),
            ["bounded", mf, ms] => KtPolicy::Bounded { mf: num(mf)?, ms: num(ms)? },
            ["crawl"] | ["unbounded"] => KtPolicy::UnboundedCrawl,
            ["eps", e] => KtPolicy::Epsilon(num(e)?),
            _ => return Err(SocoError::Parse(format!("unknown K policy '{s}'"))),
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// Inner iteration count for one round.
///
/// With `c = 4βl`, every non-fixed mode returns `⌈log(X) / log(c / (c − σ))⌉`
/// floored at 1, where `X / (σ·min λ)²` is
/// - bounded: `T⁴ · 128βl · N(Mf + Ms²/2) · max(μᵢ + λᵢ)`,
/// - crawl: `T⁴ · 128βl · F0`,
/// - epsilon: `128βl · F0 / ε²`.
///
/// Without coupling (`β = 0`) one iteration is exact and 1 is returned.
#[allow(clippy::too_many_arguments)]
pub fn compute_kt(
    policy: &KtPolicy,
    sigma: f64,
    beta: f64,
    l: f64,
    lambdas: &[f64],
    mus: &[f64],
    horizon: usize,
    f0: f64,
) -> Result<usize> {
    policy.validate()?;
    if let KtPolicy::Fixed(k) = policy {
        return Ok(*k);
    }
    if beta == 0.0 {
        return Ok(1);
    }
    let c = 4.0 * beta * l;
    if !(sigma > 0.0) || sigma >= c {
        return Err(SocoError::ContractionUndefined { sigma, limit: c });
    }
    let min_lambda = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mu_lambda = mus.iter().zip(lambdas).map(|(m, l)| m + l).fold(f64::NEG_INFINITY, f64::max);
    if lambdas.is_empty() || mus.len() != lambdas.len() {
        return Err(SocoError::Empty("lambdas"));
    }
    let t4 = (horizon as f64).powi(4);
    let numerator = match *policy {
        KtPolicy::Bounded { mf, ms } => t4 * 128.0 * beta * l * lambdas.len() as f64 * (mf + ms * ms / 2.0) * max_mu_lambda,
        KtPolicy::UnboundedCrawl => t4 * 128.0 * beta * l * f0,
        KtPolicy::Epsilon(eps) => 128.0 * beta * l * f0 / (eps * eps),
        KtPolicy::Fixed(_) => unreachable!(),
    };
    let arg = numerator / (sigma * min_lambda).powi(2);
    if !(arg > 1.0) {
        return Ok(1);
    }
    let k = arg.ln() / (c / (c - sigma)).ln();
    if !k.is_finite() {
        return Err(SocoError::ContractionUndefined { sigma, limit: c });
    }
    Ok((k.ceil() as usize).max(1))
}

/// Per-agent algorithm state. `z_local` maps each current neighbor to the
/// agent's copy of the shared edge variable.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub lambda1: f64,
    pub x_prev: Action,
    pub x_work: Action,
    pub z_local: BTreeMap<usize, Action>,
}

impl AgentState {
    /// States before round 0. Initial actions are common knowledge, so edge
    /// variables of the first graph start at endpoint averages.
    pub fn initial(inst: &Instance) -> Vec<AgentState> {
        let lambdas = inst.lambdas();
        let g = &inst.graphs[0];
        (0..inst.agents)
            .map(|i| AgentState {
                id: i,
                lambda1: lambdas[i],
                x_prev: inst.x0[i].clone(),
                x_work: inst.x0[i].clone(),
                z_local: g.neighbors(i).iter().map(|&(j, _)| (j, (&inst.x0[i] + &inst.x0[j]) * 0.5)).collect(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlOutcome {
    /// Start value each agent computed from its crawl vector.
    pub f0: Vec<f64>,
    pub kt: Vec<usize>,
    /// Exchange steps run (largest component diameter).
    pub steps: usize,
    /// The round's graph was disconnected, so agents agree only per component.
    pub disconnected: bool,
}

/// Flood-fills every agent's `fᵢ(0) + (λᵢ/2)‖x_prevⁱ‖²` for as many steps as
/// the largest component diameter, then each agent computes K_t from the sum
/// it holds.
pub fn network_crawl(
    log: &mut CommLog,
    inst: &Instance,
    t: usize,
    states: &[AgentState],
    sigma: f64,
    policy: &KtPolicy,
) -> Result<CrawlOutcome> {
    let n = inst.agents;
    let g = &inst.graphs[t];
    let diam = diameter(g);
    let steps = if g.edge_count() == 0 { 0 } else { diam.max_component() };
    let zero = Action::zeros(inst.dim);
    let mut known: Vec<Vec<Option<f64>>> = (0..n)
        .map(|i| {
            let mut y = vec![None; n];
            y[i] = Some(inst.costs[t][i].eval(&zero) + 0.5 * states[i].lambda1 * states[i].x_prev.norm_squared());
            y
        })
        .collect();
    for step in 1..=steps {
        let snapshot = known.clone();
        for i in 0..n {
            for &(j, _) in g.neighbors(i) {
                let msg = Message { round: t, iteration: step, src: j, dst: i, payload_dim: n, kind: MessageKind::Crawl };
                deliver(log, msg, g, None)?;
                for (mine, theirs) in known[i].iter_mut().zip(&snapshot[j]) {
                    if mine.is_none() {
                        *mine = *theirs;
                    }
                }
            }
        }
    }
    let mus = inst.mus();
    let lambdas: Vec<f64> = states.iter().map(|s| s.lambda1).collect();
    let f0: Vec<f64> = known.iter().map(|y| y.iter().flatten().sum()).collect();
    let kt = (0..n)
        .map(|i| {
            if g.degree(i) == 0 {
                Ok(1)
            } else {
                compute_kt(policy, sigma, inst.beta, inst.l, &lambdas, &mus, inst.horizon, f0[i])
            }
        })
        .collect::<Result<_>>()?;
    Ok(CrawlOutcome { f0, kt, steps, disconnected: diam.overall.is_none() })
}

/// Runs `kt` (x-step, exchange, z-step) cycles for every agent and commits the
/// final iterate. Returns the committed actions.
pub fn acord_round(log: &mut CommLog, inst: &Instance, t: usize, states: &mut [AgentState], kt: usize) -> Result<Vec<Action>> {
    acord_round_per_agent(log, inst, t, states, &vec![kt; inst.agents])
}

/// As [`acord_round`] with a count per agent; counts must agree within each
/// connected component.
pub fn acord_round_per_agent(
    log: &mut CommLog,
    inst: &Instance,
    t: usize,
    states: &mut [AgentState],
    kt: &[usize],
) -> Result<Vec<Action>> {
    let g = &inst.graphs[t];
    let d = inst.dim;
    if kt.iter().any(|&k| k == 0) {
        return Err(SocoError::InvalidParameter("K_t must be >= 1".into()));
    }
    prepare_edges(log, g, t, states, d)?;
    let rounds = kt.iter().copied().max().unwrap_or(0);
    for k in 1..=rounds {
        let active: Vec<bool> = kt.iter().map(|&ki| ki >= k).collect();
        for s in states.iter_mut().filter(|s| active[s.id]) {
            let incident: Vec<(&EdgeCoupling, &Action)> =
                g.neighbors(s.id).iter().map(|&(j, e)| (g.coupling(e), &s.z_local[&j])).collect();
            let x = local_x_step(&inst.costs[t][s.id], s.lambda1, &s.x_prev, inst.beta, &incident)?;
            let flops = (d * d * d + g.degree(s.id) * d * d) as f64;
            s.x_work = x;
            log.add_ops(s.id, flops);
        }
        for i in (0..states.len()).filter(|&i| active[i]) {
            for &(j, _) in g.neighbors(i) {
                let msg = Message { round: t, iteration: k, src: i, dst: j, payload_dim: d, kind: MessageKind::Action };
                deliver(log, msg, g, None)?;
            }
        }
        let work: Vec<Action> = states.iter().map(|s| s.x_work.clone()).collect();
        for s in states.iter_mut().filter(|s| active[s.id]) {
            for (j, z) in s.z_local.iter_mut() {
                *z = (&work[s.id] + &work[*j]) * 0.5;
            }
        }
    }
    for s in states.iter_mut() {
        s.x_prev = s.x_work.clone();
    }
    Ok(states.iter().map(|s| s.x_prev.clone()).collect())
}

/// Drops edge variables of vanished edges and initializes new ones at the
/// endpoint average of previous actions, exchanging those actions once.
fn prepare_edges(log: &mut CommLog, g: &GraphSnapshot, t: usize, states: &mut [AgentState], d: usize) -> Result<()> {
    let prev: Vec<Action> = states.iter().map(|s| s.x_prev.clone()).collect();
    for s in states.iter_mut() {
        s.x_work = s.x_prev.clone();
        s.z_local.retain(|j, _| g.has_edge(s.id, *j));
        for &(j, _) in g.neighbors(s.id) {
            if !s.z_local.contains_key(&j) {
                let msg = Message { round: t, iteration: 0, src: j, dst: s.id, payload_dim: d, kind: MessageKind::Action };
                deliver(log, msg, g, None)?;
                s.z_local.insert(j, (&prev[s.id] + &prev[j]) * 0.5);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AcordOptions {
    pub log_mode: LogMode,
}

/// Full record of an ACORD run.
#[derive(Debug, Clone)]
pub struct AcordRun {
    pub trajectory: Trajectory,
    pub cost: CostReport,
    pub log: CommLog,
    /// `kt[t][i]`: iterations agent `i` ran in round `t`.
    pub kt: Vec<Vec<usize>>,
    /// σ used for K_t in each round (`None` when not needed).
    pub sigma: Vec<Option<f64>>,
    /// Rounds whose graph was disconnected while crawling.
    pub flagged_rounds: Vec<usize>,
}

pub fn run_acord(inst: &Instance, policy: &KtPolicy) -> Result<(Trajectory, CostReport, CommLog)> {
    let run = run_acord_with(inst, policy, AcordOptions::default())?;
    Ok((run.trajectory, run.cost, run.log))
}

pub fn run_acord_with(inst: &Instance, policy: &KtPolicy, opts: AcordOptions) -> Result<AcordRun> {
    policy.validate()?;
    inst.validate()?;
    let started = Instant::now();
    let mut log = CommLog::with_mode(inst.agents, opts.log_mode);
    let mut states = AgentState::initial(inst);
    let mus = inst.mus();
    let lambdas = inst.lambdas();
    let mut xs = Vec::with_capacity(inst.horizon);
    let mut kts = Vec::with_capacity(inst.horizon);
    let mut sigmas = Vec::with_capacity(inst.horizon);
    let mut flagged = Vec::new();
    for t in 0..inst.horizon {
        let g = &inst.graphs[t];
        let coupled = inst.beta > 0.0 && g.edge_count() > 0;
        let sigma = match policy {
            KtPolicy::Fixed(_) => None,
            _ if coupled => Some(sigma_or_lower_bound(g, &mus, &lambdas, inst.beta, inst.m)?.sigma),
            _ => None,
        };
        let kt: Vec<usize> = match policy {
            KtPolicy::Fixed(k) => vec![*k; inst.agents],
            KtPolicy::Bounded { .. } => {
                let k = match sigma {
                    Some(s) => compute_kt(policy, s, inst.beta, inst.l, &lambdas, &mus, inst.horizon, 0.0)?,
                    None => 1,
                };
                (0..inst.agents).map(|i| if g.degree(i) == 0 { 1 } else { k }).collect()
            }
            KtPolicy::UnboundedCrawl | KtPolicy::Epsilon(_) => {
                let placeholder = sigma.unwrap_or(f64::NAN);
                let effective = if coupled { *policy } else { KtPolicy::Fixed(1) };
                let out = network_crawl(&mut log, inst, t, &states, placeholder, &effective)?;
                if out.disconnected {
                    flagged.push(t);
                }
                out.kt
            }
        };
        xs.push(acord_round_per_agent(&mut log, inst, t, &mut states, &kt)?);
        kts.push(kt);
        sigmas.push(sigma);
    }
    log.add_time("acord", started.elapsed());
    let trajectory = Trajectory::new(xs, inst.x0.clone());
    let cost = total_cost(inst, &trajectory)?;
    Ok(AcordRun { trajectory, cost, log, kt: kts, sigma: sigmas, flagged_rounds: flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_d_regular;
    use crate::instance::HittingCostSpec;
    use crate::oracles::{robd_round_exact, SolveConfig};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn s(v: f64) -> Action {
        DVector::from_element(1, v)
    }

    #[test]
    fn lambda_and_cr_values() {
        assert_relative_eq!(lambda1_of_mu(1.0).unwrap(), 0.6180339887498948, max_relative = 1e-15);
        assert_relative_eq!(lambda1_of_mu(4.0).unwrap(), 0.8284271247461902, max_relative = 1e-15);
        assert!(lambda1_of_mu(1e12).unwrap() < 1.0 && lambda1_of_mu(1e12).unwrap() > 0.999999);
        assert!(lambda1_of_mu(0.0).is_err());
        assert_relative_eq!(cr_star(&[1.0]).unwrap(), 1.618033988749895, max_relative = 1e-15);
        assert_eq!(cr_star(&[1.0, 100.0, 7.0]).unwrap(), cr_star(&[1.0]).unwrap());
        assert!((cr_star(&[1e12]).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(cr_star(&[]), Err(SocoError::Empty(_))));
    }

    #[test]
    fn kt_denominator_and_scaling() {
        let denom = (4.0f64 / (4.0 - 0.728)).ln();
        assert_relative_eq!(denom, 0.20089294237938987, max_relative = 1e-14);
        let lam = [0.618; 3];
        let mus = [1.0; 3];
        let k = |t: usize| compute_kt(&KtPolicy::UnboundedCrawl, 0.728, 1.0, 1.0, &lam, &mus, t, 10.0).unwrap();
        let exact = |t: f64| (t.powi(4) * 128.0 * 10.0 / (0.728f64 * 0.618).powi(2)).ln() / denom;
        assert_eq!(k(10), exact(10.0).ceil() as usize);
        // doubling T adds log(16) to the numerator
        assert_relative_eq!(exact(20.0) - exact(10.0), 16f64.ln() / denom, max_relative = 1e-12);
        assert!(compute_kt(&KtPolicy::UnboundedCrawl, 4.0, 1.0, 1.0, &lam, &mus, 10, 1.0).is_err());
        assert_eq!(compute_kt(&KtPolicy::UnboundedCrawl, 3.9999999, 1.0, 1.0, &lam, &mus, 1, 1e-3).unwrap(), 1);
        assert_eq!(compute_kt(&KtPolicy::Fixed(12), 0.5, 1.0, 1.0, &lam, &mus, 10, 0.0).unwrap(), 12);
        assert_eq!(compute_kt(&KtPolicy::Epsilon(1e-3), 0.5, 0.0, 1.0, &lam, &mus, 10, 5.0).unwrap(), 1);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("fixed:12".parse::<KtPolicy>().unwrap(), KtPolicy::Fixed(12));
        assert_eq!("crawl".parse::<KtPolicy>().unwrap(), KtPolicy::UnboundedCrawl);
        assert_eq!("eps:1e-3".parse::<KtPolicy>().unwrap(), KtPolicy::Epsilon(1e-3));
        assert_eq!("bounded:2:3".parse::<KtPolicy>().unwrap(), KtPolicy::Bounded { mf: 2.0, ms: 3.0 });
        assert!("fixed:0".parse::<KtPolicy>().is_err());
        assert!("eps:-1".parse::<KtPolicy>().is_err());
        assert!("sometimes".parse::<KtPolicy>().is_err());
    }

    #[test]
    fn uncoupled_round_is_robd_step() {
        let g = build_d_regular(4, 2).unwrap();
        let costs = vec![(0..4).map(|i| HittingCostSpec::quadratic(0.5, s(i as f64), 1.0).unwrap()).collect()];
        let inst = Instance::new(0.0, 1.0, 1.0, costs, vec![g], 1).unwrap();
        let (traj, _, log) = run_acord(&inst, &KtPolicy::Fixed(1)).unwrap();
        let lam = lambda1_of_mu(1.0).unwrap();
        for i in 0..4 {
            assert_relative_eq!(traj.x[0][i][0], i as f64 / (1.0 + lam), max_relative = 1e-14);
        }
        assert_eq!(log.count(MessageKind::Action).messages, 2 * 4);
    }

    #[test]
    fn symmetric_pair_stays_symmetric() {
        let g = crate::graph::GraphSnapshot::unweighted(2, &[(0, 1)]).unwrap();
        let costs = vec![vec![HittingCostSpec::quadratic(1.0, s(3.0), 1.0).unwrap(); 2]];
        let inst = Instance::new(5.0, 1.0, 1.0, costs, vec![g], 1).unwrap();
        let mut states = AgentState::initial(&inst);
        let mut log = CommLog::new(2);
        for _ in 0..5 {
            let x = acord_round(&mut log, &inst, 0, &mut states, 1).unwrap();
            assert_eq!(x[0], x[1]);
            assert_eq!(states[0].z_local[&1], x[0]);
            for st in states.iter_mut() {
                st.x_prev = inst.x0[st.id].clone();
            }
        }
    }

    #[test]
    fn many_iterations_reach_exact_round() {
        let g = build_d_regular(4, 2).unwrap();
        let costs = vec![(0..4)
            .map(|i| HittingCostSpec::quadratic(0.6 + 0.3 * i as f64, s(2.0 * i as f64 - 3.0), 1.0).unwrap())
            .collect()];
        let inst = Instance::new(2.0, 1.0, 1.0, costs, vec![g], 1).unwrap();
        let (traj, _, _) = run_acord(&inst, &KtPolicy::Fixed(500)).unwrap();
        let exact = robd_round_exact(&inst, 0, &inst.x0, &SolveConfig::default()).unwrap();
        for i in 0..4 {
            assert!((traj.x[0][i][0] - exact.x[i][0]).abs() < 1e-6);
        }
    }

    #[test]
    fn crawl_on_ring_and_singleton() {
        let ring = build_d_regular(5, 2).unwrap();
        let costs = vec![(0..5).map(|i| HittingCostSpec::quadratic(1.0, s(i as f64), 1.0).unwrap()).collect()];
        let inst = Instance::new(1.0, 1.0, 1.0, costs, vec![ring], 1).unwrap();
        let states = AgentState::initial(&inst);
        let mut log = CommLog::new(5);
        let out = network_crawl(&mut log, &inst, 0, &states, 0.5, &KtPolicy::UnboundedCrawl).unwrap();
        assert_eq!(out.steps, 2);
        assert!(out.f0.iter().all(|&f| f == 30.0));
        assert!(out.kt.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(log.count(MessageKind::Crawl).messages, 2 * 5 * 2);

        let one = Instance::new(
            1.0,
            1.0,
            1.0,
            vec![vec![HittingCostSpec::quadratic(1.0, s(1.0), 1.0).unwrap()]],
            vec![crate::graph::GraphSnapshot::unweighted(1, &[]).unwrap()],
            1,
        )
        .unwrap();
        let mut log = CommLog::new(1);
        let out = network_crawl(&mut log, &one, 0, &AgentState::initial(&one), 0.5, &KtPolicy::UnboundedCrawl).unwrap();
        assert_eq!((out.steps, out.kt[0]), (0, 1));
        assert_eq!(log.count(MessageKind::Crawl).messages, 0);
    }

    #[test]
    fn crawl_on_two_components() {
        let g = crate::graph::GraphSnapshot::unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let costs = vec![(0..6)
            .map(|i| HittingCostSpec::quadratic(1.0, s(if i < 3 { 1.0 } else { 100.0 }), 1.0).unwrap())
            .collect()];
        let inst = Instance::new(1.0, 1.0, 1.0, costs, vec![g], 1).unwrap();
        let mut log = CommLog::new(6);
        let out = network_crawl(&mut log, &inst, 0, &AgentState::initial(&inst), 0.3, &KtPolicy::UnboundedCrawl).unwrap();
        assert!(out.disconnected);
        assert_eq!(out.f0[..3], [3.0; 3]);
        assert_eq!(out.f0[3..], [30000.0; 3]);
        assert!(out.kt[0] == out.kt[2] && out.kt[3] == out.kt[5] && out.kt[0] < out.kt[3]);
    }
}
