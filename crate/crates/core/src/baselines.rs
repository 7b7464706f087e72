//! Comparators: LPC(r, k) neighborhood predictive control, follow-the-minimizer,
//! greedy LOCAL, per-agent ROBD, and a consensus-constrained policy.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::acord::lambda1_of_mu_unchecked;
use crate::costs::{total_cost, CostReport, Trajectory};
use crate::graph::{r_hop_neighborhood, GraphSnapshot};
use crate::instance::Instance;
use crate::oracles::{window_qp, SolveConfig};
use crate::simnet::{deliver, CommLog, LogMode, Message, MessageKind};
use crate::{Action, Result, SocoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpcConfig {
    /// Communication radius.
    pub r: usize,
    /// Prediction window; 1 means no look-ahead.
    pub k: usize,
}

impl LpcConfig {
    pub fn new(r: usize, k: usize) -> Result<Self> {
        if r == 0 || k == 0 {
            return Err(SocoError::InvalidParameter(format!("LPC needs r >= 1 and k >= 1, got r = {r}, k = {k}")));
        }
        Ok(Self { r, k })
    }
}

/// Scalars per shipped quadratic descriptor per round: α, μ and v.
fn descriptor_dim(d: usize) -> usize {
    d + 2
}

pub fn run_lpc(inst: &Instance, cfg: &LpcConfig) -> Result<(Trajectory, CostReport, CommLog)> {
    run_lpc_with(inst, cfg, LogMode::Full)
}

/// Each agent solves the windowed problem over its r-hop ball, with hitting
/// costs of the (r−1)-hop ball and switching plus dissimilarity terms of the
/// whole ball, anchored at the committed previous actions, and keeps only its
/// own current action.
pub fn run_lpc_with(inst: &Instance, cfg: &LpcConfig, mode: LogMode) -> Result<(Trajectory, CostReport, CommLog)> {
    LpcConfig::new(cfg.r, cfg.k)?;
    if let Some(t) = inst.first_graph_change() {
        return Err(SocoError::DynamicGraph(t));
    }
    let started = Instant::now();
    let g = &inst.graphs[0];
    let solve = SolveConfig::default();
    let mut log = CommLog::with_mode(inst.agents, mode);
    let balls: Vec<(Vec<usize>, Vec<bool>)> = (0..inst.agents)
        .map(|i| {
            let ball = r_hop_neighborhood(g, i, cfg.r);
            let inner = r_hop_neighborhood(g, i, cfg.r - 1);
            let hit = ball.iter().map(|v| inner.binary_search(v).is_ok()).collect();
            (ball, hit)
        })
        .collect();
    let mut committed = inst.x0.clone();
    let mut xs = Vec::with_capacity(inst.horizon);
    for t in 0..inst.horizon {
        let w = cfg.k.min(inst.horizon - t);
        let mut next = Vec::with_capacity(inst.agents);
        for (i, (ball, hit)) in balls.iter().enumerate() {
            for &j in ball.iter().filter(|&&j| j != i) {
                let msg = Message {
                    round: t,
                    iteration: 0,
                    src: j,
                    dst: i,
                    payload_dim: descriptor_dim(inst.dim) * w,
                    kind: MessageKind::Function,
                };
                deliver(&mut log, msg, g, Some(cfg.r))?;
            }
            let anchor: Vec<Action> = ball.iter().map(|&j| committed[j].clone()).collect();
            let plan = window_qp(inst, t, w, ball, hit, &anchor, &solve)?;
            let own = ball.binary_search(&i).expect("ball contains its center");
            next.push(plan[0][own].clone());
            let size = (ball.len() * w * inst.dim) as f64;
            log.add_ops(i, size.powi(3) / 3.0);
        }
        committed = next.clone();
        xs.push(next);
    }
    log.add_time("lpc", started.elapsed());
    let traj = Trajectory::new(xs, inst.x0.clone());
    let cost = total_cost(inst, &traj)?;
    Ok((traj, cost, log))
}

/// Follow the minimizer: `xᵢ = argmin fᵢ`.
pub fn run_ftm(inst: &Instance) -> Result<(Trajectory, CostReport)> {
    let xs = inst
        .costs
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| c.minimizer().ok_or_else(|| SocoError::UnsupportedCost("custom cost without a minimizer".into())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    finish(inst, xs)
}

/// Greedy `argmin fᵢ(x) + ½‖x − x_prevⁱ‖²`, ignoring neighbors.
pub fn run_local(inst: &Instance) -> Result<(Trajectory, CostReport)> {
    per_agent_prox(inst, |_| 1.0)
}

/// Per-agent ROBD step `argmin fᵢ(x) + (λᵢ/2)‖x − x_prevⁱ‖²`, ignoring neighbors.
pub fn run_local_robd(inst: &Instance) -> Result<(Trajectory, CostReport)> {
    let mus = inst.mus();
    per_agent_prox(inst, |i| lambda1_of_mu_unchecked(mus[i]))
}

fn per_agent_prox(inst: &Instance, weight: impl Fn(usize) -> f64) -> Result<(Trajectory, CostReport)> {
    let d = inst.dim;
    let mut prev = inst.x0.clone();
    let mut xs = Vec::with_capacity(inst.horizon);
    for row in &inst.costs {
        let next = row
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = weight(i);
                c.local_prox(&(DMatrix::identity(d, d) * w), &(w * &prev[i]))
            })
            .collect::<Result<Vec<_>>>()?;
        prev = next.clone();
        xs.push(next);
    }
    finish(inst, xs)
}

/// One shared action per round minimizing `Σᵢ fᵢ(x) + Σᵢ ½‖x − x_prevⁱ‖²`.
/// Quadratic costs only.
pub fn run_consensus(inst: &Instance) -> Result<(Trajectory, CostReport)> {
    let n = inst.agents as f64;
    let mut prev = inst.x0.clone();
    let mut xs = Vec::with_capacity(inst.horizon);
    for row in &inst.costs {
        let mut num = prev.iter().fold(Action::zeros(inst.dim), |acc, p| acc + p);
        let mut den = n;
        for c in row {
            let q = c
                .as_quadratic()
                .ok_or_else(|| SocoError::UnsupportedCost("consensus policy needs quadratic costs".into()))?;
            num.axpy(2.0 * q.alpha, &q.v, 1.0);
            den += 2.0 * q.alpha;
        }
        let x = num / den;
        prev = vec![x; inst.agents];
        xs.push(prev.clone());
    }
    finish(inst, xs)
}

fn finish(inst: &Instance, xs: Vec<Vec<Action>>) -> Result<(Trajectory, CostReport)> {
    let traj = Trajectory::new(xs, inst.x0.clone());
    let cost = total_cost(inst, &traj)?;
    Ok((traj, cost))
}

/// Per-round flop model of LPC: one dense solve of size `|𝒩ᵢʳ|·k·d`, cubed,
/// averaged over agents.
pub fn lpc_flops_estimate(cfg: &LpcConfig, g: &GraphSnapshot, d: usize) -> f64 {
    let n = g.n().max(1);
    (0..g.n())
        .map(|i| ((r_hop_neighborhood(g, i, cfg.r).len() * cfg.k * d) as f64).powi(3))
        .sum::<f64>()
        / n as f64
}

/// Per-round flop model of ACORD: `K_t` local solves of cost `d³` per neighbor.
pub fn acord_flops_estimate(kt: usize, degree: usize, d: usize) -> f64 {
    (kt * degree) as f64 * (d as f64).powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acord::{run_acord, KtPolicy};
    use crate::graph::build_d_regular;
    use crate::instance::{generate_naive_failure_instance, HittingCostSpec, NaiveFailureVariant};
    use crate::oracles::offline_opt;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn s(v: f64) -> Action {
        DVector::from_element(1, v)
    }

    fn ring_instance(beta: f64, horizon: usize) -> Instance {
        let g = build_d_regular(5, 2).unwrap();
        let costs = (0..horizon)
            .map(|t| {
                (0..5)
                    .map(|i| HittingCostSpec::quadratic(0.5 + 0.1 * i as f64, s((i * t) as f64 - 3.0), 1.0).unwrap())
                    .collect()
            })
            .collect();
        Instance::new(beta, 1.0, 1.0, costs, vec![g; horizon], 1).unwrap()
    }

    #[test]
    fn local_and_ftm_closed_forms() {
        let inst = ring_instance(2.0, 3);
        let (local, _) = run_local(&inst).unwrap();
        let (ftm, ftm_cost) = run_ftm(&inst).unwrap();
        let q = inst.costs[0][2].as_quadratic().unwrap();
        assert_relative_eq!(local.x[0][2][0], 2.0 * q.alpha * q.v[0] / (2.0 * q.alpha + 1.0), max_relative = 1e-14);
        assert_eq!(ftm.x[1][3], inst.costs[1][3].as_quadratic().unwrap().v);
        assert_eq!(ftm_cost.hitting, 0.0);
    }

    #[test]
    fn lpc_radius_one_no_coupling_is_local() {
        let inst = ring_instance(0.0, 4);
        let (lpc, _, log) = run_lpc(&inst, &LpcConfig::new(1, 1).unwrap()).unwrap();
        let (local, _) = run_local(&inst).unwrap();
        assert!(lpc.max_abs_diff(&local) < 1e-12);
        assert!(log.messages().iter().all(|m| m.kind == MessageKind::Function));
        assert_eq!(log.count(MessageKind::Function).messages, 4 * 5 * 2);
    }

    #[test]
    fn lpc_full_information_is_offline_optimal() {
        let inst = ring_instance(3.0, 5);
        let (lpc, _, _) = run_lpc(&inst, &LpcConfig::new(3, 5).unwrap()).unwrap();
        let (opt, _) = offline_opt(&inst, &SolveConfig::default()).unwrap();
        assert!(lpc.max_abs_diff(&opt) < 1e-9);
    }

    #[test]
    fn lpc_rejects_dynamic_graphs() {
        let mut inst = ring_instance(1.0, 3);
        inst.graphs[2] = GraphSnapshot::unweighted(5, &[(0, 1)]).unwrap();
        assert!(matches!(run_lpc(&inst, &LpcConfig::new(1, 1).unwrap()), Err(SocoError::DynamicGraph(2))));
        assert!(LpcConfig::new(0, 1).is_err());
    }

    #[test]
    fn local_robd_recursion_on_naive_instance() {
        let inst = generate_naive_failure_instance(NaiveFailureVariant::LocalRobd, 100.0, 10).unwrap();
        let (traj, _) = run_local_robd(&inst).unwrap();
        let r5 = 5f64.sqrt();
        let mut x = 0.0;
        for t in 1..=10 {
            x = (2.0 * x + (1.0 + r5) * t as f64) / (3.0 + r5);
            assert_relative_eq!(traj.x[t - 1][0][0], x, max_relative = 1e-12);
            assert_relative_eq!(traj.x[t - 1][1][0], -x, max_relative = 1e-12);
        }
        let zero = generate_naive_failure_instance(NaiveFailureVariant::LocalRobd, 0.0, 10).unwrap();
        assert_eq!(run_local_robd(&zero).unwrap().1.dissimilarity, 0.0);
    }

    #[test]
    fn local_robd_equals_uncoupled_acord() {
        let inst = ring_instance(0.0, 4);
        let (a, _) = run_local_robd(&inst).unwrap();
        let (b, _, _) = run_acord(&inst, &KtPolicy::Fixed(3)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn consensus_has_no_dissimilarity() {
        let inst = ring_instance(10.0, 4);
        let (traj, rep) = run_consensus(&inst).unwrap();
        assert_eq!(rep.dissimilarity, 0.0);
        assert!(traj.x.iter().all(|row| row.iter().all(|x| x == &row[0])));
        let c = generate_naive_failure_instance(
            NaiveFailureVariant::Consensus { curvature: 1e6, separation: 20.0 },
            1.0,
            3,
        )
        .unwrap();
        let (_, rep) = run_consensus(&c).unwrap();
        for r in &rep.per_round {
            assert!(r.hitting >= 1e6 * 100.0 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn flop_models() {
        let ring = build_d_regular(20, 2).unwrap();
        let lpc = lpc_flops_estimate(&LpcConfig::new(3, 1).unwrap(), &ring, 1);
        assert_eq!(lpc, 343.0);
        let lpc2 = lpc_flops_estimate(&LpcConfig::new(3, 2).unwrap(), &ring, 1);
        assert_eq!(lpc2, 8.0 * 343.0);
        assert_eq!(lpc / acord_flops_estimate(12, 2, 1), 343.0 / 24.0);
        let k = build_d_regular(8, 7).unwrap();
        assert_eq!(lpc_flops_estimate(&LpcConfig::new(1, 1).unwrap(), &k, 1), 512.0);
    }
}
