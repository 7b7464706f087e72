use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EdgeCoupling, HittingCostSpec, Instance};
use crate::graph::{build_d_regular, GraphSnapshot};
use crate::{Result, SocoError};

/// Spikes grow as `2^t`; doubles overflow near `t = 1024`.
pub const MAX_GENERATED_HORIZON: usize = 1000;

const ALPHA_CALM_PROB: f64 = 0.7;
const MINIMIZER_CALM_PROB: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    pub agents: usize,
    pub horizon: usize,
    pub degree: usize,
    pub beta: f64,
    pub seed: u64,
    pub alpha_floor: f64,
}

impl ExperimentParams {
    pub fn new(agents: usize, horizon: usize, degree: usize, beta: f64, seed: u64) -> Self {
        Self { agents, horizon, degree, beta, seed, alpha_floor: 0.1 }
    }
}

/// Spiky quadratic instance on a static circulant D-regular graph.
///
/// Per agent and round: `α ~ U[floor, 1]`, plus `2^t` with probability 0.3;
/// `v ~ U[−10, 10]`, plus `ε·1.1^t` (ε Rademacher) with probability 0.1.
/// Rounds are counted from 1 in the exponents. `μ_i = 2·alpha_floor`.
pub fn generate_experiment_instance(p: &ExperimentParams) -> Result<Instance> {
    if !(p.alpha_floor > 0.0 && p.alpha_floor <= 1.0) {
        return Err(SocoError::InvalidParameter(format!(
            "alpha_floor must lie in (0, 1], got {}",
            p.alpha_floor
        )));
    }
    if p.horizon == 0 || p.horizon > MAX_GENERATED_HORIZON {
        return Err(SocoError::InvalidParameter(format!(
            "horizon must lie in 1..={MAX_GENERATED_HORIZON}, got {}",
            p.horizon
        )));
    }
    if !(p.agents > p.degree && p.degree >= 2) {
        return Err(SocoError::InvalidParameter(format!(
            "need N > D >= 2, got N = {}, D = {}",
            p.agents, p.degree
        )));
    }
    if !(p.beta >= 0.0) {
        return Err(SocoError::InvalidParameter(format!("beta must be >= 0, got {}", p.beta)));
    }
    let graph = build_d_regular(p.agents, p.degree)?;
    let mu = 2.0 * p.alpha_floor;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut by_agent: Vec<Vec<HittingCostSpec>> = Vec::with_capacity(p.agents);
    for _ in 0..p.agents {
        let mut seq = Vec::with_capacity(p.horizon);
        for t in 1..=p.horizon {
            let mut alpha = rng.gen_range(p.alpha_floor..=1.0);
            if !rng.gen_bool(ALPHA_CALM_PROB) {
                alpha += 2f64.powi(t as i32);
            }
            let mut v = rng.gen_range(-10.0..=10.0);
            if !rng.gen_bool(MINIMIZER_CALM_PROB) {
                let eps = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                v += eps * 1.1f64.powi(t as i32);
            }
            seq.push(HittingCostSpec::quadratic(alpha, DVector::from_element(1, v), mu)?);
        }
        by_agent.push(seq);
    }
    let costs = (0..p.horizon)
        .map(|t| by_agent.iter().map(|seq| seq[t].clone()).collect())
        .collect();
    Instance::new(p.beta, 1.0, 1.0, costs, vec![graph; p.horizon], 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBoundVariant {
    /// Every agent sees `(μ/2)x²` for T rounds, then `(μ′/2)(x−1)²`.
    Symmetric,
    /// β = 0, `μ_i = (i+1)·μ`; only agent 0 switches to `(μ′/2)(x−1)²`.
    Heterogeneous,
}

/// Adversarial instance of horizon `horizon + 1` in one dimension.
///
/// Agents sit on a ring (an edge for N = 2, no edges for N = 1) with unit couplings.
pub fn generate_lower_bound_instance(
    agents: usize,
    horizon: usize,
    mu: f64,
    mu_prime: f64,
    variant: LowerBoundVariant,
    beta: f64,
) -> Result<Instance> {
    if agents == 0 || horizon == 0 {
        return Err(SocoError::InvalidParameter("N and T must be positive".into()));
    }
    if !(mu > 0.0) || !(mu_prime > mu) {
        return Err(SocoError::InvalidParameter(format!(
            "need mu' > mu > 0, got mu = {mu}, mu' = {mu_prime}"
        )));
    }
    let graph = small_ring(agents)?;
    let zero = DVector::zeros(1);
    let one = DVector::from_element(1, 1.0);
    let agent_mu = |i: usize| match variant {
        LowerBoundVariant::Symmetric => mu,
        LowerBoundVariant::Heterogeneous => mu * (i + 1) as f64,
    };
    let mut costs = Vec::with_capacity(horizon + 1);
    for _ in 0..horizon {
        let row = (0..agents)
            .map(|i| HittingCostSpec::quadratic(agent_mu(i) / 2.0, zero.clone(), agent_mu(i)))
            .collect::<Result<Vec<_>>>()?;
        costs.push(row);
    }
    let last = (0..agents)
        .map(|i| {
            let spikes = variant == LowerBoundVariant::Symmetric || i == 0;
            if spikes {
                HittingCostSpec::quadratic(mu_prime / 2.0, one.clone(), agent_mu(i))
            } else {
                HittingCostSpec::quadratic(agent_mu(i) / 2.0, zero.clone(), agent_mu(i))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    costs.push(last);
    let beta = match variant {
        LowerBoundVariant::Symmetric => beta,
        LowerBoundVariant::Heterogeneous => 0.0,
    };
    Instance::new(beta, 1.0, 1.0, costs, vec![graph; horizon + 1], 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NaiveFailureVariant {
    /// Two agents on one edge, `f = (x − v)²/2` with `v¹_t = t`, `v²_t = −t`.
    LocalRobd,
    /// Two agents on one edge, `f = curvature·(x ∓ separation/2)²`.
    Consensus { curvature: f64, separation: f64 },
}

pub fn generate_naive_failure_instance(
    variant: NaiveFailureVariant,
    beta: f64,
    horizon: usize,
) -> Result<Instance> {
    if horizon == 0 || !(beta >= 0.0) {
        return Err(SocoError::InvalidParameter("need T >= 1 and beta >= 0".into()));
    }
    let graph = small_ring(2)?;
    let costs = match variant {
        NaiveFailureVariant::LocalRobd => (1..=horizon)
            .map(|t| {
                let t = t as f64;
                Ok(vec![
                    HittingCostSpec::quadratic(0.5, DVector::from_element(1, t), 1.0)?,
                    HittingCostSpec::quadratic(0.5, DVector::from_element(1, -t), 1.0)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?,
        NaiveFailureVariant::Consensus { curvature, separation } => {
            if !(curvature > 0.0) {
                return Err(SocoError::InvalidParameter("curvature must be > 0".into()));
            }
            let half = separation / 2.0;
            (0..horizon)
                .map(|_| {
                    Ok(vec![
                        HittingCostSpec::quadratic(curvature, DVector::from_element(1, half), 2.0 * curvature)?,
                        HittingCostSpec::quadratic(curvature, DVector::from_element(1, -half), 2.0 * curvature)?,
                    ])
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Instance::new(beta, 1.0, 1.0, costs, vec![graph; horizon], 1)
}

fn small_ring(agents: usize) -> Result<GraphSnapshot> {
    match agents {
        1 => GraphSnapshot::with_uniform_coupling(1, &[], EdgeCoupling::identity()),
        2 => GraphSnapshot::with_uniform_coupling(2, &[(0, 1)], EdgeCoupling::identity()),
        n => build_d_regular(n, 2),
    }
}
