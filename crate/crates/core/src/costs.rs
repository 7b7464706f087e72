//! Hitting, switching and dissimilarity costs, the decoupled per-round
//! surrogate 𝔽, and cumulative cost reports.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::instance::{EdgeCoupling, Instance};
use crate::{Action, Result, SocoError};

/// Actions `x[t][i]` plus the anchor `x_prev0[i]` used for the first switching cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<Vec<Action>>,
    pub x_prev0: Vec<Action>,
}

impl Trajectory {
    pub fn new(x: Vec<Vec<Action>>, x_prev0: Vec<Action>) -> Self {
        Self { x, x_prev0 }
    }

    /// Action of every agent before round `t`.
    pub fn prev(&self, t: usize) -> &[Action] {
        if t == 0 {
            &self.x_prev0
        } else {
            &self.x[t - 1]
        }
    }

    pub fn check_shape(&self, inst: &Instance) -> Result<()> {
        if self.x.len() != inst.horizon {
            return Err(SocoError::DimensionMismatch { expected: inst.horizon, got: self.x.len() });
        }
        for row in self.x.iter().chain(std::iter::once(&self.x_prev0)) {
            if row.len() != inst.agents {
                return Err(SocoError::DimensionMismatch { expected: inst.agents, got: row.len() });
            }
            if let Some(bad) = row.iter().find(|x| x.len() != inst.dim) {
                return Err(SocoError::DimensionMismatch { expected: inst.dim, got: bad.len() });
            }
        }
        Ok(())
    }

    /// Largest coordinate-wise gap to another trajectory.
    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundCost {
    pub hitting: f64,
    pub switching: f64,
    pub dissimilarity: f64,
}

impl RoundCost {
    pub fn total(&self) -> f64 {
        self.hitting + self.switching + self.dissimilarity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub hitting: f64,
    pub switching: f64,
    pub dissimilarity: f64,
    pub total: f64,
    pub per_round: Vec<RoundCost>,
}

impl CostReport {
    pub fn from_rounds(per_round: Vec<RoundCost>) -> Self {
        let hitting = per_round.iter().map(|r| r.hitting).sum::<f64>();
        let switching = per_round.iter().map(|r| r.switching).sum::<f64>();
        let dissimilarity = per_round.iter().map(|r| r.dissimilarity).sum::<f64>();
        Self { hitting, switching, dissimilarity, total: hitting + switching + dissimilarity, per_round }
    }

    /// `t,hitting,switching,dissimilarity` rows (1-based `t`) and a `total` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,hitting,switching,dissimilarity\n");
        for (t, r) in self.per_round.iter().enumerate() {
            let _ = writeln!(out, "{},{:?},{:?},{:?}", t + 1, r.hitting, r.switching, r.dissimilarity);
        }
        let _ = writeln!(out, "total,{:?},{:?},{:?}", self.hitting, self.switching, self.dissimilarity);
        out
    }
}

/// `(β/2)‖A xi − A xj‖²`.
pub fn dissimilarity(edge: &EdgeCoupling, xi: &Action, xj: &Action, beta: f64) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(SocoError::DimensionMismatch { expected: xi.len(), got: xj.len() });
    }
    if let EdgeCoupling::Full(a) = edge {
        if a.ncols() != xi.len() {
            return Err(SocoError::DimensionMismatch { expected: a.ncols(), got: xi.len() });
        }
    }
    Ok(0.5 * beta * edge.squared_norm(&(xi - xj)))
}

/// Cost of round `t` given the actions `x` and the previous actions `x_prev`.
pub fn round_cost(inst: &Instance, t: usize, x: &[Action], x_prev: &[Action]) -> Result<RoundCost> {
    let mut rc = RoundCost::default();
    for i in 0..inst.agents {
        rc.hitting += inst.costs[t][i].eval(&x[i]);
        rc.switching += 0.5 * (&x[i] - &x_prev[i]).norm_squared();
    }
    let g = &inst.graphs[t];
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        rc.dissimilarity += dissimilarity(g.coupling(e), &x[i], &x[j], inst.beta)?;
    }
    Ok(rc)
}

pub fn total_cost(inst: &Instance, traj: &Trajectory) -> Result<CostReport> {
    traj.check_shape(inst)?;
    let rounds = (0..inst.horizon)
        .map(|t| round_cost(inst, t, &traj.x[t], traj.prev(t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CostReport::from_rounds(rounds))
}

/// Edge-average of endpoint actions, one entry per edge of round `t`.
pub fn edge_averages(inst: &Instance, t: usize, x: &[Action]) -> Vec<Action> {
    inst.graphs[t].edges().iter().map(|&(i, j)| (&x[i] + &x[j]) * 0.5).collect()
}

/// Decoupled objective
/// `𝔽_t(x, z) = Σᵢ fᵢ(xⁱ) + (λᵢ/2)‖xⁱ − x_prevⁱ‖² + β Σ_{e∋i} ‖A(xⁱ − z_e)‖²`.
///
/// `z[e]` belongs to edge `e` of round `t`.
pub fn surrogate_f(
    inst: &Instance,
    t: usize,
    x: &[Action],
    z: &[Action],
    x_prev: &[Action],
    lambdas: &[f64],
) -> Result<f64> {
    let g = &inst.graphs[t];
    if z.len() < g.edge_count() {
        let (i, j) = g.edges()[z.len()];
        return Err(SocoError::MissingEdgeVariable(i, j));
    }
    let mut value = 0.0;
    for i in 0..inst.agents {
        value += inst.costs[t][i].eval(&x[i]) + 0.5 * lambdas[i] * (&x[i] - &x_prev[i]).norm_squared();
    }
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let a = g.coupling(e);
        value += inst.beta * (a.squared_norm(&(&x[i] - &z[e])) + a.squared_norm(&(&x[j] - &z[e])));
    }
    Ok(value)
}

/// Coupled per-round objective
/// `Σᵢ fᵢ(xⁱ) + (λᵢ/2)‖xⁱ − x_prevⁱ‖² + (β/2) Σ_e ‖A(xⁱ − xʲ)‖²`.
pub fn coupled_objective(inst: &Instance, t: usize, x: &[Action], x_prev: &[Action], lambdas: &[f64]) -> f64 {
    let g = &inst.graphs[t];
    let mut value = 0.0;
    for i in 0..inst.agents {
        value += inst.costs[t][i].eval(&x[i]) + 0.5 * lambdas[i] * (&x[i] - &x_prev[i]).norm_squared();
    }
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        value += 0.5 * inst.beta * g.coupling(e).squared_norm(&(&x[i] - &x[j]));
    }
    value
}

/// Gradient of [`coupled_objective`] for each agent.
pub fn coupled_gradient(inst: &Instance, t: usize, x: &[Action], x_prev: &[Action], lambdas: &[f64]) -> Vec<Action> {
    let g = &inst.graphs[t];
    let mut grad: Vec<Action> = (0..inst.agents)
        .map(|i| inst.costs[t][i].gradient(&x[i]) + lambdas[i] * (&x[i] - &x_prev[i]))
        .collect();
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let push = g.coupling(e).gram_apply(&(&x[i] - &x[j])) * inst.beta;
        grad[i] += &push;
        grad[j] -= &push;
    }
    grad
}

/// Max-norm of [`coupled_gradient`].
pub fn stationarity_residual(inst: &Instance, t: usize, x: &[Action], x_prev: &[Action], lambdas: &[f64]) -> f64 {
    coupled_gradient(inst, t, x, x_prev, lambdas).iter().map(DVector::amax).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_d_regular, GraphSnapshot};
    use crate::instance::HittingCostSpec;
    use nalgebra::DMatrix;

    fn s(v: f64) -> Action {
        DVector::from_element(1, v)
    }

    #[test]
    fn dissimilarity_examples() {
        let one = EdgeCoupling::identity();
        assert_eq!(dissimilarity(&one, &s(1.0), &s(3.0), 50.0).unwrap(), 100.0);
        assert_eq!(dissimilarity(&one, &s(2.0), &s(2.0), 50.0).unwrap(), 0.0);
        assert_eq!(dissimilarity(&EdgeCoupling::ScaledIdentity(2.0), &s(0.0), &s(1.0), 1.0).unwrap(), 2.0);
        let a = EdgeCoupling::Full(DMatrix::identity(2, 2));
        assert!(dissimilarity(&a, &s(0.0), &s(1.0), 1.0).is_err());
    }

    #[test]
    fn single_agent_hand_evaluation() {
        let inst = Instance::new(
            0.0,
            1.0,
            1.0,
            vec![vec![HittingCostSpec::quadratic(0.5, s(1.0), 1.0).unwrap()]],
            vec![GraphSnapshot::unweighted(1, &[]).unwrap()],
            1,
        )
        .unwrap();
        let rep = total_cost(&inst, &Trajectory::new(vec![vec![s(1.0)]], vec![s(0.0)])).unwrap();
        assert_eq!((rep.hitting, rep.switching, rep.dissimilarity, rep.total), (0.0, 0.5, 0.0, 0.5));
        let csv = rep.to_csv();
        assert!(csv.starts_with("t,hitting,switching,dissimilarity\n1,0.0,0.5,0.0\n"));
        assert!(csv.ends_with("total,0.0,0.5,0.0\n"));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let inst = Instance::new(
            0.0,
            1.0,
            1.0,
            vec![vec![HittingCostSpec::quadratic(0.5, s(1.0), 1.0).unwrap()]],
            vec![GraphSnapshot::unweighted(1, &[]).unwrap()],
            1,
        )
        .unwrap();
        assert!(total_cost(&inst, &Trajectory::new(vec![], vec![s(0.0)])).is_err());
        assert!(total_cost(&inst, &Trajectory::new(vec![vec![DVector::zeros(2)]], vec![s(0.0)])).is_err());
    }

    #[test]
    fn surrogate_two_agent_expansion() {
        let g = GraphSnapshot::with_uniform_coupling(2, &[(0, 1)], EdgeCoupling::ScaledIdentity(1.5)).unwrap();
        let costs = vec![vec![
            HittingCostSpec::quadratic(0.7, s(1.0), 1.0).unwrap(),
            HittingCostSpec::quadratic(1.3, s(-2.0), 1.0).unwrap(),
        ]];
        let inst = Instance::new(3.0, 1.0, 4.0, costs, vec![g], 1).unwrap();
        let x = [s(0.4), s(-0.9)];
        let xp = [s(0.1), s(0.2)];
        let z = [s(0.25)];
        let lam = [0.6, 0.8];
        let f = surrogate_f(&inst, 0, &x, &z, &xp, &lam).unwrap();
        // symbolic expansion, evaluated by hand
        let expected = 0.7 * 0.36 + 1.3 * 1.21 + 0.3 * 0.09 + 0.4 * 1.21 + 3.0 * 2.25 * (0.0225 + 1.3225);
        assert!((f - expected).abs() < 1e-12);
        assert!(matches!(surrogate_f(&inst, 0, &x, &[], &xp, &lam), Err(SocoError::MissingEdgeVariable(0, 1))));
    }

    #[test]
    fn surrogate_at_edge_averages_is_coupled_objective() {
        let g = build_d_regular(6, 3).unwrap().with_couplings(vec![EdgeCoupling::ScaledIdentity(0.8); 9]).unwrap();
        let costs = vec![(0..6)
            .map(|i| HittingCostSpec::quadratic(0.5 + i as f64, s(i as f64 - 2.0), 1.0).unwrap())
            .collect()];
        let inst = Instance::new(2.5, 0.5, 1.0, costs, vec![g], 1).unwrap();
        let x: Vec<Action> = (0..6).map(|i| s((i * i) as f64 * 0.3 - 1.0)).collect();
        let xp: Vec<Action> = (0..6).map(|i| s(i as f64 * 0.1)).collect();
        let lam = [0.5; 6];
        let z = edge_averages(&inst, 0, &x);
        let f = surrogate_f(&inst, 0, &x, &z, &xp, &lam).unwrap();
        let c = coupled_objective(&inst, 0, &x, &xp, &lam);
        assert!((f - c).abs() <= 1e-12 * c.abs());
    }

    #[test]
    fn zero_beta_surrogate_ignores_z() {
        let ring = build_d_regular(4, 2).unwrap();
        let costs = vec![(0..4).map(|_| HittingCostSpec::quadratic(1.0, s(1.0), 1.0).unwrap()).collect()];
        let inst = Instance::new(0.0, 1.0, 1.0, costs, vec![ring], 1).unwrap();
        let x = vec![s(0.5); 4];
        let xp = vec![s(0.0); 4];
        let a = surrogate_f(&inst, 0, &x, &vec![s(7.0); 4], &xp, &[0.5; 4]).unwrap();
        let b = surrogate_f(&inst, 0, &x, &vec![s(-3.0); 4], &xp, &[0.5; 4]).unwrap();
        assert_eq!(a, b);
    }
}
