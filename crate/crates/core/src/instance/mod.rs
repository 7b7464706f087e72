//! Problem instances: hitting costs, edge couplings, the per-round graph
//! schedule, and the generators for experiment, lower-bound and
//! naive-failure families.

mod generators;
mod json;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::graph::GraphSnapshot;
use crate::{Action, Result, SocoError};

pub use generators::{
    generate_experiment_instance, generate_lower_bound_instance, generate_naive_failure_instance,
    ExperimentParams, LowerBoundVariant, NaiveFailureVariant, MAX_GENERATED_HORIZON,
};
pub use json::CustomRegistry;

/// `alpha · ‖x − v‖²`; strong-convexity parameter `2·alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub alpha: f64,
    pub v: Action,
}

impl QuadraticCost {
    pub fn new(alpha: f64, v: Action) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(SocoError::InvalidParameter(format!("quadratic alpha must be > 0, got {alpha}")));
        }
        Ok(Self { alpha, v })
    }

    pub fn scalar(alpha: f64, v: f64) -> Result<Self> {
        Self::new(alpha, DVector::from_element(1, v))
    }

    pub fn eval(&self, x: &Action) -> f64 {
        self.alpha * (x - &self.v).norm_squared()
    }

    pub fn gradient(&self, x: &Action) -> Action {
        2.0 * self.alpha * (x - &self.v)
    }
}

/// User-supplied hitting cost.
///
/// `local_prox(p, q)` must return the exact minimizer of
/// `f(x) + ½ xᵀ p x − qᵀ x` for symmetric positive-definite `p`.
pub trait CustomCost: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn eval(&self, x: &Action) -> f64;
    fn gradient(&self, x: &Action) -> Action;
    fn local_prox(&self, p: &DMatrix<f64>, q: &Action) -> Result<Action>;
    fn minimizer(&self) -> Option<Action> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum CostKind {
    Quadratic(QuadraticCost),
    Custom(Arc<dyn CustomCost>),
}

impl PartialEq for CostKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CostKind::Quadratic(a), CostKind::Quadratic(b)) => a == b,
            (CostKind::Custom(a), CostKind::Custom(b)) => Arc::ptr_eq(a, b) || a.name() == b.name(),
            _ => false,
        }
    }
}

/// A hitting cost together with its declared strong-convexity parameter μ.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingCostSpec {
    pub kind: CostKind,
    pub mu: f64,
}

impl HittingCostSpec {
    pub fn quadratic(alpha: f64, v: Action, mu: f64) -> Result<Self> {
        let spec = Self { kind: CostKind::Quadratic(QuadraticCost::new(alpha, v)?), mu };
        spec.check()?;
        Ok(spec)
    }

    pub fn custom(cost: Arc<dyn CustomCost>, mu: f64) -> Result<Self> {
        let spec = Self { kind: CostKind::Custom(cost), mu };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(SocoError::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if let CostKind::Quadratic(q) = &self.kind {
            // declared μ must not exceed the true curvature 2α
            if self.mu > 2.0 * q.alpha * (1.0 + 1e-12) {
                return Err(SocoError::InvalidParameter(format!(
                    "declared mu {} exceeds quadratic curvature 2*alpha = {}",
                    self.mu,
                    2.0 * q.alpha
                )));
            }
        }
        Ok(())
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticCost> {
        match &self.kind {
            CostKind::Quadratic(q) => Some(q),
            CostKind::Custom(_) => None,
        }
    }

    pub fn eval(&self, x: &Action) -> f64 {
        match &self.kind {
            CostKind::Quadratic(q) => q.eval(x),
            CostKind::Custom(c) => c.eval(x),
        }
    }

    pub fn gradient(&self, x: &Action) -> Action {
        match &self.kind {
            CostKind::Quadratic(q) => q.gradient(x),
            CostKind::Custom(c) => c.gradient(x),
        }
    }

    /// `argmin_x f(x) + ½ xᵀ p x − qᵀ x`.
    pub fn local_prox(&self, p: &DMatrix<f64>, q: &Action) -> Result<Action> {
        match &self.kind {
            CostKind::Quadratic(quad) => {
                let d = quad.v.len();
                let lhs = p + DMatrix::identity(d, d) * (2.0 * quad.alpha);
                let rhs = q + 2.0 * quad.alpha * &quad.v;
                crate::linalg::spd_solve(lhs, &rhs).map_err(|e| SocoError::ProxFailure(e.to_string()))
            }
            CostKind::Custom(c) => c.local_prox(p, q),
        }
    }

    pub fn minimizer(&self) -> Option<Action> {
        match &self.kind {
            CostKind::Quadratic(q) => Some(q.v.clone()),
            CostKind::Custom(c) => c.minimizer(),
        }
    }
}

/// Coupling matrix `A` on an edge; the dissimilarity cost is `(β/2)‖A xⁱ − A xʲ‖²`.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCoupling {
    ScaledIdentity(f64),
    Full(DMatrix<f64>),
}

impl EdgeCoupling {
    pub fn identity() -> Self {
        EdgeCoupling::ScaledIdentity(1.0)
    }

    /// `AᵀA` as a d×d matrix.
    pub fn gram(&self, d: usize) -> DMatrix<f64> {
        match self {
            EdgeCoupling::ScaledIdentity(w) => DMatrix::identity(d, d) * (w * w),
            EdgeCoupling::Full(a) => a.transpose() * a,
        }
    }

    /// `AᵀA v`.
    pub fn gram_apply(&self, v: &Action) -> Action {
        match self {
            EdgeCoupling::ScaledIdentity(w) => v * (w * w),
            EdgeCoupling::Full(a) => a.transpose() * (a * v),
        }
    }

    /// `‖A v‖²`.
    pub fn squared_norm(&self, v: &Action) -> f64 {
        match self {
            EdgeCoupling::ScaledIdentity(w) => w * w * v.norm_squared(),
            EdgeCoupling::Full(a) => (a * v).norm_squared(),
        }
    }

    /// Smallest and largest squared singular values of `A`.
    pub fn squared_singular_range(&self) -> (f64, f64) {
        match self {
            EdgeCoupling::ScaledIdentity(w) => (w * w, w * w),
            EdgeCoupling::Full(a) => {
                let sv = a.clone().svd(false, false).singular_values;
                (sv.min().powi(2), sv.max().powi(2))
            }
        }
    }

    pub(crate) fn check(&self, d: usize, m: f64, l: f64) -> Result<()> {
        if let EdgeCoupling::Full(a) = self {
            if a.ncols() != d {
                return Err(SocoError::DimensionMismatch { expected: d, got: a.ncols() });
            }
            if a.nrows() < d {
                return Err(SocoError::InvalidInstance(format!(
                    "coupling matrix has {} rows, needs at least d = {d}",
                    a.nrows()
                )));
            }
        }
        let (lo, hi) = self.squared_singular_range();
        let slack = 1e-9 * l.max(1.0);
        if lo < m - slack || hi > l + slack {
            return Err(SocoError::InvalidInstance(format!(
                "coupling squared singular values [{lo}, {hi}] outside [m, l] = [{m}, {l}]"
            )));
        }
        Ok(())
    }
}

/// Full problem description. Costs are indexed `[round][agent]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub horizon: usize,
    pub agents: usize,
    pub dim: usize,
    pub beta: f64,
    pub m: f64,
    pub l: f64,
    pub costs: Vec<Vec<HittingCostSpec>>,
    pub graphs: Vec<GraphSnapshot>,
    pub x0: Vec<Action>,
}

impl Instance {
    /// Builds and validates an instance with all-zero initial actions.
    pub fn new(
        beta: f64,
        m: f64,
        l: f64,
        costs: Vec<Vec<HittingCostSpec>>,
        graphs: Vec<GraphSnapshot>,
        dim: usize,
    ) -> Result<Self> {
        let horizon = costs.len();
        let agents = costs.first().map(|r| r.len()).unwrap_or(0);
        let inst = Self {
            horizon,
            agents,
            dim,
            beta,
            m,
            l,
            costs,
            graphs,
            x0: vec![DVector::zeros(dim); agents],
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_x0(mut self, x0: Vec<Action>) -> Result<Self> {
        self.x0 = x0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.agents == 0 || self.dim == 0 {
            return Err(SocoError::InvalidInstance("T, N and d must be positive".into()));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(SocoError::InvalidInstance(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.m > 0.0) || !(self.m <= self.l) || !self.l.is_finite() {
            return Err(SocoError::InvalidInstance(format!(
                "need 0 < m <= l, got m = {}, l = {}",
                self.m, self.l
            )));
        }
        if self.costs.len() != self.horizon || self.graphs.len() != self.horizon {
            return Err(SocoError::InvalidInstance("costs and graphs must both have length T".into()));
        }
        if self.x0.len() != self.agents || self.x0.iter().any(|x| x.len() != self.dim) {
            return Err(SocoError::InvalidInstance("x0 must hold N vectors of dimension d".into()));
        }
        for (t, row) in self.costs.iter().enumerate() {
            if row.len() != self.agents {
                return Err(SocoError::InvalidInstance(format!("round {t} has {} costs", row.len())));
            }
            for (i, c) in row.iter().enumerate() {
                c.check()?;
                if let Some(q) = c.as_quadratic() {
                    if q.v.len() != self.dim {
                        return Err(SocoError::DimensionMismatch { expected: self.dim, got: q.v.len() });
                    }
                }
                if c.mu != self.costs[0][i].mu {
                    return Err(SocoError::InvalidInstance(format!(
                        "agent {i} declares mu {} at round {t} but {} at round 0",
                        c.mu, self.costs[0][i].mu
                    )));
                }
            }
        }
        for g in &self.graphs {
            if g.n() != self.agents {
                return Err(SocoError::InvalidInstance(format!(
                    "graph has {} nodes, instance has {} agents",
                    g.n(),
                    self.agents
                )));
            }
            for e in 0..g.edge_count() {
                g.coupling(e).check(self.dim, self.m, self.l)?;
            }
        }
        Ok(())
    }

    /// Declared per-agent strong-convexity parameters.
    pub fn mus(&self) -> Vec<f64> {
        self.costs[0].iter().map(|c| c.mu).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.mus().into_iter().map(crate::acord::lambda1_of_mu_unchecked).collect()
    }

    pub fn is_quadratic(&self) -> bool {
        self.costs.iter().flatten().all(|c| c.as_quadratic().is_some())
    }

    /// Index of the first round whose graph differs from round 0, if any.
    pub fn first_graph_change(&self) -> Option<usize> {
        self.graphs.iter().position(|g| g != &self.graphs[0])
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_json(self)
    }

    /// Parses an instance whose costs are all quadratic.
    pub fn from_json(text: &str) -> Result<Self> {
        json::from_json(text, None)
    }

    /// Parses an instance, resolving `custom` cost references through `registry`.
    pub fn from_json_with_registry(text: &str, registry: &CustomRegistry) -> Result<Self> {
        json::from_json(text, Some(registry))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_eval_and_gradient() {
        let q = QuadraticCost::scalar(0.5, 1.0).unwrap();
        let x = DVector::from_element(1, 3.0);
        assert_eq!(q.eval(&x), 2.0);
        assert_eq!(q.gradient(&x)[0], 2.0);
    }

    #[test]
    fn declared_mu_above_curvature_is_rejected() {
        let err = HittingCostSpec::quadratic(0.5, DVector::zeros(1), 1.5).unwrap_err();
        assert!(matches!(err, SocoError::InvalidParameter(_)));
        assert!(HittingCostSpec::quadratic(0.5, DVector::zeros(1), 1.0).is_ok());
        assert!(HittingCostSpec::quadratic(0.5, DVector::zeros(1), 0.0).is_err());
    }

    #[test]
    fn quadratic_prox_is_closed_form() {
        let c = HittingCostSpec::quadratic(0.5, DVector::from_element(1, 1.0), 1.0).unwrap();
        let lam = 0.7;
        let p = DMatrix::from_element(1, 1, lam);
        let q = DVector::from_element(1, lam * 2.0);
        let x = c.local_prox(&p, &q).unwrap();
        assert!((x[0] - (1.0 + lam * 2.0) / (1.0 + lam)).abs() < 1e-15);
    }

    #[test]
    fn coupling_window_is_enforced() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let c = EdgeCoupling::Full(a);
        let (lo, hi) = c.squared_singular_range();
        assert!((lo - 0.25).abs() < 1e-12 && (hi - 4.0).abs() < 1e-12);
        assert!(c.check(2, 0.25, 4.0).is_ok());
        assert!(c.check(2, 0.5, 4.0).is_err());
        assert!(EdgeCoupling::ScaledIdentity(3.0).check(1, 1.0, 4.0).is_err());
    }
}
