//! JSON form of an [`Instance`].
//!
//! ```text
//! { "T": 2, "N": 2, "d": 1, "beta": 1.0, "m": 1.0, "l": 1.0,
//!   "x0": [[0.0], [0.0]],
//!   "costs": [[{"alpha": 0.5, "v": [1.0], "mu": 1.0}, {"custom": "huber", "mu": 0.5}], ...],
//!   "graphs": [[{"i": 0, "j": 1, "w": 1.0}], [{"i": 0, "j": 1, "A": [[1.0]]}]] }
//! ```
//!
//! `x0` is optional (zeros). A single entry in `graphs` is reused for every round.
//! Floats are written in shortest round-trip form, so parsing the output
//! reproduces every value exactly.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CostKind, CustomCost, EdgeCoupling, HittingCostSpec, Instance, QuadraticCost};
use crate::graph::GraphSnapshot;
use crate::{Result, SocoError};

/// Resolves `{"custom": name}` cost references when parsing.
#[derive(Debug, Default, Clone)]
pub struct CustomRegistry {
    costs: HashMap<String, Arc<dyn CustomCost>>,
}

impl CustomRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, cost: Arc<dyn CustomCost>) {
        self.costs.insert(cost.name().to_string(), cost);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn CustomCost>> {
        self.costs.get(name)
    }
}

#[derive(Serialize, Deserialize)]
struct Doc {
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    beta: f64,
    m: f64,
    l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<Vec<f64>>>,
    costs: Vec<Vec<CostDoc>>,
    graphs: Vec<Vec<EdgeDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CostDoc {
    Quadratic { alpha: f64, v: Vec<f64>, mu: f64 },
    Custom { custom: String, mu: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EdgeDoc {
    Full {
        i: usize,
        j: usize,
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
    },
    Scaled {
        i: usize,
        j: usize,
        #[serde(default = "unit")]
        w: f64,
    },
}

fn unit() -> f64 {
    1.0
}

pub(super) fn to_json(inst: &Instance) -> Result<String> {
    let costs = inst
        .costs
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| match &c.kind {
                    CostKind::Quadratic(q) => CostDoc::Quadratic {
                        alpha: q.alpha,
                        v: q.v.iter().copied().collect(),
                        mu: c.mu,
                    },
                    CostKind::Custom(f) => CostDoc::Custom { custom: f.name().to_string(), mu: c.mu },
                })
                .collect()
        })
        .collect();
    let graphs = inst.graphs.iter().map(graph_to_doc).collect();
    let x0 = if inst.x0.iter().all(|x| x.iter().all(|&v| v == 0.0)) {
        None
    } else {
        Some(inst.x0.iter().map(|x| x.iter().copied().collect()).collect())
    };
    let doc = Doc {
        t: inst.horizon,
        n: inst.agents,
        d: inst.dim,
        beta: inst.beta,
        m: inst.m,
        l: inst.l,
        x0,
        costs,
        graphs,
    };
    Ok(serde_json::to_string(&doc)?)
}

fn graph_to_doc(g: &GraphSnapshot) -> Vec<EdgeDoc> {
    g.edges()
        .iter()
        .enumerate()
        .map(|(e, &(i, j))| match g.coupling(e) {
            EdgeCoupling::ScaledIdentity(w) => EdgeDoc::Scaled { i, j, w: *w },
            EdgeCoupling::Full(a) => EdgeDoc::Full {
                i,
                j,
                a: a.row_iter().map(|r| r.iter().copied().collect()).collect(),
            },
        })
        .collect()
}

pub(super) fn from_json(text: &str, registry: Option<&CustomRegistry>) -> Result<Instance> {
    let doc: Doc = serde_json::from_str(text)?;
    if doc.costs.len() != doc.t {
        return Err(SocoError::Parse(format!("expected {} cost rows, found {}", doc.t, doc.costs.len())));
    }
    let mut costs = Vec::with_capacity(doc.t);
    for row in doc.costs {
        if row.len() != doc.n {
            return Err(SocoError::Parse(format!("expected {} costs per round, found {}", doc.n, row.len())));
        }
        let parsed = row
            .into_iter()
            .map(|c| match c {
                CostDoc::Quadratic { alpha, v, mu } => {
                    let q = QuadraticCost::new(alpha, DVector::from_vec(v))?;
                    Ok(HittingCostSpec { kind: CostKind::Quadratic(q), mu })
                }
                CostDoc::Custom { custom, mu } => {
                    let f = registry
                        .and_then(|r| r.get(&custom))
                        .ok_or_else(|| SocoError::Parse(format!("unknown custom cost '{custom}'")))?;
                    Ok(HittingCostSpec { kind: CostKind::Custom(f.clone()), mu })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        costs.push(parsed);
    }
    let graphs = match doc.graphs.len() {
        1 => {
            let g = doc_to_graph(doc.n, &doc.graphs[0], doc.d)?;
            vec![g; doc.t]
        }
        len if len == doc.t => doc
            .graphs
            .iter()
            .map(|edges| doc_to_graph(doc.n, edges, doc.d))
            .collect::<Result<Vec<_>>>()?,
        len => {
            return Err(SocoError::Parse(format!("expected 1 or {} graphs, found {len}", doc.t)));
        }
    };
    let inst = Instance::new(doc.beta, doc.m, doc.l, costs, graphs, doc.d)?;
    match doc.x0 {
        Some(x0) => inst.with_x0(x0.into_iter().map(DVector::from_vec).collect()),
        None => Ok(inst),
    }
}

fn doc_to_graph(n: usize, edges: &[EdgeDoc], d: usize) -> Result<GraphSnapshot> {
    let mut pairs = Vec::with_capacity(edges.len());
    let mut couplings = Vec::with_capacity(edges.len());
    for e in edges {
        match e {
            EdgeDoc::Scaled { i, j, w } => {
                pairs.push((*i, *j));
                couplings.push(EdgeCoupling::ScaledIdentity(*w));
            }
            EdgeDoc::Full { i, j, a } => {
                let rows = a.len();
                let cols = a.first().map(Vec::len).unwrap_or(0);
                if cols != d || a.iter().any(|r| r.len() != cols) {
                    return Err(SocoError::Parse(format!("coupling on edge ({i}, {j}) is not a {rows}x{d} matrix")));
                }
                pairs.push((*i, *j));
                couplings.push(EdgeCoupling::Full(DMatrix::from_row_iterator(
                    rows,
                    cols,
                    a.iter().flatten().copied(),
                )));
            }
        }
    }
    GraphSnapshot::new(n, pairs, couplings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_experiment_instance, ExperimentParams};

    #[derive(Debug)]
    struct Abs;

    impl CustomCost for Abs {
        fn name(&self) -> &str {
            "abs"
        }
        fn eval(&self, x: &crate::Action) -> f64 {
            x.norm_squared()
        }
        fn gradient(&self, x: &crate::Action) -> crate::Action {
            2.0 * x
        }
        fn local_prox(&self, p: &DMatrix<f64>, q: &crate::Action) -> Result<crate::Action> {
            let d = q.len();
            crate::linalg::spd_solve(p + DMatrix::identity(d, d) * 2.0, q)
        }
    }

    #[test]
    fn experiment_instance_round_trips_exactly() {
        let inst = generate_experiment_instance(&ExperimentParams::new(8, 12, 4, 50.0, 3)).unwrap();
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn full_couplings_and_x0_round_trip() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.1, 0.0, 1.0, 0.3, 0.0]);
        let g = GraphSnapshot::new(
            2,
            vec![(0, 1)],
            vec![EdgeCoupling::Full(a)],
        )
        .unwrap();
        let costs = vec![vec![
            HittingCostSpec::quadratic(1.0, DVector::from_vec(vec![0.1, 1.0 / 3.0]), 0.5).unwrap(),
            HittingCostSpec::quadratic(2.0, DVector::from_vec(vec![-7.25, 1e-300]), 0.5).unwrap(),
        ]];
        let inst = Instance::new(1.5, 0.5, 2.0, costs, vec![g], 2)
            .unwrap()
            .with_x0(vec![DVector::from_vec(vec![0.2, -0.4]), DVector::zeros(2)])
            .unwrap();
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn custom_costs_need_a_registry() {
        let text = r#"{"T":1,"N":1,"d":1,"beta":0.0,"m":1.0,"l":1.0,
            "costs":[[{"custom":"abs","mu":1.0}]],"graphs":[[]]}"#;
        assert!(matches!(Instance::from_json(text), Err(SocoError::Parse(_))));
        let mut reg = CustomRegistry::new();
        reg.register(Arc::new(Abs));
        let inst = Instance::from_json_with_registry(text, &reg).unwrap();
        assert!(!inst.is_quadratic());
        let again = Instance::from_json_with_registry(&inst.to_json().unwrap(), &reg).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn single_graph_is_broadcast() {
        let text = r#"{"T":3,"N":2,"d":1,"beta":1.0,"m":1.0,"l":1.0,
            "costs":[[{"alpha":1,"v":[0],"mu":1}, {"alpha":1,"v":[1],"mu":1}],
                     [{"alpha":1,"v":[0],"mu":1}, {"alpha":1,"v":[1],"mu":1}],
                     [{"alpha":1,"v":[0],"mu":1}, {"alpha":1,"v":[1],"mu":1}]],
            "graphs":[[{"i":0,"j":1}]]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.graphs.len(), 3);
        assert_eq!(inst.graphs[2].edge_count(), 1);
    }
}
