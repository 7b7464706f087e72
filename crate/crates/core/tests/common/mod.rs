#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soco_core::graph::{build_d_regular, GraphSnapshot};
use soco_core::instance::{EdgeCoupling, HittingCostSpec, Instance};

#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub agents: (usize, usize),
    pub dims: (usize, usize),
    pub degrees: &'static [usize],
    pub horizon: usize,
    pub beta: (f64, f64),
    /// Probability that an instance uses random full coupling matrices.
    pub full: f64,
    /// Rebuild the graph with a random node relabeling every few rounds.
    pub dynamic: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self { agents: (3, 12), dims: (1, 3), degrees: &[2, 3, 4], horizon: 10, beta: (0.1, 2.0), full: 0.5, dynamic: false }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick_graph(rng: &mut ChaCha8Rng, n: usize, degrees: &[usize]) -> GraphSnapshot {
    let options: Vec<usize> = degrees.iter().copied().filter(|&d| d < n && (d % 2 == 0 || n % 2 == 0)).collect();
    let degree = if options.is_empty() { 1.min(n - 1) } else { options[rng.gen_range(0..options.len())] };
    if degree == 0 {
        return GraphSnapshot::unweighted(n, &[]).unwrap();
    }
    if degree == 1 {
        let edges: Vec<(usize, usize)> = (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect();
        return GraphSnapshot::unweighted(n, &edges).unwrap();
    }
    build_d_regular(n, degree).unwrap()
}

fn relabel(rng: &mut ChaCha8Rng, g: &GraphSnapshot) -> GraphSnapshot {
    let n = g.n();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (p, q) = (perm[a], perm[b]);
            (p.min(q), p.max(q))
        })
        .collect();
    GraphSnapshot::unweighted(n, &edges).unwrap()
}

fn random_coupling(rng: &mut ChaCha8Rng, d: usize) -> EdgeCoupling {
    let mut a = DMatrix::<f64>::identity(d, d);
    for v in a.iter_mut() {
        *v += rng.gen_range(-0.3..0.3);
    }
    EdgeCoupling::Full(a)
}

fn with_random_couplings(rng: &mut ChaCha8Rng, g: &GraphSnapshot, d: usize) -> GraphSnapshot {
    let c = (0..g.edge_count()).map(|_| random_coupling(rng, d)).collect();
    g.with_couplings(c).unwrap()
}

/// Random quadratic instance with `μᵢ = 2·min_t αᵢ,t`.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> Instance {
    let mut rng = rng(seed);
    let n = rng.gen_range(spec.agents.0..=spec.agents.1);
    let d = rng.gen_range(spec.dims.0..=spec.dims.1);
    let beta = rng.gen_range(spec.beta.0..=spec.beta.1);
    let full = rng.gen_bool(spec.full);
    let mut base = pick_graph(&mut rng, n, spec.degrees);
    if full {
        base = with_random_couplings(&mut rng, &base, d);
    }
    let mut graphs = Vec::with_capacity(spec.horizon);
    let mut current = base.clone();
    for t in 0..spec.horizon {
        if spec.dynamic && t > 0 && rng.gen_bool(0.3) {
            current = relabel(&mut rng, &base);
            if full {
                current = with_random_couplings(&mut rng, &current, d);
            }
        }
        graphs.push(current.clone());
    }
    let (mut m, mut l) = (f64::INFINITY, 0.0f64);
    for g in &graphs {
        for e in 0..g.edge_count() {
            let (lo, hi) = g.coupling(e).squared_singular_range();
            m = m.min(lo);
            l = l.max(hi);
        }
    }
    if !m.is_finite() {
        m = 1.0;
        l = 1.0;
    }
    let alphas: Vec<Vec<f64>> = (0..spec.horizon).map(|_| (0..n).map(|_| rng.gen_range(0.5..2.0)).collect()).collect();
    let mus: Vec<f64> = (0..n).map(|i| 2.0 * alphas.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min)).collect();
    let costs = alphas
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(i, &a)| {
                    let v = DVector::from_fn(d, |_, _| rng.gen_range(-5.0..5.0));
                    HittingCostSpec::quadratic(a, v, mus[i]).unwrap()
                })
                .collect()
        })
        .collect();
    let x0 = (0..n).map(|_| DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0))).collect();
    Instance::new(beta, m, l, costs, graphs, d).unwrap().with_x0(x0).unwrap()
}

pub fn max_diff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}
