//! Centralized reference solvers: the exact per-round decoupled-ROBD step, the
//! offline hindsight optimum, and a plain alternating-minimization reference.

use nalgebra::{DMatrix, DVector};

use crate::costs::{coupled_gradient, edge_averages, stationarity_residual, surrogate_f, total_cost, CostReport, Trajectory};
use crate::instance::{EdgeCoupling, HittingCostSpec, Instance};
use crate::linalg;
use crate::{Action, Result, SocoError};

const DENSE_LIMIT: usize = 2000;
const OFFLINE_DIRECT_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000 }
    }
}

impl SolveConfig {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(SocoError::InvalidParameter(format!("tol must be > 0, got {tol}")));
        }
        Ok(Self { tol, max_iter })
    }
}

/// Joint minimizer of the decoupled objective for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSolution {
    pub x: Vec<Action>,
    /// Edge averages, indexed like the round's edges.
    pub z: Vec<Action>,
    /// `𝔽_t(x, z)`.
    pub value: f64,
}

/// One agent's x-step:
/// `argmin f(x) + (λ/2)‖x − x_prev‖² + β Σ_e ‖A_e(x − z_e)‖²`.
pub fn local_x_step(
    cost: &HittingCostSpec,
    lambda: f64,
    x_prev: &Action,
    beta: f64,
    incident: &[(&EdgeCoupling, &Action)],
) -> Result<Action> {
    let scaled = incident.iter().all(|(a, _)| matches!(a, EdgeCoupling::ScaledIdentity(_)));
    if let (Some(q), true) = (cost.as_quadratic(), scaled) {
        let mut num = 2.0 * q.alpha * &q.v + lambda * x_prev;
        let mut den = 2.0 * q.alpha + lambda;
        for (a, z) in incident {
            if let EdgeCoupling::ScaledIdentity(w) = a {
                num.axpy(2.0 * beta * w * w, z, 1.0);
                den += 2.0 * beta * w * w;
            }
        }
        return Ok(num / den);
    }
    let d = x_prev.len();
    let mut p = DMatrix::identity(d, d) * lambda;
    let mut rhs = lambda * x_prev;
    for (a, z) in incident {
        p += a.gram(d) * (2.0 * beta);
        rhs += a.gram_apply(z) * (2.0 * beta);
    }
    cost.local_prox(&p, &rhs)
}

/// Solves one round of decoupled ROBD exactly.
///
/// Quadratic costs: the coupled stationarity system
/// `∇fᵢ + λᵢ(xⁱ − x_prevⁱ) + β Σⱼ AᵀA(xⁱ − xʲ) = 0`, dense Cholesky up to
/// `Nd = 2000` and conjugate gradient beyond. Custom costs: block
/// Gauss-Seidel sweeps through `local_prox` until the residual is below `tol`.
pub fn robd_round_exact(inst: &Instance, t: usize, x_prev: &[Action], cfg: &SolveConfig) -> Result<RoundSolution> {
    let lambdas = inst.lambdas();
    let x = if inst.costs[t].iter().all(|c| c.as_quadratic().is_some()) {
        quadratic_round(inst, t, x_prev, &lambdas, cfg)?
    } else {
        gauss_seidel_round(inst, t, x_prev, &lambdas, cfg)?
    };
    let z = edge_averages(inst, t, &x);
    let value = surrogate_f(inst, t, &x, &z, x_prev, &lambdas)?;
    Ok(RoundSolution { x, z, value })
}

fn quadratic_round(inst: &Instance, t: usize, x_prev: &[Action], lambdas: &[f64], cfg: &SolveConfig) -> Result<Vec<Action>> {
    let (n, d) = (inst.agents, inst.dim);
    let g = &inst.graphs[t];
    let mut rhs = DVector::zeros(n * d);
    let mut diag_scalar = vec![0.0; n];
    for i in 0..n {
        let q = inst.costs[t][i].as_quadratic().expect("checked quadratic");
        let b = 2.0 * q.alpha * &q.v + lambdas[i] * &x_prev[i];
        rhs.rows_mut(i * d, d).copy_from(&b);
        diag_scalar[i] = 2.0 * q.alpha + lambdas[i];
    }
    let grams: Vec<DMatrix<f64>> = (0..g.edge_count()).map(|e| g.coupling(e).gram(d) * inst.beta).collect();
    let flat = if n * d <= DENSE_LIMIT {
        let mut h = DMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for k in 0..d {
                h[(i * d + k, i * d + k)] = diag_scalar[i];
            }
        }
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            let bg = &grams[e];
            let mut add = |r: usize, c: usize, s: f64| {
                let mut blk = h.view_mut((r * d, c * d), (d, d));
                blk += bg * s;
            };
            add(i, i, 1.0);
            add(j, j, 1.0);
            add(i, j, -1.0);
            add(j, i, -1.0);
        }
        linalg::spd_solve(h, &rhs)?
    } else {
        let mut jacobi = DVector::zeros(n * d);
        for i in 0..n {
            for k in 0..d {
                jacobi[i * d + k] = diag_scalar[i];
            }
        }
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            for k in 0..d {
                jacobi[i * d + k] += grams[e][(k, k)];
                jacobi[j * d + k] += grams[e][(k, k)];
            }
        }
        let apply = |v: &DVector<f64>| {
            let mut out = DVector::zeros(n * d);
            for i in 0..n {
                let mut seg = out.rows_mut(i * d, d);
                seg += v.rows(i * d, d) * diag_scalar[i];
            }
            for (e, &(i, j)) in g.edges().iter().enumerate() {
                let diff = v.rows(i * d, d) - v.rows(j * d, d);
                let push = &grams[e] * diff;
                let mut a = out.rows_mut(i * d, d);
                a += &push;
                let mut b = out.rows_mut(j * d, d);
                b -= &push;
            }
            out
        };
        let x0 = DVector::from_iterator(n * d, x_prev.iter().flat_map(|x| x.iter().copied()));
        linalg::conjugate_gradient(apply, &jacobi, &rhs, x0, cfg.tol * 1e-2, cfg.max_iter)?
    };
    Ok((0..n).map(|i| flat.rows(i * d, d).into_owned()).collect())
}

fn gauss_seidel_round(inst: &Instance, t: usize, x_prev: &[Action], lambdas: &[f64], cfg: &SolveConfig) -> Result<Vec<Action>> {
    let d = inst.dim;
    let g = &inst.graphs[t];
    let mut x = x_prev.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        for i in 0..inst.agents {
            let mut p = DMatrix::identity(d, d) * lambdas[i];
            let mut q = lambdas[i] * &x_prev[i];
            for &(j, e) in g.neighbors(i) {
                let a = g.coupling(e);
                p += a.gram(d) * inst.beta;
                q += a.gram_apply(&x[j]) * inst.beta;
            }
            x[i] = inst.costs[t][i].local_prox(&p, &q)?;
        }
        residual = stationarity_residual(inst, t, &x, x_prev, lambdas);
        if residual <= cfg.tol {
            return Ok(x);
        }
    }
    Err(SocoError::NonConvergence { iterations: cfg.max_iter, residual })
}

/// One alternating-minimization iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct AmIterate {
    pub x: Vec<Action>,
    pub z: Vec<Action>,
    pub value: f64,
}

/// Runs `k` exact alternating-minimization passes on the decoupled objective
/// from the warm start `x₀ = x_prev`, `z₀ = edge averages of x_prev`.
///
/// The returned history holds the start and every iterate (`k + 1` entries).
pub fn am_reference(inst: &Instance, t: usize, x_prev: &[Action], k: usize) -> Result<Vec<AmIterate>> {
    if k == 0 {
        return Err(SocoError::InvalidParameter("K must be >= 1".into()));
    }
    let lambdas = inst.lambdas();
    let g = &inst.graphs[t];
    let mut x = x_prev.to_vec();
    let mut z = edge_averages(inst, t, &x);
    let mut history = vec![AmIterate { value: surrogate_f(inst, t, &x, &z, x_prev, &lambdas)?, x: x.clone(), z: z.clone() }];
    for _ in 0..k {
        x = (0..inst.agents)
            .map(|i| {
                let incident: Vec<(&EdgeCoupling, &Action)> =
                    g.neighbors(i).iter().map(|&(_, e)| (g.coupling(e), &z[e])).collect();
                local_x_step(&inst.costs[t][i], lambdas[i], &x_prev[i], inst.beta, &incident)
            })
            .collect::<Result<_>>()?;
        z = edge_averages(inst, t, &x);
        history.push(AmIterate { value: surrogate_f(inst, t, &x, &z, x_prev, &lambdas)?, x: x.clone(), z: z.clone() });
    }
    Ok(history)
}

/// Hindsight-optimal trajectory minimizing the cumulative cost, with its cost.
pub fn offline_opt(inst: &Instance, cfg: &SolveConfig) -> Result<(Trajectory, CostReport)> {
    let nodes: Vec<usize> = (0..inst.agents).collect();
    let x = window_qp(inst, 0, inst.horizon, &nodes, &vec![true; inst.agents], &inst.x0, cfg)?;
    let traj = Trajectory::new(x, inst.x0.clone());
    let report = total_cost(inst, &traj)?;
    Ok((traj, report))
}

/// Minimizes, over `x_τ^a` for `a ∈ nodes` and `τ ∈ [t0, t0 + w)`,
/// `Σ_τ Σ_{a: hit[a]} f_τ^a + Σ_a ½‖x_τ^a − x_{τ−1}^a‖² + Σ_{e ⊆ nodes} (β/2)‖A(x_τ^a − x_τ^b)‖²`
/// with `x_{t0−1}^a = anchor[a]`. Quadratic costs only.
///
/// Block-tridiagonal in time; block LDLᵀ when the system is small enough,
/// Jacobi-preconditioned conjugate gradient otherwise. Returns `[τ][a]`.
pub(crate) fn window_qp(
    inst: &Instance,
    t0: usize,
    w: usize,
    nodes: &[usize],
    hit: &[bool],
    anchor: &[Action],
    cfg: &SolveConfig,
) -> Result<Vec<Vec<Action>>> {
    let bs = nodes.len() * inst.dim;
    let direct = bs <= DENSE_LIMIT && w * bs <= OFFLINE_DIRECT_LIMIT;
    window_qp_with(inst, t0, w, nodes, hit, anchor, cfg, direct)
}

#[allow(clippy::too_many_arguments)]
fn window_qp_with(
    inst: &Instance,
    t0: usize,
    w: usize,
    nodes: &[usize],
    hit: &[bool],
    anchor: &[Action],
    cfg: &SolveConfig,
    direct: bool,
) -> Result<Vec<Vec<Action>>> {
    let d = inst.dim;
    let nl = nodes.len();
    let bs = nl * d;
    let mut local = vec![usize::MAX; inst.agents];
    for (a, &v) in nodes.iter().enumerate() {
        local[v] = a;
    }
    // per-round coupling edges inside `nodes`, as (local a, local b, β·AᵀA)
    let mut inner: Vec<Vec<(usize, usize, DMatrix<f64>)>> = Vec::with_capacity(w);
    let mut curv: Vec<Vec<f64>> = Vec::with_capacity(w);
    let mut rhs: Vec<DVector<f64>> = Vec::with_capacity(w);
    for s in 0..w {
        let t = t0 + s;
        let g = &inst.graphs[t];
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| local[i] != usize::MAX && local[j] != usize::MAX)
            .map(|(e, &(i, j))| (local[i], local[j], g.coupling(e).gram(d) * inst.beta))
            .collect();
        inner.push(edges);
        let mut c = vec![0.0; nl];
        let mut b = DVector::zeros(bs);
        for (a, &v) in nodes.iter().enumerate() {
            if hit[a] {
                let q = inst.costs[t][v]
                    .as_quadratic()
                    .ok_or_else(|| SocoError::UnsupportedCost("quadratic program needs quadratic hitting costs".into()))?;
                c[a] = 2.0 * q.alpha;
                b.rows_mut(a * d, d).copy_from(&(2.0 * q.alpha * &q.v));
            }
            if s == 0 {
                let mut seg = b.rows_mut(a * d, d);
                seg += &anchor[a];
            }
        }
        curv.push(c);
        rhs.push(b);
    }
    let switching = |s: usize| if s + 1 < w { 2.0 } else { 1.0 };
    let flat = if direct {
        let diag: Vec<DMatrix<f64>> = (0..w)
            .map(|s| {
                let mut m = DMatrix::zeros(bs, bs);
                for a in 0..nl {
                    for k in 0..d {
                        m[(a * d + k, a * d + k)] = curv[s][a] + switching(s);
                    }
                }
                for (a, b, gram) in &inner[s] {
                    let mut add = |r: usize, c: usize, sign: f64| {
                        let mut blk = m.view_mut((r * d, c * d), (d, d));
                        blk += gram * sign;
                    };
                    add(*a, *a, 1.0);
                    add(*b, *b, 1.0);
                    add(*a, *b, -1.0);
                    add(*b, *a, -1.0);
                }
                m
            })
            .collect();
        let sub = vec![-DMatrix::identity(bs, bs); w.saturating_sub(1)];
        linalg::block_tridiagonal_solve(diag, &sub, &rhs)?
    } else {
        let total = w * bs;
        let mut jacobi = DVector::zeros(total);
        let mut b = DVector::zeros(total);
        for s in 0..w {
            b.rows_mut(s * bs, bs).copy_from(&rhs[s]);
            for a in 0..nl {
                for k in 0..d {
                    jacobi[s * bs + a * d + k] = curv[s][a] + switching(s);
                }
            }
            for (a, bb, gram) in &inner[s] {
                for k in 0..d {
                    jacobi[s * bs + a * d + k] += gram[(k, k)];
                    jacobi[s * bs + bb * d + k] += gram[(k, k)];
                }
            }
        }
        let apply = |v: &DVector<f64>| {
            let mut out = DVector::zeros(total);
            for s in 0..w {
                let vs = v.rows(s * bs, bs);
                let mut os = out.rows_mut(s * bs, bs);
                for a in 0..nl {
                    let scale = curv[s][a] + switching(s);
                    let mut seg = os.rows_mut(a * d, d);
                    seg += vs.rows(a * d, d) * scale;
                }
                for (a, bb, gram) in &inner[s] {
                    let push = gram * (vs.rows(a * d, d) - vs.rows(bb * d, d));
                    let mut sa = os.rows_mut(a * d, d);
                    sa += &push;
                    let mut sb = os.rows_mut(bb * d, d);
                    sb -= &push;
                }
                if s > 0 {
                    os -= v.rows((s - 1) * bs, bs);
                }
                if s + 1 < w {
                    os -= v.rows((s + 1) * bs, bs);
                }
            }
            out
        };
        let sol = linalg::conjugate_gradient(apply, &jacobi, &b, DVector::zeros(total), cfg.tol * 1e-2, cfg.max_iter)?;
        (0..w).map(|s| sol.rows(s * bs, bs).into_owned()).collect()
    };
    Ok(flat
        .into_iter()
        .map(|blk| (0..nl).map(|a| blk.rows(a * d, d).into_owned()).collect())
        .collect())
}

/// Max-norm of the gradient of the cumulative cost at `traj`.
pub fn offline_gradient_residual(inst: &Instance, traj: &Trajectory) -> f64 {
    let zeros = vec![0.0; inst.agents];
    let mut worst: f64 = 0.0;
    for t in 0..inst.horizon {
        let mut grad = coupled_gradient(inst, t, &traj.x[t], traj.prev(t), &zeros);
        for i in 0..inst.agents {
            grad[i] += &traj.x[t][i] - &traj.prev(t)[i];
            if t + 1 < inst.horizon {
                grad[i] += &traj.x[t][i] - &traj.x[t + 1][i];
            }
            worst = worst.max(grad[i].amax());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_d_regular, GraphSnapshot};
    use crate::instance::{generate_lower_bound_instance, LowerBoundVariant};
    use approx::assert_relative_eq;

    fn s(v: f64) -> Action {
        DVector::from_element(1, v)
    }

    fn single(alpha: f64, v: f64, mu: f64) -> Instance {
        Instance::new(
            0.0,
            1.0,
            1.0,
            vec![vec![HittingCostSpec::quadratic(alpha, s(v), mu).unwrap()]],
            vec![GraphSnapshot::unweighted(1, &[]).unwrap()],
            1,
        )
        .unwrap()
    }

    #[test]
    fn single_agent_robd_step() {
        let inst = single(0.5, 1.0, 1.0);
        let sol = robd_round_exact(&inst, 0, &[s(0.0)], &SolveConfig::default()).unwrap();
        assert_relative_eq!(sol.x[0][0], 0.6180339887498948, max_relative = 1e-14);
    }

    #[test]
    fn huge_coupling_forces_consensus() {
        let g = GraphSnapshot::unweighted(2, &[(0, 1)]).unwrap();
        let costs = vec![vec![
            HittingCostSpec::quadratic(1.0, s(5.0), 1.0).unwrap(),
            HittingCostSpec::quadratic(1.0, s(-5.0), 1.0).unwrap(),
        ]];
        let inst = Instance::new(1e8, 1.0, 1.0, costs, vec![g], 1).unwrap();
        let sol = robd_round_exact(&inst, 0, &[s(0.0), s(0.0)], &SolveConfig::default()).unwrap();
        assert!(sol.x[0][0].abs() < 1e-3 && sol.x[1][0].abs() < 1e-3);
    }

    #[test]
    fn offline_single_round_hand_qp() {
        let inst = single(0.5, 1.0, 1.0);
        let (traj, rep) = offline_opt(&inst, &SolveConfig::default()).unwrap();
        assert_relative_eq!(traj.x[0][0][0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(rep.total, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn offline_cg_path_matches_direct() {
        let inst = generate_lower_bound_instance(3, 40, 1.0, 50.0, LowerBoundVariant::Symmetric, 2.0).unwrap();
        let nodes = [0, 1, 2];
        let cfg = SolveConfig::default();
        let cg = window_qp_with(&inst, 0, inst.horizon, &nodes, &[true; 3], &inst.x0, &cfg, false).unwrap();
        let cg = Trajectory::new(cg, inst.x0.clone());
        assert!(offline_gradient_residual(&inst, &cg) < 1e-9);
        let (opt, _) = offline_opt(&inst, &cfg).unwrap();
        assert!(offline_gradient_residual(&inst, &opt) < 1e-10);
        assert!(opt.max_abs_diff(&cg) < 1e-9);
    }

    #[test]
    fn gauss_seidel_matches_direct_solve() {
        let g = build_d_regular(5, 2).unwrap();
        let costs = vec![(0..5)
            .map(|i| HittingCostSpec::quadratic(0.5 + 0.2 * i as f64, s(i as f64), 1.0).unwrap())
            .collect()];
        let inst = Instance::new(3.0, 1.0, 1.0, costs, vec![g], 1).unwrap();
        let xp: Vec<Action> = (0..5).map(|i| s(-(i as f64))).collect();
        let lam = inst.lambdas();
        let cfg = SolveConfig::default();
        let direct = quadratic_round(&inst, 0, &xp, &lam, &cfg).unwrap();
        let gs = gauss_seidel_round(&inst, 0, &xp, &lam, &cfg).unwrap();
        for i in 0..5 {
            assert!((direct[i][0] - gs[i][0]).abs() < 1e-9);
        }
        assert!(stationarity_residual(&inst, 0, &direct, &xp, &lam) < 1e-12);
    }

    #[test]
    fn am_without_coupling_is_one_step() {
        let g = build_d_regular(4, 2).unwrap();
        let costs = vec![(0..4).map(|i| HittingCostSpec::quadratic(1.0, s(i as f64), 2.0).unwrap()).collect()];
        let inst = Instance::new(0.0, 1.0, 1.0, costs, vec![g], 1).unwrap();
        let xp = vec![s(0.5); 4];
        let hist = am_reference(&inst, 0, &xp, 1).unwrap();
        let exact = robd_round_exact(&inst, 0, &xp, &SolveConfig::default()).unwrap();
        for i in 0..4 {
            assert_relative_eq!(hist[1].x[i][0], exact.x[i][0], max_relative = 1e-14);
        }
        assert!(am_reference(&inst, 0, &xp, 0).is_err());
    }
}
