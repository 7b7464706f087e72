//! Undirected per-round graphs, circulant D-regular construction, hop
//! neighborhoods, diameters, and the strong-convexity parameter σ of the
//! decoupled per-round objective.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::instance::EdgeCoupling;
use crate::linalg;
use crate::{Result, SocoError};

/// One round's graph. Edges are stored as `(i, j)` with `i < j`; edge `e`
/// carries `couplings[e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSnapshot {
    n: usize,
    edges: Vec<(usize, usize)>,
    couplings: Vec<EdgeCoupling>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl GraphSnapshot {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, couplings: Vec<EdgeCoupling>) -> Result<Self> {
        if edges.len() != couplings.len() {
            return Err(SocoError::InvalidInstance(format!(
                "{} edges but {} couplings",
                edges.len(),
                couplings.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashMap::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(SocoError::InvalidInstance(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(SocoError::InvalidInstance(format!("self-loop at node {a}")));
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key, e).is_some() {
                return Err(SocoError::InvalidInstance(format!("duplicate edge {key:?}")));
            }
            normalized.push(key);
            adjacency[key.0].push((key.1, e));
            adjacency[key.1].push((key.0, e));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { n, edges: normalized, couplings, adjacency })
    }

    pub fn with_uniform_coupling(n: usize, edges: &[(usize, usize)], coupling: EdgeCoupling) -> Result<Self> {
        Self::new(n, edges.to_vec(), vec![coupling; edges.len()])
    }

    /// Unit-weight identity couplings on every edge.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::with_uniform_coupling(n, edges, EdgeCoupling::identity())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn coupling(&self, e: usize) -> &EdgeCoupling {
        &self.couplings[e]
    }

    /// `(neighbor, edge index)` pairs, sorted by neighbor.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let list = self.adjacency.get(i)?;
        list.binary_search_by_key(&j, |&(k, _)| k).ok().map(|p| list[p].1)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_index(i, j).is_some()
    }

    /// Same topology with new couplings.
    pub fn with_couplings(&self, couplings: Vec<EdgeCoupling>) -> Result<Self> {
        Self::new(self.n, self.edges.clone(), couplings)
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &(w, _) in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Shortest hop count between two nodes.
    pub fn hop_distance(&self, a: usize, b: usize) -> Option<usize> {
        self.bfs_distances(a)[b]
    }

    /// Component label per node, labels numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            for (v, d) in self.bfs_distances(s).iter().enumerate() {
                if d.is_some() {
                    label[v] = next;
                }
            }
            next += 1;
        }
        label
    }
}

/// Circulant D-regular graph: `i ~ i±1, …, i±⌊D/2⌋`, plus `i + N/2` when D is odd.
pub fn build_d_regular(n: usize, degree: usize) -> Result<GraphSnapshot> {
    if degree < 2 || degree >= n || (n * degree) % 2 == 1 {
        return Err(SocoError::InfeasibleGraph { nodes: n, degree });
    }
    let mut edges = Vec::with_capacity(n * degree / 2);
    for i in 0..n {
        for k in 1..=degree / 2 {
            edges.push((i, (i + k) % n));
        }
    }
    if degree % 2 == 1 {
        for i in 0..n / 2 {
            edges.push((i, i + n / 2));
        }
    }
    GraphSnapshot::unweighted(n, &edges)
}

/// Ball of radius `r` around `i` (including `i`), sorted.
pub fn r_hop_neighborhood(g: &GraphSnapshot, i: usize, r: usize) -> Vec<usize> {
    g.bfs_distances(i)
        .iter()
        .enumerate()
        .filter(|(_, d)| matches!(d, Some(d) if *d <= r))
        .map(|(v, _)| v)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diameter {
    /// `None` when the graph is disconnected.
    pub overall: Option<usize>,
    /// Component label per node (see [`GraphSnapshot::components`]).
    pub component: Vec<usize>,
    /// Diameter of each component, indexed by label.
    pub per_component: Vec<usize>,
}

impl Diameter {
    /// Largest finite diameter over all components.
    pub fn max_component(&self) -> usize {
        self.per_component.iter().copied().max().unwrap_or(0)
    }
}

pub fn diameter(g: &GraphSnapshot) -> Diameter {
    let component = g.components();
    let count = component.iter().copied().max().map_or(0, |c| c + 1);
    let mut per_component = vec![0; count];
    for s in 0..g.n() {
        let ecc = g.bfs_distances(s).iter().flatten().copied().max().unwrap_or(0);
        let c = component[s];
        per_component[c] = per_component[c].max(ecc);
    }
    let overall = if count <= 1 { Some(per_component.first().copied().unwrap_or(0)) } else { None };
    Diameter { overall, component, per_component }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Dense symmetric eigensolve of the full block matrix.
    ExactEigen,
    /// Bisection on the Schur complement onto the node block; exact to round-off.
    ExactSchur,
    DregularClosedForm,
    /// Degree-based lower bound, used when the exact solve is too large.
    GeneralLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralReport {
    pub sigma: f64,
    pub method: SpectralMethod,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

const DENSE_LIMIT: usize = 1500;
const SCHUR_NODE_LIMIT: usize = 3000;
const OVERFLOW_LIMIT: usize = 100_000;

/// Smallest eigenvalue of
/// `M = [[diag(μᵢ+λᵢ+2βm·degᵢ), −2βm·B], [−2βm·Bᵀ, 4βm·I]]`,
/// with `B` the unsigned node-edge incidence matrix.
///
/// `M` lower-bounds the Hessian of the decoupled objective with every `AᵀA`
/// replaced by `m·I`; for `d > 1` the Kronecker lift has the same spectrum.
pub fn sigma_exact(g: &GraphSnapshot, mus: &[f64], lambdas: &[f64], beta: f64, m: f64) -> Result<SpectralReport> {
    check_spectral_args(g, mus, lambdas, beta, m)?;
    let n = g.n();
    let e = g.edge_count();
    if n + e > OVERFLOW_LIMIT || n > SCHUR_NODE_LIMIT {
        return Err(SocoError::DimensionOverflow(n + e));
    }
    let bm = beta * m;
    let diag: Vec<f64> = (0..n).map(|i| mus[i] + lambdas[i] + 2.0 * bm * g.degree(i) as f64).collect();
    if n + e <= DENSE_LIMIT {
        let mut mat = DMatrix::zeros(n + e, n + e);
        for i in 0..n {
            mat[(i, i)] = diag[i];
        }
        for (k, &(i, j)) in g.edges().iter().enumerate() {
            let c = n + k;
            mat[(c, c)] = 4.0 * bm;
            for v in [i, j] {
                mat[(v, c)] = -2.0 * bm;
                mat[(c, v)] = -2.0 * bm;
            }
        }
        let sigma = linalg::smallest_eigenvalue(mat);
        return Ok(SpectralReport { sigma, method: SpectralMethod::ExactEigen, lower: None, upper: None });
    }
    Ok(SpectralReport { sigma: sigma_schur(g, &diag, bm), method: SpectralMethod::ExactSchur, lower: None, upper: None })
}

/// `M − sI ≻ 0` iff `s < 4βm` and `S(s) = Dg − sI − (2βm)²/(4βm − s)·Q ≻ 0`
/// with `Q = BBᵀ` the signless Laplacian. `S` is decreasing in `s`, so bisect.
fn sigma_schur(g: &GraphSnapshot, diag: &[f64], bm: f64) -> f64 {
    let n = g.n();
    let mut q = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        q[(i, i)] += 1.0;
        q[(j, j)] += 1.0;
        q[(i, j)] += 1.0;
        q[(j, i)] += 1.0;
    }
    let pd = |s: f64| {
        let mut a = q.clone() * (-4.0 * bm * bm / (4.0 * bm - s));
        for i in 0..n {
            a[(i, i)] += diag[i] - s;
        }
        nalgebra::Cholesky::new(a).is_some()
    };
    let top = 4.0 * bm;
    // just below 4βm the Schur term dominates unless Q = 0
    let mut lo = 0.0;
    let mut hi = top;
    if pd(top * (1.0 - 1e-15)) {
        return top;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

/// Closed-form σ for a D-regular graph with uniform μ and λ, with the sandwich
/// `2(μ+λ)/(2D+κ) ≤ σ ≤ 2(μ+λ)/(D+κ)`, where `κ = (μ+λ)/(2βm)`.
pub fn sigma_dregular(degree: usize, mu: f64, lambda1: f64, beta: f64, m: f64) -> Result<SpectralReport> {
    if degree < 2 {
        return Err(SocoError::InvalidParameter(format!("sandwich bounds need D >= 2, got {degree}")));
    }
    if !(beta > 0.0) || !(m > 0.0) || !(mu > 0.0) || !(lambda1 > 0.0) {
        return Err(SocoError::InvalidParameter("mu, lambda1, beta and m must be positive".into()));
    }
    let dd = degree as f64;
    let bm = beta * m;
    let kappa = (mu + lambda1) / (2.0 * bm);
    let s = (dd + kappa) / 2.0;
    let sigma = 4.0 * bm * kappa / (1.0 + s + ((1.0 - s).powi(2) + 2.0 * dd).sqrt());
    Ok(SpectralReport {
        sigma,
        method: SpectralMethod::DregularClosedForm,
        lower: Some(2.0 * (mu + lambda1) / (2.0 * dd + kappa)),
        upper: Some(2.0 * (mu + lambda1) / (dd + kappa)),
    })
}

/// `½(a + 4βm − √((4βm − a)² + 32(βm)²·D_max))` with `a = minᵢ(μᵢ+λᵢ+2βm·degᵢ)`.
///
/// Exact for D-regular graphs with uniform μ; a lower bound otherwise.
pub fn sigma_lower_bound(g: &GraphSnapshot, mus: &[f64], lambdas: &[f64], beta: f64, m: f64) -> Result<SpectralReport> {
    check_spectral_args(g, mus, lambdas, beta, m)?;
    let bm = beta * m;
    let a = (0..g.n())
        .map(|i| mus[i] + lambdas[i] + 2.0 * bm * g.degree(i) as f64)
        .fold(f64::INFINITY, f64::min);
    let b = 4.0 * bm;
    let dmax = g.max_degree() as f64;
    let sigma = 0.5 * (a + b - ((b - a).powi(2) + 32.0 * bm * bm * dmax).sqrt());
    Ok(SpectralReport { sigma, method: SpectralMethod::GeneralLowerBound, lower: Some(sigma), upper: None })
}

/// [`sigma_exact`], falling back to [`sigma_lower_bound`] on oversized graphs.
pub fn sigma_or_lower_bound(g: &GraphSnapshot, mus: &[f64], lambdas: &[f64], beta: f64, m: f64) -> Result<SpectralReport> {
    match sigma_exact(g, mus, lambdas, beta, m) {
        Err(SocoError::DimensionOverflow(_)) => sigma_lower_bound(g, mus, lambdas, beta, m),
        other => other,
    }
}

fn check_spectral_args(g: &GraphSnapshot, mus: &[f64], lambdas: &[f64], beta: f64, m: f64) -> Result<()> {
    if !(beta > 0.0) || !(m > 0.0) {
        return Err(SocoError::InvalidParameter(format!("sigma needs beta > 0 and m > 0, got {beta}, {m}")));
    }
    if mus.len() != g.n() || lambdas.len() != g.n() {
        return Err(SocoError::DimensionMismatch { expected: g.n(), got: mus.len().min(lambdas.len()) });
    }
    Ok(())
}

/// Parses `i j [w | matrix-file]` lines. `#` starts a comment; an optional
/// `nodes N` line fixes the node count (otherwise the largest index + 1).
/// Matrix files hold whitespace-separated rows and are resolved against `base`.
pub fn parse_edge_list(text: &str, base: Option<&Path>) -> Result<GraphSnapshot> {
    let mut nodes = None;
    let mut edges = Vec::new();
    let mut couplings = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || SocoError::Parse(format!("line {}: cannot parse '{raw}'", lineno + 1));
        if fields[0] == "nodes" {
            nodes = Some(fields.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?);
            continue;
        }
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad());
        }
        let i: usize = fields[0].parse().map_err(|_| bad())?;
        let j: usize = fields[1].parse().map_err(|_| bad())?;
        let coupling = match fields.get(2) {
            None => EdgeCoupling::identity(),
            Some(f) => match f.parse::<f64>() {
                Ok(w) => EdgeCoupling::ScaledIdentity(w),
                Err(_) => {
                    let path = base.map_or_else(|| Path::new(f).to_path_buf(), |b| b.join(f));
                    EdgeCoupling::Full(read_matrix(&path)?)
                }
            },
        };
        edges.push((i, j));
        couplings.push(coupling);
    }
    let n = nodes.unwrap_or_else(|| edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0));
    GraphSnapshot::new(n, edges, couplings)
}

pub fn read_edge_list(path: &Path) -> Result<GraphSnapshot> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path.parent())
}

/// Writes `g` to `path`; Full couplings go to `<stem>.e<k>.mat` next to it.
pub fn write_edge_list(g: &GraphSnapshot, path: &Path) -> Result<()> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("graph");
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut out = format!("nodes {}\n", g.n());
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        match g.coupling(e) {
            EdgeCoupling::ScaledIdentity(w) => {
                let _ = writeln!(out, "{i} {j} {w:?}");
            }
            EdgeCoupling::Full(a) => {
                let name = format!("{stem}.e{e}.mat");
                let mut mat = String::new();
                for row in a.row_iter() {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                    let _ = writeln!(mat, "{}", cells.join(" "));
                }
                fs::write(dir.join(&name), mat)?;
                let _ = writeln!(out, "{i} {j} {name}");
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| SocoError::Parse(format!("{}: bad number '{v}'", path.display()))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(SocoError::Parse(format!("{}: ragged or empty matrix", path.display())));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}
