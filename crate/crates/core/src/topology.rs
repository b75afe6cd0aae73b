//! Communication graphs and doubly stochastic mixing matrices.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng as _;
use thiserror::Error;

use crate::linalg::{spectral_norm, DenseMatrix, LinalgError};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("graph needs at least {min} agents, got {m}")]
    TooFewAgents { m: usize, min: usize },
    #[error("edge probability must lie in (0, 1], got {0}")]
    BadProbability(f64),
    #[error("graph still disconnected after {attempts} attempts")]
    Disconnected { attempts: usize },
    #[error("graph is not connected")]
    NotConnected,
    #[error("uniform weights require a complete graph")]
    NotComplete,
    #[error("invalid edge {0}-{1}")]
    BadEdge(usize, usize),
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mixing matrix check failed: {0}")]
    Invariant(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Undirected simple graph on agents `0..m`; self-communication is implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TopologyError> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j || i >= m || j >= m {
                return Err(TopologyError::BadEdge(i, j));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Graph { m, edges: set })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.m];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.m * (self.m - 1) / 2
    }

    pub fn is_connected(&self) -> bool {
        if self.m == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.m];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.m];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.m
    }

    /// `m <count>` followed by one ascending `<i> <j>` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("m {}\n", self.m);
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(TopologyError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let m = header
            .strip_prefix("m ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or(TopologyError::Parse {
                line: 1,
                message: format!("expected `m <count>`, got `{header}`"),
            })?;
        let mut edges = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = || TopologyError::Parse {
                line: idx + 1,
                message: format!("expected `<i> <j>`, got `{line}`"),
            };
            let mut it = line.split_whitespace();
            let i = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
            let j = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
            if it.next().is_some() {
                return Err(parse_err());
            }
            edges.push((i, j));
        }
        Graph::new(m, edges)
    }
}

pub fn ring(m: usize) -> Result<Graph, TopologyError> {
    if m < 3 {
        return Err(TopologyError::TooFewAgents { m, min: 3 });
    }
    Graph::new(m, (0..m).map(|i| (i, (i + 1) % m)))
}

pub fn complete(m: usize) -> Result<Graph, TopologyError> {
    if m < 2 {
        return Err(TopologyError::TooFewAgents { m, min: 2 });
    }
    Graph::new(m, (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))))
}

/// G(m, p) sample. Each candidate pair `(i, j)`, `i < j`, in lexicographic
/// order consumes one uniform draw `u` and is kept when `u < p`.
/// Disconnected samples are redrawn with seeds `seed + 1, seed + 2, …`.
pub fn erdos_renyi(m: usize, p: f64, seed: u64, max_resamples: usize) -> Result<Graph, TopologyError> {
    if m < 2 {
        return Err(TopologyError::TooFewAgents { m, min: 2 });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(TopologyError::BadProbability(p));
    }
    for attempt in 0..=max_resamples {
        let mut rng = rng::seeded(seed.wrapping_add(attempt as u64));
        let mut edges = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let u: f64 = rng.random();
                if u < p {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::new(m, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(TopologyError::Disconnected {
        attempts: max_resamples + 1,
    })
}

/// Tolerance for the double-stochasticity and symmetry checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;
const RHO_TOL: f64 = 1e-13;
const RHO_MAX_ITERS: usize = 1_000_000;

/// Symmetric doubly stochastic `W` respecting a graph, with its
/// connectivity `rho = ‖W - (1/m)11ᵀ‖₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMatrix {
    w: DenseMatrix,
    rho: f64,
}

impl MixingMatrix {
    /// Validate and wrap an explicit weight matrix for graph `g`.
    pub fn from_weights(g: &Graph, w: DenseMatrix) -> Result<Self, TopologyError> {
        let rho = connectivity(&w)?;
        let mm = MixingMatrix { w, rho };
        mm.check(g)?;
        Ok(mm)
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn m(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    /// Assumption checks: sparsity pattern, symmetry, row/column sums, `rho < 1`.
    pub fn check(&self, g: &Graph) -> Result<(), TopologyError> {
        let m = self.w.rows();
        if self.w.cols() != m || g.m() != m {
            return Err(TopologyError::Invariant("shape does not match graph".into()));
        }
        for i in 0..m {
            let mut row = 0.0;
            let mut col = 0.0;
            for j in 0..m {
                let wij = self.w[(i, j)];
                if !wij.is_finite() || wij < 0.0 {
                    return Err(TopologyError::Invariant(format!("w[{i},{j}] = {wij}")));
                }
                if i != j && wij != 0.0 && !g.has_edge(i, j) {
                    return Err(TopologyError::Invariant(format!(
                        "w[{i},{j}] nonzero without edge"
                    )));
                }
                if (wij - self.w[(j, i)]).abs() > STOCHASTIC_TOL {
                    return Err(TopologyError::Invariant(format!("asymmetric at ({i},{j})")));
                }
                row += wij;
                col += self.w[(j, i)];
            }
            if (row - 1.0).abs() > STOCHASTIC_TOL || (col - 1.0).abs() > STOCHASTIC_TOL {
                return Err(TopologyError::Invariant(format!(
                    "row/column {i} sums to {row}/{col}"
                )));
            }
        }
        if !(self.rho < 1.0) {
            return Err(TopologyError::Invariant(format!("rho = {} is not < 1", self.rho)));
        }
        Ok(())
    }

    /// Conjugate by a relabeling: new agent `perm[i]` is old agent `i`.
    pub fn permuted(&self, perm: &[usize]) -> MixingMatrix {
        let m = self.m();
        let mut w = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                w[(perm[i], perm[j])] = self.w[(i, j)];
            }
        }
        MixingMatrix { w, rho: self.rho }
    }
}

fn connectivity(w: &DenseMatrix) -> Result<f64, TopologyError> {
    let m = w.rows();
    let dev = w.sub(&DenseMatrix::filled(m, m, 1.0 / m as f64))?;
    Ok(spectral_norm(&dev, RHO_TOL, RHO_MAX_ITERS)?)
}

/// Metropolis–Hastings weights `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges,
/// with the remainder on the diagonal.
pub fn metropolis_weights(g: &Graph) -> Result<MixingMatrix, TopologyError> {
    if !g.is_connected() {
        return Err(TopologyError::NotConnected);
    }
    let m = g.m();
    let deg = g.degrees();
    let mut w = DenseMatrix::zeros(m, m);
    for (i, j) in g.edges() {
        let v = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..m {
        let mut off = 0.0;
        for j in 0..m {
            if j != i {
                off += w[(i, j)];
            }
        }
        w[(i, i)] = 1.0 - off;
    }
    MixingMatrix::from_weights(g, w)
}

/// `W = (1/m)11ᵀ` on a complete graph; `rho` is exactly zero.
pub fn uniform_weights(g: &Graph) -> Result<MixingMatrix, TopologyError> {
    if g.m() < 2 || !g.is_complete() {
        return Err(TopologyError::NotComplete);
    }
    let m = g.m();
    let w = DenseMatrix::filled(m, m, 1.0 / m as f64);
    let mm = MixingMatrix { w, rho: 0.0 };
    mm.check(g)?;
    Ok(mm)
}
