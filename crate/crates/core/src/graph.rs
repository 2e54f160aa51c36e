//! Weighted coupling digraphs and the spectral quantities the synchronization
//! criteria consume.
//!
//! Entry `(j, k)` of the weight matrix is the weight of the edge from `k` to
//! `j`, i.e. how strongly oscillator `j` listens to oscillator `k`. The coupling
//! gain is kept outside the weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};

const BALANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    weights: Matrix,
}

/// Structural properties required by the criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connectivity {
    pub balanced: bool,
    pub strongly_connected: bool,
}

impl CouplingGraph {
    /// Validates a weight matrix: square, nonnegative, zero diagonal.
    pub fn new(weights: Matrix) -> Result<Self> {
        let n = weights.dim();
        if n == 0 {
            return Err(Error::Config("graph must have at least one node".into()));
        }
        for j in 0..n {
            if weights[(j, j)] != 0.0 {
                return Err(Error::Config(format!("graph weight ({j},{j}) must be zero")));
            }
            for k in 0..n {
                let w = weights[(j, k)];
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::Config(format!(
                        "graph weight ({j},{k}) = {w} must be finite and >= 0"
                    )));
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows).ok_or_else(|| Error::Config("graph weights must be a square matrix".into()))?;
        Self::new(m)
    }

    /// All-to-all graph with uniform weight.
    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        let mut w = Matrix::zeros(n);
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    w[(j, k)] = weight;
                }
            }
        }
        Self::new(w)
    }

    /// Undirected ring: each node coupled to both neighbours.
    pub fn ring(n: usize, weight: f64) -> Result<Self> {
        let mut w = Matrix::zeros(n);
        if n >= 2 {
            for j in 0..n {
                w[(j, (j + 1) % n)] = weight;
                w[(j, (j + n - 1) % n)] = weight;
            }
        }
        Self::new(w)
    }

    /// Directed cycle `0 → 1 → … → n-1 → 0`.
    pub fn directed_cycle(n: usize, weight: f64) -> Result<Self> {
        let mut w = Matrix::zeros(n);
        if n >= 2 {
            for j in 0..n {
                // node j listens to its predecessor
                w[(j, (j + n - 1) % n)] = weight;
            }
        }
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.weights.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// Same graph with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.weights.scaled(c))
    }

    /// Same graph with nodes relabelled: new node `i` is old node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut w = Matrix::zeros(n);
        for j in 0..n {
            for k in 0..n {
                w[(j, k)] = self.weights[(perm[j], perm[k])];
            }
        }
        Self::new(w)
    }

    /// `L = D − W` with `D` the diagonal of row sums (in-degrees).
    pub fn laplacian(&self) -> Matrix {
        let n = self.len();
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut deg = 0.0;
            for k in 0..n {
                if j != k {
                    l[(j, k)] = -self.weights[(j, k)];
                    deg += self.weights[(j, k)];
                }
            }
            l[(j, j)] = deg;
        }
        l
    }

    pub fn connectivity(&self) -> Connectivity {
        let n = self.len();
        let l = self.laplacian();
        let balanced = (0..n).all(|k| (0..n).map(|j| l[(j, k)]).sum::<f64>().abs() <= BALANCE_TOL);

        // edge k -> j exists when weights[(j, k)] > 0
        let forward = self.reachable_from(0, |from, to| self.weights[(to, from)] > 0.0);
        let backward = self.reachable_from(0, |from, to| self.weights[(from, to)] > 0.0);
        let strongly_connected = forward.iter().all(|&r| r) && backward.iter().all(|&r| r);

        Connectivity {
            balanced,
            strongly_connected,
        }
    }

    fn reachable_from(&self, start: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for (u, mark) in seen.iter_mut().enumerate() {
                if !*mark && edge(v, u) {
                    *mark = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Second-smallest eigenvalue of `(L + Lᵀ)/2`.
    pub fn lambda2(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::Analysis("lambda2 needs at least two nodes".into()));
        }
        let c = self.connectivity();
        if !c.balanced || !c.strongly_connected {
            return Err(Error::Analysis(format!(
                "lambda2 requires a balanced, strongly connected graph (balanced={}, strongly_connected={})",
                c.balanced, c.strongly_connected
            )));
        }
        Ok(symmetric_eigenvalues(&self.laplacian())[1])
    }

    /// `‖L‖∞`, the max row-sum norm of the Laplacian.
    pub fn laplacian_max_norm(&self) -> f64 {
        self.laplacian().max_norm()
    }
}

/// `maxⱼ Σₖ |Lⱼₖ|`.
pub fn max_norm(l: &Matrix) -> f64 {
    l.max_norm()
}

/// Graph description as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Complete {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    Ring {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    Custom {
        #[serde(rename = "N", default)]
        n: Option<usize>,
        weights: Vec<Vec<f64>>,
    },
}

fn unit_weight() -> f64 {
    1.0
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec::Complete { n: 10, weight: 1.0 }
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<CouplingGraph> {
        match self {
            GraphSpec::Complete { n, weight } => CouplingGraph::complete(*n, *weight),
            GraphSpec::Ring { n, weight } => CouplingGraph::ring(*n, *weight),
            GraphSpec::Custom { n, weights } => {
                if let Some(n) = n {
                    if *n != weights.len() {
                        return Err(Error::Config(format!(
                            "graph: N={n} but weights has {} rows",
                            weights.len()
                        )));
                    }
                }
                CouplingGraph::from_rows(weights)
            }
        }
    }
}
