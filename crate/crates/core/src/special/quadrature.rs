use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported rule order. Hermite polynomial values at the outermost
/// nodes overflow `f64` not far beyond this.
pub const MAX_ORDER: usize = 256;

/// Half-width of the interval a Gauss–Legendre rule is mapped onto when it
/// is used for standard-normal expectations.
pub const GAUSSIAN_CUTOFF: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    /// Nodes and weights for the standard normal measure `Dy`.
    GaussHermiteProbabilist,
    /// Nodes and weights for `dx` on `[-1, 1]`.
    GaussLegendre,
}

/// An `order`-point Gaussian quadrature rule, exact for polynomials of
/// degree `2 * order - 1` against its measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Nodes/weights against `Dy`, identical to `nodes`/`weights` for the
    /// Hermite kind.
    gauss_nodes: Vec<f64>,
    gauss_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(kind: QuadratureKind, order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Argument(format!(
                "quadrature order must be in 1..={MAX_ORDER}, got {order}"
            )));
        }
        let (nodes, weights) = match kind {
            QuadratureKind::GaussHermiteProbabilist => hermite_probabilist(order),
            QuadratureKind::GaussLegendre => legendre(order),
        };
        let (gauss_nodes, gauss_weights) = match kind {
            QuadratureKind::GaussHermiteProbabilist => (nodes.clone(), weights.clone()),
            QuadratureKind::GaussLegendre => {
                let c = GAUSSIAN_CUTOFF;
                let norm = (2.0 * std::f64::consts::PI).sqrt();
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&x, &w)| {
                        let y = c * x;
                        (y, w * c * (-0.5 * y * y).exp() / norm)
                    })
                    .unzip()
            }
        };
        Ok(Self {
            kind,
            nodes,
            weights,
            gauss_nodes,
            gauss_weights,
        })
    }

    pub fn hermite(order: usize) -> Result<Self> {
        Self::new(QuadratureKind::GaussHermiteProbabilist, order)
    }

    pub fn legendre(order: usize) -> Result<Self> {
        Self::new(QuadratureKind::GaussLegendre, order)
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights for expectations against the standard normal.
    pub fn gaussian_nodes(&self) -> (&[f64], &[f64]) {
        (&self.gauss_nodes, &self.gauss_weights)
    }

    /// `∫ Dy f(y)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.gauss_nodes
            .iter()
            .zip(&self.gauss_weights)
            .map(|(&y, &w)| w * f(y))
            .sum()
    }

    /// `∫_a^b f(t) dt`. Only meaningful for the Legendre kind.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> Result<f64> {
        if self.kind != QuadratureKind::GaussLegendre {
            return Err(Error::Unsupported(
                "finite-interval integration needs a Gauss-Legendre rule".into(),
            ));
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Ok(half
            * self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(mid + half * x))
                .sum::<f64>())
    }
}

/// Golub–Welsch eigenvalues of the Jacobi matrix, polished by Newton on the
/// orthonormal three-term recurrence; weights are Christoffel numbers.
fn hermite_probabilist(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (pn, pn1, _) = hermite_orthonormal(n, *x);
            // d/dx p_n = sqrt(n) p_{n-1}
            let step = pn / ((n as f64).sqrt() * pn1);
            if !step.is_finite() {
                break;
            }
            *x -= step;
        }
        let (_, _, sum_sq) = hermite_orthonormal(n, *x);
        weights.push(1.0 / sum_sq);
    }
    // symmetrise to kill round-off asymmetry
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (nodes, weights)
}

/// `(p_n(x), p_{n-1}(x), Σ_{k<n} p_k(x)^2)` for the orthonormal
/// probabilists' Hermite polynomials.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sum_sq)
}

fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, p1) = legendre_pair(n, x);
            dp = nf * (x * p - p1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, p1) = legendre_pair(n, x);
        if p != 0.0 || dp == 0.0 {
            dp = nf * (x * p - p1) / (x * x - 1.0);
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_{n-1}(x))`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}
