//! Gauss–Legendre rules and node escalation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Node count every escalation starts from.
pub const START_NODES: usize = 64;
/// Largest per-dimension node count before escalation gives up.
pub const MAX_NODES: usize = 4096;
/// Largest total number of tensor-product points in a single rule.
pub const MAX_RULE_POINTS: usize = 1 << 24;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
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
        GaussLegendre { nodes, weights }
    }

    /// Shared, cached rule with `n` nodes.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&n) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(Self::compute(n));
        cache.lock().unwrap().insert(n, Arc::clone(&rule));
        rule
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Integrates `f` over `[a, b]` with an `n`-point rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    GaussLegendre::get(n).on_interval(a, b).map(|(x, w)| w * f(x)).sum()
}

/// One-dimensional pieces of `[a, b]` after splitting at interior breakpoints.
pub(crate) fn split_interval(a: f64, b: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c > a && c < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut lo = a;
    for c in cuts {
        pieces.push((lo, c));
        lo = c;
    }
    pieces.push((lo, b));
    pieces
}

/// Composite Gauss–Legendre rule on `[a, b]`, split at breakpoints.
pub(crate) fn interval_rule(a: f64, b: f64, n: usize, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::get(n);
    split_interval(a, b, breakpoints)
        .into_iter()
        .flat_map(|(lo, hi)| gl.on_interval(lo, hi).collect::<Vec<_>>())
        .collect()
}

/// Weighted point set in `R^dim`; points stored row-major.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(dim: usize) -> Self {
        QuadratureRule {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn push(&mut self, point: &[f64], weight: f64) {
        debug_assert_eq!(point.len(), self.dim);
        self.points.extend_from_slice(point);
        self.weights.push(weight);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points
            .chunks_exact(self.dim.max(1))
            .zip(self.weights.iter().copied())
    }

    /// Tensor product of per-axis one-dimensional rules.
    pub fn tensor(axes: &[Vec<(f64, f64)>]) -> Result<Self> {
        let total = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
            .filter(|&t| t <= MAX_RULE_POINTS)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "tensor quadrature rule exceeds {MAX_RULE_POINTS} points"
                ))
            })?;
        let dim = axes.len();
        let mut rule = QuadratureRule::new(dim);
        rule.points.reserve(total * dim);
        rule.weights.reserve(total);
        let mut idx = vec![0usize; dim];
        let mut point = vec![0.0; dim];
        for _ in 0..total {
            let mut w = 1.0;
            for (d, &i) in idx.iter().enumerate() {
                let (x, wx) = axes[d][i];
                point[d] = x;
                w *= wx;
            }
            rule.push(&point, w);
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(rule)
    }

    /// Cartesian product of two rules (points concatenated, weights multiplied).
    pub fn product(&self, other: &QuadratureRule) -> Result<Self> {
        let total = self.len().saturating_mul(other.len());
        if total > MAX_RULE_POINTS {
            return Err(Error::Resource(format!(
                "product quadrature rule exceeds {MAX_RULE_POINTS} points"
            )));
        }
        let mut rule = QuadratureRule::new(self.dim + other.dim);
        let mut point = vec![0.0; self.dim + other.dim];
        for (p, w) in self.iter() {
            point[..self.dim].copy_from_slice(p);
            for (q, v) in other.iter() {
                point[self.dim..].copy_from_slice(q);
                rule.push(&point, w * v);
            }
        }
        Ok(rule)
    }

    pub fn append_scaled(&mut self, other: &QuadratureRule, scale: f64) {
        debug_assert_eq!(self.dim, other.dim);
        self.points.extend_from_slice(&other.points);
        self.weights.extend(other.weights.iter().map(|w| w * scale));
    }
}

/// Outcome of an escalating quadrature: the converged values, the node count
/// per dimension that produced them, and the last successive difference.
#[derive(Debug, Clone)]
pub struct Escalated<T> {
    pub value: T,
    pub nodes: usize,
    pub last_delta: f64,
}

/// Doubles the node count from [`START_NODES`] until two successive vector
/// evaluations differ by at most `abs_tol + rel_tol * |value|` entrywise.
pub fn escalate(
    abs_tol: f64,
    rel_tol: f64,
    mut eval: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<Escalated<Vec<f64>>> {
    let mut nodes = START_NODES;
    let mut prev = eval(nodes)?;
    let mut last_delta = f64::INFINITY;
    while nodes < MAX_NODES {
        nodes *= 2;
        let next = eval(nodes)?;
        let mut worst = 0.0f64;
        let mut ok = next.len() == prev.len();
        for (a, b) in prev.iter().zip(&next) {
            let d = (a - b).abs();
            worst = worst.max(d);
            if d > abs_tol + rel_tol * b.abs() {
                ok = false;
            }
        }
        last_delta = worst;
        prev = next;
        if ok {
            return Ok(Escalated {
                value: prev,
                nodes,
                last_delta,
            });
        }
    }
    Err(Error::Tolerance(format!(
        "no convergence up to {MAX_NODES} nodes per dimension: last successive difference {last_delta:.3e} exceeds abs {abs_tol:.1e} / rel {rel_tol:.1e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 64, 257, 4096] {
            let gl = GaussLegendre::get(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-12, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        // integral of x^k over [0, 1] is 1/(k+1)
        for k in 0..=19 {
            let v = integrate(|x| x.powi(k), 0.0, 1.0, 10);
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let gl = GaussLegendre::get(33);
        for w in gl.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..33 {
            assert_eq!(gl.nodes[i], -gl.nodes[32 - i]);
        }
    }

    #[test]
    fn breakpoints_split_kinks() {
        let f = |x: f64| x.abs();
        let rule = interval_rule(-1.0, 2.0, 8, &[0.0, 5.0]);
        let v: f64 = rule.iter().map(|&(x, w)| w * f(x)).sum();
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn tensor_rule_guard() {
        let axis: Vec<(f64, f64)> = (0..5000).map(|i| (i as f64, 1.0)).collect();
        let err = QuadratureRule::tensor(&[axis.clone(), axis]).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
