//! Statistical distances between samples, exact margin laws and limit laws.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limit::{limit_cf, LimitLaw};
use crate::linalg::Matrix;
use crate::normal;
use crate::voting::{exact_margin_pmf, pair_correlation, DeFinettiModel};

/// Upper 0.1% quantile of the Kolmogorov distribution.
pub const KOLMOGOROV_Q999: f64 = 1.949_47;
/// Safety factor applied on top of the asymptotic quantile.
pub const KS_SAFETY: f64 = 1.5;

/// `sup_x |F̂(x) − F(x)|` for a continuous `cdf`, from both one-sided gaps at
/// the sorted sample points. Ties are handled by the usual order-statistic
/// formula.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// KS distance between integer-valued draws and a law on the integers given
/// as `(value, probability)` pairs sorted by value. Both distribution
/// functions are right-continuous step functions jumping only on the union
/// of the support and the sample, so the supremum is attained there.
pub fn ks_lattice(sample: &[i64], law: &[(i64, f64)]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_unstable();
    let mut points: Vec<i64> = law.iter().map(|(k, _)| *k).chain(xs.iter().copied()).collect();
    points.sort_unstable();
    points.dedup();
    let n = xs.len() as f64;
    let (mut i, mut j, mut f, mut worst) = (0usize, 0usize, 0.0, 0.0f64);
    for x in points {
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < law.len() && law[j].0 <= x {
            f += law[j].1;
            j += 1;
        }
        worst = worst.max((i as f64 / n - f).abs());
    }
    worst
}

/// KS threshold for `count` draws: the 99.9% Kolmogorov quantile times the
/// safety factor, divided by `√count`.
pub fn ks_threshold(count: usize) -> f64 {
    KS_SAFETY * KOLMOGOROV_Q999 / (count as f64).sqrt()
}

/// Empirical characteristic function `(1/N) Σ exp(i t·x_j)`.
pub fn ecf(sample: &[Vec<f64>], t: &[f64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for x in sample {
        let phase: f64 = t.iter().zip(x).map(|(a, b)| a * b).sum();
        let (s, c) = phase.sin_cos();
        re += c;
        im += s;
    }
    let n = sample.len() as f64;
    Complex64::new(re / n, im / n)
}

/// 21 equispaced points in `[−3, 3]` along every coordinate axis.
pub fn default_grid(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(21 * dim);
    for axis in 0..dim {
        for i in 0..21 {
            let mut t = vec![0.0; dim];
            t[axis] = -3.0 + 0.3 * i as f64;
            out.push(t);
        }
    }
    out
}

/// `max_t |ecf(t) − φ_law(t)|` over `grid`.
pub fn ecf_distance(sample: &[Vec<f64>], law: &LimitLaw, grid: &[Vec<f64>]) -> f64 {
    grid.iter()
        .map(|t| (ecf(sample, t) - limit_cf(law, t)).norm())
        .fold(0.0, f64::max)
}

/// Largest `|φ̂(s, u) − φ̂(s, 0) φ̂(0, u)|` over the cross grid of the 21-point
/// axis values, where `s` runs over one coordinate of `left` and `u` over one
/// coordinate of `right`, for every such pair.
pub fn cf_factorization_discrepancy(sample: &[Vec<f64>], left: &[usize], right: &[usize]) -> f64 {
    let dim = sample.first().map_or(0, |x| x.len());
    let axis: Vec<f64> = (0..21).map(|i| -3.0 + 0.3 * i as f64).collect();
    let mut worst = 0.0f64;
    for &a in left {
        for &b in right {
            for &s in &axis {
                let mut ta = vec![0.0; dim];
                ta[a] = s;
                let fa = ecf(sample, &ta);
                for &u in &axis {
                    let mut tb = vec![0.0; dim];
                    tb[b] = u;
                    let mut tab = ta.clone();
                    tab[b] = u;
                    let d = (ecf(sample, &tab) - fa * ecf(sample, &tb)).norm();
                    worst = worst.max(d);
                }
            }
        }
    }
    worst
}

/// `sup_k |(Π √n_λ / 2^M) P(S = k) − φ(k / √n)|` over the margin lattice.
pub fn llt_sup_error(model: &DeFinettiModel, n: u64) -> Result<f64> {
    let pmf = exact_margin_pmf(model, n)?;
    let roots: Vec<f64> = pmf.sizes().iter().map(|&s| (s as f64).sqrt()).collect();
    let scale = roots.iter().product::<f64>() / 2f64.powi(roots.len() as i32);
    Ok(pmf
        .iter()
        .map(|(k, p)| {
            let x: Vec<f64> = k.iter().zip(&roots).map(|(&v, r)| v as f64 / r).collect();
            (scale * p - normal::pdf_iid(&x)).abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Residual variance `SSE / (k − 2)`; absent for two points.
    pub residual_variance: Option<f64>,
}

/// Ordinary least squares of `ys` on `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Data("a linear fit needs at least two paired points".into()));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("a linear fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        residual_variance: (xs.len() > 2).then(|| sse / (k - 2.0)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaFit {
    /// `−slope` of `ln margin` against `ln n`.
    pub alpha: f64,
    pub fit: LinearFit,
    pub points: usize,
}

/// Scaling exponent `α` in `E(|S_n|/n) ~ n^{−α}` from `(n, margin)` pairs.
/// Two points give the exact slope without a residual variance.
pub fn estimate_alpha(points: &[(u64, f64)]) -> Result<AlphaFit> {
    if points.len() < 2 {
        return Err(Error::Data(format!(
            "estimating α needs at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some((n, m)) = points.iter().find(|(n, m)| *n == 0 || !(m.is_finite() && *m > 0.0)) {
        return Err(Error::Data(format!(
            "population and margin must be positive, got ({n}, {m})"
        )));
    }
    let mut ns: Vec<u64> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Data("populations must be distinct".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(AlphaFit {
        alpha: -fit.slope,
        fit,
        points: points.len(),
    })
}

/// One verified statistic; `pass ⇔ observed ≤ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub statistic: String,
    pub observed: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub n_grid: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

impl VerificationReport {
    pub fn new(experiment: impl Into<String>, statistic: impl Into<String>, observed: f64, threshold: f64) -> Self {
        VerificationReport {
            experiment: experiment.into(),
            statistic: statistic.into(),
            observed,
            threshold,
            pass: observed <= threshold,
            seed: None,
            count: None,
            n_grid: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn with_sample(mut self, seed: u64, count: usize) -> Self {
        self.seed = Some(seed);
        self.count = Some(count);
        self
    }

    pub fn with_n_grid(mut self, n_grid: Vec<u64>) -> Self {
        self.n_grid = n_grid;
        self
    }

    pub fn with_values(mut self, values: Vec<f64>) -> Self {
        self.values = values;
        self
    }
}

/// Observed value for a "decreasing to below `threshold`" check: the last
/// value when the sequence strictly decreases (a run of exact zeros counts as
/// decreasing), `threshold + max` otherwise.
pub fn decay_observed(values: &[f64], threshold: f64) -> f64 {
    let decreasing = values
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    let max = values.iter().copied().fold(0.0, f64::max);
    match values.last() {
        Some(&last) if decreasing => last,
        _ => threshold + max,
    }
}

/// Pair correlation along `n_grid` (largest group value per `n`).
///
/// Passes when the sequence strictly decreases and ends at most at
/// `threshold`; see [`decay_observed`].
pub fn correlation_decay_report(model: &DeFinettiModel, n_grid: &[u64], threshold: f64) -> Result<VerificationReport> {
    if n_grid.is_empty() {
        return Err(Error::Data("correlation decay needs a nonempty n grid".into()));
    }
    let values = n_grid
        .iter()
        .map(|&n| Ok(pair_correlation(model, n)?.into_iter().fold(0.0, f64::max)))
        .collect::<Result<Vec<f64>>>()?;
    let observed = decay_observed(&values, threshold);
    Ok(VerificationReport::new("correlation-decay", "pair_correlation", observed, threshold)
        .with_n_grid(n_grid.to_vec())
        .with_values(values))
}

/// Sample covariance of the rows.
pub fn empirical_covariance(rows: &[Vec<f64>]) -> Matrix {
    let d = rows.first().map_or(0, |r| r.len());
    let c = rows.len() as f64;
    let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / c).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..=i {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[i][j] /= c - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

/// Pearson correlation of two equally long samples.
pub fn sample_correlation(x: &[f64], y: &[f64]) -> f64 {
    let c = x.len() as f64;
    let mx = x.iter().sum::<f64>() / c;
    let my = y.iter().sum::<f64>() / c;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{BaseMeasure, BiasMap, ContractionSchedule};
    use crate::voting::GroupStructure;

    fn dirac0() -> DeFinettiModel {
        DeFinettiModel::collective_bias(GroupStructure::single(), BaseMeasure::dirac(vec![0.0]).unwrap(), BiasMap::Tanh)
            .unwrap()
    }

    fn inverse_normal(p: f64) -> f64 {
        // bisection is plenty for a test oracle
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal::cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ks_examples() {
        let n = 1000;
        let q: Vec<f64> = (1..=n).map(|i| inverse_normal((i as f64 - 0.5) / n as f64)).collect();
        assert!(ks_statistic(&q, normal::cdf) <= 0.0005 + 1e-12);
        assert!((ks_statistic(&[0.0], normal::cdf) - 0.5).abs() < 1e-15);
        let far: Vec<f64> = vec![-50.0; 10];
        assert!(ks_statistic(&far, normal::cdf) > 1.0 - 1e-12);
    }

    #[test]
    fn ks_affine_invariance() {
        let xs: Vec<f64> = (0..500).map(|i| ((i * 7919) % 1000) as f64 / 250.0 - 2.0).collect();
        let a = ks_statistic(&xs, normal::cdf);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.5).collect();
        let b = ks_statistic(&ys, |y| normal::cdf((y + 1.5) / 3.0));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ks_lattice_examples() {
        let law = [(-1, 0.5), (1, 0.5)];
        assert_eq!(ks_lattice(&[-1, 1, 1, -1], &law), 0.0);
        assert_eq!(ks_lattice(&[1, 1], &law), 0.5);
        assert!((ks_threshold(100_000) - 1.5 * 1.949_47 / 316.227_766_016_837_9).abs() < 1e-12);
    }

    #[test]
    fn ecf_examples() {
        let law = LimitLaw::StandardGaussian { dim: 1 };
        let delta = vec![vec![0.0]; 10];
        let d = ecf_distance(&delta, &law, &[vec![2.0]]);
        assert!((d - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert!((d - 0.8647).abs() < 1e-4);
        assert_eq!(ecf_distance(&delta, &law, &[vec![0.0]]), 0.0);
        let g = default_grid(2);
        assert_eq!(g.len(), 42);
        assert!(g.iter().any(|t| t == &vec![0.0, 3.0]));
        let sample = BaseMeasure::standard_gaussian(1).unwrap().sample(3, 100_000).unwrap();
        assert!(ecf_distance(&sample, &law, &default_grid(1)) < 0.02);
    }

    #[test]
    fn factorization_of_independent_coordinates() {
        let sample = BaseMeasure::standard_gaussian(2).unwrap().sample(1, 50_000).unwrap();
        assert!(cf_factorization_discrepancy(&sample, &[0], &[1]) < 0.03);
        let dep: Vec<Vec<f64>> = sample.iter().map(|x| vec![x[0], x[0]]).collect();
        assert!(cf_factorization_discrepancy(&dep, &[0], &[1]) > 0.3);
    }

    #[test]
    fn llt_baseline() {
        let errs: Vec<f64> = [100, 1000, 10_000].iter().map(|&n| llt_sup_error(&dirac0(), n).unwrap()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 0.01);
        // rescaled lattice values sum back to total mass
        let pmf = exact_margin_pmf(&dirac0(), 10_000).unwrap();
        let scale = 100.0 / 2.0;
        let total: f64 = pmf.iter().map(|(_, p)| (2.0 / 100.0) * (scale * p)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_examples() {
        let pts: Vec<(u64, f64)> = [100u64, 1000, 10_000, 100_000].iter().map(|&n| (n, (n as f64).powf(-0.15))).collect();
        let a = estimate_alpha(&pts).unwrap();
        assert!((a.alpha - 0.15).abs() < 1e-12);
        assert!(a.fit.residual_variance.unwrap() < 1e-25);
        let scaled: Vec<(u64, f64)> = pts.iter().map(|&(n, _)| (n, 7.0 / (n as f64).sqrt())).collect();
        assert!((estimate_alpha(&scaled).unwrap().alpha - 0.5).abs() < 1e-12);
        let two = estimate_alpha(&[(100, 100f64.powf(-0.2)), (10_000, 10_000f64.powf(-0.2))]).unwrap();
        assert!((two.alpha - 0.2).abs() < 1e-12);
        assert!(two.fit.residual_variance.is_none());
        assert!(estimate_alpha(&[(10, 0.0), (100, 0.1)]).is_err());
        assert!(estimate_alpha(&[(10, 0.1), (10, 0.2)]).is_err());
        assert!(estimate_alpha(&[(10, 0.1)]).is_err());
    }

    #[test]
    fn alpha_scale_invariance() {
        let pts = [(50u64, 0.3), (700, 0.11), (9000, 0.07), (40_000, 0.02)];
        let a = estimate_alpha(&pts).unwrap().alpha;
        let b = estimate_alpha(&pts.map(|(n, m)| (n, 13.0 * m))).unwrap().alpha;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn decay_reports() {
        let grid = vec![100, 1000, 10_000];
        let r = correlation_decay_report(&dirac0(), &grid, 1e-3).unwrap();
        assert!(r.pass);
        assert_eq!(r.values, vec![0.0; 3]);
        let uni = BaseMeasure::uniform_box(vec![-1.0], vec![1.0]).unwrap();
        let contracted = DeFinettiModel::contracted(
            GroupStructure::single(),
            uni.clone(),
            ContractionSchedule::power_law(1, 1.0, 0.5).unwrap(),
            BiasMap::ClampIdentity,
        )
        .unwrap();
        let r = correlation_decay_report(&contracted, &grid, 1e-3).unwrap();
        assert!(r.pass);
        for (v, n) in r.values.iter().zip(&grid) {
            assert!((v - 1.0 / (3.0 * *n as f64)).abs() < 1e-15);
        }
        let stat = DeFinettiModel::collective_bias(GroupStructure::single(), uni, BiasMap::ClampIdentity).unwrap();
        let r = correlation_decay_report(&stat, &grid, 1e-3).unwrap();
        assert!(!r.pass);
        assert!(r.values.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn covariance_and_correlation() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let c = empirical_covariance(&rows);
        assert_eq!(c, vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!((sample_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }
}
