//! The multi-group Curie–Weiss model.
//!
//! Two representations of the same law on `{−1, 1}^n`:
//!
//! * the Gibbs measure `∝ exp(½ Σ_{λ,ν} J_{λν} S_λ S_ν / √(n_λ n_ν))`,
//!   enumerated exactly over margin classes;
//! * the de Finetti mixture of `P_{tanh x}` against the density
//!   `exp(−n F_{n,J}(x))` with
//!   `F_{n,J}(x) = ½ xᵀ √α J⁻¹ √α x − Σ_λ α_λ ln cosh x_λ`, `α_λ = n_λ / n`.
//!
//! In the high-temperature region (`I − J` positive definite) the bound
//! `ln cosh x ≤ x²/2` dominates the density by the Gaussian
//! `exp(−½ xᵀ P x)`, `P = n √α (J⁻¹ − I) √α`. That envelope fixes the
//! integration boxes and drives the rejection sampler.

mod sampler;

pub use sampler::{sample_cwm_margins, sample_cwm_margins_with, CwmSampler, BURN_IN, THINNING};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::linalg::{self, Matrix};
use crate::quadrature::{escalate, interval_rule, QuadratureRule};
use crate::voting::{self, GroupStructure, MarginPmf, DeFinettiModel};

/// Standard deviations of the envelope Gaussian covered by integration boxes.
const ENVELOPE_WIDTH: f64 = 10.0;
/// Log-density drop beyond which the integrand is treated as zero.
const LOG_DENSITY_CUTOFF: f64 = 60.0;
/// Largest population for configuration-level Gibbs enumeration.
pub const GIBBS_MAX_N: u64 = 20;
/// Largest population for the representation-equivalence check.
pub const EQUIVALENCE_MAX_N: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CouplingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coupling: Option<Matrix>,
}

/// Symmetric positive semi-definite coupling matrix `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CouplingConfig", into = "CouplingConfig")]
pub struct CouplingSpec {
    coupling: Matrix,
}

impl CouplingSpec {
    pub fn new(coupling: Matrix) -> Result<Self> {
        let m = coupling.len();
        if m == 0 || !linalg::is_square(&coupling, m) {
            return config("coupling must be a nonempty square matrix");
        }
        if coupling.iter().flatten().any(|v| !v.is_finite()) {
            return config("coupling entries must be finite");
        }
        if !linalg::is_symmetric(&coupling, 1e-12) {
            return config("coupling matrix must be symmetric");
        }
        if linalg::cholesky_psd(&coupling).is_none() {
            return config("coupling matrix must be positive semi-definite");
        }
        Ok(CouplingSpec { coupling })
    }

    /// Single-group model with inverse temperature `beta`.
    pub fn single(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return config(format!("inverse temperature must be nonnegative, got {beta}"));
        }
        Self::new(vec![vec![beta]])
    }

    pub fn dim(&self) -> usize {
        self.coupling.len()
    }

    pub fn coupling(&self) -> &Matrix {
        &self.coupling
    }

    pub fn is_zero(&self) -> bool {
        self.coupling.iter().flatten().all(|&v| v == 0.0)
    }

    pub fn is_positive_definite(&self) -> bool {
        linalg::cholesky_pd(&self.coupling).is_some()
    }

    /// `I − J` positive definite.
    pub fn is_high_temperature(&self) -> bool {
        let m = self.dim();
        let shifted: Matrix = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { 1.0 } else { 0.0 } - self.coupling[i][j])
                    .collect()
            })
            .collect();
        linalg::cholesky_pd(&shifted).is_some()
    }
}

impl TryFrom<CouplingConfig> for CouplingSpec {
    type Error = Error;
    fn try_from(c: CouplingConfig) -> Result<Self> {
        match (c.beta, c.coupling) {
            (Some(beta), None) => CouplingSpec::single(beta),
            (None, Some(j)) => CouplingSpec::new(j),
            _ => config("give exactly one of `beta` (single group) or `coupling` (matrix)"),
        }
    }
}

impl From<CouplingSpec> for CouplingConfig {
    fn from(c: CouplingSpec) -> Self {
        if c.dim() == 1 {
            CouplingConfig {
                beta: Some(c.coupling[0][0]),
                coupling: None,
            }
        } else {
            CouplingConfig {
                beta: None,
                coupling: Some(c.coupling),
            }
        }
    }
}

/// Single-group free energy in the magnetization variable:
/// `F(m) = ½ ((1/β) artanh(m)² + ln(1 − m²))`; `+∞` at `|m| = 1`.
pub fn free_energy_magnetization(beta: f64, m: f64) -> f64 {
    if m.abs() >= 1.0 {
        return f64::INFINITY;
    }
    let a = m.abs().atanh();
    0.5 * (a * a / beta + (-m * m).ln_1p())
}

pub(crate) fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `F_{n,J}` at a fixed population with its integration geometry.
#[derive(Debug)]
pub struct FreeEnergy {
    n: u64,
    sizes: Vec<usize>,
    alpha: Vec<f64>,
    quadratic: Matrix,
    envelope_factor: Option<Matrix>,
    envelope_min_precision: Option<f64>,
    half_widths: Vec<f64>,
    normalizer: OnceLock<f64>,
}

impl FreeEnergy {
    pub fn new(spec: &CouplingSpec, groups: &GroupStructure, n: u64) -> Result<Self> {
        if spec.dim() != groups.len() {
            return config("coupling dimension does not match the number of groups");
        }
        let sizes = groups.sizes(n)?;
        let nf = n as f64;
        let alpha: Vec<f64> = sizes.iter().map(|&s| s as f64 / nf).collect();
        let Some(jinv) = linalg::inverse_pd(spec.coupling()) else {
            return config("the de Finetti density needs a positive definite coupling matrix (J⁻¹ must exist)");
        };
        let m = sizes.len();
        let sa: Vec<f64> = alpha.iter().map(|a| a.sqrt()).collect();
        let quadratic: Matrix = (0..m)
            .map(|i| (0..m).map(|j| sa[i] * jinv[i][j] * sa[j]).collect())
            .collect();

        let mut envelope_factor = None;
        let mut envelope_min_precision = None;
        let half_widths = if spec.is_high_temperature() {
            let precision: Matrix = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            let id = if i == j { 1.0 } else { 0.0 };
                            nf * sa[i] * (jinv[i][j] - id) * sa[j]
                        })
                        .collect()
                })
                .collect();
            let cov = linalg::inverse_pd(&precision)
                .ok_or_else(|| Error::Config("envelope precision is not positive definite".into()))?;
            let trace: f64 = (0..m).map(|k| cov[k][k]).sum();
            envelope_min_precision = Some(1.0 / trace);
            let widths = (0..m).map(|k| ENVELOPE_WIDTH * cov[k][k].sqrt()).collect();
            envelope_factor = linalg::cholesky_pd(&cov);
            widths
        } else {
            // nF >= n(½ λ|x|² − ‖α‖ |x|) with λ >= 1 / Σ_k J_kk / α_k
            let lambda = 1.0 / (0..m).map(|k| spec.coupling()[k][k] / alpha[k]).sum::<f64>();
            let a_norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
            let r = (a_norm + (a_norm * a_norm + 2.0 * lambda * LOG_DENSITY_CUTOFF / nf).sqrt()) / lambda;
            vec![r; m]
        };
        Ok(FreeEnergy {
            n,
            sizes,
            alpha,
            quadratic,
            envelope_factor,
            envelope_min_precision,
            half_widths,
            normalizer: OnceLock::new(),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `F_{n,J}(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * linalg::quad_form(&self.quadratic, x)
            - self
                .alpha
                .iter()
                .zip(x)
                .map(|(a, &v)| a * ln_cosh(v))
                .sum::<f64>()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        -(self.n as f64) * self.value(x)
    }

    /// Unnormalized de Finetti density `exp(−n F_{n,J}(x))`.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// Half-widths of the box `[−w, w]` outside of which the density is negligible.
    pub fn box_half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub(crate) fn envelope_factor(&self) -> Option<&Matrix> {
        self.envelope_factor.as_ref()
    }

    fn raw_rule(&self, nodes: usize) -> Result<QuadratureRule> {
        let axes: Vec<Vec<(f64, f64)>> = self
            .half_widths
            .iter()
            .map(|&w| interval_rule(-w, w, nodes, &[]))
            .collect();
        let mut rule = QuadratureRule::tensor(&axes)?;
        let points = rule.points.clone();
        for (w, x) in rule.weights.iter_mut().zip(points.chunks_exact(rule.dim)) {
            *w *= self.density(x);
        }
        Ok(rule)
    }

    /// Quadrature rule for the normalized de Finetti measure `μ_n`.
    pub(crate) fn probability_rule(&self, nodes: usize) -> Result<QuadratureRule> {
        let mut rule = self.raw_rule(nodes)?;
        let z: f64 = rule.weights.iter().sum();
        rule.weights.iter_mut().for_each(|w| *w /= z);
        Ok(rule)
    }

    /// `Z_{n,J} = ∫ exp(−n F_{n,J}(x)) dx`, cached.
    pub fn normalizer(&self) -> Result<f64> {
        if let Some(z) = self.normalizer.get() {
            return Ok(*z);
        }
        let z = escalate(0.0, 1e-13, |nodes| {
            Ok(vec![self.raw_rule(nodes)?.weights.iter().sum()])
        })?
        .value[0];
        Ok(*self.normalizer.get_or_init(|| z))
    }

    /// Integral of the unnormalized density over the box `[lower, upper]` in
    /// `x`-space.
    pub fn integrate_box(&self, lower: &[f64], upper: &[f64]) -> Result<f64> {
        let clipped = clip_box(lower, upper, &self.half_widths);
        let Some((lo, hi)) = clipped else { return Ok(0.0) };
        Ok(escalate(0.0, 1e-12, |nodes| {
            let axes: Vec<Vec<(f64, f64)>> = lo
                .iter()
                .zip(&hi)
                .map(|(&a, &b)| interval_rule(a, b, nodes, &[]))
                .collect();
            let rule = QuadratureRule::tensor(&axes)?;
            Ok(vec![rule.iter().map(|(x, w)| w * self.density(x)).sum()])
        })?
        .value[0])
    }
}

fn clip_box(lower: &[f64], upper: &[f64], widths: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let lo: Vec<f64> = lower.iter().zip(widths).map(|(&l, &w)| l.max(-w)).collect();
    let hi: Vec<f64> = upper.iter().zip(widths).map(|(&u, &w)| u.min(w)).collect();
    lo.iter().zip(&hi).all(|(a, b)| a < b).then_some((lo, hi))
}

/// Unnormalized de Finetti density `exp(−n F_{n,J}(x))`.
pub fn definetti_density(spec: &CouplingSpec, groups: &GroupStructure, n: u64, x: &[f64]) -> Result<f64> {
    Ok(FreeEnergy::new(spec, groups, n)?.density(x))
}

/// Margin law of the Gibbs measure by exact summation over margin classes,
/// weighting each class by its configuration count `Π C(n_λ, (n_λ + k_λ)/2)`.
/// Guarded only by the lattice size.
pub fn gibbs_pmf_by_class(spec: &CouplingSpec, groups: &GroupStructure, n: u64) -> Result<MarginPmf> {
    if spec.dim() != groups.len() {
        return config("coupling dimension does not match the number of groups");
    }
    let sizes = groups.sizes(n)?;
    let len = voting::lattice_len(&sizes)?;
    let ln_rows: Vec<Vec<f64>> = sizes.iter().map(|&s| voting::ln_binomial_row(s)).collect();
    let j = spec.coupling();
    let m = sizes.len();
    let scale: Vec<f64> = sizes.iter().map(|&s| 1.0 / (s as f64).sqrt()).collect();
    let mut log_w = vec![0.0; len];
    let mut counts = vec![0usize; m];
    let mut y = vec![0.0; m];
    for lw in log_w.iter_mut() {
        for g in 0..m {
            y[g] = (2 * counts[g] as i64 - sizes[g] as i64) as f64 * scale[g];
        }
        let energy = 0.5 * linalg::quad_form(j, &y);
        let entropy: f64 = (0..m).map(|g| ln_rows[g][counts[g]]).sum();
        *lw = energy + entropy;
        for g in (0..m).rev() {
            counts[g] += 1;
            if counts[g] <= sizes[g] {
                break;
            }
            counts[g] = 0;
        }
    }
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(MarginPmf::from_counts(sizes, probs))
}

/// Gibbs margin law for populations up to [`GIBBS_MAX_N`].
pub fn gibbs_pmf(spec: &CouplingSpec, groups: &GroupStructure, n: u64) -> Result<MarginPmf> {
    if n > GIBBS_MAX_N {
        return Err(Error::Resource(format!(
            "Gibbs enumeration needs n <= {GIBBS_MAX_N}, got {n}"
        )));
    }
    gibbs_pmf_by_class(spec, groups, n)
}

/// Max-abs discrepancy between the Gibbs margin law and the de Finetti
/// mixture `∫ P_{tanh x}(S = k) exp(−n F_{n,J}(x)) dx / Z`.
pub fn representation_equivalence_check(
    spec: &CouplingSpec,
    groups: &GroupStructure,
    n: u64,
) -> Result<f64> {
    if n > EQUIVALENCE_MAX_N {
        return Err(Error::Resource(format!(
            "representation check needs n <= {EQUIVALENCE_MAX_N}, got {n}"
        )));
    }
    let gibbs = gibbs_pmf(spec, groups, n)?;
    let model = DeFinettiModel::curie_weiss(groups.clone(), spec.clone())?;
    let mixture = voting::exact_margin_pmf(&model, n)?;
    Ok(gibbs.max_abs_diff(&mixture))
}

/// `E X_{λ1} X_{λ2}` per group from the exact Gibbs margin law.
pub fn pair_correlation_exact(spec: &CouplingSpec, groups: &GroupStructure, n: u64) -> Result<Vec<f64>> {
    let pmf = gibbs_pmf_by_class(spec, groups, n)?;
    Ok((0..groups.len())
        .map(|g| {
            let s = pmf.sizes()[g] as f64;
            let second: f64 = pmf
                .group_marginal(g)
                .into_iter()
                .map(|(k, p)| (k * k) as f64 * p)
                .sum();
            (second - s) / (s * (s - 1.0))
        })
        .collect())
}

/// The de Finetti measure after `t = tanh x`: a density on `(−1, 1)^M`,
/// `exp(−n F_{n,J}(artanh t)) Π_λ 1/(1 − t_λ²)`.
#[derive(Debug)]
pub struct CompactDensity {
    energy: FreeEnergy,
    normalizer: OnceLock<f64>,
}

impl CompactDensity {
    pub fn new(spec: &CouplingSpec, groups: &GroupStructure, n: u64) -> Result<Self> {
        Ok(CompactDensity {
            energy: FreeEnergy::new(spec, groups, n)?,
            normalizer: OnceLock::new(),
        })
    }

    pub fn energy(&self) -> &FreeEnergy {
        &self.energy
    }

    pub fn log_eval(&self, t: &[f64]) -> f64 {
        if t.iter().any(|v| v.abs() >= 1.0) {
            return f64::NEG_INFINITY;
        }
        let x: Vec<f64> = t.iter().map(|v| v.atanh()).collect();
        self.energy.log_density(&x) - t.iter().map(|v| (-v * v).ln_1p()).sum::<f64>()
    }

    /// Unnormalized density; zero on the boundary of `[−1, 1]^M`.
    pub fn eval(&self, t: &[f64]) -> f64 {
        self.log_eval(t).exp()
    }

    fn integrate_clipped(&self, lower: &[f64], upper: &[f64], radius: &[f64], rel_tol: f64) -> Result<f64> {
        let limits: Vec<f64> = radius.iter().map(|r| r.tanh()).collect();
        let Some((lo, hi)) = clip_box(lower, upper, &limits) else { return Ok(0.0) };
        Ok(escalate(0.0, rel_tol, |nodes| {
            let axes: Vec<Vec<(f64, f64)>> = lo
                .iter()
                .zip(&hi)
                .map(|(&a, &b)| interval_rule(a, b, nodes, &[]))
                .collect();
            let rule = QuadratureRule::tensor(&axes)?;
            Ok(vec![rule.iter().map(|(t, w)| w * self.eval(t)).sum()])
        })?
        .value[0])
    }

    /// `∫_{[−1,1]^M}` of the unnormalized density, computed in `t`.
    pub fn normalizer(&self) -> Result<f64> {
        if let Some(z) = self.normalizer.get() {
            return Ok(*z);
        }
        let m = self.energy.sizes.len();
        let z = self.integrate_clipped(&vec![-1.0; m], &vec![1.0; m], &self.energy.half_widths, 1e-13)?;
        Ok(*self.normalizer.get_or_init(|| z))
    }

    /// Normalized mass of the box `[lower, upper] ⊂ [−1, 1]^M`.
    pub fn mass_in_box(&self, lower: &[f64], upper: &[f64]) -> Result<f64> {
        Ok(self.integrate_clipped(lower, upper, &self.energy.half_widths, 1e-12)? / self.normalizer()?)
    }

    /// `E f(t)` under the normalized density.
    pub fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let m = self.energy.sizes.len();
        let z = self.normalizer()?;
        let limits: Vec<f64> = self.energy.half_widths.iter().map(|r| r.tanh()).collect();
        let lo: Vec<f64> = limits.iter().map(|l| -l).collect();
        let v = escalate(1e-13 * z, 1e-12, |nodes| {
            let axes: Vec<Vec<(f64, f64)>> = (0..m)
                .map(|k| interval_rule(lo[k], limits[k], nodes, &[]))
                .collect();
            let rule = QuadratureRule::tensor(&axes)?;
            Ok(vec![rule.iter().map(|(t, w)| w * self.eval(t) * f(t)).sum()])
        })?
        .value[0];
        Ok(v / z)
    }
}

/// Mass of `μ_n` outside the cube `[−δ, δ]^M` at one population size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailMass {
    pub n: u64,
    pub mass: f64,
    /// The mass fell below `1e-300` and is reported as zero.
    pub underflow: bool,
}

const UNDERFLOW: f64 = 1e-300;

/// `μ_n([−1, 1]^M \ [−δ, δ]^M)` on the compact representation for every
/// `n` in `ns`. The complement of the cube is split into disjoint boxes
/// (coordinates before `k` inside, coordinate `k` outside, the rest free) so
/// tiny tail masses are integrated directly rather than by subtraction.
pub fn concentration_profile(
    spec: &CouplingSpec,
    groups: &GroupStructure,
    ns: &[u64],
    delta: f64,
) -> Result<Vec<TailMass>> {
    if !(delta > 0.0) {
        return config(format!("concentration radius must be positive, got {delta}"));
    }
    if !spec.is_high_temperature() {
        return config("the concentration profile is computed in the high-temperature regime only");
    }
    ns.iter()
        .map(|&n| {
            if delta >= 1.0 {
                return Ok(TailMass { n, mass: 0.0, underflow: false });
            }
            let density = CompactDensity::new(spec, groups, n)?;
            let energy = density.energy();
            let m = groups.len();
            let edge = delta.atanh();
            let face_energy = (0..m)
                .map(|k| {
                    let mut x = vec![0.0; m];
                    x[k] = edge;
                    energy.value(&x)
                })
                .fold(0.0, f64::max);
            let lambda = energy.envelope_min_precision.expect("high temperature");
            let reach = (2.0 * (n as f64 * face_energy + LOG_DENSITY_CUTOFF) / lambda).sqrt();
            let radius: Vec<f64> = energy.half_widths.iter().map(|w| w.max(reach)).collect();
            let mut tail = 0.0;
            for k in 0..m {
                for side in [-1.0, 1.0] {
                    let mut lo = vec![-1.0; m];
                    let mut hi = vec![1.0; m];
                    for i in 0..k {
                        lo[i] = -delta;
                        hi[i] = delta;
                    }
                    if side > 0.0 {
                        lo[k] = delta;
                    } else {
                        hi[k] = -delta;
                    }
                    tail += density.integrate_clipped(&lo, &hi, &radius, 1e-10)?;
                }
            }
            let mass = tail / density.normalizer()?;
            Ok(if mass < UNDERFLOW {
                TailMass { n, mass: 0.0, underflow: true }
            } else {
                TailMass { n, mass, underflow: false }
            })
        })
        .collect()
}
