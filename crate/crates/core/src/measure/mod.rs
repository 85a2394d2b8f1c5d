//! Base measures on `R^M`, their contractions, and the bias maps `m ↦ m̄`.
//!
//! [`BaseMeasure`] is a closed algebra: point masses, uniform boxes,
//! Gaussians, products and finite mixtures. Every member has an exact
//! characteristic function, exact (or Gaussian-quadrature) box masses, a
//! sampler, and a quadrature rule used to integrate against it.

mod bias;
mod schedule;

pub use bias::BiasMap;
pub use schedule::{ContractionRule, ContractionSchedule, EpsPoint, Regime};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::linalg::{self, Matrix};
use crate::normal;
use crate::quadrature::{interval_rule, GaussLegendre, QuadratureRule};

/// Tolerance on the probability weights of atoms and mixtures.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Relative slack used when deciding whether an atom sits on a box face.
const BOUNDARY_SLACK: f64 = 1e-12;
/// Half-width, in standard deviations, of the box Gaussians are integrated over.
const GAUSSIAN_HALF_WIDTH: f64 = 10.0;
const GAUSSIAN_BOX_NODES: usize = 128;

/// Declarative form of a [`BaseMeasure`], as it appears in config documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MeasureSpec {
    PointMasses { atoms: Vec<AtomSpec> },
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    Gaussian { mean: Vec<f64>, covariance: Vec<Vec<f64>> },
    Product { factors: Vec<MeasureSpec> },
    Mixture { components: Vec<ComponentSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub location: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    pub measure: MeasureSpec,
}

/// A probability measure on `R^M` from the closed algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureSpec", into = "MeasureSpec")]
pub struct BaseMeasure {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Atoms {
        locations: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    UniformBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        covariance: Matrix,
        factor: Matrix,
    },
    Product(Vec<BaseMeasure>),
    Mixture {
        components: Vec<BaseMeasure>,
        weights: Vec<f64>,
    },
}

fn check_weights(weights: &[f64], what: &str) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return config(format!("{what} weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return config(format!("{what} weights sum to {total}, expected 1"));
    }
    Ok(())
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl BaseMeasure {
    /// Finite mixture of point masses.
    pub fn point_masses(atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let Some(dim) = atoms.first().map(|(x, _)| x.len()) else {
            return config("point-mass measure needs at least one atom");
        };
        if dim == 0 || atoms.iter().any(|(x, _)| x.len() != dim || !all_finite(x)) {
            return config("atom locations must be finite vectors of one common positive dimension");
        }
        let (locations, weights): (Vec<_>, Vec<_>) = atoms.into_iter().unzip();
        check_weights(&weights, "atom")?;
        Ok(BaseMeasure {
            kind: Kind::Atoms { locations, weights },
        })
    }

    pub fn dirac(location: Vec<f64>) -> Result<Self> {
        Self::point_masses(vec![(location, 1.0)])
    }

    /// Uniform distribution on the box `[lower, upper]`.
    pub fn uniform_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return config("uniform box bounds must be nonempty and of equal length");
        }
        if !all_finite(&lower) || !all_finite(&upper) {
            return config("uniform box bounds must be finite");
        }
        if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
            return config("uniform box needs lower < upper componentwise");
        }
        Ok(BaseMeasure {
            kind: Kind::UniformBox { lower, upper },
        })
    }

    pub fn gaussian(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        let d = mean.len();
        if d == 0 || !linalg::is_square(&covariance, d) {
            return config("gaussian covariance must be a square matrix matching the mean");
        }
        if !all_finite(&mean) || covariance.iter().any(|r| !all_finite(r)) {
            return config("gaussian parameters must be finite");
        }
        if !linalg::is_symmetric(&covariance, 1e-12) {
            return config("gaussian covariance must be symmetric");
        }
        let Some(factor) = linalg::cholesky_psd(&covariance) else {
            return config("gaussian covariance must be positive semi-definite");
        };
        Ok(BaseMeasure {
            kind: Kind::Gaussian {
                mean,
                covariance,
                factor,
            },
        })
    }

    pub fn standard_gaussian(dim: usize) -> Result<Self> {
        Self::gaussian(vec![0.0; dim], linalg::identity(dim))
    }

    /// Independent product; coordinates are the concatenation of the factors'.
    pub fn product(factors: Vec<BaseMeasure>) -> Result<Self> {
        if factors.is_empty() {
            return config("product measure needs at least one factor");
        }
        Ok(BaseMeasure {
            kind: Kind::Product(factors),
        })
    }

    pub fn mixture(components: Vec<(BaseMeasure, f64)>) -> Result<Self> {
        let Some(dim) = components.first().map(|(m, _)| m.dim()) else {
            return config("mixture needs at least one component");
        };
        if components.iter().any(|(m, _)| m.dim() != dim) {
            return config("mixture components must share one dimension");
        }
        let (components, weights): (Vec<_>, Vec<_>) = components.into_iter().unzip();
        check_weights(&weights, "mixture")?;
        Ok(BaseMeasure {
            kind: Kind::Mixture {
                components,
                weights,
            },
        })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Atoms { locations, .. } => locations[0].len(),
            Kind::UniformBox { lower, .. } => lower.len(),
            Kind::Gaussian { mean, .. } => mean.len(),
            Kind::Product(factors) => factors.iter().map(BaseMeasure::dim).sum(),
            Kind::Mixture { components, .. } => components[0].dim(),
        }
    }

    /// True when the measure is a finite sum of point masses, so integrals
    /// against it are exact finite sums.
    pub fn is_atomic(&self) -> bool {
        match &self.kind {
            Kind::Atoms { .. } => true,
            Kind::UniformBox { .. } => false,
            Kind::Gaussian { factor, .. } => factor.iter().flatten().all(|&v| v == 0.0),
            Kind::Product(f) => f.iter().all(BaseMeasure::is_atomic),
            Kind::Mixture { components, .. } => components.iter().all(BaseMeasure::is_atomic),
        }
    }

    /// Structural symmetry check: `μ(A) = μ(−A)` holds for every box `A`
    /// when this returns true.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            Kind::Atoms { locations, weights } => {
                let weight_at = |target: &[f64], sign: f64| -> f64 {
                    locations
                        .iter()
                        .zip(weights)
                        .filter(|(x, _)| {
                            x.iter().zip(target).all(|(a, b)| {
                                (a - sign * b).abs() <= BOUNDARY_SLACK * a.abs().max(b.abs())
                            })
                        })
                        .map(|(_, w)| w)
                        .sum()
                };
                locations
                    .iter()
                    .all(|x| (weight_at(x, 1.0) - weight_at(x, -1.0)).abs() <= WEIGHT_TOL)
            }
            Kind::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .all(|(l, u)| (l + u).abs() <= BOUNDARY_SLACK * u.abs().max(l.abs())),
            Kind::Gaussian { mean, .. } => mean.iter().all(|&m| m == 0.0),
            Kind::Product(f) => f.iter().all(BaseMeasure::is_symmetric),
            Kind::Mixture { components, .. } => components.iter().all(BaseMeasure::is_symmetric),
        }
    }

    /// One draw written into `out` (length `dim()`).
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        match &self.kind {
            Kind::Atoms { locations, weights } => {
                let i = pick(rng, weights);
                out.copy_from_slice(&locations[i]);
            }
            Kind::UniformBox { lower, upper } => {
                for ((o, l), u) in out.iter_mut().zip(lower).zip(upper) {
                    *o = l + (u - l) * rng.random::<f64>();
                }
            }
            Kind::Gaussian { mean, factor, .. } => {
                let z: Vec<f64> = (0..mean.len()).map(|_| StandardNormal.sample(rng)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = mean[i] + (0..=i).map(|k| factor[i][k] * z[k]).sum::<f64>();
                }
            }
            Kind::Product(factors) => {
                let mut offset = 0;
                for f in factors {
                    let d = f.dim();
                    f.draw_into(rng, &mut out[offset..offset + d]);
                    offset += d;
                }
            }
            Kind::Mixture {
                components,
                weights,
            } => {
                let i = pick(rng, weights);
                components[i].draw_into(rng, out);
            }
        }
    }

    /// `count` independent draws; deterministic in `(seed, count)`.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::Data("sample count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        Ok((0..count)
            .map(|_| {
                let mut x = vec![0.0; d];
                self.draw_into(&mut rng, &mut x);
                x
            })
            .collect())
    }

    /// `E exp(i t·X)`.
    pub fn characteristic_function(&self, t: &[f64]) -> Complex64 {
        assert_eq!(t.len(), self.dim(), "argument dimension mismatch");
        match &self.kind {
            Kind::Atoms { locations, weights } => locations
                .iter()
                .zip(weights)
                .map(|(x, w)| Complex64::from_polar(*w, dot(t, x)))
                .sum(),
            Kind::UniformBox { lower, upper } => {
                let mut modulus = 1.0;
                let mut phase = 0.0;
                for ((ti, l), u) in t.iter().zip(lower).zip(upper) {
                    modulus *= sinc(ti * 0.5 * (u - l));
                    phase += ti * 0.5 * (u + l);
                }
                Complex64::from_polar(1.0, phase) * modulus
            }
            Kind::Gaussian {
                mean, covariance, ..
            } => {
                let q = linalg::quad_form(covariance, t);
                Complex64::from_polar((-0.5 * q).exp(), dot(t, mean))
            }
            Kind::Product(factors) => {
                let mut offset = 0;
                let mut acc = Complex64::new(1.0, 0.0);
                for f in factors {
                    let d = f.dim();
                    acc *= f.characteristic_function(&t[offset..offset + d]);
                    offset += d;
                }
                acc
            }
            Kind::Mixture {
                components,
                weights,
            } => components
                .iter()
                .zip(weights)
                .map(|(c, w)| c.characteristic_function(t) * *w)
                .sum(),
        }
    }

    /// Pushforward under `x ↦ eps ∘ x`.
    ///
    /// Panics unless `eps` has the measure's dimension and is positive.
    pub fn contract(&self, eps: &[f64]) -> BaseMeasure {
        assert_eq!(eps.len(), self.dim(), "contraction dimension mismatch");
        assert!(
            eps.iter().all(|&e| e > 0.0 && e.is_finite()),
            "contraction factors must be positive"
        );
        let scale = |v: &[f64]| -> Vec<f64> { v.iter().zip(eps).map(|(a, e)| a * e).collect() };
        let kind = match &self.kind {
            Kind::Atoms { locations, weights } => Kind::Atoms {
                locations: locations.iter().map(|x| scale(x)).collect(),
                weights: weights.clone(),
            },
            Kind::UniformBox { lower, upper } => Kind::UniformBox {
                lower: scale(lower),
                upper: scale(upper),
            },
            Kind::Gaussian {
                mean,
                covariance,
                factor,
            } => Kind::Gaussian {
                mean: scale(mean),
                covariance: scale_rows_cols(covariance, eps),
                factor: factor
                    .iter()
                    .zip(eps)
                    .map(|(row, e)| row.iter().map(|v| v * e).collect())
                    .collect(),
            },
            Kind::Product(factors) => {
                let mut offset = 0;
                Kind::Product(
                    factors
                        .iter()
                        .map(|f| {
                            let d = f.dim();
                            let c = f.contract(&eps[offset..offset + d]);
                            offset += d;
                            c
                        })
                        .collect(),
                )
            }
            Kind::Mixture {
                components,
                weights,
            } => Kind::Mixture {
                components: components.iter().map(|c| c.contract(eps)).collect(),
                weights: weights.clone(),
            },
        };
        BaseMeasure { kind }
    }

    /// Probability of the closed box `[lower, upper]`; bounds may be infinite.
    /// Atoms on a face count fully.
    pub fn mass_in_box(&self, lower: &[f64], upper: &[f64]) -> f64 {
        assert_eq!(lower.len(), self.dim(), "box dimension mismatch");
        assert_eq!(upper.len(), self.dim(), "box dimension mismatch");
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return 0.0;
        }
        let mass = match &self.kind {
            Kind::Atoms { locations, weights } => locations
                .iter()
                .zip(weights)
                .filter(|(x, _)| {
                    x.iter()
                        .zip(lower.iter().zip(upper))
                        .all(|(&v, (&l, &u))| within(v, l, u))
                })
                .map(|(_, w)| w)
                .sum(),
            Kind::UniformBox {
                lower: bl,
                upper: bu,
            } => (0..bl.len())
                .map(|k| {
                    let overlap = upper[k].min(bu[k]) - lower[k].max(bl[k]);
                    (overlap / (bu[k] - bl[k])).clamp(0.0, 1.0)
                })
                .product(),
            Kind::Gaussian { mean, factor, .. } => gaussian_box_mass(mean, factor, lower, upper),
            Kind::Product(factors) => {
                let mut offset = 0;
                let mut p = 1.0;
                for f in factors {
                    let d = f.dim();
                    p *= f.mass_in_box(&lower[offset..offset + d], &upper[offset..offset + d]);
                    offset += d;
                }
                p
            }
            Kind::Mixture {
                components,
                weights,
            } => components
                .iter()
                .zip(weights)
                .map(|(c, w)| w * c.mass_in_box(lower, upper))
                .sum(),
        };
        mass.clamp(0.0, 1.0)
    }

    /// Marginal law of the coordinates in `indices` (strictly increasing).
    pub fn marginal(&self, indices: &[usize]) -> Result<BaseMeasure> {
        let d = self.dim();
        if indices.is_empty()
            || indices.windows(2).any(|w| w[0] >= w[1])
            || indices.iter().any(|&i| i >= d)
        {
            return config(format!(
                "marginal indices {indices:?} must be strictly increasing and below {d}"
            ));
        }
        if indices.len() == d {
            return Ok(self.clone());
        }
        let pick = |v: &[f64]| -> Vec<f64> { indices.iter().map(|&i| v[i]).collect() };
        let kind = match &self.kind {
            Kind::Atoms { locations, weights } => Kind::Atoms {
                locations: locations.iter().map(|x| pick(x)).collect(),
                weights: weights.clone(),
            },
            Kind::UniformBox { lower, upper } => Kind::UniformBox {
                lower: pick(lower),
                upper: pick(upper),
            },
            Kind::Gaussian {
                mean, covariance, ..
            } => {
                let cov: Matrix = indices
                    .iter()
                    .map(|&i| indices.iter().map(|&j| covariance[i][j]).collect())
                    .collect();
                return BaseMeasure::gaussian(pick(mean), cov);
            }
            Kind::Product(factors) => {
                let mut offset = 0;
                let mut parts = Vec::new();
                for f in factors {
                    let fd = f.dim();
                    let local: Vec<usize> = indices
                        .iter()
                        .filter(|&&i| i >= offset && i < offset + fd)
                        .map(|&i| i - offset)
                        .collect();
                    if !local.is_empty() {
                        parts.push(f.marginal(&local)?);
                    }
                    offset += fd;
                }
                if parts.len() == 1 {
                    return Ok(parts.pop().unwrap());
                }
                Kind::Product(parts)
            }
            Kind::Mixture {
                components,
                weights,
            } => Kind::Mixture {
                components: components
                    .iter()
                    .map(|c| c.marginal(indices))
                    .collect::<Result<_>>()?,
                weights: weights.clone(),
            },
        };
        Ok(BaseMeasure { kind })
    }

    /// Weighted point set representing the measure: exact for atoms,
    /// `nodes`-point Gauss–Legendre per axis (split at `breakpoints`) for the
    /// continuous parts. Weights sum to one up to quadrature error.
    pub fn quadrature_rule(&self, nodes: usize, breakpoints: &[f64]) -> Result<QuadratureRule> {
        match &self.kind {
            Kind::Atoms { locations, weights } => {
                let mut rule = QuadratureRule::new(self.dim());
                for (x, w) in locations.iter().zip(weights) {
                    rule.push(x, *w);
                }
                Ok(rule)
            }
            Kind::UniformBox { lower, upper } => {
                let axes: Vec<Vec<(f64, f64)>> = lower
                    .iter()
                    .zip(upper)
                    .map(|(&l, &u)| {
                        interval_rule(l, u, nodes, breakpoints)
                            .into_iter()
                            .map(|(x, w)| (x, w / (u - l)))
                            .collect()
                    })
                    .collect();
                QuadratureRule::tensor(&axes)
            }
            Kind::Gaussian { mean, factor, .. } => {
                gaussian_rule(mean, factor, nodes, breakpoints)
            }
            Kind::Product(factors) => {
                let mut rule = factors[0].quadrature_rule(nodes, breakpoints)?;
                for f in &factors[1..] {
                    rule = rule.product(&f.quadrature_rule(nodes, breakpoints)?)?;
                }
                Ok(rule)
            }
            Kind::Mixture {
                components,
                weights,
            } => {
                let mut rule = QuadratureRule::new(self.dim());
                for (c, w) in components.iter().zip(weights) {
                    rule.append_scaled(&c.quadrature_rule(nodes, breakpoints)?, *w);
                }
                Ok(rule)
            }
        }
    }

    /// Declarative form of this measure.
    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec::from(self.clone())
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the last partial sum
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    let slack = |b: f64| {
        if b.is_finite() {
            BOUNDARY_SLACK * v.abs().max(b.abs())
        } else {
            0.0
        }
    };
    v >= lo - slack(lo) && v <= hi + slack(hi)
}

fn scale_rows_cols(a: &Matrix, s: &[f64]) -> Matrix {
    a.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, v)| v * s[i] * s[j]).collect())
        .collect()
}

/// Box probability of `N(mean, L Lᵀ)` by sequential conditioning on the
/// standardized coordinates `z` with `x = mean + L z`.
fn gaussian_box_mass(mean: &[f64], factor: &Matrix, lower: &[f64], upper: &[f64]) -> f64 {
    fn level(
        k: usize,
        z: &mut Vec<f64>,
        mean: &[f64],
        l: &Matrix,
        lower: &[f64],
        upper: &[f64],
    ) -> f64 {
        let d = mean.len();
        if k == d {
            return 1.0;
        }
        let c = mean[k] + (0..k).map(|j| l[k][j] * z[j]).sum::<f64>();
        let lkk = l[k][k];
        if lkk == 0.0 {
            if !within(c, lower[k], upper[k]) {
                return 0.0;
            }
            z[k] = 0.0;
            return level(k + 1, z, mean, l, lower, upper);
        }
        let a = (lower[k] - c) / lkk;
        let b = (upper[k] - c) / lkk;
        let downstream = (k + 1..d).any(|i| l[i][k] != 0.0);
        if !downstream {
            z[k] = 0.0;
            let p = normal::interval_mass(a, b);
            if p == 0.0 {
                return 0.0;
            }
            return p * level(k + 1, z, mean, l, lower, upper);
        }
        let lo = a.max(-GAUSSIAN_HALF_WIDTH - 2.0);
        let hi = b.min(GAUSSIAN_HALF_WIDTH + 2.0);
        if lo >= hi {
            return 0.0;
        }
        let gl = GaussLegendre::get(GAUSSIAN_BOX_NODES);
        gl.on_interval(lo, hi)
            .map(|(x, w)| {
                z[k] = x;
                w * normal::pdf(x) * level(k + 1, z, mean, l, lower, upper)
            })
            .sum()
    }
    let mut z = vec![0.0; mean.len()];
    level(0, &mut z, mean, factor, lower, upper)
}

fn gaussian_rule(
    mean: &[f64],
    factor: &Matrix,
    nodes: usize,
    breakpoints: &[f64],
) -> Result<QuadratureRule> {
    let d = mean.len();
    let diagonal = linalg::is_diagonal(factor);
    let axes: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|k| {
            let s = factor[k][k];
            if s == 0.0 && (0..d).all(|i| factor[i][k] == 0.0) {
                return vec![(0.0, 1.0)];
            }
            let cuts: Vec<f64> = if diagonal && s > 0.0 {
                breakpoints.iter().map(|b| (b - mean[k]) / s).collect()
            } else {
                Vec::new()
            };
            interval_rule(-GAUSSIAN_HALF_WIDTH, GAUSSIAN_HALF_WIDTH, nodes, &cuts)
                .into_iter()
                .map(|(z, w)| (z, w * normal::pdf(z)))
                .collect()
        })
        .collect();
    let standard = QuadratureRule::tensor(&axes)?;
    let mut rule = QuadratureRule::new(d);
    let mut x = vec![0.0; d];
    for (z, w) in standard.iter() {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = mean[i] + (0..=i).map(|k| factor[i][k] * z[k]).sum::<f64>();
        }
        rule.push(&x, w);
    }
    Ok(rule)
}

impl TryFrom<MeasureSpec> for BaseMeasure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Self> {
        match spec {
            MeasureSpec::PointMasses { atoms } => {
                BaseMeasure::point_masses(atoms.into_iter().map(|a| (a.location, a.weight)).collect())
            }
            MeasureSpec::UniformBox { lower, upper } => BaseMeasure::uniform_box(lower, upper),
            MeasureSpec::Gaussian { mean, covariance } => BaseMeasure::gaussian(mean, covariance),
            MeasureSpec::Product { factors } => BaseMeasure::product(
                factors
                    .into_iter()
                    .map(BaseMeasure::try_from)
                    .collect::<Result<_>>()?,
            ),
            MeasureSpec::Mixture { components } => BaseMeasure::mixture(
                components
                    .into_iter()
                    .map(|c| Ok((BaseMeasure::try_from(c.measure)?, c.weight)))
                    .collect::<Result<_>>()?,
            ),
        }
    }
}

impl From<BaseMeasure> for MeasureSpec {
    fn from(m: BaseMeasure) -> Self {
        match m.kind {
            Kind::Atoms { locations, weights } => MeasureSpec::PointMasses {
                atoms: locations
                    .into_iter()
                    .zip(weights)
                    .map(|(location, weight)| AtomSpec { location, weight })
                    .collect(),
            },
            Kind::UniformBox { lower, upper } => MeasureSpec::UniformBox { lower, upper },
            Kind::Gaussian {
                mean, covariance, ..
            } => MeasureSpec::Gaussian { mean, covariance },
            Kind::Product(factors) => MeasureSpec::Product {
                factors: factors.into_iter().map(MeasureSpec::from).collect(),
            },
            Kind::Mixture {
                components,
                weights,
            } => MeasureSpec::Mixture {
                components: components
                    .into_iter()
                    .zip(weights)
                    .map(|(m, weight)| ComponentSpec {
                        weight,
                        measure: m.into(),
                    })
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests;
