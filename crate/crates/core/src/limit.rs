//! Limiting laws of the normalized margins and their CDF / CF evaluation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{config, Error, Result};
use crate::measure::{BaseMeasure, BiasMap, Regime};
use crate::normal;
use crate::quadrature::escalate;
use crate::rng::run_batched;
use crate::voting::{DeFinettiModel, DeFinettiSequence};

/// Draws used for multi-dimensional CDF estimates.
pub const CDF_SAMPLES: usize = 1_000_000;
const CDF_SEED: u64 = 0x5eed_cdf;

#[derive(Debug, Clone, PartialEq)]
pub enum LimitLaw {
    /// `N(0, I_M)`.
    StandardGaussian { dim: usize },
    /// `N(0, I_M) ∗ scaled`, with `scaled` the base measure stretched by `h`.
    Convolution { scaled: BaseMeasure },
    /// The base measure itself.
    BaseMeasureLimit { measure: BaseMeasure },
    /// Independent `N(0, 1)` coordinates on the fast cluster, and
    /// `(Z, 0) + W` on the critical and subcritical clusters, where `Z` is
    /// standard Gaussian on the critical coordinates and `W` follows
    /// `mixing`, the joint marginal of the base measure on those coordinates
    /// (critical ones stretched by `h`), listed in increasing order.
    ClusterProduct { regimes: Vec<Regime>, mixing: BaseMeasure },
}

/// Values from a CDF backend; `std_error` is zero for exact evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub value: f64,
    pub std_error: f64,
}

impl LimitLaw {
    pub fn dim(&self) -> usize {
        match self {
            LimitLaw::StandardGaussian { dim } => *dim,
            LimitLaw::Convolution { scaled } => scaled.dim(),
            LimitLaw::BaseMeasureLimit { measure } => measure.dim(),
            LimitLaw::ClusterProduct { regimes, .. } => regimes.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LimitLaw::StandardGaussian { .. } => "standard-gaussian",
            LimitLaw::Convolution { .. } => "convolution",
            LimitLaw::BaseMeasureLimit { .. } => "base-measure",
            LimitLaw::ClusterProduct { .. } => "cluster-product",
        }
    }

    /// Indices of the coordinates in a given regime.
    pub fn cluster(&self, regime: Regime) -> Vec<usize> {
        match self {
            LimitLaw::ClusterProduct { regimes, .. } => {
                (0..regimes.len()).filter(|&i| regimes[i] == regime).collect()
            }
            LimitLaw::StandardGaussian { dim } if regime == Regime::Fast => (0..*dim).collect(),
            LimitLaw::Convolution { scaled } if regime == Regime::Critical => (0..scaled.dim()).collect(),
            LimitLaw::BaseMeasureLimit { measure } if regime == Regime::Subcritical => {
                (0..measure.dim()).collect()
            }
            _ => Vec::new(),
        }
    }

    /// One-dimensional law of coordinate `g`.
    pub fn marginal(&self, g: usize) -> Result<LimitLaw> {
        if g >= self.dim() {
            return Err(Error::Data(format!("coordinate {g} out of range for dimension {}", self.dim())));
        }
        Ok(match self {
            LimitLaw::StandardGaussian { .. } => LimitLaw::StandardGaussian { dim: 1 },
            LimitLaw::Convolution { scaled } => LimitLaw::Convolution { scaled: scaled.marginal(&[g])? },
            LimitLaw::BaseMeasureLimit { measure } => LimitLaw::BaseMeasureLimit { measure: measure.marginal(&[g])? },
            LimitLaw::ClusterProduct { regimes, mixing } => {
                let j = regimes[..g].iter().filter(|&&r| r != Regime::Fast).count();
                match regimes[g] {
                    Regime::Fast => LimitLaw::StandardGaussian { dim: 1 },
                    Regime::Critical => LimitLaw::Convolution { scaled: mixing.marginal(&[j])? },
                    Regime::Subcritical => LimitLaw::BaseMeasureLimit { measure: mixing.marginal(&[j])? },
                }
            }
        })
    }

    fn regimes(&self) -> Vec<Regime> {
        match self {
            LimitLaw::StandardGaussian { dim } => vec![Regime::Fast; *dim],
            LimitLaw::Convolution { scaled } => vec![Regime::Critical; scaled.dim()],
            LimitLaw::BaseMeasureLimit { measure } => vec![Regime::Subcritical; measure.dim()],
            LimitLaw::ClusterProduct { regimes, .. } => regimes.clone(),
        }
    }

    fn mixing(&self) -> Option<&BaseMeasure> {
        match self {
            LimitLaw::StandardGaussian { .. } => None,
            LimitLaw::Convolution { scaled } => Some(scaled),
            LimitLaw::BaseMeasureLimit { measure } => Some(measure),
            LimitLaw::ClusterProduct { mixing, .. } => Some(mixing),
        }
    }

    /// Seeded draws from the law.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::Data("sample count must be at least 1".into()));
        }
        let regimes = self.regimes();
        let mixing = self.mixing();
        let dim = regimes.len();
        run_batched(count, seed, 0, |rng, range| {
            let mut w = vec![0.0; mixing.map_or(0, |m| m.dim())];
            Ok(range
                .map(|_| {
                    if let Some(m) = mixing {
                        m.draw_into(rng, &mut w);
                    }
                    let mut j = 0;
                    (0..dim)
                        .map(|i| {
                            let mut z = || rng.sample::<f64, _>(StandardNormal);
                            match regimes[i] {
                                Regime::Fast => z(),
                                Regime::Critical => {
                                    j += 1;
                                    w[j - 1] + z()
                                }
                                Regime::Subcritical => {
                                    j += 1;
                                    w[j - 1]
                                }
                            }
                        })
                        .collect()
                })
                .collect())
        })
    }
}

/// Limit law of the normalized margins of `model`.
///
/// Contracted sequences follow their schedule's regimes: fast coordinates
/// become standard Gaussian, critical ones Gaussian plus the base measure
/// stretched by `h`, subcritical ones the base measure. A static model is
/// subcritical wherever its marginal is not `δ_0`, which needs the bias map
/// to act as the identity on the support (`ClampIdentity` with support in
/// `[−1, 1]^M`).
pub fn limit_for(model: &DeFinettiModel) -> Result<LimitLaw> {
    let regimes = model.regimes()?;
    let (base, h) = match model.sequence() {
        DeFinettiSequence::Contracted { measure, schedule } => {
            let consts = schedule.critical_constants();
            let h = regimes
                .iter()
                .zip(&consts)
                .enumerate()
                .map(|(g, (r, c))| match (r, c) {
                    (Regime::Critical, Some(h)) => Ok(*h),
                    (Regime::Critical, None) => config(format!(
                        "group {g} is tagged critical but declares no critical constant"
                    )),
                    _ => Ok(1.0),
                })
                .collect::<Result<Vec<f64>>>()?;
            (measure.clone(), h)
        }
        DeFinettiSequence::Static { measure } => {
            let d = measure.dim();
            let inside = measure.mass_in_box(&vec![-1.0; d], &vec![1.0; d]) >= 1.0 - 1e-12;
            if regimes.contains(&Regime::Subcritical) && !(model.bias_map() == BiasMap::ClampIdentity && inside) {
                return config(
                    "the limit of a static model is the bias-mapped measure; only ClampIdentity with support in [-1, 1] is supported",
                );
            }
            (measure.clone(), vec![1.0; d])
        }
        DeFinettiSequence::CurieWeiss { .. } => {
            return config("no closed-form limit law for the Curie–Weiss model; compare empirical covariances instead")
        }
    };
    let dim = regimes.len();
    if regimes.iter().all(|&r| r == Regime::Fast) {
        return Ok(LimitLaw::StandardGaussian { dim });
    }
    if regimes.iter().all(|&r| r == Regime::Critical) {
        return Ok(LimitLaw::Convolution { scaled: base.contract(&h) });
    }
    if regimes.iter().all(|&r| r == Regime::Subcritical) {
        return Ok(LimitLaw::BaseMeasureLimit { measure: base });
    }
    let keep: Vec<usize> = (0..dim).filter(|&i| regimes[i] != Regime::Fast).collect();
    let stretch: Vec<f64> = keep.iter().map(|&i| h[i]).collect();
    let mixing = base.marginal(&keep)?.contract(&stretch);
    Ok(LimitLaw::ClusterProduct { regimes, mixing })
}

/// Characteristic function of the law at `t`.
pub fn limit_cf(law: &LimitLaw, t: &[f64]) -> Complex64 {
    let regimes = law.regimes();
    let gauss: f64 = regimes
        .iter()
        .zip(t)
        .filter(|(r, _)| **r != Regime::Subcritical)
        .map(|(_, v)| v * v)
        .sum();
    let tw: Vec<f64> = regimes
        .iter()
        .zip(t)
        .filter(|(r, _)| **r != Regime::Fast)
        .map(|(_, v)| *v)
        .collect();
    let mix = law
        .mixing()
        .map_or(Complex64::new(1.0, 0.0), |m| m.characteristic_function(&tw));
    mix * (-0.5 * gauss).exp()
}

/// `E_m e^{itX}` for one vote with bias `m`: `cos t + i m sin t`.
pub fn conditional_cf(m: f64, t: f64) -> Complex64 {
    Complex64::new(t.cos(), m * t.sin())
}

/// `P(X ≤ x)` componentwise. Exact in one dimension; in higher dimensions
/// estimated from [`CDF_SAMPLES`] seeded draws with its standard error.
pub fn limit_cdf(law: &LimitLaw, x: &[f64]) -> Result<CdfValue> {
    if x.len() != law.dim() {
        return Err(Error::Data(format!(
            "point has {} coordinates, law has dimension {}",
            x.len(),
            law.dim()
        )));
    }
    if law.dim() == 1 {
        return Ok(CdfValue {
            value: cdf_1d(law, x[0])?,
            std_error: 0.0,
        });
    }
    let draws = law.sample(CDF_SAMPLES, CDF_SEED)?;
    let hits = draws
        .iter()
        .filter(|d| d.iter().zip(x).all(|(a, b)| a <= b))
        .count();
    let p = hits as f64 / CDF_SAMPLES as f64;
    Ok(CdfValue {
        value: p,
        std_error: (p * (1.0 - p) / CDF_SAMPLES as f64).sqrt(),
    })
}

/// One-dimensional CDF as a closure, for KS comparisons.
pub fn cdf_fn(law: &LimitLaw) -> Result<impl Fn(f64) -> f64 + '_> {
    if law.dim() != 1 {
        return config("an exact CDF is only available in one dimension");
    }
    // fail early on a non-convergent convolution
    cdf_1d(law, 0.0)?;
    Ok(move |x| cdf_1d(law, x).expect("checked above"))
}

fn cdf_1d(law: &LimitLaw, x: f64) -> Result<f64> {
    match law {
        LimitLaw::StandardGaussian { .. } => Ok(normal::cdf(x)),
        LimitLaw::BaseMeasureLimit { measure } => Ok(measure.mass_in_box(&[f64::NEG_INFINITY], &[x])),
        LimitLaw::Convolution { scaled } => {
            // E Φ(x − W)
            if scaled.is_atomic() {
                let rule = scaled.quadrature_rule(1, &[])?;
                return Ok(rule.iter().map(|(w, p)| p * normal::cdf(x - w[0])).sum());
            }
            Ok(escalate(1e-15, 0.0, |nodes| {
                let rule = scaled.quadrature_rule(nodes, &[])?;
                Ok(vec![rule.iter().map(|(w, p)| p * normal::cdf(x - w[0])).sum()])
            })?
            .value[0])
        }
        LimitLaw::ClusterProduct { .. } => unreachable!("cluster laws have at least two coordinates"),
    }
}
