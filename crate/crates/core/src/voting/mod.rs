//! De Finetti voting models: group structure, mixing sequences, exact margin
//! laws and Monte Carlo margin samples.

mod pmf;
pub(crate) mod sample;

pub use pmf::{
    brute_force_pmf, conditional_margin_pmf, exact_margin_pmf, pair_correlation, MarginPmf,
    BRUTE_FORCE_MAX_N, MAX_LATTICE,
};
pub(crate) use pmf::{lattice_len, ln_binomial_row};
pub use sample::{
    expected_abs_margin, sample_margins, sample_margins_with_workers, AbsMargin, MarginMode,
    MarginSample,
};

use serde::{Deserialize, Serialize};

use crate::cwm::{CouplingSpec, FreeEnergy};
use crate::error::{config, Error, Result};
use crate::measure::{BaseMeasure, BiasMap, ContractionSchedule, Regime};
use crate::quadrature::QuadratureRule;

/// Largest population accepted by the samplers.
pub const MAX_POPULATION: u64 = 1 << 40;

/// Group proportions `c_λ` and the resolver `n ↦ (n_1, …, n_M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GroupStructure {
    proportions: Vec<f64>,
}

impl GroupStructure {
    pub fn new(proportions: Vec<f64>) -> Result<Self> {
        if proportions.is_empty() {
            return config("group structure needs at least one group");
        }
        if proportions.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return config("group proportions must be positive");
        }
        let total: f64 = proportions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return config(format!("group proportions sum to {total}, expected 1"));
        }
        Ok(GroupStructure { proportions })
    }

    pub fn single() -> Self {
        GroupStructure {
            proportions: vec![1.0],
        }
    }

    pub fn equal(groups: usize) -> Result<Self> {
        Self::new(vec![1.0 / groups as f64; groups])
    }

    pub fn len(&self) -> usize {
        self.proportions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    /// Group sizes for a population of `n`: largest-remainder rounding of
    /// `c_λ n`, then every group raised to at least 2 by taking voters from
    /// the currently largest group. Always sums to `n`.
    pub fn sizes(&self, n: u64) -> Result<Vec<usize>> {
        let m = self.proportions.len();
        if n < 2 * m as u64 {
            return config(format!(
                "population {n} is too small for {m} groups of at least 2 voters"
            ));
        }
        if n > MAX_POPULATION {
            return Err(Error::Resource(format!(
                "population {n} exceeds the supported maximum {MAX_POPULATION}"
            )));
        }
        let nf = n as f64;
        let mut sizes: Vec<u64> = self
            .proportions
            .iter()
            .map(|c| (c * nf).floor() as u64)
            .collect();
        let assigned: u64 = sizes.iter().sum();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            let fa = self.proportions[a] * nf - sizes[a] as f64;
            let fb = self.proportions[b] * nf - sizes[b] as f64;
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        if assigned <= n {
            for &g in order.iter().cycle().take((n - assigned) as usize) {
                sizes[g] += 1;
            }
        } else {
            // floating rounding overshoot; trim from the smallest remainders
            for &g in order.iter().rev().cycle().take((assigned - n) as usize) {
                sizes[g] -= 1;
            }
        }
        while let Some(small) = sizes.iter().position(|&s| s < 2) {
            let big = (0..m).max_by_key(|&g| (sizes[g], std::cmp::Reverse(g))).unwrap();
            sizes[big] -= 1;
            sizes[small] += 1;
        }
        Ok(sizes.into_iter().map(|s| s as usize).collect())
    }
}

impl TryFrom<Vec<f64>> for GroupStructure {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<GroupStructure> for Vec<f64> {
    fn from(g: GroupStructure) -> Self {
        g.proportions
    }
}

/// How the mixing measure `μ_n` depends on `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DeFinettiSequence {
    /// Collective bias model: `μ_n = μ` for every `n`.
    Static { measure: BaseMeasure },
    /// `μ_n` is `μ` pushed forward under `x ↦ ε_n ∘ x`.
    Contracted {
        measure: BaseMeasure,
        schedule: ContractionSchedule,
    },
    /// Multi-group Curie–Weiss model through its de Finetti density.
    CurieWeiss { coupling: CouplingSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelSpec {
    proportions: GroupStructure,
    bias_map: BiasMap,
    sequence: DeFinettiSequence,
}

/// A complete voting model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct DeFinettiModel {
    groups: GroupStructure,
    sequence: DeFinettiSequence,
    bias_map: BiasMap,
}

/// `μ_n` in a form that can be integrated against.
pub(crate) enum Mixing {
    Measure(BaseMeasure),
    CurieWeiss(Box<FreeEnergy>),
}

impl DeFinettiModel {
    pub fn new(groups: GroupStructure, sequence: DeFinettiSequence, bias_map: BiasMap) -> Result<Self> {
        let m = groups.len();
        match &sequence {
            DeFinettiSequence::Static { measure } => {
                if measure.dim() != m {
                    return config(format!("measure has dimension {} but the model has {m} groups", measure.dim()));
                }
                if !measure.is_symmetric() {
                    return config("a static de Finetti measure must be symmetric for the model to be a voting measure");
                }
            }
            DeFinettiSequence::Contracted { measure, schedule } => {
                if measure.dim() != m {
                    return config(format!("measure has dimension {} but the model has {m} groups", measure.dim()));
                }
                if schedule.len() != m {
                    return config(format!("schedule has {} rules but the model has {m} groups", schedule.len()));
                }
            }
            DeFinettiSequence::CurieWeiss { coupling } => {
                if coupling.dim() != m {
                    return config(format!("coupling matrix is {0}x{0} but the model has {m} groups", coupling.dim()));
                }
                if bias_map != BiasMap::Tanh {
                    return config("the Curie–Weiss de Finetti representation uses the tanh bias map");
                }
            }
        }
        Ok(DeFinettiModel {
            groups,
            sequence,
            bias_map,
        })
    }

    /// Static (collective bias) model.
    pub fn collective_bias(groups: GroupStructure, measure: BaseMeasure, bias_map: BiasMap) -> Result<Self> {
        Self::new(groups, DeFinettiSequence::Static { measure }, bias_map)
    }

    pub fn contracted(
        groups: GroupStructure,
        measure: BaseMeasure,
        schedule: ContractionSchedule,
        bias_map: BiasMap,
    ) -> Result<Self> {
        Self::new(groups, DeFinettiSequence::Contracted { measure, schedule }, bias_map)
    }

    pub fn curie_weiss(groups: GroupStructure, coupling: CouplingSpec) -> Result<Self> {
        Self::new(groups, DeFinettiSequence::CurieWeiss { coupling }, BiasMap::Tanh)
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }

    pub fn sequence(&self) -> &DeFinettiSequence {
        &self.sequence
    }

    pub fn bias_map(&self) -> BiasMap {
        self.bias_map
    }

    pub fn dim(&self) -> usize {
        self.groups.len()
    }

    /// `μ_n` for the static and contracted sequences; `None` for the
    /// Curie–Weiss density, which lies outside the measure algebra.
    pub fn mixing_measure(&self, n: u64) -> Result<Option<BaseMeasure>> {
        match &self.sequence {
            DeFinettiSequence::Static { measure } => Ok(Some(measure.clone())),
            DeFinettiSequence::Contracted { measure, schedule } => {
                let sizes = self.groups.sizes(n)?;
                let eps = schedule.eps(n, &sizes)?;
                Ok(Some(measure.contract(&eps)))
            }
            DeFinettiSequence::CurieWeiss { .. } => Ok(None),
        }
    }

    pub(crate) fn mixing(&self, n: u64) -> Result<Mixing> {
        match &self.sequence {
            DeFinettiSequence::CurieWeiss { coupling } => {
                if coupling.is_zero() {
                    return Ok(Mixing::Measure(BaseMeasure::dirac(vec![0.0; self.dim()])?));
                }
                Ok(Mixing::CurieWeiss(Box::new(FreeEnergy::new(coupling, &self.groups, n)?)))
            }
            _ => Ok(Mixing::Measure(self.mixing_measure(n)?.expect("measure-backed sequence"))),
        }
    }

    /// Per-group regime of the sequence.
    ///
    /// A static measure is fast in a coordinate where its marginal is `δ_0`
    /// (independent voters) and subcritical otherwise (`ε ≡ 1`). The
    /// Curie–Weiss density concentrates at scale `n^{-1/2}` and is reported as
    /// critical.
    pub fn regimes(&self) -> Result<Vec<Regime>> {
        match &self.sequence {
            DeFinettiSequence::Static { measure } => Ok((0..self.dim())
                .map(|g| {
                    if degenerate_at_zero(measure, g) {
                        Regime::Fast
                    } else {
                        Regime::Subcritical
                    }
                })
                .collect()),
            DeFinettiSequence::Contracted { schedule, .. } => schedule.regimes(),
            DeFinettiSequence::CurieWeiss { .. } => Ok(vec![Regime::Critical; self.dim()]),
        }
    }

    /// Normalization `γ_{n,λ}`: `√n_λ` in the fast and critical regimes,
    /// `ε_{n,λ} n_λ` in the subcritical one.
    pub fn normalization(&self, n: u64) -> Result<Vec<f64>> {
        let sizes = self.groups.sizes(n)?;
        let regimes = self.regimes()?;
        let eps = match &self.sequence {
            DeFinettiSequence::Contracted { schedule, .. } => schedule.eps(n, &sizes)?,
            _ => vec![1.0; sizes.len()],
        };
        Ok(sizes
            .iter()
            .zip(&regimes)
            .zip(&eps)
            .map(|((&s, r), e)| match r {
                Regime::Fast | Regime::Critical => (s as f64).sqrt(),
                Regime::Subcritical => e * s as f64,
            })
            .collect())
    }
}

fn degenerate_at_zero(measure: &BaseMeasure, group: usize) -> bool {
    let d = measure.dim();
    let mut lo = vec![f64::NEG_INFINITY; d];
    let mut hi = vec![f64::INFINITY; d];
    lo[group] = 0.0;
    hi[group] = 0.0;
    measure.mass_in_box(&lo, &hi) >= 1.0 - 1e-12
}

impl Mixing {
    pub(crate) fn is_atomic(&self) -> bool {
        match self {
            Mixing::Measure(m) => m.is_atomic(),
            Mixing::CurieWeiss(_) => false,
        }
    }

    /// Probability-normalized quadrature rule for `μ_n`.
    pub(crate) fn rule(&self, nodes: usize, kinks: &[f64]) -> Result<QuadratureRule> {
        match self {
            Mixing::Measure(m) => m.quadrature_rule(nodes, kinks),
            Mixing::CurieWeiss(f) => f.probability_rule(nodes),
        }
    }
}

impl TryFrom<ModelSpec> for DeFinettiModel {
    type Error = Error;
    fn try_from(s: ModelSpec) -> Result<Self> {
        DeFinettiModel::new(s.proportions, s.sequence, s.bias_map)
    }
}

impl From<DeFinettiModel> for ModelSpec {
    fn from(m: DeFinettiModel) -> Self {
        ModelSpec {
            proportions: m.groups,
            bias_map: m.bias_map,
            sequence: m.sequence,
        }
    }
}

#[cfg(test)]
mod tests;
