use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Contraction speed of one group relative to the critical `n_λ^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `ε_{n,λ} √n_λ → 0`
    Fast,
    /// `ε_{n,λ} √n_λ → h_λ > 0`
    Critical,
    /// `ε_{n,λ} √n_λ → ∞`
    Subcritical,
}

impl Regime {
    /// Classification of `ε = c · n^{−exponent}`.
    pub fn of_exponent(exponent: f64) -> Regime {
        if (exponent - 0.5).abs() <= 1e-12 {
            Regime::Critical
        } else if exponent > 0.5 {
            Regime::Fast
        } else {
            Regime::Subcritical
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Fast => "fast",
            Regime::Critical => "critical",
            Regime::Subcritical => "subcritical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsPoint {
    pub n: u64,
    pub eps: f64,
}

/// Contraction rule of a single group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ContractionRule {
    /// `ε_{n,λ} = coefficient · n_λ^{−exponent}`
    PowerLaw { coefficient: f64, exponent: f64 },
    /// Tabulated `ε` keyed by the total population `n`. The regime cannot be
    /// inferred from finitely many values, so it is declared.
    Explicit {
        table: Vec<EpsPoint>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        regime: Option<Regime>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        critical_constant: Option<f64>,
    },
}

impl ContractionRule {
    fn validate(&self, group: usize) -> Result<()> {
        match self {
            ContractionRule::PowerLaw {
                coefficient,
                exponent,
            } => {
                if !(coefficient.is_finite() && *coefficient > 0.0) {
                    return config(format!(
                        "group {group}: power-law coefficient must be positive, got {coefficient}"
                    ));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return config(format!(
                        "group {group}: ε_n must tend to 0, which needs a positive power-law exponent (got {exponent})"
                    ));
                }
            }
            ContractionRule::Explicit {
                table,
                regime,
                critical_constant,
            } => {
                if table.is_empty() {
                    return config(format!("group {group}: explicit ε table is empty"));
                }
                if table.iter().any(|p| !(p.eps.is_finite() && p.eps > 0.0)) {
                    return config(format!("group {group}: every tabulated ε must be positive"));
                }
                if table.windows(2).any(|w| w[0].n >= w[1].n) {
                    return config(format!(
                        "group {group}: explicit ε table must have strictly increasing n"
                    ));
                }
                let growing = table.windows(2).any(|w| w[1].eps > w[0].eps);
                let flat = table.len() > 1 && table[table.len() - 1].eps >= table[0].eps;
                if growing || flat {
                    return config(format!(
                        "group {group}: ε_n must tend to 0, but the tabulated values do not decrease in n"
                    ));
                }
                if *regime == Some(Regime::Critical)
                    && !critical_constant.is_some_and(|h| h.is_finite() && h > 0.0)
                {
                    return config(format!(
                        "group {group}: critical explicit schedule needs a positive critical_constant"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Option<Regime> {
        match self {
            ContractionRule::PowerLaw { exponent, .. } => Some(Regime::of_exponent(*exponent)),
            ContractionRule::Explicit { regime, .. } => *regime,
        }
    }

    /// `h_λ = lim ε √n_λ` for critical rules.
    pub fn critical_constant(&self) -> Option<f64> {
        match self {
            ContractionRule::PowerLaw {
                coefficient,
                exponent,
            } => (Regime::of_exponent(*exponent) == Regime::Critical).then_some(*coefficient),
            ContractionRule::Explicit {
                regime: Some(Regime::Critical),
                critical_constant,
                ..
            } => *critical_constant,
            ContractionRule::Explicit { .. } => None,
        }
    }

    pub fn eps(&self, n: u64, group_size: usize) -> Result<f64> {
        match self {
            ContractionRule::PowerLaw {
                coefficient,
                exponent,
            } => Ok(coefficient * (group_size as f64).powf(-exponent)),
            ContractionRule::Explicit { table, .. } => table
                .iter()
                .find(|p| p.n == n)
                .map(|p| p.eps)
                .ok_or_else(|| Error::Config(format!("explicit ε table has no entry for n = {n}"))),
        }
    }
}

/// Per-group contraction rates `ε_{n,λ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ContractionRule>", into = "Vec<ContractionRule>")]
pub struct ContractionSchedule {
    rules: Vec<ContractionRule>,
}

impl ContractionSchedule {
    pub fn new(rules: Vec<ContractionRule>) -> Result<Self> {
        if rules.is_empty() {
            return config("contraction schedule needs one rule per group");
        }
        for (g, r) in rules.iter().enumerate() {
            r.validate(g)?;
        }
        Ok(ContractionSchedule { rules })
    }

    /// The same power law for each of `groups` groups.
    pub fn power_law(groups: usize, coefficient: f64, exponent: f64) -> Result<Self> {
        Self::new(vec![
            ContractionRule::PowerLaw {
                coefficient,
                exponent
            };
            groups
        ])
    }

    /// Unit-coefficient power laws with one exponent per group.
    pub fn exponents(exponents: &[f64]) -> Result<Self> {
        Self::new(
            exponents
                .iter()
                .map(|&exponent| ContractionRule::PowerLaw {
                    coefficient: 1.0,
                    exponent,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[ContractionRule] {
        &self.rules
    }

    /// Regime of every group; fails for explicit rules without a declared regime.
    pub fn regimes(&self) -> Result<Vec<Regime>> {
        self.rules
            .iter()
            .enumerate()
            .map(|(g, r)| {
                r.regime().ok_or_else(|| {
                    Error::Config(format!(
                        "group {g}: explicit ε table carries no regime tag; regimes cannot be classified from finitely many values"
                    ))
                })
            })
            .collect()
    }

    pub fn critical_constants(&self) -> Vec<Option<f64>> {
        self.rules.iter().map(ContractionRule::critical_constant).collect()
    }

    /// `ε_n` for total population `n` with group sizes `sizes`.
    pub fn eps(&self, n: u64, sizes: &[usize]) -> Result<Vec<f64>> {
        if sizes.len() != self.rules.len() {
            return config(format!(
                "schedule has {} rules but the model has {} groups",
                self.rules.len(),
                sizes.len()
            ));
        }
        self.rules
            .iter()
            .zip(sizes)
            .map(|(r, &s)| r.eps(n, s))
            .collect()
    }
}

impl TryFrom<Vec<ContractionRule>> for ContractionSchedule {
    type Error = Error;
    fn try_from(rules: Vec<ContractionRule>) -> Result<Self> {
        Self::new(rules)
    }
}

impl From<ContractionSchedule> for Vec<ContractionRule> {
    fn from(s: ContractionSchedule) -> Self {
        s.rules
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_law_classification() {
        let s = ContractionSchedule::new(vec![
            ContractionRule::PowerLaw { coefficient: 1.0, exponent: 0.75 },
            ContractionRule::PowerLaw { coefficient: 2.5, exponent: 0.5 },
            ContractionRule::PowerLaw { coefficient: 1.0, exponent: 0.15 },
        ])
        .unwrap();
        assert_eq!(
            s.regimes().unwrap(),
            vec![Regime::Fast, Regime::Critical, Regime::Subcritical]
        );
        assert_eq!(s.critical_constants(), vec![None, Some(2.5), None]);
        let eps = s.eps(300, &[100, 100, 100]).unwrap();
        assert!((eps[0] - 100f64.powf(-0.75)).abs() < 1e-15);
        assert!((eps[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn growing_schedules_are_rejected() {
        let err = ContractionSchedule::power_law(1, 1.0, -0.2).unwrap_err();
        assert!(err.to_string().contains("ε_n must tend to 0"), "{err}");
        let err = ContractionSchedule::new(vec![ContractionRule::Explicit {
            table: vec![EpsPoint { n: 10, eps: 0.1 }, EpsPoint { n: 100, eps: 0.2 }],
            regime: Some(Regime::Fast),
            critical_constant: None,
        }])
        .unwrap_err();
        assert!(err.to_string().contains("ε_n must tend to 0"), "{err}");
    }

    #[test]
    fn explicit_needs_regime_tag() {
        let s = ContractionSchedule::new(vec![ContractionRule::Explicit {
            table: vec![EpsPoint { n: 10, eps: 0.3 }, EpsPoint { n: 100, eps: 0.1 }],
            regime: None,
            critical_constant: None,
        }])
        .unwrap();
        assert!(matches!(s.regimes(), Err(Error::Config(_))));
        assert_eq!(s.eps(100, &[100]).unwrap(), vec![0.1]);
        assert!(s.eps(50, &[50]).is_err());
    }

    proptest! {
        #[test]
        fn classification_is_total(a in 0.001f64..3.0, c in 0.01f64..10.0) {
            let s = ContractionSchedule::power_law(1, c, a).unwrap();
            let r = s.regimes().unwrap()[0];
            let expected = if a > 0.5 { Regime::Fast } else if a < 0.5 { Regime::Subcritical } else { Regime::Critical };
            prop_assert_eq!(r, expected);
            prop_assert!(s.eps(10, &[10]).unwrap() > s.eps(1000, &[1000]).unwrap());
        }
    }
}
