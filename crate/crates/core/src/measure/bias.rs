use serde::{Deserialize, Serialize};

/// Monotone map from a latent bias `m ∈ R^M` to vote biases `m̄ ∈ [−1, 1]^M`,
/// applied componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasMap {
    /// `m̄ = tanh m`, the Curie–Weiss choice for measures on all of `R^M`.
    Tanh,
    /// `m̄ = clamp(m, −1, 1)`; the identity on `[−1, 1]^M`.
    ClampIdentity,
}

impl BiasMap {
    pub fn apply_scalar(self, m: f64) -> f64 {
        match self {
            BiasMap::Tanh => m.tanh(),
            BiasMap::ClampIdentity => m.clamp(-1.0, 1.0),
        }
    }

    pub fn apply(self, m: &[f64]) -> Vec<f64> {
        m.iter().map(|&v| self.apply_scalar(v)).collect()
    }

    pub fn apply_into(self, m: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(m) {
            *o = self.apply_scalar(v);
        }
    }

    /// Points where the map fails to be smooth.
    pub(crate) fn kinks(self) -> &'static [f64] {
        match self {
            BiasMap::Tanh => &[],
            BiasMap::ClampIdentity => &[-1.0, 1.0],
        }
    }
}
