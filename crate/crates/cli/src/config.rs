use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use dfvote_core::voting::DeFinettiModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Experiment kinds; one per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    VerifyClt,
    VerifyLlt,
    VerifyCwm,
    EstimateAlpha,
    CorrelationDecay,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::VerifyClt => "verify-clt",
            Kind::VerifyLlt => "verify-llt",
            Kind::VerifyCwm => "verify-cwm",
            Kind::EstimateAlpha => "estimate-alpha",
            Kind::CorrelationDecay => "correlation-decay",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pass/fail thresholds. Unset entries fall back to per-kind defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    /// KS threshold for subcritical coordinates, whose finite-n binomial
    /// noise decays only like `n_λ^{a − 1/2}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_subcritical: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factorization: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration_r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_range: Option<[f64; 2]>,
}

impl Thresholds {
    fn is_empty(&self) -> bool {
        *self == Thresholds::default()
    }
}

/// Curie–Weiss checks run by `verify-cwm`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwmChecks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence_n: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration_n: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// One experiment, as read from a TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Thresholds::is_empty")]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cwm: Option<CwmChecks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<DeFinettiModel>,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        ExperimentConfig {
            kind: None,
            seed,
            n: None,
            n_grid: None,
            count: None,
            out: None,
            workers: None,
            input: None,
            thresholds: Thresholds::default(),
            cwm: None,
            model: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::config(None, e.to_string()))
    }

    /// sha256 over the canonical JSON form with the run-location fields
    /// (`out`, `workers`) removed; `kind` is filled in with `kind`.
    pub fn hash(&self, kind: Kind) -> String {
        let mut c = self.clone();
        c.kind = Some(kind);
        c.out = None;
        c.workers = None;
        // serde_json maps are key-sorted, so this string is canonical
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// The subcommand's kind, checked against the document's own.
    pub fn resolve_kind(&self, requested: Kind) -> Result<Kind, CliError> {
        match self.kind {
            Some(k) if k != requested => Err(CliError::config(
                Some("kind"),
                format!("config declares kind = \"{k}\" but the `{requested}` subcommand was invoked"),
            )),
            _ => Ok(requested),
        }
    }
}

/// A config together with the document it came from, for line-anchored
/// messages.
#[derive(Debug, Clone)]
pub struct ConfigSource {
    pub path: PathBuf,
    pub text: String,
}

impl ConfigSource {
    pub fn read(path: &Path) -> Result<(ExperimentConfig, ConfigSource), CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::config(None, format!("cannot read config {}: {e}", path.display()))
        })?;
        let source = ConfigSource {
            path: path.to_owned(),
            text,
        };
        match ExperimentConfig::from_toml(&source.text) {
            Ok(c) => Ok((c, source)),
            Err(e) => {
                let (line, col) = match e.span() {
                    Some(span) => line_col(&source.text, span.start),
                    None => (1, 1),
                };
                Err(CliError::Config {
                    message: e.message().trim().to_owned(),
                    key: None,
                    location: Some(format!("{}:{line}:{col}", path.display())),
                })
            }
        }
    }

    /// Attaches `path:line:col` to a config error, pointing at its key (or
    /// at the `[model]` table for model errors raised at run time).
    pub fn anchor(&self, err: CliError) -> CliError {
        match err {
            CliError::Config {
                message,
                key,
                location: None,
            } => {
                let (line, col) = key
                    .as_deref()
                    .and_then(|k| find_key(&self.text, k))
                    .or_else(|| find_key(&self.text, "model"))
                    .unwrap_or((1, 1));
                CliError::Config {
                    message,
                    key,
                    location: Some(format!("{}:{line}:{col}", self.path.display())),
                }
            }
            other => other,
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// First line defining `key` either as `key = ...` or as a `[key]` table
/// header (dotted keys match on the last component).
fn find_key(text: &str, key: &str) -> Option<(usize, usize)> {
    let last = key.rsplit('.').next().unwrap_or(key);
    let header = format!("[{key}]");
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        if trimmed.starts_with(&header) {
            return Some((i + 1, indent + 1));
        }
        if let Some(rest) = trimmed.strip_prefix(last) {
            if rest.trim_start().starts_with('=') {
                return Some((i + 1, indent + 1));
            }
        }
    }
    None
}
