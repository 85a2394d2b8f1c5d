use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dfvote_core::cwm::{concentration_profile, representation_equivalence_check, sample_cwm_margins_with, CwmSampler};
use dfvote_core::limit::{cdf_fn, limit_for};
use dfvote_core::verify::{
    cf_factorization_discrepancy, correlation_decay_report, decay_observed, default_grid,
    ecf_distance, estimate_alpha, ks_statistic, ks_threshold, linear_fit, llt_sup_error,
    sample_correlation, AlphaFit, VerificationReport,
};
use dfvote_core::voting::{
    expected_abs_margin, sample_margins_with_workers, DeFinettiModel, DeFinettiSequence,
    MarginMode, MarginSample,
};
use dfvote_core::Regime;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Kind};
use crate::error::CliError;
use crate::ingest::ingest_margins;

const DEFAULT_OUT: &str = "dfvote-out";
const DEFAULT_LLT: f64 = 0.01;
const DEFAULT_CORRELATION: f64 = 1e-3;
const DEFAULT_FACTORIZATION: f64 = 0.03;
const DEFAULT_EQUIVALENCE: f64 = 1e-8;
const DEFAULT_R2: f64 = 0.999;
const DEFAULT_EQUIVALENCE_N: [u64; 3] = [8, 12, 16];
const DEFAULT_CONCENTRATION_N: [u64; 4] = [20, 40, 80, 160];
const DEFAULT_DELTA: f64 = 0.5;

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: Kind,
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub reports: Vec<VerificationReport>,
    pub alpha: Option<AlphaFit>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Everything computed before anything is written.
#[derive(Default)]
struct Results {
    reports: Vec<VerificationReport>,
    sample: Option<MarginSample>,
    alpha: Option<AlphaFit>,
    points: Vec<(u64, f64)>,
    warnings: Vec<String>,
}

pub fn run(config: &ExperimentConfig, kind: Kind) -> Result<Outcome, CliError> {
    let kind = config.resolve_kind(kind)?;
    let results = match kind {
        Kind::Simulate => simulate(config)?,
        Kind::VerifyClt => verify_clt(config)?,
        Kind::VerifyLlt => verify_llt(config)?,
        Kind::VerifyCwm => verify_cwm(config)?,
        Kind::EstimateAlpha => alpha(config)?,
        Kind::CorrelationDecay => correlation_decay(config)?,
    };
    let hash = config.hash(kind);
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let artifacts = write_artifacts(&out_dir, config, kind, &hash, &results)?;
    Ok(Outcome {
        kind,
        config_hash: hash,
        out_dir,
        reports: results.reports,
        alpha: results.alpha,
        warnings: results.warnings,
        artifacts,
    })
}

fn model(config: &ExperimentConfig) -> Result<&DeFinettiModel, CliError> {
    config
        .model
        .as_ref()
        .ok_or_else(|| CliError::config(Some("model"), "this experiment needs a [model] table"))
}

fn population(config: &ExperimentConfig) -> Result<u64, CliError> {
    config
        .n
        .ok_or_else(|| CliError::config(Some("n"), "this experiment needs a population `n`"))
}

fn count(config: &ExperimentConfig) -> Result<usize, CliError> {
    match config.count {
        Some(c) if c > 0 => Ok(c),
        Some(_) => Err(CliError::config(Some("count"), "`count` must be positive")),
        None => Err(CliError::config(Some("count"), "this experiment needs a sample `count`")),
    }
}

fn grid(config: &ExperimentConfig) -> Result<Vec<u64>, CliError> {
    let g = match (&config.n_grid, config.n) {
        (Some(g), _) => g.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => {
            return Err(CliError::config(Some("n_grid"), "this experiment needs an `n_grid`"))
        }
    };
    if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config(Some("n_grid"), "`n_grid` must be nonempty and strictly increasing"));
    }
    Ok(g)
}

fn sample(config: &ExperimentConfig, model: &DeFinettiModel) -> Result<MarginSample, CliError> {
    let n = population(config)?;
    let count = count(config)?;
    Ok(sample_margins_with_workers(model, n, count, config.seed, config.workers.unwrap_or(0))?)
}

fn simulate(config: &ExperimentConfig) -> Result<Results, CliError> {
    let model = model(config)?;
    Ok(Results {
        sample: Some(sample(config, model)?),
        ..Results::default()
    })
}

fn verify_clt(config: &ExperimentConfig) -> Result<Results, CliError> {
    let model = model(config)?;
    let law = limit_for(model)?;
    let s = sample(config, model)?;
    let count = s.count();
    let seed = config.seed;
    let t = &config.thresholds;
    let exp = Kind::VerifyClt.as_str();
    let n_grid = vec![s.n];
    let mut reports = Vec::new();

    let ks_limit = t.ks.unwrap_or_else(|| ks_threshold(count));
    let columns: Vec<Vec<f64>> = (0..s.groups()).map(|g| s.group_normalized(g)).collect();
    for (g, col) in columns.iter().enumerate() {
        let marginal = law.marginal(g)?;
        let cdf = cdf_fn(&marginal)?;
        let ks = ks_statistic(col, cdf);
        let limit = match s.regimes[g] {
            Regime::Subcritical => t.ks_subcritical.unwrap_or(ks_limit),
            _ => ks_limit,
        };
        reports.push(
            VerificationReport::new(exp, format!("ks_group_{g}"), ks, limit)
                .with_sample(seed, count)
                .with_n_grid(n_grid.clone()),
        );
    }

    let rows = s.normalized_rows();
    let ecf = ecf_distance(&rows, &law, &default_grid(s.groups()));
    let ecf_limit = t.ecf.unwrap_or(5.0 / (count as f64).sqrt());
    reports.push(
        VerificationReport::new(exp, "ecf_distance", ecf, ecf_limit)
            .with_sample(seed, count)
            .with_n_grid(n_grid.clone()),
    );

    // a fast coordinate is asymptotically independent of every other one
    let corr_limit = t.cross_correlation.unwrap_or(6.0 / (count as f64).sqrt());
    for i in 0..s.groups() {
        for j in i + 1..s.groups() {
            if s.regimes[i] != Regime::Fast && s.regimes[j] != Regime::Fast {
                continue;
            }
            let rho = sample_correlation(&columns[i], &columns[j]).abs();
            reports.push(
                VerificationReport::new(exp, format!("cross_correlation_{i}_{j}"), rho, corr_limit)
                    .with_sample(seed, count)
                    .with_n_grid(n_grid.clone()),
            );
        }
    }

    let fast: Vec<usize> = (0..s.groups()).filter(|&g| s.regimes[g] == Regime::Fast).collect();
    let rest: Vec<usize> = (0..s.groups()).filter(|&g| s.regimes[g] != Regime::Fast).collect();
    if !fast.is_empty() && !rest.is_empty() {
        let d = cf_factorization_discrepancy(&rows, &fast, &rest);
        reports.push(
            VerificationReport::new(exp, "cf_factorization", d, t.factorization.unwrap_or(DEFAULT_FACTORIZATION))
                .with_sample(seed, count)
                .with_n_grid(n_grid),
        );
    }

    Ok(Results {
        reports,
        sample: Some(s),
        ..Results::default()
    })
}

fn verify_llt(config: &ExperimentConfig) -> Result<Results, CliError> {
    let model = model(config)?;
    let n_grid = grid(config)?;
    let values = n_grid
        .iter()
        .map(|&n| llt_sup_error(model, n))
        .collect::<Result<Vec<_>, _>>()?;
    let threshold = config.thresholds.llt.unwrap_or(DEFAULT_LLT);
    let observed = decay_observed(&values, threshold);
    let report = VerificationReport::new(Kind::VerifyLlt.as_str(), "llt_sup_error", observed, threshold)
        .with_n_grid(n_grid)
        .with_values(values);
    Ok(Results {
        reports: vec![report],
        ..Results::default()
    })
}

fn verify_cwm(config: &ExperimentConfig) -> Result<Results, CliError> {
    let model = model(config)?;
    let DeFinettiSequence::CurieWeiss { coupling } = model.sequence() else {
        return Err(CliError::config(Some("model"), "verify-cwm needs a curie-weiss sequence"));
    };
    let groups = model.groups();
    let checks = config.cwm.clone().unwrap_or_default();
    let t = &config.thresholds;
    let exp = Kind::VerifyCwm.as_str();
    let mut reports = Vec::new();

    let eq_n = checks.equivalence_n.unwrap_or_else(|| DEFAULT_EQUIVALENCE_N.to_vec());
    for &n in &eq_n {
        let d = representation_equivalence_check(coupling, groups, n)?;
        reports.push(
            VerificationReport::new(exp, format!("representation_n{n}"), d, t.equivalence.unwrap_or(DEFAULT_EQUIVALENCE))
                .with_n_grid(vec![n]),
        );
    }

    let conc_n = checks.concentration_n.unwrap_or_else(|| DEFAULT_CONCENTRATION_N.to_vec());
    if !conc_n.is_empty() {
        let delta = checks.delta.unwrap_or(DEFAULT_DELTA);
        let profile = concentration_profile(coupling, groups, &conc_n, delta)?;
        if let Some(tm) = profile.iter().find(|tm| tm.underflow || tm.mass <= 0.0) {
            return Err(CliError::config(
                Some("cwm.concentration_n"),
                format!("tail mass at n = {} is below double precision; shrink the grid or delta", tm.n),
            ));
        }
        let xs: Vec<f64> = profile.iter().map(|tm| tm.n as f64).collect();
        let ys: Vec<f64> = profile.iter().map(|tm| tm.mass.ln()).collect();
        let r2_min = t.concentration_r2.unwrap_or(DEFAULT_R2);
        // reported as 1 − R²; a non-decaying fit fails outright
        let observed = if xs.len() >= 2 {
            let fit = linear_fit(&xs, &ys)?;
            if fit.slope < 0.0 {
                1.0 - fit.r_squared
            } else {
                1.0 + fit.slope
            }
        } else {
            1.0
        };
        reports.push(
            VerificationReport::new(exp, "concentration_fit", observed, 1.0 - r2_min)
                .with_n_grid(conc_n)
                .with_values(profile.iter().map(|tm| tm.mass).collect()),
        );
    }

    let sample = match (config.n, config.count) {
        (Some(n), Some(c)) if c > 0 => Some(sample_cwm_margins_with(
            coupling,
            groups,
            n,
            c,
            config.seed,
            config.workers.unwrap_or(0),
            CwmSampler::Auto,
        )?),
        _ => None,
    };
    Ok(Results {
        reports,
        sample,
        ..Results::default()
    })
}

fn alpha(config: &ExperimentConfig) -> Result<Results, CliError> {
    let mut warnings = Vec::new();
    let points = if let Some(input) = &config.input {
        let ingested = ingest_margins(input)?;
        warnings = ingested.warnings;
        ingested.points
    } else {
        let model = model(config)?;
        if model.dim() != 1 {
            return Err(CliError::config(
                Some("model"),
                "estimate-alpha from a model needs a single group",
            ));
        }
        let mode = match config.count {
            Some(count) => MarginMode::MonteCarlo {
                count,
                seed: config.seed,
            },
            None => MarginMode::Exact,
        };
        grid(config)?
            .into_iter()
            .map(|n| Ok((n, expected_abs_margin(model, n, mode)?.per_group[0])))
            .collect::<Result<Vec<_>, CliError>>()?
    };
    let fit = estimate_alpha(&points)?;
    let mut reports = Vec::new();
    if let Some([lo, hi]) = config.thresholds.alpha_range {
        if !(lo <= hi) {
            return Err(CliError::config(Some("alpha_range"), "`alpha_range` must be [low, high] with low <= high"));
        }
        let mid = 0.5 * (lo + hi);
        let mut r = VerificationReport::new(
            Kind::EstimateAlpha.as_str(),
            "alpha_offset",
            (fit.alpha - mid).abs(),
            0.5 * (hi - lo),
        )
        .with_n_grid(points.iter().map(|p| p.0).collect())
        .with_values(vec![fit.alpha]);
        if config.input.is_none() {
            if let Some(c) = config.count {
                r = r.with_sample(config.seed, c);
            }
        }
        reports.push(r);
    }
    Ok(Results {
        reports,
        alpha: Some(fit),
        points,
        warnings,
        ..Results::default()
    })
}

fn correlation_decay(config: &ExperimentConfig) -> Result<Results, CliError> {
    let model = model(config)?;
    let n_grid = grid(config)?;
    let threshold = config.thresholds.correlation.unwrap_or(DEFAULT_CORRELATION);
    let report = correlation_decay_report(model, &n_grid, threshold)?;
    Ok(Results {
        reports: vec![report],
        ..Results::default()
    })
}

fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    kind: Kind,
    hash: &str,
    results: &Results,
) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written: Vec<String> = Vec::new();

    if let Some(s) = &results.sample {
        let mut w = BufWriter::new(File::create(dir.join("samples.csv"))?);
        s.write_csv(&mut w)?;
        w.flush()?;
        written.push("samples.csv".into());

        let mut w = csv::Writer::from_path(dir.join("moments.csv"))?;
        w.write_record(["group", "size", "normalization", "regime", "mean", "variance"])?;
        for g in 0..s.groups() {
            let v = s.group_normalized(g);
            let c = v.len() as f64;
            let mean = v.iter().sum::<f64>() / c;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (c - 1.0).max(1.0);
            w.write_record([
                g.to_string(),
                s.group_sizes[g].to_string(),
                s.normalization[g].to_string(),
                s.regimes[g].as_str().to_string(),
                mean.to_string(),
                var.to_string(),
            ])?;
        }
        w.flush()?;
        written.push("moments.csv".into());
    }

    if !results.points.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("margins.csv"))?;
        w.write_record(["population", "margin_per_capita"])?;
        for (n, m) in &results.points {
            w.write_record([n.to_string(), m.to_string()])?;
        }
        w.flush()?;
        written.push("margins.csv".into());
    }

    let mut w = BufWriter::new(File::create(dir.join("reports.jsonl"))?);
    for r in &results.reports {
        let mut v = serde_json::to_value(r)?;
        v["config_hash"] = json!(hash);
        serde_json::to_writer(&mut w, &v)?;
        writeln!(w)?;
    }
    w.flush()?;
    written.push("reports.jsonl".into());

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["experiment", "statistic", "observed", "threshold", "pass"])?;
    for r in &results.reports {
        w.write_record([
            r.experiment.clone(),
            r.statistic.clone(),
            r.observed.to_string(),
            r.threshold.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    written.push("summary.csv".into());

    let digests = written
        .iter()
        .map(|name| Ok((name.clone(), json!(file_digest(&dir.join(name))?))))
        .collect::<Result<serde_json::Map<_, _>, CliError>>()?;
    let mut manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "kind": kind.as_str(),
        "config_hash": hash,
        "seed": config.seed,
        "workers": config.workers.unwrap_or(0),
        "artifacts": digests,
        "passed": results.reports.iter().all(|r| r.pass),
        "config": config,
    });
    if let Some(s) = &results.sample {
        manifest["n"] = json!(s.n);
        manifest["count"] = json!(s.count());
        manifest["group_sizes"] = json!(s.group_sizes);
        manifest["normalization"] = json!(s.normalization);
        manifest["regimes"] = json!(s.regimes);
    }
    if let Some(fit) = &results.alpha {
        manifest["alpha"] = json!(fit);
    }
    let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    written.push("manifest.json".into());
    Ok(written)
}
