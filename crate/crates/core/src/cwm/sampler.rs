use rand::Rng;
use rand_distr::StandardNormal;

use super::{ln_cosh, CouplingSpec, FreeEnergy};
use crate::error::{config, Error, Result};
use crate::linalg;
use crate::measure::{BiasMap, Regime};
use crate::rng::run_batched;
use crate::voting::{GroupStructure, MarginSample};
use crate::voting::sample::draw_margins;

pub const BURN_IN: usize = 10_000;
pub const THINNING: usize = 10;
const MIN_ACCEPTANCE: f64 = 0.01;
const MIN_PROPOSALS: u64 = 1000;

/// Draws from the de Finetti density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CwmSampler {
    /// Rejection for one group, Metropolis otherwise.
    #[default]
    Auto,
    /// Exact rejection sampling against the Gaussian envelope.
    Rejection,
    /// Random-walk Metropolis, one chain per batch.
    Metropolis,
}

pub fn sample_cwm_margins(
    spec: &CouplingSpec,
    groups: &GroupStructure,
    n: u64,
    count: usize,
    seed: u64,
) -> Result<MarginSample> {
    sample_cwm_margins_with(spec, groups, n, count, seed, 0, CwmSampler::Auto)
}

/// Margins of the Curie–Weiss model: `x` from the de Finetti density, then
/// binomial votes under `P_{tanh x}`. Normalized by `√n_λ`.
pub fn sample_cwm_margins_with(
    spec: &CouplingSpec,
    groups: &GroupStructure,
    n: u64,
    count: usize,
    seed: u64,
    workers: usize,
    sampler: CwmSampler,
) -> Result<MarginSample> {
    if count == 0 {
        return Err(Error::Data("sample count must be at least 1".into()));
    }
    if spec.dim() != groups.len() {
        return config("coupling dimension does not match the number of groups");
    }
    let sizes = groups.sizes(n)?;
    let m = sizes.len();
    let normalization: Vec<f64> = sizes.iter().map(|&s| (s as f64).sqrt()).collect();
    let regimes = vec![Regime::Critical; m];
    if spec.is_zero() {
        let zero = vec![0.0; m];
        let raw = run_batched(count, seed, workers, |rng, range| {
            let mut out = Vec::with_capacity(range.len() * m);
            for _ in range {
                draw_margins(rng, &sizes, &zero, BiasMap::Tanh, &mut out)?;
            }
            Ok(out)
        })?;
        return Ok(MarginSample::new(n, sizes, normalization, regimes, seed, raw));
    }
    if !spec.is_high_temperature() {
        return config("the Curie–Weiss sampler is only supported in the high-temperature regime (I − J positive definite)");
    }
    let energy = FreeEnergy::new(spec, groups, n)?;
    let sampler = match sampler {
        CwmSampler::Auto if m == 1 => CwmSampler::Rejection,
        CwmSampler::Auto => CwmSampler::Metropolis,
        s => s,
    };
    let raw = run_batched(count, seed, workers, |rng, range| {
        let mut out = Vec::with_capacity(range.len() * m);
        let xs = match sampler {
            CwmSampler::Rejection => rejection(&energy, rng, range.len())?,
            _ => metropolis(&energy, rng, range.len()),
        };
        for x in &xs {
            draw_margins(rng, &sizes, x, BiasMap::Tanh, &mut out)?;
        }
        Ok(out)
    })?;
    Ok(MarginSample::new(n, sizes, normalization, regimes, seed, raw))
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Accepts an envelope draw `x` with probability
/// `exp(n Σ α (ln cosh x − x²/2)) <= 1`.
fn rejection<R: Rng + ?Sized>(energy: &FreeEnergy, rng: &mut R, count: usize) -> Result<Vec<Vec<f64>>> {
    let factor = energy.envelope_factor().expect("high temperature");
    let m = energy.alpha().len();
    let nf = energy.n() as f64;
    let mut out = Vec::with_capacity(count);
    let (mut proposals, mut accepted) = (0u64, 0u64);
    while out.len() < count {
        let x = linalg::mat_vec(factor, &gaussian(rng, m));
        let log_acc: f64 = nf
            * energy
                .alpha()
                .iter()
                .zip(&x)
                .map(|(a, &v)| a * (ln_cosh(v) - 0.5 * v * v))
                .sum::<f64>();
        proposals += 1;
        if rng.random::<f64>().ln() < log_acc {
            accepted += 1;
            out.push(x);
        }
        if proposals >= MIN_PROPOSALS && (accepted as f64) < MIN_ACCEPTANCE * proposals as f64 {
            return Err(Error::Config(format!(
                "rejection sampler acceptance {:.2e} is below {MIN_ACCEPTANCE}",
                accepted as f64 / proposals as f64
            )));
        }
    }
    Ok(out)
}

/// Random-walk Metropolis with proposal `x + (2.38/√M) L z`, `L L^T` the
/// envelope covariance. Starts at the mode `x = 0`.
fn metropolis<R: Rng + ?Sized>(energy: &FreeEnergy, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
    let factor = energy.envelope_factor().expect("high temperature");
    let m = energy.alpha().len();
    let step = 2.38 / (m as f64).sqrt();
    let mut x = vec![0.0; m];
    let mut logp = energy.log_density(&x);
    let mut out = Vec::with_capacity(count);
    let total = BURN_IN + count * THINNING;
    for it in 1..=total {
        let dz = linalg::mat_vec(factor, &gaussian(rng, m));
        let y: Vec<f64> = x.iter().zip(&dz).map(|(a, d)| a + step * d).collect();
        let logq = energy.log_density(&y);
        if rng.random::<f64>().ln() < logq - logp {
            x = y;
            logp = logq;
        }
        if it > BURN_IN && (it - BURN_IN) % THINNING == 0 {
            out.push(x.clone());
        }
    }
    out
}
