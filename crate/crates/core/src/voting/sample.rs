use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{exact_margin_pmf, DeFinettiModel, DeFinettiSequence, Mixing, MAX_POPULATION};
use crate::cwm;
use crate::error::{Error, Result};
use crate::measure::{BiasMap, Regime};
use crate::rng::run_batched;

/// A batch of seeded margin draws. Raw margins are stored row-major
/// (`count × M`); normalized margins are `raw / γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginSample {
    pub n: u64,
    pub group_sizes: Vec<usize>,
    pub normalization: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub seed: u64,
    raw: Vec<i64>,
}

impl MarginSample {
    pub(crate) fn new(
        n: u64,
        group_sizes: Vec<usize>,
        normalization: Vec<f64>,
        regimes: Vec<Regime>,
        seed: u64,
        raw: Vec<i64>,
    ) -> Self {
        debug_assert_eq!(raw.len() % group_sizes.len(), 0);
        MarginSample {
            n,
            group_sizes,
            normalization,
            regimes,
            seed,
            raw,
        }
    }

    pub fn groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn count(&self) -> usize {
        self.raw.len() / self.groups()
    }

    /// Raw margins of draw `i`.
    pub fn raw(&self, i: usize) -> &[i64] {
        let m = self.groups();
        &self.raw[i * m..(i + 1) * m]
    }

    pub fn normalized(&self, i: usize) -> Vec<f64> {
        self.raw(i)
            .iter()
            .zip(&self.normalization)
            .map(|(&s, g)| s as f64 / g)
            .collect()
    }

    pub fn group_raw(&self, group: usize) -> Vec<i64> {
        self.raw.iter().skip(group).step_by(self.groups()).copied().collect()
    }

    pub fn group_normalized(&self, group: usize) -> Vec<f64> {
        let g = self.normalization[group];
        self.raw
            .iter()
            .skip(group)
            .step_by(self.groups())
            .map(|&s| s as f64 / g)
            .collect()
    }

    /// Margins of group `group` divided by an arbitrary scale.
    pub fn group_scaled(&self, group: usize, scale: f64) -> Vec<f64> {
        self.raw
            .iter()
            .skip(group)
            .step_by(self.groups())
            .map(|&s| s as f64 / scale)
            .collect()
    }

    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        (0..self.count()).map(|i| self.normalized(i)).collect()
    }

    /// Columnar CSV: `sample_index,group,raw_margin,normalized_margin`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "sample_index,group,raw_margin,normalized_margin")?;
        for i in 0..self.count() {
            for (g, &s) in self.raw(i).iter().enumerate() {
                writeln!(out, "{i},{g},{s},{}", s as f64 / self.normalization[g])?;
            }
        }
        Ok(())
    }
}

/// Number of `+1` votes among `size` voters with bias `mbar`.
pub(crate) fn draw_plus_votes<R: Rng + ?Sized>(rng: &mut R, size: usize, mbar: f64) -> Result<u64> {
    let p = 0.5 * (1.0 + mbar);
    if p <= 0.0 {
        return Ok(0);
    }
    if p >= 1.0 {
        return Ok(size as u64);
    }
    Binomial::new(size as u64, p)
        .map(|b| b.sample(rng))
        .map_err(|e| Error::Data(format!("binomial sampler rejected p = {p}: {e}")))
}

pub(crate) fn draw_margins<R: Rng + ?Sized>(
    rng: &mut R,
    sizes: &[usize],
    m: &[f64],
    bias: BiasMap,
    out: &mut Vec<i64>,
) -> Result<()> {
    for (&s, &v) in sizes.iter().zip(m) {
        let plus = draw_plus_votes(rng, s, bias.apply_scalar(v))?;
        out.push(2 * plus as i64 - s as i64);
    }
    Ok(())
}

/// Two-stage margin sampler: `m ~ μ_n`, then binomial vote counts under
/// `P_m̄`. Uses the rayon default worker count.
pub fn sample_margins(model: &DeFinettiModel, n: u64, count: usize, seed: u64) -> Result<MarginSample> {
    sample_margins_with_workers(model, n, count, seed, 0)
}

/// As [`sample_margins`] with an explicit worker count. The output does not
/// depend on `workers`.
pub fn sample_margins_with_workers(
    model: &DeFinettiModel,
    n: u64,
    count: usize,
    seed: u64,
    workers: usize,
) -> Result<MarginSample> {
    if count == 0 {
        return Err(Error::Data("sample count must be at least 1".into()));
    }
    if n > MAX_POPULATION {
        return Err(Error::Resource(format!("population {n} exceeds {MAX_POPULATION}")));
    }
    if let DeFinettiSequence::CurieWeiss { coupling } = model.sequence() {
        return cwm::sample_cwm_margins_with(
            coupling,
            model.groups(),
            n,
            count,
            seed,
            workers,
            cwm::CwmSampler::Auto,
        );
    }
    let sizes = model.groups().sizes(n)?;
    let normalization = model.normalization(n)?;
    let regimes = model.regimes()?;
    let Mixing::Measure(measure) = model.mixing(n)? else {
        unreachable!("measure-backed sequence")
    };
    let bias = model.bias_map();
    let dim = sizes.len();
    let raw = run_batched(count, seed, workers, |rng, range| {
        let mut out = Vec::with_capacity(range.len() * dim);
        let mut m = vec![0.0; dim];
        for _ in range {
            measure.draw_into(rng, &mut m);
            draw_margins(rng, &sizes, &m, bias, &mut out)?;
        }
        Ok(out)
    })?;
    Ok(MarginSample::new(n, sizes, normalization, regimes, seed, raw))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginMode {
    /// Sum over the exact margin law.
    Exact,
    /// Sample mean with its standard error.
    MonteCarlo { count: usize, seed: u64 },
}

/// `E(|S_{n,λ}| / n_λ)` per group with an error estimate: the standard error
/// for Monte Carlo, a quadrature-tolerance bound for the exact mode.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsMargin {
    pub per_group: Vec<f64>,
    pub error: Vec<f64>,
}

pub fn expected_abs_margin(model: &DeFinettiModel, n: u64, mode: MarginMode) -> Result<AbsMargin> {
    match mode {
        MarginMode::Exact => {
            let pmf = exact_margin_pmf(model, n)?;
            let lattice = pmf.len() as f64;
            let per_group: Vec<f64> = (0..model.dim())
                .map(|g| {
                    let size = pmf.sizes()[g] as f64;
                    pmf.group_marginal(g)
                        .into_iter()
                        .map(|(k, p)| k.unsigned_abs() as f64 * p)
                        .sum::<f64>()
                        / size
                })
                .collect();
            // every lattice entry is within 1e-12 and |k|/n_λ <= 1
            let error = vec![lattice * 1e-12; per_group.len()];
            Ok(AbsMargin { per_group, error })
        }
        MarginMode::MonteCarlo { count, seed } => {
            if count < 2 {
                return Err(Error::Data("Monte Carlo mode needs at least 2 draws".into()));
            }
            let sample = sample_margins(model, n, count, seed)?;
            let (per_group, error) = (0..sample.groups())
                .map(|g| {
                    let size = sample.group_sizes[g] as f64;
                    let v: Vec<f64> = sample
                        .group_raw(g)
                        .into_iter()
                        .map(|s| s.unsigned_abs() as f64 / size)
                        .collect();
                    let c = v.len() as f64;
                    let mean = v.iter().sum::<f64>() / c;
                    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (c - 1.0);
                    (mean, (var / c).sqrt())
                })
                .unzip();
            Ok(AbsMargin { per_group, error })
        }
    }
}
