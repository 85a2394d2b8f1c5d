use std::collections::{BTreeMap, HashMap};

use super::{DeFinettiModel, GroupStructure};
use crate::error::{Error, Result};
use crate::measure::BiasMap;
use crate::quadrature::{escalate, QuadratureRule};

/// Largest lattice `Π (n_λ + 1)` an exact margin law may span.
pub const MAX_LATTICE: usize = 10_000_000;
/// Largest population the configuration enumeration accepts.
pub const BRUTE_FORCE_MAX_N: u64 = 20;
/// Entrywise agreement required between successive node counts.
const PMF_TOL: f64 = 1e-12;

/// Joint law of the group margins `(S_1, …, S_M)` on the lattice
/// `Π_λ {−n_λ, −n_λ + 2, …, n_λ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginPmf {
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl MarginPmf {
    /// Law on the lattice for `sizes`; `probs` is indexed by the number of
    /// `+1` votes per group, group 0 varying slowest.
    pub fn from_counts(sizes: Vec<usize>, probs: Vec<f64>) -> Self {
        assert_eq!(lattice_len(&sizes).ok(), Some(probs.len()));
        MarginPmf { sizes, probs }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn index_of(&self, margins: &[i64]) -> Option<usize> {
        if margins.len() != self.sizes.len() {
            return None;
        }
        let mut idx = 0usize;
        for (&k, &n) in margins.iter().zip(&self.sizes) {
            let n = n as i64;
            if k.abs() > n || (k + n) % 2 != 0 {
                return None;
            }
            idx = idx * (n as usize + 1) + ((k + n) / 2) as usize;
        }
        Some(idx)
    }

    fn margins_of(&self, mut idx: usize) -> Vec<i64> {
        let mut k = vec![0i64; self.sizes.len()];
        for (g, &n) in self.sizes.iter().enumerate().rev() {
            let j = idx % (n + 1);
            idx /= n + 1;
            k[g] = 2 * j as i64 - n as i64;
        }
        k
    }

    /// `P(S = k)`; zero off the lattice (wrong parity or `|k_λ| > n_λ`).
    pub fn get(&self, margins: &[i64]) -> f64 {
        self.index_of(margins).map_or(0.0, |i| self.probs[i])
    }

    /// Lattice points with their probabilities.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.margins_of(i), p))
    }

    pub fn to_map(&self) -> BTreeMap<Vec<i64>, f64> {
        self.iter().collect()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Law of `S_λ` alone, as `(margin, probability)` pairs.
    pub fn group_marginal(&self, group: usize) -> Vec<(i64, f64)> {
        let n = self.sizes[group];
        let mut out: Vec<(i64, f64)> = (0..=n).map(|j| (2 * j as i64 - n as i64, 0.0)).collect();
        let inner: usize = self.sizes[group + 1..].iter().map(|s| s + 1).product();
        for (i, p) in self.probs.iter().enumerate() {
            let j = (i / inner) % (n + 1);
            out[j].1 += p;
        }
        out
    }

    /// Largest entrywise difference from another law on the same lattice.
    pub fn max_abs_diff(&self, other: &MarginPmf) -> f64 {
        assert_eq!(self.sizes, other.sizes, "lattices differ");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|P(S = k) − P(S = −k)|` over the lattice.
    pub fn symmetry_defect(&self) -> f64 {
        // negating every margin reverses the row-major count index
        let n = self.probs.len();
        (0..n)
            .map(|i| (self.probs[i] - self.probs[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn lattice_len(sizes: &[usize]) -> Result<usize> {
    sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s + 1))
        .filter(|&l| l <= MAX_LATTICE)
        .ok_or_else(|| {
            Error::Resource(format!(
                "margin lattice for group sizes {sizes:?} exceeds {MAX_LATTICE} points"
            ))
        })
}

/// `ln C(n, j)` for `j = 0..=n`.
pub(crate) fn ln_binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    for j in 1..=n / 2 {
        row[j] = row[j - 1] + ((n - j + 1) as f64 / j as f64).ln();
    }
    for j in n / 2 + 1..=n {
        row[j] = row[n - j];
    }
    row
}

/// Binomial law of the number of `+1` votes among `out.len() − 1` voters
/// with bias `mbar`.
///
/// Built by the ratio recurrence outward from the mode and normalized by the
/// sum, which keeps every entry accurate to a few ulps relative to the mode
/// even for large rows. A negative bias is the mirrored row of `|mbar|`, so
/// `P_{−m}` is the exact reflection of `P_m`.
pub(crate) fn binomial_row(mbar: f64, out: &mut [f64]) {
    let n = out.len() - 1;
    if mbar < 0.0 {
        binomial_row(-mbar, out);
        out.reverse();
        return;
    }
    let p = 0.5 * (1.0 + mbar);
    let q = 0.5 * (1.0 - mbar);
    if q <= 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[n] = 1.0;
        return;
    }
    let odds = p / q;
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    out[mode] = 1.0;
    for j in mode..n {
        out[j + 1] = out[j] * ((n - j) as f64 / (j + 1) as f64) * odds;
    }
    for j in (1..=mode).rev() {
        out[j - 1] = out[j] * (j as f64 / (n - j + 1) as f64) / odds;
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
}

/// Adds `weight · ⊗_λ rows[λ]` into the row-major lattice array `acc`.
fn add_outer(acc: &mut [f64], rows: &[Vec<f64>], weight: f64, scratch: &mut Vec<f64>) {
    if rows.len() == 1 {
        for (a, r) in acc.iter_mut().zip(&rows[0]) {
            *a += weight * r;
        }
        return;
    }
    scratch.clear();
    scratch.push(weight);
    for row in rows {
        let prev = std::mem::take(scratch);
        scratch.reserve(prev.len() * row.len());
        for &p in &prev {
            scratch.extend(row.iter().map(|r| p * r));
        }
    }
    for (a, s) in acc.iter_mut().zip(scratch.iter()) {
        *a += s;
    }
}

/// Margin law under the product measure `P_m̄` (votes independent, group `λ`
/// voting `+1` with probability `(1 + m̄_λ)/2`).
pub fn conditional_margin_pmf(mbar: &[f64], groups: &GroupStructure, n: u64) -> Result<MarginPmf> {
    let sizes = groups.sizes(n)?;
    if mbar.len() != sizes.len() {
        return Err(Error::Data(format!(
            "bias vector has {} entries for {} groups",
            mbar.len(),
            sizes.len()
        )));
    }
    if mbar.iter().any(|m| !(-1.0..=1.0).contains(m)) {
        return Err(Error::Data("biases must lie in [-1, 1]".into()));
    }
    let len = lattice_len(&sizes)?;
    let rows: Vec<Vec<f64>> = sizes
        .iter()
        .zip(mbar)
        .map(|(&s, &m)| {
            let mut row = vec![0.0; s + 1];
            binomial_row(m, &mut row);
            row
        })
        .collect();
    let mut probs = vec![0.0; len];
    add_outer(&mut probs, &rows, 1.0, &mut Vec::new());
    Ok(MarginPmf { sizes, probs })
}

/// `∫ conditional law dμ_n` over one quadrature rule.
fn integrate_pmf(rule: &QuadratureRule, bias: BiasMap, sizes: &[usize], len: usize) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s + 1]).collect();
    let mut acc = vec![0.0; len];
    let mut scratch = Vec::new();
    for (m, w) in rule.iter() {
        if w == 0.0 {
            continue;
        }
        for (g, row) in rows.iter_mut().enumerate() {
            binomial_row(bias.apply_scalar(m[g]), row);
        }
        add_outer(&mut acc, &rows, w, &mut scratch);
    }
    acc
}

/// Exact law of the group margins under the model at population `n`.
///
/// Atomic mixing measures are summed exactly; continuous ones are integrated
/// with Gauss–Legendre rules whose node count doubles from 64 until no entry
/// moves by more than 1e-12 (cap 4096 per dimension).
pub fn exact_margin_pmf(model: &DeFinettiModel, n: u64) -> Result<MarginPmf> {
    let sizes = model.groups().sizes(n)?;
    let len = lattice_len(&sizes)?;
    let mixing = model.mixing(n)?;
    let bias = model.bias_map();
    let kinks = bias.kinks();
    let probs = if mixing.is_atomic() {
        integrate_pmf(&mixing.rule(1, kinks)?, bias, &sizes, len)
    } else {
        escalate(PMF_TOL, 0.0, |nodes| {
            Ok(integrate_pmf(&mixing.rule(nodes, kinks)?, bias, &sizes, len))
        })
        .map_err(|e| match e {
            Error::Tolerance(msg) => Error::Tolerance(format!(
                "exact margin law at n = {n}, group sizes {sizes:?}: {msg}"
            )),
            other => other,
        })?
        .value
    };
    Ok(MarginPmf { sizes, probs })
}

fn brute_force_nodes(dim: usize) -> usize {
    match dim {
        1 => 256,
        2 => 192,
        _ => 48,
    }
}

/// Margin law by enumerating all `2^n` vote configurations.
///
/// Each configuration's probability `∫ Π_{λ,i} P_m̄(X_{λi} = x_{λi}) μ_n(dm)`
/// is integrated directly (exact sums for atoms, a fixed Gauss–Legendre rule
/// otherwise) and added to the bin of its margin vector. No binomial
/// coefficients are involved, which makes this an independent check of
/// [`exact_margin_pmf`].
pub fn brute_force_pmf(model: &DeFinettiModel, n: u64) -> Result<MarginPmf> {
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Resource(format!(
            "configuration enumeration needs n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let sizes = model.groups().sizes(n)?;
    let len = lattice_len(&sizes)?;
    let mixing = model.mixing(n)?;
    let bias = model.bias_map();
    let rule = mixing.rule(brute_force_nodes(sizes.len()), bias.kinks())?;

    // probability of one configuration with a_λ plus-votes in group λ
    let mut config_prob: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut plus = vec![0usize; sizes.len()];
    let mut counts = vec![0.0; len];
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    for config in 0u64..(1u64 << n) {
        for (g, (&s, &o)) in sizes.iter().zip(&offsets).enumerate() {
            plus[g] = ((config >> o) & ((1u64 << s) - 1)).count_ones() as usize;
        }
        let p = *config_prob.entry(plus.clone()).or_insert_with(|| {
            rule.iter()
                .map(|(m, w)| {
                    w * sizes
                        .iter()
                        .enumerate()
                        .map(|(g, &s)| {
                            let mbar = bias.apply_scalar(m[g]);
                            let up = 0.5 * (1.0 + mbar);
                            let down = 0.5 * (1.0 - mbar);
                            up.powi(plus[g] as i32) * down.powi((s - plus[g]) as i32)
                        })
                        .product::<f64>()
                })
                .sum()
        });
        let idx = plus
            .iter()
            .zip(&sizes)
            .fold(0usize, |acc, (&a, &s)| acc * (s + 1) + a);
        counts[idx] += p;
    }
    Ok(MarginPmf {
        sizes,
        probs: counts,
    })
}

/// `E X_{λ1} X_{λ2} = E[m̄_λ²]` for every group.
pub fn pair_correlation(model: &DeFinettiModel, n: u64) -> Result<Vec<f64>> {
    let mixing = model.mixing(n)?;
    let bias = model.bias_map();
    let dim = model.dim();
    let eval = |rule: &QuadratureRule| -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        for (m, w) in rule.iter() {
            for (a, &v) in acc.iter_mut().zip(m) {
                let b = bias.apply_scalar(v);
                *a += w * b * b;
            }
        }
        acc
    };
    let kinks = bias.kinks();
    if mixing.is_atomic() {
        return Ok(eval(&mixing.rule(1, kinks)?));
    }
    Ok(escalate(1e-300, 1e-12, |nodes| Ok(eval(&mixing.rule(nodes, kinks)?)))?.value)
}
