//! Discrete (population) Gini coefficient and the subsample-bias experiment.
//!
//! For an ascending-sorted sample `x(1) <= ... <= x(n)` the coefficient is
//!
//! ```text
//! G = sum_i (2i - n - 1) * x(i) / (n * sum x)
//! ```
//!
//! which is twice the area between the diagonal and the discrete Lorenz curve
//! and equals the mean absolute difference over all ordered pairs divided by
//! twice the mean. Its maximum for `n` people is `(n - 1)/n`, reached when one
//! person holds everything.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative incomes, at least one of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeSample {
    incomes: Vec<f64>,
}

impl IncomeSample {
    pub fn new(incomes: Vec<f64>) -> Result<Self> {
        if incomes.is_empty() {
            return Err(Error::Domain("income sample is empty".into()));
        }
        if let Some(bad) = incomes.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::Domain(format!(
                "income {bad} is negative or not finite"
            )));
        }
        Ok(IncomeSample { incomes })
    }

    /// Parses one income per line. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn parse_lines(text: &str) -> Result<Self> {
        let mut incomes = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let value: f64 = line.parse().map_err(|_| Error::InvalidRow {
                row: i + 1,
                field: "income",
                message: format!("`{line}` is not a number"),
            })?;
            incomes.push(value);
        }
        if incomes.is_empty() {
            return Err(Error::EmptyInput);
        }
        IncomeSample::new(incomes)
    }

    pub fn incomes(&self) -> &[f64] {
        &self.incomes
    }

    pub fn len(&self) -> usize {
        self.incomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.incomes.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.incomes.iter().sum()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.incomes.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

pub fn gini_coefficient(s: &IncomeSample) -> Result<f64> {
    gini_of_slice(s.incomes())
}

fn gini_of_slice(incomes: &[f64]) -> Result<f64> {
    let mut sorted = incomes.to_vec();
    sorted.sort_by(f64::total_cmp);
    gini_of_sorted(&sorted)
}

fn gini_of_sorted(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedGini);
    }
    let n_f = n as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - n_f - 1.0) * x)
        .sum();
    Ok(weighted / (n_f * total))
}

/// `(p - 1)/p`, the largest Gini a population of `p` can attain.
pub fn max_gini(p: u64) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("population must be at least 1".into()));
    }
    Ok((p - 1) as f64 / p as f64)
}

/// Points of the discrete Lorenz curve, `(0, 0)` through `(1, 1)`, poorest first.
pub fn lorenz_curve(s: &IncomeSample) -> Result<Vec<(f64, f64)>> {
    let sorted = s.sorted();
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedGini);
    }
    let n = sorted.len() as f64;
    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push((0.0, 0.0));
    let mut cumulative = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        cumulative += x;
        points.push(((i + 1) as f64 / n, cumulative / total));
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleReport {
    pub full_gini: f64,
    pub subsample_size: usize,
    pub trials: usize,
    /// Mean Gini over all draws; a draw whose incomes are all zero scores 0.
    pub mean_subsample_gini: f64,
    /// Standard error of `mean_subsample_gini`.
    pub stderr_of_mean: f64,
    /// Draws whose total income was zero.
    pub skipped_zero_draws: usize,
    /// Mean over the draws with positive total income only; `None` if every
    /// draw was all-zero.
    pub mean_defined_gini: Option<f64>,
}

/// Draws `trials` uniform subsets of size `k` without replacement and
/// averages their Gini coefficients.
///
/// Seed mapping: trial `t` uses `ChaCha8Rng::seed_from_u64(seed)` switched to
/// stream `t`, then a partial Fisher-Yates shuffle over indices `0..n` where
/// step `i` swaps position `i` with `i + uniform_below(n - i)`.
/// `uniform_below(m)` takes `next_u64()` values, rejecting those at or above
/// the largest multiple of `m`, and returns the remainder mod `m`. Trials are
/// independent, so the result does not depend on thread scheduling.
pub fn subsample_experiment(
    s: &IncomeSample,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<SubsampleReport> {
    let n = s.len();
    if k < 1 || k > n {
        return Err(Error::Domain(format!(
            "subsample size {k} must lie in 1..={n}"
        )));
    }
    if trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let full_gini = gini_coefficient(s)?;

    let run = |t: usize| -> Option<f64> {
        let draw = draw_subset(s.incomes(), k, seed, t as u64);
        gini_of_slice(&draw).ok()
    };

    #[cfg(feature = "parallel")]
    let draws: Vec<Option<f64>> = {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let draws: Vec<Option<f64>> = (0..trials).map(run).collect();

    // sequential reduction in trial order keeps the sums bitwise stable
    let scores: Vec<f64> = draws.iter().map(|g| g.unwrap_or(0.0)).collect();
    let skipped = draws.iter().filter(|g| g.is_none()).count();
    let mean = scores.iter().sum::<f64>() / trials as f64;
    let stderr = if trials > 1 {
        let ss: f64 = scores.iter().map(|g| (g - mean).powi(2)).sum();
        (ss / (trials - 1) as f64).sqrt() / (trials as f64).sqrt()
    } else {
        0.0
    };
    let defined: Vec<f64> = draws.iter().flatten().copied().collect();
    let mean_defined = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };

    Ok(SubsampleReport {
        full_gini,
        subsample_size: k,
        trials,
        mean_subsample_gini: mean,
        stderr_of_mean: stderr,
        skipped_zero_draws: skipped,
        mean_defined_gini: mean_defined,
    })
}

fn draw_subset(incomes: &[f64], k: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = incomes.len();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_below(&mut rng, (n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx[..k].iter().map(|&i| incomes[i]).collect()
}

fn uniform_below(rng: &mut impl RngCore, m: u64) -> u64 {
    debug_assert!(m > 0);
    let zone = u64::MAX - (u64::MAX % m);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % m;
        }
    }
}

/// Exact expected subsample Gini over all `C(n, k)` subsets, with all-zero
/// subsets scoring 0 (the convention of `mean_subsample_gini`).
///
/// Cost grows as `C(n, k)`; intended for `n` up to about 20.
pub fn exact_subsample_mean(s: &IncomeSample, k: usize) -> Result<f64> {
    let n = s.len();
    if k < 1 || k > n {
        return Err(Error::Domain(format!(
            "subsample size {k} must lie in 1..={n}"
        )));
    }
    if n > 25 {
        return Err(Error::Domain(format!(
            "exact enumeration is limited to 25 incomes, got {n}"
        )));
    }
    let sorted = s.sorted();
    let mut total = 0.0;
    let mut count = 0u64;
    let mut chosen: Vec<f64> = Vec::with_capacity(k);
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        chosen.clear();
        chosen.extend(combo.iter().map(|&i| sorted[i]));
        // indices ascend over a sorted sample, so `chosen` is already sorted
        total += gini_of_sorted(&chosen).unwrap_or(0.0);
        count += 1;

        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(total / count as f64);
            }
            i -= 1;
            if combo[i] < n - k + i {
                break;
            }
        }
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}
