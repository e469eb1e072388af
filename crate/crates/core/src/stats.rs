//! Discrete distributions, exact small-numbers laws and the test statistics
//! used to compare simulated counts with Poisson references.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("state space of {0} cells exceeds the cap of {1}")]
    StateSpace(usize, usize),
    #[error("invalid probability input: {0}")]
    BadInput(String),
}

/// Probabilities on `{0, …, len − 1}` plus the mass of everything beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub probs: Vec<f64>,
    pub tail: f64,
}

impl DiscreteDistribution {
    pub fn point_mass(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self { probs, tail: 0.0 }
    }

    /// Empirical distribution of observed values.
    pub fn empirical(values: &[u32]) -> Self {
        let counts = tabulate(values);
        let n = values.len().max(1) as f64;
        Self {
            probs: counts.iter().map(|&c| c as f64 / n).collect(),
            tail: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.tail
    }

    /// Mean of the explicit part (the tail is ignored).
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Collapse everything from index `len` on into the tail.
    pub fn truncated(&self, len: usize) -> Self {
        if len >= self.probs.len() {
            return self.clone();
        }
        let extra: f64 = self.probs[len..].iter().sum();
        Self {
            probs: self.probs[..len].to_vec(),
            tail: self.tail + extra,
        }
    }
}

/// Histogram of observed nonnegative integers.
pub fn tabulate(values: &[u32]) -> Vec<u64> {
    let max = values.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut counts = vec![0u64; max];
    for &v in values {
        counts[v as usize] += 1;
    }
    counts
}

/// Poisson pmf on `{0, …, k_max}`, by recurrence outward from the mode.
pub fn poisson_pmf(mean: f64, k_max: usize) -> DiscreteDistribution {
    assert!(mean >= 0.0 && mean.is_finite(), "Poisson mean must be finite and ≥ 0");
    if mean == 0.0 {
        let mut probs = vec![0.0; k_max + 1];
        probs[0] = 1.0;
        return DiscreteDistribution { probs, tail: 0.0 };
    }
    let mode = (mean.floor() as usize).min(k_max);
    let mut probs = vec![0.0; k_max + 1];
    probs[mode] = (mode as f64 * mean.ln() - mean - ln_gamma(mode as f64 + 1.0)).exp();
    for k in mode + 1..=k_max {
        probs[k] = probs[k - 1] * mean / k as f64;
    }
    for k in (0..mode).rev() {
        probs[k] = probs[k + 1] * (k + 1) as f64 / mean;
    }
    let tail = gamma_lr(k_max as f64 + 1.0, mean);
    DiscreteDistribution { probs, tail }
}

/// Poisson pmf truncated where the remaining tail drops below 1e−12.
pub fn poisson_truncated(mean: f64) -> DiscreteDistribution {
    let mut k = (mean + 10.0 * mean.sqrt() + 10.0) as usize;
    while mean > 0.0 && gamma_lr(k as f64 + 1.0, mean) > 1e-12 {
        k += 10;
    }
    poisson_pmf(mean, k)
}

/// Exact law of a sum of independent Bernoulli(pᵢ) variables.
pub fn bernoulli_sum_distribution(p: &[f64]) -> Result<DiscreteDistribution, StatsError> {
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(StatsError::BadInput(format!("probability {bad}")));
    }
    let mut dist = vec![1.0];
    for &pi in p {
        let mut next = vec![0.0; dist.len() + 1];
        for (k, &d) in dist.iter().enumerate() {
            next[k] += d * (1.0 - pi);
            next[k + 1] += d * pi;
        }
        dist = next;
    }
    Ok(DiscreteDistribution {
        probs: dist,
        tail: 0.0,
    })
}

/// Joint law of several counts on a dense grid (row-major, last index fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub dims: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for j in (0..self.dims.len().saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.dims[j + 1];
        }
        s
    }

    pub fn marginal(&self, j: usize) -> DiscreteDistribution {
        let strides = self.strides();
        let mut probs = vec![0.0; self.dims[j]];
        for (idx, p) in self.probs.iter().enumerate() {
            probs[(idx / strides[j]) % self.dims[j]] += p;
        }
        DiscreteDistribution { probs, tail: 0.0 }
    }

    /// Product of independent Poisson laws on the same grid.
    pub fn product_poisson(means: &[f64], dims: &[usize]) -> Self {
        let margins: Vec<DiscreteDistribution> = means
            .iter()
            .zip(dims)
            .map(|(&m, &d)| poisson_pmf(m, d - 1))
            .collect();
        let mut probs = vec![1.0];
        for m in &margins {
            probs = probs
                .iter()
                .flat_map(|&a| m.probs.iter().map(move |&b| a * b))
                .collect();
        }
        Self {
            dims: dims.to_vec(),
            probs,
        }
    }

    /// ℓ₁ distance on the common grid plus the mass each puts off-grid.
    pub fn l1_distance(&self, other: &JointDistribution) -> f64 {
        assert_eq!(self.dims, other.dims, "joint distributions on different grids");
        let on_grid: f64 = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let off = |d: &JointDistribution| (1.0 - d.probs.iter().sum::<f64>()).max(0.0);
        on_grid + off(self) + off(other)
    }
}

/// Exact joint law of the category counts `(T₁, …, T_K)` over independent
/// trials. Each row of `p` lists one trial's probabilities for categories
/// `0..=K`, where category 0 means "no hit".
pub fn multinomial_occupancy_distribution(
    p: &[Vec<f64>],
    cap: usize,
) -> Result<JointDistribution, StatsError> {
    let k = p.first().map_or(0, |r| r.len().saturating_sub(1));
    if k == 0 || k > 3 {
        return Err(StatsError::BadInput(format!("{k} categories (need 1 to 3)")));
    }
    for row in p {
        if row.len() != k + 1 {
            return Err(StatsError::BadInput("ragged category lists".into()));
        }
        if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 || row.iter().any(|x| *x < 0.0) {
            return Err(StatsError::BadInput("trial probabilities must sum to 1".into()));
        }
    }
    let n = p.len();
    let side = n + 1;
    let cells = side.checked_pow(k as u32).unwrap_or(usize::MAX);
    if cells > cap {
        return Err(StatsError::StateSpace(cells, cap));
    }
    let dims = vec![side; k];
    let strides: Vec<usize> = (0..k).map(|j| side.pow((k - 1 - j) as u32)).collect();
    let mut dist = vec![0.0; cells];
    dist[0] = 1.0;
    let mut reach = 0usize;
    for row in p {
        let mut next = vec![0.0; cells];
        for (idx, &d) in dist.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            // counts never exceed the number of trials processed so far
            if (0..k).any(|j| (idx / strides[j]) % side > reach) {
                continue;
            }
            next[idx] += d * row[0];
            for j in 0..k {
                next[idx + strides[j]] += d * row[j + 1];
            }
        }
        dist = next;
        reach += 1;
    }
    Ok(JointDistribution { dims, probs: dist })
}

/// Align two distributions on a common support, folding tails into a final bucket.
fn aligned(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> (Vec<f64>, Vec<f64>) {
    let limits = [d1, d2]
        .iter()
        .filter(|d| d.tail > 0.0)
        .map(|d| d.probs.len())
        .min();
    let len = limits.unwrap_or(d1.probs.len().max(d2.probs.len()));
    let expand = |d: &DiscreteDistribution| {
        let t = d.truncated(len);
        let mut v = t.probs.clone();
        v.resize(len, 0.0);
        v.push(t.tail);
        v
    };
    (expand(d1), expand(d2))
}

/// Summed absolute difference `Σ |P₁(k) − P₂(k)|`.
pub fn l1_distance(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> f64 {
    let (a, b) = aligned(d1, d2);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum()
}

/// Total variation distance, `½ ℓ₁`.
pub fn tv_distance(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> f64 {
    0.5 * l1_distance(d1, d2)
}

/// Outcome of a statistical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub dof: Option<usize>,
    pub sample_size: usize,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
    pub seed: Option<u64>,
}

/// Merge consecutive `(observed, expected)` bins until every bin expects at
/// least `min_expected`; a short remainder joins the last full bin.
fn pool_bins(bins: &[(f64, f64)], min_expected: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(o, e) in bins {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= min_expected {
            out.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match out.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => out.push(acc),
        }
    }
    out
}

fn chi_square_p(stat: f64, dof: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    if !stat.is_finite() {
        return 0.0;
    }
    gamma_ur(dof as f64 / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// Pearson goodness of fit of observed counts (`counts[k]` = number of
/// replicates with value `k`) against `reference`, pooling bins to an
/// expected count of at least `min_expected`. The test passes when
/// `p > threshold`.
pub fn chi_square_gof(
    counts: &[u64],
    reference: &DiscreteDistribution,
    min_expected: f64,
    threshold: f64,
) -> Result<TestReport, StatsError> {
    let n: u64 = counts.iter().sum();
    if n < 50 {
        return Err(StatsError::InsufficientData(format!("{n} observations")));
    }
    let len = reference.probs.len();
    let mut bins: Vec<(f64, f64)> = (0..len)
        .map(|k| {
            let o = counts.get(k).copied().unwrap_or(0) as f64;
            (o, n as f64 * reference.probs[k])
        })
        .collect();
    let beyond: u64 = counts.iter().skip(len).sum();
    bins.push((beyond as f64, n as f64 * reference.tail));
    let pooled = pool_bins(&bins, min_expected);
    if pooled.len() < 2 {
        return Err(StatsError::InsufficientData(
            "fewer than two bins after pooling".into(),
        ));
    }
    let stat: f64 = pooled
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = pooled.len() - 1;
    let p = chi_square_p(stat, dof);
    Ok(TestReport {
        name: "chi-square goodness of fit".into(),
        statistic: stat,
        dof: Some(dof),
        sample_size: n as usize,
        p_value: Some(p),
        threshold,
        passed: p > threshold,
        seed: None,
    })
}

/// Two-sample chi-square test of homogeneity for binned data.
pub fn chi_square_two_sample(
    a: &[u64],
    b: &[u64],
    threshold: f64,
) -> Result<TestReport, StatsError> {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na < 50 || nb < 50 {
        return Err(StatsError::InsufficientData(format!("samples of {na} and {nb}")));
    }
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let fa = na as f64 / (na + nb) as f64;
    let fb = 1.0 - fa;
    // pool on the smaller expected count of the two samples
    let raw: Vec<(f64, f64)> = (0..len).map(|i| (get(a, i), get(b, i))).collect();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(x, y) in &raw {
        acc.0 += x;
        acc.1 += y;
        if (acc.0 + acc.1) * fa.min(fb) >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    if pooled.len() < 2 {
        return Err(StatsError::InsufficientData(
            "fewer than two bins after pooling".into(),
        ));
    }
    let stat: f64 = pooled
        .iter()
        .map(|&(x, y)| {
            let t = x + y;
            let (ea, eb) = (t * fa, t * fb);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let dof = pooled.len() - 1;
    let p = chi_square_p(stat, dof);
    Ok(TestReport {
        name: "two-sample chi-square".into(),
        statistic: stat,
        dof: Some(dof),
        sample_size: (na + nb) as usize,
        p_value: Some(p),
        threshold,
        passed: p > threshold,
        seed: None,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Pearson correlation; `NaN` when either sample is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub correlation: f64,
    /// Standard error of the correlation under independence, `1/√n`.
    pub correlation_se: f64,
    /// Contingency chi-square on the pooled `(N, N′)` table.
    pub contingency: TestReport,
}

/// Largest category cap such that every capped category has at least
/// `min_count` observations.
fn category_cap(values: &[u32], min_count: u64) -> u32 {
    let counts = tabulate(values);
    let mut cap = 0u32;
    let mut above: u64 = values.len() as u64;
    for (k, &c) in counts.iter().enumerate() {
        above -= c;
        if c >= min_count && above >= min_count {
            cap = k as u32 + 1;
        } else {
            break;
        }
    }
    cap
}

/// Correlation and contingency-table test of independence for paired counts.
pub fn independence_test(pairs: &[(u32, u32)], threshold: f64) -> Result<IndependenceReport, StatsError> {
    let n = pairs.len();
    if n < 500 {
        return Err(StatsError::InsufficientData(format!("{n} replicates (need 500)")));
    }
    let xs: Vec<u32> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<u32> = pairs.iter().map(|p| p.1).collect();
    let xf: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
    let yf: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
    let correlation = pearson(&xf, &yf);
    let mut cx = category_cap(&xs, 5);
    let mut cy = category_cap(&ys, 5);
    let (stat, dof) = loop {
        let rows = cx as usize + 1;
        let cols = cy as usize + 1;
        let mut table = vec![0.0; rows * cols];
        for &(a, b) in pairs {
            table[a.min(cx) as usize * cols + b.min(cy) as usize] += 1.0;
        }
        let row_sum: Vec<f64> = (0..rows).map(|r| table[r * cols..(r + 1) * cols].iter().sum()).collect();
        let col_sum: Vec<f64> = (0..cols).map(|c| (0..rows).map(|r| table[r * cols + c]).sum()).collect();
        let min_expected = row_sum
            .iter()
            .flat_map(|r| col_sum.iter().map(move |c| r * c / n as f64))
            .fold(f64::INFINITY, f64::min);
        if min_expected >= 5.0 || (cx <= 1 && cy <= 1) {
            let mut stat = 0.0;
            for r in 0..rows {
                for c in 0..cols {
                    let e = row_sum[r] * col_sum[c] / n as f64;
                    if e > 0.0 {
                        stat += (table[r * cols + c] - e).powi(2) / e;
                    }
                }
            }
            break (stat, (rows - 1) * (cols - 1));
        }
        if cx >= cy {
            cx -= 1;
        } else {
            cy -= 1;
        }
    };
    let p = if dof == 0 { 1.0 } else { chi_square_p(stat, dof) };
    Ok(IndependenceReport {
        correlation,
        correlation_se: 1.0 / (n as f64).sqrt(),
        contingency: TestReport {
            name: "contingency chi-square".into(),
            statistic: stat,
            dof: Some(dof),
            sample_size: n,
            p_value: Some(p),
            threshold,
            passed: p > threshold,
            seed: None,
        },
    })
}

/// Counts over fixed bin edges; values beyond the last edge go to the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Self {
        let bins = edges.len().saturating_sub(1).max(1);
        Self {
            edges,
            counts: vec![0; bins],
        }
    }

    /// `bins` equal-width bins on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        let w = (hi - lo) / bins as f64;
        Self::new((0..=bins).map(|i| lo + w * i as f64).collect())
    }

    pub fn add(&mut self, x: f64) {
        if x < self.edges[0] || x.is_nan() {
            return;
        }
        let i = self.edges.partition_point(|&e| e <= x);
        let bin = i.saturating_sub(1).min(self.counts.len() - 1);
        self.counts[bin] += 1;
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, xs: I) {
        for x in xs {
            self.add(x);
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.edges, other.edges, "histograms with different edges");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}
