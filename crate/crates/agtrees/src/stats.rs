//! Distribution comparisons and time-series statistics for the Monte
//! Carlo harness: total variation, Pearson chi-square with pooling of
//! small cells, integrated autocorrelation times and least-squares fits.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Cells whose expected count is below this threshold are pooled.
pub const POOL_THRESHOLD: f64 = 5.0;

/// Normalises nonnegative weights to probabilities.
pub fn normalize<K: Ord + Clone>(w: &BTreeMap<K, f64>) -> BTreeMap<K, f64> {
    let total: f64 = w.values().sum();
    w.iter().map(|(k, v)| (k.clone(), if total > 0.0 { v / total } else { 0.0 })).collect()
}

/// Converts counts to probabilities.
pub fn frequencies<K: Ord + Clone>(counts: &BTreeMap<K, u64>) -> BTreeMap<K, f64> {
    normalize(&counts.iter().map(|(k, v)| (k.clone(), *v as f64)).collect())
}

/// Total variation distance `½ Σ |p − q|` of two laws (each normalised
/// first), over the union of supports.
pub fn total_variation<K: Ord + Clone>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let (p, q) = (normalize(p), normalize(q));
    let keys: BTreeSet<&K> = p.keys().chain(q.keys()).collect();
    0.5 * keys.into_iter().map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

/// Result of a chi-square test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    /// Pearson statistic.
    pub statistic: f64,
    /// Degrees of freedom after pooling.
    pub df: usize,
    /// Upper-tail p-value (1 when `df = 0`).
    pub p_value: f64,
    /// Number of cells after pooling.
    pub cells: usize,
}

fn chi2_p(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    match ChiSquared::new(df as f64) {
        Ok(d) => (1.0 - d.cdf(stat)).clamp(0.0, 1.0),
        Err(_) => f64::NAN,
    }
}

/// Groups cells (sorted by increasing expectation) so that every group has
/// expectation at least [`POOL_THRESHOLD`]; a trailing small group is
/// merged into the previous one. Returns groups of indices.
fn pool(expected: &[f64]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..expected.len()).collect();
    idx.sort_by(|&a, &b| expected[a].total_cmp(&expected[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    let mut acc = 0.0;
    for i in idx {
        cur.push(i);
        acc += expected[i];
        if acc >= POOL_THRESHOLD {
            groups.push(std::mem::take(&mut cur));
            acc = 0.0;
        }
    }
    if !cur.is_empty() {
        match groups.last_mut() {
            Some(g) => g.extend(cur),
            None => groups.push(cur),
        }
    }
    groups
}

/// Goodness-of-fit test of observed counts against a reference law, with
/// small-expectation cells pooled. Observations outside the support of the
/// reference make the statistic infinite.
pub fn chi_square_gof<K: Ord + Clone>(observed: &BTreeMap<K, u64>, reference: &BTreeMap<K, f64>) -> Result<ChiSquare> {
    let n: u64 = observed.values().sum();
    if n == 0 {
        return Err(Error::OutOfRange("no observations".into()));
    }
    let probs = normalize(reference);
    if observed.keys().any(|k| probs.get(k).copied().unwrap_or(0.0) <= 0.0) {
        return Ok(ChiSquare { statistic: f64::INFINITY, df: probs.len().saturating_sub(1), p_value: 0.0, cells: probs.len() });
    }
    let keys: Vec<&K> = probs.iter().filter(|(_, p)| **p > 0.0).map(|(k, _)| k).collect();
    let expected: Vec<f64> = keys.iter().map(|k| probs[*k] * n as f64).collect();
    let obs: Vec<f64> = keys.iter().map(|k| observed.get(*k).copied().unwrap_or(0) as f64).collect();
    let groups = pool(&expected);
    let stat = groups
        .iter()
        .map(|g| {
            let e: f64 = g.iter().map(|&i| expected[i]).sum();
            let o: f64 = g.iter().map(|&i| obs[i]).sum();
            (o - e).powi(2) / e
        })
        .sum();
    let df = groups.len().saturating_sub(1);
    Ok(ChiSquare { statistic: stat, df, p_value: chi2_p(stat, df), cells: groups.len() })
}

/// Two-sample chi-square homogeneity test of two count vectors, pooling
/// cells by the expected counts under homogeneity.
pub fn chi_square_two_sample<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> Result<ChiSquare> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return Err(Error::OutOfRange("no observations".into()));
    }
    let keys: Vec<&K> = a.keys().chain(b.keys()).collect::<BTreeSet<_>>().into_iter().collect();
    let tot = (na + nb) as f64;
    let oa: Vec<f64> = keys.iter().map(|k| a.get(*k).copied().unwrap_or(0) as f64).collect();
    let ob: Vec<f64> = keys.iter().map(|k| b.get(*k).copied().unwrap_or(0) as f64).collect();
    // pool on the smaller of the two expected counts
    let row: Vec<f64> = oa.iter().zip(&ob).map(|(x, y)| x + y).collect();
    let small: Vec<f64> = row.iter().map(|r| r * na.min(nb) as f64 / tot).collect();
    let groups = pool(&small);
    let mut stat = 0.0;
    for g in &groups {
        let r: f64 = g.iter().map(|&i| row[i]).sum();
        let xa: f64 = g.iter().map(|&i| oa[i]).sum();
        let xb: f64 = g.iter().map(|&i| ob[i]).sum();
        let ea = r * na as f64 / tot;
        let eb = r * nb as f64 / tot;
        stat += (xa - ea).powi(2) / ea + (xb - eb).powi(2) / eb;
    }
    let df = groups.len().saturating_sub(1);
    Ok(ChiSquare { statistic: stat, df, p_value: chi2_p(stat, df), cells: groups.len() })
}

/// Reference for [`compare_distributions`].
#[derive(Clone, Debug)]
pub enum Reference {
    /// A law (probabilities or unnormalised weights).
    Law(BTreeMap<String, f64>),
    /// Counts from an independent sample.
    Counts(BTreeMap<String, u64>),
}

/// Result of [`compare_distributions`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    /// Total variation distance.
    pub tv: f64,
    /// Chi-square statistic.
    pub chi2: f64,
    /// Degrees of freedom.
    pub df: usize,
    /// Chi-square p-value.
    pub p: f64,
    /// Number of observations.
    pub n: u64,
}

/// Compares empirical counts with a reference law or reference counts:
/// total variation plus a pooled chi-square test.
pub fn compare_distributions(empirical: &BTreeMap<String, u64>, reference: &Reference) -> Result<Comparison> {
    let freq = frequencies(empirical);
    let (tv, chi) = match reference {
        Reference::Law(l) => (total_variation(&freq, l), chi_square_gof(empirical, l)?),
        Reference::Counts(c) => (total_variation(&freq, &frequencies(c)), chi_square_two_sample(empirical, c)?),
    };
    Ok(Comparison { tv, chi2: chi.statistic, df: chi.df, p: chi.p_value, n: empirical.values().sum() })
}

/// Sample mean.
pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Normalised autocorrelation function up to `max_lag` (inclusive).
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![1.0];
    }
    let m = mean(x);
    let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return vec![1.0];
    }
    (0..=max_lag.min(n - 1))
        .map(|t| x[..n - t].iter().zip(&x[t..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64 / c0)
        .collect()
}

/// Integrated autocorrelation time `τ = 1 + 2 Σ_{t ≥ 1} ρ(t)` with Sokal's
/// automatic window (the smallest `W` with `W ≥ c·τ(W)`, `c = 5`), in units
/// of the sampling interval. Several independent series are combined by
/// averaging their autocorrelation functions.
pub fn integrated_autocorrelation_time(series: &[Vec<f64>]) -> f64 {
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    if len < 4 {
        return f64::NAN;
    }
    let max_lag = len / 2;
    let acfs: Vec<Vec<f64>> = series.iter().map(|s| autocorrelation(s, max_lag)).collect();
    let rho = |t: usize| {
        let v: Vec<f64> = acfs.iter().filter_map(|a| a.get(t).copied()).collect();
        if v.is_empty() {
            0.0
        } else {
            mean(&v)
        }
    };
    let mut tau = 1.0;
    for w in 1..=max_lag {
        tau += 2.0 * rho(w);
        if w as f64 >= 5.0 * tau {
            return tau.max(1.0);
        }
    }
    tau.max(1.0)
}

/// Ordinary least-squares fit `y ≈ intercept + slope·x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    /// Slope.
    pub slope: f64,
    /// Intercept.
    pub intercept: f64,
    /// Standard error of the slope (NaN with fewer than three points).
    pub slope_se: f64,
}

/// Least-squares line through `(x, y)` points.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::OutOfRange("at least two points are required".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::OutOfRange("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (x.len() - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LinearFit { slope, intercept, slope_se })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[(&str, f64)]) -> BTreeMap<String, f64> {
        v.iter().map(|(k, p)| (k.to_string(), *p)).collect()
    }

    #[test]
    fn tv_extremes() {
        let a = m(&[("x", 1.0), ("y", 3.0)]);
        assert_eq!(total_variation(&a, &a), 0.0);
        assert_eq!(total_variation(&m(&[("x", 1.0)]), &m(&[("y", 1.0)])), 1.0);
        assert!((total_variation(&m(&[("x", 0.5), ("y", 0.5)]), &m(&[("x", 1.0)])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chi_square_exact_fit_and_misfit() {
        let obs: BTreeMap<String, u64> = [("a".to_string(), 50), ("b".to_string(), 50)].into();
        let r = chi_square_gof(&obs, &m(&[("a", 0.5), ("b", 0.5)])).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.df, 1);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let r = chi_square_gof(&obs, &m(&[("a", 0.9), ("b", 0.1)])).unwrap();
        assert!(r.p_value < 1e-10);
        let out: BTreeMap<String, u64> = [("c".to_string(), 1)].into();
        assert_eq!(chi_square_gof(&out, &m(&[("a", 1.0)])).unwrap().p_value, 0.0);
    }

    #[test]
    fn pooling_merges_small_cells() {
        let g = pool(&[1.0, 1.0, 1.0, 10.0, 2.0, 0.5]);
        assert_eq!(g.iter().map(Vec::len).sum::<usize>(), 6);
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn two_sample_identical() {
        let a: BTreeMap<String, u64> = [("a".to_string(), 30), ("b".to_string(), 70)].into();
        let r = chi_square_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn autocorrelation_of_ar1() {
        // AR(1) with coefficient 1/2 has τ = (1 + φ)/(1 − φ) = 3
        let mut x = vec![0.0f64; 200_000];
        let mut s: u64 = 12345;
        for t in 1..x.len() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            x[t] = 0.5 * x[t - 1] + u;
        }
        let tau = integrated_autocorrelation_time(&[x]);
        assert!((tau - 3.0).abs() < 0.2, "tau = {tau}");
    }

    #[test]
    fn line_fit() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }
}
