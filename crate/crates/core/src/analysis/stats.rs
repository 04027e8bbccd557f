//! Correlation, percentile bootstrap and split-half reliability.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::rng;
use crate::scalar::{mean, Real};

/// Minimum bootstrap iterations.
pub const MIN_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("bootstrap needs at least {MIN_ITERATIONS} iterations, got {0}")]
    Iterations(usize),
    #[error("confidence level must lie in (0, 1), got {0}")]
    Level(f64),
    #[error("no split produced a usable correlation")]
    NoUsableSplit,
    #[error("statistic undefined on {discarded} of {iterations} resamples")]
    Degenerate { discarded: usize, iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pearson<T> {
    pub r: T,
    pub n: usize,
    /// Two-sided p-value from a t distribution with n-2 degrees of freedom.
    pub p: f64,
}

pub fn pearson_r<T: Real>(x: &[T], y: &[T]) -> Result<Pearson<T>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mx = mean(x).unwrap();
    let my = mean(y).unwrap();
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx == T::zero() {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == T::zero() {
        return Err(StatsError::ZeroVariance("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one());
    Ok(Pearson { r, n, p: pearson_p(r.to_f64_lossy(), n) })
}

fn pearson_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and nonempty.
pub fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = T::from_f64_lossy(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapCi<T> {
    pub estimate: T,
    pub low: T,
    pub high: T,
    pub level: f64,
    pub iterations: usize,
    /// Resamples on which the statistic was undefined (NaN), left out of the percentiles.
    pub discarded: usize,
}

/// Percentile bootstrap over `units`: each iteration resamples the units with
/// replacement and recomputes `statistic`. Iteration `i` draws from its own
/// stream of `seed`, so results do not depend on thread scheduling.
///
/// A statistic may return NaN for a resample on which it is undefined; such
/// resamples are dropped and counted, up to 10% of `iterations`.
pub fn bootstrap_ci<U, T, F>(units: &[U], statistic: F, iterations: usize, level: f64, seed: u64) -> Result<BootstrapCi<T>, StatsError>
where
    U: Sync,
    T: Real,
    F: Fn(&[&U]) -> T + Sync,
{
    if iterations < MIN_ITERATIONS {
        return Err(StatsError::Iterations(iterations));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Level(level));
    }
    if units.len() < 2 {
        return Err(StatsError::TooFew { need: 2, got: units.len() });
    }
    let all: Vec<&U> = units.iter().collect();
    let estimate = statistic(&all);
    let mut stats: Vec<T> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::substream(seed, i as u64);
            let sample: Vec<&U> = (0..units.len()).map(|_| &units[r.random_range(0..units.len())]).collect();
            statistic(&sample)
        })
        .collect();
    if !estimate.is_finite() || stats.iter().any(|s| s.is_infinite()) {
        return Err(StatsError::NonFinite);
    }
    stats.retain(|s| !s.is_nan());
    let discarded = iterations - stats.len();
    if discarded * 10 > iterations {
        return Err(StatsError::Degenerate { discarded, iterations });
    }
    stats.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCi { estimate, low: quantile(&stats, tail), high: quantile(&stats, 1.0 - tail), level, iterations, discarded })
}

/// Bootstrap CI of the mean of `values`.
pub fn bootstrap_mean_ci<T: Real>(values: &[T], iterations: usize, level: f64, seed: u64) -> Result<BootstrapCi<T>, StatsError> {
    bootstrap_ci(values, |s: &[&T]| s.iter().map(|v| **v).sum::<T>() / T::from_usize_lossy(s.len()), iterations, level, seed)
}

/// Reliability of the full test from the correlation between two halves.
pub fn spearman_brown<T: Real>(r: T) -> T {
    let two = T::one() + T::one();
    two * r / (T::one() + r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitHalf<T> {
    /// Pearson r of item means between halves, one per usable split.
    pub split_r: Vec<T>,
    pub mean_r: T,
    pub corrected: T,
    pub diagnostics: Vec<String>,
}

/// Split-half reliability of item means: participants are split randomly in
/// two `n_splits` times, item means per half are correlated, the mean r is
/// stepped up with [`spearman_brown`].
///
/// `observations` are (participant, item, value).
pub fn split_half_reliability<T: Real>(observations: &[(&str, &str, T)], n_splits: usize, seed: u64) -> Result<SplitHalf<T>, StatsError> {
    let participants: Vec<&str> = observations.iter().map(|o| o.0).collect::<BTreeSet<_>>().into_iter().collect();
    if participants.len() < 2 {
        return Err(StatsError::TooFew { need: 2, got: participants.len() });
    }
    let mut diagnostics = Vec::new();
    let mut split_r = Vec::new();
    for s in 0..n_splits {
        let mut order = participants.clone();
        order.shuffle(&mut rng::substream(seed, s as u64));
        let half_a: BTreeSet<&str> = order[..order.len() / 2].iter().copied().collect();
        let mut sums: BTreeMap<&str, [(T, usize); 2]> = BTreeMap::new();
        for &(p, item, v) in observations {
            let slot = &mut sums.entry(item).or_insert([(T::zero(), 0); 2])[usize::from(!half_a.contains(p))];
            slot.0 = slot.0 + v;
            slot.1 += 1;
        }
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        let mut dropped = 0;
        for [(sa, na), (sb, nb)] in sums.values() {
            if *na == 0 || *nb == 0 {
                dropped += 1;
                continue;
            }
            xa.push(*sa / T::from_usize_lossy(*na));
            xb.push(*sb / T::from_usize_lossy(*nb));
        }
        if dropped > 0 {
            diagnostics.push(format!("split {s}: {dropped} item(s) rated in only one half were dropped"));
        }
        match pearson_r(&xa, &xb) {
            Ok(p) => split_r.push(p.r),
            Err(e) => diagnostics.push(format!("split {s}: skipped ({e})")),
        }
    }
    if split_r.is_empty() {
        return Err(StatsError::NoUsableSplit);
    }
    let mean_r = mean(&split_r).unwrap();
    Ok(SplitHalf { corrected: spearman_brown(mean_r), mean_r, split_r, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations() {
        let x = [1.0f64, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &x).unwrap().r - 1.0).abs() < 1e-15);
        assert!((pearson_r(&x, &neg).unwrap().r + 1.0).abs() < 1e-15);
        assert_eq!(pearson_r(&x, &x).unwrap().p, 0.0);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFew { need: 3, got: 2 }));
        assert_eq!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::ZeroVariance("x")));
        assert_eq!(pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(3, 2)));
        assert_eq!(pearson_r(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]), Err(StatsError::NonFinite));
    }

    #[test]
    fn p_value_matches_table() {
        // r = 0.5, n = 12: t = 0.5 * sqrt(10 / 0.75) = 1.8257; two-sided p ≈ 0.0979.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let p = pearson_p(0.5, x.len());
        assert!((p - 0.0979).abs() < 5e-4, "{p}");
    }

    #[test]
    fn quantile_type7() {
        let s = [1.0f64, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
        assert!((quantile(&s, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile(&s, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_constant_and_errors() {
        let c = bootstrap_mean_ci(&[3.0f64; 10], 1000, 0.95, 1).unwrap();
        assert_eq!((c.low, c.estimate, c.high), (3.0, 3.0, 3.0));
        assert_eq!(bootstrap_mean_ci(&[1.0, 2.0], 999, 0.95, 1), Err(StatsError::Iterations(999)));
        assert_eq!(bootstrap_mean_ci(&[1.0], 1000, 0.95, 1), Err(StatsError::TooFew { need: 2, got: 1 }));
        assert_eq!(bootstrap_mean_ci(&[1.0, 2.0], 1000, 1.0, 1), Err(StatsError::Level(1.0)));
    }

    #[test]
    fn undefined_resamples_are_dropped_up_to_a_limit() {
        // undefined when a resample holds only zeros: (1/2)^10 here, (2/3)^3 below
        let stat = |s: &[&usize]| if s.iter().all(|u| **u == 0) { f64::NAN } else { s.len() as f64 };
        let units: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let ci = bootstrap_ci(&units, stat, 4000, 0.95, 5).unwrap();
        assert!(ci.discarded > 0 && ci.discarded < 40, "{}", ci.discarded);
        assert_eq!(ci.low, 10.0);
        let few = [0usize, 0, 1];
        assert!(matches!(bootstrap_ci(&few, stat, 1000, 0.95, 5), Err(StatsError::Degenerate { .. })));
    }

    #[test]
    fn spearman_brown_closed_form() {
        assert_eq!(spearman_brown(1.0), 1.0);
        assert!((spearman_brown(0.85f64) - 1.7 / 1.85).abs() < 1e-15);
    }

    #[test]
    fn split_half_noise_free() {
        let items = ["a", "b", "c", "d", "e"];
        let mut obs = Vec::new();
        let names: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
        for p in &names {
            for (k, item) in items.iter().enumerate() {
                obs.push((p.as_str(), *item, (k * 10) as f64));
            }
        }
        let sh = split_half_reliability(&obs, 10, 5).unwrap();
        assert_eq!(sh.split_r.len(), 10);
        assert!((sh.corrected - 1.0).abs() < 1e-12);
    }
}
