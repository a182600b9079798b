//! Brute-force reference correlator.
//!
//! Computes lag products by direct summation over the whole series, with no
//! coarsening and no streaming state. It is O(N) per lag and exists to check
//! the streaming engine bit-for-bit and to measure the bias the engine's
//! coarsening introduces at large lags. Nothing here shares accumulation code
//! with [`crate::multitau`].

use crate::error::{Error, Result};
use crate::multitau::{normalize_symmetric, Correlator, CorrelatorConfig};
use crate::photon::SampleSeries;

/// Plain time-average autocorrelation: for each lag j,
/// `sum_j = Σ_{i} x[i]·x[i+j]` over the N−j complete pairs, and
/// `norm_j = sum_j / (N−j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectCorrelogram {
    pub lags: Vec<u64>,
    pub sums: Vec<u64>,
    pub norms: Vec<f64>,
}

/// Direct correlation at lags `1..=max_lag` samples.
///
/// Sums are exact 64-bit integers; overflow is reported, never wrapped.
pub fn direct_correlate(series: &SampleSeries, max_lag: usize) -> Result<DirectCorrelogram> {
    let x = series.counts();
    if max_lag >= x.len() {
        return Err(Error::InsufficientData(format!(
            "need more than {max_lag} samples for lag {max_lag}, have {}",
            x.len()
        )));
    }
    let mut lags = Vec::with_capacity(max_lag);
    let mut sums = Vec::with_capacity(max_lag);
    let mut norms = Vec::with_capacity(max_lag);
    for j in 1..=max_lag {
        let mut sum: u64 = 0;
        for i in 0..x.len() - j {
            let prod = x[i]
                .checked_mul(x[i + j])
                .ok_or(Error::AccumulatorOverflow { block: 0, channel: j })?;
            sum = sum
                .checked_add(prod)
                .ok_or(Error::AccumulatorOverflow { block: 0, channel: j })?;
        }
        lags.push(j as u64);
        sums.push(sum);
        norms.push(sum as f64 / (x.len() - j) as f64);
    }
    Ok(DirectCorrelogram { lags, sums, norms })
}

/// Reference statistics for one channel of a symmetrically normalized
/// correlator: the same four quantities the streaming engine keeps, computed
/// by direct summation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelStats {
    pub raw_sum: u64,
    pub direct_monitor: u64,
    pub delayed_monitor: u64,
    pub update_count: u64,
}

impl ChannelStats {
    pub fn normalized(&self) -> Option<f64> {
        normalize_symmetric(
            self.raw_sum,
            self.direct_monitor,
            self.delayed_monitor,
            self.update_count,
        )
    }
}

/// Direct computation of raw sum, both monitors, and the update count at one
/// delay. The direct monitor sums the current-sample factors and the delayed
/// monitor the delayed-sample factors, over exactly the update_count pairs.
pub fn symmetric_channel(counts: &[u64], delay: usize) -> Result<ChannelStats> {
    let overflow = || Error::AccumulatorOverflow { block: 0, channel: delay };
    let mut stats = ChannelStats {
        raw_sum: 0,
        direct_monitor: 0,
        delayed_monitor: 0,
        update_count: 0,
    };
    if delay == 0 || delay >= counts.len() {
        return Ok(stats);
    }
    for i in delay..counts.len() {
        let cur = counts[i];
        let del = counts[i - delay];
        let prod = cur.checked_mul(del).ok_or_else(overflow)?;
        stats.raw_sum = stats.raw_sum.checked_add(prod).ok_or_else(overflow)?;
        stats.direct_monitor = stats.direct_monitor.checked_add(cur).ok_or_else(overflow)?;
        stats.delayed_monitor = stats.delayed_monitor.checked_add(del).ok_or_else(overflow)?;
        stats.update_count += 1;
    }
    Ok(stats)
}

/// Sum adjacent groups of `factor` samples; a trailing partial group is
/// dropped. The sample period grows by the same factor, so total counted
/// signal is conserved up to the dropped tail.
pub fn coarsen(series: &SampleSeries, factor: usize) -> Result<SampleSeries> {
    if factor == 0 {
        return Err(Error::InvalidParameter("coarsening factor must be ≥ 1".into()));
    }
    let x = series.counts();
    let n_out = x.len() / factor;
    let mut out = Vec::with_capacity(n_out);
    for g in 0..n_out {
        let mut sum = 0u64;
        for i in 0..factor {
            sum = sum
                .checked_add(x[g * factor + i])
                .ok_or(Error::AccumulatorOverflow { block: 0, channel: 0 })?;
        }
        out.push(sum);
    }
    let period = series
        .period_ticks()
        .checked_mul(factor as u64)
        .ok_or_else(|| Error::InvalidParameter("coarsened period overflows tick range".into()))?;
    SampleSeries::from_counts(out, period)
}

/// One channel of the engine-vs-direct comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasRecord {
    pub block: usize,
    pub lag_samples: u64,
    pub lag_secs: f64,
    pub g_multitau: f64,
    pub g_direct: f64,
    /// g_multitau − g_direct at the same physical lag.
    pub bias: f64,
}

/// Quantify the coarsening bias of the streaming engine on a finite series.
///
/// The engine runs over `series` as configured; for every channel it reports,
/// the direct route computes the symmetrically normalized correlation at the
/// same physical lag on the *uncoarsened* series. Channels that lack data on
/// either route (or whose normalization is undefined) are omitted.
pub fn averaging_bias(series: &SampleSeries, config: &CorrelatorConfig) -> Result<Vec<BiasRecord>> {
    let mut engine = Correlator::new(config.clone())?;
    engine.ready()?;
    engine.start()?;
    for &c in series.counts() {
        engine.push_sample(c)?;
    }
    engine.stop()?;
    let snap = engine.snapshot()?;

    let mut out = Vec::new();
    for ch in &snap.channels {
        let g_multitau = match ch.g {
            Some(g) => g,
            None => continue,
        };
        let delay = match usize::try_from(ch.lag_samples) {
            Ok(d) if d < series.len() => d,
            _ => continue,
        };
        let reference = symmetric_channel(series.counts(), delay)?;
        let g_direct = match reference.normalized() {
            Some(g) => g,
            None => continue,
        };
        out.push(BiasRecord {
            block: ch.block,
            lag_samples: ch.lag_samples,
            lag_secs: ch.lag_samples as f64 * series.period_secs(),
            g_multitau,
            g_direct,
            bias: g_multitau - g_direct,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(counts: &[u64]) -> SampleSeries {
        SampleSeries::from_counts(counts.to_vec(), 8).unwrap()
    }

    #[test]
    fn alternating_series_at_lag_two() {
        // [1,0,1,0,1,0] at lag 2: pairs (x0,x2),(x1,x3),(x2,x4),(x3,x5)
        // give products 1,0,1,0 → sum 2 over N−j = 4 terms.
        let c = direct_correlate(&series(&[1, 0, 1, 0, 1, 0]), 2).unwrap();
        assert_eq!(c.sums, vec![0, 2]);
        assert_eq!(c.norms[1], 0.5);
    }

    #[test]
    fn constant_series_normalizes_to_square() {
        let c = direct_correlate(&series(&[3; 10]), 4).unwrap();
        for j in 0..4 {
            assert_eq!(c.sums[j], 9 * (10 - (j as u64 + 1)));
            assert_eq!(c.norms[j], 9.0);
        }
    }

    #[test]
    fn lag_must_leave_at_least_one_pair() {
        assert!(direct_correlate(&series(&[1, 2, 3]), 3).is_err());
        assert!(direct_correlate(&series(&[1, 2, 3]), 2).is_ok());
    }

    #[test]
    fn sums_are_exact_integers() {
        let c = direct_correlate(&series(&[2, 3, 5, 7, 11]), 2).unwrap();
        // lag 1: 2·3+3·5+5·7+7·11 = 6+15+35+77 = 133
        // lag 2: 2·5+3·7+5·11 = 10+21+55 = 86
        assert_eq!(c.sums, vec![133, 86]);
    }

    #[test]
    fn overflow_is_reported_not_wrapped() {
        let big = 1u64 << 33;
        let err = direct_correlate(&series(&[big, big, big]), 1).unwrap_err();
        assert!(matches!(err, Error::AccumulatorOverflow { .. }));
    }

    #[test]
    #[allow(clippy::erasing_op, clippy::identity_op)] // products written out term by term
    fn symmetric_channel_matches_hand_enumeration() {
        // counts [1,2,0,3], delay 1: pairs (2,1),(0,2),(3,0)
        let s = symmetric_channel(&[1, 2, 0, 3], 1).unwrap();
        assert_eq!(s.raw_sum, 2 * 1 + 0 * 2 + 3 * 0);
        assert_eq!(s.direct_monitor, 2 + 0 + 3);
        assert_eq!(s.delayed_monitor, 1 + 2 + 0);
        assert_eq!(s.update_count, 3);
    }

    #[test]
    fn symmetric_channel_with_no_pairs_is_empty() {
        let s = symmetric_channel(&[1, 2], 5).unwrap();
        assert_eq!(s.update_count, 0);
        assert_eq!(s.normalized(), None);
    }

    #[test]
    fn coarsen_sums_pairs_and_drops_partial_tail() {
        let out = coarsen(&series(&[1, 0, 1, 1]), 2).unwrap();
        assert_eq!(out.counts(), &[1, 2]);
        assert_eq!(out.period_ticks(), 16);

        let odd = coarsen(&series(&[1, 0, 1, 1, 9]), 2).unwrap();
        assert_eq!(odd.counts(), &[1, 2]);
    }

    #[test]
    fn coarsen_by_one_is_identity() {
        let s = series(&[4, 5, 6]);
        assert_eq!(coarsen(&s, 1).unwrap(), s);
    }

    #[test]
    fn coarsen_rejects_zero_factor() {
        assert!(coarsen(&series(&[1]), 0).is_err());
    }

    proptest! {
        #[test]
        fn coarsen_conserves_counts(counts in prop::collection::vec(0u64..100, 0..300), factor in 1usize..8) {
            let s = series(&counts);
            let out = coarsen(&s, factor).unwrap();
            let kept = counts.len() / factor * factor;
            prop_assert_eq!(
                out.counts().iter().sum::<u64>(),
                counts[..kept].iter().sum::<u64>()
            );
            prop_assert_eq!(out.period_ticks(), 8 * factor as u64);
        }

        #[test]
        fn direct_sums_match_naive_definition(counts in prop::collection::vec(0u64..16, 2..128)) {
            let max_lag = counts.len() - 1;
            let c = direct_correlate(&series(&counts), max_lag).unwrap();
            for (idx, &j) in c.lags.iter().enumerate() {
                let j = j as usize;
                let expect: u64 = (0..counts.len() - j).map(|i| counts[i] * counts[i + j]).sum();
                prop_assert_eq!(c.sums[idx], expect);
            }
        }
    }
}
