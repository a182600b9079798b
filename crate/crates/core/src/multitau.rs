//! Streaming multi-tau correlator.
//!
//! The correlator is a cascade of blocks. Block 0 correlates the incoming
//! sample stream at its native period against a small shift register; each
//! later block receives the stream coarsened by an integer dilation factor
//! (pairwise sums for the default factor of 2) and covers lags just beyond
//! the previous block's reach at its coarser period. With the default
//! configuration of 35 blocks (16 channels in block 0, 8 in every later one,
//! 10 ns base period, dilation 2) the 288 channels span lags from 10 ns to
//! 2^38 samples ≈ 45.8 minutes, a ratio above 2.7×10^11, in a few kilobytes
//! of state that never grows with the length of the run.
//!
//! Every channel keeps four 64-bit quantities: the product accumulator, a
//! direct monitor (sum of the current-sample factors), a delayed monitor
//! (sum of the delayed-sample factors) and an update count. All accumulator
//! arithmetic is checked; overflow is reported, never wrapped. Symmetric
//! normalization divides out both monitors so steady intensity normalizes to
//! exactly 1 and any integer rescaling of the input counts cancels exactly.
//!
//! Inter-block coarsening uses pairwise *sums*, not averages, so block
//! accumulators stay exact integers; the scale factor cancels in the
//! normalization.

use crate::error::{Error, Result};
use crate::photon::PhotonEventStream;

/// Engine lifecycle. Samples are accepted only while `Processing`; snapshots
/// are valid in `Processing` and `Done`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifecycle {
    Idle,
    Ready,
    Processing,
    Done,
}

/// Structural parameters of the correlator cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorConfig {
    /// Number of cascaded blocks.
    pub num_blocks: usize,
    /// Channels in every block after the first.
    pub channels_per_block: usize,
    /// Channels in block 0.
    pub first_block_channels: usize,
    /// Sample period of block 0 in seconds.
    pub base_period_secs: f64,
    /// Coarsening factor between consecutive blocks.
    pub dilation: u64,
}

impl Default for CorrelatorConfig {
    fn default() -> Self {
        CorrelatorConfig {
            num_blocks: 35,
            channels_per_block: 8,
            first_block_channels: 16,
            base_period_secs: 1e-8,
            dilation: 2,
        }
    }
}

/// Per-block geometry derived from the config: the block's sample period (in
/// base samples) and the delay of its first channel at that period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BlockLayout {
    period_samples: u64,
    delay_offset: u64,
    num_channels: usize,
}

const MAX_TOTAL_CHANNELS: usize = 1 << 20;
const MAX_RING_LEN: u64 = 1 << 22;

fn block_layouts(config: &CorrelatorConfig) -> Result<Vec<BlockLayout>> {
    let bad = |msg: String| Err(Error::InvalidConfig(msg));
    if config.num_blocks == 0 {
        return bad("need at least one block".into());
    }
    if config.first_block_channels == 0 || (config.num_blocks > 1 && config.channels_per_block == 0)
    {
        return bad("blocks must have at least one channel".into());
    }
    if config.dilation == 0 {
        return bad("dilation must be a positive integer".into());
    }
    if !(config.base_period_secs.is_finite() && config.base_period_secs > 0.0) {
        return bad("base sample period must be positive and finite".into());
    }
    let total = config.first_block_channels
        + (config.num_blocks - 1).saturating_mul(config.channels_per_block);
    if total > MAX_TOTAL_CHANNELS {
        return bad(format!("{total} channels exceeds the supported maximum"));
    }

    let mut layouts = Vec::with_capacity(config.num_blocks);
    layouts.push(BlockLayout {
        period_samples: 1,
        delay_offset: 0,
        num_channels: config.first_block_channels,
    });
    // cum = lag of the last channel so far, in base samples
    let mut cum = config.first_block_channels as u64;
    let mut period = 1u64;
    for s in 1..config.num_blocks {
        period = match period.checked_mul(config.dilation) {
            Some(p) => p,
            None => return bad(format!("block {s} sample period overflows 64-bit arithmetic")),
        };
        if !cum.is_multiple_of(period) {
            return bad(format!(
                "block {s} channels (starting at {cum} base samples) do not align \
                 to its sample period of {period} base samples"
            ));
        }
        let delay_offset = cum / period;
        if delay_offset + config.channels_per_block as u64 > MAX_RING_LEN {
            return bad(format!("block {s} shift register would be too large"));
        }
        layouts.push(BlockLayout {
            period_samples: period,
            delay_offset,
            num_channels: config.channels_per_block,
        });
        let span = (config.channels_per_block as u64)
            .checked_mul(period)
            .and_then(|w| cum.checked_add(w));
        cum = match span {
            Some(c) => c,
            None => return bad(format!("block {s} lags overflow 64-bit sample arithmetic")),
        };
    }
    Ok(layouts)
}

/// One entry of the lag schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEntry {
    pub block: usize,
    /// Channel index within its block.
    pub channel: usize,
    /// Lag in base samples; exact.
    pub lag_samples: u64,
    /// Lag in seconds (`lag_samples × base_period_secs`).
    pub lag_secs: f64,
}

/// The full ordered lag schedule for a configuration.
///
/// Block 0 contributes lags `k·δ0` for `k = 1..=first_block_channels` (the
/// zero-lag channel carries no decay information and is excluded); every
/// later block s contributes `P` lags continuing contiguously from where the
/// previous block stopped, spaced by the block's own period `δ0·dilation^s`.
/// Entries are strictly increasing.
pub fn lag_schedule(config: &CorrelatorConfig) -> Result<Vec<LagEntry>> {
    let layouts = block_layouts(config)?;
    let mut entries = Vec::new();
    let mut offset = 0u64; // lag of the previous block's last channel
    for (block, layout) in layouts.iter().enumerate() {
        for k in 1..=layout.num_channels as u64 {
            let lag = offset + k * layout.period_samples;
            entries.push(LagEntry {
                block,
                channel: (k - 1) as usize,
                lag_samples: lag,
                lag_secs: lag as f64 * config.base_period_secs,
            });
        }
        offset += layout.num_channels as u64 * layout.period_samples;
    }
    Ok(entries)
}

/// Symmetric normalization of one channel:
/// `g = (raw_sum · update_count) / (direct_monitor · delayed_monitor)`.
///
/// Returns `None` when the channel never updated or either monitor is zero;
/// such channels are undefined rather than 0 or ∞. The ratio is reduced to
/// lowest terms in 128-bit arithmetic before the one floating-point division,
/// so rescaling every input count by an integer factor leaves the result
/// bit-for-bit unchanged.
pub fn normalize_symmetric(
    raw_sum: u64,
    direct_monitor: u64,
    delayed_monitor: u64,
    update_count: u64,
) -> Option<f64> {
    if update_count == 0 || direct_monitor == 0 || delayed_monitor == 0 {
        return None;
    }
    let num = raw_sum as u128 * update_count as u128;
    let den = direct_monitor as u128 * delayed_monitor as u128;
    let g = gcd_u128(num, den);
    Some((num / g) as f64 / (den / g) as f64)
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// One reported channel: its lag, the raw 64-bit quantities, and the
/// normalized correlation (undefined channels carry `None`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRecord {
    pub block: usize,
    pub lag_samples: u64,
    pub lag_secs: f64,
    pub raw_sum: u64,
    pub direct_monitor: u64,
    pub delayed_monitor: u64,
    pub update_count: u64,
    pub g: Option<f64>,
}

/// A consistent copy of the full correlator state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlogram {
    pub config: CorrelatorConfig,
    pub total_samples: u64,
    pub channels: Vec<ChannelRecord>,
}

struct Block {
    index: usize,
    layout: BlockLayout,
    dilation: u64,
    /// Recent samples at this block's period; the slot for arrival `t` is
    /// `t % ring.len()`. Length is `delay_offset + num_channels`, exactly the
    /// deepest tap any channel needs.
    ring: Vec<u64>,
    ring_nonzero: usize,
    arrivals: u64,
    raw: Vec<u64>,
    direct: Vec<u64>,
    delayed: Vec<u64>,
    updates: Vec<u64>,
    pair_sum: u64,
    pair_phase: u64,
}

impl Block {
    fn new(index: usize, layout: BlockLayout, dilation: u64) -> Self {
        let ring_len = (layout.delay_offset + layout.num_channels as u64) as usize;
        Block {
            index,
            layout,
            dilation,
            ring: vec![0; ring_len],
            ring_nonzero: 0,
            arrivals: 0,
            raw: vec![0; layout.num_channels],
            direct: vec![0; layout.num_channels],
            delayed: vec![0; layout.num_channels],
            updates: vec![0; layout.num_channels],
            pair_sum: 0,
            pair_phase: 0,
        }
    }

    fn reset(&mut self) {
        self.ring.fill(0);
        self.ring_nonzero = 0;
        self.arrivals = 0;
        self.raw.fill(0);
        self.direct.fill(0);
        self.delayed.fill(0);
        self.updates.fill(0);
        self.pair_sum = 0;
        self.pair_phase = 0;
    }

    fn overflow(&self, channel: usize) -> Error {
        Error::AccumulatorOverflow {
            block: self.index,
            channel,
        }
    }

    /// Process one sample; returns the coarsened sample to forward when this
    /// arrival completes a dilation group.
    fn push_one(&mut self, y: u64) -> Result<Option<u64>> {
        let r = self.ring.len() as u64;
        for j in 0..self.layout.num_channels {
            let d = self.layout.delay_offset + j as u64 + 1;
            if self.arrivals >= d {
                let tap = self.ring[((self.arrivals - d) % r) as usize];
                let prod = y.checked_mul(tap).ok_or_else(|| self.overflow(j))?;
                self.raw[j] = self.raw[j].checked_add(prod).ok_or_else(|| self.overflow(j))?;
                self.direct[j] = self.direct[j].checked_add(y).ok_or_else(|| self.overflow(j))?;
                self.delayed[j] =
                    self.delayed[j].checked_add(tap).ok_or_else(|| self.overflow(j))?;
                self.updates[j] += 1;
            }
        }
        let slot = (self.arrivals % r) as usize;
        if self.ring[slot] != 0 {
            self.ring_nonzero -= 1;
        }
        if y != 0 {
            self.ring_nonzero += 1;
        }
        self.ring[slot] = y;
        self.arrivals += 1;

        self.pair_sum = self.pair_sum.checked_add(y).ok_or_else(|| self.overflow(0))?;
        self.pair_phase += 1;
        if self.pair_phase == self.dilation {
            self.pair_phase = 0;
            let fwd = self.pair_sum;
            self.pair_sum = 0;
            Ok(Some(fwd))
        } else {
            Ok(None)
        }
    }

    /// Process `k` zero samples at once. Equivalent to `k` calls of
    /// `push_one(0)`: products and direct monitors are untouched, delayed
    /// monitors pick up whatever nonzero history slides past each tap, update
    /// counts advance, and the ring fills with zeros. Returns the forwarded
    /// samples in compressed form: an optional leading nonzero value (the
    /// pending pair sum flushed by the first completed group) followed by a
    /// count of zero-valued forwards.
    fn push_zeros(&mut self, k: u64) -> Result<(Option<u64>, u64)> {
        if k == 0 {
            return Ok((None, 0));
        }
        let r = self.ring.len() as u64;
        let n = self.arrivals;
        let n_after = n.checked_add(k).ok_or_else(|| self.overflow(0))?;

        if self.ring_nonzero > 0 {
            // Channel d accumulates the delayed value y[t−d] for each zero
            // arrival t ≥ d; the nonzero contributions come from stored
            // arrivals u in [max(n−d, 0), min(n, n+k−d)).
            for j in 0..self.layout.num_channels {
                let d = self.layout.delay_offset + j as u64 + 1;
                let lo = n.saturating_sub(d);
                let hi = n.min(n_after.saturating_sub(d));
                let mut acc = self.delayed[j];
                for u in lo..hi {
                    let v = self.ring[(u % r) as usize];
                    if v != 0 {
                        acc = acc.checked_add(v).ok_or_else(|| self.overflow(j))?;
                    }
                }
                self.delayed[j] = acc;
            }
        }
        for j in 0..self.layout.num_channels {
            let d = self.layout.delay_offset + j as u64 + 1;
            self.updates[j] = n_after.saturating_sub(d);
        }
        if k >= r {
            self.ring.fill(0);
            self.ring_nonzero = 0;
        } else {
            for m in 0..k {
                let slot = ((n + m) % r) as usize;
                if self.ring[slot] != 0 {
                    self.ring_nonzero -= 1;
                    self.ring[slot] = 0;
                }
            }
        }
        self.arrivals = n_after;

        let total_phase = self.pair_phase + k; // pair_phase < dilation, cannot overflow u64 here
        let groups = total_phase / self.dilation;
        self.pair_phase = total_phase % self.dilation;
        if groups == 0 {
            return Ok((None, 0));
        }
        let flushed = self.pair_sum;
        self.pair_sum = 0;
        if flushed != 0 {
            Ok((Some(flushed), groups - 1))
        } else {
            Ok((None, groups))
        }
    }

    #[cfg(test)]
    fn heap_words(&self) -> usize {
        self.ring.capacity()
            + self.raw.capacity()
            + self.direct.capacity()
            + self.delayed.capacity()
            + self.updates.capacity()
    }
}

/// The streaming correlator engine.
///
/// State size is fixed by the configuration and never grows with the number
/// of samples processed. A single thread drives the engine; `snapshot`
/// borrows it immutably, so a snapshot is always a consistent point-in-time
/// copy.
pub struct Correlator {
    config: CorrelatorConfig,
    schedule: Vec<LagEntry>,
    blocks: Vec<Block>,
    lifecycle: Lifecycle,
    total_samples: u64,
}

impl Correlator {
    /// Build an engine in the `Idle` state. Fails on an invalid or misaligned
    /// configuration.
    pub fn new(config: CorrelatorConfig) -> Result<Self> {
        let layouts = block_layouts(&config)?;
        let schedule = lag_schedule(&config)?;
        let blocks = layouts
            .into_iter()
            .enumerate()
            .map(|(i, l)| Block::new(i, l, config.dilation))
            .collect();
        Ok(Correlator {
            config,
            schedule,
            blocks,
            lifecycle: Lifecycle::Idle,
            total_samples: 0,
        })
    }

    pub fn config(&self) -> &CorrelatorConfig {
        &self.config
    }

    pub fn lifecycle(&self) -> Lifecycle {
        self.lifecycle
    }

    /// Base samples accepted so far.
    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    /// Arm the engine: `Idle` → `Ready`.
    pub fn ready(&mut self) -> Result<()> {
        match self.lifecycle {
            Lifecycle::Idle => {
                self.lifecycle = Lifecycle::Ready;
                Ok(())
            }
            state => Err(Error::Lifecycle { op: "ready", state }),
        }
    }

    /// Begin accepting samples: `Ready` → `Processing`.
    pub fn start(&mut self) -> Result<()> {
        match self.lifecycle {
            Lifecycle::Ready => {
                self.lifecycle = Lifecycle::Processing;
                Ok(())
            }
            state => Err(Error::Lifecycle { op: "start", state }),
        }
    }

    /// Stop accepting samples: `Processing` → `Done`. Accumulators are left
    /// exactly as they were.
    pub fn stop(&mut self) -> Result<()> {
        match self.lifecycle {
            Lifecycle::Processing => {
                self.lifecycle = Lifecycle::Done;
                Ok(())
            }
            state => Err(Error::Lifecycle { op: "stop", state }),
        }
    }

    /// Zero all state and return to `Idle`. Legal from any state.
    pub fn clear(&mut self) {
        for b in &mut self.blocks {
            b.reset();
        }
        self.total_samples = 0;
        self.lifecycle = Lifecycle::Idle;
    }

    /// Feed one base sample (a photon count). Only legal while `Processing`.
    pub fn push_sample(&mut self, count: u64) -> Result<()> {
        if self.lifecycle != Lifecycle::Processing {
            return Err(Error::Lifecycle {
                op: "push_sample",
                state: self.lifecycle,
            });
        }
        self.total_samples = self
            .total_samples
            .checked_add(1)
            .ok_or(Error::AccumulatorOverflow { block: 0, channel: 0 })?;
        let mut v = count;
        for s in 0..self.blocks.len() {
            match self.blocks[s].push_one(v)? {
                Some(fwd) => v = fwd,
                None => break,
            }
        }
        Ok(())
    }

    /// Feed `k` empty base samples. Exactly equivalent to calling
    /// `push_sample(0)` `k` times, but costs O(active blocks) instead of
    /// O(k), which is what makes sparse photon streams cheap to process.
    pub fn push_zeros(&mut self, k: u64) -> Result<()> {
        if self.lifecycle != Lifecycle::Processing {
            return Err(Error::Lifecycle {
                op: "push_zeros",
                state: self.lifecycle,
            });
        }
        if k == 0 {
            return Ok(());
        }
        self.total_samples = self
            .total_samples
            .checked_add(k)
            .ok_or(Error::AccumulatorOverflow { block: 0, channel: 0 })?;
        // Each block receives at most one nonzero forward per batch (a
        // flushed pair sum) followed by zero-valued forwards, so the batch
        // stays in (leading value, zero count) form all the way down.
        let mut lead: Option<u64> = None;
        let mut zeros = k;
        let mut s = 0;
        while s < self.blocks.len() && (lead.is_some() || zeros > 0) {
            let block = &mut self.blocks[s];
            let mut next_lead = None;
            let mut next_zeros = 0u64;
            if let Some(v) = lead {
                if let Some(fwd) = block.push_one(v)? {
                    debug_assert!(fwd > 0);
                    next_lead = Some(fwd);
                }
            }
            if zeros > 0 {
                let (flush, zero_fwds) = block.push_zeros(zeros)?;
                if let Some(fv) = flush {
                    // a group completed by the leading push leaves pair_sum
                    // zero, so both cannot be nonzero at once
                    debug_assert!(next_lead.is_none());
                    next_lead = Some(fv);
                }
                next_zeros += zero_fwds;
            }
            lead = next_lead;
            zeros = next_zeros;
            s += 1;
        }
        Ok(())
    }

    /// Stream a photon event record through the engine, binning on the fly at
    /// `sample_period_ticks`. Equivalent to binning the stream and pushing
    /// every sample, but skips over empty stretches.
    ///
    /// Resumes from the engine's current position: event times are absolute,
    /// and samples already consumed by earlier pushes are not re-counted, so
    /// a long acquisition can be fed as consecutive chunks (each chunk's
    /// `duration` marking how far the clock has advanced). Events that fall
    /// before the current position are rejected.
    pub fn process_events(
        &mut self,
        stream: &PhotonEventStream,
        sample_period_ticks: u64,
    ) -> Result<()> {
        if sample_period_ticks == 0 {
            return Err(Error::ZeroSamplePeriod);
        }
        let total = stream.duration().get().div_ceil(sample_period_ticks);
        let events = stream.events();
        let mut next_sample = self.total_samples;
        if total < next_sample {
            return Err(Error::InvalidParameter(
                "stream duration lies before samples already processed".into(),
            ));
        }
        let mut i = 0;
        while i < events.len() {
            let s = events[i].get() / sample_period_ticks;
            if s < next_sample {
                return Err(Error::NonMonotonicEvents { index: i });
            }
            let mut count = 0u64;
            while i < events.len() && events[i].get() / sample_period_ticks == s {
                count += 1;
                i += 1;
            }
            self.push_zeros(s - next_sample)?;
            self.push_sample(count)?;
            next_sample = s + 1;
        }
        self.push_zeros(total - next_sample)?;
        Ok(())
    }

    /// A consistent copy of every channel. Legal in `Processing` or `Done`.
    pub fn snapshot(&self) -> Result<Correlogram> {
        match self.lifecycle {
            Lifecycle::Processing | Lifecycle::Done => {}
            _ => return Err(Error::NoData),
        }
        let channels = self
            .schedule
            .iter()
            .map(|entry| {
                let b = &self.blocks[entry.block];
                let j = entry.channel;
                ChannelRecord {
                    block: entry.block,
                    lag_samples: entry.lag_samples,
                    lag_secs: entry.lag_secs,
                    raw_sum: b.raw[j],
                    direct_monitor: b.direct[j],
                    delayed_monitor: b.delayed[j],
                    update_count: b.updates[j],
                    g: normalize_symmetric(b.raw[j], b.direct[j], b.delayed[j], b.updates[j]),
                }
            })
            .collect();
        Ok(Correlogram {
            config: self.config.clone(),
            total_samples: self.total_samples,
            channels,
        })
    }

    #[cfg(test)]
    fn heap_words(&self) -> usize {
        self.blocks.iter().map(Block::heap_words).sum::<usize>() + self.schedule.capacity()
    }
}
