//! Photon timestamps in integer ticks, the interval codec, and binning.
//!
//! The detector front end runs an 800 MHz counter, so one tick is exactly
//! 1.25 ns and one 10 ns base sample is exactly 8 ticks. Every time in this
//! crate is carried as an integer tick count; the 1.25 factor is applied once
//! when a value crosses a reporting boundary. Because the detector pulse is
//! 10 ns wide, two distinguishable photons can never be closer than 8 ticks.

use crate::error::{Error, Result};

/// Picoseconds per tick: 1.25 ns at an 800 MHz clock.
pub const TICK_PICOS: u64 = 1250;

/// Ticks per 10 ns base sample.
pub const TICKS_PER_BASE_SAMPLE: u64 = 8;

/// Minimum spacing between two events, set by the 10 ns detector pulse width.
pub const MIN_EVENT_GAP_TICKS: u64 = 8;

/// One instant on the 800 MHz clock, counted in 1.25 ns ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(transparent)]
pub struct Tick(u64);

impl Tick {
    pub const fn new(ticks: u64) -> Self {
        Tick(ticks)
    }

    pub const fn get(self) -> u64 {
        self.0
    }

    /// Exact physical time in picoseconds. u128 so the full tick range fits.
    pub const fn as_picos(self) -> u128 {
        self.0 as u128 * TICK_PICOS as u128
    }

    /// Physical time in seconds. One conversion, applied at the boundary.
    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1.25e-9
    }
}

impl std::fmt::Display for Tick {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A validated photon arrival record: strictly increasing event times with at
/// least [`MIN_EVENT_GAP_TICKS`] between consecutive events, all inside
/// `[0, duration)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhotonEventStream {
    events: Vec<Tick>,
    duration: Tick,
}

impl PhotonEventStream {
    pub fn new(events: Vec<Tick>, duration: Tick) -> Result<Self> {
        for i in 0..events.len() {
            if i > 0 {
                let prev = events[i - 1].get();
                let cur = events[i].get();
                if cur <= prev {
                    return Err(Error::NonMonotonicEvents { index: i });
                }
                let gap = cur - prev;
                if gap < MIN_EVENT_GAP_TICKS {
                    return Err(Error::EventGapTooSmall { index: i, gap });
                }
            }
            if events[i] >= duration {
                return Err(Error::EventBeyondDuration { index: i });
            }
        }
        Ok(PhotonEventStream { events, duration })
    }

    pub fn events(&self) -> &[Tick] {
        &self.events
    }

    pub fn duration(&self) -> Tick {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// The compact on-wire form of a stream: the first entry is the absolute time
/// of the first event, every later entry is the gap to its predecessor.
///
/// Gaps (positions ≥ 1) are always ≥ 8 ticks; the leading absolute offset may
/// be anything, including zero for an event on the very first tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalRecord {
    raw_intervals: Vec<u64>,
    duration: Tick,
}

impl IntervalRecord {
    pub fn new(raw_intervals: Vec<u64>, duration: Tick) -> Result<Self> {
        for (position, &value) in raw_intervals.iter().enumerate().skip(1) {
            if value < MIN_EVENT_GAP_TICKS {
                return Err(Error::CorruptInterval { position, value });
            }
        }
        Ok(IntervalRecord {
            raw_intervals,
            duration,
        })
    }

    pub fn raw_intervals(&self) -> &[u64] {
        &self.raw_intervals
    }

    pub fn duration(&self) -> Tick {
        self.duration
    }
}

/// Difference-encode a stream. Inverse of [`decode_intervals`].
pub fn encode_intervals(stream: &PhotonEventStream) -> IntervalRecord {
    let mut raw = Vec::with_capacity(stream.len());
    let mut prev = 0u64;
    for ev in stream.events() {
        raw.push(ev.get() - prev);
        prev = ev.get();
    }
    IntervalRecord {
        raw_intervals: raw,
        duration: stream.duration(),
    }
}

/// Rebuild absolute event times by prefix-summing the intervals.
///
/// A zero interval anywhere past position 0 (or any gap below 8 ticks) marks
/// a corrupt record and is rejected.
pub fn decode_intervals(record: &IntervalRecord) -> Result<PhotonEventStream> {
    let mut events = Vec::with_capacity(record.raw_intervals.len());
    let mut acc: u64 = 0;
    for (position, &value) in record.raw_intervals.iter().enumerate() {
        if position > 0 && value < MIN_EVENT_GAP_TICKS {
            return Err(Error::CorruptInterval { position, value });
        }
        acc = acc.checked_add(value).ok_or(Error::CorruptInterval {
            position,
            value,
        })?;
        events.push(Tick::new(acc));
    }
    PhotonEventStream::new(events, record.duration)
}

/// Counts per fixed-width sample interval. The period is held in ticks so
/// coarsening stays exact; seconds are derived on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSeries {
    counts: Vec<u64>,
    period_ticks: u64,
}

impl SampleSeries {
    pub fn from_counts(counts: Vec<u64>, period_ticks: u64) -> Result<Self> {
        if period_ticks == 0 {
            return Err(Error::ZeroSamplePeriod);
        }
        Ok(SampleSeries {
            counts,
            period_ticks,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn period_ticks(&self) -> u64 {
        self.period_ticks
    }

    pub fn period_secs(&self) -> f64 {
        self.period_ticks as f64 * 1.25e-9
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Bin events into counts per `sample_period_ticks`-wide interval. The series
/// covers the whole stream duration, rounded up to a whole sample, so trailing
/// empty samples are kept.
pub fn bin_to_samples(stream: &PhotonEventStream, sample_period_ticks: u64) -> Result<SampleSeries> {
    if sample_period_ticks == 0 {
        return Err(Error::ZeroSamplePeriod);
    }
    let num_samples = stream.duration().get().div_ceil(sample_period_ticks);
    let num_samples = usize::try_from(num_samples)
        .map_err(|_| Error::InvalidParameter("binned series does not fit in memory".into()))?;
    let mut counts = vec![0u64; num_samples];
    for ev in stream.events() {
        counts[(ev.get() / sample_period_ticks) as usize] += 1;
    }
    Ok(SampleSeries {
        counts,
        period_ticks: sample_period_ticks,
    })
}
