//! Streaming multi-tau photon autocorrelator with a dynamic light scattering
//! (DLS) analysis chain.
//!
//! The crate is organised around the stages of a photon correlation
//! experiment:
//!
//! * [`photon`] — integer-tick photon timestamps, the interval codec used to
//!   store them compactly, and binning into sample series.
//! * [`multitau`] — the streaming correlator itself: cascaded blocks whose
//!   sample time doubles from block to block, covering lags from 10 ns to
//!   roughly 45 minutes in 288 channels of constant-size state.
//! * [`direct`] — a brute-force reference correlator used to validate the
//!   streaming engine and to measure the bias introduced by coarsening.
//! * [`dls`] — synthetic data generation: Stokes-Einstein ground truth,
//!   exponentially correlated intensity traces, and photon emission.
//! * [`fit`] — single-exponential decay fitting and particle sizing.
//! * [`io`] — plain-text and binary file formats for every artifact.
//!
//! All internal time bookkeeping uses integer ticks of 1.25 ns (one eighth of
//! the 10 ns base sample). Conversion to seconds happens once, at reporting
//! boundaries, so arithmetic on event times is exact.

pub mod direct;
pub mod dls;
pub mod error;
pub mod fit;
pub mod io;
pub mod multitau;
pub mod photon;

pub use direct::{averaging_bias, coarsen, direct_correlate, BiasRecord, DirectCorrelogram};
pub use dls::{
    generate_intensity, generate_photons, ground_truth, ExperimentParams, GenDiagnostics,
    GroundTruth, IntensitySeries,
};
pub use error::{Error, Result};
pub use fit::{
    fit_correlogram, fit_exponential, model_jacobian, model_value, relative_error,
    size_from_decay, FitResult, FitWindow, SizeResult, WeightPolicy,
};
pub use io::{
    load_correlogram, load_timestamps, save_correlogram, save_timestamps, SizeReport,
    TimestampFormat, TruthSidecar,
};
pub use multitau::{
    lag_schedule, normalize_symmetric, ChannelRecord, Correlator, CorrelatorConfig, Correlogram,
    LagEntry, Lifecycle,
};
pub use photon::{
    bin_to_samples, decode_intervals, encode_intervals, IntervalRecord, PhotonEventStream,
    SampleSeries, Tick, MIN_EVENT_GAP_TICKS, TICKS_PER_BASE_SAMPLE, TICK_PICOS,
};
