pub mod compare;
pub mod correlate;
pub mod fit;
pub mod simulate;
pub mod size;

use std::path::{Path, PathBuf};

use taucorr::Error;

/// An analysis stage ran to completion but did not produce a usable answer
/// (a fit that stalled before converging, a report the next stage refuses
/// to build on). Distinct from bad input: the data were well formed.
#[derive(Debug)]
pub struct AnalysisFailed(pub String);

impl std::fmt::Display for AnalysisFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for AnalysisFailed {}

/// Map a failure to the process exit code documented in the crate root.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<AnalysisFailed>().is_some() {
        return 4;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::Parse { .. }
            | Error::CorruptInterval { .. }
            | Error::NonMonotonicEvents { .. }
            | Error::EventGapTooSmall { .. }
            | Error::EventBeyondDuration { .. },
        ) => 2,
        Some(
            Error::InvalidParameter(_)
            | Error::InvalidConfig(_)
            | Error::UnstableCoefficient(_)
            | Error::ZeroSamplePeriod,
        ) => 3,
        Some(Error::RankDeficient | Error::InsufficientData(_)) => 4,
        _ => 1,
    }
}

/// `path` with `suffix` appended to the full file name (`run.phot` →
/// `run.phot.truth`), unlike [`Path::with_extension`] which would replace
/// the existing extension.
pub fn path_with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Seconds → whole 1.25 ns ticks, rejecting values that don't land on a
/// tick. The relative tolerance absorbs the rounding of decimal literals to
/// binary floating point without admitting genuinely incommensurate periods.
pub fn secs_to_ticks(secs: f64, what: &str) -> anyhow::Result<u64> {
    const TICKS_PER_SECOND: f64 = 8e8;
    if !(secs.is_finite() && secs > 0.0) {
        return Err(Error::InvalidParameter(format!("{what} must be positive and finite")).into());
    }
    let ticks_f = secs * TICKS_PER_SECOND;
    let rounded = ticks_f.round();
    if rounded < 1.0 || (ticks_f - rounded).abs() > 1e-6 * ticks_f {
        return Err(Error::InvalidParameter(format!(
            "{what} of {secs} s is not a whole number of 1.25 ns ticks"
        ))
        .into());
    }
    Ok(rounded as u64)
}
