//! File formats for every artifact in the pipeline.
//!
//! All text formats share the same conventions: `#` starts a comment, blank
//! lines are ignored, and floating-point values are written with Rust's
//! shortest round-trip formatting so that write → read reproduces the exact
//! bits. Nothing in any format depends on wall-clock time, so rewriting the
//! same data yields byte-identical files.
//!
//! * **Timestamps, text** — first line `# ticks=1.25ns duration=<N>`, then
//!   one absolute tick per line, strictly increasing.
//! * **Timestamps, binary** — magic `PHOT`, u32 LE version, u64 LE duration,
//!   then u64 LE ticks. [`load_timestamps`] sniffs the magic to pick the
//!   format.
//! * **Correlogram** — commented header carrying the correlator
//!   configuration and total sample count, then one row per channel:
//!   `lag_seconds g raw_sum direct_monitor delayed_monitor update_count`,
//!   with `nan` for channels whose estimate is undefined.
//! * **Ground-truth sidecar, fit report, size report** — `key=value` lines.
//! * **Curve** — two columns, lag and fitted model value.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::dls::{ExperimentParams, GroundTruth};
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::multitau::{lag_schedule, ChannelRecord, Correlogram, CorrelatorConfig};
use crate::photon::{PhotonEventStream, Tick};

/// Leading bytes of the binary timestamp format.
pub const TIMESTAMP_MAGIC: [u8; 4] = *b"PHOT";
/// Current binary timestamp format version.
pub const TIMESTAMP_VERSION: u32 = 1;

/// On-disk representation of a photon timestamp stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimestampFormat {
    #[default]
    Text,
    Binary,
}

// ---------------------------------------------------------------------------
// key=value scaffolding shared by the sidecar and report formats
// ---------------------------------------------------------------------------

type KvMap = BTreeMap<String, (String, usize)>;

fn parse_kv<R: BufRead>(reader: R) -> Result<KvMap> {
    let mut map = KvMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(Error::Parse { line: lineno, message: "expected key=value".into() });
        };
        map.insert(k.trim().to_string(), (v.trim().to_string(), lineno));
    }
    Ok(map)
}

fn kv_take<T: FromStr>(map: &KvMap, key: &str) -> Result<T> {
    let (raw, line) =
        map.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing key `{key}`"),
        })?;
    raw.parse().map_err(|_| Error::Parse {
        line: *line,
        message: format!("invalid value `{raw}` for `{key}`"),
    })
}

// ---------------------------------------------------------------------------
// photon timestamps
// ---------------------------------------------------------------------------

pub fn write_timestamps_text<W: Write>(w: &mut W, stream: &PhotonEventStream) -> Result<()> {
    writeln!(w, "# ticks=1.25ns duration={}", stream.duration().get())?;
    for event in stream.events() {
        writeln!(w, "{}", event.get())?;
    }
    Ok(())
}

pub fn read_timestamps_text<R: BufRead>(reader: R) -> Result<PhotonEventStream> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Parse { line: 1, message: "empty timestamp file".into() });
        }
    };
    let bad_header = |message: &str| Error::Parse { line: 1, message: message.into() };
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| bad_header("first line must be `# ticks=1.25ns duration=<N>`"))?;
    let mut duration: Option<u64> = None;
    let mut tick_unit_seen = false;
    for token in rest.split_whitespace() {
        match token.split_once('=') {
            Some(("ticks", unit)) => {
                if unit != "1.25ns" {
                    return Err(bad_header("unsupported tick unit"));
                }
                tick_unit_seen = true;
            }
            Some(("duration", value)) => {
                duration =
                    Some(value.parse().map_err(|_| bad_header("invalid duration"))?);
            }
            _ => {} // tolerate extra annotations
        }
    }
    if !tick_unit_seen {
        return Err(bad_header("missing tick unit declaration"));
    }
    let duration = duration.ok_or_else(|| bad_header("missing duration"))?;

    let mut events = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let tick: u64 = t.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid tick value `{t}`"),
        })?;
        events.push(Tick::new(tick));
    }
    PhotonEventStream::new(events, Tick::new(duration))
}

pub fn write_timestamps_binary<W: Write>(w: &mut W, stream: &PhotonEventStream) -> Result<()> {
    w.write_all(&TIMESTAMP_MAGIC)?;
    w.write_all(&TIMESTAMP_VERSION.to_le_bytes())?;
    w.write_all(&stream.duration().get().to_le_bytes())?;
    for event in stream.events() {
        w.write_all(&event.get().to_le_bytes())?;
    }
    Ok(())
}

/// Read one little-endian u64, distinguishing clean EOF from truncation.
fn read_u64_or_eof<R: Read>(r: &mut R, record: usize) -> Result<Option<u64>> {
    let mut buf = [0u8; 8];
    let mut filled = 0;
    while filled < 8 {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(Error::Parse {
                line: record,
                message: "truncated binary timestamp record".into(),
            });
        }
        filled += n;
    }
    Ok(Some(u64::from_le_bytes(buf)))
}

pub fn read_timestamps_binary<R: Read>(mut reader: R) -> Result<PhotonEventStream> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).map_err(|_| Error::Parse {
        line: 0,
        message: "not a binary timestamp file (missing magic)".into(),
    })?;
    if magic != TIMESTAMP_MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "not a binary timestamp file (bad magic)".into(),
        });
    }
    let mut word = [0u8; 4];
    reader.read_exact(&mut word).map_err(|_| Error::Parse {
        line: 0,
        message: "truncated binary timestamp header".into(),
    })?;
    let version = u32::from_le_bytes(word);
    if version != TIMESTAMP_VERSION {
        return Err(Error::Parse {
            line: 0,
            message: format!("unsupported binary timestamp version {version}"),
        });
    }
    let duration = read_u64_or_eof(&mut reader, 0)?.ok_or_else(|| Error::Parse {
        line: 0,
        message: "truncated binary timestamp header".into(),
    })?;
    let mut events = Vec::new();
    let mut record = 1;
    while let Some(tick) = read_u64_or_eof(&mut reader, record)? {
        events.push(Tick::new(tick));
        record += 1;
    }
    PhotonEventStream::new(events, Tick::new(duration))
}

pub fn save_timestamps(
    path: &Path,
    stream: &PhotonEventStream,
    format: TimestampFormat,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        TimestampFormat::Text => write_timestamps_text(&mut w, stream)?,
        TimestampFormat::Binary => write_timestamps_binary(&mut w, stream)?,
    }
    w.flush()?;
    Ok(())
}

/// Open a timestamp file of either format, deciding by the leading bytes.
pub fn load_timestamps(path: &Path) -> Result<PhotonEventStream> {
    let mut probe = [0u8; 4];
    let mut f = File::open(path)?;
    let n = f.read(&mut probe)?;
    drop(f);
    let binary = n == 4 && probe == TIMESTAMP_MAGIC;
    let f = File::open(path)?;
    if binary {
        read_timestamps_binary(BufReader::new(f))
    } else {
        read_timestamps_text(BufReader::new(f))
    }
}

// ---------------------------------------------------------------------------
// correlogram
// ---------------------------------------------------------------------------

fn g_to_field(g: Option<f64>) -> String {
    match g {
        Some(v) => format!("{v}"),
        None => "nan".into(),
    }
}

pub fn write_correlogram<W: Write>(w: &mut W, correlogram: &Correlogram) -> Result<()> {
    let c = &correlogram.config;
    writeln!(w, "# multitau correlogram")?;
    writeln!(
        w,
        "# blocks={} channels_per_block={} first_block_channels={} base_period={} dilation={}",
        c.num_blocks, c.channels_per_block, c.first_block_channels, c.base_period_secs, c.dilation
    )?;
    writeln!(w, "# total_samples={}", correlogram.total_samples)?;
    writeln!(w, "# columns: lag_seconds g raw_sum direct_monitor delayed_monitor update_count")?;
    for ch in &correlogram.channels {
        writeln!(
            w,
            "{} {} {} {} {} {}",
            ch.lag_secs,
            g_to_field(ch.g),
            ch.raw_sum,
            ch.direct_monitor,
            ch.delayed_monitor,
            ch.update_count
        )?;
    }
    Ok(())
}

pub fn read_correlogram<R: BufRead>(reader: R) -> Result<Correlogram> {
    let mut kv = KvMap::new();
    let mut rows: Vec<(usize, String)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            for token in comment.split_whitespace() {
                if let Some((k, v)) = token.split_once('=') {
                    kv.insert(k.to_string(), (v.to_string(), lineno));
                }
            }
        } else {
            rows.push((lineno, t.to_string()));
        }
    }

    let config = CorrelatorConfig {
        num_blocks: kv_take(&kv, "blocks")?,
        channels_per_block: kv_take(&kv, "channels_per_block")?,
        first_block_channels: kv_take(&kv, "first_block_channels")?,
        base_period_secs: kv_take(&kv, "base_period")?,
        dilation: kv_take(&kv, "dilation")?,
    };
    let total_samples: u64 = kv_take(&kv, "total_samples")?;
    let schedule = lag_schedule(&config)?;
    if rows.len() != schedule.len() {
        return Err(Error::Parse {
            line: rows.first().map(|r| r.0).unwrap_or(0),
            message: format!(
                "configuration defines {} channels but file has {} rows",
                schedule.len(),
                rows.len()
            ),
        });
    }

    let mut channels = Vec::with_capacity(rows.len());
    for (entry, (lineno, row)) in schedule.iter().zip(&rows) {
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: *lineno,
                message: format!("expected 6 columns, found {}", fields.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            line: *lineno,
            message: format!("invalid {what} `{}`", row.clone()),
        };
        let lag_secs: f64 = fields[0].parse().map_err(|_| bad("lag"))?;
        if (lag_secs - entry.lag_secs).abs() > 1e-9 * entry.lag_secs {
            return Err(Error::Parse {
                line: *lineno,
                message: format!(
                    "lag {lag_secs} does not match the configured schedule ({})",
                    entry.lag_secs
                ),
            });
        }
        let g = if fields[1].eq_ignore_ascii_case("nan") {
            None
        } else {
            Some(fields[1].parse::<f64>().map_err(|_| bad("g value"))?)
        };
        channels.push(ChannelRecord {
            block: entry.block,
            lag_samples: entry.lag_samples,
            lag_secs: entry.lag_secs,
            raw_sum: fields[2].parse().map_err(|_| bad("raw sum"))?,
            direct_monitor: fields[3].parse().map_err(|_| bad("direct monitor"))?,
            delayed_monitor: fields[4].parse().map_err(|_| bad("delayed monitor"))?,
            update_count: fields[5].parse().map_err(|_| bad("update count"))?,
            g,
        });
    }
    Ok(Correlogram { config, total_samples, channels })
}

pub fn save_correlogram(path: &Path, correlogram: &Correlogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_correlogram(&mut w, correlogram)?;
    w.flush()?;
    Ok(())
}

pub fn load_correlogram(path: &Path) -> Result<Correlogram> {
    read_correlogram(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// ground-truth sidecar
// ---------------------------------------------------------------------------

/// Everything needed to audit a synthetic run: the inputs that produced it
/// and the derived quantities the analysis chain should recover.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSidecar {
    pub params: ExperimentParams,
    pub truth: GroundTruth,
    pub seed: u64,
}

pub fn write_truth_sidecar<W: Write>(w: &mut W, sidecar: &TruthSidecar) -> Result<()> {
    let p = &sidecar.params;
    let t = &sidecar.truth;
    writeln!(w, "# simulation ground truth")?;
    writeln!(w, "# rng ChaCha12: intensity field seeded with `seed`, photon thinning with seed+1")?;
    writeln!(w, "temperature={}", p.temperature)?;
    writeln!(w, "viscosity={}", p.viscosity)?;
    writeln!(w, "wavelength={}", p.wavelength)?;
    writeln!(w, "n_medium={}", p.n_medium)?;
    writeln!(w, "theta_rad={}", p.theta)?;
    writeln!(w, "diameter={}", p.diameter)?;
    writeln!(w, "mean_count_rate={}", p.mean_count_rate)?;
    writeln!(w, "beta={}", p.beta)?;
    writeln!(w, "seed={}", sidecar.seed)?;
    writeln!(w, "q={}", t.q)?;
    writeln!(w, "diffusion={}", t.diffusion)?;
    writeln!(w, "gamma={}", t.gamma)?;
    Ok(())
}

pub fn read_truth_sidecar<R: BufRead>(reader: R) -> Result<TruthSidecar> {
    let kv = parse_kv(reader)?;
    let params = ExperimentParams {
        temperature: kv_take(&kv, "temperature")?,
        viscosity: kv_take(&kv, "viscosity")?,
        wavelength: kv_take(&kv, "wavelength")?,
        n_medium: kv_take(&kv, "n_medium")?,
        theta: kv_take(&kv, "theta_rad")?,
        diameter: kv_take(&kv, "diameter")?,
        mean_count_rate: kv_take(&kv, "mean_count_rate")?,
        beta: kv_take(&kv, "beta")?,
    };
    params.validate()?;
    let truth = GroundTruth {
        q: kv_take(&kv, "q")?,
        diffusion: kv_take(&kv, "diffusion")?,
        gamma: kv_take(&kv, "gamma")?,
    };
    Ok(TruthSidecar { params, truth, seed: kv_take(&kv, "seed")? })
}

pub fn save_truth_sidecar(path: &Path, sidecar: &TruthSidecar) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_truth_sidecar(&mut w, sidecar)?;
    w.flush()?;
    Ok(())
}

pub fn load_truth_sidecar(path: &Path) -> Result<TruthSidecar> {
    read_truth_sidecar(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// fit report and model curve
// ---------------------------------------------------------------------------

pub fn write_fit_report<W: Write>(w: &mut W, fit: &FitResult) -> Result<()> {
    writeln!(w, "# exponential decay fit: g = baseline + beta*exp(-gamma*tau)")?;
    writeln!(w, "baseline={}", fit.baseline)?;
    writeln!(w, "beta={}", fit.beta)?;
    writeln!(w, "gamma={}", fit.gamma)?;
    writeln!(w, "residual_norm={}", fit.residual_norm)?;
    writeln!(w, "iterations={}", fit.iterations)?;
    writeln!(w, "converged={}", fit.converged)?;
    writeln!(w, "points={}", fit.points)?;
    Ok(())
}

pub fn read_fit_report<R: BufRead>(reader: R) -> Result<FitResult> {
    let kv = parse_kv(reader)?;
    Ok(FitResult {
        baseline: kv_take(&kv, "baseline")?,
        beta: kv_take(&kv, "beta")?,
        gamma: kv_take(&kv, "gamma")?,
        residual_norm: kv_take(&kv, "residual_norm")?,
        iterations: kv_take(&kv, "iterations")?,
        converged: kv_take(&kv, "converged")?,
        points: kv_take(&kv, "points")?,
    })
}

pub fn save_fit_report(path: &Path, fit: &FitResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_fit_report(&mut w, fit)?;
    w.flush()?;
    Ok(())
}

pub fn load_fit_report(path: &Path) -> Result<FitResult> {
    read_fit_report(BufReader::new(File::open(path)?))
}

/// Two-column model curve: lag in seconds, fitted value.
pub fn write_curve<W: Write>(w: &mut W, points: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "# columns: lag_seconds model")?;
    for (tau, value) in points {
        writeln!(w, "{tau} {value}")?;
    }
    Ok(())
}

pub fn save_curve(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_curve(&mut w, points)?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// size report
// ---------------------------------------------------------------------------

/// Final output of the analysis chain, compared against a certified size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeReport {
    /// Recovered diffusion coefficient, m²/s.
    pub diffusion: f64,
    /// Recovered hydrodynamic diameter, m.
    pub diameter: f64,
    /// Certified diameter the run is judged against, m.
    pub certified_diameter: f64,
    /// 100·|recovered − certified|/certified.
    pub relative_error_percent: f64,
}

pub fn write_size_report<W: Write>(w: &mut W, report: &SizeReport) -> Result<()> {
    writeln!(w, "# hydrodynamic sizing")?;
    writeln!(w, "diffusion={}", report.diffusion)?;
    writeln!(w, "diameter={}", report.diameter)?;
    writeln!(w, "certified_diameter={}", report.certified_diameter)?;
    writeln!(w, "relative_error_percent={}", report.relative_error_percent)?;
    Ok(())
}

pub fn read_size_report<R: BufRead>(reader: R) -> Result<SizeReport> {
    let kv = parse_kv(reader)?;
    Ok(SizeReport {
        diffusion: kv_take(&kv, "diffusion")?,
        diameter: kv_take(&kv, "diameter")?,
        certified_diameter: kv_take(&kv, "certified_diameter")?,
        relative_error_percent: kv_take(&kv, "relative_error_percent")?,
    })
}

pub fn save_size_report(path: &Path, report: &SizeReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_size_report(&mut w, report)?;
    w.flush()?;
    Ok(())
}

pub fn load_size_report(path: &Path) -> Result<SizeReport> {
    read_size_report(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multitau::Correlator;

    fn sample_stream() -> PhotonEventStream {
        let ticks = [0u64, 8, 80, 200, 4096, 40_000].map(Tick::new).to_vec();
        PhotonEventStream::new(ticks, Tick::new(80_000)).unwrap()
    }

    #[test]
    fn text_timestamps_round_trip() {
        let stream = sample_stream();
        let mut buf = Vec::new();
        write_timestamps_text(&mut buf, &stream).unwrap();
        let back = read_timestamps_text(&buf[..]).unwrap();
        assert_eq!(back, stream);
        // writing again produces identical bytes
        let mut buf2 = Vec::new();
        write_timestamps_text(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn text_timestamps_allow_extra_comments() {
        let text = "# ticks=1.25ns duration=1000 source=synthetic\n# run 7, det A\n8\n\n16\n# mid-stream note\n900\n";
        let stream = read_timestamps_text(text.as_bytes()).unwrap();
        assert_eq!(stream.len(), 3);
        assert_eq!(stream.duration().get(), 1000);
    }

    #[test]
    fn text_timestamp_errors_carry_line_numbers() {
        let missing = read_timestamps_text("".as_bytes()).unwrap_err();
        assert!(matches!(missing, Error::Parse { line: 1, .. }));

        let bad_header = read_timestamps_text("# ticks=1ns duration=5\n".as_bytes()).unwrap_err();
        assert!(matches!(bad_header, Error::Parse { line: 1, .. }));

        let no_header = read_timestamps_text("12\n14\n".as_bytes()).unwrap_err();
        assert!(matches!(no_header, Error::Parse { line: 1, .. }));

        let bad_value =
            read_timestamps_text("# ticks=1.25ns duration=100\n8\nbogus\n".as_bytes())
                .unwrap_err();
        assert!(matches!(bad_value, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn binary_timestamps_round_trip() {
        let stream = sample_stream();
        let mut buf = Vec::new();
        write_timestamps_binary(&mut buf, &stream).unwrap();
        assert_eq!(&buf[0..4], b"PHOT");
        assert_eq!(buf.len(), 16 + 8 * stream.len());
        let back = read_timestamps_binary(&buf[..]).unwrap();
        assert_eq!(back, stream);
    }

    #[test]
    fn binary_rejects_bad_magic_version_and_truncation() {
        let stream = sample_stream();
        let mut buf = Vec::new();
        write_timestamps_binary(&mut buf, &stream).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_timestamps_binary(&bad_magic[..]),
            Err(Error::Parse { line: 0, .. })
        ));

        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(read_timestamps_binary(&bad_version[..]).is_err());

        let truncated = &buf[..buf.len() - 3];
        assert!(read_timestamps_binary(truncated).is_err());
    }

    #[test]
    fn load_detects_both_formats() {
        let dir = std::env::temp_dir().join(format!("taucorr-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let stream = sample_stream();

        let text_path = dir.join("events.txt");
        save_timestamps(&text_path, &stream, TimestampFormat::Text).unwrap();
        assert_eq!(load_timestamps(&text_path).unwrap(), stream);

        let bin_path = dir.join("events.bin");
        save_timestamps(&bin_path, &stream, TimestampFormat::Binary).unwrap();
        assert_eq!(load_timestamps(&bin_path).unwrap(), stream);

        std::fs::remove_dir_all(&dir).unwrap();
    }

    fn small_correlogram() -> Correlogram {
        let config = CorrelatorConfig {
            num_blocks: 3,
            channels_per_block: 2,
            first_block_channels: 4,
            base_period_secs: 1e-8,
            dilation: 2,
        };
        let mut corr = Correlator::new(config).unwrap();
        corr.ready().unwrap();
        corr.start().unwrap();
        for i in 0..64u64 {
            corr.push_sample((i * 7 + 3) % 5).unwrap();
        }
        corr.stop().unwrap();
        corr.snapshot().unwrap()
    }

    #[test]
    fn correlogram_round_trips_exactly() {
        let correlogram = small_correlogram();
        let mut buf = Vec::new();
        write_correlogram(&mut buf, &correlogram).unwrap();
        let back = read_correlogram(&buf[..]).unwrap();
        assert_eq!(back, correlogram);
    }

    #[test]
    fn undefined_channels_round_trip_as_nan() {
        let config = CorrelatorConfig {
            num_blocks: 2,
            channels_per_block: 2,
            first_block_channels: 4,
            base_period_secs: 1e-8,
            dilation: 2,
        };
        let mut corr = Correlator::new(config).unwrap();
        corr.ready().unwrap();
        corr.start().unwrap();
        corr.push_sample(1).unwrap(); // far too short to define any channel
        let snap = corr.snapshot().unwrap();
        assert!(snap.channels.iter().all(|c| c.g.is_none()));
        let mut buf = Vec::new();
        write_correlogram(&mut buf, &snap).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().filter(|l| !l.starts_with('#')).all(|l| l.contains(" nan ")));
        assert_eq!(read_correlogram(&buf[..]).unwrap(), snap);
    }

    #[test]
    fn correlogram_row_count_must_match_config() {
        let correlogram = small_correlogram();
        let mut buf = Vec::new();
        write_correlogram(&mut buf, &correlogram).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("1.0 nan 0 0 0 0\n");
        let err = read_correlogram(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn correlogram_lags_must_match_config() {
        let correlogram = small_correlogram();
        let mut buf = Vec::new();
        write_correlogram(&mut buf, &correlogram).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // corrupt the first data row's lag
        let mut out = String::new();
        let mut corrupted = false;
        for line in text.lines() {
            if !line.starts_with('#') && !corrupted {
                let mut fields: Vec<&str> = line.split_whitespace().collect();
                fields[0] = "0.5";
                out.push_str(&fields.join(" "));
                corrupted = true;
            } else {
                out.push_str(line);
            }
            out.push('\n');
        }
        let err = read_correlogram(out.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn truth_sidecar_round_trips_exactly() {
        let params = ExperimentParams::default();
        let truth = crate::dls::ground_truth(&params).unwrap();
        let sidecar = TruthSidecar { params, truth, seed: 424242 };
        let mut buf = Vec::new();
        write_truth_sidecar(&mut buf, &sidecar).unwrap();
        let back = read_truth_sidecar(&buf[..]).unwrap();
        assert_eq!(back, sidecar);
    }

    #[test]
    fn fit_report_round_trips_exactly() {
        let fit = FitResult {
            baseline: 1.0000173,
            beta: 0.79991,
            gamma: 122.73,
            residual_norm: 3.4e-4,
            iterations: 17,
            converged: true,
            points: 141,
        };
        let mut buf = Vec::new();
        write_fit_report(&mut buf, &fit).unwrap();
        assert_eq!(read_fit_report(&buf[..]).unwrap(), fit);
    }

    #[test]
    fn size_report_round_trips_exactly() {
        let report = SizeReport {
            diffusion: 9.26e-13,
            diameter: 5.31e-7,
            certified_diameter: 5.3e-7,
            relative_error_percent: 0.19,
        };
        let mut buf = Vec::new();
        write_size_report(&mut buf, &report).unwrap();
        assert_eq!(read_size_report(&buf[..]).unwrap(), report);
    }

    #[test]
    fn missing_keys_are_reported() {
        let err = read_fit_report("baseline=1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = read_size_report("diffusion=zoo\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn curve_format() {
        let mut buf = Vec::new();
        write_curve(&mut buf, &[(1e-6, 1.8), (1e-5, 1.5)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with('#'));
        assert_eq!(lines.next().unwrap(), "0.000001 1.8");
        assert_eq!(lines.next().unwrap(), "0.00001 1.5");
        assert!(lines.next().is_none());
    }
}
