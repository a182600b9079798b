use std::path::PathBuf;

use anyhow::Context;
use taucorr::photon::Tick;
use taucorr::{
    load_timestamps, save_correlogram, Correlator, CorrelatorConfig, PhotonEventStream,
};

use super::{path_with_suffix, secs_to_ticks};

#[derive(clap::Args)]
pub struct Args {
    /// Timestamp capture to correlate; text or binary, detected by content
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,

    /// Correlogram file to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,

    /// Observation window in seconds, overriding the recorded duration:
    /// shorter trims the capture, longer pads it with empty samples
    #[arg(long, value_name = "SECONDS")]
    duration: Option<f64>,

    /// Checkpoint the running correlogram to <out>.partial every this many
    /// seconds of data, demonstrating that results are available mid-stream
    #[arg(long, value_name = "SECONDS")]
    snapshot_interval: Option<f64>,

    /// Number of cascaded blocks
    #[arg(long, default_value_t = 35)]
    blocks: usize,

    /// Channels in every block after the first
    #[arg(long, default_value_t = 8)]
    channels_per_block: usize,

    /// Channels in the first block
    #[arg(long, default_value_t = 16)]
    first_block_channels: usize,

    /// Base sample period in seconds
    #[arg(long, default_value_t = 1e-8)]
    base_period: f64,

    /// Sample-period multiplier from block to block
    #[arg(long, default_value_t = 2)]
    dilation: u64,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let stream = load_timestamps(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let stream = match args.duration {
        None => stream,
        Some(secs) => {
            let ticks = secs_to_ticks(secs, "duration")?;
            let events: Vec<Tick> =
                stream.events().iter().copied().filter(|e| e.get() < ticks).collect();
            PhotonEventStream::new(events, Tick::new(ticks))?
        }
    };
    let config = CorrelatorConfig {
        num_blocks: args.blocks,
        channels_per_block: args.channels_per_block,
        first_block_channels: args.first_block_channels,
        base_period_secs: args.base_period,
        dilation: args.dilation,
    };
    let period_ticks = secs_to_ticks(args.base_period, "base period")?;

    let mut engine = Correlator::new(config)?;
    engine.ready()?;
    engine.start()?;

    let partial = path_with_suffix(&args.out, ".partial");
    let mut wrote_partial = false;
    match args.snapshot_interval {
        None => engine.process_events(&stream, period_ticks)?,
        Some(interval) => {
            // feed the capture in whole-sample chunks, checkpointing the
            // live correlogram at every boundary
            let chunk =
                (secs_to_ticks(interval, "snapshot interval")? / period_ticks).max(1) * period_ticks;
            let duration = stream.duration().get();
            let events = stream.events();
            let mut idx = 0;
            let mut start = 0u64;
            while start < duration {
                let end = (start + chunk).min(duration);
                let mut stop = idx;
                while stop < events.len() && events[stop].get() < end {
                    stop += 1;
                }
                let part = PhotonEventStream::new(events[idx..stop].to_vec(), Tick::new(end))?;
                engine.process_events(&part, period_ticks)?;
                idx = stop;
                start = end;
                if start < duration {
                    save_correlogram(&partial, &engine.snapshot()?)
                        .with_context(|| format!("writing {}", partial.display()))?;
                    wrote_partial = true;
                    eprintln!(
                        "checkpoint at {} s -> {}",
                        end as f64 * 1.25e-9,
                        partial.display()
                    );
                }
            }
        }
    }

    engine.stop()?;
    let snapshot = engine.snapshot()?;
    save_correlogram(&args.out, &snapshot)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if wrote_partial {
        let _ = std::fs::remove_file(&partial);
    }

    let defined = snapshot.channels.iter().filter(|c| c.g.is_some()).count();
    println!(
        "wrote {} ({} channels, {} defined, {} samples)",
        args.out.display(),
        snapshot.channels.len(),
        defined,
        snapshot.total_samples
    );
    Ok(())
}
