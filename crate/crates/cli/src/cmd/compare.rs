use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use taucorr::photon::TICKS_PER_BASE_SAMPLE;
use taucorr::{averaging_bias, bin_to_samples, load_timestamps, BiasRecord, CorrelatorConfig};

/// The direct route is O(samples) per channel, so cap the series length
/// rather than quietly taking minutes on a long capture.
const MAX_SAMPLES: u64 = 1 << 24;

#[derive(clap::Args)]
pub struct Args {
    /// Timestamp capture to analyse (at most 2^24 base samples)
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,

    /// Highest cascade block to include; lags grow exponentially with it
    #[arg(long, default_value_t = 6)]
    max_block: usize,

    /// Write the table here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn write_table<W: Write>(w: &mut W, records: &[BiasRecord], samples: u64) -> anyhow::Result<()> {
    writeln!(w, "# streaming engine vs direct correlator on {samples} base samples")?;
    writeln!(w, "# columns: block lag_seconds g_multitau g_direct bias")?;
    for r in records {
        writeln!(w, "{} {} {} {} {}", r.block, r.lag_secs, r.g_multitau, r.g_direct, r.bias)?;
    }
    match records.iter().max_by(|a, b| a.bias.abs().total_cmp(&b.bias.abs())) {
        Some(worst) => writeln!(w, "# max |bias| {} at lag {} s", worst.bias.abs(), worst.lag_secs)?,
        None => writeln!(w, "# no channel had defined g on both routes")?,
    }
    Ok(())
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let stream = load_timestamps(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let samples = stream.duration().get().div_ceil(TICKS_PER_BASE_SAMPLE);
    if samples > MAX_SAMPLES {
        return Err(taucorr::Error::InvalidParameter(format!(
            "capture spans {samples} base samples; the direct comparison accepts at most {MAX_SAMPLES}"
        ))
        .into());
    }

    let series = bin_to_samples(&stream, TICKS_PER_BASE_SAMPLE)?;
    let config = CorrelatorConfig {
        num_blocks: args.max_block.saturating_add(1),
        ..CorrelatorConfig::default()
    };
    let records = averaging_bias(&series, &config)?;

    match &args.out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(
                std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            write_table(&mut file, &records, samples)?;
            file.flush()?;
            println!("wrote {} ({} channels compared)", path.display(), records.len());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_table(&mut lock, &records, samples)?;
            lock.flush()?;
        }
    }
    Ok(())
}
