use std::path::PathBuf;

use anyhow::Context;
use clap::ValueEnum;
use taucorr::io::save_truth_sidecar;
use taucorr::photon::TICKS_PER_BASE_SAMPLE;
use taucorr::{
    generate_intensity, generate_photons, ground_truth, save_timestamps, ExperimentParams,
    TimestampFormat, TruthSidecar,
};

use super::{path_with_suffix, secs_to_ticks};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    /// One absolute tick count per line, with a readable header
    Text,
    /// Packed little-endian ticks behind a magic number
    Binary,
}

#[derive(clap::Args)]
pub struct Args {
    /// Particle diameter in nanometres
    #[arg(long, default_value_t = 530.0)]
    diameter: f64,

    /// Scattering angle in degrees
    #[arg(long, default_value_t = 30.0)]
    angle: f64,

    /// Acquisition length in seconds
    #[arg(long, default_value_t = 60.0)]
    duration: f64,

    /// Mean photon count rate in counts per second
    #[arg(long, default_value_t = 5e6)]
    rate: f64,

    /// Random seed; the photon stage derives its own stream from seed+1
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Timestamp file to write; ground truth goes to <out>.truth
    #[arg(long, value_name = "PATH")]
    out: PathBuf,

    /// Sample temperature in kelvin
    #[arg(long, default_value_t = 298.15)]
    temperature: f64,

    /// Solvent viscosity in millipascal-seconds
    #[arg(long, default_value_t = 0.89)]
    viscosity: f64,

    /// Laser wavelength in vacuum, nanometres
    #[arg(long, default_value_t = 532.0)]
    wavelength: f64,

    /// Refractive index of the medium
    #[arg(long, default_value_t = 1.332)]
    n_medium: f64,

    /// Coherence factor β in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// Intensity update period in seconds; default min(10 µs, 0.01/Γ),
    /// snapped down to whole 10 ns base samples
    #[arg(long, value_name = "SECONDS")]
    intensity_step: Option<f64>,

    /// On-disk timestamp encoding
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    // dividing by the exact power of ten is correctly rounded, so the
    // default arguments reproduce the library defaults bit for bit
    let params = ExperimentParams {
        temperature: args.temperature,
        viscosity: args.viscosity / 1e3,
        wavelength: args.wavelength / 1e9,
        n_medium: args.n_medium,
        theta: args.angle.to_radians(),
        diameter: args.diameter / 1e9,
        mean_count_rate: args.rate,
        beta: args.beta,
    };
    let truth = ground_truth(&params)?;

    let step_secs = match args.intensity_step {
        // validated by the generator, which rejects periods that are not a
        // whole number of base samples
        Some(step) => step,
        None => {
            // keep Γδ ≤ 0.01 so the piecewise-constant trace resolves the
            // decay, never update faster than one base sample or slower
            // than 10 µs, and snap down to a whole number of base samples
            let raw = (1e-5_f64).min(0.01 / truth.gamma);
            let ticks = ((raw * 8e8) as u64 / TICKS_PER_BASE_SAMPLE).max(1) * TICKS_PER_BASE_SAMPLE;
            ticks as f64 * 1.25e-9
        }
    };

    let duration_ticks = secs_to_ticks(args.duration, "duration")?;
    let num_steps = (args.duration / step_secs).round() as usize;
    if num_steps == 0 {
        return Err(taucorr::Error::InvalidParameter(
            "duration is shorter than one intensity step".into(),
        )
        .into());
    }

    let intensity =
        generate_intensity(&truth, params.beta, 1.0, step_secs, num_steps, args.seed)?;
    let (stream, diag) = generate_photons(&intensity, params.mean_count_rate, args.seed.wrapping_add(1))?;
    if diag.gap_warning() {
        eprintln!(
            "warning: {} of {} photons were delayed to respect the 8-tick pulse width; \
             the shortest-lag channel will read low",
            diag.gap_adjusted, diag.photons
        );
    }

    // the intensity grid rounds the duration to whole steps; carry the
    // requested duration on the stream so downstream sample counts match
    let stream = taucorr::PhotonEventStream::new(
        stream.events().to_vec(),
        taucorr::photon::Tick::new(duration_ticks.max(intensity.duration_ticks())),
    )?;

    let format = match args.format {
        Format::Text => TimestampFormat::Text,
        Format::Binary => TimestampFormat::Binary,
    };
    save_timestamps(&args.out, &stream, format)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let truth_path = path_with_suffix(&args.out, ".truth");
    let sidecar = TruthSidecar { params, truth, seed: args.seed };
    save_truth_sidecar(&truth_path, &sidecar)
        .with_context(|| format!("writing {}", truth_path.display()))?;

    println!(
        "wrote {} ({} photons over {} s) and {}",
        args.out.display(),
        stream.len(),
        args.duration,
        truth_path.display()
    );
    println!("q={} 1/m  D={:e} m^2/s  gamma={} 1/s", truth.q, truth.diffusion, truth.gamma);
    println!(
        "intensity grid: {} steps of {} s; seed {}",
        intensity.len(),
        intensity.period_secs(),
        args.seed
    );
    Ok(())
}
