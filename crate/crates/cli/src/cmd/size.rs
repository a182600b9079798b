use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use taucorr::io::{load_fit_report, load_truth_sidecar, save_size_report, write_size_report};
use taucorr::{relative_error, size_from_decay, SizeReport};

use super::AnalysisFailed;

#[derive(clap::Args)]
pub struct Args {
    /// Fit report holding the measured decay rate
    #[arg(long, value_name = "PATH")]
    fit: PathBuf,

    /// Ground-truth sidecar carrying q, temperature, and viscosity
    #[arg(long, value_name = "PATH")]
    params: PathBuf,

    /// Certified particle diameter to judge against, nanometres
    #[arg(long, value_name = "NM")]
    cert: f64,

    /// Size report file; omitted → the report is printed to stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    if !(args.cert.is_finite() && args.cert > 0.0) {
        return Err(taucorr::Error::InvalidParameter(
            "certified diameter must be positive and finite".into(),
        )
        .into());
    }
    let fit = load_fit_report(&args.fit).with_context(|| format!("reading {}", args.fit.display()))?;
    if !fit.converged {
        return Err(AnalysisFailed(format!(
            "fit report {} is marked non-converged; refusing to size from it",
            args.fit.display()
        ))
        .into());
    }
    let sidecar = load_truth_sidecar(&args.params)
        .with_context(|| format!("reading {}", args.params.display()))?;

    let size = size_from_decay(
        fit.gamma,
        sidecar.truth.q,
        sidecar.params.temperature,
        sidecar.params.viscosity,
    )?;
    let certified = args.cert / 1e9;
    let report = SizeReport {
        diffusion: size.diffusion,
        diameter: size.diameter,
        certified_diameter: certified,
        relative_error_percent: relative_error(size.diameter, certified),
    };

    match &args.out {
        Some(path) => {
            save_size_report(path, &report)
                .with_context(|| format!("writing {}", path.display()))?;
            println!(
                "wrote {}: diameter {:.2} nm (certified {} nm, error {:.2}%)",
                path.display(),
                report.diameter * 1e9,
                args.cert,
                report.relative_error_percent
            );
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_size_report(&mut lock, &report)?;
            lock.flush()?;
        }
    }
    Ok(())
}
