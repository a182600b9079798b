use std::path::PathBuf;

use anyhow::Context;
use clap::ValueEnum;
use taucorr::fit::DEFAULT_TAU_MIN;
use taucorr::io::{save_curve, save_fit_report};
use taucorr::{fit_correlogram, load_correlogram, FitWindow, WeightPolicy};

use super::AnalysisFailed;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Weights {
    /// Every channel counts the same
    Uniform,
    /// Channels pull in proportion to their accumulation count
    UpdateCount,
}

#[derive(clap::Args)]
pub struct Args {
    /// Correlogram to fit
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,

    /// Fit report to write (written even when the fit fails to converge)
    #[arg(long, value_name = "PATH")]
    out: PathBuf,

    /// Shortest lag admitted to the fit, seconds
    #[arg(long, value_name = "SECONDS")]
    tau_min: Option<f64>,

    /// Longest lag admitted to the fit, seconds
    #[arg(long, value_name = "SECONDS")]
    tau_max: Option<f64>,

    /// Residual weighting
    #[arg(long, value_enum, default_value_t = Weights::UpdateCount)]
    weights: Weights,

    /// Also write the fitted model evaluated at every channel lag
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let correlogram = load_correlogram(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;

    // no explicit bounds → the fitter picks its own window (two-pass:
    // a coarse fit sets the span, the final fit uses it)
    let window = match (args.tau_min, args.tau_max) {
        (None, None) => None,
        (lo, hi) => {
            let lo = lo.unwrap_or(DEFAULT_TAU_MIN);
            let hi = hi.unwrap_or_else(|| {
                correlogram.channels.last().map(|c| c.lag_secs).unwrap_or(f64::MAX)
            });
            Some(FitWindow::new(lo, hi)?)
        }
    };
    let policy = match args.weights {
        Weights::Uniform => WeightPolicy::Uniform,
        Weights::UpdateCount => WeightPolicy::UpdateCount,
    };

    let fit = fit_correlogram(&correlogram, policy, window)?;
    save_fit_report(&args.out, &fit).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(curve_path) = &args.curve {
        let points: Vec<(f64, f64)> = correlogram
            .channels
            .iter()
            .map(|c| (c.lag_secs, fit.evaluate(c.lag_secs)))
            .collect();
        save_curve(curve_path, &points)
            .with_context(|| format!("writing {}", curve_path.display()))?;
    }

    println!(
        "wrote {}: gamma={} 1/s beta={} baseline={} ({} points, {} iterations)",
        args.out.display(),
        fit.gamma,
        fit.beta,
        fit.baseline,
        fit.points,
        fit.iterations
    );
    if !fit.converged {
        return Err(AnalysisFailed(format!(
            "fit stalled after {} iterations; best-effort parameters were written to {}",
            fit.iterations,
            args.out.display()
        ))
        .into());
    }
    Ok(())
}
