//! Single-exponential decay fitting and particle sizing.
//!
//! The model is `g(τ) = B + β·exp(−Γτ)`, fit by Levenberg-Marquardt with an
//! analytic Jacobian. Starting values come from the data itself: the baseline
//! from the last decade of lags, the amplitude from the shortest lag, and the
//! rate from a log-linear regression over the upper part of the decay. The
//! fitted Γ converts to a hydrodynamic diameter through the Stokes-Einstein
//! relation in [`size_from_decay`].

use crate::error::{Error, Result};
use crate::multitau::Correlogram;

/// Shortest lag included when no explicit window is given; lags below this
/// carry detector artifacts (pulse-width holdoff) rather than dynamics.
pub const DEFAULT_TAU_MIN: f64 = 1e-7;

/// Auto windows close at this many decay times past the initial Γ estimate.
pub const DEFAULT_WINDOW_DECAYS: f64 = 10.0;

const MAX_ITERATIONS: usize = 200;
const REL_STEP_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-10;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;
const LAMBDA_MIN: f64 = 1e-12;
const MIN_POINTS: usize = 8;

/// Inclusive lag interval, in seconds, to which the fit is restricted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub tau_min: f64,
    pub tau_max: f64,
}

impl FitWindow {
    pub fn new(tau_min: f64, tau_max: f64) -> Result<Self> {
        if !(tau_min.is_finite() && tau_max.is_finite() && tau_min >= 0.0 && tau_min < tau_max) {
            return Err(Error::InvalidParameter(
                "fit window requires 0 ≤ tau_min < tau_max, both finite".into(),
            ));
        }
        Ok(FitWindow { tau_min, tau_max })
    }

    fn contains(&self, tau: f64) -> bool {
        tau >= self.tau_min && tau <= self.tau_max
    }
}

/// How residuals are weighted in the least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightPolicy {
    /// Every channel counts the same.
    #[default]
    Uniform,
    /// Channels are weighted by their update count, so lags estimated from
    /// more accumulation events pull harder. Weights are normalized to unit
    /// mean, which leaves the minimizer unchanged but keeps the numerics
    /// well scaled.
    UpdateCount,
}

/// Result of a single-exponential fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Baseline B.
    pub baseline: f64,
    /// Amplitude β.
    pub beta: f64,
    /// Decay rate Γ in 1/s.
    pub gamma: f64,
    /// sqrt(Σ wᵢ·rᵢ²) at the returned parameters, with unit-mean weights.
    pub residual_norm: f64,
    /// Levenberg-Marquardt iterations performed.
    pub iterations: usize,
    /// False when the iteration cap was reached or damping saturated before
    /// the step or gradient tolerance was met; the returned parameters are
    /// then the best ones seen.
    pub converged: bool,
    /// Channels that entered the fit.
    pub points: usize,
}

impl FitResult {
    /// The fitted model evaluated at lag `tau`.
    pub fn evaluate(&self, tau: f64) -> f64 {
        model_value(self.baseline, self.beta, self.gamma, tau)
    }
}

/// Evaluate the model `B + β·exp(−Γτ)`.
pub fn model_value(baseline: f64, beta: f64, gamma: f64, tau: f64) -> f64 {
    baseline + beta * (-gamma * tau).exp()
}

/// Model gradient in parameter order (B, β, Γ):
/// ∂g/∂B = 1, ∂g/∂β = e^{−Γτ}, ∂g/∂Γ = −βτe^{−Γτ}.
pub fn model_jacobian(beta: f64, gamma: f64, tau: f64) -> [f64; 3] {
    let e = (-gamma * tau).exp();
    [1.0, e, -beta * tau * e]
}

fn model(b: f64, beta: f64, gamma: f64, tau: f64) -> f64 {
    model_value(b, beta, gamma, tau)
}

fn jacobian_row(beta: f64, gamma: f64, tau: f64) -> [f64; 3] {
    model_jacobian(beta, gamma, tau)
}

/// Solve a 3×3 system by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)] // index form mirrors the matrix algebra
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        let magnitude = a[pivot][col].abs();
        if magnitude.is_nan() || magnitude <= 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for col in (0..3).rev() {
        let mut s = b[col];
        for k in col + 1..3 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

struct Selected {
    taus: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

fn select(
    taus: &[f64],
    g: &[Option<f64>],
    updates: &[u64],
    policy: WeightPolicy,
    window: &FitWindow,
) -> Selected {
    let mut out = Selected { taus: Vec::new(), values: Vec::new(), weights: Vec::new() };
    for i in 0..taus.len() {
        let tau = taus[i];
        let Some(value) = g[i] else { continue };
        if !(tau.is_finite() && tau > 0.0 && value.is_finite() && window.contains(tau)) {
            continue;
        }
        let w = match policy {
            WeightPolicy::Uniform => 1.0,
            WeightPolicy::UpdateCount => {
                if updates[i] == 0 {
                    continue;
                }
                updates[i] as f64
            }
        };
        out.taus.push(tau);
        out.values.push(value);
        out.weights.push(w);
    }
    let mean_w = out.weights.iter().sum::<f64>() / out.weights.len().max(1) as f64;
    if mean_w > 0.0 {
        for w in &mut out.weights {
            *w /= mean_w;
        }
    }
    out
}

struct Init {
    baseline: f64,
    beta: f64,
    gamma: f64,
}

fn initial_guess(sel: &Selected) -> Result<Init> {
    let tau_max = sel.taus.iter().cloned().fold(f64::MIN, f64::max);
    let tail_floor = tau_max / 10.0;
    let (mut tail_sum, mut tail_n) = (0.0, 0usize);
    for (&tau, &v) in sel.taus.iter().zip(&sel.values) {
        if tau >= tail_floor {
            tail_sum += v;
            tail_n += 1;
        }
    }
    let baseline = tail_sum / tail_n as f64;

    let mut first = 0;
    for (i, &tau) in sel.taus.iter().enumerate() {
        if tau < sel.taus[first] {
            first = i;
        }
    }
    let beta = sel.values[first] - baseline;
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::RankDeficient);
    }

    // log-linear regression over the strong part of the decay
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&tau, &v) in sel.taus.iter().zip(&sel.values) {
        let excess = v - baseline;
        if excess > 0.1 * beta {
            let y = excess.ln();
            sx += tau;
            sy += y;
            sxx += tau * tau;
            sxy += tau * y;
            n += 1.0;
        }
    }
    let denom = n * sxx - sx * sx;
    let slope = if n >= 2.0 && denom > 0.0 { (n * sxy - sx * sy) / denom } else { 0.0 };
    let gamma = if slope < 0.0 {
        -slope
    } else {
        // decay too shallow to regress; start from the window midpoint scale
        let mean_tau = sel.taus.iter().sum::<f64>() / sel.taus.len() as f64;
        1.0 / mean_tau
    };
    Ok(Init { baseline, beta, gamma })
}

fn weighted_sse(sel: &Selected, theta: &[f64; 3]) -> f64 {
    let mut sse = 0.0;
    for i in 0..sel.taus.len() {
        let r = sel.values[i] - model(theta[0], theta[1], theta[2], sel.taus[i]);
        sse += sel.weights[i] * r * r;
    }
    sse
}

/// Fit `g(τ) = B + β·exp(−Γτ)` to the defined channels of a correlogram-like
/// triple of parallel slices.
///
/// Channels with `g = None`, non-finite values, or lags outside the window
/// are skipped; `UpdateCount` weighting additionally drops channels that
/// never accumulated. At least 8 channels must survive. When `window` is
/// `None`, lags start at [`DEFAULT_TAU_MIN`] and the window closes at
/// 10 decay times of a preliminary Γ estimate (falling back to the full
/// range if that leaves too few points).
///
/// A non-positive initial amplitude — flat or inverted data — is reported as
/// [`Error::RankDeficient`]. Hitting the iteration cap is not an error: the
/// result comes back with `converged = false`.
#[allow(clippy::needless_range_loop)] // index form mirrors the matrix algebra
pub fn fit_exponential(
    taus: &[f64],
    g: &[Option<f64>],
    updates: &[u64],
    policy: WeightPolicy,
    window: Option<FitWindow>,
) -> Result<FitResult> {
    if taus.len() != g.len() || taus.len() != updates.len() {
        return Err(Error::InvalidParameter(
            "lag, value, and update-count slices must have equal length".into(),
        ));
    }
    let full = FitWindow::new(DEFAULT_TAU_MIN, f64::INFINITY).unwrap_or(FitWindow {
        tau_min: DEFAULT_TAU_MIN,
        tau_max: f64::MAX,
    });
    let (mut sel, explicit) = match window {
        Some(w) => (select(taus, g, updates, policy, &w), true),
        None => (select(taus, g, updates, policy, &full), false),
    };
    if sel.taus.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "fit needs at least {MIN_POINTS} defined channels in the window, found {}",
            sel.taus.len()
        )));
    }
    let mut init = initial_guess(&sel)?;
    if !explicit {
        // close the window a few decay times out so the fit is not dominated
        // by baseline channels
        let tau_max = DEFAULT_WINDOW_DECAYS / init.gamma;
        if tau_max.is_finite() && tau_max > DEFAULT_TAU_MIN {
            let narrowed =
                select(taus, g, updates, policy, &FitWindow { tau_min: DEFAULT_TAU_MIN, tau_max });
            if narrowed.taus.len() >= MIN_POINTS {
                sel = narrowed;
                init = initial_guess(&sel)?;
            }
        }
    }

    let mut theta = [init.baseline, init.beta, init.gamma];
    let mut sse = weighted_sse(&sel, &theta);
    if !sse.is_finite() {
        return Err(Error::RankDeficient);
    }
    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < MAX_ITERATIONS {
        iterations += 1;
        // normal equations: (JᵀWJ + λ·diag(JᵀWJ))·δ = JᵀW·r
        let mut a = [[0.0; 3]; 3];
        let mut grad = [0.0; 3];
        for i in 0..sel.taus.len() {
            let row = jacobian_row(theta[1], theta[2], sel.taus[i]);
            let r = sel.values[i] - model(theta[0], theta[1], theta[2], sel.taus[i]);
            let w = sel.weights[i];
            for p in 0..3 {
                grad[p] += w * row[p] * r;
                for q in p..3 {
                    a[p][q] += w * row[p] * row[q];
                }
            }
        }
        for p in 0..3 {
            for q in 0..p {
                a[p][q] = a[q][p];
            }
        }
        let grad_norm = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
        if grad_norm < GRADIENT_TOL {
            converged = true;
            break;
        }

        loop {
            let mut damped = a;
            for p in 0..3 {
                damped[p][p] += lambda * a[p][p];
            }
            let step = solve3(damped, grad);
            let accepted = match step {
                Some(delta) => {
                    let cand = [theta[0] + delta[0], theta[1] + delta[1], theta[2] + delta[2]];
                    if cand[2] <= 0.0 {
                        None
                    } else {
                        let cand_sse = weighted_sse(&sel, &cand);
                        if cand_sse.is_finite() && cand_sse <= sse {
                            Some((cand, cand_sse, delta))
                        } else {
                            None
                        }
                    }
                }
                None => None,
            };
            match accepted {
                Some((cand, cand_sse, delta)) => {
                    let rel_step = (0..3)
                        .map(|p| delta[p].abs() / (theta[p].abs() + 1e-30))
                        .fold(0.0, f64::max);
                    theta = cand;
                    sse = cand_sse;
                    lambda = (lambda / 10.0).max(LAMBDA_MIN);
                    if rel_step < REL_STEP_TOL {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        break 'outer;
                    }
                }
            }
        }
    }

    Ok(FitResult {
        baseline: theta[0],
        beta: theta[1],
        gamma: theta[2],
        residual_norm: sse.sqrt(),
        iterations,
        converged,
        points: sel.taus.len(),
    })
}

/// [`fit_exponential`] applied to a correlator snapshot.
pub fn fit_correlogram(
    correlogram: &Correlogram,
    policy: WeightPolicy,
    window: Option<FitWindow>,
) -> Result<FitResult> {
    let taus: Vec<f64> = correlogram.channels.iter().map(|c| c.lag_secs).collect();
    let g: Vec<Option<f64>> = correlogram.channels.iter().map(|c| c.g).collect();
    let updates: Vec<u64> = correlogram.channels.iter().map(|c| c.update_count).collect();
    fit_exponential(&taus, &g, &updates, policy, window)
}

/// Diffusion coefficient and hydrodynamic diameter recovered from a decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeResult {
    /// D = Γ/(2q²), m²/s.
    pub diffusion: f64,
    /// d = kT/(3πηD), m.
    pub diameter: f64,
}

/// Invert Γ = 2Dq² and the Stokes-Einstein relation.
pub fn size_from_decay(gamma: f64, q: f64, temperature: f64, viscosity: f64) -> Result<SizeResult> {
    let pos = |v: f64| v.is_finite() && v > 0.0;
    if !pos(gamma) || !pos(q) || !pos(temperature) || !pos(viscosity) {
        return Err(Error::InvalidParameter(
            "sizing requires positive finite Γ, q, temperature, and viscosity".into(),
        ));
    }
    let diffusion = gamma / (2.0 * q * q);
    let diameter = crate::dls::BOLTZMANN * temperature
        / (3.0 * std::f64::consts::PI * viscosity * diffusion);
    Ok(SizeResult { diffusion, diameter })
}

/// 100·|measured − certified| / |certified|. NaN when `certified` is zero.
pub fn relative_error(measured: f64, certified: f64) -> f64 {
    if certified == 0.0 {
        return f64::NAN;
    }
    100.0 * (measured - certified).abs() / certified.abs()
}
