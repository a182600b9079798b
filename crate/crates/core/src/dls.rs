//! Synthetic dynamic light scattering data.
//!
//! Three stages, each independently seeded and deterministic:
//!
//! 1. [`ground_truth`] turns experiment parameters into the scattering vector
//!    q, the Stokes-Einstein diffusion coefficient D, and the intensity decay
//!    rate Γ = 2Dq².
//! 2. [`generate_intensity`] draws a stationary complex Gaussian field whose
//!    correlation decays as exp(−Γτ/2), via a first-order autoregressive
//!    recurrence, and squares it into an intensity trace. A constant
//!    intensity floor dilutes the fluctuating part so the normalized
//!    intensity autocorrelation is 1 + β·exp(−Γτ) for any coherence factor
//!    β ∈ (0, 1]. (Mixing at the field level instead would add a second decay
//!    component at Γ/2, which the single-exponential analysis chain does not
//!    model.)
//! 3. [`generate_photons`] thins the intensity into photon events: each 10 ns
//!    base sample fires with probability min(1, I·rate·δ), and a fired sample
//!    places its photon on a uniformly chosen tick, nudged forward when the
//!    8-tick detector pulse width would be violated. Empty stretches are
//!    skipped with geometric jumps, so cost scales with the number of photons
//!    rather than the number of samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::photon::{PhotonEventStream, Tick, MIN_EVENT_GAP_TICKS, TICKS_PER_BASE_SAMPLE};

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Photons flagged as gap-adjusted above this fraction trigger a warning.
pub const GAP_WARN_FRACTION: f64 = 1e-3;

/// Physical description of one scattering run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    /// Temperature in kelvin.
    pub temperature: f64,
    /// Solvent dynamic viscosity in Pa·s.
    pub viscosity: f64,
    /// Laser vacuum wavelength in metres.
    pub wavelength: f64,
    /// Refractive index of the suspending medium.
    pub n_medium: f64,
    /// Scattering angle in radians, strictly between 0 and π.
    pub theta: f64,
    /// Particle diameter in metres.
    pub diameter: f64,
    /// Target mean photon rate in counts per second.
    pub mean_count_rate: f64,
    /// Coherence factor β in (0, 1].
    pub beta: f64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            temperature: 298.15,
            viscosity: 0.89e-3,
            wavelength: 532e-9,
            n_medium: 1.332,
            theta: 30.0_f64.to_radians(),
            diameter: 530e-9,
            mean_count_rate: 5e6,
            beta: 1.0,
        }
    }
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.temperature) {
            return bad("temperature must be positive");
        }
        if !pos(self.viscosity) {
            return bad("viscosity must be positive");
        }
        if !pos(self.wavelength) {
            return bad("wavelength must be positive");
        }
        if !pos(self.n_medium) {
            return bad("medium refractive index must be positive");
        }
        if !(self.theta.is_finite() && self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return bad("scattering angle must lie strictly between 0 and π");
        }
        if !pos(self.diameter) {
            return bad("particle diameter must be positive");
        }
        if !(self.mean_count_rate.is_finite() && self.mean_count_rate >= 0.0) {
            return bad("mean count rate must be non-negative");
        }
        if !(self.beta.is_finite() && self.beta > 0.0 && self.beta <= 1.0) {
            return bad("coherence factor must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Derived quantities fixed by the experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    /// Scattering vector magnitude, 1/m.
    pub q: f64,
    /// Stokes-Einstein diffusion coefficient, m²/s.
    pub diffusion: f64,
    /// Intensity correlation decay rate Γ = 2Dq², 1/s.
    pub gamma: f64,
}

/// q = (4π·n/λ)·sin(θ/2), D = kT/(3πηd), Γ = 2Dq².
pub fn ground_truth(params: &ExperimentParams) -> Result<GroundTruth> {
    params.validate()?;
    let q = 4.0 * std::f64::consts::PI * params.n_medium / params.wavelength
        * (params.theta / 2.0).sin();
    let diffusion = BOLTZMANN * params.temperature
        / (3.0 * std::f64::consts::PI * params.viscosity * params.diameter);
    let gamma = 2.0 * diffusion * q * q;
    Ok(GroundTruth { q, diffusion, gamma })
}

/// A piecewise-constant intensity trace on a grid of whole base samples.
/// Values are relative: a mean of 1 makes `mean_count_rate` in
/// [`generate_photons`] the actual mean photon rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySeries {
    values: Vec<f64>,
    period_ticks: u64,
}

impl IntensitySeries {
    pub fn from_values(values: Vec<f64>, period_ticks: u64) -> Result<Self> {
        if period_ticks == 0 || !period_ticks.is_multiple_of(TICKS_PER_BASE_SAMPLE) {
            return Err(Error::InvalidParameter(
                "intensity sample period must be a positive whole number of 10 ns base samples"
                    .into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "intensity values must be finite and non-negative".into(),
            ));
        }
        (values.len() as u64)
            .checked_mul(period_ticks)
            .ok_or_else(|| Error::InvalidParameter("intensity span overflows tick range".into()))?;
        Ok(IntensitySeries { values, period_ticks })
    }

    pub fn constant(value: f64, period_ticks: u64, num_samples: usize) -> Result<Self> {
        IntensitySeries::from_values(vec![value; num_samples], period_ticks)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period_ticks(&self) -> u64 {
        self.period_ticks
    }

    pub fn period_secs(&self) -> f64 {
        self.period_ticks as f64 * 1.25e-9
    }

    /// Total span in ticks.
    pub fn duration_ticks(&self) -> u64 {
        self.values.len() as u64 * self.period_ticks
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draw an exponentially correlated intensity trace.
///
/// The field obeys `E_k = ρ·E_{k−1} + σ·ξ_k` with `ρ = exp(−Γδ/2)` and
/// complex standard normal `ξ`, started from its stationary distribution, so
/// the field correlation over a lag of m samples is exactly ρ^m. The
/// intensity is `mean_intensity · (√β·|E|² + 1 − √β)`, giving a normalized
/// intensity autocorrelation of 1 + β·exp(−Γτ) in expectation.
///
/// δ·Γ should be kept below ~0.1: the trace is constant within one sample, so
/// structure faster than the grid cannot be represented. A negative Γ (or
/// negative period) would make the recurrence unstable and is rejected.
pub fn generate_intensity(
    truth: &GroundTruth,
    beta: f64,
    mean_intensity: f64,
    sample_period_secs: f64,
    num_samples: usize,
    seed: u64,
) -> Result<IntensitySeries> {
    if !(beta.is_finite() && beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter("coherence factor must lie in (0, 1]".into()));
    }
    if !(mean_intensity.is_finite() && mean_intensity > 0.0) {
        return Err(Error::InvalidParameter("mean intensity must be positive".into()));
    }
    if !(sample_period_secs.is_finite() && sample_period_secs > 0.0) {
        return Err(Error::InvalidParameter("sample period must be positive".into()));
    }
    let ticks_f = sample_period_secs * 8e8;
    let period_ticks = ticks_f.round();
    if !(period_ticks >= 1.0 && (ticks_f - period_ticks).abs() <= 1e-6 * ticks_f) {
        return Err(Error::InvalidParameter(
            "sample period must be a whole number of 1.25 ns ticks".into(),
        ));
    }
    let rho = (-truth.gamma * sample_period_secs / 2.0).exp();
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::UnstableCoefficient(rho));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let quad_sigma = ((1.0 - rho * rho) / 2.0).sqrt();
    let stationary = std::f64::consts::FRAC_1_SQRT_2;
    let mut re = stationary * rng.sample::<f64, _>(StandardNormal);
    let mut im = stationary * rng.sample::<f64, _>(StandardNormal);
    let floor = 1.0 - beta.sqrt();
    let scale = mean_intensity * beta.sqrt();
    let offset = mean_intensity * floor;

    let mut values = Vec::with_capacity(num_samples);
    for k in 0..num_samples {
        if k > 0 {
            re = rho * re + quad_sigma * rng.sample::<f64, _>(StandardNormal);
            im = rho * im + quad_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        values.push(scale * (re * re + im * im) + offset);
    }
    IntensitySeries::from_values(values, period_ticks as u64)
}

/// Outcome counters from photon generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenDiagnostics {
    /// Photons emitted.
    pub photons: u64,
    /// Photons whose in-sample placement was pushed later to respect the
    /// 8-tick detector pulse width.
    pub gap_adjusted: u64,
}

impl GenDiagnostics {
    /// True when enough placements were adjusted that the shortest-lag
    /// statistics should not be trusted (rate high relative to the pulse
    /// width). Adjustments only ever involve photons in adjacent base
    /// samples, so lags of two samples and beyond are unaffected.
    pub fn gap_warning(&self) -> bool {
        self.gap_warning_above(GAP_WARN_FRACTION)
    }

    /// [`gap_warning`](Self::gap_warning) with a caller-chosen fraction.
    pub fn gap_warning_above(&self, fraction: f64) -> bool {
        self.gap_adjusted as f64 > self.photons as f64 * fraction
    }
}

/// Thin an intensity trace into photon events.
///
/// Each 10 ns base sample fires independently with probability
/// `min(1, I(t)·mean_count_rate·10 ns)`; a fired sample holds exactly one
/// photon at a uniform tick inside it. Sampling walks from photon to photon
/// with geometric jumps, which draws from exactly the same per-sample
/// Bernoulli law without visiting empty samples.
pub fn generate_photons(
    intensity: &IntensitySeries,
    mean_count_rate: f64,
    seed: u64,
) -> Result<(PhotonEventStream, GenDiagnostics)> {
    if !(mean_count_rate.is_finite() && mean_count_rate >= 0.0) {
        return Err(Error::InvalidParameter("mean count rate must be non-negative".into()));
    }
    let samples_per_step = intensity.period_ticks() / TICKS_PER_BASE_SAMPLE;
    let base_period_secs = TICKS_PER_BASE_SAMPLE as f64 * 1.25e-9;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut events: Vec<Tick> = Vec::new();
    let mut prev_tick: Option<u64> = None;
    let mut diag = GenDiagnostics { photons: 0, gap_adjusted: 0 };

    for (step, &level) in intensity.values().iter().enumerate() {
        let p = (level * mean_count_rate * base_period_secs).clamp(0.0, 1.0);
        if p <= 0.0 {
            continue;
        }
        let step_start = step as u64 * samples_per_step;
        let step_end = step_start + samples_per_step;
        // ln(1−p) via ln_1p keeps tiny p from collapsing to zero
        let q_ln = (-p).ln_1p();
        let mut s = step_start;
        while s < step_end {
            let skip = if p >= 1.0 {
                0u64
            } else {
                let u: f64 = rng.gen();
                let f = u.ln() / q_ln;
                // u = 0 makes f infinite: the jump leaves the step
                if !f.is_finite() || f >= (step_end - s) as f64 {
                    break;
                }
                f as u64
            };
            let pos = s + skip;
            if pos >= step_end {
                break;
            }
            let mut tick = pos * TICKS_PER_BASE_SAMPLE + rng.gen_range(0..TICKS_PER_BASE_SAMPLE);
            if let Some(prev) = prev_tick {
                if tick < prev + MIN_EVENT_GAP_TICKS {
                    tick = prev + MIN_EVENT_GAP_TICKS;
                    diag.gap_adjusted += 1;
                }
            }
            events.push(Tick::new(tick));
            diag.photons += 1;
            prev_tick = Some(tick);
            s = pos + 1;
        }
    }

    let stream = PhotonEventStream::new(events, Tick::new(intensity.duration_ticks()))?;
    Ok((stream, diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independently computed (40-digit arithmetic) for the default
    // parameters: d = 530 nm, θ = 30°, T = 298.15 K, η = 0.89 mPa·s,
    // λ = 532 nm, n = 1.332.
    const REF_Q: f64 = 8_143_267.235012545;
    const REF_D: f64 = 9.259362624318936e-13;
    const REF_GAMMA: f64 = 122.80285470168167;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn ground_truth_matches_reference_values() {
        let t = ground_truth(&ExperimentParams::default()).unwrap();
        assert!(close(t.q, REF_Q, 1e-12), "q = {}", t.q);
        assert!(close(t.diffusion, REF_D, 1e-12), "D = {}", t.diffusion);
        assert!(close(t.gamma, REF_GAMMA, 1e-12), "Γ = {}", t.gamma);
    }

    #[test]
    fn diffusion_is_inverse_in_diameter() {
        let base = ground_truth(&ExperimentParams::default()).unwrap();
        let halved = ground_truth(&ExperimentParams {
            diameter: 530e-9 / 2.0,
            ..ExperimentParams::default()
        })
        .unwrap();
        assert_eq!(halved.diffusion, 2.0 * base.diffusion);
    }

    #[test]
    fn gamma_scales_with_q_squared() {
        let p = ExperimentParams::default();
        let small = ground_truth(&ExperimentParams { theta: 0.2, ..p.clone() }).unwrap();
        let big = ground_truth(&ExperimentParams { theta: 0.4, ..p }).unwrap();
        let ratio = big.gamma / small.gamma;
        let expected = (0.2_f64.sin() / 0.1_f64.sin()).powi(2);
        assert!(close(ratio, expected, 1e-12));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let ok = ExperimentParams::default();
        for bad in [
            ExperimentParams { temperature: 0.0, ..ok.clone() },
            ExperimentParams { viscosity: -1.0, ..ok.clone() },
            ExperimentParams { wavelength: 0.0, ..ok.clone() },
            ExperimentParams { theta: 0.0, ..ok.clone() },
            ExperimentParams { theta: std::f64::consts::PI, ..ok.clone() },
            ExperimentParams { diameter: f64::NAN, ..ok.clone() },
            ExperimentParams { beta: 0.0, ..ok.clone() },
            ExperimentParams { beta: 1.5, ..ok.clone() },
            ExperimentParams { mean_count_rate: f64::INFINITY, ..ok.clone() },
        ] {
            assert!(ground_truth(&bad).is_err(), "{bad:?}");
        }
    }

    fn truth_with_gamma(gamma: f64) -> GroundTruth {
        GroundTruth { q: 1.0, diffusion: gamma / 2.0, gamma }
    }

    #[test]
    fn zero_gamma_freezes_the_field() {
        let series =
            generate_intensity(&truth_with_gamma(0.0), 1.0, 1.0, 1e-5, 1000, 7).unwrap();
        let first = series.values()[0];
        assert!(series.values().iter().all(|&v| v == first));
    }

    #[test]
    fn negative_gamma_is_unstable() {
        let err =
            generate_intensity(&truth_with_gamma(-5.0), 1.0, 1.0, 1e-5, 10, 7).unwrap_err();
        assert!(matches!(err, Error::UnstableCoefficient(c) if c > 1.0));
    }

    #[test]
    fn frozen_field_ensemble_second_moment_is_one_plus_beta() {
        // With Γ = 0 each seed yields one constant intensity; across seeds
        // ⟨I²⟩/⟨I⟩² → 1 + β.
        let beta = 0.6;
        let n = 3000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for seed in 0..n {
            let s = generate_intensity(&truth_with_gamma(0.0), beta, 1.0, 1e-5, 1, seed).unwrap();
            let v = s.values()[0];
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let ratio = (sum_sq / n as f64) / (mean * mean);
        assert!((ratio - (1.0 + beta)).abs() < 0.3, "ratio = {ratio}");
        assert!((mean - 1.0).abs() < 0.1, "mean = {mean}");
    }

    #[test]
    fn intensity_is_deterministic_per_seed() {
        let t = truth_with_gamma(200.0);
        let a = generate_intensity(&t, 0.8, 2.0, 1e-5, 500, 42).unwrap();
        let b = generate_intensity(&t, 0.8, 2.0, 1e-5, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_intensity(&t, 0.8, 2.0, 1e-5, 500, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn intensity_period_must_be_whole_base_samples() {
        let t = truth_with_gamma(100.0);
        assert!(generate_intensity(&t, 1.0, 1.0, 1.3e-8, 10, 1).is_err());
        assert!(generate_intensity(&t, 1.0, 1.0, 2e-8, 10, 1).is_ok());
    }

    #[test]
    fn intensity_autocorrelation_decays_at_gamma() {
        // Γδ = 2e-3, 10^6 samples. The estimator's standard deviation is
        // about sqrt(2/(N·Γδ)); stay within 5 of those at each probed lag.
        let gamma = 200.0;
        let delta = 1e-5;
        let n = 1_000_000;
        let beta = 1.0;
        let series = generate_intensity(&truth_with_gamma(gamma), beta, 1.0, delta, n, 11).unwrap();
        let v = series.values();
        let mean = v.iter().sum::<f64>() / n as f64;
        let band = 5.0 * (2.0 / (n as f64 * gamma * delta)).sqrt();
        for lag in [1usize, 200, 500, 1500] {
            let m = n - lag;
            let acc: f64 = (0..m).map(|i| v[i] * v[i + lag]).sum();
            let g = acc / m as f64 / (mean * mean);
            let model = 1.0 + beta * (-gamma * delta * lag as f64).exp();
            assert!(
                (g - model).abs() < band,
                "lag {lag}: g = {g}, model = {model}, band = {band}"
            );
        }
    }

    #[test]
    fn photon_count_tracks_rate() {
        // 1 s at 5×10⁶ cps: per-sample probability 0.05 over 10⁸ samples.
        let intensity = IntensitySeries::constant(1.0, 8 * 100_000, 1000).unwrap();
        let (stream, diag) = generate_photons(&intensity, 5e6, 3).unwrap();
        let expect = 5e6;
        let sd = (1e8_f64 * 0.05 * 0.95).sqrt();
        assert!(
            (stream.len() as f64 - expect).abs() < 5.0 * sd,
            "emitted {} photons",
            stream.len()
        );
        assert_eq!(diag.photons, stream.len() as u64);
        // At p = 0.05, photons land in adjacent samples often enough that a
        // few percent need nudging: the default warning must fire, and the
        // adjusted fraction should sit near its expectation, p·(28/64).
        assert!(diag.gap_warning());
        let frac = diag.gap_adjusted as f64 / diag.photons as f64;
        let expect_frac = 0.05 * 28.0 / 64.0;
        assert!((frac - expect_frac).abs() < 0.2 * expect_frac, "fraction = {frac}");
    }

    #[test]
    fn moderate_rates_stay_below_the_gap_warning() {
        // p = 10⁻³ → expected adjusted fraction ≈ 4.4×10⁻⁴ < 10⁻³.
        let intensity = IntensitySeries::constant(1.0, 8 * 100_000, 1000).unwrap();
        let (stream, diag) = generate_photons(&intensity, 1e5, 3).unwrap();
        assert!(stream.len() > 50_000);
        assert!(!diag.gap_warning(), "adjusted {} of {}", diag.gap_adjusted, diag.photons);
        assert!(diag.gap_warning_above(1e-5));
    }

    #[test]
    fn photon_generation_is_deterministic_per_seed() {
        let intensity = IntensitySeries::constant(1.0, 8000, 200).unwrap();
        let (a, _) = generate_photons(&intensity, 1e6, 9).unwrap();
        let (b, _) = generate_photons(&intensity, 1e6, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_intensity_emits_nothing() {
        let intensity = IntensitySeries::constant(0.0, 8000, 100).unwrap();
        let (stream, diag) = generate_photons(&intensity, 5e6, 1).unwrap();
        assert!(stream.is_empty());
        assert_eq!(stream.duration().get(), 800_000);
        assert_eq!(diag.photons, 0);
    }

    #[test]
    fn zero_rate_emits_nothing() {
        let intensity = IntensitySeries::constant(1.0, 8000, 100).unwrap();
        let (stream, _) = generate_photons(&intensity, 0.0, 1).unwrap();
        assert!(stream.is_empty());
    }

    #[test]
    fn saturating_rate_trips_the_gap_warning() {
        // p clamps to 1: every sample fires and placements collide constantly.
        let intensity = IntensitySeries::constant(1.0, 8000, 10).unwrap();
        let (stream, diag) = generate_photons(&intensity, 2e8, 5).unwrap();
        assert_eq!(stream.len(), 10_000);
        assert!(diag.gap_warning());
    }

    #[test]
    fn binned_photons_are_zero_or_one_per_base_sample() {
        let intensity = IntensitySeries::constant(1.0, 80_000, 100).unwrap();
        let (stream, _) = generate_photons(&intensity, 5e6, 21).unwrap();
        let series = crate::photon::bin_to_samples(&stream, TICKS_PER_BASE_SAMPLE).unwrap();
        assert!(series.counts().iter().all(|&c| c <= 1));
        assert_eq!(series.counts().iter().sum::<u64>(), stream.len() as u64);
    }

    #[test]
    fn intensity_scale_and_rate_scale_are_interchangeable() {
        let a = IntensitySeries::constant(2.0, 8000, 5000).unwrap();
        let b = IntensitySeries::constant(1.0, 8000, 5000).unwrap();
        let (s1, _) = generate_photons(&a, 2.5e6, 17).unwrap();
        let (s2, _) = generate_photons(&b, 5e6, 17).unwrap();
        // identical per-sample probabilities and identical seed → same draws
        assert_eq!(s1, s2);
    }
}
