//! Shared input builders for the benchmark targets.

use taucorr::{generate_intensity, generate_photons, GroundTruth, PhotonEventStream};

/// A deterministic photon stream resembling a real acquisition: exponentially
/// correlated intensity thinned to events.
pub fn synthetic_stream(duration_secs: f64, rate_cps: f64, seed: u64) -> PhotonEventStream {
    let truth = GroundTruth { q: 1.0, diffusion: 61.4, gamma: 122.8 };
    let step = 1e-5;
    let samples = (duration_secs / step).round() as usize;
    let intensity = generate_intensity(&truth, 1.0, 1.0, step, samples, seed).unwrap();
    let (stream, _) = generate_photons(&intensity, rate_cps, seed ^ 0x9e37_79b9).unwrap();
    stream
}

/// A dense base-sample count sequence for raw push throughput.
pub fn dense_counts(len: usize, seed: u64) -> Vec<u64> {
    // small xorshift so the bench does not depend on rand's sampling cost
    let mut state = seed | 1;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state & 0x3
        })
        .collect()
}
