//! Fixtures shared by the benchmarks.

use sarvel_core::{RadarConfig, Scene, TrialStreams, VelocityTrack};

/// Baseline radar and a 10 m/s straight-ahead track of `frames` frames.
pub fn baseline(frames: usize) -> (RadarConfig, VelocityTrack) {
    (RadarConfig::default(), VelocityTrack::constant([0.0, 10.0], frames))
}

/// Randomly spread reflectors with the target at 45°.
pub fn scene(reflectors: usize, seed: u64) -> Scene {
    let cfg = RadarConfig::default();
    Scene::random(
        &mut TrialStreams::from_seed(seed).scene(),
        reflectors,
        cfg.field_of_view,
        std::f64::consts::FRAC_PI_4,
        20.0,
    )
}
