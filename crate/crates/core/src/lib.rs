//! Angle error of automotive synthetic-aperture radar when the ego velocity
//! is estimated from the radar's own Doppler and angle detections.
//!
//! Modules follow the processing chain:
//!
//! * [`radar`]: sensor and scene model, noisy per-frame detections;
//! * [`velocity`]: per-frame least-squares ego velocity and its covariance;
//! * [`sar`]: phasor-level coherent integration, angle scans, imaging;
//! * [`analysis`]: closed-form angle error variance;
//! * [`harness`]: Monte-Carlo experiments and CSV output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod radar;
pub mod rng;
pub mod sar;
pub mod velocity;

pub use analysis::{
    angle_variance_asymptotic, angle_variance_full, angle_variance_general, lemma_polynomials, omega, u_vector,
    AngleErrorPrediction, LemmaReport,
};
pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
pub use radar::{
    doppler_matrix, simulate_frame_detections, steering_derivative, steering_vector, FrameDetections, FrameResponse,
    RadarConfig, Scene, VelocityTrack,
};
pub use rng::TrialStreams;
pub use sar::{
    angle_scan, beamwidth_3db, coherent_sum, estimate_sar_angle, range_migration, sar_image, synthesize_frame_phasors,
    AngleGrid, FramePhasors, SarImage, SarScanResult,
};
pub use velocity::{
    estimate_velocity, tangential_velocity, velocity_covariance_analytical, VelocityCovariance, VelocityEstimate,
};
