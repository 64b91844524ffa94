//! Sensor and scene model: direction vectors, the Doppler measurement matrix
//! and the noisy per-frame detection simulator.
//!
//! Angles are in radians throughout. Angle θ is measured from the radar
//! boresight, which coincides with the +y axis; `p(θ) = [sin θ, cos θ]`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, Vec2};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Fixed sensor model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// Frame duration in seconds.
    pub frame_duration: f64,
    /// Physical-array angle measurement std in rad.
    pub sigma_phi: f64,
    /// Doppler measurement std in Hz.
    pub sigma_f: f64,
    /// Per-frame matched-filter output SNR in dB; `f64::INFINITY` disables
    /// phasor noise.
    pub snr_db: f64,
    /// Field of view `(min, max)` in rad.
    pub field_of_view: (f64, f64),
    pub frame_response: FrameResponse,
}

/// How a frame's matched-filter output responds to a Doppler mismatch
/// between the target and the integration hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameResponse {
    /// Output integrated over the frame: a mismatch Δf attenuates the frame by
    /// `sinc(Δf T_f)` and references its phase to mid-frame.
    #[default]
    Integrated,
    /// Unit-gain phasor with end-of-frame phase, whatever the mismatch.
    Ideal,
}

impl std::str::FromStr for FrameResponse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integrated" => Ok(Self::Integrated),
            "ideal" => Ok(Self::Ideal),
            other => Err(Error::ConfigInvalid(format!("unknown frame response '{other}'"))),
        }
    }
}

impl Default for RadarConfig {
    /// 77 GHz, 20 ms frames, σ_φ = 1°, σ_f = 50 Hz, 20 dB SNR.
    fn default() -> Self {
        Self {
            carrier_frequency: 77e9,
            frame_duration: 0.02,
            sigma_phi: 1f64.to_radians(),
            sigma_f: 50.0,
            snr_db: 20.0,
            field_of_view: (-FRAC_PI_2, FRAC_PI_2),
            frame_response: FrameResponse::Integrated,
        }
    }
}

impl RadarConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Same sensor with measurement noise switched off.
    pub fn noiseless(&self) -> Self {
        Self {
            sigma_phi: 0.0,
            sigma_f: 0.0,
            snr_db: f64::INFINITY,
            ..*self
        }
    }

    /// Power of the complex phasor noise relative to a unit signal.
    pub fn noise_power(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::ConfigInvalid(msg.to_string()));
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return bad("carrier frequency must be positive");
        }
        if !(self.frame_duration > 0.0 && self.frame_duration.is_finite()) {
            return bad("frame duration must be positive");
        }
        if !(self.sigma_phi >= 0.0 && self.sigma_phi.is_finite()) {
            return bad("sigma_phi must be non-negative");
        }
        if !(self.sigma_f >= 0.0 && self.sigma_f.is_finite()) {
            return bad("sigma_f must be non-negative");
        }
        if self.snr_db.is_nan() {
            return bad("snr_db must be a number");
        }
        let (lo, hi) = self.field_of_view;
        if !(lo < hi && lo >= -FRAC_PI_2 - 1e-12 && hi <= FRAC_PI_2 + 1e-12) {
            return bad("field of view must be a nonempty sub-interval of [-pi/2, pi/2]");
        }
        Ok(())
    }
}

/// Static reflectors used for velocity estimation plus the SAR target.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub reflector_angles: Vec<f64>,
    /// Only needed for imaging.
    pub reflector_ranges: Option<Vec<f64>>,
    pub target_angle: f64,
    pub target_range: f64,
}

impl Scene {
    pub fn new(reflector_angles: Vec<f64>, target_angle: f64, target_range: f64) -> Self {
        Self {
            reflector_angles,
            reflector_ranges: None,
            target_angle,
            target_range,
        }
    }

    pub fn with_ranges(mut self, ranges: Vec<f64>) -> Self {
        self.reflector_ranges = Some(ranges);
        self
    }

    /// `count` reflectors drawn uniformly over the field of view.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        count: usize,
        fov: (f64, f64),
        target_angle: f64,
        target_range: f64,
    ) -> Self {
        let angles = (0..count).map(|_| rng.random_range(fov.0..fov.1)).collect();
        Self::new(angles, target_angle, target_range)
    }

    /// `count` reflectors at the midpoints of `count` equal cells of the field
    /// of view, the deterministic counterpart of a uniform spread.
    pub fn uniform_spread(count: usize, fov: (f64, f64), target_angle: f64, target_range: f64) -> Self {
        Self::new(uniform_angles(count, fov), target_angle, target_range)
    }

    pub fn validate(&self, fov: (f64, f64)) -> Result<()> {
        if self.reflector_angles.is_empty() {
            return Err(Error::InsufficientDetections(0));
        }
        let inside = |a: f64| a >= fov.0 - 1e-12 && a <= fov.1 + 1e-12;
        if !self.reflector_angles.iter().copied().all(inside) || !inside(self.target_angle) {
            return Err(Error::ConfigInvalid("scene angle outside the field of view".into()));
        }
        if let Some(ranges) = &self.reflector_ranges {
            if ranges.len() != self.reflector_angles.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.reflector_angles.len(),
                    actual: ranges.len(),
                });
            }
            if ranges.iter().any(|r| !(*r > 0.0)) {
                return Err(Error::ConfigInvalid("reflector ranges must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Midpoint grid of `count` angles over `fov`.
pub fn uniform_angles(count: usize, fov: (f64, f64)) -> Vec<f64> {
    let width = (fov.1 - fov.0) / count as f64;
    (0..count).map(|i| fov.0 + (i as f64 + 0.5) * width).collect()
}

/// Per-frame ego velocities, one `[v_x, v_y]` row per frame (m/s).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTrack {
    rows: Vec<Vec2>,
}

impl VelocityTrack {
    pub fn new(rows: Vec<Vec2>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ConfigInvalid("velocity track needs at least one frame".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::ConfigInvalid("velocity track has non-finite entries".into()));
        }
        Ok(Self { rows })
    }

    /// The same velocity in each of `frames` frames.
    pub fn constant(v: Vec2, frames: usize) -> Self {
        assert!(frames >= 1, "a track needs at least one frame");
        Self { rows: vec![v; frames] }
    }

    pub fn rows(&self) -> &[Vec2] {
        &self.rows
    }

    pub fn frames(&self) -> usize {
        self.rows.len()
    }

    pub fn mean(&self) -> Vec2 {
        let n = self.rows.len() as f64;
        let s = self.rows.iter().fold([0.0, 0.0], |a, r| [a[0] + r[0], a[1] + r[1]]);
        [s[0] / n, s[1] / n]
    }

    /// Track with `delta[n]` added to row n.
    pub fn perturbed(&self, delta: &[Vec2]) -> Result<Self> {
        if delta.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                actual: delta.len(),
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(delta)
            .map(|(r, d)| [r[0] + d[0], r[1] + d[1]])
            .collect();
        Self::new(rows)
    }
}

/// One frame's detections of the static reflectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub dopplers: Vec<f64>,
    pub angles: Vec<f64>,
}

/// Unit vector from boresight toward angle θ: `[sin θ, cos θ]`.
#[inline]
pub fn steering_vector(theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [s, c]
}

/// dp/dθ = `[cos θ, −sin θ]`.
#[inline]
pub fn steering_derivative(theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c, -s]
}

/// Rows `(2/λ) p(φᵢ)ᵀ`; the noiseless Doppler of a static reflector is
/// `G(φ) v`.
pub fn doppler_matrix(angles: &[f64], wavelength: f64) -> Vec<Vec2> {
    let scale = 2.0 / wavelength;
    angles
        .iter()
        .map(|&a| {
            let p = steering_vector(a);
            [scale * p[0], scale * p[1]]
        })
        .collect()
}

/// Noiseless Doppler of each reflector for ego velocity `v`.
pub fn true_dopplers(angles: &[f64], v: Vec2, wavelength: f64) -> Vec<f64> {
    doppler_matrix(angles, wavelength)
        .into_iter()
        .map(|row| dot(row, v))
        .collect()
}

/// Draws one frame of noisy Doppler/angle detections.
///
/// Measured angles are not clamped to the field of view.
pub fn simulate_frame_detections<R: Rng + ?Sized>(
    scene: &Scene,
    v: Vec2,
    config: &RadarConfig,
    rng: &mut R,
) -> FrameDetections {
    let lambda = config.wavelength();
    let k = scene.reflector_angles.len();
    let mut dopplers = Vec::with_capacity(k);
    let mut angles = Vec::with_capacity(k);
    for &phi in &scene.reflector_angles {
        let p = steering_vector(phi);
        let f = 2.0 / lambda * dot(p, v);
        let nf: f64 = rng.sample(StandardNormal);
        let na: f64 = rng.sample(StandardNormal);
        dopplers.push(f + config.sigma_f * nf);
        angles.push(phi + config.sigma_phi * na);
    }
    FrameDetections { dopplers, angles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialStreams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_6, PI};

    const LAMBDA_77: f64 = SPEED_OF_LIGHT / 77e9;

    #[test]
    fn steering_examples() {
        assert_eq!(steering_vector(0.0), [0.0, 1.0]);
        let p = steering_vector(FRAC_PI_2);
        assert_relative_eq!(p[0], 1.0);
        assert!(p[1].abs() < 1e-16);
        let p = steering_vector(FRAC_PI_6);
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p[1], 3f64.sqrt() / 2.0, epsilon = 1e-15);

        assert_eq!(steering_derivative(0.0), [1.0, -0.0]);
        let d = steering_derivative(FRAC_PI_2);
        assert!(d[0].abs() < 1e-16);
        assert_relative_eq!(d[1], -1.0);
        assert!(dot(steering_vector(0.3), steering_derivative(0.3)).abs() < 1e-15);
    }

    #[test]
    fn wavelength_from_carrier() {
        let cfg = RadarConfig::default();
        assert_relative_eq!(cfg.wavelength(), 0.0038934, max_relative = 1e-4);
    }

    #[test]
    fn doppler_matrix_examples() {
        // 2/λ at 77 GHz
        let g = doppler_matrix(&[0.0], LAMBDA_77);
        assert_eq!(g[0][0], 0.0);
        assert_relative_eq!(g[0][1], 513.69, max_relative = 1e-4);

        let lambda = 0.5;
        let g = doppler_matrix(&[FRAC_PI_2, 0.0], lambda);
        assert_relative_eq!(g[0][0], 4.0);
        assert!(g[0][1].abs() < 1e-15);
        assert_eq!(g[1], [0.0, 4.0]);

        let f = true_dopplers(&[0.0], [0.0, 10.0], LAMBDA_77);
        assert_relative_eq!(f[0], 5136.9, max_relative = 1e-4);
    }

    #[test]
    fn zero_noise_detections_are_exact() {
        let cfg = RadarConfig::default().noiseless();
        let scene = Scene::new(vec![-0.4, 0.1, 0.9], 0.5, 20.0);
        let v = [1.5, 9.0];
        let det = simulate_frame_detections(&scene, v, &cfg, &mut TrialStreams::from_seed(3).frame(0));
        assert_eq!(det.angles, scene.reflector_angles);
        for (a, b) in det
            .dopplers
            .iter()
            .zip(true_dopplers(&scene.reflector_angles, v, cfg.wavelength()))
        {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn detections_repeat_under_fixed_stream() {
        let cfg = RadarConfig::default();
        let scene = Scene::new(vec![-0.4, 0.1, 0.9], 0.5, 20.0);
        let s = TrialStreams::new(11, 0, 4, 17);
        let a = simulate_frame_detections(&scene, [0.0, 10.0], &cfg, &mut s.frame(2));
        let b = simulate_frame_detections(&scene, [0.0, 10.0], &cfg, &mut s.frame(2));
        assert_eq!(a, b);
        let c = simulate_frame_detections(&scene, [0.0, 10.0], &cfg, &mut s.frame(3));
        assert_ne!(a, c);
    }

    #[test]
    fn injected_angle_noise_has_requested_std() {
        let cfg = RadarConfig {
            sigma_f: 0.0,
            ..RadarConfig::default()
        };
        let scene = Scene::new(vec![0.2; 1000], 0.0, 10.0);
        let mut rng = TrialStreams::from_seed(99).frame(0);
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for _ in 0..100 {
            let det = simulate_frame_detections(&scene, [0.0, 10.0], &cfg, &mut rng);
            for a in det.angles {
                sum_sq += (a - 0.2).powi(2);
                count += 1;
            }
        }
        let std = (sum_sq / count as f64).sqrt();
        assert!((std / cfg.sigma_phi - 1.0).abs() < 0.02, "std {std}");
    }

    #[test]
    fn config_validation() {
        assert!(RadarConfig::default().validate().is_ok());
        for cfg in [
            RadarConfig {
                frame_duration: 0.0,
                ..RadarConfig::default()
            },
            RadarConfig {
                field_of_view: (0.5, 0.2),
                ..RadarConfig::default()
            },
            RadarConfig {
                sigma_phi: -1.0,
                ..RadarConfig::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn uniform_angles_are_cell_midpoints() {
        let a = uniform_angles(4, (-FRAC_PI_2, FRAC_PI_2));
        assert_relative_eq!(a[0], -3.0 * PI / 8.0);
        assert_relative_eq!(a[3], 3.0 * PI / 8.0);
    }

    proptest! {
        #[test]
        fn steering_unit_and_orthogonal(theta in -10.0f64..10.0) {
            let p = steering_vector(theta);
            let d = steering_derivative(theta);
            prop_assert!((dot(p, p).sqrt() - 1.0).abs() < 1e-12);
            prop_assert!(dot(p, d).abs() < 1e-12);
        }

        #[test]
        fn doppler_rows_are_scaled_steering(angles in prop::collection::vec(-1.6f64..1.6, 1..20), lambda in 1e-3f64..1.0) {
            let g = doppler_matrix(&angles, lambda);
            for (row, a) in g.iter().zip(&angles) {
                let p = steering_vector(*a);
                prop_assert!((row[0] - 2.0 / lambda * p[0]).abs() <= 1e-15 * 2.0 / lambda);
                prop_assert!((row[1] - 2.0 / lambda * p[1]).abs() <= 1e-15 * 2.0 / lambda);
            }
        }
    }
}
