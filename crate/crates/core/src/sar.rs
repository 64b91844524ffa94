//! Coherent integration of per-frame matched-filter outputs into a synthetic
//! aperture, angle-hypothesis scanning and range-angle imaging.
//!
//! Frame outputs are modeled at the phasor level. The target's phasor in
//! frame n is `exp(+j 4π/λ r_n)` and integration compensates with
//! `exp(−j 4π/λ r̃_n)`, where r and r̃ are the true and hypothesized range
//! migrations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, Vec2};
use crate::radar::{simulate_frame_detections, steering_vector, FrameResponse, RadarConfig, Scene, VelocityTrack};
use crate::rng::TrialStreams;
use crate::velocity::{estimate_velocity, tangential_velocity};

/// Target returns of N frames at the true target parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePhasors {
    /// Noise-free target phasors `exp(+j 4π/λ r_n)`.
    pub signal: Vec<Complex64>,
    /// Additive receiver noise per frame.
    pub noise: Vec<Complex64>,
    /// True range rate `p(θ)·v_n` in each frame (m/s); sets the Doppler
    /// mismatch under [`FrameResponse::Integrated`].
    pub range_rates: Vec<f64>,
    /// Noise std per complex sample relative to the unit signal.
    pub noise_scale: f64,
}

impl FramePhasors {
    pub fn frames(&self) -> usize {
        self.signal.len()
    }

    /// `y_n` evaluated at a perfectly matched hypothesis.
    pub fn values(&self) -> Vec<Complex64> {
        self.signal.iter().zip(&self.noise).map(|(s, w)| s + w).collect()
    }
}

/// `r_n = T_f Σ_{k ≤ n} p(θ)·v_k`.
pub fn range_migration(track: &VelocityTrack, theta: f64, frame_duration: f64) -> Vec<f64> {
    let p = steering_vector(theta);
    let mut acc = 0.0;
    track
        .rows()
        .iter()
        .map(|&v| {
            acc += frame_duration * dot(p, v);
            acc
        })
        .collect()
}

fn range_rates(track: &VelocityTrack, theta: f64) -> Vec<f64> {
    let p = steering_vector(theta);
    track.rows().iter().map(|&v| dot(p, v)).collect()
}

/// Noise-free phasors of a point target at angle θ.
pub fn noiseless_frame_phasors(track: &VelocityTrack, theta: f64, config: &RadarConfig) -> FramePhasors {
    let k = 4.0 * PI / config.wavelength();
    let signal: Vec<Complex64> = range_migration(track, theta, config.frame_duration)
        .into_iter()
        .map(|r| Complex64::from_polar(1.0, k * r))
        .collect();
    FramePhasors {
        noise: vec![Complex64::new(0.0, 0.0); signal.len()],
        signal,
        range_rates: range_rates(track, theta),
        noise_scale: 0.0,
    }
}

/// Target phasors plus circular complex Gaussian noise of power
/// `10^(−snr_db/10)` per frame.
pub fn synthesize_frame_phasors<R: Rng + ?Sized>(
    track: &VelocityTrack,
    theta: f64,
    config: &RadarConfig,
    rng: &mut R,
) -> FramePhasors {
    let mut phasors = noiseless_frame_phasors(track, theta, config);
    let power = config.noise_power();
    if power > 0.0 {
        let s = (power / 2.0).sqrt();
        for w in &mut phasors.noise {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *w = Complex64::new(s * re, s * im);
        }
        phasors.noise_scale = power.sqrt();
    }
    phasors
}

/// Integration hypothesis: range migration and range rate per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub ranges: Vec<f64>,
    pub range_rates: Vec<f64>,
}

impl Hypothesis {
    pub fn new(track: &VelocityTrack, theta: f64, frame_duration: f64) -> Self {
        Self {
            ranges: range_migration(track, theta, frame_duration),
            range_rates: range_rates(track, theta),
        }
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        let a = PI * x;
        a.sin() / a
    }
}

/// `(1/N)|Σ_n y_n(hyp) exp(−j 4π/λ r̃_n)|`.
pub fn integrate(phasors: &FramePhasors, hyp: &Hypothesis, config: &RadarConfig) -> Result<f64> {
    let n = phasors.frames();
    if hyp.ranges.len() != n || hyp.range_rates.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: hyp.ranges.len(),
        });
    }
    let lambda = config.wavelength();
    let k = 4.0 * PI / lambda;
    let t = config.frame_duration;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut s = phasors.signal[i];
        if config.frame_response == FrameResponse::Integrated {
            let df = 2.0 / lambda * (phasors.range_rates[i] - hyp.range_rates[i]);
            s *= Complex64::from_polar(sinc(df * t), -PI * df * t);
        }
        acc += (s + phasors.noise[i]) * Complex64::from_polar(1.0, -k * hyp.ranges[i]);
    }
    Ok(acc.norm() / n as f64)
}

/// Coherent SAR output for the angle hypothesis θ̃ under velocity track Ṽ.
pub fn coherent_sum(
    phasors: &FramePhasors,
    v_hyp: &VelocityTrack,
    theta_hyp: f64,
    config: &RadarConfig,
) -> Result<f64> {
    if v_hyp.frames() != phasors.frames() {
        return Err(Error::DimensionMismatch {
            expected: phasors.frames(),
            actual: v_hyp.frames(),
        });
    }
    integrate(
        phasors,
        &Hypothesis::new(v_hyp, theta_hyp, config.frame_duration),
        config,
    )
}

/// Inclusive uniform grid of angle hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AngleGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::ConfigInvalid("grid step must be positive".into()));
        }
        if !(start.is_finite() && stop.is_finite() && stop >= start) {
            return Err(Error::ConfigInvalid("grid interval must be nonempty".into()));
        }
        Ok(Self { start, stop, step })
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Rough 3 dB width of the synthetic array at θ: `λ / (2 T_f |Σ v_t,n|)`.
pub fn nominal_beamwidth(track: &VelocityTrack, theta: f64, config: &RadarConfig) -> Result<f64> {
    let aperture: f64 =
        config.frame_duration * track.rows().iter().map(|&v| tangential_velocity(v, theta)).sum::<f64>();
    let speed: f64 = track.rows().iter().map(|v| v[0].hypot(v[1])).sum::<f64>() * config.frame_duration;
    if !(aperture.abs() > 1e-9 * speed) || speed == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(config.wavelength() / (2.0 * aperture.abs()))
}

/// Default search window for a target near θ:
///
/// * half-width max(5°, 20 beamwidths), step beamwidth/20;
/// * clipped to the target's side of the mean motion direction, since a
///   straight aperture cannot tell θ from its mirror image about that line.
pub fn default_scan_grid(track: &VelocityTrack, theta: f64, config: &RadarConfig) -> Result<AngleGrid> {
    let bw = nominal_beamwidth(track, theta, config)?;
    let half = 5f64.to_radians().max(20.0 * bw);
    let step = bw / 20.0;
    let mut lo = theta - half;
    let mut hi = theta + half;

    let m = track.mean();
    let heading = m[0].atan2(m[1]);
    // wrap θ − h into (−π, π]
    let rel = (theta - heading + PI).rem_euclid(2.0 * PI) - PI;
    let margin = step;
    if rel > 0.0 {
        lo = lo.max(theta - rel + margin);
        hi = hi.min(theta - rel + PI - margin);
    } else {
        hi = hi.min(theta - rel - margin);
        lo = lo.max(theta - rel - PI + margin);
    }
    AngleGrid::new(lo, hi.max(lo), step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarScanResult {
    pub grid_angles: Vec<f64>,
    pub intensities: Vec<f64>,
    /// Parabolically refined peak location.
    pub peak_angle: f64,
    /// Largest sampled intensity.
    pub peak_intensity: f64,
}

/// Vertex offset of the parabola through three equally spaced samples, in
/// units of the spacing, clamped to ±½.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

pub fn angle_scan(
    phasors: &FramePhasors,
    v_hyp: &VelocityTrack,
    grid: &AngleGrid,
    config: &RadarConfig,
) -> Result<SarScanResult> {
    let grid_angles = grid.points();
    let intensities = grid_angles
        .iter()
        .map(|&a| coherent_sum(phasors, v_hyp, a, config))
        .collect::<Result<Vec<_>>>()?;
    let (imax, &peak_intensity) =
        intensities.iter().enumerate().fold(
            (0, &f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
    let mut peak_angle = grid_angles[imax];
    if imax > 0 && imax + 1 < intensities.len() {
        peak_angle += grid.step * parabolic_offset(intensities[imax - 1], peak_intensity, intensities[imax + 1]);
    }
    Ok(SarScanResult {
        grid_angles,
        intensities,
        peak_angle,
        peak_intensity,
    })
}

/// Per-frame least-squares velocity estimates from simulated detections of
/// the scene's static reflectors.
pub fn estimate_track(
    scene: &Scene,
    v_true: &VelocityTrack,
    config: &RadarConfig,
    streams: &TrialStreams,
) -> Result<VelocityTrack> {
    let lambda = config.wavelength();
    let rows = v_true
        .rows()
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let det = simulate_frame_detections(scene, v, config, &mut streams.frame(n));
            estimate_velocity(&det, lambda).map(|e| e.v_hat)
        })
        .collect::<Result<Vec<Vec2>>>()?;
    VelocityTrack::new(rows)
}

/// One Monte-Carlo trial: estimate velocities from the reflectors, integrate
/// the target with them and return the SAR peak angle.
pub fn estimate_sar_angle(
    scene: &Scene,
    v_true: &VelocityTrack,
    config: &RadarConfig,
    streams: &TrialStreams,
) -> Result<f64> {
    let v_hat = estimate_track(scene, v_true, config, streams)?;
    let phasors = synthesize_frame_phasors(v_true, scene.target_angle, config, &mut streams.phasor_noise());
    let grid = default_scan_grid(&v_hat, scene.target_angle, config)?;
    Ok(angle_scan(&phasors, &v_hat, &grid, config)?.peak_angle)
}

/// Full width of the noiseless main lobe around θ at 1/√2 of the peak
/// amplitude (half power).
pub fn beamwidth_3db(track: &VelocityTrack, theta: f64, config: &RadarConfig) -> Result<f64> {
    let guess = nominal_beamwidth(track, theta, config)?;
    let phasors = noiseless_frame_phasors(track, theta, config);
    let level = std::f64::consts::FRAC_1_SQRT_2 * coherent_sum(&phasors, track, theta, config)?;
    let below = |a: f64| coherent_sum(&phasors, track, a, config).map(|i| i < level);

    let edge = |dir: f64| -> Result<f64> {
        let step = guess / 8.0;
        let mut inside = 0.0;
        let mut outside = step;
        while !below(theta + dir * outside)? {
            inside = outside;
            outside += step;
            if outside > PI {
                return Err(Error::DegenerateGeometry);
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if below(theta + dir * mid)? {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };
    Ok(edge(1.0)? + edge(-1.0)?)
}

/// Range-angle image settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSettings {
    /// Range resolution of the idealized matched filter (m).
    pub range_resolution: f64,
    /// Lowest value written to the image (dB).
    pub floor_db: f64,
}

impl Default for ImageSettings {
    fn default() -> Self {
        Self {
            range_resolution: 0.3,
            floor_db: -80.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarImage {
    /// m
    pub range_axis: Vec<f64>,
    /// rad
    pub angle_axis: Vec<f64>,
    /// `intensity_db[range][angle]`
    pub intensity_db: Vec<Vec<f64>>,
}

impl SarImage {
    /// `(range, angle, dB)` of the brightest cell.
    pub fn peak(&self) -> (f64, f64, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.intensity_db.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        (self.range_axis[best.0], self.angle_axis[best.1], best.2)
    }
}

/// Noiseless image of the target and every ranged reflector, integrated
/// with the hypothesis track.
pub fn sar_image(
    scene: &Scene,
    v_true: &VelocityTrack,
    v_hyp: &VelocityTrack,
    config: &RadarConfig,
    range_axis: &[f64],
    angle_axis: &[f64],
    settings: &ImageSettings,
) -> Result<SarImage> {
    let ranges = scene.reflector_ranges.as_ref().ok_or(Error::MissingRanges)?;
    if ranges.len() != scene.reflector_angles.len() {
        return Err(Error::DimensionMismatch {
            expected: scene.reflector_angles.len(),
            actual: ranges.len(),
        });
    }
    if !(settings.range_resolution > 0.0) {
        return Err(Error::ConfigInvalid("range resolution must be positive".into()));
    }
    let points: Vec<(f64, f64)> = std::iter::once((scene.target_range, scene.target_angle))
        .chain(ranges.iter().copied().zip(scene.reflector_angles.iter().copied()))
        .collect();

    let mut power = vec![vec![0.0; angle_axis.len()]; range_axis.len()];
    for &(range, angle) in &points {
        let phasors = noiseless_frame_phasors(v_true, angle, config);
        let angular = angle_axis
            .iter()
            .map(|&a| coherent_sum(&phasors, v_hyp, a, config).map(|i| i * i))
            .collect::<Result<Vec<f64>>>()?;
        for (row, &r) in power.iter_mut().zip(range_axis) {
            let kernel = sinc((r - range) / settings.range_resolution).powi(2);
            for (cell, a) in row.iter_mut().zip(&angular) {
                *cell += kernel * a;
            }
        }
    }
    let intensity_db = power
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|p| (10.0 * p.log10()).max(settings.floor_db))
                .collect()
        })
        .collect();
    Ok(SarImage {
        range_axis: range_axis.to_vec(),
        angle_axis: angle_axis.to_vec(),
        intensity_db,
    })
}
