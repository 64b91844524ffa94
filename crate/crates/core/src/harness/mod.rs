//! Config-driven Monte-Carlo experiments.
//!
//! Every trial draws its randomness from [`TrialStreams`] keyed by
//! `(seed, sweep index, θ index, trial index)`. Trials run in parallel on the
//! current rayon pool, results are collected in index order and reduced
//! sequentially, so outputs are identical for any worker count.

pub mod csv;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{angle_variance_asymptotic, angle_variance_full, lemma_polynomials, LemmaReport};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::radar::{simulate_frame_detections, uniform_angles, FrameResponse, RadarConfig, Scene, VelocityTrack};
use crate::rng::TrialStreams;
use crate::sar::{beamwidth_3db, estimate_sar_angle};
use crate::velocity::{estimate_velocity, velocity_covariance_analytical};

/// How reflector angles are chosen for each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneMode {
    /// Fresh uniform draw over the field of view per trial.
    #[default]
    Random,
    /// Fixed equally spaced angles (cell midpoints of the field of view).
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    SigmaPhiDeg,
    SpeedMps,
    NumTargets,
    NumFrames,
    ApertureM,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SigmaPhiDeg => "sigma_phi_deg",
            Self::SpeedMps => "speed_mps",
            Self::NumTargets => "num_targets",
            Self::NumFrames => "num_frames",
            Self::ApertureM => "aperture_m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub name: SweepParam,
    pub values: Vec<f64>,
}

/// Experiment description, read from TOML. Angles are in degrees here and
/// converted to radians on the way into the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub carrier_hz: f64,
    pub frame_duration_s: f64,
    pub sigma_phi_deg: f64,
    pub sigma_f_hz: f64,
    pub snr_db: f64,
    pub speed_mps: f64,
    /// Direction of motion measured from boresight; 0 is pure y-motion.
    pub heading_deg: f64,
    pub num_targets: usize,
    pub num_frames: usize,
    pub theta_start_deg: f64,
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
    pub trials: usize,
    pub seed: u64,
    /// Scenes averaged for the analytical curve of random-scene experiments.
    pub analysis_scenes: usize,
    pub scene: SceneMode,
    pub frame_response: FrameResponse,
    pub target_range_m: f64,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 77e9,
            frame_duration_s: 0.02,
            sigma_phi_deg: 1.0,
            sigma_f_hz: 50.0,
            snr_db: 20.0,
            speed_mps: 10.0,
            heading_deg: 0.0,
            num_targets: 5,
            num_frames: 5,
            theta_start_deg: 5.0,
            theta_stop_deg: 85.0,
            theta_step_deg: 5.0,
            trials: 1000,
            seed: 1,
            analysis_scenes: 100,
            scene: SceneMode::Random,
            frame_response: FrameResponse::Integrated,
            target_range_m: 20.0,
            sweep: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.radar().validate()?;
        if !(self.speed_mps >= 0.0 && self.speed_mps.is_finite()) {
            return Err(invalid("speed_mps must be non-negative"));
        }
        if !self.heading_deg.is_finite() {
            return Err(invalid("heading_deg must be finite"));
        }
        if self.num_frames < 1 {
            return Err(invalid("num_frames must be at least 1"));
        }
        if self.trials < 1 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(self.theta_step_deg > 0.0) {
            return Err(invalid("theta_step_deg must be positive"));
        }
        if !(self.theta_stop_deg >= self.theta_start_deg) {
            return Err(invalid("theta_stop_deg must not be below theta_start_deg"));
        }
        if !(self.target_range_m > 0.0) {
            return Err(invalid("target_range_m must be positive"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values is empty"));
            }
            let positive = sweep.values.iter().all(|v| *v > 0.0 && v.is_finite());
            let ok = match sweep.name {
                SweepParam::SigmaPhiDeg => sweep.values.iter().all(|v| *v >= 0.0 && v.is_finite()),
                _ => positive,
            };
            if !ok {
                return Err(invalid(format!(
                    "sweep values for {} must be positive",
                    sweep.name.name()
                )));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn radar(&self) -> RadarConfig {
        RadarConfig {
            carrier_frequency: self.carrier_hz,
            frame_duration: self.frame_duration_s,
            sigma_phi: self.sigma_phi_deg.to_radians(),
            sigma_f: self.sigma_f_hz,
            snr_db: self.snr_db,
            frame_response: self.frame_response,
            ..RadarConfig::default()
        }
    }

    pub fn velocity(&self) -> Vec2 {
        let h = self.heading_deg.to_radians();
        [self.speed_mps * h.sin(), self.speed_mps * h.cos()]
    }

    pub fn track(&self) -> VelocityTrack {
        VelocityTrack::constant(self.velocity(), self.num_frames)
    }

    pub fn theta_grid_deg(&self) -> Vec<f64> {
        let n = ((self.theta_stop_deg - self.theta_start_deg) / self.theta_step_deg + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.theta_start_deg + i as f64 * self.theta_step_deg)
            .collect()
    }

    /// `(sweep value, config with that value applied)`; a config without a
    /// sweep yields one point with a NaN sweep value.
    pub fn sweep_points(&self) -> Result<Vec<(f64, ExperimentConfig)>> {
        match &self.sweep {
            None => Ok(vec![(f64::NAN, self.clone())]),
            Some(sweep) => sweep
                .values
                .iter()
                .map(|&v| self.with_param(sweep.name, v).map(|c| (v, c)))
                .collect(),
        }
    }

    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        c.sweep = None;
        match param {
            SweepParam::SigmaPhiDeg => c.sigma_phi_deg = value,
            SweepParam::SpeedMps => c.speed_mps = value,
            SweepParam::NumTargets => c.num_targets = value.round() as usize,
            SweepParam::NumFrames => c.num_frames = value.round() as usize,
            SweepParam::ApertureM => c.num_frames = frames_for_aperture(value, c.speed_mps, c.frame_duration_s)?,
        }
        c.validate()?;
        Ok(c)
    }
}

/// N such that `speed · T_f · N` is closest to the aperture, at least 1.
pub fn frames_for_aperture(aperture_m: f64, speed_mps: f64, frame_duration_s: f64) -> Result<usize> {
    let step = speed_mps * frame_duration_s;
    if !(step > 0.0) {
        return Err(invalid("aperture sweeps need a positive speed"));
    }
    Ok(((aperture_m / step).round() as usize).max(1))
}

/// Runs `f` on a dedicated pool with `threads` workers (all cores if None).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(invalid("thread count must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| invalid(e.to_string()))?;
    Ok(pool.install(f))
}

fn draw_scene(cfg: &ExperimentConfig, radar: &RadarConfig, streams: &TrialStreams, theta: f64) -> Scene {
    match cfg.scene {
        SceneMode::Random => Scene::random(
            &mut streams.scene(),
            cfg.num_targets,
            radar.field_of_view,
            theta,
            cfg.target_range_m,
        ),
        SceneMode::Uniform => Scene::uniform_spread(cfg.num_targets, radar.field_of_view, theta, cfg.target_range_m),
    }
}

/// Failures that count against a trial rather than aborting the run.
fn is_trial_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularGeometry { .. } | Error::InsufficientDetections(_) | Error::DegenerateGeometry
    )
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|x| x * x).sum::<f64>() / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRow {
    pub sweep_value: f64,
    pub theta_deg: f64,
    pub rmse_sim_deg: f64,
    pub rmse_analysis_deg: f64,
    pub rmse_asymptotic_deg: f64,
    pub trials_used: usize,
    pub failed_trials: usize,
}

/// Simulated and predicted SAR angle RMSE over the θ grid for every sweep
/// value.
pub fn run_rmse_sweep(config: &ExperimentConfig) -> Result<Vec<RmseRow>> {
    config.validate()?;
    if config.num_targets < 2 {
        return Err(invalid("num_targets must be at least 2"));
    }
    let mut rows = Vec::new();
    for (si, (sweep_value, cfg)) in config.sweep_points()?.into_iter().enumerate() {
        if cfg.num_targets < 2 {
            return Err(invalid("num_targets must be at least 2"));
        }
        let radar = cfg.radar();
        let track = cfg.track();
        let v = cfg.velocity();
        for (ti, theta_deg) in cfg.theta_grid_deg().into_iter().enumerate() {
            let theta = theta_deg.to_radians();
            let outcomes: Vec<Result<f64>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let streams = TrialStreams::new(cfg.seed, si as u64, ti as u64, t as u64);
                    let scene = draw_scene(&cfg, &radar, &streams, theta);
                    estimate_sar_angle(&scene, &track, &radar, &streams).map(|a| a - theta)
                })
                .collect();
            let mut errors = Vec::with_capacity(outcomes.len());
            let mut failed = 0;
            for o in outcomes {
                match o {
                    Ok(e) => errors.push(e),
                    Err(e) if is_trial_failure(&e) => failed += 1,
                    Err(e) => return Err(e),
                }
            }
            let rmse_sim = if errors.is_empty() { f64::NAN } else { rms(&errors) };

            let scenes = match cfg.scene {
                SceneMode::Random => cfg.analysis_scenes.max(1),
                SceneMode::Uniform => 1,
            };
            let variances: Vec<Result<f64>> = (0..scenes)
                .into_par_iter()
                .map(|s| {
                    let streams = TrialStreams::new(cfg.seed, si as u64, ti as u64, s as u64);
                    let scene = match cfg.scene {
                        SceneMode::Random => Scene::random(
                            &mut streams.analysis(),
                            cfg.num_targets,
                            radar.field_of_view,
                            theta,
                            cfg.target_range_m,
                        ),
                        SceneMode::Uniform => draw_scene(&cfg, &radar, &streams, theta),
                    };
                    angle_variance_full(&track, theta, &scene.reflector_angles, v, &radar).map(|p| p.variance)
                })
                .collect();
            let ok: Vec<f64> = variances.into_iter().filter_map(|r| r.ok()).collect();
            let rmse_analysis = if ok.is_empty() {
                f64::NAN
            } else {
                (ok.iter().sum::<f64>() / ok.len() as f64).sqrt()
            };
            let rmse_asym = angle_variance_asymptotic(theta, v, cfg.num_targets, cfg.num_frames, &radar)
                .map(|p| p.std_dev())
                .unwrap_or(f64::NAN);

            rows.push(RmseRow {
                sweep_value,
                theta_deg,
                rmse_sim_deg: rmse_sim.to_degrees(),
                rmse_analysis_deg: rmse_analysis.to_degrees(),
                rmse_asymptotic_deg: rmse_asym.to_degrees(),
                trials_used: errors.len(),
                failed_trials: failed,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionRow {
    pub theta_deg: f64,
    pub aperture_m: f64,
    /// Infinite where the synthetic array has no angular response.
    pub beamwidth_deg: f64,
}

/// Noiseless 3 dB beamwidth over the θ grid for each synthetic aperture.
pub fn run_resolution_sweep(apertures_m: &[f64], config: &ExperimentConfig) -> Result<Vec<ResolutionRow>> {
    config.validate()?;
    let radar = config.radar().noiseless();
    let mut rows = Vec::new();
    for &aperture in apertures_m {
        if !(aperture > 0.0) {
            return Err(invalid("apertures must be positive"));
        }
        let n = frames_for_aperture(aperture, config.speed_mps, config.frame_duration_s)?;
        let track = VelocityTrack::constant(config.velocity(), n);
        let thetas = config.theta_grid_deg();
        let widths: Vec<Result<f64>> = thetas
            .par_iter()
            .map(|&t| match beamwidth_3db(&track, t.to_radians(), &radar) {
                Err(Error::DegenerateGeometry) => Ok(f64::INFINITY),
                r => r,
            })
            .collect();
        for (theta_deg, w) in thetas.into_iter().zip(widths) {
            rows.push(ResolutionRow {
                theta_deg,
                aperture_m: aperture,
                beamwidth_deg: w?.to_degrees(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub theta_deg: f64,
    pub sweep_value: f64,
    /// σ_φ over the predicted SAR angle std.
    pub gain_ratio: f64,
    /// Predicted SAR angle std over the known-velocity 3 dB beamwidth.
    pub degradation_ratio: f64,
}

/// Closed-form comparison of the SAR angle accuracy against the physical
/// array (σ_φ) and against the SAR resolution, using equally spaced
/// reflectors.
pub fn run_gain_report(config: &ExperimentConfig) -> Result<Vec<GainRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for (sweep_value, cfg) in config.sweep_points()? {
        let radar = cfg.radar();
        if !(radar.sigma_phi > 0.0) {
            return Err(invalid("gain report needs sigma_phi_deg > 0"));
        }
        let track = cfg.track();
        let v = cfg.velocity();
        let angles = uniform_angles(cfg.num_targets, radar.field_of_view);
        for theta_deg in cfg.theta_grid_deg() {
            let theta = theta_deg.to_radians();
            let std = angle_variance_full(&track, theta, &angles, v, &radar)?.std_dev();
            let bw = beamwidth_3db(&track, theta, &radar.noiseless())?;
            rows.push(GainRow {
                theta_deg,
                sweep_value,
                gain_ratio: radar.sigma_phi / std,
                degradation_ratio: std / bw,
            });
        }
    }
    Ok(rows)
}

/// Settings covered by the velocity-covariance report.
#[derive(Debug, Clone, PartialEq)]
pub struct VelcovGrid {
    pub sigma_phi_deg: Vec<f64>,
    pub speeds_mps: Vec<f64>,
    pub num_targets: Vec<usize>,
}

impl VelcovGrid {
    /// Single point at the config's values, widened along the swept axis.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let mut grid = Self {
            sigma_phi_deg: vec![cfg.sigma_phi_deg],
            speeds_mps: vec![cfg.speed_mps],
            num_targets: vec![cfg.num_targets],
        };
        if let Some(sweep) = &cfg.sweep {
            match sweep.name {
                SweepParam::SigmaPhiDeg => grid.sigma_phi_deg = sweep.values.clone(),
                SweepParam::SpeedMps => grid.speeds_mps = sweep.values.clone(),
                SweepParam::NumTargets => grid.num_targets = sweep.values.iter().map(|v| v.round() as usize).collect(),
                SweepParam::NumFrames | SweepParam::ApertureM => {}
            }
        }
        grid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelcovRow {
    pub sigma_phi_deg: f64,
    pub speed_mps: f64,
    pub num_targets: usize,
    /// √trace of the sample covariance of v̂ − v.
    pub std_sim_mps: f64,
    /// √trace of the analytical covariance, averaged over the same scenes.
    pub std_analysis_mps: f64,
}

/// Monte-Carlo single-frame velocity error against the analytical
/// covariance.
pub fn run_velocity_cov_report(config: &ExperimentConfig, grid: &VelcovGrid) -> Result<Vec<VelcovRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &sigma_phi_deg in &grid.sigma_phi_deg {
        for &speed in &grid.speeds_mps {
            for &k in &grid.num_targets {
                if k < 2 {
                    return Err(invalid("num_targets must be at least 2"));
                }
                let mut cfg = config.clone();
                cfg.sigma_phi_deg = sigma_phi_deg;
                cfg.speed_mps = speed;
                cfg.num_targets = k;
                cfg.sweep = None;
                cfg.validate()?;
                let radar = cfg.radar();
                let v = cfg.velocity();
                let lambda = radar.wavelength();
                let combo = index;
                index += 1;

                let outcomes: Vec<Result<(Vec2, f64)>> = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let streams = TrialStreams::new(cfg.seed, combo, 0, t as u64);
                        let scene = draw_scene(&cfg, &radar, &streams, 0.0);
                        let det = simulate_frame_detections(&scene, v, &radar, &mut streams.frame(0));
                        let est = estimate_velocity(&det, lambda)?;
                        let cov = velocity_covariance_analytical(&scene.reflector_angles, v, &radar)?;
                        Ok(([est.v_hat[0] - v[0], est.v_hat[1] - v[1]], cov.trace()))
                    })
                    .collect();
                let mut errs = Vec::with_capacity(outcomes.len());
                let mut trace_sum = 0.0;
                for o in outcomes {
                    match o {
                        Ok((e, tr)) => {
                            errs.push(e);
                            trace_sum += tr;
                        }
                        Err(e) if is_trial_failure(&e) => {}
                        Err(e) => return Err(e),
                    }
                }
                let m = errs.len() as f64;
                let (std_sim, std_an) = if errs.len() < 2 {
                    (f64::NAN, f64::NAN)
                } else {
                    let mean = errs.iter().fold([0.0, 0.0], |a, e| [a[0] + e[0] / m, a[1] + e[1] / m]);
                    let ss: f64 = errs
                        .iter()
                        .map(|e| (e[0] - mean[0]).powi(2) + (e[1] - mean[1]).powi(2))
                        .sum();
                    ((ss / (m - 1.0)).sqrt(), (trace_sum / m).sqrt())
                };
                rows.push(VelcovRow {
                    sigma_phi_deg,
                    speed_mps: speed,
                    num_targets: k,
                    std_sim_mps: std_sim,
                    std_analysis_mps: std_an,
                });
            }
        }
    }
    Ok(rows)
}

/// Lemma polynomials for every N.
pub fn run_lemma_check(n_values: &[usize]) -> Result<Vec<LemmaReport>> {
    n_values.iter().map(|&n| lemma_polynomials(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), cfg);
    }

    #[test]
    fn parses_dotted_sweep_keys() {
        let cfg = ExperimentConfig::from_toml_str(
            "speed_mps = 3.0\nsweep.name = \"num_frames\"\nsweep.values = [2, 5, 10]\nscene = \"uniform\"\n",
        )
        .unwrap();
        let sweep = cfg.sweep.as_ref().unwrap();
        assert_eq!(sweep.name, SweepParam::NumFrames);
        assert_eq!(sweep.values, vec![2.0, 5.0, 10.0]);
        assert_eq!(cfg.scene, SceneMode::Uniform);
        let pts = cfg.sweep_points().unwrap();
        assert_eq!(pts[2].1.num_frames, 10);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "trials = 0",
            "theta_step_deg = 0.0",
            "frame_duration_s = -1.0",
            "unknown_key = 1",
            "sweep.name = \"speed_mps\"\nsweep.values = [-3.0]",
            "sweep.name = \"wavelength\"\nsweep.values = [1.0]",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml_str(text), Err(Error::ConfigInvalid(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn theta_grid_is_inclusive() {
        let g = ExperimentConfig::default().theta_grid_deg();
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 5.0);
        assert_eq!(g[16], 85.0);
    }

    #[test]
    fn aperture_maps_to_frames() {
        assert_eq!(frames_for_aperture(1.0, 10.0, 0.02).unwrap(), 5);
        assert_eq!(frames_for_aperture(2.5, 10.0, 0.02).unwrap(), 13);
        assert_eq!(frames_for_aperture(3.0, 10.0, 0.02).unwrap(), 15);
        assert_eq!(frames_for_aperture(0.01, 10.0, 0.02).unwrap(), 1);
    }

    #[test]
    fn heading_sets_velocity_direction() {
        let cfg = ExperimentConfig {
            heading_deg: 90.0,
            ..ExperimentConfig::default()
        };
        let v = cfg.velocity();
        assert!((v[0] - 10.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }
}
