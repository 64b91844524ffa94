#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sarvel_core::harness::csv::{
    fmt_g9, write_gain, write_image, write_lemma, write_resolution, write_rmse, write_velcov, Provenance,
};
use sarvel_core::harness::{
    run_gain_report, run_lemma_check, run_resolution_sweep, run_rmse_sweep, run_velocity_cov_report, with_threads,
    ExperimentConfig, SweepParam, VelcovGrid,
};
use sarvel_core::radar::uniform_angles;
use sarvel_core::sar::ImageSettings;
use sarvel_core::{angle_variance_asymptotic, angle_variance_full, beamwidth_3db, sar_image, Scene, VelocityTrack};

/// Angle error of automotive SAR with radar-only ego-velocity estimation.
#[derive(Parser)]
#[command(name = "sarvel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (all cores if omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulated vs predicted SAR angle RMSE over the θ grid.
    Rmse,
    /// Known-velocity 3 dB beamwidth over the θ grid.
    Resolution {
        /// Synthetic apertures in meters (default: the aperture_m sweep, else 1, 2.5, 3).
        #[arg(long, value_delimiter = ',')]
        apertures: Vec<f64>,
    },
    /// SAR gain over the physical array and degradation relative to resolution.
    Gain,
    /// Single-frame velocity error, Monte-Carlo vs analytical.
    Velcov {
        #[arg(long, value_delimiter = ',')]
        sigma_phi_deg: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        speeds: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        targets: Vec<usize>,
    },
    /// Frame-count polynomials and ω(N).
    Lemma {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 5, 10, 21, 51, 101, 1001])]
        n: Vec<usize>,
    },
    /// Noiseless range-angle image with a constant velocity error.
    Image(ImageArgs),
    /// Closed-form prediction at one target angle.
    Predict {
        #[arg(long)]
        theta_deg: f64,
    },
}

#[derive(Args)]
struct ImageArgs {
    #[arg(long, default_value_t = 28.0)]
    target_range: f64,
    #[arg(long, default_value_t = 6.0)]
    target_angle_deg: f64,
    /// Velocity error added to every hypothesis frame, x component (m/s).
    #[arg(long, default_value_t = 0.0)]
    dv_x: f64,
    /// Velocity error added to every hypothesis frame, y component (m/s).
    #[arg(long, default_value_t = 0.03)]
    dv_y: f64,
    /// Extra reflectors as ANGLE_DEG:RANGE_M.
    #[arg(long = "reflector", value_parser = parse_reflector, allow_hyphen_values = true)]
    reflectors: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 24.0)]
    range_min: f64,
    #[arg(long, default_value_t = 32.0)]
    range_max: f64,
    #[arg(long, default_value_t = 0.05)]
    range_step: f64,
    #[arg(long, default_value_t = 0.0)]
    angle_min_deg: f64,
    #[arg(long, default_value_t = 12.0)]
    angle_max_deg: f64,
    #[arg(long, default_value_t = 0.02)]
    angle_step_deg: f64,
    /// Range resolution of the matched-filter kernel (m).
    #[arg(long, default_value_t = 0.3)]
    range_resolution: f64,
}

fn parse_reflector(s: &str) -> Result<(f64, f64), String> {
    let (a, r) = s.split_once(':').ok_or("expected ANGLE_DEG:RANGE_M")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("angle: {e}"))?;
    let r: f64 = r.trim().parse().map_err(|e| format!("range: {e}"))?;
    Ok((a, r))
}

fn axis(min: f64, max: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0) || !(max >= min) {
        return Err("axis needs min <= max and a positive step".into());
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}

fn load_config(common: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), String> {
    let cfg = load_config(&cli.common)?;
    let prov = Provenance::from_config(&cfg);
    let out: Box<dyn Write + Send> = match &cli.common.out {
        Some(path) => Box::new(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?),
        None => Box::new(io::stdout()),
    };
    let mut out = BufWriter::new(out);
    let io_err = |e: io::Error| e.to_string();
    let core_err = |e: sarvel_core::Error| e.to_string();

    with_threads(cli.common.threads, || -> Result<(), String> {
        match cli.command {
            Command::Rmse => write_rmse(&mut out, &prov, &run_rmse_sweep(&cfg).map_err(core_err)?).map_err(io_err),
            Command::Resolution { apertures } => {
                let apertures = if !apertures.is_empty() {
                    apertures
                } else {
                    match &cfg.sweep {
                        Some(s) if s.name == SweepParam::ApertureM => s.values.clone(),
                        _ => vec![1.0, 2.5, 3.0],
                    }
                };
                let rows = run_resolution_sweep(&apertures, &cfg).map_err(core_err)?;
                write_resolution(&mut out, &prov, &rows).map_err(io_err)
            }
            Command::Gain => write_gain(&mut out, &prov, &run_gain_report(&cfg).map_err(core_err)?).map_err(io_err),
            Command::Velcov {
                sigma_phi_deg,
                speeds,
                targets,
            } => {
                let mut grid = VelcovGrid::from_config(&cfg);
                if !sigma_phi_deg.is_empty() {
                    grid.sigma_phi_deg = sigma_phi_deg;
                }
                if !speeds.is_empty() {
                    grid.speeds_mps = speeds;
                }
                if !targets.is_empty() {
                    grid.num_targets = targets;
                }
                let rows = run_velocity_cov_report(&cfg, &grid).map_err(core_err)?;
                write_velcov(&mut out, &prov, &rows).map_err(io_err)
            }
            Command::Lemma { n } => write_lemma(&mut out, &prov, &run_lemma_check(&n).map_err(core_err)?).map_err(io_err),
            Command::Image(args) => {
                let radar = cfg.radar();
                let track = cfg.track();
                let v = cfg.velocity();
                let hyp = VelocityTrack::constant([v[0] + args.dv_x, v[1] + args.dv_y], cfg.num_frames);
                let (angles, ranges): (Vec<f64>, Vec<f64>) =
                    args.reflectors.iter().map(|&(a, r)| (a.to_radians(), r)).unzip();
                let scene = Scene::new(angles, args.target_angle_deg.to_radians(), args.target_range).with_ranges(ranges);
                let range_axis = axis(args.range_min, args.range_max, args.range_step)?;
                let angle_axis: Vec<f64> = axis(args.angle_min_deg, args.angle_max_deg, args.angle_step_deg)?
                    .into_iter()
                    .map(f64::to_radians)
                    .collect();
                let settings = ImageSettings {
                    range_resolution: args.range_resolution,
                    ..ImageSettings::default()
                };
                let img = sar_image(&scene, &track, &hyp, &radar, &range_axis, &angle_axis, &settings).map_err(core_err)?;
                write_image(&mut out, &prov, &img).map_err(io_err)
            }
            Command::Predict { theta_deg } => {
                let radar = cfg.radar();
                let track = cfg.track();
                let v = cfg.velocity();
                let theta = theta_deg.to_radians();
                let angles = uniform_angles(cfg.num_targets, radar.field_of_view);
                let full = angle_variance_full(&track, theta, &angles, v, &radar).map_err(core_err)?;
                let asym = angle_variance_asymptotic(theta, v, cfg.num_targets, cfg.num_frames, &radar)
                    .map(|p| p.std_dev().to_degrees())
                    .unwrap_or(f64::NAN);
                let bw = beamwidth_3db(&track, theta, &radar.noiseless()).map_err(core_err)?;
                let write = |out: &mut dyn Write| -> io::Result<()> {
                    writeln!(out, "{}", prov.comment_line())?;
                    writeln!(
                        out,
                        "theta_deg,variance_rad2,doppler_term_rad2,angle_term_rad2,std_full_deg,std_asymptotic_deg,beamwidth_deg,gain_ratio"
                    )?;
                    let cells = [
                        theta_deg,
                        full.variance,
                        full.doppler_term,
                        full.angle_term,
                        full.std_dev().to_degrees(),
                        asym,
                        bw.to_degrees(),
                        radar.sigma_phi / full.std_dev(),
                    ];
                    writeln!(out, "{}", cells.map(fmt_g9).join(","))
                };
                write(&mut out).map_err(io_err)
            }
        }
    })
    .map_err(core_err)??;
    out.flush().map_err(io_err)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sarvel: {e}");
            ExitCode::from(2)
        }
    }
}
