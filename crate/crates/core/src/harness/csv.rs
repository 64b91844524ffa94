//! CSV tables with a provenance comment line and 9-significant-digit floats.

use std::io::Write;

use crate::analysis::LemmaReport;
use crate::sar::SarImage;

use super::{ExperimentConfig, GainRow, ResolutionRow, RmseRow, VelcovRow};

pub const RMSE_HEADER: [&str; 7] = [
    "sweep_value",
    "theta_deg",
    "rmse_sim_deg",
    "rmse_analysis_deg",
    "rmse_asymptotic_deg",
    "trials_used",
    "failed_trials",
];
pub const RESOLUTION_HEADER: [&str; 3] = ["theta_deg", "aperture_m", "beamwidth_deg"];
pub const GAIN_HEADER: [&str; 4] = ["theta_deg", "sweep_value", "gain_ratio", "degradation_ratio"];
pub const VELCOV_HEADER: [&str; 5] = [
    "sigma_phi_deg",
    "speed_mps",
    "num_targets",
    "std_sim_mps",
    "std_analysis_mps",
];
pub const LEMMA_HEADER: [&str; 5] = ["N", "norm4_direct", "norm4_closed_form", "norm2_direct", "omega"];

/// Formats like C's `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // rounding to 9 significant digits may bump the exponent, so take it
    // from the rounded scientific form
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Identifies the tool version, configuration and seed behind a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            seed: cfg.seed,
        }
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# sarvel {} config_hash={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed
        )
    }
}

fn write_table<W: Write>(
    mut out: W,
    provenance: &Provenance,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    writeln!(out, "{}", provenance.comment_line())?;
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()
}

pub fn write_rmse<W: Write>(out: W, p: &Provenance, rows: &[RmseRow]) -> std::io::Result<()> {
    write_table(
        out,
        p,
        &RMSE_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_g9(r.sweep_value),
                fmt_g9(r.theta_deg),
                fmt_g9(r.rmse_sim_deg),
                fmt_g9(r.rmse_analysis_deg),
                fmt_g9(r.rmse_asymptotic_deg),
                r.trials_used.to_string(),
                r.failed_trials.to_string(),
            ]
        }),
    )
}

pub fn write_resolution<W: Write>(out: W, p: &Provenance, rows: &[ResolutionRow]) -> std::io::Result<()> {
    write_table(
        out,
        p,
        &RESOLUTION_HEADER,
        rows.iter()
            .map(|r| vec![fmt_g9(r.theta_deg), fmt_g9(r.aperture_m), fmt_g9(r.beamwidth_deg)]),
    )
}

pub fn write_gain<W: Write>(out: W, p: &Provenance, rows: &[GainRow]) -> std::io::Result<()> {
    write_table(
        out,
        p,
        &GAIN_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_g9(r.theta_deg),
                fmt_g9(r.sweep_value),
                fmt_g9(r.gain_ratio),
                fmt_g9(r.degradation_ratio),
            ]
        }),
    )
}

pub fn write_velcov<W: Write>(out: W, p: &Provenance, rows: &[VelcovRow]) -> std::io::Result<()> {
    write_table(
        out,
        p,
        &VELCOV_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_g9(r.sigma_phi_deg),
                fmt_g9(r.speed_mps),
                r.num_targets.to_string(),
                fmt_g9(r.std_sim_mps),
                fmt_g9(r.std_analysis_mps),
            ]
        }),
    )
}

pub fn write_lemma<W: Write>(out: W, p: &Provenance, rows: &[LemmaReport]) -> std::io::Result<()> {
    write_table(
        out,
        p,
        &LEMMA_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_g9(r.norm4_direct),
                fmt_g9(r.norm4_closed_form),
                fmt_g9(r.norm2_direct),
                fmt_g9(r.omega),
            ]
        }),
    )
}

/// Image grid: header row holds the angle axis in degrees, the first column
/// the range axis in meters, cells are dB.
pub fn write_image<W: Write>(out: W, p: &Provenance, image: &SarImage) -> std::io::Result<()> {
    let header: Vec<String> = std::iter::once("range_m".to_string())
        .chain(image.angle_axis.iter().map(|a| fmt_g9(a.to_degrees())))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        out,
        p,
        &header_refs,
        image.range_axis.iter().zip(&image.intensity_db).map(|(r, row)| {
            std::iter::once(fmt_g9(*r))
                .chain(row.iter().map(|v| fmt_g9(*v)))
                .collect()
        }),
    )
}
