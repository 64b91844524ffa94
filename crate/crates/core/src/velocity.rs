//! Per-frame least-squares ego-velocity estimation and the first-order
//! covariance of that estimate.

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_least_squares, Mat2, Vec2, RANK_TOLERANCE};
use crate::radar::{doppler_matrix, steering_derivative, steering_vector, FrameDetections, RadarConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate {
    pub v_hat: Vec2,
    /// Filled in only when an analytical covariance was requested.
    pub covariance: Option<Mat2>,
    /// ‖G v̂ − f‖₂ in Hz.
    pub residual_norm: f64,
}

/// Velocity error covariance split by its noise source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityCovariance {
    /// σ_f² Γ
    pub doppler: Mat2,
    /// σ_φ² Γ Gᵀ D² G Γ
    pub angle: Mat2,
}

impl VelocityCovariance {
    /// Wraps a covariance whose noise sources are not known; it is reported
    /// entirely as the Doppler part.
    pub fn from_total(total: Mat2) -> Self {
        Self {
            doppler: total,
            angle: Mat2::ZERO,
        }
    }

    pub fn total(&self) -> Mat2 {
        self.doppler + self.angle
    }
}

/// Solves `min ½‖G(φ̃) ṽ − f̃‖²` using the measured angles in G.
pub fn estimate_velocity(detections: &FrameDetections, wavelength: f64) -> Result<VelocityEstimate> {
    let k = detections.angles.len();
    if detections.dopplers.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: detections.dopplers.len(),
        });
    }
    if k < 2 {
        return Err(Error::InsufficientDetections(k));
    }
    let g = doppler_matrix(&detections.angles, wavelength);
    let ls = solve_least_squares(&g, &detections.dopplers)?;
    Ok(VelocityEstimate {
        v_hat: ls.solution,
        covariance: None,
        residual_norm: ls.residual_norm,
    })
}

/// `Γ = (GᵀG)⁻¹` for the given angles.
pub fn gram_inverse(angles: &[f64], wavelength: f64) -> Result<Mat2> {
    if angles.len() < 2 {
        return Err(Error::InsufficientDetections(angles.len()));
    }
    let gram = doppler_matrix(angles, wavelength)
        .into_iter()
        .fold(Mat2::ZERO, |acc, row| acc + Mat2::outer(row, row));
    let (lo, hi) = gram.sym_eigenvalues();
    // singular values of G are the square roots of the Gram eigenvalues
    let ratio = if hi > 0.0 { (lo.max(0.0) / hi).sqrt() } else { 0.0 };
    if !(ratio >= RANK_TOLERANCE) {
        return Err(Error::SingularGeometry { ratio });
    }
    gram.inverse().ok_or(Error::SingularGeometry { ratio })
}

/// Both covariance terms, evaluated around the true angles and velocity.
pub fn velocity_covariance_terms(true_angles: &[f64], v: Vec2, config: &RadarConfig) -> Result<VelocityCovariance> {
    let lambda = config.wavelength();
    let gamma = gram_inverse(true_angles, lambda)?;
    let scale = 2.0 / lambda;
    // Gᵀ D² G = Σ (2/λ)² dᵢ² p pᵀ, dᵢ = (2/λ) p'(φᵢ)·v
    let gdg = true_angles.iter().fold(Mat2::ZERO, |acc, &phi| {
        let d = scale * dot(steering_derivative(phi), v);
        let p = steering_vector(phi);
        acc + Mat2::outer(p, p).scale(scale * scale * d * d)
    });
    let sf2 = config.sigma_f * config.sigma_f;
    let sp2 = config.sigma_phi * config.sigma_phi;
    Ok(VelocityCovariance {
        doppler: gamma.scale(sf2),
        angle: (gamma * gdg * gamma).scale(sp2),
    })
}

/// `σ_f² Γ + σ_φ² Γ Gᵀ D² G Γ`.
pub fn velocity_covariance_analytical(true_angles: &[f64], v: Vec2, config: &RadarConfig) -> Result<Mat2> {
    velocity_covariance_terms(true_angles, v, config).map(|c| c.total())
}

/// Component of `v` perpendicular to the line of sight at θ:
/// `v_x cos θ − v_y sin θ`.
#[inline]
pub fn tangential_velocity(v: Vec2, theta: f64) -> f64 {
    dot(v, steering_derivative(theta))
}
