//! Closed-form angle error of the synthetic aperture under per-frame velocity
//! estimation error.
//!
//! The chain is:
//!
//! ```text
//! u      = Φ_N L_N V p'(θ)                       (mean-removed range-rate sensitivity)
//! var δθ = ‖L_Nᵀ u‖² / ‖u‖⁴ · p(θ)ᵀ Cov(δv) p(θ)  (i.i.d. per-frame velocity errors)
//! ```
//!
//! where `L_N` is the N×N lower-triangular matrix of ones and `Φ_N` removes
//! the mean. Neither matrix is ever formed: `L_N x` is a prefix sum, `L_Nᵀ x`
//! a suffix sum and `Φ_N x` a mean subtraction, so everything here is O(N).

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::radar::{steering_vector, RadarConfig, VelocityTrack};
use crate::velocity::{tangential_velocity, velocity_covariance_terms, VelocityCovariance};

/// Predicted angle-error variance, split by noise source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleErrorPrediction {
    /// rad²
    pub variance: f64,
    /// part proportional to σ_f²
    pub doppler_term: f64,
    /// part proportional to σ_φ²
    pub angle_term: f64,
}

impl AngleErrorPrediction {
    fn from_terms(doppler_term: f64, angle_term: f64) -> Self {
        Self {
            variance: doppler_term + angle_term,
            doppler_term,
            angle_term,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn subtract_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// `L_Nᵀ x`: element i is `Σ_{k ≥ i} x_k`.
fn suffix_sums(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut acc = 0.0;
    for (o, v) in out.iter_mut().zip(x).rev() {
        acc += v;
        *o = acc;
    }
    out
}

fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `Φ_N L_N 1_N`, i.e. `i − (N+1)/2` for i = 1..N.
pub fn centered_ramp(n: usize) -> Vec<f64> {
    let mid = (n as f64 + 1.0) / 2.0;
    (1..=n).map(|i| i as f64 - mid).collect()
}

/// `u = Φ_N L_N V p'(θ)` (N entries).
pub fn u_vector(track: &VelocityTrack, theta: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut u: Vec<f64> = track
        .rows()
        .iter()
        .map(|&v| {
            acc += tangential_velocity(v, theta);
            acc
        })
        .collect();
    subtract_mean(&mut u);
    u
}

/// Geometric factor `‖L_Nᵀ u‖² / ‖u‖⁴` that maps per-frame velocity error
/// variance along p(θ) to angle variance.
pub fn angle_sensitivity(track: &VelocityTrack, theta: f64) -> Result<f64> {
    let u = u_vector(track, theta);
    let u_sq = sum_sq(&u);
    let n = track.frames() as f64;
    let speed_scale = track.rows().iter().map(|r| r[0].abs() + r[1].abs()).fold(0.0, f64::max);
    if !(u_sq.sqrt() > 1e-12 * n * n * speed_scale) {
        return Err(Error::ZeroTangentialVelocity);
    }
    Ok(sum_sq(&suffix_sums(&u)) / (u_sq * u_sq))
}

/// Frame-count factor `ω(N) = ‖Φ L 1‖⁴ / ‖Lᵀ Φ L 1‖²`.
pub fn omega(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::UndefinedForN1(n));
    }
    let ramp = centered_ramp(n);
    let norm2 = sum_sq(&ramp);
    Ok(norm2 * norm2 / sum_sq(&suffix_sums(&ramp)))
}

/// Angle variance for an arbitrary velocity track and per-frame velocity
/// error covariance, assuming errors are independent across frames.
pub fn angle_variance_general(
    track: &VelocityTrack,
    theta: f64,
    velocity_cov: &VelocityCovariance,
) -> Result<AngleErrorPrediction> {
    let gain = angle_sensitivity(track, theta)?;
    let p = steering_vector(theta);
    Ok(AngleErrorPrediction::from_terms(
        gain * velocity_cov.doppler.quad_form(p),
        gain * velocity_cov.angle.quad_form(p),
    ))
}

/// Full prediction: analytical velocity covariance of the reflector geometry
/// composed with the angle sensitivity of the track.
pub fn angle_variance_full(
    track: &VelocityTrack,
    theta: f64,
    true_angles: &[f64],
    v: Vec2,
    config: &RadarConfig,
) -> Result<AngleErrorPrediction> {
    let cov = velocity_covariance_terms(true_angles, v, config)?;
    angle_variance_general(track, theta, &cov)
}

/// Large-K, constant-velocity approximation for reflectors uniformly spread
/// over [−π/2, π/2]:
///
/// ```text
/// var δθ ≈ p(θ)ᵀ (σ_f² λ² I + σ_φ² M(v)) p(θ) / (2 K ω(N) v_t(θ)²)
/// M(v)   = [[v_x² + 3v_y², −2v_x v_y], [−2v_x v_y, 3v_x² + v_y²]]
/// ```
pub fn angle_variance_asymptotic(
    theta: f64,
    v: Vec2,
    reflectors: usize,
    frames: usize,
    config: &RadarConfig,
) -> Result<AngleErrorPrediction> {
    if reflectors == 0 {
        return Err(Error::InsufficientDetections(0));
    }
    let w = omega(frames)?;
    let vt = tangential_velocity(v, theta);
    let speed = v[0].hypot(v[1]);
    if !(vt.abs() > 1e-12 * speed) {
        return Err(Error::ZeroTangentialVelocity);
    }
    let lambda = config.wavelength();
    let p = steering_vector(theta);
    let [vx, vy] = v;
    let m_quad =
        p[0] * p[0] * (vx * vx + 3.0 * vy * vy) - 4.0 * p[0] * p[1] * vx * vy + p[1] * p[1] * (3.0 * vx * vx + vy * vy);
    let denom = 2.0 * reflectors as f64 * w * vt * vt;
    Ok(AngleErrorPrediction::from_terms(
        config.sigma_f.powi(2) * lambda * lambda / denom,
        config.sigma_phi.powi(2) * m_quad / denom,
    ))
}

/// The two polynomial norms behind ω(N), computed directly and from their
/// closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub n: usize,
    /// ‖Φ_N L_N 1_N‖⁴ from the explicit vector.
    pub norm4_direct: f64,
    /// N²(N²−1)²/144
    pub norm4_closed_form: f64,
    /// ‖L_Nᵀ Φ_N L_N 1_N‖² from the explicit vector.
    pub norm2_direct: f64,
    /// Same norm from the element identity (N−i+1)(i−1)/2.
    pub norm2_identity: f64,
    /// Elements of L_Nᵀ Φ_N L_N 1_N.
    pub elements: Vec<f64>,
    pub omega: f64,
}

impl LemmaReport {
    pub fn norm4_relative_error(&self) -> f64 {
        (self.norm4_direct - self.norm4_closed_form).abs() / self.norm4_closed_form
    }
}

/// `(N−i+1)(i−1)/2` for 1-based i.
pub fn lemma_element(n: usize, i: usize) -> f64 {
    ((n - i + 1) as f64) * ((i - 1) as f64) / 2.0
}

pub fn lemma_polynomials(n: usize) -> Result<LemmaReport> {
    if n < 2 {
        return Err(Error::UndefinedForN1(n));
    }
    let ramp = centered_ramp(n);
    let norm2_ramp = sum_sq(&ramp);
    let elements = suffix_sums(&ramp);
    let norm2_direct = sum_sq(&elements);
    let norm2_identity = (1..=n).map(|i| lemma_element(n, i).powi(2)).sum();
    let nf = n as f64;
    let norm4_closed_form = nf * nf * (nf * nf - 1.0).powi(2) / 144.0;
    Ok(LemmaReport {
        n,
        norm4_direct: norm2_ramp * norm2_ramp,
        norm4_closed_form,
        norm2_direct,
        norm2_identity,
        elements,
        omega: norm2_ramp * norm2_ramp / norm2_direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use crate::radar::uniform_angles;
    use crate::velocity::velocity_covariance_analytical;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    /// Brute-force Φ L 1 and Lᵀ Φ L 1 with dense matrices.
    fn dense_lemma(n: usize) -> (Vec<f64>, Vec<f64>) {
        let l = |r: usize, c: usize| if c <= r { 1.0 } else { 0.0 };
        let l1: Vec<f64> = (0..n).map(|r| (0..n).map(|c| l(r, c)).sum()).collect();
        let mean = l1.iter().sum::<f64>() / n as f64;
        let phil1: Vec<f64> = l1.iter().map(|x| x - mean).collect();
        let lt: Vec<f64> = (0..n).map(|r| (0..n).map(|c| l(c, r) * phil1[c]).sum()).collect();
        (phil1, lt)
    }

    #[test]
    fn u_vector_examples() {
        let track = VelocityTrack::constant([1.0, 0.0], 3);
        // v_t(0) = v_x = 1, Φ₃L₃1₃ = [−1, 0, 1]
        assert_eq!(u_vector(&track, 0.0), vec![-1.0, 0.0, 1.0]);

        let v = [2.0, 7.0];
        let theta = 0.7;
        let track = VelocityTrack::constant(v, 6);
        let vt = tangential_velocity(v, theta);
        for (u, r) in u_vector(&track, theta).iter().zip(centered_ramp(6)) {
            assert_relative_eq!(*u, vt * r, max_relative = 1e-12, epsilon = 1e-12);
        }

        let track = VelocityTrack::constant([0.0, 10.0], 4);
        assert!(u_vector(&track, 0.0).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn omega_examples() {
        assert_relative_eq!(omega(2).unwrap(), 1.0);
        assert_relative_eq!(omega(3).unwrap(), 2.0);
        assert_relative_eq!(omega(5).unwrap(), 100.0 / 26.0, max_relative = 1e-14);
        assert_eq!(omega(1), Err(Error::UndefinedForN1(1)));
    }

    #[test]
    fn omega_matches_dense_construction() {
        for n in 2..40 {
            let (a, b) = dense_lemma(n);
            let w = sum_sq(&a).powi(2) / sum_sq(&b);
            assert_relative_eq!(omega(n).unwrap(), w, max_relative = 1e-12);
        }
    }

    #[test]
    fn omega_is_linear_in_n() {
        let w = omega(1000).unwrap();
        assert!((w * 6.0 / (5.0 * 1000.0) - 1.0).abs() < 0.02);
        let mut prev = 0.0;
        for n in 2..=200 {
            let w = omega(n).unwrap();
            assert!(w > prev);
            prev = w;
        }
    }

    #[test]
    fn general_variance_reduces_for_constant_velocity() {
        let v = [1.5, 9.0];
        let theta = 0.9;
        let n = 7;
        let sigma2 = 0.01;
        let track = VelocityTrack::constant(v, n);
        let cov = VelocityCovariance::from_total(Mat2::IDENTITY.scale(sigma2));
        let pred = angle_variance_general(&track, theta, &cov).unwrap();
        let vt = tangential_velocity(v, theta);
        let expected = sigma2 / (omega(n).unwrap() * vt * vt);
        assert_relative_eq!(pred.variance, expected, max_relative = 1e-12);
        assert_eq!(pred.angle_term, 0.0);
    }

    #[test]
    fn general_variance_zero_covariance() {
        let track = VelocityTrack::constant([0.0, 10.0], 5);
        let cov = VelocityCovariance::from_total(Mat2::ZERO);
        assert_eq!(angle_variance_general(&track, 0.5, &cov).unwrap().variance, 0.0);
    }

    #[test]
    fn general_variance_rejects_endfire() {
        // v_t(0) = v_x = 0 for pure y-motion
        let track = VelocityTrack::constant([0.0, 10.0], 5);
        let cov = VelocityCovariance::from_total(Mat2::IDENTITY);
        assert_eq!(
            angle_variance_general(&track, 0.0, &cov),
            Err(Error::ZeroTangentialVelocity)
        );
    }

    #[test]
    fn full_variance_terms_split_by_noise_source() {
        let cfg = RadarConfig::default();
        let angles = [-1.0, -0.3, 0.2, 0.8, 1.2];
        let v = [0.0, 10.0];
        let track = VelocityTrack::constant(v, 5);
        let pred = angle_variance_full(&track, 0.7, &angles, v, &cfg).unwrap();
        let only_f = angle_variance_full(&track, 0.7, &angles, v, &RadarConfig { sigma_phi: 0.0, ..cfg }).unwrap();
        let only_phi = angle_variance_full(&track, 0.7, &angles, v, &RadarConfig { sigma_f: 0.0, ..cfg }).unwrap();
        assert_relative_eq!(pred.doppler_term, only_f.variance, max_relative = 1e-14);
        assert_relative_eq!(pred.angle_term, only_phi.variance, max_relative = 1e-14);
        assert_eq!(pred.variance, pred.doppler_term + pred.angle_term);

        let silent = RadarConfig {
            sigma_f: 0.0,
            sigma_phi: 0.0,
            ..cfg
        };
        assert_eq!(
            angle_variance_full(&track, 0.7, &angles, v, &silent).unwrap().variance,
            0.0
        );
    }

    #[test]
    fn full_variance_matches_explicit_formula() {
        // u Lᵀ... evaluated with dense matrices as an independent route
        let cfg = RadarConfig::default();
        let angles = [-1.2, -0.5, 0.1, 0.6, 1.4, 0.9];
        let rows = vec![[0.3, 9.5], [0.1, 10.2], [-0.2, 9.9], [0.0, 10.1]];
        let track = VelocityTrack::new(rows.clone()).unwrap();
        let theta: f64 = 0.6;
        let v = [0.05, 9.9];
        let n = rows.len();
        let pp = [theta.cos(), -theta.sin()];
        let lv: Vec<f64> = (0..n)
            .map(|r| (0..=r).map(|c| rows[c][0] * pp[0] + rows[c][1] * pp[1]).sum())
            .collect();
        let mean = lv.iter().sum::<f64>() / n as f64;
        let u: Vec<f64> = lv.iter().map(|x| x - mean).collect();
        let ltu: Vec<f64> = (0..n).map(|r| (r..n).map(|c| u[c]).sum()).collect();
        let gain = sum_sq(&ltu) / sum_sq(&u).powi(2);
        let cov = velocity_covariance_analytical(&angles, v, &cfg).unwrap();
        let expected = gain * cov.quad_form(steering_vector(theta));
        let pred = angle_variance_full(&track, theta, &angles, v, &cfg).unwrap();
        assert_relative_eq!(pred.variance, expected, max_relative = 1e-12);
    }

    #[test]
    fn asymptotic_y_motion_closed_form() {
        let cfg = RadarConfig::default();
        let l = cfg.wavelength();
        let (k, n, vy) = (5, 5, 10.0);
        let w = omega(n).unwrap();
        for theta in [0.2, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let s2 = theta.sin().powi(2);
            let expected = (cfg.sigma_f.powi(2) * l * l + cfg.sigma_phi.powi(2) * vy * vy * (1.0 + 2.0 * s2))
                / (2.0 * k as f64 * w * vy * vy * s2);
            let got = angle_variance_asymptotic(theta, [0.0, vy], k, n, &cfg).unwrap();
            assert_relative_eq!(got.variance, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn asymptotic_special_cases() {
        let cfg = RadarConfig::default();
        let l = cfg.wavelength();
        let w = omega(5).unwrap();
        let no_phi = RadarConfig { sigma_phi: 0.0, ..cfg };
        let got = angle_variance_asymptotic(0.4, [0.0, 10.0], 5, 5, &no_phi).unwrap();
        let expected = cfg.sigma_f.powi(2) * l * l / (2.0 * 5.0 * w * 100.0 * 0.4f64.sin().powi(2));
        assert_relative_eq!(got.variance, expected, max_relative = 1e-12);

        let got = angle_variance_asymptotic(FRAC_PI_2, [0.0, 10.0], 5, 5, &cfg).unwrap();
        let expected = (cfg.sigma_f.powi(2) * l * l + 3.0 * cfg.sigma_phi.powi(2) * 100.0) / (2.0 * 5.0 * w * 100.0);
        assert_relative_eq!(got.variance, expected, max_relative = 1e-12);

        assert_eq!(
            angle_variance_asymptotic(0.0, [0.0, 10.0], 5, 5, &cfg),
            Err(Error::ZeroTangentialVelocity)
        );
    }

    #[test]
    fn asymptotic_baseline_value() {
        // σ_φ = 1°, σ_f = 50 Hz, v_y = 10, K = N = 5, θ = 45°
        let cfg = RadarConfig::default();
        let got = angle_variance_asymptotic(FRAC_PI_4, [0.0, 10.0], 5, 5, &cfg).unwrap();
        assert_relative_eq!(got.variance, 5.14e-5, max_relative = 0.01);
        assert_relative_eq!(got.std_dev().to_degrees(), 0.41, max_relative = 0.01);
    }

    #[test]
    fn full_converges_to_asymptotic_for_uniform_spread() {
        let cfg = RadarConfig::default();
        for (v, theta) in [([0.0, 10.0], FRAC_PI_4), ([3.0, 8.0], 1.1), ([-2.0, 12.0], 0.4)] {
            let angles = uniform_angles(500, (-FRAC_PI_2, FRAC_PI_2));
            let track = VelocityTrack::constant(v, 5);
            let full = angle_variance_full(&track, theta, &angles, v, &cfg).unwrap();
            let asym = angle_variance_asymptotic(theta, v, 500, 5, &cfg).unwrap();
            assert_relative_eq!(full.variance, asym.variance, max_relative = 0.05);
        }
    }

    #[test]
    fn lemma_small_cases() {
        let r = lemma_polynomials(3).unwrap();
        assert_eq!(r.norm4_closed_form, 4.0);
        assert_eq!(r.norm4_direct, 4.0);
        assert_eq!(r.elements, vec![0.0, 1.0, 1.0]);
        assert_eq!(r.norm2_direct, 2.0);
        assert_eq!(r.omega, 2.0);

        let r = lemma_polynomials(5).unwrap();
        assert_eq!(r.elements, vec![0.0, 2.0, 3.0, 3.0, 2.0]);
        assert_eq!(r.norm4_direct, 100.0);
        assert_eq!(r.norm2_direct, 26.0);
    }

    #[test]
    fn lemma_leading_coefficient() {
        let r = lemma_polynomials(1001).unwrap();
        let n5 = 1001f64.powi(5);
        assert!((r.norm2_direct * 120.0 / n5 - 1.0).abs() < 0.01);
    }

    #[test]
    fn lemma_matches_dense_construction() {
        for n in 2..30 {
            let (a, b) = dense_lemma(n);
            let r = lemma_polynomials(n).unwrap();
            assert_eq!(r.elements, b);
            assert_relative_eq!(r.norm4_direct, sum_sq(&a).powi(2), max_relative = 1e-14);
            assert_relative_eq!(r.norm2_direct, r.norm2_identity, max_relative = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn asymptotic_symmetries(theta in 0.05f64..1.52, vy in 0.5f64..40.0, k in 1usize..50, n in 2usize..30) {
            let cfg = RadarConfig::default();
            let v = [0.0, vy];
            let a = angle_variance_asymptotic(theta, v, k, n, &cfg).unwrap().variance;
            let neg = angle_variance_asymptotic(-theta, v, k, n, &cfg).unwrap().variance;
            let mirror = angle_variance_asymptotic(std::f64::consts::PI - theta, v, k, n, &cfg).unwrap().variance;
            prop_assert!((a - neg).abs() <= 1e-12 * a);
            prop_assert!((a - mirror).abs() <= 1e-9 * a);
            let more_k = angle_variance_asymptotic(theta, v, k + 1, n, &cfg).unwrap().variance;
            let more_n = angle_variance_asymptotic(theta, v, k, n + 1, &cfg).unwrap().variance;
            prop_assert!(more_k < a);
            prop_assert!(more_n < a);
        }

        #[test]
        fn asymptotic_joint_scaling(theta in 0.05f64..1.52, vy in 0.5f64..40.0, c in 0.1f64..20.0) {
            let cfg = RadarConfig::default();
            let a = angle_variance_asymptotic(theta, [0.0, vy], 5, 5, &cfg).unwrap().variance;
            let scaled = RadarConfig { sigma_f: cfg.sigma_f * c, ..cfg };
            let b = angle_variance_asymptotic(theta, [0.0, vy * c], 5, 5, &scaled).unwrap().variance;
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn asymptotic_speed_decomposition(theta in 0.05f64..1.52, vy in 0.5f64..40.0) {
            // σ_f² c₁ / v_y² + σ_φ² c₂, with the σ_φ part independent of speed
            let cfg = RadarConfig::default();
            let a = angle_variance_asymptotic(theta, [0.0, vy], 5, 5, &cfg).unwrap();
            let b = angle_variance_asymptotic(theta, [0.0, 2.0 * vy], 5, 5, &cfg).unwrap();
            prop_assert!((a.angle_term - b.angle_term).abs() <= 1e-12 * a.angle_term);
            prop_assert!((a.doppler_term - 4.0 * b.doppler_term).abs() <= 1e-12 * a.doppler_term);
            let s2 = theta.sin().powi(2);
            let plateau = cfg.sigma_phi.powi(2) * (1.0 + 2.0 * s2) / (2.0 * 5.0 * omega(5).unwrap() * s2);
            prop_assert!((a.angle_term - plateau).abs() <= 1e-12 * plateau);
        }
    }
}
