//! Thrust and attitude extraction.
//!
//! Given a desired acceleration `μ_d`, find a thrust acceleration `u_t` and a
//! desired attitude `Q_d` with `g e₃ − u_t R(Q_d)ᵀ e₃ = μ_d`, and the matrix
//! `M(μ_d)` that turns `μ̇_d` into the desired body rate `ω_d = M(μ_d) μ̇_d`.
//!
//! The map is undefined on the ray `L = {col[0, 0, μ₃] : μ₃ ≥ g}`, which a
//! controller with `k_p + k_v < g` never reaches.

use thiserror::Error;

use crate::mathx::{skew, Mat3, UnitQuaternion, Vec3};
use crate::scalar::Real;

/// Horizontal tolerance for membership in the singular ray.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// `η_d` at or below this is rejected by [`m_matrix`].
pub const DEGENERATE_ETA: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractionError {
    #[error("desired acceleration {mu_d:?} lies on the singular ray (gain condition k_p + k_v < g violated?)")]
    Singular { mu_d: [f64; 3] },
    #[error("degenerate desired frame: eta_d = {eta_d:e}")]
    DegenerateFrame { eta_d: f64 },
}

/// Output of [`extract`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredFrame<T> {
    /// Thrust per unit mass, m/s².
    pub u_t: T,
    pub q_d: UnitQuaternion<T>,
    /// Cached `R(Q_d)`.
    pub r_d: Mat3<T>,
    pub mu_d: Vec3<T>,
}

impl<T: Real> DesiredFrame<T> {
    /// Frame for `μ_d = 0`: level attitude, `u_t = g`.
    pub fn hover(g: T) -> Self {
        Self {
            u_t: g,
            q_d: UnitQuaternion::identity(),
            r_d: Mat3::identity(),
            mu_d: Vec3::zero(),
        }
    }

    /// `g e₃ − u_t R_dᵀ e₃`, which equals `μ_d` for an extracted frame.
    pub fn reconstruct(&self, g: T) -> Vec3<T> {
        Vec3::e3() * g - self.r_d.transpose() * Vec3::e3() * self.u_t
    }

    /// Desired body rate `ω_d = M(μ_d) μ̇_d`.
    pub fn desired_rate(&self, mu_d_dot: Vec3<T>, g: T) -> Result<Vec3<T>, ExtractionError> {
        Ok(m_matrix(self, g)? * mu_d_dot)
    }
}

pub fn check_singularity<T: Real>(mu_d: Vec3<T>, g: T) -> bool {
    let tol = T::lit(SINGULARITY_TOL);
    mu_d.x.abs() < tol && mu_d.y.abs() < tol && mu_d.z >= g - tol
}

pub fn extract<T: Real>(mu_d: Vec3<T>, g: T) -> Result<DesiredFrame<T>, ExtractionError> {
    if check_singularity(mu_d, g) {
        return Err(ExtractionError::Singular {
            mu_d: mu_d.cast::<f64>().to_array(),
        });
    }
    let e3 = Vec3::e3();
    let u_t = (mu_d - e3 * g).norm();
    let half = T::lit(0.5);
    let eta_d = (half * (T::one() + (g - e3.dot(mu_d)) / u_t)).sqrt();
    let q_d = skew(mu_d) * e3 / (T::lit(2.0) * u_t * eta_d);
    let q_d = UnitQuaternion::new_normalize(eta_d, q_d);
    Ok(DesiredFrame {
        u_t,
        q_d,
        r_d: q_d.to_rotation(),
        mu_d,
    })
}

/// `M(μ_d) = (4η_d²u_t⁴)⁻¹ (−4S(μ_d)e₃e₃ᵀ + 4η_d²u_t S(e₃) + 2S(μ_d) − 2e₃ᵀμ_d S(e₃)) S(μ_d − g e₃)²`,
/// evaluated term by term.
pub fn m_matrix<T: Real>(frame: &DesiredFrame<T>, g: T) -> Result<Mat3<T>, ExtractionError> {
    let eta_d = frame.q_d.eta();
    if eta_d <= T::lit(DEGENERATE_ETA) || frame.u_t <= T::zero() {
        return Err(ExtractionError::DegenerateFrame {
            eta_d: eta_d.as_f64(),
        });
    }
    let e3 = Vec3::e3();
    let mu = frame.mu_d;
    let u_t = frame.u_t;
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    let eta2 = eta_d * eta_d;

    let s_mu = skew(mu);
    let s_e3 = skew(e3);
    let lead = Mat3::outer(s_mu * e3, e3).scale(-four) + s_e3.scale(four * eta2 * u_t) + s_mu.scale(two)
        - s_e3.scale(two * e3.dot(mu));
    let s_a = skew(mu - e3 * g);
    let denom = four * eta2 * u_t.powi(4);
    Ok((lead * (s_a * s_a)).scale(denom.recip()))
}
