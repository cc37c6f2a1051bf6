//! Output-feedback position controller.
//!
//! Consumes only GPS position/velocity and the body-frame magnetometer and
//! accelerometer vectors; the vehicle attitude is never read. Nothing here
//! depends on `crate::plant`.
//!
//! ```text
//! μ_d   = −k_p h(e_p) − k_v h(v)
//! u_t   = ‖μ_d − g e₃‖,   Q_d from extraction
//! f_μd  = −k_p φ(e_p) v + k_v φ(v) (k_p h(e_p) + k_v h(v))
//! ψ     = γ₁ S(R_d r₁) b₁ + γ₂ k₁ S(R_d (v − v̂)) b₂
//! ω     = M(μ_d) (f_μd − k_v φ(v) R_dᵀ (b₂ + u_t e₃)) + ψ
//! v̂̇    = g e₃ + R_dᵀ b₂ + k₁ (v − v̂) + k₁⁻¹ R_dᵀ S(b₂) ψ
//! ```

use thiserror::Error;

use crate::extraction::{extract, m_matrix, DesiredFrame, ExtractionError};
use crate::mathx::{sat_h, sat_phi, skew, Vec3};
use crate::scalar::Real;
use crate::sensors::Measurements;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error("non-finite measurement at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid gains: {0}")]
    InvalidGains(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains<T> {
    /// Position saturation gain, m/s².
    pub k_p: T,
    /// Velocity saturation gain, m/s².
    pub k_v: T,
    /// Velocity filter gain, 1/s.
    pub k_1: T,
    /// Magnetometer vector gain.
    pub gamma_1: T,
    /// Accelerometer vector gain.
    pub gamma_2: T,
    /// Gravity, m/s².
    pub g: T,
}

impl<T: Real> ControlGains<T> {
    pub fn validate(&self) -> Result<(), ControlError> {
        let all = [self.k_p, self.k_v, self.k_1, self.gamma_1, self.gamma_2, self.g];
        if !all.iter().all(|x| x.is_finite() && *x > T::zero()) {
            return Err(ControlError::InvalidGains("all gains and g must be positive and finite".into()));
        }
        if self.k_p + self.k_v >= self.g {
            return Err(ControlError::InvalidGains(format!(
                "k_p + k_v = {} must be < g = {}",
                self.k_p + self.k_v,
                self.g
            )));
        }
        Ok(())
    }

    /// `[g − k_p − k_v, g + k_p + k_v]`, the guaranteed range of `u_t`.
    pub fn thrust_window(&self) -> (T, T) {
        let k = self.k_p + self.k_v;
        (self.g - k, self.g + k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState<T> {
    pub v_hat: Vec3<T>,
    pub last_frame: DesiredFrame<T>,
    pub last_omega_cmd: Vec3<T>,
}

impl<T: Real> ControllerState<T> {
    pub fn new(v_hat: Vec3<T>, g: T) -> Self {
        Self {
            v_hat,
            last_frame: DesiredFrame::hover(g),
            last_omega_cmd: Vec3::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput<T> {
    pub u_t: T,
    pub omega: Vec3<T>,
    pub frame: DesiredFrame<T>,
    pub psi: Vec3<T>,
    pub mu_d: Vec3<T>,
    /// `v̂` the command was computed with (before this step's update).
    pub v_hat: Vec3<T>,
}

pub fn compute_mu_d<T: Real>(e_p: Vec3<T>, v: Vec3<T>, gains: &ControlGains<T>) -> Vec3<T> {
    -(sat_h(e_p) * gains.k_p) - sat_h(v) * gains.k_v
}

/// `f_μd = −k_p φ(e_p) v + k_v φ(v) (k_p h(e_p) + k_v h(v))`
pub fn compute_f_mu_d<T: Real>(e_p: Vec3<T>, v: Vec3<T>, gains: &ControlGains<T>) -> Vec3<T> {
    let (k_p, k_v) = (gains.k_p, gains.k_v);
    -(sat_phi(e_p) * v * k_p) + sat_phi(v) * (sat_h(e_p) * k_p + sat_h(v) * k_v) * k_v
}

pub fn compute_psi<T: Real>(
    frame: &DesiredFrame<T>,
    b1: Vec3<T>,
    b2: Vec3<T>,
    v: Vec3<T>,
    v_hat: Vec3<T>,
    r1: Vec3<T>,
    gains: &ControlGains<T>,
) -> Vec3<T> {
    let r_d = frame.r_d;
    let mag = skew(r_d * r1) * b1 * gains.gamma_1;
    let acc = skew(r_d * (v - v_hat)) * b2 * (gains.gamma_2 * gains.k_1);
    mag + acc
}

/// `v̂̇ = g e₃ + R_dᵀ b₂ + k₁ (v − v̂) + k₁⁻¹ R_dᵀ S(b₂) ψ`
pub fn filter_rate<T: Real>(
    frame: &DesiredFrame<T>,
    b2: Vec3<T>,
    v: Vec3<T>,
    v_hat: Vec3<T>,
    psi: Vec3<T>,
    gains: &ControlGains<T>,
) -> Vec3<T> {
    let rdt = frame.r_d.transpose();
    Vec3::e3() * gains.g + rdt * b2 + (v - v_hat) * gains.k_1 + rdt * (skew(b2) * psi) / gains.k_1
}

/// One controller tick. `r1` is the known inertial magnetic field; `dt` is
/// the controller period used for the explicit-Euler `v̂` update.
pub fn step<T: Real>(
    meas: &Measurements<T>,
    p_r: Vec3<T>,
    r1: Vec3<T>,
    state: &ControllerState<T>,
    gains: &ControlGains<T>,
    dt: T,
) -> Result<(ControlOutput<T>, ControllerState<T>), ControlError> {
    if !meas.is_finite() || !state.v_hat.is_finite() {
        return Err(ControlError::NonFinite { t: meas.t.as_f64() });
    }
    let g = gains.g;
    let e_p = meas.p_meas - p_r;
    let v = meas.v_meas;
    let v_hat = state.v_hat;

    let mu_d = compute_mu_d(e_p, v, gains);
    let frame = extract(mu_d, g)?;
    let m = m_matrix(&frame, g)?;
    let psi = compute_psi(&frame, meas.b1, meas.b2, v, v_hat, r1, gains);
    let f_mu_d = compute_f_mu_d(e_p, v, gains);

    // b₂ + u_t e₃ is the measured surrogate of Rδ
    let aero = frame.r_d.transpose() * (meas.b2 + Vec3::e3() * frame.u_t);
    let omega = m * (f_mu_d - sat_phi(v) * aero * gains.k_v) + psi;

    let v_hat_next = v_hat + filter_rate(&frame, meas.b2, v, v_hat, psi, gains) * dt;
    let out = ControlOutput {
        u_t: frame.u_t,
        omega,
        frame,
        psi,
        mu_d,
        v_hat,
    };
    let next = ControllerState {
        v_hat: v_hat_next,
        last_frame: frame,
        last_omega_cmd: omega,
    };
    Ok((out, next))
}
