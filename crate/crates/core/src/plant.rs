//! Ground-truth translational dynamics driven by thrust and body rate.
//!
//! ```text
//! ṗ = v
//! v̇ = g e₃ − u_t Rᵀ e₃ + δ
//! Q̇ = ½ [−qᵀ; ηI + S(q)] ω
//! ```
//!
//! with drag `δ = −(1/m_b) ‖v − v_w‖ Rᵀ C_d R (v − v_w)` in a constant wind
//! `v_w`. Inertial frame is north-east-down; `e₃` points down.

use thiserror::Error;

use crate::mathx::{Mat3, Quaternion, UnitQuaternion, Vec3};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("plant state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams<T> {
    /// Vehicle mass `m_b`, kg.
    pub mass: T,
    /// Body-frame drag coefficients `C_d`, kg/m. Symmetric positive-definite.
    pub c_d: Mat3<T>,
    /// Inertial wind velocity, m/s.
    pub v_w: Vec3<T>,
    /// Gravitational acceleration, m/s².
    pub g: T,
}

impl<T: Real> PlantParams<T> {
    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(PlantError::InvalidParams(format!("mass must be > 0, got {}", self.mass)));
        }
        if !self.c_d.is_finite() || !self.c_d.is_symmetric(T::lit(1e-12)) {
            return Err(PlantError::InvalidParams("C_d must be finite and symmetric".into()));
        }
        if !(self.c_d.symmetric_eigenvalues()[0] > T::zero()) {
            return Err(PlantError::InvalidParams("C_d must be positive-definite".into()));
        }
        if !self.v_w.is_finite() || !(self.g > T::zero()) {
            return Err(PlantError::InvalidParams("wind must be finite and g > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T> {
    pub p: Vec3<T>,
    pub v: Vec3<T>,
    pub q: UnitQuaternion<T>,
    pub t: T,
}

impl<T: Real> PlantState<T> {
    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite() && self.q.as_quaternion().is_finite() && self.t.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantDeriv<T> {
    pub p_dot: Vec3<T>,
    pub v_dot: Vec3<T>,
    pub q_dot: Quaternion<T>,
}

fn drag_with<T: Real>(v: Vec3<T>, r: &Mat3<T>, params: &PlantParams<T>) -> Vec3<T> {
    let air = v - params.v_w;
    let speed = air.norm();
    r.transpose() * (params.c_d * (*r * air)) * (-speed / params.mass)
}

pub fn aero_drag<T: Real>(v: Vec3<T>, q: UnitQuaternion<T>, params: &PlantParams<T>) -> Vec3<T> {
    drag_with(v, &q.to_rotation(), params)
}

/// Apparent acceleration `r₂ = v̇ − g e₃ = −u_t Rᵀ e₃ + δ`.
pub fn apparent_acceleration<T: Real>(state: &PlantState<T>, u_t: T, params: &PlantParams<T>) -> Vec3<T> {
    let r = state.q.to_rotation();
    -(r.transpose() * Vec3::e3()) * u_t + drag_with(state.v, &r, params)
}

fn field<T: Real>(
    v: Vec3<T>,
    q: &Quaternion<T>,
    u_t: T,
    omega: Vec3<T>,
    params: &PlantParams<T>,
) -> PlantDeriv<T> {
    let r = q.rotation_unchecked();
    let e3 = Vec3::e3();
    let v_dot = e3 * params.g - r.transpose() * e3 * u_t + drag_with(v, &r, params);
    PlantDeriv {
        p_dot: v,
        v_dot,
        q_dot: q.rate(omega),
    }
}

pub fn deriv<T: Real>(state: &PlantState<T>, u_t: T, omega_applied: Vec3<T>, params: &PlantParams<T>) -> PlantDeriv<T> {
    field(state.v, &state.q.as_quaternion(), u_t, omega_applied, params)
}

/// One classical RK4 step with `(u_t, ω)` held over the step; the
/// quaternion is renormalized at the end.
pub fn rk4_step<T: Real>(
    state: &PlantState<T>,
    u_t: T,
    omega_applied: Vec3<T>,
    params: &PlantParams<T>,
    dt: T,
) -> Result<PlantState<T>, PlantError> {
    let half = dt * T::lit(0.5);
    let q0 = state.q.as_quaternion();
    let (p0, v0) = (state.p, state.v);

    let k1 = field(v0, &q0, u_t, omega_applied, params);
    let k2 = field(v0 + k1.v_dot * half, &q0.add_scaled(&k1.q_dot, half), u_t, omega_applied, params);
    let k3 = field(v0 + k2.v_dot * half, &q0.add_scaled(&k2.q_dot, half), u_t, omega_applied, params);
    let k4 = field(v0 + k3.v_dot * dt, &q0.add_scaled(&k3.q_dot, dt), u_t, omega_applied, params);

    let w = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let comb = |a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, d: Vec3<T>| (a + (b + c) * two + d) * w;
    let p = p0 + comb(k1.p_dot, k2.p_dot, k3.p_dot, k4.p_dot);
    let v = v0 + comb(k1.v_dot, k2.v_dot, k3.v_dot, k4.v_dot);
    let q_raw = Quaternion::new(
        q0.eta + (k1.q_dot.eta + (k2.q_dot.eta + k3.q_dot.eta) * two + k4.q_dot.eta) * w,
        q0.q + comb(k1.q_dot.q, k2.q_dot.q, k3.q_dot.q, k4.q_dot.q),
    );
    let t = state.t + dt;
    let q = match q_raw.normalize() {
        Some(q) if p.is_finite() && v.is_finite() => q,
        _ => return Err(PlantError::NonFinite { t: t.as_f64() }),
    };
    Ok(PlantState { p, v, q, t })
}
