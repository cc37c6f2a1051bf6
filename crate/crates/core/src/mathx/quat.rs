use core::ops::Mul;

use super::{skew, Mat3, Vec3};
use crate::scalar::Real;

/// Unconstrained quaternion `(η, q)`. Used for rates and for intermediate
/// integrator stages that are not yet renormalized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion<T> {
    pub eta: T,
    pub q: Vec3<T>,
}

impl<T: Real> Quaternion<T> {
    pub fn new(eta: T, q: Vec3<T>) -> Self {
        Self { eta, q }
    }

    pub fn norm(&self) -> T {
        (self.eta * self.eta + self.q.norm_squared()).sqrt()
    }

    pub fn add_scaled(&self, other: &Self, s: T) -> Self {
        Self::new(self.eta + other.eta * s, self.q + other.q * s)
    }

    pub fn is_finite(&self) -> bool {
        self.eta.is_finite() && self.q.is_finite()
    }

    /// Projects onto the unit sphere. Returns `None` for a zero or
    /// non-finite quaternion.
    pub fn normalize(&self) -> Option<UnitQuaternion<T>> {
        let n = self.norm();
        if !n.is_finite() || n <= T::zero() {
            return None;
        }
        Some(UnitQuaternion {
            eta: self.eta / n,
            q: self.q / n,
        })
    }

    /// `R = I + 2S(q)² − 2ηS(q)` evaluated without a norm check.
    pub fn rotation_unchecked(&self) -> Mat3<T> {
        let s = skew(self.q);
        let two = T::lit(2.0);
        Mat3::identity() + (s * s).scale(two) - s.scale(two * self.eta)
    }

    /// Kinematics `Q̇ = ½ [−qᵀ; ηI + S(q)] ω` for body angular velocity `ω`.
    pub fn rate(&self, omega: Vec3<T>) -> Quaternion<T> {
        let half = T::lit(0.5);
        Quaternion::new(
            -self.q.dot(omega) * half,
            (omega * self.eta + self.q.cross(omega)) * half,
        )
    }
}

/// Attitude on the unit-quaternion group, `η² + ‖q‖² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion<T> {
    eta: T,
    q: Vec3<T>,
}

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self {
            eta: T::one(),
            q: Vec3::zero(),
        }
    }

    /// Normalizes `(eta, q)`. Panics on a zero or non-finite input; use
    /// [`Quaternion::normalize`] for a fallible version.
    pub fn new_normalize(eta: T, q: Vec3<T>) -> Self {
        Quaternion::new(eta, q)
            .normalize()
            .expect("cannot normalize a zero or non-finite quaternion")
    }

    /// `(cos(θ/2), sin(θ/2)·axis)`; `axis` need not be unit length.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let n = axis.norm();
        if n == T::zero() {
            return Self::identity();
        }
        let half = angle * T::lit(0.5);
        Self::new_normalize(half.cos(), axis * (half.sin() / n))
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn vector(&self) -> Vec3<T> {
        self.q
    }

    pub fn as_quaternion(&self) -> Quaternion<T> {
        Quaternion::new(self.eta, self.q)
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.eta, self.q.x, self.q.y, self.q.z]
    }

    pub fn norm(&self) -> T {
        self.as_quaternion().norm()
    }

    pub fn inverse(&self) -> Self {
        Self {
            eta: self.eta,
            q: -self.q,
        }
    }

    pub fn negate(&self) -> Self {
        Self {
            eta: -self.eta,
            q: -self.q,
        }
    }

    pub fn to_rotation(&self) -> Mat3<T> {
        self.as_quaternion().rotation_unchecked()
    }

    pub fn rate(&self, omega: Vec3<T>) -> Quaternion<T> {
        self.as_quaternion().rate(omega)
    }

    /// Sign-invariant distance `min(‖Q₁ − Q₂‖, ‖Q₁ + Q₂‖)`.
    pub fn distance(&self, other: &Self) -> T {
        let d = |s: T| {
            let e = self.eta - other.eta * s;
            (e * e + (self.q - other.q * s).norm_squared()).sqrt()
        };
        d(T::one()).min(d(-T::one()))
    }

    pub fn cast<U: Real>(&self) -> UnitQuaternion<U> {
        UnitQuaternion::new_normalize(U::lit(self.eta.as_f64()), self.q.cast())
    }
}

impl<T: Real> Mul for UnitQuaternion<T> {
    type Output = Self;

    /// `(η₁η₂ − q₁ᵀq₂, η₁q₂ + η₂q₁ + S(q₁)q₂)`, renormalized.
    fn mul(self, b: Self) -> Self {
        let eta = self.eta * b.eta - self.q.dot(b.q);
        let q = b.q * self.eta + self.q * b.eta + self.q.cross(b.q);
        Self::new_normalize(eta, q)
    }
}

pub fn quat_mul<T: Real>(a: UnitQuaternion<T>, b: UnitQuaternion<T>) -> UnitQuaternion<T> {
    a * b
}

pub fn quat_inv<T: Real>(a: UnitQuaternion<T>) -> UnitQuaternion<T> {
    a.inverse()
}

/// Rodrigues map `R(Q) = I + 2S(q)² − 2ηS(q)`. `R` takes inertial vectors
/// into the body frame, and `R(Q₁ ⊙ Q₂) = R(Q₂) R(Q₁)`.
pub fn quat_to_rot<T: Real>(a: UnitQuaternion<T>) -> Mat3<T> {
    a.to_rotation()
}
