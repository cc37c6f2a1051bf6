//! Vector, matrix and unit-quaternion algebra, plus the saturation
//! functions `h` and `φ = ∂h/∂u` used by the position controller.
//!
//! Conventions: `R(Q)` maps inertial-frame vectors into the body frame, so a
//! magnetometer reads `b₁ = R r₁`. The quaternion product is the Hamilton
//! product, which with this Rodrigues map composes as
//! `R(Q₁ ⊙ Q₂) = R(Q₂) R(Q₁)`.

mod mat3;
mod quat;
mod vec3;

pub use mat3::Mat3;
pub use quat::{quat_inv, quat_mul, quat_to_rot, Quaternion, UnitQuaternion};
pub use vec3::Vec3;

use crate::scalar::Real;

/// Cross-product matrix: `skew(x) * y == x × y`.
pub fn skew<T: Real>(x: Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    Mat3::from_rows([[z, -x.z, x.y], [x.z, z, -x.x], [-x.y, x.x, z]])
}

/// Saturation `h(u) = (1 + uᵀu)^{-1/2} u`; `‖h(u)‖ < 1`.
pub fn sat_h<T: Real>(u: Vec3<T>) -> Vec3<T> {
    u * (T::one() + u.norm_squared()).sqrt().recip()
}

/// Jacobian of [`sat_h`]: `φ(u) = (1 + uᵀu)^{-3/2} (I − S(u)²)`.
pub fn sat_phi<T: Real>(u: Vec3<T>) -> Mat3<T> {
    let s = skew(u);
    let k = (T::one() + u.norm_squared()).powf(T::lit(-1.5));
    (Mat3::identity() - s * s).scale(k)
}
