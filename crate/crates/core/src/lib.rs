//! Position control of a VTOL vehicle straight from IMU and GPS signals.
//!
//! The controller consumes GPS position and velocity plus the body-frame
//! magnetometer and accelerometer vectors and outputs a thrust and a body
//! rate. It never needs an attitude estimate. Around it sit a rigid-body
//! plant with quadratic drag in wind, sensor models, the diagnostics that a
//! stability argument tracks, and a dual-rate simulator with CSV telemetry,
//! SVG figures and a CLI.
//!
//! The numeric core (`mathx`, `extraction`, `controller`, `plant`,
//! `sensors`, `analysis`) is generic over [`Real`] (`f32` or `f64`); the
//! simulator, telemetry and CLI run in `f64`.
//!
//! Conventions: inertial frame north-east-down with `e₃` pointing down;
//! quaternions are `(η, q)` with `R(Q) = I + 2S(q)² − 2ηS(q)` mapping
//! inertial vectors into the body frame.

// `!(x > 0)` guards below also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod extraction;
pub mod mathx;
pub mod plant;
pub mod scalar;
pub mod sensors;
pub mod sim;
pub mod telemetry;

pub use scalar::Real;

pub type Vec3d = mathx::Vec3<f64>;
pub type Mat3d = mathx::Mat3<f64>;
pub type UnitQuaterniond = mathx::UnitQuaternion<f64>;
pub type Vec3f = mathx::Vec3<f32>;
pub type Mat3f = mathx::Mat3<f32>;
pub type UnitQuaternionf = mathx::UnitQuaternion<f32>;

pub type ControlGainsd = controller::ControlGains<f64>;
pub type PlantParamsd = plant::PlantParams<f64>;
pub type PlantStated = plant::PlantState<f64>;
pub type SensorParamsd = sensors::SensorParams<f64>;
