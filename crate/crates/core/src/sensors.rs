//! Measurable outputs `y = [p, v, b₁, b₂]` and the gyro corruption of the
//! applied body rate.
//!
//! Each sensor draws from its own ChaCha stream derived from the master seed,
//! so adding or reordering sensors never shifts another sensor's noise.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::mathx::Vec3;
use crate::plant::PlantState;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams<T> {
    /// Inertial magnetic field `r₁`, gauss.
    pub r1: Vec3<T>,
    /// Magnetometer noise std, gauss.
    pub std_mag: T,
    /// Accelerometer noise std, m/s².
    pub std_acc: T,
    /// Gyro noise std, rad/s.
    pub std_gyro: T,
    /// GPS velocity noise std, m/s.
    pub std_vel: T,
    /// GPS position noise std, m.
    pub std_pos: T,
    /// Constant gyro bias, rad/s.
    pub gyro_bias: Vec3<T>,
    pub seed: u64,
}

impl<T: Real> SensorParams<T> {
    /// Ideal sensors: no noise, no bias.
    pub fn noiseless(r1: Vec3<T>, seed: u64) -> Self {
        Self {
            r1,
            std_mag: T::zero(),
            std_acc: T::zero(),
            std_gyro: T::zero(),
            std_vel: T::zero(),
            std_pos: T::zero(),
            gyro_bias: Vec3::zero(),
            seed,
        }
    }

    pub fn stds_valid(&self) -> bool {
        [self.std_mag, self.std_acc, self.std_gyro, self.std_vel, self.std_pos]
            .iter()
            .all(|s| *s >= T::zero() && s.is_finite())
            && self.gyro_bias.is_finite()
            && self.r1.is_finite()
    }
}

/// One sensor epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements<T> {
    pub p_meas: Vec3<T>,
    pub v_meas: Vec3<T>,
    /// Magnetometer, body frame, gauss.
    pub b1: Vec3<T>,
    /// Accelerometer (specific force), body frame, m/s².
    pub b2: Vec3<T>,
    pub t: T,
}

impl<T: Real> Measurements<T> {
    pub fn is_finite(&self) -> bool {
        self.p_meas.is_finite() && self.v_meas.is_finite() && self.b1.is_finite() && self.b2.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Magnetometer = 1,
    Accelerometer = 2,
    Gyro = 3,
    Velocity = 4,
    Position = 5,
}

/// Per-sensor random streams split from one master seed.
#[derive(Debug, Clone)]
pub struct SensorRng {
    mag: ChaCha12Rng,
    acc: ChaCha12Rng,
    gyro: ChaCha12Rng,
    vel: ChaCha12Rng,
    pos: ChaCha12Rng,
}

impl SensorRng {
    pub fn new(seed: u64) -> Self {
        let stream = |c: Channel| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            rng
        };
        Self {
            mag: stream(Channel::Magnetometer),
            acc: stream(Channel::Accelerometer),
            gyro: stream(Channel::Gyro),
            vel: stream(Channel::Velocity),
            pos: stream(Channel::Position),
        }
    }
}

fn gaussian3<T: Real>(rng: &mut ChaCha12Rng, std: T) -> Vec3<T> {
    let mut draw = || -> T {
        let n: f64 = StandardNormal.sample(rng);
        T::lit(n) * std
    };
    let x = draw();
    let y = draw();
    let z = draw();
    Vec3::new(x, y, z)
}

/// Samples all four outputs. `v_dot` must be the true acceleration at the
/// same instant, so that `b₂ = R(v̇ − g e₃)` is the specific force.
pub fn measure<T: Real>(
    state: &PlantState<T>,
    v_dot: Vec3<T>,
    g: T,
    params: &SensorParams<T>,
    rng: &mut SensorRng,
) -> Measurements<T> {
    let r = state.q.to_rotation();
    Measurements {
        p_meas: state.p + gaussian3(&mut rng.pos, params.std_pos),
        v_meas: state.v + gaussian3(&mut rng.vel, params.std_vel),
        b1: r * params.r1 + gaussian3(&mut rng.mag, params.std_mag),
        b2: r * (v_dot - Vec3::e3() * g) + gaussian3(&mut rng.acc, params.std_acc),
        t: state.t,
    }
}

/// `ω_applied = ω_cmd + bias + n_gyro`.
pub fn corrupt_gyro<T: Real>(omega_cmd: Vec3<T>, params: &SensorParams<T>, rng: &mut SensorRng) -> Vec3<T> {
    omega_cmd + params.gyro_bias + gaussian3(&mut rng.gyro, params.std_gyro)
}
