//! Scenario configuration.
//!
//! Scenarios are TOML files. Every key is optional and falls back to the
//! baseline scenario; unknown keys are rejected. Angular quantities in the
//! `[sensors]` section are given in deg/s and converted to rad/s on load.
//! See [`BASELINE_TOML`] for the full schema with units.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::LyapunovWeights;
use crate::controller::ControlGains;
use crate::mathx::{Mat3, Quaternion, UnitQuaternion, Vec3};
use crate::plant::PlantParams;
use crate::sensors::SensorParams;

/// Seed used when a config does not set one.
pub const DEFAULT_SEED: u64 = 2011;

/// The baseline scenario as a commented config file.
pub const BASELINE_TOML: &str = r#"# vtolsim scenario. All keys are optional; omitted keys take the values below.
# Frames: inertial north-east-down (e3 points down), body frame rotated by q.

# Master seed for the sensor noise streams.
seed = 2011

[timing]
t_end = 60.0          # s
physics_dt = 0.001    # s, RK4 step
control_dt = 0.005    # s, integer multiple of physics_dt

[gains]
k_p = 5.0             # m/s^2, k_p + k_v < g
k_v = 0.1             # m/s^2
k_1 = 5.0             # 1/s, velocity filter
gamma_1 = 0.1         # magnetometer vector gain
gamma_2 = 0.05        # accelerometer vector gain
g = 9.81              # m/s^2

[plant]
mass = 5.0                                              # kg
c_d = [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.05]]  # kg/m, body frame, SPD
wind = [10.0, 5.0, 0.0]                                 # m/s, inertial

[sensors]
r1 = [0.18, 0.0, 0.54]                # gauss, inertial magnetic field
std_mag = 0.01                        # gauss
std_acc = 0.1                         # m/s^2
std_gyro_deg_s = 0.1                  # deg/s
std_vel = 0.5                         # m/s
std_pos = 0.5                         # m
gyro_bias_deg_s = [0.1, 0.05, -0.2]   # deg/s

[initial]
p = [150.0, 50.0, 0.0]     # m
v = [0.0, 0.0, 0.0]        # m/s
q = [1.0, 0.0, 0.0, 0.0]   # (eta, q_x, q_y, q_z), normalized on load
v_hat = [0.0, 0.0, 0.0]    # m/s

[reference]
p_r = [0.0, 0.0, 0.0]      # m

# Weights of the logged Lyapunov diagnostic; they do not affect control.
[lyapunov]
gamma = 1.0
gamma_q = 1.0
k_r = 1.0
"#;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub t_end: f64,
    pub physics_dt: f64,
    pub control_dt: f64,
}

impl Timing {
    /// Physics substeps per controller tick.
    pub fn substeps(&self) -> usize {
        (self.control_dt / self.physics_dt).round() as usize
    }

    /// Controller ticks that drive the plant, `⌈t_end / control_dt⌉`.
    pub fn ticks(&self) -> usize {
        let r = self.t_end / self.control_dt;
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub p: Vec3<f64>,
    pub v: Vec3<f64>,
    pub q: UnitQuaternion<f64>,
    pub v_hat: Vec3<f64>,
}

/// A validated scenario. All angles in rad, rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub plant: PlantParams<f64>,
    pub sensors: SensorParams<f64>,
    pub gains: ControlGains<f64>,
    pub p_r: Vec3<f64>,
    pub initial: InitialState,
    pub timing: Timing,
    pub lyapunov: LyapunovWeights<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TimingFile {
    t_end: f64,
    physics_dt: f64,
    control_dt: f64,
}

impl Default for TimingFile {
    fn default() -> Self {
        Self {
            t_end: 60.0,
            physics_dt: 1e-3,
            control_dt: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GainsFile {
    k_p: f64,
    k_v: f64,
    k_1: f64,
    gamma_1: f64,
    gamma_2: f64,
    g: f64,
}

impl Default for GainsFile {
    fn default() -> Self {
        Self {
            k_p: 5.0,
            k_v: 0.1,
            k_1: 5.0,
            gamma_1: 0.1,
            gamma_2: 0.05,
            g: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlantFile {
    mass: f64,
    c_d: [[f64; 3]; 3],
    wind: [f64; 3],
}

impl Default for PlantFile {
    fn default() -> Self {
        Self {
            mass: 5.0,
            c_d: [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.05]],
            wind: [10.0, 5.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SensorsFile {
    r1: [f64; 3],
    std_mag: f64,
    std_acc: f64,
    std_gyro_deg_s: f64,
    std_vel: f64,
    std_pos: f64,
    gyro_bias_deg_s: [f64; 3],
}

impl Default for SensorsFile {
    fn default() -> Self {
        Self {
            r1: [0.18, 0.0, 0.54],
            std_mag: 0.01,
            std_acc: 0.1,
            std_gyro_deg_s: 0.1,
            std_vel: 0.5,
            std_pos: 0.5,
            gyro_bias_deg_s: [0.1, 0.05, -0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct InitialFile {
    p: [f64; 3],
    v: [f64; 3],
    q: [f64; 4],
    v_hat: [f64; 3],
}

impl Default for InitialFile {
    fn default() -> Self {
        Self {
            p: [150.0, 50.0, 0.0],
            v: [0.0; 3],
            q: [1.0, 0.0, 0.0, 0.0],
            v_hat: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ReferenceFile {
    p_r: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LyapunovFile {
    gamma: f64,
    gamma_q: f64,
    k_r: f64,
}

impl Default for LyapunovFile {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            gamma_q: 1.0,
            k_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    timing: TimingFile,
    gains: GainsFile,
    plant: PlantFile,
    sensors: SensorsFile,
    initial: InitialFile,
    reference: ReferenceFile,
    lyapunov: LyapunovFile,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            timing: TimingFile::default(),
            gains: GainsFile::default(),
            plant: PlantFile::default(),
            sensors: SensorsFile::default(),
            initial: InitialFile::default(),
            reference: ReferenceFile::default(),
            lyapunov: LyapunovFile::default(),
        }
    }
}

fn v3(a: [f64; 3]) -> Vec3<f64> {
    Vec3::from_array(a)
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Validation(msg.into()))
}

impl ScenarioFile {
    fn into_config(self) -> Result<ScenarioConfig, ConfigError> {
        let deg = core::f64::consts::PI / 180.0;
        let g = self.gains.g;
        let gains = ControlGains {
            k_p: self.gains.k_p,
            k_v: self.gains.k_v,
            k_1: self.gains.k_1,
            gamma_1: self.gains.gamma_1,
            gamma_2: self.gains.gamma_2,
            g,
        };
        let plant = PlantParams {
            mass: self.plant.mass,
            c_d: Mat3::from_rows(self.plant.c_d),
            v_w: v3(self.plant.wind),
            g,
        };
        let s = &self.sensors;
        let sensors = SensorParams {
            r1: v3(s.r1),
            std_mag: s.std_mag,
            std_acc: s.std_acc,
            std_gyro: s.std_gyro_deg_s * deg,
            std_vel: s.std_vel,
            std_pos: s.std_pos,
            gyro_bias: v3(s.gyro_bias_deg_s) * deg,
            seed: self.seed,
        };
        let [eta, x, y, z] = self.initial.q;
        let q = match Quaternion::new(eta, Vec3::new(x, y, z)).normalize() {
            Some(q) => q,
            None => return invalid("initial.q must be a non-zero finite quaternion"),
        };
        let cfg = ScenarioConfig {
            plant,
            sensors,
            gains,
            p_r: v3(self.reference.p_r),
            initial: InitialState {
                p: v3(self.initial.p),
                v: v3(self.initial.v),
                q,
                v_hat: v3(self.initial.v_hat),
            },
            timing: Timing {
                t_end: self.timing.t_end,
                physics_dt: self.timing.physics_dt,
                control_dt: self.timing.control_dt,
            },
            lyapunov: LyapunovWeights {
                gamma: self.lyapunov.gamma,
                gamma_q: self.lyapunov.gamma_q,
                k_r: self.lyapunov.k_r,
            },
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_config(c: &ScenarioConfig) -> Self {
        let deg = 180.0 / core::f64::consts::PI;
        let q = c.initial.q.to_array();
        Self {
            seed: c.seed,
            timing: TimingFile {
                t_end: c.timing.t_end,
                physics_dt: c.timing.physics_dt,
                control_dt: c.timing.control_dt,
            },
            gains: GainsFile {
                k_p: c.gains.k_p,
                k_v: c.gains.k_v,
                k_1: c.gains.k_1,
                gamma_1: c.gains.gamma_1,
                gamma_2: c.gains.gamma_2,
                g: c.gains.g,
            },
            plant: PlantFile {
                mass: c.plant.mass,
                c_d: c.plant.c_d.m,
                wind: c.plant.v_w.to_array(),
            },
            sensors: SensorsFile {
                r1: c.sensors.r1.to_array(),
                std_mag: c.sensors.std_mag,
                std_acc: c.sensors.std_acc,
                std_gyro_deg_s: c.sensors.std_gyro * deg,
                std_vel: c.sensors.std_vel,
                std_pos: c.sensors.std_pos,
                gyro_bias_deg_s: (c.sensors.gyro_bias * deg).to_array(),
            },
            initial: InitialFile {
                p: c.initial.p.to_array(),
                v: c.initial.v.to_array(),
                q,
                v_hat: c.initial.v_hat.to_array(),
            },
            reference: ReferenceFile { p_r: c.p_r.to_array() },
            lyapunov: LyapunovFile {
                gamma: c.lyapunov.gamma,
                gamma_q: c.lyapunov.gamma_q,
                k_r: c.lyapunov.k_r,
            },
        }
    }
}

impl ScenarioConfig {
    /// The baseline scenario: wind, sensor noise and gyro bias all on.
    pub fn baseline() -> Self {
        ScenarioFile::default()
            .into_config()
            .expect("baseline scenario is valid")
    }

    /// Same scenario with zero wind.
    pub fn without_wind(mut self) -> Self {
        self.plant.v_w = Vec3::zero();
        self
    }

    /// Same scenario with ideal sensors: no noise and no gyro bias.
    pub fn without_noise(mut self) -> Self {
        self.sensors = SensorParams::noiseless(self.sensors.r1, self.seed);
        self
    }

    /// Baseline with neither wind nor sensor imperfections.
    pub fn undisturbed() -> Self {
        Self::baseline().without_wind().without_noise()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sensors.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gains
            .validate()
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        self.plant
            .validate()
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        if self.plant.g != self.gains.g {
            return invalid("plant and controller must use the same g");
        }
        if !self.sensors.stds_valid() {
            return invalid("sensor stds must be finite and >= 0, field and bias finite");
        }
        if !self.lyapunov.is_valid() {
            return invalid("lyapunov weights must be positive and finite");
        }
        let t = &self.timing;
        if !(t.t_end > 0.0 && t.t_end.is_finite()) {
            return invalid(format!("t_end must be > 0, got {}", t.t_end));
        }
        if !(t.physics_dt > 0.0 && t.physics_dt.is_finite()) {
            return invalid(format!("physics_dt must be > 0, got {}", t.physics_dt));
        }
        if !(t.control_dt >= t.physics_dt && t.control_dt.is_finite()) {
            return invalid("control_dt must be >= physics_dt");
        }
        let ratio = t.control_dt / t.physics_dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return invalid(format!(
                "control_dt = {} is not an integer multiple of physics_dt = {}",
                t.control_dt, t.physics_dt
            ));
        }
        let finite = [self.p_r, self.initial.p, self.initial.v, self.initial.v_hat]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return invalid("reference and initial state must be finite");
        }
        Ok(())
    }

    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        file.into_config()
    }

    /// Serializes to TOML that loads back to the same config (up to the
    /// deg/s round trip).
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ScenarioFile::from_config(self)).expect("scenario serializes")
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_baseline_matches_defaults() {
        let c = ScenarioConfig::from_toml_str(BASELINE_TOML).unwrap();
        assert_eq!(c, ScenarioConfig::baseline());
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), c);
    }

    #[test]
    fn baseline_values() {
        let c = ScenarioConfig::baseline();
        assert_eq!((c.gains.k_p, c.gains.k_v, c.gains.k_1), (5.0, 0.1, 5.0));
        assert_eq!(c.plant.mass, 5.0);
        assert_eq!(c.plant.v_w, Vec3::new(10.0, 5.0, 0.0));
        assert_eq!(c.initial.p, Vec3::new(150.0, 50.0, 0.0));
        assert_eq!(c.p_r, Vec3::zero());
        assert_eq!(c.initial.q, UnitQuaternion::identity());
        assert_eq!(c.timing.substeps(), 5);
        assert_eq!(c.timing.ticks(), 12_000);
        assert!((c.sensors.std_gyro - 0.1f64.to_radians()).abs() < 1e-18);
    }

    #[test]
    fn gain_invariant_is_enforced() {
        let err = ScenarioConfig::from_toml_str("[gains]\nk_p = 6.0\nk_v = 4.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)), "{err}");
    }

    #[test]
    fn omitted_seed_uses_default() {
        let c = ScenarioConfig::from_toml_str("[timing]\nt_end = 1.0\n").unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.sensors.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ScenarioConfig::from_toml_str("[gains]\nk_q = 1.0\n"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            ScenarioConfig::from_toml_str("[extras]\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn rates_must_nest() {
        let err = ScenarioConfig::from_toml_str("[timing]\nphysics_dt = 0.002\ncontrol_dt = 0.005\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
        let err = ScenarioConfig::from_toml_str("[timing]\nt_end = 0.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)));
    }

    #[test]
    fn tick_count_rounds_up() {
        let t = Timing {
            t_end: 0.012,
            physics_dt: 1e-3,
            control_dt: 5e-3,
        };
        assert_eq!(t.ticks(), 3);
        let t = Timing { t_end: 0.005, ..t };
        assert_eq!(t.ticks(), 1);
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::baseline().with_seed(99);
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back.seed, 99);
        assert_eq!(back.gains, c.gains);
        assert_eq!(back.plant, c.plant);
        assert!((back.sensors.gyro_bias - c.sensors.gyro_bias).amax() < 1e-18);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_config(Path::new("/nonexistent/scenario.toml")),
            Err(ConfigError::Io { .. })
        ));
    }
}
