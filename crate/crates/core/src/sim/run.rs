//! Dual-rate closed loop.
//!
//! Per controller tick `k` (time `t_k = k · control_dt`):
//!
//! 1. evaluate the true acceleration under the input held since the last
//!    tick and sample the sensors,
//! 2. run the controller on the measurements,
//! 3. corrupt the commanded rate with gyro bias and noise,
//! 4. log the row,
//! 5. integrate the plant with `(u_t, ω_applied)` held for
//!    `control_dt / physics_dt` RK4 substeps.
//!
//! The controller path sees only [`Measurements`]; plant truth is used for
//! sensors and the logged diagnostics. A run of `n = ⌈t_end / control_dt⌉`
//! intervals produces `n + 1` rows; the last row's command is logged but
//! never applied.

use thiserror::Error;

use crate::analysis::{self, Snapshot};
use crate::controller::{self, ControlError, ControllerState};
use crate::mathx::Vec3;
use crate::plant::{aero_drag, apparent_acceleration, deriv, rk4_step, PlantState};
use crate::sensors::{corrupt_gyro, measure, Measurements, SensorRng};
use crate::telemetry::{LogRecord, RunLog};

use super::config::ScenarioConfig;

/// Any state norm above this aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation diverged at t = {t}: {reason}")]
    Divergence {
        t: f64,
        reason: String,
        /// Rows logged before the abort. Empty for [`run_streaming`].
        partial: Box<RunLog>,
    },
    #[error("controller failed at t = {t}: {source}")]
    Control {
        t: f64,
        #[source]
        source: ControlError,
    },
}

struct Loop<'a> {
    cfg: &'a ScenarioConfig,
    plant: PlantState<f64>,
    ctrl: ControllerState<f64>,
    rng: SensorRng,
    held_u: f64,
    held_omega: Vec3<f64>,
}

enum Abort {
    Diverged { t: f64, reason: String },
    Control { t: f64, source: ControlError },
}

impl<'a> Loop<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let i = &cfg.initial;
        Self {
            cfg,
            plant: PlantState {
                p: i.p,
                v: i.v,
                q: i.q,
                t: 0.0,
            },
            ctrl: ControllerState::new(i.v_hat, cfg.gains.g),
            rng: SensorRng::new(cfg.seed),
            // hover input until the first command
            held_u: cfg.gains.g,
            held_omega: Vec3::zero(),
        }
    }

    fn tick(&mut self, k: usize) -> Result<LogRecord, Abort> {
        let cfg = self.cfg;
        let t = k as f64 * cfg.timing.control_dt;
        self.plant.t = t;
        let v_dot = deriv(&self.plant, self.held_u, self.held_omega, &cfg.plant).v_dot;
        let meas: Measurements<f64> = measure(&self.plant, v_dot, cfg.gains.g, &cfg.sensors, &mut self.rng);

        let (out, next) = controller::step(&meas, cfg.p_r, cfg.sensors.r1, &self.ctrl, &cfg.gains, cfg.timing.control_dt)
            .map_err(|source| Abort::Control { t, source })?;
        let omega_applied = corrupt_gyro(out.omega, &cfg.sensors, &mut self.rng);

        let s = &self.plant;
        let r2 = apparent_acceleration(s, out.u_t, &cfg.plant);
        let snap = Snapshot {
            e_p: s.p - cfg.p_r,
            v: s.v,
            q: s.q,
            r2,
            u_t: out.u_t,
            q_d: out.frame.q_d,
            mu_d: out.mu_d,
            v_hat: out.v_hat,
        };
        let d = analysis::diagnose(&snap, cfg.sensors.r1, &cfg.gains, &cfg.lyapunov);
        let rec = LogRecord {
            t,
            t_end: cfg.timing.t_end,
            p: s.p,
            v: s.v,
            q: s.q.as_quaternion(),
            delta: aero_drag(s.v, s.q, &cfg.plant),
            r2,
            p_meas: meas.p_meas,
            v_meas: meas.v_meas,
            b1: meas.b1,
            b2: meas.b2,
            u_t: out.u_t,
            thrust_n: out.u_t * cfg.plant.mass,
            omega_cmd: out.omega,
            omega_applied,
            mu_d: out.mu_d,
            q_d: out.frame.q_d.as_quaternion(),
            v_hat: out.v_hat,
            psi: out.psi,
            e_p: d.e_p,
            lyapunov: d.lyapunov_v,
            eta_tilde: d.tilde_q.eta(),
            r2_tilde: d.tilde_r2,
            mu_tilde: d.tilde_mu,
            w_min_eig: d.w_min_eig,
        };

        self.ctrl = next;
        self.held_u = out.u_t;
        self.held_omega = omega_applied;
        Ok(rec)
    }

    fn advance(&mut self) -> Result<(), Abort> {
        let cfg = self.cfg;
        for _ in 0..cfg.timing.substeps() {
            self.plant = rk4_step(&self.plant, self.held_u, self.held_omega, &cfg.plant, cfg.timing.physics_dt)
                .map_err(|e| Abort::Diverged {
                    t: self.plant.t,
                    reason: e.to_string(),
                })?;
        }
        let s = &self.plant;
        let worst = s.p.norm().max(s.v.norm()).max(self.ctrl.v_hat.norm());
        if !(worst <= DIVERGENCE_LIMIT) {
            return Err(Abort::Diverged {
                t: s.t,
                reason: format!("state norm {worst:e} exceeds {DIVERGENCE_LIMIT:e}"),
            });
        }
        Ok(())
    }
}

fn drive(cfg: &ScenarioConfig, sink: &mut dyn FnMut(&LogRecord)) -> Result<usize, Abort> {
    let mut lp = Loop::new(cfg);
    let n = cfg.timing.ticks();
    for k in 0..=n {
        let rec = lp.tick(k)?;
        sink(&rec);
        if k < n {
            lp.advance()?;
        }
    }
    Ok(n + 1)
}

fn to_sim_error(a: Abort, partial: RunLog) -> SimError {
    match a {
        Abort::Diverged { t, reason } => SimError::Divergence {
            t,
            reason,
            partial: Box::new(partial),
        },
        Abort::Control { t, source } => SimError::Control { t, source },
    }
}

/// Runs the scenario and returns the full log.
pub fn run(cfg: &ScenarioConfig) -> Result<RunLog, SimError> {
    let mut log = RunLog::default();
    log.records.reserve(cfg.timing.ticks() + 1);
    let res = drive(cfg, &mut |r| log.records.push(*r));
    match res {
        Ok(_) => Ok(log),
        Err(a) => Err(to_sim_error(a, log)),
    }
}

/// Runs the scenario, handing each row to `sink` instead of storing it.
/// Returns the number of rows produced. Meant for long, finely sampled runs.
pub fn run_streaming(cfg: &ScenarioConfig, mut sink: impl FnMut(&LogRecord)) -> Result<usize, SimError> {
    drive(cfg, &mut sink).map_err(|a| to_sim_error(a, RunLog::default()))
}
