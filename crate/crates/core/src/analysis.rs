//! Closed-loop diagnostics built from plant truth and controller internals.
//!
//! None of this feeds back into the controller. The quantities are the ones a
//! stability argument for the controller tracks: attitude error `Q̃ = Q ⊙ Q_d⁻¹`,
//! the apparent-acceleration error `r̃₂ = k₁ṽ − (I − R̃) r₂`, the Lyapunov
//! candidate
//!
//! ```text
//! V = γ k_p (√(1 + e_pᵀe_p) − 1) + (γ/2) vᵀv + (γ k_r/2) r̃₂ᵀr̃₂ + γ_q (1 − η̃²)
//! ```
//!
//! and `λ_min(W)` with `W = −γ₁ S(r₁)² − γ₂ S(r₂)²`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::controller::ControlGains;
use crate::mathx::{skew, Mat3, Quaternion, UnitQuaternion, Vec3};
use crate::scalar::Real;
use crate::telemetry::{LogRecord, RunLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("incomplete log: {0}")]
    IncompleteLog(String),
}

/// Weights of the Lyapunov candidate. All positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights<T> {
    pub gamma: T,
    pub gamma_q: T,
    pub k_r: T,
}

impl<T: Real> Default for LyapunovWeights<T> {
    fn default() -> Self {
        Self {
            gamma: T::one(),
            gamma_q: T::one(),
            k_r: T::one(),
        }
    }
}

impl<T: Real> LyapunovWeights<T> {
    pub fn is_valid(&self) -> bool {
        [self.gamma, self.gamma_q, self.k_r]
            .iter()
            .all(|x| x.is_finite() && *x > T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<T> {
    pub e_p: Vec3<T>,
    pub v: Vec3<T>,
    pub u_t: T,
    pub tilde_q: UnitQuaternion<T>,
    pub tilde_r2: Vec3<T>,
    pub lyapunov_v: T,
    pub w_min_eig: T,
    /// `μ̃ = μ − μ_d` with `μ = g e₃ − u_t Rᵀ e₃`.
    pub tilde_mu: Vec3<T>,
}

/// Truth and controller quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot<T> {
    pub e_p: Vec3<T>,
    pub v: Vec3<T>,
    pub q: UnitQuaternion<T>,
    pub r2: Vec3<T>,
    pub u_t: T,
    pub q_d: UnitQuaternion<T>,
    pub mu_d: Vec3<T>,
    pub v_hat: Vec3<T>,
}

/// `Q̃ = Q ⊙ Q_d⁻¹`; `R(Q̃) = R_dᵀ R`.
pub fn attitude_error<T: Real>(q: UnitQuaternion<T>, q_d: UnitQuaternion<T>) -> UnitQuaternion<T> {
    q * q_d.inverse()
}

/// `r̃₂ = k₁ (v − v̂) − (I − R̃) r₂`
pub fn tilde_r2<T: Real>(v: Vec3<T>, v_hat: Vec3<T>, k_1: T, tilde_r: &Mat3<T>, r2: Vec3<T>) -> Vec3<T> {
    (v - v_hat) * k_1 - (Mat3::identity() - *tilde_r) * r2
}

pub fn lyapunov<T: Real>(
    e_p: Vec3<T>,
    v: Vec3<T>,
    tilde_r2: Vec3<T>,
    tilde_eta: T,
    k_p: T,
    w: &LyapunovWeights<T>,
) -> T {
    let half = T::lit(0.5);
    let pos = w.gamma * k_p * ((T::one() + e_p.norm_squared()).sqrt() - T::one());
    let vel = w.gamma * half * v.norm_squared();
    let acc = w.gamma * w.k_r * half * tilde_r2.norm_squared();
    let att = w.gamma_q * (T::one() - tilde_eta * tilde_eta);
    pos + vel + acc + att
}

/// `W = −γ₁ S(r₁)² − γ₂ S(r₂)²`
pub fn w_matrix<T: Real>(r1: Vec3<T>, r2: Vec3<T>, gamma_1: T, gamma_2: T) -> Mat3<T> {
    let s1 = skew(r1);
    let s2 = skew(r2);
    -((s1 * s1).scale(gamma_1) + (s2 * s2).scale(gamma_2))
}

pub fn w_min_eig<T: Real>(r1: Vec3<T>, r2: Vec3<T>, gamma_1: T, gamma_2: T) -> T {
    w_matrix(r1, r2, gamma_1, gamma_2).symmetric_eigenvalues()[0]
}

/// `(f₁, f₂)` with `μ̃ = f₁ q̃` and `(I − R̃) x = f₂ q̃`:
///
/// `f₁ = 2u_t (η̃I − S(q̃)) S(Rᵀe₃)`, `f₂ = 2 (S(q̃) − η̃I) S(x)`.
pub fn factorization_check<T: Real>(
    u_t: T,
    tilde_q: UnitQuaternion<T>,
    r_body_e3: Vec3<T>,
    x: Vec3<T>,
) -> (Mat3<T>, Mat3<T>) {
    let two = T::lit(2.0);
    let eta = Mat3::identity().scale(tilde_q.eta());
    let sq = skew(tilde_q.vector());
    let f1 = (eta - sq) * skew(r_body_e3) * (two * u_t);
    let f2 = (sq - eta) * skew(x) * two;
    (f1, f2)
}

pub fn diagnose<T: Real>(
    s: &Snapshot<T>,
    r1: Vec3<T>,
    gains: &ControlGains<T>,
    w: &LyapunovWeights<T>,
) -> Diagnostics<T> {
    let tilde_q = attitude_error(s.q, s.q_d);
    let tr2 = tilde_r2(s.v, s.v_hat, gains.k_1, &tilde_q.to_rotation(), s.r2);
    let rt_e3 = s.q.to_rotation().transpose() * Vec3::e3();
    let mu = Vec3::e3() * gains.g - rt_e3 * s.u_t;
    Diagnostics {
        e_p: s.e_p,
        v: s.v,
        u_t: s.u_t,
        tilde_q,
        tilde_r2: tr2,
        lyapunov_v: lyapunov(s.e_p, s.v, tr2, tilde_q.eta(), gains.k_p, w),
        w_min_eig: w_min_eig(r1, s.r2, gains.gamma_1, gains.gamma_2),
        tilde_mu: mu - s.mu_d,
    }
}

/// Thresholds used by [`check_log`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Enforce the disturbance-free properties: stepwise Lyapunov decrease,
    /// the `|η̃|` floor and `λ_min(W) > 0`. Only meaningful for runs without
    /// wind, noise or gyro bias.
    pub strict: bool,
    /// Per-step allowance relative to `V(t₀)`.
    pub lyapunov_rel_tol: f64,
    /// Absolute per-step allowance.
    pub lyapunov_abs_tol: f64,
    /// Lower cap of the `|η̃|` floor, `min(|η̃(t₀)|/2, rho)`.
    pub rho: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            strict: false,
            lyapunov_rel_tol: 1e-6,
            lyapunov_abs_tol: 1e-12,
            rho: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub control_dt: f64,
    pub strict: bool,
    pub thrust_window: (f64, f64),
    pub thrust_violations: usize,
    pub u_t_min: f64,
    pub u_t_max: f64,
    pub lyapunov_initial: f64,
    pub lyapunov_final: f64,
    pub lyapunov_increase_events: usize,
    pub lyapunov_max_increase: f64,
    pub eta_tilde_initial: f64,
    pub eta_tilde_min_abs: f64,
    pub eta_floor: f64,
    pub eta_floor_violations: usize,
    pub w_min_eig_min: f64,
    pub terminal_e_p: f64,
    pub terminal_v: f64,
    pub terminal_tilde_r2: f64,
    pub terminal_attitude_error: f64,
    /// `max ‖e_p‖` over the final 10 s of the log.
    pub last_10s_max_e_p: f64,
    pub checks: Vec<CheckItem>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rows            {} (t = {} .. {}, dt = {})", self.rows, self.t_start, self.t_end, self.control_dt);
        let _ = writeln!(
            s,
            "thrust          u_t in [{:.6}, {:.6}], window [{:.6}, {:.6}], violations {}",
            self.u_t_min, self.u_t_max, self.thrust_window.0, self.thrust_window.1, self.thrust_violations
        );
        let _ = writeln!(
            s,
            "lyapunov        V0 = {:.6e}, Vf = {:.6e}, increase events {}, max increase {:.3e}",
            self.lyapunov_initial, self.lyapunov_final, self.lyapunov_increase_events, self.lyapunov_max_increase
        );
        let _ = writeln!(
            s,
            "attitude error  |eta~(t0)| = {:.6}, min |eta~| = {:.6}, floor {:.6}",
            self.eta_tilde_initial.abs(),
            self.eta_tilde_min_abs,
            self.eta_floor
        );
        let _ = writeln!(s, "lambda_min(W)   min {:.6e}", self.w_min_eig_min);
        let _ = writeln!(
            s,
            "terminal        |e_p| = {:.6e}, |v| = {:.6e}, |r2~| = {:.6e}, 1-eta~^2 = {:.6e}",
            self.terminal_e_p, self.terminal_v, self.terminal_tilde_r2, self.terminal_attitude_error
        );
        let _ = writeln!(s, "last 10 s       max |e_p| = {:.6e}", self.last_10s_max_e_p);
        for c in &self.checks {
            let _ = writeln!(s, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(s, "{}", if self.passed() { "PASSED" } else { "FAILED" });
        s
    }

    /// Machine-readable `key=value` lines, one per field, in a fixed order.
    pub fn to_summary(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("schema", "vtolsim-check-1".into());
        kv("rows", self.rows.to_string());
        kv("t_start", format!("{:e}", self.t_start));
        kv("t_end", format!("{:e}", self.t_end));
        kv("control_dt", format!("{:e}", self.control_dt));
        kv("strict", self.strict.to_string());
        kv("thrust_window_lo", format!("{:e}", self.thrust_window.0));
        kv("thrust_window_hi", format!("{:e}", self.thrust_window.1));
        kv("thrust_violations", self.thrust_violations.to_string());
        kv("u_t_min", format!("{:e}", self.u_t_min));
        kv("u_t_max", format!("{:e}", self.u_t_max));
        kv("lyapunov_initial", format!("{:e}", self.lyapunov_initial));
        kv("lyapunov_final", format!("{:e}", self.lyapunov_final));
        kv("lyapunov_increase_events", self.lyapunov_increase_events.to_string());
        kv("lyapunov_max_increase", format!("{:e}", self.lyapunov_max_increase));
        kv("eta_tilde_initial", format!("{:e}", self.eta_tilde_initial));
        kv("eta_tilde_min_abs", format!("{:e}", self.eta_tilde_min_abs));
        kv("eta_floor", format!("{:e}", self.eta_floor));
        kv("eta_floor_violations", self.eta_floor_violations.to_string());
        kv("w_min_eig_min", format!("{:e}", self.w_min_eig_min));
        kv("terminal_e_p", format!("{:e}", self.terminal_e_p));
        kv("terminal_v", format!("{:e}", self.terminal_v));
        kv("terminal_tilde_r2", format!("{:e}", self.terminal_tilde_r2));
        kv("terminal_attitude_error", format!("{:e}", self.terminal_attitude_error));
        kv("last_10s_max_e_p", format!("{:e}", self.last_10s_max_e_p));
        for c in &self.checks {
            kv(&format!("check.{}", c.name), if c.passed { "pass".into() } else { "fail".into() });
        }
        kv("passed", self.passed().to_string());
        s
    }
}

fn unit_or_incomplete(q: Quaternion<f64>, what: &str, t: f64) -> Result<UnitQuaternion<f64>, AnalysisError> {
    q.normalize()
        .ok_or_else(|| AnalysisError::IncompleteLog(format!("{what} is not a valid quaternion at t = {t}")))
}

fn validate_log(log: &RunLog) -> Result<f64, AnalysisError> {
    let incomplete = |m: String| Err(AnalysisError::IncompleteLog(m));
    if log.truncated {
        return incomplete("log ends in the middle of a row".into());
    }
    let recs = &log.records;
    if recs.len() < 2 {
        return incomplete(format!("need at least 2 rows, got {}", recs.len()));
    }
    if recs.iter().any(|r| r.to_row().iter().any(|x| !x.is_finite())) {
        return incomplete("non-finite channel value".into());
    }
    let dt = recs[1].t - recs[0].t;
    let t_end = recs[0].t_end;
    if !(dt > 0.0) {
        return incomplete("timestamps are not increasing".into());
    }
    for (k, w) in recs.windows(2).enumerate() {
        let step = w[1].t - w[0].t;
        if !(step > 0.0) || (step - dt).abs() > 1e-6 * dt {
            return incomplete(format!("irregular step after row {k} (t = {})", w[0].t));
        }
    }
    if recs.iter().any(|r| r.t_end != t_end) {
        return incomplete("inconsistent t_end column".into());
    }
    let last = recs[recs.len() - 1].t;
    if last < t_end - 1e-6 * dt {
        return incomplete(format!("log stops at t = {last}, run planned until t = {t_end}"));
    }
    Ok(dt)
}

/// Recomputes `(V, η̃, ‖r̃₂‖)` for one row from its truth and controller channels.
fn recompute(rec: &LogRecord, gains: &ControlGains<f64>, w: &LyapunovWeights<f64>) -> Result<(f64, f64, f64), AnalysisError> {
    let q = unit_or_incomplete(rec.q, "attitude", rec.t)?;
    let q_d = unit_or_incomplete(rec.q_d, "desired attitude", rec.t)?;
    let tq = attitude_error(q, q_d);
    let tr2 = tilde_r2(rec.v, rec.v_hat, gains.k_1, &tq.to_rotation(), rec.r2);
    let v = lyapunov(rec.e_p, rec.v, tr2, tq.eta(), gains.k_p, w);
    Ok((v, tq.eta(), tr2.norm()))
}

/// Checks a complete run log against the thrust window and, in strict
/// mode, the disturbance-free stability observables. Pure: equal logs give
/// equal reports.
pub fn check_log(
    log: &RunLog,
    gains: &ControlGains<f64>,
    w: &LyapunovWeights<f64>,
    opts: &CheckOptions,
) -> Result<Report, AnalysisError> {
    let dt = validate_log(log)?;
    let recs = &log.records;
    let (lo, hi) = gains.thrust_window();

    let mut thrust_violations = 0;
    let (mut u_min, mut u_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut w_min = f64::INFINITY;
    let mut series = Vec::with_capacity(recs.len());
    for r in recs {
        if !(r.u_t >= lo && r.u_t <= hi) {
            thrust_violations += 1;
        }
        u_min = u_min.min(r.u_t);
        u_max = u_max.max(r.u_t);
        w_min = w_min.min(r.w_min_eig);
        series.push(recompute(r, gains, w)?);
    }

    let v0 = series[0].0;
    let allowance = opts.lyapunov_rel_tol * v0 + opts.lyapunov_abs_tol;
    let mut increase_events = 0;
    let mut max_increase = f64::NEG_INFINITY;
    for pair in series.windows(2) {
        let inc = pair[1].0 - pair[0].0;
        max_increase = max_increase.max(inc);
        if inc > allowance {
            increase_events += 1;
        }
    }

    let eta0 = series[0].1;
    let eta_floor = (eta0.abs() / 2.0).min(opts.rho);
    let eta_min_abs = series.iter().map(|s| s.1.abs()).fold(f64::INFINITY, f64::min);
    let eta_floor_violations = series.iter().filter(|s| s.1.abs() < eta_floor).count();

    let last = recs[recs.len() - 1];
    let (vf, eta_f, r2f) = series[series.len() - 1];
    let t_last = last.t;
    let last_10s_max_e_p = recs
        .iter()
        .filter(|r| r.t >= t_last - 10.0)
        .map(|r| r.e_p.norm())
        .fold(0.0, f64::max);

    let mut checks = vec![CheckItem {
        name: "thrust_window",
        passed: thrust_violations == 0,
        detail: format!("{thrust_violations} of {} rows outside [{lo:.6}, {hi:.6}]", recs.len()),
    }];
    if opts.strict {
        checks.push(CheckItem {
            name: "lyapunov_monotone",
            passed: increase_events == 0,
            detail: format!("{increase_events} steps with V increase > {allowance:.3e} (max {max_increase:.3e})"),
        });
        checks.push(CheckItem {
            name: "eta_floor",
            passed: eta_floor_violations == 0,
            detail: format!("min |eta~| = {eta_min_abs:.6} vs floor {eta_floor:.6}"),
        });
        checks.push(CheckItem {
            name: "w_positive",
            passed: w_min > 0.0,
            detail: format!("min lambda_min(W) = {w_min:.6e}"),
        });
    }

    Ok(Report {
        rows: recs.len(),
        t_start: recs[0].t,
        t_end: t_last,
        control_dt: dt,
        strict: opts.strict,
        thrust_window: (lo, hi),
        thrust_violations,
        u_t_min: u_min,
        u_t_max: u_max,
        lyapunov_initial: v0,
        lyapunov_final: vf,
        lyapunov_increase_events: increase_events,
        lyapunov_max_increase: max_increase,
        eta_tilde_initial: eta0,
        eta_tilde_min_abs: eta_min_abs,
        eta_floor,
        eta_floor_violations,
        w_min_eig_min: w_min,
        terminal_e_p: last.e_p.norm(),
        terminal_v: last.v.norm(),
        terminal_tilde_r2: r2f,
        terminal_attitude_error: 1.0 - eta_f * eta_f,
        last_10s_max_e_p,
        checks,
    })
}
