//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//! `cargo test --test acceptance`

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vtolsim::analysis::{attitude_error, check_log, factorization_check, tilde_r2, w_matrix, w_min_eig, CheckOptions};
use vtolsim::controller::{compute_psi, ControlGains};
use vtolsim::extraction::{extract, m_matrix};
use vtolsim::mathx::{quat_to_rot, sat_h, sat_phi, skew, Mat3, UnitQuaternion, Vec3};
use vtolsim::plant::{deriv, rk4_step, PlantParams, PlantState};
use vtolsim::sim::{run, run_streaming, ScenarioConfig};
use vtolsim::telemetry::RunLog;

type V = Vec3<f64>;
type Q = UnitQuaternion<f64>;

const G: f64 = 9.81;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_vec(r: &mut ChaCha8Rng, scale: f64) -> V {
    V::new(
        r.random_range(-scale..scale),
        r.random_range(-scale..scale),
        r.random_range(-scale..scale),
    )
}

/// Uniform in the open ball of radius `radius`.
fn rand_ball(r: &mut ChaCha8Rng, radius: f64) -> V {
    loop {
        let v = rand_vec(r, radius);
        if v.norm() < radius {
            return v;
        }
    }
}

fn rand_quat(r: &mut ChaCha8Rng) -> Q {
    loop {
        let eta = r.random_range(-1.0..1.0);
        let q = rand_vec(r, 1.0);
        let n2 = eta * eta + q.norm_squared();
        if n2 > 1e-4 && n2 <= 1.0 {
            return Q::new_normalize(eta, q);
        }
    }
}

fn max_abs(m: &Mat3<f64>) -> f64 {
    m.amax()
}

fn baseline_gains() -> ControlGains<f64> {
    ScenarioConfig::baseline().gains
}

fn thrust_window() -> Outcome {
    let (lo, hi) = baseline_gains().thrust_window();
    let base = ScenarioConfig::baseline();
    let scenarios = [
        ("full", base),
        ("no-wind", base.without_wind()),
        ("no-noise", base.without_noise()),
        ("undisturbed", ScenarioConfig::undisturbed()),
    ];
    let mut parts = Vec::new();
    let mut ok = (lo - 4.71).abs() < 1e-12 && (hi - 14.91).abs() < 1e-12;
    let mut full_time = Duration::ZERO;
    for (name, cfg) in scenarios {
        let start = Instant::now();
        let log = match run(&cfg) {
            Ok(l) => l,
            Err(e) => return outcome(false, format!("{name}: {e}")),
        };
        if name == "full" {
            full_time = start.elapsed();
        }
        let violations = log.records.iter().filter(|r| !(r.u_t >= lo && r.u_t <= hi)).count();
        ok &= violations == 0 && log.records.last().map(|r| r.t) == Some(60.0);
        parts.push(format!("{name} {violations}/{}", log.len()));
    }
    ok &= full_time < Duration::from_secs(5);
    outcome(
        ok,
        format!(
            "window [{lo}, {hi}]; violations {}; full 60 s run {:.2} s",
            parts.join(", "),
            full_time.as_secs_f64()
        ),
    )
}

fn extraction_reconstruction() -> Outcome {
    let mut r = rng(2);
    let e3 = V::e3();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        // every non-singular demand up to |μ_d| = 3g
        let mu = rand_ball(&mut r, 3.0 * G);
        let f = match extract(mu, G) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("extract failed on admissible {mu:?}: {e}")),
        };
        let err = (e3 * G - f.r_d.transpose() * e3 * f.u_t - mu).norm();
        worst = worst.max(err);
    }
    let dt = start.elapsed();
    outcome(
        worst <= 1e-9 && dt < Duration::from_secs(1),
        format!("max residual {worst:.3e} over 1e5 samples in {:.3} s", dt.as_secs_f64()),
    )
}

fn mu_path(t: f64) -> (V, V) {
    let mu = V::new(
        2.0 * (0.7 * t).sin(),
        1.5 * (0.4 * t).cos() - 0.5,
        1.2 * (0.9 * t + 0.3).sin(),
    );
    let mu_dot = V::new(
        1.4 * (0.7 * t).cos(),
        -0.6 * (0.4 * t).sin(),
        1.08 * (0.9 * t + 0.3).cos(),
    );
    (mu, mu_dot)
}

fn omega_d(t: f64) -> V {
    let (mu, mu_dot) = mu_path(t);
    let f = extract(mu, G).expect("path stays admissible");
    m_matrix(&f, G).expect("non-degenerate") * mu_dot
}

fn m_consistency() -> Outcome {
    let dt = 1e-4;
    let steps = 100_000;
    let mut q = extract(mu_path(0.0).0, G).unwrap().q_d;
    let mut worst: f64 = 0.0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let q0 = q.as_quaternion();
        let k1 = q0.rate(omega_d(t));
        let k2 = q0.add_scaled(&k1, dt / 2.0).rate(omega_d(t + dt / 2.0));
        let k3 = q0.add_scaled(&k2, dt / 2.0).rate(omega_d(t + dt / 2.0));
        let k4 = q0.add_scaled(&k3, dt).rate(omega_d(t + dt));
        let sum = k1.add_scaled(&k2, 2.0).add_scaled(&k3, 2.0).add_scaled(&k4, 1.0);
        q = q0.add_scaled(&sum, dt / 6.0).normalize().expect("finite");
        let direct = extract(mu_path(t + dt).0, G).unwrap().q_d;
        worst = worst.max(q.distance(&direct));
    }
    outcome(worst <= 1e-6, format!("max quaternion distance {worst:.3e} over 10 s at dt = 1e-4"))
}

fn lyapunov_monotone() -> Outcome {
    let mut cfg = ScenarioConfig::undisturbed();
    cfg.gains.gamma_1 = 5.0;
    cfg.gains.gamma_2 = 5.0;
    cfg.gains.k_1 = 20.0;
    cfg.timing.physics_dt = 1e-4;
    cfg.timing.control_dt = 1e-4;
    if let Err(e) = cfg.validate() {
        return outcome(false, e.to_string());
    }

    let mut v0 = f64::NAN;
    let mut prev = f64::NAN;
    let mut eta0 = f64::NAN;
    let mut increases = 0usize;
    let mut max_inc = f64::NEG_INFINITY;
    let mut first_inc = None;
    let mut min_eta = f64::INFINITY;
    let res = run_streaming(&cfg, |r| {
        if v0.is_nan() {
            v0 = r.lyapunov;
            eta0 = r.eta_tilde;
        } else {
            let inc = r.lyapunov - prev;
            max_inc = max_inc.max(inc);
            if inc > 1e-6 * v0 + 1e-12 {
                increases += 1;
                first_inc.get_or_insert(r.t);
            }
        }
        prev = r.lyapunov;
        min_eta = min_eta.min(r.eta_tilde.abs());
    });
    let rows = match res {
        Ok(n) => n,
        Err(e) => return outcome(false, e.to_string()),
    };
    let floor = (eta0.abs() / 2.0).min(0.1);
    outcome(
        increases == 0 && min_eta >= floor,
        format!(
            "{rows} rows; V0 = {v0:.4e}, Vf = {prev:.4e}; increase events {increases} (max step {max_inc:.3e}, first at t = {first_inc:?}); min |eta~| = {min_eta:.6} vs floor {floor:.6}"
        ),
    )
}

fn convergence() -> Outcome {
    let cfg = ScenarioConfig::undisturbed();
    let log = match run(&cfg) {
        Ok(l) => l,
        Err(e) => return outcome(false, e.to_string()),
    };
    let rep = match check_log(&log, &cfg.gains, &cfg.lyapunov, &CheckOptions::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let ok = rep.t_end >= 60.0
        && rep.terminal_e_p < 0.1
        && rep.terminal_v < 0.05
        && rep.terminal_tilde_r2 < 0.01
        && rep.terminal_attitude_error < 1e-4;
    outcome(
        ok,
        format!(
            "at t = {}: |e_p| = {:.4} (< 0.1), |v| = {:.4} (< 0.05), |r2~| = {:.3e} (< 0.01), 1-eta~^2 = {:.3e} (< 1e-4)",
            rep.t_end, rep.terminal_e_p, rep.terminal_v, rep.terminal_tilde_r2, rep.terminal_attitude_error
        ),
    )
}

fn full_scenario() -> Outcome {
    let cfg = ScenarioConfig::baseline();
    let log = match run(&cfg) {
        Ok(l) => l,
        Err(e) => return outcome(false, e.to_string()),
    };
    match check_log(&log, &cfg.gains, &cfg.lyapunov, &CheckOptions::default()) {
        Ok(rep) => outcome(
            rep.last_10s_max_e_p < 5.0 && rep.thrust_violations == 0 && rep.t_end >= 60.0,
            format!(
                "last-10 s max |e_p| = {:.4} m (< 5), thrust violations {}, terminal |e_p| = {:.4} m",
                rep.last_10s_max_e_p, rep.thrust_violations, rep.terminal_e_p
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn error_identities() -> Outcome {
    let mut r = rng(7);
    let gains = baseline_gains();
    let e3 = V::e3();
    let plant = PlantParams {
        mass: 5.0,
        c_d: Mat3::diag(V::new(0.1, 0.1, 0.05)),
        v_w: V::new(10.0, 5.0, 0.0),
        g: G,
    };
    let r1 = V::new(0.18, 0.0, 0.54);
    let (mut f1_err, mut f2_err, mut psi_err, mut r2_err, mut acc_err) = (0f64, 0f64, 0f64, 0f64, 0f64);
    for _ in 0..10_000 {
        let q = rand_quat(&mut r);
        let mu_d = rand_ball(&mut r, gains.k_p + gains.k_v);
        let frame = extract(mu_d, G).unwrap();
        let u_t = frame.u_t;
        let tq = attitude_error(q, frame.q_d);
        let rot = q.to_rotation();
        let r_d = frame.r_d;
        let x = rand_vec(&mut r, 20.0);

        let (f1, f2) = factorization_check(u_t, tq, rot.transpose() * e3, x);
        let mu_tilde = (e3 * G - rot.transpose() * e3 * u_t) - mu_d;
        f1_err = f1_err.max((f1 * tq.vector() - mu_tilde).norm());
        let rt = r_d.transpose() * rot;
        f2_err = f2_err.max((f2 * tq.vector() - (Mat3::identity() - rt) * x).norm());

        let state = PlantState {
            p: rand_vec(&mut r, 100.0),
            v: rand_vec(&mut r, 15.0),
            q,
            t: 0.0,
        };
        let v_hat = rand_vec(&mut r, 15.0);
        let d = deriv(&state, u_t, V::zero(), &plant);
        let r2 = d.v_dot - e3 * G;

        let b1 = rot * r1;
        let b2 = rot * r2;
        let psi = compute_psi(&frame, b1, b2, state.v, v_hat, r1, &gains);
        let tr2 = tilde_r2(state.v, v_hat, gains.k_1, &rt, r2);
        let rewrite = r_d
            * (skew(r1) * rt * r1 * gains.gamma_1
                + skew(r2) * rt * r2 * gains.gamma_2
                + skew(tr2) * rt * r2 * gains.gamma_2);
        psi_err = psi_err.max((psi - rewrite).norm() / (1.0 + psi.norm()));

        let direct = (state.v - v_hat) * gains.k_1 - r2 + rt * r2;
        r2_err = r2_err.max((tr2 - direct).norm() / (1.0 + direct.norm()));

        let delta = d.v_dot - e3 * G + rot.transpose() * e3 * u_t;
        acc_err = acc_err.max((b2 - (-(e3 * u_t) + rot * delta)).norm());
    }
    let worst = f1_err.max(f2_err).max(psi_err).max(r2_err).max(acc_err);
    outcome(
        worst <= 1e-10,
        format!(
            "1e4 states; f1 {f1_err:.2e}, f2 {f2_err:.2e}, psi {psi_err:.2e}, r2~ {r2_err:.2e}, accelerometer {acc_err:.2e}"
        ),
    )
}

fn algebraic_suite() -> Outcome {
    let mut r = rng(8);
    let gains = baseline_gains();
    let c_lo = gains.thrust_window().0;
    let m_bound = 2f64.sqrt() / c_lo;
    let mut errs = [0f64; 9];
    let mut m_max: f64 = 0.0;
    for _ in 0..10_000 {
        let (a, b, c) = (rand_quat(&mut r), rand_quat(&mut r), rand_quat(&mut r));
        let id = Q::identity();
        // group axioms
        errs[0] = errs[0].max(((a * b) * c).distance(&(a * (b * c))));
        errs[0] = errs[0].max((a * id).distance(&a).max((id * a).distance(&a)));
        errs[0] = errs[0].max((a * a.inverse()).distance(&id));
        // two-to-one
        errs[1] = errs[1].max(max_abs(&(quat_to_rot(a) - quat_to_rot(a.negate()))));
        // homomorphism order
        errs[2] = errs[2].max(max_abs(&(quat_to_rot(a * b) - quat_to_rot(b) * quat_to_rot(a))));

        let x = rand_vec(&mut r, 10.0);
        let y = rand_vec(&mut r, 10.0);
        let s = skew(x);
        errs[3] = errs[3].max((s * y - x.cross(y)).norm());
        errs[4] = errs[4].max(max_abs(&(s.transpose() + s)));
        let ev = (s * s).symmetric_eigenvalues();
        let n2 = x.norm_squared();
        errs[5] = errs[5]
            .max((ev[0] + n2).abs() / (1.0 + n2))
            .max((ev[1] + n2).abs() / (1.0 + n2))
            .max(ev[2].abs() / (1.0 + n2));

        // φ is the Jacobian of h: central differences
        let u = rand_vec(&mut r, 5.0);
        let phi = sat_phi(u);
        let hstep = 1e-5;
        for j in 0..3 {
            let mut e = V::zero();
            match j {
                0 => e.x = hstep,
                1 => e.y = hstep,
                _ => e.z = hstep,
            }
            let fd = (sat_h(u + e) - sat_h(u - e)) / (2.0 * hstep);
            errs[6] = errs[6].max((fd - phi.col(j)).amax());
        }

        let mu = rand_ball(&mut r, gains.k_p + gains.k_v);
        let f = extract(mu, G).unwrap();
        let m = m_matrix(&f, G).unwrap();
        m_max = m_max.max(m.spectral_norm());
    }
    let ok = errs[0] <= 1e-12
        && errs[1] <= 1e-15
        && errs[2] <= 1e-12
        && errs[3] <= 1e-12
        && errs[4] == 0.0
        && errs[5] <= 1e-12
        && errs[6] <= 1e-6
        && m_max <= m_bound;
    outcome(
        ok,
        format!(
            "1e4 samples; group {:.1e}, two-to-one {:.1e}, order {:.1e}, S(x)y {:.1e}, skew {:.1e}, spectrum {:.1e}, phi-fd {:.1e}; max |M| = {m_max:.5} <= {m_bound:.5}",
            errs[0], errs[1], errs[2], errs[3], errs[4], errs[5], errs[6]
        ),
    )
}

fn rk4_error(dt: f64) -> f64 {
    let plant = PlantParams {
        mass: 5.0,
        c_d: Mat3::diag(V::new(0.1, 0.1, 0.05)),
        v_w: V::new(10.0, 5.0, 0.0),
        g: G,
    };
    let s0 = PlantState {
        p: V::zero(),
        v: V::new(3.0, -2.0, 1.0),
        q: Q::new_normalize(0.9, V::new(0.1, -0.2, 0.3)),
        t: 0.0,
    };
    let integrate = |h: f64, n: usize| {
        let mut s = s0;
        for _ in 0..n {
            s = rk4_step(&s, 8.0, V::new(0.4, -0.3, 0.6), &plant, h).unwrap();
        }
        s
    };
    let t_final = 2.0;
    let n = (t_final / dt).round() as usize;
    let reference = integrate(1e-4, 20_000);
    let s = integrate(dt, n);
    (s.p - reference.p).norm() + (s.v - reference.v).norm() + s.q.distance(&reference.q)
}

fn csv_bytes(cfg: &ScenarioConfig) -> Vec<u8> {
    let log: RunLog = run(cfg).unwrap();
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    buf
}

fn numerics() -> Outcome {
    let e1 = rk4_error(0.1);
    let e2 = rk4_error(0.05);
    let ratio = e1 / e2;
    let mut cfg = ScenarioConfig::baseline();
    cfg.timing.t_end = 5.0;
    let a = csv_bytes(&cfg);
    let b = csv_bytes(&cfg);
    let other = csv_bytes(&cfg.with_seed(cfg.seed + 1));
    let det = a == b && a != other;
    outcome(
        (8.0..=32.0).contains(&ratio) && det,
        format!(
            "RK4 error ratio {ratio:.3} (dt 0.1 -> 0.05); same seed identical CSV: {}; other seed differs: {}",
            a == b,
            a != other
        ),
    )
}

fn w_witness() -> Outcome {
    let cfg = ScenarioConfig::undisturbed();
    let log = match run(&cfg) {
        Ok(l) => l,
        Err(e) => return outcome(false, e.to_string()),
    };
    let min = log.records.iter().map(|r| r.w_min_eig).fold(f64::INFINITY, f64::min);
    let r1 = cfg.sensors.r1;
    let mut collinear: f64 = 0.0;
    for s in [-20.0, -1.0, 0.5, 3.0] {
        let w = w_matrix(r1, r1 * s, cfg.gains.gamma_1, cfg.gains.gamma_2);
        let lam = w_min_eig(r1, r1 * s, cfg.gains.gamma_1, cfg.gains.gamma_2);
        collinear = collinear.max(lam.abs() / w.trace());
    }
    outcome(
        min > 0.0 && collinear <= 1e-15,
        format!(
            "min lambda_min(W) over {} rows = {min:.4e}; collinear |lambda_min| / tr W <= {collinear:.1e}",
            log.len()
        ),
    )
}

fn main() -> ExitCode {
    // libtest flags (e.g. --nocapture, filters) are accepted and ignored.
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("thrust window", thrust_window),
        ("extraction reconstruction", extraction_reconstruction),
        ("omega_d / M consistency", m_consistency),
        ("Lyapunov monotonicity", lyapunov_monotone),
        ("convergence by t = 60 s", convergence),
        ("full-disturbance scenario", full_scenario),
        ("error-coordinate identities", error_identities),
        ("algebraic suite", algebraic_suite),
        ("numerics", numerics),
        ("lambda_min(W) witness", w_witness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name} [{:.2} s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
