//! Run log and its CSV form.
//!
//! One row per controller tick. Columns are grouped by prefix so the
//! output-feedback property is auditable: `truth_*` channels come from the
//! simulated plant and are never seen by the controller, `meas_*` are the
//! sensor outputs the controller consumes, `cmd_*` are the actuation commands,
//! `ctrl_*` are controller internals and `diag_*` are analysis quantities.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), which
//! round-trips every `f64` exactly.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::mathx::{Quaternion, Vec3};

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed telemetry: {0}")]
    Malformed(String),
}

/// Column names in file order.
pub const COLUMNS: [&str; 63] = [
    "t",
    "t_end",
    "truth_p_x",
    "truth_p_y",
    "truth_p_z",
    "truth_v_x",
    "truth_v_y",
    "truth_v_z",
    "truth_q_eta",
    "truth_q_x",
    "truth_q_y",
    "truth_q_z",
    "truth_delta_x",
    "truth_delta_y",
    "truth_delta_z",
    "truth_r2_x",
    "truth_r2_y",
    "truth_r2_z",
    "meas_p_x",
    "meas_p_y",
    "meas_p_z",
    "meas_v_x",
    "meas_v_y",
    "meas_v_z",
    "meas_b1_x",
    "meas_b1_y",
    "meas_b1_z",
    "meas_b2_x",
    "meas_b2_y",
    "meas_b2_z",
    "cmd_u_t",
    "cmd_thrust_n",
    "cmd_omega_x",
    "cmd_omega_y",
    "cmd_omega_z",
    "cmd_omega_applied_x",
    "cmd_omega_applied_y",
    "cmd_omega_applied_z",
    "ctrl_mu_d_x",
    "ctrl_mu_d_y",
    "ctrl_mu_d_z",
    "ctrl_qd_eta",
    "ctrl_qd_x",
    "ctrl_qd_y",
    "ctrl_qd_z",
    "ctrl_v_hat_x",
    "ctrl_v_hat_y",
    "ctrl_v_hat_z",
    "ctrl_psi_x",
    "ctrl_psi_y",
    "ctrl_psi_z",
    "diag_e_p_x",
    "diag_e_p_y",
    "diag_e_p_z",
    "diag_lyapunov",
    "diag_eta_tilde",
    "diag_r2_tilde_x",
    "diag_r2_tilde_y",
    "diag_r2_tilde_z",
    "diag_mu_tilde_x",
    "diag_mu_tilde_y",
    "diag_mu_tilde_z",
    "diag_w_min_eig",
];

/// One logged controller tick. All quantities SI, angles in rad.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRecord {
    pub t: f64,
    /// Planned end time of the run this row belongs to.
    pub t_end: f64,

    pub p: Vec3<f64>,
    pub v: Vec3<f64>,
    pub q: Quaternion<f64>,
    pub delta: Vec3<f64>,
    /// Apparent acceleration under the command issued at this tick.
    pub r2: Vec3<f64>,

    pub p_meas: Vec3<f64>,
    pub v_meas: Vec3<f64>,
    pub b1: Vec3<f64>,
    pub b2: Vec3<f64>,

    pub u_t: f64,
    /// `T = u_t · m_b`, N.
    pub thrust_n: f64,
    pub omega_cmd: Vec3<f64>,
    pub omega_applied: Vec3<f64>,

    pub mu_d: Vec3<f64>,
    pub q_d: Quaternion<f64>,
    pub v_hat: Vec3<f64>,
    pub psi: Vec3<f64>,

    pub e_p: Vec3<f64>,
    pub lyapunov: f64,
    pub eta_tilde: f64,
    pub r2_tilde: Vec3<f64>,
    pub mu_tilde: Vec3<f64>,
    pub w_min_eig: f64,
}

fn push3(out: &mut Vec<f64>, v: Vec3<f64>) {
    out.extend_from_slice(&v.to_array());
}

fn push4(out: &mut Vec<f64>, q: Quaternion<f64>) {
    out.extend_from_slice(&[q.eta, q.q.x, q.q.y, q.q.z]);
}

struct Cursor<'a> {
    row: &'a [f64],
    i: usize,
}

impl Cursor<'_> {
    fn next(&mut self) -> f64 {
        let x = self.row[self.i];
        self.i += 1;
        x
    }

    fn vec3(&mut self) -> Vec3<f64> {
        let (x, y, z) = (self.next(), self.next(), self.next());
        Vec3::new(x, y, z)
    }

    fn quat(&mut self) -> Quaternion<f64> {
        let eta = self.next();
        Quaternion::new(eta, self.vec3())
    }
}

impl LogRecord {
    pub fn to_row(&self) -> Vec<f64> {
        let mut r = Vec::with_capacity(COLUMNS.len());
        r.extend_from_slice(&[self.t, self.t_end]);
        push3(&mut r, self.p);
        push3(&mut r, self.v);
        push4(&mut r, self.q);
        push3(&mut r, self.delta);
        push3(&mut r, self.r2);
        push3(&mut r, self.p_meas);
        push3(&mut r, self.v_meas);
        push3(&mut r, self.b1);
        push3(&mut r, self.b2);
        r.extend_from_slice(&[self.u_t, self.thrust_n]);
        push3(&mut r, self.omega_cmd);
        push3(&mut r, self.omega_applied);
        push3(&mut r, self.mu_d);
        push4(&mut r, self.q_d);
        push3(&mut r, self.v_hat);
        push3(&mut r, self.psi);
        push3(&mut r, self.e_p);
        r.extend_from_slice(&[self.lyapunov, self.eta_tilde]);
        push3(&mut r, self.r2_tilde);
        push3(&mut r, self.mu_tilde);
        r.push(self.w_min_eig);
        debug_assert_eq!(r.len(), COLUMNS.len());
        r
    }

    pub fn from_row(row: &[f64]) -> Result<Self, TelemetryError> {
        if row.len() != COLUMNS.len() {
            return Err(TelemetryError::Malformed(format!(
                "expected {} columns, got {}",
                COLUMNS.len(),
                row.len()
            )));
        }
        let mut c = Cursor { row, i: 0 };
        let t = c.next();
        let t_end = c.next();
        let p = c.vec3();
        let v = c.vec3();
        let q = c.quat();
        let delta = c.vec3();
        let r2 = c.vec3();
        let p_meas = c.vec3();
        let v_meas = c.vec3();
        let b1 = c.vec3();
        let b2 = c.vec3();
        let u_t = c.next();
        let thrust_n = c.next();
        let omega_cmd = c.vec3();
        let omega_applied = c.vec3();
        let mu_d = c.vec3();
        let q_d = c.quat();
        let v_hat = c.vec3();
        let psi = c.vec3();
        let e_p = c.vec3();
        let lyapunov = c.next();
        let eta_tilde = c.next();
        let r2_tilde = c.vec3();
        let mu_tilde = c.vec3();
        let w_min_eig = c.next();
        Ok(Self {
            t,
            t_end,
            p,
            v,
            q,
            delta,
            r2,
            p_meas,
            v_meas,
            b1,
            b2,
            u_t,
            thrust_n,
            omega_cmd,
            omega_applied,
            mu_d,
            q_d,
            v_hat,
            psi,
            e_p,
            lyapunov,
            eta_tilde,
            r2_tilde,
            mu_tilde,
            w_min_eig,
        })
    }
}

/// Time-ordered run log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub records: Vec<LogRecord>,
    /// Set when the source ended in the middle of a row.
    pub truncated: bool,
}

impl RunLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TelemetryError> {
        let mut wr = csv::Writer::from_writer(w);
        let map = |e: csv::Error| TelemetryError::Malformed(e.to_string());
        wr.write_record(COLUMNS).map_err(map)?;
        let mut buf: Vec<String> = Vec::with_capacity(COLUMNS.len());
        for rec in &self.records {
            buf.clear();
            buf.extend(rec.to_row().iter().map(|x| format!("{x:.16e}")));
            wr.write_record(&buf).map_err(map)?;
        }
        wr.flush().map_err(|e| TelemetryError::Malformed(e.to_string()))
    }

    /// Parses CSV text. A short final row (interrupted write) is dropped and
    /// flagged through [`RunLog::truncated`]; any other malformed row is an
    /// error.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, TelemetryError> {
        let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(r);
        let header = rd
            .headers()
            .map_err(|e| TelemetryError::Malformed(e.to_string()))?
            .clone();
        if header.len() != COLUMNS.len() || header.iter().zip(COLUMNS).any(|(a, b)| a != b) {
            return Err(TelemetryError::Malformed("header does not match the telemetry schema".into()));
        }
        let rows: Vec<csv::StringRecord> = rd
            .records()
            .collect::<Result<_, _>>()
            .map_err(|e| TelemetryError::Malformed(e.to_string()))?;
        let mut log = RunLog::default();
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            let parsed: Result<Vec<f64>, _> = row.iter().map(|s| s.trim().parse::<f64>()).collect();
            match parsed {
                Ok(vals) if vals.len() == COLUMNS.len() => log.records.push(LogRecord::from_row(&vals)?),
                _ if i + 1 == n && row.len() <= COLUMNS.len() => log.truncated = true,
                _ => {
                    return Err(TelemetryError::Malformed(format!(
                        "bad data row {} ({} fields)",
                        i + 1,
                        row.len()
                    )))
                }
            }
        }
        Ok(log)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), TelemetryError> {
        let file = File::create(path).map_err(|source| TelemetryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(io::BufWriter::new(file))
    }

    pub fn load_csv(path: &Path) -> Result<Self, TelemetryError> {
        let file = File::open(path).map_err(|source| TelemetryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_csv(io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(seed: f64) -> LogRecord {
        let row: Vec<f64> = (0..COLUMNS.len())
            .map(|i| (seed + i as f64 * 0.731).sin() * 10f64.powi((i % 7) as i32 - 3))
            .collect();
        LogRecord::from_row(&row).unwrap()
    }

    #[test]
    fn header_is_unique() {
        let mut names: Vec<&str> = COLUMNS.to_vec();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), COLUMNS.len());
    }

    #[test]
    fn truncated_final_row_is_flagged() {
        let log = RunLog {
            records: vec![sample(1.0), sample(2.0)],
            truncated: false,
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.len() - 200];
        let back = RunLog::read_csv(cut.as_bytes()).unwrap();
        assert!(back.truncated);
        assert_eq!(back.records.len(), 1);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = RunLog::read_csv("a,b,c\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TelemetryError::Malformed(_)));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = RunLog::load_csv(Path::new("/nonexistent/run.csv")).unwrap_err();
        assert!(matches!(err, TelemetryError::Io { .. }));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(row in prop::collection::vec(-1e12..1e12f64, COLUMNS.len())) {
            let rec = LogRecord::from_row(&row).unwrap();
            prop_assert_eq!(rec.to_row(), row);
            let log = RunLog { records: vec![rec, sample(0.5)], truncated: false };
            let mut buf = Vec::new();
            log.write_csv(&mut buf).unwrap();
            let back = RunLog::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, log);
        }
    }
}
