//! Per-station time series and the per-revolution log.

use std::io::{BufRead, Write};
use std::path::Path;

use spre_core::closed_loop::{RevolutionRecord, RevolutionStatus, StationRecord};
use spre_core::N_BLADES;

use crate::error::{Result, SpreError};
use crate::format::{f9, push_fields};

pub const TIMESERIES_HEADER: &str = "# spre timeseries v1";
pub const TIMESERIES_COLUMNS: [&str; 22] = [
    "t", "rev", "segment", "psi1_deg", "u_est_1", "u_est_2", "u_est_3", "u_ref_1", "u_ref_2", "u_ref_3",
    "rews_est", "rews_ref", "m_1", "m_2", "m_3", "m_pred_1", "m_pred_2", "m_pred_3", "e_1", "e_2", "e_3",
    "station",
];
pub const REVOLUTION_HEADER: &str = "# spre revolutions v1";
pub const REVOLUTION_COLUMNS: [&str; 7] = ["j", "t", "ybar_norm", "dtheta_norm", "status", "prior", "rews_est"];

/// One estimator station as written to `timeseries.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub rev: usize,
    /// Index of the wind-schedule step in effect.
    pub segment: usize,
    pub psi1_deg: f64,
    pub u_est: [f64; N_BLADES],
    pub u_ref: [f64; N_BLADES],
    pub rews_est: f64,
    pub rews_ref: f64,
    pub m: [f64; N_BLADES],
    pub m_pred: [f64; N_BLADES],
    pub e: [f64; N_BLADES],
    pub station: usize,
}

impl Row {
    pub fn from_record(r: &StationRecord, segment: usize) -> Self {
        Self {
            t: r.time,
            rev: r.revolution,
            segment,
            psi1_deg: r.azimuth.to_degrees(),
            u_est: r.estimate,
            u_ref: r.reference,
            rews_est: r.rews_estimate,
            rews_ref: r.rews_reference,
            m: r.moop,
            m_pred: r.predicted,
            e: r.error,
            station: r.station,
        }
    }

    fn floats(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(17);
        v.extend(self.u_est);
        v.extend(self.u_ref);
        v.extend([self.rews_est, self.rews_ref]);
        v.extend(self.m);
        v.extend(self.m_pred);
        v.extend(self.e);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.psi1_deg.is_finite() && self.floats().iter().all(|v| v.is_finite())
    }

    fn line(&self) -> String {
        let mut line = format!("{},{},{},{}", f9(self.t), self.rev, self.segment, f9(self.psi1_deg));
        line.push(',');
        let mut tail = String::new();
        push_fields(&mut tail, &self.floats());
        line.push_str(&tail);
        line.push_str(&format!(",{}", self.station));
        line
    }
}

pub fn write_timeseries(rows: &[Row], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{TIMESERIES_HEADER}")?;
    writeln!(out, "{}", TIMESERIES_COLUMNS.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.line())?;
    }
    Ok(())
}

pub fn read_timeseries(reader: impl BufRead, path: &Path) -> Result<Vec<Row>> {
    let err = |line: usize, msg: String| SpreError::Parse {
        path: path.into(),
        line,
        msg,
    };
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| err(n, e.to_string()))?;
        match n {
            1 if line.trim() != TIMESERIES_HEADER => {
                return Err(err(n, format!("expected `{TIMESERIES_HEADER}`")))
            }
            2 if line.trim() != TIMESERIES_COLUMNS.join(",") => {
                return Err(err(n, "column set differs from the v1 schema".into()))
            }
            1 | 2 => {}
            _ if line.trim().is_empty() => {}
            _ => {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != TIMESERIES_COLUMNS.len() {
                    return Err(err(n, format!("expected {} fields, found {}", TIMESERIES_COLUMNS.len(), f.len())));
                }
                let x = |k: usize| -> Result<f64> {
                    f[k].trim().parse().map_err(|_| err(n, format!("`{}` is not a number", f[k])))
                };
                let idx = |k: usize| -> Result<usize> {
                    f[k].trim().parse().map_err(|_| err(n, format!("`{}` is not an index", f[k])))
                };
                let tri = |k: usize| -> Result<[f64; 3]> { Ok([x(k)?, x(k + 1)?, x(k + 2)?]) };
                rows.push(Row {
                    t: x(0)?,
                    rev: idx(1)?,
                    segment: idx(2)?,
                    psi1_deg: x(3)?,
                    u_est: tri(4)?,
                    u_ref: tri(7)?,
                    rews_est: x(10)?,
                    rews_ref: x(11)?,
                    m: tri(12)?,
                    m_pred: tri(15)?,
                    e: tri(18)?,
                    station: idx(21)?,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(SpreError::InsufficientData(format!("{} holds no rows", path.display())));
    }
    Ok(rows)
}

pub fn load_timeseries(path: &Path) -> Result<Vec<Row>> {
    let file = std::fs::File::open(path).map_err(|source| SpreError::MissingInput {
        path: path.into(),
        source,
    })?;
    read_timeseries(std::io::BufReader::new(file), path)
}

pub fn status_name(s: RevolutionStatus) -> &'static str {
    match s {
        RevolutionStatus::Warmup => "warmup",
        RevolutionStatus::Solved => "solved",
        RevolutionStatus::Frozen => "frozen",
    }
}

pub fn write_revolutions(revs: &[RevolutionRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{REVOLUTION_HEADER}")?;
    writeln!(out, "{}", REVOLUTION_COLUMNS.join(","))?;
    for r in revs {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.index,
            f9(r.time),
            f9(r.ybar_norm),
            f9(r.dtheta_norm),
            status_name(r.status),
            f9(r.prior),
            f9(r.rews)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize) -> Row {
        let x = k as f64;
        Row {
            t: 0.25 * x,
            rev: k / 60,
            segment: 0,
            psi1_deg: 6.0 * (k % 60) as f64,
            u_est: [8.0 + x, 8.5, 9.0],
            u_ref: [8.1, 8.6, 9.1],
            rews_est: 8.5,
            rews_ref: 8.6,
            m: [5.1e6, 5.2e6, 5.3e6],
            m_pred: [5.0e6, 5.1e6, 5.2e6],
            e: [1e5, 1e5, 1e5],
            station: k % 60,
        }
    }

    #[test]
    fn written_rows_parse_back() {
        let rows: Vec<Row> = (0..130).map(row).collect();
        let mut buf = Vec::new();
        write_timeseries(&rows, &mut buf).unwrap();
        let back = read_timeseries(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn schema_change_is_rejected() {
        let mut buf = Vec::new();
        write_timeseries(&[row(0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("m_pred_1", "mpred1");
        let e = read_timeseries(text.as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(e, SpreError::Parse { line: 2, .. }));
    }
}
