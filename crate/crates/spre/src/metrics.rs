//! Scenario metrics computed from the station time series.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Result, SpreError};
use crate::format::f9;
use crate::timeseries::Row;

/// Revolutions dropped from the start of every run before computing metrics.
pub const EXCLUDED_REVOLUTIONS: usize = 20;
pub const MIN_REVOLUTIONS: usize = 50;
/// Revolutions after a wind step that do not count as steady.
pub const SETTLE_REVOLUTIONS: usize = 10;
/// Revolutions compared at each end of a segment for the error contraction.
pub const CONTRACTION_REVOLUTIONS: usize = 5;
pub const BIN_DEG: f64 = 10.0;
pub const N_BINS: usize = 36;
pub const WINDOW_LENGTH: f64 = 60.0;
pub const WINDOW_STEP: f64 = 20.0;
/// Relative max-min spread of the reference map above which a window shows
/// an azimuthal deficit (partial wake overlap).
pub const PARTIAL_OVERLAP_SPREAD: f64 = 0.05;

/// Mean BEWS per 10° blade-azimuth bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AzimuthMap {
    pub estimate: Vec<f64>,
    pub reference: Vec<f64>,
    pub count: Vec<usize>,
}

impl AzimuthMap {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a Row>) -> Self {
        let mut est = vec![0.0; N_BINS];
        let mut reference = vec![0.0; N_BINS];
        let mut count = vec![0; N_BINS];
        for r in rows {
            for b in 0..3 {
                let psi = (r.psi1_deg + 120.0 * b as f64).rem_euclid(360.0);
                let k = ((psi / BIN_DEG) as usize).min(N_BINS - 1);
                est[k] += r.u_est[b];
                reference[k] += r.u_ref[b];
                count[k] += 1;
            }
        }
        for k in 0..N_BINS {
            if count[k] > 0 {
                est[k] /= count[k] as f64;
                reference[k] /= count[k] as f64;
            }
        }
        Self {
            estimate: est,
            reference,
            count,
        }
    }

    pub fn bin_center(k: usize) -> f64 {
        (k as f64 + 0.5) * BIN_DEG
    }

    fn extreme(&self, values: &[f64], max: bool) -> Option<f64> {
        let filled = (0..N_BINS).filter(|&k| self.count[k] > 0);
        let best = if max {
            filled.max_by(|&a, &b| values[a].total_cmp(&values[b]))
        } else {
            filled.min_by(|&a, &b| values[a].total_cmp(&values[b]))
        };
        best.map(Self::bin_center)
    }

    pub fn estimate_peak(&self) -> Option<f64> {
        self.extreme(&self.estimate, true)
    }

    pub fn estimate_trough(&self) -> Option<f64> {
        self.extreme(&self.estimate, false)
    }

    pub fn reference_peak(&self) -> Option<f64> {
        self.extreme(&self.reference, true)
    }

    pub fn reference_trough(&self) -> Option<f64> {
        self.extreme(&self.reference, false)
    }

    /// `(max − min)/max` of the reference over filled bins.
    pub fn reference_spread(&self) -> f64 {
        let filled: Vec<f64> = (0..N_BINS).filter(|&k| self.count[k] > 0).map(|k| self.reference[k]).collect();
        let max = filled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = filled.iter().copied().fold(f64::INFINITY, f64::min);
        if max > 0.0 {
            (max - min) / max
        } else {
            0.0
        }
    }
}

/// Smallest angle between two azimuths [deg].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMetrics {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Complete revolutions inside the segment.
    pub revolutions: usize,
    /// Revolutions past both the settling and the run-start exclusions.
    pub steady_revolutions: usize,
    /// Largest per-revolution `|REWS_est − REWS_ref| / REWS_ref` while steady.
    pub rews_rel_error: Option<f64>,
    /// MOoP error RMS over the first revolutions from the segment start and
    /// the last complete revolutions of the segment [N·m].
    pub moop_rms_first: Option<f64>,
    pub moop_rms_last: Option<f64>,
    /// Azimuth of the largest steady-state BEWS estimate [deg].
    pub map_peak_deg: Option<f64>,
}

impl SegmentMetrics {
    pub fn is_steady(&self) -> bool {
        self.steady_revolutions > 0
    }

    /// Last-revolutions RMS over first-revolutions RMS.
    pub fn contraction(&self) -> Option<f64> {
        Some(self.moop_rms_last? / self.moop_rms_first?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowMetrics {
    pub t_start: f64,
    pub t_end: f64,
    pub map: AzimuthMap,
    pub rews_rel_error: f64,
}

impl WindowMetrics {
    pub fn partial_overlap(&self) -> bool {
        self.map.reference_spread() >= PARTIAL_OVERLAP_SPREAD
    }

    /// Angle between the estimated and the true BEWS minimum [deg].
    pub fn sector_error_deg(&self) -> Option<f64> {
        Some(angular_distance(self.map.estimate_trough()?, self.map.reference_trough()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub revolutions: usize,
    pub bews_rmse: [f64; 3],
    /// Mean of `REWS_est − REWS_ref` [m/s].
    pub rews_bias: f64,
    pub rews_rmse: f64,
    pub segments: Vec<SegmentMetrics>,
    /// Map over everything after the excluded revolutions.
    pub azimuth_map: AzimuthMap,
    pub windows: Vec<WindowMetrics>,
    /// Azimuth of the lowest estimated BEWS, i.e. the deepest deficit [deg].
    pub wake_sector_azimuth: f64,
}

fn rms<'a>(rows: impl IntoIterator<Item = &'a Row>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for r in rows {
        for e in r.e {
            s += e * e;
            n += 1;
        }
    }
    (n > 0).then(|| (s / n as f64).sqrt())
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    s / n.max(1) as f64
}

pub fn compute_metrics(rows: &[Row]) -> Result<Metrics> {
    let mut by_rev: BTreeMap<usize, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        by_rev.entry(r.rev).or_default().push(r);
    }
    let (Some(&first_rev), Some(&last_rev)) = (by_rev.keys().next(), by_rev.keys().next_back()) else {
        return Err(SpreError::InsufficientData("empty time series".into()));
    };
    let revolutions = last_rev - first_rev + 1;
    if revolutions < MIN_REVOLUTIONS {
        return Err(SpreError::InsufficientData(format!(
            "{revolutions} revolutions, need at least {MIN_REVOLUTIONS}"
        )));
    }
    let cutoff = first_rev + EXCLUDED_REVOLUTIONS;
    let kept: Vec<&Row> = rows.iter().filter(|r| r.rev >= cutoff).collect();

    let bews_rmse = core::array::from_fn(|b| {
        mean(kept.iter().map(|r| (r.u_est[b] - r.u_ref[b]).powi(2))).sqrt()
    });
    let rews_bias = mean(kept.iter().map(|r| r.rews_est - r.rews_ref));
    let rews_rmse = mean(kept.iter().map(|r| (r.rews_est - r.rews_ref).powi(2))).sqrt();

    // per segment, every revolution touching it and the complete ones
    let per_rev = by_rev.values().map(Vec::len).max().unwrap_or(0);
    let mut touching: BTreeMap<usize, BTreeMap<usize, Vec<&Row>>> = BTreeMap::new();
    for r in rows {
        touching.entry(r.segment).or_default().entry(r.rev).or_default().push(r);
    }
    let mut seg_metrics = Vec::new();
    for (&index, parts) in &touching {
        let revs: Vec<(usize, &Vec<&Row>)> = parts
            .iter()
            .filter(|(_, rs)| rs.len() == per_rev)
            .map(|(rev, rs)| (*rev, rs))
            .collect();
        if revs.is_empty() {
            continue;
        }
        let steady: Vec<_> = revs
            .iter()
            .skip(SETTLE_REVOLUTIONS)
            .filter(|(rev, _)| *rev >= cutoff)
            .collect();
        let rews_rel_error = steady
            .iter()
            .map(|(_, rs)| {
                let e = mean(rs.iter().map(|r| r.rews_est));
                let t = mean(rs.iter().map(|r| r.rews_ref));
                (e - t).abs() / t
            })
            .reduce(f64::max);
        let map_peak_deg = if steady.is_empty() {
            None
        } else {
            AzimuthMap::from_rows(steady.iter().flat_map(|(_, rs)| rs.iter().copied())).estimate_peak()
        };
        // the first window starts at the step, inside a partial revolution
        let k = CONTRACTION_REVOLUTIONS;
        let (first, last) = if revs.len() >= 2 * k {
            (
                rms(parts.values().take(k).flatten().copied()),
                rms(revs[revs.len() - k..].iter().flat_map(|(_, rs)| rs.iter().copied())),
            )
        } else {
            (None, None)
        };
        seg_metrics.push(SegmentMetrics {
            index,
            t_start: parts.values().next().map_or(0.0, |rs| rs[0].t),
            t_end: parts.values().next_back().and_then(|rs| rs.last()).map_or(0.0, |r| r.t),
            revolutions: revs.len(),
            steady_revolutions: steady.len(),
            rews_rel_error,
            moop_rms_first: first,
            moop_rms_last: last,
            map_peak_deg,
        });
    }

    let azimuth_map = AzimuthMap::from_rows(kept.iter().copied());
    let mut windows = Vec::new();
    if let (Some(a), Some(b)) = (kept.first(), kept.last()) {
        let mut t0 = a.t;
        while t0 + WINDOW_LENGTH <= b.t {
            let t1 = t0 + WINDOW_LENGTH;
            let inside: Vec<&Row> = kept.iter().copied().filter(|r| r.t >= t0 && r.t < t1).collect();
            let e = mean(inside.iter().map(|r| r.rews_est));
            let t = mean(inside.iter().map(|r| r.rews_ref));
            windows.push(WindowMetrics {
                t_start: t0,
                t_end: t1,
                map: AzimuthMap::from_rows(inside.iter().copied()),
                rews_rel_error: (e - t).abs() / t,
            });
            t0 += WINDOW_STEP;
        }
    }
    let wake_sector_azimuth = azimuth_map
        .estimate_trough()
        .ok_or_else(|| SpreError::InsufficientData("no rows after the excluded revolutions".into()))?;
    Ok(Metrics {
        revolutions,
        bews_rmse,
        rews_bias,
        rews_rmse,
        segments: seg_metrics,
        azimuth_map,
        windows,
        wake_sector_azimuth,
    })
}

/// `metric,index,value` rows; `index` is the blade, segment or window.
pub fn write_metrics(m: &Metrics, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# spre metrics v1\nmetric,index,value")?;
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), f9);
    writeln!(out, "revolutions,,{}", m.revolutions)?;
    for (b, v) in m.bews_rmse.iter().enumerate() {
        writeln!(out, "bews_rmse,{},{}", b + 1, f9(*v))?;
    }
    writeln!(out, "rews_bias,,{}", f9(m.rews_bias))?;
    writeln!(out, "rews_rmse,,{}", f9(m.rews_rmse))?;
    writeln!(out, "wake_sector_azimuth,,{}", f9(m.wake_sector_azimuth))?;
    for s in &m.segments {
        let i = s.index;
        writeln!(out, "segment_t_start,{i},{}", f9(s.t_start))?;
        writeln!(out, "segment_revolutions,{i},{}", s.revolutions)?;
        writeln!(out, "segment_steady_revolutions,{i},{}", s.steady_revolutions)?;
        writeln!(out, "segment_rews_rel_error,{i},{}", opt(s.rews_rel_error))?;
        writeln!(out, "segment_moop_rms_first5,{i},{}", opt(s.moop_rms_first))?;
        writeln!(out, "segment_moop_rms_last5,{i},{}", opt(s.moop_rms_last))?;
        writeln!(out, "segment_map_peak_deg,{i},{}", opt(s.map_peak_deg))?;
    }
    for (i, w) in m.windows.iter().enumerate() {
        writeln!(out, "window_t_start,{i},{}", f9(w.t_start))?;
        writeln!(out, "window_rews_rel_error,{i},{}", f9(w.rews_rel_error))?;
        writeln!(out, "window_reference_spread,{i},{}", f9(w.map.reference_spread()))?;
        writeln!(out, "window_est_min_deg,{i},{}", opt(w.map.estimate_trough()))?;
        writeln!(out, "window_ref_min_deg,{i},{}", opt(w.map.reference_trough()))?;
    }
    Ok(())
}

/// The overall map (`window` = `all`) followed by every sliding window.
pub fn write_azimuth_maps(m: &Metrics, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# spre azimuth map v1\nwindow,t_start,t_end,bin_deg,u_est,u_ref,count")?;
    let mut dump = |label: &str, t0: f64, t1: f64, map: &AzimuthMap| -> std::io::Result<()> {
        for k in 0..N_BINS {
            writeln!(
                out,
                "{label},{},{},{},{},{},{}",
                f9(t0),
                f9(t1),
                f9(AzimuthMap::bin_center(k)),
                f9(map.estimate[k]),
                f9(map.reference[k]),
                map.count[k]
            )?;
        }
        Ok(())
    };
    let (t0, t1) = m
        .windows
        .first()
        .zip(m.windows.last())
        .map_or((0.0, 0.0), |(a, b)| (a.t_start, b.t_end));
    dump("all", t0, t1, &m.azimuth_map)?;
    for (i, w) in m.windows.iter().enumerate() {
        dump(&i.to_string(), w.t_start, w.t_end, &w.map)?;
    }
    Ok(())
}
