//! The CSV schemas shared between the library, the command-line tool, and
//! downstream plotting: trajectories, displacement series, correlation
//! curves, sweep tables, and the fit report.
//!
//! All files are UTF-8 with LF line endings, `.` decimal separator, fixed
//! column order, and fixed numeric formatting, so that emitting, ingesting,
//! and re-emitting a table is byte-identical.

use crate::correlation::CorrelationFunction;
use crate::estimation::{SummaryReport, SweepRecord};
use crate::tracking::{DisplacementSample, DisplacementSeries, MarkerTrack, TrackSample};
use crate::units::{FrameClock, Vec2};
use std::fmt::Write as _;
use thiserror::Error;

pub const TRAJECTORY_HEADER: &str = "frame,time_s,marker_id,x_nm,y_nm";
pub const DISPLACEMENT_HEADER: &str = "frame,marker_id,parallel_nm,perp_nm";
pub const CORRELATION_HEADER: &str = "pair,delay_s,c_nm2,stderr_nm2";
pub const SWEEP_HEADER: &str = "b_mt,theta_deg,intensity_nm2,stderr_nm2,n_windows";
pub const FIT_REPORT_HEADER: &str = "b_star_mt,m_a_per_m,moment_am2,moment_bohr,interaction_j";

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: &'static str, found: String },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("file contains no data rows")]
    NoRows,
    #[error("invalid track data: {0}")]
    Track(crate::tracking::TrackingError),
}

fn parse_f64(line: usize, field: &str, value: &str) -> Result<f64, CsvError> {
    value.trim().parse::<f64>().map_err(|_| CsvError::Row {
        line,
        message: format!("cannot parse {field} from `{value}`"),
    })
}

fn parse_u32(line: usize, field: &str, value: &str) -> Result<u32, CsvError> {
    value.trim().parse::<u32>().map_err(|_| CsvError::Row {
        line,
        message: format!("cannot parse {field} from `{value}`"),
    })
}

fn split_row<'a>(line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>, CsvError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n {
        return Err(CsvError::Row {
            line: line_no,
            message: format!("expected {n} columns, found {}", fields.len()),
        });
    }
    Ok(fields)
}

fn check_header(text: &str, expected: &'static str) -> Result<(), CsvError> {
    match text.lines().next() {
        Some(h) if h.trim_end() == expected => Ok(()),
        other => Err(CsvError::Header {
            expected,
            found: other.unwrap_or("").to_string(),
        }),
    }
}

/// Trajectory table, frame-major: all markers of frame 0, then frame 1, …
pub fn trajectory_to_csv(tracks: &[MarkerTrack], clock: &FrameClock) -> String {
    let mut frames: Vec<u32> = tracks
        .iter()
        .flat_map(|t| t.samples().iter().map(|s| s.frame))
        .collect();
    frames.sort_unstable();
    frames.dedup();

    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for &frame in &frames {
        for track in tracks {
            if let Some(pos) = track.position_at(frame) {
                let _ = writeln!(
                    out,
                    "{},{:.6},{},{:.6},{:.6}",
                    frame,
                    clock.seconds_for(frame),
                    track.marker_id,
                    pos.x,
                    pos.y
                );
            }
        }
    }
    out
}

/// Parse a trajectory table back into per-marker tracks, in first-seen
/// marker order. The time column is informational and ignored.
pub fn trajectory_from_csv(text: &str) -> Result<Vec<MarkerTrack>, CsvError> {
    check_header(text, TRAJECTORY_HEADER)?;
    let mut order: Vec<String> = Vec::new();
    let mut samples: Vec<Vec<TrackSample>> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let f = split_row(line_no, line, 5)?;
        let frame = parse_u32(line_no, "frame", f[0])?;
        let _time = parse_f64(line_no, "time_s", f[1])?;
        let id = f[2].trim();
        let x = parse_f64(line_no, "x_nm", f[3])?;
        let y = parse_f64(line_no, "y_nm", f[4])?;
        let idx = match order.iter().position(|o| o == id) {
            Some(idx) => idx,
            None => {
                order.push(id.to_string());
                samples.push(Vec::new());
                order.len() - 1
            }
        };
        samples[idx].push(TrackSample {
            frame,
            pos: Vec2::new(x, y),
        });
    }
    if order.is_empty() {
        return Err(CsvError::NoRows);
    }
    order
        .into_iter()
        .zip(samples)
        .map(|(id, s)| MarkerTrack::new(id, s).map_err(CsvError::Track))
        .collect()
}

/// Displacement table, marker-major: all frames of p1, then p2, …
pub fn displacements_to_csv(series: &[DisplacementSeries]) -> String {
    let mut out = String::new();
    out.push_str(DISPLACEMENT_HEADER);
    out.push('\n');
    for s in series {
        for d in s.samples() {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6}",
                d.frame, s.marker_id, d.parallel_nm, d.perp_nm
            );
        }
    }
    out
}

pub fn displacements_from_csv(text: &str) -> Result<Vec<DisplacementSeries>, CsvError> {
    check_header(text, DISPLACEMENT_HEADER)?;
    let mut order: Vec<String> = Vec::new();
    let mut samples: Vec<Vec<DisplacementSample>> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let f = split_row(line_no, line, 4)?;
        let frame = parse_u32(line_no, "frame", f[0])?;
        let id = f[1].trim();
        let parallel = parse_f64(line_no, "parallel_nm", f[2])?;
        let perp = parse_f64(line_no, "perp_nm", f[3])?;
        let idx = match order.iter().position(|o| o == id) {
            Some(idx) => idx,
            None => {
                order.push(id.to_string());
                samples.push(Vec::new());
                order.len() - 1
            }
        };
        samples[idx].push(DisplacementSample {
            frame,
            parallel_nm: parallel,
            perp_nm: perp,
        });
    }
    if order.is_empty() {
        return Err(CsvError::NoRows);
    }
    Ok(order
        .into_iter()
        .zip(samples)
        .map(|(id, s)| DisplacementSeries::new(id, s))
        .collect())
}

/// One row of the correlation table.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub pair: String,
    pub delay_s: f64,
    pub c_nm2: f64,
    pub stderr_nm2: f64,
}

/// Flatten correlation functions into rows, pairs in input order, lags
/// ascending.
pub fn correlation_rows(functions: &[CorrelationFunction]) -> Vec<CorrelationRow> {
    functions
        .iter()
        .flat_map(|f| {
            let pair = format!("{}-{}", f.pair.0, f.pair.1);
            f.points().iter().map(move |p| CorrelationRow {
                pair: pair.clone(),
                delay_s: p.delay_s,
                c_nm2: p.value_nm2,
                stderr_nm2: p.stderr_nm2,
            })
        })
        .collect()
}

pub fn correlation_rows_to_csv(rows: &[CorrelationRow]) -> String {
    let mut out = String::new();
    out.push_str(CORRELATION_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            r.pair, r.delay_s, r.c_nm2, r.stderr_nm2
        );
    }
    out
}

pub fn correlation_rows_from_csv(text: &str) -> Result<Vec<CorrelationRow>, CsvError> {
    check_header(text, CORRELATION_HEADER)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let f = split_row(line_no, line, 4)?;
        rows.push(CorrelationRow {
            pair: f[0].trim().to_string(),
            delay_s: parse_f64(line_no, "delay_s", f[1])?,
            c_nm2: parse_f64(line_no, "c_nm2", f[2])?,
            stderr_nm2: parse_f64(line_no, "stderr_nm2", f[3])?,
        });
    }
    if rows.is_empty() {
        return Err(CsvError::NoRows);
    }
    Ok(rows)
}

pub fn sweep_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:.3},{:.3},{:.6},{:.6},{}",
            r.b_mt, r.theta_deg, r.intensity_nm2, r.stderr_nm2, r.n_windows
        );
    }
    out
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRecord>, CsvError> {
    check_header(text, SWEEP_HEADER)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let f = split_row(line_no, line, 5)?;
        records.push(SweepRecord {
            b_mt: parse_f64(line_no, "b_mt", f[0])?,
            theta_deg: parse_f64(line_no, "theta_deg", f[1])?,
            intensity_nm2: parse_f64(line_no, "intensity_nm2", f[2])?,
            stderr_nm2: parse_f64(line_no, "stderr_nm2", f[3])?,
            n_windows: parse_u32(line_no, "n_windows", f[4])? as usize,
        });
    }
    if records.is_empty() {
        return Err(CsvError::NoRows);
    }
    Ok(records)
}

pub fn fit_report_to_csv(report: &SummaryReport) -> String {
    format!(
        "{}\n{:.6},{:.6},{:.6e},{:.3},{:.6e}\n",
        FIT_REPORT_HEADER,
        report.b_star_mt,
        report.m_a_per_m,
        report.moment_a_m2,
        report.moment_bohr,
        report.interaction_j
    )
}

pub fn fit_report_from_csv(text: &str) -> Result<SummaryReport, CsvError> {
    check_header(text, FIT_REPORT_HEADER)?;
    let line = text
        .lines()
        .nth(1)
        .filter(|l| !l.is_empty())
        .ok_or(CsvError::NoRows)?;
    let f = split_row(2, line, 5)?;
    Ok(SummaryReport {
        b_star_mt: parse_f64(2, "b_star_mt", f[0])?,
        m_a_per_m: parse_f64(2, "m_a_per_m", f[1])?,
        moment_a_m2: parse_f64(2, "moment_am2", f[2])?,
        moment_bohr: parse_f64(2, "moment_bohr", f[3])?,
        interaction_j: parse_f64(2, "interaction_j", f[4])?,
    })
}
