//! Deterministic text output: number formatting, CSV tables and the
//! line-delimited trajectory format.

use crate::curve::{PlanarCurve, Topology};
use crate::error::{CsfError, Result};
use crate::flow::{FlowSnapshot, FlowTrajectory, Scheme};
use crate::point::Point;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// `%.{digits}g` formatting: shortest of fixed or exponent form with
/// trailing zeros removed.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Twelve significant digits, the precision of every text export.
pub fn fmt12(v: f64) -> String {
    fmt_sig(v, 12)
}

/// CSV with a header row and rows formatted by [`fmt12`].
pub fn write_csv(out: &mut impl Write, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| fmt12(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Two-column `t,value` series.
pub fn series_csv(times: &[f64], values: &[f64]) -> String {
    let mut buf = Vec::new();
    let rows: Vec<Vec<f64>> = times.iter().zip(values).map(|(t, v)| vec![*t, *v]).collect();
    write_csv(&mut buf, &["t", "value"], &rows).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub version: u32,
    pub scheme: Scheme,
    pub dt: f64,
    pub topology: Topology,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Record {
    t: f64,
    n: usize,
    /// Interleaved `x, y` coordinates.
    points: Vec<f64>,
}

/// Writes a header line followed by one JSON record per snapshot.
pub fn write_trajectory(out: &mut impl Write, tr: &FlowTrajectory) -> Result<()> {
    let first = tr
        .snapshots()
        .first()
        .ok_or_else(|| CsfError::InvalidInput("empty trajectory".into()))?;
    let header = TrajectoryHeader {
        version: TRAJECTORY_VERSION,
        scheme: first.scheme,
        dt: first.dt,
        topology: first.curve.topology(),
    };
    writeln!(out, "{}", to_json(&header)?)?;
    for s in tr.snapshots() {
        writeln!(out, "{}", to_json(&snapshot_record(s))?)?;
    }
    Ok(())
}

fn snapshot_record(s: &FlowSnapshot) -> Record {
    Record {
        t: s.t,
        n: s.curve.len(),
        points: s.curve.points().iter().flat_map(|p| [p.x, p.y]).collect(),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| CsfError::Parse(e.to_string()))
}

/// Reads a trajectory written by [`write_trajectory`].
pub fn read_trajectory(input: impl BufRead) -> Result<(TrajectoryHeader, FlowTrajectory)> {
    let mut lines = input.lines();
    let head = lines
        .next()
        .ok_or_else(|| CsfError::Parse("empty trajectory file".into()))??;
    let header: TrajectoryHeader =
        serde_json::from_str(&head).map_err(|e| CsfError::Parse(format!("header: {e}")))?;
    if header.version != TRAJECTORY_VERSION {
        return Err(CsfError::Parse(format!("unsupported version {}", header.version)));
    }
    let mut tr = FlowTrajectory::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| CsfError::Parse(format!("record {}: {e}", i + 1)))?;
        if rec.points.len() != 2 * rec.n {
            return Err(CsfError::Parse(format!(
                "record {} declares {} points but holds {} coordinates",
                i + 1,
                rec.n,
                rec.points.len()
            )));
        }
        let pts = rec.points.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
        tr.push(FlowSnapshot {
            t: rec.t,
            curve: PlanarCurve::new(pts, header.topology)?,
            scheme: header.scheme,
            dt: header.dt,
        })?;
    }
    Ok((header, tr))
}

pub fn load_trajectory(path: &std::path::Path) -> Result<(TrajectoryHeader, FlowTrajectory)> {
    let f = std::fs::File::open(path)
        .map_err(|e| CsfError::Io(format!("{}: {e}", path.display())))?;
    read_trajectory(std::io::BufReader::new(f))
}

pub fn save_trajectory(path: &std::path::Path, tr: &FlowTrajectory) -> Result<()> {
    let f = std::fs::File::create(path)
        .map_err(|e| CsfError::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(f);
    write_trajectory(&mut w, tr)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::circle;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-0.5), "-0.5");
        assert_eq!(fmt12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt12(1.5e-7), "1.5e-07");
        assert_eq!(fmt12(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt12(0.0001), "0.0001");
    }

    #[test]
    fn csv_series() {
        let s = series_csv(&[0.0, 0.5], &[1.0, 2.0 / 3.0]);
        assert_eq!(s, "t,value\n0,1\n0.5,0.666666666667\n");
    }

    #[test]
    fn trajectory_round_trip_is_bit_exact() {
        let mut tr = FlowTrajectory::new();
        for (i, r) in [1.0, 0.9, 0.7].iter().enumerate() {
            let c = circle(Point::new(0.1, -1.0 / 3.0), *r, 33).unwrap();
            tr.push(FlowSnapshot {
                t: i as f64 * 0.1,
                curve: c,
                scheme: Scheme::SemiImplicit,
                dt: 1e-4,
            })
            .unwrap();
        }
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &tr).unwrap();
        let (h, back) = read_trajectory(&buf[..]).unwrap();
        assert_eq!(h.topology, Topology::Closed);
        assert_eq!(back, tr);
    }

    #[test]
    fn malformed_records_are_rejected() {
        let text = "{\"version\":1,\"scheme\":\"Explicit\",\"dt\":0.1,\"topology\":\"Open\"}\n{\"t\":0,\"n\":9,\"points\":[1,2]}\n";
        assert!(matches!(read_trajectory(text.as_bytes()), Err(CsfError::Parse(_))));
    }
}
