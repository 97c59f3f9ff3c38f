//! Plain-text sample format.
//!
//! ```text
//! dim R kind seed
//! x1 ... xd radius
//! ```
//! Floats are written with 17 significant digits, which round-trips `f64` exactly.

use std::fmt::Write as _;

use super::{BoxSpec, PointSample, ProcessKind};
use crate::error::{Error, Result};

pub fn write_sample(sample: &PointSample) -> String {
    let mut out = String::new();
    let b = &sample.bbox;
    let _ = writeln!(out, "{} {:.16e} {} {}", b.dim, b.side, sample.kind.name(), sample.master_seed);
    for (p, r) in sample.points.iter().zip(&sample.radii) {
        for x in &p[..b.dim] {
            let _ = write!(out, "{x:.16e} ");
        }
        let _ = writeln!(out, "{r:.16e}");
    }
    out
}

pub fn parse_sample(text: &str) -> Result<PointSample> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Format("empty sample file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Format(format!("sample header `{header}` needs `dim R kind seed`")));
    }
    let dim: usize = fields[0]
        .parse()
        .map_err(|_| Error::Format(format!("bad dimension `{}`", fields[0])))?;
    let side: f64 = fields[1]
        .parse()
        .map_err(|_| Error::Format(format!("bad box side `{}`", fields[1])))?;
    let kind = ProcessKind::from_name(fields[2]).ok_or_else(|| Error::Format(format!("unknown kind `{}`", fields[2])))?;
    let seed: u64 = fields[3]
        .parse()
        .map_err(|_| Error::Format(format!("bad seed `{}`", fields[3])))?;
    let bbox = BoxSpec::new(dim, side)?;
    let mut points = Vec::new();
    let mut radii = Vec::new();
    for (no, line) in lines {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format(format!("line {}: bad number", no + 1)))?;
        if vals.len() != dim + 1 {
            return Err(Error::Format(format!(
                "line {}: expected {} values, found {}",
                no + 1,
                dim + 1,
                vals.len()
            )));
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&vals[..dim]);
        points.push(p);
        radii.push(vals[dim]);
    }
    Ok(PointSample {
        bbox,
        points,
        radii,
        kind,
        master_seed: seed,
        stream_label: String::new(),
    })
}
