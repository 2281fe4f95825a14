//! `(channel, x, y, z)` point lists as CSV, with an optional header row.

use std::io::Write;

use super::FormatError;
use crate::geometry::{Particle, ParticleSet};

fn parse_channel(field: &str, line: usize) -> Result<usize, FormatError> {
    if let Ok(c) = field.parse::<usize>() {
        return Ok(c);
    }
    // numpy exports channels as floats ("1.0")
    match field.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 => Ok(v as usize),
        _ => Err(FormatError::Parse { line, message: format!("channel '{field}' is not a nonnegative integer") }),
    }
}

pub fn parse_points_csv(text: &str) -> Result<ParticleSet, FormatError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut particles = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| FormatError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if n == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            // header row
            continue;
        }
        if record.len() != 4 {
            return Err(FormatError::Parse {
                line,
                message: format!("expected 4 columns (channel, x, y, z), found {}", record.len()),
            });
        }
        let channel = parse_channel(&record[0], line)?;
        let mut pos = [0.0; 3];
        for a in 0..3 {
            let field = &record[a + 1];
            pos[a] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FormatError::Parse { line, message: format!("invalid coordinate '{field}'") })?;
        }
        particles.push(Particle::new(channel, pos));
    }
    Ok(ParticleSet::new(particles))
}

pub fn write_points_csv<W: Write>(set: &ParticleSet, writer: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| FormatError::Io(std::io::Error::other(e));
    w.write_record(["channel", "x", "y", "z"]).map_err(io)?;
    for p in &set.particles {
        w.write_record([
            p.channel.to_string(),
            p.position[0].to_string(),
            p.position[1].to_string(),
            p.position[2].to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
