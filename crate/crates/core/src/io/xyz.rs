//! XYZ molecule files:
//!
//! ```text
//! <atom count>
//! <comment>
//! <symbol> <x> <y> <z>
//! ...
//! ```
//!
//! Coordinates are kept in the file's units. Columns after `z` are ignored.

use std::collections::BTreeMap;

use super::elements::{atomic_number, symbol};
use super::{ChannelPolicy, FormatError};
use crate::geometry::{Particle, ParticleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeFile {
    pub comment: String,
    /// Atomic numbers, one per atom.
    pub elements: Vec<u8>,
    pub positions: Vec<[f64; 3]>,
}

pub fn parse_xyz(text: &str) -> Result<MoleculeFile, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(FormatError::Parse { line: 1, message: "empty file".into() })?;
    let expected: usize = header.trim().parse().map_err(|_| FormatError::Parse {
        line: 1,
        message: format!("expected an atom count, got '{}'", header.trim()),
    })?;
    let comment = lines.next().map(|(_, l)| l.trim().to_string()).unwrap_or_default();

    let mut elements = Vec::with_capacity(expected);
    let mut positions = Vec::with_capacity(expected);
    let mut last_line = 2;
    for (line, raw) in lines {
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        last_line = line;
        if elements.len() == expected {
            return Err(FormatError::CountMismatch { line, expected, found: expected + 1 });
        }
        let mut fields = row.split_whitespace();
        let sym = fields.next().unwrap_or_default();
        let z = atomic_number(sym).ok_or_else(|| FormatError::UnknownElement { line, symbol: sym.to_string() })?;
        let mut pos = [0.0; 3];
        for (axis, slot) in pos.iter_mut().enumerate() {
            let field = fields.next().ok_or_else(|| FormatError::Parse {
                line,
                message: format!("expected 'symbol x y z', missing coordinate {}", axis + 1),
            })?;
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FormatError::Parse { line, message: format!("invalid coordinate '{field}'") })?;
        }
        elements.push(z);
        positions.push(pos);
    }
    if elements.len() != expected {
        return Err(FormatError::CountMismatch { line: last_line, expected, found: elements.len() });
    }
    Ok(MoleculeFile { comment, elements, positions })
}

impl MoleculeFile {
    /// Distinct elements sorted by atomic number.
    pub fn distinct_elements(&self) -> Vec<u8> {
        let mut v = self.elements.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Maps atoms to channels; also returns the element symbol carried by
    /// each channel (`"*"` for the single-channel mode).
    pub fn to_particles(&self, policy: ChannelPolicy) -> Result<(ParticleSet, Vec<String>), FormatError> {
        self.to_particles_with(policy, &self.distinct_elements())
    }

    /// Like [`to_particles`](Self::to_particles) but with a caller-supplied
    /// element ordering, so several files can share one channel layout.
    pub fn to_particles_with(
        &self,
        policy: ChannelPolicy,
        order: &[u8],
    ) -> Result<(ParticleSet, Vec<String>), FormatError> {
        if policy == ChannelPolicy::Single {
            let particles = self.positions.iter().map(|p| Particle::new(0, *p)).collect();
            return Ok((ParticleSet::new(particles), vec!["*".to_string()]));
        }
        let index: BTreeMap<u8, usize> = order.iter().enumerate().map(|(i, z)| (*z, i)).collect();
        let mut particles = Vec::with_capacity(self.elements.len());
        for (z, p) in self.elements.iter().zip(&self.positions) {
            let c = *index.get(z).ok_or_else(|| FormatError::Parse {
                line: 0,
                message: format!("element {} missing from the channel layout", symbol(*z).unwrap_or("?")),
            })?;
            particles.push(Particle::new(c, *p));
        }
        let mut names: Vec<String> = order.iter().map(|z| symbol(*z).unwrap_or("?").to_string()).collect();
        if let ChannelPolicy::Fixed(k) = policy {
            if order.len() > k {
                return Err(FormatError::Parse {
                    line: 0,
                    message: format!("{} distinct elements do not fit in {k} channels", order.len()),
                });
            }
            names.resize(k, String::new());
        }
        Ok((ParticleSet::new(particles), names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_atom() {
        let m = parse_xyz("1\n\nC 0 0 0").unwrap();
        assert_eq!(m.elements, vec![6]);
        assert_eq!(m.positions, vec![[0.0; 3]]);
    }

    #[test]
    fn short_file_reports_count_mismatch() {
        let err = parse_xyz("3\n\nC 0 0 0\nC 1 0 0\n").unwrap_err();
        match err {
            FormatError::CountMismatch { line, expected, found } => {
                assert_eq!((line, expected, found), (4, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_xyz("1\n\nC 0 0 0\nC 1 0 0\n"), Err(FormatError::CountMismatch { line: 4, .. })));
    }

    #[test]
    fn water_channels_follow_atomic_number() {
        let m = parse_xyz("3\nwater\nO 0.0 0.0 0.117\nH 0.0 0.757 -0.467\nH 0.0 -0.757 -0.467\n").unwrap();
        let (set, names) = m.to_particles(ChannelPolicy::Auto).unwrap();
        assert_eq!(names, vec!["H", "O"]);
        assert_eq!(set.len(), 3);
        assert_eq!(set.channel_count(), 2);
        assert_eq!(set.particles[0].channel, 1);
        assert_eq!(set.particles[1].channel, 0);

        let (single, names) = m.to_particles(ChannelPolicy::Single).unwrap();
        assert_eq!(single.channel_count(), 1);
        assert_eq!(names.len(), 1);

        let (_, names) = m.to_particles(ChannelPolicy::Fixed(4)).unwrap();
        assert_eq!(names.len(), 4);
        assert!(m.to_particles(ChannelPolicy::Fixed(1)).is_err());
    }

    #[test]
    fn located_errors() {
        assert!(matches!(parse_xyz("x\n\n"), Err(FormatError::Parse { line: 1, .. })));
        assert!(matches!(parse_xyz("1\n\nQq 0 0 0"), Err(FormatError::UnknownElement { line: 3, .. })));
        assert!(matches!(parse_xyz("2\n\nC 0 0 0\nN 0 a 0"), Err(FormatError::Parse { line: 4, .. })));
        assert!(matches!(parse_xyz("1\n\nC 0 0"), Err(FormatError::Parse { line: 3, .. })));
        assert!(matches!(parse_xyz(""), Err(FormatError::Parse { line: 1, .. })));
    }

    #[test]
    fn extra_columns_are_ignored() {
        let m = parse_xyz("1\ncomment\ncl 1.5 2 -3 0.25\n").unwrap();
        assert_eq!(m.elements, vec![17]);
        assert_eq!(m.positions[0], [1.5, 2.0, -3.0]);
        assert_eq!(m.comment, "comment");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
                let text = String::from_utf8_lossy(&bytes);
                let _ = parse_xyz(&text);
            }

            #[test]
            fn never_panics_on_plausible_input(
                n in 0usize..4,
                rows in proptest::collection::vec("[A-Za-z]{1,2}( [-0-9.e]{1,6}){0,4}", 0..5),
            ) {
                let text = format!("{n}\n\n{}", rows.join("\n"));
                let _ = parse_xyz(&text);
            }
        }
    }
}
