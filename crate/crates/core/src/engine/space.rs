use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    /// Anharmonic few-level system (transmon, 2 to 4 levels).
    Qubit,
    /// Harmonic mode truncated to `dim` Fock levels.
    Boson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub label: String,
    pub dim: usize,
    pub kind: ModeKind,
}

/// Ordered list of modes spanning a composite truncated Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpace {
    modes: Vec<Mode>,
}

impl ModeSpace {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidSpace("at least one mode is required".into()));
        }
        let mut seen = HashSet::new();
        for mode in &modes {
            if mode.dim < 1 {
                return Err(Error::InvalidSpace(format!(
                    "mode `{}` has dimension 0",
                    mode.label
                )));
            }
            if mode.kind == ModeKind::Qubit && !(2..=4).contains(&mode.dim) {
                return Err(Error::InvalidSpace(format!(
                    "qubit mode `{}` must have 2 to 4 levels, got {}",
                    mode.label, mode.dim
                )));
            }
            if !seen.insert(mode.label.as_str()) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate mode label `{}`",
                    mode.label
                )));
            }
        }
        Ok(Self { modes })
    }

    /// Convenience builder from `(label, dim, kind)` triples.
    pub fn from_modes(specs: &[(&str, usize, ModeKind)]) -> Result<Self> {
        Self::new(
            specs
                .iter()
                .map(|&(label, dim, kind)| Mode {
                    label: label.to_string(),
                    dim,
                    kind,
                })
                .collect(),
        )
    }

    pub fn single(label: &str, dim: usize, kind: ModeKind) -> Result<Self> {
        Self::from_modes(&[(label, dim, kind)])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.dim).product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.modes.iter().any(|m| m.label == label)
    }

    /// Flat basis index of the product state with per-mode occupations `levels`.
    pub fn basis_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.modes.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} occupation numbers, got {}",
                self.modes.len(),
                levels.len()
            )));
        }
        let mut idx = 0;
        for (mode, &n) in self.modes.iter().zip(levels) {
            if n >= mode.dim {
                return Err(Error::InvalidArgument(format!(
                    "level {n} out of range for mode `{}` (dim {})",
                    mode.label, mode.dim
                )));
            }
            idx = idx * mode.dim + n;
        }
        Ok(idx)
    }

    /// Inverse of [`ModeSpace::basis_index`].
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.modes.len()];
        for (slot, mode) in levels.iter_mut().zip(&self.modes).rev() {
            *slot = index % mode.dim;
            index /= mode.dim;
        }
        levels
    }
}

impl fmt::Display for ModeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .modes
            .iter()
            .map(|m| format!("{}:{}", m.label, m.dim))
            .collect();
        write!(f, "[{}]", parts.join(" x "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_spaces() {
        assert!(ModeSpace::from_modes(&[]).is_err());
        assert!(ModeSpace::single("m", 0, ModeKind::Boson).is_err());
        assert!(ModeSpace::single("q", 5, ModeKind::Qubit).is_err());
        let dup = ModeSpace::from_modes(&[("a", 2, ModeKind::Boson), ("a", 3, ModeKind::Boson)]);
        assert!(matches!(dup, Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn basis_index_roundtrip() {
        let s = ModeSpace::from_modes(&[
            ("q", 2, ModeKind::Qubit),
            ("c", 3, ModeKind::Boson),
            ("m", 4, ModeKind::Boson),
        ])
        .unwrap();
        assert_eq!(s.total_dim(), 24);
        for i in 0..24 {
            assert_eq!(s.basis_index(&s.levels_of(i)).unwrap(), i);
        }
        // leftmost slowest
        assert_eq!(s.basis_index(&[1, 0, 0]).unwrap(), 12);
        assert_eq!(s.basis_index(&[0, 0, 1]).unwrap(), 1);
    }
}
