use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One element of a pulse sequence. Frequencies are angular (rad/s) and
/// measured from the bare qubit frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Element {
    PiPulse { frequency: f64, duration: f64 },
    HalfPiPulse { frequency: f64, phase: f64, duration: f64 },
    Delay { duration: f64 },
    MagnonPump { magnons: f64, duration: f64, frequency: f64 },
    ParametricPump { omega_qm: f64, delta: f64, duration: f64 },
    Readout { window: f64 },
}

impl Element {
    pub fn duration(&self) -> f64 {
        match *self {
            Element::PiPulse { duration, .. }
            | Element::HalfPiPulse { duration, .. }
            | Element::Delay { duration }
            | Element::MagnonPump { duration, .. }
            | Element::ParametricPump { duration, .. } => duration,
            Element::Readout { window } => window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedElement {
    pub start: f64,
    pub element: Element,
    /// Allowed to overlap other elements (e.g. a magnon pump held during
    /// qubit evolution).
    pub concurrent: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub elements: Vec<TimedElement>,
}

impl PulseSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    /// End time of the last sequential element.
    pub fn cursor(&self) -> f64 {
        self.elements
            .iter()
            .filter(|e| !e.concurrent)
            .map(|e| e.start + e.element.duration())
            .fold(0.0, f64::max)
    }

    /// Appends `element` after the last sequential element.
    pub fn then(mut self, element: Element) -> Self {
        let start = self.cursor();
        self.elements.push(TimedElement {
            start,
            element,
            concurrent: false,
        });
        self
    }

    pub fn concurrent(mut self, start: f64, element: Element) -> Self {
        self.elements.push(TimedElement {
            start,
            element,
            concurrent: true,
        });
        self
    }

    pub fn at(mut self, start: f64, element: Element) -> Self {
        self.elements.push(TimedElement {
            start,
            element,
            concurrent: false,
        });
        self
    }

    pub fn duration(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.start + e.element.duration())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.elements.iter().enumerate() {
            let d = e.element.duration();
            if !(d >= 0.0) || !d.is_finite() || !(e.start >= 0.0) || !e.start.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "schedule element {i} has invalid timing"
                )));
            }
        }
        let mut seq: Vec<&TimedElement> = self.elements.iter().filter(|e| !e.concurrent).collect();
        seq.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in seq.windows(2) {
            let end = w[0].start + w[0].element.duration();
            if end > w[1].start * (1.0 + 1e-12) + 1e-18 {
                return Err(Error::InvalidArgument(format!(
                    "schedule elements overlap: {:?} ends at {end:e} s after next starts at {:e} s",
                    w[0].element, w[1].start
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for PulseSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .elements
            .iter()
            .map(|e| {
                let name = match e.element {
                    Element::PiPulse { .. } => "pi",
                    Element::HalfPiPulse { .. } => "pi/2",
                    Element::Delay { .. } => "delay",
                    Element::MagnonPump { .. } => "magnon-pump",
                    Element::ParametricPump { .. } => "parametric-pump",
                    Element::Readout { .. } => "readout",
                };
                let tag = if e.concurrent { "*" } else { "" };
                format!("{name}{tag}@{:e}+{:e}", e.start, e.element.duration())
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_builder_and_overlap_check() {
        let s = PulseSchedule::new()
            .then(Element::HalfPiPulse { frequency: 0.0, phase: 0.0, duration: 20e-9 })
            .then(Element::Delay { duration: 1e-6 })
            .then(Element::HalfPiPulse { frequency: 0.0, phase: 0.0, duration: 20e-9 })
            .concurrent(0.0, Element::MagnonPump { magnons: 100.0, duration: 1.04e-6, frequency: 0.0 })
            .then(Element::Readout { window: 2e-6 });
        s.validate().unwrap();
        assert!((s.duration() - 3.04e-6).abs() < 1e-15);
        let bad = PulseSchedule::new()
            .at(0.0, Element::Delay { duration: 1e-6 })
            .at(0.5e-6, Element::Readout { window: 1e-6 });
        assert!(bad.validate().is_err());
    }
}
