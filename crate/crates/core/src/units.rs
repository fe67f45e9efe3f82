//! Conversions between ordinary frequency (Hz, the way device parameters are
//! quoted as ω/2π) and the angular frequencies used internally.

use std::f64::consts::TAU;

/// ω = 2π f.
#[inline]
pub fn hz_to_rad(f_hz: f64) -> f64 {
    TAU * f_hz
}

/// f = ω / 2π.
#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}

#[inline]
pub fn mhz(f: f64) -> f64 {
    hz_to_rad(f * 1e6)
}

#[inline]
pub fn khz(f: f64) -> f64 {
    hz_to_rad(f * 1e3)
}

#[inline]
pub fn ghz(f: f64) -> f64 {
    hz_to_rad(f * 1e9)
}

pub const US: f64 = 1e-6;
pub const NS: f64 = 1e-9;
pub const MS: f64 = 1e-3;
