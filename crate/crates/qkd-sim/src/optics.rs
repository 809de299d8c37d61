//! Interferometer optics for phase-encoded time-bin pulse pairs.
//!
//! Alice's unbalanced interferometer splits each source pulse into a
//! reference pulse (short arm) and a phase-modulated signal pulse (long arm),
//! separated by `dt`. Bob's interferometer splits each incoming pulse again,
//! so light reaches his detector in three time slots:
//!
//! * `t1` — reference pulse through Bob's short arm,
//! * `t2` — reference-through-long overlapping signal-through-short; the two
//!   paths interfere and the intensity encodes the phase difference between
//!   the modulators,
//! * `t3` — signal pulse through Bob's long arm.
//!
//! Everything here is a lossless mean-field computation over expected photon
//! numbers. Photon discreteness lives in [`crate::stochastic`], loss in
//! [`crate::channel`].

use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Share of the final combiner output that reaches the detector port.
/// Bob has a single detector; the complementary port is tracked only so
/// energy bookkeeping can be checked.
const COMBINER_PORT_SHARE: f64 = 0.5;

/// Relative intensity below which two pulses are considered fully
/// destructive (used nowhere in the hot path; exported for tests).
pub const INTENSITY_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("mean photon number must be finite and >= 0, got {0}")]
    InvalidMeanPhotons(f64),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidSplitRatio(f64),
    #[error("slot separation dt must be finite and > 0, got {0}")]
    InvalidSlotSeparation(f64),
}

/// An optical phase in radians, canonicalized to `[0, 2π)`.
///
/// The protocol only ever modulates by 0° or 180°, but the type accepts any
/// angle so fringe scans and property tests can probe the full circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    radians: f64,
}

impl Phase {
    pub const ZERO: Phase = Phase { radians: 0.0 };
    pub const PI: Phase = Phase { radians: PI };

    pub fn from_radians(radians: f64) -> Self {
        let mut r = radians.rem_euclid(TAU);
        // rem_euclid can round up to the modulus itself for tiny negatives.
        if r >= TAU {
            r = 0.0;
        }
        Phase { radians: r }
    }

    /// Builds a phase from degrees. Integer multiples of 180° map exactly:
    /// 0° → 0 and 180° → π, with any whole number of turns removed first.
    pub fn from_degrees(degrees: f64) -> Self {
        let d = degrees.rem_euclid(360.0);
        Phase::from_radians(d / 180.0 * PI)
    }

    pub fn radians(&self) -> f64 {
        self.radians
    }

    pub fn degrees(&self) -> f64 {
        self.radians / PI * 180.0
    }

    /// The phase shifted by a half turn (π).
    pub fn opposite(&self) -> Self {
        Phase::from_radians(self.radians + PI)
    }
}

/// Alice's encoded output: a bright-or-balanced reference pulse and a weak
/// signal pulse carrying the modulated phase, `dt` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinPulsePair {
    /// Mean photon number of the reference pulse (short arm).
    pub mu_ref: f64,
    /// Mean photon number of the signal pulse (long arm).
    pub mu_sig: f64,
    /// Phase carried by the signal pulse.
    pub phase: Phase,
    /// Slot separation in arbitrary time units.
    pub dt: f64,
}

impl TimeBinPulsePair {
    pub fn new(mu_ref: f64, mu_sig: f64, phase: Phase, dt: f64) -> Result<Self, OpticsError> {
        for mu in [mu_ref, mu_sig] {
            if !mu.is_finite() || mu < 0.0 {
                return Err(OpticsError::InvalidMeanPhotons(mu));
            }
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(OpticsError::InvalidSlotSeparation(dt));
        }
        Ok(Self {
            mu_ref,
            mu_sig,
            phase,
            dt,
        })
    }

    /// Total mean photon number leaving Alice's encoder.
    pub fn total_mean_photons(&self) -> f64 {
        self.mu_ref + self.mu_sig
    }
}

/// Mean photon numbers reaching Bob's detector in the three time slots,
/// plus the middle slot of the undetected combiner port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotIntensities {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// Interference slot of the complementary combiner output. No detector
    /// sits there; it exists so energy conservation can be verified.
    pub t2_other_port: f64,
}

impl SlotIntensities {
    /// Energy summed over all three slots of *both* combiner outputs.
    ///
    /// The non-interfering slots t1 and t3 split evenly between the two
    /// output ports, so each appears twice; t2 and its complementary-port
    /// partner carry the interference.
    pub fn total_energy(&self) -> f64 {
        2.0 * self.t1 + self.t2 + 2.0 * self.t3 + self.t2_other_port
    }
}

/// Fraction of light surviving interference of two equal-amplitude paths
/// with modulator phases `alice_phase` and `bob_phase`: cos²(Δφ/2).
///
/// Returns exactly 1.0 when the phases match modulo 2π and exactly 0.0 when
/// they differ by π, matching the constructive/destructive cases of the
/// four-state table.
pub fn interfere(alice_phase: Phase, bob_phase: Phase) -> f64 {
    // cos²(Δ/2) via the half-angle identity; cos(±π) == -1.0 exactly in f64,
    // which pins the destructive case to 0.0 rather than ~1e-33.
    0.5 * (1.0 + (alice_phase.radians() - bob_phase.radians()).cos())
}

/// Encodes one bit onto a pulse pair: the splitter sends fraction
/// `split_ratio` of the source energy into the signal arm, and the phase
/// modulator applies 0 for bit 0 and π for bit 1.
pub fn encode(
    mu_source: f64,
    bit: bool,
    split_ratio: f64,
    dt: f64,
) -> Result<TimeBinPulsePair, OpticsError> {
    if !mu_source.is_finite() || mu_source < 0.0 {
        return Err(OpticsError::InvalidMeanPhotons(mu_source));
    }
    if !split_ratio.is_finite() || split_ratio <= 0.0 || split_ratio >= 1.0 {
        return Err(OpticsError::InvalidSplitRatio(split_ratio));
    }
    let phase = if bit { Phase::PI } else { Phase::ZERO };
    TimeBinPulsePair::new(
        mu_source * (1.0 - split_ratio),
        mu_source * split_ratio,
        phase,
        dt,
    )
}

/// Propagates a pulse pair through Bob's interferometer (input splitter
/// ratio `split_ratio`, phase `bob_phase` in the long arm, 50/50 output
/// combiner) and returns the mean photon number per detection slot.
///
/// The middle slot mixes two paths with squared amplitudes
/// `a1² = mu_sig·(1−s)/2` (signal via short arm) and `a2² = mu_ref·s/2`
/// (reference via long arm):
///
/// ```text
/// t2 = (a1 + a2)²·cos²(Δφ/2) + (a1 − a2)²·sin²(Δφ/2)
/// ```
///
/// which equals `a1² + a2² + 2·a1·a2·cos Δφ` but keeps the destructive
/// extreme exactly zero for balanced amplitudes.
pub fn slot_intensities(
    pair: &TimeBinPulsePair,
    bob_phase: Phase,
    split_ratio: f64,
) -> Result<SlotIntensities, OpticsError> {
    let s = split_ratio;
    if !s.is_finite() || s <= 0.0 || s >= 1.0 {
        return Err(OpticsError::InvalidSplitRatio(s));
    }
    let k = COMBINER_PORT_SHARE;
    let t1 = pair.mu_ref * (1.0 - s) * k;
    let t3 = pair.mu_sig * s * k;
    let a1 = (pair.mu_sig * (1.0 - s) * k).sqrt();
    let a2 = (pair.mu_ref * s * k).sqrt();
    let visibility = interfere(pair.phase, bob_phase);
    let bright = (a1 + a2) * (a1 + a2);
    let dark = (a1 - a2) * (a1 - a2);
    Ok(SlotIntensities {
        t1,
        t2: bright * visibility + dark * (1.0 - visibility),
        t3,
        t2_other_port: dark * visibility + bright * (1.0 - visibility),
    })
}
