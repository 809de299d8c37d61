//! Desk-scale Monte-Carlo simulator of phase-encoded B92 quantum key
//! distribution: time-bin interferometric encoding, lossy fiber, threshold
//! detectors with dark counts, sifting and error-rate accounting, and a
//! photon-number-splitting eavesdropper.
//!
//! Module map:
//!
//! * [`optics`] — lossless interferometer math over mean photon numbers.
//! * [`stochastic`] — seeded random streams, Poisson/binomial sampling, and
//!   the click-detector model.
//! * [`channel`] — fiber attenuation, background light, optional phase
//!   decoherence.
//! * [`protocol`] — Alice/Bob state machines, sifting, QBER, the session
//!   pipeline.
//! * [`adversary`] — the photon-number-splitting attack and Eve's ledger.
//! * [`harness`] — configuration, parameter sweeps, CSV reporting.

pub mod adversary;
pub mod channel;
pub mod harness;
pub mod optics;
pub mod protocol;
pub mod stochastic;
