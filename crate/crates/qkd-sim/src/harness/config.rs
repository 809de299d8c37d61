//! Session configuration: the one JSON document that pins every physical
//! and protocol parameter, plus whole-config validation that reports all
//! violations at once.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::PnsStrategy;
use crate::channel::ChannelParams;
use crate::stochastic::DetectorParams;

/// How the per-pulse physics is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Deterministic single-photon, ideal-detector mode: exactly one photon
    /// per pulse, no loss, no noise; the middle slot clicks iff its relative
    /// intensity sits at the phase-matched maximum (within 1e-9). This is
    /// the mode that reproduces the four-case truth table exactly.
    Textbook,
    /// Full Monte-Carlo mode: Poisson photon numbers, binomial fiber loss,
    /// background light, and threshold detectors with dark counts.
    Stochastic,
}

/// Eavesdropper block of the config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EveConfig {
    pub enabled: bool,
    pub store_count: u64,
    pub block_singles_prob: f64,
    pub lossless_forward: bool,
}

impl Default for EveConfig {
    fn default() -> Self {
        let strategy = PnsStrategy::default();
        Self {
            enabled: false,
            store_count: strategy.store_count,
            block_singles_prob: strategy.block_singles_prob,
            lossless_forward: strategy.lossless_forward,
        }
    }
}

impl EveConfig {
    pub fn strategy(&self) -> PnsStrategy {
        PnsStrategy {
            store_count: self.store_count,
            block_singles_prob: self.block_singles_prob,
            lossless_forward: self.lossless_forward,
        }
    }
}

/// All parameters of one simulated key-distribution session.
///
/// External interfaces use degrees for phases and kilometers for lengths;
/// everything converts to radians internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub n_pulses: u64,
    /// Mean photon number per pulse leaving Alice's source.
    pub mu: f64,
    pub mode: Mode,
    /// Fraction of source energy routed into Alice's signal (long) arm.
    pub split_ratio_alice: f64,
    /// Fraction of incoming energy routed into Bob's long arm.
    pub split_ratio_bob: f64,
    pub channel: ChannelParams,
    pub detector: DetectorParams,
    pub eve: Option<EveConfig>,
    pub seed: u64,
    /// Optional explicit bit sequence for Alice (replaces her random draw).
    pub fixture_bits: Option<Vec<u8>>,
    /// Optional explicit basis sequence for Bob, in degrees (0 or 180).
    pub fixture_phases: Option<Vec<f64>>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_pulses: 10_000,
            mu: 0.1,
            mode: Mode::Stochastic,
            split_ratio_alice: 0.5,
            split_ratio_bob: 0.5,
            channel: ChannelParams::default(),
            detector: DetectorParams::default(),
            eve: None,
            seed: 1,
            fixture_bits: None,
            fixture_phases: None,
        }
    }
}

impl SessionConfig {
    /// The eavesdropper strategy, if one is enabled.
    pub fn active_eve(&self) -> Option<PnsStrategy> {
        self.eve
            .as_ref()
            .filter(|e| e.enabled)
            .map(|e| e.strategy())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigErrors> {
        serde_json::from_str(text).map_err(|e| {
            ConfigErrors(vec![ConfigViolation {
                key: "<config>".into(),
                constraint: format!("must be valid JSON for a session config: {e}"),
            }])
        })
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(LoadError::Invalid)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Invalid(#[from] ConfigErrors),
}

/// A single named constraint violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub key: String,
    pub constraint: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.constraint)
    }
}

/// Every violation found in one validation pass.
#[derive(Debug, Error, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigViolation>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid session config:")?;
        for v in &self.0 {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every invariant of the config and reports all violations at once.
pub fn validate(cfg: &SessionConfig) -> Result<(), ConfigErrors> {
    let mut errs = Vec::new();
    let mut bad = |key: &str, constraint: String| {
        errs.push(ConfigViolation {
            key: key.to_string(),
            constraint,
        });
    };

    if cfg.n_pulses < 1 {
        bad("n_pulses", "must be at least 1".into());
    }
    if !cfg.mu.is_finite() || cfg.mu < 0.0 {
        bad("mu", format!("must be finite and >= 0 (got {})", cfg.mu));
    }
    for (key, value) in [
        ("split_ratio_alice", cfg.split_ratio_alice),
        ("split_ratio_bob", cfg.split_ratio_bob),
    ] {
        if !value.is_finite() || value <= 0.0 || value >= 1.0 {
            bad(key, format!("must lie strictly in (0, 1) (got {value})"));
        }
    }
    for (key, value) in [
        ("channel.length_km", cfg.channel.length_km),
        (
            "channel.attenuation_db_per_km",
            cfg.channel.attenuation_db_per_km,
        ),
        ("channel.background_mu", cfg.channel.background_mu),
    ] {
        if !value.is_finite() || value < 0.0 {
            bad(key, format!("must be finite and >= 0 (got {value})"));
        }
    }
    if let Some(lc) = cfg.channel.coherence_length_km {
        if !lc.is_finite() || lc <= 0.0 {
            bad(
                "channel.coherence_length_km",
                format!("must be finite and > 0 when present (got {lc})"),
            );
        }
    }
    for (key, value) in [
        ("detector.efficiency", cfg.detector.efficiency),
        ("detector.dark_count_prob", cfg.detector.dark_count_prob),
    ] {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            bad(key, format!("must lie in [0, 1] (got {value})"));
        }
    }
    if let Some(eve) = &cfg.eve {
        if eve.store_count < 1 {
            bad("eve.store_count", "must be at least 1".into());
        }
        if !eve.block_singles_prob.is_finite() || !(0.0..=1.0).contains(&eve.block_singles_prob) {
            bad(
                "eve.block_singles_prob",
                format!("must lie in [0, 1] (got {})", eve.block_singles_prob),
            );
        }
    }
    if let Some(bits) = &cfg.fixture_bits {
        if bits.len() as u64 != cfg.n_pulses {
            bad(
                "fixture_bits",
                format!(
                    "length must equal n_pulses = {} (got {})",
                    cfg.n_pulses,
                    bits.len()
                ),
            );
        }
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            bad("fixture_bits", format!("entries must be 0 or 1 (got {b})"));
        }
    }
    if let Some(phases) = &cfg.fixture_phases {
        if phases.len() as u64 != cfg.n_pulses {
            bad(
                "fixture_phases",
                format!(
                    "length must equal n_pulses = {} (got {})",
                    cfg.n_pulses,
                    phases.len()
                ),
            );
        }
        if let Some(p) = phases.iter().find(|p| {
            !p.is_finite() || (p.rem_euclid(360.0) != 0.0 && p.rem_euclid(360.0) != 180.0)
        }) {
            bad(
                "fixture_phases",
                format!("entries must be 0 or 180 degrees modulo 360 (got {p})"),
            );
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(ConfigErrors(errs))
    }
}
