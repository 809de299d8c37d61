//! Fiber-optic quantum channel: attenuation, incoherent background light,
//! and an optional phase-decoherence knob.
//!
//! Loss follows the standard dB law, applied photon-by-photon as binomial
//! thinning. Background light is unpolarized and never interferes: it is
//! carried as an extra mean intensity added equally to the three detection
//! slots, downstream of the interference computation.

use serde::{Deserialize, Serialize};

use crate::optics::{Phase, TimeBinPulsePair};
use crate::stochastic::{thin, RngStream, StochasticError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    /// Mean background photons added per detection slot.
    pub background_mu: f64,
    /// Optional phase-coherence length. When set, each pulse's signal phase
    /// flips by π with probability `1 − exp(−length/L_c)`, a coarse stand-in
    /// for phase corruption accumulating over long fiber. Disabled (no flip)
    /// when absent.
    pub coherence_length_km: Option<f64>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            length_km: 0.0,
            attenuation_db_per_km: 0.2,
            background_mu: 0.0,
            coherence_length_km: None,
        }
    }
}

/// What survives the fiber: thinned photon counts, the (possibly corrupted)
/// signal phase, and the background intensity each detection slot will see.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivedPulse {
    pub n_ref: u64,
    pub n_sig: u64,
    pub phase: Phase,
    pub background_mu: f64,
}

/// Power transmittance of the fiber: `10^(−attenuation·length/10)`.
pub fn transmittance(params: &ChannelParams) -> f64 {
    10f64.powf(-params.attenuation_db_per_km * params.length_km / 10.0)
}

/// Probability that the signal phase flips by π in transit; zero unless a
/// coherence length is configured.
pub fn phase_flip_probability(params: &ChannelParams) -> f64 {
    match params.coherence_length_km {
        None => 0.0,
        Some(lc) => 1.0 - (-params.length_km / lc).exp(),
    }
}

/// Sends a pulse pair down the fiber.
///
/// Draw order per pulse is fixed: phase-flip decision (only when a coherence
/// length is configured), then reference-count thinning, then signal-count
/// thinning.
pub fn propagate(
    pair: &TimeBinPulsePair,
    n_ref: u64,
    n_sig: u64,
    params: &ChannelParams,
    rng: &mut RngStream,
) -> Result<ArrivedPulse, StochasticError> {
    use rand::Rng;
    let phase = if params.coherence_length_km.is_some()
        && rng.gen::<f64>() < phase_flip_probability(params)
    {
        pair.phase.opposite()
    } else {
        pair.phase
    };
    let t = transmittance(params);
    Ok(ArrivedPulse {
        n_ref: thin(n_ref, t, rng)?,
        n_sig: thin(n_sig, t, rng)?,
        phase,
        background_mu: params.background_mu,
    })
}
