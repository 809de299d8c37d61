//! Seeded randomness, photon-number statistics, and the click-detector model.
//!
//! All randomness flows through [`RngStream`]: a counter-addressed ChaCha8
//! stream identified by `(seed, stream_id)`. A session derives one stream
//! per pulse per party (`stream_id = pulse_index·4 + party_tag`), so turning
//! the eavesdropper on or off cannot perturb Alice's bit sequence or Bob's
//! basis sequence — the property paired A/B experiments rely on.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::SlotIntensities;

/// Knuth's product-of-uniforms sampler is used below this mean; larger means
/// are split additively so `exp(-mu)` stays far from underflow.
const KNUTH_MAX_MU: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("mean photon number must be finite and >= 0, got {0}")]
    InvalidMeanPhotons(f64),
    #[error("transmittance must lie in [0, 1], got {0}")]
    InvalidTransmittance(f64),
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
}

/// Role tag mixed into the per-pulse stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice = 0,
    Bob = 1,
    Channel = 2,
    Eve = 3,
}

/// A reproducible random stream addressed by `(seed, stream_id)`.
///
/// The same pair yields a byte-identical draw sequence on every run of the
/// same build; distinct stream ids select independent ChaCha8 streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream for `party`'s randomness on pulse `pulse_index` (0-based):
    /// `stream_id = pulse_index·4 + party_tag`.
    pub fn for_pulse(seed: u64, pulse_index: u64, party: Party) -> Self {
        Self::new(seed, pulse_index.wrapping_mul(4).wrapping_add(party as u64))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Threshold (click / no-click) detector parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// Probability that a photon reaching the detector fires it.
    pub efficiency: f64,
    /// Probability of a spurious click per slot per gate.
    pub dark_count_prob: f64,
}

impl DetectorParams {
    pub fn new(efficiency: f64, dark_count_prob: f64) -> Result<Self, StochasticError> {
        if !(0.0..=1.0).contains(&efficiency) || !efficiency.is_finite() {
            return Err(StochasticError::InvalidProbability {
                name: "efficiency",
                value: efficiency,
            });
        }
        if !(0.0..=1.0).contains(&dark_count_prob) || !dark_count_prob.is_finite() {
            return Err(StochasticError::InvalidProbability {
                name: "dark_count_prob",
                value: dark_count_prob,
            });
        }
        Ok(Self {
            efficiency,
            dark_count_prob,
        })
    }

    /// Unit efficiency and no dark counts.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_prob: 0.0,
        }
    }
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            dark_count_prob: 1e-5,
        }
    }
}

/// Which of the three time slots clicked for one pulse pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClickPattern {
    pub t1: bool,
    pub t2: bool,
    pub t3: bool,
}

impl ClickPattern {
    pub fn count(&self) -> u32 {
        self.t1 as u32 + self.t2 as u32 + self.t3 as u32
    }

    pub fn any(&self) -> bool {
        self.t1 || self.t2 || self.t3
    }
}

/// Draws a photon number from Poisson(`mu`).
///
/// Exact sampling: Knuth's multiplicative method for small means, additive
/// splitting for large ones. Never a normal approximation.
pub fn sample_photon_number(mu: f64, rng: &mut RngStream) -> Result<u64, StochasticError> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(StochasticError::InvalidMeanPhotons(mu));
    }
    Ok(poisson(mu, rng))
}

fn poisson(mu: f64, rng: &mut RngStream) -> u64 {
    let mut remaining = mu;
    let mut n = 0;
    // Poisson(a + b) = Poisson(a) + Poisson(b) for independent draws.
    while remaining > KNUTH_MAX_MU {
        n += knuth_poisson(KNUTH_MAX_MU, rng);
        remaining -= KNUTH_MAX_MU;
    }
    n + knuth_poisson(remaining, rng)
}

fn knuth_poisson(mu: f64, rng: &mut RngStream) -> u64 {
    if mu == 0.0 {
        return 0;
    }
    let limit = (-mu).exp();
    let mut k = 0;
    let mut p = 1.0;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

/// Binomially thins a photon count: each photon independently survives with
/// probability `transmittance`.
pub fn thin(n: u64, transmittance: f64, rng: &mut RngStream) -> Result<u64, StochasticError> {
    if !(0.0..=1.0).contains(&transmittance) || !transmittance.is_finite() {
        return Err(StochasticError::InvalidTransmittance(transmittance));
    }
    let mut survivors = 0;
    for _ in 0..n {
        if rng.gen::<f64>() < transmittance {
            survivors += 1;
        }
    }
    Ok(survivors)
}

/// Click probability of a threshold detector gated on a slot with mean
/// photon number `mu_slot`: `1 − (1 − p_dark)·exp(−η·mu_slot)`.
pub fn click_probability(mu_slot: f64, det: &DetectorParams) -> f64 {
    1.0 - (1.0 - det.dark_count_prob) * (-det.efficiency * mu_slot).exp()
}

/// Samples a click for one slot from its mean photon number.
pub fn detect_slot(mu_slot: f64, det: &DetectorParams, rng: &mut RngStream) -> bool {
    assert!(mu_slot >= 0.0, "slot intensity must be non-negative");
    rng.gen::<f64>() < click_probability(mu_slot, det)
}

/// Samples a click for a slot holding `n_photons` discrete photons plus an
/// incoherent mean background of `extra_mu`; each photon fires the detector
/// independently with probability η:
/// `P(click) = 1 − (1 − p_dark)·(1 − η)^n·exp(−η·extra_mu)`.
///
/// Averaged over `n ~ Poisson(mu)` this reproduces [`detect_slot`] exactly,
/// which is what lets the session track discrete photons (so an eavesdropper
/// removing them has a visible effect) without distorting the closed-form
/// click statistics.
pub fn detect_slot_photons(
    n_photons: u64,
    extra_mu: f64,
    det: &DetectorParams,
    rng: &mut RngStream,
) -> bool {
    assert!(extra_mu >= 0.0, "background intensity must be non-negative");
    let no_click = (1.0 - det.dark_count_prob)
        * (1.0 - det.efficiency).powf(n_photons as f64)
        * (-det.efficiency * extra_mu).exp();
    rng.gen::<f64>() < 1.0 - no_click
}

/// Applies [`detect_slot`] independently to t1, t2, t3 (drawn in that order).
pub fn detect(slots: &SlotIntensities, det: &DetectorParams, rng: &mut RngStream) -> ClickPattern {
    ClickPattern {
        t1: detect_slot(slots.t1, det, rng),
        t2: detect_slot(slots.t2, det, rng),
        t3: detect_slot(slots.t3, det, rng),
    }
}

/// Scatters `n` photons over the three detected slots; photon `i` lands in
/// slot `j` with probability `fractions[j]`, and with the leftover
/// probability it exits through the undetected combiner port.
pub fn split_photons(n: u64, fractions: [f64; 3], rng: &mut RngStream) -> [u64; 3] {
    let sum: f64 = fractions.iter().sum();
    assert!(
        fractions.iter().all(|f| *f >= 0.0) && sum <= 1.0 + 1e-9,
        "slot fractions must be non-negative and sum to at most 1, got {fractions:?}"
    );
    let c1 = fractions[0];
    let c2 = c1 + fractions[1];
    let c3 = c2 + fractions[2];
    let mut counts = [0u64; 3];
    for _ in 0..n {
        let u = rng.gen::<f64>();
        if u < c1 {
            counts[0] += 1;
        } else if u < c2 {
            counts[1] += 1;
        } else if u < c3 {
            counts[2] += 1;
        }
    }
    counts
}
