//! Photon-number-splitting eavesdropper.
//!
//! Eve taps the line at Alice's output. Whenever a pulse carries more than
//! one photon she keeps some and forwards the rest untouched; the photons
//! she kept carry the same phase information, so once the sifted positions
//! are announced she reads the corresponding bits with certainty. Single
//! photon pulses cannot be split, but she may suppress them to skew the
//! sifted key toward pulses she knows.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::SiftedKey;
use crate::stochastic::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("known fraction is undefined for an empty sifted key")]
    EmptySiftedKey,
}

/// Policy knobs for the splitting attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PnsStrategy {
    /// Photons kept from each multiphoton pulse (at least one photon is
    /// always forwarded).
    pub store_count: u64,
    /// Probability of suppressing a single-photon pulse outright.
    pub block_singles_prob: f64,
    /// Forward the surviving photons over Eve's own lossless line instead
    /// of the configured fiber.
    pub lossless_forward: bool,
}

impl Default for PnsStrategy {
    fn default() -> Self {
        Self {
            store_count: 1,
            block_singles_prob: 0.0,
            lossless_forward: false,
        }
    }
}

/// Outcome of tapping one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interception {
    pub stored: u64,
    pub forwarded: u64,
    pub blocked: bool,
}

/// Splits one pulse of `n` photons according to `strategy`.
///
/// Multiphoton pulses lose `min(store_count, n−1)` photons to Eve's memory;
/// single photons are forwarded unless the blocking draw fires; vacuum
/// passes through untouched. One uniform draw is consumed exactly when
/// `n == 1`.
pub fn intercept(n: u64, strategy: &PnsStrategy, rng: &mut RngStream) -> Interception {
    debug_assert!(strategy.store_count >= 1);
    match n {
        0 => Interception {
            stored: 0,
            forwarded: 0,
            blocked: false,
        },
        1 => {
            let blocked = rng.gen::<f64>() < strategy.block_singles_prob;
            Interception {
                stored: 0,
                forwarded: if blocked { 0 } else { 1 },
                blocked,
            }
        }
        _ => {
            let stored = strategy.store_count.min(n - 1);
            Interception {
                stored,
                forwarded: n - stored,
                blocked: false,
            }
        }
    }
}

/// Eve's per-session bookkeeping: how many photons she kept from each pulse
/// and, after sifting, which key bits that bought her.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EveLedger {
    stored: BTreeMap<u64, u64>,
    known_bits: BTreeMap<u64, bool>,
}

impl EveLedger {
    /// Records photons kept from the pulse at `index`; no-op for zero.
    pub fn record(&mut self, index: u64, stored: u64) {
        if stored > 0 {
            self.stored.insert(index, stored);
        }
    }

    pub fn stored_at(&self, index: u64) -> u64 {
        self.stored.get(&index).copied().unwrap_or(0)
    }

    pub fn stored_pulses(&self) -> usize {
        self.stored.len()
    }

    /// Learns every sifted bit for which at least one photon was stored
    /// (a stored photon replicates the phase information exactly), then
    /// returns the fraction of the sifted key Eve knows.
    pub fn learn(&mut self, sifted_alice_key: &SiftedKey) -> Result<f64, AdversaryError> {
        if sifted_alice_key.is_empty() {
            return Err(AdversaryError::EmptySiftedKey);
        }
        for (&position, &bit) in sifted_alice_key
            .positions
            .iter()
            .zip(sifted_alice_key.bits.iter())
        {
            if self.stored_at(position) >= 1 {
                self.known_bits.insert(position, bit);
            }
        }
        Ok(self.known_bits.len() as f64 / sifted_alice_key.len() as f64)
    }

    pub fn known_bits(&self) -> &BTreeMap<u64, bool> {
        &self.known_bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> RngStream {
        RngStream::new(99, 0)
    }

    #[test]
    fn multiphoton_pulse_is_split() {
        let out = intercept(3, &PnsStrategy::default(), &mut rng());
        assert_eq!(
            out,
            Interception {
                stored: 1,
                forwarded: 2,
                blocked: false
            }
        );
    }

    #[test]
    fn vacuum_passes_untouched() {
        let out = intercept(0, &PnsStrategy::default(), &mut rng());
        assert_eq!((out.stored, out.forwarded, out.blocked), (0, 0, false));
    }

    #[test]
    fn certain_blocking_suppresses_singles() {
        let strategy = PnsStrategy {
            block_singles_prob: 1.0,
            ..PnsStrategy::default()
        };
        let out = intercept(1, &strategy, &mut rng());
        assert_eq!((out.stored, out.forwarded, out.blocked), (0, 0, true));
    }

    #[test]
    fn never_blocking_forwards_singles() {
        let out = intercept(1, &PnsStrategy::default(), &mut rng());
        assert_eq!((out.stored, out.forwarded, out.blocked), (0, 1, false));
    }

    #[test]
    fn greedy_storage_always_forwards_one() {
        let strategy = PnsStrategy {
            store_count: 10,
            ..PnsStrategy::default()
        };
        for n in 2..8 {
            let out = intercept(n, &strategy, &mut rng());
            assert_eq!(out.stored, n - 1);
            assert_eq!(out.forwarded, 1);
        }
    }

    #[test]
    fn stored_plus_forwarded_never_exceeds_input() {
        let mut r = rng();
        let strategy = PnsStrategy {
            store_count: 2,
            block_singles_prob: 0.5,
            lossless_forward: false,
        };
        for n in 0..50 {
            let out = intercept(n, &strategy, &mut r);
            assert!(out.stored + out.forwarded <= n);
            if n <= 1 {
                assert_eq!(out.stored, 0);
            }
        }
    }

    #[test]
    fn ledger_learns_only_stored_sifted_positions() {
        let mut ledger = EveLedger::default();
        ledger.record(2, 1);
        ledger.record(5, 3);
        ledger.record(9, 1); // not sifted below
        let mut key = SiftedKey::default();
        key.push(2, true);
        key.push(5, false);
        key.push(7, true);
        let fraction = ledger.learn(&key).unwrap();
        assert!((fraction - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ledger.known_bits().get(&2), Some(&true));
        assert_eq!(ledger.known_bits().get(&5), Some(&false));
        assert_eq!(ledger.known_bits().get(&7), None);
        assert_eq!(ledger.known_bits().get(&9), None);
    }

    #[test]
    fn ledger_with_no_multiphoton_pulses_knows_nothing() {
        let mut ledger = EveLedger::default();
        let mut key = SiftedKey::default();
        key.push(1, false);
        key.push(2, true);
        assert_eq!(ledger.learn(&key).unwrap(), 0.0);
    }

    #[test]
    fn every_pulse_stored_means_full_knowledge() {
        let mut ledger = EveLedger::default();
        let mut key = SiftedKey::default();
        for i in 1..=8 {
            ledger.record(i, 1);
            key.push(i, i % 2 == 0);
        }
        assert_eq!(ledger.learn(&key).unwrap(), 1.0);
    }

    #[test]
    fn empty_sifted_key_has_no_fraction() {
        let mut ledger = EveLedger::default();
        assert_eq!(
            ledger.learn(&SiftedKey::default()),
            Err(AdversaryError::EmptySiftedKey)
        );
    }
}
