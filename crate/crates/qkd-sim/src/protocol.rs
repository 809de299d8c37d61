//! B92 protocol logic: Alice's encoder, Bob's measurement rule, the sifting
//! exchange, error-rate accounting, and the per-session pulse pipeline.
//!
//! One pulse flows as: Alice draws a bit and encodes it as a 0/π phase on a
//! time-bin pair; the source emits a Poisson photon number; the eavesdropper
//! (if any) splits the pulse; the fiber thins it; Bob picks a basis, his
//! interferometer scatters the surviving photons over three arrival slots,
//! and his detector either clicks in the middle slot — a conclusive result
//! whose bit equals his basis choice — or it does not.

use rand::Rng;
use thiserror::Error;

use crate::adversary::{intercept, EveLedger, PnsStrategy};
use crate::channel::{propagate, transmittance, ChannelParams};
use crate::harness::config::{validate, ConfigErrors, Mode, SessionConfig};
use crate::harness::SessionStats;
use crate::optics::{encode, slot_intensities, Phase, TimeBinPulsePair};
use crate::stochastic::{
    click_probability, detect_slot_photons, sample_photon_number, split_photons, ClickPattern,
    Party, RngStream,
};

/// Slot separation used throughout; timing is abstract, only slot identity
/// matters to the protocol.
const SLOT_DT: f64 = 1.0;

/// In textbook mode the middle slot clicks iff its relative intensity sits
/// within this distance of the phase-matched maximum.
const TEXTBOOK_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("keys have different lengths: {alice} vs {bob}")]
    MismatchedKeyLengths { alice: usize, bob: usize },
    #[error("error rate is undefined for empty keys")]
    EmptyKeys,
}

/// What Bob concludes from one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureOutcome {
    Conclusive(bool),
    Inconclusive,
}

/// Per-pulse ledger row.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseRecord {
    /// Pulse sequence number, starting at 1.
    pub index: u64,
    pub alice_bit: bool,
    /// The phase Alice's modulator applied (0 for bit 0, π for bit 1).
    pub alice_phase: Phase,
    pub bob_phase: Phase,
    /// Photon count leaving Alice's encoder.
    pub n_source: u64,
    /// Photons kept by the eavesdropper (0 when none is present).
    pub eve_stored: u64,
    pub clicks: ClickPattern,
    pub outcome: MeasureOutcome,
}

/// An ordered set of kept bits together with the pulse indices they came
/// from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SiftedKey {
    pub bits: Vec<bool>,
    pub positions: Vec<u64>,
}

impl SiftedKey {
    pub fn push(&mut self, position: u64, bit: bool) {
        debug_assert!(self.positions.last().is_none_or(|p| *p < position));
        self.positions.push(position);
        self.bits.push(bit);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The key as a compact bit string, e.g. "011".
    pub fn bit_string(&self) -> String {
        self.bits
            .iter()
            .map(|b| if *b { '1' } else { '0' })
            .collect()
    }
}

/// Everything a session produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutput {
    pub records: Vec<PulseRecord>,
    pub alice_key: SiftedKey,
    pub bob_key: SiftedKey,
    pub stats: SessionStats,
    pub eve_ledger: Option<EveLedger>,
}

/// Alice's encoding rule: bit 0 → phase 0, bit 1 → phase π.
pub fn alice_prepare(bit: bool) -> Phase {
    if bit {
        Phase::PI
    } else {
        Phase::ZERO
    }
}

/// Bob's basis draw: 0 or π, each with probability 1/2.
pub fn bob_choose_phase(rng: &mut RngStream) -> Phase {
    if rng.gen_bool(0.5) {
        Phase::PI
    } else {
        Phase::ZERO
    }
}

/// Bob reads only the middle slot: a t2 click is conclusive and yields the
/// bit matching his basis (0 for phase 0, 1 for phase π); anything else —
/// including clicks confined to t1/t3 — is inconclusive.
pub fn bob_measure(clicks: ClickPattern, bob_phase: Phase) -> MeasureOutcome {
    if clicks.t2 {
        MeasureOutcome::Conclusive(bob_phase.radians() != 0.0)
    } else {
        MeasureOutcome::Inconclusive
    }
}

/// The sifting exchange: Bob announces the conclusive pulse indices, both
/// sides keep only those bits.
pub fn sift(records: &[PulseRecord]) -> (SiftedKey, SiftedKey) {
    let mut alice_key = SiftedKey::default();
    let mut bob_key = SiftedKey::default();
    for record in records {
        if let MeasureOutcome::Conclusive(bit) = record.outcome {
            alice_key.push(record.index, record.alice_bit);
            bob_key.push(record.index, bit);
        }
    }
    (alice_key, bob_key)
}

/// Fraction of sifted positions where the two keys disagree.
pub fn compute_qber(alice_key: &SiftedKey, bob_key: &SiftedKey) -> Result<f64, ProtocolError> {
    if alice_key.len() != bob_key.len() {
        return Err(ProtocolError::MismatchedKeyLengths {
            alice: alice_key.len(),
            bob: bob_key.len(),
        });
    }
    if alice_key.is_empty() {
        return Err(ProtocolError::EmptyKeys);
    }
    let errors = alice_key
        .bits
        .iter()
        .zip(bob_key.bits.iter())
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / alice_key.len() as f64)
}

/// Expected t2 click rate per pulse with no eavesdropper and uniformly
/// random phase choices — the reference the harness reports so that an
/// eavesdropper's footprint on Bob's click rate is visible.
pub fn expected_t2_click_rate_no_eve(cfg: &SessionConfig) -> f64 {
    match cfg.mode {
        Mode::Textbook => 0.5,
        Mode::Stochastic => {
            let pair =
                encode(cfg.mu, false, cfg.split_ratio_alice, SLOT_DT).expect("validated config");
            let matched = slot_intensities(&pair, pair.phase, cfg.split_ratio_bob)
                .expect("validated config")
                .t2;
            let mismatched = slot_intensities(&pair, pair.phase.opposite(), cfg.split_ratio_bob)
                .expect("validated config")
                .t2;
            let t = transmittance(&cfg.channel);
            let beta = cfg.channel.background_mu;
            0.5 * click_probability(t * matched + beta, &cfg.detector)
                + 0.5 * click_probability(t * mismatched + beta, &cfg.detector)
        }
    }
}

/// Runs one full session: pulse loop, sifting, and statistics. Deterministic
/// given the config (which includes the seed).
pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutput, ConfigErrors> {
    validate(cfg)?;
    let strategy = cfg.active_eve();
    let mut ledger = strategy.map(|_| EveLedger::default());

    let mut records = Vec::with_capacity(cfg.n_pulses.min(1 << 24) as usize);
    for pulse in 0..cfg.n_pulses {
        let record = match cfg.mode {
            Mode::Textbook => textbook_pulse(cfg, strategy.as_ref(), ledger.as_mut(), pulse),
            Mode::Stochastic => stochastic_pulse(cfg, strategy.as_ref(), ledger.as_mut(), pulse),
        };
        records.push(record);
    }

    let (alice_key, bob_key) = sift(&records);
    let qber = compute_qber(&alice_key, &bob_key).ok();
    let eve_known_fraction = ledger
        .as_mut()
        .and_then(|ledger| ledger.learn(&alice_key).ok());
    let stats = SessionStats::collect(
        &records,
        qber,
        eve_known_fraction,
        expected_t2_click_rate_no_eve(cfg),
    );

    Ok(SessionOutput {
        records,
        alice_key,
        bob_key,
        stats,
        eve_ledger: ledger,
    })
}

fn alice_bit(cfg: &SessionConfig, pulse: u64, rng: &mut RngStream) -> bool {
    match &cfg.fixture_bits {
        Some(bits) => bits[pulse as usize] == 1,
        None => rng.gen_bool(0.5),
    }
}

fn bob_phase(cfg: &SessionConfig, pulse: u64, rng: &mut RngStream) -> Phase {
    match &cfg.fixture_phases {
        Some(degrees) => Phase::from_degrees(degrees[pulse as usize]),
        None => bob_choose_phase(rng),
    }
}

/// Deterministic single-photon pulse: the detector sees a click at t2 iff
/// interference there is fully constructive. Channel loss, background, and
/// detector imperfections are all bypassed.
fn textbook_pulse(
    cfg: &SessionConfig,
    strategy: Option<&PnsStrategy>,
    ledger: Option<&mut EveLedger>,
    pulse: u64,
) -> PulseRecord {
    let index = pulse + 1;
    let mut alice_rng = RngStream::for_pulse(cfg.seed, pulse, Party::Alice);
    let mut bob_rng = RngStream::for_pulse(cfg.seed, pulse, Party::Bob);

    let bit = alice_bit(cfg, pulse, &mut alice_rng);
    let alice_phase = alice_prepare(bit);
    let pair = encode(cfg.mu, bit, cfg.split_ratio_alice, SLOT_DT).expect("validated config");
    let n_source = 1;

    let mut blocked = false;
    let mut eve_stored = 0;
    if let Some(strategy) = strategy {
        let mut eve_rng = RngStream::for_pulse(cfg.seed, pulse, Party::Eve);
        let cut = intercept(n_source, strategy, &mut eve_rng);
        blocked = cut.blocked;
        eve_stored = cut.stored;
        if let Some(ledger) = ledger {
            ledger.record(index, cut.stored);
        }
    }

    let bob_phase = bob_phase(cfg, pulse, &mut bob_rng);
    let slots = slot_intensities(&pair, bob_phase, cfg.split_ratio_bob).expect("validated config");
    let matched = slot_intensities(&pair, pair.phase, cfg.split_ratio_bob)
        .expect("validated config")
        .t2;
    let click_t2 = !blocked && matched > 0.0 && slots.t2 / matched >= 1.0 - TEXTBOOK_MATCH_TOL;
    let clicks = ClickPattern {
        t1: false,
        t2: click_t2,
        t3: false,
    };

    PulseRecord {
        index,
        alice_bit: bit,
        alice_phase,
        bob_phase,
        n_source,
        eve_stored,
        clicks,
        outcome: bob_measure(clicks, bob_phase),
    }
}

/// Full Monte-Carlo pulse. Within each per-pulse stream the draw order is
/// fixed: Alice draws bit, then the two pulse photon numbers; Eve draws her
/// blocking decision and removal choices; the channel draws phase flip and
/// thinning; Bob draws basis, photon slot placements, then the three slot
/// clicks.
fn stochastic_pulse(
    cfg: &SessionConfig,
    strategy: Option<&PnsStrategy>,
    ledger: Option<&mut EveLedger>,
    pulse: u64,
) -> PulseRecord {
    let index = pulse + 1;
    let mut alice_rng = RngStream::for_pulse(cfg.seed, pulse, Party::Alice);
    let mut bob_rng = RngStream::for_pulse(cfg.seed, pulse, Party::Bob);
    let mut chan_rng = RngStream::for_pulse(cfg.seed, pulse, Party::Channel);

    let bit = alice_bit(cfg, pulse, &mut alice_rng);
    let alice_phase = alice_prepare(bit);
    let pair = encode(cfg.mu, bit, cfg.split_ratio_alice, SLOT_DT).expect("validated config");
    let mut n_ref = sample_photon_number(pair.mu_ref, &mut alice_rng).expect("validated config");
    let mut n_sig = sample_photon_number(pair.mu_sig, &mut alice_rng).expect("validated config");
    let n_source = n_ref + n_sig;

    let mut eve_stored = 0;
    let mut lossless = false;
    if let Some(strategy) = strategy {
        let mut eve_rng = RngStream::for_pulse(cfg.seed, pulse, Party::Eve);
        let cut = intercept(n_source, strategy, &mut eve_rng);
        eve_stored = cut.stored;
        lossless = strategy.lossless_forward;
        if let Some(ledger) = ledger {
            ledger.record(index, cut.stored);
        }
        if cut.blocked {
            n_ref = 0;
            n_sig = 0;
        } else {
            // The photons Eve keeps are indistinguishable; remove each one
            // from the reference or signal pulse in proportion to occupancy.
            for _ in 0..n_source - cut.forwarded {
                let total = n_ref + n_sig;
                if eve_rng.gen::<f64>() < n_ref as f64 / total as f64 {
                    n_ref -= 1;
                } else {
                    n_sig -= 1;
                }
            }
        }
    }

    // Eve may forward over her own lossless line; background at Bob's
    // receiver is unchanged.
    let fiber;
    let channel_params: &ChannelParams = if lossless {
        fiber = ChannelParams {
            length_km: 0.0,
            ..cfg.channel.clone()
        };
        &fiber
    } else {
        &cfg.channel
    };
    let arrived =
        propagate(&pair, n_ref, n_sig, channel_params, &mut chan_rng).expect("validated config");

    let bob_phase = bob_phase(cfg, pulse, &mut bob_rng);
    let transmitted = TimeBinPulsePair {
        phase: arrived.phase,
        ..pair
    };
    let slots =
        slot_intensities(&transmitted, bob_phase, cfg.split_ratio_bob).expect("validated config");

    let n_arrived = arrived.n_ref + arrived.n_sig;
    let total = pair.total_mean_photons();
    let counts = if n_arrived == 0 {
        [0, 0, 0]
    } else {
        split_photons(
            n_arrived,
            [slots.t1 / total, slots.t2 / total, slots.t3 / total],
            &mut bob_rng,
        )
    };
    let clicks = ClickPattern {
        t1: detect_slot_photons(
            counts[0],
            arrived.background_mu,
            &cfg.detector,
            &mut bob_rng,
        ),
        t2: detect_slot_photons(
            counts[1],
            arrived.background_mu,
            &cfg.detector,
            &mut bob_rng,
        ),
        t3: detect_slot_photons(
            counts[2],
            arrived.background_mu,
            &cfg.detector,
            &mut bob_rng,
        ),
    };

    PulseRecord {
        index,
        alice_bit: bit,
        alice_phase,
        bob_phase,
        n_source,
        eve_stored,
        clicks,
        outcome: bob_measure(clicks, bob_phase),
    }
}
