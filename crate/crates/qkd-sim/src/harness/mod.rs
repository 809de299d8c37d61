//! Experiment orchestration: aggregate statistics, parameter sweeps over
//! distance or pulse energy, deterministic CSV reporting, and the built-in
//! eight-pulse truth-table fixture.

pub mod config;

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::protocol::{run_session, MeasureOutcome, PulseRecord};
pub use config::{validate, ConfigErrors, EveConfig, Mode, SessionConfig};

/// Aggregate counters for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionStats {
    pub sent: u64,
    pub clicks_t1: u64,
    pub clicks_t2: u64,
    pub clicks_t3: u64,
    /// Pulses where two or more slots clicked (diagnostic only; the middle
    /// slot still decides the outcome).
    pub double_clicks: u64,
    pub sifted_len: u64,
    pub sift_rate: f64,
    /// Absent when no bits were sifted — absence is not zero.
    pub qber: Option<f64>,
    /// Absent when no eavesdropper ran or no bits were sifted.
    pub eve_known_fraction: Option<f64>,
    /// Analytic t2 click rate expected with no eavesdropper and uniform
    /// random phase choices; the baseline for spotting Eve's footprint.
    pub bob_click_rate_no_eve_ref: f64,
}

impl SessionStats {
    pub fn collect(
        records: &[PulseRecord],
        qber: Option<f64>,
        eve_known_fraction: Option<f64>,
        bob_click_rate_no_eve_ref: f64,
    ) -> Self {
        let sent = records.len() as u64;
        let clicks_t1 = records.iter().filter(|r| r.clicks.t1).count() as u64;
        let clicks_t2 = records.iter().filter(|r| r.clicks.t2).count() as u64;
        let clicks_t3 = records.iter().filter(|r| r.clicks.t3).count() as u64;
        let double_clicks = records.iter().filter(|r| r.clicks.count() >= 2).count() as u64;
        Self {
            sent,
            clicks_t1,
            clicks_t2,
            clicks_t3,
            double_clicks,
            sifted_len: clicks_t2,
            sift_rate: clicks_t2 as f64 / sent as f64,
            qber,
            eve_known_fraction,
            bob_click_rate_no_eve_ref,
        }
    }

    /// Observed t2 click rate; with the sifting rule used here this equals
    /// the sift rate.
    pub fn observed_t2_click_rate(&self) -> f64 {
        self.sift_rate
    }
}

/// One line of a stats table: a session keyed by sweep coordinate and trial.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    /// The swept value; absent for a plain single run.
    pub axis_value: Option<f64>,
    pub trial: u32,
    pub seed: u64,
    pub stats: SessionStats,
}

/// Which config field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    LengthKm,
    Mu,
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::LengthKm => "length_km",
            SweepAxis::Mu => "mu",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length_km" => Ok(SweepAxis::LengthKm),
            "mu" => Ok(SweepAxis::Mu),
            other => Err(format!(
                "unknown sweep axis `{other}` (expected `length_km` or `mu`)"
            )),
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives the per-row seed for sweep point `value_index`, trial `trial`.
/// Distinct rows always get distinct seeds for a fixed base.
pub fn derive_seed(base_seed: u64, value_index: u64, trial: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64((value_index << 32) ^ trial))
}

/// Runs `trials` independent sessions per sweep value. Rows come back
/// ordered by (value index, trial) regardless of execution order; points
/// run in parallel since each is a pure function of its derived seed.
pub fn sweep(
    base: &SessionConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: u32,
) -> Result<Vec<StatsRow>, ConfigErrors> {
    let mut preflight = Vec::new();
    if values.is_empty() {
        preflight.push(config::ConfigViolation {
            key: "values".into(),
            constraint: "sweep needs at least one value".into(),
        });
    }
    if trials < 1 {
        preflight.push(config::ConfigViolation {
            key: "trials".into(),
            constraint: "must be at least 1".into(),
        });
    }
    if !preflight.is_empty() {
        return Err(ConfigErrors(preflight));
    }

    let jobs: Vec<(usize, f64, u32)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, v)| (0..trials).map(move |t| (i, *v, t)))
        .collect();

    jobs.par_iter()
        .map(|&(value_index, value, trial)| {
            let mut cfg = base.clone();
            match axis {
                SweepAxis::LengthKm => cfg.channel.length_km = value,
                SweepAxis::Mu => cfg.mu = value,
            }
            cfg.seed = derive_seed(base.seed, value_index as u64, trial as u64);
            let out = run_session(&cfg)?;
            Ok(StatsRow {
                axis_value: Some(value),
                trial,
                seed: cfg.seed,
                stats: out.stats,
            })
        })
        .collect()
}

/// Fixed column order of the stats CSV.
pub const STATS_CSV_HEADER: &str = "axis_value,trial,seed,sent,clicks_t1,clicks_t2,clicks_t3,\
double_clicks,sifted_len,sift_rate,qber,eve_known_fraction,bob_click_rate_no_eve_ref";

/// Formats a fraction as plain decimal with six significant digits, stably:
/// re-parsing and re-formatting the output reproduces it byte for byte.
pub fn format_fraction(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mut exponent = x.abs().log10().floor() as i32;
    loop {
        let decimals = (5 - exponent).max(0) as usize;
        let text = format!("{x:.decimals$}");
        let rounded: f64 = text.parse().expect("formatted float");
        // Rounding can carry into the next decade (0.0999999 -> "0.100000");
        // re-derive the width so the printed form is a fixed point.
        let new_exponent = if rounded == 0.0 {
            exponent
        } else {
            rounded.abs().log10().floor() as i32
        };
        if new_exponent == exponent {
            return text;
        }
        exponent = new_exponent;
    }
}

fn optional_fraction(x: Option<f64>) -> String {
    x.map(format_fraction).unwrap_or_default()
}

/// Renders stats rows as CSV with the fixed schema, bit-exact for a given
/// input table.
pub fn stats_csv(rows: &[StatsRow]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(STATS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let s = &row.stats;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            optional_fraction(row.axis_value),
            row.trial,
            row.seed,
            s.sent,
            s.clicks_t1,
            s.clicks_t2,
            s.clicks_t3,
            s.double_clicks,
            s.sifted_len,
            format_fraction(s.sift_rate),
            optional_fraction(s.qber),
            optional_fraction(s.eve_known_fraction),
            format_fraction(s.bob_click_rate_no_eve_ref),
        )
        .expect("writing to String cannot fail");
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("bad stats CSV header: expected `{STATS_CSV_HEADER}`, got `{0}`")]
    BadHeader(String),
    #[error("line {line}: expected 13 fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}, field `{field}`: cannot parse `{text}`")]
    BadField {
        line: usize,
        field: &'static str,
        text: String,
    },
}

/// Parses CSV produced by [`stats_csv`] back into rows.
pub fn parse_stats_csv(text: &str) -> Result<Vec<StatsRow>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != STATS_CSV_HEADER {
        return Err(CsvError::BadHeader(header.to_string()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(CsvError::FieldCount {
                line: line_no,
                got: fields.len(),
            });
        }
        let parse_f64 = |field: &'static str, text: &str| -> Result<f64, CsvError> {
            text.parse().map_err(|_| CsvError::BadField {
                line: line_no,
                field,
                text: text.to_string(),
            })
        };
        let parse_u64 = |field: &'static str, text: &str| -> Result<u64, CsvError> {
            text.parse().map_err(|_| CsvError::BadField {
                line: line_no,
                field,
                text: text.to_string(),
            })
        };
        let optional = |field: &'static str, text: &str| -> Result<Option<f64>, CsvError> {
            if text.is_empty() {
                Ok(None)
            } else {
                parse_f64(field, text).map(Some)
            }
        };

        rows.push(StatsRow {
            axis_value: optional("axis_value", fields[0])?,
            trial: parse_u64("trial", fields[1])? as u32,
            seed: parse_u64("seed", fields[2])?,
            stats: SessionStats {
                sent: parse_u64("sent", fields[3])?,
                clicks_t1: parse_u64("clicks_t1", fields[4])?,
                clicks_t2: parse_u64("clicks_t2", fields[5])?,
                clicks_t3: parse_u64("clicks_t3", fields[6])?,
                double_clicks: parse_u64("double_clicks", fields[7])?,
                sifted_len: parse_u64("sifted_len", fields[8])?,
                sift_rate: parse_f64("sift_rate", fields[9])?,
                qber: optional("qber", fields[10])?,
                eve_known_fraction: optional("eve_known_fraction", fields[11])?,
                bob_click_rate_no_eve_ref: parse_f64("bob_click_rate_no_eve_ref", fields[12])?,
            },
        });
    }
    Ok(rows)
}

/// Fixed column order of the per-pulse records CSV. `click` is the middle
/// (interference) slot — the only one the protocol reads.
pub const RECORDS_CSV_HEADER: &str =
    "index,alice_bit,alice_phase_deg,bob_phase_deg,n_source,eve_stored,click_t1,click,click_t3,bob_bit";

fn yn(b: bool) -> &'static str {
    if b {
        "Y"
    } else {
        "N"
    }
}

/// Renders the per-pulse ledger as CSV.
pub fn records_csv(records: &[PulseRecord]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(RECORDS_CSV_HEADER);
    out.push('\n');
    for r in records {
        let bob_bit = match r.outcome {
            MeasureOutcome::Conclusive(bit) => {
                if bit {
                    "1"
                } else {
                    "0"
                }
            }
            MeasureOutcome::Inconclusive => "",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.alice_bit as u8,
            r.alice_phase.degrees(),
            r.bob_phase.degrees(),
            r.n_source,
            r.eve_stored,
            yn(r.clicks.t1),
            yn(r.clicks.t2),
            yn(r.clicks.t3),
            bob_bit,
        )
        .expect("writing to String cannot fail");
    }
    out
}

/// Human-readable summary of one session.
pub fn human_summary(stats: &SessionStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pulses sent:          {}", stats.sent);
    let _ = writeln!(
        out,
        "clicks t1/t2/t3:      {}/{}/{}",
        stats.clicks_t1, stats.clicks_t2, stats.clicks_t3
    );
    let _ = writeln!(out, "double clicks:        {}", stats.double_clicks);
    let _ = writeln!(out, "sifted key length:    {}", stats.sifted_len);
    let _ = writeln!(
        out,
        "sift rate:            {}",
        format_fraction(stats.sift_rate)
    );
    let _ = writeln!(
        out,
        "qber:                 {}",
        stats
            .qber
            .map(format_fraction)
            .unwrap_or_else(|| "n/a (no sifted bits)".into())
    );
    let _ = writeln!(
        out,
        "eve known fraction:   {}",
        stats
            .eve_known_fraction
            .map(format_fraction)
            .unwrap_or_else(|| "n/a".into())
    );
    let _ = writeln!(
        out,
        "bob t2 click rate:    {} observed vs {} no-eve reference",
        format_fraction(stats.observed_t2_click_rate()),
        format_fraction(stats.bob_click_rate_no_eve_ref)
    );
    out
}

/// Alice's bits for the built-in eight-pulse fixture.
pub const TABLE1_ALICE_BITS: [u8; 8] = [0, 1, 1, 1, 0, 0, 1, 1];
/// Bob's basis phases (degrees) for the fixture.
pub const TABLE1_BOB_PHASES_DEG: [f64; 8] = [0.0, 0.0, 180.0, 0.0, 180.0, 180.0, 180.0, 0.0];
/// Expected middle-slot clicks: Y,N,Y,N,N,N,Y,N.
pub const TABLE1_EXPECTED_CLICKS: [bool; 8] = [true, false, true, false, false, false, true, false];
/// Expected sifted key.
pub const TABLE1_EXPECTED_KEY: &str = "011";
/// Expected sifted positions (pulse numbering starts at 1).
pub const TABLE1_EXPECTED_POSITIONS: [u64; 3] = [1, 3, 7];

/// The eight-pulse textbook replay: known bits and bases, deterministic
/// single-photon optics.
pub fn table1_config() -> SessionConfig {
    SessionConfig {
        n_pulses: 8,
        mode: Mode::Textbook,
        fixture_bits: Some(TABLE1_ALICE_BITS.to_vec()),
        fixture_phases: Some(TABLE1_BOB_PHASES_DEG.to_vec()),
        ..SessionConfig::default()
    }
}
