//! End-to-end checks of the command-line surface: subcommands, seed
//! precedence, and the documented exit codes (0 success, 1 validation,
//! 2 I/O, 3 fixture mismatch).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qkd_sim::harness::{parse_stats_csv, SessionConfig, STATS_CSV_HEADER};

fn qkd_sim() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qkd-sim"));
    cmd.env_remove("QKD_SIM_SEED");
    cmd
}

fn write_config(dir: &Path, cfg: &SessionConfig) -> PathBuf {
    let path = dir.join("session.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn small_config() -> SessionConfig {
    SessionConfig {
        n_pulses: 2000,
        mu: 0.5,
        seed: 17,
        ..SessionConfig::default()
    }
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn run_prints_summary_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &small_config());
    let out_path = dir.path().join("stats.csv");

    let out = qkd_sim()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("sift rate:"), "{text}");
    assert!(text.contains("no-eve reference"), "{text}");

    let csv = std::fs::read_to_string(&out_path).unwrap();
    let rows = parse_stats_csv(&csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].seed, 17);
    assert_eq!(rows[0].stats.sent, 2000);
}

#[test]
fn invalid_config_exits_1_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SessionConfig {
        mu: -1.0,
        ..small_config()
    };
    let cfg_path = write_config(dir.path(), &cfg);

    let out = qkd_sim()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("mu"), "{}", stderr(&out));
}

#[test]
fn malformed_json_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("broken.json");
    std::fs::write(&cfg_path, "{ \"n_puleses\": 5 }").unwrap();

    let out = qkd_sim()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("n_puleses"), "{}", stderr(&out));
}

#[test]
fn missing_config_exits_2() {
    let out = qkd_sim()
        .args(["run", "--config", "/nonexistent/nope.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &small_config());
    let out = qkd_sim()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--out", "/nonexistent/dir/stats.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table1_selfcheck_exits_0_with_golden_output() {
    let out = qkd_sim().arg("table1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let click_column: Vec<&str> = text
        .lines()
        .skip(1)
        .take(8)
        .map(|line| line.split(',').nth(7).unwrap())
        .collect();
    assert_eq!(click_column, vec!["Y", "N", "Y", "N", "N", "N", "Y", "N"]);
    assert!(text.contains("sifted key: 011"));
    assert!(text.contains("positions: 1,3,7"));
}

#[test]
fn sweep_streams_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &small_config());
    let out = qkd_sim()
        .args(["sweep", "--config"])
        .arg(&cfg_path)
        .args([
            "--axis",
            "length_km",
            "--values",
            "0,25,50",
            "--trials",
            "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let rows = parse_stats_csv(&text).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(text.lines().next().unwrap(), STATS_CSV_HEADER);
    // rows ordered by (value, trial) with distinct derived seeds
    assert_eq!(rows[0].axis_value, Some(0.0));
    assert_eq!(rows[5].axis_value, Some(50.0));
    assert_ne!(rows[0].seed, rows[1].seed);
}

#[test]
fn sweep_rejects_unknown_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &small_config());
    let out = qkd_sim()
        .args(["sweep", "--config"])
        .arg(&cfg_path)
        .args(["--axis", "qber", "--values", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("length_km"), "{}", stderr(&out));
}

#[test]
fn seed_precedence_flag_beats_env_beats_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &small_config()); // config seed 17
    let out_path = dir.path().join("stats.csv");

    let seed_of = |extra_env: Option<u64>, flag: Option<u64>| -> u64 {
        let mut cmd = qkd_sim();
        cmd.args(["run", "--config"]).arg(&cfg_path);
        cmd.arg("--out").arg(&out_path);
        if let Some(env_seed) = extra_env {
            cmd.env("QKD_SIM_SEED", env_seed.to_string());
        }
        if let Some(seed) = flag {
            cmd.args(["--seed", &seed.to_string()]);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        let rows = parse_stats_csv(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
        rows[0].seed
    };

    assert_eq!(seed_of(None, None), 17);
    assert_eq!(seed_of(Some(99), None), 99);
    assert_eq!(seed_of(Some(99), Some(123)), 123);
}

#[test]
fn junk_env_seed_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &small_config());
    let out = qkd_sim()
        .env("QKD_SIM_SEED", "not-a-number")
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("QKD_SIM_SEED"), "{}", stderr(&out));
}

#[test]
fn records_csv_has_fixed_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), &small_config());
    let rec_path = dir.path().join("records.csv");
    let out = qkd_sim()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--records")
        .arg(&rec_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&rec_path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "index,alice_bit,alice_phase_deg,bob_phase_deg,n_source,eve_stored,click_t1,click,click_t3,bob_bit"
    );
    assert_eq!(text.lines().count(), 2001);
}
