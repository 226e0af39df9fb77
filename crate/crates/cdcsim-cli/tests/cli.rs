//! End-to-end checks of the binary: exit codes, flag/file/env precedence,
//! CSV schema stability, and byte-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn cdcsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cdcsim"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cdcsim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("tempdir");
    dir.join(name)
}

fn run_ok(args: &[&str]) -> Output {
    let out = cdcsim().args(args).output().expect("spawn cdcsim");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn integrity_csv_schema_is_pinned() {
    let csv = tmp("schema.csv");
    run_ok(&[
        "--scenario",
        "integrity",
        "--words",
        "2000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "design,tx_period_ps,rx_period_ps,seed,words,delivered,verdict,mean_latency_rx_cycles,metastable_events,clock_pauses,max_pause_ps"
    );
    // Golden row for the default config at a pinned seed and word count.
    let row = text.lines().nth(1).unwrap();
    assert!(
        row.starts_with("gray,1000,713,42,2000,2000,ok,"),
        "row was: {row}"
    );
}

#[test]
fn scenario_headers_are_stable() {
    let cases = [
        ("latency-compare", "design,tx_period_ps,rx_period_ps,seed,words,mean_latency_rx_cycles,ptr_round_trip_cycles"),
        ("throughput-sweep", "credit_pairs,ratio,tx_period_ps,rx_period_ps,seed,words,delivered,words_per_slow_cycle,verdict"),
        ("stari-skew", "skew_ps,slack_bound_ps,depth,period_ps,words,delivered,overflows,underflows"),
        ("negative-control", "design,tx_period_ps,rx_period_ps,seed,words,delivered,verdict,mean_latency_rx_cycles,metastable_events,clock_pauses,max_pause_ps"),
        ("gray-exhaustive", "width,values,roundtrip_failures,single_bit_failures,flag_oracle_failures"),
    ];
    for (scenario, expected_header) in cases {
        let csv = tmp(&format!("{scenario}.csv"));
        run_ok(&[
            "--scenario",
            scenario,
            "--words",
            "5000",
            "--out",
            csv.to_str().unwrap(),
        ]);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), expected_header, "{scenario}");
    }
}

#[test]
fn same_seed_means_byte_identical_csv() {
    let a = tmp("det-a.csv");
    let b = tmp("det-b.csv");
    for path in [&a, &b] {
        run_ok(&[
            "--scenario",
            "integrity",
            "--seed",
            "777",
            "--words",
            "5000",
            "--out",
            path.to_str().unwrap(),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn flag_overrides_file_overrides_env() {
    let cfg = tmp("seed.cfg");
    std::fs::write(&cfg, "[run]\nseed = 1111\nwords = 2000\n").unwrap();
    let csv = tmp("precedence.csv");

    // Flag wins over file and env.
    let out = cdcsim()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "2222",
            "--out",
            csv.to_str().unwrap(),
        ])
        .env("CDCSIM_SEED", "3333")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",2222,"), "{text}");

    // File wins over env.
    let out = cdcsim()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
        ])
        .env("CDCSIM_SEED", "3333")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",1111,"), "{text}");

    // Env used when neither flag nor file sets a seed.
    let out = cdcsim()
        .args(["--words", "2000", "--out", csv.to_str().unwrap()])
        .env("CDCSIM_SEED", "3333")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",3333,"), "{text}");
}

#[test]
fn exit_codes() {
    // 0: assertions pass (negative control passes when corruption observed).
    let csv = tmp("codes.csv");
    let ok = cdcsim()
        .args([
            "--scenario",
            "negative-control",
            "--words",
            "30000",
            "--out",
            csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&ok.stderr)
    );

    // 1: assertion failure (integrity on the unsafe design).
    let fail = cdcsim()
        .args([
            "--scenario",
            "integrity",
            "--design",
            "unsafe-binary",
            "--words",
            "30000",
            "--out",
            csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(1));

    // 2: config error, with a line-numbered message.
    let bad_cfg = tmp("bad.cfg");
    std::fs::write(&bad_cfg, "[fifo]\ndepth = 3\n").unwrap();
    let usage = cdcsim()
        .args(["--config", bad_cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&usage.stderr);
    assert!(
        stderr.contains("line 2") && stderr.contains("power of two"),
        "{stderr}"
    );

    // 2: unknown flag value (clap usage error).
    let usage = cdcsim().args(["--scenario", "nonsense"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn ratio_flag_sets_periods() {
    let csv = tmp("ratio.csv");
    run_ok(&[
        "--ratio",
        "900:450",
        "--words",
        "2000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(
        text.lines().nth(1).unwrap().starts_with("gray,900,450,"),
        "{text}"
    );
}
