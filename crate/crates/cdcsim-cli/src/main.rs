//! `cdcsim` — deterministic clock-domain-crossing FIFO simulator.
//!
//! Runs a named scenario against a configuration assembled from built-in
//! defaults, an optional config file, the `CDCSIM_SEED` environment
//! variable, and command-line flags — in that order of increasing
//! precedence. Writes one CSV table per run plus a human summary.
//!
//! Exit codes: 0 all scenario assertions passed, 1 assertion failure or
//! I/O error, 2 usage or configuration error.

mod config;
mod csv;
mod scenarios;

use std::path::PathBuf;

use clap::Parser;

use cdcsim::harness::{EndpointPolicy, ExperimentConfig, StressConfig};
use cdcsim::kernel::ClockDomain;
use scenarios::Scenario;

#[derive(Parser, Debug)]
#[command(
    name = "cdcsim",
    version,
    about = "Deterministic simulator and verification harness for clock-domain-crossing FIFOs",
    after_help = "\
SCENARIOS:
  integrity        one run of the configured design; asserts lossless ordered delivery
  latency-compare  pausible vs gray at matched clocks; asserts pausible is faster
  throughput-sweep pausible words/slow-cycle across tx:rx ratios 1:1..2:1
  stari-skew       elastic-buffer skew tolerance up to its slack bound
  negative-control binary-pointer baseline; passes when corruption IS observed
  gray-exhaustive  exhaustive Gray-code checks for pointer widths 2..=16

CONFIG FILE:
  Plain key=value with [fifo], [tx_clock], [rx_clock], [run], [stress]
  sections; unknown keys are rejected with line numbers. Flags override the
  file; the file overrides CDCSIM_SEED; defaults fill the rest.

DEFAULTS:
  gray FIFO, depth 16, 2 sync stages, 2 credit pairs; transmit 1000ps,
  receive 713ps (phase 237ps); 100000 words; saturating endpoints;
  metastability on with violation rate 1.0; seed 42."
)]
struct Args {
    /// Scenario to run.
    #[arg(long, default_value = "integrity")]
    scenario: Scenario,

    /// Configuration file (key=value sections; see --help).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Random seed (overrides config file and CDCSIM_SEED).
    #[arg(long)]
    seed: Option<u64>,

    /// Number of words to stream.
    #[arg(long)]
    words: Option<u64>,

    /// Transmit:receive clock periods in picoseconds, e.g. 1000:713.
    #[arg(long, value_parser = parse_ratio)]
    ratio: Option<(u64, u64)>,

    /// FIFO design (gray|pausible|selftimed|elastic|unsafe-binary).
    #[arg(long)]
    design: Option<cdcsim::fifos::FifoDesign>,

    /// CSV output path (default: cdcsim-<scenario>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_ratio(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| "expected TX:RX, e.g. 1000:713".to_string())?;
    let tx: u64 = a.trim().parse().map_err(|e| format!("tx period: {e}"))?;
    let rx: u64 = b.trim().parse().map_err(|e| format!("rx period: {e}"))?;
    if tx == 0 || rx == 0 {
        return Err("periods must be positive".into());
    }
    Ok((tx, rx))
}

/// Built-in defaults the config file and flags refine.
fn cli_defaults() -> ExperimentConfig {
    ExperimentConfig {
        tx_clock: ClockDomain::new(0, 1000),
        rx_clock: ClockDomain::new(1, 713).with_phase(237),
        seed: 42,
        n_words: 100_000,
        producer: EndpointPolicy::Saturating,
        consumer: EndpointPolicy::Saturating,
        stress: StressConfig {
            metastability: true,
            violation_rate: 1.0,
        },
        ..ExperimentConfig::default()
    }
}

fn effective_config(args: &Args) -> Result<ExperimentConfig, String> {
    let mut cfg = cli_defaults();
    let mut seed_from_file = false;
    if let Some(path) = &args.config {
        let (parsed, seed_set) =
            config::parse_config_file(path, cfg).map_err(|e| format!("config: {e}"))?;
        cfg = parsed;
        seed_from_file = seed_set;
    }
    // Seed precedence: flag > file > environment > default.
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    } else if !seed_from_file {
        if let Ok(env_seed) = std::env::var("CDCSIM_SEED") {
            cfg.seed = env_seed
                .trim()
                .parse()
                .map_err(|e| format!("CDCSIM_SEED: {e}"))?;
        }
    }
    if let Some(words) = args.words {
        cfg.n_words = words;
    }
    if let Some((tx, rx)) = args.ratio {
        cfg.tx_clock.nominal_period = tx;
        cfg.rx_clock.nominal_period = rx;
        cfg.tx_clock.phase_offset = cfg.tx_clock.phase_offset.min(tx - 1);
        cfg.rx_clock.phase_offset = cfg.rx_clock.phase_offset.min(rx - 1);
    }
    if let Some(design) = args.design {
        cfg.fifo.design = design;
    }
    Ok(cfg)
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let args = Args::parse();
    let cfg = match effective_config(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("cdcsim: {msg}");
            return 2;
        }
    };
    if let Err(e) = cfg.validate() {
        eprintln!("cdcsim: {e}");
        return 2;
    }

    let outcome = match scenarios::run_scenario(args.scenario, &cfg) {
        Ok(outcome) => outcome,
        Err(cdcsim::harness::RunError::Config(msg)) => {
            eprintln!("cdcsim: {msg}");
            return 2;
        }
        Err(e) => {
            eprintln!("cdcsim: {e}");
            return 1;
        }
    };

    let out_path = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("cdcsim-{}.csv", args.scenario.name())));
    if let Err(e) = std::fs::write(&out_path, outcome.table.render()) {
        eprintln!("cdcsim: writing {}: {e}", out_path.display());
        return 1;
    }

    for line in &outcome.summary {
        println!("{line}");
    }
    println!(
        "scenario {}: {} (csv: {})",
        args.scenario.name(),
        if outcome.pass { "PASS" } else { "FAIL" },
        out_path.display()
    );
    if outcome.pass {
        0
    } else {
        1
    }
}
