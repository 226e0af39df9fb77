//! Plain key=value configuration files with `[section]` headers.
//!
//! The format is deliberately trivial — any language can parse it — and
//! strict: unknown sections or keys are errors, with line numbers, so a
//! typo cannot silently fall back to a default.
//!
//! ```text
//! [fifo]
//! design = gray          # gray|pausible|selftimed|elastic|unsafe-binary
//! depth = 16             # power of two
//! word_width = 32
//! sync_stages = 2
//! credit_pairs = 2
//!
//! [tx_clock]
//! period_ps = 1000
//! phase_ps = 0
//! jitter_ps = 0
//! drift_ppm = 0
//!
//! [rx_clock]
//! period_ps = 713
//!
//! [run]
//! seed = 42
//! words = 100000
//! producer = saturating  # or duty:0.75
//! consumer = saturating
//!
//! [stress]
//! metastability = on
//! violation_rate = 0.0
//! ```

use std::fmt;
use std::path::Path;

use cdcsim::harness::{EndpointPolicy, ExperimentConfig};

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn whole_file(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.parse()
        .map_err(|e| ConfigError::at(line, format!("{key}: {e}")))
}

fn parse_policy(line: usize, raw: &str) -> Result<EndpointPolicy, ConfigError> {
    if raw == "saturating" {
        return Ok(EndpointPolicy::Saturating);
    }
    if let Some(rest) = raw.strip_prefix("duty:") {
        let p: f64 = parse_value(line, "duty", rest)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ConfigError::at(
                line,
                format!("duty cycle {p} outside [0,1]"),
            ));
        }
        return Ok(EndpointPolicy::Duty(p));
    }
    Err(ConfigError::at(
        line,
        format!("expected 'saturating' or 'duty:<p>', got '{raw}'"),
    ))
}

fn parse_switch(line: usize, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(ConfigError::at(
            line,
            format!("expected on/off, got '{other}'"),
        )),
    }
}

/// Parses `text` over the given defaults. Returns the updated config and
/// whether the file set an explicit seed (flag/env precedence needs to
/// know).
pub fn parse_config_text(
    text: &str,
    mut cfg: ExperimentConfig,
) -> Result<(ExperimentConfig, bool), ConfigError> {
    let mut section: Option<&str> = None;
    let mut seed_set = false;
    let mut tx_phase_set = false;
    let mut rx_phase_set = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?;
            section = Some(match name {
                "fifo" => "fifo",
                "tx_clock" => "tx_clock",
                "rx_clock" => "rx_clock",
                "run" => "run",
                "stress" => "stress",
                other => return Err(ConfigError::at(line, format!("unknown section [{other}]"))),
            });
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        let section =
            section.ok_or_else(|| ConfigError::at(line, "key before any [section] header"))?;
        match (section, key) {
            ("fifo", "design") => cfg.fifo.design = parse_value(line, "design", value)?,
            ("fifo", "depth") => {
                cfg.fifo.depth = parse_value(line, "depth", value)?;
                if !cfg.fifo.depth.is_power_of_two() || cfg.fifo.depth < 2 {
                    return Err(ConfigError::at(
                        line,
                        format!("depth must be a power of two >= 2, got {}", cfg.fifo.depth),
                    ));
                }
            }
            ("fifo", "word_width") => cfg.fifo.word_width = parse_value(line, "word_width", value)?,
            ("fifo", "sync_stages") => {
                cfg.fifo.sync_stages = parse_value(line, "sync_stages", value)?
            }
            ("fifo", "credit_pairs") => {
                cfg.fifo.credit_pairs = parse_value(line, "credit_pairs", value)?
            }
            ("fifo", "wire_skew_step_ps") => {
                cfg.fifo.wire_skew_step = parse_value(line, "wire_skew_step_ps", value)?
            }
            ("tx_clock" | "rx_clock", _) => {
                let clock = if section == "tx_clock" {
                    &mut cfg.tx_clock
                } else {
                    &mut cfg.rx_clock
                };
                match key {
                    "period_ps" => clock.nominal_period = parse_value(line, "period_ps", value)?,
                    "phase_ps" => {
                        clock.phase_offset = parse_value(line, "phase_ps", value)?;
                        if section == "tx_clock" {
                            tx_phase_set = true;
                        } else {
                            rx_phase_set = true;
                        }
                    }
                    "jitter_ps" => clock.jitter_halfwidth = parse_value(line, "jitter_ps", value)?,
                    "drift_ppm" => clock.drift_ppm = parse_value(line, "drift_ppm", value)?,
                    other => {
                        return Err(ConfigError::at(
                            line,
                            format!("unknown key '{other}' in [{section}]"),
                        ))
                    }
                }
            }
            ("run", "seed") => {
                cfg.seed = parse_value(line, "seed", value)?;
                seed_set = true;
            }
            ("run", "words") => cfg.n_words = parse_value(line, "words", value)?,
            ("run", "producer") => cfg.producer = parse_policy(line, value)?,
            ("run", "consumer") => cfg.consumer = parse_policy(line, value)?,
            ("run", "watchdog_idle_edges") => {
                cfg.watchdog_idle_edges = parse_value(line, "watchdog_idle_edges", value)?
            }
            ("stress", "metastability") => cfg.stress.metastability = parse_switch(line, value)?,
            ("stress", "violation_rate") => {
                cfg.stress.violation_rate = parse_value(line, "violation_rate", value)?;
                if !(0.0..=1.0).contains(&cfg.stress.violation_rate) {
                    return Err(ConfigError::at(line, "violation_rate outside [0,1]"));
                }
            }
            (section, key) => {
                return Err(ConfigError::at(
                    line,
                    format!("unknown key '{key}' in [{section}]"),
                ))
            }
        }
    }
    // Default phases adapt to a file-set period; explicit phases must be
    // canonical on their own.
    if !tx_phase_set && cfg.tx_clock.nominal_period > 0 {
        cfg.tx_clock.phase_offset %= cfg.tx_clock.nominal_period;
    }
    if !rx_phase_set && cfg.rx_clock.nominal_period > 0 {
        cfg.rx_clock.phase_offset %= cfg.rx_clock.nominal_period;
    }
    for clock in [&cfg.tx_clock, &cfg.rx_clock] {
        clock
            .validate_canonical()
            .map_err(|e| ConfigError::whole_file(e.to_string()))?;
    }
    cfg.fifo
        .validate()
        .map_err(|e| ConfigError::whole_file(e.to_string()))?;
    Ok((cfg, seed_set))
}

pub fn parse_config_file(
    path: &Path,
    defaults: ExperimentConfig,
) -> Result<(ExperimentConfig, bool), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::whole_file(format!("{}: {e}", path.display())))?;
    parse_config_text(&text, defaults)
}
