//! Experiment runner: drives a producer and consumer against one FIFO
//! machine, injects metastability stress, checks the safety invariants
//! cycle by cycle, and measures latency and throughput.
//!
//! A run is deterministic given its configuration: same config and seed,
//! same verdict, same metrics, same trace hash. Translating both clock
//! phases by a common constant changes none of it — the protocol logic only
//! ever sees edge identities.

mod metrics;
mod scoreboard;

pub use metrics::Metrics;
pub use scoreboard::{Scoreboard, SentRecord, Verdict};

use std::collections::VecDeque;

use thiserror::Error;

use crate::elements::{EdgeCtx, FireOutcome, MetaPolicy, PausibleClock, SimEnv};
use crate::fifos::{CycleFifo, FifoConfig, FifoDesign, FifoError, FifoMachine, PortSide, Word};
use crate::kernel::{ClockDomain, ClockSource, EventKind, KernelError, SimTime, Simulator};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(
        "strict metastability policy tripped: unresolved escape at a final synchronizer stage"
    )]
    StrictMetastability,
}

impl From<FifoError> for RunError {
    fn from(e: FifoError) -> Self {
        RunError::Config(e.to_string())
    }
}

/// What an endpoint does at each of its clock edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EndpointPolicy {
    /// Offer (or poll) at every edge.
    Saturating,
    /// Offer (or poll) with the given per-edge probability.
    Duty(f64),
}

impl EndpointPolicy {
    fn active(&self, env: &mut SimEnv) -> bool {
        match *self {
            EndpointPolicy::Saturating => true,
            EndpointPolicy::Duty(p) => env.rng.unit_f64() < p,
        }
    }
}

/// Metastability stress knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressConfig {
    /// Model metastability at all. Off means ideal sampling.
    pub metastability: bool,
    /// Fraction of cross-domain transitions forced into sampling windows.
    pub violation_rate: f64,
}

impl Default for StressConfig {
    fn default() -> Self {
        StressConfig {
            metastability: true,
            violation_rate: 0.0,
        }
    }
}

/// One reproducible simulation run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub fifo: FifoConfig,
    pub tx_clock: ClockDomain,
    pub rx_clock: ClockDomain,
    pub seed: u64,
    pub n_words: u64,
    pub producer: EndpointPolicy,
    pub consumer: EndpointPolicy,
    pub stress: StressConfig,
    pub meta_policy: MetaPolicy,
    /// Consumer edges without a delivery before the run is declared stalled.
    pub watchdog_idle_edges: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            fifo: FifoConfig::default(),
            tx_clock: ClockDomain::new(0, 1000),
            rx_clock: ClockDomain::new(1, 1000).with_phase(500),
            seed: 42,
            n_words: 10_000,
            producer: EndpointPolicy::Saturating,
            consumer: EndpointPolicy::Saturating,
            stress: StressConfig::default(),
            meta_policy: MetaPolicy::Realistic,
            watchdog_idle_edges: 50_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        self.fifo.validate()?;
        self.tx_clock.validate()?;
        self.rx_clock.validate()?;
        if self.n_words == 0 {
            return Err(RunError::Config("n_words must be >= 1".into()));
        }
        if self.fifo.word_width < 63 && self.n_words > 1u64 << self.fifo.word_width {
            return Err(RunError::Config(format!(
                "n_words {} does not fit in word_width {} (sequence numbers would alias)",
                self.n_words, self.fifo.word_width
            )));
        }
        for policy in [&self.producer, &self.consumer] {
            if let EndpointPolicy::Duty(p) = policy {
                if !(0.0..=1.0).contains(p) {
                    return Err(RunError::Config(format!("duty cycle {p} outside [0,1]")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.stress.violation_rate) {
            return Err(RunError::Config("violation rate outside [0,1]".into()));
        }
        // Shortest edge-to-edge interval either domain can produce.
        let min_interval = [self.tx_clock, self.rx_clock]
            .iter()
            .map(|c| c.nominal_period - 2 * c.jitter_halfwidth)
            .min()
            .expect("two clocks");
        let t = &self.fifo.timings;
        if t.setup + t.clk_to_q >= min_interval {
            // A same-domain flop-to-flop transfer would violate setup: the
            // design does not close timing at this clock, so the run would
            // measure a broken pipeline, not a broken protocol.
            return Err(RunError::Config(format!(
                "setup + clk_to_q ({}) must fit in the shortest clock interval ({min_interval}ps)",
                t.setup + t.clk_to_q
            )));
        }
        if t.setup + t.hold >= min_interval {
            return Err(RunError::Config(
                "setup + hold must fit in the shortest clock interval".into(),
            ));
        }
        if matches!(
            self.fifo.design,
            FifoDesign::Gray | FifoDesign::UnsafeBinary
        ) {
            let spread = (self.fifo.pointer_width() as u64 - 1) * self.fifo.wire_skew_step;
            if t.clk_to_q + spread >= min_interval {
                return Err(RunError::Config(
                    "pointer-bus skew spread plus clk_to_q must fit in the shortest clock interval"
                        .into(),
                ));
            }
        }
        if self.watchdog_idle_edges == 0 {
            return Err(RunError::Config("watchdog ceiling must be > 0".into()));
        }
        Ok(())
    }

    /// The same experiment with both clock phases shifted `delta_ps` later.
    /// Behaviour must be identical; only absolute times move.
    pub fn translated(&self, delta_ps: u64) -> ExperimentConfig {
        let mut cfg = self.clone();
        cfg.tx_clock = cfg.tx_clock.translated(delta_ps);
        cfg.rx_clock = cfg.rx_clock.translated(delta_ps);
        cfg
    }
}

/// Forces the given fraction of cross-domain transitions into setup/hold
/// windows. Rate zero leaves the run bit-identical to an unstressed one.
pub fn inject_violation(cfg: &mut ExperimentConfig, rate: f64) {
    cfg.stress.violation_rate = rate;
    if rate > 0.0 {
        cfg.stress.metastability = true;
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub verdict: Verdict,
    pub trace_hash: u64,
    /// Delivered sequence numbers, for translation-invariance checks.
    pub received_seqs: Vec<u64>,
}

#[derive(Clone, Copy, Debug)]
enum Ev {
    Tx,
    Rx,
    Ripple(u32),
}

impl EventKind for Ev {
    fn label(&self) -> &'static str {
        match self {
            Ev::Tx => "tx-edge",
            Ev::Rx => "rx-edge",
            Ev::Ripple(_) => "ripple",
        }
    }
}

enum EdgeSource {
    Fixed(ClockSource),
    Pausible(PausibleClock),
}

impl EdgeSource {
    fn next_time(&self) -> SimTime {
        match self {
            EdgeSource::Fixed(s) => s.next_time(),
            EdgeSource::Pausible(p) => p.next_time(),
        }
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    env: SimEnv,
    fifo: FifoMachine,
    tx_src: EdgeSource,
    rx_src: EdgeSource,
    scoreboard: Scoreboard,
    metrics: Metrics,
    next_seq: u64,
    depth: u64,
    slow_is_rx: bool,
    done: bool,
    stalled: bool,
    idle_rx_edges: u64,
    // Staleness oracle: a synced pointer view must trail the true pointer
    // by at most the increments that fit in the synchronizer latency.
    ptr_mask: Option<u64>,
    lag_bound_at_writer: u64,
    lag_bound_at_reader: u64,
    // Pointer round-trip measurement (Gray design only): forward leg is the
    // word's delivery latency in rx cycles, return leg counts tx edges until
    // the writer's synced view covers the read.
    track_round_trip: bool,
    pending_round_trip: VecDeque<RoundTripProbe>,
    last_synced_rptr_masked: u64,
    synced_rptr_unwrapped: u64,
}

struct RoundTripProbe {
    /// Free-running read count the writer's synced view must reach.
    target_rptr: u64,
    forward_rx_cycles: u64,
    tx_edges_at_read: u64,
}

/// Increments the opposing pointer can make while one value crosses an
/// `n_stages` synchronizer into a domain of period `dst_period`: the view's
/// age is at most `(n_stages + 1)` destination cycles, during which the
/// source takes an edge every `src_period`. Jitter can stretch the window
/// by up to a quarter period per edge and compress source intervals the
/// same way, hence the 5/3 factor. Capped at the modular space, beyond
/// which the masked comparison cannot distinguish lag from wrap.
fn staleness_lag_bound(n_stages: usize, dst_period: u64, src_period: u64, mask: u64) -> u64 {
    let window = (n_stages as u64 + 1) * dst_period * 5;
    let increments = window.div_ceil(3 * src_period) + 3;
    increments.min(mask)
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self, RunError> {
        cfg.validate()?;
        // Domain ids are assigned here so per-edge jitter streams are
        // independent regardless of what the caller put in the config.
        let mut tx_clock = cfg.tx_clock;
        tx_clock.id = 0;
        let mut rx_clock = cfg.rx_clock;
        rx_clock.id = 1;

        let mut env = SimEnv::new(cfg.seed);
        env.meta_enabled = cfg.stress.metastability;
        env.stress_rate = cfg.stress.violation_rate;
        env.policy = cfg.meta_policy;

        let fifo = FifoMachine::build(&cfg.fifo)?;
        let (tx_src, rx_src) = if cfg.fifo.design == FifoDesign::Pausible {
            (
                EdgeSource::Pausible(PausibleClock::new(
                    tx_clock,
                    cfg.seed,
                    cfg.fifo.timings,
                    cfg.fifo.mutex,
                )),
                EdgeSource::Pausible(PausibleClock::new(
                    rx_clock,
                    cfg.seed,
                    cfg.fifo.timings,
                    cfg.fifo.mutex,
                )),
            )
        } else {
            (
                EdgeSource::Fixed(ClockSource::new(tx_clock, cfg.seed)),
                EdgeSource::Fixed(ClockSource::new(rx_clock, cfg.seed)),
            )
        };

        let dual_clock = matches!(cfg.fifo.design, FifoDesign::Gray | FifoDesign::UnsafeBinary);
        let ptr_mask = dual_clock.then(|| (1u64 << cfg.fifo.pointer_width()) - 1);
        let mask = ptr_mask.unwrap_or(0);
        let stages = cfg.fifo.sync_stages;

        Ok(Run {
            cfg,
            env,
            fifo,
            tx_src,
            rx_src,
            scoreboard: Scoreboard::new(),
            metrics: Metrics::default(),
            next_seq: 0,
            depth: cfg.fifo.depth,
            slow_is_rx: rx_clock.nominal_period >= tx_clock.nominal_period,
            done: false,
            stalled: false,
            idle_rx_edges: 0,
            ptr_mask,
            lag_bound_at_writer: staleness_lag_bound(
                stages,
                tx_clock.nominal_period,
                rx_clock.nominal_period,
                mask,
            ),
            lag_bound_at_reader: staleness_lag_bound(
                stages,
                rx_clock.nominal_period,
                tx_clock.nominal_period,
                mask,
            ),
            track_round_trip: cfg.fifo.design == FifoDesign::Gray,
            pending_round_trip: VecDeque::new(),
            last_synced_rptr_masked: 0,
            synced_rptr_unwrapped: 0,
        })
    }

    fn drain_internal(&mut self, sim: &mut Simulator<Ev>, now: SimTime) -> Result<(), KernelError> {
        for (delay, tag) in self.fifo.take_internal() {
            sim.schedule(now.offset(delay), Ev::Ripple(tag))?;
        }
        Ok(())
    }

    /// Fires or pauses the pending edge of one side; pausible sources check
    /// their incoming toggle link for guard contention.
    fn fire(
        &mut self,
        sim: &mut Simulator<Ev>,
        side: PortSide,
    ) -> Result<Option<(u64, SimTime)>, KernelError> {
        let (src, ev) = match side {
            PortSide::Write => (&mut self.tx_src, Ev::Tx),
            PortSide::Read => (&mut self.rx_src, Ev::Rx),
        };
        match src {
            EdgeSource::Fixed(s) => Ok(Some(s.advance())),
            EdgeSource::Pausible(p) => {
                let link = self
                    .fifo
                    .incoming_link(side)
                    .expect("pausible design has links");
                match p.try_fire(link, &mut self.env) {
                    FireOutcome::Fire { index, time } => Ok(Some((index, time))),
                    FireOutcome::Pause { retry_at, .. } => {
                        sim.schedule(retry_at, ev)?;
                        Ok(None)
                    }
                }
            }
        }
    }

    fn on_tx_edge(&mut self, sim: &mut Simulator<Ev>) -> Result<(), KernelError> {
        let Some((index, time)) = self.fire(sim, PortSide::Write)? else {
            return Ok(());
        };
        self.metrics.tx_edges += 1;

        let offer = if self.next_seq < self.cfg.n_words && self.cfg.producer.active(&mut self.env) {
            Some(Word(self.next_seq))
        } else {
            None
        };
        let occ_before = self.fifo.probe().occupancy;
        let mut ctx = EdgeCtx::new(0, index, time, &mut self.env);
        let out = self.fifo.write_cycle(offer, &mut ctx);
        if out.accepted {
            self.scoreboard.record_sent(
                self.next_seq,
                self.metrics.tx_edges,
                self.metrics.rx_edges,
            );
            self.next_seq += 1;
        }

        // Conservative-flag check: a deasserted full flag must mean room.
        if !out.full && occ_before >= self.depth {
            self.metrics.conservatism_violations += 1;
        }
        let probe = self.fifo.probe();
        if let (Some(mask), Some(synced)) = (self.ptr_mask, probe.synced_rptr_at_writer) {
            // Staleness: the synced view must be equal to or behind the true
            // read pointer in modular order, within the sync-latency lag
            // bound. Anything further off is a fabricated value.
            let lag = (probe.rptr & mask).wrapping_sub(synced) & mask;
            if lag > self.lag_bound_at_writer {
                self.metrics.staleness_violations += 1;
            }
            if self.track_round_trip {
                let delta = synced.wrapping_sub(self.last_synced_rptr_masked) & mask;
                self.last_synced_rptr_masked = synced;
                self.synced_rptr_unwrapped += delta;
                while let Some(probe) = self.pending_round_trip.front() {
                    if self.synced_rptr_unwrapped >= probe.target_rptr {
                        let return_leg = self.metrics.tx_edges - probe.tx_edges_at_read;
                        self.metrics.ptr_round_trip_sum_tx_cycles +=
                            probe.forward_rx_cycles + return_leg;
                        self.metrics.ptr_round_trip_samples += 1;
                        self.pending_round_trip.pop_front();
                    } else {
                        break;
                    }
                }
            }
        }
        if let (Some(w_est), Some(r_est)) = (probe.writer_rptr_estimate, probe.reader_wptr_estimate)
        {
            if w_est > probe.rptr || r_est > probe.wptr {
                self.metrics.estimate_violations += 1;
            }
        }

        self.drain_internal(sim, time)?;
        if !self.done {
            sim.schedule(self.tx_src.next_time(), Ev::Tx)?;
        }
        Ok(())
    }

    fn on_rx_edge(&mut self, sim: &mut Simulator<Ev>) -> Result<(), KernelError> {
        let Some((index, time)) = self.fire(sim, PortSide::Read)? else {
            return Ok(());
        };
        self.metrics.rx_edges += 1;

        {
            let take = self.cfg.consumer.active(&mut self.env);
            let occ_before = self.fifo.probe().occupancy;
            let mut ctx = EdgeCtx::new(1, index, time, &mut self.env);
            let out = self.fifo.read_cycle(take, &mut ctx);
            if !out.empty && occ_before == 0 {
                self.metrics.conservatism_violations += 1;
            }
            let probe = self.fifo.probe();
            if let (Some(mask), Some(synced)) = (self.ptr_mask, probe.synced_wptr_at_reader) {
                let lag = (probe.wptr & mask).wrapping_sub(synced) & mask;
                if lag > self.lag_bound_at_reader {
                    self.metrics.staleness_violations += 1;
                }
            }
            if let (Some(w_est), Some(r_est)) =
                (probe.writer_rptr_estimate, probe.reader_wptr_estimate)
            {
                if w_est > probe.rptr || r_est > probe.wptr {
                    self.metrics.estimate_violations += 1;
                }
            }
            if let Some(word) = out.word {
                self.scoreboard.record_received(word.0);
                self.metrics.delivered += 1;
                self.idle_rx_edges = 0;
                if let Some(rec) = self.scoreboard.sent_record(word.0) {
                    let forward = self.metrics.rx_edges - rec.commit_rx_edge;
                    self.metrics.record_latency(forward);
                    if self.track_round_trip {
                        self.pending_round_trip.push_back(RoundTripProbe {
                            target_rptr: probe.rptr,
                            forward_rx_cycles: forward,
                            tx_edges_at_read: self.metrics.tx_edges,
                        });
                    }
                }
                let slow_edge = if self.slow_is_rx {
                    self.metrics.rx_edges
                } else {
                    self.metrics.tx_edges
                };
                if self.metrics.first_delivery_slow_edge.is_none() {
                    self.metrics.first_delivery_slow_edge = Some(slow_edge);
                }
                self.metrics.last_delivery_slow_edge = Some(slow_edge);
                if self.scoreboard.received_count() >= self.cfg.n_words {
                    self.done = true;
                }
            } else {
                self.idle_rx_edges += 1;
            }
        }

        if self.idle_rx_edges > self.cfg.watchdog_idle_edges {
            self.stalled = true;
            self.done = true;
        }

        self.drain_internal(sim, time)?;
        if !self.done {
            sim.schedule(self.rx_src.next_time(), Ev::Rx)?;
        }
        Ok(())
    }

    fn on_ripple(
        &mut self,
        sim: &mut Simulator<Ev>,
        tag: u32,
        time: SimTime,
    ) -> Result<(), KernelError> {
        let mut ctx = EdgeCtx::new(2, 0, time, &mut self.env);
        self.fifo.handle_internal(tag, &mut ctx);
        self.drain_internal(sim, time)
    }
}

/// Runs one experiment to completion (all words delivered, or the watchdog
/// declares a stall) and scores it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let mut run = Run::new(cfg)?;
    let mut sim = Simulator::<Ev>::new();
    sim.schedule(run.tx_src.next_time(), Ev::Tx)?;
    sim.schedule(run.rx_src.next_time(), Ev::Rx)?;

    let stats = sim.run_until(SimTime::MAX, |sim, ev| {
        let r = match ev.kind {
            Ev::Tx => run.on_tx_edge(sim),
            Ev::Rx => run.on_rx_edge(sim),
            Ev::Ripple(tag) => run.on_ripple(sim, tag, ev.time),
        };
        if run.env.counters.strict_violation {
            run.done = true;
        }
        r
    })?;

    if run.env.counters.strict_violation {
        return Err(RunError::StrictMetastability);
    }

    let mut metrics = run.metrics;
    metrics.metastable_events = run.env.counters.metastable_created;
    metrics.sync_escapes = run.env.counters.sync_escapes;
    metrics.forced_violations = run.env.counters.forced_violations;
    metrics.clock_pauses = run.env.counters.clock_pauses;
    metrics.max_pause_ps = run.env.counters.max_pause_ps;

    let residual = run.fifo.probe().occupancy;
    let verdict = run.scoreboard.verdict(run.stalled, residual);
    Ok(RunOutput {
        metrics,
        verdict,
        trace_hash: stats.trace_hash,
        received_seqs: run.scoreboard.received_seqs().to_vec(),
    })
}

/// Side-by-side latency of two configurations that differ only in design.
#[derive(Clone, Debug)]
pub struct LatencyComparison {
    pub design_a: FifoDesign,
    pub design_b: FifoDesign,
    pub mean_a_rx_cycles: f64,
    pub mean_b_rx_cycles: f64,
    pub round_trip_a_tx_cycles: Option<f64>,
    pub round_trip_b_tx_cycles: Option<f64>,
    pub a_below_b: bool,
}

pub fn latency_compare(
    a: &ExperimentConfig,
    b: &ExperimentConfig,
) -> Result<LatencyComparison, RunError> {
    if a.seed != b.seed
        || a.n_words != b.n_words
        || a.tx_clock != b.tx_clock
        || a.rx_clock != b.rx_clock
    {
        return Err(RunError::Config(
            "latency comparison requires matched clocks, seed, and load".into(),
        ));
    }
    let out_a = run_experiment(a)?;
    let out_b = run_experiment(b)?;
    Ok(LatencyComparison {
        design_a: a.fifo.design,
        design_b: b.fifo.design,
        mean_a_rx_cycles: out_a.metrics.mean_latency_rx_cycles(),
        mean_b_rx_cycles: out_b.metrics.mean_latency_rx_cycles(),
        round_trip_a_tx_cycles: out_a.metrics.mean_ptr_round_trip_tx_cycles(),
        round_trip_b_tx_cycles: out_b.metrics.mean_ptr_round_trip_tx_cycles(),
        a_below_b: out_a.metrics.mean_latency_rx_cycles() < out_b.metrics.mean_latency_rx_cycles(),
    })
}

/// One frequency-ratio measurement from [`throughput_sweep`].
#[derive(Clone, Debug)]
pub struct SweepRow {
    /// `f_tx : f_rx` as an exact fraction.
    pub ratio_num: u32,
    pub ratio_den: u32,
    pub tx_period_ps: u64,
    pub rx_period_ps: u64,
    pub credit_pairs: usize,
    pub delivered: u64,
    pub words_per_slow_cycle: f64,
    pub verdict: Verdict,
}

/// Measures delivered words per slower-domain cycle across transmit:receive
/// frequency ratios. The receive period is taken from `base`; the transmit
/// period is scaled per ratio.
pub fn throughput_sweep(
    base: &ExperimentConfig,
    ratios: &[(u32, u32)],
) -> Result<Vec<SweepRow>, RunError> {
    let mut rows = Vec::new();
    for &(num, den) in ratios {
        if num == 0 || den == 0 {
            return Err(RunError::Config("ratio terms must be nonzero".into()));
        }
        let rx_period = base.rx_clock.nominal_period;
        // f_tx = (num/den) * f_rx  =>  tx_period = rx_period * den / num.
        let tx_period = (rx_period as u128 * den as u128 / num as u128) as u64;
        let mut cfg = base.clone();
        cfg.tx_clock.nominal_period = tx_period;
        cfg.tx_clock.phase_offset = cfg.tx_clock.phase_offset.min(tx_period.saturating_sub(1));
        let out = run_experiment(&cfg)?;
        rows.push(SweepRow {
            ratio_num: num,
            ratio_den: den,
            tx_period_ps: tx_period,
            rx_period_ps: rx_period,
            credit_pairs: cfg.fifo.credit_pairs,
            delivered: out.metrics.delivered,
            words_per_slow_cycle: out.metrics.throughput_words_per_slow_cycle(),
            verdict: out.verdict,
        });
    }
    Ok(rows)
}

/// Draws one randomized safe-design stress configuration: clock ratio
/// log-uniform in [1:3, 3:1], random phases, drift up to ±500 ppm, jitter up
/// to period/8, full violation stress.
pub fn randomized_config(
    master: &mut crate::kernel::SeededRng,
    design: FifoDesign,
    n_words: u64,
) -> ExperimentConfig {
    let rx_period = 1000u64;
    let ratio = 3f64.powf(2.0 * master.unit_f64() - 1.0);
    let tx_period = ((rx_period as f64 / ratio).round() as u64).clamp(334, 3000);

    let depth = [4u64, 8, 16, 32][master.bounded(4) as usize];
    let credit_pairs = [1usize, 2, 4][master.bounded(3) as usize].min(depth as usize);
    let duties = [
        EndpointPolicy::Saturating,
        EndpointPolicy::Duty(0.9),
        EndpointPolicy::Duty(0.6),
    ];

    let tx_clock = ClockDomain::new(0, tx_period)
        .with_phase(master.bounded(tx_period))
        .with_jitter(master.bounded(tx_period / 8 + 1))
        .with_drift(master.bounded(1001) as i64 - 500);
    let rx_clock = ClockDomain::new(1, rx_period)
        .with_phase(master.bounded(rx_period))
        .with_jitter(master.bounded(rx_period / 8 + 1))
        .with_drift(master.bounded(1001) as i64 - 500);

    ExperimentConfig {
        fifo: FifoConfig {
            design,
            depth,
            sync_stages: 2 + master.bounded(2) as usize,
            credit_pairs,
            ..FifoConfig::default()
        },
        tx_clock,
        rx_clock,
        seed: master.next_u64(),
        n_words,
        producer: duties[master.bounded(3) as usize],
        consumer: duties[master.bounded(3) as usize],
        stress: StressConfig {
            metastability: true,
            violation_rate: 1.0,
        },
        meta_policy: MetaPolicy::Realistic,
        watchdog_idle_edges: 50_000,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SeededRng;

    fn quick(design: FifoDesign, tx: u64, rx: u64, n: u64, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            fifo: FifoConfig {
                design,
                depth: 8,
                ..FifoConfig::default()
            },
            tx_clock: ClockDomain::new(0, tx),
            rx_clock: ClockDomain::new(1, rx).with_phase(rx / 3),
            seed,
            n_words: n,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn gray_heterochronous_run_is_clean() {
        let out = run_experiment(&quick(FifoDesign::Gray, 1000, 713, 5000, 7)).unwrap();
        assert_eq!(out.verdict, Verdict::Ok);
        assert_eq!(out.metrics.delivered, 5000);
        assert_eq!(out.metrics.conservatism_violations, 0);
        assert_eq!(out.metrics.staleness_violations, 0);
        assert!(out.metrics.mean_latency_rx_cycles() >= 2.0);
    }

    #[test]
    fn gray_survives_full_stress() {
        let mut cfg = quick(FifoDesign::Gray, 1000, 713, 5000, 8);
        inject_violation(&mut cfg, 1.0);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.verdict, Verdict::Ok);
        assert!(
            out.metrics.metastable_events > 0,
            "stress must actually bite"
        );
        assert_eq!(out.metrics.staleness_violations, 0);
    }

    #[test]
    fn pausible_run_is_clean_and_metastability_free() {
        let mut cfg = quick(FifoDesign::Pausible, 1000, 713, 5000, 9);
        inject_violation(&mut cfg, 1.0);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.verdict, Verdict::Ok);
        assert_eq!(out.metrics.metastable_events, 0);
        assert!(out.metrics.estimate_violations == 0);
        assert!(out.metrics.mean_latency_rx_cycles() >= 1.0);
        assert!(out.metrics.mean_latency_rx_cycles() < 2.5);
    }

    #[test]
    fn selftimed_and_elastic_run_clean() {
        for design in [FifoDesign::SelfTimed, FifoDesign::Elastic] {
            let cfg = quick(design, 1000, 1000, 2000, 10);
            let out = run_experiment(&cfg).unwrap();
            assert_eq!(out.verdict, Verdict::Ok, "{design}");
            assert_eq!(out.metrics.delivered, 2000);
        }
    }

    #[test]
    fn unsafe_binary_corrupts_under_stress() {
        // Duty-limited consumer keeps the buffer near full, where a torn
        // read-pointer capture shows the writer phantom room.
        let mut cfg = quick(FifoDesign::UnsafeBinary, 1000, 713, 20_000, 11);
        cfg.fifo.depth = 16;
        cfg.consumer = EndpointPolicy::Duty(0.5);
        inject_violation(&mut cfg, 1.0);
        cfg.watchdog_idle_edges = 5_000;
        let out = run_experiment(&cfg).unwrap();
        assert!(!out.verdict.is_ok(), "got {}", out.verdict);
        assert!(
            out.metrics.staleness_violations > 0,
            "torn captures must be observable"
        );
    }

    #[test]
    fn identical_configs_identical_outputs() {
        let cfg = quick(FifoDesign::Gray, 1000, 713, 3000, 12);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.trace_hash, b.trace_hash);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn phase_translation_changes_nothing_observable() {
        let mut cfg = quick(FifoDesign::Gray, 1000, 713, 3000, 13);
        inject_violation(&mut cfg, 1.0);
        let base = run_experiment(&cfg).unwrap();
        let shifted = run_experiment(&cfg.translated(12_345)).unwrap();
        assert_eq!(base.verdict, shifted.verdict);
        assert_eq!(base.received_seqs, shifted.received_seqs);
        assert_eq!(base.metrics, shifted.metrics);
    }

    #[test]
    fn randomized_configs_validate() {
        let mut master = SeededRng::new(99);
        for _ in 0..200 {
            let cfg = randomized_config(&mut master, FifoDesign::Gray, 100);
            cfg.validate().expect("randomized config must be valid");
        }
    }

    #[test]
    fn stall_detected_when_consumer_never_polls() {
        let mut cfg = quick(FifoDesign::Gray, 1000, 1000, 100, 14);
        cfg.consumer = EndpointPolicy::Duty(0.0);
        cfg.watchdog_idle_edges = 2_000;
        let out = run_experiment(&cfg).unwrap();
        assert!(matches!(out.verdict, Verdict::Stalled { .. }));
    }

    #[test]
    fn zero_violation_rate_is_bit_identical_to_unstressed() {
        let plain = quick(FifoDesign::Gray, 1000, 713, 3000, 15);
        let mut zeroed = plain.clone();
        inject_violation(&mut zeroed, 0.0);
        let a = run_experiment(&plain).unwrap();
        let b = run_experiment(&zeroed).unwrap();
        assert_eq!(a.trace_hash, b.trace_hash);
        assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn extra_sync_stage_costs_latency() {
        let mut two = quick(FifoDesign::Gray, 1000, 1000, 5000, 16);
        two.producer = EndpointPolicy::Duty(0.4);
        two.fifo.sync_stages = 2;
        let mut three = two.clone();
        three.fifo.sync_stages = 3;
        let cmp = latency_compare(&three, &two).unwrap();
        assert!(
            cmp.mean_a_rx_cycles >= cmp.mean_b_rx_cycles,
            "3-stage mean {} must not beat 2-stage mean {}",
            cmp.mean_a_rx_cycles,
            cmp.mean_b_rx_cycles
        );
    }

    #[test]
    fn backpressured_throughput_is_consumer_bound_for_any_safe_design() {
        // Heavy backpressure: a half-duty consumer bounds every design to
        // the same delivered rate.
        let mut rates = Vec::new();
        for design in [FifoDesign::SelfTimed, FifoDesign::Gray] {
            let mut cfg = quick(design, 1000, 1000, 5000, 17);
            cfg.consumer = EndpointPolicy::Duty(0.5);
            let out = run_experiment(&cfg).unwrap();
            assert!(out.verdict.is_ok());
            rates.push(out.metrics.throughput_words_per_slow_cycle());
        }
        assert!(
            (rates[0] - rates[1]).abs() < 0.02,
            "self-timed {} vs gray {} under the same consumer bound",
            rates[0],
            rates[1]
        );
    }
}
