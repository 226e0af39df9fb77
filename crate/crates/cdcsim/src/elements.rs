//! Metastability-aware circuit primitives.
//!
//! The model here is behavioral, not analog: a flip-flop that samples a
//! changing input inside its setup/hold window enters [`LogicLevel::Metastable`]
//! and resolves to a fair coin after an exponentially distributed delay.
//! Everything downstream — synchronizer chains, mutexes, pausible clock
//! generators — is built from that one abstraction.

use std::collections::VecDeque;

use thiserror::Error;

use crate::kernel::{ClockDomain, SeededRng, SimTime};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElementError {
    #[error("two-phase protocol violation: {0}")]
    ProtocolViolation(&'static str),
    #[error("mutex grant already outstanding")]
    GrantOutstanding,
    #[error("mutex released by a side that holds no grant")]
    NotGranted,
    #[error("invalid flop timings: {0}")]
    InvalidTimings(&'static str),
}

// ---------------------------------------------------------------------------
// Signal values and flop timings
// ---------------------------------------------------------------------------

/// Tri-valued logic level: stable zero, stable one, or metastable with a
/// scheduled resolution.
///
/// A metastable value is a timing fact, not a third voltage: before
/// `resolve_at` any observer sampling it is itself committing a timing
/// hazard; from `resolve_at` on, every observer reads `resolves_to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicLevel {
    Zero,
    One,
    Metastable {
        resolve_at: SimTime,
        resolves_to: bool,
    },
}

impl LogicLevel {
    #[inline]
    pub fn stable(v: bool) -> LogicLevel {
        if v {
            LogicLevel::One
        } else {
            LogicLevel::Zero
        }
    }

    #[inline]
    pub fn is_metastable(&self) -> bool {
        matches!(self, LogicLevel::Metastable { .. })
    }

    /// The value an observer reads at `at`, or `None` while still unresolved.
    pub fn value_at(&self, at: SimTime) -> Option<bool> {
        match *self {
            LogicLevel::Zero => Some(false),
            LogicLevel::One => Some(true),
            LogicLevel::Metastable {
                resolve_at,
                resolves_to,
            } => {
                if resolve_at <= at {
                    Some(resolves_to)
                } else {
                    None
                }
            }
        }
    }
}

/// Flip-flop timing parameters, all in picoseconds.
///
/// `tau` and `t0` are the resolution-time constant and window constant of the
/// standard exponential metastability model; they also drive [`mtbf`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlopTimings {
    pub setup: u64,
    pub hold: u64,
    pub clk_to_q: u64,
    pub tau: u64,
    pub t0: u64,
}

impl Default for FlopTimings {
    fn default() -> Self {
        // Standard-cell scale: timing closes inside a domain down to ~300ps
        // periods (setup + clk_to_q with jitter margin), and tau is small
        // enough that a violation resolves within a cycle except with
        // vanishing probability — which is what makes two-stage
        // synchronizers usable at all.
        FlopTimings {
            setup: 90,
            hold: 45,
            clk_to_q: 90,
            tau: 5,
            t0: 1000,
        }
    }
}

impl FlopTimings {
    pub fn validate(&self) -> Result<(), ElementError> {
        if self.tau == 0 {
            return Err(ElementError::InvalidTimings("tau must be > 0"));
        }
        // The event model relies on launched transitions landing at or after
        // the hold boundary of an edge dispatched earlier at the same source.
        if self.clk_to_q < self.hold {
            return Err(ElementError::InvalidTimings("clk_to_q must be >= hold"));
        }
        Ok(())
    }

    /// Open violation window around a sampling edge: `(edge - setup, edge + hold)`.
    #[inline]
    pub(crate) fn in_window(&self, transition: SimTime, edge: SimTime) -> bool {
        transition.0 + self.setup > edge.0 && transition.0 < edge.0 + self.hold
    }
}

// ---------------------------------------------------------------------------
// Run environment shared by sampling sites
// ---------------------------------------------------------------------------

/// What to do when metastability survives the final synchronizer stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaPolicy {
    /// Resolve to the embedded coin and count the escape. This is the
    /// realistic mode, and the one that lets the unsafe baseline corrupt.
    Realistic,
    /// Flag the run as failed.
    Strict,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Every `Metastable` value produced anywhere in the run.
    pub metastable_created: u64,
    /// Metastable values consumed unresolved at a final synchronizer stage.
    pub sync_escapes: u64,
    /// Violations injected by the stress knob rather than natural timing.
    pub forced_violations: u64,
    pub clock_pauses: u64,
    pub max_pause_ps: u64,
    /// Set when `MetaPolicy::Strict` sees an escape.
    pub strict_violation: bool,
}

/// Per-run mutable environment: the seeded stream, fault counters, and the
/// stress configuration. One per simulation run, never shared.
#[derive(Clone, Debug)]
pub struct SimEnv {
    pub rng: SeededRng,
    pub counters: Counters,
    /// When false, sampling is ideal: no metastability is modeled at all.
    pub meta_enabled: bool,
    /// Fraction of transition-carrying samples forced into the window.
    pub stress_rate: f64,
    pub policy: MetaPolicy,
}

impl SimEnv {
    pub fn new(seed: u64) -> Self {
        SimEnv {
            rng: SeededRng::new(seed),
            counters: Counters::default(),
            meta_enabled: true,
            stress_rate: 0.0,
            policy: MetaPolicy::Realistic,
        }
    }
}

/// Context handed to cycle operations at one clock edge.
///
/// Carries edge *identity* (domain, index) publicly; the absolute time is
/// deliberately inaccessible outside this crate. Element-level sampling and
/// metric collection read it internally — FIFO decision logic never does,
/// which is what makes whole-run phase translation a no-op on behaviour.
pub struct EdgeCtx<'a> {
    pub domain_id: u32,
    pub index: u64,
    time: SimTime,
    pub env: &'a mut SimEnv,
}

impl<'a> EdgeCtx<'a> {
    pub fn new(domain_id: u32, index: u64, time: SimTime, env: &'a mut SimEnv) -> Self {
        EdgeCtx {
            domain_id,
            index,
            time,
            env,
        }
    }

    /// Sampling physics and metrics only.
    pub(crate) fn time(&self) -> SimTime {
        self.time
    }
}

// ---------------------------------------------------------------------------
// Wires
// ---------------------------------------------------------------------------

/// A single-bit cross-domain wire.
///
/// Tracks the current and previous values with their transition times so a
/// sampler can see the pre-transition value while a launch is still in
/// flight. At most one transition may be in flight at a sampling instant,
/// which holds whenever `clk_to_q` is below the driving clock period.
#[derive(Clone, Debug)]
pub struct Wire {
    cur: bool,
    prev: bool,
    t_cur: SimTime,
    t_prev: SimTime,
}

impl Wire {
    pub fn new(initial: bool) -> Self {
        Wire {
            cur: initial,
            prev: initial,
            t_cur: SimTime::ZERO,
            t_prev: SimTime::ZERO,
        }
    }

    /// Drives the wire to `v` with the transition landing at `at`.
    pub fn drive(&mut self, v: bool, at: SimTime) {
        if v != self.cur {
            debug_assert!(at >= self.t_cur, "wire transitions must be time-ordered");
            self.prev = self.cur;
            self.t_prev = self.t_cur;
            self.cur = v;
            self.t_cur = at;
        }
    }

    /// Value visible at `at` (pre-transition while a launch is in flight).
    pub fn value_at(&self, at: SimTime) -> bool {
        if self.t_cur <= at {
            self.cur
        } else {
            debug_assert!(self.t_prev <= at, "more than one transition in flight");
            self.prev
        }
    }

    pub fn newest_transition(&self) -> SimTime {
        self.t_cur
    }

    fn transition_in_window(&self, timings: &FlopTimings, edge: SimTime) -> bool {
        timings.in_window(self.t_cur, edge) || timings.in_window(self.t_prev, edge)
    }
}

// ---------------------------------------------------------------------------
// Flip-flop sampling
// ---------------------------------------------------------------------------

fn fresh_metastable(timings: &FlopTimings, clk_edge: SimTime, rng: &mut SeededRng) -> LogicLevel {
    let extra = rng.exponential_ps(timings.tau);
    let resolves_to = rng.coin();
    LogicLevel::Metastable {
        resolve_at: SimTime(clk_edge.0 + timings.clk_to_q + extra),
        resolves_to,
    }
}

/// Samples `d` at a rising clock edge.
///
/// If the last transition of `d` falls outside the open window
/// `(clk_edge - setup, clk_edge + hold)`, the stable value is captured
/// (output settling `clk_to_q` later). A transition inside the window
/// produces a metastable capture resolving to a fair coin after an
/// exponential delay with mean `tau`. An input that is itself still
/// metastable at the edge is a downstream hazard and yields a fresh
/// metastable capture — it is never silently stabilized.
pub fn ff_sample(
    timings: &FlopTimings,
    d: LogicLevel,
    last_d_transition: SimTime,
    clk_edge: SimTime,
    rng: &mut SeededRng,
) -> LogicLevel {
    if let LogicLevel::Metastable { resolve_at, .. } = d {
        if resolve_at > clk_edge {
            return fresh_metastable(timings, clk_edge, rng);
        }
    }
    let value = d.value_at(clk_edge).expect("resolved above");
    if timings.in_window(last_d_transition, clk_edge) {
        fresh_metastable(timings, clk_edge, rng)
    } else {
        LogicLevel::stable(value)
    }
}

/// Mean time between synchronizer failures, in seconds:
/// `e^(t_resolve/tau) / (t0 * f_clk * f_data)`.
pub fn mtbf(timings: &FlopTimings, f_clk_hz: f64, f_data_hz: f64, t_resolve_ps: u64) -> f64 {
    assert!(f_clk_hz > 0.0 && f_data_hz > 0.0, "rates must be > 0");
    let tau = timings.tau as f64;
    let t0_seconds = timings.t0 as f64 * 1e-12;
    (t_resolve_ps as f64 / tau).exp() / (t0_seconds * f_clk_hz * f_data_hz)
}

// ---------------------------------------------------------------------------
// Brute-force synchronizer chains
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    /// Stage-0 window violations (natural or forced).
    pub violations: u64,
    /// Metastability sampled unresolved by a later stage.
    pub propagated: u64,
    /// Final-stage output consumed while still unresolved.
    pub escapes: u64,
}

#[derive(Clone, Debug)]
struct Stage {
    out: LogicLevel,
    /// Most recent output value once settled.
    last_q: bool,
    /// When the output last changed (or will settle, for a metastable).
    last_change: SimTime,
}

impl Stage {
    fn new(initial: bool) -> Self {
        Stage {
            out: LogicLevel::stable(initial),
            last_q: initial,
            last_change: SimTime::ZERO,
        }
    }

    /// The (level, last-transition) pair the next stage sees at `edge`.
    fn as_input_at(&self, edge: SimTime) -> (LogicLevel, SimTime) {
        match self.out {
            LogicLevel::Metastable {
                resolve_at,
                resolves_to,
            } if resolve_at <= edge => (LogicLevel::stable(resolves_to), resolve_at),
            other => (other, self.last_change),
        }
    }

    fn latch(&mut self, captured: LogicLevel, edge: SimTime, timings: &FlopTimings) {
        match captured {
            LogicLevel::Metastable {
                resolve_at,
                resolves_to,
            } => {
                self.out = captured;
                self.last_q = resolves_to;
                self.last_change = resolve_at;
            }
            stable => {
                let v = stable.value_at(edge).expect("stable");
                if v != self.last_q {
                    self.last_change = SimTime(edge.0 + timings.clk_to_q);
                    self.last_q = v;
                }
                self.out = stable;
            }
        }
    }
}

/// An n-stage brute-force synchronizer clocked by the receiving domain.
///
/// Metastability produced at stage `i` that resolves before stage `i + 1`
/// next samples is absorbed; otherwise it propagates and is counted. Whether
/// it survives all the way out is the receiver's problem — see
/// [`SyncBus::sample`] and [`ChainStats::escapes`].
#[derive(Clone, Debug)]
pub struct SyncChain {
    stages: Vec<Stage>,
    timings: FlopTimings,
    pub stats: ChainStats,
}

impl SyncChain {
    pub fn new(n_stages: usize, timings: FlopTimings, initial: bool) -> Self {
        assert!(n_stages >= 1, "a synchronizer needs at least one stage");
        SyncChain {
            stages: vec![Stage::new(initial); n_stages],
            timings,
            stats: ChainStats::default(),
        }
    }

    /// Clocks every stage once at the context's edge and returns the final
    /// stage output as of this edge.
    ///
    /// `force_violation` treats the stage-0 capture as a setup/hold hit even
    /// when the natural timing was clean (stress injection). Only the
    /// newest transition on a bus may be forced — older ones have settled —
    /// which is the caller's responsibility (see [`SyncBus::sample`]).
    pub fn clock_edge(
        &mut self,
        wire: &Wire,
        ctx: &mut EdgeCtx,
        force_violation: bool,
    ) -> LogicLevel {
        let edge = ctx.time();
        // Later stages sample first so every stage sees its predecessor's
        // pre-edge output.
        for i in (1..self.stages.len()).rev() {
            let (d, last) = self.stages[i - 1].as_input_at(edge);
            let was_hazard = d.is_metastable();
            let out = ff_sample(&self.timings, d, last, edge, &mut ctx.env.rng);
            if out.is_metastable() {
                ctx.env.counters.metastable_created += 1;
                if was_hazard {
                    self.stats.propagated += 1;
                }
            }
            self.stages[i].latch(out, edge, &self.timings);
        }

        let value = wire.value_at(edge);
        let natural = ctx.env.meta_enabled && wire.transition_in_window(&self.timings, edge);
        let captured = if natural || force_violation {
            self.stats.violations += 1;
            ctx.env.counters.metastable_created += 1;
            fresh_metastable(&self.timings, edge, &mut ctx.env.rng)
        } else {
            LogicLevel::stable(value)
        };
        self.stages[0].latch(captured, edge, &self.timings);
        self.stages.last().expect("nonempty").out
    }

    /// Final-stage output without clocking.
    pub fn output(&self) -> LogicLevel {
        self.stages.last().expect("nonempty").out
    }
}

/// A multi-bit value crossing domains as independent per-bit wires, each
/// with its own synchronizer chain. This is the honest hardware shape: a
/// Gray-coded bus is safe here, a plain binary bus is not.
#[derive(Clone, Debug)]
pub struct SyncBus {
    wires: Vec<Wire>,
    chains: Vec<SyncChain>,
    timings: FlopTimings,
    /// Per-bit routing skew added to each launch. A multi-bit change lands
    /// spread out in time; a sample falling inside the spread captures a
    /// torn word. One-bit-per-increment encodings are immune by
    /// construction, which is the entire point of using them.
    skews: Vec<u64>,
    /// Newest transition already given its one stress decision.
    stress_decided_up_to: SimTime,
}

impl SyncBus {
    pub fn new(
        width: usize,
        n_stages: usize,
        timings: FlopTimings,
        initial_bits: u64,
        skews: Vec<u64>,
    ) -> Self {
        assert_eq!(skews.len(), width, "one skew per wire");
        let wires = (0..width)
            .map(|i| Wire::new(initial_bits >> i & 1 == 1))
            .collect();
        let chains = (0..width)
            .map(|i| SyncChain::new(n_stages, timings, initial_bits >> i & 1 == 1))
            .collect();
        SyncBus {
            wires,
            chains,
            timings,
            skews,
            stress_decided_up_to: SimTime::ZERO,
        }
    }

    /// Drives the bus from the source domain; changed bits launch
    /// `clk_to_q` plus their wire's skew after the context's edge.
    pub fn drive(&mut self, bits: u64, ctx: &EdgeCtx) {
        let launch = ctx.time().0 + self.timings.clk_to_q;
        for (i, w) in self.wires.iter_mut().enumerate() {
            w.drive(bits >> i & 1 == 1, SimTime(launch + self.skews[i]));
        }
    }

    /// Stress decision for this sample: force the bits carrying the bus's
    /// newest transition into the violation window.
    ///
    /// Only the newest transition is contestable — every older one has
    /// already settled at the sampler, so forcing it would fabricate values
    /// the source never drove. Each transition gets exactly one decision;
    /// re-drawing at a later edge could show the pre-transition value after
    /// the post value has been observed, a regression no real wire exhibits.
    /// On a Gray-coded bus the newest transition is one bit; on a binary bus
    /// an increment can carry several bits at the same instant, which is
    /// exactly the torn-capture hazard.
    fn stress_mask(&mut self, edge: SimTime, env: &mut SimEnv) -> u64 {
        if env.stress_rate <= 0.0 {
            return 0;
        }
        let newest = self
            .wires
            .iter()
            .map(Wire::newest_transition)
            .max()
            .unwrap_or(SimTime::ZERO);
        if newest <= self.stress_decided_up_to {
            return 0;
        }
        // Landing at or beyond this edge's hold boundary: next cycle's call.
        if newest.0 >= edge.0 + self.timings.hold {
            return 0;
        }
        self.stress_decided_up_to = newest;
        // Naturally violating transitions are already metastable.
        if self.timings.in_window(newest, edge) {
            return 0;
        }
        if env.rng.unit_f64() >= env.stress_rate {
            return 0;
        }
        let mut mask = 0u64;
        for (i, w) in self.wires.iter().enumerate() {
            if w.newest_transition() == newest {
                mask |= 1 << i;
                env.counters.forced_violations += 1;
            }
        }
        mask
    }

    /// Clocks every per-bit chain once in the receiving domain and returns
    /// the assembled word. Final-stage metastability is resolved according
    /// to the run's [`MetaPolicy`] and counted as an escape.
    pub fn sample(&mut self, ctx: &mut EdgeCtx) -> u64 {
        let edge = ctx.time();
        let force_mask = self.stress_mask(edge, ctx.env);
        let mut bits = 0u64;
        for (i, chain) in self.chains.iter_mut().enumerate() {
            let wire = &self.wires[i];
            let lvl = chain.clock_edge(wire, ctx, force_mask >> i & 1 == 1);
            let bit = match lvl {
                LogicLevel::Zero => false,
                LogicLevel::One => true,
                LogicLevel::Metastable {
                    resolve_at,
                    resolves_to,
                } => {
                    if resolve_at > edge {
                        chain.stats.escapes += 1;
                        ctx.env.counters.sync_escapes += 1;
                        if ctx.env.policy == MetaPolicy::Strict {
                            ctx.env.counters.strict_violation = true;
                        }
                    }
                    resolves_to
                }
            };
            if bit {
                bits |= 1 << i;
            }
        }
        bits
    }

    pub fn stats(&self) -> ChainStats {
        let mut total = ChainStats::default();
        for c in &self.chains {
            total.violations += c.stats.violations;
            total.propagated += c.stats.propagated;
            total.escapes += c.stats.escapes;
        }
        total
    }
}

/// Result of running a waveform through a standalone synchronizer chain.
#[derive(Clone, Debug)]
pub struct SyncChainRun {
    /// Output transitions of the final stage, as (settle time, new value).
    pub transitions: Vec<(SimTime, bool)>,
    pub stats: ChainStats,
}

/// Re-times `input` transitions (time-ordered `(time, value)` pairs, initial
/// value `initial`) into `rx_clock` through `n_stages` flops.
///
/// An escape is a final-stage output that would be consumed unresolved at
/// the following edge. Escapes are reported, never hidden.
pub fn sync_chain(
    n_stages: usize,
    input: &[(SimTime, bool)],
    rx_clock: &ClockDomain,
    timings: FlopTimings,
    initial: bool,
    env: &mut SimEnv,
) -> SyncChainRun {
    assert!(n_stages >= 2, "brute-force synchronizers use >= 2 stages");
    debug_assert!(
        input.windows(2).all(|w| w[0].0 <= w[1].0),
        "input must be time-ordered"
    );
    let mut wire = Wire::new(initial);
    let mut chain = SyncChain::new(n_stages, timings, initial);
    let mut transitions = Vec::new();
    let mut last_out = initial;
    let mut pending = input.iter().copied().peekable();

    let last_input = input.last().map(|&(t, _)| t.0).unwrap_or(0);
    let flush = (n_stages as u64 + 3) * rx_clock.nominal_period;
    let rng = SeededRng::new(env.rng.seed());
    let mut edge_index = 1u64;
    loop {
        let edge = crate::kernel::next_edge(rx_clock, edge_index, &rng).expect("valid rx clock");
        if edge.0 > last_input + flush {
            break;
        }
        // Transitions landing before this edge's hold boundary take part in
        // this sample (the wire model reads pre-transition values for
        // in-flight launches).
        while let Some(&(t, v)) = pending.peek() {
            if t.0 < edge.0 + timings.hold {
                wire.drive(v, t);
                pending.next();
            } else {
                break;
            }
        }
        let mut ctx = EdgeCtx::new(rx_clock.id, edge_index, edge, env);
        let lvl = chain.clock_edge(&wire, &mut ctx, false);
        let next_edge_time =
            crate::kernel::next_edge(rx_clock, edge_index + 1, &rng).expect("valid rx clock");
        match lvl {
            LogicLevel::Metastable {
                resolve_at,
                resolves_to,
            } => {
                if resolve_at >= next_edge_time {
                    chain.stats.escapes += 1;
                    env.counters.sync_escapes += 1;
                }
                if resolves_to != last_out {
                    transitions.push((resolve_at, resolves_to));
                    last_out = resolves_to;
                }
            }
            stable => {
                let v = stable.value_at(edge).expect("stable");
                if v != last_out {
                    transitions.push((SimTime(edge.0 + timings.clk_to_q), v));
                    last_out = v;
                }
            }
        }
        edge_index += 1;
    }
    SyncChainRun {
        transitions,
        stats: chain.stats,
    }
}

// ---------------------------------------------------------------------------
// Mutex element
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutexSide {
    A,
    B,
}

impl MutexSide {
    fn other(self) -> MutexSide {
        match self {
            MutexSide::A => MutexSide::B,
            MutexSide::B => MutexSide::A,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MutexParams {
    /// Requests closer together than this are "simultaneous" and decided by
    /// coin plus an exponential arbitration tail.
    pub aperture: u64,
    /// Fixed grant latency.
    pub decision_delay: u64,
    /// Mean of the exponential arbitration tail.
    pub tau: u64,
}

impl Default for MutexParams {
    fn default() -> Self {
        MutexParams {
            aperture: 30,
            decision_delay: 20,
            tau: 200,
        }
    }
}

/// Two-input mutual-exclusion element.
///
/// Never grants both sides; near-simultaneous requests take
/// unbounded-but-finite extra decision time, but the grant itself is always
/// clean — a mutex converts a timing hazard into a delay.
#[derive(Clone, Debug, Default)]
pub struct MutexState {
    granted: Option<MutexSide>,
    waiting: Option<MutexSide>,
}

impl MutexState {
    pub fn new() -> Self {
        MutexState::default()
    }

    pub fn granted(&self) -> Option<MutexSide> {
        self.granted
    }

    /// Decides between two pending requests.
    ///
    /// Clearly ordered requests (separation beyond the aperture) go to the
    /// earlier side after the fixed delay; near-simultaneous requests flip a
    /// fair coin and pay the exponential tail. The loser stays queued until
    /// [`release`](Self::release).
    pub fn arbitrate(
        &mut self,
        req_a: SimTime,
        req_b: SimTime,
        params: &MutexParams,
        rng: &mut SeededRng,
    ) -> Result<(MutexSide, SimTime), ElementError> {
        if self.granted.is_some() {
            return Err(ElementError::GrantOutstanding);
        }
        let gap = req_a.0.abs_diff(req_b.0);
        let base = req_a.0.max(req_b.0) + params.decision_delay;
        let (winner, grant_time) = if gap > params.aperture {
            let winner = if req_a < req_b {
                MutexSide::A
            } else {
                MutexSide::B
            };
            (winner, SimTime(base))
        } else {
            let winner = if rng.coin() {
                MutexSide::A
            } else {
                MutexSide::B
            };
            (winner, SimTime(base + rng.exponential_ps(params.tau)))
        };
        self.granted = Some(winner);
        self.waiting = Some(winner.other());
        Ok((winner, grant_time))
    }

    /// Releases the current grant; a queued competitor is granted
    /// immediately after the fixed delay (no starvation).
    pub fn release(
        &mut self,
        side: MutexSide,
        at: SimTime,
        params: &MutexParams,
    ) -> Result<Option<(MutexSide, SimTime)>, ElementError> {
        if self.granted != Some(side) {
            return Err(ElementError::NotGranted);
        }
        self.granted = None;
        if let Some(w) = self.waiting.take() {
            self.granted = Some(w);
            return Ok(Some((w, SimTime(at.0 + params.decision_delay))));
        }
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// Two-phase toggle channels and links
// ---------------------------------------------------------------------------

/// A single-credit two-phase (transition-signalling) channel.
///
/// Each level *change* on the request line announces one event; the matching
/// change on the acknowledge line retires it. A transfer is pending exactly
/// while the levels differ, so `req toggles - ack toggles` is always 0 or 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TwoPhaseChannel {
    req_level: bool,
    ack_level: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelSide {
    Req,
    Ack,
}

impl TwoPhaseChannel {
    pub fn new() -> Self {
        TwoPhaseChannel::default()
    }

    #[inline]
    pub fn pending(&self) -> bool {
        self.req_level != self.ack_level
    }

    pub fn req_level(&self) -> bool {
        self.req_level
    }

    pub fn ack_level(&self) -> bool {
        self.ack_level
    }

    /// Flips one side. Toggling out of turn is a protocol bug in the caller
    /// and fails fast.
    pub fn toggle(&mut self, side: ChannelSide) -> Result<(), ElementError> {
        match side {
            ChannelSide::Req => {
                if self.pending() {
                    return Err(ElementError::ProtocolViolation(
                        "req toggle while transfer pending",
                    ));
                }
                self.req_level = !self.req_level;
            }
            ChannelSide::Ack => {
                if !self.pending() {
                    return Err(ElementError::ProtocolViolation(
                        "ack toggle with no transfer pending",
                    ));
                }
                self.ack_level = !self.ack_level;
            }
        }
        Ok(())
    }
}

/// In-flight toggle events between domains, ordered by arrival time.
///
/// Carries which channel toggled; the propagation delay is folded into the
/// arrival timestamp by the sender.
#[derive(Clone, Debug, Default)]
pub struct ToggleLink {
    in_flight: VecDeque<(SimTime, usize)>,
}

impl ToggleLink {
    pub fn new() -> Self {
        ToggleLink::default()
    }

    pub fn send(&mut self, channel: usize, arrival: SimTime) {
        debug_assert!(
            self.in_flight.back().is_none_or(|&(t, _)| t <= arrival),
            "toggle arrivals must be time-ordered"
        );
        self.in_flight.push_back((arrival, channel));
    }

    /// Pops every toggle that arrived at least `setup` before `edge` — the
    /// ones this edge samples cleanly.
    pub fn take_arrived(&mut self, edge: SimTime, setup: u64) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some(&(t, ch)) = self.in_flight.front() {
            if t.0 + setup <= edge.0 {
                out.push(ch);
                self.in_flight.pop_front();
            } else {
                break;
            }
        }
        out
    }

    /// Latest arrival inside the open guard window `(edge - setup, edge + hold)`,
    /// if any. Such an arrival contends with the edge.
    pub fn latest_in_guard(&self, edge: SimTime, setup: u64, hold: u64) -> Option<SimTime> {
        let mut latest = None;
        for &(t, _) in &self.in_flight {
            if t.0 >= edge.0 + hold {
                break;
            }
            if t.0 + setup > edge.0 {
                latest = Some(t);
            }
        }
        latest
    }

    pub fn len(&self) -> usize {
        self.in_flight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_flight.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Pausible clock generation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FireOutcome {
    /// The edge fires at its scheduled time; no contention.
    Fire { index: u64, time: SimTime },
    /// An asynchronous arrival contended with the guard window; the edge —
    /// and all later ones — moved to `retry_at`.
    Pause { retry_at: SimTime, pause_ps: u64 },
}

/// A local clock generator that stalls instead of sampling an unsafe input.
///
/// The guard window of a pending edge is the setup/hold window of the latch
/// that will sample incoming toggles. If nothing contends, the edge fires
/// unchanged. If an arrival lands inside the guard, the edge is pushed past
/// the arrival by setup plus the mutex arbitration delay — the fired edge is
/// metastability-free by construction, at the cost of a measured pause.
#[derive(Clone, Debug)]
pub struct PausibleClock {
    pub source: crate::kernel::ClockSource,
    timings: FlopTimings,
    mutex: MutexParams,
}

impl PausibleClock {
    pub fn new(domain: ClockDomain, seed: u64, timings: FlopTimings, mutex: MutexParams) -> Self {
        PausibleClock {
            source: crate::kernel::ClockSource::new(domain, seed),
            timings,
            mutex,
        }
    }

    pub fn next_time(&self) -> SimTime {
        self.source.next_time()
    }

    /// Attempts to fire the pending edge against the given incoming link.
    pub fn try_fire(&mut self, incoming: &ToggleLink, env: &mut SimEnv) -> FireOutcome {
        let t = self.source.next_time();
        match incoming.latest_in_guard(t, self.timings.setup, self.timings.hold) {
            None => {
                let (index, time) = self.source.advance();
                FireOutcome::Fire { index, time }
            }
            Some(latest) => {
                let tail = env.rng.exponential_ps(self.mutex.tau);
                let cleared = latest.0 + self.timings.setup + self.mutex.decision_delay + tail;
                let new_t = cleared.max(t.0 + 1);
                let pause = new_t - t.0;
                self.source.pause(pause);
                env.counters.clock_pauses += 1;
                env.counters.max_pause_ps = env.counters.max_pause_ps.max(pause);
                FireOutcome::Pause {
                    retry_at: SimTime(new_t),
                    pause_ps: pause,
                }
            }
        }
    }
}

/// Standalone form of the pausible-edge decision for a single nominal edge.
///
/// `async_request` is the interval over which an asynchronous input may be
/// switching. With no overlap against the guard window the edge is returned
/// unchanged; otherwise it is delayed past the request by the arbitration
/// time and is always metastability-free.
pub fn pausible_next_edge(
    nominal_edge: SimTime,
    async_request: Option<(SimTime, SimTime)>,
    timings: &FlopTimings,
    mutex: &MutexParams,
    rng: &mut SeededRng,
) -> SimTime {
    let Some((start, end)) = async_request else {
        return nominal_edge;
    };
    debug_assert!(start <= end);
    let guard_lo = nominal_edge.0.saturating_sub(timings.setup);
    let guard_hi = nominal_edge.0 + timings.hold;
    // Open-interval overlap test.
    let overlaps = start.0 < guard_hi && end.0 > guard_lo;
    if !overlaps {
        return nominal_edge;
    }
    let tail = rng.exponential_ps(mutex.tau);
    let cleared = end.0 + timings.setup + mutex.decision_delay + tail;
    SimTime(cleared.max(nominal_edge.0 + 1))
}

/// Muller C-element: output follows the inputs when they agree, holds
/// otherwise. The rendezvous primitive of self-timed pipelines.
#[inline]
pub fn c_element(a: bool, b: bool, prev: bool) -> bool {
    if a == b {
        a
    } else {
        prev
    }
}
