//! Five FIFO machines behind one cycle-driven interface.
//!
//! - [`GrayFifo`]: dual-clock buffer with Gray-coded pointers crossing
//!   through per-bit brute-force synchronizers.
//! - [`PausibleFifo`]: pointer updates as two-phase increment/acknowledge
//!   toggles through pausible clocking; no metastability by construction.
//! - [`SelfTimedFifo`]: clockless micropipeline; words ripple through
//!   handshake-controlled stages.
//! - [`ElasticFifo`]: plain elastic buffer for mesochronous links,
//!   initialized half-full to absorb skew in both directions.
//! - [`UnsafeBinaryFifo`]: the negative control — identical structure to the
//!   Gray design but pointers cross as raw binary, so a multi-bit increment
//!   can be captured torn.
//!
//! Cycle operations are called exactly once per clock edge and communicate
//! through [`EdgeCtx`]; none of the decision logic here reads absolute time.

mod dual_clock;
mod elastic;
mod pausible;
mod selftimed;

pub use dual_clock::{DualClockFifo, GrayFifo, UnsafeBinaryFifo};
pub use elastic::{elastic_link_run, elastic_slack_bound_ps, ElasticFifo, ElasticLinkReport};
pub use pausible::PausibleFifo;
pub use selftimed::SelfTimedFifo;

use thiserror::Error;

use crate::elements::{EdgeCtx, FlopTimings, MutexParams, ToggleLink};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FifoError {
    #[error("invalid fifo config: {0}")]
    InvalidConfig(String),
}

/// Which of the five machines to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FifoDesign {
    Gray,
    Pausible,
    SelfTimed,
    Elastic,
    UnsafeBinary,
}

impl FifoDesign {
    pub const ALL: [FifoDesign; 5] = [
        FifoDesign::Gray,
        FifoDesign::Pausible,
        FifoDesign::SelfTimed,
        FifoDesign::Elastic,
        FifoDesign::UnsafeBinary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FifoDesign::Gray => "gray",
            FifoDesign::Pausible => "pausible",
            FifoDesign::SelfTimed => "selftimed",
            FifoDesign::Elastic => "elastic",
            FifoDesign::UnsafeBinary => "unsafe-binary",
        }
    }
}

impl std::fmt::Display for FifoDesign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FifoDesign {
    type Err = FifoError;

    fn from_str(s: &str) -> Result<Self, FifoError> {
        match s {
            "gray" => Ok(FifoDesign::Gray),
            "pausible" => Ok(FifoDesign::Pausible),
            "selftimed" => Ok(FifoDesign::SelfTimed),
            "elastic" => Ok(FifoDesign::Elastic),
            "unsafe-binary" => Ok(FifoDesign::UnsafeBinary),
            other => Err(FifoError::InvalidConfig(format!(
                "unknown design '{other}' (expected gray|pausible|selftimed|elastic|unsafe-binary)"
            ))),
        }
    }
}

/// Static shape of one FIFO instance.
#[derive(Clone, Copy, Debug)]
pub struct FifoConfig {
    pub design: FifoDesign,
    /// Slot count; must be a power of two, at least 2.
    pub depth: u64,
    /// Payload width in bits (bounds the sequence numbers a word can carry).
    pub word_width: u8,
    /// Brute-force synchronizer depth for the dual-clock designs.
    pub sync_stages: usize,
    /// Increment/acknowledge pairs for the pausible design.
    pub credit_pairs: usize,
    pub timings: FlopTimings,
    pub mutex: MutexParams,
    /// Routing-skew step between adjacent pointer-bus bits: bit `i` lands
    /// `i * wire_skew_step` after bit 0. Harmless for Gray pointers, fatal
    /// for the binary baseline.
    pub wire_skew_step: u64,
    /// Per-stage ripple latencies for the self-timed design.
    pub forward_delay: u64,
    pub backward_delay: u64,
}

impl Default for FifoConfig {
    fn default() -> Self {
        FifoConfig {
            design: FifoDesign::Gray,
            depth: 16,
            word_width: 32,
            sync_stages: 2,
            credit_pairs: 2,
            timings: FlopTimings::default(),
            mutex: MutexParams::default(),
            wire_skew_step: 25,
            forward_delay: 120,
            backward_delay: 80,
        }
    }
}

impl FifoConfig {
    pub fn validate(&self) -> Result<(), FifoError> {
        if self.depth < 2 || !self.depth.is_power_of_two() {
            return Err(FifoError::InvalidConfig(format!(
                "depth must be a power of two >= 2, got {}",
                self.depth
            )));
        }
        if self.word_width == 0 || self.word_width > 63 {
            return Err(FifoError::InvalidConfig(
                "word_width must be in 1..=63".into(),
            ));
        }
        if self.sync_stages < 2 {
            return Err(FifoError::InvalidConfig("sync_stages must be >= 2".into()));
        }
        if self.credit_pairs == 0 || self.credit_pairs as u64 > self.depth {
            return Err(FifoError::InvalidConfig(format!(
                "credit_pairs must be in 1..=depth, got {}",
                self.credit_pairs
            )));
        }
        if self.forward_delay == 0 || self.backward_delay == 0 {
            return Err(FifoError::InvalidConfig("stage delays must be > 0".into()));
        }
        self.timings
            .validate()
            .map_err(|e| FifoError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// Pointer width for the dual-clock designs: `log2(depth)` plus one wrap
    /// bit to distinguish full from empty.
    pub fn pointer_width(&self) -> u8 {
        (self.depth.trailing_zeros() + 1) as u8
    }
}

/// One payload word. The harness embeds a sequence number; the all-ones
/// pattern marks a never-written slot so underflow reads are detectable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Word(pub u64);

impl Word {
    pub const SENTINEL: Word = Word(u64::MAX);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WriteOut {
    pub accepted: bool,
    pub full: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadOut {
    pub word: Option<Word>,
    pub empty: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortSide {
    Write,
    Read,
}

/// Verification window into a machine. Everything here is shadow state —
/// exact, instantaneous, and never consulted by the protocol itself.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FifoProbe {
    /// Free-running write count (words committed).
    pub wptr: u64,
    /// Free-running read count (words taken).
    pub rptr: u64,
    pub occupancy: u64,
    /// Masked opposing-pointer view held by the write side, if the design
    /// has one, together with the pointer width.
    pub synced_rptr_at_writer: Option<u64>,
    pub synced_wptr_at_reader: Option<u64>,
    pub pointer_width: Option<u8>,
    /// Pausible-side conservative estimates (free-running counts).
    pub writer_rptr_estimate: Option<u64>,
    pub reader_wptr_estimate: Option<u64>,
    pub credits_free: Option<u32>,
}

/// The uniform cycle-driven surface the harness drives.
///
/// Preconditions shared by all machines: `write_cycle` is called exactly
/// once per write-domain rising edge and `read_cycle` once per read-domain
/// rising edge, in edge order. Rejection is reported through flags, never
/// through errors — backpressure is normal operation.
pub trait CycleFifo {
    fn write_cycle(&mut self, offer: Option<Word>, ctx: &mut EdgeCtx) -> WriteOut;

    /// `take` is the read enable. The cycle itself runs either way — clocks
    /// do not stop because the consumer is idle, and the synchronizers and
    /// pointer-update consumption must advance every edge.
    fn read_cycle(&mut self, take: bool, ctx: &mut EdgeCtx) -> ReadOut;

    /// Handles one internal event (self-timed ripple); no-op elsewhere.
    fn handle_internal(&mut self, _tag: u32, _ctx: &mut EdgeCtx) {}

    /// Drains internal events to schedule, as (delay from now, tag) pairs.
    fn take_internal(&mut self) -> Vec<(u64, u32)> {
        Vec::new()
    }

    fn probe(&self) -> FifoProbe;

    /// Toggle arrivals headed at the given port, for pausible-clock guard
    /// checks. Only the pausible design has any.
    fn incoming_link(&self, _side: PortSide) -> Option<&ToggleLink> {
        None
    }
}

/// Enum dispatch over the five machines.
pub enum FifoMachine {
    Gray(GrayFifo),
    Pausible(PausibleFifo),
    SelfTimed(SelfTimedFifo),
    Elastic(ElasticFifo),
    UnsafeBinary(UnsafeBinaryFifo),
}

impl FifoMachine {
    pub fn build(cfg: &FifoConfig) -> Result<FifoMachine, FifoError> {
        cfg.validate()?;
        Ok(match cfg.design {
            FifoDesign::Gray => FifoMachine::Gray(GrayFifo::new(cfg)),
            FifoDesign::Pausible => FifoMachine::Pausible(PausibleFifo::new(cfg)),
            FifoDesign::SelfTimed => FifoMachine::SelfTimed(SelfTimedFifo::new(cfg)),
            FifoDesign::Elastic => FifoMachine::Elastic(ElasticFifo::new(cfg.depth)),
            FifoDesign::UnsafeBinary => FifoMachine::UnsafeBinary(UnsafeBinaryFifo::new(cfg)),
        })
    }

    fn inner(&self) -> &dyn CycleFifo {
        match self {
            FifoMachine::Gray(f) => f,
            FifoMachine::Pausible(f) => f,
            FifoMachine::SelfTimed(f) => f,
            FifoMachine::Elastic(f) => f,
            FifoMachine::UnsafeBinary(f) => f,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn CycleFifo {
        match self {
            FifoMachine::Gray(f) => f,
            FifoMachine::Pausible(f) => f,
            FifoMachine::SelfTimed(f) => f,
            FifoMachine::Elastic(f) => f,
            FifoMachine::UnsafeBinary(f) => f,
        }
    }
}

impl CycleFifo for FifoMachine {
    fn write_cycle(&mut self, offer: Option<Word>, ctx: &mut EdgeCtx) -> WriteOut {
        self.inner_mut().write_cycle(offer, ctx)
    }

    fn read_cycle(&mut self, take: bool, ctx: &mut EdgeCtx) -> ReadOut {
        self.inner_mut().read_cycle(take, ctx)
    }

    fn handle_internal(&mut self, tag: u32, ctx: &mut EdgeCtx) {
        self.inner_mut().handle_internal(tag, ctx)
    }

    fn take_internal(&mut self) -> Vec<(u64, u32)> {
        self.inner_mut().take_internal()
    }

    fn probe(&self) -> FifoProbe {
        self.inner().probe()
    }

    fn incoming_link(&self, side: PortSide) -> Option<&ToggleLink> {
        self.inner().incoming_link(side)
    }
}
