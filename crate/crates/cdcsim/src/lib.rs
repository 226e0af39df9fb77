//! Deterministic discrete-event simulation and verification of
//! clock-domain-crossing FIFOs.
//!
//! Five buffer designs — Gray-pointer dual-clock, pausible two-phase,
//! self-timed micropipeline, elastic mesochronous, and an unsafe
//! binary-pointer baseline — behind one cycle-driven interface, plus the
//! circuit primitives they are built from (metastability-aware flops,
//! synchronizer chains, mutexes, pausible clock generators) and an
//! experiment harness that stress-tests them and scores every run against
//! a sent-versus-received ledger.
//!
//! Runs are pure functions of configuration and seed: identical inputs
//! replay identical traces, metrics, and output bytes, and translating
//! both clock phases by a constant changes nothing observable — protocol
//! logic sees edge identities, never absolute time.
//!
//! The rendered guide lives in `book/`; its chapters double as this
//! crate's doc-tests (see [`book`]).

pub mod book;
pub mod elements;
pub mod fifos;
pub mod graycode;
pub mod harness;
pub mod kernel;
