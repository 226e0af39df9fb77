//! Dual-clock FIFO with pointers crossing through per-bit synchronizer
//! chains, generic over the pointer encoding.
//!
//! With [`GrayEncoding`] this is the classic safe design: one bit changes
//! per increment, so a sampled-in-flight pointer is at worst one increment
//! stale and the full/empty flags err only on the conservative side. With
//! [`BinaryEncoding`] the same structure is the negative control: a
//! multi-bit increment (e.g. 0111 -> 1000) can be captured torn, producing a
//! pointer value the counter never held.

use std::marker::PhantomData;

use crate::elements::{EdgeCtx, SyncBus};
use crate::graycode::{bin_to_gray, gray_full, gray_to_bin, GrayValue};

use super::{CycleFifo, FifoConfig, FifoProbe, ReadOut, Word, WriteOut};

pub trait PointerEncoding {
    fn encode(ptr: u64, width: u8) -> u64;
    fn decode(bits: u64, width: u8) -> u64;
    fn full(wptr_enc: u64, rptr_synced_enc: u64, width: u8) -> bool;
    fn empty(rptr_enc: u64, wptr_synced_enc: u64, width: u8) -> bool;
}

/// Reflected binary code; safe to sample in flight.
pub struct GrayEncoding;

impl PointerEncoding for GrayEncoding {
    fn encode(ptr: u64, width: u8) -> u64 {
        bin_to_gray(ptr, width)
            .expect("masked pointer fits width")
            .bits()
    }

    fn decode(bits: u64, width: u8) -> u64 {
        gray_to_bin(GrayValue::from_bits(bits, width).expect("bus width"))
    }

    fn full(wptr_enc: u64, rptr_synced_enc: u64, width: u8) -> bool {
        gray_full(
            GrayValue::from_bits(wptr_enc, width).expect("bus width"),
            GrayValue::from_bits(rptr_synced_enc, width).expect("bus width"),
        )
    }

    fn empty(rptr_enc: u64, wptr_synced_enc: u64, _width: u8) -> bool {
        rptr_enc == wptr_synced_enc
    }
}

/// Plain binary pointers crossing the same synchronizers. Do not use for
/// anything except demonstrating why you should not use it.
pub struct BinaryEncoding;

impl PointerEncoding for BinaryEncoding {
    fn encode(ptr: u64, _width: u8) -> u64 {
        ptr
    }

    fn decode(bits: u64, _width: u8) -> u64 {
        bits
    }

    fn full(wptr_enc: u64, rptr_synced_enc: u64, width: u8) -> bool {
        let mask = (1u64 << width) - 1;
        wptr_enc.wrapping_sub(rptr_synced_enc) & mask == 1 << (width - 1)
    }

    fn empty(rptr_enc: u64, wptr_synced_enc: u64, _width: u8) -> bool {
        rptr_enc == wptr_synced_enc
    }
}

pub struct DualClockFifo<E: PointerEncoding> {
    depth: u64,
    width: u8,
    mask: u64,
    mem: Vec<Word>,
    // Free-running shadow counters; the masked low bits are the pointers.
    wptr: u64,
    rptr: u64,
    /// Read pointer, encoded, crossing into the write domain.
    r2w: SyncBus,
    /// Write pointer, encoded, crossing into the read domain.
    w2r: SyncBus,
    last_synced_rptr: u64,
    last_synced_wptr: u64,
    _encoding: PhantomData<E>,
}

pub type GrayFifo = DualClockFifo<GrayEncoding>;
pub type UnsafeBinaryFifo = DualClockFifo<BinaryEncoding>;

impl<E: PointerEncoding> DualClockFifo<E> {
    pub fn new(cfg: &FifoConfig) -> Self {
        let width = cfg.pointer_width();
        let skews: Vec<u64> = (0..width as u64).map(|i| i * cfg.wire_skew_step).collect();
        DualClockFifo {
            depth: cfg.depth,
            width,
            mask: (1u64 << width) - 1,
            mem: vec![Word::SENTINEL; cfg.depth as usize],
            wptr: 0,
            rptr: 0,
            r2w: SyncBus::new(
                width as usize,
                cfg.sync_stages,
                cfg.timings,
                0,
                skews.clone(),
            ),
            w2r: SyncBus::new(width as usize, cfg.sync_stages, cfg.timings, 0, skews),
            last_synced_rptr: 0,
            last_synced_wptr: 0,
            _encoding: PhantomData,
        }
    }

    #[inline]
    fn slot(&self, ptr: u64) -> usize {
        (ptr & (self.depth - 1)) as usize
    }

    /// Masked opposing-pointer view the write side last sampled (decoded).
    pub fn synced_rptr(&self) -> u64 {
        self.last_synced_rptr
    }

    pub fn synced_wptr(&self) -> u64 {
        self.last_synced_wptr
    }

    pub fn bus_stats(&self) -> (crate::elements::ChainStats, crate::elements::ChainStats) {
        (self.r2w.stats(), self.w2r.stats())
    }
}

impl<E: PointerEncoding> CycleFifo for DualClockFifo<E> {
    /// One write-domain edge: advance the incoming read-pointer
    /// synchronizers one stage, derive `full` from the (possibly stale)
    /// view, then commit the offered word if there is room. A stale view can
    /// only under-report how much the reader has freed, so `full` may be
    /// pessimistic but a true `!full` always has room.
    fn write_cycle(&mut self, offer: Option<Word>, ctx: &mut EdgeCtx) -> WriteOut {
        let synced_enc = self.r2w.sample(ctx);
        self.last_synced_rptr = E::decode(synced_enc, self.width) & self.mask;
        let wptr_enc = E::encode(self.wptr & self.mask, self.width);
        let full = E::full(wptr_enc, synced_enc, self.width);
        let mut accepted = false;
        if let Some(word) = offer {
            if !full {
                let slot = self.slot(self.wptr);
                self.mem[slot] = word;
                self.wptr += 1;
                let enc = E::encode(self.wptr & self.mask, self.width);
                self.w2r.drive(enc, ctx);
                accepted = true;
            }
        }
        WriteOut { accepted, full }
    }

    fn read_cycle(&mut self, take: bool, ctx: &mut EdgeCtx) -> ReadOut {
        let synced_enc = self.w2r.sample(ctx);
        self.last_synced_wptr = E::decode(synced_enc, self.width) & self.mask;
        let rptr_enc = E::encode(self.rptr & self.mask, self.width);
        let empty = E::empty(rptr_enc, synced_enc, self.width);
        let mut word = None;
        if take && !empty {
            word = Some(self.mem[self.slot(self.rptr)]);
            self.rptr += 1;
            let enc = E::encode(self.rptr & self.mask, self.width);
            self.r2w.drive(enc, ctx);
        }
        ReadOut { word, empty }
    }

    fn probe(&self) -> FifoProbe {
        FifoProbe {
            wptr: self.wptr,
            rptr: self.rptr,
            // Wrapping: a broken protocol (the binary baseline's whole point)
            // can read past the writer, and the probe must still report.
            occupancy: self.wptr.wrapping_sub(self.rptr),
            synced_rptr_at_writer: Some(self.last_synced_rptr),
            synced_wptr_at_reader: Some(self.last_synced_wptr),
            pointer_width: Some(self.width),
            ..FifoProbe::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::SimEnv;
    use crate::kernel::SimTime;

    fn cfg(depth: u64) -> FifoConfig {
        FifoConfig {
            depth,
            ..FifoConfig::default()
        }
    }

    /// Drives write and read edges on the same ideal 1000ps grid, write
    /// dispatched first — enough to unit-test the cycle semantics without
    /// the full harness.
    struct Bench {
        fifo: GrayFifo,
        env: SimEnv,
        edge: u64,
    }

    impl Bench {
        fn new(depth: u64) -> Self {
            Bench {
                fifo: GrayFifo::new(&cfg(depth)),
                env: SimEnv::new(1),
                edge: 0,
            }
        }

        fn step(&mut self, offer: Option<Word>) -> (WriteOut, ReadOut) {
            self.edge += 1;
            let t = SimTime(self.edge * 1000);
            let mut ctx = EdgeCtx::new(0, self.edge, t, &mut self.env);
            let w = self.fifo.write_cycle(offer, &mut ctx);
            // Read clock offset half a period so pointer launches never land
            // in a sampling window.
            let t = SimTime(self.edge * 1000 + 500);
            let mut ctx = EdgeCtx::new(1, self.edge, t, &mut self.env);
            let r = self.fifo.read_cycle(true, &mut ctx);
            (w, r)
        }
    }

    #[test]
    fn fresh_fifo_is_empty_not_full() {
        let mut b = Bench::new(4);
        let (w, r) = b.step(None);
        assert!(!w.full);
        assert!(r.empty);
        assert_eq!(r.word, None);
    }

    #[test]
    fn first_offer_accepted() {
        let mut b = Bench::new(4);
        let (w, _) = b.step(Some(Word(0)));
        assert!(w.accepted);
        assert!(!w.full);
    }

    #[test]
    fn word_crosses_after_sync_latency_with_sequence_intact() {
        let mut b = Bench::new(4);
        let (w, r0) = b.step(Some(Word(42)));
        assert!(w.accepted);
        assert!(
            r0.empty,
            "write not yet visible: first edge only reaches stage 1"
        );
        // Two-stage synchronizer: the pointer lands in the comparator at the
        // second read edge after the write, and the word comes out there.
        let (_, r1) = b.step(None);
        assert_eq!(r1.word, Some(Word(42)));
        assert!(!r1.empty);
    }

    #[test]
    fn depth_four_rejects_fifth_unconsumed_write() {
        let mut b = Bench::new(4);
        // Suppress reads by reading from a fifo that never reports non-empty:
        // we only call write cycles here.
        let mut accepted = 0;
        for i in 0..8u64 {
            b.edge += 1;
            let t = SimTime(b.edge * 1000);
            let mut ctx = EdgeCtx::new(0, b.edge, t, &mut b.env);
            let w = b.fifo.write_cycle(Some(Word(i)), &mut ctx);
            if w.accepted {
                accepted += 1;
            }
        }
        // Binary-shadow oracle: exactly `depth` words fit.
        assert_eq!(accepted, 4);
        assert_eq!(b.fifo.probe().occupancy, 4);
    }

    #[test]
    fn flags_recover_after_drain() {
        let mut b = Bench::new(4);
        // Fill with write cycles only.
        let mut full_seen = false;
        for i in 0..6u64 {
            b.edge += 1;
            let t = SimTime(b.edge * 1000);
            let mut ctx = EdgeCtx::new(0, b.edge, t, &mut b.env);
            let w = b.fifo.write_cycle(Some(Word(i)), &mut ctx);
            full_seen |= w.full;
        }
        assert!(full_seen);
        assert_eq!(b.fifo.probe().occupancy, 4);
        // Drain with read cycles only; then `full` must deassert once the
        // freed slots have synchronized back (it may lag — conservative,
        // never wrong).
        let mut drained = Vec::new();
        for _ in 0..8 {
            b.edge += 1;
            let t = SimTime(b.edge * 1000 + 500);
            let mut ctx = EdgeCtx::new(1, b.edge, t, &mut b.env);
            if let Some(word) = b.fifo.read_cycle(true, &mut ctx).word {
                drained.push(word.0);
            }
        }
        assert_eq!(drained, vec![0, 1, 2, 3]);
        for _ in 0..4 {
            b.edge += 1;
            let t = SimTime(b.edge * 1000);
            let mut ctx = EdgeCtx::new(0, b.edge, t, &mut b.env);
            let w = b.fifo.write_cycle(None, &mut ctx);
            if !w.full {
                return;
            }
        }
        panic!("full never deasserted after drain");
    }

    #[test]
    fn torn_binary_capture_misreads_occupancy() {
        // Hand-constructed torn capture: pointer 0111 -> 1000 crossing in
        // plain binary with all four bits resolving to 1 reads as 1111,
        // an occupancy error of 8.
        let width = 4u8;
        let mask = (1u64 << width) - 1;
        let true_old = 0b0111u64;
        let true_new = 0b1000u64;
        let torn = 0b1111u64;
        assert_eq!(true_new.wrapping_sub(true_old) & mask, 1);
        let misread = torn.wrapping_sub(true_old) & mask;
        assert_eq!(misread, 8);
        // The same capture in Gray code differs in exactly one bit, so any
        // per-bit resolution yields old or new, never a third value.
        let g_old = bin_to_gray(true_old, width).unwrap().bits();
        let g_new = bin_to_gray(true_new, width).unwrap().bits();
        assert_eq!((g_old ^ g_new).count_ones(), 1);
    }

    #[test]
    fn synchronous_aligned_binary_fifo_behaves() {
        // The unsafe design is only unsafe under asynchrony; on one aligned
        // grid with ideal sampling it is an ordinary FIFO.
        let mut env = SimEnv::new(3);
        env.meta_enabled = false;
        let mut fifo = UnsafeBinaryFifo::new(&cfg(4));
        let mut sent = 0u64;
        let mut got = Vec::new();
        for edge in 1..40u64 {
            let t = SimTime(edge * 1000);
            let mut ctx = EdgeCtx::new(0, edge, t, &mut env);
            if fifo.write_cycle(Some(Word(sent)), &mut ctx).accepted {
                sent += 1;
            }
            let t = SimTime(edge * 1000 + 500);
            let mut ctx = EdgeCtx::new(1, edge, t, &mut env);
            if let Some(w) = fifo.read_cycle(true, &mut ctx).word {
                got.push(w.0);
            }
        }
        assert!(got.len() > 10);
        assert_eq!(got, (0..got.len() as u64).collect::<Vec<_>>());
    }
}
