//! Pausible bisynchronous FIFO: pointer updates cross as two-phase toggles
//! through pausible clocking.
//!
//! Every write toggles the next increment line round-robin; every read
//! toggles the paired acknowledge line. An acknowledge arriving back at the
//! writer both returns the pair's credit and advances the writer's
//! conservative estimate of the read pointer. The receiving clock, not the
//! receiving flop, absorbs unsafe arrival phases (see
//! [`PausibleClock`](crate::elements::PausibleClock)), so no sampling here
//! can go metastable.
//!
//! Wire reuse is safe by construction: increment `n` can only be sent after
//! acknowledge `n - credit_pairs` returned, and acknowledge `n` can only be
//! sent after increment `n` was consumed. The [`TwoPhaseChannel`] state
//! asserts this on every toggle.

use crate::elements::{ChannelSide, EdgeCtx, FlopTimings, ToggleLink, TwoPhaseChannel};

use super::{CycleFifo, FifoConfig, FifoProbe, PortSide, ReadOut, Word, WriteOut};

pub struct PausibleFifo {
    depth: u64,
    mem: Vec<Word>,
    // Local pointers, plain binary; they never cross domains.
    wptr: u64,
    rptr: u64,
    /// One two-phase loop per credit: req = increment wire (write->read),
    /// ack = the paired credit return.
    inc_channels: Vec<TwoPhaseChannel>,
    /// One two-phase loop per credit for read-pointer updates (read->write).
    ack_channels: Vec<TwoPhaseChannel>,
    inc_link: ToggleLink,
    ack_link: ToggleLink,
    /// Acknowledges sampled at the previous write edge. Credit state lives
    /// in registers: a toggle sampled at edge `k` enables a write at `k+1`,
    /// which is what makes the single-credit round trip genuinely longer
    /// than one slow cycle.
    staged_acks: Vec<usize>,
    /// Writer's view of the read pointer: acknowledges committed. Always at
    /// or behind the true read pointer.
    writer_rptr_est: u64,
    /// Reader's view of the write pointer: increments consumed. Always at or
    /// behind the true write pointer.
    reader_wptr_est: u64,
    next_inc: usize,
    next_ack: usize,
    timings: FlopTimings,
}

impl PausibleFifo {
    pub fn new(cfg: &FifoConfig) -> Self {
        PausibleFifo {
            depth: cfg.depth,
            mem: vec![Word::SENTINEL; cfg.depth as usize],
            wptr: 0,
            rptr: 0,
            inc_channels: vec![TwoPhaseChannel::new(); cfg.credit_pairs],
            ack_channels: vec![TwoPhaseChannel::new(); cfg.credit_pairs],
            inc_link: ToggleLink::new(),
            ack_link: ToggleLink::new(),
            staged_acks: Vec::new(),
            writer_rptr_est: 0,
            reader_wptr_est: 0,
            next_inc: 0,
            next_ack: 0,
            timings: cfg.timings,
        }
    }

    #[inline]
    fn slot(&self, ptr: u64) -> usize {
        (ptr & (self.depth - 1)) as usize
    }

    pub fn credits_free(&self) -> u32 {
        self.inc_channels.iter().filter(|c| !c.pending()).count() as u32
    }
}

impl CycleFifo for PausibleFifo {
    /// One (pausible) write-domain edge: consume acknowledges that have
    /// safely arrived, then commit the offered word if the round-robin
    /// increment line is free and the conservative occupancy estimate shows
    /// room.
    fn write_cycle(&mut self, offer: Option<Word>, ctx: &mut EdgeCtx) -> WriteOut {
        let edge = ctx.time();
        for ch in self.staged_acks.drain(..) {
            self.ack_channels[ch]
                .toggle(ChannelSide::Ack)
                .expect("acknowledge wire toggled out of turn");
            self.inc_channels[ch]
                .toggle(ChannelSide::Ack)
                .expect("credit returned for an increment never sent");
            self.writer_rptr_est += 1;
        }
        self.staged_acks = self.ack_link.take_arrived(edge, self.timings.setup);
        debug_assert!(self.wptr - self.writer_rptr_est <= self.depth);
        let full = self.wptr - self.writer_rptr_est >= self.depth;
        let mut accepted = false;
        if let Some(word) = offer {
            let ch = self.next_inc;
            if !full && !self.inc_channels[ch].pending() {
                let slot = self.slot(self.wptr);
                self.mem[slot] = word;
                self.wptr += 1;
                self.inc_channels[ch]
                    .toggle(ChannelSide::Req)
                    .expect("increment wire reused before credit returned");
                self.inc_link.send(ch, edge.offset(self.timings.clk_to_q));
                self.next_inc = (ch + 1) % self.inc_channels.len();
                accepted = true;
            }
        }
        WriteOut { accepted, full }
    }

    /// One (pausible) read-domain edge: consume increments that have safely
    /// arrived, then deliver a word if the estimate shows one, toggling the
    /// paired acknowledge line.
    fn read_cycle(&mut self, take: bool, ctx: &mut EdgeCtx) -> ReadOut {
        let edge = ctx.time();
        for ch in self.inc_link.take_arrived(edge, self.timings.setup) {
            // Consumption is counted here; the credit itself returns to the
            // writer with the acknowledge of the word's eventual read.
            let _ = ch;
            self.reader_wptr_est += 1;
        }
        let empty = self.reader_wptr_est == self.rptr;
        let mut word = None;
        if take && !empty {
            let ch = self.next_ack;
            word = Some(self.mem[self.slot(self.rptr)]);
            self.rptr += 1;
            self.ack_channels[ch]
                .toggle(ChannelSide::Req)
                .expect("acknowledge wire reused before the writer sampled it");
            self.ack_link.send(ch, edge.offset(self.timings.clk_to_q));
            self.next_ack = (ch + 1) % self.ack_channels.len();
        }
        ReadOut { word, empty }
    }

    fn probe(&self) -> FifoProbe {
        FifoProbe {
            wptr: self.wptr,
            rptr: self.rptr,
            occupancy: self.wptr - self.rptr,
            writer_rptr_estimate: Some(self.writer_rptr_est),
            reader_wptr_estimate: Some(self.reader_wptr_est),
            credits_free: Some(self.credits_free()),
            ..FifoProbe::default()
        }
    }

    fn incoming_link(&self, side: PortSide) -> Option<&ToggleLink> {
        match side {
            PortSide::Write => Some(&self.ack_link),
            PortSide::Read => Some(&self.inc_link),
        }
    }
}
