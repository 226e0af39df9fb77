//! Self-timed micropipeline FIFO.
//!
//! No clock anywhere inside: each stage passes its word forward as soon as
//! the next stage is empty, after a fixed forward latency, and the freed
//! bubble enables the stage behind it after a backward latency. The
//! move-when-neighbour-agrees rule is the behavioral form of a C-element
//! rendezvous (see [`c_element`](crate::elements::c_element)) between
//! adjacent stage controllers.
//!
//! Internal progress is event-driven: cycle calls and ripple handlers queue
//! `(delay, stage)` requests that the harness schedules on the event queue.

use crate::elements::EdgeCtx;

use super::{CycleFifo, FifoConfig, FifoProbe, ReadOut, Word, WriteOut};

pub struct SelfTimedFifo {
    stages: Vec<Option<Word>>,
    forward_delay: u64,
    backward_delay: u64,
    pending: Vec<(u64, u32)>,
    // Shadow counts for verification.
    puts: u64,
    gets: u64,
}

impl SelfTimedFifo {
    pub fn new(cfg: &FifoConfig) -> Self {
        SelfTimedFifo {
            stages: vec![None; cfg.depth as usize],
            forward_delay: cfg.forward_delay,
            backward_delay: cfg.backward_delay,
            pending: Vec::new(),
            puts: 0,
            gets: 0,
        }
    }

    pub fn occupancy(&self) -> u64 {
        self.stages.iter().filter(|s| s.is_some()).count() as u64
    }

    /// Ripple-through latency of an otherwise empty pipeline: one forward
    /// hop per stage boundary.
    pub fn ripple_through_ps(&self) -> u64 {
        (self.stages.len() as u64 - 1) * self.forward_delay
    }
}

impl CycleFifo for SelfTimedFifo {
    /// Put interface: the producer can insert only while the input stage
    /// holds a bubble. Deeper bubbles become visible here only after they
    /// ripple backward — that is the micropipeline's backpressure.
    fn write_cycle(&mut self, offer: Option<Word>, _ctx: &mut EdgeCtx) -> WriteOut {
        let full = self.stages[0].is_some();
        let mut accepted = false;
        if let Some(word) = offer {
            if !full {
                self.stages[0] = Some(word);
                self.puts += 1;
                self.pending.push((self.forward_delay, 0));
                accepted = true;
            }
        }
        WriteOut { accepted, full }
    }

    /// Get interface: take the output stage's word, freeing a bubble that
    /// ripples backward.
    fn read_cycle(&mut self, take: bool, _ctx: &mut EdgeCtx) -> ReadOut {
        let last = self.stages.len() - 1;
        let empty = self.stages[last].is_none();
        let word = if take { self.stages[last].take() } else { None };
        if word.is_some() {
            self.gets += 1;
            if last > 0 {
                self.pending.push((self.backward_delay, (last - 1) as u32));
            }
        }
        ReadOut { word, empty }
    }

    /// Stage `tag` tries to hand its word forward. Rendezvous: data present
    /// here AND bubble ahead; otherwise hold (the blocked case is re-enabled
    /// by whichever event frees the stage ahead).
    fn handle_internal(&mut self, tag: u32, _ctx: &mut EdgeCtx) {
        let i = tag as usize;
        if i + 1 >= self.stages.len() {
            return;
        }
        if self.stages[i].is_some() && self.stages[i + 1].is_none() {
            self.stages[i + 1] = self.stages[i].take();
            if i + 2 < self.stages.len() {
                self.pending.push((self.forward_delay, (i + 1) as u32));
            }
            if i > 0 {
                self.pending.push((self.backward_delay, (i - 1) as u32));
            }
        }
    }

    fn take_internal(&mut self) -> Vec<(u64, u32)> {
        std::mem::take(&mut self.pending)
    }

    fn probe(&self) -> FifoProbe {
        FifoProbe {
            wptr: self.puts,
            rptr: self.gets,
            occupancy: self.occupancy(),
            ..FifoProbe::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::SimEnv;
    use crate::kernel::{EventKind, SimTime, Simulator};

    #[derive(Clone, Copy, Debug)]
    struct Ripple(u32);

    impl EventKind for Ripple {
        fn label(&self) -> &'static str {
            "ripple"
        }
    }

    fn drain_internal(f: &mut SelfTimedFifo, sim: &mut Simulator<Ripple>) {
        for (delay, tag) in f.take_internal() {
            sim.schedule(SimTime(sim.now().0 + delay), Ripple(tag))
                .unwrap();
        }
    }

    fn settle(f: &mut SelfTimedFifo, sim: &mut Simulator<Ripple>, env: &mut SimEnv) {
        sim.run_until(SimTime::MAX, |sim, ev| {
            let mut ctx = EdgeCtx::new(9, 0, ev.time, env);
            f.handle_internal(ev.kind.0, &mut ctx);
            for (delay, tag) in f.take_internal() {
                sim.schedule(SimTime(ev.time.0 + delay), Ripple(tag))?;
            }
            Ok(())
        })
        .unwrap();
    }

    fn cfg(depth: u64) -> FifoConfig {
        FifoConfig {
            depth,
            forward_delay: 120,
            backward_delay: 80,
            ..FifoConfig::default()
        }
    }

    #[test]
    fn word_ripples_to_output_after_summed_stage_delays() {
        let mut f = SelfTimedFifo::new(&cfg(4));
        let mut sim = Simulator::<Ripple>::new();
        let mut env = SimEnv::new(1);
        let mut ctx = EdgeCtx::new(0, 1, SimTime(0), &mut env);
        assert!(f.write_cycle(Some(Word(9)), &mut ctx).accepted);
        drain_internal(&mut f, &mut sim);
        // Track when the output stage first fills.
        let mut arrival = None;
        sim.run_until(SimTime::MAX, |sim, ev| {
            let mut ctx = EdgeCtx::new(9, 0, ev.time, &mut env);
            f.handle_internal(ev.kind.0, &mut ctx);
            for (delay, tag) in f.take_internal() {
                sim.schedule(SimTime(ev.time.0 + delay), Ripple(tag))?;
            }
            if arrival.is_none() && f.stages.last().unwrap().is_some() {
                arrival = Some(ev.time);
            }
            Ok(())
        })
        .unwrap();
        // Oracle: sum of the configured per-hop delays.
        assert_eq!(arrival, Some(SimTime(f.ripple_through_ps())));
        let mut ctx = EdgeCtx::new(1, 1, sim.now(), &mut env);
        assert_eq!(f.read_cycle(true, &mut ctx).word, Some(Word(9)));
    }

    #[test]
    fn full_pipeline_blocks_puts_until_a_get() {
        let mut f = SelfTimedFifo::new(&cfg(4));
        let mut sim = Simulator::<Ripple>::new();
        let mut env = SimEnv::new(2);
        let mut inserted = 0u64;
        for i in 0..10u64 {
            let mut ctx = EdgeCtx::new(0, i, sim.now(), &mut env);
            if f.write_cycle(Some(Word(i)), &mut ctx).accepted {
                inserted += 1;
            }
            drain_internal(&mut f, &mut sim);
            settle(&mut f, &mut sim, &mut env);
        }
        assert_eq!(inserted, 4, "every stage holds a word");
        let mut ctx = EdgeCtx::new(0, 99, sim.now(), &mut env);
        assert!(!f.write_cycle(Some(Word(99)), &mut ctx).accepted);
        // One get frees one slot.
        let mut ctx = EdgeCtx::new(1, 99, sim.now(), &mut env);
        assert_eq!(f.read_cycle(true, &mut ctx).word, Some(Word(0)));
        drain_internal(&mut f, &mut sim);
        settle(&mut f, &mut sim, &mut env);
        let mut ctx = EdgeCtx::new(0, 100, sim.now(), &mut env);
        assert!(f.write_cycle(Some(Word(4)), &mut ctx).accepted);
    }

    #[test]
    fn interleaved_puts_and_gets_preserve_order() {
        let mut f = SelfTimedFifo::new(&cfg(8));
        let mut sim = Simulator::<Ripple>::new();
        let mut env = SimEnv::new(3);
        let mut next = 0u64;
        let mut got = Vec::new();
        for round in 0..200u64 {
            let mut ctx = EdgeCtx::new(0, round, sim.now(), &mut env);
            if round % 3 != 2 && f.write_cycle(Some(Word(next)), &mut ctx).accepted {
                next += 1;
            }
            drain_internal(&mut f, &mut sim);
            settle(&mut f, &mut sim, &mut env);
            let mut ctx = EdgeCtx::new(1, round, sim.now(), &mut env);
            if let Some(w) = f.read_cycle(true, &mut ctx).word {
                got.push(w.0);
            }
            drain_internal(&mut f, &mut sim);
            settle(&mut f, &mut sim, &mut env);
        }
        assert!(got.len() > 50);
        assert_eq!(
            got,
            (0..got.len() as u64).collect::<Vec<_>>(),
            "output order = input order"
        );
    }
}
