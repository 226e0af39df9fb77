//! Elastic buffer for mesochronous links.
//!
//! Between two clocks of the same frequency but arbitrary phase, a FIFO
//! initialized half-full absorbs skew in either direction: the steady-state
//! slack is `depth/2` slots each way, so the link tolerates any skew whose
//! magnitude stays below `depth/2` periods. [`elastic_link_run`] measures
//! exactly that boundary.

use std::collections::VecDeque;

use crate::elements::EdgeCtx;
use crate::kernel::{
    classify_relationship, ClockDomain, ClockRelationship, EventKind, SimTime, Simulator,
};

use super::{CycleFifo, FifoError, FifoProbe, ReadOut, Word, WriteOut};

pub struct ElasticFifo {
    ring: VecDeque<Word>,
    capacity: u64,
    puts: u64,
    gets: u64,
}

impl ElasticFifo {
    pub fn new(depth: u64) -> Self {
        ElasticFifo {
            ring: VecDeque::with_capacity(depth as usize),
            capacity: depth,
            puts: 0,
            gets: 0,
        }
    }

    /// A buffer pre-loaded with the stream's first words, as a link
    /// endpoint wants it: half-full so skew can be absorbed symmetrically.
    pub fn half_full(depth: u64, first_words: impl IntoIterator<Item = Word>) -> Self {
        let mut f = ElasticFifo::new(depth);
        for w in first_words.into_iter().take(depth as usize / 2) {
            f.ring.push_back(w);
            f.puts += 1;
        }
        f
    }

    pub fn len(&self) -> u64 {
        self.ring.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }
}

impl CycleFifo for ElasticFifo {
    fn write_cycle(&mut self, offer: Option<Word>, _ctx: &mut EdgeCtx) -> WriteOut {
        let full = self.ring.len() as u64 >= self.capacity;
        let mut accepted = false;
        if let Some(word) = offer {
            if !full {
                self.ring.push_back(word);
                self.puts += 1;
                accepted = true;
            }
        }
        WriteOut { accepted, full }
    }

    fn read_cycle(&mut self, take: bool, _ctx: &mut EdgeCtx) -> ReadOut {
        let empty = self.ring.is_empty();
        let word = if take { self.ring.pop_front() } else { None };
        if word.is_some() {
            self.gets += 1;
        }
        ReadOut { word, empty }
    }

    fn probe(&self) -> FifoProbe {
        FifoProbe {
            wptr: self.puts,
            rptr: self.gets,
            occupancy: self.ring.len() as u64,
            ..FifoProbe::default()
        }
    }
}

/// Outcome of one skewed mesochronous streaming run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ElasticLinkReport {
    /// Insertions refused because the buffer was full (words lost).
    pub overflows: u64,
    /// Consumer demands that found the buffer empty mid-stream.
    pub underflows: u64,
    pub delivered: u64,
}

impl ElasticLinkReport {
    pub fn failures(&self) -> u64 {
        self.overflows + self.underflows
    }
}

/// The slack bound of a half-full elastic buffer: skew magnitudes strictly
/// below `depth/2` periods pass without error.
pub fn elastic_slack_bound_ps(depth: u64, period_ps: u64) -> u64 {
    depth / 2 * period_ps
}

#[derive(Clone, Copy, Debug)]
enum LinkEvent {
    TxEdge,
    RxEdge,
}

impl EventKind for LinkEvent {
    fn label(&self) -> &'static str {
        match self {
            LinkEvent::TxEdge => "tx-edge",
            LinkEvent::RxEdge => "rx-edge",
        }
    }
}

/// Streams `n_words` across a half-full elastic buffer between two
/// same-period clocks whose relative skew is `skew_ps` (positive: consumer
/// lags; negative: consumer leads). Failures are data, not errors: the
/// report counts every overflow and underflow.
pub fn elastic_link_run(
    tx: &ClockDomain,
    rx: &ClockDomain,
    skew_ps: i64,
    depth: u64,
    n_words: u64,
    seed: u64,
) -> Result<ElasticLinkReport, FifoError> {
    if classify_relationship(tx, rx) == ClockRelationship::Heterochronous {
        return Err(FifoError::InvalidConfig(
            "elastic link endpoints must share a nominal period".into(),
        ));
    }
    if depth < 2 || !depth.is_power_of_two() {
        return Err(FifoError::InvalidConfig(
            "depth must be a power of two >= 2".into(),
        ));
    }
    // Express negative skew by delaying the producer instead.
    let (mut txd, mut rxd) = (*tx, *rx);
    if skew_ps >= 0 {
        rxd = rxd.translated(skew_ps as u64);
    } else {
        txd = txd.translated(skew_ps.unsigned_abs());
    }

    let prefill = depth / 2;
    let mut fifo = ElasticFifo::half_full(depth, (0..prefill).map(Word));
    let mut report = ElasticLinkReport::default();
    let mut produced = prefill.min(n_words);
    let mut consumed = 0u64;

    let mut sim = Simulator::<LinkEvent>::new();
    let mut tx_src = crate::kernel::ClockSource::new(txd, seed);
    let mut rx_src = crate::kernel::ClockSource::new(rxd, seed);
    sim.schedule(tx_src.next_time(), LinkEvent::TxEdge)
        .expect("t0");
    sim.schedule(rx_src.next_time(), LinkEvent::RxEdge)
        .expect("t0");

    let mut env = crate::elements::SimEnv::new(seed);
    sim.run_until(SimTime::MAX, |sim, ev| {
        match ev.kind {
            LinkEvent::TxEdge => {
                let (idx, t) = tx_src.advance();
                let mut ctx = EdgeCtx::new(txd.id, idx, t, &mut env);
                if produced < n_words {
                    let out = fifo.write_cycle(Some(Word(produced)), &mut ctx);
                    if out.accepted {
                        produced += 1;
                    } else {
                        // Source-timed stream: an unaccepted word is gone.
                        report.overflows += 1;
                        produced += 1;
                    }
                    sim.schedule(tx_src.next_time(), LinkEvent::TxEdge)?;
                }
            }
            LinkEvent::RxEdge => {
                let (idx, t) = rx_src.advance();
                let mut ctx = EdgeCtx::new(rxd.id, idx, t, &mut env);
                let out = fifo.read_cycle(true, &mut ctx);
                match out.word {
                    Some(_) => {
                        report.delivered += 1;
                        consumed += 1;
                    }
                    None => {
                        if produced < n_words {
                            // Demand unmet mid-stream.
                            report.underflows += 1;
                        }
                    }
                }
                let drained = produced >= n_words && fifo.is_empty();
                let _ = consumed;
                if !drained {
                    sim.schedule(rx_src.next_time(), LinkEvent::RxEdge)?;
                }
            }
        }
        Ok(())
    })
    .map_err(|e| FifoError::InvalidConfig(e.to_string()))?;

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clocks() -> (ClockDomain, ClockDomain) {
        (
            ClockDomain::new(0, 1000),
            ClockDomain::new(1, 1000).with_phase(400),
        )
    }

    #[test]
    fn zero_skew_is_clean() {
        let (tx, rx) = clocks();
        let r = elastic_link_run(&tx, &rx, 0, 8, 50_000, 7).unwrap();
        assert_eq!(r.failures(), 0);
        assert_eq!(r.delivered, 50_000);
    }

    #[test]
    fn skew_within_slack_is_clean_both_directions() {
        let (tx, rx) = clocks();
        let bound = elastic_slack_bound_ps(8, 1000) as i64;
        for skew in [bound - 1000, -(bound - 1000), 2500, -2500] {
            let r = elastic_link_run(&tx, &rx, skew, 8, 50_000, 7).unwrap();
            assert_eq!(r.failures(), 0, "skew {skew}");
            assert_eq!(r.delivered, 50_000, "skew {skew}");
        }
    }

    #[test]
    fn skew_beyond_slack_fails() {
        let (tx, rx) = clocks();
        let bound = elastic_slack_bound_ps(8, 1000) as i64;
        let r = elastic_link_run(&tx, &rx, bound * 3 / 2, 8, 50_000, 7).unwrap();
        assert!(
            r.overflows >= 1,
            "consumer lagging past slack must overflow"
        );
        let r = elastic_link_run(&tx, &rx, -bound * 3 / 2, 8, 50_000, 7).unwrap();
        assert!(
            r.underflows >= 1,
            "consumer leading past slack must underflow"
        );
    }

    #[test]
    fn heterochronous_endpoints_rejected() {
        let tx = ClockDomain::new(0, 1000);
        let rx = ClockDomain::new(1, 713);
        assert!(elastic_link_run(&tx, &rx, 0, 8, 100, 1).is_err());
    }
}
