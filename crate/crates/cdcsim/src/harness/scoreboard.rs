//! Sent-vs-received ledger.
//!
//! The producer embeds a strictly increasing sequence number in every word;
//! the scoreboard replays the delivery stream against it and classifies the
//! first deviation. Flags and pointers may be as stale as they like — this
//! is the ground truth the designs are judged against.

use std::fmt;

/// Integrity classification of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    /// An accepted word never arrived (and is not still buffered).
    Loss {
        seq: u64,
    },
    /// A sequence number arrived more than once.
    Duplicate {
        seq: u64,
    },
    /// A later word overtook an earlier one.
    Reorder {
        first: u64,
        second: u64,
    },
    /// A delivered payload that was never sent (e.g. a never-written slot).
    Corrupt {
        payload: u64,
    },
    /// The run stopped making progress with words still buffered.
    Stalled {
        delivered: u64,
    },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Ok => write!(f, "ok"),
            Verdict::Loss { seq } => write!(f, "loss(seq={seq})"),
            Verdict::Duplicate { seq } => write!(f, "duplicate(seq={seq})"),
            Verdict::Reorder { first, second } => write!(f, "reorder({first};{second})"),
            Verdict::Corrupt { payload } => write!(f, "corrupt(payload={payload:#x})"),
            Verdict::Stalled { delivered } => write!(f, "stalled(delivered={delivered})"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SentRecord {
    pub seq: u64,
    /// Write-domain edge count when the word was committed.
    pub commit_tx_edge: u64,
    /// Read-domain edges dispatched at commit time; delivery latency in
    /// receiver cycles is measured from here.
    pub commit_rx_edge: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Scoreboard {
    sent: Vec<SentRecord>,
    received: Vec<u64>,
}

impl Scoreboard {
    pub fn new() -> Self {
        Scoreboard::default()
    }

    pub fn record_sent(&mut self, seq: u64, commit_tx_edge: u64, commit_rx_edge: u64) {
        debug_assert_eq!(
            seq,
            self.sent.len() as u64,
            "producer sequence must be gapless"
        );
        self.sent.push(SentRecord {
            seq,
            commit_tx_edge,
            commit_rx_edge,
        });
    }

    pub fn record_received(&mut self, payload: u64) {
        self.received.push(payload);
    }

    pub fn sent_count(&self) -> u64 {
        self.sent.len() as u64
    }

    pub fn received_count(&self) -> u64 {
        self.received.len() as u64
    }

    pub fn sent_record(&self, seq: u64) -> Option<&SentRecord> {
        self.sent.get(seq as usize)
    }

    /// Delivered payloads in delivery order.
    pub fn received_seqs(&self) -> &[u64] {
        &self.received
    }

    /// Classifies the run. `residual_occupancy` distinguishes words still
    /// buffered at shutdown (stall) from words that truly vanished (loss).
    pub fn verdict(&self, stalled: bool, residual_occupancy: u64) -> Verdict {
        let sent = self.sent.len() as u64;
        let mut expected = 0u64;
        for &payload in &self.received {
            if payload >= sent {
                return Verdict::Corrupt { payload };
            }
            if payload == expected {
                expected += 1;
            } else if payload < expected {
                return Verdict::Duplicate { seq: payload };
            } else {
                // `expected` was skipped; if it shows up later the stream
                // reordered, otherwise it is gone.
                let later = self.received.contains(&expected);
                return if later {
                    Verdict::Reorder {
                        first: payload,
                        second: expected,
                    }
                } else {
                    Verdict::Loss { seq: expected }
                };
            }
        }
        if expected < sent {
            if stalled && residual_occupancy > 0 {
                return Verdict::Stalled {
                    delivered: self.received.len() as u64,
                };
            }
            return Verdict::Loss { seq: expected };
        }
        Verdict::Ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board(sent: u64, received: &[u64]) -> Scoreboard {
        let mut b = Scoreboard::new();
        for s in 0..sent {
            b.record_sent(s, s, s);
        }
        for &r in received {
            b.record_received(r);
        }
        b
    }

    #[test]
    fn clean_stream_is_ok() {
        assert_eq!(board(4, &[0, 1, 2, 3]).verdict(false, 0), Verdict::Ok);
        assert_eq!(board(0, &[]).verdict(false, 0), Verdict::Ok);
    }

    #[test]
    fn classifications() {
        assert_eq!(
            board(4, &[0, 1, 3]).verdict(false, 0),
            Verdict::Loss { seq: 2 }
        );
        assert_eq!(
            board(4, &[0, 1, 1, 2]).verdict(false, 0),
            Verdict::Duplicate { seq: 1 }
        );
        assert_eq!(
            board(4, &[0, 2, 1, 3]).verdict(false, 0),
            Verdict::Reorder {
                first: 2,
                second: 1
            }
        );
        assert_eq!(
            board(2, &[0, u64::MAX]).verdict(false, 0),
            Verdict::Corrupt { payload: u64::MAX }
        );
    }

    #[test]
    fn undelivered_tail() {
        // Still buffered at stall: stalled, not lost.
        assert_eq!(
            board(4, &[0, 1]).verdict(true, 2),
            Verdict::Stalled { delivered: 2 }
        );
        // Nothing buffered: the words are gone.
        assert_eq!(board(4, &[0, 1]).verdict(true, 0), Verdict::Loss { seq: 2 });
        assert_eq!(
            board(4, &[0, 1]).verdict(false, 0),
            Verdict::Loss { seq: 2 }
        );
    }
}
