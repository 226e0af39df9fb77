//! Per-run measurements.
//!
//! Everything here is kept in exact integers so that identical
//! configurations produce bit-identical metrics; means are derived on
//! demand. Latency is counted in receiver cycles (delivery edge minus the
//! receiver edge at or before commit) and throughput is normalized to the
//! slower domain — the only rate at which "full throughput" means anything.

use std::collections::BTreeMap;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub delivered: u64,
    pub latency_sum_rx_cycles: u64,
    pub latency_hist: BTreeMap<u64, u64>,
    /// Slower-domain edge count at first/last delivery, for throughput.
    pub first_delivery_slow_edge: Option<u64>,
    pub last_delivery_slow_edge: Option<u64>,
    pub tx_edges: u64,
    pub rx_edges: u64,
    pub metastable_events: u64,
    pub sync_escapes: u64,
    pub forced_violations: u64,
    pub clock_pauses: u64,
    pub max_pause_ps: u64,
    /// Cycle-by-cycle checks: a flag read optimistic (full=false at
    /// occupancy=depth, or empty=false at occupancy=0).
    pub conservatism_violations: u64,
    /// A synchronized pointer view that was not a value the true pointer
    /// recently held.
    pub staleness_violations: u64,
    /// A pausible-side remote-pointer estimate that ran ahead of the truth.
    pub estimate_violations: u64,
    /// Pointer-update round trip, summed per delivered word: the forward
    /// leg is the word's crossing latency in receiver cycles, the return
    /// leg counts write-domain edges until the writer's synced view covers
    /// the read (Gray design only).
    pub ptr_round_trip_sum_tx_cycles: u64,
    pub ptr_round_trip_samples: u64,
}

impl Metrics {
    pub fn mean_latency_rx_cycles(&self) -> f64 {
        if self.delivered == 0 {
            return 0.0;
        }
        self.latency_sum_rx_cycles as f64 / self.delivered as f64
    }

    /// Words per slower-domain cycle over the span between first and last
    /// delivery. Needs at least two deliveries to be meaningful.
    pub fn throughput_words_per_slow_cycle(&self) -> f64 {
        match (self.first_delivery_slow_edge, self.last_delivery_slow_edge) {
            (Some(first), Some(last)) if last > first && self.delivered >= 2 => {
                (self.delivered - 1) as f64 / (last - first) as f64
            }
            _ => 0.0,
        }
    }

    pub fn mean_ptr_round_trip_tx_cycles(&self) -> Option<f64> {
        if self.ptr_round_trip_samples == 0 {
            return None;
        }
        Some(self.ptr_round_trip_sum_tx_cycles as f64 / self.ptr_round_trip_samples as f64)
    }

    pub fn record_latency(&mut self, rx_cycles: u64) {
        self.latency_sum_rx_cycles += rx_cycles;
        *self.latency_hist.entry(rx_cycles).or_insert(0) += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_are_exact_ratios() {
        let mut m = Metrics {
            delivered: 4,
            ..Metrics::default()
        };
        for l in [1, 2, 1, 2] {
            m.record_latency(l);
        }
        assert_eq!(m.mean_latency_rx_cycles(), 1.5);
        assert_eq!(m.latency_hist.get(&1), Some(&2));
        assert_eq!(m.latency_hist.values().sum::<u64>(), m.delivered);
    }

    #[test]
    fn throughput_spans_deliveries() {
        let mut m = Metrics {
            delivered: 11,
            first_delivery_slow_edge: Some(100),
            last_delivery_slow_edge: Some(110),
            ..Metrics::default()
        };
        assert_eq!(m.throughput_words_per_slow_cycle(), 1.0);
        m.delivered = 1;
        assert_eq!(m.throughput_words_per_slow_cycle(), 0.0);
    }
}
