//! Reflected-binary Gray code and the pointer full/empty comparisons built
//! on it.
//!
//! A Gray counter changes exactly one bit per increment, so a value sampled
//! while in flight between two clock domains is at worst one increment
//! stale — it can never be torn into a value the counter did not hold. FIFO
//! pointers carry one extra wrap bit beyond `log2(depth)` so that a full
//! buffer and an empty buffer are distinguishable.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrayCodeError {
    #[error("width {0} out of range (1..=63)")]
    WidthOutOfRange(u8),
    #[error("value {value:#x} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: u8 },
}

/// A Gray-coded value of a fixed bit width.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GrayValue {
    bits: u64,
    width: u8,
}

impl GrayValue {
    pub fn from_bits(bits: u64, width: u8) -> Result<Self, GrayCodeError> {
        if width == 0 || width > 63 {
            return Err(GrayCodeError::WidthOutOfRange(width));
        }
        if bits >> width != 0 {
            return Err(GrayCodeError::ValueTooWide { value: bits, width });
        }
        Ok(GrayValue { bits, width })
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn width(self) -> u8 {
        self.width
    }
}

/// Encodes `x` as reflected binary code: `g = x ^ (x >> 1)`.
///
/// Bijective over `[0, 2^width)`; consecutive inputs (mod `2^width`) map to
/// outputs differing in exactly one bit.
pub fn bin_to_gray(x: u64, width: u8) -> Result<GrayValue, GrayCodeError> {
    if width == 0 || width > 63 {
        return Err(GrayCodeError::WidthOutOfRange(width));
    }
    if x >> width != 0 {
        return Err(GrayCodeError::ValueTooWide { value: x, width });
    }
    Ok(GrayValue {
        bits: x ^ (x >> 1),
        width,
    })
}

/// Inverse of [`bin_to_gray`]: prefix-XOR decode.
pub fn gray_to_bin(g: GrayValue) -> u64 {
    let mut x = g.bits;
    let mut shift = 1;
    while shift < g.width as u32 {
        x ^= x >> shift;
        shift <<= 1;
    }
    x
}

/// Full test on Gray pointers carrying a wrap bit.
///
/// True iff the write pointer equals the synchronized read pointer with the
/// top two bits inverted and all lower bits equal — which, for reflected
/// binary code with `width = log2(depth) + 1`, holds exactly when the binary
/// distance is `depth`. Validated against the binary-shadow oracle rather
/// than taken on authority (see tests).
///
/// Pointers must share a width of at least 2.
pub fn gray_full(wptr: GrayValue, rptr_synced: GrayValue) -> bool {
    assert_eq!(wptr.width, rptr_synced.width, "pointer width mismatch");
    assert!(wptr.width >= 2, "wrap-bit comparison needs width >= 2");
    let flip_mask = 0b11 << (wptr.width - 2);
    wptr.bits == rptr_synced.bits ^ flip_mask
}

/// Empty test: bit-for-bit pointer equality.
pub fn gray_empty(rptr: GrayValue, wptr_synced: GrayValue) -> bool {
    assert_eq!(rptr.width, wptr_synced.width, "pointer width mismatch");
    rptr.bits == wptr_synced.bits
}

/// Tally from one width of [`exhaustive_check`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GrayCheckReport {
    pub width: u8,
    pub values: u64,
    pub roundtrip_failures: u64,
    pub single_bit_failures: u64,
    pub flag_oracle_failures: u64,
}

impl GrayCheckReport {
    pub fn failures(&self) -> u64 {
        self.roundtrip_failures + self.single_bit_failures + self.flag_oracle_failures
    }
}

/// Exhaustively verifies one pointer width against first principles:
/// encode/decode bijectivity, the single-bit-change property, and agreement
/// of the full/empty bit tests with a binary-shadow occupancy oracle.
///
/// The flag check covers every pointer pair: for a fixed read pointer,
/// bijectivity (verified first) means exactly one write pointer matches each
/// flag's bit pattern, so checking that the pattern holds at binary distance
/// `2^(width-1)` (full) and `0` (empty) — and decodes to nothing else — is
/// equivalent to enumerating all `4^width` pairs while staying linear.
pub fn exhaustive_check(width: u8) -> Result<GrayCheckReport, GrayCodeError> {
    if width < 2 {
        return Err(GrayCodeError::WidthOutOfRange(width));
    }
    let n = 1u64 << width;
    let half = n / 2;
    let mask = n - 1;
    let mut report = GrayCheckReport {
        width,
        values: n,
        ..GrayCheckReport::default()
    };
    let mut seen = vec![false; n as usize];
    for x in 0..n {
        let g = bin_to_gray(x, width)?;
        if gray_to_bin(g) != x {
            report.roundtrip_failures += 1;
        }
        if std::mem::replace(&mut seen[g.bits() as usize], true) {
            report.roundtrip_failures += 1;
        }
        let succ = bin_to_gray((x + 1) & mask, width)?;
        if (g.bits() ^ succ.bits()).count_ones() != 1 {
            report.single_bit_failures += 1;
        }
    }
    for r in 0..n {
        let gr = bin_to_gray(r, width)?;
        // Full must assert exactly at distance `half`.
        let gw_full = bin_to_gray((r + half) & mask, width)?;
        if !gray_full(gw_full, gr) {
            report.flag_oracle_failures += 1;
        }
        // The bit pattern decodes back to that unique write pointer.
        let pattern = GrayValue::from_bits(gr.bits() ^ (0b11 << (width - 2)), width)?;
        if gray_to_bin(pattern) != (r + half) & mask {
            report.flag_oracle_failures += 1;
        }
        // Empty must assert exactly at distance zero.
        if !gray_empty(gr, gr) {
            report.flag_oracle_failures += 1;
        }
        let gw_next = bin_to_gray((r + 1) & mask, width)?;
        if gray_empty(gr, gw_next) {
            report.flag_oracle_failures += 1;
        }
    }
    Ok(report)
}
