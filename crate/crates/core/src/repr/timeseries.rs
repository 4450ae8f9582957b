use alloc::vec::Vec;

use crate::flow::{Direction, Flow};

/// Largest size stored in a time-series entry (11 bits are enough).
pub const TS_SIZE_CAP: u16 = 1500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsEntry {
    pub time: f32,
    pub size: u16,
    pub direction: Direction,
}

impl TsEntry {
    const PAD: TsEntry = TsEntry {
        time: 0.0,
        size: 0,
        direction: Direction::Forward,
    };
}

/// The first `N` packets of a flow, zero-padded at the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    entries: Vec<TsEntry>,
    filled: usize,
}

impl TimeSeries {
    pub fn build(flow: &Flow, n: usize) -> Self {
        let mut entries: Vec<TsEntry> = flow
            .packets
            .iter()
            .take(n)
            .map(|p| TsEntry {
                time: p.time as f32,
                size: p.size.min(TS_SIZE_CAP),
                direction: p.direction,
            })
            .collect();
        let filled = entries.len();
        entries.resize(n, TsEntry::PAD);
        TimeSeries { entries, filled }
    }

    pub fn entries(&self) -> &[TsEntry] {
        &self.entries
    }

    /// Number of real (non-padding) entries.
    pub fn filled(&self) -> usize {
        self.filled
    }

    /// `[t_0, s_0, d_0, t_1, ...]`.
    pub fn features(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| [f64::from(e.time), f64::from(e.size), f64::from(e.direction.bit())])
            .collect()
    }

    /// 6 bytes per entry: f32 time, then a u16 holding the size in the low
    /// 11 bits and the direction in the top bit (both little-endian).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 * self.entries.len());
        for e in &self.entries {
            out.extend_from_slice(&e.time.to_le_bytes());
            let packed = (e.size & 0x07ff) | (u16::from(e.direction.bit()) << 15);
            out.extend_from_slice(&packed.to_le_bytes());
        }
        out
    }
}
