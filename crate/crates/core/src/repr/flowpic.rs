use alloc::vec;
use alloc::vec::Vec;

use crate::binning::{Binning, Domain};
use crate::error::Result;
use crate::flow::{Direction, Flow};

use super::Counter;

/// FlowPic: per direction, an `N x N` matrix whose cell `(i, j)` counts
/// packets in time bin `i` and size bin `j`. Uniform bins on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPic<C: Counter = u8> {
    n: usize,
    fwd: Vec<C>,
    bwd: Vec<C>,
}

impl<C: Counter> FlowPic<C> {
    pub fn build(flow: &Flow, n: usize, tau: f64, size_cap: f64) -> Result<Self> {
        let times = Binning::uniform(n, tau, Domain::Time)?;
        let sizes = Binning::uniform(n, size_cap, Domain::Size)?;
        let mut pic = FlowPic {
            n,
            fwd: vec![C::default(); n * n],
            bwd: vec![C::default(); n * n],
        };
        for p in flow.packets_before(tau) {
            let cell = times.map_value(p.time) * n + sizes.map_size(u32::from(p.size));
            match p.direction {
                Direction::Forward => pic.fwd[cell].bump(),
                Direction::Backward => pic.bwd[cell].bump(),
            }
        }
        Ok(pic)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn matrix(&self, direction: Direction) -> &[C] {
        match direction {
            Direction::Forward => &self.fwd,
            Direction::Backward => &self.bwd,
        }
    }

    pub fn cell(&self, direction: Direction, time_bin: usize, size_bin: usize) -> C {
        self.matrix(direction)[time_bin * self.n + size_bin]
    }

    /// Per-time-bin totals (sum over sizes).
    pub fn row_sums(&self, direction: Direction) -> Vec<u64> {
        self.matrix(direction)
            .chunks(self.n)
            .map(|row| row.iter().map(|c| c.get()).sum())
            .collect()
    }

    /// Per-size-bin totals (sum over times).
    pub fn col_sums(&self, direction: Direction) -> Vec<u64> {
        let m = self.matrix(direction);
        (0..self.n)
            .map(|j| (0..self.n).map(|i| m[i * self.n + j].get()).sum())
            .collect()
    }

    pub fn features(&self) -> Vec<f64> {
        self.fwd.iter().chain(&self.bwd).map(|c| c.get() as f64).collect()
    }

    /// Row-major forward matrix then backward matrix; `2 N^2` bytes for `u8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * self.n * self.n * C::BYTES);
        for &c in self.fwd.iter().chain(&self.bwd) {
            c.write_le(&mut out);
        }
        out
    }
}
