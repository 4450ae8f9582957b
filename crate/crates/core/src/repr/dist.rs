use alloc::vec;
use alloc::vec::Vec;

use crate::binning::{index_by, log_boundary, uniform_boundary, Binning};
use crate::error::{Error, Result};
use crate::flow::{Direction, Flow, Packet};

use super::Counter;

/// Distribution-vector representation: packet-size and arrival-time
/// histograms for each direction, valid for the time scope `[0, tau)`.
///
/// The time vectors can be carried to scope `2 tau` in place, either by
/// pair-merging (uniform time bins, [`update_double`](Self::update_double))
/// or by merge-and-shift (logarithmic time bins,
/// [`update_log_shift`](Self::update_log_shift)). Both leave the vectors
/// exactly as a from-scratch build at the doubled scope would.
#[derive(Debug, Clone, PartialEq)]
pub struct DistRepr<C: Counter = u8> {
    size_fwd: Vec<C>,
    size_bwd: Vec<C>,
    time_fwd: Vec<C>,
    time_bwd: Vec<C>,
    tau: f64,
}

/// Wide counters; saturation is out of reach for any realistic flow.
pub type ExactDist = DistRepr<u32>;

impl<C: Counter> DistRepr<C> {
    pub fn new(n_sizes: usize, n_times: usize, tau: f64) -> Self {
        DistRepr {
            size_fwd: vec![C::default(); n_sizes],
            size_bwd: vec![C::default(); n_sizes],
            time_fwd: vec![C::default(); n_times],
            time_bwd: vec![C::default(); n_times],
            tau,
        }
    }

    /// Assembles a representation from explicit vectors.
    pub fn from_vectors(
        size_fwd: Vec<C>,
        size_bwd: Vec<C>,
        time_fwd: Vec<C>,
        time_bwd: Vec<C>,
        tau: f64,
    ) -> Result<Self> {
        if size_fwd.len() != size_bwd.len() || time_fwd.len() != time_bwd.len() {
            return Err(Error::InvalidArgument(
                "forward and backward vectors must have equal length".into(),
            ));
        }
        Ok(DistRepr {
            size_fwd,
            size_bwd,
            time_fwd,
            time_bwd,
            tau,
        })
    }

    /// Counts every packet of `flow` earlier than the time binning's cap.
    pub fn build(flow: &Flow, size_binning: &Binning, time_binning: &Binning) -> Self {
        Self::build_from_packets(&flow.packets, size_binning, time_binning)
    }

    pub fn build_from_packets(packets: &[Packet], size_binning: &Binning, time_binning: &Binning) -> Self {
        let tau = time_binning.cap();
        let mut repr = Self::new(size_binning.n_bins(), time_binning.n_bins(), tau);
        for p in packets.iter().filter(|p| p.time < tau) {
            repr.count(
                size_binning.map_size(u32::from(p.size)),
                time_binning.map_value(p.time),
                p.direction,
            );
        }
        repr
    }

    #[inline]
    fn count(&mut self, size_bin: usize, time_bin: usize, direction: Direction) {
        let (sizes, times) = match direction {
            Direction::Forward => (&mut self.size_fwd, &mut self.time_fwd),
            Direction::Backward => (&mut self.size_bwd, &mut self.time_bwd),
        };
        sizes[size_bin].bump();
        times[time_bin].bump();
    }

    fn check_window(&self, new_packets: &[Packet]) -> Result<()> {
        let (lo, hi) = (self.tau, 2.0 * self.tau);
        match new_packets.iter().find(|p| !(p.time >= lo && p.time < hi)) {
            Some(p) => Err(Error::PacketOutOfWindow { t: p.time, lo, hi }),
            None => Ok(()),
        }
    }

    /// Moves a uniform-time representation from scope `tau` to `2 tau`.
    ///
    /// Time bins `2j` and `2j+1` merge into bin `j`; the freed upper half
    /// then counts `new_packets`, which must all lie in `[tau, 2 tau)`. Size
    /// vectors keep accumulating. Nothing is allocated.
    pub fn update_double(&mut self, size_binning: &Binning, new_packets: &[Packet]) -> Result<()> {
        let n = self.time_fwd.len();
        if !n.is_multiple_of(2) {
            return Err(Error::OddBins(n));
        }
        self.check_window(new_packets)?;
        for times in [&mut self.time_fwd, &mut self.time_bwd] {
            for j in 0..n / 2 {
                times[j] = times[2 * j].merged(times[2 * j + 1]);
            }
            times[n / 2..].fill(C::default());
        }
        self.tau *= 2.0;
        let tau = self.tau;
        for p in new_packets {
            let t = index_by(p.time, n, |i| uniform_boundary(i, n, tau));
            self.count(size_binning.map_size(u32::from(p.size)), t, p.direction);
        }
        Ok(())
    }

    /// Moves a logarithmic-time representation from scope `tau` to `2 tau`.
    ///
    /// The two smallest-interval counters merge, the rest shift one slot
    /// toward the small end, and the largest-interval counter receives the
    /// packets of `[tau, 2 tau)`.
    pub fn update_log_shift(&mut self, size_binning: &Binning, new_packets: &[Packet]) -> Result<()> {
        let n = self.time_fwd.len();
        if n < 2 {
            return Err(Error::InvalidArgument(
                "logarithmic update needs at least two time bins".into(),
            ));
        }
        self.check_window(new_packets)?;
        for times in [&mut self.time_fwd, &mut self.time_bwd] {
            times[0] = times[0].merged(times[1]);
            times.copy_within(2.., 1);
            times[n - 1] = C::default();
        }
        self.tau *= 2.0;
        let tau = self.tau;
        for p in new_packets {
            let t = index_by(p.time, n, |i| log_boundary(i, n, tau));
            self.count(size_binning.map_size(u32::from(p.size)), t, p.direction);
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_size_bins(&self) -> usize {
        self.size_fwd.len()
    }

    pub fn n_time_bins(&self) -> usize {
        self.time_fwd.len()
    }

    pub fn sizes(&self, direction: Direction) -> &[C] {
        match direction {
            Direction::Forward => &self.size_fwd,
            Direction::Backward => &self.size_bwd,
        }
    }

    pub fn times(&self, direction: Direction) -> &[C] {
        match direction {
            Direction::Forward => &self.time_fwd,
            Direction::Backward => &self.time_bwd,
        }
    }

    /// Sum of all time counters.
    pub fn time_mass(&self) -> u64 {
        self.time_fwd.iter().chain(&self.time_bwd).map(|c| c.get()).sum()
    }

    /// Feature vector length: `2 (N_s + N_t)`.
    pub fn dim(&self) -> usize {
        2 * (self.size_fwd.len() + self.time_fwd.len())
    }

    fn vectors(&self) -> [&[C]; 4] {
        [&self.size_fwd, &self.time_fwd, &self.size_bwd, &self.time_bwd]
    }

    /// Appends the counters as reals, direction-major, sizes before times.
    pub fn write_features(&self, out: &mut Vec<f64>) {
        for v in self.vectors() {
            out.extend(v.iter().map(|c| c.get() as f64));
        }
    }

    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.write_features(&mut out);
        out
    }

    /// Binary layout: counters little-endian, direction-major, sizes before
    /// times. For `u8` counters with `N_s = N_t = N` this is exactly `4N` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.dim() * C::BYTES);
        for v in self.vectors() {
            for &c in v {
                c.write_le(&mut out);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], n_sizes: usize, n_times: usize, tau: f64) -> Result<Self> {
        let expected = 2 * (n_sizes + n_times) * C::BYTES;
        if bytes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: bytes.len(),
            });
        }
        let mut chunks = bytes.chunks_exact(C::BYTES).map(C::read_le);
        let mut take = |n: usize| chunks.by_ref().take(n).collect::<Vec<C>>();
        let size_fwd = take(n_sizes);
        let time_fwd = take(n_times);
        let size_bwd = take(n_sizes);
        let time_bwd = take(n_times);
        Self::from_vectors(size_fwd, size_bwd, time_fwd, time_bwd, tau)
    }

    /// Address of each counter buffer, for checking that updates stay in place.
    pub fn buffer_addresses(&self) -> [usize; 4] {
        self.vectors().map(|v| v.as_ptr() as usize)
    }
}
