//! Boundary vectors over packet sizes and arrival times.
//!
//! A binning with boundaries `[b_0, ..., b_N]` (`b_0 = 0`, strictly
//! increasing, `b_N` the nominal domain cap) places a value `v` in the
//! half-open bin `[b_{i-1}, b_i)`; ties go to the upper bin and everything at
//! or above `b_{N-1}` lands in the last bin, so oversized packets (jumbo
//! frames) never fall off the end. Bin indices are zero-based in this API.
//!
//! Size binnings carry a direct-access array with one entry per integer size
//! below the cap, so mapping a packet is a single array read.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Packet sizes in bytes (integer valued).
    Size,
    /// Arrival times in seconds.
    Time,
}

/// Largest size cap for which a lookup array is built.
pub const MAX_SIZE_CAP: f64 = 65536.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BinningDoc", try_from = "BinningDoc")]
pub struct Binning {
    domain: Domain,
    boundaries: Vec<f64>,
    /// Bin index per integer value (sizes) or per `resolution`-wide cell (times).
    lookup: Option<Vec<u16>>,
    resolution: Option<f64>,
}

/// Serialized form: `{domain, cap, boundaries}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinningDoc {
    pub domain: Domain,
    pub cap: f64,
    pub boundaries: Vec<f64>,
}

impl From<Binning> for BinningDoc {
    fn from(b: Binning) -> Self {
        BinningDoc {
            domain: b.domain,
            cap: b.cap(),
            boundaries: b.boundaries,
        }
    }
}

impl TryFrom<BinningDoc> for Binning {
    type Error = Error;

    fn try_from(doc: BinningDoc) -> Result<Self> {
        if doc.boundaries.last() != Some(&doc.cap) {
            return Err(Error::InvalidBoundaries("cap must equal the last boundary"));
        }
        Binning::from_boundaries(doc.boundaries, doc.domain)
    }
}

/// `i`-th boundary of the uniform `n`-bin partition of `[0, cap)`.
pub(crate) fn uniform_boundary(i: usize, n: usize, cap: f64) -> f64 {
    (i as f64 * cap) / n as f64
}

/// `i`-th boundary of the logarithmic `n`-bin partition of `[0, tau)`:
/// `0, tau/2^(n-1), ..., tau/4, tau/2, tau`.
pub(crate) fn log_boundary(i: usize, n: usize, tau: f64) -> f64 {
    match i {
        0 => 0.0,
        _ if i >= n => tau,
        _ => libm::scalbn(tau, -((n - i) as i32)),
    }
}

/// Zero-based bin of `v` given a boundary generator, without materializing
/// the boundary vector: the number of interior boundaries `<= v`.
pub(crate) fn index_by<F: Fn(usize) -> f64>(v: f64, n: usize, boundary: F) -> usize {
    // interior boundaries are b_1..b_{n-1}; find the count that are <= v
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if boundary(mid) <= v {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo - 1
}

impl Binning {
    /// Equal-width bins: `b_i = i * cap / n`.
    pub fn uniform(n_bins: usize, cap: f64, domain: Domain) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidBoundaries("at least one bin is required"));
        }
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidBoundaries("domain cap must be positive"));
        }
        let b = (0..=n_bins).map(|i| uniform_boundary(i, n_bins, cap)).collect();
        Binning::from_boundaries(b, domain)
    }

    /// Logarithmic time bins over `[0, tau)`: each bin is twice as wide as
    /// the previous one, except the first two which share the smallest width.
    pub fn logarithmic(n_bins: usize, tau: f64) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidBoundaries("logarithmic binning needs at least two bins"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidBoundaries("domain cap must be positive"));
        }
        let b = (0..=n_bins).map(|i| log_boundary(i, n_bins, tau)).collect();
        Binning::from_boundaries(b, Domain::Time)
    }

    /// Validates a full boundary vector `[0, b_1, ..., b_N]`.
    pub fn from_boundaries(boundaries: Vec<f64>, domain: Domain) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidBoundaries("at least one bin is required"));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidBoundaries("boundaries must be finite"));
        }
        if boundaries[0] != 0.0 {
            return Err(Error::InvalidBoundaries("first boundary must be 0"));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBoundaries("boundaries must be strictly increasing"));
        }
        let n = boundaries.len() - 1;
        if n > usize::from(u16::MAX) {
            return Err(Error::InvalidBoundaries("too many bins"));
        }
        let mut binning = Binning {
            domain,
            boundaries,
            lookup: None,
            resolution: None,
        };
        if domain == Domain::Size {
            if binning.cap() > MAX_SIZE_CAP {
                return Err(Error::InvalidBoundaries("size cap exceeds 65536"));
            }
            let len = libm::ceil(binning.cap()) as usize;
            binning.lookup = Some(
                (0..len)
                    .map(|v| binning.search(v as f64) as u16)
                    .collect(),
            );
        }
        Ok(binning)
    }

    /// Builds a bins-from-interior-points binning: `[0, interior..., cap]`.
    pub fn from_interior(interior: &[f64], cap: f64, domain: Domain) -> Result<Self> {
        let mut b = Vec::with_capacity(interior.len() + 2);
        b.push(0.0);
        b.extend_from_slice(interior);
        b.push(cap);
        Binning::from_boundaries(b, domain)
    }

    /// Adds a direct-access table for discretized arrival times: each
    /// `resolution`-wide cell maps to the bin of its left edge. Values are
    /// then bucketed at that granularity, which is exact only when the
    /// boundaries are multiples of `resolution`.
    pub fn with_time_resolution(mut self, resolution: f64) -> Result<Self> {
        if self.domain != Domain::Time {
            return Err(Error::InvalidArgument("time resolution applies to time binnings".into()));
        }
        if !(resolution > 0.0) {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        let cells = libm::ceil(self.cap() / resolution) as usize;
        if cells > 1 << 24 {
            return Err(Error::InvalidArgument("time lookup table too large".into()));
        }
        self.lookup = Some(
            (0..cells)
                .map(|c| self.search(c as f64 * resolution) as u16)
                .collect(),
        );
        self.resolution = Some(resolution);
        Ok(self)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_bins(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// `b_1, ..., b_{N-1}`.
    pub fn interior(&self) -> &[f64] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }

    /// Nominal upper end of the domain (`b_N`).
    pub fn cap(&self) -> f64 {
        *self.boundaries.last().expect("non-empty")
    }

    pub fn has_lookup(&self) -> bool {
        self.lookup.is_some()
    }

    /// Zero-based bin of `v` by binary search over the boundaries.
    pub fn search(&self, v: f64) -> usize {
        let interior = self.interior();
        interior.partition_point(|&b| b <= v)
    }

    /// Zero-based bin of `v`. Uses the direct-access table when present.
    pub fn map_value(&self, v: f64) -> usize {
        if let Some(lookup) = &self.lookup {
            let cell = match self.resolution {
                Some(res) => v / res,
                None => v,
            };
            if cell >= 0.0 && cell < lookup.len() as f64 {
                return usize::from(lookup[cell as usize]);
            }
        }
        self.search(v)
    }

    /// Zero-based bin of an integer packet size.
    #[inline]
    pub fn map_size(&self, size: u32) -> usize {
        match &self.lookup {
            Some(lookup) if self.resolution.is_none() => match lookup.get(size as usize) {
                Some(&bin) => usize::from(bin),
                None => self.n_bins() - 1,
            },
            _ => self.search(f64::from(size)),
        }
    }

    /// Doubles the scope of a time binning over `[0, tau)` while keeping the
    /// bin count: adjacent pairs merge into the lower half, and the upper
    /// half splits `[tau, 2 tau)` uniformly.
    pub fn halve_by_pair_merge(&self) -> Result<Binning> {
        let n = self.n_bins();
        if !n.is_multiple_of(2) {
            return Err(Error::OddBins(n));
        }
        if self.domain != Domain::Time {
            return Err(Error::InvalidArgument("pair merging applies to time binnings".into()));
        }
        let scope = 2.0 * self.cap();
        let mut b: Vec<f64> = self.boundaries.iter().step_by(2).copied().collect();
        b.extend((n / 2 + 1..=n).map(|i| uniform_boundary(i, n, scope)));
        Binning::from_boundaries(b, Domain::Time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn uniform_boundaries() {
        let b = Binning::uniform(5, 1500.0, Domain::Size).unwrap();
        assert_eq!(b.boundaries(), &[0.0, 300.0, 600.0, 900.0, 1200.0, 1500.0]);
        let one = Binning::uniform(1, 1500.0, Domain::Size).unwrap();
        assert_eq!(one.boundaries(), &[0.0, 1500.0]);
        let t = Binning::uniform(4, 2.0, Domain::Time).unwrap();
        assert_eq!(t.boundaries(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(Binning::uniform(0, 1500.0, Domain::Size).is_err());
    }

    #[test]
    fn log_boundaries() {
        let b = Binning::logarithmic(4, 8.0).unwrap();
        assert_eq!(b.boundaries(), &[0.0, 1.0, 2.0, 4.0, 8.0]);
        let b = Binning::logarithmic(2, 1.0).unwrap();
        assert_eq!(b.boundaries(), &[0.0, 0.5, 1.0]);
        assert!(Binning::logarithmic(1, 1.0).is_err());
    }

    #[test]
    fn log_widths_double() {
        for n in 2..12 {
            let b = Binning::logarithmic(n, 3.0).unwrap();
            let w: Vec<f64> = b.boundaries().windows(2).map(|p| p[1] - p[0]).collect();
            assert_eq!(w[0], w[1]);
            for i in 2..n {
                assert_eq!(w[i], 2.0 * w[i - 1], "n={n} i={i}");
            }
        }
    }

    #[test]
    fn explicit_boundaries() {
        assert!(Binning::from_boundaries(vec![0.0, 375.0, 750.0, 1125.0, 1500.0], Domain::Size).is_ok());
        assert!(Binning::from_boundaries(vec![0.0, 76.0, 168.0, 800.0, 1500.0], Domain::Size).is_ok());
        assert!(Binning::from_boundaries(vec![0.0, 200.0, 200.0, 1500.0], Domain::Size).is_err());
        assert!(Binning::from_boundaries(vec![0.0, 300.0, 200.0, 1500.0], Domain::Size).is_err());
        assert!(Binning::from_boundaries(vec![1.0, 200.0, 1500.0], Domain::Size).is_err());
        assert!(Binning::from_boundaries(vec![0.0, -1.0], Domain::Time).is_err());
        assert!(Binning::from_boundaries(vec![0.0], Domain::Time).is_err());
    }

    #[test]
    fn half_open_and_overflow() {
        let b = Binning::from_boundaries(vec![0.0, 375.0, 750.0, 1125.0, 1500.0], Domain::Size).unwrap();
        // bin 2 in one-based numbering
        assert_eq!(b.map_size(375), 1);
        assert_eq!(b.map_size(374), 0);
        assert_eq!(b.map_size(0), 0);
        assert_eq!(b.map_size(1499), 3);
        assert_eq!(b.map_size(9000), 3);
        assert_eq!(b.map_value(9000.0), 3);
        assert_eq!(b.map_value(374.5), 0);
    }

    #[test]
    fn pair_merge() {
        let b = Binning::uniform(4, 1.0, Domain::Time).unwrap();
        let h = b.halve_by_pair_merge().unwrap();
        assert_eq!(h.boundaries(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        let hh = h.halve_by_pair_merge().unwrap();
        // manual: keep [0, 1, 2] then split [2, 4) in two
        assert_eq!(hh.boundaries(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let odd = Binning::uniform(3, 1.0, Domain::Time).unwrap();
        assert_eq!(odd.halve_by_pair_merge(), Err(Error::OddBins(3)));
    }

    #[test]
    fn pair_merge_of_non_uniform_keeps_even_boundaries() {
        let b = Binning::from_boundaries(vec![0.0, 0.1, 0.3, 0.6, 1.0], Domain::Time).unwrap();
        let h = b.halve_by_pair_merge().unwrap();
        assert_eq!(h.boundaries(), &[0.0, 0.3, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn time_resolution_lookup() {
        let b = Binning::uniform(4, 1.0, Domain::Time)
            .unwrap()
            .with_time_resolution(0.001)
            .unwrap();
        assert_eq!(b.map_value(0.2501), 1);
        assert_eq!(b.map_value(0.9999), 3);
        assert_eq!(b.map_value(5.0), 3);
    }

    #[test]
    fn uniform_search_matches_formula_exhaustively() {
        for n in [1usize, 2, 3, 5, 7, 10, 64, 100] {
            let b = Binning::uniform(n, 1500.0, Domain::Size).unwrap();
            for v in 0..1500u32 {
                let expect = (v as usize * n) / 1500;
                assert_eq!(b.map_size(v), expect, "n={n} v={v}");
            }
        }
    }

    fn boundary_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::btree_set(1u32..1500, 0..20).prop_map(|set| {
            let mut b = vec![0.0];
            b.extend(set.into_iter().map(f64::from));
            b.push(1500.0);
            b
        })
    }

    proptest! {
        #[test]
        fn map_value_monotone(b in boundary_vec(), a in 0.0f64..3000.0, d in 0.0f64..3000.0) {
            let bin = Binning::from_boundaries(b, Domain::Size).unwrap();
            prop_assert!(bin.map_value(a) <= bin.map_value(a + d));
            prop_assert!(bin.map_value(a + d) < bin.n_bins());
        }

        #[test]
        fn doc_round_trip(b in boundary_vec()) {
            let bin = Binning::from_boundaries(b.clone(), Domain::Size).unwrap();
            let again = Binning::try_from(BinningDoc::from(bin.clone())).unwrap();
            prop_assert_eq!(again.boundaries(), &b[..]);
            prop_assert_eq!(again, bin);
        }

        #[test]
        fn index_by_agrees_with_search(n in 1usize..40, cap in 0.01f64..100.0, v in -1.0f64..200.0) {
            let bin = Binning::uniform(n, cap, Domain::Time).unwrap();
            prop_assert_eq!(index_by(v, n, |i| uniform_boundary(i, n, cap)), bin.search(v));
            if n >= 2 {
                let log = Binning::logarithmic(n, cap).unwrap();
                prop_assert_eq!(index_by(v, n, |i| log_boundary(i, n, cap)), log.search(v));
            }
        }
    }
}
