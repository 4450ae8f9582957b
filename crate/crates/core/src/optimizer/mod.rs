//! Bin boundary selection.
//!
//! Five strategies pick the packet-size boundaries of a `dist`
//! representation:
//!
//! | strategy | how boundaries are chosen |
//! |----------|---------------------------|
//! | `uniform` | equal-width bins, no search |
//! | `fs` | uniform fine binnings pruned to the most informative bins |
//! | `stat` | TPE maximizing the one-vs-all Jensen-Shannon distance |
//! | `ho` | TPE maximizing inner cross-validated model accuracy |
//! | `greedy` | one boundary at a time, each by a full grid scan |
//!
//! [`nested_cv`] runs a strategy inside nested cross-validation so the
//! reported accuracy never sees data used to choose the boundaries.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod explain;
mod features;
mod greedy;
mod jsd;
mod ncv;
mod selection;
mod tpe;

pub use explain::{explainability, ClassHistogram, ExplainReport};
pub use features::{objective_accuracy, EvalConfig, FeatureMap, SizeFeatures};
pub use greedy::{greedy_optimize, GreedyStep};
pub use jsd::{js_distance, objective_jsd, objective_jsd_binned, FineHistograms};
pub use ncv::{
    fit_and_score, nested_cv, outer_fold, outer_folds, select, split_sizes, FoldResult, NcvConfig, NcvReport, Selection,
};
pub use selection::{feature_selection_optimize, mutual_information, FsReport, FS_RESOLUTIONS};
pub use tpe::{random_search, tpe_optimize, tpe_optimize_blocks, BlockTrial, TpeConfig};

/// Where interior boundaries may be placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    n_bins: usize,
    cap: f64,
    candidates: Vec<f64>,
}

impl SearchSpace {
    /// `candidates` must be strictly increasing inside `(0, cap)` and hold
    /// at least `n_bins - 1` values.
    pub fn new(n_bins: usize, cap: f64, candidates: Vec<f64>) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidArgument("n_bins must be >= 1".into()));
        }
        if candidates.len() + 1 < n_bins {
            return Err(Error::InvalidArgument("search space has fewer candidates than interior boundaries".into()));
        }
        if candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("candidates must be strictly increasing".into()));
        }
        if candidates.iter().any(|&c| !(c > 0.0 && c < cap)) {
            return Err(Error::InvalidArgument("candidates must lie strictly inside (0, cap)".into()));
        }
        Ok(SearchSpace { n_bins, cap, candidates })
    }

    /// Integer packet sizes `1..cap`.
    pub fn sizes(n_bins: usize, cap: u32) -> Result<Self> {
        SearchSpace::new(n_bins, f64::from(cap), (1..cap).map(f64::from).collect())
    }

    /// Multiples of `step` strictly inside `(0, cap)`.
    pub fn grid(n_bins: usize, cap: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument("grid step must be positive".into()));
        }
        let n = libm::ceil(cap / step) as usize;
        let candidates = (1..n).map(|i| i as f64 * step).filter(|&v| v < cap).collect();
        SearchSpace::new(n_bins, cap, candidates)
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_interior(&self) -> usize {
        self.n_bins - 1
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub(crate) fn values(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.candidates[i]).collect()
    }
}

/// One evaluated boundary vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// Sorted interior boundaries.
    pub boundaries: Vec<f64>,
    /// Higher is better.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uniform,
    #[serde(rename = "fs")]
    FeatureSelection,
    #[serde(rename = "stat")]
    Statistical,
    Ho,
    Greedy,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Uniform,
        Strategy::FeatureSelection,
        Strategy::Statistical,
        Strategy::Ho,
        Strategy::Greedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::FeatureSelection => "fs",
            Strategy::Statistical => "stat",
            Strategy::Ho => "ho",
            Strategy::Greedy => "greedy",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown strategy `{s}` (expected uniform|fs|stat|ho|greedy)")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Used by reports that carry a strategy name.
pub(crate) fn strategy_label(s: Strategy, both: bool) -> String {
    let mut name = String::from(s.name());
    if both {
        name.push_str("-both");
    }
    name
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }

    #[test]
    fn space_validation() {
        assert_eq!(SearchSpace::sizes(5, 1500).unwrap().candidates().len(), 1499);
        assert!(SearchSpace::sizes(5, 4).is_err());
        let g = SearchSpace::grid(3, 1.0, 0.25).unwrap();
        assert_eq!(g.candidates(), &[0.25, 0.5, 0.75]);
        assert!(SearchSpace::new(2, 10.0, alloc::vec![0.0]).is_err());
    }
}
