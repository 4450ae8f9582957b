//! Feature extraction under candidate binnings, and the model-accuracy
//! objective.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::binning::{Binning, Domain};
use crate::classifier::{kfold_evaluate, TrainConfig};
use crate::error::{Error, Result};
use crate::flow::{Direction, Flow, LabeledDataset};
use crate::repr::ExactDist;

/// Representation settings shared by every candidate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Time scope of the representation, in seconds.
    pub tau: f64,
    pub size_cap: u32,
    pub n_time_bins: usize,
    pub inner_k: usize,
    pub train: TrainConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tau: 15.0,
            size_cap: 1500,
            n_time_bins: 10,
            inner_k: 5,
            train: TrainConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn uniform_time(&self) -> Result<Binning> {
        Binning::uniform(self.n_time_bins, self.tau, Domain::Time)
    }

    pub fn uniform_size(&self, n_bins: usize) -> Result<Binning> {
        Binning::uniform(n_bins, f64::from(self.size_cap), Domain::Size)
    }
}

/// How packet sizes become features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeFeatures {
    /// Every bin of a binning.
    Binned(Binning),
    /// A pruned subset of the bins of a (fine, uniform) binning.
    Subset { binning: Binning, bins: Vec<usize> },
}

impl SizeFeatures {
    pub fn binning(&self) -> &Binning {
        match self {
            SizeFeatures::Binned(b) | SizeFeatures::Subset { binning: b, .. } => b,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            SizeFeatures::Binned(b) => b.n_bins(),
            SizeFeatures::Subset { bins, .. } => bins.len(),
        }
    }
}

/// A complete `dist` feature layout: size features plus time bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub size: SizeFeatures,
    pub time: Binning,
}

impl FeatureMap {
    pub fn new(size: SizeFeatures, time: Binning) -> Result<Self> {
        if size.binning().domain() != Domain::Size || time.domain() != Domain::Time {
            return Err(Error::InvalidArgument("feature map needs a size and a time binning".into()));
        }
        if let SizeFeatures::Subset { binning, bins } = &size {
            if bins.iter().any(|&b| b >= binning.n_bins()) {
                return Err(Error::InvalidArgument("selected bin out of range".into()));
            }
        }
        Ok(FeatureMap { size, time })
    }

    pub fn dim(&self) -> usize {
        2 * (self.size.n_features() + self.time.n_bins())
    }

    /// Appends one flow's features: per direction (forward first), size
    /// features then time bins.
    pub fn write(&self, flow: &Flow, out: &mut Vec<f64>) {
        let repr = ExactDist::build(flow, self.size.binning(), &self.time);
        for d in [Direction::Forward, Direction::Backward] {
            let sizes = repr.sizes(d);
            match &self.size {
                SizeFeatures::Binned(_) => out.extend(sizes.iter().map(|&c| f64::from(c))),
                SizeFeatures::Subset { bins, .. } => out.extend(bins.iter().map(|&b| f64::from(sizes[b]))),
            }
            out.extend(repr.times(d).iter().map(|&c| f64::from(c)));
        }
    }

    pub fn features(&self, flow: &Flow) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.write(flow, &mut out);
        out
    }

    pub fn matrix(&self, dataset: &LabeledDataset) -> Vec<Vec<f64>> {
        dataset.flows.iter().map(|f| self.features(f)).collect()
    }

    /// Mean validation accuracy of stratified `k`-fold cross-validation.
    pub fn cv_accuracy(&self, dataset: &LabeledDataset, k: usize, train: &TrainConfig) -> Result<f64> {
        let x = self.matrix(dataset);
        kfold_evaluate(&x, &dataset.labels(), &dataset.classes, k, train).map(|r| r.accuracy)
    }
}

/// Inner cross-validated accuracy of `dist` features under a candidate
/// size binning and uniform time bins.
pub fn objective_accuracy(size_binning: &Binning, dataset: &LabeledDataset, cfg: &EvalConfig) -> Result<f64> {
    let map = FeatureMap::new(SizeFeatures::Binned(size_binning.clone()), cfg.uniform_time()?)?;
    map.cv_accuracy(dataset, cfg.inner_k, &cfg.train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn binned_matches_dist_features() {
        let ds = synth::separable_corpus(5, 2.0, 1).unwrap();
        let size = Binning::uniform(4, 1500.0, Domain::Size).unwrap();
        let time = Binning::uniform(4, 2.0, Domain::Time).unwrap();
        let map = FeatureMap::new(SizeFeatures::Binned(size.clone()), time.clone()).unwrap();
        for f in &ds.flows {
            assert_eq!(map.features(f), ExactDist::build(f, &size, &time).features());
        }
    }

    #[test]
    fn subset_picks_bins() {
        let ds = synth::separable_corpus(3, 2.0, 2).unwrap();
        let size = Binning::uniform(10, 1500.0, Domain::Size).unwrap();
        let time = Binning::uniform(2, 2.0, Domain::Time).unwrap();
        let full = FeatureMap::new(SizeFeatures::Binned(size.clone()), time.clone()).unwrap();
        let sub = FeatureMap::new(
            SizeFeatures::Subset {
                binning: size,
                bins: alloc::vec![6, 1],
            },
            time,
        )
        .unwrap();
        assert_eq!(sub.dim(), 8);
        for f in &ds.flows {
            let a = full.features(f);
            let b = sub.features(f);
            assert_eq!(b[..4], [a[6], a[1], a[10], a[11]]);
            assert_eq!(b[4..], [a[18], a[13], a[22], a[23]]);
        }
    }

    #[test]
    fn uniform_objective_equals_direct_cv() {
        let ds = synth::separable_corpus(20, 2.0, 3).unwrap();
        let cfg = EvalConfig {
            tau: 2.0,
            n_time_bins: 4,
            train: TrainConfig {
                epochs: 50,
                ..TrainConfig::default()
            },
            ..EvalConfig::default()
        };
        let b = cfg.uniform_size(5).unwrap();
        let x: Vec<Vec<f64>> = ds
            .flows
            .iter()
            .map(|f| ExactDist::build(f, &b, &cfg.uniform_time().unwrap()).features())
            .collect();
        let direct = kfold_evaluate(&x, &ds.labels(), &ds.classes, 5, &cfg.train).unwrap().accuracy;
        assert_eq!(objective_accuracy(&b, &ds, &cfg).unwrap(), direct);
    }
}
