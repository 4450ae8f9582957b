//! Feature-selection baseline: rank the bins of several uniform binnings by
//! mutual information with the label, keep the best `n` of each, and pick
//! the resolution whose pruned features validate best.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::features::{EvalConfig, FeatureMap, SizeFeatures};
use crate::error::{Error, Result};
use crate::flow::{Direction, LabeledDataset};
use crate::repr::ExactDist;

/// Uniform resolutions tried by default.
pub const FS_RESOLUTIONS: [usize; 7] = [10, 20, 50, 100, 200, 500, 1500];

/// Quantile buckets used to discretize counts before estimating MI.
const MI_BUCKETS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsReport {
    /// Resolution of the chosen uniform binning.
    pub n_prime: usize,
    /// Kept bins of that binning, ascending.
    pub bins: Vec<usize>,
    /// Validation accuracy per resolution tried.
    pub scores: Vec<(usize, f64)>,
}

fn bucketize(values: &[f64], n_buckets: usize) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut thresholds: Vec<f64> = (1..n_buckets).map(|i| sorted[(i * n) / n_buckets]).collect();
    thresholds.dedup();
    values
        .iter()
        .map(|&v| thresholds.partition_point(|&t| t <= v))
        .collect()
}

/// Mutual information in bits between a quantile-discretized feature and
/// the class label.
pub fn mutual_information(values: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let buckets = bucketize(values, MI_BUCKETS);
    let nb = buckets.iter().max().map_or(0, |&m| m + 1);
    let mut joint = vec![0usize; nb * n_classes];
    for (&b, &y) in buckets.iter().zip(labels) {
        joint[b * n_classes + y] += 1;
    }
    let n = values.len() as f64;
    let pb: Vec<f64> = (0..nb)
        .map(|b| joint[b * n_classes..(b + 1) * n_classes].iter().sum::<usize>() as f64 / n)
        .collect();
    let mut py = vec![0.0; n_classes];
    for &y in labels {
        py[y] += 1.0 / n;
    }
    let mut mi = 0.0;
    for b in 0..nb {
        for y in 0..n_classes {
            let c = joint[b * n_classes + y];
            if c > 0 {
                let p = c as f64 / n;
                mi += p * libm::log2(p / (pb[b] * py[y]));
            }
        }
    }
    mi.max(0.0)
}

/// Bins of `binning` ordered by decreasing informativeness (forward plus
/// backward MI); ties keep the lower bin first.
pub(crate) fn rank_bins(dataset: &LabeledDataset, map: &FeatureMap) -> Vec<usize> {
    let binning = map.size.binning();
    let n = binning.n_bins();
    let labels = dataset.labels();
    let reprs: Vec<ExactDist> = dataset.flows.iter().map(|f| ExactDist::build(f, binning, &map.time)).collect();
    let mut column = vec![0.0; reprs.len()];
    let mut scores = vec![0.0; n];
    for d in [Direction::Forward, Direction::Backward] {
        for (bin, score) in scores.iter_mut().enumerate() {
            for (c, r) in column.iter_mut().zip(&reprs) {
                *c = f64::from(r.sizes(d)[bin]);
            }
            *score += mutual_information(&column, &labels, dataset.n_classes());
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Runs the baseline over every resolution in `resolutions` that has at
/// least `n_bins` bins. Accuracy is the inner cross-validated mean on
/// `dataset`; ties go to the coarser resolution.
pub fn feature_selection_optimize(
    dataset: &LabeledDataset,
    n_bins: usize,
    cfg: &EvalConfig,
    resolutions: &[usize],
) -> Result<(FeatureMap, FsReport)> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be >= 1".into()));
    }
    let time = cfg.uniform_time()?;
    let mut best: Option<(f64, FeatureMap, usize, Vec<usize>)> = None;
    let mut scores = Vec::new();
    for &n_prime in resolutions.iter().filter(|&&r| r >= n_bins) {
        let full = FeatureMap::new(SizeFeatures::Binned(cfg.uniform_size(n_prime)?), time.clone())?;
        let mut bins = rank_bins(dataset, &full);
        bins.truncate(n_bins);
        bins.sort_unstable();
        let map = FeatureMap::new(
            SizeFeatures::Subset {
                binning: full.size.binning().clone(),
                bins: bins.clone(),
            },
            time.clone(),
        )?;
        let acc = map.cv_accuracy(dataset, cfg.inner_k, &cfg.train)?;
        scores.push((n_prime, acc));
        if best.as_ref().is_none_or(|(a, ..)| acc > *a) {
            best = Some((acc, map, n_prime, bins));
        }
    }
    let (_, map, n_prime, bins) =
        best.ok_or_else(|| Error::InvalidArgument("no feature-selection resolution has enough bins".into()))?;
    Ok((map, FsReport { n_prime, bins, scores }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::TrainConfig;
    use crate::synth;

    fn cfg() -> EvalConfig {
        EvalConfig {
            tau: 1.0,
            n_time_bins: 2,
            train: TrainConfig {
                epochs: 60,
                ..TrainConfig::default()
            },
            ..EvalConfig::default()
        }
    }

    #[test]
    fn mi_extremes() {
        let y: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let informative: Vec<f64> = y.iter().map(|&l| l as f64 * 10.0).collect();
        assert!((mutual_information(&informative, &y, 2) - 1.0).abs() < 1e-12);
        let constant = vec![3.0; 100];
        assert_eq!(mutual_information(&constant, &y, 2), 0.0);
    }

    #[test]
    fn all_bins_equals_uniform() {
        let ds = synth::separable_corpus(10, 1.0, 5).unwrap();
        let c = cfg();
        let (map, rep) = feature_selection_optimize(&ds, 5, &c, &[5]).unwrap();
        assert_eq!(rep.bins, [0, 1, 2, 3, 4]);
        let uniform = FeatureMap::new(SizeFeatures::Binned(c.uniform_size(5).unwrap()), c.uniform_time().unwrap()).unwrap();
        for f in &ds.flows {
            assert_eq!(map.features(f), uniform.features(f));
        }
    }

    #[test]
    fn informative_bin_ranked_first() {
        // 150 uniform bins of width 10: the planted band [370, 380) is bin 37
        let ds = synth::planted_corpus(60, 1.0, 6).unwrap();
        let c = cfg();
        let full = FeatureMap::new(SizeFeatures::Binned(c.uniform_size(150).unwrap()), c.uniform_time().unwrap()).unwrap();
        assert_eq!(rank_bins(&ds, &full)[0], 37);
    }

    #[test]
    fn subset_size_exact() {
        let ds = synth::planted_corpus(20, 1.0, 7).unwrap();
        let (map, rep) = feature_selection_optimize(&ds, 4, &cfg(), &[10, 20]).unwrap();
        assert_eq!(rep.bins.len(), 4);
        assert_eq!(map.size.n_features(), 4);
        assert_eq!(rep.scores.len(), 2);
        assert!(feature_selection_optimize(&ds, 30, &cfg(), &[10, 20]).is_err());
    }
}
