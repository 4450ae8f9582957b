//! Nested cross-validation around the boundary strategies.
//!
//! Outer stratified folds hold out test flows. On each outer-train split the
//! strategy chooses boundaries (HO and greedy score candidates by inner
//! cross-validation), a model is retrained on the whole outer-train split
//! with those boundaries, and it is scored once on the outer test fold.
//! With five folds at both levels, each inner model trains on 64% of the
//! flows and validates on 16%; 20% are only ever used for the final score.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::features::{EvalConfig, FeatureMap, SizeFeatures};
use super::greedy::greedy_optimize;
use super::jsd::{objective_jsd_binned, FineHistograms};
use super::selection::{feature_selection_optimize, FsReport, FS_RESOLUTIONS};
use super::tpe::{tpe_optimize_blocks, TpeConfig};
use super::{strategy_label, SearchSpace, Strategy};
use crate::binning::{Binning, Domain};
use crate::classifier::{self, mean_std};
use crate::error::Result;
use crate::flow::{split_kfold, stratified_folds, Fold, LabeledDataset};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcvConfig {
    pub strategy: Strategy,
    pub n_bins: usize,
    pub outer_k: usize,
    pub eval: EvalConfig,
    pub tpe: TpeConfig,
    /// Every `greedy_stride`-th size is scanned by the greedy strategy.
    pub greedy_stride: usize,
    pub fs_resolutions: Vec<usize>,
    /// JSD histograms weight each flow equally instead of each packet.
    pub flow_weighted: bool,
    /// Search time boundaries jointly with sizes (`stat` and `ho` only).
    pub optimize_time: bool,
    /// Grid cells over `[0, tau)` for time boundary search.
    pub time_grid_cells: usize,
    pub seed: u64,
}

impl NcvConfig {
    pub fn new(strategy: Strategy, n_bins: usize) -> Self {
        NcvConfig {
            strategy,
            n_bins,
            outer_k: 5,
            eval: EvalConfig::default(),
            tpe: TpeConfig::default(),
            greedy_stride: 10,
            fs_resolutions: FS_RESOLUTIONS.to_vec(),
            flow_weighted: false,
            optimize_time: false,
            time_grid_cells: 100,
            seed: 0,
        }
    }

    fn label(&self) -> alloc::string::String {
        let both = self.optimize_time && matches!(self.strategy, Strategy::Ho | Strategy::Statistical);
        strategy_label(self.strategy, both)
    }
}

/// Boundaries chosen on one training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub map: FeatureMap,
    /// Best objective reached by the search, when there was one.
    pub objective: Option<f64>,
    pub fs: Option<FsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// Full size boundary vector `[0, ..., cap]`.
    pub boundaries: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_boundaries: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_bins: Option<Vec<usize>>,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcvReport {
    pub strategy: alloc::string::String,
    pub n_bins: usize,
    pub per_fold: Vec<FoldResult>,
    pub mean: f64,
    pub std: f64,
}

impl NcvReport {
    pub fn from_folds(cfg: &NcvConfig, per_fold: Vec<FoldResult>) -> Self {
        let acc: Vec<f64> = per_fold.iter().map(|f| f.test_accuracy).collect();
        let (mean, std) = mean_std(&acc);
        NcvReport {
            strategy: cfg.label(),
            n_bins: cfg.n_bins,
            per_fold,
            mean,
            std,
        }
    }
}

fn time_space(cfg: &NcvConfig) -> Result<SearchSpace> {
    let step = cfg.eval.tau / cfg.time_grid_cells.max(1) as f64;
    SearchSpace::grid(cfg.eval.n_time_bins, cfg.eval.tau, step)
}

/// Runs `cfg.strategy` on `train` only. `seed` drives the search.
pub fn select(train: &LabeledDataset, cfg: &NcvConfig, seed: u64) -> Result<Selection> {
    let ev = &cfg.eval;
    let cap = f64::from(ev.size_cap);
    let size_space = SearchSpace::sizes(cfg.n_bins, ev.size_cap)?;
    let both = cfg.optimize_time;
    let tpe = TpeConfig { seed, ..cfg.tpe };
    let build = |size: &[f64], time: Option<&[f64]>| -> Result<FeatureMap> {
        let time = match time {
            Some(t) => Binning::from_interior(t, ev.tau, Domain::Time)?,
            None => ev.uniform_time()?,
        };
        FeatureMap::new(SizeFeatures::Binned(Binning::from_interior(size, cap, Domain::Size)?), time)
    };
    let mut spaces = alloc::vec![size_space.clone()];
    if both {
        spaces.push(time_space(cfg)?);
    }
    let time_of = |blocks: &[Vec<f64>]| -> Option<Vec<f64>> { blocks.get(1).cloned() };

    match cfg.strategy {
        Strategy::Uniform => Ok(Selection {
            map: FeatureMap::new(SizeFeatures::Binned(ev.uniform_size(cfg.n_bins)?), ev.uniform_time()?)?,
            objective: None,
            fs: None,
        }),
        Strategy::FeatureSelection => {
            let (map, report) = feature_selection_optimize(train, cfg.n_bins, ev, &cfg.fs_resolutions)?;
            let best = report.scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            Ok(Selection {
                map,
                objective: Some(best),
                fs: Some(report),
            })
        }
        Strategy::Statistical => {
            let sizes = FineHistograms::sizes(train, ev.size_cap, cfg.flow_weighted)?;
            let times = if both {
                Some(FineHistograms::times(train, ev.tau, ev.tau / cfg.time_grid_cells.max(1) as f64, cfg.flow_weighted)?)
            } else {
                None
            };
            let (best, _) = tpe_optimize_blocks(
                &spaces,
                |b| {
                    let s = objective_jsd_binned(&sizes, &b[0])?;
                    match &times {
                        Some(t) => Ok(0.5 * (s + objective_jsd_binned(t, &b[1])?)),
                        None => Ok(s),
                    }
                },
                &tpe,
            )?;
            let time = time_of(&best.blocks);
            Ok(Selection {
                map: build(&best.blocks[0], time.as_deref())?,
                objective: Some(best.objective),
                fs: None,
            })
        }
        Strategy::Ho => {
            let (best, _) = tpe_optimize_blocks(
                &spaces,
                |b| build(&b[0], b.get(1).map(Vec::as_slice))?.cv_accuracy(train, ev.inner_k, &ev.train),
                &tpe,
            )?;
            let time = time_of(&best.blocks);
            Ok(Selection {
                map: build(&best.blocks[0], time.as_deref())?,
                objective: Some(best.objective),
                fs: None,
            })
        }
        Strategy::Greedy => {
            let (best, _) = greedy_optimize(&size_space, cfg.greedy_stride, |b| {
                build(b, None)?.cv_accuracy(train, ev.inner_k, &ev.train)
            })?;
            Ok(Selection {
                map: build(&best.boundaries, None)?,
                objective: Some(best.objective),
                fs: None,
            })
        }
    }
}

/// Trains with `map` on `train` and returns the accuracy on `test`.
pub fn fit_and_score(map: &FeatureMap, train: &LabeledDataset, test: &LabeledDataset, cfg: &EvalConfig) -> Result<f64> {
    let model = classifier::train(&map.matrix(train), &train.labels(), &train.classes, &cfg.train)?;
    model.accuracy(&map.matrix(test), &test.labels())
}

/// One outer fold: select on the fold's train split, score on its test split.
/// Folds are independent, so callers may run them concurrently.
pub fn outer_fold(dataset: &LabeledDataset, fold: &Fold, fold_index: usize, cfg: &NcvConfig) -> Result<FoldResult> {
    let train = dataset.subset(&fold.train);
    let test = dataset.subset(&fold.test);
    let sel = select(&train, cfg, rng::derive_seed(cfg.seed, fold_index as u64))?;
    let test_accuracy = fit_and_score(&sel.map, &train, &test, &cfg.eval)?;
    Ok(FoldResult {
        boundaries: sel.map.size.binning().boundaries().to_vec(),
        time_boundaries: cfg.optimize_time.then(|| sel.map.time.boundaries().to_vec()),
        selected_bins: sel.fs.map(|r| r.bins),
        test_accuracy,
    })
}

/// Outer folds used by [`nested_cv`].
pub fn outer_folds(dataset: &LabeledDataset, cfg: &NcvConfig) -> Result<Vec<Fold>> {
    split_kfold(dataset, cfg.outer_k, cfg.seed)
}

/// Sequential nested cross-validation.
pub fn nested_cv(dataset: &LabeledDataset, cfg: &NcvConfig) -> Result<NcvReport> {
    let folds = outer_folds(dataset, cfg)?;
    let per_fold = folds
        .iter()
        .enumerate()
        .map(|(i, f)| outer_fold(dataset, f, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(NcvReport::from_folds(cfg, per_fold))
}

/// Flow counts `(inner_train, inner_validation, outer_test)` for every
/// (outer, inner) fold pair, from the same splitters the harness uses.
pub fn split_sizes(dataset: &LabeledDataset, cfg: &NcvConfig) -> Result<Vec<[usize; 3]>> {
    let mut out = Vec::new();
    for fold in outer_folds(dataset, cfg)? {
        let train = dataset.subset(&fold.train);
        for inner in stratified_folds(&train.labels(), cfg.eval.inner_k, cfg.eval.train.seed)? {
            out.push([inner.train.len(), inner.test.len(), fold.test.len()]);
        }
    }
    Ok(out)
}
