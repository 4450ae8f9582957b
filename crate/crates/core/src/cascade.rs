//! Confidence-gated early classification.
//!
//! A cascade holds one classifier per exit time `tau_1 < ... < tau_max`, all
//! sharing a single packet-size binning. A flow starts with a compact `dist`
//! representation at `tau_1`; at each stage the stage classifier's top
//! probability (the confidence) is compared with `beta - alpha`. Strictly
//! above, the flow exits with that prediction; otherwise the representation
//! is carried to the next exit time in place and the next classifier runs.
//! The last stage always exits.
//!
//! With a doubling schedule the carry is the pair-merge update for uniform
//! time bins or the merge-and-shift update for logarithmic ones, so the
//! representation a stage sees equals a from-scratch build at that stage.
//! A pseudo-logarithmic (1, 2, 5, 10, ...) schedule has no in-place update
//! and rebuilds from the retained packets at every stage.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::binning::{Binning, Domain};
use crate::classifier::{self, SoftmaxModel, TrainConfig};
use crate::error::{Error, Result};
use crate::flow::{stratified_folds, Flow, Fold, LabeledDataset};
use crate::repr::DistRepr;

/// Default threshold relaxation.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `tau_{i+1} = 2 tau_i`.
    Doubling,
    /// 1-2-5 steps per decade.
    PseudoLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBinKind {
    Uniform,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitSchedule {
    times: Vec<f64>,
    mode: ScheduleMode,
    time_bin_kind: TimeBinKind,
}

/// Leading digit of a 1-2-5 value, or `None`.
fn one_two_five(v: f64) -> Option<u8> {
    let exp = libm::floor(libm::log10(v));
    let mantissa = v / libm::pow(10.0, exp);
    [1u8, 2, 5]
        .into_iter()
        .find(|&d| (mantissa - f64::from(d)).abs() < 1e-9 * f64::from(d))
        .or_else(|| ((mantissa - 10.0).abs() < 1e-8).then_some(1))
}

impl ExitSchedule {
    pub fn new(times: Vec<f64>, mode: ScheduleMode, time_bin_kind: TimeBinKind) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Empty("exit schedule"));
        }
        if times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("exit times must be positive".into()));
        }
        match mode {
            ScheduleMode::Doubling => {
                if times.windows(2).any(|w| w[1] != 2.0 * w[0]) {
                    return Err(Error::InvalidArgument("doubling schedule needs tau_(i+1) = 2 tau_i".into()));
                }
            }
            ScheduleMode::PseudoLog => {
                let digits: Option<Vec<u8>> = times.iter().map(|&t| one_two_five(t)).collect();
                let digits = digits.ok_or_else(|| Error::InvalidArgument("pseudo-log times must be 1, 2 or 5 times a power of ten".into()))?;
                let ok = times.windows(2).zip(digits.windows(2)).all(|(w, d)| {
                    let ratio = w[1] / w[0];
                    let want = if d[0] == 2 { 2.5 } else { 2.0 };
                    (ratio - want).abs() < 1e-9
                });
                if !ok {
                    return Err(Error::InvalidArgument("pseudo-log times must follow 1, 2, 5, 10, ...".into()));
                }
            }
        }
        Ok(ExitSchedule {
            times,
            mode,
            time_bin_kind,
        })
    }

    /// `stages` exit times `tau_1 * 2^i`.
    pub fn doubling(tau_1: f64, stages: usize, time_bin_kind: TimeBinKind) -> Result<Self> {
        let times = (0..stages).map(|i| libm::scalbn(tau_1, i as i32)).collect();
        ExitSchedule::new(times, ScheduleMode::Doubling, time_bin_kind)
    }

    /// `stages` exit times following 1, 2, 5, 10, ... from `start`.
    pub fn pseudo_log(start: f64, stages: usize, time_bin_kind: TimeBinKind) -> Result<Self> {
        let mut times = Vec::with_capacity(stages);
        let mut t = start;
        for _ in 0..stages {
            times.push(t);
            t *= if one_two_five(t) == Some(2) { 2.5 } else { 2.0 };
        }
        ExitSchedule::new(times, ScheduleMode::PseudoLog, time_bin_kind)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn time_bin_kind(&self) -> TimeBinKind {
        self.time_bin_kind
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn tau_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Time binning of `stage` (zero-based).
    pub fn time_binning(&self, stage: usize, n_time_bins: usize) -> Result<Binning> {
        let tau = self.times[stage];
        match self.time_bin_kind {
            TimeBinKind::Uniform => Binning::uniform(n_time_bins, tau, Domain::Time),
            TimeBinKind::Log => Binning::logarithmic(n_time_bins, tau),
        }
    }

    fn check_bins(&self, n_time_bins: usize) -> Result<()> {
        match (self.mode, self.time_bin_kind) {
            (ScheduleMode::Doubling, TimeBinKind::Uniform) if !n_time_bins.is_multiple_of(2) => Err(Error::OddBins(n_time_bins)),
            (_, TimeBinKind::Log) if n_time_bins < 2 => Err(Error::InvalidArgument("logarithmic time bins need at least two bins".into())),
            _ if n_time_bins == 0 => Err(Error::InvalidArgument("n_time_bins must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

/// Exit threshold `beta - alpha`, with `beta` the accuracy of the
/// full-duration baseline model.
pub fn choose_beta(baseline_accuracy: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&baseline_accuracy) {
        return Err(Error::InvalidArgument("baseline accuracy must lie in [0, 1]".into()));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument("alpha must be >= 0".into()));
    }
    if alpha > baseline_accuracy {
        return Err(Error::InvalidArgument("alpha must not exceed beta".into()));
    }
    Ok(baseline_accuracy - alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub schedule: ExitSchedule,
    pub size_binning: Binning,
    pub n_time_bins: usize,
    pub classifiers: Vec<SoftmaxModel>,
    pub beta: f64,
    pub alpha: f64,
}

/// Where and how one flow left the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowExit {
    /// Zero-based stage index.
    pub stage: usize,
    pub exit_time: f64,
    pub predicted: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub flow_id: usize,
    pub exit: FlowExit,
    pub label: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcOutcome {
    pub threshold: f64,
    pub per_flow: Vec<FlowOutcome>,
    pub accuracy: f64,
    /// Fraction of flows exiting at each stage; sums to 1.
    pub coverage: Vec<f64>,
    pub avg_exit_time: f64,
}

impl EcOutcome {
    /// Fraction of flows that have exited by each stage.
    pub fn cumulative_coverage(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.coverage
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect()
    }
}

/// Features of each flow at every stage, built from scratch.
fn stage_features(dataset: &LabeledDataset, schedule: &ExitSchedule, size: &Binning, n_time_bins: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..schedule.len())
        .map(|i| {
            let time = schedule.time_binning(i, n_time_bins)?;
            Ok(dataset
                .flows
                .iter()
                .map(|f| DistRepr::<u8>::build(f, size, &time).features())
                .collect())
        })
        .collect()
}

/// Trains one classifier per exit time on compact `dist` representations.
pub fn train_cascade(
    dataset: &LabeledDataset,
    schedule: &ExitSchedule,
    size_binning: &Binning,
    n_time_bins: usize,
    train_cfg: &TrainConfig,
) -> Result<CascadeModel> {
    schedule.check_bins(n_time_bins)?;
    if size_binning.domain() != Domain::Size {
        return Err(Error::InvalidArgument("cascade needs a size binning".into()));
    }
    let labels = dataset.labels();
    let classifiers = stage_features(dataset, schedule, size_binning, n_time_bins)?
        .iter()
        .map(|x| classifier::train(x, &labels, &dataset.classes, train_cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CascadeModel {
        schedule: schedule.clone(),
        size_binning: size_binning.clone(),
        n_time_bins,
        classifiers,
        beta: 1.0,
        alpha: 0.0,
    })
}

/// The 80/20 split used for early-classification runs: the first fold of a
/// stratified 5-fold split.
pub fn ec_split(dataset: &LabeledDataset, seed: u64) -> Result<Fold> {
    let mut folds = stratified_folds(&dataset.labels(), 5, seed)?;
    Ok(folds.swap_remove(0))
}

impl CascadeModel {
    /// Sets `beta` and `alpha` after checking `0 <= alpha <= beta <= 1`.
    pub fn with_thresholds(mut self, beta: f64, alpha: f64) -> Result<Self> {
        choose_beta(beta, alpha)?;
        self.beta = beta;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn threshold(&self) -> f64 {
        self.beta - self.alpha
    }

    pub fn n_stages(&self) -> usize {
        self.classifiers.len()
    }

    /// Accuracy of the last-stage model on every flow, i.e. the
    /// classify-after-`tau_max` baseline.
    pub fn baseline_accuracy(&self, dataset: &LabeledDataset) -> Result<f64> {
        let last = self.n_stages() - 1;
        let time = self.schedule.time_binning(last, self.n_time_bins)?;
        let x: Vec<Vec<f64>> = dataset
            .flows
            .iter()
            .map(|f| DistRepr::<u8>::build(f, &self.size_binning, &time).features())
            .collect();
        self.classifiers[last].accuracy(&x, &dataset.labels())
    }

    /// Runs one flow through the cascade with exit threshold `threshold`.
    ///
    /// `observe` sees the representation handed to each stage's classifier.
    pub fn classify_with<F>(&self, flow: &Flow, threshold: f64, mut observe: F) -> Result<FlowExit>
    where
        F: FnMut(usize, &DistRepr<u8>),
    {
        let sched = &self.schedule;
        if self.classifiers.len() != sched.len() {
            return Err(Error::DimensionMismatch {
                expected: sched.len(),
                got: self.classifiers.len(),
            });
        }
        let times = sched.times();
        let mut repr = DistRepr::<u8>::build_from_packets(
            flow.packets_before(times[0]),
            &self.size_binning,
            &sched.time_binning(0, self.n_time_bins)?,
        );
        let mut x = Vec::with_capacity(repr.dim());
        let last = sched.len() - 1;
        for (i, model) in self.classifiers.iter().enumerate() {
            observe(i, &repr);
            x.clear();
            repr.write_features(&mut x);
            let (predicted, confidence) = model.predict_with_confidence(&x)?;
            if i == last || confidence > threshold {
                return Ok(FlowExit {
                    stage: i,
                    exit_time: times[i],
                    predicted,
                    confidence,
                });
            }
            let fresh = flow.packets_between(times[i], times[i + 1]);
            match (sched.mode(), sched.time_bin_kind()) {
                (ScheduleMode::Doubling, TimeBinKind::Uniform) => repr.update_double(&self.size_binning, fresh)?,
                (ScheduleMode::Doubling, TimeBinKind::Log) => repr.update_log_shift(&self.size_binning, fresh)?,
                (ScheduleMode::PseudoLog, _) => {
                    repr = DistRepr::build_from_packets(
                        flow.packets_before(times[i + 1]),
                        &self.size_binning,
                        &sched.time_binning(i + 1, self.n_time_bins)?,
                    );
                }
            }
        }
        unreachable!("the last stage always exits")
    }

    pub fn classify(&self, flow: &Flow, threshold: f64) -> Result<FlowExit> {
        self.classify_with(flow, threshold, |_, _| {})
    }

    /// Simulates every flow of `dataset` at the model's threshold.
    pub fn simulate(&self, dataset: &LabeledDataset) -> Result<EcOutcome> {
        self.simulate_at(dataset, self.threshold())
    }

    pub fn simulate_at(&self, dataset: &LabeledDataset, threshold: f64) -> Result<EcOutcome> {
        if dataset.is_empty() {
            return Err(Error::Empty("test flows"));
        }
        let labels = dataset.labels();
        let mut per_flow = Vec::with_capacity(dataset.len());
        for (id, (flow, &label)) in dataset.flows.iter().zip(&labels).enumerate() {
            let exit = self.classify(flow, threshold)?;
            per_flow.push(FlowOutcome {
                flow_id: id,
                exit,
                label,
                correct: exit.predicted == label,
            });
        }
        Ok(summarize(threshold, per_flow, self.n_stages()))
    }
}

/// Aggregates per-flow exits.
pub fn summarize(threshold: f64, per_flow: Vec<FlowOutcome>, n_stages: usize) -> EcOutcome {
    let n = per_flow.len() as f64;
    let mut counts = vec![0usize; n_stages];
    let mut correct = 0usize;
    let mut time = 0.0;
    for o in &per_flow {
        counts[o.exit.stage] += 1;
        correct += usize::from(o.correct);
        time += o.exit.exit_time;
    }
    EcOutcome {
        threshold,
        accuracy: correct as f64 / n,
        coverage: counts.iter().map(|&c| c as f64 / n).collect(),
        avg_exit_time: time / n,
        per_flow,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub threshold: f64,
    pub accuracy: f64,
    pub avg_exit_time: f64,
    pub coverage: Vec<f64>,
}

/// Accuracy and average exit time for each `alpha`, at the model's `beta`.
pub fn alpha_sweep(model: &CascadeModel, dataset: &LabeledDataset, alphas: &[f64]) -> Result<Vec<SweepPoint>> {
    alphas
        .iter()
        .map(|&alpha| {
            let threshold = choose_beta(model.beta, alpha)?;
            let o = model.simulate_at(dataset, threshold)?;
            Ok(SweepPoint {
                alpha,
                threshold,
                accuracy: o.accuracy,
                avg_exit_time: o.avg_exit_time,
                coverage: o.coverage,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    /// Zero-based stage index.
    pub stage: usize,
    pub threshold: f64,
    /// Fraction of flows whose confidence is at least `threshold`.
    pub coverage: f64,
    /// Covered and correctly predicted, as a fraction of all flows.
    pub true_fraction: f64,
    /// Covered and wrongly predicted, as a fraction of all flows.
    pub false_fraction: f64,
}

/// Coverage and correctness of every stage classifier, on its own, as a
/// function of the confidence threshold.
pub fn confidence_profile(model: &CascadeModel, dataset: &LabeledDataset, thresholds: &[f64]) -> Result<Vec<ProfileRow>> {
    if dataset.is_empty() {
        return Err(Error::Empty("test flows"));
    }
    let labels = dataset.labels();
    let n = dataset.len() as f64;
    let feats = stage_features(dataset, &model.schedule, &model.size_binning, model.n_time_bins)?;
    let mut rows = Vec::with_capacity(model.n_stages() * thresholds.len());
    for (stage, (clf, x)) in model.classifiers.iter().zip(&feats).enumerate() {
        let preds = x
            .iter()
            .map(|r| clf.predict_with_confidence(r))
            .collect::<Result<Vec<_>>>()?;
        for &threshold in thresholds {
            let (mut right, mut wrong) = (0usize, 0usize);
            for ((p, conf), &y) in preds.iter().zip(&labels) {
                if *conf >= threshold {
                    if *p == y {
                        right += 1;
                    } else {
                        wrong += 1;
                    }
                }
            }
            rows.push(ProfileRow {
                stage,
                threshold,
                coverage: (right + wrong) as f64 / n,
                true_fraction: right as f64 / n,
                false_fraction: wrong as f64 / n,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn cfg() -> TrainConfig {
        TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        }
    }

    fn setup(kind: TimeBinKind) -> (CascadeModel, LabeledDataset) {
        let ds = synth::early_signal_corpus(60, 5.0, 1).unwrap();
        let sched = ExitSchedule::doubling(0.625, 4, kind).unwrap();
        let size = Binning::uniform(10, 1500.0, Domain::Size).unwrap();
        let m = train_cascade(&ds, &sched, &size, 4, &cfg()).unwrap();
        (m, ds)
    }

    #[test]
    fn schedules() {
        let d = ExitSchedule::doubling(0.625, 4, TimeBinKind::Uniform).unwrap();
        assert_eq!(d.times(), &[0.625, 1.25, 2.5, 5.0]);
        let p = ExitSchedule::pseudo_log(0.001, 7, TimeBinKind::Uniform).unwrap();
        let want = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];
        for (a, b) in p.times().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(ExitSchedule::new(alloc::vec![1.0, 3.0], ScheduleMode::Doubling, TimeBinKind::Uniform).is_err());
        assert!(ExitSchedule::new(alloc::vec![1.0, 2.0, 4.0], ScheduleMode::PseudoLog, TimeBinKind::Uniform).is_err());
    }

    #[test]
    fn beta_rules() {
        assert!((choose_beta(0.95, 0.05).unwrap() - 0.90).abs() < 1e-15);
        assert_eq!(choose_beta(0.95, 0.0).unwrap(), 0.95);
        assert!(choose_beta(0.5, 0.6).is_err());
        assert!(choose_beta(1.2, 0.0).is_err());
    }

    #[test]
    fn one_classifier_per_exit() {
        let (m, _) = setup(TimeBinKind::Uniform);
        assert_eq!(m.n_stages(), 4);
        let sched = ExitSchedule::doubling(0.625, 4, TimeBinKind::Uniform).unwrap();
        let ds = synth::early_signal_corpus(10, 5.0, 2).unwrap();
        assert_eq!(
            train_cascade(&ds, &sched, &m.size_binning, 3, &cfg()),
            Err(Error::OddBins(3))
        );
    }

    #[test]
    fn degenerate_thresholds() {
        let (m, ds) = setup(TimeBinKind::Uniform);
        let o = m.simulate_at(&ds, 0.0).unwrap();
        assert_eq!(o.coverage[0], 1.0);
        assert_eq!(o.avg_exit_time, 0.625);
        let o = m.simulate_at(&ds, 1.0).unwrap();
        assert_eq!(o.coverage[3], 1.0);
        assert_eq!(o.avg_exit_time, 5.0);
        assert_eq!(o.accuracy, m.baseline_accuracy(&ds).unwrap());
    }

    #[test]
    fn no_representation_drift() {
        for kind in [TimeBinKind::Uniform, TimeBinKind::Log] {
            let (m, ds) = setup(kind);
            for f in &ds.flows {
                let mut stages = 0;
                let mut addr = None;
                m.classify_with(f, 1.0, |i, r| {
                    let time = m.schedule.time_binning(i, 4).unwrap();
                    assert_eq!(*r, DistRepr::<u8>::build(f, &m.size_binning, &time));
                    let a = r.buffer_addresses();
                    assert_eq!(*addr.get_or_insert(a), a);
                    stages += 1;
                })
                .unwrap();
                assert_eq!(stages, 4);
            }
        }
    }

    #[test]
    fn pseudo_log_rebuilds() {
        let ds = synth::early_signal_corpus(30, 5.0, 3).unwrap();
        let sched = ExitSchedule::pseudo_log(0.5, 4, TimeBinKind::Uniform).unwrap();
        let size = Binning::uniform(5, 1500.0, Domain::Size).unwrap();
        let m = train_cascade(&ds, &sched, &size, 5, &cfg()).unwrap();
        for f in &ds.flows {
            m.classify_with(f, 1.0, |i, r| {
                let time = sched.time_binning(i, 5).unwrap();
                assert_eq!(*r, DistRepr::<u8>::build(f, &size, &time));
            })
            .unwrap();
        }
    }

    #[test]
    fn coverage_telescopes_and_sweep_monotone() {
        let (m, ds) = setup(TimeBinKind::Uniform);
        let m = m.with_thresholds(0.99, 0.0).unwrap();
        let sweep = alpha_sweep(&m, &ds, &[0.0, 0.02, 0.05, 0.1, 0.3]).unwrap();
        for p in &sweep {
            assert!((p.coverage.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for w in sweep.windows(2) {
            assert!(w[1].avg_exit_time <= w[0].avg_exit_time);
        }
        assert_eq!(sweep[0].accuracy, m.simulate_at(&ds, 0.99).unwrap().accuracy);
    }

    #[test]
    fn profile_edges() {
        let (m, ds) = setup(TimeBinKind::Uniform);
        let rows = confidence_profile(&m, &ds, &[0.5, 0.75, 1.0 + 1e-9]).unwrap();
        for r in &rows {
            assert!((r.true_fraction + r.false_fraction - r.coverage).abs() < 1e-12);
        }
        for stage in rows.chunks(3) {
            assert_eq!(stage[0].coverage, 1.0);
            assert!(stage[1].coverage <= stage[0].coverage);
            assert_eq!(stage[2].coverage, 0.0);
        }
    }
}
