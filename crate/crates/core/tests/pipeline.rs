use echoflow_core::cascade::{self, ExitSchedule, TimeBinKind};
use echoflow_core::flow::stratified_folds;
use echoflow_core::optimizer::{nested_cv, objective_jsd, NcvConfig, Strategy};
use echoflow_core::repr::ExactDist;
use echoflow_core::{synth, Binning, Direction, DistRepr, Domain, TrainConfig};
use proptest::prelude::*;

fn planted_band() -> Binning {
    let (lo, hi) = synth::PLANTED_BAND;
    Binning::from_interior(&[100.0, f64::from(lo), f64::from(hi), 1000.0], 1500.0, Domain::Size).unwrap()
}

#[test]
fn band_edges_score_higher_than_uniform_bins() {
    let ds = synth::planted_corpus(200, 1.0, 4).unwrap();
    let uniform = Binning::uniform(5, 1500.0, Domain::Size).unwrap();
    let band = objective_jsd(&planted_band(), &ds, false).unwrap();
    let flat = objective_jsd(&uniform, &ds, false).unwrap();
    assert!(band > flat + 0.1, "band {band} uniform {flat}");
}

#[test]
fn statistical_selection_finds_the_planted_band() {
    let ds = synth::planted_corpus(120, 1.0, 2).unwrap();
    let mut cfg = NcvConfig::new(Strategy::Statistical, 5);
    cfg.eval.tau = 1.0;
    cfg.eval.n_time_bins = 4;
    cfg.eval.train.epochs = 60;
    cfg.tpe.n_iterations = 120;
    let report = nested_cv(&ds, &cfg).unwrap();
    assert_eq!(report.per_fold.len(), 5);
    let (lo, hi) = synth::PLANTED_BAND;
    for fold in &report.per_fold {
        let b = &fold.boundaries;
        assert!(b.iter().any(|&x| (x - f64::from(lo)).abs() <= 5.0), "{b:?}");
        assert!(b.iter().any(|&x| (x - f64::from(hi)).abs() <= 5.0), "{b:?}");
    }
    assert!(report.mean > 0.9, "{}", report.mean);
}

#[test]
fn cascade_on_separable_classes_exits_early() {
    let ds = synth::separable_corpus(60, 2.0, 5).unwrap();
    let schedule = ExitSchedule::doubling(0.25, 4, TimeBinKind::Log).unwrap();
    let size = Binning::uniform(5, 1500.0, Domain::Size).unwrap();
    let split = cascade::ec_split(&ds, 5).unwrap();
    let model = cascade::train_cascade(&ds.subset(&split.train), &schedule, &size, 4, &TrainConfig::default()).unwrap();
    let test = ds.subset(&split.test);
    let baseline = model.baseline_accuracy(&test).unwrap();
    let out = model.with_thresholds(baseline, 0.05).unwrap().simulate(&test).unwrap();
    assert!(out.accuracy >= baseline - 0.05);
    assert!(out.avg_exit_time < 0.5 * schedule.tau_max(), "{}", out.avg_exit_time);
    assert!((out.coverage.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn folds_partition_every_index(n_per_class in 2usize..40, classes in 2usize..5, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(n_per_class >= k);
        let labels: Vec<usize> = (0..classes * n_per_class).map(|i| i % classes).collect();
        let folds = stratified_folds(&labels, k, seed).unwrap();
        let mut seen = vec![0usize; labels.len()];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            prop_assert_eq!(f.train.len() + f.test.len(), labels.len());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn synthetic_flows_fill_histograms_consistently(seed in any::<u64>(), tau in 0.5f64..4.0) {
        let ds = synth::planted_corpus(3, tau, seed).unwrap();
        let size = Binning::uniform(7, 1500.0, Domain::Size).unwrap();
        let time = Binning::uniform(6, tau, Domain::Time).unwrap();
        for flow in &ds.flows {
            prop_assert_eq!(flow.packets[0].time, 0.0);
            let exact: ExactDist = DistRepr::build(flow, &size, &time);
            let compact: DistRepr<u8> = DistRepr::build(flow, &size, &time);
            for dir in [Direction::Forward, Direction::Backward] {
                let in_window = flow.packets_before(tau).iter().filter(|p| p.direction == dir).count() as u64;
                let sizes: u64 = exact.sizes(dir).iter().map(|&c| u64::from(c)).sum();
                prop_assert_eq!(sizes, in_window);
                for (a, b) in exact.sizes(dir).iter().zip(compact.sizes(dir)) {
                    prop_assert_eq!(u32::from(*b), (*a).min(255));
                }
            }
        }
    }
}
