//! The `echoflow` subcommands. Each reads a [`RunConfig`], writes its
//! artifacts under `out_dir` and finishes with a manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use echoflow_core::cascade::{self, ScheduleMode, TimeBinKind};
use echoflow_core::classifier::{self, kfold_evaluate, EvalReport};
use echoflow_core::flow::{balance_undersample, filter_flows, FilterParams};
use echoflow_core::optimizer::{explainability, outer_fold, outer_folds, select, EvalConfig, NcvConfig, NcvReport, Strategy, TpeConfig};
use echoflow_core::repr::{estimate_memory, format_bytes, repr_bytes, ReprKind};
use echoflow_core::{flow, rng, synth, Binning, Domain, ExitSchedule, LabeledDataset, TrainConfig};

use crate::config::RunConfig;
use crate::csv_io::{read_packets, write_packets};
use crate::export::{self, ReprSpec};
use crate::formats::{read_dataset, read_json, write_bytes, write_json};
use crate::manifest::{parent_of, write_manifest, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Ingest,
    Optimize,
    Train,
    Ec,
    Explain,
    Bench,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Synth,
        Command::Ingest,
        Command::Optimize,
        Command::Train,
        Command::Ec,
        Command::Explain,
        Command::Bench,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Ingest => "ingest",
            Command::Optimize => "optimize",
            Command::Train => "train",
            Command::Ec => "ec",
            Command::Explain => "explain",
            Command::Bench => "bench",
        }
    }
}

/// A configuration value the command line should have rejected; the binary
/// reports it with usage text and exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn run(command: Command, cfg: &RunConfig) -> anyhow::Result<Manifest> {
    let seed = cfg.seed()?;
    strategy(cfg)?;
    let out_dir = cfg.path("out_dir").unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let threads: usize = cfg.get("threads")?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let ctx = Ctx { cfg, out_dir, seed };
    let (files, parent) = pool
        .install(|| match command {
            Command::Synth => ctx.synth(),
            Command::Ingest => ctx.ingest(),
            Command::Optimize => ctx.optimize(),
            Command::Train => ctx.train(),
            Command::Ec => ctx.ec(),
            Command::Explain => ctx.explain(),
            Command::Bench => ctx.bench(),
        })
        .with_context(|| format!("{} failed", command.name()))?;
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    Ok(write_manifest(&ctx.out_dir, command.name(), cfg.hash(), parent, seed, &names)?)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out_dir: PathBuf,
    seed: u64,
}

type Outputs = (Vec<String>, Option<String>);

pub fn strategy(cfg: &RunConfig) -> anyhow::Result<Strategy> {
    let raw = cfg.raw("strategy").unwrap_or("");
    Strategy::from_str(raw).map_err(|e| UsageError(e.to_string()).into())
}

pub fn train_config(cfg: &RunConfig, seed: u64) -> anyhow::Result<TrainConfig> {
    let t = TrainConfig {
        learning_rate: cfg.get("learning_rate")?,
        epochs: cfg.get("epochs")?,
        l2_lambda: cfg.get("l2_lambda")?,
        batch_size: cfg.get("batch_size")?,
        seed,
    };
    t.validate()?;
    Ok(t)
}

pub fn eval_config(cfg: &RunConfig, seed: u64) -> anyhow::Result<EvalConfig> {
    Ok(EvalConfig {
        tau: cfg.get("tau")?,
        size_cap: cfg.get("size_cap")?,
        n_time_bins: cfg.get("n_time_bins")?,
        inner_k: cfg.get("inner_k")?,
        train: train_config(cfg, seed)?,
    })
}

pub fn ncv_config(cfg: &RunConfig, seed: u64) -> anyhow::Result<NcvConfig> {
    let mut c = NcvConfig::new(strategy(cfg)?, cfg.get("n_size_bins")?);
    c.outer_k = cfg.get("outer_k")?;
    c.eval = eval_config(cfg, seed)?;
    c.tpe = TpeConfig {
        n_iterations: cfg.get("tpe_iterations")?,
        n_startup_random: cfg.get("tpe_startup")?,
        gamma: cfg.get("tpe_gamma")?,
        n_ei_candidates: cfg.get("tpe_candidates")?,
        seed,
    };
    c.tpe.validate()?;
    c.greedy_stride = cfg.get("greedy_stride")?;
    c.fs_resolutions = cfg.list("fs_resolutions")?;
    c.flow_weighted = cfg.get("flow_weighted")?;
    c.optimize_time = cfg.get("optimize_time")?;
    c.time_grid_cells = cfg.get("time_grid_cells")?;
    c.seed = seed;
    Ok(c)
}

/// Nested cross-validation with outer folds run on the rayon pool. The
/// report is identical to the sequential one.
pub fn nested_cv_parallel(dataset: &LabeledDataset, cfg: &NcvConfig) -> echoflow_core::Result<NcvReport> {
    let folds = outer_folds(dataset, cfg)?;
    let per_fold = folds
        .par_iter()
        .enumerate()
        .map(|(i, f)| outer_fold(dataset, f, i, cfg))
        .collect::<echoflow_core::Result<Vec<_>>>()?;
    Ok(NcvReport::from_folds(cfg, per_fold))
}

#[derive(Serialize)]
struct SelectionDoc<'a> {
    strategy: String,
    n_bins: usize,
    objective: Option<f64>,
    size_binning: &'a Binning,
    time_binning: &'a Binning,
    selected_bins: Option<&'a [usize]>,
}

#[derive(Serialize)]
struct IngestSummary {
    records: usize,
    assembled: usize,
    after_filter: usize,
    after_balance: usize,
    class_counts: Vec<(String, usize)>,
}

#[derive(Serialize)]
struct EcSummary<'a> {
    beta: f64,
    alpha: f64,
    threshold: f64,
    exit_times: &'a [f64],
    train_flows: usize,
    test_flows: usize,
    baseline_accuracy: f64,
    accuracy: f64,
    avg_exit_time: f64,
    coverage: &'a [f64],
    cumulative_coverage: Vec<f64>,
    alpha_sweep: &'a [cascade::SweepPoint],
}

#[derive(Serialize)]
struct MemoryRow {
    repr: String,
    bytes_per_flow: u64,
    flow_rate: f64,
    tau: f64,
    total_bytes: f64,
    total: String,
}

#[derive(Serialize)]
struct BenchReport {
    repr: String,
    batch_size: usize,
    batches: u64,
    flows: u64,
    seconds: f64,
    flows_per_second: f64,
}

impl Ctx<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn writer(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let p = self.out(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    fn dataset(&self) -> anyhow::Result<(LabeledDataset, PathBuf)> {
        let path = self.cfg.require_path("dataset")?;
        let ds = read_dataset(&path).with_context(|| format!("reading dataset {}", path.display()))?;
        Ok((ds, path))
    }

    /// Size binning from the `binning` file, or uniform `n_size_bins`.
    fn size_binning(&self) -> anyhow::Result<Binning> {
        match self.cfg.path("binning") {
            Some(p) => {
                let b: Binning = read_json(&p).with_context(|| format!("reading binning {}", p.display()))?;
                if b.domain() != Domain::Size {
                    bail!("{} is not a packet-size binning", p.display());
                }
                Ok(b)
            }
            None => Ok(Binning::uniform(self.cfg.get("n_size_bins")?, self.cfg.get("size_cap")?, Domain::Size)?),
        }
    }

    fn time_binning(&self) -> anyhow::Result<Binning> {
        Ok(Binning::uniform(self.cfg.get("n_time_bins")?, self.cfg.get("tau")?, Domain::Time)?)
    }

    fn repr_spec(&self) -> anyhow::Result<ReprSpec> {
        let kind: ReprKind = self.cfg.get::<String>("repr")?.parse()?;
        let n = self.cfg.get("repr_n")?;
        Ok(match kind {
            ReprKind::Dist => ReprSpec::Dist {
                size: self.size_binning()?,
                time: self.time_binning()?,
            },
            ReprKind::TimeSeries => ReprSpec::TimeSeries { n },
            ReprKind::FlowPic => ReprSpec::FlowPic {
                n,
                tau: self.cfg.get("tau")?,
                size_cap: self.cfg.get("size_cap")?,
            },
            ReprKind::Stats => ReprSpec::Stats,
        })
    }

    fn synth(&self) -> anyhow::Result<Outputs> {
        let fpc = self.cfg.get("flows_per_class")?;
        let tau: f64 = self.cfg.get("synth_tau")?;
        let ds = match self.cfg.get::<String>("synth_corpus")?.as_str() {
            "planted" => synth::planted_corpus(fpc, tau, self.seed)?,
            "separable" => synth::separable_corpus(fpc, tau, self.seed)?,
            "early" => synth::early_signal_corpus(fpc, tau, self.seed)?,
            "late" => synth::late_signal_corpus(fpc, tau, self.cfg.get("onset")?, self.seed)?,
            other => bail!("unknown synth_corpus `{other}` (expected planted|separable|early|late)"),
        };
        let records = synth::to_records(&ds, self.cfg.get("flow_spacing")?);
        write_packets(self.writer("packets.csv")?, &records)?;
        Ok((vec!["packets.csv".into()], None))
    }

    fn ingest(&self) -> anyhow::Result<Outputs> {
        let path = self.cfg.require_path("packets")?;
        let records = read_packets(&path).with_context(|| format!("reading {}", path.display()))?;
        let n_records = records.len();
        let tau: f64 = self.cfg.get("tau")?;
        let flows = flow::assemble_flows(records, tau)?;
        let assembled = flows.len();
        let params = FilterParams::new(tau, self.cfg.get("min_packets")?, self.cfg.get("min_bytes")?, self.cfg.get("min_duration")?)?;
        let flows: Vec<_> = filter_flows(flows, &params).into_iter().filter(|f| f.label.is_some()).collect();
        let after_filter = flows.len();
        let mut ds = LabeledDataset::from_flows(flows)?;
        if self.cfg.get::<bool>("balance")? {
            ds = balance_undersample(&ds, self.seed)?;
        }
        write_json(&self.out("dataset.json"), &ds)?;
        let summary = IngestSummary {
            records: n_records,
            assembled,
            after_filter,
            after_balance: ds.len(),
            class_counts: ds.classes.iter().cloned().zip(ds.class_counts()).collect(),
        };
        write_json(&self.out("ingest_summary.json"), &summary)?;
        Ok((vec!["dataset.json".into(), "ingest_summary.json".into()], parent_of(&path)))
    }

    fn optimize(&self) -> anyhow::Result<Outputs> {
        let (ds, path) = self.dataset()?;
        let ncv = ncv_config(self.cfg, self.seed)?;
        let report = nested_cv_parallel(&ds, &ncv)?;
        write_json(&self.out("ncv.json"), &report)?;

        // Boundaries for downstream runs are chosen once more on all flows.
        let sel = select(&ds, &ncv, rng::derive_seed(self.seed, ncv.outer_k as u64))?;
        let doc = SelectionDoc {
            strategy: report.strategy.clone(),
            n_bins: ncv.n_bins,
            objective: sel.objective,
            size_binning: sel.map.size.binning(),
            time_binning: &sel.map.time,
            selected_bins: sel.fs.as_ref().map(|r| r.bins.as_slice()),
        };
        write_json(&self.out("selection.json"), &doc)?;
        write_json(&self.out("binning.json"), sel.map.size.binning())?;
        Ok((
            vec!["ncv.json".into(), "selection.json".into(), "binning.json".into()],
            parent_of(&path),
        ))
    }

    fn train(&self) -> anyhow::Result<Outputs> {
        let (ds, path) = self.dataset()?;
        let spec = self.repr_spec()?;
        let tc = train_config(self.cfg, self.seed)?;
        let x = ds.flows.iter().map(|f| spec.features(f)).collect::<crate::error::Result<Vec<_>>>()?;
        let labels = ds.labels();
        let report: EvalReport = kfold_evaluate(&x, &labels, &ds.classes, self.cfg.get("k")?, &tc)?;
        let model = classifier::train(&x, &labels, &ds.classes, &tc)?;
        write_json(&self.out("eval.json"), &report)?;
        write_json(&self.out("model.json"), &model)?;
        let mut files = vec!["eval.json".to_string(), "model.json".to_string()];
        if self.cfg.get::<bool>("export_repr")? {
            export::write_repr_csv(self.writer("repr.csv")?, &ds, &spec)?;
            let mut bin = Vec::new();
            export::write_repr_binary(&mut bin, &ds, &spec)?;
            write_bytes(&self.out("repr.bin"), &bin)?;
            files.extend(["repr.csv".into(), "repr.bin".into()]);
        }
        Ok((files, parent_of(&path)))
    }

    fn schedule(&self) -> anyhow::Result<ExitSchedule> {
        let kind = match self.cfg.get::<String>("time_bins")?.as_str() {
            "uniform" => TimeBinKind::Uniform,
            "log" => TimeBinKind::Log,
            other => bail!("unknown time_bins `{other}` (expected uniform|log)"),
        };
        let tau_1 = self.cfg.get("tau_1")?;
        let stages = self.cfg.get("stages")?;
        Ok(match self.cfg.get::<String>("schedule_mode")?.as_str() {
            "doubling" => ExitSchedule::doubling(tau_1, stages, kind)?,
            "pseudo_log" => ExitSchedule::pseudo_log(tau_1, stages, kind)?,
            other => bail!("unknown schedule_mode `{other}` (expected doubling|pseudo_log)"),
        })
    }

    fn ec(&self) -> anyhow::Result<Outputs> {
        let (ds, path) = self.dataset()?;
        let schedule = self.schedule()?;
        debug_assert!(matches!(schedule.mode(), ScheduleMode::Doubling | ScheduleMode::PseudoLog));
        let size = self.size_binning()?;
        let tc = train_config(self.cfg, self.seed)?;
        let split = cascade::ec_split(&ds, self.seed)?;
        let train = ds.subset(&split.train);
        let test = ds.subset(&split.test);
        let model = cascade::train_cascade(&train, &schedule, &size, self.cfg.get("n_time_bins")?, &tc)?;
        let baseline = model.baseline_accuracy(&test)?;
        let model = model.with_thresholds(baseline, self.cfg.get("alpha")?)?;
        let outcome = model.simulate(&test)?;
        let sweep = cascade::alpha_sweep(&model, &test, &self.cfg.list::<f64>("alphas")?)?;
        let steps: usize = self.cfg.get("profile_steps")?;
        let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / steps.max(1) as f64).collect();
        let profile = cascade::confidence_profile(&model, &test, &grid)?;

        write_json(&self.out("cascade.json"), &model)?;
        export::write_ec_flows(self.writer("ec_flows.csv")?, &outcome, &ds.classes)?;
        export::write_sweep(self.writer("alpha_sweep.csv")?, &sweep)?;
        export::write_profile(self.writer("confidence_profile.csv")?, &profile)?;
        let summary = EcSummary {
            beta: model.beta,
            alpha: model.alpha,
            threshold: model.threshold(),
            exit_times: schedule.times(),
            train_flows: train.len(),
            test_flows: test.len(),
            baseline_accuracy: baseline,
            accuracy: outcome.accuracy,
            avg_exit_time: outcome.avg_exit_time,
            coverage: &outcome.coverage,
            cumulative_coverage: outcome.cumulative_coverage(),
            alpha_sweep: &sweep,
        };
        write_json(&self.out("ec_summary.json"), &summary)?;
        Ok((
            ["cascade.json", "ec_flows.csv", "alpha_sweep.csv", "confidence_profile.csv", "ec_summary.json"]
                .map(String::from)
                .to_vec(),
            parent_of(&path),
        ))
    }

    fn explain(&self) -> anyhow::Result<Outputs> {
        let (ds, path) = self.dataset()?;
        let binning = match self.cfg.get::<String>("explain_domain")?.as_str() {
            "size" => self.size_binning()?,
            "time" => self.time_binning()?,
            other => bail!("unknown explain_domain `{other}` (expected size|time)"),
        };
        let report = explainability(&binning, &ds, self.cfg.get("time_resolution")?)?;
        write_json(&self.out("explain.json"), &report)?;
        export::write_explain_csv(self.writer("explain.csv")?, &report)?;
        Ok((vec!["explain.json".into(), "explain.csv".into()], parent_of(&path)))
    }

    fn bench(&self) -> anyhow::Result<Outputs> {
        let flow_rate: f64 = self.cfg.get("flow_rate")?;
        let mem_tau: f64 = self.cfg.get("memory_tau")?;
        let n: usize = self.cfg.get("memory_n")?;
        let rows: Vec<MemoryRow> = [ReprKind::Dist, ReprKind::TimeSeries, ReprKind::FlowPic, ReprKind::Stats]
            .into_iter()
            .map(|k| {
                let bytes = estimate_memory(k, n, flow_rate, mem_tau);
                MemoryRow {
                    repr: if k == ReprKind::Stats { "sts".into() } else { format!("{k}({n})") },
                    bytes_per_flow: repr_bytes(k, n),
                    flow_rate,
                    tau: mem_tau,
                    total_bytes: bytes,
                    total: format!("{}B", format_bytes(bytes)),
                }
            })
            .collect();
        write_json(&self.out("memory.json"), &rows)?;
        let mut files = vec!["memory.json".to_string()];
        let mut parent = None;

        if self.cfg.path("dataset").is_some() {
            let (ds, path) = self.dataset()?;
            parent = parent_of(&path);
            let report = self.throughput(&ds)?;
            write_json(&self.out("bench.json"), &report)?;
            files.push("bench.json".into());
        }
        Ok((files, parent))
    }

    /// Flows per second through representation building and prediction,
    /// in fixed-size batches, cycling over the dataset.
    fn throughput(&self, ds: &LabeledDataset) -> anyhow::Result<BenchReport> {
        let spec = self.repr_spec()?;
        let tc = train_config(self.cfg, self.seed)?;
        let x = ds.flows.iter().map(|f| spec.features(f)).collect::<crate::error::Result<Vec<_>>>()?;
        let model = classifier::train(&x, &ds.labels(), &ds.classes, &tc)?;
        let batch: usize = self.cfg.get("bench_batch")?;
        let budget = Duration::from_secs_f64(self.cfg.get("bench_seconds")?);
        if batch == 0 || ds.is_empty() {
            bail!("bench needs a non-empty dataset and bench_batch >= 1");
        }
        let dim = model.dim();
        let mut rows = Vec::with_capacity(batch * dim);
        let mut preds = vec![0usize; batch];
        let (mut flows, mut batches, mut next) = (0u64, 0u64, 0usize);
        let start = Instant::now();
        loop {
            rows.clear();
            for _ in 0..batch {
                rows.extend(spec.features(&ds.flows[next])?);
                next = (next + 1) % ds.len();
            }
            model.predict_batch(&rows, &mut preds)?;
            flows += batch as u64;
            batches += 1;
            if start.elapsed() >= budget {
                break;
            }
        }
        let seconds = start.elapsed().as_secs_f64();
        Ok(BenchReport {
            repr: spec.kind().to_string(),
            batch_size: batch,
            batches,
            flows,
            seconds,
            flows_per_second: flows as f64 / seconds,
        })
    }
}

/// Loads `path` (if any) and applies `key=value` overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> crate::error::Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::defaults(),
    };
    for o in overrides {
        cfg.set_pair(o)?;
    }
    Ok(cfg)
}
