//! CSV and binary exports of representations and results.

use std::io::Write;

use echoflow_core::cascade::{EcOutcome, ProfileRow, SweepPoint};
use echoflow_core::optimizer::ExplainReport;
use echoflow_core::repr::{FlowPic, ReprKind, StatsRepr, TimeSeries, STAT_FEATURE_NAMES};
use echoflow_core::{Binning, DistRepr, Flow, LabeledDataset};

use crate::error::{IoError, Result};

/// A representation kind with its parameters fixed.
#[derive(Debug, Clone)]
pub enum ReprSpec {
    Dist { size: Binning, time: Binning },
    TimeSeries { n: usize },
    FlowPic { n: usize, tau: f64, size_cap: f64 },
    Stats,
}

impl ReprSpec {
    pub fn kind(&self) -> ReprKind {
        match self {
            ReprSpec::Dist { .. } => ReprKind::Dist,
            ReprSpec::TimeSeries { .. } => ReprKind::TimeSeries,
            ReprSpec::FlowPic { .. } => ReprKind::FlowPic,
            ReprSpec::Stats => ReprKind::Stats,
        }
    }

    pub fn columns(&self) -> Vec<String> {
        match self {
            ReprSpec::Dist { size, time } => {
                let mut cols = Vec::new();
                for dir in ["fwd", "bwd"] {
                    cols.extend((0..size.n_bins()).map(|i| format!("size_{dir}_{i}")));
                    cols.extend((0..time.n_bins()).map(|i| format!("time_{dir}_{i}")));
                }
                cols
            }
            ReprSpec::TimeSeries { n } => (0..*n)
                .flat_map(|i| [format!("t_{i}"), format!("size_{i}"), format!("dir_{i}")])
                .collect(),
            ReprSpec::FlowPic { n, .. } => ["fwd", "bwd"]
                .iter()
                .flat_map(|d| (0..n * n).map(move |c| format!("{d}_{}_{}", c / n, c % n)))
                .collect(),
            ReprSpec::Stats => STAT_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn features(&self, flow: &Flow) -> Result<Vec<f64>> {
        Ok(match self {
            ReprSpec::Dist { size, time } => DistRepr::<u8>::build(flow, size, time).features(),
            ReprSpec::TimeSeries { n } => TimeSeries::build(flow, *n).features(),
            ReprSpec::FlowPic { n, tau, size_cap } => FlowPic::<u8>::build(flow, *n, *tau, *size_cap)?.features(),
            ReprSpec::Stats => StatsRepr::build(flow).features(),
        })
    }

    /// Compact binary form of one flow.
    pub fn bytes(&self, flow: &Flow) -> Result<Vec<u8>> {
        Ok(match self {
            ReprSpec::Dist { size, time } => DistRepr::<u8>::build(flow, size, time).to_bytes(),
            ReprSpec::TimeSeries { n } => TimeSeries::build(flow, *n).to_bytes(),
            ReprSpec::FlowPic { n, tau, size_cap } => FlowPic::<u8>::build(flow, *n, *tau, *size_cap)?.to_bytes(),
            ReprSpec::Stats => StatsRepr::build(flow).to_bytes(),
        })
    }
}

/// One row per flow: `label` then the feature columns.
pub fn write_repr_csv<W: Write>(writer: W, dataset: &LabeledDataset, spec: &ReprSpec) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string()];
    header.extend(spec.columns());
    w.write_record(&header)?;
    for f in &dataset.flows {
        let mut row = vec![f.label.clone().unwrap_or_default()];
        row.extend(spec.features(f)?.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(IoError::from)?;
    Ok(())
}

/// Flow records back to back, in dataset order.
pub fn write_repr_binary<W: Write>(mut writer: W, dataset: &LabeledDataset, spec: &ReprSpec) -> Result<()> {
    for f in &dataset.flows {
        writer.write_all(&spec.bytes(f)?)?;
    }
    writer.flush()?;
    Ok(())
}

/// `flow_id,exit_stage,exit_time,pred,label,confidence`, with one-based
/// stages and class names.
pub fn write_ec_flows<W: Write>(writer: W, outcome: &EcOutcome, classes: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["flow_id", "exit_stage", "exit_time", "pred", "label", "confidence"])?;
    for o in &outcome.per_flow {
        w.write_record([
            o.flow_id.to_string(),
            (o.exit.stage + 1).to_string(),
            o.exit.exit_time.to_string(),
            classes[o.exit.predicted].clone(),
            classes[o.label].clone(),
            format!("{:.6}", o.exit.confidence),
        ])?;
    }
    w.flush().map_err(IoError::from)?;
    Ok(())
}

pub fn write_profile<W: Write>(writer: W, rows: &[ProfileRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["stage", "threshold", "coverage", "true_fraction", "false_fraction"])?;
    for r in rows {
        w.write_record([
            (r.stage + 1).to_string(),
            format!("{:.4}", r.threshold),
            format!("{:.6}", r.coverage),
            format!("{:.6}", r.true_fraction),
            format!("{:.6}", r.false_fraction),
        ])?;
    }
    w.flush().map_err(IoError::from)?;
    Ok(())
}

pub fn write_sweep<W: Write>(writer: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["alpha", "threshold", "accuracy", "avg_exit_time"])?;
    for p in points {
        w.write_record([
            p.alpha.to_string(),
            format!("{:.6}", p.threshold),
            format!("{:.6}", p.accuracy),
            format!("{:.6}", p.avg_exit_time),
        ])?;
    }
    w.flush().map_err(IoError::from)?;
    Ok(())
}

/// `value` (cell start) then one column per class.
pub fn write_explain_csv<W: Write>(writer: W, report: &ExplainReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["value".to_string()];
    header.extend(report.classes.iter().map(|c| c.class.clone()));
    w.write_record(&header)?;
    let cells = report.classes.first().map_or(0, |c| c.histogram.len());
    for i in 0..cells {
        let mut row = vec![(i as f64 * report.resolution).to_string()];
        row.extend(report.classes.iter().map(|c| format!("{:.8}", c.histogram[i])));
        w.write_record(&row)?;
    }
    w.flush().map_err(IoError::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use echoflow_core::{synth, Domain};

    #[test]
    fn dist_binary_is_four_n_bytes_per_flow() {
        let ds = synth::separable_corpus(3, 1.0, 1).unwrap();
        let spec = ReprSpec::Dist {
            size: Binning::uniform(5, 1500.0, Domain::Size).unwrap(),
            time: Binning::uniform(5, 1.0, Domain::Time).unwrap(),
        };
        let mut buf = Vec::new();
        write_repr_binary(&mut buf, &ds, &spec).unwrap();
        assert_eq!(buf.len(), ds.len() * 20);
    }

    #[test]
    fn repr_csv_columns_match_features() {
        let ds = synth::separable_corpus(2, 1.0, 1).unwrap();
        for spec in [
            ReprSpec::TimeSeries { n: 4 },
            ReprSpec::FlowPic { n: 3, tau: 1.0, size_cap: 1500.0 },
            ReprSpec::Stats,
        ] {
            let mut buf = Vec::new();
            write_repr_csv(&mut buf, &ds, &spec).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let widths: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
            assert_eq!(widths.len(), ds.len() + 1);
            assert!(widths.iter().all(|&w| w == spec.columns().len() + 1));
        }
    }
}
