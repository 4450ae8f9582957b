//! Per-class value distributions next to chosen boundaries, for inspecting
//! why a binning separates the classes.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::jsd::{normalized, FineHistograms};
use crate::binning::{Binning, Domain};
use crate::error::Result;
use crate::flow::LabeledDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub class: String,
    /// Fraction of the class's packets per fine cell; sums to 1.
    pub histogram: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub domain: Domain,
    /// Width of a fine cell (1 byte for sizes).
    pub resolution: f64,
    pub boundaries: Vec<f64>,
    pub classes: Vec<ClassHistogram>,
}

/// Fine per-class histograms over the domain of `binning`. Time histograms
/// use `time_resolution`-wide cells; sizes use one cell per byte.
pub fn explainability(binning: &Binning, dataset: &LabeledDataset, time_resolution: f64) -> Result<ExplainReport> {
    let fine = match binning.domain() {
        Domain::Size => FineHistograms::sizes(dataset, libm::ceil(binning.cap()) as u32, false)?,
        Domain::Time => FineHistograms::times(dataset, binning.cap(), time_resolution, false)?,
    };
    let classes = dataset
        .classes
        .iter()
        .enumerate()
        .map(|(c, name)| ClassHistogram {
            class: name.clone(),
            histogram: normalized(fine.cells(c)),
        })
        .collect();
    Ok(ExplainReport {
        domain: binning.domain(),
        resolution: fine.resolution(),
        boundaries: binning.boundaries().to_vec(),
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn histograms_normalized() {
        let ds = synth::planted_corpus(10, 1.0, 1).unwrap();
        let b = Binning::from_interior(&[76.0, 168.0, 370.0, 380.0], 1500.0, Domain::Size).unwrap();
        let r = explainability(&b, &ds, 0.01).unwrap();
        assert_eq!(r.boundaries, [0.0, 76.0, 168.0, 370.0, 380.0, 1500.0]);
        assert_eq!(r.classes.len(), 2);
        for c in &r.classes {
            assert_eq!(c.histogram.len(), 1500);
            assert!((c.histogram.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let t = Binning::uniform(4, 1.0, Domain::Time).unwrap();
        let r = explainability(&t, &ds, 0.01).unwrap();
        assert_eq!(r.classes[0].histogram.len(), 100);
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = LabeledDataset::with_classes(alloc::vec![String::from("a")], Vec::new()).unwrap();
        let b = Binning::uniform(2, 1500.0, Domain::Size).unwrap();
        assert!(explainability(&b, &ds, 0.01).is_err());
    }
}
