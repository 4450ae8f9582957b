//! One-vs-all Jensen-Shannon distance between class value distributions.

use alloc::vec;
use alloc::vec::Vec;

use crate::binning::{Binning, Domain};
use crate::error::{Error, Result};
use crate::flow::{LabeledDataset, Packet};

/// Jensen-Shannon distance (square root of the base-2 divergence) between
/// two probability vectors of equal length. Lies in `[0, 1]`.
pub fn js_distance(p: &[f64], q: &[f64]) -> f64 {
    let mut div = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m2 = a + b;
        if a > 0.0 {
            div += 0.5 * a * libm::log2(2.0 * a / m2);
        }
        if b > 0.0 {
            div += 0.5 * b * libm::log2(2.0 * b / m2);
        }
    }
    libm::sqrt(div.clamp(0.0, 1.0))
}

/// Scales to unit mass; an empty histogram becomes uniform.
pub(crate) fn normalized(h: &[f64]) -> Vec<f64> {
    let total: f64 = h.iter().sum();
    if total > 0.0 {
        h.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / h.len() as f64; h.len()]
    }
}

/// Mean over classes of the distance between a class histogram and the
/// pooled histogram of all other classes.
fn one_vs_all(per_class: &[Vec<f64>]) -> f64 {
    let bins = per_class[0].len();
    let mut total = vec![0.0; bins];
    for h in per_class {
        total.iter_mut().zip(h).for_each(|(t, v)| *t += v);
    }
    let mut sum = 0.0;
    for h in per_class {
        let rest: Vec<f64> = total.iter().zip(h).map(|(t, v)| t - v).collect();
        sum += js_distance(&normalized(h), &normalized(&rest));
    }
    sum / per_class.len() as f64
}

fn check_classes(dataset: &LabeledDataset) -> Result<()> {
    if dataset.n_classes() < 2 {
        return Err(Error::TooFewClasses(dataset.n_classes()));
    }
    Ok(())
}

/// Weight of each packet of a flow: 1, or `1/len` so every flow counts once.
fn packet_weight(packets: &[Packet], flow_weighted: bool) -> f64 {
    if flow_weighted && !packets.is_empty() {
        1.0 / packets.len() as f64
    } else {
        1.0
    }
}

/// The statistical objective for an explicit binning. Size binnings pool
/// every packet; time binnings pool packets earlier than the binning's cap.
pub fn objective_jsd(binning: &Binning, dataset: &LabeledDataset, flow_weighted: bool) -> Result<f64> {
    check_classes(dataset)?;
    let mut per_class = vec![vec![0.0; binning.n_bins()]; dataset.n_classes()];
    for (flow, y) in dataset.flows.iter().zip(dataset.labels()) {
        let packets = match binning.domain() {
            Domain::Size => &flow.packets[..],
            Domain::Time => flow.packets_before(binning.cap()),
        };
        let w = packet_weight(packets, flow_weighted);
        for p in packets {
            let bin = match binning.domain() {
                Domain::Size => binning.map_size(u32::from(p.size)),
                Domain::Time => binning.map_value(p.time),
            };
            per_class[y][bin] += w;
        }
    }
    Ok(one_vs_all(&per_class))
}

/// Per-class histograms on a fine grid, re-binned cheaply for each
/// candidate boundary vector during a search.
#[derive(Debug, Clone, PartialEq)]
pub struct FineHistograms {
    domain: Domain,
    resolution: f64,
    cap: f64,
    per_class: Vec<Vec<f64>>,
}

impl FineHistograms {
    /// One cell per integer size below `cap`; larger sizes share the last cell.
    pub fn sizes(dataset: &LabeledDataset, cap: u32, flow_weighted: bool) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let cells = cap.max(1) as usize;
        let mut per_class = vec![vec![0.0; cells]; dataset.n_classes()];
        for (flow, y) in dataset.flows.iter().zip(dataset.labels()) {
            let w = packet_weight(&flow.packets, flow_weighted);
            for p in &flow.packets {
                per_class[y][(p.size as usize).min(cells - 1)] += w;
            }
        }
        Ok(FineHistograms {
            domain: Domain::Size,
            resolution: 1.0,
            cap: f64::from(cap),
            per_class,
        })
    }

    /// `resolution`-wide cells over `[0, tau)`.
    pub fn times(dataset: &LabeledDataset, tau: f64, resolution: f64, flow_weighted: bool) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if !(resolution > 0.0 && tau > 0.0) {
            return Err(Error::InvalidArgument("tau and resolution must be positive".into()));
        }
        let cells = libm::ceil(tau / resolution) as usize;
        let mut per_class = vec![vec![0.0; cells]; dataset.n_classes()];
        for (flow, y) in dataset.flows.iter().zip(dataset.labels()) {
            let packets = flow.packets_before(tau);
            let w = packet_weight(packets, flow_weighted);
            for p in packets {
                per_class[y][((p.time / resolution) as usize).min(cells - 1)] += w;
            }
        }
        Ok(FineHistograms {
            domain: Domain::Time,
            resolution,
            cap: tau,
            per_class,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    /// Raw cell weights of one class.
    pub fn cells(&self, class: usize) -> &[f64] {
        &self.per_class[class]
    }

    /// Cell weights of one class summed into the bins given by sorted
    /// `interior` boundaries. A cell belongs to the bin of its left edge.
    pub fn binned(&self, class: usize, interior: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; interior.len() + 1];
        let mut bin = 0;
        for (i, &v) in self.per_class[class].iter().enumerate() {
            let x = i as f64 * self.resolution;
            while bin < interior.len() && interior[bin] <= x {
                bin += 1;
            }
            out[bin] += v;
        }
        out
    }
}

/// The statistical objective evaluated from fine histograms.
pub fn objective_jsd_binned(hist: &FineHistograms, interior: &[f64]) -> Result<f64> {
    if hist.n_classes() < 2 {
        return Err(Error::TooFewClasses(hist.n_classes()));
    }
    let per_class: Vec<Vec<f64>> = (0..hist.n_classes()).map(|c| hist.binned(c, interior)).collect();
    Ok(one_vs_all(&per_class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Direction, Flow, FlowKey};
    use alloc::string::{String, ToString};
    use proptest::prelude::*;

    /// Reference through entropies with natural logs: H(m) - (H(p)+H(q))/2.
    fn reference(p: &[f64], q: &[f64]) -> f64 {
        let h = |v: &[f64]| -v.iter().filter(|&&x| x > 0.0).map(|&x| x * libm::log(x)).sum::<f64>();
        let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
        let d = (h(&m) - (h(p) + h(q)) / 2.0) / core::f64::consts::LN_2;
        libm::sqrt(d.max(0.0))
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(js_distance(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(js_distance(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        let d = js_distance(&[0.5, 0.5], &[1.0, 0.0]);
        assert!((d - reference(&[0.5, 0.5], &[1.0, 0.0])).abs() < 1e-12);
        // m = [0.75, 0.25]; average of KL(p||m) and KL(q||m)
        let hand = 0.5 * (0.5 * libm::log2(0.5 / 0.75) + 0.5 * libm::log2(0.5 / 0.25)) + 0.5 * libm::log2(1.0 / 0.75);
        assert!((d - libm::sqrt(hand)).abs() < 1e-12);
    }

    fn flow(sizes: &[u16], label: &str) -> Flow {
        Flow {
            key: FlowKey::new("a", "b", 1, 2, 6),
            label: Some(label.to_string()),
            packets: sizes
                .iter()
                .enumerate()
                .map(|(i, &s)| Packet::new(i as f64 * 0.1, s, Direction::Forward))
                .collect(),
        }
    }

    fn two_class() -> LabeledDataset {
        LabeledDataset::from_flows(alloc::vec![
            flow(&[100, 120, 180], "a"),
            flow(&[150, 110], "a"),
            flow(&[900, 950, 990, 1400], "b"),
        ])
        .unwrap()
    }

    #[test]
    fn separated_classes_score_one() {
        let ds = two_class();
        let b = Binning::from_interior(&[500.0], 1500.0, Domain::Size).unwrap();
        assert_eq!(objective_jsd(&b, &ds, false).unwrap(), 1.0);
        let b = Binning::uniform(1, 1500.0, Domain::Size).unwrap();
        assert_eq!(objective_jsd(&b, &ds, false).unwrap(), 0.0);
    }

    #[test]
    fn fine_matches_direct() {
        let ds = two_class();
        let fine = FineHistograms::sizes(&ds, 1500, false).unwrap();
        for interior in [alloc::vec![100.0, 500.0, 990.0], alloc::vec![120.0], alloc::vec![1.0, 2.0, 1499.0]] {
            let b = Binning::from_interior(&interior, 1500.0, Domain::Size).unwrap();
            let direct = objective_jsd(&b, &ds, false).unwrap();
            assert!((direct - objective_jsd_binned(&fine, &interior).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_class_rejected() {
        let ds = LabeledDataset::with_classes(alloc::vec![String::from("a")], alloc::vec![flow(&[1], "a")]).unwrap();
        let b = Binning::uniform(2, 1500.0, Domain::Size).unwrap();
        assert_eq!(objective_jsd(&b, &ds, false), Err(Error::TooFewClasses(1)));
    }

    fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_map(|v| normalized(&v))
    }

    proptest! {
        #[test]
        fn agrees_with_reference((p, q) in (2usize..40).prop_flat_map(|n| (dist(n), dist(n)))) {
            let d = js_distance(&p, &q);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert!((d - reference(&p, &q)).abs() < 1e-12);
            prop_assert!((d - js_distance(&q, &p)).abs() < 1e-15);
        }

        #[test]
        fn refinement_never_lowers_objective(a in 1u16..1499, b in 1u16..1499) {
            let ds = two_class();
            let fine = FineHistograms::sizes(&ds, 1500, false).unwrap();
            let coarse = objective_jsd_binned(&fine, &[f64::from(a)]).unwrap();
            let mut both = alloc::vec![f64::from(a), f64::from(b)];
            both.sort_by(f64::total_cmp);
            both.dedup();
            let fine_obj = objective_jsd_binned(&fine, &both).unwrap();
            prop_assert!(fine_obj >= coarse - 1e-12);
        }
    }
}
