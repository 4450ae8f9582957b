//! Packet records, flow assembly and dataset preparation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Five-tuple flow identifier. Addresses are kept as opaque strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowKey {
    pub src_addr: String,
    pub dst_addr: String,
    pub src_port: u16,
    pub dst_port: u16,
    pub proto: u8,
}

impl FlowKey {
    pub fn new(src_addr: &str, dst_addr: &str, src_port: u16, dst_port: u16, proto: u8) -> Self {
        FlowKey {
            src_addr: src_addr.into(),
            dst_addr: dst_addr.into(),
            src_port,
            dst_port,
            proto,
        }
    }

    /// The key as seen by packets travelling the other way.
    pub fn reversed(&self) -> FlowKey {
        FlowKey {
            src_addr: self.dst_addr.clone(),
            dst_addr: self.src_addr.clone(),
            src_port: self.dst_port,
            dst_port: self.src_port,
            proto: self.proto,
        }
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}->{}:{}/{}",
            self.src_addr, self.src_port, self.dst_addr, self.dst_port, self.proto
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward = 0,
    Backward = 1,
}

impl Direction {
    pub fn from_bit(bit: u8) -> Option<Direction> {
        match bit {
            0 => Some(Direction::Forward),
            1 => Some(Direction::Backward),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn flipped(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// One packet as read from a capture export.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub timestamp: f64,
    pub size: u16,
    pub direction: Direction,
    pub key: FlowKey,
    pub label: Option<String>,
}

impl PacketRecord {
    pub fn new(timestamp: f64, size: u16, direction: Direction, key: FlowKey) -> Result<Self> {
        if !(timestamp.is_finite() && timestamp >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "timestamp must be finite and >= 0, got {timestamp}"
            )));
        }
        if size == 0 {
            return Err(Error::InvalidArgument("size must be ≥1".into()));
        }
        Ok(PacketRecord {
            timestamp,
            size,
            direction,
            key,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// A packet inside an assembled flow: time relative to the first packet.
///
/// Serializes as the triple `[time, size, direction]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "(f64, u16, u8)", try_from = "(f64, u16, u8)")]
pub struct Packet {
    pub time: f64,
    pub size: u16,
    pub direction: Direction,
}

impl Packet {
    pub fn new(time: f64, size: u16, direction: Direction) -> Self {
        Packet {
            time,
            size,
            direction,
        }
    }
}

impl From<Packet> for (f64, u16, u8) {
    fn from(p: Packet) -> Self {
        (p.time, p.size, p.direction.bit())
    }
}

impl TryFrom<(f64, u16, u8)> for Packet {
    type Error = Error;

    fn try_from((time, size, dir): (f64, u16, u8)) -> Result<Self> {
        let direction = Direction::from_bit(dir)
            .ok_or_else(|| Error::InvalidArgument(format!("direction must be 0 or 1, got {dir}")))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad packet time {time}")));
        }
        if size == 0 {
            return Err(Error::InvalidArgument("size must be ≥1".into()));
        }
        Ok(Packet::new(time, size, direction))
    }
}

/// Time-ordered packets of one connection, re-based so the first packet is at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub key: FlowKey,
    pub label: Option<String>,
    pub packets: Vec<Packet>,
}

impl Flow {
    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.packets.iter().map(|p| u64::from(p.size)).sum()
    }

    /// Time of the last packet; zero for empty and single-packet flows.
    pub fn duration(&self) -> f64 {
        self.packets.last().map_or(0.0, |p| p.time)
    }

    /// Packets with `time < t`.
    pub fn packets_before(&self, t: f64) -> &[Packet] {
        let end = self.packets.partition_point(|p| p.time < t);
        &self.packets[..end]
    }

    /// Packets with `lo <= time < hi`.
    pub fn packets_between(&self, lo: f64, hi: f64) -> &[Packet] {
        let start = self.packets.partition_point(|p| p.time < lo);
        let end = self.packets.partition_point(|p| p.time < hi);
        &self.packets[start..end.max(start)]
    }
}

/// Groups records into flows by normalized five-tuple.
///
/// A flow takes the first non-empty label among its records; two different
/// labels on one connection are an error.
///
/// The orientation of the first record seen for a connection defines the
/// forward direction; records travelling the other way are marked backward
/// regardless of their direction field. Each flow keeps only packets whose
/// re-based time is below `tau`. Flows are returned in order of first
/// appearance.
pub fn assemble_flows<I>(records: I, tau: f64) -> Result<Vec<Flow>>
where
    I: IntoIterator<Item = PacketRecord>,
{
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
    }
    let mut index: BTreeMap<FlowKey, usize> = BTreeMap::new();
    let mut raw: Vec<(FlowKey, Option<String>, Vec<(f64, u16, Direction)>)> = Vec::new();

    for rec in records {
        let (slot, direction) = if let Some(&i) = index.get(&rec.key) {
            (i, Direction::Forward)
        } else {
            let reversed = rec.key.reversed();
            if let Some(&i) = index.get(&reversed) {
                (i, Direction::Backward)
            } else {
                let i = raw.len();
                index.insert(rec.key.clone(), i);
                raw.push((rec.key.clone(), rec.label.clone(), Vec::new()));
                (i, Direction::Forward)
            }
        };
        let entry = &mut raw[slot];
        match (&entry.1, &rec.label) {
            (Some(first), Some(other)) if first != other => {
                return Err(Error::MixedLabels {
                    key: format!("{}", entry.0),
                    first: first.clone(),
                    other: other.clone(),
                });
            }
            (None, Some(l)) => entry.1 = Some(l.clone()),
            _ => {}
        }
        entry.2.push((rec.timestamp, rec.size, direction));
    }

    Ok(raw
        .into_iter()
        .map(|(key, label, mut pkts)| {
            pkts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let t0 = pkts.first().map_or(0.0, |p| p.0);
            let packets = pkts
                .into_iter()
                .map(|(t, size, dir)| Packet::new(t - t0, size, dir))
                .take_while(|p| p.time < tau)
                .collect();
            Flow {
                key,
                label,
                packets,
            }
        })
        .collect())
}

/// Minimum-size requirements applied after assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub timeout_tau: f64,
    pub min_packets: usize,
    pub min_bytes: u64,
    pub min_duration: f64,
}

impl FilterParams {
    pub fn new(timeout_tau: f64, min_packets: usize, min_bytes: u64, min_duration: f64) -> Result<Self> {
        if !(timeout_tau >= 0.0 && min_duration >= 0.0) {
            return Err(Error::InvalidArgument(
                "filter parameters must be non-negative".into(),
            ));
        }
        Ok(FilterParams {
            timeout_tau,
            min_packets,
            min_bytes,
            min_duration,
        })
    }

    /// QUIC preset: 1 s window, 10 packets, no volume floor, 0.5 s.
    pub fn quic() -> Self {
        FilterParams {
            timeout_tau: 1.0,
            min_packets: 10,
            min_bytes: 0,
            min_duration: 0.5,
        }
    }

    /// VPN preset: 5 s window, 100 packets, 10 KB, 3 s.
    pub fn vpn() -> Self {
        FilterParams {
            timeout_tau: 5.0,
            min_packets: 100,
            min_bytes: 10_000,
            min_duration: 3.0,
        }
    }

    /// ISCX preset: 15 s window, 100 packets, 10 KB, 5 s.
    pub fn iscx() -> Self {
        FilterParams {
            timeout_tau: 15.0,
            min_packets: 100,
            min_bytes: 10_000,
            min_duration: 5.0,
        }
    }

    pub fn accepts(&self, flow: &Flow) -> bool {
        flow.len() >= self.min_packets
            && flow.total_bytes() >= self.min_bytes
            && flow.duration() >= self.min_duration
    }
}

pub fn filter_flows(flows: Vec<Flow>, params: &FilterParams) -> Vec<Flow> {
    flows.into_iter().filter(|f| params.accepts(f)).collect()
}

/// Labeled flows plus the ordered class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub classes: Vec<String>,
    pub flows: Vec<Flow>,
}

impl LabeledDataset {
    /// Builds a dataset whose class list is the sorted set of flow labels.
    pub fn from_flows(flows: Vec<Flow>) -> Result<Self> {
        let mut classes = BTreeSet::new();
        for f in &flows {
            match &f.label {
                Some(l) => {
                    classes.insert(l.clone());
                }
                None => return Err(Error::InvalidArgument(format!("flow {} has no label", f.key))),
            }
        }
        Ok(LabeledDataset {
            classes: classes.into_iter().collect(),
            flows,
        })
    }

    pub fn with_classes(classes: Vec<String>, flows: Vec<Flow>) -> Result<Self> {
        let ds = LabeledDataset { classes, flows };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks that every flow label is a listed class and classes are distinct.
    pub fn validate(&self) -> Result<()> {
        let set: BTreeSet<&String> = self.classes.iter().collect();
        if set.len() != self.classes.len() {
            return Err(Error::InvalidArgument("duplicate class names".into()));
        }
        for f in &self.flows {
            match &f.label {
                Some(l) if set.contains(l) => {}
                Some(l) => return Err(Error::InvalidArgument(format!("unknown class {l}"))),
                None => return Err(Error::InvalidArgument(format!("flow {} has no label", f.key))),
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Class index of every flow. Panics on unlabeled flows; call
    /// [`validate`](Self::validate) on untrusted input first.
    pub fn labels(&self) -> Vec<usize> {
        self.flows
            .iter()
            .map(|f| {
                let l = f.label.as_deref().expect("labeled dataset");
                self.class_index(l).expect("label in class list")
            })
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.classes.len()];
        for l in self.labels() {
            counts[l] += 1;
        }
        counts
    }

    /// Flows at `indices`, keeping the full class list.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            classes: self.classes.clone(),
            flows: indices.iter().map(|&i| self.flows[i].clone()).collect(),
        }
    }
}

/// Random undersampling to the smallest class count.
///
/// Retained flows keep their original relative order.
pub fn balance_undersample(dataset: &LabeledDataset, seed: u64) -> Result<LabeledDataset> {
    let labels = dataset.labels();
    let mut per_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); dataset.n_classes()];
    for (i, &l) in labels.iter().enumerate() {
        per_class[l].push(i);
    }
    if let Some(c) = per_class.iter().position(|v| v.is_empty()) {
        return Err(Error::EmptyClass(dataset.classes[c].clone()));
    }
    let target = per_class.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = rng::seeded(seed);
    let mut keep: Vec<usize> = Vec::with_capacity(target * per_class.len());
    for members in &mut per_class {
        if members.len() > target {
            members.shuffle(&mut rng);
            members.truncate(target);
        }
        keep.extend_from_slice(members);
    }
    keep.sort_unstable();
    Ok(dataset.subset(&keep))
}

/// Train/test index pair of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split over class indices.
///
/// Members of each class are shuffled and dealt round-robin. The dealing
/// position carries over from one class to the next, so per-class fold
/// sizes and total fold sizes both differ by at most one.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    let mut per_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        per_class.entry(l).or_default().push(i);
    }
    for (&class, members) in &per_class {
        if members.len() < k {
            return Err(Error::TooFewPerClass {
                class: format!("#{class}"),
                count: members.len(),
                k,
            });
        }
    }
    let mut rng = rng::seeded(seed);
    let mut assignment = alloc::vec![0usize; labels.len()];
    let mut cursor = 0usize;
    for members in per_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok((0..k)
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assignment[i] == fold);
            Fold { train, test }
        })
        .collect())
}

/// Stratified k-fold split of a dataset.
pub fn split_kfold(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    stratified_folds(&dataset.labels(), k, seed).map_err(|e| match e {
        Error::TooFewPerClass { class, count, k } => {
            let name = class
                .trim_start_matches('#')
                .parse::<usize>()
                .ok()
                .and_then(|i| dataset.classes.get(i).cloned())
                .unwrap_or(class);
            Error::TooFewPerClass {
                class: name,
                count,
                k,
            }
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn key(a: &str, b: &str) -> FlowKey {
        FlowKey::new(a, b, 443, 51000, 6)
    }

    fn rec(t: f64, size: u16, k: &FlowKey) -> PacketRecord {
        PacketRecord::new(t, size, Direction::Forward, k.clone()).unwrap()
    }

    fn flow_with(n: usize, size: u16, duration: f64) -> Flow {
        let step = if n > 1 { duration / (n - 1) as f64 } else { 0.0 };
        Flow {
            key: key("a", "b"),
            label: Some("x".into()),
            packets: (0..n)
                .map(|i| Packet::new(i as f64 * step, size, Direction::Forward))
                .collect(),
        }
    }

    #[test]
    fn zero_size_rejected() {
        let err = PacketRecord::new(0.0, 0, Direction::Forward, key("a", "b")).unwrap_err();
        assert!(format!("{err}").contains("size must be ≥1"));
    }

    #[test]
    fn window_truncation() {
        let k = key("10.0.0.1", "10.0.0.2");
        let tau = 1.0;
        let recs = vec![
            rec(5.0, 100, &k),
            rec(5.2, 100, &k),
            rec(5.4, 100, &k),
            rec(5.9, 100, &k),
            rec(5.0 + tau + 0.1, 100, &k),
        ];
        let flows = assemble_flows(recs, tau).unwrap();
        assert_eq!(flows.len(), 1);
        assert_eq!(flows[0].len(), 4);
        assert_eq!(flows[0].packets[0].time, 0.0);
    }

    #[test]
    fn interleaved_keys_grouped() {
        let k1 = key("10.0.0.1", "10.0.0.2");
        let k2 = key("10.0.0.3", "10.0.0.4");
        let recs = vec![
            rec(1.0, 10, &k1),
            rec(1.1, 20, &k2),
            rec(1.3, 11, &k1),
            rec(1.2, 21, &k2),
            rec(1.4, 12, &k1),
        ];
        let flows = assemble_flows(recs, 10.0).unwrap();
        assert_eq!(flows.len(), 2);
        let sizes = |f: &Flow| f.packets.iter().map(|p| p.size).collect::<Vec<_>>();
        assert_eq!(flows[0].key, k1);
        assert_eq!(sizes(&flows[0]), vec![10, 11, 12]);
        assert_eq!(flows[1].key, k2);
        // out-of-order arrival is re-sorted by timestamp
        assert_eq!(sizes(&flows[1]), vec![20, 21]);
        assert!((flows[1].packets[1].time - 0.1).abs() < 1e-12);
    }

    #[test]
    fn reversed_packet_joins_flow_as_backward() {
        let k = key("10.0.0.1", "10.0.0.2");
        let recs = vec![rec(0.0, 100, &k), rec(0.1, 1400, &k.reversed())];
        let flows = assemble_flows(recs, 5.0).unwrap();
        assert_eq!(flows.len(), 1);
        assert_eq!(flows[0].packets[1].direction, Direction::Backward);
        assert_eq!(flows[0].packets[0].direction, Direction::Forward);
    }

    #[test]
    fn mixed_labels_rejected() {
        let k = key("a", "b");
        let recs = vec![rec(0.0, 1, &k).with_label("x"), rec(0.1, 1, &k).with_label("y")];
        assert!(matches!(
            assemble_flows(recs, 1.0),
            Err(Error::MixedLabels { .. })
        ));
    }

    #[test]
    fn non_positive_tau_rejected() {
        assert!(assemble_flows(Vec::new(), 0.0).is_err());
        assert!(assemble_flows(Vec::new(), 1.0).unwrap().is_empty());
    }

    #[test]
    fn table_presets() {
        let q = FilterParams::quic();
        assert!(!q.accepts(&flow_with(9, 100, 0.8)));
        assert!(q.accepts(&flow_with(10, 100, 0.8)));
        let v = FilterParams::vpn();
        // 100 packets x 120 B = 12 KB over 4 s
        assert!(v.accepts(&flow_with(100, 120, 4.0)));
        assert!(!v.accepts(&flow_with(100, 99, 4.0)));
        assert!(!v.accepts(&flow_with(100, 120, 2.9)));
        assert!(filter_flows(Vec::new(), &v).is_empty());
    }

    fn labeled(counts: &[(&str, usize)]) -> LabeledDataset {
        let mut flows = Vec::new();
        for (name, n) in counts {
            for i in 0..*n {
                let mut f = flow_with(3, 100, 1.0);
                f.key.src_port = i as u16;
                f.key.src_addr = (*name).into();
                f.label = Some((*name).into());
                flows.push(f);
            }
        }
        LabeledDataset::from_flows(flows).unwrap()
    }

    #[test]
    fn undersampling_to_min() {
        let ds = labeled(&[("A", 10), ("B", 4)]);
        let bal = balance_undersample(&ds, 3).unwrap();
        assert_eq!(bal.class_counts(), vec![4, 4]);
        assert_eq!(bal, balance_undersample(&ds, 3).unwrap());

        let even = labeled(&[("A", 5), ("B", 5)]);
        assert_eq!(balance_undersample(&even, 9).unwrap(), even);
    }

    #[test]
    fn undersampling_empty_class_errors() {
        let mut ds = labeled(&[("A", 3)]);
        ds.classes.push("B".into());
        assert_eq!(balance_undersample(&ds, 0), Err(Error::EmptyClass("B".into())));
    }

    #[test]
    fn kfold_stratification() {
        let ds = labeled(&[("A", 50), ("B", 50)]);
        let folds = split_kfold(&ds, 5, 1).unwrap();
        let labels = ds.labels();
        let mut seen = vec![0; ds.len()];
        for f in &folds {
            let a = f.test.iter().filter(|&&i| labels[i] == 0).count();
            assert_eq!((a, f.test.len() - a), (10, 10));
            assert_eq!(f.train.len() + f.test.len(), ds.len());
            for &i in &f.test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn kfold_too_few_per_class() {
        let ds = labeled(&[("A", 10), ("B", 3)]);
        match split_kfold(&ds, 5, 0) {
            Err(Error::TooFewPerClass { class, count, k }) => {
                assert_eq!((class.as_str(), count, k), ("B", 3, 5));
            }
            other => panic!("{other:?}"),
        }
        assert!(split_kfold(&ds, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn fold_sizes_balanced(counts in prop::collection::vec(5usize..40, 2..5), k in 2usize..6, seed in any::<u64>()) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| core::iter::repeat_n(c, n)).collect();
            let folds = stratified_folds(&labels, k, seed).unwrap();
            let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for c in 0..counts.len() {
                let per: Vec<usize> = folds.iter().map(|f| f.test.iter().filter(|&&i| labels[i] == c).count()).collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
            let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.iter().copied()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        }

        #[test]
        fn filter_is_monotone(n in 0usize..60, size in 1u16..1500, dur in 0.0f64..10.0,
                              p in 0usize..60, b in 0u64..50_000, d in 0.0f64..10.0,
                              dp in 0usize..10, db in 0u64..5000, dd in 0.0f64..2.0) {
            let f = flow_with(n, size, dur);
            let weak = FilterParams { timeout_tau: 1.0, min_packets: p, min_bytes: b, min_duration: d };
            let strong = FilterParams { timeout_tau: 1.0, min_packets: p + dp, min_bytes: b + db, min_duration: d + dd };
            prop_assert!(!strong.accepts(&f) || weak.accepts(&f));
        }

        #[test]
        fn reassembly_is_idempotent(spec in prop::collection::vec((0usize..4, 0.0f64..3.0, 1u16..1500, any::<bool>()), 1..80)) {
            let keys: Vec<FlowKey> = (0..4).map(|i| FlowKey::new("10.0.0.1", "10.0.0.2", 1000 + i as u16, 443, 6)).collect();
            let mut spec = spec;
            spec.sort_by(|a, b| a.1.total_cmp(&b.1));
            let recs: Vec<PacketRecord> = spec.iter().map(|&(k, t, s, rev)| {
                let key = if rev { keys[k].reversed() } else { keys[k].clone() };
                PacketRecord::new(t, s, Direction::Forward, key).unwrap()
            }).collect();
            let flows = assemble_flows(recs, 10.0).unwrap();
            let replay: Vec<PacketRecord> = flows.iter().flat_map(|f| f.packets.iter().map(move |p| {
                let key = match p.direction { Direction::Forward => f.key.clone(), Direction::Backward => f.key.reversed() };
                PacketRecord::new(p.time, p.size, p.direction, key).unwrap()
            })).collect();
            let again = assemble_flows(replay, 10.0).unwrap();
            prop_assert_eq!(flows, again);
        }
    }
}
