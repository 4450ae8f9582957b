//! Labeled synthetic flows with planted class structure.
//!
//! Every flow starts with a forward packet at `t = 0`; later arrivals follow
//! a piecewise-constant-rate Poisson process up to `tau_max`. Packet sizes
//! are drawn from a mixture of integer intervals `[lo, hi)`. A profile can
//! withhold its discriminative mixture until an onset time, drawing from a
//! shared background mixture before it.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Direction, Flow, FlowKey, LabeledDataset, Packet, PacketRecord};
use crate::rng::{self, SeededRng};

/// Largest size a profile may emit.
pub const MAX_SYNTH_SIZE: u16 = 1500;

/// Expected packets per flow in [`planted_corpus`], besides the first one.
pub const PLANTED_MEAN_ARRIVALS: f64 = 14.0;

/// The narrow size band that separates the planted classes.
pub const PLANTED_BAND: (u16, u16) = (370, 380);

/// Share of class B's packets moved into the planted band.
pub const PLANTED_SHARE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeComponent {
    pub lo: u16,
    pub hi: u16,
    pub weight: f64,
}

impl SizeComponent {
    pub fn new(lo: u16, hi: u16, weight: f64) -> Self {
        SizeComponent { lo, hi, weight }
    }
}

/// Arrival rate (packets per second) until `until` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSegment {
    pub until: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub name: String,
    pub size_mixture: Vec<SizeComponent>,
    /// Mixture used before `onset` when `early_signal` is off.
    pub background: Vec<SizeComponent>,
    /// Consecutive segments starting at 0; no arrivals after the last one.
    pub rate_profile: Vec<RateSegment>,
    /// Probability that a packet after the first travels forward.
    pub forward_fraction: f64,
    pub early_signal: bool,
    pub onset: f64,
}

fn check_mixture(m: &[SizeComponent], what: &str) -> Result<()> {
    if m.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} is empty")));
    }
    let total: f64 = m.iter().map(|c| c.weight).sum();
    if (total - 1.0).abs() > 1e-9 || m.iter().any(|c| !(c.weight >= 0.0)) {
        return Err(Error::InvalidArgument(format!("{what} weights must be non-negative and sum to 1")));
    }
    if m.iter().any(|c| c.lo < 1 || c.lo >= c.hi || c.hi > MAX_SYNTH_SIZE) {
        return Err(Error::InvalidArgument(format!("{what} intervals must satisfy 1 <= lo < hi <= 1500")));
    }
    Ok(())
}

impl ClassProfile {
    /// A profile with one constant rate over `[0, tau)` and its signal from the start.
    pub fn constant(name: &str, size_mixture: Vec<SizeComponent>, rate: f64, tau: f64) -> Self {
        ClassProfile {
            name: name.into(),
            background: size_mixture.clone(),
            size_mixture,
            rate_profile: vec![RateSegment { until: tau, rate }],
            forward_fraction: 0.5,
            early_signal: true,
            onset: 0.0,
        }
    }

    /// Withholds the signal until `onset`, drawing from `background` before.
    pub fn with_onset(mut self, background: Vec<SizeComponent>, onset: f64) -> Self {
        self.background = background;
        self.early_signal = false;
        self.onset = onset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_mixture(&self.size_mixture, "size mixture")?;
        if !self.early_signal {
            check_mixture(&self.background, "background mixture")?;
        }
        if !(0.0..=1.0).contains(&self.forward_fraction) {
            return Err(Error::InvalidArgument("forward fraction must lie in [0, 1]".into()));
        }
        let mut prev = 0.0;
        for s in &self.rate_profile {
            if !(s.until > prev && s.rate >= 0.0 && s.rate.is_finite()) {
                return Err(Error::InvalidArgument("rate segments must be increasing with finite rates".into()));
            }
            prev = s.until;
        }
        Ok(())
    }

    fn mixture_at(&self, t: f64) -> &[SizeComponent] {
        if self.early_signal || t >= self.onset {
            &self.size_mixture
        } else {
            &self.background
        }
    }

    /// Next arrival after `t`, or `None` past the last segment.
    fn next_arrival(&self, t: f64, rng: &mut SeededRng) -> Option<f64> {
        let mut need = rng::exponential(rng, 1.0);
        let mut t = t;
        for s in &self.rate_profile {
            if s.until <= t {
                continue;
            }
            let span = s.until - t;
            if s.rate > 0.0 && need <= s.rate * span {
                return Some(t + need / s.rate);
            }
            need -= s.rate * span;
            t = s.until;
        }
        None
    }
}

fn draw_size(mix: &[SizeComponent], rng: &mut SeededRng) -> u16 {
    let mut u: f64 = rng.gen();
    let mut pick = mix[mix.len() - 1];
    for c in mix {
        if u < c.weight {
            pick = *c;
            break;
        }
        u -= c.weight;
    }
    rng.gen_range(pick.lo..pick.hi)
}

fn synth_key(class: usize, index: usize) -> FlowKey {
    FlowKey::new(
        &format!("10.{}.{}.{}", class % 256, (index / 256) % 256, index % 256),
        "192.0.2.1",
        1024 + (index % 60000) as u16,
        443,
        17,
    )
}

fn generate_flow(p: &ClassProfile, key: FlowKey, tau_max: f64, rng: &mut SeededRng) -> Flow {
    let mut packets = vec![Packet::new(0.0, draw_size(p.mixture_at(0.0), rng), Direction::Forward)];
    let mut t = 0.0;
    while let Some(next) = p.next_arrival(t, rng) {
        if next >= tau_max {
            break;
        }
        t = next;
        let direction = if rng.gen::<f64>() < p.forward_fraction {
            Direction::Forward
        } else {
            Direction::Backward
        };
        packets.push(Packet::new(t, draw_size(p.mixture_at(t), rng), direction));
    }
    Flow {
        key,
        label: Some(p.name.clone()),
        packets,
    }
}

/// `flows_per_class` flows per profile over `[0, tau_max)`, grouped by
/// class in profile order. Each class draws from its own seeded stream.
pub fn generate(profiles: &[ClassProfile], flows_per_class: usize, tau_max: f64, seed: u64) -> Result<LabeledDataset> {
    if profiles.is_empty() {
        return Err(Error::Empty("profile list"));
    }
    if profiles.len() < 2 {
        return Err(Error::TooFewClasses(profiles.len()));
    }
    if !(tau_max > 0.0) {
        return Err(Error::InvalidArgument("tau_max must be positive".into()));
    }
    for p in profiles {
        p.validate()?;
    }
    let mut flows = Vec::with_capacity(profiles.len() * flows_per_class);
    for (c, p) in profiles.iter().enumerate() {
        let mut rng = rng::seeded(rng::derive_seed(seed, c as u64));
        for i in 0..flows_per_class {
            flows.push(generate_flow(p, synth_key(c, i), tau_max, &mut rng));
        }
    }
    LabeledDataset::with_classes(profiles.iter().map(|p| p.name.clone()).collect(), flows)
}

/// Packet records of a dataset with absolute timestamps: flow `i` starts at
/// `i * spacing` seconds. Records are ordered by timestamp.
pub fn to_records(dataset: &LabeledDataset, spacing: f64) -> Vec<PacketRecord> {
    let mut out: Vec<PacketRecord> = Vec::with_capacity(dataset.flows.iter().map(Flow::len).sum());
    for (i, f) in dataset.flows.iter().enumerate() {
        let start = i as f64 * spacing;
        for p in &f.packets {
            let key = match p.direction {
                Direction::Forward => f.key.clone(),
                Direction::Backward => f.key.reversed(),
            };
            out.push(PacketRecord {
                timestamp: start + p.time,
                size: p.size,
                direction: p.direction,
                key,
                label: f.label.clone(),
            });
        }
    }
    out.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    out
}

fn uniform_sizes() -> Vec<SizeComponent> {
    vec![SizeComponent::new(1, MAX_SYNTH_SIZE, 1.0)]
}

/// Two classes that differ only inside [`PLANTED_BAND`]: `A` draws sizes
/// uniformly from `[1, 1500)`; `B` does the same for 70% of its packets and
/// puts the rest uniformly in the band. Each flow has one packet at `t = 0`
/// plus a Poisson number of arrivals with mean [`PLANTED_MEAN_ARRIVALS`].
pub fn planted_corpus(flows_per_class: usize, tau: f64, seed: u64) -> Result<LabeledDataset> {
    let rate = PLANTED_MEAN_ARRIVALS / tau;
    let b = vec![
        SizeComponent::new(1, MAX_SYNTH_SIZE, 1.0 - PLANTED_SHARE),
        SizeComponent::new(PLANTED_BAND.0, PLANTED_BAND.1, PLANTED_SHARE),
    ];
    generate(
        &[ClassProfile::constant("A", uniform_sizes(), rate, tau), ClassProfile::constant("B", b, rate, tau)],
        flows_per_class,
        tau,
        seed,
    )
}

/// Two classes with disjoint size ranges `[100, 200)` and `[900, 1000)`.
pub fn separable_corpus(flows_per_class: usize, tau: f64, seed: u64) -> Result<LabeledDataset> {
    let rate = 10.0 / tau;
    generate(
        &[
            ClassProfile::constant("low", vec![SizeComponent::new(100, 200, 1.0)], rate, tau),
            ClassProfile::constant("high", vec![SizeComponent::new(900, 1000, 1.0)], rate, tau),
        ],
        flows_per_class,
        tau,
        seed,
    )
}

fn signal_profiles(rate: f64, tau: f64) -> [ClassProfile; 2] {
    [
        ClassProfile::constant(
            "low",
            vec![SizeComponent::new(100, 300, 0.6), SizeComponent::new(1, MAX_SYNTH_SIZE, 0.4)],
            rate,
            tau,
        ),
        ClassProfile::constant(
            "high",
            vec![SizeComponent::new(700, 900, 0.6), SizeComponent::new(1, MAX_SYNTH_SIZE, 0.4)],
            rate,
            tau,
        ),
    ]
}

/// Packets per second in the early and late signal corpora.
pub const SIGNAL_RATE: f64 = 20.0;

/// Two classes whose size signal is present from the first packet.
pub fn early_signal_corpus(flows_per_class: usize, tau_max: f64, seed: u64) -> Result<LabeledDataset> {
    generate(&signal_profiles(SIGNAL_RATE, tau_max), flows_per_class, tau_max, seed)
}

/// The early-signal classes, except both draw uniform sizes before `onset`.
pub fn late_signal_corpus(flows_per_class: usize, tau_max: f64, onset: f64, seed: u64) -> Result<LabeledDataset> {
    let profiles = signal_profiles(SIGNAL_RATE, tau_max).map(|p| p.with_onset(uniform_sizes(), onset));
    generate(&profiles, flows_per_class, tau_max, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{Binning, Domain};
    use crate::classifier::{self, TrainConfig};
    use crate::flow::assemble_flows;
    use crate::repr::ExactDist;

    #[test]
    fn deterministic() {
        assert_eq!(planted_corpus(5, 1.0, 3).unwrap(), planted_corpus(5, 1.0, 3).unwrap());
        assert_ne!(planted_corpus(5, 1.0, 3).unwrap(), planted_corpus(5, 1.0, 4).unwrap());
    }

    #[test]
    fn rejects_bad_profiles() {
        assert_eq!(generate(&[], 1, 1.0, 0), Err(Error::Empty("profile list")));
        let p = ClassProfile::constant("x", vec![SizeComponent::new(1, 10, 0.5)], 1.0, 1.0);
        assert!(generate(&[p.clone(), p], 1, 1.0, 0).is_err());
        let q = ClassProfile::constant("y", vec![SizeComponent::new(1, 1501, 1.0)], 1.0, 1.0);
        assert!(q.validate().is_err());
    }

    #[test]
    fn flows_well_formed() {
        let ds = planted_corpus(50, 2.0, 1).unwrap();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.class_counts(), [50, 50]);
        for f in &ds.flows {
            assert_eq!(f.packets[0].time, 0.0);
            assert!(f.packets.windows(2).all(|w| w[0].time <= w[1].time));
            assert!(f.packets.iter().all(|p| p.time < 2.0 && (1..1500).contains(&p.size)));
        }
    }

    #[test]
    fn packet_count_matches_rate() {
        let ds = planted_corpus(2000, 1.0, 2).unwrap();
        let mean = ds.flows.iter().map(|f| f.len() as f64).sum::<f64>() / ds.len() as f64;
        assert!((mean - (1.0 + PLANTED_MEAN_ARRIVALS)).abs() < 0.2, "{mean}");
    }

    #[test]
    fn piecewise_rates() {
        let p = ClassProfile {
            rate_profile: vec![
                RateSegment { until: 1.0, rate: 0.0 },
                RateSegment { until: 2.0, rate: 50.0 },
            ],
            ..ClassProfile::constant("x", uniform_sizes(), 0.0, 2.0)
        };
        let q = ClassProfile { name: "y".into(), ..p.clone() };
        let ds = generate(&[p, q], 200, 5.0, 3).unwrap();
        for f in &ds.flows {
            assert!(f.packets[1..].iter().all(|x| (1.0..2.0).contains(&x.time)));
        }
        let mean = ds.flows.iter().map(|f| f.len() as f64 - 1.0).sum::<f64>() / 400.0;
        assert!((mean - 50.0).abs() < 1.5, "{mean}");
    }

    /// Chi-square test of pooled sizes against the planted B mixture, in
    /// 15 coarse bins plus the band.
    #[test]
    fn size_histogram_matches_mixture() {
        let profile = ClassProfile::constant(
            "B",
            vec![
                SizeComponent::new(1, MAX_SYNTH_SIZE, 0.7),
                SizeComponent::new(370, 380, 0.3),
            ],
            1000.0,
            10.0,
        );
        let mut rng = rng::seeded(9);
        let sizes: Vec<u16> = (0..10_000).map(|_| draw_size(&profile.size_mixture, &mut rng)).collect();
        let mut edges: Vec<u16> = (0..=15).map(|i| 1 + i * 100).collect();
        edges.push(370);
        edges.push(380);
        edges.sort_unstable();
        let edges: Vec<u16> = edges.into_iter().map(|e| e.min(1500)).collect();
        let mut chi2 = 0.0;
        let mut dof = 0;
        for w in edges.windows(2).filter(|w| w[0] < w[1]) {
            let (lo, hi) = (w[0], w[1]);
            let observed = sizes.iter().filter(|&&s| (lo..hi).contains(&s)).count() as f64;
            let width = f64::from(hi - lo);
            let overlap = f64::from(hi.min(380).saturating_sub(lo.max(370)));
            let p = 0.7 * width / 1499.0 + 0.3 * overlap / 10.0;
            let expected = p * 10_000.0;
            chi2 += (observed - expected) * (observed - expected) / expected;
            dof += 1;
        }
        // 99.9% quantile of chi-square with 16 degrees of freedom is 39.25
        assert!(dof - 1 <= 16);
        assert!(chi2 < 39.25, "chi2 {chi2}");
    }

    #[test]
    fn records_reassemble() {
        let ds = planted_corpus(10, 1.0, 5).unwrap();
        let flows = assemble_flows(to_records(&ds, 0.25), 1.0).unwrap();
        assert_eq!(flows.len(), ds.len());
        for (a, b) in flows.iter().zip(&ds.flows) {
            assert_eq!(a.key, b.key);
            assert_eq!(a.label, b.label);
            assert_eq!(a.packets.len(), b.packets.len());
            for (p, q) in a.packets.iter().zip(&b.packets) {
                assert_eq!((p.size, p.direction), (q.size, q.direction));
                assert!((p.time - q.time).abs() < 1e-9);
            }
        }
    }

    fn accuracy_at(ds: &LabeledDataset, tau: f64) -> f64 {
        let size = Binning::uniform(10, 1500.0, Domain::Size).unwrap();
        let time = Binning::uniform(4, tau, Domain::Time).unwrap();
        let x: Vec<Vec<f64>> = ds.flows.iter().map(|f| ExactDist::build(f, &size, &time).features()).collect();
        let cfg = TrainConfig { epochs: 100, ..TrainConfig::default() };
        classifier::kfold_evaluate(&x, &ds.labels(), &ds.classes, 5, &cfg).unwrap().accuracy
    }

    #[test]
    fn late_signal_is_invisible_early() {
        let ds = late_signal_corpus(150, 5.0, 2.5, 6).unwrap();
        let early = accuracy_at(&ds, 0.625);
        let late = accuracy_at(&ds, 5.0);
        assert!((early - 0.5).abs() < 0.08, "{early}");
        assert!(late > 0.9, "{late}");
    }
}
