//! Tree-structured Parzen Estimator over sorted boundary vectors.
//!
//! Each interior boundary is a coordinate ranging over the indices of its
//! space's candidate list. A proposal samples every coordinate on its own,
//! then sorts; a coordinate that ties or falls below its predecessor is
//! pushed one grid step up (and the top of the vector is pulled back inside
//! the grid), so every evaluated vector is strictly increasing.
//!
//! After the random start-up trials, the history is split at the `gamma`
//! quantile of the objective into a good and a bad set. Each set gets a
//! per-coordinate density: a truncated Gaussian kernel on every point, with
//! bandwidth equal to the distance to the nearest other point, plus one
//! uniform prior component. Bandwidths are clipped to
//! `[max(1 step, domain / min(100, n + 1)), domain/4]` for a set of `n`
//! points; without the adaptive floor a tight good set shrinks to one-step
//! kernels and the search crawls a step per iteration. Candidates are
//! drawn from the good density and the one maximizing
//! `log l(x) - log g(x)` is evaluated.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SearchSpace, Trial};
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpeConfig {
    pub n_iterations: usize,
    pub n_startup_random: usize,
    /// Fraction of the history treated as good.
    pub gamma: f64,
    pub n_ei_candidates: usize,
    pub seed: u64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        TpeConfig {
            n_iterations: 200,
            n_startup_random: 20,
            gamma: 0.25,
            n_ei_candidates: 24,
            seed: 0,
        }
    }
}

impl TpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(Error::InvalidArgument("n_iterations must be >= 1".into()));
        }
        if self.n_startup_random >= self.n_iterations {
            return Err(Error::InvalidArgument("n_startup_random must be below n_iterations".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument("gamma must lie in (0, 1)".into()));
        }
        if self.n_ei_candidates == 0 {
            return Err(Error::InvalidArgument("n_ei_candidates must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trial over several boundary blocks searched jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTrial {
    pub blocks: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Index layout of the flattened coordinates.
struct Layout {
    /// (start, len, domain size) per block.
    blocks: Vec<(usize, usize, usize)>,
    dims: usize,
}

impl Layout {
    fn new(spaces: &[SearchSpace]) -> Result<Self> {
        if spaces.is_empty() {
            return Err(Error::Empty("search space"));
        }
        let mut blocks = Vec::with_capacity(spaces.len());
        let mut start = 0;
        for s in spaces {
            let k = s.n_interior();
            if k > 0 && s.candidates().is_empty() {
                return Err(Error::Empty("search space"));
            }
            blocks.push((start, k, s.candidates().len()));
            start += k;
        }
        Ok(Layout { blocks, dims: start })
    }

    fn domain_of(&self, coord: usize) -> usize {
        self.blocks
            .iter()
            .find(|&&(s, k, _)| coord >= s && coord < s + k)
            .map_or(1, |&(_, _, m)| m)
    }

    /// Sorts each block and makes it strictly increasing inside its grid.
    fn normalize(&self, x: &mut [usize]) {
        for &(s, k, m) in &self.blocks {
            let seg = &mut x[s..s + k];
            seg.sort_unstable();
            for j in 1..k {
                if seg[j] <= seg[j - 1] {
                    seg[j] = seg[j - 1] + 1;
                }
            }
            for (j, v) in seg.iter_mut().enumerate() {
                *v = (*v).min(m - k + j);
            }
        }
    }

    fn random(&self, rng: &mut SeededRng) -> Vec<usize> {
        let mut x: Vec<usize> = (0..self.dims).map(|c| rng.gen_range(0..self.domain_of(c))).collect();
        self.normalize(&mut x);
        x
    }

    fn decode(&self, spaces: &[SearchSpace], x: &[usize]) -> Vec<Vec<f64>> {
        spaces
            .iter()
            .zip(&self.blocks)
            .map(|(sp, &(s, k, _))| sp.values(&x[s..s + k]))
            .collect()
    }
}

/// Parzen estimator of one coordinate.
struct Parzen {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    /// Kernel mass inside the domain, for truncation.
    mass: Vec<f64>,
    domain: f64,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

impl Parzen {
    fn fit(points: &[f64], domain: usize) -> Parzen {
        let m = domain as f64;
        let min_bw = (m / (points.len() as f64 + 1.0).min(100.0)).max(1.0);
        let max_bw = (m / 4.0).max(min_bw);
        let sigma: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let nn = points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &q)| libm::fabs(p - q))
                    .fold(f64::INFINITY, f64::min);
                if nn.is_finite() {
                    nn.clamp(min_bw, max_bw)
                } else {
                    max_bw
                }
            })
            .collect();
        let (lo, hi) = (-0.5, m - 0.5);
        let mass = points
            .iter()
            .zip(&sigma)
            .map(|(&mu, &s)| (normal_cdf((hi - mu) / s) - normal_cdf((lo - mu) / s)).max(1e-300))
            .collect();
        Parzen {
            mu: points.to_vec(),
            sigma,
            mass,
            domain: m,
        }
    }

    fn weight(&self) -> f64 {
        1.0 / (self.mu.len() + 1) as f64
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let w = self.weight();
        let mut p = w / self.domain;
        for ((&mu, &s), &z) in self.mu.iter().zip(&self.sigma).zip(&self.mass) {
            let d = (x - mu) / s;
            p += w * libm::exp(-0.5 * d * d) / (s * libm::sqrt(2.0 * core::f64::consts::PI) * z);
        }
        libm::log(p)
    }

    fn sample(&self, rng: &mut SeededRng) -> usize {
        let top = self.domain as usize - 1;
        let k = rng.gen_range(0..=self.mu.len());
        if k == self.mu.len() {
            return rng.gen_range(0..=top);
        }
        for _ in 0..16 {
            let v = libm::round(self.mu[k] + self.sigma[k] * rng::standard_normal(rng));
            if v >= 0.0 && v <= top as f64 {
                return v as usize;
            }
        }
        (libm::round(self.mu[k]).max(0.0) as usize).min(top)
    }
}

fn best_of(history: &[BlockTrial]) -> BlockTrial {
    let mut best = &history[0];
    for t in &history[1..] {
        if t.objective > best.objective {
            best = t;
        }
    }
    best.clone()
}

/// Joint TPE search over several boundary blocks, e.g. sizes and times.
/// Returns the best trial (earliest on ties) and the full history.
pub fn tpe_optimize_blocks<F>(
    spaces: &[SearchSpace],
    mut objective: F,
    cfg: &TpeConfig,
) -> Result<(BlockTrial, Vec<BlockTrial>)>
where
    F: FnMut(&[Vec<f64>]) -> Result<f64>,
{
    cfg.validate()?;
    let layout = Layout::new(spaces)?;
    let mut rng = rng::seeded(cfg.seed);
    let mut points: Vec<Vec<usize>> = Vec::with_capacity(cfg.n_iterations);
    let mut history: Vec<BlockTrial> = Vec::with_capacity(cfg.n_iterations);

    for it in 0..cfg.n_iterations {
        let x = if it < cfg.n_startup_random.max(1) || layout.dims == 0 {
            layout.random(&mut rng)
        } else {
            propose(&layout, &points, &history, cfg, &mut rng)
        };
        let blocks = layout.decode(spaces, &x);
        let value = objective(&blocks)?;
        if value.is_nan() {
            return Err(Error::InvalidArgument("objective returned NaN".into()));
        }
        points.push(x);
        history.push(BlockTrial { blocks, objective: value });
    }
    Ok((best_of(&history), history))
}

fn propose(
    layout: &Layout,
    points: &[Vec<usize>],
    history: &[BlockTrial],
    cfg: &TpeConfig,
    rng: &mut SeededRng,
) -> Vec<usize> {
    let n = history.len();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: earlier trials win ties
    order.sort_by(|&a, &b| history[b].objective.total_cmp(&history[a].objective));
    let n_good = libm::ceil(cfg.gamma * n as f64).max(1.0) as usize;
    let (good, bad) = order.split_at(n_good.min(n));

    let mut l = Vec::with_capacity(layout.dims);
    let mut g = Vec::with_capacity(layout.dims);
    for c in 0..layout.dims {
        let m = layout.domain_of(c);
        let col = |set: &[usize]| set.iter().map(|&i| points[i][c] as f64).collect::<Vec<_>>();
        l.push(Parzen::fit(&col(good), m));
        g.push(Parzen::fit(&col(bad), m));
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut x = vec![0usize; layout.dims];
    for _ in 0..cfg.n_ei_candidates {
        for (c, xc) in x.iter_mut().enumerate() {
            *xc = l[c].sample(rng);
        }
        layout.normalize(&mut x);
        let score: f64 = x
            .iter()
            .enumerate()
            .map(|(c, &v)| l[c].log_pdf(v as f64) - g[c].log_pdf(v as f64))
            .sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, x.clone()));
        }
    }
    best.map(|(_, x)| x).unwrap_or_else(|| layout.random(rng))
}

/// TPE over a single boundary vector.
pub fn tpe_optimize<F>(space: &SearchSpace, mut objective: F, cfg: &TpeConfig) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (best, history) = tpe_optimize_blocks(core::slice::from_ref(space), |b| objective(&b[0]), cfg)?;
    let flat = |t: BlockTrial| Trial {
        boundaries: t.blocks.into_iter().next().unwrap_or_default(),
        objective: t.objective,
    };
    Ok((flat(best), history.into_iter().map(flat).collect()))
}

/// Uniformly random boundary vectors with the same parametrization, as a
/// baseline for the search.
pub fn random_search<F>(space: &SearchSpace, mut objective: F, n_trials: usize, seed: u64) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
    }
    let layout = Layout::new(core::slice::from_ref(space))?;
    let mut rng = rng::seeded(seed);
    let mut history = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let b = space.values(&layout.random(&mut rng));
        let objective = objective(&b)?;
        history.push(Trial { boundaries: b, objective });
    }
    let mut best = &history[0];
    for t in &history[1..] {
        if t.objective > best.objective {
            best = t;
        }
    }
    Ok((best.clone(), history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(b: &[f64]) -> Result<f64> {
        Ok(-(b[0] - 750.0) * (b[0] - 750.0))
    }

    #[test]
    fn budget_one_is_random() {
        let space = SearchSpace::sizes(2, 1500).unwrap();
        let cfg = TpeConfig {
            n_iterations: 1,
            n_startup_random: 0,
            ..TpeConfig::default()
        };
        let (best, hist) = tpe_optimize(&space, toy, &cfg).unwrap();
        assert_eq!(hist.len(), 1);
        assert_eq!(best, hist[0]);
    }

    #[test]
    fn toy_converges() {
        let space = SearchSpace::sizes(2, 1500).unwrap();
        let cfg = TpeConfig {
            seed: 3,
            ..TpeConfig::default()
        };
        let (best, hist) = tpe_optimize(&space, toy, &cfg).unwrap();
        assert_eq!(hist.len(), 200);
        assert!((best.boundaries[0] - 750.0).abs() <= 10.0, "{:?}", best);
    }

    #[test]
    fn deterministic() {
        let space = SearchSpace::sizes(4, 1500).unwrap();
        let f = |b: &[f64]| Ok(b.iter().sum::<f64>());
        let cfg = TpeConfig {
            n_iterations: 40,
            seed: 8,
            ..TpeConfig::default()
        };
        assert_eq!(
            tpe_optimize(&space, f, &cfg).unwrap(),
            tpe_optimize(&space, f, &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_bad_config() {
        let space = SearchSpace::sizes(2, 1500).unwrap();
        for cfg in [
            TpeConfig { gamma: 1.0, ..TpeConfig::default() },
            TpeConfig { n_startup_random: 200, ..TpeConfig::default() },
            TpeConfig { n_ei_candidates: 0, ..TpeConfig::default() },
        ] {
            assert!(tpe_optimize(&space, toy, &cfg).is_err());
        }
    }

    #[test]
    fn tight_space_fills_grid() {
        let space = SearchSpace::new(4, 4.0, alloc::vec![1.0, 2.0, 3.0]).unwrap();
        let (_, hist) = tpe_optimize(&space, |_| Ok(0.0), &TpeConfig { n_iterations: 30, ..TpeConfig::default() }).unwrap();
        assert!(hist.iter().all(|t| t.boundaries == [1.0, 2.0, 3.0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn proposals_strictly_increasing(seed in any::<u64>(), n_bins in 2usize..12, m in 12u32..200) {
            let space = SearchSpace::sizes(n_bins, m).unwrap();
            let cfg = TpeConfig { n_iterations: 40, n_startup_random: 5, seed, ..TpeConfig::default() };
            let (_, hist) = tpe_optimize(&space, |b| Ok(-libm::fabs(b[0] - 7.0)), &cfg).unwrap();
            for t in &hist {
                prop_assert_eq!(t.boundaries.len(), n_bins - 1);
                prop_assert!(t.boundaries.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(t.boundaries.iter().all(|&b| b > 0.0 && b < f64::from(m)));
            }
        }
    }
}
