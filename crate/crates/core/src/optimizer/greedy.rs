//! Greedy boundary placement: one interior boundary per step, each chosen by
//! scanning a value grid with the earlier choices held fixed.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{SearchSpace, Trial};
use crate::error::{Error, Result};

/// State after one greedy step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub boundaries: Vec<f64>,
    pub objective: f64,
}

/// Scans every `stride`-th candidate of `space` at each step. Ties go to
/// the smaller value. Returns the final vector and the per-step history.
pub fn greedy_optimize<F>(space: &SearchSpace, stride: usize, mut objective: F) -> Result<(Trial, Vec<GreedyStep>)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if stride == 0 {
        return Err(Error::InvalidArgument("grid stride must be >= 1".into()));
    }
    let grid: Vec<f64> = space.candidates().iter().step_by(stride).copied().collect();
    if grid.len() < space.n_interior() {
        return Err(Error::InvalidArgument("greedy grid is smaller than the number of boundaries".into()));
    }
    let mut chosen: Vec<f64> = Vec::with_capacity(space.n_interior());
    let mut steps = Vec::with_capacity(space.n_interior());
    let mut current = objective(&chosen)?;
    let mut trial = Vec::with_capacity(space.n_interior());
    for _ in 0..space.n_interior() {
        let mut best: Option<(f64, f64)> = None;
        for &v in &grid {
            let pos = match chosen.binary_search_by(|c| c.total_cmp(&v)) {
                Ok(_) => continue,
                Err(p) => p,
            };
            trial.clear();
            trial.extend_from_slice(&chosen[..pos]);
            trial.push(v);
            trial.extend_from_slice(&chosen[pos..]);
            let score = objective(&trial)?;
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, v));
            }
        }
        let (score, v) = best.ok_or(Error::Empty("greedy grid"))?;
        let pos = chosen.partition_point(|&c| c < v);
        chosen.insert(pos, v);
        current = score;
        steps.push(GreedyStep {
            boundaries: chosen.clone(),
            objective: score,
        });
    }
    Ok((
        Trial {
            boundaries: chosen,
            objective: current,
        },
        steps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{objective_jsd_binned, FineHistograms};
    use crate::synth;

    #[test]
    fn single_step_is_exhaustive() {
        let space = SearchSpace::sizes(2, 100).unwrap();
        let f = |b: &[f64]| Ok(-libm::fabs(b.first().copied().unwrap_or(0.0) - 37.0));
        let (t, steps) = greedy_optimize(&space, 1, f).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(t.boundaries, [37.0]);
    }

    #[test]
    fn planted_step_is_found() {
        // accuracy-like objective: 1 once a boundary falls in [300, 310]
        let space = SearchSpace::sizes(3, 1500).unwrap();
        let f = |b: &[f64]| Ok(if b.iter().any(|&v| (300.0..=310.0).contains(&v)) { 1.0 } else { 0.0 });
        let (t, _) = greedy_optimize(&space, 1, f).unwrap();
        assert!(t.boundaries.contains(&300.0), "{:?}", t.boundaries);
    }

    #[test]
    fn jsd_steps_never_decrease() {
        let ds = synth::planted_corpus(40, 1.0, 4).unwrap();
        let fine = FineHistograms::sizes(&ds, 1500, false).unwrap();
        let space = SearchSpace::sizes(6, 1500).unwrap();
        let (t, steps) = greedy_optimize(&space, 7, |b| objective_jsd_binned(&fine, b)).unwrap();
        assert_eq!(t.boundaries.len(), 5);
        assert!(t.boundaries.windows(2).all(|w| w[0] < w[1]));
        for w in steps.windows(2) {
            assert!(w[1].objective >= w[0].objective - 1e-12);
        }
    }

    #[test]
    fn bad_grid() {
        let space = SearchSpace::sizes(5, 10).unwrap();
        assert!(greedy_optimize(&space, 4, |_| Ok(0.0)).is_err());
        assert!(greedy_optimize(&space, 0, |_| Ok(0.0)).is_err());
    }
}
