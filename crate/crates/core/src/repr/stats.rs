use alloc::vec::Vec;

use crate::flow::{Direction, Flow};

/// Column names of [`StatsRepr::values`], in order.
pub const STAT_FEATURE_NAMES: [&str; 33] = [
    "size_all_min", "size_all_max", "size_all_mean", "size_all_median", "size_all_std",
    "size_fwd_min", "size_fwd_max", "size_fwd_mean", "size_fwd_median", "size_fwd_std",
    "size_bwd_min", "size_bwd_max", "size_bwd_mean", "size_bwd_median", "size_bwd_std",
    "time_all_min", "time_all_max", "time_all_mean", "time_all_median", "time_all_std",
    "time_fwd_min", "time_fwd_max", "time_fwd_mean", "time_fwd_median", "time_fwd_std",
    "time_bwd_min", "time_bwd_max", "time_bwd_mean", "time_bwd_median", "time_bwd_std",
    "count_all", "count_fwd", "count_bwd",
];

/// Summary statistics of packet sizes and relative arrival times.
///
/// For each of {size, time} x {all, forward, backward}: min, max, mean,
/// median, standard deviation (population); then the three packet counts.
/// A scope without packets contributes zeros. The median of an even count
/// is the mean of the two middle values.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRepr {
    pub values: [f64; 33],
}

fn summarize(mut xs: Vec<f64>) -> [f64; 5] {
    if xs.is_empty() {
        return [0.0; 5];
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    };
    [xs[0], xs[n - 1], mean, median, libm::sqrt(var)]
}

impl StatsRepr {
    pub fn build(flow: &Flow) -> Self {
        let mut values = [0.0; 33];
        let scopes: [Option<Direction>; 3] = [None, Some(Direction::Forward), Some(Direction::Backward)];
        let mut slot = 0;
        for value_of in [|p: &crate::flow::Packet| f64::from(p.size), |p: &crate::flow::Packet| p.time] {
            for scope in scopes {
                let xs: Vec<f64> = flow
                    .packets
                    .iter()
                    .filter(|p| scope.is_none_or(|d| p.direction == d))
                    .map(value_of)
                    .collect();
                values[slot..slot + 5].copy_from_slice(&summarize(xs));
                slot += 5;
            }
        }
        let fwd = flow.packets.iter().filter(|p| p.direction == Direction::Forward).count();
        values[30] = flow.len() as f64;
        values[31] = fwd as f64;
        values[32] = (flow.len() - fwd) as f64;
        StatsRepr { values }
    }

    pub fn features(&self) -> Vec<f64> {
        self.values.to_vec()
    }

    /// 33 little-endian f32 values, 132 bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
    }
}
