//! Flow representations.
//!
//! | kind | layout | compact bytes |
//! |------|--------|---------------|
//! | `dist(N)` | 4 counter vectors (size/time x fwd/bwd) | `4N` |
//! | `ts(N)` | first `N` packets (f32 time, 11-bit size, direction bit) | `6N` |
//! | `fp(N)` | two `N x N` time-by-size count matrices | `2N^2` |
//! | `sts` | 33 summary statistics as f32 | `132` |

mod counter;
mod dist;
mod flowpic;
mod memory;
mod stats;
mod timeseries;

pub use counter::Counter;
pub use dist::{DistRepr, ExactDist};
pub use flowpic::FlowPic;
pub use memory::{estimate_memory, format_bytes, repr_bytes, ReprKind};
pub use stats::{StatsRepr, STAT_FEATURE_NAMES};
pub use timeseries::{TimeSeries, TsEntry};
