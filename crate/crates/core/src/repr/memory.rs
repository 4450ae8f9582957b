use alloc::format;
use alloc::string::{String, ToString};
use core::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReprKind {
    Dist,
    TimeSeries,
    FlowPic,
    Stats,
}

impl FromStr for ReprKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "dist" => Ok(ReprKind::Dist),
            "ts" => Ok(ReprKind::TimeSeries),
            "fp" => Ok(ReprKind::FlowPic),
            "sts" => Ok(ReprKind::Stats),
            other => Err(Error::UnknownReprKind(other.to_string())),
        }
    }
}

impl core::fmt::Display for ReprKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ReprKind::Dist => "dist",
            ReprKind::TimeSeries => "ts",
            ReprKind::FlowPic => "fp",
            ReprKind::Stats => "sts",
        })
    }
}

/// Stored bytes of one representation with compact counters.
pub fn repr_bytes(kind: ReprKind, n: usize) -> u64 {
    let n = n as u64;
    match kind {
        ReprKind::Dist => 4 * n,
        ReprKind::TimeSeries => 6 * n,
        ReprKind::FlowPic => 2 * n * n,
        ReprKind::Stats => 132,
    }
}

/// Bytes needed to hold every in-flight representation: one per flow that
/// arrived during the collection window.
pub fn estimate_memory(kind: ReprKind, n: usize, flow_rate: f64, tau: f64) -> f64 {
    repr_bytes(kind, n) as f64 * flow_rate * tau
}

/// Decimal SI rendering with one decimal: `300.0M`, `30.7G`.
pub fn format_bytes(bytes: f64) -> String {
    const UNITS: [(f64, &str); 4] = [(1e12, "T"), (1e9, "G"), (1e6, "M"), (1e3, "K")];
    for (scale, unit) in UNITS {
        if bytes >= scale {
            return format!("{:.1}{unit}", bytes / scale);
        }
    }
    format!("{bytes:.1}")
}
