use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::LidarPoint;

/// Mean and sample variance (n − 1 denominator) of ROI intensities.
///
/// `count == 0` only appears as the sentinel for an empty ROI in sweep
/// records; [`intensity_stats`] never produces it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityStats {
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

impl IntensityStats {
    pub const EMPTY: IntensityStats = IntensityStats {
        mean: 0.0,
        variance: 0.0,
        count: 0,
    };
}

pub fn intensity_stats(points: &[LidarPoint]) -> Result<IntensityStats> {
    stats_from_values(points.iter().map(|p| f64::from(p.intensity)))
}

/// Single-pass Welford accumulation.
pub fn stats_from_values(values: impl IntoIterator<Item = f64>) -> Result<IntensityStats> {
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in values {
        n += 1;
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    if n == 0 {
        return Err(Error::EmptyRoi);
    }
    let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    Ok(IntensityStats {
        mean,
        variance,
        count: n,
    })
}
