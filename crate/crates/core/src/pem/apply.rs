use super::{ErrorModel, GroundTruthObject, PerceivedObject};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Smallest extent an injected object can have, meters.
const MIN_EXTENT: f64 = 1e-3;

/// Span used for false-positive placement when a bin has no upper distance edge.
const OPEN_BIN_SPAN: f64 = 10.0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ApplyOutcome {
    pub objects: Vec<PerceivedObject>,
    /// Ids of ground-truth objects that were served by a nearest-bin fallback.
    pub fallbacks: Vec<String>,
}

/// Injects errors onto ground truth. Object `i` draws from `stream/gt/{i}`:
/// survival first, then the perturbation, then its false positives. Survivors
/// keep the ground-truth id; false positives carry none.
pub fn apply(
    model: &ErrorModel,
    gt: &[GroundTruthObject],
    stream: &RandomStream,
    allow_fallback: bool,
) -> Result<ApplyOutcome> {
    let mut out = ApplyOutcome::default();
    for (i, truth) in gt.iter().enumerate() {
        truth.check()?;
        let condition = truth.condition();
        let bin = match model.lookup(&condition) {
            Some(bin) => bin,
            None if allow_fallback => {
                out.fallbacks.push(truth.id.clone());
                model
                    .nearest_populated(&condition)
                    .ok_or_else(|| Error::NoBin { id: truth.id.clone() })?
            }
            None => return Err(Error::NoBin { id: truth.id.clone() }),
        };
        let mut rng = stream.derive(format!("gt/{i}"));
        let p = bin.detection_probability.unwrap_or(0.0);
        if rng.uniform() < p {
            let (cm, cs) = (bin.center_error_mean.unwrap_or([0.0; 3]), bin.center_error_std.unwrap_or([0.0; 3]));
            let (em, es) = (bin.extent_error_mean.unwrap_or([0.0; 2]), bin.extent_error_std.unwrap_or([0.0; 2]));
            let mut center = truth.center;
            for a in 0..3 {
                center[a] += cm[a] + cs[a] * rng.standard_normal();
            }
            let mut extent = truth.extent;
            for a in 0..2 {
                extent[a] = (extent[a] + em[a] + es[a] * rng.standard_normal()).max(MIN_EXTENT);
            }
            out.objects.push(PerceivedObject {
                matched_gt_id: Some(truth.id.clone()),
                center,
                extent,
                mean_intensity: None,
                point_count: 0,
            });
        }
        let rate = bin.false_positive_rate.unwrap_or(0.0);
        if rate > 0.0 {
            let [lo, hi] = bin.distance_range;
            let hi = if hi.is_finite() { hi } else { lo + OPEN_BIN_SPAN };
            for _ in 0..rng.poisson(rate) {
                let r = rng.uniform_range(lo, hi);
                out.objects.push(PerceivedObject {
                    matched_gt_id: None,
                    center: [r, 0.0, truth.center[2]],
                    extent: truth.extent,
                    mean_intensity: None,
                    point_count: 0,
                });
            }
        }
    }
    Ok(out)
}
