use super::{dist, Condition, ErrorRecord, GroundTruthObject, PerceivedObject};
use crate::scene::Surface;

/// Greedy nearest-center association. Returns `(gt index, perceived index)`
/// pairs in the order they were made; ties break on the lower indices.
pub fn associate(gt: &[GroundTruthObject], perceived: &[PerceivedObject], gate: f64) -> Vec<(usize, usize)> {
    assert!(gate > 0.0, "gate must be positive");
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (g, truth) in gt.iter().enumerate() {
        for (p, obj) in perceived.iter().enumerate() {
            let d = dist(&truth.center, &obj.center);
            if d <= gate {
                candidates.push((d, g, p));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut p_used = vec![false; perceived.len()];
    let mut pairs = Vec::new();
    for (_, g, p) in candidates {
        if !gt_used[g] && !p_used[p] {
            gt_used[g] = true;
            p_used[p] = true;
            pairs.push((g, p));
        }
    }
    pairs
}

/// One record per ground-truth object (true positive or false negative, in
/// input order) followed by one false positive per unmatched perceived object.
/// A false positive is filed under the condition of the nearest ground-truth
/// object, or its own range when there is none.
pub fn match_objects(gt: &[GroundTruthObject], perceived: &[PerceivedObject], gate: f64) -> Vec<ErrorRecord> {
    let pairs = associate(gt, perceived, gate);
    let mut partner = vec![None; gt.len()];
    let mut p_used = vec![false; perceived.len()];
    for &(g, p) in &pairs {
        partner[g] = Some(p);
        p_used[p] = true;
    }
    let mut records = Vec::with_capacity(gt.len() + perceived.len());
    for (truth, partner) in gt.iter().zip(&partner) {
        let condition = truth.condition();
        records.push(match partner {
            Some(p) => {
                let obj = &perceived[*p];
                ErrorRecord::hit(
                    condition,
                    [
                        obj.center[0] - truth.center[0],
                        obj.center[1] - truth.center[1],
                        obj.center[2] - truth.center[2],
                    ],
                    [obj.extent[0] - truth.extent[0], obj.extent[1] - truth.extent[1]],
                )
            }
            None => ErrorRecord::miss(condition),
        });
    }
    for (obj, _) in perceived.iter().zip(&p_used).filter(|(_, used)| !**used) {
        let nearest = gt
            .iter()
            .map(|t| (dist(&t.center, &obj.center), t))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, t)| t.condition());
        let condition = nearest.unwrap_or(Condition {
            distance: super::norm(&obj.center),
            tilt: 0.0,
            surface: Surface::Dry,
        });
        records.push(ErrorRecord::ghost(condition));
    }
    records
}
