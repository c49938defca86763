use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::stats::IntensityStats;
use super::sweep::ExperimentRecord;
use crate::scene::Surface;

/// One grid cell with its runs folded together.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedRecord {
    pub panel_code: String,
    pub angle_deg: f64,
    pub distance_m: f64,
    pub surface: Surface,
    pub runs: u32,
    /// Mean of run means, pooled within-run variance, mean points per run.
    pub stats: IntensityStats,
    /// Unweighted mean of the per-run variances.
    pub mean_run_variance: f64,
    pub total_count: usize,
    pub reliable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CellKey {
    pub code: String,
    pub angle: f64,
    pub distance: f64,
    pub surface: Surface,
}

impl Eq for CellKey {}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.code
            .cmp(&other.code)
            .then(self.angle.total_cmp(&other.angle))
            .then(self.distance.total_cmp(&other.distance))
            .then(self.surface.cmp(&other.surface))
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Folds runs per (paint, angle, distance, surface). Output is sorted by that
/// key, so input order does not matter. Runs with an empty ROI contribute no
/// mean; a cell is reliable only if every run was.
pub fn aggregate_runs(records: &[ExperimentRecord]) -> Vec<AggregatedRecord> {
    let mut cells: BTreeMap<CellKey, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry(CellKey {
                code: r.panel_code.clone(),
                angle: r.angle_deg,
                distance: r.distance_m,
                surface: r.surface,
            })
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|(key, mut runs)| {
            runs.sort_by_key(|r| r.run);
            let populated: Vec<_> = runs.iter().filter(|r| r.stats.count > 0).collect();
            let total_count: usize = populated.iter().map(|r| r.stats.count).sum();
            let k = populated.len();
            let (mean, pooled, mean_run_variance) = if k == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let mean = populated.iter().map(|r| r.stats.mean).sum::<f64>() / k as f64;
                let dof: usize = populated.iter().map(|r| r.stats.count - 1).sum();
                let pooled = if dof > 0 {
                    populated
                        .iter()
                        .map(|r| (r.stats.count - 1) as f64 * r.stats.variance)
                        .sum::<f64>()
                        / dof as f64
                } else {
                    0.0
                };
                let mrv = populated.iter().map(|r| r.stats.variance).sum::<f64>() / k as f64;
                (mean, pooled, mrv)
            };
            AggregatedRecord {
                panel_code: key.code,
                angle_deg: key.angle,
                distance_m: key.distance,
                surface: key.surface,
                runs: runs.len() as u32,
                stats: IntensityStats {
                    mean,
                    variance: pooled,
                    count: total_count / runs.len().max(1),
                },
                mean_run_variance,
                total_count,
                reliable: runs.iter().all(|r| r.reliable),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(run: u32, mean: f64, variance: f64, count: usize, reliable: bool) -> ExperimentRecord {
        ExperimentRecord {
            panel_code: "SB-Gloss".into(),
            angle_deg: 0.0,
            distance_m: 5.0,
            surface: Surface::Dry,
            run,
            stats: IntensityStats { mean, variance, count },
            reliable,
        }
    }

    #[test]
    fn mean_of_means() {
        let a = aggregate_runs(&[rec(1, 100.0, 4.0, 20, true), rec(2, 102.0, 4.0, 20, true), rec(3, 104.0, 4.0, 20, true)]);
        assert_eq!(a.len(), 1);
        assert!((a[0].stats.mean - 102.0).abs() < 1e-12);
        assert!((a[0].stats.variance - 4.0).abs() < 1e-12);
        assert!(a[0].reliable);
        assert_eq!(a[0].total_count, 60);
    }

    #[test]
    fn any_unreliable_run_taints_cell() {
        let a = aggregate_runs(&[rec(1, 100.0, 4.0, 20, true), rec(2, 102.0, 4.0, 3, false)]);
        assert!(!a[0].reliable);
    }

    #[test]
    fn single_run_is_identity() {
        let r = rec(1, 87.5, 12.25, 33, true);
        let a = aggregate_runs(std::slice::from_ref(&r));
        assert_eq!(a[0].stats, r.stats);
        assert_eq!(a[0].runs, 1);
    }

    #[test]
    fn identical_runs_are_unchanged() {
        let runs: Vec<_> = (1..=5).map(|i| rec(i, 55.0, 9.5, 41, true)).collect();
        let a = aggregate_runs(&runs);
        assert_eq!(a[0].stats, runs[0].stats);
    }

    #[test]
    fn empty_runs_do_not_drag_the_mean() {
        let a = aggregate_runs(&[rec(1, 50.0, 1.0, 5, false), rec(2, 0.0, 0.0, 0, false)]);
        assert_eq!(a[0].stats.mean, 50.0);
        assert!(!a[0].reliable);
    }

    #[test]
    fn pooled_variance_weights_by_dof() {
        let a = aggregate_runs(&[rec(1, 10.0, 2.0, 11, true), rec(2, 10.0, 8.0, 31, true)]);
        let expected = (10.0 * 2.0 + 30.0 * 8.0) / 40.0;
        assert!((a[0].stats.variance - expected).abs() < 1e-12);
        assert!((a[0].mean_run_variance - 5.0).abs() < 1e-12);
    }

    #[test]
    fn order_independent() {
        let mut rs = vec![rec(1, 100.0, 4.0, 20, true), rec(2, 101.0, 3.0, 22, true), rec(3, 99.0, 5.0, 19, true)];
        let mut other = rs.clone();
        other[0].surface = Surface::Wet;
        rs.extend(other);
        let a = aggregate_runs(&rs);
        rs.reverse();
        assert_eq!(a, aggregate_runs(&rs));
        assert_eq!(a.len(), 2);
    }
}
