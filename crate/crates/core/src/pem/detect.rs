use std::collections::HashMap;

use super::PerceivedObject;
use crate::scene::PointCloud;

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index wins so roots are stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clustering of the cloud with `cluster_distance` as the link
/// length. Clusters with at least `min_points` returns become objects, ordered
/// by their first point in the cloud.
pub fn perceive(cloud: &PointCloud, min_points: usize, cluster_distance: f64) -> Vec<PerceivedObject> {
    assert!(min_points >= 1, "min_points must be at least 1");
    assert!(cluster_distance > 0.0, "cluster_distance must be positive");
    let pts = &cloud.points;
    if pts.len() < min_points {
        return Vec::new();
    }
    let cell_of = |i: usize| {
        let p = &pts[i];
        [
            (p.x / cluster_distance).floor() as i64,
            (p.y / cluster_distance).floor() as i64,
            (p.z / cluster_distance).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for i in 0..pts.len() {
        grid.entry(cell_of(i)).or_default().push(i);
    }
    let d2 = cluster_distance * cluster_distance;
    let mut sets = DisjointSet::new(pts.len());
    for i in 0..pts.len() {
        let c = cell_of(i);
        let p = &pts[i];
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(members) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                        continue;
                    };
                    for &j in members.iter().filter(|&&j| j > i) {
                        let q = &pts[j];
                        let (ex, ey, ez) = (p.x - q.x, p.y - q.y, p.z - q.z);
                        if ex * ex + ey * ey + ez * ez <= d2 {
                            sets.union(i, j);
                        }
                    }
                }
            }
        }
    }

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..pts.len() {
        let root = sets.find(i);
        let k = *slot.entry(root).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[k].push(i);
    }

    clusters
        .into_iter()
        .filter(|c| c.len() >= min_points)
        .map(|members| {
            let n = members.len() as f64;
            let mut center = [0.0; 3];
            let mut intensity = 0.0;
            for &i in &members {
                center[0] += pts[i].x;
                center[1] += pts[i].y;
                center[2] += pts[i].z;
                intensity += f64::from(pts[i].intensity);
            }
            center.iter_mut().for_each(|c| *c /= n);
            let bearing = center[1].atan2(center[0]);
            let (lx, ly) = (-bearing.sin(), bearing.cos());
            let (mut wmin, mut wmax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut zmin, mut zmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &members {
                let w = pts[i].x * lx + pts[i].y * ly;
                wmin = wmin.min(w);
                wmax = wmax.max(w);
                zmin = zmin.min(pts[i].z);
                zmax = zmax.max(pts[i].z);
            }
            PerceivedObject {
                matched_gt_id: None,
                center,
                extent: [wmax - wmin, zmax - zmin],
                mean_intensity: Some(intensity / n),
                point_count: members.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::LidarPoint;

    fn pt(x: f64, y: f64, z: f64, intensity: u8) -> LidarPoint {
        LidarPoint { x, y, z, intensity, channel: 0, azimuth: 0.0, range: (x * x + y * y + z * z).sqrt() }
    }

    fn cloud(points: Vec<LidarPoint>) -> PointCloud {
        PointCloud { points, revolution_index: 0, scene_id: "t".into() }
    }

    #[test]
    fn empty_cloud() {
        assert!(perceive(&cloud(vec![]), 1, 0.5).is_empty());
    }

    #[test]
    fn two_separate_clusters() {
        let mut pts = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.01;
            pts.push(pt(5.0, t, 0.0, 100));
            pts.push(pt(10.0, 3.0 + t, 0.2, 50));
        }
        let objs = perceive(&cloud(pts), 10, 0.5);
        assert_eq!(objs.len(), 2);
        assert_eq!(objs[0].point_count, 20);
        assert!((objs[0].center[0] - 5.0).abs() < 1e-12);
        assert!((objs[0].center[1] - 0.095).abs() < 1e-12);
        assert!((objs[0].mean_intensity.unwrap() - 100.0).abs() < 1e-12);
        assert!((objs[1].mean_intensity.unwrap() - 50.0).abs() < 1e-12);
        assert!((objs[1].extent[1]).abs() < 1e-12);
    }

    #[test]
    fn small_clusters_are_dropped() {
        let pts = (0..9).map(|i| pt(5.0, i as f64 * 0.01, 0.0, 10)).collect();
        assert!(perceive(&cloud(pts), 10, 0.5).is_empty());
    }

    #[test]
    fn chain_links_through_neighbours() {
        // Consecutive points 0.4 apart chain into one cluster even though the ends are 4 m apart.
        let pts = (0..11).map(|i| pt(5.0, i as f64 * 0.4 - 2.0, 0.0, 10)).collect();
        let objs = perceive(&cloud(pts), 1, 0.5);
        assert_eq!(objs.len(), 1);
        assert!((objs[0].extent[0] - 4.0).abs() < 1e-9);
    }
}
