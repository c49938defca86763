use paintlidar_core::analysis::extract_panel_roi;
use paintlidar_core::geometry::PanelGeometry;
use paintlidar_core::paints::PaintTable;
use paintlidar_core::pem::{calibrate, perceive, scan_error_records, Outcome, PemSettings};
use paintlidar_core::scanner::scan;
use paintlidar_core::{PanelSpec, RandomStream, Scene, Surface};

fn panel(distance: f64, tilt: f64) -> PanelSpec {
    PanelSpec {
        paint: PaintTable::builtin().get("TSSM-Gloss").unwrap().clone(),
        side_length: 0.5,
        center_distance: distance,
        elevation_angle: tilt,
        surface: Surface::Dry,
        center_height: 1.0,
        azimuth: 0.0,
    }
}

fn scene_with(p: PanelSpec) -> Scene {
    let mut scene = Scene::empty("perception");
    scene.panels = vec![p];
    scene
}

#[test]
fn near_panel_becomes_one_object_at_the_roi_centroid() {
    let settings = PemSettings::default();
    let scene = scene_with(panel(5.0, 0.0));
    let cloud = scan(&scene, &RandomStream::new(1, "near")).unwrap();
    let geometry = PanelGeometry::new(0, &scene.panels[0], scene.sensor.mount_height);
    let roi = extract_panel_roi(&cloud, &geometry, 0.0);
    let n = roi.len() as f64;
    let centroid = [
        roi.iter().map(|p| p.x).sum::<f64>() / n,
        roi.iter().map(|p| p.y).sum::<f64>() / n,
        roi.iter().map(|p| p.z).sum::<f64>() / n,
    ];

    let objects = perceive(&cloud, settings.detector_min_points, settings.cluster_distance);
    assert_eq!(objects.len(), 1);
    let c = objects[0].center;
    let gap = ((c[0] - centroid[0]).powi(2) + (c[1] - centroid[1]).powi(2) + (c[2] - centroid[2]).powi(2)).sqrt();
    assert!(gap < 0.1, "{gap}");
    assert_eq!(objects[0].point_count, roi.len());
}

#[test]
fn far_tilted_panel_is_not_perceived() {
    let settings = PemSettings::default();
    for seed in 0..5 {
        let cloud = scan(&scene_with(panel(30.0, 60.0)), &RandomStream::new(seed, "far")).unwrap();
        assert!(cloud.len() < settings.detector_min_points);
        assert!(perceive(&cloud, settings.detector_min_points, settings.cluster_distance).is_empty());
    }
}

#[test]
fn detection_degrades_with_distance() {
    let settings = PemSettings::default();
    let mut rng = RandomStream::new(4, "conditioning");
    let mut panels = Vec::new();
    for (lo, hi) in [(5.0, 10.0), (20.0, 30.0)] {
        for _ in 0..200 {
            panels.push(panel(rng.uniform_range(lo, hi), rng.uniform_range(0.0, 60.0)));
        }
    }
    let records = scan_error_records(&Scene::empty("c"), &panels, 4, &settings).unwrap();
    let rate = |lo: f64, hi: f64| {
        let gt: Vec<_> = records
            .iter()
            .filter(|r| r.outcome != Outcome::FalsePositive && (lo..hi).contains(&r.condition.distance))
            .collect();
        gt.iter().filter(|r| r.outcome == Outcome::TruePositive).count() as f64 / gt.len() as f64
    };
    let (near, far) = (rate(4.0, 11.0), rate(19.0, 31.0));
    assert!(near > 0.9, "{near}");
    assert!(far < near - 0.2, "near {near} far {far}");

    let model = calibrate(&records, &settings.binning()).unwrap();
    let p = |d: f64| {
        let bin = model.lookup(&paintlidar_core::pem::Condition { distance: d, tilt: 10.0, surface: Surface::Dry }).unwrap();
        bin.detection_probability.unwrap()
    };
    assert!(p(27.0) < p(6.0));
}
