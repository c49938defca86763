//! Sensor-frame geometry of tilted square panels.
//!
//! Frame: x forward along the boresight (azimuth 0), y to the left, z up,
//! origin at the sensor. Azimuth is measured counter-clockwise from +x.

use nalgebra::Vector3;

use crate::scene::PanelSpec;

pub type Vec3 = Vector3<f64>;

/// Unit direction for an (elevation, azimuth) pair in degrees.
pub fn direction(elevation_deg: f64, azimuth_deg: f64) -> Vec3 {
    let (se, ce) = elevation_deg.to_radians().sin_cos();
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_degrees(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Angle between a ray and a plane normal in degrees, folded into `[0, 90]`.
pub fn incidence_degrees(dir: &Vec3, normal: &Vec3) -> f64 {
    let cross = dir.cross(normal).norm();
    let dot = dir.dot(normal).abs();
    cross.atan2(dot).to_degrees()
}

/// World-frame placement of one panel.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelGeometry {
    pub index: usize,
    pub center: Vec3,
    /// Unit normal on the side facing the sensor at zero tilt.
    pub normal: Vec3,
    /// In-plane unit vector pointing to the panel's top edge.
    pub up: Vec3,
    /// In-plane horizontal unit vector.
    pub lateral: Vec3,
    pub half_side: f64,
}

impl PanelGeometry {
    pub fn new(index: usize, panel: &PanelSpec, mount_height: f64) -> Self {
        let (sa, ca) = panel.azimuth.to_radians().sin_cos();
        let bearing = Vec3::new(ca, sa, 0.0);
        let lateral = Vec3::new(-sa, ca, 0.0);
        let z = Vec3::z();
        let (st, ct) = panel.elevation_angle.to_radians().sin_cos();
        // Tilting swings the top edge away from the sensor.
        let normal = -ct * bearing + st * z;
        let up = st * bearing + ct * z;
        let center = panel.center_distance * bearing + (panel.center_height - mount_height) * z;
        Self {
            index,
            center,
            normal,
            up,
            lateral,
            half_side: panel.side_length * 0.5,
        }
    }

    /// In-plane coordinates `(lateral, up)` of a point relative to the centre.
    pub fn plane_coords(&self, p: &Vec3) -> (f64, f64) {
        let q = p - self.center;
        (q.dot(&self.lateral), q.dot(&self.up))
    }

    pub fn contains_plane_coords(&self, a: f64, b: f64, half: f64) -> bool {
        a.abs() <= half && b.abs() <= half
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let h = self.half_side;
        [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .map(|(a, b)| self.center + a * h * self.lateral + b * h * self.up)
    }

    /// Distance along the unit ray `dir` to the panel plane, if it is ahead.
    pub fn plane_distance(&self, dir: &Vec3) -> Option<f64> {
        let denom = dir.dot(&self.normal);
        if denom.abs() < 1e-12 {
            return None;
        }
        let s = self.center.dot(&self.normal) / denom;
        (s > 0.0).then_some(s)
    }

    /// Conservative (azimuth, elevation) box of the panel as seen from the sensor.
    pub fn angular_box(&self) -> AngularBox {
        let ref_az = self.center.y.atan2(self.center.x).to_degrees();
        let mut az_lo = f64::INFINITY;
        let mut az_hi = f64::NEG_INFINITY;
        for c in self.corners() {
            let d = wrap_degrees(c.y.atan2(c.x).to_degrees() - ref_az);
            az_lo = az_lo.min(d);
            az_hi = az_hi.max(d);
        }
        // Elevation extremes of a rectangle can sit mid-edge; sample the boundary densely
        // and pad by the worst-case spacing.
        let mut el_lo = f64::INFINITY;
        let mut el_hi = f64::NEG_INFINITY;
        let h = self.half_side;
        const N: usize = 64;
        for i in 0..=N {
            let t = -1.0 + 2.0 * i as f64 / N as f64;
            for (a, b) in [(t, -1.0), (t, 1.0), (-1.0, t), (1.0, t)] {
                let p = self.center + a * h * self.lateral + b * h * self.up;
                let el = p.z.atan2((p.x * p.x + p.y * p.y).sqrt()).to_degrees();
                el_lo = el_lo.min(el);
                el_hi = el_hi.max(el);
            }
        }
        let pad = 0.05 * (el_hi - el_lo) / N as f64 + 1e-9;
        AngularBox {
            center_azimuth: ref_az,
            az_lo,
            az_hi,
            el_lo: el_lo - pad,
            el_hi: el_hi + pad,
        }
    }
}

/// Angular bounds; azimuths are offsets from `center_azimuth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularBox {
    pub center_azimuth: f64,
    pub az_lo: f64,
    pub az_hi: f64,
    pub el_lo: f64,
    pub el_hi: f64,
}

impl AngularBox {
    pub fn contains_azimuth(&self, azimuth: f64, pad: f64) -> bool {
        let d = wrap_degrees(azimuth - self.center_azimuth);
        d >= self.az_lo - pad && d <= self.az_hi + pad
    }

    pub fn overlaps(&self, other: &AngularBox) -> bool {
        let shift = wrap_degrees(other.center_azimuth - self.center_azimuth);
        let (olo, ohi) = (other.az_lo + shift, other.az_hi + shift);
        let az = olo <= self.az_hi && self.az_lo <= ohi;
        let el = other.el_lo <= self.el_hi && self.el_lo <= other.el_hi;
        az && el
    }
}

/// Angular extents `(azimuth, elevation)` in degrees of a panel seen from
/// the sensor, using the widest horizontal chord and the exact top/bottom edge
/// elevations.
pub fn angular_footprint(panel: &PanelSpec, mount_height: f64) -> (f64, f64) {
    let h = panel.side_length * 0.5;
    let d = panel.center_distance;
    let (st, ct) = panel.elevation_angle.to_radians().sin_cos();
    let dz = panel.center_height - mount_height;
    let near = d - h * st;
    let far = d + h * st;
    let azimuth = 2.0 * (h / near).atan();
    let top = ((dz + h * ct) / far).atan();
    let bottom = ((dz - h * ct) / near).atan();
    (azimuth.to_degrees(), (top - bottom).to_degrees())
}
