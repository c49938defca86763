//! Paint reflectance: maps (paint, incidence, range, surface) to a
//! distribution over the sensor's calibrated 0–255 intensity scale.
//!
//! Expected intensity is a cosine diffuse lobe plus a cosine-power specular
//! lobe, scaled by a residual distance-compensation curve:
//!
//! ```text
//! mean = clamp(255 · (ρ·cos^kd θ + s·cos^ks θ) · g(r) + shift·[wet], 0, 255)
//! ```
//!
//! Noise has a fixed floor plus a part proportional to the dry mean, inflated
//! by the paint's wet variance factor on wet surfaces. Dropout grows with
//! incidence and beyond the onset range.

use serde::{Deserialize, Serialize};

use crate::rng::RandomStream;
use crate::scene::{PaintParams, SensorConfig, Surface, Violation};

pub const MAX_INTENSITY: f64 = 255.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflectanceModel {
    pub diffuse_exponent: f64,
    /// `(range m, gain)` knots of the piecewise-linear compensation residual;
    /// the gain is held constant outside the knot span.
    pub distance_knots: Vec<(f64, f64)>,
    pub dropout_base: f64,
    pub dropout_per_cos: f64,
    /// Per meter beyond `dropout_range_onset`.
    pub dropout_per_meter: f64,
    pub dropout_range_onset: f64,
    pub wet_dropout: f64,
    pub wet_dropout_min_angle: f64,
    /// Side length of the square cells of one droplet pattern, meters.
    pub droplet_cell: f64,
    /// Matte paints must keep `specular_weight` below this.
    pub gloss_threshold: f64,
}

impl Default for ReflectanceModel {
    fn default() -> Self {
        Self {
            diffuse_exponent: 1.0,
            distance_knots: vec![(0.0, 1.0), (10.0, 1.0), (20.0, 0.55), (30.0, 0.45)],
            dropout_base: 0.0,
            dropout_per_cos: 0.3,
            dropout_per_meter: 0.05,
            dropout_range_onset: 20.0,
            wet_dropout: 0.05,
            wet_dropout_min_angle: 45.0,
            droplet_cell: 0.02,
            gloss_threshold: 0.05,
        }
    }
}

/// Sensor intensity-noise parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntensityNoise {
    pub sigma: f64,
    pub fraction: f64,
}

impl From<&SensorConfig> for IntensityNoise {
    fn from(s: &SensorConfig) -> Self {
        Self {
            sigma: s.intensity_noise_sigma,
            fraction: s.intensity_noise_fraction,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReflectanceQuery<'a> {
    pub paint: &'a PaintParams,
    /// Degrees in `[0, 90)`.
    pub incidence_angle: f64,
    /// Meters, positive.
    pub range: f64,
    pub surface: Surface,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntensityDistribution {
    pub mean: f64,
    pub std: f64,
    pub dropout_probability: f64,
}

impl IntensityDistribution {
    /// One realization; `None` is a missing measurement.
    pub fn sample(&self, stream: &mut RandomStream) -> Option<u8> {
        self.sample_with_shared(stream, 0.0, 0.0)
    }

    /// Like [`sample`](Self::sample), but `shared_std` of the total standard
    /// deviation comes from a caller-supplied standard normal `shared_z`
    /// (e.g. a droplet pattern shared across scans) and only the remainder is
    /// drawn from `stream`. The marginal distribution is unchanged.
    pub fn sample_with_shared(
        &self,
        stream: &mut RandomStream,
        shared_std: f64,
        shared_z: f64,
    ) -> Option<u8> {
        if stream.uniform() < self.dropout_probability {
            return None;
        }
        let shared_std = shared_std.clamp(0.0, self.std);
        let own_std = (self.std * self.std - shared_std * shared_std).max(0.0).sqrt();
        let own = if own_std > 0.0 {
            own_std * stream.standard_normal()
        } else {
            0.0
        };
        Some(quantize(self.mean + own + shared_std * shared_z))
    }
}

/// Clip to the sensor scale, then round half to even.
pub fn quantize(x: f64) -> u8 {
    x.clamp(0.0, MAX_INTENSITY).round_ties_even() as u8
}

impl ReflectanceModel {
    /// Residual distance-compensation gain `g(r)`.
    pub fn distance_gain(&self, range: f64) -> f64 {
        let knots = &self.distance_knots;
        match knots.len() {
            0 => return 1.0,
            1 => return knots[0].1,
            _ => {}
        }
        if range <= knots[0].0 {
            return knots[0].1;
        }
        for w in knots.windows(2) {
            let ((r0, g0), (r1, g1)) = (w[0], w[1]);
            if range <= r1 {
                if r1 == r0 {
                    return g1;
                }
                return g0 + (g1 - g0) * (range - r0) / (r1 - r0);
            }
        }
        knots[knots.len() - 1].1
    }

    /// Mean before the wet shift and clipping.
    fn raw_mean(&self, q: &ReflectanceQuery<'_>) -> f64 {
        let cos = q.incidence_angle.to_radians().cos().max(0.0);
        let p = q.paint;
        let lobes = p.base_reflectivity * cos.powf(self.diffuse_exponent)
            + p.specular_weight * cos.powf(p.specular_exponent);
        MAX_INTENSITY * lobes * self.distance_gain(q.range)
    }

    pub fn dropout_probability(&self, q: &ReflectanceQuery<'_>) -> f64 {
        let cos = q.incidence_angle.to_radians().cos();
        let mut p = self.dropout_base
            + self.dropout_per_cos * (1.0 - cos)
            + self.dropout_per_meter * (q.range - self.dropout_range_onset).max(0.0);
        if q.surface.is_wet() && q.incidence_angle >= self.wet_dropout_min_angle {
            p += self.wet_dropout;
        }
        p.clamp(0.0, 1.0)
    }

    pub fn expected_intensity(
        &self,
        noise: IntensityNoise,
        q: &ReflectanceQuery<'_>,
    ) -> IntensityDistribution {
        let dry_mean = self.raw_mean(q).clamp(0.0, MAX_INTENSITY);
        let wet = q.surface.is_wet();
        let shift = if wet { q.paint.wet_mean_shift } else { 0.0 };
        let mean = (dry_mean + shift).clamp(0.0, MAX_INTENSITY);
        let base = noise.sigma + noise.fraction * dry_mean;
        let std = if wet {
            base * q.paint.wet_variance_factor
        } else {
            base
        };
        IntensityDistribution {
            mean,
            std,
            dropout_probability: self.dropout_probability(q),
        }
    }

    pub fn sample_intensity(
        &self,
        noise: IntensityNoise,
        q: &ReflectanceQuery<'_>,
        stream: &mut RandomStream,
    ) -> Option<u8> {
        self.expected_intensity(noise, q).sample(stream)
    }

    pub fn validate(&self, out: &mut Vec<Violation>) {
        const T: &str = "ReflectanceModel";
        let mut push = |field: &str, msg: &str| {
            out.push(Violation {
                type_name: T,
                field: field.to_string(),
                message: msg.to_string(),
            })
        };
        if !(self.diffuse_exponent > 0.0 && self.diffuse_exponent.is_finite()) {
            push("diffuse_exponent", "must be positive");
        }
        if self
            .distance_knots
            .iter()
            .any(|&(r, g)| !(r.is_finite() && r >= 0.0 && g.is_finite() && g >= 0.0))
        {
            push("distance_knots", "ranges and gains must be finite and >= 0");
        }
        if self.distance_knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            push("distance_knots", "ranges must be strictly increasing");
        }
        for (name, v) in [
            ("dropout_base", self.dropout_base),
            ("dropout_per_cos", self.dropout_per_cos),
            ("dropout_per_meter", self.dropout_per_meter),
            ("dropout_range_onset", self.dropout_range_onset),
            ("wet_dropout", self.wet_dropout),
            ("wet_dropout_min_angle", self.wet_dropout_min_angle),
            ("gloss_threshold", self.gloss_threshold),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                push(name, "must be finite and >= 0");
            }
        }
        if !(self.droplet_cell > 0.0 && self.droplet_cell.is_finite()) {
            push("droplet_cell", "must be positive");
        }
    }
}
