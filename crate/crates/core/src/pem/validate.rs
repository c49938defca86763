use super::{calibrate, BinModel, ErrorModel, ErrorRecord};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct BinDivergence {
    pub bin: String,
    pub model_samples: usize,
    pub held_out_samples: usize,
    /// Absolute differences; absent when either side lacks the statistic.
    pub detection_probability: Option<f64>,
    pub false_positive_rate: Option<f64>,
    pub center_error_mean: Option<[f64; 3]>,
    pub center_error_std: Option<[f64; 3]>,
    pub extent_error_mean: Option<[f64; 2]>,
    pub extent_error_std: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceReport {
    pub bins: Vec<BinDivergence>,
}

impl DivergenceReport {
    pub fn max_detection_divergence(&self) -> f64 {
        self.bins.iter().filter_map(|b| b.detection_probability).fold(0.0, f64::max)
    }
}

fn diff<const N: usize>(a: Option<[f64; N]>, b: Option<[f64; N]>) -> Option<[f64; N]> {
    let (a, b) = (a?, b?);
    Some(std::array::from_fn(|i| (a[i] - b[i]).abs()))
}

fn scalar(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some((a? - b?).abs())
}

fn compare(m: &BinModel, h: &BinModel) -> BinDivergence {
    BinDivergence {
        bin: m.label(),
        model_samples: m.sample_count,
        held_out_samples: h.sample_count,
        detection_probability: scalar(m.detection_probability, h.detection_probability),
        false_positive_rate: scalar(m.false_positive_rate, h.false_positive_rate),
        center_error_mean: diff(m.center_error_mean, h.center_error_mean),
        center_error_std: diff(m.center_error_std, h.center_error_std),
        extent_error_mean: diff(m.extent_error_mean, h.extent_error_mean),
        extent_error_std: diff(m.extent_error_std, h.extent_error_std),
    }
}

/// Per-bin absolute differences between `model` and statistics recomputed
/// from `held_out` with the model's own binning.
pub fn validate(model: &ErrorModel, held_out: &[ErrorRecord]) -> Result<DivergenceReport> {
    let empirical = calibrate(held_out, &model.binning)?;
    Ok(DivergenceReport { bins: model.bins.iter().zip(&empirical.bins).map(|(m, h)| compare(m, h)).collect() })
}
