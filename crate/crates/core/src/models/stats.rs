use super::{predict_confidence, DatasetItem};
use crate::error::{ensure, Result};
use crate::nn::ModelParams;

/// Five-number summary plus the mean. Quartiles interpolate linearly
/// between order statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        ensure!(!values.is_empty(), InvalidParameter, "cannot summarise an empty sample");
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantile = |q: f64| {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        Ok(Self {
            min: sorted[0],
            q1: quantile(0.25),
            median: quantile(0.5),
            q3: quantile(0.75),
            max: sorted[sorted.len() - 1],
            mean: values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

/// Distribution of `target - prediction` over all regions. Negative values
/// mean the network is over-confident.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceStats {
    pub signed: Summary,
    pub absolute: Summary,
    /// Share of regions with `|target - prediction| < 0.05`.
    pub fraction_within_005: f64,
    pub count: usize,
}

impl ConfidenceStats {
    pub fn from_pairs(predictions: &[f64], targets: &[f64]) -> Result<Self> {
        ensure!(
            predictions.len() == targets.len(),
            DimensionMismatch,
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        );
        let signed: Vec<f64> = targets.iter().zip(predictions).map(|(t, p)| t - p).collect();
        let absolute: Vec<f64> = signed.iter().map(|d| d.abs()).collect();
        let within = absolute.iter().filter(|&&d| d < 0.05).count();
        Ok(Self {
            signed: Summary::of(&signed)?,
            absolute: Summary::of(&absolute)?,
            fraction_within_005: within as f64 / absolute.len() as f64,
            count: signed.len(),
        })
    }
}

pub fn confidence_stats<'a>(
    params: &ModelParams<f32>,
    items: impl IntoIterator<Item = &'a DatasetItem>,
) -> Result<ConfidenceStats> {
    let (mut predictions, mut targets) = (Vec::new(), Vec::new());
    for item in items {
        let map = predict_confidence(&item.input, params)?;
        predictions.extend(map.values().iter().map(|&v| v as f64));
        targets.extend(item.target.pixels().iter().map(|&v| v as f64));
    }
    ConfidenceStats::from_pairs(&predictions, &targets)
}
