//! Predictor matrix construction and input normalization.
//!
//! Continuous predictors are z-scored with statistics from the training
//! period only. Hour of day and day of year enter as sine/cosine pairs.

use std::f64::consts::TAU;

use super::frame::{FmcSeries, WeatherFrame};
use crate::error::{Error, Result};
use crate::nn::{Matrix, NamedTensor, TensorFile};
use crate::train::LossMask;

pub const FEATURE_NAMES: [&str; 12] = [
    "drying_eq",
    "wetting_eq",
    "solar",
    "wind",
    "rain",
    "hour_sin",
    "hour_cos",
    "doy_sin",
    "doy_cos",
    "elevation",
    "lon",
    "lat",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();
pub const DRYING_FEATURE: usize = 0;
const CYCLIC: [usize; 4] = [5, 6, 7, 8];

/// Unnormalized predictors, one row per hour.
pub fn raw_features(frame: &WeatherFrame) -> Matrix {
    let mut m = Matrix::zeros(frame.len(), N_FEATURES);
    for i in 0..frame.len() {
        let hour = frame.hour[i] * TAU / 24.0;
        let doy = frame.doy[i] * TAU / 365.25;
        let row = [
            frame.drying_eq[i],
            frame.wetting_eq[i],
            frame.solar[i],
            frame.wind[i],
            frame.rain[i],
            hour.sin(),
            hour.cos(),
            doy.sin(),
            doy.cos(),
            frame.elevation[i],
            frame.lon[i],
            frame.lat[i],
        ];
        m.row_mut(i).copy_from_slice(&row);
    }
    m
}

/// Per-feature affine map `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn identity() -> Self {
        Self {
            mean: vec![0.0; N_FEATURES],
            scale: vec![1.0; N_FEATURES],
        }
    }

    /// Statistics from `frame`. Constant columns (a single station's
    /// coordinates, say) are centred but not scaled.
    pub fn fit(frame: &WeatherFrame) -> Result<Self> {
        if frame.is_empty() {
            return Err(Error::invalid("cannot fit a normalizer on an empty frame"));
        }
        let raw = raw_features(frame);
        let n = raw.rows() as f64;
        let mut out = Self::identity();
        for j in 0..N_FEATURES {
            if CYCLIC.contains(&j) {
                continue;
            }
            let mean = (0..raw.rows()).map(|i| raw.get(i, j)).sum::<f64>() / n;
            let var = (0..raw.rows()).map(|i| (raw.get(i, j) - mean).powi(2)).sum::<f64>() / n;
            if var.sqrt() > 1e-9 {
                out.mean[j] = mean;
                out.scale[j] = var.sqrt();
            } else {
                out.mean[j] = raw.get(0, j);
            }
        }
        Ok(out)
    }

    pub fn apply(&self, frame: &WeatherFrame) -> Matrix {
        let mut m = raw_features(frame);
        for i in 0..m.rows() {
            for (j, v) in m.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        m
    }

    pub fn write_into(&self, file: &mut TensorFile) {
        for (name, values) in [("norm.mean", &self.mean), ("norm.scale", &self.scale)] {
            file.tensors.push(NamedTensor {
                name: name.into(),
                shape: vec![values.len()],
                values: values.clone(),
                frozen: true,
            });
        }
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        let get = |name: &str| -> Result<Vec<f64>> {
            let t = file
                .get(name)
                .ok_or_else(|| Error::config(format!("checkpoint is missing {name}")))?;
            if t.values.len() != N_FEATURES {
                return Err(Error::config(format!("{name} has {} entries", t.values.len())));
            }
            Ok(t.values.clone())
        };
        Ok(Self {
            mean: get("norm.mean")?,
            scale: get("norm.scale")?,
        })
    }
}

/// Targets on the hourly grid of `frame`: each observation is assigned to its
/// nearest hour (observations sharing an hour are averaged). Unobserved hours
/// hold NaN and are masked out.
pub fn hourly_targets(frame: &WeatherFrame, series: &FmcSeries) -> Result<(Vec<f64>, LossMask)> {
    let n = frame.len();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for &(t, v) in &series.observations {
        let i = frame
            .nearest_index(t)
            .ok_or_else(|| Error::invalid(format!("{} observation at {t} outside the frame", series.fuel_class)))?;
        sum[i] += v;
        count[i] += 1;
    }
    let targets = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    Ok((targets, LossMask::from_flags(count.iter().map(|&c| c > 0))))
}
