//! In-memory plumbing between datasets, training and evaluation: builds the
//! per-class training sequences and scores models on the test period.

use crate::data::{
    align_for_eval, align_nearest, hourly_targets, split, FmcSeries, FuelClass, HourlyPredictions, Normalizer, Pair,
    SplitSpec, Splits, WeatherFrame,
};
use crate::error::{Error, Result};
use crate::nn::{LstmState, Matrix, RnnParams};
use crate::train::{FitData, LossMask};

/// A split dataset with its training-period normalizer.
#[derive(Debug)]
pub struct Prepared {
    pub splits: Splits,
    pub normalizer: Normalizer,
    /// Training followed by validation weather.
    fit_weather: WeatherFrame,
    fit_inputs: Matrix,
}

impl Prepared {
    pub fn new(frame: &WeatherFrame, series: &[FmcSeries], spec: &SplitSpec) -> Result<Self> {
        let splits = split(frame, series, spec)?;
        let normalizer = Normalizer::fit(&splits.train.weather)?;
        let mut fit_weather = splits.train.weather.clone();
        fit_weather.append(&splits.val.weather)?;
        let fit_inputs = normalizer.apply(&fit_weather);
        Ok(Self {
            splits,
            normalizer,
            fit_weather,
            fit_inputs,
        })
    }

    /// Replaces the normalizer, e.g. with the one stored alongside a
    /// pretrained model.
    pub fn with_normalizer(mut self, normalizer: Normalizer) -> Self {
        self.fit_inputs = normalizer.apply(&self.fit_weather);
        self.normalizer = normalizer;
        self
    }

    pub fn train_len(&self) -> usize {
        self.splits.train.weather.len()
    }

    /// Training and validation sequences for one fuel class. Observations
    /// are placed at their nearest hour.
    pub fn fit_data(&self, class: FuelClass) -> Result<FitData> {
        let mut obs = FmcSeries::new(class);
        for part in [&self.splits.train, &self.splits.val] {
            if let Some(s) = part.observations(class) {
                obs.observations.extend_from_slice(&s.observations);
            }
        }
        let (targets, mask) = hourly_targets(&self.fit_weather, &obs)?;
        let n = targets.len();
        let train_len = self.train_len();
        let train_mask = LossMask::from_flags((0..n).map(|t| t < train_len && mask.is_set(t)));
        let val_mask = LossMask::from_flags((0..n).map(|t| t >= train_len && mask.is_set(t)));
        if train_mask.count() == 0 {
            return Err(Error::invalid(format!("no {class} observations in the training period")));
        }
        if val_mask.count() == 0 {
            return Err(Error::invalid(format!("no {class} observations in the validation period")));
        }
        FitData::new(self.fit_inputs.clone(), targets, train_mask, val_mask, train_len)
    }

    /// Hourly predictions over the full record, from a zero state at its start.
    fn predict_all(&self, params: &RnnParams) -> Result<(Vec<f64>, &crate::data::Partition)> {
        let test = self.splits.test();
        let mut weather = self.fit_weather.clone();
        weather.append(&test.weather)?;
        let (pred, _) = params.forward(&self.normalizer.apply(&weather), &LstmState::zeros(params.hidden_size()))?;
        Ok((pred, test))
    }

    /// Hourly predictions over the test period. The network runs through the
    /// training and validation periods first so its state is warmed up.
    pub fn test_predictions(&self, params: &RnnParams) -> Result<HourlyPredictions> {
        let (pred, test) = self.predict_all(params)?;
        Ok(HourlyPredictions {
            start: test.weather.start().expect("non-empty partition"),
            values: pred[test.offset..].to_vec(),
        })
    }

    /// Test observations paired with predictions interpolated to their times.
    pub fn test_pairs(&self, params: &RnnParams, class: FuelClass) -> Result<Vec<Pair>> {
        let (pred, test) = self.predict_all(params)?;
        let preds = HourlyPredictions {
            start: test.weather.start().expect("non-empty partition"),
            values: pred[test.offset..].to_vec(),
        };
        let obs = test.observations(class).map(|s| s.observations.as_slice()).unwrap_or(&[]);
        if obs.is_empty() {
            return Err(Error::Evaluation(format!("no {class} observations in the test period")));
        }
        align_for_eval(&preds, obs)
    }

    /// Training observations paired with the prediction at their nearest hour.
    pub fn train_pairs(&self, params: &RnnParams, class: FuelClass) -> Result<Vec<Pair>> {
        let n = self.train_len();
        let (pred, _) = params.forward(
            &self.fit_inputs.slice_rows(0, n),
            &LstmState::zeros(params.hidden_size()),
        )?;
        let preds = HourlyPredictions {
            start: self.splits.train.weather.start().expect("non-empty partition"),
            values: pred,
        };
        let obs = self.splits.train.observations(class).map(|s| s.observations.as_slice()).unwrap_or(&[]);
        align_nearest(&preds, obs)
    }
}
