use crate::error::{Error, Result};

/// Per-timestep observation weights: 1 where a target observation exists, 0 elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMask(Vec<f64>);

impl LossMask {
    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        Self(flags.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Accepts only 0/1 weights.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("loss mask weights must be 0 or 1"));
        }
        Ok(Self(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn is_set(&self, t: usize) -> bool {
        self.0[t] != 0.0
    }

    pub fn set(&mut self, t: usize, on: bool) {
        self.0[t] = if on { 1.0 } else { 0.0 };
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&w| w != 0.0).count()
    }

    pub fn count_in(&self, start: usize, end: usize) -> usize {
        self.0[start..end].iter().filter(|&&w| w != 0.0).count()
    }
}

/// Mean squared error over masked positions. Unmasked observations are never
/// read, so they may hold NaN.
pub fn masked_mse(pred: &[f64], obs: &[f64], mask: &LossMask) -> Result<f64> {
    if pred.len() != obs.len() || pred.len() != mask.len() {
        return Err(Error::Dimension {
            what: "masked mse inputs".into(),
            expected: mask.len(),
            got: pred.len().min(obs.len()),
        });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in 0..pred.len() {
        if mask.is_set(t) {
            let e = pred[t] - obs[t];
            sum += e * e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::DegenerateMask);
    }
    Ok(sum / n as f64)
}
