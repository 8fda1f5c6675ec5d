use crate::data::Pair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub r2: f64,
    /// Mean of `pred - obs`.
    pub bias: f64,
    pub rmse: f64,
    pub n: usize,
}

/// R², bias and RMSE of paired predictions. When the observations have no
/// variance R² is undefined and the error carries the other two metrics.
pub fn metrics(pairs: &[Pair]) -> Result<MetricSet> {
    if pairs.is_empty() {
        return Err(Error::Evaluation("no prediction/observation pairs".into()));
    }
    if pairs.iter().any(|p| !(p.pred.is_finite() && p.obs.is_finite())) {
        return Err(Error::Evaluation("non-finite prediction or observation".into()));
    }
    let n = pairs.len();
    let nf = n as f64;
    let bias = pairs.iter().map(|p| p.pred - p.obs).sum::<f64>() / nf;
    let ss_res: f64 = pairs.iter().map(|p| (p.pred - p.obs).powi(2)).sum();
    let rmse = (ss_res / nf).sqrt();
    let obs_mean = pairs.iter().map(|p| p.obs).sum::<f64>() / nf;
    let ss_tot: f64 = pairs.iter().map(|p| (p.obs - obs_mean).powi(2)).sum();
    if n < 2 || ss_tot == 0.0 {
        return Err(Error::UndefinedR2 { bias, rmse, n });
    }
    Ok(MetricSet {
        r2: 1.0 - ss_res / ss_tot,
        bias,
        rmse,
        n,
    })
}

/// Pairs whose observation is at most `threshold`.
pub fn filter_le(pairs: &[Pair], threshold: f64) -> Vec<Pair> {
    pairs.iter().copied().filter(|p| p.obs <= threshold).collect()
}
