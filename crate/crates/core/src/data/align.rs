use chrono::{DateTime, Utc};

use crate::error::{Error, Result};

/// Hourly model output starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyPredictions {
    pub start: DateTime<Utc>,
    pub values: Vec<f64>,
}

impl HourlyPredictions {
    fn position(&self, t: DateTime<Utc>) -> Result<f64> {
        let pos = (t - self.start).num_milliseconds() as f64 / 3_600_000.0;
        let last = self.values.len().saturating_sub(1) as f64;
        if self.values.is_empty() || pos < 0.0 || pos > last {
            return Err(Error::Alignment(format!(
                "observation at {t} outside prediction span starting {}",
                self.start
            )));
        }
        Ok(pos)
    }

    /// Linear interpolation between the two bracketing hours.
    pub fn at(&self, t: DateTime<Utc>) -> Result<f64> {
        let pos = self.position(t)?;
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        if w == 0.0 {
            return Ok(self.values[i]);
        }
        Ok((1.0 - w) * self.values[i] + w * self.values[i + 1])
    }

    /// Value at the nearest hour (half hours round up).
    pub fn nearest(&self, t: DateTime<Utc>) -> Result<f64> {
        let pos = self.position(t)?;
        let i = ((pos + 0.5).floor() as usize).min(self.values.len() - 1);
        Ok(self.values[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub pred: f64,
    pub obs: f64,
}

/// Pairs each observation with the prediction interpolated to its exact time.
pub fn align_for_eval(preds: &HourlyPredictions, obs: &[(DateTime<Utc>, f64)]) -> Result<Vec<Pair>> {
    obs.iter()
        .map(|&(t, v)| Ok(Pair { pred: preds.at(t)?, obs: v }))
        .collect()
}

/// Pairs each observation with the prediction at its nearest hour.
pub fn align_nearest(preds: &HourlyPredictions, obs: &[(DateTime<Utc>, f64)]) -> Result<Vec<Pair>> {
    obs.iter()
        .map(|&(t, v)| Ok(Pair { pred: preds.nearest(t)?, obs: v }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(1997, 5, 1, 13, 0, 0).unwrap()
    }

    #[test]
    fn midpoint_and_exact_hour() {
        let p = HourlyPredictions {
            start: t0(),
            values: vec![10.0, 14.0],
        };
        let pairs = align_for_eval(&p, &[(t0() + Duration::minutes(30), 3.0), (t0(), 1.0)]).unwrap();
        assert_eq!(pairs[0].pred, 12.0);
        assert_eq!(pairs[1].pred, 10.0);
        assert_eq!(pairs[0].obs, 3.0);
    }

    #[test]
    fn hourly_points_match_indexing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..40.0)).collect();
        let p = HourlyPredictions { start: t0(), values: values.clone() };
        let obs: Vec<_> = (0..200).step_by(7).map(|h| (t0() + Duration::hours(h as i64), 0.0)).collect();
        let pairs = align_for_eval(&p, &obs).unwrap();
        for (pair, h) in pairs.iter().zip((0..200).step_by(7)) {
            assert_eq!(pair.pred, values[h]);
        }
    }

    #[test]
    fn interpolation_is_bracketed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..50).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let p = HourlyPredictions { start: t0(), values: values.clone() };
        for _ in 0..500 {
            let m = rng.gen_range(0..49 * 60);
            let v = p.at(t0() + Duration::minutes(m)).unwrap();
            let i = (m / 60) as usize;
            let (lo, hi) = (values[i].min(values[i + 1]), values[i].max(values[i + 1]));
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn outside_span_is_error() {
        let p = HourlyPredictions {
            start: t0(),
            values: vec![1.0, 2.0],
        };
        assert!(matches!(
            align_for_eval(&p, &[(t0() + Duration::minutes(61), 0.0)]),
            Err(Error::Alignment(_))
        ));
        assert!(align_for_eval(&p, &[(t0() - Duration::minutes(1), 0.0)]).is_err());
        assert_eq!(p.nearest(t0() + Duration::minutes(30)).unwrap(), 2.0);
    }
}
