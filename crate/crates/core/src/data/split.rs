use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::{DateTime, Utc};

use super::frame::{FmcSeries, WeatherFrame};
use crate::error::{Error, Result};

/// Inclusive end instants of the training and validation periods; the test
/// period runs from the next hour to the end of the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_end: DateTime<Utc>,
    pub val_end: DateTime<Utc>,
}

impl SplitSpec {
    /// One year of hourly rows, endpoints inclusive.
    pub const DEFAULT_TRAIN_ROWS: usize = 8761;

    /// Training gets the first `train_rows` rows; the rest is halved, with the
    /// extra row (if any) going to validation.
    pub fn by_rows(frame: &WeatherFrame, train_rows: usize) -> Result<Self> {
        let n = frame.len();
        if train_rows == 0 || n < train_rows + 2 {
            return Err(Error::Split(format!(
                "{n} rows cannot hold {train_rows} training rows plus validation and test"
            )));
        }
        let rest = n - train_rows;
        let val_rows = rest.div_ceil(2);
        Ok(Self {
            train_end: frame.timestamps[train_rows - 1],
            val_end: frame.timestamps[train_rows + val_rows - 1],
        })
    }

    pub fn default_for(frame: &WeatherFrame) -> Result<Self> {
        Self::by_rows(frame, Self::DEFAULT_TRAIN_ROWS)
    }
}

/// Weather rows and observations for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub weather: WeatherFrame,
    pub series: Vec<FmcSeries>,
    /// Index of the first row in the unsplit frame.
    pub offset: usize,
}

impl Partition {
    pub fn observations(&self, class: super::FuelClass) -> Option<&FmcSeries> {
        self.series.iter().find(|s| s.fuel_class == class)
    }
}

/// The three temporal partitions. The test partition sits behind an accessor
/// that counts reads, so pipelines can prove they never touched it.
#[derive(Debug)]
pub struct Splits {
    pub train: Partition,
    pub val: Partition,
    test: Partition,
    test_reads: AtomicUsize,
}

impl Splits {
    pub fn test(&self) -> &Partition {
        self.test_reads.fetch_add(1, Ordering::Relaxed);
        &self.test
    }

    pub fn test_reads(&self) -> usize {
        self.test_reads.load(Ordering::Relaxed)
    }

    /// Row counts of the three partitions.
    pub fn row_counts(&self) -> [usize; 3] {
        [self.train.weather.len(), self.val.weather.len(), self.test.weather.len()]
    }
}

/// Splits a frame and its observations in time. Each observation goes to the
/// partition that owns its nearest hour.
pub fn split(frame: &WeatherFrame, series: &[FmcSeries], spec: &SplitSpec) -> Result<Splits> {
    let (start, end) = match (frame.start(), frame.end()) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(Error::Split("empty weather frame".into())),
    };
    if !(start < spec.train_end && spec.train_end < spec.val_end && spec.val_end < end) {
        return Err(Error::Split(format!(
            "boundaries {} / {} must fall strictly inside {start} .. {end}",
            spec.train_end, spec.val_end
        )));
    }
    let idx_of = |t: DateTime<Utc>| {
        frame
            .timestamps
            .binary_search(&t)
            .map_err(|_| Error::Split(format!("boundary {t} is not an hour of the frame")))
    };
    let a = idx_of(spec.train_end)? + 1;
    let b = idx_of(spec.val_end)? + 1;
    let bounds = [(0, a), (a, b), (b, frame.len())];
    let mut parts: Vec<Partition> = bounds
        .iter()
        .map(|&(s, e)| Partition {
            weather: frame.slice(s, e),
            series: series.iter().map(|s| FmcSeries::new(s.fuel_class)).collect(),
            offset: s,
        })
        .collect();
    for (k, s) in series.iter().enumerate() {
        for &(t, v) in &s.observations {
            let i = frame
                .nearest_index(t)
                .ok_or_else(|| Error::Split(format!("observation at {t} lies outside the data span")))?;
            let p = bounds.iter().position(|&(s, e)| i >= s && i < e).expect("bounds tile the frame");
            parts[p].series[k].observations.push((t, v));
        }
    }
    if parts.iter().any(|p| p.weather.is_empty()) {
        return Err(Error::Split("a partition is empty".into()));
    }
    let test = parts.pop().expect("three partitions");
    let val = parts.pop().expect("three partitions");
    let train = parts.pop().expect("three partitions");
    Ok(Splits {
        train,
        val,
        test,
        test_reads: AtomicUsize::new(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FuelClass;
    use chrono::{Duration, TimeZone};

    fn frame(hours: usize) -> WeatherFrame {
        let t0 = Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap();
        let mut f = WeatherFrame::default();
        for h in 0..hours {
            let t = t0 + Duration::hours(h as i64);
            let (hour, doy) = crate::data::frame::calendar(t);
            f.push_row(t, [10.0, 9.0, 0.0, 1.0, 0.0, hour, doy, 774.0, -100.0, 36.0]);
        }
        f
    }

    #[test]
    fn ten_day_arithmetic() {
        let f = frame(240);
        let t0 = f.timestamps[0];
        let spec = SplitSpec {
            train_end: t0 + Duration::hours(143),
            val_end: t0 + Duration::hours(191),
        };
        let s = split(&f, &[], &spec).unwrap();
        assert_eq!(s.row_counts(), [144, 48, 48]);
        assert_eq!(s.test_reads(), 0);
        assert_eq!(s.test().offset, 192);
        assert_eq!(s.test_reads(), 1);
    }

    #[test]
    fn default_rule_halves_remainder() {
        let f = frame(8761 + 101);
        let spec = SplitSpec::default_for(&f).unwrap();
        let s = split(&f, &[], &spec).unwrap();
        assert_eq!(s.row_counts(), [8761, 51, 50]);
    }

    #[test]
    fn observations_are_disjoint_and_complete() {
        let f = frame(100);
        let mut obs = FmcSeries::new(FuelClass::Fm1);
        for h in (0..99).step_by(3) {
            obs.observations.push((f.timestamps[h] + Duration::minutes(20), h as f64));
        }
        let spec = SplitSpec::by_rows(&f, 50).unwrap();
        let s = split(&f, std::slice::from_ref(&obs), &spec).unwrap();
        let total = s.train.series[0].len() + s.val.series[0].len() + s.test().series[0].len();
        assert_eq!(total, obs.len());
        let last_train = s.train.series[0].observations.last().unwrap().0;
        assert!(last_train <= spec.train_end + Duration::minutes(30));
    }

    #[test]
    fn bad_boundaries() {
        let f = frame(20);
        let spec = SplitSpec {
            train_end: f.timestamps[10],
            val_end: f.timestamps[5],
        };
        assert!(matches!(split(&f, &[], &spec), Err(Error::Split(_))));
        assert!(SplitSpec::by_rows(&f, 19).is_err());
    }
}
