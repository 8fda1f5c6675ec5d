use chrono::{DateTime, Datelike, Duration, Timelike, Utc};

use crate::error::{Error, Result};

/// Dead-fuel size class, named by its nominal time lag in hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FuelClass {
    Fm1,
    Fm10,
    Fm100,
    Fm1000,
}

impl FuelClass {
    pub const ALL: [FuelClass; 4] = [FuelClass::Fm1, FuelClass::Fm10, FuelClass::Fm100, FuelClass::Fm1000];

    pub fn nominal_tau(self) -> f64 {
        match self {
            FuelClass::Fm1 => 1.0,
            FuelClass::Fm10 => 10.0,
            FuelClass::Fm100 => 100.0,
            FuelClass::Fm1000 => 1000.0,
        }
    }

    /// CSV column name (`fm1`, `fm10`, ...).
    pub fn column(self) -> &'static str {
        match self {
            FuelClass::Fm1 => "fm1",
            FuelClass::Fm10 => "fm10",
            FuelClass::Fm100 => "fm100",
            FuelClass::Fm1000 => "fm1000",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FuelClass::Fm1 => "FM1",
            FuelClass::Fm10 => "FM10",
            FuelClass::Fm100 => "FM100",
            FuelClass::Fm1000 => "FM1000",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        FuelClass::ALL
            .into_iter()
            .find(|c| c.column().eq_ignore_ascii_case(s) || c.label().eq_ignore_ascii_case(s))
    }

    /// The light fuels, which are reported both unfiltered and with the
    /// at-most-30% filter.
    pub fn is_fine(self) -> bool {
        matches!(self, FuelClass::Fm1 | FuelClass::Fm10)
    }
}

impl std::fmt::Display for FuelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Hourly weather and site predictors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeatherFrame {
    pub timestamps: Vec<DateTime<Utc>>,
    /// Drying equilibrium moisture, percent.
    pub drying_eq: Vec<f64>,
    /// Wetting equilibrium moisture, percent.
    pub wetting_eq: Vec<f64>,
    /// Downward shortwave flux, W/m^2.
    pub solar: Vec<f64>,
    /// 10 m wind speed, m/s.
    pub wind: Vec<f64>,
    /// Hourly rain accumulation, mm/h.
    pub rain: Vec<f64>,
    pub hour: Vec<f64>,
    pub doy: Vec<f64>,
    pub elevation: Vec<f64>,
    pub lon: Vec<f64>,
    pub lat: Vec<f64>,
}

impl WeatherFrame {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn start(&self) -> Option<DateTime<Utc>> {
        self.timestamps.first().copied()
    }

    pub fn end(&self) -> Option<DateTime<Utc>> {
        self.timestamps.last().copied()
    }

    fn columns(&self) -> [&Vec<f64>; 10] {
        [
            &self.drying_eq,
            &self.wetting_eq,
            &self.solar,
            &self.wind,
            &self.rain,
            &self.hour,
            &self.doy,
            &self.elevation,
            &self.lon,
            &self.lat,
        ]
    }

    fn columns_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.drying_eq,
            &mut self.wetting_eq,
            &mut self.solar,
            &mut self.wind,
            &mut self.rain,
            &mut self.hour,
            &mut self.doy,
            &mut self.elevation,
            &mut self.lon,
            &mut self.lat,
        ]
    }

    pub fn push_row(&mut self, ts: DateTime<Utc>, row: [f64; 10]) {
        self.timestamps.push(ts);
        for (col, v) in self.columns_mut().into_iter().zip(row) {
            col.push(v);
        }
    }

    pub fn row(&self, i: usize) -> [f64; 10] {
        let cols = self.columns();
        std::array::from_fn(|k| cols[k][i])
    }

    /// Rows `start..end` as a new frame.
    pub fn slice(&self, start: usize, end: usize) -> WeatherFrame {
        let mut out = WeatherFrame {
            timestamps: self.timestamps[start..end].to_vec(),
            ..WeatherFrame::default()
        };
        for (dst, src) in out.columns_mut().into_iter().zip(self.columns()) {
            *dst = src[start..end].to_vec();
        }
        out
    }

    /// Appends the rows of `other`, which must start one hour after `self` ends.
    pub fn append(&mut self, other: &WeatherFrame) -> Result<()> {
        if let (Some(end), Some(start)) = (self.end(), other.start()) {
            if start - end != Duration::hours(1) {
                return Err(Error::invalid(format!("cannot append rows starting {start} after {end}")));
            }
        }
        self.timestamps.extend_from_slice(&other.timestamps);
        for (dst, src) in self.columns_mut().into_iter().zip(other.columns()) {
            dst.extend_from_slice(src);
        }
        Ok(())
    }

    /// Row index of the hour nearest to `t` (half hours round up), if that
    /// hour lies within the frame.
    pub fn nearest_index(&self, t: DateTime<Utc>) -> Option<usize> {
        let start = self.start()?;
        let secs = (t - start).num_seconds();
        let idx = (secs as f64 / 3600.0 + 0.5).floor();
        (idx >= 0.0 && (idx as usize) < self.len()).then_some(idx as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for col in self.columns() {
            if col.len() != n {
                return Err(Error::Dimension {
                    what: "weather column".into(),
                    expected: n,
                    got: col.len(),
                });
            }
        }
        for w in self.timestamps.windows(2) {
            if w[1] - w[0] != Duration::hours(1) {
                return Err(Error::invalid(format!(
                    "weather timestamps must advance by one hour ({} -> {})",
                    w[0], w[1]
                )));
            }
        }
        for i in 0..n {
            if self.columns().iter().any(|c| !c[i].is_finite()) {
                return Err(Error::invalid(format!("non-finite weather value at row {i}")));
            }
            if self.rain[i] < 0.0 || self.solar[i] < 0.0 {
                return Err(Error::invalid(format!("negative rain or solar at row {i}")));
            }
            if !(0.0..=23.0).contains(&self.hour[i]) {
                return Err(Error::invalid(format!("hour of day out of range at row {i}")));
            }
        }
        Ok(())
    }
}

/// UTC hour of day and day of year for a timestamp.
pub fn calendar(ts: DateTime<Utc>) -> (f64, f64) {
    (ts.hour() as f64, ts.ordinal() as f64)
}

/// Sparse timestamped fuel-moisture observations for one fuel class.
#[derive(Debug, Clone, PartialEq)]
pub struct FmcSeries {
    pub fuel_class: FuelClass,
    pub observations: Vec<(DateTime<Utc>, f64)>,
}

impl FmcSeries {
    pub fn new(fuel_class: FuelClass) -> Self {
        Self {
            fuel_class,
            observations: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.1).collect()
    }

    /// Keeps only observations whose UTC hour is listed.
    pub fn at_hours(&self, hours: &[u32]) -> FmcSeries {
        FmcSeries {
            fuel_class: self.fuel_class,
            observations: self
                .observations
                .iter()
                .filter(|(t, _)| t.minute() == 0 && hours.contains(&t.hour()))
                .copied()
                .collect(),
        }
    }

    pub fn validate(&self, frame: &WeatherFrame) -> Result<()> {
        for w in self.observations.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(format!(
                    "{} observations not strictly increasing at {}",
                    self.fuel_class, w[1].0
                )));
            }
        }
        if let (Some(first), Some(last)) = (self.observations.first(), self.observations.last()) {
            let (start, end) = (frame.start().unwrap_or(first.0), frame.end().unwrap_or(last.0));
            if first.0 < start || last.0 > end {
                return Err(Error::invalid(format!(
                    "{} observations fall outside the weather span",
                    self.fuel_class
                )));
            }
        }
        if self.observations.iter().any(|o| !(o.1 >= 0.0 && o.1.is_finite())) {
            return Err(Error::invalid(format!("{} has a negative or non-finite value", self.fuel_class)));
        }
        Ok(())
    }
}
