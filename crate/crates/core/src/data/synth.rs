//! Synthetic weather and fuel-moisture generators.
//!
//! The weather is a diurnal cycle plus a seasonal trend plus AR(1) noise on
//! temperature and relative humidity, from which the equilibria are derived.
//! Rain arrives as storms with a fixed hourly start probability.

use std::f64::consts::TAU;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::frame::{calendar, FmcSeries, FuelClass, WeatherFrame};
use crate::error::{Error, Result};
use crate::seed::{rng_for, Substream};
use crate::timelag::{equilibria, simulate, TimeLagParams};

pub const DRYING_RANGE: (f64, f64) = (1.29, 60.56);
pub const WETTING_RANGE: (f64, f64) = (0.61, 56.10);
pub const WIND_RANGE: (f64, f64) = (0.4, 8.61);
pub const MAX_RAIN: f64 = 42.17;
/// Moisture the recursion is driven toward during heavy rain.
pub const WET_SATURATION: f64 = 60.0;
/// Rain rate (mm/h) at which the wet drive saturates.
pub const RAIN_FOR_SATURATION: f64 = 2.0;
pub const DEFAULT_SENSOR_CAP: f64 = 27.0;

const STORM_START_PROB: f64 = 0.01;
const STORM_MEAN_HOURS: f64 = 3.0;

/// Site and climate settings for [`synth_weather`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthProfile {
    pub start: DateTime<Utc>,
    /// Long-run mean rain rate, mm/h. Zero disables rain.
    pub rain_rate: f64,
    pub elevation: f64,
    pub lon: f64,
    pub lat: f64,
    pub temp_mean_k: f64,
    pub temp_seasonal_k: f64,
    pub temp_diurnal_k: f64,
    /// Relative humidity, percent.
    pub rh_mean: f64,
    pub rh_diurnal: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        Self {
            start: Utc.with_ymd_and_hms(1996, 3, 26, 23, 0, 0).unwrap(),
            rain_rate: 0.08,
            elevation: 774.0,
            lon: -100.26,
            lat: 36.6,
            temp_mean_k: 289.0,
            temp_seasonal_k: 10.0,
            temp_diurnal_k: 7.0,
            rh_mean: 58.0,
            rh_diurnal: 22.0,
        }
    }
}

impl SynthProfile {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.rain_rate,
            self.elevation,
            self.lon,
            self.lat,
            self.temp_mean_k,
            self.temp_seasonal_k,
            self.temp_diurnal_k,
            self.rh_mean,
            self.rh_diurnal,
        ];
        if finite.iter().any(|v| !v.is_finite()) || self.rain_rate < 0.0 {
            return Err(Error::invalid("synthetic profile values must be finite with rain_rate >= 0"));
        }
        if self.temp_mean_k <= 0.0 || !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::invalid("synthetic profile has an impossible temperature or latitude"));
        }
        Ok(())
    }
}

/// Hourly weather for `n_days` days. A pure function of `(seed, n_days, profile)`.
pub fn synth_weather(seed: u64, n_days: usize, profile: &SynthProfile) -> Result<WeatherFrame> {
    if n_days == 0 {
        return Err(Error::invalid("n_days must be at least 1"));
    }
    profile.validate()?;
    let mut rng = rng_for(seed, Substream::Synth);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let storm_fraction = STORM_START_PROB / (STORM_START_PROB + 1.0 / STORM_MEAN_HOURS);
    let intensity = (profile.rain_rate > 0.0)
        .then(|| Exp::new(storm_fraction / profile.rain_rate).expect("positive rate"));

    let (mut temp_noise, mut rh_noise, mut wind_noise) = (0.0, 0.0, 0.0);
    let mut raining = false;
    let mut frame = WeatherFrame::default();
    for h in 0..n_days * 24 {
        let t = profile.start + Duration::hours(h as i64);
        let (hour, doy) = calendar(t);
        let local_hour = (hour + profile.lon / 15.0).rem_euclid(24.0);
        // Peaks mid-afternoon local time.
        let diurnal = (TAU * (local_hour - 15.0) / 24.0).cos();
        let seasonal = (TAU * (doy - 200.0) / 365.25).cos();

        raining = if raining {
            rng.gen::<f64>() >= 1.0 / STORM_MEAN_HOURS
        } else {
            rng.gen::<f64>() < STORM_START_PROB
        };
        let rain = match (&intensity, raining) {
            (Some(dist), true) => dist.sample(&mut rng).min(MAX_RAIN),
            _ => 0.0,
        };

        temp_noise = 0.95 * temp_noise + 0.8 * unit.sample(&mut rng);
        rh_noise = 0.97 * rh_noise + 2.5 * unit.sample(&mut rng);
        wind_noise = 0.9 * wind_noise + 0.6 * unit.sample(&mut rng);

        let temp = profile.temp_mean_k + profile.temp_seasonal_k * seasonal + profile.temp_diurnal_k * diurnal + temp_noise;
        let mut rh = profile.rh_mean - profile.rh_diurnal * diurnal + rh_noise;
        if rain > 0.0 {
            rh = rh.max(95.0);
        }
        let eq = equilibria(temp, rh.clamp(5.0, 100.0))?;
        let drying = eq.drying.clamp(DRYING_RANGE.0, DRYING_RANGE.1);
        let wetting = eq.wetting.clamp(WETTING_RANGE.0, WETTING_RANGE.1);

        let cloud = if rain > 0.0 { 0.3 } else { 1.0 };
        let solar = 1000.0 * cloud * solar_elevation_sin(profile.lat, doy, local_hour).max(0.0);
        let wind = (3.0 + 1.2 * diurnal + wind_noise).clamp(WIND_RANGE.0, WIND_RANGE.1);

        frame.push_row(
            t,
            [drying, wetting, solar, wind, rain, hour, doy, profile.elevation, profile.lon, profile.lat],
        );
    }
    Ok(frame)
}

fn solar_elevation_sin(lat_deg: f64, doy: f64, local_hour: f64) -> f64 {
    let decl = (23.44f64).to_radians() * (TAU * (284.0 + doy) / 365.0).sin();
    let lat = lat_deg.to_radians();
    let hour_angle = (TAU / 24.0) * (local_hour - 12.0);
    lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos()
}

/// Dense hourly fuel moisture from the time-lag recursion driven by the
/// drying equilibrium. During rain the drive switches to
/// `max(drying, 60% * min(1, rain / 2 mm/h))`. Values above `sensor_cap`
/// are clipped, mimicking a saturating sensor.
pub fn synth_targets(frame: &WeatherFrame, tau: f64, sensor_cap: Option<f64>) -> Result<FmcSeries> {
    frame.validate()?;
    if frame.is_empty() {
        return Err(Error::invalid("cannot generate targets for an empty frame"));
    }
    let params = TimeLagParams::new(tau)?;
    let drive: Vec<f64> = frame
        .drying_eq
        .iter()
        .zip(&frame.rain)
        .map(|(&d, &r)| {
            if r > 0.0 {
                d.max(WET_SATURATION * (r / RAIN_FOR_SATURATION).min(1.0))
            } else {
                d
            }
        })
        .collect();
    let mut m = simulate(drive[0], &drive, params)?;
    if let Some(cap) = sensor_cap {
        m.iter_mut().for_each(|v| *v = v.min(cap));
    }
    let class = FuelClass::ALL
        .into_iter()
        .min_by(|a, b| (a.nominal_tau().ln() - tau.ln()).abs().total_cmp(&(b.nominal_tau().ln() - tau.ln()).abs()))
        .expect("four classes");
    Ok(FmcSeries {
        fuel_class: class,
        observations: frame.timestamps.iter().copied().zip(m).collect(),
    })
}

/// Settings for a complete synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDatasetSpec {
    pub seed: u64,
    pub n_days: usize,
    pub profile: SynthProfile,
    /// Saturation value applied to the hourly FM10 series.
    pub fm10_cap: Option<f64>,
    /// UTC hours at which FM1, FM100 and FM1000 are observed.
    pub sparse_hours: Vec<u32>,
}

impl Default for SynthDatasetSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_days: 644,
            profile: SynthProfile::default(),
            fm10_cap: Some(DEFAULT_SENSOR_CAP),
            sparse_hours: vec![14, 21],
        }
    }
}

/// Weather plus one series per fuel class (in [`FuelClass::ALL`] order):
/// hourly FM10 and FM1/FM100/FM1000 at `sparse_hours` only.
pub fn synth_dataset(spec: &SynthDatasetSpec) -> Result<(WeatherFrame, Vec<FmcSeries>)> {
    let frame = synth_weather(spec.seed, spec.n_days, &spec.profile)?;
    let series = FuelClass::ALL
        .into_iter()
        .map(|class| {
            if class == FuelClass::Fm10 {
                synth_targets(&frame, class.nominal_tau(), spec.fm10_cap)
            } else {
                Ok(synth_targets(&frame, class.nominal_tau(), None)?.at_hours(&spec.sparse_hours))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((frame, series))
}
