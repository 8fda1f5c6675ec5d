//! The single-file dataset format: one hourly row per line with weather
//! predictors and optional FMC observations.
//!
//! ```text
//! timestamp,drying_eq,wetting_eq,solar,wind,rain,hour,doy,elevation,lon,lat,fm1,fm10,fm100,fm1000
//! 1996-03-26T23:00:00Z,12.1,10.9,0,2.4,0,23,86,774,-100.26,36.6,,14.2,,
//! ```
//!
//! Timestamps are RFC 3339 in UTC. Empty FMC cells mean "not observed".

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, Utc};

use super::frame::{calendar, FmcSeries, FuelClass, WeatherFrame};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 15] = [
    "timestamp",
    "drying_eq",
    "wetting_eq",
    "solar",
    "wind",
    "rain",
    "hour",
    "doy",
    "elevation",
    "lon",
    "lat",
    "fm1",
    "fm10",
    "fm100",
    "fm1000",
];

/// What to do with missing hours in the weather record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    #[default]
    Reject,
    /// Forward-fill gaps of at most three hours by repeating the last row.
    Hold,
}

pub const MAX_HOLD_GAP_HOURS: i64 = 3;

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub gaps: GapPolicy,
}

pub fn load_csv(path: &Path, opts: LoadOptions) -> Result<(WeatherFrame, Vec<FmcSeries>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, opts)
}

pub fn read_csv<R: Read>(reader: R, opts: LoadOptions) -> Result<(WeatherFrame, Vec<FmcSeries>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.len() != CSV_HEADER.len() || header.iter().zip(CSV_HEADER).any(|(a, b)| a.trim() != b) {
        let unknown = header
            .iter()
            .find(|h| !CSV_HEADER.contains(&h.trim()))
            .map(|h| format!("unknown column {h:?}"))
            .unwrap_or_else(|| "header does not match the dataset schema".into());
        return Err(parse_err(1, unknown));
    }

    let mut frame = WeatherFrame::default();
    let mut series: Vec<FmcSeries> = FuelClass::ALL.into_iter().map(FmcSeries::new).collect();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let ts = DateTime::parse_from_rfc3339(rec[0].trim())
            .map_err(|e| parse_err(line, format!("bad timestamp {:?}: {e}", &rec[0])))?
            .with_timezone(&Utc);
        let mut row = [0.0; 10];
        for (j, slot) in row.iter_mut().enumerate() {
            let cell = rec[j + 1].trim();
            *slot = cell
                .parse()
                .map_err(|_| parse_err(line, format!("bad {} value {cell:?}", CSV_HEADER[j + 1])))?;
        }
        if let Some(prev) = frame.end() {
            let step = ts - prev;
            if step <= Duration::zero() {
                return Err(parse_err(line, format!("timestamp {ts} does not increase")));
            }
            if step > Duration::hours(1) {
                let missing = step.num_hours() - 1;
                if opts.gaps == GapPolicy::Hold && missing <= MAX_HOLD_GAP_HOURS && step.num_minutes() % 60 == 0 {
                    let last = frame.row(frame.len() - 1);
                    for h in 1..=missing {
                        let t = prev + Duration::hours(h);
                        let mut filled = last;
                        let (hour, doy) = calendar(t);
                        filled[5] = hour;
                        filled[6] = doy;
                        frame.push_row(t, filled);
                    }
                } else {
                    return Err(parse_err(line, format!("gap of {missing} hour(s) before {ts}")));
                }
            } else if step != Duration::hours(1) {
                return Err(parse_err(line, format!("timestamp {ts} is not on the hourly grid")));
            }
        }
        frame.push_row(ts, row);
        for (s, col) in series.iter_mut().zip(11..15) {
            let cell = rec[col].trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("bad {} value {cell:?}", CSV_HEADER[col])))?;
            s.observations.push((ts, v));
        }
    }
    frame.validate().map_err(|e| parse_err(0, e.to_string()))?;
    for s in &series {
        s.validate(&frame).map_err(|e| parse_err(0, e.to_string()))?;
    }
    Ok((frame, series))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Writes the frame and any on-the-hour observations in the dataset format.
pub fn write_csv<W: Write>(writer: W, frame: &WeatherFrame, series: &[FmcSeries]) -> Result<()> {
    let mut cells: Vec<Vec<Option<f64>>> = vec![vec![None; frame.len()]; 4];
    for s in series {
        let col = FuelClass::ALL.iter().position(|&c| c == s.fuel_class).unwrap_or(0);
        for &(t, v) in &s.observations {
            let i = frame
                .nearest_index(t)
                .filter(|&i| frame.timestamps[i] == t)
                .ok_or_else(|| Error::invalid(format!("{} observation at {t} is not on a frame hour", s.fuel_class)))?;
            cells[col][i] = Some(v);
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let werr = |e: csv::Error| Error::invalid(format!("csv write failed: {e}"));
    w.write_record(CSV_HEADER).map_err(werr)?;
    for i in 0..frame.len() {
        let mut rec: Vec<String> = Vec::with_capacity(15);
        rec.push(frame.timestamps[i].format("%Y-%m-%dT%H:%M:%SZ").to_string());
        rec.extend(frame.row(i).iter().map(|v| v.to_string()));
        for col in &cells {
            rec.push(col[i].map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec).map_err(werr)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("csv flush failed: {e}")))?;
    Ok(())
}

pub fn save_csv(path: &Path, frame: &WeatherFrame, series: &[FmcSeries]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), frame, series)
}
