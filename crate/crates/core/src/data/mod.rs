//! Datasets: CSV ingestion, synthetic generation, temporal splits,
//! observation alignment and predictor construction.

mod align;
mod csv_io;
mod features;
mod frame;
mod split;
mod synth;

pub use align::{align_for_eval, align_nearest, HourlyPredictions, Pair};
pub use csv_io::{load_csv, read_csv, save_csv, write_csv, GapPolicy, LoadOptions, CSV_HEADER, MAX_HOLD_GAP_HOURS};
pub use features::{hourly_targets, raw_features, Normalizer, DRYING_FEATURE, FEATURE_NAMES, N_FEATURES};
pub use frame::{calendar, FmcSeries, FuelClass, WeatherFrame};
pub use split::{split, Partition, SplitSpec, Splits};
pub use synth::{
    synth_dataset, synth_targets, synth_weather, SynthDatasetSpec, SynthProfile, DEFAULT_SENSOR_CAP, DRYING_RANGE, MAX_RAIN, WETTING_RANGE,
    WIND_RANGE,
};
