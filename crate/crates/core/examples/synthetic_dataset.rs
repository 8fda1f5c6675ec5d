//! Generates a synthetic station record, writes it as CSV and splits it in time.

use fmc_timewarp::data::{load_csv, save_csv, synth_dataset, LoadOptions, SplitSpec, SynthDatasetSpec};
use fmc_timewarp::experiment::Prepared;

fn main() -> fmc_timewarp::Result<()> {
    let spec = SynthDatasetSpec {
        n_days: 90,
        ..SynthDatasetSpec::default()
    };
    let (frame, series) = synth_dataset(&spec)?;
    let path = std::env::temp_dir().join("fmcwarp_synthetic.csv");
    save_csv(&path, &frame, &series)?;
    let (frame, series) = load_csv(&path, LoadOptions::default())?;
    println!("{} hourly rows from {} to {}", frame.len(), frame.timestamps[0], frame.timestamps[frame.len() - 1]);
    for s in &series {
        println!("  {}: {} observations", s.fuel_class, s.len());
    }

    let split = SplitSpec::by_rows(&frame, 60 * 24)?;
    let prep = Prepared::new(&frame, &series, &split)?;
    println!("rows per partition (train, val, test): {:?}", prep.splits.row_counts());
    println!("wrote {}", path.display());
    Ok(())
}
