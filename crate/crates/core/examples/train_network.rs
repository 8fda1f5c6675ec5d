//! Trains a small LSTM on synthetic 10-hour fuel moisture with truncated BPTT.

use fmc_timewarp::data::{synth_dataset, FuelClass, SplitSpec, SynthDatasetSpec, N_FEATURES};
use fmc_timewarp::eval::metrics;
use fmc_timewarp::experiment::Prepared;
use fmc_timewarp::nn::Architecture;
use fmc_timewarp::train::{fit, fresh_params, TrainConfig};

fn main() -> fmc_timewarp::Result<()> {
    let (frame, series) = synth_dataset(&SynthDatasetSpec {
        n_days: 120,
        ..SynthDatasetSpec::default()
    })?;
    let prep = Prepared::new(&frame, &series, &SplitSpec::by_rows(&frame, 72 * 24)?)?;
    let data = prep.fit_data(FuelClass::Fm10)?;
    let arch = Architecture::new(N_FEATURES).with_hidden(16);
    let config = TrainConfig {
        max_epochs: 40,
        ..TrainConfig::default()
    };
    let start = fresh_params(&arch, config.seed, &data);
    println!("{} parameters", start.param_count());

    let run = fit(start, &data, &config)?;
    for e in run.history.iter().step_by(5) {
        println!("epoch {:>3}  train {:.3}  val {:.3}", e.epoch, e.train_loss, e.val_loss);
    }
    println!("best epoch {} (val mse {:.3})", run.best_epoch, run.best_val_loss());
    let m = metrics(&prep.test_pairs(&run.trained, FuelClass::Fm10)?)?;
    println!("test: r2 {:.3}  bias {:.3}  rmse {:.3}  n {}", m.r2, m.bias, m.rmse, m.n);
    Ok(())
}
