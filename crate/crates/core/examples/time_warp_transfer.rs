//! Pretrains on 10-hour fuel, then adapts to 1-hour and 100-hour fuels by a
//! grid search over forget and input gate bias shifts.

use fmc_timewarp::data::{synth_dataset, FuelClass, SplitSpec, SynthDatasetSpec, SynthProfile, N_FEATURES};
use fmc_timewarp::eval::metrics;
use fmc_timewarp::experiment::Prepared;
use fmc_timewarp::nn::Architecture;
use fmc_timewarp::train::{fit, fresh_params, TrainConfig};
use fmc_timewarp::transfer::{run_method, GridSpec, TransferMethod};

fn main() -> fmc_timewarp::Result<()> {
    let (frame, series) = synth_dataset(&SynthDatasetSpec {
        n_days: 180,
        profile: SynthProfile {
            rain_rate: 0.0,
            ..SynthProfile::default()
        },
        fm10_cap: None,
        ..SynthDatasetSpec::default()
    })?;
    let prep = Prepared::new(&frame, &series, &SplitSpec::by_rows(&frame, frame.len() * 6 / 10)?)?;
    let arch = Architecture::new(N_FEATURES).with_hidden(16);
    let config = TrainConfig::default();
    let source = prep.fit_data(FuelClass::Fm10)?;
    let pretrained = fit(fresh_params(&arch, config.seed, &source), &source, &config)?.trained;

    for class in [FuelClass::Fm1, FuelClass::Fm100] {
        let data = prep.fit_data(class)?;
        let zero = metrics(&prep.test_pairs(&pretrained, class)?)?;
        let out = run_method(
            TransferMethod::TimeWarp,
            Some(&pretrained),
            &data,
            &arch,
            &config,
            &GridSpec::default(),
            None,
        )?;
        let warped = metrics(&prep.test_pairs(&out.params, class)?)?;
        let shift = out.shift.expect("time warp selects a shift");
        println!(
            "{}: shift (alpha_f {:+.3}, alpha_i {:+.3}), {} entries changed, test rmse {:.3} -> {:.3}",
            class.label(),
            shift.alpha_f,
            shift.alpha_i,
            out.params.count_differences(&pretrained),
            zero.rmse,
            warped.rmse
        );
    }
    Ok(())
}
