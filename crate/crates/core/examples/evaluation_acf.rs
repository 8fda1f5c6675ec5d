//! Accuracy metrics, report aggregation and correlograms.

use fmc_timewarp::data::{FuelClass, Pair};
use fmc_timewarp::eval::{aggregate, correlogram, metrics, render_table, Filter};
use fmc_timewarp::timelag::{simulate, TimeLagParams};

fn main() -> fmc_timewarp::Result<()> {
    let m = metrics(&[
        Pair { pred: 1.0, obs: 0.0 },
        Pair { pred: 1.0, obs: 0.0 },
        Pair { pred: 1.0, obs: 4.0 },
    ])?;
    println!("r2 {:.5}  bias {:.5}  rmse {:.5}", m.r2, m.bias, m.rmse);

    let runs: Vec<_> = [0.9, 1.1, 1.3]
        .iter()
        .map(|&scale| {
            let pairs: Vec<Pair> = (0..50)
                .map(|i| {
                    let obs = 10.0 + (i as f64 * 0.4).sin() * 5.0;
                    Pair { pred: obs * scale, obs }
                })
                .collect();
            metrics(&pairs)
        })
        .collect::<Result<_, _>>()?;
    print!("{}", render_table(&[aggregate("example", FuelClass::Fm10, Filter::All, &runs)?]));

    let eq: Vec<f64> = (0..24 * 60)
        .map(|h| 15.0 + 8.0 * (2.0 * std::f64::consts::PI * h as f64 / 24.0).sin())
        .collect();
    for tau in [1.0, 100.0] {
        let m = simulate(15.0, &eq, TimeLagParams::new(tau)?)?;
        let c = correlogram(&m, 48)?;
        println!(
            "tau {tau:>5}: acf[12] {:+.3}  acf[24] {:+.3}  first negative lag {:?}",
            c.acf[12],
            c.acf[24],
            c.first_negative_lag()
        );
    }
    Ok(())
}
