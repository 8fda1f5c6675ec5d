//! A hand-built one-unit LSTM that reproduces the time-lag recursion, then
//! re-timed to a faster fuel by editing only its gate biases.

use fmc_timewarp::nn::{construct_timelag_lstm, set_constructed_retention, LstmState, Matrix};
use fmc_timewarp::timelag::{simulate, TimeLagParams};

fn main() -> fmc_timewarp::Result<()> {
    let eq: Vec<f64> = (0..72).map(|h| 12.0 + 6.0 * (h as f64 * 0.26).sin()).collect();
    let inputs = Matrix::from_vec(eq.len(), 1, eq.clone());

    let mut net = construct_timelag_lstm(10.0, 0, 1)?;
    let (y, _) = net.forward(&inputs, &LstmState::zeros(1))?;
    let oracle = simulate(0.0, &eq, TimeLagParams::new(10.0)?)?;
    let err = y.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("tau=10 network vs recursion: max error {err:.2e}");

    let a = TimeLagParams::new(10.0)?.retention();
    set_constructed_retention(&mut net.lstm, a.powi(10));
    let (y, _) = net.forward(&inputs, &LstmState::zeros(1))?;
    let oracle = simulate(0.0, &eq, TimeLagParams::new(1.0)?)?;
    let err = y.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("rebiased network vs tau=1 recursion: max error {err:.2e}");
    Ok(())
}
