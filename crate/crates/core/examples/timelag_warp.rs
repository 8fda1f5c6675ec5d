//! Simulates a 10-hour fuel and shows that warping time by gamma = 10 gives
//! the 1-hour fuel.

use fmc_timewarp::timelag::{equilibria, simulate, warp, TimeLagParams, WarpFactor};

fn main() -> fmc_timewarp::Result<()> {
    let drying: Vec<f64> = (0..48)
        .map(|h| {
            let t = 288.0 + 8.0 * (2.0 * std::f64::consts::PI * (h as f64 - 9.0) / 24.0).sin();
            let rh = 55.0 - 25.0 * (2.0 * std::f64::consts::PI * (h as f64 - 9.0) / 24.0).sin();
            equilibria(t, rh).map(|e| e.drying)
        })
        .collect::<Result<_, _>>()?;

    let fm10 = TimeLagParams::new(10.0)?;
    let fm1 = warp(fm10, WarpFactor::new(10.0)?);
    println!("a(10h) = {:.6}, a(10h)^10 = {:.6}, tau = {:.3}", fm10.retention(), fm1.retention(), fm1.tau());

    let slow = simulate(15.0, &drying, fm10)?;
    let fast = simulate(15.0, &drying, fm1)?;
    let direct = simulate(15.0, &drying, TimeLagParams::new(1.0)?)?;
    println!("hour  eq     fm10   warped  fm1");
    for h in (0..48).step_by(4) {
        println!("{h:>4} {:6.2} {:6.2} {:6.2} {:6.2}", drying[h], slow[h], fast[h], direct[h]);
    }
    Ok(())
}
