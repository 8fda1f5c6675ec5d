//! First-order time-lag moisture dynamics on an hourly grid.
//!
//! The continuous model `dm/dt = (X - m) / tau` integrated over one hour with
//! piecewise-constant equilibrium `X` gives the recursion
//! `m_t = a m_{t-1} + (1 - a) X_t` with retention `a = exp(-1/tau)`.
//! Warping time by `t -> gamma t` raises `a` to the power `gamma`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Characteristic lag `tau` (hours) and the matching retention coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeLagParams {
    tau: f64,
    a: f64,
}

impl TimeLagParams {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("time lag must be positive, got {tau}")));
        }
        Ok(Self {
            tau,
            a: (-1.0 / tau).exp(),
        })
    }

    /// Builds the pair from a retention coefficient in (0, 1).
    pub fn from_retention(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid(format!("retention must lie in (0,1), got {a}")));
        }
        Ok(Self { tau: -1.0 / a.ln(), a })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn retention(&self) -> f64 {
        self.a
    }
}

/// Time-warp factor `gamma > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpFactor(f64);

impl WarpFactor {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(format!("warp factor must be positive, got {gamma}")));
        }
        Ok(Self(gamma))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// One hourly update. The result is a convex combination of `m_prev` and `x`.
pub fn step(m_prev: f64, x: f64, params: TimeLagParams) -> Result<f64> {
    if !m_prev.is_finite() || !x.is_finite() {
        return Err(Error::invalid("time-lag step needs finite state and input"));
    }
    Ok(step_unchecked(m_prev, x, params.a))
}

#[inline]
fn step_unchecked(m_prev: f64, x: f64, a: f64) -> f64 {
    a * m_prev + (1.0 - a) * x
}

/// Runs the recursion from `m0`; element `t` is the state after consuming `x_series[t]`.
pub fn simulate(m0: f64, x_series: &[f64], params: TimeLagParams) -> Result<Vec<f64>> {
    if x_series.is_empty() {
        return Err(Error::invalid("cannot simulate an empty input series"));
    }
    if !m0.is_finite() || x_series.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("time-lag simulation needs finite inputs"));
    }
    let mut m = m0;
    Ok(x_series
        .iter()
        .map(|&x| {
            m = step_unchecked(m, x, params.a);
            m
        })
        .collect())
}

/// Time-warps the dynamics: `a' = a^gamma`, equivalently `tau' = tau / gamma`.
pub fn warp(params: TimeLagParams, gamma: WarpFactor) -> TimeLagParams {
    TimeLagParams {
        tau: params.tau / gamma.0,
        a: params.a.powf(gamma.0),
    }
}

/// Drying and wetting equilibrium moisture content, percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPair {
    pub drying: f64,
    pub wetting: f64,
}

static EQUILIBRIUM_SWAPS: AtomicU64 = AtomicU64::new(0);

/// Number of times [`equilibria`] had to swap an inverted drying/wetting pair.
pub fn equilibrium_swap_count() -> u64 {
    EQUILIBRIUM_SWAPS.load(Ordering::Relaxed)
}

// Drying/wetting equilibrium fits in the Van Wagner & Pickett form used by the
// WRF-SFIRE fuel moisture model; `H` in percent, temperature offset in kelvin.
const DRY_A: f64 = 0.924;
const DRY_B: f64 = 0.679;
const DRY_C: f64 = 0.000499;
const WET_A: f64 = 0.618;
const WET_B: f64 = 0.753;
const WET_C: f64 = 0.000454;
const EXP_H: f64 = 0.1;
const TEMP_COEF: f64 = 0.18;
const TEMP_REF_K: f64 = 21.1 + 273.15;
const TEMP_H_DECAY: f64 = 0.115;

/// Equilibrium moisture from air temperature (K) and relative humidity (%).
pub fn equilibria(temp_k: f64, rh: f64) -> Result<EquilibriumPair> {
    if !(0.0..=100.0).contains(&rh) {
        return Err(Error::invalid(format!("relative humidity {rh} outside [0,100]")));
    }
    if !(temp_k.is_finite() && temp_k > 0.0) {
        return Err(Error::invalid(format!("temperature {temp_k} K is not positive")));
    }
    let temp_term = TEMP_COEF * (TEMP_REF_K - temp_k) * (1.0 - (-TEMP_H_DECAY * rh).exp());
    let drying = DRY_A * rh.powf(DRY_B) + DRY_C * (EXP_H * rh).exp() + temp_term;
    let wetting = WET_A * rh.powf(WET_B) + WET_C * (EXP_H * rh).exp() + temp_term;
    if wetting > drying {
        let n = EQUILIBRIUM_SWAPS.fetch_add(1, Ordering::Relaxed) + 1;
        log::warn!("wetting equilibrium above drying at T={temp_k} K, RH={rh}% (swap #{n})");
        return Ok(EquilibriumPair {
            drying: wetting,
            wetting: drying,
        });
    }
    Ok(EquilibriumPair { drying, wetting })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(tau: f64) -> TimeLagParams {
        TimeLagParams::new(tau).unwrap()
    }

    #[test]
    fn fixed_point() {
        assert_eq!(step(10.0, 10.0, p(3.0)).unwrap(), 10.0);
        for tau in [1.0, 10.0, 100.0, 1000.0] {
            assert_eq!(step(5.0, 5.0, p(tau)).unwrap(), 5.0);
        }
    }

    #[test]
    fn step_matches_hand_value() {
        let v = step(10.0, 20.0, p(10.0)).unwrap();
        assert!((v - 10.951_625_819_640_405).abs() < 1e-12);
    }

    #[test]
    fn step_rejects_nan() {
        assert!(step(f64::NAN, 1.0, p(1.0)).is_err());
        assert!(step(1.0, f64::INFINITY, p(1.0)).is_err());
    }

    #[test]
    fn bad_tau_rejected() {
        assert!(TimeLagParams::new(0.0).is_err());
        assert!(TimeLagParams::new(-1.0).is_err());
        assert!(TimeLagParams::from_retention(1.0).is_err());
    }

    #[test]
    fn constant_forcing_closed_form() {
        let out = simulate(0.0, &[100.0; 10], p(10.0)).unwrap();
        assert_eq!(out.len(), 10);
        assert!((out[9] - 63.212_055_882_855_786).abs() < 1e-10);
        // Same thing read as the lag definition: gap closes by 1 - e^-1 after tau steps.
        assert!((out[9] / 100.0 - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn constant_series_stays_constant() {
        let out = simulate(7.5, &[7.5; 50], p(4.0)).unwrap();
        assert!(out.iter().all(|&m| m == 7.5));
    }

    #[test]
    fn alternating_input_bounded() {
        let xs: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 0.0 } else { 100.0 }).collect();
        let out = simulate(50.0, &xs, p(2.0)).unwrap();
        assert!(out.iter().all(|m| (0.0..=100.0).contains(m)));
    }

    #[test]
    fn empty_series_rejected() {
        assert!(simulate(0.0, &[], p(1.0)).is_err());
    }

    #[test]
    fn warp_identity_and_value() {
        let base = p(10.0);
        let same = warp(base, WarpFactor::new(1.0).unwrap());
        assert_eq!(same, base);
        let w = warp(base, WarpFactor::new(10.0).unwrap());
        assert!((w.tau() - 1.0).abs() < 1e-15);
        assert!((w.retention() - 0.367_879_441_171_442_33).abs() < 1e-15);
    }

    #[test]
    fn warp_composes() {
        let base = p(37.0);
        let g1 = WarpFactor::new(0.3).unwrap();
        let g2 = WarpFactor::new(7.0).unwrap();
        let two = warp(warp(base, g1), g2);
        let one = warp(base, WarpFactor::new(2.1).unwrap());
        assert!((two.retention() - one.retention()).abs() < 1e-14);
        assert!((two.tau() - one.tau()).abs() < 1e-12);
    }

    #[test]
    fn equilibria_dry_air() {
        let e = equilibria(300.0, 0.0).unwrap();
        assert!(e.drying.abs() < 1e-3 && e.wetting.abs() < 1e-3);
        assert!(e.drying >= e.wetting);
    }

    #[test]
    fn equilibria_reference_point() {
        // Independent scalar evaluation of the formula at RH=50%, 25 C.
        let e = equilibria(298.15, 50.0).unwrap();
        assert!((e.drying - 12.534_798_983_075_14).abs() < 1e-12);
        assert!((e.wetting - 11.125_057_059_268_608).abs() < 1e-12);
    }

    #[test]
    fn equilibria_ordered_on_grid() {
        for i in 0..100 {
            let rh = i as f64 * 100.0 / 99.0;
            for j in 0..100 {
                let t = 240.0 + j as f64 * 80.0 / 99.0;
                let e = equilibria(t, rh).unwrap();
                assert!(e.wetting <= e.drying, "rh={rh} t={t}");
                assert!(e.drying.is_finite() && e.wetting.is_finite());
            }
        }
    }

    #[test]
    fn equilibria_rejects_bad_rh() {
        assert!(equilibria(290.0, 100.5).is_err());
        assert!(equilibria(290.0, -1.0).is_err());
        assert!(equilibria(-3.0, 20.0).is_err());
    }
}
