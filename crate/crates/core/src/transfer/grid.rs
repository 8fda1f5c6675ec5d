use std::io::Write;
use std::ops::Add;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nn::{Gate, LstmState, RnnParams};
use crate::train::{masked_mse, FitData, LossMask};

/// Additive shifts of the forget-gate and input-gate biases, applied to every
/// hidden unit alike.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiasShift {
    pub alpha_f: f64,
    pub alpha_i: f64,
}

impl BiasShift {
    pub const ZERO: BiasShift = BiasShift { alpha_f: 0.0, alpha_i: 0.0 };

    pub fn new(alpha_f: f64, alpha_i: f64) -> Self {
        Self { alpha_f, alpha_i }
    }

    pub fn magnitude(&self) -> f64 {
        self.alpha_f.abs() + self.alpha_i.abs()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha_f.is_finite() && self.alpha_i.is_finite()
    }
}

impl Add for BiasShift {
    type Output = BiasShift;

    fn add(self, rhs: BiasShift) -> BiasShift {
        BiasShift::new(self.alpha_f + rhs.alpha_f, self.alpha_i + rhs.alpha_i)
    }
}

/// Returns a copy of `params` with `b_f += alpha_f` and `b_i += alpha_i`.
/// A zero component leaves its gate untouched bit for bit.
pub fn apply_shift(params: &RnnParams, shift: BiasShift) -> RnnParams {
    let mut out = params.clone();
    for (gate, alpha) in [(Gate::Forget, shift.alpha_f), (Gate::Input, shift.alpha_i)] {
        if alpha != 0.0 {
            out.lstm.bias_mut(gate).iter_mut().for_each(|b| *b += alpha);
        }
    }
    out
}

/// Square grid of `n_per_axis` evenly spaced values on `[lo, hi]`, endpoints
/// included, for each of the two shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -5.0,
            hi: 5.0,
            n_per_axis: 25,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.n_per_axis < 2 {
            return Err(Error::config(format!(
                "grid needs finite lo < hi and at least 2 points per axis, got [{}, {}] x {}",
                self.lo, self.hi, self.n_per_axis
            )));
        }
        Ok(())
    }

    pub fn axis(&self) -> Vec<f64> {
        let last = (self.n_per_axis - 1) as f64;
        (0..self.n_per_axis)
            .map(|k| match k {
                0 => self.lo,
                k if k == self.n_per_axis - 1 => self.hi,
                k => self.lo + (self.hi - self.lo) * k as f64 / last,
            })
            .collect()
    }

    /// All grid pairs (`alpha_f` major) followed by an exact `(0, 0)`.
    pub fn candidates(&self) -> Vec<BiasShift> {
        let axis = self.axis();
        let mut out: Vec<BiasShift> = axis
            .iter()
            .flat_map(|&f| axis.iter().map(move |&i| BiasShift::new(f, i)))
            .collect();
        out.push(BiasShift::ZERO);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub shift: BiasShift,
    /// NaN when the candidate produced non-finite output.
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: BiasShift,
    pub best_rmse: f64,
    /// Objective of the unshifted model.
    pub zero_rmse: f64,
    pub surface: Vec<SurfacePoint>,
}

/// RMSE of `params` over the training observations of `data`, running only
/// the training rows from a zero state.
pub fn train_rmse(params: &RnnParams, data: &FitData) -> Result<f64> {
    let n = data.train_len;
    let inputs = data.inputs.slice_rows(0, n);
    let (pred, _) = params.forward(&inputs, &LstmState::zeros(params.hidden_size()))?;
    let mask = LossMask::from_flags((0..n).map(|t| data.train_mask.is_set(t)));
    let mse = masked_mse(&pred, &data.targets[..n], &mask)?;
    if !mse.is_finite() {
        return Err(Error::NumericOverflow("non-finite training objective".into()));
    }
    Ok(mse.sqrt())
}

/// Exhaustive search for the shift minimizing training RMSE. Candidates are
/// scored in parallel and reduced in a fixed order; ties go to the smaller
/// `|alpha_f| + |alpha_i|`, then the smaller `alpha_f`.
pub fn grid_search(params: &RnnParams, data: &FitData, grid: &GridSpec) -> Result<SearchResult> {
    grid.validate()?;
    params.validate()?;
    if data.train_mask.count() == 0 {
        return Err(Error::DegenerateMask);
    }
    let surface: Vec<SurfacePoint> = grid
        .candidates()
        .into_par_iter()
        .map(|shift| SurfacePoint {
            shift,
            rmse: train_rmse(&apply_shift(params, shift), data).unwrap_or(f64::NAN),
        })
        .collect();
    let better = |a: &SurfacePoint, b: &SurfacePoint| {
        a.rmse
            .total_cmp(&b.rmse)
            .then(a.shift.magnitude().total_cmp(&b.shift.magnitude()))
            .then(a.shift.alpha_f.total_cmp(&b.shift.alpha_f))
            .is_lt()
    };
    let mut best: Option<&SurfacePoint> = None;
    for p in surface.iter().filter(|p| p.rmse.is_finite()) {
        if best.is_none_or(|b| better(p, b)) {
            best = Some(p);
        }
    }
    let best = *best.ok_or(Error::SearchFailed)?;
    let zero_rmse = surface.last().expect("zero candidate").rmse;
    Ok(SearchResult {
        best: best.shift,
        best_rmse: best.rmse,
        zero_rmse,
        surface,
    })
}

pub fn write_surface_csv(path: &Path, surface: &[SurfacePoint]) -> Result<()> {
    let mut s = String::from("alpha_f,alpha_i,rmse\n");
    for p in surface {
        s.push_str(&format!("{},{},{}\n", p.shift.alpha_f, p.shift.alpha_i, p.rmse));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(s.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{construct_timelag_lstm, Architecture, Matrix};
    use crate::timelag::{simulate, TimeLagParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn net(hidden: usize) -> RnnParams {
        Architecture::new(3).with_hidden(hidden).init(&mut ChaCha8Rng::seed_from_u64(1))
    }

    #[test]
    fn default_grid_arithmetic() {
        let g = GridSpec::default();
        let axis = g.axis();
        assert_eq!(axis.len(), 25);
        assert_eq!((axis[0], axis[24], axis[12]), (-5.0, 5.0, 0.0));
        assert!((axis[1] - axis[0] - 10.0 / 24.0).abs() < 1e-12);
        let c = g.candidates();
        assert_eq!(c.len(), 626);
        assert_eq!(c[625], BiasShift::ZERO);
        assert!(GridSpec { n_per_axis: 1, ..g }.validate().is_err());
        assert!(GridSpec { lo: 1.0, hi: 1.0, ..g }.validate().is_err());
    }

    #[test]
    fn shift_touches_exactly_gate_biases() {
        let p = net(64);
        assert_eq!(apply_shift(&p, BiasShift::ZERO), p);
        let s = apply_shift(&p, BiasShift::new(0.5, -1.25));
        assert_eq!(s.count_differences(&p), 128);
        assert_eq!(apply_shift(&p, BiasShift::new(0.0, 2.0)).count_differences(&p), 64);
    }

    #[test]
    fn shifts_compose_additively() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = net(5);
        for _ in 0..50 {
            let s1 = BiasShift::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let s2 = BiasShift::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let a = apply_shift(&apply_shift(&p, s1), s2);
            let b = apply_shift(&p, s1 + s2);
            for (x, y) in a.tensors().iter().zip(b.tensors()) {
                assert!(x.iter().zip(y).all(|(u, v)| (u - v).abs() < 1e-12));
            }
        }
    }

    fn series_data(inputs: Matrix, targets: Vec<f64>) -> FitData {
        let n = targets.len();
        let train_len = n * 3 / 4;
        FitData::new(
            inputs,
            targets,
            LossMask::from_flags((0..n).map(|t| t < train_len && t % 3 == 0)),
            LossMask::from_flags((0..n).map(|t| t >= train_len && t % 3 == 0)),
            train_len,
        )
        .unwrap()
    }

    fn drive(n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..n)
            .map(|t| 15.0 + 8.0 * (t as f64 * std::f64::consts::TAU / 24.0).sin() + rng.gen_range(-2.0..2.0))
            .collect()
    }

    #[test]
    fn own_targets_select_zero_shift() {
        let p = net(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 120;
        let inputs = Matrix::from_vec(n, 3, (0..3 * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let (y, _) = p.forward(&inputs, &LstmState::zeros(4)).unwrap();
        let r = grid_search(&p, &series_data(inputs, y), &GridSpec::default()).unwrap();
        assert_eq!(r.best, BiasShift::ZERO);
        assert_eq!(r.best_rmse, 0.0);
        assert_eq!(r.surface.len(), 626);
    }

    #[test]
    fn constructed_lstm_warps_toward_faster_dynamics() {
        let n = 400;
        let x = drive(n);
        let inputs = Matrix::from_vec(n, 1, x.clone());
        let fast = simulate(0.0, &x, TimeLagParams::new(1.0).unwrap()).unwrap();
        let p = construct_timelag_lstm(10.0, 0, 1).unwrap();
        let r = grid_search(&p, &series_data(inputs, fast), &GridSpec::default()).unwrap();
        assert!(r.best.alpha_f < 0.0, "{:?}", r.best);
        assert!(r.best_rmse < r.zero_rmse);
        let d = r.surface.iter().filter(|s| s.rmse.is_finite()).map(|s| s.rmse).fold(f64::INFINITY, f64::min);
        assert_eq!(d, r.best_rmse);
    }

    #[test]
    fn surface_is_deterministic_and_written() {
        let p = net(3);
        let n = 60;
        let inputs = Matrix::from_vec(n, 3, (0..3 * n).map(|k| (k as f64 * 0.37).sin()).collect());
        let data = series_data(inputs, (0..n).map(|t| t as f64 * 0.1).collect());
        let g = GridSpec { n_per_axis: 5, ..GridSpec::default() };
        let a = grid_search(&p, &data, &g).unwrap();
        assert_eq!(a, grid_search(&p, &data, &g).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("surface.csv");
        write_surface_csv(&path, &a.surface).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 27);
        assert!(text.starts_with("alpha_f,alpha_i,rmse\n-5,-5,"));
    }
}
