use super::dense::{Activation, DenseParams};
use super::lstm::{Gate, GateActivation, LstmParams};
use super::matrix::Matrix;
use super::network::RnnParams;
use crate::error::{Error, Result};
use crate::timelag::TimeLagParams;

/// Builds a single-unit network whose cell state follows the time-lag
/// recursion `c_t = a c_{t-1} + (1 - a) X_t` exactly, where `X_t` is input
/// column `eq_input_index`.
///
/// All nonlinearities are the identity ([`GateActivation::Linear`]) and every
/// gate weight is zero, so the forget and input gates equal their biases
/// `b_f = a` and `b_i = 1 - a`. The candidate copies the equilibrium input, the
/// output gate is fixed at one, and the dense stack passes `h_t = c_t` through.
pub fn construct_timelag_lstm(tau: f64, eq_input_index: usize, input_size: usize) -> Result<RnnParams> {
    let lag = TimeLagParams::new(tau)?;
    if eq_input_index >= input_size {
        return Err(Error::invalid(format!(
            "equilibrium column {eq_input_index} out of range for {input_size} inputs"
        )));
    }
    let mut lstm = LstmParams::zeros(input_size, 1);
    lstm.activation = GateActivation::Linear;
    lstm.w_x[Gate::Cell as usize].set(0, eq_input_index, 1.0);
    set_constructed_retention(&mut lstm, lag.retention());
    lstm.bias_mut(Gate::Output)[0] = 1.0;

    let pass = || DenseParams {
        weights: Matrix::from_vec(1, 1, vec![1.0]),
        bias: vec![0.0],
        activation: Activation::Identity,
    };
    RnnParams::new(lstm, vec![pass(), pass(), pass()])
}

/// Overwrites the forget/input biases of a linear-activation cell with
/// `a` and `1 - a`.
pub fn set_constructed_retention(lstm: &mut LstmParams, a: f64) {
    lstm.bias_mut(Gate::Forget).fill(a);
    lstm.bias_mut(Gate::Input).fill(1.0 - a);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LstmState;
    use crate::timelag;

    #[test]
    fn fixed_point_output() {
        let p = construct_timelag_lstm(10.0, 0, 2).unwrap();
        let x = Matrix::from_vec(50, 2, [4.0, -1.0].repeat(50));
        let start = LstmState {
            c: vec![4.0],
            h: vec![4.0],
        };
        let (y, _) = p.forward(&x, &start).unwrap();
        assert!(y.iter().all(|&v| (v - 4.0).abs() < 1e-14));
    }

    #[test]
    fn matches_recursion() {
        let p = construct_timelag_lstm(3.0, 1, 3).unwrap();
        let eq: Vec<f64> = (0..100).map(|t| ((t as f64) * 0.37).sin() * 10.0 + 15.0).collect();
        let x = Matrix::from_vec(100, 3, eq.iter().flat_map(|&e| [0.5, e, -2.0]).collect());
        let (y, _) = p.forward(&x, &LstmState::zeros(1)).unwrap();
        let oracle = timelag::simulate(0.0, &eq, TimeLagParams::new(3.0).unwrap()).unwrap();
        for (a, b) in y.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_bad_index() {
        assert!(construct_timelag_lstm(10.0, 3, 3).is_err());
        assert!(construct_timelag_lstm(0.0, 0, 3).is_err());
    }
}
