//! Backpropagation through time over one truncated segment.
//!
//! The gradient path is cut at the segment's initial state: the state is an
//! input to the segment, not a differentiable quantity.

use super::loss::LossMask;
use crate::error::{Error, Result};
use crate::nn::{GateActivation, LstmState, Matrix, RnnParams, DENSE_LAYERS};

/// Gradients for one segment, in the same tensor layout as the parameters.
#[derive(Debug, Clone)]
pub struct SegmentGradient {
    pub grads: RnnParams,
    /// Masked MSE of the segment.
    pub loss: f64,
    pub observations: usize,
    /// State after the last step, for carrying into the next segment.
    pub final_state: LstmState,
}

struct Tape {
    dense_widths: [usize; DENSE_LAYERS],
    // Per step: gates [f|i|g|o], c_prev, c, h_prev, dense outputs.
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    c: Vec<f64>,
    h_prev: Vec<f64>,
    h: Vec<f64>,
    dense: Vec<f64>,
    y: Vec<f64>,
}

impl Tape {
    fn new(params: &RnnParams, steps: usize) -> Self {
        let hidden = params.hidden_size();
        let dense_widths = [
            params.dense[0].output_size(),
            params.dense[1].output_size(),
            params.dense[2].output_size(),
        ];
        let dw: usize = dense_widths.iter().sum();
        Self {
            dense_widths,
            gates: vec![0.0; steps * 4 * hidden],
            c_prev: vec![0.0; steps * hidden],
            c: vec![0.0; steps * hidden],
            h_prev: vec![0.0; steps * hidden],
            h: vec![0.0; steps * hidden],
            dense: vec![0.0; steps * dw],
            y: vec![0.0; steps],
        }
    }

    fn dense_at(&self, t: usize) -> [&[f64]; DENSE_LAYERS] {
        let dw: usize = self.dense_widths.iter().sum();
        let row = &self.dense[t * dw..(t + 1) * dw];
        let (a, rest) = row.split_at(self.dense_widths[0]);
        let (b, c) = rest.split_at(self.dense_widths[1]);
        [a, b, c]
    }
}

/// Computes the masked-MSE loss of a segment starting from `initial` and its
/// gradient with respect to every parameter. Frozen tensors get zero gradient.
pub fn backward(
    params: &RnnParams,
    initial: &LstmState,
    inputs: &Matrix,
    obs: &[f64],
    mask: &LossMask,
) -> Result<SegmentGradient> {
    let steps = inputs.rows();
    if steps == 0 {
        return Err(Error::invalid("backward needs a non-empty segment"));
    }
    if obs.len() != steps || mask.len() != steps {
        return Err(Error::Dimension {
            what: "segment targets".into(),
            expected: steps,
            got: obs.len().min(mask.len()),
        });
    }
    params.check_io(inputs, initial)?;
    let n_obs = mask.count();
    if n_obs == 0 {
        return Err(Error::DegenerateMask);
    }

    let hs = params.hidden_size();
    let mut tape = Tape::new(params, steps);
    let dw: usize = tape.dense_widths.iter().sum();

    // Forward, recording everything the backward sweep needs.
    let mut c_prev = initial.c.clone();
    let mut h_prev = initial.h.clone();
    let mut loss = 0.0;
    for t in 0..steps {
        let gates = &mut tape.gates[t * 4 * hs..(t + 1) * 4 * hs];
        let c = &mut tape.c[t * hs..(t + 1) * hs];
        let h = &mut tape.h[t * hs..(t + 1) * hs];
        params.lstm.step_into(&c_prev, &h_prev, inputs.row(t), gates, c, h);
        tape.c_prev[t * hs..(t + 1) * hs].copy_from_slice(&c_prev);
        tape.h_prev[t * hs..(t + 1) * hs].copy_from_slice(&h_prev);
        c_prev.copy_from_slice(c);
        h_prev.copy_from_slice(h);

        let row = &mut tape.dense[t * dw..(t + 1) * dw];
        let (a0, rest) = row.split_at_mut(tape.dense_widths[0]);
        let (a1, a2) = rest.split_at_mut(tape.dense_widths[1]);
        params.dense[0].forward_into(h, a0);
        params.dense[1].forward_into(a0, a1);
        params.dense[2].forward_into(a1, a2);
        let y = a2[0];
        if !y.is_finite() {
            return Err(Error::NumericOverflow(format!("non-finite prediction at step {t}")));
        }
        tape.y[t] = y;
        if mask.is_set(t) {
            let e = y - obs[t];
            loss += e * e;
        }
    }
    let scale = 1.0 / n_obs as f64;
    loss *= scale;
    if !loss.is_finite() {
        return Err(Error::NumericOverflow("non-finite segment loss".into()));
    }
    let final_state = LstmState { c: c_prev, h: h_prev };

    let mut grads = params.zeros_like();
    let mut dh_next = vec![0.0; hs];
    let mut dc_next = vec![0.0; hs];
    let mut dh = vec![0.0; hs];
    let mut dz = vec![0.0; 4 * hs];
    let mut da0 = vec![0.0; tape.dense_widths[0]];
    let mut da1 = vec![0.0; tape.dense_widths[1]];
    let linear = params.lstm.activation == GateActivation::Linear;

    for t in (0..steps).rev() {
        dh.copy_from_slice(&dh_next);
        if mask.is_set(t) {
            let dy = 2.0 * (tape.y[t] - obs[t]) * scale;
            let [a0, a1, a2] = tape.dense_at(t);
            let h_t = &tape.h[t * hs..(t + 1) * hs];

            let dz2 = dy * params.dense[2].activation.grad_from_output(a2[0]);
            grads.dense[2].weights.outer_acc(&[dz2], a1);
            grads.dense[2].bias[0] += dz2;

            da1.fill(0.0);
            params.dense[2].weights.matvec_t_acc(&[dz2], &mut da1);
            let act1 = params.dense[1].activation;
            for (d, &a) in da1.iter_mut().zip(a1) {
                *d *= act1.grad_from_output(a);
            }
            grads.dense[1].weights.outer_acc(&da1, a0);
            for (b, d) in grads.dense[1].bias.iter_mut().zip(&da1) {
                *b += d;
            }

            da0.fill(0.0);
            params.dense[1].weights.matvec_t_acc(&da1, &mut da0);
            let act0 = params.dense[0].activation;
            for (d, &a) in da0.iter_mut().zip(a0) {
                *d *= act0.grad_from_output(a);
            }
            grads.dense[0].weights.outer_acc(&da0, h_t);
            for (b, d) in grads.dense[0].bias.iter_mut().zip(&da0) {
                *b += d;
            }
            params.dense[0].weights.matvec_t_acc(&da0, &mut dh);
        }

        let gates = &tape.gates[t * 4 * hs..(t + 1) * 4 * hs];
        let c = &tape.c[t * hs..(t + 1) * hs];
        let c_prev = &tape.c_prev[t * hs..(t + 1) * hs];
        let h_prev = &tape.h_prev[t * hs..(t + 1) * hs];
        let (f, rest) = gates.split_at(hs);
        let (i, rest) = rest.split_at(hs);
        let (g, o) = rest.split_at(hs);
        let (dzf, rest) = dz.split_at_mut(hs);
        let (dzi, rest) = rest.split_at_mut(hs);
        let (dzg, dzo) = rest.split_at_mut(hs);
        for k in 0..hs {
            let (d_o, dc) = if linear {
                (dh[k] * c[k], dc_next[k] + dh[k] * o[k])
            } else {
                let tc = c[k].tanh();
                (dh[k] * tc, dc_next[k] + dh[k] * o[k] * (1.0 - tc * tc))
            };
            let df = dc * c_prev[k];
            let di = dc * g[k];
            let dg = dc * i[k];
            dc_next[k] = dc * f[k];
            if linear {
                dzf[k] = df;
                dzi[k] = di;
                dzg[k] = dg;
                dzo[k] = d_o;
            } else {
                dzf[k] = df * f[k] * (1.0 - f[k]);
                dzi[k] = di * i[k] * (1.0 - i[k]);
                dzg[k] = dg * (1.0 - g[k] * g[k]);
                dzo[k] = d_o * o[k] * (1.0 - o[k]);
            }
        }
        dh_next.fill(0.0);
        let x = inputs.row(t);
        for gi in 0..4 {
            let dzg = &dz[gi * hs..(gi + 1) * hs];
            grads.lstm.w_x[gi].outer_acc(dzg, x);
            grads.lstm.w_h[gi].outer_acc(dzg, h_prev);
            for (b, d) in grads.lstm.b[gi].iter_mut().zip(dzg) {
                *b += d;
            }
            params.lstm.w_h[gi].matvec_t_acc(dzg, &mut dh_next);
        }
    }

    for (tensor, &frozen) in grads.tensors_mut().into_iter().zip(params.frozen()) {
        if frozen {
            tensor.fill(0.0);
        } else if tensor.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("non-finite gradient".into()));
        }
    }

    Ok(SegmentGradient {
        grads,
        loss,
        observations: n_obs,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, TensorRole};
    use crate::train::loss::masked_mse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (RnnParams, Matrix, Vec<f64>, LossMask) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Architecture {
            input_size: 3,
            hidden_size: 2,
            dense_sizes: [4, 3],
        }
        .init(&mut rng);
        // Moderate gate biases keep every gate responsive; nonzero dense
        // biases keep relu inputs away from the kink at 0.
        for b in p.lstm.b.iter_mut() {
            b.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
        }
        for d in &mut p.dense {
            d.bias.iter_mut().for_each(|b| *b = rng.gen_range(0.05..0.3));
        }
        let x = Matrix::from_vec(10, 3, (0..30).map(|_| rng.gen_range(-1.5..1.5)).collect());
        let obs: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mask = LossMask::from_flags((0..10).map(|t| t % 3 != 1));
        (p, x, obs, mask)
    }

    fn loss_of(p: &RnnParams, x: &Matrix, obs: &[f64], mask: &LossMask) -> f64 {
        let (y, _) = p.forward(x, &LstmState::zeros(p.hidden_size())).unwrap();
        masked_mse(&y, obs, mask).unwrap()
    }

    #[test]
    fn loss_and_state_agree_with_forward() {
        let (p, x, obs, mask) = setup(1);
        let s0 = LstmState::zeros(2);
        let g = backward(&p, &s0, &x, &obs, &mask).unwrap();
        let (_, end) = p.forward(&x, &s0).unwrap();
        assert_eq!(g.final_state, end);
        assert!((g.loss - loss_of(&p, &x, &obs, &mask)).abs() < 1e-14);
    }

    #[test]
    fn zero_loss_gives_zero_gradient() {
        let (p, x, _, _) = setup(2);
        let (y, _) = p.forward(&x, &LstmState::zeros(2)).unwrap();
        let mut mask = LossMask::zeros(10);
        mask.set(6, true);
        let g = backward(&p, &LstmState::zeros(2), &x, &y, &mask).unwrap();
        assert!(g.grads.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn fully_frozen_gives_zero_gradient() {
        let (mut p, x, obs, mask) = setup(3);
        p.freeze_all();
        let g = backward(&p, &LstmState::zeros(2), &x, &obs, &mask).unwrap();
        assert!(g.grads.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn partial_freeze_zeroes_only_frozen() {
        let (mut p, x, obs, mask) = setup(4);
        p.set_frozen_where(TensorRole::is_dense);
        let g = backward(&p, &LstmState::zeros(2), &x, &obs, &mask).unwrap();
        for ((info, t), frozen) in p.tensor_info().iter().zip(g.grads.tensors()).zip(p.frozen()) {
            if *frozen {
                assert!(t.iter().all(|&v| v == 0.0), "{}", info.name);
            }
        }
        assert!(g.grads.lstm.w_x[0].as_slice().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn central_differences_agree() {
        let (p, x, obs, mask) = setup(5);
        let g = backward(&p, &LstmState::zeros(2), &x, &obs, &mask).unwrap();
        let analytic = g.grads.tensors().iter().map(|t| t.to_vec()).collect::<Vec<_>>();
        let eps = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (ti, vals) in analytic.iter().enumerate() {
            for _ in 0..2 {
                let k = rng.gen_range(0..vals.len());
                let mut plus = p.clone();
                plus.tensors_mut()[ti][k] += eps;
                let mut minus = p.clone();
                minus.tensors_mut()[ti][k] -= eps;
                let num = (loss_of(&plus, &x, &obs, &mask) - loss_of(&minus, &x, &obs, &mask)) / (2.0 * eps);
                let denom = num.abs().max(vals[k].abs()).max(1e-8);
                assert!((num - vals[k]).abs() / denom < 1e-5, "tensor {ti} idx {k}: {num} vs {}", vals[k]);
            }
        }
    }

    #[test]
    fn segment_errors() {
        let (p, x, obs, _) = setup(6);
        assert!(matches!(
            backward(&p, &LstmState::zeros(2), &x, &obs, &LossMask::zeros(10)),
            Err(Error::DegenerateMask)
        ));
        assert!(backward(&p, &LstmState::zeros(2), &x, &obs[..5], &LossMask::zeros(5)).is_err());
    }
}
