use rand::Rng;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// LSTM gate, in the storage order used for every per-gate tensor.
/// Longest memory, in steps, targeted by the initial gate biases.
pub const CHRONO_MAX_HOURS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Cell = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Cell, Gate::Output];

    pub fn suffix(self) -> &'static str {
        match self {
            Gate::Forget => "f",
            Gate::Input => "i",
            Gate::Cell => "g",
            Gate::Output => "o",
        }
    }
}

/// How the cell turns pre-activations into gate values.
///
/// `Standard` is the usual logistic gates with `tanh` candidate and output.
/// `Linear` replaces every nonlinearity with the identity; it exists for the
/// constructed network that reproduces a time-lag recursion exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateActivation {
    #[default]
    Standard,
    Linear,
}

impl GateActivation {
    pub fn as_str(self) -> &'static str {
        match self {
            GateActivation::Standard => "standard",
            GateActivation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard" => Some(GateActivation::Standard),
            "linear" => Some(GateActivation::Linear),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weights and biases of one LSTM layer. Per-gate tensors are indexed by [`Gate`].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub(crate) input_size: usize,
    pub(crate) hidden_size: usize,
    /// Input-to-gate weights, each `hidden x input`.
    pub w_x: [Matrix; 4],
    /// Recurrent weights, each `hidden x hidden`.
    pub w_h: [Matrix; 4],
    pub b: [Vec<f64>; 4],
    pub activation: GateActivation,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let wx = || Matrix::zeros(hidden_size, input_size);
        let wh = || Matrix::zeros(hidden_size, hidden_size);
        let b = || vec![0.0; hidden_size];
        Self {
            input_size,
            hidden_size,
            w_x: [wx(), wx(), wx(), wx()],
            w_h: [wh(), wh(), wh(), wh()],
            b: [b(), b(), b(), b()],
            activation: GateActivation::Standard,
        }
    }

    /// Glorot-uniform input and recurrent weights. Gate biases use chrono
    /// initialization: `b_f = ln(u)` with `u ~ U(1, CHRONO_MAX_HOURS - 1)` and
    /// `b_i = -b_f`, spreading the units over memory lengths up to about
    /// `CHRONO_MAX_HOURS` steps. Cell and output biases start at zero.
    pub fn init<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        let lim_x = (6.0 / (input_size + 4 * hidden_size) as f64).sqrt();
        let lim_h = (6.0 / (hidden_size + 4 * hidden_size) as f64).sqrt();
        for gate in Gate::ALL {
            let g = gate as usize;
            for w in p.w_x[g].as_mut_slice() {
                *w = rng.gen_range(-lim_x..lim_x);
            }
            for w in p.w_h[g].as_mut_slice() {
                *w = rng.gen_range(-lim_h..lim_h);
            }
        }
        for k in 0..hidden_size {
            let bf = rng.gen_range(1.0..CHRONO_MAX_HOURS - 1.0).ln();
            p.b[Gate::Forget as usize][k] = bf;
            p.b[Gate::Input as usize][k] = -bf;
        }
        p
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn bias(&self, gate: Gate) -> &[f64] {
        &self.b[gate as usize]
    }

    pub fn bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        &mut self.b[gate as usize]
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let (h, n) = (self.hidden_size, self.input_size);
        for g in 0..4 {
            check_shape("lstm input weights", self.w_x[g].shape(), (h, n))?;
            check_shape("lstm recurrent weights", self.w_h[g].shape(), (h, h))?;
            if self.b[g].len() != h {
                return Err(Error::Dimension {
                    what: "lstm bias".into(),
                    expected: h,
                    got: self.b[g].len(),
                });
            }
        }
        Ok(())
    }

    /// Computes gate activations for one step into `gates` (layout `[f | i | g | o]`,
    /// each `hidden` long) and writes the new cell and hidden state.
    #[inline]
    pub(crate) fn step_into(
        &self,
        c_prev: &[f64],
        h_prev: &[f64],
        x: &[f64],
        gates: &mut [f64],
        c: &mut [f64],
        h: &mut [f64],
    ) {
        let hs = self.hidden_size;
        for gate in Gate::ALL {
            let g = gate as usize;
            let z = &mut gates[g * hs..(g + 1) * hs];
            z.copy_from_slice(&self.b[g]);
            self.w_x[g].matvec_acc(x, z);
            self.w_h[g].matvec_acc(h_prev, z);
            if self.activation == GateActivation::Standard {
                if gate == Gate::Cell {
                    z.iter_mut().for_each(|v| *v = v.tanh());
                } else {
                    z.iter_mut().for_each(|v| *v = sigmoid(*v));
                }
            }
        }
        let (f, rest) = gates.split_at(hs);
        let (i, rest) = rest.split_at(hs);
        let (g, o) = rest.split_at(hs);
        for k in 0..hs {
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
            h[k] = match self.activation {
                GateActivation::Standard => o[k] * c[k].tanh(),
                GateActivation::Linear => o[k] * c[k],
            };
        }
    }
}

fn check_shape(what: &str, got: (usize, usize), expected: (usize, usize)) -> Result<()> {
    if got.0 != expected.0 {
        return Err(Error::Dimension {
            what: format!("{what} (rows)"),
            expected: expected.0,
            got: got.0,
        });
    }
    if got.1 != expected.1 {
        return Err(Error::Dimension {
            what: format!("{what} (cols)"),
            expected: expected.1,
            got: got.1,
        });
    }
    Ok(())
}

/// Cell state `c` (long-term memory) and hidden state `h` (short-term memory).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            c: vec![0.0; hidden_size],
            h: vec![0.0; hidden_size],
        }
    }
}

/// Gate activations from one step, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRecord {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
}

/// Advances the cell by one input vector.
pub fn lstm_step(params: &LstmParams, state: &LstmState, x: &[f64]) -> Result<(LstmState, GateRecord)> {
    params.validate()?;
    let hs = params.hidden_size;
    if x.len() != params.input_size {
        return Err(Error::Dimension {
            what: "lstm input".into(),
            expected: params.input_size,
            got: x.len(),
        });
    }
    if state.c.len() != hs || state.h.len() != hs {
        return Err(Error::Dimension {
            what: "lstm state".into(),
            expected: hs,
            got: state.c.len().min(state.h.len()),
        });
    }
    let mut gates = vec![0.0; 4 * hs];
    let mut next = LstmState::zeros(hs);
    params.step_into(&state.c, &state.h, x, &mut gates, &mut next.c, &mut next.h);
    let record = GateRecord {
        f: gates[..hs].to_vec(),
        i: gates[hs..2 * hs].to_vec(),
        g: gates[2 * hs..3 * hs].to_vec(),
        o: gates[3 * hs..].to_vec(),
    };
    Ok((next, record))
}
