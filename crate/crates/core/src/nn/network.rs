use rand::Rng;

use super::dense::{Activation, DenseParams};
use super::lstm::{Gate, LstmParams, LstmState};
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Which part of the network a tensor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorRole {
    LstmInput(Gate),
    LstmRecurrent(Gate),
    LstmBias(Gate),
    DenseWeight(usize),
    DenseBias(usize),
}

impl TensorRole {
    pub fn is_lstm(self) -> bool {
        matches!(
            self,
            TensorRole::LstmInput(_) | TensorRole::LstmRecurrent(_) | TensorRole::LstmBias(_)
        )
    }

    pub fn is_dense(self) -> bool {
        !self.is_lstm()
    }

    pub fn name(self) -> String {
        match self {
            TensorRole::LstmInput(g) => format!("lstm.w_x{}", g.suffix()),
            TensorRole::LstmRecurrent(g) => format!("lstm.w_h{}", g.suffix()),
            TensorRole::LstmBias(g) => format!("lstm.b_{}", g.suffix()),
            TensorRole::DenseWeight(k) => format!("dense{k}.weight"),
            TensorRole::DenseBias(k) => format!("dense{k}.bias"),
        }
    }
}

/// Layer sizes of the LSTM + dense stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub input_size: usize,
    pub hidden_size: usize,
    /// Widths of the two hidden dense layers; a scalar output layer follows.
    pub dense_sizes: [usize; 2],
}

impl Architecture {
    pub const DEFAULT_HIDDEN: usize = 64;
    pub const DEFAULT_DENSE: [usize; 2] = [32, 16];

    pub fn new(input_size: usize) -> Self {
        Self {
            input_size,
            hidden_size: Self::DEFAULT_HIDDEN,
            dense_sizes: Self::DEFAULT_DENSE,
        }
    }

    pub fn with_hidden(mut self, hidden: usize) -> Self {
        self.hidden_size = hidden;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.hidden_size == 0 || self.dense_sizes.contains(&0) {
            return Err(Error::config("architecture sizes must be positive"));
        }
        Ok(())
    }

    /// Fresh random parameters: relu hidden dense layers and a linear scalar head.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> RnnParams {
        let lstm = LstmParams::init(self.input_size, self.hidden_size, rng);
        let [d0, d1] = self.dense_sizes;
        let dense = vec![
            DenseParams::init(self.hidden_size, d0, Activation::Relu, rng),
            DenseParams::init(d0, d1, Activation::Relu, rng),
            DenseParams::init(d1, 1, Activation::Identity, rng),
        ];
        RnnParams::new(lstm, dense).expect("architecture produces consistent shapes")
    }
}

/// Static shape and role of one named tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub role: TensorRole,
    pub shape: Vec<usize>,
}

/// All parameters of the recurrent network: one LSTM layer, three dense
/// layers, and a freeze flag for each tensor (in [`RnnParams::tensor_info`] order).
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub lstm: LstmParams,
    pub dense: Vec<DenseParams>,
    frozen: Vec<bool>,
}

pub const DENSE_LAYERS: usize = 3;

impl RnnParams {
    pub fn new(lstm: LstmParams, dense: Vec<DenseParams>) -> Result<Self> {
        let n = 12 + 2 * dense.len();
        let p = Self {
            lstm,
            dense,
            frozen: vec![false; n],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.lstm.validate()?;
        if self.dense.len() != DENSE_LAYERS {
            return Err(Error::Dimension {
                what: "dense layer count".into(),
                expected: DENSE_LAYERS,
                got: self.dense.len(),
            });
        }
        let mut width = self.lstm.hidden_size;
        for layer in &self.dense {
            layer.validate()?;
            if layer.input_size() != width {
                return Err(Error::Dimension {
                    what: "dense input".into(),
                    expected: width,
                    got: layer.input_size(),
                });
            }
            width = layer.output_size();
        }
        if width != 1 {
            return Err(Error::Dimension {
                what: "network output".into(),
                expected: 1,
                got: width,
            });
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NumericOverflow("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.lstm.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_size: self.lstm.input_size,
            hidden_size: self.lstm.hidden_size,
            dense_sizes: [self.dense[0].output_size(), self.dense[1].output_size()],
        }
    }

    pub fn tensor_info(&self) -> Vec<TensorInfo> {
        let (h, n) = (self.lstm.hidden_size, self.lstm.input_size);
        let mut out = Vec::with_capacity(self.frozen.len());
        for g in Gate::ALL {
            out.push((TensorRole::LstmInput(g), vec![h, n]));
        }
        for g in Gate::ALL {
            out.push((TensorRole::LstmRecurrent(g), vec![h, h]));
        }
        for g in Gate::ALL {
            out.push((TensorRole::LstmBias(g), vec![h]));
        }
        for (k, d) in self.dense.iter().enumerate() {
            out.push((TensorRole::DenseWeight(k), vec![d.output_size(), d.input_size()]));
            out.push((TensorRole::DenseBias(k), vec![d.output_size()]));
        }
        out.into_iter()
            .map(|(role, shape)| TensorInfo {
                name: role.name(),
                role,
                shape,
            })
            .collect()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(self.frozen.len());
        out.extend(self.lstm.w_x.iter().map(Matrix::as_slice));
        out.extend(self.lstm.w_h.iter().map(Matrix::as_slice));
        out.extend(self.lstm.b.iter().map(Vec::as_slice));
        for d in &self.dense {
            out.push(d.weights.as_slice());
            out.push(&d.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(self.frozen.len());
        out.extend(self.lstm.w_x.iter_mut().map(Matrix::as_mut_slice));
        out.extend(self.lstm.w_h.iter_mut().map(Matrix::as_mut_slice));
        out.extend(self.lstm.b.iter_mut().map(Vec::as_mut_slice));
        for d in &mut self.dense {
            out.push(d.weights.as_mut_slice());
            out.push(&mut d.bias);
        }
        out
    }

    /// Same shapes and activations, every value zero, nothing frozen.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z.frozen.fill(false);
        z
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn set_frozen_where(&mut self, mut pred: impl FnMut(TensorRole) -> bool) {
        let roles: Vec<TensorRole> = self.tensor_info().into_iter().map(|t| t.role).collect();
        for (flag, role) in self.frozen.iter_mut().zip(roles) {
            *flag = pred(role);
        }
    }

    pub fn freeze_all(&mut self) {
        self.frozen.fill(true);
    }

    pub fn unfreeze_all(&mut self) {
        self.frozen.fill(false);
    }

    pub(crate) fn set_frozen_flags(&mut self, flags: Vec<bool>) -> Result<()> {
        if flags.len() != self.frozen.len() {
            return Err(Error::Dimension {
                what: "freeze mask".into(),
                expected: self.frozen.len(),
                got: flags.len(),
            });
        }
        self.frozen = flags;
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.tensors()
            .iter()
            .zip(&self.frozen)
            .filter(|(_, &f)| !f)
            .map(|(t, _)| t.len())
            .sum()
    }

    /// Number of scalar entries that differ bitwise between two parameter sets
    /// of the same architecture.
    pub fn count_differences(&self, other: &RnnParams) -> usize {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x.to_bits() != y.to_bits()).count())
            .sum()
    }

    /// Runs the network over `inputs` (one row per hour) from `initial`, returning
    /// one prediction per row and the state after the last row.
    pub fn forward(&self, inputs: &Matrix, initial: &LstmState) -> Result<(Vec<f64>, LstmState)> {
        let mut preds = Vec::with_capacity(inputs.rows());
        let state = self.forward_with(inputs, initial, |_, y| preds.push(y))?;
        Ok((preds, state))
    }

    /// Forward pass that hands each `(t, prediction)` to `sink` instead of
    /// collecting them.
    pub fn forward_with(
        &self,
        inputs: &Matrix,
        initial: &LstmState,
        mut sink: impl FnMut(usize, f64),
    ) -> Result<LstmState> {
        if inputs.rows() == 0 {
            return Err(Error::invalid("forward needs at least one time step"));
        }
        self.check_io(inputs, initial)?;
        let hs = self.lstm.hidden_size;
        let mut gates = vec![0.0; 4 * hs];
        let mut cur = initial.clone();
        let mut next = LstmState::zeros(hs);
        let mut bufs: Vec<Vec<f64>> = self.dense.iter().map(|d| vec![0.0; d.output_size()]).collect();
        for t in 0..inputs.rows() {
            self.lstm
                .step_into(&cur.c, &cur.h, inputs.row(t), &mut gates, &mut next.c, &mut next.h);
            std::mem::swap(&mut cur, &mut next);
            let y = self.dense_forward(&cur.h, &mut bufs);
            sink(t, y);
        }
        Ok(cur)
    }

    pub(crate) fn check_io(&self, inputs: &Matrix, initial: &LstmState) -> Result<()> {
        if inputs.cols() != self.lstm.input_size {
            return Err(Error::Dimension {
                what: "input features".into(),
                expected: self.lstm.input_size,
                got: inputs.cols(),
            });
        }
        let hs = self.lstm.hidden_size;
        if initial.c.len() != hs || initial.h.len() != hs {
            return Err(Error::Dimension {
                what: "initial state".into(),
                expected: hs,
                got: initial.c.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn dense_forward(&self, h: &[f64], bufs: &mut [Vec<f64>]) -> f64 {
        for (k, layer) in self.dense.iter().enumerate() {
            let (done, rest) = bufs.split_at_mut(k);
            let x: &[f64] = if k == 0 { h } else { &done[k - 1] };
            layer.forward_into(x, &mut rest[0]);
        }
        bufs[DENSE_LAYERS - 1][0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::GateActivation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_inputs(rng: &mut impl Rng, t: usize, n: usize) -> Matrix {
        Matrix::from_vec(t, n, (0..t * n).map(|_| rng.gen_range(-2.0..2.0)).collect())
    }

    #[test]
    fn default_architecture_counts() {
        let arch = Architecture::new(12);
        let p = arch.init(&mut ChaCha8Rng::seed_from_u64(0));
        assert!(p.param_count() > 21_000, "{}", p.param_count());
        let gate_bias = p.lstm.bias(Gate::Forget).len() + p.lstm.bias(Gate::Input).len();
        assert_eq!(gate_bias, 128);
        assert_eq!(p.trainable_count(), p.param_count());
    }

    #[test]
    fn constant_network_outputs_bias_path() {
        let mut lstm = LstmParams::zeros(3, 4);
        lstm.activation = GateActivation::Standard;
        let mut dense = vec![
            DenseParams::zeros(4, 4, Activation::Relu),
            DenseParams::zeros(4, 2, Activation::Relu),
            DenseParams::zeros(2, 1, Activation::Identity),
        ];
        dense[1].bias = vec![1.5, 0.5];
        dense[2].weights = Matrix::from_vec(1, 2, vec![2.0, -1.0]);
        dense[2].bias = vec![0.25];
        let p = RnnParams::new(lstm, dense).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_inputs(&mut rng, 20, 3);
        let (y, _) = p.forward(&x, &LstmState::zeros(4)).unwrap();
        assert!(y.iter().all(|&v| v == 2.0 * 1.5 - 0.5 + 0.25));
    }

    #[test]
    fn causal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = Architecture::new(4).with_hidden(6).init(&mut rng);
        let x = random_inputs(&mut rng, 30, 4);
        let (base, _) = p.forward(&x, &LstmState::zeros(6)).unwrap();
        for k in [0, 7, 29] {
            let mut y = x.clone();
            y.set(k, 1, y.get(k, 1) + 0.75);
            let (pert, _) = p.forward(&y, &LstmState::zeros(6)).unwrap();
            for t in 0..k {
                assert_eq!(base[t].to_bits(), pert[t].to_bits());
            }
            assert_ne!(base[k], pert[k]);
        }
    }

    #[test]
    fn stateful_split_matches_full_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = Architecture::new(5).with_hidden(7).init(&mut rng);
        let x = random_inputs(&mut rng, 40, 5);
        let s0 = LstmState::zeros(7);
        let (full, end_full) = p.forward(&x, &s0).unwrap();
        let (a, mid) = p.forward(&x.slice_rows(0, 20), &s0).unwrap();
        let (b, end) = p.forward(&x.slice_rows(20, 40), &mid).unwrap();
        let chained: Vec<f64> = a.into_iter().chain(b).collect();
        assert_eq!(full, chained);
        assert_eq!(end_full, end);
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = Architecture::new(3).with_hidden(4).init(&mut rng);
        let x = random_inputs(&mut rng, 25, 3);
        let a = p.forward(&x, &LstmState::zeros(4)).unwrap();
        let b = p.forward(&x, &LstmState::zeros(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_errors() {
        let p = Architecture::new(3).with_hidden(4).init(&mut ChaCha8Rng::seed_from_u64(1));
        assert!(p.forward(&Matrix::zeros(0, 3), &LstmState::zeros(4)).is_err());
        assert!(p.forward(&Matrix::zeros(2, 2), &LstmState::zeros(4)).is_err());
    }

    #[test]
    fn freeze_accounting() {
        let mut p = Architecture::new(3).with_hidden(4).init(&mut ChaCha8Rng::seed_from_u64(1));
        p.set_frozen_where(TensorRole::is_lstm);
        let dense: usize = p.dense.iter().map(|d| d.weights.as_slice().len() + d.bias.len()).sum();
        assert_eq!(p.trainable_count(), dense);
        p.freeze_all();
        assert_eq!(p.trainable_count(), 0);
    }
}
