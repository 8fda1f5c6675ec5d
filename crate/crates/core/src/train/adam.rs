use crate::nn::RnnParams;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam with global-norm gradient clipping. Frozen tensors are never touched,
/// so they stay bitwise identical across any number of steps.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    clip_norm: Option<f64>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(params: &RnnParams, lr: f64, clip_norm: Option<f64>) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Self {
            lr,
            clip_norm,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut RnnParams, grads: &RnnParams) {
        let frozen = params.frozen().to_vec();
        let grad_tensors = grads.tensors();
        let scale = match self.clip_norm {
            Some(max) => {
                let norm = grad_tensors
                    .iter()
                    .zip(&frozen)
                    .filter(|(_, &f)| !f)
                    .flat_map(|(g, _)| g.iter())
                    .map(|g| g * g)
                    .sum::<f64>()
                    .sqrt();
                if norm > max {
                    max / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t);
        let bc2 = 1.0 - BETA2.powi(self.t);
        for (k, tensor) in params.tensors_mut().into_iter().enumerate() {
            if frozen[k] {
                continue;
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (j, w) in tensor.iter_mut().enumerate() {
                let g = grad_tensors[k][j] * scale;
                m[j] = BETA1 * m[j] + (1.0 - BETA1) * g;
                v[j] = BETA2 * v[j] + (1.0 - BETA2) * g * g;
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                *w -= self.lr * mhat / (vhat.sqrt() + EPSILON);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, TensorRole};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Architecture::new(2).with_hidden(2).init(&mut ChaCha8Rng::seed_from_u64(0));
        let before = p.clone();
        let mut g = p.zeros_like();
        g.lstm.b[0][0] = 0.3;
        let mut opt = Adam::new(&p, 0.01, None);
        opt.step(&mut p, &g);
        assert!((before.lstm.b[0][0] - p.lstm.b[0][0] - 0.01).abs() < 1e-9);
        assert_eq!(p.count_differences(&before), 1);
    }

    #[test]
    fn frozen_tensors_untouched() {
        let mut p = Architecture::new(2).with_hidden(3).init(&mut ChaCha8Rng::seed_from_u64(0));
        p.set_frozen_where(TensorRole::is_lstm);
        let before = p.clone();
        let mut g = p.zeros_like();
        for t in g.tensors_mut() {
            t.fill(1.0);
        }
        let mut opt = Adam::new(&p, 0.1, Some(5.0));
        for _ in 0..3 {
            opt.step(&mut p, &g);
        }
        assert_eq!(p.lstm, before.lstm);
        assert_ne!(p.dense, before.dense);
    }
}
