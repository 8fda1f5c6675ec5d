use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::Adam;
use super::bptt::backward;
use super::loss::{masked_mse, LossMask};
use crate::error::{Error, Result};
use crate::nn::{LstmState, Matrix, RnnParams};
use crate::seed::{rng_for, Substream};

/// How the validation observations of a realization are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValidationSelection {
    /// Use the validation mask supplied with the data.
    Fixed,
    /// Move a random fraction of training chunks into validation.
    RandomHoldout { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Steps per truncated-BPTT segment.
    pub batch_length: usize,
    /// Segments per chunk. The recurrent state restarts from zero at each
    /// chunk and is carried across the segments inside it.
    pub chunk_segments: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Visit chunks in a random order each epoch.
    pub shuffle: bool,
    pub clip_norm: Option<f64>,
    pub validation: ValidationSelection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-3,
            batch_length: 72,
            chunk_segments: 8,
            max_epochs: 200,
            patience: 15,
            seed: 0,
            shuffle: true,
            clip_norm: Some(5.0),
            validation: ValidationSelection::Fixed,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if self.batch_length < 2 {
            return Err(Error::config("batch_length must be at least 2"));
        }
        if self.patience < 1 {
            return Err(Error::config("patience must be at least 1"));
        }
        if self.chunk_segments < 1 {
            return Err(Error::config("chunk_segments must be at least 1"));
        }
        if let ValidationSelection::RandomHoldout { fraction } = self.validation {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::config("holdout fraction must lie in (0,1)"));
            }
        }
        Ok(())
    }

    pub fn chunk_len(&self) -> usize {
        self.batch_length * self.chunk_segments
    }
}

/// One continuous hourly input sequence with sparse targets.
///
/// Gradient segments cover rows `0..train_len`; validation loss is measured
/// by running the whole sequence and scoring rows flagged in `val_mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitData {
    pub inputs: Matrix,
    pub targets: Vec<f64>,
    pub train_mask: LossMask,
    pub val_mask: LossMask,
    pub train_len: usize,
}

impl FitData {
    pub fn new(
        inputs: Matrix,
        targets: Vec<f64>,
        train_mask: LossMask,
        val_mask: LossMask,
        train_len: usize,
    ) -> Result<Self> {
        let n = inputs.rows();
        if targets.len() != n || train_mask.len() != n || val_mask.len() != n {
            return Err(Error::Dimension {
                what: "fit data rows".into(),
                expected: n,
                got: targets.len().min(train_mask.len()).min(val_mask.len()),
            });
        }
        if train_len == 0 || train_len > n {
            return Err(Error::invalid("train_len must lie in 1..=rows"));
        }
        if train_mask.count_in(train_len, n) > 0 {
            return Err(Error::invalid("training observations past train_len"));
        }
        Ok(Self {
            inputs,
            targets,
            train_mask,
            val_mask,
            train_len,
        })
    }

    /// Moves every training observation in a random `fraction` of chunks into
    /// the validation mask. Returns the new data and a label naming the chunks.
    pub fn with_random_holdout<R: Rng + ?Sized>(
        &self,
        fraction: f64,
        chunk_len: usize,
        rng: &mut R,
    ) -> (FitData, String) {
        let n_chunks = self.train_len.div_ceil(chunk_len);
        let with_obs: Vec<usize> = (0..n_chunks)
            .filter(|&c| {
                let (s, e) = (c * chunk_len, ((c + 1) * chunk_len).min(self.train_len));
                self.train_mask.count_in(s, e) > 0
            })
            .collect();
        let k = ((with_obs.len() as f64 * fraction).round() as usize).clamp(1, with_obs.len().saturating_sub(1).max(1));
        let mut picked: Vec<usize> = with_obs.choose_multiple(rng, k).copied().collect();
        picked.sort_unstable();
        let mut out = self.clone();
        for &c in &picked {
            let (s, e) = (c * chunk_len, ((c + 1) * chunk_len).min(self.train_len));
            for t in s..e {
                if out.train_mask.is_set(t) {
                    out.train_mask.set(t, false);
                    out.val_mask.set(t, true);
                }
            }
        }
        let label = picked.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        (out, format!("holdout:{label}"))
    }

    /// Masked MSE of a full forward run against `mask`.
    pub fn loss(&self, params: &RnnParams, mask: &LossMask) -> Result<f64> {
        let (pred, _) = params.forward(&self.inputs, &LstmState::zeros(params.hidden_size()))?;
        masked_mse(&pred, &self.targets, mask)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub seed: u64,
    pub validation_selection: String,
    /// Snapshot with the lowest validation loss.
    pub trained: RnnParams,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of `trained`.
    pub best_epoch: usize,
}

impl Realization {
    pub fn best_val_loss(&self) -> f64 {
        self.history[self.best_epoch - 1].val_loss
    }
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut s = String::from("epoch,train_loss,val_loss\n");
    for r in history {
        s.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_loss));
    }
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Trains with truncated BPTT and validation-controlled early stopping.
pub fn fit(params: RnnParams, data: &FitData, config: &TrainConfig) -> Result<Realization> {
    if data.val_mask.count() == 0 {
        return Err(Error::invalid("validation data has no observations"));
    }
    fit_with_validator(params, data, config, |p| data.loss(p, &data.val_mask))
}

/// [`fit`] with a caller-supplied validation loss.
pub fn fit_with_validator(
    mut params: RnnParams,
    data: &FitData,
    config: &TrainConfig,
    mut validation_loss: impl FnMut(&RnnParams) -> Result<f64>,
) -> Result<Realization> {
    config.validate()?;
    params.validate()?;
    if data.train_mask.count() == 0 {
        return Err(Error::invalid("training data has no observations"));
    }
    let hs = params.hidden_size();
    let mut rng = rng_for(config.seed, Substream::Shuffle);
    let mut opt = Adam::new(&params, config.learning_rate, config.clip_norm);

    let chunk_len = config.chunk_len();
    let n_chunks = data.train_len.div_ceil(chunk_len);
    let mut order: Vec<usize> = (0..n_chunks).collect();

    let mut history = Vec::new();
    let mut best: Option<(f64, RnnParams, usize)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=config.max_epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut sq_sum = 0.0;
        let mut n_obs = 0usize;
        let last_good = |best: &Option<(f64, RnnParams, usize)>, fallback: &RnnParams| {
            Box::new(best.as_ref().map_or_else(|| fallback.clone(), |b| b.1.clone()))
        };
        if params.trainable_count() > 0 {
            for &c in &order {
                let start = c * chunk_len;
                let end = ((c + 1) * chunk_len).min(data.train_len);
                let mut state = LstmState::zeros(hs);
                let mut s = start;
                while s < end {
                    let e = (s + config.batch_length).min(end);
                    let seg_inputs = data.inputs.slice_rows(s, e);
                    let seg_mask = LossMask::from_flags((s..e).map(|t| data.train_mask.is_set(t)));
                    if seg_mask.count() == 0 {
                        let (_, next) = params.forward(&seg_inputs, &state)?;
                        state = next;
                    } else {
                        let seg = match backward(&params, &state, &seg_inputs, &data.targets[s..e], &seg_mask) {
                            Ok(seg) => seg,
                            Err(Error::NumericOverflow(_)) => {
                                return Err(Error::TrainingDiverged {
                                    epoch,
                                    last_good: last_good(&best, &params),
                                })
                            }
                            Err(e) => return Err(e),
                        };
                        sq_sum += seg.loss * seg.observations as f64;
                        n_obs += seg.observations;
                        opt.step(&mut params, &seg.grads);
                        state = seg.final_state;
                    }
                    s = e;
                }
            }
        }
        let train_loss = if n_obs > 0 {
            sq_sum / n_obs as f64
        } else {
            data.loss(&params, &data.train_mask)?
        };
        let val_loss = match validation_loss(&params) {
            Ok(v) => v,
            Err(Error::NumericOverflow(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                last_good: last_good(&best, &params),
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        match &best {
            Some((b, _, _)) if val_loss >= *b => since_best += 1,
            _ => {
                best = Some((val_loss, params.clone(), epoch));
                since_best = 0;
            }
        }
        if since_best >= config.patience {
            break;
        }
    }

    let (_, trained, best_epoch) = best.ok_or_else(|| Error::config("max_epochs must be at least 1"))?;
    Ok(Realization {
        seed: config.seed,
        validation_selection: match config.validation {
            ValidationSelection::Fixed => "fixed".into(),
            ValidationSelection::RandomHoldout { .. } => "holdout".into(),
        },
        trained,
        history,
        best_epoch,
    })
}
