use std::borrow::Cow;

use rayon::prelude::*;

use super::fit::{fit, FitData, Realization, TrainConfig, ValidationSelection};
use crate::error::{Error, Result};
use crate::nn::{Architecture, RnnParams};
use crate::seed::{rng_for, Substream};

/// Which of the three random factors change from one realization to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vary {
    pub validation: bool,
    pub order: bool,
    pub init: bool,
}

impl Vary {
    pub const ALL: Vary = Vary {
        validation: true,
        order: true,
        init: true,
    };
}

/// Random initial weights with the output bias set to the mean training
/// target, so the untrained network starts at the climatological value.
pub fn fresh_params(arch: &Architecture, seed: u64, data: &FitData) -> RnnParams {
    let mut p = arch.init(&mut rng_for(seed, Substream::Init));
    let (sum, n) = (0..data.train_len)
        .filter(|&t| data.train_mask.is_set(t))
        .fold((0.0, 0usize), |(s, n), t| (s + data.targets[t], n + 1));
    if n > 0 {
        p.dense[2].bias[0] = sum / n as f64;
    }
    p
}

/// Applies `config.validation` to `data`, drawing any random holdout from the
/// validation substream of `seed`. Returns the data and a label for the
/// chosen validation set.
pub fn select_validation<'a>(data: &'a FitData, config: &TrainConfig, seed: u64) -> (Cow<'a, FitData>, String) {
    match config.validation {
        ValidationSelection::RandomHoldout { fraction } => {
            let mut rng = rng_for(seed, Substream::ValSplit);
            let (d, l) = data.with_random_holdout(fraction, config.chunk_len(), &mut rng);
            (Cow::Owned(d), l)
        }
        ValidationSelection::Fixed => (Cow::Borrowed(data), "fixed".to_string()),
    }
}

/// Trains `n` independent realizations with seeds `base.seed .. base.seed + n`.
///
/// Each realization draws its own init, chunk-order and validation substreams,
/// so results do not depend on `jobs` or on scheduling. When `start` is given
/// every realization begins from it instead of a fresh init.
pub fn replicate(
    arch: &Architecture,
    start: Option<&RnnParams>,
    data: &FitData,
    base: &TrainConfig,
    n: usize,
    vary: Vary,
    jobs: usize,
) -> Result<Vec<Result<Realization>>> {
    if n == 0 {
        return Err(Error::config("realization count must be at least 1"));
    }
    base.validate()?;
    arch.validate()?;
    let run = |k: usize| -> Result<Realization> {
        let seed = base.seed + k as u64;
        let pick = |on: bool| if on { seed } else { base.seed };
        let params = match start {
            Some(p) => p.clone(),
            None => fresh_params(arch, pick(vary.init), data),
        };
        let (data, label) = select_validation(data, base, pick(vary.validation));
        let cfg = TrainConfig {
            seed: pick(vary.order),
            ..base.clone()
        };
        let mut r = fit(params, &data, &cfg)?;
        r.seed = seed;
        r.validation_selection = label;
        Ok(r)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(run).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;
    use crate::train::LossMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data() -> FitData {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 240;
        let inputs = Matrix::from_vec(n, 2, (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let targets = (0..n).map(|t| inputs.get(t, 1) * 3.0).collect();
        FitData::new(
            inputs,
            targets,
            LossMask::from_flags((0..n).map(|t| t < 180 && t % 4 == 0)),
            LossMask::from_flags((0..n).map(|t| t >= 180 && t % 4 == 0)),
            180,
        )
        .unwrap()
    }

    fn arch() -> Architecture {
        Architecture {
            input_size: 2,
            hidden_size: 3,
            dense_sizes: [4, 3],
        }
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            max_epochs: 3,
            batch_length: 20,
            chunk_segments: 3,
            seed: 17,
            validation: ValidationSelection::RandomHoldout { fraction: 0.3 },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn same_seed_same_result() {
        let d = data();
        let a = replicate(&arch(), None, &d, &cfg(), 1, Vary::ALL, 1).unwrap();
        let b = replicate(&arch(), None, &d, &cfg(), 1, Vary::ALL, 1).unwrap();
        assert_eq!(a[0].as_ref().unwrap(), b[0].as_ref().unwrap());
    }

    #[test]
    fn different_seeds_different_init() {
        let d = data();
        let p0 = fresh_params(&arch(), 17, &d);
        let p1 = fresh_params(&arch(), 18, &d);
        assert!(p0.count_differences(&p1) > 0);
        let rs = replicate(&arch(), None, &d, &cfg(), 2, Vary::ALL, 2).unwrap();
        let seeds: Vec<u64> = rs.iter().map(|r| r.as_ref().unwrap().seed).collect();
        assert_eq!(seeds, vec![17, 18]);
    }

    #[test]
    fn job_count_does_not_change_results() {
        let d = data();
        let one = replicate(&arch(), None, &d, &cfg(), 3, Vary::ALL, 1).unwrap();
        let three = replicate(&arch(), None, &d, &cfg(), 3, Vary::ALL, 3).unwrap();
        for (a, b) in one.iter().zip(&three) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
    }

    #[test]
    fn zero_realizations_rejected() {
        assert!(replicate(&arch(), None, &data(), &cfg(), 0, Vary::ALL, 1).is_err());
    }
}
