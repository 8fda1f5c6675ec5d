use super::grid::{apply_shift, grid_search, BiasShift, GridSpec, SearchResult};
use crate::error::{Error, Result};
use crate::nn::{Architecture, RnnParams, TensorRole};
use crate::train::{fit, fresh_params, select_validation, FitData, Realization, TrainConfig};

/// The six ways of producing a target-class model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransferMethod {
    /// Train from scratch on the target class.
    NoTransfer,
    FullFineTune,
    /// Fine-tune dense layers with the LSTM fixed.
    FreezeRecurrent,
    /// Fine-tune the LSTM with dense layers fixed.
    FreezeDense,
    /// Bias-shift search only; no gradient steps.
    TimeWarp,
    TimeWarpFineTune,
}

impl TransferMethod {
    pub const ALL: [TransferMethod; 6] = [
        TransferMethod::NoTransfer,
        TransferMethod::FullFineTune,
        TransferMethod::FreezeRecurrent,
        TransferMethod::FreezeDense,
        TransferMethod::TimeWarp,
        TransferMethod::TimeWarpFineTune,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransferMethod::NoTransfer => "no-transfer",
            TransferMethod::FullFineTune => "full-fine-tune",
            TransferMethod::FreezeRecurrent => "freeze-recurrent",
            TransferMethod::FreezeDense => "freeze-dense",
            TransferMethod::TimeWarp => "time-warp",
            TransferMethod::TimeWarpFineTune => "time-warp-fine-tune",
        }
    }

    /// Accepts the kebab-case name or the CamelCase variant name.
    pub fn parse(s: &str) -> Option<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        TransferMethod::ALL
            .into_iter()
            .find(|m| m.as_str().replace('-', "") == key)
    }

    pub fn needs_pretrained(self) -> bool {
        self != TransferMethod::NoTransfer
    }

    pub fn searches(self) -> bool {
        matches!(self, TransferMethod::TimeWarp | TransferMethod::TimeWarpFineTune)
    }

    pub fn trains(self) -> bool {
        self != TransferMethod::TimeWarp
    }

    /// Whether the tensor with this role is held fixed during fine-tuning.
    pub fn freezes(self, role: TensorRole) -> bool {
        match self {
            TransferMethod::FreezeRecurrent => role.is_lstm(),
            TransferMethod::FreezeDense => role.is_dense(),
            _ => false,
        }
    }
}

impl std::fmt::Display for TransferMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    /// Adapted parameters, all tensors unfrozen.
    pub params: RnnParams,
    pub shift: Option<BiasShift>,
    pub search: Option<SearchResult>,
    pub realization: Option<Realization>,
}

/// Runs one transfer method on target-class data.
///
/// Only training and validation rows are ever passed in, so no method can see
/// the test period. Grid search scores training observations only. With
/// `forced_shift` the search is skipped and that shift is applied instead.
/// `config.seed` drives fresh initialization, chunk order and any random
/// validation holdout.
pub fn run_method(
    method: TransferMethod,
    pretrained: Option<&RnnParams>,
    data: &FitData,
    arch: &Architecture,
    config: &TrainConfig,
    grid: &GridSpec,
    forced_shift: Option<BiasShift>,
) -> Result<MethodOutcome> {
    let start = match (method, pretrained) {
        (TransferMethod::NoTransfer, _) => fresh_params(arch, config.seed, data),
        (_, Some(p)) => {
            let mut p = p.clone();
            p.unfreeze_all();
            p
        }
        (m, None) => return Err(Error::config(format!("method {m} needs a pretrained model"))),
    };

    let (start, shift, search) = if method.searches() {
        let (shift, search) = match forced_shift {
            Some(s) if s.is_finite() => (s, None),
            Some(s) => return Err(Error::invalid(format!("forced shift {s:?} is not finite"))),
            None => {
                let r = grid_search(&start, data, grid)?;
                (r.best, Some(r))
            }
        };
        (apply_shift(&start, shift), Some(shift), search)
    } else {
        (start, None, None)
    };

    if !method.trains() {
        return Ok(MethodOutcome {
            params: start,
            shift,
            search,
            realization: None,
        });
    }

    let mut start = start;
    start.set_frozen_where(|role| method.freezes(role));
    let (data, label) = select_validation(data, config, config.seed);
    let mut r = fit(start, &data, config)?;
    r.validation_selection = label;
    let mut params = r.trained.clone();
    params.unfreeze_all();
    Ok(MethodOutcome {
        params,
        shift,
        search,
        realization: Some(r),
    })
}
