//! Named-tensor container used for checkpoints.
//!
//! Plain text, line oriented:
//!
//! ```text
//! fmc-timewarp-tensors 1
//! meta <key> <value...>
//! tensor <name> <frozen 0|1> <ndim> <dim>...
//! <row-major values, one matrix row per line>
//! end
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle is bit exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::dense::{Activation, DenseParams};
use super::lstm::{GateActivation, LstmParams};
use super::matrix::Matrix;
use super::network::{RnnParams, DENSE_LAYERS};
use crate::error::{Error, Result};

const MAGIC: &str = "fmc-timewarp-tensors 1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub frozen: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorFile {
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<NamedTensor>,
}

impl TensorFile {
    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push('\n');
        for (k, v) in &self.meta {
            let _ = writeln!(s, "meta {k} {v}");
        }
        for t in &self.tensors {
            let _ = write!(s, "tensor {} {} {}", t.name, u8::from(t.frozen), t.shape.len());
            for d in &t.shape {
                let _ = write!(s, " {d}");
            }
            s.push('\n');
            let row = t.shape.last().copied().unwrap_or(1).max(1);
            for chunk in t.values.chunks(row) {
                let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(err(1, "missing tensor file header")),
        }
        let mut out = TensorFile::default();
        let mut pending: Option<(usize, NamedTensor, usize)> = None;
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((_, t, want)) = pending.as_mut() {
                if t.values.len() < *want {
                    for tok in line.split_whitespace() {
                        t.values
                            .push(tok.parse().map_err(|_| err(no, &format!("bad value {tok:?}")))?);
                    }
                    if t.values.len() > *want {
                        return Err(err(no, "too many values for tensor"));
                    }
                    continue;
                }
            }
            if let Some((start, t, want)) = pending.take() {
                if t.values.len() != want {
                    return Err(err(start, "tensor value count does not match shape"));
                }
                out.tensors.push(t);
            }
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("meta") => {
                    let key = toks.next().ok_or_else(|| err(no, "meta without key"))?;
                    let value: Vec<&str> = toks.collect();
                    out.meta.insert(key.to_string(), value.join(" "));
                }
                Some("tensor") => {
                    let name = toks.next().ok_or_else(|| err(no, "tensor without name"))?;
                    let mut nums = toks.map(|t| t.parse::<usize>().map_err(|_| err(no, "bad tensor header")));
                    let frozen = nums.next().ok_or_else(|| err(no, "missing frozen flag"))?? == 1;
                    let ndim = nums.next().ok_or_else(|| err(no, "missing ndim"))??;
                    let shape = nums.collect::<Result<Vec<_>>>()?;
                    if shape.len() != ndim {
                        return Err(err(no, "shape rank mismatch"));
                    }
                    let want = shape.iter().product();
                    pending = Some((
                        no,
                        NamedTensor {
                            name: name.to_string(),
                            shape,
                            values: Vec::with_capacity(want),
                            frozen,
                        },
                        want,
                    ));
                }
                Some("end") => return Ok(out),
                _ => return Err(err(no, "unexpected line")),
            }
        }
        Err(err(text.lines().count(), "missing end marker"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

impl RnnParams {
    /// Appends this network's tensors and layer metadata to `file`.
    pub fn write_into(&self, file: &mut TensorFile) {
        file.meta
            .insert("lstm.activation".into(), self.lstm.activation.as_str().into());
        for (k, d) in self.dense.iter().enumerate() {
            file.meta
                .insert(format!("dense{k}.activation"), d.activation.as_str().into());
        }
        for ((info, values), frozen) in self.tensor_info().into_iter().zip(self.tensors()).zip(self.frozen()) {
            file.tensors.push(NamedTensor {
                name: info.name,
                shape: info.shape,
                values: values.to_vec(),
                frozen: *frozen,
            });
        }
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let mut f = TensorFile::default();
        self.write_into(&mut f);
        f
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        let need = |name: &str| {
            file.get(name)
                .ok_or_else(|| Error::config(format!("checkpoint is missing tensor {name}")))
        };
        let bxf = need("lstm.w_xf")?;
        let (hidden, input) = match bxf.shape.as_slice() {
            [h, n] => (*h, *n),
            _ => return Err(Error::config("lstm.w_xf must be two-dimensional")),
        };
        let mut lstm = LstmParams::zeros(input, hidden);
        lstm.activation = match file.meta.get("lstm.activation") {
            Some(s) => GateActivation::parse(s)
                .ok_or_else(|| Error::config(format!("unknown lstm activation {s}")))?,
            None => GateActivation::Standard,
        };
        let mut dense = Vec::with_capacity(DENSE_LAYERS);
        for k in 0..DENSE_LAYERS {
            let w = need(&format!("dense{k}.weight"))?;
            let (rows, cols) = match w.shape.as_slice() {
                [r, c] => (*r, *c),
                _ => return Err(Error::config("dense weights must be two-dimensional")),
            };
            let act = match file.meta.get(&format!("dense{k}.activation")) {
                Some(s) => Activation::parse(s)
                    .ok_or_else(|| Error::config(format!("unknown dense activation {s}")))?,
                None if k + 1 == DENSE_LAYERS => Activation::Identity,
                None => Activation::Relu,
            };
            dense.push(DenseParams {
                weights: Matrix::zeros(rows, cols),
                bias: vec![0.0; rows],
                activation: act,
            });
        }
        let mut params = RnnParams::new(lstm, dense)?;
        let infos = params.tensor_info();
        let mut flags = Vec::with_capacity(infos.len());
        for (info, slot) in infos.iter().zip(params.tensors_mut()) {
            let t = need(&info.name)?;
            if t.shape != info.shape {
                return Err(Error::config(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    info.name, t.shape, info.shape
                )));
            }
            slot.copy_from_slice(&t.values);
            flags.push(t.frozen);
        }
        params.set_frozen_flags(flags)?;
        params.validate()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, TensorRole};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(seed in any::<u64>(), hidden in 1usize..6, input in 1usize..5, freeze_lstm in any::<bool>()) {
            let mut p = Architecture { input_size: input, hidden_size: hidden, dense_sizes: [3, 2] }
                .init(&mut ChaCha8Rng::seed_from_u64(seed));
            if freeze_lstm {
                p.set_frozen_where(TensorRole::is_lstm);
            }
            let text = p.to_tensor_file().to_text();
            let back = RnnParams::from_tensor_file(&TensorFile::parse(&text).unwrap()).unwrap();
            prop_assert_eq!(back.count_differences(&p), 0);
            prop_assert_eq!(back.frozen(), p.frozen());
            prop_assert_eq!(back, p);
        }
    }

    #[test]
    fn rejects_truncated_file() {
        let p = Architecture::new(2).with_hidden(2).init(&mut ChaCha8Rng::seed_from_u64(1));
        let text = p.to_tensor_file().to_text();
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(TensorFile::parse(&cut).is_err());
        assert!(TensorFile::parse("garbage\n").is_err());
    }
}
