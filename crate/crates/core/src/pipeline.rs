//! File-level experiment steps behind the command-line tool.
//!
//! Layout under the output directory:
//!
//! ```text
//! dataset.csv                         synth
//! config.resolved.toml                every step
//! pretrain/manifest.csv, rNNN.tensors, rNNN_history.csv
//! transfer/<method>/<class>/manifest.csv, rNNN.tensors, rNNN_history.csv,
//!     rNNN_surface.csv, shifts.csv
//! reports/report.csv, realizations.csv, report.txt, acf_<method>_<class>.csv
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::data::{load_csv, save_csv, synth_dataset, FuelClass, LoadOptions, Normalizer, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{
    aggregate, correlogram, filter_le, metrics, realizations_csv, render_table, report_csv, EvalReport, Filter,
    MetricSet,
};
use crate::experiment::Prepared;
use crate::nn::{RnnParams, TensorFile};
use crate::train::{replicate, write_history_csv, Realization, Vary};
use crate::transfer::{run_method, write_surface_csv, TransferMethod};

/// Lags written to correlogram files.
pub const CORRELOGRAM_LAGS: usize = 48;

/// Optional narrowing of the configured methods, classes and filters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selection {
    pub methods: Option<Vec<TransferMethod>>,
    pub classes: Option<Vec<FuelClass>>,
    pub filter: Option<Filter>,
}

impl Selection {
    fn methods(&self, cfg: &ExperimentConfig) -> Vec<TransferMethod> {
        self.methods.clone().unwrap_or_else(|| cfg.methods.clone())
    }

    fn classes(&self, cfg: &ExperimentConfig) -> Vec<FuelClass> {
        self.classes.clone().unwrap_or_else(|| cfg.target_classes.clone())
    }

    fn filters(&self, class: FuelClass) -> Vec<Filter> {
        Filter::for_class(class)
            .iter()
            .copied()
            .filter(|f| self.filter.is_none_or(|s| s == *f))
            .collect()
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn csv_done(path: &Path, mut w: csv::Writer<std::fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_row(path: &Path, w: &mut csv::Writer<std::fs::File>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn checkpoint_name(k: usize) -> String {
    format!("r{k:03}.tensors")
}

fn write_resolved(cfg: &ExperimentConfig) -> Result<()> {
    create_dir(&cfg.out)?;
    write_text(&cfg.out.join("config.resolved.toml"), &cfg.to_text())
}

/// Generates the synthetic dataset and writes it to the configured path.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let (frame, series) = synth_dataset(&cfg.synth)?;
    let path = cfg.dataset_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_csv(&path, &frame, &series)?;
    log::info!("wrote {} hourly rows to {}", frame.len(), path.display());
    Ok(path)
}

/// Loads and splits the configured dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Prepared> {
    let path = cfg.dataset_path();
    if !path.exists() {
        return Err(Error::config(format!(
            "dataset {} not found; run `synth` first or set data.path",
            path.display()
        )));
    }
    let (frame, series) = load_csv(&path, LoadOptions { gaps: cfg.gaps })?;
    let spec = SplitSpec::by_rows(&frame, cfg.train_rows)?;
    Prepared::new(&frame, &series, &spec)
}

fn save_checkpoint(path: &Path, params: &RnnParams, norm: &Normalizer, meta: &[(&str, String)]) -> Result<()> {
    let mut file = params.to_tensor_file();
    norm.write_into(&mut file);
    for (k, v) in meta {
        file.meta.insert((*k).to_string(), v.clone());
    }
    file.write(path)
}

fn load_checkpoint(path: &Path, expect_norm: &Normalizer) -> Result<RnnParams> {
    if !path.exists() {
        return Err(Error::config(format!("checkpoint {} not found", path.display())));
    }
    let file = TensorFile::read(path)?;
    if &Normalizer::from_tensor_file(&file)? != expect_norm {
        return Err(Error::config(format!(
            "checkpoint {} was trained on a different dataset or split",
            path.display()
        )));
    }
    RnnParams::from_tensor_file(&file)
}

/// One realization's outcome as recorded in a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub realization: usize,
    pub seed: u64,
    /// `ok`, `diverged`, or `failed`.
    pub status: String,
    pub checkpoint: Option<String>,
}

const MANIFEST_HEADER: [&str; 9] = [
    "realization",
    "seed",
    "status",
    "validation",
    "best_epoch",
    "epochs",
    "best_val_loss",
    "checkpoint",
    "message",
];

struct Outcome {
    row: ManifestRow,
    realization: Option<Realization>,
    message: String,
}

fn write_manifest(path: &Path, outcomes: &[Outcome]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &MANIFEST_HEADER.map(String::from))?;
    for o in outcomes {
        let r = o.realization.as_ref();
        write_row(
            path,
            &mut w,
            &[
                o.row.realization.to_string(),
                o.row.seed.to_string(),
                o.row.status.clone(),
                r.map(|r| r.validation_selection.clone()).unwrap_or_default(),
                r.map(|r| r.best_epoch.to_string()).unwrap_or_default(),
                r.map(|r| r.history.len().to_string()).unwrap_or_default(),
                r.map(|r| r.best_val_loss().to_string()).unwrap_or_default(),
                o.row.checkpoint.clone().unwrap_or_default(),
                o.message.clone(),
            ],
        )?;
    }
    csv_done(path, w)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    if !path.exists() {
        return Err(Error::config(format!("manifest {} not found", path.display())));
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?;
        let field = |k: usize| rec.get(k).unwrap_or("").to_string();
        let num = |k: usize| {
            field(k).parse::<u64>().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("bad {} in {}", MANIFEST_HEADER[k], path.display()),
            })
        };
        rows.push(ManifestRow {
            realization: num(0)? as usize,
            seed: num(1)?,
            status: field(2),
            checkpoint: Some(field(7)).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PretrainSummary {
    pub ok: usize,
    pub diverged: usize,
    pub failed: usize,
}

/// Trains the source-class realizations and writes their checkpoints,
/// histories and manifest. Individual failures are recorded, not fatal.
pub fn pretrain(cfg: &ExperimentConfig, prep: &Prepared) -> Result<PretrainSummary> {
    let dir = cfg.out.join("pretrain");
    create_dir(&dir)?;
    write_resolved(cfg)?;
    let data = prep.fit_data(cfg.source_class)?;
    let base = cfg.train_for(0);
    let results = replicate(&cfg.arch, None, &data, &base, cfg.realizations, Vary::ALL, cfg.jobs)?;
    let mut outcomes = Vec::with_capacity(results.len());
    let mut first_err = None;
    for (k, result) in results.into_iter().enumerate() {
        let seed = cfg.seed + k as u64;
        let meta = |status: &str| {
            vec![
                ("realization", k.to_string()),
                ("seed", seed.to_string()),
                ("class", cfg.source_class.column().to_string()),
                ("status", status.to_string()),
            ]
        };
        let outcome = match result {
            Ok(r) => {
                save_checkpoint(&dir.join(checkpoint_name(k)), &r.trained, &prep.normalizer, &meta("ok"))?;
                write_history_csv(&dir.join(format!("r{k:03}_history.csv")), &r.history)?;
                Outcome {
                    row: ManifestRow {
                        realization: k,
                        seed,
                        status: "ok".into(),
                        checkpoint: Some(checkpoint_name(k)),
                    },
                    realization: Some(r),
                    message: String::new(),
                }
            }
            Err(Error::TrainingDiverged { epoch, last_good }) => {
                log::warn!("realization {k} diverged at epoch {epoch}; keeping its last good snapshot");
                save_checkpoint(&dir.join(checkpoint_name(k)), &last_good, &prep.normalizer, &meta("diverged"))?;
                Outcome {
                    row: ManifestRow {
                        realization: k,
                        seed,
                        status: "diverged".into(),
                        checkpoint: Some(checkpoint_name(k)),
                    },
                    realization: None,
                    message: format!("diverged at epoch {epoch}"),
                }
            }
            Err(e) => {
                log::warn!("realization {k} failed: {e}");
                let message = e.to_string();
                first_err.get_or_insert(e);
                Outcome {
                    row: ManifestRow {
                        realization: k,
                        seed,
                        status: "failed".into(),
                        checkpoint: None,
                    },
                    realization: None,
                    message,
                }
            }
        };
        outcomes.push(outcome);
    }
    write_manifest(&dir.join("manifest.csv"), &outcomes)?;
    let count = |s: &str| outcomes.iter().filter(|o| o.row.status == s).count();
    let summary = PretrainSummary {
        ok: count("ok"),
        diverged: count("diverged"),
        failed: count("failed"),
    };
    if summary.ok + summary.diverged == 0 {
        return Err(first_err.unwrap_or_else(|| Error::config("no realizations were trained")));
    }
    Ok(summary)
}

pub fn cmd_pretrain(cfg: &ExperimentConfig) -> Result<PretrainSummary> {
    pretrain(cfg, &load_dataset(cfg)?)
}

fn transfer_dir(cfg: &ExperimentConfig, method: TransferMethod, class: FuelClass) -> PathBuf {
    cfg.out.join("transfer").join(method.as_str()).join(class.column())
}

/// Adapts the pretrained realizations to each selected class with each
/// selected method. Only training and validation data are read.
pub fn transfer(cfg: &ExperimentConfig, sel: &Selection, prep: &Prepared) -> Result<()> {
    write_resolved(cfg)?;
    let methods = sel.methods(cfg);
    let pre_dir = cfg.out.join("pretrain");
    let pretrained: Vec<(usize, Option<RnnParams>)> = if methods.iter().any(|m| m.needs_pretrained()) {
        let rows = read_manifest(&pre_dir.join("manifest.csv"))?;
        let mut out = Vec::new();
        for row in rows.iter().filter(|r| r.realization < cfg.realizations) {
            match &row.checkpoint {
                Some(name) => out.push((row.realization, Some(load_checkpoint(&pre_dir.join(name), &prep.normalizer)?))),
                None => log::warn!("pretrained realization {} has no checkpoint; skipping it", row.realization),
            }
        }
        if out.is_empty() {
            return Err(Error::config("no pretrained checkpoints available"));
        }
        out
    } else {
        Vec::new()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;

    for class in sel.classes(cfg) {
        let data = prep.fit_data(class)?;
        for &method in &methods {
            let dir = transfer_dir(cfg, method, class);
            create_dir(&dir)?;
            let jobs: Vec<(usize, Option<&RnnParams>)> = if method.needs_pretrained() {
                pretrained.iter().map(|(k, p)| (*k, p.as_ref())).collect()
            } else {
                (0..cfg.realizations).map(|k| (k, None)).collect()
            };
            log::info!("{method} -> {class}: {} realization(s)", jobs.len());
            let results: Vec<_> = pool.install(|| {
                jobs.par_iter()
                    .map(|&(k, p)| {
                        (
                            k,
                            run_method(method, p, &data, &cfg.arch, &cfg.train_for(k), &cfg.grid, None),
                        )
                    })
                    .collect()
            });

            let mut outcomes = Vec::new();
            let mut shifts = String::from("realization,seed,alpha_f,alpha_i,train_rmse,zero_shift_train_rmse\n");
            for (k, result) in results {
                let seed = cfg.seed + k as u64;
                let meta = |status: &str| {
                    vec![
                        ("realization", k.to_string()),
                        ("seed", seed.to_string()),
                        ("class", class.column().to_string()),
                        ("method", method.as_str().to_string()),
                        ("status", status.to_string()),
                    ]
                };
                let row = |status: &str, checkpoint: bool| ManifestRow {
                    realization: k,
                    seed,
                    status: status.into(),
                    checkpoint: checkpoint.then(|| checkpoint_name(k)),
                };
                match result {
                    Ok(out) => {
                        save_checkpoint(&dir.join(checkpoint_name(k)), &out.params, &prep.normalizer, &meta("ok"))?;
                        if let Some(r) = &out.realization {
                            write_history_csv(&dir.join(format!("r{k:03}_history.csv")), &r.history)?;
                        }
                        if let Some(s) = &out.search {
                            write_surface_csv(&dir.join(format!("r{k:03}_surface.csv")), &s.surface)?;
                            shifts.push_str(&format!(
                                "{k},{seed},{},{},{},{}\n",
                                s.best.alpha_f, s.best.alpha_i, s.best_rmse, s.zero_rmse
                            ));
                        }
                        outcomes.push(Outcome {
                            row: row("ok", true),
                            realization: out.realization,
                            message: String::new(),
                        });
                    }
                    Err(Error::TrainingDiverged { epoch, last_good }) => {
                        log::warn!("{method} {class} realization {k} diverged at epoch {epoch}");
                        save_checkpoint(&dir.join(checkpoint_name(k)), &last_good, &prep.normalizer, &meta("diverged"))?;
                        outcomes.push(Outcome {
                            row: row("diverged", true),
                            realization: None,
                            message: format!("diverged at epoch {epoch}"),
                        });
                    }
                    Err(e @ Error::Config(_)) => return Err(e),
                    Err(e) => {
                        log::warn!("{method} {class} realization {k} failed: {e}");
                        outcomes.push(Outcome {
                            row: row("failed", false),
                            realization: None,
                            message: e.to_string(),
                        });
                    }
                }
            }
            if method.searches() {
                write_text(&dir.join("shifts.csv"), &shifts)?;
            }
            write_manifest(&dir.join("manifest.csv"), &outcomes)?;
        }
    }
    Ok(())
}

pub fn cmd_transfer(cfg: &ExperimentConfig, sel: &Selection) -> Result<()> {
    transfer(cfg, sel, &load_dataset(cfg)?)
}

/// Scores every adapted checkpoint on the test period and writes the reports.
pub fn evaluate(cfg: &ExperimentConfig, sel: &Selection, prep: &Prepared) -> Result<Vec<EvalReport>> {
    let report_dir = cfg.out.join("reports");
    create_dir(&report_dir)?;
    write_resolved(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let mut reports = Vec::new();
    let mut methods = sel.methods(cfg);
    methods.sort();
    let mut classes = sel.classes(cfg);
    classes.sort();
    for &method in &methods {
        for &class in &classes {
            let dir = transfer_dir(cfg, method, class);
            let manifest = dir.join("manifest.csv");
            if !manifest.exists() {
                log::info!("no {method} results for {class}; skipping");
                continue;
            }
            let mut models = Vec::new();
            for row in read_manifest(&manifest)? {
                if let Some(name) = &row.checkpoint {
                    models.push(load_checkpoint(&dir.join(name), &prep.normalizer)?);
                }
            }
            if models.is_empty() {
                return Err(Error::Evaluation(format!("no usable {method} checkpoints for {class}")));
            }
            let pairs: Vec<_> = pool.install(|| {
                models
                    .par_iter()
                    .map(|m| prep.test_pairs(m, class))
                    .collect::<Result<Vec<_>>>()
            })?;
            for filter in sel.filters(class) {
                let sets = pairs
                    .iter()
                    .map(|p| metrics(&filter_le(p, filter.threshold())))
                    .collect::<Result<Vec<MetricSet>>>();
                let sets = match sets {
                    Ok(s) => s,
                    Err(e) if filter != Filter::All => {
                        log::warn!("{method} {class} {}: {e}; filter skipped", filter.as_str());
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let report = aggregate(method.as_str(), class, filter, &sets)?;
                if filter == Filter::All {
                    let median = &models[report.median_index];
                    let preds = prep.test_predictions(median)?;
                    correlogram(&preds.values, CORRELOGRAM_LAGS)?
                        .write_csv(&report_dir.join(format!("acf_{}_{}.csv", method.as_str(), class.column())))?;
                }
                reports.push(report);
            }
        }
    }
    if reports.is_empty() {
        return Err(Error::Evaluation("nothing to evaluate; run `transfer` first".into()));
    }
    write_text(&report_dir.join("report.csv"), &report_csv(&reports))?;
    write_text(&report_dir.join("realizations.csv"), &realizations_csv(&reports))?;
    write_text(&report_dir.join("report.txt"), &render_table(&reports))?;
    Ok(reports)
}

pub fn cmd_evaluate(cfg: &ExperimentConfig, sel: &Selection) -> Result<Vec<EvalReport>> {
    evaluate(cfg, sel, &load_dataset(cfg)?)
}

/// Rebuilds the summary table from the per-realization report.
pub fn cmd_report(cfg: &ExperimentConfig, sel: &Selection) -> Result<String> {
    let path = cfg.out.join("reports").join("realizations.csv");
    if !path.exists() {
        return Err(Error::config(format!("{} not found; run `evaluate` first", path.display())));
    }
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
    let mut groups: BTreeMap<(TransferMethod, FuelClass, Filter), Vec<MetricSet>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let perr = |msg: String| Error::Parse { line, msg };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        if rec.len() < 8 {
            return Err(perr("expected at least 8 columns".into()));
        }
        let method = TransferMethod::parse(&rec[0]).ok_or_else(|| perr(format!("unknown method {}", &rec[0])))?;
        let class = FuelClass::parse(&rec[1]).ok_or_else(|| perr(format!("unknown class {}", &rec[1])))?;
        let filter = Filter::parse(&rec[2]).ok_or_else(|| perr(format!("unknown filter {}", &rec[2])))?;
        let num = |k: usize| rec[k].parse::<f64>().map_err(|_| perr(format!("bad number {:?}", &rec[k])));
        let set = MetricSet {
            r2: num(4)?,
            bias: num(5)?,
            rmse: num(6)?,
            n: rec[7].parse().map_err(|_| perr(format!("bad count {:?}", &rec[7])))?,
        };
        groups.entry((method, class, filter)).or_default().push(set);
    }
    let methods = sel.methods.clone();
    let classes = sel.classes.clone();
    let reports = groups
        .into_iter()
        .filter(|((m, c, f), _)| {
            methods.as_ref().is_none_or(|v| v.contains(m))
                && classes.as_ref().is_none_or(|v| v.contains(c))
                && sel.filter.is_none_or(|s| s == *f)
        })
        .map(|((m, c, f), sets)| aggregate(m.as_str(), c, f, &sets))
        .collect::<Result<Vec<_>>>()?;
    if reports.is_empty() {
        return Err(Error::Evaluation("no report rows match the selection".into()));
    }
    Ok(render_table(&reports))
}
