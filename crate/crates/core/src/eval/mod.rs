//! Accuracy metrics, observation filtering, aggregation over realizations,
//! and correlograms of hourly predictions.

mod acf;
mod metrics;
mod report;

pub use acf::{acf, correlogram, pacf, Correlogram};
pub use metrics::{filter_le, metrics, MetricSet};
pub use report::{aggregate, realizations_csv, render_table, report_csv, EvalReport, Filter, Summary, REPORT_HEADER};
