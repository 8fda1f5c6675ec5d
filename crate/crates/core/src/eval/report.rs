use std::fmt::Write as _;

use super::metrics::MetricSet;
use crate::data::FuelClass;
use crate::error::{Error, Result};

/// Observation filter applied before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Filter {
    All,
    /// Observations of at most 30%.
    Le30,
}

impl Filter {
    pub const LE30_THRESHOLD: f64 = 30.0;

    pub fn as_str(self) -> &'static str {
        match self {
            Filter::All => "all",
            Filter::Le30 => "le30",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(Filter::All),
            "le30" => Some(Filter::Le30),
            _ => None,
        }
    }

    pub fn threshold(self) -> f64 {
        match self {
            Filter::All => f64::INFINITY,
            Filter::Le30 => Self::LE30_THRESHOLD,
        }
    }

    /// Filters reported for a class: the wet-prone heavy fuels are only
    /// reported unfiltered.
    pub fn for_class(class: FuelClass) -> &'static [Filter] {
        if class.is_fine() {
            &[Filter::All, Filter::Le30]
        } else {
            &[Filter::All]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; zero when there is a single realization.
    pub std: f64,
}

impl Summary {
    /// Order-independent: values are sorted before summing.
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.collect();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            let mut sq: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
            sq.sort_by(f64::total_cmp);
            (sq.iter().sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub class: FuelClass,
    pub filter: Filter,
    pub realizations: Vec<MetricSet>,
    pub r2: Summary,
    pub bias: Summary,
    pub rmse: Summary,
    /// Pairs per realization (the largest, should they differ).
    pub n: usize,
    /// Set when only one realization was available, so `std` is not informative.
    pub single_realization: bool,
    /// Index of the realization with median RMSE (the lower median for an
    /// even count; ties broken by index).
    pub median_index: usize,
}

pub fn aggregate(method: &str, class: FuelClass, filter: Filter, sets: &[MetricSet]) -> Result<EvalReport> {
    if sets.is_empty() {
        return Err(Error::Evaluation(format!("no realizations to aggregate for {method} {class}")));
    }
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[a].rmse.total_cmp(&sets[b].rmse).then(a.cmp(&b)));
    Ok(EvalReport {
        method: method.to_string(),
        class,
        filter,
        realizations: sets.to_vec(),
        r2: Summary::of(sets.iter().map(|m| m.r2)),
        bias: Summary::of(sets.iter().map(|m| m.bias)),
        rmse: Summary::of(sets.iter().map(|m| m.rmse)),
        n: sets.iter().map(|m| m.n).max().unwrap_or(0),
        single_realization: sets.len() == 1,
        median_index: order[(order.len() - 1) / 2],
    })
}

pub const REPORT_HEADER: &str = "method,class,filter,r2_mean,r2_std,bias_mean,bias_std,rmse_mean,rmse_std,n";

/// Summary rows in the report CSV layout.
pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.class,
            r.filter.as_str(),
            r.r2.mean,
            r.r2.std,
            r.bias.mean,
            r.bias.std,
            r.rmse.mean,
            r.rmse.std,
            r.n
        );
    }
    s
}

/// One row per realization, from which every summary can be recomputed.
pub fn realizations_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("method,class,filter,realization,r2,bias,rmse,n,median\n");
    for r in reports {
        for (k, m) in r.realizations.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{k},{},{},{},{},{}",
                r.method,
                r.class,
                r.filter.as_str(),
                m.r2,
                m.bias,
                m.rmse,
                m.n,
                u8::from(k == r.median_index)
            );
        }
    }
    s
}

/// Fixed-width text table of `mean ± std` cells.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut s = format!(
        "{:<20} {:<7} {:<6} {:>17} {:>17} {:>17} {:>6}\n",
        "method", "class", "filter", "R2", "bias", "RMSE", "n"
    );
    let cell = |x: &Summary| format!("{:.3} ± {:.3}", x.mean, x.std);
    for r in reports {
        let _ = writeln!(
            s,
            "{:<20} {:<7} {:<6} {:>17} {:>17} {:>17} {:>6}{}",
            r.method,
            r.class.label(),
            r.filter.as_str(),
            cell(&r.r2),
            cell(&r.bias),
            cell(&r.rmse),
            r.n,
            if r.single_realization { "  (1 run)" } else { "" }
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rmse: f64) -> MetricSet {
        MetricSet {
            r2: 1.0 - rmse / 10.0,
            bias: rmse / 2.0,
            rmse,
            n: 12,
        }
    }

    #[test]
    fn hand_aggregate() {
        let r = aggregate("time-warp", FuelClass::Fm1, Filter::All, &[set(3.0), set(1.0), set(2.0)]).unwrap();
        assert_eq!((r.rmse.mean, r.rmse.std), (2.0, 1.0));
        assert_eq!(r.realizations[r.median_index].rmse, 2.0);
        assert!(!r.single_realization);
    }

    #[test]
    fn single_run_is_flagged() {
        let r = aggregate("x", FuelClass::Fm10, Filter::Le30, &[set(1.5)]).unwrap();
        assert_eq!(r.rmse.std, 0.0);
        assert!(r.single_realization);
        assert!(render_table(&[r]).contains("(1 run)"));
        assert!(aggregate("x", FuelClass::Fm10, Filter::All, &[]).is_err());
    }

    #[test]
    fn permutation_invariant() {
        let a = [set(0.1), set(0.7), set(0.2), set(1.3), set(0.33)];
        let mut b = a;
        b.reverse();
        let (ra, rb) = (
            aggregate("m", FuelClass::Fm100, Filter::All, &a).unwrap(),
            aggregate("m", FuelClass::Fm100, Filter::All, &b).unwrap(),
        );
        assert_eq!(report_csv(std::slice::from_ref(&ra)), report_csv(std::slice::from_ref(&rb)));
        assert_eq!(ra.realizations[ra.median_index], rb.realizations[rb.median_index]);
    }

    #[test]
    fn csv_layout_and_filters() {
        let r = aggregate("no-transfer", FuelClass::Fm1, Filter::Le30, &[set(1.0), set(2.0)]).unwrap();
        let csv = report_csv(std::slice::from_ref(&r));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        assert!(lines.next().unwrap().starts_with("no-transfer,FM1,le30,"));
        assert_eq!(realizations_csv(&[r]).lines().count(), 3);
        assert_eq!(Filter::for_class(FuelClass::Fm10), &[Filter::All, Filter::Le30]);
        assert_eq!(Filter::for_class(FuelClass::Fm1000), &[Filter::All]);
    }
}
