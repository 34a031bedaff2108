//! Rank-then-average scoring across cases and metrics.
//!
//! For every (case, metric) cell the methods are ranked 1 = best, tied
//! methods sharing the mean of their positions. A method's score is its mean
//! rank over all cells, so lower is better and the range is `[1, M]`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::intensity::average_ranks;
use crate::metrics::MetricReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Mse,
    Psnr,
    Ssim,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mse, Metric::Psnr, Metric::Ssim];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
        }
    }

    fn value(self, r: &MetricReport) -> f64 {
        match self {
            Metric::Mse => r.mse,
            Metric::Psnr => r.psnr,
            Metric::Ssim => r.ssim,
        }
    }

    /// Key where smaller is better.
    fn badness(self, r: &MetricReport) -> f64 {
        match self {
            Metric::Mse => r.mse,
            Metric::Psnr | Metric::Ssim => -self.value(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    /// Sorted lexicographically.
    pub methods: Vec<String>,
    /// Sorted lexicographically.
    pub cases: Vec<String>,
    /// Mean rank per method, aligned with `methods`.
    pub scores: Vec<f64>,
    ranks: Vec<f64>,
}

impl RankTable {
    /// Rank of `method` (index into `methods`) for one case and metric.
    pub fn rank(&self, case: usize, metric: Metric, method: usize) -> f64 {
        let m = self.methods.len();
        let metric = Metric::ALL.iter().position(|&x| x == metric).unwrap();
        self.ranks[(case * 3 + metric) * m + method]
    }

    pub fn score_of(&self, method_id: &str) -> Option<f64> {
        self.methods
            .iter()
            .position(|m| m == method_id)
            .map(|i| self.scores[i])
    }

    /// `(method, score)` ascending by score, ties by method id.
    pub fn sorted(&self) -> Vec<(&str, f64)> {
        let mut rows: Vec<(&str, f64)> = self
            .methods
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().copied())
            .collect();
        rows.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        rows
    }
}

/// Builds the rank table from a complete (case x method) grid of reports.
pub fn rank_methods(reports: &[MetricReport]) -> Result<RankTable> {
    let mut grid: BTreeMap<&str, BTreeMap<&str, &MetricReport>> = BTreeMap::new();
    for r in reports {
        if [r.mse, r.psnr, r.ssim].iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidMetric {
                case_id: r.case_id.clone(),
                method_id: r.method_id.clone(),
            });
        }
        let row = grid.entry(&r.case_id).or_default();
        if row.insert(&r.method_id, r).is_some() {
            return Err(Error::DuplicateReport {
                case_id: r.case_id.clone(),
                method_id: r.method_id.clone(),
            });
        }
    }
    let mut methods: Vec<&str> = reports.iter().map(|r| r.method_id.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();
    if methods.len() < 2 {
        return Err(Error::TooFewMethods {
            found: methods.len(),
        });
    }

    let m = methods.len();
    let mut ranks = Vec::with_capacity(grid.len() * 3 * m);
    let mut totals = alloc::vec![0.0; m];
    let mut row: Vec<&MetricReport> = Vec::with_capacity(m);
    for (case_id, by_method) in &grid {
        row.clear();
        for method in &methods {
            match by_method.get(method) {
                Some(r) => row.push(r),
                None => {
                    return Err(Error::IncompleteGrid {
                        case_id: String::from(*case_id),
                        method_id: String::from(*method),
                    })
                }
            }
        }
        for metric in Metric::ALL {
            let keys: Vec<f64> = row.iter().map(|r| metric.badness(r)).collect();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_unstable_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap_or(Ordering::Equal));
            let cell = average_ranks(&keys, &order);
            for (t, r) in totals.iter_mut().zip(&cell) {
                *t += r;
            }
            ranks.extend(cell);
        }
    }
    let cells = (grid.len() * 3) as f64;
    Ok(RankTable {
        methods: methods.iter().map(|&s| s.into()).collect(),
        cases: grid.keys().map(|&s| s.into()).collect(),
        scores: totals.iter().map(|t| t / cells).collect(),
        ranks,
    })
}
