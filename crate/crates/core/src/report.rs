//! Evaluation reports: per-case comparison rows, column summaries,
//! paired comparisons and boxplot data, plus their CSV/JSON forms.
//!
//! All arithmetic runs on unrounded values; rounding happens only when a
//! CSV is written. Each quantity has a fixed number of decimals.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::CaseMetrics;
use crate::stats::{self, FiveNumber, StatSummary, StatsError};

/// Source label of the automatic segmentation in pairings.
pub const ALGORITHM: &str = "alg";

/// Significance threshold carried as report metadata.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least 2 cases for statistics, got {0}")]
    TooFewCases(usize),
    #[error("case '{case}' reports different {what} for source '{source_label}'")]
    InconsistentSource {
        case: String,
        source_label: String,
        what: &'static str,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid row: {0}")]
    InvalidRow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    VolumeCm3,
    VolumeMm3,
    Voxels,
    DscPercent,
    HdVoxels,
    Minutes,
    ElapsedSeconds,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::VolumeCm3 => "volume_cm3",
            Quantity::VolumeMm3 => "volume",
            Quantity::Voxels => "voxels",
            Quantity::DscPercent => "dsc_percent",
            Quantity::HdVoxels => "hd_voxels",
            Quantity::Minutes => "minutes",
            Quantity::ElapsedSeconds => "elapsed_seconds",
        }
    }

    /// Decimal places used in CSV output.
    pub fn decimals(self) -> usize {
        match self {
            Quantity::VolumeCm3 => 2,
            Quantity::VolumeMm3 => 1,
            Quantity::Voxels => 1,
            Quantity::DscPercent => 2,
            Quantity::HdVoxels => 2,
            Quantity::Minutes => 2,
            Quantity::ElapsedSeconds => 3,
        }
    }
}

/// One mask-vs-mask comparison for one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub case_id: String,
    pub first: String,
    pub second: String,
    /// Dice as a fraction.
    pub dsc: f64,
    pub hd: f64,
    pub volume_first_mm3: f64,
    pub volume_second_mm3: f64,
    pub voxels_first: u64,
    pub voxels_second: u64,
    /// Machine time load → segment → save, for rows involving the algorithm.
    pub elapsed_seconds: Option<f64>,
    /// Engine-only segmentation time.
    pub segment_seconds: Option<f64>,
    /// User-reported interaction time per source, in minutes.
    pub minutes_first: Option<f64>,
    pub minutes_second: Option<f64>,
}

impl PairwiseRow {
    pub fn metrics(&self) -> CaseMetrics {
        CaseMetrics {
            dsc: self.dsc,
            hd: self.hd,
            volume_a_mm3: self.volume_first_mm3,
            volume_b_mm3: self.volume_second_mm3,
            voxels_a: self.voxels_first,
            voxels_b: self.voxels_second,
            elapsed_seconds: self.elapsed_seconds.unwrap_or(0.0),
        }
    }

    pub fn pairing(&self) -> String {
        format!("{}:{}", self.first, self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub quantity: Quantity,
    /// A source label (`A`, `alg`) or a pairing (`A:alg`).
    pub subject: String,
    pub summary: StatSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub n: usize,
    pub t: Option<f64>,
    pub df: f64,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub slope_b: Option<f64>,
    pub slope_se: Option<f64>,
}

impl ComparisonStats {
    /// Paired test of `first − second`, Pearson r, and the origin
    /// regression of `second` on `first`. Undefined entries (zero
    /// variance, all-zero regressor) are `None`.
    pub fn compute(first: &[f64], second: &[f64]) -> Result<Self, StatsError> {
        if first.len() != second.len() {
            return Err(StatsError::LengthMismatch(first.len(), second.len()));
        }
        let n = first.len();
        if n < 2 {
            return Err(StatsError::TooFewValues { needed: 2, got: n });
        }
        let defined = |e: &StatsError| matches!(e, StatsError::ZeroVariance | StatsError::DegenerateX);
        let t_test = match stats::paired_t_two_sided(first, second) {
            Ok(t) => Some(t),
            Err(e) if defined(&e) => None,
            Err(e) => return Err(e),
        };
        let r = match stats::pearson_r(first, second) {
            Ok(r) => Some(r),
            Err(e) if defined(&e) => None,
            Err(e) => return Err(e),
        };
        let fit = match stats::regression_through_origin(first, second) {
            Ok(f) => Some(f),
            Err(e) if defined(&e) => None,
            Err(e) => return Err(e),
        };
        Ok(ComparisonStats {
            n,
            t: t_test.map(|t| t.t),
            df: (n - 1) as f64,
            p: t_test.map(|t| t.p),
            r,
            slope_b: fit.map(|f| f.slope),
            slope_se: fit.map(|f| f.slope_se),
        })
    }

    pub fn significant(&self) -> Option<bool> {
        self.p.map(|p| p < SIGNIFICANCE_LEVEL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: Quantity,
    pub first: String,
    pub second: String,
    pub stats: ComparisonStats,
}

/// t-statistic for the difference between two origin-regression slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeComparison {
    pub quantity: Quantity,
    pub first_pairing: String,
    pub second_pairing: String,
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub quantity: Quantity,
    pub subject: String,
    pub five: FiveNumber,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<PairwiseRow>,
    pub summaries: Vec<SummaryRow>,
    pub comparisons: Vec<ComparisonRow>,
    pub slope_comparisons: Vec<SlopeComparison>,
    pub boxplots: Vec<BoxplotRow>,
    pub significance_level: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct SourceValues {
    volume_mm3: f64,
    voxels: u64,
    minutes: Option<f64>,
}

/// Per-case, per-source measurements recovered from the pairwise rows.
struct SourceTable {
    cases: Vec<String>,
    sources: Vec<String>,
    values: BTreeMap<(String, String), SourceValues>,
    elapsed: BTreeMap<String, f64>,
}

fn push_unique(list: &mut Vec<String>, item: &str) {
    if !list.iter().any(|s| s == item) {
        list.push(item.to_string());
    }
}

impl SourceTable {
    fn from_rows(rows: &[PairwiseRow]) -> Result<Self, ReportError> {
        let mut table = SourceTable {
            cases: Vec::new(),
            sources: Vec::new(),
            values: BTreeMap::new(),
            elapsed: BTreeMap::new(),
        };
        for row in rows {
            push_unique(&mut table.cases, &row.case_id);
            for (label, vol, vox, minutes) in [
                (&row.first, row.volume_first_mm3, row.voxels_first, row.minutes_first),
                (&row.second, row.volume_second_mm3, row.voxels_second, row.minutes_second),
            ] {
                push_unique(&mut table.sources, label);
                let key = (row.case_id.clone(), label.clone());
                let incoming = SourceValues {
                    volume_mm3: vol,
                    voxels: vox,
                    minutes,
                };
                match table.values.get_mut(&key) {
                    None => {
                        table.values.insert(key, incoming);
                    }
                    Some(existing) => {
                        let inconsistent = |what| ReportError::InconsistentSource {
                            case: row.case_id.clone(),
                            source_label: label.clone(),
                            what,
                        };
                        if existing.voxels != vox {
                            return Err(inconsistent("voxel counts"));
                        }
                        if existing.volume_mm3 != vol {
                            return Err(inconsistent("volumes"));
                        }
                        if existing.minutes.is_none() {
                            existing.minutes = minutes;
                        }
                    }
                }
            }
            if let Some(e) = row.elapsed_seconds {
                table.elapsed.entry(row.case_id.clone()).or_insert(e);
            }
        }
        // The algorithm sorts after every rater.
        if let Some(pos) = table.sources.iter().position(|s| s == ALGORITHM) {
            let alg = table.sources.remove(pos);
            table.sources.push(alg);
        }
        Ok(table)
    }

    fn column(&self, source: &str, f: impl Fn(&SourceValues) -> Option<f64>) -> Vec<(String, f64)> {
        self.cases
            .iter()
            .filter_map(|c| {
                self.values
                    .get(&(c.clone(), source.to_string()))
                    .and_then(&f)
                    .map(|v| (c.clone(), v))
            })
            .collect()
    }
}

fn values(column: &[(String, f64)]) -> Vec<f64> {
    column.iter().map(|(_, v)| *v).collect()
}

/// Pairs two per-case columns on their shared cases.
fn align(a: &[(String, f64)], b: &[(String, f64)]) -> (Vec<f64>, Vec<f64>) {
    let lookup: BTreeMap<&str, f64> = b.iter().map(|(c, v)| (c.as_str(), *v)).collect();
    a.iter()
        .filter_map(|(c, va)| lookup.get(c.as_str()).map(|vb| (*va, *vb)))
        .unzip()
}

/// Summaries, comparisons and boxplot data from per-case rows.
pub fn aggregate(rows: Vec<PairwiseRow>) -> Result<EvaluationReport, ReportError> {
    let table = SourceTable::from_rows(&rows)?;
    if table.cases.len() < 2 {
        return Err(ReportError::TooFewCases(table.cases.len()));
    }

    let mut pairings: Vec<(String, String)> = Vec::new();
    for row in &rows {
        let p = (row.first.clone(), row.second.clone());
        if !pairings.contains(&p) {
            pairings.push(p);
        }
    }

    let mut summaries = Vec::new();
    let mut boxplots = Vec::new();
    let mut summarize = |quantity: Quantity, subject: &str, vals: &[f64], boxplot: bool| -> Result<(), ReportError> {
        if vals.len() >= 2 {
            summaries.push(SummaryRow {
                quantity,
                subject: subject.to_string(),
                summary: stats::descriptive(vals)?,
            });
        }
        if boxplot && !vals.is_empty() {
            boxplots.push(BoxplotRow {
                quantity,
                subject: subject.to_string(),
                five: stats::five_number(vals)?,
            });
        }
        Ok(())
    };

    for source in &table.sources {
        let vol = values(&table.column(source, |v| Some(v.volume_mm3 / 1000.0)));
        summarize(Quantity::VolumeCm3, source, &vol, true)?;
    }
    for source in &table.sources {
        let vox = values(&table.column(source, |v| Some(v.voxels as f64)));
        summarize(Quantity::Voxels, source, &vox, true)?;
    }
    for source in &table.sources {
        let minutes = values(&table.column(source, |v| v.minutes));
        summarize(Quantity::Minutes, source, &minutes, false)?;
    }
    for (first, second) in &pairings {
        let pair_rows = || rows.iter().filter(|r| &r.first == first && &r.second == second);
        let subject = format!("{first}:{second}");
        let dsc: Vec<f64> = pair_rows().map(|r| r.dsc * 100.0).collect();
        summarize(Quantity::DscPercent, &subject, &dsc, true)?;
        let hd: Vec<f64> = pair_rows().map(|r| r.hd).collect();
        summarize(Quantity::HdVoxels, &subject, &hd, true)?;
    }
    let elapsed: Vec<f64> = table
        .cases
        .iter()
        .filter_map(|c| table.elapsed.get(c).copied())
        .collect();
    summarize(Quantity::ElapsedSeconds, ALGORITHM, &elapsed, false)?;

    let mut comparisons = Vec::new();
    for quantity in [Quantity::VolumeMm3, Quantity::Voxels] {
        for (first, second) in &pairings {
            let pick = |v: &SourceValues| {
                Some(match quantity {
                    Quantity::VolumeMm3 => v.volume_mm3,
                    _ => v.voxels as f64,
                })
            };
            let (a, b) = align(&table.column(first, pick), &table.column(second, pick));
            if a.len() < 2 {
                continue;
            }
            comparisons.push(ComparisonRow {
                quantity,
                first: first.clone(),
                second: second.clone(),
                stats: ComparisonStats::compute(&a, &b)?,
            });
        }
    }

    let mut slope_comparisons = Vec::new();
    for (i, a) in comparisons.iter().enumerate() {
        for b in comparisons.iter().skip(i + 1).filter(|b| b.quantity == a.quantity) {
            let t = match (a.stats.slope_b, a.stats.slope_se, b.stats.slope_b, b.stats.slope_se) {
                (Some(s1), Some(e1), Some(s2), Some(e2)) => stats::slope_difference_t(
                    &stats::OriginFit { slope: s1, slope_se: e1 },
                    &stats::OriginFit { slope: s2, slope_se: e2 },
                ),
                _ => None,
            };
            slope_comparisons.push(SlopeComparison {
                quantity: a.quantity,
                first_pairing: format!("{}:{}", a.first, a.second),
                second_pairing: format!("{}:{}", b.first, b.second),
                t,
            });
        }
    }

    Ok(EvaluationReport {
        rows,
        summaries,
        comparisons,
        slope_comparisons,
        boxplots,
        significance_level: SIGNIFICANCE_LEVEL,
    })
}

/// Fixed-point formatting that never prints `-0.00`.
pub fn fmt_fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn fmt_opt(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(|| "NA".to_string(), |v| fmt_fixed(v, decimals))
}

const ROW_HEADER: [&str; 13] = [
    "case_id",
    "first",
    "second",
    "dsc_percent",
    "hd_voxels",
    "volume_first_mm3",
    "volume_second_mm3",
    "voxels_first",
    "voxels_second",
    "elapsed_seconds",
    "segment_seconds",
    "minutes_first",
    "minutes_second",
];

fn empty_or(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(String::new, |v| fmt_fixed(v, decimals))
}

fn csv_bytes(header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| ReportError::Io(e.into_error()))
}

pub fn rows_csv(rows: &[PairwiseRow]) -> Result<Vec<u8>, ReportError> {
    csv_bytes(
        &ROW_HEADER,
        rows.iter().map(|r| {
            vec![
                r.case_id.clone(),
                r.first.clone(),
                r.second.clone(),
                fmt_fixed(r.dsc * 100.0, Quantity::DscPercent.decimals()),
                fmt_fixed(r.hd, Quantity::HdVoxels.decimals()),
                fmt_fixed(r.volume_first_mm3, Quantity::VolumeMm3.decimals()),
                fmt_fixed(r.volume_second_mm3, Quantity::VolumeMm3.decimals()),
                r.voxels_first.to_string(),
                r.voxels_second.to_string(),
                empty_or(r.elapsed_seconds, Quantity::ElapsedSeconds.decimals()),
                empty_or(r.segment_seconds, Quantity::ElapsedSeconds.decimals()),
                empty_or(r.minutes_first, Quantity::Minutes.decimals()),
                empty_or(r.minutes_second, Quantity::Minutes.decimals()),
            ]
        }),
    )
}

pub fn summary_csv(report: &EvaluationReport) -> Result<Vec<u8>, ReportError> {
    csv_bytes(
        &["quantity", "subject", "n", "min", "max", "mean", "sd"],
        report.summaries.iter().map(|s| {
            let d = s.quantity.decimals();
            vec![
                s.quantity.name().to_string(),
                s.subject.clone(),
                s.summary.n.to_string(),
                fmt_fixed(s.summary.min, d),
                fmt_fixed(s.summary.max, d),
                fmt_fixed(s.summary.mean, d),
                fmt_fixed(s.summary.sd, d),
            ]
        }),
    )
}

pub fn comparisons_csv(report: &EvaluationReport) -> Result<Vec<u8>, ReportError> {
    csv_bytes(
        &["quantity", "first", "second", "p", "r"],
        report.comparisons.iter().map(|c| {
            vec![
                c.quantity.name().to_string(),
                c.first.clone(),
                c.second.clone(),
                fmt_opt(c.stats.p, 3),
                fmt_opt(c.stats.r, 3),
            ]
        }),
    )
}

/// Regression lines through the origin, ready for plotting.
pub fn regression_csv(report: &EvaluationReport) -> Result<Vec<u8>, ReportError> {
    csv_bytes(
        &["quantity", "first", "second", "n", "t", "df", "slope", "slope_se"],
        report.comparisons.iter().map(|c| {
            vec![
                c.quantity.name().to_string(),
                c.first.clone(),
                c.second.clone(),
                c.stats.n.to_string(),
                fmt_opt(c.stats.t, 3),
                fmt_fixed(c.stats.df, 0),
                fmt_opt(c.stats.slope_b, 4),
                fmt_opt(c.stats.slope_se, 4),
            ]
        }),
    )
}

pub fn boxplot_csv(report: &EvaluationReport) -> Result<Vec<u8>, ReportError> {
    csv_bytes(
        &["quantity", "subject", "min", "q1", "median", "q3", "max"],
        report.boxplots.iter().map(|b| {
            let d = b.quantity.decimals();
            vec![
                b.quantity.name().to_string(),
                b.subject.clone(),
                fmt_fixed(b.five.min, d),
                fmt_fixed(b.five.q1, d),
                fmt_fixed(b.five.median, d),
                fmt_fixed(b.five.q3, d),
                fmt_fixed(b.five.max, d),
            ]
        }),
    )
}

pub fn report_json(report: &EvaluationReport) -> Result<Vec<u8>, ReportError> {
    let mut v = serde_json::to_vec_pretty(report)?;
    v.push(b'\n');
    Ok(v)
}

pub const CSV_FILES: [&str; 5] = [
    "cases_pairwise.csv",
    "summary.csv",
    "comparisons.csv",
    "regression.csv",
    "boxplot.csv",
];

/// Writes every CSV plus `report.json` into `dir`.
pub fn emit(report: &EvaluationReport, dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("cases_pairwise.csv"), rows_csv(&report.rows)?)?;
    std::fs::write(dir.join("summary.csv"), summary_csv(report)?)?;
    std::fs::write(dir.join("comparisons.csv"), comparisons_csv(report)?)?;
    std::fs::write(dir.join("regression.csv"), regression_csv(report)?)?;
    std::fs::write(dir.join("boxplot.csv"), boxplot_csv(report)?)?;
    std::fs::write(dir.join("report.json"), report_json(report)?)?;
    Ok(())
}

#[derive(Deserialize)]
struct RowRecord {
    case_id: String,
    first: String,
    second: String,
    dsc_percent: f64,
    hd_voxels: f64,
    volume_first_mm3: f64,
    volume_second_mm3: f64,
    voxels_first: u64,
    voxels_second: u64,
    elapsed_seconds: Option<f64>,
    segment_seconds: Option<f64>,
    minutes_first: Option<f64>,
    minutes_second: Option<f64>,
}

/// Parses a `cases_pairwise.csv` table.
pub fn parse_rows_csv(data: &[u8]) -> Result<Vec<PairwiseRow>, ReportError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data);
    let mut rows = Vec::new();
    for rec in reader.deserialize::<RowRecord>() {
        let r = rec?;
        if !(0.0..=100.0).contains(&r.dsc_percent) || r.hd_voxels < 0.0 {
            return Err(ReportError::InvalidRow(format!(
                "case {}: dsc {} / hd {} out of range",
                r.case_id, r.dsc_percent, r.hd_voxels
            )));
        }
        rows.push(PairwiseRow {
            case_id: r.case_id,
            first: r.first,
            second: r.second,
            dsc: r.dsc_percent / 100.0,
            hd: r.hd_voxels,
            volume_first_mm3: r.volume_first_mm3,
            volume_second_mm3: r.volume_second_mm3,
            voxels_first: r.voxels_first,
            voxels_second: r.voxels_second,
            elapsed_seconds: r.elapsed_seconds,
            segment_seconds: r.segment_seconds,
            minutes_first: r.minutes_first,
            minutes_second: r.minutes_second,
        });
    }
    Ok(rows)
}

pub fn parse_report_json(data: &[u8]) -> Result<EvaluationReport, ReportError> {
    Ok(serde_json::from_slice(data)?)
}
