//! Rank-based evaluation of explainers: Hits@k, MRR, MΔR, equal-rank
//! cohorts, report files and the algorithm comparison table.
//!
//! Report JSON rounds every real to 6 significant digits and keeps the
//! unrounded value next to it (`{"value": .., "full": ..}`).
//!
//! Per-triple CSV columns: `subject, relation, object, rank_before,
//! rank_after, reciprocal_before, reciprocal_after, delta_r, changed`.
//! Pareto CSV columns: `subject, relation, object, algorithm, length, psi,
//! explanation` with explanation triples joined by `;`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::dominates;
use crate::explainers::ExplanationRun;
use crate::kg::{KnowledgeGraph, Triple};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRow {
    pub triple: Triple,
    pub rank_before: usize,
    pub rank_after: usize,
}

impl RankRow {
    pub fn delta(&self) -> i64 {
        self.rank_after as i64 - self.rank_before as i64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    rows: Vec<RankRow>,
    /// Shared `rank_before` of every row, when the table is a cohort.
    cohort: Option<usize>,
}

impl RankTable {
    /// Ranks must be at least 1 and triples unique.
    pub fn new(rows: Vec<RankRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if r.rank_before == 0 || r.rank_after == 0 {
                return Err(Error::domain(format!("rank 0 for {:?}", r.triple)));
            }
            if !seen.insert(r.triple) {
                return Err(Error::domain(format!("duplicate row for {:?}", r.triple)));
            }
        }
        Ok(Self { rows, cohort: None })
    }

    pub fn rows(&self) -> &[RankRow] {
        &self.rows
    }

    pub fn cohort(&self) -> Option<usize> {
        self.cohort
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn ranks(&self, which: Which) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(move |r| match which {
            Which::Before => r.rank_before,
            Which::After => r.rank_after,
        })
    }

    fn nonempty(&self) -> Result<()> {
        if self.rows.is_empty() {
            Err(Error::domain("rank table is empty"))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    Before,
    After,
}

/// Rows whose selected rank is `≤ k`.
pub fn hits_at_k(table: &RankTable, k: usize, which: Which) -> Result<usize> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    table.nonempty()?;
    Ok(table.ranks(which).filter(|&r| r <= k).count())
}

/// [`hits_at_k`] divided by the table size.
pub fn hits_fraction(table: &RankTable, k: usize, which: Which) -> Result<f64> {
    Ok(hits_at_k(table, k, which)? as f64 / table.len() as f64)
}

pub fn mrr(table: &RankTable, which: Which) -> Result<f64> {
    table.nonempty()?;
    Ok(table.ranks(which).map(|r| 1.0 / r as f64).sum::<f64>() / table.len() as f64)
}

pub fn mean_rank(table: &RankTable, which: Which) -> Result<f64> {
    table.nonempty()?;
    Ok(table.ranks(which).map(|r| r as f64).sum::<f64>() / table.len() as f64)
}

/// Mean of `rank_after - rank_before`; checked against the difference of
/// the mean ranks.
pub fn m_delta_r(table: &RankTable) -> Result<f64> {
    table.nonempty()?;
    let n = table.len() as f64;
    let value = table.rows.iter().map(|r| r.delta() as f64).sum::<f64>() / n;
    let (before, after) = (
        mean_rank(table, Which::Before)?,
        mean_rank(table, Which::After)?,
    );
    let tolerance = 1e-12 * before.max(after).max(1.0);
    assert!(
        (value - (after - before)).abs() <= tolerance,
        "mean rank difference {value} disagrees with difference of means {}",
        after - before
    );
    Ok(value)
}

/// Rows with `rank_before == rank`, tagged with that cohort.
pub fn cohort_filter(table: &RankTable, rank: usize) -> RankTable {
    let rows: Vec<RankRow> = table
        .rows
        .iter()
        .copied()
        .filter(|r| r.rank_before == rank)
        .collect();
    if rows.is_empty() {
        log::warn!("no row has rank {rank}; cohort is empty");
    }
    RankTable {
        rows,
        cohort: Some(rank),
    }
}

/// A real rounded to 6 significant digits, with the unrounded value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub value: f64,
    pub full: f64,
}

impl Measure {
    pub fn new(full: f64) -> Self {
        Self {
            value: round_significant(full, 6),
            full,
        }
    }
}

pub fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitsAtK {
    pub k: usize,
    pub before: usize,
    pub after: usize,
    pub before_percent: Measure,
    pub after_percent: Measure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outlier {
    pub triple: Triple,
    pub delta_r: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub label: String,
    pub cohort: Option<usize>,
    pub count: usize,
    pub mrr_before: Measure,
    pub mrr_after: Measure,
    pub mean_rank_before: Measure,
    pub mean_rank_after: Measure,
    pub hits: Vec<HitsAtK>,
    pub m_delta_r: Measure,
    /// Mean length of the runs' best explanations.
    pub mean_length: Option<Measure>,
    /// Largest rank increase and the triple it happened to.
    pub max_delta_r: Option<Outlier>,
    pub per_triple_delta_r: Vec<i64>,
}

impl MetricsReport {
    /// Every run's prediction must be a row of `table`.
    pub fn build(
        label: &str,
        table: &RankTable,
        runs: &[ExplanationRun],
        ks: &[usize],
    ) -> Result<Self> {
        table.nonempty()?;
        let triples: HashSet<Triple> = table.rows.iter().map(|r| r.triple).collect();
        if let Some(r) = runs.iter().find(|r| !triples.contains(&r.prediction)) {
            return Err(Error::domain(format!(
                "run for {:?} has no row in the rank table",
                r.prediction
            )));
        }
        let lengths: Vec<usize> = runs
            .iter()
            .filter_map(|r| r.best_candidate().map(|c| c.explanation.len()))
            .collect();
        let mean_length = (!lengths.is_empty())
            .then(|| Measure::new(lengths.iter().sum::<usize>() as f64 / lengths.len() as f64));
        let hits = ks
            .iter()
            .map(|&k| {
                Ok(HitsAtK {
                    k,
                    before: hits_at_k(table, k, Which::Before)?,
                    after: hits_at_k(table, k, Which::After)?,
                    before_percent: Measure::new(100.0 * hits_fraction(table, k, Which::Before)?),
                    after_percent: Measure::new(100.0 * hits_fraction(table, k, Which::After)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let max_delta_r = table
            .rows
            .iter()
            .fold(None, |acc: Option<&RankRow>, r| match acc {
                Some(b) if b.delta() >= r.delta() => Some(b),
                _ => Some(r),
            })
            .map(|r| Outlier {
                triple: r.triple,
                delta_r: r.delta(),
            });
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            label: label.to_owned(),
            cohort: table.cohort,
            count: table.len(),
            mrr_before: Measure::new(mrr(table, Which::Before)?),
            mrr_after: Measure::new(mrr(table, Which::After)?),
            mean_rank_before: Measure::new(mean_rank(table, Which::Before)?),
            mean_rank_after: Measure::new(mean_rank(table, Which::After)?),
            hits,
            m_delta_r: Measure::new(m_delta_r(table)?),
            mean_length,
            max_delta_r,
            per_triple_delta_r: table.rows.iter().map(RankRow::delta).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportPaths {
    pub report: PathBuf,
    pub triples: PathBuf,
    pub pareto: PathBuf,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

fn explanation_text(kg: &KnowledgeGraph, triples: &[Triple]) -> String {
    triples
        .iter()
        .map(|t| {
            let (s, r, o) = kg.labels_of(t);
            format!("{s} {r} {o}")
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes `<label>.json`, `<label>_triples.csv` and `<label>_pareto.csv`
/// into `dir`.
pub fn emit_report(
    kg: &KnowledgeGraph,
    label: &str,
    table: &RankTable,
    runs: &[ExplanationRun],
    ks: &[usize],
    dir: &Path,
) -> Result<(MetricsReport, ReportPaths)> {
    let report = MetricsReport::build(label, table, runs, ks)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ReportPaths {
        report: dir.join(format!("{label}.json")),
        triples: dir.join(format!("{label}_triples.csv")),
        pareto: dir.join(format!("{label}_pareto.csv")),
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&paths.report, json + "\n").map_err(|e| Error::io(&paths.report, e))?;

    let p = &paths.triples;
    let mut w = csv_writer(p)?;
    w.write_record([
        "subject",
        "relation",
        "object",
        "rank_before",
        "rank_after",
        "reciprocal_before",
        "reciprocal_after",
        "delta_r",
        "changed",
    ])
    .map_err(|e| csv_error(p, e))?;
    for r in table.rows() {
        let (s, rel, o) = kg.labels_of(&r.triple);
        w.write_record([
            s,
            rel,
            o,
            r.rank_before.to_string(),
            r.rank_after.to_string(),
            round_significant(1.0 / r.rank_before as f64, 6).to_string(),
            round_significant(1.0 / r.rank_after as f64, 6).to_string(),
            r.delta().to_string(),
            (r.rank_before != r.rank_after).to_string(),
        ])
        .map_err(|e| csv_error(p, e))?;
    }
    w.flush().map_err(|e| Error::io(p, e))?;

    write_pareto_csv(kg, runs, &paths.pareto)?;
    Ok((report, paths))
}

/// One row per front point of every run.
pub fn write_pareto_csv(kg: &KnowledgeGraph, runs: &[ExplanationRun], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "subject",
        "relation",
        "object",
        "algorithm",
        "length",
        "psi",
        "explanation",
    ])
    .map_err(|e| csv_error(path, e))?;
    for run in runs {
        let (s, r, o) = kg.labels_of(&run.prediction);
        for p in &run.front.points {
            w.write_record([
                s.clone(),
                r.clone(),
                o.clone(),
                run.algorithm.to_string(),
                p.length.to_string(),
                round_significant(p.psi, 6).to_string(),
                explanation_text(kg, p.explanation.triples()),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub algorithm: String,
    pub mean_length: f64,
    pub m_delta_r: f64,
    pub mrr_after: Option<f64>,
    pub hits1_percent: Option<f64>,
}

impl ComparisonEntry {
    pub fn from_report(report: &MetricsReport) -> Self {
        Self {
            algorithm: report.label.clone(),
            mean_length: report.mean_length.map_or(f64::NAN, |m| m.full),
            m_delta_r: report.m_delta_r.full,
            mrr_after: Some(report.mrr_after.full),
            hits1_percent: report
                .hits
                .iter()
                .find(|h| h.k == 1)
                .map(|h| h.after_percent.full),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    #[serde(flatten)]
    pub entry: ComparisonEntry,
    /// No other row is at most as long and at least as rank-degrading,
    /// with one of the two strict.
    pub pareto_optimal: bool,
}

/// Rows sorted by decreasing MΔR, flagged when non-dominated in
/// `(mean length, MΔR)`.
pub fn comparison_table(entries: &[ComparisonEntry]) -> Vec<ComparisonRow> {
    let point = |e: &ComparisonEntry| (e.mean_length, e.m_delta_r);
    let mut rows: Vec<ComparisonRow> = entries
        .iter()
        .map(|e| ComparisonRow {
            entry: e.clone(),
            pareto_optimal: !entries.iter().any(|o| dominates(point(o), point(e))),
        })
        .collect();
    rows.sort_by(|a, b| b.entry.m_delta_r.total_cmp(&a.entry.m_delta_r));
    rows
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "algorithm",
        "mean_length",
        "m_delta_r",
        "mrr_after",
        "hits1_percent",
        "pareto_optimal",
    ])
    .map_err(|e| csv_error(path, e))?;
    let opt = |x: Option<f64>| {
        x.map(|v| round_significant(v, 6).to_string())
            .unwrap_or_default()
    };
    for r in rows {
        w.write_record([
            r.entry.algorithm.clone(),
            round_significant(r.entry.mean_length, 6).to_string(),
            round_significant(r.entry.m_delta_r, 6).to_string(),
            opt(r.entry.mrr_after),
            opt(r.entry.hits1_percent),
            r.pareto_optimal.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(before: &[usize], after: &[usize]) -> RankTable {
        RankTable::new(
            before
                .iter()
                .zip(after)
                .enumerate()
                .map(|(i, (&b, &a))| RankRow {
                    triple: Triple::new(i, 0, i + 1),
                    rank_before: b,
                    rank_after: a,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn toy_example_rows() {
        let cases = [
            ([2, 8], 0.3125, [0, 1, 2]),
            ([3, 3], 1.0 / 3.0, [0, 0, 2]),
            ([2, 4], 0.375, [0, 1, 2]),
        ];
        for (after, want_mrr, want_hits) in cases {
            let t = table(&[2, 2], &after);
            assert_eq!(mrr(&t, Which::After).unwrap(), want_mrr);
            for (k, want) in [1, 2, 10].into_iter().zip(want_hits) {
                assert_eq!(hits_at_k(&t, k, Which::After).unwrap(), want);
            }
        }
        assert_eq!(mrr(&table(&[2, 2], &[2, 2]), Which::Before).unwrap(), 0.5);
        assert_eq!(m_delta_r(&table(&[2, 2], &[2, 8])).unwrap(), 3.0);
    }

    #[test]
    fn trivial_cases() {
        let t = table(&[1, 1, 1], &[1, 1, 1]);
        assert_eq!(hits_at_k(&t, 1, Which::After).unwrap(), 3);
        assert_eq!(mrr(&t, Which::After).unwrap(), 1.0);
        assert_eq!(m_delta_r(&t).unwrap(), 0.0);
        assert!(hits_at_k(&t, 0, Which::After).is_err());
        assert!(mrr(&RankTable::default(), Which::After).is_err());
    }

    #[test]
    fn table_rejects_bad_rows() {
        let row = RankRow {
            triple: Triple::new(0, 0, 1),
            rank_before: 1,
            rank_after: 1,
        };
        assert!(RankTable::new(vec![row, row]).is_err());
        assert!(RankTable::new(vec![RankRow {
            rank_before: 0,
            ..row
        }])
        .is_err());
    }

    #[test]
    fn cohorts() {
        let t = table(&[1, 2, 1, 3], &[4, 2, 1, 3]);
        let c = cohort_filter(&t, 1);
        assert_eq!(c.len(), 2);
        assert_eq!(c.cohort(), Some(1));
        assert_eq!(cohort_filter(&c, 1), c);
        assert!(cohort_filter(&t, 7).is_empty());
    }

    #[test]
    fn published_comparison_rows() {
        let rows = [
            ("variable-length", 3.92, 0.58),
            ("poisoning", 1.0, 0.30),
            ("length-1", 1.0, 0.28),
            ("rules", 1.0, 0.16),
            ("first-order", 1.0, 0.14),
        ];
        let entries: Vec<_> = rows
            .iter()
            .rev()
            .map(|&(a, ml, m)| ComparisonEntry {
                algorithm: a.into(),
                mean_length: ml,
                m_delta_r: m,
                mrr_after: None,
                hits1_percent: None,
            })
            .collect();
        let table = comparison_table(&entries);
        let names: Vec<_> = table.iter().map(|r| r.entry.algorithm.as_str()).collect();
        assert_eq!(names, rows.iter().map(|r| r.0).collect::<Vec<_>>());
        let flags: Vec<_> = table.iter().map(|r| r.pareto_optimal).collect();
        assert_eq!(flags, [true, true, false, false, false]);
    }

    #[test]
    fn significant_rounding() {
        assert_eq!(round_significant(1.0 / 3.0, 6), 0.333333);
        assert_eq!(round_significant(123456789.0, 6), 123457000.0);
        assert_eq!(round_significant(0.0, 6), 0.0);
    }
}
