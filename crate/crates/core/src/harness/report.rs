//! CSV and manifest output.
//!
//! * `raw.csv`: one row per replication and method.
//! * `summary.csv`: one row per (model, n, selector, classifier) with every
//!   aggregate.
//! * `aggregate.csv`: mean accuracy in percent, one row per (model, n,
//!   classifier) and one column per selector; `-` marks missing cells.
//! * `variables.csv`: the same layout for the mean number of variables.
//! * `ranking.csv`: ranking scores per classifier and criterion.
//! * `manifest.toml`: the configuration, loadable by `experiment` again.

use std::fs;
use std::path::{Path, PathBuf};

use crate::classifiers::Classifier;
use crate::data::format_f64;
use crate::error::{Error, Result};
use crate::selectors::Method;

use super::ranking::{RankingCriterion, RankingTable};
use super::runner::{AggregateRow, ExperimentReport, RawRow};

pub const MISSING: &str = "-";

fn opt_f64(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), format_f64)
}

fn opt_usize(v: Option<usize>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| v.to_string())
}

fn write_records(header: &[String], records: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

const RAW_HEADER: [&str; 12] = [
    "model",
    "n",
    "replication",
    "selector",
    "classifier",
    "accuracy",
    "variables",
    "dim",
    "h",
    "k",
    "error",
    "ok",
];

pub fn raw_csv(rows: &[RawRow]) -> String {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                r.n.to_string(),
                r.replication.to_string(),
                r.selector.to_string(),
                r.classifier.to_string(),
                opt_f64(r.accuracy),
                opt_f64(r.variables),
                opt_usize(r.dim),
                opt_usize(r.h),
                opt_usize(r.k),
                r.error.clone().unwrap_or_default(),
                u8::from(r.error.is_none()).to_string(),
            ]
        })
        .collect();
    write_records(&strings(&RAW_HEADER), &records)
}

fn parse_cell<T: std::str::FromStr>(cell: &str, what: &str, line: usize) -> Result<Option<T>> {
    if cell == MISSING {
        return Ok(None);
    }
    cell.parse::<T>()
        .map(Some)
        .map_err(|_| Error::Config(format!("line {}: bad {} '{}'", line, what, cell)))
}

fn required<T>(v: Option<T>, what: &str, line: usize) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("line {}: missing {}", line, what)))
}

/// Inverse of [`raw_csv`].
pub fn parse_raw_csv(text: &str) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        if rec.len() != RAW_HEADER.len() {
            return Err(Error::Config(format!(
                "line {}: expected {} cells",
                line,
                RAW_HEADER.len()
            )));
        }
        let ok = &rec[11] == "1";
        rows.push(RawRow {
            model: rec[0].to_string(),
            n: required(parse_cell(&rec[1], "n", line)?, "n", line)?,
            replication: required(
                parse_cell(&rec[2], "replication", line)?,
                "replication",
                line,
            )?,
            selector: rec[3].parse()?,
            classifier: rec[4].parse()?,
            accuracy: parse_cell(&rec[5], "accuracy", line)?,
            variables: parse_cell(&rec[6], "variables", line)?,
            dim: parse_cell(&rec[7], "dim", line)?,
            h: parse_cell(&rec[8], "h", line)?,
            k: parse_cell(&rec[9], "k", line)?,
            error: (!ok).then(|| rec[10].to_string()),
        });
    }
    Ok(rows)
}

pub fn summary_csv(aggregates: &[AggregateRow]) -> String {
    let header = strings(&[
        "model",
        "n",
        "selector",
        "classifier",
        "replications",
        "failures",
        "mean_accuracy",
        "std_error",
        "mean_variables",
        "mode_dim",
        "mode_h",
        "mode_k",
    ]);
    let records: Vec<Vec<String>> = aggregates
        .iter()
        .map(|a| {
            vec![
                a.model.clone(),
                a.n.to_string(),
                a.selector.to_string(),
                a.classifier.to_string(),
                a.replications.to_string(),
                a.failures.to_string(),
                opt_f64(a.mean_accuracy),
                opt_f64(a.std_error),
                opt_f64(a.mean_variables),
                opt_usize(a.mode_dim),
                opt_usize(a.mode_h),
                opt_usize(a.mode_k),
            ]
        })
        .collect();
    write_records(&header, &records)
}

/// Wide table: one row per (model, n, classifier), one column per selector.
#[derive(Debug, Clone, PartialEq)]
pub struct WideTable {
    pub selectors: Vec<Method>,
    pub rows: Vec<WideRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideRow {
    pub model: String,
    pub n: usize,
    pub classifier: Classifier,
    pub values: Vec<Option<f64>>,
}

impl WideTable {
    fn from_aggregates(
        aggregates: &[AggregateRow],
        value: impl Fn(&AggregateRow) -> Option<f64>,
    ) -> Self {
        let mut selectors: Vec<Method> = Vec::new();
        for a in aggregates {
            if !selectors.contains(&a.selector) {
                selectors.push(a.selector);
            }
        }
        let mut rows: Vec<WideRow> = Vec::new();
        for a in aggregates {
            let pos = rows
                .iter()
                .position(|r| r.model == a.model && r.n == a.n && r.classifier == a.classifier);
            let i = pos.unwrap_or_else(|| {
                rows.push(WideRow {
                    model: a.model.clone(),
                    n: a.n,
                    classifier: a.classifier,
                    values: vec![None; selectors.len()],
                });
                rows.len() - 1
            });
            let j = selectors
                .iter()
                .position(|&s| s == a.selector)
                .expect("collected above");
            rows[i].values[j] = value(a);
        }
        WideTable { selectors, rows }
    }

    /// Mean accuracy in percent.
    pub fn accuracy(aggregates: &[AggregateRow]) -> Self {
        Self::from_aggregates(aggregates, |a| a.mean_accuracy.map(|m| 100.0 * m))
    }

    pub fn variables(aggregates: &[AggregateRow]) -> Self {
        Self::from_aggregates(aggregates, |a| a.mean_variables)
    }

    pub fn to_csv(&self) -> String {
        let mut header = strings(&["model", "n", "classifier"]);
        header.extend(self.selectors.iter().map(|s| s.to_string()));
        let records: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut rec = vec![r.model.clone(), r.n.to_string(), r.classifier.to_string()];
                rec.extend(r.values.iter().map(|&v| opt_f64(v)));
                rec
            })
            .collect();
        write_records(&header, &records)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Config(e.to_string()))?
            .clone();
        if header.len() < 4
            || &header[0] != "model"
            || &header[1] != "n"
            || &header[2] != "classifier"
        {
            return Err(Error::Config(
                "aggregate table must start with columns model,n,classifier and name at least one selector"
                    .into(),
            ));
        }
        let selectors: Vec<Method> = header
            .iter()
            .skip(3)
            .map(str::parse)
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
            if rec.len() != header.len() {
                return Err(Error::Config(format!(
                    "line {}: {} cells, expected {}",
                    line,
                    rec.len(),
                    header.len()
                )));
            }
            let values = rec
                .iter()
                .skip(3)
                .map(|c| parse_cell::<f64>(c, "value", line))
                .collect::<Result<Vec<_>>>()?;
            rows.push(WideRow {
                model: rec[0].to_string(),
                n: required(parse_cell(&rec[1], "n", line)?, "n", line)?,
                classifier: rec[2].parse()?,
                values,
            });
        }
        Ok(WideTable { selectors, rows })
    }

    /// Rankings per classifier. Within a classifier, selectors with no value
    /// at all are left out, and experiments missing any remaining selector
    /// are skipped; the second element counts skipped experiments.
    pub fn rankings(&self) -> Result<(Vec<RankingTable>, usize)> {
        let mut classifiers: Vec<Classifier> = Vec::new();
        for r in &self.rows {
            if !classifiers.contains(&r.classifier) {
                classifiers.push(r.classifier);
            }
        }
        let mut tables = Vec::new();
        let mut skipped = 0;
        for c in classifiers {
            let block: Vec<&WideRow> = self.rows.iter().filter(|r| r.classifier == c).collect();
            let cols: Vec<usize> = (0..self.selectors.len())
                .filter(|&j| block.iter().any(|r| r.values[j].is_some()))
                .collect();
            if cols.len() < 2 {
                continue;
            }
            let mut matrix = Vec::new();
            for r in &block {
                let vals: Option<Vec<f64>> = cols.iter().map(|&j| r.values[j]).collect();
                match vals {
                    Some(v) => matrix.push(v),
                    None => skipped += 1,
                }
            }
            if matrix.is_empty() {
                continue;
            }
            let names: Vec<String> = cols
                .iter()
                .map(|&j| self.selectors[j].to_string())
                .collect();
            for criterion in RankingCriterion::ALL {
                tables.push(RankingTable::build(
                    c.to_string(),
                    names.clone(),
                    &matrix,
                    criterion,
                )?);
            }
        }
        Ok((tables, skipped))
    }
}

/// One row per (classifier, criterion), one column per selector.
pub fn ranking_csv(selectors: &[Method], tables: &[RankingTable]) -> String {
    let mut header = strings(&["classifier", "criterion", "experiments"]);
    header.extend(selectors.iter().map(|s| s.to_string()));
    let records: Vec<Vec<String>> = tables
        .iter()
        .map(|t| {
            let mut rec = vec![
                t.group.clone(),
                t.criterion.to_string(),
                t.experiments.to_string(),
            ];
            rec.extend(selectors.iter().map(|s| {
                let name = s.to_string();
                opt_f64(
                    t.methods
                        .iter()
                        .position(|m| *m == name)
                        .map(|i| t.scores[i]),
                )
            }));
            rec
        })
        .collect();
    write_records(&header, &records)
}

/// Configuration as TOML preceded by comment lines with the tool version.
pub fn manifest(report: &ExperimentReport) -> Result<String> {
    Ok(format!(
        "# maxhunt {}\n# Re-run with: maxhunt experiment <this file>\n{}",
        env!("CARGO_PKG_VERSION"),
        report.config.to_toml_string()?
    ))
}

/// Writes every report file into `dir` (created if needed) and returns the
/// paths written.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let accuracy = WideTable::accuracy(&report.aggregates);
    let (rankings, _) = accuracy.rankings()?;
    let files = [
        ("raw.csv", raw_csv(&report.rows)),
        ("summary.csv", summary_csv(&report.aggregates)),
        ("aggregate.csv", accuracy.to_csv()),
        (
            "variables.csv",
            WideTable::variables(&report.aggregates).to_csv(),
        ),
        ("ranking.csv", ranking_csv(&accuracy.selectors, &rankings)),
        ("manifest.toml", manifest(report)?),
    ];
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::runner::aggregate;

    fn row(sel: Method, cls: Classifier, rep: usize, acc: Option<f64>) -> RawRow {
        RawRow {
            model: "m".into(),
            n: 30,
            replication: rep,
            selector: sel,
            classifier: cls,
            accuracy: acc,
            variables: acc.map(|_| 2.0 + rep as f64),
            dim: acc.map(|_| 2),
            h: None,
            k: acc.map(|_| 3),
            error: acc
                .is_none()
                .then(|| "class 1 has 0 samples, at least 2 required".into()),
        }
    }

    fn rows() -> Vec<RawRow> {
        let mut out = Vec::new();
        for rep in 0..3 {
            out.push(row(
                Method::MHV,
                Classifier::KNN,
                rep,
                Some(0.7 + 0.01 * rep as f64),
            ));
            out.push(row(
                Method::T,
                Classifier::KNN,
                rep,
                if rep == 1 { None } else { Some(0.6) },
            ));
            out.push(row(Method::BASE, Classifier::KNN, rep, Some(0.1 / 3.0)));
            out.push(row(Method::MHV, Classifier::LDA, rep, Some(0.55)));
            out.push(row(Method::T, Classifier::LDA, rep, Some(0.65)));
        }
        out
    }

    #[test]
    fn raw_csv_round_trips_bitwise() {
        let r = rows();
        let back = parse_raw_csv(&raw_csv(&r)).unwrap();
        assert_eq!(back, r);
        assert_eq!(summary_csv(&aggregate(&back)), summary_csv(&aggregate(&r)));
    }

    #[test]
    fn wide_tables_mark_missing_cells() {
        let agg = aggregate(&rows());
        let t = WideTable::accuracy(&agg);
        assert_eq!(t.selectors, vec![Method::MHV, Method::T, Method::BASE]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].values[2], None);
        let text = t.to_csv();
        assert!(text.lines().nth(2).unwrap().ends_with(",-"));
        assert_eq!(WideTable::parse(&text).unwrap(), t);
    }

    #[test]
    fn rankings_per_classifier() {
        let t = WideTable::accuracy(&aggregate(&rows()));
        let (tables, skipped) = t.rankings().unwrap();
        assert_eq!(skipped, 0);
        assert_eq!(tables.len(), 6);
        let lda_f1 = tables
            .iter()
            .find(|t| t.group == "LDA" && t.criterion == RankingCriterion::F1)
            .unwrap();
        assert_eq!(lda_f1.methods, vec!["MHV", "T"]);
        assert_eq!(lda_f1.scores, vec![18.0, 25.0]);
        let csv = ranking_csv(&t.selectors, &tables);
        assert!(csv.contains("LDA,F1,1,18,25,-"));
    }

    #[test]
    fn emits_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let config = crate::harness::ExperimentConfig::from_toml_str(
            "model = \"prop1\"\ntrain_sizes = [30]\n[[methods]]\nselector = \"T\"\nclassifier = \"KNN\"",
            None,
        )
        .unwrap();
        let r = rows();
        let report = ExperimentReport {
            config,
            aggregates: aggregate(&r),
            rows: r,
        };
        let files = emit_report(&report, dir.path().join("out")).unwrap();
        assert_eq!(files.len(), 6);
        let manifest = fs::read_to_string(dir.path().join("out/manifest.toml")).unwrap();
        let reloaded = crate::harness::ExperimentConfig::from_toml_str(&manifest, None).unwrap();
        assert_eq!(reloaded, report.config);
    }
}
