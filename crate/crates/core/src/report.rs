//! CSV and Markdown serialization of experiment results.
//!
//! Scores are written with the shortest decimal text that parses back to the
//! same `f64`, so a score file reconstructs the aggregated means exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::eval::{ExperimentReport, ParamSource, RunScores, Scenario, Verdict};

pub const SCORES_HEADER: [&str; 6] = ["dataset", "method", "scenario", "repetition", "oa", "aa"];

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}

fn finish_writer(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// One row per dataset, method and repetition.
pub fn scores_csv(reports: &[ExperimentReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCORES_HEADER).map_err(csv_error)?;
    for report in reports {
        for run in &report.runs {
            for (r, (oa, aa)) in run.per_repetition_oa.iter().zip(&run.per_repetition_aa).enumerate() {
                w.write_record([
                    report.dataset.as_str(),
                    &run.method,
                    &run.scenario.to_string(),
                    &r.to_string(),
                    &oa.to_string(),
                    &aa.to_string(),
                ])
                .map_err(csv_error)?;
            }
        }
    }
    finish_writer(w)
}

fn source_name(source: ParamSource) -> &'static str {
    match source {
        ParamSource::Heuristic => "heuristic",
        ParamSource::Grid => "grid",
        ParamSource::Fallback => "fallback",
        ParamSource::GridSkipped => "grid_skipped",
    }
}

/// Parameters chosen on every external fold.
pub fn params_csv(reports: &[ExperimentReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "method",
        "repetition",
        "fold",
        "c",
        "gamma",
        "source",
        "grid_points",
        "k_internal",
        "n_labeled",
        "oa",
        "aa",
        "converged",
    ])
    .map_err(csv_error)?;
    for report in reports {
        for run in &report.runs {
            for f in &run.folds {
                w.write_record([
                    report.dataset.clone(),
                    run.method.clone(),
                    f.repetition.to_string(),
                    f.fold.to_string(),
                    f.params.c.to_string(),
                    f.params.gamma.to_string(),
                    source_name(f.source).to_string(),
                    f.grid_points.to_string(),
                    f.k_internal.to_string(),
                    f.labeled_rows.len().to_string(),
                    f.oa.to_string(),
                    f.aa.to_string(),
                    f.converged.to_string(),
                ])
                .map_err(csv_error)?;
            }
        }
    }
    finish_writer(w)
}

fn parse_scenario(s: &str) -> Result<Scenario> {
    Ok(match s {
        "heuristic" => Scenario::Heuristic,
        "gscv_default" => Scenario::GscvDefault,
        "gscv_seeded" => Scenario::GscvSeeded,
        "semi_supervised" => Scenario::SemiSupervised,
        other => return Err(Error::InvalidArgument(format!("unknown scenario `{other}`"))),
    })
}

/// (dataset, method, scenario, oa, aa)
type ScoreGroup = (String, String, Scenario, Vec<f64>, Vec<f64>);

/// Rebuilds `(dataset, RunScores)` pairs from [`scores_csv`] output, in file
/// order. Fold records are not part of the score file and come back empty.
pub fn parse_scores_csv(text: &str) -> Result<Vec<(String, RunScores)>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(SCORES_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()) });
    }
    let mut groups: Vec<ScoreGroup> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = i + 2;
        let num = |idx: usize| -> Result<f64> {
            record[idx].parse().map_err(|_| Error::Parse { line, message: format!("bad number `{}`", &record[idx]) })
        };
        let (oa, aa) = (num(4)?, num(5)?);
        let scenario = parse_scenario(&record[2])?;
        match groups.iter_mut().find(|g| g.0 == record[0] && g.1 == record[1] && g.2 == scenario) {
            Some(g) => {
                g.3.push(oa);
                g.4.push(aa);
            }
            None => groups.push((record[0].to_string(), record[1].to_string(), scenario, vec![oa], vec![aa])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(dataset, method, scenario, oa, aa)| (dataset, RunScores::from_repetitions(method, scenario, oa, aa, Vec::new())))
        .collect())
}

fn marked(value: f64, verdict: Option<Verdict>) -> String {
    match verdict {
        Some(Verdict::HigherSignificant) => format!("**{value:.1}**"),
        Some(Verdict::LowerSignificant) => format!("_{value:.1}_"),
        _ => format!("{value:.1}"),
    }
}

/// Mean OA/AA per method and dataset with differences to the reference.
/// Bold marks a significantly higher score than the reference, italics a
/// significantly lower one (one-sided rank-sum tests, p < 0.05).
pub fn markdown_summary(reports: &[ExperimentReport]) -> String {
    let mut out = String::from("# Results\n");
    for report in reports {
        let mode = if report.semi_supervised { "semi-supervised" } else { "supervised" };
        let _ = writeln!(out, "\n## {} ({mode})\n", report.dataset);
        match &report.reference {
            Some(r) => {
                let _ = writeln!(out, "Reference: `{r}`\n");
                out.push_str("| Method | OA | AA | dOA | dAA |\n|---|---:|---:|---:|---:|\n");
            }
            None => out.push_str("| Method | OA | AA |\n|---|---:|---:|\n"),
        }
        for run in &report.runs {
            match report.comparison(&run.method) {
                Some(c) => {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {:+.1} | {:+.1} |",
                        run.method,
                        marked(run.mean_oa, Some(c.oa.verdict)),
                        marked(run.mean_aa, Some(c.aa.verdict)),
                        c.oa.mean_difference,
                        c.aa.mean_difference
                    );
                }
                None => {
                    let _ = writeln!(out, "| {} | {} | {} |", run.method, marked(run.mean_oa, None), marked(run.mean_aa, None));
                }
            }
        }
    }
    out
}
