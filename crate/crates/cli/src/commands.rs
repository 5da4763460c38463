use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use svm_heuristics::data::{load_dataset, zero_rule_accuracy, Scaler};
use svm_heuristics::eval::run_experiment;
use svm_heuristics::heuristics::estimate;
use svm_heuristics::kernel::DEFAULT_PAIR_BUDGET;
use svm_heuristics::report::{markdown_summary, params_csv, scores_csv};
use svm_heuristics::{DataFormat, Dataset, ExperimentReport, HeuristicId, HeuristicInput, LabelColumn, SvmParams};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub fn load(path: &Path, format: Option<DataFormat>, label: LabelColumn) -> CliResult<Dataset> {
    if !path.exists() {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Err(CliError::MissingPath { name, path: path.to_path_buf() });
    }
    let format = format.unwrap_or_else(|| DataFormat::from_extension(path));
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    Ok(load_dataset(path, format, label, name)?)
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partially written report.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let err = |source| CliError::Write { path: path.to_path_buf(), source };
    let tmp = path.with_extension("partial");
    let mut file = fs::File::create(&tmp).map_err(err)?;
    file.write_all(contents.as_bytes()).map_err(err)?;
    file.sync_all().map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Runs every dataset x method combination and writes `<dataset>.csv`,
/// `<dataset>_params.csv` and `summary.md` into `output_dir`.
pub fn run(config: &ExperimentConfig, output_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut all = Vec::new();
    let mut per_dataset: Vec<(String, Vec<ExperimentReport>)> = Vec::new();
    for spec in &config.datasets {
        let dataset = load_dataset(&spec.path, spec.format, spec.label_column, &spec.name)?;
        info!("{}: {} examples, {} features, {} classes", spec.name, dataset.n_examples(), dataset.n_features(), dataset.n_classes());
        let mut reports =
            vec![run_experiment(&dataset, &config.strategies, &config.cv, &config.solver, None, config.reference.as_deref())?];
        if let Some(sub) = config.semi_supervised {
            reports.push(run_experiment(&dataset, &config.strategies, &config.cv, &config.solver, Some(sub), config.reference.as_deref())?);
        }
        per_dataset.push((spec.name.clone(), reports));
    }

    fs::create_dir_all(output_dir).map_err(|source| CliError::Write { path: output_dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for (name, reports) in &per_dataset {
        let stem = file_stem(name);
        let scores = output_dir.join(format!("{stem}.csv"));
        write_atomic(&scores, &scores_csv(reports)?)?;
        let params = output_dir.join(format!("{stem}_params.csv"));
        write_atomic(&params, &params_csv(reports)?)?;
        written.extend([scores, params]);
        all.extend(reports.iter().cloned());
    }
    let summary = output_dir.join("summary.md");
    write_atomic(&summary, &markdown_summary(&all))?;
    written.push(summary);
    Ok(written)
}

/// Standardizes the whole dataset and evaluates one heuristic on it.
pub fn estimate_params(dataset: &Dataset, heuristic: HeuristicId, seed: u64) -> CliResult<SvmParams> {
    let z = Scaler::fit(dataset.features.view())?.transform(dataset.features.view())?;
    let input = HeuristicInput::prepare(z.view(), Some(&dataset.labels), dataset.n_classes(), DEFAULT_PAIR_BUDGET, seed)?;
    Ok(estimate(heuristic, &input)?)
}

pub fn zero_rule(dataset: &Dataset) -> String {
    format!("{:.1}", zero_rule_accuracy(dataset))
}
