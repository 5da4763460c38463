//! TOML experiment description.
//!
//! ```toml
//! base_seed = 0
//! output_dir = "results"
//!
//! [[datasets]]
//! name = "iris"
//! path = "../data/keel/iris.dat"
//! format = "keel"
//!
//! [methods]
//! heuristics = ["default", "covtrace", "Chapelle"]
//! heuristic = true
//! gscv_default = true
//! gscv_seeded = false
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use svm_heuristics::{CvConfig, DataFormat, HeuristicId, LabelColumn, SolverConfig, Strategy, SubsampleConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LabelSpec {
    Index(usize),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: String,
    path: PathBuf,
    format: Option<String>,
    label_column: Option<LabelSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethods {
    heuristics: Vec<String>,
    #[serde(default = "yes")]
    heuristic: bool,
    #[serde(default)]
    gscv_default: bool,
    #[serde(default)]
    gscv_seeded: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCv {
    k_external: Option<usize>,
    k_internal: Option<usize>,
    repetitions: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tolerance: Option<f64>,
    max_passes: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubsample {
    fraction: f64,
    min_per_class: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    datasets: Vec<RawDataset>,
    methods: RawMethods,
    cv: Option<RawCv>,
    solver: Option<RawSolver>,
    semi_supervised: Option<RawSubsample>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    base_seed: u64,
    reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub format: DataFormat,
    pub label_column: LabelColumn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    /// Every method to run, in output order.
    pub strategies: Vec<Strategy>,
    pub cv: CvConfig,
    pub solver: SolverConfig,
    pub semi_supervised: Option<SubsampleConfig>,
    pub output_dir: Option<PathBuf>,
    /// Method the others are tested against; `gscv_default` when it runs.
    pub reference: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            CliError::Usage(message) => CliError::Config { path: path.to_path_buf(), message },
            other => other,
        })
    }

    /// Parses config text; problems come back as `CliError::Usage` (the
    /// caller attaches the file path) or as a missing dataset path.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let bad = |m: String| CliError::Usage(m);
        let raw: RawConfig = toml::from_str(text).map_err(|e| bad(e.to_string().lines().next().unwrap_or("").to_string()))?;
        if raw.datasets.is_empty() {
            return Err(bad("at least one dataset is required".into()));
        }

        let mut datasets = Vec::with_capacity(raw.datasets.len());
        for d in raw.datasets {
            let path = base.join(&d.path);
            if !path.exists() {
                return Err(CliError::MissingPath { name: d.name, path });
            }
            let format = match &d.format {
                Some(f) => f.parse().map_err(|e: svm_heuristics::Error| bad(e.to_string()))?,
                None => DataFormat::from_extension(&path),
            };
            let label_column = match d.label_column {
                None => LabelColumn::Last,
                Some(LabelSpec::Index(i)) => LabelColumn::Index(i),
                Some(LabelSpec::Name(s)) => s.parse().map_err(|e: svm_heuristics::Error| bad(e.to_string()))?,
            };
            datasets.push(DatasetSpec { name: d.name, path, format, label_column });
        }

        let heuristics = raw
            .methods
            .heuristics
            .iter()
            .map(|h| h.parse::<HeuristicId>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let mut strategies = Vec::new();
        if raw.methods.heuristic {
            strategies.extend(heuristics.iter().map(|&h| Strategy::Heuristic(h)));
        }
        if raw.methods.gscv_default {
            strategies.push(Strategy::GridDefault);
        }
        if raw.methods.gscv_seeded {
            strategies.extend(heuristics.iter().map(|&h| Strategy::GridSeeded(h)));
        }
        strategies.dedup();
        if strategies.is_empty() {
            return Err(bad("no methods selected".into()));
        }

        let defaults = CvConfig::default();
        let cv = raw.cv.map_or(CvConfig { base_seed: raw.base_seed, ..defaults }, |c| CvConfig {
            k_external: c.k_external.unwrap_or(defaults.k_external),
            k_internal: c.k_internal.unwrap_or(defaults.k_internal),
            repetitions: c.repetitions.unwrap_or(defaults.repetitions),
            base_seed: raw.base_seed,
        });
        cv.validate().map_err(|e| bad(e.to_string()))?;

        let solver_defaults = SolverConfig::default();
        let solver = raw.solver.map_or(solver_defaults, |s| SolverConfig {
            tolerance: s.tolerance.unwrap_or(solver_defaults.tolerance),
            max_passes: s.max_passes.unwrap_or(solver_defaults.max_passes),
        });
        solver.validate().map_err(|e| bad(e.to_string()))?;

        let semi_supervised = match raw.semi_supervised {
            None => None,
            Some(s) if s.fraction > 0.0 && s.fraction <= 1.0 => Some(SubsampleConfig {
                fraction: s.fraction,
                min_per_class: s.min_per_class.unwrap_or(SubsampleConfig::default().min_per_class),
            }),
            Some(s) => return Err(bad(format!("semi_supervised.fraction must be in (0, 1], got {}", s.fraction))),
        };

        let labels: Vec<String> = strategies.iter().map(Strategy::label).collect();
        let reference = match raw.reference {
            Some(r) if labels.contains(&r) => Some(r),
            Some(r) => return Err(bad(format!("reference `{r}` is not among the configured methods"))),
            None => labels.iter().find(|l| *l == "gscv_default").cloned(),
        };

        Ok(ExperimentConfig {
            datasets,
            strategies,
            cv,
            solver,
            semi_supervised,
            output_dir: raw.output_dir.map(|p| base.join(p)),
            reference,
        })
    }
}
