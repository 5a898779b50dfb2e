//! Command implementations behind the `cpscause` binary.
//!
//! Each command is an ordinary function over paths and options so tests can
//! call it without spawning a process. Models are named either as a file
//! path or as `builtin:NAME` for the packaged examples; scenarios are
//! trajectory CSVs whose exogenous columns fix the context (extra columns
//! are ignored). All analysis artifacts land in one output directory:
//! `report.json`, the factual run as `actual.csv`, one counterfactual
//! trajectory CSV per cause and one factual-vs-override plot CSV per blamed
//! variable.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use cpscause_core::causal_model::{parse_model_json, CausalError, CausalModel};
use cpscause_core::cause_checker::CheckError;
use cpscause_core::event_logic::{self, EventError};
use cpscause_core::report::{
    verify_report, AnalysisReport, ModelSource, ReportError, Verdict,
};
use cpscause_core::search_engine::{search, SearchConfig, SearchOutcome};
use cpscause_core::simulator::{
    builtin, simulate, CompiledModel, Role, Scenario, SimulatorError, SystemModel,
};
use cpscause_core::trajectory::{Trajectory, TrajectoryError, TrajectorySlice};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("AC1 unsatisfiable: scenario does not exhibit the effect")]
    Ac1Unsatisfiable,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// 0 = causes found, 1 = none within budget (or verification failed),
/// 2 = usage or parse error, 3 = the scenario never exhibits the effect.
impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ac1Unsatisfiable => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A model reference resolved to a runnable system. Builtins bundle a
/// scenario and an effect; file models carry their effect in the JSON and
/// leave the scenario to the caller.
struct LoadedModel {
    system: SystemModel,
    scenario: Option<Scenario>,
    phi: String,
    source: ModelSource,
}

fn load_model(name: &str) -> Result<LoadedModel> {
    if let Some(builtin_name) = name.strip_prefix("builtin:") {
        let b = builtin(builtin_name)?;
        return Ok(LoadedModel {
            system: b.model,
            scenario: Some(b.scenario),
            phi: b.phi,
            source: ModelSource::Builtin(builtin_name.to_string()),
        });
    }
    let path = Path::new(name);
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let file = parse_model_json(&text)?;
    Ok(LoadedModel {
        system: file.model,
        scenario: None,
        phi: file.phi,
        source: ModelSource::Inline(value),
    })
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let traj = Trajectory::from_csv(&read(path)?)?;
    Ok(Scenario {
        inputs: Some(traj),
        ..Scenario::default()
    })
}

/// Simulates a model under a scenario and writes the trajectory CSV. A
/// zero-duration model produces the header row and no samples.
pub fn cmd_simulate(
    model: &str,
    scenario: Option<&Path>,
    dt: Option<f64>,
    out: &Path,
) -> Result<()> {
    let mut loaded = load_model(model)?;
    if let Some(dt) = dt {
        loaded.system.dt = dt;
    }
    let scenario = match scenario {
        Some(path) => load_scenario(path)?,
        None => loaded.scenario.unwrap_or_default(),
    };
    if loaded.system.duration == 0.0 {
        let mut header = String::from("time");
        for v in &loaded.system.variables {
            header.push(',');
            header.push_str(&v.name);
        }
        header.push('\n');
        return write(out, &header);
    }
    let traj = simulate(&loaded.system, &scenario)?;
    write(out, &traj.to_csv())
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    /// `builtin:NAME` or a model JSON path.
    pub model: String,
    pub scenario: Option<PathBuf>,
    /// Effect expression; defaults to the one packaged with the model.
    pub phi: Option<String>,
    /// Analysis set; defaults to every endogenous variable.
    pub endogenous: Option<Vec<String>>,
    pub max_granularity: usize,
    pub max_cause_size: usize,
    pub seed: u64,
    pub dt: Option<f64>,
    pub out_dir: PathBuf,
    /// Generations per genetic query at full budget.
    pub budget_generations: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        let config = SearchConfig::default();
        AnalyzeOptions {
            model: String::new(),
            scenario: None,
            phi: None,
            endogenous: None,
            max_granularity: config.max_granularity,
            max_cause_size: config.max_cause_size,
            seed: config.seed,
            dt: None,
            out_dir: PathBuf::from("."),
            budget_generations: config.base_generations,
        }
    }
}

impl AnalyzeOptions {
    fn search_config(&self) -> SearchConfig {
        let defaults = SearchConfig::default();
        let mut schedule: Vec<usize> = defaults
            .schedule
            .iter()
            .copied()
            .filter(|&g| g <= self.max_granularity)
            .collect();
        if schedule.is_empty() {
            schedule.push(self.max_granularity);
        }
        SearchConfig {
            schedule,
            max_granularity: self.max_granularity,
            max_cause_size: self.max_cause_size,
            base_generations: self.budget_generations,
            seed: self.seed,
            ..defaults
        }
    }
}

/// Runs the full analysis and writes the report plus its trajectory
/// artifacts. The returned report mirrors `report.json`; no causes found is
/// not an error here, the caller decides how to surface it.
pub fn cmd_analyze(opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let mut loaded = load_model(&opts.model)?;
    if let Some(dt) = opts.dt {
        loaded.system.dt = dt;
    }
    let scenario = match &opts.scenario {
        Some(path) => load_scenario(path)?,
        None => loaded.scenario.take().unwrap_or_default(),
    };
    let phi_text = opts.phi.clone().unwrap_or(loaded.phi);
    let phi = event_logic::parse(&phi_text)?;

    let analysis: Vec<String> = match &opts.endogenous {
        Some(vars) => vars.clone(),
        None => loaded
            .system
            .endogenous()
            .iter()
            .map(|v| v.to_string())
            .collect(),
    };
    for var in &analysis {
        match loaded.system.spec(var) {
            Some(spec) if spec.role == Role::Endogenous => {}
            Some(_) => {
                return Err(CliError::Usage(format!(
                    "--endogenous {var}: variable is exogenous"
                )))
            }
            None => {
                return Err(CliError::Usage(format!(
                    "--endogenous {var}: no such model variable"
                )))
            }
        }
    }

    let actual = simulate(&loaded.system, &scenario)?;
    let compiled = CompiledModel::compile(&loaded.system, &scenario)?;
    let mut model = CausalModel::new(loaded.system.clone());
    model.add_trajectory(actual.clone())?;
    let context = model.context_of(&actual)?;
    if !model.satisfies(&context, &phi, cpscause_core::DEFAULT_TOL)? {
        return Err(CliError::Ac1Unsatisfiable);
    }

    let config = opts.search_config();
    let outcome = search(&model, &compiled, &actual, &analysis, &phi, &config)?;
    write_artifacts(opts, &loaded.system, &compiled, &actual, &outcome, &phi_text, &analysis, &config, loaded.source)
}

#[allow(clippy::too_many_arguments)]
fn write_artifacts(
    opts: &AnalyzeOptions,
    system: &SystemModel,
    compiled: &CompiledModel,
    actual: &Trajectory,
    outcome: &SearchOutcome,
    phi_text: &str,
    analysis: &[String],
    config: &SearchConfig,
    source: ModelSource,
) -> Result<AnalysisReport> {
    fs::create_dir_all(&opts.out_dir).map_err(|source| CliError::Io {
        path: opts.out_dir.clone(),
        source,
    })?;
    write(&opts.out_dir.join("actual.csv"), &actual.to_csv())?;

    let mut counterfactual_csvs = Vec::with_capacity(outcome.records.len());
    for (k, record) in outcome.records.iter().enumerate() {
        let mut forced: Vec<TrajectorySlice> = record.alternative.clone();
        forced.extend(record.contingency_slices.iter().cloned());
        let counterfactual = compiled.run(&forced)?;
        let name = format!("cause_{k:03}_counterfactual.csv");
        write(&opts.out_dir.join(&name), &counterfactual.to_csv())?;
        for var in record.candidate.variables() {
            let plot = plot_csv(actual, &counterfactual, var)?;
            write(
                &opts.out_dir.join(format!("plot_cause_{k:03}_{var}.csv")),
                &plot,
            )?;
        }
        counterfactual_csvs.push(name);
    }

    let report = AnalysisReport::from_search(
        source,
        phi_text,
        analysis,
        config,
        system.dt,
        "actual.csv",
        outcome,
        &counterfactual_csvs,
    );
    write(&opts.out_dir.join("report.json"), &report.to_json())?;
    Ok(report)
}

/// Plot data for one variable: factual course next to the course under the
/// cause's witness intervention.
fn plot_csv(actual: &Trajectory, counterfactual: &Trajectory, var: &str) -> Result<String> {
    let grid = actual.grid();
    let factual = actual.column(var)?;
    let overridden = counterfactual.column(var)?;
    let mut out = format!("time,{var}_factual,{var}_override\n");
    for k in 0..grid.count {
        out.push_str(&format!("{},{},{}\n", grid.time(k), factual[k], overridden[k]));
    }
    Ok(out)
}

/// Re-verifies every cause in a report against its stored artifacts.
pub fn cmd_verify(report_path: &Path) -> Result<Vec<Verdict>> {
    let report = AnalysisReport::from_json(&read(report_path)?)?;
    let dir = report_path.parent().unwrap_or(Path::new("."));
    let actual = Trajectory::from_csv(&read(&dir.join(&report.actual_csv))?)?;
    for record in &report.records {
        let path = dir.join(&record.counterfactual_csv);
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "missing artifact {}",
                path.display()
            )));
        }
    }
    Ok(verify_report(&report, &actual)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY_MODEL: &str = r#"{
        "variables": [
            {"name": "u", "role": "exogenous", "min": 0, "max": 1, "constant": true},
            {"name": "x", "role": "endogenous", "min": 0, "max": 1, "constant": false},
            {"name": "y", "role": "endogenous", "min": -1, "max": 2, "constant": false}
        ],
        "equations": {"x": "u", "y": "1 - x"},
        "initial": {"x": 0, "y": 1},
        "phi": "y >_[0,0.1) 0",
        "duration": 0.1,
        "dt": 0.01
    }"#;

    fn tiny_options(dir: &Path) -> AnalyzeOptions {
        let model_path = dir.join("model.json");
        fs::write(&model_path, TINY_MODEL).unwrap();
        let scenario_path = dir.join("scenario.csv");
        let mut csv = String::from("time,u\n");
        for k in 0..10 {
            csv.push_str(&format!("{},0\n", k as f64 * 0.01));
        }
        fs::write(&scenario_path, csv).unwrap();
        AnalyzeOptions {
            model: model_path.to_string_lossy().into_owned(),
            scenario: Some(scenario_path),
            out_dir: dir.join("out"),
            budget_generations: 15,
            seed: 7,
            ..AnalyzeOptions::default()
        }
    }

    #[test]
    fn analyze_writes_reverifiable_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let opts = tiny_options(dir.path());
        let report = cmd_analyze(&opts).unwrap();
        assert!(!report.records.is_empty());
        assert!(opts.out_dir.join("actual.csv").exists());
        assert!(opts.out_dir.join("cause_000_counterfactual.csv").exists());
        assert!(opts.out_dir.join("plot_cause_000_x.csv").exists());
        let verdicts = cmd_verify(&opts.out_dir.join("report.json")).unwrap();
        assert!(verdicts.iter().all(|v| v.passed));
    }

    #[test]
    fn unknown_endogenous_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut opts = tiny_options(dir.path());
        opts.endogenous = Some(vec!["nothere".to_string()]);
        match cmd_analyze(&opts) {
            Err(e @ CliError::Usage(_)) => assert_eq!(e.exit_code(), 2),
            other => panic!("expected usage error, got {other:?}"),
        }
        opts.endogenous = Some(vec!["u".to_string()]);
        match cmd_analyze(&opts) {
            Err(e @ CliError::Usage(_)) => assert!(e.to_string().contains("exogenous")),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn unexhibited_effect_exits_with_ac1_message() {
        let dir = tempfile::tempdir().unwrap();
        let mut opts = tiny_options(dir.path());
        // The factual run keeps y = 1, so demanding y < 0 as the effect
        // cannot satisfy AC1.
        opts.phi = Some("y <_[0,0.1) 0".to_string());
        match cmd_analyze(&opts) {
            Err(e @ CliError::Ac1Unsatisfiable) => {
                assert_eq!(e.exit_code(), 3);
                assert_eq!(
                    e.to_string(),
                    "AC1 unsatisfiable: scenario does not exhibit the effect"
                );
            }
            other => panic!("expected AC1 error, got {other:?}"),
        }
    }

    #[test]
    fn zero_duration_simulation_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let model_path = dir.path().join("model.json");
        fs::write(
            &model_path,
            TINY_MODEL.replace("\"duration\": 0.1", "\"duration\": 0"),
        )
        .unwrap();
        let out = dir.path().join("empty.csv");
        cmd_simulate(&model_path.to_string_lossy(), None, None, &out).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), "time,u,x,y\n");
    }

    #[test]
    fn malformed_model_json_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let model_path = dir.path().join("model.json");
        fs::write(&model_path, "{not json").unwrap();
        let out = dir.path().join("t.csv");
        match cmd_simulate(&model_path.to_string_lossy(), None, None, &out) {
            Err(e @ CliError::Usage(_)) => assert_eq!(e.exit_code(), 2),
            other => panic!("expected usage error, got {other:?}"),
        }
    }
}
