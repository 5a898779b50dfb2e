//! Serializable analysis reports.
//!
//! A report carries everything a later run needs to re-check its causes:
//! the model (inline or by builtin name), the effect expression, the
//! analysis set, the fully resolved configuration, the witness values per
//! cause and a reference to the factual trajectory CSV. Bulky trajectories
//! live in CSV files next to the report; the witness slices are small and
//! are embedded directly so a record can be re-verified without trusting
//! any derived artifact.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::causal_model::{parse_model_json, CausalError, CausalModel};
use crate::cause_checker::{CauseCandidate, CauseChecker, CauseRecord, CheckError};
use crate::event_logic::{self, EventError};
use crate::search_engine::{SearchConfig, SearchOutcome, StageReport};
use crate::simulator::{builtin, CompiledModel, Scenario, SimulatorError, SystemModel};
use crate::trajectory::{TimeInterval, Trajectory, TrajectoryError, TrajectorySlice};

/// Schema version accepted by this build.
pub const REPORT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported report version {0:?}, expected {REPORT_VERSION:?}")]
    Version(String),
    #[error("record {index}: {reason}")]
    Malformed { index: usize, reason: String },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

type Result<T> = std::result::Result<T, ReportError>;

/// Where the system model came from. Inline models embed the full model
/// JSON so the report does not depend on the original file surviving.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Builtin(String),
    Inline(Value),
}

impl ModelSource {
    pub fn load(&self) -> Result<SystemModel> {
        match self {
            ModelSource::Builtin(name) => Ok(builtin(name)?.model),
            ModelSource::Inline(value) => Ok(parse_model_json(&value.to_string())?.model),
        }
    }
}

/// One single-variable slice with its sample values on the dt sub-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceData {
    pub variable: String,
    pub interval: TimeInterval,
    pub values: Vec<f64>,
}

impl SliceData {
    pub fn from_slice(slice: &TrajectorySlice) -> SliceData {
        let var = slice.trajectory().names()[0].clone();
        let values = slice
            .trajectory()
            .column(&var)
            .expect("single-variable slice")
            .to_vec();
        SliceData {
            variable: var,
            interval: slice.interval(),
            values,
        }
    }

    /// Rebuilds the slice on the factual trajectory's sub-grid so domains
    /// line up exactly with what the checker produced.
    fn to_slice(&self, actual: &Trajectory) -> std::result::Result<TrajectorySlice, String> {
        let projected = actual
            .project(&[self.variable.as_str()])
            .map_err(|e| e.to_string())?;
        let shaped = projected.slice(self.interval).map_err(|e| e.to_string())?;
        let grid = *shaped.trajectory().grid();
        if self.values.len() != grid.count {
            return Err(format!(
                "witness for {} has {} samples, interval holds {}",
                self.variable,
                self.values.len(),
                grid.count
            ));
        }
        let traj = Trajectory::new(grid, vec![(self.variable.clone(), self.values.clone())])
            .map_err(|e| e.to_string())?;
        TrajectorySlice::new(shaped.interval(), traj).map_err(|e| e.to_string())
    }
}

/// The demonstration attached to a cause: alternative slices and the
/// contingency variables that were frozen while they were forced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessData {
    pub x_prime: Vec<SliceData>,
    #[serde(rename = "W")]
    pub w: Vec<String>,
}

/// One confirmed cause, in re-verifiable form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRecord {
    pub variables: Vec<String>,
    pub intervals: Vec<TimeInterval>,
    pub witness: WitnessData,
    pub granularity: usize,
    pub budget_generations: usize,
    /// Trajectory CSV of the run under the witness intervention.
    pub counterfactual_csv: String,
}

impl ReportRecord {
    pub fn from_record(record: &CauseRecord, counterfactual_csv: String) -> ReportRecord {
        ReportRecord {
            variables: record
                .candidate
                .variables()
                .iter()
                .map(|v| v.to_string())
                .collect(),
            intervals: record.candidate.intervals(),
            witness: WitnessData {
                x_prime: record.alternative.iter().map(SliceData::from_slice).collect(),
                w: record.contingency.clone(),
            },
            granularity: record.granularity,
            budget_generations: record.budget_generations,
            counterfactual_csv,
        }
    }

    /// Reconstructs the checker-level record against the factual
    /// trajectory. Any inconsistency between the declared cause and the
    /// embedded witness is reported, not repaired.
    pub fn to_cause_record(&self, actual: &Trajectory, index: usize) -> Result<CauseRecord> {
        let malformed = |reason: String| ReportError::Malformed { index, reason };
        if self.variables.len() != self.intervals.len()
            || self.variables.len() != self.witness.x_prime.len()
        {
            return Err(malformed(format!(
                "{} variables, {} intervals, {} witness slices",
                self.variables.len(),
                self.intervals.len(),
                self.witness.x_prime.len()
            )));
        }
        for ((var, iv), alt) in self
            .variables
            .iter()
            .zip(&self.intervals)
            .zip(&self.witness.x_prime)
        {
            if *var != alt.variable || *iv != alt.interval {
                return Err(malformed(format!(
                    "cause names {var} over [{}, {}) but the witness covers {} over [{}, {})",
                    iv.lo, iv.hi, alt.variable, alt.interval.lo, alt.interval.hi
                )));
            }
        }
        let parts: Vec<(String, TimeInterval)> = self
            .variables
            .iter()
            .cloned()
            .zip(self.intervals.iter().copied())
            .collect();
        let candidate =
            CauseCandidate::from_actual(actual, &parts).map_err(|e| malformed(e.to_string()))?;
        let alternative = self
            .witness
            .x_prime
            .iter()
            .map(|sd| sd.to_slice(actual).map_err(malformed_clone(index)))
            .collect::<Result<Vec<_>>>()?;
        let grid = actual.grid();
        let full = TimeInterval::new(grid.start, grid.end())?;
        let contingency_slices = self
            .witness
            .w
            .iter()
            .map(|v| {
                let projected = actual
                    .project(&[v.as_str()])
                    .map_err(|e| malformed_clone(index)(e.to_string()))?;
                projected
                    .slice(full)
                    .map_err(|e| malformed_clone(index)(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CauseRecord {
            candidate,
            alternative,
            contingency: self.witness.w.clone(),
            contingency_slices,
            granularity: self.granularity,
            budget_generations: self.budget_generations,
        })
    }
}

fn malformed_clone(index: usize) -> impl Fn(String) -> ReportError {
    move |reason| ReportError::Malformed { index, reason }
}

/// The complete output of one analysis run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: String,
    pub model: ModelSource,
    /// Effect expression, as given.
    pub phi: String,
    /// Endogenous variables the search drew causes from.
    pub analysis: Vec<String>,
    pub config: SearchConfig,
    pub seed: u64,
    /// Sampling step the analysis ran at; overrides the model's own dt
    /// when they differ.
    pub dt: f64,
    /// Factual trajectory CSV, relative to the report file.
    pub actual_csv: String,
    pub records: Vec<ReportRecord>,
    /// Per-stage counters and durations; recorded, never asserted.
    pub stages: Vec<StageReport>,
}

impl AnalysisReport {
    /// `counterfactual_csvs` pairs with `outcome.records` by position.
    #[allow(clippy::too_many_arguments)] // one field per argument
    pub fn from_search(
        model: ModelSource,
        phi: &str,
        analysis: &[String],
        config: &SearchConfig,
        dt: f64,
        actual_csv: &str,
        outcome: &SearchOutcome,
        counterfactual_csvs: &[String],
    ) -> AnalysisReport {
        assert_eq!(outcome.records.len(), counterfactual_csvs.len());
        AnalysisReport {
            version: REPORT_VERSION.to_string(),
            model,
            phi: phi.to_string(),
            analysis: analysis.to_vec(),
            config: config.clone(),
            seed: config.seed,
            dt,
            actual_csv: actual_csv.to_string(),
            records: outcome
                .records
                .iter()
                .zip(counterfactual_csvs)
                .map(|(r, csv)| ReportRecord::from_record(r, csv.clone()))
                .collect(),
            stages: outcome.stages.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<AnalysisReport> {
        let report: AnalysisReport = serde_json::from_str(text)?;
        if report.version != REPORT_VERSION {
            return Err(ReportError::Version(report.version));
        }
        Ok(report)
    }
}

/// Verdict for one record of a re-verified report.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub note: String,
}

/// Re-checks every record against the factual trajectory: AC1 and the
/// recorded counterfactual, verbatim. Records that no longer parse into a
/// consistent cause fail their verdict; environment-level problems (model
/// no longer loads, trajectory malformed) surface as errors.
pub fn verify_report(report: &AnalysisReport, actual: &Trajectory) -> Result<Vec<Verdict>> {
    if report.version != REPORT_VERSION {
        return Err(ReportError::Version(report.version.clone()));
    }
    let mut system = report.model.load()?;
    system.dt = report.dt;
    let mut model = CausalModel::new(system.clone());
    model.add_trajectory(actual.clone())?;
    let scenario = Scenario {
        inputs: Some(actual.clone()),
        ..Scenario::default()
    };
    let compiled = CompiledModel::compile(&system, &scenario)?;
    let phi = event_logic::parse(&report.phi)?;
    let checker = CauseChecker::new(
        &model,
        &compiled,
        actual,
        &report.analysis,
        phi,
        report.config.tol,
    )?;
    report
        .records
        .iter()
        .enumerate()
        .map(|(index, rr)| match rr.to_cause_record(actual, index) {
            Ok(record) => {
                let passed = checker.verify(&record)?;
                Ok(Verdict {
                    passed,
                    note: if passed {
                        "ok".to_string()
                    } else {
                        "counterfactual no longer removes the effect".to_string()
                    },
                })
            }
            Err(ReportError::Malformed { reason, .. }) => Ok(Verdict {
                passed: false,
                note: reason,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search_engine::{search, SearchConfig};
    use crate::simulator::simulate;

    const MIRROR_JSON: &str = r#"{
        "variables": [
            {"name": "u", "role": "exogenous", "min": 0, "max": 1, "constant": true},
            {"name": "x", "role": "endogenous", "min": 0, "max": 1, "constant": false},
            {"name": "y", "role": "endogenous", "min": -1, "max": 2, "constant": false}
        ],
        "equations": {
            "x": "u",
            "y": "1 - x"
        },
        "initial": {"x": 0, "y": 1},
        "phi": "y >_[0,0.1) 0",
        "duration": 0.1,
        "dt": 0.01
    }"#;

    fn analyzed() -> (AnalysisReport, Trajectory) {
        let parsed: Value = serde_json::from_str(MIRROR_JSON).unwrap();
        let file = parse_model_json(MIRROR_JSON).unwrap();
        let scenario = Scenario::from_constants([("u".to_string(), 0.0)].into_iter().collect());
        let actual = simulate(&file.model, &scenario).unwrap();
        let compiled = CompiledModel::compile(&file.model, &scenario).unwrap();
        let mut model = CausalModel::new(file.model.clone());
        model.add_trajectory(actual.clone()).unwrap();
        let phi = event_logic::parse(&file.phi).unwrap();
        let analysis = vec!["x".to_string()];
        let config = SearchConfig {
            population: 20,
            base_generations: 15,
            seed: 7,
            ..SearchConfig::default()
        };
        let outcome = search(&model, &compiled, &actual, &analysis, &phi, &config).unwrap();
        assert!(!outcome.records.is_empty());
        let csvs: Vec<String> = (0..outcome.records.len())
            .map(|i| format!("cause_{i:03}_counterfactual.csv"))
            .collect();
        let report = AnalysisReport::from_search(
            ModelSource::Inline(parsed),
            &file.phi,
            &analysis,
            &config,
            file.model.dt,
            "actual.csv",
            &outcome,
            &csvs,
        );
        (report, actual)
    }

    #[test]
    fn report_round_trips_and_reverifies() {
        let (report, actual) = analyzed();
        let back = AnalysisReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back.records.len(), report.records.len());
        assert_eq!(back.seed, 7);
        assert!(!back.stages.is_empty());
        let verdicts = verify_report(&back, &actual).unwrap();
        assert!(!verdicts.is_empty());
        assert!(verdicts.iter().all(|v| v.passed), "{verdicts:?}");
    }

    #[test]
    fn version_gate_rejects_unknown_schemas() {
        let (report, actual) = analyzed();
        let mut tampered = report.to_json().replacen("\"v1\"", "\"v2\"", 1);
        assert!(AnalysisReport::from_json(&tampered).is_err());
        tampered = tampered.replacen("\"v2\"", "\"v1\"", 1);
        let mut parsed = AnalysisReport::from_json(&tampered).unwrap();
        parsed.version = "v0".to_string();
        assert!(matches!(
            verify_report(&parsed, &actual),
            Err(ReportError::Version(_))
        ));
    }

    #[test]
    fn tampered_interval_fails_verification() {
        let (mut report, actual) = analyzed();
        // Shift the declared cause interval off the witness interval; the
        // record is now internally inconsistent and must not verify.
        report.records[0].intervals[0].hi -= 0.01;
        let verdicts = verify_report(&report, &actual).unwrap();
        assert!(!verdicts[0].passed);
        assert!(verdicts[0].note.contains("witness"), "{}", verdicts[0].note);
    }

    #[test]
    fn tampered_witness_values_fail_verification() {
        let (mut report, actual) = analyzed();
        // One sample pushed far out of x's admissible range: the forced
        // world becomes inadmissible, so the counterfactual no longer
        // demonstrates anything.
        report.records[0].witness.x_prime[0].values[0] = 5.0;
        let verdicts = verify_report(&report, &actual).unwrap();
        assert!(!verdicts[0].passed);
        let (mut report2, _) = analyzed();
        // In-range flip back to the factual course on every sample: the
        // forcing then changes nothing and the effect stays.
        for v in &mut report2.records[0].witness.x_prime[0].values {
            *v = 0.0;
        }
        let verdicts2 = verify_report(&report2, &actual).unwrap();
        assert!(!verdicts2[0].passed);
    }

    #[test]
    fn builtin_model_source_loads() {
        let source = ModelSource::Builtin("av_running_example".to_string());
        let system = source.load().unwrap();
        assert!(system.spec("lidarRange").is_some());
        assert!(ModelSource::Builtin("missing".to_string()).load().is_err());
    }
}
