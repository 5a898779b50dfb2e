//! Causal models over trajectories.
//!
//! A [`CausalModel`] pairs a [`SystemModel`] (the mechanism) with an explicit
//! set of admissible trajectories R. Interventions go through [`update`]:
//! assigning trajectory slices to endogenous variables severs their equations
//! on the assigned intervals and filters R down to trajectories that agree
//! with the assignment there. Satisfaction asks whether the unique admissible
//! trajectory matching a context (the exogenous columns) satisfies an event
//! expression.
//!
//! R starts empty and is populated through [`CausalModel::add_trajectory`],
//! which rejects values outside the declared variable bounds. Bounds thereby
//! limit which counterfactual worlds count as admissible, not what the
//! mechanism itself may produce.

use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde_json::Value;
use thiserror::Error;

use crate::equations::{parse_formula, parse_guard};
use crate::event_logic::{self, EventError, EventExpression};
use crate::simulator::{EquationForm, Role, StructuralEquation, SystemModel, VariableSpec};
use crate::trajectory::{Trajectory, TrajectoryError, TrajectorySlice, Valuation};
use crate::DEFAULT_TOL;

#[derive(Debug, Error)]
pub enum CausalError {
    #[error("same-step dependency cycle among: {}", .0.join(", "))]
    Cyclic(Vec<String>),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("cannot assign exogenous variable {0}")]
    AssignExogenous(String),
    #[error("constant {0} can only be assigned over the whole duration")]
    ConstantPartial(String),
    #[error("constant {0} can only be assigned a constant value")]
    ConstantVarying(String),
    #[error("value {value} for {var} at t = {t} outside [{min}, {max}]")]
    OutOfBounds {
        var: String,
        t: f64,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("trajectory does not range over the model variables: missing {0}")]
    MissingColumn(String),
    #[error("no admissible trajectory matches the context")]
    ContextError,
    #[error("{count} distinct admissible trajectories match the context")]
    DeterminismViolation { count: usize },
    #[error("model file: {0}")]
    Parse(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Event(#[from] EventError),
}

type Result<T> = std::result::Result<T, CausalError>;

/// Variable split and admissible ranges of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub exogenous: Vec<String>,
    pub endogenous: Vec<String>,
    pub ranges: BTreeMap<String, (f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct CausalModel {
    system: SystemModel,
    signature: Signature,
    trajectories: Vec<Trajectory>,
    assignment: Vec<TrajectorySlice>,
}

impl CausalModel {
    pub fn new(system: SystemModel) -> CausalModel {
        let mut signature = Signature {
            exogenous: Vec::new(),
            endogenous: Vec::new(),
            ranges: BTreeMap::new(),
        };
        for v in &system.variables {
            match v.role {
                Role::Exogenous => signature.exogenous.push(v.name.clone()),
                Role::Endogenous => signature.endogenous.push(v.name.clone()),
            }
            signature.ranges.insert(v.name.clone(), (v.min, v.max));
        }
        CausalModel {
            system,
            signature,
            trajectories: Vec::new(),
            assignment: Vec::new(),
        }
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// The admissible set R in insertion order.
    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    /// Slices whose equations are currently severed.
    pub fn assignment(&self) -> &[TrajectorySlice] {
        &self.assignment
    }

    /// Checks that current-step references form no cycle. Previous-step
    /// references (guards, ODE rates, derivatives) always point backwards in
    /// time, so only same-step edges can close a loop; the answer therefore
    /// does not depend on how finely trajectories are sliced.
    pub fn check_acyclic(&self) -> Result<()> {
        let mut graph = DiGraph::<&str, ()>::new();
        let mut nodes = BTreeMap::new();
        for eq in &self.system.equations {
            nodes
                .entry(eq.target.as_str())
                .or_insert_with(|| graph.add_node(eq.target.as_str()));
        }
        for eq in &self.system.equations {
            let to = nodes[eq.target.as_str()];
            for dep in eq.form.same_step_refs() {
                if let Some(&from) = nodes.get(dep.as_str()) {
                    graph.add_edge(from, to, ());
                }
            }
        }
        for component in tarjan_scc(&graph) {
            let cyclic = component.len() > 1
                || graph
                    .find_edge(component[0], component[0])
                    .is_some();
            if cyclic {
                let mut names: Vec<String> = component
                    .iter()
                    .map(|&ix| graph[ix].to_string())
                    .collect();
                names.sort();
                return Err(CausalError::Cyclic(names));
            }
        }
        Ok(())
    }

    /// Intervenes on the model: severs the equations of the assigned
    /// variables over the assigned intervals and keeps only admissible
    /// trajectories agreeing with the assignment there. Never enlarges R.
    pub fn update(&self, assignment: &[TrajectorySlice]) -> Result<CausalModel> {
        let duration = self.system.duration;
        for slice in assignment {
            for var in slice.trajectory().names() {
                let spec = self
                    .system
                    .spec(var)
                    .ok_or_else(|| CausalError::UnknownVariable(var.clone()))?;
                if spec.role == Role::Exogenous {
                    return Err(CausalError::AssignExogenous(var.clone()));
                }
                if spec.is_constant {
                    let iv = slice.interval();
                    if iv.lo > 0.0 || iv.hi < duration - 1e-9 {
                        return Err(CausalError::ConstantPartial(var.clone()));
                    }
                    let col = slice.trajectory().column(var)?;
                    if col.windows(2).any(|w| w[0] != w[1]) {
                        return Err(CausalError::ConstantVarying(var.clone()));
                    }
                }
            }
        }
        let mut updated = self.clone();
        updated.assignment.extend_from_slice(assignment);
        updated
            .trajectories
            .retain(|r| matches_assignment(r, assignment, DEFAULT_TOL));
        Ok(updated)
    }

    /// Admits a trajectory into R. Returns false when an equal trajectory
    /// (within the default tolerance) is already present.
    pub fn add_trajectory(&mut self, traj: Trajectory) -> Result<bool> {
        for spec in &self.system.variables {
            if !traj.has(&spec.name) {
                return Err(CausalError::MissingColumn(spec.name.clone()));
            }
            let col = traj.column(&spec.name)?;
            for (k, &v) in col.iter().enumerate() {
                if v < spec.min || v > spec.max {
                    return Err(CausalError::OutOfBounds {
                        var: spec.name.clone(),
                        t: traj.grid().time(k),
                        value: v,
                        min: spec.min,
                        max: spec.max,
                    });
                }
            }
        }
        if !matches_assignment(&traj, &self.assignment, DEFAULT_TOL) {
            // An intervened model only admits worlds realising the
            // intervention.
            return Ok(false);
        }
        if self
            .trajectories
            .iter()
            .any(|r| trajectories_equal(r, &traj, DEFAULT_TOL))
        {
            return Ok(false);
        }
        self.trajectories.push(traj);
        Ok(true)
    }

    /// Projects a trajectory onto the exogenous variables.
    pub fn context_of(&self, traj: &Trajectory) -> Result<Trajectory> {
        let names: Vec<&str> = self.signature.exogenous.iter().map(|s| s.as_str()).collect();
        Ok(traj.project(&names)?)
    }

    /// Whether the unique admissible trajectory matching the context
    /// satisfies the event expression.
    pub fn satisfies(
        &self,
        context: &Trajectory,
        phi: &EventExpression,
        tol: f64,
    ) -> Result<bool> {
        let matching: Vec<&Trajectory> = self
            .trajectories
            .iter()
            .filter(|r| matches_context(r, context, &self.signature.exogenous, tol))
            .collect();
        let mut distinct: Vec<&Trajectory> = Vec::new();
        for r in matching {
            if !distinct.iter().any(|d| trajectories_equal(d, r, tol)) {
                distinct.push(r);
            }
        }
        match distinct.len() {
            0 => Err(CausalError::ContextError),
            1 => Ok(event_logic::holds(phi, distinct[0], tol)?),
            count => Err(CausalError::DeterminismViolation { count }),
        }
    }
}

fn matches_assignment(traj: &Trajectory, assignment: &[TrajectorySlice], tol: f64) -> bool {
    assignment.iter().all(|slice| {
        let iv = slice.interval();
        slice.trajectory().names().iter().all(|var| {
            if !traj.has(var) {
                return false;
            }
            let Ok(col) = traj.column(var) else { return false };
            let Ok(forced) = slice.trajectory().column(var) else {
                return false;
            };
            let grid = traj.grid();
            (0..grid.count)
                .filter(|&k| iv.contains(grid.time(k)))
                .all(|k| {
                    slice
                        .trajectory()
                        .grid()
                        .snap(grid.time(k))
                        .ok()
                        .and_then(|j| forced.get(j).or_else(|| forced.last()))
                        .is_some_and(|&fv| (col[k] - fv).abs() <= tol)
                })
        })
    })
}

fn matches_context(traj: &Trajectory, context: &Trajectory, exogenous: &[String], tol: f64) -> bool {
    exogenous.iter().all(|var| {
        let (Ok(a), Ok(b)) = (traj.column(var), context.column(var)) else {
            return false;
        };
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    })
}

fn trajectories_equal(a: &Trajectory, b: &Trajectory, tol: f64) -> bool {
    a.names() == b.names()
        && a.grid() == b.grid()
        && a.names().iter().all(|var| {
            let (Ok(x), Ok(y)) = (a.column(var), b.column(var)) else {
                return false;
            };
            x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol)
        })
}

// ---------------------------------------------------------------------------
// Model files

/// A parsed model file: the system plus the effect expression to explain.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: SystemModel,
    pub phi: String,
}

/// Parses the JSON model format.
///
/// ```json
/// {
///   "variables": [
///     {"name": "v", "role": "exogenous", "min": 0, "max": 1, "constant": true}
///   ],
///   "equations": {
///     "x": "10 - t",
///     "y": {"ode": "x", "clamp_min": 0},
///     "m": [{"when": "x > 5", "then": "1"}, {"then": "0"}]
///   },
///   "initial": {"x": 10, "y": 0, "m": 0},
///   "phi": "!y <_[0,10) 95",
///   "duration": 10,
///   "dt": 0.01
/// }
/// ```
///
/// An equation is a closed-form string, an `{"ode": ...}` object with
/// optional clamps, or a list of guarded arms tried in order (`when`
/// omitted means always).
pub fn parse_model_json(text: &str) -> Result<ModelFile> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| CausalError::Parse(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| CausalError::Parse("top level must be an object".into()))?;

    let variables: Vec<VariableSpec> = serde_json::from_value(
        obj.get("variables")
            .ok_or_else(|| CausalError::Parse("missing \"variables\"".into()))?
            .clone(),
    )
    .map_err(|e| CausalError::Parse(format!("variables: {e}")))?;

    let eq_obj = obj
        .get("equations")
        .and_then(Value::as_object)
        .ok_or_else(|| CausalError::Parse("missing \"equations\" object".into()))?;
    let mut equations = Vec::new();
    for (target, value) in eq_obj {
        equations.push(StructuralEquation {
            target: target.clone(),
            form: parse_equation_value(target, value)?,
        });
    }

    let initial: Valuation = match obj.get("initial") {
        None => Valuation::new(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CausalError::Parse(format!("initial: {e}")))?,
    };

    let phi = obj
        .get("phi")
        .and_then(Value::as_str)
        .ok_or_else(|| CausalError::Parse("missing \"phi\" string".into()))?
        .to_string();
    let duration = obj
        .get("duration")
        .and_then(Value::as_f64)
        .ok_or_else(|| CausalError::Parse("missing numeric \"duration\"".into()))?;
    let dt = obj
        .get("dt")
        .and_then(Value::as_f64)
        .ok_or_else(|| CausalError::Parse("missing numeric \"dt\"".into()))?;

    Ok(ModelFile {
        model: SystemModel {
            variables,
            equations,
            initial,
            duration,
            dt,
        },
        phi,
    })
}

fn parse_equation_value(target: &str, value: &Value) -> Result<EquationForm> {
    let formula = |text: &str| {
        parse_formula(text)
            .map_err(|e| CausalError::Parse(format!("equation for {target}: {e}")))
    };
    match value {
        Value::String(s) => Ok(EquationForm::ClosedForm(formula(s)?)),
        Value::Object(o) => {
            let rhs = o
                .get("ode")
                .and_then(Value::as_str)
                .ok_or_else(|| {
                    CausalError::Parse(format!("equation for {target}: missing \"ode\" string"))
                })?;
            Ok(EquationForm::Ode {
                rhs: formula(rhs)?,
                clamp_min: o.get("clamp_min").and_then(Value::as_f64),
                clamp_max: o.get("clamp_max").and_then(Value::as_f64),
            })
        }
        Value::Array(arms) => {
            let mut parsed = Vec::new();
            for arm in arms {
                let arm = arm.as_object().ok_or_else(|| {
                    CausalError::Parse(format!("equation for {target}: arm must be an object"))
                })?;
                let guard = match arm.get("when") {
                    None => crate::equations::Guard::True,
                    Some(Value::String(s)) => parse_guard(s).map_err(|e| {
                        CausalError::Parse(format!("equation for {target}: {e}"))
                    })?,
                    Some(_) => {
                        return Err(CausalError::Parse(format!(
                            "equation for {target}: \"when\" must be a string"
                        )))
                    }
                };
                let then = arm.get("then").and_then(Value::as_str).ok_or_else(|| {
                    CausalError::Parse(format!("equation for {target}: missing \"then\" string"))
                })?;
                parsed.push((guard, formula(then)?));
            }
            Ok(EquationForm::Piecewise(parsed))
        }
        _ => Err(CausalError::Parse(format!(
            "equation for {target}: expected string, object, or array"
        ))),
    }
}
