//! Fixed-step simulation of hybrid system models.
//!
//! A [`SystemModel`] lists variables with bounds and one structural equation
//! per endogenous variable. Equations come in three forms: closed-form
//! expressions, first-order ODE right-hand sides integrated with forward
//! Euler, and guarded piecewise expressions. A [`Scenario`] supplies the
//! exogenous inputs plus optional forced interventions, and [`simulate`]
//! produces the resulting [`Trajectory`] on the `[0, duration)` grid.
//!
//! Two timing rules keep runs deterministic and intervention-friendly:
//! guards and ODE right-hand sides read the previous step's state, and a
//! forced slice overrides its variable immediately after that variable's own
//! equation, before any dependent evaluates. Forced values on an ODE variable
//! become its integration state, so it resumes from the forced endpoint;
//! closed-form and piecewise variables snap back to their equations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equations::{
    compile_expr, compile_guard, parse_formula, parse_guard, Ast, CompiledExpr, CompiledGuard,
    EquationError, Guard,
};
use crate::trajectory::{TimeGrid, Trajectory, TrajectoryError, TrajectorySlice, Valuation};

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("unknown builtin model {0}")]
    UnknownBuiltin(String),
    #[error("duplicate variable {0}")]
    DuplicateVariable(String),
    #[error("invalid bounds [{min}, {max}] for {var}")]
    BadBounds { var: String, min: f64, max: f64 },
    #[error("invalid duration {duration} for step {dt}")]
    BadDuration { duration: f64, dt: f64 },
    #[error("equation targets {0}, which is not an endogenous variable")]
    BadTarget(String),
    #[error("more than one equation for {0}")]
    DuplicateEquation(String),
    #[error("no equation for endogenous variable {0}")]
    MissingEquation(String),
    #[error("equation for {target}: {source}")]
    BadEquation {
        target: String,
        source: EquationError,
    },
    #[error("missing initial value for {0}")]
    MissingInitial(String),
    #[error("initial value {value} for {var} outside [{min}, {max}]")]
    InitialOutOfBounds {
        var: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("initial value given for {0}, which is not an endogenous variable")]
    UnknownInitial(String),
    #[error("scenario constant given for {0}, which is not an exogenous variable")]
    UnknownConstant(String),
    #[error("no scenario input for exogenous variable {0}")]
    MissingInput(String),
    #[error("scenario inputs must cover [0, {duration}): got [{lo}, {hi})")]
    InputCoverage { duration: f64, lo: f64, hi: f64 },
    #[error("same-step dependency cycle: {0}")]
    Cycle(String),
    #[error("forced slice targets unknown variable {0}")]
    ForcedUnknown(String),
    #[error("forced slice targets exogenous variable {0}")]
    ForcedExogenous(String),
    #[error("forced value {value} for {var} at t = {t} outside [{min}, {max}]")]
    ForcedOutOfBounds {
        var: String,
        t: f64,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("no piecewise arm matched for {var} at t = {t}")]
    NoArm { var: String, t: f64 },
    #[error("division by zero in equation for {var} at t = {t}")]
    DivisionByZero { var: String, t: f64 },
    #[error("non-finite value for {var} at t = {t}")]
    NonFinite { var: String, t: f64 },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

type Result<T> = std::result::Result<T, SimulatorError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Endogenous,
    Exogenous,
}

/// Variable declaration: analysis role, admissible range, constancy.
///
/// Bounds restrict interventions, not the model's own dynamics; a simulated
/// run may leave the range, a forced slice may not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub role: Role,
    pub min: f64,
    pub max: f64,
    #[serde(rename = "constant", default)]
    pub is_constant: bool,
}

/// One structural equation form.
#[derive(Debug, Clone)]
pub enum EquationForm {
    /// Recomputed every step from same-step values (and `t`, `der(..)`).
    ClosedForm(Ast),
    /// Forward-Euler integrated rate, optionally clamped after each step.
    Ode {
        rhs: Ast,
        clamp_min: Option<f64>,
        clamp_max: Option<f64>,
    },
    /// First arm whose guard holds on the previous step's state applies.
    Piecewise(Vec<(Guard, Ast)>),
}

impl EquationForm {
    /// Variables read at the current step (these order evaluation and are
    /// the edges that can make a model cyclic).
    pub fn same_step_refs(&self) -> Vec<String> {
        let mut direct = Vec::new();
        let mut der = Vec::new();
        match self {
            EquationForm::ClosedForm(a) => a.references(&mut direct, &mut der),
            EquationForm::Ode { .. } => {}
            EquationForm::Piecewise(arms) => {
                for (_, expr) in arms {
                    expr.references(&mut direct, &mut der);
                }
            }
        }
        direct
    }

    /// Variables read from the previous step (guards, ODE rates, `der`).
    pub fn backward_refs(&self) -> Vec<String> {
        let mut direct = Vec::new();
        let mut der = Vec::new();
        match self {
            EquationForm::ClosedForm(a) => {
                let mut unused = Vec::new();
                a.references(&mut unused, &mut der);
            }
            EquationForm::Ode { rhs, .. } => {
                rhs.references(&mut direct, &mut der);
            }
            EquationForm::Piecewise(arms) => {
                for (g, expr) in arms {
                    g.references(&mut direct, &mut der);
                    let mut unused = Vec::new();
                    expr.references(&mut unused, &mut der);
                }
            }
        }
        for d in der {
            if !direct.contains(&d) {
                direct.push(d);
            }
        }
        direct
    }
}

#[derive(Debug, Clone)]
pub struct StructuralEquation {
    pub target: String,
    pub form: EquationForm,
}

/// Simulatable system description.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub variables: Vec<VariableSpec>,
    pub equations: Vec<StructuralEquation>,
    /// Starting value for every endogenous variable. ODE variables integrate
    /// from theirs; for the other forms it is the step "-1" state that
    /// guards and derivatives see at t = 0.
    pub initial: Valuation,
    pub duration: f64,
    pub dt: f64,
}

impl SystemModel {
    pub fn spec(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn endogenous(&self) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|v| v.role == Role::Endogenous)
            .map(|v| v.name.as_str())
            .collect()
    }

    pub fn exogenous(&self) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|v| v.role == Role::Exogenous)
            .map(|v| v.name.as_str())
            .collect()
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.duration) || !positive(self.dt) {
            return Err(SimulatorError::BadDuration {
                duration: self.duration,
                dt: self.dt,
            });
        }
        let count = (self.duration / self.dt).round();
        if count < 1.0 || (count * self.dt - self.duration).abs() > 1e-9 * count.max(1.0) {
            return Err(SimulatorError::BadDuration {
                duration: self.duration,
                dt: self.dt,
            });
        }
        Ok(TimeGrid::new(0.0, self.dt, count as usize)?)
    }
}

/// Exogenous inputs and optional interventions for one run.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    /// Sampled inputs; extra columns (e.g. a recorded full run) are ignored.
    pub inputs: Option<Trajectory>,
    /// Constant values for exogenous variables without a sampled column.
    pub constants: Valuation,
    /// Endogenous slices forced over the model equations.
    pub forced: Vec<TrajectorySlice>,
}

impl Scenario {
    pub fn from_constants(constants: Valuation) -> Self {
        Scenario {
            inputs: None,
            constants,
            forced: Vec::new(),
        }
    }
}

enum SlotKind {
    Input,
    Closed(CompiledExpr),
    Ode {
        rhs: CompiledExpr,
        clamp_min: Option<f64>,
        clamp_max: Option<f64>,
    },
    Piecewise(Vec<(CompiledGuard, CompiledExpr)>),
}

/// A model bound to a scenario's inputs, ready for repeated runs.
pub struct CompiledModel {
    grid: TimeGrid,
    names: Vec<String>,
    slots: HashMap<String, usize>,
    specs: Vec<VariableSpec>,
    kinds: Vec<SlotKind>,
    /// Endogenous slots in same-step dependency order.
    order: Vec<usize>,
    /// Initial values per slot (exogenous entries hold the first sample).
    init: Vec<f64>,
    /// Expanded exogenous columns; empty vec for endogenous slots.
    inputs: Vec<Vec<f64>>,
}

struct ForcedSegment {
    start: usize,
    vals: Vec<f64>,
}

impl CompiledModel {
    pub fn compile(model: &SystemModel, scenario: &Scenario) -> Result<CompiledModel> {
        let grid = model.grid()?;
        let mut slots = HashMap::new();
        for (i, v) in model.variables.iter().enumerate() {
            if slots.insert(v.name.clone(), i).is_some() {
                return Err(SimulatorError::DuplicateVariable(v.name.clone()));
            }
            if !v.min.is_finite() || !v.max.is_finite() || v.min > v.max {
                return Err(SimulatorError::BadBounds {
                    var: v.name.clone(),
                    min: v.min,
                    max: v.max,
                });
            }
        }
        let names: Vec<String> = model.variables.iter().map(|v| v.name.clone()).collect();
        let specs = model.variables.clone();

        // One equation per endogenous variable, none for exogenous ones.
        let mut forms: Vec<Option<&EquationForm>> = vec![None; names.len()];
        for eq in &model.equations {
            let i = *slots
                .get(&eq.target)
                .ok_or_else(|| SimulatorError::BadTarget(eq.target.clone()))?;
            if specs[i].role != Role::Endogenous {
                return Err(SimulatorError::BadTarget(eq.target.clone()));
            }
            if forms[i].is_some() {
                return Err(SimulatorError::DuplicateEquation(eq.target.clone()));
            }
            forms[i] = Some(&eq.form);
        }

        let mut kinds = Vec::with_capacity(names.len());
        for (i, spec) in specs.iter().enumerate() {
            let kind = match (spec.role, forms[i]) {
                (Role::Exogenous, _) => SlotKind::Input,
                (Role::Endogenous, None) => {
                    return Err(SimulatorError::MissingEquation(spec.name.clone()))
                }
                (Role::Endogenous, Some(form)) => {
                    compile_form(form, &slots).map_err(|source| SimulatorError::BadEquation {
                        target: spec.name.clone(),
                        source,
                    })?
                }
            };
            kinds.push(kind);
        }

        let order = same_step_order(&names, &specs, &forms)?;

        // Initial values: required, in bounds, endogenous-only.
        for key in model.initial.keys() {
            match slots.get(key) {
                Some(&i) if specs[i].role == Role::Endogenous => {}
                _ => return Err(SimulatorError::UnknownInitial(key.clone())),
            }
        }
        let mut init = vec![0.0; names.len()];
        for (i, spec) in specs.iter().enumerate() {
            if spec.role != Role::Endogenous {
                continue;
            }
            let v = *model
                .initial
                .get(&spec.name)
                .ok_or_else(|| SimulatorError::MissingInitial(spec.name.clone()))?;
            if !v.is_finite() || v < spec.min || v > spec.max {
                return Err(SimulatorError::InitialOutOfBounds {
                    var: spec.name.clone(),
                    value: v,
                    min: spec.min,
                    max: spec.max,
                });
            }
            init[i] = v;
        }

        // Expand exogenous inputs to full columns.
        for key in scenario.constants.keys() {
            match slots.get(key) {
                Some(&i) if specs[i].role == Role::Exogenous => {}
                _ => return Err(SimulatorError::UnknownConstant(key.clone())),
            }
        }
        let mut inputs = vec![Vec::new(); names.len()];
        for (i, spec) in specs.iter().enumerate() {
            if spec.role != Role::Exogenous {
                continue;
            }
            let col = expand_input(spec, scenario, &grid, model.duration)?;
            init[i] = col[0];
            inputs[i] = col;
        }

        Ok(CompiledModel {
            grid,
            names,
            slots,
            specs,
            kinds,
            order,
            init,
            inputs,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Simulates with the given forced slices (applied after any scenario
    /// forcing baked in by [`simulate`]'s caller; later slices win on
    /// overlap within this call).
    pub fn run(&self, forced: &[TrajectorySlice]) -> Result<Trajectory> {
        let plan = self.forced_plan(forced)?;
        let n = self.grid.count;
        let m = self.names.len();
        let dt = self.grid.step;
        let mut cols: Vec<Vec<f64>> = (0..m).map(|_| Vec::with_capacity(n)).collect();
        let mut prev = self.init.clone();
        let mut cur = vec![0.0; m];
        let mut ders = vec![0.0; m];

        for k in 0..n {
            let t = self.grid.time(k);
            cur.copy_from_slice(&prev);
            for (i, kind) in self.kinds.iter().enumerate() {
                if matches!(kind, SlotKind::Input) {
                    cur[i] = self.inputs[i][k];
                }
            }
            for &i in &self.order {
                let var = || self.names[i].clone();
                let mut v = match &self.kinds[i] {
                    SlotKind::Input => unreachable!("inputs are not in the equation order"),
                    SlotKind::Closed(e) => e
                        .eval(&cur, &ders, t)
                        .map_err(|_| SimulatorError::DivisionByZero { var: var(), t })?,
                    SlotKind::Ode {
                        rhs,
                        clamp_min,
                        clamp_max,
                    } => {
                        if k == 0 {
                            prev[i]
                        } else {
                            let rate = rhs
                                .eval(&prev, &ders, self.grid.time(k - 1))
                                .map_err(|_| SimulatorError::DivisionByZero { var: var(), t })?;
                            let mut x = prev[i] + dt * rate;
                            if let Some(lo) = clamp_min {
                                x = x.max(*lo);
                            }
                            if let Some(hi) = clamp_max {
                                x = x.min(*hi);
                            }
                            x
                        }
                    }
                    SlotKind::Piecewise(arms) => {
                        let mut chosen = None;
                        for (g, e) in arms {
                            let on = g
                                .eval(&prev, &ders, t)
                                .map_err(|_| SimulatorError::DivisionByZero { var: var(), t })?;
                            if on {
                                chosen = Some(e);
                                break;
                            }
                        }
                        let e = chosen.ok_or_else(|| SimulatorError::NoArm { var: var(), t })?;
                        e.eval(&cur, &ders, t)
                            .map_err(|_| SimulatorError::DivisionByZero { var: var(), t })?
                    }
                };
                for seg in &plan[i] {
                    if k >= seg.start && k < seg.start + seg.vals.len() {
                        v = seg.vals[k - seg.start];
                    }
                }
                if !v.is_finite() {
                    return Err(SimulatorError::NonFinite { var: var(), t });
                }
                cur[i] = v;
            }
            for i in 0..m {
                cols[i].push(cur[i]);
            }
            // der() during step k+1 reads the difference realised at step k;
            // step 0 has no predecessor, so derivatives start at zero.
            if k > 0 {
                for i in 0..m {
                    ders[i] = (cur[i] - prev[i]) / dt;
                }
            }
            prev.copy_from_slice(&cur);
        }

        let columns = self
            .names
            .iter()
            .cloned()
            .zip(cols)
            .collect::<Vec<(String, Vec<f64>)>>();
        Ok(Trajectory::new(self.grid, columns)?)
    }

    fn forced_plan(&self, forced: &[TrajectorySlice]) -> Result<Vec<Vec<ForcedSegment>>> {
        let mut plan: Vec<Vec<ForcedSegment>> = (0..self.names.len()).map(|_| Vec::new()).collect();
        for slice in forced {
            let iv = slice.interval();
            let traj = slice.trajectory();
            self.grid.aligned_with(traj.grid())?;
            let start = self.grid.snap(iv.lo)?;
            let end = self.grid.snap(iv.hi)?;
            for var in traj.names() {
                let i = *self
                    .slots
                    .get(var)
                    .ok_or_else(|| SimulatorError::ForcedUnknown(var.clone()))?;
                let spec = &self.specs[i];
                if spec.role != Role::Endogenous {
                    return Err(SimulatorError::ForcedExogenous(var.clone()));
                }
                let col = traj.column(var)?;
                let mut vals = Vec::with_capacity(end - start);
                for k in start..end {
                    let j = traj.grid().snap(self.grid.time(k))?;
                    let v = col[j.min(col.len() - 1)];
                    if !v.is_finite() || v < spec.min || v > spec.max {
                        return Err(SimulatorError::ForcedOutOfBounds {
                            var: var.clone(),
                            t: self.grid.time(k),
                            value: v,
                            min: spec.min,
                            max: spec.max,
                        });
                    }
                    vals.push(v);
                }
                plan[i].push(ForcedSegment { start, vals });
            }
        }
        Ok(plan)
    }
}

fn compile_form(
    form: &EquationForm,
    slots: &HashMap<String, usize>,
) -> std::result::Result<SlotKind, EquationError> {
    Ok(match form {
        EquationForm::ClosedForm(a) => SlotKind::Closed(compile_expr(a, slots)?),
        EquationForm::Ode {
            rhs,
            clamp_min,
            clamp_max,
        } => SlotKind::Ode {
            rhs: compile_expr(rhs, slots)?,
            clamp_min: *clamp_min,
            clamp_max: *clamp_max,
        },
        EquationForm::Piecewise(arms) => {
            let mut compiled = Vec::with_capacity(arms.len());
            for (g, e) in arms {
                compiled.push((compile_guard(g, slots)?, compile_expr(e, slots)?));
            }
            SlotKind::Piecewise(compiled)
        }
    })
}

/// Kahn's algorithm over same-step references; ties broken by declaration
/// order so evaluation order is stable.
fn same_step_order(
    names: &[String],
    specs: &[VariableSpec],
    forms: &[Option<&EquationForm>],
) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let n = names.len();
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, form) in forms.iter().enumerate() {
        let Some(form) = form else { continue };
        for r in form.same_step_refs() {
            let j = *index
                .get(r.as_str())
                .ok_or(EquationError::UnknownVariable(r.clone()))
                .map_err(|source| SimulatorError::BadEquation {
                    target: names[i].clone(),
                    source,
                })?;
            if specs[j].role == Role::Endogenous && !deps[i].contains(&j) {
                deps[i].push(j);
            }
        }
    }
    let mut emitted = vec![false; n];
    let mut order = Vec::new();
    loop {
        let mut progressed = false;
        for i in 0..n {
            if emitted[i] || specs[i].role != Role::Endogenous {
                continue;
            }
            if deps[i].iter().all(|&j| emitted[j]) {
                emitted[i] = true;
                order.push(i);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let stuck: Vec<&str> = (0..n)
        .filter(|&i| specs[i].role == Role::Endogenous && !emitted[i])
        .map(|i| names[i].as_str())
        .collect();
    if !stuck.is_empty() {
        return Err(SimulatorError::Cycle(stuck.join(", ")));
    }
    Ok(order)
}

fn expand_input(
    spec: &VariableSpec,
    scenario: &Scenario,
    grid: &TimeGrid,
    duration: f64,
) -> Result<Vec<f64>> {
    if let Some(inputs) = &scenario.inputs {
        if inputs.has(&spec.name) {
            grid.aligned_with(inputs.grid())?;
            let dom = inputs.domain();
            if dom.lo > 0.0 || inputs.grid().end() < duration - 1e-9 {
                return Err(SimulatorError::InputCoverage {
                    duration,
                    lo: dom.lo,
                    hi: inputs.grid().end(),
                });
            }
            let col = inputs.column(&spec.name)?;
            let mut out = Vec::with_capacity(grid.count);
            for k in 0..grid.count {
                let j = inputs.grid().snap(grid.time(k))?;
                out.push(col[j]);
            }
            return Ok(out);
        }
    }
    match scenario.constants.get(&spec.name) {
        Some(&v) if v.is_finite() => Ok(vec![v; grid.count]),
        _ => Err(SimulatorError::MissingInput(spec.name.clone())),
    }
}

/// Runs the scenario (inputs plus its own forced slices) against the model.
pub fn simulate(model: &SystemModel, scenario: &Scenario) -> Result<Trajectory> {
    let compiled = CompiledModel::compile(model, scenario)?;
    compiled.run(&scenario.forced)
}

// ---------------------------------------------------------------------------
// Built-in models

/// A packaged example: model, failing scenario, and the effect to explain.
pub struct Builtin {
    pub model: SystemModel,
    pub scenario: Scenario,
    pub phi: String,
}

/// Built-in example systems.
///
/// `av_running_example` is an autonomous vehicle whose lidar range drops
/// when the battery falls below a critical charge; with weak brakes and a
/// decayed battery it detects a pedestrian too late and collides around
/// t = 8.1 s. The suspension builtins model a self-levelling chassis
/// (first-order filter, valve-driven level changes) in a nominal tuning and
/// two faulty variants: `suspension_mutant1` raises the outer upper
/// tolerance (otu = 6) so pressure is released too late, and
/// `suspension_mutant2` disconnects road disturbances from the filtered
/// disturbance state (e' = 0) so the chassis never reacts.
pub fn builtin(name: &str) -> Result<Builtin> {
    match name {
        "av_running_example" => Ok(av_running_example()),
        "suspension_nominal" => Ok(suspension(SuspensionVariant::Nominal)),
        "suspension_mutant1" => Ok(suspension(SuspensionVariant::Mutant1)),
        "suspension_mutant2" => Ok(suspension(SuspensionVariant::Mutant2)),
        other => Err(SimulatorError::UnknownBuiltin(other.to_string())),
    }
}

fn var(name: &str, role: Role, min: f64, max: f64, is_constant: bool) -> VariableSpec {
    VariableSpec {
        name: name.to_string(),
        role,
        min,
        max,
        is_constant,
    }
}

fn closed(target: &str, expr: &str) -> StructuralEquation {
    StructuralEquation {
        target: target.to_string(),
        form: EquationForm::ClosedForm(parse_formula(expr).expect("builtin formula parses")),
    }
}

fn ode(target: &str, rhs: &str) -> StructuralEquation {
    StructuralEquation {
        target: target.to_string(),
        form: EquationForm::Ode {
            rhs: parse_formula(rhs).expect("builtin formula parses"),
            clamp_min: None,
            clamp_max: None,
        },
    }
}

fn ode_clamped(target: &str, rhs: &str, lo: Option<f64>, hi: Option<f64>) -> StructuralEquation {
    StructuralEquation {
        target: target.to_string(),
        form: EquationForm::Ode {
            rhs: parse_formula(rhs).expect("builtin formula parses"),
            clamp_min: lo,
            clamp_max: hi,
        },
    }
}

fn piecewise(target: &str, arms: &[(&str, &str)]) -> StructuralEquation {
    let parsed = arms
        .iter()
        .map(|(g, e)| {
            (
                parse_guard(g).expect("builtin guard parses"),
                parse_formula(e).expect("builtin formula parses"),
            )
        })
        .collect();
    StructuralEquation {
        target: target.to_string(),
        form: EquationForm::Piecewise(parsed),
    }
}

fn valuation(entries: &[(&str, f64)]) -> Valuation {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect::<BTreeMap<String, f64>>()
}

fn av_running_example() -> Builtin {
    let variables = vec![
        var("pedestrianPosition", Role::Exogenous, 0.0, 100.0, true),
        var("g", Role::Exogenous, 9.8, 9.8, true),
        var("critical", Role::Exogenous, 0.0, 10.0, true),
        var("decay", Role::Exogenous, 0.0, 2.0, true),
        var("brakes", Role::Endogenous, 0.2, 0.45, true),
        var("battery", Role::Endogenous, 0.0, 10.0, false),
        var("belowCritical", Role::Endogenous, 0.0, 1.0, false),
        var("lidarRange", Role::Endogenous, 10.0, 60.0, false),
        var("braking", Role::Endogenous, 0.0, 1.0, false),
        var("acceleration", Role::Endogenous, -10.0, 0.0, false),
        var("speed", Role::Endogenous, 0.0, 10.0, false),
        var("carPosition", Role::Endogenous, 0.0, 100.0, false),
    ];
    let equations = vec![
        closed("brakes", "0.2"),
        closed("battery", "10 - t * decay"),
        piecewise("belowCritical", &[("battery < critical", "1"), ("1 = 1", "0")]),
        piecewise(
            "lidarRange",
            &[("battery >= critical", "20"), ("1 = 1", "10")],
        ),
        // Braking latches: once engaged it stays on even if the lidar's
        // range later shrinks back.
        piecewise(
            "braking",
            &[
                (
                    "braking > 0.5 || pedestrianPosition - carPosition <= lidarRange",
                    "1",
                ),
                ("1 = 1", "0"),
            ],
        ),
        piecewise(
            "acceleration",
            &[("braking > 0.5 && speed > 0", "-brakes * g"), ("1 = 1", "0")],
        ),
        ode_clamped("speed", "acceleration", Some(0.0), None),
        ode("carPosition", "speed"),
    ];
    let initial = valuation(&[
        ("brakes", 0.2),
        ("battery", 10.0),
        ("belowCritical", 0.0),
        ("lidarRange", 20.0),
        ("braking", 0.0),
        ("acceleration", 0.0),
        ("speed", 10.0),
        ("carPosition", 0.0),
    ]);
    let scenario = Scenario::from_constants(valuation(&[
        ("pedestrianPosition", 80.0),
        ("g", 9.8),
        ("critical", 5.0),
        ("decay", 1.0),
    ]));
    Builtin {
        model: SystemModel {
            variables,
            equations,
            initial,
            duration: 10.0,
            dt: 0.01,
        },
        scenario,
        // The effect is the collision: the car's position is not below the
        // pedestrian's everywhere on [0, 10).
        phi: "!carPosition <_[0,10) pedestrianPosition".to_string(),
    }
}

enum SuspensionVariant {
    Nominal,
    Mutant1,
    Mutant2,
}

fn suspension(variant: SuspensionVariant) -> Builtin {
    let mutant2 = matches!(variant, SuspensionVariant::Mutant2);
    let otu_value = match variant {
        SuspensionVariant::Mutant1 => 6.0,
        _ => 5.0,
    };
    // Mutant 2 narrows e and f so that neither alone can push the filtered
    // level out of the tolerance band: f stays within [6, 6.5] under any
    // admissible e course, and every reachable band contains that range.
    // Only a joint override (f dragged low, then the set point raised via
    // e) activates the valves.
    let (e_bounds, h_bounds) = if mutant2 {
        ((4.0, 4.5), (-10.0, 10.0))
    } else {
        ((0.0, 6.0), (0.0, 15.0))
    };
    let f_bounds = if mutant2 { (5.4, 9.2) } else { (0.0, 15.0) };
    let variables = vec![
        var("dist", Role::Exogenous, 0.0, 5.0, false),
        var("cp", Role::Exogenous, -10.0, 10.0, true),
        var("ev", Role::Exogenous, -10.0, 10.0, true),
        var("bend", Role::Exogenous, 0.0, 1.0, false),
        var("e", Role::Endogenous, e_bounds.0, e_bounds.1, false),
        var("cRate", Role::Endogenous, -10.0, 10.0, false),
        var("c", Role::Endogenous, -30.0, 30.0, false),
        var("h", Role::Endogenous, h_bounds.0, h_bounds.1, false),
        var("f", Role::Endogenous, f_bounds.0, f_bounds.1, false),
        var("T", Role::Endogenous, 5.0, 15.0, true),
        var("otu", Role::Endogenous, 2.0, 8.0, true),
        var("itu", Role::Endogenous, 2.0, 6.0, true),
        var("itl", Role::Endogenous, 0.5, 3.0, true),
        var("otl", Role::Endogenous, 0.5, 1.5, true),
        var("sp", Role::Endogenous, if mutant2 { 1.0 } else { 0.0 }, 8.0, false),
    ];
    let equations = vec![
        ode("e", if mutant2 { "0" } else { "dist" }),
        // Valve command: release when the filtered level exceeds the outer
        // upper band, pump when it falls below the outer lower band.
        piecewise(
            "cRate",
            &[
                ("f > sp + otu", "ev"),
                ("f < sp + otl", "cp"),
                ("1 = 1", "0"),
            ],
        ),
        ode("c", "cRate"),
        ode("h", "der(c) + der(e)"),
        ode("f", "(h - f) / T"),
        closed("T", "10.3"),
        closed("otu", if matches!(variant, SuspensionVariant::Mutant1) { "6" } else { "5" }),
        closed("itu", "4"),
        closed("itl", "2"),
        closed("otl", "1"),
        closed("sp", "e + ((itl + itu) / 2) * (1 / T)"),
    ];
    let sp0 = |e0: f64| e0 + ((2.0 + 4.0) / 2.0) * (1.0 / 10.3);
    let (initial, constants, duration, phi) = match variant {
        SuspensionVariant::Nominal => (
            valuation(&[
                ("e", 0.0),
                ("cRate", 0.0),
                ("c", 6.8),
                ("h", 6.0),
                ("f", 6.0),
                ("T", 10.3),
                ("otu", otu_value),
                ("itu", 4.0),
                ("itl", 2.0),
                ("otl", 1.0),
                ("sp", sp0(0.0)),
            ]),
            valuation(&[("dist", 0.0), ("cp", 0.25), ("ev", -0.25), ("bend", 0.0)]),
            20.0,
            // Not an effect to explain; the nominal build documents the
            // regulation band the mutants break.
            "f <_[10,20) sp + 6".to_string(),
        ),
        SuspensionVariant::Mutant1 => (
            valuation(&[
                ("e", 0.0),
                ("cRate", 0.0),
                ("c", 6.8),
                ("h", 10.014),
                ("f", 4.8),
                ("T", 10.3),
                ("otu", otu_value),
                ("itu", 4.0),
                ("itl", 2.0),
                ("otl", 1.0),
                ("sp", sp0(0.0)),
            ]),
            valuation(&[("dist", 0.342), ("cp", 5.0), ("ev", -2.0), ("bend", 0.0)]),
            14.0,
            "f >_[8,12) sp + 5".to_string(),
        ),
        SuspensionVariant::Mutant2 => (
            valuation(&[
                ("e", 4.0),
                ("cRate", 0.0),
                ("c", 0.0),
                ("h", 6.0),
                ("f", 6.0),
                ("T", 10.3),
                ("otu", otu_value),
                ("itu", 4.0),
                ("itl", 2.0),
                ("otl", 1.0),
                ("sp", sp0(4.0)),
            ]),
            valuation(&[("dist", 1.0), ("cp", 2.0), ("ev", -2.0), ("bend", 0.0)]),
            10.0,
            "dist >_[0,10) 0 && c =_[0,10) 0".to_string(),
        ),
    };
    Builtin {
        model: SystemModel {
            variables,
            equations,
            initial,
            duration,
            dt: 0.01,
        },
        scenario: Scenario::from_constants(constants),
        phi,
    }
}
