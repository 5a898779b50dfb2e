//! The slice-based checker agrees with the exhaustive discrete checker on
//! the double-prevention example once the boolean model is encoded as
//! constant trajectories: negation as `1 - a`, conjunction as `a * b`,
//! disjunction as `a + b - a * b`. Verdicts are compared for every context
//! and every candidate of size one or two.

use std::collections::BTreeMap;

use cpscause_core::cause_checker::{
    AlternativeQuery, CauseCandidate, CauseChecker, CheckError, SubsetSearcher,
};
use cpscause_core::causal_model::CausalModel;
use cpscause_core::event_logic;
use cpscause_core::hp_discrete::{double_prevention_example, evaluate, is_cause_discrete};
use cpscause_core::simulator::{
    simulate, CompiledModel, EquationForm, Role, Scenario, StructuralEquation, SystemModel,
    VariableSpec,
};
use cpscause_core::trajectory::{TimeInterval, Trajectory, TrajectorySlice};
use cpscause_core::DEFAULT_TOL;

const ENDO: [&str; 5] = ["AT", "BT", "AH", "BH", "PH"];

/// In a 0/1 encoding the complement is the only differing course, so the
/// alternative search degenerates to a single flip per slice.
struct BooleanSearcher;

impl SubsetSearcher for BooleanSearcher {
    fn find_alternative(
        &self,
        query: &AlternativeQuery,
        flip: &(dyn Fn(&[TrajectorySlice]) -> Result<bool, CheckError> + Sync),
    ) -> Result<Option<Vec<TrajectorySlice>>, CheckError> {
        let alt: Vec<TrajectorySlice> = query
            .xs
            .iter()
            .map(|s| {
                let grid = *s.trajectory().grid();
                let var = s.trajectory().names()[0].clone();
                let value = 1.0 - s.trajectory().column(&var).unwrap()[0];
                let traj = Trajectory::constant(grid, &var, value).unwrap();
                TrajectorySlice::new(s.interval(), traj).unwrap()
            })
            .collect();
        if flip(&alt)? {
            Ok(Some(alt))
        } else {
            Ok(None)
        }
    }
}

/// Arithmetic encoding of the two-track prevention story: `AH = not AT`,
/// `BH = AT and not BT`, `PH = AH or BH`.
fn encoded_system() -> SystemModel {
    let var = |name: &str, role| VariableSpec {
        name: name.to_string(),
        role,
        min: 0.0,
        max: 1.0,
        is_constant: true,
    };
    let closed = |target: &str, expr: &str| StructuralEquation {
        target: target.to_string(),
        form: EquationForm::ClosedForm(cpscause_core::equations::parse_formula(expr).unwrap()),
    };
    let mut variables = vec![var("uA", Role::Exogenous), var("uB", Role::Exogenous)];
    variables.extend(ENDO.iter().map(|v| var(v, Role::Endogenous)));
    SystemModel {
        variables,
        equations: vec![
            closed("AT", "uA"),
            closed("BT", "uB"),
            closed("AH", "1 - AT"),
            closed("BH", "AT * (1 - BT)"),
            closed("PH", "AH + BH - AH * BH"),
        ],
        initial: ENDO.iter().map(|v| (v.to_string(), 0.0)).collect(),
        duration: 0.1,
        dt: 0.01,
    }
}

/// Singleton and pair candidates over the endogenous variables.
fn candidate_sets() -> Vec<Vec<&'static str>> {
    let mut sets: Vec<Vec<&'static str>> = ENDO.iter().map(|v| vec![*v]).collect();
    for (i, a) in ENDO.iter().enumerate() {
        for b in &ENDO[i + 1..] {
            sets.push(vec![a, b]);
        }
    }
    sets
}

#[test]
fn verdicts_match_the_discrete_checker_in_every_context() {
    let discrete = double_prevention_example();
    let system = encoded_system();
    let phi = event_logic::parse("PH =_[0,0.1) 1").unwrap();
    let effect = [("PH".to_string(), true)];
    let mut causes = 0usize;
    let mut checks = 0usize;

    for (ua, ub) in [(false, false), (false, true), (true, false), (true, true)] {
        let context: BTreeMap<String, bool> =
            [("uA".to_string(), ua), ("uB".to_string(), ub)]
                .into_iter()
                .collect();
        let world = evaluate(&discrete, &context).unwrap();

        let scenario = Scenario::from_constants(
            [
                ("uA".to_string(), f64::from(u8::from(ua))),
                ("uB".to_string(), f64::from(u8::from(ub))),
            ]
            .into_iter()
            .collect(),
        );
        let actual = simulate(&system, &scenario).unwrap();
        // The encoding reproduces the discrete world sample for sample.
        for v in ENDO {
            let expected = f64::from(u8::from(world[v]));
            assert!(actual
                .column(v)
                .unwrap()
                .iter()
                .all(|&s| (s - expected).abs() < DEFAULT_TOL));
        }

        let compiled = CompiledModel::compile(&system, &scenario).unwrap();
        let mut model = CausalModel::new(system.clone());
        model.add_trajectory(actual.clone()).unwrap();
        let analysis: Vec<String> = ENDO.iter().map(|v| v.to_string()).collect();
        let checker = CauseChecker::new(
            &model,
            &compiled,
            &actual,
            &analysis,
            phi.clone(),
            DEFAULT_TOL,
        )
        .unwrap();

        let grid = actual.grid();
        let full = TimeInterval::new(grid.start, grid.end()).unwrap();
        for vars in candidate_sets() {
            let parts: Vec<(String, TimeInterval)> =
                vars.iter().map(|v| (v.to_string(), full)).collect();
            let candidate = CauseCandidate::from_actual(&actual, &parts).unwrap();
            let continuous = checker
                .is_cause(&candidate, &BooleanSearcher, 1, 1.0)
                .unwrap();

            let xs: Vec<(String, bool)> =
                vars.iter().map(|v| (v.to_string(), world[*v])).collect();
            let reference = is_cause_discrete(&discrete, &context, &xs, &effect).unwrap();

            assert_eq!(
                continuous.is_some(),
                reference.is_some(),
                "context uA={ua} uB={ub}, candidate {vars:?}"
            );
            checks += 1;
            causes += usize::from(continuous.is_some());
        }
    }

    assert_eq!(checks, 60);
    // Both tracks covered: the threat-neutralizing inactions (AT and the
    // handler variables) in the contexts where the effect occurs, nothing
    // in the context where it does not.
    assert_eq!(causes, 10);
}

#[test]
fn canonical_inaction_verdicts_survive_the_encoding() {
    let system = encoded_system();
    let scenario = Scenario::from_constants(
        [("uA".to_string(), 0.0), ("uB".to_string(), 0.0)]
            .into_iter()
            .collect(),
    );
    let actual = simulate(&system, &scenario).unwrap();
    let compiled = CompiledModel::compile(&system, &scenario).unwrap();
    let mut model = CausalModel::new(system.clone());
    model.add_trajectory(actual.clone()).unwrap();
    let analysis: Vec<String> = ENDO.iter().map(|v| v.to_string()).collect();
    let checker = CauseChecker::new(
        &model,
        &compiled,
        &actual,
        &analysis,
        event_logic::parse("PH =_[0,0.1) 1").unwrap(),
        DEFAULT_TOL,
    )
    .unwrap();
    let grid = actual.grid();
    let full = TimeInterval::new(grid.start, grid.end()).unwrap();

    // Standing down the first track is a cause, and the witness must hold
    // the backup handler at its factual zero while the first handler is
    // left free to respond.
    let at = CauseCandidate::from_actual(&actual, &[("AT".to_string(), full)]).unwrap();
    let record = checker
        .is_cause(&at, &BooleanSearcher, 1, 1.0)
        .unwrap()
        .expect("AT inaction is a cause");
    assert!(record.contingency.contains(&"BH".to_string()));
    assert!(!record.contingency.contains(&"AH".to_string()));

    // The second track never fires here, so its inaction explains nothing.
    let bt = CauseCandidate::from_actual(&actual, &[("BT".to_string(), full)]).unwrap();
    assert!(checker
        .is_cause(&bt, &BooleanSearcher, 1, 1.0)
        .unwrap()
        .is_none());
}
