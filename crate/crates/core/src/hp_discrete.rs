//! Actual causality over binary models.
//!
//! This is the classical definition the trajectory-based engine extends:
//! variables take values in {0, 1}, structural equations are truth tables,
//! and contexts are assignments to the exogenous variables. Causes are
//! checked exhaustively, so this module doubles as an oracle for the
//! continuous machinery on models small enough to enumerate.
//!
//! The contingency set W is frozen at the values the variables take in the
//! actual world (the modified definition); witnesses are searched by
//! increasing |W|, so the returned contingency is one of minimal size.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiscreteError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("missing context value for {0}")]
    MissingContext(String),
    #[error("truth table for {target} has {got} rows, expected {expected}")]
    BadTable {
        target: String,
        got: usize,
        expected: usize,
    },
    #[error("dependency cycle among: {}", .0.join(", "))]
    Cyclic(Vec<String>),
    #[error("more than one equation for {0}")]
    DuplicateEquation(String),
    #[error("model file: {0}")]
    Parse(String),
}

type Result<T> = std::result::Result<T, DiscreteError>;

/// One structural equation as a truth table. Row indices treat the first
/// parent as the most significant bit.
#[derive(Debug, Clone)]
pub struct DiscreteEquation {
    pub target: String,
    pub parents: Vec<String>,
    pub table: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub exogenous: Vec<String>,
    pub equations: Vec<DiscreteEquation>,
}

pub type Assignment = BTreeMap<String, bool>;

/// A successful causality check: the alternative values for the cause
/// variables and the contingency frozen to exhibit them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteWitness {
    pub x_prime: Vec<(String, bool)>,
    pub w: Vec<String>,
}

impl DiscreteModel {
    pub fn endogenous(&self) -> Vec<&str> {
        self.equations.iter().map(|e| e.target.as_str()).collect()
    }

    fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for eq in &self.equations {
            if seen.contains(&&eq.target) {
                return Err(DiscreteError::DuplicateEquation(eq.target.clone()));
            }
            seen.push(&eq.target);
            let expected = 1usize << eq.parents.len();
            if eq.table.len() != expected {
                return Err(DiscreteError::BadTable {
                    target: eq.target.clone(),
                    got: eq.table.len(),
                    expected,
                });
            }
            for p in &eq.parents {
                if !self.exogenous.contains(p) && !self.equations.iter().any(|e| &e.target == p) {
                    return Err(DiscreteError::UnknownVariable(p.clone()));
                }
            }
        }
        Ok(())
    }

    fn topo_order(&self) -> Result<Vec<usize>> {
        let n = self.equations.len();
        let mut emitted = vec![false; n];
        let mut order = Vec::with_capacity(n);
        loop {
            let mut progressed = false;
            for i in 0..n {
                if emitted[i] {
                    continue;
                }
                let ready = self.equations[i].parents.iter().all(|p| {
                    self.exogenous.contains(p)
                        || self
                            .equations
                            .iter()
                            .position(|e| &e.target == p)
                            .is_some_and(|j| emitted[j])
                });
                if ready {
                    emitted[i] = true;
                    order.push(i);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        if order.len() < n {
            let stuck: Vec<String> = (0..n)
                .filter(|&i| !emitted[i])
                .map(|i| self.equations[i].target.clone())
                .collect();
            return Err(DiscreteError::Cyclic(stuck));
        }
        Ok(order)
    }
}

/// Solves the equations under the context, with `overrides` replacing the
/// equations of intervened variables.
fn evaluate_with(
    model: &DiscreteModel,
    context: &Assignment,
    overrides: &Assignment,
) -> Result<Assignment> {
    model.validate()?;
    let mut values = Assignment::new();
    for u in &model.exogenous {
        let v = context
            .get(u)
            .ok_or_else(|| DiscreteError::MissingContext(u.clone()))?;
        values.insert(u.clone(), *v);
    }
    for i in model.topo_order()? {
        let eq = &model.equations[i];
        let v = if let Some(&forced) = overrides.get(&eq.target) {
            forced
        } else {
            let mut idx = 0usize;
            for p in &eq.parents {
                idx = (idx << 1) | usize::from(values[p]);
            }
            eq.table[idx]
        };
        values.insert(eq.target.clone(), v);
    }
    Ok(values)
}

/// The unique solution of the model under the context.
pub fn evaluate(model: &DiscreteModel, context: &Assignment) -> Result<Assignment> {
    evaluate_with(model, context, &Assignment::new())
}

fn effect_holds(effect: &[(String, bool)], world: &Assignment) -> bool {
    effect.iter().all(|(var, v)| world.get(var) == Some(v))
}

/// Searches for a contingency W and alternative x' under which the effect
/// fails. W candidates exclude both the cause and the effect variables and
/// are tried by increasing size, then lexicographically.
fn counterfactual_witness(
    model: &DiscreteModel,
    context: &Assignment,
    actual: &Assignment,
    xs: &[(String, bool)],
    effect: &[(String, bool)],
) -> Result<Option<DiscreteWitness>> {
    let candidates: Vec<&str> = model
        .equations
        .iter()
        .map(|e| e.target.as_str())
        .filter(|v| {
            !xs.iter().any(|(x, _)| x == v) && !effect.iter().any(|(f, _)| f == v)
        })
        .collect();
    let mut masks: Vec<u32> = (0..(1u32 << candidates.len())).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        for alt in 0..(1u32 << xs.len()) {
            let mut overrides = Assignment::new();
            let mut x_prime = Vec::with_capacity(xs.len());
            for (bit, (var, _)) in xs.iter().enumerate() {
                let v = (alt >> (xs.len() - 1 - bit)) & 1 == 1;
                overrides.insert(var.clone(), v);
                x_prime.push((var.clone(), v));
            }
            let mut w = Vec::new();
            for (bit, var) in candidates.iter().enumerate() {
                if (mask >> bit) & 1 == 1 {
                    overrides.insert((*var).to_string(), actual[*var]);
                    w.push((*var).to_string());
                }
            }
            let world = evaluate_with(model, context, &overrides)?;
            if !effect_holds(effect, &world) {
                return Ok(Some(DiscreteWitness { x_prime, w }));
            }
        }
    }
    Ok(None)
}

/// Whether `xs` (variables at their claimed values) is an actual cause of
/// the effect conjunction under the context. Returns the witness when so.
///
/// The three conditions: the claimed values and the effect occur in the
/// actual world; some alternative assignment under some frozen contingency
/// removes the effect; and no strict subset of the claim already does.
pub fn is_cause_discrete(
    model: &DiscreteModel,
    context: &Assignment,
    xs: &[(String, bool)],
    effect: &[(String, bool)],
) -> Result<Option<DiscreteWitness>> {
    if xs.is_empty() {
        return Ok(None);
    }
    let actual = evaluate(model, context)?;
    for (var, v) in xs.iter().chain(effect) {
        if !actual.contains_key(var) {
            return Err(DiscreteError::UnknownVariable(var.clone()));
        }
        if actual[var] != *v {
            return Ok(None);
        }
    }
    let witness = counterfactual_witness(model, context, &actual, xs, effect)?;
    let Some(witness) = witness else {
        return Ok(None);
    };
    // Minimality: a strict non-empty subset with a working counterfactual
    // disqualifies the whole set.
    for mask in 1..((1u32 << xs.len()) - 1) {
        let subset: Vec<(String, bool)> = xs
            .iter()
            .enumerate()
            .filter(|(i, _)| (mask >> i) & 1 == 1)
            .map(|(_, p)| p.clone())
            .collect();
        if counterfactual_witness(model, context, &actual, &subset, effect)?.is_some() {
            return Ok(None);
        }
    }
    Ok(Some(witness))
}

/// Parses the JSON format for binary models:
///
/// ```json
/// {
///   "exogenous": ["uA"],
///   "equations": {
///     "AT": {"parents": ["uA"], "table": [0, 1]}
///   }
/// }
/// ```
pub fn parse_discrete_json(text: &str) -> Result<DiscreteModel> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| DiscreteError::Parse(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| DiscreteError::Parse("top level must be an object".into()))?;
    let exogenous: Vec<String> = serde_json::from_value(
        obj.get("exogenous")
            .ok_or_else(|| DiscreteError::Parse("missing \"exogenous\"".into()))?
            .clone(),
    )
    .map_err(|e| DiscreteError::Parse(format!("exogenous: {e}")))?;
    let eq_obj = obj
        .get("equations")
        .and_then(Value::as_object)
        .ok_or_else(|| DiscreteError::Parse("missing \"equations\" object".into()))?;
    let mut equations = Vec::new();
    for (target, v) in eq_obj {
        let arm = v
            .as_object()
            .ok_or_else(|| DiscreteError::Parse(format!("equation for {target}")))?;
        let parents: Vec<String> = serde_json::from_value(
            arm.get("parents")
                .ok_or_else(|| DiscreteError::Parse(format!("{target}: missing parents")))?
                .clone(),
        )
        .map_err(|e| DiscreteError::Parse(format!("{target}: {e}")))?;
        let bits: Vec<u8> = serde_json::from_value(
            arm.get("table")
                .ok_or_else(|| DiscreteError::Parse(format!("{target}: missing table")))?
                .clone(),
        )
        .map_err(|e| DiscreteError::Parse(format!("{target}: {e}")))?;
        if bits.iter().any(|b| *b > 1) {
            return Err(DiscreteError::Parse(format!(
                "{target}: table entries must be 0 or 1"
            )));
        }
        equations.push(DiscreteEquation {
            target: target.clone(),
            parents,
            table: bits.into_iter().map(|b| b == 1).collect(),
        });
    }
    let model = DiscreteModel {
        exogenous,
        equations,
    };
    model.validate()?;
    Ok(model)
}

/// A double-prevention example: one hit happens unless the first agent acts
/// (AH), a backup hit requires the first agent to act and the second to
/// stand down (BH), and the protected outcome fails if either lands (PH).
pub fn double_prevention_example() -> DiscreteModel {
    DiscreteModel {
        exogenous: vec!["uA".to_string(), "uB".to_string()],
        equations: vec![
            DiscreteEquation {
                target: "AT".to_string(),
                parents: vec!["uA".to_string()],
                table: vec![false, true],
            },
            DiscreteEquation {
                target: "BT".to_string(),
                parents: vec!["uB".to_string()],
                table: vec![false, true],
            },
            DiscreteEquation {
                target: "AH".to_string(),
                parents: vec!["AT".to_string()],
                table: vec![true, false],
            },
            DiscreteEquation {
                target: "BH".to_string(),
                parents: vec!["AT".to_string(), "BT".to_string()],
                table: vec![false, false, true, false],
            },
            DiscreteEquation {
                target: "PH".to_string(),
                parents: vec!["AH".to_string(), "BH".to_string()],
                table: vec![false, true, true, true],
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(ua: bool, ub: bool) -> Assignment {
        [("uA".to_string(), ua), ("uB".to_string(), ub)]
            .into_iter()
            .collect()
    }

    fn pairs(items: &[(&str, bool)]) -> Vec<(String, bool)> {
        items.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn evaluation_solves_the_unique_fixed_point() {
        let model = double_prevention_example();
        let world = evaluate(&model, &ctx(false, false)).unwrap();
        assert!(!world["AT"]);
        assert!(!world["BT"]);
        assert!(world["AH"]);
        assert!(!world["BH"]);
        assert!(world["PH"]);
    }

    #[test]
    fn inaction_causes_the_outcome_via_the_backup_contingency() {
        let model = double_prevention_example();
        let effect = pairs(&[("PH", true)]);
        let witness =
            is_cause_discrete(&model, &ctx(false, false), &pairs(&[("AT", false)]), &effect)
                .unwrap()
                .expect("AT = 0 should be a cause");
        // Flipping AT alone re-routes the outcome through the backup; the
        // minimal contingency freezes the backup at its actual inactivity.
        assert_eq!(witness.w, vec!["BH".to_string()]);
        assert_eq!(witness.x_prime, pairs(&[("AT", true)]));
    }

    #[test]
    fn wrong_actual_value_fails_the_first_condition() {
        let model = double_prevention_example();
        let effect = pairs(&[("PH", true)]);
        let verdict =
            is_cause_discrete(&model, &ctx(false, false), &pairs(&[("BT", true)]), &effect)
                .unwrap();
        assert_eq!(verdict, None);
    }

    #[test]
    fn standing_down_alone_is_no_cause() {
        let model = double_prevention_example();
        let effect = pairs(&[("PH", true)]);
        let verdict =
            is_cause_discrete(&model, &ctx(false, false), &pairs(&[("BT", false)]), &effect)
                .unwrap();
        assert_eq!(verdict, None);
    }

    #[test]
    fn supersets_fail_minimality() {
        let model = double_prevention_example();
        let effect = pairs(&[("PH", true)]);
        let verdict = is_cause_discrete(
            &model,
            &ctx(false, false),
            &pairs(&[("AT", false), ("BT", false)]),
            &effect,
        )
        .unwrap();
        assert_eq!(verdict, None);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let text = r#"{
            "exogenous": ["uA", "uB"],
            "equations": {
                "AT": {"parents": ["uA"], "table": [0, 1]},
                "BT": {"parents": ["uB"], "table": [0, 1]},
                "AH": {"parents": ["AT"], "table": [1, 0]},
                "BH": {"parents": ["AT", "BT"], "table": [0, 0, 1, 0]},
                "PH": {"parents": ["AH", "BH"], "table": [0, 1, 1, 1]}
            }
        }"#;
        let model = parse_discrete_json(text).unwrap();
        let world = evaluate(&model, &ctx(true, true)).unwrap();
        assert!(!world["PH"]);

        let bad = r#"{"exogenous": [], "equations": {"x": {"parents": ["x"], "table": [0, 1]}}}"#;
        assert!(matches!(
            parse_discrete_json(bad).map(|m| evaluate(&m, &Assignment::new())),
            Ok(Err(DiscreteError::Cyclic(_)))
        ));
        let short = r#"{"exogenous": ["u"], "equations": {"x": {"parents": ["u"], "table": [0]}}}"#;
        assert!(matches!(
            parse_discrete_json(short),
            Err(DiscreteError::BadTable { .. })
        ));
    }

    #[test]
    fn verdicts_cover_every_context() {
        let model = double_prevention_example();
        let effect = pairs(&[("PH", true)]);
        // PH = 1 only when AT = 0 (first agent inert) or BT = 0 with AT = 1.
        for (ua, ub) in [(false, false), (false, true), (true, false)] {
            let world = evaluate(&model, &ctx(ua, ub)).unwrap();
            assert!(world["PH"], "context ({ua}, {ub})");
            let singles: Vec<Vec<(String, bool)>> = ["AT", "BT", "AH", "BH"]
                .iter()
                .map(|v| pairs(&[(v, world[*v])]))
                .collect();
            let verdicts: Vec<bool> = singles
                .iter()
                .map(|xs| {
                    is_cause_discrete(&model, &ctx(ua, ub), xs, &effect)
                        .unwrap()
                        .is_some()
                })
                .collect();
            // At least one singleton explanation exists in every failing
            // context.
            assert!(verdicts.iter().any(|&v| v), "context ({ua}, {ub})");
        }
    }
}
