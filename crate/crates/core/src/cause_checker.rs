//! Actual-cause checking for trajectory slices.
//!
//! A candidate names endogenous variables with the intervals being blamed;
//! its slices carry the values those variables actually took there. The
//! check mirrors the classical three conditions:
//!
//! 1. the candidate values and the effect occur in the actual world,
//! 2. some admissible alternative for the slices, under some contingency
//!    frozen at its actual values, removes the effect, and
//! 3. no strict subset of the slices already suffices.
//!
//! Searching for the alternative in condition 2 is delegated through
//! [`SubsetSearcher`], so the checker stays independent of the search
//! strategy; condition 3 reuses the same searcher at a fraction of its
//! budget.
//!
//! Contingency selection is restrained-first: freeze every other analysis
//! variable at its factual course, then progressively less. With at most
//! [`EXHAUSTIVE_W_LIMIT`] other variables every contingency subset is
//! tried, largest first, which matches the discrete definition's
//! existential over W exactly; above the limit only the full freeze and
//! the empty contingency are tried, the two the underlying search method
//! relies on. Choices that provably pin the effect (every endogenous
//! variable the effect reads is frozen) are skipped outright.

use thiserror::Error;

use crate::causal_model::{CausalError, CausalModel};
use crate::event_logic::{self, EventError, EventExpression};
use crate::simulator::{CompiledModel, Role, SimulatorError, VariableSpec};
use crate::trajectory::{TimeInterval, Trajectory, TrajectoryError, TrajectorySlice};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("candidate has no slices")]
    EmptyCandidate,
    #[error("candidate names {0} twice")]
    DuplicateVariable(String),
    #[error("candidate slice covers several variables: {0:?}")]
    MultiVariableSlice(Vec<String>),
    #[error("{0} is not an endogenous model variable")]
    NotEndogenous(String),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

type Result<T> = std::result::Result<T, CheckError>;

/// Largest contingency pool that still gets an exhaustive subset sweep
/// (2^4 = 16 candidate freezes). Beyond this only the full freeze and the
/// empty contingency are tried, keeping wide analyses tractable.
pub const EXHAUSTIVE_W_LIMIT: usize = 4;

/// Failures that disqualify one intervention rather than the whole
/// analysis: the intervened world diverged or left the admissible ranges.
fn is_soft(err: &CheckError) -> bool {
    matches!(
        err,
        CheckError::Simulator(
            SimulatorError::NonFinite { .. }
                | SimulatorError::DivisionByZero { .. }
                | SimulatorError::ForcedOutOfBounds { .. }
        ) | CheckError::Causal(CausalError::OutOfBounds { .. })
    )
}

/// The factual slices blamed by a candidate cause: one single-variable
/// slice per distinct variable.
#[derive(Debug, Clone)]
pub struct CauseCandidate {
    slices: Vec<TrajectorySlice>,
}

impl CauseCandidate {
    pub fn new(slices: Vec<TrajectorySlice>) -> Result<CauseCandidate> {
        if slices.is_empty() {
            return Err(CheckError::EmptyCandidate);
        }
        let mut seen: Vec<&String> = Vec::new();
        for s in &slices {
            let vars = s.vars();
            if vars.len() != 1 {
                return Err(CheckError::MultiVariableSlice(
                    vars.iter().map(|v| v.to_string()).collect(),
                ));
            }
            let var = &s.trajectory().names()[0];
            if seen.contains(&var) {
                return Err(CheckError::DuplicateVariable(var.clone()));
            }
            seen.push(var);
        }
        Ok(CauseCandidate { slices })
    }

    /// Builds the candidate by cutting the named intervals out of the
    /// factual trajectory.
    pub fn from_actual(
        actual: &Trajectory,
        parts: &[(String, TimeInterval)],
    ) -> Result<CauseCandidate> {
        let mut slices = Vec::with_capacity(parts.len());
        for (var, iv) in parts {
            let projected = actual.project(&[var.as_str()])?;
            slices.push(projected.slice(*iv)?);
        }
        CauseCandidate::new(slices)
    }

    pub fn slices(&self) -> &[TrajectorySlice] {
        &self.slices
    }

    pub fn variables(&self) -> Vec<&str> {
        self.slices
            .iter()
            .map(|s| s.trajectory().names()[0].as_str())
            .collect()
    }

    pub fn intervals(&self) -> Vec<TimeInterval> {
        self.slices.iter().map(|s| s.interval()).collect()
    }

    /// Same variables, same intervals, same factual values within `tol`.
    pub fn same_as(&self, other: &CauseCandidate, tol: f64) -> bool {
        if self.slices.len() != other.slices.len() {
            return false;
        }
        let mut mine: Vec<&TrajectorySlice> = self.slices.iter().collect();
        let mut theirs: Vec<&TrajectorySlice> = other.slices.iter().collect();
        let key = |s: &&TrajectorySlice| {
            (
                s.trajectory().names()[0].clone(),
                s.interval().lo.to_bits(),
            )
        };
        mine.sort_by_key(key);
        theirs.sort_by_key(key);
        mine.iter().zip(&theirs).all(|(a, b)| {
            a.trajectory().names() == b.trajectory().names()
                && a.interval() == b.interval()
                && slice_values(a)
                    .zip(slice_values(b))
                    .all(|(x, y)| (x - y).abs() <= tol)
        })
    }
}

fn slice_values(s: &TrajectorySlice) -> impl Iterator<Item = f64> + '_ {
    let var = s.trajectory().names()[0].clone();
    let col = s.trajectory().column(&var).expect("single-variable slice");
    col.iter().copied()
}

/// A confirmed cause: the candidate, the alternative demonstrating the
/// counterfactual, and the contingency it was demonstrated under.
#[derive(Debug, Clone)]
pub struct CauseRecord {
    pub candidate: CauseCandidate,
    /// Alternative slices x' whose forcing removes the effect.
    pub alternative: Vec<TrajectorySlice>,
    /// Contingency variable names, frozen at their factual courses.
    pub contingency: Vec<String>,
    /// The frozen slices themselves (factual values, full duration).
    pub contingency_slices: Vec<TrajectorySlice>,
    /// Time slices per variable domain when the candidate was generated.
    pub granularity: usize,
    /// Search generations allotted when the alternative was found.
    pub budget_generations: usize,
}

/// One query to a [`SubsetSearcher`]: find admissible alternatives for the
/// given factual slices.
pub struct AlternativeQuery<'a> {
    /// Factual slices being replaced; alternatives must keep their
    /// variables and intervals.
    pub xs: &'a [TrajectorySlice],
    /// Variable declarations (bounds, constancy) aligned with `xs`.
    pub specs: Vec<VariableSpec>,
    /// Fraction of the searcher's generation budget to spend.
    pub budget: f64,
    /// When the effect first bites; searchers may bias effort toward
    /// intervals ending near it.
    pub t_fault: f64,
}

/// Strategy for finding an alternative assignment that removes the effect.
///
/// `flip` answers whether forcing the proposed alternative slices produces
/// an admissible trajectory violating the effect; implementations must
/// treat it as the only oracle and stay deterministic for a fixed query.
pub trait SubsetSearcher {
    fn find_alternative(
        &self,
        query: &AlternativeQuery,
        flip: &(dyn Fn(&[TrajectorySlice]) -> Result<bool> + Sync),
    ) -> Result<Option<Vec<TrajectorySlice>>>;
}

/// Shared state for checking candidates against one factual run.
pub struct CauseChecker<'a> {
    model: &'a CausalModel,
    compiled: &'a CompiledModel,
    actual: &'a Trajectory,
    analysis: Vec<String>,
    context: Trajectory,
    phi: EventExpression,
    not_phi: EventExpression,
    t_fault: f64,
    tol: f64,
}

impl<'a> CauseChecker<'a> {
    /// `analysis` lists the endogenous variables under scrutiny; causes and
    /// contingencies are drawn from it.
    pub fn new(
        model: &'a CausalModel,
        compiled: &'a CompiledModel,
        actual: &'a Trajectory,
        analysis: &[String],
        phi: EventExpression,
        tol: f64,
    ) -> Result<CauseChecker<'a>> {
        for var in analysis {
            match model.system().spec(var) {
                Some(spec) if spec.role == Role::Endogenous => {}
                _ => return Err(CheckError::NotEndogenous(var.clone())),
            }
        }
        let context = model.context_of(actual)?;
        let t_fault = event_logic::witness_time(&phi, actual, tol)?.unwrap_or(0.0);
        let not_phi = phi.negated();
        Ok(CauseChecker {
            model,
            compiled,
            actual,
            analysis: analysis.to_vec(),
            context,
            phi,
            not_phi,
            t_fault,
            tol,
        })
    }

    pub fn actual(&self) -> &Trajectory {
        self.actual
    }

    pub fn model(&self) -> &CausalModel {
        self.model
    }

    pub fn analysis(&self) -> &[String] {
        &self.analysis
    }

    pub fn t_fault(&self) -> f64 {
        self.t_fault
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The candidate values and the effect occur in the factual world. The
    /// value conjunct holds by construction when the candidate was cut from
    /// the factual trajectory, which a debug build double-checks.
    pub fn satisfies_ac1(&self, candidate: &CauseCandidate) -> Result<bool> {
        debug_assert!(
            candidate.slices().iter().all(|s| {
                let var = &s.trajectory().names()[0];
                self.actual
                    .equals_on(s.trajectory(), s.interval(), self.tol)
                    .unwrap_or(false)
                    && self.actual.has(var)
            }),
            "candidate slices must carry factual values"
        );
        Ok(self.model.satisfies(&self.context, &self.phi, self.tol)?)
    }

    /// Whether forcing `x_prime` while freezing `w` removes the effect.
    /// Inadmissible worlds (divergence, out-of-range values) simply fail
    /// the check.
    pub fn satisfies_ac2(
        &self,
        x_prime: &[TrajectorySlice],
        w: &[TrajectorySlice],
    ) -> Result<bool> {
        let mut forced: Vec<TrajectorySlice> = x_prime.to_vec();
        forced.extend_from_slice(w);
        let mut updated = self.model.update(&forced)?;
        let run = match self.compiled.run(&forced) {
            Ok(run) => run,
            Err(e) => {
                let e = CheckError::from(e);
                return if is_soft(&e) { Ok(false) } else { Err(e) };
            }
        };
        if let Err(e) = updated.add_trajectory(run) {
            let e = CheckError::from(e);
            return if is_soft(&e) { Ok(false) } else { Err(e) };
        }
        match updated.satisfies(&self.context, &self.not_phi, self.tol) {
            Ok(v) => Ok(v),
            // The forced world differs from the context only if the
            // update filtered everything out; that means no admissible
            // counterfactual, not an error.
            Err(CausalError::ContextError) => Ok(false),
            Err(e) => Err(CheckError::from(e)),
        }
    }

    /// No strict subset of the candidate admits an alternative. Searched at
    /// `ac3_budget` of the full effort; singleton candidates pass outright.
    pub fn satisfies_ac3(
        &self,
        candidate: &CauseCandidate,
        searcher: &dyn SubsetSearcher,
        ac3_budget: f64,
    ) -> Result<bool> {
        let n = candidate.slices().len();
        if n == 1 {
            return Ok(true);
        }
        for mask in 1u32..((1u32 << n) - 1) {
            let subset: Vec<TrajectorySlice> = candidate
                .slices()
                .iter()
                .enumerate()
                .filter(|(i, _)| (mask >> i) & 1 == 1)
                .map(|(_, s)| s.clone())
                .collect();
            if self.find_witness(&subset, searcher, ac3_budget)?.is_some() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Full check in order AC1, AC2, AC3, stopping at the first failure.
    /// `granularity` is recorded on the result for provenance.
    pub fn is_cause(
        &self,
        candidate: &CauseCandidate,
        searcher: &dyn SubsetSearcher,
        granularity: usize,
        ac3_budget: f64,
    ) -> Result<Option<CauseRecord>> {
        if !self.satisfies_ac1(candidate)? {
            return Ok(None);
        }
        let Some((alternative, contingency, contingency_slices)) =
            self.find_witness(candidate.slices(), searcher, 1.0)?
        else {
            return Ok(None);
        };
        if !self.satisfies_ac3(candidate, searcher, ac3_budget)? {
            return Ok(None);
        }
        Ok(Some(CauseRecord {
            candidate: candidate.clone(),
            alternative,
            contingency,
            contingency_slices,
            granularity,
            budget_generations: 0,
        }))
    }

    /// Re-checks a record's counterfactual verbatim.
    pub fn verify(&self, record: &CauseRecord) -> Result<bool> {
        Ok(self.satisfies_ac1(&record.candidate)?
            && self.satisfies_ac2(&record.alternative, &record.contingency_slices)?)
    }

    /// Restrained-first contingency search: all other analysis variables
    /// frozen, then progressively smaller subsets down to none. Exhaustive
    /// only while the subset lattice stays small; see
    /// [`EXHAUSTIVE_W_LIMIT`].
    #[allow(clippy::type_complexity)]
    fn find_witness(
        &self,
        xs: &[TrajectorySlice],
        searcher: &dyn SubsetSearcher,
        budget: f64,
    ) -> Result<Option<(Vec<TrajectorySlice>, Vec<String>, Vec<TrajectorySlice>)>> {
        let x_vars: Vec<&str> = xs
            .iter()
            .map(|s| s.trajectory().names()[0].as_str())
            .collect();
        let full_w: Vec<String> = self
            .analysis
            .iter()
            .filter(|v| !x_vars.contains(&v.as_str()))
            .cloned()
            .collect();
        let specs: Vec<VariableSpec> = x_vars
            .iter()
            .map(|v| self.model.system().spec(v).expect("validated").clone())
            .collect();
        let query = AlternativeQuery {
            xs,
            specs,
            budget,
            t_fault: self.t_fault,
        };
        let mut choices: Vec<Vec<String>> = Vec::new();
        if full_w.len() <= EXHAUSTIVE_W_LIMIT {
            // Small lattice: every contingency subset, largest first so the
            // most restrained witness is still preferred. Same-size subsets
            // keep the analysis-set order, which keeps runs deterministic.
            let mut masks: Vec<u32> = (0..1u32 << full_w.len()).collect();
            masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
            for mask in masks {
                let w: Vec<String> = full_w
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, v)| v.clone())
                    .collect();
                if !self.freeze_pins_effect(&w) {
                    choices.push(w);
                }
            }
        } else {
            if !self.freeze_pins_effect(&full_w) {
                choices.push(full_w);
            }
            choices.push(Vec::new());
        }
        for w_vars in choices {
            let w_slices = self.frozen_slices(&w_vars)?;
            let flip = |alt: &[TrajectorySlice]| self.satisfies_ac2(alt, &w_slices);
            if let Some(alt) = searcher.find_alternative(&query, &flip)? {
                return Ok(Some((alt, w_vars, w_slices)));
            }
        }
        Ok(None)
    }

    /// Freezing these variables fixes every endogenous variable the effect
    /// reads, so the effect keeps its factual value under any alternative.
    fn freeze_pins_effect(&self, w_vars: &[String]) -> bool {
        self.phi.variables().iter().all(|v| {
            match self.model.system().spec(v) {
                Some(spec) if spec.role == Role::Endogenous => w_vars.contains(v),
                // Exogenous or unknown: unaffected by interventions.
                _ => true,
            }
        })
    }

    /// Full-duration factual slices for the contingency variables.
    fn frozen_slices(&self, w_vars: &[String]) -> Result<Vec<TrajectorySlice>> {
        let grid = self.actual.grid();
        let full = TimeInterval::new(grid.start, grid.end())?;
        w_vars
            .iter()
            .map(|v| {
                let projected = self.actual.project(&[v.as_str()])?;
                Ok(projected.slice(full)?)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_logic::parse;
    use crate::simulator::{builtin, Builtin};
    use crate::trajectory::TimeGrid;
    use crate::DEFAULT_TOL;

    /// Tries every combination of a few constant levels per slice;
    /// exhaustive enough for the step-shaped decisions in the examples.
    struct GridSearcher {
        levels: usize,
    }

    impl SubsetSearcher for GridSearcher {
        fn find_alternative(
            &self,
            query: &AlternativeQuery,
            flip: &(dyn Fn(&[TrajectorySlice]) -> Result<bool> + Sync),
        ) -> Result<Option<Vec<TrajectorySlice>>> {
            let n = query.xs.len();
            let mut combo = vec![0usize; n];
            loop {
                let alt: Vec<TrajectorySlice> = query
                    .xs
                    .iter()
                    .zip(&query.specs)
                    .zip(&combo)
                    .map(|((s, spec), &level)| {
                        let frac = level as f64 / (self.levels - 1) as f64;
                        let value = spec.min + frac * (spec.max - spec.min);
                        let grid = *s.trajectory().grid();
                        let var = s.trajectory().names()[0].clone();
                        let traj = Trajectory::constant(grid, &var, value).unwrap();
                        TrajectorySlice::new(s.interval(), traj).unwrap()
                    })
                    .collect();
                if flip(&alt)? {
                    return Ok(Some(alt));
                }
                let mut i = 0;
                loop {
                    if i == n {
                        return Ok(None);
                    }
                    combo[i] += 1;
                    if combo[i] < self.levels {
                        break;
                    }
                    combo[i] = 0;
                    i += 1;
                }
            }
        }
    }

    struct Fixture {
        builtin: Builtin,
        actual: Trajectory,
        model: CausalModel,
        compiled: CompiledModel,
    }

    fn av_fixture() -> Fixture {
        let b = builtin("av_running_example").unwrap();
        let compiled = CompiledModel::compile(&b.model, &b.scenario).unwrap();
        let actual = compiled.run(&[]).unwrap();
        let mut model = CausalModel::new(b.model.clone());
        model.add_trajectory(actual.clone()).unwrap();
        Fixture {
            builtin: b,
            actual,
            model,
            compiled,
        }
    }

    fn av_checker<'a>(fx: &'a Fixture) -> CauseChecker<'a> {
        let analysis = vec![
            "brakes".to_string(),
            "battery".to_string(),
            "lidarRange".to_string(),
        ];
        CauseChecker::new(
            &fx.model,
            &fx.compiled,
            &fx.actual,
            &analysis,
            parse(&fx.builtin.phi).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap()
    }

    fn interval(lo: f64, hi: f64) -> TimeInterval {
        TimeInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn degraded_lidar_is_a_cause_under_the_frozen_contingency() {
        let fx = av_fixture();
        let checker = av_checker(&fx);
        let candidate = CauseCandidate::from_actual(
            &fx.actual,
            &[("lidarRange".to_string(), interval(0.0, 10.0))],
        )
        .unwrap();
        let record = checker
            .is_cause(&candidate, &GridSearcher { levels: 3 }, 2, 0.2)
            .unwrap()
            .expect("lidarRange should be a cause");
        // Freezing the rest of the analysis set does not block a wider
        // range, so the restrained contingency is kept.
        assert_eq!(record.contingency, vec!["brakes", "battery"]);
        assert!(checker.verify(&record).unwrap());
        // The frozen slices are verbatim factual values.
        for s in &record.contingency_slices {
            assert!(fx
                .actual
                .equals_on(s.trajectory(), s.interval(), 0.0)
                .unwrap());
        }
    }

    #[test]
    fn battery_and_brakes_pair_needs_the_empty_contingency() {
        let fx = av_fixture();
        let checker = av_checker(&fx);
        let candidate = CauseCandidate::from_actual(
            &fx.actual,
            &[
                ("battery".to_string(), interval(5.0, 10.0)),
                ("brakes".to_string(), interval(0.0, 10.0)),
            ],
        )
        .unwrap();
        let record = checker
            .is_cause(&candidate, &GridSearcher { levels: 3 }, 2, 0.2)
            .unwrap()
            .expect("the pair should be a cause");
        // A frozen lidar would drop on schedule regardless of the battery,
        // so only the empty contingency exhibits the counterfactual.
        assert!(record.contingency.is_empty());
        assert!(checker.verify(&record).unwrap());
    }

    #[test]
    fn failed_effect_fails_the_first_condition() {
        let fx = av_fixture();
        let analysis = vec!["lidarRange".to_string()];
        let checker = CauseChecker::new(
            &fx.model,
            &fx.compiled,
            &fx.actual,
            &analysis,
            parse("carPosition >_[0,10) 1000").unwrap(),
            DEFAULT_TOL,
        )
        .unwrap();
        let candidate = CauseCandidate::from_actual(
            &fx.actual,
            &[("lidarRange".to_string(), interval(0.0, 10.0))],
        )
        .unwrap();
        assert!(!checker.satisfies_ac1(&candidate).unwrap());
        assert!(checker
            .is_cause(&candidate, &GridSearcher { levels: 3 }, 2, 0.2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn supersets_of_a_cause_fail_minimality() {
        let fx = av_fixture();
        let checker = av_checker(&fx);
        let candidate = CauseCandidate::from_actual(
            &fx.actual,
            &[
                ("lidarRange".to_string(), interval(0.0, 10.0)),
                ("battery".to_string(), interval(5.0, 10.0)),
            ],
        )
        .unwrap();
        assert!(!checker
            .satisfies_ac3(&candidate, &GridSearcher { levels: 3 }, 0.2)
            .unwrap());
        assert!(checker
            .is_cause(&candidate, &GridSearcher { levels: 3 }, 2, 0.2)
            .unwrap()
            .is_none());
    }

    #[test]
    fn empty_contingency_check_matches_plain_simulation() {
        let fx = av_fixture();
        let checker = av_checker(&fx);
        let grid = TimeGrid::new(0.0, 0.01, 1000).unwrap();
        let alt = TrajectorySlice::new(
            interval(0.0, 10.0),
            Trajectory::constant(grid, "lidarRange", 60.0).unwrap(),
        )
        .unwrap();
        let alt = vec![alt];
        let via_model = checker.satisfies_ac2(&alt, &[]).unwrap();
        let direct = fx.compiled.run(&alt).unwrap();
        let phi = parse(&fx.builtin.phi).unwrap();
        let via_run = !event_logic::holds(&phi, &direct, DEFAULT_TOL).unwrap();
        assert_eq!(via_model, via_run);
        assert!(via_model);
    }

    #[test]
    fn inadmissible_interventions_fail_softly() {
        let fx = av_fixture();
        let checker = av_checker(&fx);
        let grid = TimeGrid::new(0.0, 0.01, 1000).unwrap();
        let wild = TrajectorySlice::new(
            interval(0.0, 10.0),
            Trajectory::constant(grid, "battery", 200.0).unwrap(),
        )
        .unwrap();
        assert!(!checker.satisfies_ac2(&[wild], &[]).unwrap());
    }

    #[test]
    fn tampered_records_fail_verification() {
        let fx = av_fixture();
        let checker = av_checker(&fx);
        let candidate = CauseCandidate::from_actual(
            &fx.actual,
            &[("lidarRange".to_string(), interval(0.0, 10.0))],
        )
        .unwrap();
        let mut record = checker
            .is_cause(&candidate, &GridSearcher { levels: 3 }, 2, 0.2)
            .unwrap()
            .unwrap();
        // Replace the alternative with the factual slices: no flip left.
        record.alternative = candidate.slices().to_vec();
        assert!(!checker.verify(&record).unwrap());
    }

    #[test]
    fn candidate_construction_is_validated() {
        let fx = av_fixture();
        assert!(matches!(
            CauseCandidate::new(vec![]),
            Err(CheckError::EmptyCandidate)
        ));
        let dup = CauseCandidate::from_actual(
            &fx.actual,
            &[
                ("battery".to_string(), interval(0.0, 5.0)),
                ("battery".to_string(), interval(5.0, 10.0)),
            ],
        );
        assert!(matches!(dup, Err(CheckError::DuplicateVariable(v)) if v == "battery"));
        let a = CauseCandidate::from_actual(
            &fx.actual,
            &[("battery".to_string(), interval(5.0, 10.0))],
        )
        .unwrap();
        let b = CauseCandidate::from_actual(
            &fx.actual,
            &[("battery".to_string(), interval(5.0, 10.0))],
        )
        .unwrap();
        assert!(a.same_as(&b, DEFAULT_TOL));
        let c = CauseCandidate::from_actual(
            &fx.actual,
            &[("battery".to_string(), interval(4.0, 9.0))],
        )
        .unwrap();
        assert!(!a.same_as(&c, DEFAULT_TOL));
    }
}
