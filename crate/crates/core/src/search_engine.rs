//! Granularity-refining search for cause candidates.
//!
//! The search slices each analysis variable's domain into a small number of
//! intervals and checks singletons, then pairs, then triples of
//! (variable, interval) picks. While nothing has been confirmed at all, the
//! slicing escalates through the granularity schedule; once any cause
//! exists, escalation stops, variables already blamed are excluded from the
//! larger tuples, and a focus pass re-checks the confirmed intervals at the
//! maximum granularity to narrow the blame.
//!
//! Alternatives for condition 2 are found by a genetic search over control
//! points smoothed into candidate curves. Fitness rewards distance from the
//! factual slice (value and shape), not effect violation: violation ends
//! the search for that candidate, so selection pressure is pure diversity.
//! Intervals that end long before the effect bites get a reduced generation
//! budget.

use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cause_checker::{
    AlternativeQuery, CauseCandidate, CauseChecker, CauseRecord, CheckError, SubsetSearcher,
};
use crate::event_logic::EventExpression;
use crate::simulator::CompiledModel;
use crate::trajectory::{TimeGrid, TimeInterval, Trajectory, TrajectoryError, TrajectorySlice};
use crate::causal_model::CausalModel;

type Result<T> = std::result::Result<T, CheckError>;

/// Tuning for the search and its genetic alternative-finder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Granularities tried while no cause has been found.
    pub schedule: Vec<usize>,
    /// Slices per domain in the focus pass.
    pub max_granularity: usize,
    /// Largest variable tuple checked.
    pub max_cause_size: usize,
    pub population: usize,
    /// Generations at full budget; attenuation and the minimality discount
    /// scale it down.
    pub base_generations: usize,
    pub tournament: usize,
    /// Per-point mutation probability.
    pub mutation_rate: f64,
    /// Mutation step as a fraction of the variable's range.
    pub mutation_sigma: f64,
    pub crossover_rate: f64,
    /// Control points per non-constant slice.
    pub control_points: usize,
    /// Attenuation rate for intervals ending before the fault.
    pub attenuation: f64,
    /// Fraction of the budget spent on each minimality probe.
    pub ac3_budget: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            schedule: vec![2, 4, 10],
            max_granularity: 10,
            max_cause_size: 3,
            population: 50,
            base_generations: 40,
            tournament: 3,
            mutation_rate: 0.1,
            mutation_sigma: 0.1,
            crossover_rate: 0.8,
            control_points: 8,
            attenuation: 0.5,
            ac3_budget: 0.2,
            seed: 0,
            tol: crate::DEFAULT_TOL,
        }
    }
}

/// Partitions the grid's span into `granularity` half-open intervals with
/// boundaries on grid points, exhaustive and pairwise disjoint. Cell sizes
/// differ by at most one step when the count does not divide evenly.
pub fn get_intervals(
    grid: &TimeGrid,
    granularity: usize,
) -> std::result::Result<Vec<TimeInterval>, TrajectoryError> {
    if granularity == 0 || granularity > grid.count {
        return Err(TrajectoryError::BadGrid {
            step: grid.step,
            count: granularity,
        });
    }
    (0..granularity)
        .map(|i| {
            let lo = grid.time(i * grid.count / granularity);
            let hi = if i + 1 == granularity {
                grid.end()
            } else {
                grid.time((i + 1) * grid.count / granularity)
            };
            TimeInterval::new(lo, hi)
        })
        .collect()
}

/// Least-squares polynomial through evenly spaced control points, sampled
/// at `count` positions across the same span. Degree 4, or one less than
/// the point count when fewer; an ill-conditioned fit falls back to joining
/// the points linearly.
pub fn smooth_fit(points: &[f64], count: usize) -> Vec<f64> {
    assert!(!points.is_empty(), "need at least one control point");
    let n = points.len();
    if n == 1 {
        return vec![points[0]; count];
    }
    let degree = (n - 1).min(4);
    let coeffs = fit_polynomial(points, degree);
    (0..count)
        .map(|k| {
            let s = k as f64 / count as f64;
            match &coeffs {
                Some(c) => eval_polynomial(c, 2.0 * s - 1.0),
                None => linear_through(points, s),
            }
        })
        .collect()
}

/// Normal equations on u in [-1, 1]; None when a pivot collapses.
#[allow(clippy::needless_range_loop)] // textbook row/column indexing
fn fit_polynomial(points: &[f64], degree: usize) -> Option<Vec<f64>> {
    let n = points.len();
    let m = degree + 1;
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (j, &y) in points.iter().enumerate() {
        let u = 2.0 * (j as f64 / (n - 1) as f64) - 1.0;
        let mut pow = vec![1.0; m];
        for d in 1..m {
            pow[d] = pow[d - 1] * u;
        }
        for r in 0..m {
            for c in 0..m {
                ata[r][c] += pow[r] * pow[c];
            }
            aty[r] += pow[r] * y;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))
            .unwrap();
        if ata[pivot][col].abs() < 1e-12 {
            return None;
        }
        ata.swap(col, pivot);
        aty.swap(col, pivot);
        for row in (col + 1)..m {
            let f = ata[row][col] / ata[col][col];
            for c in col..m {
                ata[row][c] -= f * ata[col][c];
            }
            aty[row] -= f * aty[col];
        }
    }
    let mut coeffs = vec![0.0; m];
    for row in (0..m).rev() {
        let mut v = aty[row];
        for c in (row + 1)..m {
            v -= ata[row][c] * coeffs[c];
        }
        coeffs[row] = v / ata[row][row];
    }
    Some(coeffs)
}

fn eval_polynomial(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

fn linear_through(points: &[f64], s: f64) -> f64 {
    let n = points.len();
    let x = s * (n - 1) as f64;
    let i = (x.floor() as usize).min(n - 2);
    let frac = x - i as f64;
    points[i] + frac * (points[i + 1] - points[i])
}

/// Effort weight for an interval: 1 at or after the fault, decaying the
/// further before it the interval ends.
pub fn attenuation_weight(interval: TimeInterval, t_fault: f64, rate: f64) -> f64 {
    1.0 / (1.0 + rate * (t_fault - interval.hi).max(0.0))
}

fn tuple_weight(intervals: &[TimeInterval], t_fault: f64, rate: f64) -> f64 {
    intervals
        .iter()
        .map(|iv| attenuation_weight(*iv, t_fault, rate))
        .fold(1.0, f64::min)
}

/// Generations allotted to one query after attenuation and budgeting.
pub fn planned_generations(
    config: &SearchConfig,
    intervals: &[TimeInterval],
    t_fault: f64,
    budget: f64,
) -> usize {
    let w = tuple_weight(intervals, t_fault, config.attenuation);
    ((config.base_generations as f64 * w * budget).round() as usize).max(1)
}

fn init_thread_pool() {
    static ONCE: OnceLock<()> = OnceLock::new();
    ONCE.get_or_init(|| {
        if let Some(n) = std::env::var("CPSCAUSE_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    });
}

fn fnv_mix(base: u64, parts: &[&[u8]]) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ base;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Genetic alternative search

/// One individual: control points per slice (a single point for
/// constants).
#[derive(Debug, Clone)]
pub struct CandidatePoints {
    pub per_slice: Vec<Vec<f64>>,
}

pub struct GeneticSearcher {
    pub config: SearchConfig,
}

impl GeneticSearcher {
    /// Stable per-query seed so results do not depend on the order queries
    /// are issued in.
    fn query_seed(&self, query: &AlternativeQuery) -> u64 {
        let mut parts: Vec<Vec<u8>> = Vec::new();
        for s in query.xs {
            parts.push(s.trajectory().names()[0].as_bytes().to_vec());
            parts.push(s.interval().lo.to_bits().to_le_bytes().to_vec());
            parts.push(s.interval().hi.to_bits().to_le_bytes().to_vec());
        }
        parts.push(query.budget.to_bits().to_le_bytes().to_vec());
        let refs: Vec<&[u8]> = parts.iter().map(|p| p.as_slice()).collect();
        fnv_mix(self.config.seed, &refs)
    }

    fn random_genome(&self, query: &AlternativeQuery, rng: &mut ChaCha8Rng) -> CandidatePoints {
        let per_slice = query
            .xs
            .iter()
            .zip(&query.specs)
            .map(|(_, spec)| {
                let n = if spec.is_constant {
                    1
                } else {
                    self.config.control_points
                };
                (0..n).map(|_| rng.gen_range(spec.min..=spec.max)).collect()
            })
            .collect();
        CandidatePoints { per_slice }
    }

    fn build_slices(
        &self,
        query: &AlternativeQuery,
        genome: &CandidatePoints,
    ) -> Result<Vec<TrajectorySlice>> {
        query
            .xs
            .iter()
            .zip(&query.specs)
            .zip(&genome.per_slice)
            .map(|((actual, spec), points)| {
                let grid = *actual.trajectory().grid();
                let values: Vec<f64> = smooth_fit(points, grid.count)
                    .into_iter()
                    .map(|v| v.clamp(spec.min, spec.max))
                    .collect();
                let var = actual.trajectory().names()[0].clone();
                let traj = Trajectory::new(grid, vec![(var, values)])?;
                Ok(TrajectorySlice::new(actual.interval(), traj)?)
            })
            .collect()
    }

    /// Distance from the factual slices: half value (normalised L2), half
    /// shape (first differences), averaged over slices.
    fn diversity(&self, query: &AlternativeQuery, slices: &[TrajectorySlice]) -> f64 {
        let mut total = 0.0;
        for ((alt, actual), spec) in slices.iter().zip(query.xs).zip(&query.specs) {
            let var = &actual.trajectory().names()[0];
            let a = actual.trajectory().column(var).expect("factual column");
            let b = alt.trajectory().column(var).expect("candidate column");
            let range = (spec.max - spec.min).max(1e-12);
            let n = a.len();
            let l2 = (a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                / n as f64)
                .sqrt()
                / range;
            let shape = if n > 1 {
                (a.windows(2)
                    .zip(b.windows(2))
                    .map(|(wa, wb)| ((wb[1] - wb[0]) - (wa[1] - wa[0])).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64)
                    .sqrt()
                    / (2.0 * range)
            } else {
                0.0
            };
            total += 0.5 * l2 + 0.5 * shape;
        }
        total / slices.len() as f64
    }

    fn tournament_pick<'g>(
        &self,
        rng: &mut ChaCha8Rng,
        genomes: &'g [CandidatePoints],
        fitness: &[f64],
    ) -> &'g CandidatePoints {
        let mut best: Option<usize> = None;
        for _ in 0..self.config.tournament {
            let i = rng.gen_range(0..genomes.len());
            if best.is_none_or(|b| fitness[i] > fitness[b]) {
                best = Some(i);
            }
        }
        &genomes[best.expect("non-empty population")]
    }

    fn breed(
        &self,
        rng: &mut ChaCha8Rng,
        query: &AlternativeQuery,
        genomes: &[CandidatePoints],
        fitness: &[f64],
    ) -> CandidatePoints {
        let a = self.tournament_pick(rng, genomes, fitness);
        let b = self.tournament_pick(rng, genomes, fitness);
        let mut child = if rng.gen_bool(self.config.crossover_rate) {
            let per_slice = a
                .per_slice
                .iter()
                .zip(&b.per_slice)
                .map(|(pa, pb)| {
                    pa.iter()
                        .zip(pb)
                        .map(|(&x, &y)| if rng.gen_bool(0.5) { x } else { y })
                        .collect()
                })
                .collect();
            CandidatePoints { per_slice }
        } else {
            a.clone()
        };
        for (points, spec) in child.per_slice.iter_mut().zip(&query.specs) {
            let sigma = self.config.mutation_sigma * (spec.max - spec.min);
            for p in points.iter_mut() {
                if rng.gen_bool(self.config.mutation_rate) {
                    // Box-Muller; clamping concentrates mass on the exact
                    // bounds, which step-shaped responses often need.
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let gauss = (-2.0 * u1.ln()).sqrt() * u2.cos();
                    *p = (*p + gauss * sigma).clamp(spec.min, spec.max);
                }
            }
        }
        child
    }
}

impl SubsetSearcher for GeneticSearcher {
    fn find_alternative(
        &self,
        query: &AlternativeQuery,
        flip: &(dyn Fn(&[TrajectorySlice]) -> Result<bool> + Sync),
    ) -> Result<Option<Vec<TrajectorySlice>>> {
        init_thread_pool();
        let intervals: Vec<TimeInterval> = query.xs.iter().map(|s| s.interval()).collect();
        let generations =
            planned_generations(&self.config, &intervals, query.t_fault, query.budget);
        let mut rng = ChaCha8Rng::seed_from_u64(self.query_seed(query));
        let mut genomes: Vec<CandidatePoints> = (0..self.config.population)
            .map(|_| self.random_genome(query, &mut rng))
            .collect();

        for gen in 0..generations {
            let slices: Vec<Vec<TrajectorySlice>> = genomes
                .iter()
                .map(|g| self.build_slices(query, g))
                .collect::<Result<_>>()?;
            let outcomes: Vec<Result<bool>> =
                slices.par_iter().map(|s| flip(s)).collect();
            let mut flips = Vec::with_capacity(outcomes.len());
            for o in outcomes {
                flips.push(o?);
            }
            let fitness: Vec<f64> = slices
                .iter()
                .map(|s| self.diversity(query, s))
                .collect();
            // First generation with any achiever ends the search; the
            // fittest achiever wins, earliest index on ties.
            let winner = (0..genomes.len())
                .filter(|&i| flips[i])
                .max_by(|&i, &j| fitness[i].total_cmp(&fitness[j]).then(j.cmp(&i)));
            if let Some(i) = winner {
                return Ok(Some(slices[i].clone()));
            }
            if gen + 1 < generations {
                genomes = (0..self.config.population)
                    .map(|_| self.breed(&mut rng, query, &genomes, &fitness))
                    .collect();
            }
        }
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// Top-level search

/// Counters for one pass of the search, for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub label: String,
    pub granularity: usize,
    pub size: usize,
    pub candidates: usize,
    pub confirmed: usize,
    pub millis: u128,
}

#[derive(Debug)]
pub struct SearchOutcome {
    pub records: Vec<CauseRecord>,
    pub stages: Vec<StageReport>,
}

/// All (variable tuple, interval tuple) candidates for one stage, ordered
/// by descending effort weight, then position, then name.
fn stage_candidates(
    checker: &CauseChecker,
    vars: &[String],
    size: usize,
    granularity: usize,
    config: &SearchConfig,
) -> Result<Vec<CauseCandidate>> {
    let grid = checker.actual().grid();
    let cells = get_intervals(grid, granularity)?;
    let full = TimeInterval::new(grid.start, grid.end())?;
    let mut cells_per_var: HashMap<&str, Vec<TimeInterval>> = HashMap::new();
    for var in vars {
        let spec = checker.model().system().spec(var).expect("analysis variable");
        // Constants hold one value for the whole run, so the only
        // meaningful slice is the whole domain.
        let var_cells = if spec.is_constant {
            vec![full]
        } else {
            cells.clone()
        };
        cells_per_var.insert(var.as_str(), var_cells);
    }

    let mut combos: Vec<Vec<&str>> = Vec::new();
    let mut pick = vec![0usize; size];
    fn combinations<'a>(
        vars: &'a [String],
        size: usize,
        start: usize,
        pick: &mut Vec<usize>,
        depth: usize,
        out: &mut Vec<Vec<&'a str>>,
    ) {
        if depth == size {
            out.push(pick[..size].iter().map(|&i| vars[i].as_str()).collect());
            return;
        }
        for i in start..vars.len() {
            pick[depth] = i;
            combinations(vars, size, i + 1, pick, depth + 1, out);
        }
    }
    combinations(vars, size, 0, &mut pick, 0, &mut combos);

    let mut candidates = Vec::new();
    for combo in combos {
        let lists: Vec<&Vec<TimeInterval>> =
            combo.iter().map(|v| &cells_per_var[v]).collect();
        let mut idx = vec![0usize; size];
        'cells: loop {
            let parts: Vec<(String, TimeInterval)> = combo
                .iter()
                .zip(&idx)
                .zip(&lists)
                .map(|((v, &i), list)| ((*v).to_string(), list[i]))
                .collect();
            candidates.push(CauseCandidate::from_actual(checker.actual(), &parts)?);
            let mut d = size;
            loop {
                if d == 0 {
                    break 'cells;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < lists[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    // Stable sort: ties keep enumeration order (variable tuples in
    // declaration order, cells in time order).
    let weight = |c: &CauseCandidate| {
        tuple_weight(&c.intervals(), checker.t_fault(), config.attenuation)
    };
    candidates.sort_by(|a, b| weight(b).total_cmp(&weight(a)));
    Ok(candidates)
}

/// Runs the staged search and the focus pass. The checker's analysis set
/// defines the candidate variables; `config.seed` fixes every random
/// choice.
pub fn search(
    model: &CausalModel,
    compiled: &CompiledModel,
    actual: &Trajectory,
    analysis: &[String],
    phi: &EventExpression,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    let checker = CauseChecker::new(model, compiled, actual, analysis, phi.clone(), config.tol)?;
    let searcher = GeneticSearcher {
        config: config.clone(),
    };
    search_with(&checker, &searcher, config)
}

/// Same as [`search`] with a caller-supplied strategy, so exhaustive or
/// stubbed searchers can drive the identical staging logic.
pub fn search_with(
    checker: &CauseChecker,
    searcher: &dyn SubsetSearcher,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    init_thread_pool();
    let mut records: Vec<CauseRecord> = Vec::new();
    let mut stages: Vec<StageReport> = Vec::new();
    let mut pruned: Vec<String> = Vec::new();

    for &granularity in &config.schedule {
        for size in 1..=config.max_cause_size {
            let started = Instant::now();
            let vars: Vec<String> = checker
                .analysis()
                .iter()
                .filter(|v| !pruned.contains(*v))
                .cloned()
                .collect();
            let candidates = if vars.len() >= size {
                stage_candidates(checker, &vars, size, granularity, config)?
            } else {
                Vec::new()
            };
            let total = candidates.len();
            let mut confirmed = 0usize;
            for candidate in candidates {
                if records
                    .iter()
                    .any(|r| r.candidate.same_as(&candidate, config.tol))
                {
                    continue;
                }
                if let Some(mut record) =
                    checker.is_cause(&candidate, searcher, granularity, config.ac3_budget)?
                {
                    record.budget_generations = planned_generations(
                        config,
                        &record.candidate.intervals(),
                        checker.t_fault(),
                        1.0,
                    );
                    confirmed += 1;
                    records.push(record);
                }
            }
            // Variables blamed alone leave the pool before larger tuples.
            for r in records.iter().filter(|r| r.candidate.slices().len() == 1) {
                for v in r.candidate.variables() {
                    if !pruned.iter().any(|p| p.as_str() == v) {
                        pruned.push(v.to_string());
                    }
                }
            }
            stages.push(StageReport {
                label: "stage".to_string(),
                granularity,
                size,
                candidates: total,
                confirmed,
                millis: started.elapsed().as_millis(),
            });
        }
        // Escalate granularity only while nothing at all was found.
        if !records.is_empty() {
            break;
        }
    }

    let started = Instant::now();
    let refined = focus_search(checker, &records, searcher, config)?;
    stages.push(StageReport {
        label: "focus".to_string(),
        granularity: config.max_granularity,
        size: 0,
        candidates: refined.candidates,
        confirmed: refined.records.len(),
        millis: started.elapsed().as_millis(),
    });
    records.extend(refined.records);

    Ok(SearchOutcome { records, stages })
}

struct FocusOutcome {
    records: Vec<CauseRecord>,
    candidates: usize,
}

/// Re-checks each confirmed cause on maximum-granularity cells inside its
/// intervals, keeping every refined tuple that is itself a cause.
fn focus_search(
    checker: &CauseChecker,
    records: &[CauseRecord],
    searcher: &dyn SubsetSearcher,
    config: &SearchConfig,
) -> Result<FocusOutcome> {
    let grid = checker.actual().grid();
    let cells = get_intervals(grid, config.max_granularity)?;
    let mut out: Vec<CauseRecord> = Vec::new();
    let mut attempted = 0usize;
    for record in records {
        let vars = record.candidate.variables();
        let per_slice: Vec<Vec<TimeInterval>> = record
            .candidate
            .slices()
            .iter()
            .zip(&vars)
            .map(|(slice, var)| {
                let spec = checker.model().system().spec(var).expect("cause variable");
                if spec.is_constant {
                    vec![slice.interval()]
                } else {
                    cells
                        .iter()
                        .filter(|c| {
                            c.lo >= slice.interval().lo - 1e-12
                                && c.hi <= slice.interval().hi + 1e-12
                        })
                        .copied()
                        .collect()
                }
            })
            .collect();
        let mut idx = vec![0usize; per_slice.len()];
        'tuples: loop {
            let parts: Vec<(String, TimeInterval)> = vars
                .iter()
                .zip(&idx)
                .zip(&per_slice)
                .map(|((v, &i), list)| (v.to_string(), list[i]))
                .collect();
            let same_as_parent = parts
                .iter()
                .zip(record.candidate.slices())
                .all(|((_, iv), s)| *iv == s.interval());
            if !same_as_parent {
                let candidate = CauseCandidate::from_actual(checker.actual(), &parts)?;
                let duplicate = records
                    .iter()
                    .chain(out.iter())
                    .any(|r| r.candidate.same_as(&candidate, config.tol));
                if !duplicate {
                    attempted += 1;
                    if let Some(mut refined) = checker.is_cause(
                        &candidate,
                        searcher,
                        config.max_granularity,
                        config.ac3_budget,
                    )? {
                        refined.budget_generations = planned_generations(
                            config,
                            &refined.candidate.intervals(),
                            checker.t_fault(),
                            1.0,
                        );
                        out.push(refined);
                    }
                }
            }
            let mut d = idx.len();
            loop {
                if d == 0 {
                    break 'tuples;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < per_slice[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
    Ok(FocusOutcome {
        records: out,
        candidates: attempted,
    })
}
