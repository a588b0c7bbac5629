//! Stage 1: globalized search over Haar-anchored Cayley charts.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{cayley_factor, hermitian_from_params, rho_distance};
use crate::error::Result;
use crate::fock::{herald_analysis, ProblemSpec, ZERO_PROBABILITY_THRESHOLD};
use crate::linalg::{CMat, MatrixJson};

use super::bfgs::{bfgs_minimize, BfgsOptions};
use super::derive_seed;
use super::haar::haar_random_unitary;
use super::objective::{PinningEvaluator, Stage1Evaluator};

#[derive(Clone, Debug)]
pub struct Stage1Config {
    pub problem: ProblemSpec,
    /// Overlap-suppression exponent of the relaxed objective.
    pub p: u32,
    pub restarts: usize,
    pub master_seed: u64,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Accepted overlaps must sit within this distance of 0 or 1.
    pub filter_tolerance: f64,
    /// Looser gate used to recognize which overlaps a stationary point means
    /// to drive to one. Stationary points of the relaxed objective sit at
    /// `M = 1 − O(1/p)`, so identification must be coarser than the final
    /// filter; the unit-pinning polish then closes the gap.
    pub identification_tolerance: f64,
    /// Chart re-centering rounds per restart.
    pub max_reanchors: usize,
    /// Test hook: start every restart from this unitary instead of a Haar draw.
    pub base_override: Option<CMat>,
}

impl Stage1Config {
    pub fn new(problem: ProblemSpec) -> Self {
        Stage1Config {
            problem,
            p: 4,
            restarts: 1,
            master_seed: 0,
            gradient_tolerance: 1e-9,
            max_iterations: 2000,
            filter_tolerance: 1e-6,
            identification_tolerance: 2e-2,
            max_reanchors: 25,
            base_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(crate::error::Error::InvalidArgument(
                "stage-1 exponent p must be >= 1".into(),
            ));
        }
        if self.restarts < 1 {
            return Err(crate::error::Error::InvalidArgument(
                "stage-1 needs at least one restart".into(),
            ));
        }
        if self.gradient_tolerance <= 0.0 || self.filter_tolerance <= 0.0 {
            return Err(crate::error::Error::InvalidArgument(
                "tolerances must be positive".into(),
            ));
        }
        self.problem.validate()
    }
}

/// A stage-1 solution: the unitary, the admissible ancilla set (pattern
/// indices into the problem's list), the matched target per pattern, and the
/// per-pattern probabilities that become stage-2 floors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub unitary: MatrixJson,
    pub ancilla_set: Vec<usize>,
    pub matched_targets: BTreeMap<usize, usize>,
    pub probabilities: BTreeMap<usize, f64>,
    pub objective_value: f64,
    pub restart_index: usize,
    pub seed: u64,
}

impl Candidate {
    pub fn unitary_matrix(&self) -> Result<CMat> {
        self.unitary.to_matrix()
    }

    pub fn total_probability(&self) -> f64 {
        self.probabilities.values().sum()
    }
}

/// Per-restart log line for run statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub seed: u64,
    pub objective: f64,
    pub accepted: bool,
    /// Normalized trace distance between the starting point and the optimum.
    pub rho_from_start: f64,
    pub bfgs_iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub candidates: Vec<Candidate>,
    pub records: Vec<RestartRecord>,
}

pub fn stage1_search(config: &Stage1Config) -> Result<Vec<Candidate>> {
    Ok(stage1_search_detailed(config)?.candidates)
}

/// Runs all restarts (in parallel; results are independent of worker count),
/// filters improper stationary points, and sorts the accepted candidates by
/// total heralded probability, descending.
pub fn stage1_search_detailed(config: &Stage1Config) -> Result<SearchOutcome> {
    config.validate()?;
    if config.problem.targets.is_empty() {
        return Ok(SearchOutcome {
            candidates: Vec::new(),
            records: Vec::new(),
        });
    }

    let results: Vec<Result<(RestartRecord, Option<Candidate>)>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(config, r))
        .collect();

    let mut records = Vec::with_capacity(config.restarts);
    let mut candidates = Vec::new();
    for res in results {
        let (record, cand) = res?;
        records.push(record);
        if let Some(c) = cand {
            candidates.push(c);
        }
    }
    candidates.sort_by(|a, b| {
        b.total_probability()
            .partial_cmp(&a.total_probability())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.restart_index.cmp(&b.restart_index))
    });
    Ok(SearchOutcome {
        candidates,
        records,
    })
}

fn run_restart(config: &Stage1Config, index: usize) -> Result<(RestartRecord, Option<Candidate>)> {
    let dim = config.problem.dim();
    let seed = derive_seed(config.master_seed, index as u64);
    let start = match &config.base_override {
        Some(u) => u.clone(),
        None => haar_random_unitary(dim, seed),
    };

    let opts = BfgsOptions {
        gradient_tolerance: config.gradient_tolerance,
        max_iterations: config.max_iterations,
        ..Default::default()
    };

    let mut base = start.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut iterations_total = 0;
    // The chart is local around H = 0; re-center after each convergence and
    // resume until the objective stops improving.
    for _ in 0..config.max_reanchors.max(1) {
        let evaluator = Stage1Evaluator::new(&config.problem, base.clone(), config.p)?;
        let n = evaluator.param_count();
        let eval_ref = &evaluator;
        let result = bfgs_minimize(
            move |x: &DVector<f64>| match eval_ref.evaluate(x.as_slice()) {
                Ok((v, g)) => (-v, -DVector::from_vec(g)),
                Err(_) => (f64::NAN, DVector::zeros(x.len())),
            },
            DVector::zeros(n),
            &opts,
        )?;
        iterations_total += result.iterations;
        let moved = result.x.amax();
        if moved > 0.0 {
            let h = hermitian_from_params(dim, result.x.as_slice())?;
            base = &base * cayley_factor(&h)?;
        }
        let value = -result.value;
        if value <= best_value + 1e-12 * (1.0 + best_value.abs()) {
            best_value = best_value.max(value);
            break;
        }
        best_value = value;
        if moved == 0.0 {
            break;
        }
    }

    // Identification at the coarse gate; if anything was recognized but is
    // not yet clean at the strict tolerance, pin the matched overlaps to one.
    let identified = clean_columns(config, &base, config.identification_tolerance)?;
    if !identified.is_empty()
        && clean_columns(config, &base, config.filter_tolerance)?.len() != identified.len()
    {
        base = pin_overlaps(config, base, &identified)?;
    }

    let record_base = |accepted| RestartRecord {
        index,
        seed,
        objective: best_value,
        accepted,
        rho_from_start: rho_distance(&base, &start).unwrap_or(f64::NAN),
        bfgs_iterations: iterations_total,
    };

    let candidate = filter_candidate(config, &base, best_value, index, seed)?;
    Ok((record_base(candidate.is_some()), candidate))
}

/// Detection patterns whose overlap column is clean at tolerance `tol`:
/// exactly one target at `M ≥ 1 − tol`, every other at `M ≤ tol`. Returns
/// `(pattern index, matched target)` pairs.
fn clean_columns(
    config: &Stage1Config,
    unitary: &CMat,
    tol: f64,
) -> Result<Vec<(usize, usize)>> {
    let report = herald_analysis(unitary, &config.problem)?;
    let n_targets = config.problem.targets.len();
    let mut out = Vec::new();
    for (a, outcome) in report.patterns.iter().enumerate() {
        if outcome.probability < ZERO_PROBABILITY_THRESHOLD {
            continue;
        }
        let mut t_star = 0;
        let mut m_max = f64::NEG_INFINITY;
        for t in 0..n_targets {
            if report.overlaps[t][a] > m_max {
                m_max = report.overlaps[t][a];
                t_star = t;
            }
        }
        if m_max >= 1.0 - tol
            && (0..n_targets).all(|t| t == t_star || report.overlaps[t][a] <= tol)
        {
            out.push((a, t_star));
        }
    }
    Ok(out)
}

/// Drives the identified overlaps onto the unit manifold while maximizing
/// the total heralded probability: an augmented-Lagrangian loop around the
/// damped BFGS solver, re-centering the chart after every inner solve.
fn pin_overlaps(
    config: &Stage1Config,
    base0: CMat,
    pairs: &[(usize, usize)],
) -> Result<CMat> {
    let dim = config.problem.dim();
    let mut base = base0;
    let mut evaluator = PinningEvaluator::new(&config.problem, base.clone(), pairs)?;
    let opts = BfgsOptions {
        gradient_tolerance: config.gradient_tolerance.max(1e-12),
        max_iterations: config.max_iterations,
        ..Default::default()
    };
    for outer in 0..12 {
        evaluator.mu = 1e2 * 10f64.powi(outer.min(5));
        evaluator.rebase(base.clone());
        let n = evaluator.param_count();
        let eval_ref = &evaluator;
        let result = bfgs_minimize(
            move |x: &DVector<f64>| match eval_ref.evaluate(x.as_slice()) {
                Ok((v, g)) => (v, DVector::from_vec(g)),
                Err(_) => (f64::NAN, DVector::zeros(x.len())),
            },
            DVector::zeros(n),
            &opts,
        )?;
        let x = result.x.as_slice().to_vec();
        let cvals = evaluator.constraint_values(&x)?;
        if result.x.amax() > 0.0 {
            let h = hermitian_from_params(dim, &x)?;
            base = &base * cayley_factor(&h)?;
        }
        let mut worst = 0.0f64;
        for (i, &c) in cvals.iter().enumerate() {
            evaluator.lambdas[i] = (evaluator.lambdas[i] - evaluator.mu * c).max(0.0);
            worst = worst.max(-c);
        }
        if worst <= 0.1 * config.filter_tolerance && outer >= 5 {
            break;
        }
    }
    Ok(base)
}

/// Accepts the stationary point only if at least one detection pattern has a
/// clean overlap column at the strict tolerance. Patterns with messy columns
/// are simply not admissible; a run with no admissible pattern is an improper
/// stationary point and yields no candidate.
fn filter_candidate(
    config: &Stage1Config,
    unitary: &CMat,
    objective_value: f64,
    restart_index: usize,
    seed: u64,
) -> Result<Option<Candidate>> {
    let clean = clean_columns(config, unitary, config.filter_tolerance)?;
    if clean.is_empty() {
        return Ok(None);
    }
    let report = herald_analysis(unitary, &config.problem)?;
    let mut ancilla_set = Vec::new();
    let mut matched_targets = BTreeMap::new();
    let mut probabilities = BTreeMap::new();
    for (a, t_star) in clean {
        ancilla_set.push(a);
        matched_targets.insert(a, t_star);
        probabilities.insert(a, report.patterns[a].probability);
    }
    Ok(Some(Candidate {
        unitary: MatrixJson::from(unitary),
        ancilla_set,
        matched_targets,
        probabilities,
        objective_value,
        restart_index,
        seed,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FockState, TargetState};
    use num_complex::Complex64;

    #[test]
    fn empty_targets_empty_result() {
        let problem = ProblemSpec {
            n_target_modes: 2,
            n_ancilla_modes: 1,
            input: FockState::new(vec![1, 0, 0]),
            ancilla_patterns: vec![FockState::new(vec![0])],
            targets: vec![],
        };
        let cfg = Stage1Config::new(problem);
        let out = stage1_search(&cfg).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn zero_restarts_rejected() {
        let problem = ProblemSpec {
            n_target_modes: 2,
            n_ancilla_modes: 1,
            input: FockState::new(vec![1, 0, 0]),
            ancilla_patterns: vec![FockState::new(vec![0])],
            targets: vec![TargetState::new(vec![(
                FockState::new(vec![1, 0]),
                Complex64::new(1.0, 0.0),
            )])
            .unwrap()],
        };
        let mut cfg = Stage1Config::new(problem);
        cfg.restarts = 0;
        assert!(cfg.validate().is_err());
    }
}
