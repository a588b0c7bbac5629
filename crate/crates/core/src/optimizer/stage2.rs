//! Stage 2: constrained circuit simplification.
//!
//! Starting from a candidate's mesh decomposition, minimizes the simplicity
//! cost over all element angles and output phases subject to keeping each
//! admissible pattern's probability above its stage-1 floor and the matched
//! overlap at one. The equality `M = 1` is handled as the one-sided
//! constraint `M ≥ 1 − tol` since `M ≤ 1` structurally. The solver is an
//! augmented-Lagrangian outer loop around the damped BFGS inner solver; the
//! iterate with the fewest violated constraints seen so far is always kept,
//! so feasibility never regresses across outer iterations.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    clements_decompose, compose, count_nontrivial, element_matrix, simplicity_cost, CircuitSpec,
    CostParams, PhaseLayer, TwoModeElement,
};
use crate::error::{Error, Result};
use crate::fock::{
    transition_amplitude_with_gradient, FockState, ProblemSpec, SectorBasis,
    ZERO_PROBABILITY_THRESHOLD,
};
use crate::linalg::{identity, CMat};

use super::bfgs::{bfgs_minimize, BfgsOptions};
use super::stage1::Candidate;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stage2Config {
    pub cost_params: CostParams,
    /// Per-pattern probability floors in `ancilla_set` order; defaults to the
    /// candidate's own stage-1 probabilities.
    pub probability_floor: Option<Vec<f64>>,
    pub constraint_tolerance: f64,
    /// Increasing penalty weights, one per outer iteration (the last repeats).
    pub penalty_schedule: Vec<f64>,
    pub max_outer_iterations: usize,
    pub inner_gradient_tolerance: f64,
    pub inner_max_iterations: usize,
    pub trivial_tolerance: f64,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Stage2Config {
            cost_params: CostParams::default(),
            probability_floor: None,
            constraint_tolerance: 1e-8,
            penalty_schedule: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
            max_outer_iterations: 10,
            inner_gradient_tolerance: 1e-7,
            inner_max_iterations: 600,
            trivial_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintResidual {
    pub label: String,
    pub value: f64,
    pub bound: f64,
    /// Positive amount by which the constraint is missed (0 when satisfied).
    pub violation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub circuit: CircuitSpec,
    pub cost: f64,
    pub feasible: bool,
    pub residuals: Vec<ConstraintResidual>,
    pub nontrivial_count: usize,
    pub initial_nontrivial_count: usize,
    /// Violated-constraint count of the kept iterate after each outer round;
    /// non-increasing by construction.
    pub violations_per_outer: Vec<usize>,
}

pub fn stage2_refine(
    candidate: &Candidate,
    problem: &ProblemSpec,
    config: &Stage2Config,
) -> Result<RefineOutcome> {
    problem.validate()?;
    if config.penalty_schedule.is_empty() || config.max_outer_iterations == 0 {
        return Err(Error::InvalidArgument(
            "stage-2 needs a penalty schedule and at least one outer iteration".into(),
        ));
    }
    if candidate.ancilla_set.is_empty() {
        return Err(Error::InvalidArgument(
            "candidate has an empty admissible ancilla set".into(),
        ));
    }
    for &a in &candidate.ancilla_set {
        if a >= problem.ancilla_patterns.len() {
            return Err(Error::InvalidArgument(format!(
                "candidate references pattern index {a} outside the problem"
            )));
        }
    }
    let floors: Vec<f64> = match &config.probability_floor {
        Some(f) => {
            if f.len() != candidate.ancilla_set.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} floors for {} admissible patterns",
                    f.len(),
                    candidate.ancilla_set.len()
                )));
            }
            for &x in f {
                if !(x > 0.0 && x <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "probability floor {x} outside (0, 1]"
                    )));
                }
            }
            f.clone()
        }
        None => candidate
            .ancilla_set
            .iter()
            .map(|a| candidate.probabilities[a])
            .collect(),
    };

    let unitary = candidate.unitary_matrix()?;
    let initial_spec = clements_decompose(&unitary)?;
    let initial_count = count_nontrivial(&initial_spec, config.trivial_tolerance);
    let mode_pairs: Vec<(usize, usize)> = initial_spec.elements.iter().map(|e| e.modes).collect();
    let dim = initial_spec.dim;

    let constraints = ConstraintSet::new(candidate, problem, &floors)?;
    let mut x = pack_params(&initial_spec);

    let mut lambdas = vec![0.0f64; 2 * candidate.ancilla_set.len()];
    let mut best = Iterate::evaluate(&x, dim, &mode_pairs, &constraints, config)?;
    let mut violations_per_outer = Vec::with_capacity(config.max_outer_iterations);
    let mut prev_cost = best.cost;

    for outer in 0..config.max_outer_iterations {
        let mu = config.penalty_schedule[outer.min(config.penalty_schedule.len() - 1)];
        let opts = BfgsOptions {
            gradient_tolerance: config.inner_gradient_tolerance,
            max_iterations: config.inner_max_iterations,
            ..Default::default()
        };
        let lam = lambdas.clone();
        let obj = |v: &DVector<f64>| {
            match al_value_grad(v.as_slice(), dim, &mode_pairs, &constraints, config, &lam, mu) {
                Ok((f, g)) => (f, DVector::from_vec(g)),
                Err(_) => (f64::NAN, DVector::zeros(v.len())),
            }
        };
        let res = bfgs_minimize(obj, DVector::from_vec(x.clone()), &opts)?;
        x = res.x.as_slice().to_vec();

        let current = Iterate::evaluate(&x, dim, &mode_pairs, &constraints, config)?;
        // Multiplier update from the current inner solution.
        for (i, &c) in current.cvals.iter().enumerate() {
            lambdas[i] = (lambdas[i] - mu * c).max(0.0);
        }
        if current.better_than(&best) {
            best = current.clone();
        }
        violations_per_outer.push(best.violated);

        let feasible_now = current.violated == 0;
        let stalled = (current.cost - prev_cost).abs() <= 1e-12 * (1.0 + prev_cost.abs());
        prev_cost = current.cost;
        if feasible_now && stalled && outer + 1 >= config.penalty_schedule.len().min(3) {
            break;
        }
    }

    // The refined circuit must not be more complex than the decomposition it
    // started from; fall back if the search wandered to a busier feasible point.
    let initial_iter = Iterate::evaluate(
        &pack_params(&initial_spec),
        dim,
        &mode_pairs,
        &constraints,
        config,
    )?;
    let best_spec = unpack_params(dim, &mode_pairs, &best.x)?;
    let best_count = count_nontrivial(&best_spec, config.trivial_tolerance);
    let (final_x, final_spec) = if best.violated == 0
        && initial_iter.violated == 0
        && initial_count < best_count
    {
        (initial_iter.x.clone(), initial_spec.clone())
    } else {
        (best.x.clone(), best_spec)
    };

    let final_iter = Iterate::evaluate(&final_x, dim, &mode_pairs, &constraints, config)?;
    let residuals = constraints.residuals(&final_iter.cvals, &floors, config, problem, candidate);
    debug_assert!(violations_per_outer.windows(2).all(|w| w[1] <= w[0]));

    Ok(RefineOutcome {
        nontrivial_count: count_nontrivial(&final_spec, config.trivial_tolerance),
        circuit: final_spec,
        cost: final_iter.cost,
        feasible: final_iter.violated == 0,
        residuals,
        initial_nontrivial_count: initial_count,
        violations_per_outer,
    })
}

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    cost: f64,
    cvals: Vec<f64>,
    violated: usize,
    violation_sum: f64,
}

impl Iterate {
    fn evaluate(
        x: &[f64],
        dim: usize,
        pairs: &[(usize, usize)],
        constraints: &ConstraintSet,
        config: &Stage2Config,
    ) -> Result<Iterate> {
        let spec = unpack_params(dim, pairs, x)?;
        let u = compose(&spec);
        let cost = simplicity_cost(&spec, &config.cost_params);
        let cvals = constraints.values(&u, config.constraint_tolerance)?;
        let violated = cvals.iter().filter(|&&c| c < 0.0).count();
        let violation_sum = cvals.iter().map(|&c| (-c).max(0.0)).sum();
        Ok(Iterate {
            x: x.to_vec(),
            cost,
            cvals,
            violated,
            violation_sum,
        })
    }

    fn better_than(&self, other: &Iterate) -> bool {
        (self.violated, self.violation_sum, self.cost)
            < (other.violated, other.violation_sum, other.cost)
    }
}

fn pack_params(spec: &CircuitSpec) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * spec.elements.len() + spec.dim);
    for e in &spec.elements {
        x.push(e.theta);
        x.push(e.phi);
    }
    x.extend(spec.output_phases.angles());
    x
}

fn unpack_params(dim: usize, pairs: &[(usize, usize)], x: &[f64]) -> Result<CircuitSpec> {
    if x.len() != 2 * pairs.len() + dim {
        return Err(Error::DimensionMismatch(format!(
            "expected {} circuit parameters, got {}",
            2 * pairs.len() + dim,
            x.len()
        )));
    }
    let elements = pairs
        .iter()
        .enumerate()
        .map(|(i, &(n, m))| TwoModeElement {
            theta: x[2 * i],
            phi: x[2 * i + 1],
            modes: (n, m),
        })
        .collect();
    CircuitSpec::new(dim, elements, PhaseLayer::from_angles(&x[2 * pairs.len()..]))
}

/// The candidate's constraints: one probability floor and one unit-overlap
/// requirement per admissible pattern.
struct ConstraintSet {
    input: FockState,
    patterns: Vec<FockState>,
    floors: Vec<f64>,
    /// Per constraint pattern: the matched target's components as
    /// (heralded-basis index, conjugated amplitude).
    targets: Vec<Vec<(usize, Complex64)>>,
    basis: SectorBasis,
}

impl ConstraintSet {
    fn new(candidate: &Candidate, problem: &ProblemSpec, floors: &[f64]) -> Result<Self> {
        let basis = SectorBasis::new(problem.n_target_modes, problem.heralded_photons());
        let mut patterns = Vec::new();
        let mut targets = Vec::new();
        for &a in &candidate.ancilla_set {
            patterns.push(problem.ancilla_patterns[a].clone());
            let t_idx = *candidate.matched_targets.get(&a).ok_or_else(|| {
                Error::InvalidArgument(format!("candidate misses a matched target for pattern {a}"))
            })?;
            let target = problem.targets.get(t_idx).ok_or_else(|| {
                Error::InvalidArgument(format!("matched target index {t_idx} outside the problem"))
            })?;
            targets.push(
                target
                    .terms()
                    .iter()
                    .filter_map(|term| basis.index_of(&term.state).map(|i| (i, term.amp.conj())))
                    .collect(),
            );
        }
        Ok(ConstraintSet {
            input: problem.input.clone(),
            patterns,
            floors: floors.to_vec(),
            targets,
            basis,
        })
    }

    fn len(&self) -> usize {
        2 * self.patterns.len()
    }

    /// Constraint values `c ≥ 0 ⇔ satisfied`, interleaved as
    /// `[P₀ − (floor₀ − tol), M₀ − (1 − tol), P₁ − …]`.
    fn values(&self, u: &CMat, tol: f64) -> Result<Vec<f64>> {
        let (c, _) = self.eval(u, tol, false)?;
        Ok(c)
    }

    fn eval(&self, u: &CMat, tol: f64, want_grad: bool) -> Result<(Vec<f64>, Vec<CMat>)> {
        let d = u.nrows();
        let mut cvals = Vec::with_capacity(self.len());
        let mut cograds = Vec::new();
        for (k, pattern) in self.patterns.iter().enumerate() {
            let mut prob = 0.0;
            let mut a_amp = Complex64::new(0.0, 0.0);
            let mut g_p = CMat::zeros(d, d);
            let mut a_grad = CMat::zeros(d, d);
            for (i, m) in self.basis.states().iter().enumerate() {
                let out = m.concat(pattern);
                if want_grad {
                    let (amp, grad) = transition_amplitude_with_gradient(u, &self.input, &out)?;
                    prob += amp.norm_sqr();
                    g_p += grad.map(|z| z * amp.conj());
                    if let Some(&(_, conj_c)) =
                        self.targets[k].iter().find(|&&(idx, _)| idx == i)
                    {
                        a_amp += conj_c * amp;
                        a_grad += grad.map(|z| z * conj_c);
                    }
                } else {
                    let amp = crate::fock::transition_amplitude(u, &self.input, &out)?;
                    prob += amp.norm_sqr();
                    if let Some(&(_, conj_c)) =
                        self.targets[k].iter().find(|&&(idx, _)| idx == i)
                    {
                        a_amp += conj_c * amp;
                    }
                }
            }
            let overlap = if prob >= ZERO_PROBABILITY_THRESHOLD {
                a_amp.norm_sqr() / prob
            } else {
                0.0
            };
            cvals.push(prob - (self.floors[k] - tol));
            cvals.push(overlap - (1.0 - tol));
            if want_grad {
                let g_m = if prob >= ZERO_PROBABILITY_THRESHOLD {
                    let m1 = a_grad.map(|z| z * (a_amp.conj() / prob));
                    let m2 = g_p.map(|z| z * (a_amp.norm_sqr() / (prob * prob)));
                    m1 - m2
                } else {
                    CMat::zeros(d, d)
                };
                cograds.push(g_p);
                cograds.push(g_m);
            }
        }
        Ok((cvals, cograds))
    }

    fn residuals(
        &self,
        cvals: &[f64],
        floors: &[f64],
        config: &Stage2Config,
        problem: &ProblemSpec,
        candidate: &Candidate,
    ) -> Vec<ConstraintResidual> {
        let tol = config.constraint_tolerance;
        let mut out = Vec::with_capacity(cvals.len());
        for (k, &a) in candidate.ancilla_set.iter().enumerate() {
            let pattern = &problem.ancilla_patterns[a];
            let p_val = cvals[2 * k] + (floors[k] - tol);
            let m_val = cvals[2 * k + 1] + (1.0 - tol);
            out.push(ConstraintResidual {
                label: format!("P{pattern} >= {:.12}", floors[k]),
                value: p_val,
                bound: floors[k],
                violation: (-cvals[2 * k]).max(0.0),
            });
            out.push(ConstraintResidual {
                label: format!("M{pattern} = 1"),
                value: m_val,
                bound: 1.0,
                violation: (-cvals[2 * k + 1]).max(0.0),
            });
        }
        out
    }
}

/// Augmented-Lagrangian value and gradient in the circuit parameters.
fn al_value_grad(
    x: &[f64],
    dim: usize,
    pairs: &[(usize, usize)],
    constraints: &ConstraintSet,
    config: &Stage2Config,
    lambdas: &[f64],
    mu: f64,
) -> Result<(f64, Vec<f64>)> {
    let spec = unpack_params(dim, pairs, x)?;
    let q = pairs.len();
    let cp = &config.cost_params;

    // Smooth cost and its analytic gradient.
    let mut value = simplicity_cost(&spec, cp);
    let mut grad = vec![0.0; x.len()];
    for i in 0..q {
        grad[2 * i] = 4.0 * (4.0 * x[2 * i]).sin();
        grad[2 * i + 1] = 2.0 * cp.epsilon * (2.0 * x[2 * i + 1]).sin();
    }
    for j in 0..dim {
        grad[2 * q + j] = 2.0 * cp.delta * x[2 * q + j].sin();
    }

    // Constraint terms.
    let u = compose(&spec);
    let (cvals, cograds) = constraints.eval(&u, config.constraint_tolerance, true)?;
    let mut gamma = CMat::zeros(dim, dim);
    let mut any_active = false;
    for (i, &c) in cvals.iter().enumerate() {
        let slack = lambdas[i] - mu * c;
        value += (slack.max(0.0).powi(2) - lambdas[i] * lambdas[i]) / (2.0 * mu);
        let dpsi = -slack.max(0.0);
        if dpsi != 0.0 {
            any_active = true;
            gamma += cograds[i].map(|z| z * dpsi);
        }
    }
    if !any_active {
        return Ok((value, grad));
    }

    // Chain Γ through dU/dparam. Storage order: U = D · T₀ · … · T_{q−1}.
    let tmats: Vec<CMat> = spec
        .elements
        .iter()
        .map(|e| element_matrix(e, dim).expect("validated"))
        .collect();
    let mut prefixes = Vec::with_capacity(q + 1);
    prefixes.push(spec.output_phases.matrix());
    for t in &tmats {
        let last = prefixes.last().unwrap() * t;
        prefixes.push(last);
    }
    let mut suffixes = vec![identity(dim); q + 1];
    for i in (0..q).rev() {
        suffixes[i] = &tmats[i] * &suffixes[i + 1];
    }

    let gamma_t = gamma.transpose();
    for i in 0..q {
        let (n, m) = pairs[i];
        let z = &suffixes[i + 1] * &gamma_t * &prefixes[i];
        let (theta, phi) = (x[2 * i], x[2 * i + 1]);
        let eip = Complex64::from_polar(1.0, phi);
        let (c_, s_) = (theta.cos(), theta.sin());
        // dT/dθ block and dT/dφ block at (n, m).
        let dth = [[-eip * s_, Complex64::new(-c_, 0.0)], [eip * c_, Complex64::new(-s_, 0.0)]];
        let dph = [[Complex64::new(0.0, 1.0) * eip * c_, Complex64::new(0.0, 0.0)],
                   [Complex64::new(0.0, 1.0) * eip * s_, Complex64::new(0.0, 0.0)]];
        let block = [n, m];
        let mut acc_th = Complex64::new(0.0, 0.0);
        let mut acc_ph = Complex64::new(0.0, 0.0);
        for (ai, &aa) in block.iter().enumerate() {
            for (bi, &bb) in block.iter().enumerate() {
                acc_th += z[(bb, aa)] * dth[ai][bi];
                acc_ph += z[(bb, aa)] * dph[ai][bi];
            }
        }
        grad[2 * i] += 2.0 * acc_th.re;
        grad[2 * i + 1] += 2.0 * acc_ph.re;
    }
    // dU/dλ_j has a single nonzero row: i · U[j, :].
    let u_full = prefixes[q].clone();
    for j in 0..dim {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..dim {
            acc += gamma[(j, k)] * u_full[(j, k)];
        }
        grad[2 * q + j] += 2.0 * (Complex64::new(0.0, 1.0) * acc).re;
    }
    Ok((value, grad))
}
