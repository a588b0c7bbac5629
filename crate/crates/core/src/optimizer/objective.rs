//! The relaxed stage-1 objective `Σ_{t,a} P_a · M_{t,a}^p` on a Cayley chart,
//! with its analytic gradient.

use num_complex::Complex64;

use crate::circuit::{cayley_param_count, hermitian_from_params};
use crate::error::{Error, Result};
use crate::fock::{
    transition_amplitude_with_gradient, FockState, ProblemSpec, SectorBasis,
    ZERO_PROBABILITY_THRESHOLD,
};
use crate::linalg::{identity, CMat, C_I};

/// Cached evaluator for one chart base.
///
/// The gradient uses two exact ingredients: the derivative of each transition
/// amplitude in the entries of `U` (permanent minors with multiplicity
/// factors), and the closed-form differential of the Cayley map,
/// `dU = −2i · U₀ W (dH) W` with `W = (iI + H)⁻¹`. For a real function `f`
/// with holomorphic cogradient `Γ = ∂f/∂U`, the derivative along a Hermitian
/// direction `E` is `4 · Im Tr[E · K]` with `K = W Γᵀ U₀ W`.
pub struct Stage1Evaluator {
    base: CMat,
    dim: usize,
    input: FockState,
    patterns: Vec<FockState>,
    /// Per target: (index into the heralded basis, conjugated amplitude).
    target_terms: Vec<Vec<(usize, Complex64)>>,
    basis: SectorBasis,
    p: u32,
}

impl Stage1Evaluator {
    pub fn new(spec: &ProblemSpec, base: CMat, p: u32) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidArgument("exponent p must be >= 1".into()));
        }
        if base.nrows() != spec.dim() || base.ncols() != spec.dim() {
            return Err(Error::DimensionMismatch(format!(
                "chart base is {}x{}, problem has {} modes",
                base.nrows(),
                base.ncols(),
                spec.dim()
            )));
        }
        let basis = SectorBasis::new(spec.n_target_modes, spec.heralded_photons());
        // Target components outside the heralded sector contribute nothing.
        let target_terms = spec
            .targets
            .iter()
            .map(|t| {
                t.terms()
                    .iter()
                    .filter_map(|term| basis.index_of(&term.state).map(|i| (i, term.amp.conj())))
                    .collect()
            })
            .collect();
        Ok(Stage1Evaluator {
            dim: base.nrows(),
            base,
            input: spec.input.clone(),
            patterns: spec.ancilla_patterns.clone(),
            target_terms,
            basis,
            p,
        })
    }

    pub fn param_count(&self) -> usize {
        cayley_param_count(self.dim)
    }

    /// Objective value and gradient with respect to the chart parameters.
    pub fn evaluate(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let h = hermitian_from_params(self.dim, params)?;
        let (u, w) = chart_unitary(&self.base, &h)?;
        let (value, gamma) = self.value_and_cogradient(&u)?;
        Ok((value, chart_gradient(&w, &gamma, &self.base)))
    }

    /// `Σ_{t,a} P_a M^p` at a given unitary plus the holomorphic cogradient
    /// `Γ_{jk} = ∂f/∂U_{jk}`.
    fn value_and_cogradient(&self, u: &CMat) -> Result<(f64, CMat)> {
        let d = self.dim;
        let p = self.p as i32;
        let mut value = 0.0;
        let mut gamma = CMat::zeros(d, d);

        let n_basis = self.basis.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); n_basis];
        let mut grads: Vec<CMat> = Vec::with_capacity(n_basis);

        for pattern in &self.patterns {
            grads.clear();
            let mut prob = 0.0;
            let mut g_p = CMat::zeros(d, d);
            for (i, m) in self.basis.states().iter().enumerate() {
                let (amp, grad) =
                    transition_amplitude_with_gradient(u, &self.input, &m.concat(pattern))?;
                prob += amp.norm_sqr();
                g_p += grad.map(|z| z * amp.conj());
                amps[i] = amp;
                grads.push(grad);
            }
            if prob < ZERO_PROBABILITY_THRESHOLD {
                continue;
            }
            for terms in &self.target_terms {
                let mut a_amp = Complex64::new(0.0, 0.0);
                let mut a_grad = CMat::zeros(d, d);
                for &(i, conj_c) in terms {
                    a_amp += conj_c * amps[i];
                    a_grad += grads[i].map(|z| z * conj_c);
                }
                let overlap = a_amp.norm_sqr() / prob;
                value += prob * overlap.powi(p);
                let w_a = overlap.powi(p - 1) * self.p as f64;
                gamma += a_grad.map(|z| z * (w_a * a_amp.conj()));
                let w_p = (1.0 - self.p as f64) * overlap.powi(p);
                gamma += g_p.map(|z| z * w_p);
            }
        }
        Ok((value, gamma))
    }
}

/// One-shot form: value and gradient of the relaxed objective at Hermitian
/// coordinate `h` on the chart anchored at `chart_base`. The gradient is
/// ordered like [`hermitian_from_params`](crate::circuit::hermitian_from_params).
pub fn stage1_objective(
    h: &CMat,
    chart_base: &CMat,
    spec: &ProblemSpec,
    p: u32,
) -> Result<(f64, Vec<f64>)> {
    let evaluator = Stage1Evaluator::new(spec, chart_base.clone(), p)?;
    let params = crate::circuit::params_from_hermitian(h);
    evaluator.evaluate(&params)
}

/// Chart-space gradient from a holomorphic cogradient `Γ = ∂f/∂U`:
/// `df/dπ = 4 Im Tr[E_π K]` with `K = W Γᵀ U₀ W`.
fn chart_gradient(w: &CMat, gamma: &CMat, base: &CMat) -> Vec<f64> {
    let d = base.nrows();
    let k = w * gamma.transpose() * base * w;
    let mut grad = vec![0.0; d * d];
    for j in 0..d {
        grad[j] = 4.0 * k[(j, j)].im;
    }
    let mut idx = d;
    for j in 0..d {
        for kk in j + 1..d {
            grad[idx] = 4.0 * (k[(kk, j)] + k[(j, kk)]).im;
            grad[idx + 1] = 4.0 * (k[(kk, j)] - k[(j, kk)]).re;
            idx += 2;
        }
    }
    grad
}

fn chart_unitary(base: &CMat, h: &CMat) -> Result<(CMat, CMat)> {
    let d = base.nrows();
    let i_eye = identity(d).map(|z| z * C_I);
    let plus = &i_eye + h;
    let w = plus
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NonFinite("Cayley chart: iI + H singular".into()))?;
    let minus = &i_eye - h;
    Ok((base * (&minus * &w), w))
}

/// Augmented-Lagrangian evaluator that pins identified overlaps to one while
/// maximizing the total heralded probability:
/// `min −Σ_a P_a + Σ_a ψ(M_{t*,a} − (1 − tol); λ_a, μ)` on a Cayley chart.
///
/// This is the unit-value enforcement of the admissible set discovered by the
/// relaxed objective: stationary points of `Σ P M^p` sit at `M = 1 − O(1/p)`,
/// and the pinning step carries them onto the `M = 1` manifold.
pub struct PinningEvaluator {
    base: CMat,
    dim: usize,
    input: FockState,
    /// (ancilla pattern, matched target components in the heralded basis).
    constraints: Vec<(FockState, Vec<(usize, Complex64)>)>,
    basis: SectorBasis,
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub pin_tolerance: f64,
}

impl PinningEvaluator {
    pub fn new(
        spec: &ProblemSpec,
        base: CMat,
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        let basis = SectorBasis::new(spec.n_target_modes, spec.heralded_photons());
        let mut constraints = Vec::with_capacity(pairs.len());
        for &(a, t) in pairs {
            let pattern = spec
                .ancilla_patterns
                .get(a)
                .ok_or_else(|| Error::InvalidArgument(format!("pattern index {a} out of range")))?
                .clone();
            let target = spec
                .targets
                .get(t)
                .ok_or_else(|| Error::InvalidArgument(format!("target index {t} out of range")))?;
            let terms = target
                .terms()
                .iter()
                .filter_map(|term| basis.index_of(&term.state).map(|i| (i, term.amp.conj())))
                .collect();
            constraints.push((pattern, terms));
        }
        Ok(PinningEvaluator {
            dim: base.nrows(),
            base,
            input: spec.input.clone(),
            constraints,
            basis,
            lambdas: vec![0.0; pairs.len()],
            mu: 1e2,
            pin_tolerance: 1e-10,
        })
    }

    pub fn rebase(&mut self, base: CMat) {
        self.base = base;
    }

    pub fn param_count(&self) -> usize {
        cayley_param_count(self.dim)
    }

    /// Constraint slacks `M − (1 − tol)` at a chart point, for multiplier
    /// updates.
    pub fn constraint_values(&self, params: &[f64]) -> Result<Vec<f64>> {
        let h = hermitian_from_params(self.dim, params)?;
        let (u, _) = chart_unitary(&self.base, &h)?;
        let mut out = Vec::with_capacity(self.constraints.len());
        for (pattern, terms) in &self.constraints {
            let mut prob = 0.0;
            let mut a_amp = Complex64::new(0.0, 0.0);
            for (i, m) in self.basis.states().iter().enumerate() {
                let amp =
                    crate::fock::transition_amplitude(&u, &self.input, &m.concat(pattern))?;
                prob += amp.norm_sqr();
                if let Some(&(_, conj_c)) = terms.iter().find(|&&(idx, _)| idx == i) {
                    a_amp += conj_c * amp;
                }
            }
            let m_val = if prob >= ZERO_PROBABILITY_THRESHOLD {
                a_amp.norm_sqr() / prob
            } else {
                0.0
            };
            out.push(m_val - (1.0 - self.pin_tolerance));
        }
        Ok(out)
    }

    pub fn evaluate(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = self.dim;
        let h = hermitian_from_params(d, params)?;
        let (u, w) = chart_unitary(&self.base, &h)?;

        let mut value = 0.0;
        let mut gamma = CMat::zeros(d, d);
        for (k, (pattern, terms)) in self.constraints.iter().enumerate() {
            let mut prob = 0.0;
            let mut g_p = CMat::zeros(d, d);
            let mut a_amp = Complex64::new(0.0, 0.0);
            let mut a_grad = CMat::zeros(d, d);
            for (i, m) in self.basis.states().iter().enumerate() {
                let (amp, grad) =
                    transition_amplitude_with_gradient(&u, &self.input, &m.concat(pattern))?;
                prob += amp.norm_sqr();
                g_p += grad.map(|z| z * amp.conj());
                if let Some(&(_, conj_c)) = terms.iter().find(|&&(idx, _)| idx == i) {
                    a_amp += conj_c * amp;
                    a_grad += grad.map(|z| z * conj_c);
                }
            }
            value -= prob;
            gamma -= &g_p;
            let m_val = if prob >= ZERO_PROBABILITY_THRESHOLD {
                a_amp.norm_sqr() / prob
            } else {
                0.0
            };
            let c = m_val - (1.0 - self.pin_tolerance);
            let slack = self.lambdas[k] - self.mu * c;
            value += (slack.max(0.0).powi(2) - self.lambdas[k].powi(2)) / (2.0 * self.mu);
            let dpsi = -slack.max(0.0);
            if dpsi != 0.0 && prob >= ZERO_PROBABILITY_THRESHOLD {
                let g_m = a_grad.map(|z| z * (a_amp.conj() / prob))
                    - g_p.map(|z| z * (a_amp.norm_sqr() / (prob * prob)));
                gamma += g_m.map(|z| z * dpsi);
            }
        }
        Ok((value, chart_gradient(&w, &gamma, &self.base)))
    }
}
