//! Heralding analysis: detection probabilities and target overlaps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{ensure_unitary, CMat};

use super::{
    state_fidelity, transition_amplitude, FockState, ProblemSpec, SectorBasis,
    ZERO_PROBABILITY_THRESHOLD,
};

/// Tolerance for the unitarity of the analyzed matrix.
pub const HERALD_UNITARITY_TOL: f64 = 1e-8;

/// Result of one ancilla pattern: its probability and the state left in the
/// target modes, expressed over the fixed heralded-sector basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternOutcome {
    pub pattern: FockState,
    pub probability: f64,
    /// Normalized amplitudes over the heralded sector; all zero when the
    /// probability is below the zero threshold.
    pub heralded_state: Vec<[f64; 2]>,
}

impl PatternOutcome {
    pub fn heralded_amplitudes(&self) -> Vec<Complex64> {
        self.heralded_state
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect()
    }
}

/// Per-pattern probabilities `P_a`, heralded states, and the overlap matrix
/// `M_{t,a}` (rows follow the problem's target list, columns its patterns).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeraldReport {
    pub patterns: Vec<PatternOutcome>,
    pub overlaps: Vec<Vec<f64>>,
}

impl HeraldReport {
    pub fn probability(&self, pattern_index: usize) -> f64 {
        self.patterns[pattern_index].probability
    }

    pub fn total_success_probability(&self, ancilla_set: &[usize]) -> f64 {
        ancilla_set.iter().map(|&a| self.probability(a)).sum()
    }

    /// Overlap `M_{t,a}`.
    pub fn overlap(&self, target_index: usize, pattern_index: usize) -> f64 {
        self.overlaps[target_index][pattern_index]
    }
}

/// Projects the evolved input onto every ancilla pattern.
///
/// For each pattern `a`: `P_a = Σ_m |⟨m,a|𝒰|ψ_in⟩|²` over all target-mode
/// outcomes `m` in the heralded photon sector, and
/// `M_{t,a} = P_a⁻¹ |⟨t,a|𝒰|ψ_in⟩|²`, set to zero by convention when `P_a`
/// is below [`ZERO_PROBABILITY_THRESHOLD`].
pub fn herald_analysis(u: &CMat, spec: &ProblemSpec) -> Result<HeraldReport> {
    spec.validate()?;
    if u.nrows() != spec.dim() {
        return Err(crate::error::Error::DimensionMismatch(format!(
            "herald analysis: matrix is {}x{}, problem has {} modes",
            u.nrows(),
            u.ncols(),
            spec.dim()
        )));
    }
    ensure_unitary(u, HERALD_UNITARITY_TOL)?;

    let basis = SectorBasis::new(spec.n_target_modes, spec.heralded_photons());
    let outcomes: Vec<PatternOutcome> = spec
        .ancilla_patterns
        .par_iter()
        .map(|pattern| pattern_outcome(u, spec, &basis, pattern))
        .collect::<Result<Vec<_>>>()?;

    let mut overlaps = vec![vec![0.0; outcomes.len()]; spec.targets.len()];
    for (a, outcome) in outcomes.iter().enumerate() {
        if outcome.probability < ZERO_PROBABILITY_THRESHOLD {
            continue;
        }
        let amps = outcome.heralded_amplitudes();
        for (t, target) in spec.targets.iter().enumerate() {
            overlaps[t][a] = state_fidelity(&amps, target, &basis)?;
        }
    }
    Ok(HeraldReport {
        patterns: outcomes,
        overlaps,
    })
}

fn pattern_outcome(
    u: &CMat,
    spec: &ProblemSpec,
    basis: &SectorBasis,
    pattern: &FockState,
) -> Result<PatternOutcome> {
    let mut amps = Vec::with_capacity(basis.len());
    let mut p = 0.0;
    // Fixed summation order over the basis keeps results identical for any
    // degree of outer parallelism.
    for m in basis.states() {
        let amp = transition_amplitude(u, &spec.input, &m.concat(pattern))?;
        p += amp.norm_sqr();
        amps.push(amp);
    }
    let heralded_state = if p >= ZERO_PROBABILITY_THRESHOLD {
        let scale = p.sqrt().recip();
        amps.iter().map(|a| [a.re * scale, a.im * scale]).collect()
    } else {
        vec![[0.0, 0.0]; basis.len()]
    };
    Ok(PatternOutcome {
        pattern: pattern.clone(),
        probability: p,
        heralded_state,
    })
}

/// Compares two reports the way scheme equivalence is defined: probabilities
/// and overlaps entrywise, heralded states by fidelity (they may differ by a
/// global phase). Returns the largest discrepancy found.
pub fn report_discrepancy(a: &HeraldReport, b: &HeraldReport) -> f64 {
    let mut worst: f64 = 0.0;
    for (pa, pb) in a.patterns.iter().zip(&b.patterns) {
        worst = worst.max((pa.probability - pb.probability).abs());
        if pa.probability >= ZERO_PROBABILITY_THRESHOLD
            && pb.probability >= ZERO_PROBABILITY_THRESHOLD
        {
            let inner: Complex64 = pa
                .heralded_amplitudes()
                .iter()
                .zip(pb.heralded_amplitudes())
                .map(|(x, y)| x.conj() * y)
                .sum();
            worst = worst.max((1.0 - inner.norm_sqr()).abs());
        }
    }
    for (ra, rb) in a.overlaps.iter().zip(&b.overlaps) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::TargetState;
    use crate::linalg::identity;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn no_ancillas_is_certain() {
        let spec = ProblemSpec {
            n_target_modes: 3,
            n_ancilla_modes: 0,
            input: FockState::new(vec![1, 1, 0]),
            ancilla_patterns: vec![FockState::new(vec![])],
            targets: vec![],
        };
        let report = herald_analysis(&identity(3), &spec).unwrap();
        assert!((report.patterns[0].probability - 1.0).abs() < 1e-12);
        // Heralded state is the full output state: |1,1,0⟩ on the identity.
        let basis = SectorBasis::new(3, 2);
        let idx = basis.index_of(&FockState::new(vec![1, 1, 0])).unwrap();
        let amps = report.patterns[0].heralded_amplitudes();
        assert!((amps[idx] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn non_unitary_rejected() {
        let spec = ProblemSpec {
            n_target_modes: 1,
            n_ancilla_modes: 1,
            input: FockState::new(vec![1, 0]),
            ancilla_patterns: vec![FockState::new(vec![0])],
            targets: vec![],
        };
        let mut u = identity(2);
        u[(0, 0)] = c(2.0, 0.0);
        assert!(herald_analysis(&u, &spec).is_err());
    }

    #[test]
    fn overlaps_match_refitted_fidelity() {
        let u = crate::optimizer::haar_random_unitary(4, 314);
        let target = TargetState::new(vec![
            (FockState::new(vec![1, 0]), c(0.6, 0.0)),
            (FockState::new(vec![0, 1]), c(0.0, 0.8)),
        ])
        .unwrap();
        let spec = ProblemSpec {
            n_target_modes: 2,
            n_ancilla_modes: 2,
            input: FockState::new(vec![1, 1, 0, 0]),
            ancilla_patterns: vec![FockState::new(vec![1, 0]), FockState::new(vec![0, 1])],
            targets: vec![target.clone()],
        };
        let report = herald_analysis(&u, &spec).unwrap();
        let basis = SectorBasis::new(2, 1);
        let mut saw_live_pattern = false;
        for a in 0..2 {
            if report.patterns[a].probability >= ZERO_PROBABILITY_THRESHOLD {
                saw_live_pattern = true;
                let amps = report.patterns[a].heralded_amplitudes();
                let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
                assert!((norm2 - 1.0).abs() < 1e-12);
                let f = state_fidelity(&amps, &target, &basis).unwrap();
                assert!((f - report.overlap(0, a)).abs() < 1e-12);
            } else {
                assert_eq!(report.overlap(0, a), 0.0);
            }
        }
        assert!(saw_live_pattern);
    }
}
