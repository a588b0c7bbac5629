//! Photon-number states and exact Fock-space simulation.
//!
//! A linear interferometer acting on `n` modes is described by an `n×n`
//! unitary `U` of the mode creation operators; transition amplitudes between
//! Fock states are permanents of row/column-repeated submatrices of `U`.
//! This module provides the state enumeration, the permanent, transition
//! amplitudes and the heralding analysis (detection probabilities `P_a` and
//! target overlaps `M_{t,a}`).

mod herald;
mod permanent;

pub use herald::{herald_analysis, report_discrepancy, HeraldReport, PatternOutcome};
pub use permanent::permanent;

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Threshold below which a pattern probability is treated as exactly zero.
///
/// Sits below the accumulated round-off of ten-mode permanent sums but far
/// above anything a physical pattern of the schemes in this crate produces.
pub const ZERO_PROBABILITY_THRESHOLD: f64 = 1e-14;

/// Occupation-number vector, one photon count per optical mode.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(Vec<u32>);

impl FockState {
    pub fn new(occupations: Vec<u32>) -> Self {
        FockState(occupations)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        FockState(vec![0; n_modes])
    }

    pub fn n_modes(&self) -> usize {
        self.0.len()
    }

    pub fn total_photons(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn concat(&self, other: &FockState) -> FockState {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FockState(v)
    }

    /// Product of factorials of the occupations.
    pub fn norm_factor(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product()
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All occupation vectors of `n_photons` photons in `n_modes` modes, in
/// lexicographically descending order. Count is C(n_modes+n_photons−1, n_photons).
pub fn enumerate_fock_states(n_modes: usize, n_photons: u32) -> Vec<FockState> {
    assert!(n_modes >= 1, "enumerate_fock_states requires n_modes >= 1");
    let mut states = Vec::new();
    let mut current = vec![0u32; n_modes];
    current[0] = n_photons;
    loop {
        states.push(FockState(current.clone()));
        // Descending lex successor: decrement the rightmost positive entry
        // left of the last mode, collect everything to its right onto the
        // position just after it.
        let mut i = None;
        for j in (0..n_modes - 1).rev() {
            if current[j] > 0 {
                i = Some(j);
                break;
            }
        }
        let Some(i) = i else { break };
        current[i] -= 1;
        let moved: u32 = 1 + current[i + 1..].iter().sum::<u32>();
        for c in current[i + 1..].iter_mut() {
            *c = 0;
        }
        current[i + 1] = moved;
    }
    states
}

/// Fixed-order basis of the `n_photons`-photon sector over `n_modes` modes,
/// with reverse index lookup.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl SectorBasis {
    pub fn new(n_modes: usize, n_photons: u32) -> Self {
        let states = enumerate_fock_states(n_modes, n_photons);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        SectorBasis { states, index }
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state).copied()
    }
}

/// Normalized superposition of Fock states over the target modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    terms: Vec<TargetTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetTerm {
    pub state: FockState,
    #[serde(with = "complex_pair")]
    pub amp: Complex64,
}

impl TargetState {
    /// Builds a normalized target. The constituent states must be distinct,
    /// share a mode count and photon number, and the amplitudes must not all
    /// vanish; the stored amplitudes are rescaled to unit norm.
    pub fn new(terms: Vec<(FockState, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("target state with no terms".into()));
        }
        let n_modes = terms[0].0.n_modes();
        let photons = terms[0].0.total_photons();
        for (s, _) in &terms {
            if s.n_modes() != n_modes {
                return Err(Error::DimensionMismatch(
                    "target terms disagree on mode count".into(),
                ));
            }
            if s.total_photons() != photons {
                return Err(Error::SectorMismatch(
                    "target terms disagree on photon number".into(),
                ));
            }
        }
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                if terms[i].0 == terms[j].0 {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate target component {}",
                        terms[i].0
                    )));
                }
            }
        }
        let norm2: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(Error::InvalidArgument(
                "target state has zero or non-finite norm".into(),
            ));
        }
        let scale = norm2.sqrt().recip();
        Ok(TargetState {
            terms: terms
                .into_iter()
                .map(|(state, amp)| TargetTerm { state, amp: amp * scale })
                .collect(),
        })
    }

    pub fn terms(&self) -> &[TargetTerm] {
        &self.terms
    }

    pub fn n_modes(&self) -> usize {
        self.terms[0].state.n_modes()
    }

    pub fn total_photons(&self) -> u32 {
        self.terms[0].state.total_photons()
    }
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Heralding problem: which modes are targets vs ancillas, the input state,
/// the accepted detection patterns and the wanted target states.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n_target_modes: usize,
    pub n_ancilla_modes: usize,
    pub input: FockState,
    pub ancilla_patterns: Vec<FockState>,
    pub targets: Vec<TargetState>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.n_target_modes + self.n_ancilla_modes
    }

    pub fn input_photons(&self) -> u32 {
        self.input.total_photons()
    }

    /// Photons consumed by every ancilla pattern (they must all agree).
    pub fn ancilla_photons(&self) -> u32 {
        self.ancilla_patterns
            .first()
            .map(|p| p.total_photons())
            .unwrap_or(0)
    }

    pub fn heralded_photons(&self) -> u32 {
        self.input_photons() - self.ancilla_photons()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_target_modes == 0 {
            return Err(Error::InvalidArgument("no target modes".into()));
        }
        if self.input.n_modes() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "input covers {} modes, system has {}",
                self.input.n_modes(),
                self.dim()
            )));
        }
        if self.ancilla_patterns.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one ancilla pattern required (empty pattern for M = 0)".into(),
            ));
        }
        let m_ph = self.ancilla_patterns[0].total_photons();
        for p in &self.ancilla_patterns {
            if p.n_modes() != self.n_ancilla_modes {
                return Err(Error::DimensionMismatch(format!(
                    "ancilla pattern {} covers {} modes, expected {}",
                    p,
                    p.n_modes(),
                    self.n_ancilla_modes
                )));
            }
            if p.total_photons() != m_ph {
                return Err(Error::SectorMismatch(format!(
                    "ancilla pattern {} carries {} photons, expected {}",
                    p,
                    p.total_photons(),
                    m_ph
                )));
            }
        }
        if m_ph > self.input_photons() {
            return Err(Error::SectorMismatch(
                "ancilla patterns carry more photons than the input".into(),
            ));
        }
        for t in &self.targets {
            if t.n_modes() != self.n_target_modes {
                return Err(Error::DimensionMismatch(
                    "target state mode count differs from target modes".into(),
                ));
            }
            if t.total_photons() != self.heralded_photons() {
                return Err(Error::SectorMismatch(format!(
                    "target carries {} photons, heralded sector has {}",
                    t.total_photons(),
                    self.heralded_photons()
                )));
            }
        }
        Ok(())
    }
}

/// Builds the row/column-repeated submatrix of `u` selected by the output
/// and input occupations.
fn repeated_submatrix(u: &CMat, input: &FockState, output: &FockState) -> CMat {
    let rows: Vec<usize> = output
        .occupations()
        .iter()
        .enumerate()
        .flat_map(|(j, &n)| std::iter::repeat(j).take(n as usize))
        .collect();
    let cols: Vec<usize> = input
        .occupations()
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat(k).take(n as usize))
        .collect();
    CMat::from_fn(rows.len(), cols.len(), |r, c| u[(rows[r], cols[c])])
}

/// Amplitude `⟨output| 𝒰 |input⟩` for the interferometer with mode matrix `u`:
/// the permanent of the repeated submatrix divided by the square root of the
/// occupation factorials. Zero when the photon totals differ.
pub fn transition_amplitude(u: &CMat, input: &FockState, output: &FockState) -> Result<Complex64> {
    check_amplitude_dims(u, input, output)?;
    if input.total_photons() != output.total_photons() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sub = repeated_submatrix(u, input, output);
    let p = permanent(&sub)?;
    Ok(p / (input.norm_factor() * output.norm_factor()).sqrt())
}

/// Amplitude together with its matrix of derivatives with respect to the
/// entries of `u`.
///
/// The derivative of a permanent in one entry is the permanent of the minor
/// obtained by deleting that entry's row and column; with occupation `out_j`
/// copies of row `j` and `in_k` copies of column `k` the derivative picks up
/// the multiplicity factor `out_j · in_k`.
pub fn transition_amplitude_with_gradient(
    u: &CMat,
    input: &FockState,
    output: &FockState,
) -> Result<(Complex64, CMat)> {
    check_amplitude_dims(u, input, output)?;
    let dim = u.nrows();
    let mut grad = CMat::zeros(dim, dim);
    if input.total_photons() != output.total_photons() {
        return Ok((Complex64::new(0.0, 0.0), grad));
    }
    let denom = (input.norm_factor() * output.norm_factor()).sqrt();
    let sub = repeated_submatrix(u, input, output);
    let amp = permanent(&sub)? / denom;

    let out_occ = output.occupations();
    let in_occ = input.occupations();
    // Positions of the first row/column instance of each mode in `sub`.
    let mut row_start = vec![0usize; dim];
    let mut col_start = vec![0usize; dim];
    let mut acc = 0;
    for (j, &n) in out_occ.iter().enumerate() {
        row_start[j] = acc;
        acc += n as usize;
    }
    acc = 0;
    for (k, &n) in in_occ.iter().enumerate() {
        col_start[k] = acc;
        acc += n as usize;
    }
    let n = sub.nrows();
    for j in 0..dim {
        if out_occ[j] == 0 {
            continue;
        }
        for k in 0..dim {
            if in_occ[k] == 0 {
                continue;
            }
            let minor = CMat::from_fn(n - 1, n - 1, |r, c| {
                let rr = if r < row_start[j] { r } else { r + 1 };
                let cc = if c < col_start[k] { c } else { c + 1 };
                sub[(rr, cc)]
            });
            let m = permanent(&minor)?;
            grad[(j, k)] = (out_occ[j] as f64) * (in_occ[k] as f64) * m / denom;
        }
    }
    Ok((amp, grad))
}

fn check_amplitude_dims(u: &CMat, input: &FockState, output: &FockState) -> Result<()> {
    crate::linalg::ensure_square(u, "transition amplitude")?;
    if input.n_modes() != u.nrows() || output.n_modes() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "amplitude: matrix is {}x{}, input covers {} modes, output {}",
            u.nrows(),
            u.ncols(),
            input.n_modes(),
            output.n_modes()
        )));
    }
    Ok(())
}

/// Squared overlap `|⟨target|state⟩|²` of an amplitude vector over `basis`
/// with a target superposition. Invariant under a global phase of either side.
pub fn state_fidelity(state: &[Complex64], target: &TargetState, basis: &SectorBasis) -> Result<f64> {
    if state.len() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "state vector has {} entries, basis {}",
            state.len(),
            basis.len()
        )));
    }
    let mut inner = Complex64::new(0.0, 0.0);
    for term in target.terms() {
        let idx = basis.index_of(&term.state).ok_or_else(|| {
            Error::SectorMismatch(format!("target component {} outside basis sector", term.state))
        })?;
        inner += term.amp.conj() * state[idx];
    }
    Ok(inner.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn enumerate_two_modes_one_photon() {
        let states = enumerate_fock_states(2, 1);
        assert_eq!(
            states,
            vec![FockState::new(vec![1, 0]), FockState::new(vec![0, 1])]
        );
    }

    #[test]
    fn enumerate_counts_match_stars_and_bars() {
        // C(8, 3) = 56
        assert_eq!(enumerate_fock_states(6, 3).len(), 56);
        assert_eq!(enumerate_fock_states(4, 0).len(), 1);
        assert_eq!(enumerate_fock_states(1, 5).len(), 1);
        assert_eq!(enumerate_fock_states(5, 3).len(), 35);
    }

    #[test]
    fn enumerate_is_descending_and_duplicate_free() {
        let states = enumerate_fock_states(4, 3);
        for w in states.windows(2) {
            assert!(w[0] > w[1], "{:?} !> {:?}", w[0], w[1]);
        }
        let single: Vec<_> = states
            .iter()
            .filter(|s| s.occupations().iter().all(|&n| n <= 1))
            .collect();
        assert_eq!(single.len(), 4); // choose 3 of 4 modes
    }

    #[test]
    fn amplitude_identity_passthrough() {
        let u = identity(3);
        let s = FockState::new(vec![1, 0, 1]);
        let a = transition_amplitude(&u, &s, &s).unwrap();
        assert!((a - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn amplitude_hong_ou_mandel_suppression() {
        // 45° splitter of the two-mode element convention: coincidences vanish.
        let th = std::f64::consts::FRAC_PI_4;
        let u = CMat::from_row_slice(
            2,
            2,
            &[
                c(th.cos(), 0.0),
                c(-th.sin(), 0.0),
                c(th.sin(), 0.0),
                c(th.cos(), 0.0),
            ],
        );
        let s = FockState::new(vec![1, 1]);
        let a = transition_amplitude(&u, &s, &s).unwrap();
        assert!(a.norm() < 1e-15, "HOM coincidence amplitude {a}");
    }

    #[test]
    fn amplitude_zero_across_sectors() {
        let u = identity(2);
        let a = transition_amplitude(
            &u,
            &FockState::new(vec![1, 0]),
            &FockState::new(vec![1, 1]),
        )
        .unwrap();
        assert_eq!(a, c(0.0, 0.0));
    }

    #[test]
    fn amplitude_dimension_mismatch_errors() {
        let u = identity(2);
        let r = transition_amplitude(
            &u,
            &FockState::new(vec![1, 0, 0]),
            &FockState::new(vec![1, 0]),
        );
        assert!(r.is_err());
    }

    #[test]
    fn amplitude_gradient_matches_finite_differences() {
        // Small non-unitary matrix is fine here: the permanent identity is
        // algebraic in the entries.
        let u = CMat::from_fn(3, 3, |r, c_| c(0.3 + r as f64 * 0.2, 0.1 * c_ as f64 - 0.05));
        let input = FockState::new(vec![2, 1, 0]);
        let output = FockState::new(vec![1, 1, 1]);
        let (_, grad) = transition_amplitude_with_gradient(&u, &input, &output).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            for k in 0..3 {
                let mut up = u.clone();
                up[(j, k)] += c(h, 0.0);
                let mut dn = u.clone();
                dn[(j, k)] -= c(h, 0.0);
                let fd = (transition_amplitude(&up, &input, &output).unwrap()
                    - transition_amplitude(&dn, &input, &output).unwrap())
                    / c(2.0 * h, 0.0);
                assert!(
                    (fd - grad[(j, k)]).norm() < 1e-6,
                    "entry ({j},{k}): fd {fd} vs analytic {}",
                    grad[(j, k)]
                );
            }
        }
    }

    #[test]
    fn fidelity_examples() {
        let basis = SectorBasis::new(2, 1);
        let t = TargetState::new(vec![(FockState::new(vec![1, 0]), c(1.0, 0.0))]).unwrap();
        let v_same = [c(1.0, 0.0), c(0.0, 0.0)];
        let v_orth = [c(0.0, 0.0), c(1.0, 0.0)];
        assert!((state_fidelity(&v_same, &t, &basis).unwrap() - 1.0).abs() < 1e-15);
        assert!(state_fidelity(&v_orth, &t, &basis).unwrap() < 1e-15);
        let phase = Complex64::from_polar(1.0, std::f64::consts::PI / 7.0);
        let v_phased = [phase, c(0.0, 0.0)];
        assert!((state_fidelity(&v_phased, &t, &basis).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn target_state_rejects_duplicates_and_normalizes() {
        let dup = TargetState::new(vec![
            (FockState::new(vec![1, 0]), c(1.0, 0.0)),
            (FockState::new(vec![1, 0]), c(-1.0, 0.0)),
        ]);
        assert!(dup.is_err());
        let t = TargetState::new(vec![
            (FockState::new(vec![1, 0]), c(3.0, 0.0)),
            (FockState::new(vec![0, 1]), c(4.0, 0.0)),
        ])
        .unwrap();
        let norm2: f64 = t.terms().iter().map(|t| t.amp.norm_sqr()).sum();
        assert!((norm2 - 1.0).abs() < 1e-12);
    }
}
