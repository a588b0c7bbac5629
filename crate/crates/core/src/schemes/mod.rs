//! Closed-form reference circuits and target-state factories.
//!
//! The ten-mode GHZ generator: six single photons enter modes 0–5, the
//! circuit splits into two nearly symmetric five-mode arms built around a
//! three-mode Ω block (45°, acos(1/√3) and 30° rotations), and two output
//! 45° splitters interfere the arms into the four ancilla modes 6–9.
//! Detecting single photons in modes (6,7) and in exactly one of (8,9)
//! heralds the three-photon GHZ superpositions `(|101010⟩ ± |010101⟩)/√2`
//! in modes 0–5, each pattern firing with probability 1/108 for a total
//! success rate of 1/54.
//!
//! The six-mode Bell generator reuses one Ω block per arm: four photons
//! enter modes 0–3, a first 45° splitter bunches the middle pair, and a
//! coincidence on the ancilla pair (modes 4, 5) heralds `ψ^±` with
//! probability 2/27.
//!
//! All constants are constructed from closed forms (1/√3, √(2/3),
//! acos(1/√3), π/6, π/4); nothing is transcribed from rounded decimals.

mod verify;

pub use verify::{
    builtin_scheme, builtin_scheme_names, default_claims, verify_scheme, Claim, ClaimResult,
    SchemeDefinition, VerificationReport,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    clements_decompose, compose, element_matrix, CircuitSpec, PhaseLayer, TwoModeElement,
};
use crate::error::{Error, Result};
use crate::fock::{herald_analysis, FockState, HeraldReport, ProblemSpec, TargetState};
use crate::linalg::{ensure_unitary, CMat, C_ONE, C_ZERO};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `acos(1/√3) ≈ 54.7356°`, the distinctive splitter angle of the Ω block.
pub fn magic_angle() -> f64 {
    (1.0 / 3.0f64.sqrt()).acos()
}

/// The Ω block: mode 0 carries one photon in, mode 1 a zero/two-photon
/// component, mode 2 feeds the heralding measurement.
pub fn omega_block() -> CMat {
    let s23 = (2.0f64 / 3.0).sqrt();
    let s16 = 1.0 / 6.0f64.sqrt();
    let s12 = 1.0 / 2.0f64.sqrt();
    let s13 = 1.0 / 3.0f64.sqrt();
    CMat::from_row_slice(
        3,
        3,
        &[
            c(-s23), c(s16), c(s16),
            c(0.0), c(s12), c(-s12),
            c(s13), c(s13), c(s13),
        ],
    )
}

/// The Ω′ block: Ω with its right-most 30° rotation removed.
pub fn omega_prime_block() -> CMat {
    let s23 = (2.0f64 / 3.0).sqrt();
    let s16 = 1.0 / 6.0f64.sqrt();
    let s12 = 1.0 / 2.0f64.sqrt();
    let s13 = 1.0 / 3.0f64.sqrt();
    CMat::from_row_slice(
        3,
        3,
        &[
            c(s12), c(-s12), c(0.0),
            c(s16), c(s16), c(-s23),
            c(s13), c(s13), c(s13),
        ],
    )
}

/// Linear form in the creation operators of block modes 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm(pub [Complex64; 2]);

/// Quadratic form: coefficients of `ω₀†²`, `ω₀†ω₁†`, `ω₁†²`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm(pub [Complex64; 3]);

/// Coefficient algebra of a generic Ω-like block: the images of `ω₀†` and
/// `(ω₁†)²/2` under the block,
/// `ω₀† → α ω₂† + β` and `(ω₁†)²/2 → A (ω₂†)² + 2B ω₂† + C`,
/// plus the derived `D = αC + 2Bβ` that governs the single-photon heralding
/// channel.
#[derive(Clone, Debug)]
pub struct OmegaCoefficients {
    pub alpha: Complex64,
    pub big_a: Complex64,
    pub beta: LinearForm,
    pub big_b: LinearForm,
    pub c_form: QuadraticForm,
    pub d_form: QuadraticForm,
}

pub fn omega_coefficients(block: &CMat) -> Result<OmegaCoefficients> {
    if block.nrows() != 3 || block.ncols() != 3 {
        return Err(Error::DimensionMismatch(
            "Ω coefficients need a 3x3 block".into(),
        ));
    }
    ensure_unitary(block, 1e-10)?;
    let alpha = block[(2, 0)];
    let beta = LinearForm([block[(0, 0)], block[(1, 0)]]);
    let t = block[(2, 1)];
    let (p0, p1) = (block[(0, 1)], block[(1, 1)]);
    let big_a = t * t * 0.5;
    let big_b = LinearForm([t * p0 * 0.5, t * p1 * 0.5]);
    let c_form = QuadraticForm([p0 * p0 * 0.5, p0 * p1, p1 * p1 * 0.5]);
    let bb = &big_b.0;
    let be = &beta.0;
    let d_form = QuadraticForm([
        alpha * c_form.0[0] + 2.0 * bb[0] * be[0],
        alpha * c_form.0[1] + 2.0 * (bb[0] * be[1] + bb[1] * be[0]),
        alpha * c_form.0[2] + 2.0 * bb[1] * be[1],
    ]);
    Ok(OmegaCoefficients {
        alpha,
        big_a,
        beta,
        big_b,
        c_form,
        d_form,
    })
}

/// The two five-mode arm matrices of the block-diagonal GHZ representation.
/// Only signs distinguish them; both rows 3–4 carry the shared 45° bypass.
pub fn ghz_part_matrices() -> (CMat, CMat) {
    let s23 = (2.0f64 / 3.0).sqrt();
    let s16 = 1.0 / 6.0f64.sqrt();
    let s12 = 1.0 / 2.0f64.sqrt();
    let s13 = 1.0 / 3.0f64.sqrt();
    let s2l = 1.0 / (2.0 * 3.0f64.sqrt());
    let build = |sg: f64| {
        CMat::from_row_slice(
            5,
            5,
            &[
                c(-sg * s23), c(s16), c(sg * s2l), c(-sg * s2l), c(0.0),
                c(0.0), c(-s12), c(sg * 0.5), c(-sg * 0.5), c(0.0),
                c(sg * s13), c(s13), c(sg * s16), c(-sg * s16), c(0.0),
                c(0.0), c(0.0), c(0.5), c(0.5), c(-s12),
                c(0.0), c(0.0), c(0.5), c(0.5), c(s12),
            ],
        )
    };
    (build(1.0), build(-1.0))
}

/// Exact ten-mode GHZ unitary assembled from the block-diagonal form: the
/// two arm matrices, the port permutations into the 6+4 labeling, the two
/// output 45° splitters on (6,7) and (8,9), and a sign fix on mode 8.
pub fn ghz_block_unitary() -> CMat {
    let (ut, ub) = ghz_part_matrices();
    let mut a = CMat::zeros(10, 10);
    for r in 0..5 {
        for cc in 0..5 {
            a[(r, cc)] = ut[(r, cc)];
            a[(r + 5, cc + 5)] = ub[(r, cc)];
        }
    }
    // Arm rows onto output lines: targets t0..t5 on 0..5, heralds on 6..9.
    let row_map = [0usize, 1, 6, 2, 8, 3, 4, 7, 5, 9];
    let mut p_out = CMat::zeros(10, 10);
    for (abstract_row, &line) in row_map.iter().enumerate() {
        p_out[(line, abstract_row)] = C_ONE;
    }
    // Input photons 0..5 into the arm ports; two columns flip sign so the
    // amplitudes match the closed-form expansion (a global phase per input).
    let col_map: [(usize, f64); 10] = [
        (0, 1.0),
        (5, 1.0),
        (2, 1.0),
        (7, 1.0),
        (3, -1.0),
        (8, -1.0),
        (1, 1.0),
        (6, 1.0),
        (4, 1.0),
        (9, 1.0),
    ];
    let mut p_in = CMat::zeros(10, 10);
    for (input, &(abstract_col, sign)) in col_map.iter().enumerate() {
        p_in[(abstract_col, input)] = c(sign);
    }
    let alpha = element_matrix(&TwoModeElement::new(FRAC_PI_4, 0.0, 6, 7).unwrap(), 10).unwrap();
    let beta = element_matrix(&TwoModeElement::new(FRAC_PI_4, 0.0, 8, 9).unwrap(), 10).unwrap();
    let mut d8 = crate::linalg::identity(10);
    d8[(8, 8)] = c(-1.0);
    d8 * beta * alpha * p_out * a * p_in
}

/// The twelve-splitter GHZ circuit with exact algebraic angles.
///
/// Physical layout on the 6+4 port convention: a crossing layer routes the
/// six input photons into the two arms, each arm runs two 45° preparation
/// splitters into its Ω block (45°, acos(1/√3), 30°), and two 45° output
/// splitters feed the heralding modes. The crossings are trivial (θ = π/2)
/// and do not count as splitters.
pub fn ghz_scheme() -> CircuitSpec {
    let th_m = magic_angle();
    let x = |n, m| TwoModeElement::new(FRAC_PI_2, 0.0, n, m).unwrap();
    let t = |th, ph, n, m| TwoModeElement::new(th, ph, n, m).unwrap();
    let elements = vec![
        // Input routing.
        x(1, 3),
        x(1, 7),
        x(1, 4),
        x(1, 6),
        // Top arm: preparation, crossing into the block, Ω.
        t(FRAC_PI_4, 0.0, 6, 2),
        t(FRAC_PI_4, 0.0, 2, 8),
        x(1, 6),
        t(FRAC_PI_4, 0.0, 0, 1),
        t(th_m, 0.0, 1, 6),
        t(FRAC_PI_6, PI, 0, 1),
        // Bottom arm.
        t(FRAC_PI_4, 0.0, 7, 5),
        t(FRAC_PI_4, 0.0, 5, 9),
        x(4, 7),
        t(FRAC_PI_4, 0.0, 3, 4),
        t(th_m, 0.0, 4, 7),
        t(FRAC_PI_6, PI, 3, 4),
        // Heralding splitters.
        t(FRAC_PI_4, 0.0, 6, 7),
        t(FRAC_PI_4, 0.0, 8, 9),
    ];
    let mut phases = vec![C_ONE; 10];
    phases[8] = c(-1.0);
    CircuitSpec::from_physical_order(10, elements, PhaseLayer::new(phases).unwrap()).unwrap()
}

/// The same transformation assembled from the block-diagonal arm matrices
/// and refactored into a rectangular mesh.
pub fn ghz_scheme_block_form() -> CircuitSpec {
    clements_decompose(&ghz_block_unitary()).expect("exact block unitary decomposes")
}

pub fn ghz_input() -> FockState {
    FockState::new(vec![1, 1, 1, 1, 1, 1, 0, 0, 0, 0])
}

/// The four admissible detection patterns: three photons spread over the
/// four ancilla modes with at most one photon per mode.
pub fn ghz_patterns() -> Vec<FockState> {
    vec![
        FockState::new(vec![1, 1, 1, 0]),
        FockState::new(vec![1, 1, 0, 1]),
        FockState::new(vec![1, 0, 1, 1]),
        FockState::new(vec![0, 1, 1, 1]),
    ]
}

/// `(|x⟩ ± |x̄⟩)/√2` for every zero/one occupation `x` of three photons in
/// six modes, with `x̄` the binary complement; pairs are deduplicated, so the
/// family has 2 · C(6,3)/2 = 20 members.
pub fn ghz_targets() -> Vec<TargetState> {
    let mut out = Vec::with_capacity(20);
    for s in crate::fock::enumerate_fock_states(6, 3) {
        if s.occupations().iter().any(|&n| n > 1) {
            continue;
        }
        let comp = FockState::new(s.occupations().iter().map(|&n| 1 - n).collect());
        if s < comp {
            continue; // each complement pair once
        }
        for sign in [1.0, -1.0] {
            out.push(
                TargetState::new(vec![(s.clone(), c(1.0)), (comp.clone(), c(sign))]).unwrap(),
            );
        }
    }
    out
}

/// The canonical pair heralded by the reference scheme.
pub fn ghz_canonical_pair() -> (TargetState, TargetState) {
    let x = FockState::new(vec![1, 0, 1, 0, 1, 0]);
    let y = FockState::new(vec![0, 1, 0, 1, 0, 1]);
    (
        TargetState::new(vec![(x.clone(), c(1.0)), (y.clone(), c(1.0))]).unwrap(),
        TargetState::new(vec![(x, c(1.0)), (y, c(-1.0))]).unwrap(),
    )
}

pub fn ghz_problem() -> ProblemSpec {
    ProblemSpec {
        n_target_modes: 6,
        n_ancilla_modes: 4,
        input: ghz_input(),
        ancilla_patterns: ghz_patterns(),
        targets: ghz_targets(),
    }
}

/// Sign of the two-photon component fed to the bottom arm of the Bell scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_int(s: i64) -> Result<Self> {
        match s {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::InvalidArgument(format!("sign must be ±1, got {s}"))),
        }
    }
}

/// Mode layout of the Bell scheme: qubit rails (a₀,a₁,b₀,b₁) on 0–3,
/// heralding modes (a₂,b₂) on 4–5.
pub fn bell_input() -> FockState {
    FockState::new(vec![1, 1, 1, 1, 0, 0])
}

/// Six-mode Bell-state generator around two copies of a 3×3 block.
///
/// A 45° splitter across the two middle rails bunches that photon pair into
/// `[(a₁†)² − s (b₁†)²]/2`; for `s = −1` a π/2 phase shifter on the bottom
/// rail flips the two-photon amplitude (realized as a θ = 0 element, not a
/// splitter). Each arm then runs the block over (rail₀, rail₁, herald) and a
/// final 45° splitter interferes the two herald modes. Detecting `(1,1)` on
/// modes (4,5) heralds `ψ^s` when the block is Ω.
pub fn bell_scheme(sign: Sign, block: &CMat) -> Result<CircuitSpec> {
    if block.nrows() != 3 || block.ncols() != 3 {
        return Err(Error::DimensionMismatch(
            "Bell scheme blocks are 3x3".into(),
        ));
    }
    let block_spec = clements_decompose(block)?;
    let top = [0usize, 1, 4];
    let bottom = [2usize, 3, 5];

    let mut elements = Vec::new();
    elements.push(TwoModeElement::new(FRAC_PI_4, 0.0, 3, 1)?);
    if sign == Sign::Minus {
        elements.push(TwoModeElement::new(0.0, FRAC_PI_2, 3, 5)?);
    }
    // Block elements in physical order (the stored order is product order).
    for map in [top, bottom] {
        for e in block_spec.elements.iter().rev() {
            elements.push(TwoModeElement::new(
                e.theta,
                e.phi,
                map[e.modes.0],
                map[e.modes.1],
            )?);
        }
    }
    elements.push(TwoModeElement::new(FRAC_PI_4, 0.0, 4, 5)?);

    // Both arms share one block, so the herald-mode phases coincide and
    // commute through the final splitter into the output layer.
    let d = block_spec.output_phases.phases();
    let phases = PhaseLayer::new(vec![d[0], d[1], d[0], d[1], d[2], d[2]])?;
    CircuitSpec::from_physical_order(6, elements, phases)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
    #[serde(rename = "chi+")]
    ChiPlus,
    #[serde(rename = "chi-")]
    ChiMinus,
}

impl BellLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
            BellLabel::ChiPlus => "chi+",
            BellLabel::ChiMinus => "chi-",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedBellState {
    pub label: BellLabel,
    pub state: TargetState,
}

type Pair = (Vec<(usize, Complex64)>, Vec<(usize, Complex64)>, Complex64);

/// Expands `Σ coeff · F G |0⟩` for linear forms `F, G` in creation operators
/// over `n_modes` modes into a normalized two-photon target state.
fn two_photon_state(pairs: &[Pair], n_modes: usize) -> Result<TargetState> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for (f, g, coeff) in pairs {
        for &(i, fi) in f {
            for &(j, gj) in g {
                let mut occ = vec![0u32; n_modes];
                occ[i] += 1;
                occ[j] += 1;
                let w = if i == j { 2.0f64.sqrt() } else { 1.0 };
                *acc.entry(occ).or_insert(C_ZERO) += *coeff * fi * gj * w;
            }
        }
    }
    let terms: Vec<(FockState, Complex64)> = acc
        .into_iter()
        .filter(|(_, a)| a.norm() > 1e-15)
        .map(|(occ, a)| (FockState::new(occ), a))
        .collect();
    TargetState::new(terms)
}

fn single(mode: usize) -> Vec<(usize, Complex64)> {
    vec![(mode, C_ONE)]
}

/// The six Bell states of the dual-rail encoding over modes (a₀,a₁,b₀,b₁):
/// `φ^± ∝ a₀†b₀† ± a₁†b₁†`, `ψ^± ∝ a₀†b₁† ± a₁†b₀†`,
/// `χ^± ∝ a₀†a₁† ± b₀†b₁†`.
pub fn bell_targets() -> Vec<NamedBellState> {
    let mk = |l: BellLabel, p0: (usize, usize), p1: (usize, usize), sg: f64| NamedBellState {
        label: l,
        state: two_photon_state(
            &[
                (single(p0.0), single(p0.1), C_ONE),
                (single(p1.0), single(p1.1), c(sg)),
            ],
            4,
        )
        .unwrap(),
    };
    vec![
        mk(BellLabel::PhiPlus, (0, 2), (1, 3), 1.0),
        mk(BellLabel::PhiMinus, (0, 2), (1, 3), -1.0),
        mk(BellLabel::PsiPlus, (0, 3), (1, 2), 1.0),
        mk(BellLabel::PsiMinus, (0, 3), (1, 2), -1.0),
        mk(BellLabel::ChiPlus, (0, 1), (2, 3), 1.0),
        mk(BellLabel::ChiMinus, (0, 1), (2, 3), -1.0),
    ]
}

pub fn bell_state(label: BellLabel) -> TargetState {
    bell_targets()
        .into_iter()
        .find(|n| n.label == label)
        .unwrap()
        .state
}

/// Search problem whose optimum the Bell scheme realizes: herald `ψ^±` on a
/// single-photon coincidence across the two ancilla modes.
pub fn bell_problem() -> ProblemSpec {
    ProblemSpec {
        n_target_modes: 4,
        n_ancilla_modes: 2,
        input: bell_input(),
        ancilla_patterns: vec![FockState::new(vec![1, 1])],
        targets: vec![bell_state(BellLabel::PsiPlus), bell_state(BellLabel::PsiMinus)],
    }
}

/// The 60°-rotated Bell family built on `ã₀ = a₀/2 + √3 a₁/2`,
/// `ã₁ = a₁/2 − √3 a₀/2` (likewise for the b rails).
pub fn rotated_bell_targets() -> Vec<NamedBellState> {
    let h = 0.5;
    let r3 = 3.0f64.sqrt() * 0.5;
    let ta0 = vec![(0usize, c(h)), (1usize, c(r3))];
    let ta1 = vec![(0usize, c(-r3)), (1usize, c(h))];
    let tb0 = vec![(2usize, c(h)), (3usize, c(r3))];
    let tb1 = vec![(2usize, c(-r3)), (3usize, c(h))];
    let mk = |l: BellLabel,
              p0: (&Vec<(usize, Complex64)>, &Vec<(usize, Complex64)>),
              p1: (&Vec<(usize, Complex64)>, &Vec<(usize, Complex64)>),
              sg: f64| NamedBellState {
        label: l,
        state: two_photon_state(
            &[
                (p0.0.clone(), p0.1.clone(), C_ONE),
                (p1.0.clone(), p1.1.clone(), c(sg)),
            ],
            4,
        )
        .unwrap(),
    };
    vec![
        mk(BellLabel::PhiPlus, (&ta0, &tb0), (&ta1, &tb1), 1.0),
        mk(BellLabel::PhiMinus, (&ta0, &tb0), (&ta1, &tb1), -1.0),
        mk(BellLabel::PsiPlus, (&ta0, &tb1), (&ta1, &tb0), 1.0),
        mk(BellLabel::PsiMinus, (&ta0, &tb1), (&ta1, &tb0), -1.0),
        mk(BellLabel::ChiPlus, (&ta0, &ta1), (&tb0, &tb1), 1.0),
        mk(BellLabel::ChiMinus, (&ta0, &ta1), (&tb0, &tb1), -1.0),
    ]
}

/// Heralded-state decomposition for the two-photon bunched patterns (2,0)
/// and (0,2), reported against both the plain and the 60°-rotated Bell
/// bases. Which of the two bases the closed-form analysis intends is left
/// open; both are measured.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BunchedHeraldInfo {
    pub pattern: FockState,
    pub probability: f64,
    pub plain_overlaps: Vec<(String, f64)>,
    pub rotated_overlaps: Vec<(String, f64)>,
}

pub fn bell_bunched_report(sign: Sign, block: &CMat) -> Result<Vec<BunchedHeraldInfo>> {
    let spec = bell_scheme(sign, block)?;
    let u = compose(&spec);
    let plain = bell_targets();
    let rotated = rotated_bell_targets();
    let mut targets: Vec<TargetState> = plain.iter().map(|n| n.state.clone()).collect();
    targets.extend(rotated.iter().map(|n| n.state.clone()));
    let problem = ProblemSpec {
        n_target_modes: 4,
        n_ancilla_modes: 2,
        input: bell_input(),
        ancilla_patterns: vec![FockState::new(vec![2, 0]), FockState::new(vec![0, 2])],
        targets,
    };
    let report = herald_analysis(&u, &problem)?;
    let mut out = Vec::new();
    for (a, outcome) in report.patterns.iter().enumerate() {
        out.push(BunchedHeraldInfo {
            pattern: outcome.pattern.clone(),
            probability: outcome.probability,
            plain_overlaps: plain
                .iter()
                .enumerate()
                .map(|(t, n)| (n.label.as_str().to_string(), report.overlaps[t][a]))
                .collect(),
            rotated_overlaps: rotated
                .iter()
                .enumerate()
                .map(|(t, n)| (n.label.as_str().to_string(), report.overlaps[t + 6][a]))
                .collect(),
        });
    }
    Ok(out)
}

/// Herald report of a built-in GHZ-style circuit against its problem.
pub fn scheme_report(spec: &CircuitSpec, problem: &ProblemSpec) -> Result<HeraldReport> {
    herald_analysis(&compose(spec), problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{count_nontrivial, rho_distance, TRIVIAL_ELEMENT_TOL};
    use crate::linalg::unitarity_deviation;
    use approx::assert_relative_eq;

    #[test]
    fn omega_blocks_are_unitary() {
        assert!(unitarity_deviation(&omega_block()) < 1e-15);
        assert!(unitarity_deviation(&omega_prime_block()) < 1e-15);
        assert!((omega_prime_block()[(0, 0)].re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((omega_prime_block()[(0, 1)].re + 0.5f64.sqrt()).abs() < 1e-15);
        assert!(omega_prime_block()[(0, 2)].norm() < 1e-15);
    }

    #[test]
    fn omega_is_omega_prime_with_an_output_rotation() {
        // U_Ω = R · U_Ω′ where R is a single two-mode element at 30° on
        // modes (0, 1) with φ = π.
        let r = omega_block() * omega_prime_block().adjoint();
        let expected =
            element_matrix(&TwoModeElement::new(FRAC_PI_6, PI, 0, 1).unwrap(), 3).unwrap();
        assert!((r - expected).norm() < 1e-14);
    }

    #[test]
    fn omega_coefficient_values() {
        let co = omega_coefficients(&omega_block()).unwrap();
        let s13 = 1.0 / 3.0f64.sqrt();
        assert_relative_eq!(co.alpha.re, s13, epsilon = 1e-15);
        assert_relative_eq!(co.big_a.re, 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(co.beta.0[0].re, -(2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert!(co.beta.0[1].norm() < 1e-15);
        // B = ã₀ / (3√2) with ã₀ = ω₀/2 + √3 ω₁/2.
        let k = 1.0 / (3.0 * 2.0f64.sqrt());
        assert_relative_eq!(co.big_b.0[0].re, k * 0.5, epsilon = 1e-15);
        assert_relative_eq!(co.big_b.0[1].re, k * 3.0f64.sqrt() * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn omega_coefficients_identity_block() {
        let co = omega_coefficients(&crate::linalg::identity(3)).unwrap();
        assert!(co.alpha.norm() < 1e-15);
        assert!(co.big_a.norm() < 1e-15);
        assert_eq!(co.beta.0[0], C_ONE);
        assert!(co.beta.0[1].norm() < 1e-15);
        assert!(co.big_b.0[0].norm() < 1e-15 && co.big_b.0[1].norm() < 1e-15);
        assert!((co.c_form.0[2] - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn omega_reconstruction_on_random_blocks() {
        // Expanding the images of ω₀† and (ω₁†)²/2 from the extracted
        // coefficients must reproduce the block columns.
        for seed in 0..100 {
            let b = crate::optimizer::haar_random_unitary(3, 4000 + seed);
            let co = omega_coefficients(&b).unwrap();
            assert!((co.beta.0[0] - b[(0, 0)]).norm() < 1e-12);
            assert!((co.beta.0[1] - b[(1, 0)]).norm() < 1e-12);
            assert!((co.alpha - b[(2, 0)]).norm() < 1e-12);
            let (q0, q1, q2) = (b[(0, 1)], b[(1, 1)], b[(2, 1)]);
            assert!((co.big_a - q2 * q2 * 0.5).norm() < 1e-12);
            assert!((co.big_b.0[0] - q2 * q0 * 0.5).norm() < 1e-12);
            assert!((co.c_form.0[1] - q0 * q1).norm() < 1e-12);
            // D = αC + 2Bβ as polynomial coefficients.
            let d_mid = co.alpha * co.c_form.0[1]
                + 2.0 * (co.big_b.0[0] * co.beta.0[1] + co.big_b.0[1] * co.beta.0[0]);
            assert!((co.d_form.0[1] - d_mid).norm() < 1e-12);
        }
    }

    #[test]
    fn ghz_part_matrices_orthonormal_columns() {
        let (ut, ub) = ghz_part_matrices();
        assert!(unitarity_deviation(&ut) < 1e-12);
        assert!(unitarity_deviation(&ub) < 1e-12);
    }

    #[test]
    fn ghz_block_unitary_matches_closed_form_columns() {
        let u = ghz_block_unitary();
        assert!(unitarity_deviation(&u) < 1e-12);
        let s6 = 1.0 / 6.0f64.sqrt();
        let s12 = 1.0 / 12.0f64.sqrt();
        let s8 = 1.0 / (2.0 * 2.0f64.sqrt());
        // Column 0: (−2/√6) a₀ + (a₆ + a₇)/√6.
        let expect0 = [(-2.0 * s6, 0usize), (s6, 6), (s6, 7)];
        for &(v, r) in &expect0 {
            assert_relative_eq!(u[(r, 0)].re, v, epsilon = 1e-14);
        }
        // Column 2 mixes target, herald and bypass amplitudes.
        let expect2: [(usize, f64); 7] = [
            (0, s12),
            (1, 0.5),
            (2, 0.5),
            (6, s12),
            (7, s12),
            (8, -s8),
            (9, s8),
        ];
        for &(r, v) in &expect2 {
            assert_relative_eq!(u[(r, 2)].re, v, epsilon = 1e-14, max_relative = 1e-12);
        }
        for r in [3, 4, 5] {
            assert!(u[(r, 2)].norm() < 1e-14);
        }
    }

    #[test]
    fn ghz_scheme_matches_block_unitary_up_to_column_phases() {
        let a = compose(&ghz_scheme());
        let b = ghz_block_unitary();
        assert!(unitarity_deviation(&a) < 1e-12);
        for col in 0..6 {
            // Each input column may differ by a global sign only.
            let mut ratio: Option<Complex64> = None;
            for row in 0..10 {
                let (x, y) = (a[(row, col)], b[(row, col)]);
                if y.norm() > 1e-9 {
                    let r = x / y;
                    if let Some(prev) = ratio {
                        assert!(
                            (r - prev).norm() < 1e-10,
                            "column {col} not proportional: {r} vs {prev}"
                        );
                    } else {
                        assert!((r.norm() - 1.0).abs() < 1e-10);
                        ratio = Some(r);
                    }
                } else {
                    assert!(x.norm() < 1e-9, "column {col} row {row}: {x} vs 0");
                }
            }
        }
    }

    #[test]
    fn ghz_scheme_has_twelve_nontrivial_elements() {
        assert_eq!(count_nontrivial(&ghz_scheme(), TRIVIAL_ELEMENT_TOL), 12);
    }

    #[test]
    fn ghz_targets_family() {
        let family = ghz_targets();
        assert_eq!(family.len(), 20);
        for t in &family {
            assert_eq!(t.total_photons(), 3);
            let norm2: f64 = t.terms().iter().map(|x| x.amp.norm_sqr()).sum();
            assert!((norm2 - 1.0).abs() < 1e-12);
        }
        let (plus, _) = ghz_canonical_pair();
        assert!(family.iter().any(|t| t == &plus));
    }

    #[test]
    fn bell_targets_orthonormal() {
        let targets = bell_targets();
        assert_eq!(targets.len(), 6);
        let basis = crate::fock::SectorBasis::new(4, 2);
        for i in 0..6 {
            for j in 0..6 {
                let vi = state_vector(&targets[i].state, &basis);
                let f = crate::fock::state_fidelity(&vi, &targets[j].state, &basis).unwrap();
                if i == j {
                    assert!((f - 1.0).abs() < 1e-12);
                } else {
                    assert!(f < 1e-12, "{:?} vs {:?}: {f}", targets[i].label, targets[j].label);
                }
            }
        }
        // χ⁻ = (|1,1,0,0⟩ − |0,0,1,1⟩)/√2
        let chi_minus = bell_state(BellLabel::ChiMinus);
        let mut has = 0;
        for term in chi_minus.terms() {
            if term.state == FockState::new(vec![1, 1, 0, 0]) {
                assert_relative_eq!(term.amp.re, 0.5f64.sqrt(), epsilon = 1e-12);
                has += 1;
            }
            if term.state == FockState::new(vec![0, 0, 1, 1]) {
                assert_relative_eq!(term.amp.re, -(0.5f64.sqrt()), epsilon = 1e-12);
                has += 1;
            }
        }
        assert_eq!(has, 2);
    }

    fn state_vector(t: &TargetState, basis: &crate::fock::SectorBasis) -> Vec<Complex64> {
        let mut v = vec![C_ZERO; basis.len()];
        for term in t.terms() {
            v[basis.index_of(&term.state).unwrap()] = term.amp;
        }
        v
    }

    #[test]
    fn rho_distance_of_scheme_variants_is_positive() {
        let a = compose(&ghz_scheme());
        let b = ghz_block_unitary();
        // Equal up to column signs, hence a strictly positive trace distance.
        assert!(rho_distance(&a, &b).unwrap() > 1e-3);
    }
}
