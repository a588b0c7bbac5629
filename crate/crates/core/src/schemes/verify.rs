//! Declarative scheme verification: measured vs expected claims.

use serde::{Deserialize, Serialize};

use crate::circuit::{compose, count_nontrivial, CircuitSpec, TRIVIAL_ELEMENT_TOL};
use crate::error::{Error, Result};
use crate::fock::{
    herald_analysis, state_fidelity, FockState, ProblemSpec, SectorBasis, TargetState,
};

use super::{
    bell_problem, bell_scheme, bell_state, ghz_canonical_pair, ghz_problem, ghz_scheme,
    ghz_scheme_block_form, omega_block, omega_prime_block, BellLabel, Sign,
};

/// One verifiable statement about a scheme.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Claim {
    PatternProbability {
        pattern: FockState,
        expected: f64,
        tolerance: f64,
    },
    HeraldedFidelity {
        pattern: FockState,
        target: TargetState,
        expected: f64,
        tolerance: f64,
    },
    ElementCount {
        expected: f64,
        #[serde(default)]
        tolerance: f64,
    },
}

/// A named circuit bundled with the heralding problem it solves.
#[derive(Clone, Debug)]
pub struct SchemeDefinition {
    pub name: String,
    pub circuit: CircuitSpec,
    pub problem: ProblemSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClaimResult {
    pub description: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scheme: String,
    pub results: Vec<ClaimResult>,
    pub all_pass: bool,
    /// Sum of the measured probabilities over the patterns named in
    /// probability claims.
    pub total_success_probability: f64,
}

pub fn builtin_scheme_names() -> &'static [&'static str] {
    &["ghz54", "ghz54-blocks", "bell-omega", "bell-omega-prime"]
}

pub fn builtin_scheme(name: &str) -> Option<SchemeDefinition> {
    let def = match name {
        "ghz54" => SchemeDefinition {
            name: name.into(),
            circuit: ghz_scheme(),
            problem: ghz_problem(),
        },
        "ghz54-blocks" => SchemeDefinition {
            name: name.into(),
            circuit: ghz_scheme_block_form(),
            problem: ghz_problem(),
        },
        "bell-omega" => SchemeDefinition {
            name: name.into(),
            circuit: bell_scheme(Sign::Plus, &omega_block()).ok()?,
            problem: bell_problem(),
        },
        "bell-omega-prime" => SchemeDefinition {
            name: name.into(),
            circuit: bell_scheme(Sign::Plus, &omega_prime_block()).ok()?,
            problem: bell_problem(),
        },
        _ => return None,
    };
    Some(def)
}

/// The reference quantitative claims of each built-in scheme.
pub fn default_claims(name: &str) -> Option<Vec<Claim>> {
    let p108 = 1.0 / 108.0;
    let p227 = 2.0 / 27.0;
    let tol = 1e-9;
    let claims = match name {
        "ghz54" | "ghz54-blocks" => {
            let (plus, minus) = ghz_canonical_pair();
            let mut claims = vec![
                Claim::PatternProbability {
                    pattern: FockState::new(vec![1, 1, 1, 0]),
                    expected: p108,
                    tolerance: tol,
                },
                Claim::PatternProbability {
                    pattern: FockState::new(vec![1, 1, 0, 1]),
                    expected: p108,
                    tolerance: tol,
                },
                Claim::HeraldedFidelity {
                    pattern: FockState::new(vec![1, 1, 1, 0]),
                    target: plus,
                    expected: 1.0,
                    tolerance: tol,
                },
                Claim::HeraldedFidelity {
                    pattern: FockState::new(vec![1, 1, 0, 1]),
                    target: minus,
                    expected: 1.0,
                    tolerance: tol,
                },
            ];
            if name == "ghz54" {
                claims.push(Claim::ElementCount {
                    expected: 12.0,
                    tolerance: 0.0,
                });
            }
            claims
        }
        "bell-omega" => vec![
            Claim::PatternProbability {
                pattern: FockState::new(vec![1, 1]),
                expected: p227,
                tolerance: tol,
            },
            Claim::HeraldedFidelity {
                pattern: FockState::new(vec![1, 1]),
                target: bell_state(BellLabel::PsiPlus),
                expected: 1.0,
                tolerance: tol,
            },
        ],
        "bell-omega-prime" => vec![
            Claim::PatternProbability {
                pattern: FockState::new(vec![1, 1]),
                expected: p227,
                tolerance: tol,
            },
            Claim::HeraldedFidelity {
                pattern: FockState::new(vec![1, 1]),
                target: bell_state(BellLabel::PsiPlus),
                expected: 0.25,
                tolerance: tol,
            },
            Claim::HeraldedFidelity {
                pattern: FockState::new(vec![1, 1]),
                target: bell_state(BellLabel::PhiMinus),
                expected: 0.75,
                tolerance: tol,
            },
        ],
        _ => return None,
    };
    Some(claims)
}

/// Evaluates every claim against a fresh herald analysis of the scheme.
/// Claims are validated before any simulation runs.
pub fn verify_scheme(def: &SchemeDefinition, claims: &[Claim]) -> Result<VerificationReport> {
    let problem = &def.problem;
    // Validation pass.
    for claim in claims {
        match claim {
            Claim::PatternProbability { pattern, .. } => {
                find_pattern(problem, pattern)?;
            }
            Claim::HeraldedFidelity { pattern, target, .. } => {
                find_pattern(problem, pattern)?;
                if target.n_modes() != problem.n_target_modes
                    || target.total_photons() != problem.heralded_photons()
                {
                    return Err(Error::SectorMismatch(format!(
                        "claim target over {} modes / {} photons against a {}-mode / {}-photon heralded sector",
                        target.n_modes(),
                        target.total_photons(),
                        problem.n_target_modes,
                        problem.heralded_photons()
                    )));
                }
            }
            Claim::ElementCount { expected, .. } => {
                if *expected < 0.0 {
                    return Err(Error::InvalidArgument("negative element count".into()));
                }
            }
        }
    }

    let report = herald_analysis(&compose(&def.circuit), problem)?;
    let basis = SectorBasis::new(problem.n_target_modes, problem.heralded_photons());

    let mut results = Vec::with_capacity(claims.len());
    let mut claimed_patterns: Vec<usize> = Vec::new();
    for claim in claims {
        let (description, measured, expected, tolerance) = match claim {
            Claim::PatternProbability {
                pattern,
                expected,
                tolerance,
            } => {
                let a = find_pattern(problem, pattern)?;
                if !claimed_patterns.contains(&a) {
                    claimed_patterns.push(a);
                }
                (
                    format!("P{pattern}"),
                    report.patterns[a].probability,
                    *expected,
                    *tolerance,
                )
            }
            Claim::HeraldedFidelity {
                pattern,
                target,
                expected,
                tolerance,
            } => {
                let a = find_pattern(problem, pattern)?;
                let amps = report.patterns[a].heralded_amplitudes();
                let f = state_fidelity(&amps, target, &basis)?;
                (format!("fidelity{pattern}"), f, *expected, *tolerance)
            }
            Claim::ElementCount {
                expected,
                tolerance,
            } => (
                "nontrivial elements".to_string(),
                count_nontrivial(&def.circuit, TRIVIAL_ELEMENT_TOL) as f64,
                *expected,
                *tolerance,
            ),
        };
        results.push(ClaimResult {
            description,
            pass: (measured - expected).abs() <= tolerance,
            measured,
            expected,
            tolerance,
        });
    }
    Ok(VerificationReport {
        scheme: def.name.clone(),
        all_pass: results.iter().all(|r| r.pass),
        total_success_probability: claimed_patterns
            .iter()
            .map(|&a| report.patterns[a].probability)
            .sum(),
        results,
    })
}

fn find_pattern(problem: &ProblemSpec, pattern: &FockState) -> Result<usize> {
    problem
        .ancilla_patterns
        .iter()
        .position(|p| p == pattern)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("claim references unknown pattern {pattern}"))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_claims_pass_trivially() {
        let def = builtin_scheme("ghz54").unwrap();
        let report = verify_scheme(&def, &[]).unwrap();
        assert!(report.all_pass);
        assert!(report.results.is_empty());
        assert_eq!(report.total_success_probability, 0.0);
    }

    #[test]
    fn deliberate_mismatch_fails() {
        let def = builtin_scheme("ghz54").unwrap();
        let claims = vec![Claim::PatternProbability {
            pattern: FockState::new(vec![1, 1, 1, 0]),
            expected: 0.5,
            tolerance: 1e-9,
        }];
        let report = verify_scheme(&def, &claims).unwrap();
        assert!(!report.all_pass);
        assert!((report.results[0].measured - 1.0 / 108.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_claim_rejected_before_simulation() {
        let def = builtin_scheme("ghz54").unwrap();
        let claims = vec![Claim::PatternProbability {
            pattern: FockState::new(vec![9, 9]),
            expected: 0.1,
            tolerance: 1e-9,
        }];
        assert!(verify_scheme(&def, &claims).is_err());
    }

    #[test]
    fn unknown_scheme_is_none() {
        assert!(builtin_scheme("nosuch").is_none());
        assert!(default_claims("nosuch").is_none());
    }
}
