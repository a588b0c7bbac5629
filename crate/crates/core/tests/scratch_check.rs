use heraldic_core::circuit::{compose, count_nontrivial, TRIVIAL_ELEMENT_TOL};
use heraldic_core::fock::herald_analysis;
use heraldic_core::schemes::*;

#[test]
fn scratch_ghz_and_bell_numbers() {
    let problem = ghz_problem();
    let report = herald_analysis(&compose(&ghz_scheme()), &problem).unwrap();
    for (i, p) in report.patterns.iter().enumerate() {
        println!("pattern {} {:?}: P = {:.12}  (1/108 = {:.12})", i, p.pattern, p.probability, 1.0/108.0);
    }
    for a in 0..4 {
        let col: Vec<f64> = (0..problem.targets.len()).map(|t| report.overlaps[t][a]).collect();
        let max = col.iter().cloned().fold(0.0f64, f64::max);
        println!("pattern {} max overlap = {:.12}; nonzero overlaps: {:?}", a, max,
            col.iter().enumerate().filter(|(_,&v)| v > 1e-9).map(|(t,v)| (t, *v)).collect::<Vec<_>>());
    }
    println!("nontrivial = {}", count_nontrivial(&ghz_scheme(), TRIVIAL_ELEMENT_TOL));

    let bp = bell_problem();
    for s in [Sign::Plus, Sign::Minus] {
        let spec = bell_scheme(s, &omega_block()).unwrap();
        let rep = herald_analysis(&compose(&spec), &bp).unwrap();
        println!("bell omega s={:?}: P(1,1) = {:.12} (2/27 = {:.12}), M[psi+] = {:.9}, M[psi-] = {:.9}",
            s, rep.patterns[0].probability, 2.0/27.0, rep.overlaps[0][0], rep.overlaps[1][0]);
    }
    for s in [Sign::Plus, Sign::Minus] {
        let spec = bell_scheme(s, &omega_prime_block()).unwrap();
        let rep = herald_analysis(&compose(&spec), &bp).unwrap();
        println!("bell omega' s={:?}: P(1,1) = {:.12}, M[psi+] = {:.9}, M[psi-] = {:.9}",
            s, rep.patterns[0].probability, rep.overlaps[0][0], rep.overlaps[1][0]);
    }
}
