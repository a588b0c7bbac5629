//! Physical circuit description: two-mode elements, phase layers,
//! composition to a unitary, the rectangular mesh decomposition, the
//! simplicity cost and the Cayley chart used by the optimizer.
//!
//! A circuit is `U = D · T₁ · … · T_Q` where `D` is a diagonal layer of pure
//! output phases and each `T` is a two-mode rotation
//!
//! ```text
//! T(θ, φ) = [ e^{iφ} cos θ   −sin θ ]
//!           [ e^{iφ} sin θ    cos θ ]
//! ```
//!
//! embedded at an ordered mode pair `(n, m)`. The element list is stored in
//! exactly that product order, so the *last* element of the list acts on the
//! input state first.

mod clements;

pub use clements::clements_decompose;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, hermitian_deviation, identity, CMat, C_ONE};

/// Two-mode rotation with angles in radians; `theta ∈ [0, π/2]`,
/// `phi ∈ [−π, π]` after canonicalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoModeElement {
    pub theta: f64,
    pub phi: f64,
    pub modes: (usize, usize),
}

impl TwoModeElement {
    pub fn new(theta: f64, phi: f64, n: usize, m: usize) -> Result<Self> {
        if n == m {
            return Err(Error::InvalidArgument(format!(
                "two-mode element needs distinct modes, got ({n}, {m})"
            )));
        }
        Ok(TwoModeElement {
            theta,
            phi,
            modes: (n, m),
        })
    }

    /// Distance of `theta` from the trivial set {0, π/2}.
    pub fn nontriviality(&self) -> f64 {
        self.theta
            .abs()
            .min((self.theta - std::f64::consts::FRAC_PI_2).abs())
    }

    pub fn matrix(&self, dim: usize) -> Result<CMat> {
        element_matrix(self, dim)
    }
}

/// Identity except the 2×2 block `[[e^{iφ}cosθ, −sinθ], [e^{iφ}sinθ, cosθ]]`
/// at the element's mode pair.
pub fn element_matrix(e: &TwoModeElement, dim: usize) -> Result<CMat> {
    let (n, m) = e.modes;
    if n >= dim || m >= dim {
        return Err(Error::DimensionMismatch(format!(
            "element on modes ({n}, {m}) does not fit dimension {dim}"
        )));
    }
    if n == m {
        return Err(Error::InvalidArgument("element modes coincide".into()));
    }
    let mut u = identity(dim);
    let eiphi = Complex64::from_polar(1.0, e.phi);
    let (c, s) = (e.theta.cos(), e.theta.sin());
    u[(n, n)] = eiphi * c;
    u[(n, m)] = Complex64::new(-s, 0.0);
    u[(m, n)] = eiphi * s;
    u[(m, m)] = Complex64::new(c, 0.0);
    Ok(u)
}

/// Diagonal layer of pure phases.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseLayer {
    phases: Vec<Complex64>,
}

impl PhaseLayer {
    pub fn identity(dim: usize) -> Self {
        PhaseLayer {
            phases: vec![C_ONE; dim],
        }
    }

    /// Entries must have unit modulus within 1e-12; they are renormalized to
    /// exactly unit modulus on construction.
    pub fn new(phases: Vec<Complex64>) -> Result<Self> {
        let mut out = Vec::with_capacity(phases.len());
        for z in phases {
            let r = z.norm();
            if (r - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "phase entry {z} has modulus {r}, expected 1"
                )));
            }
            out.push(z / r);
        }
        Ok(PhaseLayer { phases: out })
    }

    pub fn from_angles(angles: &[f64]) -> Self {
        PhaseLayer {
            phases: angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn angles(&self) -> Vec<f64> {
        self.phases.iter().map(|z| z.arg()).collect()
    }

    pub fn matrix(&self) -> CMat {
        let mut m = identity(self.dim());
        for (i, z) in self.phases.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }
}

impl Serialize for PhaseLayer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.phases.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PhaseLayer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        PhaseLayer::new(
            pairs
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Ordered circuit description. `elements[0]` is the factor right after the
/// phase layer, i.e. the element applied *last* to the input state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub dim: usize,
    pub elements: Vec<TwoModeElement>,
    #[serde(rename = "phases")]
    pub output_phases: PhaseLayer,
}

impl CircuitSpec {
    pub fn new(dim: usize, elements: Vec<TwoModeElement>, output_phases: PhaseLayer) -> Result<Self> {
        if output_phases.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "phase layer covers {} modes, circuit has {}",
                output_phases.dim(),
                dim
            )));
        }
        for e in &elements {
            if e.modes.0 >= dim || e.modes.1 >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "element on modes {:?} outside dimension {dim}",
                    e.modes
                )));
            }
        }
        Ok(CircuitSpec {
            dim,
            elements,
            output_phases,
        })
    }

    /// Builds from elements listed in the order they act on the input
    /// (first physical element first).
    pub fn from_physical_order(
        dim: usize,
        mut elements: Vec<TwoModeElement>,
        output_phases: PhaseLayer,
    ) -> Result<Self> {
        elements.reverse();
        CircuitSpec::new(dim, elements, output_phases)
    }

    pub fn identity(dim: usize) -> Self {
        CircuitSpec {
            dim,
            elements: Vec::new(),
            output_phases: PhaseLayer::identity(dim),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: CircuitSpec =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("circuit JSON: {e}")))?;
        CircuitSpec::new(spec.dim, spec.elements, spec.output_phases)
    }
}

/// Multiplies the circuit out to its mode unitary `D · T₁ · … · T_Q`.
pub fn compose(spec: &CircuitSpec) -> CMat {
    let mut u = spec.output_phases.matrix();
    for e in &spec.elements {
        let t = element_matrix(e, spec.dim).expect("validated on construction");
        u *= t;
    }
    u
}

/// Number of elements whose `theta` is farther than `tol` from {0, π/2}.
pub fn count_nontrivial(spec: &CircuitSpec, tol: f64) -> usize {
    spec.elements.iter().filter(|e| e.nontriviality() > tol).count()
}

/// Default tolerance for calling an element trivial: far above decomposition
/// round-off, far below any physical angle of the reference schemes.
pub const TRIVIAL_ELEMENT_TOL: f64 = 1e-6;

/// Weights of the phase terms in the simplicity cost.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CostParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            epsilon: 0.01,
            delta: 0.01,
        }
    }
}

/// `Σᵢ {(1 − cos 4θᵢ) + ε (1 − cos 2φᵢ)} + δ Σᵢ |Dᵢ − 1|²`; zero exactly on
/// circuits made of trivial rotations and an identity phase layer.
pub fn simplicity_cost(spec: &CircuitSpec, params: &CostParams) -> f64 {
    let mut s = 0.0;
    for e in &spec.elements {
        s += 1.0 - (4.0 * e.theta).cos();
        s += params.epsilon * (1.0 - (2.0 * e.phi).cos());
    }
    for z in spec.output_phases.phases() {
        s += params.delta * (z - C_ONE).norm_sqr();
    }
    s
}

/// Normalized trace distance `1 − Re Tr[U V†] / d` between two unitaries.
pub fn rho_distance(u: &CMat, v: &CMat) -> Result<f64> {
    ensure_square(u, "rho distance")?;
    if u.nrows() != v.nrows() || u.ncols() != v.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "rho distance between {}x{} and {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let tr: Complex64 = (u * v.adjoint()).diagonal().iter().sum();
    Ok(1.0 - tr.re / u.nrows() as f64)
}

/// Local chart on the unitary group: `U(H) = U₀ · (iI − H)(iI + H)⁻¹` with a
/// Hermitian coordinate `H`. At `H = 0` the chart point is exactly `U₀`.
#[derive(Clone, Debug)]
pub struct CayleyChart {
    pub base: CMat,
    pub coordinate: CMat,
}

impl CayleyChart {
    pub fn new(base: CMat, coordinate: CMat) -> Result<Self> {
        ensure_square(&base, "Cayley chart base")?;
        if coordinate.nrows() != base.nrows() || coordinate.ncols() != base.ncols() {
            return Err(Error::DimensionMismatch(
                "chart coordinate and base disagree in size".into(),
            ));
        }
        let dev = hermitian_deviation(&coordinate);
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(CayleyChart { base, coordinate })
    }

    pub fn at_origin(base: CMat) -> Self {
        let d = base.nrows();
        CayleyChart {
            base,
            coordinate: CMat::zeros(d, d),
        }
    }
}

/// `(iI − H)(iI + H)⁻¹`. For Hermitian `H` the factor `iI + H` is always
/// invertible (eigenvalues of `H` are real), and the result is unitary.
pub fn cayley_factor(h: &CMat) -> Result<CMat> {
    ensure_square(h, "Cayley factor")?;
    let d = h.nrows();
    let i_eye = identity(d).map(|z| z * Complex64::new(0.0, 1.0));
    let plus = &i_eye + h;
    let minus = &i_eye - h;
    let lu = plus.lu();
    lu.solve(&minus)
        .ok_or_else(|| Error::NonFinite("Cayley factor: iI + H singular".into()))
}

/// Evaluates the chart map at the chart's coordinate.
pub fn chart_point(chart: &CayleyChart) -> Result<CMat> {
    if crate::linalg::max_abs(&chart.coordinate) == 0.0 {
        return Ok(chart.base.clone());
    }
    Ok(&chart.base * cayley_factor(&chart.coordinate)?)
}

/// Number of real parameters of a `dim`-dimensional Hermitian coordinate.
pub fn cayley_param_count(dim: usize) -> usize {
    dim * dim
}

/// Packs real parameters into a Hermitian matrix. Layout: the `dim` diagonal
/// entries first, then for every pair `j < k` (row-major) the real and
/// imaginary parts of the upper off-diagonal entry.
pub fn hermitian_from_params(dim: usize, params: &[f64]) -> Result<CMat> {
    if params.len() != cayley_param_count(dim) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} Hermitian parameters for dimension {dim}, got {}",
            cayley_param_count(dim),
            params.len()
        )));
    }
    let mut h = CMat::zeros(dim, dim);
    for j in 0..dim {
        h[(j, j)] = Complex64::new(params[j], 0.0);
    }
    let mut idx = dim;
    for j in 0..dim {
        for k in j + 1..dim {
            let z = Complex64::new(params[idx], params[idx + 1]);
            idx += 2;
            h[(j, k)] = z;
            h[(k, j)] = z.conj();
        }
    }
    Ok(h)
}

pub fn params_from_hermitian(h: &CMat) -> Vec<f64> {
    let dim = h.nrows();
    let mut params = Vec::with_capacity(cayley_param_count(dim));
    for j in 0..dim {
        params.push(h[(j, j)].re);
    }
    for j in 0..dim {
        for k in j + 1..dim {
            params.push(h[(j, k)].re);
            params.push(h[(j, k)].im);
        }
    }
    params
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_deviation;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn element_matrix_limits() {
        let id = element_matrix(&TwoModeElement::new(0.0, 0.0, 0, 1).unwrap(), 2).unwrap();
        assert!(unitarity_deviation(&id) < 1e-15);
        assert!((id - identity(2)).norm() < 1e-15);

        let swapish = element_matrix(&TwoModeElement::new(FRAC_PI_2, 0.0, 0, 1).unwrap(), 2).unwrap();
        assert!((swapish[(0, 1)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((swapish[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(swapish[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn element_matrix_magic_angle() {
        // acos(1/√3) ≈ 54.7356°
        let th = (1.0f64 / 3.0f64.sqrt()).acos();
        let m = element_matrix(&TwoModeElement::new(th, 0.0, 0, 1).unwrap(), 2).unwrap();
        assert_relative_eq!(m[(0, 0)].re, 1.0 / 3.0f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m[(0, 1)].re, -(2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m[(1, 0)].re, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m[(1, 1)].re, 1.0 / 3.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn element_matrix_mode_bounds() {
        assert!(element_matrix(&TwoModeElement::new(0.1, 0.0, 0, 2).unwrap(), 2).is_err());
    }

    #[test]
    fn compose_empty_and_single_splitter() {
        let empty = CircuitSpec::identity(3);
        assert!((compose(&empty) - identity(3)).norm() < 1e-15);

        let spec = CircuitSpec::new(
            2,
            vec![TwoModeElement::new(FRAC_PI_4, 0.0, 0, 1).unwrap()],
            PhaseLayer::identity(2),
        )
        .unwrap();
        let u = compose(&spec);
        let r = 0.5f64.sqrt();
        assert!((u[(0, 0)] - c(r, 0.0)).norm() < 1e-15);
        assert!((u[(0, 1)] - c(-r, 0.0)).norm() < 1e-15);
        assert!((u[(1, 0)] - c(r, 0.0)).norm() < 1e-15);
        assert!((u[(1, 1)] - c(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn simplicity_cost_examples() {
        let p = CostParams::default();
        let trivial = CircuitSpec::new(
            3,
            vec![
                TwoModeElement::new(0.0, 0.0, 0, 1).unwrap(),
                TwoModeElement::new(FRAC_PI_2, PI, 1, 2).unwrap(),
            ],
            PhaseLayer::identity(3),
        )
        .unwrap();
        assert!(simplicity_cost(&trivial, &p).abs() < 1e-12);

        let quarter = CircuitSpec::new(
            2,
            vec![TwoModeElement::new(FRAC_PI_4, 0.0, 0, 1).unwrap()],
            PhaseLayer::identity(2),
        )
        .unwrap();
        assert_relative_eq!(simplicity_cost(&quarter, &p), 2.0, epsilon = 1e-12);

        let phase_only = CircuitSpec::new(
            2,
            vec![TwoModeElement::new(0.0, FRAC_PI_2, 0, 1).unwrap()],
            PhaseLayer::identity(2),
        )
        .unwrap();
        assert_relative_eq!(simplicity_cost(&phase_only, &p), 0.02, epsilon = 1e-12);
    }

    #[test]
    fn rho_distance_examples() {
        let u = identity(2);
        assert!(rho_distance(&u, &u).unwrap().abs() < 1e-15);
        let minus = u.map(|z| -z);
        assert_relative_eq!(rho_distance(&u, &minus).unwrap(), 2.0, epsilon = 1e-15);
        let mut d = identity(2);
        d[(1, 1)] = c(-1.0, 0.0);
        assert_relative_eq!(rho_distance(&identity(2), &d).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn chart_point_origin_and_scalar() {
        let base = identity(3).map(|z| z * c(0.6, 0.8));
        let chart = CayleyChart::at_origin(base.clone());
        assert_eq!(chart_point(&chart).unwrap(), base);

        for &h in &[-5.0, -0.3, 0.0, 1.7, 100.0] {
            let hm = CMat::from_row_slice(1, 1, &[c(h, 0.0)]);
            let u = chart_point(&CayleyChart::new(identity(1), hm).unwrap()).unwrap();
            assert_relative_eq!(u[(0, 0)].norm(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn chart_point_unitary_for_random_hermitian() {
        let params: Vec<f64> = (0..16).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.7).collect();
        let h = hermitian_from_params(4, &params).unwrap();
        let u = chart_point(&CayleyChart::new(identity(4), h).unwrap()).unwrap();
        assert!(unitarity_deviation(&u) < 1e-12);
    }

    #[test]
    fn hermitian_param_round_trip() {
        let params: Vec<f64> = (0..25).map(|i| (i as f64) * 0.31 - 3.0).collect();
        let h = hermitian_from_params(5, &params).unwrap();
        assert!(hermitian_deviation(&h) < 1e-15);
        assert_eq!(params_from_hermitian(&h), params);
    }

    #[test]
    fn circuit_json_round_trip() {
        let spec = CircuitSpec::new(
            3,
            vec![
                TwoModeElement::new(0.3, -0.4, 0, 2).unwrap(),
                TwoModeElement::new(1.1, 2.0, 1, 2).unwrap(),
            ],
            PhaseLayer::from_angles(&[0.0, 1.0, -2.0]),
        )
        .unwrap();
        let json = spec.to_json();
        let back = CircuitSpec::from_json(&json).unwrap();
        assert!((compose(&spec) - compose(&back)).norm() < 1e-12);
        // Spot-check the wire names.
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v.get("dim").is_some());
        assert!(v["elements"][0].get("theta").is_some());
        assert!(v["elements"][0]["modes"].is_array());
        assert!(v.get("phases").is_some());
    }
}
