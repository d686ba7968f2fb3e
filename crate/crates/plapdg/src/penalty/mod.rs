//! Discontinuity-penalization and trace-weight construction.
//!
//! Every interface F carries a penalty coefficient sigma_F and weights
//! (w_F^+, w_F^-) summing to one. Both are derived from per-side quantities
//! zeta_F^+/- via
//!
//!   w_F^+/- = zeta_F^+/- / (zeta_F^+ + zeta_F^-),
//!   sigma_F = 1 / (zeta_F^+ + zeta_F^-),
//!
//! so the penalty is bounded by the smaller of the two per-side trace
//! constants rather than the larger: elements with high degree or small area
//! shift weight to their neighbour instead of inflating sigma.
//!
//! In `Theoretical` mode zeta_F^+/- = eps / (m_K mu_eps G_{K,F}) with G the
//! quasi-norm trace-inverse constant of the element/face pair,
//! mu_eps = max(1, 1/(4 eps)), and eps selected from the monotonicity,
//! boundedness and coercivity constants. This is the certified choice: it
//! makes the nonlinear form coercive with factor at least 1/2. In
//! `Practical` mode the p-dependent constants are dropped and
//! zeta_F^+/- = 1 / (m_K * scale * (2 (r - 1)^2 + 1) |F| / |K|), giving the
//! familiar degree-squared penalty scale that is friendlier to the Newton
//! solver's conditioning.

mod exponent;

pub use exponent::RationalExponent;

use crate::fem::DgSpace;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

/// Trace-inverse constant prefactor for triangles (d = 2).
pub const C_INV_2D: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyMode {
    Theoretical,
    Practical,
}

/// Penalty data for one interface.
#[derive(Clone, Copy, Debug)]
pub struct InterfacePenalty {
    pub sigma: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub zeta_plus: f64,
    /// `None` on boundary interfaces, where the convention is w = (1, 0)
    /// and sigma = 1 / zeta_plus.
    pub zeta_minus: Option<f64>,
}

/// Interface-wise penalty coefficients and weights for a space.
#[derive(Clone, Debug)]
pub struct PenaltyField {
    pub interfaces: Vec<InterfacePenalty>,
    pub mode: PenaltyMode,
    /// The eps used by the theoretical construction; `None` in practical mode.
    pub epsilon: Option<f64>,
    pub theta: f64,
}

impl PenaltyField {
    pub fn sigma(&self, interface: usize) -> f64 {
        self.interfaces[interface].sigma
    }

    pub fn weights(&self, interface: usize) -> (f64, f64) {
        let f = &self.interfaces[interface];
        (f.w_plus, f.w_minus)
    }
}

/// The quasi-norm trace-inverse constant G_{K,F} for one element/face pair,
///
///   G = 2^(p/2 + 1/k_p) C_inv p^2 k_p^2 (2 (r - 1)^2 + 1) |F| / (d |K|),
///
/// with d = 2 and F_K = F on conforming meshes.
pub fn inverse_constant_g(
    p: &RationalExponent,
    r: usize,
    face_length: f64,
    elem_area: f64,
) -> f64 {
    let (kp, _) = p
        .quasi_exponents()
        .expect("the theoretical constant requires p > 2");
    let pv = p.value();
    let kpf = kp as f64;
    let rm1 = r as f64 - 1.0;
    2.0_f64.powf(0.5 * pv + 1.0 / kpf)
        * C_INV_2D
        * pv
        * pv
        * kpf
        * kpf
        * (2.0 * rm1 * rm1 + 1.0)
        * face_length
        / (2.0 * elem_area)
}

/// Selects eps as the minimum of the four stability thresholds
///
///   2^(1-p) C2 / (2^(p-2) C1 + Ct_p + (2^(p-1) + 1)|theta|),
///   2^(4-p) / |theta|,   (p'/4) (p/4)^(1/(p-1)),   1/4,
///
/// with Ct_p = (2^(p-1) + 2^(2p-4) + 2^(2p-3)) C1 + 1; the second threshold
/// is dropped for theta = 0.
pub fn select_epsilon(p: &RationalExponent, theta: f64, c1: f64, c2: f64) -> f64 {
    assert!(c1 > 0.0 && c2 > 0.0, "constants must be positive");
    let pv = p.value();
    let ct = (2.0_f64.powf(pv - 1.0) + 2.0_f64.powf(2.0 * pv - 4.0) + 2.0_f64.powf(2.0 * pv - 3.0))
        * c1
        + 1.0;
    let term1 = 2.0_f64.powf(1.0 - pv) * c2
        / (2.0_f64.powf(pv - 2.0) * c1 + ct + (2.0_f64.powf(pv - 1.0) + 1.0) * theta.abs());
    let term3 = (p.conjugate_value() / 4.0) * (pv / 4.0).powf(1.0 / (pv - 1.0));
    let mut eps = term1.min(term3).min(0.25);
    if theta != 0.0 {
        eps = eps.min(2.0_f64.powf(4.0 - pv) / theta.abs());
    }
    eps
}

pub fn mu_epsilon(eps: f64) -> f64 {
    1.0_f64.max(0.25 / eps)
}

/// Empirical (C1, C2) estimates for eps selection, cached per exponent.
///
/// The verification module owns the estimator; the fixed sample count and
/// seed here make the theoretical penalty deterministic.
fn cached_monotonicity_constants(p: &RationalExponent) -> (f64, f64) {
    static CACHE: Lazy<Mutex<HashMap<(i64, i64), (f64, f64)>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    let key = (*p.ratio().numer(), *p.ratio().denom());
    let mut cache = CACHE.lock().unwrap();
    *cache.entry(key).or_insert_with(|| {
        crate::verify::estimate_monotonicity_constants(p, 200_000, 0x1a2c_470b)
    })
}

/// Builds the penalty field for `space`.
///
/// `user_scale` is only read in practical mode. For p = 2 the p-dependent
/// constants do not exist and the practical construction is used regardless
/// of `mode`.
pub fn build_penalty(
    space: &DgSpace,
    p: &RationalExponent,
    theta: f64,
    mode: PenaltyMode,
    user_scale: f64,
) -> PenaltyField {
    let mesh = &space.mesh;
    let epsilon = if mode == PenaltyMode::Theoretical && !p.is_linear() {
        let (c1, c2) = cached_monotonicity_constants(p);
        Some(select_epsilon(p, theta, c1, c2))
    } else {
        None
    };

    let zeta_of = |k: usize, face_length: f64| -> f64 {
        let m_k = mesh.interfaces_of(k) as f64;
        match epsilon {
            Some(eps) => {
                let g = inverse_constant_g(p, space.degrees[k], face_length, mesh.area(k));
                eps / (m_k * mu_epsilon(eps) * g)
            }
            None => {
                let rm1 = space.degrees[k] as f64 - 1.0;
                let g = user_scale * (2.0 * rm1 * rm1 + 1.0) * face_length / mesh.area(k);
                1.0 / (m_k * g)
            }
        }
    };

    let interfaces = mesh
        .interfaces
        .iter()
        .map(|face| {
            let zeta_plus = zeta_of(face.plus_element, face.length);
            if face.is_boundary() {
                InterfacePenalty {
                    sigma: 1.0 / zeta_plus,
                    w_plus: 1.0,
                    w_minus: 0.0,
                    zeta_plus,
                    zeta_minus: None,
                }
            } else {
                let zeta_minus = zeta_of(face.minus_element, face.length);
                let total = zeta_plus + zeta_minus;
                InterfacePenalty {
                    sigma: 1.0 / total,
                    w_plus: zeta_plus / total,
                    w_minus: zeta_minus / total,
                    zeta_plus,
                    zeta_minus: Some(zeta_minus),
                }
            }
        })
        .collect();

    PenaltyField {
        interfaces,
        mode,
        epsilon,
        theta,
    }
}
