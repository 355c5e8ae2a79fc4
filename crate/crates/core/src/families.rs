//! Closed-form spectra for homogeneous polynomials and for the free
//! multiplicative walk `f = (1 + t c_1)(1 + t c_2)...(1 + t c_k)`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::ncpoly::{NCPolynomial, VariableKind, Word};
use crate::verdict::{Diagnostics, MembershipVerdict, Verdict};

/// Points with `||lambda| - 1|` below this use the unit-circle limits.
pub const UNIT_CIRCLE_TOL: f64 = 1e-9;
/// Relative slack at the boundary of a closed region.
pub const CLOSED_SLACK: f64 = 1e-12;
/// Largest walk length expanded into an explicit polynomial.
pub const MAX_EXPANDED_WALK: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkSpec {
    pub k: usize,
    pub t: f64,
}

impl WalkSpec {
    pub fn new(k: usize, t: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Structure("walk length k must be at least 1".into()));
        }
        if !t.is_finite() {
            return Err(Error::Structure(format!("walk parameter t must be finite, got {t}")));
        }
        Ok(Self { k, t })
    }
}

fn on_unit_circle(lambda: C64) -> bool {
    (lambda.norm() - 1.0).abs() <= UNIT_CIRCLE_TOL
}

/// `g(lambda) = |lambda - 1|^2 (|lambda|^{2/k} - 1) / (|lambda|^2 - 1)`;
/// the walk spectrum is `{g <= t^2}`.
pub fn walk_g(spec: WalkSpec, lambda: C64) -> f64 {
    let d2 = (lambda - 1.0).norm_sqr();
    if on_unit_circle(lambda) {
        return d2 / spec.k as f64;
    }
    let s = lambda.norm_sqr();
    // (s^{1/k} - 1)/(s - 1) without cancellation near |lambda| = 1.
    let ln = s.ln();
    d2 * (ln / spec.k as f64).exp_m1() / ln.exp_m1()
}

/// `t^2 / g`, the decay ratio of the resolvent level sums; the spectrum is
/// `{field >= 1}` and `lambda = 1` maps to `+inf`.
pub fn walk_field(spec: WalkSpec, lambda: C64) -> f64 {
    let g = walk_g(spec, lambda);
    let t2 = spec.t * spec.t;
    if g == 0.0 {
        if t2 == 0.0 {
            return 1.0;
        }
        return f64::INFINITY;
    }
    t2 / g
}

pub fn walk_membership(spec: WalkSpec, lambda: C64) -> MembershipVerdict {
    let g = walk_g(spec, lambda);
    let t2 = spec.t * spec.t;
    let verdict = if g <= t2 * (1.0 + CLOSED_SLACK) {
        Verdict::Spectrum
    } else {
        Verdict::Resolvent
    };
    MembershipVerdict::new(
        verdict,
        Diagnostics {
            method: Some("walk"),
            decay_ratio: Some(walk_field(spec, lambda)),
            spectral_radius: Some(walk_m_radius_closed(spec, lambda)),
            ..Default::default()
        },
    )
}

/// `M_ij = |lambda|^2` above the diagonal and `1` on and below it.
pub fn walk_m(spec: WalkSpec, lambda: C64) -> ComplexMatrix {
    let s = lambda.norm_sqr();
    let k = spec.k;
    let mut m = ComplexMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = C64::new(if i < j { s } else { 1.0 }, 0.0);
        }
    }
    m
}

/// `(|lambda|^2 - 1) / (|lambda|^{2/k} - 1)`, or `k` on the unit circle.
pub fn walk_m_radius_closed(spec: WalkSpec, lambda: C64) -> f64 {
    if on_unit_circle(lambda) {
        return spec.k as f64;
    }
    let ln = lambda.norm_sqr().ln();
    ln.exp_m1() / (ln / spec.k as f64).exp_m1()
}

/// `(|lambda|^2 - 1) / (|lambda|^{2/k} e^{2 pi i l / k} - 1)` for `l = 0..k`.
/// On the unit circle this is `k` followed by `k - 1` zeros.
pub fn walk_m_eigs_closed(spec: WalkSpec, lambda: C64) -> Vec<C64> {
    let k = spec.k;
    if on_unit_circle(lambda) {
        let mut out = vec![C64::new(0.0, 0.0); k];
        out[0] = C64::new(k as f64, 0.0);
        return out;
    }
    let s = lambda.norm_sqr();
    let root = s.powf(1.0 / k as f64);
    (0..k)
        .map(|l| C64::new(s - 1.0, 0.0) / (C64::from_polar(root, TAU * l as f64 / k as f64) - 1.0))
        .collect()
}

/// The characteristic polynomial `((x - 1 + s)^k - s x^k) / (1 - s)` with
/// `s = |lambda|^2`, returned with the magnitude of its two numerator terms
/// so callers can form a relative residual.
pub fn walk_charpoly(spec: WalkSpec, lambda: C64, x: C64) -> (C64, f64) {
    let s = lambda.norm_sqr();
    let k = spec.k as i32;
    let first = (x - 1.0 + s).powi(k);
    let second = x.powi(k) * s;
    ((first - second) / (1.0 - s), (first.norm() + second.norm()) / (1.0 - s).abs())
}

/// `prod_i (1 + t c_i)` expanded over increasing index words, with `d = k`.
pub fn walk_polynomial(spec: WalkSpec) -> Result<NCPolynomial> {
    if spec.k > MAX_EXPANDED_WALK {
        return Err(Error::Structure(format!(
            "walk expansion is limited to k <= {MAX_EXPANDED_WALK}, got {}",
            spec.k
        )));
    }
    let mut p = NCPolynomial::zero(VariableKind::Circular, spec.k);
    for mask in 0u32..(1 << spec.k) {
        let indices: Vec<usize> = (0..spec.k).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
        let coef = spec.t.powi(indices.len() as i32);
        p.add_term(Word::from_indices(&indices), C64::new(coef, 0.0));
    }
    Ok(p)
}

/// Closed disk of radius `||p||_2` for a homogeneous holomorphic `p`.
pub fn homogeneous_membership(p: &NCPolynomial, lambda: C64) -> Result<MembershipVerdict> {
    let radius = homogeneous_radius(p)?;
    let verdict = if lambda.norm() <= radius * (1.0 + CLOSED_SLACK) {
        Verdict::Spectrum
    } else {
        Verdict::Resolvent
    };
    Ok(MembershipVerdict::new(
        verdict,
        Diagnostics {
            method: Some("homogeneous"),
            spectral_radius: Some(radius),
            ..Default::default()
        },
    ))
}

/// `||p||_2`, the radius of the spectral disk.
pub fn homogeneous_radius(p: &NCPolynomial) -> Result<f64> {
    if p.kind() != VariableKind::Circular || !p.is_holomorphic() {
        return Err(Error::Structure(
            "disk formula needs a polynomial in circular variables without adjoints".into(),
        ));
    }
    match p.homogeneous_degree() {
        Some(n) if n >= 1 => Ok(p.coefficient_l2()),
        _ => Err(Error::Structure("polynomial is not homogeneous of positive degree".into())),
    }
}
