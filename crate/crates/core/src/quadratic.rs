//! Spectra of quadratic polynomials `f = sum a_ij c_i c_j + sum b_i c_i + c0`
//! in two free circular variables.
//!
//! With `lambda' = lambda - c0`, `A_l = A / lambda'` and `b_l = b / lambda'`,
//! the sums `x_n = sum_{|w|=n} |alpha_w|^2`, `y_n = sum alpha_w conj(alpha_{1w})`
//! and `z_n = sum alpha_w conj(alpha_{2w})` of the resolvent coefficients obey
//! a linear recursion on the state `(x_{n+1}, x_n, y_n, z_n, conj y_n, conj z_n)`:
//!
//! ```text
//!     | b_l* b_l   Tr(A_l* A_l)  b_l* A_l   b_l^T conj(A_l) |
//! Q = | 1          0             0          0               |
//!     | conj(b_l)  0             0          conj(A_l)       |
//!     | b_l        0             A_l        0               |
//! ```
//!
//! and `state_n = Q^{n+1} e_1 / |lambda'|^2`. `lambda` is in the spectrum iff
//! `lambda = c0` or `Q^n e_1` does not tend to zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    power_orbit, spectral_radius, stable_subspace_membership, vec_norm, ComplexMatrix,
    OrbitVerdict, C64, DEFAULT_ORBIT_CAP,
};
use crate::ncpoly::QuadraticForm;
use crate::verdict::{Diagnostics, MembershipVerdict, Verdict};

/// Half-width of the band around `r(Q) = 1` (and of the Schur modulus cut)
/// inside which verdicts are `BoundaryUncertain`.
pub const VERDICT_BAND: f64 = 1e-6;
const ORBIT_GROW_BOUND: f64 = 1e12;
const ORBIT_ZERO_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `Q_lambda` and the scaled data it is built from.
#[derive(Clone, Debug)]
pub struct QuadraticAtLambda {
    pub form: QuadraticForm,
    pub lambda: C64,
    /// `lambda - c0`
    pub shifted: C64,
    pub a_lambda: [[C64; 2]; 2],
    pub b_lambda: [C64; 2],
    pub q: ComplexMatrix,
}

pub fn build_q(form: &QuadraticForm, lambda: C64) -> Result<QuadraticAtLambda> {
    let shifted = lambda - form.c0;
    if shifted == ZERO {
        return Err(Error::ShiftDegenerate);
    }
    let inv = shifted.inv();
    let a = form.a.map(|row| row.map(|z| z * inv));
    let b = form.b.map(|z| z * inv);

    let bb: f64 = b.iter().map(C64::norm_sqr).sum();
    let tr: f64 = a.iter().flatten().map(C64::norm_sqr).sum();
    // b* A and b^T conj(A) as row vectors.
    let b_star_a = [0, 1].map(|j| b[0].conj() * a[0][j] + b[1].conj() * a[1][j]);
    let bt_a_bar = [0, 1].map(|j| b[0] * a[0][j].conj() + b[1] * a[1][j].conj());

    let mut q = ComplexMatrix::zeros(6, 6);
    q[(0, 0)] = C64::new(bb, 0.0);
    q[(0, 1)] = C64::new(tr, 0.0);
    q[(0, 2)] = b_star_a[0];
    q[(0, 3)] = b_star_a[1];
    q[(0, 4)] = bt_a_bar[0];
    q[(0, 5)] = bt_a_bar[1];
    q[(1, 0)] = C64::new(1.0, 0.0);
    for i in 0..2 {
        q[(2 + i, 0)] = b[i].conj();
        q[(4 + i, 0)] = b[i];
        for j in 0..2 {
            q[(2 + i, 4 + j)] = a[i][j].conj();
            q[(4 + i, 2 + j)] = a[i][j];
        }
    }
    Ok(QuadraticAtLambda {
        form: *form,
        lambda,
        shifted,
        a_lambda: a,
        b_lambda: b,
        q,
    })
}

/// `(x_1, x_0, y_0, z_0, conj y_0, conj z_0)` from the first resolvent
/// coefficients `alpha_Omega = 1/lambda'`, `alpha_i = b_i / lambda'^2`.
pub fn initial_state(form: &QuadraticForm, lambda: C64) -> Result<[C64; 6]> {
    let shifted = lambda - form.c0;
    if shifted == ZERO {
        return Err(Error::ShiftDegenerate);
    }
    let m2 = shifted.norm_sqr();
    let x0 = 1.0 / m2;
    let x1 = form.b.iter().map(C64::norm_sqr).sum::<f64>() / (m2 * m2);
    let y0 = (form.b[0] / (m2 * shifted)).conj();
    let z0 = (form.b[1] / (m2 * shifted)).conj();
    Ok([C64::new(x1, 0.0), C64::new(x0, 0.0), y0, z0, y0.conj(), z0.conj()])
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `states[n] = (x_{n+1}, x_n, y_n, z_n, conj y_n, conj z_n)`.
    pub states: Vec<[C64; 6]>,
    /// Iteration stopped early because the state overflowed.
    pub diverged: bool,
}

impl Trajectory {
    /// `x_0, x_1, ..., x_{N+1}`.
    pub fn x(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.states.iter().map(|s| s[1].re).collect();
        if let Some(last) = self.states.last() {
            xs.push(last[0].re);
        }
        xs
    }
}

/// States for `n = 0..=n_max` by repeated multiplication with `Q`.
pub fn xyz_trajectory(form: &QuadraticForm, lambda: C64, n_max: usize) -> Result<Trajectory> {
    let ql = build_q(form, lambda)?;
    let mut state = initial_state(form, lambda)?;
    let mut states = vec![state];
    let mut diverged = false;
    for _ in 0..n_max {
        let next = ql.q.mul_vec(&state)?;
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() > 1e250) {
            diverged = true;
            break;
        }
        state.copy_from_slice(&next);
        states.push(state);
    }
    Ok(Trajectory { states, diverged })
}

/// The conditions under which `r(Q) >= 1` decides membership exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub b_is_zero: bool,
    pub a_symmetric: bool,
    /// Eigenvalues of `conj(A) A`.
    pub abar_a_eigenvalues: [C64; 2],
    pub has_distinct_real_eigs: bool,
    pub radius_test_valid: bool,
}

/// Eigenvalues of a 2x2 matrix.
fn eig2(m: [[C64; 2]; 2]) -> [C64; 2] {
    let half_tr = (m[0][0] + m[1][1]) * 0.5;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (half_tr * half_tr - det).sqrt();
    [half_tr + disc, half_tr - disc]
}

pub fn equivalence_conditions(form: &QuadraticForm) -> EquivalenceReport {
    let a = form.a;
    let a_norm = a.iter().flatten().map(C64::norm_sqr).sum::<f64>().sqrt();
    let b_is_zero = form.b.iter().map(C64::norm_sqr).sum::<f64>().sqrt() <= 1e-12;
    let asym = (a[0][1] - a[1][0]).norm() * 2f64.sqrt();
    let a_symmetric = asym <= 1e-12 * a_norm;
    let mut prod = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            prod[i][j] = a[i][0].conj() * a[0][j] + a[i][1].conj() * a[1][j];
        }
    }
    let eigs = eig2(prod);
    let scale = eigs[0].norm().max(eigs[1].norm()).max(a_norm * a_norm).max(f64::MIN_POSITIVE);
    let real = eigs.iter().all(|z| z.im.abs() <= 1e-9 * scale);
    let distinct = (eigs[0] - eigs[1]).norm() > 1e-9 * scale;
    let has_distinct_real_eigs = real && distinct;
    EquivalenceReport {
        b_is_zero,
        a_symmetric,
        abar_a_eigenvalues: eigs,
        has_distinct_real_eigs,
        radius_test_valid: b_is_zero || a_symmetric || !has_distinct_real_eigs,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `lim Q^n e_1 != 0`, decided from the ordered Schur form.
    Limit,
    /// `r(Q) >= 1`.
    Radius,
    /// Radius when the equivalence conditions hold, otherwise both.
    Auto,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "limit" => Ok(Method::Limit),
            "radius" => Ok(Method::Radius),
            "auto" => Ok(Method::Auto),
            other => Err(format!("unknown method '{other}' (expected auto, limit or radius)")),
        }
    }
}

/// `r(Q_lambda)`, or `+inf` at `lambda = c0`.
pub fn radius_field(form: &QuadraticForm, lambda: C64) -> f64 {
    match build_q(form, lambda) {
        Ok(ql) => spectral_radius(&ql.q).unwrap_or(f64::NAN),
        Err(_) => f64::INFINITY,
    }
}

fn radius_verdict(ql: &QuadraticAtLambda) -> MembershipVerdict {
    match spectral_radius(&ql.q) {
        Ok(r) => MembershipVerdict::new(
            Verdict::from_field(r, 1.0, VERDICT_BAND),
            Diagnostics {
                method: Some("radius"),
                spectral_radius: Some(r),
                ..Default::default()
            },
        ),
        Err(_) => MembershipVerdict::bare(Verdict::BoundaryUncertain, "radius"),
    }
}

fn limit_verdict(ql: &QuadraticAtLambda) -> MembershipVerdict {
    let e1 = [C64::new(1.0, 0.0), ZERO, ZERO, ZERO, ZERO, ZERO];
    let mut diag = Diagnostics {
        method: Some("limit"),
        ..Default::default()
    };
    let schur = stable_subspace_membership(&ql.q, &e1, 1.0, VERDICT_BAND);
    let orbit = match &schur {
        Ok(rep) => {
            diag.spectral_radius = Some(rep.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max));
            rep.verdict
        }
        Err(_) => OrbitVerdict::Uncertain,
    };
    let orbit = if orbit == OrbitVerdict::Uncertain {
        match power_orbit(&ql.q, &e1, DEFAULT_ORBIT_CAP, ORBIT_GROW_BOUND, ORBIT_ZERO_TOL) {
            Ok(po) => {
                diag.iterations = Some(po.norms.len() - 1);
                po.verdict
            }
            Err(_) => OrbitVerdict::Uncertain,
        }
    } else {
        orbit
    };
    let verdict = match orbit {
        OrbitVerdict::ConvergesToZero => Verdict::Resolvent,
        OrbitVerdict::DoesNotConverge => Verdict::Spectrum,
        OrbitVerdict::Uncertain => Verdict::BoundaryUncertain,
    };
    MembershipVerdict::new(verdict, diag)
}

/// Membership of `lambda` in the spectrum of the quadratic polynomial.
pub fn membership(form: &QuadraticForm, lambda: C64, method: Method) -> MembershipVerdict {
    let ql = match build_q(form, lambda) {
        Ok(ql) => ql,
        Err(_) => {
            let name = match method {
                Method::Limit => "limit",
                Method::Radius => "radius",
                Method::Auto => "auto",
            };
            return MembershipVerdict::bare(Verdict::Spectrum, name);
        }
    };
    match method {
        Method::Limit => limit_verdict(&ql),
        Method::Radius => radius_verdict(&ql),
        Method::Auto => {
            if equivalence_conditions(form).radius_test_valid {
                return radius_verdict(&ql);
            }
            let limit = limit_verdict(&ql);
            let radius = radius_verdict(&ql);
            let mut out = limit.clone();
            out.diagnostics.method = Some("auto");
            out.diagnostics.spectral_radius = radius.diagnostics.spectral_radius;
            if limit.verdict.is_conclusive()
                && radius.verdict.is_conclusive()
                && limit.verdict != radius.verdict
            {
                out.verdict = Verdict::BoundaryUncertain;
                out.diagnostics.disagreement = true;
            }
            out
        }
    }
}

/// Relative distance of `v` from the subspace where `v_5 = conj v_3`,
/// `v_6 = conj v_4` and `v_1, v_2` are real.
pub fn reality_defect(v: &[C64]) -> f64 {
    let dev = [
        C64::new(0.0, v[0].im),
        C64::new(0.0, v[1].im),
        v[4] - v[2].conj(),
        v[5] - v[3].conj(),
    ];
    vec_norm(&dev) / vec_norm(v).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;
    use crate::ncpoly::{NCPolynomial, VariableKind};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn form(text: &str) -> QuadraticForm {
        NCPolynomial::parse(text, 2, VariableKind::Circular)
            .unwrap()
            .extract_quadratic()
            .unwrap()
    }

    #[test]
    fn linear_form_has_single_eigenvalue() {
        let f = QuadraticForm::new(Default::default(), [c(3.0, 0.0), c(4.0, 0.0)], ZERO);
        let ql = build_q(&f, c(2.0, 0.0)).unwrap();
        let mut mods: Vec<f64> = eigenvalues(&ql.q).unwrap().eigenvalues.iter().map(|z| z.norm()).collect();
        mods.sort_by(f64::total_cmp);
        assert!((mods[5] - 25.0 / 4.0).abs() < 1e-12);
        assert!(mods[..5].iter().all(|&m| m < 1e-12));
        assert!((spectral_radius(&ql.q).unwrap() - 6.25).abs() < 1e-12);
    }

    #[test]
    fn b_zero_decouples() {
        let f = form("(0.5i)*c1^2 + c1*c2 + 2*c2*c1 + c2^2");
        let ql = build_q(&f, c(1.5, 0.5)).unwrap();
        for i in 2..6 {
            assert_eq!(ql.q[(i, 0)], ZERO);
        }
        for j in 2..6 {
            assert_eq!(ql.q[(0, j)], ZERO);
        }
    }

    #[test]
    fn q_depends_on_ratios_only() {
        let f = form("c1^2 + c2*c1 - c2^2 + c1 + 1i*c2");
        let half = QuadraticForm::new(f.a.map(|r| r.map(|z| z * 0.5)), f.b.map(|z| z * 0.5), ZERO);
        let lam = c(0.7, -1.1);
        let q1 = build_q(&f, lam * 2.0).unwrap().q;
        let q2 = build_q(&half, lam).unwrap().q;
        assert!(q1.sub(&q2).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn initial_state_examples() {
        let f = form("c1*c2");
        let s = initial_state(&f, c(2.0, 0.0)).unwrap();
        assert_eq!(s, [ZERO, c(0.25, 0.0), ZERO, ZERO, ZERO, ZERO]);
        let f = form("0.5*c1^2+0.5*c1*c2+0.5*c2*c1+0.5*c2^2+0.5*c1+0.5*c2");
        let s = initial_state(&f, c(1.0, 0.0)).unwrap();
        assert!((s[0].re - 0.5).abs() < 1e-15);
        let ql = build_q(&f, c(1.0, 0.0)).unwrap();
        let qe1 = ql.q.column(0);
        for k in 0..6 {
            assert!((s[k] - qe1[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn linear_trajectory_is_geometric() {
        let f = QuadraticForm::new(Default::default(), [c(1.0, 0.0), ZERO], ZERO);
        let t = xyz_trajectory(&f, c(2.0, 0.0), 20).unwrap();
        for (n, x) in t.x().iter().enumerate() {
            assert!((x - 0.25f64.powi(n as i32 + 1)).abs() <= 1e-15 * x);
        }
    }

    #[test]
    fn membership_examples() {
        let f = QuadraticForm::new(Default::default(), [c(1.0, 0.0), ZERO], ZERO);
        for m in [Method::Limit, Method::Radius, Method::Auto] {
            assert_eq!(membership(&f, c(0.9, 0.1), m).verdict, Verdict::Spectrum);
            assert_eq!(membership(&f, c(0.0, 1.1), m).verdict, Verdict::Resolvent);
        }
        let a = form("0.5*c1^2+0.5*c1*c2+0.5*c2*c1+0.5*c2^2+0.5*c1+0.5*c2");
        assert_eq!(membership(&a, ZERO, Method::Auto).verdict, Verdict::Spectrum);
        let v = membership(&a, c(3.0, 0.0), Method::Limit);
        let r = membership(&a, c(3.0, 0.0), Method::Radius);
        assert_eq!(v.verdict, r.verdict);
        assert!(v.is_conclusive());
    }

    #[test]
    fn equivalence_examples() {
        let b = equivalence_conditions(&form("c1*c2 + c2*c1 + c1 + c2"));
        assert!(b.a_symmetric && b.radius_test_valid);
        let cc = equivalence_conditions(&form("c1^2 + c2*c1 - c2^2 + c1 + 1i*c2"));
        assert!(!cc.a_symmetric && !cc.b_is_zero);
        assert!(!cc.has_distinct_real_eigs && cc.radius_test_valid);
        for z in cc.abar_a_eigenvalues {
            assert!((z - c(1.0, 0.0)).norm() < 1e-12);
        }
        let d = equivalence_conditions(&form("(0.5i)*c1^2 + c1*c2 + 2*c2*c1 + c2^2"));
        assert!(d.b_is_zero && d.radius_test_valid);
        // conj(A) A = diag(1, 4) with b != 0 and A non-symmetric: no guarantee.
        let odd = QuadraticForm::new(
            [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]],
            [c(1.0, 0.0), ZERO],
            ZERO,
        );
        assert!(equivalence_conditions(&odd).a_symmetric);
        let odd = QuadraticForm::new(
            [[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]],
            [c(1.0, 0.0), ZERO],
            ZERO,
        );
        let rep = equivalence_conditions(&odd);
        assert!(rep.has_distinct_real_eigs && !rep.radius_test_valid);
    }

    #[test]
    fn auto_runs_both_methods_when_not_guaranteed() {
        let odd = QuadraticForm::new(
            [[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]],
            [c(1.0, 0.0), ZERO],
            ZERO,
        );
        let v = membership(&odd, c(6.0, 1.0), Method::Auto);
        assert_eq!(v.diagnostics.method, Some("auto"));
        assert!(v.diagnostics.spectral_radius.is_some());
        assert_eq!(v.verdict, membership(&odd, c(6.0, 1.0), Method::Radius).verdict);
    }

    #[test]
    fn shifted_constant() {
        let f = form("c1*c2 + c2*c1 + c1 + c2 + 2");
        assert_eq!(membership(&f, c(2.0, 0.0), Method::Auto).verdict, Verdict::Spectrum);
        assert!(radius_field(&f, c(2.0, 0.0)).is_infinite());
        assert!(matches!(build_q(&f, c(2.0, 0.0)), Err(Error::ShiftDegenerate)));
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
    }

    fn arb_form() -> impl Strategy<Value = QuadraticForm> {
        (proptest::array::uniform4(arb_c64()), proptest::array::uniform2(arb_c64()))
            .prop_map(|(a, b)| QuadraticForm::new([[a[0], a[1]], [a[2], a[3]]], b, ZERO))
    }

    fn arb_lambda() -> impl Strategy<Value = C64> {
        (0.2..5.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, th)| C64::from_polar(r, th))
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn determinant_identity(f in arb_form(), lam in arb_lambda()) {
            let ql = build_q(&f, lam).unwrap();
            let det = ql.q.determinant().unwrap();
            let a = ql.a_lambda;
            let tr: f64 = a.iter().flatten().map(C64::norm_sqr).sum();
            let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            prop_assert!((det + tr * det_a.norm_sqr()).norm() <= 1e-10 * (1.0 + det.norm()));
        }

        #[test]
        fn initial_state_is_scaled_first_column(f in arb_form(), lam in arb_lambda()) {
            let ql = build_q(&f, lam).unwrap();
            let s = initial_state(&f, lam).unwrap();
            let col = ql.q.column(0);
            let scale = 1.0 / lam.norm_sqr();
            for k in 0..6 {
                prop_assert!((s[k] - col[k] * scale).norm() <= 1e-13 * (1.0 + s[k].norm()));
            }
        }

        #[test]
        fn reality_subspace_is_invariant(f in arb_form(), lam in arb_lambda(), re in proptest::array::uniform2(-1.0..1.0f64), yz in proptest::array::uniform2(arb_c64())) {
            let ql = build_q(&f, lam).unwrap();
            let v = [C64::new(re[0], 0.0), C64::new(re[1], 0.0), yz[0], yz[1], yz[0].conj(), yz[1].conj()];
            let w = ql.q.mul_vec(&v).unwrap();
            prop_assert!(reality_defect(&w) <= 1e-13);
        }

        #[test]
        fn membership_is_scale_covariant(f in arb_form(), lam in arb_lambda(), c in arb_lambda()) {
            let scaled = QuadraticForm::new(f.a.map(|r| r.map(|z| z * c)), f.b.map(|z| z * c), ZERO);
            let r1 = radius_field(&f, lam);
            let r2 = radius_field(&scaled, lam * c);
            prop_assert!((r1 - r2).abs() <= 1e-9 * (1.0 + r1));
            let v1 = membership(&f, lam, Method::Radius).verdict;
            let v2 = membership(&scaled, lam * c, Method::Radius).verdict;
            if (r1 - 1.0).abs() > 1e-6 {
                prop_assert_eq!(v1, v2);
            }
        }

        #[test]
        fn trajectory_matches_level_sums(f in arb_form(), lam in arb_lambda()) {
            let traj = xyz_trajectory(&f, lam, 12).unwrap();
            let table = crate::resolvent::solve_alpha(&f.rebuild(), lam, 12).unwrap();
            let sums = crate::resolvent::level_sums(&table);
            let xs = traj.x();
            for n in 0..=12 {
                let a = sums.values[n];
                prop_assert!((xs[n] - a).abs() <= 1e-10 * a.max(f64::MIN_POSITIVE), "n={} x={} a={}", n, xs[n], a);
            }
        }

        #[test]
        fn cauchy_schwarz_along_trajectory(f in arb_form(), lam in arb_lambda()) {
            let traj = xyz_trajectory(&f, lam, 30).unwrap();
            for s in &traj.states {
                let bound = (s[0].re * s[1].re).sqrt();
                prop_assert!(s[2].norm() <= bound * (1.0 + 1e-9) + 1e-300);
                prop_assert!(s[3].norm() <= bound * (1.0 + 1e-9) + 1e-300);
            }
        }

        #[test]
        fn linear_form_degenerates_to_disk(b in proptest::array::uniform2(arb_c64()), lam in arb_lambda()) {
            let f = QuadraticForm::new(Default::default(), b, ZERO);
            let radius = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
            prop_assume!(radius > 1e-3);
            let v = membership(&f, lam, Method::Auto).verdict;
            // r(Q) = radius^2 / |lambda|^2
            let rq = radius * radius / lam.norm_sqr();
            if rq >= 1.0 + 1e-6 {
                prop_assert_eq!(v, Verdict::Spectrum);
            } else if rq < 1.0 - 1e-6 {
                prop_assert_eq!(v, Verdict::Resolvent);
            }
        }
    }
}
