//! Dense complex linear algebra.
//!
//! Eigenvalues come from a Householder reduction to upper Hessenberg form
//! followed by the implicitly shifted single-shift complex QR iteration. The
//! same iteration, run with accumulated transformations, yields a complex
//! Schur form `M = Q T Q*` whose diagonal can be reordered by unitary swaps.
//! That ordered Schur form is what decides whether `M^n v -> 0`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Builds a matrix from real rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Adds `c * other` in place.
    pub fn axpy(&mut self, c: C64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m) = (self.rows, other.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: out,
        })
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(C64::conj).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    /// `P M P^T` for the permutation sending index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if !self.is_square() || perm.len() != self.rows {
            return Err(Error::Dimension("permutation size mismatch".into()));
        }
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        Ok(out)
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn determinant(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(Error::Dimension("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap();
            if a[pivot * n + k] == ZERO {
                return Ok(ZERO);
            }
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det *= p;
            for i in k + 1..n {
                let f = a[i * n + k] / p;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        Ok(det)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

/// Complex Schur factorization `M = Q T Q*`.
#[derive(Clone, Debug)]
pub struct SchurForm {
    pub q: ComplexMatrix,
    pub t: ComplexMatrix,
}

impl SchurForm {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.rows()).map(|i| self.t[(i, i)]).collect()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.q
            .matmul(&self.t)
            .and_then(|qt| qt.matmul(&self.q.adjoint()))
            .expect("Schur factors are square and conformal")
    }

    /// Stable-sorts the diagonal of `T` by `class` (lowest class first) using
    /// adjacent unitary swaps. Returns the number of eigenvalues per class.
    pub fn reorder_by<F>(&mut self, classes: usize, class: F) -> Vec<usize>
    where
        F: Fn(C64) -> usize,
    {
        let n = self.t.rows();
        let mut counts = vec![0; classes];
        let mut placed = 0;
        for c in 0..classes {
            for j in placed..n {
                if class(self.t[(j, j)]) == c {
                    for k in (placed..j).rev() {
                        self.swap_adjacent(k);
                    }
                    placed += 1;
                    counts[c] += 1;
                }
            }
        }
        counts
    }

    /// Exchanges diagonal entries `k` and `k + 1` of `T` by a unitary similarity.
    fn swap_adjacent(&mut self, k: usize) {
        let n = self.t.rows();
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let c = self.t[(k, k + 1)];
        // (c, b - a) spans the eigenvector of the 2x2 block for eigenvalue b.
        let d = b - a;
        let norm = (c.norm_sqr() + d.norm_sqr()).sqrt();
        if norm == 0.0 {
            return;
        }
        let (x1, x2) = (c / norm, d / norm);
        // G = [[x1, -conj(x2)], [x2, conj(x1)]]; T <- G* T G, Q <- Q G.
        for j in k..n {
            let (r0, r1) = (self.t[(k, j)], self.t[(k + 1, j)]);
            self.t[(k, j)] = x1.conj() * r0 + x2.conj() * r1;
            self.t[(k + 1, j)] = -x2 * r0 + x1 * r1;
        }
        for i in 0..=k + 1 {
            let (c0, c1) = (self.t[(i, k)], self.t[(i, k + 1)]);
            self.t[(i, k)] = x1 * c0 + x2 * c1;
            self.t[(i, k + 1)] = -x2.conj() * c0 + x1.conj() * c1;
        }
        for i in 0..n {
            let (c0, c1) = (self.q[(i, k)], self.q[(i, k + 1)]);
            self.q[(i, k)] = x1 * c0 + x2 * c1;
            self.q[(i, k + 1)] = -x2.conj() * c0 + x1.conj() * c1;
        }
        self.t[(k + 1, k)] = ZERO;
        self.t[(k, k)] = b;
        self.t[(k + 1, k + 1)] = a;
    }
}

/// Eigenvalues with algebraic multiplicity, plus Schur factors when requested.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub eigenvalues: Vec<C64>,
    pub schur: Option<SchurForm>,
}

fn require_square(m: &ComplexMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "eigenproblem needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )))
    }
}

/// All eigenvalues of a square matrix (no Schur vectors).
pub fn eigenvalues(m: &ComplexMatrix) -> Result<EigenResult> {
    require_square(m)?;
    let n = m.rows();
    let mut h = m.data.clone();
    hessenberg(&mut h, n, None);
    let eigenvalues = hessenberg_qr(&mut h, n, None, false)?;
    Ok(EigenResult {
        eigenvalues,
        schur: None,
    })
}

/// Complex Schur decomposition with accumulated unitary factor.
pub fn schur(m: &ComplexMatrix) -> Result<SchurForm> {
    require_square(m)?;
    let n = m.rows();
    let mut h = m.data.clone();
    let mut q = ComplexMatrix::identity(n).data;
    hessenberg(&mut h, n, Some(&mut q));
    hessenberg_qr(&mut h, n, Some(&mut q), true)?;
    for i in 0..n {
        for j in 0..i {
            h[i * n + j] = ZERO;
        }
    }
    Ok(SchurForm {
        q: ComplexMatrix {
            rows: n,
            cols: n,
            data: q,
        },
        t: ComplexMatrix {
            rows: n,
            cols: n,
            data: h,
        },
    })
}

/// Eigenvalues together with the Schur factors.
pub fn eigen_decomposition(m: &ComplexMatrix) -> Result<EigenResult> {
    let s = schur(m)?;
    Ok(EigenResult {
        eigenvalues: s.eigenvalues(),
        schur: Some(s),
    })
}

pub fn spectral_radius(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .eigenvalues
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Householder reduction to upper Hessenberg form, in place (row-major `n x n`).
fn hessenberg(a: &mut [C64], n: usize, mut q: Option<&mut [C64]>) {
    let mut v = vec![ZERO; n];
    let mut s = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let xnorm = (k + 1..n).map(|i| a[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let v = &mut v[..m];
        for (vi, i) in v.iter_mut().zip(k + 1..n) {
            *vi = a[i * n + k];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(C64::norm_sqr).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // A <- (I - beta v v*) A, columns k..n.
        let s = &mut s[..n];
        s.iter_mut().for_each(|z| *z = ZERO);
        for (vi, i) in v.iter().zip(k + 1..n) {
            let vc = vi.conj();
            let row = &a[i * n..(i + 1) * n];
            for j in k..n {
                s[j] += vc * row[j];
            }
        }
        for (vi, i) in v.iter().zip(k + 1..n) {
            let f = *vi * beta;
            let row = &mut a[i * n..(i + 1) * n];
            for j in k..n {
                row[j] -= f * s[j];
            }
        }

        // A <- A (I - beta v v*), all rows.
        let right = |mat: &mut [C64]| {
            for i in 0..n {
                let row = &mut mat[i * n..(i + 1) * n];
                let dot: C64 = row[k + 1..].iter().zip(v.iter()).map(|(x, y)| x * y).sum();
                let f = dot * beta;
                for (x, y) in row[k + 1..].iter_mut().zip(v.iter()) {
                    *x -= f * y.conj();
                }
            }
        };
        right(a);
        if let Some(q) = q.as_deref_mut() {
            right(q);
        }

        a[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            a[i * n + k] = ZERO;
        }
    }
}

/// Returns `(c, s)` with real `c` such that `[[c, s], [-conj(s), c]] (x, y)^T = (r, 0)^T`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        (1.0, ZERO)
    } else if ax == 0.0 {
        (0.0, ONE)
    } else {
        (ax / r, (x / ax) * y.conj() / r)
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    let disc = (p * p + bc).sqrt();
    let (d1, d2) = (p + disc, p - disc);
    let denom = if d1.norm() >= d2.norm() { d1 } else { d2 };
    if denom == ZERO {
        d
    } else {
        d - bc / denom
    }
}

/// Single-shift complex QR iteration on an upper Hessenberg matrix.
///
/// With `want_t` the full triangular factor is maintained (and `z`, when
/// given, accumulates the transformations); otherwise only the active block
/// is updated, which is enough for eigenvalues.
fn hessenberg_qr(
    h: &mut [C64],
    n: usize,
    mut z: Option<&mut [C64]>,
    want_t: bool,
) -> Result<Vec<C64>> {
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let ulp = f64::EPSILON;
    let small = f64::MIN_POSITIVE * (n as f64 / ulp);
    let max_per_eig = 100;
    let max_total = 30 * n.max(10);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    loop {
        // Locate the start of the unreduced block ending at `hi`.
        let mut l = hi;
        while l > 0 {
            let sub = h[l * n + l - 1].norm();
            let mut tst = h[(l - 1) * n + l - 1].norm() + h[l * n + l].norm();
            if tst == 0.0 {
                tst = (l.saturating_sub(2)..=hi.min(n - 1))
                    .map(|i| h[i * n + i.saturating_sub(1).max(0)].norm())
                    .sum();
            }
            if sub <= ulp * tst || sub <= small {
                h[l * n + l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi * n + hi];
            its = 0;
            if hi == 0 {
                break;
            }
            hi -= 1;
            continue;
        }

        its += 1;
        total += 1;
        if its > max_per_eig || total > max_total {
            return Err(Error::NoConvergence {
                iterations: total,
                found: n - 1 - hi,
                dim: n,
            });
        }

        let mu = if its % 10 == 0 {
            // Exceptional shift to break cycles.
            h[hi * n + hi] + 0.75 * h[hi * n + hi - 1].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };

        let (row_lo, col_hi) = if want_t { (0, n - 1) } else { (l, hi) };
        let mut x = h[l * n + l] - mu;
        let mut y = h[(l + 1) * n + l];
        for k in l..hi {
            let (c, s) = givens(x, y);
            let col_lo = if k > l { k - 1 } else { l };
            for j in col_lo..=col_hi {
                let a0 = h[k * n + j];
                let a1 = h[(k + 1) * n + j];
                h[k * n + j] = c * a0 + s * a1;
                h[(k + 1) * n + j] = -s.conj() * a0 + c * a1;
            }
            for i in row_lo..=(k + 2).min(hi) {
                let a0 = h[i * n + k];
                let a1 = h[i * n + k + 1];
                h[i * n + k] = c * a0 + s.conj() * a1;
                h[i * n + k + 1] = -s * a0 + c * a1;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let a0 = z[i * n + k];
                    let a1 = z[i * n + k + 1];
                    z[i * n + k] = c * a0 + s.conj() * a1;
                    z[i * n + k + 1] = -s * a0 + c * a1;
                }
            }
            if k > l {
                h[(k + 1) * n + k - 1] = ZERO;
            }
            if k + 1 < hi {
                x = h[(k + 1) * n + k];
                y = h[(k + 2) * n + k];
            }
        }
    }
    Ok(eig)
}

/// Outcome of a test of `lim M^n v = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitVerdict {
    ConvergesToZero,
    DoesNotConverge,
    Uncertain,
}

/// Result of [`stable_subspace_membership`].
#[derive(Clone, Debug)]
pub struct SubspaceReport {
    pub verdict: OrbitVerdict,
    /// Eigenvalues with modulus below `threshold - tol`.
    pub stable_count: usize,
    /// Eigenvalues with modulus inside the band `[threshold - tol, threshold + tol]`.
    pub band_count: usize,
    /// Relative residual of `v` against the stable invariant subspace.
    pub stable_residual: f64,
    /// Relative residual of `v` against the stable-plus-band invariant subspace.
    pub band_residual: f64,
    pub eigenvalues: Vec<C64>,
}

fn subspace_residual(q: &ComplexMatrix, k: usize, v: &[C64]) -> f64 {
    let n = q.rows();
    let mut r = v.to_vec();
    for j in 0..k {
        let coef: C64 = (0..n).map(|i| q[(i, j)].conj() * v[i]).sum();
        for i in 0..n {
            r[i] -= coef * q[(i, j)];
        }
    }
    vec_norm(&r)
}

/// Decides `lim M^n v = 0` from an ordered Schur form.
///
/// `v` converges to zero iff it lies in the invariant subspace belonging to
/// eigenvalues of modulus below `threshold`. Eigenvalues within `tol` of the
/// threshold that `v` actually excites make the answer `Uncertain`.
pub fn stable_subspace_membership(
    m: &ComplexMatrix,
    v: &[C64],
    threshold: f64,
    tol: f64,
) -> Result<SubspaceReport> {
    require_square(m)?;
    if v.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "vector of length {} for {}x{} matrix",
            v.len(),
            m.rows(),
            m.cols()
        )));
    }
    let mut s = schur(m)?;
    let counts = s.reorder_by(3, |z| {
        let r = z.norm();
        if r < threshold - tol {
            0
        } else if r <= threshold + tol {
            1
        } else {
            2
        }
    });
    let vnorm = vec_norm(v);
    let (stable_residual, band_residual) = if vnorm == 0.0 {
        (0.0, 0.0)
    } else {
        (
            subspace_residual(&s.q, counts[0], v) / vnorm,
            subspace_residual(&s.q, counts[0] + counts[1], v) / vnorm,
        )
    };
    let verdict = if stable_residual <= tol {
        OrbitVerdict::ConvergesToZero
    } else if band_residual <= tol {
        OrbitVerdict::Uncertain
    } else {
        OrbitVerdict::DoesNotConverge
    };
    Ok(SubspaceReport {
        verdict,
        stable_count: counts[0],
        band_count: counts[1],
        stable_residual,
        band_residual,
        eigenvalues: s.eigenvalues(),
    })
}

/// Norm history of `v_{n+1} = M v_n`, started from `v / |v|`.
#[derive(Clone, Debug)]
pub struct PowerOrbit {
    pub verdict: OrbitVerdict,
    pub norms: Vec<f64>,
}

pub const DEFAULT_ORBIT_CAP: usize = 10_000;

/// Direct iteration test for `lim M^n v = 0`.
///
/// The starting vector is normalized, so `grow_bound` and `zero_tol` are
/// relative to `|v|`.
pub fn power_orbit(
    m: &ComplexMatrix,
    v: &[C64],
    n_max: usize,
    grow_bound: f64,
    zero_tol: f64,
) -> Result<PowerOrbit> {
    require_square(m)?;
    let n_max = n_max.max(1);
    let vnorm = vec_norm(v);
    let mut norms = vec![if vnorm == 0.0 { 0.0 } else { 1.0 }];
    if vnorm == 0.0 {
        return Ok(PowerOrbit {
            verdict: OrbitVerdict::ConvergesToZero,
            norms,
        });
    }
    let mut cur: Vec<C64> = v.iter().map(|z| z / vnorm).collect();
    for _ in 0..n_max {
        cur = m.mul_vec(&cur)?;
        let norm = vec_norm(&cur);
        if !norm.is_finite() || norm > grow_bound {
            norms.push(if norm.is_finite() { norm } else { f64::MAX });
            return Ok(PowerOrbit {
                verdict: OrbitVerdict::DoesNotConverge,
                norms,
            });
        }
        norms.push(norm);
        if norm < zero_tol {
            return Ok(PowerOrbit {
                verdict: OrbitVerdict::ConvergesToZero,
                norms,
            });
        }
    }
    let len = norms.len();
    let window = ((len - 1) / 4).max(1);
    let (late, early) = (norms[len - 1], norms[len - 1 - window]);
    let ratio = if early > 0.0 {
        (late / early).powf(1.0 / window as f64)
    } else {
        0.0
    };
    let verdict = if ratio > 1.0 {
        OrbitVerdict::DoesNotConverge
    } else {
        OrbitVerdict::Uncertain
    };
    Ok(PowerOrbit { verdict, norms })
}
