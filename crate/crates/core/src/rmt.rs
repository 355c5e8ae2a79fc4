//! Ginibre matrix models of free circular systems.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, ComplexMatrix, C64};
use crate::ncpoly::{Letter, NCPolynomial, VariableKind};

/// Name of the generator recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha8Rng";
/// Variance convention recorded in output metadata.
pub const VARIANCE_CONVENTION: &str = "E|G_ij|^2 = 1/N, real and imaginary parts N(0, 1/(2N))";
pub const DEFAULT_SIZE: usize = 500;

/// `d` independent `N x N` Ginibre matrices.
#[derive(Clone, Debug)]
pub struct GinibreSample {
    pub size: usize,
    pub seed: u64,
    pub matrices: Vec<ComplexMatrix>,
}

impl GinibreSample {
    /// Wraps given matrices, e.g. for deterministic tests.
    pub fn from_matrices(matrices: Vec<ComplexMatrix>) -> Result<Self> {
        let size = matrices.first().map_or(0, ComplexMatrix::rows);
        if matrices.iter().any(|m| m.rows() != size || m.cols() != size) {
            return Err(Error::Dimension("sample matrices must be square and of equal size".into()));
        }
        Ok(Self {
            size,
            seed: 0,
            matrices,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.matrices.len()
    }
}

pub fn sample(d: usize, n: usize, seed: u64) -> Result<GinibreSample> {
    if n == 0 {
        return Err(Error::Dimension("Ginibre size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (0.5 / n as f64).sqrt();
    let mut matrices = Vec::with_capacity(d);
    for _ in 0..d {
        let data = (0..n * n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re * sd, im * sd)
            })
            .collect();
        matrices.push(ComplexMatrix::new(n, n, data)?);
    }
    Ok(GinibreSample {
        size: n,
        seed,
        matrices,
    })
}

/// Substitutes `G_i` for `c_i`. Words sharing a first letter are grouped,
/// `p = c0 + sum_i G_i p_i`, so shared prefixes cost one product.
pub fn evaluate(p: &NCPolynomial, sample: &GinibreSample) -> Result<ComplexMatrix> {
    if p.kind() != VariableKind::Circular || !p.is_holomorphic() {
        return Err(Error::Structure(
            "matrix models need a polynomial in circular variables without adjoints".into(),
        ));
    }
    if p.num_vars() != sample.num_vars() {
        return Err(Error::Dimension(format!(
            "polynomial has {} variables, sample has {} matrices",
            p.num_vars(),
            sample.num_vars()
        )));
    }
    let terms: Vec<(&[Letter], C64)> = p.terms().map(|(w, c)| (w.letters(), *c)).collect();
    Ok(horner(&terms, sample))
}

fn horner(terms: &[(&[Letter], C64)], sample: &GinibreSample) -> ComplexMatrix {
    let n = sample.size;
    let mut constant = C64::new(0.0, 0.0);
    let mut groups: BTreeMap<usize, Vec<(&[Letter], C64)>> = BTreeMap::new();
    for &(w, c) in terms {
        match w.split_first() {
            None => constant += c,
            Some((first, rest)) => groups.entry(first.index()).or_default().push((rest, c)),
        }
    }
    let mut out = ComplexMatrix::identity(n).scale(constant);
    for (index, rest) in groups {
        let inner = horner(&rest, sample);
        let prod = sample.matrices[index - 1].matmul(&inner).expect("square factors");
        out.axpy(C64::new(1.0, 0.0), &prod).expect("equal shapes");
    }
    out
}

pub fn eigen_cloud(p: &NCPolynomial, sample: &GinibreSample) -> Result<Vec<C64>> {
    Ok(eigenvalues(&evaluate(p, sample)?)?.eigenvalues)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Containment {
    /// `None` for an empty cloud.
    pub fraction: Option<f64>,
    pub inside: usize,
    pub total: usize,
    pub level: f64,
    pub dilation: f64,
    /// Counts of field values over `[level - 1, level + 1)` in equal bins,
    /// with values outside clamped into the end bins.
    pub histogram: Vec<usize>,
}

pub const HISTOGRAM_BINS: usize = 20;

/// Fraction of points with `field >= level - dilation`.
pub fn containment<F>(eigs: &[C64], field: F, level: f64, dilation: f64) -> Containment
where
    F: Fn(C64) -> f64,
{
    let mut histogram = vec![0; HISTOGRAM_BINS];
    let mut inside = 0;
    for &z in eigs {
        let v = field(z);
        if v >= level - dilation {
            inside += 1;
        }
        let pos = ((v - level + 1.0) / 2.0 * HISTOGRAM_BINS as f64).floor();
        let bin = if pos.is_nan() { HISTOGRAM_BINS - 1 } else { pos.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize };
        histogram[bin] += 1;
    }
    Containment {
        fraction: (!eigs.is_empty()).then(|| inside as f64 / eigs.len() as f64),
        inside,
        total: eigs.len(),
        level,
        dilation,
        histogram,
    }
}

/// `(1/N) Tr(X^* X)`.
pub fn normalized_trace_gram(m: &ComplexMatrix) -> f64 {
    m.as_slice().iter().map(C64::norm_sqr).sum::<f64>() / m.rows() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::l2_norm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn circ(text: &str, d: usize) -> NCPolynomial {
        NCPolynomial::parse(text, d, VariableKind::Circular).unwrap()
    }

    #[test]
    fn entry_variance_is_one_over_n() {
        let draws = 10_000;
        let vals: Vec<f64> = (0..draws)
            .map(|s| sample(1, 1, s).unwrap().matrices[0][(0, 0)].norm_sqr())
            .collect();
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn seeded_samples_are_reproducible() {
        let a = sample(2, 16, 42).unwrap();
        let b = sample(2, 16, 42).unwrap();
        let other = sample(2, 16, 43).unwrap();
        for (x, y) in a.matrices.iter().zip(&b.matrices) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
        assert_ne!(a.matrices[0].as_slice(), other.matrices[0].as_slice());
    }

    #[test]
    fn normalization_and_independence() {
        for n in [64usize, 256, 1024] {
            let s = sample(2, n, 5).unwrap();
            let tol = 5.0 / (n as f64).sqrt();
            for g in &s.matrices {
                assert!((normalized_trace_gram(g) - 1.0).abs() <= tol);
            }
            let cross: C64 = s.matrices[0]
                .as_slice()
                .iter()
                .zip(s.matrices[1].as_slice())
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>()
                / n as f64;
            assert!(cross.norm() <= tol);
        }
    }

    #[test]
    fn evaluate_small_matrices() {
        let g1 = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(0.0, 1.0), c(-1.0, 0.0)]]).unwrap();
        let g2 = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(3.0, 0.0), c(1.0, -1.0)]]).unwrap();
        let s = GinibreSample::from_matrices(vec![g1.clone(), g2.clone()]).unwrap();
        let m = evaluate(&circ("c1*c2 + c2*c1", 2), &s).unwrap();
        // g1 g2 = [[6, 3-2i], [-3, -1+2i]], g2 g1 = [[i, -1], [4+i, 5+i]]
        let expected = ComplexMatrix::from_rows(&[
            vec![c(6.0, 1.0), c(2.0, -2.0)],
            vec![c(1.0, 1.0), c(4.0, 3.0)],
        ])
        .unwrap();
        assert!(m.sub(&expected).unwrap().frobenius_norm() < 1e-14);
        assert_eq!(evaluate(&circ("c1", 2), &s).unwrap(), g1);
        assert_eq!(evaluate(&circ("3", 2), &s).unwrap(), ComplexMatrix::identity(2).scale(c(3.0, 0.0)));
        assert!(evaluate(&circ("c1", 3), &s).is_err());
        assert!(evaluate(&circ("c1'", 2), &s).is_err());
    }

    #[test]
    fn circular_law_cloud() {
        let s = sample(1, 500, 7).unwrap();
        let eigs = eigen_cloud(&circ("c1", 1), &s).unwrap();
        assert_eq!(eigs.len(), 500);
        let inside = eigs.iter().filter(|z| z.norm() <= 1.1).count();
        assert!(inside as f64 >= 0.99 * 500.0, "{inside}");
        let consts = eigen_cloud(&circ("2", 1), &sample(1, 20, 1).unwrap()).unwrap();
        assert!(consts.iter().all(|&z| z == c(2.0, 0.0)));
    }

    #[test]
    fn containment_edge_cases() {
        let pts = [c(0.0, 0.0), c(1.0, 1.0)];
        let all = containment(&pts, |_| 2.0, 1.0, 0.0);
        assert_eq!(all.fraction, Some(1.0));
        assert_eq!(all.histogram.iter().sum::<usize>(), 2);
        let none = containment(&[], |_| 2.0, 1.0, 0.0);
        assert_eq!(none.fraction, None);
        let half = containment(&pts, |z| z.norm(), 1.0, 0.1);
        assert_eq!(half.fraction, Some(0.5));
    }

    #[test]
    fn second_moments_match_free_limit() {
        let polys = [
            circ("c1*c2 + 0.5*c1^2 + (1-1i)*c2 + 0.3", 2),
            circ("2*c2*c1 - 1i*c2^2 + c1", 2),
        ];
        for p in &polys {
            let target = l2_norm(p).unwrap().powi(2);
            let vals: Vec<f64> = (0..6)
                .map(|seed| normalized_trace_gram(&evaluate(p, &sample(2, 512, seed).unwrap()).unwrap()))
                .collect();
            let m = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / m;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            let se = sd / m.sqrt();
            assert!((mean - target).abs() <= 5.0 * se, "{mean} vs {target} (se {se})");
        }
    }
}
