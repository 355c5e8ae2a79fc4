//! Finitely supported vectors in the full Fock space and the left actions of
//! free semicircular and circular variables on them.
//!
//! Semicircular words use letters `1..=d` and `s_i = l(e_i) + l*(e_i)`.
//! Circular words use the doubled alphabet: an unstarred letter `i` is the
//! basis vector `u_i`, a starred letter is `u_{i-bar}`, and
//! `c_i = l(u_i) + l*(u_{i-bar})`, `c_i' = l(u_{i-bar}) + l*(u_i)`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ncpoly::{Letter, NCPolynomial, VariableKind, Word};

/// Default cap on stored amplitudes.
pub const DEFAULT_BUDGET: usize = 20_000_000;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    kind: VariableKind,
    d: usize,
    amps: BTreeMap<Word, C64>,
}

impl FockVector {
    pub fn zero(kind: VariableKind, d: usize) -> Self {
        Self {
            kind,
            d,
            amps: BTreeMap::new(),
        }
    }

    pub fn vacuum(kind: VariableKind, d: usize) -> Self {
        Self::basis(kind, d, Word::empty())
    }

    pub fn basis(kind: VariableKind, d: usize, word: Word) -> Self {
        let mut v = Self::zero(kind, d);
        v.amps.insert(word, C64::new(1.0, 0.0));
        v
    }

    fn from_accumulator(kind: VariableKind, d: usize, acc: HashMap<Word, C64>) -> Self {
        Self {
            kind,
            d,
            amps: acc.into_iter().filter(|(_, a)| *a != ZERO).collect(),
        }
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn num_vars(&self) -> usize {
        self.d
    }

    /// Number of stored (nonzero) amplitudes.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, word: &Word) -> C64 {
        self.amps.get(word).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.amps.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(C64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other>`, linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .filter_map(|(w, a)| other.amps.get(w).map(|b| a * b.conj()))
            .sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.kind, self.d);
        if c != ZERO {
            out.amps = self.amps.iter().map(|(w, a)| (w.clone(), a * c)).collect();
        }
        out
    }

    fn check_letter(&self, letter: Letter) {
        assert!(
            (1..=self.d).contains(&letter.index()),
            "letter index {} outside 1..={}",
            letter.index(),
            self.d
        );
        assert!(
            !(letter.is_starred() && self.kind == VariableKind::Semicircular),
            "semicircular alphabet has no barred letters"
        );
    }
}

/// `l(letter)`: prepends `letter` to every word.
pub fn apply_creation(letter: Letter, v: &FockVector) -> FockVector {
    v.check_letter(letter);
    FockVector {
        kind: v.kind,
        d: v.d,
        amps: v.amps.iter().map(|(w, a)| (w.prepend(letter), *a)).collect(),
    }
}

/// `l*(letter)`: strips a leading `letter`, killing words that start otherwise.
pub fn apply_annihilation(letter: Letter, v: &FockVector) -> FockVector {
    v.check_letter(letter);
    FockVector {
        kind: v.kind,
        d: v.d,
        amps: v
            .amps
            .iter()
            .filter(|(w, _)| w.first() == Some(letter))
            .map(|(w, a)| (w.tail(), *a))
            .collect(),
    }
}

/// Letter stripped by the annihilation part of the variable `letter`.
fn annihilated(kind: VariableKind, letter: Letter) -> Letter {
    match kind {
        VariableKind::Semicircular => letter,
        VariableKind::Circular => letter.adjoint(),
    }
}

/// Applies one variable (creation plus annihilation part) and accumulates
/// `coef * variable(v)` into `acc`.
fn accumulate_variable(
    kind: VariableKind,
    letter: Letter,
    v: &HashMap<Word, C64>,
    order: &[Word],
    acc: &mut HashMap<Word, C64>,
) {
    let strip = annihilated(kind, letter);
    for w in order {
        let a = v[w];
        *acc.entry(w.prepend(letter)).or_insert(ZERO) += a;
        if w.first() == Some(strip) {
            *acc.entry(w.tail()).or_insert(ZERO) += a;
        }
    }
}

fn sorted_keys(map: &HashMap<Word, C64>) -> Vec<Word> {
    let mut keys: Vec<Word> = map.keys().cloned().collect();
    keys.sort();
    keys
}

/// `p` acting on `v`, with the default amplitude budget.
pub fn apply_polynomial(p: &NCPolynomial, v: &FockVector) -> Result<FockVector> {
    apply_polynomial_with_budget(p, v, DEFAULT_BUDGET)
}

/// `p` acting on `v`. Fails if any intermediate vector would store more than
/// `budget` amplitudes.
pub fn apply_polynomial_with_budget(
    p: &NCPolynomial,
    v: &FockVector,
    budget: usize,
) -> Result<FockVector> {
    if p.kind() != v.kind || p.num_vars() != v.d {
        return Err(Error::Alphabet(format!(
            "polynomial over {:?}/{} applied to vector over {:?}/{}",
            p.kind(),
            p.num_vars(),
            v.kind,
            v.d
        )));
    }
    let start: HashMap<Word, C64> = v.amps.iter().map(|(w, a)| (w.clone(), *a)).collect();
    let mut total: HashMap<Word, C64> = HashMap::new();
    let mut level = 0;
    for (word, &coef) in p.terms() {
        let mut cur = start.clone();
        for &letter in word.letters().iter().rev() {
            level += 1;
            let order = sorted_keys(&cur);
            let mut next = HashMap::with_capacity(cur.len() * 2);
            accumulate_variable(p.kind(), letter, &cur, &order, &mut next);
            next.retain(|_, a| *a != ZERO);
            if next.len() > budget {
                return Err(Error::Budget { budget, level });
            }
            cur = next;
        }
        for w in sorted_keys(&cur) {
            *total.entry(w.clone()).or_insert(ZERO) += coef * cur[&w];
        }
        if total.len() > budget {
            return Err(Error::Budget { budget, level });
        }
    }
    Ok(FockVector::from_accumulator(v.kind, v.d, total))
}

/// Vacuum state `tau(p) = <p Omega, Omega>`.
pub fn trace(p: &NCPolynomial) -> Result<C64> {
    let v = apply_polynomial(p, &FockVector::vacuum(p.kind(), p.num_vars()))?;
    Ok(v.amplitude(&Word::empty()))
}

/// `||p||_2 = ||p Omega||`.
pub fn l2_norm(p: &NCPolynomial) -> Result<f64> {
    Ok(apply_polynomial(p, &FockVector::vacuum(p.kind(), p.num_vars()))?.norm())
}

/// One row of the spectral-radius estimator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadiusRow {
    pub n: usize,
    /// `||p^n||_2`
    pub l2_norm: f64,
    /// `||p^n||_2^{1/n}`, converging to the spectral radius.
    pub lower: f64,
    /// `((n k + 1)^{3/2} ||p^n||_2)^{1/n}`, an upper bound for every `n`.
    pub upper: f64,
    /// Amplitudes stored in `p^n Omega`.
    pub support: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusEstimate {
    pub degree: usize,
    pub rows: Vec<RadiusRow>,
    /// Set when the budget stopped the sequence before `n_max`.
    pub truncated: bool,
}

/// `||p^n||_2^{1/n}` and its Haagerup-corrected upper bound for `n = 1..=n_max`.
pub fn spectral_radius_estimate(
    p: &NCPolynomial,
    n_max: usize,
    budget: usize,
) -> Result<RadiusEstimate> {
    let k = p.degree().unwrap_or(0);
    let mut v = FockVector::vacuum(p.kind(), p.num_vars());
    let mut rows = Vec::with_capacity(n_max);
    let mut truncated = false;
    for n in 1..=n_max {
        v = match apply_polynomial_with_budget(p, &v, budget) {
            Ok(next) => next,
            Err(Error::Budget { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let norm = v.norm();
        let nf = n as f64;
        let (lower, upper) = if norm == 0.0 {
            (0.0, 0.0)
        } else {
            let log_lower = norm.ln() / nf;
            let log_upper = log_lower + 1.5 * ((n * k + 1) as f64).ln() / nf;
            (log_lower.exp(), log_upper.exp())
        };
        rows.push(RadiusRow {
            n,
            l2_norm: norm,
            lower,
            upper,
            support: v.len(),
        });
    }
    Ok(RadiusEstimate {
        degree: k,
        rows,
        truncated,
    })
}
