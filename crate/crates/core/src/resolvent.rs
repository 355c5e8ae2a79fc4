//! Resolvent membership for holomorphic polynomials in free circular variables.
//!
//! Writing `(lambda - f)^{-1} Omega = sum_w alpha_w u_w` over holomorphic words,
//! the equation `(lambda - f) sum alpha_w u_w = Omega` fixes the coefficients
//! level by level:
//!
//! ```text
//! (lambda - c0) alpha_w = [w = Omega] + sum_{v nonempty prefix of w} a_v alpha_{w \ v}
//! ```
//!
//! `lambda` is in the resolvent set iff the level sums
//! `a_n = sum_{|w| = n} |alpha_w|^2` tend to zero, and in that case they decay
//! geometrically. The oracle estimates the tail ratio of `a_n`.
//!
//! Levels are stored densely: a word `w = l_1 ... l_n` over `d` letters sits at
//! index `sum (l_i - 1) d^{n - i}`, so the words sharing a prefix `v` form one
//! contiguous block and each prefix term updates a block at once.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::DEFAULT_BUDGET;
use crate::linalg::C64;
use crate::ncpoly::{NCPolynomial, VariableKind, Word};
use crate::verdict::{Diagnostics, MembershipVerdict, Verdict};

pub const DEFAULT_WINDOW: usize = 6;
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_LEVELS: usize = 60;
/// Level sums beyond this count as divergence.
pub const OVERFLOW_BOUND: f64 = 1e200;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug)]
struct PrefixTerm {
    len: usize,
    index: usize,
    coef: C64,
}

/// Compiled polynomial: constant term plus the nonconstant prefixes.
#[derive(Clone, Debug)]
struct LevelProgram {
    d: usize,
    c0: C64,
    inv_shifted: C64,
    terms: Vec<PrefixTerm>,
    max_len: usize,
    stride: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn word_index(word: &Word, d: usize) -> usize {
    word.letters().iter().fold(0, |acc, l| acc * d + (l.index() - 1))
}

fn level_size(d: usize, n: usize) -> Option<usize> {
    d.checked_pow(n as u32)
}

impl LevelProgram {
    fn compile(p: &NCPolynomial) -> Result<Self> {
        if p.kind() != VariableKind::Circular {
            return Err(Error::Structure("resolvent oracle needs circular variables".into()));
        }
        if !p.is_holomorphic() {
            return Err(Error::Structure(
                "resolvent oracle handles polynomials without adjoints only".into(),
            ));
        }
        let d = p.num_vars();
        let terms: Vec<PrefixTerm> = p
            .terms()
            .filter(|(w, _)| !w.is_empty())
            .map(|(w, &coef)| PrefixTerm {
                len: w.len(),
                index: word_index(w, d),
                coef,
            })
            .collect();
        if terms.is_empty() {
            return Err(Error::Structure("polynomial has no nonconstant term".into()));
        }
        let max_len = terms.iter().map(|t| t.len).max().unwrap();
        let stride = terms.iter().fold(0, |g, t| gcd(g, t.len));
        Ok(Self {
            d,
            c0: p.constant_term(),
            inv_shifted: ZERO,
            terms,
            max_len,
            stride,
        })
    }

    fn at(mut self, lambda: C64) -> Result<Self> {
        let shifted = lambda - self.c0;
        if shifted == ZERO {
            return Err(Error::ShiftDegenerate);
        }
        self.inv_shifted = shifted.inv();
        Ok(self)
    }

    /// Level `n >= 1` from the previous levels; `prev(m)` returns level `n - m`.
    fn level<'a>(&self, n: usize, prev: impl Fn(usize) -> &'a [C64]) -> Vec<C64> {
        let size = level_size(self.d, n).expect("level size checked by caller");
        let mut out = vec![ZERO; size];
        for t in &self.terms {
            if t.len > n {
                continue;
            }
            let src = prev(t.len);
            let base = t.index * src.len();
            for (o, s) in out[base..base + src.len()].iter_mut().zip(src) {
                *o += t.coef * s;
            }
        }
        for o in &mut out {
            *o *= self.inv_shifted;
        }
        out
    }
}

/// Coefficients `alpha_w` for every holomorphic word up to a level.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    lambda: C64,
    poly: NCPolynomial,
    stride: usize,
    levels: Vec<Vec<C64>>,
}

impl CoefficientTable {
    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn polynomial(&self) -> &NCPolynomial {
        &self.poly
    }

    /// Highest computed level.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Dense coefficients of level `n`, in word-index order.
    pub fn level(&self, n: usize) -> &[C64] {
        &self.levels[n]
    }

    /// `alpha_w`; zero for words with adjoint letters.
    ///
    /// Panics if `w` is longer than the computed levels.
    pub fn alpha(&self, w: &Word) -> C64 {
        if !w.is_holomorphic() {
            return ZERO;
        }
        self.levels[w.len()][word_index(w, self.poly.num_vars())]
    }

    /// Largest relative residual `|r_w| / (1 + |alpha_w|)` of the defining
    /// relation, evaluated word by word through the polynomial's term map.
    pub fn max_residual(&self) -> f64 {
        let d = self.poly.num_vars();
        let shifted = self.lambda - self.poly.constant_term();
        let mut worst: f64 = 0.0;
        for (n, level) in self.levels.iter().enumerate() {
            for (idx, &alpha) in level.iter().enumerate() {
                let mut r = shifted * alpha - if n == 0 { C64::new(1.0, 0.0) } else { ZERO };
                for m in 1..=n {
                    let block = d.pow((n - m) as u32);
                    let prefix = idx / block;
                    let digits: Vec<usize> = (0..m)
                        .rev()
                        .map(|k| prefix / d.pow(k as u32) % d + 1)
                        .collect();
                    let a = self.poly.coefficient(&Word::from_indices(&digits));
                    if a != ZERO {
                        r -= a * self.levels[n - m][idx % block];
                    }
                }
                worst = worst.max(r.norm() / (1.0 + alpha.norm()));
            }
        }
        worst
    }
}

/// Solves the coefficient recursion through level `n_levels`.
pub fn solve_alpha(p: &NCPolynomial, lambda: C64, n_levels: usize) -> Result<CoefficientTable> {
    solve_alpha_with_budget(p, lambda, n_levels, DEFAULT_BUDGET)
}

/// As [`solve_alpha`], failing when the table would hold more than `budget`
/// coefficients.
pub fn solve_alpha_with_budget(
    p: &NCPolynomial,
    lambda: C64,
    n_levels: usize,
    budget: usize,
) -> Result<CoefficientTable> {
    let prog = LevelProgram::compile(p)?.at(lambda)?;
    let mut stored = 0usize;
    for n in 0..=n_levels {
        stored = level_size(prog.d, n)
            .and_then(|s| stored.checked_add(s))
            .filter(|&s| s <= budget)
            .ok_or(Error::Budget { budget, level: n })?;
    }
    let mut levels: Vec<Vec<C64>> = vec![vec![prog.inv_shifted]];
    for n in 1..=n_levels {
        let next = prog.level(n, |m| levels[n - m].as_slice());
        levels.push(next);
    }
    Ok(CoefficientTable {
        lambda,
        poly: p.clone(),
        stride: prog.stride,
        levels,
    })
}

/// `a_n = sum_{|w| = n} |alpha_w|^2` for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSums {
    pub values: Vec<f64>,
    /// Nonzero levels are multiples of this (gcd of the word lengths).
    pub stride: usize,
}

impl LevelSums {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, stride: 1 }
    }

    pub fn with_stride(values: Vec<f64>, stride: usize) -> Self {
        Self {
            values,
            stride: stride.max(1),
        }
    }
}

fn squared_sum(level: &[C64]) -> f64 {
    level.iter().map(C64::norm_sqr).sum()
}

pub fn level_sums(table: &CoefficientTable) -> LevelSums {
    LevelSums::with_stride(table.levels.iter().map(|l| squared_sum(l)).collect(), table.stride)
}

fn aligned_window(sums: &LevelSums, window: usize) -> usize {
    let s = sums.stride.max(1);
    s * window.div_ceil(s)
}

/// Classifies the tail of the level sums.
///
/// The tail ratio compares the last nonvanishing level with the one
/// `window` levels earlier (rounded up to the stride so both are in the
/// support).
pub fn classify_decay(sums: &LevelSums, window: usize, margin: f64) -> Result<MembershipVerdict> {
    let window = window.max(3);
    let a = &sums.values;
    let s = sums.stride.max(1);
    let w = aligned_window(sums, window);
    if a.len() < 2 * window || a.is_empty() || (a.len() - 1) / s * s < w {
        return Err(Error::Structure(format!(
            "decay classification needs at least {} levels, got {}",
            (2 * window).max(w + 1),
            a.len()
        )));
    }
    let partial: f64 = a.iter().sum();
    let mut diag = Diagnostics {
        method: Some("resolvent"),
        levels: Some(a.len() - 1),
        resolvent_norm_sq: Some(partial),
        ..Default::default()
    };
    if a.iter().any(|x| !x.is_finite() || *x > OVERFLOW_BOUND) {
        diag.decay_ratio = Some(f64::INFINITY);
        return Ok(MembershipVerdict::new(Verdict::Spectrum, diag));
    }
    let last = (a.len() - 1) / s * s;
    let (late, early) = (a[last], a[last - w]);
    let peak = a.iter().copied().fold(0.0, f64::max);
    let ratio = if late == 0.0 {
        0.0
    } else if early == 0.0 {
        f64::INFINITY
    } else {
        (late / early).powf(1.0 / w as f64)
    };
    diag.decay_ratio = Some(ratio);
    let verdict = if late == 0.0 || (ratio < 1.0 - margin && late < peak) {
        Verdict::Resolvent
    } else if ratio > 1.0 + margin {
        Verdict::Spectrum
    } else {
        Verdict::BoundaryUncertain
    };
    Ok(MembershipVerdict::new(verdict, diag))
}

/// Decides membership of `lambda` by streaming levels until the decay
/// classification is conclusive, `n_levels` is reached, or the next level
/// would exceed the memory budget.
pub fn membership_oracle(
    p: &NCPolynomial,
    lambda: C64,
    n_levels: usize,
    window: usize,
    margin: f64,
) -> Result<MembershipVerdict> {
    membership_oracle_with_budget(p, lambda, n_levels, window, margin, DEFAULT_BUDGET)
}

pub fn membership_oracle_with_budget(
    p: &NCPolynomial,
    lambda: C64,
    n_levels: usize,
    window: usize,
    margin: f64,
    budget: usize,
) -> Result<MembershipVerdict> {
    let prog = match LevelProgram::compile(p)?.at(lambda) {
        Ok(prog) => prog,
        Err(Error::ShiftDegenerate) => {
            return Ok(MembershipVerdict::bare(Verdict::Spectrum, "resolvent"));
        }
        Err(e) => return Err(e),
    };
    let window = window.max(3);
    let mut sums = LevelSums::with_stride(vec![prog.inv_shifted.norm_sqr()], prog.stride);
    let w = aligned_window(&sums, window);
    let min_levels = (2 * window).max(w + prog.stride);
    if n_levels < min_levels {
        return Err(Error::Structure(format!(
            "oracle needs at least {min_levels} levels, got {n_levels}"
        )));
    }
    let mut recent: VecDeque<Vec<C64>> = VecDeque::with_capacity(prog.max_len + 1);
    recent.push_back(vec![prog.inv_shifted]);
    let mut last_verdict = None;
    for n in 1..=n_levels {
        if level_size(prog.d, n).map_or(true, |s| s > budget) {
            let mut v = match last_verdict {
                Some(v) => v,
                None => classify_decay(&sums, window, margin).unwrap_or_else(|_| {
                    MembershipVerdict::bare(Verdict::BoundaryUncertain, "resolvent")
                }),
            };
            v.diagnostics.truncated = true;
            return Ok(v);
        }
        let next = prog.level(n, |m| recent[recent.len() - m].as_slice());
        sums.values.push(squared_sum(&next));
        recent.push_back(next);
        if recent.len() > prog.max_len {
            recent.pop_front();
        }
        if n >= min_levels && n % prog.stride == 0 {
            let v = classify_decay(&sums, window, margin)?;
            if v.is_conclusive() {
                return Ok(v);
            }
            last_verdict = Some(v);
        }
    }
    match last_verdict {
        Some(v) => Ok(v),
        None => classify_decay(&sums, window, margin),
    }
}
