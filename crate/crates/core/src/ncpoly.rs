//! Non-commutative polynomials in free circular or semicircular variables.
//!
//! Text grammar (whitespace is ignored):
//!
//! ```text
//! poly   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ['^' digits]
//! atom   := number | 'i' | variable | '(' poly ')'
//! number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits] ['i']
//! variable := ('c'|'s') digit ['\'']
//! ```
//!
//! `c1'` is the adjoint of `c1`. Semicircular variables are self-adjoint, so
//! `s1'` is accepted and means `s1`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Circular,
    Semicircular,
}

impl VariableKind {
    pub fn symbol(self) -> char {
        match self {
            VariableKind::Circular => 'c',
            VariableKind::Semicircular => 's',
        }
    }
}

/// One generator (or, for circular variables, its adjoint).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    index: u8,
    starred: bool,
}

impl Letter {
    /// `index` is 1-based.
    pub fn new(index: usize, starred: bool) -> Self {
        assert!((1..=u8::MAX as usize).contains(&index), "letter index out of range");
        Self {
            index: index as u8,
            starred,
        }
    }

    pub fn plain(index: usize) -> Self {
        Self::new(index, false)
    }

    pub fn starred(index: usize) -> Self {
        Self::new(index, true)
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn is_starred(self) -> bool {
        self.starred
    }

    pub fn adjoint(self) -> Self {
        Self {
            index: self.index,
            starred: !self.starred,
        }
    }
}

/// Finite sequence of letters; the empty word is the vacuum.
///
/// Ordered graded-lexicographically: shorter words first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Self(letters)
    }

    /// Word of unstarred letters from 1-based indices.
    pub fn from_indices(indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| Letter::plain(i)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn prepend(&self, letter: Letter) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(letter);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// The word without its first letter.
    pub fn tail(&self) -> Word {
        Word(self.0.get(1..).unwrap_or_default().to_vec())
    }

    pub fn is_holomorphic(&self) -> bool {
        self.0.iter().all(|l| !l.starred)
    }

    /// Reversed word with every letter starred (formal adjoint).
    pub fn adjoint(&self, kind: VariableKind) -> Word {
        Word(
            self.0
                .iter()
                .rev()
                .map(|&l| match kind {
                    VariableKind::Circular => l.adjoint(),
                    VariableKind::Semicircular => l,
                })
                .collect(),
        )
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial with complex coefficients indexed by words.
#[derive(Clone, Debug, PartialEq)]
pub struct NCPolynomial {
    kind: VariableKind,
    d: usize,
    terms: BTreeMap<Word, C64>,
}

impl NCPolynomial {
    pub fn zero(kind: VariableKind, d: usize) -> Self {
        Self {
            kind,
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(kind: VariableKind, d: usize, c: C64) -> Self {
        let mut p = Self::zero(kind, d);
        p.add_term(Word::empty(), c);
        p
    }

    pub fn monomial(kind: VariableKind, d: usize, word: Word, c: C64) -> Result<Self> {
        let mut p = Self::zero(kind, d);
        p.check_word(&word)?;
        p.add_term(word, c);
        Ok(p)
    }

    /// The generator with 1-based `index`.
    pub fn variable(kind: VariableKind, d: usize, index: usize) -> Result<Self> {
        Self::monomial(kind, d, Word::new(vec![Letter::plain(index)]), C64::new(1.0, 0.0))
    }

    fn check_word(&self, word: &Word) -> Result<()> {
        for l in word.letters() {
            if l.index() == 0 || l.index() > self.d {
                return Err(Error::Structure(format!(
                    "variable index {} outside 1..={}",
                    l.index(),
                    self.d
                )));
            }
            if l.is_starred() && self.kind == VariableKind::Semicircular {
                return Err(Error::Structure("semicircular letters carry no star".into()));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn num_vars(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &Word) -> C64 {
        self.terms.get(word).copied().unwrap_or(ZERO)
    }

    pub fn constant_term(&self) -> C64 {
        self.coefficient(&Word::empty())
    }

    /// Adds `c` to the coefficient of `word`, dropping it if it cancels to zero.
    pub fn add_term(&mut self, word: Word, c: C64) {
        if c == ZERO {
            return;
        }
        let entry = self.terms.entry(word);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == ZERO {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// True when no adjoint letter appears.
    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(Word::is_holomorphic)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Word::len).max()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.kind != other.kind || self.d != other.d {
            return Err(Error::Alphabet(format!(
                "{:?}/{} vs {:?}/{}",
                self.kind, self.d, other.kind, other.d
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (w, &c) in &other.terms {
            out.add_term(w.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.kind, self.d);
        for (w1, &c1) in &self.terms {
            for (w2, &c2) in &other.terms {
                out.add_term(w1.concat(w2), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<Self> {
        let mut out = Self::constant(self.kind, self.d, C64::new(1.0, 0.0));
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.kind, self.d);
        for (w, &a) in &self.terms {
            out.add_term(w.clone(), a * c);
        }
        out
    }

    /// Formal adjoint: reversed words, starred letters, conjugated coefficients.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.kind, self.d);
        for (w, &a) in &self.terms {
            out.add_term(w.adjoint(self.kind), a.conj());
        }
        out
    }

    /// Common length of all words, if every word has the same nonzero length.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut lens = self.terms.keys().map(Word::len);
        let first = lens.next()?;
        (first > 0 && lens.all(|l| l == first)).then_some(first)
    }

    /// `sqrt(sum |coef|^2)` over all stored terms.
    pub fn coefficient_l2(&self) -> f64 {
        self.terms.values().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Splits off the data of a quadratic polynomial in two circular variables.
    pub fn extract_quadratic(&self) -> Result<QuadraticForm> {
        if self.kind != VariableKind::Circular {
            return Err(Error::Structure("quadratic form needs circular variables".into()));
        }
        if self.d != 2 {
            return Err(Error::Structure(format!(
                "quadratic form needs exactly 2 variables, got {}",
                self.d
            )));
        }
        if !self.is_holomorphic() {
            return Err(Error::Structure("quadratic form must not contain adjoints".into()));
        }
        if self.degree().unwrap_or(0) > 2 {
            return Err(Error::Structure("degree exceeds 2".into()));
        }
        let mut form = QuadraticForm::default();
        for (w, &c) in &self.terms {
            let idx: Vec<usize> = w.letters().iter().map(|l| l.index() - 1).collect();
            match idx.as_slice() {
                [] => form.c0 = c,
                [i] => form.b[*i] = c,
                [i, j] => form.a[*i][*j] = c,
                _ => unreachable!(),
            }
        }
        Ok(form)
    }

    /// Parses the textual grammar described in the module docs.
    pub fn parse(text: &str, d: usize, kind: VariableKind) -> Result<Self> {
        let mut parser = Parser {
            bytes: text.as_bytes(),
            pos: 0,
            d,
            kind,
        };
        let p = parser.poly()?;
        parser.skip_ws();
        if parser.pos < parser.bytes.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(p)
    }
}

/// `f = sum a_ij c_i c_j + sum b_i c_i + c0` in two circular variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct QuadraticForm {
    pub a: [[C64; 2]; 2],
    pub b: [C64; 2],
    pub c0: C64,
}

impl QuadraticForm {
    pub fn new(a: [[C64; 2]; 2], b: [C64; 2], c0: C64) -> Self {
        Self { a, b, c0 }
    }

    pub fn rebuild(&self) -> NCPolynomial {
        let mut p = NCPolynomial::constant(VariableKind::Circular, 2, self.c0);
        for i in 0..2 {
            p.add_term(Word::from_indices(&[i + 1]), self.b[i]);
            for j in 0..2 {
                p.add_term(Word::from_indices(&[i + 1, j + 1]), self.a[i][j]);
            }
        }
        p
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    d: usize,
    kind: VariableKind,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn one(&self) -> NCPolynomial {
        NCPolynomial::constant(self.kind, self.d, C64::new(1.0, 0.0))
    }

    fn poly(&mut self) -> Result<NCPolynomial> {
        let mut acc = NCPolynomial::zero(self.kind, self.d);
        let mut sign = 1.0;
        match self.peek() {
            Some(b'+') => self.pos += 1,
            Some(b'-') => {
                self.pos += 1;
                sign = -1.0;
            }
            _ => {}
        }
        loop {
            let t = self.term()?;
            acc = acc.add(&t.scale(C64::new(sign, 0.0)))?;
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    sign = 1.0;
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = -1.0;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NCPolynomial> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.factor()?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<NCPolynomial> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
            let n: u32 = digits.parse().map_err(|_| Error::Parse {
                pos: start,
                msg: "expected integer exponent".into(),
            })?;
            return base.pow(n);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<NCPolynomial> {
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.poly()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b'i') => {
                self.pos += 1;
                Ok(self.one().scale(C64::new(0.0, 1.0)))
            }
            Some(c @ (b'c' | b's')) => {
                if c != self.kind.symbol() as u8 {
                    return Err(self.error(&format!(
                        "variable '{}' does not match {:?} variables",
                        c as char, self.kind
                    )));
                }
                self.pos += 1;
                let digit_pos = self.pos;
                let index = match self.bytes.get(self.pos) {
                    Some(b) if b.is_ascii_digit() && *b != b'0' => (b - b'0') as usize,
                    _ => {
                        return Err(Error::Parse {
                            pos: digit_pos,
                            msg: "expected variable index 1-9".into(),
                        })
                    }
                };
                self.pos += 1;
                if index > self.d {
                    return Err(Error::Parse {
                        pos: digit_pos,
                        msg: format!("variable index {index} exceeds d = {}", self.d),
                    });
                }
                let mut starred = false;
                if self.peek() == Some(b'\'') {
                    self.pos += 1;
                    starred = self.kind == VariableKind::Circular;
                }
                NCPolynomial::monomial(
                    self.kind,
                    self.d,
                    Word::new(vec![Letter::new(index, starred)]),
                    C64::new(1.0, 0.0),
                )
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(Error::Parse {
                pos: start,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<NCPolynomial> {
        let start = self.pos;
        let b = self.bytes;
        let digits = |pos: &mut usize| {
            let s = *pos;
            while *pos < b.len() && b[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos > s
        };
        let mut pos = self.pos;
        let mut any = digits(&mut pos);
        if pos < b.len() && b[pos] == b'.' {
            pos += 1;
            any |= digits(&mut pos);
        }
        if !any {
            return Err(self.error("malformed number"));
        }
        if pos < b.len() && (b[pos] == b'e' || b[pos] == b'E') {
            let mut p = pos + 1;
            if p < b.len() && (b[p] == b'+' || b[p] == b'-') {
                p += 1;
            }
            if digits(&mut p) {
                pos = p;
            } else {
                return Err(Error::Parse {
                    pos,
                    msg: "malformed exponent".into(),
                });
            }
        }
        let text = std::str::from_utf8(&b[start..pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            pos: start,
            msg: format!("malformed coefficient '{text}'"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                pos: start,
                msg: format!("coefficient '{text}' is not finite"),
            });
        }
        let mut c = C64::new(value, 0.0);
        if pos < b.len() && b[pos] == b'i' {
            pos += 1;
            c = C64::new(0.0, value);
        }
        self.pos = pos;
        Ok(self.one().scale(c))
    }
}

fn fmt_word(f: &mut fmt::Formatter<'_>, w: &Word, kind: VariableKind) -> fmt::Result {
    let letters = w.letters();
    let mut i = 0;
    let mut first = true;
    while i < letters.len() {
        let l = letters[i];
        let mut run = 1;
        while i + run < letters.len() && letters[i + run] == l {
            run += 1;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write!(f, "{}{}", kind.symbol(), l.index())?;
        if l.is_starred() {
            write!(f, "'")?;
        }
        if run > 1 {
            write!(f, "^{run}")?;
        }
        i += run;
    }
    Ok(())
}

impl fmt::Display for NCPolynomial {
    /// Prints in canonical (graded lexicographic) order; the output parses
    /// back to the same polynomial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (w, c)) in self.terms.iter().enumerate() {
            let (negative, coef) = if c.im == 0.0 {
                (c.re < 0.0, format!("{}", c.re.abs()))
            } else if c.re == 0.0 {
                (c.im < 0.0, format!("{}i", c.im.abs()))
            } else {
                let sign = if c.im < 0.0 { '-' } else { '+' };
                (false, format!("({}{}{}i)", c.re, sign, c.im.abs()))
            };
            match (n, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let unit = coef == "1";
            if w.is_empty() {
                write!(f, "{coef}")?;
            } else {
                if !unit {
                    write!(f, "{coef}*")?;
                }
                fmt_word(f, w, self.kind)?;
            }
        }
        Ok(())
    }
}
