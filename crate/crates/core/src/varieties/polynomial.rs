//! Sparse multivariate polynomials over `F_q`, with a text grammar.
//!
//! ```text
//! poly   := ['-'] term (('+' | '-') term)*
//! term   := k | [k '*'] factor ('*' factor)*
//! factor := 'x' i ['^' e]
//! ```
//!
//! `k` is a decimal integer read as the field element with encoding `k mod q`, `i` is a
//! 1-based variable index and `e >= 1`. Whitespace is ignored.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::field::{Elem, Field};
use crate::fourier::{decode_index, grid_len};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable x{index} out of range for dimension {d} (indices are 1-based)")]
    VariableOutOfRange { index: usize, d: usize },
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("polynomial is a nonzero constant; total degree must be at least 1")]
    ConstantPolynomial,
    #[error("expected a point with {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("polynomial is over a different field")]
    MixedFields,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: Elem,
    pub exponents: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyKind {
    /// Exactly one term `a_j x_j^{c_j}` per variable, `c_j >= 1`, and nothing else.
    Diagonal,
    General,
}

#[derive(Debug, Clone)]
pub struct Polynomial {
    field: Field,
    d: usize,
    terms: Vec<Term>,
    kind: PolyKind,
}

impl Polynomial {
    /// Collects like terms, drops zero coefficients and classifies the result.
    pub fn new(field: &Field, d: usize, terms: Vec<Term>) -> Result<Self, PolyError> {
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.exponents.len() != d {
                return Err(PolyError::ArityMismatch {
                    expected: d,
                    got: t.exponents.len(),
                });
            }
            match merged.iter_mut().find(|m| m.exponents == t.exponents) {
                Some(m) => m.coeff = field.add(m.coeff, t.coeff),
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Elem::ZERO);
        if merged.is_empty() {
            return Err(PolyError::ZeroPolynomial);
        }
        if merged.iter().all(|t| t.degree() == 0) {
            return Err(PolyError::ConstantPolynomial);
        }
        merged.sort_by(|a, b| b.exponents.cmp(&a.exponents));
        let kind = classify(d, &merged);
        Ok(Self {
            field: field.clone(),
            d,
            terms: merged,
            kind,
        })
    }

    pub fn parse(text: &str, field: &Field, d: usize) -> Result<Self, PolyError> {
        let terms = Parser::new(text, field, d).parse()?;
        Self::new(field, d, terms)
    }

    /// Univariate polynomial from dense coefficients, constant term first.
    pub fn univariate(field: &Field, coeffs: &[Elem]) -> Result<Self, PolyError> {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(e, &c)| Term {
                coeff: c,
                exponents: vec![e as u32],
            })
            .collect();
        Self::new(field, 1, terms)
    }

    /// `sum_j a_j x_j^s`.
    pub fn diagonal_power(field: &Field, coeffs: &[Elem], s: u32) -> Result<Self, PolyError> {
        let d = coeffs.len();
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let mut exponents = vec![0; d];
                exponents[j] = s;
                Term {
                    coeff: c,
                    exponents,
                }
            })
            .collect();
        Self::new(field, d, terms)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn arity(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn kind(&self) -> PolyKind {
        self.kind
    }

    pub fn is_diagonal(&self) -> bool {
        self.kind == PolyKind::Diagonal
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// `(a_j, c_j)` per variable, in variable order, for diagonal polynomials.
    pub fn diagonal_terms(&self) -> Option<Vec<(Elem, u32)>> {
        if !self.is_diagonal() {
            return None;
        }
        let mut out = vec![(Elem::ZERO, 0); self.d];
        for t in &self.terms {
            let (j, &e) = t.exponents.iter().enumerate().find(|(_, &e)| e > 0)?;
            out[j] = (t.coeff, e);
        }
        Some(out)
    }

    /// The shared exponent `s` when the polynomial is `sum_j a_j x_j^s`.
    pub fn common_exponent(&self) -> Option<u32> {
        let diag = self.diagonal_terms()?;
        let s = diag[0].1;
        diag.iter().all(|&(_, e)| e == s).then_some(s)
    }

    /// `P(-u) = P(u)` for all `u`: every monomial has even total degree, or characteristic 2.
    pub fn is_even(&self) -> bool {
        self.field.p() == 2 || self.terms.iter().all(|t| t.degree() % 2 == 0)
    }

    pub fn evaluate(&self, x: &[Elem]) -> Result<Elem, PolyError> {
        if x.len() != self.d {
            return Err(PolyError::ArityMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Evaluation without the arity check.
    #[inline]
    pub fn eval(&self, x: &[Elem]) -> Elem {
        let f = &self.field;
        self.terms.iter().fold(Elem::ZERO, |acc, t| {
            let mono = t.exponents.iter().zip(x).fold(t.coeff, |m, (&e, &xi)| {
                if e == 0 {
                    m
                } else {
                    f.mul(m, f.pow(xi, e as u64))
                }
            });
            f.add(acc, mono)
        })
    }

    /// `P(x)` at every point of `F_q^d`, indexed by point encoding.
    pub fn value_grid(&self) -> Vec<Elem> {
        let q = self.field.q();
        let len = grid_len(q, self.d).expect("grid size overflows usize");
        // Diagonal polynomials separate: P(x) = sum_j g_j(x_j).
        if let Some(diag) = self.diagonal_terms() {
            let f = &self.field;
            let tables: Vec<Vec<Elem>> = diag
                .iter()
                .map(|&(a, c)| f.elements().map(|x| f.mul(a, f.pow(x, c as u64))).collect())
                .collect();
            let mut out = vec![Elem::ZERO; len];
            let mut stride = 1usize;
            for table in &tables {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = f.add(*v, table[(i / stride) % q as usize]);
                }
                stride *= q as usize;
            }
            return out;
        }
        (0..len)
            .map(|i| self.eval(&decode_index(q, self.d, i)))
            .collect()
    }

    /// `H(x, x_{d+1}) = P(x) - x_{d+1}`.
    pub fn paraboloid_lift(&self) -> Polynomial {
        let d = self.d + 1;
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .map(|t| {
                let mut exponents = t.exponents.clone();
                exponents.push(0);
                Term {
                    coeff: t.coeff,
                    exponents,
                }
            })
            .collect();
        let mut last = vec![0; d];
        last[d - 1] = 1;
        terms.push(Term {
            coeff: self.field.neg(Elem::ONE),
            exponents: last,
        });
        Polynomial::new(&self.field, d, terms)
            .expect("lift of a nonconstant polynomial is nonconstant")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let vars: Vec<String> = t
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("x{}", j + 1)
                    } else {
                        format!("x{}^{e}", j + 1)
                    }
                })
                .collect();
            match (t.coeff.0, vars.is_empty()) {
                (c, true) => write!(f, "{c}")?,
                (1, false) => f.write_str(&vars.join("*"))?,
                (c, false) => write!(f, "{c}*{}", vars.join("*"))?,
            }
        }
        Ok(())
    }
}

fn classify(d: usize, terms: &[Term]) -> PolyKind {
    if terms.len() != d {
        return PolyKind::General;
    }
    let mut seen = vec![false; d];
    for t in terms {
        let mut vars = t.exponents.iter().enumerate().filter(|(_, &e)| e > 0);
        match (vars.next(), vars.next()) {
            (Some((j, _)), None) if !seen[j] => seen[j] = true,
            _ => return PolyKind::General,
        }
    }
    PolyKind::Diagonal
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    field: &'a Field,
    d: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &str, field: &'a Field, d: usize) -> Self {
        let chars = text
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        Self {
            chars,
            pos: 0,
            field,
            d,
        }
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or_else(
            || self.chars.last().map_or(0, |&(i, c)| i + c.len_utf8()),
            |&(i, _)| i,
        )
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<Option<u64>, PolyError> {
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            value = match value
                .checked_mul(10)
                .and_then(|v| v.checked_add(c as u64 - '0' as u64))
            {
                Some(v) => v,
                None => return self.err("integer literal too large"),
            };
            self.pos += 1;
        }
        Ok((self.pos > start).then_some(value))
    }

    fn parse(mut self) -> Result<Vec<Term>, PolyError> {
        if self.chars.is_empty() {
            return self.err("empty polynomial");
        }
        let mut terms = Vec::new();
        let mut negative = self.eat('-');
        loop {
            let mut term = self.term()?;
            if negative {
                term.coeff = self.field.neg(term.coeff);
            }
            terms.push(term);
            match self.peek() {
                None => break,
                Some('+') => negative = false,
                Some('-') => negative = true,
                Some(c) => return self.err(format!("unexpected '{c}'")),
            }
            self.pos += 1;
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<Term, PolyError> {
        let mut exponents = vec![0u32; self.d];
        let coeff = match self.number()? {
            Some(k) => {
                let c = self.field.reduce(k);
                if !self.eat('*') {
                    return Ok(Term {
                        coeff: c,
                        exponents,
                    });
                }
                c
            }
            None => Elem::ONE,
        };
        loop {
            self.factor(&mut exponents)?;
            if !self.eat('*') {
                break;
            }
        }
        Ok(Term { coeff, exponents })
    }

    fn factor(&mut self, exponents: &mut [u32]) -> Result<(), PolyError> {
        if !self.eat('x') {
            return self.err("expected a variable x<i>");
        }
        let Some(index) = self.number()? else {
            return self.err("expected a variable index after 'x'");
        };
        let index = index as usize;
        if index == 0 || index > self.d {
            return Err(PolyError::VariableOutOfRange { index, d: self.d });
        }
        let e = if self.eat('^') {
            match self.number()? {
                Some(e) if e >= 1 && e <= u32::MAX as u64 => e as u32,
                Some(_) => return self.err("exponent must be a positive integer"),
                None => return self.err("expected an exponent after '^'"),
            }
        } else {
            1
        };
        exponents[index - 1] += e;
        Ok(())
    }
}
