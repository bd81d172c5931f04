//! Arithmetic in `F_q = F_{p^n}` for `n <= 4` and the canonical additive character.
//!
//! An element is stored as a single integer in `[0, q)`: the base-`p` digits of the
//! encoding are the coefficients of the residue polynomial, constant term first.
//! Multiplication goes through discrete log / exponent tables built once per field,
//! and the character `chi(a) = exp(2 pi i Tr(a) / p)` is tabulated as well, so that
//! every downstream sum is table lookups only.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 4;
/// Largest supported field size; per-field tables are `O(q)`.
pub const MAX_ORDER: u64 = 1 << 20;
/// Dense `q x q` character matrices are only cached below this size.
const CHAR_MATRIX_LIMIT: u32 = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("extension degree {0} out of range 1..={MAX_DEGREE}")]
    DegreeOutOfRange(u32),
    #[error("modulus {0:?} is reducible over the prime field")]
    ReducibleModulus(Vec<u32>),
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("field of order {0} exceeds the supported maximum {MAX_ORDER}")]
    FieldTooLarge(u64),
    #[error("operands belong to different fields")]
    MixedFields,
    #[error("element encoding {0} is out of range for a field of order {1}")]
    ElementOutOfRange(u64, u32),
}

/// Encoded field element. Only meaningful together with the [`FieldSpec`] it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
#[repr(transparent)]
pub struct Elem(pub u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shared handle to a field; every grid, set and polynomial keeps one.
pub type Field = Arc<FieldSpec>;

pub struct FieldSpec {
    p: u32,
    n: u32,
    q: u32,
    modulus: Option<Vec<u32>>,
    /// `p^i` for `i in 0..=n`.
    digit_weight: Vec<u32>,
    /// `exp[k] = g^k` for `k in 0..2(q-1)`.
    exp: Vec<u32>,
    /// `log[a]` for `a != 0`; `log[0]` is unused.
    log: Vec<u32>,
    trace: Vec<u32>,
    chars: Vec<Complex64>,
    char_matrix: OnceLock<Option<Vec<Complex64>>>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.n == other.n && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

/// Builds and validates `F_{p^n}`, choosing a modulus when none is given.
pub fn make_field(p: u64, n: u32, modulus: Option<&[u32]>) -> Result<Field, FieldError> {
    FieldSpec::new(p, n, modulus).map(Arc::new)
}

/// Same field check used by every checked entry point.
pub fn same_field(a: &Field, b: &Field) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn new(p: u64, n: u32, modulus: Option<&[u32]>) -> Result<Self, FieldError> {
        if !(1..=MAX_DEGREE).contains(&n) {
            return Err(FieldError::DegreeOutOfRange(n));
        }
        if !is_prime(p) {
            return Err(FieldError::NonPrime(p));
        }
        let q = p
            .checked_pow(n)
            .filter(|&q| q <= MAX_ORDER)
            .ok_or(FieldError::FieldTooLarge(p.saturating_pow(n)))?;
        let p = p as u32;
        let q = q as u32;

        let modulus = if n == 1 {
            if let Some(m) = modulus {
                // Accept the trivial modulus x - c only as a formality; F_p needs none.
                if m.len() != 2 || m[1] != 1 {
                    return Err(FieldError::InvalidModulus(format!(
                        "prime field takes no modulus beyond a monic linear one, got {m:?}"
                    )));
                }
            }
            None
        } else {
            let m = match modulus {
                Some(m) => {
                    if m.len() != n as usize + 1 {
                        return Err(FieldError::InvalidModulus(format!(
                            "expected {} coefficients, got {}",
                            n + 1,
                            m.len()
                        )));
                    }
                    let m: Vec<u32> = m.iter().map(|&c| c % p).collect();
                    if m[n as usize] != 1 {
                        return Err(FieldError::InvalidModulus(format!("{m:?} is not monic")));
                    }
                    if !is_irreducible(p, &m) {
                        return Err(FieldError::ReducibleModulus(m));
                    }
                    m
                }
                None => smallest_irreducible(p, n),
            };
            Some(m)
        };

        let digit_weight: Vec<u32> = (0..=n).map(|i| p.pow(i)).collect();
        let mut field = FieldSpec {
            p,
            n,
            q,
            modulus,
            digit_weight,
            exp: Vec::new(),
            log: Vec::new(),
            trace: Vec::new(),
            chars: Vec::new(),
            char_matrix: OnceLock::new(),
        };
        field.build_tables();
        Ok(field)
    }

    fn build_tables(&mut self) {
        let q = self.q;
        let order = q - 1;
        let mut exp = vec![0u32; 2 * order as usize];
        let mut log = vec![0u32; q as usize];
        'search: for g in 1..q {
            let mut x = 1u32;
            for k in 0..order {
                if k > 0 && x == 1 {
                    continue 'search;
                }
                exp[k as usize] = x;
                x = self.slow_mul(x, g);
            }
            if x != 1 {
                continue;
            }
            break;
        }
        for k in 0..order as usize {
            exp[k + order as usize] = exp[k];
            log[exp[k] as usize] = k as u32;
        }
        self.exp = exp;
        self.log = log;

        let p = self.p;
        self.trace = (0..q)
            .map(|a| {
                let mut sum = 0u32;
                let mut conj = a;
                for _ in 0..self.n {
                    sum = self.add(Elem(sum), Elem(conj)).0;
                    conj = self.pow(Elem(conj), p as u64).0;
                }
                debug_assert!(sum < p, "trace left the prime subfield");
                sum
            })
            .collect();
        self.chars = self
            .trace
            .iter()
            .map(|&t| Complex64::from_polar(1.0, TAU * t as f64 / p as f64))
            .collect();
    }

    /// Schoolbook product `a * b mod modulus`, used only while building the tables.
    fn slow_mul(&self, a: u32, b: u32) -> u32 {
        let p = self.p as u64;
        let Some(modulus) = &self.modulus else {
            return ((a as u64 * b as u64) % p) as u32;
        };
        let n = self.n as usize;
        let da = self.digits(Elem(a));
        let db = self.digits(Elem(b));
        let mut prod = vec![0u64; 2 * n - 1];
        for i in 0..n {
            for j in 0..n {
                prod[i + j] = (prod[i + j] + da[i] as u64 * db[j] as u64) % p;
            }
        }
        for deg in (n..2 * n - 1).rev() {
            let lead = prod[deg];
            if lead == 0 {
                continue;
            }
            for (k, &c) in modulus.iter().enumerate().take(n) {
                let idx = deg - n + k;
                prod[idx] = (prod[idx] + (p - lead) * c as u64) % p;
            }
            prod[deg] = 0;
        }
        self.from_digits(prod[..n].iter().map(|&c| c as u32)).0
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Monic modulus coefficients, constant term first; `None` for prime fields.
    pub fn modulus(&self) -> Option<&[u32]> {
        self.modulus.as_deref()
    }

    /// Unit complex values `chi(a)` indexed by encoding.
    pub fn char_table(&self) -> &[Complex64] {
        &self.chars
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.q).map(Elem)
    }

    pub fn element(&self, encoding: u64) -> Result<Elem, FieldError> {
        if encoding < self.q as u64 {
            Ok(Elem(encoding as u32))
        } else {
            Err(FieldError::ElementOutOfRange(encoding, self.q))
        }
    }

    /// Integer reduced into the field by encoding, `k mod q`.
    pub fn reduce(&self, k: u64) -> Elem {
        Elem((k % self.q as u64) as u32)
    }

    /// Coefficient vector of `a` (length `n`, constant term first).
    pub fn digits(&self, a: Elem) -> Vec<u32> {
        let p = self.p;
        let mut v = a.0;
        (0..self.n)
            .map(|_| {
                let d = v % p;
                v /= p;
                d
            })
            .collect()
    }

    pub fn from_digits(&self, digits: impl IntoIterator<Item = u32>) -> Elem {
        Elem(
            digits
                .into_iter()
                .zip(&self.digit_weight)
                .map(|(d, w)| (d % self.p) * w)
                .sum(),
        )
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let p = self.p;
        if self.n == 1 {
            let s = a.0 + b.0;
            return Elem(if s >= p { s - p } else { s });
        }
        let (mut x, mut y, mut out) = (a.0, b.0, 0u32);
        for w in &self.digit_weight[..self.n as usize] {
            let s = x % p + y % p;
            out += if s >= p { s - p } else { s } * w;
            x /= p;
            y /= p;
        }
        Elem(out)
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        let p = self.p;
        if self.n == 1 {
            return Elem(if a.0 == 0 { 0 } else { p - a.0 });
        }
        let (mut x, mut out) = (a.0, 0u32);
        for w in &self.digit_weight[..self.n as usize] {
            let d = x % p;
            out += if d == 0 { 0 } else { p - d } * w;
            x /= p;
        }
        Elem(out)
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a.0 == 0 || b.0 == 0 {
            return Elem::ZERO;
        }
        Elem(self.exp[(self.log[a.index()] + self.log[b.index()]) as usize])
    }

    /// `a^e` with the convention `0^0 = 1`.
    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.0 == 0 {
            return Elem::ZERO;
        }
        let order = (self.q - 1) as u64;
        let k = (self.log[a.index()] as u64 * (e % order)) % order;
        Elem(self.exp[k as usize])
    }

    pub fn inv(&self, a: Elem) -> Option<Elem> {
        if a.0 == 0 {
            return None;
        }
        let order = self.q - 1;
        Some(Elem(
            self.exp[((order - self.log[a.index()]) % order) as usize],
        ))
    }

    /// Absolute trace `Tr(a) = a + a^p + ... + a^{p^{n-1}}`, as an integer in `[0, p)`.
    #[inline]
    pub fn trace(&self, a: Elem) -> u32 {
        self.trace[a.index()]
    }

    #[inline]
    pub fn chi(&self, a: Elem) -> Complex64 {
        self.chars[a.index()]
    }

    /// Elements `a` with `a^(p^k) = a`: the subfield of order `p^k` when `k | n`.
    pub fn subfield(&self, k: u32) -> Vec<Elem> {
        let pk = (self.p as u64).pow(k);
        self.elements().filter(|&a| self.pow(a, pk) == a).collect()
    }

    /// Some `i` with `i^2 = -1`, smallest encoding first.
    pub fn sqrt_minus_one(&self) -> Option<Elem> {
        let target = self.neg(Elem::ONE);
        self.elements().find(|&a| self.mul(a, a) == target)
    }

    /// Dense matrix of `chi(a * b)`, row-major, cached on first use for small fields.
    pub(crate) fn char_matrix(&self) -> Option<&[Complex64]> {
        self.char_matrix
            .get_or_init(|| {
                (self.q <= CHAR_MATRIX_LIMIT).then(|| {
                    let q = self.q;
                    let mut m = Vec::with_capacity((q * q) as usize);
                    for a in 0..q {
                        for b in 0..q {
                            m.push(self.chi(self.mul(Elem(a), Elem(b))));
                        }
                    }
                    m
                })
            })
            .as_deref()
    }
}

/// Element bound to its field, for callers that want mixed-field misuse reported as an error
/// instead of silently producing garbage.
#[derive(Debug, Clone)]
pub struct FieldElement {
    field: Field,
    elem: Elem,
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        same_field(&self.field, &other.field) && self.elem == other.elem
    }
}

impl FieldElement {
    pub fn new(field: &Field, encoding: u64) -> Result<Self, FieldError> {
        let elem = field.element(encoding)?;
        Ok(Self {
            field: field.clone(),
            elem,
        })
    }

    pub fn elem(&self) -> Elem {
        self.elem
    }

    pub fn encoding(&self) -> u32 {
        self.elem.0
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    fn with(&self, elem: Elem) -> Self {
        Self {
            field: self.field.clone(),
            elem,
        }
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if same_field(&self.field, &other.field) {
            Ok(())
        } else {
            Err(FieldError::MixedFields)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(self.with(self.field.add(self.elem, other.elem)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(self.with(self.field.sub(self.elem, other.elem)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(self.with(self.field.mul(self.elem, other.elem)))
    }

    pub fn neg(&self) -> Self {
        self.with(self.field.neg(self.elem))
    }

    pub fn pow(&self, e: u64) -> Self {
        self.with(self.field.pow(self.elem, e))
    }

    pub fn inv(&self) -> Option<Self> {
        self.field.inv(self.elem).map(|e| self.with(e))
    }

    pub fn trace(&self) -> u32 {
        self.field.trace(self.elem)
    }

    pub fn chi(&self) -> Complex64 {
        self.field.chi(self.elem)
    }
}

/// Remainder of `a` modulo the monic `b` over `F_p`; coefficient vectors are constant term first.
fn poly_rem(p: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    let p = p as u64;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = r.pop().unwrap();
        if lead != 0 {
            let shift = r.len() - db;
            for (k, &c) in b[..db].iter().enumerate() {
                r[shift + k] = (r[shift + k] + (p - lead) * c as u64 % p) % p;
            }
        }
    }
    r.into_iter().map(|c| c as u32).collect()
}

/// Irreducibility of a monic polynomial of degree `<= 4` by trial division with every monic
/// polynomial of degree `1..=deg/2`.
pub fn is_irreducible(p: u32, monic: &[u32]) -> bool {
    let deg = monic.len() - 1;
    if deg == 0 {
        return false;
    }
    for k in 1..=deg / 2 {
        let count = (p as u64).pow(k as u32);
        for idx in 0..count {
            let mut g = Vec::with_capacity(k + 1);
            let mut v = idx;
            for _ in 0..k {
                g.push((v % p as u64) as u32);
                v /= p as u64;
            }
            g.push(1);
            if poly_rem(p, monic, &g).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of degree `n`, comparing the coefficient vector
/// from the constant term upward.
pub fn smallest_irreducible(p: u32, n: u32) -> Vec<u32> {
    let count = (p as u64).pow(n);
    for idx in 0..count {
        // constant term is the most significant digit of idx
        let mut coeffs = vec![0u32; n as usize + 1];
        let mut v = idx;
        for i in (0..n as usize).rev() {
            coeffs[i] = (v % p as u64) as u32;
            v /= p as u64;
        }
        coeffs[n as usize] = 1;
        if is_irreducible(p, &coeffs) {
            return coeffs;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over F_p")
}
