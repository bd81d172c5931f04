//! Level sets `V_t = {x : P(x) = t}`, their Fourier decay, and the character sums that
//! control it.

pub mod points;
pub mod polynomial;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::{same_field, Elem, Field};
use crate::fourier::{fourier_transform, grid_len, inverse_transform, ComplexGrid};
pub use points::{PointSet, PointSetError};
pub use polynomial::{PolyError, PolyKind, Polynomial, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarietyError {
    #[error("characteristic {p} divides the exponent {exponent}")]
    CharacteristicDividesExponent { p: u32, exponent: u32 },
    #[error(
        "degree {degree} shares the characteristic {p}; Weil bound not applicable (sum = {value})"
    )]
    DegreeSharesCharacteristic {
        degree: u32,
        p: u32,
        value: Complex64,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Decay thresholds and the `|V_t| ~ q^{d-1}` band, all configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub kappa_sharp: f64,
    pub kappa_fallback: f64,
    pub band_low: f64,
    pub band_high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            kappa_sharp: 3.0,
            kappa_fallback: 3.0,
            band_low: 0.5,
            band_high: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// `max |V_t^(m)| <= kappa_sharp q^{-(d+1)/2}`.
    Sharp,
    /// Only `max |V_t^(m)| <= kappa_fallback q^{-d/2}`.
    Fallback,
    Bad,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEntry {
    pub t: Elem,
    pub variety_size: usize,
    /// `max_{m != 0} |V_t^(m)|`.
    pub max_nonzero_freq: f64,
    /// Smallest frequency index attaining the maximum (diagnostic).
    pub argmax: usize,
    pub c_sharp: f64,
    pub c_fallback: f64,
    pub classification: Classification,
    /// `|V_t|` inside the configured band around `q^{d-1}`.
    pub in_band: bool,
}

pub fn variety(p: &Polynomial, t: Elem) -> PointSet {
    let values = p.value_grid();
    variety_from_values(p, &values, t)
}

fn variety_from_values(p: &Polynomial, values: &[Elem], t: Elem) -> PointSet {
    let indices = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == t)
        .map(|(i, _)| i)
        .collect();
    PointSet::new(p.field(), p.arity(), indices).expect("indices come from the grid")
}

/// All fibers at once; `out[t]` lists the points with `P(x) = t`.
pub fn fibers(p: &Polynomial) -> Vec<PointSet> {
    let values = p.value_grid();
    let mut buckets = vec![Vec::new(); p.field().q() as usize];
    for (i, v) in values.iter().enumerate() {
        buckets[v.index()].push(i);
    }
    buckets
        .into_iter()
        .map(|b| PointSet::new(p.field(), p.arity(), b).expect("indices come from the grid"))
        .collect()
}

/// Rejects exponents divisible by the characteristic for diagonal polynomials.
pub fn check_decay_hypothesis(p: &Polynomial) -> Result<(), VarietyError> {
    let char_p = p.field().p();
    if let Some(diag) = p.diagonal_terms() {
        if let Some(&(_, exponent)) = diag.iter().find(|(_, e)| e % char_p == 0) {
            return Err(VarietyError::CharacteristicDividesExponent {
                p: char_p,
                exponent,
            });
        }
    }
    Ok(())
}

/// One [`DecayEntry`] per `t`, in encoding order.
pub fn decay_spectrum(
    p: &Polynomial,
    thresholds: &Thresholds,
    check_hypothesis: bool,
) -> Result<Vec<DecayEntry>, VarietyError> {
    if check_hypothesis {
        check_decay_hypothesis(p)?;
    }
    let field = p.field();
    let q = field.q() as f64;
    let d = p.arity();
    let sharp_scale = q.powf((d as f64 + 1.0) / 2.0);
    let fallback_scale = q.powf(d as f64 / 2.0);
    let band_center = q.powi(d as i32 - 1);

    let entries = fibers(p)
        .into_par_iter()
        .enumerate()
        .map(|(t, set)| {
            let spectrum = fourier_transform(&set.indicator());
            let (argmax, max) = spectrum.values()[1..].iter().enumerate().fold(
                (1usize, -1.0f64),
                |(bi, bv), (i, z)| {
                    let v = z.norm();
                    if v > bv {
                        (i + 1, v)
                    } else {
                        (bi, bv)
                    }
                },
            );
            let c_sharp = max * sharp_scale;
            let c_fallback = max * fallback_scale;
            let classification = if c_sharp <= thresholds.kappa_sharp {
                Classification::Sharp
            } else if c_fallback <= thresholds.kappa_fallback {
                Classification::Fallback
            } else {
                Classification::Bad
            };
            let size = set.len() as f64;
            DecayEntry {
                t: Elem(t as u32),
                variety_size: set.len(),
                max_nonzero_freq: max,
                argmax,
                c_sharp,
                c_fallback,
                classification,
                in_band: size >= thresholds.band_low * band_center
                    && size <= thresholds.band_high * band_center,
            }
        })
        .collect();
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionalSets {
    /// Values whose fibers fail the sharp decay or the size band.
    pub t: Vec<Elem>,
    /// Values whose fibers only reach the fallback decay.
    pub a: Vec<Elem>,
    pub degree: u32,
    /// `Some(violated)` when the `|T| <= deg - 1` bound applies (nondegenerate, `d = 2`).
    pub vu_bound_violated: Option<bool>,
    /// `A` is empty, so the product-size hypothesis of the Erdős-type bound can be dropped.
    pub erdos_hypothesis_droppable: bool,
}

impl ExceptionalSets {
    pub fn from_spectrum(p: &Polynomial, spectrum: &[DecayEntry], nondegenerate: bool) -> Self {
        let t: Vec<Elem> = spectrum
            .iter()
            .filter(|e| e.classification != Classification::Sharp || !e.in_band)
            .map(|e| e.t)
            .collect();
        let a: Vec<Elem> = spectrum
            .iter()
            .filter(|e| e.classification == Classification::Fallback)
            .map(|e| e.t)
            .collect();
        let degree = p.degree();
        let vu_bound_violated = (nondegenerate && p.arity() == 2)
            .then(|| t.len() as u64 > degree.saturating_sub(1) as u64);
        let erdos_hypothesis_droppable = a.is_empty();
        Self {
            t,
            a,
            degree,
            vu_bound_violated,
            erdos_hypothesis_droppable,
        }
    }
}

/// `T` and `A` for `p`; `nondegenerate` is the caller's assertion for `d = 2`.
pub fn exceptional_set(
    p: &Polynomial,
    thresholds: &Thresholds,
    nondegenerate: bool,
) -> Result<ExceptionalSets, VarietyError> {
    let spectrum = decay_spectrum(p, thresholds, false)?;
    Ok(ExceptionalSets::from_spectrum(p, &spectrum, nondegenerate))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeilSum {
    pub value: Complex64,
    /// `(c - 1) sqrt(q)`.
    pub bound: f64,
    pub ok: bool,
}

/// `sum_{s in F_q} chi(f(s))` for univariate `f` of degree `c >= 1`, checked against
/// `(c - 1) sqrt(q)`. Fails with the computed sum attached when `p | c`.
pub fn weil_sum(f: &Polynomial) -> Result<WeilSum, VarietyError> {
    if f.arity() != 1 {
        return Err(PolyError::ArityMismatch {
            expected: 1,
            got: f.arity(),
        }
        .into());
    }
    let field = f.field();
    let value: Complex64 = f.value_grid().iter().map(|&v| field.chi(v)).sum();
    let degree = f.degree();
    if degree.is_multiple_of(field.p()) {
        return Err(VarietyError::DegreeSharesCharacteristic {
            degree,
            p: field.p(),
            value,
        });
    }
    let bound = (degree as f64 - 1.0) * (field.q() as f64).sqrt();
    Ok(WeilSum {
        value,
        bound,
        ok: value.norm() <= bound + 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeilSweep {
    pub degree: u32,
    pub count: usize,
    pub bound: f64,
    pub max_magnitude: f64,
    /// Coefficients of a maximizing polynomial, constant term first, leading 1 omitted.
    pub worst: Vec<Elem>,
    pub all_ok: bool,
}

/// Every monic `f` of degree `c` over the field, checked against `(c - 1) sqrt(q)`.
/// Fails with the largest sum attached when `p | c`.
pub fn weil_sweep(field: &Field, degree: u32) -> Result<WeilSweep, VarietyError> {
    let q = field.q() as usize;
    let count = q.pow(degree);
    let coeffs = |mut k: usize| -> Vec<Elem> {
        (0..degree)
            .map(|_| {
                let c = Elem((k % q) as u32);
                k /= q;
                c
            })
            .collect()
    };
    let (index, value) = (0..count)
        .into_par_iter()
        .map(|k| {
            let a = coeffs(k);
            let value: Complex64 = field
                .elements()
                .map(|s| {
                    let v = a
                        .iter()
                        .rev()
                        .fold(Elem::ONE, |acc, &c| field.add(field.mul(acc, s), c));
                    field.chi(v)
                })
                .sum();
            (k, value)
        })
        .reduce(
            || (usize::MAX, Complex64::new(-1.0, 0.0)),
            |x, y| {
                let (nx, ny) = (
                    if x.0 == usize::MAX { -1.0 } else { x.1.norm() },
                    y.1.norm(),
                );
                if y.0 != usize::MAX && (ny > nx || (ny == nx && y.0 < x.0)) {
                    y
                } else {
                    x
                }
            },
        );
    if degree.is_multiple_of(field.p()) {
        return Err(VarietyError::DegreeSharesCharacteristic {
            degree,
            p: field.p(),
            value,
        });
    }
    let bound = (degree as f64 - 1.0) * (q as f64).sqrt();
    let max_magnitude = value.norm();
    Ok(WeilSweep {
        degree,
        count,
        bound,
        max_magnitude,
        worst: coeffs(index),
        all_ok: max_magnitude <= bound + 1e-9,
    })
}

/// `sum_x chi(s P(x) + m . x)`; factors into univariate sums for diagonal `P`.
pub fn phase_sum(p: &Polynomial, s: Elem, m: &[Elem]) -> Result<Complex64, PolyError> {
    if m.len() != p.arity() {
        return Err(PolyError::ArityMismatch {
            expected: p.arity(),
            got: m.len(),
        });
    }
    Ok(phase_sum_factored(p, s, m).unwrap_or_else(|| phase_sum_enumerated(p, s, m)))
}

/// Full enumeration over `F_q^d`.
pub fn phase_sum_enumerated(p: &Polynomial, s: Elem, m: &[Elem]) -> Complex64 {
    let f = p.field();
    let d = p.arity();
    let values = p.value_grid();
    let mut coords = vec![Elem::ZERO; d];
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in &values {
        let dot = coords
            .iter()
            .zip(m)
            .fold(Elem::ZERO, |a, (&x, &y)| f.add(a, f.mul(x, y)));
        acc += f.chi(f.add(f.mul(s, v), dot));
        // odometer increment in encoding order
        for c in coords.iter_mut() {
            c.0 += 1;
            if c.0 < f.q() {
                break;
            }
            c.0 = 0;
        }
    }
    acc
}

/// Product of `sum_x chi(s a_j x^{c_j} + m_j x)` over `j`; `None` unless `P` is diagonal.
pub fn phase_sum_factored(p: &Polynomial, s: Elem, m: &[Elem]) -> Option<Complex64> {
    let f = p.field();
    let diag = p.diagonal_terms()?;
    Some(
        diag.iter()
            .zip(m)
            .map(|(&(a, c), &mj)| {
                let sa = f.mul(s, a);
                f.elements()
                    .map(|x| f.chi(f.add(f.mul(sa, f.pow(x, c as u64)), f.mul(mj, x))))
                    .sum::<Complex64>()
            })
            .product(),
    )
}

/// `prod_j (c_j - 1) q^{d/2}` for diagonal `P` with every `gcd(c_j, p) = 1`.
pub fn phase_bound(p: &Polynomial) -> Option<f64> {
    let f = p.field();
    let diag = p.diagonal_terms()?;
    if diag.iter().any(|&(_, c)| c % f.p() == 0) {
        return None;
    }
    let prod: f64 = diag.iter().map(|&(_, c)| c as f64 - 1.0).product();
    Some(prod * (f.q() as f64).powf(p.arity() as f64 / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSweep {
    /// `max_{s != 0, m} |sum_x chi(s P(x) + m . x)|`.
    pub max_magnitude: f64,
    /// `max_magnitude / q^{d/2}`.
    pub constant: f64,
    pub argmax_s: Elem,
    pub argmax_m: usize,
    pub bound: Option<f64>,
}

/// Magnitudes `|sum_x chi(s P(x) + m . x)|` for one `s`, indexed by `m`.
pub fn phase_magnitudes(p: &Polynomial, s: Elem) -> Vec<f64> {
    let f = p.field();
    let d = p.arity();
    if let Some(diag) = p.diagonal_terms() {
        let q = f.q() as usize;
        let per_axis: Vec<Vec<Complex64>> = diag
            .iter()
            .map(|&(a, c)| {
                let sa = f.mul(s, a);
                f.elements()
                    .map(|mj| {
                        f.elements()
                            .map(|x| f.chi(f.add(f.mul(sa, f.pow(x, c as u64)), f.mul(mj, x))))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let len = grid_len(f.q(), d).unwrap();
        return (0..len)
            .map(|mut idx| {
                let mut z = Complex64::new(1.0, 0.0);
                for axis in &per_axis {
                    z *= axis[idx % q];
                    idx /= q;
                }
                z.norm()
            })
            .collect();
    }
    // sum_x g(x) chi(m . x) is the unnormalized inverse transform of g.
    let g: Vec<Complex64> = p.value_grid().iter().map(|&v| f.chi(f.mul(s, v))).collect();
    inverse_transform(&ComplexGrid::from_values(f, d, g))
        .values()
        .iter()
        .map(|z| z.norm())
        .collect()
}

pub fn phase_sweep(p: &Polynomial) -> PhaseSweep {
    let f = p.field();
    let best = f
        .elements()
        .skip(1)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|s| {
            let mags = phase_magnitudes(p, s);
            let (m, v) =
                mags.iter().enumerate().fold(
                    (0, 0.0f64),
                    |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
                );
            (s, m, v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((Elem::ONE, 0, 0.0f64), |best, cur| {
            if cur.2 > best.2 {
                cur
            } else {
                best
            }
        });
    let scale = (f.q() as f64).powf(p.arity() as f64 / 2.0);
    PhaseSweep {
        max_magnitude: best.2,
        constant: best.2 / scale,
        argmax_s: best.0,
        argmax_m: best.1,
        bound: phase_bound(p),
    }
}

/// Same field and dimension.
pub fn same_space(a: &PointSet, b: &PointSet) -> bool {
    same_field(a.field(), b.field()) && a.dim() == b.dim()
}
