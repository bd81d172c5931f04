//! Generalized distance sets `Delta_P(E, F) = {P(x - y) : x in E, y in F}` and the
//! verifiers that compare them against the Falconer-, Erdős-, paraboloid- and
//! pinned-type lower bounds.

use num_complex::Complex64;
use rand_core::RngCore;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::{same_field, Elem};
use crate::fourier::{decode_index, encode_point, fourier_transform, grid_len};
use crate::sampling::uniform_below;
use crate::varieties::points::Differ;
use crate::varieties::{fibers, phase_sweep, PhaseSweep, PointSet, PolyError, Polynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("point sets must be nonempty")]
    EmptySet,
    #[error("dimension mismatch: polynomial has {poly} variables, sets live in dimension {sets}")]
    DimensionMismatch { poly: usize, sets: usize },
    #[error("polynomial and point sets are over different fields")]
    MixedFields,
    #[error("fourier count for t = {t} is {value}, too far from an integer")]
    RoundingDivergence { t: Elem, value: Complex64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

fn check_inputs(p: &Polynomial, e: &PointSet, f: &PointSet) -> Result<(), DistanceError> {
    if !same_field(p.field(), e.field()) || !same_field(p.field(), f.field()) {
        return Err(DistanceError::MixedFields);
    }
    for s in [e, f] {
        if s.dim() != p.arity() {
            return Err(DistanceError::DimensionMismatch {
                poly: p.arity(),
                sets: s.dim(),
            });
        }
    }
    if e.is_empty() || f.is_empty() {
        return Err(DistanceError::EmptySet);
    }
    Ok(())
}

/// Sorted `{P(x - y)}` by the exact double loop.
pub fn distance_set(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
) -> Result<Vec<Elem>, DistanceError> {
    Ok(counting_function(p, e, f, CountingMethod::Direct)?.support())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMethod {
    Direct,
    Fourier,
}

/// `nu(t) = |{(x, y) in E x F : P(x - y) = t}|`, indexed by encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountingHistogram {
    pub counts: Vec<u64>,
}

impl CountingHistogram {
    pub fn get(&self, t: Elem) -> u64 {
        self.counts[t.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn support(&self) -> Vec<Elem> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(t, _)| Elem(t as u32))
            .collect()
    }

    /// Field elements with `nu(t) = 0`.
    pub fn missing(&self) -> Vec<Elem> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(t, _)| Elem(t as u32))
            .collect()
    }
}

pub fn counting_function(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
    method: CountingMethod,
) -> Result<CountingHistogram, DistanceError> {
    check_inputs(p, e, f)?;
    match method {
        CountingMethod::Direct => Ok(count_direct(p, e, f)),
        CountingMethod::Fourier => count_fourier(p, e, f),
    }
}

fn count_direct(p: &Polynomial, e: &PointSet, f: &PointSet) -> CountingHistogram {
    let field = p.field();
    let q = field.q() as usize;
    let values = p.value_grid();
    let differ = Differ::new(field, p.arity());
    let count_row = |&y: &usize| {
        let mut row = vec![0u64; q];
        for &x in e.indices() {
            row[values[differ.sub(x, y)].index()] += 1;
        }
        row
    };
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    let counts = if e.len() * f.len() >= 1 << 16 {
        f.indices()
            .par_iter()
            .map(count_row)
            .reduce(|| vec![0u64; q], merge)
    } else {
        f.indices().iter().map(count_row).fold(vec![0u64; q], merge)
    };
    CountingHistogram { counts }
}

/// `nu(t) = q^{2d} sum_m conj(E^(m)) F^(m) V_t^(m)`, rounded.
fn count_fourier(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
) -> Result<CountingHistogram, DistanceError> {
    let len = grid_len(p.field().q(), p.arity()).unwrap() as f64;
    let e_hat = fourier_transform(&e.indicator());
    let f_hat = fourier_transform(&f.indicator());
    let weight: Vec<Complex64> = e_hat
        .values()
        .iter()
        .zip(f_hat.values())
        .map(|(a, b)| a.conj() * b)
        .collect();
    let raw: Vec<Complex64> = fibers(p)
        .into_par_iter()
        .map(|v| {
            let v_hat = fourier_transform(&v.indicator());
            let s: Complex64 = weight.iter().zip(v_hat.values()).map(|(w, z)| w * z).sum();
            s * len * len
        })
        .collect();
    let mut counts = Vec::with_capacity(raw.len());
    for (t, value) in raw.into_iter().enumerate() {
        let rounded = value.re.round();
        if (value - Complex64::new(rounded, 0.0)).norm() > 0.1 || rounded < 0.0 {
            return Err(DistanceError::RoundingDivergence {
                t: Elem(t as u32),
                value,
            });
        }
        counts.push(rounded as u64);
    }
    Ok(CountingHistogram { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinnedEntry {
    pub pin: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinnedReport {
    /// `|Delta_P(E, y)|` for every `y in F`, in index order.
    pub pins: Vec<PinnedEntry>,
    /// Fraction of pins with `|Delta_P(E, y)| > q / 2`.
    pub fraction_above_half: f64,
}

pub fn pinned_distances(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
) -> Result<PinnedReport, DistanceError> {
    check_inputs(p, e, f)?;
    let field = p.field();
    let q = field.q() as usize;
    let values = p.value_grid();
    let differ = Differ::new(field, p.arity());
    let pins: Vec<PinnedEntry> = f
        .indices()
        .par_iter()
        .map(|&y| {
            let mut seen = vec![false; q];
            for &x in e.indices() {
                seen[values[differ.sub(x, y)].index()] = true;
            }
            PinnedEntry {
                pin: y,
                size: seen.iter().filter(|&&s| s).count(),
            }
        })
        .collect();
    let above = pins.iter().filter(|e| 2 * e.size > q).count();
    let fraction_above_half = above as f64 / pins.len() as f64;
    Ok(PinnedReport {
        pins,
        fraction_above_half,
    })
}

/// `H(x, x_{d+1}) = P(x) - x_{d+1}`.
pub fn paraboloid_lift(p: &Polynomial) -> Polynomial {
    p.paraboloid_lift()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

impl Verdict {
    fn from_check(hypothesis: bool, conclusion: bool) -> Self {
        match (hypothesis, conclusion) {
            (false, _) => Verdict::Vacuous,
            (true, true) => Verdict::Pass,
            (true, false) => Verdict::Fail,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `|Delta| >= q - |T|` once `|E||F| >= C q^{d+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalconerVerdict {
    /// `|E||F| / q^{d+1}`.
    pub ratio: f64,
    pub hypothesis: bool,
    pub delta_size: usize,
    pub required: usize,
    /// Whether the conclusion holds regardless of the hypothesis.
    pub conclusion: bool,
    /// `Delta` contains every `t` outside `T`.
    pub covers_complement: bool,
    pub missing: Vec<Elem>,
    pub verdict: Verdict,
}

pub fn verify_falconer(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
    exceptional: &[Elem],
    c: f64,
) -> Result<FalconerVerdict, DistanceError> {
    let hist = counting_function(p, e, f, CountingMethod::Direct)?;
    Ok(falconer_from_hist(p, e, f, &hist, exceptional, c))
}

fn falconer_from_hist(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
    hist: &CountingHistogram,
    exceptional: &[Elem],
    c: f64,
) -> FalconerVerdict {
    let q = p.field().q() as usize;
    let ratio = (e.len() as f64 * f.len() as f64) / (q as f64).powi(p.arity() as i32 + 1);
    let hypothesis = ratio >= c;
    let missing = hist.missing();
    let delta_size = q - missing.len();
    let required = q.saturating_sub(exceptional.len());
    let conclusion = delta_size >= required;
    let covers_complement = missing.iter().all(|t| exceptional.contains(t));
    FalconerVerdict {
        ratio,
        hypothesis,
        delta_size,
        required,
        conclusion,
        covers_complement,
        missing,
        verdict: Verdict::from_check(hypothesis, conclusion),
    }
}

/// `|Delta| >= r_min min(q, q^{-(d-1)/2} sqrt(|E||F|))`, under `|E||F| >= C q^d` or `A` empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErdosVerdict {
    pub target: f64,
    /// `|Delta| / target`.
    pub r: f64,
    pub hypothesis: bool,
    /// `A` is empty, so the size hypothesis is not needed.
    pub unconditional: bool,
    pub conclusion: bool,
    pub verdict: Verdict,
}

pub fn verify_erdos(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
    fallback: &[Elem],
    c: f64,
    r_min: f64,
) -> Result<ErdosVerdict, DistanceError> {
    let hist = counting_function(p, e, f, CountingMethod::Direct)?;
    Ok(erdos_from_hist(p, e, f, &hist, fallback, c, r_min))
}

fn erdos_from_hist(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
    hist: &CountingHistogram,
    fallback: &[Elem],
    c: f64,
    r_min: f64,
) -> ErdosVerdict {
    let q = p.field().q() as f64;
    let d = p.arity() as i32;
    let product = e.len() as f64 * f.len() as f64;
    let target = q.min(q.powf(-(d as f64 - 1.0) / 2.0) * product.sqrt());
    let delta = hist.support().len() as f64;
    let r = delta / target;
    let hypothesis = product >= c * q.powi(d);
    let unconditional = fallback.is_empty();
    let conclusion = r >= r_min;
    ErdosVerdict {
        target,
        r,
        hypothesis,
        unconditional,
        conclusion,
        verdict: Verdict::from_check(hypothesis || unconditional, conclusion),
    }
}

/// `|Delta| >= rho q` once `|E||F| >= C q^{d+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProportionVerdict {
    pub ratio: f64,
    pub delta_over_q: f64,
    pub hypothesis: bool,
    pub conclusion: bool,
    pub verdict: Verdict,
}

fn proportion(ratio: f64, delta: usize, q: u32, c: f64, rho: f64) -> ProportionVerdict {
    let delta_over_q = delta as f64 / q as f64;
    let hypothesis = ratio >= c;
    let conclusion = delta_over_q >= rho;
    ProportionVerdict {
        ratio,
        delta_over_q,
        hypothesis,
        conclusion,
        verdict: Verdict::from_check(hypothesis, conclusion),
    }
}

/// At least `fraction` of pins `y in F` have `|Delta_P(E, y)| > q/2`, once `|E||F| >= C q^{d+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinnedVerdict {
    pub fraction_above_half: f64,
    pub required_fraction: f64,
    pub hypothesis: bool,
    pub conclusion: bool,
    pub verdict: Verdict,
}

pub fn verify_pinned(
    p: &Polynomial,
    e: &PointSet,
    f: &PointSet,
    c: f64,
    required_fraction: f64,
) -> Result<PinnedVerdict, DistanceError> {
    let report = pinned_distances(p, e, f)?;
    let q = p.field().q() as f64;
    let ratio = (e.len() as f64 * f.len() as f64) / q.powi(p.arity() as i32 + 1);
    let hypothesis = ratio >= c;
    let conclusion = report.fraction_above_half >= required_fraction;
    Ok(PinnedVerdict {
        fraction_above_half: report.fraction_above_half,
        required_fraction,
        hypothesis,
        conclusion,
        verdict: Verdict::from_check(hypothesis, conclusion),
    })
}

/// Constants fed to every verifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyParams {
    /// Exceptional set `T` (sharp decay fails).
    pub t_set: Vec<Elem>,
    /// Fallback set `A`.
    pub a_set: Vec<Elem>,
    pub c: f64,
    pub rho: f64,
    pub r_min: f64,
    pub pin_fraction: f64,
}

impl VerifyParams {
    pub fn new(t_set: Vec<Elem>, a_set: Vec<Elem>) -> Self {
        Self {
            t_set,
            a_set,
            c: 1.0,
            rho: 0.5,
            r_min: 0.25,
            pin_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub falconer: FalconerVerdict,
    pub erdos: ErdosVerdict,
    pub proportion: ProportionVerdict,
    pub pinned: PinnedVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub q: u32,
    pub d: usize,
    pub polynomial: String,
    pub e_size: usize,
    pub f_size: usize,
    pub delta_size: usize,
    pub delta: Vec<Elem>,
    pub histogram: CountingHistogram,
    pub verdicts: Verdicts,
    pub seed: Option<u64>,
}

impl DistanceReport {
    pub fn compute(
        p: &Polynomial,
        poly_text: &str,
        e: &PointSet,
        f: &PointSet,
        params: &VerifyParams,
        seed: Option<u64>,
    ) -> Result<Self, DistanceError> {
        let histogram = counting_function(p, e, f, CountingMethod::Direct)?;
        let delta = histogram.support();
        let falconer = falconer_from_hist(p, e, f, &histogram, &params.t_set, params.c);
        let erdos = erdos_from_hist(p, e, f, &histogram, &params.a_set, params.c, params.r_min);
        let proportion = proportion(
            falconer.ratio,
            delta.len(),
            p.field().q(),
            params.c,
            params.rho,
        );
        let pinned = verify_pinned(p, e, f, params.c, params.pin_fraction)?;
        Ok(Self {
            q: p.field().q(),
            d: p.arity(),
            polynomial: poly_text.to_string(),
            e_size: e.len(),
            f_size: f.len(),
            delta_size: delta.len(),
            delta,
            histogram,
            verdicts: Verdicts {
                falconer,
                erdos,
                proportion,
                pinned,
            },
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductReport {
    pub lifted: String,
    /// `|E*||F*| / (|F_{d+1}| q^{d+1})`.
    pub hypothesis_ratio: f64,
    pub delta_size: usize,
    pub delta: Vec<Elem>,
    pub delta_over_q: f64,
    pub phase: PhaseSweep,
    /// Phase-sum constant within `kappa` (the per-factor Weil bound for diagonal `P`).
    pub phase_condition: bool,
    pub verdict: Verdict,
}

/// `Delta_H(E x E_{d+1}, F x F_{d+1})` for `H = P - x_{d+1}`.
#[allow(clippy::too_many_arguments)]
pub fn product_set_experiment(
    p: &Polynomial,
    e: &PointSet,
    e_last: &[Elem],
    f: &PointSet,
    f_last: &[Elem],
    c: f64,
    rho: f64,
    kappa: f64,
) -> Result<ProductReport, DistanceError> {
    check_inputs(p, e, f)?;
    if e_last.is_empty() || f_last.is_empty() {
        return Err(DistanceError::EmptySet);
    }
    let h = paraboloid_lift(p);
    let dedup = |v: &[Elem]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (e_last, f_last) = (dedup(e_last), dedup(f_last));
    let e_star = e.product(&e_last);
    let f_star = f.product(&f_last);
    let delta = distance_set(&h, &e_star, &f_star)?;
    let q = p.field().q();
    let hypothesis_ratio = (e_star.len() as f64 * f_star.len() as f64)
        / (f_last.len() as f64 * (q as f64).powi(p.arity() as i32 + 1));
    let phase = phase_sweep(p);
    let limit = phase
        .bound
        .map_or(kappa, |b| b / (q as f64).powf(p.arity() as f64 / 2.0));
    let phase_condition = phase.constant <= limit + 1e-9;
    let delta_over_q = delta.len() as f64 / q as f64;
    Ok(ProductReport {
        lifted: h.to_string(),
        hypothesis_ratio,
        delta_size: delta.len(),
        delta,
        delta_over_q,
        phase,
        phase_condition,
        verdict: Verdict::from_check(hypothesis_ratio >= c, delta_over_q >= rho),
    })
}

/// For `P = sum x_j^2`: `P(x - y) - P(x' - y) = (P(x) - 2 y.x) - (P(x') - 2 y.x')` on
/// random `x, x' in E` and uniform `y`.
pub fn verify_square_identity(e: &PointSet, trials: usize, rng: &mut impl RngCore) -> bool {
    if e.is_empty() {
        return true;
    }
    let field = e.field();
    let d = e.dim();
    let q = field.q();
    let len = grid_len(q, d).unwrap() as u64;
    let p = |x: &[Elem]| {
        x.iter()
            .fold(Elem::ZERO, |a, &c| field.add(a, field.mul(c, c)))
    };
    let dot = |x: &[Elem], y: &[Elem]| {
        x.iter()
            .zip(y)
            .fold(Elem::ZERO, |a, (&u, &v)| field.add(a, field.mul(u, v)))
    };
    let two = field.add(Elem::ONE, Elem::ONE);
    let pick = |rng: &mut dyn RngCore| e.indices()[uniform_below(rng, e.len() as u64) as usize];
    (0..trials).all(|_| {
        let x = decode_index(q, d, pick(rng));
        let x2 = decode_index(q, d, pick(rng));
        let y = decode_index(q, d, uniform_below(rng, len) as usize);
        let diff = |a: &[Elem]| -> Vec<Elem> {
            a.iter().zip(&y).map(|(&u, &v)| field.sub(u, v)).collect()
        };
        let lhs = field.sub(p(&diff(&x)), p(&diff(&x2)));
        let rhs = field.sub(
            field.sub(p(&x), field.mul(two, dot(&y, &x))),
            field.sub(p(&x2), field.mul(two, dot(&y, &x2))),
        );
        lhs == rhs
    })
}

/// `{(t a + b) : t in F_q}` for direction `a` and base point `b`.
pub fn param_line(field: &crate::field::Field, a: &[Elem], b: &[Elem]) -> PointSet {
    let points: Vec<Vec<Elem>> = field
        .elements()
        .map(|t| {
            a.iter()
                .zip(b)
                .map(|(&ai, &bi)| field.add(field.mul(t, ai), bi))
                .collect()
        })
        .collect();
    let idx = points.iter().map(|p| encode_point(field.q(), p)).collect();
    PointSet::new(field, a.len(), idx).expect("line points lie in the grid")
}
