use serde_json::{json, Value};

use crate::distances::{
    distance_set, pinned_distances, product_set_experiment, verify_pinned, DistanceReport,
    VerifyParams,
};
use crate::field::{Elem, Field};
use crate::fourier::{decode_index, fourier_transform, inverse_transform, plancherel_residual};
use crate::sampling::{derive_seed, random_grid, rng_from_seed, uniform_below};
use crate::varieties::{
    decay_spectrum, exceptional_set, fibers, phase_sweep, weil_sum, weil_sweep, ExceptionalSets,
    PointSet, Polynomial, VarietyError,
};

use super::{
    fmt_f64, ConfigError, ExperimentConfig, HarnessError, RunOutput, SetSpec, Table,
    EXIT_HYPOTHESIS, EXIT_NUMERIC,
};

/// Seed streams for the four configurable sets.
const STREAM_E: u64 = 0;
const STREAM_F: u64 = 1;
const STREAM_E2: u64 = 2;
const STREAM_F2: u64 = 3;

fn summary_only(summary: Value, exit_code: i32) -> RunOutput {
    RunOutput {
        table: None,
        summary,
        exit_code,
    }
}

fn encodings(v: &[Elem]) -> Vec<u32> {
    v.iter().map(|e| e.0).collect()
}

fn field_json(field: &Field) -> Value {
    json!({ "p": field.p(), "n": field.n(), "q": field.q(), "modulus": field.modulus() })
}

/// `E` and `F`, defaulting to `all` and `same`.
pub(super) fn build_pair(
    config: &ExperimentConfig,
    field: &Field,
    poly: &Polynomial,
    seed: u64,
) -> Result<(PointSet, PointSet), HarnessError> {
    let d = config.d;
    let e = config.set_e.as_ref().unwrap_or(&SetSpec::All).build(
        "setE",
        field,
        d,
        Some(poly),
        None,
        derive_seed(seed, STREAM_E),
    )?;
    let f = config.set_f.as_ref().unwrap_or(&SetSpec::Same).build(
        "setF",
        field,
        d,
        Some(poly),
        Some(&e),
        derive_seed(seed, STREAM_F),
    )?;
    Ok((e, f))
}

/// The one-dimensional slices for product experiments, if requested.
/// `(E_{d+1}, F_{d+1})` as field elements.
type Slices = (Vec<Elem>, Vec<Elem>);

fn build_slices(config: &ExperimentConfig, field: &Field) -> Result<Option<Slices>, HarnessError> {
    let Some(e2) = &config.set_e2 else {
        return match config.set_f2 {
            Some(_) => Err(ConfigError::new("setF2", "needs --setE2 as well").into()),
            None => Ok(None),
        };
    };
    let e2 = e2.build(
        "setE2",
        field,
        1,
        None,
        None,
        derive_seed(config.seed, STREAM_E2),
    )?;
    let f2 = config.set_f2.as_ref().unwrap_or(&SetSpec::Same).build(
        "setF2",
        field,
        1,
        None,
        Some(&e2),
        derive_seed(config.seed, STREAM_F2),
    )?;
    let elems = |s: &PointSet| {
        s.indices()
            .iter()
            .map(|&i| Elem(i as u32))
            .collect::<Vec<_>>()
    };
    Ok(Some((elems(&e2), elems(&f2))))
}

pub(super) fn verify_params(config: &ExperimentConfig, sets: &ExceptionalSets) -> VerifyParams {
    VerifyParams {
        t_set: sets.t.clone(),
        a_set: sets.a.clone(),
        c: config.c,
        rho: config.rho,
        r_min: config.r_min,
        pin_fraction: config.pin_fraction,
    }
}

pub(super) fn exceptional_json(sets: &ExceptionalSets) -> Value {
    json!({
        "T": encodings(&sets.t),
        "A": encodings(&sets.a),
        "degree": sets.degree,
        "vu_bound_violated": sets.vu_bound_violated,
        "erdos_hypothesis_droppable": sets.erdos_hypothesis_droppable,
    })
}

pub(super) fn field_check(
    config: &ExperimentConfig,
    field: &Field,
) -> Result<RunOutput, HarnessError> {
    let q = field.q() as u64;
    let p = field.p();
    // Exhaustive triples for small fields, seeded samples otherwise.
    let triples: Vec<(Elem, Elem, Elem)> = if q.pow(3) <= 1 << 18 {
        let all: Vec<Elem> = field.elements().collect();
        let mut out = Vec::with_capacity(all.len().pow(3));
        for &a in &all {
            for &b in &all {
                out.extend(all.iter().map(|&c| (a, b, c)));
            }
        }
        out
    } else {
        let mut rng = rng_from_seed(config.seed);
        (0..20_000)
            .map(|_| {
                let mut pick = || Elem(uniform_below(&mut rng, q) as u32);
                (pick(), pick(), pick())
            })
            .collect()
    };
    let f = field;
    let mut checks = serde_json::Map::new();
    let mut record = |name: &str, ok: bool| {
        checks.insert(name.to_string(), ok.into());
    };
    record(
        "addition",
        triples.iter().all(|&(a, b, c)| {
            f.add(a, b) == f.add(b, a)
                && f.add(f.add(a, b), c) == f.add(a, f.add(b, c))
                && f.sub(f.add(a, b), b) == a
        }),
    );
    record(
        "multiplication",
        triples.iter().all(|&(a, b, c)| {
            f.mul(a, b) == f.mul(b, a) && f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
        }),
    );
    record(
        "distributivity",
        triples
            .iter()
            .all(|&(a, b, c)| f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))),
    );
    record(
        "inverses",
        f.elements()
            .skip(1)
            .all(|a| f.inv(a).is_some_and(|b| f.mul(a, b) == Elem::ONE))
            && f.inv(Elem::ZERO).is_none(),
    );
    record(
        "trace_linearity",
        triples.iter().all(|&(a, b, c)| {
            let k = c.0 % p;
            f.trace(f.add(a, b)) == (f.trace(a) + f.trace(b)) % p
                && f.trace(f.mul(Elem(k), a)) == k * f.trace(a) % p
        }),
    );
    record(
        "character_additivity",
        triples
            .iter()
            .all(|&(a, b, _)| (f.chi(f.add(a, b)) - f.chi(a) * f.chi(b)).norm() < 1e-12),
    );
    let orthogonality = f.elements().skip(1).take(64).all(|b| {
        let s: num_complex::Complex64 = f.elements().map(|a| f.chi(f.mul(a, b))).sum();
        s.norm() < 1e-9 * q as f64
    });
    record("character_orthogonality", orthogonality);
    let all_ok = checks.values().all(|v| v == &Value::Bool(true));
    let summary = json!({
        "field": field_json(field),
        "exhaustive": q.pow(3) <= 1 << 18,
        "triples": triples.len(),
        "checks": checks,
        "all_ok": all_ok,
    });
    Ok(summary_only(summary, if all_ok { 0 } else { EXIT_NUMERIC }))
}

pub(super) fn fourier_check(
    config: &ExperimentConfig,
    field: &Field,
) -> Result<RunOutput, HarnessError> {
    let d = config.d;
    let q = field.q() as f64;
    let roundtrip_tol = 1e-9 * q.powf(d as f64 / 2.0);
    let plancherel_tol = 1e-9 * q.powi(d as i32);
    let mut table = Table::new(&[
        "trial",
        "seed",
        "roundtrip_error",
        "plancherel_residual",
        "pass",
    ]);
    let (mut worst_rt, mut worst_pl) = (0.0f64, 0.0f64);
    let mut all_ok = true;
    for trial in 0..config.trials {
        let seed = derive_seed(config.seed, trial as u64);
        let grid = random_grid(field, d, &mut rng_from_seed(seed));
        let back = inverse_transform(&fourier_transform(&grid));
        let rt = grid
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let pl = plancherel_residual(&grid);
        let ok = rt < roundtrip_tol && pl < plancherel_tol;
        all_ok &= ok;
        worst_rt = worst_rt.max(rt);
        worst_pl = worst_pl.max(pl);
        table.rows.push(vec![
            trial.to_string(),
            seed.to_string(),
            fmt_f64(rt),
            fmt_f64(pl),
            ok.to_string(),
        ]);
    }
    let summary = json!({
        "field": field_json(field),
        "d": d,
        "trials": config.trials,
        "max_roundtrip_error": worst_rt,
        "max_plancherel_residual": worst_pl,
        "roundtrip_tolerance": roundtrip_tol,
        "plancherel_tolerance": plancherel_tol,
        "all_ok": all_ok,
    });
    Ok(RunOutput {
        table: Some(table),
        summary,
        exit_code: if all_ok { 0 } else { EXIT_NUMERIC },
    })
}

pub(super) fn decay(config: &ExperimentConfig, field: &Field) -> Result<RunOutput, HarnessError> {
    let p = config.polynomial(field, config.d)?;
    let spectrum = decay_spectrum(&p, &config.thresholds, config.check_hypothesis)?;
    let sets = ExceptionalSets::from_spectrum(&p, &spectrum, config.nondegenerate);
    let only = config
        .t
        .map(|t| field.element(t))
        .transpose()
        .map_err(|_| ConfigError::new("t", "not a field element"))?;
    let mut table = Table::new(&[
        "t",
        "variety_size",
        "max_nonzero_freq",
        "argmax",
        "c_sharp",
        "c_fallback",
        "classification",
        "in_band",
    ]);
    for e in spectrum.iter().filter(|e| only.is_none_or(|t| t == e.t)) {
        let class = serde_json::to_value(e.classification).unwrap();
        table.rows.push(vec![
            e.t.to_string(),
            e.variety_size.to_string(),
            fmt_f64(e.max_nonzero_freq),
            e.argmax.to_string(),
            fmt_f64(e.c_sharp),
            fmt_f64(e.c_fallback),
            class.as_str().unwrap().to_string(),
            e.in_band.to_string(),
        ]);
    }
    let max_sharp_nonzero = spectrum
        .iter()
        .skip(1)
        .map(|e| e.c_sharp)
        .fold(0.0, f64::max);
    let summary = json!({
        "field": field_json(field),
        "d": config.d,
        "poly": p.to_string(),
        "thresholds": config.thresholds,
        "exceptional": exceptional_json(&sets),
        "max_c_sharp_nonzero_t": max_sharp_nonzero,
        "c_fallback_at_zero": spectrum[0].c_fallback,
    });
    Ok(RunOutput {
        table: Some(table),
        summary,
        exit_code: 0,
    })
}

pub(super) fn weil(config: &ExperimentConfig, field: &Field) -> Result<RunOutput, HarnessError> {
    if let Some(degree) = config.degree {
        if degree == 0 || (field.q() as f64).powi(degree as i32) > 1e7 {
            return Err(ConfigError::new(
                "degree",
                "sweep size q^degree must be between 1 and 10^7",
            )
            .into());
        }
        let base = json!({ "field": field_json(field), "degree": degree });
        return match weil_sweep(field, degree) {
            Ok(s) => {
                let mut summary = base;
                summary["sweep"] = json!({
                    "count": s.count,
                    "bound": s.bound,
                    "max_magnitude": s.max_magnitude,
                    "worst_coefficients": encodings(&s.worst),
                    "all_ok": s.all_ok,
                });
                Ok(summary_only(summary, 0))
            }
            Err(VarietyError::DegreeSharesCharacteristic { value, .. }) => {
                let mut summary = base;
                summary["sweep"] = json!({ "max_magnitude": value.norm(), "all_ok": Value::Null });
                summary["hypothesis"] = "characteristic divides the degree".into();
                Ok(summary_only(summary, EXIT_HYPOTHESIS))
            }
            Err(e) => Err(e.into()),
        };
    }
    let f = config.polynomial(field, 1)?;
    let base = json!({ "field": field_json(field), "poly": f.to_string(), "degree": f.degree() });
    match weil_sum(&f) {
        Ok(w) => {
            let mut summary = base;
            summary["value"] = json!([w.value.re, w.value.im]);
            summary["magnitude"] = w.value.norm().into();
            summary["bound"] = w.bound.into();
            summary["ok"] = w.ok.into();
            Ok(summary_only(summary, 0))
        }
        Err(VarietyError::DegreeSharesCharacteristic { value, .. }) => {
            let mut summary = base;
            summary["value"] = json!([value.re, value.im]);
            summary["magnitude"] = value.norm().into();
            summary["ok"] = Value::Null;
            summary["hypothesis"] = "characteristic divides the degree".into();
            Ok(summary_only(summary, EXIT_HYPOTHESIS))
        }
        Err(e) => Err(e.into()),
    }
}

pub(super) fn phase(config: &ExperimentConfig, field: &Field) -> Result<RunOutput, HarnessError> {
    let p = config.polynomial(field, config.d)?;
    let s = phase_sweep(&p);
    let within = s.bound.map(|b| s.max_magnitude <= b + 1e-9);
    let summary = json!({
        "field": field_json(field),
        "d": config.d,
        "poly": p.to_string(),
        "max_magnitude": s.max_magnitude,
        "constant": s.constant,
        "argmax_s": s.argmax_s.0,
        "argmax_m": decode_index(field.q(), config.d, s.argmax_m).iter().map(|e| e.0).collect::<Vec<_>>(),
        "bound": s.bound,
        "within_bound": within,
        "within_kappa_fallback": s.constant <= config.thresholds.kappa_fallback + 1e-9,
    });
    Ok(summary_only(summary, 0))
}

pub(super) fn distance(
    config: &ExperimentConfig,
    field: &Field,
) -> Result<RunOutput, HarnessError> {
    let p = config.polynomial(field, config.d)?;
    let (e, f) = build_pair(config, field, &p, config.seed)?;
    let sets = exceptional_set(&p, &config.thresholds, config.nondegenerate)?;
    let params = verify_params(config, &sets);
    let report = DistanceReport::compute(&p, &p.to_string(), &e, &f, &params, Some(config.seed))?;
    let mut summary = json!({
        "field": field_json(field),
        "exceptional": exceptional_json(&sets),
        "report": report,
    });
    if let Some((e2, f2)) = build_slices(config, field)? {
        let product = product_set_experiment(
            &p,
            &e,
            &e2,
            &f,
            &f2,
            config.c,
            config.rho,
            config.thresholds.kappa_fallback,
        )?;
        summary["product"] = serde_json::to_value(product).unwrap();
    }
    Ok(summary_only(summary, 0))
}

pub(super) fn pinned(config: &ExperimentConfig, field: &Field) -> Result<RunOutput, HarnessError> {
    let p = config.polynomial(field, config.d)?;
    let (e, f) = build_pair(config, field, &p, config.seed)?;
    let report = pinned_distances(&p, &e, &f)?;
    let verdict = verify_pinned(&p, &e, &f, config.c, config.pin_fraction)?;
    let q = field.q();
    let mut table = Table::new(&["pin", "point", "size", "above_half"]);
    for entry in &report.pins {
        let point: Vec<String> = decode_index(q, config.d, entry.pin)
            .iter()
            .map(|c| c.to_string())
            .collect();
        table.rows.push(vec![
            entry.pin.to_string(),
            point.join(";"),
            entry.size.to_string(),
            (2 * entry.size > q as usize).to_string(),
        ]);
    }
    let summary = json!({
        "field": field_json(field),
        "d": config.d,
        "poly": p.to_string(),
        "e_size": e.len(),
        "f_size": f.len(),
        "seed": config.seed,
        "verdict": verdict,
    });
    Ok(RunOutput {
        table: Some(table),
        summary,
        exit_code: 0,
    })
}

pub(super) fn lift(config: &ExperimentConfig, field: &Field) -> Result<RunOutput, HarnessError> {
    let p = config.polynomial(field, config.d)?;
    let h = p.paraboloid_lift();
    let sizes: Vec<usize> = fibers(&h).iter().map(|v| v.len()).collect();
    let expected = (field.q() as usize).pow(config.d as u32);
    let (e, f) = build_pair(config, field, &p, config.seed)?;
    let delta_p = distance_set(&p, &e, &f)?;
    let delta_h = distance_set(&h, &e.product(&[Elem::ZERO]), &f.product(&[Elem::ZERO]))?;
    let summary = json!({
        "field": field_json(field),
        "d": config.d,
        "poly": p.to_string(),
        "lifted": h.to_string(),
        "fiber_sizes": sizes,
        "fibers_exact": sizes.iter().all(|&s| s == expected),
        "delta_p": encodings(&delta_p),
        "delta_h": encodings(&delta_h),
        "slice_consistent": delta_p == delta_h,
    });
    Ok(summary_only(summary, 0))
}
