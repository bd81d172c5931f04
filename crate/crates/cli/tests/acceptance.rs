//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Decay constants are compared against `tests/fixtures/decay_constants.json`; set
//! `FFDIST_BLESS=1` to rewrite the fixture from the current run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ffdist_core::distances::{
    counting_function, distance_set, verify_falconer, verify_pinned, verify_square_identity,
    CountingMethod, Verdict,
};
use ffdist_core::fourier::{fourier_transform, grid_len, inverse_transform, plancherel_residual};
use ffdist_core::harness::SetSpec;
use ffdist_core::sampling::{
    derive_seed, random_grid, rng_from_seed, sample_indices, uniform_below, Rng,
};
use ffdist_core::varieties::{decay_spectrum, fibers, weil_sweep, Thresholds};
use ffdist_core::{make_field, Elem, Field, PointSet, Polynomial};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn field(q: u64) -> Field {
    let p = (2..=q).find(|k| q.is_multiple_of(*k)).unwrap();
    let n = (q as f64).log(p as f64).round() as u32;
    make_field(p, n, None).unwrap()
}

fn poly(text: &str, f: &Field, d: usize) -> Polynomial {
    Polynomial::parse(text, f, d).unwrap()
}

fn random_set(f: &Field, d: usize, k: usize, rng: &mut Rng) -> PointSet {
    let len = grid_len(f.q(), d).unwrap();
    PointSet::new(f, d, sample_indices(rng, len, k)).unwrap()
}

fn fourier_exactness() -> Outcome {
    let (mut worst_rt, mut worst_pl) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for q in [3u64, 5, 7, 9, 13] {
        let f = field(q);
        for d in 1..=3usize {
            if q.pow(d as u32) > 100_000 {
                continue;
            }
            let qf = q as f64;
            for trial in 0..20u64 {
                let grid = random_grid(
                    &f,
                    d,
                    &mut rng_from_seed(derive_seed(q * 10 + d as u64, trial)),
                );
                let back = inverse_transform(&fourier_transform(&grid));
                let rt = grid
                    .values()
                    .iter()
                    .zip(back.values())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                let pl = plancherel_residual(&grid);
                worst_rt = worst_rt.max(rt / qf.powf(d as f64 / 2.0));
                worst_pl = worst_pl.max(pl / qf.powi(d as i32));
                if rt >= 1e-9 * qf.powf(d as f64 / 2.0) || pl >= 1e-9 * qf.powi(d as i32) {
                    failures.push(format!("q={q} d={d} trial={trial}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "max roundtrip/q^(d/2) = {worst_rt:.2e}, max plancherel/q^d = {worst_pl:.2e}, failures {:?}",
            failures
        ),
    )
}

fn counting_oracle() -> Outcome {
    let mut compared = 0;
    let mut failures = Vec::new();
    for q in [5u64, 7] {
        let f = field(q);
        let len = q * q;
        for text in ["x1^2 + x2^2", "x1^2 - x2^2", "x1^3 + x2^2", "x1^2 + x2^3"] {
            let p = poly(text, &f, 2);
            let mut rng = rng_from_seed(q * 1000 + text.len() as u64);
            for pair in 0..50 {
                let ke = 1 + uniform_below(&mut rng, len) as usize;
                let kf = 1 + uniform_below(&mut rng, len) as usize;
                let e = random_set(&f, 2, ke, &mut rng);
                let g = random_set(&f, 2, kf, &mut rng);
                let direct = counting_function(&p, &e, &g, CountingMethod::Direct).unwrap();
                match counting_function(&p, &e, &g, CountingMethod::Fourier) {
                    Ok(fourier) if fourier == direct => {}
                    other => failures.push(format!("q={q} P={text} pair={pair}: {other:?}")),
                }
                compared += 1;
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{compared} pairs compared, mismatches {failures:?}"),
    )
}

fn weil_exhaustive() -> Outcome {
    let mut worst = 0.0f64;
    let mut total = 0;
    let mut failures = Vec::new();
    for p in [5u64, 7, 11, 13] {
        let f = field(p);
        for c in [2u32, 3, 4] {
            if (c as u64).is_multiple_of(p) {
                continue;
            }
            let s = weil_sweep(&f, c).unwrap();
            total += s.count;
            if s.bound > 0.0 {
                worst = worst.max(s.max_magnitude / s.bound);
            }
            if s.max_magnitude > s.bound + 1e-9 {
                failures.push(format!("p={p} c={c} |S|={} > {}", s.max_magnitude, s.bound));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{total} monic polynomials, max |S| / ((c-1) sqrt p) = {worst:.6}, failures {failures:?}"),
    )
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/decay_constants.json")
}

fn decay_constants() -> Outcome {
    let mut current: BTreeMap<String, f64> = BTreeMap::new();
    let mut failures = Vec::new();
    for s in [2u32, 3] {
        for d in [2usize, 3] {
            for q in [7u64, 11, 13] {
                let f = field(q);
                let ones = vec![Elem::ONE; d];
                let p = Polynomial::diagonal_power(&f, &ones, s).unwrap();
                let spectrum = decay_spectrum(&p, &Thresholds::default(), true).unwrap();
                let sharp = spectrum[1..].iter().map(|e| e.c_sharp).fold(0.0, f64::max);
                let limit = if s == 2 { 3.0 } else { 8.0 };
                if sharp > limit {
                    failures.push(format!("s={s} d={d} q={q}: c_sharp {sharp} > {limit}"));
                }
                current.insert(format!("s{s}_d{d}_q{q}_sharp_nonzero"), sharp);
                if s == 2 {
                    let fallback = spectrum[0].c_fallback;
                    if fallback > 3.0 {
                        failures.push(format!("s=2 d={d} q={q}: c_fallback(0) {fallback} > 3"));
                    }
                    current.insert(format!("s{s}_d{d}_q{q}_fallback_zero"), fallback);
                }
            }
        }
    }
    let path = fixture_path();
    let bless = std::env::var_os("FFDIST_BLESS").is_some();
    let note = if bless || !path.exists() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&current).unwrap() + "\n",
        )
        .unwrap();
        format!("recorded {} constants", current.len())
    } else {
        let frozen: BTreeMap<String, f64> =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for (key, value) in &current {
            match frozen.get(key) {
                Some(old) if *value > old + 1e-6 => {
                    failures.push(format!("{key} grew {old} -> {value}"))
                }
                Some(_) => {}
                None => failures.push(format!("{key} missing from fixture")),
            }
        }
        format!(
            "{} constants at most 1e-6 above the recorded values",
            current.len()
        )
    };
    let max_sharp2 = current
        .iter()
        .filter(|(k, _)| k.starts_with("s2") && k.ends_with("sharp_nonzero"))
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let max_sharp3 = current
        .iter()
        .filter(|(k, _)| k.starts_with("s3"))
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let max_fb = current
        .iter()
        .filter(|(k, _)| k.ends_with("fallback_zero"))
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    outcome(
        failures.is_empty(),
        format!(
            "max c_sharp s=2 {max_sharp2:.4}, s=3 {max_sharp3:.4}; max c_fallback(0) {max_fb:.4}; {note}; failures {failures:?}"
        ),
    )
}

fn counterexamples() -> Outcome {
    let size = |q: u64, spec: &str, text: &str| {
        let f = field(q);
        let p = poly(text, &f, 2);
        let e = SetSpec::parse("setE", spec)
            .unwrap()
            .build("setE", &f, 2, Some(&p), None, 0)
            .unwrap();
        distance_set(&p, &e, &e).unwrap().len()
    };
    let a = size(13, "iso-line", "x1^2 + x2^2");
    let b = size(9, "subfield", "x1^2 + x2^2");
    let c = size(7, "param-line:1,1:0,0", "x1^2 - x2^2");
    let c13 = size(13, "param-line:1,1:0,0", "x1^2 - x2^2");
    outcome(
        a == 1 && b == 3 && c == 1 && c13 == 1,
        format!("iso-line q=13 |D|={a}; subfield q=9 |D|={b}; diagonal line q=7 |D|={c}, q=13 |D|={c13}"),
    )
}

fn falconer() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (q, d, trials) in [(13u64, 2usize, 100u64), (11, 3, 100)] {
        let f = field(q);
        let p = Polynomial::diagonal_power(&f, &vec![Elem::ONE; d], 2).unwrap();
        let target = 9.0 * (q as f64).powi(d as i32 + 1);
        let size = (target.sqrt().ceil() as usize).min(grid_len(f.q(), d).unwrap());
        let mut min_delta = usize::MAX;
        for seed in 0..trials {
            let e = random_set(&f, d, size, &mut rng_from_seed(derive_seed(seed, 0)));
            let g = random_set(&f, d, size, &mut rng_from_seed(derive_seed(seed, 1)));
            let v = verify_falconer(&p, &e, &g, &[Elem::ZERO], 9.0).unwrap();
            min_delta = min_delta.min(v.delta_size);
            pass &= v.hypothesis && v.verdict == Verdict::Pass && v.delta_size >= q as usize - 1;
        }
        details.push(format!(
            "q={q} d={d} |E|=|F|={size}: min |D| = {min_delta} over {trials} trials"
        ));
    }
    outcome(pass, details.join("; "))
}

fn pinned() -> Outcome {
    let f = field(13);
    let p = poly("x1^2 + x2^2", &f, 2);
    let size = (9.0 * 13f64.powi(3)).sqrt().ceil() as usize;
    let mut worst = 1.0f64;
    let mut pass = true;
    for seed in 0..50 {
        let e = random_set(&f, 2, size, &mut rng_from_seed(derive_seed(seed, 0)));
        let g = random_set(&f, 2, size, &mut rng_from_seed(derive_seed(seed, 1)));
        let v = verify_pinned(&p, &e, &g, 9.0, 0.5).unwrap();
        worst = worst.min(v.fraction_above_half);
        pass &= v.hypothesis && v.verdict == Verdict::Pass;
    }
    outcome(
        pass,
        format!(
            "|E|=|F|={size}, min fraction of pins with |D_y| > q/2 = {worst:.4} over 50 trials"
        ),
    )
}

fn lift() -> Outcome {
    let f = field(7);
    let mut pass = true;
    let mut checked = 0;
    for text in ["x1^2 + x2^2", "x1^2 + x2^3"] {
        let p = poly(text, &f, 2);
        let h = p.paraboloid_lift();
        pass &= fibers(&h).iter().all(|v| v.len() == 49);
        let mut rng = rng_from_seed(text.len() as u64 + 17);
        for _ in 0..20 {
            let ke = 1 + uniform_below(&mut rng, 49) as usize;
            let kf = 1 + uniform_below(&mut rng, 49) as usize;
            let e = random_set(&f, 2, ke, &mut rng);
            let g = random_set(&f, 2, kf, &mut rng);
            let direct = distance_set(&p, &e, &g).unwrap();
            let lifted =
                distance_set(&h, &e.product(&[Elem::ZERO]), &g.product(&[Elem::ZERO])).unwrap();
            pass &= direct == lifted;
            checked += 1;
        }
    }
    outcome(
        pass,
        format!("{checked} pairs; every lifted fiber has q^d = 49 points"),
    )
}

fn square_identity() -> Outcome {
    let f = field(13);
    let ok = verify_square_identity(&PointSet::full(&f, 3), 1000, &mut rng_from_seed(2024));
    outcome(ok, "1000 random triples over F_13^3")
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ffdist");
    let invocations: [&[&str]; 5] = [
        &[
            "scan",
            "--q",
            "13",
            "--poly",
            "x1^2+x2^2",
            "--grid",
            "2000,19773",
            "--trials",
            "4",
            "--C",
            "9",
            "--seed",
            "42",
        ],
        &[
            "distance",
            "--q",
            "7",
            "--poly",
            "x1^2+x2^3",
            "--setE",
            "random:20",
            "--setF",
            "random:15",
            "--seed",
            "42",
        ],
        &[
            "pinned",
            "--q",
            "11",
            "--poly",
            "x1^2+x2^2",
            "--setE",
            "random:60",
            "--setF",
            "random:30",
            "--seed",
            "42",
        ],
        &[
            "fourier-check",
            "--q",
            "9",
            "--d",
            "2",
            "--trials",
            "5",
            "--seed",
            "42",
        ],
        &["decay", "--q", "11", "--d", "2", "--poly", "x1^3+x2^3"],
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut files = 0;
    for (k, args) in invocations.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("run{k}_{run}.out"));
            let status = Command::new(bin)
                .args(*args)
                .arg("--deterministic")
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            let mut bytes = vec![status.status.code().unwrap_or(-1) as u8];
            bytes.extend(status.stdout);
            bytes.extend(std::fs::read(&out).unwrap_or_default());
            let summary = ffdist_core::harness::summary_path(&out);
            if summary.exists() {
                bytes.extend(std::fs::read(&summary).unwrap());
                files += 1;
            }
            files += 1;
            outputs.push(bytes);
        }
        if outputs[0] != outputs[1] {
            mismatches.push(args[0]);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} invocations, {files} files compared, mismatches {mismatches:?}",
            invocations.len()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 10] = [
        (
            "fourier exactness",
            fourier_exactness,
            Some(Duration::from_secs(30)),
        ),
        (
            "counting oracle equivalence",
            counting_oracle,
            Some(Duration::from_secs(60)),
        ),
        (
            "weil exhaustive",
            weil_exhaustive,
            Some(Duration::from_secs(120)),
        ),
        ("diagonal decay constants", decay_constants, None),
        ("counterexamples", counterexamples, None),
        (
            "falconer verifier",
            falconer,
            Some(Duration::from_secs(120)),
        ),
        ("pinned verifier", pinned, Some(Duration::from_secs(120))),
        ("lift consistency", lift, None),
        ("square identity", square_identity, None),
        ("cli determinism", determinism, None),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > *limit {
                result.pass = false;
                result
                    .detail
                    .push_str(&format!("; exceeded {} s", limit.as_secs()));
            }
        }
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name} ({:.2} s): {}",
            if result.pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64(),
            result.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
