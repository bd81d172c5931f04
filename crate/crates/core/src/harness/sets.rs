use std::path::PathBuf;
use std::str::FromStr;

use crate::distances::param_line;
use crate::field::{Elem, Field};
use crate::fourier::grid_len;
use crate::sampling::{rng_from_seed, sample_indices};
use crate::varieties::{variety, PointSet, Polynomial};

use super::{ConfigError, HarnessError};

/// Point-set description accepted by `--setE`, `--setF` and friends.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    All,
    /// Uniform without replacement; the seed falls back to one derived from `--seed`.
    Random {
        count: usize,
        seed: Option<u64>,
    },
    /// `{b + t a : t in F_q}`.
    ParamLine {
        a: Vec<u64>,
        b: Vec<u64>,
    },
    /// `{(s, i s)}` with `i^2 = -1`.
    IsoLine,
    /// Coordinates in the subfield of order `p^{n/2}`.
    Subfield,
    /// `V_t` of the active polynomial.
    Sphere(u64),
    File(PathBuf),
    /// The companion set (`F = E`).
    Same,
}

fn parse_u64(flag: &str, s: &str) -> Result<u64, ConfigError> {
    s.trim()
        .parse()
        .map_err(|_| ConfigError::new(flag, format!("`{s}` is not a nonnegative integer")))
}

fn parse_list(flag: &str, s: &str) -> Result<Vec<u64>, ConfigError> {
    s.split(',').map(|c| parse_u64(flag, c)).collect()
}

impl SetSpec {
    pub fn parse(flag: &str, text: &str) -> Result<Self, ConfigError> {
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (text, None),
        };
        let unexpected = || ConfigError::new(flag, format!("`{head}` takes no arguments"));
        let spec = match head {
            "all" => rest.map_or(Ok(SetSpec::All), |_| Err(unexpected()))?,
            "iso-line" => rest.map_or(Ok(SetSpec::IsoLine), |_| Err(unexpected()))?,
            "subfield" => rest.map_or(Ok(SetSpec::Subfield), |_| Err(unexpected()))?,
            "same" => rest.map_or(Ok(SetSpec::Same), |_| Err(unexpected()))?,
            "random" => {
                let rest =
                    rest.ok_or_else(|| ConfigError::new(flag, "expected random:<count>[:<seed>]"))?;
                let (count, seed) = match rest.split_once(':') {
                    Some((c, s)) => (c, Some(parse_u64(flag, s)?)),
                    None => (rest, None),
                };
                SetSpec::Random {
                    count: parse_u64(flag, count)? as usize,
                    seed,
                }
            }
            "param-line" => {
                let (a, b) = rest.and_then(|r| r.split_once(':')).ok_or_else(|| {
                    ConfigError::new(flag, "expected param-line:<a1,..,ad>:<b1,..,bd>")
                })?;
                let (a, b) = (parse_list(flag, a)?, parse_list(flag, b)?);
                if a.len() != b.len() {
                    return Err(ConfigError::new(
                        flag,
                        "direction and base point differ in length",
                    ));
                }
                SetSpec::ParamLine { a, b }
            }
            "sphere" => {
                let t = rest.ok_or_else(|| ConfigError::new(flag, "expected sphere:<t>"))?;
                SetSpec::Sphere(parse_u64(flag, t)?)
            }
            "file" => {
                let path = rest
                    .filter(|p| !p.is_empty())
                    .ok_or_else(|| ConfigError::new(flag, "expected file:<path>"))?;
                SetSpec::File(PathBuf::from(path))
            }
            other => {
                return Err(ConfigError::new(
                    flag,
                    format!("unknown set kind `{other}`"),
                ))
            }
        };
        Ok(spec)
    }

    /// Materializes the set in `F_q^d`. `companion` resolves `same`; `default_seed` feeds
    /// `random:<count>` without an explicit seed.
    pub fn build(
        &self,
        flag: &str,
        field: &Field,
        d: usize,
        poly: Option<&Polynomial>,
        companion: Option<&PointSet>,
        default_seed: u64,
    ) -> Result<PointSet, HarnessError> {
        let element = |v: u64| {
            field.element(v).map_err(|_| {
                ConfigError::new(flag, format!("{v} is not an element of F_{}", field.q()))
            })
        };
        match self {
            SetSpec::All => Ok(PointSet::full(field, d)),
            SetSpec::Random { count, seed } => {
                let len = grid_len(field.q(), d).expect("grid fits in memory");
                let mut rng = rng_from_seed(seed.unwrap_or(default_seed));
                Ok(
                    PointSet::new(field, d, sample_indices(&mut rng, len, *count))
                        .expect("indices in range"),
                )
            }
            SetSpec::ParamLine { a, b } => {
                if a.len() != d {
                    return Err(ConfigError::new(
                        flag,
                        format!("line has {} coordinates, expected {d}", a.len()),
                    )
                    .into());
                }
                let a = a
                    .iter()
                    .map(|&v| element(v))
                    .collect::<Result<Vec<_>, _>>()?;
                let b = b
                    .iter()
                    .map(|&v| element(v))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(param_line(field, &a, &b))
            }
            SetSpec::IsoLine => {
                if d != 2 {
                    return Err(ConfigError::new(flag, "iso-line lives in dimension 2").into());
                }
                let i = field
                    .sqrt_minus_one()
                    .ok_or(HarnessError::IsoUnavailable { q: field.q() })?;
                Ok(param_line(
                    field,
                    &[Elem::ONE, i],
                    &[Elem::ZERO, Elem::ZERO],
                ))
            }
            SetSpec::Subfield => {
                if !field.n().is_multiple_of(2) {
                    return Err(ConfigError::new(
                        flag,
                        format!(
                            "subfield needs an even extension degree, got n = {}",
                            field.n()
                        ),
                    )
                    .into());
                }
                let sub = field.subfield(field.n() / 2);
                let mut points: Vec<Vec<Elem>> = vec![Vec::new()];
                for _ in 0..d {
                    points = points
                        .into_iter()
                        .flat_map(|p| sub.iter().map(move |&c| [p.as_slice(), &[c]].concat()))
                        .collect();
                }
                Ok(PointSet::from_points(field, d, points).expect("subfield points are valid"))
            }
            SetSpec::Sphere(t) => {
                let p = poly.ok_or_else(|| {
                    ConfigError::new(flag, "sphere needs a polynomial in the set's dimension")
                })?;
                if p.arity() != d {
                    return Err(ConfigError::new(
                        flag,
                        "sphere needs a polynomial in the set's dimension",
                    )
                    .into());
                }
                Ok(variety(p, element(*t)?))
            }
            SetSpec::File(path) => read_point_file(flag, path, field, d),
            SetSpec::Same => companion
                .cloned()
                .ok_or_else(|| ConfigError::new(flag, "`same` needs a companion set").into()),
        }
    }
}

impl FromStr for SetSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SetSpec::parse("set", s)
    }
}

/// One point per line, comma-separated encodings; blank lines and `#` comments are skipped.
fn read_point_file(
    flag: &str,
    path: &PathBuf,
    field: &Field,
    d: usize,
) -> Result<PointSet, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(flag, format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| ConfigError::at_line(flag, lineno + 1, msg);
        let coords: Vec<Elem> = line
            .split(',')
            .map(|c| {
                let v: u64 = c
                    .trim()
                    .parse()
                    .map_err(|_| at(format!("`{}` is not an integer", c.trim())))?;
                field
                    .element(v)
                    .map_err(|_| at(format!("{v} is not an element of F_{}", field.q())))
            })
            .collect::<Result<_, _>>()?;
        if coords.len() != d {
            return Err(at(format!(
                "point has {} coordinates, expected {d}",
                coords.len()
            ))
            .into());
        }
        points.push(coords);
    }
    Ok(PointSet::from_points(field, d, points).expect("validated coordinates"))
}
