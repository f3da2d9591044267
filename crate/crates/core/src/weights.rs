//! Edge-weight distributions and the deterministic keyed oracle realizing
//! the i.i.d. family `{X_e}` without storing a single weight.
//!
//! A weight is a pure function of `(master_seed, canonical edge key)`: the
//! key is serialized into 64-bit words, absorbed into the seed by the mixer
//! in [`crate::rng`], mapped to `[0, 1)` and pushed through the inverse CDF
//! of the configured family. Because the same edge key yields the same
//! weight in every subgraph variant, couplings across `T`, `T'` and `T|_i`
//! come for free.
//!
//! Inverse CDF per family (u uniform on `[0, 1)`):
//! - `constant(c)`:        c
//! - `uniform(a,b)`:       a + (b - a) u
//! - `exp(rate)`:          -ln(1 - u) / rate
//! - `shifted_exp(c,rate)`: c - ln(1 - u) / rate
//! - `pareto(scale,shape)`: scale (1 - u)^(-1/shape)

use crate::num::{real, Real};
use crate::rng;
use crate::topology::{EdgeKey, EdgeKind};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeightError {
    #[error("infinite mean: {0}")]
    InfiniteMean(String),
    #[error("invalid weight spec: {0}")]
    InvalidSpec(String),
    #[error("cannot parse {0:?} as a weight spec")]
    ParseSpec(String),
}

/// Edge-weight distribution descriptor. Every family is supported on
/// `[floor, inf)` with `floor >= 0` and has finite mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSpec<R> {
    Constant { value: R },
    Uniform { lo: R, hi: R },
    Exponential { rate: R },
    ShiftedExponential { floor: R, rate: R },
    Pareto { scale: R, shape: R },
}

/// Finiteness verdict for `E[X^p]`, with the closed-form value where one
/// exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport<R> {
    pub finite: bool,
    pub value: Option<R>,
}

impl<R: Real> WeightSpec<R> {
    pub fn validate(&self) -> Result<(), WeightError> {
        let bad = |msg: &str| Err(WeightError::InvalidSpec(msg.to_string()));
        match *self {
            WeightSpec::Constant { value } => {
                if value < R::zero() || !value.is_finite() {
                    return bad("constant value must be a finite nonnegative real");
                }
            }
            WeightSpec::Uniform { lo, hi } => {
                if lo < R::zero() || hi < lo || !hi.is_finite() {
                    return bad("uniform needs 0 <= a <= b < inf");
                }
            }
            WeightSpec::Exponential { rate } => {
                if rate <= R::zero() || !rate.is_finite() {
                    return bad("exponential rate must be positive");
                }
            }
            WeightSpec::ShiftedExponential { floor, rate } => {
                if floor < R::zero() || rate <= R::zero() || !rate.is_finite() {
                    return bad("shifted exponential needs c >= 0 and rate > 0");
                }
            }
            WeightSpec::Pareto { scale, shape } => {
                if scale <= R::zero() || shape <= R::zero() || !shape.is_finite() {
                    return bad("pareto needs scale > 0 and shape > 0");
                }
            }
        }
        Ok(())
    }

    /// Greatest `c >= 0` with `P(X >= c) = 1`.
    pub fn floor(&self) -> R {
        match *self {
            WeightSpec::Constant { value } => value,
            WeightSpec::Uniform { lo, .. } => lo,
            WeightSpec::Exponential { .. } => R::zero(),
            WeightSpec::ShiftedExponential { floor, .. } => floor,
            WeightSpec::Pareto { scale, .. } => scale,
        }
    }

    /// Exact mean; errors for Pareto with shape <= 1.
    pub fn analytic_mean(&self) -> Result<R, WeightError> {
        let two = real::<R>(2.0);
        match *self {
            WeightSpec::Constant { value } => Ok(value),
            WeightSpec::Uniform { lo, hi } => Ok((lo + hi) / two),
            WeightSpec::Exponential { rate } => Ok(R::one() / rate),
            WeightSpec::ShiftedExponential { floor, rate } => Ok(floor + R::one() / rate),
            WeightSpec::Pareto { scale, shape } => {
                if shape <= R::one() {
                    Err(WeightError::InfiniteMean(format!(
                        "pareto with shape {shape} <= 1"
                    )))
                } else {
                    Ok(scale * shape / (shape - R::one()))
                }
            }
        }
    }

    /// Finiteness (and closed-form value where available) of `E[X^p]`, `p >= 1`.
    pub fn moment_report(&self, p: R) -> MomentReport<R> {
        match *self {
            WeightSpec::Constant { value } => MomentReport {
                finite: true,
                value: Some(value.powf(p)),
            },
            WeightSpec::Uniform { lo, hi } => {
                let value = if lo == hi {
                    lo.powf(p)
                } else {
                    let q = p + R::one();
                    (hi.powf(q) - lo.powf(q)) / (q * (hi - lo))
                };
                MomentReport {
                    finite: true,
                    value: Some(value),
                }
            }
            WeightSpec::Exponential { rate } => {
                // E[X^p] = Gamma(p+1) / rate^p
                let g = statrs::function::gamma::gamma(p.to_f64().unwrap() + 1.0);
                MomentReport {
                    finite: true,
                    value: Some(real::<R>(g) / rate.powf(p)),
                }
            }
            // finite for every p (exponential tail); no simple closed form
            // for non-integer p, so no value is reported
            WeightSpec::ShiftedExponential { .. } => MomentReport {
                finite: true,
                value: None,
            },
            WeightSpec::Pareto { scale, shape } => {
                if shape > p {
                    MomentReport {
                        finite: true,
                        value: Some(shape * scale.powf(p) / (shape - p)),
                    }
                } else {
                    MomentReport {
                        finite: false,
                        value: None,
                    }
                }
            }
        }
    }

    /// Inverse CDF at `u` in `[0, 1)`.
    pub fn quantile(&self, u: R) -> R {
        match *self {
            WeightSpec::Constant { value } => value,
            WeightSpec::Uniform { lo, hi } => lo + (hi - lo) * u,
            WeightSpec::Exponential { rate } => -(R::one() - u).ln() / rate,
            WeightSpec::ShiftedExponential { floor, rate } => {
                floor - (R::one() - u).ln() / rate
            }
            WeightSpec::Pareto { scale, shape } => {
                scale * (R::one() - u).powf(-R::one() / shape)
            }
        }
    }

    /// CDF at `x` (used by goodness-of-fit tests).
    pub fn cdf(&self, x: R) -> R {
        if x < self.floor() {
            return R::zero();
        }
        match *self {
            WeightSpec::Constant { .. } => R::one(),
            WeightSpec::Uniform { lo, hi } => {
                if lo == hi || x >= hi {
                    R::one()
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            WeightSpec::Exponential { rate } => R::one() - (-rate * x).exp(),
            WeightSpec::ShiftedExponential { floor, rate } => {
                R::one() - (-rate * (x - floor)).exp()
            }
            WeightSpec::Pareto { scale, shape } => R::one() - (scale / x).powf(shape),
        }
    }

    /// Short token for file names, e.g. `shifted_exp_c0.5_r1`.
    pub fn slug(&self) -> String {
        fn t<R: Real>(x: R) -> String {
            format!("{}", x.to_f64().unwrap())
        }
        match *self {
            WeightSpec::Constant { value } => format!("const_{}", t(value)),
            WeightSpec::Uniform { lo, hi } => format!("unif_{}_{}", t(lo), t(hi)),
            WeightSpec::Exponential { rate } => format!("exp_r{}", t(rate)),
            WeightSpec::ShiftedExponential { floor, rate } => {
                format!("shifted_exp_c{}_r{}", t(floor), t(rate))
            }
            WeightSpec::Pareto { scale, shape } => {
                format!("pareto_s{}_a{}", t(scale), t(shape))
            }
        }
    }
}

impl<R: Real> fmt::Display for WeightSpec<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn t<R: Real>(x: R) -> f64 {
            x.to_f64().unwrap()
        }
        match *self {
            WeightSpec::Constant { value } => write!(f, "constant(c={})", t(value)),
            WeightSpec::Uniform { lo, hi } => write!(f, "uniform(a={},b={})", t(lo), t(hi)),
            WeightSpec::Exponential { rate } => write!(f, "exp(rate={})", t(rate)),
            WeightSpec::ShiftedExponential { floor, rate } => {
                write!(f, "shifted_exp(c={},rate={})", t(floor), t(rate))
            }
            WeightSpec::Pareto { scale, shape } => {
                write!(f, "pareto(scale={},shape={})", t(scale), t(shape))
            }
        }
    }
}

/// Grammar: `family(key=value,...)` with families `constant(c=..)`,
/// `uniform(a=..,b=..)`, `exp(rate=..)`, `shifted_exp(c=..,rate=..)`,
/// `pareto(scale=..,shape=..)`.
impl<R: Real> FromStr for WeightSpec<R> {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || WeightError::ParseSpec(s.to_string());
        let trimmed = s.trim();
        let open = trimmed.find('(').ok_or_else(err)?;
        if !trimmed.ends_with(')') {
            return Err(err());
        }
        let name = trimmed[..open].trim().to_ascii_lowercase();
        let body = &trimmed[open + 1..trimmed.len() - 1];
        let get = |key: &str| -> Result<R, WeightError> {
            for pair in body.split(',') {
                let (k, v) = pair.split_once('=').ok_or_else(err)?;
                if k.trim() == key {
                    let x: f64 = v.trim().parse().map_err(|_| err())?;
                    return Ok(real(x));
                }
            }
            Err(err())
        };
        let spec = match name.as_str() {
            "constant" | "const" => WeightSpec::Constant { value: get("c")? },
            "uniform" | "unif" => WeightSpec::Uniform {
                lo: get("a")?,
                hi: get("b")?,
            },
            "exp" | "exponential" => WeightSpec::Exponential { rate: get("rate")? },
            "shifted_exp" | "shiftedexponential" => WeightSpec::ShiftedExponential {
                floor: get("c")?,
                rate: get("rate")?,
            },
            "pareto" => WeightSpec::Pareto {
                scale: get("scale")?,
                shape: get("shape")?,
            },
            _ => return Err(err()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<R: Real> Serialize for WeightSpec<R> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de, R: Real> Deserialize<'de> for WeightSpec<R> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Deterministic realization of `{X_e}`: immutable, pure, shareable.
#[derive(Debug, Clone)]
pub struct WeightOracle<R> {
    master_seed: u64,
    spec: WeightSpec<R>,
}

impl<R: Real> WeightOracle<R> {
    /// Rejects specs with invalid parameters or infinite mean.
    pub fn new(master_seed: u64, spec: WeightSpec<R>) -> Result<Self, WeightError> {
        spec.validate()?;
        spec.analytic_mean()?;
        Ok(WeightOracle { master_seed, spec })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn spec(&self) -> &WeightSpec<R> {
        &self.spec
    }

    /// The weight `X_e`: pure in `(master_seed, e)`, marginally `spec`.
    pub fn weight(&self, e: &EdgeKey) -> R {
        self.weight_raw(
            e.kind,
            e.anchor.z,
            e.anchor.word.len() as u64,
            fold_letters(e.anchor.word.letters()),
        )
    }

    /// Same function as [`Self::weight`], taking the anchor pre-serialized
    /// as `(kind, z, word length, folded letter hash)`. The search engine
    /// uses this to skip edge-key construction on hot paths.
    pub(crate) fn weight_raw(&self, kind: EdgeKind, z: i64, word_len: u64, acc: u64) -> R {
        let tag = match kind {
            EdgeKind::Tree => 0x7472_6565,
            EdgeKind::Z => 0x7a65_6467,
        };
        let h = rng::absorb(self.master_seed, &[tag, z as u64, word_len, acc]);
        self.spec.quantile(rng::unit(h))
    }

    /// Sum of weights along an explicit edge list (`|gamma|_X`).
    pub fn path_weight(&self, edges: &[EdgeKey]) -> R {
        edges
            .iter()
            .fold(R::zero(), |acc, e| acc + self.weight(e))
    }
}

/// Folds a letter sequence into one word: letters are packed 8 per chunk
/// (little-endian) and each chunk goes through one mixing round. The word
/// arena in the search engine reproduces this fold incrementally; the two
/// must stay in lockstep or weights change under couplings.
pub(crate) fn fold_letters(letters: &[u8]) -> u64 {
    let mut acc = 0u64;
    for chunk in letters.chunks(8) {
        let mut w = 0u64;
        for (i, &l) in chunk.iter().enumerate() {
            w |= (l as u64) << (8 * i);
        }
        acc = rng::mix64(acc ^ w);
    }
    acc
}
