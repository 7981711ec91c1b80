//! Flag/config merging and domain-object construction.
//!
//! A `Resolver` wraps the optional JSON config object. Every accessor
//! prefers the explicit flag and falls back to the config key of the same
//! (snake_case) name; list- and matrix-valued keys accept either the flag
//! string syntax or native JSON arrays.

use crate::args::CriticSpecArgs;
use algrealism::critics::coding::Coder;
use algrealism::critics::Critic;
use algrealism::prob::{DistortionMatrix, FiniteSource, Kernel};
use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;
use std::path::Path;

pub struct Resolver {
    cfg: Value,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Resolver> {
        let cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                let value: Value = serde_json::from_str(&text)
                    .with_context(|| format!("config file {} is not valid JSON", p.display()))?;
                if !value.is_object() {
                    bail!("config file {} must contain a JSON object", p.display());
                }
                value
            }
            None => Value::Null,
        };
        Ok(Resolver { cfg })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        match self.cfg.get(key) {
            Some(Value::Null) | None => None,
            Some(v) => Some(v),
        }
    }

    pub fn f64(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| anyhow!("config key {key:?} must be a number"))
            })
            .transpose()
    }

    pub fn u64(&self, flag: Option<u64>, key: &str) -> Result<Option<u64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.as_u64()
                    .ok_or_else(|| anyhow!("config key {key:?} must be a non-negative integer"))
            })
            .transpose()
    }

    pub fn usize(&self, flag: Option<usize>, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(flag.map(|v| v as u64), key)?.map(|v| v as usize))
    }

    pub fn u32(&self, flag: Option<u32>, key: &str) -> Result<Option<u32>> {
        Ok(self.u64(flag.map(u64::from), key)?.map(|v| v as u32))
    }

    pub fn string(&self, flag: Option<String>, key: &str) -> Result<Option<String>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| anyhow!("config key {key:?} must be a string"))
            })
            .transpose()
    }

    /// Boolean switch: the flag can only assert, the config can supply
    /// either value.
    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        self.get(key)
            .map(|v| {
                v.as_bool()
                    .ok_or_else(|| anyhow!("config key {key:?} must be a boolean"))
            })
            .transpose()
            .map(|v| v.unwrap_or(false))
    }

    pub fn floats(&self, flag: &Option<String>, key: &str) -> Result<Option<Vec<f64>>> {
        if let Some(s) = flag {
            return parse_floats(s).map(Some);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_floats(s).map(Some),
            Some(Value::Array(_)) => Ok(Some(floats_from_value(self.get(key).unwrap())?)),
            Some(_) => bail!("config key {key:?} must be a string or an array of numbers"),
        }
    }

    pub fn matrix(&self, flag: &Option<String>, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        if let Some(s) = flag {
            return parse_matrix(s).map(Some);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_matrix(s).map(Some),
            Some(Value::Array(rows)) => rows
                .iter()
                .map(floats_from_value)
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => bail!("config key {key:?} must be a string or an array of rows"),
        }
    }

    pub fn usizes(&self, flag: &Option<String>, key: &str) -> Result<Option<Vec<usize>>> {
        if let Some(s) = flag {
            return parse_usizes(s).map(Some);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_usizes(s).map(Some),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_u64()
                        .map(|u| u as usize)
                        .ok_or_else(|| anyhow!("config key {key:?} holds a non-integer entry"))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => bail!("config key {key:?} must be a string or an array of integers"),
        }
    }

    /// A critic description: inline JSON from the flag, or the config
    /// key's object.
    pub fn critic_value(&self, flag: &Option<String>, key: &str) -> Result<Option<Value>> {
        if let Some(s) = flag {
            let v: Value = serde_json::from_str(s).context("--critic-json is not valid JSON")?;
            return Ok(Some(v));
        }
        Ok(self.get(key).cloned())
    }
}

pub fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| anyhow!("missing required parameter: {what} (flag or config key)"))
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("cannot parse {t:?} as a number"))
        })
        .collect()
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(parse_floats).collect()
}

fn parse_usizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("cannot parse {t:?} as an integer"))
        })
        .collect()
}

fn floats_from_value(v: &Value) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| anyhow!("expected an array of numbers"))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| anyhow!("expected a number, got {x}"))
        })
        .collect()
}

pub fn source_from(pmf: Vec<f64>) -> Result<FiniteSource> {
    Ok(FiniteSource::new(pmf)?)
}

/// Builds the reference channel from `--bsc` or `--kernel` (exactly one).
pub fn kernel_from(bsc: Option<f64>, rows: Option<Vec<Vec<f64>>>, k: usize) -> Result<Kernel> {
    match (bsc, rows) {
        (Some(_), Some(_)) => bail!("provide either --bsc or --kernel, not both"),
        (Some(eps), None) => {
            if k != 2 {
                bail!("--bsc needs a binary source, got alphabet size {k}");
            }
            Ok(Kernel::bsc(eps)?)
        }
        (None, Some(rows)) => {
            let kernel = Kernel::new(rows)?;
            if kernel.k() != k {
                bail!(
                    "kernel is {}x{} but the source alphabet has {k} symbols",
                    kernel.k(),
                    kernel.k()
                );
            }
            Ok(kernel)
        }
        (None, None) => bail!("missing reference channel: provide --bsc or --kernel"),
    }
}

/// Builds the distortion matrix; defaults to Hamming on the source
/// alphabet when neither flag is given.
pub fn distortion_from(
    hamming: bool,
    rows: Option<Vec<Vec<f64>>>,
    k: usize,
) -> Result<DistortionMatrix> {
    match (hamming, rows) {
        (true, Some(_)) => bail!("provide either --hamming or --distortion, not both"),
        (_, Some(rows)) => {
            let d = DistortionMatrix::new(rows)?;
            if d.k() != k {
                bail!(
                    "distortion matrix is {}x{} but the source alphabet has {k} symbols",
                    d.k(),
                    d.k()
                );
            }
            Ok(d)
        }
        (_, None) => Ok(DistortionMatrix::hamming(k)?),
    }
}

fn need_base<'a>(base: Option<&'a FiniteSource>, kind: &str) -> Result<&'a FiniteSource> {
    base.ok_or_else(|| anyhow!("critic kind {kind:?} needs --pmf for its base distribution"))
}

/// Builds a critic from the flat flags or `--critic-json`; returns `None`
/// when no critic was requested at all.
pub fn build_critic(
    spec: &CriticSpecArgs,
    r: &Resolver,
    base: Option<&FiniteSource>,
) -> Result<Option<Critic>> {
    if let Some(desc) = r.critic_value(&spec.critic_json, "critic")? {
        return critic_from_value(base, &desc).map(Some);
    }
    let Some(kind) = r.string(spec.kind.clone(), "kind")? else {
        return Ok(None);
    };
    let critic = match kind.as_str() {
        "frequency" => {
            let base = need_base(base, &kind)?;
            let e0 = require(r.usize(spec.e0, "e0")?, "--e0")?;
            Critic::frequency(base, e0)?
        }
        "run" => {
            let q = require(r.f64(spec.q, "q")?, "--q")?;
            let n_max = require(r.usize(spec.n_max, "n_max")?, "--n-max")?;
            Critic::longest_run(q, n_max)?
        }
        "compressor" => {
            let base = need_base(base, &kind)?;
            let coder =
                Coder::from_id(&require(r.string(spec.coder.clone(), "coder")?, "--coder")?)?;
            Critic::compressor(base, coder)?
        }
        "empirical-tvd" => {
            let base = need_base(base, &kind)?;
            match r.u32(spec.exponent, "exponent")? {
                Some(e) => Critic::empirical_tvd_with_exponent(base, e)?,
                None => Critic::empirical_tvd(base)?,
            }
        }
        "llr" => {
            let base = need_base(base, &kind)?;
            let alt = require(r.floats(&spec.alt, "alt")?, "--alt")?;
            Critic::llr(base, &alt)?
        }
        "constant" => {
            let base = need_base(base, &kind)?;
            let value = require(r.f64(spec.value, "value")?, "--value")?;
            Critic::constant(base, value)?
        }
        "mixture" => bail!("mixtures are described with --critic-json"),
        other => bail!("unknown critic kind {other:?}"),
    };
    Ok(Some(critic))
}

/// Builds a critic from a JSON description (recursive for mixtures).
pub fn critic_from_value(base: Option<&FiniteSource>, desc: &Value) -> Result<Critic> {
    let kind = desc
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| anyhow!("critic JSON needs a string \"kind\" field"))?;
    let f64_of = |key: &str| -> Result<f64> {
        desc.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| anyhow!("critic kind {kind:?} needs a numeric {key:?} field"))
    };
    let u64_of = |key: &str| -> Result<u64> {
        desc.get(key)
            .and_then(Value::as_u64)
            .ok_or_else(|| anyhow!("critic kind {kind:?} needs an integer {key:?} field"))
    };
    Ok(match kind {
        "frequency" => Critic::frequency(need_base(base, kind)?, u64_of("e0")? as usize)?,
        "run" => Critic::longest_run(f64_of("q")?, u64_of("n_max")? as usize)?,
        "compressor" => {
            let coder = desc
                .get("coder")
                .and_then(Value::as_str)
                .ok_or_else(|| anyhow!("compressor critic needs a \"coder\" field"))?;
            Critic::compressor(need_base(base, kind)?, Coder::from_id(coder)?)?
        }
        "empirical-tvd" => match desc.get("exponent") {
            Some(v) => Critic::empirical_tvd_with_exponent(
                need_base(base, kind)?,
                v.as_u64()
                    .ok_or_else(|| anyhow!("\"exponent\" must be an integer"))?
                    as u32,
            )?,
            None => Critic::empirical_tvd(need_base(base, kind)?)?,
        },
        "llr" => {
            let alt = floats_from_value(
                desc.get("alt")
                    .ok_or_else(|| anyhow!("llr critic needs an \"alt\" array"))?,
            )?;
            Critic::llr(need_base(base, kind)?, &alt)?
        }
        "constant" => Critic::constant(need_base(base, kind)?, f64_of("value")?)?,
        "mixture" => {
            let parts = desc
                .get("parts")
                .and_then(Value::as_array)
                .ok_or_else(|| anyhow!("mixture critic needs a \"parts\" array"))?;
            let built = parts
                .iter()
                .map(|part| {
                    let (weight, inner) = match part {
                        Value::Array(pair) if pair.len() == 2 => (
                            pair[0]
                                .as_f64()
                                .ok_or_else(|| anyhow!("mixture weight must be a number"))?,
                            &pair[1],
                        ),
                        Value::Object(_) => (
                            part.get("weight")
                                .and_then(Value::as_f64)
                                .ok_or_else(|| anyhow!("mixture part needs a \"weight\""))?,
                            part.get("critic")
                                .ok_or_else(|| anyhow!("mixture part needs a \"critic\""))?,
                        ),
                        _ => bail!("mixture parts are [weight, critic] pairs"),
                    };
                    Ok((weight, critic_from_value(base, inner)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Critic::mixture(built)?
        }
        other => bail!("unknown critic kind {other:?}"),
    })
}
