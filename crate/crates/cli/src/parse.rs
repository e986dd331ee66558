//! Parsers for the compact argument syntaxes.

use std::fmt;
use std::path::Path;

use anyhow::Context;
use ldpu_core::classifiers::{fixture, ClassifierModel, FIXTURE_NAMES};
use ldpu_core::mechanisms::{Family, MechanismSpec};
use ldpu_core::quantify::MechanismTemplate;
use ldpu_core::robustness::Hyperrectangle;

use crate::args::FamilyParams;

/// Bad command-line input detected before any library call (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub type Result<T> = std::result::Result<T, anyhow::Error>;

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn number(flag: &str, s: &str) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => usage(format!("{flag}: '{s}' is not a finite number")),
    }
}

pub fn numbers(flag: &str, s: &str) -> Result<Vec<f64>> {
    let v = s.split(',').map(|p| number(flag, p)).collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return usage(format!("{flag}: expected a comma-separated list of numbers"));
    }
    Ok(v)
}

pub fn range(flag: &str, s: &str) -> Result<(f64, f64)> {
    match numbers(flag, s)?.as_slice() {
        &[lo, hi] => Ok((lo, hi)),
        _ => usage(format!("{flag}: expected lo,hi (got '{s}')")),
    }
}

/// `0.2:0.8,0:1` -> one interval per dimension.
pub fn rect(s: &str, d: usize) -> Result<Hyperrectangle> {
    let mut bounds = Vec::new();
    for part in s.split(',') {
        let Some((a, b)) = part.split_once(':') else {
            return usage(format!("--rect: '{part}' is not of the form a:b"));
        };
        bounds.push((number("--rect", a)?, number("--rect", b)?));
    }
    if bounds.len() != d {
        return usage(format!("--rect has {} intervals but the point has {d} coordinates", bounds.len()));
    }
    Ok(Hyperrectangle::new(bounds)?)
}

/// 1-based dimension list to 0-based indices; all of `0..d` when absent.
pub fn dims(s: Option<&str>, d: usize) -> Result<Vec<usize>> {
    let Some(s) = s else {
        return Ok((0..d).collect());
    };
    let mut out = Vec::new();
    for p in s.split(',') {
        match p.trim().parse::<usize>() {
            Ok(i) if (1..=d).contains(&i) => {
                if out.contains(&(i - 1)) {
                    return usage(format!("--dims: dimension {i} listed twice"));
                }
                out.push(i - 1)
            }
            _ => return usage(format!("--dims: '{p}' is not a dimension in 1..={d}")),
        }
    }
    Ok(out)
}

pub fn families(s: &str, fam: &FamilyParams) -> Result<Vec<MechanismTemplate>> {
    s.split(',')
        .map(|name| {
            let family = Family::parse(name.trim())?;
            Ok(MechanismTemplate { family, delta: fam.delta, k: fam.k, indicator: fam.indicator })
        })
        .collect()
}

/// One mechanism from `family[:eps[:delta][:k]]`.
#[derive(Debug, Clone)]
pub struct MechSpecArg {
    pub family: Family,
    pub eps: Option<f64>,
    pub delta: f64,
    pub k: usize,
    pub indicator: Option<f64>,
}

impl MechSpecArg {
    pub fn parse(s: &str, fam: &FamilyParams) -> Result<Self> {
        let fields: Vec<&str> = s.trim().split(':').collect();
        let family = Family::parse(fields[0].trim())?;
        let mut m = MechSpecArg { family, eps: None, delta: fam.delta, k: fam.k, indicator: fam.indicator };
        let k = |f: &str| -> Result<usize> {
            f.trim().parse().or_else(|_| usage(format!("--mech '{s}': grid size '{f}' is not an integer")))
        };
        match fields.len() {
            1 => {}
            2 => m.eps = Some(number("--mech", fields[1])?),
            3 => {
                m.eps = Some(number("--mech", fields[1])?);
                // the third field is the grid size for discrete families, delta otherwise
                if family.is_discrete() {
                    m.k = k(fields[2])?;
                } else {
                    m.delta = number("--mech", fields[2])?;
                }
            }
            4 => {
                m.eps = Some(number("--mech", fields[1])?);
                m.delta = number("--mech", fields[2])?;
                m.k = k(fields[3])?;
            }
            _ => return usage(format!("--mech '{s}': expected family[:eps[:delta][:k]]")),
        }
        Ok(m)
    }

    pub fn build(&self, eps: Option<f64>) -> Result<MechanismSpec> {
        let Some(eps) = eps.or(self.eps) else {
            return usage(format!(
                "no epsilon for {}: use {}:<eps> or pass --eps",
                self.family, self.family
            ));
        };
        let mech = MechanismSpec::build(self.family, eps, self.delta, self.k)?;
        Ok(match self.indicator {
            Some(d) => mech.wrap_indicator(d)?,
            None => mech,
        })
    }
}

/// Mechanisms keyed by 0-based dimension.
#[derive(Debug, Clone)]
pub struct MechPlan(pub Vec<(usize, MechSpecArg)>);

impl MechPlan {
    /// Either `spec` applied to every dimension in `dims`, or `1=pm:2,3=krr:2:100`.
    pub fn parse(s: &str, dims_arg: Option<&str>, d: usize, fam: &FamilyParams) -> Result<Self> {
        if !s.contains('=') {
            let m = MechSpecArg::parse(s, fam)?;
            return Ok(MechPlan(dims(dims_arg, d)?.into_iter().map(|i| (i, m.clone())).collect()));
        }
        if dims_arg.is_some() {
            return usage("--dims cannot be combined with per-dimension --mech assignments");
        }
        let mut out: Vec<(usize, MechSpecArg)> = Vec::new();
        for part in s.split(',') {
            let Some((dim, spec)) = part.split_once('=') else {
                return usage(format!("--mech: '{part}' is not of the form <dim>=<mechanism>"));
            };
            let i = dims(Some(dim), d)?[0];
            if out.iter().any(|(j, _)| *j == i) {
                return usage(format!("--mech: dimension {} assigned twice", i + 1));
            }
            out.push((i, MechSpecArg::parse(spec, fam)?));
        }
        Ok(MechPlan(out))
    }

    pub fn build(&self, eps: Option<f64>) -> Result<Vec<(usize, MechanismSpec)>> {
        self.0.iter().map(|(i, m)| Ok((*i, m.build(eps)?))).collect()
    }
}

/// A model path, the same path with `.json` appended, or a built-in fixture name.
pub fn model(s: &str) -> Result<ClassifierModel> {
    let path = Path::new(s);
    if path.is_file() {
        return ClassifierModel::load(path).with_context(|| format!("cannot load model {s}"));
    }
    let with_ext = Path::new(&format!("{s}.json")).to_path_buf();
    if with_ext.is_file() {
        return ClassifierModel::load(&with_ext).with_context(|| format!("cannot load model {}", with_ext.display()));
    }
    let stem = path.file_stem().and_then(|n| n.to_str()).unwrap_or(s);
    match fixture(stem) {
        Some(m) => Ok(m),
        None => usage(format!(
            "model '{s}' is neither a readable file nor a built-in fixture ({})",
            FIXTURE_NAMES.join(", ")
        )),
    }
}
