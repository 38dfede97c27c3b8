//! Session configuration: a sectioned TOML file with rational matrix
//! literals (integers or "p/q" strings) and expressions in the toolkit's
//! grammar. Builders turn the raw sections into core objects, resolving
//! the variable set from an explicit [vars] section or from the declared
//! group family.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use hypolie_core::group::{Family, GroupLaw};
use hypolie_core::kolmogorov::KolmogorovSpec;
use hypolie_core::operator::{from_frame, SecondOrderOperator};
use hypolie_core::ratmat::RatMatrix;
use hypolie_core::scalar::Scalar;
use hypolie_core::fields::VectorField;
use hypolie_core::symbolic::{parse, Expr, VarSet};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub vars: Option<VarsSection>,
    pub group: Option<GroupSection>,
    pub operator: Option<OperatorSection>,
    pub kolmogorov: Option<KolmogorovSection>,
    #[serde(default)]
    pub functions: std::collections::BTreeMap<String, String>,
    pub scan: Option<ScanSection>,
    pub represent: Option<RepresentSection>,
    pub check: Option<CheckSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarsSection {
    pub names: Vec<String>,
    pub time: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub family: String,
    pub b: Option<Vec<Vec<toml::Value>>>,
    pub dim: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub a: Option<Vec<Vec<String>>>,
    pub b: Option<Vec<String>>,
    pub fields: Option<Vec<Vec<String>>>,
    pub drift: Option<Vec<String>>,
    pub signs: Option<Vec<toml::Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KolmogorovSection {
    pub a: Vec<Vec<toml::Value>>,
    pub b: Vec<Vec<toml::Value>>,
    pub t_samples: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub p: Vec<f64>,
    pub radii: Option<Vec<f64>>,
    pub order: Option<usize>,
    pub functions: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentSection {
    pub dim: usize,
    pub radius: f64,
    pub functions: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_depth: Option<usize>,
}

/// A loaded configuration together with its raw bytes (hashed into
/// reports).
pub struct LoadedConfig {
    pub session: SessionConfig,
    pub raw: String,
}

/// Error presentation carries line/column; the caller maps it to exit 2.
pub fn load(path: &Path) -> Result<LoadedConfig> {
    let raw = fs::read_to_string(path)
        .with_context(|| format!("cannot read config '{}'", path.display()))?;
    let session: SessionConfig = toml::from_str(&raw).map_err(|err| {
        let place = err
            .span()
            .map(|span| {
                let (line, col) = offset_to_line_col(&raw, span.start);
                format!(" at line {}, column {}", line, col)
            })
            .unwrap_or_default();
        anyhow!("config error{}: {}", place, err.message())
    })?;
    Ok(LoadedConfig { session, raw })
}

fn offset_to_line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in text.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// Parse a rational literal: a TOML integer, or a string "p/q" / "p" /
/// decimal.
pub fn rational_value(v: &toml::Value) -> Result<BigRational> {
    match v {
        toml::Value::Integer(n) => Ok(BigRational::from_integer(BigInt::from(*n))),
        toml::Value::String(s) => rational_str(s),
        other => bail!("expected a rational literal, got {}", other),
    }
}

pub fn rational_str(s: &str) -> Result<BigRational> {
    let empty = VarSet::new(&[], None).expect("empty variable set");
    let expr = parse(s, &empty).map_err(|e| anyhow!("bad rational '{}': {}", s, e))?;
    let aff = expr
        .as_affine()
        .filter(|l| l.is_constant())
        .ok_or_else(|| anyhow!("'{}' is not a constant", s))?;
    aff.constant
        .as_exact()
        .cloned()
        .ok_or_else(|| anyhow!("'{}' is not an exact rational", s))
}

pub fn rational_matrix(rows: &[Vec<toml::Value>]) -> Result<RatMatrix> {
    let r = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|row| row.len() != c) {
        bail!("matrix rows have unequal lengths");
    }
    let mut m = RatMatrix::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = rational_value(v)
                .with_context(|| format!("matrix entry ({}, {})", i + 1, j + 1))?;
        }
    }
    Ok(m)
}

impl SessionConfig {
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.check.as_ref().and_then(|c| c.seed))
            .unwrap_or(hypolie_core::sample::DEFAULT_SEED)
    }

    pub fn tol(&self, flag: Option<f64>) -> f64 {
        flag.or(self.check.as_ref().and_then(|c| c.tol)).unwrap_or(1e-7)
    }

    pub fn max_depth(&self, flag: Option<usize>, dim: usize) -> usize {
        flag.or(self.check.as_ref().and_then(|c| c.max_depth))
            .unwrap_or(dim + 2)
    }

    /// Build the group law from [group].
    pub fn build_group(&self) -> Result<GroupLaw> {
        let section = self
            .group
            .as_ref()
            .ok_or_else(|| anyhow!("config has no [group] section"))?;
        let b = || -> Result<RatMatrix> {
            rational_matrix(
                section
                    .b
                    .as_ref()
                    .ok_or_else(|| anyhow!("family '{}' needs a matrix b", section.family))?,
            )
        };
        let law = match section.family.as_str() {
            "abelian" => {
                let n = section
                    .dim
                    .ok_or_else(|| anyhow!("abelian family needs dim"))?;
                GroupLaw::abelian(n)
            }
            "matrix_exponential" => hypolie_core::group::make_group(
                Family::MatrixExponential(b()?),
            )
            .map_err(|e| anyhow!("group construction failed: {}", e))?,
            "inverse_matrix_exponential" => hypolie_core::group::make_group(
                Family::InverseMatrixExponential(b()?),
            )
            .map_err(|e| anyhow!("group construction failed: {}", e))?,
            "kolmogorov" => {
                let spec = self.build_kolmogorov()?;
                spec.group_law()
                    .map_err(|e| anyhow!("group construction failed: {}", e))?
            }
            other => bail!(
                "unknown family '{}' (expected abelian, matrix_exponential, \
                 inverse_matrix_exponential or kolmogorov)",
                other
            ),
        };
        Ok(law)
    }

    pub fn build_kolmogorov(&self) -> Result<KolmogorovSpec> {
        let section = self
            .kolmogorov
            .as_ref()
            .ok_or_else(|| anyhow!("config has no [kolmogorov] section"))?;
        let a = rational_matrix(&section.a).context("[kolmogorov] a")?;
        let b = rational_matrix(&section.b).context("[kolmogorov] b")?;
        KolmogorovSpec::new(a, b).map_err(|e| anyhow!("invalid (A, B): {}", e))
    }

    /// The session's variable set: [vars] if present, otherwise derived
    /// from the group or the Kolmogorov block.
    pub fn build_vars(&self) -> Result<VarSet> {
        if let Some(v) = &self.vars {
            let names: Vec<&str> = v.names.iter().map(String::as_str).collect();
            return VarSet::new(&names, v.time.as_deref())
                .map_err(|e| anyhow!("bad [vars]: {}", e));
        }
        if let Some(_) = &self.group {
            return Ok(self.build_group()?.vars().clone());
        }
        if self.kolmogorov.is_some() {
            return Ok(self.build_kolmogorov()?.vars());
        }
        bail!("no [vars] section and no group to derive variables from")
    }

    pub fn parse_function(&self, name: &str, vars: &VarSet) -> Result<Expr> {
        let text = self
            .functions
            .get(name)
            .ok_or_else(|| anyhow!("no function '{}' in [functions]", name))?;
        parse(text, vars).map_err(|e| anyhow!("function '{}': {}", name, e))
    }

    /// Build the operator from [operator] (coordinate or frame form) or
    /// from [kolmogorov].
    pub fn build_operator(&self, vars: &VarSet) -> Result<SecondOrderOperator> {
        if let Some(section) = &self.operator {
            let dim = vars.len();
            let parse_vec = |texts: &[String], what: &str| -> Result<Vec<Expr>> {
                if texts.len() != dim {
                    bail!("{} needs {} entries, got {}", what, dim, texts.len());
                }
                texts
                    .iter()
                    .map(|t| parse(t, vars).map_err(|e| anyhow!("{}: {}", what, e)))
                    .collect()
            };
            match (&section.a, &section.fields) {
                (Some(a_rows), None) => {
                    if a_rows.len() != dim {
                        bail!("[operator] a needs {} rows", dim);
                    }
                    let mut a = Vec::with_capacity(dim);
                    for row in a_rows {
                        a.push(parse_vec(row, "[operator] a")?);
                    }
                    let b = match &section.b {
                        Some(b) => parse_vec(b, "[operator] b")?,
                        None => vec![Expr::zero(); dim],
                    };
                    SecondOrderOperator::new(a, b, vars.clone())
                        .map_err(|e| anyhow!("operator construction failed: {}", e))
                }
                (None, Some(field_rows)) => {
                    let fields: Vec<VectorField> = field_rows
                        .iter()
                        .enumerate()
                        .map(|(i, row)| {
                            Ok(VectorField::new(
                                parse_vec(row, "[operator] fields")?,
                                format!("X{}", i + 1),
                            ))
                        })
                        .collect::<Result<_>>()?;
                    let drift = section
                        .drift
                        .as_ref()
                        .map(|d| parse_vec(d, "[operator] drift"))
                        .transpose()?
                        .map(|coeffs| VectorField::new(coeffs, "X0"));
                    let signs = section
                        .signs
                        .as_ref()
                        .map(|s| {
                            s.iter()
                                .map(|v| rational_value(v).map(Scalar::Exact))
                                .collect::<Result<Vec<_>>>()
                        })
                        .transpose()?;
                    from_frame(&fields, drift.as_ref(), signs.as_deref(), vars.clone())
                        .map_err(|e| anyhow!("operator construction failed: {}", e))
                }
                (Some(_), Some(_)) => {
                    bail!("[operator] must use either coordinate form (a, b) or frame form")
                }
                (None, None) => bail!("[operator] needs either a/b or fields/drift"),
            }
        } else if self.kolmogorov.is_some() {
            Ok(self.build_kolmogorov()?.operator())
        } else {
            bail!("config has no [operator] or [kolmogorov] section")
        }
    }
}
