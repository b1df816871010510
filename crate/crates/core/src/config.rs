//! JSON run configurations.
//!
//! Every subcommand has its own document type; all of them carry
//! `schema_version` and reject unknown keys. Errors name the offending key
//! as a dotted path.

use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    kernel_distributed, kernel_multi_term, kernel_multi_term_const, kernel_stable, kernel_variable_order, JumpKernel,
    TimeFn,
};
use crate::paths::StepRule;
use crate::solve_mc::McConfig;
use crate::source::{Source2Expr, SourceExpr};

pub const SCHEMA_VERSION: u32 = 1;

/// Parse a config, mapping serde failures to a config error on the key path.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        let key = match unknown_field(&msg) {
            Some(f) if path == "." => f,
            Some(f) if path.ends_with(&f) => path,
            Some(f) => format!("{path}.{f}"),
            None => path,
        };
        Error::config(key, msg)
    })?;
    Ok(value)
}

fn unknown_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

fn check_version(v: u32) -> Result<()> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::config(
            "schema_version",
            format!("unsupported version {v}, this build reads {SCHEMA_VERSION}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Mc,
    Quad,
    ClosedForm,
}

/// Either an explicit list or `count` equally spaced points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self, key: &str) -> Result<Vec<f64>> {
        let pts = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(GridRange { start, stop, count }) => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| {
                        if i + 1 == *n {
                            *stop
                        } else {
                            start + (stop - start) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect(),
            },
        };
        if pts.is_empty() {
            return Err(Error::config(key, "grid is empty"));
        }
        if let Some(x) = pts.iter().find(|x| !x.is_finite()) {
            return Err(Error::config(key, format!("grid point {x} is not finite")));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Number(f64),
    Expr(SourceExpr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Stable {
        beta: f64,
    },
    MultiTerm {
        weights: Vec<Weight>,
        betas: Vec<f64>,
    },
    VariableOrder {
        order: SourceExpr,
        range: [f64; 2],
    },
    /// Nodes (s_j, m_j) of a quadrature in the order variable: the order at
    /// node s is s itself and its weight is m·weight(s).
    Distributed {
        nodes: Vec<[f64; 2]>,
        #[serde(default)]
        weight: Option<SourceExpr>,
    },
}

impl KernelSpec {
    /// The kernel on the working interval `window`.
    pub fn build(&self, window: (f64, f64)) -> Result<JumpKernel> {
        match self {
            KernelSpec::Stable { beta } => kernel_stable(*beta),
            KernelSpec::MultiTerm { weights, betas } => {
                let consts: Option<Vec<f64>> = weights
                    .iter()
                    .map(|w| match w {
                        Weight::Number(c) => Some(*c),
                        Weight::Expr(SourceExpr::Const { value }) => Some(*value),
                        Weight::Expr(_) => None,
                    })
                    .collect();
                if let Some(c) = consts {
                    return kernel_multi_term_const(&c, betas);
                }
                let mut fns: Vec<TimeFn> = Vec::new();
                for w in weights {
                    let s = match w {
                        Weight::Number(c) => crate::source::Source::constant(*c),
                        Weight::Expr(e) => e.build()?,
                    };
                    fns.push(s.func());
                }
                kernel_multi_term(fns, betas, window)
            }
            KernelSpec::VariableOrder { order, range } => {
                kernel_variable_order(order.build()?.func(), (range[0], range[1]), window)
            }
            KernelSpec::Distributed { nodes, weight } => {
                let w = match weight {
                    Some(e) => e.build()?.func(),
                    None => Arc::new(|_: f64| 1.0),
                };
                let nodes: Vec<(f64, f64)> = nodes.iter().map(|n| (n[0], n[1])).collect();
                kernel_distributed(Arc::new(move |s, _t| w(s)), Arc::new(|s, _t| s), &nodes, window)
            }
        }
    }

    pub fn stable_beta(&self) -> Option<f64> {
        match self {
            KernelSpec::Stable { beta } => Some(*beta),
            _ => None,
        }
    }
}

/// `kernel` or the `beta` shorthand for a stable kernel, exactly one of them.
fn pick_kernel(kernel: &Option<KernelSpec>, beta: Option<f64>, kkey: &str, bkey: &str) -> Result<KernelSpec> {
    match (kernel, beta) {
        (Some(k), None) => Ok(k.clone()),
        (None, Some(b)) => Ok(KernelSpec::Stable { beta: b }),
        (Some(_), Some(_)) => Err(Error::config(bkey, format!("give either `{kkey}` or `{bkey}`, not both"))),
        (None, None) => Err(Error::config(kkey, format!("missing; give `{kkey}` or `{bkey}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub n_paths: Option<u64>,
    pub ds: Option<f64>,
    pub master_seed: Option<u64>,
    pub horizon_override: Option<f64>,
    pub eps: Option<f64>,
    pub step_rule: Option<StepRule>,
    /// runs with a larger share of horizon-truncated paths fail (default 1e-3)
    pub max_truncated_fraction: Option<f64>,
}

impl McBlock {
    pub fn to_config(&self, workers: Option<usize>) -> McConfig {
        let d = McConfig::default();
        McConfig {
            n_paths: self.n_paths.unwrap_or(d.n_paths),
            ds: self.ds.unwrap_or(d.ds),
            master_seed: self.master_seed.unwrap_or(d.master_seed),
            horizon: self.horizon_override,
            eps: self.eps,
            rule: self.step_rule.unwrap_or(d.rule),
            workers,
        }
    }

    pub fn truncation_limit(&self) -> f64 {
        self.max_truncated_fraction.unwrap_or(1e-3)
    }
}

/// solve-caputo / solve-rl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub beta: Option<f64>,
    pub lambda: f64,
    pub g: SourceExpr,
    #[serde(default)]
    pub u_a: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default)]
    pub method: Method,
    pub grid: Grid,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub report: bool,
}

fn one() -> f64 {
    1.0
}

impl LinearConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = parse(text)?;
        check_version(c.schema_version)?;
        let k = c.kernel_spec()?;
        if c.method != Method::Mc && k.stable_beta().is_none() {
            return Err(Error::config(
                "method",
                "quad and closed_form need a stable kernel; use mc for other kernels",
            ));
        }
        if !(c.a < c.b) {
            return Err(Error::config("b", format!("need a < b, got a = {}, b = {}", c.a, c.b)));
        }
        Ok(c)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        pick_kernel(&self.kernel, self.beta, "kernel", "beta")
    }
}

/// solve-mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub kernel1: Option<KernelSpec>,
    #[serde(default)]
    pub beta1: Option<f64>,
    #[serde(default)]
    pub kernel2: Option<KernelSpec>,
    #[serde(default)]
    pub beta2: Option<f64>,
    pub lambda: f64,
    pub g: Source2Expr,
    pub phi: SourceExpr,
    #[serde(default = "one")]
    pub b1: f64,
    #[serde(default = "one")]
    pub b2: f64,
    #[serde(default)]
    pub method: Method,
    pub grid: Vec<[f64; 2]>,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub report: bool,
}

impl MixedConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = parse(text)?;
        check_version(c.schema_version)?;
        let (k1, k2) = c.kernel_specs()?;
        match c.method {
            Method::Mc => {}
            Method::Quad => {
                if k1.stable_beta().is_none() || k2.stable_beta().is_none() {
                    return Err(Error::config("method", "quad needs stable kernels in both variables"));
                }
            }
            Method::ClosedForm => {
                return Err(Error::config("method", "the mixed problem has no closed form; use mc or quad"))
            }
        }
        if c.grid.is_empty() {
            return Err(Error::config("grid", "grid is empty"));
        }
        Ok(c)
    }

    pub fn kernel_specs(&self) -> Result<(KernelSpec, KernelSpec)> {
        Ok((
            pick_kernel(&self.kernel1, self.beta1, "kernel1", "beta1")?,
            pick_kernel(&self.kernel2, self.beta2, "kernel2", "beta2")?,
        ))
    }
}

/// exit-law: exit-time density table (stable) or MC exit times (general).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitLawConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub beta: Option<f64>,
    pub t: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    /// clock values s of the density table (stable kernel only)
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub output: Option<String>,
}

impl ExitLawConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = parse(text)?;
        check_version(c.schema_version)?;
        let k = c.kernel_spec()?;
        if !(c.t > c.a) {
            return Err(Error::config("t", format!("need t > a, got t = {}, a = {}", c.t, c.a)));
        }
        if k.stable_beta().is_some() && c.grid.is_none() {
            return Err(Error::config("grid", "the stable density table needs a grid of clock values"));
        }
        if k.stable_beta().is_none() && c.grid.is_some() {
            return Err(Error::config("grid", "general kernels emit MC exit times; drop the grid"));
        }
        Ok(c)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        pick_kernel(&self.kernel, self.beta, "kernel", "beta")
    }
}

/// ml: E_{α,β}(z) on a grid of z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlConfig {
    pub schema_version: u32,
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    pub grid: Grid,
    #[serde(default)]
    pub output: Option<String>,
}

impl MlConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = parse(text)?;
        check_version(c.schema_version)?;
        Ok(c)
    }
}

/// density: stable density and distribution function on a grid of x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub schema_version: u32,
    pub beta: f64,
    pub grid: Grid,
    #[serde(default)]
    pub output: Option<String>,
}

impl DensityConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = parse(text)?;
        check_version(c.schema_version)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BatteryMode {
    Quick,
    #[default]
    Full,
}

/// validate: the cross-engine battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub mode: BatteryMode,
    /// overrides the path count of the path-based checks
    #[serde(default)]
    pub n_paths: Option<u64>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub output: Option<String>,
}

impl ValidateConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = parse(text)?;
        check_version(c.schema_version)?;
        if c.n_paths.is_some_and(|n| n < 100) {
            return Err(Error::config("n_paths", "need at least 100 paths"));
        }
        Ok(c)
    }
}
