//! Source terms g(t), boundary data φ(t) and two-dimensional sources
//! g(t1, t2), with the breakpoints that quadrature must respect.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A bounded function of one variable with its known discontinuities.
#[derive(Clone)]
pub struct Source {
    f: Fn1,
    breaks: Vec<f64>,
    label: String,
    // Some(c) when the source is the constant c by construction
    constant: Option<f64>,
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Source")
            .field("label", &self.label)
            .field("breaks", &self.breaks)
            .finish()
    }
}

impl Source {
    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Source {
            f: Arc::new(f),
            breaks: Vec::new(),
            label: label.into(),
            constant: None,
        }
    }

    /// Declare discontinuities of an arbitrary function.
    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.breaks = breaks.to_vec();
        self.breaks.sort_by(f64::total_cmp);
        self
    }

    pub fn constant(c: f64) -> Self {
        let mut s = Source::from_fn(format!("const {c}"), move |_| c);
        s.constant = Some(c);
        s
    }

    pub fn zero() -> Self {
        Source::constant(0.0)
    }

    /// c0 + c1 t + ... + ck t^k.
    pub fn poly(coeffs: &[f64]) -> Self {
        let c = coeffs.to_vec();
        let constant = if c.iter().skip(1).all(|&x| x == 0.0) {
            Some(c.first().copied().unwrap_or(0.0))
        } else {
            None
        };
        let mut s = Source::from_fn(format!("poly {coeffs:?}"), move |t| {
            c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
        });
        s.constant = constant;
        s
    }

    /// sin(a t).
    pub fn sin(a: f64) -> Self {
        Source::from_fn(format!("sin({a} t)"), move |t| (a * t).sin())
    }

    /// exp(a t).
    pub fn exp(a: f64) -> Self {
        Source::from_fn(format!("exp({a} t)"), move |t| (a * t).exp())
    }

    /// values[i] on [breaks[i-1], breaks[i]), left-closed, with values.len() = breaks.len() + 1.
    pub fn piecewise(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::domain(format!(
                "piecewise source needs {} values for {} breakpoints, got {}",
                breaks.len() + 1,
                breaks.len(),
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("piecewise breakpoints must be strictly increasing"));
        }
        let b = breaks.to_vec();
        let v = values.to_vec();
        let constant = if v.iter().all(|&x| x == v[0]) { Some(v[0]) } else { None };
        let mut s = Source::from_fn(format!("piecewise {breaks:?} -> {values:?}"), move |t| {
            v[b.partition_point(|&c| c <= t)]
        })
        .with_breaks(breaks);
        s.constant = constant;
        Ok(s)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// Left limit g(t−) at a declared breakpoint, g(t) elsewhere.
    pub fn eval_below(&self, t: f64) -> f64 {
        if self.breaks.contains(&t) {
            (self.f)(float_below(t))
        } else {
            (self.f)(t)
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when the source is identically zero by construction.
    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    /// The value of a source that is constant by construction.
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn func(&self) -> Fn1 {
        self.f.clone()
    }

    /// t ↦ g(t) − c, same breakpoints.
    pub fn minus_constant(&self, c: f64) -> Self {
        if c == 0.0 {
            return self.clone();
        }
        let f = self.f.clone();
        Source {
            f: Arc::new(move |t| f(t) - c),
            breaks: self.breaks.clone(),
            label: format!("{} - {c}", self.label),
            constant: self.constant.map(|k| k - c),
        }
    }
}

fn float_below(t: f64) -> f64 {
    if t > 0.0 {
        f64::from_bits(t.to_bits() - 1)
    } else if t < 0.0 {
        f64::from_bits(t.to_bits() + 1)
    } else {
        -f64::from_bits(1)
    }
}

/// A bounded function of (t1, t2).
#[derive(Clone)]
pub struct Source2 {
    f: Fn2,
    label: String,
    zero: bool,
    // g(t1, t2) = f1(t1)·f2(t2) when known
    factors: Option<Box<(Source, Source)>>,
}

impl fmt::Debug for Source2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Source2").field("label", &self.label).finish()
    }
}

impl Source2 {
    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Source2 {
            f: Arc::new(f),
            label: label.into(),
            zero: false,
            factors: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut s = Source2::from_fn(format!("const {c}"), move |_, _| c);
        s.zero = c == 0.0;
        s.factors = Some(Box::new((Source::constant(c), Source::constant(1.0))));
        s
    }

    /// g1(t1)·g2(t2).
    pub fn product(first: &Source, second: &Source) -> Self {
        let (f1, f2) = (first.func(), second.func());
        let mut s = Source2::from_fn(format!("({}) * ({})", first.label(), second.label()), move |a, b| {
            f1(a) * f2(b)
        });
        s.zero = first.is_zero() || second.is_zero();
        s.factors = Some(Box::new((first.clone(), second.clone())));
        s
    }

    /// g1(t1), independent of t2.
    pub fn of_first(g: &Source) -> Self {
        let f = g.func();
        let mut s = Source2::from_fn(format!("{} in t1", g.label()), move |a, _| f(a));
        s.zero = g.is_zero();
        s.factors = Some(Box::new((g.clone(), Source::constant(1.0))));
        s
    }

    /// g2(t2), independent of t1.
    pub fn of_second(g: &Source) -> Self {
        let f = g.func();
        let mut s = Source2::from_fn(format!("{} in t2", g.label()), move |_, b| f(b));
        s.zero = g.is_zero();
        s.factors = Some(Box::new((Source::constant(1.0), g.clone())));
        s
    }

    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        (self.f)(t1, t2)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// (g1, g2) with g = g1(t1)·g2(t2), when the source was built that way.
    pub fn factors(&self) -> Option<(&Source, &Source)> {
        self.factors.as_deref().map(|(a, b)| (a, b))
    }
}

/// Declarative one-dimensional expression, as accepted in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceExpr {
    Const {
        value: f64,
    },
    Poly {
        coeffs: Vec<f64>,
    },
    Sin {
        #[serde(default = "one")]
        a: f64,
    },
    Exp {
        #[serde(default = "one")]
        a: f64,
    },
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl SourceExpr {
    pub fn build(&self) -> Result<Source> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{what} must be finite")))
            }
        };
        match self {
            SourceExpr::Const { value } => {
                finite(*value, "value")?;
                Ok(Source::constant(*value))
            }
            SourceExpr::Poly { coeffs } => {
                for &c in coeffs {
                    finite(c, "coeffs")?;
                }
                Ok(Source::poly(coeffs))
            }
            SourceExpr::Sin { a } => {
                finite(*a, "a")?;
                Ok(Source::sin(*a))
            }
            SourceExpr::Exp { a } => {
                finite(*a, "a")?;
                Ok(Source::exp(*a))
            }
            SourceExpr::Piecewise { breakpoints, values } => Source::piecewise(breakpoints, values),
        }
    }
}

/// Declarative two-dimensional expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source2Expr {
    Const { value: f64 },
    Product { first: SourceExpr, second: SourceExpr },
    First { expr: SourceExpr },
    Second { expr: SourceExpr },
}

impl Source2Expr {
    pub fn build(&self) -> Result<Source2> {
        Ok(match self {
            Source2Expr::Const { value } => Source2::constant(*value),
            Source2Expr::Product { first, second } => Source2::product(&first.build()?, &second.build()?),
            Source2Expr::First { expr } => Source2::of_first(&expr.build()?),
            Source2Expr::Second { expr } => Source2::of_second(&expr.build()?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_is_left_closed() {
        let s = Source::piecewise(&[0.5], &[1.0, 3.0]).unwrap();
        assert_eq!(s.eval(0.499), 1.0);
        assert_eq!(s.eval(0.5), 3.0);
        assert_eq!(s.breaks(), &[0.5]);
        assert!(Source::piecewise(&[0.5], &[1.0]).is_err());
    }

    #[test]
    fn left_limit_at_breaks() {
        let s = Source::piecewise(&[0.5], &[1.0, 3.0]).unwrap();
        assert_eq!(s.eval_below(0.5), 1.0);
        assert_eq!(s.eval_below(0.7), 3.0);
        let s = Source::piecewise(&[0.0], &[-1.0, 2.0]).unwrap();
        assert_eq!(s.eval_below(0.0), -1.0);
    }

    #[test]
    fn poly_horner() {
        let s = Source::poly(&[1.0, -2.0, 3.0]);
        assert_eq!(s.eval(2.0), 1.0 - 4.0 + 12.0);
    }

    #[test]
    fn zero_flags() {
        assert!(Source::constant(0.0).is_zero());
        assert!(Source::constant(1.0).minus_constant(1.0).is_zero());
        assert!(!Source::sin(1.0).minus_constant(1.0).is_zero());
        assert_eq!(Source::poly(&[2.0, 0.0]).constant_value(), Some(2.0));
        assert!(Source2::product(&Source::zero(), &Source::sin(1.0)).is_zero());
    }

    #[test]
    fn expr_rejects_unknown_keys() {
        let bad = serde_json::from_str::<SourceExpr>(r#"{"type":"const","value":1,"extra":2}"#);
        assert!(bad.is_err());
        let ok: SourceExpr = serde_json::from_str(r#"{"type":"sin"}"#).unwrap();
        assert_eq!(ok, SourceExpr::Sin { a: 1.0 });
    }
}
