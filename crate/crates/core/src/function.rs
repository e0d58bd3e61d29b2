//! Scalar functions of the chart coordinates: vector-field coefficients,
//! volume densities and conformal factors.

use std::fmt;
use std::sync::Arc;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value,
};

use crate::error::{Error, Result};

type Closure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ScalarFn {
    Const(f64),
    /// `offset + Σ coeffs[k] * x[k]`
    Affine {
        offset: f64,
        coeffs: Vec<f64>,
    },
    Expr(Arc<CompiledExpr>),
    Custom {
        label: String,
        f: Closure,
    },
}

impl ScalarFn {
    pub fn zero() -> Self {
        ScalarFn::Const(0.0)
    }

    pub fn one() -> Self {
        ScalarFn::Const(1.0)
    }

    pub fn affine(offset: f64, coeffs: Vec<f64>) -> Self {
        ScalarFn::Affine { offset, coeffs }
    }

    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFn::Custom {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarFn::Const(c) => *c,
            ScalarFn::Affine { offset, coeffs } => {
                offset + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
            }
            ScalarFn::Expr(e) => e.eval(x),
            ScalarFn::Custom { f, .. } => f(x),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            ScalarFn::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Pointwise product; constant and affine factors are folded symbolically.
    pub fn mul(&self, other: &ScalarFn) -> ScalarFn {
        match (self, other) {
            (ScalarFn::Const(a), ScalarFn::Const(b)) => ScalarFn::Const(a * b),
            (ScalarFn::Const(a), ScalarFn::Affine { offset, coeffs })
            | (ScalarFn::Affine { offset, coeffs }, ScalarFn::Const(a)) => ScalarFn::Affine {
                offset: a * offset,
                coeffs: coeffs.iter().map(|c| a * c).collect(),
            },
            _ => {
                let (f, g) = (self.clone(), other.clone());
                ScalarFn::custom(format!("({f}) * ({g})"), move |x| f.eval(x) * g.eval(x))
            }
        }
    }

    pub fn scale(&self, factor: f64) -> ScalarFn {
        self.mul(&ScalarFn::Const(factor))
    }

    /// Pointwise quotient `self / other`.
    pub fn div(&self, other: &ScalarFn) -> ScalarFn {
        match other {
            ScalarFn::Const(b) => self.scale(1.0 / b),
            _ => {
                let (f, g) = (self.clone(), other.clone());
                ScalarFn::custom(format!("({f}) / ({g})"), move |x| f.eval(x) / g.eval(x))
            }
        }
    }

    pub fn powi(&self, exponent: i32) -> ScalarFn {
        match self {
            ScalarFn::Const(c) => ScalarFn::Const(c.powi(exponent)),
            _ => {
                let f = self.clone();
                ScalarFn::custom(format!("({f})^{exponent}"), move |x| {
                    f.eval(x).powi(exponent)
                })
            }
        }
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Const(c) => write!(f, "{c}"),
            ScalarFn::Affine { offset, coeffs } => {
                let mut first = true;
                if *offset != 0.0 {
                    write!(f, "{offset}")?;
                    first = false;
                }
                for (k, c) in coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    if !first {
                        write!(f, " + ")?;
                    }
                    write!(f, "{c}*x{k}")?;
                    first = false;
                }
                if first {
                    write!(f, "0")?;
                }
                Ok(())
            }
            ScalarFn::Expr(e) => write!(f, "{}", e.source),
            ScalarFn::Custom { label, .. } => write!(f, "{label}"),
        }
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({self})")
    }
}

/// Arithmetic expression in named coordinates, e.g. `-y/2` or `math::exp(x)`.
pub struct CompiledExpr {
    source: String,
    variables: Vec<String>,
    tree: Node<DefaultNumericTypes>,
}

impl CompiledExpr {
    /// Compiles `source`; identifiers must be among `variables`.
    /// `line`/`column` locate the expression for error messages.
    pub fn compile(source: &str, variables: &[String], line: usize, column: usize) -> Result<Self> {
        let tree =
            build_operator_tree::<DefaultNumericTypes>(source).map_err(|e| Error::Parse {
                line,
                column,
                message: format!("in `{source}`: {e}"),
            })?;
        for ident in tree.iter_variable_identifiers() {
            if !variables.iter().any(|v| v == ident) {
                let offset = source.find(ident).unwrap_or(0);
                return Err(Error::Parse {
                    line,
                    column: column + offset,
                    message: format!(
                        "unknown coordinate `{ident}` (known: {})",
                        variables.join(", ")
                    ),
                });
            }
        }
        let expr = Self {
            source: source.trim().to_string(),
            variables: variables.to_vec(),
            tree,
        };
        let probe = vec![0.25; variables.len()];
        expr.try_eval(&probe).map_err(|message| Error::Parse {
            line,
            column,
            message,
        })?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, x: &[f64]) -> std::result::Result<f64, String> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (name, v) in self.variables.iter().zip(x) {
            ctx.set_value(name.clone(), Value::Float(*v))
                .map_err(|e| e.to_string())?;
        }
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| format!("in `{}`: {e}", self.source))
    }

    /// Evaluates at `x`; evaluation failures yield NaN.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.try_eval(x).unwrap_or(f64::NAN)
    }
}
