//! Composable test functions with homogeneity metadata.
//!
//! Functions are descriptor trees over a small set of primitives (cutoff
//! radial powers, the directional sign witness, even zonal angular
//! witnesses, the log symbol, ball indicators) closed under sums, scalar
//! multiples and pointwise products. Keeping the structure explicit lets
//! norm and operator code pick exact polar reductions instead of blind
//! n-dimensional quadrature; an opaque-callable escape hatch exists for
//! everything else at Monte Carlo accuracy.

use crate::exact::{LogPolyTerm, PiecewiseProfile};
use crate::weights::ZonalTable;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionError {
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("function is undefined at the origin")]
    UndefinedAtOrigin,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

type OpaqueEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Node {
    /// |x|^e for |x| > 1, zero inside.
    OuterPower { exponent: f64 },
    /// |x|^e for |x| < 1, zero outside.
    InnerPower { exponent: f64 },
    /// |x|^e everywhere.
    RadialPower { exponent: f64 },
    /// sgn(x_1).
    SignWitness,
    /// Even zonal profile of the direction.
    AngularWitness { table: ZonalTable },
    /// ln|x|.
    LogRadius,
    /// Indicator of the centered ball.
    BallIndicator { radius: f64 },
    Scaled { coef: f64, inner: Box<Node> },
    Sum { left: Box<Node>, right: Box<Node> },
    Product { left: Box<Node>, right: Box<Node> },
    Opaque {
        eval: OpaqueEval,
        breakpoints: Vec<f64>,
        label: String,
    },
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::OuterPower { exponent } => write!(f, "OuterPower({exponent})"),
            Node::InnerPower { exponent } => write!(f, "InnerPower({exponent})"),
            Node::RadialPower { exponent } => write!(f, "RadialPower({exponent})"),
            Node::SignWitness => write!(f, "SignWitness"),
            Node::AngularWitness { .. } => write!(f, "AngularWitness"),
            Node::LogRadius => write!(f, "LogRadius"),
            Node::BallIndicator { radius } => write!(f, "BallIndicator({radius})"),
            Node::Scaled { coef, inner } => write!(f, "{coef} * {inner:?}"),
            Node::Sum { left, right } => write!(f, "({left:?} + {right:?})"),
            Node::Product { left, right } => write!(f, "({left:?} * {right:?})"),
            Node::Opaque { label, .. } => write!(f, "Opaque({label})"),
        }
    }
}

/// Scaling law f(t x) = sgn(t)^kappa |t|^degree f(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homogeneity {
    pub degree: f64,
    /// kappa = 1: odd under t -> -t; kappa = 0: even.
    pub odd: bool,
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    node: Node,
    dimension: usize,
}

fn check_dim(n: usize) -> Result<(), FunctionError> {
    if n >= 1 {
        Ok(())
    } else {
        Err(FunctionError::ParamOutOfRange("dimension must be >= 1".into()))
    }
}

impl TestFunction {
    /// Outer extremal family member: |x|^(-(n+alpha)/p - eps) outside the
    /// unit ball.
    pub fn outer_extremal(
        n: usize,
        alpha: f64,
        p: f64,
        eps: f64,
    ) -> Result<TestFunction, FunctionError> {
        let exponent = extremal_exponent(n, alpha, p, eps, -1.0)?;
        Ok(TestFunction {
            node: Node::OuterPower { exponent },
            dimension: n,
        })
    }

    /// Inner mirror of the extremal family: |x|^(-(n+alpha)/p + eps) inside
    /// the unit ball.
    pub fn inner_extremal(
        n: usize,
        alpha: f64,
        p: f64,
        eps: f64,
    ) -> Result<TestFunction, FunctionError> {
        let exponent = extremal_exponent(n, alpha, p, eps, 1.0)?;
        Ok(TestFunction {
            node: Node::InnerPower { exponent },
            dimension: n,
        })
    }

    /// Raw cutoff power outside the unit ball.
    pub fn outer_power(n: usize, exponent: f64) -> Result<TestFunction, FunctionError> {
        check_dim(n)?;
        finite_param(exponent, "exponent")?;
        Ok(TestFunction {
            node: Node::OuterPower { exponent },
            dimension: n,
        })
    }

    /// Raw cutoff power inside the unit ball.
    pub fn inner_power(n: usize, exponent: f64) -> Result<TestFunction, FunctionError> {
        check_dim(n)?;
        finite_param(exponent, "exponent")?;
        Ok(TestFunction {
            node: Node::InnerPower { exponent },
            dimension: n,
        })
    }

    pub fn radial_power(n: usize, exponent: f64) -> Result<TestFunction, FunctionError> {
        check_dim(n)?;
        finite_param(exponent, "exponent")?;
        Ok(TestFunction {
            node: Node::RadialPower { exponent },
            dimension: n,
        })
    }

    pub fn constant(n: usize, value: f64) -> Result<TestFunction, FunctionError> {
        finite_param(value, "constant value")?;
        Ok(TestFunction::radial_power(n, 0.0)?.scaled(value))
    }

    /// Directional witness sgn(x_1): homogeneous of degree 0, odd.
    pub fn sign_witness(n: usize) -> Result<TestFunction, FunctionError> {
        check_dim(n)?;
        Ok(TestFunction {
            node: Node::SignWitness,
            dimension: n,
        })
    }

    /// Even zonal witness phi(x/|x|): homogeneous of degree 0, even.
    pub fn angular_witness(n: usize, table: ZonalTable) -> Result<TestFunction, FunctionError> {
        check_dim(n)?;
        Ok(TestFunction {
            node: Node::AngularWitness { table },
            dimension: n,
        })
    }

    pub fn log_symbol(n: usize) -> Result<TestFunction, FunctionError> {
        check_dim(n)?;
        Ok(TestFunction {
            node: Node::LogRadius,
            dimension: n,
        })
    }

    pub fn ball_indicator(n: usize, radius: f64) -> Result<TestFunction, FunctionError> {
        check_dim(n)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(FunctionError::ParamOutOfRange(format!(
                "indicator radius must be positive, got {radius}"
            )));
        }
        Ok(TestFunction {
            node: Node::BallIndicator { radius },
            dimension: n,
        })
    }

    /// Escape hatch: arbitrary callable. Disables exact reductions; norm
    /// and operator code falls back to sampling. Breakpoints list radii
    /// where the function changes character, guiding quadrature splits.
    pub fn opaque<F>(
        n: usize,
        label: &str,
        breakpoints: Vec<f64>,
        eval: F,
    ) -> Result<TestFunction, FunctionError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_dim(n)?;
        Ok(TestFunction {
            node: Node::Opaque {
                eval: Arc::new(eval),
                breakpoints,
                label: label.to_string(),
            },
            dimension: n,
        })
    }

    pub fn scaled(&self, coef: f64) -> TestFunction {
        TestFunction {
            node: Node::Scaled {
                coef,
                inner: Box::new(self.node.clone()),
            },
            dimension: self.dimension,
        }
    }

    pub fn plus(&self, other: &TestFunction) -> Result<TestFunction, FunctionError> {
        self.same_dimension(other)?;
        Ok(TestFunction {
            node: Node::Sum {
                left: Box::new(self.node.clone()),
                right: Box::new(other.node.clone()),
            },
            dimension: self.dimension,
        })
    }

    pub fn times(&self, other: &TestFunction) -> Result<TestFunction, FunctionError> {
        self.same_dimension(other)?;
        Ok(TestFunction {
            node: Node::Product {
                left: Box::new(self.node.clone()),
                right: Box::new(other.node.clone()),
            },
            dimension: self.dimension,
        })
    }

    fn same_dimension(&self, other: &TestFunction) -> Result<(), FunctionError> {
        if self.dimension == other.dimension {
            Ok(())
        } else {
            Err(FunctionError::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            })
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, FunctionError> {
        if x.len() != self.dimension {
            return Err(FunctionError::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        eval_node(&self.node, x, r)
    }

    /// Scaling metadata, present iff f(t x) = sgn(t)^kappa |t|^lambda f(x)
    /// for all t != 0. Cutoff families are not globally homogeneous.
    pub fn homogeneity_info(&self) -> Option<Homogeneity> {
        homogeneity(&self.node)
    }

    /// Radii where the radial structure changes (cutoffs, indicator edges).
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        collect_breakpoints(&self.node, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Splits the function into an angular factor and an exact radial
    /// power-log profile when the descriptor allows it.
    pub(crate) fn decompose(&self) -> Option<RadialDecomposition> {
        decompose_node(&self.node)
    }
}

fn extremal_exponent(
    n: usize,
    alpha: f64,
    p: f64,
    eps: f64,
    eps_sign: f64,
) -> Result<f64, FunctionError> {
    check_dim(n)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FunctionError::ParamOutOfRange(format!(
            "extremal family needs 0 < eps < 1, got {eps}"
        )));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(FunctionError::ParamOutOfRange(format!(
            "exponent p must satisfy p >= 1, got {p}"
        )));
    }
    finite_param(alpha, "alpha")?;
    Ok(-(n as f64 + alpha) / p + eps_sign * eps)
}

fn finite_param(v: f64, name: &str) -> Result<(), FunctionError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(FunctionError::ParamOutOfRange(format!("{name} must be finite, got {v}")))
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn eval_node(node: &Node, x: &[f64], r: f64) -> Result<f64, FunctionError> {
    Ok(match node {
        Node::OuterPower { exponent } => {
            if r > 1.0 {
                r.powf(*exponent)
            } else {
                0.0
            }
        }
        Node::InnerPower { exponent } => {
            if r < 1.0 {
                r.powf(*exponent)
            } else {
                0.0
            }
        }
        Node::RadialPower { exponent } => r.powf(*exponent),
        Node::SignWitness => sgn(x[0]),
        Node::AngularWitness { table } => {
            if r == 0.0 {
                return Err(FunctionError::UndefinedAtOrigin);
            }
            table.eval(x[0] / r)
        }
        Node::LogRadius => {
            if r == 0.0 {
                return Err(FunctionError::UndefinedAtOrigin);
            }
            r.ln()
        }
        Node::BallIndicator { radius } => {
            if r <= *radius {
                1.0
            } else {
                0.0
            }
        }
        Node::Scaled { coef, inner } => coef * eval_node(inner, x, r)?,
        Node::Sum { left, right } => eval_node(left, x, r)? + eval_node(right, x, r)?,
        Node::Product { left, right } => eval_node(left, x, r)? * eval_node(right, x, r)?,
        Node::Opaque { eval, .. } => eval(x),
    })
}

fn homogeneity(node: &Node) -> Option<Homogeneity> {
    match node {
        Node::RadialPower { exponent } => Some(Homogeneity {
            degree: *exponent,
            odd: false,
        }),
        Node::SignWitness => Some(Homogeneity {
            degree: 0.0,
            odd: true,
        }),
        Node::AngularWitness { .. } => Some(Homogeneity {
            degree: 0.0,
            odd: false,
        }),
        Node::Scaled { inner, .. } => homogeneity(inner),
        Node::Sum { left, right } => {
            let l = homogeneity(left)?;
            let r = homogeneity(right)?;
            if l == r {
                Some(l)
            } else {
                None
            }
        }
        Node::Product { left, right } => {
            let l = homogeneity(left)?;
            let r = homogeneity(right)?;
            Some(Homogeneity {
                degree: l.degree + r.degree,
                odd: l.odd != r.odd,
            })
        }
        _ => None,
    }
}

fn collect_breakpoints(node: &Node, out: &mut Vec<f64>) {
    match node {
        Node::OuterPower { .. } | Node::InnerPower { .. } => out.push(1.0),
        Node::BallIndicator { radius } => out.push(*radius),
        Node::Scaled { inner, .. } => collect_breakpoints(inner, out),
        Node::Sum { left, right } | Node::Product { left, right } => {
            collect_breakpoints(left, out);
            collect_breakpoints(right, out);
        }
        Node::Opaque { breakpoints, .. } => out.extend_from_slice(breakpoints),
        _ => {}
    }
}

/// Angular factor of a separable function: an optional sign of the first
/// coordinate times an optional even zonal table.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AngularPart {
    pub odd_sign: bool,
    pub table: Option<ZonalTable>,
}

impl AngularPart {
    pub fn one() -> Self {
        AngularPart {
            odd_sign: false,
            table: None,
        }
    }

    fn product(&self, other: &AngularPart) -> Option<AngularPart> {
        let table = match (&self.table, &other.table) {
            (None, None) => None,
            (Some(t), None) | (None, Some(t)) => Some(t.clone()),
            (Some(_), Some(_)) => return None,
        };
        Some(AngularPart {
            odd_sign: self.odd_sign != other.odd_sign,
            table,
        })
    }
}

/// f(x) = angular(x_1/|x|) * profile(|x|).
#[derive(Debug, Clone)]
pub(crate) struct RadialDecomposition {
    pub angular: AngularPart,
    pub profile: PiecewiseProfile,
}

fn decompose_node(node: &Node) -> Option<RadialDecomposition> {
    let unit = |profile: PiecewiseProfile| RadialDecomposition {
        angular: AngularPart::one(),
        profile,
    };
    let one_term = |lo: f64, hi: f64, term: LogPolyTerm| {
        unit(PiecewiseProfile::single(lo, hi, vec![term]))
    };
    match node {
        Node::OuterPower { exponent } => Some(one_term(
            1.0,
            f64::INFINITY,
            LogPolyTerm::new(1.0, *exponent, 0),
        )),
        Node::InnerPower { exponent } => {
            Some(one_term(0.0, 1.0, LogPolyTerm::new(1.0, *exponent, 0)))
        }
        Node::RadialPower { exponent } => Some(one_term(
            0.0,
            f64::INFINITY,
            LogPolyTerm::new(1.0, *exponent, 0),
        )),
        Node::LogRadius => Some(one_term(0.0, f64::INFINITY, LogPolyTerm::new(1.0, 0.0, 1))),
        Node::BallIndicator { radius } => {
            Some(one_term(0.0, *radius, LogPolyTerm::new(1.0, 0.0, 0)))
        }
        Node::SignWitness => Some(RadialDecomposition {
            angular: AngularPart {
                odd_sign: true,
                table: None,
            },
            profile: PiecewiseProfile::single(
                0.0,
                f64::INFINITY,
                vec![LogPolyTerm::new(1.0, 0.0, 0)],
            ),
        }),
        Node::AngularWitness { table } => Some(RadialDecomposition {
            angular: AngularPart {
                odd_sign: false,
                table: Some(table.clone()),
            },
            profile: PiecewiseProfile::single(
                0.0,
                f64::INFINITY,
                vec![LogPolyTerm::new(1.0, 0.0, 0)],
            ),
        }),
        Node::Scaled { coef, inner } => {
            let d = decompose_node(inner)?;
            Some(RadialDecomposition {
                angular: d.angular,
                profile: d.profile.scaled(*coef),
            })
        }
        Node::Sum { left, right } => {
            let l = decompose_node(left)?;
            let r = decompose_node(right)?;
            if l.angular != r.angular {
                return None;
            }
            Some(RadialDecomposition {
                angular: l.angular,
                profile: l.profile.add(&r.profile),
            })
        }
        Node::Product { left, right } => {
            let l = decompose_node(left)?;
            let r = decompose_node(right)?;
            Some(RadialDecomposition {
                angular: l.angular.product(&r.angular)?,
                profile: l.profile.multiply(&r.profile),
            })
        }
        Node::Opaque { .. } => None,
    }
}
