//! Pointwise application of the averaging operators: the unit-interval
//! average U, its Cesaro companion V (extra Jacobian power of |s|), the
//! infinite-horizon variant, the n-dimensional Hardy average on radial
//! functions, and commutators with a symbol.
//!
//! Homogeneous inputs take an exact fast path through kernel moments. All
//! other inputs are integrated by adaptive quadrature after resolving the
//! panel breakpoints analytically: for the power curves |s(t)| = t^gamma
//! the radius |s(t)x| crosses a descriptor cutoff R exactly at
//! t = (R/|x|)^(1/gamma), and declared sign changes of s split the
//! interval as well.

use crate::exact::{ExactError, LogPolyTerm, PiecewiseProfile};
use crate::functions::{FunctionError, TestFunction};
use crate::kernels::{
    kernel_moment, kernel_moment_half_line, kernel_moment_on, CurveFamily, CurveSpec,
    KernelError, KernelFamily, KernelSpec, KernelSupport,
};
use crate::parallel::parallel_map;
use crate::quadrature::{
    integrate_adaptive, integrate_improper, QuadratureConfig, QuadratureError,
};
use crate::ExtReal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("the point value diverges: {0}")]
    DivergentPointValue(String),
    #[error("the radial Hardy average needs a radial descriptor")]
    NonRadialInput,
    #[error("invalid operator specification: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    HardyCesaro,
    Cesaro,
    InfiniteHorizon,
    NdimHardy,
}

/// Description of one operator instance: kernel, parameter curve,
/// dimension, and an optional symbol that switches on commutator mode.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    kind: OperatorKind,
    kernel: KernelSpec,
    curve: CurveSpec,
    dimension: usize,
    symbol: Option<TestFunction>,
}

impl OperatorSpec {
    fn build(
        kind: OperatorKind,
        kernel: KernelSpec,
        curve: CurveSpec,
        dimension: usize,
    ) -> Result<OperatorSpec, OperatorError> {
        if dimension < 1 {
            return Err(OperatorError::InvalidSpec(
                "dimension must be at least 1".into(),
            ));
        }
        if kind != OperatorKind::InfiniteHorizon
            && kernel.support() != KernelSupport::UnitInterval
        {
            return Err(OperatorError::InvalidSpec(
                "unit-interval operators need a kernel supported on [0, 1]".into(),
            ));
        }
        Ok(OperatorSpec {
            kind,
            kernel,
            curve,
            dimension,
            symbol: None,
        })
    }

    pub fn hardy_cesaro(
        kernel: KernelSpec,
        curve: CurveSpec,
        dimension: usize,
    ) -> Result<OperatorSpec, OperatorError> {
        OperatorSpec::build(OperatorKind::HardyCesaro, kernel, curve, dimension)
    }

    pub fn cesaro(
        kernel: KernelSpec,
        curve: CurveSpec,
        dimension: usize,
    ) -> Result<OperatorSpec, OperatorError> {
        OperatorSpec::build(OperatorKind::Cesaro, kernel, curve, dimension)
    }

    pub fn infinite_horizon(
        kernel: KernelSpec,
        curve: CurveSpec,
        dimension: usize,
    ) -> Result<OperatorSpec, OperatorError> {
        OperatorSpec::build(OperatorKind::InfiniteHorizon, kernel, curve, dimension)
    }

    /// The n-dimensional Hardy average as an operator instance: on radial
    /// functions it coincides with the unit average under the kernel
    /// n t^(n-1) and the identity curve, which is how it is stored.
    pub fn ndim_hardy(dimension: usize) -> Result<OperatorSpec, OperatorError> {
        let kernel = KernelSpec::power(dimension as f64, (dimension - 1) as f64)?;
        let curve = CurveSpec::power(1.0, 1.0)?;
        let mut spec = OperatorSpec::build(OperatorKind::NdimHardy, kernel, curve, dimension)?;
        spec.kind = OperatorKind::NdimHardy;
        Ok(spec)
    }

    /// Switches on commutator mode with the given symbol.
    pub fn with_symbol(mut self, symbol: TestFunction) -> Result<OperatorSpec, OperatorError> {
        if symbol.dimension() != self.dimension {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dimension,
                got: symbol.dimension(),
            });
        }
        self.symbol = Some(symbol);
        Ok(self)
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn curve(&self) -> &CurveSpec {
        &self.curve
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn symbol(&self) -> Option<&TestFunction> {
        self.symbol.as_ref()
    }

    fn with_kernel(&self, kernel: KernelSpec) -> OperatorSpec {
        OperatorSpec {
            kernel,
            ..self.clone()
        }
    }
}

fn check_dims(spec: &OperatorSpec, f: &TestFunction, x: &[f64]) -> Result<(), OperatorError> {
    if f.dimension() != spec.dimension {
        return Err(OperatorError::DimensionMismatch {
            expected: spec.dimension,
            got: f.dimension(),
        });
    }
    if x.len() != spec.dimension {
        return Err(OperatorError::DimensionMismatch {
            expected: spec.dimension,
            got: x.len(),
        });
    }
    Ok(())
}

fn kernel_exponent_at_zero(family: &KernelFamily) -> f64 {
    match family {
        KernelFamily::Power { exponent, .. }
        | KernelFamily::PowerRiemannLiouville { exponent, .. }
        | KernelFamily::PowerExp { exponent, .. } => *exponent,
        _ => 0.0,
    }
}

fn kernel_exponent_at_one(family: &KernelFamily) -> f64 {
    match family {
        KernelFamily::RiemannLiouville { order }
        | KernelFamily::PowerRiemannLiouville { order, .. } => order - 1.0,
        _ => 0.0,
    }
}

fn divergent(detail: impl Into<String>) -> OperatorError {
    OperatorError::DivergentPointValue(detail.into())
}

fn finite_or_divergent(v: ExtReal, what: &str) -> Result<f64, OperatorError> {
    match v {
        ExtReal::Finite { value } => Ok(value),
        ExtReal::Infinite => Err(divergent(format!("{what} has a divergent kernel moment"))),
    }
}

/// Exact route for homogeneous descriptors: f(s(t)x) factors into
/// sgn(s(t))^parity |s(t)|^degree f(x), so the value is f(x) times a
/// kernel moment (sign-split when f is odd).
fn homogeneous_value(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
    extra: f64,
    infinite: bool,
) -> Option<Result<f64, OperatorError>> {
    let hom = f.homogeneity_info()?;
    let gamma = spec.curve.magnitude_exponent();
    let e = gamma * hom.degree + extra;
    let flips = matches!(
        spec.curve.family(),
        CurveFamily::SignChanging { .. }
    );
    if infinite && spec.kernel.support() == KernelSupport::HalfLine {
        if hom.odd && flips {
            return None;
        }
        let result = (|| {
            let fx = f.evaluate(x)?;
            if fx == 0.0 {
                // The integrand vanishes on this ray whatever the moment.
                return Ok(0.0);
            }
            let m = finite_or_divergent(
                kernel_moment_half_line(&spec.kernel, e)?,
                "the half-line average",
            )?;
            let sign = if hom.odd { spec.curve.sign_at(0.5) } else { 1.0 };
            Ok(fx * sign * m)
        })();
        return Some(result);
    }
    let result = (|| {
        let fx = f.evaluate(x)?;
        if fx == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        if hom.odd {
            for (lo, hi, sign) in spec.curve.sign_segments() {
                let m = finite_or_divergent(
                    kernel_moment_on(&spec.kernel, e, 0, lo, hi)?,
                    "the average",
                )?;
                acc += sign * m;
            }
        } else {
            acc = finite_or_divergent(kernel_moment(&spec.kernel, e)?, "the average")?;
        }
        Ok(fx * acc)
    })();
    Some(result)
}

/// Panel boundaries in t: descriptor cutoffs pulled back through the
/// curve, declared sign changes, and tabulated kernel cells.
fn panel_cuts(
    spec: &OperatorSpec,
    functions: &[&TestFunction],
    r_x: f64,
    upper: f64,
) -> Vec<f64> {
    let gamma = spec.curve.magnitude_exponent();
    let mut cuts = vec![0.0];
    if upper.is_finite() {
        cuts.push(upper);
    }
    let mut push = |t: f64| {
        if t.is_finite() && t > 0.0 && t < upper {
            cuts.push(t);
        }
    };
    if r_x > 0.0 {
        for func in functions {
            for bp in func.radial_breakpoints() {
                if bp > 0.0 && bp.is_finite() {
                    push((bp / r_x).powf(1.0 / gamma));
                }
            }
        }
    }
    if let CurveFamily::SignChanging { flips, .. } = spec.curve.family() {
        for t in flips {
            push(*t);
        }
    }
    if let KernelFamily::Tabulated { values } = spec.kernel.family() {
        let cells = values.len() - 1;
        for i in 1..cells {
            push(i as f64 / cells as f64);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Leading radial behaviour of f(s(t)x) as t -> 0, when f decomposes and
/// its support actually reaches that limit. `clip` caps positive
/// exponents at zero for factors that only need boundedness.
fn inner_lead(f: &TestFunction, gamma: f64, clip: bool) -> Option<(f64, u32)> {
    let d = f.decompose()?;
    let lead = if gamma > 0.0 {
        let reaches = d.profile.pieces.first().is_some_and(|p| p.lo == 0.0);
        if !reaches {
            return Some((0.0, 0));
        }
        d.profile.lead_at_zero()
    } else {
        match d.profile.lead_at_infinity() {
            Some(l) => l,
            None => return Some((0.0, 0)),
        }
    };
    if clip {
        Some((lead.0.min(0.0), lead.1))
    } else {
        Some(lead)
    }
}

/// Screens the t -> 0 endpoint: with decomposable factors the combined
/// power-log exponent is exact, so divergence is decided before any
/// quadrature runs. Returns the singularity hint for the first panel.
fn analyze_head(
    spec: &OperatorSpec,
    f: &TestFunction,
    symbol: Option<&TestFunction>,
    extra: f64,
) -> Result<Option<f64>, OperatorError> {
    let gamma = spec.curve.magnitude_exponent();
    let k0 = kernel_exponent_at_zero(spec.kernel.family()) + extra;
    let Some(f_lead) = inner_lead(f, gamma, false) else {
        // Opaque factor: no screen, hint from the kernel alone.
        return Ok((k0 < 0.0).then(|| k0.max(-0.999)));
    };
    let reaches = if gamma > 0.0 {
        f.decompose()
            .map(|d| d.profile.pieces.first().is_some_and(|p| p.lo == 0.0))
            .unwrap_or(true)
    } else {
        f.decompose()
            .map(|d| d.profile.pieces.last().is_some_and(|p| p.hi.is_infinite()))
            .unwrap_or(true)
    };
    if !reaches {
        // The integrand vanishes identically near t = 0.
        return Ok(None);
    }
    let b_lead = match symbol {
        Some(b) => match inner_lead(b, gamma, true) {
            Some(l) => l,
            None => (0.0, 1),
        },
        None => (0.0, 0),
    };
    let mut kappa = gamma * (f_lead.0 + b_lead.0) + k0;
    let has_log = f_lead.1 > 0 || b_lead.1 > 0 || symbol.is_some();
    if kappa <= -1.0 {
        return Err(divergent(format!(
            "integrand behaves like t^{kappa} near t = 0"
        )));
    }
    if has_log {
        kappa -= 0.25;
    }
    Ok((kappa < 0.0).then(|| kappa.max(-0.999)))
}

fn panel_config(base: &QuadratureConfig, hint: Option<f64>) -> QuadratureConfig {
    QuadratureConfig {
        singularity_exponent_hint: hint,
        ..base.clone()
    }
}

fn accept(result: Result<crate::quadrature::IntegralResult, QuadratureError>) -> Result<f64, OperatorError> {
    match result {
        Ok(r) => Ok(r.value),
        Err(QuadratureError::NonConvergence {
            value,
            error_estimate,
            ..
        }) if error_estimate <= 1e-6 * value.abs().max(1.0) => Ok(value),
        Err(QuadratureError::DivergenceSuspected) => {
            Err(divergent("tail refinements keep contributing"))
        }
        Err(e) => Err(e.into()),
    }
}

/// Shared quadrature engine: integrates g(t) psi(t) t^extra over the unit
/// interval or the half line, with g built from f (and the symbol in
/// commutator mode) evaluated along the curve.
fn integrate_along_curve(
    spec: &OperatorSpec,
    f: &TestFunction,
    symbol_and_value: Option<(&TestFunction, f64)>,
    x: &[f64],
    extra: f64,
    infinite: bool,
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    let r_x = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let upper = if infinite { f64::INFINITY } else { 1.0 };
    let mut funcs: Vec<&TestFunction> = vec![f];
    if let Some((b, _)) = symbol_and_value {
        funcs.push(b);
    }
    let cuts = panel_cuts(spec, &funcs, r_x, upper);
    let head_hint = analyze_head(spec, f, symbol_and_value.map(|(b, _)| b), extra)?;
    let k1 = kernel_exponent_at_one(spec.kernel.family());
    let integrand = |t: f64| {
        let s = spec.curve.evaluate(t);
        let point: Vec<f64> = x.iter().map(|c| c * s).collect();
        let fv = f.evaluate(&point).unwrap_or(f64::NAN);
        let factor = match symbol_and_value {
            Some((b, b_at_x)) => b_at_x - b.evaluate(&point).unwrap_or(f64::NAN),
            None => 1.0,
        };
        let weight = if extra == 0.0 { 1.0 } else { t.powf(extra) };
        factor * fv * spec.kernel.evaluate(t) * weight
    };
    let mut total = 0.0;
    let last_finite = *cuts.last().expect("cuts contain zero");
    for pair in cuts.windows(2) {
        let hint = if pair[0] == 0.0 {
            head_hint
        } else if !infinite && pair[1] == 1.0 && k1 < 0.0 {
            Some(k1.max(-0.999))
        } else {
            None
        };
        let value = accept(integrate_adaptive(
            &integrand,
            pair[0],
            pair[1],
            &panel_config(cfg, hint),
        ))?;
        total += value;
    }
    if infinite {
        total += accept(integrate_improper(&integrand, last_finite.max(0.0), cfg))?;
    }
    if !total.is_finite() {
        return Err(divergent("the integral did not evaluate to a finite value"));
    }
    Ok(total)
}

fn apply_weighted(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
    extra: f64,
    infinite: bool,
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    check_dims(spec, f, x)?;
    if let Some(result) = homogeneous_value(spec, f, x, extra, infinite) {
        let value = result?;
        if !value.is_finite() {
            return Err(divergent("the point value is not finite"));
        }
        return Ok(value);
    }
    integrate_along_curve(spec, f, None, x, extra, infinite, cfg)
}

pub fn apply_u(spec: &OperatorSpec, f: &TestFunction, x: &[f64]) -> Result<f64, OperatorError> {
    apply_u_with(spec, f, x, &QuadratureConfig::default())
}

/// (U f)(x) = int_0^1 f(s(t) x) psi(t) dt.
pub fn apply_u_with(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    apply_weighted(spec, f, x, 0.0, false, cfg)
}

pub fn apply_v(spec: &OperatorSpec, f: &TestFunction, x: &[f64]) -> Result<f64, OperatorError> {
    apply_v_with(spec, f, x, &QuadratureConfig::default())
}

/// (V f)(x) = int_0^1 f(s(t) x) |s(t)|^n psi(t) dt: delegates to the unit
/// average under the effective kernel |s|^n psi whenever that kernel is
/// representable, so the identity holds by construction.
pub fn apply_v_with(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    let shift = spec.dimension as f64 * spec.curve.magnitude_exponent();
    match spec.kernel.shifted_by_power(shift) {
        Some(effective) => apply_u_with(&spec.with_kernel(effective), f, x, cfg),
        None => apply_weighted(spec, f, x, shift, false, cfg),
    }
}

pub fn apply_u_infinite(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
) -> Result<f64, OperatorError> {
    apply_u_infinite_with(spec, f, x, &QuadratureConfig::default())
}

/// Infinite-horizon average int_0^inf f(s(t) x) psi(t) dt. Kernels
/// supported on the unit interval reduce to the unit average exactly.
pub fn apply_u_infinite_with(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    if spec.kernel.support() == KernelSupport::UnitInterval {
        return apply_u_with(spec, f, x, cfg);
    }
    apply_weighted(spec, f, x, 0.0, true, cfg)
}

/// n-dimensional Hardy average of a radial function: the mean of f over
/// the ball of radius |x|, computed exactly from the radial profile.
pub fn apply_h_radial(f: &TestFunction, n: usize, x: &[f64]) -> Result<f64, OperatorError> {
    if n < 1 {
        return Err(OperatorError::InvalidSpec(
            "dimension must be at least 1".into(),
        ));
    }
    if f.dimension() != n || x.len() != n {
        return Err(OperatorError::DimensionMismatch {
            expected: n,
            got: if f.dimension() != n { f.dimension() } else { x.len() },
        });
    }
    let Some(d) = f.decompose() else {
        return Err(OperatorError::NonRadialInput);
    };
    if d.angular.odd_sign || d.angular.table.is_some() {
        return Err(OperatorError::NonRadialInput);
    }
    let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(OperatorError::InvalidSpec(
            "the Hardy average needs a nonzero evaluation point".into(),
        ));
    }
    let window = PiecewiseProfile::single(0.0, r, vec![LogPolyTerm::new(1.0, 0.0, 0)]);
    let clipped = d.profile.multiply(&window);
    match clipped.integrate_with_power((n - 1) as f64) {
        Ok(v) => Ok(v * n as f64 / r.powi(n as i32)),
        Err(ExactError::Divergent) => Err(divergent(
            "the radial profile is not integrable over the ball",
        )),
        Err(e) => Err(OperatorError::InvalidSpec(format!(
            "radial reduction failed: {e:?}"
        ))),
    }
}

pub fn apply_commutator(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
) -> Result<f64, OperatorError> {
    apply_commutator_with(spec, f, x, &QuadratureConfig::default())
}

/// Commutator (b U - U b) f in the fused integral form
/// int_0^1 (b(x) - b(s(t)x)) f(s(t)x) psi(t) dt, one quadrature pass.
pub fn apply_commutator_with(
    spec: &OperatorSpec,
    f: &TestFunction,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    let Some(symbol) = spec.symbol.as_ref() else {
        return Err(OperatorError::InvalidSpec(
            "commutator application needs a symbol on the operator".into(),
        ));
    };
    check_dims(spec, f, x)?;
    let b_at_x = symbol.evaluate(x)?;
    integrate_along_curve(spec, f, Some((symbol, b_at_x)), x, 0.0, false, cfg)
}

/// Dispatches on the operator kind (commutator mode first when a symbol
/// is present).
pub fn apply(spec: &OperatorSpec, f: &TestFunction, x: &[f64]) -> Result<f64, OperatorError> {
    if spec.symbol.is_some() {
        return apply_commutator(spec, f, x);
    }
    match spec.kind {
        OperatorKind::HardyCesaro => apply_u(spec, f, x),
        OperatorKind::Cesaro => apply_v(spec, f, x),
        OperatorKind::InfiniteHorizon => apply_u_infinite(spec, f, x),
        OperatorKind::NdimHardy => apply_h_radial(f, spec.dimension, x),
    }
}

/// Applies the operator at every grid point concurrently.
pub fn apply_on_grid(
    spec: &OperatorSpec,
    f: &TestFunction,
    points: &[Vec<f64>],
) -> Vec<Result<f64, OperatorError>> {
    parallel_map(points, |x| apply(spec, f, x))
}
