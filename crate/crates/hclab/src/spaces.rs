//! Weighted function-space functionals: Lebesgue norms against homogeneous
//! weights, mean-oscillation estimators over ball families, and a centered
//! maximal-function estimator.
//!
//! Structured functions are integrated by exact polar reduction: the
//! angular factor separates from a piecewise power-log radial profile, and
//! both factors have closed forms in the common cases. Opaque functions
//! fall back to a frozen-direction sphere sample under radial quadrature,
//! and off-center balls in several dimensions use plain Monte Carlo. The
//! oscillation and maximal values are finite-sample lower bounds for the
//! corresponding suprema, never upper bounds.

use crate::exact::{ExactError, LogPolyTerm, PiecewiseProfile};
use crate::functions::{FunctionError, TestFunction};
use crate::parallel::parallel_map;
use crate::quadrature::{
    integrate_adaptive, integrate_improper, QuadratureConfig, QuadratureError,
};
use crate::special;
use crate::weights::{ball_mass, Ball, HomogeneousWeight, WeightError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("the norm integral diverges")]
    DivergentNorm,
    #[error("integrand is not integrable on a family ball: {0}")]
    NonIntegrableOnBall(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Numerical knobs shared by the functionals: quadrature tolerances, the
/// frozen direction count for opaque integrands, Monte Carlo samples per
/// ball, and the base seed.
#[derive(Debug, Clone)]
pub struct SamplingConfig {
    pub quadrature: QuadratureConfig,
    pub directions: usize,
    pub ball_samples: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            quadrature: QuadratureConfig::default(),
            directions: 768,
            ball_samples: 30_000,
            seed: 42,
        }
    }
}

/// Sampled stand-in for the supremum over all balls: a center list crossed
/// with a geometric radius grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallFamily {
    dimension: usize,
    centers: Vec<Vec<f64>>,
    r_min: f64,
    r_max: f64,
    count: usize,
    include_origin: bool,
}

impl BallFamily {
    pub fn new(
        dimension: usize,
        centers: Vec<Vec<f64>>,
        r_min: f64,
        r_max: f64,
        count: usize,
        include_origin: bool,
    ) -> Result<BallFamily, SpaceError> {
        if dimension < 1 {
            return Err(SpaceError::InvalidParameter(
                "family dimension must be at least 1".into(),
            ));
        }
        if !(r_min > 0.0) || !r_min.is_finite() || !r_max.is_finite() || r_max < r_min {
            return Err(SpaceError::InvalidParameter(format!(
                "radius grid needs 0 < r_min <= r_max, got [{r_min}, {r_max}]"
            )));
        }
        if count < 1 {
            return Err(SpaceError::InvalidParameter(
                "radius grid needs at least one point".into(),
            ));
        }
        for c in &centers {
            if c.len() != dimension {
                return Err(SpaceError::DimensionMismatch {
                    expected: dimension,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(SpaceError::InvalidParameter(
                    "ball centers must be finite".into(),
                ));
            }
        }
        Ok(BallFamily {
            dimension,
            centers,
            r_min,
            r_max,
            count,
            include_origin,
        })
    }

    /// Default witness family: dyadic centers on the first axis out to
    /// 2^13, radii spanning 2^-10 to 2^10 on a 41-point geometric grid,
    /// plus the origin.
    pub fn default_for_dimension(n: usize) -> BallFamily {
        let mut centers = Vec::new();
        for k in -5i32..=13 {
            let c = 2f64.powi(k);
            for sign in [1.0, -1.0] {
                let mut point = vec![0.0; n];
                point[0] = sign * c;
                centers.push(point);
            }
        }
        BallFamily {
            dimension: n,
            centers,
            r_min: 2f64.powi(-10),
            r_max: 2f64.powi(10),
            count: 41,
            include_origin: true,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radii(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.r_min];
        }
        let ratio = self.r_max / self.r_min;
        (0..self.count)
            .map(|i| self.r_min * ratio.powf(i as f64 / (self.count - 1) as f64))
            .collect()
    }

    pub fn balls(&self) -> Vec<Ball> {
        let mut centers: Vec<Vec<f64>> = Vec::new();
        if self.include_origin {
            centers.push(vec![0.0; self.dimension]);
        }
        centers.extend(self.centers.iter().cloned());
        let radii = self.radii();
        let mut out = Vec::with_capacity(centers.len() * radii.len());
        for c in &centers {
            for r in &radii {
                out.push(Ball::new(c.clone(), *r).expect("family entries are validated"));
            }
        }
        out
    }

    /// Same centers and radius span with a denser radius grid.
    pub fn refined(&self, factor: usize) -> BallFamily {
        let mut out = self.clone();
        out.count = (self.count * factor.max(1)).max(self.count + 1);
        out
    }
}

fn eval_or_nan(f: &TestFunction, x: &[f64]) -> f64 {
    f.evaluate(x).unwrap_or(f64::NAN)
}

/// Accepts a quadrature result that converged, or one whose reported error
/// is small enough to be usable even though the target tolerance was not
/// reached (offset rounding near interior singular points can stall the
/// estimate without spoiling the value).
fn adaptive_value(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, SpaceError> {
    match integrate_adaptive(f, a, b, cfg) {
        Ok(r) => Ok(r.value),
        Err(QuadratureError::NonConvergence {
            value,
            error_estimate,
            ..
        }) if error_estimate <= 1e-6 * value.abs().max(1.0) => Ok(value),
        Err(e) => Err(e.into()),
    }
}

fn improper_value(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, SpaceError> {
    match integrate_improper(f, a, cfg) {
        Ok(r) => Ok(r.value),
        Err(QuadratureError::DivergenceSuspected) => Err(SpaceError::DivergentNorm),
        Err(QuadratureError::NonConvergence {
            value,
            error_estimate,
            ..
        }) if error_estimate <= 1e-6 * value.abs().max(1.0) => Ok(value),
        Err(e) => Err(e.into()),
    }
}

fn head_hint(power: f64, lead: (f64, u32), scale: f64) -> Option<f64> {
    let mut kappa = scale * lead.0 + power;
    if lead.1 > 0 {
        // A logarithmic factor is slightly worse than the bare power.
        kappa -= 0.25;
    }
    (kappa < 0.0).then(|| kappa.max(-0.999))
}

/// int |profile(r)|^p r^extra dr over the full support: exact when the
/// piece structure allows, piecewise quadrature with analytic divergence
/// screens otherwise.
fn radial_abs_factor(
    profile: &PiecewiseProfile,
    p: f64,
    extra: f64,
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    match profile.abs_pow_integral(p, extra) {
        Ok(v) => return Ok(v),
        Err(ExactError::Divergent) => return Err(SpaceError::DivergentNorm),
        Err(ExactError::NotExact) => {}
        Err(e) => {
            return Err(SpaceError::InvalidParameter(format!(
                "radial reduction failed: {e:?}"
            )))
        }
    }
    // The exact route declined (mixed terms with fractional p). The
    // endpoint behaviour is still an exact power-log datum, so divergence
    // is decided analytically before any quadrature runs.
    let lead0 = profile.lead_at_zero();
    if p * lead0.0 + extra <= -1.0 && profile.pieces.first().is_some_and(|q| q.lo == 0.0) {
        return Err(SpaceError::DivergentNorm);
    }
    if let Some(tail) = profile.lead_at_infinity() {
        if p * tail.0 + extra >= -1.0 {
            return Err(SpaceError::DivergentNorm);
        }
    }
    let mut total = 0.0;
    for piece in &profile.pieces {
        let g = |r: f64| piece.eval(r).abs().powf(p) * r.powf(extra);
        if piece.hi.is_infinite() {
            total += improper_value(&g, piece.lo, &cfg.quadrature)?;
        } else if piece.lo == 0.0 {
            let head_cfg = QuadratureConfig {
                singularity_exponent_hint: head_hint(extra, lead0, p),
                ..cfg.quadrature.clone()
            };
            total += adaptive_value(&g, 0.0, piece.hi, &head_cfg)?;
        } else {
            total += adaptive_value(&g, piece.lo, piece.hi, &cfg.quadrature)?;
        }
    }
    Ok(total)
}

/// int_{S} |angular(theta_1)|^p w_profile(theta_1) dsigma. With no zonal
/// table the factor is the weight's sphere constant exactly (the sign
/// witness has unit modulus almost everywhere).
fn angular_abs_factor(
    table: Option<&crate::weights::ZonalTable>,
    w: &HomogeneousWeight,
    p: f64,
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    let n = w.dimension();
    let Some(table) = table else {
        return Ok(w.sphere_constant());
    };
    if n == 1 {
        return Ok(table.eval(1.0).abs().powf(p) * w.profile_value(1.0)
            + table.eval(-1.0).abs().powf(p) * w.profile_value(-1.0));
    }
    let m = (n - 2) as i32;
    let g = |phi: f64| {
        let u = phi.cos();
        table.eval(u).abs().powf(p) * w.profile_value(u) * phi.sin().powi(m)
    };
    let v = adaptive_value(&g, 0.0, std::f64::consts::PI, &cfg.quadrature)?;
    Ok(special::sphere_area(n - 1) * v)
}

pub fn lp_norm(
    f: &TestFunction,
    w: &HomogeneousWeight,
    p: f64,
) -> Result<f64, SpaceError> {
    lp_norm_with(f, w, p, &SamplingConfig::default())
}

/// Weighted Lebesgue norm (int |f|^p w dx)^(1/p).
pub fn lp_norm_with(
    f: &TestFunction,
    w: &HomogeneousWeight,
    p: f64,
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    if !p.is_finite() || p < 1.0 {
        return Err(SpaceError::InvalidParameter(format!(
            "norm exponent must satisfy 1 <= p < infinity, got {p}"
        )));
    }
    if f.dimension() != w.dimension() {
        return Err(SpaceError::DimensionMismatch {
            expected: w.dimension(),
            got: f.dimension(),
        });
    }
    let n = w.dimension();
    let extra = (n - 1) as f64 + w.alpha();
    if let Some(d) = f.decompose() {
        let angular = angular_abs_factor(d.angular.table.as_ref(), w, p, cfg)?;
        if angular == 0.0 {
            return Ok(0.0);
        }
        let radial = radial_abs_factor(&d.profile, p, extra, cfg)?;
        return Ok((angular * radial).powf(1.0 / p));
    }
    mc_norm(f, w, p, cfg)
}

/// Frozen-direction fallback: a fixed sphere sample turns the integral
/// into a deterministic radial quadrature (in dimension one the two
/// directions make it exact in angle).
fn mc_norm(
    f: &TestFunction,
    w: &HomogeneousWeight,
    p: f64,
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    let n = f.dimension();
    let (dirs, dir_weight) = if n == 1 {
        (vec![vec![1.0], vec![-1.0]], 1.0)
    } else {
        let count = cfg.directions.max(16);
        let mut dirs = Vec::with_capacity(count);
        for i in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            loop {
                let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 1e-150 {
                    dirs.push(v.into_iter().map(|c| c / norm).collect());
                    break;
                }
            }
        }
        (dirs, special::sphere_area(n) / count as f64)
    };
    let ang: Vec<f64> = dirs.iter().map(|d| w.profile_value(d[0])).collect();
    let extra = (n - 1) as f64 + w.alpha();
    let g = |r: f64| {
        let mut acc = 0.0;
        for (d, aw) in dirs.iter().zip(&ang) {
            let x: Vec<f64> = d.iter().map(|c| c * r).collect();
            acc += eval_or_nan(f, &x).abs().powf(p) * aw;
        }
        acc * dir_weight * r.powf(extra)
    };
    let mut cuts: Vec<f64> = f
        .radial_breakpoints()
        .into_iter()
        .filter(|b| *b > 0.0 && b.is_finite())
        .collect();
    if cuts.is_empty() {
        cuts.push(1.0);
    }
    let alpha = w.alpha();
    let head_cfg = QuadratureConfig {
        singularity_exponent_hint: (alpha < 0.0).then(|| alpha.max(-0.999)),
        ..cfg.quadrature.clone()
    };
    let mut total = adaptive_value(&g, 0.0, cuts[0], &head_cfg)?;
    for pair in cuts.windows(2) {
        total += adaptive_value(&g, pair[0], pair[1], &cfg.quadrature)?;
    }
    total += improper_value(&g, *cuts.last().expect("nonempty"), &cfg.quadrature)?;
    Ok(total.powf(1.0 / p))
}

/// Splits relevant to a one-dimensional ball: the weight's origin
/// singularity plus the function's radial breakpoints on both sides.
fn line_splits(f: &TestFunction, a: f64, b: f64) -> Vec<f64> {
    let mut cuts = vec![a, b];
    if a < 0.0 && b > 0.0 {
        cuts.push(0.0);
    }
    for bp in f.radial_breakpoints() {
        for signed in [bp, -bp] {
            if signed > a && signed < b {
                cuts.push(signed);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// int_a^b g(x) w(x) dx with exact subdivision and a singularity hint for
/// the panels meeting the origin.
fn line_ball_integral(
    g: &dyn Fn(f64) -> f64,
    w: &HomogeneousWeight,
    f: &TestFunction,
    a: f64,
    b: f64,
    origin_kappa: f64,
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    let cuts = line_splits(f, a, b);
    let integrand = |x: f64| g(x) * w.evaluate(&[x]);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let touches_origin = pair[0] == 0.0 || pair[1] == 0.0;
        let panel_cfg = if touches_origin && origin_kappa < 0.0 {
            QuadratureConfig {
                singularity_exponent_hint: Some(origin_kappa.max(-0.999)),
                ..cfg.quadrature.clone()
            }
        } else {
            cfg.quadrature.clone()
        };
        total += adaptive_value(&integrand, pair[0], pair[1], &panel_cfg)?;
    }
    Ok(total)
}

fn mass_of(w: &HomogeneousWeight, ball: &Ball) -> Result<f64, SpaceError> {
    match ball_mass(w, ball) {
        Ok(m) => Ok(m),
        Err(WeightError::NonIntegrable) => Err(SpaceError::NonIntegrableOnBall(format!(
            "weight mass diverges on the ball of radius {} at {:?}",
            ball.radius(),
            ball.center()
        ))),
        Err(e) => Err(SpaceError::Weight(e)),
    }
}

/// Integrability screen for |f|^q w near the origin, using the exact
/// leading exponent when the function decomposes. `ambient` is n for full
/// balls and 1 for line integrals.
fn origin_screen(
    f: &TestFunction,
    w: &HomogeneousWeight,
    q: f64,
    ambient: f64,
) -> Result<f64, SpaceError> {
    let Some(d) = f.decompose() else {
        return Ok(w.alpha().min(0.0));
    };
    let lead = d.profile.lead_at_zero();
    let kappa = q * lead.0 + w.alpha() + (ambient - 1.0);
    if kappa <= -1.0 {
        return Err(SpaceError::NonIntegrableOnBall(format!(
            "|f|^{q} w behaves like r^{kappa} near the origin"
        )));
    }
    Ok(head_hint(w.alpha(), lead, q).unwrap_or(0.0))
}

fn uniform_ball_point(rng: &mut ChaCha8Rng, ball: &Ball, out: &mut Vec<f64>) {
    let n = ball.dimension();
    out.clear();
    loop {
        let mut norm2 = 0.0;
        for _ in 0..n {
            let v: f64 = rng.sample(StandardNormal);
            out.push(v);
            norm2 += v * v;
        }
        if norm2.sqrt() > 1e-150 {
            let scale = ball.radius() * rng.random::<f64>().powf(1.0 / n as f64) / norm2.sqrt();
            for (o, c) in out.iter_mut().zip(ball.center()) {
                *o = *o * scale + c;
            }
            return;
        }
        out.clear();
    }
}

/// Weighted mean and q-th oscillation on one ball by two-pass Monte Carlo
/// with frozen per-sample streams; the ball volume cancels in both ratios.
fn ball_mc_moments(
    f: &TestFunction,
    w: &HomogeneousWeight,
    ball: &Ball,
    q: f64,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<(f64, f64), SpaceError> {
    if ball.touches_origin() && !w.locally_integrable() {
        return Err(SpaceError::NonIntegrableOnBall(
            "weight is not locally integrable at the origin".into(),
        ));
    }
    origin_screen(f, w, q.max(1.0), ball.dimension() as f64)?;
    let samples = cfg.ball_samples.max(16);
    let mut point = Vec::with_capacity(ball.dimension());
    let mut sw = 0.0;
    let mut sfw = 0.0;
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        uniform_ball_point(&mut rng, ball, &mut point);
        let wx = w.evaluate(&point);
        let fx = eval_or_nan(f, &point);
        if !wx.is_finite() || !fx.is_finite() {
            return Err(SpaceError::NonIntegrableOnBall(format!(
                "non-finite sample at {point:?}"
            )));
        }
        sw += wx;
        sfw += fx * wx;
    }
    if sw <= 0.0 {
        return Err(SpaceError::NonIntegrableOnBall(
            "weight mass sampled as zero on the ball".into(),
        ));
    }
    let mean = sfw / sw;
    let mut sosc = 0.0;
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        uniform_ball_point(&mut rng, ball, &mut point);
        let wx = w.evaluate(&point);
        let fx = eval_or_nan(f, &point);
        sosc += (fx - mean).abs().powf(q) * wx;
    }
    Ok((mean, (sosc / sw).powf(1.0 / q)))
}

/// Oscillation of f on one ball: weighted mean, then the q-mean deviation.
fn ball_oscillation(
    f: &TestFunction,
    w: &HomogeneousWeight,
    ball: &Ball,
    q: f64,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<f64, SpaceError> {
    let n = ball.dimension();
    if n == 1 {
        let (a, b) = (ball.center()[0] - ball.radius(), ball.center()[0] + ball.radius());
        let mass = mass_of(w, ball)?;
        let mean_kappa = origin_screen(f, w, 1.0, 1.0)?;
        let mean = line_ball_integral(
            &|x: f64| eval_or_nan(f, &[x]),
            w,
            f,
            a,
            b,
            mean_kappa,
            cfg,
        )? / mass;
        let osc_kappa = origin_screen(f, w, q, 1.0)?;
        let osc = line_ball_integral(
            &|x: f64| (eval_or_nan(f, &[x]) - mean).abs().powf(q),
            w,
            f,
            a,
            b,
            osc_kappa,
            cfg,
        )? / mass;
        return Ok(osc.powf(1.0 / q));
    }
    let centered = ball.center().iter().all(|c| *c == 0.0);
    if centered {
        if let Some(d) = f.decompose() {
            if d.angular.table.is_none() {
                return centered_ball_oscillation(&d, f, w, ball.radius(), q, cfg);
            }
        }
    }
    ball_mc_moments(f, w, ball, q, cfg, seed).map(|(_, osc)| osc)
}

/// Centered-ball oscillation for sign-times-radial functions: the weighted
/// mean reduces to an exact radial integral (zero for odd functions), the
/// deviation to a one-dimensional quadrature split over the half-spheres.
fn centered_ball_oscillation(
    d: &crate::functions::RadialDecomposition,
    f: &TestFunction,
    w: &HomogeneousWeight,
    radius: f64,
    q: f64,
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    let n = w.dimension();
    let extra = (n - 1) as f64 + w.alpha();
    let ball = Ball::centered(n, radius)?;
    let mass = mass_of(w, &ball)?;
    let window = PiecewiseProfile::single(0.0, radius, vec![LogPolyTerm::new(1.0, 0.0, 0)]);
    let clipped = d.profile.multiply(&window);
    let mean = if d.angular.odd_sign {
        0.0
    } else {
        let radial = match clipped.integrate_with_power(extra) {
            Ok(v) => v,
            Err(ExactError::Divergent) => {
                return Err(SpaceError::NonIntegrableOnBall(
                    "mean integral diverges at the origin".into(),
                ))
            }
            Err(e) => {
                return Err(SpaceError::InvalidParameter(format!(
                    "radial reduction failed: {e:?}"
                )))
            }
        };
        w.sphere_constant() * radial / mass
    };
    let osc_kappa = origin_screen(f, w, q, n as f64)?;
    let profile = d.profile.clone();
    let branches: &[(f64, f64)] = if d.angular.odd_sign {
        &[(0.5, 1.0), (0.5, -1.0)]
    } else {
        &[(1.0, 1.0)]
    };
    let g = |r: f64| {
        let v = profile.eval(r);
        branches
            .iter()
            .map(|(share, sign)| share * (sign * v - mean).abs().powf(q))
            .sum::<f64>()
            * r.powf(extra)
    };
    let mut cuts: Vec<f64> = profile
        .pieces
        .iter()
        .flat_map(|p| [p.lo, p.hi])
        .filter(|c| *c > 0.0 && *c < radius)
        .collect();
    cuts.push(0.0);
    cuts.push(radius);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut osc_q = 0.0;
    for pair in cuts.windows(2) {
        let panel_cfg = if pair[0] == 0.0 && osc_kappa < 0.0 {
            QuadratureConfig {
                singularity_exponent_hint: Some(osc_kappa.max(-0.999)),
                ..cfg.quadrature.clone()
            }
        } else {
            cfg.quadrature.clone()
        };
        osc_q += adaptive_value(&g, pair[0], pair[1], &panel_cfg)?;
    }
    Ok((w.sphere_constant() * osc_q / mass).powf(1.0 / q))
}

pub fn bmo_estimate(
    f: &TestFunction,
    w: &HomogeneousWeight,
    fam: &BallFamily,
    exponent: f64,
) -> Result<f64, SpaceError> {
    bmo_estimate_with(f, w, fam, exponent, &SamplingConfig::default())
}

/// Largest weighted mean oscillation over the family: a lower bound for
/// the oscillation seminorm. Balls are evaluated concurrently.
pub fn bmo_estimate_with(
    f: &TestFunction,
    w: &HomogeneousWeight,
    fam: &BallFamily,
    exponent: f64,
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    if !exponent.is_finite() || exponent < 1.0 {
        return Err(SpaceError::InvalidParameter(format!(
            "oscillation exponent must satisfy 1 <= q < infinity, got {exponent}"
        )));
    }
    if f.dimension() != w.dimension() || fam.dimension() != w.dimension() {
        return Err(SpaceError::DimensionMismatch {
            expected: w.dimension(),
            got: if f.dimension() != w.dimension() {
                f.dimension()
            } else {
                fam.dimension()
            },
        });
    }
    let balls = fam.balls();
    let results = parallel_map(&balls, |ball| {
        let seed = cfg
            .seed
            .wrapping_add((ball.radius().to_bits() ^ ball.center()[0].to_bits()).rotate_left(17));
        ball_oscillation(f, w, ball, exponent, cfg, seed)
    });
    let mut best = 0.0f64;
    for r in results {
        best = best.max(r?);
    }
    Ok(best)
}

pub fn maximal_estimate(
    f: &TestFunction,
    w: &HomogeneousWeight,
    x: &[f64],
    radii: &[f64],
) -> Result<f64, SpaceError> {
    maximal_estimate_with(f, w, x, radii, &SamplingConfig::default())
}

/// Centered maximal-function estimate: the largest weighted average of
/// |f| over balls B(x, r) with r on the given grid. A lower bound for the
/// maximal function at x.
pub fn maximal_estimate_with(
    f: &TestFunction,
    w: &HomogeneousWeight,
    x: &[f64],
    radii: &[f64],
    cfg: &SamplingConfig,
) -> Result<f64, SpaceError> {
    if f.dimension() != w.dimension() || x.len() != w.dimension() {
        return Err(SpaceError::DimensionMismatch {
            expected: w.dimension(),
            got: if f.dimension() != w.dimension() {
                f.dimension()
            } else {
                x.len()
            },
        });
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(SpaceError::InvalidParameter(
            "radius grid must be nonempty with positive finite entries".into(),
        ));
    }
    let n = w.dimension();
    let jobs: Vec<f64> = radii.to_vec();
    let results = parallel_map(&jobs, |r| -> Result<f64, SpaceError> {
        let ball = Ball::new(x.to_vec(), *r)?;
        let mass = mass_of(w, &ball)?;
        if n == 1 {
            let (a, b) = (x[0] - r, x[0] + r);
            let kappa = origin_screen(f, w, 1.0, 1.0)?;
            let v = line_ball_integral(
                &|t: f64| eval_or_nan(f, &[t]).abs(),
                w,
                f,
                a,
                b,
                kappa,
                cfg,
            )?;
            return Ok(v / mass);
        }
        let centered = x.iter().all(|c| *c == 0.0);
        if centered {
            if let Some(d) = f.decompose() {
                let angular = angular_abs_factor(d.angular.table.as_ref(), w, 1.0, cfg)?;
                let window =
                    PiecewiseProfile::single(0.0, *r, vec![LogPolyTerm::new(1.0, 0.0, 0)]);
                let clipped = d.profile.multiply(&window);
                let extra = (n - 1) as f64 + w.alpha();
                let radial = match radial_abs_factor(&clipped, 1.0, extra, cfg) {
                    Ok(v) => v,
                    Err(SpaceError::DivergentNorm) => {
                        return Err(SpaceError::NonIntegrableOnBall(
                            "average of |f| diverges on a centered ball".into(),
                        ))
                    }
                    Err(e) => return Err(e),
                };
                return Ok(angular * radial / mass);
            }
        }
        // Off-center or opaque: single-pass Monte Carlo average of |f|.
        if ball.touches_origin() && !w.locally_integrable() {
            return Err(SpaceError::NonIntegrableOnBall(
                "weight is not locally integrable at the origin".into(),
            ));
        }
        origin_screen(f, w, 1.0, n as f64)?;
        let samples = cfg.ball_samples.max(16);
        let seed = cfg.seed.wrapping_add(r.to_bits().rotate_left(9));
        let mut point = Vec::with_capacity(n);
        let mut sw = 0.0;
        let mut sfw = 0.0;
        for i in 0..samples {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            uniform_ball_point(&mut rng, &ball, &mut point);
            let wx = w.evaluate(&point);
            let fx = eval_or_nan(f, &point).abs();
            if !wx.is_finite() || !fx.is_finite() {
                return Err(SpaceError::NonIntegrableOnBall(format!(
                    "non-finite sample at {point:?}"
                )));
            }
            sw += wx;
            sfw += fx * wx;
        }
        if sw <= 0.0 {
            return Err(SpaceError::NonIntegrableOnBall(
                "weight mass sampled as zero on the ball".into(),
            ));
        }
        Ok(sfw / sw)
    });
    let mut best = 0.0f64;
    for r in results {
        best = best.max(r?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{build_weight, AngularProfile};
    use approx::assert_relative_eq;

    fn lebesgue(n: usize) -> HomogeneousWeight {
        build_weight(0.0, AngularProfile::Constant(1.0), n).unwrap()
    }

    fn axis_weight(n: usize, alpha: f64) -> HomogeneousWeight {
        build_weight(alpha, AngularProfile::AxisPower, n).unwrap()
    }

    #[test]
    fn norm_examples() {
        // Improper quadrature oracle before the closed form: the squared
        // norm of the outer extremal is c * int_1^inf r^(-1.2) dr.
        let tail = integrate_improper(
            &|r: f64| r.powf(-1.2),
            1.0,
            &QuadratureConfig::default(),
        )
        .unwrap()
        .value;
        assert_relative_eq!(tail, 5.0, max_relative = 1e-9);
        let oracle = (2.0 * tail).sqrt();

        let f = TestFunction::outer_extremal(1, 0.0, 2.0, 0.1).unwrap();
        let w = lebesgue(1);
        let norm = lp_norm(&f, &w, 2.0).unwrap();
        assert_relative_eq!(norm, oracle, max_relative = 1e-9);
        assert_relative_eq!(norm, 10f64.sqrt(), max_relative = 1e-13);

        // Indicator: the mass is the interval length.
        let ind = TestFunction::ball_indicator(1, 1.0).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert_relative_eq!(
                lp_norm(&ind, &w, p).unwrap(),
                2f64.powf(1.0 / p),
                max_relative = 1e-13
            );
        }

        // Zero function.
        let zero = TestFunction::constant(1, 0.0).unwrap();
        assert_eq!(lp_norm(&zero, &w, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn norm_divergence_verdicts() {
        let w = lebesgue(1);
        // Non-decaying tail.
        let flat = TestFunction::constant(1, 1.0).unwrap();
        assert!(matches!(
            lp_norm(&flat, &w, 2.0),
            Err(SpaceError::DivergentNorm)
        ));
        // Too singular at the origin.
        let sharp = TestFunction::inner_power(1, -2.0).unwrap();
        assert!(matches!(
            lp_norm(&sharp, &w, 2.0),
            Err(SpaceError::DivergentNorm)
        ));
    }

    #[test]
    fn norm_scaling_is_exactly_homogeneous() {
        let w = axis_weight(1, 0.5);
        let f = TestFunction::outer_extremal(1, 0.5, 2.0, 0.25).unwrap();
        let base = lp_norm(&f, &w, 2.0).unwrap();
        for c in [-2.0, 0.5] {
            let scaled = lp_norm(&f.scaled(c), &w, 2.0).unwrap();
            assert_relative_eq!(scaled, c.abs() * base, max_relative = 1e-14);
        }
        // Opaque route keeps the same identity within its own arithmetic.
        let op = TestFunction::opaque(1, "cutoff", vec![1.0], |x| {
            let r = x[0].abs();
            if r > 1.0 {
                r.powf(-1.3)
            } else {
                0.0
            }
        })
        .unwrap();
        let base = lp_norm(&op, &w, 2.0).unwrap();
        let scaled = lp_norm(&op.scaled(-3.0), &w, 2.0).unwrap();
        assert_relative_eq!(scaled, 3.0 * base, max_relative = 1e-11);
    }

    #[test]
    fn dilation_covariance() {
        // Structured route, n = 2: indicators dilate exactly.
        let w = axis_weight(2, 0.5);
        let p = 2.0;
        let drop = (2.0 + 0.5) / p;
        let base = lp_norm(&TestFunction::ball_indicator(2, 1.0).unwrap(), &w, p).unwrap();
        for lambda in [0.5, 3.0] {
            let dilated = lp_norm(
                &TestFunction::ball_indicator(2, 1.0 / lambda).unwrap(),
                &w,
                p,
            )
            .unwrap();
            assert_relative_eq!(
                dilated,
                lambda.powf(-drop) * base,
                max_relative = 1e-12
            );
        }

        // Opaque route, n = 1: f(lambda x) against the closed-form factor.
        let w1 = axis_weight(1, 0.5);
        let f = TestFunction::outer_extremal(1, 0.5, 2.0, 0.2).unwrap();
        let base = lp_norm(&f, &w1, 2.0).unwrap();
        for lambda in [0.5f64, 3.0] {
            let shifted = TestFunction::opaque(1, "dilated", vec![1.0 / lambda], move |x| {
                let r = lambda * x[0].abs();
                if r > 1.0 {
                    r.powf(-0.75 - 0.2)
                } else {
                    0.0
                }
            })
            .unwrap();
            let dilated = lp_norm(&shifted, &w1, 2.0).unwrap();
            assert_relative_eq!(
                dilated,
                lambda.powf(-(1.5) / 2.0) * base,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn zonal_norm_matches_sphere_sample() {
        use crate::quadrature::sphere_mc_integrate;
        let n = 3;
        let table = crate::weights::ZonalTable::new(vec![0.5, 1.5, 2.0, 1.5, 0.5]).unwrap();
        let f = TestFunction::angular_witness(n, table.clone())
            .unwrap()
            .times(&TestFunction::outer_extremal(n, 0.0, 2.0, 0.3).unwrap())
            .unwrap();
        let w = lebesgue(n);
        let p = 2.0;
        // Monte Carlo oracle for the angular factor.
        let ang_mc = sphere_mc_integrate(&|x: &[f64]| table.eval(x[0]).powi(2), n, 400_000, 5)
            .unwrap()
            .value;
        // Radial factor in closed form: exponent -(3)/2 - 0.3 doubled.
        let radial = 1.0 / (2.0 * (1.5 + 0.3) - 3.0 + 1.0 - 1.0);
        let oracle = (ang_mc * radial).powf(0.5);
        let norm = lp_norm(&f, &w, p).unwrap();
        assert_relative_eq!(norm, oracle, max_relative = 0.01);
    }

    #[test]
    fn bmo_oracle_for_two_valued_functions() {
        // Honest oracle for a function taking values a+ on the positive
        // half and a- on the negative half of a centered interval:
        // mean = (a+ + a-)/2 and the deviation is |a+ - a-| * (w+ w-) * 2
        // divided by w(B)^2. For the sign witness that value is 1.
        let wp = 0.5f64;
        let wm = 0.5f64;
        let oracle = (1.0f64 - (-1.0f64)).abs() * 2.0 * wp * wm / (wp + wm).powi(2);
        assert_relative_eq!(oracle, 1.0);

        let f = TestFunction::sign_witness(1).unwrap();
        let w = lebesgue(1);
        let fam = BallFamily::new(1, vec![vec![0.0]], 0.5, 4.0, 5, true).unwrap();
        let est = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        assert_relative_eq!(est, oracle, max_relative = 1e-10);

        // Off-center intervals never beat the centered ones.
        let fam = BallFamily::new(1, vec![vec![0.3], vec![-1.0], vec![2.0]], 0.25, 8.0, 7, true)
            .unwrap();
        let est = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        assert!(est <= 1.0 + 1e-10, "estimate {est} exceeds the supremum");
        assert_relative_eq!(est, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn bmo_constant_function_is_zero() {
        let f = TestFunction::constant(1, 3.5).unwrap();
        let w = lebesgue(1);
        let fam = BallFamily::new(1, vec![vec![1.0]], 0.5, 2.0, 3, true).unwrap();
        let est = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        assert!(est.abs() < 1e-12, "constant oscillation {est}");
    }

    #[test]
    fn bmo_indicator_edge_oracle() {
        // Fraction lambda of the interval inside the support gives
        // oscillation 2 lambda (1 - lambda), maximized at 1/2. Intervals
        // centered at the edge x = 1 sit at lambda = 1/2 for every radius
        // up to 2.
        let lambda = 0.5f64;
        let oracle = 2.0 * lambda * (1.0 - lambda);
        assert_relative_eq!(oracle, 0.5);

        let f = TestFunction::ball_indicator(1, 1.0).unwrap();
        let w = lebesgue(1);
        let fam = BallFamily::new(1, vec![vec![1.0]], 0.25, 2.0, 4, false).unwrap();
        let est = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        assert_relative_eq!(est, oracle, max_relative = 1e-10);
    }

    #[test]
    fn bmo_monotone_under_family_growth() {
        let f = TestFunction::log_symbol(1).unwrap();
        let w = lebesgue(1);
        let small = BallFamily::new(1, vec![vec![1.0]], 0.5, 2.0, 3, false).unwrap();
        let large = BallFamily::new(1, vec![vec![1.0], vec![4.0]], 0.5, 8.0, 7, true).unwrap();
        let a = bmo_estimate(&f, &w, &small, 1.0).unwrap();
        let b = bmo_estimate(&f, &w, &large, 1.0).unwrap();
        assert!(b >= a - 1e-12, "family growth lowered the estimate");
    }

    #[test]
    fn bmo_exponent_power_mean_ordering() {
        let w = lebesgue(1);
        let fam = BallFamily::new(1, vec![vec![0.7], vec![2.0]], 0.25, 4.0, 5, true).unwrap();
        let witnesses = [
            TestFunction::sign_witness(1).unwrap(),
            TestFunction::ball_indicator(1, 1.0).unwrap(),
            TestFunction::log_symbol(1).unwrap(),
        ];
        for f in &witnesses {
            let e1 = bmo_estimate(f, &w, &fam, 1.0).unwrap();
            let e2 = bmo_estimate(f, &w, &fam, 2.0).unwrap();
            assert!(e1 <= e2 * (1.0 + 1e-9), "power means out of order: {e1} vs {e2}");
            let ratio = if e1 > 0.0 { e2 / e1 } else { 1.0 };
            println!("reverse power-mean ratio {ratio:.3}");
        }
    }

    #[test]
    fn log_symbol_bmo_bounded_and_stable() {
        let f = TestFunction::log_symbol(1).unwrap();
        let w = lebesgue(1);
        let fam = BallFamily::default_for_dimension(1);
        let est = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        assert!(est.is_finite() && est > 0.0);
        assert!(est < 4.0, "log oscillation cap exceeded: {est}");
        let refined = bmo_estimate(&f, &w, &fam.refined(2), 1.0).unwrap();
        assert!(
            (refined - est).abs() <= 0.05 * est,
            "refinement moved the estimate from {est} to {refined}"
        );
    }

    #[test]
    fn centered_sign_oscillation_in_the_plane() {
        let f = TestFunction::sign_witness(2).unwrap();
        let w = lebesgue(2);
        let fam = BallFamily::new(2, vec![], 0.5, 2.0, 3, true).unwrap();
        let est = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        assert_relative_eq!(est, 1.0, max_relative = 1e-10);

        // Monte Carlo route on an off-center ball straddling the
        // dividing line: bounded by the sign range and deterministic.
        let fam = BallFamily::new(2, vec![vec![0.0, 0.3]], 1.0, 1.0, 1, false).unwrap();
        let a = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        let b = bmo_estimate(&f, &w, &fam, 1.0).unwrap();
        assert_eq!(a, b, "repeated sampled estimate must be bit-identical");
        assert!(a > 0.5 && a <= 1.0 + 1e-12, "straddling ball oscillation {a}");
    }

    #[test]
    fn maximal_examples() {
        let w = lebesgue(1);
        let one = TestFunction::constant(1, 1.0).unwrap();
        assert_relative_eq!(
            maximal_estimate(&one, &w, &[0.7], &[0.5, 1.0, 3.0]).unwrap(),
            1.0,
            max_relative = 1e-9
        );

        // Oracle over the same grid: average of the indicator from x = 3
        // is min(r - 2, 2) / (2 r) once the ball reaches the support.
        let grid = [1.0, 2.5, 4.0, 8.0];
        let oracle = grid
            .iter()
            .map(|r: &f64| ((r - 2.0).min(2.0) / (2.0 * r)).max(0.0))
            .fold(0.0f64, f64::max);
        assert_relative_eq!(oracle, 0.25);
        let ind = TestFunction::ball_indicator(1, 1.0).unwrap();
        assert_relative_eq!(
            maximal_estimate(&ind, &w, &[3.0], &grid).unwrap(),
            oracle,
            max_relative = 1e-10
        );

        let zero = TestFunction::constant(1, 0.0).unwrap();
        assert_eq!(maximal_estimate(&zero, &w, &[3.0], &grid).unwrap(), 0.0);

        // Centered structured route in the plane.
        let w2 = lebesgue(2);
        let one2 = TestFunction::constant(2, 1.0).unwrap();
        assert_relative_eq!(
            maximal_estimate(&one2, &w2, &[0.0, 0.0], &[1.0, 2.0]).unwrap(),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn error_paths() {
        let w = lebesgue(1);
        let f = TestFunction::sign_witness(1).unwrap();
        let fam = BallFamily::new(1, vec![vec![0.0]], 0.5, 1.0, 2, false).unwrap();
        assert!(bmo_estimate(&f, &w, &fam, 0.5).is_err());
        assert!(lp_norm(&f, &w, 0.99).is_err());
        assert!(maximal_estimate(&f, &w, &[0.0], &[]).is_err());
        assert!(maximal_estimate(&f, &w, &[0.0], &[-1.0]).is_err());

        let f2 = TestFunction::sign_witness(2).unwrap();
        assert!(matches!(
            lp_norm(&f2, &w, 2.0),
            Err(SpaceError::DimensionMismatch { .. })
        ));

        // Weight mass diverges on balls through the origin.
        let heavy = build_weight(-2.0, AngularProfile::Constant(1.0), 1).unwrap();
        let fam = BallFamily::new(1, vec![vec![0.0]], 1.0, 1.0, 1, false).unwrap();
        assert!(matches!(
            bmo_estimate(&TestFunction::constant(1, 1.0).unwrap(), &heavy, &fam, 1.0),
            Err(SpaceError::NonIntegrableOnBall(_))
        ));

        // Function too singular against the weight near zero.
        let spike = TestFunction::radial_power(1, -2.0).unwrap();
        assert!(matches!(
            bmo_estimate(&spike, &w, &fam, 1.0),
            Err(SpaceError::NonIntegrableOnBall(_))
        ));
    }

    #[test]
    fn family_validation_and_shape() {
        assert!(BallFamily::new(1, vec![], 0.0, 1.0, 3, true).is_err());
        assert!(BallFamily::new(1, vec![], 2.0, 1.0, 3, true).is_err());
        assert!(BallFamily::new(1, vec![], 0.5, 1.0, 0, true).is_err());
        assert!(BallFamily::new(1, vec![vec![1.0, 2.0]], 0.5, 1.0, 2, true).is_err());
        let fam = BallFamily::new(1, vec![vec![1.0]], 0.25, 4.0, 5, true).unwrap();
        let radii = fam.radii();
        assert_eq!(radii.len(), 5);
        assert_relative_eq!(radii[0], 0.25);
        assert_relative_eq!(radii[4], 4.0);
        assert_relative_eq!(radii[2], 1.0);
        assert_eq!(fam.balls().len(), 10);
        let d = BallFamily::default_for_dimension(2);
        assert_eq!(d.balls().len(), 39 * 41);
    }
}
