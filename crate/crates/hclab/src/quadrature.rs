//! Deterministic numerical integration.
//!
//! One-dimensional integrals use an adaptive 7-15 Gauss-Kronrod rule with a
//! worst-panel-first queue. Endpoint singularities of power type u^kappa,
//! kappa > -1, are removed by the substitution u = v^m with
//! m = ceil(2/(1+kappa)) taken from a caller-supplied hint. Improper
//! integrals over (a, infinity) are screened for divergence with dyadic tail
//! shells and then compactified through u = a + v/(1-v); no raw truncation
//! is ever used. The sphere integrator is seeded Monte Carlo with one
//! counter-based generator stream per sample, so the result is a pure
//! function of (integrand, dimension, samples, seed) regardless of
//! evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },
    #[error("integration budget exhausted after {subdivisions_used} subdivisions: {value} +/- {error_estimate}")]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        subdivisions_used: usize,
    },
    #[error("tail refinements keep contributing: integral appears divergent")]
    DivergenceSuspected,
    #[error("extrapolation needs at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Integrand behaves like u^kappa near an endpoint, kappa > -1.
    pub singularity_exponent_hint: Option<f64>,
    pub mc_samples: usize,
    pub rng_seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            singularity_exponent_hint: None,
            mc_samples: 20_000,
            rng_seed: 42,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidInput(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 1 || self.mc_samples < 1 {
            return Err(QuadratureError::InvalidInput(
                "subdivision and sample budgets must be at least 1".into(),
            ));
        }
        if let Some(kappa) = self.singularity_exponent_hint {
            if !(kappa > -1.0) {
                return Err(QuadratureError::InvalidInput(format!(
                    "singularity hint {kappa} is not integrable (needs kappa > -1)"
                )));
            }
        }
        Ok(())
    }

    pub fn with_hint(mut self, kappa: f64) -> Self {
        self.singularity_exponent_hint = Some(kappa);
        self
    }

    pub fn without_hint(mut self) -> Self {
        self.singularity_exponent_hint = None;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

// 7-15 Gauss-Kronrod abscissae and weights on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel, QuadratureError> {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let eval = |x: f64| -> Result<f64, QuadratureError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { at: x })
        }
    };
    let fc = eval(center)?;
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    let mut pairs = [(0.0f64, 0.0f64); 7];
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        pairs[i] = (f1, f2);
        resk += WGK[i] * (f1 + f2);
        resabs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            resg += WG[i / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for i in 0..7 {
        resasc += WGK[i] * ((pairs[i].0 - reskh).abs() + (pairs[i].1 - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let raw = ((resk - resg) * half).abs();
    let mut error = raw;
    if resasc != 0.0 && raw != 0.0 {
        error = resasc * (200.0 * raw / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if floor > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(floor);
    }
    Ok(Panel { a, b, value, error })
}

fn tolerance(cfg: &QuadratureConfig, value: f64) -> f64 {
    cfg.abs_tol.max(cfg.rel_tol * value.abs())
}

/// Adaptive core on a bounded interval with no substitution applied.
fn adapt_core<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult, QuadratureError> {
    let mut heap = BinaryHeap::new();
    let first = kronrod_panel(f, a, b)?;
    let mut total_value = first.value;
    let mut total_error = first.error;
    heap.push(first);
    let mut used = 1usize;
    let width_floor = 30.0 * f64::EPSILON * (a.abs().max(b.abs()).max(1.0));
    while total_error > tolerance(cfg, total_value) && used < cfg.max_subdivisions {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        if worst.b - worst.a < width_floor {
            // Cannot refine further in f64; put it back and stop.
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod_panel(f, worst.a, mid)?;
        let right = kronrod_panel(f, mid, worst.b)?;
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        used += 1;
    }
    let converged = total_error <= tolerance(cfg, total_value);
    let result = IntegralResult {
        value: total_value,
        error_estimate: total_error.max(0.0),
        subdivisions_used: used,
        converged,
    };
    if converged {
        Ok(result)
    } else {
        Err(QuadratureError::NonConvergence {
            value: result.value,
            error_estimate: result.error_estimate,
            subdivisions_used: used,
        })
    }
}

fn substitution_order(kappa: f64) -> u32 {
    let m = (2.0 / (1.0 + kappa)).ceil();
    if !m.is_finite() || m <= 1.0 {
        1
    } else {
        (m as u32).min(32)
    }
}

/// Adaptive integration of f over (a, b) with endpoint singularities of
/// power type handled by the v^m substitution at both endpoints.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult, QuadratureError> {
    cfg.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadratureError::InvalidInput(format!(
            "invalid interval [{a}, {b}]"
        )));
    }
    let m = cfg.singularity_exponent_hint.map(substitution_order).unwrap_or(1);
    if m <= 1 {
        return adapt_core(&f, a, b, cfg);
    }
    // Split at the midpoint and map each half from its outer endpoint so
    // that both endpoint singularities are regularised.
    let mid = 0.5 * (a + b);
    let mf = m as f64;
    let sub_cfg = QuadratureConfig {
        max_subdivisions: (cfg.max_subdivisions / 2).max(1),
        ..cfg.clone()
    };
    let left = |v: f64| {
        let jac = mf * v.powi(m as i32 - 1) * (mid - a);
        let t = a + (mid - a) * v.powi(m as i32);
        if jac == 0.0 || !(t > a) {
            return 0.0;
        }
        f(t) * jac
    };
    let right = |v: f64| {
        let jac = mf * v.powi(m as i32 - 1) * (b - mid);
        let t = b - (b - mid) * v.powi(m as i32);
        if jac == 0.0 || !(t < b) {
            return 0.0;
        }
        f(t) * jac
    };
    let lr = adapt_core(&left, 0.0, 1.0, &sub_cfg)?;
    let rr = adapt_core(&right, 0.0, 1.0, &sub_cfg)?;
    Ok(IntegralResult {
        value: lr.value + rr.value,
        error_estimate: lr.error_estimate + rr.error_estimate,
        subdivisions_used: lr.subdivisions_used + rr.subdivisions_used,
        converged: true,
    })
}

/// Improper integral over (a, infinity). The range is walked in dyadic
/// shells at full tolerance until the tail stops contributing; the
/// remainder past the last shell is folded onto (0, 1] by u = A + (1-z)/z,
/// whose singular end sits at z = 0 where offsets carry full relative
/// precision. The shell magnitudes estimate the tail decay rate, which
/// picks the regularising power for the folded corner. A tail whose last
/// shells neither decay nor fade is reported as divergent; a convergent
/// tail decaying slower than u^(-1.045) carries visible mass beyond the
/// largest representable double and is reported as non-convergence with
/// the partial sum and a geometric tail bound.
pub fn integrate_improper<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult, QuadratureError> {
    cfg.validate()?;
    if !a.is_finite() {
        return Err(QuadratureError::InvalidInput("lower limit must be finite".into()));
    }
    let shell_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol.min(1e-14),
        max_subdivisions: 400,
        singularity_exponent_hint: None,
        ..cfg.clone()
    };
    let first_cfg = QuadratureConfig {
        singularity_exponent_hint: cfg.singularity_exponent_hint,
        ..shell_cfg.clone()
    };
    let mut partial = 0.0f64;
    let mut err_acc = 0.0f64;
    let mut subdiv = 0usize;
    let mut mags: Vec<f64> = Vec::new();
    let mut lo = a;
    let mut exhausted = true;
    for k in 0..=40u32 {
        let hi = a + (1u64 << k) as f64;
        let c = if k == 0 { &first_cfg } else { &shell_cfg };
        let shell = integrate_adaptive(&f, lo, hi, c)?;
        partial += shell.value;
        err_acc += shell.error_estimate;
        subdiv += shell.subdivisions_used;
        mags.push(shell.value.abs());
        lo = hi;
        let fade = 1e-3 * cfg.abs_tol.max(cfg.rel_tol * partial.abs());
        if mags.len() >= 4 && *mags.last().unwrap() <= fade {
            exhausted = false;
            break;
        }
    }
    let m = mags.len();
    if exhausted && m >= 3 {
        let (s1, s2, s3) = (mags[m - 3], mags[m - 2], mags[m - 1]);
        let scale = cfg.abs_tol.max(cfg.rel_tol * partial.abs());
        // The shell budget ran out with the last refinements still
        // contributing and showing no decay: flat at the 1e-4 level covers
        // the logarithmic boundary case while staying clear of genuinely
        // summable power tails, whose ratio sits visibly below one.
        let flat = s2 >= 0.9999 * s1 && s3 >= 0.9999 * s2;
        if flat && s1 > scale && s2 > scale && s3 > scale {
            return Err(QuadratureError::DivergenceSuspected);
        }
    }
    let mut decay = 3.0f64;
    if m >= 2 && mags[m - 1] > 0.0 && mags[m - 2] > 0.0 {
        let r = mags[m - 1] / mags[m - 2];
        if r < 1.0 {
            decay = -r.log2();
        } else if exhausted {
            decay = 0.0;
        }
    }
    if exhausted && decay < 0.045 {
        let r = (mags[m - 1] / mags[m - 2]).min(0.999_999);
        let tail_bound = mags[m - 1] * r / (1.0 - r);
        return Err(QuadratureError::NonConvergence {
            value: partial,
            error_estimate: tail_bound + err_acc,
            subdivisions_used: subdiv,
        });
    }
    let big = lo;
    let zmap = |z: f64| {
        if z <= 0.0 {
            return 0.0;
        }
        let u = big + (1.0 / z - 1.0);
        if !u.is_finite() {
            return 0.0;
        }
        let v = f(u);
        let zz = z * z;
        if v == 0.0 || zz == 0.0 {
            return 0.0;
        }
        v / zz
    };
    let rem_cfg = QuadratureConfig {
        singularity_exponent_hint: Some(decay.clamp(0.045, 3.0) - 1.0),
        max_subdivisions: cfg.max_subdivisions.saturating_sub(subdiv).max(64),
        ..cfg.clone()
    };
    let rem = integrate_adaptive(zmap, 0.0, 1.0, &rem_cfg)?;
    Ok(IntegralResult {
        value: partial + rem.value,
        error_estimate: err_acc + rem.error_estimate,
        subdivisions_used: subdiv + rem.subdivisions_used,
        converged: true,
    })
}

/// Monte Carlo integral of g over the unit sphere in R^n against surface
/// measure. One ChaCha8 stream per sample index: bit-reproducible for a
/// given (n, samples, seed) and independent of evaluation order.
pub fn sphere_mc_integrate<G: Fn(&[f64]) -> f64>(
    g: G,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<IntegralResult, QuadratureError> {
    if n < 2 {
        return Err(QuadratureError::InvalidInput(
            "sphere Monte Carlo needs dimension >= 2".into(),
        ));
    }
    if samples < 1 {
        return Err(QuadratureError::InvalidInput("need at least one sample".into()));
    }
    let area = crate::special::sphere_area(n);
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut point = vec![0.0f64; n];
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        loop {
            let mut norm_sq = 0.0;
            for slot in point.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *slot = z;
                norm_sq += z * z;
            }
            let norm = norm_sq.sqrt();
            if norm > 1e-150 {
                for slot in point.iter_mut() {
                    *slot /= norm;
                }
                break;
            }
        }
        let v = g(&point);
        if !v.is_finite() {
            return Err(QuadratureError::NonFinite { at: i as f64 });
        }
        let delta = v - mean;
        mean += delta / (i as f64 + 1.0);
        m2 += delta * (v - mean);
    }
    let value = area * mean;
    let stderr = if samples > 1 {
        area * (m2 / (samples as f64 * (samples as f64 - 1.0))).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(IntegralResult {
        value,
        error_estimate: stderr,
        subdivisions_used: samples,
        converged: stderr <= tolerance(&QuadratureConfig::default(), value),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub limit: f64,
    /// Set when the value sequence was not monotone; the extrapolation is
    /// still performed, as a warning-grade condition.
    pub non_monotone: bool,
}

/// Limit of value(eps) as eps -> 0+ assuming value = L + c*eps + o(eps).
/// Two elimination stages over the last three points: the first removes the
/// linear term, the second the leftover product term, so linear, constant
/// and quadratic models are reproduced exactly.
pub fn extrapolate_limit(pairs: &[(f64, f64)]) -> Result<Extrapolated, QuadratureError> {
    if pairs.len() < 3 {
        return Err(QuadratureError::InsufficientPoints(pairs.len()));
    }
    for w in pairs.windows(2) {
        if !(w[0].0 > w[1].0) || !(w[1].0 > 0.0) {
            return Err(QuadratureError::InvalidInput(
                "epsilons must be strictly decreasing and positive".into(),
            ));
        }
    }
    let values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let increasing = values.windows(2).all(|w| w[1] >= w[0] - 1e-14 * w[0].abs().max(1.0));
    let decreasing = values.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0));
    let non_monotone = !(increasing || decreasing);
    let k = pairs.len();
    let (e1, v1) = pairs[k - 3];
    let (e2, v2) = pairs[k - 2];
    let (e3, v3) = pairs[k - 1];
    let lin = |ea: f64, va: f64, eb: f64, vb: f64| (ea * vb - eb * va) / (ea - eb);
    let y1 = lin(e1, v1, e2, v2);
    let y2 = lin(e2, v2, e3, v3);
    let p1 = e1 * e2;
    let p2 = e2 * e3;
    let limit = (p1 * y2 - p2 * y1) / (p1 - p2);
    Ok(Extrapolated { limit, non_monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    /// Independent low-tech oracle: composite midpoint rule.
    fn midpoint_oracle<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h) * h).sum()
    }

    /// Independent oracle for improper integrals: trapezoid on [a, cut].
    fn trapezoid_oracle<F: Fn(f64) -> f64>(f: F, a: f64, cut: f64, n: usize) -> f64 {
        let h = (cut - a) / n as f64;
        let mut acc = 0.5 * (f(a) + f(cut));
        for i in 1..n {
            acc += f(a + i as f64 * h);
        }
        acc * h
    }

    #[test]
    fn constant_integrates_exactly() {
        let r = integrate_adaptive(|_| 1.0, 0.0, 1.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn inverse_sqrt_with_hint() {
        let c = cfg().with_hint(-0.5);
        let r = integrate_adaptive(|t| t.powf(-0.5), 0.0, 1.0, &c).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn log_weighted_singularity_matches_midpoint_oracle() {
        let f = |t: f64| t.powf(-0.5) * (1.0 / t).ln();
        let oracle = midpoint_oracle(f, 0.0, 1.0, 1_000_000);
        assert!((oracle - 4.0).abs() < 2e-2, "midpoint sanity: {oracle}");
        let c = cfg().with_hint(-0.55);
        let r = integrate_adaptive(f, 0.0, 1.0, &c).unwrap();
        assert_relative_eq!(r.value, 4.0, max_relative = 1e-9);
    }

    #[test]
    fn improper_power_tail() {
        let r = integrate_improper(|x| x.powf(-1.5), 1.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn improper_gamma_integrand_matches_trapezoid_oracle() {
        let f = |t: f64| t.sqrt() * (-t).exp();
        let oracle = trapezoid_oracle(f, 0.0, 50.0, 2_000_000);
        let expect = std::f64::consts::PI.sqrt() / 2.0;
        assert!((oracle - expect).abs() < 1e-6, "trapezoid sanity: {oracle}");
        let r = integrate_improper(f, 0.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, expect, max_relative = 1e-9);
    }

    #[test]
    fn harmonic_tail_is_flagged_divergent() {
        let err = integrate_improper(|x| 1.0 / x, 1.0, &cfg()).unwrap_err();
        assert!(matches!(err, QuadratureError::DivergenceSuspected));
    }

    #[test]
    fn growing_tail_is_flagged_divergent() {
        let err = integrate_improper(|x| x.powf(-0.5), 1.0, &cfg()).unwrap_err();
        assert!(matches!(err, QuadratureError::DivergenceSuspected));
    }

    #[test]
    fn slow_but_convergent_tail_is_not_flagged() {
        let r = integrate_improper(|x| x.powf(-1.1), 1.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 10.0, max_relative = 1e-8);
    }

    #[test]
    fn slow_exponential_tail_matches_closed_form() {
        let r = integrate_improper(|y| (-1e-3 * y).exp(), 0.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 1000.0, max_relative = 1e-9);
        let r = integrate_improper(|y| (-0.1 * y).exp(), 0.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 10.0, max_relative = 1e-9);
    }

    #[test]
    fn tail_slower_than_f64_range_reports_nonconvergence() {
        // x^(-1.02) converges, but most of its mass lies beyond the largest
        // representable double; the partial sum plus a tail bound comes back.
        let err = integrate_improper(|x| x.powf(-1.02), 1.0, &cfg()).unwrap_err();
        match err {
            QuadratureError::NonConvergence {
                value,
                error_estimate,
                ..
            } => {
                assert!(value > 0.0 && value < 50.0);
                assert!(value + error_estimate >= 0.5 * 50.0);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_interior_value_is_an_error() {
        let err = integrate_adaptive(|t| 1.0 / (t - 0.5), 0.0, 1.0, &cfg()).unwrap_err();
        assert!(matches!(err, QuadratureError::NonFinite { .. }));
    }

    #[test]
    fn linearity_within_combined_error() {
        let c = cfg();
        let f = |t: f64| (3.0 * t).sin();
        let g = |t: f64| (-t).exp();
        let rf = integrate_adaptive(f, 0.0, 2.0, &c).unwrap();
        let rg = integrate_adaptive(g, 0.0, 2.0, &c).unwrap();
        let rc = integrate_adaptive(|t| 2.5 * f(t) - 4.0 * g(t), 0.0, 2.0, &c).unwrap();
        let budget = 2.0 * (2.5 * rf.error_estimate + 4.0 * rg.error_estimate + rc.error_estimate);
        assert!((rc.value - (2.5 * rf.value - 4.0 * rg.value)).abs() <= budget.max(1e-12));
    }

    #[test]
    fn interval_additivity() {
        let c = cfg();
        let f = |t: f64| t.exp() * (5.0 * t).cos();
        for &split in &[0.137, 0.5, 0.921] {
            let whole = integrate_adaptive(f, 0.0, 1.0, &c).unwrap();
            let l = integrate_adaptive(f, 0.0, split, &c).unwrap();
            let r = integrate_adaptive(f, split, 1.0, &c).unwrap();
            let budget =
                (whole.error_estimate + l.error_estimate + r.error_estimate).max(1e-12) * 4.0;
            assert!((whole.value - (l.value + r.value)).abs() <= budget);
        }
    }

    #[test]
    fn monotonicity_of_values() {
        let c = cfg();
        let f = |t: f64| t * t;
        let g = |t: f64| t * t + 0.5 + (2.0 * t).sin().abs();
        let rf = integrate_adaptive(f, 0.0, 3.0, &c).unwrap();
        let rg = integrate_adaptive(g, 0.0, 3.0, &c).unwrap();
        assert!(rf.value <= rg.value + rf.error_estimate + rg.error_estimate);
    }

    #[test]
    fn sphere_mc_area_and_symmetry() {
        let r = sphere_mc_integrate(|_| 1.0, 2, 4000, 7).unwrap();
        assert!(
            (r.value - 2.0 * std::f64::consts::PI).abs() <= 3.0 * r.error_estimate.max(1e-9),
            "area {} stderr {}",
            r.value,
            r.error_estimate
        );
        // Odd integrand averages to zero.
        let odd = sphere_mc_integrate(|p| p[0] * p[1].cos(), 3, 4000, 9).unwrap();
        assert!(odd.value.abs() <= 3.0 * odd.error_estimate.max(1e-12));
    }

    #[test]
    fn sphere_mc_first_coordinate_square_matches_angle_quadrature() {
        // Oracle: integral over the circle of cos^2 = pi, by 1D quadrature.
        let oracle = integrate_adaptive(
            |phi: f64| phi.cos().powi(2),
            0.0,
            2.0 * std::f64::consts::PI,
            &cfg(),
        )
        .unwrap()
        .value;
        assert_relative_eq!(oracle, std::f64::consts::PI, max_relative = 1e-12);
        let r = sphere_mc_integrate(|p| p[0] * p[0], 2, 60_000, 11).unwrap();
        assert!((r.value - oracle).abs() <= 3.0 * r.error_estimate);
    }

    #[test]
    fn sphere_mc_is_seed_deterministic() {
        let a = sphere_mc_integrate(|p| (p[0] + 0.3).abs().sqrt(), 3, 500, 1234).unwrap();
        let b = sphere_mc_integrate(|p| (p[0] + 0.3).abs().sqrt(), 3, 500, 1234).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = sphere_mc_integrate(|p| (p[0] + 0.3).abs().sqrt(), 3, 500, 1235).unwrap();
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn sphere_mc_rejects_dimension_one() {
        assert!(matches!(
            sphere_mc_integrate(|_| 1.0, 1, 10, 0),
            Err(QuadratureError::InvalidInput(_))
        ));
    }

    #[test]
    fn extrapolation_exact_linear_and_constant() {
        let lin = extrapolate_limit(&[(0.1, 1.9), (0.05, 1.95), (0.025, 1.975)]).unwrap();
        assert_relative_eq!(lin.limit, 2.0, max_relative = 1e-12);
        assert!(!lin.non_monotone);
        let cst = extrapolate_limit(&[(0.1, 3.25), (0.05, 3.25), (0.025, 3.25)]).unwrap();
        assert_relative_eq!(cst.limit, 3.25, max_relative = 1e-12);
    }

    #[test]
    fn extrapolation_quadratic_model() {
        // Oracle: the model evaluated at eps -> 0 is exactly 2.
        let model = |e: f64| 2.0 - 2.0 * e + e * e;
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&e| (e, model(e))).collect();
        let r = extrapolate_limit(&pts).unwrap();
        assert!((r.limit - 2.0).abs() <= 1e-3, "limit {}", r.limit);
    }

    #[test]
    fn extrapolation_input_validation() {
        assert!(matches!(
            extrapolate_limit(&[(0.1, 1.0), (0.05, 1.1)]),
            Err(QuadratureError::InsufficientPoints(2))
        ));
        assert!(matches!(
            extrapolate_limit(&[(0.05, 1.0), (0.1, 1.1), (0.2, 1.2)]),
            Err(QuadratureError::InvalidInput(_))
        ));
        let wiggly = extrapolate_limit(&[(0.1, 1.0), (0.05, 1.3), (0.025, 1.1)]).unwrap();
        assert!(wiggly.non_monotone);
    }

    #[test]
    fn budget_exhaustion_reports_nonconvergence() {
        let tight = QuadratureConfig {
            max_subdivisions: 2,
            rel_tol: 1e-14,
            abs_tol: 1e-16,
            ..cfg()
        };
        let err = integrate_adaptive(|t: f64| (50.0 * t).sin().abs(), 0.0, 10.0, &tight);
        assert!(matches!(err, Err(QuadratureError::NonConvergence { .. })));
    }
}
