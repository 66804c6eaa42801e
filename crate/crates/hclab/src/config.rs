//! Run configuration: a small sectioned text format describing one
//! experiment. Sections are [experiment], [kernel], [curve], [weight],
//! [sweep], [quadrature], [symbol], [function], [partner], [balls] and
//! [output]; every key is optional except experiment.kind, and numbers
//! accept exact rational literals like "p = 3/2" so sharp parameters such
//! as p/b survive entry unrounded. Unknown sections or keys are errors:
//! a typo should never silently fall back to a default.
//!
//! `serialize` writes the full canonical form (defaults included), and
//! `parse` inverts it, so parse(serialize(config)) == config.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::experiments::{ParameterBundle, SweepPlan, default_epsilons};
use crate::functions::TestFunction;
use crate::kernels::{CurveFamily, CurveSpec, KernelFamily, KernelSpec, KernelSupport};
use crate::operators::OperatorKind;
use crate::spaces::{BallFamily, SamplingConfig};
use crate::weights::{AngularProfile, HomogeneousWeight, build_weight};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key {0}")]
    Missing(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

/// Which experiment the run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentChoice {
    Constant,
    Apply,
    Norm,
    Bmo,
    Sharpness,
    Commutator,
    Adjoint,
    HardyDemo,
}

impl ExperimentChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentChoice::Constant => "constant",
            ExperimentChoice::Apply => "apply",
            ExperimentChoice::Norm => "norm",
            ExperimentChoice::Bmo => "bmo",
            ExperimentChoice::Sharpness => "sharpness",
            ExperimentChoice::Commutator => "commutator",
            ExperimentChoice::Adjoint => "adjoint",
            ExperimentChoice::HardyDemo => "hardy-demo",
        }
    }

    fn from_name(s: &str) -> Option<ExperimentChoice> {
        Some(match s {
            "constant" => ExperimentChoice::Constant,
            "apply" => ExperimentChoice::Apply,
            "norm" => ExperimentChoice::Norm,
            "bmo" => ExperimentChoice::Bmo,
            "sharpness" => ExperimentChoice::Sharpness,
            "commutator" => ExperimentChoice::Commutator,
            "adjoint" => ExperimentChoice::Adjoint,
            "hardy-demo" => ExperimentChoice::HardyDemo,
            _ => return None,
        })
    }
}

/// Descriptor for a test function; built against the bundle's n, alpha, p.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionChoice {
    OuterExtremal { eps: f64 },
    InnerExtremal { eps: f64 },
    OuterPower { exponent: f64 },
    InnerPower { exponent: f64 },
    RadialPower { exponent: f64 },
    Constant { value: f64 },
    SignWitness,
    LogSymbol,
    BallIndicator { radius: f64 },
}

impl FunctionChoice {
    pub fn build(
        &self,
        n: usize,
        alpha: f64,
        p: f64,
    ) -> Result<TestFunction, ConfigError> {
        let built = match self {
            FunctionChoice::OuterExtremal { eps } => TestFunction::outer_extremal(n, alpha, p, *eps),
            FunctionChoice::InnerExtremal { eps } => TestFunction::inner_extremal(n, alpha, p, *eps),
            FunctionChoice::OuterPower { exponent } => TestFunction::outer_power(n, *exponent),
            FunctionChoice::InnerPower { exponent } => TestFunction::inner_power(n, *exponent),
            FunctionChoice::RadialPower { exponent } => TestFunction::radial_power(n, *exponent),
            FunctionChoice::Constant { value } => TestFunction::constant(n, *value),
            FunctionChoice::SignWitness => TestFunction::sign_witness(n),
            FunctionChoice::LogSymbol => TestFunction::log_symbol(n),
            FunctionChoice::BallIndicator { radius } => TestFunction::ball_indicator(n, *radius),
        };
        built.map_err(|e| ConfigError::Invalid(format!("cannot build function: {e}")))
    }

    fn kind_name(&self) -> &'static str {
        match self {
            FunctionChoice::OuterExtremal { .. } => "outer-extremal",
            FunctionChoice::InnerExtremal { .. } => "inner-extremal",
            FunctionChoice::OuterPower { .. } => "outer-power",
            FunctionChoice::InnerPower { .. } => "inner-power",
            FunctionChoice::RadialPower { .. } => "radial-power",
            FunctionChoice::Constant { .. } => "constant",
            FunctionChoice::SignWitness => "sign-witness",
            FunctionChoice::LogSymbol => "log-symbol",
            FunctionChoice::BallIndicator { .. } => "ball-indicator",
        }
    }
}

/// Explicit ball family; absent means the dimension default.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPlan {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub include_origin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        }
    }

    pub fn extension(&self) -> &'static str {
        self.name()
    }

    pub fn from_name(s: &str) -> Option<OutputFormat> {
        Some(match s {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            "svg" => OutputFormat::Svg,
            _ => return None,
        })
    }
}

/// Everything one run needs. Parsed from text; defaults fill whatever the
/// file leaves out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentChoice,
    pub operator: OperatorKind,
    pub p: f64,
    pub dimension: usize,
    /// Weight parameter of the half-line averaging demo.
    pub hardy_b: f64,
    /// Evaluation point for the apply experiment.
    pub point: Vec<f64>,
    pub kernel: KernelSpec,
    pub curve: CurveSpec,
    pub alpha: f64,
    pub angular: AngularProfile,
    pub symbol: Option<FunctionChoice>,
    pub witnesses: Vec<FunctionChoice>,
    pub function: Option<FunctionChoice>,
    pub partner: Option<FunctionChoice>,
    pub epsilons: Vec<f64>,
    pub balls: Option<BallPlan>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub seed: u64,
    pub directions: usize,
    pub ball_samples: usize,
    pub out_dir: Option<String>,
    pub formats: Vec<OutputFormat>,
}

impl RunConfig {
    /// Minimal valid config for an experiment kind; everything defaulted.
    pub fn new(experiment: ExperimentChoice) -> RunConfig {
        let sampling = SamplingConfig::default();
        RunConfig {
            experiment,
            operator: OperatorKind::HardyCesaro,
            p: 2.0,
            dimension: 1,
            hardy_b: 1.0,
            point: vec![0.5],
            kernel: KernelSpec::constant(1.0).expect("unit kernel is valid"),
            curve: CurveSpec::power(1.0, 1.0).expect("identity curve is valid"),
            alpha: 0.0,
            angular: AngularProfile::Constant(1.0),
            symbol: None,
            witnesses: Vec::new(),
            function: None,
            partner: None,
            epsilons: default_epsilons(),
            balls: None,
            rel_tol: sampling.quadrature.rel_tol,
            abs_tol: sampling.quadrature.abs_tol,
            seed: sampling.seed,
            directions: sampling.directions,
            ball_samples: sampling.ball_samples,
            out_dir: None,
            formats: vec![OutputFormat::Json],
        }
    }

    pub fn weight(&self) -> Result<HomogeneousWeight, ConfigError> {
        build_weight(self.alpha, self.angular.clone(), self.dimension)
            .map_err(|e| ConfigError::Invalid(format!("weight does not validate: {e}")))
    }

    pub fn bundle(&self) -> Result<ParameterBundle, ConfigError> {
        Ok(ParameterBundle {
            kernel: self.kernel.clone(),
            curve: self.curve.clone(),
            weight: self.weight()?,
            dimension: self.dimension,
            p: self.p,
        })
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan, ConfigError> {
        SweepPlan::new(self.bundle()?, self.epsilons.clone())
            .map_err(|e| ConfigError::Invalid(format!("sweep plan does not validate: {e}")))
    }

    pub fn sampling(&self) -> SamplingConfig {
        let mut cfg = SamplingConfig::default();
        cfg.quadrature.rel_tol = self.rel_tol;
        cfg.quadrature.abs_tol = self.abs_tol;
        cfg.quadrature.rng_seed = self.seed;
        cfg.seed = self.seed;
        cfg.directions = self.directions;
        cfg.ball_samples = self.ball_samples;
        cfg
    }

    pub fn ball_family(&self) -> Result<BallFamily, ConfigError> {
        match &self.balls {
            None => Ok(BallFamily::default_for_dimension(self.dimension)),
            Some(plan) => BallFamily::new(
                self.dimension,
                vec![vec![0.0; self.dimension]],
                plan.r_min,
                plan.r_max,
                plan.count,
                plan.include_origin,
            )
            .map_err(|e| ConfigError::Invalid(format!("ball family does not validate: {e}"))),
        }
    }

    pub fn build_function(
        &self,
        choice: &Option<FunctionChoice>,
        what: &str,
    ) -> Result<TestFunction, ConfigError> {
        choice
            .as_ref()
            .ok_or_else(|| ConfigError::Missing(format!("{what}.kind")))?
            .build(self.dimension, self.alpha, self.p)
    }
}

fn operator_name(kind: OperatorKind) -> &'static str {
    match kind {
        OperatorKind::HardyCesaro => "hardy-cesaro",
        OperatorKind::Cesaro => "cesaro",
        OperatorKind::InfiniteHorizon => "infinite-horizon",
        OperatorKind::NdimHardy => "ndim-hardy",
    }
}

fn operator_from_name(s: &str) -> Option<OperatorKind> {
    Some(match s {
        "hardy-cesaro" => OperatorKind::HardyCesaro,
        "cesaro" => OperatorKind::Cesaro,
        "infinite-horizon" => OperatorKind::InfiniteHorizon,
        "ndim-hardy" => OperatorKind::NdimHardy,
        _ => return None,
    })
}

// ---------------------------------------------------------------------
// number formatting and parsing
// ---------------------------------------------------------------------

/// Accepts plain decimals, scientific notation, and exact rationals
/// "a/b"; both parts of a rational may themselves be decimals.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in rational '{s}'"))?;
        let den: f64 = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in rational '{s}'"))?;
        if den == 0.0 {
            return Err(format!("zero denominator in rational '{s}'"));
        }
        num / den
    } else {
        s.parse()
            .map_err(|_| format!("'{s}' is not a number"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn fmt_f64(v: f64) -> String {
    // Shortest exact decimal; exponent form keeps tolerances readable.
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn fmt_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(", ")
}

// ---------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------

struct KeyValue {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    line: usize,
    name: String,
    entries: Vec<KeyValue>,
}

fn tokenize(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?
                .trim();
            if name.is_empty() {
                return Err(parse_err(line_no, "empty section name"));
            }
            sections.push(Section {
                line: line_no,
                name: name.to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected 'key = value', got '{line}'")))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| parse_err(line_no, "key outside any [section]"))?;
        section.entries.push(KeyValue {
            line: line_no,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

/// One section's entries with strict key accounting: every key must be
/// consumed exactly once, leftovers are errors.
struct Keys {
    section: String,
    entries: Vec<KeyValue>,
    used: BTreeSet<usize>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Result<Option<&str>, ConfigError> {
        let mut found = None;
        for (i, kv) in self.entries.iter().enumerate() {
            if kv.key == key {
                if found.is_some() {
                    return Err(parse_err(
                        kv.line,
                        format!("duplicate key '{key}' in [{}]", self.section),
                    ));
                }
                found = Some(i);
            }
        }
        Ok(match found {
            Some(i) => {
                self.used.insert(i);
                Some(self.entries[i].value.as_str())
            }
            None => None,
        })
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let line = self.line_of(key);
        match self.take(key)? {
            Some(v) => parse_number(v)
                .map(Some)
                .map_err(|m| parse_err(line, m)),
            None => Ok(None),
        }
    }

    fn integer(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        let line = self.line_of(key);
        match self.take(key)? {
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| parse_err(line, format!("'{v}' is not a nonnegative integer"))),
            None => Ok(None),
        }
    }

    fn unsigned(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        let line = self.line_of(key);
        match self.take(key)? {
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| parse_err(line, format!("'{v}' is not an unsigned integer"))),
            None => Ok(None),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        let line = self.line_of(key);
        match self.take(key)? {
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(v) => Err(parse_err(line, format!("'{v}' is not true/false"))),
            None => Ok(None),
        }
    }

    fn number_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let line = self.line_of(key);
        match self.take(key)? {
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    out.push(parse_number(part).map_err(|m| parse_err(line, m))?);
                }
                Ok(Some(out))
            }
            None => Ok(None),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|kv| kv.key == key)
            .map(|kv| kv.line)
            .unwrap_or(0)
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (i, kv) in self.entries.iter().enumerate() {
            if !self.used.contains(&i) {
                return Err(parse_err(
                    kv.line,
                    format!("unknown key '{}' in [{}]", kv.key, self.section),
                ));
            }
        }
        Ok(())
    }
}

fn function_choice(keys: &mut Keys, section: &str) -> Result<Option<FunctionChoice>, ConfigError> {
    let line = keys.line_of("kind");
    let Some(kind) = keys.take("kind")? else {
        return Ok(None);
    };
    let kind = kind.to_string();
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| ConfigError::Missing(format!("{section}.{key}")))
    };
    let choice = match kind.as_str() {
        "outer-extremal" => FunctionChoice::OuterExtremal {
            eps: need(keys.number("eps")?, "eps")?,
        },
        "inner-extremal" => FunctionChoice::InnerExtremal {
            eps: need(keys.number("eps")?, "eps")?,
        },
        "outer-power" => FunctionChoice::OuterPower {
            exponent: need(keys.number("exponent")?, "exponent")?,
        },
        "inner-power" => FunctionChoice::InnerPower {
            exponent: need(keys.number("exponent")?, "exponent")?,
        },
        "radial-power" => FunctionChoice::RadialPower {
            exponent: need(keys.number("exponent")?, "exponent")?,
        },
        "constant" => FunctionChoice::Constant {
            value: need(keys.number("value")?, "value")?,
        },
        "sign-witness" => FunctionChoice::SignWitness,
        "log-symbol" => FunctionChoice::LogSymbol,
        "ball-indicator" => FunctionChoice::BallIndicator {
            radius: need(keys.number("radius")?, "radius")?,
        },
        other => {
            return Err(parse_err(
                line,
                format!("unknown function kind '{other}' in [{section}]"),
            ));
        }
    };
    Ok(Some(choice))
}

fn witness_list(value: &str, line: usize) -> Result<Vec<FunctionChoice>, ConfigError> {
    // Compact inline form: "sign-witness, ball-indicator:1, constant:2".
    let mut out = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        let (kind, arg) = match part.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (part, None),
        };
        let arg_num = |what: &str| -> Result<f64, ConfigError> {
            let raw = arg.ok_or_else(|| {
                parse_err(line, format!("witness '{kind}' needs ':{what}'"))
            })?;
            parse_number(raw).map_err(|m| parse_err(line, m))
        };
        out.push(match kind {
            "sign-witness" => FunctionChoice::SignWitness,
            "log-symbol" => FunctionChoice::LogSymbol,
            "constant" => FunctionChoice::Constant {
                value: arg_num("value")?,
            },
            "ball-indicator" => FunctionChoice::BallIndicator {
                radius: arg_num("radius")?,
            },
            "radial-power" => FunctionChoice::RadialPower {
                exponent: arg_num("exponent")?,
            },
            other => {
                return Err(parse_err(line, format!("unknown witness kind '{other}'")));
            }
        });
    }
    Ok(out)
}

fn witness_entry(choice: &FunctionChoice) -> String {
    match choice {
        FunctionChoice::SignWitness => "sign-witness".into(),
        FunctionChoice::LogSymbol => "log-symbol".into(),
        FunctionChoice::Constant { value } => format!("constant:{}", fmt_f64(*value)),
        FunctionChoice::BallIndicator { radius } => {
            format!("ball-indicator:{}", fmt_f64(*radius))
        }
        FunctionChoice::RadialPower { exponent } => {
            format!("radial-power:{}", fmt_f64(*exponent))
        }
        other => format!("{}:unsupported", other.kind_name()),
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let sections = tokenize(text)?;
    let mut experiment: Option<ExperimentChoice> = None;
    let mut config = RunConfig::new(ExperimentChoice::Constant);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut point_given = false;

    for section in sections {
        if !seen.insert(section.name.clone()) {
            return Err(parse_err(
                section.line,
                format!("duplicate section [{}]", section.name),
            ));
        }
        let header_line = section.line;
        let mut keys = Keys {
            section: section.name.clone(),
            entries: section.entries,
            used: BTreeSet::new(),
        };
        match section.name.as_str() {
            "experiment" => {
                let kind_line = keys.line_of("kind");
                let kind = keys
                    .take("kind")?
                    .ok_or_else(|| ConfigError::Missing("experiment.kind".into()))?;
                experiment = Some(ExperimentChoice::from_name(kind).ok_or_else(|| {
                    parse_err(kind_line, format!("unknown experiment kind '{kind}'"))
                })?);
                let op_line = keys.line_of("operator");
                if let Some(op) = keys.take("operator")? {
                    config.operator = operator_from_name(op).ok_or_else(|| {
                        parse_err(op_line, format!("unknown operator '{op}'"))
                    })?;
                }
                if let Some(p) = keys.number("p")? {
                    config.p = p;
                }
                if let Some(n) = keys.integer("dimension")? {
                    config.dimension = n;
                }
                if let Some(b) = keys.number("b")? {
                    config.hardy_b = b;
                }
                if let Some(point) = keys.number_list("point")? {
                    config.point = point;
                    point_given = true;
                }
                let witness_line = keys.line_of("witnesses");
                if let Some(w) = keys.take("witnesses")? {
                    let w = w.to_string();
                    config.witnesses = witness_list(&w, witness_line)?;
                }
            }
            "kernel" => {
                let family_line = keys.line_of("family");
                let family = keys.take("family")?.unwrap_or("constant").to_string();
                let kernel = match family.as_str() {
                    "constant" => KernelSpec::constant(
                        keys.number("level")?.unwrap_or(1.0),
                    ),
                    "power" => KernelSpec::power(
                        keys.number("coef")?.unwrap_or(1.0),
                        keys.number("exponent")?.unwrap_or(0.0),
                    ),
                    "riemann-liouville" => KernelSpec::riemann_liouville(
                        keys.number("order")?
                            .ok_or_else(|| ConfigError::Missing("kernel.order".into()))?,
                    ),
                    "power-exp" => KernelSpec::power_exp(
                        keys.number("coef")?.unwrap_or(1.0),
                        keys.number("exponent")?.unwrap_or(0.0),
                        keys.number("rate")?
                            .ok_or_else(|| ConfigError::Missing("kernel.rate".into()))?,
                    ),
                    "tabulated" => KernelSpec::tabulated(
                        keys.number_list("values")?
                            .ok_or_else(|| ConfigError::Missing("kernel.values".into()))?,
                    ),
                    other => {
                        return Err(parse_err(
                            family_line.max(header_line),
                            format!("unknown kernel family '{other}'"),
                        ));
                    }
                }
                .map_err(|e| ConfigError::Invalid(format!("kernel does not validate: {e}")))?;
                let support_line = keys.line_of("support");
                config.kernel = match keys.take("support")? {
                    None | Some("unit") => kernel,
                    Some("half-line") => kernel.on_half_line().map_err(|e| {
                        ConfigError::Invalid(format!("kernel support: {e}"))
                    })?,
                    Some(other) => {
                        return Err(parse_err(
                            support_line,
                            format!("unknown kernel support '{other}'"),
                        ));
                    }
                };
            }
            "curve" => {
                let family_line = keys.line_of("family");
                let family = keys.take("family")?.unwrap_or("power").to_string();
                config.curve = match family.as_str() {
                    "power" => CurveSpec::power(
                        keys.number("sign")?.unwrap_or(1.0),
                        keys.number("exponent")?.unwrap_or(1.0),
                    )
                    .map_err(|e| ConfigError::Invalid(format!("curve does not validate: {e}")))?,
                    "reciprocal" => CurveSpec::reciprocal(),
                    "sign-changing" => CurveSpec::sign_changing(
                        keys.number("exponent")?.unwrap_or(1.0),
                        keys.number("first-sign")?.unwrap_or(1.0),
                        keys.number_list("flips")?
                            .ok_or_else(|| ConfigError::Missing("curve.flips".into()))?,
                    )
                    .map_err(|e| ConfigError::Invalid(format!("curve does not validate: {e}")))?,
                    other => {
                        return Err(parse_err(
                            family_line.max(header_line),
                            format!("unknown curve family '{other}'"),
                        ));
                    }
                };
            }
            "weight" => {
                if let Some(alpha) = keys.number("alpha")? {
                    config.alpha = alpha;
                }
                let profile_line = keys.line_of("profile");
                match keys.take("profile")? {
                    None | Some("constant") => {
                        config.angular =
                            AngularProfile::Constant(keys.number("level")?.unwrap_or(1.0));
                    }
                    Some("axis-power") => {
                        config.angular = AngularProfile::AxisPower;
                    }
                    Some(other) => {
                        return Err(parse_err(
                            profile_line,
                            format!("unknown weight profile '{other}'"),
                        ));
                    }
                }
            }
            "sweep" => {
                if let Some(eps) = keys.number_list("epsilons")? {
                    config.epsilons = eps;
                }
            }
            "quadrature" => {
                if let Some(v) = keys.number("rel-tol")? {
                    config.rel_tol = v;
                }
                if let Some(v) = keys.number("abs-tol")? {
                    config.abs_tol = v;
                }
                if let Some(v) = keys.unsigned("seed")? {
                    config.seed = v;
                }
                if let Some(v) = keys.integer("directions")? {
                    config.directions = v;
                }
                if let Some(v) = keys.integer("ball-samples")? {
                    config.ball_samples = v;
                }
            }
            "symbol" => {
                config.symbol = function_choice(&mut keys, "symbol")?;
            }
            "function" => {
                config.function = function_choice(&mut keys, "function")?;
            }
            "partner" => {
                config.partner = function_choice(&mut keys, "partner")?;
            }
            "balls" => {
                config.balls = Some(BallPlan {
                    r_min: keys.number("r-min")?.unwrap_or(0.25),
                    r_max: keys.number("r-max")?.unwrap_or(4.0),
                    count: keys.integer("count")?.unwrap_or(9),
                    include_origin: keys.boolean("include-origin")?.unwrap_or(true),
                });
            }
            "output" => {
                if let Some(dir) = keys.take("dir")? {
                    config.out_dir = Some(dir.to_string());
                }
                let formats_line = keys.line_of("formats");
                if let Some(list) = keys.take("formats")? {
                    let mut formats = Vec::new();
                    for part in list.split(',') {
                        let name = part.trim();
                        formats.push(OutputFormat::from_name(name).ok_or_else(|| {
                            parse_err(formats_line, format!("unknown format '{name}'"))
                        })?);
                    }
                    if formats.is_empty() {
                        return Err(parse_err(formats_line, "empty format list"));
                    }
                    config.formats = formats;
                }
            }
            other => {
                return Err(parse_err(header_line, format!("unknown section [{other}]")));
            }
        }
        keys.finish()?;
    }

    config.experiment =
        experiment.ok_or_else(|| ConfigError::Missing("experiment.kind".into()))?;
    if !point_given && config.dimension >= 1 {
        // The default evaluation point follows the dimension.
        config.point = vec![0.5; config.dimension];
    }
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    if config.dimension < 1 {
        return Err(ConfigError::Invalid("dimension must be at least 1".into()));
    }
    if !config.p.is_finite() || config.p < 1.0 {
        return Err(ConfigError::Invalid(format!(
            "p must satisfy 1 <= p < infinity, got {}",
            config.p
        )));
    }
    if config.point.len() != config.dimension {
        return Err(ConfigError::Invalid(format!(
            "point has {} coordinates in dimension {}",
            config.point.len(),
            config.dimension
        )));
    }
    if !(config.rel_tol > 0.0) || !(config.abs_tol > 0.0) {
        return Err(ConfigError::Invalid(
            "tolerances must be positive".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------

fn push_function(out: &mut String, header: &str, choice: &FunctionChoice) {
    out.push_str(&format!("\n[{header}]\nkind = {}\n", choice.kind_name()));
    match choice {
        FunctionChoice::OuterExtremal { eps } | FunctionChoice::InnerExtremal { eps } => {
            out.push_str(&format!("eps = {}\n", fmt_f64(*eps)));
        }
        FunctionChoice::OuterPower { exponent }
        | FunctionChoice::InnerPower { exponent }
        | FunctionChoice::RadialPower { exponent } => {
            out.push_str(&format!("exponent = {}\n", fmt_f64(*exponent)));
        }
        FunctionChoice::Constant { value } => {
            out.push_str(&format!("value = {}\n", fmt_f64(*value)));
        }
        FunctionChoice::BallIndicator { radius } => {
            out.push_str(&format!("radius = {}\n", fmt_f64(*radius)));
        }
        FunctionChoice::SignWitness | FunctionChoice::LogSymbol => {}
    }
}

/// Canonical full text form; `parse` inverts it.
pub fn serialize(config: &RunConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "[experiment]\nkind = {}\noperator = {}\np = {}\ndimension = {}\nb = {}\npoint = {}\n",
        config.experiment.name(),
        operator_name(config.operator),
        fmt_f64(config.p),
        config.dimension,
        fmt_f64(config.hardy_b),
        fmt_list(&config.point),
    ));
    if !config.witnesses.is_empty() {
        let parts: Vec<String> = config.witnesses.iter().map(witness_entry).collect();
        out.push_str(&format!("witnesses = {}\n", parts.join(", ")));
    }

    out.push_str("\n[kernel]\n");
    match config.kernel.family() {
        KernelFamily::Constant { level } => {
            out.push_str(&format!("family = constant\nlevel = {}\n", fmt_f64(*level)));
        }
        KernelFamily::Power { coef, exponent } => {
            out.push_str(&format!(
                "family = power\ncoef = {}\nexponent = {}\n",
                fmt_f64(*coef),
                fmt_f64(*exponent)
            ));
        }
        KernelFamily::RiemannLiouville { order } => {
            out.push_str(&format!(
                "family = riemann-liouville\norder = {}\n",
                fmt_f64(*order)
            ));
        }
        KernelFamily::PowerRiemannLiouville { .. } => {
            // Not reachable from parse; serialized configs never hold it.
            out.push_str("family = constant\nlevel = 1\n");
        }
        KernelFamily::PowerExp {
            coef,
            exponent,
            rate,
        } => {
            out.push_str(&format!(
                "family = power-exp\ncoef = {}\nexponent = {}\nrate = {}\n",
                fmt_f64(*coef),
                fmt_f64(*exponent),
                fmt_f64(*rate)
            ));
        }
        KernelFamily::Tabulated { values } => {
            out.push_str(&format!("family = tabulated\nvalues = {}\n", fmt_list(values)));
        }
    }
    if config.kernel.support() == KernelSupport::HalfLine {
        out.push_str("support = half-line\n");
    }

    out.push_str("\n[curve]\n");
    match config.curve.family() {
        CurveFamily::Power { sign, exponent } => {
            out.push_str(&format!(
                "family = power\nsign = {}\nexponent = {}\n",
                fmt_f64(*sign),
                fmt_f64(*exponent)
            ));
        }
        CurveFamily::Reciprocal => out.push_str("family = reciprocal\n"),
        CurveFamily::SignChanging {
            exponent,
            first_sign,
            flips,
        } => {
            out.push_str(&format!(
                "family = sign-changing\nexponent = {}\nfirst-sign = {}\nflips = {}\n",
                fmt_f64(*exponent),
                fmt_f64(*first_sign),
                fmt_list(flips)
            ));
        }
    }

    out.push_str(&format!("\n[weight]\nalpha = {}\n", fmt_f64(config.alpha)));
    match &config.angular {
        AngularProfile::Constant(level) => {
            out.push_str(&format!("profile = constant\nlevel = {}\n", fmt_f64(*level)));
        }
        AngularProfile::AxisPower => out.push_str("profile = axis-power\n"),
        // Zonal and blend profiles are library-level; configs never hold
        // them because parse cannot produce them.
        _ => out.push_str("profile = constant\nlevel = 1\n"),
    }

    out.push_str(&format!("\n[sweep]\nepsilons = {}\n", fmt_list(&config.epsilons)));

    out.push_str(&format!(
        "\n[quadrature]\nrel-tol = {}\nabs-tol = {}\nseed = {}\ndirections = {}\nball-samples = {}\n",
        fmt_f64(config.rel_tol),
        fmt_f64(config.abs_tol),
        config.seed,
        config.directions,
        config.ball_samples,
    ));

    if let Some(symbol) = &config.symbol {
        push_function(&mut out, "symbol", symbol);
    }
    if let Some(function) = &config.function {
        push_function(&mut out, "function", function);
    }
    if let Some(partner) = &config.partner {
        push_function(&mut out, "partner", partner);
    }
    if let Some(balls) = &config.balls {
        out.push_str(&format!(
            "\n[balls]\nr-min = {}\nr-max = {}\ncount = {}\ninclude-origin = {}\n",
            fmt_f64(balls.r_min),
            fmt_f64(balls.r_max),
            balls.count,
            balls.include_origin,
        ));
    }

    out.push_str("\n[output]\n");
    if let Some(dir) = &config.out_dir {
        out.push_str(&format!("dir = {dir}\n"));
    }
    let parts: Vec<&str> = config.formats.iter().map(|f| f.name()).collect();
    out.push_str(&format!("formats = {}\n", parts.join(", ")));
    out
}
