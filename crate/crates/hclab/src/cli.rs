//! Command-line driver.
//!
//! Each subcommand loads a run configuration (file plus flag overrides),
//! executes one experiment on the driver thread, prints the JSON report to
//! stdout and optionally renders CSV/SVG/JSON files into an output
//! directory. Exit codes: 0 when every verdict is sharp-confirmed or
//! bound-only, 2 when an inequality is violated, 1 on any error. A
//! divergent constant is a result, not an error. `check-all` runs a fixed
//! battery with one summary line per check; its reports depend only on the
//! configuration and the seed, so two runs compare byte-for-byte once the
//! timestamp lines are stripped.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{self, ExperimentChoice, FunctionChoice, OutputFormat, RunConfig};
use crate::config::ConfigError;
use crate::experiments::{
    ExperimentError, adjointness_check_with, bmo_bound_experiment_with,
    commutator_bound_check_with, commutator_necessity_sweep_with, hardy_inequality_demo_with,
    sharpness_sweep_with,
};
use crate::ext::ExtReal;
use crate::kernels::{
    CurveSpec, KernelError, KernelSpec, KernelSupport, bmo_constant, cesaro_constant,
    commutator_constant, infinite_lp_constant, lp_constant, signed_bmo_factor,
};
use crate::operators::{
    OperatorError, OperatorKind, OperatorSpec, apply_commutator_with, apply_h_radial,
    apply_u_infinite_with, apply_u_with, apply_v_with,
};
use crate::report::{ExperimentReport, Verdict};
use crate::spaces::{SpaceError, lp_norm_with};
use crate::functions::TestFunction;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Operator(#[from] OperatorError),
    #[error("{0}")]
    Space(#[from] SpaceError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "hclab",
    version,
    about = "Numerical workbench for weighted Hardy averaging operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form operator constants for the configured bundle.
    Constant(RunArgs),
    /// Evaluate the configured operator at a point.
    Apply(RunArgs),
    /// Weighted Lebesgue norm of the configured function.
    Norm(RunArgs),
    /// Oscillation-space bound check over the configured witnesses.
    Bmo(RunArgs),
    /// Extremal-family ratio sweep against the sharp constant.
    Sharpness(RunArgs),
    /// Commutator necessity sweep plus the bound check.
    Commutator(RunArgs),
    /// Pairing residual against the companion operator.
    Adjoint(RunArgs),
    /// Half-line averaging inequality on the configured profile.
    HardyDemo(RunArgs),
    /// Run the canonical battery; one line per check. Only the seed,
    /// tolerance and output flags apply.
    CheckAll(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Constant(a)
            | Command::Apply(a)
            | Command::Norm(a)
            | Command::Bmo(a)
            | Command::Sharpness(a)
            | Command::Commutator(a)
            | Command::Adjoint(a)
            | Command::HardyDemo(a)
            | Command::CheckAll(a) => a,
        }
    }

    fn experiment(&self) -> Option<ExperimentChoice> {
        Some(match self {
            Command::Constant(_) => ExperimentChoice::Constant,
            Command::Apply(_) => ExperimentChoice::Apply,
            Command::Norm(_) => ExperimentChoice::Norm,
            Command::Bmo(_) => ExperimentChoice::Bmo,
            Command::Sharpness(_) => ExperimentChoice::Sharpness,
            Command::Commutator(_) => ExperimentChoice::Commutator,
            Command::Adjoint(_) => ExperimentChoice::Adjoint,
            Command::HardyDemo(_) => ExperimentChoice::HardyDemo,
            Command::CheckAll(_) => return None,
        })
    }
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Run configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory that receives the rendered reports.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report format (csv, json, svg); repeat the flag for several.
    #[arg(long = "format", value_name = "FORMAT")]
    pub formats: Vec<String>,
    /// Sampling seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quadrature relative tolerance override.
    #[arg(long = "rel-tol", value_name = "TOL")]
    pub rel_tol: Option<f64>,
}

/// Entry point behind `main`: parses the process arguments and returns
/// the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match drive(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

/// Runs the experiment a configuration file describes; the library-level
/// twin of invoking the matching subcommand. Errors map to exit code 1.
pub fn run(config_path: &Path) -> i32 {
    let inner = || -> Result<i32, CliError> {
        let text = std::fs::read_to_string(config_path).map_err(io_err(config_path))?;
        let config = config::parse(&text)?;
        finish_reports(&config, execute(&config)?)
    };
    match inner() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn drive(cli: &Cli) -> Result<i32, CliError> {
    let args = cli.command.args();
    let default_kind = cli.command.experiment().unwrap_or(ExperimentChoice::Constant);
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            config::parse(&text)?
        }
        None => RunConfig::new(default_kind),
    };
    if let Some(kind) = cli.command.experiment() {
        config.experiment = kind;
    }
    apply_flags(&mut config, args)?;
    match cli.command {
        Command::CheckAll(_) => run_battery(&config),
        _ => finish_reports(&config, execute(&config)?),
    }
}

fn apply_flags(config: &mut RunConfig, args: &RunArgs) -> Result<(), CliError> {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(tol) = args.rel_tol {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "relative tolerance must be a positive number, got {tol}"
            ))
            .into());
        }
        config.rel_tol = tol;
    }
    if let Some(dir) = &args.out {
        config.out_dir = Some(dir.display().to_string());
    }
    if !args.formats.is_empty() {
        let mut formats = Vec::new();
        for name in &args.formats {
            formats.push(OutputFormat::from_name(name).ok_or_else(|| {
                ConfigError::Invalid(format!("unknown output format '{name}'"))
            })?);
        }
        config.formats = formats;
    }
    Ok(())
}

/// Prints every report to stdout as JSON, renders the configured file
/// formats, and folds the verdicts into an exit code.
fn finish_reports(config: &RunConfig, reports: Vec<ExperimentReport>) -> Result<i32, CliError> {
    let mut code = 0;
    for report in &reports {
        print!("{}", report.to_json());
        if let Some(dir) = &config.out_dir {
            write_report(report, Path::new(dir), &config.formats, &sanitize(&report.experiment))?;
        }
        code = code.max(report.verdict.exit_code());
    }
    Ok(code)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

fn write_report(
    report: &ExperimentReport,
    dir: &Path,
    formats: &[OutputFormat],
    stem: &str,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for format in formats {
        let rendered = match format {
            OutputFormat::Json => report.to_json(),
            OutputFormat::Csv => report.to_csv(),
            OutputFormat::Svg => report.to_svg(),
        };
        let path = dir.join(format!("{stem}.{}", format.extension()));
        std::fs::write(&path, rendered).map_err(io_err(&path))?;
    }
    Ok(())
}

fn execute(config: &RunConfig) -> Result<Vec<ExperimentReport>, CliError> {
    match config.experiment {
        ExperimentChoice::Constant => Ok(vec![constant_report(config)?]),
        ExperimentChoice::Apply => Ok(vec![apply_report(config)?]),
        ExperimentChoice::Norm => Ok(vec![norm_report(config)?]),
        ExperimentChoice::Bmo => Ok(vec![bmo_report(config)?]),
        ExperimentChoice::Sharpness => {
            let plan = config.sweep_plan()?;
            Ok(vec![sharpness_sweep_with(
                &plan,
                config.operator,
                &config.sampling(),
            )?])
        }
        ExperimentChoice::Commutator => commutator_reports(config),
        ExperimentChoice::Adjoint => Ok(vec![adjoint_report(config)?]),
        ExperimentChoice::HardyDemo => Ok(vec![hardy_demo_report(config)?]),
    }
}

fn stamp(report: &mut ExperimentReport, config: &RunConfig) {
    report.rel_tol = config.rel_tol;
    report.seed = config.seed;
}

fn constant_report(config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    let n = config.dimension;
    let (alpha, p) = (config.alpha, config.p);
    let mut notes = Vec::new();
    let (kernel, curve) = match config.operator {
        OperatorKind::NdimHardy => {
            notes.push(
                "kernel and curve replaced by the canonical radial average pieces".to_string(),
            );
            (
                KernelSpec::power(n as f64, (n - 1) as f64)?,
                CurveSpec::power(1.0, 1.0)?,
            )
        }
        _ => (config.kernel.clone(), config.curve.clone()),
    };
    let (constant, source) = match config.operator {
        OperatorKind::Cesaro => (
            cesaro_constant(&kernel, &curve, n, alpha, p)?,
            "closed-form moment of the companion kernel",
        ),
        OperatorKind::InfiniteHorizon => (
            infinite_lp_constant(&kernel, &curve, n, alpha, p)?,
            "closed-form half-line kernel moment",
        ),
        OperatorKind::HardyCesaro | OperatorKind::NdimHardy => (
            lp_constant(&kernel, &curve, n, alpha, p)?,
            "closed-form weighted kernel moment",
        ),
    };
    if kernel.support() == KernelSupport::UnitInterval {
        notes.push(format!("oscillation-space mass = {}", bmo_constant(&kernel)?));
        notes.push(format!(
            "signed oscillation factor = {}",
            signed_bmo_factor(&kernel, &curve)?
        ));
        let pair = commutator_constant(&kernel, &curve, n, alpha, p)?;
        notes.push(format!(
            "commutator constants: necessity = {}, bound = {}",
            pair.necessity, pair.bound
        ));
    }
    let mut report = ExperimentReport::new("operator-constant", constant, source);
    stamp(&mut report, config);
    report.notes = notes;
    report.verdict = Verdict::BoundOnly;
    Ok(report.finish(started))
}

fn operator_spec(config: &RunConfig) -> Result<OperatorSpec, CliError> {
    let n = config.dimension;
    let spec = match config.operator {
        OperatorKind::HardyCesaro => {
            OperatorSpec::hardy_cesaro(config.kernel.clone(), config.curve.clone(), n)?
        }
        OperatorKind::Cesaro => {
            OperatorSpec::cesaro(config.kernel.clone(), config.curve.clone(), n)?
        }
        OperatorKind::InfiniteHorizon => {
            OperatorSpec::infinite_horizon(config.kernel.clone(), config.curve.clone(), n)?
        }
        OperatorKind::NdimHardy => OperatorSpec::ndim_hardy(n)?,
    };
    match &config.symbol {
        Some(choice) => {
            let symbol = choice.build(n, config.alpha, config.p)?;
            Ok(spec.with_symbol(symbol)?)
        }
        None => Ok(spec),
    }
}

fn apply_report(config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    let f = config.build_function(&config.function, "function")?;
    let spec = operator_spec(config)?;
    let sampling = config.sampling();
    let quad = &sampling.quadrature;
    let x = &config.point;
    let result = if spec.symbol().is_some() {
        apply_commutator_with(&spec, &f, x, quad)
    } else {
        match spec.kind() {
            OperatorKind::HardyCesaro => apply_u_with(&spec, &f, x, quad),
            OperatorKind::Cesaro => apply_v_with(&spec, &f, x, quad),
            OperatorKind::InfiniteHorizon => apply_u_infinite_with(&spec, &f, x, quad),
            OperatorKind::NdimHardy => apply_h_radial(&f, config.dimension, x),
        }
    };
    let (value, note) = match result {
        Ok(v) => (ExtReal::finite(v), None),
        Err(OperatorError::DivergentPointValue(why)) => {
            (ExtReal::Infinite, Some(format!("point value diverges: {why}")))
        }
        Err(e) => return Err(e.into()),
    };
    let mut report = ExperimentReport::new(
        "operator-value",
        value,
        "operator applied at the configured point",
    );
    stamp(&mut report, config);
    report.notes.push(format!("point = {:?}", config.point));
    report.notes.extend(note);
    report.verdict = Verdict::BoundOnly;
    Ok(report.finish(started))
}

fn norm_report(config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    let f = config.build_function(&config.function, "function")?;
    let weight = config.weight()?;
    let sampling = config.sampling();
    let value = match lp_norm_with(&f, &weight, config.p, &sampling) {
        Ok(v) => ExtReal::finite(v),
        Err(SpaceError::DivergentNorm) => ExtReal::Infinite,
        Err(e) => return Err(e.into()),
    };
    let mut report = ExperimentReport::new(
        "weighted-norm",
        value,
        "weighted Lebesgue norm of the configured function",
    );
    stamp(&mut report, config);
    report
        .notes
        .push(format!("p = {}, weight degree = {}", config.p, config.alpha));
    report.verdict = Verdict::BoundOnly;
    Ok(report.finish(started))
}

fn bmo_report(config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let weight = config.weight()?;
    let witnesses = witness_functions(config)?;
    let fam = config.ball_family()?;
    Ok(bmo_bound_experiment_with(
        &config.kernel,
        &config.curve,
        &weight,
        &witnesses,
        &fam,
        &config.sampling(),
    )?)
}

/// Configured witnesses, or the two exact degree-zero ones.
fn witness_functions(config: &RunConfig) -> Result<Vec<TestFunction>, CliError> {
    if config.witnesses.is_empty() {
        return Ok(vec![
            FunctionChoice::Constant { value: 1.0 }.build(config.dimension, config.alpha, config.p)?,
            FunctionChoice::SignWitness.build(config.dimension, config.alpha, config.p)?,
        ]);
    }
    config
        .witnesses
        .iter()
        .map(|c| c.build(config.dimension, config.alpha, config.p).map_err(Into::into))
        .collect()
}

fn commutator_reports(config: &RunConfig) -> Result<Vec<ExperimentReport>, CliError> {
    let plan = config.sweep_plan()?;
    let symbol = config
        .symbol
        .clone()
        .unwrap_or(FunctionChoice::LogSymbol)
        .build(config.dimension, config.alpha, config.p)?;
    let sampling = config.sampling();
    let necessity = commutator_necessity_sweep_with(&plan, &symbol, &sampling)?;
    let fam = config.ball_family()?;
    let fs: Vec<TestFunction> = config
        .witnesses
        .iter()
        .map(|c| c.build(config.dimension, config.alpha, config.p))
        .collect::<Result<_, _>>()?;
    let bound = commutator_bound_check_with(&plan, &symbol, &fam, &fs, &sampling)?;
    Ok(vec![necessity, bound])
}

fn default_operand(
    config: &RunConfig,
    choice: &Option<FunctionChoice>,
) -> Result<TestFunction, CliError> {
    choice
        .clone()
        .unwrap_or(FunctionChoice::BallIndicator { radius: 1.0 })
        .build(config.dimension, config.alpha, config.p)
        .map_err(Into::into)
}

fn adjoint_report(config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    let f = default_operand(config, &config.function)?;
    let g = default_operand(config, &config.partner)?;
    let bundle = config.bundle()?;
    let outcome = adjointness_check_with(&f, &g, &bundle, &config.sampling())?;
    let mut report = ExperimentReport::new(
        "adjointness",
        ExtReal::finite(outcome.lhs),
        "weighted pairing of the averaged operand against the partner",
    );
    stamp(&mut report, config);
    report.notes.push(format!(
        "lhs = {}, rhs = {}, residual = {:e}, allowed = {:e}",
        outcome.lhs, outcome.rhs, outcome.residual, outcome.tolerance_bound
    ));
    report.verdict = if outcome.passed() {
        Verdict::BoundOnly
    } else {
        Verdict::Violated
    };
    Ok(report.finish(started))
}

fn hardy_demo_report(config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    let f = default_operand(config, &config.function)?;
    let outcome = hardy_inequality_demo_with(&f, config.p, config.hardy_b, &config.sampling())?;
    let mut report = ExperimentReport::new(
        "hardy-averaging-demo",
        ExtReal::finite(outcome.bound_factor),
        "prefactor p/b of the half-line averaging inequality",
    );
    stamp(&mut report, config);
    report.notes.push(format!(
        "lhs = {}, rhs = {}, bound = prefactor * rhs",
        outcome.lhs, outcome.rhs
    ));
    report.verdict = if outcome.satisfied {
        Verdict::BoundOnly
    } else {
        Verdict::Violated
    };
    Ok(report.finish(started))
}

// ---------------------------------------------------------------------
// the canonical battery
// ---------------------------------------------------------------------

/// Fresh default configuration for one battery check, carrying over only
/// the numerical knobs and output settings of the outer invocation.
fn battery_config(outer: &RunConfig, kind: ExperimentChoice) -> RunConfig {
    let mut config = RunConfig::new(kind);
    config.seed = outer.seed;
    config.rel_tol = outer.rel_tol;
    config.abs_tol = outer.abs_tol;
    config
}

/// Largest gap between the exact radial mean and the equivalent kernel
/// average over a spread of radial descriptors and radii.
fn radial_agreement_report(outer: &RunConfig) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    let n = 2;
    let spec = OperatorSpec::hardy_cesaro(
        KernelSpec::power(n as f64, (n - 1) as f64)?,
        CurveSpec::power(1.0, 1.0)?,
        n,
    )?;
    let fs = [
        TestFunction::ball_indicator(n, 1.0).map_err(SpaceError::from)?,
        TestFunction::radial_power(n, -0.3).map_err(SpaceError::from)?,
        TestFunction::inner_extremal(n, 0.0, 2.0, 0.1).map_err(SpaceError::from)?,
    ];
    let sampling = battery_config(outer, ExperimentChoice::Apply).sampling();
    let mut worst: f64 = 0.0;
    for f in &fs {
        for r in [0.5, 1.0, 2.0] {
            let x = [r, 0.0];
            let exact = apply_h_radial(f, n, &x)?;
            let averaged = apply_u_with(&spec, f, &x, &sampling.quadrature)?;
            worst = worst.max((exact - averaged).abs());
        }
    }
    let mut report = ExperimentReport::new(
        "radial-agreement",
        ExtReal::finite(worst),
        "largest gap between the radial mean and the kernel average",
    );
    stamp(&mut report, outer);
    report.verdict = if worst <= 1e-9 {
        Verdict::BoundOnly
    } else {
        Verdict::Violated
    };
    Ok(report.finish(started))
}

/// Runs the fixed battery: the classical constant, both sharpness sweeps,
/// the oscillation bound, adjointness, the commutator pair, the averaging
/// demo and the radial agreement check. One line per check on stdout.
fn run_battery(outer: &RunConfig) -> Result<i32, CliError> {
    let mut code = 0;
    let mut index = 0;
    let mut finish = |name: &str,
                      result: Result<Vec<ExperimentReport>, CliError>|
     -> Result<(), CliError> {
        match result {
            Ok(reports) => {
                for report in &reports {
                    index += 1;
                    let limit = report
                        .extrapolated_limit
                        .map(|l| format!(" limit={l}"))
                        .unwrap_or_default();
                    println!(
                        "{}: {} constant={}{}",
                        report.experiment, report.verdict, report.theoretical_constant, limit
                    );
                    if let Some(dir) = &outer.out_dir {
                        let stem = format!("check-{index:02}-{}", sanitize(&report.experiment));
                        write_report(report, Path::new(dir), &outer.formats, &stem)?;
                    }
                    code = code.max(report.verdict.exit_code());
                }
            }
            Err(err) => {
                index += 1;
                println!("{name}: error {err}");
                code = code.max(1);
            }
        }
        Ok(())
    };

    finish(
        "operator-constant",
        execute(&battery_config(outer, ExperimentChoice::Constant)),
    )?;
    finish(
        "sharpness-hardy",
        execute(&battery_config(outer, ExperimentChoice::Sharpness)),
    )?;
    let mut cesaro = battery_config(outer, ExperimentChoice::Sharpness);
    cesaro.operator = OperatorKind::Cesaro;
    finish("sharpness-cesaro", execute(&cesaro))?;
    finish(
        "bmo-bound",
        execute(&battery_config(outer, ExperimentChoice::Bmo)),
    )?;
    finish(
        "adjointness",
        execute(&battery_config(outer, ExperimentChoice::Adjoint)),
    )?;
    finish(
        "commutator",
        execute(&battery_config(outer, ExperimentChoice::Commutator)),
    )?;
    finish(
        "hardy-demo",
        execute(&battery_config(outer, ExperimentChoice::HardyDemo)),
    )?;
    finish(
        "radial-agreement",
        radial_agreement_report(outer).map(|r| vec![r]),
    )?;
    Ok(code)
}
