//! `ivpi`: bounds, point estimates and sensitivity analysis for the average
//! treatment effect with a binary instrument, treatment and outcome.
//!
//! Reports are JSON on stdout; diagnostics go to stderr. Exit status is 0 on
//! success, 1 on usage or input errors, and 2 when the analysis ran but
//! produced a negative finding (falsified assumptions, or a weak instrument
//! where an estimate is required).

mod input;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ivpi_core::bounds::{
    ate_bounds, bounds_curve, check_instrumental_inequalities, AssumptionSet, Cap,
};
use ivpi_core::estimators::{ate_sensitivity, iv_estimates, Interval, StrataEffectRanges};
use ivpi_core::model::{
    fit_monotone_law, satisfies_monotone_constraints, Finding, ObservedLaw, Severity,
};
use ivpi_core::simulate::{
    run_proxy, run_two_physician, sample_replicates, ProxyScenario, TwoPhysicianScenario,
};
use serde::{Deserialize, Serialize};

use input::{read_input, Input};
use report::{
    AnalysisReport, BoundsView, EstimatesView, Inputs, LawUsed, MonotoneFitView, Precision,
    ProxyView, RangesView, SampleReport, ScenarioView, SensitivityView, SimulationReport,
    SweepView, TOOL, VERSION,
};

const PRECISION_VAR: &str = "IVPI_PRECISION";

#[derive(Debug, Parser)]
#[command(
    name = "ivpi",
    version,
    about = "ATE bounds and IV analysis for binary instrument studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test the instrumental inequalities on the observed law.
    Check(InputArgs),
    /// Sharp bounds on the ATE, with optional monotonicity and risk caps.
    Bounds(BoundsArgs),
    /// Wald ratio, intention-to-treat effects and compliance shares.
    Estimate(InputArgs),
    /// ATE interval from hypothesized always-taker and never-taker effects.
    Sensitivity(SensitivityArgs),
    /// Evaluate a preference-instrument scenario file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Counts (`z,x,y,count`), law (`z,x,y,p`), unit records (`z,x,y`) or a
    /// JSON report from this tool.
    input: PathBuf,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Assume no defiers.
    #[arg(long)]
    monotonicity: bool,
    /// Cap on P(Y=1) for never-takers if they were treated.
    #[arg(long, value_name = "EPS")]
    cap_nt: Option<f64>,
    /// Cap on P(Y=1) for always-takers if they were untreated.
    #[arg(long, value_name = "EPS")]
    cap_at: Option<f64>,
    /// Sweep the never-taker cap over `start:stop:step` or `a,b,c`.
    #[arg(long, value_name = "GRID", conflicts_with = "cap_nt")]
    sweep_nt: Option<String>,
    /// Write the sweep as TSV (`cap_nt, status, lower, upper`) to PATH; `-`
    /// prints it to stdout in place of the report.
    #[arg(long, value_name = "PATH", requires = "sweep_nt")]
    tsv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Range `lo,hi` for the always-taker average effect.
    #[arg(long, value_name = "LO,HI", required = true, allow_hyphen_values = true, value_parser = parse_range)]
    at_range: Interval,
    /// Range `lo,hi` for the never-taker average effect.
    #[arg(long, value_name = "LO,HI", required = true, allow_hyphen_values = true, value_parser = parse_range)]
    nt_range: Interval,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    /// Population quantities by exact enumeration.
    Exact,
    /// Finite-sample counts drawn from the induced law.
    Mc,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML scenario with `kind = "two_physician"` or `kind = "proxy"`.
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample size per replicate (mc mode).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: u64,
}

/// Scenario file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Scenario {
    TwoPhysician(TwoPhysicianScenario),
    Proxy(ProxyScenario),
}

/// Whether the analysis found something negative about the model.
#[derive(Debug, PartialEq, Eq)]
enum Verdict {
    Clean,
    Negative,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Verdict::Clean) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Verdict> {
    let precision = precision_from_env()?;
    match cli.command {
        Command::Check(args) => check(&args, precision),
        Command::Bounds(args) => bounds(&args, precision),
        Command::Estimate(args) => estimate(&args, precision),
        Command::Sensitivity(args) => sensitivity(&args, precision),
        Command::Simulate(args) => simulate(&args, precision),
    }
}

fn precision_from_env() -> Result<Precision> {
    match std::env::var(PRECISION_VAR) {
        Err(_) => Ok(Precision::default()),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(d) if d <= 15 => Ok(Precision(d)),
            _ => bail!("{PRECISION_VAR} must be an integer between 0 and 15, got '{v}'"),
        },
    }
}

fn parse_range(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{}' is not a number", v.trim()))
    };
    Interval::new(parse(lo)?, parse(hi)?).map_err(|e| e.to_string())
}

/// `start:stop:step` (inclusive of `stop` when it lies on the grid) or a
/// comma-separated list.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let number = |v: &str| {
        v.trim()
            .parse::<f64>()
            .with_context(|| format!("--sweep-nt: '{}' is not a number", v.trim()))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                bail!("--sweep-nt: need start <= stop and step > 0 in '{s}'");
            }
            let steps = ((stop - start) / step + 1e-9).floor() as usize;
            // Round away accumulated binary error so 0.05 + 0.05 prints as 0.1.
            Ok((0..=steps)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [list] => list.split(',').map(number).collect(),
        _ => bail!("--sweep-nt: expected start:stop:step or a comma-separated list, got '{s}'"),
    }
}

fn inputs_echo(path: &Path, input: &Input) -> Inputs {
    Inputs {
        source: path.display().to_string(),
        counts: input.counts().map(|c| *c.cells()),
        law: *input.law().table(),
        monotone_fit: None,
        assumptions: None,
        strata_effect_ranges: None,
    }
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn warn(message: String) -> Finding {
    Finding {
        severity: Severity::Warning,
        message,
    }
}

/// Findings about the observed law: instrumental inequalities (fatal) and
/// the constraints monotonicity places on it (warning).
fn law_findings(law: &ObservedLaw) -> Vec<Finding> {
    let mut findings = check_instrumental_inequalities(law).findings().to_vec();
    if !satisfies_monotone_constraints(law.table(), 1e-9) {
        findings.push(warn(
            "observed law violates p(1,y|1) >= p(1,y|0) or p(0,y|0) >= p(0,y|1) for some y; \
             it is incompatible with monotonicity as given"
                .into(),
        ));
    }
    findings
}

fn report_findings(findings: &[Finding]) {
    for f in findings {
        let level = match f.severity {
            Severity::Fatal => "falsified",
            Severity::Warning => "warning",
        };
        eprintln!("{level}: {}", f.message);
    }
}

fn has_fatal(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Fatal)
}

fn check(args: &InputArgs, precision: Precision) -> Result<Verdict> {
    let input = read_input(&args.input)?;
    let law = input.law();
    let mut report = AnalysisReport::new("check", inputs_echo(&args.input, &input));
    report.validation = law_findings(&law);
    report.estimates = Some(EstimatesView::new(&iv_estimates(&law), precision));
    report_findings(&report.validation);
    emit(&report)?;
    Ok(if has_fatal(&report.validation) {
        Verdict::Negative
    } else {
        Verdict::Clean
    })
}

fn bounds(args: &BoundsArgs, precision: Precision) -> Result<Verdict> {
    let input = read_input(&args.input.input)?;
    let law = input.law();
    let assumptions = AssumptionSet {
        monotonicity: args.monotonicity,
        cap_never_taker_treated: args.cap_nt,
        cap_always_taker_untreated: args.cap_at,
    };
    assumptions.validate()?;
    let grid = args.sweep_nt.as_deref().map(parse_grid).transpose()?;

    let mut echo = inputs_echo(&args.input.input, &input);
    echo.assumptions = Some(assumptions);
    let mut findings = law_findings(&law);

    // Monotone analyses of counts use the constrained MLE when the raw
    // frequencies fall outside the monotone model.
    let (model_law, law_used) = match input.counts() {
        Some(counts) if args.monotonicity => {
            let fit = fit_monotone_law(counts);
            if fit.pooled.is_empty() {
                (law.clone(), LawUsed::Empirical)
            } else {
                findings.push(warn(format!(
                    "monotone bounds use the maximum-likelihood law under monotonicity \
                     (cells (x,y) = {:?} pooled across arms)",
                    fit.pooled
                )));
                echo.monotone_fit = Some(MonotoneFitView::from(&fit));
                (fit.law, LawUsed::MonotoneFit)
            }
        }
        _ => (law.clone(), LawUsed::Empirical),
    };

    let mut report = AnalysisReport::new("bounds", echo);
    report.estimates = Some(EstimatesView::new(&iv_estimates(&law), precision));
    let none = AssumptionSet::none();
    report.bounds.push(BoundsView::new(
        none,
        LawUsed::Empirical,
        &ate_bounds(&law, &none)?,
        precision,
    ));
    if assumptions != none {
        report.bounds.push(BoundsView::new(
            assumptions,
            law_used,
            &ate_bounds(&model_law, &assumptions)?,
            precision,
        ));
    }
    if let Some(grid) = &grid {
        let curve = bounds_curve(&model_law, &assumptions, Cap::NeverTakerTreated, grid)?;
        report.sweep = Some(SweepView::new(assumptions, law_used, &curve, precision));
    }

    let falsified = report.bounds.iter().any(BoundsView::is_falsified)
        || report
            .sweep
            .as_ref()
            .is_some_and(|s| s.points.iter().any(|p| p.ate.is_none()));
    if falsified {
        findings.push(Finding {
            severity: Severity::Fatal,
            message: "no response-type distribution satisfying the stated assumptions \
                      reproduces the observed law"
                .into(),
        });
    }
    report.validation = findings;
    report_findings(&report.validation);

    match (&args.tsv, &report.sweep) {
        (Some(path), Some(sweep)) if path.as_os_str() == "-" => {
            print!("{}", sweep.to_tsv());
        }
        (Some(path), Some(sweep)) => {
            fs::write(path, sweep.to_tsv())
                .with_context(|| format!("cannot write {}", path.display()))?;
            emit(&report)?;
        }
        _ => emit(&report)?,
    }
    Ok(if falsified || has_fatal(&report.validation) {
        Verdict::Negative
    } else {
        Verdict::Clean
    })
}

fn estimate(args: &InputArgs, precision: Precision) -> Result<Verdict> {
    let input = read_input(&args.input)?;
    let law = input.law();
    let est = iv_estimates(&law);
    let mut report = AnalysisReport::new("estimate", inputs_echo(&args.input, &input));
    report.validation = law_findings(&law);
    if est.weak_instrument {
        report.validation.push(warn(format!(
            "weak instrument: P(X=1|Z=1) - P(X=1|Z=0) = {:e}; the Wald ratio is undefined",
            est.itt_x
        )));
    }
    report.estimates = Some(EstimatesView::new(&est, precision));
    report_findings(&report.validation);
    emit(&report)?;
    Ok(if has_fatal(&report.validation) {
        Verdict::Negative
    } else {
        Verdict::Clean
    })
}

fn sensitivity(args: &SensitivityArgs, precision: Precision) -> Result<Verdict> {
    let input = read_input(&args.input.input)?;
    let law = input.law();
    let ranges = StrataEffectRanges {
        always_taker_effect: args.at_range,
        never_taker_effect: args.nt_range,
    };
    ranges.validate()?;
    let est = iv_estimates(&law);

    let mut echo = inputs_echo(&args.input.input, &input);
    echo.strata_effect_ranges = Some(RangesView {
        always_taker: [args.at_range.lo, args.at_range.hi],
        never_taker: [args.nt_range.lo, args.nt_range.hi],
    });
    let mut report = AnalysisReport::new("sensitivity", echo);
    report.estimates = Some(EstimatesView::new(&est, precision));
    report.validation = law_findings(&law);
    if est.weak_instrument {
        report.validation.push(Finding {
            severity: Severity::Fatal,
            message: format!(
                "weak instrument: P(X=1|Z=1) - P(X=1|Z=0) = {:e}, so the complier effect \
                 is not identified and the decomposition cannot be formed",
                est.itt_x
            ),
        });
    } else {
        let s = ate_sensitivity(&law, &ranges)?;
        report.sensitivity = Some(SensitivityView::new(&s, precision));
        report.validation.push(warn(
            "the decomposition takes the Wald ratio as the complier effect, which assumes \
             monotonicity"
                .into(),
        ));
    }
    report_findings(&report.validation);
    emit(&report)?;
    Ok(if has_fatal(&report.validation) {
        Verdict::Negative
    } else {
        Verdict::Clean
    })
}

fn simulate(args: &SimulateArgs, precision: Precision) -> Result<Verdict> {
    let text = fs::read_to_string(&args.scenario)
        .with_context(|| format!("cannot read {}", args.scenario.display()))?;
    let scenario: Scenario = toml::from_str(&text)
        .with_context(|| format!("{}: invalid scenario", args.scenario.display()))?;
    let echo = serde_json::to_value(&scenario)?;

    let (report, proxy) = match &scenario {
        Scenario::TwoPhysician(s) => (run_two_physician(s)?, None),
        Scenario::Proxy(s) => {
            let r = run_proxy(s)?;
            let view = ProxyView::new(&r, precision);
            (r.report, Some(view))
        }
    };

    match args.mode {
        Mode::Exact => emit(&SimulationReport {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: "simulate".into(),
            scenario: echo,
            report: ScenarioView::new(&report, precision),
            proxy,
            law: *report.law.table(),
        })?,
        Mode::Mc => {
            let Some(n) = args.n else {
                bail!("--mode mc requires --n");
            };
            let samples = sample_replicates(
                &report.law,
                report.instrument_split,
                n,
                args.replicates as usize,
                args.seed,
            )?;
            let tables: Vec<_> = samples.iter().map(|c| *c.cells()).collect();
            emit(&SampleReport {
                tool: TOOL.into(),
                version: VERSION.into(),
                command: "simulate".into(),
                scenario: echo,
                seed: args.seed,
                n,
                instrument_split: report.instrument_split,
                counts: tables[0],
                replicates: if tables.len() > 1 { tables } else { Vec::new() },
            })?
        }
    }
    Ok(Verdict::Clean)
}
