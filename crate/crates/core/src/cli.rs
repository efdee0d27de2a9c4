//! Command-line front end. [`execute`] runs one command against arbitrary
//! writers so it can be tested in-process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::instance::{InstanceFile, NamedAgent};
use crate::multi_agent::{allocate, Allocation, AllocationProblem, Resolution};
use crate::oracle::{brute_force_allocate, brute_force_single_with, check_ic_ir};
use crate::scheduler::{Assignment, InspectionSchedule};
use crate::single_agent::{solve_single, sweep_parameter, BetaCurve, SweepParam};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "safecontract",
    version,
    about = "Linear contracts with random safety inspections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct OutputOpts {
    /// Significant digits in CSV output, decimals in key=value output.
    #[arg(long, default_value_t = 6)]
    precision: usize,
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ResolutionOpts {
    /// Grid step for the allocation program.
    #[arg(long, conflicts_with = "epsilon")]
    delta: Option<f64>,
    /// Relative accuracy; converted to a grid step.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl ResolutionOpts {
    fn resolution(&self) -> Resolution {
        match (self.delta, self.epsilon) {
            (_, Some(e)) => Resolution::Epsilon(e),
            (Some(d), None) => Resolution::Delta(d),
            (None, None) => Resolution::Delta(0.01),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal contract for each agent on its own.
    Solve {
        file: PathBuf,
        #[arg(long)]
        agent: Option<String>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Minimal inspection probability as a function of the payment share (CSV).
    BetaCurve {
        file: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Optimal contract over a grid of one parameter (CSV).
    Sweep {
        file: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Split the inspection budget across all agents.
    Allocate {
        file: PathBuf,
        #[command(flatten)]
        resolution: ResolutionOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Inspector schedule realizing given inspection probabilities (CSV).
    Schedule {
        file: PathBuf,
        /// Use the effective inspection probabilities of `allocate`.
        #[arg(long, conflicts_with = "targets", required_unless_present = "targets")]
        from_allocation: bool,
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<f64>>,
        #[command(flatten)]
        resolution: ResolutionOpts,
        /// Draw this many assignments and report empirical marginals.
        #[arg(long, default_value_t = 0)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Cross-check every solver against brute force on this instance.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
}

/// Runs one command and returns the process exit code: 0 success,
/// 1 infeasible instance, 2 invalid input, 3 internal error or failed
/// verification.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, out, err, false)
}

/// [`execute`] with optional ANSI styling of error messages.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = if color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let label = if color {
                "\x1b[1;31merror:\x1b[0m"
            } else {
                "error:"
            };
            let _ = writeln!(err, "{label} {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_invalid_input() {
        EXIT_INVALID
    } else if e.is_infeasible() {
        EXIT_INFEASIBLE
    } else {
        EXIT_INTERNAL
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Solve {
            file,
            agent,
            output,
        } => {
            let inst = InstanceFile::load(&file)?;
            let agents = match agent {
                Some(name) => vec![inst.find(&name)?],
                None => inst.agents()?,
            };
            let mut text = String::new();
            let p = output.precision;
            for a in &agents {
                let s = solve_single(&a.spec).map_err(|e| with_agent(&a.name, e))?;
                let _ = writeln!(
                    text,
                    "agent={} gamma={:.p$} beta={:.p$} action={} utility={:.p$}",
                    a.name,
                    s.contract.gamma,
                    s.contract.beta,
                    s.action + 1,
                    s.utility
                );
            }
            emit(&text, &output, out)
        }
        Command::BetaCurve {
            file,
            agent,
            samples,
            output,
        } => {
            let a = InstanceFile::load(&file)?.find(&agent)?;
            if samples < 2 {
                return Err(Error::InvalidParameter(
                    "--samples must be at least 2".into(),
                ));
            }
            let curve = BetaCurve::new(&a.spec).map_err(|e| with_agent(&a.name, e))?;
            let g0 = curve.gamma_ir();
            let mut text = String::from("gamma,beta\n");
            for k in 0..samples {
                let g = g0 + (1.0 - g0) * k as f64 / (samples - 1) as f64;
                let b = curve.beta_at(g)?;
                let _ = writeln!(
                    text,
                    "{},{}",
                    sig(g, output.precision),
                    sig(b, output.precision)
                );
            }
            emit(&text, &output, out)
        }
        Command::Sweep {
            file,
            agent,
            param,
            from,
            to,
            steps,
            output,
        } => {
            let a = InstanceFile::load(&file)?.find(&agent)?;
            if steps == 0 || !from.is_finite() || !to.is_finite() {
                return Err(Error::InvalidParameter(
                    "sweep needs finite bounds and --steps >= 1".into(),
                ));
            }
            let grid: Vec<f64> = (0..steps)
                .map(|k| {
                    if steps == 1 {
                        from
                    } else {
                        from + (to - from) * k as f64 / (steps - 1) as f64
                    }
                })
                .collect();
            let rows = sweep_parameter(&a.spec, param, &grid);
            let p = output.precision;
            let mut text = String::from("value,gamma_star,beta_star,utility\n");
            for row in rows {
                match row.result {
                    Ok(s) => {
                        let _ = writeln!(
                            text,
                            "{},{},{},{}",
                            sig(row.value, p),
                            sig(s.contract.gamma, p),
                            sig(s.contract.beta, p),
                            sig(s.utility, p)
                        );
                    }
                    Err(e) if e.is_infeasible() => {
                        let _ = writeln!(err, "warning: {param}={}: {e}", row.value);
                        let _ = writeln!(text, "{},,,", sig(row.value, p));
                    }
                    Err(e) => {
                        return Err(Error::InvalidParameter(format!(
                            "{param}={}: {e}",
                            row.value
                        )))
                    }
                }
            }
            emit(&text, &output, out)
        }
        Command::Allocate {
            file,
            resolution,
            output,
        } => {
            let inst = InstanceFile::load(&file)?;
            let agents = inst.agents()?;
            let alloc = run_allocation(&agents, inst.budget, resolution.resolution())?;
            let p = output.precision;
            let mut text = String::new();
            for (a, r) in agents.iter().zip(&alloc.agents) {
                let _ = writeln!(
                    text,
                    "agent={} beta_bar={:.p$} gamma={:.p$} beta={:.p$} action={} utility={:.p$}",
                    a.name,
                    r.beta_bar,
                    r.contract.gamma,
                    r.contract.beta,
                    r.action + 1,
                    r.utility
                );
            }
            let _ = writeln!(
                text,
                "total={:.p$} gap_bound={:.p$} delta={}",
                alloc.total_utility,
                alloc.gap_bound,
                sig(alloc.delta, p)
            );
            emit(&text, &output, out)
        }
        Command::Schedule {
            file,
            from_allocation,
            targets,
            resolution,
            samples,
            seed,
            output,
        } => {
            let inst = InstanceFile::load(&file)?;
            let agents = inst.agents()?;
            let targets = if from_allocation {
                let alloc = run_allocation(&agents, inst.budget, resolution.resolution())?;
                fit_to_budget(alloc.effective_betas(), inst.budget)
            } else {
                let t = targets.unwrap_or_default();
                if t.len() != agents.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} targets given for {} agents",
                        t.len(),
                        agents.len()
                    )));
                }
                t
            };
            let schedule = InspectionSchedule::new(&targets, inst.budget)?;
            let exact = schedule.exact_marginals();
            let empirical = (samples > 0).then(|| empirical_marginals(&schedule, samples, seed));
            let p = output.precision;
            let mut text = String::from("agent,target,exact");
            text.push_str(if empirical.is_some() {
                ",empirical\n"
            } else {
                "\n"
            });
            for (k, a) in agents.iter().enumerate() {
                let _ = write!(
                    text,
                    "{},{},{}",
                    a.name,
                    sig(targets[k], p),
                    sig(exact[k], p)
                );
                match &empirical {
                    Some(e) => {
                        let _ = writeln!(text, ",{}", sig(e[k], p));
                    }
                    None => text.push('\n'),
                }
            }
            emit(&text, &output, out)
        }
        Command::Verify { file, grid_step } => {
            let inst = InstanceFile::load(&file)?;
            let agents = inst.agents()?;
            let failures = verify(&agents, inst.budget, grid_step, out)?;
            if failures == 0 {
                let _ = writeln!(out, "all checks passed");
                Ok(EXIT_OK)
            } else {
                let _ = writeln!(err, "{failures} check(s) failed");
                Ok(EXIT_INTERNAL)
            }
        }
    }
}

fn with_agent(name: &str, e: Error) -> Error {
    Error::Agent {
        name: name.to_string(),
        source: Box::new(e),
    }
}

fn run_allocation(
    agents: &[NamedAgent],
    budget: u32,
    resolution: Resolution,
) -> Result<Allocation> {
    for a in agents {
        a.spec
            .check_safety_feasible()
            .map_err(|e| with_agent(&a.name, e))?;
    }
    let problem = AllocationProblem::new(
        agents.iter().map(|a| a.spec.clone()).collect(),
        budget,
        resolution,
    );
    allocate(&problem)
}

// Effective inspection probabilities can overshoot the budget by rounding in
// the grid; scale back when the excess is pure noise.
fn fit_to_budget(mut targets: Vec<f64>, budget: u32) -> Vec<f64> {
    let total: f64 = targets.iter().sum();
    let b = budget as f64;
    if total > b && total <= b + 1e-9 {
        for t in targets.iter_mut() {
            *t *= b / total;
        }
    }
    targets
}

fn empirical_marginals(schedule: &InspectionSchedule, samples: u64, seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; schedule.targets().len()];
    for _ in 0..samples {
        for a in schedule.sample_with(&mut rng) {
            if let Assignment::Agent(l) = a {
                counts[l] += 1;
            }
        }
    }
    counts.iter().map(|&c| c as f64 / samples as f64).collect()
}

fn verify(agents: &[NamedAgent], budget: u32, step: f64, out: &mut dyn Write) -> Result<usize> {
    let mut failures = 0;
    let mut report = |ok: Option<bool>, what: String| {
        let tag = match ok {
            Some(true) => "ok  ",
            Some(false) => "FAIL",
            None => "skip",
        };
        let _ = writeln!(out, "{tag} {what}");
        if ok == Some(false) {
            failures += 1;
        }
    };

    for a in agents {
        let s = solve_single(&a.spec).map_err(|e| with_agent(&a.name, e))?;
        let (c, u) =
            brute_force_single_with(&a.spec, step, &[s.contract.gamma], &[s.contract.beta])?;
        report(
            Some(s.utility >= u - 1e-9),
            format!(
                "{}: solver utility {:.9} vs grid best {:.9} at gamma={} beta={}",
                a.name, s.utility, u, c.gamma, c.beta
            ),
        );
        report(
            Some(check_ic_ir(&a.spec, s.contract, s.action, true)),
            format!(
                "{}: incentive and participation at gamma={} beta={} action={}",
                a.name,
                s.contract.gamma,
                s.contract.beta,
                s.action + 1
            ),
        );

        let curve = BetaCurve::new(&a.spec).map_err(|e| with_agent(&a.name, e))?;
        let g0 = curve.gamma_ir();
        let mut prev = (g0, curve.beta_at(g0)?);
        let mut worst: Option<(f64, f64)> = None;
        for k in 1..=2000 {
            let g = g0 + (1.0 - g0) * k as f64 / 2000.0;
            let b = curve.beta_at(g)?;
            if b > prev.1 + 1e-9 && worst.is_none() {
                worst = Some((prev.0, g));
            }
            prev = (g, b);
        }
        report(
            Some(worst.is_none()),
            match worst {
                None => format!("{}: beta(gamma) nonincreasing", a.name),
                Some((g1, g2)) => format!(
                    "{}: beta increases between gamma={g1} and gamma={g2}",
                    a.name
                ),
            },
        );
    }

    let problem = AllocationProblem::new(
        agents.iter().map(|a| a.spec.clone()).collect(),
        budget,
        Resolution::Delta(step),
    );
    let alloc = allocate(&problem)?;
    for (a, r) in agents.iter().zip(&alloc.agents) {
        report(
            Some(
                check_ic_ir(&a.spec, r.contract, r.action, true)
                    && r.contract.beta <= r.beta_bar + 1e-9,
            ),
            format!(
                "{}: allocated contract gamma={} beta={} within cap {}",
                a.name, r.contract.gamma, r.contract.beta, r.beta_bar
            ),
        );
    }
    if agents.len() <= 3 {
        let brute = brute_force_allocate(&problem, step)?;
        report(
            Some(alloc.total_utility >= brute.total_utility - 1e-9),
            format!(
                "allocation total {:.9} vs exhaustive {:.9} (caps {:?})",
                alloc.total_utility,
                brute.total_utility,
                brute.caps()
            ),
        );
    } else {
        report(
            None,
            format!(
                "exhaustive allocation check needs at most 3 agents, got {}",
                agents.len()
            ),
        );
    }

    let targets = fit_to_budget(alloc.effective_betas(), budget);
    let schedule = InspectionSchedule::new(&targets, budget)?;
    let exact = schedule.exact_marginals();
    let worst = exact
        .iter()
        .zip(&targets)
        .map(|(e, t)| (e - t).abs())
        .fold(0.0, f64::max);
    report(
        Some(worst <= 1e-12),
        format!("schedule marginals off by at most {worst:e} (targets {targets:?})"),
    );
    Ok(failures)
}

fn emit(text: &str, opts: &OutputOpts, out: &mut dyn Write) -> Result<i32> {
    match &opts.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Instance(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(EXIT_OK)
}

/// Formats `x` with `digits` significant digits, without exponent noise for
/// ordinary magnitudes.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{:.*e}", digits.max(1) - 1, x).parse().unwrap_or(x);
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(sig(2.0 / 3.0, 3), "0.667");
        assert_eq!(sig(123456789.0, 6), "123457000");
        assert_eq!(sig(0.0, 6), "0");
        assert_eq!(sig(-0.000012345678, 4), "-0.00001235");
    }

    #[test]
    fn help_and_bad_flags() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(execute(["safecontract", "--help"], &mut o, &mut e), EXIT_OK);
        assert!(String::from_utf8(o).unwrap().contains("allocate"));
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(
            execute(["safecontract", "frobnicate"], &mut o, &mut e),
            EXIT_INVALID
        );
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::NoSafeContract), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&Error::InvalidAgent(String::new())), EXIT_INVALID);
        assert_eq!(
            exit_code(&Error::BelowRange {
                value: 0.0,
                minimum: 1.0
            }),
            EXIT_INTERNAL
        );
    }
}
