//! Command-line front end: configuration, subcommand dispatch and CSV output.
//!
//! Every CSV starts with a `# config:` comment holding the resolved
//! configuration, then a header row. Output depends only on the
//! configuration and seed.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{format_number as num, ConfigError, RunConfig};
use crate::ici::{ici_coeff_approx, ici_coeff_exact};
use crate::optimizer::{CpsaVariant, Solver};
use crate::study::Study;
use crate::validation::run_all;

#[derive(Debug, Parser)]
#[command(
    name = "hsr-alloc",
    version,
    about = "Power and subcarrier split between a train relay and local users"
)]
pub struct Cli {
    /// key = value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Local-user threshold as a fraction of their full-resource capacity.
    #[arg(long, global = true, value_name = "X")]
    pub rho: Option<f64>,
    /// Keep the ICI term in the relay objective.
    #[arg(long, global = true, value_name = "on|off")]
    pub with_ici: Option<Toggle>,
    /// Write CSV here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Per-period geometry, Doppler and SNR factors.
    Trajectory,
    /// ICI coefficients: closed form against the small-Doppler approximation.
    IciTable {
        /// Largest offset listed.
        #[arg(long, default_value_t = 10)]
        max_offset: i64,
        /// Period whose Doppler is used; defaults to the cell edge.
        #[arg(long, allow_negative_numbers = true)]
        period: Option<i64>,
    },
    /// Optimal allocation for every period.
    OpsaSweep,
    /// Optimal against constant allocations.
    CompareCpsa,
    /// Relay capacity with and without ICI and their normalized gap.
    Gap,
    /// Run the oracle checks.
    Validate,
}

/// CSV text and whether every row succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub ok: bool,
}

/// Resolves the configuration from file and flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: item.clone(),
        })?;
        config.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(rho) = cli.rho {
        config.params.rho = rho;
    }
    if let Some(toggle) = cli.with_ici {
        config.with_ici = toggle == Toggle::On;
    }
    config.resolve()?;
    Ok(config)
}

fn header(config: &RunConfig, columns: &str) -> String {
    format!("{}\n{columns}\n", config.comment_line())
}

/// Runs `command` and renders its CSV.
pub fn run(command: &Command, config: &RunConfig) -> anyhow::Result<Report> {
    let study = config.study()?;
    match command {
        Command::Trajectory => Ok(trajectory(config, &study)),
        Command::IciTable { max_offset, period } => ici_table(config, &study, *max_offset, *period),
        Command::OpsaSweep => opsa_sweep(config, &study),
        Command::CompareCpsa => compare_cpsa(config, &study),
        Command::Gap => gap(config, &study),
        Command::Validate => validate(config, &study),
    }
}

fn trajectory(config: &RunConfig, study: &Study) -> Report {
    let mut csv = header(
        config,
        "i,t_seconds,distance_m,pathloss,doppler_hz,doppler_norm,gamma0,gamma_ici0",
    );
    let symbol = study.params.symbol_duration();
    for p in &study.trajectory.periods {
        let f = study.factors(p);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            p.index,
            num(p.time),
            num(p.mr_distance),
            num(p.pathloss),
            num(p.doppler),
            num(p.doppler * symbol),
            num(f.gamma0),
            num(f.gamma_ici0)
        );
    }
    Report { csv, ok: true }
}

fn ici_table(
    config: &RunConfig,
    study: &Study,
    max_offset: i64,
    period: Option<i64>,
) -> anyhow::Result<Report> {
    let index = period.unwrap_or(study.trajectory.half_periods as i64);
    let doppler = study.period(index)?.doppler;
    let symbol = study.params.symbol_duration();
    let n = study.params.n_subcarriers;
    let mut csv = header(config, "k,exact,approx,rel_err");
    for k in 1..=max_offset.max(1) {
        let exact = ici_coeff_exact(k, doppler, symbol, n);
        let approx = ici_coeff_approx(k, doppler, symbol, n)?;
        let rel = if exact > 0.0 {
            (approx - exact).abs() / exact
        } else {
            0.0
        };
        let _ = writeln!(csv, "{k},{},{},{}", num(exact), num(approx), num(rel));
    }
    Ok(Report { csv, ok: true })
}

fn solver<'a>(config: &RunConfig, study: &'a Study) -> anyhow::Result<Solver<'a>> {
    Ok(Solver::new(
        &study.model,
        study.rate_target(config.params.rho)?,
        config.params.beta_step,
        config.with_ici,
    ))
}

fn all_factors(study: &Study) -> Vec<(i64, crate::capacity::SnrFactors)> {
    study
        .trajectory
        .periods
        .iter()
        .map(|p| (p.index, study.factors(p)))
        .collect()
}

fn opsa_sweep(config: &RunConfig, study: &Study) -> anyhow::Result<Report> {
    let solver = solver(config, study)?;
    let mut csv = header(config, "i,t_seconds,beta,eta,c_mr_bps,c_users_bps,feasible");
    let mut ok = true;
    let results = solver.opsa_sweep(&all_factors(study));
    for (p, result) in study.trajectory.periods.iter().zip(results) {
        match result {
            Ok(a) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    a.period_i,
                    num(p.time),
                    num(a.beta),
                    num(a.eta),
                    num(a.c_mr),
                    num(a.c_users),
                    a.feasible
                );
                ok &= a.feasible;
            }
            Err(e) => {
                let _ = writeln!(csv, "{},{},nan,nan,nan,nan,false", p.index, num(p.time));
                eprintln!("period {}: {e}", p.index);
                ok = false;
            }
        }
    }
    Ok(Report { csv, ok })
}

fn compare_cpsa(config: &RunConfig, study: &Study) -> anyhow::Result<Report> {
    let solver = solver(config, study)?;
    let factors = all_factors(study);
    let half = study.trajectory.half_periods;
    let optimal: Vec<_> = solver
        .opsa_sweep(&factors)
        .into_iter()
        .collect::<Result<_, _>>()?;
    let fixed = CpsaVariant::ALL
        .iter()
        .map(|&v| solver.cpsa(v, half, &factors))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = header(
        config,
        "i,t_seconds,opsa_bps,cpsa_pl_bps,cpsa_bl_bps,cpsa_i_bps",
    );
    for (j, p) in study.trajectory.periods.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            p.index,
            num(p.time),
            num(optimal[j].c_mr),
            num(fixed[0][j].c_mr),
            num(fixed[1][j].c_mr),
            num(fixed[2][j].c_mr)
        );
    }
    Ok(Report { csv, ok: true })
}

fn gap(config: &RunConfig, study: &Study) -> anyhow::Result<Report> {
    let solver = solver(config, study)?;
    let mut csv = header(config, "i,c_lower,c_upper,gap");
    for (i, f) in all_factors(study) {
        let g = solver.bounds_and_gap(i, &f)?;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            g.period_i,
            num(g.c_lower),
            num(g.c_upper),
            num(g.gap)
        );
    }
    Ok(Report { csv, ok: true })
}

fn validate(config: &RunConfig, study: &Study) -> anyhow::Result<Report> {
    let profile = config.normalized_profile()?;
    let checks = run_all(config, study, &profile)?;
    let mut csv = header(config, "check,measured,tolerance,status");
    let mut ok = true;
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        ok &= c.passed();
        let _ = writeln!(
            csv,
            "{},{},{},{status}",
            c.name,
            num(c.measured),
            num(c.tolerance)
        );
    }
    Ok(Report { csv, ok })
}

/// Parses the process arguments, runs, and writes the CSV. Exit status 0 on
/// success, 1 when a check fails or a period is infeasible, 2 on
/// configuration or I/O errors.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&cli.command, &config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &report.csv),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(report.csv.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
