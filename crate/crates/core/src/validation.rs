//! Oracle suite behind `hsr-alloc validate`: each check compares a model
//! against an independent computation and reports the worst error.

use rand::Rng;

use crate::capacity::{c_sum, SnrFactors};
use crate::channel::{mr_diag_gain_mean, DelayProfile};
use crate::config::RunConfig;
use crate::ici::{ici_coeff_approx, ici_coeff_exact, ici_coeff_sum, window_tail_fraction};
use crate::mc_oracle::{max_off_diagonal, mc_ici_moments, mc_sum_capacity};
use crate::optimizer::Solver;
use crate::rng::{ids, stream};
use crate::study::Study;
use crate::Result;

/// How a measurement is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Pass when `measured <= tolerance`.
    AtMost,
    /// Pass when `measured >= tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Self {
            name,
            measured,
            tolerance,
            bound: Bound::AtMost,
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.tolerance,
            Bound::AtLeast => self.measured >= self.tolerance,
        }
    }
}

/// Values this small are compared in absolute terms.
const ABS_FLOOR: f64 = 1e-15;

/// Worst relative disagreement between the literal ICI sum and its closed
/// form over `N in {8, 64, 512}`, `f_D T in [0, 0.4]` and every offset, after
/// forgiving `1e-15` absolute (analytic zeros).
pub fn ici_identity_error() -> f64 {
    let mut worst: f64 = 0.0;
    for n in [8usize, 64, 512] {
        for step in 0..=40 {
            let fdt = step as f64 * 0.01;
            for k in 0..n as i64 {
                let a = ici_coeff_sum(k, fdt, 1.0, n);
                let b = ici_coeff_exact(k, fdt, 1.0, n);
                let scale = a.abs().max(b.abs());
                let err = ((a - b).abs() - ABS_FLOOR).max(0.0) / scale.max(ABS_FLOOR);
                worst = worst.max(err);
            }
        }
    }
    worst
}

/// Worst relative error of the small-Doppler approximation for
/// `1 <= |k| <= max_offset` at normalized Doppler `fdt`.
pub fn approx_error(fdt: f64, n: usize, max_offset: i64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..=max_offset {
        for k in [k, -k] {
            let exact = ici_coeff_exact(k, fdt, 1.0, n);
            let approx = ici_coeff_approx(k, fdt, 1.0, n)?;
            worst = worst.max((approx - exact).abs() / exact);
        }
    }
    Ok(worst)
}

/// Smallest relative midpoint-concavity slack of `g1` over random pairs.
pub fn concavity_slack(study: &Study, periods: &[i64], pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = stream(seed, ids::CONCAVITY);
    let mut worst = f64::INFINITY;
    for &i in periods {
        let f = study.factors(study.period(i)?);
        let g1 = |eta: f64, beta: f64| study.model.g1(eta, beta, &f, true);
        for _ in 0..pairs {
            let (e1, b1, e2, b2): (f64, f64, f64, f64) =
                (rng.random(), rng.random(), rng.random(), rng.random());
            let (ga, gb) = (g1(e1, b1), g1(e2, b2));
            let gm = g1(0.5 * (e1 + e2), 0.5 * (b1 + b2));
            let scale = ga.max(gb).max(gm).max(f64::MIN_POSITIVE);
            worst = worst.min((gm - 0.5 * (ga + gb)) / scale);
        }
    }
    Ok(worst)
}

/// Shortfall of the sweep against the grid, and its excess over the grid in
/// units of the objective change across one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAgreement {
    /// Largest `(grid - sweep) / grid`.
    pub shortfall: f64,
    /// Largest `(sweep - grid) / cell_change`.
    pub excess_cells: f64,
}

pub fn grid_agreement(
    study: &Study,
    rhos: &[f64],
    periods: &[i64],
    resolution: f64,
) -> Result<GridAgreement> {
    let mut out = GridAgreement {
        shortfall: f64::NEG_INFINITY,
        excess_cells: f64::NEG_INFINITY,
    };
    for &rho in rhos {
        let solver = Solver::new(
            &study.model,
            study.rate_target(rho)?,
            study.params.beta_step,
            true,
        );
        for &i in periods {
            let f = study.factors(study.period(i)?);
            let grid = solver.grid_oracle(i, &f, resolution)?;
            let sweep = solver.opsa(i, &f)?;
            let cell = cell_change(study, &f, grid.eta, grid.beta, resolution);
            out.shortfall = out.shortfall.max((grid.c_mr - sweep.c_mr) / grid.c_mr);
            out.excess_cells = out.excess_cells.max((sweep.c_mr - grid.c_mr) / cell);
        }
    }
    Ok(out)
}

/// Largest change of `g1` from `(eta, beta)` to a diagonal neighbour one
/// cell away.
fn cell_change(study: &Study, f: &SnrFactors, eta: f64, beta: f64, step: f64) -> f64 {
    let base = study.model.g1(eta, beta, f, true);
    let mut worst: f64 = 0.0;
    for de in [-step, step] {
        for db in [-step, step] {
            let e = (eta + de).clamp(0.0, 1.0);
            let b = (beta + db).clamp(0.0, 1.0);
            worst = worst.max((study.model.g1(e, b, f, true) - base).abs());
        }
    }
    worst
}

/// Runs every check at the sample sizes and seed of `config`. `profile` is
/// the unit-power delay profile.
pub fn run_all(config: &RunConfig, study: &Study, profile: &DelayProfile) -> Result<Vec<Check>> {
    let params = &study.params;
    let n = params.n_subcarriers;
    let symbol = params.symbol_duration();
    let half = study.trajectory.half_periods as i64;
    let edge = study.period(half)?.doppler;
    let mut checks = vec![
        Check::at_most("ici_identity_rel_err", ici_identity_error(), 1e-10),
        Check::at_most(
            "ici_approx_rel_err",
            approx_error(edge * symbol, n, 10)?,
            1e-2,
        ),
        Check::at_most(
            "ici_window_tail_fraction",
            window_tail_fraction(5, edge, symbol, n),
            5e-2,
        ),
    ];

    let moments = mc_ici_moments(profile, edge, params, 5, config.ici_trials, config.seed)?;
    let mc_err = moments
        .by_offset
        .iter()
        .map(|(k, e)| {
            let exact = ici_coeff_exact(*k, edge, symbol, n);
            (e.mean - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("mc_ici_moment_rel_err", mc_err, 5e-2));
    let diag = moments.offset(0).map_or(f64::NAN, |e| e.mean);
    let expected = mr_diag_gain_mean(edge, symbol, n);
    let diag_err = (diag - expected).abs() / expected;
    checks.push(Check::at_most("mc_diag_gain_rel_err", diag_err, 3e-2));
    let static_peak = max_off_diagonal(profile, 0.0, params, 0..16, 100, config.seed)?;
    checks.push(Check::at_most(
        "zero_doppler_max_offdiag",
        static_peak,
        1e-10,
    ));

    let periods = [-half, -half / 2, 0, half / 2, half];
    checks.push(Check {
        name: "g1_midpoint_concavity_slack",
        measured: concavity_slack(study, &periods, 200, config.seed)?,
        tolerance: -1e-9,
        bound: Bound::AtLeast,
    });

    let agreement = grid_agreement(
        study,
        &[0.1, 0.5, 0.9],
        &[0, half / 2, half],
        config.grid_resolution,
    )?;
    checks.push(Check::at_most(
        "opsa_grid_shortfall",
        agreement.shortfall,
        1e-3,
    ));
    checks.push(Check::at_most(
        "opsa_grid_excess_cells",
        agreement.excess_cells,
        1.0,
    ));

    let reference = c_sum(params, &study.population)?.c_sum;
    let simulated = mc_sum_capacity(params, &study.population, config.sched_slots, config.seed)?;
    checks.push(Check::at_most(
        "c_sum_mc_rel_err",
        (simulated.mean - reference).abs() / reference,
        2e-2,
    ));
    Ok(checks)
}
