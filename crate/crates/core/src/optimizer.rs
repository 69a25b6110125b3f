//! Per-period power and subcarrier allocation.
//!
//! The relay rate `g1` is maximized subject to the local users keeping
//! `g2 >= r_th`. Since `g2` decreases in both shares, the constraint is active
//! at the optimum: for each `beta` on the `beta_step` lattice the power share
//! is fixed by bisection on `g2(eta, beta) = r_th`, and `beta` is swept upward
//! until the objective first decreases. Joint concavity makes the sweep
//! unimodal.

use rayon::prelude::*;

use crate::capacity::{RateModel, RateTarget, SnrFactors};
use crate::{Error, Result};

/// Relative slack under which two lattice points count as tied.
const TIE_REL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

fn grid_cells(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(Error::InvalidParameter {
            field: "grid_resolution",
            reason: format!("must lie in (0, 0.1], got {resolution}"),
        });
    }
    Ok((1.0 / resolution).round() as usize)
}

/// Resource split of one scheduling period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub period_i: i64,
    /// Subcarrier share of the relay.
    pub beta: f64,
    /// Power share of the relay.
    pub eta: f64,
    /// Relay rate in bit/s.
    pub c_mr: f64,
    /// Local users' rate in bit/s.
    pub c_users: f64,
    pub feasible: bool,
}

/// Relay capacity with and without the ICI term at their own optima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub period_i: i64,
    pub c_lower: f64,
    pub c_upper: f64,
    /// `(c_upper - c_lower) / c_upper`, zero when `c_upper = 0`.
    pub gap: f64,
}

/// Where a constant allocation is tuned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpsaVariant {
    /// Cell edge, `i = -I`.
    PowerLimited,
    /// Closest approach, `i = 0`.
    BandwidthLimited,
    /// Halfway out, `i = floor(I / 2)`.
    Intermediate,
}

impl CpsaVariant {
    pub const ALL: [CpsaVariant; 3] = [
        CpsaVariant::PowerLimited,
        CpsaVariant::BandwidthLimited,
        CpsaVariant::Intermediate,
    ];

    /// Anchor period for a trajectory with `half_periods = I`.
    pub fn anchor(self, half_periods: usize) -> i64 {
        let half = half_periods as i64;
        match self {
            CpsaVariant::PowerLimited => -half,
            CpsaVariant::BandwidthLimited => 0,
            CpsaVariant::Intermediate => half / 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CpsaVariant::PowerLimited => "pl",
            CpsaVariant::BandwidthLimited => "bl",
            CpsaVariant::Intermediate => "i",
        }
    }
}

/// Solver for one rate model and local-user target.
#[derive(Debug, Clone, Copy)]
pub struct Solver<'a> {
    pub model: &'a RateModel,
    pub target: RateTarget,
    /// Lattice step of the subcarrier share.
    pub beta_step: f64,
    /// Keep the ICI term in the objective (lower bound) or drop it (upper).
    pub with_ici: bool,
}

impl<'a> Solver<'a> {
    pub fn new(model: &'a RateModel, target: RateTarget, beta_step: f64, with_ici: bool) -> Self {
        Self {
            model,
            target,
            beta_step,
            with_ici,
        }
    }

    pub fn with_ici(self, with_ici: bool) -> Self {
        Self { with_ici, ..self }
    }

    fn tolerance(&self) -> f64 {
        self.target.tolerance()
    }

    fn infeasible(&self, beta: f64, f: &SnrFactors) -> Error {
        Error::Infeasible {
            beta,
            r_th: self.target.r_th,
            available: self.model.g2(0.0, beta, f),
        }
    }

    /// Power share that meets the local-user target with equality at
    /// subcarrier share `beta`, to within the bisection tolerance.
    pub fn solve_eta(&self, beta: f64, f: &SnrFactors) -> Result<f64> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter {
                field: "beta",
                reason: format!("must lie in [0, 1], got {beta}"),
            });
        }
        let r_th = self.target.r_th;
        let tol = self.tolerance();
        if r_th <= tol {
            return Ok(1.0);
        }
        let top = self.model.g2(0.0, beta, f);
        if top < r_th - tol {
            return Err(self.infeasible(beta, f));
        }
        if top <= r_th + tol {
            return Ok(0.0);
        }
        // g2(lo) > r_th >= g2(hi)
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut mid = 0.5;
        for _ in 0..MAX_BISECTIONS {
            mid = 0.5 * (lo + hi);
            let rate = self.model.g2(mid, beta, f);
            if (rate - r_th).abs() <= tol {
                break;
            }
            if rate > r_th {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }

    /// Allocation at a given subcarrier share with the constraint active.
    pub fn evaluate(&self, period_i: i64, beta: f64, f: &SnrFactors) -> Result<Allocation> {
        let eta = self.solve_eta(beta, f)?;
        Ok(self.freeze(period_i, beta, eta, f))
    }

    /// Allocation with both shares fixed.
    pub fn freeze(&self, period_i: i64, beta: f64, eta: f64, f: &SnrFactors) -> Allocation {
        let c_users = self.model.g2(eta, beta, f);
        Allocation {
            period_i,
            beta,
            eta,
            c_mr: self.model.g1(eta, beta, f, self.with_ici),
            c_users,
            feasible: c_users >= self.target.r_th - self.tolerance(),
        }
    }

    /// Sweep over the `beta` lattice from zero, stopping at the first
    /// decrease of the relay rate. Ties keep the smaller `beta`.
    pub fn opsa(&self, period_i: i64, f: &SnrFactors) -> Result<Allocation> {
        let steps = (1.0 / self.beta_step).round() as usize;
        let mut best = self
            .evaluate(period_i, 0.0, f)
            .map_err(|_| self.infeasible(0.0, f))?;
        for k in 1..=steps {
            let beta = if k == steps {
                1.0
            } else {
                k as f64 * self.beta_step
            };
            let Ok(next) = self.evaluate(period_i, beta, f) else {
                break;
            };
            if next.c_mr > best.c_mr + TIE_REL * best.c_mr.abs() {
                best = next;
            } else {
                break;
            }
        }
        Ok(best)
    }

    /// [`Solver::opsa`] for every period, in input order.
    pub fn opsa_sweep(&self, periods: &[(i64, SnrFactors)]) -> Vec<Result<Allocation>> {
        periods.par_iter().map(|(i, f)| self.opsa(*i, f)).collect()
    }

    /// Search of the `(eta, beta)` grid with spacing `resolution`, keeping
    /// points with `g2 >= r_th`. Every `beta` column is visited. Within a
    /// column `g2` falls and `g1` rises with `eta`, so the column's best
    /// point is its largest feasible `eta`, located by binary search over the
    /// grid indices; this returns the same point as scanning every cell.
    /// Ties keep the smaller `beta`.
    pub fn grid_oracle(
        &self,
        period_i: i64,
        f: &SnrFactors,
        resolution: f64,
    ) -> Result<Allocation> {
        let n = grid_cells(resolution)?;
        let at = |j: usize| if j == n { 1.0 } else { j as f64 / n as f64 };
        let r_th = self.target.r_th;
        let mut best: Option<Allocation> = None;
        for b in 0..=n {
            let beta = at(b);
            if self.model.g2(0.0, beta, f) < r_th {
                continue;
            }
            // g2(lo) >= r_th; find the last such index
            let (mut lo, mut hi) = (0, n + 1);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.model.g2(at(mid), beta, f) >= r_th {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let eta = at(lo);
            let c_mr = self.model.g1(eta, beta, f, self.with_ici);
            if best.is_none_or(|a| c_mr > a.c_mr) {
                best = Some(Allocation {
                    period_i,
                    beta,
                    eta,
                    c_mr,
                    c_users: self.model.g2(eta, beta, f),
                    feasible: true,
                });
            }
        }
        best.ok_or_else(|| self.infeasible(0.0, f))
    }

    /// Constant allocation tuned at the variant's anchor period and applied to
    /// every period of `periods`.
    pub fn cpsa(
        &self,
        variant: CpsaVariant,
        half_periods: usize,
        periods: &[(i64, SnrFactors)],
    ) -> Result<Vec<Allocation>> {
        let anchor = variant.anchor(half_periods);
        let (_, anchor_factors) = periods
            .iter()
            .find(|(i, _)| *i == anchor)
            .ok_or(Error::UnknownPeriod(anchor))?;
        let tuned = self.opsa(anchor, anchor_factors)?;
        Ok(periods
            .iter()
            .map(|(i, f)| self.freeze(*i, tuned.beta, tuned.eta, f))
            .collect())
    }

    /// Relay capacity at the optimum with the ICI term (lower bound) and
    /// without it (upper bound).
    pub fn bounds_and_gap(&self, period_i: i64, f: &SnrFactors) -> Result<GapReport> {
        let c_lower = self.with_ici(true).opsa(period_i, f)?.c_mr;
        let c_upper = self.with_ici(false).opsa(period_i, f)?.c_mr;
        let gap = if c_upper > 0.0 {
            ((c_upper - c_lower) / c_upper).max(0.0)
        } else {
            0.0
        };
        Ok(GapReport {
            period_i,
            c_lower,
            c_upper,
            gap,
        })
    }
}
