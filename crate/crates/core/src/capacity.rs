//! Ergodic capacities and the per-period program.
//!
//! With relay power share `eta` and subcarrier share `beta`, the relay's
//! ergodic rate is
//!
//! ```text
//! g1(eta, beta) = beta B E log2(1 + gamma0 X eta / (gamma_ici0 eta + beta)),   X ~ Exp(1)
//! ```
//!
//! and the local users' statistical sum rate on the remaining resources is
//!
//! ```text
//! g2(eta, beta) = sum_m (1 - beta) B/M E log2(1 + gamma_m Y (1 - eta) / (1 - beta)),   Y ~ max of M Exp(1)
//! ```
//!
//! Both are perspectives of concave functions, hence jointly concave.
//! Capacities are in bit/s.

use std::f64::consts::LN_2;

use crate::channel::FadingLaw;
use crate::quadrature::GaussLegendre;
use crate::scenario::{SystemParams, UserPopulation};
use crate::special::exp_e1;
use crate::{Error, Result};

/// Probability mass cut from each tail of a law before integrating.
const TAIL_MASS: f64 = 1e-20;
const GL_POINTS: usize = 16;
/// Relative change between successive panel doublings that ends refinement.
const REL_TOL: f64 = 1e-9;
const MAX_PANELS: usize = 4096;
/// Scaled SNRs at which a fixed rule must have converged.
const RULE_PROBES: [f64; 8] = [1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6, 1e8];

/// Integration range of `law` on the log axis `u = ln x`.
fn log_support(law: &FadingLaw) -> (f64, f64) {
    (
        law.quantile(TAIL_MASS).ln(),
        law.upper_quantile(TAIL_MASS).ln(),
    )
}

/// Composite rule on the log axis with `panels` panels: nodes `x_j` and
/// weights `w_j` such that `E g(X) ~ sum_j w_j g(x_j)`.
fn log_axis_rule(law: &FadingLaw, panels: usize, gl: &GaussLegendre) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = log_support(law);
    let (us, ws) = gl.composite(lo, hi, panels);
    us.iter()
        .zip(ws)
        .map(|(&u, w)| {
            let x = u.exp();
            (x, w * law.pdf(x) * x)
        })
        .unzip()
}

fn apply_rule(nodes: &[f64], weights: &[f64], gamma: f64) -> f64 {
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * (gamma * x).ln_1p())
        .sum::<f64>()
        / LN_2
}

/// `E log2(1 + gamma X)` for `X ~ law`, by Gauss–Legendre panels on a
/// logarithmic axis, doubling the panel count until the relative change
/// drops below `1e-9`.
pub fn ergodic_log_capacity(gamma: f64, law: &FadingLaw) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::InvalidParameter {
            field: "gamma",
            reason: format!("must be nonnegative, got {gamma}"),
        });
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let gl = GaussLegendre::new(GL_POINTS);
    let mut panels = 4;
    let (xs, ws) = log_axis_rule(law, panels, &gl);
    let mut prev = apply_rule(&xs, &ws, gamma);
    while panels < MAX_PANELS {
        panels *= 2;
        let (xs, ws) = log_axis_rule(law, panels, &gl);
        let cur = apply_rule(&xs, &ws, gamma);
        if (cur - prev).abs() <= REL_TOL * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { panels })
}

/// Closed form `e^(1/a) E1(1/a) / ln 2` with `a = gamma * mean` for an
/// exponential gain.
pub fn exponential_log_capacity(gamma: f64, mean: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    if gamma.is_infinite() {
        return f64::INFINITY;
    }
    exp_e1(1.0 / (gamma * mean)) / LN_2
}

/// Alternating-binomial closed form for the maximum of `m` unit exponentials,
/// `sum_k (-1)^(k+1) C(m,k) e^(k/gamma) E1(k/gamma) / ln 2`. The terms cancel
/// heavily; only usable for small `m` (about 10 or less).
pub fn max_of_m_log_capacity(gamma: f64, m: usize) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 1..=m {
        binom *= (m + 1 - k) as f64 / k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * binom * exp_e1(k as f64 / gamma);
    }
    total / LN_2
}

/// Precomputed evaluator of `s -> E log2(1 + s X)` for one law.
#[derive(Debug, Clone, PartialEq)]
pub enum ErgodicRule {
    /// Exponential gain, evaluated in closed form.
    Exponential { mean: f64 },
    /// Fixed quadrature rule, converged over the probe range of `s`.
    Quadrature { nodes: Vec<f64>, weights: Vec<f64> },
}

impl ErgodicRule {
    /// Closed form for exponential gains, a fixed quadrature rule otherwise.
    pub fn for_law(law: &FadingLaw) -> Result<Self> {
        match *law {
            FadingLaw::Exponential { mean } => Ok(ErgodicRule::Exponential { mean }),
            FadingLaw::MaxOfExponentials { .. } => Self::quadrature(law),
        }
    }

    /// Builds a fixed rule by doubling panels until every probe value of `s`
    /// from `1e-6` to `1e8` changes by less than `1e-9` relative.
    pub fn quadrature(law: &FadingLaw) -> Result<Self> {
        let gl = GaussLegendre::new(GL_POINTS);
        let evaluate = |xs: &[f64], ws: &[f64]| -> Vec<f64> {
            RULE_PROBES.iter().map(|&s| apply_rule(xs, ws, s)).collect()
        };
        let mut panels = 2;
        let (mut xs, mut ws) = log_axis_rule(law, panels, &gl);
        let mut prev = evaluate(&xs, &ws);
        while panels < MAX_PANELS {
            panels *= 2;
            (xs, ws) = log_axis_rule(law, panels, &gl);
            let cur = evaluate(&xs, &ws);
            let settled = cur
                .iter()
                .zip(&prev)
                .all(|(c, p)| (c - p).abs() <= REL_TOL * c.abs());
            if settled {
                return Ok(ErgodicRule::Quadrature {
                    nodes: xs,
                    weights: ws,
                });
            }
            prev = cur;
        }
        Err(Error::QuadratureNotConverged { panels })
    }

    /// `E log2(1 + s X)`.
    pub fn expected_log2(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            ErgodicRule::Exponential { mean } => exponential_log_capacity(s, *mean),
            ErgodicRule::Quadrature { nodes, weights } => apply_rule(nodes, weights, s),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ErgodicRule::Exponential { .. } => 1,
            ErgodicRule::Quadrature { nodes, .. } => nodes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Normalized SNR factors of one scheduling period.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrFactors {
    /// Relay SNR with all power on all subcarriers, `E|H0(p,p)|^2 P / (d0^alpha N0 B)`.
    pub gamma0: f64,
    /// Local-user SNR factor `P / (d_m^alpha N0 B)` per group.
    pub gamma_m: Vec<f64>,
    /// Relay ICI factor.
    pub gamma_ici0: f64,
}

/// `P / (d^alpha N0 B)` for every user group.
pub fn user_snr_factors(params: &SystemParams, pop: &UserPopulation) -> Vec<f64> {
    let scale = params.power / params.noise_power();
    pop.groups
        .iter()
        .map(|g| scale / g.distance.powf(params.pathloss_exponent))
        .collect()
}

/// Local-user rate threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTarget {
    /// Statistical sum capacity of local users holding all resources.
    pub c_sum: f64,
    pub rho: f64,
    /// `rho * c_sum`.
    pub r_th: f64,
}

impl RateTarget {
    pub fn new(c_sum: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter {
                field: "rho",
                reason: format!("must lie in [0, 1], got {rho}"),
            });
        }
        Ok(Self {
            c_sum,
            rho,
            r_th: rho * c_sum,
        })
    }

    /// Bisection tolerance on the local-user rate, `1e-6 * c_sum`.
    pub fn tolerance(&self) -> f64 {
        1e-6 * self.c_sum
    }
}

/// Evaluates the two functions of the per-period program.
#[derive(Debug, Clone)]
pub struct RateModel {
    bandwidth: f64,
    /// Fraction of local users in each group.
    shares: Vec<f64>,
    relay: ErgodicRule,
    users: ErgodicRule,
}

impl RateModel {
    pub fn new(params: &SystemParams, pop: &UserPopulation) -> Result<Self> {
        let total = pop.total() as f64;
        Ok(Self {
            bandwidth: params.bandwidth,
            shares: pop.groups.iter().map(|g| g.count as f64 / total).collect(),
            relay: ErgodicRule::for_law(&FadingLaw::UNIT)?,
            users: ErgodicRule::for_law(&FadingLaw::MaxOfExponentials {
                users: params.n_users,
            })?,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Relay rate in bit/s. `with_ici = false` drops the ICI term, giving the
    /// upper bound.
    pub fn g1(&self, eta: f64, beta: f64, f: &SnrFactors, with_ici: bool) -> f64 {
        if eta <= 0.0 || beta <= 0.0 {
            return 0.0;
        }
        let ici = if with_ici { f.gamma_ici0 } else { 0.0 };
        let sinr = f.gamma0 * eta / (ici * eta + beta);
        beta * self.bandwidth * self.relay.expected_log2(sinr)
    }

    /// Local users' full-band rate at SNR scaling `s`:
    /// `sum_m B/M E log2(1 + gamma_m s Y)`.
    pub fn users_rate(&self, s: f64, f: &SnrFactors) -> f64 {
        self.shares
            .iter()
            .zip(&f.gamma_m)
            .map(|(share, gamma)| share * self.users.expected_log2(gamma * s))
            .sum::<f64>()
            * self.bandwidth
    }

    /// Local users' sum rate in bit/s on the resources left by the relay.
    pub fn g2(&self, eta: f64, beta: f64, f: &SnrFactors) -> f64 {
        if beta >= 1.0 || eta >= 1.0 {
            return 0.0;
        }
        let s = (1.0 - eta) / (1.0 - beta);
        (1.0 - beta) * self.users_rate(s, f)
    }

    /// `g2(0, 0)`: local users holding every resource.
    pub fn c_sum(&self, f: &SnrFactors) -> f64 {
        self.users_rate(1.0, f)
    }
}

/// Statistical local-user sum capacity and the threshold `rho * C_sum`.
pub fn c_sum(params: &SystemParams, pop: &UserPopulation) -> Result<RateTarget> {
    let law = FadingLaw::MaxOfExponentials {
        users: params.n_users,
    };
    let mut total = 0.0;
    for (g, gamma) in pop.groups.iter().zip(user_snr_factors(params, pop)) {
        total += g.count as f64 / params.n_users as f64 * ergodic_log_capacity(gamma, &law)?;
    }
    RateTarget::new(total * params.bandwidth, params.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn log2_1p(x: f64) -> f64 {
        x.ln_1p() / LN_2
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn zero_snr_has_zero_capacity() {
        assert_eq!(ergodic_log_capacity(0.0, &FadingLaw::UNIT).unwrap(), 0.0);
        assert!(ergodic_log_capacity(-1.0, &FadingLaw::UNIT).is_err());
    }

    #[test]
    fn unit_snr_rayleigh() {
        // e E1(1) = 0.596347362323194...
        let want = 0.596_347_362_323_194_1 / LN_2;
        let quad = ergodic_log_capacity(1.0, &FadingLaw::UNIT).unwrap();
        assert!(rel(quad, want) < 1e-9, "{quad} vs {want}");
        assert!(rel(exponential_log_capacity(1.0, 1.0), want) < 1e-14);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for gamma in [1e-5, 0.02, 0.3, 3.0, 50.0, 3000.0, 1e6] {
            let q = ergodic_log_capacity(gamma, &FadingLaw::Exponential { mean: 0.7 }).unwrap();
            assert!(
                rel(q, exponential_log_capacity(gamma, 0.7)) < 1e-9,
                "gamma={gamma}"
            );
            let m = 5;
            let q =
                ergodic_log_capacity(gamma, &FadingLaw::MaxOfExponentials { users: m }).unwrap();
            assert!(
                rel(q, max_of_m_log_capacity(gamma, m)) < 1e-8,
                "gamma={gamma}"
            );
        }
    }

    #[test]
    fn single_user_max_is_exponential() {
        for gamma in [0.01, 1.0, 100.0] {
            let a =
                ergodic_log_capacity(gamma, &FadingLaw::MaxOfExponentials { users: 1 }).unwrap();
            let b = ergodic_log_capacity(gamma, &FadingLaw::UNIT).unwrap();
            assert!(rel(a, b) < 1e-9);
            assert!(
                rel(
                    max_of_m_log_capacity(gamma, 1),
                    exponential_log_capacity(gamma, 1.0)
                ) < 1e-15
            );
        }
    }

    #[test]
    fn quadrature_agrees_with_monte_carlo() {
        let mut rng = stream(5, 0);
        for law in [FadingLaw::UNIT, FadingLaw::MaxOfExponentials { users: 50 }] {
            let gamma = 2.0;
            let n = 1_000_000;
            let mc = (0..n)
                .map(|_| log2_1p(gamma * law.sample(&mut rng)))
                .sum::<f64>()
                / n as f64;
            let q = ergodic_log_capacity(gamma, &law).unwrap();
            assert!(rel(mc, q) < 0.005, "{law:?}: {mc} vs {q}");
        }
    }

    #[test]
    fn fixed_rule_matches_adaptive_quadrature() {
        let law = FadingLaw::MaxOfExponentials { users: 50 };
        let rule = ErgodicRule::quadrature(&law).unwrap();
        assert!(rule.len() <= 256, "rule has {} nodes", rule.len());
        for k in -12..=14 {
            let s = 3.7f64.powi(k);
            let a = rule.expected_log2(s);
            let b = ergodic_log_capacity(s, &law).unwrap();
            assert!(rel(a, b) < 1e-9, "s={s}: {a} vs {b}");
        }
        let exp_rule = ErgodicRule::quadrature(&FadingLaw::UNIT).unwrap();
        for s in [1e-3, 0.5, 7.0, 1e4] {
            assert!(rel(exp_rule.expected_log2(s), exponential_log_capacity(s, 1.0)) < 1e-9);
        }
    }

    fn table_factors() -> (RateModel, SnrFactors) {
        let params = SystemParams::default();
        let pop = UserPopulation::default();
        let model = RateModel::new(&params, &pop).unwrap();
        let f = SnrFactors {
            gamma0: 0.4,
            gamma_m: user_snr_factors(&params, &pop),
            gamma_ici0: 0.02,
        };
        (model, f)
    }

    #[test]
    fn c_sum_matches_model() {
        let params = SystemParams::default();
        let pop = UserPopulation::default();
        let target = c_sum(&params, &pop).unwrap();
        let (model, f) = table_factors();
        assert!(rel(target.c_sum, model.c_sum(&f)) < 1e-9);
        assert!(rel(model.g2(0.0, 0.0, &f), target.c_sum) < 1e-9);
        assert_eq!(target.r_th, 0.5 * target.c_sum);
        let none = c_sum(
            &SystemParams {
                rho: 0.0,
                ..params.clone()
            },
            &pop,
        )
        .unwrap();
        assert_eq!(none.r_th, 0.0);
        let dark = c_sum(
            &SystemParams {
                power: 1e-30,
                ..params
            },
            &pop,
        )
        .unwrap();
        assert!(dark.c_sum < 1e-6);
    }

    #[test]
    fn g1_examples() {
        let (model, f) = table_factors();
        assert_eq!(model.g1(0.0, 0.4, &f, true), 0.0);
        assert_eq!(model.g1(0.4, 0.0, &f, false), 0.0);
        for (eta, beta) in [(0.1, 0.9), (0.5, 0.5), (0.9, 0.05)] {
            assert!(model.g1(eta, beta, &f, false) >= model.g1(eta, beta, &f, true));
        }
        let no_ici = SnrFactors {
            gamma_ici0: 0.0,
            ..f.clone()
        };
        assert_eq!(
            model.g1(0.3, 0.6, &no_ici, true),
            model.g1(0.3, 0.6, &no_ici, false)
        );
    }

    #[test]
    fn g2_examples_and_monotonicity() {
        let (model, f) = table_factors();
        assert_eq!(model.g2(1.0, 0.3, &f), 0.0);
        assert_eq!(model.g2(0.3, 1.0, &f), 0.0);
        // continuous at beta -> 1
        assert!(model.g2(0.3, 1.0 - 1e-9, &f) < 1e-7 * model.c_sum(&f));
        let grid: Vec<f64> = (0..20).map(|k| k as f64 / 20.0).collect();
        for &a in &grid {
            for w in grid.windows(2) {
                assert!(model.g2(w[1], a, &f) < model.g2(w[0], a, &f));
                assert!(model.g2(a, w[1], &f) < model.g2(a, w[0], &f));
            }
        }
    }

    #[test]
    fn g1_nondecreasing_in_power() {
        let (model, f) = table_factors();
        for with_ici in [false, true] {
            for b in 1..10 {
                let beta = b as f64 / 10.0;
                let mut prev = 0.0;
                for e in 0..=50 {
                    let v = model.g1(e as f64 / 50.0, beta, &f, with_ici);
                    assert!(v >= prev);
                    prev = v;
                }
            }
        }
    }
}
