//! Inter-carrier interference of the two-path Doppler channel.
//!
//! For subcarrier offset `k = n - p` the second moment `E|H(n,p)|^2` is a
//! finite cosine sum. It has the closed form
//! `(F(A) + F(B)) / (2 N^2)` with the Fejér kernel `F(x) = sin^2(N x / 2) / sin^2(x / 2)`
//! and `A, B = 2 pi (f_D T +- k) / N`, and for `f_D T << 1` the approximation
//! `sin^2(pi f_D T) / (N^2 sin^2(pi k / N))`.
//!
//! All offsets are taken modulo `N`. Arguments are reduced in integer
//! arithmetic before any trigonometric call so that large `k` does not cost
//! precision.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::scenario::{Period, SystemParams};
use crate::{Error, Result};

/// Below this distance from a multiple of `N` the Fejér kernel takes its
/// limit value `N^2`.
const SINGULAR_ARG: f64 = 1e-12;

/// Largest normalized Doppler accepted by [`ici_coeff_approx`].
pub const APPROX_MAX_DOPPLER: f64 = 0.2;

fn reduce_offset(k: i64, n: usize) -> i64 {
    let n = n as i64;
    let r = k.rem_euclid(n);
    if r > n / 2 {
        r - n
    } else {
        r
    }
}

/// Literal double-cosine sum for `E|H(n,p)|^2` with `k = n - p`:
/// `1/N + (1/N^2) sum_{j=1}^{N-1} (N - j) (cos(A j) + cos(B j))`.
pub fn ici_coeff_sum(k: i64, doppler: f64, symbol: f64, n: usize) -> f64 {
    let x = doppler * symbol;
    let nf = n as f64;
    let ni = n as i64;
    // Neumaier compensated summation
    let mut sum = 0.0;
    let mut carry = 0.0;
    let mut add = |v: f64| {
        let t = sum + v;
        if f64::abs(sum) >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    };
    for j in 1..ni {
        let doppler_phase = x * j as f64 / nf;
        let plus = (k * j).rem_euclid(ni) as f64 / nf;
        let minus = (-k * j).rem_euclid(ni) as f64 / nf;
        let weight = (ni - j) as f64;
        add(weight * (2.0 * PI * (doppler_phase + plus)).cos());
        add(weight * (2.0 * PI * (doppler_phase + minus)).cos());
    }
    1.0 / nf + (sum + carry) / (nf * nf)
}

/// `F(2 pi nu / N)` for `nu = frac + m` where `m` is an integer offset already
/// reduced modulo `N` and `frac` the fractional Doppler part.
fn fejer(frac: f64, m: i64, n: usize) -> f64 {
    let nf = n as f64;
    let nu = frac + m as f64;
    if nu.abs() < SINGULAR_ARG {
        return nf * nf;
    }
    let num = (PI * frac).sin();
    let den = (PI * nu / nf).sin();
    (num * num) / (den * den)
}

/// Closed form of [`ici_coeff_sum`].
pub fn ici_coeff_exact(k: i64, doppler: f64, symbol: f64, n: usize) -> f64 {
    let x = doppler * symbol;
    let whole = x.round();
    let frac = x - whole;
    let whole = whole as i64;
    let a = fejer(frac, reduce_offset(whole + k, n), n);
    let b = fejer(frac, reduce_offset(whole - k, n), n);
    let nf = n as f64;
    (a + b) / (2.0 * nf * nf)
}

/// Small-Doppler approximation `sin^2(pi f_D T) / (N^2 sin^2(pi k / N))`,
/// valid off the diagonal only.
pub fn ici_coeff_approx(k: i64, doppler: f64, symbol: f64, n: usize) -> Result<f64> {
    let k = reduce_offset(k, n);
    if k == 0 {
        return Err(Error::DiagonalApproximation(k));
    }
    let x = doppler * symbol;
    if x.abs() >= APPROX_MAX_DOPPLER {
        return Err(Error::DopplerTooLarge(x));
    }
    let nf = n as f64;
    let num = (PI * x).sin();
    let den = nf * (PI * k as f64 / nf).sin();
    Ok((num * num) / (den * den))
}

/// Share of the total off-diagonal ICI that lies outside `0 < |k| <= window`,
/// from the closed-form coefficients.
pub fn window_tail_fraction(window: usize, doppler: f64, symbol: f64, n: usize) -> f64 {
    let all: f64 = (1..n as i64)
        .map(|k| ici_coeff_exact(k, doppler, symbol, n))
        .sum();
    if all == 0.0 {
        return 0.0;
    }
    let near: f64 = (1..=window as i64)
        .map(|k| ici_coeff_exact(k, doppler, symbol, n) + ici_coeff_exact(-k, doppler, symbol, n))
        .sum();
    (all - near) / all
}

/// Truncation window and coefficient choice for the aggregate ICI.
#[derive(Debug, Clone, PartialEq)]
pub struct IciSpec {
    /// Offsets `0 < |k| <= window` contribute.
    pub window: usize,
    /// Use the small-Doppler approximation instead of the closed form.
    pub use_approx: bool,
    n: usize,
    /// `1 / (N^2 sin^2(pi k / N))` for `k = 1..=window`.
    geometric: Vec<f64>,
}

impl IciSpec {
    pub fn new(window: usize, use_approx: bool, n: usize) -> Result<Self> {
        if window == 0 || 2 * window >= n {
            return Err(Error::InvalidParameter {
                field: "ici_window",
                reason: format!("must lie in [1, N/2), got {window} with N = {n}"),
            });
        }
        let nf = n as f64;
        let geometric = (1..=window)
            .map(|k| {
                let s = nf * (PI * k as f64 / nf).sin();
                1.0 / (s * s)
            })
            .collect();
        Ok(Self {
            window,
            use_approx,
            n,
            geometric,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n
    }

    fn coefficient(&self, k: usize, doppler: f64, symbol: f64) -> f64 {
        if self.use_approx {
            let s = (PI * doppler * symbol).sin();
            s * s * self.geometric[k - 1]
        } else {
            ici_coeff_exact(k as i64, doppler, symbol, self.n)
        }
    }

    /// Coefficients for offsets `-window..=window` without zero.
    pub fn coeff_table(&self, doppler: f64, symbol: f64) -> BTreeMap<i64, f64> {
        let mut table = BTreeMap::new();
        for k in 1..=self.window {
            let c = self.coefficient(k, doppler, symbol);
            table.insert(k as i64, c);
            table.insert(-(k as i64), c);
        }
        table
    }

    /// Interference collected by an interior subcarrier from its window,
    /// `sum_{0 < |k| <= W} E|H(p+k, p)|^2`.
    pub fn window_sum(&self, doppler: f64, symbol: f64) -> f64 {
        (1..=self.window)
            .map(|k| 2.0 * self.coefficient(k, doppler, symbol))
            .sum()
    }
}

/// Aggregate in-band ICI of one scheduling period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IciPower {
    /// `P / (d^alpha N0 B) * window_sum`: scales `eta` in the SINR denominator.
    pub gamma_ici0: f64,
    /// Per-subcarrier ICI power in W at `eta = 1` for the given `beta`; the
    /// actual power is `eta` times this.
    pub p_ici_watts: f64,
}

/// ICI factor of a period, independent of the subcarrier share. Every relay
/// subcarrier is treated as interior, so the factor is the same for all `beta`.
pub fn period_gamma_ici0(period: &Period, params: &SystemParams, spec: &IciSpec) -> f64 {
    let snr_scale = params.power / (period.pathloss * params.noise_power());
    snr_scale * spec.window_sum(period.doppler, params.symbol_duration())
}

/// ICI of a period for an allocation of `beta * N` relay subcarriers. The
/// interference from subcarriers owned by local users is not included.
pub fn gamma_ici0(
    period: &Period,
    beta: f64,
    params: &SystemParams,
    spec: &IciSpec,
) -> Result<IciPower> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter {
            field: "beta",
            reason: format!("must lie in (0, 1], got {beta}"),
        });
    }
    let available = beta * params.n_subcarriers as f64;
    if spec.window as f64 > available {
        return Err(Error::WindowExceedsAllocation {
            window: spec.window,
            available,
        });
    }
    let gamma = period_gamma_ici0(period, params, spec);
    Ok(IciPower {
        gamma_ici0: gamma,
        p_ici_watts: gamma * params.noise_power() / available,
    })
}

/// Per-subcarrier ICI split by origin, in W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IciBreakdown {
    /// From the other relay subcarriers.
    pub in_band: f64,
    /// From subcarriers owned by local users.
    pub cross_band: f64,
}

/// Diagnostic: exact ICI on relay subcarrier `p` when the relay owns the
/// contiguous block `[0, round(beta N))` with power `eta P` and local users
/// own the rest with `(1 - eta) P`, both spread evenly. Uses the closed-form
/// coefficients over all offsets, with no window.
pub fn ici_breakdown(
    p: usize,
    beta: f64,
    eta: f64,
    period: &Period,
    params: &SystemParams,
) -> Result<IciBreakdown> {
    let n = params.n_subcarriers;
    let owned = (beta * n as f64).round() as usize;
    if owned == 0 || p >= owned {
        return Err(Error::InvalidParameter {
            field: "p",
            reason: format!("subcarrier {p} is not among the {owned} relay subcarriers"),
        });
    }
    let symbol = params.symbol_duration();
    let coeff = |q: usize| ici_coeff_exact(q as i64 - p as i64, period.doppler, symbol, n);
    let relay_power = eta * params.power / owned as f64;
    let in_band: f64 = (0..owned).filter(|&q| q != p).map(coeff).sum::<f64>() * relay_power;
    let cross_band = if owned < n {
        let user_power = (1.0 - eta) * params.power / (n - owned) as f64;
        (owned..n).map(coeff).sum::<f64>() * user_power
    } else {
        0.0
    };
    Ok(IciBreakdown {
        in_band: in_band / period.pathloss,
        cross_band: cross_band / period.pathloss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::mr_diag_gain_mean;
    use crate::scenario::derive_trajectory;
    use proptest::prelude::*;

    const N: usize = 512;
    const T: f64 = 512.0 / 5.0e6;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-15
    }

    #[test]
    fn no_doppler_is_diagonal() {
        for k in [1, 2, 7, 255, 256, -3] {
            assert!(ici_coeff_sum(k, 0.0, T, N).abs() < 1e-15);
            assert_eq!(ici_coeff_exact(k, 0.0, T, N), 0.0);
            assert_eq!(ici_coeff_approx(k, 0.0, T, N).unwrap(), 0.0);
        }
        assert!((ici_coeff_sum(0, 0.0, T, N) - 1.0).abs() < 1e-14);
        assert_eq!(ici_coeff_exact(0, 0.0, T, N), 1.0);
    }

    #[test]
    fn closed_form_matches_sum() {
        let fd = 0.1 / T;
        let s = ici_coeff_sum(1, fd, T, N);
        let e = ici_coeff_exact(1, fd, T, N);
        assert!(close(s, e, 1e-10), "{s} vs {e}");
        let diag = ici_coeff_exact(0, fd, T, N);
        assert!(close(diag, mr_diag_gain_mean(fd, T, N), 1e-12));
        assert!((ici_coeff_exact(0, 1e-13, T, N) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn approximation_examples() {
        let fd = 0.1024 / T;
        let a = ici_coeff_approx(1, fd, T, N).unwrap();
        // dropping f_D T / N from the denominators costs about 3 (f_D T / k)^2
        for k in 1..=10 {
            let approx = ici_coeff_approx(k, fd, T, N).unwrap();
            let exact = ici_coeff_exact(k, fd, T, N);
            let err = (exact - approx) / exact;
            let predicted = 3.0 * (0.1024 / k as f64).powi(2);
            assert!((err - predicted).abs() < 0.05 * predicted, "k={k}: {err}");
            if k >= 2 {
                assert!(close(approx, exact, 0.01));
            }
        }
        let r = ici_coeff_approx(5, fd, T, N).unwrap() / a;
        let want = (PI / N as f64).sin().powi(2) / (5.0 * PI / N as f64).sin().powi(2);
        assert!(close(r, want, 1e-12));
        assert!((r - 1.0 / 25.0).abs() < 1e-3);
        assert_eq!(
            ici_coeff_approx(0, fd, T, N),
            Err(Error::DiagonalApproximation(0))
        );
        assert_eq!(
            ici_coeff_approx(512, fd, T, N),
            Err(Error::DiagonalApproximation(0))
        );
        assert!(matches!(
            ici_coeff_approx(1, 0.25 / T, T, N),
            Err(Error::DopplerTooLarge(_))
        ));
    }

    #[test]
    fn approximation_decreases_with_offset() {
        let fd = 0.1 / T;
        let mut prev = f64::INFINITY;
        for k in 1..=(N as i64 / 2) {
            let c = ici_coeff_approx(k, fd, T, N).unwrap();
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn power_is_conserved() {
        for fdt in [0.0, 0.03, 0.1003, 0.4, 1.7] {
            for n in [8usize, 64, 512] {
                let total: f64 = (0..n as i64).map(|k| ici_coeff_sum(k, fdt, 1.0, n)).sum();
                assert!((total - 1.0).abs() < 1e-8, "fdT={fdt} N={n}: {total}");
            }
        }
    }

    #[test]
    fn tail_beyond_five_offsets() {
        // Off-diagonal mass outside |k| <= 5 is close to 11% for N = 512.
        let fd = 0.1003 / T;
        let all: f64 = (1..N as i64).map(|k| ici_coeff_exact(k, fd, T, N)).sum();
        let near: f64 = (1..=5).map(|k| 2.0 * ici_coeff_exact(k, fd, T, N)).sum();
        let tail = (all - near) / all;
        assert!(tail > 0.10 && tail < 0.12, "{tail}");
    }

    #[test]
    fn window_validation() {
        assert!(IciSpec::new(0, true, N).is_err());
        assert!(IciSpec::new(256, true, N).is_err());
        let spec = IciSpec::new(5, true, N).unwrap();
        let table = spec.coeff_table(900.0, T);
        assert_eq!(table.len(), 10);
        for k in 1..=5 {
            assert_eq!(table[&k], table[&-k]);
            assert!(table[&k] >= 0.0);
        }
    }

    #[test]
    fn period_ici_factor() {
        let params = SystemParams::default();
        let traj = derive_trajectory(&params).unwrap();
        let spec = IciSpec::new(5, true, params.n_subcarriers).unwrap();
        let centre = traj.period(0).unwrap();
        assert_eq!(
            gamma_ici0(centre, 0.5, &params, &spec).unwrap().gamma_ici0,
            0.0
        );
        let mut prev = 0.0;
        let mut peak = 0;
        for i in 1..=traj.half_periods as i64 {
            let a = gamma_ici0(traj.period(i).unwrap(), 0.5, &params, &spec).unwrap();
            let b = gamma_ici0(traj.period(-i).unwrap(), 0.5, &params, &spec).unwrap();
            assert_eq!(a, b);
            // with the path loss held fixed, the factor grows with |f_D|
            let fixed = Period {
                pathloss: centre.pathloss,
                ..*traj.period(i).unwrap()
            };
            let f = period_gamma_ici0(&fixed, &params, &spec);
            assert!(f > prev, "not increasing at i = {i}");
            prev = f;
            if a.gamma_ici0
                > gamma_ici0(traj.period(peak.max(1)).unwrap(), 0.5, &params, &spec)
                    .unwrap()
                    .gamma_ici0
            {
                peak = i;
            }
        }
        // along the real trajectory, f_D^2 / d^alpha peaks where (v t / d_v)^2 = 2/3
        assert_eq!(peak, 8);
        assert!(matches!(
            gamma_ici0(centre, 4.0 / 512.0, &params, &spec),
            Err(Error::WindowExceedsAllocation { .. })
        ));
    }

    #[test]
    fn ici_watts_are_consistent_with_breakdown() {
        let params = SystemParams::default();
        let traj = derive_trajectory(&params).unwrap();
        let edge = traj.period(49).unwrap();
        let exact = IciSpec::new(5, false, params.n_subcarriers).unwrap();
        let (beta, eta) = (0.5, 0.6);
        let ici = gamma_ici0(edge, beta, &params, &exact).unwrap();
        let parts = ici_breakdown(128, beta, eta, edge, &params).unwrap();
        // an interior subcarrier collects the window part and the ~11% tail
        let windowed = eta * ici.p_ici_watts;
        assert!(parts.in_band > windowed && parts.in_band < 1.2 * windowed);
        // users' subcarriers are far from an interior relay subcarrier
        assert!(parts.cross_band < 0.01 * parts.in_band);
        let boundary = ici_breakdown(255, beta, eta, edge, &params).unwrap();
        assert!(boundary.cross_band > parts.cross_band);
    }

    proptest! {
        #[test]
        fn closed_form_identity(k in -511i64..512, fdt in 0.0f64..0.4, pick in 0usize..3) {
            let n = [8usize, 64, 512][pick];
            let k = k % n as i64;
            let s = ici_coeff_sum(k, fdt, 1.0, n);
            let e = ici_coeff_exact(k, fdt, 1.0, n);
            prop_assert!(close(s, e, 1e-10), "k={} fdt={} n={}: {} vs {}", k, fdt, n, s, e);
        }
    }
}
