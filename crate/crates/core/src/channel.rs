//! Fading statistics: delay profile, two-path Doppler correlation and the
//! distributions of the per-subcarrier channel gain `|H(p,p)|^2`.
//!
//! Channels are zero-mean complex Gaussian, so a single user's gain is
//! exponential. Local users are scheduled on the strongest of `M` unit-mean
//! gains per subcarrier, whose CDF is `(1 - e^-x)^M`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;

use crate::{Error, Result};

/// One multipath tap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Delay in s.
    pub delay: f64,
    pub power: f64,
}

/// Exponential power-delay profile sampled at discrete taps.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub taps: Vec<Tap>,
    /// Average delay of the continuous profile `e^(-tau/sigma) / sigma`, in s.
    pub sigma: f64,
}

impl Default for DelayProfile {
    /// Six taps 1 µs apart with powers close to `e^(-tau/sigma)`, unnormalized.
    fn default() -> Self {
        let powers = [1.000, 0.368, 0.135, 0.050, 0.018, 0.007];
        let taps = powers
            .iter()
            .enumerate()
            .map(|(l, &power)| Tap {
                delay: l as f64 * 1.0e-6,
                power,
            })
            .collect();
        Self {
            taps,
            sigma: 1.0e-6,
        }
    }
}

impl DelayProfile {
    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.power).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "delay_sigma_us",
                reason: format!("must be positive, got {}", self.sigma),
            });
        }
        for pair in self.taps.windows(2) {
            if pair[1].delay < pair[0].delay {
                return Err(Error::InvalidParameter {
                    field: "tap_delays_us",
                    reason: "tap delays must be nondecreasing".into(),
                });
            }
        }
        if self
            .taps
            .iter()
            .any(|t| t.power < 0.0 || !t.power.is_finite())
        {
            return Err(Error::InvalidParameter {
                field: "tap_powers",
                reason: "tap powers must be finite and nonnegative".into(),
            });
        }
        if self.total_power() <= 0.0 {
            return Err(Error::ZeroPowerProfile);
        }
        Ok(())
    }
}

/// Scales tap powers to unit total power, leaving delays unchanged.
pub fn normalize_profile(raw: &DelayProfile) -> Result<DelayProfile> {
    raw.validate()?;
    let total = raw.total_power();
    Ok(DelayProfile {
        taps: raw
            .taps
            .iter()
            .map(|t| Tap {
                delay: t.delay,
                power: t.power / total,
            })
            .collect(),
        sigma: raw.sigma,
    })
}

/// Time autocorrelation of the two-path Doppler spectrum, `cos(2 pi f_D dt)`.
pub fn time_autocorr(doppler: f64, dt: f64) -> f64 {
    (2.0 * PI * doppler * dt).cos()
}

/// Time-frequency cross covariance of `h(t, f)` for an exponential delay
/// profile with average delay `sigma` and two-path Doppler `f_D`. With
/// `f_D = 0` this is the local-user covariance.
pub fn cross_covariance(sigma: f64, df: f64, dt: f64, doppler: f64) -> Complex64 {
    let a = 2.0 * PI * sigma * df;
    Complex64::new(1.0, a) / (1.0 + a * a) * time_autocorr(doppler, dt)
}

/// Mean diagonal gain `E|H(p,p)|^2 = sin^2(pi f_D T) / (N sin(pi f_D T / N))^2`
/// of a two-path channel after the DFT. Equals 1 without Doppler.
pub fn mr_diag_gain_mean(doppler: f64, symbol: f64, n: usize) -> f64 {
    let x = doppler * symbol;
    if x == 0.0 {
        return 1.0;
    }
    let n = n as f64;
    let ratio = (PI * x).sin() / (n * (PI * x / n).sin());
    ratio * ratio
}

/// Distribution of a channel power gain `|H|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingLaw {
    /// Exponential with the given mean (Rayleigh envelope).
    Exponential { mean: f64 },
    /// Maximum of `users` independent unit-mean exponentials.
    MaxOfExponentials { users: usize },
}

impl FadingLaw {
    pub const UNIT: FadingLaw = FadingLaw::Exponential { mean: 1.0 };

    pub fn mean(&self) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } => mean,
            // E[max] = H_M, the M-th harmonic number
            FadingLaw::MaxOfExponentials { users } => (1..=users).map(|k| 1.0 / k as f64).sum(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            FadingLaw::Exponential { mean } => -(-x / mean).exp_m1(),
            FadingLaw::MaxOfExponentials { users } => (users as f64 * (-(-x).exp_m1()).ln()).exp(),
        }
    }

    /// `1 - cdf(x)`, accurate in the upper tail.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            FadingLaw::Exponential { mean } => (-x / mean).exp(),
            FadingLaw::MaxOfExponentials { users } => {
                -(users as f64 * (-(-x).exp()).ln_1p()).exp_m1()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            FadingLaw::Exponential { mean } => (-x / mean).exp() / mean,
            FadingLaw::MaxOfExponentials { users } => {
                let m = users as f64;
                if users == 1 {
                    return (-x).exp();
                }
                m * (-x).exp() * ((m - 1.0) * (-(-x).exp_m1()).ln()).exp()
            }
        }
    }

    /// Smallest `x` with `cdf(x) >= p`, for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } => -mean * (-p).ln_1p(),
            FadingLaw::MaxOfExponentials { users } => {
                let root = (p.ln() / users as f64).exp();
                -(-root).ln_1p()
            }
        }
    }

    /// `x` with `survival(x) = q`, for `q` in `(0, 1)`.
    pub fn upper_quantile(&self, q: f64) -> f64 {
        match *self {
            FadingLaw::Exponential { mean } => -mean * q.ln(),
            FadingLaw::MaxOfExponentials { users } => {
                let below = -((-q).ln_1p() / users as f64).exp_m1();
                -below.ln()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        match *self {
            FadingLaw::Exponential { mean } => -mean * u.ln(),
            FadingLaw::MaxOfExponentials { users } => {
                // inverse CDF: x = -ln(1 - u^(1/M))
                let root = (u.ln() / users as f64).exp();
                -(-root).ln_1p()
            }
        }
    }
}

/// Draws one gain from `law`.
pub fn sample_gain<R: Rng + ?Sized>(law: &FadingLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

pub fn cdf_gain(law: &FadingLaw, x: f64) -> f64 {
    law.cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn normalize_table_profile() {
        let raw = DelayProfile::default();
        let total = 1.578;
        assert!((raw.total_power() - total).abs() < 1e-12);
        let norm = normalize_profile(&raw).unwrap();
        for (a, b) in raw.taps.iter().zip(&norm.taps) {
            assert_eq!(a.delay, b.delay);
            assert!((b.power - a.power / total).abs() < 1e-15);
        }
        assert!((norm.total_power() - 1.0).abs() < 1e-15);
        // idempotent
        assert_eq!(normalize_profile(&norm).unwrap(), norm);
    }

    #[test]
    fn normalize_small_profiles() {
        let single = DelayProfile {
            taps: vec![Tap {
                delay: 0.0,
                power: 5.0,
            }],
            sigma: 1e-6,
        };
        assert_eq!(normalize_profile(&single).unwrap().taps[0].power, 1.0);
        let two = DelayProfile {
            taps: vec![
                Tap {
                    delay: 0.0,
                    power: 2.0,
                },
                Tap {
                    delay: 1e-6,
                    power: 2.0,
                },
            ],
            sigma: 1e-6,
        };
        let n = normalize_profile(&two).unwrap();
        assert_eq!(n.taps[0].power, 0.5);
        assert_eq!(n.taps[1].power, 0.5);
        let zero = DelayProfile {
            taps: vec![Tap {
                delay: 0.0,
                power: 0.0,
            }],
            sigma: 1e-6,
        };
        assert_eq!(normalize_profile(&zero), Err(Error::ZeroPowerProfile));
        let empty = DelayProfile {
            taps: vec![],
            sigma: 1e-6,
        };
        assert_eq!(normalize_profile(&empty), Err(Error::EmptyProfile));
    }

    #[test]
    fn autocorrelation() {
        assert_eq!(time_autocorr(1000.0, 0.0), 1.0);
        assert!(time_autocorr(1000.0, 0.25e-3).abs() < 1e-15);
        assert_eq!(time_autocorr(0.0, 12.3), 1.0);
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(
            cross_covariance(1e-6, 0.0, 0.0, 500.0),
            Complex64::new(1.0, 0.0)
        );
        let c = cross_covariance(1e-6, 9765.625, 0.0, 0.0);
        let a = 2.0 * PI * 1e-6 * 9765.625;
        assert!((a - 0.0613592).abs() < 1e-6);
        assert!((c.re - 1.0 / (1.0 + a * a)).abs() < 1e-15);
        assert!((c.im - a / (1.0 + a * a)).abs() < 1e-15);
        assert!((1.0 + a * a - 1.003765).abs() < 1e-6);
        assert!(cross_covariance(1e-6, 3e5, 0.25 / 800.0, 800.0).norm() < 1e-15);
    }

    #[test]
    fn covariance_modulus_bounded() {
        for k in 0..200 {
            let df = k as f64 * 3.7e4 - 2.0e6;
            let c = cross_covariance(1e-6, df, 1e-4 * k as f64, 900.0);
            assert!(c.norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn diag_gain() {
        let t = 512.0 / 5.0e6;
        assert_eq!(mr_diag_gain_mean(0.0, t, 512), 1.0);
        let fd = 0.1 / t;
        let g = mr_diag_gain_mean(fd, t, 512);
        let limit = ((0.1 * PI).sin() / (0.1 * PI)).powi(2);
        assert!(g < 1.0);
        assert!((g - limit).abs() < 1e-6);
        // converges to the sinc^2 limit as N grows
        let t_big = 1 << 20;
        let g_big = mr_diag_gain_mean(0.1, 1.0, t_big);
        assert!((g_big - limit).abs() < 1e-12);
        // continuous at zero, decreasing on (0, 0.5)
        assert!((mr_diag_gain_mean(1e-9, 1.0, 512) - 1.0).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 1..50 {
            let g = mr_diag_gain_mean(k as f64 * 0.01, 1.0, 512);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn law_examples() {
        assert_eq!(FadingLaw::UNIT.cdf(0.0), 0.0);
        let max50 = FadingLaw::MaxOfExponentials { users: 50 };
        let want = 0.5f64.powi(50);
        assert!((max50.cdf(2.0f64.ln()) - want).abs() < 1e-12 * want);
        let max1 = FadingLaw::MaxOfExponentials { users: 1 };
        assert_eq!(max1.mean(), FadingLaw::UNIT.mean());
        for x in [0.01, 0.5, 2.0, 10.0] {
            assert!((max1.cdf(x) - FadingLaw::UNIT.cdf(x)).abs() < 1e-15);
            assert!((max1.pdf(x) - FadingLaw::UNIT.pdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn quantiles_invert_cdf() {
        for law in [
            FadingLaw::Exponential { mean: 2.5 },
            FadingLaw::MaxOfExponentials { users: 50 },
            FadingLaw::MaxOfExponentials { users: 3 },
        ] {
            for p in [1e-20, 1e-6, 0.3, 0.9] {
                let x = law.quantile(p);
                assert!((law.cdf(x) - p).abs() <= 1e-9 * p, "{law:?} p={p}");
                let y = law.upper_quantile(p);
                assert!((law.survival(y) - p).abs() <= 1e-9 * p, "{law:?} q={p}");
            }
        }
    }

    fn ks_statistic(law: &FadingLaw, n: usize, seed: u64) -> f64 {
        let mut rng = stream(seed, 0);
        let mut xs: Vec<f64> = (0..n).map(|_| sample_gain(law, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf_gain(law, x);
                (c - i as f64 / n as f64)
                    .abs()
                    .max((c - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn samples_follow_cdf() {
        for law in [FadingLaw::UNIT, FadingLaw::MaxOfExponentials { users: 50 }] {
            let d = ks_statistic(&law, 100_000, 11);
            assert!(d < 0.01, "{law:?}: KS statistic {d}");
        }
    }
}
