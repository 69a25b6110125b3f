//! A configured scenario: trajectory, ICI model and rate model, with the SNR
//! factors of every scheduling period.

use crate::capacity::{user_snr_factors, RateModel, RateTarget, SnrFactors};
use crate::channel::mr_diag_gain_mean;
use crate::ici::{period_gamma_ici0, IciSpec};
use crate::scenario::{derive_trajectory, Period, SystemParams, Trajectory, UserPopulation};
use crate::{Error, Result};

/// Modelling switches that are not part of the physical scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// Half-width of the ICI window.
    pub ici_window: usize,
    /// Use the small-Doppler ICI approximation.
    pub ici_approx: bool,
    /// Scale the relay's useful power by the Doppler loss of the diagonal
    /// channel gain.
    pub doppler_attenuation: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            ici_window: 5,
            ici_approx: true,
            doppler_attenuation: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Study {
    pub params: SystemParams,
    pub population: UserPopulation,
    pub options: ModelOptions,
    pub trajectory: Trajectory,
    pub ici: IciSpec,
    pub model: RateModel,
    gamma_m: Vec<f64>,
}

impl Study {
    pub fn new(
        params: SystemParams,
        population: UserPopulation,
        options: ModelOptions,
    ) -> Result<Self> {
        params.validate()?;
        population.validate(&params)?;
        let trajectory = derive_trajectory(&params)?;
        let ici = IciSpec::new(options.ici_window, options.ici_approx, params.n_subcarriers)?;
        let model = RateModel::new(&params, &population)?;
        let gamma_m = user_snr_factors(&params, &population);
        Ok(Self {
            params,
            population,
            options,
            trajectory,
            ici,
            model,
            gamma_m,
        })
    }

    /// SNR factors of `period`.
    pub fn factors(&self, period: &Period) -> SnrFactors {
        let snr = self.params.power / (period.pathloss * self.params.noise_power());
        let attenuation = if self.options.doppler_attenuation {
            mr_diag_gain_mean(
                period.doppler,
                self.params.symbol_duration(),
                self.params.n_subcarriers,
            )
        } else {
            1.0
        };
        SnrFactors {
            gamma0: attenuation * snr,
            gamma_m: self.gamma_m.clone(),
            gamma_ici0: period_gamma_ici0(period, &self.params, &self.ici),
        }
    }

    pub fn period(&self, index: i64) -> Result<&Period> {
        self.trajectory
            .period(index)
            .ok_or(Error::UnknownPeriod(index))
    }

    /// Local-user threshold `rho * C_sum`, with `C_sum` evaluated by the same
    /// rate model the optimizer uses.
    pub fn rate_target(&self, rho: f64) -> Result<RateTarget> {
        let f = self.factors(&self.trajectory.periods[0]);
        RateTarget::new(self.model.c_sum(&f), rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::c_sum;

    #[test]
    fn factors_are_symmetric_and_ici_free_at_the_middle() {
        let study = Study::new(
            SystemParams::default(),
            UserPopulation::default(),
            ModelOptions::default(),
        )
        .unwrap();
        let mid = study.factors(study.period(0).unwrap());
        assert_eq!(mid.gamma_ici0, 0.0);
        for i in 1..=49 {
            let a = study.factors(study.period(i).unwrap());
            let b = study.factors(study.period(-i).unwrap());
            assert!((a.gamma0 - b.gamma0).abs() <= 1e-12 * a.gamma0);
            assert!((a.gamma_ici0 - b.gamma_ici0).abs() <= 1e-12 * a.gamma_ici0);
            assert!(a.gamma0 < mid.gamma0);
        }
    }

    #[test]
    fn threshold_matches_reference_sum_capacity() {
        let params = SystemParams::default();
        let pop = UserPopulation::default();
        let study = Study::new(params.clone(), pop.clone(), ModelOptions::default()).unwrap();
        let fast = study.rate_target(0.5).unwrap();
        let reference = c_sum(&params, &pop).unwrap();
        assert!((fast.c_sum - reference.c_sum).abs() <= 1e-8 * reference.c_sum);
        assert_eq!(fast.r_th, 0.5 * fast.c_sum);
    }
}
