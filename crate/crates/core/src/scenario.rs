//! Cell geometry, train trajectory, path loss and per-period Doppler shift.
//!
//! The railway runs in a straight line at `vertical_distance` from the base
//! station. Time zero is the closest approach; the train is inside the cell
//! for `[-T_s/2, T_s/2]`, which is cut into `2I + 1` scheduling periods.
//! Doppler is evaluated once per period at `t = i * tau_l` and held constant.

use crate::{Error, Result};

/// Scalar system constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// System bandwidth `B` in Hz.
    pub bandwidth: f64,
    /// Number of OFDM subcarriers `N`.
    pub n_subcarriers: usize,
    /// Base-station transmit power `P` in W.
    pub power: f64,
    /// Noise power spectral density `N0` in W/Hz.
    pub noise_density: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Train velocity in m/s.
    pub velocity: f64,
    pub pathloss_exponent: f64,
    /// Cell radius `R` in m.
    pub cell_radius: f64,
    /// Perpendicular distance `d_v` from the base station to the railway, m.
    pub vertical_distance: f64,
    /// Number of local users `M`.
    pub n_users: usize,
    /// Scheduling period `tau_l` in s.
    pub sched_period: f64,
    /// Slot length `tau_s` in s. Carried for completeness; no formula uses it.
    pub slot: f64,
    /// Local-user rate threshold as a fraction of their full-resource sum capacity.
    pub rho: f64,
    /// Lattice step of the subcarrier-share sweep.
    pub beta_step: f64,
    pub lightspeed: f64,
    /// Cyclic-prefix length in s. Not discounted from capacity.
    pub cp_duration: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let bandwidth = 5.0e6;
        let n_subcarriers = 512;
        Self {
            bandwidth,
            n_subcarriers,
            power: 10.0,
            noise_density: 6.32e-16,
            carrier_freq: 3.0e9,
            velocity: 100.0,
            pathloss_exponent: 3.0,
            cell_radius: 5000.0,
            vertical_distance: 1000.0,
            n_users: 50,
            sched_period: 1.0,
            slot: 1.0e-3,
            rho: 0.5,
            beta_step: 1.0e-3,
            lightspeed: 3.0e8,
            cp_duration: n_subcarriers as f64 / bandwidth / 8.0,
        }
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}

impl SystemParams {
    /// Useful OFDM symbol duration `T = N / B`.
    pub fn symbol_duration(&self) -> f64 {
        self.n_subcarriers as f64 / self.bandwidth
    }

    /// Subcarrier spacing `B / N`.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.n_subcarriers as f64
    }

    /// Total noise power over the band, `N0 * B`.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    /// Maximum Doppler shift `v * f_c / c`.
    pub fn max_doppler(&self) -> f64 {
        self.velocity * self.carrier_freq / self.lightspeed
    }

    pub fn validate(&self) -> Result<()> {
        positive("bandwidth", self.bandwidth)?;
        positive("power", self.power)?;
        positive("noise_density", self.noise_density)?;
        positive("carrier_freq", self.carrier_freq)?;
        positive("velocity", self.velocity)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;
        positive("cell_radius", self.cell_radius)?;
        positive("vertical_distance", self.vertical_distance)?;
        positive("sched_period", self.sched_period)?;
        positive("slot", self.slot)?;
        positive("lightspeed", self.lightspeed)?;
        positive("cp_duration", self.cp_duration)?;
        if self.n_subcarriers < 2 {
            return Err(Error::InvalidParameter {
                field: "n_subcarriers",
                reason: format!("need at least 2 subcarriers, got {}", self.n_subcarriers),
            });
        }
        if self.n_users == 0 {
            return Err(Error::InvalidParameter {
                field: "n_users",
                reason: "need at least one local user".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter {
                field: "rho",
                reason: format!("must lie in [0, 1], got {}", self.rho),
            });
        }
        if !(self.beta_step > 0.0 && self.beta_step < 1.0) {
            return Err(Error::InvalidParameter {
                field: "beta_step",
                reason: format!("must lie in (0, 1), got {}", self.beta_step),
            });
        }
        if self.vertical_distance >= self.cell_radius {
            return Err(Error::EmptyChord {
                vertical: self.vertical_distance,
                radius: self.cell_radius,
            });
        }
        Ok(())
    }
}

/// A set of local users at the same distance from the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGroup {
    pub distance: f64,
    pub count: usize,
}

/// Local users, grouped by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPopulation {
    pub groups: Vec<UserGroup>,
}

impl Default for UserPopulation {
    /// 50 users in five equal groups from 100 m to the cell edge.
    fn default() -> Self {
        Self::equal_groups(&[100.0, 1325.0, 2550.0, 3775.0, 5000.0], 50)
    }
}

impl UserPopulation {
    /// Splits `total` users as evenly as possible across `distances`; earlier
    /// groups take the remainder.
    pub fn equal_groups(distances: &[f64], total: usize) -> Self {
        let n = distances.len().max(1);
        let groups = distances
            .iter()
            .enumerate()
            .map(|(g, &distance)| UserGroup {
                distance,
                count: total / n + usize::from(g < total % n),
            })
            .collect();
        Self { groups }
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// Group index of every user, in user order.
    pub fn user_groups(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(g, grp)| std::iter::repeat_n(g, grp.count))
            .collect()
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidParameter {
                field: "user_groups",
                reason: "no user groups".into(),
            });
        }
        for g in &self.groups {
            if !(g.distance > 0.0 && g.distance <= params.cell_radius) {
                return Err(Error::InvalidParameter {
                    field: "user_groups",
                    reason: format!(
                        "group distance {} m must lie in (0, {}]",
                        g.distance, params.cell_radius
                    ),
                });
            }
        }
        if self.total() != params.n_users {
            return Err(Error::InvalidParameter {
                field: "user_groups",
                reason: format!(
                    "group counts sum to {} but n_users is {}",
                    self.total(),
                    params.n_users
                ),
            });
        }
        Ok(())
    }
}

/// One scheduling period of the relay's pass through the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Period {
    /// Period index `i` in `[-I, I]`.
    pub index: i64,
    /// Period start `i * tau_l`, seconds from the closest approach.
    pub time: f64,
    /// Relay to base-station distance in m.
    pub mr_distance: f64,
    /// Linear path loss `d^alpha`.
    pub pathloss: f64,
    /// Doppler shift in Hz; its sign follows the sign of `index`.
    pub doppler: f64,
}

/// The relay's pass through the cell, one entry per scheduling period.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Length of railway inside the cell, `2 sqrt(R^2 - d_v^2)`.
    pub chord_length: f64,
    /// Time spent inside the cell.
    pub dwell: f64,
    /// Number of periods on each side of the closest approach, `I`.
    pub half_periods: usize,
    /// Periods ordered by index from `-I` to `I`.
    pub periods: Vec<Period>,
}

impl Trajectory {
    pub fn period(&self, index: i64) -> Option<&Period> {
        let offset = index + self.half_periods as i64;
        usize::try_from(offset)
            .ok()
            .and_then(|o| self.periods.get(o))
    }

    /// Position of period `index` in [`Trajectory::periods`].
    pub fn position(&self, index: i64) -> Result<usize> {
        let offset = index + self.half_periods as i64;
        usize::try_from(offset)
            .ok()
            .filter(|&o| o < self.periods.len())
            .ok_or(Error::UnknownPeriod(index))
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.periods.iter().map(|p| p.index)
    }
}

/// Linear path loss `d^alpha` (`10 alpha log10 d` in dB).
pub fn pathloss_linear(distance: f64, alpha: f64) -> Result<f64> {
    if !distance.is_finite() || distance <= 0.0 {
        return Err(Error::NonPositiveDistance(distance));
    }
    Ok(distance.powf(alpha))
}

/// Doppler shift at time `t`: `(v f_c / c) * v t / sqrt(d_v^2 + (v t)^2)`.
pub fn doppler_at(params: &SystemParams, t: f64) -> f64 {
    let along = params.velocity * t;
    let distance = params.vertical_distance.hypot(along);
    params.max_doppler() * along / distance
}

pub fn derive_trajectory(params: &SystemParams) -> Result<Trajectory> {
    params.validate()?;
    let (r, dv) = (params.cell_radius, params.vertical_distance);
    let chord_length = 2.0 * (r * r - dv * dv).sqrt();
    let dwell = chord_length / params.velocity;
    let half_periods = (dwell / (2.0 * params.sched_period)).ceil() as usize;
    let periods = (-(half_periods as i64)..=half_periods as i64)
        .map(|index| {
            let time = index as f64 * params.sched_period;
            let mr_distance = dv.hypot(params.velocity * time);
            let pathloss = pathloss_linear(mr_distance, params.pathloss_exponent)?;
            Ok(Period {
                index,
                time,
                mr_distance,
                pathloss,
                doppler: doppler_at(params, time),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        chord_length,
        dwell,
        half_periods,
        periods,
    })
}
