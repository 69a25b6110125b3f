//! Run configuration from `key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; missing keys keep their defaults, unknown keys are rejected.
//! Lists are comma-separated; user groups are written `distance:count`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::{normalize_profile, DelayProfile, Tap};
use crate::scenario::{SystemParams, UserGroup, UserPopulation};
use crate::study::{ModelOptions, Study};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Io { path: String, reason: String },

    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },

    #[error("`{key}`: cannot parse `{value}` as {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },

    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

type Parsed<T> = std::result::Result<T, ConfigError>;

/// Every accepted key, in the order used for the resolved-config line.
pub const KEYS: &[&str] = &[
    "bandwidth",
    "n_subcarriers",
    "power",
    "noise_density",
    "carrier_freq",
    "velocity",
    "pathloss_exponent",
    "cell_radius",
    "vertical_distance",
    "n_users",
    "user_groups",
    "sched_period",
    "slot",
    "rho",
    "beta_step",
    "lightspeed",
    "cp_duration",
    "tap_delays_us",
    "tap_powers",
    "delay_sigma_us",
    "ici_window",
    "ici_approx",
    "doppler_attenuation",
    "with_ici",
    "seed",
    "grid_resolution",
    "ici_trials",
    "sched_slots",
];

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub population: UserPopulation,
    /// Raw (unnormalized) delay profile.
    pub profile: DelayProfile,
    pub options: ModelOptions,
    /// Keep the ICI term in the relay objective.
    pub with_ici: bool,
    pub seed: u64,
    pub grid_resolution: f64,
    /// Channel realizations for the ICI Monte-Carlo check.
    pub ici_trials: usize,
    /// Slots for the scheduling Monte-Carlo check.
    pub sched_slots: usize,
    /// Set when `user_groups` was given explicitly.
    explicit_groups: bool,
    explicit_users: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            population: UserPopulation::default(),
            profile: DelayProfile::default(),
            options: ModelOptions::default(),
            with_ici: true,
            seed: 1,
            grid_resolution: 1e-3,
            ici_trials: 10_000,
            sched_slots: 10_000,
            explicit_groups: false,
            explicit_users: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Parsed<T> {
    value.parse().map_err(|_| ConfigError::TypeMismatch {
        key: key.into(),
        value: value.into(),
        expected,
    })
}

fn parse_flag(key: &str, value: &str) -> Parsed<bool> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::TypeMismatch {
            key: key.into(),
            value: value.into(),
            expected: "a flag (on/off)",
        }),
    }
}

fn parse_list(key: &str, value: &str) -> Parsed<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse(key, v.trim(), "a comma-separated list of numbers"))
        .collect()
}

fn parse_groups(key: &str, value: &str) -> Parsed<Vec<UserGroup>> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            let (d, c) = item
                .split_once(':')
                .ok_or_else(|| ConfigError::TypeMismatch {
                    key: key.into(),
                    value: item.into(),
                    expected: "distance:count",
                })?;
            Ok(UserGroup {
                distance: parse(key, d.trim(), "a distance in m")?,
                count: parse(key, c.trim(), "a user count")?,
            })
        })
        .collect()
}

/// Shortest round-trip decimal, switching to exponent notation for very
/// small or large magnitudes.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn join(values: impl Iterator<Item = String>) -> String {
    values.collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Defaults overridden by the `key = value` lines of `text`.
    pub fn parse_str(text: &str) -> Parsed<Self> {
        let mut config = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                text: line.into(),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.resolve()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Parsed<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse_str(&text)
    }

    /// Overrides one key. Call [`RunConfig::resolve`] after the last change.
    pub fn set(&mut self, key: &str, value: &str) -> Parsed<()> {
        let p = &mut self.params;
        let real = "a number";
        let count = "a nonnegative integer";
        match key {
            "bandwidth" => p.bandwidth = parse(key, value, real)?,
            "n_subcarriers" => p.n_subcarriers = parse(key, value, count)?,
            "power" => p.power = parse(key, value, real)?,
            "noise_density" => p.noise_density = parse(key, value, real)?,
            "carrier_freq" => p.carrier_freq = parse(key, value, real)?,
            "velocity" => p.velocity = parse(key, value, real)?,
            "pathloss_exponent" => p.pathloss_exponent = parse(key, value, real)?,
            "cell_radius" => p.cell_radius = parse(key, value, real)?,
            "vertical_distance" => p.vertical_distance = parse(key, value, real)?,
            "n_users" => {
                p.n_users = parse(key, value, count)?;
                self.explicit_users = true;
            }
            "user_groups" => {
                self.population = UserPopulation {
                    groups: parse_groups(key, value)?,
                };
                self.explicit_groups = true;
            }
            "sched_period" => p.sched_period = parse(key, value, real)?,
            "slot" => p.slot = parse(key, value, real)?,
            "rho" => p.rho = parse(key, value, real)?,
            "beta_step" => p.beta_step = parse(key, value, real)?,
            "lightspeed" => p.lightspeed = parse(key, value, real)?,
            "cp_duration" => p.cp_duration = parse(key, value, real)?,
            "tap_delays_us" => {
                let delays = parse_list(key, value)?;
                self.profile.taps = delays
                    .iter()
                    .enumerate()
                    .map(|(l, d)| Tap {
                        delay: d * 1e-6,
                        power: self.profile.taps.get(l).map_or(f64::NAN, |t| t.power),
                    })
                    .collect();
            }
            "tap_powers" => {
                let powers = parse_list(key, value)?;
                self.profile.taps = powers
                    .iter()
                    .enumerate()
                    .map(|(l, &power)| Tap {
                        delay: self.profile.taps.get(l).map_or(f64::NAN, |t| t.delay),
                        power,
                    })
                    .collect();
            }
            "delay_sigma_us" => self.profile.sigma = parse::<f64>(key, value, real)? * 1e-6,
            "ici_window" => self.options.ici_window = parse(key, value, count)?,
            "ici_approx" => self.options.ici_approx = parse_flag(key, value)?,
            "doppler_attenuation" => self.options.doppler_attenuation = parse_flag(key, value)?,
            "with_ici" => self.with_ici = parse_flag(key, value)?,
            "seed" => self.seed = parse(key, value, count)?,
            "grid_resolution" => self.grid_resolution = parse(key, value, real)?,
            "ici_trials" => self.ici_trials = parse(key, value, count)?,
            "sched_slots" => self.sched_slots = parse(key, value, count)?,
            _ => return Err(ConfigError::UnknownKey { key: key.into() }),
        }
        Ok(())
    }

    /// Reconciles dependent fields and validates everything.
    pub fn resolve(&mut self) -> Parsed<()> {
        if self.explicit_groups && !self.explicit_users {
            self.params.n_users = self.population.total();
        } else if !self.explicit_groups && self.population.total() != self.params.n_users {
            let distances: Vec<f64> = self.population.groups.iter().map(|g| g.distance).collect();
            self.population = UserPopulation::equal_groups(&distances, self.params.n_users);
        }
        self.explicit_groups = false;
        self.explicit_users = false;
        if self.profile.taps.iter().any(|t| t.delay.is_nan()) {
            return Err(invalid("tap_delays_us", "needs one delay per tap power"));
        }
        if self.profile.taps.iter().any(|t| t.power.is_nan()) {
            return Err(invalid("tap_powers", "needs one power per tap delay"));
        }
        if !(self.grid_resolution > 0.0 && self.grid_resolution <= 0.1) {
            return Err(invalid("grid_resolution", "must lie in (0, 0.1]"));
        }
        if self.ici_trials < 2 {
            return Err(invalid("ici_trials", "need at least 2 trials"));
        }
        if self.sched_slots < 2 {
            return Err(invalid("sched_slots", "need at least 2 slots"));
        }
        normalize_profile(&self.profile).map_err(from_model)?;
        self.study().map(|_| ())
    }

    /// Builds the scenario, validating parameters.
    pub fn study(&self) -> Parsed<Study> {
        Study::new(self.params.clone(), self.population.clone(), self.options).map_err(from_model)
    }

    /// Unit-power delay profile.
    pub fn normalized_profile(&self) -> Parsed<DelayProfile> {
        normalize_profile(&self.profile).map_err(from_model)
    }

    /// `value` of `key` as written in the resolved-config line.
    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.params;
        let flag = |b: bool| if b { "on" } else { "off" }.to_string();
        Some(match key {
            "bandwidth" => format_number(p.bandwidth),
            "n_subcarriers" => p.n_subcarriers.to_string(),
            "power" => format_number(p.power),
            "noise_density" => format_number(p.noise_density),
            "carrier_freq" => format_number(p.carrier_freq),
            "velocity" => format_number(p.velocity),
            "pathloss_exponent" => format_number(p.pathloss_exponent),
            "cell_radius" => format_number(p.cell_radius),
            "vertical_distance" => format_number(p.vertical_distance),
            "n_users" => p.n_users.to_string(),
            "user_groups" => join(
                self.population
                    .groups
                    .iter()
                    .map(|g| format!("{}:{}", format_number(g.distance), g.count)),
            ),
            "sched_period" => format_number(p.sched_period),
            "slot" => format_number(p.slot),
            "rho" => format_number(p.rho),
            "beta_step" => format_number(p.beta_step),
            "lightspeed" => format_number(p.lightspeed),
            "cp_duration" => format_number(p.cp_duration),
            "tap_delays_us" => join(
                self.profile
                    .taps
                    .iter()
                    .map(|t| format_number(t.delay * 1e6)),
            ),
            "tap_powers" => join(self.profile.taps.iter().map(|t| format_number(t.power))),
            "delay_sigma_us" => format_number(self.profile.sigma * 1e6),
            "ici_window" => self.options.ici_window.to_string(),
            "ici_approx" => flag(self.options.ici_approx),
            "doppler_attenuation" => flag(self.options.doppler_attenuation),
            "with_ici" => flag(self.with_ici),
            "seed" => self.seed.to_string(),
            "grid_resolution" => format_number(self.grid_resolution),
            "ici_trials" => self.ici_trials.to_string(),
            "sched_slots" => self.sched_slots.to_string(),
            _ => return None,
        })
    }

    /// One `# config:` line listing every key with its resolved value.
    pub fn comment_line(&self) -> String {
        let mut line = String::from("# config:");
        for key in KEYS {
            let value = self.get(key).unwrap_or_default();
            let _ = write!(line, " {key}={value}");
        }
        line
    }
}

fn invalid(key: &str, reason: &str) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

fn from_model(e: crate::Error) -> ConfigError {
    use crate::Error;
    let key = match &e {
        Error::InvalidParameter { field, .. } => *field,
        Error::EmptyChord { .. } => "vertical_distance",
        Error::NonPositiveDistance(_) => "user_groups",
        Error::EmptyProfile | Error::ZeroPowerProfile => "tap_powers",
        _ => "config",
    };
    ConfigError::Invalid {
        key: key.into(),
        reason: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = RunConfig::parse_str("").unwrap();
        let p = &c.params;
        assert_eq!(p.bandwidth, 5e6);
        assert_eq!(p.n_subcarriers, 512);
        assert_eq!(p.power, 10.0);
        assert_eq!(p.carrier_freq, 3e9);
        assert_eq!(p.velocity, 100.0);
        assert_eq!(p.pathloss_exponent, 3.0);
        assert_eq!(p.noise_density, 6.32e-16);
        assert_eq!(p.cell_radius, 5000.0);
        assert_eq!(p.vertical_distance, 1000.0);
        assert_eq!(p.n_users, 50);
        assert_eq!(p.sched_period, 1.0);
        assert_eq!(p.beta_step, 1e-3);
        assert_eq!(c.profile, DelayProfile::default());
        assert_eq!(c, RunConfig::parse_str("# nothing\n\n").unwrap());
    }

    #[test]
    fn every_key_round_trips() {
        let c = RunConfig::parse_str("rho = 0.3\nuser_groups = 200:3, 4000:2\nici_approx = off")
            .unwrap();
        assert_eq!(c.params.n_users, 5);
        let text: String = KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", c.get(k).unwrap()))
            .collect();
        assert_eq!(RunConfig::parse_str(&text).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("vertical_distance = 6000", "vertical_distance"),
            ("rho = 1.5", "rho"),
            ("power = ten", "power"),
            ("n_users = 7\nuser_groups = 100:5", "user_groups"),
            ("tap_powers = 1,1,1,1,1,1,1", "tap_delays_us"),
            ("ici_window = 0", "ici_window"),
            ("bogus = 1", "bogus"),
        ];
        for (text, field) in cases {
            let err = RunConfig::parse_str(text).unwrap_err();
            assert!(err.to_string().contains(field), "{text}: {err}");
        }
        assert!(matches!(
            RunConfig::parse_str("rho 0.5"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::from_file(Path::new("/nonexistent/run.cfg")),
            Err(ConfigError::Io { .. })
        ));
    }

    #[test]
    fn changing_user_count_regroups_users() {
        let c = RunConfig::parse_str("n_users = 12").unwrap();
        assert_eq!(c.population.total(), 12);
        assert_eq!(c.population.groups.len(), 5);
    }
}
