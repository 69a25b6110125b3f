//! Brute-force Monte-Carlo checks of the analytic models.
//!
//! The relay channel is built from first principles: every tap of the delay
//! profile is a two-path Doppler process with random phases, sampled at the
//! `N` in-block instants and pushed through the receiver DFT. Local-user
//! scheduling is simulated slot by slot. Noise is left out; it enters the
//! analytic models only as a constant.
//!
//! Trials are split into fixed-size chunks, each with its own seeded stream,
//! and chunk results are reduced in chunk order, so results do not depend on
//! the number of worker threads.

use std::f64::consts::{LN_2, PI};
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::channel::DelayProfile;
use crate::rng::{chunk_stream, ids};
use crate::scenario::{SystemParams, UserPopulation};
use crate::{Error, Result};

/// Trials per seeded chunk.
const CHUNK: usize = 256;

/// One tap as a sum of two unit-modulus rays at `+f_D` and `-f_D`:
/// `h(t) = sqrt(power / 2) (e^{j(2 pi f_D t + phi1)} + e^{j(-2 pi f_D t + phi2)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPathTap {
    pub amplitude: f64,
    pub doppler: f64,
    pub phases: (f64, f64),
}

impl TwoPathTap {
    pub fn value(&self, t: f64) -> Complex64 {
        let w = 2.0 * PI * self.doppler * t;
        self.amplitude * (Complex64::cis(w + self.phases.0) + Complex64::cis(-w + self.phases.1))
    }
}

/// Draws the two ray phases uniformly on `[0, 2 pi)`.
pub fn realize_two_path_tap<R: Rng + ?Sized>(power: f64, doppler: f64, rng: &mut R) -> TwoPathTap {
    TwoPathTap {
        amplitude: (0.5 * power).sqrt(),
        doppler,
        phases: (
            rng.random::<f64>() * 2.0 * PI,
            rng.random::<f64>() * 2.0 * PI,
        ),
    }
}

/// One draw of the multipath channel and its DFT-domain matrix restricted to
/// a block of subcarriers.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub taps: Vec<TwoPathTap>,
    pub window: Range<usize>,
    /// `H(n, p)` for `n, p` in `window`, row-major in `n`.
    pub matrix: Vec<Complex64>,
}

impl ChannelRealization {
    /// `H(n, p)` for absolute subcarrier indices inside the window.
    pub fn get(&self, n: usize, p: usize) -> Complex64 {
        let w = self.window.len();
        self.matrix[(n - self.window.start) * w + (p - self.window.start)]
    }
}

/// Per-run constants of [`dft_channel_matrix`] that do not depend on the
/// random phases.
#[derive(Debug, Clone)]
pub struct DftPlan {
    n: usize,
    window: Range<usize>,
    /// Sample instants `k T / N`.
    times: Vec<f64>,
    /// `e^{-j 2 pi n tau_l / T}` per window row `n` and tap `l`.
    tap_rotation: Vec<Vec<Complex64>>,
    /// `e^{j 2 pi m k / N}` for `m = 0..N`, `k = 0..N`, row-major in `m`.
    twiddle: Vec<Complex64>,
    powers: Vec<f64>,
}

impl DftPlan {
    pub fn new(
        profile: &DelayProfile,
        params: &SystemParams,
        window: Range<usize>,
    ) -> Result<Self> {
        let n = params.n_subcarriers;
        if window.is_empty() || window.end > n {
            return Err(Error::InvalidParameter {
                field: "index_window",
                reason: format!("{window:?} must be a non-empty range inside [0, {n})"),
            });
        }
        let symbol = params.symbol_duration();
        let times = (0..n).map(|k| k as f64 * symbol / n as f64).collect();
        let tap_rotation = window
            .clone()
            .map(|row| {
                profile
                    .taps
                    .iter()
                    .map(|tap| Complex64::cis(-2.0 * PI * row as f64 * tap.delay / symbol))
                    .collect()
            })
            .collect();
        let twiddle = (0..n)
            .flat_map(|m| {
                (0..n).map(move |k| Complex64::cis(2.0 * PI * ((m * k) % n) as f64 / n as f64))
            })
            .collect();
        Ok(Self {
            n,
            window,
            times,
            tap_rotation,
            twiddle,
            powers: profile.taps.iter().map(|t| t.power).collect(),
        })
    }

    /// Draws tap phases and evaluates
    /// `H(n, p) = (1/N) sum_k h(k T / N, n / T) e^{j 2 pi (n - p) k / N}`.
    pub fn realize<R: Rng + ?Sized>(&self, doppler: f64, rng: &mut R) -> ChannelRealization {
        let taps: Vec<_> = self
            .powers
            .iter()
            .map(|&p| realize_two_path_tap(p, doppler, rng))
            .collect();
        // tap processes on the sampling lattice
        let samples: Vec<Vec<Complex64>> = taps
            .iter()
            .map(|tap| self.times.iter().map(|&t| tap.value(t)).collect())
            .collect();
        let n = self.n;
        let width = self.window.len();
        let mut matrix = Vec::with_capacity(width * width);
        let mut response = vec![Complex64::new(0.0, 0.0); n];
        for (row, rotation) in self.window.clone().zip(&self.tap_rotation) {
            // time-varying frequency response at subcarrier `row`
            response
                .iter_mut()
                .for_each(|v| *v = Complex64::new(0.0, 0.0));
            for (tap, rot) in samples.iter().zip(rotation) {
                for (v, s) in response.iter_mut().zip(tap) {
                    *v += s * rot;
                }
            }
            for col in self.window.clone() {
                let m = (row + n - col) % n;
                let twiddle = &self.twiddle[m * n..(m + 1) * n];
                let sum: Complex64 = response.iter().zip(twiddle).map(|(h, w)| h * w).sum();
                matrix.push(sum / n as f64);
            }
        }
        ChannelRealization {
            taps,
            window: self.window.clone(),
            matrix,
        }
    }
}

/// One realization of the channel matrix on `window`.
pub fn dft_channel_matrix<R: Rng + ?Sized>(
    profile: &DelayProfile,
    doppler: f64,
    params: &SystemParams,
    window: Range<usize>,
    rng: &mut R,
) -> Result<ChannelRealization> {
    Ok(DftPlan::new(profile, params, window)?.realize(doppler, rng))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self {
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Runs `trials` trials in seeded chunks; `trial` maps a stream to one
/// sample vector. Returns the samples in trial order.
fn chunked<T, F>(seed: u64, stream_id: u64, trials: usize, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_stream(seed, stream_id, c as u64);
            let len = CHUNK.min(trials - c * CHUNK);
            (0..len).map(|_| trial(&mut rng)).collect()
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

/// Empirical `E|H(n, p)|^2` pooled by offset `k = n - p` for `|k| <= max_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct IciMoments {
    pub doppler: f64,
    pub trials: usize,
    /// `(k, estimate)` for `k = -max_offset..=max_offset`.
    pub by_offset: Vec<(i64, Estimate)>,
}

impl IciMoments {
    pub fn offset(&self, k: i64) -> Option<Estimate> {
        self.by_offset
            .iter()
            .find(|(o, _)| *o == k)
            .map(|(_, e)| *e)
    }
}

/// Estimates the ICI second moments on a block of `2 max_offset + 1`
/// subcarriers starting at subcarrier 0. Every pair with the same offset
/// is averaged within a trial; trials are the independent samples.
pub fn mc_ici_moments(
    profile: &DelayProfile,
    doppler: f64,
    params: &SystemParams,
    max_offset: usize,
    trials: usize,
    seed: u64,
) -> Result<IciMoments> {
    let width = 2 * max_offset + 1;
    let plan = DftPlan::new(profile, params, 0..width)?;
    let span = max_offset as i64;
    let samples = chunked(seed, ids::ICI_MOMENTS, trials, |rng| {
        let h = plan.realize(doppler, rng);
        (-span..=span)
            .map(|k| {
                let (mut sum, mut count) = (0.0, 0);
                for n in 0..width as i64 {
                    let p = n - k;
                    if (0..width as i64).contains(&p) {
                        sum += h.get(n as usize, p as usize).norm_sqr();
                        count += 1;
                    }
                }
                sum / count as f64
            })
            .collect::<Vec<_>>()
    });
    let by_offset = (-span..=span)
        .enumerate()
        .map(|(j, k)| {
            let column: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            (k, Estimate::from_samples(&column))
        })
        .collect();
    Ok(IciMoments {
        doppler,
        trials,
        by_offset,
    })
}

/// Largest off-diagonal magnitude over `trials` realizations on `window`.
pub fn max_off_diagonal(
    profile: &DelayProfile,
    doppler: f64,
    params: &SystemParams,
    window: Range<usize>,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let plan = DftPlan::new(profile, params, window.clone())?;
    let peaks = chunked(seed, ids::ZERO_DOPPLER, trials, |rng| {
        let h = plan.realize(doppler, rng);
        let mut peak: f64 = 0.0;
        for n in window.clone() {
            for p in window.clone() {
                if n != p {
                    peak = peak.max(h.get(n, p).norm());
                }
            }
        }
        peak
    });
    Ok(peaks.into_iter().fold(0.0, f64::max))
}

/// Time-averaged local-user sum rate in bit/s under per-slot max-gain
/// scheduling with equal power on every subcarrier.
///
/// Each slot draws a unit-mean exponential gain per user and subcarrier and
/// gives each subcarrier to the user with the largest gain (lowest index on
/// ties). The winner's own path loss is applied afterwards, so selection
/// depends on small-scale fading only.
pub fn mc_sum_capacity(
    params: &SystemParams,
    pop: &UserPopulation,
    slots: usize,
    seed: u64,
) -> Result<Estimate> {
    pop.validate(params)?;
    if slots < 2 {
        return Err(Error::InvalidParameter {
            field: "slots",
            reason: format!("need at least 2 slots, got {slots}"),
        });
    }
    let n = params.n_subcarriers;
    let noise = params.noise_power() / n as f64;
    let per_carrier_power = params.power / n as f64;
    let snr: Vec<f64> = pop
        .user_groups()
        .into_iter()
        .map(|g| {
            per_carrier_power / (pop.groups[g].distance.powf(params.pathloss_exponent) * noise)
        })
        .collect();
    let carrier_bw = params.bandwidth / n as f64;
    let rates = chunked(seed, ids::SUM_CAPACITY, slots, |rng| {
        let mut rate = 0.0;
        for _ in 0..n {
            let (mut best, mut winner) = (f64::NEG_INFINITY, 0);
            for (user, _) in snr.iter().enumerate() {
                let gain: f64 = rng.sample(Exp1);
                if gain > best {
                    best = gain;
                    winner = user;
                }
            }
            rate += (best * snr[winner]).ln_1p();
        }
        rate * carrier_bw / LN_2
    });
    Ok(Estimate::from_samples(&rates))
}
