//! Seeded Monte Carlo simulation of the distance chain `|X_n|`.
//!
//! # Random streams
//!
//! Every path draws from its own ChaCha8 stream (`rand_chacha` 0.9): the key
//! comes from `ChaCha8Rng::seed_from_u64(master_seed)` and the 64-bit stream
//! id is the path index. A path's randomness therefore depends only on
//! `(master_seed, path_index)`, and results are bit-identical however the
//! paths are spread across threads. Counts are merged with integer addition,
//! which is associative.
//!
//! # Skipping safe stretches
//!
//! From level `L ≥ 2` the next `L - 1` steps cannot reach the root, so they
//! are sampled in one draw as `Binomial(L - 1, p_up)` up-moves. The jump
//! never crosses a step the caller observes (the horizon, or the step at
//! which `p^(n)` is estimated), so the sampled law of the chain at those
//! times is unchanged while long excursions cost `O(log horizon)` draws.
//!
//! # Truncation
//!
//! Paths still away from the root at `max_steps` count as "no return". The
//! return-probability estimate thus targets `P(τ⁺ ≤ max_steps)`, a lower
//! bound on `P(τ⁺ < ∞)`. The gap is `Σ_{2n > max_steps} f^(2n)`, which decays
//! like `ρ^(max_steps)` up to polynomial factors in the transient regime and
//! only like `max_steps^(-1/2)` at and above the critical bias.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{radial_kernel, WalkParams};

/// Paths per parallel work item.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("step {0} is odd; the walk is at the root only at even steps")]
    OddStep(u64),
    #[error("step {step} lies beyond the horizon {horizon}")]
    BeyondHorizon { step: u64, horizon: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: WalkParams,
    pub num_paths: u64,
    /// Truncation horizon, even and at least 2.
    pub max_steps: u64,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn new(
        params: WalkParams,
        num_paths: u64,
        max_steps: u64,
        master_seed: u64,
    ) -> Result<Self, SimError> {
        let config = SimConfig {
            params,
            num_paths,
            max_steps,
            master_seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.num_paths == 0 {
            return Err(SimError::InvalidConfig(
                "num_paths must be at least 1".into(),
            ));
        }
        if self.max_steps < 2 || self.max_steps % 2 == 1 {
            return Err(SimError::InvalidConfig(format!(
                "max_steps must be even and at least 2, got {}",
                self.max_steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub num_paths: u64,
    pub truncated_fraction: f64,
    pub seed: u64,
}

impl McEstimate {
    fn binomial(hits: u64, num_paths: u64, truncated_fraction: f64, seed: u64) -> Self {
        let n = num_paths as f64;
        let p = hits as f64 / n;
        McEstimate {
            estimate: p,
            std_error: (p * (1.0 - p) / n).sqrt(),
            num_paths,
            truncated_fraction,
            seed,
        }
    }

    /// `(estimate - reference) / std_error`; 0 when both sides agree with
    /// zero standard error, infinite when they disagree with zero error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.estimate - reference;
        if self.std_error == 0.0 {
            return if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(diff)
            };
        }
        diff / self.std_error
    }
}

/// First-return times of the simulated paths.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstReturnSim {
    /// Returns per (even) step count; steps without returns are absent.
    pub histogram: BTreeMap<u64, u64>,
    /// Estimate of `P(τ⁺ ≤ max_steps)`.
    pub return_estimate: McEstimate,
}

impl FirstReturnSim {
    /// Estimate of `f^(step)(o,o)` from the histogram.
    pub fn first_return_at(&self, step: u64) -> McEstimate {
        let est = &self.return_estimate;
        let hits = self.histogram.get(&step).copied().unwrap_or(0);
        McEstimate::binomial(hits, est.num_paths, est.truncated_fraction, est.seed)
    }

    pub fn returned(&self) -> u64 {
        self.histogram.values().sum()
    }
}

struct Walker {
    p_up: f64,
    rng: ChaCha8Rng,
}

impl Walker {
    fn step_from_one(&mut self) -> u64 {
        if self.rng.random::<f64>() < self.p_up {
            2
        } else {
            0
        }
    }

    /// Moves `k` steps from `level`, which must exceed `k`.
    fn jump(&mut self, level: u64, k: u64) -> u64 {
        debug_assert!(level > k);
        let ups = Binomial::new(k, self.p_up)
            .expect("p_up is a probability")
            .sample(&mut self.rng);
        level + 2 * ups - k
    }

    /// Step of the first return to the root, if it happens by `horizon`.
    fn first_return(&mut self, horizon: u64) -> Option<u64> {
        let (mut level, mut t) = (1u64, 1u64);
        while t < horizon {
            let remaining = horizon - t;
            if level > remaining {
                return None;
            }
            if level == 1 {
                level = self.step_from_one();
                t += 1;
                if level == 0 {
                    return Some(t);
                }
            } else {
                let k = (level - 1).min(remaining);
                level = self.jump(level, k);
                t += k;
            }
        }
        None
    }

    /// Whether the reflected chain sits at the root at step `n`.
    fn at_root_after(&mut self, n: u64) -> bool {
        let (mut level, mut t) = (0u64, 0u64);
        while t < n {
            let remaining = n - t;
            if level > remaining {
                return false;
            }
            match level {
                0 => level = 1,
                1 => level = self.step_from_one(),
                _ => {
                    let k = (level - 1).min(remaining);
                    level = self.jump(level, k);
                    t += k - 1;
                }
            }
            t += 1;
        }
        level == 0
    }
}

fn walkers(config: &SimConfig) -> impl Fn(u64) -> Walker + Sync + '_ {
    let p_up = radial_kernel::<f64>(&config.params)
        .expect("float kernels always build")
        .p_up;
    let base = ChaCha8Rng::seed_from_u64(config.master_seed);
    move |path| {
        let mut rng = base.clone();
        rng.set_stream(path);
        Walker { p_up, rng }
    }
}

fn chunks(num_paths: u64) -> impl ParallelIterator<Item = std::ops::Range<u64>> {
    let n_chunks = num_paths.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(num_paths))
}

/// Simulates `num_paths` excursions from the root and records when each
/// first comes back, up to `max_steps`.
pub fn simulate_first_return(config: &SimConfig) -> Result<FirstReturnSim, SimError> {
    config.validate()?;
    let make = walkers(config);
    let histogram = chunks(config.num_paths)
        .map(|range| {
            let mut local = BTreeMap::new();
            for path in range {
                if let Some(t) = make(path).first_return(config.max_steps) {
                    *local.entry(t).or_insert(0u64) += 1;
                }
            }
            local
        })
        .reduce(BTreeMap::new, |mut acc, other| {
            for (t, c) in other {
                *acc.entry(t).or_insert(0) += c;
            }
            acc
        });
    let returned: u64 = histogram.values().sum();
    let truncated = 1.0 - returned as f64 / config.num_paths as f64;
    Ok(FirstReturnSim {
        histogram,
        return_estimate: McEstimate::binomial(
            returned,
            config.num_paths,
            truncated,
            config.master_seed,
        ),
    })
}

/// Fraction of paths at the root at step `n`, an estimate of `p^(n)(o,o)`.
pub fn estimate_pn_return(config: &SimConfig, n: u64) -> Result<McEstimate, SimError> {
    config.validate()?;
    if n % 2 == 1 {
        return Err(SimError::OddStep(n));
    }
    if n > config.max_steps {
        return Err(SimError::BeyondHorizon {
            step: n,
            horizon: config.max_steps,
        });
    }
    let make = walkers(config);
    let hits: u64 = chunks(config.num_paths)
        .map(|range| range.filter(|&path| make(path).at_root_after(n)).count() as u64)
        .sum();
    Ok(McEstimate::binomial(
        hits,
        config.num_paths,
        0.0,
        config.master_seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    fn config(d: u32, lambda: f64, paths: u64, steps: u64, seed: u64) -> SimConfig {
        SimConfig::new(make_params(d, lambda).unwrap(), paths, steps, seed).unwrap()
    }

    #[test]
    fn config_validation() {
        let p = make_params(3, 1.0).unwrap();
        assert!(SimConfig::new(p.clone(), 0, 10, 1).is_err());
        assert!(SimConfig::new(p.clone(), 10, 0, 1).is_err());
        assert!(SimConfig::new(p.clone(), 10, 7, 1).is_err());
        assert!(SimConfig::new(p, 1, 2, 1).is_ok());
    }

    #[test]
    fn odd_and_far_steps_are_rejected() {
        let c = config(3, 1.0, 100, 10, 1);
        assert_eq!(estimate_pn_return(&c, 3), Err(SimError::OddStep(3)));
        assert!(matches!(
            estimate_pn_return(&c, 12),
            Err(SimError::BeyondHorizon { .. })
        ));
        assert_eq!(estimate_pn_return(&c, 0).unwrap().estimate, 1.0);
    }

    #[test]
    fn reproducible_for_a_fixed_seed() {
        let c = config(3, 1.0, 20_000, 1000, 42);
        let a = simulate_first_return(&c).unwrap();
        let b = simulate_first_return(&c).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| simulate_first_return(&c).unwrap());
        assert_eq!(a, serial);
        let other = simulate_first_return(&config(3, 1.0, 20_000, 1000, 43)).unwrap();
        assert_ne!(a.histogram, other.histogram);
    }

    #[test]
    fn histogram_has_only_even_bins_and_accounts_for_truncation() {
        let sim = simulate_first_return(&config(4, 1.5, 10_000, 50, 9)).unwrap();
        assert!(sim.histogram.keys().all(|t| t % 2 == 0 && *t <= 50));
        let est = &sim.return_estimate;
        let returned = sim.returned() as f64 / est.num_paths as f64;
        assert_eq!(est.truncated_fraction, 1.0 - returned);
        assert!((0.0..=1.0).contains(&est.estimate) && est.std_error >= 0.0);
    }

    #[test]
    fn first_step_mass_matches_kernel() {
        let sim = simulate_first_return(&config(3, 1.0, 200_000, 100, 5)).unwrap();
        let at2 = sim.first_return_at(2);
        assert!(at2.z_score(1.0 / 3.0).abs() < 4.0);
        let at4 = sim.first_return_at(4);
        assert!(at4.z_score(2.0 / 27.0).abs() < 4.0);
    }

    #[test]
    fn step_return_estimates() {
        let c = config(3, 1.0, 200_000, 10, 11);
        assert!(estimate_pn_return(&c, 2).unwrap().z_score(1.0 / 3.0).abs() < 4.0);
        let c = config(3, 2.0, 200_000, 10, 12);
        assert!(estimate_pn_return(&c, 4).unwrap().z_score(3.0 / 8.0).abs() < 4.0);
        assert!(
            estimate_pn_return(&c, 10)
                .unwrap()
                .z_score(63.0 / 256.0)
                .abs()
                < 4.0
        );
    }

    #[test]
    fn recurrent_walks_return() {
        let sim = simulate_first_return(&config(3, 4.0, 100_000, 100_000, 3)).unwrap();
        assert!(sim.return_estimate.estimate >= 0.99);
    }

    #[test]
    fn z_score_edge_cases() {
        let e = McEstimate::binomial(0, 10, 0.0, 1);
        assert_eq!(e.z_score(0.0), 0.0);
        assert_eq!(e.z_score(0.5), f64::NEG_INFINITY);
    }
}
