//! Probability bounds and Monte Carlo bound checks.

use alloc::vec::Vec;

use crate::rng;
use crate::{Error, Result};

/// Default z-score for the binomial confidence half-width.
pub const DEFAULT_Z: f64 = 3.0;

/// Fewest trials accepted for a bound assertion.
pub const MIN_TRIALS: u64 = 30;

/// XORed into the seed (after mixing) when a failed experiment is retried.
pub const RETRY_SALT: u64 = 0x7265_7472_795f_3031;

/// Seed for the single permitted retry of an experiment seeded with `seed`.
pub fn retry_seed(seed: u64) -> u64 {
    rng::mix(seed ^ RETRY_SALT)
}

/// Closed-form bound expressions. `p` is the per-component query count.
pub mod bounds {
    use super::*;

    fn check_epsilon(epsilon: f64) -> Result<()> {
        if epsilon > 0.0 && epsilon < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter("epsilon must lie in (0, 1)"))
        }
    }

    /// `exp(-2pε²)`.
    pub fn hoeffding(p: u64, epsilon: f64) -> Result<f64> {
        check_epsilon(epsilon)?;
        if p == 0 {
            return Err(Error::InvalidParameter("p must be at least 1"));
        }
        Ok(libm::exp(-2.0 * p as f64 * epsilon * epsilon))
    }

    /// Probability that a returned candidate is `ε`-close: `1 - exp(-2pε²)`.
    pub fn theorem1(p: u64, epsilon: f64) -> Result<f64> {
        Ok(1.0 - hoeffding(p, epsilon)?)
    }

    /// Upper bound `p₀^p` on returning a candidate for a function without
    /// structures, given `δ′ ≤ p₀`.
    pub fn theorem2(p0: f64, p: u64) -> f64 {
        libm::pow(p0, p as f64)
    }

    /// The same with the union over the `2^n - 1` nonzero candidates and
    /// both constant values made explicit.
    pub fn theorem2_union(p0: f64, p: u64, n: u32) -> f64 {
        (2.0 * (libm::exp2(n as f64) - 1.0) * theorem2(p0, p)).min(1.0)
    }

    /// `(1 - exp(-2pε²))^n`.
    pub fn theorem3(p: u64, epsilon: f64, n: u32) -> Result<f64> {
        Ok(libm::pow(theorem1(p, epsilon)?, n as f64))
    }

    /// `1 - (2/3)^{n+1}`: the distinguisher accepts a 3-round Feistel.
    pub fn theorem4(n: u32) -> f64 {
        1.0 - libm::pow(2.0 / 3.0, (n + 1) as f64)
    }

    /// `1 - (2/3)^n`: Even-Mansour key recovery succeeds.
    pub fn theorem5(n: u32) -> f64 {
        1.0 - libm::pow(2.0 / 3.0, n as f64)
    }

    /// `(1 - exp(-2pε²/(q²n²)))^n`.
    pub fn theorem6(p: u64, epsilon: f64, q: u64, n: u32) -> Result<f64> {
        check_epsilon(epsilon)?;
        let scaled = epsilon / (q as f64 * n as f64);
        Ok(libm::pow(theorem1(p, scaled)?, n as f64))
    }

    /// `½c₁²n²q²ln(c₂n)`, rounded up.
    pub fn theorem6_queries(n: u32, q: u64, c1: f64, c2: f64) -> u64 {
        let n = n as f64;
        let q = q as f64;
        libm::ceil(0.5 * c1 * c1 * n * n * q * q * libm::log(c2 * n)) as u64
    }

    /// `3exp(-n/2)`: the right subkey has `λ ≥ 1/l`.
    pub fn theorem7(n: u32) -> f64 {
        3.0 * libm::exp(-(n as f64) / 2.0)
    }

    /// `n³l²q²`.
    pub fn theorem7_queries(n: u32, l: u64, q: u64) -> u64 {
        let n = n as u64;
        n * n * n * l * l * q * q
    }

    /// `1 - n·p₀^p`: an impossible-differential certificate is genuine.
    pub fn theorem8(p0: f64, p: u64, n: u32) -> f64 {
        (1.0 - n as f64 * theorem2(p0, p)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Direction {
    /// Pass when the rate is at least the bound.
    AtLeast,
    /// Pass when the rate is at most the bound.
    AtMost,
}

/// An empirical rate with a binomial confidence half-width, compared
/// against a bound.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundCheck {
    pub successes: u64,
    pub attempts: u64,
    pub rate: f64,
    pub z: f64,
    /// `z·sqrt(r(1-r)/N)`; zero when slack is disabled.
    pub half_width: f64,
    pub bound: f64,
    pub direction: Direction,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(successes: u64, attempts: u64, bound: f64, direction: Direction, z: f64) -> Self {
        let rate = if attempts == 0 { 0.0 } else { successes as f64 / attempts as f64 };
        let half_width = if attempts == 0 {
            0.0
        } else {
            z * libm::sqrt(rate * (1.0 - rate) / attempts as f64)
        };
        let mut check = BoundCheck {
            successes,
            attempts,
            rate,
            z,
            half_width,
            bound,
            direction,
            pass: false,
        };
        check.pass = check.recompute_pass();
        check
    }

    pub fn at_least(successes: u64, attempts: u64, bound: f64, z: f64) -> Self {
        Self::new(successes, attempts, bound, Direction::AtLeast, z)
    }

    pub fn at_most(successes: u64, attempts: u64, bound: f64, z: f64) -> Self {
        Self::new(successes, attempts, bound, Direction::AtMost, z)
    }

    /// Recompute the verdict from the stored fields.
    pub fn recompute_pass(&self) -> bool {
        if self.attempts == 0 {
            return false;
        }
        match self.direction {
            Direction::AtLeast => self.rate + self.half_width >= self.bound,
            Direction::AtMost => self.rate - self.half_width <= self.bound,
        }
    }
}

/// A sample mean compared with a target and tolerance.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanCheck {
    pub count: u64,
    pub mean: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl MeanCheck {
    pub fn new(values: &[f64], target: f64, tolerance: f64) -> Self {
        let count = values.len() as u64;
        let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / count as f64 };
        MeanCheck { count, mean, target, tolerance, pass: libm::fabs(mean - target) <= tolerance }
    }
}

/// What to run and how to judge it.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentSpec {
    pub trials: u64,
    pub seed: u64,
    pub z: f64,
    pub bound: f64,
    pub direction: Direction,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            Err(Error::InsufficientTrials { requested: self.trials, minimum: MIN_TRIALS })
        } else {
            Ok(())
        }
    }

    /// Seeds for every trial, in trial order.
    pub fn trial_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.trials).map(|t| rng::trial_seed(self.seed, t))
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ExperimentSpec { seed, ..self.clone() }
    }
}

/// A trial-level experiment: trials are independent and fully determined
/// by their seed.
pub trait Experiment {
    type Trial;

    fn run_trial(&self, seed: u64) -> Self::Trial;

    /// Whether a trial counts as a success for the bound.
    fn success(&self, trial: &Self::Trial) -> bool;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRun<T> {
    pub spec: ExperimentSpec,
    pub trials: Vec<T>,
    pub check: BoundCheck,
}

/// Judge a set of finished trials.
pub fn aggregate<E: Experiment>(experiment: &E, spec: &ExperimentSpec, trials: &[E::Trial]) -> BoundCheck {
    let successes = trials.iter().filter(|t| experiment.success(t)).count() as u64;
    BoundCheck::new(successes, trials.len() as u64, spec.bound, spec.direction, spec.z)
}

/// Run every trial in order.
pub fn run_experiment<E: Experiment>(experiment: &E, spec: &ExperimentSpec) -> Result<ExperimentRun<E::Trial>> {
    spec.validate()?;
    let trials: Vec<_> = spec.trial_seeds().map(|s| experiment.run_trial(s)).collect();
    let check = aggregate(experiment, spec, &trials);
    Ok(ExperimentRun { spec: spec.clone(), trials, check })
}

/// Run, and on failure run once more under [`retry_seed`]. Both runs are
/// returned, the first one first.
pub fn run_with_retry<E: Experiment>(experiment: &E, spec: &ExperimentSpec) -> Result<Vec<ExperimentRun<E::Trial>>> {
    let first = run_experiment(experiment, spec)?;
    if first.check.pass {
        return Ok(alloc::vec![first]);
    }
    let second = run_experiment(experiment, &spec.with_seed(retry_seed(spec.seed)))?;
    Ok(alloc::vec![first, second])
}

#[cfg(test)]
mod tests {
    use super::bounds::*;
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((hoeffding(50, 0.25).unwrap() - 0.001_930_454).abs() < 1e-8);
        assert!((theorem7(6) - 0.149_361_2).abs() < 1e-6);
        assert!(hoeffding(10_000, 0.99).unwrap() < 1e-300);
        assert!(hoeffding(5, 1.0).is_err());
        assert!(hoeffding(5, 0.0).is_err());
        assert!((theorem4(6) - (1.0 - (2.0f64 / 3.0).powi(7))).abs() < 1e-15);
        assert!((theorem5(8) - (1.0 - (2.0f64 / 3.0).powi(8))).abs() < 1e-15);
        assert_eq!(theorem7_queries(6, 6, 6), 279_936);
    }

    #[test]
    fn bound_check_directions() {
        let c = BoundCheck::at_least(95, 100, 0.97, 3.0);
        assert!(c.pass);
        assert_eq!(c.pass, c.recompute_pass());
        let c = BoundCheck::at_least(100, 100, 0.97, 3.0);
        assert_eq!(c.half_width, 0.0);
        assert!(c.pass);
        let c = BoundCheck::at_most(20, 100, 0.05, 3.0);
        assert!(!c.pass);
    }

    struct Coin;

    impl Experiment for Coin {
        type Trial = bool;
        fn run_trial(&self, seed: u64) -> bool {
            seed & 1 == 0
        }
        fn success(&self, t: &bool) -> bool {
            *t
        }
    }

    #[test]
    fn runner_guards_and_replays() {
        let spec = ExperimentSpec { trials: 10, seed: 1, z: 3.0, bound: 0.5, direction: Direction::AtLeast };
        assert_eq!(
            run_experiment(&Coin, &spec).unwrap_err(),
            Error::InsufficientTrials { requested: 10, minimum: 30 }
        );
        let spec = ExperimentSpec { trials: 400, ..spec };
        let run = run_experiment(&Coin, &spec).unwrap();
        assert_eq!(aggregate(&Coin, &spec, &run.trials), run.check);
        assert!(run.check.pass);
    }
}
