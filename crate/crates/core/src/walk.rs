//! The simple random walk on the Cayley graph: Monte Carlo drift, exact
//! finite-n expectations, and boundary samples of the harmonic measure.
//!
//! Trial `i` of a run with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `i`, so results are reproducible regardless of how trials are
//! scheduled across threads.

use std::f64::consts::TAU;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::GeneratorSet;
use crate::hyperbolic::{normalize_angle, DiskPoint, Isometry};

/// Default cap on the number of words enumerated by [`exact_mean_displacement`].
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("walk needs at least one step and one trial (got n = {steps}, N = {trials})")]
    EmptyRun { steps: usize, trials: usize },
    #[error("renormalisation interval must be positive")]
    BadRenormalization,
    #[error("exact enumeration needs {count} words, above the budget of {budget}")]
    BudgetExceeded { count: f64, budget: u64 },
    #[error("generator set is empty")]
    NoGenerators,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    pub base_point: DiskPoint,
    pub renormalize_every: usize,
}

impl WalkConfig {
    pub fn new(steps: usize, trials: usize, seed: u64) -> Self {
        WalkConfig {
            steps,
            trials,
            seed,
            base_point: DiskPoint::ORIGIN,
            renormalize_every: 64,
        }
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        if self.steps == 0 || self.trials == 0 {
            return Err(WalkError::EmptyRun {
                steps: self.steps,
                trials: self.trials,
            });
        }
        if self.renormalize_every == 0 {
            return Err(WalkError::BadRenormalization);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMethod {
    MonteCarlo,
    Exact,
    Spectral,
}

impl DriftMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DriftMethod::MonteCarlo => "monte_carlo",
            DriftMethod::Exact => "exact",
            DriftMethod::Spectral => "spectral",
        }
    }
}

/// An estimate of the drift. For Monte Carlo runs `stderr` is the standard
/// error of the mean; exact values carry zero; spectral estimates store the
/// Richardson correction size there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub trials: usize,
    pub method: DriftMethod,
}

/// ChaCha8 stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

enum StepSampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl StepSampler {
    #[inline]
    fn sample(&self, rng: &mut impl Rng) -> usize {
        match self {
            StepSampler::Uniform(n) => rng.gen_range(0..*n),
            StepSampler::Weighted(w) => w.sample(rng),
        }
    }
}

/// Random walk driven by the symmetric closure of a generator set.
pub struct Walker {
    steps: Vec<Isometry>,
    sampler: StepSampler,
    renormalize_every: usize,
}

impl Walker {
    pub fn new(gens: &GeneratorSet) -> Result<Self, WalkError> {
        Self::with_base_point(gens, DiskPoint::ORIGIN, 64)
    }

    /// Walk observed from `base`: displacements are `d(w·base, base)`.
    pub fn with_base_point(
        gens: &GeneratorSet,
        base: DiskPoint,
        renormalize_every: usize,
    ) -> Result<Self, WalkError> {
        if gens.generators.is_empty() {
            return Err(WalkError::NoGenerators);
        }
        if renormalize_every == 0 {
            return Err(WalkError::BadRenormalization);
        }
        let to_origin = Isometry::moving_to_origin(base);
        let steps = gens
            .symmetric_closure()
            .into_iter()
            .map(|s| {
                if base == DiskPoint::ORIGIN {
                    s.map
                } else {
                    s.map.conjugate_by(&to_origin)
                }
            })
            .collect::<Vec<_>>();
        let sampler = if gens.is_uniform() {
            StepSampler::Uniform(steps.len())
        } else {
            StepSampler::Weighted(
                WeightedIndex::new(gens.step_distribution().iter().copied())
                    .map_err(|_| WalkError::NoGenerators)?,
            )
        };
        Ok(Walker {
            steps,
            sampler,
            renormalize_every,
        })
    }

    /// One walk of `n` steps; returns the product `g_{j1}⋯g_{jn}` and its displacement.
    pub fn run(&self, n: usize, rng: &mut impl Rng) -> (Isometry, f64) {
        let mut acc = Isometry::IDENTITY;
        for k in 1..=n {
            let g = &self.steps[self.sampler.sample(rng)];
            acc = acc.compose_raw(g);
            if k % self.renormalize_every == 0 {
                acc.renormalize();
            }
        }
        acc.renormalize();
        let d = acc.displacement();
        (acc, d)
    }

    /// Word of closure indices and the sequence of partial products, for orbit plots.
    pub fn trajectory(&self, n: usize, rng: &mut impl Rng) -> (Vec<usize>, Vec<Isometry>) {
        let mut word = Vec::with_capacity(n);
        let mut path = Vec::with_capacity(n + 1);
        let mut acc = Isometry::IDENTITY;
        path.push(acc);
        for _ in 0..n {
            let s = self.sampler.sample(rng);
            word.push(s);
            acc = acc.compose(&self.steps[s]);
            path.push(acc);
        }
        (word, path)
    }
}

/// One walk with the default configuration, drawn from `rng`.
pub fn run_walk(gens: &GeneratorSet, n: usize, rng: &mut impl Rng) -> Result<(Isometry, f64), WalkError> {
    if n == 0 {
        return Err(WalkError::EmptyRun { steps: 0, trials: 1 });
    }
    Ok(Walker::new(gens)?.run(n, rng))
}

/// Mean and standard error of a sample, summed in index order.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-trial normalised displacements `d(w_n·0, 0)/n`, in trial order.
pub fn normalized_displacements(
    gens: &GeneratorSet,
    config: &WalkConfig,
) -> Result<Vec<f64>, WalkError> {
    config.validate()?;
    let walker = Walker::with_base_point(gens, config.base_point, config.renormalize_every)?;
    let n = config.steps;
    Ok((0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            walker.run(n, &mut rng).1 / n as f64
        })
        .collect())
}

/// Monte Carlo drift estimate: the average of `d(w_n·0, 0)/n` over independent walks.
pub fn estimate_drift_mc(gens: &GeneratorSet, config: &WalkConfig) -> Result<DriftEstimate, WalkError> {
    let values = normalized_displacements(gens, config)?;
    let (mean, stderr) = mean_and_stderr(&values);
    Ok(DriftEstimate {
        mean,
        stderr,
        n: config.steps,
        trials: config.trials,
        method: DriftMethod::MonteCarlo,
    })
}

/// Pools independent estimates at the same `n` (e.g. several seeds) by
/// inverse-variance-free averaging: equal-size runs are averaged with their
/// standard errors combined in quadrature.
pub fn pool_estimates(runs: &[DriftEstimate]) -> DriftEstimate {
    let total: usize = runs.iter().map(|r| r.trials).sum();
    let mean = runs.iter().map(|r| r.mean * r.trials as f64).sum::<f64>() / total as f64;
    let var = runs
        .iter()
        .map(|r| (r.stderr * r.trials as f64 / total as f64).powi(2))
        .sum::<f64>();
    DriftEstimate {
        mean,
        stderr: var.sqrt(),
        n: runs[0].n,
        trials: total,
        method: runs[0].method,
    }
}

/// Exact `E[d(w_n·0, 0)]/n`, averaging over every word of length `n`.
pub fn exact_mean_displacement(
    gens: &GeneratorSet,
    n: usize,
    budget: u64,
) -> Result<DriftEstimate, WalkError> {
    if n == 0 {
        return Err(WalkError::EmptyRun { steps: 0, trials: 1 });
    }
    let steps: Vec<Isometry> = gens.symmetric_closure().into_iter().map(|s| s.map).collect();
    if steps.is_empty() {
        return Err(WalkError::NoGenerators);
    }
    let probs = gens.step_distribution();
    let count = (steps.len() as f64).powi(n as i32);
    if count > budget as f64 {
        return Err(WalkError::BudgetExceeded { count, budget });
    }

    fn descend(steps: &[Isometry], probs: &[f64], depth: usize, acc: Isometry, weight: f64) -> f64 {
        if depth == 0 {
            return weight * acc.displacement();
        }
        steps
            .iter()
            .zip(probs)
            .map(|(g, &p)| {
                let mut next = acc.compose_raw(g);
                if depth % 16 == 0 {
                    next.renormalize();
                }
                descend(steps, probs, depth - 1, next, weight * p)
            })
            .sum()
    }

    // split the first two letters across threads; partial sums are combined in order
    let prefix_len = n.min(2);
    let q = steps.len();
    let prefixes: Vec<Vec<usize>> = (0..q.pow(prefix_len as u32))
        .map(|mut code| {
            let mut w = vec![0; prefix_len];
            for slot in w.iter_mut().rev() {
                *slot = code % q;
                code /= q;
            }
            w
        })
        .collect();
    let partial: Vec<f64> = prefixes
        .par_iter()
        .map(|w| {
            let mut acc = Isometry::IDENTITY;
            let mut weight = 1.0;
            for &s in w {
                acc = acc.compose_raw(&steps[s]);
                weight *= probs[s];
            }
            descend(&steps, probs, n - prefix_len, acc, weight)
        })
        .collect();
    let total: f64 = partial.iter().sum();
    Ok(DriftEstimate {
        mean: total / n as f64,
        stderr: 0.0,
        n,
        trials: 1,
        method: DriftMethod::Exact,
    })
}

/// Endpoints of independent walks projected radially to the boundary circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    /// Arguments of `w_n·0`, in `[0, 2π)`.
    pub angles: Vec<f64>,
    pub n: usize,
    /// Fraction of endpoints within `1e-6` of the unit circle.
    pub converged_fraction: f64,
    pub warning: Option<String>,
}

impl BoundarySample {
    /// Normalised histogram over `bins` equal arcs starting at angle 0.
    pub fn histogram(&self, bins: usize) -> Vec<f64> {
        let mut counts = vec![0.0; bins];
        for &a in &self.angles {
            let b = ((a / TAU) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1.0;
        }
        let total = self.angles.len() as f64;
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    }
}

/// Displacement beyond which `1 - |w·0| < 1e-6`.
fn boundary_displacement() -> f64 {
    let r: f64 = 1.0 - 1e-6;
    ((1.0 + r) / (1.0 - r)).ln()
}

/// Samples the law of `w_n·0` pushed radially to the circle.
pub fn sample_harmonic_measure(
    gens: &GeneratorSet,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundarySample, WalkError> {
    WalkConfig::new(n, trials, seed).validate()?;
    let walker = Walker::new(gens)?;
    let threshold = boundary_displacement();
    let results: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let (g, d) = walker.run(n, &mut rng);
            let z = g.origin_image();
            let angle = if z.norm() == 0.0 { 0.0 } else { normalize_angle(z.arg()) };
            (angle, d > threshold)
        })
        .collect();
    let converged = results.iter().filter(|r| r.1).count() as f64 / trials as f64;
    Ok(BoundarySample {
        angles: results.iter().map(|r| r.0).collect(),
        n,
        converged_fraction: converged,
        warning: (converged < 0.99).then(|| {
            format!(
                "no boundary convergence: only {:.2}% of endpoints within 1e-6 of the circle",
                100.0 * converged
            )
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{preset, Generator};

    fn rotations() -> GeneratorSet {
        GeneratorSet::new(
            vec![
                Generator {
                    label: "r".into(),
                    map: Isometry::rotation(0.7),
                    is_involution: false,
                },
                Generator {
                    label: "s".into(),
                    map: Isometry::rotation(2.1),
                    is_involution: false,
                },
            ],
            vec![],
        )
    }

    #[test]
    fn rotations_never_move_the_origin() {
        let gens = rotations();
        let mut rng = trial_rng(1, 0);
        for n in [1, 10, 1000] {
            assert_eq!(run_walk(&gens, n, &mut rng).unwrap().1, 0.0);
        }
        let est = estimate_drift_mc(&gens, &WalkConfig::new(50, 100, 3)).unwrap();
        assert_eq!((est.mean, est.stderr), (0.0, 0.0));
    }

    #[test]
    fn bolza_single_step() {
        let gens = preset("bolza").unwrap().gens;
        let expected = (5.0 + 4.0 * 2f64.sqrt()).acosh();
        let mut rng = trial_rng(9, 0);
        for _ in 0..50 {
            let d = run_walk(&gens, 1, &mut rng).unwrap().1;
            assert!((d - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let gens = preset("triangle:4,4,4").unwrap().gens;
        let cfg = WalkConfig::new(200, 64, 42);
        let a = normalized_displacements(&gens, &cfg).unwrap();
        let b = normalized_displacements(&gens, &cfg).unwrap();
        assert_eq!(a, b);
        let c = normalized_displacements(&gens, &WalkConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_empty_runs() {
        let gens = preset("bolza").unwrap().gens;
        assert!(estimate_drift_mc(&gens, &WalkConfig::new(0, 10, 1)).is_err());
        assert!(estimate_drift_mc(&gens, &WalkConfig::new(10, 0, 1)).is_err());
    }

    #[test]
    fn exact_first_step_is_mean_generator_displacement() {
        for id in ["bolza", "triangle:2,3,7", "triangle:4,4,4"] {
            let gens = preset(id).unwrap().gens;
            let exact = exact_mean_displacement(&gens, 1, 1000).unwrap();
            let direct: f64 = gens
                .symmetric_closure()
                .iter()
                .zip(gens.step_distribution())
                .map(|(s, p)| p * s.map.displacement())
                .sum();
            assert!((exact.mean - direct).abs() < 1e-15);
            assert_eq!(exact.stderr, 0.0);
        }
    }

    #[test]
    fn exact_budget_is_enforced() {
        let gens = preset("bolza").unwrap().gens;
        assert!(matches!(
            exact_mean_displacement(&gens, 9, 1000),
            Err(WalkError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn exact_444_first_step_is_twice_the_inradius() {
        let gens = preset("triangle:4,4,4").unwrap().gens;
        // right triangle (centre, side midpoint, vertex): cos(π/8) = cosh(r)·sin(π/3)
        let inradius = ((std::f64::consts::PI / 8.0).cos() / (std::f64::consts::PI / 3.0).sin()).acosh();
        let exact = exact_mean_displacement(&gens, 1, 10).unwrap();
        assert!((exact.mean - 2.0 * inradius).abs() < 1e-12);
        assert!((exact.mean - 0.727040).abs() < 1e-6);
    }

    #[test]
    fn exact_means_are_subadditive_along_doubling() {
        let gens = preset("triangle:4,4,4").unwrap().gens;
        let seq: Vec<f64> = [1, 2, 4, 8]
            .iter()
            .map(|&n| exact_mean_displacement(&gens, n, 1 << 20).unwrap().mean)
            .collect();
        for w in seq.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{seq:?}");
        }
    }

    #[test]
    fn base_point_only_shifts_finite_n_values() {
        let gens = preset("triangle:4,4,4").unwrap().gens;
        let cfg = WalkConfig::new(1, 1, 5);
        let base = DiskPoint::new(0.1, 0.05).unwrap();
        let shifted = WalkConfig {
            base_point: base,
            ..cfg
        };
        let walker = Walker::with_base_point(&gens, base, 64).unwrap();
        let mut rng = trial_rng(shifted.seed, 0);
        let (g, d) = walker.run(1, &mut rng);
        assert!(g.antiholomorphic);
        // compare against the unconjugated generator acting on the base point
        let mut rng = trial_rng(shifted.seed, 0);
        let (h, _) = Walker::new(&gens).unwrap().run(1, &mut rng);
        let direct = crate::hyperbolic::hyp_distance(base, h.apply(base)).unwrap();
        assert!((d - direct).abs() < 1e-12);
    }

    #[test]
    fn rotation_walk_has_no_boundary_convergence() {
        let sample = sample_harmonic_measure(&rotations(), 100, 50, 1).unwrap();
        assert_eq!(sample.converged_fraction, 0.0);
        assert!(sample.warning.unwrap().contains("no boundary convergence"));
    }

    #[test]
    fn histogram_has_unit_mass() {
        let gens = preset("triangle:4,4,4").unwrap().gens;
        let sample = sample_harmonic_measure(&gens, 300, 500, 7).unwrap();
        assert!(sample.warning.is_none());
        let h = sample.histogram(256);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sample.angles.iter().all(|&a| (0.0..TAU).contains(&a)));
    }
}
