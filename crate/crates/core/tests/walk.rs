use std::f64::consts::TAU;

use fuchsian::groups::preset;
use fuchsian::walk::{
    estimate_drift_mc, exact_mean_displacement, pool_estimates, sample_harmonic_measure, trial_rng,
    Walker, WalkConfig, DEFAULT_ENUMERATION_BUDGET,
};

#[test]
fn monte_carlo_agrees_with_enumeration() {
    for (id, n) in [("triangle:4,4,4", 6), ("bolza", 3)] {
        let gens = preset(id).unwrap().gens;
        let exact = exact_mean_displacement(&gens, n, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let mc = estimate_drift_mc(&gens, &WalkConfig::new(n, 100_000, 11)).unwrap();
        assert!((mc.mean - exact.mean).abs() < 4.0 * mc.stderr, "{id}: {} vs {}", mc.mean, exact.mean);
        assert_eq!(exact.stderr, 0.0);
    }
}

#[test]
fn weighted_steps_are_respected() {
    let gens = preset("triangle:3,7,2")
        .unwrap()
        .gens
        .with_step_distribution(vec![0.6, 0.3, 0.1])
        .unwrap();
    let exact = exact_mean_displacement(&gens, 5, DEFAULT_ENUMERATION_BUDGET).unwrap();
    let mc = estimate_drift_mc(&gens, &WalkConfig::new(5, 100_000, 3)).unwrap();
    assert!((mc.mean - exact.mean).abs() < 4.0 * mc.stderr);
    // an independent evaluation of the first step
    let closure = gens.symmetric_closure();
    let first: f64 = closure
        .iter()
        .zip(gens.step_distribution())
        .map(|(s, p)| p * s.map.displacement())
        .sum();
    let one = exact_mean_displacement(&gens, 1, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert!((one.mean - first).abs() < 1e-12);
}

#[test]
fn seeds_reproduce_and_differ() {
    let gens = preset("bolza").unwrap().gens;
    let a = estimate_drift_mc(&gens, &WalkConfig::new(200, 500, 5)).unwrap();
    let b = estimate_drift_mc(&gens, &WalkConfig::new(200, 500, 5)).unwrap();
    let c = estimate_drift_mc(&gens, &WalkConfig::new(200, 500, 6)).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_ne!(a.mean, c.mean);

    let walker = Walker::new(&gens).unwrap();
    let (steps, path) = walker.trajectory(50, &mut trial_rng(5, 0));
    let (end, d) = walker.run(50, &mut trial_rng(5, 0));
    assert_eq!(steps.len(), 50);
    assert!(path.last().unwrap().distance_to(&end) < 1e-9 * (1.0 + end.a.norm()));
    assert!((path.last().unwrap().displacement() - d).abs() < 1e-9);
}

#[test]
fn pooling_combines_standard_errors() {
    let gens = preset("triangle:4,4,4").unwrap().gens;
    let runs: Vec<_> = (1..=3)
        .map(|s| estimate_drift_mc(&gens, &WalkConfig::new(100, 2000, s)).unwrap())
        .collect();
    let pooled = pool_estimates(&runs);
    let mean = runs.iter().map(|r| r.mean).sum::<f64>() / 3.0;
    let se = (runs.iter().map(|r| r.stderr * r.stderr).sum::<f64>()).sqrt() / 3.0;
    assert!((pooled.mean - mean).abs() < 1e-15);
    assert!((pooled.stderr - se).abs() < 1e-15);
    assert_eq!(pooled.trials, 6000);
}

#[test]
fn bolza_harmonic_measure_has_octagonal_symmetry() {
    // the step set is invariant under rotation by π/4, so is the exit law
    let gens = preset("bolza").unwrap().gens;
    let trials = 16_000;
    let sample = sample_harmonic_measure(&gens, 60, trials, 9).unwrap();
    assert!(sample.warning.is_none());
    let mut octants = [0usize; 8];
    for &a in &sample.angles {
        // offset so no generator axis sits on an octant edge
        let shifted = (a + TAU / 16.0).rem_euclid(TAU);
        octants[((shifted / TAU) * 8.0) as usize % 8] += 1;
    }
    let expected = trials as f64 / 8.0;
    let sd = (trials as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
    for c in octants {
        assert!((c as f64 - expected).abs() < 4.0 * sd, "{octants:?}");
    }
}
