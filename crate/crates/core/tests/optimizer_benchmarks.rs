use std::f64::consts::PI;

use patcharray::optimizer::{run_ga, FuzzyController, GaConfig, GeneBounds};

fn sphere(x: &[f64]) -> Option<f64> {
    Some(x.iter().map(|v| v * v).sum())
}

fn rastrigin(x: &[f64]) -> Option<f64> {
    Some(10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>())
}

/// Benchmark settings: defaults except a tighter mutation-rate ceiling.
fn bench(population: usize, generations: usize, seed: u64) -> GaConfig {
    GaConfig { population, generations, pm_max: 0.10, seed, ..GaConfig::default() }
}

#[test]
fn sphere_converges_for_every_seed() {
    let b = GeneBounds::uniform(5, -5.12, 5.12);
    for seed in 0..10 {
        let r = run_ga(&bench(40, 200, seed), &b, &[], sphere, None).unwrap();
        assert!(r.best.cost < 1e-6, "seed {seed}: {}", r.best.cost);
        assert!(r.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
        assert!(b.contains(&r.best.genes));
    }
}

#[test]
fn rastrigin_reaches_global_basin() {
    let b = GeneBounds::uniform(5, -5.12, 5.12);
    let hits = (0..10)
        .filter(|&seed| {
            let r = run_ga(&bench(60, 400, seed), &b, &[], rastrigin, None).unwrap();
            assert!(r.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
            r.best.cost < 1.0
        })
        .count();
    assert!(hits >= 8, "{hits}/10");
}

#[test]
fn reruns_are_bit_identical() {
    let b = GeneBounds::uniform(5, -5.12, 5.12);
    let a = run_ga(&bench(20, 30, 3), &b, &[], rastrigin, None).unwrap();
    let c = run_ga(&bench(20, 30, 3), &b, &[], rastrigin, None).unwrap();
    assert_eq!(a, c);
    let d = run_ga(&bench(20, 30, 4), &b, &[], rastrigin, None).unwrap();
    assert_ne!(a.trace, d.trace);
}

#[test]
fn controller_grid_bounds_and_direction() {
    let c = FuzzyController::default();
    let n = 101;
    let at = |i: usize| i as f64 / (n - 1) as f64;
    let grid: Vec<Vec<(f64, f64)>> = (0..n).map(|i| (0..n).map(|j| c.fuzzy_adapt(at(i), at(j))).collect()).collect();
    let eps = 1e-12;
    for i in 0..n {
        for j in 0..n {
            let (pc, pm) = grid[i][j];
            assert!((c.pc_min..=c.pc_max).contains(&pc) && (c.pm_min..=c.pm_max).contains(&pm));
            if i + 1 < n {
                // Along diversity: pm does not rise, pc does not fall.
                assert!(grid[i + 1][j].1 <= pm + eps, "pm rises in diversity at ({i}, {j})");
                assert!(grid[i + 1][j].0 >= pc - eps, "pc falls in diversity at ({i}, {j})");
            }
            if j + 1 < n {
                assert!(grid[i][j + 1].1 >= pm - eps, "pm falls in stagnation at ({i}, {j})");
            }
        }
    }
    for j in 0..n {
        assert!(grid[20][j].1 >= grid[80][j].1);
    }
}
