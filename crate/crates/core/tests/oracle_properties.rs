use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relayopt::model::{check_feasibility, NetworkConfig, Permutation};
use relayopt::oracle::{grid_search, grid_search_all, inner_rate_assignment, GridSpec};
use relayopt::schemes::{solve_cf_best, solve_df_ml};
use relayopt::Error;

/// Best `Σ R` over `R ∈ hℤ^m`, `0 ≤ R ≤ caps`, `Σ_{j≥k} R_j ≤ d_k`.
fn grid_max(caps: &[f64], d: &[f64], h: f64) -> f64 {
    let m = caps.len();
    let steps: Vec<usize> = caps.iter().map(|c| (c / h).floor() as usize).collect();
    let mut best = 0.0f64;
    let mut idx = vec![0usize; m];
    loop {
        let r: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
        let ok = (0..m).all(|k| r[k..].iter().sum::<f64>() <= d[k] + 1e-12);
        if ok {
            best = best.max(r.iter().sum());
        }
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] <= steps[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            return best;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn greedy_assignment_is_optimal(
        caps in prop::collection::vec(0.0f64..2.0, 1..=3),
        d in prop::collection::vec(0.0f64..4.0, 3),
    ) {
        let m = caps.len();
        let d = &d[..m];
        let (rates, total) = inner_rate_assignment(&caps, d);
        for k in 0..m {
            prop_assert!(rates[k] >= 0.0 && rates[k] <= caps[k] + 1e-12);
            prop_assert!(rates[k..].iter().sum::<f64>() <= d[k] + 1e-12);
        }
        prop_assert!((rates.iter().sum::<f64>() - total).abs() <= 1e-12);
        let h = 0.02;
        let fine = grid_max(&caps, d, h);
        prop_assert!(total >= fine - 1e-12, "greedy {total} below grid {fine}");
        prop_assert!(total <= fine + m as f64 * h, "greedy {total} far above grid {fine}");
    }
}

fn random_config(rng: &mut ChaCha8Rng, m: usize) -> NetworkConfig<f64> {
    let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..20.0)).collect();
    let c: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..10.0)).collect();
    NetworkConfig::from_db(&g, 0.0, c).unwrap()
}

#[test]
fn refinement_never_lowers_the_best_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..6 {
        let cfg = random_config(&mut rng, 1 + i % 2);
        let mut last = f64::NEG_INFINITY;
        for n in [10, 20, 40] {
            let spec = GridSpec {
                points_per_dimension: n,
                ..GridSpec::default()
            };
            let best = grid_search_all(&cfg, &spec).unwrap().sum_rate;
            assert!(best >= last - 1e-12, "n = {n}: {best} < {last}");
            last = best;
        }
    }
}

#[test]
fn oracle_allocations_are_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let spec = GridSpec {
        points_per_dimension: 20,
        ..GridSpec::default()
    };
    for i in 0..20 {
        let cfg = random_config(&mut rng, 1 + i % 2);
        for perm in Permutation::all(cfg.num_relays()) {
            let s = grid_search(&cfg, &perm, &spec).unwrap();
            let alloc = s.allocation.as_ref().unwrap();
            let report = check_feasibility(&cfg, &perm, alloc, 1e-9);
            assert!(report.feasible, "slack {}", report.min_slack());
            assert!((relayopt::model::sum_rate(&cfg, alloc) - s.sum_rate).abs() <= 1e-12);
        }
    }
}

#[test]
fn symmetric_pair_matches_closed_forms() {
    let cfg = NetworkConfig::<f64>::new(vec![10.0, 10.0], vec![2.0, 2.0], 1.0).unwrap();
    let s = grid_search_all(&cfg, &GridSpec::default()).unwrap();
    let cf = solve_cf_best(&cfg).unwrap().sum_rate;
    let df = solve_df_ml(&cfg, &Default::default()).unwrap().sum_rate;
    let best = cf.max(df);
    assert!((s.sum_rate - best).abs() <= 0.02, "{} vs {best}", s.sum_rate);
}

#[test]
fn zero_backhaul_gives_zero() {
    let cfg = NetworkConfig::new(vec![1.0, 10.0], vec![0.0, 0.0], 1.0).unwrap();
    assert_eq!(grid_search_all(&cfg, &GridSpec::default()).unwrap().sum_rate, 0.0);
}

#[test]
fn oversized_grids_are_refused() {
    let cfg = NetworkConfig::new(vec![1.0, 2.0, 3.0], vec![1.0; 3], 1.0).unwrap();
    let err = grid_search_all(&cfg, &GridSpec::default()).unwrap_err();
    assert!(matches!(err, Error::GridTooLarge { .. }));
    let small = GridSpec {
        points_per_dimension: 6,
        ..GridSpec::default()
    };
    assert!(grid_search_all(&cfg, &small).is_ok());
}
