use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relayopt::homotopy::{initial_point, lift_allocation, run_homotopy, HomotopyOptions, InitStrategy, Mode};
use relayopt::model::{check_feasibility, cutset_bound, sum_rate, NetworkConfig, Permutation};
use relayopt::schemes::{
    solve_cf, solve_cf_best, solve_cutset, solve_df_ml, solve_df_sl, solve_hybrid, HybridOptions, PermutationSearch,
    Solution,
};
use relayopt::Config;

fn db(g: &[f64], c: &[f64]) -> Config {
    NetworkConfig::from_db(g, 0.0, c.to_vec()).unwrap()
}

fn random_config(rng: &mut ChaCha8Rng, m: usize) -> Config {
    let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..20.0)).collect();
    let c: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..10.0)).collect();
    db(&g, &c)
}

fn assert_consistent(cfg: &Config, s: &Solution<f64>) {
    let alloc = s.allocation.as_ref().expect("allocation");
    let report = check_feasibility(cfg, &s.permutation, alloc, 1e-6);
    assert!(report.feasible, "{}: slack {}", s.scheme.name(), report.min_slack());
    let direct = sum_rate(cfg, alloc);
    assert!(
        (direct - s.sum_rate).abs() <= 1e-8,
        "{}: {direct} vs {}",
        s.scheme.name(),
        s.sum_rate
    );
}

#[test]
fn solutions_are_feasible_and_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = HybridOptions::default();
    for i in 0..24 {
        let cfg = random_config(&mut rng, 1 + i % 3);
        let h = solve_hybrid(&cfg, &opts).unwrap();
        let cf = solve_cf_best(&cfg).unwrap();
        let ml = solve_df_ml(&cfg, &opts.homotopy).unwrap();
        let sl = solve_df_sl(&cfg).unwrap();
        for s in [&h, &cf, &ml, &sl] {
            assert_consistent(&cfg, s);
        }
        assert!(
            ml.sum_rate >= sl.sum_rate - 1e-12,
            "DF-ML {} < DF-SL {}",
            ml.sum_rate,
            sl.sum_rate
        );
        for s in [&cf, &ml, &sl] {
            assert!(
                h.sum_rate >= s.sum_rate - 1e-4,
                "hybrid {} < {} {}",
                h.sum_rate,
                s.scheme.name(),
                s.sum_rate
            );
        }
        let bound = cutset_bound(&cfg).unwrap();
        assert!(h.sum_rate <= bound + 1e-6);
        assert_eq!(solve_cutset(&cfg).unwrap().sum_rate, bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cf_reaches_the_cutset_with_ample_backhaul(g in prop::collection::vec(-10.0f64..20.0, 1..=3), p in -5.0f64..10.0) {
        let cfg = NetworkConfig::from_db(&g, p, vec![30.0; g.len()]).unwrap();
        let full = (1.0 + cfg.power() * cfg.gains().iter().sum::<f64>()).log2();
        let cf = solve_cf_best(&cfg).unwrap().sum_rate;
        prop_assert!((cf - full).abs() <= 1e-3, "{cf} vs {full}");
    }

    #[test]
    fn symmetric_pairs_do_not_depend_on_the_order(g in -10.0f64..20.0, c in 0.0f64..10.0) {
        let cfg = db(&[g, g], &[c, c]);
        let a = Permutation::identity(2);
        let b = Permutation::new(vec![1, 0]).unwrap();
        let (ca, cb) = (solve_cf(&cfg, &a).unwrap().sum_rate, solve_cf(&cfg, &b).unwrap().sum_rate);
        prop_assert!((ca - cb).abs() <= 1e-6);
        let best = |perm: &Permutation| {
            let opts = HybridOptions { search: PermutationSearch::Fixed(perm.clone()), ..HybridOptions::default() };
            solve_hybrid(&cfg, &opts).unwrap().sum_rate
        };
        let (ra, rb) = (best(&a), best(&b));
        prop_assert!((ra - rb).abs() <= 1e-6, "{ra} vs {rb}");
    }
}

#[test]
fn df_single_layer_examples() {
    let cfg = NetworkConfig::<f64>::new(vec![1.0, 10.0], vec![2.0, 2.0], 1.0).unwrap();
    assert!((solve_df_sl(&cfg).unwrap().sum_rate - 2.0).abs() <= 1e-12);
    let cfg = NetworkConfig::<f64>::new(vec![1.0, 10.0], vec![0.5, 4.0], 1.0).unwrap();
    assert!((solve_df_sl(&cfg).unwrap().sum_rate - 11f64.log2()).abs() <= 1e-12);
    let cfg = NetworkConfig::<f64>::new(vec![1.0, 10.0], vec![0.0, 0.0], 1.0).unwrap();
    assert_eq!(solve_df_sl(&cfg).unwrap().sum_rate, 0.0);
}

#[test]
fn df_multi_layer_examples() {
    let opts = HomotopyOptions::default();
    let cfg = NetworkConfig::<f64>::new(vec![1.0, 10.0], vec![8.0, 8.0], 1.0).unwrap();
    assert!((solve_df_ml(&cfg, &opts).unwrap().sum_rate - 11f64.log2()).abs() <= 1e-3);
    let cfg = NetworkConfig::<f64>::new(vec![1.0, 10.0], vec![0.0, 0.0], 1.0).unwrap();
    assert!(solve_df_ml(&cfg, &opts).unwrap().sum_rate.abs() <= 1e-9);
    for c in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let cfg = NetworkConfig::<f64>::new(vec![10.0, 10.0], vec![c, c], 1.0).unwrap();
        let ml = solve_df_ml(&cfg, &opts).unwrap().sum_rate;
        let sl = solve_df_sl(&cfg).unwrap().sum_rate;
        assert!((ml - sl).abs() <= 1e-6, "C = {c}: {ml} vs {sl}");
    }
}

#[test]
fn cf_examples() {
    let cfg = NetworkConfig::<f64>::new(vec![10.0], vec![2.0], 1.0).unwrap();
    let s = solve_cf(&cfg, &Permutation::identity(1)).unwrap();
    assert!((s.sum_rate - (22.0f64 / 7.0).log2()).abs() <= 1e-12);
    assert!((s.allocation.unwrap().beta[0] - 3.0 / 14.0).abs() <= 1e-12);
    let cfg = NetworkConfig::<f64>::new(vec![10.0, 10.0], vec![0.0, 0.0], 1.0).unwrap();
    assert_eq!(solve_cf_best(&cfg).unwrap().sum_rate, 0.0);
}

#[test]
fn hybrid_on_the_asymmetric_pair() {
    let cfg = db(&[0.0, 10.0], &[2.0, 2.0]);
    let h = solve_hybrid(&cfg, &HybridOptions::default()).unwrap();
    assert_consistent(&cfg, &h);
    let best = [
        solve_cf_best(&cfg).unwrap().sum_rate,
        solve_df_ml(&cfg, &HomotopyOptions::default()).unwrap().sum_rate,
        solve_df_sl(&cfg).unwrap().sum_rate,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    assert!(h.sum_rate >= best - 1e-4);
    assert!(h.sum_rate <= cutset_bound(&cfg).unwrap() + 1e-6);
}

#[test]
fn converged_points_are_fixed_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let opts = HomotopyOptions::default();
    for i in 0..12 {
        let cfg = random_config(&mut rng, 1 + i % 2);
        let perm = Permutation::identity(cfg.num_relays());
        let (end, trace) = run_homotopy(&cfg, &perm, &initial_point(&cfg, &perm, InitStrategy::Blend), &opts).unwrap();
        let (_, again) = run_homotopy(&cfg, &perm, &end, &opts).unwrap();
        let gain = again.final_rate() - trace.final_rate();
        assert!(gain >= -1e-8, "restart lost {gain}");
        if again.iterations == 1 {
            assert!(
                gain <= opts.rel_tol * trace.final_rate().max(1.0),
                "restart gained {gain}"
            );
        } else {
            // a restart may still creep along a slow direction, but only
            // by less than the stopping tolerance per step
            assert!(again.rates.windows(2).all(|w| w[1] - w[0] >= -1e-9));
        }
    }
}

#[test]
fn lifted_baselines_are_valid_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let opts = HomotopyOptions::default();
    for i in 0..12 {
        let cfg = random_config(&mut rng, 1 + i % 3);
        let perm = Permutation::identity(cfg.num_relays());
        let sl = solve_df_sl(&cfg).unwrap();
        let start = lift_allocation(&cfg, &perm, sl.allocation.as_ref().unwrap(), Mode::Hybrid, opts.floor).unwrap();
        let (_, trace) = run_homotopy(&cfg, &perm, &start, &opts).unwrap();
        assert!(trace.rates.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn zero_backhaul_homotopy_gives_zero() {
    let cfg = NetworkConfig::<f64>::new(vec![2.0, 5.0], vec![0.0, 0.0], 1.0).unwrap();
    let perm = Permutation::identity(2);
    let (_, trace) = run_homotopy(
        &cfg,
        &perm,
        &initial_point(&cfg, &perm, InitStrategy::Blend),
        &Default::default(),
    )
    .unwrap();
    assert!(trace.final_rate().abs() <= 1e-6);
}
