mod support;

use isac_core::allocator::{
    epa, feasibility_check, optimize_ppa_default, rpa, solve_subproblem, sum_rate, surrogate_objective, t_update_all,
    user_rate, Instance, SurrogateState,
};
use isac_core::channel::{snapshot, ChannelRealization};
use isac_core::config::{ChannelMode, DirectParams};
use isac_core::{Error, PowerVector, ScenarioConfig};
use proptest::prelude::*;
use support::TwoCell;

fn two_cell_config(budget_db: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        cells: 2,
        noise_comm_db: vec![1.0; 2],
        noise_sense_db: vec![15.0; 2],
        rate_thresholds: vec![1.0; 2],
        pod_thresholds: vec![0.7; 2],
        power_budget_db: budget_db,
        channel_mode: ChannelMode::Direct(DirectParams::serving_dominant(2)),
        seed,
        ..ScenarioConfig::default()
    }
}

fn oracle(instance: &Instance<'_>) -> TwoCell {
    let ch = instance.realization;
    let c = &instance.constraints;
    TwoCell {
        rho: [[ch.rho[0][0], ch.rho[0][1]], [ch.rho[1][0], ch.rho[1][1]]],
        g: [[ch.g[0][0], ch.g[0][1]], [ch.g[1][0], ch.g[1][1]]],
        sigma_c2: [ch.sigma_c2[0], ch.sigma_c2[1]],
        sigma_s2: [ch.sigma_s2[0], ch.sigma_s2[1]],
        budget: c.budget,
        sinr: [c.sinr_thresholds[0], c.sinr_thresholds[1]],
        snr: [c.sensing_thresholds[0], c.sensing_thresholds[1]],
    }
}

/// Two-cell snapshots with a nonempty feasible region.
fn feasible_two_cell(count: usize) -> Vec<(ScenarioConfig, ChannelRealization)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let config = two_cell_config(20.0, seed);
        let ch = snapshot(&config, 0).unwrap();
        let instance = Instance::new(&config, &ch).unwrap();
        if feasibility_check(&instance.constraints, None).unwrap().feasible {
            out.push((config, ch));
        }
        seed += 1;
    }
    out
}

#[test]
fn user_rate_matches_direct_formula() {
    let config = ScenarioConfig::default();
    let ch = snapshot(&config, 3).unwrap();
    let p = PowerVector::new(vec![3.0, 0.5, 11.0]).unwrap();
    for i in 0..3 {
        let interference: f64 = (0..3).filter(|&l| l != i).map(|l| p[l] * ch.rho[l][i]).sum();
        let expected = (1.0 + p[i] * ch.rho[i][i] / (interference + ch.sigma_c2[i])).log2();
        assert!((user_rate(&p, &ch, i) - expected).abs() < 1e-12);
    }
}

#[test]
fn surrogate_matches_hand_expansion() {
    for (config, ch) in feasible_two_cell(3) {
        let instance = Instance::new(&config, &ch).unwrap();
        let two = oracle(&instance);
        let p = [7.0, 12.0];
        let t = [0.3, 0.05];
        let got = surrogate_objective(&PowerVector::new(p.to_vec()).unwrap(), &SurrogateState(t.to_vec()), &ch);
        assert!((got - two.surrogate(p, t)).abs() < 1e-12);
    }
}

#[test]
fn subproblem_matches_grid_search() {
    for (config, ch) in feasible_two_cell(5) {
        let instance = Instance::new(&config, &ch).unwrap();
        let two = oracle(&instance);
        let start = PowerVector::equal(2, instance.constraints.budget);
        let t = t_update_all(&start, &ch);
        let sol = solve_subproblem(&t, &instance.constraints, &ch, &start).unwrap();
        let (_, best) = two.grid_maximum(|p| two.surrogate(p, [t.0[0], t.0[1]])).unwrap();
        assert!(
            (sol.objective - best).abs() <= 1e-5,
            "barrier {} vs grid {best}",
            sol.objective
        );
        assert!(sol.kkt_residual <= 1e-6, "kkt {}", sol.kkt_residual);
    }
}

#[test]
fn warm_and_cold_starts_reach_the_same_subproblem_optimum() {
    for (config, ch) in feasible_two_cell(4) {
        let instance = Instance::new(&config, &ch).unwrap();
        let budget = instance.constraints.budget;
        let t = t_update_all(&PowerVector::equal(2, budget), &ch);
        let cold = solve_subproblem(
            &t,
            &instance.constraints,
            &ch,
            &PowerVector::new(vec![0.0, 0.0]).unwrap(),
        )
        .unwrap();
        let warm = solve_subproblem(&t, &instance.constraints, &ch, &cold.powers).unwrap();
        assert!((cold.objective - warm.objective).abs() <= 1e-8);
    }
}

#[test]
fn proposed_allocation_matches_grid_on_two_cells() {
    for (config, ch) in feasible_two_cell(4) {
        let instance = Instance::new(&config, &ch).unwrap();
        let (_, best) = oracle(&instance).grid_optimum().unwrap();
        let res = optimize_ppa_default(&config, &ch).unwrap();
        assert!(
            (res.sum_rate - best).abs() <= 1e-4,
            "ppa {} vs grid {best}",
            res.sum_rate
        );
    }
}

#[test]
fn feasibility_switches_once_along_the_budget_axis() {
    let config = ScenarioConfig::default();
    let ch = snapshot(&config, 0).unwrap();
    let feasible = |db: f64| {
        let c = config.with_power_budget_db(db);
        let instance = Instance::new(&c, &ch).unwrap();
        feasibility_check(&instance.constraints, None).unwrap().feasible
    };
    assert!(!feasible(0.0) && feasible(30.0));
    let edge = support::bisect(|db| if feasible(db) { 1.0 } else { -1.0 }, 0.0, 30.0);
    for k in 0..=60 {
        let db = 0.5 * k as f64;
        if (db - edge).abs() > 1e-6 {
            assert_eq!(feasible(db), db > edge, "budget {db} dB, edge {edge} dB");
        }
    }
    let below = config.with_power_budget_db(edge - 0.01);
    assert!(matches!(
        optimize_ppa_default(&below, &ch),
        Err(Error::Infeasible { .. })
    ));
    let above = config.with_power_budget_db(edge + 0.01);
    assert!(optimize_ppa_default(&above, &ch).unwrap().feasible);
}

#[test]
fn random_allocation_respects_every_row_and_its_seed() {
    let config = ScenarioConfig::default().with_power_budget_db(22.0);
    let ch = snapshot(&config, 0).unwrap();
    let a = rpa(&config, &ch, 5).unwrap();
    assert!(a.feasible);
    assert!(a.slacks.iter().all(|s| *s >= 0.0));
    assert_eq!(a.powers, rpa(&config, &ch, 5).unwrap().powers);
    assert_ne!(a.powers, rpa(&config, &ch, 6).unwrap().powers);
}

#[test]
fn equal_allocation_is_flagged_not_rejected() {
    let config = ScenarioConfig::default().with_power_budget_db(15.0);
    let ch = snapshot(&config, 0).unwrap();
    let res = epa(&config, &ch).unwrap();
    assert!(res
        .powers
        .as_slice()
        .iter()
        .all(|p| (p - config.power_budget() / 3.0).abs() < 1e-12));
    assert!(!res.feasible);
}

fn scenario(seed: u64, budget_db: f64, xi: f64) -> (ScenarioConfig, ChannelRealization) {
    let config = ScenarioConfig {
        seed,
        power_budget_db: budget_db,
        ..ScenarioConfig::default()
    }
    .with_pod_threshold(xi);
    let ch = snapshot(&config, 0).unwrap();
    (config, ch)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn proposed_allocation_is_safe_and_dominant(seed in 0u64..500, budget_db in 14.0f64..26.0, xi in 0.3f64..0.9) {
        let (config, ch) = scenario(seed, budget_db, xi);
        let res = match optimize_ppa_default(&config, &ch) {
            Ok(r) => r,
            Err(Error::Infeasible { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(res.feasible);
        prop_assert!(res.slacks.iter().all(|s| *s >= -1e-9));
        prop_assert!(res.per_target_pod.iter().all(|p| p.value() >= xi - 1e-6));
        prop_assert!(res.powers.total() <= config.power_budget() * (1.0 + 1e-9));
        prop_assert!(res.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!((res.sum_rate - res.per_user_rate.iter().sum::<f64>()).abs() < 1e-9);
        prop_assert!((res.sum_rate - sum_rate(&res.powers, &ch)).abs() < 1e-12);
        let equal = epa(&config, &ch).unwrap();
        if equal.feasible {
            prop_assert!(res.sum_rate >= equal.sum_rate - 1e-9);
        }
        if let Ok(random) = rpa(&config, &ch, seed) {
            prop_assert!(res.sum_rate >= random.sum_rate - 1e-9);
        }
    }

    #[test]
    fn rescaling_every_gain_and_noise_changes_nothing(seed in 0u64..200, c in 0.01f64..100.0) {
        let (config, ch) = scenario(seed, 22.0, 0.7);
        let base = optimize_ppa_default(&config, &ch);
        let scaled = optimize_ppa_default(&config, &ch.scaled(c));
        match (base, scaled) {
            (Ok(a), Ok(b)) => prop_assert!((a.sum_rate - b.sum_rate).abs() <= 1e-6 * a.sum_rate.max(1.0)),
            (Err(_), Err(_)) => {}
            (a, b) => return Err(TestCaseError::fail(format!("{a:?} vs {b:?}"))),
        }
    }

    #[test]
    fn surrogate_is_a_tight_lower_bound(
        seed in 0u64..1000,
        p in proptest::collection::vec(0.0f64..60.0, 3),
        log_t in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let config = ScenarioConfig { seed, ..ScenarioConfig::default() };
        let ch = snapshot(&config, 0).unwrap();
        let p = PowerVector::new(p).unwrap();
        let exact = sum_rate(&p, &ch);
        let t_star = t_update_all(&p, &ch);
        prop_assert!((surrogate_objective(&p, &t_star, &ch) - exact).abs() < 1e-10);
        let t = SurrogateState(t_star.0.iter().zip(&log_t).map(|(t, z)| t * z.exp()).collect());
        prop_assert!(surrogate_objective(&p, &t, &ch) <= exact + 1e-12);
    }
}
