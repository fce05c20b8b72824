mod support;

use isac_core::channel::snapshot;
use isac_core::config::Modulation;
use isac_core::detection::{
    detection_threshold, false_alarm_probability, generate_observation, generate_symbols, glrt_statistic,
    pod_closed_form, pod_exact, sensing_coefficients, simulate_detection, DetectionSetup, Hypothesis,
};
use isac_core::rng::{substream, Domain};
use isac_core::{PowerVector, ScenarioConfig};
use num_complex::Complex64;
use proptest::prelude::*;

fn setup(cells: usize, samples: usize, pfa: f64) -> DetectionSetup {
    DetectionSetup {
        cells,
        samples,
        delta: detection_threshold(cells, pfa).unwrap(),
        sigma_s2: 1.0,
        modulation: Modulation::Qpsk,
    }
}

#[test]
fn glrt_matches_normal_equations() {
    let mut rng = substream(5, Domain::Detection, 0);
    for (cells, samples) in [(1, 4), (2, 8), (3, 12), (4, 40)] {
        for modulation in [Modulation::Qpsk, Modulation::Gaussian] {
            let powers = PowerVector::new((0..cells).map(|l| 0.5 + l as f64).collect()).unwrap();
            let block = generate_symbols(&powers, samples, modulation, &mut rng).unwrap();
            let h: Vec<Complex64> = (0..cells).map(|l| Complex64::new(0.3 * l as f64 + 0.2, -0.1)).collect();
            let obs = generate_observation(&block, &h, 2.0, Hypothesis::H1, &mut rng);
            let got = glrt_statistic(&obs.y, &block, 2.0).unwrap();
            let columns: Vec<Vec<Complex64>> = (0..cells).map(|l| block.matrix.column(l).to_vec()).collect();
            let oracle = support::glrt_normal_equations(&obs.y, &columns, 2.0);
            assert!(
                (got - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
                "L = {cells}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn false_alarm_rate_hits_target() {
    let s = setup(3, 100, 1e-3);
    let config = ScenarioConfig::default();
    let ch = snapshot(&config, 0).unwrap();
    let est = simulate_detection(&s, &PowerVector::equal(3, 10.0), &ch, 0, 1_000_000, 9).unwrap();
    let se = (1e-3 * (1.0 - 1e-3) / 1e6f64).sqrt();
    assert!((est.pfa_hat - 1e-3).abs() <= 3.0 * se, "pfa_hat = {}", est.pfa_hat);
}

#[test]
fn false_alarm_rate_ignores_transmit_power() {
    let s = setup(3, 50, 0.05);
    let config = ScenarioConfig::default();
    let ch = snapshot(&config, 0).unwrap();
    let low = simulate_detection(&s, &PowerVector::new(vec![0.1, 0.2, 0.3]).unwrap(), &ch, 1, 40_000, 3).unwrap();
    let high = simulate_detection(
        &s,
        &PowerVector::new(vec![50.0, 5.0, 500.0]).unwrap(),
        &ch,
        1,
        40_000,
        4,
    )
    .unwrap();
    let se = (low.pfa_stderr.powi(2) + high.pfa_stderr.powi(2)).sqrt();
    assert!((low.pfa_hat - high.pfa_hat).abs() <= 4.0 * se);
    assert!((low.pfa_hat - 0.05).abs() <= 4.0 * low.pfa_stderr);
}

#[test]
fn threshold_extremes() {
    let config = ScenarioConfig::default();
    let ch = snapshot(&config, 0).unwrap();
    let p = PowerVector::equal(3, 30.0);
    let mut s = setup(3, 20, 0.1);
    s.delta = 0.0;
    let est = simulate_detection(&s, &p, &ch, 0, 500, 1).unwrap();
    assert_eq!((est.pfa_hat, est.pod_hat), (1.0, 1.0));
    s.delta = 1e9;
    let est = simulate_detection(&s, &p, &ch, 0, 500, 1).unwrap();
    assert_eq!((est.pfa_hat, est.pod_hat), (0.0, 0.0));
}

#[test]
fn exact_pod_matches_monte_carlo_for_fixed_symbols() {
    let mut rng = substream(17, Domain::Detection, 1);
    let powers = PowerVector::new(vec![0.4, 0.25]).unwrap();
    let block = generate_symbols(&powers, 16, Modulation::Qpsk, &mut rng).unwrap();
    let h = vec![Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.5)];
    let delta = detection_threshold(2, 1e-2).unwrap();
    let exact = pod_exact(&h, &block, 1.0, delta).unwrap().value();
    assert!(
        exact > 0.05 && exact < 0.95,
        "operating point {exact} should not saturate"
    );
    let trials = 100_000;
    let hits = (0..trials)
        .filter(|_| {
            let obs = generate_observation(&block, &h, 1.0, Hypothesis::H1, &mut rng);
            glrt_statistic(&obs.y, &block, 1.0).unwrap() >= delta
        })
        .count();
    let p_hat = hits as f64 / trials as f64;
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((p_hat - exact).abs() <= 3.0 * se, "{p_hat} vs {exact}");
}

#[test]
fn gaussian_symbols_have_unit_power_on_average() {
    let mut rng = substream(1, Domain::Detection, 2);
    let block = generate_symbols(
        &PowerVector::new(vec![2.0, 0.5]).unwrap(),
        100_000,
        Modulation::Gaussian,
        &mut rng,
    )
    .unwrap();
    assert!((block.column_power(0) / 2.0 - 1.0).abs() < 0.02);
    assert!((block.column_power(1) / 0.5 - 1.0).abs() < 0.02);
}

#[test]
fn exact_pod_is_unbiased_around_closed_form() {
    // Averaged over symbol draws the realized energy equals N Σ P g, so the
    // two detection probabilities agree on average even where a single draw
    // scatters.
    let config = ScenarioConfig::default();
    let ch = snapshot(&config, 0).unwrap();
    let delta = detection_threshold(config.cells, config.pfa_target).unwrap();
    let powers = PowerVector::equal(config.cells, 20.0);
    let target = 0;
    let h = sensing_coefficients(&ch, target);
    let closed = pod_closed_form(
        &powers,
        &ch.sensing_column(target),
        ch.sigma_s2[target],
        config.samples,
        delta,
    )
    .unwrap()
    .value();
    let draws = 2000;
    let mut sum = 0.0;
    for k in 0..draws {
        let mut rng = substream(3, Domain::Detection, k);
        let block = generate_symbols(&powers, config.samples, config.modulation, &mut rng).unwrap();
        sum += pod_exact(&h, &block, ch.sigma_s2[target], delta).unwrap().value();
    }
    let mean = sum / draws as f64;
    assert!((mean - closed).abs() < 0.01, "mean exact {mean} vs closed {closed}");
}

#[test]
fn closed_form_reduces_to_false_alarm_without_power() {
    for cells in 1..=4 {
        let delta = detection_threshold(cells, 1e-4).unwrap();
        let zero = PowerVector::new(vec![0.0; cells]).unwrap();
        let pod = pod_closed_form(&zero, &vec![1.0; cells], 1.0, 100, delta)
            .unwrap()
            .value();
        let pfa = false_alarm_probability(cells, delta).unwrap().value();
        assert!((pod - pfa).abs() < 1e-15);
        assert!((pfa - 1e-4).abs() < 1e-16);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn detection_beats_false_alarm(
        cells in 1usize..4,
        extra in 0usize..30,
        pfa in 1e-6f64..0.2,
        scale in 0.0f64..3.0,
        seed in 0u64..1000,
    ) {
        let samples = cells + extra;
        let delta = detection_threshold(cells, pfa).unwrap();
        let mut rng = substream(seed, Domain::Detection, 0);
        let powers = PowerVector::new(vec![1.0; cells]).unwrap();
        let block = generate_symbols(&powers, samples, Modulation::Qpsk, &mut rng).unwrap();
        let h: Vec<Complex64> = (0..cells).map(|l| Complex64::new(scale / (1.0 + l as f64), 0.0)).collect();
        let pod = pod_exact(&h, &block, 1.0, delta).unwrap().value();
        prop_assert!(pod >= pfa - 1e-12);
    }

    #[test]
    fn closed_form_grows_with_power_and_samples(
        p in proptest::collection::vec(0.0f64..10.0, 3),
        factor in 1.0f64..4.0,
        samples in 3usize..200,
        more in 0usize..100,
    ) {
        let delta = detection_threshold(3, 1e-6).unwrap();
        let g = [0.7, 0.05, 0.2];
        let base = PowerVector::new(p.clone()).unwrap();
        let q = pod_closed_form(&base, &g, 3.0, samples, delta).unwrap().value();
        let louder = pod_closed_form(&base.scaled(factor), &g, 3.0, samples, delta).unwrap().value();
        let longer = pod_closed_form(&base, &g, 3.0, samples + more, delta).unwrap().value();
        prop_assert!(louder >= q - 1e-13);
        prop_assert!(longer >= q - 1e-13);
    }
}
