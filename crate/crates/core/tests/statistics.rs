use cross_tasep::estimator::{expected_distance_series, monte_carlo_distance, sandwich_check_float};
use cross_tasep::plane::{find_t, label_clusters, PlaneWindow};
use cross_tasep::rng::{replica_rng, replica_seed};
use cross_tasep::tasep::{nu_pair_simulated, stationary_exact, SimulationConfig, TasepRates};

const SEED: u64 = 77;

#[test]
fn two_sided_bound_up_to_k7() {
    for k in 1..=7usize {
        for eps in [0.1, 0.2, 0.4] {
            let r = sandwich_check_float(k, eps, 500, 1e-9).unwrap();
            assert!(r.passed(), "K={k} eps={eps}: gap [{}, {}], {:?}", r.min_gap, r.max_gap, r.violations.first());
            assert!(r.max_gap <= 2.0 * k as f64 + 1e-9);
        }
    }
}

#[test]
fn per_column_ratio_approaches_the_slope_from_above() {
    for (k, eps) in [(2usize, 0.3), (3, 0.2), (4, 0.1)] {
        let nu = stationary_exact(k, &TasepRates::uniform(eps).unwrap()).unwrap().nu_pair;
        let slope = 1.0 + 2.0 * eps * nu;
        let series = expected_distance_series(k, eps, 2000).unwrap();
        let excess = |n: usize| series[n] / n as f64 - slope;
        assert!(excess(2000) >= -1e-12 && excess(2000) < excess(100) && excess(100) < excess(10));
        assert!(excess(2000) <= 2.0 * k as f64 / 2000.0 + 1e-12);
    }
}

#[test]
fn monte_carlo_matches_exact_short_strip() {
    let exact = expected_distance_series(2, 0.3, 10).unwrap()[10];
    let mc = monte_carlo_distance(2, 0.3, 10, 1_000_000, SEED).unwrap();
    let se = mc.stderr.unwrap();
    assert!((mc.value - exact).abs() <= 4.0 * se, "{} vs {exact} (se {se})", mc.value);
}

#[test]
fn monte_carlo_matches_exact_long_strip() {
    let exact = expected_distance_series(3, 0.2, 200).unwrap()[200];
    let mc = monte_carlo_distance(3, 0.2, 200, 40_000, SEED + 1).unwrap();
    let se = mc.stderr.unwrap();
    assert!((mc.value - exact).abs() <= 4.0 * se, "{} vs {exact} (se {se})", mc.value);
}

#[test]
fn simulation_matches_stationary_solve() {
    for (k, eps) in [(3usize, 0.2), (5, 0.4)] {
        let exact = stationary_exact(k, &TasepRates::uniform(eps).unwrap()).unwrap().nu_pair;
        let config = SimulationConfig { burn_in: 10_000, samples: 2_000_000, batch: 10_000 };
        let sim = nu_pair_simulated(k, eps, config, &mut replica_rng(SEED, k as u64)).unwrap();
        let se = sim.stderr.unwrap();
        assert!((sim.nu_pair - exact).abs() <= 4.0 * se, "K={k}: {} vs {exact} (se {se})", sim.nu_pair);
    }
}

/// Fraction of windows in which `(n, 0)` is not the first boundary-connected
/// point on the axis.
fn first_point_missed(eps: f64, replicas: u64) -> f64 {
    let n = 3;
    let missed = (0..replicas)
        .filter(|&r| {
            let w = PlaneWindow::around_axis(replica_seed(SEED, r), eps, 3 * n, 3).unwrap();
            let labels = label_clusters(&w);
            find_t(&w, &labels, n, 1) != Some((n as i64, 0))
        })
        .count();
    missed as f64 / replicas as f64
}

#[test]
fn first_axis_point_miss_rate_scales_like_eps4() {
    let coarse = first_point_missed(0.3, 50_000);
    let fine = first_point_missed(0.15, 400_000);
    assert!(fine > 0.0);
    let factor = coarse / fine;
    assert!((8.0..=32.0).contains(&factor), "{coarse} / {fine} = {factor}");
}

fn origin_boundary_fraction(eps: f64, replicas: u64) -> f64 {
    let hits = (0..replicas)
        .filter(|&r| {
            let w = PlaneWindow::sample(replica_seed(SEED, r), eps, -15..=15, -15..=15).unwrap();
            let labels = label_clusters(&w);
            labels.boundary_connected(labels.label(w.index((0, 0)).unwrap()))
        })
        .count();
    hits as f64 / replicas as f64
}

#[test]
fn boundary_connection_drops_at_criticality() {
    let sub = origin_boundary_fraction(0.05, 2000);
    let critical = origin_boundary_fraction(0.5, 2000);
    assert!(sub > 0.95, "{sub}");
    assert!(critical < sub - 0.3, "{critical} vs {sub}");
}
