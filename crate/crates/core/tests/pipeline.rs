use graphbal::htest::default_k;
use graphbal::sim::{gen_gaussian_scenario, ScenarioConfig, ScenarioKind};
use graphbal::{balance_test, BalanceConfig, Covariates, Dataset, Method, TestForm};

fn config(seed: u64) -> BalanceConfig {
    BalanceConfig {
        n_mc: 20_000,
        permutation_draws: 2_000,
        seed,
        ..BalanceConfig::default()
    }
}

fn scenario(kind: ScenarioKind, delta: f64, rep: u64) -> Dataset {
    gen_gaussian_scenario(&ScenarioConfig::new(kind, delta, 4, 3), rep).unwrap()
}

#[test]
fn large_location_shift_is_detected_by_graph_count_methods() {
    let ds = scenario(ScenarioKind::Location, 1.0, 0);
    for method in [Method::Knn, Method::Crossmatch, Method::Runs] {
        for form in [TestForm::Wald, method.default_form()] {
            let r = balance_test(&ds, method, form, &config(3)).unwrap();
            assert!(r.p_value < 0.01, "{} {}: p = {}", method.name(), form.name(), r.p_value);
        }
    }
}

#[test]
fn path_ranks_detect_separated_groups() {
    let ds = scenario(ScenarioKind::Location, 3.0, 0);
    let r = balance_test(&ds, Method::Ranks, TestForm::Wald, &config(3)).unwrap();
    assert!(r.p_value < 0.01, "p = {}", r.p_value);
}

#[test]
fn reports_are_reproducible_for_a_fixed_seed() {
    let ds = scenario(ScenarioKind::Scale, 0.2, 1);
    for method in Method::ALL {
        let form = method.default_form();
        let a = balance_test(&ds, method, form, &config(11)).unwrap();
        let b = balance_test(&ds, method, form, &config(11)).unwrap();
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits(), "{}", method.name());
        assert_eq!(a.components, b.components);
    }
}

#[test]
fn knn_wald_is_invariant_to_row_order_and_group_names() {
    let ds = scenario(ScenarioKind::Correlation, 0.5, 2);
    let n = ds.n();
    let order: Vec<usize> = (0..n).map(|i| (i * 37 + 11) % n).collect();
    let shuffled = Dataset::from_groups(
        ds.covariates().select_rows(&order),
        order.iter().map(|&i| (ds.groups()[i] + 1) % 3).collect(),
    )
    .unwrap();
    let a = balance_test(&ds, Method::Knn, TestForm::Wald, &config(0)).unwrap();
    let b = balance_test(&shuffled, Method::Knn, TestForm::Wald, &config(0)).unwrap();
    assert!((a.statistic - b.statistic).abs() < 1e-8, "{} vs {}", a.statistic, b.statistic);
    assert!((a.p_value - b.p_value).abs() < 1e-10);
    let mut ca = a.components.clone();
    let mut cb = b.components.clone();
    ca.sort_by(f64::total_cmp);
    cb.sort_by(f64::total_cmp);
    assert_eq!(ca, cb);
}

#[test]
fn knn_power_grows_along_the_location_grid() {
    let reps = 40;
    let reject = |delta: f64| {
        (0..reps)
            .filter(|&r| {
                let ds = scenario(ScenarioKind::Location, delta, r);
                balance_test(&ds, Method::Knn, TestForm::Wald, &config(r)).unwrap().p_value <= 0.05
            })
            .count()
    };
    let counts: Vec<usize> = [0.0, 0.15, 0.4].iter().map(|&d| reject(d)).collect();
    assert!(counts[0] <= 8, "{counts:?}");
    assert!(counts[2] >= 36, "{counts:?}");
    assert!(counts[0] <= counts[1] && counts[1] <= counts[2], "{counts:?}");
}

#[test]
fn odd_sample_drops_exactly_one_unit_from_the_crossmatch() {
    let rows: Vec<[f64; 2]> = (0..21).map(|i| [i as f64, ((i * 7) % 5) as f64]).collect();
    let labels: Vec<i64> = (0..21).map(|i| i % 3 + 1).collect();
    let ds = Dataset::new(Covariates::from_rows(&rows).unwrap(), &labels).unwrap();
    let r = balance_test(&ds, Method::Crossmatch, TestForm::Wald, &config(5)).unwrap();
    assert!(r.graph_meta.dropped_unit.is_some());
    assert_eq!(r.graph_meta.n, 21);
    assert!((0.0..=1.0).contains(&r.p_value));
}

#[test]
fn default_k_follows_sample_size() {
    assert_eq!(default_k(750), 75);
    assert_eq!(default_k(5), 1);
    let ds = scenario(ScenarioKind::Null, 0.0, 3);
    let r = balance_test(&ds, Method::Knn, TestForm::Max, &config(1)).unwrap();
    assert_eq!(r.graph_meta.k, Some(default_k(ds.n())));
}
