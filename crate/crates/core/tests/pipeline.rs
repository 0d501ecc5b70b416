use num_bigint::BigUint;
use waring_circle::counting::{
    count_representations, count_representations_naive, CountConfig, ProblemInstance,
};
use waring_circle::exp_sums::{complete_sum, CompleteSumSpec};
use waring_circle::verify::{end_to_end_report, equal_mu, predict_main_term, HRule};
use waring_circle::weyl_sums::{short_weyl_sum_at, WindowSpec};
use waring_circle::{ArcPoint, Complex64};

#[test]
fn ratio_approaches_one_when_windows_stay_positive() {
    // H = 0.6·μN keeps every window away from zero.
    let cfg = CountConfig::default();
    let targets = [1_000_000u128, 10_000_000];
    let mut ratios = Vec::new();
    for &n in &targets {
        let h = 0.6 * n as f64 / 9.0;
        let r = end_to_end_report(3, &[n], HRule::Fixed(h), &equal_mu(9), 500, &cfg).unwrap();
        assert!(!r.rows[0].windows_reach_zero);
        ratios.push(r.rows[0].ratio);
    }
    assert!(ratios.iter().all(|r| (0.4..=2.5).contains(r)), "{ratios:?}");
    assert!(
        (ratios[1] - 1.0).abs() < (ratios[0] - 1.0).abs(),
        "{ratios:?}"
    );
}

#[test]
fn permuted_weights_give_same_count() {
    let cfg = CountConfig::default();
    let mu = vec![0.08, 0.1, 0.12, 0.1, 0.1, 0.14, 0.11, 0.1, 0.15];
    let p = ProblemInstance::new(3, 9, 3_000_000, 9e4, mu).unwrap();
    let base = count_representations(&p, &cfg).unwrap().count;
    assert!(base > BigUint::from(0u8));
    for perm in [
        [8, 7, 6, 5, 4, 3, 2, 1, 0],
        [1, 0, 3, 2, 5, 4, 7, 6, 8],
        [4, 2, 0, 8, 6, 1, 3, 5, 7],
    ] {
        let q = p.permuted(&perm);
        assert_eq!(count_representations(&q, &cfg).unwrap().count, base);
    }
    let report_a = end_to_end_report(3, &[9], HRule::Fixed(6.0), &equal_mu(9), 10, &cfg).unwrap();
    assert_eq!(report_a.rows[0].j_exact, BigUint::from(1u8));
}

#[test]
fn counter_matches_oracle_for_quartic_and_small_r() {
    let cfg = CountConfig::default();
    // n = 4, r = 5 with weights from a lattice point.
    let xs = [11u128, 12, 12, 13, 14];
    let target: u128 = xs.iter().map(|x| x.pow(4)).sum();
    let mu: Vec<f64> = xs.iter().map(|x| x.pow(4) as f64 / target as f64).collect();
    let s: f64 = mu.iter().sum();
    let mu: Vec<f64> = mu.iter().map(|m| m / s).collect();
    let p = ProblemInstance::new(4, 5, target, 12_000.0, mu).unwrap();
    let fast = count_representations(&p, &cfg).unwrap().count;
    let slow = count_representations_naive(&p, &cfg).unwrap();
    assert_eq!(fast, slow);
    assert!(fast >= BigUint::from(1u8));
}

#[test]
fn tight_memory_budget_is_reported() {
    let cfg = CountConfig::default().with_mem_mb(0);
    let p = ProblemInstance::equal_weights(3, 9, 10_000_000, 5e5f64).unwrap();
    let err = count_representations(&p, &cfg).unwrap_err();
    assert!(
        matches!(err, waring_circle::Error::BudgetExceeded { .. }),
        "{err}"
    );
}

#[test]
fn single_precision_paths_agree() {
    let w = WindowSpec::new(3, 500, 200).unwrap();
    let a: Complex64 = short_weyl_sum_at(&w, 0.3125f64).unwrap();
    let b = short_weyl_sum_at(&w, 0.3125f32).unwrap();
    assert!((a.re - b.re as f64).abs() < 1e-3 && (a.im - b.im as f64).abs() < 1e-3);
    let s64: Complex64 = complete_sum(CompleteSumSpec::untwisted(3, 2, 91)).unwrap();
    let s32 = complete_sum::<f32>(CompleteSumSpec::untwisted(3, 2, 91)).unwrap();
    assert!((s64.re - s32.re as f64).abs() < 1e-3);
    let origin = ArcPoint::<f32>::origin();
    assert_eq!(origin.q, 1);
}

#[test]
fn prediction_is_positive_for_standard_instances() {
    for target in [100_000u128, 1_000_000, 12_345_678] {
        let p = ProblemInstance::equal_weights(3, 9, target, (target as f64).powf(0.9)).unwrap();
        let pred = predict_main_term(&p, 200).unwrap();
        assert!(pred.value > 0.0 && pred.singular > 0.0);
    }
}
