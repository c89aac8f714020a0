use approx::assert_relative_eq;
use bems_bench::stats::*;
use proptest::prelude::*;

fn mussels() -> Vec<Vec<f64>> {
    vec![
        vec![0.0571, 0.0813, 0.0831, 0.0976, 0.0817, 0.0859, 0.0735, 0.0659, 0.0923, 0.0836],
        vec![0.0873, 0.0662, 0.0672, 0.0819, 0.0749, 0.0649, 0.0835, 0.0725],
        vec![0.0974, 0.1352, 0.0817, 0.1016, 0.0968, 0.1064, 0.105],
        vec![0.1033, 0.0915, 0.0781, 0.0685, 0.0677, 0.0697, 0.0764, 0.0689],
        vec![0.0703, 0.1026, 0.0956, 0.0973, 0.1039, 0.1045],
    ]
}

#[test]
fn hand_decomposition() {
    let a = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]]).unwrap();
    assert_relative_eq!(a.ss_between, 6.0, max_relative = 1e-12);
    assert_relative_eq!(a.ss_within, 6.0, max_relative = 1e-12);
    assert_eq!((a.df_between, a.df_within), (2, 6));
    assert_relative_eq!(a.f_value, 3.0, max_relative = 1e-9);
    // F(2, 6) survival at 3 is (1 + 3·2/6)^-3 = 1/8.
    assert_relative_eq!(a.p_value, 0.125, max_relative = 1e-9);
}

#[test]
fn published_mussel_anova() {
    let a = anova_oneway(&mussels()).unwrap();
    assert_relative_eq!(a.f_value, 7.121019471642447, max_relative = 1e-6);
    assert_relative_eq!(a.p_value, 0.00028122423145345444, max_relative = 1e-6);
}

#[test]
fn mussel_tukey_matches_reference() {
    let pairs = tukey_hsd(&mussels(), 0.05).unwrap();
    let expect = [
        ((0, 1), 0.893466495),
        ((0, 2), 5.65470862e-3),
        ((0, 3), 0.995979353),
        ((0, 4), 0.144698695),
        ((1, 2), 9.25335882e-4),
        ((1, 3), 0.985795596),
        ((1, 4), 3.17354283e-2),
        ((2, 3), 3.69244434e-3),
        ((2, 4), 0.802800094),
        ((3, 4), 9.28838708e-2),
    ];
    assert_eq!(pairs.len(), 10);
    for ((i, j), p) in expect {
        let pair = pairs.iter().find(|t| t.i == i && t.j == j).unwrap();
        assert_relative_eq!(pair.p_adj, p, max_relative = 1e-5);
        assert_eq!(pair.reject, p < 0.05, "{i}-{j}");
        assert!(pair.lower <= pair.diff && pair.diff <= pair.upper);
    }
}

#[test]
fn studentized_range_reference_values() {
    let table = [
        (3.0, 10.0, 3.876776750013158, 0.07710331083841038, 0.6294553249645047),
        (4.0, 476.0, 3.6460251070935965, 0.0651873077349131, 0.5089611457921186),
        (4.0, 20.0, 3.9582935609453846, 0.09495845054630192, 0.4945596545878861),
        (5.0, 39.0, 4.04392102990336, 0.11741759736289492, 0.37754962813816856),
        (2.0, 5.0, 3.63535169514679, 0.056193206737753854, 0.7835627707303147),
        (10.0, 100.0, 4.576784526573067, 0.29482303219014694, 0.07998845474188254),
    ];
    for (k, df, ppf95, sf35, cdf2) in table {
        assert_relative_eq!(1.0 - ptukey(3.5, k, df), sf35, max_relative = 1e-6);
        assert_relative_eq!(ptukey(2.0, k, df), cdf2, max_relative = 1e-6);
        assert_relative_eq!(qtukey(0.95, k, df), ppf95, max_relative = 1e-6);
    }
}

#[test]
fn identical_groups_give_f_zero() {
    let a = anova_oneway(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert_eq!(a.f_value, 0.0);
    assert_eq!(a.p_value, 1.0);
}

#[test]
fn degenerate_inputs_are_errors() {
    assert!(matches!(anova_oneway(&[vec![1.0, 2.0]]), Err(StatsError::TooFewGroups(1))));
    assert!(matches!(anova_oneway(&[vec![1.0], vec![]]), Err(StatsError::EmptyGroup(1))));
    assert!(matches!(anova_oneway(&[vec![1.0], vec![2.0]]), Err(StatsError::NoResidualDf)));
    assert!(matches!(anova_oneway(&[vec![1.0, f64::NAN], vec![2.0, 3.0]]), Err(StatsError::NonFinite(0))));
}

#[test]
fn pearson_definitions() {
    let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37 - 2.0).collect();
    let up: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -0.5 * v + 4.0).collect();
    assert!((pearson(&x, &up).unwrap() - 1.0).abs() < 1e-12);
    assert!((pearson(&x, &down).unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(pearson(&x, &vec![2.0; 20]), None);

    let y = [2.0, 4.5, 3.0, 7.5, 6.0];
    let z = [1.0, 2.0, 2.5, 4.0, 3.5];
    let (mx, my) = (y.iter().sum::<f64>() / 5.0, z.iter().sum::<f64>() / 5.0);
    let cov: f64 = y.iter().zip(&z).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = y.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = z.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    assert_relative_eq!(pearson(&y, &z).unwrap(), cov / (sx * sy), max_relative = 1e-12);

    let m = correlation_matrix(&[y.to_vec(), z.to_vec(), vec![1.0; 5]]);
    assert_eq!(m[0][0], Some(1.0));
    assert_eq!(m[2][2], Some(1.0));
    assert_eq!(m[0][2], None);
    assert_eq!(m[0][1], m[1][0]);
}

proptest! {
    #[test]
    fn anova_is_shift_invariant(
        groups in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 2..8), 2..5),
        shift in -1000.0f64..1000.0,
    ) {
        let a = anova_oneway(&groups).unwrap();
        let shifted: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v + shift).collect()).collect();
        let b = anova_oneway(&shifted).unwrap();
        prop_assert!(a.f_value >= 0.0 && (0.0..=1.0).contains(&a.p_value));
        if a.f_value.is_finite() && a.f_value > 1e-6 {
            prop_assert!((a.f_value - b.f_value).abs() <= 1e-6 * a.f_value.max(1.0));
        }
    }

    #[test]
    fn tukey_p_values_are_probabilities(q in 0.0f64..20.0, k in 2u32..12, df in 2u32..200) {
        let p = ptukey(q, k as f64, df as f64);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        prop_assert!(ptukey(q + 0.5, k as f64, df as f64) + 1e-9 >= p);
    }
}
