use proptest::prelude::*;
use steering_core::criteria::{closed_form, Criterion, Scenario};
use steering_core::expio::{
    evaluate_with_errors, load_counts, synthesize_counts, write_counts_csv, AnalysisOptions,
    CountsRecord, Synthesis,
};
use steering_core::qcore::WernerParam;

fn criteria_for(m: usize) -> Vec<Criterion> {
    let mut c = vec![
        Criterion::SHANNON,
        Criterion::TSALLIS2,
        Criterion::DimensionBounded,
    ];
    if m == 2 {
        c.push(Criterion::RENYI_HALF_INF);
    }
    c
}

fn stat_only(bootstrap: usize, seed: u64) -> AnalysisOptions {
    AnalysisOptions {
        bootstrap,
        jitter_deg: 0.0,
        seed,
        ..Default::default()
    }
}

#[test]
fn high_count_round_trip_within_three_sigma() {
    let scenarios = [
        Scenario::mub(0.9733, 20.0, 10.0, 2).unwrap(),
        Scenario::mub(0.85, 35.0, 45.0, 3).unwrap(),
        Scenario::nom(0.963, 2).unwrap(),
        Scenario::nom(0.963, 3).unwrap(),
    ];
    for (k, sc) in scenarios.iter().enumerate() {
        let settings = sc.settings().unwrap();
        let records = synthesize_counts(
            &settings,
            sc.mu,
            10_000_000,
            Synthesis::Poisson {
                seed: 40 + k as u64,
            },
        )
        .unwrap();
        let reports =
            evaluate_with_errors(&records, &criteria_for(sc.m), &stat_only(200, k as u64)).unwrap();
        for r in reports {
            let want = closed_form(sc, r.result.criterion).unwrap();
            let sigma = r.errors.stat;
            assert!(sigma > 0.0);
            assert!(
                (r.result.value - want).abs() <= 3.0 * sigma,
                "{:?} {}: {} vs {want} (sigma {sigma})",
                sc.mode,
                r.result.criterion,
                r.result.value
            );
        }
    }
}

#[test]
fn statistical_error_scales_as_inverse_root_n() {
    let sc = Scenario::mub(0.9, 15.0, 20.0, 2).unwrap();
    let settings = sc.settings().unwrap();
    let sigmas: Vec<Vec<f64>> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let recs = synthesize_counts(&settings, sc.mu, n, Synthesis::Expected).unwrap();
            evaluate_with_errors(&recs, &criteria_for(2), &stat_only(800, 17))
                .unwrap()
                .iter()
                .map(|r| r.errors.stat)
                .collect()
        })
        .collect();
    for pair in sigmas.windows(2) {
        for (big, small) in pair[0].iter().zip(&pair[1]) {
            let ratio = big / small / 10f64.sqrt();
            assert!(
                (ratio - 1.0).abs() <= 0.2,
                "sigma ratio / sqrt(10) = {ratio}"
            );
        }
    }
}

#[test]
fn file_round_trip_preserves_analysis() {
    let sc = Scenario::nom(0.963, 3).unwrap();
    let recs = synthesize_counts(
        &sc.settings().unwrap(),
        sc.mu,
        50_000,
        Synthesis::Poisson { seed: 8 },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    write_counts_csv(&recs, std::fs::File::create(&path).unwrap()).unwrap();
    let loaded = load_counts(&path).unwrap();
    let opts = AnalysisOptions {
        settings: Some(sc.settings().unwrap()),
        bootstrap: 50,
        seed: 2,
        ..Default::default()
    };
    let a = evaluate_with_errors(&recs, &criteria_for(3), &opts).unwrap();
    let b = evaluate_with_errors(&loaded, &criteria_for(3), &opts).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn point_estimate_ignores_uniform_rescaling(
        mu in 0.3f64..1.0,
        alpha in 0.0f64..90.0,
        phi in 0.0f64..90.0,
        m in 2usize..=3,
        scale in 2u64..50,
        seed in any::<u64>(),
    ) {
        let sc = Scenario::mub(mu, alpha, phi, m).unwrap();
        let recs = synthesize_counts(&sc.settings().unwrap(), WernerParam::new(mu).unwrap(), 3_000, Synthesis::Poisson { seed }).unwrap();
        prop_assume!(recs.iter().all(|r| r.total() > 0));
        let scaled: Vec<CountsRecord> = recs
            .iter()
            .map(|r| CountsRecord { counts: r.counts.map(|row| row.map(|c| c * scale)), ..r.clone() })
            .collect();
        let a = evaluate_with_errors(&recs, &criteria_for(m), &stat_only(0, 0)).unwrap();
        let b = evaluate_with_errors(&scaled, &criteria_for(m), &stat_only(0, 0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.result.value - y.result.value).abs() <= 1e-12);
        }
    }

    #[test]
    fn budget_total_is_exact_quadrature(boot in 2usize..40, jitter in 0.0f64..2.0, seed in any::<u64>()) {
        let sc = Scenario::mub(0.95, 10.0, 0.0, 2).unwrap();
        let recs = synthesize_counts(&sc.settings().unwrap(), sc.mu, 2_000, Synthesis::Poisson { seed }).unwrap();
        let opts = AnalysisOptions { bootstrap: boot, jitter_deg: jitter, seed, ..Default::default() };
        for r in evaluate_with_errors(&recs, &criteria_for(2), &opts).unwrap() {
            let e = r.errors;
            prop_assert_eq!(e.total, (e.stat * e.stat + e.sys * e.sys).sqrt());
            prop_assert!(e.total >= e.stat.max(e.sys));
        }
    }
}
