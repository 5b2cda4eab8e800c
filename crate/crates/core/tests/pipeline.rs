use rru_core::harness::config::{ExperimentConfig, LawSpec, RunSection, TestKind, UrnSection};
use rru_core::harness::{evaluate, run_replicates, Verdict};
use rru_core::{LawKind, Regime};

fn smoke(tests: Vec<TestKind>) -> ExperimentConfig {
    let law = LawSpec::new(LawKind::TwoPoint { a: 0.0, b: 2.0, p_a: 0.5 });
    ExperimentConfig {
        name: String::from("t"),
        seed: 99,
        smoke: true,
        tests,
        urn: UrnSection { regime: Regime::EqualMean, initial: [1.0, 1.0], law1: law.clone(), law2: law },
        run: RunSection { horizon: 128, proxy_horizon: 3200, replicates: 40, ..RunSection::default() },
        tolerances: Default::default(),
        embedding: None,
    }
}

#[test]
fn records_depend_only_on_index() {
    let exp = smoke(vec![TestKind::PivotCltEqual, TestKind::BridgeTail]).validate().unwrap();
    let whole = run_replicates(&exp, 0..13).unwrap();
    let mut pieces = run_replicates(&exp, 0..5).unwrap();
    pieces.extend(run_replicates(&exp, 5..6).unwrap());
    pieces.extend(run_replicates(&exp, 6..13).unwrap());
    assert_eq!(whole, pieces);
}

#[test]
fn evaluate_keeps_config_order() {
    let tests = vec![TestKind::BridgeTail, TestKind::DrawCountEqual, TestKind::PivotCltEqual];
    let exp = smoke(tests.clone()).validate().unwrap();
    let records = run_replicates(&exp, 0..40).unwrap();
    let s = evaluate(&exp, &records, Vec::new());
    assert_eq!(s.outcomes.iter().map(|o| o.test).collect::<Vec<_>>(), tests);
    assert!(s.outcomes.iter().all(|o| o.underpowered));
    assert_eq!(s.replicates, 40);
}

#[test]
fn bridge_curve_is_nonincreasing_from_one() {
    let exp = smoke(vec![TestKind::BridgeTail]).validate().unwrap();
    let records = run_replicates(&exp, 0..40).unwrap();
    let s = evaluate(&exp, &records, Vec::new());
    match &s.outcomes[0].detail {
        rru_core::harness::Detail::Tail { curve, .. } => {
            assert_eq!(curve[0].x, 0.0);
            assert_eq!(curve[0].empirical, 1.0);
            assert!(curve.windows(2).all(|w| w[1].empirical <= w[0].empirical && w[1].x > w[0].x));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn polya_lil_ratios_are_finite() {
    let mut cfg = smoke(vec![TestKind::LilEnvelope]);
    cfg.urn.law1 = LawSpec::new(LawKind::Constant { value: 1.0 });
    cfg.urn.law2 = LawSpec::new(LawKind::Constant { value: 1.0 });
    cfg.run.proxy_horizon = 4096;
    let exp = cfg.validate().unwrap();
    let records = run_replicates(&exp, 0..20).unwrap();
    assert!(records.iter().all(|r| r.lil_ratio.is_some_and(|x| x.is_finite() && x > 0.0)));
    let s = evaluate(&exp, &records, Vec::new());
    assert!(matches!(s.outcomes[0].verdict, Verdict::Pass | Verdict::Fail));
}

#[test]
fn config_rejections_name_the_key() {
    let mut cfg = smoke(vec![TestKind::PivotCltUnequal]);
    assert_eq!(cfg.validate().unwrap_err().path, "tests[0]");
    cfg.tests = vec![TestKind::PivotCltEqual];
    cfg.urn.law2 = LawSpec { sigma2: Some(3.0), ..cfg.urn.law2.clone() };
    assert_eq!(cfg.validate().unwrap_err().path, "urn.law2.sigma2");
    let mut cfg = smoke(vec![TestKind::PivotCltEqual]);
    cfg.urn.law2 = LawSpec::new(LawKind::Constant { value: 2.0 });
    assert_eq!(cfg.validate().unwrap_err().path, "urn.regime");
    let mut cfg = smoke(vec![TestKind::PivotCltEqual]);
    cfg.run.proxy_horizon = 200;
    assert_eq!(cfg.validate().unwrap_err().path, "run.proxy_horizon");
}
