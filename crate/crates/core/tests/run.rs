mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use projfeas::diagnostics::TrialRecord;
use projfeas::domset::{queens_graph, DomsetProblem};
use projfeas::metric::UpdateOutcome;
use projfeas::sat::{random_3sat, SatProblem};
use projfeas::scheme::{avg_double_reflect_step, relaxed_dr_step};
use projfeas::{
    run, ConstraintPair, Granularity, MetricState, Outcome, Partition, PointVector, RunConfig, Scheme,
    TraceOptions, TunerConfig, TypedErrors, UpdateMode,
};

/// `R[δ](x) = (2-δ) P(x) - (1-δ) x` written out longhand.
fn reflect(p: &[f64], x: &[f64], delta: f64) -> Vec<f64> {
    p.iter().zip(x).map(|(p, x)| (2.0 - delta) * p - (1.0 - delta) * x).collect()
}

fn double_reflect<C: ConstraintPair>(cp: &C, x: &[f64], s: &[f64], delta: f64) -> Vec<f64> {
    let mut pa = vec![0.0; x.len()];
    cp.project_a(x, s, &mut pa);
    let ra = reflect(&pa, x, delta);
    let mut pb = vec![0.0; x.len()];
    cp.project_b(&ra, s, &mut pb);
    reflect(&pb, &ra, delta)
}

fn sat_problem(seed: u64) -> SatProblem {
    SatProblem::new(random_3sat(12, 40, seed))
}

proptest! {
    #[test]
    fn averaged_step_matches_longhand(seed in any::<u64>(), n in 1usize..5, delta in 0.0f64..1.0) {
        let cp = sat_problem(seed % 7);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..cp.dim()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let s: Vec<f64> = (0..cp.dim()).map(|_| rng.gen_range(0.5..2.0)).collect();
        let mut cur = x.clone();
        let mut acc = x.clone();
        for _ in 0..n {
            cur = double_reflect(&cp, &cur, &s, delta);
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c;
            }
        }
        let expect: Vec<f64> = acc.iter().map(|a| a / (n + 1) as f64).collect();
        let pv = PointVector::from_values(cp.layout().clone(), x).unwrap();
        let got = avg_double_reflect_step(&pv, &cp, &s, n, delta).unwrap();
        prop_assert!(sq_dist(got.values(), &expect) < 1e-18);
    }

    #[test]
    fn relaxed_step_matches_longhand(seed in any::<u64>(), beta in 0.05f64..1.95) {
        let cp = sat_problem(seed % 7);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..cp.dim()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let s = vec![1.0; cp.dim()];
        let rr = double_reflect(&cp, &x, &s, 0.0);
        let expect: Vec<f64> = x.iter().zip(&rr).map(|(x, r)| (1.0 - beta / 2.0) * x + beta / 2.0 * r).collect();
        let pv = PointVector::from_values(cp.layout().clone(), x).unwrap();
        let got = relaxed_dr_step(&pv, &cp, &s, beta).unwrap();
        prop_assert!(sq_dist(got.values(), &expect) < 1e-18);
        if (beta - 1.0).abs() < 1e-12 {
            let dr = avg_double_reflect_step(&pv, &cp, &s, 1, 0.0).unwrap();
            prop_assert!(sq_dist(dr.values(), got.values()) < 1e-24);
        }
    }

    #[test]
    fn tuner_keeps_parameters_positive(
        alpha in 0.0f64..0.999,
        errs in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 3), 1..50),
        anchored in any::<bool>(),
    ) {
        let part = Partition::from_assignment(vec!["a".into(), "b".into(), "c".into()], vec![0, 1, 1, 2]).unwrap();
        let mode = if anchored { UpdateMode::FirstAnchored } else { UpdateMode::MeanRelative };
        let mut st = MetricState::new(part, &TunerConfig::new(Granularity::ByType, alpha).with_mode(mode)).unwrap();
        for e in errs {
            let aggregate = (e.iter().map(|v| v * v).sum::<f64>() / 3.0).sqrt();
            st.update(&TypedErrors { per_group: e, aggregate });
            prop_assert!(st.params().iter().all(|&p| p > 0.0 && p.is_finite()));
            if anchored {
                prop_assert_eq!(st.params()[0], 1.0);
            }
        }
    }

    #[test]
    fn zero_alpha_never_updates(e in prop::collection::vec(0.01f64..10.0, 2)) {
        let part = Partition::from_assignment(vec!["a".into(), "b".into()], vec![0, 1]).unwrap();
        let mut st = MetricState::new(part, &TunerConfig::new(Granularity::ByType, 0.0)).unwrap();
        let aggregate = (e.iter().map(|v| v * v).sum::<f64>() / 2.0).sqrt();
        prop_assert_eq!(st.update(&TypedErrors { per_group: e, aggregate }), UpdateOutcome::Skipped);
        prop_assert_eq!(st.params(), &[1.0, 1.0][..]);
    }
}

#[test]
fn mean_relative_update_by_hand() {
    let part = Partition::from_assignment(vec!["a".into(), "b".into()], vec![0, 1]).unwrap();
    let mut st = MetricState::new(part, &TunerConfig::new(Granularity::ByType, 0.1)).unwrap();
    // eps = sqrt((1 + 9)/2) = sqrt(5)
    st.update(&TypedErrors { per_group: vec![1.0, 3.0], aggregate: 5f64.sqrt() });
    let r5 = 5f64.sqrt();
    assert!((st.params()[0] - (1.0 + 0.1 * (1.0 / r5 - 1.0))).abs() < 1e-15);
    assert!((st.params()[1] - (1.0 + 0.1 * (3.0 / r5 - 1.0))).abs() < 1e-15);
}

#[test]
fn runs_are_deterministic_and_share_initial_points() {
    let cp = DomsetProblem::new(queens_graph(5), 3).unwrap();
    let cfg = RunConfig::new(300, 42).with_trace(TraceOptions { stride: 7, ..TraceOptions::default() });
    let tuner = TunerConfig::new(Granularity::ByType, 1e-3).with_mode(UpdateMode::FirstAnchored);
    let s1 = Scheme::relaxed(0.5).unwrap();
    let s2 = Scheme::averaged(2, 0.1).unwrap();
    for t in 0..3 {
        let c = cfg.clone().with_trial(t);
        let a = run(&s1, &cp, &c, Some(&tuner)).unwrap();
        let b = run(&s1, &cp, &c, Some(&tuner)).unwrap();
        assert_eq!(a, b);
        let other = run(&s2, &cp, &c, None).unwrap();
        assert_eq!(a.init_hash, other.init_hash);
    }
    let t0 = run(&s1, &cp, &cfg.clone().with_trial(0), None).unwrap();
    let t1 = run(&s1, &cp, &cfg.clone().with_trial(1), None).unwrap();
    assert_ne!(t0.init_hash, t1.init_hash);
}

#[test]
fn zero_alpha_run_matches_untuned_run() {
    let cp = DomsetProblem::new(queens_graph(6), 3).unwrap();
    let cfg = RunConfig::new(2000, 5).with_trace(TraceOptions { stride: 10, ..TraceOptions::default() });
    let scheme = Scheme::relaxed(0.5).unwrap();
    let tuned = run(&scheme, &cp, &cfg, Some(&TunerConfig::new(Granularity::ByType, 0.0))).unwrap();
    let plain = run(&scheme, &cp, &cfg, None).unwrap();
    assert_eq!(tuned.metric_updates, 0);
    assert_eq!(tuned.outcome, plain.outcome);
    assert_eq!(tuned.iterations, plain.iterations);
    assert_eq!(tuned.series, plain.series);
}

#[test]
fn capped_runs_stop_at_the_cap() {
    // no four queens dominate the 8x8 board
    let cp = DomsetProblem::new(queens_graph(8), 4).unwrap();
    let cfg = RunConfig::new(250, 1).with_trace(TraceOptions { stride: 100, ..TraceOptions::default() });
    let tr = run(&Scheme::relaxed(0.5).unwrap(), &cp, &cfg, None).unwrap();
    assert_eq!(tr.outcome, Outcome::Capped);
    assert_eq!(tr.iterations, 250);
    assert_eq!(tr.series.iterations, [0, 100, 200, 250]);
    let rec = TrialRecord::from_trace("x", &tr, None);
    assert!(!rec.solved);
    assert_eq!(rec.iterations, 250);
}

#[test]
fn invalid_configurations_are_rejected() {
    let cp = sat_problem(0);
    assert!(Scheme::relaxed(0.0).is_err());
    assert!(Scheme::relaxed(2.0).is_err());
    assert!(Scheme::averaged(0, 0.1).is_err());
    assert!(Scheme::averaged(1, 1.5).is_err());
    let cfg = RunConfig::new(10, 0);
    assert!(run(
        &Scheme::relaxed(1.0).unwrap(),
        &cp,
        &cfg,
        Some(&TunerConfig::new(Granularity::ByType, 1.0))
    )
    .is_err());
    assert!(run(
        &Scheme::relaxed(1.0).unwrap(),
        &cp,
        &cfg,
        Some(&TunerConfig::new(Granularity::ByTypeLocation, 0.1))
    )
    .is_err());
}
