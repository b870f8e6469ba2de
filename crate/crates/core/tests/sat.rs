mod common;

use common::*;
use proptest::prelude::*;

use projfeas::sat::{emit_dimacs, parse_dimacs, random_3sat, solution_line, Literal, SatInstance, SatProblem};
use projfeas::{run, unit_scales, ConstraintPair, RunConfig, Scheme, TraceOptions};

const SAMPLE: &str = include_str!("data/uf20-91-sample.cnf");

#[test]
fn satlib_sample_parses_and_round_trips() {
    let inst = parse_dimacs(SAMPLE).unwrap();
    assert_eq!((inst.num_vars(), inst.num_clauses(), inst.num_edges()), (20, 91, 273));
    let text = emit_dimacs(&inst);
    assert!(text.starts_with("p cnf 20 91\n"));
    assert_eq!(parse_dimacs(&text).unwrap(), inst);
    assert_eq!(emit_dimacs(&parse_dimacs(&text).unwrap()), text);
}

#[test]
fn sample_is_solved_and_the_solution_checks_out() {
    let inst = parse_dimacs(SAMPLE).unwrap();
    assert!(dpll(&inst).is_some());
    let p = SatProblem::new(inst.clone());
    let cfg = RunConfig::new(20_000, 3).with_trace(TraceOptions::none());
    let scheme = Scheme::averaged(3, 0.01).unwrap();
    let solved: Vec<Vec<bool>> = (0..5)
        .filter_map(|t| run(&scheme, &p, &cfg.clone().with_trial(t), None).unwrap().solution)
        .collect();
    assert!(!solved.is_empty());
    for a in &solved {
        assert!(clause_eval(&inst, a));
        let line = solution_line(a);
        assert!(line.starts_with("v ") && line.ends_with(" 0"));
        assert_eq!(line.split(' ').count(), 22);
    }
}

#[test]
fn edges_enumerate_clauses_in_order() {
    let inst = parse_dimacs("p cnf 4 2\n1 -2 0\n-3 4 2 0\n").unwrap();
    let lits: Vec<i64> = (0..inst.num_edges()).map(|e| inst.edge_literal(e).to_dimacs()).collect();
    assert_eq!(lits, [1, -2, -3, 4, 2]);
    assert_eq!(inst.edge_range(1), 2..5);
    assert_eq!(inst.edge(1, 2), 4);
}

#[test]
fn parse_errors_report_lines() {
    let cases = [
        ("1 2 0\n", 1, "before"),
        ("p cnf 2 1\np cnf 2 1\n", 2, "header"),
        ("p cnf 2 1\n1 x 0\n", 2, "literal"),
        ("p cnf 2 1\n1 -3 0\n", 2, ""),
        ("p cnf 2 2\n1 2 0\n", 0, ""),
        ("c only comments\n", 0, "header"),
        ("p cnf 2 1\n1 2\n", 0, ""),
        ("p cnf 2 1\n1 1 0\n", 2, ""),
    ];
    for (text, line, word) in cases {
        let err = parse_dimacs(text).unwrap_err().to_string();
        assert!(err.contains(word), "{text:?}: {err}");
        if line > 0 {
            assert!(err.contains(&format!("line {line}")), "{text:?}: {err}");
        }
    }
}

#[test]
fn random_instances_are_seeded() {
    let a = random_3sat(30, 100, 9);
    assert_eq!(a, random_3sat(30, 100, 9));
    assert_ne!(a, random_3sat(30, 100, 10));
    for c in a.clauses() {
        let mut v: Vec<u32> = c.iter().map(|l| l.var).collect();
        v.sort();
        v.dedup();
        assert_eq!(v.len(), 3);
    }
}

fn instance_strategy() -> impl Strategy<Value = SatInstance> {
    (3usize..7).prop_flat_map(|nv| {
        prop::collection::vec(
            prop::sample::subsequence((0..nv as u32).collect::<Vec<_>>(), 1..=3.min(nv))
                .prop_flat_map(|vars| {
                    let k = vars.len();
                    (Just(vars), prop::collection::vec(any::<bool>(), k))
                }),
            1..8,
        )
        .prop_map(move |cls| {
            let clauses = cls.into_iter().map(|(vars, neg)| {
                vars.into_iter()
                    .zip(neg)
                    .map(|(var, negated)| Literal { var, negated })
                    .collect()
            });
            SatInstance::new(nv, clauses).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn dimacs_round_trip(inst in instance_strategy()) {
        prop_assert_eq!(parse_dimacs(&emit_dimacs(&inst)).unwrap(), inst);
    }

    #[test]
    fn project_a_is_nearest_per_clause(
        inst in instance_strategy(),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let p = SatProblem::new(inst.clone());
        let x: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(0.2..3.0)).collect();
        let mut out = vec![0.0; p.dim()];
        p.project_a(&x, &s, &mut out);
        for c in 0..inst.num_clauses() {
            let r = inst.edge_range(c);
            let signs: Vec<f64> = inst.clause(c).iter().map(|l| l.sign()).collect();
            prop_assert!(r.clone().zip(&signs).any(|(e, sg)| sg * out[e] > 0.0));
            for e in r.clone() {
                prop_assert!((out[e].abs() - s[e]).abs() < 1e-12);
            }
            let got = sq_dist(&out[r.clone()], &x[r.clone()]);
            let best = brute_clause(&signs, &s[r.clone()], &x[r]);
            prop_assert!(got <= best + 1e-9, "clause {}: {} > {}", c, got, best);
        }
    }

    #[test]
    fn project_b_concurs_variables(inst in instance_strategy(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let p = SatProblem::new(inst.clone());
        let x: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s = unit_scales(p.dim());
        let mut out = vec![0.0; p.dim()];
        p.project_b(&x, &s, &mut out);
        for v in 0..inst.num_vars() as u32 {
            let es: Vec<usize> = (0..inst.num_edges()).filter(|&e| inst.edge_literal(e).var == v).collect();
            if es.is_empty() {
                continue;
            }
            let mean = es.iter().map(|&e| x[e]).sum::<f64>() / es.len() as f64;
            for &e in &es {
                prop_assert!((out[e] - mean).abs() < 1e-12);
            }
        }
    }

    /// Whatever `verify` returns satisfies the instance.
    #[test]
    fn verify_is_sound(inst in instance_strategy(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let p = SatProblem::new(inst.clone());
        let s = unit_scales(p.dim());
        for _ in 0..20 {
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = vec![0.0; p.dim()];
            p.project_b(&x, &s, &mut b);
            if let Some(a) = p.verify(&b, &s) {
                prop_assert_eq!(a.len(), inst.num_vars());
                prop_assert!(clause_eval(&inst, &a));
            }
        }
    }
}
