use proptest::prelude::*;

use semrob_core::attacks::{plan_dice, plan_l2_strong, plan_l2_weak, rewire_same_class_pairs};
use semrob_core::bayes::BayesPredictor;
use semrob_core::classifiers::{label_propagation, Mat};
use semrob_core::graphgen::{extend_graph, sample_graph};
use semrob_core::harness::ExperimentConfig;
use semrob_core::metrics::{aggregate, f_beta, robustness_trace, degree_assortativity};
use semrob_core::predictor::LabelOracle;
use semrob_core::{BayesMode, BudgetSpec, GenModel, Graph, LPConfig, OpKind, RobustnessRecord};

fn small_graph(n: usize, seed: u64) -> Graph {
    sample_graph(&GenModel::csbm(n, 0.25, 0.08, 1.0, 3, 1.0), seed).unwrap()
}

fn budget_strategy() -> impl Strategy<Value = BudgetSpec> {
    prop_oneof![
        (1usize..6).prop_map(|delta| BudgetSpec::Fixed { delta }),
        Just(BudgetSpec::Degree),
        (1usize..4).prop_map(|k| BudgetSpec::DegreePlus { k }),
        (1usize..40).prop_map(|cap| BudgetSpec::Unbounded { cap }),
    ]
}

fn record_strategy() -> impl Strategy<Value = RobustnessRecord> {
    (0usize..6, 1usize..10, any::<bool>(), any::<bool>(), 0usize..12, 0usize..12).prop_map(
        |(degree, budget_used, correct, agree, tf, tg)| {
            let step = |t: usize| (t >= 1 && t <= budget_used).then_some(t);
            RobustnessRecord {
                node: 0,
                degree,
                t_f: step(tf),
                t_g: step(tg),
                budget_used,
                clean_f_correct: correct,
                clean_agree: agree,
            }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graph_json_roundtrip(n in 2usize..25, seed in any::<u64>()) {
        let g = small_graph(n, seed);
        prop_assert_eq!(Graph::from_json(&g.to_json().unwrap()).unwrap(), g);
    }

    #[test]
    fn config_json_roundtrip(seeds in 1usize..20, base in any::<u64>(), k in 0.0f64..8.0) {
        let cfg = ExperimentConfig { seeds, base_seed: base, k_values: vec![k], ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn extension_keeps_existing_entries(n in 2usize..25, extra in 1usize..5, seed in any::<u64>(), ext in any::<u64>()) {
        let g = small_graph(n, seed);
        let h = extend_graph(&g, extra, ext).unwrap();
        prop_assert_eq!(h.n(), n + extra);
        prop_assert_eq!(&h.features()[..n * g.d()], g.features());
        prop_assert_eq!(&h.labels()[..n], g.labels());
        prop_assert_eq!(&h.known_mask()[..n], g.known_mask());
        prop_assert!(h.known_mask()[n..].iter().all(|&k| !k));
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(h.has_edge(i, j), g.has_edge(i, j));
            }
        }
    }

    #[test]
    fn plans_replay_legally(n in 3usize..25, seed in any::<u64>(), budget in budget_strategy(), dice_seed in any::<u64>()) {
        let g = extend_graph(&small_graph(n, seed), 1, seed ^ 1).unwrap();
        let v = g.n() - 1;
        prop_assume!(g.labels().iter().any(|&y| y != g.label(v)));
        let limit = budget.resolve(g.degree(v));
        for plan in [
            plan_l2_weak(&g, v, &budget).unwrap(),
            plan_l2_strong(&g, v, &budget).unwrap(),
            plan_dice(&g, v, &budget, dice_seed).unwrap(),
        ] {
            prop_assert!(plan.len() <= limit);
            let mut work = g.clone();
            for step in 0..plan.len() {
                let op = plan.ops[step];
                prop_assert_ne!(op.u, v);
                prop_assert_eq!(op.kind == OpKind::Delete, work.has_edge(v, op.u));
                plan.apply_step(&mut work, step).unwrap();
            }
            prop_assert_eq!(plan.apply(&g).unwrap(), work);
        }
    }

    #[test]
    fn robustness_bounded_by_both_flips(n in 3usize..25, seed in any::<u64>(), cap in 1usize..30) {
        let g = extend_graph(&small_graph(n, seed), 1, seed ^ 7).unwrap();
        let v = g.n() - 1;
        prop_assume!(g.labels().iter().any(|&y| y != g.label(v)));
        let budget = BudgetSpec::Unbounded { cap };
        let plan = plan_l2_weak(&g, v, &budget).unwrap();
        let bayes = BayesPredictor { mode: BayesMode::Full };
        let r = robustness_trace(&g, v, &plan, &bayes, &LabelOracle, cap).unwrap();
        prop_assert!(r.robustness() <= r.conventional());
        prop_assert!(r.robustness() <= r.reference());
        prop_assert!(r.conventional() <= r.budget_used);
    }

    #[test]
    fn over_robustness_in_unit_interval(records in prop::collection::vec(record_strategy(), 1..40)) {
        let Ok(s) = aggregate(&records, 1.0) else {
            prop_assume!(false);
            unreachable!()
        };
        if let Some(r) = s.r_over {
            prop_assert!((0.0..=1.0).contains(&r), "r_over {}", r);
        }
        if let Some(f) = s.f_beta {
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn f_beta_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, r_adv in 0.01f64..1.0, beta in 0.1f64..4.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(f_beta(hi, r_adv, beta) <= f_beta(lo, r_adv, beta) + 1e-12);
        let r_over = a;
        let (lo, hi) = if b <= r_adv { (b, r_adv) } else { (r_adv, b) };
        prop_assert!(f_beta(r_over, lo, beta) <= f_beta(r_over, hi, beta) + 1e-12);
    }

    #[test]
    fn rewiring_preserves_degrees(n in 8usize..40, seed in any::<u64>(), rounds in 1usize..6) {
        let g = sample_graph(&GenModel::csbm(n, 0.3, 0.05, 1.0, 3, 1.0), seed).unwrap();
        let (h, _) = rewire_same_class_pairs(&g, rounds, seed ^ 3).unwrap();
        prop_assert_eq!(h.degrees(), g.degrees());
        prop_assert_eq!(h.num_edges(), g.num_edges());
        match (degree_assortativity(&g), degree_assortativity(&h)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a, b),
        }
        let same = |x: &Graph| x.edges().filter(|&(i, j)| x.label(i) == x.label(j)).count();
        prop_assert!(same(&h) <= same(&g));
    }

    #[test]
    fn label_propagation_is_nonexpansive(
        n in 2usize..20,
        seed in any::<u64>(),
        alpha in 0.0f64..0.99,
        iterations in 1usize..60,
        y1 in prop::collection::vec(-1.0f64..1.0, 40),
        y2 in prop::collection::vec(-1.0f64..1.0, 40),
    ) {
        let mut g = small_graph(n, seed);
        g.set_known_mask(vec![false; n]).unwrap();
        let cfg = LPConfig { alpha, iterations };
        let a = Mat::from_vec(n, 2, y1[..2 * n].to_vec());
        let b = Mat::from_vec(n, 2, y2[..2 * n].to_vec());
        let fa = label_propagation(&g, Some(&a), &cfg).unwrap();
        let fb = label_propagation(&g, Some(&b), &cfg).unwrap();
        let dist = |x: &Mat, y: &Mat| x.data.iter().zip(&y.data).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        prop_assert!(dist(&fa, &fb) <= dist(&a, &b) * (1.0 + 1e-12) + 1e-12);
    }
}
