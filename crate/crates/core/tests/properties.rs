use proptest::prelude::*;

use metakg::cycle::{path_similarity, perceive, CoverageMap, StopReason};
use metakg::scenario::{Kind, Scenario};
use metakg::{
    compute_prr, greedy_explore, integrate, run_batch, run_cycle, Ablations, ConceptSet, CycleConfig,
    EntityId, ExclusionMode, IterationTrace, KnowledgeGraph, Params, Path, Pipeline, SeedEntity,
    TableSimilarity, WeightAdjustments,
};

const QUESTION: &str = "property question";
const RELATIONS: [&str; 3] = ["treats", "causes", "part_of"];

#[derive(Debug, Clone)]
struct Case {
    graph: KnowledgeGraph,
    table: TableSimilarity,
    concepts: ConceptSet,
    seed: SeedEntity,
    config: CycleConfig,
}

fn arb_params() -> impl Strategy<Value = Params> {
    (
        0.2..0.9f64,
        0.1..0.6f64,
        0.2..0.7f64,
        0.5..0.95f64,
        0.0..=1.0f64,
        0.05..0.5f64,
        1..=5usize,
        1..=5usize,
    )
        .prop_map(|(tau_coverage, tau_c, tau_support, tau_similarity, alpha, delta, n_max, max_hops)| Params {
            tau_coverage,
            tau_c,
            tau_support,
            tau_similarity,
            alpha,
            delta,
            n_max,
            max_hops,
            ..Params::default()
        })
}

fn arb_case() -> impl Strategy<Value = Case> {
    (2..12usize, 1..4usize).prop_flat_map(|(n, k)| {
        (
            Just(n),
            Just(k),
            prop::collection::vec((0..n, 0..RELATIONS.len(), 0..n), 0..n * 2),
            prop::collection::vec(-0.2..1.0f64, n * (k + 1)),
            0..n,
            arb_params(),
            any::<[bool; 4]>(),
            any::<bool>(),
        )
            .prop_map(|(n, k, extra, sims, seed, params, flags, hard)| {
                let labels: Vec<String> = (0..n).map(|i| format!("entity {i}")).collect();
                let mut graph = KnowledgeGraph::new();
                for l in &labels {
                    graph.intern(l).unwrap();
                }
                for i in 0..n - 1 {
                    graph.insert(&labels[i], RELATIONS[i % 3], &labels[i + 1]).unwrap();
                }
                for (h, r, t) in extra {
                    let _ = graph.insert(&labels[h], RELATIONS[r], &labels[t]);
                }
                let concepts: Vec<String> = (0..k).map(|j| format!("concept {j}")).collect();
                let mut table = TableSimilarity::new().with_default(0.0);
                for (i, l) in labels.iter().enumerate() {
                    let row = &sims[i * (k + 1)..(i + 1) * (k + 1)];
                    table.insert(l, QUESTION, row[0]);
                    for (c, v) in concepts.iter().zip(&row[1..]) {
                        table.insert(l, c, *v);
                    }
                }
                let config = CycleConfig {
                    params,
                    ablations: Ablations {
                        disable_cycle: flags[0],
                        disable_completeness_check: flags[1],
                        disable_relevance_check: flags[2],
                        naive_restart: flags[3],
                    },
                    exclusion: if hard { ExclusionMode::Hard } else { ExclusionMode::Soft },
                    ..CycleConfig::default()
                };
                let seed = SeedEntity {
                    concept: concepts[0].clone(),
                    entity: EntityId(seed as u32),
                    label: labels[seed].clone(),
                    score: 1.0,
                };
                Case {
                    graph,
                    table,
                    concepts: ConceptSet::new(QUESTION, concepts),
                    seed,
                    config,
                }
            })
    })
}

fn run(c: &Case) -> (Path, IterationTrace) {
    run_cycle(&c.seed, &c.concepts, &c.graph, &c.config, &c.table).unwrap()
}

fn weakest(coverage: &CoverageMap, concepts: &[String]) -> f64 {
    concepts
        .iter()
        .filter_map(|c| coverage.get(c))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cycle_terminates_within_budget(c in arb_case()) {
        let (path, trace) = run(&c);
        let n_max = c.config.params.n_max;
        prop_assert!((1..=n_max).contains(&trace.records.len()));
        prop_assert_eq!(&path, &trace.final_path);
        path.validate(&c.graph, c.config.params.max_hops).unwrap();
        let (last, rest) = trace.records.split_last().unwrap();
        prop_assert_eq!(last.stop, Some(trace.stop_reason));
        prop_assert!(rest.iter().all(|r| r.stop.is_none()));
        for (i, r) in trace.records.iter().enumerate() {
            prop_assert_eq!(r.iteration, i + 1);
        }
        if trace.stop_reason == StopReason::NMax {
            prop_assert_eq!(trace.records.len(), n_max);
        }
    }

    #[test]
    fn records_chain_paths(c in arb_case()) {
        let (_, trace) = run(&c);
        prop_assert_eq!(&trace.records[0].path, &trace.initial_path);
        for w in trace.records.windows(2) {
            prop_assert_eq!(w[0].new_path.as_ref(), Some(&w[1].path));
        }
    }

    #[test]
    fn disabled_cycle_is_plain_greedy(mut c in arb_case()) {
        c.config.ablations.disable_cycle = true;
        let (path, trace) = run(&c);
        let greedy = greedy_explore(
            c.seed.entity,
            QUESTION,
            &c.graph,
            &WeightAdjustments::default(),
            None,
            c.config.params.max_hops,
            &c.table,
            c.config.weighting,
        )
        .unwrap();
        prop_assert_eq!(&path, &greedy);
        prop_assert_eq!(trace.records.len(), 1);
        prop_assert_eq!(trace.stop_reason, StopReason::Disabled);
    }

    #[test]
    fn disabled_checks_report_nothing(mut c in arb_case(), which in any::<bool>()) {
        c.config.ablations.disable_cycle = false;
        if which {
            c.config.ablations.disable_completeness_check = true;
        } else {
            c.config.ablations.disable_relevance_check = true;
        }
        let (_, trace) = run(&c);
        for r in &trace.records {
            if which {
                prop_assert!(r.diagnosis.missing_concepts.is_none());
                prop_assert!(r.completeness_improved.is_none());
            } else {
                prop_assert!(r.diagnosis.misleading_entities.is_none());
            }
        }
    }

    #[test]
    fn naive_restart_returns_to_seed(mut c in arb_case()) {
        c.config.ablations.disable_cycle = false;
        c.config.ablations.naive_restart = true;
        let (_, trace) = run(&c);
        for r in &trace.records {
            if let Some(plan) = &r.plan {
                prop_assert_eq!(plan.restart, c.seed.entity);
            }
        }
    }

    #[test]
    fn similar_stop_keeps_previous_path(mut c in arb_case()) {
        c.config.ablations.disable_cycle = false;
        let (_, trace) = run(&c);
        let last = trace.records.last().unwrap();
        match trace.stop_reason {
            StopReason::Similar => {
                prop_assert_eq!(&trace.final_path, &last.path);
                prop_assert!(last.path_similarity.unwrap() > c.config.params.tau_similarity);
            }
            StopReason::NoIssues => {
                prop_assert!(last.diagnosis.is_empty());
                prop_assert_eq!(&trace.final_path, &last.path);
            }
            StopReason::NMax => {
                prop_assert_eq!(Some(&trace.final_path), last.new_path.as_ref());
            }
            StopReason::Disabled => prop_assert!(false, "cycle was enabled"),
        }
        for r in &trace.records {
            if let (Some(p), Some(s)) = (&r.new_path, r.path_similarity) {
                prop_assert_eq!(s, path_similarity(p, &r.path));
            }
        }
    }

    #[test]
    fn completeness_flag_matches_coverage(mut c in arb_case()) {
        c.config.ablations.disable_cycle = false;
        let (_, trace) = run(&c);
        for r in &trace.records {
            let expect_flag = r.diagnosis.missing_concepts.is_some() && r.stop != Some(StopReason::Similar);
            prop_assert_eq!(r.completeness_improved.is_some(), expect_flag);
            if let (Some(b), Some(missing), Some(new)) =
                (r.completeness_improved, &r.diagnosis.missing_concepts, &r.new_path)
            {
                let after = perceive(new, &c.concepts, &c.graph, &c.table).unwrap();
                prop_assert_eq!(b, weakest(&after, missing) >= weakest(&r.coverage, missing));
            }
        }
    }

    #[test]
    fn hard_exclusion_is_respected(mut c in arb_case()) {
        c.config.ablations.disable_cycle = false;
        c.config.exclusion = ExclusionMode::Hard;
        let (_, trace) = run(&c);
        for r in &trace.records {
            let (Some(plan), Some(new)) = (&r.plan, &r.new_path) else { continue };
            let kept = r.path.prefix_through(plan.restart).map_or(0, |p| p.len());
            for step in &new.steps[kept.min(new.len())..] {
                prop_assert!(!plan.excluded.contains(&step.to));
            }
        }
    }

    #[test]
    fn refinement_rate_is_a_fraction(cases in prop::collection::vec(arb_case(), 1..6)) {
        let traces: Vec<IterationTrace> = cases.iter().map(|c| run(c).1).collect();
        let prr = compute_prr(&traces);
        prop_assert!((0.0..=1.0).contains(&prr));
        let by_hand = traces
            .iter()
            .map(|t| 1.0 - path_similarity(&t.initial_path, &t.final_path))
            .sum::<f64>()
            / traces.len() as f64;
        prop_assert!((prr - by_hand).abs() < 1e-12);
    }

    #[test]
    fn integration_is_idempotent(cases in prop::collection::vec(arb_case(), 1..4)) {
        // all cases share one graph so their paths can be merged
        let c0 = &cases[0];
        let paths: Vec<Path> = cases
            .iter()
            .filter(|c| c.seed.entity.index() < c0.graph.entity_count())
            .map(|c| {
                let seed = SeedEntity { entity: c.seed.entity, ..c0.seed.clone() };
                run_cycle(&seed, &c0.concepts, &c0.graph, &c.config, &c0.table).unwrap().0
            })
            .collect();
        let once = integrate(&paths, &c0.graph);
        let doubled: Vec<Path> = paths.iter().chain(&paths).cloned().collect();
        prop_assert_eq!(&integrate(&doubled, &c0.graph), &once);
        let steps: usize = paths.iter().map(|p| p.len()).sum();
        prop_assert!(once.len() <= steps);
        for p in &paths {
            for s in &p.steps {
                let (h, r, t) = s.stored();
                prop_assert!(once.contains(c0.graph.label(h), r, c0.graph.label(t)));
            }
        }
    }
}

fn arb_kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        Just(Kind::Easy),
        Just(Kind::Completeness),
        Just(Kind::Relevance),
        Just(Kind::Hard),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn batch_outcomes_partition(kinds in prop::collection::vec(arb_kind(), 0..8), flags in any::<[bool; 4]>()) {
        let s = Scenario::generate(&kinds);
        let (g, sim, llm) = (s.graph().unwrap(), s.similarity().unwrap(), s.llm().unwrap());
        let config = CycleConfig {
            ablations: Ablations {
                disable_cycle: flags[0],
                disable_completeness_check: flags[1],
                disable_relevance_check: flags[2],
                naive_restart: flags[3],
            },
            ..CycleConfig::with_params(Scenario::params())
        };
        let p = Pipeline::new(&g, &sim, &llm, config).unwrap();
        let report = run_batch(&s.records().unwrap(), &p, 2, None).unwrap();
        let a = &report.aggregates;
        prop_assert_eq!(a.total, kinds.len());
        prop_assert_eq!(a.correct + a.wrong + a.fail, a.total);
        if a.total > 0 {
            prop_assert!((a.correct_pct + a.wrong_pct + a.fail_pct - 100.0).abs() < 1e-9);
        }
        prop_assert!((0.0..=1.0).contains(&a.prr));
        let hard = kinds.iter().filter(|k| **k == Kind::Hard).count();
        prop_assert!(a.correct <= kinds.len() - hard);
    }
}
