//! Property-based invariants over randomized inputs.

use std::collections::BTreeMap;
use std::io::Cursor;

use proptest::prelude::*;

use relkit::dedup::{dedup_qrels, dedup_run, DupClusters};
use relkit::metrics::{
    align, cohen_kappa, confusion, kendall_tau_b, ndcg_at_k, spearman_rho, AlignedLabels,
    GainScheme, KappaScale,
};
use relkit::prompt::parse_judgment;
use relkit::trec::{DupPolicy, Grade, Qrels, RunEntry, RunList};

fn arb_id() -> impl Strategy<Value = String> {
    "[a-z0-9]{1,6}"
}

fn arb_grade() -> impl Strategy<Value = Grade> {
    (0i64..=3).prop_map(|v| Grade::new(v).unwrap())
}

fn arb_qrels() -> impl Strategy<Value = Qrels> {
    prop::collection::btree_map(
        arb_id(),
        prop::collection::btree_map(arb_id(), arb_grade(), 1..6),
        0..6,
    )
    .prop_map(|entries| {
        let mut qrels = Qrels::new();
        for (topic, row) in entries {
            for (passage, grade) in row {
                qrels.insert(&topic, &passage, grade).unwrap();
            }
        }
        qrels
    })
}

fn arb_label_pairs() -> impl Strategy<Value = Vec<(Grade, Grade)>> {
    prop::collection::vec((arb_grade(), arb_grade()), 1..60)
}

fn labels(pairs: Vec<(Grade, Grade)>) -> AlignedLabels {
    AlignedLabels::from_pairs(pairs).unwrap()
}

/// Clusters over the same small id space the other generators draw from,
/// so dedup actually bites.
fn arb_clusters() -> impl Strategy<Value = DupClusters> {
    prop::collection::vec(prop::collection::btree_set(arb_id(), 2..5), 0..4).prop_map(|groups| {
        let mut used = std::collections::BTreeSet::new();
        let mut clusters = Vec::new();
        for group in groups {
            let fresh: Vec<String> = group
                .into_iter()
                .filter(|id| used.insert(id.clone()))
                .collect();
            if fresh.len() >= 2 {
                clusters.push((fresh[0].clone(), fresh));
            }
        }
        DupClusters::from_clusters(clusters).unwrap()
    })
}

fn arb_run() -> impl Strategy<Value = RunList> {
    prop::collection::btree_map(arb_id(), prop::collection::btree_set(arb_id(), 1..8), 1..5)
        .prop_map(|topics| {
            let rankings: BTreeMap<String, Vec<RunEntry>> = topics
                .into_iter()
                .map(|(topic, passages)| {
                    let entries = passages
                        .into_iter()
                        .enumerate()
                        .map(|(i, passage_id)| RunEntry {
                            passage_id,
                            rank: (i + 1) as u32,
                            score: 100.0 - i as f64,
                        })
                        .collect();
                    (topic, entries)
                })
                .collect();
            RunList::from_rankings("proprun", rankings).unwrap()
        })
}

proptest! {
    // ── file formats ────────────────────────────────────────────────

    #[test]
    fn qrels_write_then_parse_is_identity(qrels in arb_qrels()) {
        let text = qrels.to_text();
        let reparsed = Qrels::parse(Cursor::new(&text), DupPolicy::Error).unwrap();
        prop_assert_eq!(reparsed, qrels);
    }

    #[test]
    fn stats_total_equals_entry_count(qrels in arb_qrels()) {
        let stats = qrels.stats();
        prop_assert_eq!(stats.histogram.total() as usize, qrels.entry_count());
        prop_assert_eq!(stats.topic_count, qrels.topic_count());
    }

    #[test]
    fn parsed_runs_have_increasing_ranks_and_unique_passages(run in arb_run()) {
        let mut text = Vec::new();
        run.write(&mut text).unwrap();
        let parsed = RunList::parse(Cursor::new(&text)).unwrap().run;
        for (_, entries) in parsed.rankings() {
            for pair in entries.windows(2) {
                prop_assert!(pair[0].rank < pair[1].rank);
            }
            let mut ids: Vec<&str> = entries.iter().map(|e| e.passage_id.as_str()).collect();
            ids.sort_unstable();
            let before = ids.len();
            ids.dedup();
            prop_assert_eq!(before, ids.len());
        }
    }

    // ── dedup ───────────────────────────────────────────────────────

    #[test]
    fn dedup_qrels_is_idempotent_shrinking_and_complete(
        qrels in arb_qrels(),
        clusters in arb_clusters(),
    ) {
        let once = dedup_qrels(&qrels, &clusters);
        let twice = dedup_qrels(&once, &clusters);
        prop_assert_eq!(&twice, &once);
        prop_assert!(once.entry_count() <= qrels.entry_count());
        for (_, passage, _) in once.iter() {
            prop_assert!(!clusters.is_eliminated(passage));
        }
        // Stats commute with dedup: the histogram counts exactly the
        // retained entries, grade by grade.
        let stats = once.stats();
        for grade in Grade::ALL {
            let retained = qrels
                .iter()
                .filter(|(_, p, g)| *g == grade && !clusters.is_eliminated(p))
                .count();
            prop_assert_eq!(stats.histogram.count(grade) as usize, retained);
        }
    }

    #[test]
    fn dedup_run_is_idempotent_and_complete(
        run in arb_run(),
        clusters in arb_clusters(),
    ) {
        let once = dedup_run(&run, &clusters);
        let twice = dedup_run(&once, &clusters);
        prop_assert_eq!(&twice, &once);
        prop_assert!(once.entry_count() <= run.entry_count());
        for (_, entries) in once.rankings() {
            for (i, entry) in entries.iter().enumerate() {
                prop_assert_eq!(entry.rank as usize, i + 1);
                prop_assert!(!clusters.is_eliminated(&entry.passage_id));
            }
        }
    }

    // ── prompt ──────────────────────────────────────────────────────

    #[test]
    fn parse_judgment_never_panics(response in ".*") {
        let _ = parse_judgment(&response);
    }

    #[test]
    fn parse_judgment_inverts_the_format_string(grade in arb_grade(), padding in "[ \t]{0,3}") {
        let response = format!("##final score:{padding} {grade}");
        let parsed = parse_judgment(&response).unwrap();
        prop_assert_eq!(parsed.grade, grade);
    }

    // ── kappa ───────────────────────────────────────────────────────

    #[test]
    fn kappa_is_symmetric_and_bounded(pairs in arb_label_pairs()) {
        let forward = labels(pairs.clone());
        let swapped = labels(pairs.iter().map(|&(h, l)| (l, h)).collect());
        for scale in [KappaScale::Four, KappaScale::Binary] {
            let a = cohen_kappa(&forward, scale).unwrap();
            let b = cohen_kappa(&swapped, scale).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn kappa_is_one_iff_all_pairs_agree(pairs in arb_label_pairs()) {
        let kappa = cohen_kappa(&labels(pairs.clone()), KappaScale::Four).unwrap();
        let all_agree = pairs.iter().all(|(h, l)| h == l);
        prop_assert_eq!(kappa == 1.0, all_agree);
    }

    #[test]
    fn binary_kappa_equals_four_scale_kappa_on_binarized_pairs(pairs in arb_label_pairs()) {
        let direct = cohen_kappa(&labels(pairs.clone()), KappaScale::Binary).unwrap();
        let mapped = labels(
            pairs
                .iter()
                .map(|&(h, l)| (h.binarized(), l.binarized()))
                .collect(),
        );
        let via_four = cohen_kappa(&mapped, KappaScale::Four).unwrap();
        prop_assert!((direct - via_four).abs() < 1e-12);
    }

    #[test]
    fn confusion_trace_recovers_observed_agreement(pairs in arb_label_pairs()) {
        let aligned = labels(pairs.clone());
        let matrix = confusion(&aligned);
        prop_assert_eq!(matrix.total() as usize, pairs.len());
        let p_o_from_matrix = matrix.trace() as f64 / matrix.total() as f64;
        let agree = pairs.iter().filter(|(h, l)| h == l).count() as f64;
        prop_assert!((p_o_from_matrix - agree / pairs.len() as f64).abs() < 1e-12);
    }

    // ── alignment ───────────────────────────────────────────────────

    #[test]
    fn align_covers_exactly_the_intersection(a in arb_qrels(), b in arb_qrels()) {
        let common = a
            .iter()
            .filter(|(t, p, _)| b.get(t, p).is_some())
            .count();
        match align(&a, &b) {
            Ok(aligned) => {
                prop_assert_eq!(aligned.len(), common);
                prop_assert_eq!(aligned.human_only + common, a.entry_count());
                prop_assert_eq!(aligned.llm_only + common, b.entry_count());
            }
            Err(_) => prop_assert_eq!(common, 0),
        }
    }

    // ── nDCG ────────────────────────────────────────────────────────

    #[test]
    fn ndcg_stays_in_unit_interval(
        ranked in prop::collection::vec(arb_id(), 0..12),
        judged in prop::collection::btree_map(arb_id(), arb_grade(), 0..12),
        k in 1usize..15,
    ) {
        let ranked: Vec<String> = {
            let mut seen = std::collections::BTreeSet::new();
            ranked.into_iter().filter(|id| seen.insert(id.clone())).collect()
        };
        for scheme in [GainScheme::Linear, GainScheme::Exponential] {
            let score = ndcg_at_k(&ranked, &judged, k, scheme);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&score), "ndcg {score} out of range");
        }
    }

    #[test]
    fn ndcg_ignores_identities_of_unjudged_passages(
        judged in prop::collection::btree_map(arb_id(), arb_grade(), 1..8),
        ranked in prop::collection::vec(arb_id(), 1..10),
        k in 1usize..12,
    ) {
        let ranked: Vec<String> = {
            let mut seen = std::collections::BTreeSet::new();
            ranked.into_iter().filter(|id| seen.insert(id.clone())).collect()
        };
        // Rename every unjudged passage to a fresh id nothing else uses.
        let renamed: Vec<String> = ranked
            .iter()
            .enumerate()
            .map(|(i, id)| {
                if judged.contains_key(id) {
                    id.clone()
                } else {
                    format!("fresh-{i}")
                }
            })
            .collect();
        let a = ndcg_at_k(&ranked, &judged, k, GainScheme::Linear);
        let b = ndcg_at_k(&renamed, &judged, k, GainScheme::Linear);
        prop_assert!((a - b).abs() < 1e-12);
    }

    // ── rank correlation ────────────────────────────────────────────

    #[test]
    fn correlations_are_invariant_under_shared_permutation(
        values in prop::collection::vec((0i32..40, 0i32..40), 2..20),
        seed in any::<u64>(),
    ) {
        let x: Vec<f64> = values.iter().map(|&(a, _)| f64::from(a)).collect();
        let y: Vec<f64> = values.iter().map(|&(_, b)| f64::from(b)).collect();

        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut rng = fastrand::Rng::with_seed(seed);
        rng.shuffle(&mut order);
        let px: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();

        match (kendall_tau_b(&x, &y), kendall_tau_b(&px, &py)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "tau disagreed on definedness: {a:?} vs {b:?}"),
        }
        match (spearman_rho(&x, &y), spearman_rho(&px, &py)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "rho disagreed on definedness: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn reversing_one_distinct_vector_flips_the_sign(
        base in prop::collection::btree_set(0i32..1000, 2..20),
        other in prop::collection::vec(0i32..1000, 2..20),
    ) {
        // x distinct; y arbitrary but not all tied.
        let x: Vec<f64> = base.iter().map(|&v| f64::from(v)).collect();
        let mut y: Vec<f64> = other.iter().map(|&v| f64::from(v)).collect();
        y.resize(x.len(), 7.0);
        prop_assume!(y.iter().any(|&v| v != y[0]));

        let reversed_x: Vec<f64> = x.iter().rev().copied().collect();
        let reversed_y: Vec<f64> = y.iter().rev().copied().collect();

        let tau = kendall_tau_b(&x, &y).unwrap();
        let tau_flipped = kendall_tau_b(&reversed_x, &y).unwrap();
        // Reversing the order of the distinct vector while keeping the
        // other fixed negates every pair's concordance.
        prop_assert!((tau + tau_flipped).abs() < 1e-12);

        let rho = spearman_rho(&x, &y).unwrap();
        let rho_flipped = spearman_rho(&reversed_x, &y).unwrap();
        prop_assert!((rho + rho_flipped).abs() < 1e-12);

        // Applying the reversal to both sides changes nothing.
        let tau_both = kendall_tau_b(&reversed_x, &reversed_y).unwrap();
        prop_assert!((tau - tau_both).abs() < 1e-12);
    }

    #[test]
    fn correlation_bounds_hold(values in prop::collection::vec((0i32..10, 0i32..10), 2..25)) {
        let x: Vec<f64> = values.iter().map(|&(a, _)| f64::from(a)).collect();
        let y: Vec<f64> = values.iter().map(|&(_, b)| f64::from(b)).collect();
        if let Ok(tau) = kendall_tau_b(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&tau));
        }
        if let Ok(rho) = spearman_rho(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&rho));
        }
    }
}
