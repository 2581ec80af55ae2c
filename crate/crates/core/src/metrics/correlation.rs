//! Rank correlation between two leaderboards: tie-corrected Kendall tau-b
//! and Spearman's rho.

use std::collections::BTreeMap;

use crate::trec::{Qrels, RunList};

use super::ndcg::{evaluate_run, GainScheme};
use super::MetricsError;

fn check_vectors(x: &[f64], y: &[f64]) -> Result<(), MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(MetricsError::TooFewPoints { found: x.len() });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    Ok(())
}

/// Kendall's tau-b: (C - D) / sqrt((n0 - n1)(n0 - n2)), with C/D the
/// concordant/discordant pair counts, n0 = n(n-1)/2, and n1/n2 the tied
/// pair counts within x and within y.
///
/// Computed by sorting on (x, y) and merge-counting discordant swaps in
/// y, so ties never need explicit pair enumeration. A vector with all
/// values tied has no defined correlation and is an error.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_vectors(x, y)?;
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .expect("finite values compare")
            .then(y[a].partial_cmp(&y[b]).expect("finite values compare"))
    });

    // Tied pairs within x, and jointly within (x, y).
    let mut tied_x = 0u64;
    let mut tied_xy = 0u64;
    let mut x_run = 1u64;
    let mut xy_run = 1u64;
    for w in 1..n {
        if x[order[w]] == x[order[w - 1]] {
            x_run += 1;
            if y[order[w]] == y[order[w - 1]] {
                xy_run += 1;
            } else {
                tied_xy += xy_run * (xy_run - 1) / 2;
                xy_run = 1;
            }
        } else {
            tied_x += x_run * (x_run - 1) / 2;
            x_run = 1;
            tied_xy += xy_run * (xy_run - 1) / 2;
            xy_run = 1;
        }
    }
    tied_x += x_run * (x_run - 1) / 2;
    tied_xy += xy_run * (xy_run - 1) / 2;

    // Tied pairs within y, from the global y multiset.
    let mut y_sorted: Vec<f64> = y.to_vec();
    y_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let mut tied_y = 0u64;
    let mut y_run = 1u64;
    for w in 1..n {
        if y_sorted[w] == y_sorted[w - 1] {
            y_run += 1;
        } else {
            tied_y += y_run * (y_run - 1) / 2;
            y_run = 1;
        }
    }
    tied_y += y_run * (y_run - 1) / 2;

    let y_in_x_order: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let swaps = count_inversions(&y_in_x_order);

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let denom = ((n0 - tied_x) as f64) * ((n0 - tied_y) as f64);
    if denom == 0.0 {
        return Err(MetricsError::AllTied);
    }
    // C - D = n0 - n1 - n2 + n3 - 2 * swaps
    let concordant_minus_discordant =
        n0 as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    Ok((concordant_minus_discordant / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Strict inversions (later value strictly smaller) via merge sort.
fn count_inversions(values: &[f64]) -> u64 {
    fn merge_count(values: &mut [f64], scratch: &mut [f64]) -> u64 {
        let n = values.len();
        if n <= 1 {
            return 0;
        }
        let mid = n / 2;
        let (left_half, right_half) = values.split_at_mut(mid);
        let mut inversions = merge_count(left_half, &mut scratch[..mid])
            + merge_count(right_half, &mut scratch[mid..]);
        let (mut i, mut j, mut out) = (0, 0, 0);
        while i < left_half.len() && j < right_half.len() {
            if right_half[j] < left_half[i] {
                inversions += (left_half.len() - i) as u64;
                scratch[out] = right_half[j];
                j += 1;
            } else {
                scratch[out] = left_half[i];
                i += 1;
            }
            out += 1;
        }
        while i < left_half.len() {
            scratch[out] = left_half[i];
            i += 1;
            out += 1;
        }
        while j < right_half.len() {
            scratch[out] = right_half[j];
            j += 1;
            out += 1;
        }
        values.copy_from_slice(&scratch[..n]);
        inversions
    }

    let mut values = values.to_vec();
    let mut scratch = vec![0.0; values.len()];
    merge_count(&mut values, &mut scratch)
}

/// Average ranks, 1-based; tied values share the mean of their ranks.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite values compare")
    });
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) hold one tie group.
        let mean_rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average-rank transforms.
/// Zero rank variance on either side is an error.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_vectors(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mean_x = rx.iter().sum::<f64>() / n;
    let mean_y = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in rx.iter().zip(ry.iter()) {
        let da = a - mean_x;
        let db = b - mean_y;
        cov += da * db;
        var_x += da * da;
        var_y += db * db;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Mean nDCG@k per run under one qrels set.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    entries: BTreeMap<String, LeaderboardEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderboardEntry {
    pub mean_ndcg: f64,
    pub topic_count: usize,
}

impl Leaderboard {
    pub fn get(&self, tag: &str) -> Option<LeaderboardEntry> {
        self.entries.get(tag).copied()
    }

    /// (tag, entry) sorted by tag.
    pub fn iter(&self) -> impl Iterator<Item = (&str, LeaderboardEntry)> {
        self.entries.iter().map(|(t, e)| (t.as_str(), *e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Evaluates every run under one qrels set. Duplicate run tags would
/// silently collapse leaderboard rows, so they are an error.
pub fn leaderboard(
    runs: &[RunList],
    qrels: &Qrels,
    k: usize,
    scheme: GainScheme,
) -> Result<Leaderboard, MetricsError> {
    let mut entries = BTreeMap::new();
    for run in runs {
        let eval = evaluate_run(run, qrels, k, scheme)?;
        let entry = LeaderboardEntry {
            mean_ndcg: eval.mean,
            topic_count: eval.per_topic.len(),
        };
        if entries.insert(run.tag().to_string(), entry).is_some() {
            return Err(MetricsError::DuplicateRunTag {
                tag: run.tag().to_string(),
            });
        }
    }
    Ok(Leaderboard { entries })
}

/// One run's score under each judgment set; the scatter-plot export rows.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunScores {
    pub tag: String,
    pub score_a: f64,
    pub score_b: f64,
}

/// Correlation between the leaderboards induced by two qrels sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    /// Per-run paired scores, sorted by tag.
    pub paired: Vec<RunScores>,
}

/// Evaluates every run under both qrels sets (mean nDCG@k) and reports
/// tau-b and rho between the two score vectors. Every run must be
/// evaluable under both sets; the result is invariant to run order.
pub fn correlate_systems(
    runs: &[RunList],
    qrels_a: &Qrels,
    qrels_b: &Qrels,
    k: usize,
    scheme: GainScheme,
) -> Result<CorrelationReport, MetricsError> {
    if runs.len() < 2 {
        return Err(MetricsError::TooFewRuns { found: runs.len() });
    }
    let board_a = leaderboard(runs, qrels_a, k, scheme)?;
    let board_b = leaderboard(runs, qrels_b, k, scheme)?;

    let paired: Vec<RunScores> = board_a
        .iter()
        .map(|(tag, entry_a)| {
            let entry_b = board_b.get(tag).expect("same run set on both boards");
            RunScores {
                tag: tag.to_string(),
                score_a: entry_a.mean_ndcg,
                score_b: entry_b.mean_ndcg,
            }
        })
        .collect();

    let a: Vec<f64> = paired.iter().map(|p| p.score_a).collect();
    let b: Vec<f64> = paired.iter().map(|p| p.score_b).collect();
    Ok(CorrelationReport {
        kendall_tau: kendall_tau_b(&a, &b)?,
        spearman_rho: spearman_rho(&a, &b)?,
        paired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec::Grade;
    use std::io::Cursor;

    fn grade(v: i64) -> Grade {
        Grade::new(v).unwrap()
    }

    #[test]
    fn identical_vectors_correlate_perfectly() {
        let x = [0.4, 0.9, 0.1, 0.7];
        assert_eq!(kendall_tau_b(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman_rho(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn reversed_vectors_correlate_negatively() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(kendall_tau_b(&x, &y).unwrap(), -1.0);
        assert_eq!(spearman_rho(&x, &y).unwrap(), -1.0);
    }

    #[test]
    fn hand_evaluated_tau_with_a_tie() {
        // x=[1,2,2,3], y=[1,2,3,4]: C=5, D=0, one pair tied only in x.
        let tau = kendall_tau_b(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((tau - 5.0 / 30.0f64.sqrt()).abs() < 1e-12);
        assert!((tau - 0.9128709291752769).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_rho_without_ties() {
        // d = [0,1,-1,0], rho = 1 - 6*2/(4*15) = 0.8.
        let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn all_tied_vector_is_an_error() {
        assert!(matches!(
            kendall_tau_b(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(MetricsError::AllTied)
        ));
        assert!(matches!(
            spearman_rho(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]),
            Err(MetricsError::ZeroVariance)
        ));
    }

    #[test]
    fn length_mismatch_and_short_vectors_are_errors() {
        assert!(matches!(
            kendall_tau_b(&[1.0], &[1.0, 2.0]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman_rho(&[1.0], &[1.0]),
            Err(MetricsError::TooFewPoints { found: 1 })
        ));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(matches!(
            kendall_tau_b(&[1.0, f64::NAN], &[1.0, 2.0]),
            Err(MetricsError::NonFinite)
        ));
    }

    #[test]
    fn average_ranks_share_tied_positions() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 30.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
    }

    fn run(text: &str) -> RunList {
        RunList::parse(Cursor::new(text)).unwrap().run
    }

    fn three_run_fixture() -> (Vec<RunList>, Qrels, Qrels) {
        let runs = vec![
            run("t1 Q0 a 1 3.0 run1\nt1 Q0 b 2 2.0 run1\nt1 Q0 c 3 1.0 run1\nt2 Q0 d 1 2.0 run1\nt2 Q0 e 2 1.0 run1\n"),
            run("t1 Q0 b 1 3.0 run2\nt1 Q0 a 2 2.0 run2\nt1 Q0 c 3 1.0 run2\nt2 Q0 e 1 2.0 run2\nt2 Q0 d 2 1.0 run2\n"),
            run("t1 Q0 c 1 3.0 run3\nt1 Q0 b 2 2.0 run3\nt1 Q0 a 3 1.0 run3\nt2 Q0 d 1 2.0 run3\nt2 Q0 e 2 1.0 run3\n"),
        ];
        let mut qa = Qrels::new();
        qa.insert("t1", "a", grade(3)).unwrap();
        qa.insert("t1", "b", grade(1)).unwrap();
        qa.insert("t1", "c", grade(0)).unwrap();
        qa.insert("t2", "d", grade(2)).unwrap();
        qa.insert("t2", "e", grade(1)).unwrap();
        // qb: qa binarized then scaled by 3 (order-preserving per pair).
        let mut qb = Qrels::new();
        for (t, p, g) in qa.iter() {
            qb.insert(t, p, grade(i64::from(g.binarized().value()) * 3))
                .unwrap();
        }
        (runs, qa, qb)
    }

    #[test]
    fn identical_qrels_give_perfect_correlation() {
        let (runs, qa, _) = three_run_fixture();
        let report = correlate_systems(&runs, &qa, &qa, 10, GainScheme::Linear).unwrap();
        assert_eq!(report.kendall_tau, 1.0);
        assert_eq!(report.spearman_rho, 1.0);
        for pair in &report.paired {
            assert_eq!(pair.score_a, pair.score_b);
        }
    }

    #[test]
    fn hand_evaluated_three_run_report() {
        let (runs, qa, qb) = three_run_fixture();
        let report = correlate_systems(&runs, &qa, &qb, 10, GainScheme::Linear).unwrap();

        // Leaderboards evaluated by hand (values frozen from direct
        // arithmetic): under qa run1=1.0, run2=0.828213140421352,
        // run3=0.79344133571786; under qb run1=1.0,
        // run2=0.6309297535714574, run3=0.75. qb demotes run2 below
        // run3: one discordant pair of three, tau = 1/3; rank d-squared
        // sum is 2, rho = 0.5.
        let by_tag: BTreeMap<&str, &RunScores> =
            report.paired.iter().map(|p| (p.tag.as_str(), p)).collect();
        assert!((by_tag["run1"].score_a - 1.0).abs() < 1e-9);
        assert!((by_tag["run2"].score_a - 0.828213140421352).abs() < 1e-9);
        assert!((by_tag["run3"].score_a - 0.79344133571786).abs() < 1e-9);
        assert!((by_tag["run1"].score_b - 1.0).abs() < 1e-9);
        assert!((by_tag["run2"].score_b - 0.6309297535714574).abs() < 1e-9);
        assert!((by_tag["run3"].score_b - 0.75).abs() < 1e-9);
        assert!((report.kendall_tau - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.spearman_rho - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_runs_with_reversed_winners_anticorrelate() {
        let runs = vec![
            run("t1 Q0 a 1 2.0 r1\nt1 Q0 b 2 1.0 r1\n"),
            run("t1 Q0 b 1 2.0 r2\nt1 Q0 a 2 1.0 r2\n"),
        ];
        let mut qa = Qrels::new();
        qa.insert("t1", "a", grade(3)).unwrap();
        qa.insert("t1", "b", grade(0)).unwrap();
        let mut qb = Qrels::new();
        qb.insert("t1", "a", grade(0)).unwrap();
        qb.insert("t1", "b", grade(3)).unwrap();

        let report = correlate_systems(&runs, &qa, &qb, 10, GainScheme::Linear).unwrap();
        assert_eq!(report.kendall_tau, -1.0);
        assert_eq!(report.spearman_rho, -1.0);
    }

    #[test]
    fn fewer_than_two_runs_is_an_error() {
        let (mut runs, qa, qb) = three_run_fixture();
        runs.truncate(1);
        assert!(matches!(
            correlate_systems(&runs, &qa, &qb, 10, GainScheme::Linear),
            Err(MetricsError::TooFewRuns { found: 1 })
        ));
    }

    #[test]
    fn run_order_does_not_change_the_report() {
        let (mut runs, qa, qb) = three_run_fixture();
        let forward = correlate_systems(&runs, &qa, &qb, 10, GainScheme::Linear).unwrap();
        runs.reverse();
        let reversed = correlate_systems(&runs, &qa, &qb, 10, GainScheme::Linear).unwrap();
        assert_eq!(forward, reversed);
    }

    #[test]
    fn run_unjudged_under_one_side_is_an_error() {
        let runs = vec![run("t1 Q0 a 1 2.0 r1\n"), run("t9 Q0 a 1 2.0 r2\n")];
        let mut qa = Qrels::new();
        qa.insert("t1", "a", grade(1)).unwrap();
        qa.insert("t9", "a", grade(1)).unwrap();
        let mut qb = Qrels::new();
        qb.insert("t1", "a", grade(1)).unwrap();
        let err = correlate_systems(&runs, &qa, &qb, 10, GainScheme::Linear).unwrap_err();
        assert!(matches!(err, MetricsError::NoOverlap { .. }));
    }

    #[test]
    fn duplicate_run_tags_are_an_error() {
        let runs = vec![run("t1 Q0 a 1 2.0 r1\n"), run("t1 Q0 b 1 2.0 r1\n")];
        let mut qa = Qrels::new();
        qa.insert("t1", "a", grade(1)).unwrap();
        assert!(matches!(
            correlate_systems(&runs, &qa, &qa, 10, GainScheme::Linear),
            Err(MetricsError::DuplicateRunTag { .. })
        ));
    }
}
