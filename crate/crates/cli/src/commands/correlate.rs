use std::io::Write;

use relkit::metrics::correlate_systems;

use crate::report::{CorrelateReport, RunScoreRow};
use crate::{CliError, CorrelateArgs};

use super::{load_qrels, load_runs_dir};

pub fn run(args: CorrelateArgs) -> Result<(), CliError> {
    let qrels_a = load_qrels(&args.qrels_a, args.dedup_policy.into())?;
    let qrels_b = load_qrels(&args.qrels_b, args.dedup_policy.into())?;
    let runs: Vec<_> = load_runs_dir(&args.runs_dir)?
        .into_iter()
        .map(|(_, run)| run)
        .collect();
    if runs.len() < 2 {
        return Err(CliError::Data(format!(
            "need at least 2 parseable runs in {}, found {}",
            args.runs_dir.display(),
            runs.len()
        )));
    }

    let result = correlate_systems(&runs, &qrels_a, &qrels_b, args.k, args.gain.into())?;
    let report = CorrelateReport {
        runs: runs.len(),
        k: args.k,
        kendall_tau: result.kendall_tau,
        spearman_rho: result.spearman_rho,
        scores: result
            .paired
            .iter()
            .map(|p| RunScoreRow {
                run: p.tag.clone(),
                score_a: p.score_a,
                score_b: p.score_b,
            })
            .collect(),
    };

    if let Some(path) = &args.scatter {
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "run,score_a,score_b")?;
        for row in &report.scores {
            writeln!(file, "{},{},{}", row.run, row.score_a, row.score_b)?;
        }
    }

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        println!("runs: {}", report.runs);
        println!("ndcg cutoff: {}", report.k);
        println!("kendall tau-b: {:.6}", report.kendall_tau);
        println!("spearman rho: {:.6}", report.spearman_rho);
    }
    Ok(())
}
