use std::fs::File;
use std::io::BufWriter;

use relkit::dedup::{dedup_qrels, dedup_run, DupClusters};
use relkit::trec::Grade;

use crate::report::{DedupReport, QrelsCounts, RunDedupRow};
use crate::{CliError, DedupArgs};

use super::{load_qrels, load_runs_dir, open};

pub fn run(args: DedupArgs) -> Result<(), CliError> {
    let qrels = load_qrels(&args.qrels, args.dedup_policy.into())?;
    let clusters = DupClusters::parse(open(&args.clusters)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.clusters.display())))?;

    std::fs::create_dir_all(&args.out_dir)?;
    let deduped = dedup_qrels(&qrels, &clusters);
    let qrels_name = args
        .qrels
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "qrels.txt".to_string());
    let out_qrels = args.out_dir.join(&qrels_name);
    deduped.write(BufWriter::new(File::create(&out_qrels)?))?;

    let mut run_rows = Vec::new();
    if let Some(runs_dir) = &args.runs_dir {
        let out_runs = args.out_dir.join("runs");
        std::fs::create_dir_all(&out_runs)?;
        for (name, run) in load_runs_dir(runs_dir)? {
            let filtered = dedup_run(&run, &clusters);
            filtered.write(BufWriter::new(File::create(out_runs.join(&name))?))?;
            run_rows.push(RunDedupRow {
                file: name,
                tag: run.tag().to_string(),
                entries_before: run.entry_count(),
                entries_after: filtered.entry_count(),
            });
        }
    }

    let report = DedupReport {
        before: QrelsCounts::from_qrels(&qrels),
        after: QrelsCounts::from_qrels(&deduped),
        runs: run_rows,
    };

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        println!(
            "{:>8} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "", "topics", "label 0", "label 1", "label 2", "label 3", "entries"
        );
        for (name, counts) in [("before", &report.before), ("after", &report.after)] {
            print!("{name:>8} {:>7}", counts.topics);
            for grade in Grade::ALL {
                print!(
                    " {:>9}",
                    counts.labels.get(&grade.to_string()).copied().unwrap_or(0)
                );
            }
            println!(" {:>9}", counts.entries);
        }
        for row in &report.runs {
            println!(
                "run {}: {} -> {} entries",
                row.file, row.entries_before, row.entries_after
            );
        }
    }
    eprintln!(
        "wrote {} ({} entries); {} run file(s)",
        out_qrels.display(),
        report.after.entries,
        report.runs.len()
    );
    Ok(())
}
