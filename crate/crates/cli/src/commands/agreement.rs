use std::io::Write;

use relkit::metrics::{align, cohen_kappa, confusion, KappaScale};
use relkit::trec::Grade;

use crate::report::AgreementReport;
use crate::{AgreementArgs, CliError, ScaleArg};

use super::load_qrels;

pub fn run(args: AgreementArgs) -> Result<(), CliError> {
    let qrels_a = load_qrels(&args.qrels_a, args.dedup_policy.into())?;
    let qrels_b = load_qrels(&args.qrels_b, args.dedup_policy.into())?;

    let aligned = align(&qrels_a, &qrels_b)?;
    let matrix = confusion(&aligned);
    let kappa_four = match args.scale {
        ScaleArg::Four | ScaleArg::Both => Some(cohen_kappa(&aligned, KappaScale::Four)?),
        ScaleArg::Binary => None,
    };
    let kappa_binary = match args.scale {
        ScaleArg::Binary | ScaleArg::Both => Some(cohen_kappa(&aligned, KappaScale::Binary)?),
        ScaleArg::Four => None,
    };

    let report = AgreementReport {
        aligned_pairs: aligned.len(),
        a_only: aligned.human_only,
        b_only: aligned.llm_only,
        kappa_four,
        kappa_binary,
        confusion: *matrix.counts(),
        confusion_row_normalized: matrix.row_normalized(),
    };

    if let Some(path) = &args.csv {
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "a_grade,b0,b1,b2,b3")?;
        for grade in Grade::ALL {
            let row = matrix.row(grade);
            writeln!(file, "{grade},{},{},{},{}", row[0], row[1], row[2], row[3])?;
        }
    }

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        println!(
            "aligned pairs: {} (a-only: {}, b-only: {})",
            report.aligned_pairs, report.a_only, report.b_only
        );
        if let Some(k) = report.kappa_four {
            println!("kappa four-scale: {k:.6}");
        }
        if let Some(k) = report.kappa_binary {
            println!("kappa binary: {k:.6}");
        }
        println!("confusion matrix (rows = a, columns = b):");
        println!(
            "{:>6} {:>8} {:>8} {:>8} {:>8}",
            "", "b=0", "b=1", "b=2", "b=3"
        );
        for grade in Grade::ALL {
            let row = matrix.row(grade);
            println!(
                "{:>6} {:>8} {:>8} {:>8} {:>8}",
                format!("a={grade}"),
                row[0],
                row[1],
                row[2],
                row[3]
            );
        }
        println!("row-normalized (fraction of each a-grade):");
        let normalized = matrix.row_normalized();
        for grade in Grade::ALL {
            let row = normalized[grade.value() as usize];
            println!(
                "{:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                format!("a={grade}"),
                row[0],
                row[1],
                row[2],
                row[3]
            );
        }
    }
    Ok(())
}
