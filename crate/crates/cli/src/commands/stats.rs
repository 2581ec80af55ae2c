use relkit::trec::Grade;

use crate::report::{QrelsCounts, StatsReport};
use crate::{CliError, StatsArgs};

use super::load_qrels;

pub fn run(args: StatsArgs) -> Result<(), CliError> {
    let qrels = load_qrels(&args.qrels, args.dedup_policy.into())?;
    let report = StatsReport {
        counts: QrelsCounts::from_qrels(&qrels),
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        let stats = qrels.stats();
        for grade in Grade::ALL {
            println!("label {grade}: {}", stats.histogram.count(grade));
        }
        println!("topics: {}", stats.topic_count);
        println!("entries: {}", stats.histogram.total());
    }
    Ok(())
}
