use std::fs::File;
use std::io::BufWriter;
use std::time::Duration;

use relkit::judge::{judge_pool, JudgeOptions, Pool};
use relkit::llm::{Backend, LlmClient, LlmConfig};
use relkit::prompt::PromptTemplate;
use relkit::trec::{CorpusFields, PassageCorpus, Topics};

use crate::report::JudgeReport;
use crate::{BackendArg, CliError, JudgeArgs};

use super::{load_qrels, load_runs_dir, open};

pub fn run(args: JudgeArgs) -> Result<(), CliError> {
    let pool = build_pool(&args)?;
    let topics = Topics::parse(open(&args.topics)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.topics.display())))?;

    let fields = CorpusFields {
        id: args.corpus_id_field.clone(),
        text: args.corpus_text_field.clone(),
    };
    let corpus = if args.indexed_corpus {
        PassageCorpus::open_indexed_with_fields(&args.corpus, fields)
    } else {
        PassageCorpus::load_with_fields(open(&args.corpus)?, &fields)
    }
    .map_err(|e| CliError::Data(format!("{}: {e}", args.corpus.display())))?;

    let template = match &args.template {
        Some(path) => PromptTemplate::from_text(&std::fs::read_to_string(path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => PromptTemplate::standard(),
    };

    let cfg = LlmConfig {
        endpoint_url: args.endpoint.clone(),
        model_name: args.model.clone(),
        api_key_env: args.api_key_env.clone(),
        temperature: args.temperature,
        top_p: args.top_p,
        frequency_penalty: args.frequency_penalty,
        presence_penalty: args.presence_penalty,
        max_output_tokens: args.max_output_tokens,
        request_timeout: Duration::from_secs(args.timeout_secs),
        max_retries: args.max_retries,
        max_in_flight: args.max_in_flight,
        cache_dir: args.cache_dir.clone(),
        backend: match args.backend {
            BackendArg::Remote => Backend::Remote,
            BackendArg::Mock => Backend::Mock,
        },
    };
    // Client construction resolves the API key, so a missing key stops
    // the job before any pair is judged.
    let client = LlmClient::new(&cfg)?;

    let options = JudgeOptions {
        log_path: args.log.clone(),
        throttle: args.throttle_ms.map(Duration::from_millis),
    };

    eprintln!("judging {} pair(s)...", pool.len());
    let outcome = judge_pool(&pool, &topics, &corpus, &client, &template, &options)?;
    outcome
        .qrels
        .write(BufWriter::new(File::create(&args.out)?))?;

    let report = JudgeReport {
        pool: pool.len(),
        resumed: outcome.resumed,
        judged: outcome.judged,
        failures: outcome.failures,
        cache_hits: outcome.cache_hits,
        out: args.out.display().to_string(),
        log: args.log.as_ref().map(|p| p.display().to_string()),
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    }
    eprintln!(
        "judged {} (resumed {}, cache hits {}), failures {}, wrote {}",
        report.judged, report.resumed, report.cache_hits, report.failures, report.out
    );

    if report.failures > 0 {
        return Err(CliError::Llm(format!(
            "{} pair(s) failed after retries; their pairs are omitted from {} (details in the audit log)",
            report.failures, report.out
        )));
    }
    Ok(())
}

fn build_pool(args: &JudgeArgs) -> Result<Pool, CliError> {
    match (&args.pool_qrels, &args.pool_runs) {
        (Some(qrels_path), None) => {
            let qrels = load_qrels(qrels_path, args.dedup_policy.into())?;
            Ok(Pool::from_qrels(&qrels))
        }
        (None, Some(runs_dir)) => {
            let depth = args.depth.expect("clap enforces --depth with --pool-runs");
            let runs: Vec<_> = load_runs_dir(runs_dir)?
                .into_iter()
                .map(|(_, run)| run)
                .collect();
            if runs.is_empty() {
                return Err(CliError::Data(format!(
                    "no parseable runs in {}",
                    runs_dir.display()
                )));
            }
            Ok(Pool::from_runs(runs.iter(), depth))
        }
        (None, None) => Err(CliError::Usage(
            "exactly one pool source is required: --pool-qrels FILE or --pool-runs DIR --depth K"
                .to_string(),
        )),
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting pool flags"),
    }
}
