pub mod agreement;
pub mod correlate;
pub mod dedup;
pub mod judge;
pub mod stats;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use relkit::trec::{DupPolicy, Qrels, RunList};

use crate::CliError;

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn load_qrels(path: &Path, policy: DupPolicy) -> Result<Qrels, CliError> {
    Qrels::parse(open(path)?, policy)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Loads every parseable run in a directory, sorted by file name.
/// Unparseable files are skipped with a warning on stderr; score-order
/// warnings are surfaced the same way.
pub(crate) fn load_runs_dir(dir: &Path) -> Result<Vec<(String, RunList)>, CliError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let mut runs = Vec::new();
    for path in paths {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if name.starts_with('.') {
            continue;
        }
        match RunList::parse(open(&path)?) {
            Ok(parsed) => {
                for warning in &parsed.warnings {
                    eprintln!("warning: {name}: {warning}");
                }
                runs.push((name, parsed.run));
            }
            Err(e) => eprintln!("warning: skipping {name}: {e}"),
        }
    }
    Ok(runs)
}
