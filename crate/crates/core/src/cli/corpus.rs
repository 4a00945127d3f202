//! Golden cases. A corpus directory holds rule files `NAME.trs`, each with
//! an optional `NAME.expected` whose lines read
//!
//! ```text
//! limit --term t --strategy alternating => f(_|_, mu x. g(x))
//! ```
//!
//! The subcommand runs on `NAME.trs` and the first line of its text report
//! must equal the right-hand side. Arguments are split on whitespace.

use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::{execute, Cli};
use crate::error::{Error, Result};
use clap::Parser;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub got: String,
}

struct Case {
    name: String,
    args: Vec<String>,
    expected: String,
}

fn cases(dir: &Path) -> Result<Vec<Case>> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "expected"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let trs = path.with_extension("trs");
        let src = std::fs::read_to_string(&path).map_err(io)?;
        for (i, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (cmd, expected) = line.split_once("=>").ok_or_else(|| Error::Parse {
                line: i + 1,
                col: 1,
                msg: format!("{stem}.expected: missing `=>`"),
            })?;
            let mut words = cmd.split_whitespace().map(str::to_string);
            let sub = words.next().unwrap_or_default();
            let mut args = vec!["irw".to_string(), sub];
            args.push(trs.display().to_string());
            args.extend(words);
            out.push(Case { name: format!("{stem}:{}", i + 1), args, expected: expected.trim().to_string() });
        }
    }
    Ok(out)
}

fn run_case(case: &Case) -> CaseResult {
    let got = match Cli::try_parse_from(&case.args) {
        Err(e) => format!("usage: {}", e.kind()),
        Ok(cli) => match execute(&cli.command) {
            Ok(r) => r.headline().to_string(),
            Err(e) => format!("error[{}]: {e}", e.code()),
        },
    };
    let passed = got == case.expected || (case.expected.starts_with("error[") && got.starts_with(&case.expected));
    CaseResult { name: case.name.clone(), passed, expected: case.expected.clone(), got }
}

/// Runs every case in `dir`; with a seed, in a shuffled order.
pub fn run_corpus(dir: &Path, seed: Option<u64>) -> Result<Vec<CaseResult>> {
    let mut all = cases(dir)?;
    if let Some(s) = seed {
        all.shuffle(&mut StdRng::seed_from_u64(s));
    }
    Ok(all.iter().map(run_case).collect())
}
