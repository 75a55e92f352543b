//! Directory runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use globset::{Glob, GlobMatcher};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::error::InputError;
use crate::report::{FileError, Report, SuiteReport};
use crate::run::{run, RunOptions};
use crate::scenario::Scenario;

/// Golden reports sit next to their scenarios and are not scenarios.
pub const REPORT_SUFFIX: &str = ".report.toml";

/// Scenario files under `dir`, as (relative path with `/`, absolute path),
/// sorted by relative path.
pub fn discover(dir: &Path, filter: Option<&str>) -> Result<Vec<(String, PathBuf)>, InputError> {
    let matcher: Option<GlobMatcher> = match filter {
        Some(f) => Some(Glob::new(f).map_err(|e| InputError::schema("--filter", e.to_string()))?.compile_matcher()),
        None => None,
    };
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| InputError::Io { path: dir.to_path_buf(), source: e.into() })?;
        let path = entry.path();
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if !entry.file_type().is_file() || !name.ends_with(".toml") || name.ends_with(REPORT_SUFFIX) {
            continue;
        }
        let rel = path.strip_prefix(dir).unwrap_or(path).components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        let stem = rel.trim_end_matches(".toml");
        if matcher.as_ref().is_some_and(|m| !m.is_match(&rel) && !m.is_match(stem)) {
            continue;
        }
        out.push((rel, path.to_path_buf()));
    }
    Ok(out)
}

/// Runs every matching scenario in parallel; reports come back sorted by name.
pub fn suite(dir: &Path, filter: Option<&str>, opts: &RunOptions) -> Result<SuiteReport, InputError> {
    let start = Instant::now();
    let files = discover(dir, filter)?;
    let results: Vec<(String, Result<Report, InputError>)> =
        files.par_iter().map(|(rel, path)| (rel.clone(), Scenario::load(path).and_then(|sc| run(&sc, opts)))).collect();
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (file, r) in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => errors.push(FileError { file, error: e.to_string() }),
        }
    }
    let mut out = SuiteReport::new(reports, errors);
    if opts.timing {
        out.summary.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(out)
}
