//! Command-line orchestration for glvortex: sweeps, a content-addressed result
//! cache, CSV/JSON/plot-data reports and replayable run manifests.

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod cache;
pub mod commands;
pub mod context;
pub mod error;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, Settings, SolverFlags};
use crate::cache::Cache;
use crate::context::Context;
use crate::error::{CliError, CliResult};
use crate::report::{write_report, Format, Report, Table};

pub use crate::report::Cell;

/// One written file and the SHA-256 of its bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    /// Solver flags after merging the config file.
    pub solver: SolverFlags,
    pub format: Format,
    pub artifact_version: String,
    pub wall_clock_seconds: f64,
    pub cache_hits: usize,
    pub cache_misses: usize,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Result of one invocation.
pub struct Outcome {
    pub report: Report,
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

fn report_path(out: &Path, stem: &str, format: Format) -> PathBuf {
    out.join(format!("{stem}.{}", format.extension()))
}

/// Execute `command`, write its report and manifest under `out`.
pub fn run_command(
    command: &Command,
    solver: &SolverFlags,
    format: Format,
    out: &Path,
    cache: Cache,
) -> CliResult<Outcome> {
    let start = Instant::now();
    let ctx = Context::new(solver.clone(), cache);
    let report = match command {
        Command::Report(a) => replay(&RunManifest::load(&a.manifest)?, out)?,
        _ => commands::execute(command, &ctx)?,
    };
    let path = write_report(&report, format, &report_path(out, &report.stem, format))?;
    let manifest = RunManifest {
        command: command.clone(),
        solver: solver.clone(),
        format,
        artifact_version: cache::VERSION.to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        cache_hits: ctx.cache.hits(),
        cache_misses: ctx.cache.misses(),
        outputs: vec![OutputFile {
            sha256: sha256_file(&path)?,
            path,
        }],
    };
    let manifest_path = out.join(format!("{}.manifest.json", report.stem));
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, body).map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(Outcome {
        report,
        manifest,
        manifest_path,
    })
}

/// Re-run a manifest without the cache into `<out>/replay` and compare output hashes.
fn replay(manifest: &RunManifest, out: &Path) -> CliResult<Report> {
    if matches!(manifest.command, Command::Report(_)) {
        return Err(CliError::Usage("cannot replay a report manifest".into()));
    }
    let replay_ctx = Context::new(manifest.solver.clone(), Cache::disabled());
    let report = commands::execute(&manifest.command, &replay_ctx)?;
    let path = write_report(
        &report,
        manifest.format,
        &report_path(&out.join("replay"), &report.stem, manifest.format),
    )?;
    let fresh = sha256_file(&path)?;
    let mut table = Table::new(&["recorded_path", "recorded_sha256", "replay_path", "replay_sha256", "identical"]);
    let mut all = !manifest.outputs.is_empty();
    for o in &manifest.outputs {
        let same = o.sha256 == fresh;
        all &= same;
        table.push(vec![
            o.path.display().to_string().into(),
            o.sha256.as_str().into(),
            path.display().to_string().into(),
            fresh.as_str().into(),
            same.into(),
        ]);
    }
    Ok(Report {
        stem: "report".into(),
        json: serde_json::json!({
            "manifest": manifest,
            "replay": OutputFile { path: path.clone(), sha256: fresh.clone() },
            "identical": all,
        }),
        table,
        series: vec![],
        passed: Some(all),
    })
}

/// Parse `args`, run, and return the process exit status: 0 on success, 1 when
/// an asserted check fails or a computation errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: &Cli) -> CliResult<i32> {
    let g = &cli.global;
    let settings = Settings::resolve(g)?;
    let cache = match &settings.cache_dir {
        Some(d) => Cache::at(d),
        None => Cache::disabled(),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = settings.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| run_command(&cli.command, &settings.solver, g.format, &g.out, cache))?;
    if !g.quiet {
        for o in &outcome.manifest.outputs {
            eprintln!("wrote {}", o.path.display());
        }
        eprintln!("wrote {}", outcome.manifest_path.display());
        if let Some(p) = outcome.report.passed {
            eprintln!("{}", if p { "PASS" } else { "FAIL" });
        }
    }
    Ok(match outcome.report.passed {
        Some(false) => 1,
        _ => 0,
    })
}
