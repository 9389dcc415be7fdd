//! Subcommand dispatch and exit codes for the `tensor-heston` binary.
//!
//! Exit status: 0 on success, 1 when validation fails, 2 on configuration or I/O errors.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use super::config::{load_config, OutputRequest};
use super::output::{write_json, write_paths_csv};
use super::run::{run_selected, RunOptions};
use super::validate::validate_all;
use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    /// Path CSV plus terminal means.
    Simulate,
    /// `char_Y`, `char_V`, `cov_Y`, `cov_X` requests.
    Analytics,
    /// `forward_cov` requests.
    Forward,
    /// `project_cir` requests.
    Project,
    /// The full validation suite.
    Validate,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Subcommand,
    pub config: PathBuf,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed_override: Option<u64>,
    pub timing: bool,
}

fn selects(command: Subcommand, request: &OutputRequest) -> bool {
    use OutputRequest::*;
    match command {
        Subcommand::Analytics => matches!(request, CharY { .. } | CharV { .. } | CovY { .. } | CovX { .. }),
        Subcommand::Forward => matches!(request, ForwardCov { .. }),
        Subcommand::Project => matches!(request, ProjectCir { .. }),
        Subcommand::Simulate | Subcommand::Validate => false,
    }
}

fn execute_inner(inv: &Invocation) -> Result<i32> {
    let mut config = load_config(&inv.config)?;
    if let Some(seed) = inv.seed_override {
        config.mc.seed = seed;
    }
    fs::create_dir_all(&inv.out)?;
    let options = RunOptions { timing: inv.timing };
    if inv.command == Subcommand::Validate {
        let report = validate_all(&config);
        write_json(&inv.out.join("validation.json"), &report)?;
        for c in &report.checks {
            eprintln!(
                "{} {:<28} error {:.3e} (tolerance {:.3e})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.error,
                c.tolerance
            );
        }
        return Ok(if report.passed { EXIT_OK } else { EXIT_VALIDATION });
    }
    let model = config.model.build()?;
    let records = if inv.command == Subcommand::Simulate {
        let file = fs::File::create(inv.out.join("paths.csv"))?;
        write_paths_csv(&config, &model, BufWriter::new(file))?
    } else {
        run_selected(&config, &model, options, |r| selects(inv.command, r))
    };
    write_json(&inv.out.join("results.json"), &records)?;
    Ok(EXIT_OK)
}

/// Runs one invocation, printing errors to stderr, and returns the process exit status.
pub fn execute(inv: &Invocation) -> i32 {
    let run = || execute_inner(inv);
    let result = match inv.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Error::Config {
                path: "--threads".into(),
                message: e.to_string(),
            }),
        },
        None => run(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
