//! Command-line front end for `sqzlab-core`: configuration loading, strict
//! CSV I/O, atomic output and reproducible run manifests.

pub mod args;
pub mod commands;
pub mod csvio;
pub mod error;
pub mod fixtures;
pub mod output;

use std::path::{Path, PathBuf};

use sqzlab_core::config::{apply_override, parse_value, RunConfig};

use crate::args::{Command, ConfigArgs};
use crate::commands::{execute, Outputs};
use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, write_atomic, FileDigest, RunManifest, MANIFEST_NAME};

pub use crate::args::Cli;
pub use crate::error::{EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a finished command reports back to `main`.
#[derive(Debug, Clone)]
pub struct Report {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub messages: Vec<String>,
}

/// Read the config file, apply `--set` overrides and `--seed`, and type it.
pub fn load_config(a: &ConfigArgs) -> CliResult<(RunConfig, FileDigest)> {
    let bytes = std::fs::read(&a.config)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", a.config.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config(format!("config {} is not UTF-8", a.config.display())))?;
    let mut doc = parse_value(&text)?;
    for o in &a.set {
        apply_override(&mut doc, o)?;
    }
    if let Some(seed) = a.seed {
        apply_override(&mut doc, &format!("sim.seed={seed}"))?;
    }
    let cfg = RunConfig::from_value(doc)?;
    Ok((
        cfg,
        FileDigest {
            path: a.config.display().to_string(),
            sha256: sha256_hex(&bytes),
        },
    ))
}

fn write_outputs(
    cmd: &Command,
    cfg: Option<&RunConfig>,
    config_input: Option<FileDigest>,
    out: Outputs,
) -> CliResult<Report> {
    let dir = cmd.out_dir().clone();
    let mut outputs = Vec::new();
    for (name, bytes) in &out.files {
        write_atomic(&dir, name, bytes)?;
        outputs.push(FileDigest {
            path: name.clone(),
            sha256: sha256_hex(bytes),
        });
    }
    let mut inputs: Vec<FileDigest> = config_input.into_iter().collect();
    inputs.extend(out.inputs);
    let seed = match cmd {
        Command::Fixture(a) => Some(a.seed),
        _ => cfg.map(|c| c.sim.seed),
    };
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        invocation: cmd.clone(),
        config: cfg.map(RunConfig::to_value),
        seed,
        artifact_version: ARTIFACT_VERSION.to_string(),
        inputs,
        outputs,
        results: out.results,
    };
    write_atomic(&dir, MANIFEST_NAME, &manifest.to_bytes())?;
    Ok(Report {
        out_dir: dir,
        manifest,
        messages: out.messages,
    })
}

/// Run one parsed command line.
pub fn run(cli: Cli) -> CliResult<Report> {
    match &cli.command {
        Command::Replay(r) => replay(&r.manifest, &r.out.out),
        cmd => {
            let (cfg, digest) = match cmd.config_args() {
                Some(a) => {
                    let (c, d) = load_config(a)?;
                    (Some(c), Some(d))
                }
                None => (None, None),
            };
            let out = execute(cmd, cfg.as_ref())?;
            write_outputs(cmd, cfg.as_ref(), digest, out)
        }
    }
}

/// Re-run the command recorded in `manifest_path` into `out_dir` from its
/// config snapshot, and require byte-identical outputs.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> CliResult<Report> {
    let original = RunManifest::read(manifest_path)?;
    let mut cmd = original.invocation.clone();
    if matches!(cmd, Command::Replay(_)) {
        return Err(CliError::Config("a replay manifest cannot be replayed".into()));
    }
    cmd.set_out_dir(out_dir.to_path_buf());
    let cfg = match (&original.config, cmd.config_args()) {
        (Some(v), Some(_)) => Some(RunConfig::from_value(v.clone())?),
        (None, None) => None,
        _ => return Err(CliError::Config("manifest config snapshot does not match its command".into())),
    };
    // Data inputs (fit) must still be the recorded files.
    let skip = usize::from(cfg.is_some());
    for d in original.inputs.iter().skip(skip) {
        let bytes = std::fs::read(&d.path).map_err(|e| CliError::Data(format!("replay input {}: {e}", d.path)))?;
        if sha256_hex(&bytes) != d.sha256 {
            return Err(CliError::Data(format!("replay input {} changed since the recorded run", d.path)));
        }
    }
    let out = execute(&cmd, cfg.as_ref())?;
    let config_input = original.inputs.first().filter(|_| cfg.is_some()).cloned();
    let report = write_outputs(&cmd, cfg.as_ref(), config_input, out)?;
    let mismatched: Vec<String> = original
        .outputs
        .iter()
        .filter(|o| !report.manifest.outputs.contains(o))
        .map(|o| o.path.clone())
        .collect();
    if !mismatched.is_empty() || report.manifest.outputs.len() != original.outputs.len() {
        return Err(CliError::Data(format!(
            "replay outputs differ from the manifest: {}",
            if mismatched.is_empty() { "file list changed".to_string() } else { mismatched.join(", ") }
        )));
    }
    let mut messages = report.messages.clone();
    messages.push(format!("replay: {} output(s) byte-identical", original.outputs.len()));
    Ok(Report { messages, ..report })
}

/// Size the global rayon pool from `SQZLAB_THREADS`, if set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SQZLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("SQZLAB_THREADS = '{v}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
