//! The `chronolm` command line.
//!
//! Every run writes `<command>-<sub>.config.toml` (the resolved arguments)
//! and `<command>-<sub>.manifest.json` (sha256 of every output) into the
//! output directory. Passing the snapshot back with `--config` reproduces
//! the run; flags given on the command line override its values.

mod args;
mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches};
use serde::Serialize;

use crate::mlm::CheckpointError;
use crate::{Error, Result};
pub use args::Cli;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_INPUT: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;
pub const EXIT_RUNTIME: i32 = 6;

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MissingInput(_) => EXIT_MISSING_INPUT,
        Error::Malformed(_) | Error::Json(_) => EXIT_MALFORMED,
        Error::Checkpoint(CheckpointError::Io { source, .. })
            if source.kind() == std::io::ErrorKind::NotFound =>
        {
            EXIT_MISSING_INPUT
        }
        Error::Checkpoint(CheckpointError::Io { .. }) => EXIT_RUNTIME,
        Error::Checkpoint(_) => EXIT_MALFORMED,
        Error::Config(_) | Error::Sequencing(_) | Error::OutOfVocabulary(_) => EXIT_CONFIG,
        Error::Contract(_)
        | Error::Diverged { .. }
        | Error::NotConverged { .. }
        | Error::Degenerate(_)
        | Error::Io { .. } => EXIT_RUNTIME,
    }
}

fn configure(cmd: clap::Command) -> clap::Command {
    let names: Vec<String> = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let mut cmd = cmd.args_override_self(true);
    for n in names {
        cmd = cmd.mut_subcommand(n, configure);
    }
    cmd
}

/// Positions of the subcommand tokens, skipping global options and their values.
fn command_path(argv: &[OsString]) -> Vec<usize> {
    let root = Cli::command();
    let takes_value = |long: &str| {
        root.get_arguments()
            .find(|a| a.get_long() == Some(long))
            .is_some_and(|a| a.get_action().takes_values())
    };
    let mut cmd = root.clone();
    let mut path = Vec::new();
    let mut i = 1;
    while i < argv.len() {
        let Some(tok) = argv[i].to_str() else { break };
        if let Some(long) = tok.strip_prefix("--") {
            if !long.contains('=') && takes_value(long) {
                i += 1;
            }
        } else if !tok.starts_with('-') {
            match cmd.find_subcommand(tok) {
                Some(sub) => {
                    cmd = sub.clone();
                    path.push(i);
                }
                None => break,
            }
        }
        i += 1;
    }
    path
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(tok) = it.next() {
        let s = tok.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

/// Flags equivalent to a flat TOML table.
pub fn config_to_flags(text: &str, origin: &Path) -> Result<Vec<OsString>> {
    Ok(config_groups(text, origin)?
        .into_iter()
        .flat_map(|(_, g)| g)
        .collect())
}

/// Per-key flag groups, keyed by the long flag.
fn config_groups(text: &str, origin: &Path) -> Result<Vec<(String, Vec<OsString>)>> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Malformed(format!("{}: {e}", origin.display())))?;
    let mut flags = Vec::new();
    for (key, value) in table {
        if key == COMMAND_KEY {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String> {
            Ok(match v {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                other => {
                    return Err(Error::Malformed(format!(
                        "{}: `{key}` has unsupported value {other}",
                        origin.display()
                    )))
                }
            })
        };
        let group: Vec<OsString> = match &value {
            toml::Value::Boolean(true) => vec![flag.clone().into()],
            toml::Value::Boolean(false) => vec![],
            toml::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                if parts.is_empty() {
                    vec![]
                } else {
                    vec![flag.clone().into(), parts.join(",").into()]
                }
            }
            v => vec![flag.clone().into(), scalar(v)?.into()],
        };
        if !group.is_empty() {
            flags.push((flag, group));
        }
    }
    Ok(flags)
}

/// Snapshot key naming the subcommand, used when none is given.
pub(crate) const COMMAND_KEY: &str = "command";

fn snapshot_command(text: &str) -> String {
    text.parse::<toml::Table>()
        .ok()
        .and_then(|t| {
            t.get(COMMAND_KEY)
                .and_then(|v| v.as_str().map(str::to_string))
        })
        .unwrap_or_default()
}

/// Parses `argv` with any `--config` file applied underneath it: keys also
/// given on the command line keep their command-line value.
pub fn parse(argv: Vec<OsString>) -> std::result::Result<Cli, ParseFailure> {
    let mut argv = argv;
    if let Some(path) = config_path(&argv) {
        let text =
            std::fs::read_to_string(&path).map_err(|e| ParseFailure::Run(Error::io(&path, e)))?;
        let explicit: Vec<String> = argv
            .iter()
            .filter_map(|t| t.to_str())
            .filter(|t| t.starts_with("--"))
            .map(|t| t.split('=').next().unwrap_or(t).to_string())
            .collect();
        let flags: Vec<OsString> = config_groups(&text, &path)
            .map_err(ParseFailure::Run)?
            .into_iter()
            .filter(|(flag, _)| !explicit.contains(flag))
            .flat_map(|(_, g)| g)
            .collect();
        let path_at = command_path(&argv);
        let mut rebuilt: Vec<OsString> = vec![argv[0].clone()];
        if path_at.is_empty() {
            rebuilt.extend(
                snapshot_command(&text)
                    .split_whitespace()
                    .map(OsString::from),
            );
        }
        rebuilt.extend(path_at.iter().map(|&i| argv[i].clone()));
        rebuilt.extend(flags);
        rebuilt.extend(
            argv.iter()
                .enumerate()
                .skip(1)
                .filter(|(i, _)| !path_at.contains(i))
                .map(|(_, t)| t.clone()),
        );
        argv = rebuilt;
    }
    let matches = configure(Cli::command())
        .try_get_matches_from(argv)
        .map_err(ParseFailure::Usage)?;
    Cli::from_arg_matches(&matches).map_err(ParseFailure::Usage)
}

#[derive(Debug)]
pub enum ParseFailure {
    Usage(clap::Error),
    Run(Error),
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(ParseFailure::Usage(e)) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
        Err(ParseFailure::Run(e)) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match commands::execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    version: String,
    seed: u64,
    inputs: Vec<ManifestEntry>,
    outputs: Vec<ManifestEntry>,
}

fn entry(path: &Path, shown: String) -> Result<ManifestEntry> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(ManifestEntry {
        path: shown,
        bytes: bytes.len() as u64,
        sha256: crate::mlm::sha256_hex(&bytes),
    })
}

/// Output bookkeeping for one command run.
pub(crate) struct Run {
    pub out_dir: PathBuf,
    pub name: String,
    pub seed: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(out_dir: &Path, name: &str, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(Run {
            out_dir: out_dir.to_path_buf(),
            name: name.into(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    pub fn input(&mut self, path: &Path) -> PathBuf {
        self.inputs.push(path.to_path_buf());
        path.to_path_buf()
    }

    pub fn produced(&mut self, path: PathBuf) {
        if !self.outputs.contains(&path) {
            self.outputs.push(path);
        }
    }

    pub fn write(&mut self, file: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(file);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.produced(path.clone());
        Ok(path)
    }

    pub fn write_json<S: Serialize>(&mut self, file: &str, value: &S) -> Result<PathBuf> {
        self.write(file, serde_json::to_string_pretty(value)? + "\n")
    }

    /// Writes the config snapshot and the manifest.
    pub fn finish(mut self, snapshot: &toml::Table) -> Result<()> {
        let text = toml::to_string(snapshot)
            .map_err(|e| Error::Config(format!("config snapshot: {e}")))?;
        let stem = self.name.replace(' ', "-");
        let cfg = self.path(&format!("{stem}.config.toml"));
        std::fs::write(&cfg, text).map_err(|e| Error::io(&cfg, e))?;
        let rel = |p: &Path, base: &Path| p.strip_prefix(base).unwrap_or(p).display().to_string();
        self.outputs.sort();
        let outputs = self
            .outputs
            .iter()
            .map(|p| entry(p, rel(p, &self.out_dir)))
            .collect::<Result<_>>()?;
        let inputs = self
            .inputs
            .iter()
            .filter(|p| p.is_file())
            .map(|p| {
                entry(
                    p,
                    p.file_name()
                        .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                )
            })
            .collect::<Result<_>>()?;
        let manifest = Manifest {
            command: self.name.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            inputs,
            outputs,
        };
        let path = self.path(&format!("{stem}.manifest.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .map_err(|e| Error::io(&path, e))
    }
}
