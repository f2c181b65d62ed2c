//! Command-line entry points.
//!
//! Exit codes: 0 success, 2 configuration error, 3 provider error,
//! 4 aborted run that can be resumed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::demo;
use crate::provider::{ChatProvider, HttpChatProvider, Script, ScriptedProvider, API_KEY_ENV};
use crate::room::{validate_room, ProviderKind, RoomConfig};
use crate::session::{
    self, load_session, open_session, run_session, PhaseStatus, RunOutput, SessionError,
};
use crate::transcript::Stage;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;
pub const EXIT_ABORTED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "writers-room",
    version,
    about = "Run a room of writer agents that ideate, agree and co-write a story"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the reference four-writer room config to PATH.
    Init {
        path: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Check a room config and list any problems.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a room, or resume an interrupted session.
    Run(RunArgs),
    /// Run the bundled offline room and print its story.
    Demo {
        /// Keep the session under this directory instead of a temporary one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderChoice {
    Scripted,
    Http,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Room config; required unless resuming.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "http")]
    pub provider: ProviderChoice,
    /// Script file for the scripted provider.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Session id to resume.
    #[arg(long)]
    pub resume: Option<String>,
    /// Directory holding session directories.
    #[arg(long, default_value = "sessions")]
    pub out: PathBuf,
}

/// A failure with its exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Init { path, force } => cmd_init(&path, force).map(|_| {
            let _ = writeln!(out, "wrote {}", path.display());
        }),
        Command::Validate { config } => cmd_validate(&config, out),
        Command::Run(args) => cmd_run(&args, out, err),
        Command::Demo { out: dir } => cmd_demo(dir.as_deref(), out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Writes the reference room config to `path`.
pub fn cmd_init(path: &Path, force: bool) -> Result<RoomConfig, Failure> {
    if path.exists() && !force {
        return Err(Failure::config(format!(
            "{} already exists; pass --force to overwrite it",
            path.display()
        )));
    }
    let config = RoomConfig::reference();
    fs::write(path, config.to_json_pretty() + "\n")
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(config)
}

fn read_config(path: &Path) -> Result<RoomConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    RoomConfig::from_json(&text).map_err(|e| {
        Failure::config(format!(
            "{} is not a valid room config: {e}",
            path.display()
        ))
    })
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let config = read_config(path)?;
    let report = validate_room(&config);
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    if report.is_valid() {
        let _ = writeln!(out, "ok: {} writers", config.writers.len());
        return Ok(());
    }
    for d in &report.diagnostics {
        let _ = writeln!(out, "invalid: {d}");
    }
    Err(Failure::config(format!(
        "{} has {} problem(s)",
        path.display(),
        report.diagnostics.len()
    )))
}

fn build_provider(args: &RunArgs, config: &RoomConfig) -> Result<Box<dyn ChatProvider>, Failure> {
    match args.provider {
        ProviderChoice::Scripted => {
            let path = args
                .script
                .as_deref()
                .ok_or_else(|| Failure::config("--provider scripted needs --script"))?;
            let script = Script::load(path).map_err(|e| Failure::config(e.to_string()))?;
            Ok(Box::new(ScriptedProvider::new(script)))
        }
        ProviderChoice::Http => {
            if let Some(w) = config
                .writers
                .iter()
                .find(|w| w.binding.provider_kind != ProviderKind::HttpChat)
            {
                return Err(Failure::config(format!(
                    "writer {} is not bound to an http_chat endpoint",
                    w.name
                )));
            }
            let provider = HttpChatProvider::from_env()
                .ok_or_else(|| Failure::config(format!("{API_KEY_ENV} is not set")))?;
            Ok(Box::new(provider))
        }
    }
}

fn session_failure(e: SessionError, id: &str, root: &Path) -> Failure {
    let hint = format!(
        "session {id} is resumable: run --resume {id} --out {}",
        root.display()
    );
    match e {
        SessionError::Run(run) if run.is_provider() => Failure {
            code: EXIT_PROVIDER,
            message: format!("{run}\n{hint}"),
        },
        SessionError::Run(_) | SessionError::Io { .. } => Failure {
            code: EXIT_ABORTED,
            message: format!("{e}\n{hint}"),
        },
        other => Failure::config(other.to_string()),
    }
}

fn report_progress(err: &mut dyn Write) -> impl FnMut(Stage, PhaseStatus) + '_ {
    move |stage, status| {
        let status = format!("{status:?}").to_lowercase();
        let _ = writeln!(err, "[{stage}] {status}");
    }
}

fn print_story(output: &RunOutput, out: &mut dyn Write) {
    let _ = writeln!(out, "{}", output.story.text);
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config = args.config.as_deref().map(read_config).transpose()?;
    let (session, provider) = match (&args.resume, &config) {
        (Some(id), _) => {
            let session =
                load_session(&args.out, id).map_err(|e| Failure::config(e.to_string()))?;
            if let Some(config) = &config {
                let supplied = session::config_digest(config);
                if supplied != session.manifest().config_digest {
                    return Err(Failure::config(
                        SessionError::DigestMismatch {
                            stored: session.manifest().config_digest.clone(),
                            supplied,
                        }
                        .to_string(),
                    ));
                }
            }
            if session.manifest().is_complete() {
                let _ = writeln!(err, "session {id} is already complete");
                let story = fs::read_to_string(session.story_path()).unwrap_or_default();
                let _ = write!(out, "{story}");
                return Ok(());
            }
            let provider = build_provider(args, session.config())?;
            (session, provider)
        }
        (None, Some(config)) => {
            let report = validate_room(config);
            if !report.is_valid() {
                return Err(Failure::config(SessionError::Invalid(report).to_string()));
            }
            // Check credentials before anything is written to disk.
            let provider = build_provider(args, config)?;
            let session =
                open_session(&args.out, config).map_err(|e| Failure::config(e.to_string()))?;
            (session, provider)
        }
        (None, None) => {
            return Err(Failure::config(
                "--config is required unless --resume is given",
            ))
        }
    };
    let id = session.id().to_string();
    let _ = writeln!(err, "session {id} in {}", session.dir().display());
    let output = run_session(session, provider.as_ref(), &mut report_progress(err))
        .map_err(|e| session_failure(e, &id, &args.out))?;
    print_story(&output, out);
    let flagged = output
        .draft
        .contributions
        .iter()
        .filter(|c| !c.flags.is_empty())
        .count();
    let _ = writeln!(
        err,
        "{} sentences, {flagged} flagged; story and attribution written to {}",
        output.draft.len(),
        output.dir.display()
    );
    Ok(())
}

/// Runs the bundled scripted room and prints the story.
pub fn cmd_demo(
    dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let scratch;
    let root = match dir {
        Some(dir) => dir,
        None => {
            scratch = tempfile::tempdir()
                .map_err(|e| Failure::config(format!("cannot create a scratch directory: {e}")))?;
            scratch.path()
        }
    };
    let session = open_session(root, &demo::room()).map_err(|e| Failure::config(e.to_string()))?;
    let id = session.id().to_string();
    let output = run_session(session, &demo::provider(), &mut report_progress(err))
        .map_err(|e| session_failure(e, &id, root))?;
    print_story(&output, out);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(
            std::iter::once("writers-room").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn init_then_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("room.json");
        let path = path.to_str().unwrap();
        assert_eq!(run(&["init", path]).0, 0);
        let (code, out, _) = run(&["validate", "--config", path]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("ok: 4 writers"));
        assert_eq!(run(&["init", path]).0, EXIT_CONFIG);
        assert_eq!(run(&["init", path, "--force"]).0, 0);
    }

    #[test]
    fn invalid_config_exits_with_config_code() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("room.json");
        let mut config = RoomConfig::reference();
        config.writers.truncate(1);
        fs::write(&path, config.to_json_pretty()).unwrap();
        let (code, out, _) = run(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(out.contains("invalid: writers"), "{out}");
    }

    #[test]
    fn unknown_flag_is_config_error() {
        assert_eq!(run(&["run", "--bogus"]).0, EXIT_CONFIG);
        assert_eq!(run(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn demo_prints_the_story() {
        let (code, out, err) = run(&["demo"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("I woke to a single line"));
        assert!(err.contains("[writing] done"));
    }
}
