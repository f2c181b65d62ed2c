//! On-disk sessions: an append-only transcript plus a manifest tracking
//! phase status, so an interrupted run can be resumed and finish with the
//! same bytes an uninterrupted run would have produced.
//!
//! Layout of `<root>/<session_id>/`:
//!
//! ```text
//! manifest.json      SessionManifest
//! config.json        the RoomConfig the session was opened with
//! transcript.jsonl   one Record per line, append-only
//! story.txt          the finished story, one paragraph
//! attribution.jsonl  one {index, writer, sentence} object per line
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consensus::{run_consensus, ConsensusOutcome};
use crate::ideation::{run_ideation, Proposals};
use crate::provider::ChatProvider;
use crate::room::{validate_room, RoomConfig, ValidationReport};
use crate::transcript::{Journal, Record, RecordSink, RunError, Stage, StorageError};
use crate::writing::{export_story, run_writing, ExportedStory, StoryDraft};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const STORY_FILE: &str = "story.txt";
pub const ATTRIBUTION_FILE: &str = "attribution.jsonl";

pub const DIGEST_ALGORITHM: &str = "sha256";
const SESSION_ID_HEX_CHARS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseStatus {
    Pending,
    Running,
    Done,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub transcript: String,
    pub story: String,
    pub attribution: String,
}

impl Default for ArtifactPaths {
    fn default() -> Self {
        Self {
            transcript: TRANSCRIPT_FILE.into(),
            story: STORY_FILE.into(),
            attribution: ATTRIBUTION_FILE.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub session_id: String,
    pub digest_algorithm: String,
    pub config_digest: String,
    /// The config's seed, kept for provenance.
    #[serde(default)]
    pub seed: u64,
    pub phase_status: BTreeMap<Stage, PhaseStatus>,
    pub created_at: String,
    pub updated_at: String,
    pub artifact_paths: ArtifactPaths,
}

impl SessionManifest {
    pub fn status(&self, stage: Stage) -> PhaseStatus {
        self.phase_status
            .get(&stage)
            .copied()
            .unwrap_or(PhaseStatus::Pending)
    }

    pub fn is_complete(&self) -> bool {
        Stage::ALL
            .iter()
            .all(|&s| self.status(s) == PhaseStatus::Done)
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid room config:\n{}", format_diagnostics(.0))]
    Invalid(ValidationReport),
    #[error("session {id} already exists at {}; resume it with --resume {id}", .path.display())]
    Collision { id: String, path: PathBuf },
    #[error("no session at {}", .0.display())]
    NotFound(PathBuf),
    #[error("config digest {supplied} does not match the session's {stored}; the room config changed since the session was created")]
    DigestMismatch { stored: String, supplied: String },
    #[error("session {0} is already complete")]
    AlreadyComplete(String),
    #[error("cannot start {phase}: {reason}")]
    PhaseOrder { phase: Stage, reason: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: line {line}: {reason}", .path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Run(#[from] RunError),
}

fn format_diagnostics(report: &ValidationReport) -> String {
    report
        .diagnostics
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// SHA-256 over the config serialized as JSON with sorted object keys.
pub fn config_digest(config: &RoomConfig) -> String {
    let canonical = serde_json::to_value(config).expect("config serializes");
    let bytes = serde_json::to_vec(&canonical).expect("value serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Sessions are named after their config, so the same room opened twice
/// under one root collides.
pub fn session_id_for(config: &RoomConfig) -> String {
    format!("room-{}", &config_digest(config)[..SESSION_ID_HEX_CHARS])
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<(), SessionError> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_error(&path))?;
    tmp.write_all(contents).map_err(io_error(&path))?;
    tmp.as_file().sync_all().map_err(io_error(&path))?;
    tmp.persist(&path).map_err(|e| SessionError::Io {
        path: path.clone(),
        source: e.error,
    })?;
    Ok(())
}

/// An open session directory. As a [`RecordSink`] it appends to the
/// transcript file and only accepts records for the running phase.
#[derive(Debug)]
pub struct Session {
    dir: PathBuf,
    manifest: SessionManifest,
    config: RoomConfig,
    transcript: Option<File>,
    records_on_disk: usize,
    fail_after: Option<usize>,
}

/// Creates `<root>/<session_id>/` with every phase pending.
pub fn open_session(root: &Path, config: &RoomConfig) -> Result<Session, SessionError> {
    let report = validate_room(config);
    if !report.is_valid() {
        return Err(SessionError::Invalid(report));
    }
    let id = session_id_for(config);
    let dir = root.join(&id);
    if dir.exists() {
        return Err(SessionError::Collision { id, path: dir });
    }
    fs::create_dir_all(&dir).map_err(io_error(&dir))?;
    let created = now();
    let manifest = SessionManifest {
        session_id: id,
        digest_algorithm: DIGEST_ALGORITHM.into(),
        config_digest: config_digest(config),
        seed: config.seed,
        phase_status: Stage::ALL
            .iter()
            .map(|&s| (s, PhaseStatus::Pending))
            .collect(),
        created_at: created.clone(),
        updated_at: created,
        artifact_paths: ArtifactPaths::default(),
    };
    write_atomic(&dir, CONFIG_FILE, config.to_json_pretty().as_bytes())?;
    let transcript = dir.join(TRANSCRIPT_FILE);
    File::create(&transcript).map_err(io_error(&transcript))?;
    let mut session = Session {
        dir,
        manifest,
        config: config.clone(),
        transcript: None,
        records_on_disk: 0,
        fail_after: None,
    };
    session.save_manifest()?;
    Ok(session)
}

/// Opens an existing session. A torn final transcript line, left by a crash
/// in the middle of a write, is cut off since it was never committed.
pub fn load_session(root: &Path, id: &str) -> Result<Session, SessionError> {
    let dir = root.join(id);
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(SessionError::NotFound(dir));
    }
    let text = fs::read_to_string(&manifest_path).map_err(io_error(&manifest_path))?;
    let manifest: SessionManifest =
        serde_json::from_str(&text).map_err(|e| SessionError::Corrupt {
            path: manifest_path.clone(),
            line: e.line(),
            reason: e.to_string(),
        })?;
    let config_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&config_path).map_err(io_error(&config_path))?;
    let config = RoomConfig::from_json(&text).map_err(|e| SessionError::Corrupt {
        path: config_path.clone(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    let stored = config_digest(&config);
    if stored != manifest.config_digest {
        return Err(SessionError::DigestMismatch {
            stored: manifest.config_digest,
            supplied: stored,
        });
    }

    let transcript = dir.join(TRANSCRIPT_FILE);
    let mut bytes = fs::read(&transcript).map_err(io_error(&transcript))?;
    let committed = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if committed < bytes.len() {
        bytes.truncate(committed);
        let file = OpenOptions::new()
            .write(true)
            .open(&transcript)
            .map_err(io_error(&transcript))?;
        file.set_len(committed as u64)
            .map_err(io_error(&transcript))?;
    }
    let records_on_disk = bytes.iter().filter(|&&b| b == b'\n').count();
    Ok(Session {
        dir,
        manifest,
        config,
        transcript: None,
        records_on_disk,
        fail_after: None,
    })
}

impl Session {
    pub fn id(&self) -> &str {
        &self.manifest.session_id
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &SessionManifest {
        &self.manifest
    }

    pub fn config(&self) -> &RoomConfig {
        &self.config
    }

    pub fn transcript_path(&self) -> PathBuf {
        self.dir.join(&self.manifest.artifact_paths.transcript)
    }

    pub fn story_path(&self) -> PathBuf {
        self.dir.join(&self.manifest.artifact_paths.story)
    }

    pub fn attribution_path(&self) -> PathBuf {
        self.dir.join(&self.manifest.artifact_paths.attribution)
    }

    /// Makes appends fail once the transcript holds `records` lines, to
    /// simulate a crash at that record boundary.
    pub fn fail_appends_after(&mut self, records: usize) {
        self.fail_after = Some(records);
    }

    /// Reads the committed transcript, checking sequence numbers.
    pub fn records(&self) -> Result<Vec<Record>, SessionError> {
        let path = self.transcript_path();
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let record = Record::from_json_line(line).map_err(|e| SessionError::Corrupt {
                path: path.clone(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            if record.seq != i as u64 {
                return Err(SessionError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    reason: format!("sequence number {} out of order", record.seq),
                });
            }
            records.push(record);
        }
        Ok(records)
    }

    fn save_manifest(&mut self) -> Result<(), SessionError> {
        self.manifest.updated_at = now();
        let mut json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        json.push('\n');
        write_atomic(&self.dir, MANIFEST_FILE, json.as_bytes())
    }

    fn set_status(&mut self, stage: Stage, status: PhaseStatus) -> Result<(), SessionError> {
        self.manifest.phase_status.insert(stage, status);
        self.save_manifest()
    }

    /// Marks `stage` running. Every earlier phase must be done.
    pub fn begin_phase(&mut self, stage: Stage) -> Result<(), SessionError> {
        if let Some(&blocker) = Stage::ALL
            .iter()
            .take_while(|&&s| s != stage)
            .find(|&&s| self.manifest.status(s) != PhaseStatus::Done)
        {
            return Err(SessionError::PhaseOrder {
                phase: stage,
                reason: format!("{blocker} is {:?}", self.manifest.status(blocker)).to_lowercase(),
            });
        }
        self.set_status(stage, PhaseStatus::Running)
    }

    pub fn finish_phase(&mut self, stage: Stage) -> Result<(), SessionError> {
        self.set_status(stage, PhaseStatus::Done)
    }

    pub fn abort_phase(&mut self, stage: Stage) -> Result<(), SessionError> {
        self.set_status(stage, PhaseStatus::Aborted)
    }

    fn write_story(&self, story: &ExportedStory) -> Result<(), SessionError> {
        let text = format!("{}\n", story.text);
        write_atomic(
            &self.dir,
            &self.manifest.artifact_paths.story,
            text.as_bytes(),
        )?;
        write_atomic(
            &self.dir,
            &self.manifest.artifact_paths.attribution,
            story.attribution_jsonl().as_bytes(),
        )
    }
}

impl RecordSink for Session {
    fn append(&mut self, record: &Record) -> Result<(), StorageError> {
        let status = self.manifest.status(record.phase);
        if status != PhaseStatus::Running {
            return Err(StorageError::State {
                phase: record.phase,
                reason: format!("phase is {status:?}").to_lowercase(),
            });
        }
        if self.fail_after.is_some_and(|n| self.records_on_disk >= n) {
            return Err(StorageError::Injected(self.records_on_disk));
        }
        if self.transcript.is_none() {
            let file = OpenOptions::new()
                .append(true)
                .open(self.transcript_path())?;
            self.transcript = Some(file);
        }
        let file = self.transcript.as_mut().expect("transcript opened");
        file.write_all(record.to_json_line().as_bytes())?;
        file.sync_data()?;
        self.records_on_disk += 1;
        Ok(())
    }
}

/// Everything a completed run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub session_id: String,
    pub dir: PathBuf,
    pub proposals: Proposals,
    pub outcome: ConsensusOutcome,
    pub draft: StoryDraft,
    pub story: ExportedStory,
}

/// Phase transitions reported while a session runs.
pub type Progress<'a> = &'a mut dyn FnMut(Stage, PhaseStatus);

/// Runs every phase that is not done yet. Records already in the transcript
/// are replayed instead of requested again. On failure the current phase is
/// marked aborted and the session can be resumed.
pub fn run_session(
    session: Session,
    provider: &dyn ChatProvider,
    progress: Progress<'_>,
) -> Result<RunOutput, SessionError> {
    let records = session.records()?;
    let config = session.config.clone();
    let mut journal = Journal::with_replay(session, records);

    let proposals = phase(&mut journal, Stage::Ideation, progress, |j| {
        Ok(run_ideation(&config, provider, j)?)
    })?;
    let outcome = phase(&mut journal, Stage::Consensus, progress, |j| {
        Ok(run_consensus(&config, &proposals, provider, j)?)
    })?;
    let story = phase(&mut journal, Stage::Writing, progress, |j| {
        let draft = run_writing(&config, &outcome, provider, j)?;
        let story = export_story(&draft);
        j.sink().write_story(&story)?;
        Ok((draft, story))
    })?;

    let session = journal.into_sink();
    let (draft, story) = story;
    Ok(RunOutput {
        session_id: session.id().to_string(),
        dir: session.dir.clone(),
        proposals,
        outcome,
        draft,
        story,
    })
}

/// Phase bodies may fail with either kind of error.
enum PhaseFailure {
    Run(RunError),
    Session(SessionError),
}

impl From<RunError> for PhaseFailure {
    fn from(e: RunError) -> Self {
        PhaseFailure::Run(e)
    }
}

impl From<SessionError> for PhaseFailure {
    fn from(e: SessionError) -> Self {
        PhaseFailure::Session(e)
    }
}

fn phase<T>(
    journal: &mut Journal<Session>,
    stage: Stage,
    progress: Progress<'_>,
    body: impl FnOnce(&mut Journal<Session>) -> Result<T, PhaseFailure>,
) -> Result<T, SessionError> {
    let done = journal.sink().manifest.status(stage) == PhaseStatus::Done;
    if !done {
        journal.sink_mut().begin_phase(stage)?;
        progress(stage, PhaseStatus::Running);
    }
    match body(journal) {
        Ok(value) => {
            if !done {
                journal.sink_mut().finish_phase(stage)?;
                progress(stage, PhaseStatus::Done);
            }
            Ok(value)
        }
        Err(failure) => {
            if !done {
                // Best effort: a failing disk may refuse this too.
                let _ = journal.sink_mut().abort_phase(stage);
                progress(stage, PhaseStatus::Aborted);
            }
            Err(match failure {
                PhaseFailure::Run(e) => e.into(),
                PhaseFailure::Session(e) => e,
            })
        }
    }
}

/// Opens a new session for `config` under `root` and runs it.
pub fn run(
    root: &Path,
    config: &RoomConfig,
    provider: &dyn ChatProvider,
    progress: Progress<'_>,
) -> Result<RunOutput, SessionError> {
    run_session(open_session(root, config)?, provider, progress)
}

/// Continues session `id`. When `config` is given it must match the one
/// the session was created with.
pub fn resume(
    root: &Path,
    id: &str,
    config: Option<&RoomConfig>,
    provider: &dyn ChatProvider,
    progress: Progress<'_>,
) -> Result<RunOutput, SessionError> {
    let session = load_session(root, id)?;
    if let Some(config) = config {
        let supplied = config_digest(config);
        if supplied != session.manifest.config_digest {
            return Err(SessionError::DigestMismatch {
                stored: session.manifest.config_digest.clone(),
                supplied,
            });
        }
    }
    if session.manifest.is_complete() {
        return Err(SessionError::AlreadyComplete(session.id().to_string()));
    }
    run_session(session, provider, progress)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::{RecordKey, RecordKind};

    fn key(writer: &str) -> RecordKey {
        RecordKey::new(Stage::Ideation, 1, writer, RecordKind::Proposal)
    }

    #[test]
    fn open_writes_pending_manifest() {
        let root = tempfile::tempdir().unwrap();
        let session = open_session(root.path(), &RoomConfig::reference()).unwrap();
        let m = session.manifest();
        assert_eq!(m.phase_status.len(), 3);
        assert!(m.phase_status.values().all(|&s| s == PhaseStatus::Pending));
        assert_eq!(m.digest_algorithm, "sha256");
        assert!(session.dir().join(MANIFEST_FILE).exists());
        let reloaded = load_session(root.path(), session.id()).unwrap();
        assert_eq!(reloaded.manifest(), m);
    }

    #[test]
    fn invalid_config_is_rejected_with_diagnostics() {
        let mut config = RoomConfig::reference();
        config.writers.truncate(1);
        let root = tempfile::tempdir().unwrap();
        match open_session(root.path(), &config) {
            Err(SessionError::Invalid(report)) => {
                assert!(report.diagnostics.iter().any(|d| d.path == "writers"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reopening_collides() {
        let root = tempfile::tempdir().unwrap();
        open_session(root.path(), &RoomConfig::reference()).unwrap();
        assert!(matches!(
            open_session(root.path(), &RoomConfig::reference()),
            Err(SessionError::Collision { .. })
        ));
    }

    #[test]
    fn digest_ignores_nothing_and_is_stable() {
        let a = RoomConfig::reference();
        let mut b = a.clone();
        assert_eq!(config_digest(&a), config_digest(&b));
        b.writers[2].binding.temperature = 0.8;
        assert_ne!(config_digest(&a), config_digest(&b));
        assert_eq!(config_digest(&a).len(), 64);
    }

    #[test]
    fn appends_read_back_in_order() {
        let root = tempfile::tempdir().unwrap();
        let mut session = open_session(root.path(), &RoomConfig::reference()).unwrap();
        session.begin_phase(Stage::Ideation).unwrap();
        let mut journal = Journal::new(session);
        let a = journal.append(Record::new(key("JW"), "first")).unwrap();
        let b = journal
            .append(Record::new(key("MM"), "second\nline"))
            .unwrap();
        let session = journal.into_sink();
        assert_eq!(session.records().unwrap(), vec![a, b]);
    }

    #[test]
    fn append_outside_running_phase_is_state_error() {
        let root = tempfile::tempdir().unwrap();
        let mut session = open_session(root.path(), &RoomConfig::reference()).unwrap();
        let record = Record::new(key("JW"), "x");
        assert!(matches!(
            session.append(&record),
            Err(StorageError::State { .. })
        ));
        session.begin_phase(Stage::Ideation).unwrap();
        session.append(&record).unwrap();
        session.finish_phase(Stage::Ideation).unwrap();
        assert!(matches!(
            session.append(&record),
            Err(StorageError::State { .. })
        ));
    }

    #[test]
    fn phase_order_is_enforced() {
        let root = tempfile::tempdir().unwrap();
        let mut session = open_session(root.path(), &RoomConfig::reference()).unwrap();
        assert!(matches!(
            session.begin_phase(Stage::Writing),
            Err(SessionError::PhaseOrder { .. })
        ));
        session.begin_phase(Stage::Ideation).unwrap();
        session.finish_phase(Stage::Ideation).unwrap();
        session.begin_phase(Stage::Consensus).unwrap();
        assert!(session.begin_phase(Stage::Writing).is_err());
    }

    #[test]
    fn torn_last_line_is_dropped_on_load() {
        let root = tempfile::tempdir().unwrap();
        let mut session = open_session(root.path(), &RoomConfig::reference()).unwrap();
        session.begin_phase(Stage::Ideation).unwrap();
        session.append(&Record::new(key("JW"), "whole")).unwrap();
        let path = session.transcript_path();
        let mut file = OpenOptions::new().append(true).open(&path).unwrap();
        file.write_all(b"{\"seq\":1,\"pha").unwrap();
        let reloaded = load_session(root.path(), session.id()).unwrap();
        assert_eq!(reloaded.records().unwrap().len(), 1);
        assert!(fs::read_to_string(&path).unwrap().ends_with("}\n"));
    }

    #[test]
    fn injected_failure_stops_at_boundary() {
        let root = tempfile::tempdir().unwrap();
        let mut session = open_session(root.path(), &RoomConfig::reference()).unwrap();
        session.begin_phase(Stage::Ideation).unwrap();
        session.fail_appends_after(1);
        session.append(&Record::new(key("JW"), "a")).unwrap();
        assert!(matches!(
            session.append(&Record::new(key("MM"), "b")),
            Err(StorageError::Injected(1))
        ));
        assert_eq!(session.records().unwrap().len(), 1);
    }

    #[test]
    fn edited_stored_config_is_detected() {
        let root = tempfile::tempdir().unwrap();
        let session = open_session(root.path(), &RoomConfig::reference()).unwrap();
        let mut edited = RoomConfig::reference();
        edited.topic_brief.push_str(" Extra.");
        fs::write(session.dir().join(CONFIG_FILE), edited.to_json_pretty()).unwrap();
        assert!(matches!(
            load_session(root.path(), session.id()),
            Err(SessionError::DigestMismatch { .. })
        ));
    }
}
