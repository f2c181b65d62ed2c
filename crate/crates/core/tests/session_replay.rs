use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use writers_room::demo;
use writers_room::session::{
    load_session, open_session, resume, run_session, PhaseStatus, RunOutput, SessionError,
    MANIFEST_FILE, TRANSCRIPT_FILE,
};
use writers_room::transcript::{RunError, Stage, StorageError};

fn fresh(root: &Path) -> RunOutput {
    let session = open_session(root, &demo::room()).unwrap();
    run_session(session, &demo::provider(), &mut |_, _| {}).unwrap()
}

/// Runs the demo with appends failing after `k` records; returns the
/// session id and directory.
fn crash_at(root: &Path, k: usize) -> (String, PathBuf) {
    let mut session = open_session(root, &demo::room()).unwrap();
    let id = session.id().to_string();
    let dir = session.dir().to_path_buf();
    session.fail_appends_after(k);
    let err = run_session(session, &demo::provider(), &mut |_, _| {}).unwrap_err();
    assert!(
        matches!(err, SessionError::Run(RunError::Storage(StorageError::Injected(n))) if n == k),
        "{err:?}"
    );
    (id, dir)
}

#[test]
fn abort_after_first_consensus_round_resumes_identically() {
    let reference = tempfile::tempdir().unwrap();
    let expected = fresh(reference.path());
    let expected_bytes = fs::read(expected.dir.join(TRANSCRIPT_FILE)).unwrap();

    let root = tempfile::tempdir().unwrap();
    let writers = demo::room().writers.len();
    let (id, dir) = crash_at(root.path(), writers + writers);
    let session = load_session(root.path(), &id).unwrap();
    assert_eq!(
        session.manifest().status(Stage::Ideation),
        PhaseStatus::Done
    );
    assert_eq!(
        session.manifest().status(Stage::Consensus),
        PhaseStatus::Aborted
    );
    assert_eq!(session.records().unwrap().len(), 8);

    let mut phases = Vec::new();
    let resumed = resume(
        root.path(),
        &id,
        Some(&demo::room()),
        &demo::provider(),
        &mut |s, st| phases.push((s, st)),
    )
    .unwrap();
    assert_eq!(fs::read(dir.join(TRANSCRIPT_FILE)).unwrap(), expected_bytes);
    assert_eq!(resumed.outcome, expected.outcome);
    assert_eq!(resumed.draft, expected.draft);
    assert_eq!(
        phases.first(),
        Some(&(Stage::Consensus, PhaseStatus::Running))
    );
}

#[test]
fn resume_of_complete_session_reports_complete() {
    let root = tempfile::tempdir().unwrap();
    let output = fresh(root.path());
    let err = resume(
        root.path(),
        &output.session_id,
        None,
        &demo::provider(),
        &mut |_, _| {},
    )
    .unwrap_err();
    assert!(matches!(err, SessionError::AlreadyComplete(_)));
}

#[test]
fn resume_with_edited_config_is_digest_mismatch() {
    let root = tempfile::tempdir().unwrap();
    let (id, _) = crash_at(root.path(), 3);
    let mut edited = demo::room();
    edited.writers[1].binding.temperature = 0.5;
    let err = resume(
        root.path(),
        &id,
        Some(&edited),
        &demo::provider(),
        &mut |_, _| {},
    )
    .unwrap_err();
    assert!(
        matches!(err, SessionError::DigestMismatch { .. }),
        "{err:?}"
    );
}

#[test]
fn phase_left_running_by_a_hard_crash_is_resumed() {
    let root = tempfile::tempdir().unwrap();
    let (id, dir) = crash_at(root.path(), 20);
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).unwrap();
    fs::write(&manifest_path, text.replace("\"aborted\"", "\"running\"")).unwrap();
    let output = resume(root.path(), &id, None, &demo::provider(), &mut |_, _| {}).unwrap();
    assert_eq!(output.draft.len(), demo::DEMO_SENTENCE_BUDGET);
}

#[test]
fn replayed_records_are_not_requested_again() {
    let root = tempfile::tempdir().unwrap();
    let (id, dir) = crash_at(root.path(), 30);
    // KV's first writing turn is already on disk, so the changed reply is
    // never asked for.
    let mut script = demo::script();
    script.entries.insert(
        "writing/1/KV".into(),
        "Different words. Extra sentence.".into(),
    );
    let provider = writers_room::provider::ScriptedProvider::new(script);
    resume(root.path(), &id, None, &provider, &mut |_, _| {}).unwrap();
    let transcript = fs::read_to_string(dir.join(TRANSCRIPT_FILE)).unwrap();
    assert!(
        !transcript.contains("Different words"),
        "replayed records are never re-requested"
    );
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn any_abort_boundary_resumes_to_the_same_bytes(k in 0usize..56) {
        let reference = tempfile::tempdir().unwrap();
        let expected = fresh(reference.path());
        let full = fs::read(expected.dir.join(TRANSCRIPT_FILE)).unwrap();

        let root = tempfile::tempdir().unwrap();
        let (id, dir) = crash_at(root.path(), k);
        let partial = fs::read(dir.join(TRANSCRIPT_FILE)).unwrap();
        prop_assert!(full.starts_with(&partial), "transcript before abort is a prefix");

        let resumed = resume(root.path(), &id, None, &demo::provider(), &mut |_, _| {}).unwrap();
        prop_assert_eq!(fs::read(dir.join(TRANSCRIPT_FILE)).unwrap(), full);
        prop_assert_eq!(resumed.story, expected.story);
        prop_assert_eq!(resumed.proposals, expected.proposals);
    }
}
