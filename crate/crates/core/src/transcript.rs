//! Transcript records and the replaying journal.
//!
//! Every phase writes its progress as [`Record`]s through a [`Journal`].
//! A journal built with previously persisted records hands those back in
//! order instead of calling the provider again, so a resumed run follows
//! exactly the same control flow as an uninterrupted one and appends the
//! same records from the point where the earlier run stopped.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::{PromptBundle, PromptError};
use crate::provider::{ChatProvider, ChatTurnRequest, ProviderError, RequestTag};
use crate::room::WriterProfile;

/// The three run phases, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ideation,
    Consensus,
    Writing,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Ideation, Stage::Consensus, Stage::Writing];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ideation => "ideation",
            Stage::Consensus => "consensus",
            Stage::Writing => "writing",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Proposal,
    Turn,
    Decision,
    Summary,
    ContributionRaw,
    ContributionAccepted,
}

/// One line of the transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u64,
    pub phase: Stage,
    pub round: u32,
    pub writer: String,
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yielded: Option<bool>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

impl Record {
    pub fn new(key: RecordKey, text: impl Into<String>) -> Self {
        Self {
            seq: 0,
            phase: key.phase,
            round: key.round,
            writer: key.writer,
            kind: key.kind,
            index: key.index,
            attempt: key.attempt,
            yielded: None,
            text: text.into(),
            flags: Vec::new(),
        }
    }

    pub fn with_flags<I, S>(mut self, flags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.flags = flags.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_yielded(mut self, yielded: bool) -> Self {
        self.yielded = Some(yielded);
        self
    }

    pub fn key(&self) -> RecordKey {
        RecordKey {
            phase: self.phase,
            round: self.round,
            writer: self.writer.clone(),
            kind: self.kind,
            index: self.index,
            attempt: self.attempt,
        }
    }

    pub fn to_json_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("record serializes");
        line.push('\n');
        line
    }

    pub fn from_json_line(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }
}

/// The identifying fields of a record, used to match replayed records.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RecordKey {
    pub phase: Stage,
    pub round: u32,
    pub writer: String,
    pub kind: RecordKind,
    pub index: Option<usize>,
    pub attempt: u32,
}

impl RecordKey {
    pub fn new(phase: Stage, round: u32, writer: impl Into<String>, kind: RecordKind) -> Self {
        Self {
            phase,
            round,
            writer: writer.into(),
            kind,
            index: None,
            attempt: 0,
        }
    }

    pub fn at_index(mut self, index: usize) -> Self {
        self.index = Some(index);
        self
    }

    pub fn at_attempt(mut self, attempt: u32) -> Self {
        self.attempt = attempt;
        self
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{:?}",
            self.phase, self.round, self.writer, self.kind
        )?;
        if let Some(i) = self.index {
            write!(f, "#{i}")?;
        }
        if self.attempt > 0 {
            write!(f, "~{}", self.attempt)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("transcript I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("injected storage failure after {0} appended record(s)")]
    Injected(usize),
    #[error("cannot append a {phase} record: {reason}")]
    State { phase: Stage, reason: String },
}

/// Destination for newly produced records.
pub trait RecordSink {
    fn append(&mut self, record: &Record) -> Result<(), StorageError>;
}

/// Keeps records in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub records: Vec<Record>,
}

impl RecordSink for MemorySink {
    fn append(&mut self, record: &Record) -> Result<(), StorageError> {
        self.records.push(record.clone());
        Ok(())
    }
}

/// Errors that abort a phase. All of them leave the transcript consistent
/// up to the last appended record.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("provider call {tag} failed: {source}")]
    Provider { tag: String, source: ProviderError },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("transcript does not match this room: expected {expected}, found {found}")]
    Divergence { expected: String, found: String },
    #[error("contribution {index} by {writer} produced no usable sentence")]
    EmptyContribution { index: usize, writer: String },
}

impl RunError {
    pub fn is_provider(&self) -> bool {
        matches!(self, RunError::Provider { .. })
    }
}

/// Sends `bundle` to `writer`'s binding and returns the response text.
pub(crate) fn ask(
    provider: &dyn ChatProvider,
    writer: &WriterProfile,
    bundle: &PromptBundle,
    tag: RequestTag,
) -> Result<String, RunError> {
    let wrap = |tag: &RequestTag, source| RunError::Provider {
        tag: tag.to_string(),
        source,
    };
    let request = ChatTurnRequest::new(writer.binding.clone(), bundle.messages(), tag.clone())
        .map_err(|e| wrap(&tag, e))?;
    provider
        .complete(&request)
        .map(|c| c.text)
        .map_err(|e| wrap(&tag, e))
}

/// Ordered record log with optional replay of an earlier run's records.
#[derive(Debug)]
pub struct Journal<S> {
    sink: S,
    replay: VecDeque<Record>,
    log: Vec<Record>,
}

impl<S: RecordSink> Journal<S> {
    pub fn new(sink: S) -> Self {
        Self::with_replay(sink, Vec::new())
    }

    pub fn with_replay(sink: S, records: Vec<Record>) -> Self {
        Self {
            sink,
            replay: records.into(),
            log: Vec::new(),
        }
    }

    /// Takes the next replayed record if it has `key`. Returns `None` once
    /// replay is exhausted, and an error when the stored transcript holds a
    /// different record at this point.
    pub fn replayed(&mut self, key: &RecordKey) -> Result<Option<Record>, RunError> {
        match self.replay.front() {
            None => Ok(None),
            Some(next) if &next.key() == key => {
                let record = self.replay.pop_front().expect("front exists");
                self.log.push(record.clone());
                Ok(Some(record))
            }
            Some(next) => Err(RunError::Divergence {
                expected: key.to_string(),
                found: next.key().to_string(),
            }),
        }
    }

    /// True when the next replayed record has `key`, without consuming it.
    pub fn replay_has(&self, key: &RecordKey) -> bool {
        self.replay.front().is_some_and(|r| &r.key() == key)
    }

    pub fn is_replaying(&self) -> bool {
        !self.replay.is_empty()
    }

    /// Assigns the next sequence number and appends to the sink.
    pub fn append(&mut self, mut record: Record) -> Result<Record, StorageError> {
        record.seq = self.log.len() as u64;
        self.sink.append(&record)?;
        self.log.push(record.clone());
        Ok(record)
    }

    pub fn log(&self) -> &[Record] {
        &self.log
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn sink_mut(&mut self) -> &mut S {
        &mut self.sink
    }

    pub fn into_sink(self) -> S {
        self.sink
    }
}
