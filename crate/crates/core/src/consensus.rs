//! Consensus: round-robin deliberation until every writer yields, a shared
//! decisions synthesis, then one private summary per writer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ideation::Proposals;
use crate::prompts::{render_phase, PhaseContext, PromptBundle, PromptError};
use crate::provider::{ChatProvider, RequestTag, Step};
use crate::room::{NarrativeProposal, RoomConfig, WriterProfile};
use crate::transcript::{ask, Journal, Record, RecordKey, RecordKind, RecordSink, RunError, Stage};

/// Marker a writer ends a message with to signal satisfaction.
pub const YIELD_MARKER: &str = "YIELD";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliberationTurn {
    pub round: u32,
    pub writer: String,
    pub text: String,
    pub yielded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConsensusOutcome {
    pub transcript: Vec<DeliberationTurn>,
    pub decisions: String,
    pub summaries: BTreeMap<String, String>,
    /// The round cap ended the discussion before everyone yielded.
    pub capped: bool,
    /// Writers force-marked as yielded when the cap was hit.
    pub forced: Vec<String>,
}

impl ConsensusOutcome {
    pub fn rounds(&self) -> u32 {
        self.transcript.last().map_or(0, |t| t.round)
    }

    pub fn summary(&self, writer: &str) -> Option<&str> {
        self.summaries.get(writer).map(String::as_str)
    }
}

/// True when the last whitespace-separated word of the trimmed text is
/// exactly `YIELD` (case-sensitive). This covers both a final line that is
/// the bare marker and a final line ending in it.
pub fn detect_yield(text: &str) -> bool {
    text.split_whitespace().next_back() == Some(YIELD_MARKER)
}

/// Result of the round-robin discussion alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deliberation {
    pub transcript: Vec<DeliberationTurn>,
    pub capped: bool,
    pub forced: Vec<String>,
}

/// Runs discussion rounds in canonical order. A writer who yields is skipped
/// in every later round. Ends once all writers have yielded, or after
/// `consensus_max_rounds` rounds with the stragglers force-marked.
pub fn deliberate<S: RecordSink>(
    room: &RoomConfig,
    proposals: &[NarrativeProposal],
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<Deliberation, RunError> {
    let mut yielded = vec![false; room.writers.len()];
    let mut transcript: Vec<DeliberationTurn> = Vec::new();

    for round in 1..=room.consensus_max_rounds {
        for (i, writer) in room.writers.iter().enumerate() {
            if yielded[i] {
                continue;
            }
            let key = RecordKey::new(Stage::Consensus, round, &writer.name, RecordKind::Turn);
            let text = match journal.replayed(&key)? {
                Some(record) => record.text,
                None => {
                    let bundle = render_phase(
                        room,
                        writer,
                        PhaseContext::Deliberation {
                            proposals,
                            transcript: &transcript,
                            round,
                        },
                    )?;
                    let text = ask(
                        provider,
                        writer,
                        &bundle,
                        RequestTag::new(Step::Consensus, round, &writer.name),
                    )?;
                    let did_yield = detect_yield(&text);
                    journal
                        .append(Record::new(key, text).with_yielded(did_yield))?
                        .text
                }
            };
            let did_yield = detect_yield(&text);
            yielded[i] = did_yield;
            transcript.push(DeliberationTurn {
                round,
                writer: writer.name.clone(),
                text,
                yielded: did_yield,
            });
        }
        if yielded.iter().all(|&y| y) {
            break;
        }
    }

    let forced: Vec<String> = room
        .writers
        .iter()
        .zip(&yielded)
        .filter(|(_, &y)| !y)
        .map(|(w, _)| w.name.clone())
        .collect();
    Ok(Deliberation {
        transcript,
        capped: !forced.is_empty(),
        forced,
    })
}

fn recorded_or_asked<S: RecordSink>(
    journal: &mut Journal<S>,
    key: RecordKey,
    flags: &[&str],
    provider: &dyn ChatProvider,
    writer: &WriterProfile,
    tag: RequestTag,
    render: impl FnOnce() -> Result<PromptBundle, PromptError>,
) -> Result<String, RunError> {
    if let Some(record) = journal.replayed(&key)? {
        return Ok(record.text);
    }
    let text = ask(provider, writer, &render()?, tag)?;
    Ok(journal
        .append(Record::new(key, text).with_flags(flags.iter().copied()))?
        .text)
}

/// Asks the first writer in canonical order to state the group's decisions.
pub fn synthesize_decisions<S: RecordSink>(
    room: &RoomConfig,
    proposals: &[NarrativeProposal],
    deliberation: &Deliberation,
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<String, RunError> {
    let writer = &room.writers[0];
    let flags: &[&str] = if deliberation.capped {
        &["capped"]
    } else {
        &[]
    };
    recorded_or_asked(
        journal,
        RecordKey::new(Stage::Consensus, 1, &writer.name, RecordKind::Decision),
        flags,
        provider,
        writer,
        RequestTag::new(Step::Decisions, 1, &writer.name),
        || {
            render_phase(
                room,
                writer,
                PhaseContext::Decisions {
                    proposals,
                    transcript: &deliberation.transcript,
                },
            )
        },
    )
}

/// Asks `writer` for a private summary of the finished discussion.
pub fn summarize<S: RecordSink>(
    room: &RoomConfig,
    writer: &WriterProfile,
    transcript: &[DeliberationTurn],
    decisions: &str,
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<String, RunError> {
    recorded_or_asked(
        journal,
        RecordKey::new(Stage::Consensus, 1, &writer.name, RecordKind::Summary),
        &[],
        provider,
        writer,
        RequestTag::new(Step::Summary, 1, &writer.name),
        || {
            render_phase(
                room,
                writer,
                PhaseContext::Summary {
                    transcript,
                    decisions,
                },
            )
        },
    )
}

pub fn run_consensus<S: RecordSink>(
    room: &RoomConfig,
    proposals: &Proposals,
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<ConsensusOutcome, RunError> {
    let proposals: Vec<NarrativeProposal> = proposals.values().cloned().collect();
    let deliberation = deliberate(room, &proposals, provider, journal)?;
    let decisions = synthesize_decisions(room, &proposals, &deliberation, provider, journal)?;
    let mut summaries = BTreeMap::new();
    for writer in &room.writers {
        let summary = summarize(
            room,
            writer,
            &deliberation.transcript,
            &decisions,
            provider,
            journal,
        )?;
        summaries.insert(writer.name.clone(), summary);
    }
    Ok(ConsensusOutcome {
        transcript: deliberation.transcript,
        decisions,
        summaries,
        capped: deliberation.capped,
        forced: deliberation.forced,
    })
}
