//! Writing: writers take strict round-robin turns adding one sentence each.
//!
//! Every response is cut to its first sentence and checked mechanically.
//! Duplicated material, self-mentions and empty replies block the turn and
//! trigger up to `repair_attempts` re-prompts; when every attempt still
//! breaks a rule the least-violating candidate is accepted and flagged.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::ConsensusOutcome;
use crate::prompts::{render_phase, PhaseContext, RepairNote};
use crate::provider::{ChatProvider, RequestTag, Step};
use crate::room::RoomConfig;
use crate::text::{
    contains_word, ends_with_terminator, has_quoted_span, normalize_whitespace, split_sentences,
    word_count, NgramIndex,
};
use crate::transcript::{ask, Journal, Record, RecordKey, RecordKind, RecordSink, RunError, Stage};

/// Final word a writer may add to vote for ending the story early.
pub const END_MARKER: &str = "END";

const END_VOTE_FLAG: &str = "end_marker";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionFlag {
    Truncated,
    DuplicationRetryExhausted,
    SelfMention,
}

impl ContributionFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ContributionFlag::Truncated => "truncated",
            ContributionFlag::DuplicationRetryExhausted => "duplication_retry_exhausted",
            ContributionFlag::SelfMention => "self_mention",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            ContributionFlag::Truncated,
            ContributionFlag::DuplicationRetryExhausted,
            ContributionFlag::SelfMention,
        ]
        .into_iter()
        .find(|f| f.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub index: usize,
    pub writer: String,
    pub sentence: String,
    pub flags: BTreeSet<ContributionFlag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StoryDraft {
    pub contributions: Vec<Contribution>,
    /// Canonical writer order.
    pub writers: Vec<String>,
}

impl StoryDraft {
    pub fn new(room: &RoomConfig) -> Self {
        Self {
            contributions: Vec::new(),
            writers: room.writer_names(),
        }
    }

    /// Whose turn it is next.
    pub fn next_writer(&self) -> &str {
        &self.writers[self.contributions.len() % self.writers.len()]
    }

    pub fn len(&self) -> usize {
        self.contributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contributions.is_empty()
    }

    pub fn sentences(&self) -> Vec<String> {
        self.contributions
            .iter()
            .map(|c| c.sentence.clone())
            .collect()
    }

    pub fn is_flag_free(&self) -> bool {
        self.contributions.iter().all(|c| c.flags.is_empty())
    }

    fn previous_by(&self, writer: &str) -> Option<&str> {
        self.contributions
            .iter()
            .rev()
            .find(|c| c.writer == writer)
            .map(|c| c.sentence.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// More than one sentence; the extra text is dropped.
    MultiSentence,
    /// Repeats a clause-bounded n-gram already in the story.
    Duplication,
    /// Names the writer as a standalone word.
    SelfMention,
    /// Same opening word and a length within 10% of the writer's previous
    /// sentence. Informational.
    Monotony,
}

impl Violation {
    pub fn is_blocking(self) -> bool {
        matches!(self, Violation::Duplication | Violation::SelfMention)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Violation::MultiSentence => "multi_sentence",
            Violation::Duplication => "duplication",
            Violation::SelfMention => "self_mention",
            Violation::Monotony => "monotony",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("response contains no sentence")]
pub struct EmptyContribution;

/// The first sentence of a response and the rules it breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checked {
    pub sentence: String,
    pub violations: Vec<Violation>,
}

impl Checked {
    pub fn has(&self, v: Violation) -> bool {
        self.violations.contains(&v)
    }

    fn blocking(&self) -> usize {
        self.violations.iter().filter(|v| v.is_blocking()).count()
    }
}

fn opening_word(sentence: &str) -> String {
    sentence
        .split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .find(|w| !w.is_empty())
        .unwrap_or_default()
}

/// Checks `raw` as the next contribution to `draft`, written by
/// `draft.next_writer()`.
pub fn validate_contribution(
    raw: &str,
    draft: &StoryDraft,
    room: &RoomConfig,
) -> Result<Checked, EmptyContribution> {
    let sentences = split_sentences(raw);
    let first = sentences.first().ok_or(EmptyContribution)?;
    if !first.chars().any(char::is_alphanumeric) {
        return Err(EmptyContribution);
    }
    let mut sentence = normalize_whitespace(first);
    if !ends_with_terminator(&sentence) {
        sentence.push('.');
    }

    let writer = draft.next_writer();
    let mut violations = Vec::new();
    if sentences.len() > 1 {
        violations.push(Violation::MultiSentence);
    }
    let mut index = NgramIndex::new(room.duplication_ngram);
    for c in &draft.contributions {
        index.insert_text(&c.sentence);
    }
    if index.first_overlap(&sentence).is_some() {
        violations.push(Violation::Duplication);
    }
    if contains_word(&sentence, writer) {
        violations.push(Violation::SelfMention);
    }
    if let Some(previous) = draft.previous_by(writer) {
        let (now, before) = (word_count(&sentence) as f64, word_count(previous) as f64);
        if (now - before).abs() <= 0.1 * before && opening_word(&sentence) == opening_word(previous)
        {
            violations.push(Violation::Monotony);
        }
    }
    Ok(Checked {
        sentence,
        violations,
    })
}

/// Splits a trailing `END` vote off a response.
fn split_end_vote(raw: &str) -> (&str, bool) {
    let trimmed = raw.trim_end();
    match trimmed.strip_suffix(END_MARKER) {
        Some(rest) if rest.is_empty() || rest.ends_with(char::is_whitespace) => (rest, true),
        _ => (raw, false),
    }
}

/// One response to a writing prompt.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub attempt: u32,
    pub raw: String,
    pub checked: Result<Checked, EmptyContribution>,
    pub end_vote: bool,
}

impl Candidate {
    fn evaluate(attempt: u32, raw: String, draft: &StoryDraft, room: &RoomConfig) -> Self {
        let (body, end_vote) = if room.end_marker_early_stop {
            split_end_vote(&raw)
        } else {
            (raw.as_str(), false)
        };
        let checked = validate_contribution(body, draft, room);
        Self {
            attempt,
            checked,
            end_vote,
            raw,
        }
    }

    /// Number of blocking problems; an empty reply counts as the worst.
    fn blocking(&self) -> usize {
        self.checked.as_ref().map_or(usize::MAX, Checked::blocking)
    }

    fn record_flags(&self) -> Vec<String> {
        let mut flags: Vec<String> = match &self.checked {
            Ok(c) => c
                .violations
                .iter()
                .map(|v| v.as_str().to_string())
                .collect(),
            Err(_) => vec!["empty".into()],
        };
        if self.end_vote {
            flags.push(END_VOTE_FLAG.into());
        }
        flags
    }

    fn problems(&self, room: &RoomConfig, writer: &str) -> Vec<String> {
        match &self.checked {
            Err(_) => vec!["your reply did not contain a complete sentence".into()],
            Ok(c) => c
                .violations
                .iter()
                .filter(|v| v.is_blocking())
                .map(|v| match v {
                    Violation::Duplication => format!(
                        "it repeats a run of {} or more words that already appears in the story",
                        room.duplication_ngram
                    ),
                    _ => format!(
                        "it mentions {writer}, and you must not include yourself in the story"
                    ),
                })
                .collect(),
        }
    }
}

/// Everything a writing turn needs besides the provider and journal.
#[derive(Debug, Clone, Copy)]
pub struct Turn<'a> {
    pub room: &'a RoomConfig,
    pub outcome: &'a ConsensusOutcome,
    pub draft: &'a StoryDraft,
    pub index: usize,
}

impl Turn<'_> {
    fn writer(&self) -> &str {
        self.draft.next_writer()
    }

    fn round(&self) -> u32 {
        (self.index / self.draft.writers.len()) as u32 + 1
    }

    fn raw_key(&self, attempt: u32) -> RecordKey {
        RecordKey::new(
            Stage::Writing,
            self.round(),
            self.writer(),
            RecordKind::ContributionRaw,
        )
        .at_index(self.index)
        .at_attempt(attempt)
    }

    /// Replays or requests attempt number `attempt`, repairing `previous`
    /// when given.
    fn candidate<S: RecordSink>(
        &self,
        attempt: u32,
        previous: Option<&Candidate>,
        provider: &dyn ChatProvider,
        journal: &mut Journal<S>,
    ) -> Result<Candidate, RunError> {
        let key = self.raw_key(attempt);
        if let Some(record) = journal.replayed(&key)? {
            return Ok(Candidate::evaluate(
                attempt,
                record.text,
                self.draft,
                self.room,
            ));
        }
        let writer = self
            .room
            .writer(self.writer())
            .expect("draft writers come from the room");
        let story = self.draft.sentences();
        let problems = previous.map(|p| p.problems(self.room, self.writer()));
        let repair = previous
            .zip(problems.as_deref())
            .map(|(p, problems)| RepairNote {
                previous: &p.raw,
                problems,
            });
        let bundle = render_phase(
            self.room,
            writer,
            PhaseContext::Writing {
                decisions: &self.outcome.decisions,
                own_summary: self.outcome.summary(self.writer()).unwrap_or_default(),
                story: &story,
                repair,
            },
        )?;
        let tag = RequestTag::new(Step::Writing, self.round(), self.writer()).with_attempt(attempt);
        let raw = ask(provider, writer, &bundle, tag)?;
        let candidate = Candidate::evaluate(attempt, raw, self.draft, self.room);
        journal
            .append(Record::new(key, candidate.raw.clone()).with_flags(candidate.record_flags()))?;
        Ok(candidate)
    }
}

/// Re-prompts the writer after a blocking violation until a clean sentence
/// arrives or `repair_attempts` is spent, then picks the candidate with the
/// fewest blocking violations (earliest on ties).
pub fn repair<S: RecordSink>(
    turn: &Turn<'_>,
    first: Candidate,
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<Candidate, RunError> {
    let mut candidates = vec![first];
    for attempt in 1..=turn.room.repair_attempts {
        let last = candidates.last().expect("at least one candidate");
        if last.blocking() == 0 {
            break;
        }
        let next = turn.candidate(attempt, Some(last), provider, journal)?;
        candidates.push(next);
    }
    let best = candidates
        .into_iter()
        .enumerate()
        .min_by_key(|(i, c)| (c.blocking(), *i))
        .map(|(_, c)| c)
        .expect("at least one candidate");
    Ok(best)
}

fn flags_of(checked: &Checked) -> BTreeSet<ContributionFlag> {
    let mut flags = BTreeSet::new();
    if checked.has(Violation::MultiSentence) {
        flags.insert(ContributionFlag::Truncated);
    }
    if checked.has(Violation::Duplication) {
        flags.insert(ContributionFlag::DuplicationRetryExhausted);
    }
    if checked.has(Violation::SelfMention) {
        flags.insert(ContributionFlag::SelfMention);
    }
    flags
}

/// Runs one writing turn and returns the accepted contribution plus the
/// writer's end vote.
pub fn write_turn<S: RecordSink>(
    turn: &Turn<'_>,
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<(Contribution, bool), RunError> {
    let first = turn.candidate(0, None, provider, journal)?;
    let chosen = repair(turn, first, provider, journal)?;

    let writer = turn.writer().to_string();
    let key = RecordKey::new(
        Stage::Writing,
        turn.round(),
        &writer,
        RecordKind::ContributionAccepted,
    )
    .at_index(turn.index);
    let (sentence, flags, end_vote) = match journal.replayed(&key)? {
        Some(record) => {
            let flags = record
                .flags
                .iter()
                .filter_map(|f| ContributionFlag::parse(f))
                .collect();
            let end_vote = record.flags.iter().any(|f| f == END_VOTE_FLAG);
            (record.text, flags, end_vote)
        }
        None => {
            let checked = chosen.checked.map_err(|_| RunError::EmptyContribution {
                index: turn.index,
                writer: writer.clone(),
            })?;
            let flags = flags_of(&checked);
            let mut record_flags: Vec<String> =
                flags.iter().map(|f| f.as_str().to_string()).collect();
            if chosen.end_vote {
                record_flags.push(END_VOTE_FLAG.into());
            }
            journal.append(Record::new(key, checked.sentence.clone()).with_flags(record_flags))?;
            (checked.sentence, flags, chosen.end_vote)
        }
    };
    Ok((
        Contribution {
            index: turn.index,
            writer,
            sentence,
            flags,
        },
        end_vote,
    ))
}

/// Produces `writing_sentence_budget` contributions in round-robin order.
/// With `end_marker_early_stop`, stops after any full cycle in which every
/// writer voted `END`.
pub fn run_writing<S: RecordSink>(
    room: &RoomConfig,
    outcome: &ConsensusOutcome,
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<StoryDraft, RunError> {
    let mut draft = StoryDraft::new(room);
    let n = room.writers.len();
    let mut votes = Vec::with_capacity(room.writing_sentence_budget);
    for index in 0..room.writing_sentence_budget {
        let turn = Turn {
            room,
            outcome,
            draft: &draft,
            index,
        };
        let (contribution, end_vote) = write_turn(&turn, provider, journal)?;
        draft.contributions.push(contribution);
        votes.push(end_vote);
        if room.end_marker_early_stop
            && votes.len() % n == 0
            && votes[votes.len() - n..].iter().all(|&v| v)
        {
            break;
        }
    }
    Ok(draft)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionRow {
    pub index: usize,
    pub writer: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExportedStory {
    /// One paragraph, sentences joined by single spaces.
    pub text: String,
    pub attribution: Vec<AttributionRow>,
}

impl ExportedStory {
    /// Attribution report, one JSON object per line.
    pub fn attribution_jsonl(&self) -> String {
        self.attribution
            .iter()
            .map(|row| serde_json::to_string(row).expect("row serializes") + "\n")
            .collect()
    }

    pub fn has_dialogue(&self) -> bool {
        has_quoted_span(&self.text)
    }
}

pub fn export_story(draft: &StoryDraft) -> ExportedStory {
    ExportedStory {
        text: draft.sentences().join(" "),
        attribution: draft
            .contributions
            .iter()
            .map(|c| AttributionRow {
                index: c.index,
                writer: c.writer.clone(),
                sentence: c.sentence.clone(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{Script, ScriptedProvider};
    use crate::transcript::MemorySink;

    fn room(budget: usize) -> RoomConfig {
        let mut room = RoomConfig::reference();
        room.writing_sentence_budget = budget;
        room.duplication_ngram = 8;
        room
    }

    fn draft_with(room: &RoomConfig, sentences: &[&str]) -> StoryDraft {
        let mut draft = StoryDraft::new(room);
        for s in sentences {
            let writer = draft.next_writer().to_string();
            draft.contributions.push(Contribution {
                index: draft.len(),
                writer,
                sentence: s.to_string(),
                flags: BTreeSet::new(),
            });
        }
        draft
    }

    fn outcome() -> ConsensusOutcome {
        let mut outcome = ConsensusOutcome {
            decisions: "Genre: quiet drama".into(),
            ..Default::default()
        };
        for w in ["JW", "MM", "KV", "AI"] {
            outcome
                .summaries
                .insert(w.into(), format!("summary of {w}"));
        }
        outcome
    }

    #[test]
    fn verbatim_span_is_duplication() {
        let room = room(8);
        let draft = draft_with(
            &room,
            &[
                "One.",
                "Two.",
                "Three.",
                "The old terminal hummed while the build crawled through its final stage tonight.",
            ],
        );
        let checked = validate_contribution(
            "Again the old terminal hummed while the build crawled through its final stage tonight.",
            &draft,
            &room,
        )
        .unwrap();
        assert!(checked.has(Violation::Duplication));
    }

    #[test]
    fn quoted_dialogue_is_one_sentence() {
        let room = room(8);
        let draft = StoryDraft::new(&room);
        let checked = validate_contribution(
            "\"Let's see where this takes us,\" Alex whispered.",
            &draft,
            &room,
        )
        .unwrap();
        assert_eq!(
            checked.sentence,
            "\"Let's see where this takes us,\" Alex whispered."
        );
        assert!(checked.violations.is_empty());
    }

    #[test]
    fn own_name_is_self_mention() {
        let room = room(8);
        let draft = draft_with(&room, &["Opening line."]);
        assert_eq!(draft.next_writer(), "MM");
        let checked = validate_contribution("MM pondered the code.", &draft, &room).unwrap();
        assert_eq!(checked.violations, vec![Violation::SelfMention]);
        let other = validate_contribution("JW pondered the code.", &draft, &room).unwrap();
        assert!(other.violations.is_empty());
    }

    #[test]
    fn two_sentences_are_truncated() {
        let room = room(8);
        let checked = validate_contribution(
            "First thought.  Second thought.",
            &StoryDraft::new(&room),
            &room,
        )
        .unwrap();
        assert_eq!(checked.sentence, "First thought.");
        assert_eq!(checked.violations, vec![Violation::MultiSentence]);
    }

    #[test]
    fn empty_and_punctuation_only_are_rejected() {
        let room = room(8);
        let draft = StoryDraft::new(&room);
        assert_eq!(
            validate_contribution("   ", &draft, &room),
            Err(EmptyContribution)
        );
        assert_eq!(
            validate_contribution("...", &draft, &room),
            Err(EmptyContribution)
        );
    }

    #[test]
    fn missing_terminator_is_supplied() {
        let room = room(8);
        let checked =
            validate_contribution("The fog rolled\n in", &StoryDraft::new(&room), &room).unwrap();
        assert_eq!(checked.sentence, "The fog rolled in.");
    }

    #[test]
    fn monotony_is_informational() {
        let room = room(8);
        let draft = draft_with(
            &room,
            &[
                "She typed ten quick words into the console today.",
                "b.",
                "c.",
                "d.",
            ],
        );
        let checked = validate_contribution(
            "She read eleven slow words from the console tonight.",
            &draft,
            &room,
        )
        .unwrap();
        assert_eq!(checked.violations, vec![Violation::Monotony]);
        assert!(!Violation::Monotony.is_blocking());
    }

    fn clean_script(room: &RoomConfig) -> Script {
        let mut script = Script::strict();
        for i in 0..room.writing_sentence_budget {
            let writer = &room.writers[i % room.writers.len()].name;
            let round = (i / room.writers.len()) as u32 + 1;
            script.insert(
                &RequestTag::new(Step::Writing, round, writer),
                format!("Sentence number {i} arrives with its own distinct words."),
            );
        }
        script
    }

    fn write(room: &RoomConfig, script: Script) -> (Result<StoryDraft, RunError>, Vec<Record>) {
        let mut journal = Journal::new(MemorySink::default());
        let result = run_writing(
            room,
            &outcome(),
            &ScriptedProvider::new(script),
            &mut journal,
        );
        (result, journal.into_sink().records)
    }

    #[test]
    fn budget_four_clean_path() {
        let room = room(4);
        let (draft, records) = write(&room, clean_script(&room));
        let draft = draft.unwrap();
        assert_eq!(draft.len(), 4);
        assert!(draft.is_flag_free());
        assert_eq!(
            draft
                .contributions
                .iter()
                .map(|c| c.writer.as_str())
                .collect::<Vec<_>>(),
            vec!["JW", "MM", "KV", "AI"]
        );
        assert_eq!(records.len(), 8);
        let story = export_story(&draft);
        assert_eq!(split_sentences(&story.text).len(), 4);
    }

    #[test]
    fn retry_success_has_no_flag() {
        let mut room = room(4);
        room.repair_attempts = 2;
        let script = clean_script(&room)
            .with("writing/1/MM", "MM steps into the story.")
            .with("writing/1/MM/1", "A stranger steps into the story.");
        let (draft, records) = write(&room, script);
        let draft = draft.unwrap();
        assert_eq!(
            draft.contributions[1].sentence,
            "A stranger steps into the story."
        );
        assert!(draft.is_flag_free());
        let raws = records
            .iter()
            .filter(|r| r.kind == RecordKind::ContributionRaw)
            .count();
        assert_eq!(raws, 5);
    }

    #[test]
    fn exhausted_duplication_is_flagged_and_run_continues() {
        let mut room = room(4);
        room.repair_attempts = 2;
        let copy = "Sentence number 0 arrives with its own distinct words.";
        let script = clean_script(&room)
            .with("writing/1/MM", copy)
            .with("writing/1/MM/1", copy)
            .with("writing/1/MM/2", copy);
        let (draft, _) = write(&room, script);
        let draft = draft.unwrap();
        assert_eq!(draft.len(), 4);
        assert_eq!(
            draft.contributions[1].flags,
            BTreeSet::from([ContributionFlag::DuplicationRetryExhausted])
        );
    }

    #[test]
    fn least_violating_candidate_wins() {
        let mut room = room(4);
        room.repair_attempts = 2;
        let copy = "Sentence number 0 arrives with its own distinct words";
        let script = clean_script(&room)
            .with("writing/1/MM", format!("MM says {copy}."))
            .with("writing/1/MM/1", format!("Then {copy}."))
            .with("writing/1/MM/2", format!("MM repeats: {copy}."));
        let (draft, _) = write(&room, script);
        let accepted = &draft.unwrap().contributions[1];
        assert_eq!(accepted.sentence, format!("Then {copy}."));
        assert_eq!(
            accepted.flags,
            BTreeSet::from([ContributionFlag::DuplicationRetryExhausted])
        );
    }

    #[test]
    fn empty_then_clean_retry() {
        let room = room(4);
        let script = clean_script(&room)
            .with("writing/1/KV", "")
            .with("writing/1/KV/1", "Rain began against the window.");
        let (draft, _) = write(&room, script);
        assert_eq!(
            draft.unwrap().contributions[2].sentence,
            "Rain began against the window."
        );
    }

    #[test]
    fn all_empty_attempts_abort() {
        let mut room = room(4);
        room.repair_attempts = 1;
        let script = clean_script(&room)
            .with("writing/1/KV", " ")
            .with("writing/1/KV/1", "—");
        let (result, _) = write(&room, script);
        assert!(matches!(
            result,
            Err(RunError::EmptyContribution { index: 2, .. })
        ));
    }

    #[test]
    fn zero_repair_attempts_flag_immediately() {
        let mut room = room(4);
        room.repair_attempts = 0;
        let script = clean_script(&room).with("writing/1/AI", "The AI hums. It waits.");
        let (draft, _) = write(&room, script);
        let flags = &draft.unwrap().contributions[3].flags;
        assert_eq!(
            flags,
            &BTreeSet::from([ContributionFlag::Truncated, ContributionFlag::SelfMention])
        );
    }

    #[test]
    fn unanimous_end_vote_stops_after_cycle() {
        let mut room = room(12);
        room.end_marker_early_stop = true;
        let mut script = clean_script(&room);
        for w in ["JW", "MM", "KV", "AI"] {
            let key = format!("writing/2/{w}");
            let text = script.entries[&key].clone();
            script.entries.insert(key, format!("{text} END"));
        }
        let (draft, _) = write(&room, script);
        let draft = draft.unwrap();
        assert_eq!(draft.len(), 8);
        assert!(!draft.contributions[7].sentence.contains("END"));
    }

    #[test]
    fn export_edge_cases() {
        let room = room(4);
        let empty = export_story(&StoryDraft::new(&room));
        assert_eq!(empty, ExportedStory::default());
        assert_eq!(empty.attribution_jsonl(), "");
        let draft = draft_with(&room, &["A b.", "“C d,” she said.", "E f.", "G h."]);
        let story = export_story(&draft);
        assert_eq!(story.text, "A b. “C d,” she said. E f. G h.");
        assert!(story.has_dialogue());
        assert_eq!(story.attribution[1].writer, "MM");
        assert_eq!(story.attribution_jsonl().lines().count(), 4);
    }
}
