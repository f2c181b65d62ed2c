//! Prompt rendering.
//!
//! Every writer's system prompt is the base template with three
//! substitutions (agent name, the other writers, the position statement)
//! and the room's topic brief. Phase instructions live in versioned
//! plain-text templates under `assets/prompts/` using `{{name}}`
//! placeholders, and are sent as user messages after the system prompt.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::DeliberationTurn;
use crate::provider::{ChatMessage, Role};
use crate::room::{NarrativeProposal, RoomConfig, WriterProfile};

/// Bumped whenever a template below changes wording.
pub const TEMPLATE_VERSION: u32 = 1;

pub const BASE_TEMPLATE: &str = include_str!("../assets/prompts/base.txt");
pub const IDEATION_TEMPLATE: &str = include_str!("../assets/prompts/ideation.txt");
pub const CONSENSUS_TEMPLATE: &str = include_str!("../assets/prompts/consensus.txt");
pub const DECISIONS_TEMPLATE: &str = include_str!("../assets/prompts/decisions.txt");
pub const SUMMARY_TEMPLATE: &str = include_str!("../assets/prompts/summary.txt");
pub const WRITING_TEMPLATE: &str = include_str!("../assets/prompts/writing.txt");
pub const REPAIR_TEMPLATE: &str = include_str!("../assets/prompts/repair.txt");

const NO_DISCUSSION: &str = "(Nobody has spoken yet.)";
const NO_STORY: &str = "(The story has not started yet.)";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("writer {0:?} is not in the room")]
    NotInRoom(String),
    #[error("template has no value for placeholder {{{{{0}}}}}")]
    MissingVariable(String),
    #[error("template has an unterminated placeholder")]
    Unterminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Ideation,
    Consensus,
    Summary,
    Writing,
}

/// Everything sent to a writer for one call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system_text: String,
    pub context_messages: Vec<ChatMessage>,
    pub phase: Phase,
}

impl PromptBundle {
    /// System prompt followed by the context messages.
    pub fn messages(&self) -> Vec<ChatMessage> {
        std::iter::once(ChatMessage::new(Role::System, self.system_text.clone()))
            .chain(self.context_messages.iter().cloned())
            .collect()
    }

    /// True when `needle` occurs in the system text or any message.
    pub fn contains(&self, needle: &str) -> bool {
        self.system_text.contains(needle)
            || self
                .context_messages
                .iter()
                .any(|m| m.content.contains(needle))
    }
}

/// Substitutes `{{name}}` placeholders. Substituted values are not rescanned.
pub fn render_template(template: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after.find("}}").ok_or(PromptError::Unterminated)?;
        let name = after[..close].trim();
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::MissingVariable(name.to_string()))?;
        out.push_str(value);
        rest = &after[close + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Joins names as a serial list: `A`, `A and B`, `A, B, and C`.
pub fn serial_list<S: AsRef<str>>(names: &[S]) -> String {
    match names {
        [] => String::new(),
        [one] => one.as_ref().to_string(),
        [a, b] => format!("{} and {}", a.as_ref(), b.as_ref()),
        [init @ .., last] => {
            let head: Vec<&str> = init.iter().map(AsRef::as_ref).collect();
            format!("{}, and {}", head.join(", "), last.as_ref())
        }
    }
}

pub fn render_base(writer: &WriterProfile, room: &RoomConfig) -> Result<String, PromptError> {
    if room.writer(&writer.name).is_none() {
        return Err(PromptError::NotInRoom(writer.name.clone()));
    }
    let others: Vec<&str> = room
        .writers
        .iter()
        .filter(|w| w.name != writer.name)
        .map(|w| w.name.as_str())
        .collect();
    let mut text = render_template(
        BASE_TEMPLATE,
        &[
            ("agent_name", &writer.name),
            ("other_agents", &serial_list(&others)),
            ("topic_brief", &room.topic_brief),
            ("position_statement", &writer.position_statement),
        ],
    )?;
    // A persona note is appended after the template, never spliced into it.
    if let Some(note) = writer.persona_note.as_deref().map(str::trim) {
        if !note.is_empty() {
            text.push('\n');
            text.push_str(note);
            text.push('\n');
        }
    }
    Ok(text)
}

/// A previous writing attempt that broke a rule.
#[derive(Debug, Clone, Copy)]
pub struct RepairNote<'a> {
    pub previous: &'a str,
    /// Human-readable descriptions of each broken rule.
    pub problems: &'a [String],
}

/// Phase state a prompt is rendered from.
#[derive(Debug, Clone, Copy)]
pub enum PhaseContext<'a> {
    Ideation,
    Deliberation {
        proposals: &'a [NarrativeProposal],
        transcript: &'a [DeliberationTurn],
        round: u32,
    },
    Decisions {
        proposals: &'a [NarrativeProposal],
        transcript: &'a [DeliberationTurn],
    },
    Summary {
        transcript: &'a [DeliberationTurn],
        decisions: &'a str,
    },
    Writing {
        decisions: &'a str,
        own_summary: &'a str,
        story: &'a [String],
        repair: Option<RepairNote<'a>>,
    },
}

fn shape_lines(room: &RoomConfig) -> String {
    room.shapes()
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}: {}", i + 1, s.title, s.description))
        .collect::<Vec<_>>()
        .join("\n")
}

fn proposal_blocks(proposals: &[NarrativeProposal]) -> String {
    proposals
        .iter()
        .map(|p| format!("--- {} ---\n{}", p.author, p.raw.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn discussion(transcript: &[DeliberationTurn]) -> String {
    if transcript.is_empty() {
        return NO_DISCUSSION.to_string();
    }
    transcript
        .iter()
        .map(|t| format!("[round {}] {}: {}", t.round, t.writer, t.text.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn user(text: String) -> ChatMessage {
    ChatMessage::new(Role::User, text)
}

pub fn render_phase(
    room: &RoomConfig,
    writer: &WriterProfile,
    context: PhaseContext<'_>,
) -> Result<PromptBundle, PromptError> {
    let system_text = render_base(writer, room)?;
    let (phase, context_messages) = match context {
        PhaseContext::Ideation => (
            Phase::Ideation,
            vec![user(render_template(
                IDEATION_TEMPLATE,
                &[("shape_catalog", &shape_lines(room))],
            )?)],
        ),
        PhaseContext::Deliberation {
            proposals,
            transcript,
            round,
        } => (
            Phase::Consensus,
            vec![user(render_template(
                CONSENSUS_TEMPLATE,
                &[
                    ("proposals", &proposal_blocks(proposals)),
                    ("discussion", &discussion(transcript)),
                    ("round", &round.to_string()),
                ],
            )?)],
        ),
        PhaseContext::Decisions {
            proposals,
            transcript,
        } => (
            Phase::Consensus,
            vec![user(render_template(
                DECISIONS_TEMPLATE,
                &[
                    ("proposals", &proposal_blocks(proposals)),
                    ("discussion", &discussion(transcript)),
                ],
            )?)],
        ),
        PhaseContext::Summary {
            transcript,
            decisions,
        } => (
            Phase::Summary,
            vec![user(render_template(
                SUMMARY_TEMPLATE,
                &[
                    ("discussion", &discussion(transcript)),
                    ("decisions", decisions.trim_end()),
                ],
            )?)],
        ),
        PhaseContext::Writing {
            decisions,
            own_summary,
            story,
            repair,
        } => {
            let story_so_far = if story.is_empty() {
                NO_STORY.to_string()
            } else {
                story.join(" ")
            };
            let mut messages = vec![user(render_template(
                WRITING_TEMPLATE,
                &[
                    ("decisions", decisions.trim_end()),
                    ("own_summary", own_summary.trim_end()),
                    ("story_so_far", &story_so_far),
                    ("agent_name", &writer.name),
                ],
            )?)];
            if let Some(note) = repair {
                messages.push(ChatMessage::new(Role::Assistant, note.previous));
                messages.push(user(render_template(
                    REPAIR_TEMPLATE,
                    &[("violations", &note.problems.join("; "))],
                )?));
            }
            (Phase::Writing, messages)
        }
    };
    Ok(PromptBundle {
        system_text,
        context_messages,
        phase,
    })
}
