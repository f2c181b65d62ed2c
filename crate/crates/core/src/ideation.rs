//! Ideation: every writer proposes narrative elements on their own.

use indexmap::IndexMap;

use crate::prompts::{render_phase, PhaseContext};
use crate::provider::{ChatProvider, RequestTag, Step};
use crate::room::{NarrativeProposal, RoomConfig};
use crate::transcript::{ask, Journal, Record, RecordKey, RecordKind, RecordSink, RunError, Stage};

/// Proposals keyed by writer name, in canonical writer order.
pub type Proposals = IndexMap<String, NarrativeProposal>;

/// Canonical labels, in the order [`compose_proposal`] writes them.
pub const CANONICAL_LABELS: [&str; 6] = [
    "Genre",
    "Setting",
    "Characters",
    "Shape",
    "Plot",
    "Conflict",
];

const MAX_LABEL_WORDS: usize = 3;
const MAX_LABEL_CHARS: usize = 40;

fn field_mut<'a>(p: &'a mut NarrativeProposal, label: &str) -> Option<&'a mut String> {
    match label.to_lowercase().as_str() {
        "genre" => Some(&mut p.genre),
        "setting" => Some(&mut p.setting),
        "characters" | "character" => Some(&mut p.characters),
        "shape" => Some(&mut p.shape),
        "plot" => Some(&mut p.plot),
        "conflict" => Some(&mut p.conflict),
        _ => None,
    }
}

/// Recognizes a `Label: rest` line. Tolerates markdown bullets, headings
/// and bold markers around the label.
fn split_label(line: &str) -> Option<(String, String)> {
    let trimmed = line
        .trim_start()
        .trim_start_matches(['#', '-', '•', '>'])
        .trim_start();
    let trimmed = trimmed.strip_prefix("**").unwrap_or(trimmed);
    let colon = trimmed.find(':')?;
    let label = trimmed[..colon].trim().trim_matches(['*', '_']).trim();
    let words: Vec<&str> = label.split_whitespace().collect();
    let well_formed = !words.is_empty()
        && words.len() <= MAX_LABEL_WORDS
        && label.len() <= MAX_LABEL_CHARS
        && label.starts_with(|c: char| c.is_alphabetic())
        && words.iter().all(|w| {
            w.chars()
                .all(|c| c.is_alphabetic() || matches!(c, '-' | '\'' | '&' | '/'))
        });
    if !well_formed {
        return None;
    }
    let rest = trimmed[colon + 1..].trim_start_matches(['*', '_']).trim();
    Some((label.to_string(), rest.to_string()))
}

/// Parses labeled sections out of an ideation response. Never fails: text
/// before the first label is ignored, unknown labels become extras, and
/// missing sections stay empty. The full input is kept in `raw`.
pub fn parse_proposal(author: &str, text: &str) -> NarrativeProposal {
    let mut proposal = NarrativeProposal {
        author: author.to_string(),
        raw: text.to_string(),
        ..Default::default()
    };
    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    for line in text.lines() {
        match split_label(line) {
            Some((label, rest)) => sections.push((label, vec![rest])),
            None => {
                if let Some((_, body)) = sections.last_mut() {
                    body.push(line.to_string());
                }
            }
        }
    }
    for (label, body) in sections {
        let content = body.join("\n").trim().to_string();
        match field_mut(&mut proposal, &label) {
            Some(field) if field.is_empty() => *field = content,
            Some(field) => {
                if !content.is_empty() {
                    field.push('\n');
                    field.push_str(&content);
                }
            }
            None => proposal.extras.push((label, content)),
        }
    }
    proposal
}

/// Writes a proposal in the canonical labeled format.
pub fn compose_proposal(p: &NarrativeProposal) -> String {
    let fields = [
        &p.genre,
        &p.setting,
        &p.characters,
        &p.shape,
        &p.plot,
        &p.conflict,
    ];
    let mut out = String::new();
    for (label, value) in CANONICAL_LABELS.iter().zip(fields) {
        out.push_str(&format!("{label}: {value}\n"));
    }
    for (label, value) in &p.extras {
        out.push_str(&format!("{label}: {value}\n"));
    }
    out
}

/// Runs ideation. Writers without a replayed proposal are asked
/// concurrently; none of them sees another's output. Results are appended
/// in canonical order, stopping at the first failed writer so the
/// transcript stays in that order across resumes.
pub fn run_ideation<S: RecordSink>(
    room: &RoomConfig,
    provider: &dyn ChatProvider,
    journal: &mut Journal<S>,
) -> Result<Proposals, RunError> {
    let key = |name: &str| RecordKey::new(Stage::Ideation, 1, name, RecordKind::Proposal);

    let mut texts: Vec<Option<String>> = Vec::with_capacity(room.writers.len());
    for writer in &room.writers {
        texts.push(journal.replayed(&key(&writer.name))?.map(|r| r.text));
    }

    let pending: Vec<usize> = (0..room.writers.len())
        .filter(|&i| texts[i].is_none())
        .collect();
    let bundles = pending
        .iter()
        .map(|&i| render_phase(room, &room.writers[i], PhaseContext::Ideation))
        .collect::<Result<Vec<_>, _>>()?;
    let fresh: Vec<Result<String, RunError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = pending
            .iter()
            .zip(&bundles)
            .map(|(&i, bundle)| {
                let writer = &room.writers[i];
                scope.spawn(move || {
                    ask(
                        provider,
                        writer,
                        bundle,
                        RequestTag::new(Step::Ideation, 1, &writer.name),
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ideation worker panicked"))
            .collect()
    });

    let mut fresh = pending.into_iter().zip(fresh);
    let mut proposals = Proposals::new();
    for (i, writer) in room.writers.iter().enumerate() {
        let text = match texts[i].take() {
            Some(text) => text,
            None => {
                let (_, result) = fresh.next().expect("one result per pending writer");
                let text = result?;
                journal.append(Record::new(key(&writer.name), text.clone()))?;
                text
            }
        };
        proposals.insert(writer.name.clone(), parse_proposal(&writer.name, &text));
    }
    Ok(proposals)
}
