#![allow(dead_code)]

use std::path::Path;
use std::sync::Mutex;

use writers_room::provider::{
    ChatProvider, ChatTurnRequest, Completion, ProviderError, RequestTag, Script, Step,
};
use writers_room::room::RoomConfig;

pub fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Wraps a provider and keeps every request it sees.
pub struct Recording<P> {
    pub inner: P,
    pub requests: Mutex<Vec<ChatTurnRequest>>,
}

impl<P> Recording<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatTurnRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl<P: ChatProvider> ChatProvider for Recording<P> {
    fn complete(&self, request: &ChatTurnRequest) -> Result<Completion, ProviderError> {
        self.requests.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}

/// Replaces every writing entry of `script` with distinct single sentences
/// that share no long runs of words.
pub fn with_clean_writing(mut script: Script, room: &RoomConfig) -> Script {
    script.entries.retain(|k, _| !k.starts_with("writing/"));
    let n = room.writers.len();
    for i in 0..room.writing_sentence_budget {
        script.insert(
            &RequestTag::new(Step::Writing, (i / n) as u32 + 1, &room.writers[i % n].name),
            format!("Sentence {i} takes the thread somewhere new."),
        );
    }
    script
}
