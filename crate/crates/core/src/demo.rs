//! The bundled offline room: the reference writers answered by a fixed
//! script, so a full run needs no network and always produces the same
//! transcript.

use crate::provider::{Script, ScriptedProvider};
use crate::room::{ProviderBinding, RoomConfig};

pub const DEMO_SENTENCE_BUDGET: usize = 20;

const SCRIPT: &str = include_str!("../assets/demo/script.json");

/// The reference room with scripted bindings and a 20-sentence budget.
pub fn room() -> RoomConfig {
    let mut room = RoomConfig::reference();
    for writer in &mut room.writers {
        let model = writer.binding.model_id.clone();
        writer.binding = ProviderBinding::scripted(model);
    }
    room.writing_sentence_budget = DEMO_SENTENCE_BUDGET;
    room
}

pub fn script() -> Script {
    Script::from_json(SCRIPT).expect("bundled script is valid")
}

pub fn provider() -> ScriptedProvider {
    ScriptedProvider::new(script())
}
