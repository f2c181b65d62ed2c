use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChatProvider, ChatTurnRequest, Completion, ProviderError, RequestTag};

/// Response returned by lenient scripts for tags they do not cover.
pub const LENIENT_FILLER: &str = "The room falls quiet for a moment.";

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read script {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("script is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid script key: {0}")]
    Key(String),
}

/// Canned responses keyed by request tag (`"phase/round/writer"`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default = "strict_default")]
    pub strict: bool,
    pub entries: BTreeMap<String, String>,
}

fn strict_default() -> bool {
    true
}

impl Script {
    pub fn strict() -> Self {
        Self {
            strict: true,
            entries: BTreeMap::new(),
        }
    }

    pub fn lenient() -> Self {
        Self {
            strict: false,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, tag: &RequestTag, text: impl Into<String>) -> &mut Self {
        self.entries.insert(tag.to_string(), text.into());
        self
    }

    pub fn with(mut self, key: &str, text: impl Into<String>) -> Self {
        self.entries.insert(key.to_string(), text.into());
        self
    }

    /// Parses a script and checks that every key is a well-formed tag.
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let script: Script = serde_json::from_str(text)?;
        for key in script.entries.keys() {
            key.parse::<RequestTag>().map_err(ScriptError::Key)?;
        }
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn lookup(&self, tag: &RequestTag) -> Result<&str, ProviderError> {
        match self.entries.get(&tag.to_string()) {
            Some(text) => Ok(text),
            None if self.strict => Err(ProviderError::ScriptMiss {
                tag: tag.to_string(),
            }),
            None => Ok(LENIENT_FILLER),
        }
    }
}

/// Answers every request from a [`Script`]; stateless and deterministic.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    script: Script,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Self {
        Self { script }
    }

    pub fn script(&self) -> &Script {
        &self.script
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &ChatTurnRequest) -> Result<Completion, ProviderError> {
        self.script.lookup(&request.tag).map(|text| Completion {
            text: text.to_string(),
            attempts: 1,
        })
    }
}
